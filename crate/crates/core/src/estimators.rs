//! Point estimators of the selected parameter `θ_[n]` and unbiased
//! estimators of their squared-error risk.
//!
//! Every function works on the family statistic scale: `u` values are
//! records of `S(X)` (gamma type) and `h` values are records of `H(X)` or
//! `-R(X)` (hazard families). The zeroth record is the support endpoint
//! where the statistic vanishes, so `u_prev = 0` / `h_prev = 0` encodes
//! `n = 1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{FamilyKind, FamilySpec};
use crate::quadrature::{integrate, QuadratureConfig};

/// Default half-width multiplier of the reported band, `estimate ± 1.5 √risk`.
pub const DEFAULT_BAND_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorId {
    #[serde(alias = "UmvueGamma")]
    UmvueGamma,
    #[serde(alias = "NaturalGamma")]
    NaturalGamma,
    #[serde(alias = "UmvuePhr")]
    UmvuePhr,
    #[serde(alias = "UmvuePrhr")]
    UmvuePrhr,
    #[serde(alias = "NaturalPhr")]
    NaturalPhr,
    #[serde(alias = "StationaryUmvue")]
    StationaryUmvue,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 6] = [
        EstimatorId::UmvueGamma,
        EstimatorId::NaturalGamma,
        EstimatorId::UmvuePhr,
        EstimatorId::UmvuePrhr,
        EstimatorId::NaturalPhr,
        EstimatorId::StationaryUmvue,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorId::UmvueGamma => "umvue_gamma",
            EstimatorId::NaturalGamma => "natural_gamma",
            EstimatorId::UmvuePhr => "umvue_phr",
            EstimatorId::UmvuePrhr => "umvue_prhr",
            EstimatorId::NaturalPhr => "natural_phr",
            EstimatorId::StationaryUmvue => "stationary_umvue",
        }
    }

    pub fn applies_to(self, kind: FamilyKind) -> bool {
        match self {
            EstimatorId::UmvueGamma | EstimatorId::NaturalGamma => kind == FamilyKind::GammaType,
            EstimatorId::UmvuePhr => kind == FamilyKind::ProportionalHazard,
            EstimatorId::UmvuePrhr => kind == FamilyKind::ProportionalReversedHazard,
            EstimatorId::NaturalPhr | EstimatorId::StationaryUmvue => kind.is_hazard(),
        }
    }

    /// The UMVU estimator for a family kind.
    pub fn umvue_for(kind: FamilyKind) -> EstimatorId {
        match kind {
            FamilyKind::GammaType => EstimatorId::UmvueGamma,
            FamilyKind::ProportionalHazard => EstimatorId::UmvuePhr,
            FamilyKind::ProportionalReversedHazard => EstimatorId::UmvuePrhr,
        }
    }

    pub fn natural_for(kind: FamilyKind) -> EstimatorId {
        match kind {
            FamilyKind::GammaType => EstimatorId::NaturalGamma,
            _ => EstimatorId::NaturalPhr,
        }
    }

    /// Estimate from consecutive statistic-scale records `(prev, curr)` at
    /// record index `n` (`prev = 0` when `n = 1`).
    pub fn estimate(self, prev: f64, curr: f64, n: usize, shape: f64) -> Result<f64> {
        match self {
            EstimatorId::UmvueGamma => umvue_gamma(prev, curr, shape),
            EstimatorId::NaturalGamma => natural_gamma(curr, shape),
            EstimatorId::UmvuePhr | EstimatorId::UmvuePrhr => umvue_phr(prev, curr),
            EstimatorId::NaturalPhr => natural_phr(curr),
            EstimatorId::StationaryUmvue => stationary_estimate(curr, n),
        }
    }

    /// Unbiased estimate of the estimator's risk from the same records.
    pub fn risk_estimate(self, prev: f64, curr: f64, n: usize, shape: f64) -> Result<f64> {
        match self {
            EstimatorId::UmvueGamma => risk_umvue_gamma(prev, curr, shape),
            EstimatorId::NaturalGamma => risk_natural_gamma(prev, curr, shape),
            EstimatorId::UmvuePhr | EstimatorId::UmvuePrhr => risk_umvue_phr(prev, curr),
            EstimatorId::NaturalPhr => risk_natural_phr(prev, curr),
            EstimatorId::StationaryUmvue => stationary_risk_estimate(curr, n),
        }
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown estimator {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimator_id: EstimatorId,
    pub n: usize,
    pub estimate: f64,
    /// Unbiased risk estimate as computed; may be negative for the gamma UMVUE.
    pub risk_estimate: f64,
    pub band: (f64, f64),
    pub band_factor: f64,
}

impl EstimateReport {
    /// Band `estimate ± c √max(risk, 0)` with the lower end clamped at zero.
    pub fn new(
        estimator_id: EstimatorId,
        n: usize,
        estimate: f64,
        risk_estimate: f64,
        band_factor: f64,
    ) -> Self {
        let half = band_factor * risk_estimate.max(0.0).sqrt();
        let lower = (estimate - half).max(0.0).min(estimate);
        EstimateReport {
            estimator_id,
            n,
            estimate,
            risk_estimate,
            band: (lower, estimate + half),
            band_factor,
        }
    }

    pub const CSV_HEADER: [&'static str; 6] = [
        "n",
        "estimator_id",
        "estimate",
        "risk_estimate",
        "band_lo",
        "band_hi",
    ];

    /// CSV fields with numbers rendered to `digits` significant digits.
    pub fn csv_fields(&self, digits: usize) -> [String; 6] {
        use crate::stats::fmt_sig;
        [
            self.n.to_string(),
            self.estimator_id.to_string(),
            fmt_sig(self.estimate, digits),
            fmt_sig(self.risk_estimate, digits),
            fmt_sig(self.band.0, digits),
            fmt_sig(self.band.1, digits),
        ]
    }
}

fn check_shape(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("shape p must be positive, got {p}")))
    }
}

fn check_gamma_pair(u_prev: f64, u_curr: f64, p: f64) -> Result<()> {
    check_shape(p)?;
    if !(u_prev.is_finite() && u_curr.is_finite()) || u_prev < 0.0 {
        return Err(Error::Domain(format!(
            "records must be finite with u_prev >= 0, got ({u_prev}, {u_curr})"
        )));
    }
    if u_prev >= u_curr {
        return Err(Error::Ordering {
            prev: u_prev,
            curr: u_curr,
        });
    }
    Ok(())
}

fn check_hazard_pair(h_prev: f64, h_curr: f64) -> Result<()> {
    if !(h_prev.is_finite() && h_curr.is_finite()) || h_prev < 0.0 {
        return Err(Error::Domain(format!(
            "hazard values must be finite and nonnegative, got ({h_prev}, {h_curr})"
        )));
    }
    if h_prev > h_curr {
        return Err(Error::Ordering {
            prev: h_prev,
            curr: h_curr,
        });
    }
    Ok(())
}

/// `(u_n / p)(1 - (u_{n-1}/u_n)^p)`, the UMVU estimator for gamma-type
/// families applied to `S`-records.
pub fn umvue_gamma(u_prev: f64, u_curr: f64, p: f64) -> Result<f64> {
    check_gamma_pair(u_prev, u_curr, p)?;
    Ok(umvue_gamma_unchecked(u_prev, u_curr, p))
}

#[inline]
fn umvue_gamma_unchecked(u_prev: f64, u_curr: f64, p: f64) -> f64 {
    // -expm1(p ln r) keeps precision when the ratio r is close to one
    let ratio = u_prev / u_curr;
    if ratio == 0.0 {
        return u_curr / p;
    }
    u_curr / p * -(p * ratio.ln()).exp_m1()
}

pub fn natural_gamma(u_curr: f64, p: f64) -> Result<f64> {
    check_shape(p)?;
    if !(u_curr.is_finite() && u_curr > 0.0) {
        return Err(Error::Domain(format!(
            "record must be positive, got {u_curr}"
        )));
    }
    Ok(u_curr / p)
}

/// `H(U_n) - H(U_{n-1})` (and the reversed-hazard analogue on `-R`).
pub fn umvue_phr(h_prev: f64, h_curr: f64) -> Result<f64> {
    check_hazard_pair(h_prev, h_curr)?;
    Ok(h_curr - h_prev)
}

pub fn natural_phr(h_curr: f64) -> Result<f64> {
    check_hazard_pair(0.0, h_curr)?;
    Ok(h_curr)
}

/// Unbiased estimator of `E θ_[n]²` under the gamma-type model:
/// `[u_n^{p+1} - u_{n-1}^{p+1} - (p+1) u_{n-1}^p (u_n - u_{n-1})] / [p (p+1) u_n^{p-1}]`.
pub fn second_moment_gamma(u_prev: f64, u_curr: f64, p: f64) -> Result<f64> {
    check_gamma_pair(u_prev, u_curr, p)?;
    Ok(second_moment_gamma_unchecked(u_prev, u_curr, p))
}

fn second_moment_gamma_unchecked(u_prev: f64, u_curr: f64, p: f64) -> f64 {
    // divide through by u_n^{p+1} and work with r = u_{n-1}/u_n in (0, 1):
    // u_n² [1 - r^{p+1} - (p+1) r^p (1 - r)] / (p (p+1))
    let r = u_prev / u_curr;
    let rp = r.powf(p);
    let bracket = 1.0 - rp * r - (p + 1.0) * rp * (1.0 - r);
    u_curr * u_curr * bracket / (p * (p + 1.0))
}

/// Closed-form unbiased risk estimator `W₂` of [`umvue_gamma`].
pub fn risk_umvue_gamma(u_prev: f64, u_curr: f64, p: f64) -> Result<f64> {
    check_gamma_pair(u_prev, u_curr, p)?;
    let v = umvue_gamma_unchecked(u_prev, u_curr, p);
    Ok(v * v - second_moment_gamma_unchecked(u_prev, u_curr, p))
}

/// Closed-form unbiased risk estimator of [`natural_gamma`]
/// (`V(t) = t/p`, so the cross term integrates to a polynomial).
pub fn risk_natural_gamma(u_prev: f64, u_curr: f64, p: f64) -> Result<f64> {
    check_gamma_pair(u_prev, u_curr, p)?;
    let v = u_curr / p;
    let r = u_prev / u_curr;
    // ∫ t^{p-1} (t/p) dt / u_n^{p-1} = u_n² (1 - r^{p+1}) / (p (p+1))
    let cross = u_curr * u_curr * (1.0 - r.powf(p + 1.0)) / (p * (p + 1.0));
    Ok(v * v - 2.0 * cross + second_moment_gamma_unchecked(u_prev, u_curr, p))
}

/// Unbiased risk estimator for an arbitrary gamma-type estimator
/// `V(U_n^S, U_{n-1}^S)`, with the cross term integrated numerically.
/// `v` is called as `v(t, u_prev)`.
pub fn risk_general_gamma<V>(
    v: V,
    u_prev: f64,
    u_curr: f64,
    p: f64,
    cfg: &QuadratureConfig,
) -> Result<f64>
where
    V: Fn(f64, f64) -> f64,
{
    check_gamma_pair(u_prev, u_curr, p)?;
    let vn = v(u_curr, u_prev);
    let integral = integrate(|t| t.powf(p - 1.0) * v(t, u_prev), u_prev, u_curr, cfg)?;
    Ok(vn * vn - 2.0 * integral.value / u_curr.powf(p - 1.0)
        + second_moment_gamma_unchecked(u_prev, u_curr, p))
}

/// Closed-form unbiased risk estimator `W₃ = (h_n - h_{n-1})² / 2` of
/// [`umvue_phr`]. Also an unbiased estimator of `E θ_[n]²`.
pub fn risk_umvue_phr(h_prev: f64, h_curr: f64) -> Result<f64> {
    check_hazard_pair(h_prev, h_curr)?;
    let d = h_curr - h_prev;
    Ok(0.5 * d * d)
}

/// Closed-form unbiased risk estimator of [`natural_phr`]:
/// `h_{n-1}² + (h_n - h_{n-1})² / 2`.
pub fn risk_natural_phr(h_prev: f64, h_curr: f64) -> Result<f64> {
    check_hazard_pair(h_prev, h_curr)?;
    let d = h_curr - h_prev;
    Ok(h_prev * h_prev + 0.5 * d * d)
}

/// How [`risk_general_phr`] evaluates `∫ h(t) V(t, U_{n-1}) dt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HazardIntegration {
    /// Substitute `y = H(t)` and integrate `V(H⁻¹(y), U_{n-1})` over
    /// `[H(U_{n-1}), H(U_n)]`.
    #[default]
    Substitution,
    /// Integrate `h(t) V(t, U_{n-1})` over `[U_{n-1}, U_n]` directly.
    Direct,
}

/// Unbiased risk estimator for an arbitrary hazard-family estimator
/// `V(U_n, U_{n-1})` given on the raw observation scale, `v(t, u_prev)`.
///
/// `u_prev` and `u_curr` are raw consecutive selecting records (upper
/// records for proportional hazards, lower records for reversed hazards);
/// pass [`FamilySpec::record_origin`] as `u_prev` for `n = 1`.
pub fn risk_general_phr<V>(
    v: V,
    u_prev: f64,
    u_curr: f64,
    family: &FamilySpec,
    route: HazardIntegration,
    cfg: &QuadratureConfig,
) -> Result<f64>
where
    V: Fn(f64, f64) -> f64,
{
    if !family.kind().is_hazard() {
        return Err(Error::Usage(
            "risk_general_phr needs a proportional (reversed) hazard family".into(),
        ));
    }
    let h_prev = family.statistic(u_prev)?;
    let h_curr = family.statistic(u_curr)?;
    check_hazard_pair(h_prev, h_curr)?;
    let vn = v(u_curr, u_prev);
    let cross = match route {
        HazardIntegration::Substitution => integrate(
            |y| v(family.statistic_inverse_unchecked(y), u_prev),
            h_prev,
            h_curr,
            cfg,
        )?,
        // for reversed hazards the statistic decreases and u_curr < u_prev;
        // the signed derivative restores the orientation
        HazardIntegration::Direct => integrate(
            |t| family.statistic_derivative(t) * v(t, u_prev),
            u_prev,
            u_curr,
            cfg,
        )?,
    };
    let d = h_curr - h_prev;
    Ok(vn * vn + 0.5 * d * d - 2.0 * cross.value)
}

fn stationary_estimate(h_curr: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Usage("record index starts at 1".into()));
    }
    natural_phr(h_curr).map(|h| h / n as f64)
}

fn stationary_risk_estimate(h_curr: f64, n: usize) -> Result<f64> {
    let est = stationary_estimate(h_curr, n)?;
    Ok(est * est / (n as f64 + 1.0))
}

/// UMVU estimate of a constant `θ` from the first `n` hazard-scale records:
/// `H(U_n)/n` with unbiased risk estimate `H(U_n)² / (n² (n+1))`.
pub fn stationary_umvue(
    hazard_records: &[f64],
    n: usize,
    band_factor: f64,
) -> Result<EstimateReport> {
    if n == 0 || n > hazard_records.len() {
        return Err(Error::Usage(format!(
            "record index {n} out of range 1..={}",
            hazard_records.len()
        )));
    }
    let h = hazard_records[n - 1];
    Ok(EstimateReport::new(
        EstimatorId::StationaryUmvue,
        n,
        stationary_estimate(h, n)?,
        stationary_risk_estimate(h, n)?,
        band_factor,
    ))
}

/// Reports for `n = 1..=len` from statistic-scale records.
pub fn estimate_path(
    id: EstimatorId,
    statistic_records: &[f64],
    family: &FamilySpec,
    band_factor: f64,
) -> Result<Vec<EstimateReport>> {
    if !id.applies_to(family.kind()) {
        return Err(Error::Usage(format!(
            "estimator {id} does not apply to a {} family",
            family.kind()
        )));
    }
    let shape = family.shape();
    let mut prev = 0.0;
    statistic_records
        .iter()
        .enumerate()
        .map(|(i, &curr)| {
            let n = i + 1;
            let report = EstimateReport::new(
                id,
                n,
                id.estimate(prev, curr, n, shape)?,
                id.risk_estimate(prev, curr, n, shape)?,
                band_factor,
            );
            prev = curr;
            Ok(report)
        })
        .collect()
}

/// Estimates under a non-stationary parameter sequence (UMVUE per family).
pub fn nonstationary_path(
    statistic_records: &[f64],
    family: &FamilySpec,
    band_factor: f64,
) -> Result<Vec<EstimateReport>> {
    estimate_path(
        EstimatorId::umvue_for(family.kind()),
        statistic_records,
        family,
        band_factor,
    )
}

/// Estimates under a constant parameter (hazard families only).
pub fn stationary_path(
    statistic_records: &[f64],
    family: &FamilySpec,
    band_factor: f64,
) -> Result<Vec<EstimateReport>> {
    estimate_path(
        EstimatorId::StationaryUmvue,
        statistic_records,
        family,
        band_factor,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::Member;
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn umvue_gamma_examples() {
        assert!(close(umvue_gamma(2.0, 5.0, 1.0).unwrap(), 3.0, 1e-15));
        // Rayleigh records 2 and 4 map to S-records 2 and 8
        let ray = FamilySpec::gamma_type(Member::Rayleigh).unwrap();
        let (a, b) = (ray.s_transform(2.0).unwrap(), ray.s_transform(4.0).unwrap());
        assert!(close(
            umvue_gamma(a, b, 1.0).unwrap(),
            (16.0 - 4.0) / 2.0,
            1e-15
        ));
        assert!(close(umvue_gamma(1.0, 2.0, 2.0).unwrap(), 0.75, 1e-15));
        assert_eq!(
            umvue_gamma(0.0, 5.0, 2.0).unwrap(),
            natural_gamma(5.0, 2.0).unwrap()
        );
    }

    #[test]
    fn gamma_errors() {
        assert!(matches!(
            umvue_gamma(5.0, 5.0, 1.0),
            Err(Error::Ordering { .. })
        ));
        assert!(matches!(
            umvue_gamma(6.0, 5.0, 1.0),
            Err(Error::Ordering { .. })
        ));
        assert!(matches!(umvue_gamma(1.0, 5.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(natural_gamma(5.0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(natural_gamma(0.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn natural_gamma_examples() {
        assert_eq!(natural_gamma(5.0, 1.0).unwrap(), 5.0);
        assert_eq!(natural_gamma(8.0, 2.0).unwrap(), 4.0);
    }

    #[test]
    fn umvue_phr_examples() {
        assert_eq!(umvue_phr(2.0, 5.0).unwrap(), 3.0);
        assert_eq!(umvue_phr(4.0, 4.0).unwrap(), 0.0);
        assert!(matches!(umvue_phr(5.0, 4.0), Err(Error::Ordering { .. })));
        let fam = crate::datasets::rainfall_family();
        let h8 = fam.cumulative_hazard(34.04).unwrap();
        let h7 = fam.cumulative_hazard(31.28).unwrap();
        let direct = 30.04f64.powf(1.9) - 27.28f64.powf(1.9);
        let v = umvue_phr(h7, h8).unwrap();
        assert!(v > 0.0 && close(v, direct, 1e-14));
        assert!(close(v, 107.447_457_295_948, 1e-12));
    }

    #[test]
    fn w2_examples() {
        assert!(close(risk_umvue_gamma(0.0, 1.0, 1.0).unwrap(), 0.5, 1e-15));
        // both terms vanish quadratically as the spacing closes
        for eps in [1e-2, 1e-3, 1e-4] {
            let w = risk_umvue_gamma(1.0 - eps, 1.0, 1.0).unwrap();
            assert!(w.abs() <= 2.0 * eps * eps, "eps={eps}: {w}");
        }
    }

    #[test]
    fn w3_examples() {
        assert_eq!(risk_umvue_phr(1.0, 4.0).unwrap(), 4.5);
        assert_eq!(risk_umvue_phr(2.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn general_gamma_reproduces_closed_forms() {
        let cfg = QuadratureConfig::default();
        let mut rng = stream_rng(8, 0);
        for _ in 0..100 {
            let p = rng.random_range(0.2..4.0);
            let u_curr = rng.random_range(0.1..50.0);
            let u_prev = u_curr * rng.random_range(0.0..0.99);
            let w2 = risk_umvue_gamma(u_prev, u_curr, p).unwrap();
            let general = risk_general_gamma(
                |t, a| umvue_gamma_unchecked(a, t, p),
                u_prev,
                u_curr,
                p,
                &cfg,
            )
            .unwrap();
            assert!(
                close(general, w2, 1e-9),
                "p={p} ({u_prev},{u_curr}): {general} vs {w2}"
            );

            // natural estimator: polynomial antiderivative ∫ t^p/p dt
            let antiderivative = (u_curr.powf(p + 1.0) - u_prev.powf(p + 1.0)) / (p * (p + 1.0));
            let hand = (u_curr / p).powi(2) - 2.0 * antiderivative / u_curr.powf(p - 1.0)
                + second_moment_gamma(u_prev, u_curr, p).unwrap();
            let general = risk_general_gamma(|t, _| t / p, u_prev, u_curr, p, &cfg).unwrap();
            assert!(close(general, hand, 1e-9));
            assert!(close(
                risk_natural_gamma(u_prev, u_curr, p).unwrap(),
                hand,
                1e-9
            ));
        }
    }

    #[test]
    fn zero_estimator_leaves_second_moment_term() {
        let cfg = QuadratureConfig::default();
        let w = risk_general_gamma(|_, _| 0.0, 1.5, 4.0, 2.0, &cfg).unwrap();
        assert_eq!(w, second_moment_gamma(1.5, 4.0, 2.0).unwrap());
    }

    fn hazard_families() -> Vec<FamilySpec> {
        vec![
            FamilySpec::proportional_hazard(Member::Exponential).unwrap(),
            FamilySpec::proportional_hazard(Member::Rayleigh).unwrap(),
            FamilySpec::proportional_hazard(Member::Pareto { lower: 1.5 }).unwrap(),
            FamilySpec::proportional_hazard(Member::Burr { alpha: 2.0 }).unwrap(),
            crate::datasets::rainfall_family(),
            FamilySpec::reversed_hazard(Member::Beta).unwrap(),
        ]
    }

    #[test]
    fn general_phr_reproduces_closed_forms() {
        let cfg = QuadratureConfig::default();
        let mut rng = stream_rng(9, 0);
        for fam in hazard_families() {
            for _ in 0..25 {
                let h_curr = rng.random_range(0.05..6.0);
                let h_prev = h_curr * rng.random_range(0.0..0.95);
                let u_prev = fam.statistic_inverse(h_prev).unwrap();
                let u_curr = fam.statistic_inverse(h_curr).unwrap();
                let v3 = |t: f64, a: f64| fam.statistic(t).unwrap() - fam.statistic(a).unwrap();
                let nat = |t: f64, _: f64| fam.statistic(t).unwrap();
                for route in [HazardIntegration::Substitution, HazardIntegration::Direct] {
                    let w = risk_general_phr(v3, u_prev, u_curr, &fam, route, &cfg).unwrap();
                    let w3 = risk_umvue_phr(h_prev, h_curr).unwrap();
                    assert!(
                        (w - w3).abs() <= 1e-9 * w3.max(1e-300) || (w - w3).abs() < 1e-13,
                        "{fam:?} {route:?}: {w} vs {w3}"
                    );
                    let w = risk_general_phr(nat, u_prev, u_curr, &fam, route, &cfg).unwrap();
                    // ∫ y dy over [h_prev, h_curr] by hand
                    let hand = h_curr * h_curr + 0.5 * (h_curr - h_prev).powi(2)
                        - (h_curr * h_curr - h_prev * h_prev);
                    assert!(close(w, hand, 1e-9), "{fam:?} {route:?}: {w} vs {hand}");
                    assert!(close(
                        risk_natural_phr(h_prev, h_curr).unwrap(),
                        hand,
                        1e-12
                    ));
                }
                let zero = risk_general_phr(
                    |_, _| 0.0,
                    u_prev,
                    u_curr,
                    &fam,
                    HazardIntegration::Substitution,
                    &cfg,
                )
                .unwrap();
                assert!(close(zero, 0.5 * (h_curr - h_prev).powi(2), 1e-12));
            }
        }
    }

    #[test]
    fn general_phr_rejects_gamma_family() {
        let fam = FamilySpec::gamma(2.0).unwrap();
        let cfg = QuadratureConfig::default();
        assert!(matches!(
            risk_general_phr(|t, _| t, 1.0, 2.0, &fam, HazardIntegration::Direct, &cfg),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn stationary_examples() {
        let r = stationary_umvue(&[3.0, 8.0], 2, DEFAULT_BAND_FACTOR).unwrap();
        assert_eq!(r.estimate, 4.0);
        assert!(close(r.risk_estimate, 64.0 / 12.0, 1e-15));
        let r = stationary_umvue(&[3.0], 1, DEFAULT_BAND_FACTOR).unwrap();
        assert_eq!(r.estimate, 3.0);
        assert_eq!(r.risk_estimate, 4.5);
        assert!(matches!(
            stationary_umvue(&[3.0], 2, 1.5),
            Err(Error::Usage(_))
        ));

        let fam = crate::datasets::rainfall_family();
        let h: Vec<f64> = crate::datasets::RAINFALL_RECORDS
            .iter()
            .map(|&x| fam.cumulative_hazard(x).unwrap())
            .collect();
        let r = stationary_umvue(&h, 8, 1.5).unwrap();
        assert!(close(r.estimate, 30.04f64.powf(1.9) / 8.0, 1e-14));
    }

    #[test]
    fn band_clamps_and_uses_nonnegative_risk() {
        let r = EstimateReport::new(EstimatorId::UmvuePhr, 2, 1.0, 4.0, 1.5);
        assert_eq!(r.band, (0.0, 4.0));
        let r = EstimateReport::new(EstimatorId::UmvueGamma, 2, 1.0, -0.3, 1.5);
        assert_eq!(r.band, (1.0, 1.0));
        assert_eq!(r.risk_estimate, -0.3);
    }

    #[test]
    fn w2_closed_form_value() {
        // r = 0.1, p = 2: V² = (0.99/2)², second-moment term (1 - 0.001 - 3·0.01·0.9)/6
        let w = risk_umvue_gamma(0.1, 1.0, 2.0).unwrap();
        let expect = (0.99f64 / 2.0).powi(2) - (1.0 - 0.001 - 3.0 * 0.01 * 0.9) / 6.0;
        assert!(close(w, expect, 1e-12));
    }

    #[test]
    fn estimator_ids_parse() {
        for id in EstimatorId::ALL {
            assert_eq!(id.as_str().parse::<EstimatorId>().unwrap(), id);
        }
        assert_eq!(
            "UmvuePhr".parse::<EstimatorId>().unwrap(),
            EstimatorId::UmvuePhr
        );
        assert!("bogus".parse::<EstimatorId>().is_err());
    }

    #[test]
    fn path_rejects_mismatched_family() {
        let fam = FamilySpec::gamma(1.0).unwrap();
        assert!(matches!(
            stationary_path(&[1.0], &fam, 1.5),
            Err(Error::Usage(_))
        ));
    }

    proptest! {
        #[test]
        fn scale_equivariance(h in prop::collection::vec(0.01f64..10.0, 2..10), c in 0.01f64..100.0) {
            let fam = FamilySpec::proportional_hazard(Member::Exponential).unwrap();
            let mut sorted = h.clone();
            sorted.sort_by(|a, b| a.total_cmp(b));
            let scaled: Vec<f64> = sorted.iter().map(|x| x * c).collect();
            let a = nonstationary_path(&sorted, &fam, 1.5).unwrap();
            let b = nonstationary_path(&scaled, &fam, 1.5).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(close(y.estimate, c * x.estimate, 1e-12) || (y.estimate - c * x.estimate).abs() < 1e-12);
                prop_assert!(close(y.risk_estimate, c * c * x.risk_estimate, 1e-12) || (y.risk_estimate - c * c * x.risk_estimate).abs() < 1e-12);
            }
            let a = estimate_path(EstimatorId::NaturalPhr, &sorted, &fam, 1.5).unwrap();
            let b = estimate_path(EstimatorId::NaturalPhr, &scaled, &fam, 1.5).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(close(y.estimate, c * x.estimate, 1e-12));
            }
        }

        #[test]
        fn bands_contain_estimates(est in 0.0f64..1e3, risk in -10.0f64..1e4, c in 0.0f64..5.0) {
            let r = EstimateReport::new(EstimatorId::UmvuePhr, 1, est, risk, c);
            prop_assert!(r.band.0 <= r.estimate && r.estimate <= r.band.1);
            prop_assert!(r.band.0 >= 0.0);
        }

        #[test]
        fn w2_nonnegative(p in 0.05f64..20.0, r in 0.0f64..1.0, u in 1e-3f64..1e3) {
            prop_assume!(r * u < u);
            let w = risk_umvue_gamma(r * u, u, p).unwrap();
            prop_assert!(w >= -1e-12 * u * u, "{}", w);
        }

        #[test]
        fn w3_nonnegative(a in 0.0f64..1e3, d in 0.0f64..1e3) {
            prop_assert!(risk_umvue_phr(a, a + d).unwrap() >= 0.0);
        }
    }
}
