//! Distribution families whose parameter is estimated after selection.
//!
//! Two models are supported:
//!
//! * **Gamma type**: densities `c(x) θ^{-p} exp(-S(x)/θ)` where the statistic
//!   `S(X)` is `Gamma(p, θ)` distributed (scale parameterization).
//! * **Proportional hazard** (`F̄_θ = Ḡ^{1/θ}`) and **proportional reversed
//!   hazard** (`F_θ = G^{1/θ}`) families for a known base cdf `G`.
//!
//! Every family exposes a [`statistic`](FamilySpec::statistic) mapping an
//! observation onto the scale where it is `Gamma(shape, θ)`: `S(x)` for the
//! gamma type, `H(x) = -log Ḡ(x)` for proportional hazards and `-R(x) =
//! -log G(x)` for reversed hazards (shape 1, i.e. exponential, for both hazard
//! models). Estimators operate on that scale.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::records::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    #[serde(alias = "GammaType")]
    GammaType,
    #[serde(alias = "ProportionalHazard", alias = "phr")]
    ProportionalHazard,
    #[serde(alias = "ProportionalReversedHazard", alias = "prhr")]
    ProportionalReversedHazard,
}

impl FamilyKind {
    pub fn is_hazard(self) -> bool {
        !matches!(self, FamilyKind::GammaType)
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::GammaType => "gamma_type",
            FamilyKind::ProportionalHazard => "proportional_hazard",
            FamilyKind::ProportionalReversedHazard => "proportional_reversed_hazard",
        })
    }
}

/// User-supplied transform for a custom hazard-family member.
#[derive(Debug, Clone, PartialEq)]
pub enum CustomTransform {
    /// Proportional hazard: `H(x) = (x - shift)^power / scale` on `(shift, ∞)`.
    /// Reversed hazard: `R(x) = -(shift - x)^power / scale` on `(-∞, shift)`.
    Power { shift: f64, power: f64, scale: f64 },
    /// Piecewise-linear cumulative hazard through `(x, H)` knots, starting at
    /// `H = 0` and continued past the last knot with the final slope.
    Table { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Member {
    Exponential,
    Gamma,
    NormalZeroMean,
    InverseGaussian,
    Weibull { beta: f64 },
    Rayleigh,
    Beta,
    Pareto { lower: f64 },
    Burr { alpha: f64 },
    Custom(CustomTransform),
}

impl Member {
    pub fn name(&self) -> &'static str {
        match self {
            Member::Exponential => "exponential",
            Member::Gamma => "gamma",
            Member::NormalZeroMean => "normal_zero_mean",
            Member::InverseGaussian => "inverse_gaussian",
            Member::Weibull { .. } => "weibull",
            Member::Rayleigh => "rayleigh",
            Member::Beta => "beta",
            Member::Pareto { .. } => "pareto",
            Member::Burr { .. } => "burr",
            Member::Custom(_) => "custom",
        }
    }
}

/// How `S` orders observations, which decides whether `S`-records can be
/// read off the raw upper or lower records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    NonMonotone,
}

/// A fully specified family. Immutable once built; share freely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyDoc", into = "FamilyDoc")]
pub struct FamilySpec {
    kind: FamilyKind,
    member: Member,
    shape: f64,
}

impl FamilySpec {
    /// Build and validate a family. `p` is only consulted for the gamma
    /// member; the other gamma-type members have a fixed shape.
    pub fn new(kind: FamilyKind, member: Member, p: Option<f64>) -> Result<Self> {
        let shape = match (kind, &member) {
            (FamilyKind::GammaType, Member::Gamma) => {
                p.ok_or_else(|| Error::Config("the gamma member needs a shape parameter p".into()))?
            }
            (FamilyKind::GammaType, Member::Exponential)
            | (FamilyKind::GammaType, Member::Weibull { .. })
            | (FamilyKind::GammaType, Member::Rayleigh) => 1.0,
            (FamilyKind::GammaType, Member::NormalZeroMean)
            | (FamilyKind::GammaType, Member::InverseGaussian) => 0.5,
            (FamilyKind::GammaType, m) => {
                return Err(Error::Config(format!(
                    "member {} is not a gamma-type family member",
                    m.name()
                )))
            }
            (FamilyKind::ProportionalHazard, Member::Exponential)
            | (FamilyKind::ProportionalHazard, Member::Rayleigh)
            | (FamilyKind::ProportionalHazard, Member::Pareto { .. })
            | (FamilyKind::ProportionalHazard, Member::Burr { .. })
            | (FamilyKind::ProportionalHazard, Member::Custom(_))
            | (FamilyKind::ProportionalReversedHazard, Member::Beta) => 1.0,
            (
                FamilyKind::ProportionalReversedHazard,
                Member::Custom(CustomTransform::Power { .. }),
            ) => 1.0,
            (kind, m) => {
                return Err(Error::Config(format!(
                    "member {} is not available for kind {kind}",
                    m.name()
                )))
            }
        };
        if let (Some(given), false) = (p, matches!(member, Member::Gamma)) {
            if kind == FamilyKind::GammaType && given != shape {
                return Err(Error::Config(format!(
                    "member {} has fixed shape p = {shape}, got {given}",
                    member.name()
                )));
            }
        }
        if !(shape.is_finite() && shape > 0.0) {
            return Err(Error::Config(format!(
                "shape p must be positive, got {shape}"
            )));
        }
        validate_member(&member)?;
        Ok(FamilySpec {
            kind,
            member,
            shape,
        })
    }

    pub fn gamma(p: f64) -> Result<Self> {
        Self::new(FamilyKind::GammaType, Member::Gamma, Some(p))
    }

    pub fn gamma_type(member: Member) -> Result<Self> {
        Self::new(FamilyKind::GammaType, member, None)
    }

    pub fn proportional_hazard(member: Member) -> Result<Self> {
        Self::new(FamilyKind::ProportionalHazard, member, None)
    }

    pub fn reversed_hazard(member: Member) -> Result<Self> {
        Self::new(FamilyKind::ProportionalReversedHazard, member, None)
    }

    /// Proportional hazard family with `H(x) = (x - shift)^power / scale`.
    pub fn power_hazard(shift: f64, power: f64, scale: f64) -> Result<Self> {
        Self::proportional_hazard(Member::Custom(CustomTransform::Power {
            shift,
            power,
            scale,
        }))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("family serializes")
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn member(&self) -> &Member {
        &self.member
    }

    /// Gamma shape of the statistic. `1` for the hazard families.
    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// Support `(lower, upper)`; endpoints may be infinite.
    pub fn support(&self) -> (f64, f64) {
        use Member::*;
        match &self.member {
            NormalZeroMean => (f64::NEG_INFINITY, f64::INFINITY),
            Beta => (0.0, 1.0),
            Pareto { lower } => (*lower, f64::INFINITY),
            Custom(CustomTransform::Power { shift, .. }) => match self.kind {
                FamilyKind::ProportionalReversedHazard => (f64::NEG_INFINITY, *shift),
                _ => (*shift, f64::INFINITY),
            },
            Custom(CustomTransform::Table { knots }) => (knots[0].0, f64::INFINITY),
            _ => (0.0, f64::INFINITY),
        }
    }

    fn check_support(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.support();
        if x.is_nan() || x < lo || x > hi {
            return Err(Error::Domain(format!(
                "x = {x} lies outside the support ({lo}, {hi})"
            )));
        }
        Ok(())
    }

    fn require_kind(&self, hazard: bool, op: &str) -> Result<()> {
        if self.kind.is_hazard() != hazard {
            return Err(Error::Usage(format!(
                "{op} is not defined for a {} family",
                self.kind
            )));
        }
        Ok(())
    }

    /// `S(x)` of a gamma-type member.
    pub fn s_transform(&self, x: f64) -> Result<f64> {
        self.require_kind(false, "s_transform")?;
        self.check_support(x)?;
        Ok(self.statistic_unchecked(x))
    }

    /// `H(x)` for proportional hazard families, `R(x) = log G(x)` for
    /// reversed hazard families.
    pub fn cumulative_hazard(&self, x: f64) -> Result<f64> {
        self.require_kind(true, "cumulative_hazard")?;
        self.check_support(x)?;
        Ok(match self.kind {
            FamilyKind::ProportionalReversedHazard => -self.statistic_unchecked(x),
            _ => self.statistic_unchecked(x),
        })
    }

    /// Derivative of [`cumulative_hazard`](Self::cumulative_hazard): the
    /// hazard rate `h = g/Ḡ` or the reversed hazard rate `r = g/G`.
    pub fn hazard_rate(&self, x: f64) -> Result<f64> {
        self.require_kind(true, "hazard_rate")?;
        self.check_support(x)?;
        Ok(match self.kind {
            FamilyKind::ProportionalReversedHazard => -self.statistic_derivative(x),
            _ => self.statistic_derivative(x),
        })
    }

    /// The observation on its gamma scale: `S(x)`, `H(x)` or `-R(x)`.
    pub fn statistic(&self, x: f64) -> Result<f64> {
        self.check_support(x)?;
        Ok(self.statistic_unchecked(x))
    }

    pub(crate) fn statistic_unchecked(&self, x: f64) -> f64 {
        use Member::*;
        match (&self.member, self.kind) {
            (Exponential, _) | (Gamma, _) => x,
            (NormalZeroMean, _) => 0.5 * x * x,
            (InverseGaussian, _) => 1.0 / (2.0 * x),
            (Weibull { beta }, _) => x.powf(*beta),
            (Rayleigh, _) => 0.5 * x * x,
            (Beta, _) => -x.ln(),
            (Pareto { lower }, _) => (x / lower).ln(),
            (Burr { alpha }, _) => x.powf(*alpha).ln_1p(),
            (
                Custom(CustomTransform::Power {
                    shift,
                    power,
                    scale,
                }),
                kind,
            ) => {
                let gap = match kind {
                    FamilyKind::ProportionalReversedHazard => shift - x,
                    _ => x - shift,
                };
                gap.max(0.0).powf(*power) / scale
            }
            (Custom(CustomTransform::Table { knots }), _) => table_eval(knots, x),
        }
    }

    /// Derivative of the statistic with respect to the observation. Negative
    /// for reversed hazard families, whose statistic decreases in `x`.
    pub fn statistic_derivative(&self, x: f64) -> f64 {
        use Member::*;
        match (&self.member, self.kind) {
            (Exponential, _) | (Gamma, _) => 1.0,
            (NormalZeroMean, _) | (Rayleigh, _) => x,
            (InverseGaussian, _) => -0.5 / (x * x),
            (Weibull { beta }, _) => beta * x.powf(beta - 1.0),
            (Beta, _) => -1.0 / x,
            (Pareto { .. }, _) => 1.0 / x,
            (Burr { alpha }, _) => {
                let xa = x.powf(*alpha);
                alpha * xa / (x * (1.0 + xa))
            }
            (
                Custom(CustomTransform::Power {
                    shift,
                    power,
                    scale,
                }),
                kind,
            ) => match kind {
                FamilyKind::ProportionalReversedHazard => {
                    -power * (shift - x).max(0.0).powf(power - 1.0) / scale
                }
                _ => power * (x - shift).max(0.0).powf(power - 1.0) / scale,
            },
            (Custom(CustomTransform::Table { knots }), _) => table_slope(knots, x),
        }
    }

    /// Inverse of the statistic for the hazard families, `y ≥ 0`.
    pub fn statistic_inverse(&self, y: f64) -> Result<f64> {
        self.require_kind(true, "statistic_inverse")?;
        if !(y >= 0.0) {
            return Err(Error::Domain(format!(
                "hazard-scale value must be nonnegative, got {y}"
            )));
        }
        Ok(self.statistic_inverse_unchecked(y))
    }

    pub(crate) fn statistic_inverse_unchecked(&self, y: f64) -> f64 {
        use Member::*;
        match (&self.member, self.kind) {
            (Exponential, _) => y,
            (Rayleigh, _) => (2.0 * y).sqrt(),
            (Beta, _) => (-y).exp(),
            (Pareto { lower }, _) => lower * y.exp(),
            (Burr { alpha }, _) => y.exp_m1().powf(1.0 / alpha),
            (
                Custom(CustomTransform::Power {
                    shift,
                    power,
                    scale,
                }),
                kind,
            ) => {
                let gap = (scale * y).powf(1.0 / power);
                match kind {
                    FamilyKind::ProportionalReversedHazard => shift - gap,
                    _ => shift + gap,
                }
            }
            (Custom(CustomTransform::Table { knots }), _) => table_inverse(knots, y),
            // gamma-type members never reach here (guarded by require_kind)
            _ => f64::NAN,
        }
    }

    /// Point of the support where the statistic vanishes. Serves as the
    /// zeroth record `U_0` so that the first-record estimators are defined.
    pub fn record_origin(&self) -> f64 {
        let (lo, hi) = self.support();
        match (self.kind, &self.member) {
            (FamilyKind::ProportionalReversedHazard, _) => hi,
            (FamilyKind::GammaType, Member::NormalZeroMean) => 0.0,
            (FamilyKind::GammaType, Member::InverseGaussian) => f64::INFINITY,
            _ => lo,
        }
    }

    pub fn s_monotonicity(&self) -> Monotonicity {
        use Member::*;
        match (&self.member, self.kind) {
            (NormalZeroMean, _) => Monotonicity::NonMonotone,
            (InverseGaussian, _) | (Beta, _) => Monotonicity::Decreasing,
            (_, FamilyKind::ProportionalReversedHazard) => Monotonicity::Decreasing,
            _ => Monotonicity::Increasing,
        }
    }

    /// Direction of raw-scale records that select the population, when the
    /// statistic is monotone. Upper records of the statistic are always the
    /// selecting records.
    pub fn selection_direction(&self) -> Option<Direction> {
        match self.s_monotonicity() {
            Monotonicity::Increasing => Some(Direction::Upper),
            Monotonicity::Decreasing => Some(Direction::Lower),
            Monotonicity::NonMonotone => None,
        }
    }

    pub fn sampler(&self) -> Result<FamilySampler> {
        let gamma = match self.member {
            Member::Gamma => Some(
                Gamma::new(self.shape, 1.0)
                    .map_err(|e| Error::Domain(format!("gamma sampler: {e}")))?,
            ),
            _ => None,
        };
        Ok(FamilySampler {
            family: self.clone(),
            gamma,
        })
    }

    /// One draw from `F_θ`.
    pub fn sample<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> Result<f64> {
        check_theta(theta)?;
        Ok(self.sampler()?.sample_pair(theta, rng).0)
    }

    pub fn cdf(&self, theta: f64, x: f64) -> Result<f64> {
        check_theta(theta)?;
        let (lo, hi) = self.support();
        if x.is_nan() {
            return Err(Error::Domain("x is NaN".into()));
        }
        if x <= lo {
            return Ok(0.0);
        }
        if x >= hi {
            return Ok(1.0);
        }
        let z = self.statistic_unchecked(x);
        Ok(match (self.kind, &self.member) {
            (FamilyKind::ProportionalHazard, _) => -(-z / theta).exp_m1(),
            (FamilyKind::ProportionalReversedHazard, _) => (-z / theta).exp(),
            (_, Member::Gamma) => gamma_lr(self.shape, z / theta),
            (_, Member::NormalZeroMean) => 0.5 * erfc(-x / (2.0 * theta).sqrt()),
            (_, Member::InverseGaussian) => erfc((z / theta).sqrt()),
            // remaining gamma-type members have S(X) ~ Exp(θ) with S increasing
            _ => -(-z / theta).exp_m1(),
        })
    }

    pub fn pdf(&self, theta: f64, x: f64) -> Result<f64> {
        check_theta(theta)?;
        let (lo, hi) = self.support();
        if x.is_nan() {
            return Err(Error::Domain("x is NaN".into()));
        }
        if x <= lo || x >= hi {
            return Ok(0.0);
        }
        let z = self.statistic_unchecked(x);
        let dz = self.statistic_derivative(x).abs();
        // density of the statistic times the Jacobian |S'(x)|; the normal
        // member folds two branches onto the same S, hence the factor 1/2.
        let p = self.shape;
        let log_stat_density = (p - 1.0) * z.ln() - z / theta - p * theta.ln() - ln_gamma(p);
        let fold = if matches!(self.member, Member::NormalZeroMean) {
            0.5
        } else {
            1.0
        };
        if z == 0.0 {
            return Ok(if p == 1.0 { fold * dz / theta } else { 0.0 });
        }
        Ok(fold * dz * log_stat_density.exp())
    }
}

#[inline]
pub(crate) fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "theta must be positive, got {theta}"
        )))
    }
}

fn validate_member(member: &Member) -> Result<()> {
    let positive = |name: &str, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("{name} must be positive, got {v}")))
        }
    };
    match member {
        Member::Weibull { beta } => positive("weibull beta", *beta),
        Member::Pareto { lower } => positive("pareto lower bound", *lower),
        Member::Burr { alpha } => positive("burr alpha", *alpha),
        Member::Custom(CustomTransform::Power {
            shift,
            power,
            scale,
        }) => {
            if !shift.is_finite() {
                return Err(Error::Config(format!("shift must be finite, got {shift}")));
            }
            positive("power", *power)?;
            positive("scale", *scale)
        }
        Member::Custom(CustomTransform::Table { knots }) => validate_table(knots),
        _ => Ok(()),
    }
}

fn validate_table(knots: &[(f64, f64)]) -> Result<()> {
    if knots.len() < 2 {
        return Err(Error::Config(
            "hazard table needs at least two knots".into(),
        ));
    }
    if knots.iter().any(|(x, h)| !x.is_finite() || !h.is_finite()) {
        return Err(Error::Config("hazard table entries must be finite".into()));
    }
    if knots[0].1 != 0.0 {
        return Err(Error::Config(
            "hazard table must start at H = 0 (the support's lower endpoint)".into(),
        ));
    }
    for w in knots.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::Config(
                "hazard table x values must increase strictly".into(),
            ));
        }
        if w[1].1 < w[0].1 {
            return Err(Error::Config(
                "hazard table H values must be nondecreasing".into(),
            ));
        }
    }
    let (a, b) = (knots[knots.len() - 2], knots[knots.len() - 1]);
    if b.1 <= a.1 {
        return Err(Error::Config(
            "hazard table must end with a positive slope so that H grows without bound".into(),
        ));
    }
    Ok(())
}

fn table_segment(knots: &[(f64, f64)], x: f64) -> usize {
    // index i with knots[i].0 <= x < knots[i+1].0, clamped to the last segment
    let i = knots.partition_point(|k| k.0 <= x);
    i.saturating_sub(1).min(knots.len() - 2)
}

fn table_eval(knots: &[(f64, f64)], x: f64) -> f64 {
    if x <= knots[0].0 {
        return 0.0;
    }
    let i = table_segment(knots, x);
    let (x0, h0) = knots[i];
    let (x1, h1) = knots[i + 1];
    h0 + (h1 - h0) * (x - x0) / (x1 - x0)
}

fn table_slope(knots: &[(f64, f64)], x: f64) -> f64 {
    let i = table_segment(knots, x);
    let (x0, h0) = knots[i];
    let (x1, h1) = knots[i + 1];
    (h1 - h0) / (x1 - x0)
}

fn table_inverse(knots: &[(f64, f64)], y: f64) -> f64 {
    if y <= 0.0 {
        return knots[0].0;
    }
    // first knot whose H reaches y; flat stretches resolve to their left end
    let j = knots.partition_point(|k| k.1 < y).clamp(1, knots.len() - 1);
    let (x0, h0) = knots[j - 1];
    let (x1, h1) = knots[j];
    x0 + (y - h0) * (x1 - x0) / (h1 - h0)
}

/// Pre-built sampler for one family; cheap to clone, one per worker.
#[derive(Debug, Clone)]
pub struct FamilySampler {
    family: FamilySpec,
    gamma: Option<Gamma<f64>>,
}

impl FamilySampler {
    pub fn family(&self) -> &FamilySpec {
        &self.family
    }

    /// Draw `x ~ F_θ` together with its statistic. `theta` must be positive.
    #[inline]
    pub fn sample_pair<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> (f64, f64) {
        use Member::*;
        let fam = &self.family;
        if fam.kind.is_hazard() {
            let z = theta * exp1(rng);
            return (fam.statistic_inverse_unchecked(z), z);
        }
        match &fam.member {
            Gamma => {
                let g = self.gamma.as_ref().expect("gamma sampler built");
                let x = theta * g.sample(rng);
                (x, x)
            }
            Exponential => {
                let x = theta * exp1(rng);
                (x, x)
            }
            NormalZeroMean => {
                let n: f64 = StandardNormal.sample(rng);
                let x = theta.sqrt() * n;
                (x, 0.5 * x * x)
            }
            InverseGaussian => {
                let n: f64 = StandardNormal.sample(rng);
                let s = 0.5 * theta * n * n;
                (1.0 / (2.0 * s), s)
            }
            Weibull { beta } => {
                let s = theta * exp1(rng);
                (s.powf(1.0 / beta), s)
            }
            Rayleigh => {
                let s = theta * exp1(rng);
                ((2.0 * s).sqrt(), s)
            }
            _ => unreachable!("validated gamma-type member"),
        }
    }
}

// ---------------------------------------------------------------------------
// JSON document form
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyDoc {
    kind: FamilyKind,
    member: MemberName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(default, skip_serializing_if = "Params::is_empty")]
    params: Params,
    #[serde(default, rename = "custom_H", skip_serializing_if = "Option::is_none")]
    custom_h: Option<CustomDoc>,
    #[serde(default, rename = "custom_R", skip_serializing_if = "Option::is_none")]
    custom_r: Option<CustomDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum MemberName {
    #[serde(alias = "Exponential")]
    Exponential,
    #[serde(alias = "Gamma")]
    Gamma,
    #[serde(alias = "NormalZeroMean", alias = "normal")]
    NormalZeroMean,
    #[serde(alias = "InverseGaussian")]
    InverseGaussian,
    #[serde(alias = "WeibullKnownBeta", alias = "weibull_known_beta")]
    Weibull,
    #[serde(alias = "Rayleigh")]
    Rayleigh,
    #[serde(alias = "Beta")]
    Beta,
    #[serde(alias = "Pareto")]
    Pareto,
    #[serde(alias = "Burr")]
    Burr,
    #[serde(alias = "Custom")]
    Custom,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
}

impl Params {
    fn is_empty(&self) -> bool {
        self.beta.is_none() && self.lower.is_none() && self.alpha.is_none()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum CustomDoc {
    Power {
        shift: f64,
        power: f64,
        #[serde(default = "unit_scale")]
        scale: f64,
    },
    Table {
        table: Vec<(f64, f64)>,
    },
}

fn unit_scale() -> f64 {
    1.0
}

impl TryFrom<FamilyDoc> for FamilySpec {
    type Error = Error;

    fn try_from(doc: FamilyDoc) -> Result<Self> {
        let need = |v: Option<f64>, what: &str| {
            v.ok_or_else(|| Error::Config(format!("missing params.{what}")))
        };
        let member = match doc.member {
            MemberName::Exponential => Member::Exponential,
            MemberName::Gamma => Member::Gamma,
            MemberName::NormalZeroMean => Member::NormalZeroMean,
            MemberName::InverseGaussian => Member::InverseGaussian,
            MemberName::Weibull => Member::Weibull {
                beta: need(doc.params.beta, "beta")?,
            },
            MemberName::Rayleigh => Member::Rayleigh,
            MemberName::Beta => Member::Beta,
            MemberName::Pareto => Member::Pareto {
                lower: need(doc.params.lower.or(doc.params.beta), "lower")?,
            },
            MemberName::Burr => Member::Burr {
                alpha: need(doc.params.alpha, "alpha")?,
            },
            MemberName::Custom => {
                let custom = match (doc.kind, doc.custom_h, doc.custom_r) {
                    (FamilyKind::ProportionalHazard, Some(c), None) => c,
                    (FamilyKind::ProportionalReversedHazard, None, Some(c)) => c,
                    _ => {
                        return Err(Error::Config(
                            "custom members need custom_H (proportional_hazard) or custom_R \
                             (proportional_reversed_hazard), matching the kind"
                                .into(),
                        ))
                    }
                };
                let transform = match custom {
                    CustomDoc::Power {
                        shift,
                        power,
                        scale,
                    } => CustomTransform::Power {
                        shift,
                        power,
                        scale,
                    },
                    CustomDoc::Table { table } => {
                        if doc.kind == FamilyKind::ProportionalReversedHazard {
                            return Err(Error::Config(
                                "tabulated transforms are only supported for custom_H".into(),
                            ));
                        }
                        CustomTransform::Table { knots: table }
                    }
                };
                Member::Custom(transform)
            }
        };
        FamilySpec::new(doc.kind, member, doc.p)
    }
}

impl From<FamilySpec> for FamilyDoc {
    fn from(spec: FamilySpec) -> Self {
        let mut params = Params::default();
        let mut custom = None;
        let member = match &spec.member {
            Member::Exponential => MemberName::Exponential,
            Member::Gamma => MemberName::Gamma,
            Member::NormalZeroMean => MemberName::NormalZeroMean,
            Member::InverseGaussian => MemberName::InverseGaussian,
            Member::Weibull { beta } => {
                params.beta = Some(*beta);
                MemberName::Weibull
            }
            Member::Rayleigh => MemberName::Rayleigh,
            Member::Beta => MemberName::Beta,
            Member::Pareto { lower } => {
                params.lower = Some(*lower);
                MemberName::Pareto
            }
            Member::Burr { alpha } => {
                params.alpha = Some(*alpha);
                MemberName::Burr
            }
            Member::Custom(t) => {
                custom = Some(match t {
                    CustomTransform::Power {
                        shift,
                        power,
                        scale,
                    } => CustomDoc::Power {
                        shift: *shift,
                        power: *power,
                        scale: *scale,
                    },
                    CustomTransform::Table { knots } => CustomDoc::Table {
                        table: knots.clone(),
                    },
                });
                MemberName::Custom
            }
        };
        let (custom_h, custom_r) = match spec.kind {
            FamilyKind::ProportionalReversedHazard => (None, custom),
            _ => (custom, None),
        };
        FamilyDoc {
            kind: spec.kind,
            member,
            p: (spec.kind == FamilyKind::GammaType).then_some(spec.shape),
            params,
            custom_h,
            custom_r,
        }
    }
}
