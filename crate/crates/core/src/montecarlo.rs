//! Parameter-sequence schemes and the replicate simulation engine.
//!
//! A replicate draws `X_i ~ F_{θ_i}` until the `n_target`-th upper record
//! of the family statistic and keeps, for every record, the statistic
//! value, the raw observation, the record time and the parameter of the
//! population that produced it.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatorId;
use crate::families::{FamilySampler, FamilySpec};
use crate::records::{Direction, RecordSet};
use crate::rng::{stream_rng, StreamRng};
use crate::stats::{fmt_sig, Moments};

pub const DEFAULT_MAX_OBSERVATIONS: u64 = 10_000_000;
/// Largest tolerated fraction of truncated replicates.
pub const MAX_TRUNCATION_FRACTION: f64 = 0.01;

// replicates are simulated in blocks of this size and folded in order
const CHUNK: u64 = 1 << 14;

fn ten() -> f64 {
    10.0
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum ParameterSequenceModel {
    /// `θ_i = Z_i θ_{i-1} + ε_i`, `Z_i ~ U(0,1)`, `ε_i ~ Exp(1)`, `θ_0 = 0`.
    #[serde(alias = "ArPositiveError")]
    ArPositiveError,
    /// `θ_i = C_i (1 + D_i / divisor)^{i-1}` with `C_i, D_i ~ U(0,1)`.
    /// `per_replicate` draws `C, D` once per replicate instead of per index.
    #[serde(alias = "StochasticGeometric")]
    StochasticGeometric {
        #[serde(default = "ten")]
        divisor: f64,
        #[serde(default)]
        per_replicate: bool,
    },
    /// `θ_i = mean + sd ε_i`, `ε_i ~ N(0,1)`; non-positive draws are redrawn.
    #[serde(alias = "WhiteNoise")]
    WhiteNoise {
        #[serde(default = "ten")]
        mean: f64,
        #[serde(default = "one")]
        sd: f64,
    },
    #[serde(alias = "Constant")]
    Constant { theta: f64 },
    /// Explicit `θ_1, θ_2, ...`; the last value repeats past the end.
    #[serde(alias = "UserSupplied")]
    UserSupplied { thetas: Vec<f64> },
}

impl ParameterSequenceModel {
    pub fn ar_positive_error() -> Self {
        ParameterSequenceModel::ArPositiveError
    }

    pub fn stochastic_geometric(per_replicate: bool) -> Self {
        ParameterSequenceModel::StochasticGeometric {
            divisor: 10.0,
            per_replicate,
        }
    }

    pub fn white_noise() -> Self {
        ParameterSequenceModel::WhiteNoise {
            mean: 10.0,
            sd: 1.0,
        }
    }

    pub fn constant(theta: f64) -> Self {
        ParameterSequenceModel::Constant { theta }
    }

    pub fn scheme_name(&self) -> &'static str {
        match self {
            ParameterSequenceModel::ArPositiveError => "ar_positive_error",
            ParameterSequenceModel::StochasticGeometric { .. } => "stochastic_geometric",
            ParameterSequenceModel::WhiteNoise { .. } => "white_noise",
            ParameterSequenceModel::Constant { .. } => "constant",
            ParameterSequenceModel::UserSupplied { .. } => "user_supplied",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        match self {
            ParameterSequenceModel::ArPositiveError => Ok(()),
            ParameterSequenceModel::StochasticGeometric { divisor, .. } => {
                positive("divisor", *divisor)
            }
            ParameterSequenceModel::WhiteNoise { mean, sd } => {
                positive("white noise mean", *mean)?;
                if sd.is_finite() && *sd >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "white noise sd must be nonnegative, got {sd}"
                    )))
                }
            }
            ParameterSequenceModel::Constant { theta } => positive("theta", *theta),
            ParameterSequenceModel::UserSupplied { thetas } => {
                if thetas.is_empty() {
                    return Err(Error::Config("user-supplied theta list is empty".into()));
                }
                thetas.iter().try_for_each(|&t| positive("theta", t))
            }
        }
    }

    pub fn stream(&self) -> ThetaStream<'_> {
        ThetaStream {
            model: self,
            index: 0,
            prev: 0.0,
            fixed: None,
        }
    }

    /// The constant value when the sequence does not vary.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            ParameterSequenceModel::Constant { theta } => Some(*theta),
            ParameterSequenceModel::WhiteNoise { mean, sd } if *sd == 0.0 => Some(*mean),
            ParameterSequenceModel::UserSupplied { thetas } if thetas.len() == 1 => Some(thetas[0]),
            _ => None,
        }
    }
}

/// Generator of `θ_1, θ_2, ...` for one replicate; carries the scheme's
/// recurrence state.
#[derive(Debug, Clone)]
pub struct ThetaStream<'a> {
    model: &'a ParameterSequenceModel,
    index: u64,
    prev: f64,
    fixed: Option<(f64, f64)>,
}

impl ThetaStream<'_> {
    /// 1-based index of the value last returned.
    pub fn index(&self) -> u64 {
        self.index
    }

    /// Next parameter value. May be `+∞` when a geometric sequence overflows.
    pub fn next_theta<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        self.index += 1;
        let i = self.index;
        let theta = match self.model {
            ParameterSequenceModel::ArPositiveError => {
                let z: f64 = rng.random();
                let eps: f64 = Exp1.sample(rng);
                z * self.prev + eps
            }
            ParameterSequenceModel::StochasticGeometric {
                divisor,
                per_replicate,
            } => {
                let (c, d) = match (self.fixed, per_replicate) {
                    (Some(cd), true) => cd,
                    _ => {
                        let cd = (positive_uniform(rng), rng.random::<f64>());
                        self.fixed = Some(cd);
                        cd
                    }
                };
                let growth = 1.0 + d / divisor;
                c * (growth.ln() * (i - 1) as f64).exp()
            }
            ParameterSequenceModel::WhiteNoise { mean, sd } => loop {
                let e: f64 = StandardNormal.sample(rng);
                let t = mean + sd * e;
                if t > 0.0 {
                    break t;
                }
            },
            ParameterSequenceModel::Constant { theta } => *theta,
            ParameterSequenceModel::UserSupplied { thetas } => {
                thetas[((i - 1) as usize).min(thetas.len() - 1)]
            }
        };
        self.prev = theta;
        theta
    }
}

fn positive_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub family: FamilySpec,
    pub theta_model: ParameterSequenceModel,
    pub n_target: usize,
    /// Smallest record index reported in the summary.
    #[serde(default = "default_n_min")]
    pub n_min: usize,
    pub replications: u64,
    pub master_seed: u64,
    #[serde(default = "default_max_observations")]
    pub max_observations: u64,
    /// Estimators to tabulate; empty means the UMVUE and the natural
    /// estimator of the family.
    #[serde(default)]
    pub estimators: Vec<EstimatorId>,
}

fn default_n_min() -> usize {
    1
}

fn default_max_observations() -> u64 {
    DEFAULT_MAX_OBSERVATIONS
}

impl SimulationConfig {
    pub fn new(
        family: FamilySpec,
        theta_model: ParameterSequenceModel,
        n_target: usize,
        replications: u64,
        master_seed: u64,
    ) -> Self {
        SimulationConfig {
            family,
            theta_model,
            n_target,
            n_min: 1,
            replications,
            master_seed,
            max_observations: DEFAULT_MAX_OBSERVATIONS,
            estimators: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimulationConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.n_target < 1 {
            return Err(Error::Config("n_target must be at least 1".into()));
        }
        if self.n_min < 1 || self.n_min > self.n_target {
            return Err(Error::Config(format!(
                "n_min must lie in 1..={}, got {}",
                self.n_target, self.n_min
            )));
        }
        if self.max_observations < self.n_target as u64 {
            return Err(Error::Config("max_observations is below n_target".into()));
        }
        if self.replications >= 1 << 40 {
            return Err(Error::Config("replications must be below 2^40".into()));
        }
        self.theta_model.validate()?;
        for id in &self.estimators {
            if !id.applies_to(self.family.kind()) {
                return Err(Error::Config(format!(
                    "estimator {id} does not apply to a {} family",
                    self.family.kind()
                )));
            }
        }
        Ok(())
    }

    /// The configured estimators, or the family's UMVUE and natural estimator.
    pub fn resolved_estimators(&self) -> Vec<EstimatorId> {
        if self.estimators.is_empty() {
            let kind = self.family.kind();
            vec![EstimatorId::umvue_for(kind), EstimatorId::natural_for(kind)]
        } else {
            self.estimators.clone()
        }
    }
}

/// Outcome of one simulated stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    /// Upper records of the family statistic, with record times.
    pub records: RecordSet,
    /// Raw observations at the record times.
    pub raw_records: Vec<f64>,
    /// `θ_{T_k}` for each record `k`.
    pub thetas_at_records: Vec<f64>,
    /// The stream hit `max_observations` (or a non-finite `θ`) before
    /// `n_target` records.
    pub truncated: bool,
}

impl Replicate {
    /// The selected parameter `θ_[n_target]`, when not truncated.
    pub fn theta_selected(&self) -> Option<f64> {
        (!self.truncated).then(|| *self.thetas_at_records.last().expect("n_target >= 1"))
    }
}

/// Simulate one stream until the `n_target`-th record.
pub fn run_replicate<R: Rng + ?Sized>(
    config: &SimulationConfig,
    sampler: &FamilySampler,
    rng: &mut R,
) -> Replicate {
    let n_target = config.n_target;
    let mut values = Vec::with_capacity(n_target);
    let mut times = Vec::with_capacity(n_target);
    let mut raw = Vec::with_capacity(n_target);
    let mut thetas = Vec::with_capacity(n_target);
    let mut thetas_gen = config.theta_model.stream();
    let mut current = f64::NEG_INFINITY;
    let mut seen = 0u64;
    let mut truncated = true;
    while seen < config.max_observations {
        let theta = thetas_gen.next_theta(rng);
        seen += 1;
        if !theta.is_finite() {
            break;
        }
        let (x, z) = sampler.sample_pair(theta, rng);
        if z > current {
            current = z;
            values.push(z);
            times.push(seen);
            raw.push(x);
            thetas.push(theta);
            if values.len() == n_target {
                truncated = false;
                break;
            }
        }
    }
    Replicate {
        records: RecordSet {
            values,
            times,
            direction: Direction::Upper,
            source_length: seen,
        },
        raw_records: raw,
        thetas_at_records: thetas,
        truncated,
    }
}

/// Run every replicate of `config` in parallel and feed `map`'s results to
/// `fold` in replicate order. Replicate `r` draws from stream `r` of the
/// master seed, so the fold sees the same sequence for any thread count.
pub fn for_each_replicate<T, M, F>(config: &SimulationConfig, map: M, mut fold: F) -> Result<()>
where
    T: Send,
    M: Fn(u64, &Replicate) -> T + Sync,
    F: FnMut(T),
{
    config.validate()?;
    let sampler = config.family.sampler()?;
    let mut start = 0;
    while start < config.replications {
        let end = (start + CHUNK).min(config.replications);
        let block: Vec<T> = (start..end)
            .into_par_iter()
            .map(|r| {
                let mut rng: StreamRng = stream_rng(config.master_seed, r);
                let rep = run_replicate(config, &sampler, &mut rng);
                map(r, &rep)
            })
            .collect();
        block.into_iter().for_each(&mut fold);
        start = end;
    }
    Ok(())
}

/// Collect all replicates (handy for small runs and tests).
pub fn simulate_replicates(config: &SimulationConfig) -> Result<Vec<Replicate>> {
    let mut out = Vec::with_capacity(config.replications as usize);
    for_each_replicate(config, |_, rep| rep.clone(), |rep| out.push(rep))?;
    Ok(out)
}

/// Simulated bias and risk of one estimator at one record index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub estimator: EstimatorId,
    pub n: usize,
    pub bias: f64,
    pub risk: f64,
    pub se_bias: Option<f64>,
    pub se_risk: Option<f64>,
    /// Mean of the estimator's unbiased risk estimate.
    pub risk_estimate_mean: f64,
    pub se_risk_estimate: Option<f64>,
    /// Replicates contributing (truncated ones excluded).
    pub replications: u64,
}

/// Moments of the selected parameter `θ_[n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaRow {
    pub n: usize,
    pub mean: f64,
    pub se_mean: Option<f64>,
    pub mean_square: f64,
    pub se_mean_square: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub scheme: String,
    pub p: f64,
    pub family: FamilySpec,
    pub theta_model: ParameterSequenceModel,
    pub master_seed: u64,
    pub replications: u64,
    pub truncated: u64,
    pub rows: Vec<SummaryRow>,
    pub theta: Vec<ThetaRow>,
}

impl SimulationSummary {
    pub fn truncation_fraction(&self) -> f64 {
        self.truncated as f64 / self.replications as f64
    }

    /// Fails when more than 1% of replicates were truncated.
    pub fn validate(&self) -> Result<()> {
        if self.truncation_fraction() > MAX_TRUNCATION_FRACTION {
            return Err(Error::Numeric(format!(
                "{} of {} replicates hit the observation cap",
                self.truncated, self.replications
            )));
        }
        Ok(())
    }

    pub fn row(&self, estimator: EstimatorId, n: usize) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.n == n)
    }

    pub fn theta_row(&self, n: usize) -> Option<&ThetaRow> {
        self.theta.iter().find(|r| r.n == n)
    }

    pub const CSV_HEADER: &'static str = "scheme,p,n,estimator,bias,risk,se_bias,se_risk,\
risk_estimate_mean,se_risk_estimate,replications,truncated";

    /// Table layout, one line per (n, estimator); undefined SEs print `NA`.
    pub fn to_csv(&self, digits: usize) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| fmt_sig(x, digits));
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                self.scheme,
                fmt_sig(self.p, digits),
                r.n,
                r.estimator,
                fmt_sig(r.bias, digits),
                fmt_sig(r.risk, digits),
                opt(r.se_bias),
                opt(r.se_risk),
                fmt_sig(r.risk_estimate_mean, digits),
                opt(r.se_risk_estimate),
                r.replications,
                self.truncated,
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

#[derive(Default, Clone)]
struct Cell {
    error: Moments,
    squared: Moments,
    risk_estimate: Moments,
}

/// Simulated bias `mean(V - θ_[n])` and risk `mean((V - θ_[n])²)` for each
/// estimator and `n_min ≤ n ≤ n_target`, together with the mean of each
/// estimator's unbiased risk estimate.
pub fn bias_risk_table(
    config: &SimulationConfig,
    estimators: &[EstimatorId],
) -> Result<SimulationSummary> {
    config.validate()?;
    let estimators: Vec<EstimatorId> = if estimators.is_empty() {
        config.resolved_estimators()
    } else {
        estimators.to_vec()
    };
    for id in &estimators {
        if !id.applies_to(config.family.kind()) {
            return Err(Error::Usage(format!(
                "estimator {id} does not apply to a {} family",
                config.family.kind()
            )));
        }
    }
    let shape = config.family.shape();
    let ns: Vec<usize> = (config.n_min..=config.n_target).collect();
    let mut cells = vec![Cell::default(); ns.len() * estimators.len()];
    let mut theta_cells = vec![(Moments::new(), Moments::new()); ns.len()];
    let mut truncated = 0u64;
    let mut first_error: Option<Error> = None;

    for_each_replicate(
        config,
        |_, rep| -> Option<Result<Vec<(f64, f64)>>> {
            if rep.truncated {
                return None;
            }
            let z = &rep.records.values;
            let mut out = Vec::with_capacity(ns.len() * (estimators.len() + 1));
            for &n in &ns {
                let theta = rep.thetas_at_records[n - 1];
                let prev = if n >= 2 { z[n - 2] } else { 0.0 };
                out.push((theta, 0.0));
                for id in &estimators {
                    let v = match id.estimate(prev, z[n - 1], n, shape) {
                        Ok(v) => v,
                        Err(e) => return Some(Err(e)),
                    };
                    let w = match id.risk_estimate(prev, z[n - 1], n, shape) {
                        Ok(w) => w,
                        Err(e) => return Some(Err(e)),
                    };
                    out.push((v - theta, w));
                }
            }
            Some(Ok(out))
        },
        |res| match res {
            None => truncated += 1,
            Some(Err(e)) => {
                first_error.get_or_insert(e);
            }
            Some(Ok(vals)) => {
                let mut it = vals.into_iter();
                for (ni, tc) in theta_cells.iter_mut().enumerate() {
                    let (theta, _) = it.next().expect("theta slot");
                    tc.0.push(theta);
                    tc.1.push(theta * theta);
                    for cell in &mut cells[ni * estimators.len()..(ni + 1) * estimators.len()] {
                        let (err, w) = it.next().expect("estimator slot");
                        cell.error.push(err);
                        cell.squared.push(err * err);
                        cell.risk_estimate.push(w);
                    }
                }
            }
        },
    )?;
    if let Some(e) = first_error {
        return Err(e);
    }

    let mut rows = Vec::with_capacity(cells.len());
    for (ni, &n) in ns.iter().enumerate() {
        for (ei, &id) in estimators.iter().enumerate() {
            let c = &cells[ni * estimators.len() + ei];
            rows.push(SummaryRow {
                estimator: id,
                n,
                bias: c.error.mean(),
                risk: c.squared.mean(),
                se_bias: c.error.std_error(),
                se_risk: c.squared.std_error(),
                risk_estimate_mean: c.risk_estimate.mean(),
                se_risk_estimate: c.risk_estimate.std_error(),
                replications: c.error.count(),
            });
        }
    }
    let theta = ns
        .iter()
        .zip(&theta_cells)
        .map(|(&n, (m, m2))| ThetaRow {
            n,
            mean: m.mean(),
            se_mean: m.std_error(),
            mean_square: m2.mean(),
            se_mean_square: m2.std_error(),
        })
        .collect();
    Ok(SimulationSummary {
        scheme: config.theta_model.scheme_name().to_string(),
        p: shape,
        family: config.family.clone(),
        theta_model: config.theta_model.clone(),
        master_seed: config.master_seed,
        replications: config.replications,
        truncated,
        rows,
        theta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingCheck {
    pub n: usize,
    pub y: Vec<f64>,
    pub empirical: Vec<f64>,
    pub mixture: Vec<f64>,
    pub max_deviation: f64,
    pub replications: u64,
}

/// Compare the empirical survival of the hazard spacing
/// `H(U_n) - H(U_{n-1})` at `n = n_target` with the mixture
/// `Σ_j e^{-y/θ_j} P(T_n = j)`, estimated from the same replicates as the
/// mean of `e^{-y/θ_{T_n}}`.
pub fn spacing_survival_check(config: &SimulationConfig, y_grid: &[f64]) -> Result<SpacingCheck> {
    if !config.family.kind().is_hazard() {
        return Err(Error::Usage(
            "the spacing check needs a proportional (reversed) hazard family".into(),
        ));
    }
    if y_grid.iter().any(|y| !(y.is_finite() && *y >= 0.0)) {
        return Err(Error::Domain(
            "spacing grid must be finite and nonnegative".into(),
        ));
    }
    let n = config.n_target;
    let mut exceed = vec![0u64; y_grid.len()];
    let mut mixture = vec![0.0; y_grid.len()];
    let mut used = 0u64;
    for_each_replicate(
        config,
        |_, rep| {
            (!rep.truncated).then(|| {
                let z = &rep.records.values;
                let spacing = z[n - 1] - if n >= 2 { z[n - 2] } else { 0.0 };
                (spacing, rep.thetas_at_records[n - 1])
            })
        },
        |res| {
            if let Some((spacing, theta)) = res {
                used += 1;
                for (k, &y) in y_grid.iter().enumerate() {
                    if spacing > y {
                        exceed[k] += 1;
                    }
                    mixture[k] += (-y / theta).exp();
                }
            }
        },
    )?;
    if used == 0 {
        return Err(Error::Numeric("every replicate was truncated".into()));
    }
    let empirical: Vec<f64> = exceed.iter().map(|&c| c as f64 / used as f64).collect();
    let mixture: Vec<f64> = mixture.iter().map(|&s| s / used as f64).collect();
    let max_deviation = empirical
        .iter()
        .zip(&mixture)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(SpacingCheck {
        n,
        y: y_grid.to_vec(),
        empirical,
        mixture,
        max_deviation,
        replications: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::Member;
    use crate::rng::with_threads;

    fn mean_of(model: &ParameterSequenceModel, index: u64, draws: u64, seed: u64) -> Moments {
        (0..draws)
            .map(|r| {
                let mut rng = stream_rng(seed, r);
                let mut s = model.stream();
                let mut t = 0.0;
                for _ in 0..index {
                    t = s.next_theta(&mut rng);
                }
                t
            })
            .collect()
    }

    #[test]
    fn constant_stream() {
        let m = ParameterSequenceModel::constant(1.0);
        let mut s = m.stream();
        let mut rng = stream_rng(0, 0);
        assert!((0..10).all(|_| s.next_theta(&mut rng) == 1.0));
    }

    #[test]
    fn white_noise_mean() {
        let m = mean_of(&ParameterSequenceModel::white_noise(), 1, 1_000_000, 3);
        assert!((m.mean() - 10.0).abs() < 0.004, "{}", m.mean());
    }

    #[test]
    fn ar_first_value_is_exponential() {
        let m = mean_of(
            &ParameterSequenceModel::ar_positive_error(),
            1,
            1_000_000,
            4,
        );
        assert!((m.mean() - 1.0).abs() < 0.004, "{}", m.mean());
        // stationary mean of θ_i = Z θ_{i-1} + ε is 1 / (1 - 1/2) = 2
        let m = mean_of(&ParameterSequenceModel::ar_positive_error(), 40, 100_000, 5);
        assert!((m.mean() - 2.0).abs() < 4.0 * m.std_error().unwrap());
    }

    #[test]
    fn geometric_readings() {
        let redraw = ParameterSequenceModel::stochastic_geometric(false);
        let fixed = ParameterSequenceModel::stochastic_geometric(true);
        // E θ_i = E C · E (1 + D/10)^{i-1}
        let expect = |i: i32| 0.5 * (1.1f64.powi(i) - 1.0) / (0.1 * i as f64);
        for model in [&redraw, &fixed] {
            let m = mean_of(model, 5, 200_000, 6);
            assert!((m.mean() - expect(5)).abs() < 4.0 * m.std_error().unwrap());
        }
        let mut rng = stream_rng(1, 1);
        let mut s = fixed.stream();
        let a = s.next_theta(&mut rng);
        let b = s.next_theta(&mut rng);
        let c = s.next_theta(&mut rng);
        assert!(
            (b * b / (a * c) - 1.0).abs() < 1e-12,
            "fixed C, D give a geometric sequence"
        );
    }

    #[test]
    fn user_supplied_repeats_last() {
        let m = ParameterSequenceModel::UserSupplied {
            thetas: vec![1.0, 2.0],
        };
        let mut s = m.stream();
        let mut rng = stream_rng(0, 0);
        let v: Vec<f64> = (0..4).map(|_| s.next_theta(&mut rng)).collect();
        assert_eq!(v, vec![1.0, 2.0, 2.0, 2.0]);
        assert!(ParameterSequenceModel::UserSupplied { thetas: vec![] }
            .validate()
            .is_err());
        assert!(ParameterSequenceModel::constant(-1.0).validate().is_err());
    }

    #[test]
    fn model_json() {
        let m: ParameterSequenceModel =
            serde_json::from_str(r#"{"scheme":"white_noise"}"#).unwrap();
        assert_eq!(m, ParameterSequenceModel::white_noise());
        let m: ParameterSequenceModel =
            serde_json::from_str(r#"{"scheme":"stochastic_geometric","per_replicate":true}"#)
                .unwrap();
        assert_eq!(m, ParameterSequenceModel::stochastic_geometric(true));
        assert!(serde_json::from_str::<ParameterSequenceModel>(r#"{"scheme":"nope"}"#).is_err());
    }

    fn cfg(model: ParameterSequenceModel, n: usize, reps: u64) -> SimulationConfig {
        SimulationConfig::new(FamilySpec::gamma(1.0).unwrap(), model, n, reps, 11)
    }

    #[test]
    fn config_json_and_validation() {
        let text = r#"{
            "family": {"kind": "gamma_type", "member": "gamma", "p": 0.5},
            "theta_model": {"scheme": "ar_positive_error"},
            "n_target": 4, "n_min": 2, "replications": 10, "master_seed": 3
        }"#;
        let c = SimulationConfig::from_json(text).unwrap();
        assert_eq!(c.max_observations, DEFAULT_MAX_OBSERVATIONS);
        assert_eq!(
            c.resolved_estimators(),
            vec![EstimatorId::UmvueGamma, EstimatorId::NaturalGamma]
        );
        assert_eq!(SimulationConfig::from_json(&c.to_json()).unwrap(), c);
        let bad = text.replace("\"replications\": 10", "\"replications\": 0");
        assert!(matches!(
            SimulationConfig::from_json(&bad),
            Err(Error::Config(_))
        ));
        let bad = text.replace("ar_positive_error", "bogus");
        assert!(matches!(
            SimulationConfig::from_json(&bad),
            Err(Error::Config(_))
        ));
        let bad = text.replace("\"n_min\": 2", "\"n_min\": 5");
        assert!(SimulationConfig::from_json(&bad).is_err());
        let bad = text.replace("\"n_min\": 2", "\"estimators\": [\"umvue_phr\"]");
        assert!(SimulationConfig::from_json(&bad).is_err());
    }

    #[test]
    fn constant_first_record_is_first_draw() {
        let c = cfg(ParameterSequenceModel::constant(1.0), 1, 5);
        for rep in simulate_replicates(&c).unwrap() {
            assert_eq!(rep.records.times, vec![1]);
            assert_eq!(rep.theta_selected(), Some(1.0));
        }
    }

    #[test]
    fn replicate_records_are_consistent() {
        let c = cfg(ParameterSequenceModel::white_noise(), 4, 50);
        for rep in simulate_replicates(&c).unwrap() {
            assert!(!rep.truncated);
            assert_eq!(rep.records.len(), 4);
            assert_eq!(rep.records.times[0], 1);
            assert!(rep.records.values.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(rep.raw_records, rep.records.values);
        }
    }

    #[test]
    fn geometric_records_arrive_sooner() {
        let median_t4 = |model| {
            let c = cfg(model, 4, 10_000);
            let mut t: Vec<u64> = simulate_replicates(&c)
                .unwrap()
                .iter()
                .map(|r| *r.records.times.last().unwrap())
                .collect();
            t.sort_unstable();
            t[t.len() / 2]
        };
        let geo = median_t4(ParameterSequenceModel::stochastic_geometric(false));
        let iid = median_t4(ParameterSequenceModel::constant(1.0));
        assert!(geo < iid, "{geo} vs {iid}");
    }

    #[test]
    fn truncation_is_counted() {
        let mut c = cfg(ParameterSequenceModel::white_noise(), 4, 2_000);
        c.max_observations = 10;
        let s = bias_risk_table(&c, &[]).unwrap();
        assert!(s.truncated > 0 && s.truncated < 2_000);
        assert!(s.validate().is_err());
        assert_eq!(s.rows[0].replications, 2_000 - s.truncated);
    }

    #[test]
    fn truncation_occurs_rarely_at_larger_caps() {
        let mut c = cfg(ParameterSequenceModel::white_noise(), 4, 20_000);
        c.max_observations = 10_000;
        let s = bias_risk_table(&c, &[]).unwrap();
        assert!(s.truncated > 0, "P(T_4 > 10^4) is positive");
        assert!(s.validate().is_ok(), "{}", s.truncated);
    }

    #[test]
    fn umvue_unbiased_under_constant_phr() {
        let fam = FamilySpec::proportional_hazard(Member::Exponential).unwrap();
        let c = SimulationConfig::new(fam, ParameterSequenceModel::constant(1.0), 2, 100_000, 5);
        let s = bias_risk_table(&c, &[]).unwrap();
        let r = s.row(EstimatorId::UmvuePhr, 2).unwrap();
        assert!(r.bias.abs() < 4.0 * r.se_bias.unwrap(), "{r:?}");
        let nat = s.row(EstimatorId::NaturalPhr, 2).unwrap();
        assert!((nat.bias - 1.0).abs() < 4.0 * nat.se_bias.unwrap());
    }

    #[test]
    fn single_replicate_has_undefined_se() {
        let c = cfg(ParameterSequenceModel::constant(2.0), 3, 1);
        let s = bias_risk_table(&c, &[]).unwrap();
        assert!(s
            .rows
            .iter()
            .all(|r| r.se_bias.is_none() && r.replications == 1));
        assert!(s.to_csv(6).contains(",NA,"));
        let json = s.to_json();
        assert!(json.contains("\"se_bias\": null"));
    }

    #[test]
    fn deterministic_across_threads() {
        let c = cfg(ParameterSequenceModel::ar_positive_error(), 3, 40_000);
        let one = with_threads(1, || bias_risk_table(&c, &[]).unwrap());
        let four = with_threads(4, || bias_risk_table(&c, &[]).unwrap());
        assert_eq!(one.to_json(), four.to_json());
        assert_eq!(one.to_csv(6), four.to_csv(6));
    }

    #[test]
    fn spacing_check_constant() {
        let fam = FamilySpec::proportional_hazard(Member::Exponential).unwrap();
        let c = SimulationConfig::new(fam, ParameterSequenceModel::constant(2.0), 3, 20_000, 8);
        let grid = [0.0, 0.5, 1.0, 2.0, 4.0];
        let check = spacing_survival_check(&c, &grid).unwrap();
        assert_eq!(check.empirical[0], 1.0);
        assert_eq!(check.mixture[0], 1.0);
        for (y, m) in grid.iter().zip(&check.mixture) {
            assert!((m - (-y / 2.0f64).exp()).abs() < 1e-12);
        }
        assert!(check.max_deviation < 0.02, "{}", check.max_deviation);
    }
}
