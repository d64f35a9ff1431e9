//! Scale-invariant test of a constant parameter against a varying one.
//!
//! `T = (1/(n-1)) Σ_{i=2}^n (θ̂_i / θ̂_{i-1} - 1)²` computed from the
//! hazard-spacing estimates. Under the null the spacings are iid
//! exponential, so `T` has the law of the same expression in iid `Exp(1)`
//! variables, whose quantiles are tabulated by simulation.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, sub_stream};
use crate::stats::{fmt_sig, quantile_sorted};

pub const DEFAULT_ALPHAS: [f64; 4] = [0.01, 0.025, 0.05, 0.1];
pub const DEFAULT_N_MIN: usize = 2;
pub const DEFAULT_N_MAX: usize = 10;
pub const DEFAULT_REPLICATIONS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 20_130_601;
/// Fewest replications accepted for a table.
pub const MIN_REPLICATIONS: u64 = 1_000;
/// Below this many replications tail quantiles are very noisy.
pub const WIDE_TOLERANCE_REPLICATIONS: u64 = 10_000;

pub fn test_statistic(theta_hats: &[f64]) -> Result<f64> {
    if theta_hats.len() < 2 {
        return Err(Error::Usage(format!(
            "the statistic needs at least 2 estimates, got {}",
            theta_hats.len()
        )));
    }
    if let Some((i, &t)) = theta_hats
        .iter()
        .enumerate()
        .find(|(_, t)| !(**t > 0.0 && t.is_finite()))
    {
        return Err(Error::Domain(format!(
            "estimate {} must be positive and finite, got {t}",
            i + 1
        )));
    }
    Ok(ratio_statistic(theta_hats))
}

fn ratio_statistic(v: &[f64]) -> f64 {
    let sum: f64 = v.windows(2).map(|w| (w[1] / w[0] - 1.0).powi(2)).sum();
    sum / (v.len() - 1) as f64
}

/// Spacing estimates `θ̂_1 = h_1`, `θ̂_i = h_i - h_{i-1}` from hazard-scale
/// records `h_1 < h_2 < ...`.
pub fn spacing_estimates(hazard_records: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    hazard_records
        .iter()
        .map(|&h| {
            let d = h - prev;
            prev = h;
            d
        })
        .collect()
}

/// One draw of `T` under the null for `n` records.
pub fn simulate_null_t<R: Rng + ?Sized>(n: usize, rng: &mut R) -> f64 {
    assert!(n >= 2, "null statistic needs n >= 2");
    let mut prev: f64 = Exp1.sample(rng);
    let mut sum = 0.0;
    for _ in 1..n {
        let z: f64 = Exp1.sample(rng);
        sum += (z / prev - 1.0).powi(2);
        prev = z;
    }
    sum / (n - 1) as f64
}

/// Null draws for `n` records; draw `r` uses stream `(n, r)`.
pub fn null_draws(n: usize, replications: u64, master_seed: u64) -> Vec<f64> {
    (0..replications)
        .into_par_iter()
        .map(|r| simulate_null_t(n, &mut stream_rng(master_seed, sub_stream(n as u32, r))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueTable {
    pub n_values: Vec<usize>,
    pub alphas: Vec<f64>,
    /// `quantiles[i][j] = t_{n_values[i]}(alphas[j])`.
    pub quantiles: Vec<Vec<f64>>,
    pub replications: u64,
    pub master_seed: u64,
}

/// Upper-`α` empirical quantiles (type 1) of the null statistic.
pub fn critical_values(
    n_values: &[usize],
    alphas: &[f64],
    replications: u64,
    master_seed: u64,
) -> Result<CriticalValueTable> {
    if replications < MIN_REPLICATIONS {
        return Err(Error::Usage(format!(
            "critical values need at least {MIN_REPLICATIONS} replications, got {replications}"
        )));
    }
    if replications >= 1 << 40 {
        return Err(Error::Usage("replications must be below 2^40".into()));
    }
    if n_values.is_empty() || n_values.iter().any(|&n| n < 2 || n > u32::MAX as usize) {
        return Err(Error::Usage("every n must be at least 2".into()));
    }
    check_alphas(alphas)?;
    let quantiles = n_values
        .iter()
        .map(|&n| {
            let mut draws = null_draws(n, replications, master_seed);
            draws.sort_unstable_by(|a, b| a.total_cmp(b));
            alphas
                .iter()
                .map(|&a| quantile_sorted(&draws, 1.0 - a))
                .collect()
        })
        .collect();
    Ok(CriticalValueTable {
        n_values: n_values.to_vec(),
        alphas: alphas.to_vec(),
        quantiles,
        replications,
        master_seed,
    })
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() || alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
        return Err(Error::Usage("every alpha must lie in (0, 1)".into()));
    }
    Ok(())
}

impl CriticalValueTable {
    pub fn get(&self, n: usize, alpha: f64) -> Option<f64> {
        let i = self.n_values.iter().position(|&m| m == n)?;
        let j = self
            .alphas
            .iter()
            .position(|&a| (a - alpha).abs() <= 1e-12)?;
        Some(self.quantiles[i][j])
    }

    /// Entries positive and, within each row, strictly decreasing in `α`.
    pub fn validate(&self) -> Result<()> {
        if self.quantiles.len() != self.n_values.len()
            || self
                .quantiles
                .iter()
                .any(|row| row.len() != self.alphas.len())
        {
            return Err(Error::Data(
                "critical-value table is not rectangular".into(),
            ));
        }
        let mut order: Vec<usize> = (0..self.alphas.len()).collect();
        order.sort_by(|&a, &b| self.alphas[a].total_cmp(&self.alphas[b]));
        for (n, row) in self.n_values.iter().zip(&self.quantiles) {
            if row.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
                return Err(Error::Data(format!("row n = {n} has a non-positive entry")));
            }
            if order.windows(2).any(|w| row[w[0]] <= row[w[1]]) {
                return Err(Error::Data(format!(
                    "row n = {n} is not strictly decreasing in alpha"
                )));
            }
        }
        Ok(())
    }

    /// CSV with header `n,<alpha>...`; provenance in `#` comment lines.
    pub fn to_csv(&self, digits: usize) -> String {
        let mut out = format!(
            "# replications={}\n# master_seed={}\nn",
            self.replications, self.master_seed
        );
        for a in &self.alphas {
            out.push(',');
            out.push_str(&a.to_string());
        }
        out.push('\n');
        for (n, row) in self.n_values.iter().zip(&self.quantiles) {
            out.push_str(&n.to_string());
            for &t in row {
                out.push(',');
                out.push_str(&fmt_sig(t, digits));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut replications = 0;
        let mut master_seed = 0;
        for (i, line) in text.lines().enumerate() {
            let Some(comment) = line.trim_start().strip_prefix('#') else {
                continue;
            };
            if let Some((key, value)) = comment.split_once('=') {
                let parse = |v: &str| {
                    v.trim().parse::<u64>().map_err(|e| Error::Parse {
                        line: i + 1,
                        message: format!("{}: {e}", key.trim()),
                    })
                };
                match key.trim() {
                    "replications" => replications = parse(value)?,
                    "master_seed" => master_seed = parse(value)?,
                    _ => {}
                }
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        let header_line = reader.position().line() as usize;
        if headers.get(0) != Some("n") || headers.len() < 2 {
            return Err(Error::Parse {
                line: header_line.max(1),
                message: "header must be n followed by alpha levels".into(),
            });
        }
        let alphas = headers
            .iter()
            .skip(1)
            .map(|h| {
                h.parse::<f64>().map_err(|_| Error::Parse {
                    line: header_line.max(1),
                    message: format!("bad alpha {h:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        check_alphas(&alphas).map_err(|_| Error::Parse {
            line: header_line.max(1),
            message: "alpha levels must lie in (0, 1)".into(),
        })?;
        let mut n_values = Vec::new();
        let mut quantiles = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let bad = |what: &str, v: &str| Error::Parse {
                line,
                message: format!("bad {what} {v:?}"),
            };
            let n_field = record.get(0).unwrap_or_default();
            n_values.push(n_field.parse::<usize>().map_err(|_| bad("n", n_field))?);
            let row = record
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| bad("value", v))
                })
                .collect::<Result<Vec<f64>>>()?;
            quantiles.push(row);
        }
        if n_values.is_empty() {
            return Err(Error::Data("critical-value table has no rows".into()));
        }
        let table = CriticalValueTable {
            n_values,
            alphas,
            quantiles,
            replications,
            master_seed,
        };
        table.validate()?;
        Ok(table)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Reject,
    FailToReject,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Reject => "Reject",
            Decision::FailToReject => "FailToReject",
        })
    }
}

/// Reject iff `T > t_n(α)`.
pub fn decide(t: f64, n: usize, alpha: f64, table: &CriticalValueTable) -> Result<Decision> {
    let critical = table.get(n, alpha).ok_or_else(|| {
        Error::Usage(format!(
            "no critical value for n = {n}, alpha = {alpha} in the table"
        ))
    })?;
    Ok(decide_against(t, critical))
}

pub fn decide_against(t: f64, critical: f64) -> Decision {
    if t > critical {
        Decision::Reject
    } else {
        Decision::FailToReject
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub n: usize,
    pub alpha: f64,
    pub theta_hats: Vec<f64>,
    pub statistic: f64,
    pub critical_value: f64,
    pub decision: Decision,
}

/// Run the test on hazard-scale records against `table`.
pub fn run_test(
    hazard_records: &[f64],
    alpha: f64,
    table: &CriticalValueTable,
) -> Result<TestReport> {
    let n = hazard_records.len();
    if n < 2 {
        return Err(Error::Data(format!(
            "the test needs at least 2 records, got {n}"
        )));
    }
    let theta_hats = spacing_estimates(hazard_records);
    let statistic = test_statistic(&theta_hats)?;
    let critical_value = table.get(n, alpha).ok_or_else(|| {
        Error::Usage(format!(
            "no critical value for n = {n}, alpha = {alpha} in the table"
        ))
    })?;
    Ok(TestReport {
        n,
        alpha,
        theta_hats,
        statistic,
        critical_value,
        decision: decide_against(statistic, critical_value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{FamilySpec, Member};
    use crate::montecarlo::{simulate_replicates, ParameterSequenceModel, SimulationConfig};
    use crate::stats::ks_two_sample;
    use proptest::prelude::*;

    #[test]
    fn statistic_examples() {
        assert_eq!(test_statistic(&[5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert_eq!(test_statistic(&[1.0, 2.0]).unwrap(), 1.0);
        assert!(matches!(test_statistic(&[1.0]), Err(Error::Usage(_))));
        assert!(matches!(test_statistic(&[1.0, 0.0]), Err(Error::Domain(_))));
        assert!(matches!(
            test_statistic(&[1.0, -2.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rainfall_statistic_from_spacings() {
        let h: Vec<f64> = crate::datasets::RAINFALL_RECORDS
            .iter()
            .map(|x| (x - 4.0f64).powf(1.9))
            .collect();
        let mut theta = vec![h[0]];
        theta.extend(h.windows(2).map(|w| w[1] - w[0]));
        let mut sum = 0.0;
        for i in 1..theta.len() {
            sum += (theta[i] / theta[i - 1] - 1.0).powi(2);
        }
        let oracle = sum / 7.0;
        let t = test_statistic(&spacing_estimates(&h)).unwrap();
        assert!((t - oracle).abs() < 1e-12 * oracle);
        assert!((t - 358.892).abs() < 1e-3, "{t}");
    }

    #[test]
    fn null_draw_n2_median() {
        // W = Z2/Z1 has cdf w/(1+w); (W-1)² ≤ c iff W ∈ [1-√c, 1+√c], so
        // P(T ≤ c) = (1+√c)/(2+√c) - (1-√c)/(2-√c) for c < 1, else (1+√c)/(2+√c).
        let cdf = |c: f64| {
            let s = c.sqrt();
            let upper = (1.0 + s) / (2.0 + s);
            if s < 1.0 {
                upper - (1.0 - s) / (2.0 - s)
            } else {
                upper
            }
        };
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < 0.5 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let mut draws = null_draws(2, 200_000, 5);
        draws.sort_by(|a, b| a.total_cmp(b));
        let med = quantile_sorted(&draws, 0.5);
        // empirical cdf at the true median is 1/2 within a few SE
        assert!(
            (cdf(med) - 0.5).abs() < 4.0 * (0.25f64 / 200_000.0).sqrt(),
            "{med} vs {lo}"
        );
    }

    #[test]
    fn quantiles_stabilize() {
        let mut a = null_draws(5, 100_000, 1);
        let mut b = null_draws(5, 100_000, 2);
        a.sort_by(|x, y| x.total_cmp(y));
        b.sort_by(|x, y| x.total_cmp(y));
        for q in [0.5, 0.9] {
            let (qa, qb) = (quantile_sorted(&a, q), quantile_sorted(&b, q));
            assert!((qa / qb - 1.0).abs() < 0.05, "q={q}: {qa} vs {qb}");
        }
    }

    #[test]
    fn table_roundtrip_and_rows() {
        let table = critical_values(&[2, 3, 4], &DEFAULT_ALPHAS, 5_000, 9).unwrap();
        table.validate().unwrap();
        for j in 0..4 {
            assert!(table.quantiles[0][j] < table.quantiles[2][j]);
        }
        let back = CriticalValueTable::from_csv(&table.to_csv(17)).unwrap();
        assert_eq!(back, table);
        let six = CriticalValueTable::from_csv(&table.to_csv(6)).unwrap();
        assert_eq!(six.replications, 5_000);
        assert_eq!(six.master_seed, 9);
        assert!((six.get(3, 0.05).unwrap() / table.get(3, 0.05).unwrap() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn table_errors() {
        assert!(matches!(
            critical_values(&[2], &[0.05], 999, 1),
            Err(Error::Usage(_))
        ));
        assert!(critical_values(&[1], &[0.05], 1_000, 1).is_err());
        assert!(critical_values(&[2], &[1.5], 1_000, 1).is_err());
        let median = critical_values(&[2], &[0.5], 1_000, 1).unwrap();
        assert!(median.get(2, 0.5).unwrap() > 0.0);
        assert!(matches!(
            CriticalValueTable::from_csv("n,0.05\n2,abc\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(CriticalValueTable::from_csv("n,0.05,0.1\n2,10,20\n").is_err());
        assert!(CriticalValueTable::from_csv("m,0.05\n2,10\n").is_err());
        assert!(CriticalValueTable::from_csv("n,0.05\n").is_err());
    }

    #[test]
    fn decisions() {
        let table = CriticalValueTable {
            n_values: vec![8],
            alphas: vec![0.05],
            quantiles: vec![vec![2698.59]],
            replications: 100_000,
            master_seed: 0,
        };
        assert_eq!(
            decide(279.14, 8, 0.05, &table).unwrap(),
            Decision::FailToReject
        );
        assert_eq!(
            decide(2698.59, 8, 0.05, &table).unwrap(),
            Decision::FailToReject
        );
        assert_eq!(decide(1e9, 8, 0.05, &table).unwrap(), Decision::Reject);
        assert!(matches!(decide(1.0, 7, 0.05, &table), Err(Error::Usage(_))));
        assert!(matches!(decide(1.0, 8, 0.1, &table), Err(Error::Usage(_))));
    }

    #[test]
    fn null_calibration() {
        let table = critical_values(&[4], &[0.05, 0.1], 100_000, 31).unwrap();
        let reps = 50_000u64;
        let draws = null_draws(4, reps, 32);
        for alpha in [0.05, 0.1] {
            let rejects = draws
                .iter()
                .filter(|&&t| decide(t, 4, alpha, &table).unwrap() == Decision::Reject)
                .count();
            let freq = rejects as f64 / reps as f64;
            // both the table and the check carry sampling error
            let se = (alpha * (1.0 - alpha) / reps as f64).sqrt() * (1.5f64).sqrt();
            assert!((freq - alpha).abs() < 3.0 * se, "alpha {alpha}: {freq}");
        }
    }

    #[test]
    fn simulated_records_follow_null_law() {
        let fam = FamilySpec::proportional_hazard(Member::Exponential).unwrap();
        let c = SimulationConfig::new(fam, ParameterSequenceModel::constant(3.0), 5, 10_000, 77);
        let mut from_records: Vec<f64> = simulate_replicates(&c)
            .unwrap()
            .iter()
            .map(|r| test_statistic(&spacing_estimates(&r.records.values)).unwrap())
            .collect();
        let mut null = null_draws(5, 10_000, 78);
        let d = ks_two_sample(&mut from_records, &mut null);
        assert!(
            d < crate::stats::ks_two_sample_critical(10_000, 10_000, 0.01),
            "{d}"
        );
    }

    proptest! {
        #[test]
        fn scale_invariance(v in prop::collection::vec(0.001f64..1e3, 2..12), c in 1e-3f64..1e3) {
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            let a = test_statistic(&v).unwrap();
            let b = test_statistic(&scaled).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn nonnegative_and_zero_only_when_equal(v in prop::collection::vec(0.1f64..10.0, 2..8)) {
            let t = test_statistic(&v).unwrap();
            prop_assert!(t >= 0.0);
            let all_equal = v.windows(2).all(|w| w[0] == w[1]);
            prop_assert_eq!(t == 0.0, all_equal);
        }
    }
}
