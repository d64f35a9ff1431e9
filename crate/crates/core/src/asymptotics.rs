//! Monte Carlo diagnostics for the large-`n` behaviour of records from the
//! exponential-base proportional hazard family (`H(x) = x`).
//!
//! With `S(i) = Σ_{j≤i} 1/θ_j`, the normalized records
//! `U*_n = U_n - log S(T_n)` and `U*_{n-1} = U_{n-1} - log S(T_n)` have the
//! joint limit `exp(-e^{-min(y,z)}) [1 + 1{y>z}(e^{-z} - e^{-y})]`, and
//! `T*_n = (log S(T_n) - n)/√n` is asymptotically standard normal.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::exp1;
use crate::montecarlo::{ParameterSequenceModel, DEFAULT_MAX_OBSERVATIONS};
use crate::rng::{stream_rng, sub_stream};
use crate::stats::{correlation, fmt_sig, Moments};

/// Location `a(s)`, scale `b(s)` and limit cdf `Ψ` of the record
/// normalization `(U - a(S(T_n))) / b(S(T_n))`.
#[derive(Debug, Clone, Copy)]
pub struct Normalization {
    pub location: fn(f64) -> f64,
    pub scale: fn(f64) -> f64,
    pub limit_cdf: fn(f64) -> f64,
}

impl Normalization {
    /// Exponential base: `a(s) = log s`, `b(s) = 1`, Gumbel limit.
    pub fn gumbel() -> Self {
        Normalization {
            location: f64::ln,
            scale: |_| 1.0,
            limit_cdf: crate::stats::gumbel_cdf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedRecordSample {
    pub n: usize,
    /// Hazard-scale records `U_n` and `U_{n-1}` (`U_0 = 0`).
    pub u_n: f64,
    pub u_prev: f64,
    /// `T_n`, kept as a float since it grows like `e^n`.
    pub record_time: f64,
    /// `S(T_n) = Σ_{j≤T_n} 1/θ_j`.
    pub s: f64,
    /// `S⁽²⁾(T_n) = Σ_{j≤T_n} 1/θ_j²`.
    pub s2: f64,
    pub theta_selected: f64,
    pub u_star_n: f64,
    pub u_star_prev: f64,
    pub t_star: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRun {
    pub samples: Vec<NormalizedRecordSample>,
    pub truncated: u64,
}

/// Cumulative sums `(S(i), S⁽²⁾(i))` for `i = 1..=len` of a θ-sequence.
pub fn inverse_sums(thetas: &[f64]) -> Vec<(f64, f64)> {
    let (mut s, mut s2) = (0.0, 0.0);
    thetas
        .iter()
        .map(|t| {
            s += 1.0 / t;
            s2 += 1.0 / (t * t);
            (s, s2)
        })
        .collect()
}

struct RawRecord {
    u_n: f64,
    u_prev: f64,
    record_time: f64,
    s: f64,
    s2: f64,
    theta: f64,
}

// Constant θ: record increments are Exp(θ) and the wait after a record at
// u is Geometric(e^{-u/θ}), so no observation has to be drawn explicitly.
fn constant_theta_records<R: Rng + ?Sized>(theta: f64, n: usize, rng: &mut R) -> Option<RawRecord> {
    let mut u = theta * exp1(rng);
    let mut u_prev = 0.0;
    let mut t = 1.0;
    for _ in 1..n {
        let p = (-u / theta).exp();
        let v = 1.0 - rng.random::<f64>();
        let wait = (v.ln() / (-p).ln_1p()).ceil().max(1.0);
        t += wait;
        u_prev = u;
        u += theta * exp1(rng);
    }
    t.is_finite().then(|| RawRecord {
        u_n: u,
        u_prev,
        record_time: t,
        s: t / theta,
        s2: t / (theta * theta),
        theta,
    })
}

fn brute_force_records<R: Rng + ?Sized>(
    model: &ParameterSequenceModel,
    n: usize,
    max_observations: u64,
    rng: &mut R,
) -> Option<RawRecord> {
    let mut thetas = model.stream();
    let (mut s, mut s2) = (0.0, 0.0);
    let (mut u, mut u_prev) = (f64::NEG_INFINITY, 0.0);
    let mut count = 0;
    for seen in 1..=max_observations {
        let theta = thetas.next_theta(rng);
        if !theta.is_finite() {
            return None;
        }
        s += 1.0 / theta;
        s2 += 1.0 / (theta * theta);
        let z = theta * exp1(rng);
        if z > u {
            if count > 0 {
                u_prev = u;
            }
            u = z;
            count += 1;
            if count == n {
                return Some(RawRecord {
                    u_n: u,
                    u_prev,
                    record_time: seen as f64,
                    s,
                    s2,
                    theta,
                });
            }
        }
    }
    None
}

/// Simulate `reps` streams to the `n`-th record and normalize with `norm`.
/// Replicate `r` uses stream `(n, r)` of `master_seed`. Streams that reach
/// `max_observations` first are dropped and counted.
pub fn normalized_sample_with(
    model: &ParameterSequenceModel,
    n: usize,
    reps: u64,
    master_seed: u64,
    max_observations: u64,
    norm: Normalization,
) -> Result<NormalizedRun> {
    if n < 1 {
        return Err(Error::Usage("record index starts at 1".into()));
    }
    if !(1..1 << 40).contains(&reps) {
        return Err(Error::Usage("replications must lie in 1..2^40".into()));
    }
    model.validate()?;
    let constant = model.constant_value();
    let raw: Vec<Option<RawRecord>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(master_seed, sub_stream(n as u32, r));
            match constant {
                Some(theta) => constant_theta_records(theta, n, &mut rng),
                None => brute_force_records(model, n, max_observations, &mut rng),
            }
        })
        .collect();
    let mut truncated = 0;
    let mut samples = Vec::with_capacity(raw.len());
    for rec in raw {
        let Some(rec) = rec else {
            truncated += 1;
            continue;
        };
        let (a, b) = ((norm.location)(rec.s), (norm.scale)(rec.s));
        samples.push(NormalizedRecordSample {
            n,
            u_n: rec.u_n,
            u_prev: rec.u_prev,
            record_time: rec.record_time,
            s: rec.s,
            s2: rec.s2,
            theta_selected: rec.theta,
            u_star_n: (rec.u_n - a) / b,
            u_star_prev: (rec.u_prev - a) / b,
            t_star: (rec.s.ln() - n as f64) / (n as f64).sqrt(),
        });
    }
    Ok(NormalizedRun { samples, truncated })
}

pub fn normalized_sample(
    model: &ParameterSequenceModel,
    n: usize,
    reps: u64,
    master_seed: u64,
) -> Result<NormalizedRun> {
    normalized_sample_with(
        model,
        n,
        reps,
        master_seed,
        DEFAULT_MAX_OBSERVATIONS,
        Normalization::gumbel(),
    )
}

/// Limit joint cdf of `(U*_n, U*_{n-1})` at `(y, z)`.
pub fn joint_limit_cdf(y: f64, z: f64) -> f64 {
    let base = (-(-y.min(z)).exp()).exp();
    if y > z {
        base * (1.0 + (-z).exp() - (-y).exp())
    } else {
        base
    }
}

/// Sup over the grid of `|P̂(U*_n ≤ y, U*_{n-1} ≤ z) - limit(y, z)|`.
pub fn joint_cdf_deviation(samples: &[NormalizedRecordSample], grid: &[f64]) -> f64 {
    let m = samples.len() as f64;
    let mut worst: f64 = 0.0;
    for &y in grid {
        for &z in grid {
            let hits = samples
                .iter()
                .filter(|s| s.u_star_n <= y && s.u_star_prev <= z)
                .count();
            worst = worst.max((hits as f64 / m - joint_limit_cdf(y, z)).abs());
        }
    }
    worst
}

/// Sample correlation of `((U_{n-1} - n)/√n, (U_n - n)/√n)`.
pub fn frechet_correlation(
    model: &ParameterSequenceModel,
    n: usize,
    reps: u64,
    master_seed: u64,
) -> Result<f64> {
    if n < 2 {
        return Err(Error::Usage(
            "the correlation of consecutive records needs n >= 2".into(),
        ));
    }
    if reps < 2 {
        return Err(Error::Usage(
            "the correlation needs at least 2 replications".into(),
        ));
    }
    let run = normalized_sample(model, n, reps, master_seed)?;
    if run.samples.len() < 2 {
        return Err(Error::Numeric("too few untruncated replicates".into()));
    }
    let root = (n as f64).sqrt();
    let nf = n as f64;
    let prev: Vec<f64> = run.samples.iter().map(|s| (s.u_prev - nf) / root).collect();
    let curr: Vec<f64> = run.samples.iter().map(|s| (s.u_n - nf) / root).collect();
    Ok(correlation(&prev, &curr))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRate {
    pub n: usize,
    /// Simulated risk of the spacing estimator `U_n - U_{n-1}`.
    pub risk: f64,
    pub se_risk: Option<f64>,
    pub risk_over_n: f64,
    pub se_risk_over_n: Option<f64>,
    /// Simulated `E θ_[n]²`, equal to the risk at every `n`.
    pub theta_square_mean: f64,
    pub se_theta_square: Option<f64>,
    pub replications: u64,
}

pub fn risk_rate(
    model: &ParameterSequenceModel,
    n_list: &[usize],
    reps: u64,
    master_seed: u64,
) -> Result<Vec<RiskRate>> {
    n_list
        .iter()
        .map(|&n| {
            let run = normalized_sample(model, n, reps, master_seed)?;
            let mut loss = Moments::new();
            let mut theta_sq = Moments::new();
            for s in &run.samples {
                let err = s.u_n - s.u_prev - s.theta_selected;
                loss.push(err * err);
                theta_sq.push(s.theta_selected * s.theta_selected);
            }
            let nf = n as f64;
            Ok(RiskRate {
                n,
                risk: loss.mean(),
                se_risk: loss.std_error(),
                risk_over_n: loss.mean() / nf,
                se_risk_over_n: loss.std_error().map(|se| se / nf),
                theta_square_mean: theta_sq.mean(),
                se_theta_square: theta_sq.std_error(),
                replications: loss.count(),
            })
        })
        .collect()
}

/// One line of the `(n, statistic, value, se)` diagnostics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub n: usize,
    pub statistic: String,
    pub value: f64,
    pub se: Option<f64>,
}

impl DiagnosticRow {
    pub fn new(n: usize, statistic: &str, value: f64, se: Option<f64>) -> Self {
        DiagnosticRow {
            n,
            statistic: statistic.to_string(),
            value,
            se,
        }
    }
}

pub fn diagnostics_csv(rows: &[DiagnosticRow], digits: usize) -> String {
    let mut out = String::from("n,statistic,value,se\n");
    for r in rows {
        let se =
            r.se.map_or_else(|| "NA".to_string(), |s| fmt_sig(s, digits));
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.n,
            r.statistic,
            fmt_sig(r.value, digits),
            se
        ));
    }
    out
}
