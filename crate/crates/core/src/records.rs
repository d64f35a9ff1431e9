//! Upper and lower record values with their record times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{FamilyKind, FamilySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Upper,
    Lower,
}

impl Direction {
    #[inline]
    fn beats(self, candidate: f64, current: f64) -> bool {
        match self {
            // ties are not records
            Direction::Upper => candidate > current,
            Direction::Lower => candidate < current,
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "upper" => Ok(Direction::Upper),
            "lower" => Ok(Direction::Lower),
            other => Err(Error::Usage(format!(
                "direction must be upper or lower, got {other:?}"
            ))),
        }
    }
}

/// Record values `values[k]` observed at 1-based record times `times[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSet {
    pub values: Vec<f64>,
    pub times: Vec<u64>,
    pub direction: Direction,
    /// Number of observations scanned to produce the set.
    pub source_length: u64,
}

impl RecordSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(U_{n-1}, U_n)` for 1-based `n`; `None` stands for `U_0` when `n = 1`.
    pub fn pair(&self, n: usize) -> Result<(Option<f64>, f64)> {
        if n == 0 || n > self.len() {
            return Err(Error::Usage(format!(
                "record index {n} out of range 1..={}",
                self.len()
            )));
        }
        let prev = (n >= 2).then(|| self.values[n - 2]);
        Ok((prev, self.values[n - 1]))
    }
}

/// Streaming record extractor fed one observation at a time.
#[derive(Debug, Clone)]
pub struct RecordAccumulator {
    direction: Direction,
    values: Vec<f64>,
    times: Vec<u64>,
    seen: u64,
}

impl RecordAccumulator {
    pub fn new(direction: Direction) -> Self {
        RecordAccumulator {
            direction,
            values: Vec::new(),
            times: Vec::new(),
            seen: 0,
        }
    }

    pub fn with_capacity(direction: Direction, records: usize) -> Self {
        RecordAccumulator {
            values: Vec::with_capacity(records),
            times: Vec::with_capacity(records),
            ..Self::new(direction)
        }
    }

    /// Feed the next observation; returns `true` when it sets a new record.
    #[inline]
    pub fn push(&mut self, x: f64) -> bool {
        self.seen += 1;
        let is_record = match self.values.last() {
            None => true,
            Some(&current) => self.direction.beats(x, current),
        };
        if is_record {
            self.values.push(x);
            self.times.push(self.seen);
        }
        is_record
    }

    pub fn record_count(&self) -> usize {
        self.values.len()
    }

    pub fn current(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn observations(&self) -> u64 {
        self.seen
    }

    pub fn finish(self) -> RecordSet {
        RecordSet {
            values: self.values,
            times: self.times,
            direction: self.direction,
            source_length: self.seen,
        }
    }
}

pub fn extract_records(seq: &[f64], direction: Direction) -> Result<RecordSet> {
    if seq.is_empty() {
        return Err(Error::Usage(
            "cannot extract records from an empty sequence".into(),
        ));
    }
    let mut acc = RecordAccumulator::new(direction);
    for (i, &x) in seq.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::Data(format!(
                "observation {} is not finite ({x})",
                i + 1
            )));
        }
        acc.push(x);
    }
    Ok(acc.finish())
}

/// Upper records of the statistic `Y_i = S(X_i)` of a gamma-type family.
///
/// Transforms first and then extracts, which is valid whether or not `S`
/// is monotone.
pub fn transformed_records(seq: &[f64], family: &FamilySpec) -> Result<RecordSet> {
    if family.kind() != FamilyKind::GammaType {
        return Err(Error::Usage(
            "transformed records need a gamma-type family".into(),
        ));
    }
    statistic_records(seq, family)
}

/// Upper records of the family statistic (`S`, `H` or `-R`) of every
/// observation. For hazard families these are the statistic values at the
/// selecting records: upper records of `X` under proportional hazards,
/// lower records under reversed hazards.
pub fn statistic_records(seq: &[f64], family: &FamilySpec) -> Result<RecordSet> {
    if seq.is_empty() {
        return Err(Error::Usage(
            "cannot extract records from an empty sequence".into(),
        ));
    }
    let mut y = Vec::with_capacity(seq.len());
    for (i, &x) in seq.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::Data(format!(
                "observation {} is not finite ({x})",
                i + 1
            )));
        }
        y.push(family.statistic(x).map_err(|e| match e {
            Error::Domain(msg) => Error::Data(format!("observation {}: {msg}", i + 1)),
            other => other,
        })?);
    }
    extract_records(&y, Direction::Upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::Member;
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn upper_and_lower_examples() {
        let seq = [3.0, 1.0, 4.0, 1.0, 5.0];
        let up = extract_records(&seq, Direction::Upper).unwrap();
        assert_eq!(up.values, vec![3.0, 4.0, 5.0]);
        assert_eq!(up.times, vec![1, 3, 5]);
        assert_eq!(up.source_length, 5);
        let lo = extract_records(&seq, Direction::Lower).unwrap();
        assert_eq!(lo.values, vec![3.0, 1.0]);
        assert_eq!(lo.times, vec![1, 2]);
    }

    #[test]
    fn rainfall_records_are_kept() {
        let seq = crate::datasets::RAINFALL_RECORDS;
        let rs = extract_records(&seq, Direction::Upper).unwrap();
        assert_eq!(rs.values, seq.to_vec());
        assert_eq!(rs.times, (1..=8).collect::<Vec<u64>>());
    }

    #[test]
    fn ties_are_not_records() {
        let rs = extract_records(&[2.0, 2.0, 3.0, 3.0], Direction::Upper).unwrap();
        assert_eq!(rs.times, vec![1, 3]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            extract_records(&[], Direction::Upper),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            extract_records(&[1.0, f64::NAN], Direction::Upper),
            Err(Error::Data(_))
        ));
        let phr = FamilySpec::proportional_hazard(Member::Exponential).unwrap();
        assert!(matches!(
            transformed_records(&[1.0], &phr),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn rayleigh_transformed_records() {
        let ray = FamilySpec::gamma_type(Member::Rayleigh).unwrap();
        let rs = transformed_records(&[1.0, 3.0, 2.0], &ray).unwrap();
        assert_eq!(rs.values, vec![0.5, 4.5]);
        assert_eq!(rs.times, vec![1, 2]);
    }

    #[test]
    fn identity_transform_matches_plain_extraction() {
        let exp = FamilySpec::gamma_type(Member::Exponential).unwrap();
        let seq = [0.3, 0.1, 2.0, 1.5, 2.5, 0.2];
        assert_eq!(
            transformed_records(&seq, &exp).unwrap(),
            extract_records(&seq, Direction::Upper).unwrap()
        );
    }

    #[test]
    fn decreasing_s_uses_lower_records() {
        let ig = FamilySpec::gamma_type(Member::InverseGaussian).unwrap();
        let mut rng = stream_rng(21, 0);
        for _ in 0..100 {
            let len = rng.random_range(1..60);
            let seq: Vec<f64> = (0..len).map(|_| rng.random_range(0.01..10.0)).collect();
            let s_records = transformed_records(&seq, &ig).unwrap();
            let lower = extract_records(&seq, Direction::Lower).unwrap();
            let mapped: Vec<f64> = lower
                .values
                .iter()
                .map(|&x| ig.s_transform(x).unwrap())
                .collect();
            assert_eq!(s_records.values, mapped);
            assert_eq!(s_records.times, lower.times);
        }
    }

    #[test]
    fn record_count_is_harmonic() {
        let mut rng = stream_rng(99, 1);
        let m = 100;
        let reps = 10_000;
        let counts: Vec<f64> = (0..reps)
            .map(|_| {
                let mut acc = RecordAccumulator::new(Direction::Upper);
                for _ in 0..m {
                    acc.push(rng.random::<f64>());
                }
                acc.record_count() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / reps as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        let harmonic: f64 = (1..=m).map(|i| 1.0 / i as f64).sum();
        assert!(
            (mean - harmonic).abs() <= 3.0 * se,
            "{mean} vs {harmonic} (se {se})"
        );
    }

    proptest! {
        #[test]
        fn record_set_invariants(seq in prop::collection::vec(-1e6f64..1e6, 1..200), upper in any::<bool>()) {
            let dir = if upper { Direction::Upper } else { Direction::Lower };
            let rs = extract_records(&seq, dir).unwrap();
            prop_assert_eq!(rs.values.len(), rs.times.len());
            prop_assert_eq!(rs.times[0], 1);
            for w in rs.times.windows(2) { prop_assert!(w[0] < w[1]); }
            for w in rs.values.windows(2) {
                let ordered = if upper { w[0] < w[1] } else { w[0] > w[1] };
                prop_assert!(ordered);
            }
            for (v, t) in rs.values.iter().zip(&rs.times) {
                prop_assert_eq!(*v, seq[*t as usize - 1]);
            }
            // idempotence
            let again = extract_records(&rs.values, dir).unwrap();
            prop_assert_eq!(&again.values, &rs.values);
        }

        #[test]
        fn monotone_shortcut(seq in prop::collection::vec(0.001f64..100.0, 1..100)) {
            let ray = FamilySpec::gamma_type(Member::Rayleigh).unwrap();
            let via_s = transformed_records(&seq, &ray).unwrap();
            let upper = extract_records(&seq, Direction::Upper).unwrap();
            let mapped: Vec<f64> = upper.values.iter().map(|&x| ray.s_transform(x).unwrap()).collect();
            prop_assert_eq!(via_s.values, mapped);
            prop_assert_eq!(via_s.times, upper.times);
        }
    }
}
