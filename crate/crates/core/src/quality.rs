//! Scalar quality metrics used to rank design points.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{EvalResult, ResourceUtil};
use crate::space::ConfigKey;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QualityError {
    #[error("utilization {0} is outside [0, 1)")]
    Domain(f64),
    #[error("finite difference needs two OK results")]
    Infeasible,
    #[error("cannot compare {0:?} quality with {1:?} quality")]
    TargetMismatch(QualityTarget, QualityTarget),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QualityTarget {
    Performance,
    Resource,
    FiniteDifference,
}

/// A quality value. Lower is better for every target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Score {
    /// Fewer cycles at no extra utilization cost: beats every trade-off.
    PureGain,
    Finite(f64),
    /// Unchanged utilization without a cycle gain.
    PureLoss,
    Infeasible,
}

impl Score {
    fn rank(&self) -> u8 {
        match self {
            Score::PureGain => 0,
            Score::Finite(_) => 1,
            Score::PureLoss => 2,
            Score::Infeasible => 3,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Score::Finite(v) => Some(*v),
            _ => None,
        }
    }

    fn cmp_score(&self, other: &Score) -> Ordering {
        match (self, other) {
            (Score::Finite(a), Score::Finite(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quality {
    pub target: QualityTarget,
    pub score: Score,
    /// Cycles of the candidate, first tie-breaker.
    pub cycles: Option<u64>,
    /// Config key of the candidate, last tie-breaker.
    pub key: ConfigKey,
}

impl Quality {
    pub fn performance(result: &EvalResult, key: ConfigKey) -> Self {
        let score = match result.cycles {
            Some(c) if result.is_ok() => Score::Finite(c as f64),
            _ => Score::Infeasible,
        };
        Quality {
            target: QualityTarget::Performance,
            score,
            cycles: result.cycles,
            key,
        }
    }

    pub fn resource(result: &EvalResult, key: ConfigKey) -> Self {
        let score = match util_penalty(&result.util) {
            Ok(p) if result.is_ok() => Score::Finite(p),
            _ => Score::Infeasible,
        };
        Quality {
            target: QualityTarget::Resource,
            score,
            cycles: result.cycles,
            key,
        }
    }

    /// Finite-difference quality of moving from `curr` to `cand`.
    /// Infeasible candidates get the worst score; a feasible candidate of an
    /// infeasible parent is a pure gain.
    pub fn finite_difference(curr: &EvalResult, cand: &EvalResult, key: ConfigKey) -> Self {
        let score = if !cand.is_ok() {
            Score::Infeasible
        } else if !curr.is_ok() {
            Score::PureGain
        } else {
            finite_difference(curr, cand).unwrap_or(Score::Infeasible)
        };
        Quality {
            target: QualityTarget::FiniteDifference,
            score,
            cycles: cand.cycles,
            key,
        }
    }

    pub fn root(result: &EvalResult, key: ConfigKey) -> Self {
        Quality {
            target: QualityTarget::FiniteDifference,
            score: if result.is_ok() { Score::PureGain } else { Score::Infeasible },
            cycles: result.cycles,
            key,
        }
    }
}

/// Exponential over-utilization penalty: sum of `2^(1/(1-u))`.
pub fn util_penalty_of(fractions: &[f64]) -> Result<f64, QualityError> {
    let mut total = 0.0;
    for &u in fractions {
        if !(0.0..1.0).contains(&u) {
            return Err(QualityError::Domain(u));
        }
        total += 2f64.powf(1.0 / (1.0 - u));
    }
    Ok(total)
}

pub fn util_penalty(u: &ResourceUtil) -> Result<f64, QualityError> {
    util_penalty_of(&u.values())
}

/// Score from a cycle delta over a penalty delta.
pub fn fd_from_deltas(d_cycles: f64, d_penalty: f64) -> Score {
    if d_penalty == 0.0 {
        if d_cycles < 0.0 {
            Score::PureGain
        } else {
            Score::PureLoss
        }
    } else {
        Score::Finite(d_cycles / d_penalty)
    }
}

pub fn finite_difference(curr: &EvalResult, cand: &EvalResult) -> Result<Score, QualityError> {
    let (Some(c0), Some(c1)) = (curr.cycles, cand.cycles) else {
        return Err(QualityError::Infeasible);
    };
    let p0 = util_penalty(&curr.util)?;
    let p1 = util_penalty(&cand.util)?;
    Ok(fd_from_deltas(c1 as f64 - c0 as f64, p1 - p0))
}

/// Total order, best first: score, then fewer cycles, then config key.
pub fn compare(a: &Quality, b: &Quality) -> Result<Ordering, QualityError> {
    if a.target != b.target {
        return Err(QualityError::TargetMismatch(a.target, b.target));
    }
    let cycles = |q: &Quality| q.cycles.unwrap_or(u64::MAX);
    Ok(a.score
        .cmp_score(&b.score)
        .then_with(|| cycles(a).cmp(&cycles(b)))
        .then_with(|| a.key.cmp(&b.key)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::EvalStatus;
    use proptest::prelude::*;

    fn fd(score: f64, cycles: u64, key: &str) -> Quality {
        Quality {
            target: QualityTarget::FiniteDifference,
            score: Score::Finite(score),
            cycles: Some(cycles),
            key: ConfigKey(key.to_string()),
        }
    }

    fn ok(cycles: u64, u: f64) -> EvalResult {
        EvalResult {
            status: EvalStatus::Ok,
            cycles: Some(cycles),
            util: ResourceUtil {
                lut: u,
                ff: u,
                dsp: u,
                bram: u,
            },
            report: None,
            eval_seconds: 0.0,
        }
    }

    #[test]
    fn penalty_values() {
        assert!((util_penalty_of(&[0.0]).unwrap() - 2.0).abs() < 1e-9);
        assert!((util_penalty_of(&[0.5]).unwrap() - 4.0).abs() < 1e-9);
        assert!((util_penalty_of(&[0.5, 0.75]).unwrap() - 20.0).abs() < 1e-9);
        assert_eq!(util_penalty_of(&[1.0]), Err(QualityError::Domain(1.0)));
    }

    #[test]
    fn worked_example_prefers_second_candidate() {
        let a = fd_from_deltas(-10.0, 30.0);
        let b = fd_from_deltas(-5.0, 10.0);
        assert!((a.value().unwrap() + 1.0 / 3.0).abs() < 1e-9);
        assert!((b.value().unwrap() + 0.5).abs() < 1e-9);
        let qa = fd(a.value().unwrap(), 90, "a");
        let qb = fd(b.value().unwrap(), 95, "b");
        assert_eq!(compare(&qb, &qa).unwrap(), Ordering::Less);
    }

    #[test]
    fn zero_denominator_sentinels() {
        let r = ok(100, 0.2);
        assert_eq!(finite_difference(&r, &r).unwrap(), Score::PureLoss);
        assert_eq!(finite_difference(&r, &ok(90, 0.2)).unwrap(), Score::PureGain);
        let gain = Quality { score: Score::PureGain, ..fd(0.0, 500, "z") };
        assert_eq!(compare(&gain, &fd(-1e12, 1, "a")).unwrap(), Ordering::Less);
    }

    #[test]
    fn tie_breaks_and_targets() {
        assert_eq!(compare(&fd(-1.0, 100, "b"), &fd(-1.0, 200, "a")).unwrap(), Ordering::Less);
        assert_eq!(compare(&fd(-1.0, 100, "a"), &fd(-1.0, 100, "b")).unwrap(), Ordering::Less);
        let p50 = Quality::performance(&ok(50, 0.1), ConfigKey("x".into()));
        let p70 = Quality::performance(&ok(70, 0.1), ConfigKey("y".into()));
        assert_eq!(compare(&p50, &p70).unwrap(), Ordering::Less);
        assert!(matches!(compare(&p50, &fd(0.0, 1, "a")), Err(QualityError::TargetMismatch(..))));
    }

    fn arb_quality() -> impl Strategy<Value = Quality> {
        let score = prop_oneof![
            Just(Score::PureGain),
            Just(Score::PureLoss),
            Just(Score::Infeasible),
            (-5i32..5).prop_map(|v| Score::Finite(v as f64 / 2.0)),
        ];
        (score, prop::option::of(0u64..4), "[a-c]").prop_map(|(score, cycles, key)| Quality {
            target: QualityTarget::FiniteDifference,
            score,
            cycles,
            key: ConfigKey(key),
        })
    }

    proptest! {
        #[test]
        fn penalty_is_increasing(u in 0.0f64..0.98, du in 0.001f64..0.01) {
            let a = util_penalty_of(&[u]).unwrap();
            let b = util_penalty_of(&[(u + du).min(0.999)]).unwrap();
            prop_assert!(b > a);
            prop_assert!(util_penalty_of(&[u, u, u, u]).unwrap() >= 8.0);
        }

        #[test]
        fn negated_deltas_give_the_same_ratio(dc in -1e6f64..1e6, dp in prop::num::f64::NORMAL) {
            prop_assert_eq!(fd_from_deltas(dc, dp), fd_from_deltas(-dc, -dp));
        }

        #[test]
        fn compare_is_a_total_order(a in arb_quality(), b in arb_quality(), c in arb_quality()) {
            let ab = compare(&a, &b).unwrap();
            prop_assert_eq!(ab, compare(&b, &a).unwrap().reverse());
            if ab == Ordering::Equal {
                prop_assert_eq!(&a, &b);
            }
            if ab != Ordering::Greater && compare(&b, &c).unwrap() != Ordering::Greater {
                prop_assert_ne!(compare(&a, &c).unwrap(), Ordering::Greater);
            }
        }

        #[test]
        fn scaling_deltas_keeps_the_order(
            d1 in (-1000i64..1000, 1i64..1000),
            d2 in (-1000i64..1000, 1i64..1000),
            k in 0.01f64..100.0,
        ) {
            let q = |(dc, dp): (i64, i64), s: f64, key: &str| Quality {
                target: QualityTarget::FiniteDifference,
                score: fd_from_deltas(dc as f64 * s, dp as f64 * s),
                cycles: Some((dc + 1000) as u64),
                key: ConfigKey(key.to_string()),
            };
            let before = compare(&q(d1, 1.0, "a"), &q(d2, 1.0, "b")).unwrap();
            let after = compare(&q(d1, k, "a"), &q(d2, k, "b")).unwrap();
            let same_ratio = (d1.0 * d2.1) == (d2.0 * d1.1);
            if !same_ratio {
                prop_assert_eq!(before, after);
            }
        }
    }
}
