use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::records::{ActionSet, GenerationRecord};
use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum F1Averaging {
    #[default]
    Micro,
    Macro,
}

impl std::str::FromStr for F1Averaging {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "micro" => Ok(F1Averaging::Micro),
            "macro" => Ok(F1Averaging::Macro),
            _ => Err(format!("unknown F1 averaging {s:?} (micro or macro)")),
        }
    }
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    if tp + fp + fn_ == 0 {
        return 1.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}

/// F1 over the binary labels like/follow/repost/ignore. Micro pools the
/// confusion counts of all labels and samples; macro averages per-label F1.
/// A label (or pool) with no positives on either side scores 1.
pub fn f1_score(pairs: &[(ActionSet, ActionSet)], averaging: F1Averaging) -> f64 {
    let mut counts = [[0u64; 3]; 4];
    for (pred, truth) in pairs {
        for (j, (p, t)) in pred.as_array().into_iter().zip(truth.as_array()).enumerate() {
            match (p, t) {
                (true, true) => counts[j][0] += 1,
                (true, false) => counts[j][1] += 1,
                (false, true) => counts[j][2] += 1,
                (false, false) => {}
            }
        }
    }
    match averaging {
        F1Averaging::Micro => {
            let s = counts.iter().fold([0u64; 3], |a, c| [a[0] + c[0], a[1] + c[1], a[2] + c[2]]);
            f1(s[0], s[1], s[2])
        }
        F1Averaging::Macro => counts.iter().map(|c| f1(c[0], c[1], c[2])).sum::<f64>() / 4.0,
    }
}

/// Scores the action predictions of reply-shaped records against the
/// observed label sets keyed by prompt thread id. Post-shaped records
/// carry no actions and are skipped; none is returned when no record has
/// actions.
pub fn action_f1(
    predictions: &[GenerationRecord],
    ground_truth: &HashMap<String, ActionSet>,
    averaging: F1Averaging,
) -> Result<Option<f64>, MetricError> {
    let mut pairs = Vec::new();
    let mut missing = Vec::new();
    for rec in predictions {
        let Some(pred) = rec.response.actions() else { continue };
        match ground_truth.get(&rec.prompt_thread_id) {
            Some(t) => pairs.push((*pred, *t)),
            None => missing.push(rec.prompt_thread_id.clone()),
        }
    }
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(MetricError::UnmatchedIds(missing));
    }
    Ok((!pairs.is_empty()).then(|| f1_score(&pairs, averaging)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(a: [bool; 4]) -> ActionSet {
        ActionSet::from_array(a)
    }

    #[test]
    fn perfect_and_inverted() {
        let truth = [s([true, false, false, false]), s([false, true, true, false]), s([false, false, false, true])];
        let same: Vec<_> = truth.iter().map(|t| (*t, *t)).collect();
        assert_eq!(f1_score(&same, F1Averaging::Micro), 1.0);
        let inv: Vec<_> = truth.iter().map(|t| (s(t.as_array().map(|b| !b)), *t)).collect();
        assert_eq!(f1_score(&inv, F1Averaging::Micro), 0.0);
    }

    #[test]
    fn four_sample_hand_count() {
        // sample: pred vs truth
        // 1: like          vs like            tp=1
        // 2: like, repost  vs repost          tp=1 fp=1
        // 3: ignore        vs follow          fp=1 fn=1
        // 4: none          vs like, follow    fn=2
        // micro: tp=2 fp=2 fn=3 -> 4/9
        let pairs = [
            (s([true, false, false, false]), s([true, false, false, false])),
            (s([true, false, true, false]), s([false, false, true, false])),
            (s([false, false, false, true]), s([false, true, false, false])),
            (s([false, false, false, false]), s([true, true, false, false])),
        ];
        assert!((f1_score(&pairs, F1Averaging::Micro) - 4.0 / 9.0).abs() < 1e-15);
        // macro: like tp1 fp1 fn1 -> .5; follow fn2 -> 0; repost tp1 -> 1; ignore fp1 -> 0
        assert!((f1_score(&pairs, F1Averaging::Macro) - 1.5 / 4.0).abs() < 1e-15);
        let mut rev = pairs;
        rev.reverse();
        assert_eq!(f1_score(&pairs, F1Averaging::Micro), f1_score(&rev, F1Averaging::Micro));
    }

    #[test]
    fn no_positives_is_one() {
        let pairs = [(ActionSet::default(), ActionSet::default())];
        assert_eq!(f1_score(&pairs, F1Averaging::Micro), 1.0);
    }
}
