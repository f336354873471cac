//! Open-set evaluation metrics: OS*, UNK, OS and HOS, all expressed as
//! percentages in `[0, 100]`.
//!
//! OS* is the mean per-class accuracy over the known classes, UNK the
//! accuracy on the unified unknown class, OS their `(C + 1)`-way
//! combination, and HOS the harmonic mean of OS* and UNK.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::data::LabelSpace;
use crate::error::{Error, Result};

/// Evaluation summary for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Mean per-class accuracy over known classes (percent).
    pub os_star: f64,
    /// Accuracy on the unified unknown class (percent).
    pub unk: f64,
    /// `(C * OS* + UNK) / (C + 1)` (percent).
    pub os: f64,
    /// Harmonic mean of OS* and UNK (percent).
    pub hos: f64,
    /// Per-class accuracy including the unknown id (percent).
    pub per_class_acc: BTreeMap<i64, f64>,
    /// Ground-truth sample count per class including the unknown id.
    pub counts: BTreeMap<i64, usize>,
}

/// Harmonic mean of two percentages, with `0/0` defined as 0.
pub fn hos(os_star: f64, unk: f64) -> f64 {
    assert!(
        (0.0..=100.0).contains(&os_star) && (0.0..=100.0).contains(&unk),
        "hos inputs must be percentages in [0, 100]"
    );
    if os_star + unk == 0.0 {
        0.0
    } else {
        2.0 * os_star * unk / (os_star + unk)
    }
}

/// Arithmetic mean of a slice of percentages. Handy for aggregating
/// per-task results into table averages.
pub fn average(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "cannot average zero values");
    values.iter().sum::<f64>() / values.len() as f64
}

/// Score predictions against unified ground truth.
///
/// Every known class and the unknown class must occur in the ground
/// truth at least once.
pub fn evaluate(predictions: &[i64], ground_truth: &[i64], space: &LabelSpace) -> Result<EvalReport> {
    if predictions.len() != ground_truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} ground-truth labels",
            predictions.len(),
            ground_truth.len()
        )));
    }
    for (i, &g) in ground_truth.iter().enumerate() {
        if !space.is_known(g) && g != space.unknown_id() {
            return Err(Error::Validation(format!(
                "ground-truth id {g} at row {i} is neither a known class nor the unknown id"
            )));
        }
    }

    let mut totals: BTreeMap<i64, usize> = BTreeMap::new();
    let mut correct: BTreeMap<i64, usize> = BTreeMap::new();
    for (&p, &g) in predictions.iter().zip(ground_truth) {
        *totals.entry(g).or_insert(0) += 1;
        if p == g {
            *correct.entry(g).or_insert(0) += 1;
        }
    }
    let mut classes: Vec<i64> = space.known_classes().to_vec();
    classes.push(space.unknown_id());
    for &c in &classes {
        if !totals.contains_key(&c) {
            return Err(Error::InvalidArgument(format!(
                "class {c} has no ground-truth samples"
            )));
        }
    }

    let mut per_class_acc = BTreeMap::new();
    for &c in &classes {
        let acc = 100.0 * *correct.get(&c).unwrap_or(&0) as f64 / totals[&c] as f64;
        per_class_acc.insert(c, acc);
    }

    let c_s = space.num_known() as f64;
    let os_star = space
        .known_classes()
        .iter()
        .map(|c| per_class_acc[c])
        .sum::<f64>()
        / c_s;
    let unk = per_class_acc[&space.unknown_id()];
    let os = (c_s * os_star + unk) / (c_s + 1.0);
    let hos_val = hos(os_star, unk);

    Ok(EvalReport {
        os_star,
        unk,
        os,
        hos: hos_val,
        per_class_acc,
        counts: totals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::build_label_space;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn hand_worked_report() {
        // Two known classes at 80% and 60%, unknown at 75%.
        let space = build_label_space(&[0, 1]).unwrap();
        let unknown = space.unknown_id();
        let mut gt = Vec::new();
        let mut pred = Vec::new();
        // class 0: 4 of 5 correct.
        for i in 0..5 {
            gt.push(0);
            pred.push(if i < 4 { 0 } else { 1 });
        }
        // class 1: 3 of 5 correct.
        for i in 0..5 {
            gt.push(1);
            pred.push(if i < 3 { 1 } else { unknown });
        }
        // unknown: 3 of 4 correct.
        for i in 0..4 {
            gt.push(unknown);
            pred.push(if i < 3 { unknown } else { 0 });
        }
        let r = evaluate(&pred, &gt, &space).unwrap();
        assert_relative_eq!(r.os_star, 70.0, max_relative = 1e-12);
        assert_relative_eq!(r.unk, 75.0, max_relative = 1e-12);
        assert_relative_eq!(r.os, (2.0 * 70.0 + 75.0) / 3.0, max_relative = 1e-12);
        assert_relative_eq!(r.hos, 2.0 * 70.0 * 75.0 / 145.0, max_relative = 1e-12);
        assert!((r.os - 71.67).abs() < 0.005);
        assert!((r.hos - 72.41).abs() < 0.005);
        assert_eq!(r.counts[&0], 5);
        assert_eq!(r.counts[&unknown], 4);
    }

    #[test]
    fn perfect_predictions_score_100() {
        let space = build_label_space(&[0, 1]).unwrap();
        let gt = vec![0, 1, space.unknown_id()];
        let r = evaluate(&gt, &gt, &space).unwrap();
        assert_eq!(r.os_star, 100.0);
        assert_eq!(r.unk, 100.0);
        assert_eq!(r.os, 100.0);
        assert_eq!(r.hos, 100.0);
    }

    #[test]
    fn hos_published_values() {
        assert!((hos(92.6, 90.4) - 91.5).abs() < 0.05);
        assert!((hos(87.5, 77.8) - 82.4).abs() < 0.05);
    }

    #[test]
    fn hos_of_equal_inputs_is_identity() {
        for x in [0.0, 12.5, 50.0, 100.0] {
            assert_relative_eq!(hos(x, x), x, max_relative = 1e-12);
        }
    }

    #[test]
    fn hos_with_zero_is_zero() {
        assert_eq!(hos(100.0, 0.0), 0.0);
        assert_eq!(hos(0.0, 0.0), 0.0);
    }

    #[test]
    fn hos_symmetric_and_bounded_by_arithmetic_mean() {
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..200 {
            let a = rng.random_range(0.0..100.0);
            let b = rng.random_range(0.0..100.0);
            assert_relative_eq!(hos(a, b), hos(b, a), max_relative = 1e-12);
            assert!(hos(a, b) <= (a + b) / 2.0 + 1e-12);
        }
    }

    #[test]
    fn os_equals_combination_formula() {
        // OS computed as the (C+1)-class mean must match the weighted
        // combination of OS* and UNK.
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..50 {
            let space = build_label_space(&[0, 1, 2, 3]).unwrap();
            let unknown = space.unknown_id();
            let mut gt = Vec::new();
            let mut pred = Vec::new();
            for &c in space.known_classes().iter().chain([unknown].iter()) {
                let n = rng.random_range(1..12usize);
                for _ in 0..n {
                    gt.push(c);
                    // random prediction among all ids
                    let options = [0, 1, 2, 3, unknown];
                    pred.push(options[rng.random_range(0..options.len())]);
                }
            }
            let r = evaluate(&pred, &gt, &space).unwrap();
            // direct (C+1)-way mean over per-class accuracies
            let mut acc_sum = 0.0;
            for &c in space.known_classes().iter().chain([unknown].iter()) {
                acc_sum += r.per_class_acc[&c];
            }
            let direct = acc_sum / (space.num_known() as f64 + 1.0);
            assert!((r.os - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn evaluate_is_permutation_invariant_and_count_free() {
        let space = build_label_space(&[0, 1]).unwrap();
        let unknown = space.unknown_id();
        // OS* weights classes equally regardless of their sizes: class 0
        // has 1 sample, class 1 has 9.
        let gt = [vec![0], vec![1; 9], vec![unknown; 2]].concat();
        let mut pred = gt.clone();
        pred[0] = 1; // class 0 fully wrong -> 0%
        let r = evaluate(&pred, &gt, &space).unwrap();
        assert_relative_eq!(r.os_star, 50.0, max_relative = 1e-12);

        // Shuffle sample order; nothing changes.
        let mut rng = StdRng::seed_from_u64(4);
        let mut order: Vec<usize> = (0..gt.len()).collect();
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let gt2: Vec<i64> = order.iter().map(|&i| gt[i]).collect();
        let pred2: Vec<i64> = order.iter().map(|&i| pred[i]).collect();
        let r2 = evaluate(&pred2, &gt2, &space).unwrap();
        assert_eq!(r, r2);
    }

    #[test]
    fn missing_class_is_error() {
        let space = build_label_space(&[0, 1]).unwrap();
        // no unknown samples
        let gt = vec![0, 1];
        match evaluate(&gt, &gt, &space) {
            Err(Error::InvalidArgument(msg)) => assert!(msg.contains('2'), "{msg}"),
            other => panic!("expected missing-class error, got {other:?}"),
        }
    }

    #[test]
    fn average_of_published_per_task_values() {
        let per_task = [91.5, 89.0, 79.3, 92.3, 78.7, 93.6];
        assert!((average(&per_task) - 87.4).abs() < 0.05);
    }
}
