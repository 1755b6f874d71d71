use proptest::prelude::*;

use qsarbench::chem::{canonical_smiles, parse_smiles, write_smiles};
use qsarbench::datasplit::{random_folds, TaskKind};
use qsarbench::featurize::{ecfp, tanimoto};
use qsarbench::harness::derive_seed;
use qsarbench::metrics::{class_precision_recall, pearson, pr_auc, regression_metrics, roc_auc};
use qsarbench::synth::{render, SCAFFOLDS, SUBSTITUENTS};

/// Labels with at least one of each class, paired with scores.
fn labelled(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2..max).prop_flat_map(|n| {
        (
            proptest::collection::vec(prop::bool::ANY, n),
            proptest::collection::vec(-20i32..20, n),
        )
            .prop_map(|(mut y, s)| {
                y[0] = true;
                let last = y.len() - 1;
                y[last] = false;
                (
                    y.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect(),
                    s.into_iter().map(f64::from).collect(),
                )
            })
    })
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

fn stepwise_ap(order: &[usize], y: &[f64]) -> f64 {
    let (mut tp, mut sum) = (0.0, 0.0);
    for (k, &i) in order.iter().enumerate() {
        if y[i] == 1.0 {
            tp += 1.0;
            sum += tp / (k + 1) as f64;
        }
    }
    sum / tp
}

fn molecule() -> impl Strategy<Value = String> {
    (0..SCAFFOLDS.len(), 0..SUBSTITUENTS.len(), 0..SUBSTITUENTS.len()).prop_map(|(s, a, b)| render(s, a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn roc_is_bounded_and_flips_under_negation((y, s) in labelled(80)) {
        let a = roc_auc(&s, &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        prop_assert!((roc_auc(&neg, &y).unwrap() - (1.0 - a)).abs() < 1e-12);
    }

    #[test]
    fn ranking_metrics_ignore_monotone_transforms((y, s) in labelled(80)) {
        let t: Vec<f64> = s.iter().map(|v| (v / 7.0).exp() * 3.0 - 1.0).collect();
        prop_assert!((roc_auc(&s, &y).unwrap() - roc_auc(&t, &y).unwrap()).abs() < 1e-12);
        prop_assert!((pr_auc(&s, &y).unwrap() - pr_auc(&t, &y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pr_auc_is_bounded((y, s) in labelled(80)) {
        let ap = pr_auc(&s, &y).unwrap();
        prop_assert!(ap > 0.0 && ap <= 1.0 + 1e-12);
    }

    #[test]
    fn tied_scores_give_expected_precision_over_orderings((y, s) in labelled(7)) {
        // brute force: average the step-wise AP over every ordering that
        // respects the score order
        let n = y.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let (mut total, mut count) = (0.0, 0usize);
        permute(&mut perm, 0, &mut |p| {
            if p.windows(2).all(|w| s[w[0]] >= s[w[1]]) {
                total += stepwise_ap(p, &y);
                count += 1;
            }
        });
        prop_assert!((pr_auc(&s, &y).unwrap() - total / count as f64).abs() < 1e-12);
    }

    #[test]
    fn perfect_ranking_scores_one((y, _) in labelled(60)) {
        prop_assert_eq!(roc_auc(&y, &y).unwrap(), 1.0);
        prop_assert!((pr_auc(&y, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn class_report_counts_are_consistent((y, s) in labelled(60), threshold in -5.0f64..5.0) {
        let r = class_precision_recall(&s, &y, threshold);
        for v in [r.p0, r.r0, r.p1, r.r1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let pos = y.iter().filter(|&&v| v == 1.0).count() as f64;
        let tp = s.iter().zip(&y).filter(|(&p, &l)| p >= threshold && l == 1.0).count() as f64;
        prop_assert!((r.r1 - tp / pos).abs() < 1e-12);
    }

    #[test]
    fn regression_metrics_are_shift_and_scale_aware(
        t in proptest::collection::vec(-10.0f64..10.0, 3..50),
        noise in proptest::collection::vec(-1.0f64..1.0, 50),
        scale in 0.1f64..10.0,
    ) {
        let p: Vec<f64> = t.iter().zip(&noise).map(|(a, e)| a + e).collect();
        let r = regression_metrics(&p, &t);
        prop_assert!(r.mae >= 0.0);
        if let Ok(base) = pearson(&p, &t) {
            let scaled: Vec<f64> = p.iter().map(|v| v * scale + 3.0).collect();
            prop_assert!((pearson(&scaled, &t).unwrap() - base).abs() < 1e-9);
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&base));
        }
        let shifted: Vec<f64> = t.iter().map(|v| v + 2.0).collect();
        prop_assert!((regression_metrics(&shifted, &t).mae - 2.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_form_ignores_atom_order(smiles in molecule(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let m = parse_smiles(&smiles).unwrap();
        let canon = canonical_smiles(&m);
        let mut perm: Vec<usize> = (0..m.atom_count()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha20Rng::seed_from_u64(seed));
        let p = m.permuted(&perm);
        let order: Vec<usize> = (0..p.atom_count()).collect();
        let text = write_smiles(&p, &order);
        prop_assert_eq!(canonical_smiles(&parse_smiles(&text).unwrap()), canon.clone());
        // canonical strings are fixed points
        prop_assert_eq!(canonical_smiles(&parse_smiles(&canon).unwrap()), canon);
    }

    #[test]
    fn tanimoto_is_symmetric_and_bounded(a in molecule(), b in molecule()) {
        let fa = ecfp(&parse_smiles(&a).unwrap(), 2, 2048);
        let fb = ecfp(&parse_smiles(&b).unwrap(), 2, 2048);
        let ab = tanimoto(&fa, &fb).unwrap();
        prop_assert_eq!(ab, tanimoto(&fb, &fa).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(tanimoto(&fa, &fa).unwrap(), 1.0);
    }

    #[test]
    fn random_folds_are_balanced(n in 5usize..500, k in 2usize..8, seed in any::<u64>()) {
        prop_assume!(n >= k);
        let f = random_folds(n, k, seed);
        prop_assert_eq!(f.len(), n);
        let mut sizes = vec![0usize; k];
        for &x in &f {
            sizes[x] += 1;
        }
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(f, random_folds(n, k, seed));
    }

    #[test]
    fn cell_seeds_are_stable_and_distinct(global in any::<u64>(), fold in 0usize..10) {
        let a = derive_seed(global, "task", "rf_ecfp4", fold);
        prop_assert_eq!(a, derive_seed(global, "task", "rf_ecfp4", fold));
        prop_assert_ne!(a, derive_seed(global, "task", "rf_ecfp4", fold + 1));
        prop_assert_ne!(a, derive_seed(global, "task", "gbdt_ecfp4", fold));
        prop_assert_ne!(a, derive_seed(global, "other", "rf_ecfp4", fold));
    }
}

#[test]
fn task_kind_names_round_trip() {
    for k in [TaskKind::Classification, TaskKind::Regression] {
        let json = serde_json::to_string(&k).unwrap();
        assert_eq!(json, format!("\"{k}\""));
    }
}
