mod common;

use std::collections::BTreeMap;

use common::gaussian;
use layerscope_core::coherence::{
    coherence_curve, neighborhood_coherence, CoherenceOptions, LabelIndex, LabelSet, PairScope, Spread,
};
use layerscope_core::imbalance::information_imbalance;
use layerscope_core::probes::{
    accuracy_on, class_trajectory, multiclass_trajectory, probe_accuracy, roughness, roughness_distribution,
    train_probe, Histogram, ProbeHyperparams, Trajectory,
};
use layerscope_core::rng::SplitMix64;
use layerscope_core::synth::{gen_gaussian_clusters, gen_margin_pair, gen_noisy_copy, gen_two_process};
use layerscope_core::{EmbeddingMatrix, Error, LayerRef, Metric, NeighborhoodSpec};

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("im{i:04}")).collect()
}

fn labels_for(ids: &[String], groups: &[usize]) -> BTreeMap<String, LabelSet> {
    ids.iter()
        .zip(groups)
        .map(|(id, g)| (id.clone(), [format!("group{g}"), "thing".to_string()].into_iter().collect()))
        .collect()
}

/// Layers in which each group's points are pulled towards the group center
/// by an increasing factor.
fn tightening_stack(n: usize, groups: &[usize], n_layers: usize, seed: u64) -> Vec<EmbeddingMatrix> {
    let base = gaussian(n, 6, seed);
    let mut rng = SplitMix64::new(seed ^ 99);
    let centers: Vec<Vec<f64>> = (0..8).map(|_| (0..6).map(|_| 3.0 * rng.normal()).collect()).collect();
    (0..n_layers)
        .map(|l| {
            let t = 0.6 * l as f64 / (n_layers - 1) as f64;
            let values = (0..n)
                .flat_map(|i| {
                    let c = &centers[groups[i]];
                    base.row(i)
                        .iter()
                        .zip(c)
                        .map(move |(v, m)| ((1.0 - t) * *v as f64 + t * (m + 0.05 * *v as f64)) as f32)
                })
                .collect();
            EmbeddingMatrix::new(n, 6, values, LayerRef::new("tight", l, n_layers).unwrap()).unwrap()
        })
        .collect()
}

#[test]
fn coherence_rises_as_groups_tighten() {
    let n = 400;
    let groups: Vec<usize> = (0..n).map(|i| i % 8).collect();
    let all = ids(n);
    let index = LabelIndex::new(&all, &labels_for(&all, &groups));
    let layers = tightening_stack(n, &groups, 5, 3);
    let curve = coherence_curve(&layers, &index, &CoherenceOptions { seed: 11, ..Default::default() }).unwrap();
    for w in curve.windows(2) {
        assert!(w[1].mean > w[0].mean, "{:?}", curve.iter().map(|p| p.mean).collect::<Vec<_>>());
    }
    assert!(curve.last().unwrap().mean > 0.9);
    assert_eq!(curve[0].n_queries, 50);
    assert_eq!(curve[0].k, 10);
}

#[test]
fn identical_layers_give_flat_curve_and_seed_matters_only_when_sampling() {
    let n = 120;
    let groups: Vec<usize> = (0..n).map(|i| i % 5).collect();
    let all = ids(n);
    let index = LabelIndex::new(&all, &labels_for(&all, &groups));
    let layer = gaussian(n, 4, 1);
    let layers = vec![layer.clone(), layer.clone(), layer];
    let opts = CoherenceOptions { n_queries: 30, seed: 2, ..Default::default() };
    let curve = coherence_curve(&layers, &index, &opts).unwrap();
    assert!(curve.iter().all(|p| p.mean == curve[0].mean && p.std == curve[0].std));
    assert_eq!(curve, coherence_curve(&layers, &index, &opts).unwrap());

    let everyone = CoherenceOptions { n_queries: n, ..opts };
    let a = coherence_curve(&layers, &index, &CoherenceOptions { seed: 1, ..everyone }).unwrap();
    let b = coherence_curve(&layers, &index, &CoherenceOptions { seed: 999, ..everyone }).unwrap();
    assert_eq!(a, b);
    assert!(coherence_curve(&layers, &index, &CoherenceOptions { n_queries: n + 1, ..opts }).is_err());
}

#[test]
fn coherence_is_invariant_to_renaming_labels() {
    let n = 150;
    let groups: Vec<usize> = (0..n).map(|i| (i * 7) % 6).collect();
    let all = ids(n);
    let labels = labels_for(&all, &groups);
    let renamed: BTreeMap<String, LabelSet> = labels
        .iter()
        .map(|(id, set)| {
            (id.clone(), set.iter().map(|l| format!("zz-{}", l.chars().rev().collect::<String>())).collect())
        })
        .collect();
    let layers = tightening_stack(n, &groups, 3, 8);
    for spread in [Spread::Pooled, Spread::PerNeighborhood] {
        for scope in [PairScope::QueryNeighbor, PairScope::AllPairs] {
            let opts = CoherenceOptions { n_queries: 40, seed: 5, scope, spread, ..Default::default() };
            let a = coherence_curve(&layers, &LabelIndex::new(&all, &labels), &opts).unwrap();
            let b = coherence_curve(&layers, &LabelIndex::new(&all, &renamed), &opts).unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn random_labels_from_large_vocabulary_have_low_coherence() {
    let n = 300;
    let mut rng = SplitMix64::new(12);
    let all = ids(n);
    let labels: BTreeMap<String, LabelSet> =
        all.iter().map(|id| (id.clone(), (0..3).map(|_| format!("w{}", rng.below(5000))).collect())).collect();
    let index = LabelIndex::new(&all, &labels);
    let layer = gaussian(n, 5, 4);
    let curve = coherence_curve(&[layer], &index, &CoherenceOptions::default()).unwrap();
    assert!(curve[0].mean < 0.01);
}

#[test]
fn duplicate_image_is_fully_coherent() {
    let rows = vec![vec![0.0f32, 1.0], vec![0.0, 1.0], vec![5.0, 5.0], vec![-3.0, 2.0]];
    let m = EmbeddingMatrix::from_rows(&rows, LayerRef::anonymous()).unwrap();
    let all = ids(4);
    let labels = labels_for(&all, &[0, 0, 1, 2]);
    let result = neighborhood_coherence(
        1,
        &m,
        &LabelIndex::new(&all, &labels),
        NeighborhoodSpec::new(1).unwrap(),
        Metric::Euclidean,
        PairScope::QueryNeighbor,
    )
    .unwrap();
    assert_eq!(result.mean, 1.0);
    assert_eq!(result.values, [1.0]);
}

#[test]
fn margin_pair_is_separable_and_training_is_deterministic() {
    let (x, y) = gen_margin_pair(1000, 10, 3.0, 17).unwrap();
    let hp = ProbeHyperparams { seed: 4, ..Default::default() };
    let (model, split) = train_probe(&x, &y, &hp, "pos").unwrap();
    let acc = accuracy_on(&model, &x, &y, &split.heldout).unwrap();
    assert!(acc >= 0.99, "{acc}");
    let (again, _) = train_probe(&x, &y, &hp, "pos").unwrap();
    assert_eq!(model, again);
}

#[test]
fn shuffled_labels_give_chance_accuracy() {
    let mut accs = Vec::new();
    for seed in 0..10 {
        let (x, mut y) = gen_margin_pair(1000, 10, 3.0, seed).unwrap();
        SplitMix64::new(seed + 100).shuffle(&mut y);
        let hp = ProbeHyperparams { seed, ..Default::default() };
        let (model, split) = train_probe(&x, &y, &hp, "pos").unwrap();
        accs.push(accuracy_on(&model, &x, &y, &split.heldout).unwrap());
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    assert!((mean - 0.5).abs() <= 0.1, "{accs:?}");
}

#[test]
fn zero_epochs_predict_positive_everywhere() {
    let (x, _) = gen_margin_pair(200, 4, 1.0, 3).unwrap();
    let y: Vec<bool> = (0..200).map(|i| i % 4 != 0).collect();
    let hp = ProbeHyperparams { epochs: 0, ..Default::default() };
    let (model, _) = train_probe(&x, &y, &hp, "c").unwrap();
    assert!(model.weights.iter().all(|w| *w == 0.0));
    assert_eq!(model.bias, 0.0);
    assert_eq!(probe_accuracy(&model, &x, &y).unwrap(), 0.75);
}

#[test]
fn noise_dimensions_do_not_break_separable_probe() {
    let (x, y) = gen_margin_pair(1000, 10, 3.0, 5).unwrap();
    let mut rng = SplitMix64::new(6);
    let rows: Vec<Vec<f32>> =
        x.rows().map(|r| r.iter().copied().chain((0..40).map(|_| rng.normal() as f32)).collect()).collect();
    let wide = EmbeddingMatrix::from_rows(&rows, LayerRef::anonymous()).unwrap();
    let (model, split) = train_probe(&wide, &y, &ProbeHyperparams::default(), "c").unwrap();
    assert!(accuracy_on(&model, &wide, &y, &split.heldout).unwrap() >= 0.95);
}

#[test]
fn identical_layers_give_constant_trajectory() {
    let (x, y) = gen_margin_pair(300, 6, 1.0, 9).unwrap();
    let layers: Vec<EmbeddingMatrix> =
        (0..4).map(|i| x.clone().with_layer(LayerRef::new("same", i, 4).unwrap())).collect();
    let t = class_trajectory(&layers, &y, &ProbeHyperparams::default(), "c").unwrap();
    assert!(t.accuracies.iter().all(|a| *a == t.accuracies[0]));
    assert_eq!(t.roughness, 0.0);
    assert_eq!(t.model, "same");
}

#[test]
fn signal_only_in_even_layers_makes_rough_trajectory() {
    let (signal, y) = gen_margin_pair(600, 8, 3.0, 2).unwrap();
    let noise = gaussian(600, 8, 77);
    let layers: Vec<EmbeddingMatrix> = (0..6)
        .map(|i| {
            let m = if i % 2 == 0 { signal.clone() } else { noise.clone() };
            m.with_layer(LayerRef::new("alt", i, 6).unwrap())
        })
        .collect();
    let t = class_trajectory(&layers, &y, &ProbeHyperparams::default(), "c").unwrap();
    let diffs: Vec<f64> = t.accuracies.windows(2).map(|w| w[1] - w[0]).collect();
    let m = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let direct = (diffs.iter().map(|d| (d - m).powi(2)).sum::<f64>() / diffs.len() as f64).sqrt();
    assert!((t.roughness - direct).abs() < 1e-15);
    assert!(t.roughness > 0.3, "{:?}", t.accuracies);
    for (i, a) in t.accuracies.iter().enumerate() {
        if i % 2 == 0 {
            assert!(*a >= 0.95);
        } else {
            assert!(*a < 0.75);
        }
    }
}

#[test]
fn roughness_constants() {
    assert_eq!(roughness(&[0.0, 0.5, 0.0, 0.5, 0.0]).unwrap(), 0.5);
    assert_eq!(roughness(&[0.5, 0.5625, 0.625, 0.6875]).unwrap(), 0.0);
    assert!(matches!(roughness(&[0.1, 0.2]), Err(Error::SeriesTooShort { .. })));
}

#[test]
fn roughness_histogram_is_bimodal_for_mixture() {
    let mut ts = Vec::new();
    for i in 0..10 {
        let accuracies = if i % 2 == 0 { vec![0.5, 0.625, 0.75, 0.875] } else { vec![0.0, 0.5, 0.0, 0.5, 0.0] };
        let r = roughness(&accuracies).unwrap();
        ts.push(Trajectory { model: "m".into(), class_id: format!("c{i}"), accuracies, roughness: r });
    }
    let dist = roughness_distribution(&ts).unwrap();
    let h = &dist.histograms["m"];
    assert_eq!(h.counts[0], 5);
    assert_eq!(h.counts[25], 5);
    assert_eq!(h.counts.iter().sum::<usize>(), 10);
    assert_eq!(h.counts.len(), Histogram::BINS);
    let single = roughness_distribution(&ts[..1]).unwrap();
    assert_eq!(single.per_model["m"].len(), 1);
    assert!(roughness_distribution(&[]).is_err());
}

#[test]
fn multiclass_clusters_and_chance() {
    let (x, labels) = gen_gaussian_clusters(900, 10, 3, 10.0, 4).unwrap();
    let layers: Vec<EmbeddingMatrix> =
        (0..3).map(|i| x.clone().with_layer(LayerRef::new("id", i, 3).unwrap())).collect();
    let accs = multiclass_trajectory(&layers, &labels, &ProbeHyperparams::default()).unwrap();
    assert!(accs.iter().all(|a| *a >= 0.99), "{accs:?}");

    let mut shuffled = labels.clone();
    let mut chance = Vec::new();
    for seed in 0..5 {
        SplitMix64::new(seed).shuffle(&mut shuffled);
        let hp = ProbeHyperparams { seed, ..Default::default() };
        chance.extend(multiclass_trajectory(&layers[..1], &shuffled, &hp).unwrap());
    }
    let mean = chance.iter().sum::<f64>() / chance.len() as f64;
    assert!((mean - 1.0 / 3.0).abs() < 0.1, "{chance:?}");

    assert_eq!(multiclass_trajectory(&layers, &vec![2; 900], &ProbeHyperparams::default()), Err(Error::SingleClass));
}

#[test]
fn two_class_multiclass_agrees_with_binary() {
    let (x, y) = gen_margin_pair(400, 6, 1.0, 21).unwrap();
    let layers: Vec<EmbeddingMatrix> = (0..3).map(|i| gen_noisy_copy(&x, 0.5 * i as f64, i as u64).unwrap()).collect();
    let hp = ProbeHyperparams { seed: 3, ..Default::default() };
    let binary = class_trajectory(&layers, &y, &hp, "1").unwrap();
    let classes: Vec<usize> = y.iter().map(|&b| usize::from(b)).collect();
    let multi = multiclass_trajectory(&layers, &classes, &hp).unwrap();
    for (a, b) in binary.accuracies.iter().zip(&multi) {
        // One heldout example is 1/40; only exact score ties could differ.
        assert!((a - b).abs() <= 1.0 / 40.0 + 1e-12, "{a} vs {b}");
    }
}

#[test]
fn two_process_construction() {
    let mut first_layer_hits = 0;
    for seed in 0..10 {
        let tp = gen_two_process(2000, seed).unwrap();
        let (a, b) = (&tp.stack_a, &tp.stack_b);
        assert_eq!(information_imbalance(&a[2], &b[2], Metric::Euclidean).unwrap(), 2.0 / 2000.0);
        assert_eq!(information_imbalance(&b[2], &a[2], Metric::Euclidean).unwrap(), 2.0 / 2000.0);
        if information_imbalance(&a[0], &b[0], Metric::Euclidean).unwrap() >= 0.3 {
            first_layer_hits += 1;
        }
        let far = information_imbalance(&a[0], &a[2], Metric::Euclidean).unwrap();
        let near = information_imbalance(&a[1], &a[2], Metric::Euclidean).unwrap();
        assert!(far > near, "seed {seed}: {far} vs {near}");
    }
    assert!(first_layer_hits >= 9);
}

#[test]
fn separation_zero_clusters_are_chance_for_probes() {
    let (x, labels) = gen_gaussian_clusters(900, 10, 3, 0.0, 1).unwrap();
    let layers = vec![x];
    let acc = multiclass_trajectory(&layers, &labels, &ProbeHyperparams::default()).unwrap()[0];
    assert!((acc - 1.0 / 3.0).abs() < 0.12, "{acc}");
}
