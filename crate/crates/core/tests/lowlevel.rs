use std::collections::BTreeSet;

use layerscope_core::knn::NeighborhoodSpec;
use layerscope_core::lowlevel::{
    analytic_baseline, canny_edges, category_share, discretize, edge_density, per_property_share, texture_complexity,
    CannyParams, CategoryAssignment, CategoryTable, ImageRaster, Level, Property,
};
use layerscope_core::rng::SplitMix64;
use layerscope_core::synth::{gen_synthetic_image, ImageKind};
use layerscope_core::{EmbeddingMatrix, LayerRef, Metric};
use proptest::prelude::*;

fn luminance(img: &ImageRaster) -> Vec<f64> {
    let s = img.samples();
    (0..img.width() * img.height())
        .map(|i| {
            if img.channels() == 1 {
                s[i] as f64
            } else {
                0.299 * s[3 * i] as f64 + 0.587 * s[3 * i + 1] as f64 + 0.114 * s[3 * i + 2] as f64
            }
        })
        .collect()
}

/// Direct 2-D convolution with the Sobel pair.
fn naive_sobel(lum: &[f64], w: usize, h: usize) -> Vec<(f64, f64)> {
    const KX: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    const KY: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    let mut out = Vec::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let (mut gx, mut gy) = (0.0, 0.0);
            for j in 0..3 {
                for i in 0..3 {
                    let v = lum[(y + j - 1) * w + (x + i - 1)];
                    gx += KX[j][i] * v;
                    gy += KY[j][i] * v;
                }
            }
            out.push((gx, gy));
        }
    }
    out
}

/// Reference Canny: non-separable 2-D Gaussian, angle bins from explicit
/// degree ranges, breadth-first hysteresis.
fn reference_canny(img: &ImageRaster, p: &CannyParams) -> Vec<bool> {
    let (w, h) = (img.width(), img.height());
    let lum: Vec<f64> = luminance(img).iter().map(|v| v / 255.0).collect();
    let r = (3.0 * p.gaussian_sigma).ceil() as i64;
    let mut kernel = vec![];
    let mut total = 0.0;
    for j in -r..=r {
        for i in -r..=r {
            let v = (-((i * i + j * j) as f64) / (2.0 * p.gaussian_sigma * p.gaussian_sigma)).exp();
            kernel.push((i, j, v));
            total += v;
        }
    }
    let mut blurred = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let mut acc = 0.0;
            for &(i, j, v) in &kernel {
                let sx = (x + i).clamp(0, w as i64 - 1) as usize;
                let sy = (y + j).clamp(0, h as i64 - 1) as usize;
                acc += v / total * lum[sy * w + sx];
            }
            blurred[y as usize * w + x as usize] = acc;
        }
    }
    let grads = naive_sobel(&blurred, w, h);
    let mut mag = vec![0.0; w * h];
    let mut ang = vec![0.0; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let (gx, gy) = grads[(y - 1) * (w - 2) + (x - 1)];
            mag[y * w + x] = (gx * gx + gy * gy).sqrt() / (4.0 * 2f64.sqrt());
            ang[y * w + x] = gy.atan2(gx).to_degrees().rem_euclid(180.0);
        }
    }
    let mut thin = vec![0.0; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let m = mag[y * w + x];
            let a = ang[y * w + x];
            let (dx, dy): (i64, i64) = match a {
                a if !(22.5..157.5).contains(&a) => (1, 0),
                a if a < 67.5 => (1, 1),
                a if a < 112.5 => (0, 1),
                _ => (-1, 1),
            };
            let at = |dx: i64, dy: i64| mag[(y as i64 + dy) as usize * w + (x as i64 + dx) as usize];
            if m > 0.0 && m > at(dx, dy) && m >= at(-dx, -dy) {
                thin[y * w + x] = m;
            }
        }
    }
    let mut edges: Vec<bool> = thin.iter().map(|m| *m >= p.high_threshold).collect();
    let mut queue: std::collections::VecDeque<usize> = (0..w * h).filter(|&i| edges[i]).collect();
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as i64, (i / w) as i64);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64 {
                    let j = ny as usize * w + nx as usize;
                    if !edges[j] && thin[j] >= p.low_threshold {
                        edges[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    edges
}

fn pop_std(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

#[test]
fn step_edge_is_localized_and_matches_reference() {
    let img = gen_synthetic_image(ImageKind::StepEdge { column: 32 }, 64, 64, 0).unwrap();
    let p = CannyParams::default();
    let edges = canny_edges(&img, &p).unwrap();
    assert_eq!(edges, reference_canny(&img, &p));
    let cols: BTreeSet<usize> = (0..edges.len()).filter(|&i| edges[i]).map(|i| i % 64).collect();
    assert!(!cols.is_empty());
    assert!(cols.iter().all(|c| (31..=33).contains(c)), "{cols:?}");
    let density = edge_density(&img, &p).unwrap();
    assert!(density > 0.0 && density <= 3.0 / 64.0);
}

#[test]
fn canny_matches_reference_on_varied_images() {
    let params =
        [CannyParams::default(), CannyParams { gaussian_sigma: 0.8, low_threshold: 0.05, high_threshold: 0.15 }];
    for seed in 0..4 {
        let mut rng = SplitMix64::new(seed);
        // Smooth blobs plus noise give edges in all four directions.
        let (w, h) = (40, 30);
        let samples: Vec<u8> = (0..w * h * 3)
            .map(|i| {
                let px = i / 3;
                let (x, y) = ((px % w) as f64, (px / w) as f64);
                let base = if (x - 20.0).powi(2) + (y - 15.0).powi(2) < 90.0 { 200.0 } else { 40.0 };
                (base + 30.0 * rng.normal()).clamp(0.0, 255.0) as u8
            })
            .collect();
        let img = ImageRaster::new(w, h, 3, samples).unwrap();
        for p in &params {
            let got = canny_edges(&img, p).unwrap();
            let want = reference_canny(&img, p);
            let differ = got.iter().zip(&want).filter(|(a, b)| a != b).count();
            // The two pipelines blur in different summation orders, so a pixel
            // sitting exactly on a threshold could flip; none do here.
            assert_eq!(differ, 0, "seed {seed}");
        }
    }
}

#[test]
fn texture_matches_direct_convolution() {
    let mut rng = SplitMix64::new(21);
    for channels in [1, 3] {
        let samples: Vec<u8> = (0..16 * 16 * channels).map(|_| rng.below(256) as u8).collect();
        let img = ImageRaster::new(16, 16, channels, samples).unwrap();
        let mags: Vec<f64> =
            naive_sobel(&luminance(&img), 16, 16).iter().map(|(x, y)| (x * x + y * y).sqrt()).collect();
        assert!((texture_complexity(&img).unwrap() - pop_std(&mags)).abs() < 1e-9);
    }
}

#[test]
fn gray_and_equal_rgb_agree_exactly() {
    let mut rng = SplitMix64::new(4);
    let gray: Vec<u8> = (0..20 * 12).map(|_| rng.below(256) as u8).collect();
    let rgb: Vec<u8> = gray.iter().flat_map(|v| [*v, *v, *v]).collect();
    let g = ImageRaster::new(20, 12, 1, gray).unwrap();
    let c = ImageRaster::new(20, 12, 3, rgb).unwrap();
    let p = CannyParams::default();
    assert_eq!(edge_density(&g, &p).unwrap(), edge_density(&c, &p).unwrap());
    assert_eq!(texture_complexity(&g).unwrap(), texture_complexity(&c).unwrap());
}

#[test]
fn stripes_are_rougher_than_flat() {
    let flat = gen_synthetic_image(ImageKind::Constant(128), 32, 32, 0).unwrap();
    let stripes = gen_synthetic_image(ImageKind::Stripes { width: 4 }, 32, 32, 0).unwrap();
    assert!(texture_complexity(&stripes).unwrap() > texture_complexity(&flat).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn feature_ranges_and_threshold_monotonicity(seed in any::<u64>(), w in 3usize..24, h in 3usize..24, bump in 0.0f64..0.5) {
        let img = gen_synthetic_image(ImageKind::Noise, w, h, seed).unwrap();
        let p = CannyParams::default();
        let density = edge_density(&img, &p).unwrap();
        prop_assert!((0.0..=1.0).contains(&density));
        prop_assert!(texture_complexity(&img).unwrap() >= 0.0);
        let warmth = layerscope_core::lowlevel::color_warmth(&img).unwrap();
        prop_assert!((-255.0..=255.0).contains(&warmth));
        let stricter = CannyParams { high_threshold: p.high_threshold + bump, ..p };
        prop_assert!(edge_density(&img, &stricter).unwrap() <= density);
    }

    #[test]
    fn discretization_ignores_input_order(values in prop::collection::vec(-5i32..5, 9..60), g in 1usize..4, seed in any::<u64>()) {
        let named: Vec<(String, f64)> = values.iter().enumerate().map(|(i, v)| (format!("id{i:03}"), *v as f64)).collect();
        let mut shuffled = named.clone();
        SplitMix64::new(seed).shuffle(&mut shuffled);
        let a = discretize(Property::Texture, &named, g).unwrap();
        let b = discretize(Property::Texture, &shuffled, g).unwrap();
        prop_assert_eq!(&a, &b);
        for set in &a {
            prop_assert_eq!(set.members.len(), g);
        }
        prop_assert!(a[0].members.is_disjoint(&a[1].members));
        prop_assert!(a[1].members.is_disjoint(&a[2].members));
        prop_assert!(a[0].members.is_disjoint(&a[2].members));
    }
}

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("img{i:04}")).collect()
}

/// Nine disjoint categories of `size` images: image `i` is in category `i % 9`.
fn disjoint_categories(size: usize) -> (Vec<String>, Vec<CategoryAssignment>) {
    let all = ids(9 * size);
    let mut out = Vec::new();
    for (c, (property, level)) in
        Property::ALL.iter().flat_map(|p| Level::ALL.iter().map(move |l| (*p, *l))).enumerate()
    {
        let members = all.iter().enumerate().filter(|(i, _)| i % 9 == c).map(|(_, id)| id.clone()).collect();
        out.push(CategoryAssignment { property, level, members });
    }
    (all, out)
}

#[test]
fn full_neighborhood_share_equals_population_share() {
    let (all, cats) = disjoint_categories(6);
    let mut overlapping = cats.clone();
    overlapping[0].members.insert(all[1].clone());
    overlapping[4].members.insert(all[0].clone());
    let (table, _) = CategoryTable::build(&all, &overlapping).unwrap();
    let mut rng = SplitMix64::new(2);
    let values = (0..table.len() * 3).map(|_| rng.normal() as f32).collect();
    let layer = EmbeddingMatrix::new(table.len(), 3, values, LayerRef::anonymous()).unwrap();
    let spec = NeighborhoodSpec::new(table.len() - 1).unwrap();
    assert_eq!(
        category_share(std::slice::from_ref(&layer), &table, spec, Metric::Euclidean).unwrap()[0],
        analytic_baseline(&table, None)
    );
    assert_eq!(
        per_property_share(&[layer], &table, spec, Metric::Euclidean, Property::Warmth).unwrap()[0],
        analytic_baseline(&table, Some(Property::Warmth))
    );
}

#[test]
fn tight_category_clusters_share_everything() {
    let (all, cats) = disjoint_categories(20);
    let (table, _) = CategoryTable::build(&all, &cats).unwrap();
    let mut rng = SplitMix64::new(5);
    let values: Vec<f32> = (0..table.len())
        .flat_map(|i| {
            let c = i % 9;
            (0..9).map(|j| if j == c { 50.0 } else { 0.0 }).collect::<Vec<f32>>()
        })
        .map(|v| v + 0.1 * rng.normal() as f32)
        .collect();
    let layer = EmbeddingMatrix::new(table.len(), 9, values, LayerRef::anonymous()).unwrap();
    let spec = NeighborhoodSpec::new(10).unwrap();
    assert_eq!(category_share(std::slice::from_ref(&layer), &table, spec, Metric::Euclidean).unwrap(), [1.0]);
    assert_eq!(per_property_share(&[layer], &table, spec, Metric::Cosine, Property::Edges).unwrap(), [1.0]);
}

#[test]
fn duplicates_with_k_one_share_everything() {
    let (all, cats) = disjoint_categories(4);
    let (table, _) = CategoryTable::build(&all, &cats).unwrap();
    let mut rng = SplitMix64::new(6);
    // Rows 2j and 2j+1 are copies and sit in categories (2j % 9) and
    // ((2j+1) % 9); relabel so each pair shares a category.
    let mut assign = cats.clone();
    for a in &mut assign {
        a.members.clear();
    }
    let mut rows = Vec::new();
    for j in 0..all.len() / 2 {
        let v: Vec<f32> = (0..4).map(|_| rng.normal() as f32).collect();
        rows.push(v.clone());
        rows.push(v);
        assign[j % 9].members.insert(all[2 * j].clone());
        assign[j % 9].members.insert(all[2 * j + 1].clone());
    }
    let (table2, kept) = CategoryTable::build(&all, &assign).unwrap();
    assert_eq!(kept.len(), all.len());
    assert_eq!(table.len(), table2.len());
    let layer = EmbeddingMatrix::from_rows(&rows, LayerRef::anonymous()).unwrap();
    let spec = NeighborhoodSpec::new(1).unwrap();
    assert_eq!(category_share(std::slice::from_ref(&layer), &table2, spec, Metric::Euclidean).unwrap(), [1.0]);
    let property = assign[0].property;
    assert_eq!(per_property_share(&[layer], &table2, spec, Metric::Euclidean, property).unwrap(), [1.0]);
}

#[test]
fn share_requires_k_below_population() {
    let (all, cats) = disjoint_categories(2);
    let (table, _) = CategoryTable::build(&all, &cats).unwrap();
    let layer = EmbeddingMatrix::new(18, 1, (0..18).map(|v| v as f32).collect(), LayerRef::anonymous()).unwrap();
    assert!(category_share(&[layer], &table, NeighborhoodSpec::new(18).unwrap(), Metric::Euclidean).is_err());
}
