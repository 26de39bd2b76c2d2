//! Randomized property tests for the library-wide invariants.

use dsr_core::clustering::{self, ClusteringParams, Method};
use dsr_core::field::ScalarField;
use dsr_core::metrics;
use dsr_core::raster::{
    read_label_map, write_label_map, GroundTruth, LabelMap, RasterImage,
};
use dsr_core::seeding;
use dsr_core::spectral::{
    compute_density, decompose, dft2, saliency, ComplexField, DensityMap, Direction,
    SpectralParams, DENSITY_CLAMP,
};
use proptest::prelude::*;

// ---------------------------------------------------------------- strategies

prop_compose! {
    fn complex_field(max_side: usize)
        (w in 1..=max_side, h in 1..=max_side)
        (data in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), w * h),
         w in Just(w), h in Just(h))
        -> ComplexField
    {
        let data = data
            .into_iter()
            .map(|(re, im)| num_complex::Complex64::new(re, im))
            .collect();
        ComplexField::new(w, h, data).unwrap()
    }
}

prop_compose! {
    fn srgb_image(min_side: usize, max_side: usize)
        (w in min_side..=max_side, h in min_side..=max_side)
        (bytes in proptest::collection::vec(any::<u8>(), w * h * 3),
         w in Just(w), h in Just(h))
        -> RasterImage
    {
        RasterImage::from_srgb_bytes(w, h, &bytes).unwrap()
    }
}

prop_compose! {
    fn density_field(min_side: usize, max_side: usize)
        (w in min_side..=max_side, h in min_side..=max_side)
        (exps in proptest::collection::vec(-3.0f64..3.0, w * h),
         w in Just(w), h in Just(h))
        -> DensityMap
    {
        let data = exps.into_iter().map(f64::exp).collect();
        DensityMap::new(ScalarField::new(w, h, data).unwrap()).unwrap()
    }
}

prop_compose! {
    fn label_map(max_side: usize, max_labels: u32)
        (w in 2..=max_side, h in 2..=max_side, l in 1..=max_labels)
        (raw in proptest::collection::vec(0..l, w * h),
         w in Just(w), h in Just(h))
        -> LabelMap
    {
        // compact_from renumbers and guarantees every label is present
        LabelMap::compact_from(w, h, raw).unwrap()
    }
}

prop_compose! {
    fn label_map_pair(max_side: usize, max_labels: u32)
        (w in 2..=max_side, h in 2..=max_side,
         l1 in 1..=max_labels, l2 in 1..=max_labels)
        (raw1 in proptest::collection::vec(0..l1, w * h),
         raw2 in proptest::collection::vec(0..l2, w * h),
         w in Just(w), h in Just(h))
        -> (LabelMap, LabelMap)
    {
        (
            LabelMap::compact_from(w, h, raw1).unwrap(),
            LabelMap::compact_from(w, h, raw2).unwrap(),
        )
    }
}

/// Connected-component count over 4-neighbourhoods, written independently of
/// the library's own flood fill.
fn count_components(map: &LabelMap) -> usize {
    let (w, h) = (map.width(), map.height());
    let mut seen = vec![false; w * h];
    let mut count = 0;
    for start in 0..w * h {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            let mut push = |j: usize| {
                if !seen[j] && map.labels()[j] == map.labels()[i] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                push(i - 1);
            }
            if x + 1 < w {
                push(i + 1);
            }
            if y > 0 {
                push(i - w);
            }
            if y + 1 < h {
                push(i + w);
            }
        }
    }
    count
}

/// Brute-force boundary recall: fraction of reference boundary pixels with a
/// candidate boundary pixel within `tol` (Euclidean), all pairs considered.
fn brute_recall(reference: &[bool], candidate: &[bool], w: usize, tol: f64) -> f64 {
    let coords = |mask: &[bool]| -> Vec<(f64, f64)> {
        mask.iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| ((i % w) as f64, (i / w) as f64))
            .collect()
    };
    let refs = coords(reference);
    let cands = coords(candidate);
    if refs.is_empty() {
        return 1.0;
    }
    let hit = refs
        .iter()
        .filter(|(rx, ry)| {
            cands
                .iter()
                .any(|(cx, cy)| (rx - cx).hypot(ry - cy) <= tol)
        })
        .count();
    hit as f64 / refs.len() as f64
}

fn permute(map: &LabelMap, seed: u64) -> LabelMap {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut perm: Vec<u32> = (0..map.num_labels() as u32).collect();
    perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    let relabeled = map.labels().iter().map(|&l| perm[l as usize]).collect();
    LabelMap::new(map.width(), map.height(), map.num_labels(), relabeled).unwrap()
}

// ------------------------------------------------------------------ spectral

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn transform_round_trips_any_size(field in complex_field(64)) {
        let back = dft2(&dft2(&field, Direction::Forward), Direction::Inverse);
        for (a, b) in back.values().iter().zip(field.values()) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn transform_preserves_energy(field in complex_field(64)) {
        let spec = dft2(&field, Direction::Forward);
        let spatial: f64 = field.values().iter().map(|c| c.norm_sqr()).sum();
        let spectral: f64 = spec.values().iter().map(|c| c.norm_sqr()).sum::<f64>()
            / (field.width() * field.height()) as f64;
        let scale = spatial.max(1.0);
        prop_assert!((spatial - spectral).abs() / scale < 1e-9,
            "{spatial} vs {spectral}");
    }

    #[test]
    fn saliency_pipeline_is_finite_nonnegative_and_deterministic(
        img in srgb_image(2, 24), sigma in 0.5f64..8.0,
    ) {
        let lum = dsr_core::raster::luminance(&img);
        let dec = decompose(&lum, 3, 1e-8).unwrap();
        let sal = saliency(&dec, sigma).unwrap();
        for &v in sal.field().values() {
            prop_assert!(v.is_finite() && v >= 0.0);
        }
        let dec2 = decompose(&lum, 3, 1e-8).unwrap();
        let sal2 = saliency(&dec2, sigma).unwrap();
        prop_assert_eq!(sal.field().values(), sal2.field().values());
    }

    #[test]
    fn density_stays_inside_the_clamp_interval(img in srgb_image(2, 24)) {
        let g = compute_density(&img, &SpectralParams::default()).unwrap();
        let (lo, hi) = ((-DENSITY_CLAMP).exp(), DENSITY_CLAMP.exp());
        for &v in g.field().values() {
            prop_assert!(v > 0.0 && v >= lo && v <= hi);
        }
    }
}

// ------------------------------------------------------------------- seeding

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn grid_seeding_yields_k_distinct_in_bounds_seeds(
        img in srgb_image(5, 16), frac in 0.0f64..1.0,
    ) {
        // accepted counts span [4, N/4]
        let n = img.num_pixels();
        let k = 4 + ((n / 4 - 4) as f64 * frac) as usize;
        let set = seeding::grid_seeds(&dsr_core::raster::srgb_to_lab(&img), k).unwrap();
        prop_assert_eq!(set.seeds.len(), k);
        let mut sorted = set.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), k, "duplicate seeds");
        for &(x, y) in &set.seeds {
            prop_assert!(x < img.width() && y < img.height());
        }
    }

    #[test]
    fn density_seeding_yields_k_distinct_in_bounds_seeds_deterministically(
        density in density_field(5, 16), frac in 0.0f64..1.0,
    ) {
        let n = density.width() * density.height();
        let k = 4 + ((n / 4 - 4) as f64 * frac) as usize;
        let set = seeding::density_seeds(&density, k, seeding::DEFAULT_TAU).unwrap();
        prop_assert_eq!(set.seeds.len(), k);
        let mut sorted = set.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), k, "duplicate seeds");
        for &(x, y) in &set.seeds {
            prop_assert!(x < density.width() && y < density.height());
        }
        let again = seeding::density_seeds(&density, k, seeding::DEFAULT_TAU).unwrap();
        prop_assert_eq!(set.seeds, again.seeds);
    }

    #[test]
    fn uniform_density_seeds_keep_pairwise_distance_two(
        w in 7usize..=18, h in 7usize..=18, kf in 0.0f64..1.0,
    ) {
        // Below N/9 seeds the hedging never exhausts the map, so every new
        // seed avoids all previous 8-neighbourhoods.
        let k = 4 + ((w * h / 9 - 4) as f64 * kf) as usize;
        let density = DensityMap::uniform(w, h).unwrap();
        let set = seeding::density_seeds(&density, k, seeding::DEFAULT_TAU).unwrap();
        prop_assert_eq!(set.seeds.len(), k);
        for (i, &(ax, ay)) in set.seeds.iter().enumerate() {
            for &(bx, by) in &set.seeds[i + 1..] {
                let d = (ax as f64 - bx as f64).hypot(ay as f64 - by as f64);
                prop_assert!(d >= 2.0, "seeds ({ax},{ay}) and ({bx},{by})");
            }
        }
    }
}

// ---------------------------------------------------------------- clustering

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn segmentation_is_a_connected_partition(
        img in srgb_image(8, 24), k in 4usize..=8, dsr in any::<bool>(),
    ) {
        let (method, density) = if dsr {
            (Method::Dsr, Some(compute_density(&img, &SpectralParams::default()).unwrap()))
        } else {
            (Method::Slic, None)
        };
        let out =
            clustering::segment(&img, &ClusteringParams::new(method, k), density.as_ref())
                .unwrap();
        // total labeling with compact label ids is enforced by the LabelMap
        // type; connectivity means exactly one component per label
        prop_assert_eq!(out.labels.labels().len(), img.num_pixels());
        prop_assert!(out.labels.num_labels() >= 1);
        prop_assert_eq!(count_components(&out.labels), out.labels.num_labels());
    }
}

// ------------------------------------------------------------------- metrics

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn metrics_are_perfect_on_identical_partitions(map in label_map(16, 6)) {
        let gt = GroundTruth { regions: map.clone() };
        prop_assert_eq!(metrics::boundary_recall(&gt, &map, 2.0).unwrap(), 1.0);
        prop_assert_eq!(metrics::boundary_precision(&gt, &map, 2.0).unwrap(), 1.0);
        prop_assert_eq!(metrics::undersegmentation_error(&gt, &map, 0.05).unwrap(), 0.0);
    }

    #[test]
    fn recall_and_precision_grow_with_tolerance(
        (gt, cand) in label_map_pair(12, 4), t in 0.0f64..4.0, dt in 0.0f64..4.0,
    ) {
        let gt = GroundTruth { regions: gt };
        let br1 = metrics::boundary_recall(&gt, &cand, t).unwrap();
        let br2 = metrics::boundary_recall(&gt, &cand, t + dt).unwrap();
        prop_assert!(br2 >= br1);
        let bp1 = metrics::boundary_precision(&gt, &cand, t).unwrap();
        let bp2 = metrics::boundary_precision(&gt, &cand, t + dt).unwrap();
        prop_assert!(bp2 >= bp1);
    }

    #[test]
    fn underseg_error_shrinks_as_fraction_grows(
        (gt, cand) in label_map_pair(12, 4), f in 0.0f64..0.3, df in 0.0f64..0.3,
    ) {
        let gt = GroundTruth { regions: gt };
        let u1 = metrics::undersegmentation_error(&gt, &cand, f).unwrap();
        let u2 = metrics::undersegmentation_error(&gt, &cand, f + df).unwrap();
        prop_assert!(u2 <= u1);
    }

    #[test]
    fn metrics_ignore_label_permutations(
        (gt, cand) in label_map_pair(12, 5), seed in any::<u64>(),
    ) {
        let pgt = GroundTruth { regions: permute(&gt, seed) };
        let pcand = permute(&cand, seed.wrapping_add(1));
        let gt = GroundTruth { regions: gt };
        let same = |a: f64, b: f64| (a - b).abs() < 1e-12;
        prop_assert!(same(
            metrics::boundary_recall(&gt, &cand, 2.0).unwrap(),
            metrics::boundary_recall(&pgt, &pcand, 2.0).unwrap(),
        ));
        prop_assert!(same(
            metrics::boundary_precision(&gt, &cand, 2.0).unwrap(),
            metrics::boundary_precision(&pgt, &pcand, 2.0).unwrap(),
        ));
        prop_assert!(same(
            metrics::undersegmentation_error(&gt, &cand, 0.05).unwrap(),
            metrics::undersegmentation_error(&pgt, &pcand, 0.05).unwrap(),
        ));
    }

    #[test]
    fn distance_transform_recall_matches_all_pairs_search(
        (gt, cand) in label_map_pair(16, 5), tol in 0.0f64..5.0,
    ) {
        let (w, h) = (gt.width(), gt.height());
        let rmask = metrics::boundary_mask(&gt);
        let cmask = metrics::boundary_mask(&cand);
        let fast = metrics::recall_from_boundaries(&rmask, &cmask, w, h, tol);
        let brute = brute_recall(&rmask, &cmask, w, tol);
        prop_assert_eq!(fast, brute);
    }
}

// -------------------------------------------------------------------- raster

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn label_maps_round_trip_through_png(map in label_map(16, 9)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.png");
        write_label_map(&map, &path).unwrap();
        let back = read_label_map(&path).unwrap();
        prop_assert_eq!(back.labels(), map.labels());
        prop_assert_eq!(back.num_labels(), map.num_labels());
    }
}
