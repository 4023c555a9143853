use rabi_core::oracle::{converged_spectrum, parity_blocks, eigenvalues, ModelTag};
use rabi_core::spectrum::{
    find_exceptional, find_regular, full_spectrum, interval_counts, lowest_levels, lowest_levels_eps,
    schweber_roots, spectrum_eps, LevelKind, ScanOptions,
};
use rabi_core::{ModelParams, Parity};

fn rabi(g: f64, d: f64) -> ModelParams {
    ModelParams::rabi(1.0, g, d).unwrap()
}

fn block_levels(params: &ModelParams, parity: Parity, n_tr: usize) -> Vec<f64> {
    let (plus, minus) = parity_blocks(params, n_tr).unwrap();
    let h = if parity == Parity::Plus { plus } else { minus };
    eigenvalues(&h).unwrap()
}

#[test]
fn regular_roots_match_parity_blocks() {
    let params = rabi(0.7, 0.4);
    let opts = ScanOptions::default();
    for parity in Parity::BOTH {
        let roots = find_regular(parity, -1.0, 5.0, &params, &opts).unwrap();
        let oracle = block_levels(&params, parity, 200);
        for (r, o) in roots.iter().zip(&oracle) {
            assert!((r.energy - o).abs() < 1e-8, "{parity} {}: {} vs {o}", r.index, r.energy);
        }
    }
}

#[test]
fn same_parity_brackets_are_disjoint() {
    let params = rabi(0.9, 0.7);
    let roots = find_regular(Parity::Plus, -1.0, 8.0, &params, &ScanOptions::default()).unwrap();
    for w in roots.windows(2) {
        assert!(w[0].bracket.1 <= w[1].bracket.0);
        assert!(w[1].x_root > w[0].x_root);
    }
}

#[test]
fn first_ten_levels_match_oracle_across_parameters() {
    let opts = ScanOptions::default();
    for (g, d) in [(0.2, 0.3), (0.5, 0.9), (1.0, 1.0), (0.85, 0.15)] {
        let params = rabi(g, d);
        let oracle = converged_spectrum(ModelTag::Rabi, &params, 10, None).unwrap().levels;
        let mut solver: Vec<f64> = Parity::BOTH
            .iter()
            .flat_map(|&p| lowest_levels(p, 10, &params, &opts).unwrap())
            .map(|e| e.energy)
            .collect();
        solver.sort_by(f64::total_cmp);
        for (a, b) in solver.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "g={g} d={d}: {a} vs {b}");
        }
    }
}

#[test]
fn full_spectrum_at_reference_point() {
    let levels = full_spectrum(&rabi(0.7, 0.4), 5.0, &ScanOptions::default()).unwrap();
    let regular: Vec<_> = levels.iter().filter(|e| e.kind == LevelKind::Regular).collect();
    assert_eq!(regular.len(), 11);
    assert_eq!(levels.len(), 11);
    assert_eq!(levels[0].parity, Some(Parity::Minus));
    assert!(levels.windows(2).all(|w| w[0].energy <= w[1].energy));
}

#[test]
fn user_units_scale() {
    let opts = ScanOptions::default();
    let unit = find_regular(Parity::Minus, -1.0, 3.0, &rabi(0.7, 0.4), &opts).unwrap();
    let scaled = find_regular(Parity::Minus, -1.0, 3.0, &ModelParams::rabi(2.5, 1.75, 1.0).unwrap(), &opts).unwrap();
    assert_eq!(unit.len(), scaled.len());
    for (a, b) in unit.iter().zip(&scaled) {
        assert!((2.5 * a.energy - b.energy).abs() < 1e-11);
    }
}

#[test]
fn interval_occupation_is_at_most_two() {
    let opts = ScanOptions::default();
    for (g, d) in [(0.7, 0.4), (0.3, 0.8), (1.2, 0.6)] {
        let levels = full_spectrum(&rabi(g, d), 30.0, &opts).unwrap();
        for parity in Parity::BOTH {
            let counts = interval_counts(&levels, parity, 30);
            assert!(counts.iter().all(|&c| c <= 2), "g={g} d={d} {parity}: {counts:?}");
        }
    }
}

#[test]
fn zero_splitting_levels_sit_on_baselines() {
    let params = rabi(0.6, 0.0);
    let opts = ScanOptions::default();
    // Δ = 0: G± has no zeros; every level is a doubly degenerate baseline
    assert!(find_regular(Parity::Plus, -0.5, 4.5, &params, &opts).unwrap().is_empty());
    let levels = full_spectrum(&params, 4.5, &opts).unwrap();
    assert_eq!(levels.len(), 10);
    let oracle = converged_spectrum(ModelTag::Rabi, &params, 10, None).unwrap().levels;
    for (e, o) in levels.iter().zip(&oracle) {
        assert_eq!(e.kind, LevelKind::Exceptional);
        assert!((e.energy - o).abs() < 1e-10);
    }
}

#[test]
fn exceptional_points_are_certified_by_oracle() {
    let opts = ScanOptions::default();
    let params = rabi(0.5, 0.6);
    let pts = find_exceptional(1, &params, 0.01, 1.0, &opts).unwrap();
    assert_eq!(pts.len(), 1);
    let at = params.with_g(pts[0].g);
    for parity in Parity::BOTH {
        let ev = block_levels(&at, parity, 200);
        let best = ev.iter().map(|e| (e - pts[0].energy).abs()).fold(f64::INFINITY, f64::min);
        assert!(best < 1e-8);
    }
    // higher baselines: each returned point is doubly degenerate in the oracle
    for n in 2..=3 {
        for pt in find_exceptional(n, &params, 0.01, 1.5, &opts).unwrap() {
            let at = params.with_g(pt.g);
            for parity in Parity::BOTH {
                let ev = block_levels(&at, parity, 250);
                let best = ev.iter().map(|e| (e - pt.energy).abs()).fold(f64::INFINITY, f64::min);
                assert!(best < 1e-8, "n={n} g={}", pt.g);
            }
        }
    }
}

#[test]
fn eps_roots_match_oracle() {
    let opts = ScanOptions::default();
    let params = ModelParams::new(1.0, 0.5, 0.7, 0.2).unwrap();
    let roots = spectrum_eps(&params, -1.0, 5.0, &opts).unwrap();
    let oracle = converged_spectrum(ModelTag::RabiEps, &params, roots.len(), None).unwrap().levels;
    for (r, o) in roots.iter().zip(&oracle) {
        assert!((r.energy - o).abs() < 1e-8, "{} vs {o}", r.energy);
        assert!(r.parity.is_none());
    }
}

#[test]
fn eps_zero_reproduces_both_parities() {
    let opts = ScanOptions::default();
    let params = rabi(0.7, 0.4);
    let eps = spectrum_eps(&params, -1.0, 5.0, &opts).unwrap();
    let full = full_spectrum(&params, 5.0, &opts).unwrap();
    assert_eq!(eps.len(), full.len());
    for (a, b) in eps.iter().zip(&full) {
        assert!((a.x_root - b.x_root).abs() < 1e-10);
    }
}

#[test]
fn eps_weak_coupling_approaches_two_level_values() {
    let params = ModelParams::new(1.0, 0.02, 0.7, 0.2).unwrap();
    let levels = lowest_levels_eps(4, &params, &ScanOptions::default()).unwrap();
    let r = (0.7f64 * 0.7 + 0.2 * 0.2).sqrt();
    let want = [-r, 1.0 - r, r, 2.0 - r];
    for (e, w) in levels.iter().zip(want) {
        assert!((e.energy - w).abs() < 5e-3, "{} vs {w}", e.energy);
    }
}

#[test]
fn schweber_roots_are_the_union_of_both_parities() {
    let params = rabi(0.7, 0.4);
    let opts = ScanOptions::default();
    let roots = schweber_roots(&params, -1.0, 5.0, &opts).unwrap();
    let mut union: Vec<f64> = Parity::BOTH
        .iter()
        .flat_map(|&p| find_regular(p, -1.0, 5.0, &params, &opts).unwrap())
        .map(|e| e.x_root)
        .collect();
    union.sort_by(f64::total_cmp);
    assert_eq!(roots.len(), union.len());
    for (a, b) in roots.iter().zip(&union) {
        assert!((a - b).abs() < 1e-8);
    }
}
