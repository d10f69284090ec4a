use graphspec::generators::{generate, ModelParams};
use graphspec::spectrum::eigenvalues;
use graphspec::{Graph, ScalingMode, Seed};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn reference(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for &(a, b) in g.edges() {
        m[(a, b)] = 1.0;
        m[(b, a)] = 1.0;
    }
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn agrees_with_nalgebra_across_families() {
    let models = [
        ModelParams::Er { p: 0.1 },
        ModelParams::Dr { d: 4 },
        ModelParams::Grg { r: 0.2 },
        ModelParams::Ws { p_r: 0.3, k: 4 },
        ModelParams::Ba { p_s: 1.5, m: 1 },
    ];
    for (i, params) in models.iter().enumerate() {
        for n in [20, 150] {
            let g = generate(params, n, Seed(i as u64 * 31 + n as u64)).unwrap();
            let ours = eigenvalues::<f64>(&g, &ScalingMode::Raw).unwrap();
            let gap = max_gap(ours.values(), &reference(&g));
            assert!(gap < 1e-9, "{params:?} n={n}: {gap}");
        }
    }
}

#[test]
fn single_precision_tracks_double() {
    let g = generate(&ModelParams::Er { p: 0.2 }, 120, Seed(8)).unwrap();
    let lo = eigenvalues::<f32>(&g, &ScalingMode::SqrtN).unwrap();
    let hi = eigenvalues::<f64>(&g, &ScalingMode::SqrtN).unwrap();
    for (a, b) in lo.values().iter().zip(hi.values()) {
        assert!((*a as f64 - b).abs() < 1e-4);
    }
}

fn arb_graph() -> impl Strategy<Value = Graph> {
    (2usize..25).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..(n * 3)).prop_map(move |pairs| {
            let pairs: Vec<_> = pairs.into_iter().filter(|(a, b)| a != b).collect();
            Graph::from_edges(n, pairs).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn random_graphs_match_reference(g in arb_graph()) {
        let ours = eigenvalues::<f64>(&g, &ScalingMode::Raw).unwrap();
        prop_assert!(max_gap(ours.values(), &reference(&g)) < 1e-9);
    }

    #[test]
    fn trace_identities_hold(g in arb_graph()) {
        let s = eigenvalues::<f64>(&g, &ScalingMode::Raw).unwrap();
        let sum: f64 = s.values().iter().sum();
        let sq: f64 = s.values().iter().map(|x| x * x).sum();
        prop_assert!(sum.abs() < 1e-9);
        prop_assert!((sq - 2.0 * g.edge_count() as f64).abs() <= 1e-8 * (1.0 + sq));
    }
}
