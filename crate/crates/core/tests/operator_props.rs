use fmhsdm::affine::{
    make_consensus_projection, make_hyperplane_projection, make_ls_map, sandwich_compose, AffineFneMap, AffineMap,
    LsVariant,
};
use fmhsdm::linalg::{DenseMatrix, SymOperator};
use proptest::collection::vec;
use proptest::prelude::*;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

// (normal, offset, probe) triples of a shared dimension
fn hyperplane_data() -> impl Strategy<Value = (Vec<f64>, f64, Vec<f64>)> {
    (1usize..=16).prop_flat_map(|n| {
        (vec(-5.0..5.0f64, n).prop_filter("nonzero normal", |a| a.iter().any(|v| v.abs() > 1e-3)), -5.0..5.0f64, vec(-10.0..10.0f64, n))
    })
}

fn apply(m: &AffineMap, x: &[f64]) -> Vec<f64> {
    m.q().apply(x).iter().zip(m.pi()).map(|(a, b)| a + b).collect()
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    vec(-3.0..3.0f64, rows * cols).prop_map(move |d| DenseMatrix::from_row_major(rows, cols, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hyperplane_projection_is_idempotent((a, b, x) in hyperplane_data()) {
        let p = make_hyperplane_projection(&a, b).unwrap();
        let y = p.apply(&x).unwrap();
        prop_assert!(close(&p.apply(&y).unwrap(), &y, 1e-10));
        let on_plane: f64 = a.iter().zip(&y).map(|(u, v)| u * v).sum();
        prop_assert!((on_plane - b).abs() < 1e-9 * (1.0 + b.abs() + x.iter().map(|v| v.abs()).sum::<f64>()));
    }

    #[test]
    fn consensus_projection_is_idempotent(blocks in 1usize..6, dim in 1usize..6, seed in vec(-4.0..4.0f64, 36)) {
        let p = make_consensus_projection(blocks, dim).unwrap();
        let x = &seed[..blocks * dim];
        let y = p.apply(x).unwrap();
        prop_assert!(close(&p.apply(&y).unwrap(), &y, 1e-12));
        for b in 1..blocks {
            prop_assert!(close(&y[b * dim..(b + 1) * dim], &y[..dim], 1e-12));
        }
    }

    #[test]
    fn averaging_keeps_membership_and_fixed_points((a, b, x) in hyperplane_data(), alpha in 0.01..0.99f64) {
        let p = make_hyperplane_projection(&a, b).unwrap();
        let t = p.averaged(alpha).unwrap();
        prop_assert!(t.validate_membership().passed());
        let w = t.fixed_point_witness().unwrap();
        prop_assert!(t.fixed_point_residual(w.as_slice()) < 1e-9);
        let px = p.apply(&x).unwrap();
        let want: Vec<f64> = px.iter().zip(&x).map(|(u, v)| alpha * u + (1.0 - alpha) * v).collect();
        prop_assert!(close(&t.apply(&x).unwrap(), &want, 1e-12));
    }

    #[test]
    fn convex_combination_of_planes_through_a_point(
        normals in vec(vec(-3.0..3.0f64, 4), 1..5),
        point in vec(-3.0..3.0f64, 4),
        raw in vec(0.1..1.0f64, 5),
    ) {
        prop_assume!(normals.iter().all(|a| a.iter().any(|v| v.abs() > 1e-2)));
        let maps: Vec<AffineFneMap> = normals
            .iter()
            .map(|a| make_hyperplane_projection(a, a.iter().zip(&point).map(|(u, v)| u * v).sum()).unwrap())
            .collect();
        let raw = &raw[..maps.len()];
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let t = AffineFneMap::convex_combine(&maps, &weights).unwrap();
        prop_assert!(t.validate_membership().passed());
        prop_assert!(t.fixed_point_residual(&point) < 1e-9);
    }

    #[test]
    fn sandwich_with_reflections_stays_in_class(
        core in matrix(3, 4),
        rhs in vec(-2.0..2.0f64, 3),
        normals in vec(vec(-2.0..2.0f64, 4), 0..3),
        offsets in vec(-2.0..2.0f64, 3),
        gamma in 0.1..5.0f64,
    ) {
        prop_assume!(normals.iter().all(|a| a.iter().any(|v| v.abs() > 1e-2)));
        let core = make_ls_map(&core, &rhs, &LsVariant::Resolvent { gamma }).unwrap();
        // Reflections 2P - I: symmetric, norm one, not positive.
        let outer: Vec<AffineMap> = normals
            .iter()
            .zip(&offsets)
            .map(|(a, &b)| {
                let p = make_hyperplane_projection(a, b).unwrap();
                let pi: Vec<f64> = p.pi().iter().map(|v| 2.0 * v).collect();
                AffineMap::new(SymOperator::rank_one(1.0, -2.0, a).unwrap(), pi).unwrap()
            })
            .collect();
        let t = sandwich_compose(&core, &outer).unwrap();
        prop_assert!(t.validate_membership().passed());
        // Compare with applying the chain factor by factor.
        let x = vec![0.3, -1.2, 0.7, 2.0];
        let mut y = x.clone();
        for m in outer.iter().rev() {
            y = apply(m, &y);
        }
        y = core.apply(&y).unwrap();
        for m in &outer {
            y = apply(m, &y);
        }
        prop_assert!(close(&t.apply(&x).unwrap(), &y, 1e-10));
    }

    #[test]
    fn ls_projections_are_idempotent(a in matrix(3, 5), b in vec(-2.0..2.0f64, 3), x in vec(-4.0..4.0f64, 5)) {
        for v in [LsVariant::KerProjection, LsVariant::GramProjection] {
            let t = make_ls_map(&a, &b, &v).unwrap();
            prop_assert!(t.is_projection());
            let y = t.apply(&x).unwrap();
            prop_assert!(close(&t.apply(&y).unwrap(), &y, 1e-10));
        }
    }
}
