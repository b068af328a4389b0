use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;
use quasicap::modulus::{feasibility_residual, modulus_objective};
use quasicap::{
    cayley_ball, diag_compress, generator_difference, project_feasible, solve_modulus, transfer_compare,
    truncated_shift_tuple, Error, Group, NormingFunction, OperatorTuple, ProjectionPair, SolveOptions, TupleKind,
    VertexFunction,
};

fn symmetric(dim: usize, entries: &[f64]) -> DMatrix<f64> {
    let m = DMatrix::from_fn(dim, dim, |i, j| entries[i * dim + j]);
    (&m + m.transpose()) * 0.5
}

fn matrix_strategy(dim: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0..2.0f64, dim * dim).prop_map(move |e| symmetric(dim, &e))
}

#[test]
fn commutator_with_a_diagonal_reproduces_differences() {
    let g = cayley_ball(Group::Free(2), 2).unwrap();
    let tuple = truncated_shift_tuple(&g).unwrap();
    let values: Vec<f64> = (0..g.vertex_count())
        .map(|v| if g.is_halo(v) { 0.0 } else { ((v * 7) % 5) as f64 / 4.0 })
        .collect();
    let f = VertexFunction::new(&g, values.clone()).unwrap();
    let x = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(values));
    for j in 0..g.generators() {
        let t = &tuple.matrices()[j];
        let c = t * &x - &x * t;
        let diffs = generator_difference(&g, &f, j);
        for ((s, d), diff) in g.edges(j).zip(diffs) {
            assert_eq!(c[(d, s)], -diff);
        }
        assert_eq!(c.iter().filter(|v| **v != 0.0).count(), g.edges(j).filter(|&(s, d)| f.values()[s] != f.values()[d]).count());
    }
}

#[test]
fn solved_moduli_are_feasible() {
    let g = cayley_ball(Group::FreeAbelian(2), 2).unwrap();
    let tuple = truncated_shift_tuple(&g).unwrap();
    let e = g.vertex("0,0").unwrap();
    let pq = ProjectionPair::coordinates(g.vertex_count(), &[e], &g.halo_vertices()).unwrap();
    for phi in [NormingFunction::Lp(2.0), NormingFunction::LorentzP1(2.0)] {
        let r = solve_modulus(&tuple, &pq, &phi, &SolveOptions::default()).unwrap();
        assert!(r.feasibility_residual <= 1e-10);
        assert!(feasibility_residual(&r.minimizer, &pq) <= 1e-10);
        let at_p = modulus_objective(&tuple, &phi, &pq.p_matrix()).unwrap();
        assert!(r.value <= at_p);
    }
}

#[test]
fn modulus_grows_with_p() {
    let g = cayley_ball(Group::FreeAbelian(1), 3).unwrap();
    let tuple = truncated_shift_tuple(&g).unwrap();
    let halo = g.halo_vertices();
    let small = [g.vertex("0").unwrap()];
    let large = [g.vertex("0").unwrap(), g.vertex("1").unwrap()];
    let phi = NormingFunction::Lp(2.0);
    let opts = SolveOptions::default();
    let k = |p: &[usize]| {
        let pq = ProjectionPair::coordinates(g.vertex_count(), p, &halo).unwrap();
        solve_modulus(&tuple, &pq, &phi, &opts).unwrap().value
    };
    let (a, b) = (k(&small), k(&large));
    assert!(a <= b * (1.0 + 1e-6), "{a} > {b}");
}

#[test]
fn transfer_sandwich_holds() {
    let g = cayley_ball(Group::Free(2), 2).unwrap();
    let e = g.vertex("e").unwrap();
    let r = transfer_compare(&g, &[e], &[], &NormingFunction::Lp(2.0), &SolveOptions::default()).unwrap();
    assert!(r.embedding_ok && r.compression_ok && r.diag_roundtrip_ok);
    assert!(r.k_matrix <= r.cap_graph * (1.0 + 1e-9));
    assert!(r.relative_gap <= 1e-4, "{r:?}");
}

#[test]
fn overlapping_projections_are_rejected() {
    assert!(matches!(ProjectionPair::coordinates(4, &[0, 1], &[1, 3]), Err(Error::Precondition(_))));
    let p = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
    let q = DMatrix::from_column_slice(2, 1, &[0.6, 0.8]);
    assert!(matches!(ProjectionPair::frames(p, q), Err(Error::Precondition(_))));
}

#[test]
fn tuples_check_their_kind() {
    let not_shift = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
    assert!(OperatorTuple::new(vec![not_shift.clone()], TupleKind::TruncatedShift).is_err());
    assert!(OperatorTuple::new(vec![not_shift.clone()], TupleKind::DiagonalMultiplication).is_err());
    assert!(OperatorTuple::new(vec![not_shift], TupleKind::Custom).is_ok());
    let big = DMatrix::<f64>::zeros(5, 5);
    assert!(matches!(OperatorTuple::with_cap(vec![big], TupleKind::Custom, 4), Err(Error::SizeCap { .. })));
}

#[test]
fn diag_compress_on_complex_entries() {
    let m = DMatrix::from_fn(3, 3, |i, j| Complex::new(i as f64, j as f64));
    let d = diag_compress(&m).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { m[(i, j)] } else { Complex::new(0.0, 0.0) };
            assert_eq!(d[(i, j)], want);
        }
    }
    assert!(matches!(diag_compress(&DMatrix::<f64>::zeros(2, 3)), Err(Error::Precondition(_))));
}

proptest! {
    #[test]
    fn projection_lands_in_the_feasible_set(x in matrix_strategy(6)) {
        let pq = ProjectionPair::coordinates(6, &[0, 2], &[5]).unwrap();
        let y = project_feasible(&x, &pq).unwrap();
        prop_assert!(feasibility_residual(&y, &pq) <= 1e-10);
        let z = project_feasible(&y, &pq).unwrap();
        prop_assert!((&z - &y).amax() <= 1e-10);
    }

    #[test]
    fn diag_compress_is_idempotent_and_keeps_the_diagonal(x in matrix_strategy(5)) {
        let d = diag_compress(&x).unwrap();
        prop_assert_eq!(diag_compress(&d).unwrap(), d.clone());
        prop_assert_eq!(d.diagonal(), x.diagonal());
    }

    #[test]
    fn objective_is_convex(a in matrix_strategy(5), b in matrix_strategy(5), t in 0.0..1.0f64, p in 1.0..4.0f64) {
        let g = cayley_ball(Group::FreeAbelian(1), 1).unwrap();
        let tuple = truncated_shift_tuple(&g).unwrap();
        let pq = ProjectionPair::coordinates(5, &[2], &[0, 4]).unwrap();
        let a = project_feasible(&a, &pq).unwrap();
        let b = project_feasible(&b, &pq).unwrap();
        let mid = &a * t + &b * (1.0 - t);
        prop_assert!(feasibility_residual(&mid, &pq) <= 1e-10);
        for phi in [NormingFunction::Lp(p), NormingFunction::LorentzP1(p)] {
            let fa = modulus_objective(&tuple, &phi, &a).unwrap();
            let fb = modulus_objective(&tuple, &phi, &b).unwrap();
            let fm = modulus_objective(&tuple, &phi, &mid).unwrap();
            prop_assert!(fm <= t * fa + (1.0 - t) * fb + 1e-9 * (1.0 + fa + fb));
        }
    }
}
