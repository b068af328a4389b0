mod common;

use common::{random_graph, random_terminals};
use quasicap::capacity::{capacity_profile, hyperbolicity_probe, solve_condenser, CondenserProblem, Verdict};
use quasicap::oracle::{oracle_mincut, oracle_quadratic};
use quasicap::{
    cayley_ball, gradient_seminorm, path_graph, GradientCombiner, Group, NormingFunction, SolveOptions,
    VertexFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts() -> SolveOptions {
    SolveOptions::default()
}

#[test]
fn path_with_four_edges() {
    let g = path_graph(4);
    let p = CondenserProblem::new(&g, &[0], &[], NormingFunction::Lp(2.0), GradientCombiner::MaxThenNorm).unwrap();
    let r = solve_condenser(&p, &opts()).unwrap();
    assert!((r.value - 0.5).abs() < 1e-4, "{}", r.value);
    assert!(r.feasibility_residual <= 1e-10);
}

#[test]
fn fully_pinned_interior_matches_direct_evaluation() {
    let g = cayley_ball(Group::FreeAbelian(2), 2).unwrap();
    let interior = g.interior_vertices();
    let phi = NormingFunction::LorentzP1(2.0);
    let p = CondenserProblem::new(&g, &interior, &[], phi.clone(), GradientCombiner::MaxThenNorm).unwrap();
    let r = solve_condenser(&p, &opts()).unwrap();
    let f = VertexFunction::indicator(&g, &interior).unwrap();
    assert_eq!(r.value, gradient_seminorm(&g, &f, &phi, GradientCombiner::MaxThenNorm));
}

#[test]
fn z_ball_singleton() {
    let g = cayley_ball(Group::FreeAbelian(1), 4).unwrap();
    let e = g.vertex("0").unwrap();
    let p = CondenserProblem::new(&g, &[e], &[], NormingFunction::Lp(2.0), GradientCombiner::MaxThenNorm).unwrap();
    let r = solve_condenser(&p, &opts()).unwrap();
    assert!((r.value - 0.4f64.sqrt()).abs() < 1e-3);
}

#[test]
fn z_ball_cut_by_brute_force() {
    // every 0/1 function pinned at the origin and the halo
    let g = cayley_ball(Group::FreeAbelian(1), 2).unwrap();
    let e = g.vertex("0").unwrap();
    let free: Vec<usize> = g.interior_vertices().into_iter().filter(|&v| v != e).collect();
    let phi = NormingFunction::Lp(1.0);
    let mut best = f64::INFINITY;
    for mask in 0..(1u32 << free.len()) {
        let mut f = vec![0.0; g.vertex_count()];
        f[e] = 1.0;
        for (k, &v) in free.iter().enumerate() {
            if mask & (1 << k) != 0 {
                f[v] = 1.0;
            }
        }
        let v = gradient_seminorm(&g, &VertexFunction::new(&g, f).unwrap(), &phi, GradientCombiner::SumThenNorm);
        best = best.min(v);
    }
    assert_eq!(best, 2.0);
    let p = CondenserProblem::new(&g, &[e], &[], phi, GradientCombiner::SumThenNorm).unwrap();
    assert_eq!(oracle_mincut(&p).unwrap(), best);
    assert!((solve_condenser(&p, &opts()).unwrap().value - best).abs() < 1e-6);
}

#[test]
fn solver_values_are_sound_upper_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let n = rng.gen_range(5..20);
        let gens = rng.gen_range(1..4);
        let g = random_graph(&mut rng, n, gens);
        let (src, snk) = random_terminals(&mut rng, n);
        let p = CondenserProblem::new(&g, &src, &snk, NormingFunction::Lp(2.0), GradientCombiner::EuclideanThenNorm)
            .unwrap();
        let r = solve_condenser(&p, &opts()).unwrap();
        let oracle = oracle_quadratic(&p).unwrap();
        assert!(r.value >= oracle * (1.0 - 1e-12), "{} below the optimum {oracle}", r.value);
        let hand = VertexFunction::indicator(&g, &src).unwrap();
        assert!(r.value <= p.objective(&hand) + 1e-12);
        assert!(r.feasibility_residual <= 1e-10);
    }
}

#[test]
fn monotone_in_the_source_set() {
    let g = cayley_ball(Group::FreeAbelian(2), 3).unwrap();
    let chain = ["0,0", "1,0", "0,1", "-1,0", "1,1"];
    for phi in [NormingFunction::Lp(2.0), NormingFunction::LorentzP1(2.0)] {
        let mut previous = 0.0;
        for k in 1..=chain.len() {
            let src: Vec<usize> = chain[..k].iter().map(|l| g.vertex(l).unwrap()).collect();
            let p = CondenserProblem::new(&g, &src, &[], phi.clone(), GradientCombiner::MaxThenNorm).unwrap();
            let v = solve_condenser(&p, &opts()).unwrap().value;
            assert!(v >= previous - 1e-5 * v, "{phi}: {v} < {previous} with {k} sources");
            previous = v;
        }
    }
}

#[test]
fn monotone_in_the_norming_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..8 {
        let n = rng.gen_range(5..15);
        let g = random_graph(&mut rng, n, 2);
        let (src, snk) = random_terminals(&mut rng, n);
        for p in [1.5, 2.0, 3.0] {
            let solve = |phi| {
                let pr = CondenserProblem::new(&g, &src, &snk, phi, GradientCombiner::MaxThenNorm).unwrap();
                solve_condenser(&pr, &opts()).unwrap().value
            };
            let lp = solve(NormingFunction::Lp(p));
            let lor = solve(NormingFunction::LorentzP1(p));
            assert!(lp <= lor * (1.0 + 1e-5), "p={p}: {lp} > {lor}");
        }
    }
}

#[test]
fn profiles_never_increase() {
    for (group, combiner) in [
        (Group::FreeAbelian(1), GradientCombiner::MaxThenNorm),
        (Group::FreeAbelian(2), GradientCombiner::PointwiseMaxThenNorm),
        (Group::Free(2), GradientCombiner::EuclideanThenNorm),
    ] {
        let radii: Vec<usize> = (1..=5).collect();
        let prof =
            capacity_profile(group, &["e".into()], &NormingFunction::Lp(2.0), combiner, &radii, &opts()).unwrap();
        for w in prof.windows(2) {
            assert!(w[1].value <= w[0].value, "{group}: {} then {}", w[0].value, w[1].value);
        }
    }
}

#[test]
fn repeated_radius_gives_identical_values() {
    let prof = capacity_profile(
        Group::Free(2),
        &["e".into()],
        &NormingFunction::LorentzP1(2.0),
        GradientCombiner::MaxThenNorm,
        &[3, 3],
        &opts(),
    )
    .unwrap();
    assert!(prof[1].value <= prof[0].value);
    assert!((prof[1].value - prof[0].value).abs() <= 1e-6 * prof[0].value);
}

#[test]
fn reports_are_bitwise_reproducible() {
    let g = cayley_ball(Group::FreeAbelian(2), 3).unwrap();
    let e = g.vertex("0,0").unwrap();
    let p = CondenserProblem::new(&g, &[e], &[], NormingFunction::LorentzP1(2.0), GradientCombiner::PointwiseMaxThenNorm)
        .unwrap();
    let a = solve_condenser(&p, &opts()).unwrap();
    let b = solve_condenser(&p, &opts()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn probe_verdicts() {
    let z = hyperbolicity_probe(Group::FreeAbelian(1), 2.0, 8, GradientCombiner::MaxThenNorm, &opts()).unwrap();
    assert_eq!(z.verdict, Some(Verdict::Vanishing), "{}", z.diagnostics);

    let tree = hyperbolicity_probe(Group::Free(2), 2.0, 6, GradientCombiner::EuclideanThenNorm, &opts()).unwrap();
    assert_eq!(tree.verdict, Some(Verdict::BoundedBelow), "{}", tree.diagnostics);

    let plane = hyperbolicity_probe(Group::FreeAbelian(2), 2.0, 8, GradientCombiner::MaxThenNorm, &opts()).unwrap();
    assert_ne!(plane.verdict, Some(Verdict::BoundedBelow), "{}", plane.diagnostics);
    for w in plane.profile.windows(2) {
        assert!(w[1].value < w[0].value);
    }
}
