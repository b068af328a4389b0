#![allow(dead_code)]

use proptest::prelude::{prop, prop_oneof, Strategy};
use quasicap::graph::GraphBuilder;
use quasicap::{LabeledGraph, NormingFunction};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn phi_strategy() -> impl Strategy<Value = NormingFunction> {
    prop_oneof![
        (1.0f64..5.0).prop_map(NormingFunction::Lp),
        (1.0f64..5.0).prop_map(NormingFunction::LorentzP1),
        prop::collection::vec(0.05f64..1.0, 1..6).prop_map(|mut w| {
            w.sort_by(|a, b| b.total_cmp(a));
            NormingFunction::weights(w).unwrap()
        }),
    ]
}

pub fn all_phi_kinds() -> Vec<NormingFunction> {
    vec![
        NormingFunction::Lp(1.0),
        NormingFunction::Lp(2.0),
        NormingFunction::Lp(3.5),
        NormingFunction::LorentzP1(1.5),
        NormingFunction::LorentzP1(2.0),
        NormingFunction::LorentzP1(4.0),
        NormingFunction::weights(vec![1.0, 0.6, 0.3]).unwrap(),
    ]
}

/// Connected graph on `n` vertices: generator 0 walks a random Hamiltonian
/// path, the others are random partial permutations. No halo.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, gens: usize) -> LabeledGraph {
    let mut b = GraphBuilder::new(gens);
    for v in 0..n {
        b.add_vertex(&format!("v{v}"), false).unwrap();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for w in order.windows(2) {
        b.add_edge(0, w[0], w[1]).unwrap();
    }
    for j in 1..gens {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        for (v, &w) in perm.iter().enumerate() {
            if w != v && rng.gen_bool(0.6) {
                b.add_edge(j, v, w).unwrap();
            }
        }
    }
    b.build()
}

/// Disjoint random source and sink sets, each of size 1..=3.
pub fn random_terminals(rng: &mut ChaCha8Rng, n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut vs: Vec<usize> = (0..n).collect();
    vs.shuffle(rng);
    let k1 = rng.gen_range(1..=3);
    let k2 = rng.gen_range(1..=3);
    (vs[..k1].to_vec(), vs[k1..k1 + k2].to_vec())
}
