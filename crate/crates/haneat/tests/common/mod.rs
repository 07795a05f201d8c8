//! Independent oracles shared by the integration suites. These deliberately
//! avoid the library's own graph and evaluation code paths.

use std::collections::{BTreeMap, BTreeSet};

use haneat::activation::HIDDEN_CATALOG;
use haneat::genome::{Genome, NodeId, NodeRole};
use haneat::innovation::InnovationRegistry;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Three-color depth-first search over the enabled digraph.
pub fn dfs_has_cycle(genome: &Genome) -> bool {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let mut color: BTreeMap<NodeId, Color> =
        genome.nodes.iter().map(|n| (n.id, Color::White)).collect();
    fn visit(node: NodeId, genome: &Genome, color: &mut BTreeMap<NodeId, Color>) -> bool {
        color.insert(node, Color::Gray);
        for c in genome
            .connections
            .iter()
            .filter(|c| c.enabled && c.source == node)
        {
            match color[&c.target] {
                Color::Gray => return true,
                Color::White => {
                    if visit(c.target, genome, color) {
                        return true;
                    }
                }
                Color::Black => {}
            }
        }
        color.insert(node, Color::Black);
        false
    }
    let ids: Vec<NodeId> = genome.nodes.iter().map(|n| n.id).collect();
    for id in ids {
        if color[&id] == Color::White && visit(id, genome, &mut color) {
            return true;
        }
    }
    false
}

/// Breadth-first reachability over enabled connections.
pub fn reaches(genome: &Genome, from: NodeId, to: NodeId) -> bool {
    let mut frontier = vec![from];
    let mut seen: BTreeSet<NodeId> = BTreeSet::new();
    while let Some(node) = frontier.pop() {
        if node == to {
            return true;
        }
        for c in genome
            .connections
            .iter()
            .filter(|c| c.enabled && c.source == node)
        {
            if seen.insert(c.target) {
                frontier.push(c.target);
            }
        }
    }
    false
}

/// Brute-force network evaluation: memoized recursion from the outputs.
pub fn oracle_evaluate(genome: &Genome, x: &[f64]) -> Vec<f64> {
    fn value(genome: &Genome, id: NodeId, x: &[f64], memo: &mut BTreeMap<NodeId, f64>) -> f64 {
        if let Some(&v) = memo.get(&id) {
            return v;
        }
        let node = genome.node(id).unwrap();
        let v = match node.role {
            NodeRole::Input => {
                let idx = genome.inputs().position(|n| n.id == id).unwrap();
                x[idx]
            }
            NodeRole::Bias => 1.0,
            _ => {
                let sum: f64 = genome
                    .connections
                    .iter()
                    .filter(|c| c.enabled && c.target == id)
                    .map(|c| c.weight * value(genome, c.source, x, memo))
                    .sum();
                node.activation.apply(sum).unwrap()
            }
        };
        memo.insert(id, v);
        v
    }
    let mut memo = BTreeMap::new();
    genome
        .outputs()
        .map(|n| value(genome, n.id, x, &mut memo))
        .collect()
}

/// Operator-driven random genome: valid by construction and exercising the
/// real mutation paths.
pub fn random_genome(seed: u64, max_nodes: usize) -> Genome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_in = rng.gen_range(1..5);
    let n_out = rng.gen_range(1..3);
    let mut reg = InnovationRegistry::for_io(n_in, n_out);
    let mut g = Genome::minimal(n_in, n_out, &mut rng).unwrap();
    for i in 0..rng.gen_range(0..16) {
        if i % 6 == 0 {
            reg.begin_generation();
        }
        match rng.gen_range(0..6) {
            0 | 1 => {
                if g.nodes.len() < max_nodes {
                    g = g.mutate_add_node(&mut reg, &mut rng, &HIDDEN_CATALOG);
                }
            }
            2 => g = g.mutate_add_connection(&mut reg, &mut rng),
            3 => g = g.mutate_activation(&mut reg, &mut rng, &HIDDEN_CATALOG),
            4 => g = g.mutate_weights(&mut rng, 0.5, 2.0),
            _ => g = g.mutate_toggle(&mut rng, 0.05, 0.2),
        }
    }
    g
}
