//! Direct encoding of heterogeneous feedforward networks and the genetic
//! operators over them.
//!
//! A genome is a list of node genes (each hidden node carries its own
//! activation gene) plus a list of connection genes sorted by innovation
//! number. Operators never mutate in place: they take a genome and return a
//! new one. The enabled-connection digraph is kept acyclic at all times.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::activation::{ActivationKind, HIDDEN_CATALOG};
use crate::error::{Error, Result};
use crate::innovation::InnovationRegistry;

/// Initial and fresh connection weights are drawn uniformly from this range,
/// matching the scale of the weight perturbation delta.
pub const WEIGHT_INIT_RANGE: (f64, f64) = (-2.0, 2.0);

/// Resampling budget for the add-connection operator.
pub const ADD_CONNECTION_ATTEMPTS: usize = 20;

/// Probability that a gene disabled in either parent stays disabled in a
/// crossover child.
pub const CROSSOVER_DISABLE_CHANCE: f64 = 0.75;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct Innovation(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Input,
    Bias,
    Hidden,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: NodeId,
    pub role: NodeRole,
    pub activation: ActivationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionGene {
    pub innovation: Innovation,
    pub source: NodeId,
    pub target: NodeId,
    pub weight: f64,
    pub enabled: bool,
}

/// Why a candidate connection was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectReject {
    SelfLoop,
    /// Source is an output, or target is an input or the bias.
    IllegalRole,
    /// A gene (enabled or disabled) between the endpoints already exists.
    AlreadyConnected,
    /// The edge would close a directed cycle among enabled connections.
    CreatesCycle,
}

/// Coefficients of the compatibility distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompatCoefficients {
    pub c_excess: f64,
    pub c_disjoint: f64,
    pub c_weight: f64,
}

impl Default for CompatCoefficients {
    fn default() -> Self {
        CompatCoefficients {
            c_excess: 1.0,
            c_disjoint: 1.0,
            c_weight: 0.2,
        }
    }
}

/// Genomes with fewer connection genes than this on both sides use N = 1 in
/// the compatibility distance.
pub const COMPAT_SIZE_NORMALIZATION_CUTOFF: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub nodes: Vec<NodeGene>,
    pub connections: Vec<ConnectionGene>,
    pub fitness: f64,
    #[serde(skip)]
    pub adjusted_fitness: f64,
}

impl Genome {
    /// Minimal genome: every input and the bias connected directly to every
    /// output, no hidden nodes, all activations linear. Node ids are
    /// 0..n_inputs (inputs), n_inputs (bias), then the outputs; innovation
    /// numbers enumerate source-major over that wiring, so all minimal
    /// genomes of one population share markers.
    pub fn minimal(n_inputs: usize, n_outputs: usize, rng: &mut impl Rng) -> Result<Genome> {
        if n_inputs == 0 || n_outputs == 0 {
            return Err(Error::Usage(format!(
                "minimal genome needs at least one input and one output, got {n_inputs}/{n_outputs}"
            )));
        }
        let mut nodes = Vec::with_capacity(n_inputs + 1 + n_outputs);
        for i in 0..n_inputs {
            nodes.push(NodeGene {
                id: NodeId(i as u32),
                role: NodeRole::Input,
                activation: ActivationKind::Linear,
            });
        }
        nodes.push(NodeGene {
            id: NodeId(n_inputs as u32),
            role: NodeRole::Bias,
            activation: ActivationKind::Linear,
        });
        for o in 0..n_outputs {
            nodes.push(NodeGene {
                id: NodeId((n_inputs + 1 + o) as u32),
                role: NodeRole::Output,
                activation: ActivationKind::Linear,
            });
        }
        let mut connections = Vec::with_capacity((n_inputs + 1) * n_outputs);
        let mut innovation = 0u32;
        for source in 0..=n_inputs {
            for o in 0..n_outputs {
                connections.push(ConnectionGene {
                    innovation: Innovation(innovation),
                    source: NodeId(source as u32),
                    target: NodeId((n_inputs + 1 + o) as u32),
                    weight: rng.gen_range(WEIGHT_INIT_RANGE.0..WEIGHT_INIT_RANGE.1),
                    enabled: true,
                });
                innovation += 1;
            }
        }
        Ok(Genome {
            nodes,
            connections,
            fitness: 0.0,
            adjusted_fitness: 0.0,
        })
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeGene> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn inputs(&self) -> impl Iterator<Item = &NodeGene> {
        self.nodes.iter().filter(|n| n.role == NodeRole::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &NodeGene> {
        self.nodes.iter().filter(|n| n.role == NodeRole::Output)
    }

    pub fn hidden(&self) -> impl Iterator<Item = &NodeGene> {
        self.nodes.iter().filter(|n| n.role == NodeRole::Hidden)
    }

    pub fn hidden_count(&self) -> usize {
        self.hidden().count()
    }

    pub fn enabled_connections(&self) -> impl Iterator<Item = &ConnectionGene> {
        self.connections.iter().filter(|c| c.enabled)
    }

    pub fn enabled_count(&self) -> usize {
        self.enabled_connections().count()
    }

    /// True if the enabled digraph would contain a path target -> source,
    /// i.e. adding or enabling source -> target would close a cycle.
    fn reaches(&self, from: NodeId, to: NodeId) -> bool {
        if from == to {
            return true;
        }
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(node) = stack.pop() {
            for c in self.connections.iter().filter(|c| c.enabled) {
                if c.source == node {
                    if c.target == to {
                        return true;
                    }
                    if seen.insert(c.target) {
                        stack.push(c.target);
                    }
                }
            }
        }
        false
    }

    fn sort_genes(&mut self) {
        self.nodes.sort_by_key(|n| n.id);
        self.connections.sort_by_key(|c| c.innovation);
    }

    /// Split one enabled connection with a new hidden node whose activation
    /// is drawn uniformly from `catalog`. No-op when the genome has no
    /// enabled connections.
    pub fn mutate_add_node(
        &self,
        registry: &mut InnovationRegistry,
        rng: &mut impl Rng,
        catalog: &[ActivationKind],
    ) -> Genome {
        let enabled: Vec<usize> = self
            .connections
            .iter()
            .enumerate()
            .filter(|(_, c)| c.enabled)
            .map(|(i, _)| i)
            .collect();
        if enabled.is_empty() {
            return self.clone();
        }
        let split_idx = enabled[rng.gen_range(0..enabled.len())];
        let kind = catalog[rng.gen_range(0..catalog.len())];
        let split = self.connections[split_idx];
        let mut markers = registry.split(split.innovation, kind);
        // A re-enabled connection can be split a second time by the same
        // lineage; replayed markers would collide with the genes the first
        // split left behind, so that case takes fresh unmemoized markers.
        let collides = self.node(markers.node).is_some()
            || self
                .connections
                .iter()
                .any(|c| c.innovation == markers.incoming || c.innovation == markers.outgoing);
        if collides {
            markers = crate::innovation::SplitMarkers {
                node: registry.fresh_node_id(),
                incoming: registry.fresh_innovation(),
                outgoing: registry.fresh_innovation(),
            };
        }

        let mut child = self.clone();
        child.connections[split_idx].enabled = false;
        child.nodes.push(NodeGene {
            id: markers.node,
            role: NodeRole::Hidden,
            activation: kind,
        });
        child.connections.push(ConnectionGene {
            innovation: markers.incoming,
            source: split.source,
            target: markers.node,
            weight: 1.0,
            enabled: true,
        });
        child.connections.push(ConnectionGene {
            innovation: markers.outgoing,
            source: markers.node,
            target: split.target,
            weight: split.weight,
            enabled: true,
        });
        child.sort_genes();
        child
    }

    /// Validate and apply a specific new connection. The registry is only
    /// consulted once the candidate is known to be legal.
    pub fn try_add_connection(
        &self,
        source: NodeId,
        target: NodeId,
        weight: f64,
        registry: &mut InnovationRegistry,
    ) -> std::result::Result<Genome, ConnectReject> {
        if source == target {
            return Err(ConnectReject::SelfLoop);
        }
        let source_node = self.node(source).ok_or(ConnectReject::IllegalRole)?;
        let target_node = self.node(target).ok_or(ConnectReject::IllegalRole)?;
        if source_node.role == NodeRole::Output
            || matches!(target_node.role, NodeRole::Input | NodeRole::Bias)
        {
            return Err(ConnectReject::IllegalRole);
        }
        if self
            .connections
            .iter()
            .any(|c| c.source == source && c.target == target)
        {
            return Err(ConnectReject::AlreadyConnected);
        }
        if self.reaches(target, source) {
            return Err(ConnectReject::CreatesCycle);
        }
        let mut child = self.clone();
        child.connections.push(ConnectionGene {
            innovation: registry.edge(source, target),
            source,
            target,
            weight,
            enabled: true,
        });
        child.sort_genes();
        Ok(child)
    }

    /// Sample candidate endpoint pairs until one is legal, up to a bounded
    /// number of attempts; no-op when the budget is exhausted.
    pub fn mutate_add_connection(
        &self,
        registry: &mut InnovationRegistry,
        rng: &mut impl Rng,
    ) -> Genome {
        let sources: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|n| n.role != NodeRole::Output)
            .map(|n| n.id)
            .collect();
        let targets: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|n| matches!(n.role, NodeRole::Hidden | NodeRole::Output))
            .map(|n| n.id)
            .collect();
        for _ in 0..ADD_CONNECTION_ATTEMPTS {
            let source = sources[rng.gen_range(0..sources.len())];
            let target = targets[rng.gen_range(0..targets.len())];
            let weight = rng.gen_range(WEIGHT_INIT_RANGE.0..WEIGHT_INIT_RANGE.1);
            if let Ok(child) = self.try_add_connection(source, target, weight, registry) {
                return child;
            }
        }
        self.clone()
    }

    /// Redraw the activation of one uniformly chosen hidden node. When the
    /// drawn kind differs from the current one, the node gets a fresh id and
    /// every incident connection (enabled or disabled) a fresh innovation
    /// number; weights and enabled flags are preserved. Redrawing the
    /// current kind leaves the genome unchanged. No-op without hidden nodes.
    pub fn mutate_activation(
        &self,
        registry: &mut InnovationRegistry,
        rng: &mut impl Rng,
        catalog: &[ActivationKind],
    ) -> Genome {
        let hidden: Vec<usize> = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.role == NodeRole::Hidden)
            .map(|(i, _)| i)
            .collect();
        if hidden.is_empty() {
            return self.clone();
        }
        let node_idx = hidden[rng.gen_range(0..hidden.len())];
        let kind = catalog[rng.gen_range(0..catalog.len())];
        let old_id = self.nodes[node_idx].id;
        if kind == self.nodes[node_idx].activation {
            return self.clone();
        }
        let new_id = registry.fresh_node_id();
        let mut child = self.clone();
        child.nodes[node_idx] = NodeGene {
            id: new_id,
            role: NodeRole::Hidden,
            activation: kind,
        };
        for c in child.connections.iter_mut() {
            if c.source == old_id || c.target == old_id {
                c.innovation = registry.fresh_innovation();
                if c.source == old_id {
                    c.source = new_id;
                }
                if c.target == old_id {
                    c.target = new_id;
                }
            }
        }
        child.sort_genes();
        child
    }

    /// Perturb each connection weight independently with probability
    /// `p_weight` by a uniform draw from [-delta, delta].
    pub fn mutate_weights(&self, rng: &mut impl Rng, p_weight: f64, delta: f64) -> Genome {
        let mut child = self.clone();
        for c in child.connections.iter_mut() {
            if rng.gen_bool(p_weight) {
                c.weight += rng.gen_range(-delta..=delta);
            }
        }
        child
    }

    /// Per-gene independent chances to enable or disable. Enabling an edge
    /// that would close a cycle is rejected, as is disabling the last
    /// enabled connection into an output node.
    pub fn mutate_toggle(&self, rng: &mut impl Rng, p_enable: f64, p_disable: f64) -> Genome {
        let mut child = self.clone();
        for i in 0..child.connections.len() {
            if rng.gen_bool(p_enable) && !child.connections[i].enabled {
                let c = child.connections[i];
                if !child.reaches(c.target, c.source) {
                    child.connections[i].enabled = true;
                }
            }
            if rng.gen_bool(p_disable) && child.connections[i].enabled {
                let c = child.connections[i];
                let orphans_output = child
                    .node(c.target)
                    .is_some_and(|n| n.role == NodeRole::Output)
                    && !child
                        .connections
                        .iter()
                        .enumerate()
                        .any(|(j, o)| j != i && o.enabled && o.target == c.target);
                if !orphans_output {
                    child.connections[i].enabled = false;
                }
            }
        }
        child
    }

    /// NEAT crossover. Matching genes come from either parent uniformly;
    /// disjoint and excess genes come from the fitter parent. A gene
    /// disabled in either parent is disabled in the child with probability
    /// 0.75. If the inherited enabled genes contain a cycle, enabled genes
    /// are disabled from each cycle in descending innovation order until the
    /// child is acyclic.
    pub fn crossover(fitter: &Genome, other: &Genome, rng: &mut impl Rng) -> Result<Genome> {
        let interface = |g: &Genome| -> Vec<(NodeId, NodeRole)> {
            g.nodes
                .iter()
                .filter(|n| n.role != NodeRole::Hidden)
                .map(|n| (n.id, n.role))
                .collect()
        };
        if interface(fitter) != interface(other) {
            return Err(Error::Invariant(
                "crossover parents disagree on the input/output/bias interface".into(),
            ));
        }

        let mut genes: Vec<ConnectionGene> = Vec::with_capacity(fitter.connections.len());
        let mut i = 0;
        let mut j = 0;
        while i < fitter.connections.len() {
            let f = fitter.connections[i];
            let o = if j < other.connections.len() {
                Some(other.connections[j])
            } else {
                None
            };
            match o {
                Some(o) if o.innovation < f.innovation => {
                    // disjoint/excess in the weaker parent: skipped
                    j += 1;
                }
                Some(o) if o.innovation == f.innovation => {
                    let mut gene = if rng.gen_bool(0.5) { f } else { o };
                    if !f.enabled || !o.enabled {
                        gene.enabled = !rng.gen_bool(CROSSOVER_DISABLE_CHANCE);
                    }
                    genes.push(gene);
                    i += 1;
                    j += 1;
                }
                _ => {
                    let mut gene = f;
                    if !f.enabled {
                        gene.enabled = !rng.gen_bool(CROSSOVER_DISABLE_CHANCE);
                    }
                    genes.push(gene);
                    i += 1;
                }
            }
        }

        // Nodes: the shared interface plus every node referenced by an
        // inherited gene. A node id is bound to one activation kind for the
        // whole run, so either parent can supply the gene.
        let mut node_table: BTreeMap<NodeId, NodeGene> = BTreeMap::new();
        for n in other.nodes.iter().chain(fitter.nodes.iter()) {
            node_table.insert(n.id, *n);
        }
        let mut needed: BTreeSet<NodeId> = fitter
            .nodes
            .iter()
            .filter(|n| n.role != NodeRole::Hidden)
            .map(|n| n.id)
            .collect();
        for g in &genes {
            needed.insert(g.source);
            needed.insert(g.target);
        }
        let nodes: Vec<NodeGene> = needed.iter().map(|id| node_table[id]).collect();

        let mut child = Genome {
            nodes,
            connections: genes,
            fitness: 0.0,
            adjusted_fitness: 0.0,
        };
        child.break_cycles();
        Ok(child)
    }

    /// Disable enabled genes from cycles, highest innovation first, until
    /// the enabled digraph is acyclic.
    fn break_cycles(&mut self) {
        while let Some(cycle) = self.find_cycle() {
            let worst = cycle.into_iter().max().expect("cycle has edges");
            let idx = self
                .connections
                .iter()
                .position(|c| c.innovation == worst)
                .expect("cycle edge exists");
            self.connections[idx].enabled = false;
        }
    }

    /// Innovations of the edges of some cycle in the enabled digraph, if any.
    fn find_cycle(&self) -> Option<Vec<Innovation>> {
        let mut adjacency: BTreeMap<NodeId, Vec<(NodeId, Innovation)>> = BTreeMap::new();
        for c in self.connections.iter().filter(|c| c.enabled) {
            adjacency.entry(c.source).or_default().push((c.target, c.innovation));
        }
        // iterative DFS with an explicit path stack
        let mut visited: BTreeSet<NodeId> = BTreeSet::new();
        for &start in adjacency.keys() {
            if visited.contains(&start) {
                continue;
            }
            let mut path: Vec<(NodeId, usize)> = vec![(start, 0)];
            let mut on_path: BTreeSet<NodeId> = BTreeSet::new();
            on_path.insert(start);
            while let Some(&(node, edge_idx)) = path.last() {
                let next = adjacency.get(&node).and_then(|edges| edges.get(edge_idx));
                match next {
                    Some(&(target, innovation)) => {
                        path.last_mut().unwrap().1 += 1;
                        if on_path.contains(&target) {
                            // the cycle is the path from `target` onward plus
                            // the closing edge
                            let pos = path.iter().position(|&(n, _)| n == target).unwrap();
                            let mut edges = vec![innovation];
                            for (k, window) in path.windows(2).enumerate() {
                                if k >= pos {
                                    let (from, _) = window[0];
                                    let (to, _) = window[1];
                                    if let Some(c) = self
                                        .connections
                                        .iter()
                                        .find(|c| c.enabled && c.source == from && c.target == to)
                                    {
                                        edges.push(c.innovation);
                                    }
                                }
                            }
                            return Some(edges);
                        }
                        if !visited.contains(&target) {
                            on_path.insert(target);
                            path.push((target, 0));
                        }
                    }
                    None => {
                        visited.insert(node);
                        on_path.remove(&node);
                        path.pop();
                    }
                }
            }
        }
        None
    }

    /// Compatibility distance: c_e * E/N + c_d * D/N + c_w * mean |dw| over
    /// matching genes. N is 1 while both genomes have fewer than 20
    /// connection genes, otherwise the larger gene count.
    pub fn compatibility_distance(a: &Genome, b: &Genome, coeffs: &CompatCoefficients) -> f64 {
        let mut matching = 0usize;
        let mut weight_diff = 0.0;
        let mut disjoint = 0usize;
        let mut excess = 0usize;

        let max_a = a.connections.last().map(|c| c.innovation);
        let max_b = b.connections.last().map(|c| c.innovation);

        let mut classify_unmatched = |innovation: Innovation, other_max: Option<Innovation>| {
            match other_max {
                Some(m) if innovation <= m => disjoint += 1,
                _ => excess += 1,
            }
        };

        let mut i = 0;
        let mut j = 0;
        while i < a.connections.len() || j < b.connections.len() {
            match (a.connections.get(i), b.connections.get(j)) {
                (Some(ca), Some(cb)) if ca.innovation == cb.innovation => {
                    matching += 1;
                    weight_diff += (ca.weight - cb.weight).abs();
                    i += 1;
                    j += 1;
                }
                (Some(ca), Some(cb)) if ca.innovation < cb.innovation => {
                    classify_unmatched(ca.innovation, max_b);
                    i += 1;
                }
                (Some(_), Some(cb)) => {
                    classify_unmatched(cb.innovation, max_a);
                    j += 1;
                }
                (Some(ca), None) => {
                    classify_unmatched(ca.innovation, max_b);
                    i += 1;
                }
                (None, Some(cb)) => {
                    classify_unmatched(cb.innovation, max_a);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }

        let n = if a.connections.len() < COMPAT_SIZE_NORMALIZATION_CUTOFF
            && b.connections.len() < COMPAT_SIZE_NORMALIZATION_CUTOFF
        {
            1.0
        } else {
            a.connections.len().max(b.connections.len()) as f64
        };
        let mean_weight_diff = if matching > 0 {
            weight_diff / matching as f64
        } else {
            0.0
        };
        coeffs.c_excess * excess as f64 / n
            + coeffs.c_disjoint * disjoint as f64 / n
            + coeffs.c_weight * mean_weight_diff
    }

    /// Full structural validation: sorted unique genes, valid endpoints,
    /// role/activation consistency, acyclic enabled digraph.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Invariant(msg));
        for w in self.nodes.windows(2) {
            if w[0].id >= w[1].id {
                return fail(format!("node ids not strictly sorted at {:?}", w[1].id));
            }
        }
        for n in &self.nodes {
            match n.role {
                NodeRole::Hidden => {
                    if !HIDDEN_CATALOG.contains(&n.activation) {
                        return fail(format!("hidden node {:?} has activation {}", n.id, n.activation));
                    }
                }
                _ => {
                    if n.activation != ActivationKind::Linear {
                        return fail(format!("non-hidden node {:?} must be linear", n.id));
                    }
                }
            }
        }
        for w in self.connections.windows(2) {
            if w[0].innovation >= w[1].innovation {
                return fail(format!(
                    "innovations not strictly sorted at {:?}",
                    w[1].innovation
                ));
            }
        }
        for c in &self.connections {
            let source = self
                .node(c.source)
                .ok_or_else(|| Error::Invariant(format!("dangling source {:?}", c.source)))?;
            let target = self
                .node(c.target)
                .ok_or_else(|| Error::Invariant(format!("dangling target {:?}", c.target)))?;
            if c.source == c.target {
                return fail(format!("self loop at {:?}", c.source));
            }
            if source.role == NodeRole::Output {
                return fail(format!("connection sourced at output {:?}", c.source));
            }
            if matches!(target.role, NodeRole::Input | NodeRole::Bias) {
                return fail(format!("connection targets non-sink {:?}", c.target));
            }
        }
        if self.find_cycle().is_some() {
            return fail("enabled digraph is cyclic".into());
        }
        Ok(())
    }

    /// Genome file format: nodes, connections, fitness, stable key order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("genome serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Genome> {
        let genome: Genome = serde_json::from_str(text)
            .map_err(|e| Error::Data(format!("malformed genome file: {e}")))?;
        genome.check_invariants()?;
        Ok(genome)
    }
}
