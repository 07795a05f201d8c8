//! Historical markings for structural mutations.
//!
//! The registry hands out node ids and innovation numbers. Within one
//! generation it memoizes structural mutations so that the same mutation
//! arising in two genomes receives the same markers; the memo is cleared at
//! every generation boundary.

use std::collections::HashMap;

use crate::activation::ActivationKind;
use crate::genome::{Innovation, NodeId};

/// Markers assigned to a node-split: the new node plus its two connections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitMarkers {
    pub node: NodeId,
    /// Innovation of the connection entering the new node.
    pub incoming: Innovation,
    /// Innovation of the connection leaving the new node.
    pub outgoing: Innovation,
}

#[derive(Debug, Clone)]
pub struct InnovationRegistry {
    next_innovation: u32,
    next_node_id: u32,
    /// (split connection innovation, drawn activation) -> markers.
    /// Keying on the activation keeps a node id bound to a single kind
    /// population-wide, which crossover relies on.
    split_memo: HashMap<(Innovation, ActivationKind), SplitMarkers>,
    /// (source, target) -> innovation for new connections.
    edge_memo: HashMap<(NodeId, NodeId), Innovation>,
}

impl InnovationRegistry {
    /// Registry primed for populations of minimal genomes with the given
    /// interface: node ids 0..n_in (inputs), n_in (bias), then outputs, and
    /// one innovation per initial (input|bias) -> output connection.
    pub fn for_io(n_inputs: usize, n_outputs: usize) -> Self {
        InnovationRegistry {
            next_innovation: ((n_inputs + 1) * n_outputs) as u32,
            next_node_id: (n_inputs + 1 + n_outputs) as u32,
            split_memo: HashMap::new(),
            edge_memo: HashMap::new(),
        }
    }

    /// Clear the per-generation memo. Counters keep increasing for the
    /// whole run.
    pub fn begin_generation(&mut self) {
        self.split_memo.clear();
        self.edge_memo.clear();
    }

    /// Markers for splitting connection `conn` with a new node of `kind`.
    /// Replays the same markers for a repeated split within one generation.
    pub fn split(&mut self, conn: Innovation, kind: ActivationKind) -> SplitMarkers {
        if let Some(&markers) = self.split_memo.get(&(conn, kind)) {
            return markers;
        }
        let markers = SplitMarkers {
            node: self.fresh_node_id(),
            incoming: self.fresh_innovation(),
            outgoing: self.fresh_innovation(),
        };
        self.split_memo.insert((conn, kind), markers);
        markers
    }

    /// Innovation for a new `source -> target` connection, replayed within
    /// one generation.
    pub fn edge(&mut self, source: NodeId, target: NodeId) -> Innovation {
        if let Some(&innovation) = self.edge_memo.get(&(source, target)) {
            return innovation;
        }
        let innovation = self.fresh_innovation();
        self.edge_memo.insert((source, target), innovation);
        innovation
    }

    /// Unmemoized fresh node id (activation mutation wants every event to
    /// produce a distinct node).
    pub fn fresh_node_id(&mut self) -> NodeId {
        let id = NodeId(self.next_node_id);
        self.next_node_id += 1;
        id
    }

    /// Unmemoized fresh innovation number.
    pub fn fresh_innovation(&mut self) -> Innovation {
        let innovation = Innovation(self.next_innovation);
        self.next_innovation += 1;
        innovation
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primed_counters_skip_the_minimal_interface() {
        let reg = InnovationRegistry::for_io(2, 1);
        let mut reg = reg;
        assert_eq!(reg.fresh_node_id(), NodeId(4));
        assert_eq!(reg.fresh_innovation(), Innovation(3));
    }

    #[test]
    fn split_replays_within_a_generation() {
        let mut reg = InnovationRegistry::for_io(2, 1);
        let a = reg.split(Innovation(0), ActivationKind::Sigmoid);
        let b = reg.split(Innovation(0), ActivationKind::Sigmoid);
        assert_eq!(a, b);
        // a different drawn kind is a different innovation
        let c = reg.split(Innovation(0), ActivationKind::Step);
        assert_ne!(a.node, c.node);
    }

    #[test]
    fn memo_clears_at_generation_boundary() {
        let mut reg = InnovationRegistry::for_io(2, 1);
        let a = reg.split(Innovation(0), ActivationKind::Sigmoid);
        reg.begin_generation();
        let b = reg.split(Innovation(0), ActivationKind::Sigmoid);
        assert_ne!(a.node, b.node);
        assert!(b.incoming > a.outgoing, "counters never rewind");
    }

    #[test]
    fn edge_replays_within_a_generation() {
        let mut reg = InnovationRegistry::for_io(2, 1);
        let a = reg.edge(NodeId(0), NodeId(3));
        let b = reg.edge(NodeId(0), NodeId(3));
        assert_eq!(a, b);
        assert_ne!(reg.edge(NodeId(1), NodeId(3)), a);
    }
}
