//! Compilation of genomes into executable feedforward phenotypes.
//!
//! A phenotype is a flattened evaluation plan: nodes mapped to dense
//! indices, a topological order over the enabled-connection digraph (ties
//! broken by ascending node id), and per-node incoming edge lists. Input
//! nodes emit their component of the input vector, the bias emits 1.0, and
//! every other node emits apply(kind, sum of weighted inputs).

use std::collections::BTreeSet;

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::genome::{Genome, NodeId, NodeRole};

#[derive(Debug, Clone)]
pub struct Phenotype {
    /// Dense index -> node id, ascending.
    ids: Vec<NodeId>,
    kinds: Vec<ActivationKind>,
    /// True for input and bias nodes, whose values are seeded not computed.
    seeded: Vec<bool>,
    /// Dense indices in topological order.
    eval_order: Vec<u32>,
    /// CSR layout: incoming edges of dense node i are
    /// edges[offsets[i]..offsets[i + 1]].
    offsets: Vec<u32>,
    edges: Vec<(u32, f64)>,
    input_indices: Vec<u32>,
    output_indices: Vec<u32>,
    bias_index: u32,
}

impl Phenotype {
    pub fn compile(genome: &Genome) -> Result<Phenotype> {
        let n = genome.nodes.len();
        let ids: Vec<NodeId> = genome.nodes.iter().map(|node| node.id).collect();
        let dense = |id: NodeId| -> Result<usize> {
            ids.binary_search(&id)
                .map_err(|_| Error::Invariant(format!("connection references unknown node {id:?}")))
        };

        let mut incoming: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        let mut out_adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut indegree = vec![0usize; n];
        for c in genome.enabled_connections() {
            let s = dense(c.source)?;
            let t = dense(c.target)?;
            incoming[t].push((s as u32, c.weight));
            out_adjacency[s].push(t as u32);
            indegree[t] += 1;
        }

        // Kahn's algorithm; the ready set is ordered by node id, which the
        // dense indices mirror.
        let mut ready: BTreeSet<u32> = indegree
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| i as u32)
            .collect();
        let mut eval_order = Vec::with_capacity(n);
        while let Some(&next) = ready.iter().next() {
            ready.remove(&next);
            eval_order.push(next);
            for &t in &out_adjacency[next as usize] {
                indegree[t as usize] -= 1;
                if indegree[t as usize] == 0 {
                    ready.insert(t);
                }
            }
        }
        if eval_order.len() != n {
            return Err(Error::Invariant(
                "cycle among enabled connections; genome operators must prevent this".into(),
            ));
        }

        let mut offsets = Vec::with_capacity(n + 1);
        let mut edges = Vec::new();
        offsets.push(0u32);
        for list in &incoming {
            edges.extend_from_slice(list);
            offsets.push(edges.len() as u32);
        }

        let mut input_indices = Vec::new();
        let mut output_indices = Vec::new();
        let mut bias_index = None;
        let mut seeded = vec![false; n];
        for (i, node) in genome.nodes.iter().enumerate() {
            match node.role {
                NodeRole::Input => {
                    input_indices.push(i as u32);
                    seeded[i] = true;
                }
                NodeRole::Output => output_indices.push(i as u32),
                NodeRole::Bias => {
                    if bias_index.replace(i as u32).is_some() {
                        return Err(Error::Invariant("multiple bias nodes".into()));
                    }
                    seeded[i] = true;
                }
                NodeRole::Hidden => {}
            }
        }
        let bias_index =
            bias_index.ok_or_else(|| Error::Invariant("genome has no bias node".into()))?;
        if output_indices.is_empty() {
            return Err(Error::Invariant("genome has no output nodes".into()));
        }

        Ok(Phenotype {
            ids,
            kinds: genome.nodes.iter().map(|node| node.activation).collect(),
            seeded,
            eval_order,
            offsets,
            edges,
            input_indices,
            output_indices,
            bias_index,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.input_indices.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.output_indices.len()
    }

    /// Node ids in evaluation order.
    pub fn eval_order(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.eval_order.iter().map(|&i| self.ids[i as usize])
    }

    #[inline]
    fn eval_into(&self, x: &[f64], values: &mut [f64], outputs: &mut [f64]) {
        for (slot, &i) in x.iter().zip(self.input_indices.iter()) {
            values[i as usize] = *slot;
        }
        values[self.bias_index as usize] = 1.0;
        for &i in &self.eval_order {
            let i = i as usize;
            if self.seeded[i] {
                continue;
            }
            let mut sum = 0.0;
            for &(source, weight) in
                &self.edges[self.offsets[i] as usize..self.offsets[i + 1] as usize]
            {
                sum += weight * values[source as usize];
            }
            values[i] = self.kinds[i].eval(sum);
        }
        for (slot, &i) in outputs.iter_mut().zip(self.output_indices.iter()) {
            *slot = values[i as usize];
        }
    }

    /// Evaluate the network on one input vector; returns the output-node
    /// emissions in declared (node id) order.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_indices.len() {
            return Err(Error::Usage(format!(
                "input dimension {} does not match the {} input nodes",
                x.len(),
                self.input_indices.len()
            )));
        }
        let mut values = vec![0.0; self.ids.len()];
        let mut outputs = vec![0.0; self.output_indices.len()];
        self.eval_into(x, &mut values, &mut outputs);
        Ok(outputs)
    }

    /// Mean squared error over all samples and target dimensions.
    pub fn mse(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
        self.check_dataset(inputs, targets)?;
        let mut values = vec![0.0; self.ids.len()];
        let mut outputs = vec![0.0; self.output_indices.len()];
        let mut sum = 0.0;
        for (x, y) in inputs.iter().zip(targets.iter()) {
            self.eval_into(x, &mut values, &mut outputs);
            for (o, t) in outputs.iter().zip(y.iter()) {
                let e = o - t;
                sum += e * e;
            }
        }
        Ok(sum / (inputs.len() * self.output_indices.len()) as f64)
    }

    /// MSE on thresholded labels, the classification fitness: predictions
    /// are rounded at 0.5 before comparing against the 0/1 targets.
    pub fn label_mse(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
        self.check_dataset(inputs, targets)?;
        if self.output_indices.len() != 1 {
            return Err(Error::Usage(
                "label MSE requires a single-output phenotype".into(),
            ));
        }
        let mut values = vec![0.0; self.ids.len()];
        let mut outputs = vec![0.0; 1];
        let mut sum = 0.0;
        for (x, y) in inputs.iter().zip(targets.iter()) {
            self.eval_into(x, &mut values, &mut outputs);
            let label = if outputs[0] >= 0.5 { 1.0 } else { 0.0 };
            let e = label - y[0];
            sum += e * e;
        }
        Ok(sum / inputs.len() as f64)
    }

    /// Threshold a single-output network at 0.5; the boundary maps to 1.
    pub fn classify(&self, x: &[f64]) -> Result<u8> {
        if self.output_indices.len() != 1 {
            return Err(Error::Usage(
                "classification requires a single-output phenotype".into(),
            ));
        }
        let out = self.evaluate(x)?;
        Ok(if out[0] >= 0.5 { 1 } else { 0 })
    }

    fn check_dataset(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<()> {
        if inputs.is_empty() {
            return Err(Error::Usage("empty dataset".into()));
        }
        if inputs.len() != targets.len() {
            return Err(Error::Usage(format!(
                "row count mismatch: {} inputs vs {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if inputs[0].len() != self.input_indices.len()
            || targets[0].len() != self.output_indices.len()
        {
            return Err(Error::Usage(format!(
                "dimension mismatch: dataset is {}/{}, network is {}/{}",
                inputs[0].len(),
                targets[0].len(),
                self.input_indices.len(),
                self.output_indices.len()
            )));
        }
        Ok(())
    }
}
