//! (α, β, γ) cost accounting and the collective primitives that charge it.
//!
//! Group sizes enter through `log2`, charged as a real number. Groups that
//! run the same collective in parallel (every row, every column) are charged
//! once for the phase.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CollectiveError {
    #[error("collective over an empty group")]
    EmptyGroup,
    #[error("vector {index} has length {got}, expected {expected}")]
    Length { index: usize, expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Latency per message.
    pub alpha: f64,
    /// Cost per element sent.
    pub beta: f64,
    /// Cost per arithmetic operation.
    pub gamma: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            alpha: 1e-5,
            beta: 1e-9,
            gamma: 1e-11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Primitive {
    Reduce,
    AllReduce,
    Broadcast,
    Gather,
    AllGather,
    PointToPoint,
    Compute,
    VerifyDetect,
    VerifyDecode,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LayerCost {
    pub comm: f64,
    pub comp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostLedger {
    params: CostParams,
    comm: f64,
    comp: f64,
    checkpoint: f64,
    counts: BTreeMap<Primitive, u64>,
    layers: Vec<LayerCost>,
    current: Option<usize>,
}

fn lg(p: usize) -> f64 {
    (p as f64).log2()
}

impl CostLedger {
    pub fn new(params: CostParams) -> Self {
        Self {
            params,
            comm: 0.0,
            comp: 0.0,
            checkpoint: 0.0,
            counts: BTreeMap::new(),
            layers: Vec::new(),
            current: None,
        }
    }

    pub fn params(&self) -> CostParams {
        self.params
    }

    pub fn comm_time(&self) -> f64 {
        self.comm
    }

    pub fn comp_time(&self) -> f64 {
        self.comp
    }

    pub fn checkpoint_time(&self) -> f64 {
        self.checkpoint
    }

    pub fn total_time(&self) -> f64 {
        self.comm + self.comp + self.checkpoint
    }

    pub fn count(&self, p: Primitive) -> u64 {
        self.counts.get(&p).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<Primitive, u64> {
        &self.counts
    }

    /// Subsequent charges also land in the bucket of `layer`.
    pub fn set_layer(&mut self, layer: Option<usize>) {
        self.current = layer;
        if let Some(l) = layer {
            if self.layers.len() <= l {
                self.layers.resize(l + 1, LayerCost::default());
            }
        }
    }

    pub fn layer(&self, l: usize) -> LayerCost {
        self.layers.get(l).copied().unwrap_or_default()
    }

    pub fn reset_layers(&mut self) {
        self.layers.iter_mut().for_each(|c| *c = LayerCost::default());
    }

    fn add(&mut self, prim: Primitive, comm: f64, comp: f64) {
        debug_assert!(comm >= 0.0 && comp >= 0.0);
        self.comm += comm;
        self.comp += comp;
        *self.counts.entry(prim).or_insert(0) += 1;
        if let Some(l) = self.current {
            self.layers[l].comm += comm;
            self.layers[l].comp += comp;
        }
    }

    pub fn charge_reduce(&mut self, group: usize, len: usize) {
        let CostParams { alpha, beta, gamma } = self.params;
        let (p, n) = (group as f64, len as f64);
        self.add(
            Primitive::Reduce,
            alpha * lg(group) + beta * n,
            gamma * (p - 1.0) / p * n,
        );
    }

    pub fn charge_all_reduce(&mut self, group: usize, len: usize) {
        let CostParams { alpha, beta, gamma } = self.params;
        let (p, n) = (group as f64, len as f64);
        self.add(
            Primitive::AllReduce,
            alpha * lg(group) + 2.0 * beta * (p - 1.0) / p * n,
            gamma * (p - 1.0) / p * n,
        );
    }

    pub fn charge_broadcast(&mut self, group: usize, len: usize) {
        let CostParams { alpha, beta, .. } = self.params;
        self.add(Primitive::Broadcast, alpha * lg(group) + beta * len as f64, 0.0);
    }

    pub fn charge_gather(&mut self, group: usize, len: usize) {
        let comm = self.gather_comm(group, len);
        self.add(Primitive::Gather, comm, 0.0);
    }

    pub fn charge_all_gather(&mut self, group: usize, len: usize) {
        let comm = self.gather_comm(group, len);
        self.add(Primitive::AllGather, comm, 0.0);
    }

    fn gather_comm(&self, group: usize, len: usize) -> f64 {
        let CostParams { alpha, beta, .. } = self.params;
        alpha * lg(group) + 2.0 * beta * (group as f64 - 1.0) * len as f64
    }

    /// One message of `len` elements between two nodes.
    pub fn charge_point_to_point(&mut self, len: usize) {
        let CostParams { alpha, beta, .. } = self.params;
        self.add(Primitive::PointToPoint, alpha + beta * len as f64, 0.0);
    }

    pub fn charge_compute(&mut self, flops: f64) {
        let g = self.params.gamma;
        self.add(Primitive::Compute, 0.0, g * flops);
    }

    /// Exchange of the `2t` check values among all `P̂` nodes.
    pub fn charge_verify_detect(&mut self, nodes: usize, t: usize) {
        let CostParams { alpha, beta, gamma } = self.params;
        let pt = (nodes * t) as f64;
        self.add(Primitive::VerifyDetect, alpha * lg(nodes) + 2.0 * beta * pt, gamma * pt);
    }

    /// Exchange of the flagged-node lists among all `P̂` nodes.
    pub fn charge_verify_decode(&mut self, nodes: usize) {
        let CostParams { alpha, beta, .. } = self.params;
        let p = nodes as f64;
        self.add(Primitive::VerifyDecode, alpha * lg(nodes) + beta * p * p, 0.0);
    }

    pub fn charge_checkpoint(&mut self, seconds: f64) {
        self.checkpoint += seconds;
    }
}

fn check_group(vectors: &[&[f64]]) -> Result<usize, CollectiveError> {
    let first = vectors.first().ok_or(CollectiveError::EmptyGroup)?;
    let len = first.len();
    for (index, v) in vectors.iter().enumerate() {
        if v.len() != len {
            return Err(CollectiveError::Length {
                index,
                expected: len,
                got: v.len(),
            });
        }
    }
    Ok(len)
}

/// Sum in member order, so the result never depends on arrival order.
fn ordered_sum(vectors: &[&[f64]], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for v in vectors {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o += x;
        }
    }
    out
}

/// Sum delivered to one node.
pub fn reduce(ledger: &mut CostLedger, vectors: &[&[f64]]) -> Result<Vec<f64>, CollectiveError> {
    let len = check_group(vectors)?;
    ledger.charge_reduce(vectors.len(), len);
    Ok(ordered_sum(vectors, len))
}

/// Sum delivered to every node; one copy is returned since all are equal.
pub fn all_reduce(ledger: &mut CostLedger, vectors: &[&[f64]]) -> Result<Vec<f64>, CollectiveError> {
    let len = check_group(vectors)?;
    ledger.charge_all_reduce(vectors.len(), len);
    Ok(ordered_sum(vectors, len))
}

/// All-reduce over members tagged with their id; the sum runs in id order
/// whatever order the members arrive in.
pub fn all_reduce_members(ledger: &mut CostLedger, members: &[(usize, &[f64])]) -> Result<Vec<f64>, CollectiveError> {
    let mut sorted = members.to_vec();
    sorted.sort_by_key(|&(id, _)| id);
    let vectors: Vec<&[f64]> = sorted.into_iter().map(|(_, v)| v).collect();
    all_reduce(ledger, &vectors)
}

pub fn broadcast(ledger: &mut CostLedger, group: usize, vector: &[f64]) -> Result<Vec<Vec<f64>>, CollectiveError> {
    if group == 0 {
        return Err(CollectiveError::EmptyGroup);
    }
    ledger.charge_broadcast(group, vector.len());
    Ok(vec![vector.to_vec(); group])
}

pub fn gather(ledger: &mut CostLedger, vectors: &[&[f64]]) -> Result<Vec<Vec<f64>>, CollectiveError> {
    let len = check_group(vectors)?;
    ledger.charge_gather(vectors.len(), len);
    Ok(vectors.iter().map(|v| v.to_vec()).collect())
}

pub fn all_gather(ledger: &mut CostLedger, vectors: &[&[f64]]) -> Result<Vec<Vec<f64>>, CollectiveError> {
    let len = check_group(vectors)?;
    ledger.charge_all_gather(vectors.len(), len);
    Ok(vectors.iter().map(|v| v.to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> CostLedger {
        CostLedger::new(CostParams {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
        })
    }

    #[test]
    fn all_reduce_of_ones_over_four_nodes() {
        let mut l = CostLedger::new(CostParams {
            alpha: 3.0,
            beta: 0.5,
            gamma: 0.0,
        });
        let v = [1.0, 1.0];
        let out = all_reduce(&mut l, &[&v, &v, &v, &v]).unwrap();
        assert_eq!(out, vec![4.0, 4.0]);
        let expected = 3.0 * 2.0 + 2.0 * 0.5 * 0.75 * 2.0;
        assert!((l.comm_time() - expected).abs() < 1e-15);
        assert_eq!(l.count(Primitive::AllReduce), 1);
    }

    #[test]
    fn broadcast_to_single_node() {
        let mut l = unit();
        let out = broadcast(&mut l, 1, &[2.0, 5.0, 1.0]).unwrap();
        assert_eq!(out, vec![vec![2.0, 5.0, 1.0]]);
        assert_eq!(l.comm_time(), 3.0);
    }

    #[test]
    fn reduce_matches_direct_sum_and_formula() {
        let mut l = CostLedger::new(CostParams {
            alpha: 0.3,
            beta: 0.01,
            gamma: 0.002,
        });
        let vs: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..7).map(|j| (i * 7 + j) as f64 * 0.37 - 3.0).collect())
            .collect();
        let refs: Vec<&[f64]> = vs.iter().map(Vec::as_slice).collect();
        let out = reduce(&mut l, &refs).unwrap();
        for j in 0..7 {
            let direct: f64 = vs.iter().map(|v| v[j]).sum();
            assert!((out[j] - direct).abs() <= 1e-12);
        }
        assert!((l.comm_time() - (0.3 * 5f64.log2() + 0.01 * 7.0)).abs() < 1e-15);
        assert!((l.comp_time() - 0.002 * 0.8 * 7.0).abs() < 1e-15);
    }

    #[test]
    fn gather_costs() {
        let mut l = unit();
        let a = [1.0, 2.0];
        let b = [3.0, 4.0];
        let out = all_gather(&mut l, &[&a, &b]).unwrap();
        assert_eq!(out, vec![a.to_vec(), b.to_vec()]);
        assert_eq!(l.comm_time(), 1.0 + 2.0 * 1.0 * 2.0);
        assert_eq!(l.comp_time(), 0.0);
    }

    #[test]
    fn empty_and_ragged_groups_are_rejected() {
        let mut l = unit();
        assert_eq!(reduce(&mut l, &[]), Err(CollectiveError::EmptyGroup));
        assert!(matches!(
            all_reduce(&mut l, &[&[1.0], &[1.0, 2.0]]),
            Err(CollectiveError::Length { index: 1, .. })
        ));
        assert_eq!(broadcast(&mut l, 0, &[1.0]), Err(CollectiveError::EmptyGroup));
    }

    #[test]
    fn layer_buckets_partition_totals() {
        let mut l = unit();
        l.charge_broadcast(4, 10);
        l.set_layer(Some(1));
        l.charge_all_reduce(4, 8);
        l.set_layer(Some(0));
        l.charge_compute(5.0);
        l.set_layer(None);
        let sum = l.layer(0).comm + l.layer(1).comm + 2.0 + 10.0;
        assert!((sum - l.comm_time()).abs() < 1e-12);
        assert_eq!(l.layer(0).comp, 5.0);
    }

    #[test]
    fn member_order_does_not_change_the_sum() {
        let vs: Vec<Vec<f64>> = (0..6)
            .map(|i| vec![0.1 * i as f64, 1e16 / (i as f64 + 1.0), -3.3])
            .collect();
        let forward: Vec<(usize, &[f64])> = vs.iter().enumerate().map(|(i, v)| (i, v.as_slice())).collect();
        let mut shuffled = forward.clone();
        shuffled.reverse();
        shuffled.swap(1, 4);
        let a = all_reduce_members(&mut unit(), &forward).unwrap();
        let b = all_reduce_members(&mut unit(), &shuffled).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn verification_charges() {
        let mut l = unit();
        l.charge_verify_detect(32, 1);
        assert!((l.comm_time() - (5.0 + 64.0)).abs() < 1e-12);
        assert_eq!(l.comp_time(), 32.0);
        l.charge_verify_decode(32);
        assert!((l.comm_time() - (5.0 + 64.0 + 5.0 + 1024.0)).abs() < 1e-12);
    }
}
