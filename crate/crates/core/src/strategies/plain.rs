//! Uncoded block-parallel training, alone or as two mirrored replicas that
//! compare every stage output.

use crate::cluster::{CostLedger, CostParams, LayerCost, NodeId, Step};
use crate::dnn::{self, LayerSpec};
use crate::linalg::Matrix;

use super::grid::{ceil_div, charge_redistribute, join, split, BlockGrid, LayerGeom};
use super::{
    check_blocks, faulty_product, validate_specs, Attempt, Outcome, RollbackCause, StepContext, Strategy,
    StrategyError, StrategyKind,
};

#[derive(Debug, Clone)]
pub struct PlainGrid {
    kind: StrategyKind,
    specs: Vec<LayerSpec>,
    m: usize,
    n: usize,
    eta: f64,
    geoms: Vec<LayerGeom>,
    /// `grids[replica][layer]`.
    grids: Vec<Vec<BlockGrid>>,
}

/// Grid with `target` nodes for the uncoded baseline, keeping `m` rows and
/// widening the row count `n` first: `(5, 4)` with 40 nodes gives `(5, 8)`.
pub fn uncoded_equal_node_grid(m: usize, n: usize, target: usize) -> (usize, usize) {
    (m, n.max(target / m.max(1)))
}

#[derive(Debug, Clone, Copy)]
struct Costs {
    m: usize,
    n: usize,
    replicas: usize,
}

impl Costs {
    fn block_product(&self, ledger: &mut CostLedger, g: &LayerGeom) {
        ledger.charge_compute(2.0 * (g.rb * g.cb) as f64);
    }

    fn compare(&self, ledger: &mut CostLedger, len: usize) {
        if self.replicas > 1 {
            ledger.charge_point_to_point(len);
        }
    }

    fn feedforward(&self, ledger: &mut CostLedger, g: &LayerGeom, next_cb: Option<usize>) {
        self.block_product(ledger, g);
        ledger.charge_reduce(self.n, g.rb);
        self.compare(ledger, g.rb);
        if let Some(cb) = next_cb {
            charge_redistribute(ledger, self.m, g.out_dim, g.rb, cb);
        }
    }

    fn backprop(&self, ledger: &mut CostLedger, g: &LayerGeom, prev_rb: Option<usize>) {
        self.block_product(ledger, g);
        ledger.charge_reduce(self.m, g.cb);
        self.compare(ledger, g.cb);
        if let Some(rb) = prev_rb {
            charge_redistribute(ledger, self.n, g.in_dim, g.cb, rb);
        }
    }
}

/// Ledger cost of one fault-free layer for the uncoded grid
/// (`replicas = 1`) or replication (`replicas = 2`).
#[allow(clippy::too_many_arguments)]
pub fn plain_layer_cost(
    params: CostParams,
    out_dim: usize,
    in_dim: usize,
    m: usize,
    n: usize,
    replicas: usize,
    has_prev: bool,
    has_next: bool,
) -> LayerCost {
    let costs = Costs { m, n, replicas };
    let g = LayerGeom::new(out_dim, in_dim, m, n);
    let mut ledger = CostLedger::new(params);
    costs.feedforward(&mut ledger, &g, has_next.then(|| ceil_div(out_dim, n)));
    costs.backprop(&mut ledger, &g, has_prev.then(|| ceil_div(in_dim, m)));
    costs.block_product(&mut ledger, &g);
    LayerCost {
        comm: ledger.comm_time(),
        comp: ledger.comp_time(),
    }
}

fn sum_rows(parts: &[Vec<f64>], len: usize) -> Vec<f64> {
    let mut s = vec![0.0; len];
    for p in parts {
        for (a, b) in s.iter_mut().zip(p) {
            *a += b;
        }
    }
    s
}

fn same(a: &[Vec<Vec<f64>>]) -> bool {
    a.windows(2).all(|w| w[0] == w[1])
}

impl PlainGrid {
    pub fn uncoded(
        specs: Vec<LayerSpec>,
        weights: &[Matrix],
        m: usize,
        n: usize,
        eta: f64,
    ) -> Result<Self, StrategyError> {
        Self::build(StrategyKind::Uncoded, specs, weights, m, n, eta)
    }

    /// Two mirrored `m × n` grids.
    pub fn replication(
        specs: Vec<LayerSpec>,
        weights: &[Matrix],
        m: usize,
        n: usize,
        eta: f64,
    ) -> Result<Self, StrategyError> {
        Self::build(StrategyKind::Replication, specs, weights, m, n, eta)
    }

    fn build(
        kind: StrategyKind,
        specs: Vec<LayerSpec>,
        weights: &[Matrix],
        m: usize,
        n: usize,
        eta: f64,
    ) -> Result<Self, StrategyError> {
        validate_specs(&specs)?;
        if m == 0 || n == 0 {
            return Err(StrategyError::Grid {
                m,
                n,
                reason: "grid must be nonempty".into(),
            });
        }
        for s in &specs {
            if s.out_dim < m || s.in_dim < n {
                return Err(StrategyError::Grid {
                    m,
                    n,
                    reason: format!(
                        "layer {}x{} has fewer rows or columns than the grid",
                        s.out_dim, s.in_dim
                    ),
                });
            }
        }
        if weights.len() != specs.len() {
            return Err(StrategyError::BlockCount {
                expected: specs.len(),
                got: weights.len(),
            });
        }
        let geoms: Vec<LayerGeom> = specs.iter().map(|s| LayerGeom::of(s, m, n)).collect();
        let mut layers = Vec::with_capacity(specs.len());
        for (l, (w, g)) in weights.iter().zip(&geoms).enumerate() {
            if w.shape() != (g.out_dim, g.in_dim) {
                return Err(StrategyError::BlockShape {
                    index: l,
                    expected: (g.out_dim, g.in_dim),
                    got: w.shape(),
                });
            }
            layers.push(BlockGrid::new(m, n, |i, j| Some(g.block_of(w, i, j))));
        }
        let replicas = if kind == StrategyKind::Replication { 2 } else { 1 };
        Ok(Self {
            kind,
            specs,
            m,
            n,
            eta,
            geoms,
            grids: vec![layers; replicas],
        })
    }

    pub fn replicas(&self) -> usize {
        self.grids.len()
    }

    pub fn grid_mut(&mut self, replica: usize, layer: usize) -> &mut BlockGrid {
        &mut self.grids[replica][layer]
    }

    fn costs(&self) -> Costs {
        Costs {
            m: self.m,
            n: self.n,
            replicas: self.replicas(),
        }
    }

    fn valid(g: &LayerGeom, i: usize, j: usize) -> (usize, usize) {
        (g.valid_rows(i), g.valid_cols(j))
    }

    fn mismatch(&self, ctx: &mut StepContext<'_>) -> Attempt {
        ctx.ledger.set_layer(None);
        Attempt {
            outcome: Outcome::RolledBack(RollbackCause::ReplicaMismatch),
            loss: None,
        }
    }
}

impl Strategy for PlainGrid {
    fn kind(&self) -> StrategyKind {
        self.kind
    }

    fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    fn node_count(&self) -> usize {
        self.replicas() * self.m * self.n
    }

    fn grid_dims(&self) -> (usize, usize, usize) {
        (self.m, self.n, 0)
    }

    fn learning_rate(&self) -> f64 {
        self.eta
    }

    fn iterate(&mut self, ctx: &mut StepContext<'_>, x: &[f64], label: &[f64]) -> Attempt {
        let layers = self.specs.len();
        let (m, n) = (self.m, self.n);
        let replicas = self.replicas();
        let costs = self.costs();

        let mut xs: Vec<Vec<Vec<f64>>> = Vec::with_capacity(layers);
        let mut cur = split(x, n, self.geoms[0].cb);
        let mut output = Vec::new();

        for l in 0..layers {
            ctx.ledger.set_layer(Some(l));
            let g = self.geoms[l];
            let mut sums: Vec<Vec<Vec<f64>>> = Vec::with_capacity(replicas);
            for r in 0..replicas {
                let mut rs = Vec::with_capacity(m);
                for i in 0..m {
                    let mut parts = Vec::with_capacity(n);
                    for (j, xj) in cur.iter().enumerate() {
                        let noise = ctx.draw(l, Step::O1, NodeId::replica(r as u8, i, j));
                        let valid = Self::valid(&g, i, j);
                        parts.push(faulty_product(noise, self.grids[r][l].get_mut(i, j), valid, |b| {
                            b.matvec(xj)
                        }));
                    }
                    rs.push(sum_rows(&parts, g.rb));
                }
                sums.push(rs);
            }
            let next_cb = (l + 1 < layers).then(|| self.geoms[l + 1].cb);
            costs.feedforward(ctx.ledger, &g, next_cb);
            if !same(&sums) {
                return self.mismatch(ctx);
            }
            let s = join(&sums[0], g.out_dim);
            let act = self.specs[l].activation.apply(&s);
            xs.push(std::mem::take(&mut cur));
            match next_cb {
                Some(cb) => cur = split(&act, n, cb),
                None => output = act,
            }
        }

        let loss = dnn::squared_error(&output, label);
        let last = layers - 1;
        let delta_out = dnn::output_delta(self.specs[last].activation, &output, label);
        let mut ds: Vec<Vec<Vec<f64>>> = vec![Vec::new(); layers];
        let mut d = split(&delta_out, m, self.geoms[last].rb);

        for l in (0..layers).rev() {
            ctx.ledger.set_layer(Some(l));
            let g = self.geoms[l];
            let mut sums: Vec<Vec<Vec<f64>>> = Vec::with_capacity(replicas);
            for r in 0..replicas {
                let mut cs = Vec::with_capacity(n);
                for j in 0..n {
                    let mut parts = Vec::with_capacity(m);
                    for (i, di) in d.iter().enumerate() {
                        let noise = ctx.draw(l, Step::O2, NodeId::replica(r as u8, i, j));
                        let valid = Self::valid(&g, i, j);
                        parts.push(faulty_product(noise, self.grids[r][l].get_mut(i, j), valid, |b| {
                            b.vecmat(di)
                        }));
                    }
                    cs.push(sum_rows(&parts, g.cb));
                }
                sums.push(cs);
            }
            let prev_rb = (l > 0).then(|| self.geoms[l - 1].rb);
            costs.backprop(ctx.ledger, &g, prev_rb);
            if !same(&sums) {
                let mut a = self.mismatch(ctx);
                a.loss = Some(loss);
                return a;
            }
            let next = prev_rb.map(|rb| {
                let c = join(&sums[0], g.in_dim);
                let x_in = join(&xs[l], g.in_dim);
                let act = self.specs[l - 1].activation;
                let delta: Vec<f64> = c.iter().zip(&x_in).map(|(&ci, &xi)| ci * act.g(xi)).collect();
                split(&delta, m, rb)
            });
            ds[l] = std::mem::take(&mut d);
            if let Some(p) = next {
                d = p;
            }
        }

        for l in 0..layers {
            ctx.ledger.set_layer(Some(l));
            let g = self.geoms[l];
            for r in 0..replicas {
                for (i, di) in ds[l].iter().enumerate() {
                    for (j, xj) in xs[l].iter().enumerate() {
                        let block = self.grids[r][l].get_mut(i, j);
                        block.rank1_update(self.eta, di, xj);
                        if let Some(mut noise) = ctx.draw(l, Step::O3, NodeId::replica(r as u8, i, j)) {
                            let valid = Self::valid(&g, i, j);
                            noise.corrupt_block(block, valid.0, valid.1);
                        }
                    }
                }
            }
            costs.block_product(ctx.ledger, &g);
        }
        ctx.ledger.set_layer(None);
        Attempt {
            outcome: Outcome::Clean,
            loss: Some(loss),
        }
    }

    fn stored_blocks(&self) -> Vec<Matrix> {
        let layers = self.specs.len();
        let mut out = Vec::new();
        for l in 0..layers {
            for replica in &self.grids {
                out.extend(replica[l].scan().cloned());
            }
        }
        out
    }

    fn load_blocks(&mut self, blocks: Vec<Matrix>) -> Result<(), StrategyError> {
        check_blocks(&self.stored_blocks(), &blocks)?;
        let mut it = blocks.into_iter();
        for l in 0..self.specs.len() {
            for replica in &mut self.grids {
                for b in replica[l].scan_mut() {
                    *b = it.next().expect("count checked");
                }
            }
        }
        Ok(())
    }

    fn logical_weights(&self) -> Vec<Matrix> {
        self.geoms
            .iter()
            .zip(&self.grids[0])
            .map(|(g, grid)| g.assemble(|i, j| grid.get(i, j).clone()))
            .collect()
    }

    /// Replicas compare their stored blocks before a checkpoint is written.
    fn verify_for_checkpoint(&self, ledger: &mut CostLedger) -> bool {
        if self.replicas() < 2 {
            return true;
        }
        for (l, g) in self.geoms.iter().enumerate() {
            ledger.charge_point_to_point(g.rb * g.cb);
            if self.grids[0][l] != self.grids[1][l] {
                return false;
            }
        }
        true
    }
}
