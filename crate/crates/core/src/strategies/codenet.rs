//! The coded strategy.
//!
//! Each layer's weight matrix is split over an `m × n` base grid. Rows
//! `m..m+2t` store `W̃_{i,j} = Σ_u G_r[u][i] W_{u,j}` and columns `n..n+2t`
//! store `W̃_{i,j} = Σ_v G_c[v][j] W_{i,v}`; the corner is empty. Weights are
//! encoded once. Afterwards every node updates its own block from coded
//! vectors, which keeps the parity structure intact.

use crate::cluster::{CostLedger, CostParams, GridLayout, LayerCost, NodeId, Step};
use crate::codec::{BlockVector, DecodeStatus, MdsCode};
use crate::dnn::{self, LayerSpec};
use crate::linalg::{self, Matrix};

use super::grid::{ceil_div, charge_redistribute, join, split, BlockGrid, LayerGeom};
use super::{
    check_blocks, faulty_product, validate_specs, Attempt, ErrorFlag, Outcome, RollbackCause, Stage, StepContext,
    Strategy, StrategyError, StrategyKind,
};

#[derive(Debug, Clone)]
pub struct CodeNet {
    specs: Vec<LayerSpec>,
    layout: GridLayout,
    t: usize,
    row_code: MdsCode,
    col_code: MdsCode,
    eta: f64,
    geoms: Vec<LayerGeom>,
    grids: Vec<BlockGrid>,
}

/// Linear combination `Σ c_k B_k` of equally shaped blocks.
fn combine<'a>(terms: impl IntoIterator<Item = (f64, &'a Matrix)>, rows: usize, cols: usize) -> Matrix {
    let mut out = Matrix::zeros(rows, cols);
    for (c, b) in terms {
        if c != 0.0 {
            out.add_scaled(c, b);
        }
    }
    out
}

fn combine_vecs<'a>(terms: impl IntoIterator<Item = (f64, &'a [f64])>, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (c, v) in terms {
        if c != 0.0 {
            linalg::axpy(c, v, &mut out);
        }
    }
    out
}

/// Phase-by-phase charges of one layer. The simulation and the dry-run cost
/// plan both go through these, so they cannot drift apart.
#[derive(Debug, Clone, Copy)]
struct Costs {
    m: usize,
    n: usize,
    t: usize,
    nodes: usize,
}

impl Costs {
    fn rows(&self) -> usize {
        self.m + 2 * self.t
    }

    fn cols(&self) -> usize {
        self.n + 2 * self.t
    }

    fn block_product(&self, ledger: &mut CostLedger, g: &LayerGeom) {
        ledger.charge_compute(2.0 * (g.rb * g.cb) as f64);
    }

    fn ff_sum(&self, ledger: &mut CostLedger, g: &LayerGeom) {
        ledger.charge_all_reduce(self.n, g.rb);
    }

    fn bp_sum(&self, ledger: &mut CostLedger, g: &LayerGeom) {
        ledger.charge_all_reduce(self.m, g.cb);
    }

    /// The `2t` checks, one all-reduce per column (rows in backprop).
    fn checks(&self, ledger: &mut CostLedger, group: usize, len: usize) {
        if self.t > 0 {
            ledger.charge_all_reduce(group, 2 * self.t * len);
            ledger.charge_verify_detect(self.nodes, self.t);
        }
    }

    /// Additional encoding of the `2t` coded vectors for the inactive nodes.
    fn extra_encoding(&self, ledger: &mut CostLedger, group: usize, len: usize) {
        if self.t > 0 {
            ledger.charge_reduce(group, 2 * self.t * len);
        }
    }

    fn decode(&self, ledger: &mut CostLedger, group: usize, len: usize) {
        ledger.charge_all_gather(group, len);
        ledger.charge_verify_decode(self.nodes);
    }

    fn regenerate(&self, ledger: &mut CostLedger, sources: usize, g: &LayerGeom) {
        ledger.charge_reduce(sources + 1, g.rb * g.cb);
        ledger.charge_compute(2.0 * (sources * g.rb * g.cb) as f64);
    }

    fn clean_feedforward(&self, ledger: &mut CostLedger, g: &LayerGeom, next_cb: Option<usize>) {
        self.block_product(ledger, g);
        self.ff_sum(ledger, g);
        self.checks(ledger, self.rows(), g.rb);
        self.extra_encoding(ledger, self.cols(), g.cb);
        if let Some(cb) = next_cb {
            charge_redistribute(ledger, self.rows(), g.out_dim, g.rb, cb);
        }
    }

    fn clean_backprop(&self, ledger: &mut CostLedger, g: &LayerGeom, prev_rb: Option<usize>) {
        self.block_product(ledger, g);
        self.bp_sum(ledger, g);
        self.checks(ledger, self.cols(), g.cb);
        self.extra_encoding(ledger, self.rows(), g.rb);
        if let Some(rb) = prev_rb {
            charge_redistribute(ledger, self.cols(), g.in_dim, g.cb, rb);
        }
    }

    fn update(&self, ledger: &mut CostLedger, g: &LayerGeom) {
        self.block_product(ledger, g);
    }
}

/// Ledger cost of one fault-free layer (feedforward, backprop and update)
/// of an `out_dim × in_dim` layer on an `m × n` grid with tolerance `t`,
/// computed without allocating any weights. `has_next` and `has_prev` say
/// whether the layer is followed or preceded by another one.
#[allow(clippy::too_many_arguments)]
pub fn codenet_layer_cost(
    params: CostParams,
    out_dim: usize,
    in_dim: usize,
    m: usize,
    n: usize,
    t: usize,
    has_prev: bool,
    has_next: bool,
) -> LayerCost {
    let nodes = m * n + 2 * (m + n) * t;
    let costs = Costs { m, n, t, nodes };
    let g = LayerGeom::new(out_dim, in_dim, m, n);
    let mut ledger = CostLedger::new(params);
    let next_cb = has_next.then(|| ceil_div(out_dim, n));
    let prev_rb = has_prev.then(|| ceil_div(in_dim, m));
    costs.clean_feedforward(&mut ledger, &g, next_cb);
    costs.clean_backprop(&mut ledger, &g, prev_rb);
    costs.update(&mut ledger, &g);
    LayerCost {
        comm: ledger.comm_time(),
        comp: ledger.comp_time(),
    }
}

enum LineResult {
    Clean(Vec<Vec<f64>>),
    Corrected(Vec<Vec<f64>>, Vec<usize>),
    Abort(RollbackCause),
}

impl CodeNet {
    /// Cauchy codes on both axes.
    pub fn new(
        specs: Vec<LayerSpec>,
        weights: &[Matrix],
        m: usize,
        n: usize,
        t: usize,
        eta: f64,
    ) -> Result<Self, StrategyError> {
        let row_code = MdsCode::cauchy(m, t)?;
        let col_code = MdsCode::cauchy(n, t)?;
        Self::with_codes(specs, weights, row_code, col_code, eta)
    }

    /// Explicit row code `G_r` (over the `m` row blocks) and column code
    /// `G_c` (over the `n` column blocks).
    pub fn with_codes(
        specs: Vec<LayerSpec>,
        weights: &[Matrix],
        row_code: MdsCode,
        col_code: MdsCode,
        eta: f64,
    ) -> Result<Self, StrategyError> {
        validate_specs(&specs)?;
        let (m, n) = (row_code.k(), col_code.k());
        if row_code.t() != col_code.t() {
            return Err(StrategyError::Grid {
                m,
                n,
                reason: "row and column codes must tolerate the same number of errors".into(),
            });
        }
        let t = row_code.t();
        let layout = GridLayout::symmetric(m, n, t).map_err(|e| StrategyError::Grid {
            m,
            n,
            reason: e.to_string(),
        })?;
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
        let mut net = Self {
            specs,
            layout,
            t,
            row_code,
            col_code,
            eta,
            geoms,
            grids: Vec::new(),
        };
        for (l, w) in weights.iter().enumerate() {
            let g = net.geoms[l];
            if w.shape() != (g.out_dim, g.in_dim) {
                return Err(StrategyError::BlockShape {
                    index: l,
                    expected: (g.out_dim, g.in_dim),
                    got: w.shape(),
                });
            }
            let grid = net.encode_layer(&g, w);
            net.grids.push(grid);
        }
        Ok(net)
    }

    fn encode_layer(&self, g: &LayerGeom, w: &Matrix) -> BlockGrid {
        let (m, n) = (g.m, g.n);
        let base: Vec<Vec<Matrix>> = (0..m).map(|i| (0..n).map(|j| g.block_of(w, i, j)).collect()).collect();
        let layout = self.layout;
        BlockGrid::new(layout.total_rows(), layout.total_cols(), |i, j| {
            if !layout.contains(i, j) {
                None
            } else if i < m && j < n {
                Some(base[i][j].clone())
            } else if i >= m {
                Some(combine(
                    (0..m).map(|u| (self.row_code.coeff(u, i), &base[u][j])),
                    g.rb,
                    g.cb,
                ))
            } else {
                Some(combine(
                    (0..n).map(|v| (self.col_code.coeff(v, j), &base[i][v])),
                    g.rb,
                    g.cb,
                ))
            }
        })
    }

    pub fn layout(&self) -> GridLayout {
        self.layout
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn row_code(&self) -> &MdsCode {
        &self.row_code
    }

    pub fn col_code(&self) -> &MdsCode {
        &self.col_code
    }

    pub fn geom(&self, layer: usize) -> LayerGeom {
        self.geoms[layer]
    }

    pub fn grid(&self, layer: usize) -> &BlockGrid {
        &self.grids[layer]
    }

    /// Direct access to stored blocks, for fault experiments in tests.
    pub fn grid_mut(&mut self, layer: usize) -> &mut BlockGrid {
        &mut self.grids[layer]
    }

    /// Largest deviation of any parity block from a fresh encoding of the
    /// current base blocks, relative to `1 + max|base|`.
    pub fn parity_drift(&self) -> f64 {
        let mut worst = 0.0f64;
        for (l, grid) in self.grids.iter().enumerate() {
            let g = self.geoms[l];
            let base_max = (0..g.m)
                .flat_map(|i| (0..g.n).map(move |j| (i, j)))
                .map(|(i, j)| grid.get(i, j).max_abs())
                .fold(0.0, f64::max);
            let w = self.logical_layer(l);
            let fresh = self.encode_layer(&g, &w);
            for (i, j) in self.layout.nodes() {
                if i < g.m && j < g.n {
                    continue;
                }
                let d = linalg::max_abs_diff(grid.get(i, j).as_slice(), fresh.get(i, j).as_slice());
                worst = worst.max(d / (1.0 + base_max));
            }
        }
        worst
    }

    fn logical_layer(&self, l: usize) -> Matrix {
        let grid = &self.grids[l];
        self.geoms[l].assemble(|i, j| grid.get(i, j).clone())
    }

    fn valid(&self, g: &LayerGeom, i: usize, j: usize) -> (usize, usize) {
        let r = if i < g.m { g.valid_rows(i) } else { g.rb };
        let c = if j < g.n { g.valid_cols(j) } else { g.cb };
        (r, c)
    }

    fn costs(&self) -> Costs {
        Costs {
            m: self.layout.m,
            n: self.layout.n,
            t: self.t,
            nodes: self.layout.node_count(),
        }
    }

    /// Detection, verification and decoding of one stage's line outputs.
    fn check_line(&self, ctx: &mut StepContext<'_>, layer: usize, stage: Stage, outputs: Vec<Vec<f64>>) -> LineResult {
        let costs = self.costs();
        let g = self.geoms[layer];
        let (code, group, len) = match stage {
            Stage::Feedforward => (&self.row_code, costs.rows(), g.rb),
            Stage::Backprop => (&self.col_code, costs.cols(), g.cb),
        };
        let k = code.k();
        if self.t == 0 {
            return LineResult::Clean(outputs);
        }
        costs.checks(ctx.ledger, group, len);
        let word = BlockVector::new(outputs).expect("line outputs share a length");
        let detected = code.detects_error(&word).expect("word matches the code");
        if self.any_fault(ctx, layer, stage, Step::Detect) {
            return LineResult::Abort(RollbackCause::DetectionDisagreement);
        }
        if !detected {
            let mut blocks = word.into_blocks();
            blocks.truncate(k);
            return LineResult::Clean(blocks);
        }
        costs.decode(ctx.ledger, group, len);
        let out = code.decode(&word).expect("word matches the code");
        if self.any_fault(ctx, layer, stage, Step::Decode) {
            return LineResult::Abort(RollbackCause::DecodeDisagreement);
        }
        match out.status {
            DecodeStatus::Uncorrectable => LineResult::Abort(RollbackCause::TooManyErrors),
            DecodeStatus::Clean => LineResult::Clean(out.message.expect("clean decode has a message")),
            DecodeStatus::Corrected => LineResult::Corrected(
                out.message.expect("corrected decode has a message"),
                out.error_locations,
            ),
        }
    }

    /// Draws a verification-step fault at every node active in `stage`.
    fn any_fault(&self, ctx: &mut StepContext<'_>, layer: usize, stage: Stage, step: Step) -> bool {
        let mut fired = false;
        for (i, j) in self.layout.nodes() {
            let active = match stage {
                Stage::Feedforward => self.layout.is_feedforward_active(i, j),
                Stage::Backprop => self.layout.is_backprop_active(i, j),
            };
            if active && ctx.draw(layer, step, NodeId::new(i, j)).is_some() {
                fired = true;
            }
        }
        fired
    }

    /// Rebuilds every block of the flagged rows from the healthy rows of
    /// each column, then the row's parity-column blocks from its base blocks.
    fn regenerate_rows(&mut self, ctx: &mut StepContext<'_>, layer: usize, rows: &[usize]) {
        let g = self.geoms[layer];
        let (m, n) = (g.m, g.n);
        let total_rows = self.layout.total_rows();
        let costs = self.costs();
        for _ in rows {
            costs.regenerate(ctx.ledger, m, &g);
        }
        let grid = &mut self.grids[layer];
        for j in 0..n {
            let column: Vec<&[f64]> = (0..total_rows).map(|i| grid.get(i, j).as_slice()).collect();
            let msg = self
                .row_code
                .recover_excluding(&column, rows)
                .expect("t flagged rows leave an invertible system");
            let refs: Vec<&[f64]> = msg.iter().map(Vec::as_slice).collect();
            let rebuilt: Vec<(usize, Vec<f64>)> =
                rows.iter().map(|&i| (i, self.row_code.encode_one(i, &refs))).collect();
            for (i, data) in rebuilt {
                grid.set(i, j, Matrix::from_vec(g.rb, g.cb, data));
            }
        }
        for &i in rows.iter().filter(|&&i| i < m) {
            for j in n..self.layout.total_cols() {
                let b = combine((0..n).map(|v| (self.col_code.coeff(v, j), grid.get(i, v))), g.rb, g.cb);
                grid.set(i, j, b);
            }
        }
    }

    /// Column counterpart of [`Self::regenerate_rows`].
    fn regenerate_cols(&mut self, ctx: &mut StepContext<'_>, layer: usize, cols: &[usize]) {
        let g = self.geoms[layer];
        let (m, n) = (g.m, g.n);
        let total_cols = self.layout.total_cols();
        let costs = self.costs();
        for _ in cols {
            costs.regenerate(ctx.ledger, n, &g);
        }
        let grid = &mut self.grids[layer];
        for i in 0..m {
            let row: Vec<&[f64]> = (0..total_cols).map(|j| grid.get(i, j).as_slice()).collect();
            let msg = self
                .col_code
                .recover_excluding(&row, cols)
                .expect("t flagged columns leave an invertible system");
            let refs: Vec<&[f64]> = msg.iter().map(Vec::as_slice).collect();
            let rebuilt: Vec<(usize, Vec<f64>)> =
                cols.iter().map(|&j| (j, self.col_code.encode_one(j, &refs))).collect();
            for (j, data) in rebuilt {
                grid.set(i, j, Matrix::from_vec(g.rb, g.cb, data));
            }
        }
        for &j in cols.iter().filter(|&&j| j < n) {
            for i in m..self.layout.total_rows() {
                let b = combine((0..m).map(|u| (self.row_code.coeff(u, i), grid.get(u, j))), g.rb, g.cb);
                grid.set(i, j, b);
            }
        }
    }
}

impl Strategy for CodeNet {
    fn kind(&self) -> StrategyKind {
        StrategyKind::CodeNet
    }

    fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    fn node_count(&self) -> usize {
        self.layout.node_count()
    }

    fn grid_dims(&self) -> (usize, usize, usize) {
        (self.layout.m, self.layout.n, self.t)
    }

    fn learning_rate(&self) -> f64 {
        self.eta
    }

    fn iterate(&mut self, ctx: &mut StepContext<'_>, x: &[f64], label: &[f64]) -> Attempt {
        let layers = self.specs.len();
        let (m, n) = (self.layout.m, self.layout.n);
        let rows = self.layout.total_rows();
        let cols = self.layout.total_cols();
        let costs = self.costs();
        let mut flags = Vec::new();

        // x pieces (n) and coded x pieces (2t) per layer.
        let mut xs: Vec<Vec<Vec<f64>>> = Vec::with_capacity(layers);
        let mut xts: Vec<Vec<Vec<f64>>> = Vec::with_capacity(layers);
        let mut cur = split(x, n, self.geoms[0].cb);
        let mut output = Vec::new();

        for l in 0..layers {
            ctx.ledger.set_layer(Some(l));
            let g = self.geoms[l];
            let mut partials: Vec<Vec<Vec<f64>>> = Vec::with_capacity(rows);
            for i in 0..rows {
                let mut row = Vec::with_capacity(n);
                for (j, xj) in cur.iter().enumerate() {
                    let noise = ctx.draw(l, Step::O1, NodeId::new(i, j));
                    let valid = self.valid(&g, i, j);
                    row.push(faulty_product(noise, self.grids[l].get_mut(i, j), valid, |b| {
                        b.matvec(xj)
                    }));
                }
                partials.push(row);
            }
            costs.block_product(ctx.ledger, &g);
            costs.ff_sum(ctx.ledger, &g);
            let sums: Vec<Vec<f64>> = partials
                .iter()
                .map(|row| {
                    let mut s = vec![0.0; g.rb];
                    for p in row {
                        for (a, b) in s.iter_mut().zip(p) {
                            *a += b;
                        }
                    }
                    s
                })
                .collect();

            let message = match self.check_line(ctx, l, Stage::Feedforward, sums) {
                LineResult::Clean(msg) => msg,
                LineResult::Corrected(msg, bad) => {
                    self.regenerate_rows(ctx, l, &bad);
                    flags.extend(bad.iter().map(|&index| ErrorFlag {
                        layer: l,
                        stage: Stage::Feedforward,
                        index,
                    }));
                    msg
                }
                LineResult::Abort(cause) => {
                    ctx.ledger.set_layer(None);
                    return Attempt {
                        outcome: Outcome::RolledBack(cause),
                        loss: None,
                    };
                }
            };

            let xt: Vec<Vec<f64>> = (n..cols)
                .map(|j| {
                    let col_code = &self.col_code;
                    combine_vecs(
                        cur.iter()
                            .enumerate()
                            .map(|(v, xv)| (col_code.coeff(v, j), xv.as_slice())),
                        g.cb,
                    )
                })
                .collect();
            costs.extra_encoding(ctx.ledger, cols, g.cb);

            let s = join(&message, g.out_dim);
            let act = self.specs[l].activation.apply(&s);
            xs.push(std::mem::take(&mut cur));
            xts.push(xt);
            if l + 1 < layers {
                let next_cb = self.geoms[l + 1].cb;
                charge_redistribute(ctx.ledger, rows, g.out_dim, g.rb, next_cb);
                cur = split(&act, n, next_cb);
            } else {
                output = act;
            }
        }

        let loss = dnn::squared_error(&output, label);
        let last = layers - 1;
        let delta_out = dnn::output_delta(self.specs[last].activation, &output, label);
        let mut ds: Vec<Vec<Vec<f64>>> = vec![Vec::new(); layers];
        let mut dts: Vec<Vec<Vec<f64>>> = vec![Vec::new(); layers];
        let mut d = split(&delta_out, m, self.geoms[last].rb);

        for l in (0..layers).rev() {
            ctx.ledger.set_layer(Some(l));
            let g = self.geoms[l];
            let mut partials: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(m); cols];
            for (i, di) in d.iter().enumerate() {
                for (j, col) in partials.iter_mut().enumerate() {
                    let noise = ctx.draw(l, Step::O2, NodeId::new(i, j));
                    let valid = self.valid(&g, i, j);
                    col.push(faulty_product(noise, self.grids[l].get_mut(i, j), valid, |b| {
                        b.vecmat(di)
                    }));
                }
            }
            costs.block_product(ctx.ledger, &g);
            costs.bp_sum(ctx.ledger, &g);
            let sums: Vec<Vec<f64>> = partials
                .iter()
                .map(|col| {
                    let mut c = vec![0.0; g.cb];
                    for p in col {
                        for (a, b) in c.iter_mut().zip(p) {
                            *a += b;
                        }
                    }
                    c
                })
                .collect();

            let message = match self.check_line(ctx, l, Stage::Backprop, sums) {
                LineResult::Clean(msg) => msg,
                LineResult::Corrected(msg, bad) => {
                    self.regenerate_cols(ctx, l, &bad);
                    flags.extend(bad.iter().map(|&index| ErrorFlag {
                        layer: l,
                        stage: Stage::Backprop,
                        index,
                    }));
                    msg
                }
                LineResult::Abort(cause) => {
                    ctx.ledger.set_layer(None);
                    return Attempt {
                        outcome: Outcome::RolledBack(cause),
                        loss: Some(loss),
                    };
                }
            };

            let dt: Vec<Vec<f64>> = (m..rows)
                .map(|i| {
                    let row_code = &self.row_code;
                    combine_vecs(
                        d.iter()
                            .enumerate()
                            .map(|(u, du)| (row_code.coeff(u, i), du.as_slice())),
                        g.rb,
                    )
                })
                .collect();
            costs.extra_encoding(ctx.ledger, rows, g.rb);

            let prev = if l > 0 {
                let c = join(&message, g.in_dim);
                let x_in = join(&xs[l], g.in_dim);
                let act = self.specs[l - 1].activation;
                let delta: Vec<f64> = c.iter().zip(&x_in).map(|(&ci, &xi)| ci * act.g(xi)).collect();
                let prev_rb = self.geoms[l - 1].rb;
                charge_redistribute(ctx.ledger, cols, g.in_dim, g.cb, prev_rb);
                Some(split(&delta, m, prev_rb))
            } else {
                None
            };
            ds[l] = std::mem::take(&mut d);
            dts[l] = dt;
            if let Some(p) = prev {
                d = p;
            }
        }

        for l in 0..layers {
            ctx.ledger.set_layer(Some(l));
            let g = self.geoms[l];
            for (i, j) in self.layout.nodes() {
                let dvec = if i < m { &ds[l][i] } else { &dts[l][i - m] };
                let xvec = if j < n { &xs[l][j] } else { &xts[l][j - n] };
                let valid = self.valid(&g, i, j);
                let block = self.grids[l].get_mut(i, j);
                block.rank1_update(self.eta, dvec, xvec);
                if let Some(mut noise) = ctx.draw(l, Step::O3, NodeId::new(i, j)) {
                    noise.corrupt_block(block, valid.0, valid.1);
                }
            }
            costs.update(ctx.ledger, &g);
        }
        ctx.ledger.set_layer(None);

        let outcome = if flags.is_empty() {
            Outcome::Clean
        } else {
            Outcome::Corrected(flags)
        };
        Attempt {
            outcome,
            loss: Some(loss),
        }
    }

    fn stored_blocks(&self) -> Vec<Matrix> {
        self.grids.iter().flat_map(|g| g.scan().cloned()).collect()
    }

    fn load_blocks(&mut self, blocks: Vec<Matrix>) -> Result<(), StrategyError> {
        check_blocks(&self.stored_blocks(), &blocks)?;
        let mut it = blocks.into_iter();
        for grid in &mut self.grids {
            for b in grid.scan_mut() {
                *b = it.next().expect("count checked");
            }
        }
        Ok(())
    }

    fn logical_weights(&self) -> Vec<Matrix> {
        (0..self.specs.len()).map(|l| self.logical_layer(l)).collect()
    }
}
