//! Assembly of a [`KernelProblem`] into a sparse linear system, solving it
//! per kernel group, and the report around the solution.
//!
//! Every kernel slot `(kernel, region)` of a group owns `l(N)` consecutive
//! unknowns. Rows are emitted in constraint order: PDEs, boundary
//! constraints, region A, region B, matching. Each PDE with largest
//! derivative order `d` contributes `l(N - d)` rows, each boundary constraint
//! with largest trace derivative `t` contributes `N + 1 - t` rows, each
//! matching constraint `N + 1` rows.
//!
//! Row removal runs in two passes. Bit-identical rows are dropped first. If
//! the system is still overdetermined, a boundary block that meets an earlier
//! boundary block of the same kernel slots at a corner loses its degree-0 row:
//! both lines impose the kernel value at the shared corner, and only one of
//! the two conditions is independent.

mod diagnostic;
mod oracle;
mod residual;
mod sweep;

pub use diagnostic::{divergence_diagnostic, reach, Divergence};
pub use oracle::{recursion_oracle_ex1, recursion_oracle_series};
pub use residual::{residual_grid, series_residuals, ConstraintResidual, DEFAULT_GRID_N};
pub use sweep::{
    run_sweep, write_sweep, BaseProblem, ParamSpec, SampleOutcome, SampleRecord, SweepMode,
    SweepSpec,
};

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linsys::{RemovedRow, RowTag, SolveMethod, SparseSystem, DEFAULT_TOL};
use crate::problem::{
    constraint_slots, BcRhs, BoundaryConstraint, ConstraintRef, GroupCount, KernelProblem,
    Line, MatchingConstraint, Orders, PdeConstraint, RegionId,
};
use crate::sparse::SparseMat;
use crate::taylor::{expand, UniSeries};
use crate::triseries::{
    build_derivative, build_mul_x, build_mul_xi, build_trace, build_truncate,
    build_uni_derivative, build_uni_mul, idx_l, TriSeries,
};

fn len(order: usize) -> usize {
    idx_l(order as i64)
}

/// What a block of rows represents, for residual evaluation.
#[derive(Debug, Clone)]
pub enum BlockShape {
    /// Coefficients of a bivariate series of this order.
    Pde { out_order: usize, region: RegionId },
    /// Coefficients of a univariate polynomial in `x - x0` along a line.
    Line { line: Line, degree: usize },
}

#[derive(Debug, Clone)]
pub struct Block {
    pub id: String,
    pub shape: BlockShape,
    pub mat: SparseMat,
    pub rhs: Vec<f64>,
}

/// A kernel group assembled at one order.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub kernels: Vec<usize>,
    pub slots: Vec<(usize, RegionId)>,
    pub order: usize,
    pub center: (f64, f64),
    pub system: SparseSystem,
    pub blocks: Vec<Block>,
    pub duplicates: Vec<RemovedRow>,
    pub corner_removed: Vec<RowTag>,
}

impl Assembly {
    pub fn unknowns(&self) -> usize {
        self.slots.len() * len(self.order)
    }

    /// True if the row `(block, index)` survived row removal.
    pub fn row_kept(&self, block: &str, index: usize) -> bool {
        let tag = RowTag {
            block: block.to_string(),
            index,
        };
        !self.duplicates.iter().any(|r| r.tag == tag) && !self.corner_removed.contains(&tag)
    }

    /// Splits a solution vector into one series per slot.
    pub fn split_solution(&self, x: &[f64]) -> Vec<TriSeries> {
        let n = len(self.order);
        (0..self.slots.len())
            .map(|s| {
                TriSeries::new(self.order, self.center, x[s * n..(s + 1) * n].to_vec())
                    .expect("slot length matches order")
            })
            .collect()
    }
}

fn slot_offset(
    slots: &[(usize, RegionId)],
    order: usize,
    kernel: usize,
    region: RegionId,
) -> Option<usize> {
    slots
        .iter()
        .position(|&s| s == (kernel, region))
        .map(|s| s * len(order))
}

fn expand_opt(e: &Option<crate::expr::CoeffExpr>, center: f64, order: usize) -> Result<Option<UniSeries>> {
    e.as_ref().map(|e| expand(e, center, order)).transpose()
}

fn pde_block(
    pde: &PdeConstraint,
    region: RegionId,
    slots: &[(usize, RegionId)],
    order: usize,
    center: (f64, f64),
) -> Result<(SparseMat, usize)> {
    let d = pde.max_order();
    if order < d {
        return Err(Error::Order(format!(
            "order {order} is below the PDE derivative order {d}"
        )));
    }
    let out = order - d;
    let ncols = slots.len() * len(order);
    let mut acc = SparseMat::zeros(len(out), ncols);
    for t in &pde.terms {
        let (p, q) = t.deriv;
        let op = build_derivative(order, p, q)?
            .then(&build_truncate(order - p - q, out)?)?;
        let op = match expand_opt(&t.b, center.1, out)? {
            Some(b) => op.then(&build_mul_xi(&b, center.1, out, out)?)?,
            None => op,
        };
        let op = match expand_opt(&t.a, center.0, out)? {
            Some(a) => op.then(&build_mul_x(&a, center.0, out, out)?)?,
            None => op,
        };
        let off = slot_offset(slots, order, t.kernel, region).ok_or_else(|| {
            Error::DimensionMismatch(format!("kernel {} has no slot in this group", t.kernel))
        })?;
        acc = acc.add_scaled(&op.matrix().embed_columns(off, ncols), t.weight);
    }
    Ok((acc, out))
}

/// Coefficients in `x~` of `g(alpha x~ + gamma)`, truncated to `degree`.
fn compose_with_line(g: &[f64], alpha: f64, gamma: f64, degree: usize) -> Vec<f64> {
    let mut acc = vec![0.0; degree + 1];
    for &gk in g.iter().rev() {
        // acc <- acc * (alpha x + gamma) + gk
        let mut next = vec![0.0; degree + 1];
        for (d, &a) in acc.iter().enumerate() {
            next[d] += gamma * a;
            if d < degree {
                next[d + 1] += alpha * a;
            }
        }
        next[0] += gk;
        acc = next;
    }
    acc
}

/// Trace rows of one kernel slot on `line`, with optional `d/dx` and factor
/// `c(x)`, keeping degrees `0..=degree`.
fn trace_rows(
    line: Line,
    trace_deriv: usize,
    c: Option<&UniSeries>,
    order: usize,
    degree: usize,
    center: (f64, f64),
) -> Result<SparseMat> {
    let mut op = build_trace(line.alpha, line.gamma, order);
    if trace_deriv == 1 {
        op = op.then(&build_uni_derivative(order)?)?;
    }
    let c = match c {
        Some(c) => c.clone(),
        None => UniSeries::constant(1.0, center.0, 0),
    };
    op = op.then(&build_uni_mul(&c, center.0, order, degree)?)?;
    Ok(op.matrix().clone())
}

fn bc_block(
    bc: &BoundaryConstraint,
    region: RegionId,
    slots: &[(usize, RegionId)],
    order: usize,
    center: (f64, f64),
) -> Result<(SparseMat, Vec<f64>, usize)> {
    let t = bc.max_trace_deriv();
    if order < t.max(1) && t > 0 {
        return Err(Error::Order(format!("order {order} too low for a derivative trace")));
    }
    let degree = order - t;
    let ncols = slots.len() * len(order);
    let mut acc = SparseMat::zeros(degree + 1, ncols);
    for term in &bc.terms {
        let c = expand_opt(&term.c, center.0, order)?;
        let rows = trace_rows(bc.line, term.trace_deriv, c.as_ref(), order, degree, center)?;
        let off = slot_offset(slots, order, term.kernel, region).ok_or_else(|| {
            Error::DimensionMismatch(format!("kernel {} has no slot in this group", term.kernel))
        })?;
        acc = acc.add_scaled(&rows.embed_columns(off, ncols), 1.0);
    }
    let rhs = match &bc.rhs {
        BcRhs::Expr(g) => expand(g, center.0, order)?.truncate(degree).into_coeffs(),
        BcRhs::Integral(int) => {
            let f = expand(&int.integrand, center.1, order)?;
            let g = f.antiderivative(int.lower);
            let g: Vec<f64> = g.coeffs().iter().map(|v| v * int.scale).collect();
            compose_with_line(&g, bc.line.alpha, bc.line.gamma, degree)
        }
    };
    Ok((acc, rhs, degree))
}

fn match_block(
    m: &MatchingConstraint,
    slots: &[(usize, RegionId)],
    order: usize,
    center: (f64, f64),
) -> Result<(SparseMat, Vec<f64>)> {
    let ncols = slots.len() * len(order);
    let rows = trace_rows(m.line, 0, None, order, order, center)?;
    let off = |k, r| {
        slot_offset(slots, order, k, r).ok_or_else(|| {
            Error::DimensionMismatch(format!("kernel {k} has no {r:?} slot in this group"))
        })
    };
    let b = rows.embed_columns(off(m.kernel_b, RegionId::B)?, ncols);
    let a = rows.embed_columns(off(m.kernel_a, RegionId::A)?, ncols);
    let rhs = expand(&m.jump, center.0, order)?.into_coeffs();
    Ok((b.add_scaled(&a, -1.0), rhs))
}

/// Slots of `p` whose kernel is in `kernels`.
fn group_slots(p: &KernelProblem, kernels: &[usize]) -> Vec<(usize, RegionId)> {
    let mut slots: Vec<_> = p
        .slots()
        .into_iter()
        .filter(|(k, _)| kernels.contains(k))
        .collect();
    // kernels referenced by no constraint still get a whole-domain slot
    for &k in kernels {
        if !slots.iter().any(|&(s, _)| s == k) {
            slots.push((k, RegionId::Whole));
        }
    }
    slots.sort();
    slots
}

/// Assembles the constraints touching `kernels` at `order`, then removes
/// redundant rows.
pub fn assemble_group(p: &KernelProblem, kernels: &[usize], order: usize) -> Result<Assembly> {
    let slots = group_slots(p, kernels);
    assemble_slots(p, slots, order)
}

fn assemble_slots(p: &KernelProblem, slots: Vec<(usize, RegionId)>, order: usize) -> Result<Assembly> {
    let center = p.center;
    let n_unknowns = slots.len() * len(order);
    let mut system = SparseSystem::new(n_unknowns);
    let mut blocks = Vec::new();
    // (block id, line, slot set) of boundary blocks without derivative traces
    let mut plain_bcs: Vec<(String, Line, Vec<(usize, RegionId)>)> = Vec::new();
    let constraints = p.constraints();
    for c in constraints.iter() {
        let cs = constraint_slots(&c);
        if !cs.iter().any(|s| slots.contains(s)) {
            continue;
        }
        match c {
            ConstraintRef::Pde { id, region, pde } => {
                let (mat, out) = pde_block(pde, region, &slots, order, center)?;
                let rhs = vec![0.0; mat.nrows()];
                system.append_block(&mat, &rhs, id)?;
                blocks.push(Block {
                    id: id.to_string(),
                    shape: BlockShape::Pde { out_order: out, region },
                    mat,
                    rhs,
                });
            }
            ConstraintRef::Bc { id, region, bc } => {
                let (mat, rhs, degree) = bc_block(bc, region, &slots, order, center)?;
                system.append_block(&mat, &rhs, id)?;
                if bc.max_trace_deriv() == 0 {
                    let mut set = cs.clone();
                    set.sort();
                    set.dedup();
                    plain_bcs.push((id.to_string(), bc.line, set));
                }
                blocks.push(Block {
                    id: id.to_string(),
                    shape: BlockShape::Line { line: bc.line, degree },
                    mat,
                    rhs,
                });
            }
            ConstraintRef::Match { id, m } => {
                let (mat, rhs) = match_block(m, &slots, order, center)?;
                system.append_block(&mat, &rhs, id)?;
                blocks.push(Block {
                    id: id.to_string(),
                    shape: BlockShape::Line { line: m.line, degree: order },
                    mat,
                    rhs,
                });
            }
        }
    }
    let duplicates = system.dedup_rows();
    let mut corner_removed = Vec::new();
    for later in 1..plain_bcs.len() {
        if system.n_rows() <= n_unknowns {
            break;
        }
        let (id, line, set) = &plain_bcs[later];
        let meets_earlier = plain_bcs[..later]
            .iter()
            .any(|(_, l, s)| s == set && l.alpha != line.alpha);
        if !meets_earlier {
            continue;
        }
        let tag = RowTag {
            block: id.clone(),
            index: 0,
        };
        if system.remove_tagged(std::slice::from_ref(&tag)) == 1 {
            corner_removed.push(tag);
        }
    }
    let mut kernels: Vec<usize> = slots.iter().map(|&(k, _)| k).collect();
    kernels.dedup();
    Ok(Assembly {
        kernels,
        slots,
        order,
        center,
        system,
        blocks,
        duplicates,
        corner_removed,
    })
}

/// The whole problem at one uniform order, all groups in one system.
pub fn assemble(p: &KernelProblem, order: usize) -> Result<Assembly> {
    let mut slots = Vec::new();
    for g in p.kernel_groups() {
        slots.extend(group_slots(p, &g));
    }
    slots.sort();
    assemble_slots(p, slots, order)
}

pub(crate) fn count_group(p: &KernelProblem, kernels: &[usize], order: usize) -> Result<GroupCount> {
    let a = assemble_group(p, kernels, order)?;
    let mut pde_rows = 0;
    let mut boundary_rows = 0;
    for b in &a.blocks {
        match b.shape {
            BlockShape::Pde { .. } => pde_rows += b.mat.nrows(),
            BlockShape::Line { .. } => boundary_rows += b.mat.nrows(),
        }
    }
    Ok(GroupCount {
        kernels: a.kernels.clone(),
        order,
        unknowns: a.unknowns(),
        pde_rows,
        boundary_rows,
        duplicates_removed: a.duplicates.len(),
        corner_rows_removed: a.corner_removed.len(),
        rows_after: a.system.n_rows(),
    })
}

// ---------------------------------------------------------------------------
// Solving

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Overrides the problem's own `order`.
    pub orders: Option<Orders>,
    pub tol: f64,
    /// Points per axis for grid residuals; 0 skips them.
    pub grid_n: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            orders: None,
            tol: DEFAULT_TOL,
            grid_n: DEFAULT_GRID_N,
        }
    }
}

impl SolveOptions {
    pub fn with_order(order: usize) -> Self {
        SolveOptions {
            orders: Some(Orders::Uniform(order)),
            ..Default::default()
        }
    }

    pub fn grid(mut self, grid_n: usize) -> Self {
        self.grid_n = grid_n;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSolution {
    pub kernel: usize,
    pub region: &'static str,
    pub series: TriSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupReport {
    pub kernels: Vec<usize>,
    pub order: usize,
    pub unknowns: usize,
    pub rows: usize,
    pub sparsity: f64,
    pub residual_linear: f64,
    pub rank_deficient: bool,
    pub method: SolveMethod,
    pub rows_removed: usize,
    pub removed_rows: Vec<String>,
    /// `max(1, max |K_ij|)` over the group.
    pub coefficient_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelDivergence {
    pub kernel: usize,
    pub region: &'static str,
    pub growth_rate: f64,
    pub flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub kernels: Vec<KernelSolution>,
    pub groups: Vec<GroupReport>,
    pub orders: Vec<usize>,
    /// Largest relative linear residual over the groups.
    pub residual_linear: f64,
    pub residual_grid: Vec<ConstraintResidual>,
    /// Sparsity of the block-diagonal system made of all groups.
    pub sparsity: f64,
    pub rank_deficient: bool,
    pub rows_removed: usize,
    pub divergence: Vec<KernelDivergence>,
    pub divergence_flag: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl SolveReport {
    pub fn series(&self, kernel: usize, region: RegionId) -> Option<&TriSeries> {
        self.kernels
            .iter()
            .find(|k| k.kernel == kernel && k.region == region.name())
            .map(|k| &k.series)
    }

    /// Single whole-domain series of `kernel`.
    pub fn kernel(&self, kernel: usize) -> &TriSeries {
        self.series(kernel, RegionId::Whole)
            .unwrap_or_else(|| panic!("kernel {kernel} has no whole-domain series"))
    }

    /// Evaluates kernel `k` at global `(x, xi)`, picking the region for split
    /// kernels.
    pub fn eval(&self, p: &KernelProblem, kernel: usize, x: f64, xi: f64) -> f64 {
        if let Some(s) = self.series(kernel, RegionId::Whole) {
            return s.eval(x, xi);
        }
        let beta = p.split.as_ref().map_or(0.0, |s| s.beta);
        let region = if xi <= beta * x { RegionId::A } else { RegionId::B };
        self.series(kernel, region).map_or(f64::NAN, |s| s.eval(x, xi))
    }

    pub fn max_full_residual_ratio(&self) -> f64 {
        self.residual_grid
            .iter()
            .map(|r| r.full / r.scale)
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report is serializable")
    }
}

pub fn solve_problem(p: &KernelProblem, opts: &SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let groups = p.kernel_groups();
    let orders = p.group_orders(opts.orders.as_ref())?;
    let mut kernels = Vec::new();
    let mut reports = Vec::new();
    let mut residual_grid = Vec::new();
    let mut divergence = Vec::new();
    let (mut nnz, mut rows, mut cols) = (0usize, 0usize, 0usize);
    for (g, members) in groups.iter().enumerate() {
        let asm = assemble_group(p, members, orders[g])?;
        let sol = asm.system.solve(opts.tol)?;
        let series = asm.split_solution(&sol.coeffs);
        let scale = series.iter().map(TriSeries::max_abs).fold(1.0, f64::max);
        nnz += asm.system.nnz();
        rows += asm.system.n_rows();
        cols += asm.unknowns();
        if opts.grid_n > 0 {
            residual_grid.extend(residual_grid_for(p, &asm, &series, &sol.coeffs, opts.grid_n, scale));
        }
        for (&(k, region), s) in asm.slots.iter().zip(&series) {
            if let Ok(d) = divergence_diagnostic(s, p.domain_length) {
                divergence.push(KernelDivergence {
                    kernel: k,
                    region: region.name(),
                    growth_rate: d.growth_rate,
                    flag: d.flag,
                });
            }
            kernels.push(KernelSolution {
                kernel: k,
                region: region.name(),
                series: s.clone(),
            });
        }
        let removed_rows: Vec<String> = asm
            .duplicates
            .iter()
            .map(|r| r.tag.to_string())
            .chain(asm.corner_removed.iter().map(|t| t.to_string()))
            .collect();
        reports.push(GroupReport {
            kernels: asm.kernels.clone(),
            order: asm.order,
            unknowns: asm.unknowns(),
            rows: asm.system.n_rows(),
            sparsity: asm.system.sparsity(),
            residual_linear: sol.residual,
            rank_deficient: sol.rank_deficient,
            method: sol.method,
            rows_removed: removed_rows.len(),
            removed_rows,
            coefficient_scale: scale,
        });
    }
    kernels.sort_by_key(|k| (k.kernel, k.region));
    let sparsity = if rows * cols == 0 {
        1.0
    } else {
        1.0 - nnz as f64 / (rows as f64 * cols as f64)
    };
    Ok(SolveReport {
        residual_linear: reports.iter().map(|r| r.residual_linear).fold(0.0, f64::max),
        rank_deficient: reports.iter().any(|r| r.rank_deficient),
        rows_removed: reports.iter().map(|r| r.rows_removed).sum(),
        divergence_flag: divergence.iter().any(|d| d.flag),
        kernels,
        groups: reports,
        orders,
        residual_grid,
        sparsity,
        divergence,
        wall_time: Some(start.elapsed().as_secs_f64()),
    })
}

fn residual_grid_for(
    p: &KernelProblem,
    asm: &Assembly,
    series: &[TriSeries],
    x: &[f64],
    grid_n: usize,
    scale: f64,
) -> Vec<ConstraintResidual> {
    residual::group_residuals(p, asm, series, x, grid_n, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::expr::CoeffExpr;

    #[test]
    fn compose_with_line_matches_direct_evaluation() {
        let g = [0.3, -1.0, 0.5, 2.0];
        let c = compose_with_line(&g, 0.7, -0.2, 3);
        for x in [-0.4, 0.1, 0.9] {
            let xi: f64 = 0.7 * x - 0.2;
            let direct: f64 = g.iter().enumerate().map(|(k, v)| v * xi.powi(k as i32)).sum();
            let via: f64 = c.iter().enumerate().map(|(k, v)| v * x.powi(k as i32)).sum();
            assert!((direct - via).abs() < 1e-14);
        }
    }

    #[test]
    fn example1_counts_at_order_4() {
        let p = examples::example1(CoeffExpr::constant(6.0), 1.0, 0.0, 1.0);
        let a = assemble(&p, 4).unwrap();
        assert_eq!(a.unknowns(), 15);
        let raw: usize = a.blocks.iter().map(|b| b.mat.nrows()).sum();
        assert_eq!(raw, idx_l(2) + 5 + 5);
        assert_eq!(a.duplicates.len(), 1);
        assert!(a.corner_removed.is_empty());
        assert_eq!(a.system.n_rows(), 15);
    }

    #[test]
    fn example1_boundary_row_degree_one() {
        // K_10 + K_11 = -lambda_0 / 2 = -3 for lambda = 6, c = 0, eps = 1
        let p = examples::example1(CoeffExpr::constant(6.0), 1.0, 0.0, 1.0);
        let a = assemble(&p, 4).unwrap();
        let b = a.blocks.iter().find(|b| b.id == "bc[0]").unwrap();
        assert_eq!(b.mat.get(1, 1), 1.0);
        assert_eq!(b.mat.get(1, 2), 1.0);
        assert_eq!(b.mat.row(1).0.len(), 2);
        assert_eq!(b.rhs[1], -3.0);
    }

    #[test]
    fn empty_pde_list_gives_boundary_rows_only() {
        let mut p = examples::example1(CoeffExpr::constant(1.0), 1.0, 0.0, 1.0);
        p.pdes.clear();
        let a = assemble(&p, 3).unwrap();
        assert_eq!(a.system.n_rows(), 4 + 4 - 1);
    }
}
