//! Grid residuals of a solved problem.
//!
//! Two numbers per constraint:
//! * `enforced_band`: the residual polynomial of the rows actually kept in the
//!   linear system (degrees the truncated system constrains), evaluated on
//!   the grid. Small whenever the linear solve is accurate.
//! * `full`: the constraint itself with exact coefficient functions, exact
//!   series derivatives and a quadrature for integral data, including the
//!   truncation tail.

use serde::Serialize;

use super::{Assembly, BlockShape};
use crate::error::{Error, Result};
use crate::expr::CoeffExpr;
use crate::problem::{BcRhs, ConstraintRef, KernelProblem, Line, RegionId};
use crate::quad;
use crate::triseries::TriSeries;

pub const DEFAULT_GRID_N: usize = 201;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintResidual {
    pub id: String,
    pub enforced_band: f64,
    pub full: f64,
    /// Coefficient scale of the owning group, `max(1, max |K_ij|)`.
    pub scale: f64,
    pub points: usize,
}

/// Grid points `(x, xi)` of the triangle `0 <= xi <= x <= L` restricted to a
/// region.
fn region_points(l: f64, n: usize, region: RegionId, beta: f64) -> Vec<(f64, f64)> {
    let n = n.max(2);
    let h = l / (n - 1) as f64;
    let mut pts = Vec::new();
    for i in 0..n {
        let x = h * i as f64;
        for j in 0..=i {
            let xi = h * j as f64;
            let keep = match region {
                RegionId::Whole => true,
                RegionId::A => xi <= beta * x + 1e-14,
                RegionId::B => xi >= beta * x - 1e-14,
            };
            if keep {
                pts.push((x, xi));
            }
        }
    }
    pts
}

/// Points on a local line inside the triangle, as `(x, xi)` global pairs.
fn line_points(l: f64, n: usize, line: Line, center: (f64, f64)) -> Vec<(f64, f64)> {
    let n = n.max(2);
    (0..n)
        .map(|k| l * k as f64 / (n - 1) as f64)
        .map(|x| (x, center.1 + line.alpha * (x - center.0) + line.gamma))
        .filter(|&(x, xi)| xi >= -1e-12 && xi <= x + 1e-12)
        .collect()
}

fn eval_opt(e: &Option<CoeffExpr>, at: f64) -> f64 {
    e.as_ref().map_or(1.0, |e| e.eval(at))
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * t + v)
}

pub(crate) fn group_residuals(
    p: &KernelProblem,
    asm: &Assembly,
    series: &[TriSeries],
    x: &[f64],
    grid_n: usize,
    scale: f64,
) -> Vec<ConstraintResidual> {
    let beta = p.split.as_ref().map_or(0.0, |s| s.beta);
    let l = p.domain_length;
    let center = asm.center;
    let slot_series = |k: usize, r: RegionId| -> &TriSeries {
        let s = asm
            .slots
            .iter()
            .position(|&s| s == (k, r))
            .expect("constraint slot belongs to the group");
        &series[s]
    };
    let mut out = Vec::new();
    let constraints = p.constraints();
    for c in constraints.iter() {
        let id = match c {
            ConstraintRef::Pde { id, .. } | ConstraintRef::Bc { id, .. } | ConstraintRef::Match { id, .. } => id,
        };
        let Some(block) = asm.blocks.iter().find(|b| b.id == id) else {
            continue;
        };
        // residual coefficients of the kept rows
        let mut r = block.mat.apply(x);
        for (k, v) in r.iter_mut().enumerate() {
            *v -= block.rhs[k];
            if !asm.row_kept(id, k) {
                *v = 0.0;
            }
        }
        let (enforced, full, points) = match (c, &block.shape) {
            (ConstraintRef::Pde { region, pde, .. }, BlockShape::Pde { out_order, .. }) => {
                let band = TriSeries::new(*out_order, center, r).expect("block length");
                let pts = region_points(l, grid_n, region, beta);
                let partials: Vec<TriSeries> = pde
                    .terms
                    .iter()
                    .map(|t| slot_series(t.kernel, region).partial(t.deriv.0, t.deriv.1))
                    .collect();
                let mut e_max: f64 = 0.0;
                let mut f_max: f64 = 0.0;
                for &(px, pxi) in &pts {
                    e_max = e_max.max(band.eval(px, pxi).abs());
                    let mut v = 0.0;
                    for (t, d) in pde.terms.iter().zip(&partials) {
                        v += t.weight * eval_opt(&t.a, px) * eval_opt(&t.b, pxi) * d.eval(px, pxi);
                    }
                    f_max = f_max.max(v.abs());
                }
                (e_max, f_max, pts.len())
            }
            (ConstraintRef::Bc { region, bc, .. }, BlockShape::Line { line, .. }) => {
                let pts = line_points(l, grid_n, *line, center);
                let along: Vec<(TriSeries, TriSeries, TriSeries)> = bc
                    .terms
                    .iter()
                    .map(|t| {
                        let s = slot_series(t.kernel, region);
                        (s.clone(), s.partial(1, 0), s.partial(0, 1))
                    })
                    .collect();
                let mut e_max: f64 = 0.0;
                let mut f_max: f64 = 0.0;
                for &(px, pxi) in &pts {
                    e_max = e_max.max(horner(&r, px - center.0).abs());
                    let mut v = 0.0;
                    for (t, (s, sx, sxi)) in bc.terms.iter().zip(&along) {
                        let k = if t.trace_deriv == 0 {
                            s.eval(px, pxi)
                        } else {
                            sx.eval(px, pxi) + line.alpha * sxi.eval(px, pxi)
                        };
                        v += eval_opt(&t.c, px) * k;
                    }
                    v -= match &bc.rhs {
                        BcRhs::Expr(g) => g.eval(px),
                        BcRhs::Integral(int) => {
                            let lower = int.lower + center.1;
                            int.scale * quad::integrate(|s| int.integrand.eval(s), lower, pxi, 0.05)
                        }
                    };
                    f_max = f_max.max(v.abs());
                }
                (e_max, f_max, pts.len())
            }
            (ConstraintRef::Match { m, .. }, BlockShape::Line { line, .. }) => {
                let pts = line_points(l, grid_n, *line, center);
                let a = slot_series(m.kernel_a, RegionId::A);
                let b = slot_series(m.kernel_b, RegionId::B);
                let mut e_max: f64 = 0.0;
                let mut f_max: f64 = 0.0;
                for &(px, pxi) in &pts {
                    e_max = e_max.max(horner(&r, px - center.0).abs());
                    let v = b.eval(px, pxi) - a.eval(px, pxi) - m.jump.eval(px);
                    f_max = f_max.max(v.abs());
                }
                (e_max, f_max, pts.len())
            }
            _ => unreachable!("block shape follows the constraint kind"),
        };
        out.push(ConstraintResidual {
            id: id.to_string(),
            enforced_band: enforced,
            full,
            scale,
            points,
        });
    }
    out
}

/// Grid residuals of every constraint of a solved problem.
pub fn residual_grid(
    report: &super::SolveReport,
    p: &KernelProblem,
    grid_n: usize,
) -> Result<Vec<ConstraintResidual>> {
    series_residuals(p, |k, r| report.series(k, r), grid_n)
}

/// Grid residuals for series looked up by `(kernel, region)`, e.g. read back
/// from a coefficient file. Each group is reassembled at the order of its
/// series; orders and centers must agree within a group and with the problem.
pub fn series_residuals<'a, F>(p: &KernelProblem, lookup: F, grid_n: usize) -> Result<Vec<ConstraintResidual>>
where
    F: Fn(usize, RegionId) -> Option<&'a TriSeries>,
{
    let mut out = Vec::new();
    for members in p.kernel_groups() {
        let slots = super::group_slots(p, &members);
        let series: Vec<TriSeries> = slots
            .iter()
            .map(|&(k, r)| {
                lookup(k, r).cloned().ok_or_else(|| {
                    Error::DimensionMismatch(format!("no series for kernel {k} region {}", r.name()))
                })
            })
            .collect::<Result<_>>()?;
        let order = series[0].order();
        for s in &series {
            if s.order() != order || s.center() != p.center {
                return Err(Error::DimensionMismatch(format!(
                    "series order/center ({}, {:?}) differ from ({}, {:?})",
                    s.order(),
                    s.center(),
                    order,
                    p.center
                )));
            }
        }
        let asm = super::assemble_group(p, &members, order)?;
        let x: Vec<f64> = series.iter().flat_map(|s| s.coeffs().iter().copied()).collect();
        let scale = series.iter().map(TriSeries::max_abs).fold(1.0, f64::max);
        out.extend(group_residuals(p, &asm, &series, &x, grid_n, scale));
    }
    Ok(out)
}
