//! Grid-based PDE residual evaluation for black-box field evaluators.
//!
//! Fields and coefficient evaluators are opaque closures; derivatives come
//! from 5-point central differences with one Richardson extrapolation level,
//! so the same machinery certifies closed-form classical solutions and the
//! transformed generalized solutions alike. Grid nodes are independent and
//! are evaluated in parallel when the `parallel` feature is enabled;
//! [`residual_serial`] is the always-available sequential path and is what
//! the criterion bench compares against.

use crate::error::{Error, Result};
use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// A spatial jet of one field component at a point: value and x-derivatives.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpatialJet {
    pub val: f64,
    pub dx: f64,
    pub dxx: f64,
}

/// A coupled PDE system in first-order-in-time form,
/// `d(field_eq)/dt = rhs(eq, x, t, jets)`.
pub trait PdeSystem: Sync {
    fn arity(&self) -> usize;
    fn rhs(&self, eq: usize, x: f64, t: f64, jets: &[SpatialJet]) -> Result<f64>;
}

/// A set of 1, 2 or 3 space-time field evaluators.
pub trait FieldSet: Sync {
    fn arity(&self) -> usize;
    fn eval(&self, component: usize, x: f64, t: f64) -> Result<f64>;
}

/// Field set backed by plain closures, mostly for tests and negative controls.
pub struct ClosureFields<F: Fn(usize, f64, f64) -> Result<f64> + Sync> {
    pub arity: usize,
    pub eval: F,
}

impl<F: Fn(usize, f64, f64) -> Result<f64> + Sync> FieldSet for ClosureFields<F> {
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, component: usize, x: f64, t: f64) -> Result<f64> {
        (self.eval)(component, x, t)
    }
}

/// Uniform space-time evaluation grid.
#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize)]
pub struct Grid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub nx: usize,
    pub t_lo: f64,
    pub t_hi: f64,
    pub nt: usize,
    /// Nodes dropped from each boundary in both directions.
    #[serde(default)]
    pub margin: usize,
}

impl Grid {
    pub fn new(x_lo: f64, x_hi: f64, nx: usize, t_lo: f64, t_hi: f64, nt: usize) -> Result<Grid> {
        let g = Grid {
            x_lo,
            x_hi,
            nx,
            t_lo,
            t_hi,
            nt,
            margin: 0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 3 || self.nt < 3 {
            return Err(Error::InvalidGrid("nx and nt must be >= 3".into()));
        }
        if !(self.x_lo < self.x_hi) || !(self.t_lo < self.t_hi) {
            return Err(Error::InvalidGrid("grid bounds must be ordered".into()));
        }
        if 2 * self.margin + 2 >= self.nx.min(self.nt) {
            return Err(Error::InvalidGrid("margin leaves no interior nodes".into()));
        }
        Ok(())
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_lo + (self.x_hi - self.x_lo) * i as f64 / (self.nx - 1) as f64
    }

    pub fn t(&self, j: usize) -> f64 {
        self.t_lo + (self.t_hi - self.t_lo) * j as f64 / (self.nt - 1) as f64
    }

    fn nodes(&self) -> Vec<(f64, f64)> {
        let mut v = Vec::with_capacity(self.nx * self.nt);
        for j in self.margin..self.nt - self.margin {
            for i in self.margin..self.nx - self.margin {
                v.push((self.x(i), self.t(j)));
            }
        }
        v
    }
}

/// Value and derivatives of a field at one point, plus the Richardson error
/// estimate (difference between the h and h/2 extrapolants, scaled).
#[derive(Debug, Clone, Copy)]
pub struct FieldDerivs {
    pub f: f64,
    pub f_x: f64,
    pub f_xx: f64,
    pub f_t: f64,
    pub err_estimate: f64,
}

fn d1_5pt(fm2: f64, fm1: f64, fp1: f64, fp2: f64, h: f64) -> f64 {
    (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h)
}

fn d2_5pt(fm2: f64, fm1: f64, f0: f64, fp1: f64, fp2: f64, h: f64) -> f64 {
    (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h)
}

fn richardson(coarse: f64, fine: f64) -> (f64, f64) {
    let extrapolated = (16.0 * fine - coarse) / 15.0;
    (extrapolated, (extrapolated - fine).abs())
}

/// Central differences of a black-box evaluator with one Richardson level.
pub fn field_derivs<F>(field: F, x: f64, t: f64, h_x: f64, h_t: f64) -> Result<FieldDerivs>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let f0 = field(x, t)?;
    let xs = [
        field(x - 2.0 * h_x, t)?,
        field(x - h_x, t)?,
        field(x + h_x, t)?,
        field(x + 2.0 * h_x, t)?,
        field(x - h_x / 2.0, t)?,
        field(x + h_x / 2.0, t)?,
    ];
    let fx_h = d1_5pt(xs[0], xs[1], xs[2], xs[3], h_x);
    let fx_h2 = d1_5pt(xs[1], xs[4], xs[5], xs[2], h_x / 2.0);
    let (f_x, ex) = richardson(fx_h, fx_h2);
    let fxx_h = d2_5pt(xs[0], xs[1], f0, xs[2], xs[3], h_x);
    let fxx_h2 = d2_5pt(xs[1], xs[4], f0, xs[5], xs[2], h_x / 2.0);
    let (f_xx, exx) = richardson(fxx_h, fxx_h2);

    let ts = [
        field(x, t - 2.0 * h_t)?,
        field(x, t - h_t)?,
        field(x, t + h_t)?,
        field(x, t + 2.0 * h_t)?,
        field(x, t - h_t / 2.0)?,
        field(x, t + h_t / 2.0)?,
    ];
    let ft_h = d1_5pt(ts[0], ts[1], ts[2], ts[3], h_t);
    let ft_h2 = d1_5pt(ts[1], ts[4], ts[5], ts[2], h_t / 2.0);
    let (f_t, et) = richardson(ft_h, ft_h2);

    Ok(FieldDerivs {
        f: f0,
        f_x,
        f_xx,
        f_t,
        err_estimate: ex.max(exx).max(et),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EquationResidual {
    pub max_abs: f64,
    pub mean_abs: f64,
    pub max_at: (f64, f64),
}

/// Per-equation residual summary for a (system, solution) pair.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub equations: Vec<EquationResidual>,
    pub tol: f64,
    pub domain_failures: usize,
    pub nodes_evaluated: usize,
    pub passed: bool,
}

impl ResidualReport {
    pub fn max_abs(&self) -> f64 {
        self.equations
            .iter()
            .map(|e| e.max_abs)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct ResidualOptions {
    pub tol: f64,
    /// Base x-step for the difference stencils; resolved against the grid
    /// extent when `None` (2.5e-4 of the x-range).
    pub h_x: Option<f64>,
    /// Base t-step; defaults to 2.5e-4 of the t-range.
    pub h_t: Option<f64>,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        ResidualOptions {
            tol: 1e-6,
            h_x: None,
            h_t: None,
        }
    }
}

pub const DEFAULT_TOL_CLASSICAL: f64 = 1e-6;
pub const DEFAULT_TOL_GENERALIZED: f64 = 1e-5;

struct NodeOutcome {
    residuals: Vec<f64>,
    x: f64,
    t: f64,
    failed: bool,
}

fn eval_node(
    system: &dyn PdeSystem,
    fields: &dyn FieldSet,
    x: f64,
    t: f64,
    h_x: f64,
    h_t: f64,
) -> NodeOutcome {
    let arity = system.arity();
    let mut jets = Vec::with_capacity(arity);
    let mut dts = Vec::with_capacity(arity);
    for comp in 0..arity {
        match field_derivs(|x, t| fields.eval(comp, x, t), x, t, h_x, h_t) {
            Ok(d) => {
                jets.push(SpatialJet {
                    val: d.f,
                    dx: d.f_x,
                    dxx: d.f_xx,
                });
                dts.push(d.f_t);
            }
            Err(_) => {
                return NodeOutcome {
                    residuals: vec![0.0; arity],
                    x,
                    t,
                    failed: true,
                }
            }
        }
    }
    let mut residuals = Vec::with_capacity(arity);
    for eq in 0..arity {
        match system.rhs(eq, x, t, &jets) {
            Ok(rhs) => residuals.push(dts[eq] - rhs),
            Err(_) => {
                return NodeOutcome {
                    residuals: vec![0.0; arity],
                    x,
                    t,
                    failed: true,
                }
            }
        }
    }
    NodeOutcome {
        residuals,
        x,
        t,
        failed: false,
    }
}

fn assemble(arity: usize, outcomes: Vec<NodeOutcome>, tol: f64) -> ResidualReport {
    let mut equations = vec![
        EquationResidual {
            max_abs: 0.0,
            mean_abs: 0.0,
            max_at: (f64::NAN, f64::NAN),
        };
        arity
    ];
    let mut failures = 0usize;
    let mut counted = 0usize;
    for o in &outcomes {
        if o.failed {
            failures += 1;
            continue;
        }
        counted += 1;
        for (eq, &r) in o.residuals.iter().enumerate() {
            let abs = r.abs();
            equations[eq].mean_abs += abs;
            if abs > equations[eq].max_abs {
                equations[eq].max_abs = abs;
                equations[eq].max_at = (o.x, o.t);
            }
        }
    }
    if counted > 0 {
        for e in &mut equations {
            e.mean_abs /= counted as f64;
        }
    }
    let max = equations.iter().map(|e| e.max_abs).fold(0.0, f64::max);
    ResidualReport {
        equations,
        tol,
        domain_failures: failures,
        nodes_evaluated: counted,
        passed: failures == 0 && counted > 0 && max <= tol,
    }
}

fn resolve_steps(grid: &Grid, opts: &ResidualOptions) -> (f64, f64) {
    let h_x = opts.h_x.unwrap_or(2.5e-4 * (grid.x_hi - grid.x_lo));
    let h_t = opts.h_t.unwrap_or(2.5e-4 * (grid.t_hi - grid.t_lo));
    (h_x, h_t)
}

/// Evaluate per-equation PDE residuals of `fields` in `system` over `grid`.
///
/// Uses rayon over grid nodes when the `parallel` feature is on. Node order
/// is preserved before aggregation, so the report is deterministic either way.
pub fn residual(
    system: &dyn PdeSystem,
    fields: &dyn FieldSet,
    grid: &Grid,
    opts: &ResidualOptions,
) -> Result<ResidualReport> {
    grid.validate()?;
    check_arity(system, fields)?;
    let (h_x, h_t) = resolve_steps(grid, opts);
    let nodes = grid.nodes();
    #[cfg(feature = "parallel")]
    let outcomes: Vec<NodeOutcome> = nodes
        .par_iter()
        .map(|&(x, t)| eval_node(system, fields, x, t, h_x, h_t))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<NodeOutcome> = nodes
        .iter()
        .map(|&(x, t)| eval_node(system, fields, x, t, h_x, h_t))
        .collect();
    Ok(assemble(system.arity(), outcomes, opts.tol))
}

/// Sequential twin of [`residual`]; kept unconditionally for benchmarking the
/// parallel speedup and as the fallback body when `parallel` is disabled.
pub fn residual_serial(
    system: &dyn PdeSystem,
    fields: &dyn FieldSet,
    grid: &Grid,
    opts: &ResidualOptions,
) -> Result<ResidualReport> {
    grid.validate()?;
    check_arity(system, fields)?;
    let (h_x, h_t) = resolve_steps(grid, opts);
    let outcomes: Vec<NodeOutcome> = grid
        .nodes()
        .iter()
        .map(|&(x, t)| eval_node(system, fields, x, t, h_x, h_t))
        .collect();
    Ok(assemble(system.arity(), outcomes, opts.tol))
}

fn check_arity(system: &dyn PdeSystem, fields: &dyn FieldSet) -> Result<()> {
    if system.arity() != fields.arity() {
        return Err(Error::FamilyMismatch {
            expected: format!("{} field components", system.arity()),
            got: format!("{}", fields.arity()),
        });
    }
    Ok(())
}
