//! Independent method-of-lines cross-check for the generalized systems.
//!
//! Second-order central differences in space, adaptive RK 5(4) in time,
//! Dirichlet boundary values injected from the exact solution at every stage.
//! Because the initial condition and the boundaries come from the exact
//! fields, the numeric solution must track them to the spatial truncation
//! order; the observed error and its decay rate under refinement are the
//! cross-validation verdict.

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions, StepStats};
use crate::transform::GeneralizedSystem;
use crate::verify::{FieldSet, SpatialJet};
use serde::Serialize;
use std::sync::Arc;

/// Spatial discretization of the first-derivative terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceScheme {
    /// Standard second-order central differences.
    Central2,
    /// First-order one-sided differences for f_x; deliberately low order,
    /// kept as a negative control for the convergence estimator.
    UpwindFirstOrder,
}

pub struct MolProblem {
    pub system: GeneralizedSystem,
    /// Exact fields: initial condition, Dirichlet boundary data and the
    /// error reference at the final time.
    pub reference: Arc<dyn FieldSet + Send + Sync>,
    pub x_lo: f64,
    pub x_hi: f64,
    pub nx: usize,
    pub t0: f64,
    pub t1: f64,
    pub scheme: SpaceScheme,
}

#[derive(Debug, Clone)]
pub struct MolOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for MolOptions {
    fn default() -> Self {
        // time error well below the spatial truncation so order studies see
        // a clean second-order signal
        MolOptions {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MolResult {
    /// Final-time fields on the full grid, one row per component.
    pub fields: Vec<Vec<f64>>,
    pub linf_error: f64,
    pub l2_error: f64,
    /// linf normalized by the largest exact field magnitude at t1.
    pub linf_rel: f64,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub min_dt: f64,
    pub max_dt: f64,
}

pub fn integrate(p: &MolProblem, opts: &MolOptions) -> Result<MolResult> {
    if p.nx < 11 {
        return Err(Error::InvalidGrid("nx must be at least 11".into()));
    }
    if !(p.x_lo < p.x_hi) || !(p.t0 <= p.t1) {
        return Err(Error::InvalidGrid("domain bounds must be ordered".into()));
    }
    let arity = p.system.arity();
    if p.reference.arity() != arity {
        return Err(Error::FamilyMismatch {
            expected: format!("{arity} components"),
            got: format!("{}", p.reference.arity()),
        });
    }
    let nx = p.nx;
    let dx = (p.x_hi - p.x_lo) / (nx - 1) as f64;
    let xs: Vec<f64> = (0..nx).map(|i| p.x_lo + dx * i as f64).collect();
    let interior = nx - 2;

    // initial condition sampled from the exact fields
    let mut y0 = vec![0.0; arity * interior];
    for comp in 0..arity {
        for i in 1..nx - 1 {
            y0[comp * interior + i - 1] = p.reference.eval(comp, xs[i], p.t0)?;
        }
    }

    let (y_final, stats) = if p.t1 == p.t0 {
        (y0.clone(), StepStats::default())
    } else {
        let rhs = make_rhs(p, &xs, dx, arity, interior);
        let ode_opts = OdeOptions {
            rtol: opts.rtol,
            atol: opts.atol,
            max_step: f64::INFINITY,
            max_steps: opts.max_steps,
        };
        ode::integrate_to(rhs, p.t0, p.t1, &y0, &ode_opts)?
    };

    // reassemble full-grid fields with exact boundary values at t1
    let mut fields = vec![vec![0.0; nx]; arity];
    let mut linf: f64 = 0.0;
    let mut l2 = 0.0;
    let mut exact_scale: f64 = 0.0;
    for comp in 0..arity {
        fields[comp][0] = p.reference.eval(comp, xs[0], p.t1)?;
        fields[comp][nx - 1] = p.reference.eval(comp, xs[nx - 1], p.t1)?;
        for i in 1..nx - 1 {
            fields[comp][i] = y_final[comp * interior + i - 1];
        }
        for i in 0..nx {
            let exact = p.reference.eval(comp, xs[i], p.t1)?;
            let diff = (fields[comp][i] - exact).abs();
            linf = linf.max(diff);
            l2 += diff * diff;
            exact_scale = exact_scale.max(exact.abs());
        }
    }
    let l2 = (dx * l2).sqrt();
    Ok(MolResult {
        fields,
        linf_error: linf,
        l2_error: l2,
        linf_rel: linf / exact_scale.max(1e-300),
        steps_accepted: stats.accepted,
        steps_rejected: stats.rejected,
        min_dt: stats.min_step,
        max_dt: stats.max_step,
    })
}

fn make_rhs<'a>(
    p: &'a MolProblem,
    xs: &'a [f64],
    dx: f64,
    arity: usize,
    interior: usize,
) -> impl FnMut(f64, &[f64], &mut [f64]) -> Result<()> + 'a {
    let nx = p.nx;
    let upwind = p.scheme == SpaceScheme::UpwindFirstOrder;
    let mut jets = vec![SpatialJet::default(); arity];
    move |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let snap = p.system.snapshot(t)?;
        let mut left = [0.0; 3];
        let mut right = [0.0; 3];
        for comp in 0..arity {
            left[comp] = p.reference.eval(comp, xs[0], t)?;
            right[comp] = p.reference.eval(comp, xs[nx - 1], t)?;
        }
        for i in 1..nx - 1 {
            for (comp, jet) in jets.iter_mut().enumerate() {
                let row = comp * interior;
                let v = y[row + i - 1];
                let vl = if i == 1 { left[comp] } else { y[row + i - 2] };
                let vr = if i == nx - 2 { right[comp] } else { y[row + i] };
                jet.val = v;
                jet.dx = if upwind {
                    (v - vl) / dx
                } else {
                    (vr - vl) / (2.0 * dx)
                };
                jet.dxx = (vl - 2.0 * v + vr) / (dx * dx);
            }
            for eq in 0..arity {
                dy[eq * interior + i - 1] = snap.rhs_at(eq, xs[i], &jets)?;
            }
        }
        Ok(())
    }
}

/// Result of a grid-refinement study.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    /// (nx, linf error) per run.
    pub entries: Vec<(usize, f64)>,
    pub slope: Slope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Slope {
    /// Least-squares slope of log error against log dx.
    Estimate(f64),
    /// Errors sat at the time-integration floor; no spatial signal.
    AtFloor,
}

pub fn convergence_study(
    p: &MolProblem,
    nx_list: &[usize],
    opts: &MolOptions,
) -> Result<ConvergenceStudy> {
    if nx_list.len() < 3 || nx_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams(
            "need at least three strictly increasing grid sizes".into(),
        ));
    }
    let mut entries = Vec::with_capacity(nx_list.len());
    for &nx in nx_list {
        let problem = MolProblem {
            system: p.system.clone(),
            reference: p.reference.clone(),
            nx,
            ..copy_domain(p)
        };
        let r = integrate(&problem, opts)?;
        entries.push((nx, r.linf_error));
    }
    let floor = (10.0 * opts.rtol).max(1e-12);
    if entries.iter().all(|&(_, e)| e <= floor) {
        return Ok(ConvergenceStudy {
            entries,
            slope: Slope::AtFloor,
        });
    }
    // least-squares fit of ln(err) over ln(dx)
    let points: Vec<(f64, f64)> = entries
        .iter()
        .map(|&(nx, e)| {
            let dx = (p.x_hi - p.x_lo) / (nx - 1) as f64;
            (dx.ln(), e.max(1e-300).ln())
        })
        .collect();
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(ConvergenceStudy {
        entries,
        slope: Slope::Estimate(slope),
    })
}

fn copy_domain(p: &MolProblem) -> MolProblem {
    MolProblem {
        system: p.system.clone(),
        reference: p.reference.clone(),
        x_lo: p.x_lo,
        x_hi: p.x_hi,
        nx: p.nx,
        t0: p.t0,
        t1: p.t1,
        scheme: p.scheme,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical;
    use crate::expr::{parse, CoeffSet};
    use crate::riccati::{basis_options, build_characteristic, propagate, RiccatiInit};
    use crate::transform::{build_burgers, build_dlv2, build_linear_rd};
    use crate::verify::ClosureFields;

    fn coeffs(a: &str, b: &str, c: &str, d: &str, f: &str, g: &str, lo: f64, hi: f64) -> Arc<CoeffSet> {
        Arc::new(
            CoeffSet::new(
                parse(a).unwrap(),
                parse(b).unwrap(),
                parse(c).unwrap(),
                parse(d).unwrap(),
                parse(f).unwrap(),
                parse(g).unwrap(),
                (lo, hi),
                128,
            )
            .unwrap(),
        )
    }

    fn zero_init(beta: f64) -> RiccatiInit {
        RiccatiInit {
            mu: 1.0,
            alpha: 0.0,
            beta,
            gamma: 0.0,
            delta: 0.0,
            epsilon: 0.0,
            kappa: 0.0,
        }
    }

    /// Exponential-decay linear-RD scenario problem on the standard box.
    fn linear_rd_problem(scheme: SpaceScheme, nx: usize) -> MolProblem {
        let cs = coeffs("1", "0", "-1", "-1", "0", "0", -0.2, 1.3);
        let basis = build_characteristic(cs, 0.0, -0.2, 1.3, &basis_options(-0.2, 1.3)).unwrap();
        let state = Arc::new(propagate(Arc::new(basis), zero_init(1.0)).unwrap());
        let classical = Arc::new(classical::linear_rd(1.0, 100.0, 1.0));
        let (sys, sol) = build_linear_rd(state, classical).unwrap();
        MolProblem {
            system: sys,
            reference: Arc::new(sol),
            x_lo: -4.0,
            x_hi: 4.0,
            nx,
            t0: 0.1,
            t1: 1.1,
            scheme,
        }
    }

    fn burgers_problem(nx: usize) -> MolProblem {
        let cs = coeffs("exp(-2*sin(t))", "0", "cos(t)", "0", "0", "cos(t)", -0.2, 1.3);
        let red = Arc::new(
            crate::riccati::solve_reduced(
                cs,
                0.0,
                -0.2,
                1.3,
                (1.0, 0.0, 0.0),
                &basis_options(-0.2, 1.3),
            )
            .unwrap(),
        );
        let classical = Arc::new(
            classical::burgers(classical::BurgersParams {
                b1: 2.0,
                b2: 1.0,
                c1: 2.0,
                c2: 2.0,
                level: -1.0,
                wave_number: None,
                phase_shift: None,
            })
            .unwrap(),
        );
        let (sys, sol) = build_burgers(red, classical).unwrap();
        MolProblem {
            system: sys,
            reference: Arc::new(sol),
            x_lo: -4.0,
            x_hi: 4.0,
            nx,
            t0: 0.1,
            t1: 1.1,
            scheme: SpaceScheme::Central2,
        }
    }

    #[test]
    fn tracks_linear_rd_scenario() {
        let p = linear_rd_problem(SpaceScheme::Central2, 201);
        let r = integrate(&p, &MolOptions::default()).unwrap();
        println!("linf={:.4e} rel={:.4e} l2={:.4e} steps={}", r.linf_error, r.linf_rel, r.l2_error, r.steps_accepted);
        assert!(r.linf_rel <= 5e-4, "linf_rel = {:.3e}", r.linf_rel);
        assert!(r.linf_error <= 5e-3, "linf = {:.3e}", r.linf_error);
        assert!(r.steps_accepted > 0);
    }

    #[test]
    fn zero_fields_are_a_fixed_point() {
        // homogeneous quadratic Lotka-Volterra system with zero data
        let cs = coeffs("0.5", "0", "0", "(tanh(t) - 1)/2", "0", "0", -0.2, 1.3);
        let basis = build_characteristic(cs, 0.0, -0.2, 1.3, &basis_options(-0.2, 1.3)).unwrap();
        let mut init = zero_init(2f64.sqrt());
        init.kappa = 1.0;
        let state = Arc::new(propagate(Arc::new(basis), init).unwrap());
        let classical = Arc::new(
            classical::dlv2(classical::Dlv2Params {
                a1: 2.0,
                a2: 1.0,
                b1: 2f64.sqrt(),
                b2: 2f64.sqrt(),
                c1: 2.0,
                c2: 2.0,
                branch: classical::Dlv2Branch::NuRatio,
            })
            .unwrap(),
        );
        let (sys, _) = build_dlv2(state, classical).unwrap();
        let zero = Arc::new(ClosureFields {
            arity: 2,
            eval: |_c, _x: f64, _t: f64| Ok(0.0),
        });
        let p = MolProblem {
            system: sys,
            reference: zero,
            x_lo: -2.0,
            x_hi: 2.0,
            nx: 21,
            t0: 0.1,
            t1: 0.6,
            scheme: SpaceScheme::Central2,
        };
        let r = integrate(&p, &MolOptions::default()).unwrap();
        for row in &r.fields {
            for &v in row {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn burgers_observed_order_two() {
        let p = burgers_problem(101);
        let study =
            convergence_study(&p, &[101, 201, 401], &MolOptions::default()).unwrap();
        match study.slope {
            Slope::Estimate(s) => {
                assert!((1.7..=2.3).contains(&s), "slope {s}, {:?}", study.entries)
            }
            Slope::AtFloor => panic!("unexpected floor: {:?}", study.entries),
        }
    }

    #[test]
    fn linear_rd_observed_order_two() {
        let p = linear_rd_problem(SpaceScheme::Central2, 51);
        let study = convergence_study(&p, &[51, 101, 201], &MolOptions::default()).unwrap();
        match study.slope {
            Slope::Estimate(s) => {
                assert!((1.7..=2.3).contains(&s), "slope {s}, {:?}", study.entries)
            }
            Slope::AtFloor => panic!("unexpected floor"),
        }
    }

    #[test]
    fn upwind_fixture_shows_first_order() {
        let p = linear_rd_problem(SpaceScheme::UpwindFirstOrder, 51);
        let study = convergence_study(&p, &[51, 101, 201], &MolOptions::default()).unwrap();
        match study.slope {
            Slope::Estimate(s) => {
                assert!((0.7..=1.3).contains(&s), "slope {s}, {:?}", study.entries)
            }
            Slope::AtFloor => panic!("unexpected floor"),
        }
    }

    #[test]
    fn space_constant_solution_sits_at_floor() {
        // identity-state linear-RD system admits the x-independent solution
        // (u, v) = (e^{-b1 t} + e^{-b2 t}, (b1 - b2) e^{-b2 t})
        let cs = coeffs("1", "0", "0", "0", "0", "0", -0.2, 1.3);
        let basis = build_characteristic(cs, 0.0, -0.2, 1.3, &basis_options(-0.2, 1.3)).unwrap();
        let state = Arc::new(propagate(Arc::new(basis), zero_init(1.0)).unwrap());
        let classical = Arc::new(classical::linear_rd(1.0, 3.0, 1.0));
        let (sys, _) = build_linear_rd(state, classical).unwrap();
        let flat = Arc::new(ClosureFields {
            arity: 2,
            eval: |c, _x: f64, t: f64| {
                Ok(match c {
                    0 => (-3.0 * t).exp() + (-t).exp(),
                    _ => 2.0 * (-t).exp(),
                })
            },
        });
        let p = MolProblem {
            system: sys,
            reference: flat,
            x_lo: -2.0,
            x_hi: 2.0,
            nx: 21,
            t0: 0.0,
            t1: 1.0,
            scheme: SpaceScheme::Central2,
        };
        let study = convergence_study(&p, &[21, 41, 81], &MolOptions::default()).unwrap();
        assert_eq!(study.slope, Slope::AtFloor, "{:?}", study.entries);
    }

    #[test]
    fn zero_length_span_returns_initial_bit_exactly() {
        let mut p = linear_rd_problem(SpaceScheme::Central2, 31);
        p.t1 = p.t0;
        let r = integrate(&p, &MolOptions::default()).unwrap();
        assert_eq!(r.linf_error, 0.0);
        assert_eq!(r.steps_accepted, 0);
        let dx = 8.0 / 30.0;
        for (comp, row) in r.fields.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                let x = -4.0 + dx * i as f64;
                assert_eq!(v, p.reference.eval(comp, x, p.t0).unwrap());
            }
        }
    }

    #[test]
    fn rejects_tiny_grids_and_bad_arity() {
        let mut p = linear_rd_problem(SpaceScheme::Central2, 31);
        p.nx = 5;
        assert!(integrate(&p, &MolOptions::default()).is_err());
    }
}
