//! The Riccati systems behind the similarity transformations.
//!
//! The quadratic Riccati system for (alpha, beta, gamma, delta, epsilon,
//! kappa, mu) linearizes through alpha = -mu'/(4 a mu) - d/(2a) into the
//! characteristic equation mu'' = eta mu' + 4 sigma mu. [`build_characteristic`]
//! integrates that equation for the fundamental pair (mu0, mu1) together with
//! the kernel quadratures W, delta0, epsilon0, kappa0 as one augmented ODE
//! system, sharing step control so the near-singular combinations downstream
//! stay consistent. [`propagate`] then turns arbitrary initial data into
//! dense-output evaluators via the multiparameter formulas, rearranged into
//! cancellation-free form so values stay accurate arbitrarily close to the
//! anchor where mu0 vanishes.
//!
//! Everything here is certified numerically: [`verify_riccati`] measures the
//! residual of every defining ODE by Richardson-extrapolated central
//! differences on the returned evaluators.

use crate::error::{Error, Result};
use crate::expr::{CoeffSet, Expr};
use crate::ode::{self, DenseOde, OdeOptions};
use serde::Serialize;
use std::sync::Arc;

// Augmented state layout for the characteristic solve.
const MU0: usize = 0;
const MU0P: usize = 1;
const MU1: usize = 2;
const MU1P: usize = 3;
const BIGW: usize = 4;
const QD: usize = 5; // D(t): delta0 = W D / mu0
const QE: usize = 6; // E(t): integral part of epsilon0
const QK: usize = 7; // K(t): integral part of kappa0
const NSTATE: usize = 8;

/// Fundamental pair of the characteristic equation plus kernel quadratures,
/// with dense output on a working interval around the anchor.
#[derive(Debug)]
pub struct CharacteristicBasis {
    pub coeffs: Arc<CoeffSet>,
    pub anchor: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    dense: DenseOde,
    a_anchor: f64,
    d_anchor: f64,
    has_source: bool,
}

/// Raw basis values at one time.
#[derive(Debug, Clone, Copy)]
pub struct BasisValues {
    pub mu0: f64,
    pub mu0_prime: f64,
    pub mu1: f64,
    pub mu1_prime: f64,
    pub w: f64,
    pub quad_d: f64,
    pub quad_e: f64,
    pub quad_k: f64,
}

/// The six kernel functions evaluated away from the anchor.
#[derive(Debug, Clone, Copy)]
pub struct KernelValues {
    pub alpha0: f64,
    pub beta0: f64,
    pub gamma0: f64,
    pub delta0: f64,
    pub epsilon0: f64,
    pub kappa0: f64,
}

/// Integrate the characteristic equation and kernel quadratures across
/// `[t_lo, t_hi]` from `anchor` (both directions when needed).
pub fn build_characteristic(
    coeffs: Arc<CoeffSet>,
    anchor: f64,
    t_lo: f64,
    t_hi: f64,
    opts: &OdeOptions,
) -> Result<CharacteristicBasis> {
    if !(t_lo <= anchor && anchor <= t_hi) {
        return Err(Error::InvalidParams(format!(
            "anchor {anchor} outside [{t_lo}, {t_hi}]"
        )));
    }
    let a_anchor = coeffs.a.eval(anchor)?;
    if a_anchor == 0.0 {
        return Err(Error::Coefficients(format!("a({anchor}) = 0 at the anchor")));
    }
    let d_anchor = coeffs.d.eval(anchor)?;
    let has_source = coeffs.has_source_terms();

    let mut y0 = [0.0; NSTATE];
    y0[MU0] = 0.0;
    y0[MU0P] = 2.0 * a_anchor;
    y0[MU1] = 1.0;
    y0[MU1P] = 0.0;
    y0[BIGW] = 1.0;

    let cs = coeffs.clone();
    let mu0p_floor = 1e-10 * (1.0 + 2.0 * a_anchor.abs());
    let rhs = move |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let a = cs.a.eval(t)?;
        let eta = cs.eta(t)?;
        let sigma = cs.sigma(t)?;
        dy[MU0] = y[MU0P];
        dy[MU0P] = eta * y[MU0P] + 4.0 * sigma * y[MU0];
        dy[MU1] = y[MU1P];
        dy[MU1P] = eta * y[MU1P] + 4.0 * sigma * y[MU1];
        let c = cs.c.eval(t)?;
        let d = cs.d.eval(t)?;
        dy[BIGW] = (c - 2.0 * d) * y[BIGW];
        if has_source {
            let f = cs.f.eval(t)?;
            let g = cs.g.eval(t)?;
            let p = f + d / a * g;
            let q = g / (2.0 * a);
            let mu0p = y[MU0P];
            if mu0p.abs() < mu0p_floor {
                return Err(Error::TurningPoint { t });
            }
            let w = y[BIGW];
            let wd = w * y[QD];
            dy[QD] = (p * y[MU0] + q * y[MU0P]) / w;
            dy[QE] = -8.0 * a * sigma * w * wd / (mu0p * mu0p) + 2.0 * a * w * p / mu0p;
            dy[QK] = -4.0 * a * sigma * wd * wd / (mu0p * mu0p) + 2.0 * a * wd * p / mu0p;
        } else {
            dy[QD] = 0.0;
            dy[QE] = 0.0;
            dy[QK] = 0.0;
        }
        Ok(())
    };

    let dense = ode::integrate_dense(rhs, anchor, t_lo, t_hi, &y0, opts)?;
    Ok(CharacteristicBasis {
        coeffs,
        anchor,
        t_lo,
        t_hi,
        dense,
        a_anchor,
        d_anchor,
        has_source,
    })
}

/// Default integration options for basis construction: tight tolerances and
/// a step cap sized so the cubic Hermite dense output stays well below the
/// residual tolerances downstream.
pub fn basis_options(t_lo: f64, t_hi: f64) -> OdeOptions {
    let span = (t_hi - t_lo).max(1e-6);
    OdeOptions {
        rtol: 1e-10,
        atol: 1e-12,
        max_step: (span / 2048.0).min(2.5e-3),
        max_steps: 50_000_000,
    }
}

impl CharacteristicBasis {
    pub fn values_at(&self, t: f64) -> Result<BasisValues> {
        let mut y = [0.0; NSTATE];
        self.dense.eval_into(t, &mut y)?;
        Ok(BasisValues {
            mu0: y[MU0],
            mu0_prime: y[MU0P],
            mu1: y[MU1],
            mu1_prime: y[MU1P],
            w: y[BIGW],
            quad_d: y[QD],
            quad_e: y[QE],
            quad_k: y[QK],
        })
    }

    fn singular_threshold(&self) -> f64 {
        1e-12 * f64::max(1.0, self.a_anchor.abs() * 2.0)
    }

    /// The six kernel functions alpha0..kappa0 at `t`.
    ///
    /// Errors close to the anchor where mu0 vanishes and gamma0 is singular.
    pub fn kernel_at(&self, t: f64) -> Result<KernelValues> {
        let v = self.values_at(t)?;
        if v.mu0.abs() < self.singular_threshold() {
            return Err(Error::SingularPoint { t });
        }
        let a = self.coeffs.a.eval(t)?;
        let d = self.coeffs.d.eval(t)?;
        let alpha0 = -v.mu0_prime / (4.0 * a * v.mu0) - d / (2.0 * a);
        let beta0 = v.w / v.mu0;
        let gamma0 = -v.mu1 / (2.0 * v.mu0) + self.d_anchor / (2.0 * self.a_anchor);
        let delta0 = v.w * v.quad_d / v.mu0;
        let (epsilon0, kappa0) = if self.has_source {
            let wd = v.w * v.quad_d;
            (
                -2.0 * a * v.w * wd / (v.mu0_prime * v.mu0) + v.quad_e,
                -a * wd * wd / (v.mu0 * v.mu0_prime) + v.quad_k,
            )
        } else {
            (0.0, 0.0)
        };
        Ok(KernelValues {
            alpha0,
            beta0,
            gamma0,
            delta0,
            epsilon0,
            kappa0,
        })
    }
}

/// Initial data for the Riccati system at the basis anchor.
#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize)]
pub struct RiccatiInit {
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub kappa: f64,
}

impl RiccatiInit {
    pub fn validate(&self) -> Result<()> {
        if self.beta == 0.0 {
            return Err(Error::InvalidInit("beta(t0) must be nonzero".into()));
        }
        if self.mu == 0.0 {
            return Err(Error::InvalidInit("mu(t0) must be nonzero".into()));
        }
        let all = [
            self.mu,
            self.alpha,
            self.beta,
            self.gamma,
            self.delta,
            self.epsilon,
            self.kappa,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInit("initial data must be finite".into()));
        }
        Ok(())
    }
}

/// All transform functions at one time.
#[derive(Debug, Clone, Copy)]
pub struct RiccatiComponents {
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub kappa: f64,
    /// Present only after [`solve_modified`].
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
}

enum StateBackend {
    Propagated {
        basis: Arc<CharacteristicBasis>,
        init: RiccatiInit,
    },
    /// Closed-form evaluators, used by tests and negative controls.
    Closed {
        #[allow(clippy::type_complexity)]
        eval: Arc<dyn Fn(f64) -> [f64; 7] + Send + Sync>,
    },
}

/// Modified-system attachment: kappa split into kappa1 + kappa2 driven by an
/// interaction coefficient h(t).
struct ModifiedPart {
    h: Expr,
    kappa2_init: f64,
    /// dense quadrature of the running integral of h from the anchor
    integral: DenseOde,
}

/// Solution of the Riccati system as a set of dense-output evaluators.
pub struct RiccatiState {
    backend: StateBackend,
    modified: Option<ModifiedPart>,
    pub coeffs: Arc<CoeffSet>,
    /// Interval on which the state is regular (truncated at the first
    /// blow-up boundary when one exists).
    pub t_lo: f64,
    pub t_hi: f64,
    pub anchor: f64,
}

impl std::fmt::Debug for RiccatiState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RiccatiState")
            .field("t_lo", &self.t_lo)
            .field("t_hi", &self.t_hi)
            .field("anchor", &self.anchor)
            .field("modified", &self.modified.is_some())
            .finish()
    }
}

/// Propagate initial data through the multiparameter formulas.
///
/// The returned evaluators are exact at the anchor and smooth across it; the
/// formulas keep the common factor `G = mu0 (alpha(t0) + gamma0)` unsplit so
/// nothing blows up where the individual kernel functions do. If `G` vanishes
/// at some interior time the state is truncated at the first such boundary.
pub fn propagate(basis: Arc<CharacteristicBasis>, init: RiccatiInit) -> Result<RiccatiState> {
    init.validate()?;
    let coeffs = basis.coeffs.clone();
    let anchor = basis.anchor;
    let (t_lo, t_hi) = scan_blowup(&basis, &init)?;
    Ok(RiccatiState {
        backend: StateBackend::Propagated { basis, init },
        modified: None,
        coeffs,
        t_lo,
        t_hi,
        anchor,
    })
}

/// Find the largest subinterval around the anchor on which G does not vanish.
fn scan_blowup(basis: &CharacteristicBasis, init: &RiccatiInit) -> Result<(f64, f64)> {
    let samples = 2048;
    let gee = |t: f64| -> Result<f64> {
        let v = basis.values_at(t)?;
        Ok(g_factor(basis, init, &v))
    };
    let mut lo = basis.t_lo;
    let mut hi = basis.t_hi;
    // G(anchor) = -1/2 by construction
    let mut prev_t = basis.anchor;
    let mut prev_g = -0.5f64;
    let step_hi = (basis.t_hi - basis.anchor) / samples as f64;
    if step_hi > 0.0 {
        for i in 1..=samples {
            let t = basis.anchor + step_hi * i as f64;
            let g = gee(t)?;
            if g == 0.0 || g.signum() != prev_g.signum() {
                hi = prev_t;
                break;
            }
            prev_t = t;
            prev_g = g;
        }
    }
    prev_t = basis.anchor;
    prev_g = -0.5;
    let step_lo = (basis.anchor - basis.t_lo) / samples as f64;
    if step_lo > 0.0 {
        for i in 1..=samples {
            let t = basis.anchor - step_lo * i as f64;
            let g = gee(t)?;
            if g == 0.0 || g.signum() != prev_g.signum() {
                lo = prev_t;
                break;
            }
            prev_t = t;
            prev_g = g;
        }
    }
    Ok((lo, hi))
}

/// G(t) = mu0 (alpha(t0) + gamma0) written without the mu0 division.
fn g_factor(basis: &CharacteristicBasis, init: &RiccatiInit, v: &BasisValues) -> f64 {
    let shift = init.alpha + basis.d_anchor / (2.0 * basis.a_anchor);
    v.mu0 * shift - v.mu1 / 2.0
}

impl RiccatiState {
    /// Build a state from closed-form component evaluators
    /// (mu, alpha, beta, gamma, delta, epsilon, kappa).
    pub fn from_evaluators<F>(
        eval: F,
        coeffs: Arc<CoeffSet>,
        anchor: f64,
        t_lo: f64,
        t_hi: f64,
    ) -> RiccatiState
    where
        F: Fn(f64) -> [f64; 7] + Send + Sync + 'static,
    {
        RiccatiState {
            backend: StateBackend::Closed {
                eval: Arc::new(eval),
            },
            modified: None,
            coeffs,
            t_lo,
            t_hi,
            anchor,
        }
    }

    pub fn init(&self) -> Option<RiccatiInit> {
        match &self.backend {
            StateBackend::Propagated { init, .. } => Some(*init),
            StateBackend::Closed { .. } => None,
        }
    }

    pub fn basis(&self) -> Option<&Arc<CharacteristicBasis>> {
        match &self.backend {
            StateBackend::Propagated { basis, .. } => Some(basis),
            StateBackend::Closed { .. } => None,
        }
    }

    pub fn has_modified(&self) -> bool {
        self.modified.is_some()
    }

    pub fn modified_h(&self) -> Option<&Expr> {
        self.modified.as_ref().map(|m| &m.h)
    }

    fn check_interval(&self, t: f64) -> Result<()> {
        if t < self.t_lo || t > self.t_hi {
            return Err(Error::OutOfInterval {
                t,
                lo: self.t_lo,
                hi: self.t_hi,
            });
        }
        Ok(())
    }

    /// Evaluate every component at `t`.
    pub fn components_at(&self, t: f64) -> Result<RiccatiComponents> {
        self.check_interval(t)?;
        let mut comp = match &self.backend {
            StateBackend::Propagated { basis, init } => {
                if t == basis.anchor {
                    RiccatiComponents {
                        mu: init.mu,
                        alpha: init.alpha,
                        beta: init.beta,
                        gamma: init.gamma,
                        delta: init.delta,
                        epsilon: init.epsilon,
                        kappa: init.kappa,
                        kappa1: None,
                        kappa2: None,
                    }
                } else {
                    propagate_at(basis, init, t)?
                }
            }
            StateBackend::Closed { eval } => {
                let v = eval(t);
                RiccatiComponents {
                    mu: v[0],
                    alpha: v[1],
                    beta: v[2],
                    gamma: v[3],
                    delta: v[4],
                    epsilon: v[5],
                    kappa: v[6],
                    kappa1: None,
                    kappa2: None,
                }
            }
        };
        if let Some(m) = &self.modified {
            let integral = m.integral.eval(t)?[0];
            let arg = integral + (-m.kappa2_init).exp();
            if arg.abs() < 1e-300 {
                return Err(Error::Breakdown {
                    t,
                    message: "log argument of kappa2 reached zero".into(),
                });
            }
            let kappa2 = -arg.abs().ln();
            comp.kappa2 = Some(kappa2);
            comp.kappa1 = Some(comp.kappa - kappa2);
        }
        Ok(comp)
    }
}

fn propagate_at(
    basis: &CharacteristicBasis,
    init: &RiccatiInit,
    t: f64,
) -> Result<RiccatiComponents> {
    let v = basis.values_at(t)?;
    let a = basis.coeffs.a.eval(t)?;
    let d = basis.coeffs.d.eval(t)?;
    let g = g_factor(basis, init, &v);
    if g == 0.0 {
        return Err(Error::Breakdown {
            t,
            message: "alpha(t0) + gamma0(t) vanished".into(),
        });
    }
    // N(t0) = 0 cancels the anchor singularities of alpha0 and delta0.
    let n = v.mu0_prime * g / a + v.w * v.w;
    let mu = -2.0 * init.mu * g;
    let alpha = -n / (4.0 * v.mu0 * g) - d / (2.0 * a);
    let beta = -init.beta * v.w / (2.0 * g);
    let gamma = init.gamma - init.beta * init.beta * v.mu0 / (4.0 * g);
    let (delta, epsilon, kappa) = if basis.has_source {
        let s = init.delta + v.quad_e;
        let wd = v.w * v.quad_d;
        let delta = if wd == 0.0 {
            -v.w * s / (2.0 * g)
        } else {
            a * v.w * v.quad_d * n / (v.mu0 * g * v.mu0_prime) - v.w * s / (2.0 * g)
        };
        let epsilon = init.epsilon
            - init.beta * (s * v.mu0 - 2.0 * a * v.w * wd / v.mu0_prime) / (2.0 * g);
        let kappa = init.kappa + v.quad_k - s * s * v.mu0 / (4.0 * g)
            + if wd == 0.0 {
                0.0
            } else {
                a * s * v.w * wd / (g * v.mu0_prime)
                    - a * a * v.w * v.w * v.quad_d * v.quad_d * n
                        / (g * v.mu0 * v.mu0_prime * v.mu0_prime)
            };
        (delta, epsilon, kappa)
    } else {
        let s = init.delta;
        (
            -v.w * s / (2.0 * g),
            init.epsilon - init.beta * s * v.mu0 / (2.0 * g),
            init.kappa - s * s * v.mu0 / (4.0 * g),
        )
    };
    Ok(RiccatiComponents {
        mu,
        alpha,
        beta,
        gamma,
        delta,
        epsilon,
        kappa,
        kappa1: None,
        kappa2: None,
    })
}

/// Attach the modified-system split kappa = kappa1 + kappa2 to a state.
///
/// kappa2(t) = -ln|I(t) + exp(-kappa2(t0))| with I the running integral of
/// the interaction coefficient h; kappa1 = kappa - kappa2. Fails where the
/// log argument reaches zero inside the interval.
pub fn solve_modified(state: RiccatiState, h: Expr, kappa2_init: f64) -> Result<RiccatiState> {
    let hq = h.clone();
    let rhs = move |t: f64, _y: &[f64], dy: &mut [f64]| -> Result<()> {
        dy[0] = hq.eval(t)?;
        Ok(())
    };
    let opts = basis_options(state.t_lo, state.t_hi);
    let integral = ode::integrate_dense(rhs, state.anchor, state.t_lo, state.t_hi, &[0.0], &opts)?;
    // breakdown scan
    let floor = (-kappa2_init).exp();
    let n = 512;
    for i in 0..=n {
        let t = state.t_lo + (state.t_hi - state.t_lo) * i as f64 / n as f64;
        let arg = integral.eval(t)?[0] + floor;
        if arg == 0.0 {
            return Err(Error::Breakdown {
                t,
                message: "kappa2 log argument reaches zero inside the interval".into(),
            });
        }
    }
    let mut state = state;
    state.modified = Some(ModifiedPart {
        h,
        kappa2_init,
        integral,
    });
    Ok(state)
}

/// Solution of the collapsed Riccati system used by the Burgers transform:
/// beta' = c beta, gamma' = a beta^2, epsilon' = -g beta.
pub struct ReducedRiccati {
    pub coeffs: Arc<CoeffSet>,
    pub anchor: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub init: (f64, f64, f64),
    dense: DenseOde,
}

#[derive(Debug, Clone, Copy)]
pub struct ReducedComponents {
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

pub fn solve_reduced(
    coeffs: Arc<CoeffSet>,
    anchor: f64,
    t_lo: f64,
    t_hi: f64,
    init: (f64, f64, f64),
    opts: &OdeOptions,
) -> Result<ReducedRiccati> {
    if init.0 == 0.0 {
        return Err(Error::InvalidInit("beta(t0) must be nonzero".into()));
    }
    let cs = coeffs.clone();
    let rhs = move |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let beta = y[0];
        dy[0] = cs.c.eval(t)? * beta;
        dy[1] = cs.a.eval(t)? * beta * beta;
        dy[2] = -cs.g.eval(t)? * beta;
        Ok(())
    };
    let dense = ode::integrate_dense(rhs, anchor, t_lo, t_hi, &[init.0, init.1, init.2], opts)?;
    Ok(ReducedRiccati {
        coeffs,
        anchor,
        t_lo,
        t_hi,
        init,
        dense,
    })
}

impl ReducedRiccati {
    pub fn components_at(&self, t: f64) -> Result<ReducedComponents> {
        let y = self.dense.eval(t)?;
        Ok(ReducedComponents {
            beta: y[0],
            gamma: y[1],
            epsilon: y[2],
        })
    }
}

impl std::fmt::Debug for ReducedRiccati {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReducedRiccati")
            .field("anchor", &self.anchor)
            .field("t_lo", &self.t_lo)
            .field("t_hi", &self.t_hi)
            .finish()
    }
}

/// Residual summary for one defining ODE.
#[derive(Debug, Clone, Serialize)]
pub struct OdeResidual {
    pub equation: String,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub max_at: f64,
}

/// Numerical certificate that a state satisfies its Riccati system.
#[derive(Debug, Clone, Serialize)]
pub struct RiccatiCertificate {
    pub equations: Vec<OdeResidual>,
    pub tol: f64,
    pub nodes: usize,
    pub passed: bool,
}

impl RiccatiCertificate {
    pub fn max_abs(&self) -> f64 {
        self.equations
            .iter()
            .map(|e| e.max_abs)
            .fold(0.0, f64::max)
    }
}

/// 5-point central first derivative with one Richardson level.
fn fd_derivative<F>(f: &F, t: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let d_at = |h: f64| -> Result<f64> {
        Ok(
            (f(t - 2.0 * h)? - 8.0 * f(t - h)? + 8.0 * f(t + h)? - f(t + 2.0 * h)?)
                / (12.0 * h),
        )
    };
    let coarse = d_at(h)?;
    let fine = d_at(h / 2.0)?;
    Ok((16.0 * fine - coarse) / 15.0)
}

fn fd_step(grid: &[f64]) -> f64 {
    let hi = grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = grid.iter().cloned().fold(f64::INFINITY, f64::min);
    (3e-3 * (hi - lo)).clamp(1e-3, 1e-2)
}

fn summarize(eqs: &mut [OdeResidual], nodes: usize) -> f64 {
    for e in eqs.iter_mut() {
        e.mean_abs /= nodes as f64;
    }
    eqs.iter().map(|e| e.max_abs).fold(0.0, f64::max)
}

/// Verify every defining ODE of a Riccati state on a time grid.
///
/// Residuals use Richardson-extrapolated central differences of the component
/// evaluators. In addition to the six quadratic equations the substitution
/// relation `mu' = -(4 a alpha + 2d) mu` is certified, and the split
/// kappa1/kappa2 equations when the state carries a modified part.
pub fn verify_riccati(
    state: &RiccatiState,
    coeffs: &CoeffSet,
    grid: &[f64],
    tol: f64,
) -> Result<RiccatiCertificate> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty time grid".into()));
    }
    let h = fd_step(grid);
    let n_eq = if state.has_modified() { 9 } else { 7 };
    let names = [
        "alpha", "beta", "gamma", "delta", "epsilon", "kappa", "mu", "kappa1", "kappa2",
    ];
    let mut eqs: Vec<OdeResidual> = names
        .iter()
        .take(n_eq)
        .map(|n| OdeResidual {
            equation: (*n).to_string(),
            max_abs: 0.0,
            mean_abs: 0.0,
            max_at: f64::NAN,
        })
        .collect();

    let comp = |idx: usize| {
        move |t: f64| -> Result<f64> {
            let c = state.components_at(t)?;
            Ok(match idx {
                0 => c.alpha,
                1 => c.beta,
                2 => c.gamma,
                3 => c.delta,
                4 => c.epsilon,
                5 => c.kappa,
                6 => c.mu,
                7 => c.kappa1.unwrap_or(f64::NAN),
                _ => c.kappa2.unwrap_or(f64::NAN),
            })
        }
    };

    for &t in grid {
        let c = state.components_at(t)?;
        let a = coeffs.a.eval(t)?;
        let b = coeffs.b.eval(t)?;
        let cc = coeffs.c.eval(t)?;
        let d = coeffs.d.eval(t)?;
        let f = coeffs.f.eval(t)?;
        let g = coeffs.g.eval(t)?;
        let lin = cc + 4.0 * a * c.alpha;

        let mut residuals = [0.0f64; 9];
        residuals[0] = fd_derivative(&comp(0), t, h)? + b - 2.0 * cc * c.alpha
            - 4.0 * a * c.alpha * c.alpha;
        residuals[1] = fd_derivative(&comp(1), t, h)? - lin * c.beta;
        residuals[2] = fd_derivative(&comp(2), t, h)? - a * c.beta * c.beta;
        residuals[3] = fd_derivative(&comp(3), t, h)? + 2.0 * c.alpha * g - lin * c.delta - f;
        residuals[4] = fd_derivative(&comp(4), t, h)? - (2.0 * a * c.delta - g) * c.beta;
        residuals[5] = fd_derivative(&comp(5), t, h)? - a * c.delta * c.delta + g * c.delta;
        residuals[6] = fd_derivative(&comp(6), t, h)? + (4.0 * a * c.alpha + 2.0 * d) * c.mu;
        if state.has_modified() {
            let hval = state
                .modified
                .as_ref()
                .map(|m| m.h.eval(t))
                .transpose()?
                .unwrap_or(0.0);
            let k2 = c.kappa2.unwrap();
            let source = hval * k2.exp();
            residuals[7] = fd_derivative(&comp(7), t, h)? - a * c.delta * c.delta + g * c.delta
                - source;
            residuals[8] = fd_derivative(&comp(8), t, h)? + source;
        }

        for (e, r) in eqs.iter_mut().zip(residuals.iter().take(n_eq)) {
            let abs = r.abs();
            e.mean_abs += abs;
            if abs > e.max_abs {
                e.max_abs = abs;
                e.max_at = t;
            }
        }
    }
    let max = summarize(&mut eqs, grid.len());
    Ok(RiccatiCertificate {
        passed: max <= tol,
        tol,
        nodes: grid.len(),
        equations: eqs,
    })
}

/// Verify the reduced system beta' = c beta, gamma' = a beta^2,
/// epsilon' = -g beta on a time grid.
pub fn verify_reduced(
    reduced: &ReducedRiccati,
    grid: &[f64],
    tol: f64,
) -> Result<RiccatiCertificate> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty time grid".into()));
    }
    let h = fd_step(grid);
    let names = ["beta", "gamma", "epsilon"];
    let mut eqs: Vec<OdeResidual> = names
        .iter()
        .map(|n| OdeResidual {
            equation: (*n).to_string(),
            max_abs: 0.0,
            mean_abs: 0.0,
            max_at: f64::NAN,
        })
        .collect();
    let comp = |idx: usize| {
        move |t: f64| -> Result<f64> {
            let c = reduced.components_at(t)?;
            Ok(match idx {
                0 => c.beta,
                1 => c.gamma,
                _ => c.epsilon,
            })
        }
    };
    for &t in grid {
        let c = reduced.components_at(t)?;
        let a = reduced.coeffs.a.eval(t)?;
        let cc = reduced.coeffs.c.eval(t)?;
        let g = reduced.coeffs.g.eval(t)?;
        let residuals = [
            fd_derivative(&comp(0), t, h)? - cc * c.beta,
            fd_derivative(&comp(1), t, h)? - a * c.beta * c.beta,
            fd_derivative(&comp(2), t, h)? + g * c.beta,
        ];
        for (e, r) in eqs.iter_mut().zip(residuals.iter()) {
            let abs = r.abs();
            e.mean_abs += abs;
            if abs > e.max_abs {
                e.max_abs = abs;
                e.max_at = t;
            }
        }
    }
    let max = summarize(&mut eqs, grid.len());
    Ok(RiccatiCertificate {
        passed: max <= tol,
        tol,
        nodes: grid.len(),
        equations: eqs,
    })
}

/// Uniform time grid helper.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

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
                256,
            )
            .unwrap(),
        )
    }

    /// a=1, b=0, c=-1, d=-1: eta = 2, sigma = 0, mu0 = e^{2t}-1, mu1 = 1, W = e^t.
    fn exp_decay_basis(hi: f64) -> CharacteristicBasis {
        let cs = coeffs("1", "0", "-1", "-1", "0", "0", 0.0, hi);
        build_characteristic(cs, 0.0, 0.0, hi, &basis_options(0.0, hi)).unwrap()
    }

    #[test]
    fn basis_closed_form_exp_decay() {
        let basis = exp_decay_basis(3.0);
        for i in 1..=30 {
            let t = 0.1 * i as f64;
            let v = basis.values_at(t).unwrap();
            let mu0 = (2.0 * t).exp() - 1.0;
            assert!((v.mu0 - mu0).abs() <= 1e-8 * (1.0 + mu0.abs()), "mu0 at {t}");
            assert!((v.mu1 - 1.0).abs() <= 1e-8, "mu1 at {t}");
            assert!((v.w - t.exp()).abs() <= 1e-8 * t.exp(), "W at {t}");
        }
    }

    #[test]
    fn basis_heat_kernel() {
        let cs = coeffs("1", "0", "0", "0", "0", "0", 0.0, 2.0);
        let basis = build_characteristic(cs, 0.0, 0.0, 2.0, &basis_options(0.0, 2.0)).unwrap();
        for t in [0.25, 1.0, 1.75] {
            let v = basis.values_at(t).unwrap();
            assert!((v.mu0 - 2.0 * t).abs() < 1e-10);
            assert!((v.mu1 - 1.0).abs() < 1e-10);
            assert!((v.w - 1.0).abs() < 1e-10);
            assert_eq!(v.quad_d, 0.0);
            assert_eq!(v.quad_e, 0.0);
            assert_eq!(v.quad_k, 0.0);
        }
    }

    #[test]
    fn basis_half_diffusion() {
        // a = 1/2, everything else zero: mu0' (0) = 2a(0) = 1 so mu0 = t
        let cs = coeffs("0.5", "0", "0", "0", "0", "0", 0.0, 2.0);
        let basis = build_characteristic(cs, 0.0, 0.0, 2.0, &basis_options(0.0, 2.0)).unwrap();
        for t in [0.3, 1.1, 1.9] {
            let v = basis.values_at(t).unwrap();
            assert!((v.mu0 - t).abs() < 1e-10);
            assert!((v.mu1 - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn kernel_closed_forms_exp_decay() {
        let basis = exp_decay_basis(3.0);
        for t in [0.5, 1.0, 2.0] {
            let k = basis.kernel_at(t).unwrap();
            let e2t = (2.0 * t).exp();
            let beta0 = t.exp() / (e2t - 1.0);
            let gamma0 = -1.0 / (2.0 * (e2t - 1.0)) - 0.5;
            assert!((k.beta0 - beta0).abs() <= 1e-8 * (1.0 + beta0.abs()), "beta0 at {t}");
            assert!((k.gamma0 - gamma0).abs() <= 1e-8, "gamma0 at {t}");
        }
    }

    #[test]
    fn kernel_heat_values_at_one() {
        let cs = coeffs("1", "0", "0", "0", "0", "0", 0.0, 2.0);
        let basis = build_characteristic(cs, 0.0, 0.0, 2.0, &basis_options(0.0, 2.0)).unwrap();
        let k = basis.kernel_at(1.0).unwrap();
        assert!((k.alpha0 + 0.25).abs() < 1e-10);
        assert!((k.beta0 - 0.5).abs() < 1e-10);
        assert!((k.gamma0 + 0.25).abs() < 1e-10);
        assert_eq!(k.delta0, 0.0);
        assert_eq!(k.epsilon0, 0.0);
        assert_eq!(k.kappa0, 0.0);
    }

    #[test]
    fn kernel_refuses_singular_point() {
        let basis = exp_decay_basis(1.0);
        assert!(matches!(basis.kernel_at(0.0), Err(Error::SingularPoint { .. })));
        assert!(matches!(basis.kernel_at(1e-14), Err(Error::SingularPoint { .. })));
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

    #[test]
    fn propagate_exp_decay_closed_forms() {
        // beta = e^{-t}, gamma = e^{-t} sinh t, mu = e^{2t}, alpha = delta = epsilon = kappa = 0
        let basis = Arc::new(exp_decay_basis(3.0));
        let state = propagate(basis, zero_init(1.0)).unwrap();
        for i in 0..50 {
            let t = 3.0 * i as f64 / 49.0;
            let c = state.components_at(t).unwrap();
            let rel = |x: f64, want: f64| (x - want).abs() / (1.0 + want.abs());
            assert!(rel(c.beta, (-t).exp()) <= 1e-8, "beta at {t}");
            assert!(rel(c.gamma, (-t).exp() * t.sinh()) <= 1e-8, "gamma at {t}");
            assert!(rel(c.mu, (2.0 * t).exp()) <= 1e-8, "mu at {t}");
            assert!(c.alpha.abs() <= 1e-8, "alpha at {t}");
            assert!(c.delta.abs() <= 1e-10);
            assert!(c.epsilon.abs() <= 1e-10);
            assert!(c.kappa.abs() <= 1e-10);
        }
    }

    #[test]
    fn propagate_tanh_diffusive_lv_closed_forms() {
        // a = 1/2, d = (tanh t - 1)/2: beta = sqrt(2), gamma = t, mu = 1 + tanh t
        let cs = coeffs("0.5", "0", "0", "(tanh(t) - 1)/2", "0", "0", 0.0, 3.0);
        let basis = build_characteristic(cs, 0.0, 0.0, 3.0, &basis_options(0.0, 3.0)).unwrap();
        let mut init = zero_init(2f64.sqrt());
        init.kappa = 1.0;
        init.epsilon = 2.0;
        let state = propagate(Arc::new(basis), init).unwrap();
        for i in 0..50 {
            let t = 3.0 * i as f64 / 49.0;
            let c = state.components_at(t).unwrap();
            assert!((c.beta - 2f64.sqrt()).abs() <= 1e-8, "beta at {t}");
            assert!((c.gamma - t).abs() <= 1e-8, "gamma at {t}");
            assert!((c.mu - (1.0 + t.tanh())).abs() <= 1e-8, "mu at {t}");
            assert!((c.kappa - 1.0).abs() <= 1e-8);
            assert!((c.epsilon - 2.0).abs() <= 1e-8);
            assert!(c.alpha.abs() <= 1e-8);
            assert!(c.delta.abs() <= 1e-10);
        }
    }

    /// Coefficients of the tanh-diffusivity Gray-Scott scenario, anchored at
    /// t0 = 0.1 because a(t) = tanh t vanishes at the origin.
    #[test]
    fn propagate_anchored_sech_family() {
        let t0 = 0.1;
        let cs = coeffs(
            "tanh(t)",
            "4*tanh(t)",
            "0",
            "tanh(t)",
            "4*sinh(t)",
            "3*sinh(t)",
            0.05,
            2.0,
        );
        let basis =
            build_characteristic(cs, t0, 0.05, 2.0, &basis_options(0.05, 2.0)).unwrap();
        let sech = |t: f64| 1.0 / t.cosh();
        let init = RiccatiInit {
            mu: t0.cosh().powi(2),
            alpha: -1.0,
            beta: sech(t0).powi(4),
            gamma: -sech(t0).powi(8) / 8.0,
            delta: 2.0 * t0.cosh(),
            epsilon: -sech(t0).powi(3) / 3.0,
            kappa: -t0.cosh().powi(2),
        };
        let state = propagate(Arc::new(basis), init).unwrap();
        for i in 0..50 {
            let t = 0.1 + (2.0 - 0.1) * i as f64 / 49.0;
            let c = state.components_at(t).unwrap();
            let rel = |x: f64, want: f64| (x - want).abs() / (1.0 + want.abs());
            assert!(rel(c.mu, t.cosh().powi(2)) <= 1e-7, "mu at {t}: {} vs {}", c.mu, t.cosh().powi(2));
            assert!(rel(c.beta, sech(t).powi(4)) <= 1e-7, "beta at {t}");
            assert!(rel(c.gamma, -sech(t).powi(8) / 8.0) <= 1e-7, "gamma at {t}");
            assert!(rel(c.alpha, -1.0) <= 1e-7, "alpha at {t}: {}", c.alpha);
            assert!(rel(c.delta, 2.0 * t.cosh()) <= 1e-7, "delta at {t}: {}", c.delta);
            assert!(rel(c.epsilon, -sech(t).powi(3) / 3.0) <= 1e-7, "epsilon at {t}: {}", c.epsilon);
            assert!(rel(c.kappa, -t.cosh().powi(2)) <= 1e-7, "kappa at {t}: {}", c.kappa);
        }
    }

    #[test]
    fn propagate_near_anchor_limit() {
        let basis = Arc::new(exp_decay_basis(1.0));
        let init = RiccatiInit {
            mu: 2.0,
            alpha: 0.3,
            beta: -1.5,
            gamma: 0.7,
            delta: 0.2,
            epsilon: -0.4,
            kappa: 0.1,
        };
        let state = propagate(basis, init).unwrap();
        let c = state.components_at(1e-6).unwrap();
        let close = |x: f64, want: f64| (x - want).abs() <= 1e-4 * (1.0 + want.abs());
        assert!(close(c.mu, init.mu));
        assert!(close(c.alpha, init.alpha));
        assert!(close(c.beta, init.beta));
        assert!(close(c.gamma, init.gamma));
        assert!(close(c.delta, init.delta));
        assert!(close(c.epsilon, init.epsilon));
        assert!(close(c.kappa, init.kappa));
        // exactly at the anchor the initial data comes back bit-identical
        let c0 = state.components_at(0.0).unwrap();
        assert_eq!(c0.mu, init.mu);
        assert_eq!(c0.kappa, init.kappa);
    }

    #[test]
    fn propagation_composes_at_interior_times() {
        // restarting from an interior state must reproduce the original
        let cs = coeffs("1", "0", "-1", "-1", "0.3", "0.5*sin(t)", 0.0, 2.0);
        let basis = build_characteristic(cs.clone(), 0.0, 0.0, 2.0, &basis_options(0.0, 2.0)).unwrap();
        let init = RiccatiInit {
            mu: 1.0,
            alpha: -0.2,
            beta: 1.0,
            gamma: 0.0,
            delta: 0.4,
            epsilon: 0.0,
            kappa: 0.0,
        };
        let state = propagate(Arc::new(basis), init).unwrap();
        let t_star = 0.7;
        let mid = state.components_at(t_star).unwrap();
        let basis2 =
            build_characteristic(cs, t_star, t_star, t_star + 0.5, &basis_options(t_star, t_star + 0.5))
                .unwrap();
        let init2 = RiccatiInit {
            mu: mid.mu,
            alpha: mid.alpha,
            beta: mid.beta,
            gamma: mid.gamma,
            delta: mid.delta,
            epsilon: mid.epsilon,
            kappa: mid.kappa,
        };
        let state2 = propagate(Arc::new(basis2), init2).unwrap();
        for i in 1..=10 {
            let s = 0.05 * i as f64;
            let c1 = state.components_at(t_star + s).unwrap();
            let c2 = state2.components_at(t_star + s).unwrap();
            for (x, y) in [
                (c1.mu, c2.mu),
                (c1.alpha, c2.alpha),
                (c1.beta, c2.beta),
                (c1.gamma, c2.gamma),
                (c1.delta, c2.delta),
                (c1.epsilon, c2.epsilon),
                (c1.kappa, c2.kappa),
            ] {
                assert!((x - y).abs() <= 1e-6 * (1.0 + y.abs()), "s = {s}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn substitution_identity_alpha_mu() {
        let cs = coeffs("1", "0", "-1", "-1", "0", "0", 0.0, 3.0);
        let basis = build_characteristic(cs.clone(), 0.0, 0.0, 3.0, &basis_options(0.0, 3.0)).unwrap();
        let state = propagate(Arc::new(basis), zero_init(1.0)).unwrap();
        let mu = |t: f64| state.components_at(t).map(|c| c.mu);
        for i in 1..=20 {
            let t = 0.1 + 2.7 * i as f64 / 20.0;
            let c = state.components_at(t).unwrap();
            let mu_prime = fd_derivative(&mu, t, 1e-3).unwrap();
            let a = cs.a.eval(t).unwrap();
            let d = cs.d.eval(t).unwrap();
            let alpha_from_mu = -mu_prime / (4.0 * a * c.mu) - d / (2.0 * a);
            assert!((c.alpha - alpha_from_mu).abs() <= 1e-7, "t = {t}");
        }
    }

    #[test]
    fn solve_modified_constant_h() {
        let cs = coeffs("0.5", "0", "0", "0", "0", "0", 0.0, 2.0);
        let basis = build_characteristic(cs, 0.0, 0.0, 2.0, &basis_options(0.0, 2.0)).unwrap();
        let state = propagate(Arc::new(basis), zero_init(1.0)).unwrap();
        // h = 0: kappa2 stays at its initial value
        let state0 = solve_modified(state, parse("0").unwrap(), 0.7).unwrap();
        for t in [0.0, 0.5, 1.5] {
            let c = state0.components_at(t).unwrap();
            assert!((c.kappa2.unwrap() - 0.7).abs() < 1e-12, "t = {t}");
        }
        // h = h0: kappa2 = -ln|h0 t + 1|
        let cs = coeffs("0.5", "0", "0", "0", "0", "0", 0.0, 2.0);
        let basis = build_characteristic(cs, 0.0, 0.0, 2.0, &basis_options(0.0, 2.0)).unwrap();
        let state = propagate(Arc::new(basis), zero_init(1.0)).unwrap();
        let h0 = 0.8;
        let state1 = solve_modified(state, parse("0.8").unwrap(), 0.0).unwrap();
        for t in [0.0, 0.5, 1.0, 2.0] {
            let c = state1.components_at(t).unwrap();
            let want = -(h0 * t + 1.0).abs().ln();
            assert!((c.kappa2.unwrap() - want).abs() <= 1e-10, "t = {t}");
        }
    }

    #[test]
    fn solve_modified_periodic_interaction() {
        // h = 3 sin(6t) e^{sin^2 3t} integrates to e^{sin^2 3t} - 1, so with
        // kappa2(0) = 0 we get kappa2 = -sin^2(3t)
        let cs = coeffs("0.5", "0", "0", "0", "0", "0", 0.0, 3.0);
        let basis = build_characteristic(cs, 0.0, 0.0, 3.0, &basis_options(0.0, 3.0)).unwrap();
        let state = propagate(Arc::new(basis), zero_init(1.0)).unwrap();
        let state = solve_modified(state, parse("3*sin(6*t)*exp(sin(3*t)^2)").unwrap(), 0.0).unwrap();
        for i in 0..60 {
            let t = 3.0 * i as f64 / 59.0;
            let c = state.components_at(t).unwrap();
            let want = -(3.0 * t).sin().powi(2);
            assert!((c.kappa2.unwrap() - want).abs() <= 1e-9, "t = {t}");
        }
    }

    #[test]
    fn verify_exp_decay_state_to_tight_tolerance() {
        let cs = coeffs("1", "0", "-1", "-1", "0", "0", -0.1, 3.1);
        let basis =
            build_characteristic(cs.clone(), 0.0, -0.1, 3.1, &basis_options(-0.1, 3.1)).unwrap();
        let state = propagate(Arc::new(basis), zero_init(1.0)).unwrap();
        let grid = linspace(0.0, 3.0, 200);
        let cert = verify_riccati(&state, &cs, &grid, 1e-7).unwrap();
        assert!(cert.passed, "max residual {:.3e}", cert.max_abs());
    }

    #[test]
    fn verify_rejects_non_solution() {
        // constant state with beta = 1 violates gamma' = a beta^2 by exactly 1
        let cs = coeffs("1", "0", "0", "0", "0", "0", 0.0, 2.0);
        let state = RiccatiState::from_evaluators(
            |_t| [1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            cs.clone(),
            0.0,
            -1.0,
            3.0,
        );
        let grid = linspace(0.5, 1.5, 20);
        let cert = verify_riccati(&state, &cs, &grid, 1e-6).unwrap();
        assert!(!cert.passed);
        let gamma_eq = cert.equations.iter().find(|e| e.equation == "gamma").unwrap();
        assert!((gamma_eq.max_abs - 1.0).abs() < 1e-6);
    }

    #[test]
    fn verify_closed_form_sech_state_includes_origin() {
        // the closed forms of the tanh-diffusivity scenario satisfy the system
        // on [0, 2] even though a(0) = 0 blocks the characteristic route
        let cs = coeffs(
            "tanh(t)",
            "4*tanh(t)",
            "0",
            "tanh(t)",
            "4*sinh(t)",
            "3*sinh(t)",
            0.05,
            2.0,
        );
        let sech = |t: f64| 1.0 / t.cosh();
        let state = RiccatiState::from_evaluators(
            move |t| {
                [
                    t.cosh().powi(2),
                    -1.0,
                    sech(t).powi(4),
                    -sech(t).powi(8) / 8.0,
                    2.0 * t.cosh(),
                    -sech(t).powi(3) / 3.0,
                    -t.cosh().powi(2),
                ]
            },
            cs.clone(),
            0.0,
            -0.1,
            2.1,
        );
        let grid = linspace(0.0, 2.0, 200);
        let cert = verify_riccati(&state, &cs, &grid, 1e-6).unwrap();
        assert!(cert.passed, "max residual {:.3e}", cert.max_abs());
    }

    #[test]
    fn blowup_truncates_interval() {
        // alpha(0) = 1/2 makes G = t - 1/2 vanish at t = 1/2 for the pure
        // heat coefficients (mu0 = 2t, mu1 = 1)
        let cs = coeffs("1", "0", "0", "0", "0", "0", 0.0, 2.0);
        let basis = build_characteristic(cs, 0.0, 0.0, 2.0, &basis_options(0.0, 2.0)).unwrap();
        let mut init = zero_init(1.0);
        init.alpha = 0.5;
        let state = propagate(Arc::new(basis), init).unwrap();
        assert!(state.t_hi < 0.51, "t_hi = {}", state.t_hi);
        assert!(state.components_at(1.0).is_err());
    }

    #[test]
    fn reduced_system_periodic_coefficients() {
        // c = cos t, a = e^{-2 sin t}, g = cos t:
        // beta = e^{sin t}, gamma = t, epsilon = 1 - e^{sin t}
        let cs = coeffs("exp(-2*sin(t))", "0", "cos(t)", "0", "0", "cos(t)", 0.0, 3.0);
        let red = solve_reduced(cs, 0.0, 0.0, 3.0, (1.0, 0.0, 0.0), &basis_options(0.0, 3.0)).unwrap();
        for i in 0..50 {
            let t = 3.0 * i as f64 / 49.0;
            let c = red.components_at(t).unwrap();
            let b = t.sin().exp();
            assert!((c.beta - b).abs() <= 1e-8 * (1.0 + b), "beta at {t}");
            assert!((c.gamma - t).abs() <= 1e-8, "gamma at {t}");
            assert!((c.epsilon - (1.0 - b)).abs() <= 1e-8, "epsilon at {t}");
        }
        let grid = linspace(0.1, 2.9, 100);
        let cert = verify_reduced(&red, &grid, 1e-7).unwrap();
        assert!(cert.passed, "max {:.3e}", cert.max_abs());
    }

    #[test]
    fn reduced_system_exponential_growth() {
        // a = e^t / cos^2(sin t), c = -tan(sin t) cos t, g = sin t / cos(sin t)
        // with unit initial data: beta = cos(sin t), gamma = e^t, epsilon = cos t
        let cs = coeffs(
            "exp(t)/cos(sin(t))^2",
            "0",
            "-tan(sin(t))*cos(t)",
            "0",
            "0",
            "sin(t)/cos(sin(t))",
            0.0,
            3.0,
        );
        let red = solve_reduced(cs, 0.0, 0.0, 3.0, (1.0, 1.0, 1.0), &basis_options(0.0, 3.0)).unwrap();
        for i in 0..50 {
            let t = 3.0 * i as f64 / 49.0;
            let c = red.components_at(t).unwrap();
            let rel = |x: f64, w: f64| (x - w).abs() / (1.0 + w.abs());
            assert!(rel(c.beta, t.sin().cos()) <= 1e-8, "beta at {t}");
            assert!(rel(c.gamma, t.exp()) <= 1e-8, "gamma at {t}");
            assert!(rel(c.epsilon, t.cos()) <= 1e-8, "epsilon at {t}");
        }
    }

    #[test]
    fn turning_point_fails_loudly() {
        // oscillatory characteristic (sigma < 0 via b) with nonzero g forces
        // a 1/mu0' quadrature through a turning point
        let cs = coeffs("1", "-1", "0", "0", "0", "1", 0.0, 4.0);
        let err = build_characteristic(cs, 0.0, 0.0, 4.0, &basis_options(0.0, 4.0));
        assert!(matches!(err, Err(Error::TurningPoint { .. })));
    }
}
