//! Assembly of generalized variable-coefficient systems and their exact
//! solutions.
//!
//! Each `build_*` function takes a Riccati state (or the reduced state for
//! the Burgers family) plus a classical solution and produces the matching
//! [`GeneralizedSystem`] together with a [`GeneralizedSolution`] bound to it.
//! The derived interaction coefficients are synthesized from the state, never
//! parsed from text, so the integrability conditions hold by construction and
//! the PDE residual check stays meaningful.

use crate::classical::{ClassicalSolution, ClassicalSystem, Family};
use crate::error::{Error, Result};
use crate::expr::{CoeffSet, Expr};
use crate::riccati::{
    self, ReducedRiccati, RiccatiComponents, RiccatiState,
};
use crate::verify::{FieldSet, PdeSystem, SpatialJet};
use std::sync::Arc;

/// Family tag for the generalized systems; extends the classical families
/// with the exponential-type solutions of the modified Riccati system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GeneralizedFamily {
    LinearRd,
    Exponential,
    Dlv2,
    Dlv3,
    GrayScott,
    Burgers,
}

impl std::fmt::Display for GeneralizedFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GeneralizedFamily::LinearRd => "linear-rd",
            GeneralizedFamily::Exponential => "exponential",
            GeneralizedFamily::Dlv2 => "dlv2",
            GeneralizedFamily::Dlv3 => "dlv3",
            GeneralizedFamily::GrayScott => "gray-scott",
            GeneralizedFamily::Burgers => "burgers",
        };
        f.write_str(s)
    }
}

#[derive(Clone)]
enum StateRef {
    Full(Arc<RiccatiState>),
    Reduced(Arc<ReducedRiccati>),
}

#[derive(Clone)]
enum FamilyData {
    LinearRd { b: [f64; 2] },
    Exponential { h: Expr },
    Dlv2 { a: [f64; 2], b: [f64; 2], c: [f64; 2] },
    Dlv3 { a: [f64; 3], b: [f64; 3], c: [f64; 3], e: [f64; 3] },
    GrayScott { b: [f64; 2] },
    Burgers { b: [f64; 2], c: [f64; 2] },
}

/// A variable-coefficient system whose interaction coefficients are derived
/// from a Riccati state so that the similarity transformation maps it onto a
/// constant-coefficient classical system.
#[derive(Clone)]
pub struct GeneralizedSystem {
    pub family: GeneralizedFamily,
    pub coeffs: Arc<CoeffSet>,
    state: StateRef,
    data: FamilyData,
    diffusion_scale: f64,
}

impl std::fmt::Debug for GeneralizedSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneralizedSystem")
            .field("family", &self.family)
            .field("diffusion_scale", &self.diffusion_scale)
            .finish()
    }
}

/// Base coefficient values plus transform components at one time; lets the
/// method-of-lines integrator evaluate a whole spatial line per stage without
/// re-resolving the time-dependent pieces.
pub struct SystemSnapshot<'a> {
    sys: &'a GeneralizedSystem,
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub f: f64,
    pub g: f64,
    full: Option<RiccatiComponents>,
    /// Evaluated interaction h(t) for the linear/exponential coupling.
    h_value: f64,
}

impl GeneralizedSystem {
    pub fn arity(&self) -> usize {
        match self.data {
            FamilyData::Dlv3 { .. } => 3,
            _ => 2,
        }
    }

    /// A copy of this system with the diffusion coefficient scaled; used as
    /// the sensitivity control (an exact solution of the unscaled system must
    /// fail the residual check of a corrupted one).
    pub fn with_diffusion_scaled(&self, factor: f64) -> GeneralizedSystem {
        let mut sys = self.clone();
        sys.diffusion_scale = factor;
        sys
    }

    pub fn snapshot(&self, t: f64) -> Result<SystemSnapshot<'_>> {
        let full = match &self.state {
            StateRef::Full(state) => Some(state.components_at(t)?),
            StateRef::Reduced(_) => None,
        };
        let h_value = match &self.data {
            FamilyData::Exponential { h } => h.eval(t)?,
            _ => 0.0,
        };
        Ok(SystemSnapshot {
            sys: self,
            t,
            a: self.coeffs.a.eval(t)? * self.diffusion_scale,
            b: self.coeffs.b.eval(t)?,
            c: self.coeffs.c.eval(t)?,
            d: self.coeffs.d.eval(t)?,
            f: self.coeffs.f.eval(t)?,
            g: self.coeffs.g.eval(t)?,
            full,
            h_value,
        })
    }

    fn full_state(&self) -> Result<&Arc<RiccatiState>> {
        match &self.state {
            StateRef::Full(s) => Ok(s),
            StateRef::Reduced(_) => Err(Error::FamilyMismatch {
                expected: "full Riccati state".into(),
                got: "reduced state".into(),
            }),
        }
    }

    /// The linear gain L_i(t) of equation `i` (derived, zero-based).
    pub fn l_coeff(&self, i: usize, t: f64) -> Result<f64> {
        let ab2 = self.a_beta_sq(t)?;
        Ok(match &self.data {
            FamilyData::LinearRd { b } => -b[i] * ab2,
            FamilyData::Exponential { .. } => 0.0,
            FamilyData::Dlv2 { a, .. } => a[i] * ab2,
            FamilyData::Dlv3 { a, .. } => a[i] * ab2,
            FamilyData::GrayScott { b } => -b[0] * ab2,
            FamilyData::Burgers { .. } => 0.0,
        })
    }

    /// a(t) beta(t)^2, the common factor of every derived coefficient.
    pub fn a_beta_sq(&self, t: f64) -> Result<f64> {
        let a = self.coeffs.a.eval(t)?;
        let beta = match &self.state {
            StateRef::Full(s) => s.components_at(t)?.beta,
            StateRef::Reduced(r) => r.components_at(t)?.beta,
        };
        Ok(a * beta * beta)
    }

    /// Interaction coefficient h(t) of the linear and exponential families.
    pub fn interaction_h(&self, t: f64) -> Result<f64> {
        match &self.data {
            FamilyData::LinearRd { .. } => self.a_beta_sq(t),
            FamilyData::Exponential { h } => h.eval(t),
            _ => Err(Error::FamilyMismatch {
                expected: "linear-rd or exponential".into(),
                got: self.family.to_string(),
            }),
        }
    }

    /// Gaussian exponent S(x, t) = alpha x^2 + delta x + kappa of the
    /// similarity map.
    pub fn exponent_s(&self, x: f64, t: f64) -> Result<f64> {
        let c = self.full_state()?.components_at(t)?;
        Ok(c.alpha * x * x + c.delta * x + c.kappa)
    }

    /// Lotka-Volterra interaction h_i(x, t) = -b_i a beta^2 mu^(1/2) e^(-S).
    pub fn lv_interaction(&self, kind: LvCoeff, i: usize, x: f64, t: f64) -> Result<f64> {
        let (bv, cv, ev) = match &self.data {
            FamilyData::Dlv2 { b, c, .. } => (b.to_vec(), c.to_vec(), vec![]),
            FamilyData::Dlv3 { b, c, e, .. } => (b.to_vec(), c.to_vec(), e.to_vec()),
            _ => {
                return Err(Error::FamilyMismatch {
                    expected: "dlv2 or dlv3".into(),
                    got: self.family.to_string(),
                })
            }
        };
        let coef = match kind {
            LvCoeff::H => bv[i],
            LvCoeff::R => cv[i],
            LvCoeff::S => {
                *ev.get(i).ok_or_else(|| Error::InvalidParams("s_i needs dlv3".into()))?
            }
        };
        let comp = self.full_state()?.components_at(t)?;
        let s = comp.alpha * x * x + comp.delta * x + comp.kappa;
        let mu_sqrt = sqrt_mu(comp.mu, t)?;
        Ok(-coef * self.a_beta_sq(t)? * mu_sqrt * (-s).exp())
    }

    /// Gray-Scott cubic coefficient h1(x, t) = a beta^2 mu e^(-2S).
    pub fn gs_h1(&self, x: f64, t: f64) -> Result<f64> {
        let FamilyData::GrayScott { .. } = self.data else {
            return Err(Error::FamilyMismatch {
                expected: "gray-scott".into(),
                got: self.family.to_string(),
            });
        };
        let comp = self.full_state()?.components_at(t)?;
        let s = comp.alpha * x * x + comp.delta * x + comp.kappa;
        Ok(self.a_beta_sq(t)? * comp.mu * (-2.0 * s).exp())
    }

    /// Gray-Scott feed M_i(x, t) = b_i a beta^2 mu^(-1/2) e^S.
    pub fn gs_feed(&self, i: usize, x: f64, t: f64) -> Result<f64> {
        let FamilyData::GrayScott { b } = self.data else {
            return Err(Error::FamilyMismatch {
                expected: "gray-scott".into(),
                got: self.family.to_string(),
            });
        };
        let comp = self.full_state()?.components_at(t)?;
        let s = comp.alpha * x * x + comp.delta * x + comp.kappa;
        Ok(b[i] * self.a_beta_sq(t)? / sqrt_mu(comp.mu, t)? * s.exp())
    }
}

#[derive(Debug, Clone, Copy)]
pub enum LvCoeff {
    H,
    R,
    S,
}

fn sqrt_mu(mu: f64, t: f64) -> Result<f64> {
    if mu <= 0.0 {
        Err(Error::Breakdown {
            t,
            message: format!("mu = {mu} is not positive"),
        })
    } else {
        Ok(mu.sqrt())
    }
}

impl<'a> SystemSnapshot<'a> {
    /// Right-hand side of equation `eq` given spatial jets of every field.
    pub fn rhs_at(&self, eq: usize, x: f64, jets: &[SpatialJet]) -> Result<f64> {
        let je = &jets[eq];
        // linear transport and potential terms shared by the RD families
        let base = |l_eq: f64, keep_l: bool| {
            let potential = self.b * x * x
                - self.d
                - if keep_l { l_eq } else { 0.0 }
                - x * self.f;
            self.a * je.dxx - potential * je.val - (self.g - self.c * x) * je.dx
        };
        Ok(match &self.sys.data {
            FamilyData::LinearRd { b } => {
                let comp = self.full.as_ref().expect("full state");
                let ab2 = self.raw_a() * comp.beta * comp.beta;
                let l = -b[eq] * ab2;
                let interaction = if eq == 0 { ab2 * jets[1].val } else { 0.0 };
                base(l, true) + interaction
            }
            FamilyData::Exponential { .. } => {
                let interaction = if eq == 0 {
                    self.h_value * jets[1].val
                } else {
                    0.0
                };
                base(0.0, false) + interaction
            }
            FamilyData::Dlv2 { a, b, c } => {
                let comp = self.full.as_ref().expect("full state");
                let ab2 = self.raw_a() * comp.beta * comp.beta;
                let s = comp.alpha * x * x + comp.delta * x + comp.kappa;
                let envelope = sqrt_mu(comp.mu, self.t)? * (-s).exp();
                let h_i = -b[eq] * ab2 * envelope;
                let r_i = -c[eq] * ab2 * envelope;
                base(a[eq] * ab2, true) + (h_i * jets[0].val + r_i * jets[1].val) * je.val
            }
            FamilyData::Dlv3 { a, b, c, e } => {
                let comp = self.full.as_ref().expect("full state");
                let ab2 = self.raw_a() * comp.beta * comp.beta;
                let s = comp.alpha * x * x + comp.delta * x + comp.kappa;
                let envelope = sqrt_mu(comp.mu, self.t)? * (-s).exp();
                let quad = -(b[eq] * jets[0].val + c[eq] * jets[1].val + e[eq] * jets[2].val)
                    * ab2
                    * envelope;
                base(a[eq] * ab2, true) + quad * je.val
            }
            FamilyData::GrayScott { b } => {
                let comp = self.full.as_ref().expect("full state");
                let ab2 = self.raw_a() * comp.beta * comp.beta;
                let s = comp.alpha * x * x + comp.delta * x + comp.kappa;
                // both equations carry L1
                let l1 = -b[0] * ab2;
                let h1 = ab2 * comp.mu * (-2.0 * s).exp();
                let m = b[eq] * ab2 / sqrt_mu(comp.mu, self.t)? * s.exp();
                let cubic = h1 * jets[0].val * jets[1].val * jets[1].val;
                let sign = if eq == 0 { -1.0 } else { 1.0 };
                base(l1, true) + sign * cubic + m
            }
            FamilyData::Burgers { b, c } => {
                let uv_x = jets[0].dx * jets[1].val + jets[0].val * jets[1].dx;
                self.a * je.dxx - b[eq] * self.a * je.val * je.dx - c[eq] * self.a * uv_x
                    + self.c * (je.val + x * je.dx)
                    - self.g * je.dx
            }
        })
    }

    /// Unscaled diffusion value for the derived coefficients, which are part
    /// of the system and not touched by the sensitivity control.
    fn raw_a(&self) -> f64 {
        self.a / self.sys.diffusion_scale
    }
}

impl PdeSystem for GeneralizedSystem {
    fn arity(&self) -> usize {
        self.arity()
    }

    fn rhs(&self, eq: usize, x: f64, t: f64, jets: &[SpatialJet]) -> Result<f64> {
        self.snapshot(t)?.rhs_at(eq, x, jets)
    }
}

/// The similarity map data at one point: multiplier, stretched coordinate and
/// rescaled time, so that psi(x, t) = prefactor * u(xi, tau).
pub fn similarity_map(state: &RiccatiState, x: f64, t: f64) -> Result<(f64, f64, f64)> {
    let c = state.components_at(t)?;
    let pref = (c.alpha * x * x + c.delta * x + c.kappa).exp() / sqrt_mu(c.mu, t)?;
    Ok((pref, c.beta * x + c.epsilon, c.gamma))
}

#[derive(Clone)]
enum SolutionSource {
    Mapped {
        state: Arc<RiccatiState>,
        classical: Arc<ClassicalSolution>,
    },
    Exponential {
        state: Arc<RiccatiState>,
        y: f64,
    },
    Scaled {
        reduced: Arc<ReducedRiccati>,
        classical: Arc<ClassicalSolution>,
    },
}

/// Exact solution fields bound to the generalized system they solve.
#[derive(Clone)]
pub struct GeneralizedSolution {
    pub system: GeneralizedSystem,
    source: SolutionSource,
}

impl std::fmt::Debug for GeneralizedSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneralizedSolution")
            .field("family", &self.system.family)
            .finish()
    }
}

impl FieldSet for GeneralizedSolution {
    fn arity(&self) -> usize {
        self.system.arity()
    }

    fn eval(&self, component: usize, x: f64, t: f64) -> Result<f64> {
        match &self.source {
            SolutionSource::Mapped { state, classical } => {
                let (pref, xi, tau) = similarity_map(state, x, t)?;
                Ok(pref * classical.component(component, xi, tau))
            }
            SolutionSource::Exponential { state, y } => {
                let c = state.components_at(t)?;
                let kappa1 = c.kappa1.ok_or_else(|| Error::InvalidParams(
                    "exponential solution requires the modified state".into(),
                ))?;
                let exponent = c.alpha * x * x
                    + c.beta * x * y
                    + c.gamma * y * y
                    + c.delta * x
                    + c.epsilon * y
                    + kappa1;
                let psi = exponent.exp() / sqrt_mu(c.mu, t)?;
                Ok(match component {
                    0 => psi,
                    _ => psi * c.kappa2.unwrap().exp(),
                })
            }
            SolutionSource::Scaled { reduced, classical } => {
                let c = reduced.components_at(t)?;
                Ok(c.beta * classical.component(component, c.beta * x + c.epsilon, c.gamma))
            }
        }
    }
}

impl GeneralizedSolution {
    pub fn state(&self) -> Option<&Arc<RiccatiState>> {
        match &self.source {
            SolutionSource::Mapped { state, .. } | SolutionSource::Exponential { state, .. } => {
                Some(state)
            }
            SolutionSource::Scaled { .. } => None,
        }
    }

    pub fn classical(&self) -> Option<&Arc<ClassicalSolution>> {
        match &self.source {
            SolutionSource::Mapped { classical, .. }
            | SolutionSource::Scaled { classical, .. } => Some(classical),
            SolutionSource::Exponential { .. } => None,
        }
    }
}

fn expect_family(classical: &ClassicalSolution, want: Family) -> Result<()> {
    if classical.family != want {
        return Err(Error::FamilyMismatch {
            expected: format!("{want}"),
            got: format!("{}", classical.family),
        });
    }
    Ok(())
}

/// Generalized linear reaction-diffusion system; the target constant system
/// has unit diffusion, so the classical solution must use a1 = 1.
pub fn build_linear_rd(
    state: Arc<RiccatiState>,
    classical: Arc<ClassicalSolution>,
) -> Result<(GeneralizedSystem, GeneralizedSolution)> {
    expect_family(&classical, Family::LinearRd)?;
    let ClassicalSystem::LinearRd { a1, b1, b2 } = classical.system else {
        unreachable!()
    };
    if a1 != 1.0 {
        return Err(Error::InvalidParams(
            "the transformed target system has unit diffusion; use a1 = 1".into(),
        ));
    }
    let system = GeneralizedSystem {
        family: GeneralizedFamily::LinearRd,
        coeffs: state.coeffs.clone(),
        state: StateRef::Full(state.clone()),
        data: FamilyData::LinearRd { b: [b1, b2] },
        diffusion_scale: 1.0,
    };
    let solution = GeneralizedSolution {
        system: system.clone(),
        source: SolutionSource::Mapped { state, classical },
    };
    Ok((system, solution))
}

/// Exponential-type solutions driven by the modified Riccati system; `y` is
/// the free real parameter of the solution family.
pub fn build_exponential(
    state: Arc<RiccatiState>,
    y: f64,
) -> Result<(GeneralizedSystem, GeneralizedSolution)> {
    if !state.has_modified() {
        return Err(Error::InvalidParams(
            "exponential solutions need kappa1/kappa2 from the modified system".into(),
        ));
    }
    if !y.is_finite() {
        return Err(Error::InvalidParams("y must be finite".into()));
    }
    let h = state.modified_h().unwrap().clone();
    let system = GeneralizedSystem {
        family: GeneralizedFamily::Exponential,
        coeffs: state.coeffs.clone(),
        state: StateRef::Full(state.clone()),
        data: FamilyData::Exponential { h },
        diffusion_scale: 1.0,
    };
    let solution = GeneralizedSolution {
        system: system.clone(),
        source: SolutionSource::Exponential { state, y },
    };
    Ok((system, solution))
}

/// Generalized two-component Lotka-Volterra system.
pub fn build_dlv2(
    state: Arc<RiccatiState>,
    classical: Arc<ClassicalSolution>,
) -> Result<(GeneralizedSystem, GeneralizedSolution)> {
    expect_family(&classical, Family::Dlv2)?;
    let ClassicalSystem::Dlv2 {
        a1,
        a2,
        b1,
        b2,
        c1,
        c2,
    } = classical.system
    else {
        unreachable!()
    };
    let system = GeneralizedSystem {
        family: GeneralizedFamily::Dlv2,
        coeffs: state.coeffs.clone(),
        state: StateRef::Full(state.clone()),
        data: FamilyData::Dlv2 {
            a: [a1, a2],
            b: [b1, b2],
            c: [c1, c2],
        },
        diffusion_scale: 1.0,
    };
    let solution = GeneralizedSolution {
        system: system.clone(),
        source: SolutionSource::Mapped { state, classical },
    };
    Ok((system, solution))
}

/// Generalized three-component Lotka-Volterra system.
pub fn build_dlv3(
    state: Arc<RiccatiState>,
    classical: Arc<ClassicalSolution>,
) -> Result<(GeneralizedSystem, GeneralizedSolution)> {
    expect_family(&classical, Family::Dlv3)?;
    let ClassicalSystem::Dlv3 { a, b, c, e } = classical.system else {
        unreachable!()
    };
    let system = GeneralizedSystem {
        family: GeneralizedFamily::Dlv3,
        coeffs: state.coeffs.clone(),
        state: StateRef::Full(state.clone()),
        data: FamilyData::Dlv3 { a, b, c, e },
        diffusion_scale: 1.0,
    };
    let solution = GeneralizedSolution {
        system: system.clone(),
        source: SolutionSource::Mapped { state, classical },
    };
    Ok((system, solution))
}

/// Generalized Gray-Scott model.
pub fn build_gray_scott(
    state: Arc<RiccatiState>,
    classical: Arc<ClassicalSolution>,
) -> Result<(GeneralizedSystem, GeneralizedSolution)> {
    expect_family(&classical, Family::GrayScott)?;
    let ClassicalSystem::GrayScott { b1, b2 } = classical.system else {
        unreachable!()
    };
    let system = GeneralizedSystem {
        family: GeneralizedFamily::GrayScott,
        coeffs: state.coeffs.clone(),
        state: StateRef::Full(state.clone()),
        data: FamilyData::GrayScott { b: [b1, b2] },
        diffusion_scale: 1.0,
    };
    let solution = GeneralizedSolution {
        system: system.clone(),
        source: SolutionSource::Mapped { state, classical },
    };
    Ok((system, solution))
}

/// Generalized coupled Burgers system from the reduced Riccati state.
///
/// The reduced state is re-validated numerically against its defining ODEs
/// before use.
pub fn build_burgers(
    reduced: Arc<ReducedRiccati>,
    classical: Arc<ClassicalSolution>,
) -> Result<(GeneralizedSystem, GeneralizedSolution)> {
    expect_family(&classical, Family::Burgers)?;
    let ClassicalSystem::Burgers { b1, b2, c1, c2 } = classical.system else {
        unreachable!()
    };
    let span = reduced.t_hi - reduced.t_lo;
    let pad = 0.021_f64.min(0.2 * span);
    let grid = riccati::linspace(reduced.t_lo + pad, reduced.t_hi - pad, 64);
    let cert = riccati::verify_reduced(&reduced, &grid, 1e-7)?;
    if !cert.passed {
        return Err(Error::InvalidParams(format!(
            "reduced Riccati state fails its ODEs (max residual {:.3e})",
            cert.max_abs()
        )));
    }
    let system = GeneralizedSystem {
        family: GeneralizedFamily::Burgers,
        coeffs: reduced.coeffs.clone(),
        state: StateRef::Reduced(reduced.clone()),
        data: FamilyData::Burgers {
            b: [b1, b2],
            c: [c1, c2],
        },
        diffusion_scale: 1.0,
    };
    let solution = GeneralizedSolution {
        system: system.clone(),
        source: SolutionSource::Scaled { reduced, classical },
    };
    Ok((system, solution))
}
