//! Closed-form solution families of the five constant-coefficient systems.
//!
//! Each constructor returns a [`ClassicalSolution`]: field evaluators
//! u(xi, tau), v(xi, tau) (and w for the three-component family) together
//! with the constant-coefficient system they solve. The solutions here are
//! the raw material the similarity transformations act on, so every family
//! is certified by [`residual_constant_system`] rather than trusted from its
//! printed form.

use crate::error::{Error, Result};
use crate::verify::{self, FieldSet, Grid, PdeSystem, ResidualOptions, ResidualReport, SpatialJet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    LinearRd,
    Dlv2,
    Dlv3,
    GrayScott,
    Burgers,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Family::LinearRd => "linear-rd",
            Family::Dlv2 => "dlv2",
            Family::Dlv3 => "dlv3",
            Family::GrayScott => "gray-scott",
            Family::Burgers => "burgers",
        };
        f.write_str(s)
    }
}

/// The constant-coefficient system a classical solution lives in.
#[derive(Debug, Clone)]
pub enum ClassicalSystem {
    /// u_t = a1 u_xx - b1 u + v ; v_t = a1 v_xx - b2 v
    LinearRd { a1: f64, b1: f64, b2: f64 },
    /// u_t = u_xx + u(a1 - b1 u - c1 v) ; v_t = v_xx + v(a2 - b2 u - c2 v)
    Dlv2 {
        a1: f64,
        a2: f64,
        b1: f64,
        b2: f64,
        c1: f64,
        c2: f64,
    },
    /// three-component competition system with unit diffusivity
    Dlv3 {
        a: [f64; 3],
        b: [f64; 3],
        c: [f64; 3],
        e: [f64; 3],
    },
    /// u_t = u_xx - u v^2 + b1(1 - u) ; v_t = v_xx + u v^2 - b1 v + b2
    GrayScott { b1: f64, b2: f64 },
    /// u_t = u_xx - b1 u u_x - c1 (uv)_x ; v_t = v_xx - b2 v v_x - c2 (uv)_x
    Burgers {
        b1: f64,
        b2: f64,
        c1: f64,
        c2: f64,
    },
}

impl PdeSystem for ClassicalSystem {
    fn arity(&self) -> usize {
        match self {
            ClassicalSystem::Dlv3 { .. } => 3,
            _ => 2,
        }
    }

    fn rhs(&self, eq: usize, _x: f64, _t: f64, j: &[SpatialJet]) -> Result<f64> {
        Ok(match *self {
            ClassicalSystem::LinearRd { a1, b1, b2 } => match eq {
                0 => a1 * j[0].dxx - b1 * j[0].val + j[1].val,
                _ => a1 * j[1].dxx - b2 * j[1].val,
            },
            ClassicalSystem::Dlv2 {
                a1,
                a2,
                b1,
                b2,
                c1,
                c2,
            } => {
                let (u, v) = (j[0].val, j[1].val);
                match eq {
                    0 => j[0].dxx + u * (a1 - b1 * u - c1 * v),
                    _ => j[1].dxx + v * (a2 - b2 * u - c2 * v),
                }
            }
            ClassicalSystem::Dlv3 { a, b, c, e } => {
                let (u, v, w) = (j[0].val, j[1].val, j[2].val);
                j[eq].dxx + j[eq].val * (a[eq] - b[eq] * u - c[eq] * v - e[eq] * w)
            }
            ClassicalSystem::GrayScott { b1, b2 } => {
                let (u, v) = (j[0].val, j[1].val);
                match eq {
                    0 => j[0].dxx - u * v * v + b1 * (1.0 - u),
                    _ => j[1].dxx + u * v * v - b1 * v + b2,
                }
            }
            ClassicalSystem::Burgers { b1, b2, c1, c2 } => {
                let uv_x = j[0].dx * j[1].val + j[0].val * j[1].dx;
                match eq {
                    0 => j[0].dxx - b1 * j[0].val * j[0].dx - c1 * uv_x,
                    _ => j[1].dxx - b2 * j[1].val * j[1].dx - c2 * uv_x,
                }
            }
        })
    }
}

/// Which of the two published traveling-wave branches a DLV2 solution uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dlv2Branch {
    /// nu0 = 0; requires a1 = a2 and c1 != c2, b1 != b2.
    NuZero,
    /// nu0 = a2/c2; requires c2 != 0 and A > 0.
    NuRatio,
}

/// Long-time behavior classification for the DLV2 waves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Dlv2Regime {
    /// (u, v) -> (a1/b1, 0): one population excludes the other.
    Exclusion,
    /// convergence to the positive coexistence state.
    Coexistence,
    Unknown,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Dlv2Params {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    pub branch: Dlv2Branch,
}

/// Derived wave data for the DLV2 family.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Dlv2Derived {
    pub big_a: f64,
    pub big_b: f64,
    pub nu0: f64,
    pub nu1: f64,
    /// tanh wavenumber sqrt(A/24)
    pub k: f64,
    pub a_hat: f64,
    pub b_hat: f64,
    pub c_hat: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BurgersParams {
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    /// Constant level B of the u component at the wave center.
    pub level: f64,
    /// tanh wavenumber; amplitude scales with it. Defaults to 1.
    pub wave_number: Option<f64>,
    /// Phase-center offset; defaults to 1/2.
    pub phase_shift: Option<f64>,
}

/// Derived wave data for the coupled Burgers family.
///
/// `a_printed` is the literature value 4 c1 c2 - 1/(4 c1) - 2 attached to
/// this family; it does not control the wave, which is fully determined by
/// the PDE (see `speed`, `offset_v`). `a_eff = -level/(2 sigma)` is the value
/// for which (u - B)/v = -2 a_eff / B holds whenever `offset_v` vanishes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BurgersDerived {
    pub sigma: f64,
    pub amp_u: f64,
    pub amp_v: f64,
    pub offset_v: f64,
    pub speed: f64,
    pub k: f64,
    pub phase_shift: f64,
    pub a_printed: f64,
    pub a_eff: f64,
}

#[derive(Debug, Clone)]
enum Evaluator {
    LinearRd {
        a1: f64,
        b1: f64,
        b2: f64,
    },
    Dlv2 {
        d: Dlv2Derived,
    },
    Dlv3 {
        p: f64,
        q: f64,
        r: f64,
        theta: f64,
    },
    GrayScott {
        mid_u: f64,
        mid_v: f64,
        amp: f64,
        k: f64,
        theta: f64,
    },
    Burgers {
        level: f64,
        d: BurgersDerived,
    },
}

/// A closed-form solution of one constant-coefficient family.
#[derive(Debug, Clone)]
pub struct ClassicalSolution {
    pub family: Family,
    pub system: ClassicalSystem,
    evaluator: Evaluator,
}

impl FieldSet for ClassicalSolution {
    fn arity(&self) -> usize {
        self.system.arity()
    }
    fn eval(&self, component: usize, xi: f64, tau: f64) -> Result<f64> {
        Ok(self.component(component, xi, tau))
    }
}

impl ClassicalSolution {
    pub fn arity(&self) -> usize {
        self.system.arity()
    }

    /// Evaluate one solution component; finite for all finite (xi, tau).
    pub fn component(&self, component: usize, xi: f64, tau: f64) -> f64 {
        match &self.evaluator {
            Evaluator::LinearRd { a1, b1, b2 } => {
                let decay2 = (-(b2 + a1) * tau).exp();
                match component {
                    0 => ((-(b1 + a1) * tau).exp() + decay2) * xi.cos(),
                    _ => (b1 - b2) * decay2 * xi.cos(),
                }
            }
            Evaluator::Dlv2 { d } => {
                let s = d.k * xi - 5.0 * d.big_a / 12.0 * tau;
                let hump = d.big_a / (4.0 * d.big_b) * (1.0 - s.tanh()).powi(2);
                match component {
                    0 => hump,
                    _ => d.nu0 + d.nu1 * hump,
                }
            }
            Evaluator::Dlv3 { p, q, r, theta } => {
                let s = xi - theta * tau;
                let th = s.tanh();
                match component {
                    0 => p * (1.0 - th).powi(2),
                    1 => q * (1.0 + th).powi(2),
                    _ => r * (1.0 - th),
                }
            }
            Evaluator::GrayScott {
                mid_u,
                mid_v,
                amp,
                k,
                theta,
            } => {
                let th = (k * (xi - theta * tau)).tanh();
                match component {
                    0 => mid_u - amp * th,
                    _ => mid_v + amp * th,
                }
            }
            Evaluator::Burgers { level, d } => {
                let th = (d.k * (xi - d.phase_shift - d.speed * tau)).tanh();
                match component {
                    0 => level + d.amp_u * th,
                    _ => d.offset_v + d.amp_v * th,
                }
            }
        }
    }

    pub fn dlv2_derived(&self) -> Option<&Dlv2Derived> {
        match &self.evaluator {
            Evaluator::Dlv2 { d } => Some(d),
            _ => None,
        }
    }

    pub fn burgers_derived(&self) -> Option<&BurgersDerived> {
        match &self.evaluator {
            Evaluator::Burgers { d, .. } => Some(d),
            _ => None,
        }
    }

    /// Long-time regime of a DLV2 wave, judged from the hatted ratios.
    pub fn dlv2_regime(&self) -> Option<Dlv2Regime> {
        let d = self.dlv2_derived()?;
        let (ah, bh, ch) = (d.a_hat, d.b_hat, d.c_hat);
        if d.nu0 != 0.0 && ah > bh.max(ch) {
            Some(Dlv2Regime::Exclusion)
        } else if d.nu0 == 0.0 && ((bh > 1.0 && 1.0 > ch) || (ch > 1.0 && 1.0 > bh)) && ah == 1.0 {
            Some(Dlv2Regime::Coexistence)
        } else {
            Some(Dlv2Regime::Unknown)
        }
    }

    /// The stationary state the DLV2 wave converges to, when classified.
    pub fn dlv2_asymptotic_state(&self) -> Option<(f64, f64)> {
        let ClassicalSystem::Dlv2 {
            a1, b2, c2, b1, ..
        } = self.system
        else {
            return None;
        };
        let d = self.dlv2_derived()?;
        match self.dlv2_regime()? {
            Dlv2Regime::Exclusion => Some((a1 / b1, 0.0)),
            Dlv2Regime::Coexistence => {
                let (bh, ch) = (d.b_hat, d.c_hat);
                Some((
                    a1 * (ch - 1.0) / (b2 * (ch - bh)),
                    a1 * (1.0 - bh) / (c2 * (ch - bh)),
                ))
            }
            Dlv2Regime::Unknown => None,
        }
    }
}

/// Solutions of the linear reaction-diffusion system.
pub fn linear_rd(a1: f64, b1: f64, b2: f64) -> ClassicalSolution {
    ClassicalSolution {
        family: Family::LinearRd,
        system: ClassicalSystem::LinearRd { a1, b1, b2 },
        evaluator: Evaluator::LinearRd { a1, b1, b2 },
    }
}

/// Traveling-wave solutions of the two-component diffusive Lotka-Volterra
/// system.
pub fn dlv2(p: Dlv2Params) -> Result<ClassicalSolution> {
    let Dlv2Params {
        a1,
        a2,
        b1,
        b2,
        c1,
        c2,
        branch,
    } = p;
    let nu1 = if c1 != c2 && b1 != b2 {
        (b1 - b2) / (c2 - c1)
    } else if c1 == c2 && b1 == b2 {
        if a1 == 0.0 || c1 == 0.0 {
            return Err(Error::InvalidParams("nu1 needs a1 != 0 and c1 != 0".into()));
        }
        -a2 * b1 / (a1 * c1)
    } else {
        return Err(Error::InvalidParams(
            "nu1 is defined only for c1 != c2, b1 != b2 or c1 = c2, b1 = b2".into(),
        ));
    };
    let (nu0, big_a, big_b) = match branch {
        Dlv2Branch::NuZero => {
            if a1 != a2 {
                return Err(Error::InvalidParams("branch nu0 = 0 requires a1 = a2".into()));
            }
            if c1 == c2 || b1 == b2 {
                return Err(Error::InvalidParams(
                    "branch nu0 = 0 requires c1 != c2 and b1 != b2".into(),
                ));
            }
            (0.0, a1, (c1 * b2 - b1 * c2) / (c1 - c2))
        }
        Dlv2Branch::NuRatio => {
            if c2 == 0.0 {
                return Err(Error::InvalidParams("branch nu0 = a2/c2 requires c2 != 0".into()));
            }
            (a2 / c2, a1 - a2 * c1 / c2, b1 + c1 * nu1)
        }
    };
    if big_a <= 0.0 {
        return Err(Error::InvalidParams(format!("A = {big_a} must be positive")));
    }
    if big_b == 0.0 {
        return Err(Error::InvalidParams("B must be nonzero".into()));
    }
    let derived = Dlv2Derived {
        big_a,
        big_b,
        nu0,
        nu1,
        k: (big_a / 24.0).sqrt(),
        a_hat: a1 / a2,
        b_hat: b1 / b2,
        c_hat: c1 / c2,
    };
    Ok(ClassicalSolution {
        family: Family::Dlv2,
        system: ClassicalSystem::Dlv2 {
            a1,
            a2,
            b1,
            b2,
            c1,
            c2,
        },
        evaluator: Evaluator::Dlv2 { d: derived },
    })
}

/// Traveling-wave solutions of the three-component Lotka-Volterra system.
///
/// The remaining system constants are fixed by (a1, theta); the positivity
/// window theta + 2 < a1 < 4(theta + 2) is enforced.
pub fn dlv3(a1: f64, theta: f64) -> Result<ClassicalSolution> {
    if !(theta + 2.0 < a1 && a1 < 4.0 * (theta + 2.0)) {
        return Err(Error::InvalidParams(format!(
            "need theta + 2 < a1 < 4(theta + 2), got a1 = {a1}, theta = {theta}"
        )));
    }
    let den1 = 8.0 - a1 + 4.0 * theta;
    let den2 = 2.0 + theta - a1;
    if den1 == 0.0 || den2 == 0.0 {
        return Err(Error::InvalidParams(
            "derived constants have a vanishing denominator".into(),
        ));
    }
    if a1 == 0.0 {
        return Err(Error::InvalidParams("a1 must be nonzero".into()));
    }
    let b2 = -(a1 - 24.0) / den1;
    let b3 = -(a1 - 4.0 - 2.0 * theta) / den1;
    let c1 = -(4.0 * theta - a1 - 16.0) / a1;
    let c3 = -(2.0 * theta - a1 - 4.0) / a1;
    let e1 = -(a1 - 4.0 - 2.0 * theta) / den2;
    let e2 = -(a1 - 4.0 + 2.0 * theta) / den2;
    Ok(ClassicalSolution {
        family: Family::Dlv3,
        system: ClassicalSystem::Dlv3 {
            a: [a1, a1, a1],
            b: [1.0, b2, b3],
            c: [c1, 1.0, c3],
            e: [e1, e2, 1.0],
        },
        evaluator: Evaluator::Dlv3 {
            p: 2.0 + theta - a1 / 4.0,
            q: a1 / 4.0,
            r: a1 - theta - 2.0,
            theta,
        },
    })
}

/// The tanh front of the Gray-Scott model. The closed form solves the system
/// with b2 = 0 only, so any other feed value is rejected.
pub fn gray_scott(b1: f64, b2: f64) -> Result<ClassicalSolution> {
    if b2 != 0.0 {
        return Err(Error::InvalidParams(
            "the closed form requires b2 = 0".into(),
        ));
    }
    if !(b1 > 0.0 && b1 <= 0.25) {
        return Err(Error::InvalidParams(format!("b1 = {b1} out of (0, 1/4]")));
    }
    let root = (1.0 - 4.0 * b1).sqrt();
    let amp = (2.0 + 2.0 * root - 4.0 * b1).sqrt() / 4.0;
    let k = (1.0 + root - 2.0 * b1).sqrt() / 4.0;
    let theta = std::f64::consts::SQRT_2 * (1.0 - 3.0 * root) / 4.0;
    Ok(ClassicalSolution {
        family: Family::GrayScott,
        system: ClassicalSystem::GrayScott { b1, b2 },
        evaluator: Evaluator::GrayScott {
            mid_u: (3.0 - root) / 4.0,
            mid_v: (1.0 + root) / 4.0,
            amp,
            k,
            theta,
        },
    })
}

/// A tanh traveling wave of the coupled Burgers system.
///
/// Shape and speed are derived from the PDE: with u = B + P tanh(s),
/// v = E + Q tanh(s) and s = k(xi - x0 - lambda tau), matching coefficients
/// of the two equations forces Q/P = (b1 - 2c2)/(b2 - 2c1), pins E and
/// lambda linearly in B, and leaves the wavenumber k as a free amplitude
/// scale (P = -2k/(b1 + 2 c1 Q/P)). The literature form printed for this
/// family fails its own system's residual check, so the derived wave is used
/// and the printed A value is kept as a diagnostic only (see
/// [`BurgersDerived`]).
pub fn burgers(p: BurgersParams) -> Result<ClassicalSolution> {
    let BurgersParams {
        b1,
        b2,
        c1,
        c2,
        level,
        wave_number,
        phase_shift,
    } = p;
    if c1 == 0.0 || c2 == 0.0 {
        return Err(Error::InvalidParams("c1 and c2 must be nonzero".into()));
    }
    if b2 == 2.0 * c1 {
        return Err(Error::InvalidParams(
            "b2 = 2 c1 makes the component ratio singular".into(),
        ));
    }
    let sigma = (b1 - 2.0 * c2) / (b2 - 2.0 * c1);
    if sigma == 0.0 {
        return Err(Error::InvalidParams("b1 = 2 c2 makes v identically flat".into()));
    }
    // E solves B(b1 + c1 sigma - c2) = E(b2 + c2/sigma - c1); when both
    // sides degenerate E is free and 0 is the canonical choice.
    let num_e = b1 + c1 * sigma - c2;
    let denom_e = b2 + c2 / sigma - c1;
    let offset_v = if num_e == 0.0 {
        0.0
    } else if denom_e == 0.0 {
        return Err(Error::InvalidParams(
            "no tanh wave of this shape exists for these coefficients".into(),
        ));
    } else {
        level * num_e / denom_e
    };
    let speed = level * (b1 + c1 * sigma) + c1 * offset_v;
    let k = wave_number.unwrap_or(1.0);
    if k == 0.0 {
        return Err(Error::InvalidParams("wave number must be nonzero".into()));
    }
    let amp_scale = b1 + 2.0 * c1 * sigma;
    if amp_scale == 0.0 {
        return Err(Error::InvalidParams(
            "b1 + 2 c1 sigma = 0 leaves no tanh amplitude".into(),
        ));
    }
    let amp_u = -2.0 * k / amp_scale;
    let derived = BurgersDerived {
        sigma,
        amp_u,
        amp_v: sigma * amp_u,
        offset_v,
        speed,
        k,
        phase_shift: phase_shift.unwrap_or(0.5),
        a_printed: 4.0 * c1 * c2 - 1.0 / (4.0 * c1) - 2.0,
        a_eff: -level / (2.0 * sigma),
    };
    Ok(ClassicalSolution {
        family: Family::Burgers,
        system: ClassicalSystem::Burgers { b1, b2, c1, c2 },
        evaluator: Evaluator::Burgers { level, d: derived },
    })
}

/// PDE residual of a classical solution in its own constant-coefficient
/// system.
pub fn residual_constant_system(
    sol: &ClassicalSolution,
    grid: &Grid,
    opts: &ResidualOptions,
) -> Result<ResidualReport> {
    verify::residual(&sol.system, sol, grid, opts)
}
