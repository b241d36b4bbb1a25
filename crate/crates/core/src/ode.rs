//! Adaptive Dormand-Prince 5(4) integration with dense output.
//!
//! One integrator serves two roles: building the dense-output evaluators of
//! the Riccati machinery (where the accepted steps plus cubic Hermite
//! interpolation between them form the returned functions) and time-stepping
//! the method-of-lines systems (where only the final state is kept). The
//! right-hand side is fallible so coefficient-expression domain errors
//! propagate out of the solve instead of turning into NaN.

use crate::error::{Error, Result};

// Dormand-Prince 5(4) tableau (FSAL).
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th order weights equal the last row of A (FSAL); 4th order embedded:
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Cap on |h|. Keeps the cubic Hermite dense output accurate; callers that
    /// only need the endpoint can leave it at infinity.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub min_step: f64,
    pub max_step: f64,
}

/// Dense solution on a single directed span, nodes stored in integration order.
#[derive(Debug, Clone)]
struct Span {
    ts: Vec<f64>,
    ys: Vec<Vec<f64>>,
    fs: Vec<Vec<f64>>,
}

impl Span {
    fn ascending(&self) -> bool {
        self.ts.len() < 2 || self.ts[1] >= self.ts[0]
    }

    fn locate(&self, t: f64) -> (usize, usize) {
        let n = self.ts.len();
        debug_assert!(n >= 2);
        if self.ascending() {
            let mut idx = self.ts.partition_point(|&x| x <= t);
            idx = idx.clamp(1, n - 1);
            (idx - 1, idx)
        } else {
            let mut idx = self.ts.partition_point(|&x| x >= t);
            idx = idx.clamp(1, n - 1);
            (idx - 1, idx)
        }
    }

    fn eval_into(&self, t: f64, out: &mut [f64]) {
        let (i0, i1) = self.locate(t);
        let (t0, t1) = (self.ts[i0], self.ts[i1]);
        let h = t1 - t0;
        if h == 0.0 {
            out.copy_from_slice(&self.ys[i0]);
            return;
        }
        let s = (t - t0) / h;
        // cubic Hermite basis
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let (y0, y1) = (&self.ys[i0], &self.ys[i1]);
        let (f0, f1) = (&self.fs[i0], &self.fs[i1]);
        for k in 0..out.len() {
            out[k] = h00 * y0[k] + h01 * y1[k] + h * (h10 * f0[k] + h11 * f1[k]);
        }
    }
}

/// Piecewise cubic Hermite dense output over [t_min, t_max].
///
/// Built from one forward and optionally one backward integration from the
/// same anchor, so the anchor state is reproduced exactly.
#[derive(Debug, Clone)]
pub struct DenseOde {
    dim: usize,
    anchor: f64,
    forward: Option<Span>,
    backward: Option<Span>,
    t_min: f64,
    t_max: f64,
    pub stats: StepStats,
}

impl DenseOde {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        if !(self.t_min..=self.t_max).contains(&t) {
            return Err(Error::OutOfInterval {
                t,
                lo: self.t_min,
                hi: self.t_max,
            });
        }
        let span = if t >= self.anchor {
            self.forward.as_ref().or(self.backward.as_ref())
        } else {
            self.backward.as_ref().or(self.forward.as_ref())
        };
        span.expect("dense ode has at least one span").eval_into(t, out);
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }
}

/// Integrate from `anchor` across `[t_lo, t_hi]` (the anchor must lie inside)
/// and keep every accepted step for dense evaluation.
pub fn integrate_dense<F>(
    mut rhs: F,
    anchor: f64,
    t_lo: f64,
    t_hi: f64,
    y0: &[f64],
    opts: &OdeOptions,
) -> Result<DenseOde>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if !(t_lo <= anchor && anchor <= t_hi) {
        return Err(Error::Ode(format!(
            "anchor {anchor} outside requested interval [{t_lo}, {t_hi}]"
        )));
    }
    let mut stats = StepStats::default();
    let forward = if t_hi > anchor {
        Some(run_span(&mut rhs, anchor, t_hi, y0, opts, true, &mut stats)?)
    } else {
        None
    };
    let backward = if t_lo < anchor {
        Some(run_span(&mut rhs, anchor, t_lo, y0, opts, true, &mut stats)?.0)
    } else {
        None
    };
    let mut forward = forward.map(|(s, _)| s);
    if forward.is_none() && backward.is_none() {
        // degenerate zero-length interval: pin the anchor state
        let mut f0 = vec![0.0; y0.len()];
        rhs(anchor, y0, &mut f0)?;
        forward = Some(Span {
            ts: vec![anchor, anchor],
            ys: vec![y0.to_vec(), y0.to_vec()],
            fs: vec![f0.clone(), f0],
        });
    }
    Ok(DenseOde {
        dim: y0.len(),
        anchor,
        forward,
        backward,
        t_min: t_lo.min(anchor),
        t_max: t_hi.max(anchor),
        stats,
    })
}

/// Integrate from t0 to t1 and return only the final state plus statistics.
pub fn integrate_to<F>(
    mut rhs: F,
    t0: f64,
    t1: f64,
    y0: &[f64],
    opts: &OdeOptions,
) -> Result<(Vec<f64>, StepStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if t0 == t1 {
        return Ok((y0.to_vec(), StepStats::default()));
    }
    let mut stats = StepStats::default();
    let (span, y_end) = run_span(&mut rhs, t0, t1, y0, opts, false, &mut stats)?;
    drop(span);
    Ok((y_end, stats))
}

#[allow(clippy::too_many_arguments)]
fn run_span<F>(
    rhs: &mut F,
    t0: f64,
    t1: f64,
    y0: &[f64],
    opts: &OdeOptions,
    store: bool,
    stats: &mut StepStats,
) -> Result<(Span, Vec<f64>)>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let dim = y0.len();
    let dir = (t1 - t0).signum();
    let span_len = (t1 - t0).abs();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut f_cur = vec![0.0; dim];
    rhs(t, &y, &mut f_cur)?;
    check_finite(t, &f_cur)?;

    let mut h = initial_step(span_len, opts);
    let mut span = Span {
        ts: Vec::new(),
        ys: Vec::new(),
        fs: Vec::new(),
    };
    if store {
        span.ts.push(t);
        span.ys.push(y.clone());
        span.fs.push(f_cur.clone());
    }

    let mut k = vec![vec![0.0; dim]; 7];
    let mut y_stage = vec![0.0; dim];
    let mut y5 = vec![0.0; dim];
    let mut steps = 0usize;
    stats.min_step = f64::INFINITY;

    while (t1 - t) * dir > 0.0 {
        if steps >= opts.max_steps {
            return Err(Error::Ode(format!(
                "step limit {} exceeded at t = {t}",
                opts.max_steps
            )));
        }
        steps += 1;
        let remaining = (t1 - t).abs();
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = h * dir;
        if !last && h < 1e-14 * (1.0 + t.abs()) {
            return Err(Error::Stiffness { t });
        }

        k[0].copy_from_slice(&f_cur);
        for stage in 1..7 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(stage) {
                    let a = A[stage][j];
                    if a != 0.0 {
                        acc += a * kj[i];
                    }
                }
                y_stage[i] = y[i] + hs * acc;
            }
            rhs(t + C[stage] * hs, &y_stage, &mut k[stage])?;
        }
        // stage 6 already evaluated the 5th-order solution point (FSAL)
        for i in 0..dim {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(6) {
                acc += A[6][j] * kj[i];
            }
            y5[i] = y[i] + hs * acc;
        }
        check_finite(t, &y5)?;

        // weighted rms error against the embedded 4th-order solution
        let mut err: f64 = 0.0;
        for i in 0..dim {
            let mut e4 = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e4 += B4[j] * kj[i];
            }
            let diff = y[i] + hs * e4 - y5[i];
            let scale = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            err = err.max((diff / scale).abs());
        }

        if err <= 1.0 {
            // land on the endpoint exactly so the loop terminates cleanly
            t = if last { t1 } else { t + hs };
            std::mem::swap(&mut y, &mut y5);
            f_cur.copy_from_slice(&k[6]); // FSAL
            stats.accepted += 1;
            stats.min_step = stats.min_step.min(h);
            stats.max_step = stats.max_step.max(h);
            if store {
                span.ts.push(t);
                span.ys.push(y.clone());
                span.fs.push(f_cur.clone());
            }
        } else {
            stats.rejected += 1;
        }

        let scale = (0.9 * err.max(1e-12).powf(-0.2)).clamp(0.2, 5.0);
        h = (h * scale).min(opts.max_step);
    }

    if stats.min_step == f64::INFINITY {
        stats.min_step = 0.0;
    }
    Ok((span, y))
}

fn initial_step(span_len: f64, opts: &OdeOptions) -> f64 {
    (span_len / 100.0)
        .min(opts.max_step)
        .max(1e-10 * span_len.max(1e-10))
}

fn check_finite(t: f64, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { t })
    }
}
