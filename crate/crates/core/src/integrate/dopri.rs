//! Dormand-Prince 5(4) embedded pair with FSAL and 4th-order dense output.

use alloc::vec;
use alloc::vec::Vec;

use crate::system::{DynamicalSystem, Regime};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

/// Step-size control settings used by [`Stepper`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative tolerance.
    pub rel_tol: f64,
    /// Absolute tolerance.
    pub abs_tol: f64,
    /// Largest step allowed.
    pub max_step: f64,
}

/// Why a step could not be taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepFailure {
    /// The controller pushed `h` below the floating-point resolution of `t`.
    StepUnderflow,
    /// The right-hand side produced non-finite values at every trial size.
    NonFinite,
}

/// An accepted step with its dense-output polynomial.
#[derive(Debug, Clone)]
pub struct AcceptedStep {
    /// Start time.
    pub t0: f64,
    /// Step length.
    pub h: f64,
    /// State at `t0 + h`.
    pub x1: Vec<f64>,
    /// Weighted RMS error estimate of the accepted step (<= 1).
    pub error: f64,
    /// Proposed next step length.
    pub h_next: f64,
    cont: [Vec<f64>; 5],
}

impl AcceptedStep {
    /// End time.
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Dense-output state at `t0 + theta * h`, `theta` in `[0, 1]`.
    pub fn dense_into(&self, theta: f64, out: &mut [f64]) {
        let th1 = 1.0 - theta;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.cont[0][i]
                + theta
                    * (self.cont[1][i] + th1 * (self.cont[2][i] + theta * (self.cont[3][i] + th1 * self.cont[4][i])));
        }
        if theta == 1.0 {
            out.copy_from_slice(&self.x1);
        }
    }

    /// Dense-output state at absolute time `t`.
    pub fn dense_at(&self, t: f64, out: &mut [f64]) {
        let theta = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        self.dense_into(theta, out)
    }
}

/// Reusable Dormand-Prince stepper.
///
/// Owns stage buffers and the first-same-as-last derivative, so one stepper
/// follows one trajectory at a time. Call [`Stepper::reset`] after any
/// discontinuity (regime switch, truncated step).
pub struct Stepper {
    tol: Tolerances,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    fsal_valid: bool,
    rhs_evals: u64,
}

impl Stepper {
    /// New stepper for dimension `dim`.
    pub fn new(dim: usize, tol: Tolerances) -> Self {
        Self { tol, k: core::array::from_fn(|_| vec![0.0; dim]), tmp: vec![0.0; dim], fsal_valid: false, rhs_evals: 0 }
    }

    /// Invalidates the cached derivative at the current point.
    pub fn reset(&mut self) {
        self.fsal_valid = false;
    }

    /// Number of right-hand-side evaluations so far.
    pub fn rhs_evals(&self) -> u64 {
        self.rhs_evals
    }

    /// Attempts one step from `(t, x)` with trial size `h`, shrinking `h` on
    /// rejection until the local error estimate is within tolerance.
    pub fn step<S: DynamicalSystem + ?Sized>(
        &mut self,
        sys: &S,
        regime: Regime,
        t: f64,
        x: &[f64],
        h: f64,
    ) -> Result<AcceptedStep, StepFailure> {
        let n = x.len();
        if !self.fsal_valid {
            sys.rhs(t, x, regime, &mut self.k[0]);
            self.rhs_evals += 1;
            self.fsal_valid = true;
        }
        let mut h = h.min(self.tol.max_step);
        let mut saw_non_finite = false;
        let mut rejected = false;
        let mut x1 = vec![0.0; n];
        loop {
            let floor = 16.0 * f64::EPSILON * libm::fabs(t).max(1.0);
            if !(h >= floor) {
                return Err(if saw_non_finite { StepFailure::NonFinite } else { StepFailure::StepUnderflow });
            }
            self.stages(sys, regime, t, x, h, &mut x1);
            let err = self.error_norm(x, &x1, h);
            if !err.is_finite() {
                saw_non_finite = true;
                rejected = true;
                h *= MIN_FACTOR;
                continue;
            }
            if err <= 1.0 {
                let mut factor = if err == 0.0 { MAX_FACTOR } else { SAFETY * libm::pow(err, -0.2) };
                factor = factor.clamp(MIN_FACTOR, MAX_FACTOR);
                if rejected {
                    factor = factor.min(1.0);
                }
                let h_next = (h * factor).min(self.tol.max_step);
                let cont = self.dense_coefficients(x, &x1, h);
                // FSAL: k7 is f(t + h, x1).
                self.k.swap(0, 6);
                return Ok(AcceptedStep { t0: t, h, x1, error: err, h_next, cont });
            }
            rejected = true;
            let factor = (SAFETY * libm::pow(err, -0.2)).clamp(MIN_FACTOR, 1.0);
            h *= factor;
        }
    }

    fn stages<S: DynamicalSystem + ?Sized>(
        &mut self,
        sys: &S,
        regime: Regime,
        t: f64,
        x: &[f64],
        h: f64,
        x1: &mut [f64],
    ) {
        let n = x.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;
        for i in 0..n {
            tmp[i] = x[i] + h * A21 * k1[i];
        }
        sys.rhs(t + C2 * h, tmp, regime, k2);
        for i in 0..n {
            tmp[i] = x[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.rhs(t + C3 * h, tmp, regime, k3);
        for i in 0..n {
            tmp[i] = x[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.rhs(t + C4 * h, tmp, regime, k4);
        for i in 0..n {
            tmp[i] = x[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.rhs(t + C5 * h, tmp, regime, k5);
        for i in 0..n {
            tmp[i] = x[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        sys.rhs(t + h, tmp, regime, k6);
        for i in 0..n {
            x1[i] = x[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        sys.rhs(t + h, x1, regime, k7);
        self.rhs_evals += 6;
    }

    fn error_norm(&self, x0: &[f64], x1: &[f64], h: f64) -> f64 {
        let [k1, _, k3, k4, k5, k6, k7] = &self.k;
        let n = x0.len();
        let mut acc = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.tol.abs_tol + self.tol.rel_tol * libm::fabs(x0[i]).max(libm::fabs(x1[i]));
            let r = e / sc;
            acc += r * r;
        }
        if !x1.iter().all(|v| v.is_finite()) {
            return f64::NAN;
        }
        libm::sqrt(acc / n as f64)
    }

    fn dense_coefficients(&self, x0: &[f64], x1: &[f64], h: f64) -> [Vec<f64>; 5] {
        let [k1, _, k3, k4, k5, k6, k7] = &self.k;
        let n = x0.len();
        let mut c: [Vec<f64>; 5] = core::array::from_fn(|_| vec![0.0; n]);
        for i in 0..n {
            let dy = x1[i] - x0[i];
            let bspl = h * k1[i] - dy;
            c[0][i] = x0[i];
            c[1][i] = dy;
            c[2][i] = bspl;
            c[3][i] = dy - h * k7[i] - bspl;
            c[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        c
    }
}
