//! The bundled systems: a one-dimensional Solow-Swan growth model with a family
//! of production variants, a spring-magnet wagon, and a stage-structured
//! consumer-resource fish population.

pub mod fish;
pub mod solow;
pub mod wagon;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use fish::{harvest_yield, Fish, FishParams};
pub use solow::{Solow, SolowParams, SolowVariant};
pub use wagon::{Wagon, WagonParams};

use crate::error::{config, Error, Result};
use crate::linalg;
use crate::system::{DynamicalSystem, Regime, Switch};

/// Residual below which an equilibrium is accepted.
pub const EQUILIBRIUM_TOL: f64 = 1e-10;
/// Newton iteration budget.
pub const NEWTON_MAX_ITER: usize = 200;

/// An equilibrium together with how it was classified.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    /// The state.
    pub state: Vec<f64>,
    /// Set when only the trivial (extinct) equilibrium exists.
    pub extinct: bool,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(libm::fabs(*x)))
}

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
fn solve_linear(a: linalg::Matrix, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a.get(i, j)).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| libm::fabs(m[i][col]).total_cmp(&libm::fabs(m[j][col])))?;
        if m[piv][col] == 0.0 || !m[piv][col].is_finite() {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / m[i][i];
    }
    Some(x)
}

/// Damped Newton iteration on `f(x) = 0` from `guess`, with a
/// finite-difference Jacobian and backtracking on the max-norm residual.
pub fn newton_equilibrium<S: DynamicalSystem + ?Sized>(sys: &S, guess: &[f64]) -> Result<Vec<f64>> {
    let mut x = guess.to_vec();
    let mut f = sys.eval(0.0, &x);
    let mut res = max_abs(&f);
    for _ in 0..NEWTON_MAX_ITER {
        if res < EQUILIBRIUM_TOL {
            return Ok(x);
        }
        let jac = linalg::jacobian(sys, &x, 1e-7);
        let neg_f: Vec<f64> = f.iter().map(|v| -v).collect();
        let Some(dx) = solve_linear(jac, neg_f) else {
            return Err(Error::NoConvergence { iterations: 0, residual: res });
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + lambda * d).collect();
            if sys.in_domain(&trial) {
                let ft = sys.eval(0.0, &trial);
                let rt = max_abs(&ft);
                if rt.is_finite() && (rt < res || rt < EQUILIBRIUM_TOL) {
                    x = trial;
                    f = ft;
                    res = rt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res < EQUILIBRIUM_TOL {
        Ok(x)
    } else {
        Err(Error::NoConvergence { iterations: NEWTON_MAX_ITER, residual: res })
    }
}

/// Bisection for a sign change of `g` on `[lo, hi]`.
pub(crate) fn bisect<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64) -> f64 {
    let mut glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm < 0.0) == (glo < 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All sign changes of `g` on a uniform grid over `[lo, hi]`, each refined by bisection.
pub(crate) fn grid_roots<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let step = (hi - lo) / cells as f64;
    let mut a = lo;
    let mut ga = g(a);
    for i in 1..=cells {
        let b = if i == cells { hi } else { lo + i as f64 * step };
        let gb = g(b);
        if ga == 0.0 {
            roots.push(a);
        } else if gb != 0.0 && (ga < 0.0) != (gb < 0.0) {
            roots.push(bisect(&g, a, b));
        }
        a = b;
        ga = gb;
    }
    roots
}

/// Any of the bundled models, selected by name.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// One-dimensional growth model.
    Solow(Solow),
    /// Spring-magnet wagon.
    Wagon(Wagon),
    /// Stage-structured population.
    Fish(Fish),
}

/// Names accepted by [`Model::build`].
pub const MODEL_NAMES: [&str; 3] = ["solow", "wagon", "fish"];

/// Settable parameter names of a bundled model (empty for unknown models).
pub fn param_names(model: &str) -> Vec<&'static str> {
    match model {
        "solow" => vec![
            "C",
            "s",
            "h",
            "p",
            "variant",
            "fa_kappa",
            "dip_lo",
            "dip_hi",
            "dip_depth",
            "fc_gate_lo",
            "fc_gate_hi",
            "fd_gate_lo",
            "fd_gate_hi",
        ],
        "wagon" => vec!["m", "c", "k", "k_m", "a", "y_limit"],
        "fish" => vec!["H", "T", "r", "I_max", "d_J", "d_A", "q", "sigma", "R_max", "z", "h_J", "h_A"],
        _ => Vec::new(),
    }
}

impl Model {
    /// Builds a model by name with default parameters overridden by `overrides`.
    pub fn build(name: &str, overrides: &[(String, f64)]) -> Result<Self> {
        match name {
            "solow" => {
                let mut p = SolowParams::default();
                for (k, v) in overrides {
                    p.set(k, *v)?;
                }
                Ok(Model::Solow(Solow::new(p)?))
            }
            "wagon" => {
                let mut p = WagonParams::default();
                for (k, v) in overrides {
                    p.set(k, *v)?;
                }
                Ok(Model::Wagon(Wagon::new(p)?))
            }
            "fish" => {
                let mut p = FishParams::default();
                for (k, v) in overrides {
                    p.set(k, *v)?;
                }
                Ok(Model::Fish(Fish::new(p)?))
            }
            other => Err(config(format!("unknown model '{other}' (expected one of solow, wagon, fish)"))),
        }
    }

    /// Model name.
    pub fn name(&self) -> &'static str {
        match self {
            Model::Solow(_) => "solow",
            Model::Wagon(_) => "wagon",
            Model::Fish(_) => "fish",
        }
    }

    fn inner(&self) -> &dyn DynamicalSystem {
        match self {
            Model::Solow(m) => m,
            Model::Wagon(m) => m,
            Model::Fish(m) => m,
        }
    }

    /// Stable equilibria other than the one under study; trajectories reaching
    /// them never return.
    pub fn competing_attractors(&self) -> Vec<Vec<f64>> {
        match self {
            Model::Solow(m) if m.params().variant.is_bistable() => vec![vec![0.0]],
            _ => Vec::new(),
        }
    }

    /// The attractor under study. `guess` seeds iterative solvers (continuation).
    pub fn find_equilibrium(&self, guess: Option<&[f64]>) -> Result<Equilibrium> {
        match self {
            Model::Solow(m) => Ok(Equilibrium { state: vec![m.stable_equilibrium()], extinct: false }),
            Model::Wagon(m) => Ok(Equilibrium { state: vec![m.stable_equilibrium()?, 0.0], extinct: false }),
            Model::Fish(m) => m.equilibrium(guess),
        }
    }
}

impl DynamicalSystem for Model {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn rhs(&self, t: f64, x: &[f64], regime: Regime, dx: &mut [f64]) {
        match self {
            Model::Solow(m) => m.rhs(t, x, regime, dx),
            Model::Wagon(m) => m.rhs(t, x, regime, dx),
            Model::Fish(m) => m.rhs(t, x, regime, dx),
        }
    }
    fn in_domain(&self, x: &[f64]) -> bool {
        self.inner().in_domain(x)
    }
    fn admissible(&self, x: &[f64]) -> bool {
        self.inner().admissible(x)
    }
    fn switching(&self, regime: Regime, x: &[f64]) -> Option<Switch> {
        self.inner().switching(regime, x)
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        self.inner().params()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn every_listed_name_is_settable() {
        for m in MODEL_NAMES {
            for p in param_names(m) {
                let v = if p == "variant" { 0.0 } else { 0.5 };
                // building may fail for odd values, but never with "unknown parameter"
                if let Err(e) = Model::build(m, &[(p.to_string(), v)]) {
                    assert!(!alloc::format!("{e}").contains("unknown"), "{m}.{p}: {e}");
                }
            }
        }
        assert!(Model::build("fish", &[("bogus".to_string(), 1.0)]).is_err());
    }
}
