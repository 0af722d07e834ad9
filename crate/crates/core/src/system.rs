//! The system-under-study interface.

use alloc::vec::Vec;

/// Discrete, per-trajectory regime of a hybrid system.
///
/// Most systems only ever use [`Regime::INITIAL`]. Systems with irreversible
/// switches (a spring that breaks) advance the regime through
/// [`DynamicalSystem::switching`]. The regime is owned by the trajectory being
/// integrated, never by the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Regime(pub u8);

impl Regime {
    /// The regime every trajectory starts in.
    pub const INITIAL: Regime = Regime(0);
}

/// A pending regime switch: it fires once `value >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Switch {
    /// Switching function evaluated at the current state.
    pub value: f64,
    /// Regime entered when the switch fires.
    pub next: Regime,
}

/// An autonomous or non-autonomous ODE `dx/dt = f(x, t)` on a state domain.
pub trait DynamicalSystem: Sync {
    /// State dimension.
    fn dim(&self) -> usize;

    /// Writes `f(x, t)` for the given regime into `dx`.
    fn rhs(&self, t: f64, x: &[f64], regime: Regime, dx: &mut [f64]);

    /// Whether `x` lies in the closed state domain.
    fn in_domain(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.is_finite())
    }

    /// Whether `x` may be used as a perturbed initial condition. Defaults to
    /// [`DynamicalSystem::in_domain`]; models whose integration domain carries
    /// a numerical slack override this with the exact domain.
    fn admissible(&self, x: &[f64]) -> bool {
        self.in_domain(x)
    }

    /// Switching function for the current regime, if any.
    fn switching(&self, _regime: Regime, _x: &[f64]) -> Option<Switch> {
        None
    }

    /// Named parameter values, for metadata.
    fn params(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }

    /// Convenience wrapper returning `f(x, t)` in the initial regime.
    fn eval(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut dx = alloc::vec![0.0; self.dim()];
        self.rhs(t, x, Regime::INITIAL, &mut dx);
        dx
    }
}

impl<S: DynamicalSystem + ?Sized> DynamicalSystem for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn rhs(&self, t: f64, x: &[f64], regime: Regime, dx: &mut [f64]) {
        (**self).rhs(t, x, regime, dx)
    }
    fn in_domain(&self, x: &[f64]) -> bool {
        (**self).in_domain(x)
    }
    fn admissible(&self, x: &[f64]) -> bool {
        (**self).admissible(x)
    }
    fn switching(&self, regime: Regime, x: &[f64]) -> Option<Switch> {
        (**self).switching(regime, x)
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        (**self).params()
    }
}

/// A system given by a closure, handy in tests and for ad-hoc models.
pub struct FnSystem<F> {
    dim: usize,
    f: F,
}

impl<F> FnSystem<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    /// Wraps `f(t, x, dx)` as a system of dimension `dim` on all of R^dim.
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> DynamicalSystem for FnSystem<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn rhs(&self, t: f64, x: &[f64], _regime: Regime, dx: &mut [f64]) {
        (self.f)(t, x, dx)
    }
}
