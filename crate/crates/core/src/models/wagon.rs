//! Wagon on a linear spring and damper, attracted by a magnet at `x = a`.
//!
//! State `(x, y)` with `y = dx/dt`:
//!
//! ```text
//! dx/dt = y
//! dy/dt = -(k_eff / m) x - (c / m) y + k_m / (m (x - a)^2)
//! ```
//!
//! With a finite speed limit the spring breaks the first time `y >= y_limit`,
//! after which `k_eff = 0` for the rest of that trajectory. The break is a
//! regime switch owned by the trajectory, not by the model.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::bisect;
use crate::distance::EnergyParams;
use crate::error::{config, Error, Result};
use crate::system::{DynamicalSystem, Regime, Switch};

/// Regime after the spring has broken.
pub const BROKEN: Regime = Regime(1);

/// Wagon parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WagonParams {
    /// Mass `m`.
    pub m: f64,
    /// Damping `c`.
    pub c: f64,
    /// Spring stiffness `k`.
    pub k: f64,
    /// Magnetic stiffness `k_m`.
    pub k_m: f64,
    /// Magnet position `a`.
    pub a: f64,
    /// Spring-break speed; infinite means the spring never breaks.
    pub y_limit: f64,
}

impl Default for WagonParams {
    fn default() -> Self {
        Self { m: 1.0, c: 1.0, k: 0.7, k_m: 1.0, a: 5.0, y_limit: f64::INFINITY }
    }
}

impl WagonParams {
    /// Sets a parameter by name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "m" => self.m = value,
            "c" => self.c = value,
            "k" => self.k = value,
            "k_m" => self.k_m = value,
            "a" => self.a = value,
            "y_limit" => self.y_limit = value,
            other => return Err(config(format!("unknown wagon parameter '{other}'"))),
        }
        Ok(())
    }

    /// The energy-distance parameters of this wagon.
    pub fn energy(&self) -> EnergyParams {
        EnergyParams { mass: self.m, stiffness: self.k, magnetic_stiffness: self.k_m, magnet_position: self.a }
    }
}

/// The wagon system.
#[derive(Debug, Clone, PartialEq)]
pub struct Wagon {
    p: WagonParams,
}

impl Wagon {
    /// Checks parameter signs.
    pub fn new(p: WagonParams) -> Result<Self> {
        if !(p.m > 0.0) {
            return Err(config("wagon: mass must be positive"));
        }
        if !(p.c >= 0.0 && p.k >= 0.0 && p.k_m >= 0.0) {
            return Err(config("wagon: c, k and k_m must be non-negative"));
        }
        if !(p.a > 0.0) || !p.a.is_finite() {
            return Err(config("wagon: magnet position must be positive"));
        }
        if !(p.y_limit > 0.0) {
            return Err(config("wagon: speed limit must be positive (or infinite)"));
        }
        Ok(Self { p })
    }

    /// Parameters.
    pub fn params(&self) -> &WagonParams {
        &self.p
    }

    /// Stiffness below which the stable equilibrium disappears in a fold:
    /// `k x (x - a)^2 = k_m` loses its roots left of `a` when its local maximum
    /// at `x = a / 3` drops to `k_m`.
    pub fn fold_stiffness(&self) -> f64 {
        27.0 * self.p.k_m / (4.0 * self.p.a * self.p.a * self.p.a)
    }

    /// Stable equilibrium position `x_eq`: the smaller root of
    /// `k x (x - a)^2 = k_m` in `(0, a / 3)`.
    pub fn stable_equilibrium(&self) -> Result<f64> {
        let WagonParams { k, k_m, a, .. } = self.p;
        if k_m == 0.0 {
            return if k > 0.0 { Ok(0.0) } else { Err(Error::NoEquilibrium("wagon: no spring, no magnet".into())) };
        }
        let f = |x: f64| k * x * (x - a) * (x - a) - k_m;
        if !(f(a / 3.0) > 0.0) {
            return Err(Error::NoEquilibrium(format!(
                "wagon: k = {k} is at or below the fold stiffness {}",
                self.fold_stiffness()
            )));
        }
        Ok(bisect(f, 0.0, a / 3.0))
    }

    /// Unstable (saddle) equilibrium position in `(a / 3, a)`.
    pub fn saddle(&self) -> Result<f64> {
        let WagonParams { k, k_m, a, .. } = self.p;
        let f = |x: f64| k * x * (x - a) * (x - a) - k_m;
        if k_m == 0.0 || !(f(a / 3.0) > 0.0) {
            return Err(Error::NoEquilibrium("wagon: no saddle".into()));
        }
        Ok(bisect(f, a / 3.0, a))
    }

    /// Mechanical energy `k x^2 / 2 + m y^2 / 2` (meaningful without magnet and damper).
    pub fn spring_energy(&self, x: &[f64]) -> f64 {
        0.5 * self.p.k * x[0] * x[0] + 0.5 * self.p.m * x[1] * x[1]
    }
}

impl DynamicalSystem for Wagon {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, _t: f64, s: &[f64], regime: Regime, dx: &mut [f64]) {
        let WagonParams { m, c, k, k_m, a, .. } = self.p;
        let k_eff = if regime == BROKEN { 0.0 } else { k };
        let (x, y) = (s[0], s[1]);
        let gap = x - a;
        let magnet = if k_m == 0.0 { 0.0 } else { k_m / (m * gap * gap) };
        dx[0] = y;
        dx[1] = -(k_eff / m) * x - (c / m) * y + magnet;
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x[0] < self.p.a && x[1].is_finite()
    }

    fn switching(&self, regime: Regime, x: &[f64]) -> Option<Switch> {
        (regime == Regime::INITIAL && self.p.y_limit.is_finite())
            .then(|| Switch { value: x[1] - self.p.y_limit, next: BROKEN })
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        let p = &self.p;
        vec![("m", p.m), ("c", p.c), ("k", p.k), ("k_m", p.k_m), ("a", p.a), ("y_limit", p.y_limit)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_at_origin() {
        let w = Wagon::new(WagonParams::default()).unwrap();
        let d = w.eval(0.0, &[0.0, 0.0]);
        assert_eq!(d[0], 0.0);
        assert!((d[1] - 0.04).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_k07() {
        let w = Wagon::new(WagonParams::default()).unwrap();
        let x = w.stable_equilibrium().unwrap();
        // fixed-point oracle x = 1 / (0.7 (x - 5)^2), a contraction near the root
        let mut o = 0.0f64;
        for _ in 0..100 {
            o = 1.0 / (0.7 * (o - 5.0) * (o - 5.0));
        }
        assert!((x - o).abs() < 1e-12, "{x} vs {o}");
        assert!((x - 0.0585).abs() < 1e-4, "{x}");
        let s = w.saddle().unwrap();
        assert!(s > 5.0 / 3.0 && s < 5.0);
    }

    #[test]
    fn fold_near_0054() {
        let w = Wagon::new(WagonParams::default()).unwrap();
        assert!((w.fold_stiffness() - 0.054).abs() < 5e-4);
        let below = Wagon::new(WagonParams { k: 0.053, ..WagonParams::default() }).unwrap();
        assert!(matches!(below.stable_equilibrium(), Err(Error::NoEquilibrium(_))));
        let above = Wagon::new(WagonParams { k: 0.055, ..WagonParams::default() }).unwrap();
        assert!(above.stable_equilibrium().is_ok());
    }

    #[test]
    fn broken_spring_drops_restoring_force() {
        let w = Wagon::new(WagonParams { y_limit: 2.0, ..WagonParams::default() }).unwrap();
        let mut intact = [0.0; 2];
        let mut broken = [0.0; 2];
        w.rhs(0.0, &[1.0, 0.0], Regime::INITIAL, &mut intact);
        w.rhs(0.0, &[1.0, 0.0], BROKEN, &mut broken);
        assert!((broken[1] - intact[1] - 0.7).abs() < 1e-15);
        assert!(w.switching(BROKEN, &[0.0, 5.0]).is_none());
        assert_eq!(w.switching(Regime::INITIAL, &[0.0, 2.5]).unwrap().value, 0.5);
    }
}
