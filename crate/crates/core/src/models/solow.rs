//! Solow-Swan growth `dx/dt = F(x) - C x` with a declared family of production
//! variants.
//!
//! The base production is the saturating `F(x) = s x^p / (h^p + x^p)`. The
//! variants are built from it so that their qualitative structure is fixed:
//!
//! * `Fa = C x + kappa (F - C x)`: same equilibria, everywhere closer to `C x`,
//!   different slope at the stable equilibrium `E`.
//! * `Fb = F * (1 - depth * bump)`: a smooth dip on `[dip_lo, dip_hi]`, away
//!   from `E`. The equilibria are unchanged.
//! * `Fc`, `Fd = F * gate`: a smooth gate rising from 0 to 1 on
//!   `[gate_lo, gate_hi]`. Production vanishes near the origin, which turns
//!   `E0 = 0` into a stable equilibrium and creates an unstable `E1` inside the
//!   gate. `Fd`'s gate sits closer to `E` than `Fc`'s.
//!
//! `F`, `Fb`, `Fc` and `Fd` agree exactly on [`Solow::coincidence_interval`],
//! which contains `E`. The structure is verified when a model is built.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{bisect, grid_roots};
use crate::error::{config, Result};
use crate::system::{DynamicalSystem, Regime};

/// Production variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolowVariant {
    /// Saturating production.
    Base,
    /// Flattened towards `C x` everywhere.
    Fa,
    /// Local dip away from `E`.
    Fb,
    /// Bistable, `E1` far from `E`.
    Fc,
    /// Bistable, `E1` close to `E`.
    Fd,
}

impl SolowVariant {
    /// All variants in order.
    pub const ALL: [SolowVariant; 5] =
        [SolowVariant::Base, SolowVariant::Fa, SolowVariant::Fb, SolowVariant::Fc, SolowVariant::Fd];

    /// Numeric code used in parameter maps (0 = Base ... 4 = Fd).
    pub fn code(self) -> u8 {
        self as u8
    }

    /// Inverse of [`SolowVariant::code`].
    pub fn from_code(code: f64) -> Result<Self> {
        match code as i64 {
            0 if code == 0.0 => Ok(SolowVariant::Base),
            1 if code == 1.0 => Ok(SolowVariant::Fa),
            2 if code == 2.0 => Ok(SolowVariant::Fb),
            3 if code == 3.0 => Ok(SolowVariant::Fc),
            4 if code == 4.0 => Ok(SolowVariant::Fd),
            _ => Err(config(format!("unknown Solow variant code {code}"))),
        }
    }

    /// Lower-case name (`base`, `fa`, ...).
    pub fn name(self) -> &'static str {
        match self {
            SolowVariant::Base => "base",
            SolowVariant::Fa => "fa",
            SolowVariant::Fb => "fb",
            SolowVariant::Fc => "fc",
            SolowVariant::Fd => "fd",
        }
    }

    /// Inverse of [`SolowVariant::name`].
    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name().eq_ignore_ascii_case(name))
    }

    /// Whether the variant has the extra equilibria `E0` and `E1`.
    pub fn is_bistable(self) -> bool {
        matches!(self, SolowVariant::Fc | SolowVariant::Fd)
    }
}

/// Parameters of the production family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolowParams {
    /// Maintenance slope `C`.
    pub maintenance: f64,
    /// Saving scale `s`.
    pub saving: f64,
    /// Half-saturation `h`.
    pub half_saturation: f64,
    /// Hill exponent `p`.
    pub hill: f64,
    /// Variant.
    pub variant: SolowVariant,
    /// `Fa` blend factor `kappa` in `(0, 1)`.
    pub fa_kappa: f64,
    /// `Fb` dip support and depth.
    pub dip_lo: f64,
    /// Upper end of the dip.
    pub dip_hi: f64,
    /// Relative depth of the dip.
    pub dip_depth: f64,
    /// `Fc` gate support.
    pub fc_gate: (f64, f64),
    /// `Fd` gate support.
    pub fd_gate: (f64, f64),
}

impl Default for SolowParams {
    fn default() -> Self {
        Self {
            maintenance: 0.25,
            saving: 1.0,
            half_saturation: 1.0,
            hill: 1.0,
            variant: SolowVariant::Base,
            fa_kappa: 0.5,
            dip_lo: 0.2,
            dip_hi: 2.0,
            dip_depth: 0.4,
            fc_gate: (0.2, 1.8),
            fd_gate: (1.4, 2.4),
        }
    }
}

impl SolowParams {
    /// Sets a parameter by name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "C" => self.maintenance = value,
            "s" => self.saving = value,
            "h" => self.half_saturation = value,
            "p" => self.hill = value,
            "variant" => self.variant = SolowVariant::from_code(value)?,
            "fa_kappa" => self.fa_kappa = value,
            "dip_lo" => self.dip_lo = value,
            "dip_hi" => self.dip_hi = value,
            "dip_depth" => self.dip_depth = value,
            "fc_gate_lo" => self.fc_gate.0 = value,
            "fc_gate_hi" => self.fc_gate.1 = value,
            "fd_gate_lo" => self.fd_gate.0 = value,
            "fd_gate_hi" => self.fd_gate.1 = value,
            other => return Err(config(format!("unknown solow parameter '{other}'"))),
        }
        Ok(())
    }
}

/// Quintic smoothstep on `[0, 1]`, clamped outside.
fn smoothstep(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * u * (u * (6.0 * u - 15.0) + 10.0)
    }
}

/// `C^2` bump on `[0, 1]` peaking at 1 in the middle, zero outside.
fn bump(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        let b = 4.0 * u * (1.0 - u);
        b * b * b
    }
}

/// The Solow-Swan model for one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct Solow {
    params: SolowParams,
    equilibrium: f64,
    unstable: Option<f64>,
}

const ROOT_CELLS: usize = 20_000;

impl Solow {
    /// Builds the model and checks the variant's equilibrium structure.
    pub fn new(params: SolowParams) -> Result<Self> {
        let p = &params;
        if !(p.maintenance > 0.0 && p.saving > 0.0 && p.half_saturation > 0.0 && p.hill > 0.0) {
            return Err(config("solow: C, s, h and p must be positive"));
        }
        if !(p.fa_kappa > 0.0 && p.fa_kappa < 1.0) {
            return Err(config("solow: fa_kappa must lie in (0, 1)"));
        }
        if !(0.0 <= p.dip_lo && p.dip_lo < p.dip_hi && p.dip_depth >= 0.0 && p.dip_depth < 1.0) {
            return Err(config("solow: need 0 <= dip_lo < dip_hi and 0 <= dip_depth < 1"));
        }
        for (lo, hi) in [p.fc_gate, p.fd_gate] {
            if !(0.0 <= lo && lo < hi) {
                return Err(config("solow: gate bounds must satisfy 0 <= lo < hi"));
            }
        }
        let mut model = Self { params, equilibrium: f64::NAN, unstable: None };
        // F <= s, so F - C x < 0 beyond s / C.
        let upper = 1.5 * p.saving / p.maintenance + 1.0;
        let g = |x: f64| model.growth(x);
        let roots: Vec<f64> = grid_roots(g, 0.0, upper, ROOT_CELLS).into_iter().filter(|r| *r > 1e-9).collect();
        let near_zero_sign = model.growth(1e-6);
        match (p.variant.is_bistable(), roots.as_slice()) {
            (false, [e]) if near_zero_sign > 0.0 => {
                model.equilibrium = *e;
            }
            (true, [e1, e]) if near_zero_sign < 0.0 => {
                model.unstable = Some(*e1);
                model.equilibrium = *e;
            }
            _ => {
                return Err(config(format!(
                    "solow {:?}: production violates the variant's equilibrium structure (positive roots {:?})",
                    p.variant, roots
                )))
            }
        }
        // The variants must share E with the base production.
        if p.variant != SolowVariant::Base {
            let base = Solow::new(SolowParams { variant: SolowVariant::Base, ..params })?;
            if libm::fabs(base.equilibrium - model.equilibrium) > 1e-9 {
                return Err(config("solow: variant moved the stable equilibrium"));
            }
            if p.variant != SolowVariant::Fa {
                let (lo, _) = model.coincidence_interval();
                if !(lo < model.equilibrium) {
                    return Err(config("solow: variant modification reaches the stable equilibrium"));
                }
            }
        }
        Ok(model)
    }

    /// Convenience constructor with default shape parameters.
    pub fn variant(variant: SolowVariant) -> Result<Self> {
        Self::new(SolowParams { variant, ..SolowParams::default() })
    }

    /// Parameters.
    pub fn params(&self) -> &SolowParams {
        &self.params
    }

    /// Unmodified saturating production.
    pub fn base_production(&self, x: f64) -> f64 {
        let p = &self.params;
        if x <= 0.0 {
            return 0.0;
        }
        let xp = libm::pow(x, p.hill);
        p.saving * xp / (libm::pow(p.half_saturation, p.hill) + xp)
    }

    /// Saved output per worker for the configured variant.
    pub fn production(&self, x: f64) -> f64 {
        let p = &self.params;
        let f = self.base_production(x);
        match p.variant {
            SolowVariant::Base => f,
            SolowVariant::Fa => p.maintenance * x + p.fa_kappa * (f - p.maintenance * x),
            SolowVariant::Fb => f * (1.0 - p.dip_depth * bump((x - p.dip_lo) / (p.dip_hi - p.dip_lo))),
            SolowVariant::Fc => f * smoothstep((x - p.fc_gate.0) / (p.fc_gate.1 - p.fc_gate.0)),
            SolowVariant::Fd => f * smoothstep((x - p.fd_gate.0) / (p.fd_gate.1 - p.fd_gate.0)),
        }
    }

    /// `F(x) - C x`.
    pub fn growth(&self, x: f64) -> f64 {
        self.production(x) - self.params.maintenance * x
    }

    /// Stable interior equilibrium `E`.
    pub fn stable_equilibrium(&self) -> f64 {
        self.equilibrium
    }

    /// Unstable equilibrium `E1` of the bistable variants.
    pub fn unstable_equilibrium(&self) -> Option<f64> {
        self.unstable
    }

    /// Interval around `E` on which the base production and the Fb, Fc and Fd
    /// variants (with the current shape parameters) coincide.
    pub fn coincidence_interval(&self) -> (f64, f64) {
        let p = &self.params;
        (p.dip_hi.max(p.fc_gate.1).max(p.fd_gate.1), f64::INFINITY)
    }

    /// Exact local rate `d(F - C x)/dx` at `E` by a Richardson-extrapolated
    /// central difference on the closed-form production.
    pub fn slope_at_equilibrium(&self) -> f64 {
        let e = self.equilibrium;
        let d = |h: f64| (self.growth(e + h) - self.growth(e - h)) / (2.0 * h);
        let h = 1e-3;
        (4.0 * d(h / 2.0) - d(h)) / 3.0
    }

    /// Refines `E1` by bisection (for oracles; the constructor already does this).
    pub fn refine_unstable(&self) -> Option<f64> {
        self.unstable.map(|e1| bisect(|x| self.growth(x), e1 - 1e-3, e1 + 1e-3))
    }
}

impl DynamicalSystem for Solow {
    fn dim(&self) -> usize {
        1
    }
    fn rhs(&self, _t: f64, x: &[f64], _regime: Regime, dx: &mut [f64]) {
        dx[0] = self.growth(x[0]);
    }
    fn in_domain(&self, x: &[f64]) -> bool {
        x[0] >= 0.0
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        let p = &self.params;
        vec![
            ("C", p.maintenance),
            ("s", p.saving),
            ("h", p.half_saturation),
            ("p", p.hill),
            ("variant", p.variant.code() as f64),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn production_vanishes_at_zero() {
        for v in SolowVariant::ALL {
            assert_eq!(Solow::variant(v).unwrap().production(0.0), 0.0);
        }
    }

    #[test]
    fn base_equilibrium_is_three() {
        let m = Solow::variant(SolowVariant::Base).unwrap();
        // x / (1 + x) = x / 4  =>  x = 3
        assert!((m.stable_equilibrium() - 3.0).abs() < 1e-12);
        assert!(m.unstable_equilibrium().is_none());
    }

    #[test]
    fn variants_share_e_and_structure() {
        for v in SolowVariant::ALL {
            let m = Solow::variant(v).unwrap();
            assert!((m.stable_equilibrium() - 3.0).abs() < 1e-12, "{v:?}");
            assert_eq!(m.unstable_equilibrium().is_some(), v.is_bistable());
        }
    }

    #[test]
    fn fd_unstable_point_closer_than_fc() {
        let c = Solow::variant(SolowVariant::Fc).unwrap();
        let d = Solow::variant(SolowVariant::Fd).unwrap();
        let e = c.stable_equilibrium();
        let gap_c = e - c.unstable_equilibrium().unwrap();
        let gap_d = e - d.unstable_equilibrium().unwrap();
        assert!(gap_d < gap_c);
        assert!(gap_d > 0.0);
    }

    #[test]
    fn coincide_near_e_and_fa_differs() {
        let base = Solow::variant(SolowVariant::Base).unwrap();
        let (lo, _) = base.coincidence_interval();
        for v in [SolowVariant::Fb, SolowVariant::Fc, SolowVariant::Fd] {
            let m = Solow::variant(v).unwrap();
            for i in 0..=400 {
                let x = lo + i as f64 * 0.01;
                assert!((m.production(x) - base.production(x)).abs() <= 1e-9);
            }
        }
        let fa = Solow::variant(SolowVariant::Fa).unwrap();
        assert!((fa.slope_at_equilibrium() - base.slope_at_equilibrium()).abs() > 1e-3);
        // closer to the maintenance line everywhere
        for i in 1..400 {
            let x = i as f64 * 0.02;
            assert!(fa.growth(x).abs() <= base.growth(x).abs());
        }
    }

    #[test]
    fn broken_structure_rejected() {
        // A gate that reaches E moves the stable point.
        let bad = SolowParams { variant: SolowVariant::Fd, fd_gate: (2.0, 3.5), ..SolowParams::default() };
        assert!(Solow::new(bad).is_err());
        // A dip deep enough to cross C x creates extra equilibria.
        let bad = SolowParams { variant: SolowVariant::Fb, dip_depth: 0.95, ..SolowParams::default() };
        assert!(Solow::new(bad).is_err());
    }
}
