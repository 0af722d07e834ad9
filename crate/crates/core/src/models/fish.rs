//! Stage-structured consumer-resource model: juvenile biomass `J`, adult
//! biomass `A` and resource density `R`, with separate harvest rates on the
//! two stages.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{grid_roots, max_abs, newton_equilibrium, Equilibrium, EQUILIBRIUM_TOL};
use crate::error::{config, Error, Result};
use crate::system::{DynamicalSystem, Regime};

/// Half-width of the window around `x = d_J + h_J` where the maturation rate
/// switches to its series form.
pub const MATURATION_SERIES_WINDOW: f64 = 1e-8;

/// How far below zero a biomass or resource component may drift before a
/// trajectory counts as having left the domain. The exact flow keeps the
/// orthant invariant; the discrete solution can undershoot a decaying
/// component by roughly the absolute tolerance.
pub const DOMAIN_SLACK: f64 = 1e-6;

/// Fish model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[allow(non_snake_case)]
pub struct FishParams {
    /// Half-saturation constant.
    pub H: f64,
    /// Maintenance rate.
    pub T: f64,
    /// Resource turn-over rate.
    pub r: f64,
    /// Maximum juvenile ingestion rate.
    pub I_max: f64,
    /// Juvenile background mortality.
    pub d_J: f64,
    /// Adult background mortality.
    pub d_A: f64,
    /// Adult to juvenile ingestion ratio.
    pub q: f64,
    /// Ingestion efficiency.
    pub sigma: f64,
    /// Maximum resource density.
    pub R_max: f64,
    /// Size at birth over size at maturation.
    pub z: f64,
    /// Juvenile harvest rate.
    pub h_J: f64,
    /// Adult harvest rate.
    pub h_A: f64,
}

impl Default for FishParams {
    fn default() -> Self {
        Self {
            H: 1.0,
            T: 1.0,
            r: 1.0,
            I_max: 10.0,
            d_J: 0.1,
            d_A: 0.1,
            q: 0.85,
            sigma: 0.5,
            R_max: 2.0,
            z: 0.01,
            h_J: 0.0,
            h_A: 0.0,
        }
    }
}

impl FishParams {
    /// Sets a parameter by name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "H" => self.H = value,
            "T" => self.T = value,
            "r" => self.r = value,
            "I_max" => self.I_max = value,
            "d_J" => self.d_J = value,
            "d_A" => self.d_A = value,
            "q" => self.q = value,
            "sigma" => self.sigma = value,
            "R_max" => self.R_max = value,
            "z" => self.z = value,
            "h_J" => self.h_J = value,
            "h_A" => self.h_A = value,
            other => return Err(config(format!("unknown fish parameter '{other}'"))),
        }
        Ok(())
    }
}

/// Yield of a harvest: rate times equilibrium biomass, summed over stages.
pub fn harvest_yield(h_j: f64, h_a: f64, j_eq: f64, a_eq: f64) -> f64 {
    h_j * j_eq + h_a * a_eq
}

/// The fish system.
#[derive(Debug, Clone, PartialEq)]
pub struct Fish {
    p: FishParams,
}

impl Fish {
    /// Checks parameter ranges.
    pub fn new(p: FishParams) -> Result<Self> {
        let all = [p.H, p.T, p.r, p.I_max, p.d_J, p.d_A, p.q, p.sigma, p.R_max, p.z, p.h_J, p.h_A];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(config("fish: parameters must be finite"));
        }
        if !(p.H > 0.0 && p.r > 0.0 && p.I_max > 0.0 && p.R_max > 0.0 && p.sigma > 0.0 && p.q > 0.0) {
            return Err(config("fish: H, r, I_max, R_max, sigma and q must be positive"));
        }
        if !(p.T >= 0.0 && p.d_J >= 0.0 && p.d_A >= 0.0 && p.h_J >= 0.0 && p.h_A >= 0.0) {
            return Err(config("fish: T, mortalities and harvest rates must be non-negative"));
        }
        if !(p.d_A + p.h_A > 0.0) {
            return Err(config("fish: adult loss rate d_A + h_A must be positive"));
        }
        if !(p.z > 0.0 && p.z < 1.0) {
            return Err(config("fish: z must lie in (0, 1)"));
        }
        Ok(Self { p })
    }

    /// Parameters.
    pub fn params(&self) -> &FishParams {
        &self.p
    }

    fn ingestion(&self, r: f64) -> f64 {
        self.p.I_max * r / (self.p.H + r)
    }

    /// Net juvenile biomass production per unit biomass.
    pub fn w_j(&self, r: f64) -> f64 {
        (self.p.sigma * self.ingestion(r) - self.p.T).max(0.0)
    }

    /// Net adult biomass production per unit biomass.
    pub fn w_a(&self, r: f64) -> f64 {
        (self.p.sigma * self.p.q * self.ingestion(r) - self.p.T).max(0.0)
    }

    /// Maturation rate `v(x)`.
    pub fn maturation(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let d = self.p.d_J + self.p.h_J;
        let ln_z = libm::log(self.p.z);
        let u = 1.0 - d / x;
        if libm::fabs(x - d) < MATURATION_SERIES_WINDOW {
            let ul = u * ln_z;
            return -x / (ln_z * (1.0 + ul / 2.0 + ul * ul / 6.0));
        }
        let denom = -libm::expm1(u * ln_z);
        let v = (x - d) / denom;
        // z^u overflows for tiny x; the limit there is 0.
        if v.is_finite() {
            v
        } else {
            0.0
        }
    }

    fn adult_loss(&self) -> f64 {
        self.p.d_A + self.p.h_A
    }

    /// Juvenile growth balance at resource level `r` along the equilibrium
    /// manifold `A = v J / (d_A + h_A)`; zero at a positive equilibrium.
    fn balance(&self, r: f64) -> f64 {
        let wj = self.w_j(r);
        let v = self.maturation(wj);
        wj - v - self.p.d_J - self.p.h_J + self.w_a(r) * v / self.adult_loss()
    }

    fn state_at(&self, r: f64) -> [f64; 3] {
        let p = &self.p;
        let v = self.maturation(self.w_j(r));
        let ratio = v / self.adult_loss();
        let j = p.r * (p.R_max - r) * (p.H + r) / (p.I_max * r * (1.0 + p.q * ratio));
        [j, ratio * j, r]
    }

    /// The extinction equilibrium `(0, 0, R_max)`.
    pub fn extinction(&self) -> [f64; 3] {
        [0.0, 0.0, self.p.R_max]
    }

    /// Locates the attracting equilibrium. Positive equilibria are found by a
    /// one-dimensional root search in `R` and polished by Newton; if none
    /// exists the extinction state is returned flagged. `guess` picks among
    /// several positive candidates.
    pub fn equilibrium(&self, guess: Option<&[f64]>) -> Result<Equilibrium> {
        let hi = self.p.R_max;
        let lo = hi * 1e-9;
        let candidates: Vec<[f64; 3]> = grid_roots(|r| self.balance(r), lo, hi, 4000)
            .into_iter()
            .filter(|&r| r < hi)
            .map(|r| self.state_at(r))
            .filter(|s| s[0] > 0.0 && s[1] > 0.0)
            .collect();
        let pick = match guess {
            Some(g) if g.len() == 3 && !candidates.is_empty() => candidates.iter().min_by(|a, b| {
                let da: f64 = a.iter().zip(g).map(|(x, y)| (x - y) * (x - y)).sum();
                let db: f64 = b.iter().zip(g).map(|(x, y)| (x - y) * (x - y)).sum();
                da.total_cmp(&db)
            }),
            _ => candidates.last(),
        };
        let Some(start) = pick else {
            return Ok(Equilibrium { state: self.extinction().to_vec(), extinct: true });
        };
        let start = start.to_vec();
        if max_abs(&self.eval(0.0, &start)) < EQUILIBRIUM_TOL {
            return Ok(Equilibrium { state: start, extinct: false });
        }
        let state = newton_equilibrium(self, &start)?;
        if state.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::NoEquilibrium("fish: Newton left the positive orthant".into()));
        }
        Ok(Equilibrium { state, extinct: false })
    }
}

impl DynamicalSystem for Fish {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, _t: f64, s: &[f64], _regime: Regime, dx: &mut [f64]) {
        let p = &self.p;
        let (j, a, r) = (s[0], s[1], s[2]);
        let wj = self.w_j(r);
        let v = self.maturation(wj);
        dx[0] = (wj - v - p.d_J - p.h_J) * j + self.w_a(r) * a;
        dx[1] = v * j - (p.d_A + p.h_A) * a;
        dx[2] = p.r * (p.R_max - r) - self.ingestion(r) * (j + p.q * a);
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.is_finite() && *v >= -DOMAIN_SLACK)
    }

    /// Perturbations with a non-positive component are excluded.
    fn admissible(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.is_finite() && *v > 0.0)
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        let p = &self.p;
        vec![
            ("H", p.H),
            ("T", p.T),
            ("r", p.r),
            ("I_max", p.I_max),
            ("d_J", p.d_J),
            ("d_A", p.d_A),
            ("q", p.q),
            ("sigma", p.sigma),
            ("R_max", p.R_max),
            ("z", p.z),
            ("h_J", p.h_J),
            ("h_A", p.h_A),
        ]
    }
}
