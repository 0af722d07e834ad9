//! Distances from a perturbed state to the attractor: Euclidean, mechanical
//! energy, and relative (per-component rescaled) distance.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{config, Result};
use crate::quadrature;

/// Absolute tolerance of the potential-energy quadrature.
pub const ENERGY_QUAD_TOL: f64 = 1e-9;

/// Which distance a [`DistanceSpec`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceKind {
    /// Plain Euclidean norm of the displacement.
    Euclidean,
    /// Work needed to impose the perturbation on a spring-magnet wagon.
    Energy,
    /// Euclidean norm of the displacement divided componentwise by a scale.
    Relative,
}

impl DistanceKind {
    /// Lower-case name used in files.
    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::Euclidean => "euclidean",
            DistanceKind::Energy => "energy",
            DistanceKind::Relative => "relative",
        }
    }
}

/// Mechanical parameters for the energy distance of a (displacement, velocity) state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    /// Mass `m`.
    pub mass: f64,
    /// Spring stiffness `k`.
    pub stiffness: f64,
    /// Magnetic stiffness `k_m`.
    pub magnetic_stiffness: f64,
    /// Magnet position `a`.
    pub magnet_position: f64,
}

impl EnergyParams {
    /// Force the operator must overcome to hold the wagon at `x` against spring
    /// and magnet, signed positive when it opposes motion in `+x`.
    fn spring_minus_magnet(&self, x: f64) -> f64 {
        let gap = x - self.magnet_position;
        self.stiffness * x - self.magnetic_stiffness / (gap * gap)
    }

    /// Work needed to move the wagon slowly from `from` to `to`, counting only
    /// the stretches where the net force opposes the motion.
    pub fn potential_work(&self, from: f64, to: f64) -> f64 {
        if to >= self.magnet_position {
            return f64::INFINITY;
        }
        let (lo, hi, sign) = if to >= from { (from, to, 1.0) } else { (to, from, -1.0) };
        // Split at the zeros of the net force so every piece is smooth.
        let mut cuts = alloc::vec![lo];
        cuts.extend(self.force_zeros().into_iter().flatten().filter(|z| *z > lo && *z < hi));
        cuts.push(hi);
        let mut work = 0.0;
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            if sign * self.spring_minus_magnet(mid) > 0.0 {
                work += quadrature::integrate(
                    |x| (sign * self.spring_minus_magnet(x)).max(0.0),
                    w[0],
                    w[1],
                    ENERGY_QUAD_TOL,
                )
                .value;
            }
        }
        work
    }

    /// Zeros left of the magnet of `k x (x - a)^2 - k_m`, which is increasing
    /// below `a / 3` and decreasing between `a / 3` and `a`.
    fn force_zeros(&self) -> [Option<f64>; 2] {
        let a = self.magnet_position;
        let h = |x: f64| self.stiffness * x * (x - a) * (x - a) - self.magnetic_stiffness;
        let peak = a / 3.0;
        if !(h(peak) > 0.0) {
            return [None, None];
        }
        let mut lo = peak - 1.0;
        while h(lo) > 0.0 {
            lo = peak - 2.0 * (peak - lo);
            if !lo.is_finite() {
                return [None, None];
            }
        }
        let root = |mut l: f64, mut r: f64, rising: bool| {
            for _ in 0..200 {
                let m = 0.5 * (l + r);
                if m <= l || m >= r {
                    break;
                }
                if (h(m) > 0.0) == rising {
                    r = m;
                } else {
                    l = m;
                }
            }
            0.5 * (l + r)
        };
        [Some(root(lo, peak, true)), Some(root(peak, a, false))]
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Metric {
    Euclidean,
    Energy(EnergyParams),
    Relative(Vec<f64>),
}

/// A distance to a reference point (the attractor).
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSpec {
    reference: Vec<f64>,
    metric: Metric,
}

impl DistanceSpec {
    /// Builds a spec from a kind and the optional parameter blocks, checking that
    /// the block the kind needs is present and valid.
    pub fn new(
        kind: DistanceKind,
        reference: Vec<f64>,
        energy: Option<EnergyParams>,
        relative_scale: Option<Vec<f64>>,
    ) -> Result<Self> {
        if reference.is_empty() {
            return Err(config("distance reference must have at least one component"));
        }
        let metric = match kind {
            DistanceKind::Euclidean => Metric::Euclidean,
            DistanceKind::Energy => {
                let p = energy.ok_or_else(|| config("energy distance requires energy parameters"))?;
                if reference.len() != 2 {
                    return Err(config("energy distance is defined for (displacement, velocity) states only"));
                }
                if !(p.mass > 0.0) {
                    return Err(config("energy distance requires a positive mass"));
                }
                if !(reference[0] < p.magnet_position) {
                    return Err(config("energy reference must lie left of the magnet"));
                }
                Metric::Energy(p)
            }
            DistanceKind::Relative => {
                let s = relative_scale.ok_or_else(|| config("relative distance requires a scale vector"))?;
                if s.len() != reference.len() {
                    return Err(config(format!(
                        "relative scale has {} components, reference has {}",
                        s.len(),
                        reference.len()
                    )));
                }
                if let Some(bad) = s.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                    return Err(config(format!("relative scale entries must be positive, got {bad}")));
                }
                Metric::Relative(s)
            }
        };
        Ok(Self { reference, metric })
    }

    /// Euclidean distance to `reference`.
    pub fn euclidean(reference: Vec<f64>) -> Self {
        Self { reference, metric: Metric::Euclidean }
    }

    /// Relative distance to `reference`, rescaled by the reference itself.
    pub fn relative_to_reference(reference: Vec<f64>) -> Result<Self> {
        let scale = reference.clone();
        Self::new(DistanceKind::Relative, reference, None, Some(scale))
    }

    /// Energy distance to the wagon equilibrium `(x_eq, 0)`.
    pub fn energy(x_eq: f64, params: EnergyParams) -> Result<Self> {
        Self::new(DistanceKind::Energy, alloc::vec![x_eq, 0.0], Some(params), None)
    }

    /// Kind of distance measured.
    pub fn kind(&self) -> DistanceKind {
        match self.metric {
            Metric::Euclidean => DistanceKind::Euclidean,
            Metric::Energy(_) => DistanceKind::Energy,
            Metric::Relative(_) => DistanceKind::Relative,
        }
    }

    /// The reference point.
    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    /// Distance from the reference to `x`.
    ///
    /// Panics if `x` has a different dimension than the reference.
    pub fn distance(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.reference.len(), "state dimension mismatch");
        match &self.metric {
            Metric::Euclidean => {
                let ss: f64 = x.iter().zip(&self.reference).map(|(a, b)| (a - b) * (a - b)).sum();
                libm::sqrt(ss)
            }
            Metric::Relative(scale) => {
                let ss: f64 = x
                    .iter()
                    .zip(&self.reference)
                    .zip(scale)
                    .map(|((a, b), s)| {
                        let r = (a - b) / s;
                        r * r
                    })
                    .sum();
                libm::sqrt(ss)
            }
            Metric::Energy(p) => {
                let kinetic = 0.5 * p.mass * x[1] * x[1];
                p.potential_work(self.reference[0], x[0]) + kinetic
            }
        }
    }
}
