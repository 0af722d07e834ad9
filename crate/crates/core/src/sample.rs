//! Perturbation sets: truncated multivariate normal draws around the attractor,
//! and the restricted subset used for the worst-case return rate.
//!
//! Sample `k` is drawn from its own ChaCha8 stream (`seed_from_u64(seed)`,
//! stream `k`), so it does not depend on how many other samples are drawn or
//! on the order in which they are generated.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{config, Result};

/// Name of the generator, recorded in output metadata.
pub const RNG_NAME: &str = "ChaCha8Rng(seed_from_u64(seed), stream = sample index)";

/// Attempts allowed for a single sample before the plan is declared
/// incompatible with its domain.
pub const MAX_ATTEMPTS: u64 = 1_000_000;

/// How to draw the initial conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationPlan {
    /// Mean of the normal distribution (the attractor).
    pub center: Vec<f64>,
    /// Per-component standard deviation.
    pub std: Vec<f64>,
    /// Number of samples.
    pub count: usize,
    /// RNG seed.
    pub seed: u64,
    /// Components held at the centre value.
    pub frozen_dims: Vec<usize>,
}

impl PerturbationPlan {
    /// Plan without frozen components.
    pub fn new(center: Vec<f64>, std: Vec<f64>, count: usize, seed: u64) -> Self {
        Self { center, std, count, seed, frozen_dims: Vec::new() }
    }

    /// Freezes the given components at the centre value.
    pub fn freeze(mut self, dims: &[usize]) -> Self {
        self.frozen_dims.extend_from_slice(dims);
        self.frozen_dims.sort_unstable();
        self.frozen_dims.dedup();
        self
    }

    /// Checks the invariants.
    pub fn validate(&self) -> Result<()> {
        if self.center.is_empty() || self.center.len() != self.std.len() {
            return Err(config("plan centre and std must be non-empty and of equal length"));
        }
        if self.std.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(config("standard deviations must be finite and non-negative"));
        }
        if self.count == 0 {
            return Err(config("sample count must be at least 1"));
        }
        if let Some(d) = self.frozen_dims.iter().find(|d| **d >= self.center.len()) {
            return Err(config(format!("frozen dimension {d} out of range")));
        }
        Ok(())
    }

    /// Draws sample `index`, redrawing until `accept` holds.
    pub fn draw_one<F: Fn(&[f64]) -> bool>(&self, index: usize, accept: &F) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let mut x = self.center.clone();
        for _ in 0..MAX_ATTEMPTS {
            for (i, xi) in x.iter_mut().enumerate() {
                if self.frozen_dims.binary_search(&i).is_ok() {
                    continue;
                }
                let z: f64 = StandardNormal.sample(&mut rng);
                *xi = self.center[i] + self.std[i] * z;
            }
            if accept(&x) {
                return Ok(x);
            }
        }
        Err(config(format!(
            "no admissible perturbation for sample {index} after {MAX_ATTEMPTS} attempts; \
             the distribution is incompatible with the domain"
        )))
    }

    /// Draws all `count` samples in index order.
    pub fn draw<F: Fn(&[f64]) -> bool>(&self, accept: F) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        (0..self.count).map(|k| self.draw_one(k, &accept)).collect()
    }
}

/// Ellipsoidal subset `sum(((x_i - c_i) / s_i)^2) <= radius_sq` of the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedSet {
    /// Centre `c`.
    pub center: Vec<f64>,
    /// Per-component scale `s`.
    pub scale: Vec<f64>,
    /// Right-hand side of the membership inequality.
    pub radius_sq: f64,
}

impl RestrictedSet {
    /// Checked constructor.
    pub fn new(center: Vec<f64>, scale: Vec<f64>, radius_sq: f64) -> Result<Self> {
        if center.len() != scale.len() || scale.iter().any(|s| !(*s > 0.0)) {
            return Err(config("restricted-set scale must be positive and match the centre"));
        }
        if !(radius_sq > 0.0) {
            return Err(config("restricted-set radius must be positive"));
        }
        Ok(Self { center, scale, radius_sq })
    }

    /// Ellipsoid scaled by the centre itself (relative perturbations).
    pub fn relative(center: Vec<f64>, radius_sq: f64) -> Result<Self> {
        let scale = center.clone();
        Self::new(center, scale, radius_sq)
    }

    /// Membership test.
    pub fn contains(&self, x: &[f64]) -> bool {
        let ss: f64 = x
            .iter()
            .zip(&self.center)
            .zip(&self.scale)
            .map(|((a, c), s)| {
                let r = (a - c) / s;
                r * r
            })
            .sum();
        ss <= self.radius_sq
    }

    /// The samples inside the set, in their original order.
    pub fn restrict<'a>(&self, samples: &'a [Vec<f64>]) -> Vec<&'a Vec<f64>> {
        samples.iter().filter(|x| self.contains(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand_core::RngCore;

    #[test]
    fn zero_std_copies_centre() {
        let plan = PerturbationPlan::new(vec![1.0, 2.0], vec![0.0, 0.0], 5, 9);
        let s = plan.draw(|_| true).unwrap();
        assert_eq!(s, vec![vec![1.0, 2.0]; 5]);
    }

    #[test]
    fn same_seed_same_samples() {
        let plan = PerturbationPlan::new(vec![1.0, 1.0], vec![0.5, 0.5], 200, 42);
        let pos = |x: &[f64]| x.iter().all(|v| *v > 0.0);
        let a = plan.draw(pos).unwrap();
        let b = plan.draw(pos).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|x| pos(x)));
        let other = PerturbationPlan { seed: 43, ..plan.clone() }.draw(pos).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn kth_sample_independent_of_count() {
        let small = PerturbationPlan::new(vec![0.0; 3], vec![1.0; 3], 10, 7);
        let big = PerturbationPlan { count: 1000, ..small.clone() };
        let a = small.draw(|_| true).unwrap();
        let b = big.draw(|_| true).unwrap();
        assert_eq!(&a[..], &b[..10]);
        assert_eq!(big.draw_one(500, &|_: &[f64]| true).unwrap(), b[500]);
    }

    #[test]
    fn frozen_dims_stay_put() {
        let plan = PerturbationPlan::new(vec![1.0, 2.0, 3.0], vec![1.0; 3], 300, 1).freeze(&[2]);
        for x in plan.draw(|_| true).unwrap() {
            assert_eq!(x[2], 3.0);
        }
    }

    #[test]
    fn incompatible_domain_is_config_error() {
        let plan = PerturbationPlan::new(vec![0.0], vec![1.0], 1, 1);
        assert!(matches!(plan.draw(|x| x[0] > 100.0), Err(crate::Error::Config(_))));
    }

    #[test]
    fn invalid_plans() {
        assert!(PerturbationPlan::new(vec![0.0], vec![-1.0], 1, 1).validate().is_err());
        assert!(PerturbationPlan::new(vec![0.0], vec![1.0], 0, 1).validate().is_err());
        assert!(PerturbationPlan::new(vec![0.0], vec![1.0], 1, 1).freeze(&[1]).validate().is_err());
    }

    #[test]
    fn restrict_membership() {
        let set = RestrictedSet::new(vec![1.0; 3], vec![1.0; 3], 0.25).unwrap();
        let samples = vec![vec![1.4, 1.0, 1.0], vec![1.6, 1.0, 1.0], vec![1.0, 1.0, 0.6]];
        let kept = set.restrict(&samples);
        assert_eq!(kept, vec![&samples[0], &samples[2]]);
        assert!(set.restrict(&[]).is_empty());
    }

    #[test]
    fn restrict_volume_fraction() {
        // Uniform points on [0, 2]^3: the kept share tends to (4 pi / 3)(1/2)^3 / 8.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<Vec<f64>> = (0..100_000)
            .map(|_| (0..3).map(|_| 2.0 * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64).collect())
            .collect();
        let set = RestrictedSet::new(vec![1.0; 3], vec![1.0; 3], 0.25).unwrap();
        let frac = set.restrict(&samples).len() as f64 / samples.len() as f64;
        let exact = 4.0 * core::f64::consts::PI / 3.0 * 0.125 / 8.0;
        assert!((exact - 0.0654).abs() < 1e-4);
        assert!((frac - exact).abs() < 0.005, "{frac}");
    }
}
