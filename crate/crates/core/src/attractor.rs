//! What it means for a trajectory to have returned, or to have been lost.

use alloc::vec::Vec;

use crate::error::{config, Result};

/// Norm used for the capture neighbourhood.
#[derive(Debug, Clone, PartialEq)]
pub enum CaptureNorm {
    /// Euclidean ball.
    Euclidean,
    /// Ellipsoid `sum(((x_i - c_i) / s_i)^2) <= r^2` with per-component scale `s`.
    RelativeEllipsoid(Vec<f64>),
}

/// A region of state space that counts as "lost" the moment it is entered.
#[derive(Debug, Clone, PartialEq)]
pub enum UnsafeRegion {
    /// `x[dim] > threshold`.
    Above {
        /// Component index.
        dim: usize,
        /// Bound.
        threshold: f64,
    },
    /// `x[dim] < threshold`.
    Below {
        /// Component index.
        dim: usize,
        /// Bound.
        threshold: f64,
    },
    /// Closed Euclidean ball, typically around a competing attractor.
    Ball {
        /// Centre.
        center: Vec<f64>,
        /// Radius.
        radius: f64,
    },
}

impl UnsafeRegion {
    /// Membership test.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            UnsafeRegion::Above { dim, threshold } => x[*dim] > *threshold,
            UnsafeRegion::Below { dim, threshold } => x[*dim] < *threshold,
            UnsafeRegion::Ball { center, radius } => {
                let ss: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                ss <= radius * radius
            }
        }
    }
}

/// The attractor under study and its capture neighbourhood.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractorSpec {
    center: Vec<f64>,
    capture_radius: f64,
    capture_norm: CaptureNorm,
    dwell_time: f64,
    unsafe_regions: Vec<UnsafeRegion>,
}

impl AttractorSpec {
    /// Equilibrium-style attractor: Euclidean capture ball, no dwell, no unsafe set.
    pub fn ball(center: Vec<f64>, capture_radius: f64) -> Result<Self> {
        Self::new(center, capture_radius, CaptureNorm::Euclidean, 0.0, Vec::new())
    }

    /// Fully specified attractor; checks every invariant.
    pub fn new(
        center: Vec<f64>,
        capture_radius: f64,
        capture_norm: CaptureNorm,
        dwell_time: f64,
        unsafe_regions: Vec<UnsafeRegion>,
    ) -> Result<Self> {
        if center.is_empty() || center.iter().any(|v| !v.is_finite()) {
            return Err(config("attractor centre must be a finite, non-empty vector"));
        }
        if !(capture_radius > 0.0) || !capture_radius.is_finite() {
            return Err(config("capture radius must be positive"));
        }
        if !(dwell_time >= 0.0) || !dwell_time.is_finite() {
            return Err(config("dwell time must be non-negative"));
        }
        if let CaptureNorm::RelativeEllipsoid(scale) = &capture_norm {
            if scale.len() != center.len() || scale.iter().any(|s| !(*s > 0.0)) {
                return Err(config("capture ellipsoid scale must be positive and match the centre"));
            }
        }
        for region in &unsafe_regions {
            match region {
                UnsafeRegion::Above { dim, .. } | UnsafeRegion::Below { dim, .. } if *dim >= center.len() => {
                    return Err(config("unsafe region refers to a missing state component"));
                }
                UnsafeRegion::Ball { center: c, .. } if c.len() != center.len() => {
                    return Err(config("unsafe ball dimension does not match the attractor"));
                }
                _ => {}
            }
            if region.contains(&center) {
                return Err(config("attractor centre lies inside an unsafe region"));
            }
        }
        Ok(Self { center, capture_radius, capture_norm, dwell_time, unsafe_regions })
    }

    /// Replaces the dwell time.
    pub fn with_dwell_time(mut self, dwell_time: f64) -> Result<Self> {
        if !(dwell_time >= 0.0) || !dwell_time.is_finite() {
            return Err(config("dwell time must be non-negative"));
        }
        self.dwell_time = dwell_time;
        Ok(self)
    }

    /// Adds an unsafe region.
    pub fn with_unsafe(self, region: UnsafeRegion) -> Result<Self> {
        let mut regions = self.unsafe_regions;
        regions.push(region);
        Self::new(self.center, self.capture_radius, self.capture_norm, self.dwell_time, regions)
    }

    /// Reference point of the attractor.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Capture radius `r`.
    pub fn capture_radius(&self) -> f64 {
        self.capture_radius
    }

    /// Capture norm.
    pub fn capture_norm(&self) -> &CaptureNorm {
        &self.capture_norm
    }

    /// Required dwell time inside the capture neighbourhood.
    pub fn dwell_time(&self) -> f64 {
        self.dwell_time
    }

    /// Unsafe regions.
    pub fn unsafe_regions(&self) -> &[UnsafeRegion] {
        &self.unsafe_regions
    }

    /// Capture-norm distance of `x` from the centre.
    pub fn capture_distance(&self, x: &[f64]) -> f64 {
        let ss: f64 = match &self.capture_norm {
            CaptureNorm::Euclidean => x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum(),
            CaptureNorm::RelativeEllipsoid(s) => x
                .iter()
                .zip(&self.center)
                .zip(s)
                .map(|((a, b), s)| {
                    let r = (a - b) / s;
                    r * r
                })
                .sum(),
        };
        libm::sqrt(ss)
    }

    /// Whether `x` lies in the closed capture neighbourhood.
    pub fn captures(&self, x: &[f64]) -> bool {
        self.capture_distance(x) <= self.capture_radius
    }

    /// Whether `x` lies in any unsafe region.
    pub fn is_unsafe(&self, x: &[f64]) -> bool {
        self.unsafe_regions.iter().any(|r| r.contains(x))
    }
}

/// Default dwell time for a small non-equilibrium attractor with the given
/// characteristic period.
pub fn dwell_time_for_period(period: f64) -> f64 {
    10.0 * period
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn invariants_are_checked() {
        assert!(AttractorSpec::ball(vec![0.0], 0.0).is_err());
        assert!(AttractorSpec::ball(vec![0.0], 0.1).unwrap().with_dwell_time(-1.0).is_err());
        let unsafe_at_center = UnsafeRegion::Below { dim: 0, threshold: 1.0 };
        assert!(AttractorSpec::ball(vec![0.0], 0.1).unwrap().with_unsafe(unsafe_at_center).is_err());
        assert!(AttractorSpec::ball(vec![0.0], 0.1)
            .unwrap()
            .with_unsafe(UnsafeRegion::Above { dim: 3, threshold: 1.0 })
            .is_err());
    }

    #[test]
    fn ellipsoid_capture() {
        let a = AttractorSpec::new(vec![2.0, 1.0], 0.1, CaptureNorm::RelativeEllipsoid(vec![2.0, 1.0]), 0.0, vec![])
            .unwrap();
        assert!(a.captures(&[2.19, 1.0]));
        assert!(!a.captures(&[2.21, 1.0]));
        assert!(!a.captures(&[2.0, 1.11]));
    }
}
