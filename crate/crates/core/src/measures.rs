//! Stability and resilience estimators over one set of trajectory outcomes,
//! plus the local eigenvalue baseline.
//!
//! Undetermined outcomes are treated as not returning in every estimator, and
//! are counted separately in [`MeasureReport`].

use alloc::vec::Vec;

use crate::distance::{DistanceKind, DistanceSpec};
use crate::error::{usage, Result};
use crate::integrate::{TrajectoryOutcome, Verdict};
use crate::linalg::{self, Eigenvalue};
use crate::sample::RestrictedSet;
use crate::system::DynamicalSystem;

/// Relative finite-difference step for Jacobians.
pub const JACOBIAN_STEP: f64 = 1e-6;
/// Largest equilibrium residual accepted by [`lambda_max`].
pub const EQUILIBRIUM_RESIDUAL_TOL: f64 = 1e-8;

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    /// Adds `v`.
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if libm::fabs(self.sum) >= libm::fabs(v) {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    /// Current total.
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// A proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    /// Estimate.
    pub value: f64,
    /// `sqrt(p (1 - p) / n)`.
    pub std_err: f64,
}

impl Proportion {
    fn of(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        Self { value: p, std_err: libm::sqrt(p * (1.0 - p) / n as f64) }
    }
}

/// Smallest distance over a set of initial conditions, with the minimiser.
#[derive(Debug, Clone, PartialEq)]
pub struct MinDistance {
    /// Minimum distance.
    pub value: f64,
    /// Index of the minimising outcome.
    pub index: usize,
    /// The minimising initial condition (the most critical perturbation direction).
    pub initial_condition: Vec<f64>,
}

fn min_distance<'a, I>(outcomes: I, dist: &DistanceSpec) -> Option<MinDistance>
where
    I: Iterator<Item = (usize, &'a TrajectoryOutcome)>,
{
    let mut best: Option<(f64, usize)> = None;
    for (i, o) in outcomes {
        let d = dist.distance(&o.initial_condition);
        if best.is_none_or(|(b, _)| d < b) {
            best = Some((d, i));
        }
    }
    best.map(|(value, index)| MinDistance { value, index, initial_condition: Vec::new() })
}

fn with_ic(m: Option<MinDistance>, outcomes: &[TrajectoryOutcome]) -> Option<MinDistance> {
    m.map(|mut m| {
        m.initial_condition = outcomes[m.index].initial_condition.clone();
        m
    })
}

/// Basin stability: share of outcomes that returned.
pub fn estimate_p(outcomes: &[TrajectoryOutcome]) -> Result<Proportion> {
    if outcomes.is_empty() {
        return Err(usage("cannot estimate P from an empty outcome set"));
    }
    Ok(Proportion::of(outcomes.iter().filter(|o| o.is_safe()).count(), outcomes.len()))
}

/// Smallest distance to a non-returning initial condition, if there is one.
pub fn estimate_d(outcomes: &[TrajectoryOutcome], dist: &DistanceSpec) -> Option<MinDistance> {
    let m = min_distance(outcomes.iter().enumerate().filter(|(_, o)| !o.is_safe()), dist);
    with_ic(m, outcomes)
}

/// Mean return rate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    /// `(1 / n) sum_safe 1 / (T + t_eps)`.
    pub value: f64,
    /// Standard error of that mean.
    pub std_err: f64,
}

fn return_rate(o: &TrajectoryOutcome, t_eps: f64) -> f64 {
    match (o.verdict, o.return_time) {
        (Verdict::Safe, Some(t)) => 1.0 / (t + t_eps),
        _ => 0.0,
    }
}

fn check_t_eps(t_eps: f64) -> Result<()> {
    if t_eps > 0.0 && t_eps.is_finite() {
        Ok(())
    } else {
        Err(usage("t_eps must be positive"))
    }
}

/// Expected return rate; non-returning outcomes contribute zero.
pub fn estimate_r(outcomes: &[TrajectoryOutcome], t_eps: f64) -> Result<Rate> {
    check_t_eps(t_eps)?;
    if outcomes.is_empty() {
        return Err(usage("cannot estimate R from an empty outcome set"));
    }
    let n = outcomes.len() as f64;
    let mut sum = CompensatedSum::default();
    for o in outcomes {
        sum.add(return_rate(o, t_eps));
    }
    let mean = sum.total() / n;
    let mut ss = CompensatedSum::default();
    for o in outcomes {
        let d = return_rate(o, t_eps) - mean;
        ss.add(d * d);
    }
    let std_err = if outcomes.len() > 1 { libm::sqrt(ss.total() / (n - 1.0) / n) } else { 0.0 };
    Ok(Rate { value: mean, std_err })
}

/// Slowest return rate over the outcomes whose initial condition lies in `set`.
///
/// Zero if any such outcome did not return; `None` if the set holds no outcome.
pub fn estimate_r_worst(outcomes: &[TrajectoryOutcome], set: &RestrictedSet, t_eps: f64) -> Result<Option<f64>> {
    check_t_eps(t_eps)?;
    let mut worst: Option<f64> = None;
    for o in outcomes.iter().filter(|o| set.contains(&o.initial_condition)) {
        let r = return_rate(o, t_eps);
        worst = Some(worst.map_or(r, |w| w.min(r)));
    }
    Ok(worst)
}

/// Basin-time measures for one horizon `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasinTime {
    /// Share of outcomes returning within `tau`.
    pub p_tau: Proportion,
    /// Smallest distance to an outcome not returning within `tau`.
    pub d_tau: Option<MinDistance>,
}

/// Whether an outcome returned within `tau`.
pub fn within(o: &TrajectoryOutcome, tau: f64) -> bool {
    o.is_safe() && o.return_time.is_some_and(|t| t <= tau)
}

/// `P^tau` and `D^tau`.
pub fn estimate_basin_time(outcomes: &[TrajectoryOutcome], tau: f64, dist: &DistanceSpec) -> Result<BasinTime> {
    if !(tau > 0.0) {
        return Err(usage("tau must be positive"));
    }
    if outcomes.is_empty() {
        return Err(usage("cannot estimate basin-time measures from an empty outcome set"));
    }
    let hits = outcomes.iter().filter(|o| within(o, tau)).count();
    let d = min_distance(outcomes.iter().enumerate().filter(|(_, o)| !within(o, tau)), dist);
    Ok(BasinTime { p_tau: Proportion::of(hits, outcomes.len()), d_tau: with_ic(d, outcomes) })
}

/// Spectrum of the Jacobian at an equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalStability {
    /// Largest real part among the eigenvalues. The local resilience is its negation.
    pub lambda_max: f64,
    /// All eigenvalues.
    pub eigenvalues: Vec<Eigenvalue>,
    /// Set when eigenvalues nearly coincide, so the value is less accurate.
    pub ill_conditioned: bool,
}

/// Largest real part of the Jacobian spectrum at `equilibrium`.
pub fn lambda_max<S: DynamicalSystem + ?Sized>(sys: &S, equilibrium: &[f64]) -> Result<LocalStability> {
    lambda_max_with_step(sys, equilibrium, JACOBIAN_STEP)
}

/// [`lambda_max`] with a custom finite-difference step scale.
pub fn lambda_max_with_step<S: DynamicalSystem + ?Sized>(
    sys: &S,
    equilibrium: &[f64],
    h_scale: f64,
) -> Result<LocalStability> {
    if equilibrium.len() != sys.dim() {
        return Err(usage("equilibrium dimension does not match the system"));
    }
    let residual = sys.eval(0.0, equilibrium);
    if let Some(r) = residual.iter().find(|r| !(libm::fabs(**r) < EQUILIBRIUM_RESIDUAL_TOL)) {
        return Err(usage(alloc::format!("not an equilibrium: residual component {r:e}")));
    }
    let eigenvalues = linalg::jacobian(sys, equilibrium, h_scale).eigenvalues();
    let lambda_max = eigenvalues.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    let ill_conditioned = linalg::nearly_repeated(&eigenvalues);
    Ok(LocalStability { lambda_max, eigenvalues, ill_conditioned })
}

/// Estimator settings shared by all measures at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureParams {
    /// Basin-time horizon.
    pub tau: f64,
    /// Return-time regulariser.
    pub t_eps: f64,
    /// Restricted set for the worst-case rate; `None` skips that measure.
    pub restricted: Option<RestrictedSet>,
}

impl Default for MeasureParams {
    fn default() -> Self {
        Self { tau: 5.0, t_eps: 1.0, restricted: None }
    }
}

/// Every estimator for one outcome set.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    /// Basin stability.
    pub p_hat: f64,
    /// Binomial standard error of `p_hat`.
    pub p_std_err: f64,
    /// Smallest non-returning perturbation.
    pub d_hat: Option<MinDistance>,
    /// Distance used for `d_hat` and `d_tau`.
    pub d_norm_kind: DistanceKind,
    /// Mean return rate.
    pub r_hat: f64,
    /// Standard error of `r_hat`.
    pub r_std_err: f64,
    /// Slowest return rate over the restricted set.
    pub r_worst: Option<f64>,
    /// Share returning within `tau`.
    pub p_tau: f64,
    /// Binomial standard error of `p_tau`.
    pub p_tau_std_err: f64,
    /// Smallest perturbation not returning within `tau`.
    pub d_tau: Option<MinDistance>,
    /// Basin-time horizon.
    pub tau: f64,
    /// Return-time regulariser.
    pub t_eps: f64,
    /// Largest real part of the Jacobian spectrum, when an equilibrium is known.
    pub lambda_max: Option<f64>,
    /// Returned.
    pub n_safe: usize,
    /// Lost.
    pub n_unsafe: usize,
    /// Out of budget.
    pub n_undetermined: usize,
    /// Total.
    pub n_tot: usize,
}

impl MeasureReport {
    /// Computes all estimators from one outcome set.
    pub fn compute(
        outcomes: &[TrajectoryOutcome],
        dist: &DistanceSpec,
        params: &MeasureParams,
        local: Option<&LocalStability>,
    ) -> Result<Self> {
        let p = estimate_p(outcomes)?;
        let r = estimate_r(outcomes, params.t_eps)?;
        let bt = estimate_basin_time(outcomes, params.tau, dist)?;
        let r_worst = match &params.restricted {
            Some(set) => estimate_r_worst(outcomes, set, params.t_eps)?,
            None => None,
        };
        let count = |v: Verdict| outcomes.iter().filter(|o| o.verdict == v).count();
        Ok(Self {
            p_hat: p.value,
            p_std_err: p.std_err,
            d_hat: estimate_d(outcomes, dist),
            d_norm_kind: dist.kind(),
            r_hat: r.value,
            r_std_err: r.std_err,
            r_worst,
            p_tau: bt.p_tau.value,
            p_tau_std_err: bt.p_tau.std_err,
            d_tau: bt.d_tau,
            tau: params.tau,
            t_eps: params.t_eps,
            lambda_max: local.map(|l| l.lambda_max),
            n_safe: count(Verdict::Safe),
            n_unsafe: count(Verdict::Unsafe),
            n_undetermined: count(Verdict::Undetermined),
            n_tot: outcomes.len(),
        })
    }

    /// `-lambda_max`, the local resilience baseline.
    pub fn local_resilience(&self) -> Option<f64> {
        self.lambda_max.map(|l| -l)
    }
}

#[cfg(test)]
mod tests;
