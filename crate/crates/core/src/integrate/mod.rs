//! Adaptive integration of perturbed trajectories with event detection, and
//! classification of each trajectory as safe, unsafe or undetermined.
//!
//! Events are checked on the dense output of every accepted step. Each
//! predicate is sampled at [`EVENT_SAMPLES`] interior points and the first
//! change is refined by bisection to [`EVENT_TIME_TOL`]. The events are, in
//! priority order at equal times: entering an unsafe region or leaving the
//! state domain, an irreversible regime switch, entering the capture
//! neighbourhood and (while dwelling) leaving it again.

mod dopri;

use alloc::vec::Vec;

pub use dopri::{AcceptedStep, StepFailure, Stepper, Tolerances};

use crate::attractor::AttractorSpec;
use crate::error::{config, Result};
use crate::system::{DynamicalSystem, Regime};

/// Time resolution of located events.
pub const EVENT_TIME_TOL: f64 = 1e-6;
/// Dense-output samples per accepted step used to detect brief crossings.
pub const EVENT_SAMPLES: usize = 8;

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Relative tolerance.
    pub rel_tol: f64,
    /// Absolute tolerance.
    pub abs_tol: f64,
    /// First trial step.
    pub initial_step: f64,
    /// Largest step.
    pub max_step: f64,
    /// Integration budget in model time.
    pub t_max: f64,
    /// Budget in accepted steps.
    pub max_steps: u64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-3, abs_tol: 1e-6, initial_step: 1e-2, max_step: 0.1, t_max: 500.0, max_steps: 1_000_000 }
    }
}

impl IntegratorConfig {
    /// Checks the invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(config("tolerances must be positive"));
        }
        if !(self.initial_step > 0.0 && self.initial_step <= self.max_step) {
            return Err(config("need 0 < initial_step <= max_step"));
        }
        if !(self.t_max > 0.0) || self.max_steps == 0 {
            return Err(config("t_max and max_steps must be positive"));
        }
        Ok(())
    }

    /// Same settings with both tolerances divided by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self { rel_tol: self.rel_tol / factor, abs_tol: self.abs_tol / factor, ..*self }
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances { rel_tol: self.rel_tol, abs_tol: self.abs_tol, max_step: self.max_step }
    }
}

/// Classification of one perturbed trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    /// Returned to the attractor.
    Safe,
    /// Entered an unsafe region, left the domain or diverged.
    Unsafe,
    /// Ran out of time or step budget (or the step size underflowed).
    Undetermined,
}

impl Verdict {
    /// Name used in files.
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Safe => "safe",
            Verdict::Unsafe => "unsafe",
            Verdict::Undetermined => "undetermined",
        }
    }
}

impl core::str::FromStr for Verdict {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "safe" => Ok(Verdict::Safe),
            "unsafe" => Ok(Verdict::Unsafe),
            "undetermined" => Ok(Verdict::Undetermined),
            other => Err(config(alloc::format!("unknown verdict '{other}'"))),
        }
    }
}

/// Result of integrating one initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOutcome {
    /// The tested initial condition.
    pub initial_condition: Vec<f64>,
    /// Verdict.
    pub verdict: Verdict,
    /// Return time, present exactly when the verdict is [`Verdict::Safe`].
    pub return_time: Option<f64>,
    /// State where integration stopped.
    pub terminal_state: Vec<f64>,
    /// Accepted steps.
    pub steps_taken: u64,
}

impl TrajectoryOutcome {
    /// Builds an outcome, enforcing that only safe outcomes carry a return time.
    pub fn new(
        initial_condition: Vec<f64>,
        verdict: Verdict,
        return_time: Option<f64>,
        terminal_state: Vec<f64>,
        steps_taken: u64,
    ) -> Result<Self> {
        match (verdict, return_time) {
            (Verdict::Safe, Some(t)) if t >= 0.0 => {}
            (Verdict::Safe, _) => return Err(config("a safe outcome needs a non-negative return time")),
            (_, Some(_)) => return Err(config("only safe outcomes carry a return time")),
            _ => {}
        }
        Ok(Self { initial_condition, verdict, return_time, terminal_state, steps_taken })
    }

    /// Whether the trajectory returned.
    pub fn is_safe(&self) -> bool {
        self.verdict == Verdict::Safe
    }
}

/// Integrates `sys` from `(0, x0)` to `t_end` in the initial regime without events.
pub fn integrate_to<S: DynamicalSystem + ?Sized>(
    sys: &S,
    x0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> core::result::Result<Vec<f64>, StepFailure> {
    let mut stepper = Stepper::new(x0.len(), cfg.tolerances());
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let mut h = cfg.initial_step;
    while t < t_end {
        let last = t + h >= t_end;
        let trial = if last { t_end - t } else { h };
        let step = stepper.step(sys, Regime::INITIAL, t, &x, trial)?;
        t = if last && step.h == trial { t_end } else { step.t1() };
        x = step.x1;
        h = step.h_next;
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Lost,
    Switch,
    Enter,
    Leave,
}

struct Scanner<'a, S: ?Sized> {
    sys: &'a S,
    attractor: &'a AttractorSpec,
    buf: Vec<f64>,
}

impl<S: DynamicalSystem + ?Sized> Scanner<'_, S> {
    fn lost(&self, x: &[f64]) -> bool {
        !self.sys.in_domain(x) || self.attractor.is_unsafe(x)
    }

    fn holds(&self, kind: EventKind, regime: Regime, x: &[f64]) -> bool {
        match kind {
            EventKind::Lost => self.lost(x),
            EventKind::Switch => self.sys.switching(regime, x).is_some_and(|s| s.value >= 0.0),
            EventKind::Enter => self.attractor.captures(x),
            EventKind::Leave => !self.attractor.captures(x),
        }
    }

    /// First time in `(t0, t1]` at which `kind` holds, given it does not hold at `t0`.
    fn first(&mut self, step: &AcceptedStep, kind: EventKind, regime: Regime) -> Option<f64> {
        let mut buf = core::mem::take(&mut self.buf);
        let mut prev = 0.0;
        let mut found = None;
        for j in 1..=EVENT_SAMPLES {
            let theta = j as f64 / EVENT_SAMPLES as f64;
            step.dense_into(theta, &mut buf);
            if self.holds(kind, regime, &buf) {
                found = Some((prev, theta));
                break;
            }
            prev = theta;
        }
        let result = found.map(|(lo, hi)| {
            let (mut lo, mut hi) = (step.t0 + lo * step.h, step.t0 + hi * step.h);
            while hi - lo > EVENT_TIME_TOL {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                step.dense_at(mid, &mut buf);
                if self.holds(kind, regime, &buf) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        });
        self.buf = buf;
        result
    }
}

/// Integrates the perturbed trajectory starting at `ic` and classifies it.
///
/// The trajectory is safe once it has entered the capture neighbourhood and
/// stayed there for the attractor's dwell time. The return time is the last
/// entry before that dwell interval. Entering an unsafe region, leaving the
/// model domain or producing non-finite values makes it unsafe; running out
/// of `t_max`, `max_steps` or step size leaves it undetermined.
pub fn classify<S: DynamicalSystem + ?Sized>(
    sys: &S,
    attractor: &AttractorSpec,
    ic: &[f64],
    cfg: &IntegratorConfig,
) -> TrajectoryOutcome {
    let finish = |verdict, return_time, terminal: &[f64], steps| TrajectoryOutcome {
        initial_condition: ic.to_vec(),
        verdict,
        return_time,
        terminal_state: terminal.to_vec(),
        steps_taken: steps,
    };
    let n = sys.dim();
    let mut scanner = Scanner { sys, attractor, buf: alloc::vec![0.0; n] };
    if ic.len() != n || !ic.iter().all(|v| v.is_finite()) || scanner.lost(ic) {
        return finish(Verdict::Unsafe, None, ic, 0);
    }
    let dwell = attractor.dwell_time();
    let mut regime = Regime::INITIAL;
    // Switches already satisfied at t = 0 fire immediately.
    for _ in 0..u8::MAX {
        match sys.switching(regime, ic) {
            Some(s) if s.value >= 0.0 => regime = s.next,
            _ => break,
        }
    }
    let mut entry = if attractor.captures(ic) { Some(0.0) } else { None };
    if entry.is_some() && dwell == 0.0 {
        return finish(Verdict::Safe, Some(0.0), ic, 0);
    }

    let mut stepper = Stepper::new(n, cfg.tolerances());
    let mut t = 0.0;
    let mut x = ic.to_vec();
    let mut h = cfg.initial_step;
    let mut steps = 0u64;
    loop {
        if let Some(te) = entry {
            if t >= te + dwell {
                return finish(Verdict::Safe, Some(te), &x, steps);
            }
        }
        if t >= cfg.t_max || steps >= cfg.max_steps {
            return finish(Verdict::Undetermined, None, &x, steps);
        }
        let remaining = cfg.t_max - t;
        let trial = h.min(remaining);
        let step = match stepper.step(sys, regime, t, &x, trial) {
            Ok(s) => s,
            Err(StepFailure::NonFinite) => return finish(Verdict::Unsafe, None, &x, steps),
            Err(StepFailure::StepUnderflow) => return finish(Verdict::Undetermined, None, &x, steps),
        };
        steps += 1;

        let mut events: [(EventKind, Option<f64>); 3] = [
            (EventKind::Lost, scanner.first(&step, EventKind::Lost, regime)),
            (EventKind::Switch, None),
            (EventKind::Enter, None),
        ];
        if sys.switching(regime, &x).is_some() {
            events[1].1 = scanner.first(&step, EventKind::Switch, regime);
        }
        events[2] = if entry.is_none() {
            (EventKind::Enter, scanner.first(&step, EventKind::Enter, regime))
        } else {
            (EventKind::Leave, scanner.first(&step, EventKind::Leave, regime))
        };
        let earliest = events
            .iter()
            .filter_map(|(k, te)| te.map(|te| (te, *k)))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        // A dwell interval that completes inside this step, before any event, is a return.
        if let Some(te) = entry {
            let done_at = te + dwell;
            if done_at <= step.t1() && earliest.is_none_or(|(ev, _)| ev > done_at) {
                let mut xs = alloc::vec![0.0; n];
                step.dense_at(done_at, &mut xs);
                return finish(Verdict::Safe, Some(te), &xs, steps);
            }
        }

        match earliest {
            None => {
                t = if step.h >= remaining { cfg.t_max } else { step.t1() };
                x = step.x1;
                h = step.h_next;
            }
            Some((te, kind)) => {
                let mut xe = alloc::vec![0.0; n];
                step.dense_at(te, &mut xe);
                match kind {
                    EventKind::Lost => return finish(Verdict::Unsafe, None, &xe, steps),
                    EventKind::Enter if dwell == 0.0 => return finish(Verdict::Safe, Some(te), &xe, steps),
                    EventKind::Enter => entry = Some(te),
                    EventKind::Leave => entry = None,
                    EventKind::Switch => {
                        if let Some(s) = sys.switching(regime, &xe) {
                            regime = s.next;
                        }
                    }
                }
                // Restart from the event point.
                t = te;
                x = xe;
                h = step.h.max(cfg.initial_step.min(step.h_next));
                stepper.reset();
            }
        }
    }
}
