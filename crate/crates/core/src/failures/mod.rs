//! Failure modes: occurrence automata, rate discretization and the
//! per-demand integration transformation.

mod check;
mod inject;

pub use check::{check_conservative, demand_gating_holds, in_partition_holds, CONSERVATIVE_CAP};
pub use inject::{demand_states, inject_all, inject_per_demand, Injection, MergedState};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{Automaton, AutomatonKind, PredicateExpr, SystemModel, TimeStep, Transition};
use crate::scalar::Probability;

/// Local state index of `no` in every failure automaton.
pub const NO: usize = 0;
/// Local state index of `yes` in every failure automaton.
pub const YES: usize = 1;

/// State-space label marking states where the failure mode is active.
pub fn occurrence_label(name: &str) -> String {
    format!("failure:{name}")
}

/// What happens after a per-time failure has occurred.
#[derive(Debug, Clone, PartialEq)]
pub enum Recovery {
    /// `yes` is absorbing.
    Latching,
    /// The failure is redrawn every step: active with probability `p`,
    /// independent of the previous step.
    Memoryless,
    /// Leaves `yes` with the step probability of the given rate.
    Repair { rate_per_hour: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FailurePattern {
    Persistent,
    Transient,
    PerTime { rate_per_hour: f64, recovery: Recovery },
    PerDemand { probability: f64, demand: PredicateExpr },
}

impl FailurePattern {
    pub fn is_per_demand(&self) -> bool {
        matches!(self, FailurePattern::PerDemand { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureModeDecl {
    pub name: String,
    pub pattern: FailurePattern,
    /// Index of this mode's failure automaton in [`SystemModel::automata`].
    pub automaton: usize,
    /// For per-demand modes, the functional automaton whose demand
    /// transitions the failure gates.
    pub affects: Option<usize>,
    /// Set once [`inject_per_demand`] has transformed the affected automaton.
    pub injection: Option<Injection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisMode {
    /// Nondeterministic occurrence, for DCCA.
    Qualitative,
    /// Per-step probabilities, for DTMC analysis.
    Probabilistic,
}

/// How failure automata are instantiated in a model.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureSetup {
    pub mode: AnalysisMode,
    /// Failure modes forced into `no` (false) or `yes` (true) forever.
    pub pins: BTreeMap<String, bool>,
}

impl FailureSetup {
    pub fn new(mode: AnalysisMode) -> Self {
        Self {
            mode,
            pins: BTreeMap::new(),
        }
    }

    pub fn pin(mut self, name: impl Into<String>, active: bool) -> Self {
        self.pins.insert(name.into(), active);
        self
    }

    /// Pins every failure mode of `model` to `active`.
    pub fn pin_all(mut self, model: &SystemModel, active: bool) -> Self {
        for f in &model.failures {
            self.pins.insert(f.name.clone(), active);
        }
        self
    }
}

/// Per-step failure probability `λ·δt` for a rate given per hour.
pub fn rate_to_step_probability(rate_per_hour: f64, dt: TimeStep) -> Result<f64> {
    if !(rate_per_hour >= 0.0 && rate_per_hour.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid rate {rate_per_hour}/h")));
    }
    let p = rate_per_hour / 3600.0 * dt.seconds();
    if p >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "rate {rate_per_hour}/h at time step {} s gives step probability {p} >= 1",
            dt.seconds()
        )));
    }
    Ok(p)
}

/// `1 - (1 - p)^k`, evaluated as `-expm1(k * log1p(-p))`.
pub fn geometric_cdf<P: Probability>(p: P, k: u64) -> P {
    if p >= P::one() {
        return if k == 0 { P::zero() } else { P::one() };
    }
    let k = P::from_u64(k).expect("step count representable");
    -(k * (-p).ln_1p()).exp_m1()
}

/// Exponential CDF `1 - exp(-λt)`.
pub fn exponential_cdf(rate_per_hour: f64, t_hours: f64) -> f64 {
    -(-rate_per_hour * t_hours).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproximationError {
    pub steps: u64,
    /// Time actually evaluated, `steps * δt`, in hours.
    pub t_hours: f64,
    pub exp_cdf: f64,
    pub geom_cdf: f64,
    pub absolute: f64,
    /// `None` at `t = 0`.
    pub relative: Option<f64>,
}

/// Compares the exponential CDF at `t` with its per-step geometric
/// discretization. `t` is rounded to the nearest multiple of `δt`.
pub fn approximation_error(rate_per_hour: f64, dt: TimeStep, t_hours: f64) -> Result<ApproximationError> {
    if !(t_hours >= 0.0 && t_hours.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid time {t_hours} h")));
    }
    let p = rate_to_step_probability(rate_per_hour, dt)?;
    let steps = (t_hours * 3600.0 / dt.seconds()).round() as u64;
    let t = steps as f64 * dt.seconds() / 3600.0;
    let exp_cdf = exponential_cdf(rate_per_hour, t);
    let geom_cdf = geometric_cdf(p, steps);
    let absolute = (exp_cdf - geom_cdf).abs();
    Ok(ApproximationError {
        steps,
        t_hours: t,
        exp_cdf,
        geom_cdf,
        absolute,
        relative: (exp_cdf > 0.0).then(|| absolute / exp_cdf),
    })
}

fn always() -> PredicateExpr {
    PredicateExpr::Const(true)
}

/// Keeps only branches with nonzero probability.
fn distribution(source: usize, guard: PredicateExpr, branches: &[(f64, usize)]) -> Transition {
    let kept: Vec<(f64, usize)> = branches.iter().copied().filter(|&(p, _)| p > 0.0).collect();
    Transition::distribution(source, guard, &kept)
}

/// Builds the occurrence automaton of one failure mode.
///
/// In qualitative mode the branch probabilities are placeholders (uniform);
/// only the set of successors matters. Per-demand modes are gated on their
/// demand once injected, and behave like transient failures before.
pub fn build_failure_automaton(decl: &FailureModeDecl, mode: AnalysisMode, dt: TimeStep) -> Result<Automaton> {
    let mut a = Automaton::new(decl.name.clone(), &["no", "yes"], NO, AutomatonKind::Failure);
    let free = |a: &mut Automaton, guard: PredicateExpr| {
        a.transitions
            .push(distribution(NO, guard.clone(), &[(0.5, NO), (0.5, YES)]));
        a.transitions.push(distribution(YES, guard, &[(0.5, YES), (0.5, NO)]));
    };
    let gated_demand = match (&decl.pattern, &decl.injection) {
        (FailurePattern::PerDemand { demand, .. }, Some(_)) => Some(demand.clone()),
        _ => None,
    };
    match mode {
        AnalysisMode::Qualitative => match (&decl.pattern, gated_demand) {
            (FailurePattern::Persistent, _) => {
                a.transitions.push(distribution(NO, always(), &[(0.5, NO), (0.5, YES)]));
                a.transitions.push(Transition::new(YES, YES, always()));
            }
            (_, Some(d)) => {
                a.transitions.push(Transition::new(NO, NO, d.clone().not()));
                a.transitions.push(Transition::new(YES, YES, d.clone().not()));
                free(&mut a, d);
                a.transitions.sort_by_key(|t| t.source);
            }
            _ => free(&mut a, always()),
        },
        AnalysisMode::Probabilistic => match &decl.pattern {
            FailurePattern::Persistent | FailurePattern::Transient => {
                return Err(Error::Failure {
                    name: decl.name.clone(),
                    reason: "probabilistic analysis needs a per_time or per_demand pattern".into(),
                })
            }
            FailurePattern::PerTime {
                rate_per_hour,
                recovery,
            } => {
                let p = rate_to_step_probability(*rate_per_hour, dt).map_err(|e| Error::Failure {
                    name: decl.name.clone(),
                    reason: e.to_string(),
                })?;
                a.transitions
                    .push(distribution(NO, always(), &[(p, YES), (1.0 - p, NO)]));
                match recovery {
                    Recovery::Latching => a.transitions.push(Transition::new(YES, YES, always())),
                    Recovery::Memoryless => a
                        .transitions
                        .push(distribution(YES, always(), &[(p, YES), (1.0 - p, NO)])),
                    Recovery::Repair { rate_per_hour } => {
                        let q = rate_to_step_probability(*rate_per_hour, dt).map_err(|e| Error::Failure {
                            name: decl.name.clone(),
                            reason: format!("repair: {e}"),
                        })?;
                        a.transitions
                            .push(distribution(YES, always(), &[(q, NO), (1.0 - q, YES)]))
                    }
                }
            }
            FailurePattern::PerDemand { probability, .. } => {
                let p = *probability;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Failure {
                        name: decl.name.clone(),
                        reason: format!("probability {p} outside [0, 1]"),
                    });
                }
                let Some(d) = gated_demand else {
                    return Err(Error::Failure {
                        name: decl.name.clone(),
                        reason: "per-demand failure must be injected before probabilistic analysis".into(),
                    });
                };
                a.transitions.push(Transition::new(NO, NO, d.clone().not()));
                a.transitions
                    .push(distribution(NO, d.clone(), &[(p, YES), (1.0 - p, NO)]));
                a.transitions.push(Transition::new(YES, YES, d.clone().not()));
                a.transitions.push(distribution(YES, d, &[(p, YES), (1.0 - p, NO)]));
            }
        },
    }
    Ok(a)
}

fn pinned(name: &str, active: bool) -> Automaton {
    let s = if active { YES } else { NO };
    let mut a = Automaton::new(name, &["no", "yes"], s, AutomatonKind::Failure);
    a.transitions.push(Transition::new(s, s, always()));
    a
}

/// Rebuilds every failure automaton of `model` for the given setup.
pub fn instantiate(model: &SystemModel, setup: &FailureSetup) -> Result<SystemModel> {
    for name in setup.pins.keys() {
        if model.failure(name).is_none() {
            return Err(Error::UnknownFailure(name.clone()));
        }
    }
    let mut out = model.clone();
    for decl in &model.failures {
        out.automata[decl.automaton] = match setup.pins.get(&decl.name) {
            Some(&active) => pinned(&decl.name, active),
            None => build_failure_automaton(decl, setup.mode, model.time_step)?,
        };
    }
    Ok(out)
}

/// Injects every per-demand failure and instantiates probabilistic
/// failure automata: the model analysed by the quantitative engine.
pub fn probabilistic_model(model: &SystemModel) -> Result<SystemModel> {
    instantiate(&inject_all(model)?, &FailureSetup::new(AnalysisMode::Probabilistic))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dt(s: f64) -> TimeStep {
        TimeStep::from_seconds(s).unwrap()
    }

    fn decl(pattern: FailurePattern) -> FailureModeDecl {
        FailureModeDecl {
            name: "F".into(),
            pattern,
            automaton: 0,
            affects: None,
            injection: None,
        }
    }

    #[test]
    fn step_probability_from_hourly_rate() {
        let p = rate_to_step_probability(1e-2, dt(0.01)).unwrap();
        let expected = 1e-2 / 3600.0 * 0.01;
        assert!((p - expected).abs() / expected < 1e-12);
        assert!((p - 2.7777777777777777e-8).abs() < 1e-20);
        assert_eq!(rate_to_step_probability(0.0, dt(0.5)).unwrap(), 0.0);
        assert!(rate_to_step_probability(3600.0, dt(1.0)).is_err());
    }

    #[test]
    fn geometric_cdf_edges() {
        assert_eq!(geometric_cdf(0.0f64, 1_000_000), 0.0);
        assert_eq!(geometric_cdf(1.0f64, 1), 1.0);
        assert_eq!(geometric_cdf(0.3f64, 0), 0.0);
        assert!((geometric_cdf(0.5f64, 2) - 0.75).abs() < 1e-15);
        assert!((geometric_cdf(0.5f32, 2) - 0.75).abs() < 1e-6);
    }

    #[test]
    fn geometric_cdf_matches_series() {
        let p = 1e-2 / 3600.0 * 0.01;
        let k = 360_000u64;
        let mut series = crate::scalar::CompensatedSum::new();
        let mut survive = 1.0f64;
        for _ in 0..k {
            series.add(p * survive);
            survive *= 1.0 - p;
        }
        let v = geometric_cdf(p, k);
        assert!((v - series.value()).abs() / v < 1e-9, "{v} vs {}", series.value());
    }

    #[test]
    fn approximation_error_near_mean_lifetime() {
        let e = approximation_error(1e-2, dt(1.0), 100.0).unwrap();
        assert_eq!(e.steps, 360_000);
        assert!((e.exp_cdf - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((e.absolute - 5.1095e-7).abs() / 5.1095e-7 < 5e-3, "{}", e.absolute);
        let zero = approximation_error(1e-2, dt(1.0), 0.0).unwrap();
        assert_eq!(zero.absolute, 0.0);
        assert_eq!(zero.relative, None);
    }

    #[test]
    fn transient_qualitative_automaton_switches_freely() {
        let a = build_failure_automaton(&decl(FailurePattern::Transient), AnalysisMode::Qualitative, dt(1.0)).unwrap();
        assert_eq!(a.states, vec!["no", "yes"]);
        let branches: usize = a.transitions.iter().map(|t| t.branches.len()).sum();
        assert_eq!(branches, 4);
        assert!(a.transitions.iter().all(|t| t.guard == PredicateExpr::Const(true)));
    }

    #[test]
    fn persistent_never_leaves_yes() {
        let a = build_failure_automaton(&decl(FailurePattern::Persistent), AnalysisMode::Qualitative, dt(1.0)).unwrap();
        assert!(a
            .transitions_from(YES)
            .all(|t| t.branches.iter().all(|b| b.target == YES)));
        assert!(
            build_failure_automaton(&decl(FailurePattern::Persistent), AnalysisMode::Probabilistic, dt(1.0)).is_err()
        );
    }

    #[test]
    fn per_time_probabilistic_automaton() {
        let d = decl(FailurePattern::PerTime {
            rate_per_hour: 1e-2,
            recovery: Recovery::Latching,
        });
        let a = build_failure_automaton(&d, AnalysisMode::Probabilistic, dt(0.01)).unwrap();
        let exit = &a.transitions[0];
        assert_eq!(exit.branches[0].target, YES);
        assert!((exit.branches[0].probability - 2.7777777777777777e-8).abs() < 1e-20);
        assert_eq!(a.transitions[1].branches.len(), 1);
    }

    #[test]
    fn per_demand_needs_injection_for_probabilities() {
        let d = decl(FailurePattern::PerDemand {
            probability: 1e-4,
            demand: PredicateExpr::Const(true),
        });
        assert!(build_failure_automaton(&d, AnalysisMode::Probabilistic, dt(1.0)).is_err());
    }
}
