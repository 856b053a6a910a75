//! Bounded-horizon probabilities on DTMC and MDP state spaces.

mod fta;
mod montecarlo;

pub use fta::{fta_bound, horizon_probabilities, DemandBounds, FtaBoundReport, FtaTerm};
pub use montecarlo::{monte_carlo_hazard, MonteCarloEstimate};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Flavor, StateSpace, TimeStep};
use crate::scalar::{CompensatedSum, Probability};

/// Per-state values of a bounded until after `steps` iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector<P> {
    pub values: Vec<P>,
    pub steps: u64,
}

impl<P: Probability> ProbabilityVector<P> {
    pub fn at(&self, state: usize) -> P {
        self.values[state]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint<P> {
    pub k: u64,
    pub t_seconds: f64,
    pub probability: P,
}

/// Hazard probability sampled over increasing horizons.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardCurve<P> {
    pub points: Vec<CurvePoint<P>>,
}

/// Rows below this size are iterated sequentially.
const PARALLEL_THRESHOLD: usize = 1 << 14;

/// The states whose value can still change, with their transitions
/// restricted to other such states. Transitions into ψ states are folded
/// into a constant per choice group.
struct Iteration<P> {
    /// Original index of each undecided state.
    states: Vec<usize>,
    /// Group range per undecided state.
    group_start: Vec<usize>,
    /// Constant mass into ψ and entry range per group.
    constant: Vec<P>,
    entry_start: Vec<usize>,
    entries: Vec<(u32, P)>,
    /// Value of every original state that is not undecided.
    fixed: Vec<P>,
    /// Compact index per original state, `u32::MAX` when fixed.
    compact: Vec<u32>,
}

impl<P: Probability> Iteration<P> {
    fn new(space: &StateSpace<P>, phi: &[bool], psi: &[bool]) -> Result<Self> {
        let n = space.len();
        if phi.len() != n || psi.len() != n {
            return Err(Error::InvalidArgument(format!(
                "state masks must have {n} entries, got {} and {}",
                phi.len(),
                psi.len()
            )));
        }
        // States that can reach ψ through φ states (the others stay 0).
        let (offsets, sources) = space.predecessors();
        let mut reach = psi.to_vec();
        let mut stack: Vec<usize> = (0..n).filter(|&s| psi[s]).collect();
        while let Some(t) = stack.pop() {
            for &s in &sources[offsets[t]..offsets[t + 1]] {
                let s = s as usize;
                if !reach[s] && phi[s] {
                    reach[s] = true;
                    stack.push(s);
                }
            }
        }
        let mut compact = vec![u32::MAX; n];
        let mut states = Vec::new();
        for s in 0..n {
            if reach[s] && !psi[s] {
                compact[s] = states.len() as u32;
                states.push(s);
            }
        }
        let fixed = (0..n).map(|s| if psi[s] { P::one() } else { P::zero() }).collect();
        let mut it = Iteration {
            states: Vec::new(),
            group_start: vec![0],
            constant: Vec::new(),
            entry_start: vec![0],
            entries: Vec::new(),
            fixed,
            compact,
        };
        for &s in &states {
            for group in space.groups(s) {
                let mut c = CompensatedSum::new();
                for e in group {
                    let t = e.target as usize;
                    if psi[t] {
                        c.add(e.probability);
                    } else if it.compact[t] != u32::MAX {
                        it.entries.push((it.compact[t], e.probability));
                    }
                }
                it.constant.push(c.value());
                it.entry_start.push(it.entries.len());
            }
            it.group_start.push(it.constant.len());
        }
        it.states = states;
        Ok(it)
    }

    #[inline]
    fn update(&self, i: usize, x: &[P]) -> P {
        let mut best = P::zero();
        for g in self.group_start[i]..self.group_start[i + 1] {
            let mut acc = CompensatedSum::new();
            acc.add(self.constant[g]);
            for &(j, p) in &self.entries[self.entry_start[g]..self.entry_start[g + 1]] {
                acc.add(p * x[j as usize]);
            }
            best = best.max(acc.value());
        }
        best
    }

    fn step(&self, x: &[P], y: &mut [P]) {
        if y.len() >= PARALLEL_THRESHOLD && rayon::current_num_threads() > 1 {
            y.par_iter_mut().enumerate().for_each(|(i, v)| *v = self.update(i, x));
        } else {
            for (i, v) in y.iter_mut().enumerate() {
                *v = self.update(i, x);
            }
        }
    }

    fn value_of(&self, state: usize, x: &[P]) -> P {
        match self.compact[state] {
            u32::MAX => self.fixed[state],
            i => x[i as usize],
        }
    }

    /// Runs `k` iterations, calling `observe(i, x_i)` for every `i` in
    /// `samples` (ascending, all `<= k`). Stops early once an iteration
    /// leaves the vector unchanged; later samples see the fixpoint.
    fn run(&self, k: u64, samples: &[u64], mut observe: impl FnMut(u64, &[P])) -> Vec<P> {
        let mut x = vec![P::zero(); self.states.len()];
        let mut y = x.clone();
        let mut pending = samples.iter().copied().peekable();
        let mut i = 0;
        loop {
            while pending.next_if(|&j| j == i).is_some() {
                observe(i, &x);
            }
            if i == k {
                break;
            }
            self.step(&x, &mut y);
            i += 1;
            let converged = x == y;
            std::mem::swap(&mut x, &mut y);
            if converged {
                for j in pending.by_ref() {
                    observe(j, &x);
                }
                break;
            }
        }
        x
    }
}

fn check_dtmc<P: Probability>(space: &StateSpace<P>) -> Result<()> {
    space.expect_flavor(Flavor::Dtmc)
}

fn expand<P: Probability>(it: &Iteration<P>, x: &[P], steps: u64) -> ProbabilityVector<P> {
    ProbabilityVector {
        values: (0..it.fixed.len()).map(|s| it.value_of(s, x)).collect(),
        steps,
    }
}

/// `P[φ U≤k ψ]` for every state of a DTMC.
pub fn bounded_until<P: Probability>(
    space: &StateSpace<P>,
    phi: &[bool],
    psi: &[bool],
    k: u64,
) -> Result<ProbabilityVector<P>> {
    check_dtmc(space)?;
    let it = Iteration::new(space, phi, psi)?;
    let x = it.run(k, &[], |_, _| {});
    Ok(expand(&it, &x, k))
}

/// `Pmax[φ U≤k ψ]` for every state of an MDP (or DTMC), maximizing over
/// choice groups in every step.
pub fn max_bounded_until<P: Probability>(
    space: &StateSpace<P>,
    phi: &[bool],
    psi: &[bool],
    k: u64,
) -> Result<ProbabilityVector<P>> {
    if space.flavor() == Flavor::Nondeterministic {
        return Err(Error::WrongFlavor {
            expected: Flavor::Mdp.to_string(),
            found: Flavor::Nondeterministic.to_string(),
        });
    }
    let it = Iteration::new(space, phi, psi)?;
    let x = it.run(k, &[], |_, _| {});
    Ok(expand(&it, &x, k))
}

/// `P[true U≤k H]` at the initial state.
pub fn hazard_probability<P: Probability>(space: &StateSpace<P>, k: u64) -> Result<P> {
    let phi = vec![true; space.len()];
    Ok(bounded_until(space, &phi, space.hazard(), k)?.at(space.initial()))
}

/// Worst-case hazard probability `Pmax[true U≤k H]` at the initial state.
pub fn max_hazard_probability<P: Probability>(space: &StateSpace<P>, k: u64) -> Result<P> {
    let phi = vec![true; space.len()];
    Ok(max_bounded_until(space, &phi, space.hazard(), k)?.at(space.initial()))
}

/// Horizons sampled by [`hazard_curve`]: multiples of `stride` up to
/// `k_max`, plus `k_max` itself.
pub fn curve_horizons(k_max: u64, stride: u64) -> Vec<u64> {
    let mut ks: Vec<u64> = (0..=k_max).step_by(stride.max(1) as usize).collect();
    if ks.last() != Some(&k_max) {
        ks.push(k_max);
    }
    ks
}

/// Hazard probability at every horizon of [`curve_horizons`], from a
/// single value-iteration sweep.
pub fn hazard_curve<P: Probability>(
    space: &StateSpace<P>,
    k_max: u64,
    stride: u64,
    dt: TimeStep,
) -> Result<HazardCurve<P>> {
    if stride == 0 {
        return Err(Error::InvalidArgument("curve stride must be at least 1".into()));
    }
    check_dtmc(space)?;
    let phi = vec![true; space.len()];
    let it = Iteration::new(space, &phi, space.hazard())?;
    let init = space.initial();
    let mut points = Vec::new();
    it.run(k_max, &curve_horizons(k_max, stride), |i, x| {
        points.push(CurvePoint {
            k: i,
            t_seconds: i as f64 * dt.seconds(),
            probability: it.value_of(init, x),
        })
    });
    Ok(HazardCurve { points })
}

/// Diagnostic only: `P[!(Δ\Γ) U≤k H]`, the probability of reaching the
/// hazard within `k` steps on paths where no failure mode outside `gamma`
/// occurs first.
///
/// This is not the probability that the failures in `gamma` cause the
/// hazard. Restricting the until formula limits the set of traces that are
/// measured: traces where other failure modes occur as well are dropped,
/// even though the failures in `gamma` may contribute to the hazard on them.
pub fn diagnostic_restricted_until<P: Probability>(
    space: &StateSpace<P>,
    gamma: &[impl AsRef<str>],
    delta: &[String],
    k: u64,
) -> Result<P> {
    let mut phi = vec![true; space.len()];
    for d in delta {
        if gamma.iter().any(|g| g.as_ref() == d) {
            continue;
        }
        let label = space.require_label(&crate::failures::occurrence_label(d))?;
        for (p, &on) in phi.iter_mut().zip(label) {
            *p &= !on;
        }
    }
    Ok(bounded_until(space, &phi, space.hazard(), k)?.at(space.initial()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizons_include_the_end() {
        assert_eq!(curve_horizons(3, 1), vec![0, 1, 2, 3]);
        assert_eq!(curve_horizons(10, 4), vec![0, 4, 8, 10]);
        assert_eq!(curve_horizons(5, 5), vec![0, 5]);
        assert_eq!(curve_horizons(0, 7), vec![0]);
    }
}
