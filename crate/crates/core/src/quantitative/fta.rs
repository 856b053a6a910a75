use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::failures::{geometric_cdf, rate_to_step_probability, FailurePattern};
use crate::model::SystemModel;
use crate::scalar::CompensatedSum;

#[derive(Debug, Clone, PartialEq)]
pub struct FtaTerm {
    pub failures: Vec<String>,
    pub product: f64,
}

/// Fault-tree style estimate `Σ_mcs Π_{δ ∈ mcs} P(δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FtaBoundReport {
    pub terms: Vec<FtaTerm>,
    pub bound: f64,
    /// Hazard probability from model checking at the same horizon.
    pub model_checked: Option<f64>,
}

impl FtaBoundReport {
    pub fn with_model_checked(mut self, probability: f64) -> Self {
        self.model_checked = Some(probability);
        self
    }

    /// The model-checked probability exceeds the bound. The estimate
    /// assumes independent failure occurrences, which the model need not
    /// satisfy.
    pub fn violated(&self) -> bool {
        self.model_checked.is_some_and(|p| p > self.bound)
    }
}

/// Horizon probabilities for per-demand modes, which have no closed form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DemandBounds {
    pub explicit: BTreeMap<String, f64>,
    /// Use the per-demand probability `p` itself, a bound for a single
    /// demand within the horizon.
    pub default_to_probability: bool,
}

/// Occurrence probability within `k` steps per failure mode.
///
/// Per-time modes get `1 - (1 - p)^k`. Per-demand modes are only present
/// when supplied through `bounds`. Explicit entries override everything;
/// they may also name persistent or transient modes.
pub fn horizon_probabilities(model: &SystemModel, k: u64, bounds: &DemandBounds) -> Result<BTreeMap<String, f64>> {
    for name in bounds.explicit.keys() {
        if model.failure(name).is_none() {
            return Err(Error::UnknownFailure(name.clone()));
        }
    }
    let mut out = BTreeMap::new();
    for f in &model.failures {
        let value = match (&f.pattern, bounds.explicit.get(&f.name)) {
            (_, Some(&p)) => Some(p),
            (FailurePattern::PerTime { rate_per_hour, .. }, None) => Some(geometric_cdf(
                rate_to_step_probability(*rate_per_hour, model.time_step)?,
                k,
            )),
            (FailurePattern::PerDemand { probability, .. }, None) if bounds.default_to_probability => {
                Some(*probability)
            }
            _ => None,
        };
        if let Some(p) = value {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "probability {p} for '{}' outside [0, 1]",
                    f.name
                )));
            }
            out.insert(f.name.clone(), p);
        }
    }
    Ok(out)
}

pub fn fta_bound(mcs: &[Vec<String>], probabilities: &BTreeMap<String, f64>) -> Result<FtaBoundReport> {
    let mut terms = Vec::with_capacity(mcs.len());
    let mut total = CompensatedSum::new();
    for set in mcs {
        let mut product = 1.0;
        for name in set {
            product *= *probabilities
                .get(name)
                .ok_or_else(|| Error::MissingProbability(name.clone()))?;
        }
        total.add(product);
        terms.push(FtaTerm {
            failures: set.clone(),
            product,
        });
    }
    Ok(FtaBoundReport {
        terms,
        bound: total.value(),
        model_checked: None,
    })
}
