use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown automaton '{0}'")]
    UnknownAutomaton(String),

    #[error("automaton '{automaton}' has no state '{state}'")]
    UnknownState { automaton: String, state: String },

    #[error("atom references automaton #{automaton} state #{state}, which does not exist")]
    UnresolvedAtom { automaton: usize, state: usize },

    #[error("global state has {got} entries, model has {expected} automata")]
    StateWidth { expected: usize, got: usize },

    #[error("state space exceeds the cap of {cap} states")]
    StateCapExceeded { cap: usize },

    #[error("deadlock: automaton '{automaton}' has no enabled transition in state {state}")]
    Deadlock { automaton: String, state: String },

    #[error("automaton '{automaton}' in '{local}': guards [{guards}] are simultaneously enabled in state {state}")]
    Nondeterminism {
        automaton: String,
        local: String,
        guards: String,
        state: String,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("failure mode '{0}' is not declared")]
    UnknownFailure(String),

    #[error("failure mode '{name}': {reason}")]
    Failure { name: String, reason: String },

    #[error("state space flavor {found} cannot be used here, expected {expected}")]
    WrongFlavor { expected: String, found: String },

    #[error("state space has no label '{0}'")]
    MissingLabel(String),

    #[error("missing horizon probability for failure mode '{0}'")]
    MissingProbability(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Resource exhaustion rather than a modeling error.
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::StateCapExceeded { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
