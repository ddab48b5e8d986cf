use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("unknown agent `{0}`")]
    UnknownAgent(String),

    #[error("unknown contract `{0}`")]
    UnknownContract(String),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("contract {contract} has fewer than two participants")]
    TooFewParticipants { contract: String },

    #[error("agent {agent} does not participate in contract {contract}")]
    NotAParticipant { agent: String, contract: String },

    #[error("valuation of agent {agent} is missing subset {subset:?}")]
    MissingValuation { agent: String, subset: Vec<String> },

    #[error("valuation of agent {agent} lists subset {subset:?} twice")]
    DuplicateValuation { agent: String, subset: Vec<String> },

    #[error("no price for agent {agent} in contract {contract}")]
    MissingPrice { agent: String, contract: String },

    #[error("{}", format_unbalanced(.0))]
    Unbalanced(Vec<(String, i128)>),

    #[error("value {0} does not fit the scalar type")]
    Overflow(i128),

    #[error("{what} has {size} contracts, above the enumeration cap of {cap}")]
    EnumerationCap {
        what: String,
        size: usize,
        cap: usize,
    },

    #[error("gross complementarity violated for agent {agent}: {reason}")]
    NotGrossComplements { agent: String, reason: String },

    #[error("operation requires {expected} verdict")]
    WrongVerdict { expected: &'static str },

    #[error("agent {agent} appears in more than one chain")]
    OverlappingChains { agent: String },

    #[error("no complements chain found at a non-equilibrium price vector")]
    ChainNotFound,

    #[error("price vectors are not ordered for agent {agent} at contract {contract}")]
    PriceOrder { agent: String, contract: String },

    #[error("auction exceeded its round cap of {cap}")]
    RoundCap { cap: usize },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("invalid generator parameters: {0}")]
    Generator(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error reports a violated modelling assumption rather than
    /// malformed input.
    pub fn is_precondition(&self) -> bool {
        matches!(self, Error::NotGrossComplements { .. })
    }
}

fn format_unbalanced(sums: &[(String, i128)]) -> String {
    sums.iter()
        .map(|(c, s)| format!("contract {c} unbalanced: sum {s}"))
        .collect::<Vec<_>>()
        .join("; ")
}
