use thiserror::Error;

/// Where an inadmissible state was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLocation {
    /// Physical interface index `k` (interface at `x_{k-1/2}`), or cell index for cell averages.
    pub physical: usize,
    /// Stochastic cell index `j`.
    pub stochastic_cell: usize,
    /// Global quadrature node, when the state was evaluated at a node.
    pub node: Option<usize>,
}

impl std::fmt::Display for StateLocation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "i={}, j={}", self.physical, self.stochastic_cell)?;
        if let Some(l) = self.node {
            write!(f, ", node={l}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SfvError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("inadmissible state at {location} (component {component}): {detail}")]
    Positivity {
        location: StateLocation,
        component: usize,
        detail: String,
    },

    #[error("time integration failed at t={t:.6e} with dt={dt:.3e}: {reason}")]
    Integration {
        t: f64,
        dt: f64,
        reason: String,
        last_state: Box<Vec<f64>>,
    },

    #[error("rank deficiency: requested {requested} modes, numerical rank {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("index error: {0}")]
    Index(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("deterministic run at y = {y:?} (node {node}) failed: {source}")]
    AtNode {
        node: usize,
        y: Vec<f64>,
        #[source]
        source: Box<SfvError>,
    },
}

impl SfvError {
    pub fn config(msg: impl Into<String>) -> Self {
        SfvError::Config(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        SfvError::Format(msg.into())
    }

    /// The underlying error with any parameter context stripped.
    pub fn root(&self) -> &SfvError {
        match self {
            SfvError::AtNode { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = SfvError> = std::result::Result<T, E>;
