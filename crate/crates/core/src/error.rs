use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("empty active network")]
    EmptyActiveNetwork,

    #[error("tie has no interactions")]
    EmptyTie,

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("cluster {label} has {size} points, need at least 2")]
    ClusterTooSmall { label: i64, size: usize },

    #[error("no non-noise cluster to score")]
    AllNoise,

    #[error("point matrix is {rows}x{dim} but {labels} labels were given")]
    ShapeMismatch { rows: usize, dim: usize, labels: usize },

    #[error("sample target {target} is invalid for {available} points in {clusters} clusters")]
    InvalidSampleTarget {
        target: usize,
        available: usize,
        clusters: usize,
    },

    #[error("active size is zero")]
    ZeroActiveSize,

    #[error("signed tie for alter {0} is not part of the active network")]
    TieNotActive(u64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}
