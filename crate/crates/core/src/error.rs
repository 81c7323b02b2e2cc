use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("edge {edge} refers to undeclared endpoint `{endpoint}`")]
    DanglingEndpoint { edge: String, endpoint: String },

    #[error("self-loop on component `{0}` in connected_to")]
    SelfLoop(String),

    #[error("component `{0}` has a human factor but is marked deterministic")]
    HumanFactorDeterministic(String),

    #[error("unknown reference component `{0}`")]
    UnknownReference(String),

    #[error("lineage cycle: {}", .0.join(" -> "))]
    LineageCycle(Vec<String>),

    #[error("unknown factor `{0}`")]
    UnknownFactor(String),

    #[error("factor `{factor}`: {reason}")]
    InvalidFactor { factor: String, reason: String },

    #[error("invalid constraint #{index}: {reason}")]
    InvalidConstraint { index: usize, reason: String },

    #[error("{what} needs {requested} entries, above the enumeration cap of {cap}")]
    Capacity {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    #[error("design columns {found:?} do not match factor order {expected:?}")]
    ColumnMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("row {row}, column `{column}`: value {value} is not a coded level")]
    NotCodedLevel {
        row: usize,
        column: String,
        value: f64,
    },

    #[error("generator `{word}`: {reason}")]
    Generator { word: String, reason: String },

    #[error("unsupported run count: {0}")]
    UnsupportedRuns(String),

    #[error("no nonsingular design found: {0}")]
    Infeasible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("negative throughput {value} for component `{component}`")]
    NegativeThroughput { component: String, value: f64 },

    #[error("unsupported aggregation for measure `{0}`")]
    UnsupportedAggregation(String),

    #[error("measure `{measure}` of component `{component}` has the wrong value type")]
    ValueType { component: String, measure: String },

    #[error("duplicate result for ({component}, {measure}, {experiment})")]
    DuplicateResult {
        component: String,
        measure: String,
        experiment: String,
    },

    #[error("prioritisation needs the list of scenarios interpreted correctly in the prior step")]
    MissingPriorList,
}
