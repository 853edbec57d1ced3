use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("basis index {index} out of range for {dim} amplitudes")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("layout needs {requested} qubits but the simulator cap is {max}")]
    QubitBudget { requested: usize, max: usize },
    #[error("register name `{0}` used twice")]
    DuplicateRegister(String),
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("empty register list")]
    EmptyRegisterList,
    #[error("gate block is not unitary (defect {defect:e})")]
    NonUnitary { defect: f64 },
    #[error("invalid gate wiring: {0}")]
    Wiring(String),
    #[error("post-selection impossible (probability {probability:e})")]
    PostselectionImpossible { probability: f64 },
    #[error("ancilla registers start outside |0⟩ (weight {weight:e})")]
    DirtyAncilla { weight: f64 },
    #[error("state layouts differ")]
    LayoutMismatch,
    #[error("graph input: {0}")]
    Graph(String),
    #[error("feature matrix is all zero")]
    ZeroFeatures,
    #[error("dimension {dim} does not fit a register of {capacity} basis states")]
    DimensionOverflow { dim: usize, capacity: usize },
    #[error("expected {expected} ansatz angles, got {got}")]
    AngleCountMismatch { expected: usize, got: usize },
    #[error("activation produced the all-zero state")]
    ZeroActivation,
    #[error("value {value} outside [-1, 1] cannot be amplitude encoded")]
    ValueOutOfRange { value: f64 },
    #[error("invalid LCU coefficient {0}")]
    InvalidCoefficient(f64),
    #[error("block is not symmetric (defect {defect:e})")]
    Asymmetric { defect: f64 },
    #[error("incompatible block-encodings: {0}")]
    Incompatible(String),
    #[error("graph has no labelled nodes")]
    NoLabels,
    #[error("cost evaluated to a non-finite value")]
    NonFiniteCost,
    #[error("predicted probability of a true class is zero")]
    InfiniteCost,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("phase register width {t} cannot separate the required phases")]
    PhaseResolution { t: usize },
    #[error("inadmissible resource inputs: {0}")]
    Inadmissible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
