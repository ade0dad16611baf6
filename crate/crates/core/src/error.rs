use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("alpha = {0} is outside (0, 2]")]
    AlphaOutOfRange(f64),
    #[error("sigma = {0} must be strictly positive")]
    SigmaNonPositive(f64),
    #[error("gamma = {gamma} must lie in [-1, 1] when alpha = {alpha} != 1")]
    GammaOutOfRange { alpha: f64, gamma: f64 },
    #[error("alpha = 2 (Gaussian) has no power-law tail")]
    AlphaNotFatTailed,
    #[error("time t = {0} must be strictly positive")]
    NonPositiveTime(f64),
    #[error("operation requires alpha = 1, got alpha = {0}")]
    WrongAlpha(f64),
    #[error("window size tau = {tau} does not divide series length {n}")]
    TauDoesNotDivide { tau: usize, n: usize },
    #[error("window size tau = {0} is too small (need tau >= 2)")]
    TauTooSmall(usize),
    #[error("lcm(1..={0}) overflows a 64-bit integer")]
    Overflow(u64),
    #[error("empirical moment at q = {q}, tau = {tau} is zero; logarithm undefined")]
    NonPositiveMoment { q: f64, tau: usize },
    #[error("regression needs at least two window sizes, got {0}")]
    DegenerateGrid(usize),
    #[error("unit-window moment at q = {0} is zero")]
    DivisionByZeroMoment(f64),
    #[error("norming {kind} is inconsistent with q = {q}, alpha = {alpha}")]
    SpecMismatch { kind: &'static str, q: f64, alpha: f64 },
    #[error("order q = {q} must be >= alpha = {alpha}")]
    InvalidOrder { q: f64, alpha: f64 },
    #[error("sum of block maxima is zero")]
    ZeroDenominator,
    #[error("all increments are zero")]
    AllZeroInput,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("empty sample")]
    EmptySample,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
