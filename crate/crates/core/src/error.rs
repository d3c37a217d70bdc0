use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error(
        "T_Tx + T_DIFS is not a multiple of the slot time \
         (t_tx = {t_tx:e} s, t_difs = {t_difs:e} s, t_slot = {t_slot:e} s, quotient = {quotient})"
    )]
    NonIntegralK {
        t_tx: f64,
        t_difs: f64,
        t_slot: f64,
        quotient: f64,
    },

    #[error("{n_vehicles} vehicles do not fit into {minis_per_cycle} mini-slots per cycle")]
    TooManyVehicles {
        n_vehicles: usize,
        minis_per_cycle: u64,
    },

    /// The model has no steady state for these parameters.
    #[error("beyond saturation: {0}")]
    BeyondSaturation(String),

    #[error("numeric failure: {what} (residual {residual:e})")]
    Numeric { what: String, residual: f64 },

    #[error("stationary distribution is not unique (residual {residual:e})")]
    AmbiguousStationary { residual: f64 },

    #[error("trace integrity: {0}")]
    TraceIntegrity(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
