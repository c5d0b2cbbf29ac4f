use std::path::PathBuf;

use thiserror::Error;

use crate::combinatorics::IndexSet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("ratio r must be > 1, got {0}")]
    RatioNotAboveOne(f64),

    #[error("binomial({n}, {k}) overflows u128")]
    MultiplicityOverflow { n: u64, k: u64 },

    #[error("order {k} is not an element of base {base}")]
    OrderNotInBase { k: u32, base: IndexSet },

    #[error("oracle scale exceeded: {0}")]
    OracleScale(String),

    #[error("function value {value} <= 0 at abscissa {abscissa}{}", subset_suffix(.subset))]
    NonPositiveSample {
        abscissa: f64,
        value: f64,
        subset: Option<IndexSet>,
    },

    #[error("abscissa {abscissa} outside sampled range [{lower}, {upper}]{}", subset_suffix(.subset))]
    DomainCoverage {
        abscissa: f64,
        lower: f64,
        upper: f64,
        subset: Option<IndexSet>,
    },

    #[error("log accumulation is not finite{}", subset_suffix(.subset))]
    NonFinite { subset: Option<IndexSet> },

    #[error("log value {0} does not exponentiate to a finite positive number")]
    ValueOutOfRange(f64),

    #[error("unsupported function for this operation: {0}")]
    Unsupported(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate abscissa {0}")]
    DuplicateAbscissa(f64),

    #[error("need at least 4 samples, got {0}")]
    FewPoints(usize),

    #[error("first sample is zero; cannot normalize by it")]
    ZeroFirstValue,

    #[error("normalized value at t=0 is {0}, expected 1")]
    NotUnitAtOrigin(f64),

    #[error("sample {index} (t={t}) normalizes to {value} <= 0")]
    NonPositiveAfterNormalization { index: usize, t: f64, value: f64 },

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

fn subset_suffix(subset: &Option<IndexSet>) -> String {
    match subset {
        Some(s) => format!(" (subset {s})"),
        None => String::new(),
    }
}

impl Error {
    /// Attaches subset context to evaluation errors that lack it.
    pub(crate) fn in_subset(self, s: &IndexSet) -> Self {
        match self {
            Error::NonPositiveSample {
                abscissa,
                value,
                subset: None,
            } => Error::NonPositiveSample {
                abscissa,
                value,
                subset: Some(s.clone()),
            },
            Error::DomainCoverage {
                abscissa,
                lower,
                upper,
                subset: None,
            } => Error::DomainCoverage {
                abscissa,
                lower,
                upper,
                subset: Some(s.clone()),
            },
            Error::NonFinite { subset: None } => Error::NonFinite {
                subset: Some(s.clone()),
            },
            other => other,
        }
    }

    /// Short machine-readable tag, used for sweep status columns and CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidIndexSet(_) => "invalid_index_set",
            Error::InvalidConfig(_) => "invalid_config",
            Error::RatioNotAboveOne(_) => "ratio_not_above_one",
            Error::MultiplicityOverflow { .. } => "multiplicity_overflow",
            Error::OrderNotInBase { .. } => "order_not_in_base",
            Error::OracleScale(_) => "oracle_scale",
            Error::NonPositiveSample { .. } => "non_positive_sample",
            Error::DomainCoverage { .. } => "domain_coverage",
            Error::NonFinite { .. } => "non_finite",
            Error::ValueOutOfRange(_) => "value_out_of_range",
            Error::Unsupported(_) => "unsupported",
            Error::Parse { .. } => "parse",
            Error::DuplicateAbscissa(_) => "duplicate_abscissa",
            Error::FewPoints(_) => "few_points",
            Error::ZeroFirstValue => "zero_first_value",
            Error::NotUnitAtOrigin(_) => "not_unit_at_origin",
            Error::NonPositiveAfterNormalization { .. } => "non_positive_after_normalization",
            Error::Io { .. } => "io",
        }
    }
}
