//! Construction and certification of PPT bound entangled states built from
//! two-mode continuous-variable amplitudes, their finite K x K family, the
//! associated witnesses and positive maps, and a truncated-Fock check of the
//! optical preparation scheme.
//!
//! Modules:
//! - [`hilbert`]: bipartite operators, partial transpose, spectra, Schmidt decomposition.
//! - [`states`]: every state constructor.
//! - [`criteria`]: PPT test, exact and numerical range criterion, certification.
//! - [`witness`]: witnesses from kernel projectors and the induced maps.
//! - [`optics`]: mode operators and the protocol assembly.

pub mod config;
pub mod criteria;
pub mod error;
pub mod hilbert;
pub mod optics;
pub mod states;
pub mod witness;

pub use config::{Tolerances, TruncationConfig, DEFAULT_SEED};
pub use criteria::{
    alpha_decision, certify, ppt_check, product_in_range_search, schmidt_rank_scan, AlphaDecision,
    CertificationReport, CertifyConfig, PptVerdict, ProductVector, RangeSearchResult,
    SearchConfig, Verdict,
};
pub use error::{Error, Result};
pub use hilbert::{BasisIndex, CMatrix, CVector, DensityOperator, Dims, PureVector, SchmidtData};
pub use states::{AlphaFamily, CVParams, NormalizationBreakdown};
pub use witness::{InducedMap, Witness};

pub use num_complex::Complex64;
