//! Fixtures shared by the benchmarks in `benches/`.

use bevc_core::hilbert::{project_local, range_projector};
use bevc_core::optics::ProtocolParams;
use bevc_core::states::{build_rho, build_sigma};
use bevc_core::{AlphaFamily, CVParams, DensityOperator, Tolerances};

pub fn rho(n: usize) -> DensityOperator {
    build_rho(&CVParams::new(0.5, 0.8, n).expect("valid parameters"))
}

/// `rho(0.5, 0.8, 12)` projected onto levels `1..=k`.
pub fn projected(k: usize) -> DensityOperator {
    let rows: Vec<usize> = (1..=k).collect();
    project_local(&rho(12), &rows, &rows).expect("rows within truncation")
}

pub fn choi() -> DensityOperator {
    build_sigma(&AlphaFamily::choi())
}

pub fn choi_range() -> DensityOperator {
    let tol = Tolerances::default();
    range_projector(&choi(), tol.rank, &tol).expect("state input")
}

pub fn protocol_params(n: usize) -> ProtocolParams {
    ProtocolParams::new(std::f64::consts::LN_2, 1.25f64.ln(), n - 2, 32).expect("valid rates")
}
