use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use bevc_core::criteria::{Measured, NormalFormConfig};
use bevc_core::hilbert::{schmidt_with_threshold, write_operator, ExchangeDocument};
use bevc_core::optics::{compare_with_direct, kerr_delta_approx, uniform_phases, ProtocolParams};
use bevc_core::states::{build_psi, build_sigma};
use bevc_core::witness::{build_witness, WitnessConfig};
use bevc_core::{
    certify, AlphaFamily, CVParams, CVector, CertificationReport, CertifyConfig, Complex64,
    DensityOperator, Dims, PureVector, SearchConfig, Tolerances, Verdict, DEFAULT_SEED,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{CertifyArgs, Format, GlobalOpts, Grid, OpticsArgs, ScanArgs, Source};
use crate::error::{CliError, CliResult};
use crate::source::{family, resolve, rho_state};

pub struct Settings {
    pub tolerances: Tolerances,
    pub certify: CertifyConfig,
}

impl Settings {
    pub fn from_global(g: &GlobalOpts) -> CliResult<Self> {
        let mut tolerances = Tolerances::default();
        for (name, value, slot) in [
            ("ppt-tol", g.ppt_tol, &mut tolerances.ppt),
            ("rank-tol", g.rank_tol, &mut tolerances.rank),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(CliError::invalid(format!("--{name} must be positive, got {v}")));
                }
                *slot = v;
            }
        }
        if g.restarts == 0 {
            return Err(CliError::invalid("--restarts must be at least 1"));
        }
        let search = SearchConfig {
            restarts: g.restarts,
            seed: g.seed.unwrap_or(DEFAULT_SEED),
            ..SearchConfig::default()
        };
        let mut certify = CertifyConfig {
            tolerances,
            search,
            ..CertifyConfig::default()
        };
        if let Some(m) = g.margin {
            if !(m.is_finite() && m > 0.0) {
                return Err(CliError::invalid(format!("--margin must be positive, got {m}")));
            }
            certify.entangle_margin = m;
        }
        Ok(Self { tolerances, certify })
    }
}

fn open_output(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn build(src: &Source, g: &GlobalOpts, s: &Settings) -> CliResult<()> {
    if matches!(src, Source::File { .. }) {
        return Err(CliError::invalid("build needs a constructor, not a file"));
    }
    let r = resolve(src, &s.tolerances)?;
    let mut doc = ExchangeDocument::from_operator(&r.op);
    for (k, v) in &r.meta {
        doc = doc.with_meta(k, v);
    }
    let mut w = open_output(g.out.as_deref())?;
    write_operator(&mut w, &doc)?;
    w.flush()?;
    let d = r.op.dims();
    let summary = format!(
        "state: {}\ndims: {}x{}\ntrace: {:.16e}\npt_residual: {:.3e}",
        r.descriptor,
        d.a,
        d.b,
        r.op.trace(),
        r.op.pt_residual()
    );
    if g.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

/// Full certification, including a witness when the verdict is certified.
pub fn certification(
    op: &DensityOperator,
    descriptor: &str,
    family: Option<&AlphaFamily>,
    cfg: &CertifyConfig,
    with_witness: bool,
) -> CliResult<CertificationReport> {
    let mut report = certify(op, descriptor, family, cfg)?;
    if with_witness && report.verdict == Verdict::BoundEntangledCertified {
        let wcfg = WitnessConfig {
            search: cfg.search,
            ..WitnessConfig::default()
        };
        match build_witness(op, descriptor, &wcfg, &cfg.tolerances) {
            Ok(w) => report.witness = Some(w.summary(op, &wcfg)?),
            Err(e) => report.notes.push(format!("witness not built: {e}")),
        }
    }
    Ok(report)
}

pub fn certify_cmd(args: &CertifyArgs, g: &GlobalOpts, s: &Settings) -> CliResult<()> {
    let start = Instant::now();
    let mut cfg = s.certify;
    if args.no_normal_form {
        cfg.normal_form = NormalFormConfig {
            enabled: false,
            ..cfg.normal_form
        };
    }
    let r = resolve(&args.source, &s.tolerances)?;
    let resolved_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut report = certification(&r.op, &r.descriptor, r.family.as_ref(), &cfg, !args.no_witness)?;
    if args.timings {
        report.timings_ms = Some(vec![
            ("resolve".into(), resolved_ms),
            ("total".into(), start.elapsed().as_secs_f64() * 1e3),
        ]);
    }
    write_json(&report, g.out.as_deref())
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub point: usize,
    pub a: Option<f64>,
    pub c: Option<f64>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    /// Coefficients joined with ';'.
    pub alphas: Option<String>,
    pub dims: String,
    pub min_pt_eigenvalue: f64,
    pub ppt_tolerance: f64,
    pub range_residual: f64,
    pub entangle_margin: f64,
    pub verdict: Verdict,
    pub psi_schmidt_rank: usize,
}

enum Point {
    Rho { a: f64, c: f64, n: usize, rows: Option<Vec<usize>> },
    Sigma(AlphaFamily),
}

fn grid_points(grid: &Grid) -> CliResult<Vec<Point>> {
    let points: Vec<Point> = match grid {
        Grid::Ac { a, c, n, rows } => a
            .iter()
            .flat_map(|&a| c.iter().map(move |&c| (a, c)))
            .map(|(a, c)| Point::Rho { a, c, n: *n, rows: rows.clone() })
            .collect(),
        Grid::K { from, to, base } => {
            if !(base.is_finite() && *base > 0.0) {
                return Err(CliError::invalid(format!("--base must be positive, got {base}")));
            }
            (*from..=*to)
                .map(|k| {
                    let alphas = (2..=k).map(|m| base.powi(m as i32)).collect();
                    Ok(Point::Sigma(AlphaFamily::new(k, alphas)?))
                })
                .collect::<CliResult<_>>()?
        }
        Grid::Alphas { grid } => grid
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|item| {
                let alphas = item
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::invalid(format!("grid entry {item:?}: {e}")))?;
                Ok(Point::Sigma(family(None, &alphas)?))
            })
            .collect::<CliResult<_>>()?,
    };
    if points.is_empty() {
        return Err(CliError::invalid("empty grid"));
    }
    Ok(points)
}

fn maximally_correlated(k: usize) -> CliResult<PureVector> {
    let d = Dims::square(k);
    let v = CVector::from_fn(d.total(), |i, _| {
        if i / k == i % k {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(PureVector::new(v, d)?)
}

fn scan_point(index: usize, point: &Point, cfg: &CertifyConfig) -> CliResult<ScanRow> {
    let tol = &cfg.tolerances;
    let (op, descriptor, fam, rank, row) = match point {
        Point::Rho { a, c, n, rows } => {
            let p = CVParams::new(*a, *c, *n)?;
            let op = rho_state(&p, rows.as_deref())?;
            let rank = schmidt_with_threshold(&build_psi(&p), tol.rank)?.rank;
            let row = (Some(*a), Some(*c), Some(*n), None, None);
            (op, format!("rho(a={a}, c={c}, n={n})"), None, rank, row)
        }
        Point::Sigma(f) => {
            let rank = schmidt_with_threshold(&maximally_correlated(f.k())?, tol.rank)?.rank;
            let joined = f.alphas().iter().map(f64::to_string).collect::<Vec<_>>().join(";");
            let row = (None, None, None, Some(f.k()), Some(joined.clone()));
            (build_sigma(f), format!("sigma(alphas=[{joined}])"), Some(f), rank, row)
        }
    };
    let rep = certify(&op, &descriptor, fam, cfg)?;
    let d = op.dims();
    Ok(ScanRow {
        point: index,
        a: row.0,
        c: row.1,
        n: row.2,
        k: row.3,
        alphas: row.4,
        dims: format!("{}x{}", d.a, d.b),
        min_pt_eigenvalue: rep.min_pt_eigenvalue.value,
        ppt_tolerance: rep.min_pt_eigenvalue.tolerance,
        range_residual: rep.range_residual.value,
        entangle_margin: rep.range_residual.tolerance,
        verdict: rep.verdict,
        psi_schmidt_rank: rank,
    })
}

pub fn scan(args: &ScanArgs, g: &GlobalOpts, s: &Settings) -> CliResult<()> {
    let points = grid_points(&args.grid)?;
    // collect preserves grid order regardless of scheduling
    let rows: Vec<ScanRow> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| scan_point(i, p, &s.certify))
        .collect::<CliResult<_>>()?;
    match args.format {
        Format::Json => write_json(&rows, g.out.as_deref()),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(open_output(g.out.as_deref())?);
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct KerrRow {
    levels: usize,
    k: usize,
    sup_error: f64,
    aliased_states: usize,
    /// `L > N - 1 + k`, where uniform phases cannot alias.
    alias_free: bool,
}

#[derive(Debug, Serialize)]
struct OpticsReport {
    tool_version: String,
    beta: f64,
    gamma: f64,
    cutoff: usize,
    k_max: usize,
    direct_levels: usize,
    frobenius_distance: Measured,
    max_abs_diff: f64,
    per_k_identity_residuals: Vec<Measured>,
    projected_pt_residual: f64,
    within_tolerance: bool,
    kerr: Vec<KerrRow>,
}

pub fn optics_verify(args: &OpticsArgs, g: &GlobalOpts) -> CliResult<()> {
    let n = args.n;
    if n < 3 {
        return Err(CliError::invalid(format!("--n must be at least 3, got {n}")));
    }
    let k_max = args.k_max.unwrap_or(n - 2);
    let p = ProtocolParams::new(args.beta, args.gamma, k_max, args.levels)?;
    let eq = compare_with_direct(&p, n)?;
    let frob = Measured::new(eq.frobenius_distance, 1e-10, "compare_with_direct");
    let per_k: Vec<Measured> = eq
        .per_k_residuals
        .iter()
        .map(|&(k, r)| Measured::new(r, 1e-12, &format!("per_k_identity_residual(k={k})")))
        .collect();
    let mut levels = vec![args.levels];
    levels.extend(args.kerr_levels.iter().copied().filter(|l| *l != args.levels));
    let mut kerr = Vec::new();
    for &l in &levels {
        if l == 0 {
            return Err(CliError::invalid("ancilla level counts must be positive"));
        }
        for k in 0..=k_max {
            let kr = kerr_delta_approx(k, &uniform_phases(l), n)?;
            kerr.push(KerrRow {
                levels: l,
                k,
                sup_error: kr.sup_error,
                aliased_states: kr.aliased_states,
                alias_free: l > n - 1 + k,
            });
        }
    }
    let within = frob.value <= frob.tolerance && per_k.iter().all(|m| m.value <= m.tolerance);
    let report = OpticsReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        beta: args.beta,
        gamma: args.gamma,
        cutoff: n,
        k_max,
        direct_levels: eq.direct_levels,
        frobenius_distance: frob,
        max_abs_diff: eq.max_abs_diff,
        per_k_identity_residuals: per_k,
        projected_pt_residual: eq.projected_pt_residual,
        within_tolerance: within,
        kerr,
    };
    write_json(&report, g.out.as_deref())
}
