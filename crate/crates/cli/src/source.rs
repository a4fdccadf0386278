use std::fs::File;
use std::io::BufReader;

use bevc_core::hilbert::{project_local, read_operator, ExchangeDocument};
use bevc_core::optics::build_squeezed;
use bevc_core::states::{build_direct_sum, build_rho, build_sigma};
use bevc_core::{AlphaFamily, CVParams, DensityOperator, Tolerances};

use crate::args::Source;
use crate::error::{CliError, CliResult};

/// A constructed or loaded operator with its provenance.
pub struct Resolved {
    pub op: DensityOperator,
    pub descriptor: String,
    /// Present when the operator is exactly `Sigma(family)`.
    pub family: Option<AlphaFamily>,
    pub meta: Vec<(String, String)>,
}

fn join<T: ToString>(xs: &[T], sep: &str) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep)
}

pub fn family(k: Option<usize>, alphas: &[f64]) -> CliResult<AlphaFamily> {
    let f = match k {
        Some(k) => AlphaFamily::new(k, alphas.to_vec())?,
        None => AlphaFamily::from_alphas(alphas.to_vec())?,
    };
    Ok(f)
}

pub fn rho_state(params: &CVParams, rows: Option<&[usize]>) -> CliResult<DensityOperator> {
    let rho = build_rho(params);
    Ok(match rows {
        Some(r) => project_local(&rho, r, r)?,
        None => rho,
    })
}

pub fn resolve(src: &Source, tol: &Tolerances) -> CliResult<Resolved> {
    let meta = |pairs: &[(&str, String)]| -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    };
    Ok(match src {
        Source::Rho { a, c, n, rows } => {
            let p = CVParams::new(*a, *c, *n)?;
            let op = rho_state(&p, rows.as_deref())?;
            let rows_txt = rows.as_deref().map(|r| join(r, ","));
            let descriptor = match &rows_txt {
                Some(r) => format!("rho(a={a}, c={c}, n={n}, rows=[{r}])"),
                None => format!("rho(a={a}, c={c}, n={n})"),
            };
            let mut m = meta(&[("kind", "rho".into()), ("a", a.to_string()), ("c", c.to_string()), ("n", n.to_string())]);
            if let Some(r) = rows_txt {
                m.push(("rows".into(), r));
            }
            Resolved { op, descriptor, family: None, meta: m }
        }
        Source::Sigma { k, alphas } => {
            let f = family(*k, alphas)?;
            sigma_resolved(f, "sigma")
        }
        Source::Choi => sigma_resolved(AlphaFamily::choi(), "choi"),
        Source::DirectSum { k, alphas, probs } => {
            let f = family(*k, alphas)?;
            let op = build_direct_sum(&build_sigma(&f), probs, tol)?;
            Resolved {
                op,
                descriptor: format!("direct-sum(k={}, alphas=[{}], probs=[{}])", f.k(), join(f.alphas(), ","), join(probs, ",")),
                family: None,
                meta: meta(&[
                    ("kind", "direct-sum".into()),
                    ("k", f.k().to_string()),
                    ("alphas", join(f.alphas(), ",")),
                    ("probs", join(probs, ",")),
                ]),
            }
        }
        Source::Squeezed { lambda, n } => {
            let v = build_squeezed(*lambda, *n)?.normalized()?;
            Resolved {
                op: DensityOperator::from_pure(&v)?,
                descriptor: format!("squeezed(lambda={lambda}, n={n})"),
                family: None,
                meta: meta(&[("kind", "squeezed".into()), ("lambda", lambda.to_string()), ("n", n.to_string())]),
            }
        }
        Source::File { path } => {
            let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let doc = read_operator(BufReader::new(file))?;
            let family = file_family(&doc)?;
            let meta = doc.meta.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
            Resolved {
                op: doc.into_operator(tol)?,
                descriptor: format!("file:{}", path.display()),
                family,
                meta,
            }
        }
    })
}

fn sigma_resolved(f: AlphaFamily, kind: &str) -> Resolved {
    Resolved {
        op: build_sigma(&f),
        descriptor: format!("{kind}(k={}, alphas=[{}])", f.k(), join(f.alphas(), ",")),
        meta: vec![
            ("kind".into(), "sigma".into()),
            ("k".into(), f.k().to_string()),
            ("alphas".into(), join(f.alphas(), ",")),
        ],
        family: Some(f),
    }
}

/// Files written by `build sigma` carry their coefficients; reuse them for the exact decision.
fn file_family(doc: &ExchangeDocument) -> CliResult<Option<AlphaFamily>> {
    if doc.meta.get("kind").map(String::as_str) != Some("sigma") {
        return Ok(None);
    }
    let Some(list) = doc.meta.get("alphas") else {
        return Ok(None);
    };
    let alphas = list
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::invalid(format!("metadata alphas {list:?}: {e}")))?;
    Ok(Some(AlphaFamily::from_alphas(alphas)?))
}
