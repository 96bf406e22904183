//! CSV files for coefficients and gain traces.
//!
//! Numbers are written in shortest round-trip form ([`fmt_f64`]), so reading
//! a file back reproduces every `f64` bit for bit.
//!
//! Coefficient files carry one metadata line per series, then a header and
//! one row per coefficient:
//!
//! ```text
//! # series kernel=0 region=whole order=3 center=0,0
//! kernel,region,i,j,K_ij
//! 0,whole,0,0,0
//! ```

use std::fmt::Write as _;

use crate::assembler::SolveReport;
use crate::error::{Error, Result};
use crate::problem::KernelProblem;
use crate::triseries::{indices, TriSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct NamedSeries {
    pub kernel: usize,
    pub region: String,
    pub series: TriSeries,
}

/// Shortest decimal that parses back to `v`; exponent form outside
/// `1e-5 <= |v| < 1e16`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn coeffs_csv<'a, I>(series: I) -> String
where
    I: IntoIterator<Item = (usize, &'a str, &'a TriSeries)>,
{
    let series: Vec<_> = series.into_iter().collect();
    let mut out = String::new();
    for (k, region, s) in &series {
        let (x0, xi0) = s.center();
        let _ = writeln!(
            out,
            "# series kernel={k} region={region} order={} center={x0},{xi0}",
            s.order()
        );
    }
    out.push_str("kernel,region,i,j,K_ij\n");
    for (k, region, s) in &series {
        for (i, j) in indices(s.order()) {
            let _ = writeln!(out, "{k},{region},{i},{j},{}", fmt_f64(s.coeff(i, j)));
        }
    }
    out
}

pub fn report_coeffs_csv(report: &SolveReport) -> String {
    coeffs_csv(
        report
            .kernels
            .iter()
            .map(|k| (k.kernel, k.region, &k.series)),
    )
}

fn meta_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.split_whitespace()
        .find_map(|tok| tok.strip_prefix(key).and_then(|t| t.strip_prefix('=')))
}

fn bad(line: usize, msg: impl Into<String>) -> Error {
    Error::schema(format!("line {line}"), msg)
}

pub fn parse_coeffs_csv(text: &str) -> Result<Vec<NamedSeries>> {
    let mut out: Vec<NamedSeries> = Vec::new();
    let mut seen_header = false;
    for (n, raw) in text.lines().enumerate() {
        let ln = n + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if !meta.trim_start().starts_with("series") {
                continue;
            }
            let num = |key: &str| -> Result<&str> {
                meta_value(meta, key).ok_or_else(|| bad(ln, format!("missing {key}=")))
            };
            let kernel = num("kernel")?.parse().map_err(|_| bad(ln, "bad kernel"))?;
            let region = num("region")?.to_string();
            let order: usize = num("order")?.parse().map_err(|_| bad(ln, "bad order"))?;
            let center = num("center")?;
            let (a, b) = center.split_once(',').ok_or_else(|| bad(ln, "bad center"))?;
            let center = (
                a.parse().map_err(|_| bad(ln, "bad center"))?,
                b.parse().map_err(|_| bad(ln, "bad center"))?,
            );
            out.push(NamedSeries {
                kernel,
                region,
                series: TriSeries::zeros(order, center),
            });
            continue;
        }
        if !seen_header {
            if line != "kernel,region,i,j,K_ij" {
                return Err(bad(ln, "expected header kernel,region,i,j,K_ij"));
            }
            seen_header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad(ln, "expected 5 fields"));
        }
        let kernel: usize = f[0].parse().map_err(|_| bad(ln, "bad kernel"))?;
        let i: usize = f[2].parse().map_err(|_| bad(ln, "bad i"))?;
        let j: usize = f[3].parse().map_err(|_| bad(ln, "bad j"))?;
        let v: f64 = f[4].parse().map_err(|_| bad(ln, "bad value"))?;
        let s = out
            .iter_mut()
            .find(|s| s.kernel == kernel && s.region == f[1])
            .ok_or_else(|| bad(ln, "row for a series without metadata"))?;
        if j > i || i > s.series.order() {
            return Err(bad(ln, format!("K_{i}{j} outside order {}", s.series.order())));
        }
        s.series.set(i, j, v);
    }
    if out.is_empty() {
        return Err(Error::schema("line 1", "no series metadata found"));
    }
    Ok(out)
}

/// Points `L k / (n - 1)`, `k = 0..n`.
pub fn uniform_grid(l: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| l * k as f64 / (n - 1) as f64).collect(),
    }
}

/// `K_k(L, xi)` for every kernel on a uniform grid of `n` points.
pub fn gain_csv(report: &SolveReport, p: &KernelProblem, n: usize) -> String {
    let l = p.domain_length;
    let mut out = String::from("xi");
    for k in 0..p.kernels {
        let _ = write!(out, ",K{k}");
    }
    out.push('\n');
    for xi in uniform_grid(l, n) {
        out.push_str(&fmt_f64(xi));
        for k in 0..p.kernels {
            let _ = write!(out, ",{}", fmt_f64(report.eval(p, k, l, xi)));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_csv_round_trip() {
        let s = TriSeries::from_terms(3, (0.5, 0.7), &[(1, 1, -3.0), (3, 1, 0.1 + 0.2), (2, 0, 1e-300)]);
        let text = coeffs_csv([(0, "whole", &s)]);
        assert!(text.starts_with("# series kernel=0 region=whole order=3 center=0.5,0.7\n"));
        let back = parse_coeffs_csv(&text).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].series, s);
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, -0.0, 1e-300, -1.0298304465569954e-31, 0.1 + 0.2, 123.5, 2.5e17, -6.25, f64::MAX] {
            let t = fmt_f64(v);
            assert_eq!(t.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{t}");
        }
        assert_eq!(fmt_f64(1e-31), "1e-31");
        assert_eq!(fmt_f64(-2.34375), "-2.34375");
    }

    #[test]
    fn malformed_csv_errors() {
        assert!(parse_coeffs_csv("kernel,region,i,j,K_ij\n").is_err());
        let bad = "# series kernel=0 region=whole order=1 center=0,0\nkernel,region,i,j,K_ij\n0,whole,2,0,1\n";
        assert!(parse_coeffs_csv(bad).is_err());
    }
}
