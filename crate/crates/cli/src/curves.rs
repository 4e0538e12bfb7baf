//! The `model-curves` subcommand: replication/coded expected-time ratio
//! against the mean fault count per iteration.

use std::fmt::Write as _;

use codenet_core::runtime_model::{linspace, tradeoff_rows, write_tradeoff_csv, RuntimeModelParams, TradeoffRow};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveOptions {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
    pub tau_f: f64,
    pub tau_b: f64,
    pub tau_cpt: f64,
    pub iterations: u64,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            lambda_min: 0.1,
            lambda_max: 10.0,
            points: 50,
            tau_f: 1.0,
            tau_b: 1000.0,
            tau_cpt: 1000.0,
            iterations: 2000,
        }
    }
}

pub fn rows(opts: &CurveOptions) -> Result<Vec<TradeoffRow>, CliError> {
    if !(opts.lambda_min >= 0.0 && opts.lambda_max >= opts.lambda_min) || opts.points == 0 {
        return Err(CliError::Usage(
            "need 0 <= lambda-min <= lambda-max and points >= 1".into(),
        ));
    }
    let base = RuntimeModelParams::poisson(0.0, opts.tau_f, opts.tau_b, opts.tau_cpt, 1, opts.iterations);
    base.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let grid = linspace(opts.lambda_min, opts.lambda_max, opts.points);
    tradeoff_rows(&grid, &base).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn csv(rows: &[TradeoffRow]) -> String {
    let mut buf = Vec::new();
    write_tradeoff_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Line chart of the ratio column, log-scaled on the y axis.
pub fn svg(rows: &[TradeoffRow]) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let xs: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.ratio.max(f64::MIN_POSITIVE).log10()).collect();
    let (x0, x1) = (
        xs.iter().copied().fold(f64::INFINITY, f64::min),
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = (
        ys.iter().copied().fold(f64::INFINITY, f64::min),
        ys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let sx = |x: f64| pad + (x - x0) / (x1 - x0).max(1e-12) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0).max(1e-12) * (h - 2.0 * pad);
    let points = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect::<Vec<_>>()
        .join(" ");
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<line x1="{pad}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{pad}" y1="{pad}" x2="{pad}" y2="{b}" stroke="black"/>"#,
        b = h - pad,
        r = w - pad
    );
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{points}"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">lambda ({x0:.3} to {x1:.3})</text>"#,
        w / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">log10 E[T_rep]/E[T_codenet] ({y0:.2} to {y1:.2})</text>"#,
        h / 2.0,
        h / 2.0
    );
    out.push_str("</svg>\n");
    out
}
