//! Serialization of result bundles to JSON or CSV.
//!
//! Both forms are deterministic: floats are written in their shortest
//! round-trip form and rows follow grid or sweep order.

use std::path::Path;

use crate::error::{Error, Result};
use crate::run::{Cx, Output, PhaseOut, PhaseOutput, ResultBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

pub fn export(bundle: &ResultBundle, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(bundle),
        Format::Csv => to_csv(bundle),
    }
}

/// Exports and writes to `dest`, or to standard output when `dest` is `None`.
pub fn write_export(bundle: &ResultBundle, format: Format, dest: Option<&Path>) -> Result<()> {
    let text = export(bundle, format)?;
    match dest {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::Io {
                    path: "<stdout>".into(),
                    message: e.to_string(),
                })
        }
    }
}

fn to_json(bundle: &ResultBundle) -> Result<String> {
    let mut text = serde_json::to_string_pretty(bundle).map_err(|e| Error::Numerical {
        operation: "export".into(),
        message: e.to_string(),
    })?;
    text.push('\n');
    Ok(text)
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn optf(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Rows of the long `quantity, re, im, branch_offset` layout.
fn quantities(output: &Output) -> Vec<(String, Cx, Option<i64>)> {
    let plain = |name: &str, z: Cx| (name.to_string(), z, None);
    let phase = |name: &str, p: PhaseOut| (name.to_string(), Cx { re: p.re, im: p.im }, Some(p.branch_offset));
    let real = |name: &str, x: f64| plain(name, Cx { re: x, im: 0.0 });
    let single = |prefix: &str, p: &PhaseOutput| {
        let mut rows = vec![
            phase(&format!("{prefix}pancharatnam"), p.pancharatnam),
            plain(&format!("{prefix}dynamical"), p.dynamical),
            plain(&format!("{prefix}geometric"), p.geometric),
            plain(&format!("{prefix}endpoint_overlap"), p.endpoint_overlap),
        ];
        if let Some(d) = p.direct_discrepancy {
            rows.push(plain(&format!("{prefix}direct_discrepancy"), d));
        }
        rows
    };
    match output {
        Output::Phase(p) => {
            let mut rows = single("", p);
            if let Some(m) = p.anchor_min_overlap {
                rows.push(real("anchor_min_overlap", m));
            }
            rows
        }
        Output::Offdiag(o) => {
            let mut rows = vec![
                phase("gamma_jk", o.gamma_jk),
                phase("bracket_j0_a_kt", o.brackets[0]),
                phase("bracket_k0_a_jt", o.brackets[1]),
            ];
            rows.extend(single("j_", &o.singles[0]));
            rows.extend(single("k_", &o.singles[1]));
            rows.push(real("anchor_min_overlap", o.anchor_min_overlap));
            rows
        }
        Output::Geodesic(g) => vec![
            phase("theta", g.theta),
            phase("line_integral", g.line_integral),
            real("theorem_discrepancy", g.theorem_discrepancy),
            real("max_in_phase_residual", g.max_in_phase_residual),
            real("geodesic_residual", g.geodesic_residual),
            plain("path_length", g.path_length),
        ],
        Output::Polygon(p) => vec![phase("phase", p.phase)],
        Output::Evolve(_) | Output::Check(_) | Output::Sweep(_) => Vec::new(),
    }
}

fn to_csv(bundle: &ResultBundle) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io {
        path: "<csv buffer>".into(),
        message: e.to_string(),
    };
    let res = &bundle.resolution;
    match &bundle.output {
        Output::Evolve(e) => {
            let n = e.dimension;
            let mut header = vec!["t".to_string()];
            for part in ["re_psi", "im_psi", "re_dual", "im_dual"] {
                header.extend((0..n).map(|k| format!("{part}_{k}")));
            }
            header.push("binorm_defect".into());
            w.write_record(&header).map_err(io)?;
            for row in e.trajectory.iter().flatten() {
                let mut rec = vec![num(row.t)];
                rec.extend(row.state.iter().map(|z| num(z.re)));
                rec.extend(row.state.iter().map(|z| num(z.im)));
                rec.extend(row.dual.iter().map(|z| num(z.re)));
                rec.extend(row.dual.iter().map(|z| num(z.im)));
                rec.push(num(row.binorm_defect));
                w.write_record(&rec).map_err(io)?;
            }
        }
        Output::Check(k) => {
            w.write_record(["operation", "steps", "check", "status", "measured", "threshold", "detail"])
                .map_err(io)?;
            for row in &k.checks {
                w.write_record([
                    bundle.operation.to_string(),
                    opt(res.steps),
                    row.name.to_string(),
                    row.status.as_str().to_string(),
                    optf(row.measured),
                    optf(row.threshold),
                    row.detail.clone().unwrap_or_default(),
                ])
                .map_err(io)?;
            }
        }
        Output::Sweep(s) => {
            w.write_record([
                "operation", "command", "parameter", "index", "value", "status", "steps", "re",
                "im", "branch_offset", "error_kind", "exit_status",
            ])
            .map_err(io)?;
            for row in &s.rows {
                let steps = row.result.as_ref().and_then(|b| b.resolution.steps);
                w.write_record([
                    bundle.operation.to_string(),
                    s.command.to_string(),
                    s.parameter.to_string(),
                    row.index.to_string(),
                    num(row.value),
                    row.status.to_string(),
                    opt(steps),
                    optf(row.headline.map(|z| z.re)),
                    optf(row.headline.map(|z| z.im)),
                    opt(row.branch_offset),
                    opt(row.error.as_ref().map(|e| e.kind)),
                    opt(row.error.as_ref().map(|e| e.exit_status)),
                ])
                .map_err(io)?;
            }
        }
        other => {
            w.write_record([
                "operation", "mode", "t0", "t1", "steps", "samples", "quantity", "re", "im",
                "branch_offset",
            ])
            .map_err(io)?;
            let mode = match other {
                Output::Phase(p) => p.mode,
                _ => "",
            };
            for (name, z, offset) in quantities(other) {
                w.write_record([
                    bundle.operation.to_string(),
                    mode.to_string(),
                    optf(res.t0),
                    optf(res.t1),
                    opt(res.steps),
                    res.samples.to_string(),
                    name,
                    num(z.re),
                    num(z.im),
                    opt(offset),
                ])
                .map_err(io)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io {
        path: "<csv buffer>".into(),
        message: e.to_string(),
    })?;
    String::from_utf8(bytes).map_err(|e| Error::Io {
        path: "<csv buffer>".into(),
        message: e.to_string(),
    })
}
