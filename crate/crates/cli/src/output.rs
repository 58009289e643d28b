//! Plain-text writers: trajectory CSV, metrics, comparison tables.

use std::fmt::Write as _;

use smc_core::sim::{Comparison, Metrics, Trajectory};

pub const TRAJECTORY_HEADER: &str = "t,x0,x1,e,u,u_eq,u_sw,s,sdot,V,Vdot,d";

/// Nine significant digits, plain decimal where that stays short,
/// scientific otherwise.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_zeros(s)
    } else {
        let s = format!("{x:.8e}");
        match s.split_once('e') {
            Some((m, e)) => format!("{}e{e}", trim_zeros(m.to_string())),
            None => s,
        }
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), sig9)
}

pub fn trajectory_csv(tr: &Trajectory) -> String {
    let mut out = String::with_capacity(tr.records.len() * 120);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in &tr.records {
        let row = [r.t, r.x[0], r.x[1], r.e, r.u, r.u_eq, r.u_sw, r.s, r.s_dot, r.v, r.v_dot, r.d];
        let cells: Vec<String> = row.iter().map(|v| sig9(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn metrics_text(name: &str, m: &Metrics, tr: &Trajectory) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario={name}");
    for (k, v) in Metrics::KEYS.iter().zip(m.values()) {
        let _ = writeln!(out, "{k}={}", opt(v));
    }
    let _ = writeln!(out, "steps={}", tr.records.len());
    let _ = writeln!(out, "clipped_steps={}", tr.clipped_steps);
    let _ = writeln!(out, "singularity={}", tr.singular());
    match &tr.abort {
        Some(a) => {
            let _ = writeln!(out, "abort_step={}", a.step);
            let _ = writeln!(out, "abort_reason={}", a.reason);
        }
        None => {
            let _ = writeln!(out, "abort_step=none");
        }
    }
    out
}

pub fn metrics_csv_header() -> String {
    format!("label,{},abort", Metrics::KEYS.join(","))
}

pub fn metrics_csv_row(label: &str, m: &Metrics, abort: Option<&str>) -> String {
    let vals: Vec<String> = m.values().iter().map(|v| opt(*v)).collect();
    format!("{label},{},{}", vals.join(","), abort.unwrap_or("none").replace(',', ";"))
}

pub fn comparison_csv(c: &Comparison) -> String {
    let mut out = metrics_csv_header();
    out.push('\n');
    for r in &c.rows {
        out.push_str(&metrics_csv_row(&r.label, &r.metrics, r.abort.as_deref()));
        out.push('\n');
    }
    out
}

/// Fixed-width table for the terminal.
pub fn comparison_table(c: &Comparison) -> String {
    let mut out = format!("{:<14}", "label");
    for k in Metrics::KEYS {
        let _ = write!(out, " {k:>18}");
    }
    out.push('\n');
    for r in &c.rows {
        let _ = write!(out, "{:<14}", r.label);
        for v in r.metrics.values() {
            let _ = write!(out, " {:>18}", opt(v));
        }
        if let Some(a) = &r.abort {
            let _ = write!(out, "  [aborted: {a}]");
        }
        out.push('\n');
    }
    out
}
