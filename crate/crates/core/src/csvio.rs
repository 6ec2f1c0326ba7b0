//! Trace files: `# key=value` metadata lines, the header
//! `time_s,alpha_raw,alpha_norm`, then one row per sample. Floats are written
//! with 17 significant digits so that reading a written file gives back the
//! identical bits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::trace::DecayTrace;

pub const HEADER: &str = "time_s,alpha_raw,alpha_norm";

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trace_to_csv(trace: &DecayTrace) -> Result<String> {
    trace.validate()?;
    let mut out = String::new();
    for (k, v) in &trace.metadata {
        if k.contains(['=', '\n']) || v.contains('\n') {
            return Err(Error::InvalidTrace(format!("metadata entry `{k}` cannot be written on one line")));
        }
        writeln!(out, "# {k}={v}").unwrap();
    }
    writeln!(out, "{HEADER}").unwrap();
    for i in 0..trace.len() {
        writeln!(out, "{},{},{}", fmt(trace.time[i]), fmt(trace.alpha_raw[i]), fmt(trace.alpha_norm[i])).unwrap();
    }
    Ok(out)
}

pub fn trace_from_csv(text: &str) -> Result<DecayTrace> {
    let mut metadata = BTreeMap::new();
    let (mut time, mut raw, mut norm) = (Vec::new(), Vec::new(), Vec::new());
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let bad = |message: String| Error::MalformedCsv { line: lineno, message };
        let line = line.trim_end_matches('\r');
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest
                .trim_start()
                .split_once('=')
                .ok_or_else(|| bad("metadata line without `=`".into()))?;
            metadata.insert(k.trim().to_string(), v.to_string());
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            if line.trim() != HEADER {
                return Err(bad(format!("expected header `{HEADER}`, got `{line}`")));
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 columns, got {}", fields.len())));
        }
        let mut vals = [0.0; 3];
        for (v, f) in vals.iter_mut().zip(&fields) {
            *v = f.trim().parse().map_err(|_| bad(format!("not a number: `{f}`")))?;
        }
        time.push(vals[0]);
        raw.push(vals[1]);
        norm.push(vals[2]);
    }
    if !seen_header {
        return Err(Error::MalformedCsv {
            line: text.lines().count().max(1),
            message: "missing header row".into(),
        });
    }
    let mut trace = DecayTrace::new(time, raw, norm).map_err(|e| Error::MalformedCsv {
        line: 0,
        message: e.to_string(),
    })?;
    trace.metadata = metadata;
    Ok(trace)
}

pub fn write_trace_csv(trace: &DecayTrace, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, trace_to_csv(trace)?)?;
    Ok(())
}

pub fn read_trace_csv(path: &Path) -> Result<DecayTrace> {
    trace_from_csv(&std::fs::read_to_string(path)?)
}
