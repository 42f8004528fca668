//! On-disk formats: grid functions as JSON with base64 values, reports as
//! pretty JSON, sweeps as CSV.

use std::fs;
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use carnot_core::calculus::{GridFunction, GridSpec};
use carnot_core::report::{Sweep, VerificationReport};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxJson {
    lo: [f64; 3],
    hi: [f64; 3],
}

/// `{box: {lo, hi}, n, values}` with `values` the little-endian f64s in base64.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridJson {
    #[serde(rename = "box")]
    bx: BoxJson,
    n: [usize; 3],
    values: String,
}

pub fn grid_to_json(g: &GridFunction) -> String {
    let mut bytes = Vec::with_capacity(8 * g.values.len());
    for v in &g.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let j = GridJson { bx: BoxJson { lo: g.spec.lo, hi: g.spec.hi }, n: g.spec.n, values: STANDARD.encode(bytes) };
    serde_json::to_string_pretty(&j).expect("grid json") + "\n"
}

pub fn grid_from_json(text: &str) -> Result<GridFunction, CliError> {
    let j: GridJson = serde_json::from_str(text).map_err(|e| CliError::Input(e.to_string()))?;
    let spec = GridSpec::new(j.bx.lo, j.bx.hi, j.n).map_err(|e| CliError::Input(e.to_string()))?;
    let bytes = STANDARD.decode(j.values.trim()).map_err(|e| CliError::Input(format!("values: {e}")))?;
    if bytes.len() != 8 * spec.len() {
        return Err(CliError::Input(format!("values: {} bytes for {} nodes", bytes.len(), spec.len())));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    GridFunction::new(spec, values).map_err(|e| CliError::Input(e.to_string()))
}

pub fn read_grid(path: &Path) -> Result<GridFunction, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    grid_from_json(&text).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        e => e,
    })
}

pub fn report_json(r: &VerificationReport) -> String {
    serde_json::to_string_pretty(r).expect("report json") + "\n"
}

/// `index, <inputs...>, lhs, rhs, ratio`.
pub fn sweep_csv(s: &Sweep) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec![String::from("index")];
    head.extend(s.input_names.iter().cloned());
    head.extend(["lhs", "rhs", "ratio"].map(String::from));
    w.write_record(&head).map_err(CliError::csv)?;
    for row in &s.rows {
        let mut rec = vec![row.index.to_string()];
        rec.extend(row.inputs.iter().map(|v| v.to_string()));
        rec.extend([row.lhs, row.rhs, row.ratio].map(|v| v.to_string()));
        w.write_record(&rec).map_err(CliError::csv)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Report file and sweep files of one check. `out` ending in `.json` names
/// the report; anything else is a directory.
pub fn check_paths(out: &Path, check: &str, sweeps: &[Sweep]) -> (PathBuf, Vec<PathBuf>) {
    let (report, dir, stem) = if out.extension().is_some_and(|e| e == "json") {
        let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| check.into());
        (out.to_path_buf(), out.parent().map(Path::to_path_buf).unwrap_or_default(), stem)
    } else {
        (out.join(format!("{check}.json")), out.to_path_buf(), check.to_string())
    };
    let csvs = sweeps
        .iter()
        .map(|s| {
            let own = s.name == stem || s.name.starts_with(&format!("{stem}-"));
            dir.join(if own { format!("{}.csv", s.name) } else { format!("{stem}-{}.csv", s.name) })
        })
        .collect();
    (report, csvs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_round_trip() {
        let spec = GridSpec::centered(1.0, 2.0, 3).unwrap();
        let vals: Vec<f64> = (0..spec.len()).map(|i| (i as f64).sin() * 1e-300 + i as f64).collect();
        let g = GridFunction::new(spec, vals).unwrap();
        let back = grid_from_json(&grid_to_json(&g)).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn short_values_rejected() {
        let spec = GridSpec::centered(1.0, 1.0, 2).unwrap();
        let mut j: serde_json::Value = serde_json::from_str(&grid_to_json(&GridFunction::zeros(spec))).unwrap();
        j["values"] = serde_json::Value::from(STANDARD.encode([0u8; 56]));
        assert!(grid_from_json(&j.to_string()).is_err());
        j["values"] = serde_json::Value::from(STANDARD.encode([0u8; 64]));
        assert!(grid_from_json(&j.to_string()).is_ok());
    }
}
