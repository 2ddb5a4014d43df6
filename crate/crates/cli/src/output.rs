//! CSV and JSON writers. Every data file gets a `<name>.meta.json` sidecar.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use oam_bepre::{
    count_joint_ml, count_permode_ml, BePreTransforms, CMatrix, ChannelMatrix, ModeIndexMap,
    VerificationReport, COST_MODEL,
};
use serde::Serialize;

use crate::config::SweepSpec;
use crate::error::CliError;
use crate::sweep::SweepResult;

pub const SNR_CONVENTION: &str =
    "unit average power per mode (total N), noise variance 10^(-snr_db/10) per receive element";
pub const SORT_ORDER: &str = "singular values descending";

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if x == 0.0 || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

/// `run.csv` → `run.meta.json`.
pub fn meta_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.json"))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: std::collections::BTreeMap<String, String>,
    pub grid_points: usize,
    pub mode_map: Vec<i64>,
    pub mode_column_rule: &'static str,
    pub sort_order: &'static str,
    pub gain_convention: String,
    pub snr_convention: &'static str,
    pub power_policy: &'static str,
    pub cost_model: &'static str,
    pub seed: u64,
}

impl Metadata {
    pub fn new(command: &str, spec: &SweepSpec, strict_eq17: bool) -> Self {
        let gain_convention = if strict_eq17 {
            "gamma_squared (se_with_bepre), gamma_linear (se_with_bepre_linear)".to_string()
        } else {
            "gamma_squared".to_string()
        };
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: spec.resolved.clone(),
            grid_points: spec.grid_size(),
            mode_map: ModeIndexMap::new(spec.geometry.n_tx).modes().to_vec(),
            mode_column_rule: "mode l occupies column l mod N",
            sort_order: SORT_ORDER,
            gain_convention,
            snr_convention: SNR_CONVENTION,
            power_policy: spec.power_policy.label(),
            cost_model: COST_MODEL,
            seed: spec.seed,
        }
    }
}

/// Fixed column order of a sweep CSV. Optional groups appear only when
/// the matching option is set; singular values pad to the largest `N`.
pub fn sweep_header(result: &SweepResult) -> Vec<String> {
    let mut h: Vec<String> = [
        "index",
        "n_elements",
        "wavelength_m",
        "radius_tx_m",
        "radius_rx_m",
        "distance_m",
        "theta_rad",
        "phi_rad",
        "tilt_x_rad",
        "tilt_y_rad",
        "alpha_tx_rad",
        "alpha_rx_rad",
        "snr_db",
        "power_policy",
        "se_with_bepre",
        "se_without_bepre",
    ]
    .map(String::from)
    .to_vec();
    if result.options.strict_eq17 {
        h.push("se_with_bepre_linear".into());
    }
    h.extend(
        [
            "equivalence_residual",
            "max_unitarity_residual",
            "numerical_rank",
        ]
        .map(String::from),
    );
    if result.options.with_ser {
        h.extend(
            [
                "ser_trials",
                "ser_seed",
                "symbol_errors_with_bepre",
                "symbol_errors_without_bepre",
                "ser_with_bepre",
                "ser_without_bepre",
            ]
            .map(String::from),
        );
    }
    h.extend((1..=result.max_modes()).map(|i| format!("lambda_{i}")));
    h.push("error".into());
    h
}

pub fn sweep_records(result: &SweepResult) -> Vec<Vec<String>> {
    let width = result.max_modes();
    result
        .rows
        .iter()
        .map(|row| {
            let g = &row.geometry;
            let mut rec = vec![row.index.to_string(), g.n_tx.to_string()];
            rec.extend(
                [
                    g.wavelength,
                    g.radius_tx,
                    g.radius_rx,
                    g.distance,
                    g.theta,
                    g.phi,
                    g.tilt_x,
                    g.tilt_y,
                    g.alpha_tx,
                    g.alpha_rx,
                    row.snr_db,
                ]
                .map(fmt_f64),
            );
            rec.push(result.power_policy.label().into());
            let blank = |n: usize| vec![String::new(); n];
            match &row.outcome {
                Ok(m) => {
                    rec.push(fmt_f64(m.se_with_bepre));
                    rec.push(fmt_f64(m.se_without_bepre));
                    if result.options.strict_eq17 {
                        rec.push(m.se_with_bepre_linear.map(fmt_f64).unwrap_or_default());
                    }
                    rec.push(fmt_f64(m.equivalence_residual));
                    rec.push(fmt_f64(m.max_unitarity_residual));
                    rec.push(m.numerical_rank.to_string());
                    if result.options.with_ser {
                        match &m.ser {
                            Some(s) => rec.extend([
                                s.trials.to_string(),
                                s.seed.to_string(),
                                s.symbol_errors_with_bepre.to_string(),
                                s.symbol_errors_without_bepre.to_string(),
                                fmt_f64(s.ser_with),
                                fmt_f64(s.ser_without),
                            ]),
                            None => rec.extend(blank(6)),
                        }
                    }
                    rec.extend(m.lambda.iter().map(|&l| fmt_f64(l)));
                    rec.extend(blank(width - m.lambda.len()));
                    rec.push(String::new());
                }
                Err(e) => {
                    let mut n = 5 + width;
                    if result.options.strict_eq17 {
                        n += 1;
                    }
                    if result.options.with_ser {
                        n += 6;
                    }
                    rec.extend(blank(n));
                    rec.push(e.clone());
                }
            }
            rec
        })
        .collect()
}

pub fn write_csv(path: &Path, header: &[String], records: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in records {
        w.write_record(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes the sweep table to `path` and its metadata sidecar.
pub fn emit_csv(result: &SweepResult, meta: &Metadata, path: &Path) -> Result<(), CliError> {
    write_csv(path, &sweep_header(result), &sweep_records(result))?;
    write_json(&meta_path(path), meta)
}

#[derive(Debug, Serialize)]
pub struct MatrixJson {
    pub m: usize,
    pub n: usize,
    pub entries_re: Vec<Vec<f64>>,
    pub entries_im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(h: &CMatrix<f64>) -> Self {
        let rows = |f: fn(&num_complex::Complex<f64>) -> f64| {
            (0..h.nrows())
                .map(|i| (0..h.ncols()).map(|k| f(&h[(i, k)])).collect())
                .collect()
        };
        Self {
            m: h.nrows(),
            n: h.ncols(),
            entries_re: rows(|z| z.re),
            entries_im: rows(|z| z.im),
        }
    }
}

/// Channel as JSON when `path` ends in `.json`, otherwise as a long CSV
/// with 1-based indices.
pub fn emit_channel(h: &ChannelMatrix<f64>, meta: &Metadata, path: &Path) -> Result<(), CliError> {
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        write_json(path, &MatrixJson::from_matrix(&h.entries))?;
    } else {
        let header = ["m", "n", "re", "im", "abs", "phase_rad"].map(String::from);
        let mut records = Vec::with_capacity(h.entries.len());
        for m in 0..h.n_rx() {
            for n in 0..h.n_tx() {
                let z = h.entries[(m, n)];
                records.push(vec![
                    (m + 1).to_string(),
                    (n + 1).to_string(),
                    fmt_f64(z.re),
                    fmt_f64(z.im),
                    fmt_f64(z.norm()),
                    fmt_f64(z.arg()),
                ]);
            }
        }
        write_csv(path, &header, &records)?;
    }
    write_json(&meta_path(path), meta)
}

#[derive(Debug, Serialize)]
pub struct VerificationJson {
    pub equivalence_residual: f64,
    pub beamform_unitarity: f64,
    pub predetect_unitarity: f64,
    pub circulant_residual: f64,
    pub lambda_residual: f64,
}

impl From<&VerificationReport<f64>> for VerificationJson {
    fn from(r: &VerificationReport<f64>) -> Self {
        Self {
            equivalence_residual: r.equivalence_residual,
            beamform_unitarity: r.beamform_unitarity,
            predetect_unitarity: r.predetect_unitarity,
            circulant_residual: r.circulant_residual,
            lambda_residual: r.lambda_residual,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BePreJson {
    pub n: usize,
    pub lambda: Vec<f64>,
    pub numerical_rank: usize,
    pub beamform: MatrixJson,
    pub predetect: MatrixJson,
    pub circulant: MatrixJson,
    pub verification: VerificationJson,
}

pub fn emit_bepre(
    t: &BePreTransforms<f64>,
    report: &VerificationReport<f64>,
    meta: &Metadata,
    path: &Path,
) -> Result<(), CliError> {
    let doc = BePreJson {
        n: t.n(),
        lambda: t.lambda.iter().copied().collect(),
        numerical_rank: t.numerical_rank,
        beamform: MatrixJson::from_matrix(&t.beamform),
        predetect: MatrixJson::from_matrix(&t.predetect),
        circulant: MatrixJson::from_matrix(&t.circulant),
        verification: report.into(),
    };
    write_json(path, &doc)?;
    write_json(&meta_path(path), meta)
}

/// One row per `N` in `ns` at constellation size `xi`.
pub fn complexity_records(ns: &[usize], xi: usize) -> oam_bepre::Result<Vec<Vec<String>>> {
    ns.iter()
        .map(|&n| {
            let joint = count_joint_ml(n, xi)?;
            let per = count_permode_ml(n, xi)?;
            Ok(vec![
                n.to_string(),
                xi.to_string(),
                joint.real_additions.to_string(),
                joint.real_multiplications.to_string(),
                per.real_additions.to_string(),
                per.real_multiplications.to_string(),
                joint.model_version.to_string(),
            ])
        })
        .collect()
}

pub fn complexity_header() -> Vec<String> {
    [
        "N",
        "xi",
        "adds_joint",
        "mults_joint",
        "adds_permode",
        "mults_permode",
        "model_version",
    ]
    .map(String::from)
    .to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            1e-20,
            6.02e23,
            -2.5e-7,
            0.0,
            123456.789,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(0.25), "0.25");
        assert_eq!(fmt_f64(1e-20), "1e-20");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            meta_path(Path::new("out/run.csv")),
            PathBuf::from("out/run.meta.json")
        );
        assert_eq!(meta_path(Path::new("h.json")), PathBuf::from("h.meta.json"));
    }

    #[test]
    fn complexity_rows() {
        let rows = complexity_records(&[1, 10], 4).unwrap();
        assert_eq!(rows[0], ["1", "4", "20", "24", "24", "32", "cm1"]);
        assert_eq!(rows[1][2], "439353344");
        assert_eq!(complexity_header().len(), rows[0].len());
    }
}
