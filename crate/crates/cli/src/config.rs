//! Flat `key = value` experiment description.
//!
//! ```text
//! # phi sweep at a fixed theta
//! n_elements = 8
//! theta_rad  = pi/6
//! snr_db     = 40
//! sweep.param = phi_rad
//! sweep.start = 0
//! sweep.stop  = pi/2
//! sweep.count = 50
//! ```
//!
//! Angles accept `pi` expressions (`3*pi/10`, `-pi/4`, `2pi`) or a `deg`
//! suffix (`30deg`). Lines starting with `#` and trailing `# ...` are comments.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex;
use oam_bepre::LinkGeometry;
use serde::Serialize;

pub const DEFAULT_WAVELENGTH: f64 = 0.01;
pub const DEFAULT_DISTANCE: f64 = 1.0;
pub const DEFAULT_SNR_DB: f64 = 20.0;
pub const DEFAULT_TRIALS: u64 = 10_000;
pub const MAX_SWEEP_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config key `{}`: {}", self.key, self.message)
        } else {
            write!(
                f,
                "config line {}, key `{}`: {}",
                self.line, self.key, self.message
            )
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerPolicy {
    Equal,
    Waterfill,
}

impl PowerPolicy {
    pub fn label(self) -> &'static str {
        match self {
            PowerPolicy::Equal => "equal",
            PowerPolicy::Waterfill => "waterfill",
        }
    }
}

/// Parameters that may be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    NElements,
    WavelengthM,
    RadiusTxM,
    RadiusRxM,
    DistanceM,
    ThetaRad,
    PhiRad,
    TiltXRad,
    TiltYRad,
    AlphaTxRad,
    AlphaRxRad,
    SnrDb,
}

impl SweepParam {
    pub const ALL: [SweepParam; 12] = [
        SweepParam::NElements,
        SweepParam::WavelengthM,
        SweepParam::RadiusTxM,
        SweepParam::RadiusRxM,
        SweepParam::DistanceM,
        SweepParam::ThetaRad,
        SweepParam::PhiRad,
        SweepParam::TiltXRad,
        SweepParam::TiltYRad,
        SweepParam::AlphaTxRad,
        SweepParam::AlphaRxRad,
        SweepParam::SnrDb,
    ];

    pub fn key(self) -> &'static str {
        match self {
            SweepParam::NElements => "n_elements",
            SweepParam::WavelengthM => "wavelength_m",
            SweepParam::RadiusTxM => "radius_tx_m",
            SweepParam::RadiusRxM => "radius_rx_m",
            SweepParam::DistanceM => "distance_m",
            SweepParam::ThetaRad => "theta_rad",
            SweepParam::PhiRad => "phi_rad",
            SweepParam::TiltXRad => "tilt_x_rad",
            SweepParam::TiltYRad => "tilt_y_rad",
            SweepParam::AlphaTxRad => "alpha_tx_rad",
            SweepParam::AlphaRxRad => "alpha_rx_rad",
            SweepParam::SnrDb => "snr_db",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.key() == key)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl SweepAxis {
    /// Evenly spaced values from `start` to `stop` inclusive.
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

/// A validated experiment: base geometry, run settings and up to two
/// swept axes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub geometry: LinkGeometry<f64>,
    pub snr_db: f64,
    pub constellation: String,
    pub power_policy: PowerPolicy,
    pub trials: u64,
    pub seed: u64,
    pub sweeps: Vec<SweepAxis>,
    /// Every key with its resolved value, defaults included.
    pub resolved: BTreeMap<String, String>,
}

impl SweepSpec {
    pub fn grid_size(&self) -> usize {
        self.sweeps.iter().map(|a| a.count).product()
    }
}

const KEYS: &[&str] = &[
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
    "beta_re",
    "beta_im",
    "snr_db",
    "constellation",
    "power_policy",
    "trials",
    "seed",
    "sweep.param",
    "sweep.start",
    "sweep.stop",
    "sweep.count",
    "sweep2.param",
    "sweep2.start",
    "sweep2.stop",
    "sweep2.count",
];

struct Entry {
    line: usize,
    value: String,
}

fn err(line: usize, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

/// Evaluates a product/quotient of numbers and `pi`, with an optional sign
/// and an optional trailing `deg`.
pub fn parse_real(text: &str) -> Option<f64> {
    let s = text.trim();
    if let Some(deg) = s.strip_suffix("deg") {
        return parse_real(deg).map(|v| v * PI / 180.0);
    }
    let lower = s.to_ascii_lowercase();
    match lower.as_str() {
        "inf" | "+inf" | "infinity" => return Some(f64::INFINITY),
        "-inf" | "-infinity" => return Some(f64::NEG_INFINITY),
        _ => {}
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim_start()),
        None => (1.0, s.strip_prefix('+').unwrap_or(s).trim_start()),
    };
    if body.is_empty() {
        return None;
    }
    let mut value = sign;
    let mut divide = false;
    let mut rest = body;
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let factor = parse_factor(rest[..end].trim())?;
        value = if divide {
            value / factor
        } else {
            value * factor
        };
        if end == rest.len() {
            break;
        }
        divide = rest.as_bytes()[end] == b'/';
        rest = &rest[end + 1..];
    }
    value.is_finite().then_some(value)
}

fn parse_factor(f: &str) -> Option<f64> {
    let pi_suffix = f.strip_suffix("pi").or_else(|| f.strip_suffix('π'));
    match pi_suffix {
        Some("") => Some(PI),
        Some(coef) => coef.trim().parse::<f64>().ok().map(|c| c * PI),
        None => f.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

fn strip_comment(line: &str) -> &str {
    line.find('#').map_or(line, |i| &line[..i])
}

pub fn parse_config(text: &str) -> Result<SweepSpec, ConfigError> {
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, content, "expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) {
            return Err(err(line, key, "unknown key"));
        }
        if value.is_empty() {
            return Err(err(line, key, "missing value"));
        }
        if let Some(prev) = entries.get(key) {
            return Err(err(
                line,
                key,
                format!("duplicate key, first set on line {}", prev.line),
            ));
        }
        entries.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }
    build(&entries)
}

struct Reader<'a> {
    entries: &'a BTreeMap<String, Entry>,
    resolved: BTreeMap<String, String>,
}

impl Reader<'_> {
    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    fn real(&mut self, key: &str, default: Option<f64>) -> Result<Option<f64>, ConfigError> {
        let value = match self.entries.get(key) {
            Some(e) => Some(
                parse_real(&e.value)
                    .ok_or_else(|| err(e.line, key, format!("`{}` is not a number", e.value)))?,
            ),
            None => default,
        };
        if let Some(v) = value {
            self.resolved
                .insert(key.to_string(), crate::output::fmt_f64(v));
        }
        Ok(value)
    }

    fn required_real(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.real(key, Some(default))?.expect("default supplied"))
    }

    fn integer(&mut self, key: &str, default: Option<u64>) -> Result<Option<u64>, ConfigError> {
        let value = match self.entries.get(key) {
            Some(e) => Some(e.value.replace('_', "").parse::<u64>().map_err(|_| {
                err(
                    e.line,
                    key,
                    format!("`{}` is not a non-negative integer", e.value),
                )
            })?),
            None => default,
        };
        if let Some(v) = value {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(value)
    }

    fn text(&mut self, key: &str, default: Option<&str>) -> Option<String> {
        let value = self
            .entries
            .get(key)
            .map(|e| e.value.clone())
            .or(default.map(str::to_string));
        if let Some(v) = &value {
            self.resolved.insert(key.to_string(), v.clone());
        }
        value
    }
}

fn build(entries: &BTreeMap<String, Entry>) -> Result<SweepSpec, ConfigError> {
    let mut r = Reader {
        entries,
        resolved: BTreeMap::new(),
    };
    let n = r
        .integer("n_elements", None)?
        .ok_or_else(|| err(0, "n_elements", "required key is missing"))?;
    if n == 0 {
        return Err(err(
            r.line("n_elements"),
            "n_elements",
            "must be at least 1",
        ));
    }
    let n = n as usize;
    let wavelength = r.required_real("wavelength_m", DEFAULT_WAVELENGTH)?;
    let distance = r.required_real("distance_m", DEFAULT_DISTANCE)?;
    let mut geometry = LinkGeometry::aligned(n, wavelength, distance);
    geometry.radius_tx = r.required_real("radius_tx_m", 4.0 * wavelength)?;
    geometry.radius_rx = r.required_real("radius_rx_m", 4.0 * wavelength)?;
    geometry.theta = r.required_real("theta_rad", 0.0)?;
    geometry.phi = r.required_real("phi_rad", 0.0)?;
    geometry.tilt_x = r.required_real("tilt_x_rad", 0.0)?;
    geometry.tilt_y = r.required_real("tilt_y_rad", 0.0)?;
    geometry.alpha_tx = r.required_real("alpha_tx_rad", 0.0)?;
    geometry.alpha_rx = r.required_real("alpha_rx_rad", 0.0)?;
    geometry.beta = Complex::new(
        r.required_real("beta_re", 1.0)?,
        r.required_real("beta_im", 0.0)?,
    );
    geometry.validate().map_err(|e| {
        let msg = e.to_string();
        let key = [
            ("radius_tx", "radius_tx_m"),
            ("radius_rx", "radius_rx_m"),
            ("distance", "distance_m"),
            ("wavelength", "wavelength_m"),
        ]
        .into_iter()
        .find(|(name, _)| msg.contains(name))
        .map_or("n_elements", |(_, key)| key);
        err(r.line(key), key, msg)
    })?;

    let snr_db = r.required_real("snr_db", DEFAULT_SNR_DB)?;
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(err(
            r.line("snr_db"),
            "snr_db",
            "must be a finite number or inf",
        ));
    }

    let constellation = r
        .text("constellation", Some("qpsk"))
        .expect("default supplied");
    if oam_bepre::Constellation::<f64>::by_name(&constellation).is_none() {
        return Err(err(
            r.line("constellation"),
            "constellation",
            format!("unknown constellation `{constellation}` (expected qpsk or 16qam)"),
        ));
    }
    let policy = r
        .text("power_policy", Some("equal"))
        .expect("default supplied");
    let power_policy = match policy.to_ascii_lowercase().as_str() {
        "equal" => PowerPolicy::Equal,
        "waterfill" | "water_filling" | "water-filling" => PowerPolicy::Waterfill,
        other => {
            return Err(err(
                r.line("power_policy"),
                "power_policy",
                format!("unknown policy `{other}` (expected equal or waterfill)"),
            ))
        }
    };
    let trials = r
        .integer("trials", Some(DEFAULT_TRIALS))?
        .expect("default supplied");
    if trials == 0 {
        return Err(err(r.line("trials"), "trials", "must be at least 1"));
    }
    let seed = r.integer("seed", Some(0))?.expect("default supplied");

    let mut sweeps = Vec::new();
    for prefix in ["sweep", "sweep2"] {
        if let Some(axis) = read_axis(&mut r, prefix)? {
            sweeps.push(axis);
        }
    }
    if sweeps.len() == 2 && sweeps[0].param == sweeps[1].param {
        return Err(err(
            r.line("sweep2.param"),
            "sweep2.param",
            "sweeps the same parameter twice",
        ));
    }
    if !entries.contains_key("sweep.param") && entries.contains_key("sweep2.param") {
        return Err(err(
            r.line("sweep2.param"),
            "sweep2.param",
            "set sweep.* before sweep2.*",
        ));
    }
    let total: usize = sweeps.iter().map(|a| a.count).product();
    if total > MAX_SWEEP_POINTS {
        return Err(err(
            0,
            "sweep.count",
            format!("grid has {total} points, limit is {MAX_SWEEP_POINTS}"),
        ));
    }

    Ok(SweepSpec {
        geometry,
        snr_db,
        constellation: constellation.to_ascii_lowercase(),
        power_policy,
        trials,
        seed,
        sweeps,
        resolved: r.resolved,
    })
}

fn read_axis(r: &mut Reader<'_>, prefix: &str) -> Result<Option<SweepAxis>, ConfigError> {
    let key = |s: &str| format!("{prefix}.{s}");
    let present: Vec<String> = ["param", "start", "stop", "count"]
        .into_iter()
        .map(key)
        .filter(|k| r.entries.contains_key(k))
        .collect();
    if present.is_empty() {
        return Ok(None);
    }
    for k in ["param", "start", "stop", "count"].map(key) {
        if !r.entries.contains_key(&k) {
            let line = r.line(&present[0]);
            return Err(err(line, &k, "required when any sweep key is set"));
        }
    }
    let param_key = key("param");
    let name = r.text(&param_key, None).expect("checked present");
    let param = SweepParam::from_key(&name).ok_or_else(|| {
        err(
            r.line(&param_key),
            &param_key,
            format!("`{name}` cannot be swept"),
        )
    })?;
    let start = r.required_real(&key("start"), 0.0)?;
    let stop = r.required_real(&key("stop"), 0.0)?;
    let count_key = key("count");
    let count = r.integer(&count_key, None)?.expect("checked present") as usize;
    if count == 0 {
        return Err(err(r.line(&count_key), &count_key, "must be at least 1"));
    }
    if !start.is_finite() || !stop.is_finite() {
        return Err(err(
            r.line(&key("start")),
            &key("start"),
            "sweep bounds must be finite",
        ));
    }
    if param == SweepParam::NElements
        && (start < 1.0 || start.fract() != 0.0 || stop.fract() != 0.0)
    {
        return Err(err(
            r.line(&key("start")),
            &key("start"),
            "n_elements sweeps need integer bounds >= 1",
        ));
    }
    Ok(Some(SweepAxis {
        param,
        start,
        stop,
        count,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let spec = parse_config("n_elements = 8\n").unwrap();
        let g = &spec.geometry;
        assert_eq!(g.n_tx, 8);
        assert_eq!(g.n_rx, 8);
        assert_eq!(g.wavelength, 0.01);
        assert_eq!(g.radius_tx, 0.04);
        assert_eq!(g.radius_rx, 0.04);
        assert_eq!(g.distance, 1.0);
        assert_eq!(g.beta, Complex::new(1.0, 0.0));
        assert_eq!(
            (g.alpha_tx, g.alpha_rx, g.theta, g.phi, g.tilt_x, g.tilt_y),
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        );
        assert_eq!(spec.power_policy, PowerPolicy::Equal);
        assert_eq!(spec.constellation, "qpsk");
        assert_eq!(spec.grid_size(), 1);
        assert_eq!(spec.resolved["radius_rx_m"], "0.04");
    }

    #[test]
    fn pi_expressions() {
        assert_eq!(parse_real("pi"), Some(PI));
        assert_eq!(parse_real("-pi/2"), Some(-PI / 2.0));
        assert_eq!(parse_real("3*pi/10"), Some(3.0 * PI / 10.0));
        assert_eq!(parse_real("2pi"), Some(2.0 * PI));
        assert_eq!(parse_real("π/6"), Some(PI / 6.0));
        assert_eq!(parse_real("1.5e-3"), Some(1.5e-3));
        assert_eq!(parse_real("180deg"), Some(PI));
        assert_eq!(parse_real("inf"), Some(f64::INFINITY));
        assert_eq!(parse_real("abc"), None);
        assert_eq!(parse_real("pi/0"), None);
        assert_eq!(parse_real("-"), None);
        assert_eq!(parse_real("1/"), None);
    }

    #[test]
    fn sweep_grid() {
        let spec = parse_config(
            "n_elements = 8\n# comment\nsweep.param = phi_rad\nsweep.start = 0\nsweep.stop = pi/2 # quarter turn\nsweep.count = 50\n",
        )
        .unwrap();
        assert_eq!(spec.grid_size(), 50);
        let v = spec.sweeps[0].values();
        assert_eq!(v.len(), 50);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[49], PI / 2.0);
        let one = SweepAxis {
            param: SweepParam::PhiRad,
            start: 0.3,
            stop: 9.0,
            count: 1,
        };
        assert_eq!(one.values(), vec![0.3]);
    }

    #[test]
    fn two_dimensional_sweep() {
        let text = "n_elements=8\nsweep.param=tilt_x_rad\nsweep.start=0\nsweep.stop=pi/2\nsweep.count=50\nsweep2.param=tilt_y_rad\nsweep2.start=0\nsweep2.stop=pi/2\nsweep2.count=50\n";
        assert_eq!(parse_config(text).unwrap().grid_size(), 2500);
    }

    #[test]
    fn malformed_value_names_key_and_line() {
        let e = parse_config("n_elements = 8\nphi_rad = abc\n").unwrap_err();
        assert_eq!((e.line, e.key.as_str()), (2, "phi_rad"));
        assert!(e.to_string().contains("line 2") && e.to_string().contains("phi_rad"));
    }

    #[test]
    fn rejects_bad_documents() {
        let cases = [
            ("phi_rad = 0.1\n", "n_elements"),
            ("n_elements = 8\nfoo = 1\n", "foo"),
            ("n_elements = 8\nn_elements = 4\n", "n_elements"),
            ("n_elements = 8\nsweep.param = phi_rad\n", "sweep.start"),
            ("n_elements = 8\nsweep.param = beta_re\nsweep.start=0\nsweep.stop=1\nsweep.count=2\n", "sweep.param"),
            ("n_elements = 8\nconstellation = 8psk\n", "constellation"),
            ("n_elements = 8\npower_policy = greedy\n", "power_policy"),
            ("n_elements = 8\ntrials = -4\n", "trials"),
            ("n_elements = 0\n", "n_elements"),
            ("n_elements = 8\ndistance_m = -1\n", "distance_m"),
            ("n_elements = 8\nphi_rad\n", "phi_rad"),
            ("n_elements = 8\nsnr_db =\n", "snr_db"),
        ];
        for (text, key) in cases {
            let e = parse_config(text).unwrap_err();
            assert_eq!(e.key, key, "{text:?}: {e}");
        }
    }

    #[test]
    fn degrees_are_converted() {
        let spec = parse_config("n_elements = 4\nphi_rad = 30deg\n").unwrap();
        assert!((spec.geometry.phi - PI / 6.0).abs() < 1e-15);
    }

    #[test]
    fn wavelength_scales_default_radii() {
        let spec = parse_config("n_elements = 4\nwavelength_m = 0.02\n").unwrap();
        assert_eq!(spec.geometry.radius_tx, 0.08);
    }
}
