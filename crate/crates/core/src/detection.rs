//! Transmit chain, mode decomposition and maximum-likelihood detection.
//!
//! With the BePre pair in place the receiver sees `ỹ = Λ·s + W*·predetect·z`
//! with diagonal `Λ`, so joint ML over `Ω^N` splits into `N` scalar searches
//! over `Ω`. Without it the receiver applies `W*` directly and detects each
//! mode against the diagonal of `W*·H·W`, ignoring inter-mode leakage.
//!
//! SNR convention: each mode carries unit average symbol energy (total
//! transmit power `N`) and `snr_db = 10·log10(1/σ²)`. Path loss is not
//! normalised out, so received SNR is lower by the free-space gain.

use nalgebra::DVector;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bepre::{bepre_transforms, BePreTransforms};
use crate::channel::channel_matrix;
use crate::error::{Error, Result};
use crate::geometry::LinkGeometry;
use crate::oam_transform::OamModulator;
use crate::scalar::{cplx, CMatrix, CVector, Real};

/// Largest `ξ^N` the exhaustive joint detector will enumerate.
pub const JOINT_SEARCH_CAP: u128 = 1 << 20;

/// Finite symbol alphabet with unit average energy. Point `i` carries the
/// bit label `i` (Gray-mapped for the built-in alphabets).
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation<T: Real> {
    points: Vec<Complex<T>>,
    name: String,
}

impl<T: Real> Constellation<T> {
    pub fn new(name: impl Into<String>, points: Vec<Complex<T>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(
                "a constellation needs at least two points".into(),
            ));
        }
        let n = T::lit(points.len() as f64);
        let energy = points.iter().fold(T::zero(), |acc, p| acc + p.norm_sqr()) / n;
        let tol = T::lit(1e-12).max(T::lit(64.0) * T::machine_epsilon());
        if (energy - T::one()).abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "constellation average energy must be 1, got {energy}"
            )));
        }
        for (i, a) in points.iter().enumerate() {
            if points[..i].iter().any(|b| b == a) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate constellation point {a}"
                )));
            }
        }
        Ok(Self {
            points,
            name: name.into(),
        })
    }

    /// Gray-labelled QPSK: `00 → (1+j)/√2`, `01 → (−1+j)/√2`,
    /// `10 → (1−j)/√2`, `11 → (−1−j)/√2`.
    pub fn qpsk() -> Self {
        let a = T::one() / T::lit(2.0).sqrt();
        let points = vec![
            Complex::new(a, a),
            Complex::new(-a, a),
            Complex::new(a, -a),
            Complex::new(-a, -a),
        ];
        Self::new("qpsk", points).expect("qpsk is valid")
    }

    /// Square 16-QAM, Gray-labelled per axis (`00, 01, 11, 10` → `−3, −1, 1, 3`),
    /// label `(in-phase bits << 2) | quadrature bits`.
    pub fn qam16() -> Self {
        let scale = T::one() / T::lit(10.0).sqrt();
        let level = |bits: usize| -> T {
            T::lit(match bits {
                0b00 => -3.0,
                0b01 => -1.0,
                0b11 => 1.0,
                _ => 3.0,
            }) * scale
        };
        let points = (0..16)
            .map(|label| Complex::new(level(label >> 2), level(label & 0b11)))
            .collect();
        Self::new("16qam", points).expect("16-qam is valid")
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" => Some(Self::qpsk()),
            "16qam" | "qam16" | "16-qam" => Some(Self::qam16()),
            _ => None,
        }
    }

    pub fn points(&self) -> &[Complex<T>] {
        &self.points
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.points.len().next_power_of_two().trailing_zeros()
    }

    pub fn symbols(&self, indices: &[usize]) -> CVector<T> {
        CVector::from_iterator(indices.len(), indices.iter().map(|&i| self.points[i]))
    }
}

/// Per-receive-element noise variances `σ_i²`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel<T: Real> {
    variances: Vec<T>,
}

impl<T: Real> NoiseModel<T> {
    pub fn new(variances: Vec<T>) -> Result<Self> {
        if let Some(v) = variances.iter().find(|v| !(**v > T::zero())) {
            return Err(Error::InvalidArgument(format!(
                "noise variances must be positive, got {v}"
            )));
        }
        Ok(Self { variances })
    }

    pub fn uniform(n: usize, variance: T) -> Result<Self> {
        Self::new(vec![variance; n])
    }

    /// Equal variances `σ² = 10^(−snr_db/10)`.
    pub fn from_snr_db(n: usize, snr_db: f64) -> Result<Self> {
        Self::uniform(n, T::lit(noise_variance_for_snr_db(snr_db)))
    }

    pub fn variances(&self) -> &[T] {
        &self.variances
    }

    pub fn len(&self) -> usize {
        self.variances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variances.is_empty()
    }
}

/// `σ² = 10^(−snr_db/10)`; zero for `+∞`.
pub fn noise_variance_for_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what} has length {got}, expected {expected}"
        )))
    }
}

/// `x̃ = beamform·W·Φ·s`.
pub fn transmit<T: Real>(
    s: &CVector<T>,
    transforms: &BePreTransforms<T>,
    modem: &OamModulator<T>,
) -> Result<CVector<T>> {
    check_len("symbol vector", s.len(), modem.n())?;
    check_len("beamformer", transforms.beamform.ncols(), modem.n())?;
    Ok(&transforms.beamform * modem.modulate(s))
}

/// `ỹ = Φ*·W*·predetect·y`.
pub fn decompose<T: Real>(
    y: &CVector<T>,
    transforms: &BePreTransforms<T>,
    modem: &OamModulator<T>,
) -> Result<CVector<T>> {
    check_len("received vector", y.len(), transforms.predetect.ncols())?;
    check_len("pre-detector", transforms.predetect.nrows(), modem.n())?;
    Ok(modem.demodulate(&(&transforms.predetect * y)))
}

/// Adds circularly-symmetric Gaussian noise drawn from `rng`; element `i`
/// gets variance `σ_i²` split evenly between real and imaginary parts.
pub fn add_awgn<T: Real, R: Rng + ?Sized>(
    v: &mut CVector<T>,
    noise: &NoiseModel<T>,
    rng: &mut R,
) -> Result<()> {
    check_len("noise model", noise.len(), v.len())?;
    for (z, &var) in v.iter_mut().zip(noise.variances()) {
        let sd = (var.to_f64_lossy() / 2.0).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *z += Complex::new(T::lit(re * sd), T::lit(im * sd));
    }
    Ok(())
}

/// [`add_awgn`] with a fresh generator seeded from `seed`.
pub fn awgn<T: Real>(v: &CVector<T>, noise: &NoiseModel<T>, seed: u64) -> Result<CVector<T>> {
    let mut out = v.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_awgn(&mut out, noise, &mut rng)?;
    Ok(out)
}

/// Index of the point minimising `|y − gain·ω|`; ties go to the lowest index.
fn nearest<T: Real>(y: Complex<T>, gain: Complex<T>, points: &[Complex<T>]) -> usize {
    let mut best = 0;
    let mut best_cost = (y - gain * points[0]).norm_sqr();
    for (i, &p) in points.iter().enumerate().skip(1) {
        let cost = (y - gain * p).norm_sqr();
        if cost < best_cost {
            best = i;
            best_cost = cost;
        }
    }
    best
}

/// Per-mode ML decisions `argmin_ω |ỹ_i − λ_i ω|`, as constellation indices.
pub fn ml_per_mode<T: Real>(
    y: &CVector<T>,
    lambda: &DVector<T>,
    constellation: &Constellation<T>,
) -> Result<Vec<usize>> {
    check_len("gain vector", lambda.len(), y.len())?;
    if constellation.is_empty() {
        return Err(Error::InvalidArgument("empty constellation".into()));
    }
    Ok(y.iter()
        .zip(lambda.iter())
        .map(|(&yi, &li)| nearest(yi, cplx(li), constellation.points()))
        .collect())
}

/// Per-element nearest-symbol decisions against complex per-mode gains.
pub fn detect_against_diagonal<T: Real>(
    y: &CVector<T>,
    gains: &CVector<T>,
    constellation: &Constellation<T>,
) -> Result<Vec<usize>> {
    check_len("gain vector", gains.len(), y.len())?;
    Ok(y.iter()
        .zip(gains.iter())
        .map(|(&yi, &gi)| nearest(yi, gi, constellation.points()))
        .collect())
}

/// Exhaustive minimiser of `‖ỹ − G·s‖²` over `Ω^N`. Hypotheses are visited
/// in lexicographic index order and only a strictly smaller cost replaces
/// the incumbent, so ties resolve to the lexicographically smallest vector.
pub fn ml_joint_oracle<T: Real>(
    y: &CVector<T>,
    g: &CMatrix<T>,
    constellation: &Constellation<T>,
) -> Result<Vec<usize>> {
    let n = y.len();
    if g.nrows() != n || g.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "effective channel is {}x{}, expected {n}x{n}",
            g.nrows(),
            g.ncols()
        )));
    }
    let xi = constellation.len();
    if xi == 0 {
        return Err(Error::InvalidArgument("empty constellation".into()));
    }
    let size = (xi as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > JOINT_SEARCH_CAP {
        return Err(Error::SearchSpaceTooLarge {
            size,
            cap: JOINT_SEARCH_CAP,
        });
    }
    let points = constellation.points();
    let mut idx = vec![0usize; n];
    let mut best = idx.clone();
    let mut best_cost = T::max_value().unwrap_or(T::lit(f64::MAX));
    loop {
        let mut cost = T::zero();
        for i in 0..n {
            let mut r = y[i];
            for k in 0..n {
                r -= g[(i, k)] * points[idx[k]];
            }
            cost += r.norm_sqr();
        }
        if cost < best_cost {
            best_cost = cost;
            best.copy_from_slice(&idx);
        }
        // odometer increment, last position fastest
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(best);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < xi {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Receiver structure used in a Monte-Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionMode {
    WithBePre,
    WithoutBePre,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerConfig<T: Real> {
    pub geometry: LinkGeometry<T>,
    pub constellation: Constellation<T>,
    /// `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerReport {
    pub trials: u64,
    pub symbols_per_trial: usize,
    pub symbol_errors_with_bepre: u64,
    pub symbol_errors_without_bepre: u64,
    pub ser_with: f64,
    pub ser_without: f64,
    pub snr_db: f64,
    pub seed: u64,
}

impl SerReport {
    /// Binomial standard error of an SER estimate.
    pub fn standard_error(&self, ser: f64) -> f64 {
        let count = (self.trials as f64) * (self.symbols_per_trial as f64);
        (ser * (1.0 - ser) / count).sqrt()
    }
}

/// Channel and receiver quantities shared by every trial.
#[derive(Debug, Clone)]
pub struct LinkSimulator<T: Real> {
    pub channel: CMatrix<T>,
    pub transforms: BePreTransforms<T>,
    pub modem: OamModulator<T>,
    /// `H·beamform·W·Φ`.
    with_chain: CMatrix<T>,
    /// `H·W·Φ`.
    without_chain: CMatrix<T>,
    /// `diag(Φ*·W*·H·W·Φ)`.
    without_gains: CVector<T>,
    noise: Option<NoiseModel<T>>,
}

impl<T: Real> LinkSimulator<T> {
    pub fn new(geometry: &LinkGeometry<T>, snr_db: f64) -> Result<Self> {
        let channel = channel_matrix(geometry)?.entries;
        let transforms = bepre_transforms(&channel)?;
        let modem = OamModulator::new(geometry.n_tx, geometry.alpha_tx);
        let synthesis = modem.synthesis();
        let with_chain = &channel * &transforms.beamform * &synthesis;
        let without_chain = &channel * &synthesis;
        let without_gains = (synthesis.adjoint() * &without_chain).diagonal();
        let noise = if snr_db.is_infinite() && snr_db > 0.0 {
            None
        } else {
            Some(NoiseModel::from_snr_db(geometry.n_rx, snr_db)?)
        };
        Ok(Self {
            channel,
            transforms,
            modem,
            with_chain,
            without_chain,
            without_gains,
            noise,
        })
    }

    pub fn n(&self) -> usize {
        self.modem.n()
    }

    /// Runs one trial and returns `(errors with BePre, errors without)`.
    pub fn trial<R: Rng + ?Sized>(
        &self,
        constellation: &Constellation<T>,
        rng: &mut R,
    ) -> Result<(u64, u64)> {
        let n = self.n();
        let sent: Vec<usize> = (0..n)
            .map(|_| rng.random_range(0..constellation.len()))
            .collect();
        let s = constellation.symbols(&sent);
        let mut z = CVector::<T>::zeros(n);
        if let Some(noise) = &self.noise {
            add_awgn(&mut z, noise, rng)?;
        }
        let y_with = &self.with_chain * &s + &z;
        let y_without = &self.without_chain * &s + &z;

        let yt = decompose(&y_with, &self.transforms, &self.modem)?;
        let with = ml_per_mode(&yt, &self.transforms.lambda, constellation)?;
        let yt = self.modem.demodulate(&y_without);
        let without = detect_against_diagonal(&yt, &self.without_gains, constellation)?;

        let count = |d: &[usize]| d.iter().zip(&sent).filter(|(a, b)| a != b).count() as u64;
        Ok((count(&with), count(&without)))
    }

    pub fn detect(
        &self,
        mode: DetectionMode,
        y: &CVector<T>,
        constellation: &Constellation<T>,
    ) -> Result<Vec<usize>> {
        match mode {
            DetectionMode::WithBePre => {
                let yt = decompose(y, &self.transforms, &self.modem)?;
                ml_per_mode(&yt, &self.transforms.lambda, constellation)
            }
            DetectionMode::WithoutBePre => {
                let yt = self.modem.demodulate(y);
                detect_against_diagonal(&yt, &self.without_gains, constellation)
            }
        }
    }
}

/// Generator for trial `index` of the experiment seeded with `seed`: one
/// ChaCha stream per trial, so results do not depend on scheduling.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Symbol error rates with and without BePre over `trials` independent
/// symbol vectors. Both receivers see the same symbols and noise.
pub fn monte_carlo_ser<T: Real>(config: &SerConfig<T>) -> Result<SerReport> {
    if config.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let sim = LinkSimulator::new(&config.geometry, config.snr_db)?;
    let (with, without) = (0..config.trials)
        .into_par_iter()
        .map(|t| sim.trial(&config.constellation, &mut trial_rng(config.seed, t)))
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let total = (config.trials as f64) * (sim.n() as f64);
    Ok(SerReport {
        trials: config.trials,
        symbols_per_trial: sim.n(),
        symbol_errors_with_bepre: with,
        symbol_errors_without_bepre: without,
        ser_with: with as f64 / total,
        ser_without: without as f64 / total,
        snr_db: config.snr_db,
        seed: config.seed,
    })
}
