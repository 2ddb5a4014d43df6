//! Spectrum efficiency with and without BePre, and water-filling.

use crate::bepre::BePreTransforms;
use crate::detection::NoiseModel;
use crate::error::{Error, Result};
use crate::oam_transform::{dft_matrix, idft_matrix};
use crate::scalar::{CMatrix, Real};

/// Non-negative per-mode transmit powers.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation<T: Real> {
    per_mode: Vec<T>,
}

impl<T: Real> PowerAllocation<T> {
    pub fn new(per_mode: Vec<T>) -> Result<Self> {
        if let Some(p) = per_mode
            .iter()
            .find(|p| !(**p >= T::zero()) || !p.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "per-mode power must be finite and non-negative, got {p}"
            )));
        }
        Ok(Self { per_mode })
    }

    /// `total / n` on every mode.
    pub fn equal(n: usize, total: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("no modes to allocate".into()));
        }
        Self::new(vec![total / T::lit(n as f64); n])
    }

    pub fn per_mode(&self) -> &[T] {
        &self.per_mode
    }

    pub fn len(&self) -> usize {
        self.per_mode.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_mode.is_empty()
    }

    pub fn total(&self) -> T {
        self.per_mode.iter().fold(T::zero(), |a, &p| a + p)
    }

    /// Copy padded with zeros up to `n` modes.
    pub fn padded(&self, n: usize) -> Self {
        let mut per_mode = self.per_mode.clone();
        per_mode.resize(n.max(per_mode.len()), T::zero());
        Self { per_mode }
    }
}

/// How a singular value enters the per-mode SNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainConvention {
    /// `γ_i²`, a power gain.
    #[default]
    Squared,
    /// `γ_i` as written in the linear form.
    Linear,
}

impl GainConvention {
    pub fn label(self) -> &'static str {
        match self {
            GainConvention::Squared => "gamma_squared",
            GainConvention::Linear => "gamma_linear",
        }
    }

    pub fn apply<T: Real>(self, gamma: T) -> T {
        match self {
            GainConvention::Squared => gamma * gamma,
            GainConvention::Linear => gamma,
        }
    }
}

fn log2_1p<T: Real>(x: T) -> T {
    x.ln_1p() / T::ln_2()
}

fn check(what: &str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what} has length {got}, expected {expected}"
        )))
    }
}

/// `W*·H·W`.
pub fn mode_domain_channel<T: Real>(h: &CMatrix<T>) -> Result<CMatrix<T>> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "channel is {}x{}, expected square",
            h.nrows(),
            h.ncols()
        )));
    }
    let n = h.nrows();
    Ok(dft_matrix::<T>(n) * h * idft_matrix::<T>(n))
}

/// Sum rate when each OAM mode is detected separately and leakage from the
/// other modes is treated as noise.
pub fn se_without_bepre<T: Real>(
    h: &CMatrix<T>,
    power: &PowerAllocation<T>,
    noise: &NoiseModel<T>,
) -> Result<T> {
    let ht = mode_domain_channel(h)?;
    let n = ht.nrows();
    check("power allocation", power.len(), n)?;
    check("noise model", noise.len(), n)?;
    let p = power.per_mode();
    let mut total = T::zero();
    for i in 0..n {
        let mut interference = T::zero();
        for k in (0..n).filter(|&k| k != i) {
            interference += ht[(i, k)].norm_sqr() * p[k];
        }
        let sinr = ht[(i, i)].norm_sqr() * p[i] / (noise.variances()[i] + interference);
        total += log2_1p(sinr);
    }
    Ok(total)
}

/// `σ̃_i² = Σ_k |predetect_ik|² σ_k²`.
pub fn effective_noise<T: Real>(predetect: &CMatrix<T>, noise: &NoiseModel<T>) -> Result<Vec<T>> {
    check("noise model", noise.len(), predetect.ncols())?;
    Ok(predetect
        .row_iter()
        .map(|row| {
            row.iter()
                .zip(noise.variances())
                .fold(T::zero(), |acc, (z, &v)| acc + z.norm_sqr() * v)
        })
        .collect())
}

/// Sum rate of the decoupled modes after BePre. Only the first
/// `numerical_rank` modes contribute; gain `i` pairs with `power[i]`.
pub fn se_with_bepre<T: Real>(
    transforms: &BePreTransforms<T>,
    power: &PowerAllocation<T>,
    noise: &NoiseModel<T>,
    convention: GainConvention,
) -> Result<T> {
    let n = transforms.n();
    check("power allocation", power.len(), n)?;
    let sigma = effective_noise(&transforms.predetect, noise)?;
    Ok((0..transforms.numerical_rank).fold(T::zero(), |acc, i| {
        let gain = convention.apply(transforms.lambda[i]);
        acc + log2_1p(gain * power.per_mode()[i] / sigma[i])
    }))
}

/// Power gains and effective noise of the active BePre modes, ready for
/// [`water_filling`].
pub fn bepre_mode_gains<T: Real>(
    transforms: &BePreTransforms<T>,
    noise: &NoiseModel<T>,
    convention: GainConvention,
) -> Result<(Vec<T>, Vec<T>)> {
    let mut sigma = effective_noise(&transforms.predetect, noise)?;
    let rank = transforms.numerical_rank;
    sigma.truncate(rank);
    let gains = transforms
        .lambda
        .iter()
        .take(rank)
        .map(|&g| convention.apply(g))
        .collect();
    Ok((gains, sigma))
}

/// `Σ log₂(1 + g_i P_i / σ_i²)`.
pub fn parallel_channel_rate<T: Real>(gains: &[T], noise: &[T], power: &[T]) -> T {
    gains
        .iter()
        .zip(noise)
        .zip(power)
        .fold(T::zero(), |acc, ((&g, &s), &p)| acc + log2_1p(g * p / s))
}

/// Capacity-maximising split of `total_power` over parallel channels with
/// power gains `gains` and noise `noise`: `P_i = max(0, μ − σ_i²/g_i)`.
/// The water level is found exactly from the sorted floors.
pub fn water_filling<T: Real>(
    gains: &[T],
    noise: &[T],
    total_power: T,
) -> Result<PowerAllocation<T>> {
    check("noise vector", noise.len(), gains.len())?;
    if !(total_power > T::zero()) || !total_power.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "total power must be positive, got {total_power}"
        )));
    }
    if let Some(g) = gains.iter().find(|g| !(**g >= T::zero()) || !g.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gain {g} is not a non-negative number"
        )));
    }
    if let Some(s) = noise.iter().find(|s| !(**s > T::zero()) || !s.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise variance {s} is not positive"
        )));
    }

    let mut floors: Vec<(usize, T)> = gains
        .iter()
        .zip(noise)
        .enumerate()
        .filter(|(_, (g, _))| **g > T::zero())
        .map(|(i, (&g, &s))| (i, s / g))
        .filter(|(_, f)| f.is_finite())
        .collect();
    if floors.is_empty() {
        return Err(Error::InvalidArgument("every channel gain is zero".into()));
    }
    floors.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .expect("finite floors")
            .then(a.0.cmp(&b.0))
    });

    // grow the active set while the next floor lies below the water level
    let mut level = T::zero();
    let mut sum = T::zero();
    let mut active = 0;
    for (k, &(_, floor)) in floors.iter().enumerate() {
        let candidate = (total_power + sum + floor) / T::lit((k + 1) as f64);
        if k > 0 && candidate <= floor {
            break;
        }
        sum += floor;
        level = candidate;
        active = k + 1;
    }

    let mut per_mode = vec![T::zero(); gains.len()];
    for &(i, floor) in &floors[..active] {
        per_mode[i] = (level - floor).max(T::zero());
    }
    // absorb rounding so the budget is met exactly on the strongest channel
    let excess = total_power - per_mode.iter().fold(T::zero(), |a, &p| a + p);
    let first = floors[0].0;
    per_mode[first] = (per_mode[first] + excess).max(T::zero());
    PowerAllocation::new(per_mode)
}

/// Largest violation of the water-filling optimality conditions: equal
/// marginal rate on active channels, no larger marginal rate on idle ones,
/// and the power budget. Marginal rates are relative to the largest one.
pub fn kkt_residual<T: Real>(
    gains: &[T],
    noise: &[T],
    allocation: &PowerAllocation<T>,
    total_power: T,
) -> T {
    let p = allocation.per_mode();
    let marginal: Vec<T> = gains
        .iter()
        .zip(noise)
        .zip(p)
        .map(|((&g, &s), &pi)| g / (s + g * pi))
        .collect();
    let scale = marginal.iter().fold(T::zero(), |a, &m| a.max(m));
    let nu = marginal
        .iter()
        .zip(p)
        .filter(|(_, pi)| **pi > T::zero())
        .fold(T::zero(), |a, (&m, _)| a.max(m));
    let mut worst = ((allocation.total() - total_power) / total_power).abs();
    for (&m, &pi) in marginal.iter().zip(p) {
        let v = if pi > T::zero() {
            (m - nu).abs()
        } else {
            (m - nu).max(T::zero())
        };
        worst = worst.max(v / scale);
    }
    worst
}
