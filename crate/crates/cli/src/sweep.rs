//! Grid evaluation of spectrum efficiency and symbol error rate.

use oam_bepre::{
    bepre_mode_gains, bepre_transforms, channel_matrix, mode_domain_channel, monte_carlo_ser,
    se_with_bepre, se_without_bepre, water_filling, Constellation, GainConvention, LinkGeometry,
    NoiseModel, PowerAllocation, SerConfig, SerReport,
};
use rayon::prelude::*;

use crate::config::{PowerPolicy, SweepParam, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepOptions {
    /// Also report the linear-gain variant of the BePre rate.
    pub strict_eq17: bool,
    /// Run the Monte-Carlo SER estimate at every point.
    pub with_ser: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointMetrics {
    pub se_with_bepre: f64,
    pub se_without_bepre: f64,
    pub se_with_bepre_linear: Option<f64>,
    pub lambda: Vec<f64>,
    pub numerical_rank: usize,
    pub equivalence_residual: f64,
    pub max_unitarity_residual: f64,
    pub ser: Option<SerReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub geometry: LinkGeometry<f64>,
    pub snr_db: f64,
    pub outcome: Result<PointMetrics, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub options: SweepOptions,
    pub power_policy: PowerPolicy,
}

impl SweepResult {
    /// Longest singular-value list over all rows.
    pub fn max_modes(&self) -> usize {
        self.rows.iter().map(|r| r.geometry.n_tx).max().unwrap_or(0)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }
}

fn apply(geometry: &mut LinkGeometry<f64>, snr_db: &mut f64, param: SweepParam, value: f64) {
    match param {
        SweepParam::NElements => {
            let n = value.round().max(1.0) as usize;
            geometry.n_tx = n;
            geometry.n_rx = n;
        }
        SweepParam::WavelengthM => geometry.wavelength = value,
        SweepParam::RadiusTxM => geometry.radius_tx = value,
        SweepParam::RadiusRxM => geometry.radius_rx = value,
        SweepParam::DistanceM => geometry.distance = value,
        SweepParam::ThetaRad => geometry.theta = value,
        SweepParam::PhiRad => geometry.phi = value,
        SweepParam::TiltXRad => geometry.tilt_x = value,
        SweepParam::TiltYRad => geometry.tilt_y = value,
        SweepParam::AlphaTxRad => geometry.alpha_tx = value,
        SweepParam::AlphaRxRad => geometry.alpha_rx = value,
        SweepParam::SnrDb => *snr_db = value,
    }
}

/// Grid points in row-major order: the first axis varies slowest.
pub fn grid_points(spec: &SweepSpec) -> Vec<(LinkGeometry<f64>, f64)> {
    let mut points = vec![(spec.geometry.clone(), spec.snr_db)];
    for axis in &spec.sweeps {
        let values = axis.values();
        points = points
            .into_iter()
            .flat_map(|(g, snr)| {
                values.iter().map(move |&v| {
                    let (mut g, mut snr) = (g.clone(), snr);
                    apply(&mut g, &mut snr, axis.param, v);
                    (g, snr)
                })
            })
            .collect();
    }
    points
}

/// Per-mode powers for the rate without BePre: water-filling on the
/// diagonal mode gains, ignoring leakage.
fn direct_allocation(
    h: &oam_bepre::CMatrix<f64>,
    noise: &NoiseModel<f64>,
    policy: PowerPolicy,
) -> oam_bepre::Result<PowerAllocation<f64>> {
    let n = h.nrows();
    match policy {
        PowerPolicy::Equal => PowerAllocation::equal(n, n as f64),
        PowerPolicy::Waterfill => {
            let ht = mode_domain_channel(h)?;
            let gains: Vec<f64> = (0..n).map(|i| ht[(i, i)].norm_sqr()).collect();
            water_filling(&gains, noise.variances(), n as f64)
        }
    }
}

fn bepre_allocation(
    transforms: &oam_bepre::BePreTransforms<f64>,
    noise: &NoiseModel<f64>,
    policy: PowerPolicy,
    convention: GainConvention,
) -> oam_bepre::Result<PowerAllocation<f64>> {
    let n = transforms.n();
    match policy {
        PowerPolicy::Equal => PowerAllocation::equal(n, n as f64),
        PowerPolicy::Waterfill => {
            let (gains, sigma) = bepre_mode_gains(transforms, noise, convention)?;
            Ok(water_filling(&gains, &sigma, n as f64)?.padded(n))
        }
    }
}

/// Evaluates one grid point. Total transmit power is `N` (unit per mode).
pub fn evaluate_point(
    geometry: &LinkGeometry<f64>,
    snr_db: f64,
    spec: &SweepSpec,
    options: SweepOptions,
) -> oam_bepre::Result<PointMetrics> {
    geometry.validate()?;
    if geometry.n_tx != geometry.n_rx {
        return Err(oam_bepre::Error::DimensionMismatch(format!(
            "{} transmit vs {} receive elements",
            geometry.n_tx, geometry.n_rx
        )));
    }
    let n = geometry.n_tx;
    let h = channel_matrix(geometry)?.entries;
    let transforms = bepre_transforms(&h)?;
    let report = transforms.verify(&h)?;
    let noise = NoiseModel::from_snr_db(n, snr_db)?;

    let squared = GainConvention::Squared;
    let p_with = bepre_allocation(&transforms, &noise, spec.power_policy, squared)?;
    let se_with = se_with_bepre(&transforms, &p_with, &noise, squared)?;
    let se_with_linear = if options.strict_eq17 {
        let linear = GainConvention::Linear;
        let p = bepre_allocation(&transforms, &noise, spec.power_policy, linear)?;
        Some(se_with_bepre(&transforms, &p, &noise, linear)?)
    } else {
        None
    };
    let p_without = direct_allocation(&h, &noise, spec.power_policy)?;
    let se_without = se_without_bepre(&h, &p_without, &noise)?;

    let ser = if options.with_ser {
        let constellation = Constellation::by_name(&spec.constellation).ok_or_else(|| {
            oam_bepre::Error::InvalidArgument(format!(
                "unknown constellation {}",
                spec.constellation
            ))
        })?;
        Some(monte_carlo_ser(&SerConfig {
            geometry: geometry.clone(),
            constellation,
            snr_db,
            trials: spec.trials,
            seed: spec.seed,
        })?)
    } else {
        None
    };

    Ok(PointMetrics {
        se_with_bepre: se_with,
        se_without_bepre: se_without,
        se_with_bepre_linear: se_with_linear,
        lambda: transforms.lambda.iter().copied().collect(),
        numerical_rank: transforms.numerical_rank,
        equivalence_residual: report.equivalence_residual,
        max_unitarity_residual: report.max_unitarity(),
        ser,
    })
}

/// Evaluates every grid point in parallel; rows come back in grid order
/// and a failing point records its error instead of aborting the sweep.
pub fn run_sweep(spec: &SweepSpec, options: SweepOptions) -> SweepResult {
    let rows = grid_points(spec)
        .into_par_iter()
        .enumerate()
        .map(|(index, (geometry, snr_db))| {
            let outcome =
                evaluate_point(&geometry, snr_db, spec, options).map_err(|e| e.to_string());
            SweepRow {
                index,
                geometry,
                snr_db,
                outcome,
            }
        })
        .collect();
    SweepResult {
        rows,
        options,
        power_policy: spec.power_policy,
    }
}
