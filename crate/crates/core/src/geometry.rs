//! Element coordinates of two uniform circular arrays (UCAs) under arbitrary
//! misalignment.
//!
//! The transmit UCA lies in the `z = 0` plane centred on the origin. The
//! receive UCA is centred at `(d sinϕ cosθ, d sinϕ sinθ, d cosϕ)`. Its local
//! ring `(R cos ψ, R sin ψ, 0)` is first turned by `tilt_x` in the y–z plane
//! and then by `tilt_y` in the x–z plane, i.e. the attitude is
//! `R_y(tilt_y)·R_x(tilt_x)` built from [`rotation_y`] and [`rotation_x`],
//! before being translated to the receive centre.
//!
//! Element indices in this API are 0-based: index `0` is the first element,
//! sitting at azimuth `alpha_tx` (resp. `alpha_rx`).

use nalgebra::{Matrix3, Point3, Vector3};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Distances below this many metres are treated as coincident elements.
pub const MIN_ELEMENT_DISTANCE: f64 = 1e-9;

/// Full geometric description of a transmit/receive UCA pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGeometry<T: Real> {
    /// Transmit element count `N`.
    pub n_tx: usize,
    /// Receive element count `M`.
    pub n_rx: usize,
    /// Transmit ring radius `r` (m).
    pub radius_tx: T,
    /// Receive ring radius `R` (m).
    pub radius_rx: T,
    /// Centre-to-centre distance `d` (m).
    pub distance: T,
    /// Azimuth of the receive centre's projection onto the transmit plane (rad).
    pub theta: T,
    /// Polar angle between the z-axis and the centre line (rad).
    pub phi: T,
    /// Receive-plane tilt in the y–z plane, about the x-axis (rad).
    pub tilt_x: T,
    /// Receive-plane tilt in the x–z plane, about the y-axis (rad).
    pub tilt_y: T,
    /// Azimuth of the first transmit element (rad).
    pub alpha_tx: T,
    /// Azimuth of the first receive element (rad).
    pub alpha_rx: T,
    /// Carrier wavelength `λ` (m).
    pub wavelength: T,
    /// Lumped antenna constant `β` (attenuation and phase rotation).
    pub beta: Complex<T>,
}

impl<T: Real> LinkGeometry<T> {
    /// Coaxial, untilted link with `n` elements per ring, radii `4λ`,
    /// `β = 1` and zero first-element offsets.
    pub fn aligned(n: usize, wavelength: T, distance: T) -> Self {
        let radius = T::lit(4.0) * wavelength;
        Self {
            n_tx: n,
            n_rx: n,
            radius_tx: radius,
            radius_rx: radius,
            distance,
            theta: T::zero(),
            phi: T::zero(),
            tilt_x: T::zero(),
            tilt_y: T::zero(),
            alpha_tx: T::zero(),
            alpha_rx: T::zero(),
            wavelength,
            beta: Complex::new(T::one(), T::zero()),
        }
    }

    pub fn with_offset(mut self, theta: T, phi: T) -> Self {
        self.theta = theta;
        self.phi = phi;
        self
    }

    pub fn with_tilt(mut self, tilt_x: T, tilt_y: T) -> Self {
        self.tilt_x = tilt_x;
        self.tilt_y = tilt_y;
        self
    }

    /// Checks the scalar invariants. Coincident elements are only detected
    /// when distances are evaluated.
    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(Error::InvalidGeometry(format!(
                "element counts must be positive (n_tx = {}, n_rx = {})",
                self.n_tx, self.n_rx
            )));
        }
        let positive = [
            ("radius_tx", self.radius_tx),
            ("radius_rx", self.radius_rx),
            ("distance", self.distance),
            ("wavelength", self.wavelength),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= T::zero() {
                return Err(Error::InvalidGeometry(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        let angles = [
            ("theta", self.theta),
            ("phi", self.phi),
            ("tilt_x", self.tilt_x),
            ("tilt_y", self.tilt_y),
            ("alpha_tx", self.alpha_tx),
            ("alpha_rx", self.alpha_rx),
            ("beta.re", self.beta.re),
            ("beta.im", self.beta.im),
        ];
        for (name, value) in angles {
            if !value.is_finite() {
                return Err(Error::InvalidGeometry(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Azimuth `2πn/N + α_r` of transmit element `n`.
    pub fn tx_azimuth(&self, n: usize) -> T {
        T::two_pi() * T::lit(n as f64) / T::lit(self.n_tx as f64) + self.alpha_tx
    }

    /// Azimuth `2πm/M + α_R` of receive element `m` in the receive ring's own frame.
    pub fn rx_azimuth(&self, m: usize) -> T {
        T::two_pi() * T::lit(m as f64) / T::lit(self.n_rx as f64) + self.alpha_rx
    }

    pub fn tx_element_position(&self, n: usize) -> Result<Point3<T>> {
        check_index(n, self.n_tx)?;
        let a = self.tx_azimuth(n);
        Ok(Point3::new(
            self.radius_tx * a.cos(),
            self.radius_tx * a.sin(),
            T::zero(),
        ))
    }

    pub fn rx_center(&self) -> Point3<T> {
        let (sp, cp) = self.phi.sin_cos();
        let (st, ct) = self.theta.sin_cos();
        Point3::new(
            self.distance * sp * ct,
            self.distance * sp * st,
            self.distance * cp,
        )
    }

    /// Orientation of the receive ring: `R_y(tilt_y)·R_x(tilt_x)`.
    pub fn rx_attitude(&self) -> Matrix3<T> {
        rotation_y(self.tilt_y) * rotation_x(self.tilt_x)
    }

    pub fn rx_element_position(&self, m: usize) -> Result<Point3<T>> {
        check_index(m, self.n_rx)?;
        let a = self.rx_azimuth(m);
        let local = Vector3::new(
            self.radius_rx * a.cos(),
            self.radius_rx * a.sin(),
            T::zero(),
        );
        Ok(self.rx_center() + self.rx_attitude() * local)
    }

    /// Distance between receive element `m` and transmit element `n`.
    pub fn element_distance(&self, m: usize, n: usize) -> Result<T> {
        let rx = self.rx_element_position(m)?;
        let tx = self.tx_element_position(n)?;
        let dist = (rx - tx).norm();
        if !(dist >= T::lit(MIN_ELEMENT_DISTANCE)) {
            return Err(Error::DegenerateGeometry {
                m,
                n,
                distance: dist.to_f64_lossy(),
            });
        }
        Ok(dist)
    }

    /// All `M × N` pairwise distances, row `m`, column `n`.
    pub fn distance_table(&self) -> Result<Vec<Vec<T>>> {
        self.validate()?;
        let tx: Vec<Point3<T>> = (0..self.n_tx)
            .map(|n| self.tx_element_position(n))
            .collect::<Result<_>>()?;
        (0..self.n_rx)
            .map(|m| {
                let rx = self.rx_element_position(m)?;
                tx.iter()
                    .enumerate()
                    .map(|(n, t)| {
                        let dist = (rx - t).norm();
                        if dist >= T::lit(MIN_ELEMENT_DISTANCE) {
                            Ok(dist)
                        } else {
                            Err(Error::DegenerateGeometry {
                                m,
                                n,
                                distance: dist.to_f64_lossy(),
                            })
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

fn check_index(index: usize, count: usize) -> Result<()> {
    if index < count {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index, count })
    }
}

/// Attitude matrix about the x-axis: `[1 0 0; 0 c s; 0 −s c]`.
pub fn rotation_x<T: Real>(angle: T) -> Matrix3<T> {
    let (s, c) = angle.sin_cos();
    let (o, l) = (T::zero(), T::one());
    Matrix3::new(l, o, o, o, c, s, o, -s, c)
}

/// Attitude matrix about the y-axis: `[c 0 −s; 0 1 0; s 0 c]`.
pub fn rotation_y<T: Real>(angle: T) -> Matrix3<T> {
    let (s, c) = angle.sin_cos();
    let (o, l) = (T::zero(), T::one());
    Matrix3::new(c, o, -s, o, l, o, s, o, c)
}
