//! Free-space line-of-sight channel between the two rings.

use num_complex::Complex;

use crate::error::Result;
use crate::geometry::LinkGeometry;
use crate::scalar::{cis, CMatrix, Real};

/// `M × N` matrix of element-to-element gains together with the geometry
/// that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix<T: Real> {
    pub entries: CMatrix<T>,
    pub geometry: LinkGeometry<T>,
}

impl<T: Real> ChannelMatrix<T> {
    pub fn n_rx(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.entries.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.entries.is_square()
    }
}

/// Gain of a single path of length `dist`: `β λ e^{−j2π dist/λ} / (4π dist)`.
pub fn path_gain<T: Real>(beta: Complex<T>, wavelength: T, dist: T) -> Complex<T> {
    let phase = -T::two_pi() * dist / wavelength;
    let magnitude = wavelength / (T::lit(4.0) * T::pi() * dist);
    beta * cis(phase) * magnitude
}

/// Gain from transmit element `n` to receive element `m`.
pub fn channel_gain<T: Real>(geom: &LinkGeometry<T>, m: usize, n: usize) -> Result<Complex<T>> {
    let dist = geom.element_distance(m, n)?;
    Ok(path_gain(geom.beta, geom.wavelength, dist))
}

pub fn channel_matrix<T: Real>(geom: &LinkGeometry<T>) -> Result<ChannelMatrix<T>> {
    let distances = geom.distance_table()?;
    let entries = CMatrix::from_fn(geom.n_rx, geom.n_tx, |m, n| {
        path_gain(geom.beta, geom.wavelength, distances[m][n])
    });
    Ok(ChannelMatrix {
        entries,
        geometry: geom.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use std::f64::consts::{FRAC_PI_6, PI};

    #[test]
    fn gain_at_one_wavelength() {
        let g = path_gain(Complex::new(1.0, 0.0), 0.01, 0.01);
        assert!((g.re - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!(g.im.abs() < 1e-15);
        assert!((g.re - 0.0795775).abs() < 1e-7);
    }

    #[test]
    fn gain_at_half_wavelength() {
        let g = path_gain(Complex::new(1.0, 0.0), 0.01, 0.005);
        assert!((g.re + 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(g.im.abs() < 1e-15);
    }

    #[test]
    fn complex_beta_rotates_and_scales() {
        let beta = Complex::new(0.0, 2.0);
        let a = path_gain(Complex::new(1.0, 0.0), 0.01, 0.37);
        let b = path_gain(beta, 0.01, 0.37);
        assert!((b - a * beta).norm() < 1e-18);
    }

    #[test]
    fn matrix_entries_follow_distance_law() {
        let geom = LinkGeometry::aligned(8, 0.01, 1.0).with_offset(0.0, FRAC_PI_6);
        let h = channel_matrix(&geom).unwrap();
        for m in 0..8 {
            for n in 0..8 {
                let d = geom.element_distance(m, n).unwrap();
                // independent evaluation of the gain
                let expect =
                    Complex::new(0.0, -2.0 * PI * d / 0.01).exp() * (0.01 / (4.0 * PI * d));
                let got = h.entries[(m, n)];
                assert!((got - expect).norm() <= 1e-12 * expect.norm());
                assert_eq!(got, channel_gain(&geom, m, n).unwrap());
                assert!((got.norm() * 4.0 * PI * d / 0.01 - 1.0).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn aligned_matrix_is_circulant() {
        let geom = LinkGeometry::aligned(8, 0.01, 1.0);
        let h = channel_matrix(&geom).unwrap().entries;
        let max = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for m in 0..8 {
            for n in 0..8 {
                let diff = (h[(m, n)] - h[((m + 1) % 8, (n + 1) % 8)]).norm();
                assert!(diff <= 1e-13 * max);
            }
        }
    }

    #[test]
    fn single_element_link() {
        let geom = LinkGeometry::aligned(1, 0.01, 1.0);
        let h = channel_matrix(&geom).unwrap();
        assert_eq!(h.entries.shape(), (1, 1));
        assert_eq!(h.entries[(0, 0)], channel_gain(&geom, 0, 0).unwrap());
    }

    #[test]
    fn rectangular_links_are_supported() {
        let mut geom = LinkGeometry::aligned(4, 0.01, 1.0);
        geom.n_rx = 6;
        let h = channel_matrix(&geom).unwrap();
        assert_eq!((h.n_rx(), h.n_tx()), (6, 4));
        assert!(!h.is_square());
    }

    #[test]
    fn deterministic() {
        let geom = LinkGeometry::aligned(8, 0.01, 1.0)
            .with_offset(0.3, 0.4)
            .with_tilt(0.1, 0.2);
        assert_eq!(
            channel_matrix(&geom).unwrap(),
            channel_matrix(&geom).unwrap()
        );
    }

    #[test]
    fn degenerate_geometry_propagates() {
        let mut geom = LinkGeometry::aligned(4, 0.01, 2.0);
        geom.radius_tx = 1.0;
        geom.radius_rx = 1.0;
        geom.phi = std::f64::consts::FRAC_PI_2;
        geom.alpha_rx = PI;
        assert!(matches!(
            channel_matrix(&geom),
            Err(Error::DegenerateGeometry { m: 0, n: 0, .. })
        ));
    }
}
