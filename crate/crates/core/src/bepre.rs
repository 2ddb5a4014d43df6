//! Joint beamforming and pre-detection.
//!
//! Given a square channel `H = S·V·U*`, the circulant `H^c = W·V·W*` shares
//! its singular values and has the DFT as both singular bases. The unitary
//! pair
//!
//! ```text
//! beamform  = U·W*        (applied at the transmitter after W)
//! predetect = W·S*        (applied at the receiver before W*)
//! ```
//!
//! gives `predetect·H·beamform = W·V·W* = H^c`, so the mode decomposition
//! `W*·predetect·y` sees the diagonal channel `V` with no inter-mode leakage.
//! Singular values are kept in descending order, so mode column 0 (OAM mode
//! 0) carries the strongest gain.

use std::cmp::Ordering;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::oam_transform::{circulant_residual, diag_of_conjugated, idft_matrix};
use crate::scalar::{cplx, frobenius, unitarity_residual, CMatrix, CVector, Cplx, Real};

/// `H = left · diag(singular_values) · right*`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors<T: Real> {
    pub left: CMatrix<T>,
    /// Descending, non-negative.
    pub singular_values: DVector<T>,
    pub right: CMatrix<T>,
}

impl<T: Real> SvdFactors<T> {
    pub fn reconstruct(&self) -> CMatrix<T> {
        let mut scaled = self.left.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= cplx(self.singular_values[k]);
        }
        scaled * self.right.adjoint()
    }

    /// `‖H − S V U*‖_F / ‖H‖_F`.
    pub fn reconstruction_residual(&self, h: &CMatrix<T>) -> T {
        let norm = frobenius(h);
        let err = frobenius(&(h - self.reconstruct()));
        if norm > T::zero() {
            err / norm
        } else {
            err
        }
    }
}

pub fn svd<T: Real>(h: &CMatrix<T>) -> Result<SvdFactors<T>> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "SVD expects a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    for ((row, col), z) in h
        .iter()
        .enumerate()
        .map(|(i, z)| ((i % h.nrows(), i / h.nrows()), z))
    {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
    }
    let n = h.nrows();
    // scale to unit max-norm to keep squared column norms away from underflow
    let scale = h
        .iter()
        .map(|z| z.norm_sqr())
        .fold(T::zero(), T::max)
        .sqrt();
    if scale == T::zero() {
        return Ok(SvdFactors {
            left: CMatrix::identity(n, n),
            singular_values: DVector::zeros(n),
            right: CMatrix::identity(n, n),
        });
    }
    let mut a = h.map(|z| z / scale);
    let mut v = CMatrix::<T>::identity(n, n);
    jacobi_sweeps(&mut a, &mut v)?;

    let norms: Vec<T> = a.column_iter().map(|c| column_norm(&c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(Ordering::Equal));

    let mut left = CMatrix::<T>::zeros(n, n);
    let mut right = CMatrix::<T>::zeros(n, n);
    let mut singular_values = DVector::<T>::zeros(n);
    let mut filled = 0;
    for (k, &src) in order.iter().enumerate() {
        right.set_column(k, &v.column(src));
        let sigma = norms[src];
        if sigma > T::zero() {
            left.set_column(k, &(a.column(src) / cplx(sigma)));
            singular_values[k] = sigma * scale;
            filled = k + 1;
        }
    }
    complete_basis(&mut left, filled);
    Ok(SvdFactors {
        left,
        singular_values,
        right,
    })
}

const MAX_SWEEPS: usize = 80;

fn column_norm<T: Real, S>(c: &nalgebra::Matrix<Cplx<T>, nalgebra::Dyn, nalgebra::U1, S>) -> T
where
    S: nalgebra::storage::Storage<Cplx<T>, nalgebra::Dyn, nalgebra::U1>,
{
    c.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// One-sided (Hestenes) Jacobi: rotates column pairs of `a` until they are
/// mutually orthogonal, accumulating the same rotations in `v`. On return
/// `a = H·v` with orthogonal columns, so column norms are the singular values
/// and each is resolved to high relative accuracy.
fn jacobi_sweeps<T: Real>(a: &mut CMatrix<T>, v: &mut CMatrix<T>) -> Result<()> {
    let n = a.ncols();
    let tol = T::machine_epsilon() * T::lit(n as f64).sqrt();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (a.column(p), a.column(q));
                    let mut g = Cplx::new(T::zero(), T::zero());
                    for (x, y) in cp.iter().zip(cq.iter()) {
                        g += x.conj() * y;
                    }
                    (
                        cp.iter().fold(T::zero(), |s, z| s + z.norm_sqr()),
                        cq.iter().fold(T::zero(), |s, z| s + z.norm_sqr()),
                        g,
                    )
                };
                let g = gamma.norm_sqr().sqrt();
                if !(g > tol * (alpha * beta).sqrt()) {
                    continue;
                }
                rotated = true;
                let phase = gamma / cplx(g);
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(a, p, q, phase, c, s);
                rotate(v, p, q, phase, c, s);
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::SvdNoConvergence)
}

/// Column `q` is first multiplied by `conj(phase)` so the pair's inner
/// product is real, then the real plane rotation is applied.
fn rotate<T: Real>(m: &mut CMatrix<T>, p: usize, q: usize, phase: Cplx<T>, c: T, s: T) {
    let phase = phase.conj();
    for i in 0..m.nrows() {
        let xp = m[(i, p)];
        let xq = m[(i, q)] * phase;
        m[(i, p)] = xp * cplx(c) - xq * cplx(s);
        m[(i, q)] = xp * cplx(s) + xq * cplx(c);
    }
}

/// Fills columns `filled..` with unit vectors orthogonal to everything before.
fn complete_basis<T: Real>(u: &mut CMatrix<T>, filled: usize) {
    let n = u.nrows();
    for k in filled..n {
        let mut best = CVector::<T>::zeros(n);
        let mut best_norm = T::zero();
        for e in 0..n {
            let mut x = CVector::<T>::zeros(n);
            x[e] = cplx(T::one());
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for j in 0..k {
                    let col = u.column(j);
                    let proj = col.dotc(&x);
                    x -= col * proj;
                }
            }
            let norm = column_norm(&x.column(0));
            if norm > best_norm {
                best_norm = norm;
                best = x;
            }
        }
        u.set_column(k, &(best / cplx(best_norm)));
    }
}

/// `W·diag(singular_values)·W*`: circulant, with singular values
/// `singular_values` and singular bases equal to `W`.
pub fn build_circulant<T: Real>(singular_values: &[T]) -> Result<CMatrix<T>> {
    if let Some(bad) = singular_values
        .iter()
        .find(|v| !(**v >= T::zero()) || !v.is_finite())
    {
        return Err(Error::InvalidArgument(format!(
            "singular values must be finite and non-negative, got {bad}"
        )));
    }
    let n = singular_values.len();
    let w = idft_matrix::<T>(n);
    let mut scaled = w.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= cplx(singular_values[k]);
    }
    Ok(scaled * w.adjoint())
}

/// Beamforming/pre-detection pair for one channel realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct BePreTransforms<T: Real> {
    pub beamform: CMatrix<T>,
    pub predetect: CMatrix<T>,
    pub circulant: CMatrix<T>,
    /// Per-mode effective gains, descending (the singular values of `H`).
    pub lambda: DVector<T>,
    pub numerical_rank: usize,
}

/// Numerical checks of a transform set against the channel it was built for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationReport<T: Real> {
    /// `‖predetect·H·beamform − H^c‖_F / ‖H^c‖_F`.
    pub equivalence_residual: T,
    pub beamform_unitarity: T,
    pub predetect_unitarity: T,
    pub circulant_residual: T,
    /// Largest `|diag(W*·H^c·W)_i − λ_i| / λ_max`.
    pub lambda_residual: T,
}

impl<T: Real> VerificationReport<T> {
    pub fn max_unitarity(&self) -> T {
        self.beamform_unitarity.max(self.predetect_unitarity)
    }
}

impl<T: Real> BePreTransforms<T> {
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    /// `predetect·H·beamform`.
    pub fn equivalent_channel(&self, h: &CMatrix<T>) -> CMatrix<T> {
        &self.predetect * h * &self.beamform
    }

    pub fn verify(&self, h: &CMatrix<T>) -> Result<VerificationReport<T>> {
        let eq = self.equivalent_channel(h);
        let hc_norm = frobenius(&self.circulant);
        let diff = frobenius(&(eq - &self.circulant));
        let equivalence_residual = if hc_norm > T::zero() {
            diff / hc_norm
        } else {
            diff
        };
        let diag = diag_of_conjugated(&self.circulant)?;
        let lmax = self.lambda.iter().copied().fold(T::zero(), T::max);
        let lambda_residual = diag
            .diagonal
            .iter()
            .zip(self.lambda.iter())
            .map(|(d, l)| (d - cplx(*l)).norm_sqr().sqrt())
            .fold(T::zero(), T::max)
            / if lmax > T::zero() { lmax } else { T::one() };
        Ok(VerificationReport {
            equivalence_residual,
            beamform_unitarity: unitarity_residual(&self.beamform),
            predetect_unitarity: unitarity_residual(&self.predetect),
            circulant_residual: circulant_residual(&self.circulant),
            lambda_residual,
        })
    }
}

/// Number of singular values above `N·ε·γ_max`.
pub fn numerical_rank<T: Real>(singular_values: &[T]) -> usize {
    let n = singular_values.len();
    let gmax = singular_values.iter().copied().fold(T::zero(), T::max);
    let tol = T::lit(n as f64) * T::machine_epsilon() * gmax;
    singular_values.iter().filter(|&&g| g > tol).count()
}

pub fn bepre_transforms<T: Real>(h: &CMatrix<T>) -> Result<BePreTransforms<T>> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "joint beamforming/pre-detection needs equal element counts (N = M), got {} rx x {} tx",
            h.nrows(),
            h.ncols()
        )));
    }
    let factors = svd(h)?;
    let n = h.nrows();
    let sv: Vec<T> = factors.singular_values.iter().copied().collect();
    let w = idft_matrix::<T>(n);
    let circulant = build_circulant(&sv)?;
    let beamform = &factors.right * w.adjoint();
    let predetect = &w * factors.left.adjoint();
    Ok(BePreTransforms {
        beamform,
        predetect,
        circulant,
        numerical_rank: numerical_rank(&sv),
        lambda: factors.singular_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::channel_matrix;
    use crate::geometry::LinkGeometry;
    use num_complex::Complex;
    use std::f64::consts::FRAC_PI_6;

    type C = Complex<f64>;

    fn pseudo_random_matrix(n: usize, seed: u64) -> CMatrix<f64> {
        // splitmix-style hash, deterministic without an RNG dependency
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        CMatrix::from_fn(n, n, |_, _| C::new(next(), next()))
    }

    #[test]
    fn svd_of_identity_and_diagonal() {
        let f = svd(&CMatrix::<f64>::identity(4, 4)).unwrap();
        assert!(f.singular_values.iter().all(|s| (s - 1.0).abs() < 1e-15));
        let d = CMatrix::from_diagonal(&DVector::from_vec(vec![
            C::new(3.0, 0.0),
            C::new(2.0, 0.0),
            C::new(1.0, 0.0),
        ]));
        let f = svd(&d).unwrap();
        let sv: Vec<f64> = f.singular_values.iter().copied().collect();
        for (a, b) in sv.iter().zip([3.0, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(f.reconstruction_residual(&d) < 1e-15);
    }

    #[test]
    fn svd_of_random_matrix() {
        let h = pseudo_random_matrix(8, 7);
        let f = svd(&h).unwrap();
        assert!(f.reconstruction_residual(&h) <= 1e-12);
        assert!(unitarity_residual(&f.left) <= 1e-12);
        assert!(unitarity_residual(&f.right) <= 1e-12);
        let sv: Vec<f64> = f.singular_values.iter().copied().collect();
        assert!(sv.windows(2).all(|w| w[0] >= w[1]) && sv[7] >= 0.0);
    }

    #[test]
    fn svd_of_strongly_graded_matrix() {
        // column scales spanning 1 .. 1e-15, like a long-distance channel
        let x = pseudo_random_matrix(16, 3);
        let y = pseudo_random_matrix(16, 4);
        let grade = CMatrix::from_diagonal(&DVector::from_fn(16, |k, _| {
            C::new(10f64.powi(-(k as i32)), 0.0)
        }));
        let h = &x * grade * &y;
        let f = svd(&h).unwrap();
        assert!(f.reconstruction_residual(&h) <= 1e-14);
        let core = f.left.adjoint() * &h * &f.right;
        let sigma = CMatrix::from_diagonal(&f.singular_values.map(|s| C::new(s, 0.0)));
        assert!(frobenius(&(core - sigma)) <= 1e-14 * frobenius(&h));
        assert!(unitarity_residual(&f.left) <= 1e-12);
        assert!(unitarity_residual(&f.right) <= 1e-12);
    }

    #[test]
    fn svd_of_rank_one_matrix_has_unitary_factors() {
        let u = pseudo_random_matrix(5, 11).column(0).into_owned();
        let v = pseudo_random_matrix(5, 12).column(0).into_owned();
        let h = &u * v.adjoint();
        let f = svd(&h).unwrap();
        assert!(f
            .singular_values
            .iter()
            .skip(1)
            .all(|&s| s <= 1e-15 * f.singular_values[0]));
        assert!(unitarity_residual(&f.left) <= 1e-13);
        assert!(f.reconstruction_residual(&h) <= 1e-14);
    }

    #[test]
    fn svd_rejects_bad_input() {
        assert!(matches!(
            svd(&CMatrix::<f64>::zeros(2, 3)),
            Err(Error::DimensionMismatch(_))
        ));
        let mut h = CMatrix::<f64>::identity(3, 3);
        h[(1, 2)] = C::new(f64::NAN, 0.0);
        assert_eq!(svd(&h), Err(Error::NonFinite { row: 1, col: 2 }));
    }

    #[test]
    fn svd_of_zero_matrix() {
        let f = svd(&CMatrix::<f64>::zeros(3, 3)).unwrap();
        assert!(f.singular_values.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn circulant_of_ones_is_identity() {
        let c = build_circulant(&[1.0; 6]).unwrap();
        assert!(frobenius(&(c - CMatrix::identity(6, 6))) < 1e-14);
        let c = build_circulant(&[2.5]).unwrap();
        assert!((c[(0, 0)] - C::new(2.5, 0.0)).norm() < 1e-15);
        assert!(build_circulant(&[1.0, -0.1]).is_err());
    }

    #[test]
    fn circulant_first_row_is_scaled_dft_of_gains() {
        // The first row is (1/√N)·W*·v. Evaluating (1/√N)·W·v instead gives the
        // same row once the gains are relabelled l → −l mod N.
        let h = pseudo_random_matrix(8, 11);
        let sv: Vec<f64> = svd(&h).unwrap().singular_values.iter().copied().collect();
        let c = build_circulant(&sv).unwrap();
        let n = sv.len();
        let w = idft_matrix::<f64>(n);
        let v = DVector::from_iterator(n, sv.iter().map(|&s| C::new(s, 0.0)));
        let row_conj = w.adjoint() * &v / C::new((n as f64).sqrt(), 0.0);
        let mirrored = DVector::from_fn(n, |l, _| v[(n - l) % n]);
        let row_mirror = &w * mirrored / C::new((n as f64).sqrt(), 0.0);
        for k in 0..n {
            assert!((c[(0, k)] - row_conj[k]).norm() <= 1e-14);
            assert!((c[(0, k)] - row_mirror[k]).norm() <= 1e-14);
        }
        assert!(circulant_residual(&c) <= 1e-13);
    }

    #[test]
    fn identity_channel() {
        let h = CMatrix::<f64>::identity(4, 4);
        let t = bepre_transforms(&h).unwrap();
        let report = t.verify(&h).unwrap();
        assert!(report.equivalence_residual <= 1e-14);
        assert!(frobenius(&(t.equivalent_channel(&h) - &h)) <= 1e-14);
        assert!(t.lambda.iter().all(|l| (l - 1.0).abs() < 1e-15));
        assert_eq!(t.numerical_rank, 4);
    }

    #[test]
    fn aligned_channel_gains_match_dft_eigenvalues() {
        let geom = LinkGeometry::aligned(8, 0.01, 1.0);
        let h = channel_matrix(&geom).unwrap().entries;
        let t = bepre_transforms(&h).unwrap();
        let report = t.verify(&h).unwrap();
        assert!(report.equivalence_residual <= 1e-10);
        let mut eig: Vec<f64> = diag_of_conjugated(&h)
            .unwrap()
            .diagonal
            .iter()
            .map(|z| z.norm())
            .collect();
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (a, b) in eig.iter().zip(t.lambda.iter()) {
            assert!((a - b).abs() <= 1e-10 * eig[0]);
        }
    }

    #[test]
    fn misaligned_reference_geometry() {
        let geom = LinkGeometry::aligned(8, 0.01, 1.0).with_offset(0.0, FRAC_PI_6);
        let h = channel_matrix(&geom).unwrap().entries;
        let t = bepre_transforms(&h).unwrap();
        let r = t.verify(&h).unwrap();
        assert!(r.equivalence_residual <= 1e-10, "{r:?}");
        assert!(r.max_unitarity() <= 1e-12, "{r:?}");
        assert!(r.circulant_residual <= 1e-10, "{r:?}");
        assert!(r.lambda_residual <= 1e-10, "{r:?}");
        // mode decomposition through W*·predetect is noise-white
        let w = idft_matrix::<f64>(8);
        let g = w.adjoint() * &t.predetect;
        assert!(frobenius(&(&g * g.adjoint() - CMatrix::identity(8, 8))) <= 1e-12);
    }

    #[test]
    fn rectangular_channel_rejected() {
        let h = CMatrix::<f64>::zeros(3, 4);
        assert!(matches!(
            bepre_transforms(&h),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn rank_tolerance() {
        assert_eq!(numerical_rank(&[1.0, 0.5, 1e-17, 0.0]), 2);
        assert_eq!(numerical_rank::<f64>(&[0.0, 0.0]), 0);
    }

    #[test]
    fn works_in_single_precision() {
        let geom = LinkGeometry::<f32>::aligned(4, 0.01, 0.5).with_offset(0.2, 0.3);
        let h = channel_matrix(&geom).unwrap().entries;
        let t = bepre_transforms(&h).unwrap();
        let r = t.verify(&h).unwrap();
        assert!(r.equivalence_residual <= 1e-4, "{r:?}");
        assert!(r.max_unitarity() <= 1e-5, "{r:?}");
    }
}
