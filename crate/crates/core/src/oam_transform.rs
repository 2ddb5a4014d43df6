//! DFT machinery linking OAM modes to array excitations.
//!
//! `W[n][k] = e^{+j2πnk/N}/√N` synthesises mode-multiplexed excitations at
//! the transmitter; its adjoint `W*` separates them at the receiver. Any
//! circulant matrix `C` whose rows are successive right shifts of the first
//! is diagonalised as `W*·C·W`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cis, frobenius, CMatrix, CVector, Real};

/// Assignment of OAM mode numbers to DFT columns.
///
/// Modes run over `⌊(2−N)/2⌋ ..= ⌊N/2⌋` (e.g. `-3..=4` for `N = 8`); mode
/// `l` occupies column `l mod N`, so mode 0 is column 0 and negative modes
/// alias onto the high columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeIndexMap {
    mode_of_column: Vec<i64>,
}

impl ModeIndexMap {
    pub fn new(n_modes: usize) -> Self {
        let n = n_modes as i64;
        let lowest = (2 - n).div_euclid(2);
        let mut mode_of_column = vec![0; n_modes];
        for l in lowest..lowest + n {
            mode_of_column[l.rem_euclid(n.max(1)) as usize] = l;
        }
        Self { mode_of_column }
    }

    pub fn n_modes(&self) -> usize {
        self.mode_of_column.len()
    }

    pub fn mode_of_column(&self, column: usize) -> i64 {
        self.mode_of_column[column]
    }

    pub fn column_of_mode(&self, mode: i64) -> Option<usize> {
        self.mode_of_column.iter().position(|&l| l == mode)
    }

    pub fn modes(&self) -> &[i64] {
        &self.mode_of_column
    }

    /// Smallest and largest mode number carried.
    pub fn range(&self) -> (i64, i64) {
        let lo = self.mode_of_column.iter().copied().min().unwrap_or(0);
        let hi = self.mode_of_column.iter().copied().max().unwrap_or(0);
        (lo, hi)
    }

    /// Compact text form, e.g. `"0,1,2,3,4,-3,-2,-1"`.
    pub fn describe(&self) -> String {
        self.mode_of_column
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Unitary `N × N` IDFT matrix.
pub fn idft_matrix<T: Real>(n: usize) -> CMatrix<T> {
    let scale = T::one() / T::lit(n as f64).sqrt();
    CMatrix::from_fn(n, n, |row, col| {
        // reduce the exponent mod N before converting to keep the angle small
        let k = (row * col) % n;
        cis(T::two_pi() * T::lit(k as f64) / T::lit(n as f64)) * scale
    })
}

/// Unitary DFT matrix `W*`.
pub fn dft_matrix<T: Real>(n: usize) -> CMatrix<T> {
    idft_matrix::<T>(n).adjoint()
}

/// Circulant matrix whose row `i` is `row` cyclically shifted right by `i`:
/// `C[i][k] = row[(k − i) mod N]`.
pub fn circulant_from_first_row<T: Real>(row: &[Complex<T>]) -> Result<CMatrix<T>> {
    let n = row.len();
    if n == 0 {
        return Err(Error::InvalidArgument("circulant of an empty row".into()));
    }
    Ok(CMatrix::from_fn(n, n, |i, k| row[(k + n - i) % n]))
}

/// Largest entrywise deviation of `c` from the circulant built on its first
/// row, relative to the largest entry.
pub fn circulant_residual<T: Real>(c: &CMatrix<T>) -> T {
    let n = c.nrows();
    let scale = c
        .iter()
        .map(|z| z.norm_sqr())
        .fold(T::zero(), T::max)
        .sqrt();
    if n == 0 || scale == T::zero() {
        return T::zero();
    }
    let mut worst = T::zero();
    for i in 0..n {
        for k in 0..c.ncols() {
            let d = (c[(i, k)] - c[(0, (k + n - i) % n)]).norm_sqr().sqrt();
            worst = worst.max(d);
        }
    }
    worst / scale
}

/// Diagonal of `W*·C·W` and how far `C` is from being DFT-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugatedDiagonal<T: Real> {
    pub diagonal: CVector<T>,
    /// `‖offdiag(W*CW)‖²_F / ‖W*CW‖²_F` (zero when `C = 0`).
    pub off_diagonal_energy: T,
}

pub fn diag_of_conjugated<T: Real>(c: &CMatrix<T>) -> Result<ConjugatedDiagonal<T>> {
    if !c.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    let w = idft_matrix::<T>(c.nrows());
    let d = w.adjoint() * c * &w;
    let diagonal = d.diagonal();
    let total = frobenius(&d).powi(2);
    let mut off = T::zero();
    for ((i, k), z) in d
        .iter()
        .enumerate()
        .map(|(idx, z)| ((idx % d.nrows(), idx / d.nrows()), z))
    {
        if i != k {
            off += z.norm_sqr();
        }
    }
    let off_diagonal_energy = if total > T::zero() {
        off / total
    } else {
        T::zero()
    };
    Ok(ConjugatedDiagonal {
        diagonal,
        off_diagonal_energy,
    })
}

/// Mode multiplexer/demultiplexer: `x = W·Φ·s` and `ŝ = Φ*·W*·x`, where
/// `Φ = diag(e^{jα_r l})` carries the first-element azimuth offset of the
/// transmit ring for each mode `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct OamModulator<T: Real> {
    pub w: CMatrix<T>,
    pub modes: ModeIndexMap,
    pub phases: CVector<T>,
}

impl<T: Real> OamModulator<T> {
    pub fn new(n: usize, alpha_tx: T) -> Self {
        let modes = ModeIndexMap::new(n);
        let phases = CVector::from_fn(n, |k, _| {
            cis(alpha_tx * T::lit(modes.mode_of_column(k) as f64))
        });
        Self {
            w: idft_matrix(n),
            modes,
            phases,
        }
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    /// `W·Φ` as a single matrix.
    pub fn synthesis(&self) -> CMatrix<T> {
        let mut m = self.w.clone();
        for (k, mut col) in m.column_iter_mut().enumerate() {
            col *= self.phases[k];
        }
        m
    }

    pub fn modulate(&self, s: &CVector<T>) -> CVector<T> {
        let scaled = s.component_mul(&self.phases);
        &self.w * scaled
    }

    pub fn demodulate(&self, x: &CVector<T>) -> CVector<T> {
        let y = self.w.ad_mul(x);
        y.component_mul(&self.phases.map(|p| p.conj()))
    }

    /// Mode-domain view `Φ*·W*·H·W·Φ` of a channel.
    pub fn mode_channel(&self, h: &CMatrix<T>) -> CMatrix<T> {
        let syn = self.synthesis();
        syn.adjoint() * h * syn
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::unitarity_residual;
    use proptest::prelude::*;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        Complex::new(re, im)
    }

    #[test]
    fn mode_ranges() {
        assert_eq!(ModeIndexMap::new(1).modes(), &[0]);
        assert_eq!(ModeIndexMap::new(2).modes(), &[0, 1]);
        assert_eq!(ModeIndexMap::new(3).modes(), &[0, 1, -1]);
        let m8 = ModeIndexMap::new(8);
        assert_eq!(m8.modes(), &[0, 1, 2, 3, 4, -3, -2, -1]);
        assert_eq!(m8.range(), (-3, 4));
        assert_eq!(m8.column_of_mode(-1), Some(7));
        assert_eq!(m8.column_of_mode(-4), None);
        assert_eq!(m8.describe(), "0,1,2,3,4,-3,-2,-1");
    }

    #[test]
    fn small_idft_matrices() {
        let w1 = idft_matrix::<f64>(1);
        assert_eq!(w1[(0, 0)], c(1.0, 0.0));
        let w2 = idft_matrix::<f64>(2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [[h, h], [h, -h]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((w2[(i, k)] - c(expect[i][k], 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn idft_is_unitary() {
        for n in 1..=32 {
            assert!(
                unitarity_residual(&idft_matrix::<f64>(n)) <= 1e-13,
                "N = {n}"
            );
        }
        assert!(unitarity_residual(&idft_matrix::<f32>(16)) <= 1e-5);
    }

    #[test]
    fn circulant_small_cases() {
        let mut e1 = vec![c(0.0, 0.0); 5];
        e1[0] = c(1.0, 0.0);
        assert_eq!(
            circulant_from_first_row(&e1).unwrap(),
            CMatrix::identity(5, 5)
        );
        let (a, b) = (c(1.0, 2.0), c(-3.0, 0.5));
        let m = circulant_from_first_row(&[a, b]).unwrap();
        assert_eq!(m, CMatrix::from_row_slice(2, 2, &[a, b, b, a]));
        assert!(circulant_from_first_row::<f64>(&[]).is_err());
    }

    #[test]
    fn identity_conjugates_to_ones() {
        let d = diag_of_conjugated(&CMatrix::<f64>::identity(6, 6)).unwrap();
        for z in d.diagonal.iter() {
            assert!((z - c(1.0, 0.0)).norm() < 1e-14);
        }
        assert!(d.off_diagonal_energy < 1e-26);
    }

    #[test]
    fn non_circulant_reports_leakage() {
        let m = CMatrix::from_fn(4, 4, |i, k| {
            c((i * 4 + k) as f64, (i as f64) - (k as f64).sqrt())
        });
        let d = diag_of_conjugated(&m).unwrap();
        assert!(d.off_diagonal_energy > 1e-3);
        assert!(diag_of_conjugated(&CMatrix::<f64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn modulator_round_trip_with_offset() {
        let modem = OamModulator::<f64>::new(8, 0.37);
        let s = CVector::from_fn(8, |k, _| c(k as f64 - 3.5, 0.25 * k as f64));
        let back = modem.demodulate(&modem.modulate(&s));
        assert!((back - &s).norm() < 1e-13);
        // element n of the excitation is Σ_l s_l e^{j(2πn/N + α)l}/√N
        let x = modem.modulate(&s);
        for n in 0..8 {
            let mut acc = c(0.0, 0.0);
            for k in 0..8 {
                let l = modem.modes.mode_of_column(k) as f64;
                let az = 2.0 * std::f64::consts::PI * n as f64 / 8.0 + 0.37;
                acc += s[k] * Complex::new(0.0, az * l).exp() / 8f64.sqrt();
            }
            assert!((acc - x[n]).norm() < 1e-13);
        }
    }

    fn arb_row(n: usize) -> impl Strategy<Value = Vec<C>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| c(a, b)), n)
    }

    proptest! {
        #[test]
        fn circulants_are_dft_diagonal(row in arb_row(8)) {
            let cm = circulant_from_first_row(&row).unwrap();
            let d = diag_of_conjugated(&cm).unwrap();
            prop_assert!(d.off_diagonal_energy <= 1e-12);
            // eigenvalues are √N·W·row under this shift convention
            let rowv = CVector::from_column_slice(&row);
            let expect = idft_matrix::<f64>(8) * rowv * c(8f64.sqrt(), 0.0);
            prop_assert!((&d.diagonal - &expect).norm() <= 1e-12 * (1.0 + expect.norm()));
            prop_assert!(circulant_residual(&cm) <= 1e-15);
        }

        #[test]
        fn first_row_round_trip(n in 1usize..12, seed in any::<u64>()) {
            let row: Vec<C> = (0..n).map(|k| {
                let t = (seed.wrapping_mul(k as u64 + 1) % 1000) as f64 / 1000.0;
                c(t, 1.0 - t)
            }).collect();
            let cm = circulant_from_first_row(&row).unwrap();
            let first: Vec<C> = cm.row(0).iter().copied().collect();
            prop_assert_eq!(first, row);
        }
    }
}
