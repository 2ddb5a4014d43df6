//! Real-operation counts for ML detection with and without BePre.
//!
//! Cost model `cm1`: a complex multiplication is 4 real multiplications and
//! 2 real additions, a complex addition or subtraction is 2 real additions,
//! `|z|²` is 2 real multiplications and 1 real addition. Comparisons are
//! free.

use std::fmt;

use num_bigint::BigUint;

use crate::error::{Error, Result};

pub const COST_MODEL: &str = "cm1";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OpCount {
    pub real_additions: BigUint,
    pub real_multiplications: BigUint,
    pub model_version: &'static str,
}

impl OpCount {
    fn new(real_additions: BigUint, real_multiplications: BigUint) -> Self {
        Self {
            real_additions,
            real_multiplications,
            model_version: COST_MODEL,
        }
    }

    pub fn total(&self) -> BigUint {
        &self.real_additions + &self.real_multiplications
    }
}

impl fmt::Display for OpCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} additions, {} multiplications ({})",
            self.real_additions, self.real_multiplications, self.model_version
        )
    }
}

fn check(n: usize, xi: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if xi < 2 {
        return Err(Error::InvalidArgument(
            "constellation size must be at least 2".into(),
        ));
    }
    Ok(())
}

/// Exhaustive search of `‖ỹ − G·s‖²` over `ξ^N` hypotheses with a dense
/// `N × N` matrix `G`.
///
/// Per hypothesis: `N²` complex products, `N²` complex additions (`N − 1`
/// accumulations plus the subtraction from `ỹ_i`, per row), `N` squared
/// magnitudes and `N − 1` real additions for the sum.
pub fn count_joint_ml(n: usize, xi: usize) -> Result<OpCount> {
    check(n, xi)?;
    let n2 = (n * n) as u64;
    let n = n as u64;
    let adds = 2 * n2 + 2 * n2 + n + (n - 1);
    let mults = 4 * n2 + 2 * n;
    let hypotheses = BigUint::from(xi).pow(n as u32);
    Ok(OpCount::new(&hypotheses * adds, &hypotheses * mults))
}

/// Front end `W*·(predetect·y)` plus `N` independent searches over `ξ`
/// points, each a complex product, a complex subtraction and a squared
/// magnitude.
pub fn count_permode_ml(n: usize, xi: usize) -> Result<OpCount> {
    check(n, xi)?;
    let (front_adds, front_mults) = front_end(n as u64);
    let searches = (n * xi) as u64;
    Ok(OpCount::new(
        BigUint::from(front_adds + searches * (2 + 2 + 1)),
        BigUint::from(front_mults + searches * (4 + 2)),
    ))
}

/// Two dense complex matrix-vector products.
fn front_end(n: u64) -> (u64, u64) {
    let adds = 2 * n * n + 2 * n * (n - 1);
    let mults = 4 * n * n;
    (2 * adds, 2 * mults)
}

/// `adds_joint − adds_permode`.
pub fn addition_gap(n: usize, xi: usize) -> Result<BigUint> {
    let joint = count_joint_ml(n, xi)?.real_additions;
    let per_mode = count_permode_ml(n, xi)?.real_additions;
    Ok(if joint >= per_mode {
        joint - per_mode
    } else {
        per_mode - joint
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    #[test]
    fn single_mode_binary() {
        let j = count_joint_ml(1, 2).unwrap();
        // |y − g s|²: 1 complex product, 1 complex subtraction, 1 squared magnitude
        assert_eq!(j.real_additions, BigUint::from(2 * 5u32));
        assert_eq!(j.real_multiplications, BigUint::from(2 * 6u32));
        let p = count_permode_ml(1, 2).unwrap();
        // same search, plus the 1×1 front end (two complex products)
        assert_eq!(p.real_additions, BigUint::from(10u32 + 4));
        assert_eq!(p.real_multiplications, BigUint::from(12u32 + 8));
        assert_eq!(j.model_version, "cm1");
    }

    #[test]
    fn joint_count_by_enumeration() {
        // tally the detector's inner loop operation by operation
        for (n, xi) in [(2usize, 2usize), (2, 4), (3, 4), (4, 2)] {
            let (mut adds, mut mults) = (0u64, 0u64);
            for _ in 0..xi.pow(n as u32) {
                for _row in 0..n {
                    for _col in 0..n {
                        mults += 4;
                        adds += 2 + 2;
                    }
                    mults += 2;
                    adds += 1;
                }
                adds += n as u64 - 1;
            }
            let c = count_joint_ml(n, xi).unwrap();
            assert_eq!(
                (c.real_additions, c.real_multiplications),
                (adds.into(), mults.into())
            );
        }
    }

    #[test]
    fn monotone_in_both_arguments() {
        for n in 1..10 {
            for xi in [2, 4, 16] {
                let a = count_joint_ml(n, xi).unwrap();
                let b = count_joint_ml(n + 1, xi).unwrap();
                let c = count_joint_ml(n, xi * 2).unwrap();
                assert!(b.real_additions > a.real_additions && c.real_additions > a.real_additions);
                assert!(b.real_multiplications > a.real_multiplications);
                let p = count_permode_ml(n, xi).unwrap();
                assert!(count_permode_ml(n + 1, xi).unwrap().total() > p.total());
                assert!(count_permode_ml(n, xi * 2).unwrap().total() > p.total());
            }
        }
    }

    #[test]
    fn permode_linear_in_xi() {
        let a = count_permode_ml(6, 2).unwrap().real_additions;
        let b = count_permode_ml(6, 4).unwrap().real_additions;
        let c = count_permode_ml(6, 6).unwrap().real_additions;
        assert_eq!(&c - &b, &b - &a);
    }

    #[test]
    fn ratio_grows_with_n() {
        let mut last = 0.0;
        for n in 2..=10 {
            let j = count_joint_ml(n, 4)
                .unwrap()
                .real_additions
                .to_f64()
                .unwrap();
            let p = count_permode_ml(n, 4)
                .unwrap()
                .real_additions
                .to_f64()
                .unwrap();
            let ratio = j / p;
            assert!(ratio > last);
            // at least ξ^{N−1}/N
            assert!(ratio >= 4f64.powi(n as i32 - 1) / n as f64);
            last = ratio;
        }
    }

    #[test]
    fn ten_modes_qpsk() {
        let j = count_joint_ml(10, 4).unwrap();
        assert_eq!(j.real_additions, BigUint::from(419u64 * 1_048_576));
        let gap = addition_gap(10, 4).unwrap().to_f64().unwrap();
        assert!((gap - 439_352_384.0).abs() < 1.0, "{gap}");
    }

    #[test]
    fn huge_search_spaces_do_not_overflow() {
        let c = count_joint_ml(64, 256).unwrap();
        assert!(c.real_additions.bits() > 512);
    }

    #[test]
    fn invalid_arguments() {
        assert!(count_joint_ml(0, 4).is_err());
        assert!(count_permode_ml(4, 1).is_err());
    }

    #[test]
    fn display() {
        let s = count_joint_ml(1, 2).unwrap().to_string();
        assert_eq!(s, "10 additions, 12 multiplications (cm1)");
    }
}
