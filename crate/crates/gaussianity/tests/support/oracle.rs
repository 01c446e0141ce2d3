//! Exact rational cumulants of the normalized mapped noise.
//!
//! Enumerates the discrete offsets `u`, convolves their raw moments with the
//! Gaussian moments `E[n^j] = (j−1)!!` (the exact result of Gauss–Hermite
//! quadrature of high enough order), converts moments to cumulants by the
//! standard recursion and rescales by σ^r.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn binom(n: usize, k: usize) -> BigRational {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    BigRational::from_integer(c)
}

fn gaussian_moment(j: usize) -> BigRational {
    if j % 2 == 1 {
        return BigRational::zero();
    }
    let mut v = BigInt::one();
    let mut k = 1;
    while k < j {
        v *= BigInt::from(k);
        k += 2;
    }
    BigRational::from_integer(v)
}

/// Exact κ4, κ6, κ8, κ10 of `(u + n)/σ` for S = s_num/s_den.
pub fn oracle(s_num: i64, s_den: i64, q: u32) -> [f64; 4] {
    let n_levels = 1i64 << q;
    let s = rat(s_num, s_den);
    let us: Vec<BigRational> = (0..n_levels)
        .map(|m| &s * (rat(m, n_levels - 1) - rat(1, 2)))
        .collect();
    let raw_u = |r: usize| -> BigRational {
        us.iter().fold(BigRational::zero(), |acc, u| acc + num_traits::pow(u.clone(), r)) / rat(n_levels, 1)
    };
    let mu_u: Vec<BigRational> = (0..=10).map(raw_u).collect();
    let mu_x: Vec<BigRational> = (0..=10)
        .map(|r| (0..=r).fold(BigRational::zero(), |acc, k| acc + binom(r, k) * &mu_u[k] * gaussian_moment(r - k)))
        .collect();
    let mut kappa = vec![BigRational::zero(); 11];
    for r in 1..=10 {
        let mut v = mu_x[r].clone();
        for k in 1..r {
            v -= binom(r - 1, k - 1) * &kappa[k] * &mu_x[r - k];
        }
        kappa[r] = v;
    }
    assert!(kappa[1].is_zero() && kappa[3].is_zero() && kappa[5].is_zero());
    let sigma2 = BigRational::one() + &mu_u[2];
    assert_eq!(kappa[2], sigma2);
    let scaled = |r: usize| (&kappa[r] / num_traits::pow(sigma2.clone(), r / 2)).to_f64().unwrap();
    [scaled(4), scaled(6), scaled(8), scaled(10)]
}

