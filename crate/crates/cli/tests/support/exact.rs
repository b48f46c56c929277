//! Exact σ_k by enumerating every subset product in big integers.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

/// x = m · 2^e exactly.
pub fn decompose(x: f64) -> (BigInt, i64) {
    let bits = x.to_bits();
    let field = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (m, e) = if field == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), field - 1075)
    };
    let m = BigInt::from(m);
    (if x.is_sign_negative() { -m } else { m }, e)
}

/// σ_0..=σ_n as (N, e) with σ_k = N · 2^e.
pub fn exact_sigmas(v: &[f64]) -> Vec<(BigInt, i64)> {
    let parts: Vec<(BigInt, i64)> = v.iter().map(|&x| decompose(x)).collect();
    let base = parts.iter().map(|p| p.1).min().unwrap_or(0);
    let ints: Vec<BigInt> = parts.iter().map(|(m, e)| m << ((e - base) as usize)).collect();
    let n = v.len();
    let mut prod = vec![BigInt::from(1); 1 << n];
    let mut sums = vec![BigInt::zero(); n + 1];
    sums[0] = BigInt::from(1);
    for mask in 1usize..1 << n {
        let low = mask.trailing_zeros() as usize;
        prod[mask] = &prod[mask & (mask - 1)] * &ints[low];
        sums[mask.count_ones() as usize] += &prod[mask];
    }
    sums.into_iter()
        .enumerate()
        .map(|(k, s)| (s, base * k as i64))
        .collect()
}

/// |approx − exact| in units of the last place of `approx`.
pub fn ulp_gap(approx: f64, exact: &(BigInt, i64)) -> f64 {
    let (num, e) = exact;
    if approx == 0.0 && num.is_zero() {
        return 0.0;
    }
    let (m, ea) = decompose(approx);
    let ulp_exp = if approx != 0.0 {
        ea
    } else {
        num.bits() as i64 + e - 53
    };
    let base = (*e).min(ea).min(ulp_exp);
    let diff = ((num << ((e - base) as usize)) - (m << ((ea - base) as usize))).abs();
    let shift = ulp_exp - base;
    let drop = (shift - 60).max(0);
    let kept = (diff >> drop as usize).to_f64().unwrap_or(f64::INFINITY);
    kept * 2f64.powi(-((shift - drop) as i32))
}
