//! Big-rational reference evaluation of the innovation recurrence.
//!
//! Everything here is exact: binomial coefficients are big integers, the
//! size penalty `alpha_i = 1/(i*theta)^rho` is a rational power (integer
//! exponent), and the increment is their exact weighted sum. The floating
//! point kernel is checked against these values, never the other way round.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Exact binomial coefficient `C(m, i)`.
pub fn big_binomial(m: u64, i: u32) -> BigInt {
    if u64::from(i) > m {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for k in 0..u64::from(i) {
        acc = acc * BigInt::from(m - k) / BigInt::from(k + 1);
    }
    acc
}

/// Convenience rational from a signed numerator/denominator pair.
pub fn rational(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Exact value of the expected yearly increment at integer state `m`:
/// `p * sum_{i=1..=cutoff} C(m, i) / (i*theta)^rho`.
///
/// `rho` is an integer exponent so the penalty stays rational; `rho = 0`
/// degenerates to `alpha_i = 1` for every size, which is occasionally useful
/// as a pure subset-counting cross-check.
pub fn exact_increment(m: u64, p: &BigRational, theta: &BigRational, rho: u32, cutoff: u32) -> BigRational {
    let mut sum = BigRational::zero();
    for i in 1..=cutoff {
        let binom = big_binomial(m, i);
        if binom.is_zero() {
            continue;
        }
        let base = BigRational::from(BigInt::from(i)) * theta;
        let penalty = rational_pow(&base, rho);
        sum += BigRational::from(binom) / penalty;
    }
    p * sum
}

fn rational_pow(base: &BigRational, exp: u32) -> BigRational {
    BigRational::new(base.numer().pow(exp), base.denom().pow(exp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    #[test]
    fn binomial_hand_values() {
        assert_eq!(big_binomial(50, 2), BigInt::from(1225));
        assert_eq!(big_binomial(50, 4), BigInt::from(230_300));
        assert_eq!(big_binomial(3, 4), BigInt::zero());
        assert_eq!(big_binomial(0, 1), BigInt::zero());
        assert_eq!(
            big_binomial(1_000_000, 4).to_string(),
            "41666416667124999750000"
        );
    }

    #[test]
    fn baseline_m50_is_3047_over_10800() {
        let v = exact_increment(50, &rational(6, 10_000), &rational(6, 1), 2, 4);
        assert_eq!(v, rational(3047, 10_800));
        assert!((v.to_f64().unwrap() - 0.2821296296296296).abs() < 1e-16);
    }

    #[test]
    fn unit_penalty_counts_subsets() {
        // p = 1, alpha_i = 1: the increment is the number of subsets of
        // size 1..=4, here C(4,1)+C(4,2)+C(4,3)+C(4,4) = 15.
        let v = exact_increment(4, &rational(1, 1), &rational(1, 1), 0, 4);
        assert_eq!(v, rational(15, 1));
    }

    #[test]
    fn zero_state_gives_zero() {
        let v = exact_increment(0, &rational(6, 10_000), &rational(6, 1), 2, 4);
        assert!(v.is_zero());
    }
}
