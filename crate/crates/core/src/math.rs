//! Thin float helpers over `libm` so the rest of the crate reads like std code.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn powi(x: f64, n: u64) -> f64 {
    let mut acc = 1.0;
    let mut base = x;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

#[inline]
pub fn ln1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln C(n, k)`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    lgamma(n as f64 + 1.0) - lgamma(k as f64 + 1.0) - lgamma((n - k) as f64 + 1.0)
}

/// `C(n, 2)` as a float.
#[inline]
pub fn pairs(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        n as f64 * (n as f64 - 1.0) / 2.0
    }
}

/// Binomial probability mass `C(n,i) y^i (1-y)^(n-i)`, exact at the endpoints.
pub fn binomial_pmf(n: u64, i: u64, y: f64) -> f64 {
    if i > n {
        return 0.0;
    }
    if y <= 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    if y >= 1.0 {
        return if i == n { 1.0 } else { 0.0 };
    }
    exp(ln_choose(n, i) + i as f64 * ln(y) + (n - i) as f64 * ln1p(-y))
}

/// `x^n` with the `0^0 = 1` convention of the duality function.
#[inline]
pub fn pow_conv(x: f64, n: u64) -> f64 {
    if n == 0 {
        1.0
    } else {
        powi(x, n)
    }
}

/// The duality function `H(x, z) = prod_v x_v^{z_v}`.
pub fn duality_h(x: &[f64], z: &[u64]) -> f64 {
    x.iter().zip(z).map(|(&xv, &zv)| pow_conv(xv, zv)).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_sums_to_one() {
        for &(n, y) in &[(0u64, 0.3), (7, 0.25), (40, 0.9)] {
            let s: f64 = (0..=n).map(|i| binomial_pmf(n, i, y)).sum();
            assert!((s - 1.0).abs() < 1e-12, "n={n} y={y} s={s}");
        }
    }

    #[test]
    fn zero_to_the_zero_is_one() {
        assert_eq!(duality_h(&[0.0, 0.5], &[0, 2]), 0.25);
        assert_eq!(duality_h(&[0.0], &[1]), 0.0);
    }

    #[test]
    fn powi_matches_powf() {
        assert!((powi(1.3, 17) - powf(1.3, 17.0)).abs() < 1e-10);
        assert_eq!(powi(2.0, 0), 1.0);
    }
}
