//! Scalar numeric routines shared across the crate: quantile transforms for
//! the multiplier laws and the Kolmogorov sup-distribution.

/// Quantile function of the standard normal distribution.
///
/// Acklam's rational approximation; absolute error below 1.2e-9 over (0, 1),
/// which is far below the Monte Carlo tolerances used anywhere in this crate.
pub fn standard_normal_quantile(u: f64) -> f64 {
    assert!(u > 0.0 && u < 1.0, "normal quantile needs u in (0,1), got {u}");

    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const U_LOW: f64 = 0.02425;

    if u < U_LOW {
        let q = (-2.0 * u.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if u <= 1.0 - U_LOW {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - u).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Quantile function of the Poisson(1) distribution: the smallest k with
/// F(k) >= u, computed by walking the CDF.
pub fn poisson_one_quantile(u: f64) -> u64 {
    assert!(u > 0.0 && u < 1.0, "poisson quantile needs u in (0,1), got {u}");
    let mut k: u64 = 0;
    let mut pmf = (-1.0f64).exp();
    let mut cdf = pmf;
    // pmf underflows long before k = 64; the tail mass is ~1e-90 there.
    while u > cdf && k < 64 {
        k += 1;
        pmf /= k as f64;
        cdf += pmf;
    }
    k
}

/// CDF of sup_{s in [0,1]} |B0(s)| for a standard Brownian bridge B0
/// (the Kolmogorov distribution): K(x) = 1 - 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
pub fn kolmogorov_sup_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..200u32 {
        let term = (-2.0 * (k as f64).powi(2) * x * x).exp();
        if term < 1e-17 {
            break;
        }
        sum += sign * term;
        sign = -sign;
    }
    (1.0 - 2.0 * sum).clamp(0.0, 1.0)
}

/// Quantile of the Kolmogorov distribution by bisection.
pub fn kolmogorov_sup_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    let (mut lo, mut hi) = (1e-8, 5.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sup_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Order statistic at index ceil(level * n) of the sorted draws (1-based),
/// the quantile convention used for every empirical critical value here.
pub fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!(level > 0.0 && level < 1.0);
    let n = sorted.len();
    let idx = ((level * n as f64).ceil() as usize).clamp(1, n);
    sorted[idx - 1]
}

/// Sort draws by total order and take the empirical quantile.
pub fn quantile_of_draws(mut draws: Vec<f64>, level: f64) -> f64 {
    draws.sort_unstable_by(f64::total_cmp);
    empirical_quantile(&draws, level)
}
