//! Small numerical kernels: quadrature, the error function, modified Bessel I0.

/// Composite Simpson rule on [a, b] with `n` subintervals (rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n.is_multiple_of(2) { n.max(2) } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Adaptive Simpson quadrature with relative tolerance `rel_tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson_3(f: impl Fn(f64) -> f64, a: f64, m: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
    }
    fn recurse(
        f: impl Fn(f64) -> f64 + Copy,
        a: f64,
        b: f64,
        whole: f64,
        abs_tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson_3(f, a, 0.5 * (a + m), m);
        let right = simpson_3(f, m, 0.5 * (m + b), b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * abs_tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, left, 0.5 * abs_tol, depth - 1)
                + recurse(f, m, b, right, 0.5 * abs_tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let whole = simpson_3(f, a, m, b);
    let scale = whole.abs().max(1e-300);
    recurse(f, a, b, whole, rel_tol * scale, 48)
}

/// Complementary error function, accurate to ~1e-13 (series for small x,
/// Lentz continued fraction for large x).
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        return 1.0 - erf_series(x);
    }
    // erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + 2/(x + ...)))))
    let tiny = 1e-300;
    let mut fv = x;
    let mut cv = fv;
    let mut dv = 0.0_f64;
    for n in 1..400u32 {
        let a = n as f64 * 0.5;
        dv = x + a * dv;
        if dv.abs() < tiny {
            dv = tiny;
        }
        cv = x + a / cv;
        if cv.abs() < tiny {
            cv = tiny;
        }
        dv = 1.0 / dv;
        let delta = cv * dv;
        fv *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / std::f64::consts::PI.sqrt() / fv
}

fn erf_series(x: f64) -> f64 {
    // erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_{k>=0} 2^k x^(2k+1) / (1*3*...*(2k+1))
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    while term.abs() > 1e-18 * sum.abs().max(1.0) {
        k += 1.0;
        term *= 2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if k > 200.0 {
            break;
        }
    }
    2.0 / std::f64::consts::PI.sqrt() * (-x2).exp() * sum
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    0.5 * erfc(-(x - mean) / (sd * std::f64::consts::SQRT_2))
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0(z: f64) -> f64 {
    let az = z.abs();
    if az <= 100.0 {
        i0_series(az)
    } else {
        az.exp() * i0_scaled_asymptotic(az)
    }
}

/// exp(-|z|) * I0(z); stable for large arguments.
pub fn bessel_i0_scaled(z: f64) -> f64 {
    let az = z.abs();
    if az <= 100.0 {
        i0_series(az) * (-az).exp()
    } else {
        i0_scaled_asymptotic(az)
    }
}

fn i0_series(az: f64) -> f64 {
    // All terms positive: no cancellation. Converges for any az, used up to 100.
    let q = 0.25 * az * az;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut k = 1.0_f64;
    while term > 1e-18 * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
        if k > 500.0 {
            break;
        }
    }
    sum
}

fn i0_scaled_asymptotic(az: f64) -> f64 {
    // I0(z) ~ e^z/sqrt(2 pi z) * (1 + 1/(8z) + 9/(2!(8z)^2) + ...)
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut prev = f64::MAX;
    for k in 0..12u32 {
        let kk = 2 * k + 1;
        term *= (kk * kk) as f64 / (8.0 * (k + 1) as f64 * az);
        if term.abs() >= prev {
            break; // asymptotic series started diverging
        }
        prev = term.abs();
        sum += term;
    }
    sum / (2.0 * std::f64::consts::PI * az).sqrt()
}

/// Tabulated CDF built from a density by trapezoidal accumulation on a uniform
/// grid; evaluation interpolates linearly. Used as a comparison target for
/// Kolmogorov-Smirnov checks against analytic densities.
#[derive(Debug, Clone)]
pub struct CdfTable {
    lo: f64,
    step: f64,
    cum: Vec<f64>,
}

impl CdfTable {
    pub fn from_density(density: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Self {
        let n = n.max(2);
        let step = (hi - lo) / (n - 1) as f64;
        let mut cum = Vec::with_capacity(n);
        let mut acc = 0.0;
        let mut prev = density(lo);
        cum.push(0.0);
        for k in 1..n {
            let cur = density(lo + k as f64 * step);
            acc += 0.5 * (prev + cur) * step;
            cum.push(acc);
            prev = cur;
        }
        // Normalize so the table is an honest CDF even when [lo, hi] misses
        // a little tail mass.
        let total = acc.max(1e-300);
        for c in cum.iter_mut() {
            *c /= total;
        }
        CdfTable { lo, step, cum }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let pos = (x - self.lo) / self.step;
        if pos <= 0.0 {
            return 0.0;
        }
        let max = (self.cum.len() - 1) as f64;
        if pos >= max {
            return 1.0;
        }
        let k = pos.floor() as usize;
        let frac = pos - k as f64;
        self.cum[k] * (1.0 - frac) + self.cum[k + 1] * frac
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfc_reference_values() {
        // Reference values from standard tables.
        assert!((erfc(0.0) - 1.0).abs() < 1e-14);
        assert!((erfc(1.0) - 0.157_299_207_050_285_13).abs() < 1e-12);
        assert!((erfc(2.5) - 0.000_406_952_017_444_959_3).abs() < 1e-14);
        assert!((erfc(-1.0) - 1.842_700_792_949_715).abs() < 1e-12);
    }

    #[test]
    fn normal_cdf_symmetry() {
        for &x in &[0.0, 0.31, 1.7, 3.2] {
            let s = normal_cdf(x, 0.0, 1.0) + normal_cdf(-x, 0.0, 1.0);
            assert!((s - 1.0).abs() < 1e-13);
        }
        assert!((normal_cdf(1.96, 0.0, 1.0) - 0.975_002_104_851_780).abs() < 1e-9);
    }

    #[test]
    fn bessel_i0_values() {
        // I0(0)=1, I0(1)=1.2660658777520084, I0(10)=2815.716628466254
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-12);
        assert!((bessel_i0(10.0) - 2_815.716_628_466_254).abs() / 2_815.7 < 1e-12);
        // series and asymptotic branches agree at the switch point
        let a = i0_series(100.0) * (-100.0_f64).exp();
        let b = i0_scaled_asymptotic(100.0);
        assert!((a - b).abs() / a < 1e-11, "series {} vs asymptotic {}", a, b);
    }

    #[test]
    fn simpson_matches_closed_forms() {
        let v = simpson(|x| x * x, 0.0, 1.0, 64);
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
        let v = adaptive_simpson(|x| (-x).exp(), 0.0, 5.0, 1e-10);
        assert!((v - (1.0 - (-5.0_f64).exp())).abs() < 1e-9);
    }

    #[test]
    fn cdf_table_uniform() {
        let t = CdfTable::from_density(|_| 1.0, 0.0, 1.0, 101);
        assert!((t.eval(0.25) - 0.25).abs() < 1e-12);
        assert_eq!(t.eval(-1.0), 0.0);
        assert_eq!(t.eval(2.0), 1.0);
    }
}
