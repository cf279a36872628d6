//! Statistical comparison utilities shared by the verification experiments:
//! empirical CDFs, Kolmogorov-Smirnov distances, autocorrelation, and the
//! check/report plumbing every experiment emits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::SampledPath;

/// Empirical CDF over a finite sample; evaluation is the right-continuous
/// fraction of samples `<= q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    values: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("ecdf requires a nonempty sample"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("ecdf sample contains non-finite values"));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Ecdf { values: samples })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sorted sample values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Fraction of samples `<= q`.
    pub fn eval(&self, q: f64) -> f64 {
        let n = self.values.len();
        let k = self.values.partition_point(|&v| v <= q);
        k as f64 / n as f64
    }

    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "value,probability")?;
        let n = self.values.len() as f64;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", v, (k + 1) as f64 / n)?;
        }
        Ok(())
    }
}

/// Kolmogorov-Smirnov distance between an empirical CDF and a reference CDF,
/// taking the left limits at the sample points into account. The reference's
/// left limit is evaluated numerically at the adjacent float, which keeps
/// the distance zero against the ECDF's own step function while recovering
/// the usual (i-1)/n comparison for continuous references.
pub fn ks_distance(ecdf: &Ecdf, cdf: impl Fn(f64) -> f64) -> f64 {
    let n = ecdf.values.len() as f64;
    let mut sup = 0.0_f64;
    for (k, &v) in ecdf.values.iter().enumerate() {
        let hi = ((k + 1) as f64 / n - cdf(v)).abs();
        let lo = (k as f64 / n - cdf(v.next_down())).abs();
        sup = sup.max(hi).max(lo);
    }
    sup
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &Ecdf, b: &Ecdf) -> f64 {
    let mut sup = 0.0_f64;
    for &v in a.values() {
        sup = sup.max((a.eval(v) - b.eval(v)).abs());
    }
    for &v in b.values() {
        sup = sup.max((a.eval(v) - b.eval(v)).abs());
    }
    sup
}

/// Mean-removed sample autocorrelation of a path at the requested lags
/// (in the path's time unit). Lags are rounded to whole grid steps.
pub fn autocorrelation(path: &SampledPath, lags: &[f64]) -> Result<Vec<(f64, f64)>> {
    let v = path.values();
    let n = v.len();
    let dt = path.dt();
    let max_lag_steps = lags
        .iter()
        .map(|&h| (h / dt).round() as usize)
        .max()
        .unwrap_or(0);
    if n < 2 || max_lag_steps >= n {
        return Err(Error::InsufficientData(format!(
            "path of {} nodes is too short for the requested lags",
            n
        )));
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let var: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    if var == 0.0 {
        return Err(Error::InsufficientData(
            "path is constant; autocorrelation undefined".into(),
        ));
    }
    let mut out = Vec::with_capacity(lags.len());
    for &h in lags {
        let j = (h / dt).round() as usize;
        let mut cov = 0.0;
        for k in 0..n - j {
            cov += (v[k] - mean) * (v[k + j] - mean);
        }
        out.push((h, cov / var));
    }
    Ok(out)
}

/// One named check inside a [`Report`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub context: String,
}

/// A list of named checks; failed overall as soon as any check fails.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Report { checks: Vec::new() }
    }

    pub fn push(
        &mut self,
        name: impl Into<String>,
        pass: bool,
        measured: f64,
        tolerance: f64,
        context: impl Into<String>,
    ) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            measured,
            tolerance,
            context: context.into(),
        });
    }

    /// Convenience: pass iff `measured <= tolerance`.
    pub fn check_le(
        &mut self,
        name: impl Into<String>,
        measured: f64,
        tolerance: f64,
        context: impl Into<String>,
    ) {
        let pass = measured <= tolerance && measured.is_finite();
        self.push(name, pass, measured, tolerance, context);
    }

    pub fn merge(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed_names(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect()
    }

    /// One line per check, `PASS`/`FAIL` first.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{} {}: measured {:.6e} vs tol {:.6e} {}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.tolerance,
                c.context
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::normal_cdf;
    use crate::path::{generate_brownian_path, RngConfig};

    #[test]
    fn ecdf_basics() {
        let e = Ecdf::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!((e.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.eval(0.5), 0.0);
        assert_eq!(e.eval(3.5), 1.0);
        assert!(Ecdf::new(vec![]).is_err());
    }

    #[test]
    fn ecdf_permutation_invariant() {
        let a = Ecdf::new(vec![3.0, 1.0, 2.0]).unwrap();
        let b = Ecdf::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ks_single_sample_vs_normal() {
        let e = Ecdf::new(vec![0.0]).unwrap();
        let d = ks_distance(&e, |q| normal_cdf(q, 0.0, 1.0));
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ks_against_own_step_function_is_zero() {
        let e = Ecdf::new(vec![0.3, 0.7, 1.5, 2.0]).unwrap();
        let clone = e.clone();
        let d = ks_distance(&e, move |q| clone.eval(q));
        assert_eq!(d, 0.0);
    }

    #[test]
    fn ks_invariant_under_increasing_transform() {
        let raw: Vec<f64> = (0..200).map(|k| (k as f64 * 0.7185).sin()).collect();
        let e = Ecdf::new(raw.clone()).unwrap();
        let d1 = ks_distance(&e, |q| normal_cdf(q, 0.0, 1.0));
        let t = |x: f64| x.exp();
        let e2 = Ecdf::new(raw.iter().map(|&x| t(x)).collect()).unwrap();
        let d2 = ks_distance(&e2, |q| normal_cdf(q.ln(), 0.0, 1.0));
        assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn gaussian_ecdf_at_zero() {
        // 1e5 standard normal draws: ECDF(0) within 0.005 of 0.5.
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = RngConfig::new(11).rng();
        let sample: Vec<f64> = (0..100_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let e = Ecdf::new(sample).unwrap();
        assert!((e.eval(0.0) - 0.5).abs() < 0.005);
    }

    #[test]
    fn uniform_ks_small() {
        let mut rng = RngConfig::new(12).rng();
        let sample: Vec<f64> = (0..100_000).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
        let e = Ecdf::new(sample).unwrap();
        let d = ks_distance(&e, |q| q.clamp(0.0, 1.0));
        assert!(d < 0.01, "ks = {}", d);
    }

    #[test]
    fn autocorrelation_lag_zero_and_white_noise() {
        let b = generate_brownian_path(RngConfig::new(5), 1.0, 4000.0, 1).unwrap();
        // increments of a unit-step Brownian path are white noise
        let incr: Vec<f64> = b[0].values().windows(2).map(|w| w[1] - w[0]).collect();
        let n = incr.len();
        let path = SampledPath::new(0.0, 1.0, incr).unwrap();
        let ac = autocorrelation(&path, &[0.0, 1.0]).unwrap();
        assert_eq!(ac[0].1, 1.0);
        assert!(ac[1].1.abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn autocorrelation_of_ou_path() {
        // Exact AR(1) sampling of dX = -X dt + dB: X_{k+1} = a X_k + s Z
        use rand_distr::{Distribution, StandardNormal};
        let dt: f64 = 0.05;
        let n = 200_000;
        let a = (-dt).exp();
        let s = ((1.0 - a * a) * 0.5).sqrt();
        let mut rng = RngConfig::new(9).rng();
        let mut x = 0.0;
        let mut vals = Vec::with_capacity(n);
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            x = a * x + s * z;
            vals.push(x);
        }
        let path = SampledPath::new(0.0, dt, vals).unwrap();
        let ac = autocorrelation(&path, &[0.5]).unwrap();
        assert!(
            (ac[0].1 - (-0.5_f64).exp()).abs() < 0.03,
            "lag-0.5 autocorr {}",
            ac[0].1
        );
    }

    #[test]
    fn report_overall_status() {
        let mut r = Report::new();
        r.check_le("a", 0.5, 1.0, "");
        assert!(r.passed());
        r.check_le("b", 2.0, 1.0, "");
        assert!(!r.passed());
        assert_eq!(r.failed_names(), vec!["b"]);
    }
}
