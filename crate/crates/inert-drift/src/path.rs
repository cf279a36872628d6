//! Path representations, drift specifications, and the seeded Brownian
//! generator that drives every simulator in the crate.
//!
//! Paths live on uniform grids `t0 + k*dt`; no separate time array is stored.
//! Reproducibility contract: identical `(master_seed, replica_index)` always
//! yields the bit-identical noise stream, and distinct replica indices give
//! independent streams that may be generated concurrently.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::stats::Report;

/// A uniformly sampled real-valued curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl SampledPath {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("t0 must be finite"));
        }
        if values.is_empty() {
            return Err(Error::invalid("path needs at least one node"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("path values must be finite"));
        }
        Ok(SampledPath { t0, dt, values })
    }

    /// Sample `f` on the grid `t0 + k*dt`, `k = 0..n_nodes`.
    pub fn from_fn(t0: f64, dt: f64, n_nodes: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..n_nodes).map(|k| f(t0 + k as f64 * dt)).collect();
        SampledPath::new(t0, dt, values)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// True when `other` lives on the identical grid.
    pub fn same_grid(&self, other: &SampledPath) -> bool {
        self.t0 == other.t0 && self.dt == other.dt && self.values.len() == other.values.len()
    }

    /// Sup distance on a shared grid.
    pub fn sup_distance(&self, other: &SampledPath) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch(
                "sup_distance requires identical grids".into(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// CSV with header `t,value`; times and values at full round-trip precision.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "t,value")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.time(k), v)?;
        }
        Ok(())
    }
}

/// Declared monotonicity direction of a drift function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Monotone {
    NonDecreasing,
    NonIncreasing,
}

/// A drift function mu(l) together with its claimed local Lipschitz bound
/// lambda(l) and a declared divergence property for mu(l) -> -infinity.
///
/// The bound is the caller's claim; [`validate_drift`] probes it by sampling
/// rather than attempting symbolic analysis.
#[derive(Clone)]
pub struct DriftSpec {
    label: String,
    mu: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    lambda: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    monotone: Monotone,
    divergence_ok: bool,
}

impl std::fmt::Debug for DriftSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DriftSpec")
            .field("label", &self.label)
            .field("monotone", &self.monotone)
            .field("divergence_ok", &self.divergence_ok)
            .finish()
    }
}

impl DriftSpec {
    pub fn new(
        label: impl Into<String>,
        mu: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lambda: impl Fn(f64) -> f64 + Send + Sync + 'static,
        monotone: Monotone,
        divergence_ok: bool,
    ) -> Self {
        DriftSpec {
            label: label.into(),
            mu: Arc::new(mu),
            lambda: Arc::new(lambda),
            monotone,
            divergence_ok,
        }
    }

    pub fn mu(&self, l: f64) -> f64 {
        (self.mu)(l)
    }

    pub fn lambda(&self, l: f64) -> f64 {
        (self.lambda)(l)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn monotone(&self) -> Monotone {
        self.monotone
    }

    pub fn divergence_ok(&self) -> bool {
        self.divergence_ok
    }

    /// mu(l) = c.
    pub fn constant(c: f64) -> Self {
        DriftSpec::new(
            format!("constant({c})"),
            move |_| c,
            |_| 0.0,
            if c >= 0.0 {
                Monotone::NonDecreasing
            } else {
                Monotone::NonIncreasing
            },
            true,
        )
    }

    /// mu(l) = k*l.
    pub fn linear(k: f64) -> Self {
        DriftSpec::new(
            format!("linear({k})"),
            move |l| k * l,
            move |_| k.abs(),
            if k >= 0.0 {
                Monotone::NonDecreasing
            } else {
                Monotone::NonIncreasing
            },
            true,
        )
    }

    /// mu(l) = -l^2. Violates the divergence condition: sum 1/(|mu(n)| v 1)
    /// converges, so the solved local time can blow up in finite time.
    pub fn neg_quadratic() -> Self {
        DriftSpec::new(
            "neg_quadratic",
            |l| -(l * l),
            |l| 2.0 * l.abs(),
            Monotone::NonIncreasing,
            false,
        )
    }

    /// mu(l) = 1 - sqrt(l), the non-uniqueness counterexample. The shipped
    /// Lipschitz claim lambda = 1 is deliberately false near l = 0 so that
    /// [`validate_drift`] rejects this drift.
    pub fn one_minus_sqrt() -> Self {
        DriftSpec::new(
            "one_minus_sqrt",
            |l| 1.0 - l.max(0.0).sqrt(),
            |_| 1.0,
            Monotone::NonIncreasing,
            true,
        )
    }

    /// Look up a shipped drift by name; parameters feed the named family.
    pub fn from_name(name: &str, param: f64) -> Result<Self> {
        match name {
            "constant" => Ok(DriftSpec::constant(param)),
            "linear" => Ok(DriftSpec::linear(param)),
            "neg-quadratic" => Ok(DriftSpec::neg_quadratic()),
            "one-minus-sqrt" => Ok(DriftSpec::one_minus_sqrt()),
            "zero" => Ok(DriftSpec::constant(0.0)),
            other => Err(Error::invalid(format!("unknown drift spec '{other}'"))),
        }
    }
}

/// Seed plus replica index; the pair fully determines a noise stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RngConfig {
    pub master_seed: u64,
    pub replica_index: u64,
}

impl RngConfig {
    pub fn new(master_seed: u64) -> Self {
        RngConfig {
            master_seed,
            replica_index: 0,
        }
    }

    pub fn replica(self, replica_index: u64) -> Self {
        RngConfig {
            master_seed: self.master_seed,
            replica_index,
        }
    }

    /// The stream for this (seed, replica) pair.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.replica_index);
        rng
    }
}

/// Generate `dim` independent Brownian paths on the grid `k*dt`,
/// `k = 0..=round(horizon/dt)`, all starting at 0.
///
/// Increments are independent N(0, dt); draws for the coordinates are
/// interleaved per step so the marginal law of each coordinate does not
/// depend on `dim`'s ordering.
pub fn generate_brownian_path(
    rng: RngConfig,
    dt: f64,
    horizon: f64,
    dim: usize,
) -> Result<Vec<SampledPath>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::invalid(format!(
            "horizon must be nonnegative, got {horizon}"
        )));
    }
    if dim == 0 {
        return Err(Error::invalid("dim must be at least 1"));
    }
    let n_steps = (horizon / dt).round() as usize;
    let mut r = rng.rng();
    let sqrt_dt = dt.sqrt();
    let mut paths: Vec<Vec<f64>> = (0..dim)
        .map(|_| {
            let mut v = Vec::with_capacity(n_steps + 1);
            v.push(0.0);
            v
        })
        .collect();
    for _ in 0..n_steps {
        for path in paths.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut r);
            let prev = *path.last().unwrap();
            path.push(prev + z * sqrt_dt);
        }
    }
    paths
        .into_iter()
        .map(|v| SampledPath::new(0.0, dt, v))
        .collect()
}

/// Sampled validation of a [`DriftSpec`]: Lipschitz claim, declared
/// monotonicity, and a partial-sum heuristic for the divergence condition.
///
/// Always returns a report; the divergence entry is a finite-sample heuristic
/// and says so in its context string.
pub fn validate_drift(spec: &DriftSpec, l_max: f64, n_samples: usize, rng: RngConfig) -> Report {
    let mut report = Report::new();
    if !(l_max > 0.0) || n_samples == 0 {
        report.push(
            "arguments",
            false,
            l_max,
            0.0,
            "l_max must be positive and n_samples nonzero",
        );
        return report;
    }
    let mut r = rng.rng();
    let lam = spec.lambda(l_max).max(0.0);
    let tol = 1e-9;

    let mut worst_excess = 0.0_f64;
    let mut worst_pair = (0.0, 0.0);
    let mut violations = 0usize;
    let mut mono_worst = 0.0_f64;
    let mut mono_pair = (0.0, 0.0);
    for i in 0..n_samples {
        let u1: f64 = rand::Rng::random(&mut r);
        let u2: f64 = rand::Rng::random(&mut r);
        // Half the samples are squeezed toward 0 where Lipschitz failures
        // of sqrt-like drifts live.
        let (mut a, mut b) = if i % 2 == 0 {
            (u1 * l_max, u2 * l_max)
        } else {
            (u1 * u1 * u1 * l_max, u2 * u2 * u2 * l_max)
        };
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        if b - a < 1e-12 * l_max {
            continue;
        }
        let diff = spec.mu(b) - spec.mu(a);
        let excess = diff.abs() - lam * (b - a) * (1.0 + tol);
        if excess > worst_excess {
            worst_excess = excess;
            worst_pair = (a, b);
        }
        if excess > 0.0 {
            violations += 1;
        }
        let mono_violation = match spec.monotone() {
            Monotone::NonDecreasing => -diff,
            Monotone::NonIncreasing => diff,
        };
        if mono_violation > mono_worst {
            mono_worst = mono_violation;
            mono_pair = (a, b);
        }
    }
    report.push(
        "lipschitz-bound",
        violations == 0,
        worst_excess,
        0.0,
        format!(
            "{} violating pairs of {}; worst at a={:.6}, b={:.6}",
            violations, n_samples, worst_pair.0, worst_pair.1
        ),
    );
    report.push(
        "monotonicity",
        mono_worst <= tol * (1.0 + lam * l_max),
        mono_worst,
        tol * (1.0 + lam * l_max),
        format!(
            "declared {:?}; worst at a={:.6}, b={:.6}",
            spec.monotone(),
            mono_pair.0,
            mono_pair.1
        ),
    );

    // Divergence condition: only binding when mu heads to -infinity. Compare
    // the tail of the partial sums of 1/(|mu(n)| v 1) against the whole sum;
    // a thin tail marks the sum as numerically convergent.
    let n_max = (l_max.ceil() as usize).max(4);
    let term = |n: usize| 1.0 / spec.mu(n as f64).abs().max(1.0);
    let applicable = spec.monotone() == Monotone::NonIncreasing && spec.mu(n_max as f64) < 0.0;
    if applicable {
        let s_half: f64 = (1..=n_max / 2).map(term).sum();
        let s_full: f64 = s_half + (n_max / 2 + 1..=n_max).map(term).sum::<f64>();
        let tail_ratio = (s_full - s_half) / s_full.max(1e-300);
        let looks_convergent = tail_ratio < 0.05;
        report.push(
            "divergence-condition",
            !looks_convergent,
            tail_ratio,
            0.05,
            format!(
                "partial-sum heuristic over n=1..{} (spec claims divergence_ok={}); \
                 finite samples cannot decide the condition",
                n_max,
                spec.divergence_ok()
            ),
        );
    } else {
        report.push(
            "divergence-condition",
            true,
            0.0,
            0.05,
            "not applicable: mu does not head to -infinity on the sampled range",
        );
    }
    report
}
