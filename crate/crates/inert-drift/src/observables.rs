//! Local-time estimators, excursion decomposition, and the closed-form laws
//! of the drifted reflected process: escape probability, excursion intensity
//! density, and the level-crossing rate, with Monte Carlo adjudicators.

use crate::error::{Error, Result};
use crate::numeric::adaptive_simpson;
use crate::path::{DriftSpec, RngConfig, SampledPath};
use crate::replicas::map_replicas;
use crate::skorohod::{ExtendedSolver, ReflectedSolution};
use crate::stats::Ecdf;

use rand_distr::{Distribution, StandardNormal};

/// One excursion of the reflected path from the barrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionRecord {
    /// Local-time coordinate at the excursion start.
    pub tau: f64,
    /// Observed duration in seconds; a lower bound when censored.
    pub duration: f64,
    pub max_height: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// Still open at the horizon.
    pub censored: bool,
}

/// Write excursions as CSV `tau,duration,max_height,t_start,t_end,censored`.
pub fn write_excursions_csv<W: std::io::Write>(
    records: &[ExcursionRecord],
    w: &mut W,
) -> std::io::Result<()> {
    writeln!(w, "tau,duration,max_height,t_start,t_end,censored")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.tau, r.duration, r.max_height, r.t_start, r.t_end, r.censored as u8
        )?;
    }
    Ok(())
}

/// Occupation-time estimate of the local time:
/// t -> (1/(2 eps)) * int_0^t 1{0 < x(s) < eps} ds, trapezoidal on the grid.
///
/// The band is open at 0: the continuous process spends zero Lebesgue time
/// at the barrier, but the discretized reflection clamps nodes to exactly 0,
/// and counting that atom inflates the estimate by order sqrt(dt)/eps.
pub fn occupation_local_time(x: &SampledPath, eps: f64) -> Result<SampledPath> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    let tol = 1e-9 * (1.0 + x.max_abs());
    if x.values().iter().any(|&v| v < -tol) {
        return Err(Error::invalid(
            "occupation estimator needs a nonnegative path",
        ));
    }
    let dt = x.dt();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(x.len());
    out.push(0.0);
    let ind = |v: f64| if v > 0.0 && v < eps { 1.0 } else { 0.0 };
    for k in 1..x.len() {
        acc += 0.5 * dt * (ind(x.value(k - 1)) + ind(x.value(k)));
        out.push(acc / (2.0 * eps));
    }
    SampledPath::new(x.t0(), dt, out)
}

/// Decompose a reflected solution into excursions above the barrier.
/// Each maximal grid interval with x > 0 whose peak exceeds `height_floor`
/// becomes one record; `tau` is L at the interval's left endpoint.
pub fn decompose_excursions(
    sol: &ReflectedSolution,
    height_floor: f64,
) -> Vec<ExcursionRecord> {
    let x = &sol.x;
    let n = x.len();
    let zero_tol = 1e-12 * (1.0 + x.max_abs());
    let mut records = Vec::new();
    let mut open: Option<(usize, f64)> = None; // (left barrier node, running max)
    for k in 0..n {
        let positive = x.value(k) > zero_tol;
        match (&mut open, positive) {
            (None, true) => {
                // Excursion's left endpoint is the preceding barrier node
                // (or node 0 when the path starts strictly positive).
                let start = k.saturating_sub(1);
                open = Some((start, x.value(k)));
            }
            (Some((_, peak)), true) => {
                if x.value(k) > *peak {
                    *peak = x.value(k);
                }
            }
            (Some((start, peak)), false) => {
                if *peak > height_floor {
                    records.push(ExcursionRecord {
                        tau: sol.l.value(*start),
                        duration: x.time(k) - x.time(*start),
                        max_height: *peak,
                        t_start: x.time(*start),
                        t_end: x.time(k),
                        censored: false,
                    });
                }
                open = None;
            }
            (None, false) => {}
        }
    }
    if let Some((start, peak)) = open {
        if peak > height_floor {
            records.push(ExcursionRecord {
                tau: sol.l.value(start),
                duration: x.time(n - 1) - x.time(start),
                max_height: peak,
                t_start: x.time(start),
                t_end: x.time(n - 1),
                censored: true,
            });
        }
    }
    records
}

/// Sign convention for the survival exponent of the escape law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SurvivalVariant {
    /// exp(-2 int (mu v 0)): consistent with the exp(-l^2) law for mu(l)=l
    /// and with the drifted-BM escape probability. Default.
    Consistent,
    /// exp(-2 int |mu ^ 0|): the negative-part exponent, kept for
    /// adjudication by simulation.
    NegativePart,
}

/// P(tau_infty > tau): survival function of the total accumulated local time.
pub fn escape_survival(mu: &DriftSpec, tau: f64, variant: SurvivalVariant) -> f64 {
    let tau = tau.max(0.0);
    if tau == 0.0 {
        return 1.0;
    }
    let integrand = move |s: f64| match variant {
        SurvivalVariant::Consistent => mu.mu(s).max(0.0),
        SurvivalVariant::NegativePart => mu.mu(s).min(0.0).abs(),
    };
    let integral = adaptive_simpson(integrand, 0.0, tau, 1e-8);
    (-2.0 * integral).exp()
}

/// Density of the excursion point process in (local time tau, duration lam):
/// (2 pi lam^3)^(-1/2) exp(-mu(tau)^2 lam / 2) * survival(tau).
pub fn excursion_density(
    mu: &DriftSpec,
    tau: f64,
    lam: f64,
    variant: SurvivalVariant,
) -> Result<f64> {
    if !(lam > 0.0) {
        return Err(Error::invalid(format!("lam must be positive, got {lam}")));
    }
    let m = mu.mu(tau);
    let duration_factor =
        (2.0 * std::f64::consts::PI * lam.powi(3)).sqrt().recip() * (-m * m * lam / 2.0).exp();
    Ok(duration_factor * escape_survival(mu, tau, variant))
}

/// Intensity, per unit local time, of excursions of a drift-mu reflected
/// path that reach level `l`: mu e^(mu l) / sinh(mu l), with the removable
/// singularity at mu = 0 evaluated as 1/l.
pub fn level_crossing_rate(mu_value: f64, l: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::invalid(format!("l must be positive, got {l}")));
    }
    if mu_value.abs() < 1e-12 {
        return Ok(1.0 / l);
    }
    // mu e^(mu l)/sinh(mu l) = 2 mu / (1 - e^(-2 mu l)), stable for large |mu l|.
    Ok(2.0 * mu_value / (-f64::exp_m1(-2.0 * mu_value * l)))
}

/// Classification of one replica at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathOutcome {
    /// Above the escape level with positive drift: local time has converged.
    Escaped,
    /// Touched the barrier within the final stretch; still accruing.
    AtBarrier,
    /// Neither escaped nor recently at the barrier.
    Ambiguous,
}

/// Result of the tau_infty Monte Carlo: the ECDF of terminal local time over
/// all replicas plus the outcome classification counts.
#[derive(Debug, Clone)]
pub struct TauInftyEstimate {
    pub ecdf: Ecdf,
    pub escaped: usize,
    pub at_barrier: usize,
    pub ambiguous: usize,
    pub n_paths: usize,
}

impl TauInftyEstimate {
    /// Fraction of replicas that did not certify escape. The escape
    /// certificate is deliberately conservative, so censored paths usually
    /// still carry converged local times; see [`unconverged_fraction`].
    ///
    /// [`unconverged_fraction`]: TauInftyEstimate::unconverged_fraction
    pub fn censored_fraction(&self) -> f64 {
        (self.at_barrier + self.ambiguous) as f64 / self.n_paths as f64
    }

    /// Fraction of replicas still accruing local time near the horizon;
    /// their terminal local times underestimate tau_infty.
    pub fn unconverged_fraction(&self) -> f64 {
        self.at_barrier as f64 / self.n_paths as f64
    }
}

/// Simulate the extended solve on Brownian drivers and collect terminal local
/// times as an estimate of the law of tau_infty. Replicas whose reflected
/// path exceeds `escape_level` with positive drift at the horizon are counted
/// as escaped; the rest are classified and reported, never guessed.
#[allow(clippy::too_many_arguments)]
pub fn estimate_tau_infty(
    mu: &DriftSpec,
    n_paths: usize,
    dt: f64,
    horizon: f64,
    escape_level: f64,
    epsilon: f64,
    rng: RngConfig,
) -> Result<TauInftyEstimate> {
    if n_paths == 0 {
        return Err(Error::invalid("n_paths must be positive"));
    }
    if !(dt > 0.0) || !(horizon >= dt) {
        return Err(Error::invalid("need dt > 0 and horizon >= dt"));
    }
    if !(escape_level > 0.0) {
        return Err(Error::invalid("escape_level must be positive"));
    }
    let n_steps = (horizon / dt).round() as usize;
    let barrier_window = 0.05 * horizon;
    let results: Vec<Result<(f64, PathOutcome)>> = map_replicas(n_paths, |idx| {
        let mut r = rng.replica(idx).rng();
        let sqrt_dt = dt.sqrt();
        let mut solver = ExtendedSolver::new(mu, epsilon, 1e6, dt, 0.0)?;
        let mut f = 0.0_f64;
        let mut last_contact = 0.0_f64;
        let barrier_tol = 1e-6;
        for _ in 0..n_steps {
            let z: f64 = StandardNormal.sample(&mut r);
            f += z * sqrt_dt;
            solver.step(f)?;
            if solver.reflected() <= barrier_tol {
                last_contact = solver.time();
            }
        }
        let l_end = solver.local_time();
        let outcome = if solver.reflected() > escape_level && mu.mu(l_end) > 0.0 {
            PathOutcome::Escaped
        } else if horizon - last_contact <= barrier_window {
            PathOutcome::AtBarrier
        } else {
            PathOutcome::Ambiguous
        };
        Ok((l_end, outcome))
    });
    let mut terminal = Vec::with_capacity(n_paths);
    let (mut escaped, mut at_barrier, mut ambiguous) = (0usize, 0usize, 0usize);
    for res in results {
        let (l_end, outcome) = res?;
        terminal.push(l_end);
        match outcome {
            PathOutcome::Escaped => escaped += 1,
            PathOutcome::AtBarrier => at_barrier += 1,
            PathOutcome::Ambiguous => ambiguous += 1,
        }
    }
    Ok(TauInftyEstimate {
        ecdf: Ecdf::new(terminal)?,
        escaped,
        at_barrier,
        ambiguous,
        n_paths,
    })
}
