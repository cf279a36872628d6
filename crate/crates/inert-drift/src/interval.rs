//! A Brownian particle in a moving interval of length `l` attached to an
//! inert pair: the particle reflects off both endpoints, and each unit of
//! boundary local time transfers +/- K of velocity between particle and
//! pair.
//!
//! Sign bookkeeping: the recorded velocity V = v0 + K(L0 - Ll) is the
//! particle's drift relative to the interval (+K per unit of lower-contact
//! local time), and the inert pair itself recoils, moving at -V. This is
//! the orientation in which the chain of contact states has upward slope
//! +K after a lower contact and switch rate a(v, l) = v e^{vl}/sinh(vl),
//! the rates its generator is written in. Wiring the pair to move at +V
//! instead makes the lower wall chase the particle and |V| run away.
//!
//! Reparameterized by total boundary local time, the velocity is a sawtooth
//! with slopes +/- K and Poisson switching; this module builds both the
//! trajectory-level simulator (projection Euler) and the exact event-driven
//! jump chain, the chain's generator and adjoint, its Gaussian stationary
//! density, and the rescaling that exhibits the Ornstein-Uhlenbeck limit.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::observables::level_crossing_rate;
use crate::path::{RngConfig, SampledPath};
use crate::stats::autocorrelation;

/// Parameters of the interval system.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntervalParams {
    /// Interval length.
    pub l: f64,
    /// Local-time-to-velocity transfer constant.
    pub k: f64,
    /// Initial particle offset inside [0, l].
    pub x0: f64,
    /// Initial inert velocity.
    pub v0: f64,
}

impl IntervalParams {
    fn validate(&self) -> Result<()> {
        if !(self.l > 0.0) || !(self.k > 0.0) {
            return Err(Error::invalid("need l > 0 and K > 0"));
        }
        if !(0.0 <= self.x0 && self.x0 <= self.l) {
            return Err(Error::invalid(format!(
                "x0 must lie in [0, l], got {}",
                self.x0
            )));
        }
        Ok(())
    }
}

/// Simulated interval-system trajectory on a uniform grid.
#[derive(Debug, Clone)]
pub struct IntervalTrajectory {
    pub t0: f64,
    pub dt: f64,
    /// Brownian particle position.
    pub x: Vec<f64>,
    /// Lower inert path; the upper one is y0 + l.
    pub y0: Vec<f64>,
    /// Inert velocity.
    pub v: Vec<f64>,
    /// Local time at the lower contact.
    pub l0: Vec<f64>,
    /// Local time at the upper contact.
    pub ll: Vec<f64>,
    /// The Brownian driver.
    pub driver: Vec<f64>,
    pub params: IntervalParams,
}

impl IntervalTrajectory {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// CSV with header `t,x,y0,v,l0,ll`.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "t,x,y0,v,l0,ll")?;
        for k in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                self.t0 + k as f64 * self.dt,
                self.x[k],
                self.y0[k],
                self.v[k],
                self.l0[k],
                self.ll[k]
            )?;
        }
        Ok(())
    }
}

/// One sample of the local-time-clock chain: clock tau, velocity, and the
/// last-visited-endpoint flag (j = 0: lower endpoint, slope +K; j = 1:
/// upper endpoint, slope -K).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VelocityChainState {
    pub tau: f64,
    pub v: f64,
    pub j: u8,
}

/// Write a chain as CSV `tau,v,j`.
pub fn write_chain_csv<W: std::io::Write>(
    chain: &[VelocityChainState],
    w: &mut W,
) -> std::io::Result<()> {
    writeln!(w, "tau,v,j")?;
    for s in chain {
        writeln!(w, "{},{},{}", s.tau, s.v, s.j)?;
    }
    Ok(())
}

struct IntervalState {
    x: f64,
    y0: f64,
    v: f64,
    l0: f64,
    ll: f64,
    b: f64,
}

/// Projection Euler core. Calls `record` after every step with the state and
/// the local-time increments of that step.
fn run_interval(
    params: IntervalParams,
    dt: f64,
    n_steps: usize,
    rng: RngConfig,
    mut record: impl FnMut(&IntervalState, f64, f64),
) -> Result<()> {
    params.validate()?;
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    let mut r = rng.rng();
    let sqrt_dt = dt.sqrt();
    let mut s = IntervalState {
        x: params.x0,
        y0: 0.0,
        v: params.v0,
        l0: 0.0,
        ll: 0.0,
        b: 0.0,
    };
    for _ in 0..n_steps {
        let z: f64 = StandardNormal.sample(&mut r);
        let db = z * sqrt_dt;
        // the pair recoils: its velocity is -V
        s.y0 -= s.v * dt;
        s.b += db;
        s.x += db;
        let mut dl0 = 0.0;
        let mut dll = 0.0;
        if s.x < s.y0 {
            dl0 = s.y0 - s.x;
            s.x = s.y0;
            s.l0 += dl0;
            s.v += params.k * dl0;
        } else if s.x > s.y0 + params.l {
            dll = s.x - (s.y0 + params.l);
            s.x = s.y0 + params.l;
            s.ll += dll;
            s.v -= params.k * dll;
        }
        record(&s, dl0, dll);
    }
    Ok(())
}

/// Simulate the interval system, recording the full trajectory.
pub fn simulate_interval(
    params: IntervalParams,
    dt: f64,
    horizon: f64,
    rng: RngConfig,
) -> Result<IntervalTrajectory> {
    let n_steps = (horizon / dt).round() as usize;
    let mut traj = IntervalTrajectory {
        t0: 0.0,
        dt,
        x: Vec::with_capacity(n_steps + 1),
        y0: Vec::with_capacity(n_steps + 1),
        v: Vec::with_capacity(n_steps + 1),
        l0: Vec::with_capacity(n_steps + 1),
        ll: Vec::with_capacity(n_steps + 1),
        driver: Vec::with_capacity(n_steps + 1),
        params,
    };
    traj.x.push(params.x0);
    traj.y0.push(0.0);
    traj.v.push(params.v0);
    traj.l0.push(0.0);
    traj.ll.push(0.0);
    traj.driver.push(0.0);
    run_interval(params, dt, n_steps, rng, |s, _, _| {
        traj.x.push(s.x);
        traj.y0.push(s.y0);
        traj.v.push(s.v);
        traj.l0.push(s.l0);
        traj.ll.push(s.ll);
        traj.driver.push(s.b);
    })?;
    Ok(traj)
}

/// Extract the local-time-clock chain from a trajectory: one state per
/// contact event, with tau = L0 + Ll after the contact.
pub fn velocity_chain(traj: &IntervalTrajectory) -> Vec<VelocityChainState> {
    let mut chain = Vec::new();
    for k in 1..traj.len() {
        let dl0 = traj.l0[k] - traj.l0[k - 1];
        let dll = traj.ll[k] - traj.ll[k - 1];
        if dl0 > 0.0 {
            chain.push(VelocityChainState {
                tau: traj.l0[k] + traj.ll[k],
                v: traj.v[k],
                j: 0,
            });
        } else if dll > 0.0 {
            chain.push(VelocityChainState {
                tau: traj.l0[k] + traj.ll[k],
                v: traj.v[k],
                j: 1,
            });
        }
    }
    chain
}

/// Streaming variant for long runs: simulate and keep only the contact chain.
pub fn simulate_interval_chain(
    params: IntervalParams,
    dt: f64,
    horizon: f64,
    rng: RngConfig,
) -> Result<Vec<VelocityChainState>> {
    let n_steps = (horizon / dt).round() as usize;
    let mut chain = Vec::new();
    run_interval(params, dt, n_steps, rng, |s, dl0, dll| {
        if dl0 > 0.0 {
            chain.push(VelocityChainState {
                tau: s.l0 + s.ll,
                v: s.v,
                j: 0,
            });
        } else if dll > 0.0 {
            chain.push(VelocityChainState {
                tau: s.l0 + s.ll,
                v: s.v,
                j: 1,
            });
        }
    })?;
    Ok(chain)
}

/// Excursion-crossing rates of the chain: from the lower endpoint (j = 0)
/// the velocity jumps at rate a(v, l); from the upper (j = 1) at b(v, l).
pub fn switch_rate_a(v: f64, l: f64) -> f64 {
    level_crossing_rate(v, l).expect("l > 0")
}

pub fn switch_rate_b(v: f64, l: f64) -> f64 {
    level_crossing_rate(-v, l).expect("l > 0")
}

/// Exact event-driven simulation of the chain (tilde V, J) by thinning.
/// In state j = 0 the velocity moves as v + K tau and switches with
/// instantaneous rate a(v, l); in state j = 1 it moves as v - K tau and
/// switches at rate b(v, l). Returned states start with (0, v0, j0) and then
/// record every switch.
pub fn simulate_velocity_chain(
    l: f64,
    k: f64,
    v0: f64,
    j0: u8,
    tau_horizon: f64,
    rng: RngConfig,
) -> Result<Vec<VelocityChainState>> {
    if !(l > 0.0) || !(k > 0.0) {
        return Err(Error::invalid("need l > 0 and K > 0"));
    }
    if !(tau_horizon > 0.0) {
        return Err(Error::invalid("tau_horizon must be positive"));
    }
    if j0 > 1 {
        return Err(Error::invalid("j0 must be 0 or 1"));
    }
    let mut r = rng.rng();
    let mut tau = 0.0;
    let mut v = v0;
    let mut j = j0;
    let mut chain = vec![VelocityChainState { tau, v, j }];
    // Rates are monotone in v (increasing for a, decreasing for b), so the
    // rate over a lookahead window is bounded by its value at the window end.
    while tau < tau_horizon {
        let rate_now = if j == 0 {
            switch_rate_a(v, l)
        } else {
            switch_rate_b(v, l)
        };
        let window = (1.0 / (2.0 * rate_now.max(1e-12))).min(0.1);
        let bound = if j == 0 {
            switch_rate_a(v + k * window, l)
        } else {
            switch_rate_b(v - k * window, l)
        };
        let u: f64 = r.random();
        let wait = -u.ln() / bound;
        if wait > window {
            tau += window;
            v += if j == 0 { k * window } else { -k * window };
            continue;
        }
        tau += wait;
        v += if j == 0 { k * wait } else { -k * wait };
        let actual = if j == 0 {
            switch_rate_a(v, l)
        } else {
            switch_rate_b(v, l)
        };
        let accept: f64 = r.random();
        if accept * bound <= actual {
            j = 1 - j;
            chain.push(VelocityChainState { tau, v, j });
        }
    }
    Ok(chain)
}

fn segments(chain: &[VelocityChainState]) -> impl Iterator<Item = (f64, f64, f64, u8)> + '_ {
    // (dtau, v_start, v_end, j) for each nondegenerate segment
    chain.windows(2).filter_map(|w| {
        let d = w[1].tau - w[0].tau;
        if d > 0.0 {
            Some((d, w[0].v, w[1].v, w[0].j))
        } else {
            None
        }
    })
}

/// Fraction of local time spent in j = 0.
pub fn chain_occupancy_j0(chain: &[VelocityChainState]) -> Result<f64> {
    let mut total = 0.0;
    let mut in0 = 0.0;
    for (d, _, _, j) in segments(chain) {
        total += d;
        if j == 0 {
            in0 += d;
        }
    }
    if total == 0.0 {
        return Err(Error::InsufficientData("chain has no extent in tau".into()));
    }
    Ok(in0 / total)
}

/// Local-time-weighted variance of the sawtooth velocity (linear between
/// chain samples), computed segment-exactly around the weighted mean.
pub fn chain_stationary_variance(chain: &[VelocityChainState]) -> Result<f64> {
    let mut total = 0.0;
    let mut mean_acc = 0.0;
    for (d, va, vb, _) in segments(chain) {
        total += d;
        mean_acc += 0.5 * (va + vb) * d;
    }
    if total == 0.0 {
        return Err(Error::InsufficientData("chain has no extent in tau".into()));
    }
    let mean = mean_acc / total;
    let mut var_acc = 0.0;
    for (d, va, vb, _) in segments(chain) {
        let (a, b) = (va - mean, vb - mean);
        // integral of a linear ramp squared
        var_acc += d * (a * a + a * b + b * b) / 3.0;
    }
    Ok(var_acc / total)
}

/// Velocity samples at n uniformly spaced local times; the sawtooth is
/// linearly interpolated between chain states.
pub fn chain_time_samples(chain: &[VelocityChainState], n: usize) -> Result<Vec<f64>> {
    if chain.len() < 2 || n == 0 {
        return Err(Error::InsufficientData(
            "need at least two chain states and one sample".into(),
        ));
    }
    let tau_start = chain[0].tau;
    let tau_end = chain[chain.len() - 1].tau;
    if !(tau_end > tau_start) {
        return Err(Error::InsufficientData("chain has no extent in tau".into()));
    }
    let step = (tau_end - tau_start) / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for i in 0..n {
        let t = tau_start + (i as f64 + 0.5) * step;
        while seg + 2 < chain.len() && chain[seg + 1].tau <= t {
            seg += 1;
        }
        let (a, b) = (&chain[seg], &chain[seg + 1]);
        let w = if b.tau > a.tau {
            (t - a.tau) / (b.tau - a.tau)
        } else {
            0.0
        };
        out.push(a.v + w.clamp(0.0, 1.0) * (b.v - a.v));
    }
    Ok(out)
}

/// A function of (v, j) with an analytic v-derivative, the test-function
/// format accepted by the generator and its adjoint.
#[derive(Clone)]
pub struct StateFunction {
    pub f: std::sync::Arc<dyn Fn(f64, u8) -> f64 + Send + Sync>,
    pub df_dv: std::sync::Arc<dyn Fn(f64, u8) -> f64 + Send + Sync>,
}

impl StateFunction {
    pub fn new(
        f: impl Fn(f64, u8) -> f64 + Send + Sync + 'static,
        df_dv: impl Fn(f64, u8) -> f64 + Send + Sync + 'static,
    ) -> Self {
        StateFunction {
            f: std::sync::Arc::new(f),
            df_dv: std::sync::Arc::new(df_dv),
        }
    }

    pub fn eval(&self, v: f64, j: u8) -> f64 {
        (self.f)(v, j)
    }

    pub fn deriv(&self, v: f64, j: u8) -> f64 {
        (self.df_dv)(v, j)
    }
}

/// Generator of the chain:
/// A f(v,0) =  K f_v(v,0) + a(v,l) [f(v,1) - f(v,0)],
/// A f(v,1) = -K f_v(v,1) + b(v,l) [f(v,0) - f(v,1)].
pub fn apply_generator(f: &StateFunction, v: f64, j: u8, l: f64, k: f64) -> f64 {
    match j {
        0 => k * f.deriv(v, 0) + switch_rate_a(v, l) * (f.eval(v, 1) - f.eval(v, 0)),
        _ => -k * f.deriv(v, 1) + switch_rate_b(v, l) * (f.eval(v, 0) - f.eval(v, 1)),
    }
}

/// Formal adjoint of the generator:
/// A* g(v,1) =  K g_v(v,1) + a(v,l) g(v,0) - b(v,l) g(v,1),
/// A* g(v,0) = -K g_v(v,0) - a(v,l) g(v,0) + b(v,l) g(v,1).
pub fn apply_adjoint(g: &StateFunction, v: f64, j: u8, l: f64, k: f64) -> f64 {
    let a = switch_rate_a(v, l);
    let b = switch_rate_b(v, l);
    match j {
        1 => k * g.deriv(v, 1) + a * g.eval(v, 0) - b * g.eval(v, 1),
        _ => -k * g.deriv(v, 0) - a * g.eval(v, 0) + b * g.eval(v, 1),
    }
}

/// Stationary density of the chain per (v, j) pair:
/// g(v, j) = exp(-v^2/K) / (2 sqrt(pi K)).
pub fn stationary_density(v: f64, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::invalid(format!("K must be positive, got {k}")));
    }
    Ok((-v * v / k).exp() / (2.0 * (std::f64::consts::PI * k).sqrt()))
}

/// The stationary density as a [`StateFunction`] (same in both j states).
pub fn stationary_state_function(k: f64) -> StateFunction {
    StateFunction::new(
        move |v, _| (-v * v / k).exp() / (2.0 * (std::f64::consts::PI * k).sqrt()),
        move |v, _| {
            (-2.0 * v / k) * (-v * v / k).exp() / (2.0 * (std::f64::consts::PI * k).sqrt())
        },
    )
}

/// Result of the Ornstein-Uhlenbeck rescaling of a K=1 chain.
#[derive(Debug, Clone)]
pub struct OuRescaled {
    /// The velocity at down-to-up switch times, interpolated onto a uniform
    /// grid in the restored clock s = l * tau (grid step l^2).
    pub path: SampledPath,
    pub stationary_variance: f64,
    /// (lag, sample autocorrelation) pairs.
    pub autocorrelation: Vec<(f64, f64)>,
    /// Number of down-to-up switches used.
    pub n_switches: usize,
}

/// Interpolate the chain's velocity at its down-to-up switch times onto the
/// restored clock s = l * tau and compare against the OU limit
/// dX = dB - X dt (stationary variance 1/2, autocorrelation e^{-h}).
///
/// The chain must come from the K = 1 normalization.
pub fn rescale_to_ou(
    chain: &[VelocityChainState],
    l: f64,
    lags: &[f64],
) -> Result<OuRescaled> {
    if !(l > 0.0) {
        return Err(Error::invalid("l must be positive"));
    }
    // Down-to-up switch times: states that open an upward (j = 0) segment.
    let switches: Vec<(f64, f64)> = chain
        .iter()
        .filter(|s| s.j == 0)
        .map(|s| (l * s.tau, s.v))
        .collect();
    if switches.len() < 16 {
        return Err(Error::InsufficientData(format!(
            "only {} down-to-up switches; need at least 16",
            switches.len()
        )));
    }
    let ds = l * l;
    let s0 = switches[0].0;
    let s_end = switches[switches.len() - 1].0;
    let n_grid = ((s_end - s0) / ds).floor() as usize;
    if n_grid < 4 {
        return Err(Error::InsufficientData(
            "rescaled chain spans fewer than 4 grid steps".into(),
        ));
    }
    let mut vals = Vec::with_capacity(n_grid + 1);
    let mut seg = 0usize;
    for i in 0..=n_grid {
        let s = s0 + i as f64 * ds;
        while seg + 2 < switches.len() && switches[seg + 1].0 <= s {
            seg += 1;
        }
        let (a, b) = (switches[seg], switches[seg + 1]);
        let w = if b.0 > a.0 { (s - a.0) / (b.0 - a.0) } else { 0.0 };
        vals.push(a.1 + w.clamp(0.0, 1.0) * (b.1 - a.1));
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let path = SampledPath::new(0.0, ds, vals)?;
    let ac = autocorrelation(&path, lags)?;
    Ok(OuRescaled {
        path,
        stationary_variance: var,
        autocorrelation: ac,
        n_switches: switches.len(),
    })
}
