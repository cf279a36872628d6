//! Two independent Brownian particles separated by an inert particle:
//! X1 <= Y <= X2, with X1 = B1 - L1, X2 = x + B2 + L2, V = v + K(L1 - L2),
//! Y = y + int V. Includes the diffusive scaling transport, the chain of
//! velocity zeros, the exp(-l^2) law of the total local time, and the
//! Bessel(2) reference density for the K -> infinity gap limit.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numeric::bessel_i0_scaled;
use crate::path::RngConfig;

/// Parameters: initial gap x > 0, inert start y in [0, x], initial velocity
/// v, transfer constant K > 0.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ThreeParams {
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub k: f64,
}

impl ThreeParams {
    fn validate(&self) -> Result<()> {
        if !(self.x > 0.0) {
            return Err(Error::invalid("initial gap x must be positive"));
        }
        if !(0.0 <= self.y && self.y <= self.x) {
            return Err(Error::invalid(format!(
                "inert start y must lie in [0, x], got {}",
                self.y
            )));
        }
        if !(self.k > 0.0) {
            return Err(Error::invalid("K must be positive"));
        }
        Ok(())
    }
}

/// Discretized collision: the gap hit zero, an artifact of the scheme
/// (the continuous system never collides). The system is frozen from here.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Collision {
    pub index: usize,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct ThreeTrajectory {
    pub t0: f64,
    pub dt: f64,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    /// Stored drivers (B1, B2), needed by the scaling transport.
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub params: ThreeParams,
    pub collision: Option<Collision>,
}

impl ThreeTrajectory {
    pub fn len(&self) -> usize {
        self.x1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }

    pub fn gap(&self, k: usize) -> f64 {
        self.x2[k] - self.x1[k]
    }

    /// CSV with header `t,x1,x2,y,v,l1,l2`.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "t,x1,x2,y,v,l1,l2")?;
        for k in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                self.t0 + k as f64 * self.dt,
                self.x1[k],
                self.x2[k],
                self.y[k],
                self.v[k],
                self.l1[k],
                self.l2[k]
            )?;
        }
        Ok(())
    }
}

struct ThreeState {
    x1: f64,
    x2: f64,
    y: f64,
    v: f64,
    l1: f64,
    l2: f64,
    frozen: bool,
}

impl ThreeState {
    fn new(p: ThreeParams) -> Self {
        ThreeState {
            x1: 0.0,
            x2: p.x,
            y: p.y,
            v: p.v,
            l1: 0.0,
            l2: 0.0,
            frozen: false,
        }
    }

    /// One projection Euler step; returns true if this step collided.
    fn step(&mut self, p: ThreeParams, dt: f64, db1: f64, db2: f64) -> bool {
        if self.frozen {
            return false;
        }
        self.y += self.v * dt;
        self.x1 += db1;
        self.x2 += db2;
        let mut dl1 = 0.0;
        let mut dl2 = 0.0;
        if self.x1 > self.y {
            dl1 = self.x1 - self.y;
            self.x1 = self.y;
            self.l1 += dl1;
        }
        if self.x2 < self.y {
            dl2 = self.y - self.x2;
            self.x2 = self.y;
            self.l2 += dl2;
        }
        if dl1 > 0.0 || dl2 > 0.0 {
            self.v += p.k * (dl1 - dl2);
        }
        if dl1 > 0.0 && dl2 > 0.0 {
            self.frozen = true;
            return true;
        }
        false
    }
}

/// Simulate with drivers drawn from the replica stream.
pub fn simulate_three(
    params: ThreeParams,
    dt: f64,
    horizon: f64,
    rng: RngConfig,
) -> Result<ThreeTrajectory> {
    params.validate()?;
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    let n_steps = (horizon / dt).round() as usize;
    let mut r = rng.rng();
    let sqrt_dt = dt.sqrt();
    let mut b1 = Vec::with_capacity(n_steps + 1);
    let mut b2 = Vec::with_capacity(n_steps + 1);
    b1.push(0.0);
    b2.push(0.0);
    for _ in 0..n_steps {
        let z1: f64 = StandardNormal.sample(&mut r);
        let z2: f64 = StandardNormal.sample(&mut r);
        b1.push(b1.last().unwrap() + z1 * sqrt_dt);
        b2.push(b2.last().unwrap() + z2 * sqrt_dt);
    }
    simulate_three_with_drivers(params, dt, &b1, &b2)
}

/// Deterministic core: run the scheme over stored driver paths.
pub fn simulate_three_with_drivers(
    params: ThreeParams,
    dt: f64,
    b1: &[f64],
    b2: &[f64],
) -> Result<ThreeTrajectory> {
    params.validate()?;
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    if b1.len() != b2.len() || b1.is_empty() {
        return Err(Error::GridMismatch(
            "drivers must share one nonempty grid".into(),
        ));
    }
    let n = b1.len();
    let mut s = ThreeState::new(params);
    let mut traj = ThreeTrajectory {
        t0: 0.0,
        dt,
        x1: Vec::with_capacity(n),
        x2: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        l1: Vec::with_capacity(n),
        l2: Vec::with_capacity(n),
        b1: b1.to_vec(),
        b2: b2.to_vec(),
        params,
        collision: None,
    };
    let push = |s: &ThreeState, traj: &mut ThreeTrajectory| {
        traj.x1.push(s.x1);
        traj.x2.push(s.x2);
        traj.y.push(s.y);
        traj.v.push(s.v);
        traj.l1.push(s.l1);
        traj.l2.push(s.l2);
    };
    push(&s, &mut traj);
    for k in 1..n {
        let collided = s.step(params, dt, b1[k] - b1[k - 1], b2[k] - b2[k - 1]);
        push(&s, &mut traj);
        if collided {
            traj.collision = Some(Collision {
                index: k,
                time: k as f64 * dt,
            });
        }
    }
    Ok(traj)
}

/// Terminal summary of one replica, for large Monte Carlo sweeps.
#[derive(Debug, Clone, Copy)]
pub struct TerminalGap {
    pub gap: f64,
    pub collided: bool,
}

/// Streaming simulation keeping only the terminal gap and collision flag.
pub fn simulate_three_terminal(
    params: ThreeParams,
    dt: f64,
    horizon: f64,
    rng: RngConfig,
) -> Result<TerminalGap> {
    params.validate()?;
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    let n_steps = (horizon / dt).round() as usize;
    let mut r = rng.rng();
    let sqrt_dt = dt.sqrt();
    let mut s = ThreeState::new(params);
    let mut collided = false;
    for _ in 0..n_steps {
        let z1: f64 = StandardNormal.sample(&mut r);
        let z2: f64 = StandardNormal.sample(&mut r);
        collided |= s.step(params, dt, z1 * sqrt_dt, z2 * sqrt_dt);
    }
    Ok(TerminalGap {
        gap: s.x2 - s.x1,
        collided,
    })
}

/// Diffusive transport: rerun the scheme with drivers eps*B(t/eps^2) on the
/// grid eps^2*dt and parameters (eps*x, eps*y, v/eps, K/eps^2). Node for
/// node this reproduces eps times the original output; for eps a power of
/// two the reproduction is exact to machine precision.
pub fn scaling_transport(traj: &ThreeTrajectory, eps: f64) -> Result<ThreeTrajectory> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    let p = traj.params;
    let scaled = ThreeParams {
        x: eps * p.x,
        y: eps * p.y,
        v: p.v / eps,
        k: p.k / (eps * eps),
    };
    let b1: Vec<f64> = traj.b1.iter().map(|&b| eps * b).collect();
    let b2: Vec<f64> = traj.b2.iter().map(|&b| eps * b).collect();
    simulate_three_with_drivers(scaled, eps * eps * traj.dt, &b1, &b2)
}

/// Chain of velocity zeros: (gap, T_j) at T_0 = 0 and at every later time
/// the velocity returns to zero. Zeros between nodes are located by linear
/// interpolation; zeros sitting on an exact V = 0 plateau collapse to the
/// plateau's right endpoint (ties rightward); a plateau running into the
/// horizon is censored.
pub fn gap_chain(traj: &ThreeTrajectory) -> Vec<(f64, f64)> {
    let n = traj.len();
    let gap_at = |t: f64| -> f64 {
        let pos = (t - traj.t0) / traj.dt;
        let k = (pos.floor() as usize).min(n - 1);
        if k + 1 >= n {
            return traj.gap(n - 1);
        }
        let w = pos - k as f64;
        traj.gap(k) * (1.0 - w) + traj.gap(k + 1) * w
    };
    let mut events = vec![(traj.gap(0), traj.t0)];
    let mut k = 1;
    while k < n {
        let v = traj.v[k];
        if v == 0.0 {
            // extend the plateau to its right end
            let mut end = k;
            while end + 1 < n && traj.v[end + 1] == 0.0 {
                end += 1;
            }
            let initial = k == 1 && traj.v[0] == 0.0; // covered by T_0
            let censored = end + 1 >= n;
            if !initial && !censored {
                let t = traj.t0 + end as f64 * traj.dt;
                events.push((gap_at(t), t));
            }
            k = end + 1;
            continue;
        }
        let prev = traj.v[k - 1];
        if prev != 0.0 && (prev > 0.0) != (v > 0.0) {
            // sign change inside the cell
            let w = prev / (prev - v);
            let t = traj.t0 + ((k - 1) as f64 + w) * traj.dt;
            events.push((gap_at(t), t));
        }
        k += 1;
    }
    events
}

/// P(L_infinity > l) = exp(-l^2) for the single-particle system with
/// mu(l) = l (the K = 1 normalization).
pub fn linf_law(l: f64) -> f64 {
    if l <= 0.0 {
        return 1.0;
    }
    (-l * l).exp()
}

/// Transition density of the 2-dimensional Bessel process:
/// p_t(x0, y) = (y/t) exp(-(x0^2+y^2)/(2t)) I0(x0 y / t).
pub fn bessel2_reference(x0: f64, t: f64, y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("t must be positive, got {t}")));
    }
    if x0 < 0.0 || y < 0.0 {
        return Err(Error::invalid("x0 and y must be nonnegative"));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let z = x0 * y / t;
    // exp(-(x0^2+y^2)/(2t)) I0(z) = exp(-(x0-y)^2/(2t)) * (e^{-z} I0(z))
    let d = x0 - y;
    Ok(y / t * (-d * d / (2.0 * t)).exp() * bessel_i0_scaled(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{adaptive_simpson, simpson};
    use crate::replicas::map_replicas;

    fn params(x: f64, y: f64, v: f64, k: f64) -> ThreeParams {
        ThreeParams { x, y, v, k }
    }

    #[test]
    fn rejects_invalid_ordering() {
        assert!(simulate_three(params(1.0, 1.5, 0.0, 1.0), 1e-3, 0.1, RngConfig::new(0)).is_err());
        assert!(simulate_three(params(0.0, 0.0, 0.0, 1.0), 1e-3, 0.1, RngConfig::new(0)).is_err());
        assert!(simulate_three(params(1.0, -0.1, 0.0, 1.0), 1e-3, 0.1, RngConfig::new(0)).is_err());
    }

    #[test]
    fn no_contact_short_run() {
        let p = params(1.0, 0.5, 0.0, 1.0);
        let traj = simulate_three(p, 1e-4, 0.01, RngConfig::new(41)).unwrap();
        assert!(traj.l1.iter().all(|&v| v == 0.0));
        assert!(traj.l2.iter().all(|&v| v == 0.0));
        assert!(traj.y.iter().all(|&v| v == 0.5));
        assert!(traj.v.iter().all(|&v| v == 0.0));
        assert!(traj.collision.is_none());
    }

    #[test]
    fn trajectory_invariants() {
        let p = params(0.5, 0.2, 0.3, 2.0);
        let traj = simulate_three(p, 1e-4, 3.0, RngConfig::new(42)).unwrap();
        let tol = 1e-9;
        assert!(traj.collision.is_none());
        let mut y_int = p.y; // reconstruction of y by the same Euler sum
        for k in 0..traj.len() {
            assert!(traj.x1[k] <= traj.y[k] + tol);
            assert!(traj.y[k] <= traj.x2[k] + tol);
            // X1 = B1 - L1, X2 = x + B2 + L2
            assert!((traj.x1[k] - (traj.b1[k] - traj.l1[k])).abs() < 1e-9);
            assert!((traj.x2[k] - (p.x + traj.b2[k] + traj.l2[k])).abs() < 1e-9);
            // V = v + K(L1 - L2)
            assert!(
                (traj.v[k] - (p.v + p.k * (traj.l1[k] - traj.l2[k]))).abs() < 1e-9
            );
            if k > 0 {
                y_int += traj.v[k - 1] * traj.dt;
                assert!((traj.y[k] - y_int).abs() < 1e-9);
                assert!(traj.l1[k] >= traj.l1[k - 1]);
                assert!(traj.l2[k] >= traj.l2[k - 1]);
                if traj.l1[k] > traj.l1[k - 1] {
                    assert!((traj.x1[k] - traj.y[k]).abs() < 1e-12);
                }
                if traj.l2[k] > traj.l2[k - 1] {
                    assert!((traj.x2[k] - traj.y[k]).abs() < 1e-12);
                }
            }
        }
        assert!(*traj.l1.last().unwrap() > 0.0 || *traj.l2.last().unwrap() > 0.0);
    }

    #[test]
    fn scaling_transport_identity_at_eps_one() {
        let p = params(1.0, 0.0, 0.0, 1.0);
        let traj = simulate_three(p, 1e-3, 1.0, RngConfig::new(43)).unwrap();
        let t2 = scaling_transport(&traj, 1.0).unwrap();
        assert_eq!(traj.x1, t2.x1);
        assert_eq!(traj.x2, t2.x2);
        assert_eq!(traj.v, t2.v);
    }

    #[test]
    fn scaling_transport_power_of_two_is_exact() {
        let p = params(1.0, 0.0, 0.0, 1.0);
        let traj = simulate_three(p, 1e-3, 2.0, RngConfig::new(44)).unwrap();
        for &eps in &[0.5, 2.0] {
            let scaled = scaling_transport(&traj, eps).unwrap();
            let mut worst = 0.0_f64;
            for k in 0..traj.len() {
                worst = worst.max((scaled.x1[k] - eps * traj.x1[k]).abs());
                worst = worst.max((scaled.x2[k] - eps * traj.x2[k]).abs());
                worst = worst.max((scaled.y[k] - eps * traj.y[k]).abs());
                worst = worst.max((scaled.l1[k] - eps * traj.l1[k]).abs());
                worst = worst.max((scaled.l2[k] - eps * traj.l2[k]).abs());
                worst = worst.max((scaled.v[k] - traj.v[k] / eps).abs());
            }
            assert!(worst < 1e-12, "eps = {}: worst deviation {}", eps, worst);
        }
    }

    #[test]
    fn gap_chain_no_contact_single_entry() {
        let p = params(1.0, 0.5, 0.0, 1.0);
        let traj = simulate_three(p, 1e-4, 0.01, RngConfig::new(45)).unwrap();
        let chain = gap_chain(&traj);
        assert_eq!(chain.len(), 1);
        assert_eq!(chain[0], (1.0, 0.0));
    }

    #[test]
    fn gap_chain_zeros_require_both_sided_contact() {
        let p = params(0.4, 0.2, 0.0, 1.0);
        let traj = simulate_three(p, 1e-4, 4.0, RngConfig::new(40)).unwrap();
        let chain = gap_chain(&traj);
        assert!(chain.len() >= 2, "expected at least one velocity zero");
        // between consecutive events both local times must have increased
        let mut prev_t = 0.0;
        for &(gap, t) in &chain[1..] {
            assert!(gap > 0.0);
            assert!(t > prev_t);
            let ki = (prev_t / traj.dt).ceil() as usize;
            let kj = ((t / traj.dt).floor() as usize).min(traj.len() - 1);
            assert!(
                traj.l1[kj] > traj.l1[ki] && traj.l2[kj] > traj.l2[ki],
                "V cannot return to zero without both-sided contact"
            );
            prev_t = t;
        }
    }

    #[test]
    fn collision_frequency_decreases_with_dt() {
        // tight initial gap at coarse dt makes discrete collisions common
        let p = params(0.2, 0.1, 0.0, 1.0);
        let count = |dt: f64, seed: u64| -> usize {
            map_replicas(4000, |i| {
                simulate_three_terminal(p, dt, 1.0, RngConfig::new(seed).replica(i))
                    .unwrap()
                    .collided as usize
            })
            .iter()
            .sum()
        };
        let coarse = count(0.01, 47);
        let fine = count(0.0025, 48);
        assert!(coarse > 20, "want a collision-prone regime, got {}", coarse);
        assert!(fine < coarse, "collisions {} !< {}", fine, coarse);
    }

    #[test]
    fn mean_gap_grows_over_contacts() {
        // E(X2 - X1 - x) = 2 E L1 > 0 once contacts happen.
        let p = params(0.3, 0.15, 0.0, 1.0);
        let gaps: Vec<f64> = map_replicas(3000, |i| {
            simulate_three_terminal(p, 1e-3, 1.0, RngConfig::new(49).replica(i))
                .unwrap()
                .gap
        });
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        assert!(mean > p.x, "mean terminal gap {} should exceed {}", mean, p.x);
    }

    #[test]
    fn linf_law_values() {
        assert_eq!(linf_law(0.0), 1.0);
        assert!((linf_law(1.0) - (-1.0_f64).exp()).abs() < 1e-15);
        assert!((linf_law(1.0) - 0.367_879_441).abs() < 1e-9);
    }

    #[test]
    fn bessel2_at_origin_start() {
        // x0 = 0: density (y/t) e^{-y^2/(2t)}; at t=1, y=1 -> e^{-1/2}.
        let d = bessel2_reference(0.0, 1.0, 1.0).unwrap();
        assert!((d - (-0.5_f64).exp()).abs() < 1e-12);
        assert!((d - 0.606_530_659).abs() < 1e-9);
        assert!(bessel2_reference(1.0, 0.0, 1.0).is_err());
        assert_eq!(bessel2_reference(1.0, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn bessel2_normalizes() {
        let total = adaptive_simpson(
            |y| bessel2_reference(1.0, 1.0, y).unwrap(),
            0.0,
            12.0,
            1e-10,
        );
        assert!((total - 1.0).abs() < 1e-8, "mass {}", total);
        // large-argument branch too
        let total = simpson(|y| bessel2_reference(30.0, 0.01, y).unwrap(), 28.0, 32.0, 20_000);
        assert!((total - 1.0).abs() < 1e-6, "mass {}", total);
    }
}
