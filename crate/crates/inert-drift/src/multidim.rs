//! The extended Skorohod problem in R^d: x_t = w_t + int_0^t L_s ds + L_t,
//! constrained to the region above the graph of a function, with normal
//! pushing. Between the threshold times at which |L| crosses n*eps the drift
//! velocity is frozen at L's value there, mirroring the one-dimensional
//! epsilon-construction; inside a grid cell the solver slides along the
//! boundary and locates hits and thresholds by interpolation, so on a flat
//! boundary it reproduces the one-dimensional solver.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::path::SampledPath;
use crate::stats::Report;

/// The region above the graph of f: D = { x in R^d : x^d > f(x^1..x^{d-1}) },
/// with inward normal n = (-grad f, 1)/|(-grad f, 1)|. The working-window
/// assumptions |f| < 1 - alpha and n^d > alpha are checked on visited points.
#[derive(Clone)]
pub struct GraphDomain {
    dim: usize,
    alpha: f64,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    grad: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    label: String,
}

impl std::fmt::Debug for GraphDomain {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("GraphDomain")
            .field("dim", &self.dim)
            .field("alpha", &self.alpha)
            .field("label", &self.label)
            .finish()
    }
}

impl GraphDomain {
    pub fn new(
        dim: usize,
        alpha: f64,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        label: impl Into<String>,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("graph domains need dimension >= 2"));
        }
        if !(0.0 < alpha && alpha < 1.0) {
            return Err(Error::invalid("alpha must lie in (0, 1)"));
        }
        Ok(GraphDomain {
            dim,
            alpha,
            f: Arc::new(f),
            grad: Arc::new(grad),
            label: label.into(),
        })
    }

    /// f = 0: the upper half-space.
    pub fn half_space(dim: usize, alpha: f64) -> Self {
        let d = dim.max(2);
        GraphDomain::new(d, alpha, |_| 0.0, move |u| vec![0.0; u.len()], "half-space").unwrap()
    }

    /// f(u) = slopes . u, a tilted hyperplane through the origin.
    pub fn tilted_plane(slopes: Vec<f64>, alpha: f64) -> Result<Self> {
        let dim = slopes.len() + 1;
        let g = slopes.clone();
        GraphDomain::new(
            dim,
            alpha,
            move |u| u.iter().zip(&slopes).map(|(a, b)| a * b).sum(),
            move |_| g.clone(),
            "tilted-plane",
        )
    }

    /// f(u) = c |u|^2, a curved bowl floor.
    pub fn parabolic(dim: usize, c: f64, alpha: f64) -> Result<Self> {
        GraphDomain::new(
            dim,
            alpha,
            move |u| c * u.iter().map(|a| a * a).sum::<f64>(),
            move |u| u.iter().map(|a| 2.0 * c * a).collect(),
            "parabolic",
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn f(&self, u: &[f64]) -> f64 {
        (self.f)(u)
    }

    pub fn grad(&self, u: &[f64]) -> Vec<f64> {
        (self.grad)(u)
    }

    /// Signed clearance above the graph: x^d - f(x~); >= 0 inside the closure.
    pub fn clearance(&self, x: &[f64]) -> f64 {
        x[self.dim - 1] - self.f(&x[..self.dim - 1])
    }

    /// Inward unit normal at the boundary point above `u`.
    pub fn normal_at(&self, u: &[f64]) -> Vec<f64> {
        let g = self.grad(u);
        let norm = (1.0 + g.iter().map(|a| a * a).sum::<f64>()).sqrt();
        let mut n: Vec<f64> = g.iter().map(|a| -a / norm).collect();
        n.push(1.0 / norm);
        n
    }

    /// Working-window assumptions at a visited horizontal location.
    pub fn check_window(&self, u: &[f64]) -> Result<()> {
        let fv = self.f(u);
        if !(fv.abs() < 1.0 - self.alpha) {
            return Err(Error::DomainAssumption(format!(
                "|f| = {} >= 1 - alpha = {} at a visited point",
                fv.abs(),
                1.0 - self.alpha
            )));
        }
        let nd = *self.normal_at(u).last().unwrap();
        if !(nd > self.alpha) {
            return Err(Error::DomainAssumption(format!(
                "normal's vertical component {} <= alpha = {} at a visited point",
                nd, self.alpha
            )));
        }
        Ok(())
    }
}

/// A d-dimensional path on a uniform grid, row-major node storage.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPath {
    t0: f64,
    dt: f64,
    dim: usize,
    data: Vec<f64>,
}

impl MultiPath {
    pub fn new(t0: f64, dt: f64, dim: usize, data: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || dim == 0 || data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::invalid("bad multipath layout"));
        }
        Ok(MultiPath { t0, dt, dim, data })
    }

    pub fn from_coords(coords: &[SampledPath]) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("need at least one coordinate"));
        }
        let n = coords[0].len();
        let dt = coords[0].dt();
        let t0 = coords[0].t0();
        if coords.iter().any(|c| !c.same_grid(&coords[0])) {
            return Err(Error::GridMismatch("coordinates on different grids".into()));
        }
        let dim = coords.len();
        let mut data = Vec::with_capacity(n * dim);
        for k in 0..n {
            for c in coords {
                data.push(c.value(k));
            }
        }
        MultiPath::new(t0, dt, dim, data)
    }

    pub fn zeros_like(&self) -> MultiPath {
        MultiPath {
            t0: self.t0,
            dt: self.dt,
            dim: self.dim,
            data: vec![0.0; self.data.len()],
        }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn set_node(&mut self, k: usize, v: &[f64]) {
        self.data[k * self.dim..(k + 1) * self.dim].copy_from_slice(v);
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Coordinate `c` as a scalar path.
    pub fn coord(&self, c: usize) -> SampledPath {
        let vals: Vec<f64> = (0..self.len()).map(|k| self.node(k)[c]).collect();
        SampledPath::new(self.t0, self.dt, vals).unwrap()
    }
}

/// Solution of the d-dimensional extended problem on the driver's grid.
#[derive(Debug, Clone)]
pub struct ReflectedSolutionNd {
    pub w: MultiPath,
    pub x: MultiPath,
    pub l: MultiPath,
    /// Drift integral int_0^t L_s ds (left-frozen within epsilon levels).
    pub i: MultiPath,
    /// Scalar path of the total variation |L|_t.
    pub total_variation: SampledPath,
    pub epsilon: f64,
}

impl ReflectedSolutionNd {
    /// CSV `t,x_1..x_d,l_1..l_d,abs_l`.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        let d = self.x.dim();
        let mut header = String::from("t");
        for c in 1..=d {
            header.push_str(&format!(",x_{c}"));
        }
        for c in 1..=d {
            header.push_str(&format!(",l_{c}"));
        }
        header.push_str(",abs_l");
        writeln!(w, "{header}")?;
        for k in 0..self.x.len() {
            let mut line = format!("{}", self.x.time(k));
            for &v in self.x.node(k) {
                line.push_str(&format!(",{v}"));
            }
            for &v in self.l.node(k) {
                line.push_str(&format!(",{v}"));
            }
            line.push_str(&format!(",{}", self.total_variation.value(k)));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Nearest boundary point parameter for `p` (Gauss-Newton on the graph
/// parameterization, Sherman-Morrison solve, backtracking damping).
fn nearest_boundary_param(p: &[f64], domain: &GraphDomain) -> Result<Vec<f64>> {
    let d = domain.dim();
    let (pt, pd) = (&p[..d - 1], p[d - 1]);
    let mut u = pt.to_vec();
    let scale = 1.0 + norm(p);
    let objective = |u: &[f64]| {
        let df = domain.f(u) - pd;
        let mut s = df * df;
        for c in 0..d - 1 {
            s += (u[c] - pt[c]) * (u[c] - pt[c]);
        }
        0.5 * s
    };
    let mut fu = objective(&u);
    for _ in 0..50 {
        let g = domain.grad(&u);
        let df = domain.f(&u) - pd;
        let mut grad: Vec<f64> = (0..d - 1).map(|c| u[c] - pt[c] + df * g[c]).collect();
        let gn = norm(&grad);
        if gn <= 1e-12 * scale {
            return Ok(u);
        }
        // Gauss-Newton step with H = I + g g^T via Sherman-Morrison.
        let gg = dot(&g, &g);
        let gd = dot(&g, &grad);
        let step: Vec<f64> = (0..d - 1)
            .map(|c| -(grad[c] - g[c] * gd / (1.0 + gg)))
            .collect();
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let cand: Vec<f64> = (0..d - 1).map(|c| u[c] + alpha * step[c]).collect();
            let fc = objective(&cand);
            if fc < fu {
                u = cand;
                fu = fc;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            grad.clear();
            break;
        }
    }
    // accept if the final gradient is small enough
    let g = domain.grad(&u);
    let df = domain.f(&u) - pd;
    let grad: Vec<f64> = (0..d - 1).map(|c| u[c] - pt[c] + df * g[c]).collect();
    if norm(&grad) <= 1e-9 * scale {
        Ok(u)
    } else {
        Err(Error::StepFailure(format!(
            "nearest-point projection did not converge (residual {:.3e})",
            norm(&grad)
        )))
    }
}

/// Push an outside point back to the boundary along the inward normal of its
/// nearest boundary projection. Returns (boundary point, applied push).
fn push_to_boundary(p: &[f64], domain: &GraphDomain) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = domain.dim();
    let u = nearest_boundary_param(p, domain)?;
    let n = domain.normal_at(&u);
    // clearance along p + theta n is increasing (n^d > 0 and grad bounded on
    // the window); bracket then bisect to 1e-12.
    let scale = 1.0 + norm(p);
    let g = |theta: f64| {
        let q: Vec<f64> = (0..d).map(|c| p[c] + theta * n[c]).collect();
        domain.clearance(&q)
    };
    let mut hi = (-domain.clearance(p)).max(1e-16 * scale);
    let mut tries = 0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 80 {
            return Err(Error::StepFailure(
                "normal push failed to reach the boundary".into(),
            ));
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * scale {
            break;
        }
    }
    let theta = hi;
    let push: Vec<f64> = n.iter().map(|&c| theta * c).collect();
    let x: Vec<f64> = (0..d).map(|c| p[c] + push[c]).collect();
    Ok((x, push))
}

/// One reflection step: propose x + w_increment; inside D the push is zero,
/// outside the point is pushed back along the inward normal of its nearest
/// boundary projection. Returns (new point, applied push dL).
pub fn inner_reflection_step(
    x: &[f64],
    w_increment: &[f64],
    domain: &GraphDomain,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = domain.dim();
    if x.len() != d || w_increment.len() != d {
        return Err(Error::invalid("point dimension mismatch"));
    }
    if domain.clearance(x) < -1e-9 * (1.0 + norm(x)) {
        return Err(Error::invalid("start point is outside the closure of D"));
    }
    let p: Vec<f64> = (0..d).map(|c| x[c] + w_increment[c]).collect();
    if domain.clearance(&p) >= 0.0 {
        return Ok((p, vec![0.0; d]));
    }
    push_to_boundary(&p, domain)
}

struct NdState {
    x: Vec<f64>,
    l: Vec<f64>,
    i: Vec<f64>,
    abs_l: f64,
    level: u64,
    frozen: Vec<f64>,
}

/// Solve the extended problem by epsilon-stepping over the driver's grid.
/// `cap` bounds |L|; exceeding it is a blow-up error.
pub fn extended_solve_nd(
    w: &MultiPath,
    domain: &GraphDomain,
    epsilon: f64,
    cap: f64,
) -> Result<ReflectedSolutionNd> {
    let d = domain.dim();
    if w.dim() != d {
        return Err(Error::GridMismatch(format!(
            "driver dimension {} vs domain dimension {}",
            w.dim(),
            d
        )));
    }
    if !(epsilon > 0.0) || !(cap > 0.0) {
        return Err(Error::invalid("epsilon and cap must be positive"));
    }
    let start = w.node(0);
    if domain.clearance(start) < -1e-12 * (1.0 + norm(start)) {
        return Err(Error::invalid("driver must start in the closure of D"));
    }
    let n = w.len();
    let dt = w.dt();
    let mut st = NdState {
        x: start.to_vec(),
        l: vec![0.0; d],
        i: vec![0.0; d],
        abs_l: 0.0,
        level: 0,
        frozen: vec![0.0; d],
    };
    let mut x_out = w.zeros_like();
    let mut l_out = w.zeros_like();
    let mut i_out = w.zeros_like();
    let mut tv = Vec::with_capacity(n);
    x_out.set_node(0, &st.x);
    tv.push(0.0);
    for k in 1..n {
        let dw: Vec<f64> = (0..d)
            .map(|c| w.node(k)[c] - w.node(k - 1)[c])
            .collect();
        advance_cell(&mut st, &dw, dt, domain, epsilon, cap, w.time(k - 1))?;
        x_out.set_node(k, &st.x);
        l_out.set_node(k, &st.l);
        i_out.set_node(k, &st.i);
        tv.push(st.abs_l);
    }
    Ok(ReflectedSolutionNd {
        w: w.clone(),
        x: x_out,
        l: l_out,
        i: i_out,
        total_variation: SampledPath::new(w.t0(), dt, tv)?,
        epsilon,
    })
}

fn advance_cell(
    st: &mut NdState,
    dw: &[f64],
    dt: f64,
    domain: &GraphDomain,
    eps: f64,
    cap: f64,
    t_cell: f64,
) -> Result<()> {
    let d = domain.dim();
    let mut u: Vec<f64> = (0..d).map(|c| st.frozen[c] + dw[c] / dt).collect();
    let mut rem = dt;
    let mut stalls = 0u32;
    while rem > 0.0 {
        let scale = 1.0 + st.x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tol_bd = 1e-11 * scale;
        let g0 = domain.clearance(&st.x);
        if g0 <= tol_bd {
            let nvec = domain.normal_at(&st.x[..d - 1]);
            domain.check_window(&st.x[..d - 1])?;
            let un = dot(&u, &nvec);
            if un < 0.0 {
                // slide along the boundary while the velocity pushes in
                let rate = -un;
                let thr_gap = (st.level + 1) as f64 * eps - st.abs_l;
                let t_thr = thr_gap / rate;
                let (t_ev, crossed) = if t_thr <= rem {
                    (t_thr, true)
                } else {
                    (rem, false)
                };
                for c in 0..d {
                    st.x[c] += (u[c] + rate * nvec[c]) * t_ev;
                    st.l[c] += rate * t_ev * nvec[c];
                    st.i[c] += st.frozen[c] * t_ev;
                }
                st.abs_l += rate * t_ev;
                rem -= t_ev;
                // curvature correction: the frozen-normal slide can leave
                // the surface on curved boundaries
                if domain.clearance(&st.x) < -tol_bd {
                    let (xp, push) = push_to_boundary(&st.x, domain)?;
                    for c in 0..d {
                        st.l[c] += push[c];
                    }
                    st.abs_l += norm(&push);
                    st.x = xp;
                }
                if crossed {
                    st.level += 1;
                    st.frozen = st.l.clone();
                    if st.abs_l >= cap {
                        return Err(Error::BlowUp {
                            time_estimate: t_cell + (dt - rem),
                            cap,
                        });
                    }
                    for c in 0..d {
                        u[c] = st.frozen[c] + dw[c] / dt;
                    }
                }
                continue;
            }
        }
        // free flight for the rest of the cell if it stays inside
        let xp: Vec<f64> = (0..d).map(|c| st.x[c] + u[c] * rem).collect();
        if domain.clearance(&xp) >= -1e-13 * scale {
            for c in 0..d {
                st.i[c] += st.frozen[c] * rem;
            }
            st.x = xp;
            break;
        }
        // first boundary hit along the straight proposal
        let phi = |s: f64| {
            let q: Vec<f64> = (0..d).map(|c| st.x[c] + u[c] * s).collect();
            domain.clearance(&q)
        };
        let mut lo = 0.0;
        let mut hi = rem;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s_hit = lo;
        if s_hit <= 1e-14 * dt {
            stalls += 1;
            if stalls > 2 {
                // grazing on a concave stretch: finish the cell with a plain
                // propose-and-project step
                let winc: Vec<f64> = u.iter().map(|&c| c * rem).collect();
                let (xp, push) = inner_reflection_step(&st.x, &winc, domain)?;
                for c in 0..d {
                    st.i[c] += st.frozen[c] * rem;
                    st.l[c] += push[c];
                }
                st.abs_l += norm(&push);
                st.x = xp;
                break;
            }
        }
        for c in 0..d {
            st.x[c] += u[c] * s_hit;
            st.i[c] += st.frozen[c] * s_hit;
        }
        rem -= s_hit;
    }
    Ok(())
}

/// Check the solution conditions: reconstruction, monotone |L| accruing only
/// at the boundary, normal-direction pushes, alpha |L| <= L^d <= |L|, and
/// the running-max upper bound on L^d.
pub fn verify_nd(sol: &ReflectedSolutionNd, domain: &GraphDomain, tol: f64) -> Result<Report> {
    let d = domain.dim();
    let n = sol.x.len();
    if sol.w.len() != n || sol.l.len() != n || sol.i.len() != n {
        return Err(Error::GridMismatch("solution fields on different grids".into()));
    }
    let mut report = Report::new();
    let mut max_abs = 0.0_f64;
    for k in 0..n {
        for &v in sol.w.node(k) {
            max_abs = max_abs.max(v.abs());
        }
    }
    let scale = tol * (1.0 + max_abs);

    let mut worst_rec = 0.0_f64;
    let mut worst_rec_k = 0usize;
    for k in 0..n {
        for c in 0..d {
            let r = (sol.x.node(k)[c] - (sol.w.node(k)[c] + sol.i.node(k)[c] + sol.l.node(k)[c]))
                .abs();
            if r > worst_rec {
                worst_rec = r;
                worst_rec_k = k;
            }
        }
    }
    report.push(
        "reconstruction",
        worst_rec <= scale,
        worst_rec,
        scale,
        format!("worst node {worst_rec_k}"),
    );

    let mut worst_mono = 0.0_f64;
    let mut worst_contact = 0.0_f64;
    let mut worst_contact_k = 0usize;
    for k in 1..n {
        let inc = sol.total_variation.value(k) - sol.total_variation.value(k - 1);
        if -inc > worst_mono {
            worst_mono = -inc;
        }
        if inc > scale {
            // accrual must touch the boundary somewhere in this cell
            let step: f64 = (0..d)
                .map(|c| (sol.x.node(k)[c] - sol.x.node(k - 1)[c]).powi(2))
                .sum::<f64>()
                .sqrt();
            let cl = domain
                .clearance(sol.x.node(k))
                .min(domain.clearance(sol.x.node(k - 1)));
            let allow = 2.0 * step + scale;
            if cl - allow > worst_contact {
                worst_contact = cl - allow;
                worst_contact_k = k;
            }
        }
    }
    report.push(
        "total-variation-monotone",
        worst_mono <= scale,
        worst_mono,
        scale,
        "worst |L| decrease",
    );
    report.push(
        "accrual-on-boundary",
        worst_contact <= 0.0,
        worst_contact.max(0.0),
        0.0,
        format!("worst clearance excess at node {worst_contact_k}"),
    );

    let mut worst_angle = 0.0_f64;
    let mut worst_angle_k = 0usize;
    for k in 1..n {
        let dl: Vec<f64> = (0..d)
            .map(|c| sol.l.node(k)[c] - sol.l.node(k - 1)[c])
            .collect();
        let dl_norm = norm(&dl);
        if dl_norm <= scale {
            continue;
        }
        let nvec = domain.normal_at(&sol.x.node(k)[..d - 1]);
        let along = dot(&dl, &nvec);
        let tangential = (dl_norm * dl_norm - along * along).max(0.0).sqrt();
        let step: f64 = (0..d)
            .map(|c| (sol.x.node(k)[c] - sol.x.node(k - 1)[c]).powi(2))
            .sum::<f64>()
            .sqrt();
        // first-order allowance for normal variation across the cell
        let allow = dl_norm * (1e-9 + step) + scale;
        if tangential - allow > worst_angle {
            worst_angle = tangential - allow;
            worst_angle_k = k;
        }
    }
    report.push(
        "push-along-normal",
        worst_angle <= 0.0,
        worst_angle.max(0.0),
        0.0,
        format!("worst tangential excess at node {worst_angle_k}"),
    );

    let alpha = domain.alpha();
    let mut worst_ineq = 0.0_f64;
    for k in 0..n {
        let ld = sol.l.node(k)[d - 1];
        let tvk = sol.total_variation.value(k);
        worst_ineq = worst_ineq.max(alpha * tvk - ld).max(ld - tvk);
    }
    report.push(
        "alpha-total-variation-bounds",
        worst_ineq <= scale,
        worst_ineq,
        scale,
        "alpha |L| <= L^d <= |L|",
    );

    // Running-max upper bound: L^d_t <= sup_s (-w^d_s)^+ + (1 - alpha).
    let mut run = 0.0_f64;
    let mut worst_bound = 0.0_f64;
    for k in 0..n {
        run = run.max(-sol.w.node(k)[d - 1]);
        let bound = run.max(0.0) + (1.0 - alpha);
        worst_bound = worst_bound.max(sol.l.node(k)[d - 1] - bound);
    }
    report.push(
        "vertical-local-time-bound",
        worst_bound <= scale,
        worst_bound,
        scale,
        "L^d <= running max of (-w^d)^+ plus (1 - alpha)",
    );

    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{generate_brownian_path, RngConfig};

    #[test]
    fn reflection_step_half_space() {
        let dom = GraphDomain::half_space(2, 0.5);
        let (x, dl) = inner_reflection_step(&[0.0, 0.0], &[0.3, -0.2], &dom).unwrap();
        assert!((x[0] - 0.3).abs() < 1e-12 && x[1].abs() < 1e-12);
        assert!(dl[0].abs() < 1e-12 && (dl[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn reflection_step_interior_is_free() {
        let dom = GraphDomain::half_space(2, 0.5);
        let (x, dl) = inner_reflection_step(&[0.0, 1.0], &[0.1, -0.3], &dom).unwrap();
        assert_eq!(dl, vec![0.0, 0.0]);
        assert_eq!(x, vec![0.1, 0.7]);
    }

    #[test]
    fn reflection_step_tilted_plane() {
        let c = 0.4;
        let dom = GraphDomain::tilted_plane(vec![c], 0.2).unwrap();
        let nvec = dom.normal_at(&[0.0]);
        let (x, dl) = inner_reflection_step(&[0.0, 0.0], &[0.2, -0.3], &dom).unwrap();
        // landed on the plane
        assert!((x[1] - c * x[0]).abs() < 1e-10, "clearance {}", dom.clearance(&x));
        // push parallel to the normal
        let dln = norm(&dl);
        let along = dot(&dl, &nvec);
        assert!((dln - along).abs() < 1e-10, "push not along normal");
    }

    #[test]
    fn interior_driver_never_pushed() {
        let dom = GraphDomain::half_space(2, 0.5);
        let b = generate_brownian_path(RngConfig::new(61), 1e-3, 1.0, 2).unwrap();
        // lift the vertical coordinate far above the floor
        let lifted = SampledPath::new(0.0, 1e-3, b[1].values().iter().map(|v| v + 50.0).collect())
            .unwrap();
        let w = MultiPath::from_coords(&[b[0].clone(), lifted]).unwrap();
        let sol = extended_solve_nd(&w, &dom, 0.1, 1e3).unwrap();
        assert_eq!(sol.total_variation.last(), 0.0);
        // free flight accumulates only (dw/dt)*dt rounding
        for k in 0..w.len() {
            for c in 0..2 {
                assert!((sol.x.node(k)[c] - w.node(k)[c]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn half_space_reduces_to_one_dimension() {
        use crate::path::DriftSpec;
        use crate::skorohod::extended_solve;
        let dom = GraphDomain::half_space(2, 0.5);
        let eps = 0.05;
        for seed in 0..5u64 {
            let b = generate_brownian_path(RngConfig::new(600 + seed), 1e-3, 1.0, 2).unwrap();
            let w = MultiPath::from_coords(&b).unwrap();
            let sol = extended_solve_nd(&w, &dom, eps, 1e3).unwrap();
            let one_d = extended_solve(&b[1], &DriftSpec::linear(1.0), eps, 1e3).unwrap();
            let mut worst = 0.0_f64;
            for k in 0..w.len() {
                worst = worst.max((sol.x.node(k)[0] - b[0].value(k)).abs());
                worst = worst.max((sol.x.node(k)[1] - one_d.x.value(k)).abs());
                worst = worst.max((sol.l.node(k)[1] - one_d.l.value(k)).abs());
                worst = worst.max((sol.i.node(k)[1] - one_d.i.value(k)).abs());
                worst = worst.max(sol.l.node(k)[0].abs());
            }
            assert!(worst < 1e-8, "seed {}: reduction error {}", seed, worst);
        }
    }

    #[test]
    fn verify_accepts_half_space_solution() {
        let dom = GraphDomain::half_space(2, 0.5);
        let b = generate_brownian_path(RngConfig::new(62), 1e-3, 1.0, 2).unwrap();
        let w = MultiPath::from_coords(&b).unwrap();
        let sol = extended_solve_nd(&w, &dom, 0.05, 1e3).unwrap();
        let r = verify_nd(&sol, &dom, 1e-9).unwrap();
        assert!(r.passed(), "{}", r.render());
        assert!(sol.total_variation.last() > 0.0);
    }

    #[test]
    fn verify_rejects_tangential_corruption() {
        let dom = GraphDomain::half_space(2, 0.5);
        let b = generate_brownian_path(RngConfig::new(63), 1e-3, 1.0, 2).unwrap();
        let w = MultiPath::from_coords(&b).unwrap();
        let mut sol = extended_solve_nd(&w, &dom, 0.05, 1e3).unwrap();
        // add a tangential component to L on a node where it accrued
        let k = (1..sol.l.len())
            .find(|&k| sol.total_variation.value(k) > sol.total_variation.value(k - 1) + 1e-6)
            .expect("some accrual");
        let mut node = sol.l.node(k).to_vec();
        node[0] += 0.1;
        sol.l.set_node(k, &node);
        let r = verify_nd(&sol, &dom, 1e-9).unwrap();
        assert!(!r.passed());
        let names = r.failed_names();
        assert!(
            names.contains(&"push-along-normal"),
            "failed checks: {names:?}"
        );
    }

    #[test]
    fn tilted_plane_strict_inequality_and_rotation() {
        let c = 0.25;
        let alpha = 0.2;
        let dom = GraphDomain::tilted_plane(vec![c], alpha).unwrap();
        let b = generate_brownian_path(RngConfig::new(64), 1e-3, 1.0, 2).unwrap();
        let w = MultiPath::from_coords(&b).unwrap();
        let sol = extended_solve_nd(&w, &dom, 0.05, 1e3).unwrap();
        let r = verify_nd(&sol, &dom, 1e-9).unwrap();
        assert!(r.passed(), "{}", r.render());
        let tv = sol.total_variation.last();
        assert!(tv > 0.0);
        // strict version of the sandwich on a contact-bearing tilted path
        let ld = sol.l.node(sol.l.len() - 1)[1];
        assert!(alpha * tv < ld && ld < tv, "alpha|L|={} L2={} |L|={}", alpha * tv, ld, tv);

        // rotating driver and domain into half-space position commutes
        let s = (1.0 + c * c).sqrt();
        let (nx, ny) = (-c / s, 1.0 / s);
        let rot = |p: &[f64]| vec![ny * p[0] - nx * p[1], nx * p[0] + ny * p[1]];
        let n = w.len();
        let mut data = Vec::with_capacity(n * 2);
        for k in 0..n {
            data.extend(rot(w.node(k)));
        }
        let w_rot = MultiPath::new(0.0, w.dt(), 2, data).unwrap();
        let half = GraphDomain::half_space(2, alpha);
        let sol_rot = extended_solve_nd(&w_rot, &half, 0.05, 1e3).unwrap();
        let mut worst = 0.0_f64;
        for k in 0..n {
            let xr = rot(sol.x.node(k));
            let lr = rot(sol.l.node(k));
            worst = worst.max((xr[0] - sol_rot.x.node(k)[0]).abs());
            worst = worst.max((xr[1] - sol_rot.x.node(k)[1]).abs());
            worst = worst.max((lr[0] - sol_rot.l.node(k)[0]).abs());
            worst = worst.max((lr[1] - sol_rot.l.node(k)[1]).abs());
        }
        assert!(worst < 1e-8, "rotation inconsistency {}", worst);
    }

    #[test]
    fn epsilon_refinement_cauchy() {
        let dom = GraphDomain::half_space(2, 0.5);
        let b = generate_brownian_path(RngConfig::new(65), 1e-3, 1.0, 2).unwrap();
        let w = MultiPath::from_coords(&b).unwrap();
        let sols: Vec<_> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&e| extended_solve_nd(&w, &dom, e, 1e3).unwrap())
            .collect();
        let mut gaps = Vec::new();
        for pair in sols.windows(2) {
            let g = pair[0]
                .total_variation
                .sup_distance(&pair[1].total_variation)
                .unwrap();
            gaps.push(g);
        }
        for wnd in gaps.windows(2) {
            assert!(wnd[1] <= wnd[0] + 1e-12, "gaps {:?}", gaps);
        }
    }

    #[test]
    fn curved_domain_runs_and_verifies() {
        let dom = GraphDomain::parabolic(2, 0.3, 0.2).unwrap();
        let b = generate_brownian_path(RngConfig::new(66), 1e-3, 1.0, 2).unwrap();
        let w = MultiPath::from_coords(&b).unwrap();
        let sol = extended_solve_nd(&w, &dom, 0.05, 1e3).unwrap();
        // curved checks get a looser tolerance than flat ones
        let r = verify_nd(&sol, &dom, 1e-6).unwrap();
        assert!(r.passed(), "{}", r.render());
    }

    #[test]
    fn window_violation_is_an_error() {
        // alpha = 0.9 leaves almost no window; a unit-slope plane has
        // n^d = 1/sqrt(2) < alpha, caught at the first boundary contact
        let dom = GraphDomain::tilted_plane(vec![1.0], 0.9).unwrap();
        let b = generate_brownian_path(RngConfig::new(67), 1e-3, 1.0, 2).unwrap();
        let w = MultiPath::from_coords(&b).unwrap();
        match extended_solve_nd(&w, &dom, 0.05, 1e3) {
            Err(Error::DomainAssumption(_)) => {}
            other => panic!("expected a domain-assumption error, got {other:?}"),
        }
    }

    #[test]
    fn modulus_of_continuity_on_half_space() {
        // |L| gains little over windows where the driver oscillates little,
        // calibrated by the one-dimensional increment bound.
        let dom = GraphDomain::half_space(2, 0.5);
        let b = generate_brownian_path(RngConfig::new(68), 1e-3, 2.0, 2).unwrap();
        let w = MultiPath::from_coords(&b).unwrap();
        let sol = extended_solve_nd(&w, &dom, 0.05, 1e3).unwrap();
        let n = w.len();
        let window = 50usize;
        for start in (0..n - window).step_by(37) {
            let osc = (start..start + window)
                .map(|k| b[1].value(start) - b[1].value(k))
                .fold(f64::MIN, f64::max)
                .max(0.0);
            let gain =
                sol.total_variation.value(start + window) - sol.total_variation.value(start);
            // drift is nonnegative vertically, so the 1-d bound applies
            assert!(
                gain <= osc + 1e-9,
                "window at {start}: gain {gain} > oscillation {osc}"
            );
        }
    }
}
