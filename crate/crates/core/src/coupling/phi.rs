use super::bundle::CouplingBundle;
use super::wiener::WAssembler;
use crate::{Error, Result};

/// Relative tolerance of the decomposition identity.
pub const IDENTITY_TOL: f64 = 1e-8;

/// Sorted, deduplicated evaluation points in `[0, t]`.
///
/// Includes a uniform grid of step `grid_step`, renewal times, intra-cycle
/// event times, the multiples `gamma k` where `y(u)` jumps, the multiples
/// `mu k` where the Wiener paths have knots, and any `extra` points.
pub fn evaluation_grid(bundle: &CouplingBundle, t: f64, grid_step: f64, extra: &[f64]) -> Result<Vec<f64>> {
    bundle.check_u(t)?;
    if !(grid_step > 0.0) {
        return Err(Error::InvalidParameter(format!("grid_step must be positive, got {grid_step}")));
    }
    let g = &bundle.greeks;
    let mut pts: Vec<f64> = Vec::with_capacity((t / grid_step) as usize * 3);
    let push_multiples = |pts: &mut Vec<f64>, step: f64| {
        let n = (t / step).floor() as usize;
        pts.extend((0..=n).map(|k| k as f64 * step).filter(|&u| u <= t));
    };
    push_multiples(&mut pts, grid_step);
    push_multiples(&mut pts, g.gamma);
    push_multiples(&mut pts, g.mu);
    if (1.0 / grid_step).fract() != 0.0 {
        push_multiples(&mut pts, 1.0);
    }
    let times = bundle.path.renewal_times();
    for (k, c) in bundle.path.cycles().iter().enumerate() {
        let base = times[k];
        if base > t {
            break;
        }
        for &o in c.offsets() {
            let u = base + o;
            if u <= t {
                pts.push(u);
            }
        }
    }
    pts.extend(extra.iter().copied().filter(|&u| (0.0..=t).contains(&u)));
    pts.push(t);
    pts.sort_unstable_by(f64::total_cmp);
    pts.dedup();
    Ok(pts)
}

/// Pointwise values produced by [`Sweep::eval`].
#[derive(Debug, Clone)]
pub struct PointValues {
    pub s: Vec<f64>,
    pub w: Vec<f64>,
    /// `S(u) - kappa u - sigma W_u`.
    pub dev: Vec<f64>,
    /// `phi[q * d + i]`, `q = 0..8`.
    pub phi: Vec<f64>,
}

impl PointValues {
    fn new(d: usize) -> Self {
        Self {
            s: vec![0.0; d],
            w: vec![0.0; d],
            dev: vec![0.0; d],
            phi: vec![0.0; 8 * d],
        }
    }

    pub fn phi_q(&self, q: usize) -> &[f64] {
        let d = self.s.len();
        &self.phi[q * d..(q + 1) * d]
    }

    pub fn deviation_norm(&self) -> f64 {
        self.dev.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn phi_norm(&self, q: usize) -> f64 {
        self.phi_q(q).iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Max-norm of `sum_q phi_q - dev`.
    pub fn residual(&self) -> f64 {
        let d = self.s.len();
        (0..d)
            .map(|i| ((0..8).map(|q| self.phi[q * d + i]).sum::<f64>() - self.dev[i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Evaluator for increasing sequences of `u`, reusing the renewal index.
pub struct Sweep<'a> {
    bundle: &'a CouplingBundle,
    asm: WAssembler,
    m: usize,
    last_u: f64,
    star_u: Vec<f64>,
    star_j: Vec<f64>,
    circ: Vec<f64>,
    b_y: Vec<f64>,
    s_m: Vec<f64>,
}

impl<'a> Sweep<'a> {
    pub fn new(bundle: &'a CouplingBundle) -> Self {
        let d = bundle.dim();
        Self {
            bundle,
            asm: bundle.assembler(),
            m: 0,
            last_u: 0.0,
            star_u: vec![0.0; d],
            star_j: vec![0.0; d],
            circ: vec![0.0; d],
            b_y: vec![0.0; d],
            s_m: vec![0.0; d],
        }
    }

    pub fn values(&self) -> PointValues {
        PointValues::new(self.bundle.dim())
    }

    /// Evaluates `S`, `W`, the deviation and (if `phis`) all eight terms at `u`.
    pub fn eval(&mut self, u: f64, phis: bool, out: &mut PointValues) -> Result<()> {
        let bn = self.bundle;
        bn.check_u(u)?;
        if u < self.last_u {
            self.m = 0;
        }
        self.last_u = u;
        let times = bn.path.renewal_times();
        while self.m + 1 < times.len() && times[self.m + 1] <= u {
            self.m += 1;
        }
        let g = &bn.greeks;
        let d = bn.dim();
        bn.path.evaluate_with_count(u, self.m, &mut out.s);

        let wstar = bn.w_star();
        wstar.at(u / g.gamma, &mut self.star_u)?;
        let w_tilde = bn.w_tilde().at(u)?;
        bn.w_circ.value_at(u, &mut self.circ)?;
        self.asm.apply(&self.star_u, w_tilde, &self.circ, &mut out.w);
        for i in 0..d {
            let mut sw = 0.0;
            for k in 0..d {
                sw += g.sigma[(i, k)] * out.w[k];
            }
            out.dev[i] = out.s[i] - g.kappa[i] * u - sw;
        }
        if !phis {
            return Ok(());
        }

        let j = bn.level(u);
        let y = bn.n.passage_time(j)?;
        let fy = y.floor() as usize;
        if fy > bn.path.cycle_count() {
            return Err(Error::HorizonExceeded {
                requested: y,
                available: bn.path.cycle_count() as f64,
            });
        }
        let t_fy = times[fy];
        bn.b.value_at(y, &mut self.b_y)?;
        wstar.at(j as f64, &mut self.star_j)?;
        self.s_m.copy_from_slice(bn.path.value_at_renewal(self.m));
        let s_fy = bn.path.value_at_renewal(fy);
        let inv_sqrt_l = 1.0 / g.lambda.sqrt();
        let w_tilde_term = y - u / (g.lambda * g.gamma) - w_tilde / (g.lambda * g.gamma.sqrt());
        let jg = g.gamma * j as f64;
        for i in 0..d {
            let (mut v_by, mut v_bj, mut v_bu) = (0.0, 0.0, 0.0);
            for k in 0..d {
                let vik = g.v[(i, k)];
                v_by += vik * self.b_y[k];
                v_bj += vik * self.star_j[k] * inv_sqrt_l;
                v_bu += vik * self.star_u[k] * inv_sqrt_l;
            }
            let am = g.alpha[i] * g.mu;
            let beta = g.beta[i];
            let p = &mut out.phi;
            p[i] = out.s[i] - self.s_m[i];
            p[d + i] = self.s_m[i] - s_fy[i];
            p[2 * d + i] = s_fy[i] - beta * t_fy + am * y - v_by;
            p[3 * d + i] = beta * (t_fy - jg);
            p[4 * d + i] = -am * w_tilde_term;
            p[5 * d + i] = v_by - v_bj;
            p[6 * d + i] = v_bj - v_bu;
            p[7 * d + i] = beta * (jg - u);
        }
        Ok(())
    }
}

/// The eight-term split of `S(u) - kappa u - sigma W_u` on a grid.
#[derive(Debug, Clone)]
pub struct PhiDecomposition {
    pub dim: usize,
    pub grid: Vec<f64>,
    /// Row-major `grid.len() * dim`.
    pub s: Vec<f64>,
    pub w: Vec<f64>,
    /// `phi[q]` is row-major `grid.len() * dim`.
    pub phi: [Vec<f64>; 8],
    /// Max-norm of the deviation at each grid point.
    pub deviation: Vec<f64>,
    pub residual: f64,
    pub max_abs_s: f64,
}

impl PhiDecomposition {
    pub fn tolerance(&self) -> f64 {
        IDENTITY_TOL * (1.0 + self.max_abs_s)
    }

    /// `sup_u |Phi_q(u)|` in max-norm.
    pub fn sup_phi(&self, q: usize) -> f64 {
        self.phi[q].iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// All eight terms on the evaluation grid up to `t`; fails with
/// `IdentityViolation` if they do not sum to the deviation.
pub fn phi_decomposition(bundle: &CouplingBundle, t: f64, grid_step: f64) -> Result<PhiDecomposition> {
    let grid = evaluation_grid(bundle, t, grid_step, &[])?;
    let d = bundle.dim();
    let mut sweep = Sweep::new(bundle);
    let mut pv = sweep.values();
    let n = grid.len();
    let mut s = Vec::with_capacity(n * d);
    let mut w = Vec::with_capacity(n * d);
    let mut phi: [Vec<f64>; 8] = Default::default();
    for p in phi.iter_mut() {
        p.reserve(n * d);
    }
    let mut deviation = Vec::with_capacity(n);
    let mut residual = 0.0_f64;
    let mut max_abs_s = 0.0_f64;
    for &u in &grid {
        sweep.eval(u, true, &mut pv)?;
        s.extend_from_slice(&pv.s);
        w.extend_from_slice(&pv.w);
        for (q, p) in phi.iter_mut().enumerate() {
            p.extend_from_slice(pv.phi_q(q));
        }
        deviation.push(pv.deviation_norm());
        residual = residual.max(pv.residual());
        max_abs_s = pv.s.iter().fold(max_abs_s, |a, v| a.max(v.abs()));
    }
    let out = PhiDecomposition {
        dim: d,
        grid,
        s,
        w,
        phi,
        deviation,
        residual,
        max_abs_s,
    };
    if !(out.residual <= out.tolerance()) {
        return Err(Error::IdentityViolation {
            residual: out.residual,
            tolerance: out.tolerance(),
        });
    }
    Ok(out)
}

/// `sup_{u <= t} |S(u) - kappa u - sigma W_u|` over the evaluation grid.
pub fn sup_deviation(bundle: &CouplingBundle, t: f64, grid_step: f64) -> Result<f64> {
    Ok(sweep_sups(bundle, &[t], grid_step, false)?[0].deviation)
}

/// Running suprema recorded at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonSups {
    pub t: f64,
    pub deviation: f64,
    /// `sup |Phi_q|` (zero when the terms were not requested).
    pub phi: [f64; 8],
    /// Largest identity residual seen so far.
    pub residual: f64,
    /// Largest violation of `|dev(u)| <= sum_q |Phi_q(u)|` seen so far.
    pub triangle_excess: f64,
    pub max_abs_s: f64,
}

/// Running suprema at each of the increasing `horizons`, from one sweep over
/// the grid of the largest horizon.
pub fn sweep_sups(bundle: &CouplingBundle, horizons: &[f64], grid_step: f64, phis: bool) -> Result<Vec<HorizonSups>> {
    if horizons.is_empty() || horizons.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("horizons must be nonempty and increasing".into()));
    }
    let t_max = *horizons.last().unwrap();
    let grid = evaluation_grid(bundle, t_max, grid_step, horizons)?;
    let mut sweep = Sweep::new(bundle);
    let mut pv = sweep.values();
    let mut cur = HorizonSups {
        t: 0.0,
        deviation: 0.0,
        phi: [0.0; 8],
        residual: 0.0,
        triangle_excess: 0.0,
        max_abs_s: 0.0,
    };
    let mut out = Vec::with_capacity(horizons.len());
    let mut next = 0;
    for &u in &grid {
        sweep.eval(u, phis, &mut pv)?;
        let dev = pv.deviation_norm();
        cur.deviation = cur.deviation.max(dev);
        cur.max_abs_s = pv.s.iter().fold(cur.max_abs_s, |a, v| a.max(v.abs()));
        if phis {
            let mut total = 0.0;
            for q in 0..8 {
                let n = pv.phi_norm(q);
                cur.phi[q] = cur.phi[q].max(n);
                total += n;
            }
            cur.residual = cur.residual.max(pv.residual());
            cur.triangle_excess = cur.triangle_excess.max(dev - total);
        }
        while next < horizons.len() && u >= horizons[next] {
            out.push(HorizonSups {
                t: horizons[next],
                ..cur.clone()
            });
            next += 1;
        }
    }
    if phis {
        let tol = IDENTITY_TOL * (1.0 + cur.max_abs_s);
        if !(cur.residual <= tol) {
            return Err(Error::IdentityViolation {
                residual: cur.residual,
                tolerance: tol,
            });
        }
    }
    Ok(out)
}
