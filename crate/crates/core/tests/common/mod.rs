//! Independent reference implementation used only by the test suite.
//!
//! Everything here is written directly from the coefficient equations with
//! constant quality scores and its own integrators, deliberately sharing no
//! code with the library, so that agreement between the two is meaningful.
//! The committed golden values in `tests/data/golden.json` were produced by
//! [`fine_oracle`] / [`oracle_theta_scan`] at dt = 1e-3 (see the
//! `regenerate_golden_values` test in `oracle.rs`).

#![allow(dead_code)]

use rayon::prelude::*;

/// Scalar problem data with constant quality scores (all the golden-value
/// runs use the constant base case).
#[derive(Debug, Clone, Copy)]
pub struct OracleProblem {
    pub rho1: f64,
    pub rho2: f64,
    pub rhom: f64,
    pub q1: f64,
    pub q2: f64, // ignored unless `competitor`
    pub qm: f64,
    pub c1: f64,
    pub c2: f64,
    pub cm: f64,
    pub r: f64,
    pub horizon: f64,
    pub x0: f64,
    pub competitor: bool,
}

impl OracleProblem {
    /// Base parameter case, monopoly channel.
    pub fn base_i() -> Self {
        OracleProblem {
            rho1: 0.05,
            rho2: 0.05,
            rhom: 0.05,
            q1: 0.15,
            q2: 0.15,
            qm: 0.15,
            c1: 200.0,
            c2: 200.0,
            cm: 200.0,
            r: 0.05,
            horizon: 100.0,
            x0: 0.1,
            competitor: false,
        }
    }

    /// Base parameter case with the competing retailer present.
    pub fn base_ii() -> Self {
        OracleProblem {
            competitor: true,
            ..Self::base_i()
        }
    }

    fn gains(&self) -> (f64, f64, f64) {
        let sq = |v: f64| v * v;
        let e = if self.competitor { sq(self.rho2 * self.q2) } else { 0.0 };
        (sq(self.rho1 * self.q1), sq(self.rhom * self.qm), e)
    }
}

/// Slope and intercept paths plus the share path on the oracle's own grid.
/// Index 0 is t = 0; the last index is t = T.
pub struct OracleSolution {
    pub dt: f64,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    pub betam: Vec<f64>,
    pub alpha1: Vec<f64>,
    pub alpha2: Vec<f64>,
    pub alpham: Vec<f64>,
    pub x: Vec<f64>,
    pub j1: f64,
    pub j2: f64,
    pub jm: f64,
}

/// Right side of the six coefficient equations, [b1, b2, bm, a1, a2, am].
/// For a monopoly-channel problem the b2/a2 slots stay identically zero.
fn coeff_rhs(p: &OracleProblem, theta: f64, y: &[f64; 6]) -> [f64; 6] {
    let (aa, bb, ee) = p.gains();
    let d = 1.0 - theta;
    let [b1, b2, bm, a1, a2, am] = *y;
    let quad1 = aa * b1 * b1 / (4.0 * d) + bb * b1 * bm / 2.0;
    let quadm = bb * bm * bm / 4.0 - theta * aa * b1 * b1 / (4.0 * d * d) + aa * b1 * bm / (2.0 * d);
    let quad2 = aa * b1 * b2 / (2.0 * d) + bb * b2 * bm / 2.0;
    let mut out = [
        p.r * b1 + quad1 - ee * b1 * b2 / 2.0 - p.c1,
        p.r * b2 + quad2 - ee * b2 * b2 / 4.0 + p.c2,
        p.r * bm + quadm - ee * b2 * bm / 2.0 - p.cm,
        p.r * a1 - quad1,
        p.r * a2 - quad2 - p.c2,
        p.r * am - quadm,
    ];
    if !p.competitor {
        out[1] = 0.0;
        out[4] = 0.0;
    }
    out
}

fn rhs_state(p: &OracleProblem, theta: f64, b1: f64, b2: f64, bm: f64, x: f64) -> f64 {
    let (aa, bb, ee) = p.gains();
    (aa * b1 / (2.0 * (1.0 - theta)) + bb * bm / 2.0) * (1.0 - x) + ee * b2 * x / 2.0
}

fn axpy6(y: &[f64; 6], k: &[f64; 6], s: f64) -> [f64; 6] {
    let mut out = *y;
    for i in 0..6 {
        out[i] += s * k[i];
    }
    out
}

/// Backward coefficient sweep with the classical fourth-order method,
/// then a forward fourth-order share sweep and trapezoid profits, all on a
/// uniform grid of `n` steps. This is the golden-value oracle at n = 100000
/// (dt = 1e-3 for T = 100).
pub fn fine_oracle(p: &OracleProblem, theta: f64, n: usize) -> OracleSolution {
    let dt = p.horizon / n as f64;
    let mut coeffs = vec![[0.0f64; 6]; n + 1];
    let mut y = [0.0f64; 6];
    for k in (1..=n).rev() {
        // Constant quality scores: the right side has no explicit time
        // dependence, so the four stages need no stage times.
        let k1 = coeff_rhs(p, theta, &y);
        let k2 = coeff_rhs(p, theta, &axpy6(&y, &k1, -dt / 2.0));
        let k3 = coeff_rhs(p, theta, &axpy6(&y, &k2, -dt / 2.0));
        let k4 = coeff_rhs(p, theta, &axpy6(&y, &k3, -dt));
        for i in 0..6 {
            y[i] -= dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        coeffs[k - 1] = y;
    }

    let beta_at = |s: f64| -> (f64, f64, f64) {
        let pos = (s / dt).clamp(0.0, n as f64);
        let k = (pos.floor() as usize).min(n - 1);
        let w = pos - k as f64;
        let lerp = |i: usize| coeffs[k][i] + (coeffs[k + 1][i] - coeffs[k][i]) * w;
        (lerp(0), lerp(1), lerp(2))
    };

    let mut x = vec![0.0f64; n + 1];
    x[0] = p.x0;
    for k in 0..n {
        let t = k as f64 * dt;
        let xk = x[k];
        let (b1a, b2a, bma) = (coeffs[k][0], coeffs[k][1], coeffs[k][2]);
        let (b1b, b2b, bmb) = beta_at(t + dt / 2.0);
        let (b1c, b2c, bmc) = (coeffs[k + 1][0], coeffs[k + 1][1], coeffs[k + 1][2]);
        let k1 = rhs_state(p, theta, b1a, b2a, bma, xk);
        let k2 = rhs_state(p, theta, b1b, b2b, bmb, xk + dt / 2.0 * k1);
        let k3 = rhs_state(p, theta, b1b, b2b, bmb, xk + dt / 2.0 * k2);
        let k4 = rhs_state(p, theta, b1c, b2c, bmc, xk + dt * k3);
        x[k + 1] = (xk + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(0.0, 1.0);
    }

    let d = 1.0 - theta;
    let flows: Vec<(f64, f64, f64)> = (0..=n)
        .map(|k| {
            let t = k as f64 * dt;
            let disc = (-p.r * t).exp();
            let root_up = (1.0 - x[k]).max(0.0).sqrt();
            let root_dn = x[k].max(0.0).sqrt();
            let u1 = (p.rho1 * p.q1 * coeffs[k][0] * root_up / (2.0 * d)).max(0.0);
            let v = (p.rhom * p.qm * coeffs[k][2] * root_up / 2.0).max(0.0);
            let u2 = (-p.rho2 * p.q2 * coeffs[k][1] * root_dn / 2.0).max(0.0);
            (
                disc * (p.c1 * x[k] - d * u1 * u1),
                disc * (p.c2 * (1.0 - x[k]) - u2 * u2),
                disc * (p.cm * x[k] - v * v - theta * u1 * u1),
            )
        })
        .collect();
    let trapz = |pick: &dyn Fn(&(f64, f64, f64)) -> f64| -> f64 {
        let mut acc = 0.0;
        for k in 0..n {
            acc += (pick(&flows[k]) + pick(&flows[k + 1])) * dt / 2.0;
        }
        acc
    };

    OracleSolution {
        dt,
        beta1: coeffs.iter().map(|c| c[0]).collect(),
        beta2: coeffs.iter().map(|c| c[1]).collect(),
        betam: coeffs.iter().map(|c| c[2]).collect(),
        alpha1: coeffs.iter().map(|c| c[3]).collect(),
        alpha2: coeffs.iter().map(|c| c[4]).collect(),
        alpham: coeffs.iter().map(|c| c[5]).collect(),
        x,
        j1: trapz(&|f| f.0),
        j2: trapz(&|f| f.1),
        jm: trapz(&|f| f.2),
    }
}

/// Explicit first-order backward sweep of the coefficient system; returns
/// the t = 0 values [b1, b2, bm, a1, a2, am]. Used to cross-check the
/// fourth-order oracle with a second, even simpler integrator (its global
/// error at dt = 1e-3 is around 1e-4 relative, so it can only arbitrate at
/// that accuracy).
pub fn euler_oracle_at_zero(p: &OracleProblem, theta: f64, n: usize) -> [f64; 6] {
    let dt = p.horizon / n as f64;
    let mut y = [0.0f64; 6];
    for _ in 0..n {
        let f = coeff_rhs(p, theta, &y);
        for i in 0..6 {
            y[i] -= dt * f[i];
        }
    }
    y
}

/// Grid scan of the subsidy rate on {0, step, ..., 0.99} with the fine
/// oracle at each point; returns (theta_star, theta_bar) with ties broken
/// toward the smaller rate.
pub fn oracle_theta_scan(p: &OracleProblem, theta_step: f64, n: usize) -> (f64, f64) {
    let count = (0.99 / theta_step).round() as usize;
    let evals: Vec<(f64, f64, f64)> = (0..=count)
        .into_par_iter()
        .map(|k| {
            let theta = (k as f64 * theta_step).min(0.99);
            let sol = fine_oracle(p, theta, n);
            (theta, sol.jm, sol.j1 + sol.jm)
        })
        .collect();
    let pick = |key: &dyn Fn(&(f64, f64, f64)) -> f64| -> f64 {
        let mut best = (evals[0].0, key(&evals[0]));
        for e in &evals[1..] {
            let v = key(e);
            if v > best.1 {
                best = (e.0, v);
            }
        }
        best.0
    };
    (pick(&|e| e.1), pick(&|e| e.2))
}

/// Frozen reference outputs; mirrors `tests/data/golden.json`.
#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct Golden {
    /// beta1(0), scenario I base, theta = 0.
    pub b1_zero: f64,
    /// betaM(0), scenario I base, theta = 0.
    pub bm_zero: f64,
    /// beta2(0), scenario II base, theta = 0.
    pub b2_zero: f64,
    /// x(T), scenario I base, theta = 0.
    pub x_terminal: f64,
    /// J1, scenario I base, theta = 0.
    pub g1: f64,
    /// JM, scenario I base, theta = 0.
    pub gm: f64,
    /// Subsidy optima of the scenario I base scan at step 0.001.
    pub theta_star: f64,
    pub theta_bar: f64,
}

pub fn golden_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden.json")
}

pub fn load_golden() -> Golden {
    let text = std::fs::read_to_string(golden_path()).expect("golden file present");
    serde_json::from_str(&text).expect("golden file parses")
}
