//! Value iteration for the problem restricted to the network.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Branch, NetworkPoint, PlanePoint};

use super::cost::ValueProblem;
use super::grid2d::{Convergence, SolveStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdgeGridSpec {
    /// Every branch is discretized on `[0, radius]`.
    pub radius: f64,
    pub h: f64,
    pub fixpoint_tol: f64,
    pub max_iter: usize,
}

impl Default for EdgeGridSpec {
    fn default() -> Self {
        Self {
            radius: 3.0,
            h: 0.005,
            fixpoint_tol: 1e-10,
            max_iter: 1_000_000,
        }
    }
}

/// `V_Γ` at the junction and at radii `h, 2h, …, n h` on each branch.
#[derive(Debug, Clone, Serialize)]
pub struct EdgeValueFunction {
    pub h: f64,
    pub n: usize,
    pub junction: f64,
    /// Indexed like [`Branch::EDGES`]; entry `j` holds radius `(j + 1) h`.
    pub branches: [Vec<f64>; 4],
    pub stats: SolveStats,
}

impl EdgeValueFunction {
    /// Value at node `j` of `branch` (`j = 0` is the junction).
    pub fn node_value(&self, branch: usize, j: usize) -> f64 {
        if j == 0 {
            self.junction
        } else {
            self.branches[branch][j - 1]
        }
    }

    /// Linear interpolation along the branch; radii beyond the grid are clamped.
    pub fn eval(&self, p: NetworkPoint) -> f64 {
        let Some(b) = p.branch().index() else {
            return self.junction;
        };
        let s = (p.radius() / self.h).min(self.n as f64);
        let j = (s.floor() as usize).min(self.n - 1);
        let w = s - j as f64;
        (1.0 - w) * self.node_value(b, j) + w * self.node_value(b, j + 1)
    }

    pub fn max_abs(&self) -> f64 {
        self.branches
            .iter()
            .flatten()
            .fold(self.junction.abs(), |m, v| m.max(v.abs()))
    }

    /// Largest difference quotient between neighbouring nodes with radius at most `r_max`.
    pub fn lipschitz_estimate(&self, r_max: f64) -> f64 {
        let jmax = ((r_max / self.h).floor() as usize).min(self.n);
        let mut l: f64 = 0.0;
        for b in 0..4 {
            for j in 0..jmax {
                l = l.max((self.node_value(b, j + 1) - self.node_value(b, j)).abs() / self.h);
            }
        }
        l
    }

    /// Writes `branch,r,u` rows, the junction first.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "branch,r,u")?;
        writeln!(w, "O,0,{}", self.junction)?;
        for (b, vals) in Branch::EDGES.iter().zip(&self.branches) {
            for (j, v) in vals.iter().enumerate() {
                writeln!(w, "{},{},{}", b, (j + 1) as f64 * self.h, v)?;
            }
        }
        Ok(())
    }
}

/// Solves the discounted problem on the network with speeds in `[−1, 1]`: inside a branch
/// the state may stay, move in or move out; at the junction it may stay or enter any branch.
/// Sweeps alternate between outward and inward order, updating in place.
pub fn solve_value_network(prob: &ValueProblem, spec: &EdgeGridSpec) -> Result<EdgeValueFunction> {
    prob.require_eikonal()?;
    if !(spec.h > 0.0 && spec.radius > spec.h && spec.fixpoint_tol > 0.0) {
        return Err(Error::InvalidInput("edge grid needs 0 < h < radius and a positive tolerance".into()));
    }
    let h = spec.h;
    let lambda = prob.lambda;
    if lambda * h >= 1.0 {
        return Err(Error::InvalidInput("edge spacing too large for the discount rate".into()));
    }
    let n = (spec.radius / h).round() as usize;
    let beta = 1.0 - lambda * h;
    let ell: Vec<Vec<f64>> = Branch::EDGES
        .iter()
        .map(|b| (1..=n).map(|j| prob.cost.eval_state(b.unit() * (j as f64 * h))).collect())
        .collect();
    let ell_o = prob.cost.eval_state(PlanePoint::ORIGIN);

    let mut u_o = ell_o / lambda;
    let mut u: [Vec<f64>; 4] = std::array::from_fn(|b| ell[b].iter().map(|l| l / lambda).collect());

    let update_node = |u: &[f64], u_o: f64, b: usize, j: usize| -> f64 {
        let l = ell[b][j];
        let inner = if j == 0 { u_o } else { u[j - 1] };
        let mut v = (l / lambda).min(h * l + beta * inner);
        if j + 1 < n {
            v = v.min(h * l + beta * u[j + 1]);
        }
        v
    };

    let mut conv = Convergence::new(spec.fixpoint_tol);
    let mut stats = SolveStats::default();
    for it in 1..=spec.max_iter {
        let mut res: f64 = 0.0;
        let outward = it % 2 == 1;
        let update_junction = |u: &[Vec<f64>; 4]| {
            (0..4).fold(ell_o / lambda, |m, b| m.min(h * ell_o + beta * u[b][0]))
        };
        if outward {
            let v = update_junction(&u);
            res = res.max((v - u_o).abs());
            u_o = v;
        }
        #[allow(clippy::needless_range_loop)]
        for b in 0..4 {
            for jj in 0..n {
                let j = if outward { jj } else { n - 1 - jj };
                let v = update_node(&u[b], u_o, b, j);
                res = res.max((v - u[b][j]).abs());
                u[b][j] = v;
            }
        }
        if !outward {
            let v = update_junction(&u);
            res = res.max((v - u_o).abs());
            u_o = v;
        }
        let (est, done) = conv.check(res);
        stats = SolveStats {
            iterations: it,
            residual: res,
            error_estimate: est,
            converged: done,
        };
        if done {
            break;
        }
    }
    if !stats.converged {
        return Err(Error::NoConvergence {
            iters: stats.iterations,
            residual: stats.residual,
        });
    }
    Ok(EdgeValueFunction {
        h,
        n,
        junction: u_o,
        branches: u,
        stats,
    })
}
