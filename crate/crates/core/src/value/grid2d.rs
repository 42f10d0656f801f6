//! Semi-Lagrangian value iteration for the penalized problem on a uniform planar grid.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{penalty_gradient, PlanePoint};

use super::cost::ValueProblem;

/// Axis-aligned box `[x1_min, x1_max] × [x2_min, x2_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
}

impl Region {
    pub fn new(x1_min: f64, x1_max: f64, x2_min: f64, x2_max: f64) -> Result<Self> {
        let r = Self {
            x1_min,
            x1_max,
            x2_min,
            x2_max,
        };
        if [x1_min, x1_max, x2_min, x2_max].iter().all(|v| v.is_finite()) && x1_max > x1_min && x2_max > x2_min {
            Ok(r)
        } else {
            Err(Error::InvalidInput(format!("bad region {r:?}")))
        }
    }

    /// `[−r, r]²`.
    pub fn square(r: f64) -> Self {
        Self {
            x1_min: -r,
            x1_max: r,
            x2_min: -r,
            x2_max: r,
        }
    }

    /// Parses `x1_min,x1_max,x2_min,x2_max`.
    pub fn parse(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidInput(format!("cannot parse region `{s}`")))?;
        match v[..] {
            [a, b, c, d] => Self::new(a, b, c, d),
            _ => Err(Error::InvalidInput(format!("region needs four numbers, got `{s}`"))),
        }
    }

    pub fn expand(&self, m: f64) -> Self {
        Self {
            x1_min: self.x1_min - m,
            x1_max: self.x1_max + m,
            x2_min: self.x2_min - m,
            x2_max: self.x2_max + m,
        }
    }

    pub fn contains(&self, p: PlanePoint, tol: f64) -> bool {
        p.x1 >= self.x1_min - tol && p.x1 <= self.x1_max + tol && p.x2 >= self.x2_min - tol && p.x2 <= self.x2_max + tol
    }

    pub fn clamp(&self, p: PlanePoint) -> PlanePoint {
        PlanePoint::new(p.x1.clamp(self.x1_min, self.x1_max), p.x2.clamp(self.x2_min, self.x2_max))
    }

    /// Largest `|x|` over the box.
    pub fn max_norm(&self) -> f64 {
        let a = self.x1_min.abs().max(self.x1_max.abs());
        let b = self.x2_min.abs().max(self.x2_max.abs());
        a.hypot(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sweep {
    /// Reads the previous iterate only; nodes update in parallel.
    Jacobi,
    /// In-place sweeps in four alternating orders.
    GaussSeidel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Region of interest; the computational box adds `margin` on every side.
    pub region: Region,
    pub h: f64,
    pub margin: f64,
    /// Number of unit directions; the zero control is always included.
    pub directions: usize,
    /// `h_loc <= c_step ε`.
    pub c_step: f64,
    /// `h_loc <= courant h / (1 + |∇d|/ε)`.
    pub courant: f64,
    pub fixpoint_tol: f64,
    pub max_iter: usize,
    pub sweep: Sweep,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            region: Region::square(2.0),
            h: 0.02,
            margin: 0.4,
            directions: 32,
            c_step: 1.0,
            courant: 1.0,
            fixpoint_tol: 1e-10,
            max_iter: 1_000_000,
            sweep: Sweep::GaussSeidel,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        Region::new(self.region.x1_min, self.region.x1_max, self.region.x2_min, self.region.x2_max)?;
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(pos(self.h) && self.margin >= 0.0 && pos(self.c_step) && pos(self.courant) && pos(self.fixpoint_tol)) {
            return Err(Error::InvalidInput("grid spacing, step factors and tolerance must be positive".into()));
        }
        if self.directions < 4 || self.max_iter == 0 {
            return Err(Error::InvalidInput("need at least 4 directions and one iteration".into()));
        }
        Ok(())
    }

    /// Computational box.
    pub fn bbox(&self) -> Region {
        self.region.expand(self.margin)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// Last sup-change between iterates.
    pub residual: f64,
    /// Geometric estimate of the remaining error.
    pub error_estimate: f64,
    pub converged: bool,
}

/// Stops once the sup-change, or its geometric tail estimate, is below `tol`. The tail
/// estimate uses the worst contraction ratio over the last `WINDOW` iterations.
pub(crate) struct Convergence {
    tol: f64,
    prev: f64,
    ratios: std::collections::VecDeque<f64>,
}

impl Convergence {
    const WINDOW: usize = 10;

    pub(crate) fn new(tol: f64) -> Self {
        Self {
            tol,
            prev: f64::INFINITY,
            ratios: std::collections::VecDeque::with_capacity(Self::WINDOW),
        }
    }

    /// Returns the error estimate and whether iteration can stop.
    pub(crate) fn check(&mut self, res: f64) -> (f64, bool) {
        if self.prev.is_finite() {
            if self.ratios.len() == Self::WINDOW {
                self.ratios.pop_front();
            }
            self.ratios.push_back(if self.prev > 0.0 { res / self.prev } else { 0.0 });
        }
        self.prev = res;
        let rho = self.ratios.iter().copied().fold(0.0, f64::max);
        let est = if self.ratios.len() == Self::WINDOW && rho < 1.0 {
            res * rho / (1.0 - rho)
        } else {
            f64::INFINITY
        };
        (est, res < self.tol || est < self.tol)
    }
}

/// `V^ε` on the nodes of a uniform grid; values are stored row by row in `x1`.
#[derive(Debug, Clone, Serialize)]
pub struct GridValueFunction {
    pub eps: f64,
    pub bbox: Region,
    pub h: f64,
    pub n1: usize,
    pub n2: usize,
    pub values: Vec<f64>,
    pub stats: SolveStats,
}

impl GridValueFunction {
    pub fn node(&self, i1: usize, i2: usize) -> PlanePoint {
        PlanePoint::new(self.bbox.x1_min + i1 as f64 * self.h, self.bbox.x2_min + i2 as f64 * self.h)
    }

    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[i2 * self.n1 + i1]
    }

    /// Bilinear interpolation, clamped to the box.
    pub fn eval(&self, p: PlanePoint) -> f64 {
        let (idx, w) = stencil(self.bbox, self.h, self.n1, self.n2, p);
        idx.iter().zip(&w).map(|(&k, &wk)| wk * self.values[k]).sum()
    }

    /// Node indices `(i1, i2)` whose points lie in `region`.
    pub fn nodes_in(&self, region: &Region) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i2 in 0..self.n2 {
            for i1 in 0..self.n1 {
                if region.contains(self.node(i1, i2), 1e-9 * self.h) {
                    out.push((i1, i2));
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes `x1,x2,u` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x1,x2,u")?;
        for i2 in 0..self.n2 {
            for i1 in 0..self.n1 {
                let p = self.node(i1, i2);
                writeln!(w, "{},{},{}", p.x1, p.x2, self.at(i1, i2))?;
            }
        }
        Ok(())
    }
}

fn grid_size(bbox: Region, h: f64) -> (usize, usize) {
    let n1 = ((bbox.x1_max - bbox.x1_min) / h).round() as usize + 1;
    let n2 = ((bbox.x2_max - bbox.x2_min) / h).round() as usize + 1;
    (n1, n2)
}

/// Bilinear stencil of `p` after clamping to the box.
fn stencil(bbox: Region, h: f64, n1: usize, n2: usize, p: PlanePoint) -> ([usize; 4], [f64; 4]) {
    let s1 = ((p.x1 - bbox.x1_min) / h).clamp(0.0, (n1 - 1) as f64);
    let s2 = ((p.x2 - bbox.x2_min) / h).clamp(0.0, (n2 - 1) as f64);
    let i1 = (s1.floor() as usize).min(n1 - 2);
    let i2 = (s2.floor() as usize).min(n2 - 2);
    let (a, b) = (s1 - i1 as f64, s2 - i2 as f64);
    let k = i2 * n1 + i1;
    (
        [k, k + 1, k + n1, k + n1 + 1],
        [(1.0 - a) * (1.0 - b), a * (1.0 - b), (1.0 - a) * b, a * b],
    )
}

struct Kernel {
    bbox: Region,
    h: f64,
    n1: usize,
    n2: usize,
    lambda: f64,
    controls: Vec<PlanePoint>,
    /// Per node: point, `ℓ`, `∇d/ε`, local step.
    nodes: Vec<(PlanePoint, f64, PlanePoint, f64)>,
}

impl Kernel {
    /// `min_a (h ℓ + (1 − λh) I[u](x + h(a − ∇d/ε)))`, with the weight on the node itself
    /// solved for exactly.
    fn update(&self, k: usize, u: &[f64]) -> f64 {
        let (x, ell, g, hl) = self.nodes[k];
        let beta = 1.0 - self.lambda * hl;
        let mut best = f64::INFINITY;
        for &a in &self.controls {
            let foot = x + (a - g) * hl;
            let (idx, w) = stencil(self.bbox, self.h, self.n1, self.n2, foot);
            let mut others = 0.0;
            let mut w_self = 0.0;
            for j in 0..4 {
                if idx[j] == k {
                    w_self += w[j];
                } else {
                    others += w[j] * u[idx[j]];
                }
            }
            let cand = (hl * ell + beta * others) / (1.0 - beta * w_self);
            if cand < best {
                best = cand;
            }
        }
        best
    }
}

/// Solves `u(x) = min_a {h ℓ(x) + (1 − λh) u(x + h(a − ∇d(x)/ε))}` on the grid of `spec`.
/// Foot points leaving the box are clamped onto it.
pub fn solve_value_eps(prob: &ValueProblem, eps: f64, spec: &GridSpec) -> Result<GridValueFunction> {
    prob.require_eikonal()?;
    spec.validate()?;
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let bbox = spec.bbox();
    let h = spec.h;
    let (n1, n2) = grid_size(bbox, h);
    if n1 < 2 || n2 < 2 {
        return Err(Error::InvalidInput("grid needs at least two nodes per axis".into()));
    }
    let mut controls: Vec<PlanePoint> = (0..spec.directions)
        .map(|i| PlanePoint::polar(std::f64::consts::TAU * i as f64 / spec.directions as f64))
        .collect();
    controls.push(PlanePoint::ORIGIN);
    let mut nodes = Vec::with_capacity(n1 * n2);
    for i2 in 0..n2 {
        for i1 in 0..n1 {
            let x = PlanePoint::new(bbox.x1_min + i1 as f64 * h, bbox.x2_min + i2 as f64 * h);
            let g = penalty_gradient(x) * (1.0 / eps);
            let hl = (spec.c_step * eps).min(spec.courant * h / (1.0 + g.norm()));
            if prob.lambda * hl >= 1.0 {
                return Err(Error::InvalidInput("local step too large for the discount rate".into()));
            }
            nodes.push((x, prob.cost.eval_state(x), g, hl));
        }
    }
    let kernel = Kernel {
        bbox,
        h,
        n1,
        n2,
        lambda: prob.lambda,
        controls,
        nodes,
    };

    let mut u: Vec<f64> = kernel.nodes.iter().map(|n| n.1 / prob.lambda).collect();
    let mut conv = Convergence::new(spec.fixpoint_tol);
    let mut stats = SolveStats::default();
    match spec.sweep {
        Sweep::Jacobi => {
            let mut next = u.clone();
            for it in 1..=spec.max_iter {
                next.par_iter_mut().enumerate().for_each(|(k, v)| *v = kernel.update(k, &u));
                let res = u
                    .par_iter()
                    .zip(&next)
                    .map(|(a, b)| (a - b).abs())
                    .reduce(|| 0.0, f64::max);
                std::mem::swap(&mut u, &mut next);
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
        }
        Sweep::GaussSeidel => {
            for it in 1..=spec.max_iter {
                let (rev1, rev2) = ((it - 1) % 2 == 1, ((it - 1) / 2) % 2 == 1);
                let mut res: f64 = 0.0;
                for j2 in 0..n2 {
                    let i2 = if rev2 { n2 - 1 - j2 } else { j2 };
                    for j1 in 0..n1 {
                        let i1 = if rev1 { n1 - 1 - j1 } else { j1 };
                        let k = i2 * n1 + i1;
                        let v = kernel.update(k, &u);
                        res = res.max((v - u[k]).abs());
                        u[k] = v;
                    }
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
        }
    }
    if !stats.converged {
        return Err(Error::NoConvergence {
            iters: stats.iterations,
            residual: stats.residual,
        });
    }
    Ok(GridValueFunction {
        eps,
        bbox,
        h,
        n1,
        n2,
        values: u,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::cost::CostField;

    fn small(sweep: Sweep) -> GridSpec {
        GridSpec {
            region: Region::square(1.0),
            h: 0.1,
            margin: 0.2,
            sweep,
            ..GridSpec::default()
        }
    }

    #[test]
    fn constant_cost_is_exact() {
        let prob = ValueProblem::new(0.7, CostField::Constant { value: 1.0 }).unwrap();
        for sweep in [Sweep::Jacobi, Sweep::GaussSeidel] {
            let v = solve_value_eps(&prob, 0.1, &small(sweep)).unwrap();
            for &u in &v.values {
                assert!((u - 1.0 / 0.7).abs() <= 1e-12, "{u}");
            }
        }
    }

    #[test]
    fn sweeps_reach_the_same_fixed_point() {
        let prob = ValueProblem::new(1.0, CostField::CappedNorm { cap: 2.0 }).unwrap();
        let a = solve_value_eps(&prob, 0.1, &small(Sweep::Jacobi)).unwrap();
        let b = solve_value_eps(&prob, 0.1, &small(Sweep::GaussSeidel)).unwrap();
        let diff = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-8, "{diff}");
        assert!(a.max_abs() <= 2.0 + 1e-12);
    }

    #[test]
    fn monotone_in_the_cost() {
        let lo = ValueProblem::new(1.0, CostField::CappedNorm { cap: 1.0 }).unwrap();
        let hi = ValueProblem::new(1.0, CostField::CappedNorm { cap: 2.0 }).unwrap();
        let a = solve_value_eps(&lo, 0.1, &small(Sweep::GaussSeidel)).unwrap();
        let b = solve_value_eps(&hi, 0.1, &small(Sweep::GaussSeidel)).unwrap();
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| x <= &(y + 1e-12)));
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let prob = ValueProblem::new(1.0, CostField::CappedNorm { cap: 2.0 }).unwrap();
        let v = solve_value_eps(&prob, 0.1, &small(Sweep::GaussSeidel)).unwrap();
        assert_eq!(v.eval(v.node(3, 5)), v.at(3, 5));
        assert_eq!(v.eval(PlanePoint::new(100.0, 100.0)), v.at(v.n1 - 1, v.n2 - 1));
        let mut buf = Vec::new();
        v.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("x1,x2,u\n"));
        assert_eq!(s.lines().count(), v.n1 * v.n2 + 1);
    }

    #[test]
    fn region_parsing() {
        let r = Region::parse("-2,2,-1,3").unwrap();
        assert_eq!(r.x2_max, 3.0);
        assert!(Region::parse("1,2,3").is_err());
        assert!(Region::parse("2,1,0,1").is_err());
        assert!((Region::square(3.0).max_norm() - 3.0 * std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn non_eikonal_cost_is_rejected() {
        let prob = ValueProblem::new(1.0, CostField::Counterexample { bound: 5.0 }).unwrap();
        assert!(solve_value_eps(&prob, 0.1, &small(Sweep::Jacobi)).is_err());
    }
}
