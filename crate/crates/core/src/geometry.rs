//! The cross-shaped network, the penalty `d(x) = x1² x2²` and the projection onto the network.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Łojasiewicz constant `ν` in `|∇d| ≥ ν d^θ`.
pub const LOJA_NU: f64 = 2.0 * std::f64::consts::SQRT_2;
/// Łojasiewicz exponent `θ`.
pub const LOJA_THETA: f64 = 0.75;
/// `2^(-4/3)`, the dimensionless part of the invariance constant `κ`.
pub const KAPPA_COEFF: f64 = 0.396_850_262_992_049_9;
/// Default tolerance on the off-axis coordinate when deciding branch membership.
pub const DEFAULT_GAMMA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x1: f64,
    pub x2: f64,
}

impl PlanePoint {
    pub const ORIGIN: PlanePoint = PlanePoint { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    /// Unit vector at angle `theta`.
    pub fn polar(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, s)
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x1 * o.x1 + self.x2 * o.x2
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn dist(self, o: Self) -> f64 {
        (self - o).norm()
    }

    /// Quarter turn counterclockwise.
    pub fn perp(self) -> Self {
        Self::new(-self.x2, self.x1)
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    /// Radial clip onto the closed ball of radius `r`.
    pub fn clip(self, r: f64) -> Self {
        let n = self.norm();
        if n > r {
            self * (r / n)
        } else {
            self
        }
    }
}

impl Add for PlanePoint {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x1 + o.x1, self.x2 + o.x2)
    }
}

impl AddAssign for PlanePoint {
    fn add_assign(&mut self, o: Self) {
        self.x1 += o.x1;
        self.x2 += o.x2;
    }
}

impl Sub for PlanePoint {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x1 - o.x1, self.x2 - o.x2)
    }
}

impl Neg for PlanePoint {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x1, -self.x2)
    }
}

impl Mul<f64> for PlanePoint {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x1 * s, self.x2 * s)
    }
}

impl Mul<PlanePoint> for f64 {
    type Output = PlanePoint;
    fn mul(self, p: PlanePoint) -> PlanePoint {
        p * self
    }
}

/// `x1,x2`.
impl std::str::FromStr for PlanePoint {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut it = s.split(',').map(|c| c.trim().parse::<f64>());
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(a)), Some(Ok(b)), None) if a.is_finite() && b.is_finite() => Ok(PlanePoint::new(a, b)),
            _ => Err(Error::InvalidInput(format!("expected `x1,x2`, got `{s}`"))),
        }
    }
}

impl fmt::Display for PlanePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

/// Branches of the network, listed counterclockwise from the positive abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    E,
    N,
    W,
    S,
    O,
}

impl Branch {
    pub const EDGES: [Branch; 4] = [Branch::E, Branch::N, Branch::W, Branch::S];

    /// Direction vector `e_i`; zero for the junction.
    pub fn unit(self) -> PlanePoint {
        match self {
            Branch::E => PlanePoint::new(1.0, 0.0),
            Branch::N => PlanePoint::new(0.0, 1.0),
            Branch::W => PlanePoint::new(-1.0, 0.0),
            Branch::S => PlanePoint::new(0.0, -1.0),
            Branch::O => PlanePoint::ORIGIN,
        }
    }

    /// Position in `EDGES`, `None` for the junction.
    pub fn index(self) -> Option<usize> {
        match self {
            Branch::E => Some(0),
            Branch::N => Some(1),
            Branch::W => Some(2),
            Branch::S => Some(3),
            Branch::O => None,
        }
    }

    /// Branch obtained after `q` counterclockwise quarter turns.
    pub fn rotate(self, q: i32) -> Branch {
        match self.index() {
            None => Branch::O,
            Some(i) => Branch::EDGES[(i as i32 + q).rem_euclid(4) as usize],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::E => "E",
            Branch::N => "N",
            Branch::W => "W",
            Branch::S => "S",
            Branch::O => "O",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "E" | "e" => Ok(Branch::E),
            "N" | "n" => Ok(Branch::N),
            "W" | "w" => Ok(Branch::W),
            "S" | "s" => Ok(Branch::S),
            "O" | "o" => Ok(Branch::O),
            other => Err(Error::InvalidInput(format!("unknown branch `{other}`"))),
        }
    }
}

/// A point of the network as (branch, distance to the junction).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkPoint {
    branch: Branch,
    radius: f64,
}

impl NetworkPoint {
    pub const JUNCTION: NetworkPoint = NetworkPoint {
        branch: Branch::O,
        radius: 0.0,
    };

    /// A zero radius on any branch collapses to the junction.
    pub fn new(branch: Branch, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("radius {radius} must be finite and >= 0")));
        }
        if branch == Branch::O && radius != 0.0 {
            return Err(Error::InvalidInput("junction has radius 0".into()));
        }
        if radius == 0.0 {
            return Ok(Self::JUNCTION);
        }
        Ok(Self { branch, radius })
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn to_plane(self) -> PlanePoint {
        self.branch.unit() * self.radius
    }

    /// Exact inverse of `to_plane` for points on the axes.
    pub fn from_plane(p: PlanePoint) -> Option<Self> {
        classify(p, 0.0)
    }

    /// Path length inside the network.
    pub fn geodesic(self, o: Self) -> f64 {
        if self.branch == o.branch {
            (self.radius - o.radius).abs()
        } else {
            self.radius + o.radius
        }
    }

    pub fn rotate(self, q: i32) -> Self {
        Self {
            branch: self.branch.rotate(q),
            radius: self.radius,
        }
    }
}

impl fmt::Display for NetworkPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.branch, self.radius)
    }
}

/// `O`, a branch name for the unit point `e_i`, or `branch:radius`.
impl std::str::FromStr for NetworkPoint {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (b, r) = match s.split_once(':') {
            Some((b, r)) => {
                let r = r
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad radius in `{s}`")))?;
                (b.parse::<Branch>()?, r)
            }
            None => {
                let b = s.parse::<Branch>()?;
                (b, if b == Branch::O { 0.0 } else { 1.0 })
            }
        };
        NetworkPoint::new(b, r)
    }
}

/// `q` counterclockwise quarter turns of the plane.
pub fn rotate_quarter(p: PlanePoint, q: i32) -> PlanePoint {
    match q.rem_euclid(4) {
        0 => p,
        1 => PlanePoint::new(-p.x2, p.x1),
        2 => PlanePoint::new(-p.x1, -p.x2),
        _ => PlanePoint::new(p.x2, -p.x1),
    }
}

pub fn penalty(p: PlanePoint) -> f64 {
    let q = p.x1 * p.x2;
    q * q
}

pub fn penalty_gradient(p: PlanePoint) -> PlanePoint {
    let q = 2.0 * p.x1 * p.x2;
    PlanePoint::new(q * p.x2, q * p.x1)
}

/// Long-time limit of the gradient flow of `d`, in closed form along the hyperbolas
/// `x2² − x1² = const`. Points with `|x1| = |x2|` go to the junction.
pub fn project_to_network(p: PlanePoint) -> NetworkPoint {
    let (a1, a2) = (p.x1.abs(), p.x2.abs());
    if a1 == a2 {
        return NetworkPoint::JUNCTION;
    }
    if a2 > a1 {
        let r = ((a2 - a1) * (a2 + a1)).sqrt();
        let b = if p.x2 > 0.0 { Branch::N } else { Branch::S };
        NetworkPoint { branch: b, radius: r }
    } else {
        let r = ((a1 - a2) * (a1 + a2)).sqrt();
        let b = if p.x1 > 0.0 { Branch::E } else { Branch::W };
        NetworkPoint { branch: b, radius: r }
    }
}

/// `κ ε^(4/3)` with `κ = 2^(-4/3) f_inf^(4/3)`: sublevel sets of `d` above this level are
/// forward invariant.
pub fn invariance_threshold(f_inf: f64, eps: f64) -> f64 {
    KAPPA_COEFF * (f_inf * eps).powf(4.0 / 3.0)
}

/// Branch membership up to `tol` on the off-axis coordinate.
pub fn classify(p: PlanePoint, tol: f64) -> Option<NetworkPoint> {
    let (a1, a2) = (p.x1.abs(), p.x2.abs());
    if a1 <= tol && a2 <= tol {
        Some(NetworkPoint::JUNCTION)
    } else if a1 <= tol {
        let b = if p.x2 > 0.0 { Branch::N } else { Branch::S };
        Some(NetworkPoint { branch: b, radius: a2 })
    } else if a2 <= tol {
        let b = if p.x1 > 0.0 { Branch::E } else { Branch::W };
        Some(NetworkPoint { branch: b, radius: a1 })
    } else {
        None
    }
}

/// Branch of the axis nearest to `p`, with the junction when both coordinates are within `tol`.
pub fn nearest_branch(p: PlanePoint, tol: f64) -> Branch {
    let (a1, a2) = (p.x1.abs(), p.x2.abs());
    if a1 <= tol && a2 <= tol {
        Branch::O
    } else if a2 >= a1 {
        if p.x2 > 0.0 {
            Branch::N
        } else {
            Branch::S
        }
    } else if p.x1 > 0.0 {
        Branch::E
    } else {
        Branch::W
    }
}
