use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlSchedule, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::geometry::PlanePoint;
use crate::limits::LimitTrajectory;

/// Running cost `ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CostField {
    /// `ℓ ≡ value`.
    Constant { value: f64 },
    /// `ℓ(x) = min(|x|, cap)`.
    CappedNorm { cap: f64 },
    /// `ℓ(x) = |x|`, bounded by `bound` on the working region.
    Norm { bound: f64 },
    /// `ℓ(x, a) = 2 + a1 + a2 + |x2|`, bounded by `bound` on the working region.
    Counterexample { bound: f64 },
}

/// `constant:v`, `capped-norm:c`, `norm:b` or `counterexample:b`.
impl std::str::FromStr for CostField {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cannot parse cost `{s}`"));
        let (kind, v) = s.split_once(':').ok_or_else(bad)?;
        let v: f64 = v.trim().parse().map_err(|_| bad())?;
        let c = match kind.trim() {
            "constant" => CostField::Constant { value: v },
            "capped-norm" => CostField::CappedNorm { cap: v },
            "norm" => CostField::Norm { bound: v },
            "counterexample" => CostField::Counterexample { bound: v },
            _ => return Err(bad()),
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `f(x, a) = a` with `|a| <= 1` and a control-independent cost.
    Eikonal,
    Counterexample,
}

impl CostField {
    pub fn eval(&self, x: PlanePoint, a: PlanePoint) -> f64 {
        match *self {
            CostField::Constant { value } => value,
            CostField::CappedNorm { cap } => x.norm().min(cap),
            CostField::Norm { .. } => x.norm(),
            CostField::Counterexample { .. } => 2.0 + a.x1 + a.x2 + x.x2.abs(),
        }
    }

    /// Control-independent evaluation; only meaningful in eikonal mode.
    pub fn eval_state(&self, x: PlanePoint) -> f64 {
        self.eval(x, PlanePoint::ORIGIN)
    }

    /// Bound `M` on `|ℓ|`.
    pub fn bound(&self) -> f64 {
        match *self {
            CostField::Constant { value } => value.abs(),
            CostField::CappedNorm { cap } => cap.abs(),
            CostField::Norm { bound } | CostField::Counterexample { bound } => bound,
        }
    }

    /// Lipschitz constant in `x`.
    pub fn lipschitz(&self) -> f64 {
        match self {
            CostField::Constant { .. } => 0.0,
            _ => 1.0,
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            CostField::Counterexample { .. } => Mode::Counterexample,
            _ => Mode::Eikonal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            CostField::Constant { value } => value.is_finite(),
            CostField::CappedNorm { cap } => cap.is_finite() && cap >= 0.0,
            CostField::Norm { bound } | CostField::Counterexample { bound } => bound.is_finite() && bound >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("bad cost parameters {self:?}")))
        }
    }
}

/// Discounted problem `inf ∫ e^(−λt) ℓ(X, α) dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueProblem {
    pub lambda: f64,
    pub cost: CostField,
}

impl ValueProblem {
    pub fn new(lambda: f64, cost: CostField) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("discount rate must be positive, got {lambda}")));
        }
        cost.validate()?;
        Ok(Self { lambda, cost })
    }

    pub fn mode(&self) -> Mode {
        self.cost.mode()
    }

    /// `M / λ`.
    pub fn value_bound(&self) -> f64 {
        self.cost.bound() / self.lambda
    }

    /// `M e^(−λT) / λ`.
    pub fn tail_bound(&self, horizon: f64) -> f64 {
        self.cost.bound() * (-self.lambda * horizon).exp() / self.lambda
    }

    pub(crate) fn require_eikonal(&self) -> Result<()> {
        if self.mode() == Mode::Eikonal {
            Ok(())
        } else {
            Err(Error::InvalidInput("this solver needs a control-independent cost".into()))
        }
    }
}

/// A path with its control, on `[0, horizon]`.
pub trait CostPath {
    fn horizon(&self) -> f64;
    fn state(&self, t: f64) -> PlanePoint;
    fn control(&self, t: f64) -> PlanePoint;
    /// Times where the integrand may fail to be smooth.
    fn breaks(&self) -> Vec<f64>;
}

impl CostPath for TrajectoryRecord {
    fn horizon(&self) -> f64 {
        TrajectoryRecord::horizon(self)
    }

    fn state(&self, t: f64) -> PlanePoint {
        self.state_at(t)
    }

    fn control(&self, t: f64) -> PlanePoint {
        self.control.eval(t)
    }

    fn breaks(&self) -> Vec<f64> {
        self.times.clone()
    }
}

/// Limit trajectory driven by `control`, truncated at `horizon`.
pub struct LimitPath<'a> {
    pub path: &'a LimitTrajectory,
    pub control: &'a ControlSchedule,
    pub horizon: f64,
}

impl CostPath for LimitPath<'_> {
    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn state(&self, t: f64) -> PlanePoint {
        self.path.state_at(t)
    }

    fn control(&self, t: f64) -> PlanePoint {
        self.control.eval(t)
    }

    fn breaks(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.path.segments.iter().flat_map(|s| [s.t0, s.t1]).collect();
        b.extend(self.control.switch_times(self.horizon));
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostEstimate {
    /// `∫_0^T e^(−λt) ℓ dt`.
    pub value: f64,
    /// `M e^(−λT) / λ`; the infinite-horizon cost lies in `[value − tail, value + tail]`.
    pub tail: f64,
    pub horizon: f64,
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Longest sub-interval of the composite Gauss rule.
const MAX_PANEL: f64 = 0.05;

/// `∫_0^T e^(−λt) g(t) dt` by composite 5-point Gauss–Legendre between `breaks`.
pub fn discounted_integral(breaks: &[f64], horizon: f64, lambda: f64, g: impl Fn(f64) -> f64) -> f64 {
    let mut pts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < horizon)
        .collect();
    pts.push(0.0);
    pts.push(horizon);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let panels = ((b - a) / MAX_PANEL).ceil().max(1.0) as usize;
        let step = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * step;
            let hi = if p + 1 == panels { b } else { lo + step };
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for &(x, wt) in &GAUSS5 {
                let t = mid + half * x;
                total += wt * half * (-lambda * t).exp() * g(t);
            }
        }
    }
    total
}

/// Discounted cost of `path` on `[0, T]` with the tail bound for `[T, ∞)`.
pub fn cost_functional(path: &impl CostPath, prob: &ValueProblem) -> CostEstimate {
    let horizon = path.horizon();
    let value = discounted_integral(&path.breaks(), horizon, prob.lambda, |t| {
        prob.cost.eval(path.state(t), path.control(t))
    });
    CostEstimate {
        value,
        tail: prob.tail_bound(horizon),
        horizon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate_perturbed, IntegratorConfig};
    use approx::assert_relative_eq;

    #[test]
    fn parses_cost_specs() {
        assert_eq!("capped-norm:2".parse::<CostField>().unwrap(), CostField::CappedNorm { cap: 2.0 });
        assert_eq!("constant:1".parse::<CostField>().unwrap(), CostField::Constant { value: 1.0 });
        assert!("norm".parse::<CostField>().is_err());
        assert!("other:1".parse::<CostField>().is_err());
    }

    #[test]
    fn constant_cost_brackets_exact_value() {
        let prob = ValueProblem::new(0.5, CostField::Constant { value: 3.0 }).unwrap();
        let tr = integrate_perturbed(
            PlanePoint::new(1.0, 1.0),
            &ControlSchedule::constant(PlanePoint::ORIGIN),
            1e-2,
            &IntegratorConfig::with_horizon(10.0),
        )
        .unwrap();
        let c = cost_functional(&tr, &prob);
        assert!(c.value - c.tail <= 6.0 + 1e-12 && 6.0 <= c.value + c.tail + 1e-12);
        assert_relative_eq!(c.value + c.tail, 6.0, max_relative = 1e-12);
    }

    #[test]
    fn tail_bound_formula() {
        let prob = ValueProblem::new(1.0, CostField::Constant { value: 3.0 }).unwrap();
        assert_relative_eq!(prob.tail_bound(20.0), 3.0 * (-20f64).exp());
        assert!(prob.tail_bound(20.0) < 6.2e-9);
    }

    #[test]
    fn quadrature_is_exact_on_smooth_integrands() {
        // ∫_0^2 e^(−t) t dt = 1 − 3 e^(−2)
        let v = discounted_integral(&[], 2.0, 1.0, |t| t);
        assert_relative_eq!(v, 1.0 - 3.0 * (-2f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(ValueProblem::new(0.0, CostField::Constant { value: 1.0 }).is_err());
        assert!(ValueProblem::new(1.0, CostField::CappedNorm { cap: -1.0 }).is_err());
        let p = ValueProblem::new(1.0, CostField::Counterexample { bound: 5.0 }).unwrap();
        assert!(p.require_eikonal().is_err());
    }

    #[test]
    fn cost_serializes_with_kind_tag() {
        let s = serde_json::to_string(&CostField::CappedNorm { cap: 2.0 }).unwrap();
        assert_eq!(s, r#"{"kind":"capped-norm","cap":2.0}"#);
    }
}
