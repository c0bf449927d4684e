//! Composite Gauss–Legendre rules with geometric grading toward an endpoint.
//!
//! The singular integrals in this crate (the per-mode Gagliardo kernel and the
//! Fourier coefficients of `|x|^γ`) have an integrable power-type singularity at
//! one endpoint and oscillate elsewhere. Both are handled by the same rule:
//! geometrically shrinking panels next to the singular endpoint followed by
//! uniform panels sized to the highest frequency of the integrand.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(points: usize) -> Self {
        assert!(points >= 1, "Gauss-Legendre rule needs at least one point");
        let n = points;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Parameters of the graded composite rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Number of geometric panels between the singular endpoint and the first uniform panel.
    pub levels: usize,
    /// Gauss points per panel.
    pub points: usize,
    /// Geometric ratio between consecutive graded panels.
    pub ratio: f64,
    /// Uniform panels per half-period of the highest frequency in the integrand.
    pub panels_per_half_period: usize,
    /// Relative change tolerated between a rule and its refinement.
    pub rel_tol: f64,
    /// How many times the rule may be refined before giving up.
    pub max_refinements: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            levels: 40,
            points: 16,
            ratio: 0.5,
            panels_per_half_period: 1,
            rel_tol: 1e-8,
            max_refinements: 4,
        }
    }
}

impl QuadratureSpec {
    /// The next rule in the refinement sequence: more graded levels, twice the uniform panels.
    pub fn refined(&self) -> Self {
        Self {
            levels: self.levels + 10,
            panels_per_half_period: self.panels_per_half_period * 2,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points == 0 || self.levels == 0 || self.panels_per_half_period == 0 {
            return Err(Error::invalid("quadrature", "points, levels and panels must be positive"));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::invalid("quadrature", format!("grading ratio {} not in (0,1)", self.ratio)));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("quadrature", "rel_tol must be positive"));
        }
        Ok(())
    }
}

/// A flattened list of quadrature nodes and weights on `[a, b]`, graded toward `a`.
#[derive(Clone, Debug)]
pub struct CompositeRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl CompositeRule {
    /// Builds a rule on `[a, b]` whose panels shrink geometrically toward `a` and
    /// whose remaining panels resolve oscillations of angular frequency up to `omega`.
    pub fn graded(a: f64, b: f64, omega: f64, spec: &QuadratureSpec) -> Self {
        assert!(b > a, "empty interval");
        let gauss = GaussLegendre::new(spec.points);
        let len = b - a;
        let half_periods = (omega.abs() * len / std::f64::consts::PI).ceil().max(1.0) as usize;
        let uniform = (half_periods * spec.panels_per_half_period).max(4);
        let width = len / uniform as f64;

        let mut nodes = Vec::with_capacity(spec.points * (uniform + spec.levels + 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        let mut push_panel = |lo: f64, hi: f64| {
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (&x, &w) in gauss.nodes().iter().zip(gauss.weights()) {
                nodes.push(mid + half * x);
                weights.push(w * half);
            }
        };

        // First uniform panel [a, a+width] is replaced by the graded sequence.
        let mut hi = width;
        for _ in 0..spec.levels {
            let lo = hi * spec.ratio;
            push_panel(a + lo, a + hi);
            hi = lo;
        }
        push_panel(a, a + hi);
        for p in 1..uniform {
            let lo = a + width * p as f64;
            let hi = if p + 1 == uniform { b } else { a + width * (p + 1) as f64 };
            push_panel(lo, hi);
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Integrates `f` over `[a, b]` with the graded rule, refining until two
/// consecutive rules agree to `spec.rel_tol`.
pub fn integrate_graded<F: Fn(f64) -> f64>(
    a: f64,
    b: f64,
    omega: f64,
    spec: &QuadratureSpec,
    what: impl Fn() -> String,
    f: F,
) -> Result<f64> {
    spec.validate()?;
    let mut current = *spec;
    let mut value = CompositeRule::graded(a, b, omega, &current).integrate(&f);
    let mut change = f64::INFINITY;
    for _ in 0..=spec.max_refinements {
        let next = current.refined();
        let refined = CompositeRule::graded(a, b, omega, &next).integrate(&f);
        change = (refined - value).abs() / refined.abs().max(f64::MIN_POSITIVE);
        if change <= spec.rel_tol || (refined - value).abs() <= f64::EPSILON * 16.0 {
            return Ok(refined);
        }
        value = refined;
        current = next;
    }
    Err(Error::Quadrature {
        what: what(),
        achieved: change,
        target: spec.rel_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let g = GaussLegendre::new(16);
        for deg in 0..32 {
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let got = g.integrate(-1.0, 1.0, |x| x.powi(deg));
            assert!((got - exact).abs() < 1e-14, "degree {deg}: {got} vs {exact}");
        }
        let w: f64 = g.weights().iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn odd_point_rule_has_center_node() {
        let g = GaussLegendre::new(5);
        assert!(g.nodes()[2].abs() < 1e-16);
        assert!((g.weights()[2] - 128.0 / 225.0).abs() < 1e-14);
    }

    #[test]
    fn graded_rule_handles_endpoint_power_singularity() {
        let spec = QuadratureSpec::default();
        // ∫_0^1 x^{-1/2} dx = 2
        let v = integrate_graded(0.0, 1.0, 0.0, &spec, || "x^-1/2".into(), |x| x.powf(-0.5)).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "{v}");
        // ∫_0^π x^{0.3} dx
        let v = integrate_graded(0.0, PI, 0.0, &spec, || "x^0.3".into(), |x| x.powf(0.3)).unwrap();
        let exact = PI.powf(1.3) / 1.3;
        assert!((v - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn oscillatory_integrand_resolved() {
        let spec = QuadratureSpec::default();
        let m = 301.0;
        let v = integrate_graded(0.0, PI, m, &spec, || "cos".into(), |x| x * (m * x).cos()).unwrap();
        // ∫_0^π x cos(mx) dx = ((-1)^m - 1)/m² for integer m
        let exact = (-2.0) / (m * m);
        assert!((v - exact).abs() < 1e-13, "{v} vs {exact}");
    }

    #[test]
    fn non_convergence_is_reported() {
        let spec = QuadratureSpec {
            max_refinements: 0,
            rel_tol: 1e-300,
            ..QuadratureSpec::default()
        };
        let err = integrate_graded(0.0, 1.0, 0.0, &spec, || "x^-0.999".into(), |x| x.powf(-0.999));
        assert!(matches!(err, Err(Error::Quadrature { .. })));
    }
}
