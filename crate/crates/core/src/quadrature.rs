//! Deterministic quadrature for oscillatory integrands.
//!
//! Two building blocks: fixed composite rules on uniform panels (used for the
//! long Hardy–Littlewood integrals and the ladder cache) and an adaptive
//! Gauss–Kronrod 7/15 scheme (used for the short product integrals whose
//! integrand is compressed by the ladder map). Panel results are always
//! reduced in index order with compensated summation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::NeumaierSum;

/// Composite rule applied on each uniform panel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    /// Five-point Gauss–Legendre per panel.
    #[default]
    GaussLegendre5,
    /// Simpson's rule per panel (endpoints and midpoint).
    Simpson,
}

/// Sampling rule for oscillatory integrals.
///
/// The node spacing is `π / (samples_per_oscillation · θ′(T))`, i.e.
/// `samples_per_oscillation` nodes per spacing of the t̄ sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub samples_per_oscillation: u32,
    pub rule: QuadratureRule,
    /// Step-halving tolerance. Absolute for integrals of magnitude below one,
    /// relative to the integral above that.
    pub abs_tol: f64,
}

impl std::str::FromStr for QuadratureRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss-legendre5" => Ok(QuadratureRule::GaussLegendre5),
            "simpson" => Ok(QuadratureRule::Simpson),
            other => Err(Error::InvalidConfig(format!(
                "unknown quadrature rule '{other}' (expected gauss-legendre5 or simpson)"
            ))),
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { samples_per_oscillation: 8, rule: QuadratureRule::GaussLegendre5, abs_tol: 1e-5 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_oscillation < 8 {
            return Err(Error::InvalidConfig(format!(
                "samples_per_oscillation = {} must be at least 8",
                self.samples_per_oscillation
            )));
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("abs_tol = {} must be positive", self.abs_tol)));
        }
        Ok(())
    }

    /// Panel width for an integrand oscillating at angular rate `rate` (θ′).
    pub fn panel_width(&self, rate: f64) -> f64 {
        let spacing = std::f64::consts::PI / (self.samples_per_oscillation as f64 * rate);
        spacing * self.rule.nodes_per_panel() as f64
    }

    /// Tolerance scaled to the magnitude of `value`.
    pub fn tolerance_for(&self, value: f64) -> f64 {
        self.abs_tol * value.abs().max(1.0)
    }
}

/// Node positions on [−1, 1] and weights of the per-panel rule.
pub const GL5_NODES: [(f64, f64); 5] = [
    (-GL5_X1, GL5_W1),
    (-GL5_X2, GL5_W2),
    (0.0, GL5_W0),
    (GL5_X2, GL5_W2),
    (GL5_X1, GL5_W1),
];
pub const SIMPSON_NODES: [(f64, f64); 3] = [(-1.0, 1.0 / 3.0), (0.0, 4.0 / 3.0), (1.0, 1.0 / 3.0)];

const GL5_X1: f64 = 0.906_179_845_938_664;
const GL5_X2: f64 = 0.538_469_310_105_683_1;
const GL5_W1: f64 = 0.236_926_885_056_189_08;
const GL5_W2: f64 = 0.478_628_670_499_366_47;
const GL5_W0: f64 = 128.0 / 225.0;

impl QuadratureRule {
    /// New function evaluations contributed by each panel of a composite rule.
    pub fn nodes_per_panel(self) -> usize {
        match self {
            QuadratureRule::GaussLegendre5 => 5,
            QuadratureRule::Simpson => 2,
        }
    }

    /// Nodes and weights of one panel mapped to [−1, 1].
    pub fn nodes(self) -> &'static [(f64, f64)] {
        match self {
            QuadratureRule::GaussLegendre5 => &GL5_NODES,
            QuadratureRule::Simpson => &SIMPSON_NODES,
        }
    }

    /// Integral of `f` over a single panel `[a, b]`.
    #[inline]
    pub fn panel<F: FnMut(f64) -> f64>(self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        match self {
            QuadratureRule::GaussLegendre5 => {
                let mut acc = NeumaierSum::new();
                acc.add(GL5_W1 * f(mid - half * GL5_X1));
                acc.add(GL5_W2 * f(mid - half * GL5_X2));
                acc.add(GL5_W0 * f(mid));
                acc.add(GL5_W2 * f(mid + half * GL5_X2));
                acc.add(GL5_W1 * f(mid + half * GL5_X1));
                half * acc.value()
            }
            QuadratureRule::Simpson => (b - a) / 6.0 * (f(a) + 4.0 * f(mid) + f(b)),
        }
    }

    /// Composite rule over `panels` equal panels of `[a, b]`.
    pub fn composite<F: FnMut(f64) -> f64>(self, mut f: F, a: f64, b: f64, panels: usize) -> f64 {
        if panels == 0 || a == b {
            return 0.0;
        }
        let width = (b - a) / panels as f64;
        match self {
            QuadratureRule::Simpson => {
                // share panel endpoints
                let mut acc = NeumaierSum::new();
                let mut left = f(a);
                for i in 0..panels {
                    let x0 = a + i as f64 * width;
                    let x1 = if i + 1 == panels { b } else { a + (i + 1) as f64 * width };
                    let right = f(x1);
                    acc.add((x1 - x0) / 6.0 * (left + 4.0 * f(0.5 * (x0 + x1)) + right));
                    left = right;
                }
                acc.value()
            }
            QuadratureRule::GaussLegendre5 => {
                let mut acc = NeumaierSum::new();
                for i in 0..panels {
                    let x0 = a + i as f64 * width;
                    let x1 = if i + 1 == panels { b } else { a + (i + 1) as f64 * width };
                    acc.add(self.panel(&mut f, x0, x1));
                }
                acc.value()
            }
        }
    }
}

/// Result of a step-halving composite integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepHalving {
    pub value: f64,
    pub coarse: f64,
    pub panels: usize,
}

impl StepHalving {
    pub fn difference(&self) -> f64 {
        (self.value - self.coarse).abs()
    }
}

/// Composite integration at the spec's spacing and at half of it; errors when
/// the two disagree beyond the tolerance.
pub fn integrate_with_halving<F>(f: F, a: f64, b: f64, rate: f64, spec: &QuadratureSpec) -> Result<StepHalving>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(StepHalving { value: 0.0, coarse: 0.0, panels: 0 });
    }
    let width = spec.panel_width(rate);
    let coarse_panels = (((b - a) / width).ceil() as usize).max(1);
    let coarse = spec.rule.composite(&f, a, b, coarse_panels);
    let value = spec.rule.composite(&f, a, b, 2 * coarse_panels);
    let result = StepHalving { value, coarse, panels: 2 * coarse_panels };
    let tolerance = spec.tolerance_for(value);
    if result.difference() > tolerance {
        return Err(Error::QuadratureTolerance { difference: result.difference(), tolerance });
    }
    Ok(result)
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// One Gauss–Kronrod 15-point panel: `(kronrod, |kronrod - gauss|)`.
pub fn gk15<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    let fc = f(center);
    let mut kronrod = NeumaierSum::new();
    let mut gauss = NeumaierSum::new();
    kronrod.add(WGK[7] * fc);
    gauss.add(WG[3] * fc);
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod.add(WGK[j] * pair);
        if j % 2 == 1 {
            gauss.add(WG[j / 2] * pair);
        }
    }
    let k = kronrod.value() * half;
    let g = gauss.value() * half;
    (k, (k - g).abs())
}

/// Adaptive Gauss–Kronrod integration.
///
/// `[a, b]` is first split into `initial_panels` equal pieces; any piece whose
/// Kronrod/Gauss discrepancy exceeds its share of the tolerance is bisected,
/// depth-first and left to right, so the evaluation order is fixed.
pub fn adaptive_gk<F>(mut f: F, a: f64, b: f64, tol: f64, initial_panels: usize, max_depth: u32) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    if a == b {
        return Ok((0.0, 0.0));
    }
    let panels = initial_panels.max(1);
    let width = (b - a) / panels as f64;
    let mut total = NeumaierSum::new();
    let mut error = 0.0;
    let mut stack: Vec<(f64, f64, u32)> = Vec::new();
    for i in (0..panels).rev() {
        let x0 = a + i as f64 * width;
        let x1 = if i + 1 == panels { b } else { a + (i + 1) as f64 * width };
        stack.push((x0, x1, 0));
    }
    let length = b - a;
    while let Some((x0, x1, depth)) = stack.pop() {
        let (value, err) = gk15(&mut f, x0, x1);
        let share = tol * (x1 - x0) / length;
        if err <= share || depth >= max_depth {
            if err > share {
                return Err(Error::QuadratureTolerance { difference: err, tolerance: share });
            }
            total.add(value);
            error += err;
        } else {
            let mid = 0.5 * (x0 + x1);
            stack.push((mid, x1, depth + 1));
            stack.push((x0, mid, depth + 1));
        }
    }
    Ok((total.value(), error))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre5_is_exact_to_degree_nine() {
        for degree in 0..=9 {
            let exact = (1.0f64.powi(degree + 1) - (-1.0f64).powi(degree + 1)) / (degree + 1) as f64;
            let got = QuadratureRule::GaussLegendre5.panel(|x| x.powi(degree), -1.0, 1.0);
            assert!((got - exact).abs() < 1e-15, "degree {degree}: {got} vs {exact}");
        }
        let d10 = QuadratureRule::GaussLegendre5.panel(|x| x.powi(10), -1.0, 1.0);
        assert!((d10 - 2.0 / 11.0).abs() > 1e-6);
    }

    #[test]
    fn kronrod_is_exact_to_degree_22_and_gauss_to_13() {
        for degree in 0..=22 {
            let exact = if degree % 2 == 0 { 2.0 / (degree + 1) as f64 } else { 0.0 };
            let (k, diff) = gk15(|x| x.powi(degree), -1.0, 1.0);
            assert!((k - exact).abs() < 1e-14, "kronrod degree {degree}");
            if degree <= 13 {
                assert!(diff < 1e-14, "gauss degree {degree}: {diff}");
            }
        }
    }

    #[test]
    fn simpson_exact_for_cubics() {
        let got = QuadratureRule::Simpson.composite(|x| x * x * x - 2.0 * x + 1.0, 0.0, 3.0, 1);
        assert!((got - (81.0 / 4.0 - 9.0 + 3.0)).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integral_over_many_periods() {
        // ∫_0^200 cos(7x) dx = sin(1400)/7
        let exact = (1400.0f64).sin() / 7.0;
        let spec = QuadratureSpec::default();
        let got = integrate_with_halving(|x| (7.0 * x).cos(), 0.0, 200.0, 3.5, &spec).unwrap();
        assert!((got.value - exact).abs() < 1e-9, "{} vs {exact}", got.value);
    }

    #[test]
    fn halving_rejects_undersampled_integrand() {
        let spec = QuadratureSpec { abs_tol: 1e-12, ..QuadratureSpec::default() };
        // rate 0.1 claims far slower oscillation than the integrand has
        let result = integrate_with_halving(|x| (40.0 * x).cos(), 0.0, 50.0, 0.1, &spec);
        assert!(matches!(result, Err(Error::QuadratureTolerance { .. })));
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let f = |x: f64| 1.0 / (1e-4 + x * x);
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        let (got, _) = adaptive_gk(f, -1.0, 1.0, 1e-9, 4, 40).unwrap();
        assert!((got - exact).abs() < 1e-8, "{got} vs {exact}");
    }
}
