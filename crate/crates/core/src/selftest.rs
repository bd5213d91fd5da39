//! Fast invariant checks runnable from the command line.

use crate::error::Result;
use crate::grover::{
    self, adder_circuit, multi_marked_uncompute_failure, success_probability, GroverConfig,
    IndicatorOracle, MultiMarkedOracle,
};
use crate::kernel::{kernel_circuit, kernel_exact, GramMatrix, KernelMode};
use crate::learn::{margin_gap, separability_census};
use crate::pattern::{pattern_match, TextInstance};
use crate::sim::{self, StateVector};
use crate::svm::{self, Label};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, run: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match run() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

pub fn run_all() -> Vec<Check> {
    vec![
        check("kernel circuit matches closed form (N=8)", || {
            let mut worst = 0.0f64;
            for width in [1, 2] {
                for i in 0..8 {
                    for j in 0..8 {
                        let (oi, oj) = (IndicatorOracle::new(8, i)?, IndicatorOracle::new(8, j)?);
                        let (v, _) = kernel_circuit(&oi, &oj, width, &GroverConfig::ideal())?;
                        worst = worst.max((v - kernel_exact(i, j, width, 8)?).abs());
                    }
                }
            }
            Ok((worst < 1e-10, format!("max deviation {worst:.2e}")))
        }),
        check("adder is modular addition (n=3)", || {
            let c = adder_circuit(3)?;
            let mut bad = 0;
            for i in 0..8 {
                for j in 0..8 {
                    let out = sim::run(&c, &StateVector::basis(6, i | (j << 3))?)?;
                    if (out.amplitude(((i + j) % 8) | (j << 3)).re - 1.0).abs() > 1e-12 {
                        bad += 1;
                    }
                }
            }
            Ok((bad == 0, format!("{bad} wrong of 64")))
        }),
        check("Grover success probability (N=4..32)", || {
            let mut worst = 0.0f64;
            for n in [4, 8, 16, 32] {
                let k = grover::optimal_iterations(1, n);
                let sim_p = grover::simulated_success_probability(n, n / 3, k)?;
                worst = worst.max((sim_p - success_probability(n, k)).abs());
            }
            Ok((worst < 1e-9, format!("max deviation {worst:.2e}")))
        }),
        check("halfspace separability (N=64, M=4)", || {
            let c = separability_census(5, 4, 64)?;
            let expected = 32 - 4;
            let ok = c.positive_interior == expected
                && c.positive_interior_at_delta == expected
                && c.negative_interior_at_zero == expected
                && c.misclassified as f64 <= margin_gap(4, 64) * 64.0;
            Ok((ok, format!("{c:?}")))
        }),
        check("SVM two-point closed form", || {
            let g = GramMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]], KernelMode::Exact)?;
            let m = svm::train(&g, &[Label::Positive, Label::Negative], 10.0, 1e-10)?;
            let ok = (m.dual_coeffs[0] - 2.0).abs() < 1e-6
                && (m.dual_coeffs[1] - 2.0).abs() < 1e-6
                && m.bias.abs() < 1e-6;
            Ok((ok, format!("alpha {:?}, b {:.2e}", m.dual_coeffs, m.bias)))
        }),
        check("pattern matching (T=10110010, P=110)", || {
            let inst = TextInstance::parse("10110010", "110")?;
            let m = pattern_match(&inst, &GroverConfig::faithful(), 0)?;
            let expected = success_probability(8, 2);
            let ok = inst.location() == 2 && (m.success_probability - expected).abs() < 1e-6;
            Ok((ok, format!("t={} p={:.6}", inst.location(), m.success_probability)))
        }),
        check("two marked elements break uncomputation", || {
            let o = MultiMarkedOracle::new(16, [3, 11])?;
            let f = multi_marked_uncompute_failure(&o, 2, &GroverConfig::faithful())?;
            Ok((f < 0.99, format!("ancilla fidelity {f:.4}")))
        }),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_all() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
