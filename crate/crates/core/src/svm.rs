//! Soft-margin SVM over precomputed Gram matrices.
//!
//! The dual is solved in its minimization form
//! `min ½ αᵀQα − Σα` with `Q_ij = y_i y_j K_ij`, `0 ≤ α ≤ C`, `yᵀα = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{contract, structural, Error, Result};
use crate::kernel::GramMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "-1")]
    Negative,
    #[serde(rename = "+1")]
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn from_sign(value: f64) -> Self {
        if value >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Positive => "+1",
            Label::Negative => "-1",
        })
    }
}

/// A trained classifier: dual coefficients over the training points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub dual_coeffs: Vec<f64>,
    pub labels: Vec<Label>,
    pub bias: f64,
    pub support_indices: Vec<usize>,
    pub box_bound: f64,
    pub iterations: usize,
}

impl SvmModel {
    pub fn num_support(&self) -> usize {
        self.support_indices.len()
    }

    /// `Σ α_i y_i`.
    pub fn equality_residual(&self) -> f64 {
        self.dual_coeffs
            .iter()
            .zip(&self.labels)
            .map(|(a, y)| a * y.sign())
            .sum()
    }

    /// Dual objective `Σα − ½ αᵀQα` on `gram`.
    pub fn dual_objective(&self, gram: &GramMatrix) -> f64 {
        dual_objective(gram, &self.labels, &self.dual_coeffs)
    }
}

fn dual_objective(gram: &GramMatrix, labels: &[Label], alpha: &[f64]) -> f64 {
    let m = alpha.len();
    let mut quad = 0.0;
    for i in 0..m {
        for j in 0..m {
            quad += alpha[i] * alpha[j] * labels[i].sign() * labels[j].sign() * gram.get(i, j);
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

const TAU: f64 = 1e-12;
const MAX_ITERATIONS: usize = 10_000_000;

fn check_problem(gram: &GramMatrix, labels: &[Label], c: f64) -> Result<()> {
    if gram.size() != labels.len() {
        return Err(structural(format!(
            "Gram matrix is {0}x{0} but {1} labels were given",
            gram.size(),
            labels.len()
        )));
    }
    if !gram.is_symmetric(1e-12) {
        return Err(contract("Gram matrix is not symmetric"));
    }
    if !(c.is_finite() && c >= 0.0) {
        return Err(contract(format!("box bound C = {c} must be finite and non-negative")));
    }
    let positives = labels.iter().filter(|&&l| l == Label::Positive).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::DegenerateProblem(
            "training labels must contain both classes".into(),
        ));
    }
    Ok(())
}

/// Bias from the gradient `G = Qα − 1`: minus the mean of `y_i G_i` over free
/// coefficients, or the midpoint of the feasible interval when none are free.
fn bias_from_gradient(alpha: &[f64], grad: &[f64], labels: &[Label], c: f64, eps: f64) -> f64 {
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for ((&a, &g), &y) in alpha.iter().zip(grad).zip(labels) {
        let yg = y.sign() * g;
        if a >= c - eps {
            if y == Label::Negative {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if a <= eps {
            if y == Label::Positive {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        (upper + lower) / 2.0
    };
    -rho
}

/// Trains with pairwise (SMO) updates on the maximal KKT-violating pair.
/// Stops once the violation gap is at most `tol`.
pub fn train(gram: &GramMatrix, labels: &[Label], c: f64, tol: f64) -> Result<SvmModel> {
    train_traced(gram, labels, c, tol).map(|(model, _)| model)
}

/// As [`train`], also returning the dual objective after every update.
pub fn train_traced(
    gram: &GramMatrix,
    labels: &[Label],
    c: f64,
    tol: f64,
) -> Result<(SvmModel, Vec<f64>)> {
    check_problem(gram, labels, c)?;
    if c <= 0.0 {
        return Err(contract("box bound C must be positive"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(contract("tolerance must be positive"));
    }
    let m = labels.len();
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let mut alpha = vec![0.0; m];
    let mut grad = vec![-1.0; m];
    let mut objective = 0.0;
    let mut trace = Vec::new();
    let mut iterations = 0;

    loop {
        // i maximizes −y G over I_up, j minimizes it over I_low; ties go to
        // the lowest index.
        let mut best_up = (f64::NEG_INFINITY, usize::MAX);
        let mut best_low = (f64::INFINITY, usize::MAX);
        for t in 0..m {
            let score = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] < 0.0 && alpha[t] < c) || (y[t] > 0.0 && alpha[t] > 0.0);
            if in_up && score > best_up.0 {
                best_up = (score, t);
            }
            if in_low && score < best_low.0 {
                best_low = (score, t);
            }
        }
        let (i, j) = (best_up.1, best_low.1);
        if i == usize::MAX || j == usize::MAX || best_up.0 - best_low.0 <= tol {
            break;
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::NotConverged(iterations));
        }
        iterations += 1;

        // Move along d with d_i = y_i, d_j = −y_j, which keeps yᵀα fixed.
        let gap = best_up.0 - best_low.0;
        let curvature = gram.get(i, i) + gram.get(j, j) - 2.0 * gram.get(i, j);
        let mut step = gap / curvature.max(TAU);
        let room_i = if y[i] > 0.0 { c - alpha[i] } else { alpha[i] };
        let room_j = if y[j] > 0.0 { alpha[j] } else { c - alpha[j] };
        let (mut clamp_i, mut clamp_j) = (false, false);
        if step >= room_i {
            step = room_i;
            clamp_i = true;
        }
        if step >= room_j {
            if room_j < room_i {
                clamp_i = false;
            }
            step = room_j;
            clamp_j = true;
        }
        alpha[i] += y[i] * step;
        alpha[j] -= y[j] * step;
        if clamp_i {
            alpha[i] = if y[i] > 0.0 { c } else { 0.0 };
        }
        if clamp_j {
            alpha[j] = if y[j] > 0.0 { 0.0 } else { c };
        }
        for t in 0..m {
            grad[t] += step * y[t] * (gram.get(t, i) - gram.get(t, j));
        }
        objective += step * gap - 0.5 * step * step * curvature;
        trace.push(objective);
    }

    let bias = bias_from_gradient(&alpha, &grad, labels, c, 0.0);
    let support_indices = (0..m).filter(|&t| alpha[t] > 0.0).collect();
    Ok((
        SvmModel {
            dual_coeffs: alpha,
            labels: labels.to_vec(),
            bias,
            support_indices,
            box_bound: c,
            iterations,
        },
        trace,
    ))
}

/// Largest KKT violation `max_{I_up}(−yG) − min_{I_low}(−yG)` of `model` on
/// `gram`; zero or negative at optimality.
pub fn kkt_violation(model: &SvmModel, gram: &GramMatrix) -> f64 {
    let m = model.labels.len();
    let y: Vec<f64> = model.labels.iter().map(|l| l.sign()).collect();
    let c = model.box_bound;
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for t in 0..m {
        let g: f64 = (0..m)
            .map(|s| y[t] * y[s] * gram.get(t, s) * model.dual_coeffs[s])
            .sum::<f64>()
            - 1.0;
        let a = model.dual_coeffs[t];
        let score = -y[t] * g;
        if (y[t] > 0.0 && a < c) || (y[t] < 0.0 && a > 0.0) {
            up = up.max(score);
        }
        if (y[t] < 0.0 && a < c) || (y[t] > 0.0 && a > 0.0) {
            low = low.min(score);
        }
    }
    (up - low).max(0.0)
}

/// Score `Σ α_i y_i k_i + b` and its sign (ties go to +1).
pub fn decide(model: &SvmModel, kernel_row: &[f64]) -> Result<(f64, Label)> {
    if kernel_row.len() != model.dual_coeffs.len() {
        return Err(structural(format!(
            "kernel row has {} entries, model has {} training points",
            kernel_row.len(),
            model.dual_coeffs.len()
        )));
    }
    if let Some(bad) = kernel_row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(contract(format!("kernel value {bad} outside [0, 1]")));
    }
    let score = model
        .dual_coeffs
        .iter()
        .zip(&model.labels)
        .zip(kernel_row)
        .map(|((a, y), k)| a * y.sign() * k)
        .sum::<f64>()
        + model.bias;
    Ok((score, Label::from_sign(score)))
}

/// Dual solution produced by [`brute_force_qp`].
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub kkt_residual: f64,
}

impl DualSolution {
    /// Wraps the solution as a model so `decide` can be reused.
    pub fn to_model(&self, labels: &[Label], c: f64) -> SvmModel {
        SvmModel {
            dual_coeffs: self.alpha.clone(),
            labels: labels.to_vec(),
            bias: self.bias,
            support_indices: (0..self.alpha.len()).filter(|&t| self.alpha[t] > 0.0).collect(),
            box_bound: c,
            iterations: 0,
        }
    }
}

pub const BRUTE_FORCE_MAX_POINTS: usize = 8;

/// Euclidean projection onto `{0 ≤ α ≤ C, yᵀα = 0}` by bisection on the
/// multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let clip = |mu: f64| -> Vec<f64> {
        v.iter()
            .zip(y)
            .map(|(vi, yi)| (vi - mu * yi).clamp(0.0, c))
            .collect()
    };
    let h = |a: &[f64]| a.iter().zip(y).map(|(ai, yi)| ai * yi).sum::<f64>();
    let bound = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(&clip(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * bound {
            break;
        }
    }
    clip(0.5 * (lo + hi))
}

/// Dense accelerated projected-gradient solve of the same dual, to a KKT
/// residual of 1e-10. Deliberately slow; limited to tiny problems.
pub fn brute_force_qp(gram: &GramMatrix, labels: &[Label], c: f64) -> Result<DualSolution> {
    let m = labels.len();
    if m > BRUTE_FORCE_MAX_POINTS {
        return Err(structural(format!(
            "brute-force QP refuses m = {m} > {BRUTE_FORCE_MAX_POINTS}"
        )));
    }
    check_problem(gram, labels, c)?;
    if c == 0.0 {
        return Ok(DualSolution {
            alpha: vec![0.0; m],
            bias: 0.0,
            kkt_residual: 0.0,
        });
    }
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let q: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| y[i] * y[j] * gram.get(i, j)).collect())
        .collect();
    let gradient = |a: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| (0..m).map(|j| q[i][j] * a[j]).sum::<f64>() - 1.0)
            .collect()
    };
    let lipschitz = q
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let step = 1.0 / lipschitz;
    let residual = |a: &[f64]| -> f64 {
        let g = gradient(a);
        let shifted: Vec<f64> = a.iter().zip(&g).map(|(ai, gi)| ai - gi).collect();
        project(&shifted, &y, c)
            .iter()
            .zip(a)
            .map(|(p, ai)| (p - ai).abs())
            .fold(0.0, f64::max)
    };
    let objective = |a: &[f64]| -> f64 {
        let g = gradient(a);
        // ½αᵀQα − Σα = ½ αᵀ(G + 1) − Σα
        0.5 * a.iter().zip(&g).map(|(ai, gi)| ai * (gi + 1.0)).sum::<f64>() - a.iter().sum::<f64>()
    };

    let pg_step = |from: &[f64]| -> Vec<f64> {
        let g = gradient(from);
        let shifted: Vec<f64> = from.iter().zip(&g).map(|(p, gi)| p - step * gi).collect();
        project(&shifted, &y, c)
    };
    let mut alpha = vec![0.0; m];
    let mut momentum_point = alpha.clone();
    let mut t = 1.0f64;
    let mut kkt = residual(&alpha);
    let mut iteration = 0usize;
    while kkt > 1e-10 {
        if iteration >= 5_000_000 {
            return Err(Error::NotConverged(iteration));
        }
        iteration += 1;
        let mut next = pg_step(&momentum_point);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if objective(&next) > objective(&alpha) {
            // Restart: a plain projected-gradient step never increases the objective.
            next = pg_step(&alpha);
            momentum_point = next.clone();
            t = 1.0;
        } else {
            momentum_point = next
                .iter()
                .zip(&alpha)
                .map(|(n, a)| n + (t - 1.0) / t_next * (n - a))
                .collect();
            t = t_next;
        }
        alpha = next;
        kkt = residual(&alpha);
    }
    let grad = gradient(&alpha);
    let bias = bias_from_gradient(&alpha, &grad, labels, c, 1e-7);
    Ok(DualSolution {
        alpha,
        bias,
        kkt_residual: kkt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{kernel_exact, KernelMode};
    use approx::assert_abs_diff_eq;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use Label::{Negative as N, Positive as P};

    fn gram(rows: &[Vec<f64>]) -> GramMatrix {
        GramMatrix::from_rows(rows, KernelMode::Exact).unwrap()
    }

    fn two_point() -> GramMatrix {
        gram(&[vec![1.0, 0.5], vec![0.5, 1.0]])
    }

    /// Random interval-kernel problem on distinct indices, both classes.
    pub(crate) fn random_problem(rng: &mut ChaCha8Rng, m: usize) -> (GramMatrix, Vec<Label>, Vec<usize>) {
        let n = 64;
        let width = [2usize, 4, 8, 16][rng.random_range(0..4)];
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        idx.truncate(m);
        let s = rng.random_range(0..n / 2);
        let mut labels: Vec<Label> = idx
            .iter()
            .map(|&j| if (s..s + n / 2).contains(&j) { P } else { N })
            .collect();
        if rng.random_bool(0.2) {
            let k = rng.random_range(0..m);
            labels[k] = labels[k].flipped();
        }
        if labels.iter().all(|&l| l == labels[0]) {
            labels[0] = labels[0].flipped();
        }
        let rows: Vec<Vec<f64>> = idx
            .iter()
            .map(|&a| idx.iter().map(|&b| kernel_exact(a, b, width, n).unwrap()).collect())
            .collect();
        (gram(&rows), labels, idx)
    }

    #[test]
    fn two_point_closed_form() {
        let model = train(&two_point(), &[P, N], 10.0, 1e-8).unwrap();
        assert_abs_diff_eq!(model.dual_coeffs[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(model.dual_coeffs[1], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(model.bias, 0.0, epsilon = 1e-9);
        let (f0, l0) = decide(&model, &[1.0, 0.5]).unwrap();
        let (f1, l1) = decide(&model, &[0.5, 1.0]).unwrap();
        assert_abs_diff_eq!(f0, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(f1, -1.0, epsilon = 1e-9);
        assert_eq!((l0, l1), (P, N));
    }

    #[test]
    fn identity_gram() {
        let model = train(&gram(&[vec![1.0, 0.0], vec![0.0, 1.0]]), &[P, N], 10.0, 1e-10).unwrap();
        assert_abs_diff_eq!(model.dual_coeffs[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(model.dual_coeffs[1], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(model.bias, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn train_errors() {
        assert!(matches!(
            train(&two_point(), &[P, P], 1.0, 1e-6),
            Err(Error::DegenerateProblem(_))
        ));
        assert!(matches!(train(&two_point(), &[P], 1.0, 1e-6), Err(Error::Structural(_))));
        assert!(train(&two_point(), &[P, N], 0.0, 1e-6).is_err());
    }

    #[test]
    fn decide_cases() {
        let model = train(&two_point(), &[P, N], 10.0, 1e-8).unwrap();
        let (score, _) = decide(&model, &[0.0, 0.0]).unwrap();
        assert_eq!(score, model.bias);
        assert!(decide(&model, &[1.0]).is_err());
        assert!(decide(&model, &[1.0, 1.5]).is_err());
    }

    #[test]
    fn brute_force_matches_two_point() {
        let sol = brute_force_qp(&two_point(), &[P, N], 10.0).unwrap();
        let model = train(&two_point(), &[P, N], 10.0, 1e-10).unwrap();
        for t in 0..2 {
            assert_abs_diff_eq!(sol.alpha[t], model.dual_coeffs[t], epsilon = 1e-6);
        }
        assert_abs_diff_eq!(sol.bias, model.bias, epsilon = 1e-6);
    }

    #[test]
    fn brute_force_limits() {
        let eye: Vec<Vec<f64>> = (0..9)
            .map(|i| (0..9).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let labels = [P, N, P, N, P, N, P, N, P];
        assert!(brute_force_qp(&gram(&eye), &labels, 1.0).is_err());
        let zero = brute_force_qp(&two_point(), &[P, N], 0.0).unwrap();
        assert_eq!(zero.alpha, vec![0.0, 0.0]);
    }

    #[test]
    fn oracle_equivalence_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for case in 0..50 {
            let m = rng.random_range(2..=8);
            let (g, labels, _) = random_problem(&mut rng, m);
            let c = [0.5, 1.0, 10.0][case % 3];
            let model = train(&g, &labels, c, 1e-10).unwrap();
            let oracle = brute_force_qp(&g, &labels, c).unwrap().to_model(&labels, c);
            for i in 0..m {
                let row = g.row(i);
                let (a, _) = decide(&model, &row).unwrap();
                let (b, _) = decide(&oracle, &row).unwrap();
                assert!((a - b).abs() < 1e-4, "case {case} point {i}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn feasibility_margins_and_monotone_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let m = rng.random_range(4..=24);
            let (g, labels, _) = random_problem(&mut rng, m);
            let c = 1.0;
            let (model, trace) = train_traced(&g, &labels, c, 1e-9).unwrap();
            assert!(model.dual_coeffs.iter().all(|&a| (0.0..=c).contains(&a)));
            assert!(model.equality_residual().abs() <= 1e-8);
            assert!(kkt_violation(&model, &g) <= 1e-9 + 1e-12);
            assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
            if let Some(&last) = trace.last() {
                assert_abs_diff_eq!(last, model.dual_objective(&g), epsilon = 1e-8);
            }
            for i in 0..m {
                let a = model.dual_coeffs[i];
                if a > 0.0 && a < c {
                    let (f, _) = decide(&model, &g.row(i)).unwrap();
                    assert!(labels[i].sign() * f >= 1.0 - 1e-6);
                }
            }
        }
    }

    #[test]
    fn permuting_points_permutes_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let m = 10;
            let (g, labels, _) = random_problem(&mut rng, m);
            let mut perm: Vec<usize> = (0..m).collect();
            perm.shuffle(&mut rng);
            let rows: Vec<Vec<f64>> = perm
                .iter()
                .map(|&a| perm.iter().map(|&b| g.get(a, b)).collect())
                .collect();
            let g2 = gram(&rows);
            let labels2: Vec<Label> = perm.iter().map(|&p| labels[p]).collect();
            let a = train(&g, &labels, 1.0, 1e-11).unwrap();
            let b = train(&g2, &labels2, 1.0, 1e-11).unwrap();
            // Decision values are unique even when α is not; compare those.
            for i in 0..m {
                let (fa, la) = decide(&a, &g.row(perm[i])).unwrap();
                let (fb, lb) = decide(&b, &g2.row(i)).unwrap();
                assert!((fa - fb).abs() < 1e-6);
                if fa.abs() > 1e-6 {
                    assert_eq!(la, lb);
                }
            }
            for (i, &p) in perm.iter().enumerate() {
                assert!((a.dual_coeffs[p] - b.dual_coeffs[i]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn scaling_coefficients_keeps_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (g, labels, _) = random_problem(&mut rng, 12);
        let model = train(&g, &labels, 1.0, 1e-9).unwrap();
        let mut scaled = model.clone();
        for a in &mut scaled.dual_coeffs {
            *a *= 3.5;
        }
        scaled.bias *= 3.5;
        for i in 0..12 {
            assert_eq!(decide(&model, &g.row(i)).unwrap().1, decide(&scaled, &g.row(i)).unwrap().1);
        }
    }

    #[test]
    fn indefinite_gram_still_terminates() {
        let g = gram(&[
            vec![1.0, 0.9, 0.0, 0.2],
            vec![0.9, 1.0, 0.9, 0.0],
            vec![0.0, 0.9, 1.0, 0.9],
            vec![0.2, 0.0, 0.9, 1.0],
        ]);
        let model = train(&g, &[P, N, P, N], 1.0, 1e-8).unwrap();
        assert!(model.equality_residual().abs() < 1e-8);
        assert!(kkt_violation(&model, &g) <= 1e-8 + 1e-12);
    }
}
