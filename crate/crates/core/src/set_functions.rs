//! The merge set functions of the current joint `p(s, x̂)`:
//!
//! ```text
//! f(W) = Σ_{x̂∈W} p(x̂) log p(x̂)/p(Ŵ)
//! g(W) = Σ_s Σ_{x̂∈W} p(s,x̂) log p(s,x̂)/p(s,Ŵ)
//! ```
//!
//! Both are normalized, nonpositive, submodular and nonincreasing. Merging
//! `W` changes the leakage by `f(W) − g(W)` and the released entropy by
//! `f(W)`, so the Lagrangian `I(S;X̂_W) − λ I(X̂;X̂_W)` differs from its
//! unmerged value by exactly `(1−λ) f(W) − g(W)`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dist::{plog2p, JointPmf, MergeSet};
use crate::sfm::{for_each_subset, SetFunction};

/// Largest alphabet [`MergeObjective::check_equivalence`] enumerates.
pub const MAX_EQUIVALENCE_N: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("lambda must lie in [0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("ground set of size {n} exceeds exhaustive limit {max}")]
    GroundSetTooLarge { n: usize, max: usize },
}

/// Privacy funnel (minimize leakage) or information bottleneck (maximize
/// relevance).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Problem {
    Pf,
    Ib,
}

impl Problem {
    pub fn as_str(self) -> &'static str {
        match self {
            Problem::Pf => "pf",
            Problem::Ib => "ib",
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Problem {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pf" => Ok(Problem::Pf),
            "ib" => Ok(Problem::Ib),
            other => Err(format!("unknown problem `{other}` (expected pf or ib)")),
        }
    }
}

/// `scale · Σ_r [Σ_{i∈W} p_ri log p_ri − P_r(W) log P_r(W)]` over a set of
/// rows of nonnegative weights. One row of marginals gives `f`; the rows of
/// the joint give `g`.
#[derive(Debug, Clone)]
pub struct MergeEntropyFn {
    rows: usize,
    /// Nonzero entries of every column as `(row, p, p log2 p)`.
    columns: Vec<Vec<(usize, f64, f64)>>,
    scale: f64,
}

impl MergeEntropyFn {
    fn from_columns(rows: usize, cols: impl Iterator<Item = Vec<(usize, f64)>>) -> Self {
        let columns = cols
            .map(|c| c.into_iter().filter(|&(_, p)| p > 0.0).map(|(r, p)| (r, p, plog2p(p))).collect())
            .collect();
        MergeEntropyFn { rows, columns, scale: 1.0 }
    }

    /// `f` of the current released marginal.
    pub fn marginal(pmf: &JointPmf) -> Self {
        Self::from_columns(1, pmf.columns().iter().map(|c| vec![(0, c.iter().sum::<f64>())]))
    }

    /// `g` of the current joint.
    pub fn joint(pmf: &JointPmf) -> Self {
        Self::from_columns(pmf.s_len(), pmf.columns().iter().map(|c| c.iter().copied().enumerate().collect()))
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.scale *= factor;
        self
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl SetFunction for MergeEntropyFn {
    fn ground_size(&self) -> usize {
        self.columns.len()
    }

    fn eval(&self, set: &[usize]) -> f64 {
        if set.len() < 2 || self.scale == 0.0 {
            return 0.0;
        }
        let mut mass = vec![0.0; self.rows];
        let mut modular = 0.0;
        for &i in set {
            for &(r, p, plp) in &self.columns[i] {
                mass[r] += p;
                modular += plp;
            }
        }
        let concave: f64 = mass.iter().map(|&m| plog2p(m)).sum();
        // each log ratio is ≤ 0; clamp rounding noise at the boundary
        self.scale * (modular - concave).min(0.0)
    }

    fn prefix_values(&self, order: &[usize]) -> Vec<f64> {
        let mut mass = vec![0.0; self.rows];
        let mut value = 0.0;
        let mut out = Vec::with_capacity(order.len());
        for (k, &i) in order.iter().enumerate() {
            for &(r, p, plp) in &self.columns[i] {
                let before = plog2p(mass[r]);
                mass[r] += p;
                value += plp - (plog2p(mass[r]) - before);
            }
            out.push(if k == 0 || self.scale == 0.0 { 0.0 } else { self.scale * value.min(0.0) });
        }
        out
    }
}

/// `f(W)` on the released marginal of `pmf`.
pub fn f_value(pmf: &JointPmf, w: &MergeSet) -> f64 {
    MergeEntropyFn::marginal(pmf).eval(w.indices())
}

/// `g(W)` on the joint `pmf`.
pub fn g_value(pmf: &JointPmf, w: &MergeSet) -> f64 {
    MergeEntropyFn::joint(pmf).eval(w.indices())
}

/// The merge objective of one iteration: the current joint, the multiplier
/// and the problem direction.
#[derive(Debug, Clone)]
pub struct MergeObjective {
    pmf: JointPmf,
    lambda: f64,
    problem: Problem,
    f: MergeEntropyFn,
    g: MergeEntropyFn,
}

impl MergeObjective {
    pub fn new(pmf: JointPmf, lambda: f64, problem: Problem) -> Result<Self, ObjectiveError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(ObjectiveError::InvalidLambda(lambda));
        }
        let f = MergeEntropyFn::marginal(&pmf);
        let g = MergeEntropyFn::joint(&pmf);
        Ok(MergeObjective { pmf, lambda, problem, f, g })
    }

    pub fn pmf(&self) -> &JointPmf {
        &self.pmf
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn problem(&self) -> Problem {
        self.problem
    }

    pub fn f(&self) -> &MergeEntropyFn {
        &self.f
    }

    pub fn g(&self) -> &MergeEntropyFn {
        &self.g
    }

    pub fn f_value(&self, w: &[usize]) -> f64 {
        self.f.eval(w)
    }

    pub fn g_value(&self, w: &[usize]) -> f64 {
        self.g.eval(w)
    }

    /// `(1−λ) f(W) − g(W)`.
    pub fn pf_objective(&self, w: &[usize]) -> f64 {
        (1.0 - self.lambda) * self.f.eval(w) - self.g.eval(w)
    }

    /// `g(W) − (1−λ) f(W)`.
    pub fn ib_objective(&self, w: &[usize]) -> f64 {
        -self.pf_objective(w)
    }

    /// The objective minimized for this instance's problem.
    pub fn objective(&self, w: &[usize]) -> f64 {
        match self.problem {
            Problem::Pf => self.pf_objective(w),
            Problem::Ib => self.ib_objective(w),
        }
    }

    /// The submodular pair `(F, G)` with objective `F − G`.
    pub fn submodular_pair(&self) -> (MergeEntropyFn, MergeEntropyFn) {
        let weighted_f = self.f.clone().scaled(1.0 - self.lambda);
        match self.problem {
            Problem::Pf => (weighted_f, self.g.clone()),
            Problem::Ib => (self.g.clone(), weighted_f),
        }
    }

    /// `I(S; X̂_W) − λ H(X̂_W)` evaluated by performing the merge. Sets of
    /// size ≤ 1 leave the joint unchanged.
    pub fn lagrangian_direct(&self, w: &[usize]) -> f64 {
        if w.len() < 2 {
            return lagrangian(&self.pmf, self.lambda);
        }
        let merged = self.pmf.merge(&MergeSet::new(w.iter().copied())).expect("merge set within alphabet");
        lagrangian(&merged, self.lambda)
    }

    /// Largest deviation, over all subsets, between the merged Lagrangian
    /// difference and the PF set-function objective.
    pub fn check_equivalence(&self) -> Result<f64, ObjectiveError> {
        let n = self.pmf.x_len();
        if n > MAX_EQUIVALENCE_N {
            return Err(ObjectiveError::GroundSetTooLarge { n, max: MAX_EQUIVALENCE_N });
        }
        let base = self.lagrangian_direct(&[]);
        let mut worst = 0.0f64;
        for_each_subset(n, |w| {
            let dev = ((self.lagrangian_direct(w) - base) - self.pf_objective(w)).abs();
            worst = worst.max(dev);
        });
        Ok(worst)
    }
}

/// `I(S; X̂) − λ H(X̂)`; `H(X̂) = I(X; X̂)` for any deterministic clustering.
pub fn lagrangian(pmf: &JointPmf, lambda: f64) -> f64 {
    pmf.mutual_information() - lambda * pmf.entropy(crate::dist::Axis::X)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{fixture_d1, Axis};
    use approx::assert_abs_diff_eq;

    #[test]
    fn f_and_g_on_d1() {
        let d1 = fixture_d1();
        let w14 = MergeSet::new([0, 3]);
        assert_abs_diff_eq!(f_value(&d1, &w14), -0.550977500433, epsilon = 1e-11);
        assert_abs_diff_eq!(g_value(&d1, &w14), -0.524511249784, epsilon = 1e-11);
        for w in [MergeSet::empty(), MergeSet::new([2])] {
            assert_eq!(f_value(&d1, &w), 0.0);
            assert_eq!(g_value(&d1, &w), 0.0);
        }
    }

    #[test]
    fn identical_conditionals_give_g_equal_f() {
        let pmf = JointPmf::from_rows(&[vec![0.05, 0.1, 0.3], vec![0.15, 0.3, 0.1]]).unwrap();
        let w = MergeSet::new([0, 1]);
        assert_abs_diff_eq!(g_value(&pmf, &w), f_value(&pmf, &w), epsilon = 1e-15);
    }

    #[test]
    fn pf_and_ib_objectives() {
        let obj = MergeObjective::new(fixture_d1(), 0.8, Problem::Pf).unwrap();
        assert_abs_diff_eq!(obj.pf_objective(&[0, 3]), 0.414315749697, epsilon = 1e-11);
        assert_eq!(obj.pf_objective(&[]), 0.0);
        assert_eq!(obj.ib_objective(&[]), 0.0);
        for w in [vec![0, 1], vec![1, 2, 3], vec![0, 1, 2, 3]] {
            assert_eq!(obj.ib_objective(&w), -obj.pf_objective(&w));
        }
        let unit = MergeObjective::new(fixture_d1(), 1.0, Problem::Pf).unwrap();
        for w in [vec![0, 1], vec![0, 1, 2, 3]] {
            assert!(unit.pf_objective(&w) >= 0.0);
            assert_abs_diff_eq!(unit.ib_objective(&w), unit.g_value(&w), epsilon = 1e-15);
        }
    }

    #[test]
    fn equal_conditionals_objective_is_lambda_times_abs_f() {
        let pmf = JointPmf::from_rows(&[vec![0.1, 0.2, 0.25], vec![0.1, 0.2, 0.15]]).unwrap();
        let obj = MergeObjective::new(pmf, 0.3, Problem::Pf).unwrap();
        let w = [0, 1];
        assert_abs_diff_eq!(obj.pf_objective(&w), 0.3 * obj.f_value(&w).abs(), epsilon = 1e-15);
    }

    #[test]
    fn lagrangian_direct_examples() {
        let d1 = fixture_d1();
        let obj = MergeObjective::new(d1.clone(), 0.8, Problem::Pf).unwrap();
        let base = d1.mutual_information() - 0.8 * d1.entropy(Axis::X);
        assert_abs_diff_eq!(obj.lagrangian_direct(&[]), base, epsilon = 1e-15);
        assert_abs_diff_eq!(obj.lagrangian_direct(&[2]), base, epsilon = 1e-15);
        assert_abs_diff_eq!(obj.lagrangian_direct(&[0, 3]) - base, 0.414315749697, epsilon = 1e-11);
    }

    #[test]
    fn equivalence_on_d1_across_lambdas() {
        for lambda in [0.0, 0.5, 1.0] {
            let obj = MergeObjective::new(fixture_d1(), lambda, Problem::Pf).unwrap();
            assert!(obj.check_equivalence().unwrap() <= 1e-9);
        }
    }

    #[test]
    fn prefix_values_match_eval() {
        let pmf = JointPmf::from_rows(&[vec![0.05, 0.1, 0.0, 0.2], vec![0.25, 0.0, 0.3, 0.1]]).unwrap();
        let order = [2, 0, 3, 1];
        for func in [MergeEntropyFn::marginal(&pmf), MergeEntropyFn::joint(&pmf).scaled(0.4)] {
            let pv = func.prefix_values(&order);
            for k in 1..=order.len() {
                assert_abs_diff_eq!(pv[k - 1], func.eval(&order[..k]), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn rejects_lambda_outside_unit_interval() {
        assert!(matches!(
            MergeObjective::new(fixture_d1(), 1.5, Problem::Pf),
            Err(ObjectiveError::InvalidLambda(_))
        ));
        assert!(MergeObjective::new(fixture_d1(), -0.1, Problem::Ib).is_err());
    }

    #[test]
    fn equivalence_rejects_large_alphabets() {
        let row = vec![1.0 / 21.0; 21];
        let obj = MergeObjective::new(JointPmf::from_weights(
            crate::dist::Alphabet::numbered(1),
            crate::dist::Alphabet::numbered(21),
            &[row],
        )
        .unwrap(), 0.5, Problem::Pf)
        .unwrap();
        assert!(matches!(obj.check_equivalence(), Err(ObjectiveError::GroundSetTooLarge { .. })));
    }
}
