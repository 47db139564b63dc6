//! Local minimization of a difference of submodular functions `h = F − G`.
//!
//! Both solvers majorize `h` at the current iterate `A_t` by replacing `G`
//! with a modular lower bound that is tight at `A_t` (a greedy vertex whose
//! order lists `A_t` first). The submodular–supermodular procedure then
//! minimizes `F − bound` exactly with the min-norm-point solver; the
//! modular–modular variant also replaces `F` by one of two tight modular upper
//! bounds and minimizes the resulting modular function by sign. Since every
//! surrogate is tight at `A_t`, `h` never increases along the iterates.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::sfm::{
    check_permutation, for_each_subset, greedy_base_vertex, min_norm_point_with, prefer, MinNormOptions,
    SetFunction, SfmError, ShiftedFn, MAX_BRUTE_FORCE_N,
};

/// Minimum objective decrease (bits) that counts as progress.
pub const IMPROVEMENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdsfError {
    #[error("fill order must list the anchor set first: {0}")]
    InvalidPermutation(String),
    #[error("F and G have different ground sets ({0} vs {1})")]
    GroundMismatch(usize, usize),
    #[error("ground set of size {n} exceeds exhaustive limit {max}")]
    GroundSetTooLarge { n: usize, max: usize },
    #[error(transparent)]
    Sfm(#[from] SfmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Strategy {
    #[default]
    SupSub,
    ModMod,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::SupSub => "supsub",
            Strategy::ModMod => "modmod",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "supsub" => Ok(Strategy::SupSub),
            "modmod" => Ok(Strategy::ModMod),
            other => Err(format!("unknown strategy `{other}` (expected supsub or modmod)")),
        }
    }
}

/// `h(W) = F(W) − G(W)` with `F`, `G` normalized submodular.
pub struct MdsfInstance<F, G> {
    pub f: F,
    pub g: G,
}

impl<F: SetFunction, G: SetFunction> MdsfInstance<F, G> {
    pub fn new(f: F, g: G) -> Result<Self, MdsfError> {
        if f.ground_size() != g.ground_size() {
            return Err(MdsfError::GroundMismatch(f.ground_size(), g.ground_size()));
        }
        Ok(MdsfInstance { f, g })
    }

    pub fn ground_size(&self) -> usize {
        self.f.ground_size()
    }

    pub fn objective(&self, set: &[usize]) -> f64 {
        self.f.eval(set) - self.g.eval(set)
    }
}

/// Iterates visited by a local solver, starting with the initial set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MdsfTrace {
    pub iterates: Vec<(Vec<usize>, f64)>,
    pub converged: bool,
    /// Degraded inner solves (for example an SFM iteration cap).
    pub warnings: Vec<String>,
}

impl MdsfTrace {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.iterates.iter().map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdsfSolution {
    pub minimizer: Vec<usize>,
    pub value: f64,
    pub trace: MdsfTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdsfOptions {
    pub max_iters: usize,
    pub seed: u64,
    /// Total number of starts: the given initial set plus `restarts − 1`
    /// random subsets.
    pub restarts: usize,
    pub sfm: MinNormOptions,
}

impl Default for MdsfOptions {
    fn default() -> Self {
        MdsfOptions { max_iters: 100, seed: 0, restarts: 1, sfm: MinNormOptions::default() }
    }
}

/// A modular function plus a constant: `constant + Σ_{i∈W} weights[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModularBound {
    pub constant: f64,
    pub weights: Vec<f64>,
}

impl ModularBound {
    pub fn value(&self, set: &[usize]) -> f64 {
        self.constant + set.iter().map(|&i| self.weights[i]).sum::<f64>()
    }
}

/// Greedy-vertex lower bound of `g`, tight at `anchor` and at every prefix of
/// `fill_order`. Returns the weights and the anchor.
pub fn modular_lower_bound<G: SetFunction + ?Sized>(
    g: &G,
    anchor: &[usize],
    fill_order: &[usize],
) -> Result<(Vec<f64>, Vec<usize>), MdsfError> {
    let n = g.ground_size();
    check_permutation(fill_order, n).map_err(|e| MdsfError::InvalidPermutation(e.to_string()))?;
    let mut in_anchor = vec![false; n];
    for &i in anchor {
        if i >= n {
            return Err(MdsfError::InvalidPermutation(format!("anchor index {i} out of range")));
        }
        in_anchor[i] = true;
    }
    let k = in_anchor.iter().filter(|&&b| b).count();
    if !fill_order[..k].iter().all(|&i| in_anchor[i]) {
        return Err(MdsfError::InvalidPermutation("anchor is not a prefix of the fill order".into()));
    }
    let vertex = greedy_base_vertex(g, fill_order)?;
    let mut tight: Vec<usize> = fill_order[..k].to_vec();
    tight.sort_unstable();
    Ok((vertex.coords, tight))
}

/// The two standard modular upper bounds of a submodular `f` that are tight
/// at `anchor`:
///
/// * `f(A) − Σ_{j∈A∖W} f(j | A∖j) + Σ_{j∈W∖A} f(j | ∅)`
/// * `f(A) − Σ_{j∈A∖W} f(j | V∖j) + Σ_{j∈W∖A} f(j | A)`
pub fn modular_upper_bounds<F: SetFunction + ?Sized>(f: &F, anchor: &[usize]) -> [ModularBound; 2] {
    let n = f.ground_size();
    let mut in_anchor = vec![false; n];
    for &i in anchor {
        in_anchor[i] = true;
    }
    let anchor: Vec<usize> = (0..n).filter(|&i| in_anchor[i]).collect();
    let full: Vec<usize> = (0..n).collect();
    let f_anchor = f.eval(&anchor);
    let f_full = f.eval(&full);
    let without = |set: &[usize], j: usize| -> Vec<usize> { set.iter().copied().filter(|&i| i != j).collect() };

    let mut first = ModularBound { constant: f_anchor, weights: vec![0.0; n] };
    let mut second = ModularBound { constant: f_anchor, weights: vec![0.0; n] };
    for (j, &inside) in in_anchor.iter().enumerate() {
        if inside {
            let gain_in_anchor = f_anchor - f.eval(&without(&anchor, j));
            let gain_in_full = f_full - f.eval(&without(&full, j));
            first.weights[j] = gain_in_anchor;
            first.constant -= gain_in_anchor;
            second.weights[j] = gain_in_full;
            second.constant -= gain_in_full;
        } else {
            first.weights[j] = f.eval(&[j]);
            let mut with_j = anchor.clone();
            with_j.push(j);
            second.weights[j] = f.eval(&with_j) - f_anchor;
        }
    }
    [first, second]
}

fn iteration_rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Random order of `anchor` followed by a random order of its complement.
fn anchored_order(n: usize, anchor: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut in_anchor = vec![false; n];
    for &i in anchor {
        in_anchor[i] = true;
    }
    let mut head: Vec<usize> = (0..n).filter(|&i| in_anchor[i]).collect();
    let mut tail: Vec<usize> = (0..n).filter(|&i| !in_anchor[i]).collect();
    head.shuffle(rng);
    tail.shuffle(rng);
    head.extend(tail);
    head
}

fn normalize_set(set: &[usize], n: usize) -> Vec<usize> {
    let mut s: Vec<usize> = set.iter().copied().filter(|&i| i < n).collect();
    s.sort_unstable();
    s.dedup();
    s
}

/// Submodular–supermodular procedure from `init`.
pub fn supsub_minimize<F: SetFunction, G: SetFunction>(
    inst: &MdsfInstance<F, G>,
    init: &[usize],
    max_iters: usize,
    rng_seed: u64,
) -> Result<MdsfSolution, MdsfError> {
    let opts = MdsfOptions { max_iters, seed: rng_seed, ..Default::default() };
    supsub_with(inst, init, &opts)
}

fn supsub_with<F: SetFunction, G: SetFunction>(
    inst: &MdsfInstance<F, G>,
    init: &[usize],
    opts: &MdsfOptions,
) -> Result<MdsfSolution, MdsfError> {
    let n = inst.ground_size();
    let mut current = normalize_set(init, n);
    let mut value = inst.objective(&current);
    let mut trace = MdsfTrace { iterates: vec![(current.clone(), value)], ..Default::default() };
    for t in 0..opts.max_iters {
        let mut rng = iteration_rng(opts.seed, t as u64);
        let order = anchored_order(n, &current, &mut rng);
        let (weights, _) = modular_lower_bound(&inst.g, &current, &order)?;
        let surrogate = ShiftedFn { inner: &inst.f, shift: &weights };
        let candidate = match min_norm_point_with(&surrogate, &opts.sfm) {
            Ok(sol) => sol.minimizer,
            Err(SfmError::NotConverged { max_iters, partial }) => {
                trace.warnings.push(format!("iteration {t}: min-norm point hit its cap of {max_iters} major cycles"));
                partial.minimizer
            }
            Err(e) => return Err(e.into()),
        };
        let candidate_value = inst.objective(&candidate);
        if candidate_value < value - IMPROVEMENT_TOLERANCE {
            current = candidate;
            value = candidate_value;
            trace.iterates.push((current.clone(), value));
        } else {
            trace.converged = true;
            break;
        }
    }
    Ok(MdsfSolution { minimizer: current, value, trace })
}

/// Modular–modular procedure from `init`.
pub fn modmod_minimize<F: SetFunction, G: SetFunction>(
    inst: &MdsfInstance<F, G>,
    init: &[usize],
    max_iters: usize,
    rng_seed: u64,
) -> Result<MdsfSolution, MdsfError> {
    let opts = MdsfOptions { max_iters, seed: rng_seed, ..Default::default() };
    modmod_with(inst, init, &opts)
}

fn modmod_with<F: SetFunction, G: SetFunction>(
    inst: &MdsfInstance<F, G>,
    init: &[usize],
    opts: &MdsfOptions,
) -> Result<MdsfSolution, MdsfError> {
    let n = inst.ground_size();
    let mut current = normalize_set(init, n);
    let mut value = inst.objective(&current);
    let mut trace = MdsfTrace { iterates: vec![(current.clone(), value)], ..Default::default() };
    for t in 0..opts.max_iters {
        let mut rng = iteration_rng(opts.seed, t as u64);
        let order = anchored_order(n, &current, &mut rng);
        let (lower, _) = modular_lower_bound(&inst.g, &current, &order)?;
        let mut best: Option<(Vec<usize>, f64)> = None;
        for upper in modular_upper_bounds(&inst.f, &current) {
            let next: Vec<usize> = (0..n).filter(|&j| upper.weights[j] - lower[j] < 0.0).collect();
            let v = inst.objective(&next);
            if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
                best = Some((next, v));
            }
        }
        let (candidate, candidate_value) = best.expect("two candidate bounds");
        if candidate_value < value - IMPROVEMENT_TOLERANCE {
            current = candidate;
            value = candidate_value;
            trace.iterates.push((current.clone(), value));
        } else {
            trace.converged = true;
            break;
        }
    }
    Ok(MdsfSolution { minimizer: current, value, trace })
}

/// Runs `strategy` from `init` and, when `opts.restarts > 1`, from additional
/// random subsets; keeps the best solution (earliest start on ties).
pub fn minimize<F: SetFunction, G: SetFunction>(
    inst: &MdsfInstance<F, G>,
    strategy: Strategy,
    init: &[usize],
    opts: &MdsfOptions,
) -> Result<MdsfSolution, MdsfError> {
    let n = inst.ground_size();
    let run = |start: &[usize], seed: u64| {
        let o = MdsfOptions { seed, ..opts.clone() };
        match strategy {
            Strategy::SupSub => supsub_with(inst, start, &o),
            Strategy::ModMod => modmod_with(inst, start, &o),
        }
    };
    let mut best = run(init, opts.seed)?;
    for r in 1..opts.restarts.max(1) {
        let mut rng = iteration_rng(opts.seed, u64::MAX - r as u64);
        let start: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        let sol = run(&start, opts.seed.wrapping_add(r as u64))?;
        if sol.value < best.value - IMPROVEMENT_TOLERANCE {
            best = sol;
        }
    }
    Ok(best)
}

/// Exhaustive global minimum of `F − G`.
pub fn mdsf_bruteforce<F: SetFunction, G: SetFunction>(inst: &MdsfInstance<F, G>) -> Result<(Vec<usize>, f64), MdsfError> {
    let n = inst.ground_size();
    if n > MAX_BRUTE_FORCE_N {
        return Err(MdsfError::GroundSetTooLarge { n, max: MAX_BRUTE_FORCE_N });
    }
    let mut best_set = Vec::new();
    let mut best_value = inst.objective(&[]);
    for_each_subset(n, |set| {
        let v = inst.objective(set);
        if prefer(v, set, best_value, &best_set) {
            best_value = v;
            best_set = set.to_vec();
        }
    });
    Ok((best_set, best_value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{fixture_d1, JointPmf};
    use crate::set_functions::{MergeObjective, Problem};
    use crate::sfm::{sfm_bruteforce, FnOracle, Modular};
    use approx::assert_abs_diff_eq;

    fn d1_pf(lambda: f64) -> MdsfInstance<crate::set_functions::MergeEntropyFn, crate::set_functions::MergeEntropyFn> {
        let obj = MergeObjective::new(fixture_d1(), lambda, Problem::Pf).unwrap();
        let (f, g) = obj.submodular_pair();
        MdsfInstance::new(f, g).unwrap()
    }

    #[test]
    fn lower_bound_examples() {
        let g = FnOracle::new(3, |s: &[usize]| (s.len() as f64).sqrt());
        let (w, tight) = modular_lower_bound(&g, &[], &[2, 0, 1]).unwrap();
        assert!(tight.is_empty());
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 3f64.sqrt(), epsilon = 1e-15);
        let (w, tight) = modular_lower_bound(&g, &[0, 1, 2], &[1, 2, 0]).unwrap();
        assert_eq!(tight, vec![0, 1, 2]);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 3f64.sqrt(), epsilon = 1e-15);
        let m = Modular::new(vec![1.0, -2.0, 0.5]);
        for anchor in [vec![], vec![1], vec![0, 2]] {
            let mut order = anchor.clone();
            order.extend((0..3).filter(|i| !anchor.contains(i)));
            assert_eq!(modular_lower_bound(&m, &anchor, &order).unwrap().0, m.weights);
        }
        assert!(matches!(
            modular_lower_bound(&g, &[1], &[0, 1, 2]),
            Err(MdsfError::InvalidPermutation(_))
        ));
    }

    #[test]
    fn identical_parts_give_zero() {
        let obj = MergeObjective::new(fixture_d1(), 0.0, Problem::Pf).unwrap();
        let inst = MdsfInstance::new(obj.g().clone(), obj.g().clone()).unwrap();
        for strategy in [Strategy::SupSub, Strategy::ModMod] {
            let sol = minimize(&inst, strategy, &[], &MdsfOptions::default()).unwrap();
            assert_eq!(sol.value, 0.0);
            assert_eq!(sol.value, inst.objective(&[]));
        }
    }

    #[test]
    fn d1_pf_reaches_exhaustive_minimum() {
        let inst = d1_pf(0.8);
        let (_, global) = mdsf_bruteforce(&inst).unwrap();
        assert_eq!(global, 0.0);
        let sol = supsub_minimize(&inst, &[], 50, 7).unwrap();
        assert!(sol.value <= 0.0);
        assert_abs_diff_eq!(sol.value, global, epsilon = 1e-12);
        let mm = modmod_minimize(&inst, &[], 50, 7).unwrap();
        assert!(mm.value >= global - 1e-12);
    }

    #[test]
    fn modular_pair_solved_in_one_modmod_step() {
        let inst = MdsfInstance::new(Modular::new(vec![1.0, -1.0, 0.5, 2.0]), Modular::new(vec![0.5, 1.0, 1.0, -1.0])).unwrap();
        let sol = modmod_minimize(&inst, &[], 10, 3).unwrap();
        let (best, value) = mdsf_bruteforce(&inst).unwrap();
        assert_eq!(sol.minimizer, best);
        assert_abs_diff_eq!(sol.value, value, epsilon = 1e-15);
        assert_eq!(sol.trace.iterates.len(), 2);
        assert!(sol.trace.converged);
    }

    #[test]
    fn bruteforce_reductions() {
        let f = Modular::new(vec![0.2, -0.7, 0.1]);
        let inst = MdsfInstance::new(f.clone(), Modular::new(vec![0.0; 3])).unwrap();
        assert_eq!(mdsf_bruteforce(&inst).unwrap(), sfm_bruteforce(&f).unwrap());

        let single = JointPmf::from_rows(&[vec![0.3], vec![0.7]]).unwrap();
        let obj = MergeObjective::new(single, 0.2, Problem::Pf).unwrap();
        let (f, g) = obj.submodular_pair();
        assert_eq!(mdsf_bruteforce(&MdsfInstance::new(f, g).unwrap()).unwrap(), (vec![], 0.0));
    }

    #[test]
    fn identical_columns_minimized_by_full_set() {
        let col = [0.1, 0.05, 0.2];
        let rows: Vec<Vec<f64>> = col.iter().map(|&p| vec![p / 0.35 * 0.25; 4]).collect();
        let pmf = JointPmf::from_rows(&rows).unwrap();
        let obj = MergeObjective::new(pmf, 0.5, Problem::Ib).unwrap();
        let (f, g) = obj.submodular_pair();
        let (best, value) = mdsf_bruteforce(&MdsfInstance::new(f, g).unwrap()).unwrap();
        assert_eq!(best, vec![0, 1, 2, 3]);
        assert!(value < 0.0);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let pmf = JointPmf::from_rows(&[vec![0.05, 0.1, 0.15, 0.05, 0.1], vec![0.2, 0.05, 0.1, 0.15, 0.05]]).unwrap();
        let obj = MergeObjective::new(pmf, 0.3, Problem::Pf).unwrap();
        let (f, g) = obj.submodular_pair();
        let inst = MdsfInstance::new(f, g).unwrap();
        for strategy in [Strategy::SupSub, Strategy::ModMod] {
            let opts = MdsfOptions { seed: 11, restarts: 3, ..Default::default() };
            let a = minimize(&inst, strategy, &[], &opts).unwrap();
            let b = minimize(&inst, strategy, &[], &opts).unwrap();
            assert_eq!(a, b);
        }
    }
}
