//! Agglomerative clustering of the released alphabet.
//!
//! [`iac_mdsf`] repeatedly searches the whole power set of the current
//! alphabet for the merge that most improves the Lagrangian
//! `I(S;X̂) − λ I(X;X̂)` (through the equivalent difference-of-submodular
//! objective) and merges it, stopping when the best merge has at most one
//! symbol. The pairwise baselines restrict every step to merging two symbols
//! under a utility or relevance constraint. [`pareto_exact`] enumerates every
//! partition and bounds both on small alphabets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{Axis, JointPmf, MergeSet, Partition};
use crate::mdsf::{minimize, MdsfError, MdsfInstance, MdsfOptions, Strategy, IMPROVEMENT_TOLERANCE};
use crate::set_functions::{lagrangian, MergeEntropyFn, MergeObjective, ObjectiveError, Problem};
use crate::sfm::{SetFunction, TIE_TOLERANCE};

/// Largest alphabet [`pareto_exact`] enumerates (Bell(10) = 115975).
pub const MAX_EXACT_N: usize = 10;

/// Slack on the baseline feasibility constraints.
pub const CONSTRAINT_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FunnelError {
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Mdsf(#[from] MdsfError),
    #[error("alphabet of size {n} exceeds exhaustive limit {max}")]
    GroundSetTooLarge { n: usize, max: usize },
    #[error("threshold must be nonnegative, got {0}")]
    InvalidThreshold(f64),
    #[error("failed to build worker pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub lambda: f64,
    pub problem: Problem,
    pub strategy: Strategy,
    pub restarts: usize,
    pub seed: u64,
    /// `None` means `|X|`.
    pub max_outer_iters: Option<usize>,
    /// Cap on MDSF iterations per outer step.
    pub max_inner_iters: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lambda: 0.5,
            problem: Problem::Pf,
            strategy: Strategy::SupSub,
            restarts: 1,
            seed: 0,
            max_outer_iters: None,
            max_inner_iters: 100,
        }
    }
}

/// One merge: the outer iteration it happened in and the labels merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeRecord {
    pub iteration: usize,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub final_pmf: JointPmf,
    pub merge_history: Vec<MergeRecord>,
    /// Tracked objective after `k` merges, starting with `k = 0`: the
    /// Lagrangian `I(S;X̂) − λ I(X;X̂)` for [`iac_mdsf`], the constrained
    /// quantity (leakage for PF, rate for IB) for the pairwise baselines.
    pub trajectory: Vec<f64>,
    /// `I(S; X̂^(k))` for every `k`.
    pub leakage_path: Vec<f64>,
    /// `I(X; X̂^(k)) = H(X̂^(k))` for every `k`.
    pub utility_path: Vec<f64>,
    pub leakage_bits: f64,
    pub utility_bits: f64,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl ClusteringResult {
    fn start(pmf: &JointPmf, tracked: f64) -> Self {
        let leakage = pmf.mutual_information();
        let utility = pmf.entropy(Axis::X);
        ClusteringResult {
            final_pmf: pmf.clone(),
            merge_history: Vec::new(),
            trajectory: vec![tracked],
            leakage_path: vec![leakage],
            utility_path: vec![utility],
            leakage_bits: leakage,
            utility_bits: utility,
            iterations: 0,
            warnings: Vec::new(),
        }
    }

    fn record_merge(&mut self, labels: Vec<String>, merged: JointPmf, tracked: f64) {
        self.iterations += 1;
        self.merge_history.push(MergeRecord { iteration: self.iterations, labels });
        self.leakage_bits = merged.mutual_information();
        self.utility_bits = merged.entropy(Axis::X);
        self.leakage_path.push(self.leakage_bits);
        self.utility_path.push(self.utility_bits);
        self.trajectory.push(tracked);
        self.final_pmf = merged;
    }

    pub fn alphabet_size(&self) -> usize {
        self.final_pmf.x_len()
    }

    /// `I(S;X̂) − λ I(X;X̂)` of the final clustering.
    pub fn lagrangian(&self, lambda: f64) -> f64 {
        self.leakage_bits - lambda * self.utility_bits
    }
}

fn labels_of(pmf: &JointPmf, set: &[usize]) -> Vec<String> {
    set.iter().map(|&i| pmf.x_alphabet().label(i).to_string()).collect()
}

fn outer_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Iterative agglomerative clustering driven by difference-of-submodular
/// merge search.
pub fn iac_mdsf(pmf: &JointPmf, cfg: &RunConfig) -> Result<ClusteringResult, FunnelError> {
    if !(0.0..=1.0).contains(&cfg.lambda) {
        return Err(ObjectiveError::InvalidLambda(cfg.lambda).into());
    }
    let mut result = ClusteringResult::start(pmf, lagrangian(pmf, cfg.lambda));
    let max_outer = cfg.max_outer_iters.unwrap_or(pmf.x_len());
    let mut current = pmf.clone();
    for k in 0..max_outer {
        if current.x_len() <= 1 {
            break;
        }
        let objective = MergeObjective::new(current.clone(), cfg.lambda, cfg.problem)?;
        let (f, g) = objective.submodular_pair();
        let inst = MdsfInstance::new(f, g)?;
        let opts = MdsfOptions {
            max_iters: cfg.max_inner_iters,
            seed: outer_seed(cfg.seed, k),
            restarts: cfg.restarts,
            ..Default::default()
        };
        let sol = minimize(&inst, cfg.strategy, &[], &opts)?;
        result.warnings.extend(sol.trace.warnings.iter().map(|w| format!("outer {k}: {w}")));
        log::debug!(
            "outer {k}: |X̂| = {}, |W*| = {}, objective {:.6e}, {} inner steps",
            current.x_len(),
            sol.minimizer.len(),
            sol.value,
            sol.trace.iterates.len() - 1
        );
        // Only strictly improving merges of two or more symbols count.
        if sol.minimizer.len() < 2 || sol.value >= -IMPROVEMENT_TOLERANCE {
            break;
        }
        let labels = labels_of(&current, &sol.minimizer);
        let merged = current.merge(&MergeSet::new(sol.minimizer.iter().copied())).expect("minimizer within alphabet");
        let value = lagrangian(&merged, cfg.lambda);
        result.record_merge(labels, merged.clone(), value);
        current = merged;
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseConfig {
    pub problem: Problem,
    /// Utility floor `θ_U` on `I(X;X̂)` for PF, relevance floor on `I(S;X̂)`
    /// for IB, in bits.
    pub threshold: f64,
}

/// Greedy pairwise merging for the privacy funnel: among pairs keeping
/// `I(X;X̂) ≥ θ`, merge the one with the least leakage.
pub fn pairwise_merge_pf(pmf: &JointPmf, cfg: &PairwiseConfig) -> Result<ClusteringResult, FunnelError> {
    pairwise(pmf, Problem::Pf, cfg.threshold)
}

/// Greedy pairwise merging for the information bottleneck: among pairs
/// keeping `I(S;X̂) ≥ θ`, merge the one with the lowest rate.
pub fn pairwise_merge_ib(pmf: &JointPmf, cfg: &PairwiseConfig) -> Result<ClusteringResult, FunnelError> {
    pairwise(pmf, Problem::Ib, cfg.threshold)
}

/// Dispatches on `cfg.problem`.
pub fn pairwise_merge(pmf: &JointPmf, cfg: &PairwiseConfig) -> Result<ClusteringResult, FunnelError> {
    pairwise(pmf, cfg.problem, cfg.threshold)
}

fn pairwise(pmf: &JointPmf, problem: Problem, threshold: f64) -> Result<ClusteringResult, FunnelError> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(FunnelError::InvalidThreshold(threshold));
    }
    let tracked = |leak: f64, util: f64| if problem == Problem::Pf { leak } else { util };
    let mut result = ClusteringResult::start(pmf, tracked(pmf.mutual_information(), pmf.entropy(Axis::X)));
    let mut current = pmf.clone();
    while current.x_len() > 1 {
        let leak = current.mutual_information();
        let util = current.entropy(Axis::X);
        let f = MergeEntropyFn::marginal(&current);
        let g = MergeEntropyFn::joint(&current);
        let n = current.x_len();
        // (objective, i, j)
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            for j in i + 1..n {
                let fv = f.eval(&[i, j]);
                let gv = g.eval(&[i, j]);
                let merged_leak = leak - gv + fv;
                let merged_util = util + fv;
                let (feasible, score) = match problem {
                    Problem::Pf => (merged_util >= threshold - CONSTRAINT_SLACK, merged_leak),
                    Problem::Ib => (merged_leak >= threshold - CONSTRAINT_SLACK, merged_util),
                };
                if feasible && best.is_none_or(|(b, _, _)| score < b - TIE_TOLERANCE) {
                    best = Some((score, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else { break };
        let labels = labels_of(&current, &[i, j]);
        let merged = current.merge(&MergeSet::new([i, j])).expect("pair within alphabet");
        let value = tracked(merged.mutual_information(), merged.entropy(Axis::X));
        result.record_merge(labels, merged.clone(), value);
        current = merged;
    }
    Ok(result)
}

/// One point of a privacy–utility frontier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub lambda: f64,
    pub leakage_bits: f64,
    pub utility_bits: f64,
    /// `I(S;X̂) / H(S)`.
    pub leakage_norm: f64,
    /// `−I(X;X̂) / H(X)`.
    pub utility_loss_norm: f64,
    pub alphabet_size: usize,
    pub iterations: usize,
}

/// Entropies of the input used to normalize frontier coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizers {
    pub h_s: f64,
    pub h_x: f64,
}

impl Normalizers {
    pub fn of(pmf: &JointPmf) -> Self {
        Normalizers { h_s: pmf.entropy(Axis::S), h_x: pmf.entropy(Axis::X) }
    }

    pub fn point(&self, lambda: f64, result: &ClusteringResult) -> FrontierPoint {
        let leakage_norm = if self.h_s > 0.0 { (result.leakage_bits / self.h_s).clamp(0.0, 1.0) } else { 0.0 };
        let utility_loss_norm = if self.h_x > 0.0 { (-result.utility_bits / self.h_x).clamp(-1.0, 0.0) } else { 0.0 };
        FrontierPoint {
            lambda,
            leakage_bits: result.leakage_bits,
            utility_bits: result.utility_bits,
            leakage_norm,
            utility_loss_norm,
            alphabet_size: result.alphabet_size(),
            iterations: result.iterations,
        }
    }
}

/// Runs [`iac_mdsf`] for every `λ` and returns the points sorted by `λ`.
///
/// `parallel` is the number of worker threads; `1` runs sequentially.
pub fn sweep(
    pmf: &JointPmf,
    lambdas: &[f64],
    base: &RunConfig,
    parallel: usize,
) -> Result<Vec<(FrontierPoint, ClusteringResult)>, FunnelError> {
    let norms = Normalizers::of(pmf);
    let mut lambdas = lambdas.to_vec();
    lambdas.sort_by(f64::total_cmp);
    let run = |&lambda: &f64| -> Result<(FrontierPoint, ClusteringResult), FunnelError> {
        let cfg = RunConfig { lambda, ..base.clone() };
        let result = iac_mdsf(pmf, &cfg)?;
        Ok((norms.point(lambda, &result), result))
    };
    if parallel <= 1 {
        lambdas.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .map_err(|e| FunnelError::ThreadPool(e.to_string()))?;
        pool.install(|| lambdas.par_iter().map(run).collect())
    }
}

/// Frontier points only; see [`sweep`].
pub fn sweep_points(
    pmf: &JointPmf,
    lambdas: &[f64],
    problem: Problem,
    strategy: Strategy,
) -> Result<Vec<FrontierPoint>, FunnelError> {
    let base = RunConfig { problem, strategy, ..Default::default() };
    Ok(sweep(pmf, lambdas, &base, 1)?.into_iter().map(|(p, _)| p).collect())
}

/// Global optimum over all partitions of the alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactOptimum {
    pub partition: Partition,
    /// `I(S;X̂) − λ I(X;X̂)` at the optimum.
    pub lagrangian: f64,
    /// The minimized objective: the Lagrangian for PF, its negation for IB.
    pub value: f64,
}

/// Minimizes the problem's Lagrangian over every hard clustering of `X`.
pub fn pareto_exact(pmf: &JointPmf, lambda: f64, problem: Problem) -> Result<ExactOptimum, FunnelError> {
    let n = pmf.x_len();
    if n > MAX_EXACT_N {
        return Err(FunnelError::GroundSetTooLarge { n, max: MAX_EXACT_N });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ObjectiveError::InvalidLambda(lambda).into());
    }
    let sign = if problem == Problem::Pf { 1.0 } else { -1.0 };
    let ns = pmf.s_len();
    let ps = pmf.s_marginal();
    // ties go to the finer partition, i.e. the one with fewer merges
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    let mut block_of = vec![0usize; n];
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    // restricted growth strings enumerate each set partition once
    loop {
        let blocks = block_of.iter().copied().max().map_or(0, |m| m + 1);
        cols.clear();
        cols.resize(blocks, vec![0.0; ns]);
        for (x, &b) in block_of.iter().enumerate() {
            for (acc, &v) in cols[b].iter_mut().zip(pmf.column(x)) {
                *acc += v;
            }
        }
        let mut mi = 0.0;
        let mut hx = 0.0;
        for col in &cols {
            let px: f64 = col.iter().sum();
            hx -= crate::dist::plog2p(px);
            for (&p, &q) in col.iter().zip(&ps) {
                if p > 0.0 {
                    mi += p * (p / (q * px)).log2();
                }
            }
        }
        let value = sign * (mi.max(0.0) - lambda * hx);
        let better = best.as_ref().is_none_or(|(b, bb, _)| {
            value < *b - TIE_TOLERANCE || (value <= *b + TIE_TOLERANCE && blocks > *bb)
        });
        if better {
            best = Some((value, blocks, block_of.clone()));
        }
        if !next_restricted_growth(&mut block_of) {
            break;
        }
    }
    let (_, _, assignment) = best.expect("at least one partition");
    let blocks = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let partition = Partition::new(
        (0..blocks).map(|b| MergeSet::new((0..n).filter(|&x| assignment[x] == b))).collect(),
        n,
    )
    .expect("restricted growth string is a partition");
    let clustered = pmf.apply_partition(&partition).expect("valid partition");
    let lag = lagrangian(&clustered, lambda);
    Ok(ExactOptimum { partition, lagrangian: lag, value: sign * lag })
}

fn next_restricted_growth(a: &mut [usize]) -> bool {
    let n = a.len();
    for i in (1..n).rev() {
        let max_prefix = a[..i].iter().copied().max().unwrap_or(0);
        if a[i] <= max_prefix {
            a[i] += 1;
            for v in a[i + 1..].iter_mut() {
                *v = 0;
            }
            return true;
        }
    }
    false
}
