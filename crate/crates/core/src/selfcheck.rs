//! Randomized property suites shared by the `check` command and the test
//! targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::JointPmf;
use crate::funnel::{iac_mdsf, RunConfig};
use crate::ingest::random_joint;
use crate::mdsf::{minimize, MdsfInstance, MdsfOptions, Strategy};
use crate::set_functions::{MergeEntropyFn, MergeObjective, Problem};
use crate::sfm::{min_norm_point, sfm_bruteforce, SetFunction};

pub const LAMBDA_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Deliberate defects for exercising the suites themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Use `+g` in place of `−g` in the merge objective.
    FlipG,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub trials: usize,
    pub seed: u64,
    /// Upper bound on the ground-set size of generated instances.
    pub max_n: usize,
    pub fault: Fault,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { trials: 100, seed: 0, max_n: 8, fault: Fault::None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: usize,
    pub failures: usize,
    /// Largest observed deviation from the property (0 when it holds exactly
    /// everywhere).
    pub worst: f64,
    pub tolerance: f64,
}

impl SuiteReport {
    fn new(name: &'static str, tolerance: f64) -> Self {
        SuiteReport { name, checks: 0, failures: 0, worst: 0.0, tolerance }
    }

    fn observe(&mut self, deviation: f64) {
        self.checks += 1;
        if deviation.is_nan() || deviation > self.tolerance {
            self.failures += 1;
        }
        if deviation.is_nan() {
            self.worst = f64::NAN;
        } else if !self.worst.is_nan() {
            self.worst = self.worst.max(deviation);
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn suite_rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn random_shape(rng: &mut ChaCha8Rng, max_s: usize, max_x: usize) -> (usize, usize) {
    (rng.gen_range(2..=max_s.max(2)), rng.gen_range(1..=max_x.max(1)))
}

/// Random joint, sometimes with zero entries so that sparse columns are
/// covered too.
pub fn random_pmf(rng: &mut ChaCha8Rng, max_s: usize, max_x: usize) -> JointPmf {
    let (s, x) = random_shape(rng, max_s, max_x);
    if rng.gen_bool(0.3) {
        crate::ingest::random_sparse_joint(s, x, 0.4, rng)
    } else {
        random_joint(s, x, rng)
    }
}

/// Deviation between merged-Lagrangian differences and the set-function
/// objective, over every subset of the alphabet.
pub fn equivalence_suite(cfg: &CheckConfig) -> SuiteReport {
    let mut report = SuiteReport::new("equivalence", 1e-9);
    let mut rng = suite_rng(cfg.seed, 1);
    let max_x = cfg.max_n.min(8);
    for _ in 0..cfg.trials {
        let pmf = random_pmf(&mut rng, 5, max_x);
        for &lambda in &LAMBDA_GRID {
            let obj = MergeObjective::new(pmf.clone(), lambda, Problem::Pf).expect("lambda in grid");
            let dev = match cfg.fault {
                Fault::None => obj.check_equivalence().expect("small alphabet"),
                Fault::FlipG => {
                    let base = obj.lagrangian_direct(&[]);
                    let mut worst = 0.0f64;
                    crate::sfm::for_each_subset(pmf.x_len(), |w| {
                        let flipped = (1.0 - lambda) * obj.f_value(w) + obj.g_value(w);
                        worst = worst.max(((obj.lagrangian_direct(w) - base) - flipped).abs());
                    });
                    worst
                }
            };
            report.observe(dev);
        }
    }
    report
}

/// Largest violation of `F(A) + F(B) ≥ F(A∪B) + F(A∩B)` over all pairs, and
/// of `F(A ∪ {i}) ≤ F(A)` over all `A, i`, from a table of `2^n` values.
pub fn lattice_violations(table: &[f64], n: usize) -> (f64, f64) {
    let full = 1usize << n;
    let mut sub = 0.0f64;
    for a in 0..full {
        for b in (a + 1)..full {
            let v = table[a | b] + table[a & b] - table[a] - table[b];
            sub = sub.max(v);
        }
    }
    let mut mono = 0.0f64;
    for a in 0..full {
        for i in 0..n {
            if a & (1 << i) == 0 {
                mono = mono.max(table[a | (1 << i)] - table[a]);
            }
        }
    }
    (sub, mono)
}

pub fn value_table<F: SetFunction + ?Sized>(f: &F) -> Vec<f64> {
    let n = f.ground_size();
    let mut set = Vec::with_capacity(n);
    (0..1usize << n)
        .map(|mask| {
            set.clear();
            set.extend((0..n).filter(|i| mask & (1 << i) != 0));
            f.eval(&set)
        })
        .collect()
}

/// Submodularity and monotonicity of both merge functions.
pub fn submodularity_suite(cfg: &CheckConfig) -> SuiteReport {
    let mut report = SuiteReport::new("submodularity", 1e-9);
    let mut rng = suite_rng(cfg.seed, 2);
    let max_x = cfg.max_n.min(8);
    for _ in 0..cfg.trials {
        let pmf = random_pmf(&mut rng, 5, max_x);
        for func in [MergeEntropyFn::marginal(&pmf), MergeEntropyFn::joint(&pmf)] {
            let (sub, mono) = lattice_violations(&value_table(&func), pmf.x_len());
            report.observe(sub.max(mono));
        }
    }
    report
}

/// Normalized submodular function built from a weighted coverage, a graph
/// cut, a concave function of cardinality and a modular term.
#[derive(Debug, Clone)]
pub struct RandomSubmodular {
    n: usize,
    covers: Vec<Vec<usize>>,
    element_weights: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
    concave: f64,
    modular: Vec<f64>,
}

impl RandomSubmodular {
    pub fn generate(n: usize, rng: &mut impl Rng) -> Self {
        let universe = rng.gen_range(1..=2 * n.max(1));
        let element_weights = (0..universe).map(|_| rng.gen_range(0.0..1.0)).collect();
        let covers = (0..n).map(|_| (0..universe).filter(|_| rng.gen_bool(0.3)).collect()).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(0.4) {
                    edges.push((i, j, rng.gen_range(0.0..1.0)));
                }
            }
        }
        let concave = rng.gen_range(0.0..1.0);
        let modular = (0..n).map(|_| rng.gen_range(-2.0..1.0)).collect();
        RandomSubmodular { n, covers, element_weights, edges, concave, modular }
    }
}

impl SetFunction for RandomSubmodular {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn eval(&self, set: &[usize]) -> f64 {
        let mut inside = vec![false; self.n];
        for &i in set {
            inside[i] = true;
        }
        let mut covered = vec![false; self.element_weights.len()];
        for &i in set {
            for &e in &self.covers[i] {
                covered[e] = true;
            }
        }
        let coverage: f64 =
            covered.iter().zip(&self.element_weights).filter(|(c, _)| **c).map(|(_, w)| w).sum();
        let cut: f64 = self.edges.iter().filter(|(i, j, _)| inside[*i] != inside[*j]).map(|(_, _, w)| w).sum();
        let modular: f64 = set.iter().map(|&i| self.modular[i]).sum();
        coverage + cut + self.concave * (set.len() as f64).sqrt() + modular
    }
}

/// Min-norm point against exhaustive search.
pub fn sfm_suite(cfg: &CheckConfig, instances: usize) -> SuiteReport {
    let mut report = SuiteReport::new("sfm-vs-bruteforce", 1e-8);
    let mut rng = suite_rng(cfg.seed, 3);
    let max_n = cfg.max_n.min(12);
    for _ in 0..instances {
        let n = rng.gen_range(1..=max_n.max(1));
        let f = RandomSubmodular::generate(n, &mut rng);
        let dev = match (min_norm_point(&f, 1e-10), sfm_bruteforce(&f)) {
            (Ok(sol), Ok((_, best))) => (sol.value - best).abs(),
            _ => f64::NAN,
        };
        report.observe(dev);
    }
    report
}

fn trace_ascent(values: &[f64]) -> f64 {
    values.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// Every solver trace is nonincreasing; outer trajectories move in the
/// direction of the problem.
pub fn descent_suite(cfg: &CheckConfig) -> SuiteReport {
    let mut report = SuiteReport::new("mdsf-descent", 1e-12);
    let mut rng = suite_rng(cfg.seed, 4);
    let max_x = cfg.max_n.min(10);
    for trial in 0..cfg.trials {
        let pmf = random_pmf(&mut rng, 4, max_x);
        let lambda: f64 = rng.gen_range(0.0..1.0);
        let problem = if trial % 2 == 0 { Problem::Pf } else { Problem::Ib };
        let strategy = if rng.gen_bool(0.5) { Strategy::SupSub } else { Strategy::ModMod };
        let obj = MergeObjective::new(pmf.clone(), lambda, problem).expect("lambda in range");
        let (f, g) = obj.submodular_pair();
        let inst = MdsfInstance::new(f, g).expect("same ground set");
        let n = pmf.x_len();
        let init: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        let opts = MdsfOptions { seed: rng.gen(), ..Default::default() };
        match minimize(&inst, strategy, &init, &opts) {
            Ok(sol) => report.observe(trace_ascent(&sol.trace.values().collect::<Vec<_>>())),
            Err(_) => report.observe(f64::NAN),
        }

        let run = RunConfig { lambda, problem, strategy, seed: trial as u64, ..Default::default() };
        match iac_mdsf(&pmf, &run) {
            Ok(res) => {
                let oriented: Vec<f64> = match problem {
                    Problem::Pf => res.trajectory.clone(),
                    Problem::Ib => res.trajectory.iter().map(|v| -v).collect(),
                };
                report.observe(trace_ascent(&oriented));
            }
            Err(_) => report.observe(f64::NAN),
        }
    }
    report
}

/// All suites in a fixed order. SFM gets twice the trials.
pub fn run_all(cfg: &CheckConfig) -> Vec<SuiteReport> {
    vec![
        equivalence_suite(cfg),
        submodularity_suite(cfg),
        sfm_suite(&CheckConfig { max_n: cfg.max_n.max(1), ..cfg.clone() }, 2 * cfg.trials),
        descent_suite(cfg),
    ]
}
