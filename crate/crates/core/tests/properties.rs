use iac_funnel::dist::{Axis, JointPmf, MergeSet, Partition};
use iac_funnel::funnel::{iac_mdsf, pairwise_merge, pareto_exact, PairwiseConfig, RunConfig};
use iac_funnel::mdsf::{
    mdsf_bruteforce, minimize, modular_lower_bound, modular_upper_bounds, MdsfInstance, MdsfOptions, Strategy as Solver,
};
use iac_funnel::selfcheck::{lattice_violations, value_table, RandomSubmodular};
use iac_funnel::set_functions::{MergeEntropyFn, MergeObjective, Problem};
use iac_funnel::sfm::{for_each_subset, greedy_base_vertex, min_norm_point, sfm_bruteforce, SetFunction};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pmf_strategy(max_s: usize, max_x: usize) -> impl Strategy<Value = JointPmf> {
    (2..=max_s, 1..=max_x)
        .prop_flat_map(|(s, x)| prop::collection::vec(prop::collection::vec(0.0f64..1.0, x), s))
        .prop_filter_map("needs mass", |rows| {
            let names_s = iac_funnel::Alphabet::numbered(rows.len());
            let names_x = iac_funnel::Alphabet::numbered(rows[0].len());
            JointPmf::from_weights(names_s, names_x, &rows).ok()
        })
}

fn random_partition(n: usize, labels: &[usize]) -> Partition {
    let k = labels.iter().take(n).copied().max().unwrap_or(0) + 1;
    let blocks: Vec<MergeSet> = (0..k)
        .map(|b| MergeSet::new((0..n).filter(|&x| labels[x] == b)))
        .filter(|m| !m.is_empty())
        .collect();
    Partition::new(blocks, n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn merging_conserves_mass_and_processes_data(
        pmf in pmf_strategy(4, 7),
        labels in prop::collection::vec(0usize..4, 7),
    ) {
        let n = pmf.x_len();
        let part = random_partition(n, &labels);
        let merged = pmf.apply_partition(&part).unwrap();
        prop_assert!((merged.total() - 1.0).abs() <= 1e-12);
        for (a, b) in merged.s_marginal().iter().zip(pmf.s_marginal()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        prop_assert!(merged.mutual_information() <= pmf.mutual_information() + 1e-12);
        prop_assert!(merged.entropy(Axis::X) <= pmf.entropy(Axis::X) + 1e-12);
        prop_assert!(merged.mutual_information() >= 0.0);
        prop_assert!(merged.mutual_information() <= merged.entropy(Axis::S).min(merged.entropy(Axis::X)) + 1e-12);
    }

    #[test]
    fn merge_functions_are_submodular_and_nonincreasing(pmf in pmf_strategy(5, 8)) {
        for func in [MergeEntropyFn::marginal(&pmf), MergeEntropyFn::joint(&pmf)] {
            let (sub, mono) = lattice_violations(&value_table(&func), pmf.x_len());
            prop_assert!(sub <= 1e-9 && mono <= 1e-9, "sub {} mono {}", sub, mono);
        }
    }

    #[test]
    fn equivalence_holds_on_every_subset(pmf in pmf_strategy(5, 7), lambda in 0.0f64..=1.0) {
        let obj = MergeObjective::new(pmf, lambda, Problem::Pf).unwrap();
        prop_assert!(obj.check_equivalence().unwrap() <= 1e-9);
    }

    #[test]
    fn incremental_formulas_match_merges(pmf in pmf_strategy(4, 7), mask in 0u32..128) {
        let n = pmf.x_len();
        let w: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        prop_assume!(w.len() >= 2);
        let merged = pmf.merge(&MergeSet::new(w.iter().copied())).unwrap();
        let f = MergeEntropyFn::marginal(&pmf).eval(&w);
        let g = MergeEntropyFn::joint(&pmf).eval(&w);
        prop_assert!((merged.mutual_information() - (pmf.mutual_information() - g + f)).abs() <= 1e-9);
        prop_assert!((merged.entropy(Axis::X) - (pmf.entropy(Axis::X) + f)).abs() <= 1e-9);
    }

    #[test]
    fn greedy_vertex_lies_in_base_polytope(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = RandomSubmodular::generate(n, &mut rng);
        let mut perm: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let y = greedy_base_vertex(&f, &perm).unwrap();
        let full: Vec<usize> = (0..n).collect();
        prop_assert!((y.total() - f.eval(&full)).abs() <= 1e-9);
        for_each_subset(n, |s| assert!(y.value_on(s) <= f.eval(s) + 1e-9));
        for k in 0..=n {
            let mut prefix = perm[..k].to_vec();
            prefix.sort_unstable();
            prop_assert!((y.value_on(&prefix) - f.eval(&prefix)).abs() <= 1e-9);
        }
    }

    #[test]
    fn min_norm_point_matches_bruteforce(seed in any::<u64>(), n in 1usize..11) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = RandomSubmodular::generate(n, &mut rng);
        let sol = min_norm_point(&f, 1e-10).unwrap();
        let (_, best) = sfm_bruteforce(&f).unwrap();
        prop_assert!((sol.value - best).abs() <= 1e-8, "{} vs {}", sol.value, best);
        prop_assert!((f.eval(&sol.minimizer) - sol.value).abs() <= 1e-12);
    }

    #[test]
    fn bounds_are_sound_and_tight(pmf in pmf_strategy(4, 7), mask in 0u32..128, seed in any::<u64>()) {
        let n = pmf.x_len();
        let anchor: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let g = MergeEntropyFn::joint(&pmf);
        let f = MergeEntropyFn::marginal(&pmf);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut head = anchor.clone();
        let mut tail: Vec<usize> = (0..n).filter(|i| !anchor.contains(i)).collect();
        rand::seq::SliceRandom::shuffle(head.as_mut_slice(), &mut rng);
        rand::seq::SliceRandom::shuffle(tail.as_mut_slice(), &mut rng);
        head.extend(tail);
        let (weights, tight) = modular_lower_bound(&g, &anchor, &head).unwrap();
        prop_assert_eq!(&tight, &anchor);
        let lower = |s: &[usize]| s.iter().map(|&i| weights[i]).sum::<f64>();
        prop_assert!((lower(&anchor) - g.eval(&anchor)).abs() <= 1e-9);
        let uppers = modular_upper_bounds(&f, &anchor);
        for u in &uppers {
            prop_assert!((u.value(&anchor) - f.eval(&anchor)).abs() <= 1e-9);
        }
        let mut ok = true;
        for_each_subset(n, |s| {
            ok &= lower(s) <= g.eval(s) + 1e-9;
            ok &= uppers.iter().all(|u| u.value(s) >= f.eval(s) - 1e-9);
        });
        prop_assert!(ok);
    }

    #[test]
    fn solver_traces_descend(
        pmf in pmf_strategy(4, 8),
        lambda in 0.0f64..1.0,
        ib in any::<bool>(),
        modmod in any::<bool>(),
        seed in any::<u64>(),
        mask in 0u32..256,
    ) {
        let problem = if ib { Problem::Ib } else { Problem::Pf };
        let strategy = if modmod { Solver::ModMod } else { Solver::SupSub };
        let obj = MergeObjective::new(pmf.clone(), lambda, problem).unwrap();
        let (f, g) = obj.submodular_pair();
        let inst = MdsfInstance::new(f, g).unwrap();
        let n = pmf.x_len();
        let init: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let opts = MdsfOptions { seed, restarts: 3, ..Default::default() };
        let sol = minimize(&inst, strategy, &init, &opts).unwrap();
        let values: Vec<f64> = sol.trace.values().collect();
        for w in values.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        prop_assert!(sol.value <= inst.objective(&init) + 1e-12);
        let (_, global) = mdsf_bruteforce(&inst).unwrap();
        prop_assert!(sol.value >= global - 1e-12);
        let again = minimize(&inst, strategy, &init, &opts).unwrap();
        prop_assert_eq!(again, sol);
    }

    #[test]
    fn clustering_runs_respect_bounds(pmf in pmf_strategy(3, 7), lambda in 0.0f64..=1.0, ib in any::<bool>()) {
        let problem = if ib { Problem::Ib } else { Problem::Pf };
        let res = iac_mdsf(&pmf, &RunConfig { lambda, problem, restarts: 2, ..Default::default() }).unwrap();
        prop_assert!(res.iterations < pmf.x_len().max(1));
        prop_assert!(res.leakage_bits >= 0.0 && res.leakage_bits <= pmf.mutual_information() + 1e-9);
        prop_assert!(res.utility_bits >= 0.0 && res.utility_bits <= pmf.entropy(Axis::X) + 1e-12);
        let sizes: Vec<usize> = res.merge_history.iter().map(|m| m.labels.len()).collect();
        prop_assert!(sizes.iter().all(|&m| m >= 2));
        let exact = pareto_exact(&pmf, lambda, problem).unwrap();
        let local = if ib { -res.lagrangian(lambda) } else { res.lagrangian(lambda) };
        prop_assert!(exact.value <= local + 1e-9);

        let pair = pairwise_merge(&pmf, &PairwiseConfig { problem, threshold: 0.5 * pmf.entropy(Axis::X) }).unwrap();
        prop_assert!(pair.leakage_bits <= pmf.mutual_information() + 1e-9);
    }
}

#[test]
fn modular_pair_is_solved_in_one_step() {
    let f = iac_funnel::sfm::Modular::new(vec![1.0, -2.0, 0.5, -0.1]);
    let g = iac_funnel::sfm::Modular::new(vec![0.5, 1.0, -1.0, 0.3]);
    let inst = MdsfInstance::new(f, g).unwrap();
    let (best_set, best) = mdsf_bruteforce(&inst).unwrap();
    for strategy in [Solver::SupSub, Solver::ModMod] {
        let sol = minimize(&inst, strategy, &[], &MdsfOptions::default()).unwrap();
        assert_eq!(sol.minimizer, best_set);
        assert!((sol.value - best).abs() <= 1e-12);
        assert!(sol.trace.iterates.len() <= 2);
    }
}
