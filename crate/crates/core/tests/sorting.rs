//! Sorting engine against exhaustive and combinatorial oracles.

use hammersley_trees::heap_sort::oracles::{
    exact_expectation, expected_root_count, life_sweep, longest_decreasing_subsequence, min_heaps_bruteforce,
    permutations,
};
use hammersley_trees::heap_sort::{insert_rightmost, sort, SortState};
use hammersley_trees::hammersley_process::{simulate_on_atoms, Horizon, SourcesSinks};
use hammersley_trees::{Atom, OffspringDistribution, RandomStream};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::Rng;

type Q = Ratio<i64>;

fn labels_of(perm: &[usize]) -> Vec<f64> {
    perm.iter().map(|&i| (i + 1) as f64 / (perm.len() + 1) as f64).collect()
}

fn permutation(max_n: usize) -> impl Strategy<Value = Vec<usize>> {
    (1..=max_n).prop_flat_map(|n| Just((0..n).collect::<Vec<_>>()).prop_shuffle())
}

fn instance(max_n: usize, max_lives: u32) -> impl Strategy<Value = Vec<(f64, u32)>> {
    permutation(max_n).prop_flat_map(move |perm| {
        let n = perm.len();
        (Just(perm), prop::collection::vec(1..=max_lives, n))
            .prop_map(|(perm, lives)| labels_of(&perm).into_iter().zip(lives).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sort_is_optimal(items in instance(7, 3)) {
        let s = sort(&items).unwrap();
        prop_assert_eq!(s.root_count(), min_heaps_bruteforce(&items).unwrap());
        s.check_invariants().unwrap();
    }

    #[test]
    fn unit_lives_give_longest_decreasing_subsequence(perm in permutation(8)) {
        let labels = labels_of(&perm);
        let items: Vec<(f64, u32)> = labels.iter().map(|&u| (u, 1)).collect();
        prop_assert_eq!(sort(&items).unwrap().root_count(), longest_decreasing_subsequence(&labels));
    }

    #[test]
    fn forest_conserves_items(items in instance(40, 4)) {
        let s = sort(&items).unwrap();
        let children: usize = s.vertices().iter().map(|v| v.children.len()).sum();
        prop_assert_eq!(s.root_count() + children, items.len());
        for v in s.vertices() {
            prop_assert_eq!(v.children.len() as u32, v.initial_lives - v.remaining_lives);
            if let Some(p) = v.parent {
                prop_assert!(s.vertices()[p].label < v.label);
            }
        }
        let word = s.life_word().unwrap();
        let dead_prefix = word.iter().take_while(|&&k| k == 0).count();
        prop_assert_eq!(s.leading_dead(), dead_prefix);
    }

    #[test]
    fn life_sweep_steps_are_minus_one_then_zero(
        items in instance(8, 3),
        pick in any::<prop::sample::Index>(),
        m_max in 2u32..8,
    ) {
        let labels: Vec<f64> = items.iter().map(|x| x.0).collect();
        let lives: Vec<u32> = items.iter().map(|x| x.1).collect();
        let i0 = pick.index(items.len());
        let r = life_sweep(&labels, &lives, i0, m_max).unwrap();
        let mut flat = false;
        for w in r.windows(2) {
            let d = w[1] as i64 - w[0] as i64;
            prop_assert!(d == -1 || d == 0, "step {d} in {r:?}");
            if flat {
                prop_assert_eq!(d, 0, "{:?}", r);
            }
            flat |= d == 0;
        }
    }
}

#[test]
fn brute_force_agrees_on_every_small_permutation() {
    for n in 1..=7 {
        for perm in permutations(n) {
            let items: Vec<(f64, u32)> = labels_of(&perm).into_iter().map(|u| (u, 1)).collect();
            assert_eq!(sort(&items).unwrap().root_count(), min_heaps_bruteforce(&items).unwrap(), "{perm:?}");
        }
    }
}

#[test]
fn worked_examples() {
    let worked = [(0.1, 2), (0.8, 3), (0.4, 1), (0.2, 2), (0.5, 2), (0.15, 3)];
    assert_eq!(sort(&worked).unwrap().root_count(), 3);
    assert_eq!(min_heaps_bruteforce(&worked).unwrap(), 3);
    let sigma = [3.0, 6.0, 1.0, 7.0, 5.0, 4.0, 2.0];
    let stacks: Vec<(f64, u32)> = sigma.iter().map(|&s| (s / 8.0, 1)).collect();
    assert_eq!(sort(&stacks).unwrap().root_count(), 4);
    assert_eq!(longest_decreasing_subsequence(&sigma), 4);
    assert_eq!(sort::<f64>(&[]).unwrap().root_count(), 0);
}

fn half(a: u32, b: u32) -> Vec<(u32, Q)> {
    vec![(a, Q::new(1, 2)), (b, Q::new(1, 2))]
}

#[test]
fn exact_leading_dead_and_root_means() {
    let mu = half(1, 10);
    assert_eq!(exact_expectation(1, &mu, |s| s.leading_dead()).unwrap(), Q::from(0));
    assert_eq!(exact_expectation(2, &mu, |s| s.leading_dead()).unwrap(), Q::new(1, 4));
    assert_eq!(exact_expectation(2, &mu, |s| s.leading_dead() + 1).unwrap(), Q::new(5, 4));
    assert_eq!(exact_expectation(2, &mu, SortState::root_count).unwrap(), Q::new(3, 2));
}

#[test]
fn exact_recursion_for_root_increments() {
    // E[R(n+1)] - E[R(n)] = E[D_n + 1] / (n + 1)
    for mu in [half(1, 3), half(1, 10), vec![(2, Q::from(1))]] {
        for n in 1..=5 {
            let r_next = exact_expectation(n + 1, &mu, SortState::root_count).unwrap();
            let r = exact_expectation(n, &mu, SortState::root_count).unwrap();
            let d = exact_expectation(n, &mu, |s| s.leading_dead() + 1).unwrap();
            assert_eq!(r_next - r, d / Q::from(n as i64 + 1), "n = {n}");
        }
    }
}

#[test]
fn recursion_holds_by_monte_carlo_at_fifty() {
    let n = 50;
    let dist = OffspringDistribution::geometric(0.5).unwrap();
    let reps = 100_000;
    let mut diffs = Vec::with_capacity(reps);
    for r in 0..reps {
        let mut rng = RandomStream::for_replica(5, 77, r as u64);
        let mut s = SortState::<f64>::counting(true);
        for _ in 0..n {
            let u: f64 = rng.gen();
            s.insert_next(u, dist.sample(&mut rng)).unwrap();
        }
        let (r_n, d_n) = (s.root_count() as f64, s.leading_dead() as f64);
        let u: f64 = rng.gen();
        s.insert_next(u, dist.sample(&mut rng)).unwrap();
        diffs.push(s.root_count() as f64 - r_n - (d_n + 1.0) / (n + 1) as f64);
    }
    let m = hammersley_trees::stats::mean(&diffs);
    let se = hammersley_trees::stats::std_error(&diffs);
    assert!(m.abs() <= 3.0 * se, "mean {m}, se {se}");
}

#[test]
fn coupling_inequality_on_the_worked_sequence() {
    let labels = [0.3, 0.6, 0.1, 0.8, 0.5];
    let v = expected_root_count(&labels, &half(1, 3)).unwrap();
    let vp = expected_root_count(&labels, &[(2, Q::from(1))]).unwrap();
    assert!(vp <= v, "{vp} > {v}");
    assert_eq!(expected_root_count(&[0.4], &half(1, 3)).unwrap(), Q::from(1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn coupling_inequality_on_random_sequences(perm in permutation(8)) {
        let labels = labels_of(&perm);
        let v = expected_root_count(&labels, &half(1, 3)).unwrap();
        let vp = expected_root_count(&labels, &[(2, Q::from(1))]).unwrap();
        prop_assert!(vp <= v);
    }
}

fn random_atoms(rng: &mut RandomStream, n: usize, dist: &OffspringDistribution<f64>, x_hi: f64) -> Vec<Atom<f64>> {
    let mut atoms: Vec<Atom<f64>> = (0..n)
        .map(|_| Atom::new(rng.gen::<f64>() * x_hi, rng.gen::<f64>(), dist.sample(rng)))
        .collect();
    atoms.sort_by(|a, b| a.time.total_cmp(&b.time));
    atoms
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rightmost_insertion_equals_resort(seed in any::<u64>(), n in 0usize..50, extra in 1usize..4) {
        let dist = OffspringDistribution::geometric(0.5).unwrap();
        let mut rng = RandomStream::new(seed, 1);
        let base = random_atoms(&mut rng, n, &dist, 0.5);
        let horizon = Horizon::new(0.0, 1.0, 1.0).unwrap();
        let sim = simulate_on_atoms(horizon, &base, &SourcesSinks::none(), &[]).unwrap();
        let (mut state, mut record) = (sim.state, sim.record);
        let mut all = base.clone();
        let mut x = 0.5;
        for _ in 0..extra {
            x += rng.gen::<f64>() * 0.1;
            let atom = Atom::new(x, rng.gen::<f64>(), dist.sample(&mut rng));
            let before: Vec<u32> = state.vertices().iter().map(|v| v.remaining_lives).collect();
            let roots_before = state.root_count();
            let out = insert_rightmost(&mut state, &mut record, atom).unwrap();
            let losses: Vec<u32> = before
                .iter()
                .zip(state.vertices())
                .filter(|(&b, v)| b > 0 && v.remaining_lives != b)
                .map(|(&b, v)| b - v.remaining_lives)
                .collect();
            prop_assert!(losses.len() <= 1 && losses.iter().all(|&l| l == 1), "{:?}", losses);
            all.push(atom);
            all.sort_by(|a, b| a.time.total_cmp(&b.time));
            let full = simulate_on_atoms(horizon, &all, &SourcesSinks::none(), &[]).unwrap();
            prop_assert_eq!(state.root_count(), full.state.root_count());
            prop_assert_eq!(out.created_root, state.root_count() == roots_before + 1);
            prop_assert_eq!(state.life_word().unwrap(), full.state.life_word().unwrap());
            record.validate().unwrap();
        }
        state.check_invariants().unwrap();
    }

    #[test]
    fn leading_dead_never_decreases_under_rightward_growth(seed in any::<u64>(), n in 1usize..60) {
        let dist = OffspringDistribution::geometric(0.5).unwrap();
        let mut rng = RandomStream::new(seed, 2);
        let sim = simulate_on_atoms(Horizon::new(0.0, 1.0, 1.0).unwrap(), &[], &SourcesSinks::none(), &[]).unwrap();
        let (mut state, mut record) = (sim.state, sim.record);
        let mut xs: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        xs.sort_by(f64::total_cmp);
        let mut last = 0;
        for x in xs {
            insert_rightmost(&mut state, &mut record, Atom::new(x, rng.gen(), dist.sample(&mut rng))).unwrap();
            let d = state.leading_dead();
            prop_assert!(d >= last, "{} after {}", d, last);
            last = d;
        }
    }
}

#[test]
fn optimal_at_the_bruteforce_limit() {
    use rand::seq::SliceRandom;
    let mut rng = RandomStream::new(9, 0);
    for _ in 0..20 {
        let mut perm: Vec<usize> = (0..9).collect();
        perm.shuffle(&mut rng);
        let items: Vec<(f64, u32)> = labels_of(&perm).into_iter().map(|u| (u, rng.gen_range(1..=3))).collect();
        assert_eq!(sort(&items).unwrap().root_count(), min_heaps_bruteforce(&items).unwrap(), "{items:?}");
    }
}
