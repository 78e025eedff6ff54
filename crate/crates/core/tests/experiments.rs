//! Experiment runners at desk scale: determinism and small exact cases.

use hammersley_trees::experiments::{
    coupling_inequality_check, default_params, estimate_c_slope, estimate_c_via_d, halfplane_fixation,
    heapable_probability, run_named, stationarity_suite, tagged_particle, trees_crossing, CSlopeParams, CViaDParams,
    CouplingParams, Exec, HalfplaneParams, HeapableParams, StationarityParams, TaggedParams, TreesCrossingParams,
    EXPERIMENTS,
};
use hammersley_trees::heap_sort::oracles::exact_expectation;
use hammersley_trees::Error;
use num_rational::Ratio;

fn small_params(name: &str) -> serde_json::Value {
    let mut p = default_params(name).unwrap();
    let o = p.as_object_mut().unwrap();
    let set = |o: &mut serde_json::Map<String, serde_json::Value>, k: &str, v: serde_json::Value| {
        if o.contains_key(k) {
            o.insert(k.into(), v);
        }
    };
    set(o, "replicas", 20.into());
    set(o, "sequences", 5.into());
    set(o, "n_grid", serde_json::json!([100, 1000]));
    set(o, "d_replicas", 20.into());
    set(o, "d_n", 500.into());
    set(o, "n", 500.into());
    set(o, "subgrid", serde_json::json!([50]));
    set(o, "bootstrap", 100.into());
    set(o, "b_grid", serde_json::json!([40.0, 50.0]));
    set(o, "t_max", 20.0.into());
    set(o, "sample_times", serde_json::json!([0.0, 4.0, 10.0, 20.0]));
    if name == "tagged_particle" {
        o["tolerances"]["drift_time"] = 10.0.into();
        o["tolerances"]["limit_time"] = 20.0.into();
    }
    if name == "heapable_probability" {
        o.insert("n".into(), 6.into());
    }
    p
}

#[test]
fn every_experiment_is_deterministic_and_rerunnable() {
    for name in EXPERIMENTS {
        let params = small_params(name);
        let par = run_named(name, params.clone(), Exec::Parallel).unwrap();
        let ser = run_named(name, params, Exec::Serial).unwrap();
        assert_eq!(par.to_json(), ser.to_json(), "{name}: serial and parallel differ");
        assert_eq!(par.rerun(Exec::Parallel).unwrap().to_json(), par.to_json(), "{name}: rerun differs");
        assert_eq!(par.experiment, *name);
    }
}

#[test]
fn seeds_change_results() {
    let mut p = HeapableParams { n: 4, replicas: 2000, ..HeapableParams::default() };
    let a = heapable_probability(&p, Exec::Parallel).unwrap();
    p.seed += 1;
    let b = heapable_probability(&p, Exec::Parallel).unwrap();
    assert_ne!(a.estimate, b.estimate);
}

#[test]
fn unknown_experiment_and_bad_parameters_are_errors() {
    assert!(run_named("nope", serde_json::json!({}), Exec::Serial).is_err());
    assert!(run_named("heapable_probability", serde_json::json!({"colour": 1}), Exec::Serial).is_err());
    let p = CSlopeParams { n_grid: vec![100, 100], ..CSlopeParams::default() };
    assert!(estimate_c_slope(&p, Exec::Serial).is_err());
    let p = HeapableParams { replicas: 0, ..HeapableParams::default() };
    assert!(heapable_probability(&p, Exec::Serial).is_err());
}

#[test]
fn leading_dead_estimator_is_exact_for_small_n() {
    let p = CViaDParams { dist: "table:1=0.5,10=0.5".into(), n: 2, exact: true, ..CViaDParams::default() };
    let r = estimate_c_via_d(&p, Exec::Serial).unwrap();
    assert_eq!(r.estimate, 1.25);
    let p = CViaDParams { dist: "geom:0.5".into(), n: 1, replicas: 50, subgrid: vec![], ..CViaDParams::default() };
    assert_eq!(estimate_c_via_d(&p, Exec::Serial).unwrap().estimate, 1.0);
}

#[test]
fn coupling_check_passes_on_the_worked_pair_and_rejects_bad_pairs() {
    let p = CouplingParams { labels: Some(vec![0.3, 0.6, 0.1, 0.8, 0.5]), ..CouplingParams::default() };
    let r = coupling_inequality_check(&p, Exec::Serial).unwrap();
    assert!(r.passed && r.estimate <= 0.0);
    let one = CouplingParams { labels: Some(vec![0.5]), ..CouplingParams::default() };
    assert_eq!(coupling_inequality_check(&one, Exec::Serial).unwrap().estimate, 0.0);
    let bad_mean = CouplingParams { mu_prime: "dirac:3".into(), ..CouplingParams::default() };
    assert!(matches!(coupling_inequality_check(&bad_mean, Exec::Serial), Err(Error::InvalidParameter(_))));
    let bad_support = CouplingParams { mu: "dirac:2".into(), mu_prime: "table:1=0.5,3=0.5".into(), ..CouplingParams::default() };
    assert!(coupling_inequality_check(&bad_support, Exec::Serial).is_err());
    let mc = CouplingParams { exact: false, sequences: 3, replicas: 2000, ..CouplingParams::default() };
    assert!(coupling_inequality_check(&mc, Exec::Parallel).unwrap().passed);
}

#[test]
fn heapability_of_one_and_two_items() {
    let p = HeapableParams { n: 1, replicas: 100, ..HeapableParams::default() };
    assert_eq!(heapable_probability(&p, Exec::Serial).unwrap().estimate, 1.0);
    let q = |n, d: i64| Ratio::<i64>::new(n, d);
    for support in [vec![(1, q(1, 1))], vec![(2, q(1, 2)), (5, q(1, 2))]] {
        let p2 = exact_expectation(2, &support, |s| usize::from(s.root_count() == 1)).unwrap();
        assert_eq!(p2, q(1, 2));
    }
}

#[test]
fn reports_serialize_their_checks() {
    let p = StationarityParams { replicas: 200, t_list: vec![1.0], ..StationarityParams::default() };
    let r = stationarity_suite(&p, Exec::Parallel).unwrap();
    let csv = r.checks_csv();
    assert_eq!(csv.lines().count(), r.checks.len() + 1);
    let back: hammersley_trees::experiments::EstimateReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back, r);
    assert!(!r.to_json().contains("wall"));
}

#[test]
fn desk_scale_runs_complete() {
    let h = HalfplaneParams {
        dist: "dirac:2".into(),
        bbox: [0.0, 1.0, 1.0, 2.0],
        b_grid: vec![10.0, 20.0],
        a: -5.0,
        replicas: 50,
        ..HalfplaneParams::default()
    };
    let r = halfplane_fixation(&h, Exec::Parallel).unwrap();
    assert!((0.0..=1.0).contains(&r.estimate));
    let outside = HalfplaneParams { bbox: [0.0, 30.0, 1.0, 2.0], b_grid: vec![10.0, 20.0], ..h };
    assert!(halfplane_fixation(&outside, Exec::Serial).is_err());
    let t = TaggedParams {
        replicas: 20,
        t_max: 10.0,
        sample_times: vec![0.0, 4.0, 10.0],
        ..TaggedParams::default()
    };
    let mut t = t;
    t.tolerances.drift_time = Some(10.0);
    t.tolerances.limit_time = None;
    assert!(tagged_particle(&t, Exec::Parallel).unwrap().estimate >= 0.0);
    let c = TreesCrossingParams { replicas: 20, t_max: 10.0, ..TreesCrossingParams::default() };
    assert!(trees_crossing(&c, Exec::Parallel).unwrap().estimate >= 0.0);
}
