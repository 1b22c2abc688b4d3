use std::fs;

use proptest::prelude::*;
use ris_uav::harness::{emit_csv, load_spec, run_experiment, ExperimentKind, ExperimentSpec};
use ris_uav::objective::{energy_efficiency, total_power, Evaluator, PenaltyConfig};
use ris_uav::prelude::*;

fn quick_spec(kind: ExperimentKind, seeds: Vec<u64>, values: Vec<usize>) -> ExperimentSpec {
    let mut s = ExperimentSpec::new(kind, seeds, values, "unused");
    s.bcd.max_outer_iters = 2;
    s.bcd.ga_phase.pop_pairs = 5;
    s.bcd.ga_phase.generations = 8;
    s.bcd.ga_onoff.pop_pairs = 5;
    s.bcd.ga_onoff.generations = 6;
    s.bcd.adam.iters = 4;
    s
}

#[test]
fn scenario_file_to_results_and_back() {
    let dir = tempfile::tempdir().unwrap();
    let scn_path = dir.path().join("scenario.json");
    fs::write(&scn_path, r#"{"ris_rows": 2, "ris_cols": 3, "noise_power": 1e-12}"#).unwrap();

    let mut spec = quick_spec(ExperimentKind::SweepGus, vec![4, 5], vec![1, 3]);
    spec.scenario_path = Some(scn_path);
    spec.output_path = dir.path().join("out");
    let res = run_experiment(&spec, Some(2)).unwrap();
    assert_eq!(res.rows.len(), 2 * 2 * 3);
    let m = res.manifest.spec.scenario.as_ref().unwrap();
    assert_eq!(m.num_elements(), 6);
    assert_eq!(m.noise_power, 1e-12);

    let csv = emit_csv(&res, &spec.output_path).unwrap();
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 13);
    assert!(text.starts_with("scheme,sweep_value,seed,eta_bits_per_joule,"));
    for row in &res.rows {
        let trace = fs::read_to_string(
            spec.output_path
                .join(format!("trace_{}_{}_{}.csv", row.scheme, row.sweep_value, row.seed)),
        )
        .unwrap();
        assert_eq!(trace.lines().count(), row.eta_trace.len() + 1);
    }

    // The manifest alone reproduces every row, even with the scenario file gone.
    fs::remove_file(dir.path().join("scenario.json")).unwrap();
    let replay = load_spec(spec.output_path.join("manifest.json")).unwrap();
    let again = run_experiment(&replay, Some(1)).unwrap();
    assert_eq!(again.rows, res.rows);
}

#[test]
fn paired_cells_share_instances_across_schemes() {
    let spec = quick_spec(ExperimentKind::SweepElements, vec![9], vec![4, 6]);
    let res = run_experiment(&spec, None).unwrap();
    let digests: Vec<&str> = res.manifest.cells.iter().map(|c| c.gu_digest.as_str()).collect();
    // Same seed, same K: the GU draw does not depend on M.
    assert_eq!(digests[0], digests[1]);
    assert_ne!(res.manifest.cells[0].scatter_digest, res.manifest.cells[1].scatter_digest);
    let no_ris: Vec<f64> = res.rows.iter().filter(|r| r.scheme == "no-ris").map(|r| r.eta).collect();
    assert_eq!(no_ris.len(), 2);
}

#[test]
fn optimized_solutions_are_feasible() {
    let mut scn = default_scenario();
    scn.num_gus = 3;
    scn.set_num_elements(10);
    let scn = scn.with_sampled_gus(&RngStream::new(21, "gus")).unwrap();
    let scatter = ScatteringDraw::sample(&RngStream::new(21, "scatter"), 3, 10);
    let cfg = BcdConfig::for_scenario(&scn);
    let r = optimize(&scn, &scatter, &default_init(&scn), &cfg, &RngStream::new(21, "proposed")).unwrap();
    assert!(r.constraint_report.power_feasible);
    assert!(r.best.powers.iter().all(|&p| p >= cfg.p_min * 0.999));
    assert!(r.best.phases.iter().all(|&t| (0.0..std::f64::consts::TAU).contains(&t)));
    assert!(r.eta_trace.last().unwrap() >= &r.eta_trace[0]);
    assert_eq!(r.total_power, total_power(&r.best, &scn));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evaluator_agrees_with_whole_solution(
        seed in any::<u64>(),
        k in 1usize..4,
        m in 1usize..9,
        x in 150.0f64..250.0,
        y in 5.0f64..60.0,
        mask in any::<u16>(),
        split in prop::collection::vec(0.01f64..1.0, 3),
    ) {
        let mut scn = default_scenario();
        scn.num_gus = k;
        scn.set_num_elements(m);
        let scn = scn.with_sampled_gus(&RngStream::new(seed, "gus")).unwrap();
        let scatter = ScatteringDraw::sample(&RngStream::new(seed, "scatter"), k, m);
        let total: f64 = split[..k].iter().sum();
        let sol = SolutionState {
            onoff: (0..m).map(|i| mask >> i & 1 == 1).collect(),
            phases: (0..m).map(|i| (i as f64 * 0.77) % std::f64::consts::TAU).collect(),
            powers: split[..k].iter().map(|p| p / total).collect(),
            uav_pos: Point::new(x, y),
        };
        let eta = energy_efficiency(&sol, &scatter, &scn).unwrap();
        let ev = Evaluator::new(&scn, &scatter, sol.uav_pos).unwrap();
        let e = ev.evaluate(&sol.phases, &sol.onoff, &sol.powers);
        prop_assert_eq!(eta, e.eta);
        prop_assert!(eta > 0.0);
        let f = penalized_fitness(&sol, &scatter, &scn, &PenaltyConfig::default()).unwrap();
        prop_assert!(f > 0.0 && f <= eta);
    }
}
