//! End-to-end acceptance checks. Runs without the libtest harness so that the
//! PASS/FAIL line of every check is always printed; exits non-zero if any fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use ineff_core::detect::{run_standalone, DbEntry, DetectionBuffer};
use ineff_core::fixtures::*;
use ineff_core::harness::{batch::map_runs, compare_detector_oracle};
use ineff_core::oracle::*;
use ineff_core::pipeline::{simulate, Cause, Mode, PipelineConfig, SimStats};
use ineff_core::predictor::{predict_trace, PredictorConfig, PredictorKind};
use ineff_core::trace::*;

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn regs() -> RegSpace {
    RegSpace::DEFAULT
}

fn golden_walkthrough() -> Outcome {
    let trace = walkthrough();
    let outcomes = embedded_outcomes(&trace);
    let w = WALKTHROUGH_WINDOW;
    // Pivots as the commit stage would mark them, then a single pass over the
    // three windows after the first.
    let run = run_standalone(
        &trace,
        &outcomes,
        w,
        PivotType::CD,
        regs().num_regs as usize,
    );
    let entries: Vec<DbEntry> = (w..4 * w)
        .map(|i| DbEntry {
            op: trace[i],
            pivot: run.pivots[i],
        })
        .collect();
    let mut db = DetectionBuffer::with_entries(w, &entries);
    let id = db.identify_window();
    let order_ok = id.tagged == WALKTHROUGH_TAG_ORDER;
    let effectual_ok = WALKTHROUGH_EFFECTUAL.iter().all(|s| !id.tagged.contains(s));
    let streamed_ok = run.tagged
        == WALKTHROUGH_TAG_ORDER
            .iter()
            .copied()
            .collect::<BTreeSet<_>>();
    verdict(
        order_ok && effectual_ok && streamed_ok,
        format!("tag order {:?}, streamed {:?}", id.tagged, run.tagged),
    )
}

fn definition_examples() -> Outcome {
    let trace = cone_example();
    let ddg = build_ddg(&trace);
    let ilc = ddg.ilc(CONE_BRANCH);
    let olc = ddg.olc(4);
    let ineff = oracle_ineffectual(&trace, &ddg, &BTreeSet::from([CONE_BRANCH]));
    let ok = ilc == BTreeSet::from([3, 4, 5])
        && olc == BTreeSet::from([5, 6, 14])
        && ineff == BTreeSet::from([3, 5, 6]);
    verdict(
        ok,
        format!("ILC {ilc:?}, OLC {olc:?}, ineffectual {ineff:?}"),
    )
}

fn mixed_params(seed: u64) -> SynthParams {
    let rates = [0.0, 0.02, 0.05, 0.1, 0.3];
    SynthParams {
        count: 10_000,
        mispredict_rate: rates[(seed % 5) as usize],
        predicate_mispredict_rate: rates[((seed / 5) % 5) as usize],
        indirect_mispredict_rate: rates[((seed / 25) % 5) as usize],
        cmp_branch_fraction: [0.05, 0.1, 0.2, 0.3][(seed % 4) as usize],
        dead_write_fraction: [0.0, 0.05, 0.1][(seed % 3) as usize],
        chain_depth_max: 1 + (seed % 3) as u32,
        static_groups: [16, 48, 96][(seed % 3) as usize],
        ..SynthParams::default()
    }
}

fn conservativeness() -> Outcome {
    let seeds: Vec<u64> = (0..1000).collect();
    let results = map_runs(&seeds, |&seed| {
        let trace = generate_synthetic(&mixed_params(seed), seed).expect("valid params");
        let mut cfg = PipelineConfig::default();
        if seed % 2 == 1 {
            cfg.window_size = 5;
        }
        let rep = compare_detector_oracle(&trace, &cfg).expect("simulation");
        (
            seed,
            rep.violations.len(),
            rep.detector.len(),
            rep.oracle.len(),
        )
    });
    let bad: Vec<_> = results.iter().filter(|r| r.1 > 0).map(|r| r.0).collect();
    let tagged: usize = results.iter().map(|r| r.2).sum();
    let oracle: usize = results.iter().map(|r| r.3).sum();
    verdict(
        bad.is_empty(),
        format!(
            "seeds 0..1000, {} violating seeds {:?}, detector {} of oracle {}",
            bad.len(),
            &bad[..bad.len().min(10)],
            tagged,
            oracle
        ),
    )
}

fn equivalence_set() -> Vec<(u64, f64, Vec<MicroOp>)> {
    let rates = [0.0, 0.02, 0.10, 0.30];
    (0..200u64)
        .map(|seed| {
            let r = rates[(seed % 4) as usize];
            let p = SynthParams {
                count: 10_000,
                mispredict_rate: r,
                predicate_mispredict_rate: r,
                indirect_mispredict_rate: r,
                ..SynthParams::default()
            };
            (
                seed,
                r,
                generate_synthetic(&p, 1000 + seed).expect("valid params"),
            )
        })
        .collect()
}

fn functional_equivalence(set: &[(u64, f64, Vec<MicroOp>)]) -> Outcome {
    let cfg = PipelineConfig::with_mode(Mode::Proposed);
    let results = map_runs(set, |(seed, _, t)| {
        let r = simulate(t, &cfg).expect("simulation");
        (
            *seed,
            r.arch == reference_execute(t, regs()),
            r.stats.type_a_total(),
        )
    });
    let bad: Vec<u64> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    let rollbacks: u64 = results.iter().map(|r| r.2).sum();
    verdict(
        bad.is_empty(),
        format!(
            "{} traces, {} mismatches {:?}, {} type-A rollbacks exercised",
            set.len(),
            bad.len(),
            bad,
            rollbacks
        ),
    )
}

fn recovery() -> Outcome {
    let cfg = PipelineConfig::with_mode(Mode::Proposed);
    let w = cfg.window_size as u64;
    let mut ok = true;
    let mut notes = Vec::new();
    for kind in ControlKind::ALL {
        let trace = control_loop(100, &[(80, kind)]);
        let r = simulate(&trace, &cfg).expect("simulation");
        let type_a: Vec<_> = r
            .events
            .iter()
            .filter(|e| matches!(e.cause, Cause::TypeA(_)))
            .collect();
        let right_kind = r.stats.type_a_of(kind) == 1 && r.stats.type_a_total() == 1;
        let to_portion_a = type_a
            .iter()
            .all(|e| e.target % w == 0 && e.target <= e.trigger && e.trigger < e.target + 2 * w);
        let same_state = r.arch == reference_execute(&trace, regs());
        ok &= type_a.len() == 1 && right_kind && to_portion_a && same_state;
        notes.push(format!(
            "{}: {} rollback(s) {:?}, state {}",
            kind.name(),
            type_a.len(),
            type_a
                .iter()
                .map(|e| (e.target, e.trigger))
                .collect::<Vec<_>>(),
            if same_state { "matches" } else { "differs" }
        ));
    }
    verdict(ok, notes.join("; "))
}

fn steering_soundness(set: &[(u64, f64, Vec<MicroOp>)]) -> Outcome {
    let mut cfg = PipelineConfig::with_mode(Mode::Proposed);
    cfg.predictor.kind = PredictorKind::Perfect;
    let results = map_runs(set, |(_, _, t)| {
        simulate(t, &cfg).expect("simulation").stats
    });
    let violations: u64 = results.iter().map(|s| s.iprf_read_violations).sum();
    let type_b: u64 = results.iter().map(|s| s.type_b).sum();
    let steered: u64 = results.iter().map(|s| s.steered).sum();
    verdict(
        violations == 0,
        format!("{violations} primary reads of I-PRF over {steered} steered ops; {type_b} recoveries kept effectual consumers off the I-PRF"),
    )
}

fn directional_speedup() -> Outcome {
    let trace = offload_loop(2000);
    let outcomes = embedded_outcomes(&trace);
    let fraction = analyze_trace(&trace, &outcomes, PivotType::CD).fraction();
    let run = |mode| {
        let mut c = PipelineConfig::with_mode(mode);
        c.predictor.kind = PredictorKind::Perfect;
        simulate(&trace, &c).expect("simulation").stats.cycles
    };
    let (base, prop, perfect) = (
        run(Mode::Baseline),
        run(Mode::Proposed),
        run(Mode::PerfectIpipe),
    );
    verdict(
        fraction >= 0.30 && prop < base && perfect <= prop,
        format!(
            "ineffectual {fraction:.3}; cycles baseline {base}, proposed {prop}, perfect I-pipe {perfect}; speedup {:.3}",
            base as f64 / prop as f64
        ),
    )
}

fn bottleneck_policy() -> Outcome {
    let trace = slow_chain_loop(1000, 8);
    let mut cfg = PipelineConfig::with_mode(Mode::Proposed);
    cfg.cycle_log = true;
    let r = simulate(&trace, &cfg).expect("simulation");
    let k = cfg.bottleneck_k;
    // Maximal runs of consecutive blocked cycles, as (last cycle, length).
    let mut runs = Vec::new();
    let mut len = 0u64;
    for c in &r.cycle_log {
        if c.irs_blocked {
            len += 1;
        } else {
            if len > 0 {
                runs.push((c.cycle - 1, len));
            }
            len = 0;
        }
    }
    if len > 0 {
        runs.push((r.cycle_log.last().unwrap().cycle, len));
    }
    let sustained: Vec<u64> = runs.iter().filter(|r| r.1 >= k).map(|r| r.0).collect();
    let flushes: Vec<_> = r
        .events
        .iter()
        .filter(|e| e.cause == Cause::Bottleneck)
        .collect();
    let one_each = sustained.len() == flushes.len()
        && sustained
            .iter()
            .zip(&flushes)
            .all(|(end, e)| *end == e.cycle);
    let cleared = flushes.iter().all(|e| e.tags_after == 0);
    let counters = r.stats.bottleneck_flushes == flushes.len() as u64
        && r.stats.irs_stall_episodes == sustained.len() as u64;
    verdict(
        one_each && cleared && counters && !flushes.is_empty(),
        format!(
            "{} sustained stall episodes, {} bottleneck flushes, tags cleared after each: {cleared}",
            sustained.len(),
            flushes.len()
        ),
    )
}

fn mpki_accounting() -> Outcome {
    let schedule = injection_schedule(50, 15, 12);
    let trace = control_loop(625, &schedule);
    let r = simulate(&trace, &PipelineConfig::with_mode(Mode::Proposed)).expect("simulation");
    let s: &SimStats = &r.stats;
    let injected = |k: ControlKind| schedule.iter().filter(|(_, x)| *x == k).count() as u64;
    let per_kind = ControlKind::ALL
        .iter()
        .all(|&k| s.type_a_of(k) == injected(k));
    let ok = s.committed == 10_000 && s.mpki_total() == 5.0 && per_kind;
    verdict(
        ok,
        format!(
            "committed {}, mpki {} (branch {}, predicate {}, indirect {}), injected {:?}",
            s.committed,
            s.mpki_total(),
            s.mpki(ControlKind::Branch),
            s.mpki(ControlKind::Predicate),
            s.mpki(ControlKind::Indirect),
            ControlKind::ALL.map(injected)
        ),
    )
}

fn graph_characterization() -> Outcome {
    let p = SynthParams::cmp_branch_pairs(10_000);
    let mut graphs = Vec::new();
    for seed in 0..4 {
        let t = generate_synthetic(&p, seed).expect("valid params");
        graphs.extend(analyze_trace(&t, &embedded_outcomes(&t), PivotType::CD).graphs);
    }
    let (size, span) = graph_histograms(&graphs);
    let total = size.total() as f64;
    let small = (1..=4).map(|v| size.count(v)).sum::<u64>() as f64 / total;
    let mid = (2..=4).map(|v| size.count(v)).sum::<u64>() as f64 / total;
    let wide = (9..=17).map(|v| span.count(v)).sum::<u64>() as f64 / total;
    verdict(
        small >= 0.80,
        format!(
            "{} graphs: size<=4 {:.3}, size 2-4 {:.3}, span>8 {:.3}",
            graphs.len(),
            small,
            mid,
            wide
        ),
    )
}

/// Accuracy and tagged fraction of one predictor on one trace.
struct Point {
    accuracy: f64,
    pipeline: f64,
    standalone: f64,
}

fn sensitivity_point(t: &[MicroOp], kind: PredictorKind) -> Point {
    let mut cfg = PipelineConfig::with_mode(Mode::Proposed);
    cfg.predictor.kind = kind;
    let r = simulate(t, &cfg).expect("simulation");
    let acc = r
        .stats
        .accuracy
        .iter()
        .fold((0, 0), |(c, n), a| (c + a.correct, n + a.total()));
    let outcomes = predict_trace(t, &PredictorConfig::with_kind(kind)).expect("predictor");
    let run = run_standalone(
        t,
        &outcomes,
        cfg.window_size,
        PivotType::CD,
        regs().num_regs as usize,
    );
    Point {
        accuracy: acc.0 as f64 / acc.1 as f64,
        pipeline: r.stats.detector_tagged as f64 / t.len() as f64,
        standalone: run.tagged.len() as f64 / t.len() as f64,
    }
}

fn predictor_sensitivity() -> Outcome {
    let kinds = [
        PredictorKind::Gshare,
        PredictorKind::TaggedTable,
        PredictorKind::Perfect,
    ];
    let seeds: Vec<u64> = (500..520).collect();
    let points = map_runs(&seeds, |&seed| {
        let p = SynthParams {
            count: 10_000,
            embed_predictions: false,
            ..SynthParams::default()
        };
        let t = generate_synthetic(&p, seed).expect("valid params");
        kinds.map(|k| sensitivity_point(&t, k))
    });
    let (mut compared, mut skipped, mut drops, mut standalone_drops) = (0, 0, Vec::new(), 0);
    let mut perfect_ok = true;
    for (seed, pts) in seeds.iter().zip(&points) {
        for lo in 0..3 {
            for hi in lo + 1..3 {
                let (a, b) = (&pts[lo], &pts[hi]);
                if b.accuracy < a.accuracy {
                    skipped += 1;
                    continue;
                }
                compared += 1;
                if b.pipeline < a.pipeline {
                    drops.push((*seed, kinds[lo].name(), kinds[hi].name()));
                }
                standalone_drops += (b.standalone < a.standalone) as usize;
            }
        }
        perfect_ok &= pts[2].pipeline >= pts[0].pipeline && pts[2].pipeline >= pts[1].pipeline;
    }
    let mean = |k: usize, f: fn(&Point) -> f64| {
        points.iter().map(|p| f(&p[k])).sum::<f64>() / points.len() as f64
    };
    verdict(
        drops.is_empty() && perfect_ok,
        format!(
            "{compared} accuracy-increasing pairs, {} decreases {drops:?}; {skipped} pairs where accuracy fell; \
             mean accuracy/tagged gshare {:.3}/{:.3}, tagged_table {:.3}/{:.3}, perfect {:.3}/{:.3}; \
             standalone detector decreases {standalone_drops}",
            drops.len(),
            mean(0, |p| p.accuracy),
            mean(0, |p| p.pipeline),
            mean(1, |p| p.accuracy),
            mean(1, |p| p.pipeline),
            mean(2, |p| p.accuracy),
            mean(2, |p| p.pipeline),
        ),
    )
}

fn main() -> ExitCode {
    let set = equivalence_set();
    let checks: Vec<(&str, Check)> = vec![
        ("golden walkthrough", Box::new(golden_walkthrough)),
        ("definition examples", Box::new(definition_examples)),
        ("detector conservativeness", Box::new(conservativeness)),
        (
            "functional equivalence",
            Box::new(|| functional_equivalence(&set)),
        ),
        ("recovery correctness", Box::new(recovery)),
        ("steering soundness", Box::new(|| steering_soundness(&set))),
        ("directional speedup", Box::new(directional_speedup)),
        ("bottleneck policy", Box::new(bottleneck_policy)),
        ("mpki accounting", Box::new(mpki_accounting)),
        ("graph characterization", Box::new(graph_characterization)),
        ("predictor sensitivity", Box::new(predictor_sensitivity)),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "[{:02}] {status} {name} ({:.2}s): {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed.push(*name);
        }
    }
    if failed.is_empty() {
        println!("all {} checks passed", checks.len());
        ExitCode::SUCCESS
    } else {
        println!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
