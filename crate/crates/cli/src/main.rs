use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ineff_core::harness::{
    self, analyze, compare_detector_oracle, ExperimentSpec, MissReason, TraceSource, Variant,
};
use ineff_core::oracle::{embedded_outcomes, PivotType};
use ineff_core::pipeline::{simulate, CycleRecord, Mode, PipelineConfig};
use ineff_core::trace::{emit_trace, generate_synthetic, SynthParams};

/// Trace-driven simulator for steering ineffectual instructions to a secondary pipe.
#[derive(Parser)]
#[command(name = "ineffsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic traces.
    Gen {
        #[command(flatten)]
        common: Common,
        /// Number of traces, with consecutive seeds.
        #[arg(long, default_value_t = 1)]
        traces: u64,
    },
    /// Simulate one trace in one mode.
    Sim {
        #[command(flatten)]
        common: Common,
        /// Also run the baseline so the output carries a speedup.
        #[arg(long)]
        compare: bool,
    },
    /// Simulate a grid of configurations, always including the baseline.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Grid::Ipipe)]
        grid: Grid,
        /// Number of synthetic traces when no --trace is given.
        #[arg(long, default_value_t = 1)]
        traces: u64,
    },
    /// Whole-trace oracle report with size and span histograms.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Detection window used for the detector coverage number.
        #[arg(long, default_value_t = 10)]
        window: usize,
    },
    /// Check that the detector only tags oracle-ineffectual instructions.
    Check {
        #[command(flatten)]
        common: Common,
        /// Number of synthetic traces when no --trace is given.
        #[arg(long, default_value_t = 20)]
        traces: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Grid {
    /// I-pipe width x I-RS size.
    Ipipe,
    /// C, D and CD pivots.
    Pivot,
    /// Every simulation mode.
    Modes,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Default,
    CmpBranch,
}

#[derive(Args)]
struct Common {
    /// Trace file; a synthetic trace is generated when absent.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for synthetic traces.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long, env = "INEFFSIM_OUT_DIR", default_value = "ineffsim-out")]
    out: PathBuf,
    /// Pivots the detector starts from: C, D or CD.
    #[arg(long)]
    pivot_type: Option<PivotType>,
    /// proposed, baseline, perfect_ipipe or iso_resource.
    #[arg(long)]
    mode: Option<Mode>,
    /// Write tag records, flush events and the per-cycle log.
    #[arg(long)]
    debug_tags: bool,
    /// Synthetic trace length.
    #[arg(long, default_value_t = 10_000)]
    count: usize,
    #[arg(long, value_enum, default_value_t = Preset::Default)]
    preset: Preset,
    /// Conditional-branch misprediction rate of synthetic traces.
    #[arg(long)]
    mispredict_rate: Option<f64>,
}

impl Common {
    fn config(&self) -> Result<PipelineConfig> {
        let mut c = PipelineConfig::default();
        if let Some(path) = &self.config {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            c.apply_text(&text)
                .with_context(|| format!("in {}", path.display()))?;
        }
        if let Some(m) = self.mode {
            c.mode = m;
        }
        if let Some(p) = self.pivot_type {
            c.pivot_type = p;
        }
        if self.debug_tags {
            c.keep_tag_records = true;
            c.cycle_log = true;
        }
        c.validate()?;
        Ok(c)
    }

    fn synth_params(&self) -> SynthParams {
        let mut p = match self.preset {
            Preset::Default => SynthParams::default(),
            Preset::CmpBranch => SynthParams::cmp_branch_pairs(self.count),
        };
        p.count = self.count;
        if let Some(r) = self.mispredict_rate {
            p.mispredict_rate = r;
        }
        p
    }

    fn sources(&self, n: u64) -> Vec<TraceSource> {
        match &self.trace {
            Some(path) => vec![TraceSource::File(path.clone())],
            None => (0..n)
                .map(|i| TraceSource::Synthetic {
                    params: self.synth_params(),
                    seed: self.seed + i,
                })
                .collect(),
        }
    }

    fn out_file(&self, name: &str) -> Result<BufWriter<File>> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(f))
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Returns whether every enabled check held.
fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen { common, traces } => gen(&common, traces),
        Command::Sim { common, compare } => sim(&common, compare),
        Command::Sweep {
            common,
            grid,
            traces,
        } => sweep(&common, grid, traces),
        Command::Analyze { common, window } => analyze_cmd(&common, window),
        Command::Check { common, traces } => check(&common, traces),
    }
}

fn gen(common: &Common, traces: u64) -> Result<bool> {
    if common.trace.is_some() {
        bail!("gen writes synthetic traces; --trace does not apply");
    }
    let regs = common.config()?.regs();
    let params = SynthParams {
        num_regs: regs.num_regs,
        ..common.synth_params()
    };
    for i in 0..traces {
        let seed = common.seed + i;
        let ops = generate_synthetic(&params, seed)?;
        let name = format!("synthetic_{seed}.trace");
        emit_trace(&ops, regs, common.out_file(&name)?)?;
        println!("{}", common.out.join(name).display());
    }
    Ok(true)
}

fn sim(common: &Common, compare: bool) -> Result<bool> {
    let config = common.config()?;
    let mut variants = vec![Variant::new(config.mode.name(), config.clone())];
    if compare && config.mode != Mode::Baseline {
        variants.insert(0, Variant::mode(&config, Mode::Baseline));
    }
    let source = common.sources(1).remove(0);
    let spec = ExperimentSpec::new(vec![source.clone()], variants);
    let rows = harness::run(&spec)?;
    harness::write_rows(&rows, common.out_file("sim.csv")?)?;
    for r in &rows {
        println!(
            "{} {}: cycles={} ipc={:.3} ineffectual={:.3} type_a={} mpki={:.3}{}",
            r.trace,
            r.variant,
            r.stats.cycles,
            r.stats.ipc(),
            r.stats.ineffectual_fraction(),
            r.stats.type_a_total(),
            r.stats.mpki_total(),
            r.speedup
                .map(|s| format!(" speedup={s:.3}"))
                .unwrap_or_default()
        );
    }
    if common.debug_tags {
        let trace = source.load(config.regs())?;
        write_debug(common, &trace, &config)?;
    }
    Ok(true)
}

fn write_debug(
    common: &Common,
    trace: &[ineff_core::trace::MicroOp],
    config: &PipelineConfig,
) -> Result<()> {
    let res = simulate(trace, config)?;
    let mut w = csv::Writer::from_writer(common.out_file("tags.csv")?);
    w.write_record(["seq", "pc", "pivot", "rank"])?;
    for t in &res.tag_records {
        let pivot = t.pivot.map(|k| format!("{k:?}")).unwrap_or_default();
        w.write_record([
            t.seq.to_string(),
            format!("{:#x}", t.pc),
            pivot,
            t.rank.to_string(),
        ])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(common.out_file("events.csv")?);
    w.write_record([
        "cycle",
        "cause",
        "target",
        "trigger",
        "squashed",
        "tags_after",
    ])?;
    for e in &res.events {
        w.write_record([
            e.cycle.to_string(),
            format!("{:?}", e.cause),
            e.target.to_string(),
            e.trigger.to_string(),
            e.squashed.to_string(),
            e.tags_after.to_string(),
        ])?;
    }
    w.flush()?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(common.out_file("cycles.csv")?);
    w.write_record(CycleRecord::HEADER.split(','))?;
    for c in &res.cycle_log {
        w.write_record(c.to_csv().split(','))?;
    }
    w.flush()?;
    Ok(())
}

fn sweep(common: &Common, grid: Grid, traces: u64) -> Result<bool> {
    let base = common.config()?;
    let mut variants = vec![Variant::mode(&base, Mode::Baseline)];
    match grid {
        Grid::Ipipe => variants.extend(harness::ipipe_grid(&base)),
        Grid::Pivot => variants.extend(harness::pivot_variants(&base)),
        Grid::Modes => variants.extend(
            Mode::ALL
                .into_iter()
                .filter(|&m| m != Mode::Baseline)
                .map(|m| Variant::mode(&base, m)),
        ),
    }
    let spec = ExperimentSpec::new(common.sources(traces), variants);
    let rows = harness::run(&spec)?;
    harness::write_rows(&rows, common.out_file("sweep.csv")?)?;
    println!(
        "{} rows -> {}",
        rows.len(),
        common.out.join("sweep.csv").display()
    );
    Ok(true)
}

fn analyze_cmd(common: &Common, window: usize) -> Result<bool> {
    let config = common.config()?;
    let trace = common.sources(1).remove(0).load(config.regs())?;
    let outcomes = embedded_outcomes(&trace);
    let report = analyze(
        &trace,
        &outcomes,
        window,
        config.pivot_type,
        config.num_regs as usize,
    );
    report.write_summary(common.out_file("analysis.csv")?)?;
    report.write_histograms(common.out_file("histograms.csv")?)?;
    for (k, v) in report.summary_rows() {
        println!("{k} = {v}");
    }
    Ok(true)
}

fn check(common: &Common, traces: u64) -> Result<bool> {
    let config = common.config()?;
    let sources = common.sources(traces);
    let reasons = [
        MissReason::UnmarkedPivot,
        MissReason::DiscardedPredecessor,
        MissReason::OutOfWindowSuccessor,
        MissReason::MissingOverwrite,
        MissReason::Cascade,
    ];
    let loaded = sources
        .iter()
        .map(|s| s.load(config.regs()))
        .collect::<Result<Vec<_>, _>>()?;
    let reports = harness::batch::map_runs(&loaded, |t| compare_detector_oracle(t, &config));
    let mut w = csv::Writer::from_writer(common.out_file("check.csv")?);
    let mut header = vec![
        "trace",
        "detector",
        "oracle",
        "contained",
        "coverage",
        "violations",
    ];
    header.extend(reasons.iter().map(|r| r.name()));
    w.write_record(&header)?;
    let mut all = true;
    for (src, rep) in sources.iter().zip(reports) {
        let rep = rep?;
        all &= rep.contained();
        let mut row = vec![
            src.label(),
            rep.detector.len().to_string(),
            rep.oracle.len().to_string(),
            rep.contained().to_string(),
            format!("{:.6}", rep.coverage()),
            rep.violations.len().to_string(),
        ];
        row.extend(reasons.iter().map(|&r| rep.miss_count(r).to_string()));
        w.write_record(&row)?;
        if !rep.contained() {
            eprintln!(
                "{}: detector tagged {:?} outside the oracle set",
                src.label(),
                rep.violations
            );
        }
    }
    w.flush()?;
    println!(
        "{} trace(s): containment {}",
        sources.len(),
        if all { "holds" } else { "VIOLATED" }
    );
    Ok(all)
}
