//! Experiment plumbing: trace sources, config variants, batch runs and CSV output.

mod analysis;
pub mod batch;

pub use analysis::{
    analyze, compare_detector_oracle, containment, detector_coverage, AnalysisReport,
    ContainmentReport, MissReason,
};

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use thiserror::Error;

use crate::oracle::PivotType;
use crate::pipeline::{simulate, ConfigError, Mode, PipelineConfig, SimError, SimStats};
use crate::predictor::PredictorConfig;
use crate::trace::{generate_synthetic, parse_trace, MicroOp, RegSpace, SynthParams, TraceError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read trace {path}: {source}")]
    MissingTrace {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("experiment has no configurations")]
    NoConfigs,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub enum TraceSource {
    File(PathBuf),
    Synthetic { params: SynthParams, seed: u64 },
}

impl TraceSource {
    pub fn label(&self) -> String {
        match self {
            TraceSource::File(p) => p.display().to_string(),
            TraceSource::Synthetic { seed, .. } => format!("synthetic:{seed}"),
        }
    }

    pub fn load(&self, regs: RegSpace) -> Result<Vec<MicroOp>, HarnessError> {
        match self {
            TraceSource::File(path) => {
                let f = File::open(path).map_err(|source| HarnessError::MissingTrace {
                    path: path.clone(),
                    source,
                })?;
                Ok(parse_trace(BufReader::new(f), regs)?)
            }
            TraceSource::Synthetic { params, seed } => {
                let params = SynthParams {
                    num_regs: regs.num_regs,
                    ..params.clone()
                };
                Ok(generate_synthetic(&params, *seed)?)
            }
        }
    }
}

/// A named pipeline configuration.
#[derive(Debug, Clone)]
pub struct Variant {
    pub label: String,
    pub config: PipelineConfig,
}

impl Variant {
    pub fn new(label: impl Into<String>, config: PipelineConfig) -> Self {
        Variant {
            label: label.into(),
            config,
        }
    }

    pub fn mode(base: &PipelineConfig, mode: Mode) -> Self {
        let mut config = base.clone();
        config.mode = mode;
        Variant::new(mode.name(), config)
    }
}

/// Traces crossed with configuration variants. The pivot type and predictor
/// apply to every variant.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub traces: Vec<TraceSource>,
    pub variants: Vec<Variant>,
    pub pivot_type: PivotType,
    pub predictor: PredictorConfig,
}

impl ExperimentSpec {
    pub fn new(traces: Vec<TraceSource>, variants: Vec<Variant>) -> Self {
        let (pivot_type, predictor) = variants
            .first()
            .map(|v| (v.config.pivot_type, v.config.predictor.clone()))
            .unwrap_or_default();
        ExperimentSpec {
            traces,
            variants,
            pivot_type,
            predictor,
        }
    }

    fn effective(&self, v: &Variant) -> PipelineConfig {
        let mut c = v.config.clone();
        c.pivot_type = self.pivot_type;
        c.predictor = self.predictor.clone();
        c
    }
}

/// One simulated (trace, variant) pair.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub trace: String,
    pub variant: String,
    pub mode: Mode,
    pub ipipe_width: usize,
    pub irs_entries: usize,
    pub pivot_type: PivotType,
    pub predictor: &'static str,
    pub stats: SimStats,
    /// Baseline cycles over these cycles, when the spec has a baseline variant.
    pub speedup: Option<f64>,
}

impl RunRow {
    pub fn csv_header() -> Vec<&'static str> {
        let mut h = vec![
            "trace",
            "variant",
            "mode",
            "ipipe_width",
            "irs_entries",
            "pivot_type",
            "predictor",
        ];
        h.extend(SimStats::csv_header());
        h.push("speedup");
        h
    }

    pub fn csv_values(&self) -> Vec<String> {
        let mut v = vec![
            self.trace.clone(),
            self.variant.clone(),
            self.mode.name().to_string(),
            self.ipipe_width.to_string(),
            self.irs_entries.to_string(),
            self.pivot_type.name().to_string(),
            self.predictor.to_string(),
        ];
        v.extend(self.stats.csv_values());
        v.push(self.speedup.map(|s| format!("{s:.6}")).unwrap_or_default());
        v
    }
}

/// Runs every variant on every trace. Rows follow trace order, then variant
/// order, whatever order the runs finish in.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<RunRow>, HarnessError> {
    if spec.variants.is_empty() {
        return Err(HarnessError::NoConfigs);
    }
    let configs: Vec<PipelineConfig> = spec.variants.iter().map(|v| spec.effective(v)).collect();
    for c in &configs {
        c.validate()?;
    }
    let regs = configs[0].regs();
    let traces = spec
        .traces
        .iter()
        .map(|t| t.load(regs))
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..traces.len())
        .flat_map(|t| (0..configs.len()).map(move |v| (t, v)))
        .collect();
    let results = batch::map_runs(&jobs, |&(t, v)| simulate(&traces[t], &configs[v]));
    let mut rows = Vec::with_capacity(jobs.len());
    for (&(t, v), res) in jobs.iter().zip(results) {
        let stats = res?.stats;
        let c = &configs[v];
        rows.push(RunRow {
            trace: spec.traces[t].label(),
            variant: spec.variants[v].label.clone(),
            mode: c.mode,
            ipipe_width: c.ipipe_width,
            irs_entries: c.irs_entries,
            pivot_type: c.pivot_type,
            predictor: c.predictor.kind.name(),
            stats,
            speedup: None,
        });
    }
    fill_speedups(&mut rows, configs.len());
    Ok(rows)
}

fn fill_speedups(rows: &mut [RunRow], per_trace: usize) {
    for chunk in rows.chunks_mut(per_trace) {
        let Some(base) = chunk
            .iter()
            .find(|r| r.mode == Mode::Baseline)
            .map(|r| r.stats.cycles)
        else {
            continue;
        };
        for r in chunk.iter_mut() {
            if r.stats.cycles > 0 {
                r.speedup = Some(base as f64 / r.stats.cycles as f64);
            }
        }
    }
}

pub fn write_rows<W: Write>(rows: &[RunRow], sink: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(RunRow::csv_header())?;
    for r in rows {
        w.write_record(r.csv_values())?;
    }
    w.flush()?;
    Ok(())
}

/// I-pipe widths and I-RS sizes of the design-space grid.
pub const IPIPE_WIDTHS: [usize; 3] = [2, 4, 8];
pub const IRS_SIZES: [usize; 3] = [64, 128, 256];

/// One proposed-mode variant per (I-pipe width, I-RS size) pair.
pub fn ipipe_grid(base: &PipelineConfig) -> Vec<Variant> {
    let mut out = Vec::new();
    for w in IPIPE_WIDTHS {
        for n in IRS_SIZES {
            let mut c = base.clone();
            c.mode = Mode::Proposed;
            c.ipipe_width = w;
            c.irs_entries = n;
            out.push(Variant::new(format!("ipipe{w}_irs{n}"), c));
        }
    }
    out
}

/// One proposed-mode variant per pivot type.
pub fn pivot_variants(base: &PipelineConfig) -> Vec<Variant> {
    [PivotType::C, PivotType::D, PivotType::CD]
        .into_iter()
        .map(|p| {
            let mut c = base.clone();
            c.mode = Mode::Proposed;
            c.pivot_type = p;
            Variant::new(format!("pivot_{}", p.name()), c)
        })
        .collect()
}
