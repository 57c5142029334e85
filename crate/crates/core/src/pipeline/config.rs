use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::oracle::PivotType;
use crate::predictor::{PredictorConfig, PredictorKind};
use crate::trace::{OpClass, RegSpace};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// Ineffectual instructions steered to the I-pipe.
    #[default]
    Proposed,
    /// Single cluster, nothing steered.
    Baseline,
    /// Steering as in `Proposed`, but the I-pipe ignores data and structural hazards.
    PerfectIpipe,
    /// Single wide cluster with the I-pipe's resources folded in.
    IsoResource,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode::Proposed,
        Mode::Baseline,
        Mode::PerfectIpipe,
        Mode::IsoResource,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Proposed => "proposed",
            Mode::Baseline => "baseline",
            Mode::PerfectIpipe => "perfect_ipipe",
            Mode::IsoResource => "iso_resource",
        }
    }

    pub fn steers(self) -> bool {
        matches!(self, Mode::Proposed | Mode::PerfectIpipe)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "proposed" => Ok(Mode::Proposed),
            "baseline" => Ok(Mode::Baseline),
            "perfect_ipipe" | "perfect" => Ok(Mode::PerfectIpipe),
            "iso_resource" | "iso" => Ok(Mode::IsoResource),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

/// Per-class execution latencies in cycles. An op's own latency annotation overrides these.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Latencies {
    pub alu: u32,
    pub cmp: u32,
    pub branch: u32,
    pub indirect: u32,
    pub predicated: u32,
    pub load: u32,
    pub store: u32,
    pub nop: u32,
}

impl Default for Latencies {
    fn default() -> Self {
        Latencies {
            alu: 1,
            cmp: 1,
            branch: 1,
            indirect: 1,
            predicated: 1,
            load: 5,
            store: 5,
            nop: 1,
        }
    }
}

impl Latencies {
    pub fn of(&self, class: OpClass) -> u32 {
        match class {
            OpClass::Alu => self.alu,
            OpClass::Cmp => self.cmp,
            OpClass::CondBranch => self.branch,
            OpClass::IndirectJump => self.indirect,
            OpClass::PredicatedAlu => self.predicated,
            OpClass::Load => self.load,
            OpClass::Store => self.store,
            OpClass::Nop => self.nop,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub window_size: usize,
    pub rob_entries: usize,
    pub primary_issue_width: usize,
    pub primary_rs_entries: usize,
    pub rename_width_effectual: usize,
    pub ipipe_width: usize,
    pub irs_entries: usize,
    pub iprf_read_ports: usize,
    pub iprf_write_ports: usize,
    pub mprf_read_ports: usize,
    pub prf_int: usize,
    pub prf_vec: usize,
    /// Architectural registers, FLAGS included. Also the I-PRF size.
    pub num_regs: u16,
    pub latencies: Latencies,
    pub bottleneck_k: u64,
    pub redirect_penalty: u64,
    pub baseline_rob_entries: usize,
    pub baseline_commit_width: usize,
    pub iso_issue_width: usize,
    pub iso_rename_width: usize,
    pub iso_commit_width: usize,
    pub iso_rs_entries: usize,
    pub pivot_type: PivotType,
    pub predictor: PredictorConfig,
    /// Cycles without progress, as a multiple of `rob_entries`, before giving up.
    pub deadlock_factor: u64,
    pub cycle_log: bool,
    pub keep_tag_records: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::Proposed,
            window_size: 10,
            rob_entries: 370,
            primary_issue_width: 10,
            primary_rs_entries: 160,
            rename_width_effectual: 6,
            ipipe_width: 4,
            irs_entries: 128,
            iprf_read_ports: 2,
            iprf_write_ports: 1,
            mprf_read_ports: 2,
            prf_int: 280,
            prf_vec: 224,
            num_regs: RegSpace::DEFAULT.num_regs,
            latencies: Latencies::default(),
            bottleneck_k: 32,
            redirect_penalty: 12,
            baseline_rob_entries: 352,
            baseline_commit_width: 6,
            iso_issue_width: 14,
            iso_rename_width: 10,
            iso_commit_width: 10,
            iso_rs_entries: 288,
            pivot_type: PivotType::CD,
            predictor: PredictorConfig::default(),
            deadlock_factor: 10,
            cycle_log: false,
            keep_tag_records: false,
        }
    }
}

/// Resources the timing model actually uses once the mode is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resources {
    pub rob_entries: usize,
    pub issue_width: usize,
    pub rs_entries: usize,
    pub rename_width: usize,
    /// `None` commits a whole window at a time after MDRE verification.
    pub commit_width: Option<usize>,
    pub steer: bool,
}

impl PipelineConfig {
    pub fn with_mode(mode: Mode) -> Self {
        PipelineConfig {
            mode,
            ..Default::default()
        }
    }

    pub fn regs(&self) -> RegSpace {
        RegSpace::new(self.num_regs)
    }

    pub fn resources(&self) -> Resources {
        match self.mode {
            Mode::Proposed | Mode::PerfectIpipe => Resources {
                rob_entries: self.rob_entries,
                issue_width: self.primary_issue_width,
                rs_entries: self.primary_rs_entries,
                rename_width: self.rename_width_effectual,
                commit_width: None,
                steer: true,
            },
            Mode::Baseline => Resources {
                rob_entries: self.baseline_rob_entries,
                issue_width: self.primary_issue_width,
                rs_entries: self.primary_rs_entries,
                rename_width: self.rename_width_effectual,
                commit_width: Some(self.baseline_commit_width),
                steer: false,
            },
            Mode::IsoResource => Resources {
                rob_entries: self.rob_entries,
                issue_width: self.iso_issue_width,
                rs_entries: self.iso_rs_entries,
                rename_width: self.iso_rename_width,
                commit_width: Some(self.iso_commit_width),
                steer: false,
            },
        }
    }

    /// Physical registers available to in-flight effectual writers.
    pub fn prf_free_regs(&self) -> usize {
        self.prf_int.saturating_sub(self.num_regs as usize)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let w = self.window_size;
        if w == 0 {
            return bad("pipeline.window_size must be positive".into());
        }
        if !self.rob_entries.is_multiple_of(w) || self.rob_entries / w < 2 {
            return bad(format!(
                "rob.entries={} must be (n+1) x window_size={w} with n >= 1",
                self.rob_entries
            ));
        }
        if ![2, 4, 8].contains(&self.ipipe_width) {
            return bad(format!(
                "ipipe.width={} must be 2, 4 or 8",
                self.ipipe_width
            ));
        }
        if ![64, 128, 256].contains(&self.irs_entries) {
            return bad(format!(
                "irs.entries={} must be 64, 128 or 256",
                self.irs_entries
            ));
        }
        if self.num_regs < 2 {
            return bad("regs.count must be at least 2".into());
        }
        if self.prf_free_regs() == 0 {
            return bad(format!(
                "prf.int={} leaves no registers beyond the {} architectural ones",
                self.prf_int, self.num_regs
            ));
        }
        let positive = [
            ("pipeline.issue_width", self.primary_issue_width),
            ("pipeline.rs_entries", self.primary_rs_entries),
            ("pipeline.rename_width", self.rename_width_effectual),
            ("iprf.read_ports", self.iprf_read_ports),
            ("iprf.write_ports", self.iprf_write_ports),
            ("mprf.read_ports", self.mprf_read_ports),
            ("baseline.rob_entries", self.baseline_rob_entries),
            ("baseline.commit_width", self.baseline_commit_width),
            ("iso.issue_width", self.iso_issue_width),
            ("iso.rename_width", self.iso_rename_width),
            ("iso.commit_width", self.iso_commit_width),
            ("iso.rs_entries", self.iso_rs_entries),
        ];
        for (k, v) in positive {
            if v == 0 {
                return bad(format!("{k} must be positive"));
            }
        }
        let l = &self.latencies;
        if [
            l.alu,
            l.cmp,
            l.branch,
            l.indirect,
            l.predicated,
            l.load,
            l.store,
            l.nop,
        ]
        .contains(&0)
        {
            return bad("latencies must be at least 1".into());
        }
        if self.bottleneck_k == 0 {
            return bad("bottleneck.k must be positive".into());
        }
        if self.deadlock_factor == 0 {
            return bad("sim.deadlock_factor must be positive".into());
        }
        self.predictor
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
        where
            T::Err: fmt::Display,
        {
            v.parse::<T>().map_err(|e| ConfigError::BadValue {
                key: key.to_string(),
                msg: e.to_string(),
            })
        }
        fn flag(key: &str, v: &str) -> Result<bool, ConfigError> {
            match v.to_ascii_lowercase().as_str() {
                "1" | "true" | "yes" | "on" => Ok(true),
                "0" | "false" | "no" | "off" => Ok(false),
                _ => Err(ConfigError::BadValue {
                    key: key.to_string(),
                    msg: format!("expected a boolean, got `{v}`"),
                }),
            }
        }
        fn parsed<T>(key: &str, r: Result<T, String>) -> Result<T, ConfigError> {
            r.map_err(|msg| ConfigError::BadValue {
                key: key.to_string(),
                msg,
            })
        }
        match key {
            "mode" => self.mode = parsed(key, value.parse::<Mode>())?,
            "pipeline.window_size" => self.window_size = num(key, value)?,
            "rob.entries" | "pipeline.rob_entries" => self.rob_entries = num(key, value)?,
            "pipeline.issue_width" => self.primary_issue_width = num(key, value)?,
            "pipeline.rs_entries" => self.primary_rs_entries = num(key, value)?,
            "pipeline.rename_width" => self.rename_width_effectual = num(key, value)?,
            "ipipe.width" => self.ipipe_width = num(key, value)?,
            "irs.entries" => self.irs_entries = num(key, value)?,
            "iprf.read_ports" => self.iprf_read_ports = num(key, value)?,
            "iprf.write_ports" => self.iprf_write_ports = num(key, value)?,
            "mprf.read_ports" => self.mprf_read_ports = num(key, value)?,
            "prf.int" => self.prf_int = num(key, value)?,
            "prf.vec" => self.prf_vec = num(key, value)?,
            "regs.count" => self.num_regs = num(key, value)?,
            "latency.alu" => self.latencies.alu = num(key, value)?,
            "latency.cmp" => self.latencies.cmp = num(key, value)?,
            "latency.branch" => self.latencies.branch = num(key, value)?,
            "latency.indirect" => self.latencies.indirect = num(key, value)?,
            "latency.predicated" => self.latencies.predicated = num(key, value)?,
            "latency.load" => self.latencies.load = num(key, value)?,
            "latency.store" => self.latencies.store = num(key, value)?,
            "latency.nop" => self.latencies.nop = num(key, value)?,
            "bottleneck.k" => self.bottleneck_k = num(key, value)?,
            "frontend.redirect_penalty" => self.redirect_penalty = num(key, value)?,
            "baseline.rob_entries" => self.baseline_rob_entries = num(key, value)?,
            "baseline.commit_width" => self.baseline_commit_width = num(key, value)?,
            "iso.issue_width" => self.iso_issue_width = num(key, value)?,
            "iso.rename_width" => self.iso_rename_width = num(key, value)?,
            "iso.commit_width" => self.iso_commit_width = num(key, value)?,
            "iso.rs_entries" => self.iso_rs_entries = num(key, value)?,
            "pivot.type" => self.pivot_type = parsed(key, value.parse::<PivotType>())?,
            "predictor.kind" => self.predictor.kind = parsed(key, value.parse::<PredictorKind>())?,
            "predictor.gshare_entries" => self.predictor.gshare_entries = num(key, value)?,
            "predictor.gshare_history" => self.predictor.gshare_history = num(key, value)?,
            "predictor.base_entries" => self.predictor.base_entries = num(key, value)?,
            "predictor.tagged_entries" => self.predictor.tagged_entries = num(key, value)?,
            "predictor.indirect_entries" => self.predictor.indirect_entries = num(key, value)?,
            "predictor.predicate_entries" => self.predictor.predicate_entries = num(key, value)?,
            "predictor.train_ineffectual" => self.predictor.train_ineffectual = flag(key, value)?,
            "sim.deadlock_factor" => self.deadlock_factor = num(key, value)?,
            "debug.cycle_log" => self.cycle_log = flag(key, value)?,
            "debug.tag_records" => self.keep_tag_records = flag(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Parses a flat `key=value` file on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key=value` lines without validating the result.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    msg: format!("expected key=value, got `{line}`"),
                });
            };
            self.set(k.trim(), v.trim()).map_err(|e| match e {
                ConfigError::UnknownKey(_) | ConfigError::BadValue { .. } => ConfigError::Syntax {
                    line: i + 1,
                    msg: e.to_string(),
                },
                other => other,
            })?;
        }
        Ok(())
    }

    /// Every key with its current value, in a stable order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let l = &self.latencies;
        let p = &self.predictor;
        vec![
            ("mode", self.mode.to_string()),
            ("pipeline.window_size", self.window_size.to_string()),
            ("rob.entries", self.rob_entries.to_string()),
            ("pipeline.issue_width", self.primary_issue_width.to_string()),
            ("pipeline.rs_entries", self.primary_rs_entries.to_string()),
            (
                "pipeline.rename_width",
                self.rename_width_effectual.to_string(),
            ),
            ("ipipe.width", self.ipipe_width.to_string()),
            ("irs.entries", self.irs_entries.to_string()),
            ("iprf.read_ports", self.iprf_read_ports.to_string()),
            ("iprf.write_ports", self.iprf_write_ports.to_string()),
            ("mprf.read_ports", self.mprf_read_ports.to_string()),
            ("prf.int", self.prf_int.to_string()),
            ("prf.vec", self.prf_vec.to_string()),
            ("regs.count", self.num_regs.to_string()),
            ("latency.alu", l.alu.to_string()),
            ("latency.cmp", l.cmp.to_string()),
            ("latency.branch", l.branch.to_string()),
            ("latency.indirect", l.indirect.to_string()),
            ("latency.predicated", l.predicated.to_string()),
            ("latency.load", l.load.to_string()),
            ("latency.store", l.store.to_string()),
            ("latency.nop", l.nop.to_string()),
            ("bottleneck.k", self.bottleneck_k.to_string()),
            (
                "frontend.redirect_penalty",
                self.redirect_penalty.to_string(),
            ),
            (
                "baseline.rob_entries",
                self.baseline_rob_entries.to_string(),
            ),
            (
                "baseline.commit_width",
                self.baseline_commit_width.to_string(),
            ),
            ("iso.issue_width", self.iso_issue_width.to_string()),
            ("iso.rename_width", self.iso_rename_width.to_string()),
            ("iso.commit_width", self.iso_commit_width.to_string()),
            ("iso.rs_entries", self.iso_rs_entries.to_string()),
            ("pivot.type", self.pivot_type.name().to_string()),
            ("predictor.kind", p.kind.to_string()),
            ("predictor.gshare_entries", p.gshare_entries.to_string()),
            ("predictor.gshare_history", p.gshare_history.to_string()),
            ("predictor.base_entries", p.base_entries.to_string()),
            ("predictor.tagged_entries", p.tagged_entries.to_string()),
            ("predictor.indirect_entries", p.indirect_entries.to_string()),
            (
                "predictor.predicate_entries",
                p.predicate_entries.to_string(),
            ),
            (
                "predictor.train_ineffectual",
                p.train_ineffectual.to_string(),
            ),
            ("sim.deadlock_factor", self.deadlock_factor.to_string()),
            ("debug.cycle_log", self.cycle_log.to_string()),
            ("debug.tag_records", self.keep_tag_records.to_string()),
        ]
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_commit_width_is_window() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        assert_eq!(c.rob_entries, 37 * c.window_size);
        assert_eq!(c.resources().commit_width, None);
        let b = PipelineConfig::with_mode(Mode::Baseline).resources();
        assert_eq!(
            (b.rob_entries, b.commit_width, b.steer),
            (352, Some(6), false)
        );
    }

    #[test]
    fn rob_must_be_whole_windows_plus_one() {
        let mut c = PipelineConfig::default();
        c.rob_entries = 375;
        assert!(c.validate().is_err());
        c.rob_entries = 10;
        assert!(c.validate().is_err());
        c.rob_entries = 20;
        c.validate().unwrap();
    }

    #[test]
    fn parse_flat_file() {
        let c = PipelineConfig::parse(
            "pipeline.window_size=10\nipipe.width=8 # wide\n\nirs.entries=256\npredictor.kind=gshare\nmode=baseline\nbottleneck.k=16\n",
        )
        .unwrap();
        assert_eq!(c.ipipe_width, 8);
        assert_eq!(c.irs_entries, 256);
        assert_eq!(c.predictor.kind, PredictorKind::Gshare);
        assert_eq!(c.mode, Mode::Baseline);
        assert_eq!(c.bottleneck_k, 16);
    }

    #[test]
    fn unknown_key_reports_line() {
        let e = PipelineConfig::parse("ipipe.width=4\nfoo.bar=1\n").unwrap_err();
        assert!(matches!(e, ConfigError::Syntax { line: 2, .. }), "{e:?}");
    }

    #[test]
    fn text_round_trip() {
        let mut c = PipelineConfig::with_mode(Mode::PerfectIpipe);
        c.irs_entries = 64;
        c.pivot_type = PivotType::D;
        assert_eq!(PipelineConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn ipipe_width_restricted() {
        let mut c = PipelineConfig::default();
        c.ipipe_width = 3;
        assert!(c.validate().is_err());
    }
}
