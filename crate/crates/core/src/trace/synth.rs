//! Synthetic trace generator.
//!
//! A random static program is built from op groups, then walked dynamically with
//! branch and indirect-jump outcomes steering the walk. The general-purpose
//! registers are split in two halves: "live" registers carry program state, and
//! "temp" registers are scratch values that are always written before they are
//! read inside a group. Compare chains and planted dead writes only use temps, so
//! their deadness does not depend on the dynamic path.

use std::collections::HashMap;

use rand::seq::index::sample_weighted;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Control, MicroOp, OpClass, Reg, RegSpace, Seq, TraceError};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    /// Number of dynamic micro-ops.
    pub count: usize,
    pub num_regs: u16,
    /// Probability that a static group is a compare chain ending in CMP + conditional branch.
    pub cmp_branch_fraction: f64,
    /// Probability of a single dead write to a scratch register.
    pub dead_write_fraction: f64,
    pub predicated_fraction: f64,
    pub indirect_fraction: f64,
    pub load_fraction: f64,
    pub store_fraction: f64,
    /// Conditional-branch misprediction rate of the embedded predictions.
    pub mispredict_rate: f64,
    pub predicate_mispredict_rate: f64,
    pub indirect_mispredict_rate: f64,
    /// Compare chains have depth uniform in `1..=chain_depth_max`; depth 1 is the CMP alone.
    pub chain_depth_max: u32,
    /// Fraction of static branches with data-dependent (coin flip) outcomes.
    pub random_branch_fraction: f64,
    /// Size of the static program, in groups.
    pub static_groups: usize,
    /// Write `pred=`/`ptarget=`/`ppfalse=` annotations.
    pub embed_predictions: bool,
    /// Probability that a work op reads its own destination register.
    pub locality: f64,
    /// Fraction of static control ops that are hard to predict. Mispredictions
    /// fall mostly on those; 1.0 spreads them uniformly.
    pub hard_pc_fraction: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            count: 10_000,
            num_regs: RegSpace::DEFAULT.num_regs,
            cmp_branch_fraction: 0.10,
            dead_write_fraction: 0.05,
            predicated_fraction: 0.04,
            indirect_fraction: 0.02,
            load_fraction: 0.12,
            store_fraction: 0.08,
            mispredict_rate: 0.05,
            predicate_mispredict_rate: 0.05,
            indirect_mispredict_rate: 0.05,
            chain_depth_max: 2,
            random_branch_fraction: 0.1,
            static_groups: 48,
            embed_predictions: true,
            locality: 0.9,
            hard_pc_fraction: 0.3,
        }
    }
}

impl SynthParams {
    /// A program made almost entirely of compare chains feeding conditional branches.
    pub fn cmp_branch_pairs(count: usize) -> Self {
        SynthParams {
            count,
            cmp_branch_fraction: 0.6,
            dead_write_fraction: 0.0,
            predicated_fraction: 0.0,
            indirect_fraction: 0.0,
            load_fraction: 0.05,
            store_fraction: 0.1,
            chain_depth_max: 3,
            ..SynthParams::default()
        }
    }

    fn check(&self) -> Result<(), TraceError> {
        let err = |m: String| Err(TraceError::Config(m));
        let fractions = [
            ("cmp_branch_fraction", self.cmp_branch_fraction),
            ("dead_write_fraction", self.dead_write_fraction),
            ("predicated_fraction", self.predicated_fraction),
            ("indirect_fraction", self.indirect_fraction),
            ("load_fraction", self.load_fraction),
            ("store_fraction", self.store_fraction),
            ("mispredict_rate", self.mispredict_rate),
            ("predicate_mispredict_rate", self.predicate_mispredict_rate),
            ("indirect_mispredict_rate", self.indirect_mispredict_rate),
            ("random_branch_fraction", self.random_branch_fraction),
            ("locality", self.locality),
            ("hard_pc_fraction", self.hard_pc_fraction),
        ];
        for (name, v) in fractions {
            if !(0.0..=1.0).contains(&v) {
                return err(format!("{name}={v} outside [0, 1]"));
            }
        }
        let total = self.cmp_branch_fraction
            + self.dead_write_fraction
            + self.predicated_fraction
            + self.indirect_fraction
            + self.load_fraction
            + self.store_fraction;
        if total > 1.0 + 1e-9 {
            return err(format!("group fractions sum to {total:.3} > 1"));
        }
        if self.chain_depth_max == 0 {
            return err("chain_depth_max must be >= 1".into());
        }
        if self.num_regs < 5 {
            return err("need at least 4 GPRs plus FLAGS".into());
        }
        if self.static_groups == 0 {
            return err("static_groups must be >= 1".into());
        }
        if self.chain_depth_max as usize > self.temp_regs().len() + 1 {
            return err(format!(
                "chain depth {} needs more than {} scratch registers",
                self.chain_depth_max,
                self.temp_regs().len()
            ));
        }
        Ok(())
    }

    fn regs(&self) -> RegSpace {
        RegSpace::new(self.num_regs)
    }

    fn live_regs(&self) -> Vec<Reg> {
        let g = self.regs().gprs();
        (0..g / 2).map(Reg).collect()
    }

    fn temp_regs(&self) -> Vec<Reg> {
        let g = self.regs().gprs();
        (g / 2..g).map(Reg).collect()
    }
}

/// What the generator planted, for cross-checks against the oracle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynthManifest {
    /// Dead writes whose scratch register is overwritten later in the trace.
    pub planted_dead: Vec<Seq>,
    pub branches: usize,
    pub mispredicted_branches: usize,
    pub predicated: usize,
    pub mispredicted_predicates: usize,
    pub indirects: usize,
    pub mispredicted_indirects: usize,
}

#[derive(Debug, Clone)]
enum BranchBehavior {
    Biased(f64),
    Pattern(Vec<bool>),
    Random,
}

#[derive(Debug, Clone)]
enum Exit {
    FallThrough,
    Branch {
        behavior: BranchBehavior,
        target: usize,
    },
    Indirect {
        targets: Vec<usize>,
    },
}

#[derive(Debug, Clone)]
struct StaticOp {
    pc: u64,
    class: OpClass,
    srcs: Vec<Reg>,
    dest: Option<Reg>,
    addr_base: u64,
    p_false: f64,
    dead: bool,
}

#[derive(Debug, Clone)]
struct Group {
    ops: Vec<StaticOp>,
    exit: Exit,
}

struct Builder<'a> {
    p: &'a SynthParams,
    rng: ChaCha8Rng,
    live: Vec<Reg>,
    temps: Vec<Reg>,
    flags: Reg,
    next_pc: u64,
    next_temp: usize,
    /// Live register most recently written by a work op; consumers favour it.
    last_written: Option<Reg>,
}

impl Builder<'_> {
    fn pc(&mut self) -> u64 {
        let pc = self.next_pc;
        self.next_pc += 4;
        pc
    }

    fn live(&mut self) -> Reg {
        self.live[self.rng.gen_range(0..self.live.len())]
    }

    fn recent_or_live(&mut self) -> Reg {
        match self.last_written {
            Some(r) if self.rng.gen_bool(self.p.locality) => r,
            _ => self.live(),
        }
    }

    fn temp(&mut self) -> Reg {
        let t = self.temps[self.next_temp % self.temps.len()];
        self.next_temp += 1;
        t
    }

    fn op(&mut self, class: OpClass, srcs: Vec<Reg>, dest: Option<Reg>) -> StaticOp {
        StaticOp {
            pc: self.pc(),
            class,
            srcs,
            dest,
            addr_base: 0,
            p_false: 0.0,
            dead: false,
        }
    }

    fn group(&mut self, idx: usize) -> Group {
        let p = self.p;
        let roll: f64 = self.rng.gen();
        let mut acc = p.cmp_branch_fraction;
        let n = p.static_groups;
        if roll < acc {
            let depth = self.rng.gen_range(1..=p.chain_depth_max);
            let mut ops = Vec::new();
            let mut prev: Option<Reg> = None;
            for _ in 1..depth {
                let t = self.temp();
                let a = prev.unwrap_or_else(|| self.live());
                let b = self.live();
                ops.push(self.op(OpClass::Alu, vec![a, b], Some(t)));
                prev = Some(t);
            }
            let a = prev.unwrap_or_else(|| self.live());
            let b = self.live();
            let flags = self.flags;
            ops.push(self.op(OpClass::Cmp, vec![a, b], Some(flags)));
            ops.push(self.op(OpClass::CondBranch, vec![flags], None));
            let behavior = if self.rng.gen_bool(p.random_branch_fraction) {
                BranchBehavior::Random
            } else if self.rng.gen_bool(0.5) {
                let bias = self.rng.gen_range(0.9..0.99);
                BranchBehavior::Biased(if self.rng.gen_bool(0.5) {
                    bias
                } else {
                    1.0 - bias
                })
            } else {
                let period = self.rng.gen_range(2..=8);
                BranchBehavior::Pattern((0..period).map(|_| self.rng.gen_bool(0.5)).collect())
            };
            let back = self.rng.gen_bool(0.15);
            let target = if back {
                (idx + n - self.rng.gen_range(1..=4.min(n))) % n
            } else {
                (idx + self.rng.gen_range(2..=5)) % n
            };
            return Group {
                ops,
                exit: Exit::Branch { behavior, target },
            };
        }
        acc += p.dead_write_fraction;
        if roll < acc {
            let t = self.temp();
            let a = self.live();
            let mut op = self.op(OpClass::Alu, vec![a], Some(t));
            op.dead = true;
            return Group {
                ops: vec![op],
                exit: Exit::FallThrough,
            };
        }
        acc += p.predicated_fraction;
        if roll < acc {
            let flags = self.flags;
            let a = self.live();
            let d = self.live();
            let mut op = self.op(OpClass::PredicatedAlu, vec![flags, d, a], Some(d));
            op.p_false = if self.rng.gen_bool(0.8) { 0.9 } else { 0.2 };
            return Group {
                ops: vec![op],
                exit: Exit::FallThrough,
            };
        }
        acc += p.indirect_fraction;
        if roll < acc {
            let a = self.live();
            let op = self.op(OpClass::IndirectJump, vec![a], None);
            let k = self.rng.gen_range(1..=3);
            let targets = (0..k)
                .map(|_| (idx + self.rng.gen_range(1..=6)) % n)
                .collect();
            return Group {
                ops: vec![op],
                exit: Exit::Indirect { targets },
            };
        }
        acc += p.load_fraction;
        if roll < acc {
            let a = self.live();
            let t = self.temp();
            let d = self.live();
            let mut ld = self.op(OpClass::Load, vec![a], Some(t));
            ld.addr_base = 0x1_0000 + self.rng.gen_range(0..64u64) * 64;
            let use_ = self.op(OpClass::Alu, vec![d, t], Some(d));
            self.last_written = Some(d);
            return Group {
                ops: vec![ld, use_],
                exit: Exit::FallThrough,
            };
        }
        acc += p.store_fraction;
        if roll < acc {
            let a = self.live();
            let b = self.recent_or_live();
            let mut op = self.op(OpClass::Store, vec![a, b], None);
            op.addr_base = 0x1_0000 + self.rng.gen_range(0..64u64) * 64;
            return Group {
                ops: vec![op],
                exit: Exit::FallThrough,
            };
        }
        let nsrc = self.rng.gen_range(1..=2);
        let mut srcs: Vec<Reg> = (0..nsrc).map(|_| self.live()).collect();
        let d = self.live();
        // Read-modify-write keeps most results on a path to a later consumer.
        if self.rng.gen_bool(p.locality) {
            srcs[0] = d;
        }
        self.last_written = Some(d);
        Group {
            ops: vec![self.op(OpClass::Alu, srcs, Some(d))],
            exit: Exit::FallThrough,
        }
    }
}

/// Generates a trace; deterministic in `(params, seed)`.
pub fn generate_synthetic(params: &SynthParams, seed: u64) -> Result<Vec<MicroOp>, TraceError> {
    generate_synthetic_annotated(params, seed).map(|(ops, _)| ops)
}

pub fn generate_synthetic_annotated(
    params: &SynthParams,
    seed: u64,
) -> Result<(Vec<MicroOp>, SynthManifest), TraceError> {
    params.check()?;
    let mut manifest = SynthManifest::default();
    if params.count == 0 {
        return Ok((Vec::new(), manifest));
    }
    let mut b = Builder {
        p: params,
        rng: ChaCha8Rng::seed_from_u64(seed),
        live: params.live_regs(),
        temps: params.temp_regs(),
        flags: params.regs().flags(),
        next_pc: 0x1000,
        next_temp: 0,
        last_written: None,
    };
    let program: Vec<Group> = (0..params.static_groups).map(|i| b.group(i)).collect();
    let mut rng = b.rng;

    // Dynamic walk.
    let mut ops: Vec<MicroOp> = Vec::with_capacity(params.count);
    let mut dead: Vec<Seq> = Vec::new();
    let mut visits = vec![0u64; program.len()];
    let mut g = 0usize;
    'walk: loop {
        let group = &program[g];
        let visit = visits[g];
        visits[g] += 1;
        let mut next = (g + 1) % program.len();
        for sop in &group.ops {
            if ops.len() == params.count {
                break 'walk;
            }
            let seq = ops.len() as Seq;
            let mut op = MicroOp::new(seq, sop.pc, sop.class).with_srcs(&sop.srcs);
            op.dest = sop.dest;
            if sop.class.is_memory() {
                op.addr = Some(sop.addr_base + (visit % 4) * 8);
            }
            match (sop.class, &group.exit) {
                (OpClass::CondBranch, Exit::Branch { behavior, target }) => {
                    let taken = match behavior {
                        BranchBehavior::Biased(p) => rng.gen_bool(*p),
                        BranchBehavior::Pattern(bits) => bits[(visit % bits.len() as u64) as usize],
                        BranchBehavior::Random => rng.gen_bool(0.5),
                    };
                    if taken {
                        next = *target;
                    }
                    op.ctrl = Some(Control::Branch {
                        taken,
                        predicted: None,
                    });
                }
                (OpClass::IndirectJump, Exit::Indirect { targets }) => {
                    // The first target dominates.
                    let t = if rng.gen_bool(0.85) {
                        targets[0]
                    } else {
                        targets[rng.gen_range(0..targets.len())]
                    };
                    next = t;
                    op.ctrl = Some(Control::Indirect {
                        target: program[t].ops[0].pc,
                        predicted: None,
                    });
                }
                (OpClass::PredicatedAlu, _) => {
                    op.ctrl = Some(Control::Predicate {
                        pred_false: rng.gen_bool(sop.p_false),
                        predicted_false: None,
                    });
                }
                _ => {}
            }
            if sop.dead {
                dead.push(seq);
            }
            ops.push(op);
        }
        g = next;
    }

    // Embedded predictions with exact misprediction counts per kind.
    let branch_idx: Vec<usize> = indices_of(&ops, OpClass::CondBranch);
    let pred_idx: Vec<usize> = indices_of(&ops, OpClass::PredicatedAlu);
    let ind_idx: Vec<usize> = indices_of(&ops, OpClass::IndirectJump);
    manifest.branches = branch_idx.len();
    manifest.predicated = pred_idx.len();
    manifest.indirects = ind_idx.len();
    if params.embed_predictions {
        let mut hardness: HashMap<u64, f64> = HashMap::new();
        for op in ops.iter().filter(|o| o.class.is_control()) {
            hardness.entry(op.pc).or_insert_with(|| {
                if rng.gen_bool(params.hard_pc_fraction) {
                    1.0
                } else {
                    0.02
                }
            });
        }
        let weights =
            |idx: &[usize]| -> Vec<f64> { idx.iter().map(|&i| hardness[&ops[i].pc]).collect() };
        let (wb, wp, wi) = (weights(&branch_idx), weights(&pred_idx), weights(&ind_idx));
        let wrong_b = pick(&mut rng, &wb, params.mispredict_rate);
        let wrong_p = pick(&mut rng, &wp, params.predicate_mispredict_rate);
        let wrong_i = pick(&mut rng, &wi, params.indirect_mispredict_rate);
        manifest.mispredicted_branches = wrong_b.iter().filter(|&&w| w).count();
        manifest.mispredicted_predicates = wrong_p.iter().filter(|&&w| w).count();
        manifest.mispredicted_indirects = wrong_i.iter().filter(|&&w| w).count();
        for (k, &i) in branch_idx.iter().enumerate() {
            if let Some(Control::Branch { taken, predicted }) = &mut ops[i].ctrl {
                *predicted = Some(*taken != wrong_b[k]);
            }
        }
        for (k, &i) in pred_idx.iter().enumerate() {
            if let Some(Control::Predicate {
                pred_false,
                predicted_false,
            }) = &mut ops[i].ctrl
            {
                *predicted_false = Some(*pred_false != wrong_p[k]);
            }
        }
        for (k, &i) in ind_idx.iter().enumerate() {
            if let Some(Control::Indirect { target, predicted }) = &mut ops[i].ctrl {
                *predicted = Some(if wrong_i[k] { *target ^ 0x4 } else { *target });
            }
        }
    }

    manifest.planted_dead = dead
        .into_iter()
        .filter(|&s| next_touch_is_write(&ops, s))
        .collect();
    Ok((ops, manifest))
}

fn indices_of(ops: &[MicroOp], class: OpClass) -> Vec<usize> {
    ops.iter()
        .enumerate()
        .filter(|(_, o)| o.class == class)
        .map(|(i, _)| i)
        .collect()
}

/// Marks exactly `round(rate * n)` of the `n` positions as mispredicted,
/// favouring heavy positions.
fn pick(rng: &mut ChaCha8Rng, weights: &[f64], rate: f64) -> Vec<bool> {
    let n = weights.len();
    let k = ((rate * n as f64).round() as usize).min(n);
    let mut wrong = vec![false; n];
    let chosen = sample_weighted(rng, n, |i| weights[i], k).expect("positive finite weights");
    for i in chosen.iter() {
        wrong[i] = true;
    }
    wrong
}

fn next_touch_is_write(ops: &[MicroOp], seq: Seq) -> bool {
    let Some(r) = ops[seq as usize].dest else {
        return false;
    };
    for op in &ops[seq as usize + 1..] {
        if op.reads(r) {
            return false;
        }
        if op.written_reg() == Some(r) {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::validate_trace;

    #[test]
    fn zero_count_is_empty() {
        let p = SynthParams {
            count: 0,
            ..SynthParams::default()
        };
        assert!(generate_synthetic(&p, 1).unwrap().is_empty());
    }

    #[test]
    fn infeasible_fractions_are_rejected() {
        let p = SynthParams {
            cmp_branch_fraction: 0.7,
            load_fraction: 0.5,
            ..SynthParams::default()
        };
        assert!(matches!(
            generate_synthetic(&p, 1),
            Err(TraceError::Config(_))
        ));
        let p = SynthParams {
            mispredict_rate: 1.5,
            ..SynthParams::default()
        };
        assert!(generate_synthetic(&p, 1).is_err());
    }

    #[test]
    fn generated_traces_are_valid_and_deterministic() {
        let p = SynthParams::default();
        let a = generate_synthetic(&p, 42).unwrap();
        let b = generate_synthetic(&p, 42).unwrap();
        let c = generate_synthetic(&p, 43).unwrap();
        assert_eq!(a.len(), p.count);
        assert_eq!(a, b);
        assert_ne!(a, c);
        validate_trace(&a, RegSpace::new(p.num_regs)).unwrap();
    }

    #[test]
    fn misprediction_rate_is_within_half_a_point() {
        let p = SynthParams {
            count: 100_000,
            mispredict_rate: 0.05,
            ..SynthParams::default()
        };
        let ops = generate_synthetic(&p, 7).unwrap();
        let (mut n, mut wrong) = (0usize, 0usize);
        for op in &ops {
            if let Some(Control::Branch {
                taken,
                predicted: Some(pr),
            }) = op.ctrl
            {
                n += 1;
                wrong += (taken != pr) as usize;
            }
        }
        let rate = wrong as f64 / n as f64;
        assert!(n > 1000);
        assert!((0.045..=0.055).contains(&rate), "rate {rate}");
    }

    #[test]
    fn planted_dead_writes_are_overwritten_before_use() {
        let p = SynthParams {
            dead_write_fraction: 0.2,
            ..SynthParams::default()
        };
        let (ops, m) = generate_synthetic_annotated(&p, 3).unwrap();
        assert!(!m.planted_dead.is_empty());
        for &s in &m.planted_dead {
            assert!(next_touch_is_write(&ops, s));
        }
    }
}
