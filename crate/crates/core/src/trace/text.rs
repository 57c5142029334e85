//! Line-oriented trace format.
//!
//! ```text
//! <OPCLASS> pc=<int> [srcs=<r...>] [dest=<r|FLAGS>] [addr=<int>] [lat=<int>]
//!     [taken=<0|1> pred=<0|1>] [target=<int> ptarget=<int>] [pfalse=<0|1> ppfalse=<0|1>] [# comment]
//! ```
//!
//! Keys may appear in any order. Blank and comment-only lines carry no op; `seq`
//! is the index among op lines.

use std::io::{BufRead, Write};

use super::{validate_op, Control, MicroOp, OpClass, Reg, RegSpace, Seq, Srcs, TraceError};

pub fn parse_trace<R: BufRead>(input: R, regs: RegSpace) -> Result<Vec<MicroOp>, TraceError> {
    let mut ops = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if let Some(op) = parse_line(&line, lineno + 1, ops.len() as Seq, regs)? {
            ops.push(op);
        }
    }
    Ok(ops)
}

pub fn parse_trace_str(s: &str, regs: RegSpace) -> Result<Vec<MicroOp>, TraceError> {
    parse_trace(s.as_bytes(), regs)
}

fn parse_line(
    raw: &str,
    line: usize,
    seq: Seq,
    regs: RegSpace,
) -> Result<Option<MicroOp>, TraceError> {
    let body = match raw.find('#') {
        Some(i) => &raw[..i],
        None => raw,
    };
    let mut tokens = body.split_whitespace();
    let Some(head) = tokens.next() else {
        return Ok(None);
    };
    let perr = |msg: String| TraceError::Parse { line, msg };

    let class =
        OpClass::from_mnemonic(head).ok_or_else(|| perr(format!("unknown op class `{head}`")))?;
    let mut op = MicroOp::new(seq, 0, class);
    let mut pc = None;
    let mut taken = None;
    let mut pred = None;
    let mut target = None;
    let mut ptarget = None;
    let mut pfalse = None;
    let mut ppfalse = None;

    for tok in tokens {
        let (key, val) = tok
            .split_once('=')
            .ok_or_else(|| perr(format!("expected key=value, got `{tok}`")))?;
        let dup = || perr(format!("duplicate key `{key}`"));
        match key {
            "pc" => set_once(&mut pc, parse_int(val, line)?).map_err(|_| dup())?,
            "srcs" => {
                if !op.srcs.is_empty() {
                    return Err(dup());
                }
                let list = val
                    .split(',')
                    .map(|r| parse_reg(r, regs, line))
                    .collect::<Result<Vec<_>, _>>()?;
                op.srcs = Srcs::from_slice(&list)
                    .ok_or_else(|| perr(format!("at most {} sources", Srcs::MAX)))?;
            }
            "dest" => {
                let r = parse_reg(val, regs, line)?;
                set_once(&mut op.dest, r).map_err(|_| dup())?;
            }
            "addr" => set_once(&mut op.addr, parse_int(val, line)?).map_err(|_| dup())?,
            "lat" => {
                let l = parse_int(val, line)?;
                let l = u32::try_from(l).map_err(|_| perr(format!("latency {l} too large")))?;
                set_once(&mut op.latency, l).map_err(|_| dup())?
            }
            "taken" => set_once(&mut taken, parse_bit(val, line)?).map_err(|_| dup())?,
            "pred" => set_once(&mut pred, parse_bit(val, line)?).map_err(|_| dup())?,
            "target" => set_once(&mut target, parse_int(val, line)?).map_err(|_| dup())?,
            "ptarget" => set_once(&mut ptarget, parse_int(val, line)?).map_err(|_| dup())?,
            "pfalse" => set_once(&mut pfalse, parse_bit(val, line)?).map_err(|_| dup())?,
            "ppfalse" => set_once(&mut ppfalse, parse_bit(val, line)?).map_err(|_| dup())?,
            _ => return Err(perr(format!("unknown key `{key}`"))),
        }
    }

    op.pc = pc.ok_or_else(|| perr("missing pc".into()))?;

    let verr = |msg: &str| TraceError::Validation {
        line,
        msg: msg.to_string(),
    };
    op.ctrl = match class {
        OpClass::CondBranch => {
            if target.is_some() || ptarget.is_some() || pfalse.is_some() || ppfalse.is_some() {
                return Err(verr("BR.C only takes taken/pred"));
            }
            Some(Control::Branch {
                taken: taken.ok_or_else(|| verr("BR.C needs taken="))?,
                predicted: pred,
            })
        }
        OpClass::IndirectJump => {
            if taken.is_some() || pred.is_some() || pfalse.is_some() || ppfalse.is_some() {
                return Err(verr("BR.I only takes target/ptarget"));
            }
            Some(Control::Indirect {
                target: target.ok_or_else(|| verr("BR.I needs target="))?,
                predicted: ptarget,
            })
        }
        OpClass::PredicatedAlu => {
            if taken.is_some() || pred.is_some() || target.is_some() || ptarget.is_some() {
                return Err(verr("ALU.P only takes pfalse/ppfalse"));
            }
            Some(Control::Predicate {
                pred_false: pfalse.ok_or_else(|| verr("ALU.P needs pfalse="))?,
                predicted_false: ppfalse,
            })
        }
        _ => {
            if taken.is_some()
                || pred.is_some()
                || target.is_some()
                || ptarget.is_some()
                || pfalse.is_some()
                || ppfalse.is_some()
            {
                return Err(verr("control fields on a non-control op"));
            }
            None
        }
    };

    validate_op(&op, regs).map_err(|msg| TraceError::Validation { line, msg })?;
    Ok(Some(op))
}

fn set_once<T>(slot: &mut Option<T>, v: T) -> Result<(), ()> {
    if slot.is_some() {
        return Err(());
    }
    *slot = Some(v);
    Ok(())
}

fn parse_int(s: &str, line: usize) -> Result<u64, TraceError> {
    s.parse::<u64>().map_err(|_| TraceError::Parse {
        line,
        msg: format!("bad integer `{s}`"),
    })
}

fn parse_bit(s: &str, line: usize) -> Result<bool, TraceError> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(TraceError::Parse {
            line,
            msg: format!("expected 0 or 1, got `{s}`"),
        }),
    }
}

fn parse_reg(s: &str, regs: RegSpace, line: usize) -> Result<Reg, TraceError> {
    if s == "FLAGS" {
        return Ok(regs.flags());
    }
    let idx = s
        .strip_prefix('r')
        .and_then(|n| n.parse::<u16>().ok())
        .ok_or_else(|| TraceError::Parse {
            line,
            msg: format!("bad register `{s}`"),
        })?;
    let r = Reg(idx);
    if !regs.contains(r) {
        return Err(TraceError::Validation {
            line,
            msg: format!("register r{idx} out of range (R={})", regs.num_regs),
        });
    }
    Ok(r)
}

fn fmt_reg(r: Reg, regs: RegSpace) -> String {
    if r == regs.flags() {
        "FLAGS".to_string()
    } else {
        format!("r{}", r.0)
    }
}

fn bit(b: bool) -> u8 {
    b as u8
}

/// Formats one op as a trace line (no trailing newline).
pub fn format_op(op: &MicroOp, regs: RegSpace) -> String {
    let mut s = format!("{} pc={}", op.class.mnemonic(), op.pc);
    if !op.srcs.is_empty() {
        let list: Vec<String> = op
            .srcs
            .as_slice()
            .iter()
            .map(|&r| fmt_reg(r, regs))
            .collect();
        s.push_str(&format!(" srcs={}", list.join(",")));
    }
    if let Some(d) = op.dest {
        s.push_str(&format!(" dest={}", fmt_reg(d, regs)));
    }
    if let Some(a) = op.addr {
        s.push_str(&format!(" addr={a}"));
    }
    if let Some(l) = op.latency {
        s.push_str(&format!(" lat={l}"));
    }
    match op.ctrl {
        Some(Control::Branch { taken, predicted }) => {
            s.push_str(&format!(" taken={}", bit(taken)));
            if let Some(p) = predicted {
                s.push_str(&format!(" pred={}", bit(p)));
            }
        }
        Some(Control::Indirect { target, predicted }) => {
            s.push_str(&format!(" target={target}"));
            if let Some(p) = predicted {
                s.push_str(&format!(" ptarget={p}"));
            }
        }
        Some(Control::Predicate {
            pred_false,
            predicted_false,
        }) => {
            s.push_str(&format!(" pfalse={}", bit(pred_false)));
            if let Some(p) = predicted_false {
                s.push_str(&format!(" ppfalse={}", bit(p)));
            }
        }
        None => {}
    }
    s
}

pub fn emit_trace<W: Write>(
    ops: &[MicroOp],
    regs: RegSpace,
    mut sink: W,
) -> Result<(), TraceError> {
    for op in ops {
        writeln!(sink, "{}", format_op(op, regs))?;
    }
    sink.flush()?;
    Ok(())
}

pub fn emit_trace_string(ops: &[MicroOp], regs: RegSpace) -> String {
    let mut buf = Vec::new();
    emit_trace(ops, regs, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("trace text is ASCII")
}

#[cfg(test)]
mod tests {
    use super::*;

    const R: RegSpace = RegSpace::DEFAULT;

    #[test]
    fn parses_cmp_line() {
        let ops = parse_trace_str("CMP srcs=r1,r2 dest=FLAGS pc=40", R).unwrap();
        assert_eq!(ops.len(), 1);
        assert_eq!(ops[0].class, OpClass::Cmp);
        assert_eq!(ops[0].dest, Some(R.flags()));
        assert_eq!(ops[0].srcs.as_slice(), &[Reg(1), Reg(2)]);
        assert_eq!(ops[0].pc, 40);
    }

    #[test]
    fn parses_predicted_branch() {
        let ops = parse_trace_str("BR.C srcs=FLAGS taken=1 pred=1 pc=41", R).unwrap();
        assert_eq!(ops[0].class, OpClass::CondBranch);
        assert_eq!(
            ops[0].ctrl,
            Some(Control::Branch {
                taken: true,
                predicted: Some(true)
            })
        );
    }

    #[test]
    fn comments_and_blank_lines_do_not_count() {
        let text = "# header\n\nNOP pc=1 # trailing\n   \nNOP pc=2\n";
        let ops = parse_trace_str(text, R).unwrap();
        assert_eq!(ops.len(), 2);
        assert_eq!(ops[1].seq, 1);
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let err = parse_trace_str("NOP pc=1\nALU pc=2 colour=red", R).unwrap_err();
        match err {
            TraceError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn register_out_of_range_is_validation_error() {
        let err = parse_trace_str("ALU pc=1 dest=r17", R).unwrap_err();
        assert!(matches!(err, TraceError::Validation { line: 1, .. }));
    }

    #[test]
    fn branch_without_flags_is_rejected() {
        let err = parse_trace_str("BR.C pc=1 srcs=r1 taken=1", R).unwrap_err();
        assert!(matches!(err, TraceError::Validation { .. }));
    }

    #[test]
    fn missing_pc_is_parse_error() {
        assert!(matches!(
            parse_trace_str("NOP", R).unwrap_err(),
            TraceError::Parse { .. }
        ));
    }

    #[test]
    fn empty_trace_emits_nothing() {
        assert_eq!(emit_trace_string(&[], R), "");
    }

    #[test]
    fn single_nop_is_one_line() {
        let s = emit_trace_string(&[MicroOp::new(0, 7, OpClass::Nop)], R);
        assert_eq!(s, "NOP pc=7\n");
    }

    #[test]
    fn last_gpr_index_prints_as_flags() {
        let op = MicroOp::new(0, 1, OpClass::Alu).with_dest(Reg(16));
        assert_eq!(format_op(&op, R), "ALU pc=1 dest=FLAGS");
    }
}
