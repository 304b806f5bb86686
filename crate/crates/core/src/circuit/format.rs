//! The line-oriented `.qc` circuit text format.
//!
//! ```text
//! qubits N                        required header
//! linear                          permit non-unitary gates
//! input L a_re a_im b_re b_im     product input a|0⟩+b|1⟩ on line L
//! h|x|y|z|s|t L                   named one-qubit gates
//! cnot C T | cz A B | swap A B    named two-qubit gates
//! u L <8 floats>                  raw 2x2, row-major (re, im) pairs
//! u2 J K <32 floats>              raw 4x4, row-major, basis |q_J q_K⟩
//! measure L -> REG                standard-basis measurement into REG
//! cif REG BIT: <gate line>        classically controlled gate
//! ```
//!
//! `#` starts a comment. Floats are emitted with 17 significant digits so a
//! parse of emitted text reproduces every matrix entry bit for bit.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;

use super::{gates, validate, Circuit, Condition, Instruction, Op};
use crate::error::CircuitError;
use crate::numerics::ComplexMatrix;

pub fn parse_circuit(text: &str) -> Result<Circuit, CircuitError> {
    let mut circuit: Option<Circuit> = None;
    let mut source_lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let syntax = |message: String| CircuitError::Syntax { line: line_no, message };
        let Some(c) = circuit.as_mut() else {
            if tokens[0] != "qubits" || tokens.len() != 2 {
                return Err(syntax("expected header `qubits N`".into()));
            }
            let n = parse_count(tokens[1]).map_err(syntax)?;
            circuit = Some(Circuit::new(n));
            continue;
        };
        match tokens[0] {
            "qubits" => return Err(syntax("duplicate `qubits` header".into())),
            "linear" if tokens.len() == 1 => c.linear = true,
            "input" => {
                expect_len(&tokens, 6).map_err(syntax)?;
                let line = parse_count(tokens[1]).map_err(syntax)?;
                let f = parse_floats(&tokens[2..]).map_err(syntax)?;
                c.instructions.push(Instruction::new(Op::Input {
                    line,
                    amplitudes: [C64::new(f[0], f[1]), C64::new(f[2], f[3])],
                }));
                source_lines.push(line_no);
            }
            "measure" => {
                expect_len(&tokens, 4).map_err(syntax)?;
                if tokens[2] != "->" {
                    return Err(syntax("expected `measure L -> REG`".into()));
                }
                let line = parse_count(tokens[1]).map_err(syntax)?;
                let register = parse_register(tokens[3]).map_err(syntax)?;
                c.instructions.push(Instruction::new(Op::Measure { line, register }));
                source_lines.push(line_no);
            }
            "cif" => {
                let (condition, rest) = parse_condition(&tokens[1..]).map_err(syntax)?;
                let op = parse_gate(rest).map_err(syntax)?;
                c.instructions.push(Instruction { op, condition: Some(condition) });
                source_lines.push(line_no);
            }
            _ => {
                let op = parse_gate(&tokens).map_err(syntax)?;
                c.instructions.push(Instruction::new(op));
                source_lines.push(line_no);
            }
        }
    }
    let circuit = circuit.ok_or_else(|| CircuitError::Syntax { line: 1, message: "missing `qubits N` header".into() })?;
    if let Some(d) = validate(&circuit).into_iter().next() {
        return Err(CircuitError::Invalid { line: source_lines[d.instruction], diagnostic: d.message });
    }
    Ok(circuit)
}

pub fn emit_circuit(c: &Circuit) -> String {
    let mut out = format!("qubits {}\n", c.n_qubits);
    if c.linear {
        out.push_str("linear\n");
    }
    for ins in &c.instructions {
        if let Some(Condition { register, bit }) = &ins.condition {
            let _ = write!(out, "cif {register} {bit}: ");
        }
        match &ins.op {
            Op::OneQubit { line, matrix } => match gates::name_of(matrix) {
                Some(name) => {
                    let _ = write!(out, "{name} {line}");
                }
                None => {
                    let _ = write!(out, "u {line}");
                    push_entries(&mut out, matrix);
                }
            },
            Op::TwoQubit { first, second, matrix } => match gates::name_of(matrix) {
                Some(name) => {
                    let _ = write!(out, "{name} {first} {second}");
                }
                None => {
                    let _ = write!(out, "u2 {first} {second}");
                    push_entries(&mut out, matrix);
                }
            },
            Op::Measure { line, register } => {
                let _ = write!(out, "measure {line} -> {register}");
            }
            Op::Input { line, amplitudes } => {
                let _ = write!(out, "input {line}");
                for z in amplitudes {
                    let _ = write!(out, " {} {}", fmt_float(z.re), fmt_float(z.im));
                }
            }
        }
        out.push('\n');
    }
    out
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_entries(out: &mut String, m: &ComplexMatrix) {
    for z in m.as_slice() {
        let _ = write!(out, " {} {}", fmt_float(z.re), fmt_float(z.im));
    }
}

fn expect_len(tokens: &[&str], n: usize) -> Result<(), String> {
    if tokens.len() != n {
        return Err(format!("`{}` takes {} arguments, got {}", tokens[0], n - 1, tokens.len() - 1));
    }
    Ok(())
}

fn parse_count(tok: &str) -> Result<usize, String> {
    tok.parse::<usize>().map_err(|_| format!("expected a nonnegative integer, got `{tok}`"))
}

fn parse_floats(tokens: &[&str]) -> Result<Vec<f64>, String> {
    tokens
        .iter()
        .map(|t| {
            let v = t.parse::<f64>().map_err(|_| format!("expected a number, got `{t}`"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("non-finite number `{t}`"))
            }
        })
        .collect()
}

fn parse_register(tok: &str) -> Result<String, String> {
    let mut chars = tok.chars();
    let ok = matches!(chars.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_')
        && chars.all(|ch| ch.is_ascii_alphanumeric() || ch == '_');
    if ok {
        Ok(tok.to_string())
    } else {
        Err(format!("invalid register name `{tok}`"))
    }
}

/// Parses `REG BIT:` (the colon may be attached or a separate token).
fn parse_condition<'a, 'b>(tokens: &'b [&'a str]) -> Result<(Condition, &'b [&'a str]), String> {
    if tokens.len() < 2 {
        return Err("expected `cif REG BIT: <gate>`".into());
    }
    let register = parse_register(tokens[0])?;
    let (bit_tok, rest) = if let Some(stripped) = tokens[1].strip_suffix(':') {
        (stripped, &tokens[2..])
    } else if tokens.get(2) == Some(&":") {
        (tokens[1], &tokens[3..])
    } else {
        return Err("expected `:` after the condition bit".into());
    };
    let bit = match bit_tok {
        "0" => 0,
        "1" => 1,
        other => return Err(format!("condition bit must be 0 or 1, got `{other}`")),
    };
    if rest.is_empty() {
        return Err("missing gate after `cif` condition".into());
    }
    Ok((Condition { register, bit }, rest))
}

fn parse_gate(tokens: &[&str]) -> Result<Op, String> {
    let name = tokens[0];
    if gates::ONE_QUBIT_NAMES.contains(&name) {
        expect_len(tokens, 2)?;
        let line = parse_count(tokens[1])?;
        return Ok(Op::OneQubit { line, matrix: gates::by_name(name).expect("named gate") });
    }
    if gates::TWO_QUBIT_NAMES.contains(&name) {
        expect_len(tokens, 3)?;
        let first = parse_count(tokens[1])?;
        let second = parse_count(tokens[2])?;
        return Ok(Op::TwoQubit { first, second, matrix: gates::by_name(name).expect("named gate") });
    }
    match name {
        "u" => {
            expect_len(tokens, 10)?;
            let line = parse_count(tokens[1])?;
            Ok(Op::OneQubit { line, matrix: matrix_from(2, &tokens[2..])? })
        }
        "u2" => {
            expect_len(tokens, 35)?;
            let first = parse_count(tokens[1])?;
            let second = parse_count(tokens[2])?;
            Ok(Op::TwoQubit { first, second, matrix: matrix_from(4, &tokens[3..])? })
        }
        "measure" | "input" | "cif" => Err(format!("`{name}` cannot be classically controlled")),
        other => Err(format!("unknown instruction `{other}`")),
    }
}

fn matrix_from(dim: usize, tokens: &[&str]) -> Result<ComplexMatrix, String> {
    let f = parse_floats(tokens)?;
    let entries = f.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
    ComplexMatrix::from_vec(dim, dim, entries).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::bell;

    const BELL: &str = "qubits 2\nh 0\ncnot 0 1\nmeasure 0 -> m0\nmeasure 1 -> m1";

    #[test]
    fn parses_bell() {
        let c = parse_circuit(BELL).unwrap();
        assert_eq!(c.n_qubits, 2);
        assert_eq!(c.instructions.len(), 4);
        assert_eq!(c, bell());
    }

    #[test]
    fn header_only() {
        let c = parse_circuit("qubits 1").unwrap();
        assert_eq!(c.n_qubits, 1);
        assert!(c.instructions.is_empty());
    }

    #[test]
    fn emits_empty_and_named() {
        assert_eq!(emit_circuit(&Circuit::new(3)), "qubits 3\n");
        assert_eq!(emit_circuit(&bell()), format!("{BELL}\n"));
    }

    #[test]
    fn comments_flags_and_conditions() {
        let text = "# teleport-ish\nqubits 2 # header\nlinear\nmeasure 0 -> m0\ncif m0 1: x 1\ncif m0 0 : z 1\n";
        let c = parse_circuit(text).unwrap();
        assert!(c.linear);
        assert_eq!(c.instructions[1].condition, Some(Condition { register: "m0".into(), bit: 1 }));
        assert_eq!(c.instructions[2].condition, Some(Condition { register: "m0".into(), bit: 0 }));
        assert_eq!(parse_circuit(&emit_circuit(&c)).unwrap(), c);
    }

    #[test]
    fn raw_gates_roundtrip_exactly() {
        let mut c = Circuit::new(3);
        c.gate1(1, gates::h().scale(C64::new(0.0, 1.0)));
        c.gate2(2, 0, gates::cnot().scale(C64::from_polar(1.0, 0.3)));
        c.instructions.insert(0, Instruction::new(Op::Input { line: 2, amplitudes: [C64::new(0.6, 0.0), C64::new(0.0, 0.8)] }));
        let text = emit_circuit(&c);
        assert!(text.contains("u2 2 0"));
        assert_eq!(parse_circuit(&text).unwrap(), c);
    }

    #[test]
    fn error_cases() {
        let cases: &[(&str, usize)] = &[
            ("h 0", 1),
            ("qubits 2\nfoo 1", 2),
            ("qubits 2\nh", 2),
            ("qubits 2\nmeasure 0 m0", 2),
            ("qubits 2\ncif m0 1 x 0", 2),
            ("qubits 2\nu 0 1 0 0 0 0 0 1", 2),
        ];
        for (text, line) in cases {
            match parse_circuit(text) {
                Err(CircuitError::Syntax { line: l, .. }) => assert_eq!(l, *line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn validation_errors_carry_source_line() {
        let err = parse_circuit("qubits 3\n\nh 0\nh 5").unwrap_err();
        assert!(matches!(err, CircuitError::Invalid { line: 4, .. }), "{err:?}");
        let err = parse_circuit("qubits 1\nu 0 1 0 0 0 0 0 2 0").unwrap_err();
        assert!(matches!(err, CircuitError::Invalid { line: 2, .. }));
        assert!(parse_circuit("qubits 1\nlinear\nu 0 1 0 0 0 0 0 2 0").is_ok());
        let err = parse_circuit("qubits 2\ncif m9 1: x 0").unwrap_err();
        assert!(matches!(err, CircuitError::Invalid { line: 2, .. }));
    }
}
