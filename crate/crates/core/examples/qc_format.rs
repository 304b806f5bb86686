//! Parse `.qc` text (including a conditioned gate), print it back and show a
//! parse error.

use tnqsim::{emit_circuit, parse_circuit};

fn main() {
    let text = "\
qubits 2
input 0 0.6 0 0.8 0
u2 0 1 1 0 0 0 0 0 0 0  0 0 1 0 0 0 0 0  0 0 0 0 0 0 1 0  0 0 0 0 1 0 0 0
measure 1 -> flag
cif flag 1: x 0
measure 0 -> out
";
    let c = parse_circuit(text).expect("valid circuit");
    println!("{} instructions, registers {:?}, adaptive {}", c.instructions.len(), c.registers(), c.is_adaptive());
    print!("{}", emit_circuit(&c));

    match parse_circuit("qubits 2\ncnot 0 2\n") {
        Ok(_) => unreachable!(),
        Err(e) => println!("error: {e}"),
    }
}
