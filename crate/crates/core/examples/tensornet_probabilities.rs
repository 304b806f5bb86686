//! Single-line probabilities and a sampled joint outcome from the
//! line-by-line contraction, with the frontier size it needed.

use tnqsim::circuit::{gates, Circuit};
use tnqsim::tensornet::{
    build_doubled_network, contract_with_stats, prepare, prob_outcome, sample_joint, DEFAULT_MAX_FRONTIER,
};

fn main() -> tnqsim::Result<()> {
    let mut c = Circuit::new(4);
    c.h(0).cnot(0, 1).gate1(2, gates::t()).h(2).cnot(2, 3).cz(1, 2);

    for line in 0..4 {
        let p1 = prob_outcome(&c, line, 1, &[], DEFAULT_MAX_FRONTIER)?;
        println!("P(line {line} = 1) = {p1:.6}");
    }

    // the bare doubled network contracts to the squared norm
    let net = build_doubled_network(&prepare(&c)?, &[])?;
    let (v, stats) = contract_with_stats(&net, DEFAULT_MAX_FRONTIER)?;
    println!("<psi|psi> = {v:.6}, peak open indices {}", stats.peak_open);

    let s = sample_joint(&c, &[0, 1, 2, 3], 11, DEFAULT_MAX_FRONTIER)?;
    println!("sample {} with probability {:.6}", s.bits, s.probability);
    Ok(())
}
