//! Watch per-cut Schmidt ranks while building a GHZ state and then
//! measuring one qubit.

use tnqsim::circuit::gates;
use tnqsim::mps::OutcomeSource;
use tnqsim::MpsState;

fn main() -> tnqsim::Result<()> {
    let n = 6;
    let mut s = MpsState::zero_state(n);
    s.apply_1q(0, &gates::h())?;
    println!("after h 0:       {:?}", s.bond_dims());
    for i in 0..n - 1 {
        s.apply_2q_adjacent(i, &gates::cnot())?;
        println!("after cnot {i} {}: {:?}", i + 1, s.bond_dims());
    }
    let weights = s.bond_weights(2);
    println!("cut 2 Schmidt weights {weights:?}");

    // a long-range gate is routed through swaps
    s.apply_2q(0, 5, &gates::cz())?;
    println!("after cz 0 5:    {:?}", s.bond_dims());

    let (bit, (p0, p1)) = s.measure_in_place(3, OutcomeSource::Draw(0.3))?;
    println!("measured line 3 -> {bit} (p0 {p0:.3}, p1 {p1:.3}); ranks now {:?}", s.bond_dims());
    Ok(())
}
