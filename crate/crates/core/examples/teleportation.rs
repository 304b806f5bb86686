//! Adaptive teleportation: the output qubit reproduces the input amplitudes
//! whatever the two mid-circuit outcomes were.

use num_complex::Complex64 as C64;
use tnqsim::circuit::teleportation;
use tnqsim::tensornet::{run_adaptive, DEFAULT_MAX_FRONTIER};

fn main() -> tnqsim::Result<()> {
    let (alpha, beta) = (C64::new(0.6, 0.0), C64::new(0.0, 0.8));
    let c = teleportation(alpha, beta);
    for seed in 0..6 {
        let t = run_adaptive(&c, seed, DEFAULT_MAX_FRONTIER)?;
        let out = &t.outcomes[2];
        println!(
            "seed {seed}: m0 m1 = {}{}  P(out=0) = {:.6}  P(out=1) = {:.6}",
            t.outcomes[0].outcome, t.outcomes[1].outcome, out.p0, out.p1
        );
    }
    println!("expected {:.6} / {:.6}", alpha.norm_sqr(), beta.norm_sqr());
    Ok(())
}
