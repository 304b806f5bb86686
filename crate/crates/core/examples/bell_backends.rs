//! Bell pair on all three backends with the same seed: identical samples.

use tnqsim::circuit::bell;
use tnqsim::engine::{run, Backend, RunConfig};

fn main() -> tnqsim::Result<()> {
    let c = bell();
    for backend in [Backend::Mps, Backend::Net, Backend::Dense] {
        let report = run(&c, &RunConfig::new(backend).shots(1000).seed(7).exact())?;
        println!("{backend:?}: counts {:?} exact {:?}", report.counts(), report.exact_probs.unwrap());
    }
    Ok(())
}
