//! A 2D cluster state, prepared as a circuit on column-major lines and
//! sampled on the contraction backend.

use tnqsim::engine::{cluster_line, generate_family, run, Backend, FamilySpec, RunConfig};
use tnqsim::transform::{d_profile, reduce, Stage};

fn main() -> tnqsim::Result<()> {
    let (m, n) = (4, 3);
    let mut c = generate_family(&FamilySpec::cluster(m, n))?;
    println!("{m}x{n} cluster: D = {}", d_profile(&reduce(&c), Stage::Reduced).d_max);
    c.measure(cluster_line(0, 0, n), "corner");
    c.measure(cluster_line(1, 1, n), "centre");

    let report = run(&c, &RunConfig::new(Backend::Net).shots(2000).seed(5).exact())?;
    println!("exact {:?}", report.exact_probs.as_ref().unwrap());
    println!("counts {:?}, peak open indices {:?}", report.counts(), report.peak_width);
    Ok(())
}
