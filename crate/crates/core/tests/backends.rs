use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use tnqsim::circuit::{gates, Circuit};
use tnqsim::dense;
use tnqsim::engine::{run, Backend, RunConfig};
use tnqsim::{emit_circuit, parse_circuit, MpsState};

/// Nearest-neighbour circuit with mid-circuit measurements and conditioned gates.
fn adaptive_circuit(seed: u64, n: usize, count: usize) -> Circuit {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut c = Circuit::new(n);
    let mut regs = Vec::new();
    for k in 0..count {
        match rng.random_range(0..6) {
            0 if !regs.is_empty() => {
                let r: &String = &regs[rng.random_range(0..regs.len())];
                let op = tnqsim::Op::OneQubit { line: rng.random_range(0..n), matrix: gates::x() };
                c.push_conditioned(op, r.clone(), rng.random_range(0..2));
            }
            1 => {
                let reg = format!("r{k}");
                c.measure(rng.random_range(0..n), reg.clone());
                regs.push(reg);
            }
            2 | 3 if n > 1 => {
                let a = rng.random_range(0..n - 1);
                c.gate2(a, a + 1, gates::random_unitary(4, &mut rng));
            }
            _ => {
                c.gate1(rng.random_range(0..n), gates::random_unitary(2, &mut rng));
            }
        }
    }
    c.measure_all();
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn adaptive_exact_probs_agree(seed in any::<u64>(), n in 1usize..5, count in 0usize..10) {
        let c = adaptive_circuit(seed, n, count);
        let dense = run(&c, &RunConfig::new(Backend::Dense).exact()).unwrap().exact_probs.unwrap();
        for b in [Backend::Mps, Backend::Net] {
            let got = run(&c, &RunConfig::new(b).exact()).unwrap().exact_probs.unwrap();
            for (k, p) in &dense {
                let q = got.get(k).copied().unwrap_or(0.0);
                prop_assert!((p - q).abs() < 1e-9, "{b:?} {k}: {q} vs {p}");
            }
            let total: f64 = got.values().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn seeded_samples_match(seed in any::<u64>(), n in 1usize..5, count in 0usize..10) {
        let c = adaptive_circuit(seed, n, count);
        let reports: Vec<_> = [Backend::Mps, Backend::Net, Backend::Dense]
            .iter()
            .map(|&b| run(&c, &RunConfig::new(b).shots(20).seed(seed ^ 1)).unwrap().samples)
            .collect();
        prop_assert_eq!(&reports[0], &reports[1]);
        prop_assert_eq!(&reports[1], &reports[2]);
    }

    #[test]
    fn text_roundtrip(seed in any::<u64>(), n in 1usize..5, count in 0usize..10) {
        let c = adaptive_circuit(seed, n, count);
        prop_assert_eq!(parse_circuit(&emit_circuit(&c)).unwrap(), c);
    }

    #[test]
    fn mps_matches_statevector(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut c = Circuit::new(n);
        for _ in 0..3 * n {
            let a = rng.random_range(0..n);
            let b = (a + rng.random_range(1..n)) % n;
            c.gate2(a, b, gates::random_unitary(4, &mut rng));
        }
        let want = dense::simulate(&c, 10).unwrap().to_vector();
        let mut s = MpsState::zero_state(n);
        for ins in &c.instructions {
            if let tnqsim::Op::TwoQubit { first, second, matrix } = &ins.op {
                s.apply_2q(*first, *second, matrix).unwrap();
            }
        }
        prop_assert!(s.to_statevector().unwrap().distance_up_to_phase(&want) < 1e-10);
    }
}
