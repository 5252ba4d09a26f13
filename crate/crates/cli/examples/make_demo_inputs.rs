//! Writes demo inputs for the CLI into a directory (default `.`):
//! `demo.tdpw` with seeded random weights for the canonical network, and
//! `demo.raw`, 12.8 s of synthetic signal with two pulses at 1 ksps.
//!
//! ```text
//! cargo run -p tdp-cli --example make_demo_inputs -- /tmp/demo 7
//! ```

use std::fs;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tdp_core::codetect::synth::{synth_signal, PulseSpec};
use tdp_core::net::canonical_network;
use tdp_core::weights::{save_weights, WeightStore};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let dir = PathBuf::from(args.get(1).map(String::as_str).unwrap_or("."));
    let seed: u64 = args
        .get(2)
        .map(|s| s.parse().expect("seed must be an integer"))
        .unwrap_or(7);
    fs::create_dir_all(&dir).expect("create output directory");

    let net = canonical_network();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let store = WeightStore::random(&net, &mut rng);
    let weights_path = dir.join("demo.tdpw");
    save_weights(&net, &store, &weights_path).expect("write weights");

    let pulses = vec![PulseSpec::at(3.0, 1.0), PulseSpec::at(8.5, 0.6)];
    let signal = synth_signal(12.8, 1000.0, &pulses, 0.02, &mut rng);
    let bytes: Vec<u8> = signal.iter().flat_map(|v| v.to_le_bytes()).collect();
    let raw_path = dir.join("demo.raw");
    fs::write(&raw_path, bytes).expect("write raw signal");

    println!(
        "wrote {} and {} (seed {seed})",
        weights_path.display(),
        raw_path.display()
    );
}
