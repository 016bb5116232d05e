//! 196-784-10 network: random first layer, second layer from ten circuit
//! solves, inference through open-loop arrays.
//!
//! Pass a test-set size to shorten the run, e.g. `-- 1000`.

use std::time::Instant;

use crosspoint::circuit::AmplifierModel;
use crosspoint::data::{bundled_mnist_test, bundled_mnist_train, load_mnist, load_mnist_limit};
use crosspoint::device::{ConductanceLevelSet, DeviceModel};
use crosspoint::learn::{train_two_layer, Backend, CircuitBackend, TwoLayerConfig};
use crosspoint::mapping::ScalingConfig;
use rand::SeedableRng;

fn main() -> crosspoint::Result<()> {
    let limit = std::env::args().nth(1).and_then(|s| s.parse().ok());
    let (ti, tl) = bundled_mnist_train();
    let (si, sl) = bundled_mnist_test();
    let train = load_mnist(&ti, &tl)?;
    let test = load_mnist_limit(&si, &sl, limit)?;
    println!("{} training digits, {} test digits", train.len(), test.len());

    let cfg = TwoLayerConfig::default();
    let device = DeviceModel {
        levels: ConductanceLevelSet::eight_bit(100e-6),
        ..DeviceModel::default()
    };
    let backend = CircuitBackend {
        device,
        scaling: ScalingConfig::fill_columns(10e-6, 10e-6),
        nfa: AmplifierModel::unclamped(),
        pfa: AmplifierModel::unclamped(),
        ..CircuitBackend::default()
    };

    let t = Instant::now();
    let oracle = train_two_layer(&train.images, &train.labels, &cfg, &Backend::Oracle)?;
    println!("oracle  trained in {:.1?}, accuracy {:.2}%", t.elapsed(), 100.0 * oracle.accuracy(&test.images, &test.labels)?);
    let t = Instant::now();
    let circuit = train_two_layer(&train.images, &train.labels, &cfg, &Backend::Circuit(backend))?;
    println!(
        "circuit trained in {:.1?} ({} solves), accuracy {:.2}%",
        t.elapsed(),
        circuit.solves,
        100.0 * circuit.accuracy(&test.images, &test.labels)?
    );
    for k in 0..10 {
        println!("  digit {k}: LSE oracle {:.4}, circuit {:.4}", oracle.lse[k], circuit.lse[k]);
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let arrays = circuit.program_arrays(&device, &mut rng)?;
    println!("open-loop 8-bit inference accuracy {:.2}%", 100.0 * arrays.accuracy(&test.images, &test.labels)?);
    Ok(())
}
