//! Matrix-vector products read from a programmed array in one step.

use crosspoint::circuit::{open_loop_mvm, OpenLoopArray};
use crosspoint::device::{ConductanceLevelSet, DeviceModel, SigmaMode};
use crosspoint::numerics::{DenseMatrix, DenseVector};
use rand::SeedableRng;

fn main() -> crosspoint::Result<()> {
    let w = DenseMatrix::from_rows(&[[0.5, -1.0], [2.0, 0.25], [-0.75, 1.5]])?;
    let x: DenseVector = vec![0.2, 0.9, 0.4].into();
    println!("exact     {:?}", w.tmatvec(&x)?.as_slice());
    println!("ideal     {:?}", open_loop_mvm(&w, &x)?.as_slice());

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for (name, device) in [
        ("8-bit", DeviceModel { quantize: true, ..DeviceModel::ideal(ConductanceLevelSet::eight_bit(1e-3)) }),
        ("32-level", DeviceModel::default()),
        ("32-level dg/2", DeviceModel { sigma_mode: SigmaMode::HalfDeltaG, ..DeviceModel::default() }),
    ] {
        let arr = OpenLoopArray::program(&w, &device, &mut rng)?;
        println!("{name:<9} {:?}", arr.apply(&x)?.as_slice());
    }
    Ok(())
}
