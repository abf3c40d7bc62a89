//! Ellipsoid membership, affine images, sampling and the Loewner order.

use destcon::ellipsoid::{loewner_leq, Ellipsoid, RadialMode};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> destcon::error::Result<()> {
    let e = Ellipsoid::new(DVector::from_vec(vec![1.0, 2.0]), DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]))?;
    println!("center {:?}, degenerate: {}", e.center().as_slice(), e.is_degenerate());
    for p in [[1.0, 2.0], [3.0, 2.0], [4.0, 4.0]] {
        println!("contains {p:?}: {}", e.contains(&DVector::from_row_slice(&p), 1e-9)?);
    }

    let rotate = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let image = e.affine_map(&rotate, &DVector::from_vec(vec![10.0, 0.0]))?;
    println!("rotated and shifted: center {:?}, shape {:?}", image.center().as_slice(), image.shape().as_slice());

    // a flat ellipsoid: a segment along the first axis
    let flat = Ellipsoid::centered(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0])))?;
    println!("flat contains (0.5, 0): {}, (0.5, 0.1): {}", flat.contains(&DVector::from_vec(vec![0.5, 0.0]), 1e-9)?, flat.contains(&DVector::from_vec(vec![0.5, 0.1]), 1e-9)?);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for mode in [RadialMode::UniformBall, RadialMode::Boundary] {
        let p = e.sample_point(&mut rng, mode)?;
        println!("{mode} sample {:?}", p.as_slice());
    }

    let small = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0]));
    println!("I ⪯ shape: {}", loewner_leq(&small, e.shape(), 1e-8)?);
    Ok(())
}
