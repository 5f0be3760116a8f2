#![allow(dead_code)]

use nalgebra::DMatrix;
use shadowlab::perturb::{sphere_centers, unit_direction, NoiseSpec, SmoothedModel};
use shadowlab::rng::{rng_from_seed, Rng};
use shadowlab::LpInstance;

pub fn rng(seed: u64) -> Rng {
    rng_from_seed(seed)
}

/// Unit LP with sphere centers and Gaussian noise.
pub fn unit_instance(d: usize, n: usize, sigma: f64, rng: &mut Rng) -> LpInstance {
    let c = unit_direction(d, rng);
    let model = SmoothedModel::unit(sphere_centers(n, d, rng), c, NoiseSpec::gaussian(sigma)).unwrap();
    model.sample_instance(rng).unwrap()
}

/// Smooth LP with `(a_i, b_i)` centers on the unit sphere of `R^{d+1}`.
pub fn smooth_instance(d: usize, n: usize, sigma: f64, rng: &mut Rng) -> LpInstance {
    let c = unit_direction(d, rng);
    let joint = sphere_centers(n, d + 1, rng);
    let model = SmoothedModel::smooth(
        joint.columns(0, d).into_owned(),
        joint.column(d).into_owned(),
        c,
        NoiseSpec::gaussian(sigma),
    )
    .unwrap();
    model.sample_instance(rng).unwrap()
}

/// Smooth LP with `b_i` pushed towards positive values, so most instances
/// are feasible and bounded.
pub fn mostly_bounded_instance(d: usize, n: usize, sigma: f64, rng: &mut Rng) -> LpInstance {
    let c = unit_direction(d, rng);
    let a = sphere_centers(n, d, rng) * 0.8;
    let b = nalgebra::DVector::from_element(n, 0.6);
    let model = SmoothedModel::smooth(a, b, c, NoiseSpec::gaussian(sigma)).unwrap();
    model.sample_instance(rng).unwrap()
}

pub fn permute_rows(m: &DMatrix<f64>, perm: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(perm[i], j)])
}
