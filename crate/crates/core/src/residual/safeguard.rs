use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg;

/// Uniform sample on the sphere of radius `radius` in `R^n`: a normalized
/// Gaussian vector, rescaled.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let nrm = linalg::norm2(&v);
        if nrm > 0.0 && nrm.is_finite() {
            v.iter_mut().for_each(|x| *x = *x / nrm * radius);
            return v;
        }
    }
}
