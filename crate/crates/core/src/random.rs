//! Seeded random states and operators.
//!
//! Each generator derives its own ChaCha stream from the seed, so equal seeds
//! give identical objects on every platform.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::{check_dimension, HermitianOperator, PureState, C64};

const SALT_HERMITIAN: u64 = 0x9e37_79b9_7f4a_7c15;
const SALT_STATE: u64 = 0xc2b2_ae3d_27d4_eb4f;
const SALT_SELF_INVERSE: u64 = 0x1656_67b1_9e37_79f9;
const SALT_UNITARY: u64 = 0x85eb_ca77_c2b2_ae63;

pub fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt)
}

fn gaussian_c64<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// GUE sample scaled so that the spectrum fills roughly `[-2, 2]`.
pub fn random_hermitian(d: usize, seed: u64) -> Result<HermitianOperator> {
    check_dimension(d)?;
    let mut rng = rng_for(seed, SALT_HERMITIAN);
    Ok(random_hermitian_with(d, &mut rng))
}

pub fn random_hermitian_with<R: Rng>(d: usize, rng: &mut R) -> HermitianOperator {
    let a = DMatrix::from_fn(d, d, |_, _| gaussian_c64(rng));
    let adj = a.adjoint();
    HermitianOperator::symmetrized((a + adj).unscale((2.0 * d as f64).sqrt()))
}

/// Haar-distributed pure state.
pub fn random_state(d: usize, seed: u64) -> Result<PureState> {
    check_dimension(d)?;
    let mut rng = rng_for(seed, SALT_STATE);
    Ok(random_state_with(d, &mut rng))
}

pub fn random_state_with<R: Rng>(d: usize, rng: &mut R) -> PureState {
    loop {
        let v = nalgebra::DVector::from_fn(d, |_, _| gaussian_c64(rng));
        if let Ok(psi) = PureState::from_vector(v) {
            return psi;
        }
    }
}

/// Haar-like unitary from the QR factorization of a complex Gaussian matrix,
/// with the phases of `R`'s diagonal absorbed into `Q`.
pub fn random_unitary(d: usize, seed: u64) -> Result<DMatrix<C64>> {
    check_dimension(d)?;
    let mut rng = rng_for(seed, SALT_UNITARY);
    Ok(random_unitary_with(d, &mut rng))
}

pub fn random_unitary_with<R: Rng>(d: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(d, d, |_, _| gaussian_c64(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for z in q.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    q
}

/// `V D V^dagger` with `D = diag(+-1)` holding at least one of each sign.
pub fn random_self_inverse(d: usize, seed: u64) -> Result<HermitianOperator> {
    check_dimension(d)?;
    let mut rng = rng_for(seed, SALT_SELF_INVERSE);
    Ok(random_self_inverse_with(d, &mut rng))
}

pub fn random_self_inverse_with<R: Rng>(d: usize, rng: &mut R) -> HermitianOperator {
    let positives = rng.random_range(1..d);
    let v = random_unitary_with(d, rng);
    let mut scaled = v.clone();
    for j in positives..d {
        for z in scaled.column_mut(j).iter_mut() {
            *z = -*z;
        }
    }
    HermitianOperator::symmetrized(scaled * v.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_deviation, unitarity_deviation};

    #[test]
    fn self_inverse_squares_to_identity() {
        for d in [2, 3, 4, 8] {
            for seed in 0..20 {
                let h = random_self_inverse(d, seed).unwrap();
                assert!(h.self_inverse_deviation() < 1e-10, "d={d} seed={seed}");
                let spec = h.spectral().unwrap();
                assert!(spec.min_eigenvalue() < -0.5 && spec.max_eigenvalue() > 0.5);
            }
        }
    }

    #[test]
    fn states_are_normalized() {
        for seed in 0..50 {
            assert!((random_state(4, seed).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hermitian_is_hermitian() {
        let h = random_hermitian(3, 11).unwrap();
        assert_eq!(hermitian_deviation(h.matrix()), 0.0);
    }

    #[test]
    fn unitary_is_unitary() {
        assert!(unitarity_deviation(&random_unitary(8, 5).unwrap()) < 1e-13);
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(random_hermitian(4, 7).unwrap(), random_hermitian(4, 7).unwrap());
        assert_eq!(random_state(4, 7).unwrap(), random_state(4, 7).unwrap());
        assert_ne!(random_state(4, 7).unwrap(), random_state(4, 8).unwrap());
    }
}
