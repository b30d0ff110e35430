//! I.i.d. Rayleigh channels and the frequency-domain transmission models.
//!
//! Noise is always drawn as unit-variance samples and then scaled by
//! sqrt(N0), so runs at different SNRs with the same seed see the same noise
//! directions.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ComplexMatrix, ComplexVector, C64};

/// One circularly-symmetric complex Gaussian sample with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// B x U matrix of i.i.d. CN(0, 1) entries.
pub fn rayleigh_channel<R: Rng + ?Sized>(b: usize, u: usize, rng: &mut R) -> ComplexMatrix {
    assert!(b >= u && u >= 1, "need B >= U >= 1");
    ComplexMatrix::from_fn(b, u, |_, _| complex_gaussian(rng))
}

/// An uplink channel with its noise level; the downlink channel follows by
/// reciprocity.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h_u: ComplexMatrix,
    pub n0: f64,
}

impl ChannelRealization {
    pub fn rayleigh<R: Rng + ?Sized>(b: usize, u: usize, n0: f64, rng: &mut R) -> Self {
        ChannelRealization { h_u: rayleigh_channel(b, u, rng), n0 }
    }

    pub fn h_d(&self) -> ComplexMatrix {
        self.h_u.hermitian_of()
    }
}

fn transmit<R: Rng + ?Sized>(h: &ComplexMatrix, x: &ComplexVector, n0: f64, rng: &mut R) -> ComplexVector {
    assert!(n0 >= 0.0, "noise variance must be nonnegative");
    let mut y = h.matvec(x).expect("transmit vector length must match the channel");
    let sigma = n0.sqrt();
    for v in y.as_mut_slice() {
        *v += complex_gaussian(rng) * sigma;
    }
    y
}

/// y = H_u x + n with n ~ CN(0, N0 I).
pub fn transmit_uplink<R: Rng + ?Sized>(h_u: &ComplexMatrix, x: &ComplexVector, n0: f64, rng: &mut R) -> ComplexVector {
    transmit(h_u, x, n0, rng)
}

/// y = H_d s + n with n ~ CN(0, N0 I).
pub fn transmit_downlink<R: Rng + ?Sized>(h_d: &ComplexMatrix, s: &ComplexVector, n0: f64, rng: &mut R) -> ComplexVector {
    transmit(h_d, s, n0, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_power_and_uncorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let (mut p, mut cross) = (0.0, C64::default());
        for _ in 0..n {
            let h = rayleigh_channel(2, 1, &mut rng);
            p += h[(0, 0)].norm_sqr();
            cross += h[(0, 0)] * h[(1, 0)].conj();
        }
        assert!((p / n as f64 - 1.0).abs() < 0.02);
        assert!((cross / n as f64).norm() < 0.02);
    }

    #[test]
    fn replay_is_bit_identical() {
        let a = rayleigh_channel(4, 2, &mut ChaCha8Rng::seed_from_u64(9));
        let b = rayleigh_channel(4, 2, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn noiseless_and_noise_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = ComplexMatrix::identity(3);
        let e1 = ComplexVector::from(vec![C64::new(1.0, 0.0), C64::default(), C64::default()]);
        assert_eq!(transmit_uplink(&h, &e1, 0.0, &mut rng), e1);

        let n0 = 0.3;
        let h = rayleigh_channel(1, 1, &mut rng);
        let zero = ComplexVector::zeros(1);
        let trials = 100_000;
        let var: f64 =
            (0..trials).map(|_| transmit_downlink(&h, &zero, n0, &mut rng)[0].norm_sqr()).sum::<f64>() / trials as f64;
        assert!((var / n0 - 1.0).abs() < 0.03);
    }

    #[test]
    fn reciprocity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = ChannelRealization::rayleigh(6, 3, 0.1, &mut rng);
        assert_eq!(c.h_d().hermitian_of(), c.h_u);
    }
}
