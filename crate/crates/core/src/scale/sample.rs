//! Reproducible random elements. Every (sample, mode) pair owns its own
//! ChaCha stream with a fixed number of draws, so an element restricted to a
//! coarser truncation agrees with the same element drawn at that truncation.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::bracket;
use super::cylinder::{BoundaryElement, CylinderElement};
use super::lattice::{FrequencyLattice, SpectralElement};

/// Draws per tangential mode; bounds the normal basis size of sampled elements.
pub const MAX_NORMAL: usize = 256;

/// Coefficient envelope <xi>^{-a} (1 + n)^{-b}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decay {
    pub tangential: f64,
    pub normal: f64,
}

impl Decay {
    pub fn new(tangential: f64, normal: f64) -> Self {
        Decay { tangential, normal }
    }

    /// Envelope giving finite H^{s} norms for all truncations.
    pub fn for_smoothness(s: f64) -> Self {
        let s = s.max(0.0);
        Decay { tangential: s + 2.0, normal: 2.0 * s + 3.0 }
    }
}

fn stream(seed: u64, sample: u64, slot: i64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((sample << 24) ^ ((slot + (1 << 22)) as u64));
    rng
}

fn normal_pair(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub fn random_cylinder(k: usize, m: usize, seed: u64, sample: u64, decay: Decay) -> CylinderElement {
    assert!(m <= MAX_NORMAL, "normal basis larger than {MAX_NORMAL}");
    let modes = (-(k as i64)..=(k as i64))
        .map(|xi| {
            let mut rng = stream(seed, sample, xi);
            let draws: Vec<Complex64> = (0..MAX_NORMAL).map(|_| normal_pair(&mut rng)).collect();
            let a = bracket(xi as f64).powf(-decay.tangential);
            DVector::from_fn(m, |n, _| draws[n] * a * (1.0 + n as f64).powf(-decay.normal))
        })
        .collect();
    CylinderElement::from_modes(k, m, modes).expect("consistent sizes")
}

pub fn random_boundary(k: usize, seed: u64, sample: u64, tangential_decay: f64) -> BoundaryElement {
    let mut g = BoundaryElement::zeros(k);
    for xi in -(k as i64)..=(k as i64) {
        let mut rng = stream(seed ^ 0x9e37_79b9_7f4a_7c15, sample, xi);
        let a = bracket(xi as f64).powf(-tangential_decay);
        for c in 0..2 {
            g.set(c, xi, normal_pair(&mut rng) * a);
        }
    }
    g
}

pub fn random_spectral(lattice: FrequencyLattice, seed: u64, sample: u64, decay: f64) -> SpectralElement {
    let mut rng = stream(seed ^ 0x5851_f42d_4c95_7f2d, sample, 0);
    let mut u = SpectralElement::zeros(lattice);
    for (c, b) in u.coeffs.iter_mut().zip(lattice.brackets()) {
        *c = normal_pair(&mut rng) * b.powf(-decay);
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_draw_is_restriction_of_fine_draw() {
        let d = Decay::new(1.0, 1.0);
        let fine = random_cylinder(8, 20, 7, 3, d);
        let coarse = random_cylinder(4, 12, 7, 3, d);
        assert_eq!(fine.resized(4, 12), coarse);
        assert_ne!(random_cylinder(4, 12, 7, 4, d), coarse);
    }
}
