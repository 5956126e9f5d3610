use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topomode::mesh::DofMap;

/// Smooth pseudo-random field
/// `Σ c_pq cos(pπx/L) cos(qπy/L)` over `0 <= p, q <= modes`, with
/// coefficients uniform in `[-1, 1] / (1 + p² + q²)`, scaled to
/// `max |f| = 1`. The same seed always gives the same field.
pub fn smooth_random_field(dofmap: &DofMap, l: f64, modes: u32, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = Vec::new();
    for p in 0..=modes {
        for q in 0..=modes {
            let c: f64 = rng.random_range(-1.0..1.0);
            coeffs.push((p as f64, q as f64, c / (1.0 + (p * p + q * q) as f64)));
        }
    }
    let mut f = dofmap.interpolate(|x, y| {
        coeffs
            .iter()
            .map(|(p, q, c)| c * (p * PI * x / l).cos() * (q * PI * y / l).cos())
            .sum()
    });
    let max = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max > 0.0 {
        f.iter_mut().for_each(|v| *v /= max);
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use topomode::mesh::generate_graded_square_mesh;

    #[test]
    fn seeded_and_normalised() {
        let mesh = generate_graded_square_mesh(1.0, 3, 2.0).unwrap();
        let d = DofMap::new(&mesh);
        let a = smooth_random_field(&d, 1.0, 3, 5);
        let b = smooth_random_field(&d, 1.0, 3, 5);
        let c = smooth_random_field(&d, 1.0, 3, 6);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let max = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!((max - 1.0).abs() < 1e-15);
    }
}
