//! Poisson variates by sequential inversion.

use rand::Rng;

/// Rates above this are split into independent chunks; keeps `exp(-λ)` far
/// from underflow and the inversion loop short.
const CHUNK: f64 = 10.0;

/// Draws one Poisson(`lambda`) variate. `lambda` must be finite and `>= 0`.
pub fn sample<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    debug_assert!(lambda.is_finite() && lambda >= 0.0);
    if lambda <= 0.0 {
        return 0;
    }
    let mut rest = lambda;
    let mut total = 0;
    while rest > CHUNK {
        total += invert(rng, CHUNK);
        rest -= CHUNK;
    }
    total + invert(rng, rest)
}

fn invert<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = libm::exp(-lambda);
    let mut cdf = p;
    // The tail beyond k = 200 has negligible mass for lambda <= CHUNK; the
    // bound only guards against rounding leaving cdf just under u.
    while u > cdf && k < 200 {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
    }
    k
}
