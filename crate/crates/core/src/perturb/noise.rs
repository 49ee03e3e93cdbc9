//! Bernoulli noise injectors.
//!
//! Every injector draws exactly one uniform `u ∈ [0, 1)` per tensor element,
//! in storage order (channel-major), and fires where `u < p`. Noise masks
//! are therefore reproducible from `(seed, stream, element index)`.

use rand::Rng;

use crate::data::SpikeTensor;

fn map_elements<R: Rng + ?Sized>(
    x: &SpikeTensor,
    rng: &mut R,
    mut f: impl FnMut(f64, f64) -> f64,
) -> SpikeTensor {
    let mut out = x.clone();
    for v in out.values_mut() {
        let u: f64 = rng.random();
        *v = f(*v, u).max(0.0);
    }
    out
}

/// `x + Bernoulli(p)` everywhere, clamped below at 0.
pub fn additive_noise<R: Rng + ?Sized>(x: &SpikeTensor, p: f64, rng: &mut R) -> SpikeTensor {
    map_elements(x, rng, |v, u| if u < p { v + 1.0 } else { v })
}

/// `x − Bernoulli(p)` where `x > 0`; zero elements are left alone.
pub fn subtractive_noise<R: Rng + ?Sized>(x: &SpikeTensor, p: f64, rng: &mut R) -> SpikeTensor {
    map_elements(x, rng, |v, u| if v > 0.0 && u < p { v - 1.0 } else { v })
}

/// Subtract `Bernoulli(p·factor)` from nonzero elements and add
/// `Bernoulli(p)` to zero elements. `p·factor` is capped at 1.
pub fn mixed_noise<R: Rng + ?Sized>(x: &SpikeTensor, p: f64, factor: f64, rng: &mut R) -> SpikeTensor {
    let p_sub = p * factor;
    if p_sub > 1.0 {
        log::warn!("mixed noise: p·factor = {p_sub} capped at 1");
    }
    let p_sub = p_sub.min(1.0);
    map_elements(x, rng, |v, u| {
        if v > 0.0 {
            if u < p_sub {
                v - 1.0
            } else {
                v
            }
        } else if u < p {
            v + 1.0
        } else {
            v
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn binary(ch: usize, t: usize, seed: u64) -> SpikeTensor {
        let mut rng = seeded(seed);
        let vals = (0..ch * t).map(|_| if rng.random::<f64>() < 0.3 { 1.0 } else { 0.0 }).collect();
        SpikeTensor::from_vec(ch, t, vals).unwrap()
    }

    #[test]
    fn zero_probability_is_identity() {
        let x = binary(5, 20, 1);
        let mut rng = seeded(2);
        assert_eq!(additive_noise(&x, 0.0, &mut rng), x);
        assert_eq!(subtractive_noise(&x, 0.0, &mut rng), x);
        assert_eq!(mixed_noise(&x, 0.0, 10.0, &mut rng), x);
    }

    #[test]
    fn certain_noise() {
        let x = binary(4, 10, 3);
        let mut rng = seeded(4);
        let plus = additive_noise(&x, 1.0, &mut rng);
        for (a, b) in plus.values().iter().zip(x.values()) {
            assert_eq!(*a, b + 1.0);
        }
        let gone = subtractive_noise(&x, 1.0, &mut rng);
        assert_eq!(gone.total(), 0.0);
        let z = SpikeTensor::zeros(3, 3);
        assert_eq!(subtractive_noise(&z, 0.7, &mut rng), z);
    }

    #[test]
    fn mixed_on_zero_tensor_matches_additive() {
        let z = SpikeTensor::zeros(6, 30);
        let a = additive_noise(&z, 0.2, &mut seeded(8));
        let m = mixed_noise(&z, 0.2, 10.0, &mut seeded(8));
        assert_eq!(a, m);
    }

    #[test]
    fn outputs_are_nonnegative() {
        let x = SpikeTensor::from_vec(1, 4, vec![0.0, 0.5, 1.0, 3.0]).unwrap();
        let mut rng = seeded(5);
        for _ in 0..20 {
            for y in [subtractive_noise(&x, 0.9, &mut rng), mixed_noise(&x, 0.2, 10.0, &mut rng)] {
                assert!(y.values().iter().all(|&v| v >= 0.0));
            }
        }
    }
}
