//! Forward corruption: masking for sequences, variance-exploding Gaussian
//! noise for coordinates.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::schedule::MaskSchedule;
use crate::state::{ContinuousState, SequenceState};

/// Mask each clean token independently with probability `1 - alpha(r)`.
pub fn corrupt_discrete<R: Rng + ?Sized>(
    x0: &SequenceState,
    r: f64,
    schedule: &MaskSchedule,
    rng: &mut R,
) -> Result<SequenceState> {
    if x0.masked_count() > 0 {
        return Err(Error::Domain("corrupt_discrete expects a clean sequence".into()));
    }
    let keep = schedule.alpha(r)?;
    Ok(mask_with_keep(x0, keep, rng))
}

/// Mask every currently unmasked token with probability `1 - keep`.
/// Existing masks stay masked.
pub fn mask_with_keep<R: Rng + ?Sized>(x: &SequenceState, keep: f64, rng: &mut R) -> SequenceState {
    let mask = x.vocab.mask_id();
    let tokens = x
        .tokens
        .iter()
        .map(|&tok| {
            if tok == mask || rng.random::<f64>() >= keep {
                mask
            } else {
                tok
            }
        })
        .collect();
    SequenceState {
        tokens,
        vocab: x.vocab,
    }
}

/// `x0 + t * eps` with independent standard normal `eps` per coordinate.
pub fn corrupt_continuous<R: Rng + ?Sized>(
    x0: &ContinuousState,
    t: f64,
    rng: &mut R,
) -> Result<ContinuousState> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("noise level must be non-negative, got {t}")));
    }
    let mut out = x0.clone();
    add_noise(&mut out.coords, t, rng);
    Ok(out)
}

pub(crate) fn add_noise<R: Rng + ?Sized>(coords: &mut [f64], scale: f64, rng: &mut R) {
    if scale == 0.0 {
        return;
    }
    for c in coords {
        let e: f64 = rng.sample(StandardNormal);
        *c += scale * e;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::state::Vocabulary;

    fn clean(len: usize) -> SequenceState {
        let v = Vocabulary::new(20).unwrap();
        SequenceState::new((0..len).map(|i| i % 20).collect(), v).unwrap()
    }

    #[test]
    fn discrete_endpoints() {
        let x0 = clean(50);
        let mut rng = stream(1, 0);
        let s = MaskSchedule::linear();
        assert_eq!(corrupt_discrete(&x0, 1.0, &s, &mut rng).unwrap().masked_count(), 50);
        assert_eq!(corrupt_discrete(&x0, 0.0, &s, &mut rng).unwrap(), x0);
    }

    #[test]
    fn discrete_mask_fraction_concentrates() {
        let x0 = clean(10_000);
        let mut rng = stream(2, 0);
        let x = corrupt_discrete(&x0, 0.3, &MaskSchedule::linear(), &mut rng).unwrap();
        assert!((x.mask_fraction() - 0.30).abs() <= 0.02);
        for (a, b) in x.tokens.iter().zip(&x0.tokens) {
            assert!(*a == 20 || a == b);
        }
    }

    #[test]
    fn existing_masks_are_kept() {
        let mut x = clean(100);
        x.tokens[3] = 20;
        let mut rng = stream(3, 0);
        let y = mask_with_keep(&x, 1.0, &mut rng);
        assert_eq!(y, x);
    }

    #[test]
    fn continuous_moments() {
        let mut rng = stream(4, 0);
        let zero = ContinuousState::toy(vec![0.0; 100_000]);
        let x = corrupt_continuous(&zero, 2.0, &mut rng).unwrap();
        let var = x.coords.iter().map(|c| c * c).sum::<f64>() / 1e5;
        assert!((var - 4.0).abs() <= 0.1);

        let five = ContinuousState::toy(vec![5.0; 100_000]);
        let y = corrupt_continuous(&five, 1.0, &mut rng).unwrap();
        let mean = y.coords.iter().sum::<f64>() / 1e5;
        assert!((mean - 5.0).abs() <= 0.02);

        assert_eq!(corrupt_continuous(&five, 0.0, &mut rng).unwrap(), five);
    }

    #[test]
    fn continuous_is_seeded() {
        let x0 = ContinuousState::toy(vec![1.0; 8]);
        let a = corrupt_continuous(&x0, 0.7, &mut stream(9, 1)).unwrap();
        let b = corrupt_continuous(&x0, 0.7, &mut stream(9, 1)).unwrap();
        assert_eq!(a, b);
    }
}
