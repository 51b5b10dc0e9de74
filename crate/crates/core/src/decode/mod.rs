//! Inference procedures.

pub mod bp;
pub mod dd;
pub mod exact;
pub mod sparc;
pub mod spex;

pub use bp::{bp_decode, BpOutput, PriorMode};
pub use dd::{dd_decode, dd_decode_restricted};
pub use exact::{exhaustive_posterior, PosteriorTable};
pub use sparc::{expected_scores, plausible_set, sparc_decode, sparc_weights, SparcConfig};
pub use spex::{spex_decode, untainted_counts, SpexOutput};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Zero,
    One,
    Undetermined,
}

impl From<bool> for Label {
    fn from(b: bool) -> Self {
        if b {
            Label::One
        } else {
            Label::Zero
        }
    }
}

/// A per-individual diagnosis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Estimate {
    pub labels: Vec<Label>,
}

impl Estimate {
    pub fn from_bits(bits: &[bool]) -> Self {
        Self { labels: bits.iter().map(|&b| b.into()).collect() }
    }

    pub fn is_complete(&self) -> bool {
        !self.labels.contains(&Label::Undetermined)
    }

    pub fn to_bits(&self) -> Result<Vec<bool>> {
        self.labels
            .iter()
            .map(|l| match l {
                Label::Zero => Ok(false),
                Label::One => Ok(true),
                Label::Undetermined => Err(Error::Domain("estimate has undetermined labels".into())),
            })
            .collect()
    }
}

/// Number of coordinates where `tau` and `sigma` differ.
pub fn hamming_error(tau: &[bool], sigma: &[bool]) -> Result<usize> {
    if tau.len() != sigma.len() {
        return Err(Error::Domain(format!("length mismatch {} vs {}", tau.len(), sigma.len())));
    }
    Ok(tau.iter().zip(sigma).filter(|(a, b)| a != b).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamming_examples() {
        let s = [true, false, false, true, true];
        assert_eq!(hamming_error(&s, &s).unwrap(), 0);
        let c: Vec<bool> = s.iter().map(|b| !b).collect();
        assert_eq!(hamming_error(&c, &s).unwrap(), 5);
        assert!(hamming_error(&s[..3], &s).is_err());
        // popcount of the xor of packed words
        let a: u16 = 0b10_1100_1110;
        let b: u16 = 0b01_1010_0111;
        let bits = |w: u16| (0..10).map(|i| w >> i & 1 == 1).collect::<Vec<_>>();
        assert_eq!(hamming_error(&bits(a), &bits(b)).unwrap(), (a ^ b).count_ones() as usize);
    }

    #[test]
    fn estimate_bits() {
        let e = Estimate { labels: vec![Label::One, Label::Undetermined] };
        assert!(!e.is_complete());
        assert!(e.to_bits().is_err());
        let e = Estimate::from_bits(&[true, false]);
        assert_eq!(e.to_bits().unwrap(), vec![true, false]);
    }
}
