//! Occupation configurations on the path `0..N`.
//!
//! Site 0 is the most significant bit of the configuration index, so
//! `(0,1,0)` has index 2, matching the tensor order `|eta(0)>|eta(1)>...`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    bits: Vec<u8>,
}

impl Configuration {
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidInput(
                "configuration needs at least one site".into(),
            ));
        }
        if bits.len() > 63 {
            return Err(Error::InvalidInput(format!(
                "{} sites do not fit a u64 index",
                bits.len()
            )));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidInput(format!(
                "occupation must be 0 or 1, got {b}"
            )));
        }
        Ok(Self {
            bits: bits.to_vec(),
        })
    }

    pub fn from_index(n_sites: usize, index: u64) -> Result<Self> {
        if n_sites == 0 || n_sites > 63 {
            return Err(Error::InvalidInput(format!(
                "unsupported site count {n_sites}"
            )));
        }
        if index >> n_sites != 0 {
            return Err(Error::InvalidInput(format!(
                "index {index} out of range for {n_sites} sites"
            )));
        }
        let bits = (0..n_sites)
            .map(|x| ((index >> (n_sites - 1 - x)) & 1) as u8)
            .collect();
        Ok(Self { bits })
    }

    pub fn n_sites(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn occupied(&self, site: usize) -> bool {
        self.bits[site] == 1
    }

    pub fn index(&self) -> u64 {
        self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.bits.iter().map(|b| b.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ket_example_index() {
        assert_eq!(Configuration::from_bits(&[0, 1, 0]).unwrap().index(), 2);
        assert_eq!(Configuration::from_bits(&[0, 0, 1]).unwrap().index(), 1);
        assert_eq!(Configuration::from_index(3, 6).unwrap().bits(), &[1, 1, 0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Configuration::from_bits(&[]).is_err());
        assert!(Configuration::from_bits(&[0, 2]).is_err());
        assert!(Configuration::from_index(3, 8).is_err());
    }

    proptest! {
        #[test]
        fn index_round_trip(n in 1usize..20, raw in any::<u64>()) {
            let index = raw & ((1u64 << n) - 1);
            let c = Configuration::from_index(n, index).unwrap();
            prop_assert!(c.index() < 1u64 << n);
            prop_assert_eq!(c.index(), index);
            prop_assert_eq!(Configuration::from_bits(c.bits()).unwrap(), c);
        }
    }
}
