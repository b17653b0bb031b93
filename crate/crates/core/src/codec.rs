//! Binary data blocks to quaternary base sequences and back.
//!
//! Each byte becomes four bases, most-significant bit pair first, using the
//! fixed mapping A=00, C=01, G=10, T=11. There is no error-correction layer;
//! the decoder reports raw symbol error rates instead.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Base {
    A,
    C,
    G,
    T,
}

impl Base {
    pub const ALL: [Base; 4] = [Base::A, Base::C, Base::G, Base::T];

    /// Two-bit value of the base.
    pub fn bits(self) -> u8 {
        match self {
            Base::A => 0b00,
            Base::C => 0b01,
            Base::G => 0b10,
            Base::T => 0b11,
        }
    }

    /// Inverse of [`Base::bits`]; only the low two bits are read.
    pub fn from_bits(bits: u8) -> Base {
        match bits & 0b11 {
            0b00 => Base::A,
            0b01 => Base::C,
            0b10 => Base::G,
            _ => Base::T,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Base::A => 'A',
            Base::C => 'C',
            Base::G => 'G',
            Base::T => 'T',
        }
    }

    pub fn from_symbol(c: char) -> Result<Base> {
        match c.to_ascii_uppercase() {
            'A' => Ok(Base::A),
            'C' => Ok(Base::C),
            'G' => Ok(Base::G),
            'T' => Ok(Base::T),
            other => Err(Error::InvalidBase(other)),
        }
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Ordered bases in 5'→3' synthesis order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BaseSequence(Vec<Base>);

impl BaseSequence {
    pub fn new(bases: Vec<Base>) -> Self {
        BaseSequence(bases)
    }

    pub fn homopolymer(base: Base, len: usize) -> Self {
        BaseSequence(vec![base; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bases(&self) -> &[Base] {
        &self.0
    }

    pub fn push(&mut self, base: Base) {
        self.0.push(base);
    }

    pub fn extend_from(&mut self, other: &BaseSequence) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn iter(&self) -> impl Iterator<Item = Base> + '_ {
        self.0.iter().copied()
    }

    pub fn into_bases(self) -> Vec<Base> {
        self.0
    }
}

impl From<Vec<Base>> for BaseSequence {
    fn from(v: Vec<Base>) -> Self {
        BaseSequence(v)
    }
}

impl FromIterator<Base> for BaseSequence {
    fn from_iter<I: IntoIterator<Item = Base>>(iter: I) -> Self {
        BaseSequence(iter.into_iter().collect())
    }
}

impl fmt::Display for BaseSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{}", b.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for BaseSequence {
    type Err = Error;

    /// Parses a run of base letters; ASCII whitespace is ignored.
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_ascii_whitespace())
            .map(Base::from_symbol)
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataBlock {
    pub block_id: u64,
    pub payload: Vec<u8>,
}

impl DataBlock {
    pub fn new(block_id: u64, payload: Vec<u8>) -> Self {
        DataBlock { block_id, payload }
    }
}

pub fn encode_block(block: &DataBlock) -> BaseSequence {
    encode_bytes(&block.payload)
}

pub fn encode_bytes(bytes: &[u8]) -> BaseSequence {
    let mut out = Vec::with_capacity(bytes.len() * 4);
    for &byte in bytes {
        for shift in [6u8, 4, 2, 0] {
            out.push(Base::from_bits(byte >> shift));
        }
    }
    BaseSequence(out)
}

/// Decodes a sequence back to a block. The block id is not carried by the
/// sequence and comes back as 0.
pub fn decode_block(seq: &BaseSequence) -> Result<DataBlock> {
    if !seq.len().is_multiple_of(4) {
        return Err(Error::MalformedSequence { len: seq.len() });
    }
    let payload = seq
        .bases()
        .chunks_exact(4)
        .map(|q| q.iter().fold(0u8, |acc, b| (acc << 2) | b.bits()))
        .collect();
    Ok(DataBlock { block_id: 0, payload })
}

/// Information capacity of a strand at two bits per base.
pub fn block_bit_capacity(base_count: u64) -> u64 {
    2 * base_count
}

/// Renders a sequence file: one letter per base, newline-terminated.
pub fn format_sequence_file(seq: &BaseSequence) -> String {
    let mut s = seq.to_string();
    s.push('\n');
    s
}

/// Parses a sequence file holding one sequence per non-empty line.
pub fn parse_sequence_lines(text: &str) -> Result<Vec<BaseSequence>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::parse)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_payload_encodes_to_empty_sequence() {
        assert!(encode_bytes(&[]).is_empty());
        assert_eq!(decode_block(&BaseSequence::default()).unwrap().payload, Vec::<u8>::new());
    }

    #[test]
    fn byte_0x1b_is_acgt() {
        assert_eq!(encode_bytes(&[0x1B]).to_string(), "ACGT");
        let seq: BaseSequence = "ACGT".parse().unwrap();
        assert_eq!(decode_block(&seq).unwrap().payload, vec![0x1B]);
    }

    #[test]
    fn sixty_megabyte_block_length() {
        // 6.0e7 bytes -> 2.4e8 bases; check the length law without allocating.
        let bytes = 60_000_000u64;
        assert_eq!(bytes * 4, 240_000_000);
        let small = encode_bytes(&vec![0u8; 6000]);
        assert_eq!(small.len(), 24_000);
    }

    #[test]
    fn odd_length_is_malformed() {
        let seq: BaseSequence = "ACG".parse().unwrap();
        assert_eq!(decode_block(&seq), Err(Error::MalformedSequence { len: 3 }));
    }

    #[test]
    fn bit_capacity() {
        assert_eq!(block_bit_capacity(0), 0);
        assert_eq!(block_bit_capacity(4), 8);
        let mb = block_bit_capacity(250_000_000) as f64 / 8.0 / (1024.0 * 1024.0);
        assert!((mb - 59.6).abs() < 0.05, "{mb}");
    }

    #[test]
    fn seeded_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let len = rng.random_range(0..=1024);
            let payload: Vec<u8> = (0..len).map(|_| rng.random()).collect();
            let seq = encode_bytes(&payload);
            assert_eq!(seq.len(), 4 * payload.len());
            assert_eq!(decode_block(&seq).unwrap().payload, payload);
        }
    }

    #[test]
    fn rejects_unknown_letters() {
        assert_eq!("ACXT".parse::<BaseSequence>(), Err(Error::InvalidBase('X')));
    }

    #[test]
    fn sequence_file_format() {
        let seq: BaseSequence = "GATTACA".parse().unwrap();
        let text = format_sequence_file(&seq);
        assert_eq!(text, "GATTACA\n");
        assert_eq!(parse_sequence_lines(&text).unwrap(), vec![seq]);
    }

    proptest! {
        #[test]
        fn round_trip_and_capacity(payload in proptest::collection::vec(any::<u8>(), 0..512)) {
            let seq = encode_bytes(&payload);
            prop_assert_eq!(seq.len(), 4 * payload.len());
            prop_assert_eq!(block_bit_capacity(seq.len() as u64), 8 * payload.len() as u64);
            prop_assert_eq!(decode_block(&seq).unwrap().payload, payload);
        }
    }
}
