//! Amino-acid alphabet, fixed-length protein sequences, and secondary
//! structure labels.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SequenceError {
    #[error("empty sequence")]
    Empty,
    #[error("invalid residue {residue:?} at position {position}")]
    InvalidResidue { position: usize, residue: char },
    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

/// One of the 20 standard amino acids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AminoAcid {
    Ala,
    Arg,
    Asn,
    Asp,
    Cys,
    Gln,
    Glu,
    Gly,
    His,
    Ile,
    Leu,
    Lys,
    Met,
    Phe,
    Pro,
    Ser,
    Thr,
    Trp,
    Tyr,
    Val,
}

impl AminoAcid {
    /// All residues in canonical order (A, R, N, D, C, Q, E, G, H, I, L, K,
    /// M, F, P, S, T, W, Y, V). Feature vectors and count matrices follow it.
    pub const ALL: [AminoAcid; 20] = [
        AminoAcid::Ala,
        AminoAcid::Arg,
        AminoAcid::Asn,
        AminoAcid::Asp,
        AminoAcid::Cys,
        AminoAcid::Gln,
        AminoAcid::Glu,
        AminoAcid::Gly,
        AminoAcid::His,
        AminoAcid::Ile,
        AminoAcid::Leu,
        AminoAcid::Lys,
        AminoAcid::Met,
        AminoAcid::Phe,
        AminoAcid::Pro,
        AminoAcid::Ser,
        AminoAcid::Thr,
        AminoAcid::Trp,
        AminoAcid::Tyr,
        AminoAcid::Val,
    ];

    pub fn code(self) -> char {
        match self {
            AminoAcid::Ala => 'A',
            AminoAcid::Arg => 'R',
            AminoAcid::Asn => 'N',
            AminoAcid::Asp => 'D',
            AminoAcid::Cys => 'C',
            AminoAcid::Gln => 'Q',
            AminoAcid::Glu => 'E',
            AminoAcid::Gly => 'G',
            AminoAcid::His => 'H',
            AminoAcid::Ile => 'I',
            AminoAcid::Leu => 'L',
            AminoAcid::Lys => 'K',
            AminoAcid::Met => 'M',
            AminoAcid::Phe => 'F',
            AminoAcid::Pro => 'P',
            AminoAcid::Ser => 'S',
            AminoAcid::Thr => 'T',
            AminoAcid::Trp => 'W',
            AminoAcid::Tyr => 'Y',
            AminoAcid::Val => 'V',
        }
    }

    /// Case-insensitive lookup of a one-letter code.
    pub fn from_code(c: char) -> Option<AminoAcid> {
        let aa = match c.to_ascii_uppercase() {
            'A' => AminoAcid::Ala,
            'R' => AminoAcid::Arg,
            'N' => AminoAcid::Asn,
            'D' => AminoAcid::Asp,
            'C' => AminoAcid::Cys,
            'Q' => AminoAcid::Gln,
            'E' => AminoAcid::Glu,
            'G' => AminoAcid::Gly,
            'H' => AminoAcid::His,
            'I' => AminoAcid::Ile,
            'L' => AminoAcid::Leu,
            'K' => AminoAcid::Lys,
            'M' => AminoAcid::Met,
            'F' => AminoAcid::Phe,
            'P' => AminoAcid::Pro,
            'S' => AminoAcid::Ser,
            'T' => AminoAcid::Thr,
            'W' => AminoAcid::Trp,
            'Y' => AminoAcid::Tyr,
            'V' => AminoAcid::Val,
            _ => return None,
        };
        Some(aa)
    }

    /// Position of this residue in [`AminoAcid::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for AminoAcid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl Serialize for AminoAcid {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut buf = [0u8; 4];
        serializer.serialize_str(self.code().encode_utf8(&mut buf))
    }
}

impl<'de> Deserialize<'de> for AminoAcid {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct CodeVisitor;

        impl Visitor<'_> for CodeVisitor {
            type Value = AminoAcid;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a one-letter amino-acid code")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<AminoAcid, E> {
                let mut chars = v.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => {
                        AminoAcid::from_code(c).ok_or_else(|| E::custom(format!("not an amino acid: {v:?}")))
                    }
                    _ => Err(E::custom(format!("not an amino acid: {v:?}"))),
                }
            }

            fn visit_char<E: de::Error>(self, c: char) -> Result<AminoAcid, E> {
                AminoAcid::from_code(c).ok_or_else(|| E::custom(format!("not an amino acid: {c:?}")))
            }
        }

        deserializer.deserialize_str(CodeVisitor)
    }
}

/// An ordered list of residues. Length is fixed for the lifetime of a
/// design campaign; the search space is substitution-only.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProteinSequence(Vec<AminoAcid>);

impl ProteinSequence {
    pub fn new(residues: Vec<AminoAcid>) -> Result<Self, SequenceError> {
        if residues.is_empty() {
            return Err(SequenceError::Empty);
        }
        Ok(ProteinSequence(residues))
    }

    /// Parses a one-letter sequence. Surrounding whitespace is ignored and
    /// lowercase letters are normalized to uppercase.
    pub fn parse(text: &str) -> Result<Self, SequenceError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(SequenceError::Empty);
        }
        trimmed
            .chars()
            .enumerate()
            .map(|(position, residue)| {
                AminoAcid::from_code(residue).ok_or(SequenceError::InvalidResidue { position, residue })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(ProteinSequence)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn residues(&self) -> &[AminoAcid] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Option<AminoAcid> {
        self.0.get(i).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = AminoAcid> + '_ {
        self.0.iter().copied()
    }

    /// Returns a copy with position `i` replaced.
    pub fn with_residue(&self, i: usize, aa: AminoAcid) -> ProteinSequence {
        let mut residues = self.0.clone();
        residues[i] = aa;
        ProteinSequence(residues)
    }

    /// Positions where `self` and `other` differ.
    pub fn changed_positions(&self, other: &ProteinSequence) -> Result<Vec<usize>, SequenceError> {
        check_lengths(self, other)?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i)
            .collect())
    }
}

impl std::ops::Index<usize> for ProteinSequence {
    type Output = AminoAcid;

    fn index(&self, i: usize) -> &AminoAcid {
        &self.0[i]
    }
}

impl fmt::Display for ProteinSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for aa in &self.0 {
            write!(f, "{}", aa.code())?;
        }
        Ok(())
    }
}

impl FromStr for ProteinSequence {
    type Err = SequenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProteinSequence::parse(s)
    }
}

impl Serialize for ProteinSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ProteinSequence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ProteinSequence::parse(&s).map_err(de::Error::custom)
    }
}

fn check_lengths(a: &ProteinSequence, b: &ProteinSequence) -> Result<(), SequenceError> {
    if a.len() != b.len() {
        return Err(SequenceError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Number of positions at which two equal-length sequences differ.
pub fn hamming(a: &ProteinSequence, b: &ProteinSequence) -> Result<usize, SequenceError> {
    check_lengths(a, b)?;
    Ok(a.0.iter().zip(&b.0).filter(|(x, y)| x != y).count())
}

/// Per-residue secondary structure label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SsLabel {
    Helix,
    Strand,
    Loop,
}

impl SsLabel {
    pub fn code(self) -> char {
        match self {
            SsLabel::Helix => 'H',
            SsLabel::Strand => 'E',
            SsLabel::Loop => 'L',
        }
    }

    pub fn from_code(c: char) -> Option<SsLabel> {
        match c {
            'H' => Some(SsLabel::Helix),
            'E' => Some(SsLabel::Strand),
            'L' => Some(SsLabel::Loop),
            _ => None,
        }
    }
}

impl fmt::Display for SsLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl Serialize for SsLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut buf = [0u8; 4];
        serializer.serialize_str(self.code().encode_utf8(&mut buf))
    }
}

impl<'de> Deserialize<'de> for SsLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => SsLabel::from_code(c),
            _ => None,
        }
        .ok_or_else(|| de::Error::custom(format!("not a secondary structure label: {s:?}")))
    }
}

/// A secondary structure string over {H, E, L}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SsString(Vec<SsLabel>);

impl SsString {
    pub fn new(labels: Vec<SsLabel>) -> Self {
        SsString(labels)
    }

    pub fn uniform(label: SsLabel, n: usize) -> Self {
        SsString(vec![label; n])
    }

    /// Parses a string over {H, E, L}; returns the offending index on failure.
    pub fn parse(s: &str) -> Result<Self, usize> {
        s.chars()
            .enumerate()
            .map(|(i, c)| SsLabel::from_code(c).ok_or(i))
            .collect::<Result<Vec<_>, _>>()
            .map(SsString)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[SsLabel] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Option<SsLabel> {
        self.0.get(i).copied()
    }
}

impl fmt::Display for SsString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{}", l.code())?;
        }
        Ok(())
    }
}

impl Serialize for SsString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SsString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        SsString::parse(&s).map_err(|i| de::Error::custom(format!("invalid secondary structure label at index {i}")))
    }
}
