//! Versioned residue tables shipped with the crate.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Deserialize;

use crate::sequence::{AminoAcid, SsLabel};

const PROPENSITY_JSON: &str = include_str!("../data/propensity.json");
const CLASSES_JSON: &str = include_str!("../data/residue_classes.json");
const REFERENCE_JSON: &str = include_str!("../data/reference_energy.json");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propensity {
    pub helix: f64,
    pub sheet: f64,
    pub coil: f64,
}

impl Propensity {
    pub fn for_label(&self, label: SsLabel) -> f64 {
        match label {
            SsLabel::Helix => self.helix,
            SsLabel::Strand => self.sheet,
            SsLabel::Loop => self.coil,
        }
    }
}

#[derive(Deserialize)]
struct PropensityFile {
    version: String,
    rows: Vec<PropensityRow>,
}

#[derive(Deserialize)]
struct PropensityRow {
    residue: AminoAcid,
    helix: f64,
    sheet: f64,
    coil: f64,
}

pub struct PropensityTable {
    pub version: String,
    values: [Propensity; 20],
}

impl PropensityTable {
    pub fn get(&self, aa: AminoAcid) -> Propensity {
        self.values[aa.index()]
    }
}

pub fn propensities() -> &'static PropensityTable {
    static TABLE: OnceLock<PropensityTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let file: PropensityFile = serde_json::from_str(PROPENSITY_JSON).expect("propensity table");
        let mut values = [None; 20];
        for row in file.rows {
            values[row.residue.index()] = Some(Propensity {
                helix: row.helix,
                sheet: row.sheet,
                coil: row.coil,
            });
        }
        PropensityTable {
            version: file.version,
            values: values.map(|v| v.expect("propensity table covers all 20 residues")),
        }
    })
}

/// Coarse physicochemical class. Every residue belongs to exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResidueClass {
    Hydrophobic,
    Polar,
    Positive,
    Negative,
    Special,
}

#[derive(Deserialize)]
struct ClassFile {
    version: String,
    hydrophobic: String,
    polar: String,
    positive: String,
    negative: String,
    aromatic: String,
    special: String,
    metal_coordinating: String,
}

pub struct ClassTable {
    pub version: String,
    class: [ResidueClass; 20],
    named: BTreeMap<&'static str, Vec<AminoAcid>>,
}

impl ClassTable {
    pub fn class_of(&self, aa: AminoAcid) -> ResidueClass {
        self.class[aa.index()]
    }

    /// Members of a named set: hydrophobic, polar, positive, negative,
    /// aromatic, special or metal_coordinating.
    pub fn named_set(&self, name: &str) -> Option<&[AminoAcid]> {
        self.named.get(name).map(Vec::as_slice)
    }

    pub fn set_names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.named.keys().copied()
    }

    pub fn is_aromatic(&self, aa: AminoAcid) -> bool {
        self.named["aromatic"].contains(&aa)
    }

    pub fn is_metal_coordinating(&self, aa: AminoAcid) -> bool {
        self.named["metal_coordinating"].contains(&aa)
    }
}

fn letters(s: &str) -> Vec<AminoAcid> {
    s.chars()
        .map(|c| AminoAcid::from_code(c).expect("class table letters"))
        .collect()
}

pub fn classes() -> &'static ClassTable {
    static TABLE: OnceLock<ClassTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let file: ClassFile = serde_json::from_str(CLASSES_JSON).expect("class table");
        let mut class = [None; 20];
        for (members, c) in [
            (&file.hydrophobic, ResidueClass::Hydrophobic),
            (&file.polar, ResidueClass::Polar),
            (&file.positive, ResidueClass::Positive),
            (&file.negative, ResidueClass::Negative),
            (&file.special, ResidueClass::Special),
        ] {
            for aa in letters(members) {
                assert!(class[aa.index()].is_none(), "{aa} assigned to two classes");
                class[aa.index()] = Some(c);
            }
        }
        let mut named = BTreeMap::new();
        named.insert("hydrophobic", letters(&file.hydrophobic));
        named.insert("polar", letters(&file.polar));
        named.insert("positive", letters(&file.positive));
        named.insert("negative", letters(&file.negative));
        named.insert("aromatic", letters(&file.aromatic));
        named.insert("special", letters(&file.special));
        named.insert("metal_coordinating", letters(&file.metal_coordinating));
        ClassTable {
            version: file.version,
            class: class.map(|c| c.expect("every residue has a class")),
            named,
        }
    })
}

#[derive(Deserialize)]
struct ReferenceFile {
    version: String,
    values: BTreeMap<AminoAcid, f64>,
}

pub struct ReferenceEnergies {
    pub version: String,
    values: [f64; 20],
}

impl ReferenceEnergies {
    pub fn get(&self, aa: AminoAcid) -> f64 {
        self.values[aa.index()]
    }
}

pub fn reference_energies() -> &'static ReferenceEnergies {
    static TABLE: OnceLock<ReferenceEnergies> = OnceLock::new();
    TABLE.get_or_init(|| {
        let file: ReferenceFile = serde_json::from_str(REFERENCE_JSON).expect("reference table");
        assert_eq!(file.values.len(), 20, "reference table covers all 20 residues");
        let mut values = [0.0; 20];
        for (aa, v) in file.values {
            values[aa.index()] = v;
        }
        ReferenceEnergies {
            version: file.version,
            values,
        }
    })
}
