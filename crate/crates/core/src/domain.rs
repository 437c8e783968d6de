//! Slot-based ontologies and their entity databases.
//!
//! Three standard domains are supported: Cambridge restaurants (`CR`), San
//! Francisco restaurants (`SFR`) and laptops (`LAP`). No real databases are
//! shipped; each ontology is synthesized deterministically from a seed with
//! slot and value counts fixed by [`DomainCode::table_counts`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value every constraint slot implicitly accepts: "any value is fine".
pub const DONTCARE: &str = "dontcare";
/// Pseudo-slot carrying an entity identifier in dialogue acts.
pub const NAME_SLOT: &str = "name";
/// Entity identifier used when the system asserts that nothing matches.
pub const NO_ENTITY: &str = "none";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DomainCode {
    CR,
    SFR,
    LAP,
}

impl DomainCode {
    pub const ALL: [DomainCode; 3] = [DomainCode::CR, DomainCode::SFR, DomainCode::LAP];

    /// `(constraint slots, requestable slots, values summed over requestable slots)`.
    pub fn table_counts(self) -> (usize, usize, usize) {
        match self {
            DomainCode::CR => (3, 9, 268),
            DomainCode::SFR => (6, 11, 636),
            DomainCode::LAP => (11, 21, 257),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DomainCode::CR => "CR",
            DomainCode::SFR => "SFR",
            DomainCode::LAP => "LAP",
        }
    }
}

impl fmt::Display for DomainCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DomainCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "CR" => Ok(DomainCode::CR),
            "SFR" => Ok(DomainCode::SFR),
            "LAP" => Ok(DomainCode::LAP),
            other => Err(Error::Config(format!("unknown domain code `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotDef {
    pub name: String,
    pub values: Vec<String>,
    pub is_constraint: bool,
    pub is_requestable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub attributes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyMeta {
    pub n_constraint: usize,
    pub n_requestable: usize,
    pub total_requestable_values: usize,
}

/// On-disk form of an ontology.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct OntologyFile {
    code: String,
    slots: Vec<SlotDef>,
    entities: Vec<Entity>,
}

/// A validated, immutable ontology with precomputed lookup tables.
#[derive(Debug, Clone)]
pub struct Ontology {
    code: String,
    slots: Vec<SlotDef>,
    entities: Vec<Entity>,
    meta: OntologyMeta,
    slot_index: HashMap<String, usize>,
    value_index: Vec<HashMap<String, usize>>,
    entity_index: HashMap<String, usize>,
    /// `entity_values[e][s]` is the value index of slot `s` for entity `e`.
    entity_values: Vec<Vec<usize>>,
    constraint_slots: Vec<usize>,
    requestable_slots: Vec<usize>,
}

impl PartialEq for Ontology {
    fn eq(&self, other: &Self) -> bool {
        self.code == other.code && self.slots == other.slots && self.entities == other.entities
    }
}

/// Per-domain generation layout: slot value counts and database size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainLayout {
    pub constraint_slots: Vec<(String, usize)>,
    pub info_slots: Vec<(String, usize)>,
    pub n_entities: usize,
}

impl DomainLayout {
    /// Default layout; value splits are chosen so that the totals match
    /// [`DomainCode::table_counts`] exactly.
    pub fn standard(code: DomainCode) -> Self {
        fn named(spec: &[(&str, usize)]) -> Vec<(String, usize)> {
            spec.iter().map(|(n, c)| (n.to_string(), *c)).collect()
        }
        fn numbered(start: usize, counts: &[usize]) -> Vec<(String, usize)> {
            counts
                .iter()
                .enumerate()
                .map(|(i, c)| (format!("slot{:02}", start + i), *c))
                .collect()
        }
        match code {
            DomainCode::CR => DomainLayout {
                constraint_slots: named(&[("food", 18), ("area", 6), ("pricerange", 4)]),
                info_slots: named(&[
                    ("phone", 40),
                    ("addr", 40),
                    ("postcode", 40),
                    ("signature", 40),
                    ("description", 40),
                    ("openhours", 40),
                ]),
                n_entities: 110,
            },
            DomainCode::SFR => DomainLayout {
                constraint_slots: numbered(0, &[24, 20, 4, 5, 2, 15]),
                info_slots: numbered(6, &[113, 113, 113, 113, 114]),
                n_entities: 250,
            },
            DomainCode::LAP => DomainLayout {
                constraint_slots: numbered(0, &[8, 4, 4, 4, 2, 6, 5, 6, 5, 8, 6]),
                info_slots: numbered(11, &[20, 20, 20, 20, 20, 20, 20, 20, 20, 19]),
                n_entities: 120,
            },
        }
    }
}

/// Builds the standard ontology for `code`; a pure function of `(code, seed)`.
pub fn generate_domain(code: DomainCode, seed: u64) -> Ontology {
    generate_with_layout(code.as_str(), &DomainLayout::standard(code), seed)
        .expect("standard layouts are valid")
}

pub fn generate_with_layout(code: &str, layout: &DomainLayout, seed: u64) -> Result<Ontology> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots = Vec::new();
    for (name, n) in &layout.constraint_slots {
        slots.push(SlotDef {
            name: name.clone(),
            values: (0..*n).map(|v| format!("val{v:03}")).collect(),
            is_constraint: true,
            is_requestable: true,
        });
    }
    for (name, n) in &layout.info_slots {
        slots.push(SlotDef {
            name: name.clone(),
            values: (0..*n).map(|v| format!("val{v:03}")).collect(),
            is_constraint: false,
            is_requestable: true,
        });
    }
    let entities = (0..layout.n_entities)
        .map(|e| Entity {
            id: format!("ent{e:03}"),
            attributes: slots
                .iter()
                .map(|s| {
                    let v = rng.random_range(0..s.values.len());
                    (s.name.clone(), s.values[v].clone())
                })
                .collect(),
        })
        .collect();
    Ontology::new(code.to_string(), slots, entities)
}

/// Reads and validates an ontology file.
pub fn load_ontology(path: impl AsRef<Path>) -> Result<Ontology> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ontology::from_json(&text)
}

impl Ontology {
    pub fn new(code: String, slots: Vec<SlotDef>, mut entities: Vec<Entity>) -> Result<Self> {
        let mut slot_index = HashMap::new();
        let mut value_index = Vec::with_capacity(slots.len());
        for (i, s) in slots.iter().enumerate() {
            if s.name == NAME_SLOT {
                return Err(Error::Schema(format!(
                    "slot name `{NAME_SLOT}` is reserved"
                )));
            }
            if slot_index.insert(s.name.clone(), i).is_some() {
                return Err(Error::Schema(format!("duplicate slot `{}`", s.name)));
            }
            if s.is_constraint && s.values.is_empty() {
                return Err(Error::Schema(format!(
                    "constraint slot `{}` has no values",
                    s.name
                )));
            }
            if s.is_constraint && !s.is_requestable {
                return Err(Error::Schema(format!(
                    "constraint slot `{}` must also be requestable",
                    s.name
                )));
            }
            let mut vi = HashMap::new();
            for (j, v) in s.values.iter().enumerate() {
                if v == DONTCARE {
                    return Err(Error::Schema(format!("value `{DONTCARE}` is reserved")));
                }
                if vi.insert(v.clone(), j).is_some() {
                    return Err(Error::Schema(format!(
                        "duplicate value `{v}` in slot `{}`",
                        s.name
                    )));
                }
            }
            value_index.push(vi);
        }

        entities.sort_by(|a, b| a.id.cmp(&b.id));
        let mut entity_index = HashMap::new();
        let mut entity_values = Vec::with_capacity(entities.len());
        for (e, ent) in entities.iter().enumerate() {
            if ent.id == NO_ENTITY || entity_index.insert(ent.id.clone(), e).is_some() {
                return Err(Error::Schema(format!(
                    "invalid or duplicate entity id `{}`",
                    ent.id
                )));
            }
            if let Some(extra) = ent.attributes.keys().find(|k| !slot_index.contains_key(*k)) {
                return Err(Error::Schema(format!(
                    "entity `{}` references unknown slot `{extra}`",
                    ent.id
                )));
            }
            let mut row = Vec::with_capacity(slots.len());
            for (s, slot) in slots.iter().enumerate() {
                let value = ent.attributes.get(&slot.name).ok_or_else(|| {
                    Error::Schema(format!("entity `{}` lacks slot `{}`", ent.id, slot.name))
                })?;
                let v = value_index[s].get(value).ok_or_else(|| {
                    Error::Schema(format!(
                        "entity `{}` has unknown value `{value}` for slot `{}`",
                        ent.id, slot.name
                    ))
                })?;
                row.push(*v);
            }
            entity_values.push(row);
        }

        let constraint_slots: Vec<usize> = (0..slots.len())
            .filter(|&s| slots[s].is_constraint)
            .collect();
        let requestable_slots: Vec<usize> = (0..slots.len())
            .filter(|&s| slots[s].is_requestable)
            .collect();
        let meta = OntologyMeta {
            n_constraint: constraint_slots.len(),
            n_requestable: requestable_slots.len(),
            total_requestable_values: requestable_slots
                .iter()
                .map(|&s| slots[s].values.len())
                .sum(),
        };
        if let Ok(standard) = code.parse::<DomainCode>() {
            let expected = standard.table_counts();
            let got = (
                meta.n_constraint,
                meta.n_requestable,
                meta.total_requestable_values,
            );
            if expected != got {
                return Err(Error::Schema(format!(
                    "{code} must have counts {expected:?}, found {got:?}"
                )));
            }
        }

        Ok(Ontology {
            code,
            slots,
            entities,
            meta,
            slot_index,
            value_index,
            entity_index,
            entity_values,
            constraint_slots,
            requestable_slots,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: OntologyFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            pos: e.column(),
            msg: e.to_string(),
        })?;
        Ontology::new(file.code, file.slots, file.entities)
    }

    pub fn to_json(&self) -> String {
        let file = OntologyFile {
            code: self.code.clone(),
            slots: self.slots.clone(),
            entities: self.entities.clone(),
        };
        serde_json::to_string_pretty(&file).expect("ontology serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn standard_code(&self) -> Option<DomainCode> {
        self.code.parse().ok()
    }

    pub fn slots(&self) -> &[SlotDef] {
        &self.slots
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn meta(&self) -> OntologyMeta {
        self.meta
    }

    /// Indices of constraint slots, in ontology order.
    pub fn constraint_slots(&self) -> &[usize] {
        &self.constraint_slots
    }

    pub fn requestable_slots(&self) -> &[usize] {
        &self.requestable_slots
    }

    pub fn slot_index(&self, name: &str) -> Option<usize> {
        self.slot_index.get(name).copied()
    }

    pub fn value_index(&self, slot: usize, value: &str) -> Option<usize> {
        self.value_index[slot].get(value).copied()
    }

    pub fn entity_index(&self, id: &str) -> Option<usize> {
        self.entity_index.get(id).copied()
    }

    /// Value index of `slot` for entity `entity`.
    pub fn entity_value(&self, entity: usize, slot: usize) -> usize {
        self.entity_values[entity][slot]
    }

    pub fn entity_value_name(&self, entity: usize, slot: usize) -> &str {
        &self.slots[slot].values[self.entity_values[entity][slot]]
    }

    /// Entities matching every `(slot, value)` constraint, ordered by id.
    /// A `None` value stands for "don't care".
    pub fn query_indices(&self, constraints: &[(usize, Option<usize>)]) -> Vec<usize> {
        (0..self.entities.len())
            .filter(|&e| {
                constraints
                    .iter()
                    .all(|&(s, v)| v.is_none_or(|v| self.entity_values[e][s] == v))
            })
            .collect()
    }

    /// Entities matching all constraints given by name. Values equal to
    /// [`DONTCARE`] match anything; values outside the slot's set match
    /// nothing.
    pub fn query(&self, constraints: &BTreeMap<String, String>) -> Result<Vec<&Entity>> {
        let mut resolved = Vec::with_capacity(constraints.len());
        for (slot, value) in constraints {
            let s = self
                .slot_index(slot)
                .ok_or_else(|| Error::Usage(format!("unknown slot `{slot}`")))?;
            if !self.slots[s].is_constraint {
                return Err(Error::Usage(format!(
                    "slot `{slot}` is not a constraint slot"
                )));
            }
            if value == DONTCARE {
                continue;
            }
            match self.value_index(s, value) {
                Some(v) => resolved.push((s, Some(v))),
                None => return Ok(Vec::new()),
            }
        }
        Ok(self
            .query_indices(&resolved)
            .into_iter()
            .map(|e| &self.entities[e])
            .collect())
    }

    /// Whether entity `entity` satisfies every constraint.
    pub fn entity_matches(&self, entity: usize, constraints: &[(usize, Option<usize>)]) -> bool {
        constraints
            .iter()
            .all(|&(s, v)| v.is_none_or(|v| self.entity_values[entity][s] == v))
    }

    /// Set of distinct values a constraint slot takes across the database.
    pub fn used_values(&self, slot: usize) -> Vec<usize> {
        let set: HashSet<usize> = self.entity_values.iter().map(|row| row[slot]).collect();
        let mut v: Vec<usize> = set.into_iter().collect();
        v.sort_unstable();
        v
    }
}
