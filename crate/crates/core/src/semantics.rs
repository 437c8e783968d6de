//! Semantic dialogue acts and scored N-best lists.
//!
//! Acts have a canonical text form `acttype(slot=value,slot,...)` used in
//! trace logs; [`DialogueAct::parse`] inverts [`fmt::Display`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{Ontology, DONTCARE, NAME_SLOT, NO_ENTITY};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActType {
    Hello,
    Inform,
    Request,
    Confirm,
    Select,
    Affirm,
    Negate,
    Deny,
    Reqalts,
    Reqmore,
    Bye,
    Repeat,
    Null,
    InformByname,
    InformAlternatives,
    InformRequested,
}

impl ActType {
    pub const ALL: [ActType; 16] = [
        ActType::Hello,
        ActType::Inform,
        ActType::Request,
        ActType::Confirm,
        ActType::Select,
        ActType::Affirm,
        ActType::Negate,
        ActType::Deny,
        ActType::Reqalts,
        ActType::Reqmore,
        ActType::Bye,
        ActType::Repeat,
        ActType::Null,
        ActType::InformByname,
        ActType::InformAlternatives,
        ActType::InformRequested,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActType::Hello => "hello",
            ActType::Inform => "inform",
            ActType::Request => "request",
            ActType::Confirm => "confirm",
            ActType::Select => "select",
            ActType::Affirm => "affirm",
            ActType::Negate => "negate",
            ActType::Deny => "deny",
            ActType::Reqalts => "reqalts",
            ActType::Reqmore => "reqmore",
            ActType::Bye => "bye",
            ActType::Repeat => "repeat",
            ActType::Null => "null",
            ActType::InformByname => "inform_byname",
            ActType::InformAlternatives => "inform_alternatives",
            ActType::InformRequested => "inform_requested",
        }
    }

    /// Act types that never carry items.
    pub fn is_itemless(self) -> bool {
        matches!(
            self,
            ActType::Hello
                | ActType::Bye
                | ActType::Reqmore
                | ActType::Affirm
                | ActType::Negate
                | ActType::Repeat
                | ActType::Null
        )
    }

    /// Inform variants that offer an entity via the `name` pseudo-slot.
    pub fn is_offer(self) -> bool {
        matches!(
            self,
            ActType::Inform
                | ActType::InformByname
                | ActType::InformAlternatives
                | ActType::InformRequested
        )
    }
}

impl fmt::Display for ActType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ActType::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Parse {
                pos: 0,
                msg: format!("unknown act type `{s}`"),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActItem {
    pub slot: String,
    pub value: Option<String>,
}

impl ActItem {
    pub fn new(slot: impl Into<String>, value: impl Into<String>) -> Self {
        ActItem {
            slot: slot.into(),
            value: Some(value.into()),
        }
    }

    pub fn slot_only(slot: impl Into<String>) -> Self {
        ActItem {
            slot: slot.into(),
            value: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DialogueAct {
    pub act_type: ActType,
    pub items: Vec<ActItem>,
}

impl DialogueAct {
    pub fn new(act_type: ActType, items: Vec<ActItem>) -> Self {
        DialogueAct { act_type, items }
    }

    pub fn bare(act_type: ActType) -> Self {
        DialogueAct {
            act_type,
            items: Vec::new(),
        }
    }

    pub fn inform(items: Vec<ActItem>) -> Self {
        DialogueAct::new(ActType::Inform, items)
    }

    pub fn request(slot: &str) -> Self {
        DialogueAct::new(ActType::Request, vec![ActItem::slot_only(slot)])
    }

    pub fn confirm(slot: &str, value: &str) -> Self {
        DialogueAct::new(ActType::Confirm, vec![ActItem::new(slot, value)])
    }

    /// Value attached to `slot`, if the act mentions it with a value.
    pub fn value_of(&self, slot: &str) -> Option<&str> {
        self.items
            .iter()
            .find(|i| i.slot == slot)
            .and_then(|i| i.value.as_deref())
    }

    pub fn mentions(&self, slot: &str) -> bool {
        self.items.iter().any(|i| i.slot == slot)
    }

    /// Entity id carried in the `name` pseudo-slot.
    pub fn entity(&self) -> Option<&str> {
        self.value_of(NAME_SLOT)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Parser { src: text, pos: 0 }.act()
    }

    /// Checks the act against the item-arity rules and, when given, the
    /// slots and values of an ontology.
    pub fn validate(&self, ontology: Option<&Ontology>) -> Result<()> {
        if self.act_type.is_itemless() && !self.items.is_empty() {
            return Err(Error::Schema(format!("`{}` takes no items", self.act_type)));
        }
        let Some(o) = ontology else { return Ok(()) };
        for item in &self.items {
            if item.slot == NAME_SLOT {
                match item.value.as_deref() {
                    Some(NO_ENTITY) | None => {}
                    Some(id) if o.entity_index(id).is_some() => {}
                    Some(id) => return Err(Error::Schema(format!("unknown entity `{id}`"))),
                }
                continue;
            }
            let s = o
                .slot_index(&item.slot)
                .ok_or_else(|| Error::Schema(format!("unknown slot `{}`", item.slot)))?;
            if let Some(v) = item.value.as_deref() {
                let ok =
                    o.value_index(s, v).is_some() || (v == DONTCARE && o.slots()[s].is_constraint);
                if !ok {
                    return Err(Error::Schema(format!(
                        "unknown value `{v}` for slot `{}`",
                        item.slot
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for DialogueAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.act_type)?;
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match &item.value {
                Some(v) => write!(f, "{}={}", item.slot, v)?,
                None => f.write_str(&item.slot)?,
            }
        }
        f.write_str(")")
    }
}

impl FromStr for DialogueAct {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DialogueAct::parse(s)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn ident(&mut self) -> Result<&str> {
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')))
            .unwrap_or(rest.len());
        if len == 0 {
            return self.err("expected identifier");
        }
        self.pos += len;
        Ok(&self.src[start..start + len])
    }

    fn eat(&mut self, c: char) -> bool {
        if self.src[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn act(mut self) -> Result<DialogueAct> {
        let type_pos = self.pos;
        let name = self.ident()?;
        let act_type = name.parse::<ActType>().map_err(|_| Error::Parse {
            pos: type_pos,
            msg: format!("unknown act type `{name}`"),
        })?;
        if !self.eat('(') {
            return self.err("expected `(`");
        }
        let mut items = Vec::new();
        if !self.eat(')') {
            loop {
                let slot = self.ident()?.to_string();
                let value = if self.eat('=') {
                    Some(self.ident()?.to_string())
                } else {
                    None
                };
                items.push(ActItem { slot, value });
                if self.eat(')') {
                    break;
                }
                if !self.eat(',') {
                    return self.err("expected `,` or `)`");
                }
            }
        }
        if self.pos != self.src.len() {
            return self.err("trailing input");
        }
        let act = DialogueAct { act_type, items };
        if act.act_type.is_itemless() && !act.items.is_empty() {
            return Err(Error::Parse {
                pos: type_pos,
                msg: format!("`{act_type}` takes no items"),
            });
        }
        Ok(act)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredHypothesis {
    pub act: DialogueAct,
    pub confidence: f64,
}

/// Confidence-ordered hypotheses plus the mass left unobserved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NBestList {
    hypotheses: Vec<ScoredHypothesis>,
    residual: f64,
}

impl NBestList {
    /// Sorts hypotheses by descending confidence and assigns the remaining
    /// probability mass to the residual.
    pub fn new(mut hypotheses: Vec<ScoredHypothesis>) -> Result<Self> {
        let mut total = 0.0;
        for h in &hypotheses {
            if !(0.0..=1.0).contains(&h.confidence) {
                return Err(Error::Schema(format!(
                    "confidence {} outside [0,1]",
                    h.confidence
                )));
            }
            total += h.confidence;
        }
        if total > 1.0 + 1e-9 {
            return Err(Error::Schema(format!("confidences sum to {total} > 1")));
        }
        hypotheses.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
        Ok(NBestList {
            hypotheses,
            residual: (1.0 - total).max(0.0),
        })
    }

    /// A list holding `act` with confidence one.
    pub fn certain(act: DialogueAct) -> Self {
        NBestList {
            hypotheses: vec![ScoredHypothesis {
                act,
                confidence: 1.0,
            }],
            residual: 0.0,
        }
    }

    pub fn empty() -> Self {
        NBestList {
            hypotheses: Vec::new(),
            residual: 1.0,
        }
    }

    pub fn hypotheses(&self) -> &[ScoredHypothesis] {
        &self.hypotheses
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn top(&self) -> Option<&ScoredHypothesis> {
        self.hypotheses.first()
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.hypotheses.iter().map(|h| h.confidence).sum::<f64>() + self.residual
    }
}
