//! Summary action set, belief-dependent masks, and the summary-to-master
//! mapping. The ordering is documented in `docs/actions.md`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{Ontology, NAME_SLOT, NO_ENTITY};
use crate::semantics::{ActItem, ActType, DialogueAct};
use crate::tracker::{BeliefState, Method, DONTCARE_IDX, NONE_IDX};

/// Request suppression threshold on the top informative value.
pub const REQUEST_MASK_THRESHOLD: f64 = 0.99;
/// Threshold on `requested` and `entity_offered`.
pub const FLAG_THRESHOLD: f64 = 0.5;

/// Number of slot-independent actions.
pub const N_GLOBAL: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SummaryAction {
    InformByConstraints,
    InformRequested,
    InformAlternatives,
    Bye,
    Reqmore,
    /// Argument is the position among the constraint slots.
    Request(usize),
    Confirm(usize),
    Select(usize),
}

impl SummaryAction {
    pub fn index(self) -> usize {
        match self {
            SummaryAction::InformByConstraints => 0,
            SummaryAction::InformRequested => 1,
            SummaryAction::InformAlternatives => 2,
            SummaryAction::Bye => 3,
            SummaryAction::Reqmore => 4,
            SummaryAction::Request(k) => N_GLOBAL + 3 * k,
            SummaryAction::Confirm(k) => N_GLOBAL + 3 * k + 1,
            SummaryAction::Select(k) => N_GLOBAL + 3 * k + 2,
        }
    }

    pub fn from_index(index: usize, n_constraint: usize) -> Option<Self> {
        Some(match index {
            0 => SummaryAction::InformByConstraints,
            1 => SummaryAction::InformRequested,
            2 => SummaryAction::InformAlternatives,
            3 => SummaryAction::Bye,
            4 => SummaryAction::Reqmore,
            i if i < N_GLOBAL + 3 * n_constraint => {
                let k = (i - N_GLOBAL) / 3;
                match (i - N_GLOBAL) % 3 {
                    0 => SummaryAction::Request(k),
                    1 => SummaryAction::Confirm(k),
                    _ => SummaryAction::Select(k),
                }
            }
            _ => return None,
        })
    }

    pub fn label(self, ontology: &Ontology) -> String {
        let slot = |k: usize| &ontology.slots()[ontology.constraint_slots()[k]].name;
        match self {
            SummaryAction::Request(k) => format!("request_{}", slot(k)),
            SummaryAction::Confirm(k) => format!("confirm_{}", slot(k)),
            SummaryAction::Select(k) => format!("select_{}", slot(k)),
            other => other.to_string(),
        }
    }
}

impl fmt::Display for SummaryAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SummaryAction::InformByConstraints => f.write_str("inform_byconstraints"),
            SummaryAction::InformRequested => f.write_str("inform_requested"),
            SummaryAction::InformAlternatives => f.write_str("inform_alternatives"),
            SummaryAction::Bye => f.write_str("bye"),
            SummaryAction::Reqmore => f.write_str("reqmore"),
            SummaryAction::Request(k) => write!(f, "request[{k}]"),
            SummaryAction::Confirm(k) => write!(f, "confirm[{k}]"),
            SummaryAction::Select(k) => write!(f, "select[{k}]"),
        }
    }
}

pub fn n_actions(ontology: &Ontology) -> usize {
    N_GLOBAL + 3 * ontology.constraint_slots().len()
}

/// All summary actions in index order.
pub fn build_action_set(ontology: &Ontology) -> Vec<SummaryAction> {
    let n = ontology.constraint_slots().len();
    (0..n_actions(ontology))
        .map(|i| SummaryAction::from_index(i, n).expect("index in range"))
        .collect()
}

/// Legality per action index.
pub fn compute_mask(belief: &BeliefState, ontology: &Ontology, masks_enabled: bool) -> Vec<bool> {
    let n = n_actions(ontology);
    if !masks_enabled {
        return vec![true; n];
    }
    let mut mask = vec![false; n];
    let method = belief.method_top();
    mask[0] = method == Method::ByConstraints;
    mask[1] = belief.requested.iter().any(|&p| p > FLAG_THRESHOLD);
    mask[2] = method == Method::ByAlternatives || belief.entity_offered > FLAG_THRESHOLD;
    mask[3] = true;
    mask[4] = true;
    for k in 0..ontology.constraint_slots().len() {
        let informative = belief.slot_top(k) != NONE_IDX;
        let (_, p) = belief.slot_top_informative(k);
        mask[SummaryAction::Request(k).index()] = p <= REQUEST_MASK_THRESHOLD;
        mask[SummaryAction::Confirm(k).index()] = informative;
        mask[SummaryAction::Select(k).index()] = informative;
    }
    mask
}

/// A master act plus whether the mapping had to fall back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasterAct {
    pub act: DialogueAct,
    pub fallback: bool,
}

fn slot_item(ontology: &Ontology, k: usize, entry: usize) -> ActItem {
    let slot = &ontology.slots()[ontology.constraint_slots()[k]];
    let value = if entry == DONTCARE_IDX {
        crate::domain::DONTCARE
    } else {
        slot.values[entry - 2].as_str()
    };
    ActItem::new(&slot.name, value)
}

fn constraint_items(belief: &BeliefState, ontology: &Ontology) -> Vec<ActItem> {
    (0..ontology.constraint_slots().len())
        .filter_map(|k| {
            let top = belief.slot_top(k);
            (top > DONTCARE_IDX).then(|| slot_item(ontology, k, top))
        })
        .collect()
}

fn offer(
    act_type: ActType,
    entity: Option<usize>,
    belief: &BeliefState,
    ontology: &Ontology,
) -> DialogueAct {
    let mut items = vec![ActItem::new(
        NAME_SLOT,
        entity.map_or(NO_ENTITY, |e| ontology.entities()[e].id.as_str()),
    )];
    items.extend(constraint_items(belief, ontology));
    DialogueAct::new(act_type, items)
}

pub fn summary_to_master(
    action: SummaryAction,
    belief: &BeliefState,
    ontology: &Ontology,
) -> MasterAct {
    let plain = |act| MasterAct {
        act,
        fallback: false,
    };
    match action {
        SummaryAction::InformByConstraints => {
            let matches = ontology.query_indices(&belief.top_constraints(ontology));
            plain(offer(
                ActType::Inform,
                matches.first().copied(),
                belief,
                ontology,
            ))
        }
        SummaryAction::InformRequested => match belief.offered {
            Some(e) => {
                let mut items = vec![ActItem::new(NAME_SLOT, &ontology.entities()[e].id)];
                for (r, &s) in ontology.requestable_slots().iter().enumerate() {
                    if belief.requested[r] > FLAG_THRESHOLD {
                        items.push(ActItem::new(
                            &ontology.slots()[s].name,
                            ontology.entity_value_name(e, s),
                        ));
                    }
                }
                plain(DialogueAct::new(ActType::InformRequested, items))
            }
            None => MasterAct {
                act: summary_to_master(SummaryAction::InformByConstraints, belief, ontology).act,
                fallback: true,
            },
        },
        SummaryAction::InformAlternatives => {
            let matches = ontology.query_indices(&belief.top_constraints(ontology));
            let fresh = matches
                .iter()
                .copied()
                .find(|e| belief.offered_set.binary_search(e).is_err());
            plain(offer(
                ActType::InformAlternatives,
                fresh.or(matches.first().copied()),
                belief,
                ontology,
            ))
        }
        SummaryAction::Bye => plain(DialogueAct::bare(ActType::Bye)),
        SummaryAction::Reqmore => plain(DialogueAct::bare(ActType::Reqmore)),
        SummaryAction::Request(k) => {
            let slot = &ontology.slots()[ontology.constraint_slots()[k]].name;
            plain(DialogueAct::request(slot))
        }
        SummaryAction::Confirm(k) => {
            let (top, _) = belief.slot_top_informative(k);
            plain(DialogueAct::new(
                ActType::Confirm,
                vec![slot_item(ontology, k, top)],
            ))
        }
        SummaryAction::Select(k) => {
            let (a, b) = belief.slot_top_two(k);
            plain(DialogueAct::new(
                ActType::Select,
                vec![slot_item(ontology, k, a), slot_item(ontology, k, b)],
            ))
        }
    }
}
