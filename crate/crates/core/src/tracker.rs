//! Rule-based belief tracker.
//!
//! Every distribution follows the focus rule `b'(x) = c_x + (1 - sum c)·b(x)`,
//! where `c_x` is the N-best confidence asserting `x`. Each constraint-slot
//! distribution is laid out as `[none, dontcare, values...]`.

use serde::{Deserialize, Serialize};

use crate::domain::{Ontology, DONTCARE, NAME_SLOT, NO_ENTITY};
use crate::semantics::{ActType, DialogueAct, NBestList};

pub const NONE_IDX: usize = 0;
pub const DONTCARE_IDX: usize = 1;

/// Method labels in distribution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    None,
    ByConstraints,
    ByName,
    ByAlternatives,
    Finished,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::None,
        Method::ByConstraints,
        Method::ByName,
        Method::ByAlternatives,
        Method::Finished,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    /// One distribution per constraint slot, in ontology order.
    pub slots: Vec<Vec<f64>>,
    pub method: [f64; 5],
    /// Probability that each requestable slot is wanted, in ontology order.
    pub requested: Vec<f64>,
    pub entity_offered: f64,
    pub last_user_null: bool,
    /// Most recently offered entity, by ontology index.
    pub offered: Option<usize>,
    /// Every entity offered so far, ascending.
    pub offered_set: Vec<usize>,
    pub last_system_act: Option<DialogueAct>,
}

/// Fixed vector dimension for `ontology`.
pub fn belief_dim(ontology: &Ontology) -> usize {
    let slots: usize = ontology
        .constraint_slots()
        .iter()
        .map(|&s| ontology.slots()[s].values.len() + 2)
        .sum();
    slots + Method::ALL.len() + ontology.requestable_slots().len() + 2
}

pub fn init_belief(ontology: &Ontology) -> BeliefState {
    let slots = ontology
        .constraint_slots()
        .iter()
        .map(|&s| {
            let mut d = vec![0.0; ontology.slots()[s].values.len() + 2];
            d[NONE_IDX] = 1.0;
            d
        })
        .collect();
    let mut method = [0.0; 5];
    method[0] = 1.0;
    BeliefState {
        slots,
        method,
        requested: vec![0.0; ontology.requestable_slots().len()],
        entity_offered: 0.0,
        last_user_null: false,
        offered: None,
        offered_set: Vec::new(),
        last_system_act: None,
    }
}

fn focus(dist: &mut [f64], evidence: &[f64]) {
    let total: f64 = evidence.iter().sum::<f64>().min(1.0);
    for (b, c) in dist.iter_mut().zip(evidence) {
        *b = c + (1.0 - total) * *b;
    }
}

fn normalize(dist: &mut [f64]) {
    for b in dist.iter_mut() {
        *b = b.max(0.0);
    }
    let z: f64 = dist.iter().sum();
    if z > 0.0 {
        for b in dist.iter_mut() {
            *b /= z;
        }
    } else {
        dist.iter_mut().for_each(|b| *b = 0.0);
        dist[0] = 1.0;
    }
}

fn argmax(dist: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in dist.iter().enumerate() {
        if v > dist[best] {
            best = i;
        }
    }
    best
}

impl BeliefState {
    pub fn method_top(&self) -> Method {
        Method::ALL[argmax(&self.method)]
    }

    /// Index of the most probable entry of constraint slot `k`, lowest index
    /// on ties.
    pub fn slot_top(&self, k: usize) -> usize {
        argmax(&self.slots[k])
    }

    /// Most probable entry of slot `k` other than none, with its probability.
    pub fn slot_top_informative(&self, k: usize) -> (usize, f64) {
        let d = &self.slots[k];
        let i = 1 + argmax(&d[1..]);
        (i, d[i])
    }

    /// The two most probable entries of slot `k` other than none.
    pub fn slot_top_two(&self, k: usize) -> (usize, usize) {
        let d = &self.slots[k];
        let first = 1 + argmax(&d[1..]);
        let mut second = if first == 1 { 2 } else { 1 };
        for i in 1..d.len() {
            if i != first && d[i] > d[second] {
                second = i;
            }
        }
        (first, second.min(d.len() - 1))
    }

    /// Query form of the current tops: slots whose top is none or dontcare
    /// are left unconstrained.
    pub fn top_constraints(&self, ontology: &Ontology) -> Vec<(usize, Option<usize>)> {
        ontology
            .constraint_slots()
            .iter()
            .enumerate()
            .filter_map(|(k, &s)| {
                let top = self.slot_top(k);
                (top > DONTCARE_IDX).then(|| (s, Some(top - 2)))
            })
            .collect()
    }

    /// Applies one turn: first the system act, then the observed user act.
    pub fn update(
        &self,
        nbest: &NBestList,
        system_act: Option<&DialogueAct>,
        ontology: &Ontology,
    ) -> BeliefState {
        let mut next = self.clone();
        if let Some(sys) = system_act {
            next.apply_system(sys, ontology);
        }
        next.apply_user(nbest, system_act, ontology);
        next.last_system_act = system_act.cloned();
        next
    }

    fn apply_system(&mut self, sys: &DialogueAct, ontology: &Ontology) {
        if !sys.act_type.is_offer() {
            return;
        }
        match sys.entity() {
            Some(NO_ENTITY) => {
                self.entity_offered = 0.0;
                self.offered = None;
            }
            Some(id) => {
                if let Some(e) = ontology.entity_index(id) {
                    self.entity_offered = 1.0;
                    self.offered = Some(e);
                    if let Err(i) = self.offered_set.binary_search(&e) {
                        self.offered_set.insert(i, e);
                    }
                    for item in &sys.items {
                        if let Some(r) = self.requestable_pos(ontology, &item.slot) {
                            self.requested[r] = 0.0;
                        }
                    }
                }
            }
            None => {}
        }
    }

    fn requestable_pos(&self, ontology: &Ontology, slot: &str) -> Option<usize> {
        let s = ontology.slot_index(slot)?;
        ontology.requestable_slots().iter().position(|&r| r == s)
    }

    fn constraint_pos(ontology: &Ontology, slot: &str) -> Option<usize> {
        let s = ontology.slot_index(slot)?;
        ontology.constraint_slots().iter().position(|&c| c == s)
    }

    fn entry(ontology: &Ontology, k: usize, value: &str) -> Option<usize> {
        if value == DONTCARE {
            return Some(DONTCARE_IDX);
        }
        ontology
            .value_index(ontology.constraint_slots()[k], value)
            .map(|v| v + 2)
    }

    fn apply_user(&mut self, nbest: &NBestList, sys: Option<&DialogueAct>, ontology: &Ontology) {
        let n_slots = self.slots.len();
        let mut pos: Vec<Vec<f64>> = self.slots.iter().map(|d| vec![0.0; d.len()]).collect();
        let mut neg: Vec<Vec<f64>> = pos.clone();
        let mut method_ev = [0.0; 5];
        let mut req_ev = vec![0.0; self.requested.len()];
        let mut constraint_mass = 0.0;

        let confirmed: Vec<(usize, usize)> = match sys {
            Some(a) if a.act_type == ActType::Confirm => a
                .items
                .iter()
                .filter_map(|i| {
                    let k = Self::constraint_pos(ontology, &i.slot)?;
                    Some((k, Self::entry(ontology, k, i.value.as_deref()?)?))
                })
                .collect(),
            _ => Vec::new(),
        };

        for h in nbest.hypotheses() {
            let c = h.confidence;
            let act = &h.act;
            let mut seen = vec![false; n_slots];
            let mut informs_constraint = false;
            match act.act_type {
                ActType::Inform | ActType::Request | ActType::Deny | ActType::Reqalts => {
                    for item in &act.items {
                        let Some(v) = item.value.as_deref() else {
                            if act.act_type == ActType::Request {
                                if let Some(r) = self.requestable_pos(ontology, &item.slot) {
                                    req_ev[r] += c;
                                }
                            }
                            continue;
                        };
                        let Some(k) = Self::constraint_pos(ontology, &item.slot) else {
                            continue;
                        };
                        let Some(x) = Self::entry(ontology, k, v) else {
                            continue;
                        };
                        if seen[k] {
                            continue;
                        }
                        seen[k] = true;
                        if act.act_type == ActType::Deny {
                            neg[k][x] += c;
                        } else {
                            pos[k][x] += c;
                            informs_constraint = true;
                        }
                    }
                }
                ActType::Affirm => {
                    for &(k, x) in &confirmed {
                        pos[k][x] += c;
                    }
                }
                ActType::Negate => {
                    for &(k, x) in &confirmed {
                        neg[k][x] += c;
                    }
                }
                _ => {}
            }

            let named = act
                .items
                .iter()
                .any(|i| i.slot == NAME_SLOT && i.value.is_some());
            let m = match act.act_type {
                ActType::Bye => Some(Method::Finished),
                ActType::Reqalts => Some(Method::ByAlternatives),
                _ if named => Some(Method::ByName),
                _ if informs_constraint => Some(Method::ByConstraints),
                _ => None,
            };
            if let Some(m) = m {
                method_ev[m as usize] += c;
            }
            if informs_constraint && act.act_type == ActType::Inform {
                constraint_mass += c;
            }
        }

        for k in 0..n_slots {
            let dist = &mut self.slots[k];
            focus(dist, &pos[k]);
            for x in 1..dist.len() {
                let moved = dist[x] * neg[k][x].min(1.0);
                dist[x] -= moved;
                dist[NONE_IDX] += moved;
            }
            normalize(dist);
        }
        focus(&mut self.method, &method_ev);
        normalize(&mut self.method);
        for (p, c) in self.requested.iter_mut().zip(&req_ev) {
            let c = c.min(1.0);
            *p = (c + (1.0 - c) * *p).clamp(0.0, 1.0);
        }
        self.entity_offered =
            (self.entity_offered * (1.0 - constraint_mass.min(1.0))).clamp(0.0, 1.0);
        self.last_user_null = nbest.top().is_none_or(|h| h.act.act_type == ActType::Null);
    }

    /// Dense policy input in fixed order: slot distributions, method,
    /// requested, entity_offered, last_user_null.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v: Vec<f64> =
            Vec::with_capacity(self.slots.iter().map(Vec::len).sum::<usize>() + 16);
        for d in &self.slots {
            v.extend_from_slice(d);
        }
        v.extend_from_slice(&self.method);
        v.extend_from_slice(&self.requested);
        v.push(self.entity_offered);
        v.push(if self.last_user_null { 1.0 } else { 0.0 });
        v
    }

    /// Non-zero entries of [`flatten`](Self::flatten) as `(index, value)`.
    pub fn sparse(&self) -> Vec<(usize, f64)> {
        self.flatten()
            .into_iter()
            .enumerate()
            .filter(|(_, x)| *x != 0.0)
            .collect()
    }
}
