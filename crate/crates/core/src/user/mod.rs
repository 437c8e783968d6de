//! Agenda-based simulated user.
//!
//! Each dialogue samples a fresh [`UserParams`] profile and a satisfiable
//! [`UserGoal`]. The user keeps a stack of pending acts (constraints to
//! inform, attributes to request, and a final `bye`) and answers every system
//! act by interpreting the rule table documented in `docs/user_rules.md`.

mod params;

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use params::{sample_params, ProfileDistribution, ProfileKind, UserParams};

use crate::domain::{Ontology, DONTCARE, NAME_SLOT, NO_ENTITY};
use crate::env::TurnRecord;
use crate::semantics::{ActItem, ActType, DialogueAct};

/// What the user is looking for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserGoal {
    /// `(slot, value)` index pairs over constraint slots.
    pub constraints: Vec<(usize, usize)>,
    /// Requestable slots whose values the user wants to learn.
    pub requests: Vec<usize>,
    pub satisfiable: bool,
}

impl UserGoal {
    pub fn constraint(&self, slot: usize) -> Option<usize> {
        self.constraints
            .iter()
            .find(|(s, _)| *s == slot)
            .map(|(_, v)| *v)
    }

    pub fn query_form(&self) -> Vec<(usize, Option<usize>)> {
        self.constraints
            .iter()
            .map(|&(s, v)| (s, Some(v)))
            .collect()
    }

    pub fn matches(&self, ontology: &Ontology, entity: usize) -> bool {
        ontology.entity_matches(entity, &self.query_form())
    }

    fn refresh_satisfiable(&mut self, ontology: &Ontology) {
        self.satisfiable = !ontology.query_indices(&self.query_form()).is_empty();
    }
}

/// Draws a goal from a uniformly chosen entity, so it is always satisfiable.
pub fn sample_goal<R: Rng + ?Sized>(
    ontology: &Ontology,
    params: &UserParams,
    rng: &mut R,
) -> UserGoal {
    let entity = rng.random_range(0..ontology.entities().len());
    let n_constraint = ontology.constraint_slots().len();
    let lo = (params.min_constraints as usize).clamp(1, n_constraint);
    let hi = (params.max_constraints as usize).clamp(lo, n_constraint);
    let n = rng.random_range(lo..=hi);
    let mut slots = ontology.constraint_slots().to_vec();
    slots.shuffle(rng);
    let constraints: Vec<(usize, usize)> = slots[..n]
        .iter()
        .map(|&s| (s, ontology.entity_value(entity, s)))
        .collect();

    let mut pool: Vec<usize> = ontology
        .requestable_slots()
        .iter()
        .copied()
        .filter(|&s| !ontology.slots()[s].is_constraint)
        .collect();
    if pool.is_empty() {
        pool = ontology
            .requestable_slots()
            .iter()
            .copied()
            .filter(|s| !constraints.iter().any(|(c, _)| c == s))
            .collect();
    }
    if pool.is_empty() {
        pool = ontology.requestable_slots().to_vec();
    }
    let lo = (params.min_requests as usize).clamp(1, pool.len());
    let hi = (params.max_requests as usize).clamp(lo, pool.len());
    let k = rng.random_range(lo..=hi);
    pool.shuffle(rng);
    let mut requests = pool[..k].to_vec();
    requests.sort_unstable();

    UserGoal {
        constraints,
        requests,
        satisfiable: true,
    }
}

/// Pending user acts; the last element is the top of the stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agenda {
    pub stack: Vec<DialogueAct>,
    pub goal: UserGoal,
    pub frustration: u32,
}

impl Agenda {
    fn new(ontology: &Ontology, goal: UserGoal) -> Self {
        let mut stack = vec![DialogueAct::bare(ActType::Bye)];
        for &r in goal.requests.iter().rev() {
            stack.push(DialogueAct::request(&ontology.slots()[r].name));
        }
        for &(s, v) in goal.constraints.iter().rev() {
            let slot = &ontology.slots()[s];
            stack.push(DialogueAct::inform(vec![ActItem::new(
                &slot.name,
                &slot.values[v],
            )]));
        }
        Agenda {
            stack,
            goal,
            frustration: 0,
        }
    }

    fn top_type(&self) -> ActType {
        self.stack.last().map_or(ActType::Bye, |a| a.act_type)
    }

    fn pop_inform(&mut self) -> Option<DialogueAct> {
        let i = self
            .stack
            .iter()
            .rposition(|a| a.act_type == ActType::Inform)?;
        Some(self.stack.remove(i))
    }

    fn remove_inform(&mut self, slot: &str) {
        self.stack
            .retain(|a| !(a.act_type == ActType::Inform && a.mentions(slot)));
    }

    fn pending_requests(&self) -> impl Iterator<Item = &DialogueAct> {
        self.stack
            .iter()
            .rev()
            .filter(|a| a.act_type == ActType::Request)
    }

    fn remove_request(&mut self, slot: &str) {
        self.stack
            .retain(|a| !(a.act_type == ActType::Request && a.mentions(slot)));
    }

    fn reset_requests(&mut self, ontology: &Ontology) {
        self.stack.retain(|a| a.act_type != ActType::Request);
        let bye = self
            .stack
            .iter()
            .position(|a| a.act_type == ActType::Bye)
            .map_or(0, |i| i + 1);
        for (k, &r) in self.goal.requests.iter().rev().enumerate() {
            self.stack
                .insert(bye + k, DialogueAct::request(&ontology.slots()[r].name));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.stack.is_empty()
    }
}

/// One simulated user for one dialogue.
#[derive(Debug, Clone)]
pub struct SimulatedUser {
    ontology: Arc<Ontology>,
    params: UserParams,
    agenda: Agenda,
    accepted: Option<usize>,
    accepted_no_match: bool,
    history: Vec<DialogueAct>,
    last_act: Option<DialogueAct>,
    goal_change_used: bool,
    changed_this_turn: bool,
    waiting: bool,
    finished: bool,
}

impl SimulatedUser {
    pub fn new(ontology: Arc<Ontology>, params: UserParams, goal: UserGoal) -> Self {
        let agenda = Agenda::new(&ontology, goal);
        SimulatedUser {
            ontology,
            params,
            agenda,
            accepted: None,
            accepted_no_match: false,
            history: Vec::new(),
            last_act: None,
            goal_change_used: false,
            changed_this_turn: false,
            waiting: false,
            finished: false,
        }
    }

    pub fn goal(&self) -> &UserGoal {
        &self.agenda.goal
    }

    pub fn params(&self) -> &UserParams {
        &self.params
    }

    pub fn agenda(&self) -> &Agenda {
        &self.agenda
    }

    pub fn accepted(&self) -> Option<usize> {
        self.accepted
    }

    pub fn frustration(&self) -> u32 {
        self.agenda.frustration
    }

    /// Whether the last response changed the goal.
    pub fn goal_changed(&self) -> bool {
        self.changed_this_turn
    }

    /// The user's own view of success: an accepted entity with every request
    /// answered, or a correctly acknowledged empty result.
    pub fn goal_met(&self) -> bool {
        self.accepted_no_match
            || (self.accepted.is_some() && self.agenda.pending_requests().next().is_none())
    }

    pub fn has_said_bye(&self) -> bool {
        self.finished
    }

    /// First user turn of the dialogue.
    pub fn open<R: Rng + ?Sized>(&mut self, rng: &mut R) -> DialogueAct {
        let act = if rng.random_bool(self.params.p_open_with_hello) {
            DialogueAct::bare(ActType::Hello)
        } else {
            self.pop_informs(Vec::new(), rng)
        };
        self.last_act = Some(act.clone());
        act
    }

    /// The user's true (noise-free) reply to `system`.
    pub fn respond<R: Rng + ?Sized>(&mut self, system: &DialogueAct, rng: &mut R) -> DialogueAct {
        let used_before = self.goal_change_used;
        let act = self.respond_inner(system, rng);
        if act.act_type == ActType::Bye {
            self.finished = true;
        }
        self.changed_this_turn = !used_before && self.goal_change_used;
        self.last_act = Some(act.clone());
        act
    }

    fn respond_inner<R: Rng + ?Sized>(&mut self, system: &DialogueAct, rng: &mut R) -> DialogueAct {
        let p = self.params.clone();
        if system.act_type == ActType::Bye {
            return DialogueAct::bare(ActType::Bye);
        }

        let repeated = self.history.contains(system);
        let premature = system.act_type == ActType::Reqmore && self.accepted.is_none();
        let unhelpful = repeated || premature;
        self.history.push(system.clone());
        if unhelpful {
            let tolerated =
                system.act_type == ActType::Request && rng.random_bool(p.p_patient_rerequest);
            if !tolerated {
                self.agenda.frustration = (self.agenda.frustration + 1).min(p.patience);
            }
        } else {
            self.agenda.frustration = 0;
        }
        if self.agenda.frustration >= p.patience {
            return DialogueAct::bare(ActType::Bye);
        }
        if self.waiting {
            return DialogueAct::bare(ActType::Bye);
        }
        if self.accepted.is_some()
            && !self.goal_change_used
            && rng.random_bool(p.p_random_goal_change)
        {
            return self.change_goal(rng);
        }
        if unhelpful {
            if let Some(last) = &self.last_act {
                if rng.random_bool(p.p_repeat) {
                    return last.clone();
                }
            }
        }
        if rng.random_bool(p.p_null) {
            return DialogueAct::bare(ActType::Null);
        }

        match system.act_type {
            ActType::Request => match system.items.first() {
                Some(item) => self.answer_request(&item.slot, rng),
                None => self.pop_default(rng),
            },
            ActType::Confirm => match system.items.first() {
                Some(ActItem {
                    slot,
                    value: Some(v),
                }) => {
                    let (slot, v) = (slot.clone(), v.clone());
                    self.answer_confirm(&slot, &v, rng)
                }
                _ => self.pop_default(rng),
            },
            ActType::Select => match system.items.first() {
                Some(item) => {
                    let slot = item.slot.clone();
                    self.answer_select(&slot, rng)
                }
                None => self.pop_default(rng),
            },
            t if t.is_offer() => self.handle_offer(system, rng),
            ActType::Reqmore => {
                if self.accepted.is_some() || self.accepted_no_match {
                    self.ask_or_finish(rng)
                } else {
                    self.pop_default(rng)
                }
            }
            _ => self.pop_default(rng),
        }
    }

    fn slot_name(&self, s: usize) -> &str {
        &self.ontology.slots()[s].name
    }

    fn value_name(&self, s: usize, v: usize) -> &str {
        &self.ontology.slots()[s].values[v]
    }

    fn goal_item(&self, s: usize) -> ActItem {
        match self.agenda.goal.constraint(s) {
            Some(v) => ActItem::new(self.slot_name(s), self.value_name(s, v)),
            None => ActItem::new(self.slot_name(s), DONTCARE),
        }
    }

    fn restate_goal(&self) -> DialogueAct {
        let items = self
            .agenda
            .goal
            .constraints
            .iter()
            .map(|&(s, _)| self.goal_item(s))
            .collect();
        DialogueAct::inform(items)
    }

    /// Adds volunteered constraints from the agenda to `items`.
    fn pop_informs<R: Rng + ?Sized>(
        &mut self,
        mut items: Vec<ActItem>,
        rng: &mut R,
    ) -> DialogueAct {
        if items.is_empty() {
            match self.agenda.pop_inform() {
                Some(a) => items.extend(a.items),
                None => return self.restate_goal(),
            }
        }
        if rng.random_bool(self.params.p_inform_all) {
            while let Some(a) = self.agenda.pop_inform() {
                items.extend(a.items);
            }
        } else if rng.random_bool(self.params.p_extra_info) {
            if let Some(a) = self.agenda.pop_inform() {
                items.extend(a.items);
            }
        }
        DialogueAct::inform(items)
    }

    /// Default behaviour: continue with whatever is on top of the agenda.
    fn pop_default<R: Rng + ?Sized>(&mut self, rng: &mut R) -> DialogueAct {
        match self.agenda.top_type() {
            ActType::Inform => self.pop_informs(Vec::new(), rng),
            ActType::Request => {
                if self.accepted.is_some() || rng.random_bool(self.params.p_request_before_offer) {
                    self.ask_requests(rng)
                } else {
                    self.restate_goal()
                }
            }
            _ => {
                if self.goal_met() {
                    self.finish(rng)
                } else {
                    self.restate_goal()
                }
            }
        }
    }

    fn ask_requests<R: Rng + ?Sized>(&mut self, rng: &mut R) -> DialogueAct {
        let all = rng.random_bool(self.params.p_request_all_at_once);
        let k = if all {
            usize::MAX
        } else {
            self.params.max_requests_per_turn.max(1) as usize
        };
        let mut items: Vec<ActItem> = self
            .agenda
            .pending_requests()
            .take(k)
            .flat_map(|a| a.items.iter().cloned())
            .collect();
        if let Some(e) = self.accepted {
            if rng.random_bool(self.params.p_by_name) {
                items.push(ActItem::new(NAME_SLOT, &self.ontology.entities()[e].id));
            }
        }
        DialogueAct::new(ActType::Request, items)
    }

    fn ask_or_finish<R: Rng + ?Sized>(&mut self, rng: &mut R) -> DialogueAct {
        if self.agenda.pending_requests().next().is_some() && !self.accepted_no_match {
            self.ask_requests(rng)
        } else {
            self.finish(rng)
        }
    }

    fn finish<R: Rng + ?Sized>(&mut self, rng: &mut R) -> DialogueAct {
        if rng.random_bool(self.params.p_wait_after_done) {
            self.waiting = true;
            DialogueAct::bare(ActType::Null)
        } else {
            DialogueAct::bare(ActType::Bye)
        }
    }

    fn answer_request<R: Rng + ?Sized>(&mut self, slot: &str, rng: &mut R) -> DialogueAct {
        let Some(s) = self.ontology.slot_index(slot) else {
            return self.pop_default(rng);
        };
        if self.agenda.goal.constraint(s).is_some() {
            self.agenda.remove_inform(slot);
            let item = self.goal_item(s);
            self.pop_informs_after(item, rng)
        } else if self.ontology.slots()[s].is_constraint && rng.random_bool(self.params.p_dontcare)
        {
            self.pop_informs_after(ActItem::new(slot, DONTCARE), rng)
        } else {
            self.pop_default(rng)
        }
    }

    /// An answer optionally followed by volunteered constraints.
    fn pop_informs_after<R: Rng + ?Sized>(&mut self, item: ActItem, rng: &mut R) -> DialogueAct {
        self.pop_informs(vec![item], rng)
    }

    fn answer_confirm<R: Rng + ?Sized>(
        &mut self,
        slot: &str,
        value: &str,
        rng: &mut R,
    ) -> DialogueAct {
        let p = self.params.clone();
        let Some(s) = self.ontology.slot_index(slot) else {
            return self.pop_default(rng);
        };
        if !rng.random_bool(p.p_confirm_when_asked) {
            return self.pop_default(rng);
        }
        let goal = self.agenda.goal.constraint(s);
        let correct = match goal {
            Some(v) => self.value_name(s, v) == value,
            None => true,
        };
        if correct {
            if goal.is_some() && rng.random_bool(p.p_restate_on_affirm) {
                self.agenda.remove_inform(slot);
                DialogueAct::inform(vec![ActItem::new(slot, value)])
            } else {
                DialogueAct::bare(ActType::Affirm)
            }
        } else if rng.random_bool(p.p_affirm_error) {
            DialogueAct::bare(ActType::Affirm)
        } else if rng.random_bool(p.p_deny_with_correction) {
            self.agenda.remove_inform(slot);
            DialogueAct::inform(vec![self.goal_item(s)])
        } else {
            DialogueAct::bare(ActType::Negate)
        }
    }

    fn answer_select<R: Rng + ?Sized>(&mut self, slot: &str, rng: &mut R) -> DialogueAct {
        let Some(s) = self.ontology.slot_index(slot) else {
            return self.pop_default(rng);
        };
        if !rng.random_bool(self.params.p_answer_select) {
            return self.pop_default(rng);
        }
        self.agenda.remove_inform(slot);
        DialogueAct::inform(vec![self.goal_item(s)])
    }

    fn handle_offer<R: Rng + ?Sized>(&mut self, system: &DialogueAct, rng: &mut R) -> DialogueAct {
        let p = self.params.clone();
        let entity = match system.entity() {
            None => return self.pop_default(rng),
            Some(NO_ENTITY) => {
                if no_match_is_correct(&self.ontology, &self.agenda.goal, system) {
                    self.accepted_no_match = true;
                    return self.finish(rng);
                }
                if rng.random_bool(p.p_bye_on_no_match) {
                    return DialogueAct::bare(ActType::Bye);
                }
                return self.correct(system, None);
            }
            Some(id) => match self.ontology.entity_index(id) {
                Some(e) => e,
                None => return self.pop_default(rng),
            },
        };

        if self.agenda.goal.matches(&self.ontology, entity) {
            if self.accepted != Some(entity) {
                self.accepted = Some(entity);
                self.agenda.reset_requests(&self.ontology);
            }
            self.agenda.stack.retain(|a| a.act_type != ActType::Inform);
            for item in &system.items {
                let Some(s) = self.ontology.slot_index(&item.slot) else {
                    continue;
                };
                let truthful =
                    item.value.as_deref() == Some(self.ontology.entity_value_name(entity, s));
                if truthful && self.agenda.goal.requests.contains(&s) {
                    self.agenda.remove_request(&item.slot);
                }
            }
            self.ask_or_finish(rng)
        } else if rng.random_bool(p.p_request_alternatives) {
            DialogueAct::bare(ActType::Reqalts)
        } else {
            self.correct(system, Some(entity))
        }
    }

    /// Corrective inform for a wrong offer or no-match claim: goal values for
    /// contradicted or missing constraints, dontcare for spurious ones.
    fn correct(&self, system: &DialogueAct, entity: Option<usize>) -> DialogueAct {
        let goal = &self.agenda.goal;
        let mut items: Vec<ActItem> = Vec::new();
        for item in &system.items {
            let Some(s) = self.ontology.slot_index(&item.slot) else {
                continue;
            };
            if !self.ontology.slots()[s].is_constraint {
                continue;
            }
            let wrong = match goal.constraint(s) {
                Some(v) => item.value.as_deref() != Some(self.value_name(s, v)),
                None => item.value.as_deref() != Some(DONTCARE),
            };
            if wrong {
                items.push(self.goal_item(s));
            }
        }
        for &(s, v) in &goal.constraints {
            let missing = match entity {
                Some(e) => self.ontology.entity_value(e, s) != v,
                None => !system.mentions(self.slot_name(s)),
            };
            if missing && !items.iter().any(|i| i.slot == self.slot_name(s)) {
                items.push(self.goal_item(s));
            }
        }
        if items.is_empty() {
            self.restate_goal()
        } else {
            DialogueAct::inform(items)
        }
    }

    fn change_goal<R: Rng + ?Sized>(&mut self, rng: &mut R) -> DialogueAct {
        self.goal_change_used = true;
        let k = rng.random_range(0..self.agenda.goal.constraints.len());
        let (s, old) = self.agenda.goal.constraints[k];
        let n_values = self.ontology.slots()[s].values.len();
        let candidates: Vec<usize> = if rng.random_bool(self.params.p_unsatisfiable_change) {
            (0..n_values).filter(|&v| v != old).collect()
        } else {
            let others: Vec<(usize, Option<usize>)> = self
                .agenda
                .goal
                .constraints
                .iter()
                .filter(|(c, _)| *c != s)
                .map(|&(c, v)| (c, Some(v)))
                .collect();
            let mut vals: Vec<usize> = self
                .ontology
                .query_indices(&others)
                .into_iter()
                .map(|e| self.ontology.entity_value(e, s))
                .filter(|&v| v != old)
                .collect();
            vals.sort_unstable();
            vals.dedup();
            vals
        };
        if let Some(&new) = candidates.get(rng.random_range(0..candidates.len().max(1))) {
            self.agenda.goal.constraints[k].1 = new;
        }
        self.agenda.goal.refresh_satisfiable(&self.ontology);
        if let Some(e) = self.accepted {
            if !self.agenda.goal.matches(&self.ontology, e) {
                self.accepted = None;
                self.agenda.reset_requests(&self.ontology);
            }
        }
        DialogueAct::inform(vec![self.goal_item(s)])
    }
}

/// A system no-match claim is correct when it covers every goal constraint
/// and nothing in the database satisfies the goal.
fn no_match_is_correct(ontology: &Ontology, goal: &UserGoal, act: &DialogueAct) -> bool {
    !goal.satisfiable
        && goal.constraints.iter().all(|&(s, v)| {
            let slot = &ontology.slots()[s];
            act.value_of(&slot.name) == Some(slot.values[v].as_str())
        })
}

/// Whether the dialogue in `trace` fulfilled `goal`: the system offered an
/// entity consistent with every constraint and informed every requested slot
/// of it, or correctly asserted that nothing matches. Only system acts after
/// the last goal change count.
pub fn is_goal_fulfilled(ontology: &Ontology, goal: &UserGoal, trace: &[TurnRecord]) -> bool {
    let start = trace
        .iter()
        .rposition(|t| t.goal_changed)
        .map_or(0, |i| i + 1);
    let mut candidate: Option<usize> = None;
    let mut informed = BTreeSet::new();
    let mut no_match = false;
    for turn in &trace[start..] {
        let Some(act) = &turn.system_act else {
            continue;
        };
        if !act.act_type.is_offer() {
            continue;
        }
        let entity = match act.entity() {
            Some(NO_ENTITY) => {
                no_match |= no_match_is_correct(ontology, goal, act);
                continue;
            }
            Some(id) => match ontology.entity_index(id) {
                Some(e) => e,
                None => continue,
            },
            None => continue,
        };
        if !goal.matches(ontology, entity) {
            continue;
        }
        if candidate != Some(entity) {
            candidate = Some(entity);
            informed.clear();
        }
        for item in &act.items {
            if let Some(s) = ontology.slot_index(&item.slot) {
                if item.value.as_deref() == Some(ontology.entity_value_name(entity, s)) {
                    informed.insert(s);
                }
            }
        }
    }
    no_match || (candidate.is_some() && goal.requests.iter().all(|r| informed.contains(r)))
}
