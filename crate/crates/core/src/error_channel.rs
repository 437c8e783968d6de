//! Semantic-level input channel: turns the true user act into a scored
//! N-best list, corrupting the top hypothesis at the configured error rate.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::domain::{Ontology, DONTCARE, NAME_SLOT};
use crate::error::{Error, Result};
use crate::semantics::{ActItem, ActType, DialogueAct, NBestList, ScoredHypothesis};

macro_rules! error_params {
    ( $($f:ident: $doc:literal,)* ) => {
        /// The 41 channel parameters. `nbest_max` is integral; everything
        /// else is real.
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        pub struct ErrorParams {
            /// Upper bound on the N-best length.
            pub nbest_max: usize,
            $(#[doc = $doc] pub $f: f64,)*
        }

        impl ErrorParams {
            pub const NAMES: [&'static str; 41] = ["nbest_max", $(stringify!($f),)*];

            pub fn get(&self, name: &str) -> Option<f64> {
                match name {
                    "nbest_max" => Some(self.nbest_max as f64),
                    $(stringify!($f) => Some(self.$f),)*
                    _ => None,
                }
            }

            pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
                match name {
                    "nbest_max" => self.nbest_max = value.round().max(1.0) as usize,
                    $(stringify!($f) => self.$f = value,)*
                    _ => return Err(Error::Config(format!("unknown error-model parameter `{name}`"))),
                }
                Ok(())
            }
        }
    };
}

error_params! {
    ser: "Probability that the top hypothesis is not the true act.",
    len_w1: "N-best length weight for length 1.",
    len_w2: "N-best length weight for length 2.",
    len_w3: "N-best length weight for length 3.",
    len_w4: "N-best length weight for length 4.",
    len_w5: "N-best length weight for length 5.",
    correct_top_alpha: "Beta shape a of the top confidence when the top is correct.",
    correct_top_beta: "Beta shape b of the top confidence when the top is correct.",
    incorrect_top_alpha: "Beta shape a of the top confidence when the top is wrong.",
    incorrect_top_beta: "Beta shape b of the top confidence when the top is wrong.",
    tail_alpha: "Beta shape a of the share taken by each lower hypothesis.",
    tail_beta: "Beta shape b of the share taken by each lower hypothesis.",
    confuse_act_type: "Weight of act-type substitution for a corrupted top.",
    confuse_slot: "Weight of slot substitution for a corrupted top.",
    confuse_value: "Weight of value substitution for a corrupted top.",
    residual_floor: "Mass always left unassigned.",
    conf_floor: "Minimum top confidence.",
    conf_cap: "Maximum top confidence.",
    tail_decay: "Multiplier applied to the tail share at each lower rank.",
    tail_scale: "Fraction of the remaining mass available to the tail.",
    to_inform: "Act-type substitution weight towards inform.",
    to_request: "Act-type substitution weight towards request.",
    to_affirm: "Act-type substitution weight towards affirm.",
    to_negate: "Act-type substitution weight towards negate.",
    to_deny: "Act-type substitution weight towards deny.",
    to_reqalts: "Act-type substitution weight towards reqalts.",
    to_bye: "Act-type substitution weight towards bye.",
    to_hello: "Act-type substitution weight towards hello.",
    to_null: "Act-type substitution weight towards null.",
    to_repeat: "Act-type substitution weight towards repeat.",
    tail_act_type: "Weight of act-type substitution for tail hypotheses.",
    tail_slot: "Weight of slot substitution for tail hypotheses.",
    tail_value: "Weight of value substitution for tail hypotheses.",
    p_true_in_tail: "Probability the true act reappears below a corrupted top.",
    p_value_dontcare: "Probability a value substitution yields dontcare.",
    p_drop_item: "Probability a confusion also drops an untouched item.",
    p_add_item: "Probability a confusion of an inform adds a spurious item.",
    p_confuse_all_items: "Probability a value substitution hits every item.",
    p_keep_items_on_type_swap: "Probability an act-type swap keeps compatible items.",
    item_penalty: "Top-confidence multiplier per item beyond the first.",
}

impl ErrorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.ser) {
            return bad(format!("ser {} outside [0,1]", self.ser));
        }
        if self.nbest_max == 0 {
            return bad("nbest_max must be at least 1".into());
        }
        for name in Self::NAMES.iter().skip(1) {
            let v = self.get(name).unwrap();
            if !v.is_finite() || v < 0.0 {
                return bad(format!(
                    "error-model parameter `{name}` must be finite and non-negative"
                ));
            }
        }
        let positive = [
            self.correct_top_alpha,
            self.correct_top_beta,
            self.incorrect_top_alpha,
            self.incorrect_top_beta,
            self.tail_alpha,
            self.tail_beta,
        ];
        if positive.iter().any(|&v| v <= 0.0) {
            return bad("beta shape parameters must be positive".into());
        }
        if self.length_weights().iter().sum::<f64>() <= 0.0 {
            return bad("N-best length weights must not all be zero".into());
        }
        if self.confuse_act_type + self.confuse_slot + self.confuse_value <= 0.0 {
            return bad("confusion weights must not all be zero".into());
        }
        if self.residual_floor >= 1.0 || self.conf_floor > self.conf_cap || self.conf_cap > 1.0 {
            return bad("confidence bounds are inconsistent".into());
        }
        Ok(())
    }

    fn length_weights(&self) -> [f64; 5] {
        [
            self.len_w1,
            self.len_w2,
            self.len_w3,
            self.len_w4,
            self.len_w5,
        ]
    }

    fn act_targets(&self) -> [(ActType, f64); 10] {
        [
            (ActType::Inform, self.to_inform),
            (ActType::Request, self.to_request),
            (ActType::Affirm, self.to_affirm),
            (ActType::Negate, self.to_negate),
            (ActType::Deny, self.to_deny),
            (ActType::Reqalts, self.to_reqalts),
            (ActType::Bye, self.to_bye),
            (ActType::Hello, self.to_hello),
            (ActType::Null, self.to_null),
            (ActType::Repeat, self.to_repeat),
        ]
    }

    fn base(ser: f64) -> Self {
        ErrorParams {
            nbest_max: 5,
            ser,
            len_w1: 0.3,
            len_w2: 0.3,
            len_w3: 0.2,
            len_w4: 0.1,
            len_w5: 0.1,
            correct_top_alpha: 8.0,
            correct_top_beta: 2.0,
            incorrect_top_alpha: 3.0,
            incorrect_top_beta: 3.0,
            tail_alpha: 2.0,
            tail_beta: 5.0,
            confuse_act_type: 0.2,
            confuse_slot: 0.4,
            confuse_value: 0.4,
            residual_floor: 0.01,
            conf_floor: 0.05,
            conf_cap: 0.99,
            tail_decay: 0.7,
            tail_scale: 0.8,
            to_inform: 0.25,
            to_request: 0.15,
            to_affirm: 0.1,
            to_negate: 0.1,
            to_deny: 0.05,
            to_reqalts: 0.1,
            to_bye: 0.05,
            to_hello: 0.05,
            to_null: 0.1,
            to_repeat: 0.05,
            tail_act_type: 0.2,
            tail_slot: 0.4,
            tail_value: 0.4,
            p_true_in_tail: 0.6,
            p_value_dontcare: 0.05,
            p_drop_item: 0.1,
            p_add_item: 0.1,
            p_confuse_all_items: 0.1,
            p_keep_items_on_type_swap: 0.5,
            item_penalty: 0.97,
        }
    }
}

/// The three parameter groups shared by the environments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorGroup {
    G12,
    G345,
    G6,
}

impl ErrorGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorGroup::G12 => "G12",
            ErrorGroup::G345 => "G345",
            ErrorGroup::G6 => "G6",
        }
    }
}

impl fmt::Display for ErrorGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "G12" => Ok(ErrorGroup::G12),
            "G345" => Ok(ErrorGroup::G345),
            "G6" => Ok(ErrorGroup::G6),
            _ => Err(Error::Config(format!("unknown error-model preset `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPreset {
    pub group: ErrorGroup,
    pub params: ErrorParams,
}

impl ErrorPreset {
    pub fn new(group: ErrorGroup) -> Self {
        let params = match group {
            // Noise-free group: a single hypothesis per turn.
            ErrorGroup::G12 => ErrorParams {
                len_w1: 1.0,
                len_w2: 0.0,
                len_w3: 0.0,
                len_w4: 0.0,
                len_w5: 0.0,
                correct_top_alpha: 9.0,
                correct_top_beta: 1.0,
                ..ErrorParams::base(0.0)
            },
            ErrorGroup::G345 => ErrorParams::base(0.15),
            ErrorGroup::G6 => ErrorParams {
                len_w1: 0.2,
                len_w2: 0.3,
                len_w3: 0.2,
                len_w4: 0.15,
                len_w5: 0.15,
                correct_top_alpha: 6.0,
                correct_top_beta: 2.0,
                incorrect_top_alpha: 2.5,
                incorrect_top_beta: 3.0,
                tail_beta: 4.0,
                ..ErrorParams::base(0.30)
            },
        };
        ErrorPreset { group, params }
    }
}

/// Preset used by environment `env_index` (1-based).
pub fn preset_for_env(env_index: usize) -> Result<ErrorPreset> {
    match env_index {
        1 | 2 => Ok(ErrorPreset::new(ErrorGroup::G12)),
        3..=5 => Ok(ErrorPreset::new(ErrorGroup::G345)),
        6 => Ok(ErrorPreset::new(ErrorGroup::G6)),
        _ => Err(Error::Config(format!(
            "environment index {env_index} outside 1..=6"
        ))),
    }
}

#[derive(Debug, Clone, Copy)]
enum Confusion {
    ActType,
    Slot,
    Value,
}

fn pick_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    Beta::new(a, b)
        .map(|d| d.sample(rng))
        .unwrap_or(a / (a + b))
}

/// Builds the N-best list observed for the true user act.
pub fn corrupt<R: Rng + ?Sized>(
    act: &DialogueAct,
    params: &ErrorParams,
    ontology: &Ontology,
    rng: &mut R,
) -> NBestList {
    let corrupted = params.ser > 0.0 && rng.random_bool(params.ser.min(1.0));
    let split = [
        params.confuse_act_type,
        params.confuse_slot,
        params.confuse_value,
    ];
    let top = if corrupted {
        confuse(act, params, &split, ontology, rng)
    } else {
        act.clone()
    };

    let max_len = params.nbest_max.max(1);
    let weights = params.length_weights();
    let len = (pick_weighted(&weights[..weights.len().min(max_len)], rng) + 1).min(max_len);

    let mut acts = vec![top];
    if corrupted && len > 1 && rng.random_bool(params.p_true_in_tail.min(1.0)) {
        acts.push(act.clone());
    }
    let tail_split = [params.tail_act_type, params.tail_slot, params.tail_value];
    let mut attempts = 0;
    while acts.len() < len && attempts < 8 * len {
        attempts += 1;
        let cand = confuse(act, params, &tail_split, ontology, rng);
        if !acts.contains(&cand) {
            acts.push(cand);
        }
    }

    let (a, b) = if corrupted {
        (params.incorrect_top_alpha, params.incorrect_top_beta)
    } else {
        (params.correct_top_alpha, params.correct_top_beta)
    };
    let items = acts[0].items.len().max(1) as i32;
    let available = 1.0 - params.residual_floor;
    let top_conf = (beta(a, b, rng) * params.item_penalty.powi(items - 1))
        .clamp(params.conf_floor, params.conf_cap)
        .min(available);

    let mut confs = vec![top_conf];
    let mut remaining = (available - top_conf).max(0.0) * params.tail_scale;
    let mut share = 1.0;
    for _ in 1..acts.len() {
        let c = (remaining * beta(params.tail_alpha, params.tail_beta, rng) * share)
            .min(*confs.last().unwrap());
        remaining -= c;
        share *= params.tail_decay;
        confs.push(c);
    }

    let hyps = acts
        .into_iter()
        .zip(confs)
        .map(|(act, confidence)| ScoredHypothesis { act, confidence })
        .collect();
    NBestList::new(hyps).expect("confidences are bounded by construction")
}

/// A well-formed act over `ontology` that differs from `act`.
fn confuse<R: Rng + ?Sized>(
    act: &DialogueAct,
    params: &ErrorParams,
    split: &[f64; 3],
    ontology: &Ontology,
    rng: &mut R,
) -> DialogueAct {
    let mode = match pick_weighted(split, rng) {
        0 => Confusion::ActType,
        1 => Confusion::Slot,
        _ => Confusion::Value,
    };
    for _ in 0..8 {
        let cand = match mode {
            Confusion::Value => confuse_value(act, params, ontology, rng)
                .or_else(|| confuse_slot(act, params, ontology, rng)),
            Confusion::Slot => confuse_slot(act, params, ontology, rng),
            Confusion::ActType => None,
        }
        .unwrap_or_else(|| confuse_act_type(act, params, ontology, rng));
        if &cand != act {
            return cand;
        }
    }
    if act.act_type == ActType::Null {
        DialogueAct::bare(ActType::Repeat)
    } else {
        DialogueAct::bare(ActType::Null)
    }
}

fn random_constraint_item<R: Rng + ?Sized>(ontology: &Ontology, rng: &mut R) -> ActItem {
    let cs = ontology.constraint_slots();
    let s = cs[rng.random_range(0..cs.len())];
    let slot = &ontology.slots()[s];
    ActItem::new(
        &slot.name,
        &slot.values[rng.random_range(0..slot.values.len())],
    )
}

fn random_requestable<R: Rng + ?Sized>(ontology: &Ontology, rng: &mut R) -> ActItem {
    let rs = ontology.requestable_slots();
    ActItem::slot_only(&ontology.slots()[rs[rng.random_range(0..rs.len())]].name)
}

fn confuse_act_type<R: Rng + ?Sized>(
    act: &DialogueAct,
    params: &ErrorParams,
    ontology: &Ontology,
    rng: &mut R,
) -> DialogueAct {
    let targets: Vec<(ActType, f64)> = params
        .act_targets()
        .into_iter()
        .filter(|(t, w)| *t != act.act_type && *w > 0.0)
        .collect();
    if targets.is_empty() {
        return DialogueAct::bare(if act.act_type == ActType::Null {
            ActType::Repeat
        } else {
            ActType::Null
        });
    }
    let weights: Vec<f64> = targets.iter().map(|(_, w)| *w).collect();
    let target = targets[pick_weighted(&weights, rng)].0;
    let keep = !act.items.is_empty() && rng.random_bool(params.p_keep_items_on_type_swap.min(1.0));
    let items = match target {
        t if t.is_itemless() => Vec::new(),
        ActType::Request => {
            let kept: Vec<ActItem> = act
                .items
                .iter()
                .filter(|i| {
                    ontology
                        .slot_index(&i.slot)
                        .is_some_and(|s| ontology.slots()[s].is_requestable)
                })
                .map(|i| ActItem::slot_only(&i.slot))
                .collect();
            if keep && !kept.is_empty() {
                kept
            } else {
                vec![random_requestable(ontology, rng)]
            }
        }
        ActType::Reqalts => Vec::new(),
        _ => {
            let kept: Vec<ActItem> = act
                .items
                .iter()
                .filter(|i| {
                    i.value.is_some()
                        && ontology
                            .slot_index(&i.slot)
                            .is_some_and(|s| ontology.slots()[s].is_constraint)
                })
                .cloned()
                .collect();
            if keep && !kept.is_empty() {
                kept
            } else {
                vec![random_constraint_item(ontology, rng)]
            }
        }
    };
    DialogueAct::new(target, items)
}

fn confuse_slot<R: Rng + ?Sized>(
    act: &DialogueAct,
    params: &ErrorParams,
    ontology: &Ontology,
    rng: &mut R,
) -> Option<DialogueAct> {
    let candidates: Vec<usize> = act
        .items
        .iter()
        .enumerate()
        .filter(|(_, i)| i.slot != NAME_SLOT)
        .map(|(k, _)| k)
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let k = candidates[rng.random_range(0..candidates.len())];
    let mut out = act.clone();
    let old = &act.items[k].slot;
    if act.items[k].value.is_none() {
        let pool: Vec<usize> = ontology
            .requestable_slots()
            .iter()
            .copied()
            .filter(|&s| &ontology.slots()[s].name != old)
            .collect();
        if pool.is_empty() {
            return None;
        }
        let s = pool[rng.random_range(0..pool.len())];
        out.items[k] = ActItem::slot_only(&ontology.slots()[s].name);
    } else {
        let pool: Vec<usize> = ontology
            .constraint_slots()
            .iter()
            .copied()
            .filter(|&s| &ontology.slots()[s].name != old)
            .collect();
        if pool.is_empty() {
            return None;
        }
        let s = pool[rng.random_range(0..pool.len())];
        let slot = &ontology.slots()[s];
        out.items[k] = ActItem::new(
            &slot.name,
            &slot.values[rng.random_range(0..slot.values.len())],
        );
    }
    dedup_slots(&mut out, k);
    post_edit(&mut out, k, params, ontology, rng);
    Some(out)
}

fn confuse_value<R: Rng + ?Sized>(
    act: &DialogueAct,
    params: &ErrorParams,
    ontology: &Ontology,
    rng: &mut R,
) -> Option<DialogueAct> {
    let valued: Vec<usize> = act
        .items
        .iter()
        .enumerate()
        .filter(|(_, i)| i.value.is_some())
        .map(|(k, _)| k)
        .collect();
    if valued.is_empty() {
        return None;
    }
    let all = valued.len() > 1 && rng.random_bool(params.p_confuse_all_items.min(1.0));
    let chosen: Vec<usize> = if all {
        valued.clone()
    } else {
        vec![valued[rng.random_range(0..valued.len())]]
    };
    let mut out = act.clone();
    for &k in &chosen {
        let item = &act.items[k];
        let old = item.value.as_deref().unwrap();
        let new = if item.slot == NAME_SLOT {
            let es = ontology.entities();
            let pool: Vec<&str> = es
                .iter()
                .map(|e| e.id.as_str())
                .filter(|id| *id != old)
                .collect();
            pool.get(rng.random_range(0..pool.len().max(1)))
                .map(|s| s.to_string())
        } else {
            let s = ontology.slot_index(&item.slot)?;
            let slot = &ontology.slots()[s];
            if slot.is_constraint
                && old != DONTCARE
                && rng.random_bool(params.p_value_dontcare.min(1.0))
            {
                Some(DONTCARE.to_string())
            } else {
                let pool: Vec<&String> = slot.values.iter().filter(|v| v.as_str() != old).collect();
                pool.get(rng.random_range(0..pool.len().max(1)))
                    .map(|s| s.to_string())
            }
        };
        out.items[k].value = Some(new?);
    }
    post_edit(&mut out, chosen[0], params, ontology, rng);
    Some(out)
}

fn dedup_slots(act: &mut DialogueAct, keep: usize) {
    let slot = act.items[keep].slot.clone();
    let mut k = 0;
    act.items.retain(|i| {
        let ok = k == keep || i.slot != slot;
        k += 1;
        ok
    });
}

/// Optional structural noise on top of a substitution at `changed`.
fn post_edit<R: Rng + ?Sized>(
    act: &mut DialogueAct,
    changed: usize,
    params: &ErrorParams,
    ontology: &Ontology,
    rng: &mut R,
) {
    let changed_slot = act.items.get(changed).map(|i| i.slot.clone());
    if act.items.len() > 1 && rng.random_bool(params.p_drop_item.min(1.0)) {
        let others: Vec<usize> = (0..act.items.len())
            .filter(|&k| Some(&act.items[k].slot) != changed_slot.as_ref())
            .collect();
        if !others.is_empty() {
            act.items.remove(others[rng.random_range(0..others.len())]);
        }
    }
    if act.act_type == ActType::Inform && rng.random_bool(params.p_add_item.min(1.0)) {
        let extra = random_constraint_item(ontology, rng);
        if !act.mentions(&extra.slot) {
            act.items.push(extra);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{generate_domain, DomainCode};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cr() -> Ontology {
        generate_domain(DomainCode::CR, 7)
    }

    fn sample_act(o: &Ontology) -> DialogueAct {
        let food = &o.slots()[o.slot_index("food").unwrap()];
        DialogueAct::inform(vec![ActItem::new("food", &food.values[0])])
    }

    #[test]
    fn exactly_41_parameters() {
        assert_eq!(ErrorParams::NAMES.len(), 41);
        let p = ErrorParams::base(0.1);
        for n in ErrorParams::NAMES {
            assert!(p.get(n).is_some(), "{n}");
        }
    }

    #[test]
    fn presets_by_env() {
        let groups: Vec<(ErrorGroup, f64)> = (1..=6)
            .map(|e| {
                let p = preset_for_env(e).unwrap();
                (p.group, p.params.ser)
            })
            .collect();
        assert_eq!(groups[0], (ErrorGroup::G12, 0.0));
        assert_eq!(groups[1], (ErrorGroup::G12, 0.0));
        assert_eq!(groups[3], (ErrorGroup::G345, 0.15));
        assert_eq!(groups[5], (ErrorGroup::G6, 0.30));
        assert!(preset_for_env(0).is_err());
        assert!(preset_for_env(7).is_err());
        for g in [ErrorGroup::G12, ErrorGroup::G345, ErrorGroup::G6] {
            ErrorPreset::new(g).params.validate().unwrap();
        }
    }

    #[test]
    fn zero_ser_never_corrupts() {
        let o = cr();
        let act = sample_act(&o);
        let p = ErrorPreset::new(ErrorGroup::G12).params;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let nb = corrupt(&act, &p, &o, &mut rng);
            assert_eq!(nb.top().unwrap().act, act);
            assert_eq!(nb.len(), 1);
        }
    }

    #[test]
    fn lists_are_normalized_and_bounded() {
        let o = cr();
        let p = ErrorPreset::new(ErrorGroup::G6).params;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let acts = [
            sample_act(&o),
            DialogueAct::request("phone"),
            DialogueAct::bare(ActType::Affirm),
            DialogueAct::bare(ActType::Null),
            DialogueAct::inform(vec![ActItem::new(NAME_SLOT, &o.entities()[0].id)]),
        ];
        for i in 0..5000 {
            let act = &acts[i % acts.len()];
            let nb = corrupt(act, &p, &o, &mut rng);
            assert!((nb.total_mass() - 1.0).abs() < 1e-9);
            assert!(nb.len() <= p.nbest_max && !nb.is_empty());
            for w in nb.hypotheses().windows(2) {
                assert!(w[0].confidence >= w[1].confidence);
            }
            for h in nb.hypotheses() {
                h.act.validate(Some(&o)).unwrap();
            }
        }
    }

    #[test]
    fn correct_tops_are_more_confident() {
        let o = cr();
        let act = sample_act(&o);
        let p = ErrorPreset::new(ErrorGroup::G345).params;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut good, mut ng, mut bad, mut nb_) = (0.0, 0, 0.0, 0);
        for _ in 0..10_000 {
            let nb = corrupt(&act, &p, &o, &mut rng);
            let top = nb.top().unwrap();
            if top.act == act {
                good += top.confidence;
                ng += 1;
            } else {
                bad += top.confidence;
                nb_ += 1;
            }
        }
        assert!(good / ng as f64 > bad / nb_ as f64);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = ErrorParams::base(0.1);
        p.ser = 1.5;
        assert!(p.validate().is_err());
        let mut p = ErrorParams::base(0.1);
        p.tail_alpha = 0.0;
        assert!(p.validate().is_err());
        let mut p = ErrorParams::base(0.1);
        assert!(p.set("bogus", 1.0).is_err());
        p.set("nbest_max", 3.0).unwrap();
        assert_eq!(p.nbest_max, 3);
    }
}
