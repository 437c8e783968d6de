//! Rule-based baseline. Stateless: the same belief always yields the same
//! action, whatever the training history.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::actions::{compute_mask, SummaryAction};
use crate::domain::Ontology;
use crate::tracker::{BeliefState, Method, NONE_IDX};

/// Entity count above which the policy keeps asking for constraints.
pub const N_THRESHOLD: usize = 3;
pub const CONFIRM_LOW: f64 = 0.3;
pub const CONFIRM_HIGH: f64 = 0.8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Handcrafted {
    #[serde(skip)]
    ontology: Option<Arc<Ontology>>,
    pub domain: String,
}

impl Handcrafted {
    pub fn new(ontology: Arc<Ontology>) -> Self {
        let domain = ontology.code().to_string();
        Handcrafted {
            ontology: Some(ontology),
            domain,
        }
    }

    pub fn attach(&mut self, ontology: Arc<Ontology>) {
        self.ontology = Some(ontology);
    }

    /// Candidate actions in rule order; the first legal one is taken.
    fn candidates(&self, belief: &BeliefState, ontology: &Ontology) -> Vec<SummaryAction> {
        let mut out = Vec::new();
        let n = ontology.constraint_slots().len();
        if belief.requested.iter().any(|&p| p > 0.5) && belief.offered.is_some() {
            out.push(SummaryAction::InformRequested);
        }
        if belief.method_top() == Method::ByAlternatives {
            out.push(SummaryAction::InformAlternatives);
        }
        for k in 0..n {
            let (_, p) = belief.slot_top_informative(k);
            if (CONFIRM_LOW..CONFIRM_HIGH).contains(&p) {
                out.push(SummaryAction::Confirm(k));
            }
        }
        let mut uncertain: Vec<(usize, f64)> = (0..n)
            .filter_map(|k| {
                let (_, p) = belief.slot_top_informative(k);
                (belief.slot_top(k) == NONE_IDX || p < CONFIRM_LOW).then_some((k, p))
            })
            .collect();
        if !uncertain.is_empty()
            && ontology
                .query_indices(&belief.top_constraints(ontology))
                .len()
                > N_THRESHOLD
        {
            uncertain.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            out.extend(uncertain.iter().map(|&(k, _)| SummaryAction::Request(k)));
        }
        out.push(SummaryAction::InformByConstraints);
        if belief.method_top() == Method::Finished {
            out.push(SummaryAction::Bye);
        }
        out.push(SummaryAction::Reqmore);
        out.push(SummaryAction::Bye);
        out
    }

    /// First rule whose action is legal under both `mask` and the policy's
    /// own masks-on heuristics.
    pub fn choose(&self, belief: &BeliefState, mask: &[bool]) -> usize {
        let ontology = self
            .ontology
            .as_ref()
            .expect("handcrafted policy needs an ontology");
        let own = compute_mask(belief, ontology, true);
        let legal = |i: usize| mask.get(i).copied().unwrap_or(false) && own[i];
        self.candidates(belief, ontology)
            .into_iter()
            .map(SummaryAction::index)
            .find(|&i| legal(i))
            .or_else(|| mask.iter().position(|&m| m))
            .expect("mask has a legal action")
    }
}
