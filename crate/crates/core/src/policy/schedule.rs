use serde::{Deserialize, Serialize};

/// Linear annealing from `eps0` to `eps_final`, flat afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub eps0: f64,
    pub eps_final: f64,
    pub anneal_dialogues: u64,
}

impl EpsilonSchedule {
    pub const EPS_FINAL: f64 = 0.05;
    pub const ANNEAL_DIALOGUES: u64 = 4000;

    pub fn new(eps0: f64) -> Self {
        EpsilonSchedule {
            eps0,
            eps_final: Self::EPS_FINAL,
            anneal_dialogues: Self::ANNEAL_DIALOGUES,
        }
    }

    pub fn at(&self, dialogue_index: u64) -> f64 {
        // Exact at and after the end of annealing, not merely within rounding.
        if dialogue_index >= self.anneal_dialogues {
            return self.eps_final;
        }
        let frac = dialogue_index as f64 / self.anneal_dialogues as f64;
        self.eps0 + (self.eps_final - self.eps0) * frac
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_midpoint() {
        let s = EpsilonSchedule::new(0.3);
        assert_eq!(s.at(0), 0.3);
        assert_eq!(s.at(4000), 0.05);
        assert!((s.at(2000) - 0.175).abs() < 1e-12);
        assert!((s.at(100_000) - 0.05).abs() < 1e-15);
    }
}
