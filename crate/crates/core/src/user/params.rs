//! The 26-parameter behaviour profile of the simulated user and the interval
//! distributions it is resampled from at the start of every dialogue.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! user_params {
    (
        probabilities { $($p:ident: $pdoc:literal,)* }
        counts { $($c:ident: $cdoc:literal,)* }
    ) => {
        /// One sampled user profile. Probability parameters lie in `[0, 1]`;
        /// count parameters are positive integers.
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        pub struct UserParams {
            $(#[doc = $pdoc] pub $p: f64,)*
            $(#[doc = $cdoc] pub $c: u32,)*
        }

        impl UserParams {
            /// Parameter names in canonical sampling order.
            pub const NAMES: [&'static str; 26] = [$(stringify!($p),)* $(stringify!($c),)*];

            pub fn get(&self, name: &str) -> Option<f64> {
                match name {
                    $(stringify!($p) => Some(self.$p),)*
                    $(stringify!($c) => Some(self.$c as f64),)*
                    _ => None,
                }
            }

            /// Sets a parameter by name; counts are rounded.
            pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
                match name {
                    $(stringify!($p) => self.$p = value,)*
                    $(stringify!($c) => self.$c = value.round().max(0.0) as u32,)*
                    _ => return Err(Error::Config(format!("unknown user parameter `{name}`"))),
                }
                Ok(())
            }

            pub fn is_count(name: &str) -> bool {
                matches!(name, $(stringify!($c))|*)
            }

            fn from_values(values: &[f64; 26]) -> Self {
                let mut it = values.iter().copied();
                UserParams {
                    $($p: it.next().unwrap(),)*
                    $($c: it.next().unwrap() as u32,)*
                }
            }
        }
    };
}

user_params! {
    probabilities {
        p_inform_all: "Volunteer every pending constraint at once.",
        p_extra_info: "Volunteer one extra pending constraint alongside an answer.",
        p_open_with_hello: "Open the dialogue with `hello()` instead of a constraint.",
        p_repeat: "Repeat the previous user act verbatim after an unhelpful system act.",
        p_confirm_when_asked: "Answer a `confirm` explicitly rather than ignoring it.",
        p_affirm_error: "Affirm a confirmation of a wrong value.",
        p_restate_on_affirm: "Answer a correct confirmation with `inform(s=v)` instead of `affirm()`.",
        p_deny_with_correction: "Answer a wrong confirmation with the correct value instead of `negate()`.",
        p_answer_select: "Answer a `select` explicitly rather than ignoring it.",
        p_request_alternatives: "Ask for alternatives when offered an entity violating the goal.",
        p_by_name: "Name the offered entity when asking for its attributes.",
        p_bye_on_no_match: "Hang up when the system wrongly claims that nothing matches.",
        p_request_all_at_once: "Ask every outstanding request in one turn.",
        p_random_goal_change: "Per turn, after accepting an entity, change one constraint (once per dialogue).",
        p_unsatisfiable_change: "Draw the changed value from the whole slot rather than from matching entities.",
        p_dontcare: "Answer `dontcare` when asked about an unconstrained slot.",
        p_null: "Produce a `null()` act in a turn.",
        p_patient_rerequest: "Tolerate a repeated system request without growing frustrated.",
        p_wait_after_done: "Wait for the system with `null()` once the goal is met instead of saying bye.",
        p_request_before_offer: "Ask for attributes before any entity has been offered.",
    }
    counts {
        patience: "Unhelpful system turns tolerated; one more ends the dialogue.",
        max_requests_per_turn: "Requests asked per turn unless asking all at once.",
        min_constraints: "Lower bound of the goal size.",
        max_constraints: "Upper bound of the goal size (clipped to the constraint slots).",
        min_requests: "Lower bound on requested attributes.",
        max_requests: "Upper bound on requested attributes.",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Standard,
    Unfriendly,
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileKind::Standard => "standard",
            ProfileKind::Unfriendly => "unfriendly",
        })
    }
}

/// Per-parameter sampling intervals, in [`UserParams::NAMES`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDistribution {
    pub kind: ProfileKind,
    intervals: Vec<[f64; 2]>,
}

impl ProfileDistribution {
    pub fn standard() -> Self {
        let table: [(&str, f64, f64); 26] = [
            ("p_inform_all", 0.2, 0.6),
            ("p_extra_info", 0.3, 0.7),
            ("p_open_with_hello", 0.0, 0.2),
            ("p_repeat", 0.0, 0.2),
            ("p_confirm_when_asked", 0.8, 1.0),
            ("p_affirm_error", 0.0, 0.05),
            ("p_restate_on_affirm", 0.0, 0.3),
            ("p_deny_with_correction", 0.5, 1.0),
            ("p_answer_select", 0.8, 1.0),
            ("p_request_alternatives", 0.1, 0.4),
            ("p_by_name", 0.0, 0.3),
            ("p_bye_on_no_match", 0.0, 0.2),
            ("p_request_all_at_once", 0.2, 0.5),
            ("p_random_goal_change", 0.0, 0.03),
            ("p_unsatisfiable_change", 0.0, 0.3),
            ("p_dontcare", 0.8, 1.0),
            ("p_null", 0.0, 0.03),
            ("p_patient_rerequest", 0.5, 1.0),
            ("p_wait_after_done", 0.0, 0.2),
            ("p_request_before_offer", 0.0, 0.1),
            ("patience", 3.0, 5.0),
            ("max_requests_per_turn", 1.0, 2.0),
            ("min_constraints", 1.0, 2.0),
            ("max_constraints", 2.0, 4.0),
            ("min_requests", 1.0, 1.0),
            ("max_requests", 1.0, 3.0),
        ];
        Self::from_table(ProfileKind::Standard, &table)
    }

    /// Standard intervals except that users hardly volunteer information.
    pub fn unfriendly() -> Self {
        let mut d = Self::standard();
        d.kind = ProfileKind::Unfriendly;
        d.set("p_inform_all", 0.0, 0.05).unwrap();
        d.set("p_extra_info", 0.0, 0.1).unwrap();
        d.set("p_open_with_hello", 0.2, 0.5).unwrap();
        d.set("p_request_all_at_once", 0.0, 0.2).unwrap();
        d
    }

    pub fn for_kind(kind: ProfileKind) -> Self {
        match kind {
            ProfileKind::Standard => Self::standard(),
            ProfileKind::Unfriendly => Self::unfriendly(),
        }
    }

    fn from_table(kind: ProfileKind, table: &[(&str, f64, f64); 26]) -> Self {
        for (i, (name, _, _)) in table.iter().enumerate() {
            debug_assert_eq!(*name, UserParams::NAMES[i]);
        }
        ProfileDistribution {
            kind,
            intervals: table.iter().map(|(_, lo, hi)| [*lo, *hi]).collect(),
        }
    }

    /// Every parameter pinned to a single value.
    pub fn fixed(kind: ProfileKind, params: &UserParams) -> Self {
        ProfileDistribution {
            kind,
            intervals: UserParams::NAMES
                .iter()
                .map(|n| {
                    let v = params.get(n).unwrap();
                    [v, v]
                })
                .collect(),
        }
    }

    pub fn interval(&self, name: &str) -> Option<[f64; 2]> {
        UserParams::NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.intervals[i])
    }

    pub fn set(&mut self, name: &str, lo: f64, hi: f64) -> Result<()> {
        let i = UserParams::NAMES
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| Error::Config(format!("unknown user parameter `{name}`")))?;
        validate_interval(name, lo, hi)?;
        self.intervals[i] = [lo, hi];
        Ok(())
    }

    /// Applies `name -> [lo, hi]` overrides, e.g. from a `[simuser]` section.
    pub fn apply_overrides(&mut self, overrides: &BTreeMap<String, [f64; 2]>) -> Result<()> {
        for (name, [lo, hi]) in overrides {
            self.set(name, *lo, *hi)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in UserParams::NAMES.iter().zip(&self.intervals) {
            validate_interval(name, *lo, *hi)?;
        }
        Ok(())
    }

    /// Draws every parameter uniformly from its interval, in canonical order.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> UserParams {
        let mut values = [0.0; 26];
        for (i, name) in UserParams::NAMES.iter().enumerate() {
            let [lo, hi] = self.intervals[i];
            let u: f64 = rng.random();
            values[i] = if UserParams::is_count(name) {
                let (a, b) = (lo.ceil() as u32, hi.floor() as u32);
                (a + ((u * (b - a + 1) as f64) as u32).min(b - a)) as f64
            } else {
                lo + (hi - lo) * u
            };
        }
        UserParams::from_values(&values)
    }
}

fn validate_interval(name: &str, lo: f64, hi: f64) -> Result<()> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::Config(format!(
            "`{name}`: empty interval [{lo}, {hi}]"
        )));
    }
    if UserParams::is_count(name) {
        if lo < 1.0 || hi.floor() < lo.ceil() {
            return Err(Error::Config(format!(
                "`{name}`: count interval [{lo}, {hi}] must contain an integer >= 1"
            )));
        }
    } else if lo < 0.0 || hi > 1.0 {
        return Err(Error::Config(format!(
            "`{name}`: probability interval outside [0, 1]"
        )));
    }
    Ok(())
}

/// Convenience wrapper matching the operation name used throughout the crate.
pub fn sample_params<R: Rng + ?Sized>(profile: &ProfileDistribution, rng: &mut R) -> UserParams {
    profile.sample(rng)
}
