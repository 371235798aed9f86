//! Behaviors: conditional probability tables `p(a⃗|x⃗)` over a scenario.

use num::Zero;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rational::{serde_rational_vec, Rational};
use crate::scenario::{tuples, Scenario};

/// A behavior `p(a⃗|x⃗)`: one exact probability per table cell, laid out per
/// the [`Scenario`] flat indexing contract.
///
/// Construction only checks the table length; probabilistic well-formedness
/// is a separate, reportable check ([`Behavior::validate`]), as is the
/// no-signaling property ([`Behavior::check_no_signaling`]). Behaviors are
/// immutable once built.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBehavior")]
pub struct Behavior {
    scenario: Scenario,
    #[serde(rename = "probabilities", with = "serde_rational_vec")]
    table: Vec<Rational>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    provenance: Option<String>,
}

#[derive(Deserialize)]
struct RawBehavior {
    scenario: Scenario,
    probabilities: Vec<String>,
    #[serde(default)]
    provenance: Option<String>,
}

impl TryFrom<RawBehavior> for Behavior {
    type Error = Error;

    fn try_from(raw: RawBehavior) -> Result<Self, Error> {
        let table = raw
            .probabilities
            .iter()
            .map(|s| crate::rational::parse(s))
            .collect::<Result<Vec<_>, _>>()?;
        let mut b = Behavior::new(raw.scenario, table)?;
        b.provenance = raw.provenance;
        Ok(b)
    }
}

/// One way a table can fail to be a probability distribution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValidationFailure {
    /// A negative entry at `p(outcomes|settings)`.
    Negative {
        settings: Vec<usize>,
        outcomes: Vec<usize>,
        value: Rational,
    },
    /// A joint setting whose outcome probabilities do not sum to one.
    Normalization { settings: Vec<usize>, sum: Rational },
}

/// A witnessed violation of a no-signaling constraint: for `party`, the
/// marginal over the remaining parties' outcomes differs between two of that
/// party's settings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NsViolation {
    /// The party whose setting influences the others.
    pub party: usize,
    /// Settings of the other parties, in increasing party order.
    pub fixed_settings: Vec<usize>,
    /// Outcomes of the other parties, in increasing party order.
    pub fixed_outcomes: Vec<usize>,
    /// The two settings of `party` whose marginals differ.
    pub setting_pair: (usize, usize),
    /// Marginal at `setting_pair.0` minus marginal at `setting_pair.1`.
    pub discrepancy: Rational,
}

impl Behavior {
    /// Wraps a table, checking only that its length is `(M*d)^N`.
    pub fn new(scenario: Scenario, table: Vec<Rational>) -> Result<Self, Error> {
        if table.len() != scenario.table_len() {
            return Err(Error::Dimension(format!(
                "table has {} entries, scenario {scenario} needs {}",
                table.len(),
                scenario.table_len()
            )));
        }
        Ok(Behavior {
            scenario,
            table,
            provenance: None,
        })
    }

    /// Builds a table cell by cell from `f(settings, outcomes)`.
    pub fn from_fn(
        scenario: Scenario,
        mut f: impl FnMut(&[usize], &[usize]) -> Rational,
    ) -> Self {
        let mut table = Vec::with_capacity(scenario.table_len());
        for x in scenario.joint_settings_iter() {
            for a in scenario.joint_outcomes_iter() {
                table.push(f(&x, &a));
            }
        }
        Behavior {
            scenario,
            table,
            provenance: None,
        }
    }

    /// Attaches a human-readable construction note (carried through JSON).
    pub fn with_provenance(mut self, note: impl Into<String>) -> Self {
        self.provenance = Some(note.into());
        self
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn table(&self) -> &[Rational] {
        &self.table
    }

    pub fn provenance(&self) -> Option<&str> {
        self.provenance.as_deref()
    }

    /// `p(outcomes|settings)`.
    pub fn get(&self, settings: &[usize], outcomes: &[usize]) -> Result<&Rational, Error> {
        Ok(&self.table[self.scenario.flat_index(settings, outcomes)?])
    }

    /// The `d^N` outcome probabilities for one flat joint setting.
    pub fn row(&self, setting_flat: usize) -> &[Rational] {
        let width = self.scenario.joint_outcomes();
        &self.table[setting_flat * width..(setting_flat + 1) * width]
    }

    /// Checks nonnegativity of every entry and per-setting normalization.
    /// Returns all failures; an empty vector means a valid distribution.
    pub fn validate(&self) -> Vec<ValidationFailure> {
        let mut failures = Vec::new();
        for (s_flat, x) in self.scenario.joint_settings_iter().enumerate() {
            let mut sum = Rational::zero();
            for (a_flat, a) in self.scenario.joint_outcomes_iter().enumerate() {
                let p = &self.row(s_flat)[a_flat];
                if p < &Rational::zero() {
                    failures.push(ValidationFailure::Negative {
                        settings: x.clone(),
                        outcomes: a,
                        value: p.clone(),
                    });
                }
                sum += p;
            }
            if !(sum == crate::rational::one()) {
                failures.push(ValidationFailure::Normalization { settings: x, sum });
            }
        }
        failures
    }

    /// Checks every no-signaling constraint: for each party, each pair of its
    /// settings, and each assignment of the other parties' settings and
    /// outcomes, the summed-out marginal must coincide. Returns all witnessed
    /// violations; an empty vector means the behavior is no-signaling.
    pub fn check_no_signaling(&self) -> Vec<NsViolation> {
        let n = self.scenario.parties();
        let m = self.scenario.settings();
        let d = self.scenario.outcomes();
        let mut violations = Vec::new();
        for party in 0..n {
            let others: Vec<usize> = (0..n).filter(|&p| p != party).collect();
            for fixed_settings in tuples(n - 1, m) {
                for fixed_outcomes in tuples(n - 1, d) {
                    let marginal_at = |x_party: usize| -> Rational {
                        let mut x = vec![0usize; n];
                        x[party] = x_party;
                        for (k, &p) in others.iter().enumerate() {
                            x[p] = fixed_settings[k];
                        }
                        let mut a = vec![0usize; n];
                        for (k, &p) in others.iter().enumerate() {
                            a[p] = fixed_outcomes[k];
                        }
                        let mut sum = Rational::zero();
                        for a_party in 0..d {
                            a[party] = a_party;
                            sum += self
                                .get(&x, &a)
                                .expect("indices in range by construction");
                        }
                        sum
                    };
                    for x0 in 0..m {
                        for x1 in (x0 + 1)..m {
                            let lhs = marginal_at(x0);
                            let rhs = marginal_at(x1);
                            if lhs != rhs {
                                violations.push(NsViolation {
                                    party,
                                    fixed_settings: fixed_settings.clone(),
                                    fixed_outcomes: fixed_outcomes.clone(),
                                    setting_pair: (x0, x1),
                                    discrepancy: lhs - rhs,
                                });
                            }
                        }
                    }
                }
            }
        }
        violations
    }

    /// Marginal outcome distribution of `party_subset` (in the given order,
    /// row-major) at the given settings for those parties.
    ///
    /// `context` fixes the discarded parties' settings (in increasing party
    /// order). Without a context the marginal is computed for every such
    /// assignment and required to be context-independent; if the behavior
    /// signals across that cut, an [`Error::AmbiguousMarginal`] names the
    /// differing contexts.
    pub fn marginal(
        &self,
        party_subset: &[usize],
        settings: &[usize],
        context: Option<&[usize]>,
    ) -> Result<Vec<Rational>, Error> {
        let n = self.scenario.parties();
        let m = self.scenario.settings();
        let d = self.scenario.outcomes();
        if party_subset.is_empty() {
            return Err(Error::Argument("marginal needs at least one party".into()));
        }
        let mut seen = vec![false; n];
        for &p in party_subset {
            if p >= n {
                return Err(Error::Dimension(format!(
                    "party {p} out of range for {n} parties"
                )));
            }
            if seen[p] {
                return Err(Error::Argument(format!(
                    "party {p} repeated in marginal subset"
                )));
            }
            seen[p] = true;
        }
        if settings.len() != party_subset.len() {
            return Err(Error::Dimension(format!(
                "{} settings for {} marginal parties",
                settings.len(),
                party_subset.len()
            )));
        }
        for &x in settings {
            if x >= m {
                return Err(Error::Dimension(format!(
                    "setting {x} out of range 0..{m}"
                )));
            }
        }
        let complement: Vec<usize> = (0..n).filter(|&p| !seen[p]).collect();

        let distribution_for = |ctx: &[usize]| -> Vec<Rational> {
            let mut x = vec![0usize; n];
            for (k, &p) in party_subset.iter().enumerate() {
                x[p] = settings[k];
            }
            for (k, &p) in complement.iter().enumerate() {
                x[p] = ctx[k];
            }
            let s_flat = self.scenario.setting_index(&x).expect("in range");
            let row = self.row(s_flat);
            let width = d.pow(party_subset.len() as u32);
            let mut dist = vec![Rational::zero(); width];
            for (a_flat, a) in self.scenario.joint_outcomes_iter().enumerate() {
                let mut idx = 0usize;
                for &p in party_subset {
                    idx = idx * d + a[p];
                }
                dist[idx] += &row[a_flat];
            }
            dist
        };

        match context {
            Some(ctx) => {
                if ctx.len() != complement.len() {
                    return Err(Error::Dimension(format!(
                        "context has {} settings, expected {} (for parties {:?})",
                        ctx.len(),
                        complement.len(),
                        complement
                    )));
                }
                for &x in ctx {
                    if x >= m {
                        return Err(Error::Dimension(format!(
                            "context setting {x} out of range 0..{m}"
                        )));
                    }
                }
                Ok(distribution_for(ctx))
            }
            None => {
                let mut result: Option<(Vec<usize>, Vec<Rational>)> = None;
                for ctx in tuples(complement.len(), m) {
                    let dist = distribution_for(&ctx);
                    match &result {
                        None => result = Some((ctx, dist)),
                        Some((first_ctx, first_dist)) => {
                            if *first_dist != dist {
                                return Err(Error::AmbiguousMarginal(format!(
                                    "marginal of parties {party_subset:?} at settings \
                                     {settings:?} differs between contexts {first_ctx:?} \
                                     and {ctx:?} for parties {complement:?}"
                                )));
                            }
                        }
                    }
                }
                Ok(result.expect("at least one context").1)
            }
        }
    }

    /// `P(a_i = a_j)` for parties `i`, `j` measuring settings `x_i`, `x_j`:
    /// the summed diagonal of their joint marginal (context-independent by
    /// the same rule as [`Behavior::marginal`]).
    pub fn pair_agreement_probability(
        &self,
        party_i: usize,
        setting_i: usize,
        party_j: usize,
        setting_j: usize,
    ) -> Result<Rational, Error> {
        if party_i == party_j {
            return Err(Error::Argument(
                "agreement probability needs two distinct parties".into(),
            ));
        }
        let d = self.scenario.outcomes();
        let dist = self.marginal(&[party_i, party_j], &[setting_i, setting_j], None)?;
        let mut sum = Rational::zero();
        for a in 0..d {
            sum += &dist[a * d + a];
        }
        Ok(sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn uniform(n: usize, m: usize, d: usize) -> Behavior {
        let s = Scenario::new(n, m, d).unwrap();
        let cells = s.joint_outcomes();
        Behavior::from_fn(s, |_, _| ratio(1, cells as i64))
    }

    /// p(a,b|x,y) = [a == y]/2: party 1's setting is readable from party 0's
    /// outcome, so this signals from 1 to 0 (and only that way).
    fn signaling_box() -> Behavior {
        let s = Scenario::new(2, 2, 2).unwrap();
        Behavior::from_fn(s, |x, a| if a[0] == x[1] { ratio(1, 2) } else { int(0) })
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let s = Scenario::new(2, 2, 2).unwrap();
        assert!(Behavior::new(s, vec![int(0); 15]).is_err());
        assert!(Behavior::new(s, vec![int(0); 16]).is_ok());
    }

    #[test]
    fn uniform_box_is_valid_and_no_signaling() {
        let b = uniform(2, 2, 3);
        assert!(b.validate().is_empty());
        assert!(b.check_no_signaling().is_empty());
    }

    #[test]
    fn validation_reports_negatives_and_bad_sums() {
        let s = Scenario::new(1, 1, 2).unwrap();
        let b = Behavior::new(s, vec![ratio(3, 2), ratio(-1, 2)]).unwrap();
        let failures = b.validate();
        assert_eq!(failures.len(), 1, "sums to one, only negativity fails");
        assert!(matches!(
            &failures[0],
            ValidationFailure::Negative { outcomes, .. } if outcomes == &[1]
        ));

        let b = Behavior::new(s, vec![ratio(1, 2), ratio(1, 4)]).unwrap();
        let failures = b.validate();
        assert_eq!(failures.len(), 1);
        assert!(matches!(
            &failures[0],
            ValidationFailure::Normalization { sum, .. } if *sum == ratio(3, 4)
        ));
    }

    #[test]
    fn signaling_box_is_caught_with_correct_direction() {
        let b = signaling_box();
        assert!(b.validate().is_empty());
        let violations = b.check_no_signaling();
        assert!(!violations.is_empty());
        // Only party 1's setting signals; party 0's never does.
        assert!(violations.iter().all(|v| v.party == 1));
        // x in {0,1} times fixed outcome a in {0,1}, one setting pair each.
        assert_eq!(violations.len(), 4);
        for v in &violations {
            assert_eq!(v.setting_pair, (0, 1));
            let expected = if v.fixed_outcomes[0] == 0 { int(1) } else { int(-1) };
            assert_eq!(v.discrepancy, expected);
        }
    }

    #[test]
    fn marginal_of_uniform_is_uniform() {
        let b = uniform(3, 2, 2);
        let dist = b.marginal(&[1], &[0], None).unwrap();
        assert_eq!(dist, vec![ratio(1, 2), ratio(1, 2)]);
        let dist = b.marginal(&[0, 2], &[1, 0], None).unwrap();
        assert_eq!(dist, vec![ratio(1, 4); 4]);
    }

    #[test]
    fn ambiguous_marginal_requires_context() {
        let b = signaling_box();
        let err = b.marginal(&[0], &[0], None).unwrap_err();
        assert!(matches!(err, Error::AmbiguousMarginal(_)));
        // With the context pinned the answer is deterministic on party 1's setting.
        let dist = b.marginal(&[0], &[0], Some(&[1])).unwrap();
        assert_eq!(dist, vec![int(0), int(1)]);
        // Party 1's own marginal is context-independent.
        let dist = b.marginal(&[1], &[0], None).unwrap();
        assert_eq!(dist, vec![ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn marginal_respects_subset_order() {
        let b = signaling_box();
        let ab = b.marginal(&[0, 1], &[0, 1], None).unwrap();
        let ba = b.marginal(&[1, 0], &[1, 0], None).unwrap();
        // p(a,b|0,1) = [a == 1]/2; transposing the subset transposes the table.
        assert_eq!(ab, vec![int(0), int(0), ratio(1, 2), ratio(1, 2)]);
        assert_eq!(ba, vec![int(0), ratio(1, 2), int(0), ratio(1, 2)]);
    }

    #[test]
    fn agreement_probability_on_perfect_correlation() {
        let s = Scenario::new(2, 2, 2).unwrap();
        let b = Behavior::from_fn(s, |_, a| if a[0] == a[1] { ratio(1, 2) } else { int(0) });
        assert_eq!(b.pair_agreement_probability(0, 0, 1, 1).unwrap(), int(1));
        assert_eq!(
            uniform(2, 2, 2).pair_agreement_probability(0, 0, 1, 0).unwrap(),
            ratio(1, 2)
        );
        assert!(uniform(2, 2, 2).pair_agreement_probability(0, 0, 0, 1).is_err());
    }

    #[test]
    fn serde_round_trip_preserves_exact_values() {
        let b = uniform(2, 2, 2).with_provenance("uniform test box");
        let json = serde_json::to_string(&b).unwrap();
        assert!(json.contains("\"1/4\""));
        assert!(json.contains("probabilities"));
        let back: Behavior = serde_json::from_str(&json).unwrap();
        assert_eq!(b, back);
        // Short tables are rejected at parse time.
        let bad = r#"{"scenario":{"parties":1,"settings":1,"outcomes":2},"probabilities":["1/2"]}"#;
        assert!(serde_json::from_str::<Behavior>(bad).is_err());
    }
}
