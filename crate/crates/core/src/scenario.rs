//! Bell scenarios and the flat indexing contract for behavior tables.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// An `(N, M, d)` Bell scenario: `N` parties, each choosing among `M`
/// measurement settings with `d` possible outcomes.
///
/// Settings and outcomes are 0-based everywhere in this crate
/// (settings `0..M-1`, outcomes `0..d-1`).
///
/// # Flat indexing contract
///
/// A behavior table is a single `Vec` of length `(M*d)^N`. The joint setting
/// vector is the *outer* index and the joint outcome vector the *inner* one,
/// both row-major over parties with party 0 most significant:
///
/// ```text
/// S = sum_i x[i] * M^(N-1-i)
/// A = sum_i a[i] * d^(N-1-i)
/// flat = S * d^N + A
/// ```
///
/// Every consumer of tables in this crate relies on exactly this layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawScenario")]
pub struct Scenario {
    parties: usize,
    settings: usize,
    outcomes: usize,
}

#[derive(Deserialize)]
struct RawScenario {
    parties: usize,
    settings: usize,
    outcomes: usize,
}

impl TryFrom<RawScenario> for Scenario {
    type Error = Error;

    fn try_from(raw: RawScenario) -> Result<Self, Error> {
        Scenario::new(raw.parties, raw.settings, raw.outcomes)
    }
}

impl Scenario {
    /// Requires `parties >= 1`, `settings >= 1`, `outcomes >= 2`, and a table
    /// size that fits in `usize`.
    pub fn new(parties: usize, settings: usize, outcomes: usize) -> Result<Self, Error> {
        if parties < 1 {
            return Err(Error::Argument("scenario needs at least one party".into()));
        }
        if settings < 1 {
            return Err(Error::Argument(
                "scenario needs at least one setting per party".into(),
            ));
        }
        if outcomes < 2 {
            return Err(Error::Argument(
                "scenario needs at least two outcomes per setting".into(),
            ));
        }
        let cell = settings
            .checked_mul(outcomes)
            .ok_or_else(|| Error::Argument("scenario dimensions overflow".into()))?;
        checked_pow(cell, parties)
            .ok_or_else(|| Error::Argument("scenario table size overflows usize".into()))?;
        Ok(Scenario {
            parties,
            settings,
            outcomes,
        })
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn settings(&self) -> usize {
        self.settings
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    /// `M^N`, the number of joint settings.
    pub fn joint_settings(&self) -> usize {
        checked_pow(self.settings, self.parties).expect("validated at construction")
    }

    /// `d^N`, the number of joint outcomes.
    pub fn joint_outcomes(&self) -> usize {
        checked_pow(self.outcomes, self.parties).expect("validated at construction")
    }

    /// `(M*d)^N`, the behavior table length.
    pub fn table_len(&self) -> usize {
        self.joint_settings() * self.joint_outcomes()
    }

    /// Flattens a joint setting vector (party 0 most significant).
    pub fn setting_index(&self, settings: &[usize]) -> Result<usize, Error> {
        flatten(settings, self.parties, self.settings, "setting")
    }

    /// Flattens a joint outcome vector (party 0 most significant).
    pub fn outcome_index(&self, outcomes: &[usize]) -> Result<usize, Error> {
        flatten(outcomes, self.parties, self.outcomes, "outcome")
    }

    /// Flat table index of `p(a|x)` per the indexing contract.
    pub fn flat_index(&self, settings: &[usize], outcomes: &[usize]) -> Result<usize, Error> {
        let s = self.setting_index(settings)?;
        let a = self.outcome_index(outcomes)?;
        Ok(s * self.joint_outcomes() + a)
    }

    /// Inverse of [`Scenario::flat_index`]: recovers `(settings, outcomes)`.
    pub fn split_index(&self, flat: usize) -> Result<(Vec<usize>, Vec<usize>), Error> {
        if flat >= self.table_len() {
            return Err(Error::Dimension(format!(
                "flat index {flat} out of range for table of length {}",
                self.table_len()
            )));
        }
        let a = flat % self.joint_outcomes();
        let s = flat / self.joint_outcomes();
        Ok((
            unflatten(s, self.parties, self.settings),
            unflatten(a, self.parties, self.outcomes),
        ))
    }

    /// All joint settings in flat order.
    pub fn joint_settings_iter(&self) -> impl Iterator<Item = Vec<usize>> {
        tuples(self.parties, self.settings)
    }

    /// All joint outcomes in flat order.
    pub fn joint_outcomes_iter(&self) -> impl Iterator<Item = Vec<usize>> {
        tuples(self.parties, self.outcomes)
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "(N={}, M={}, d={})",
            self.parties, self.settings, self.outcomes
        )
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

fn flatten(digits: &[usize], len: usize, base: usize, what: &str) -> Result<usize, Error> {
    if digits.len() != len {
        return Err(Error::Dimension(format!(
            "{what} vector has length {}, expected {len}",
            digits.len()
        )));
    }
    let mut acc = 0usize;
    for &v in digits {
        if v >= base {
            return Err(Error::Dimension(format!(
                "{what} value {v} out of range 0..{base}"
            )));
        }
        acc = acc * base + v;
    }
    Ok(acc)
}

fn unflatten(mut idx: usize, len: usize, base: usize) -> Vec<usize> {
    let mut out = vec![0usize; len];
    for slot in out.iter_mut().rev() {
        *slot = idx % base;
        idx /= base;
    }
    out
}

/// All `len`-tuples over `0..base`, in row-major (odometer) order with
/// position 0 most significant. `len == 0` yields the single empty tuple.
pub fn tuples(len: usize, base: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = checked_pow(base, len).expect("tuple space overflows usize");
    (0..total).map(move |i| unflatten(i, len, base))
}
