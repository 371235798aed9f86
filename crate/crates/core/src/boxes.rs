//! Canonical behavior constructions: the extremal no-signaling boxes that
//! drive the chained functionals to zero, the all-zeros local box, uniform
//! noise, convex mixtures of the two, and deterministic-party extensions.
//!
//! The multipartite extremal box is built from its defining combinatorics and
//! then *checked* — normalization, no-signaling, and the zero Bell value are
//! verified at construction time rather than assumed.

use std::collections::HashMap;

use num::{One, Signed, Zero};

use crate::behavior::Behavior;
use crate::bell::build_bkp_multipartite;
use crate::error::Error;
use crate::rational::{ratio, Rational};
use crate::scenario::{tuples, Scenario};

/// The two-party extremal no-signaling box for `M` settings and `d` outcomes.
///
/// Structured rows (settings 0-based): on `(x, x)` and `(x+1, x)` the
/// outcomes agree, `p(a, a) = 1/d`; on `(0, M-1)` the second outcome leads by
/// one, `p(a, a+1 mod d) = 1/d`. Every other row is uniform `1/d²`. The
/// chained functional evaluates to `0` on it — each modular term sits
/// entirely on a row whose support makes the term's residue vanish.
pub fn nl_box_bipartite(m: usize, d: usize) -> Result<Behavior, Error> {
    if m < 2 || d < 2 {
        return Err(Error::Argument(
            "extremal box needs at least two settings and two outcomes".into(),
        ));
    }
    let scenario = Scenario::new(2, m, d)?;
    let in_row = ratio(1, d as i64);
    let off_row = &in_row * &in_row;
    let b = Behavior::from_fn(scenario, |x, a| {
        let lead = if x[0] == x[1] || x[0] == x[1] + 1 {
            Some(0)
        } else if x[0] == 0 && x[1] == m - 1 {
            Some(1)
        } else {
            None
        };
        match lead {
            Some(t) => {
                if (a[1] + d - a[0]) % d == t {
                    in_row.clone()
                } else {
                    Rational::zero()
                }
            }
            None => off_row.clone(),
        }
    })
    .with_provenance(format!("nl-box(M={m},d={d})"));
    debug_assert!(b.validate().is_empty());
    debug_assert!(b.check_no_signaling().is_empty());
    Ok(b)
}

/// The deterministic product box in which every party outputs `0` for every
/// setting. It reaches the local bound of the chained functionals: only the
/// wraparound term contributes, giving `d-1` per chain.
pub fn local_box(n: usize, m: usize, d: usize) -> Result<Behavior, Error> {
    let scenario = Scenario::new(n, m, d)?;
    let b = Behavior::from_fn(scenario, |_, a| {
        if a.iter().all(|&ai| ai == 0) {
            Rational::one()
        } else {
            Rational::zero()
        }
    })
    .with_provenance(format!("local(N={n},M={m},d={d})"));
    Ok(b)
}

/// Uniform noise: every entry `1/d^N`.
pub fn uniform_box(scenario: Scenario) -> Behavior {
    let cell = ratio(1, scenario.joint_outcomes() as i64);
    Behavior::from_fn(scenario, |_, _| cell.clone()).with_provenance(format!(
        "uniform(N={},M={},d={})",
        scenario.parties(),
        scenario.settings(),
        scenario.outcomes()
    ))
}

/// In the `N`-party extremal box, every structured joint setting carries a
/// residue condition on the alternating outcome sum; this is one such
/// assignment, remembered for conflict reporting.
#[derive(Clone, Debug)]
struct StructuredRow {
    /// Which of the two setting families produced the row (1 or 2).
    family: u8,
    /// The (1-based) index tuple that produced the row.
    alpha: Vec<usize>,
    /// Required residue of `a_1 - a_2 + a_3 - …` modulo `d`.
    target: usize,
}

/// The `N`-party extremal no-signaling box.
///
/// Two families of structured joint settings are indexed by tuples
/// `α ∈ {1..M}^(N-1)`: party `j` (1-based) measures `α_(j-1) + α_j - 1`,
/// read with the conventions `α_0 = 1` (first family) or `α_0 = 2` (second)
/// and `α_N = 1`, and labels above `M` reduced by `M` once. On such a row the
/// outcomes satisfy `a_1 - a_2 + a_3 - … ≡ f(α) (mod d)`, each admissible
/// tuple carrying `1/d^(N-1)`, where `f(α)` counts the label reductions with
/// alternating signs: `f = Σ_(i=0)^(N-1) (-1)^(i+1) [α_i + α_(i+1) - 1 > M]`.
/// All remaining rows are uniform `1/d^N`.
///
/// If the two families ever demanded different residues on the same joint
/// setting the construction would be ambiguous; that is detected and reported
/// rather than assumed away. Normalization, no-signaling, and the defining
/// property — the `N`-party chained functional evaluates to `0` — are all
/// verified before the box is returned.
pub fn nl_box_multipartite(n: usize, m: usize, d: usize) -> Result<Behavior, Error> {
    if n < 2 {
        return Err(Error::Argument(
            "multipartite extremal box needs at least two parties".into(),
        ));
    }
    if m < 2 || d < 2 {
        return Err(Error::Argument(
            "extremal box needs at least two settings and two outcomes".into(),
        ));
    }
    let scenario = Scenario::new(n, m, d)?;

    let mut structured: HashMap<usize, StructuredRow> = HashMap::new();
    for family in [1u8, 2u8] {
        for alpha0 in tuples(n - 1, m) {
            // 1-based chain with the virtual endpoints α_0 and α_N.
            let alpha: Vec<usize> = alpha0.iter().map(|&v| v + 1).collect();
            let at = |i: usize| -> usize {
                if i == 0 {
                    family as usize
                } else if i == n {
                    1
                } else {
                    alpha[i - 1]
                }
            };

            let mut settings = Vec::with_capacity(n);
            let mut f: i64 = 0;
            for i in 0..n {
                let mut label = at(i) + at(i + 1) - 1;
                let reduced = label > m;
                if reduced {
                    label -= m;
                }
                // Party i+1 measures `label`; the same overflow test feeds f.
                settings.push(label - 1);
                if reduced {
                    f += if i % 2 == 0 { -1 } else { 1 };
                }
            }
            let target = f.rem_euclid(d as i64) as usize;

            let flat = scenario
                .setting_index(&settings)
                .expect("labels reduced into range");
            match structured.get(&flat) {
                Some(prev) if prev.target != target => {
                    return Err(Error::Construction(format!(
                        "the two setting families collide on joint setting {settings:?}: \
                         family {} with indices {:?} demands residue {}, family {family} \
                         with indices {alpha:?} demands residue {target}",
                        prev.family, prev.alpha, prev.target
                    )));
                }
                Some(_) => {}
                None => {
                    structured.insert(
                        flat,
                        StructuredRow {
                            family,
                            alpha,
                            target,
                        },
                    );
                }
            }
        }
    }

    let d_pow = num::pow::pow(num::BigInt::from(d), n - 1);
    let structured_cell = Rational::new(num::BigInt::one(), d_pow.clone());
    let uniform_cell = Rational::new(num::BigInt::one(), d_pow * d);

    let b = Behavior::from_fn(scenario, |x, a| {
        let flat = scenario.setting_index(x).expect("enumerated in range");
        match structured.get(&flat) {
            Some(row) => {
                let mut alt: i64 = 0;
                for (p, &ap) in a.iter().enumerate() {
                    alt += if p % 2 == 0 { ap as i64 } else { -(ap as i64) };
                }
                if alt.rem_euclid(d as i64) as usize == row.target {
                    structured_cell.clone()
                } else {
                    Rational::zero()
                }
            }
            None => uniform_cell.clone(),
        }
    })
    .with_provenance(format!("nl-box-n(N={n},M={m},d={d})"));

    let bad_values = b.validate();
    if !bad_values.is_empty() {
        return Err(Error::Construction(format!(
            "extremal box failed validation: {} failing entries",
            bad_values.len()
        )));
    }
    let signaling = b.check_no_signaling();
    if !signaling.is_empty() {
        return Err(Error::Construction(format!(
            "extremal box signals: {} violated marginal equalities",
            signaling.len()
        )));
    }
    let functional = build_bkp_multipartite(n, m, d)?;
    let value = functional.value(&b)?;
    if !value.is_zero() {
        return Err(Error::Construction(format!(
            "extremal box gives chained-functional value {} instead of 0",
            crate::rational::format(&value)
        )));
    }
    Ok(b)
}

/// A convex mixture `q · extremal + (1-q) · local` of two behaviors over the
/// same scenario. The weight is validated on construction, so [`mix`] itself
/// cannot fail.
#[derive(Clone, Debug)]
pub struct MixtureSpec {
    q: Rational,
    extremal: Behavior,
    local: Behavior,
}

impl MixtureSpec {
    pub fn new(q: Rational, extremal: Behavior, local: Behavior) -> Result<Self, Error> {
        if q.is_negative() || q > Rational::one() {
            return Err(Error::Argument(format!(
                "mixture weight {} is outside [0, 1]",
                crate::rational::format(&q)
            )));
        }
        if extremal.scenario() != local.scenario() {
            return Err(Error::Dimension(format!(
                "mixture components over {} and {} do not match",
                extremal.scenario(),
                local.scenario()
            )));
        }
        Ok(MixtureSpec { q, extremal, local })
    }

    pub fn q(&self) -> &Rational {
        &self.q
    }

    pub fn extremal(&self) -> &Behavior {
        &self.extremal
    }

    pub fn local(&self) -> &Behavior {
        &self.local
    }
}

/// Entrywise exact convex combination described by a [`MixtureSpec`].
pub fn mix(spec: &MixtureSpec) -> Behavior {
    let p = Rational::one() - &spec.q;
    let table: Vec<Rational> = spec
        .extremal
        .table()
        .iter()
        .zip(spec.local.table())
        .map(|(e, l)| &spec.q * e + &p * l)
        .collect();
    Behavior::new(spec.extremal.scenario(), table)
        .expect("lengths match by construction")
        .with_provenance(format!(
            "mixture(q={}, extremal={}, local={})",
            crate::rational::format(&spec.q),
            spec.extremal.provenance().unwrap_or("?"),
            spec.local.provenance().unwrap_or("?"),
        ))
}

/// Tensors a behavior with one extra party that outputs `0` deterministically
/// for every setting, inserted at `position` (0-based) in the party order.
/// The new party's rows copy the old table where its outcome is `0` and
/// vanish elsewhere, so normalization and no-signaling carry over.
pub fn extend_with_deterministic_party(b: &Behavior, position: usize) -> Result<Behavior, Error> {
    let src = b.scenario();
    let n = src.parties();
    if position > n {
        return Err(Error::Argument(format!(
            "insertion position {position} exceeds party count {n}"
        )));
    }
    let target = Scenario::new(n + 1, src.settings(), src.outcomes())?;
    let table_b = Behavior::from_fn(target, |x, a| {
        if a[position] != 0 {
            return Rational::zero();
        }
        let mut xs = Vec::with_capacity(n);
        let mut asub = Vec::with_capacity(n);
        for p in 0..n + 1 {
            if p != position {
                xs.push(x[p]);
                asub.push(a[p]);
            }
        }
        b.get(&xs, &asub).expect("sub-indices in range").clone()
    });
    Ok(table_b.with_provenance(format!(
        "det-extend(position={position}, base={})",
        b.provenance().unwrap_or("?")
    )))
}
