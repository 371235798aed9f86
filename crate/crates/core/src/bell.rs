//! Bell functionals: exact linear forms on behavior tables.
//!
//! A [`BellFunctional`] is a coefficient vector aligned with the behavior
//! table plus a constant offset; its value on a behavior `p` is
//! `sum_i c_i * p_i + offset`. Functionals are assembled from
//! *modular-expectation terms*
//!
//! ```text
//! <[ s_1 A_1 + s_2 A_2 + ... + shift ]>  =  sum_k  k * P((...) mod d = k)
//! ```
//!
//! where each operand contributes one party's outcome with sign `s_j ∈ {±1}`
//! at a fixed setting, and the expectation is over the value of the mod-`d`
//! residue. A term naming only a subset of parties is averaged uniformly
//! over the unnamed parties' settings (coefficient weight `1/M^(N-k)` for a
//! `k`-operand term), which keeps terms of different arity on a common
//! footing inside one coefficient vector.
//!
//! The chained functional built here,
//!
//! ```text
//! I^{M,d} = sum_{α=1..M} ( <[A_α - B_α]> + <[B_α - A_{α+1}]> ),   A_{M+1} = A_1 + 1,
//! ```
//!
//! satisfies `I >= d-1` for local behaviors while no-signaling behaviors can
//! reach `I = 0`. Its multipartite extension `I^{N;M,d}` (two alternating-sign
//! sums per setting multi-index, wrapping `A_{M+k} = A_k + 1`) has the local
//! bound `M^(N-2) (d-1)`.

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::behavior::Behavior;
use crate::error::Error;
use crate::rational::{int, serde_rational, serde_rational_vec, Rational};
use crate::scenario::{tuples, Scenario};

/// Sign of one operand inside a modular-expectation term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    fn negate(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// One party's outcome at a fixed setting, with a sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TermOperand {
    pub party: usize,
    pub setting: usize,
    pub sign: Sign,
}

/// A modular-expectation term `<[ sum_j sign_j * outcome(party_j @ setting_j)
/// + shift ]>`, the residue taken mod `d` at compile time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModularTerm {
    operands: Vec<TermOperand>,
    shift: i64,
}

impl ModularTerm {
    /// Requires at least one operand and at most one operand per party.
    pub fn new(operands: Vec<TermOperand>, shift: i64) -> Result<Self, Error> {
        if operands.is_empty() {
            return Err(Error::Argument("modular term needs an operand".into()));
        }
        for (i, a) in operands.iter().enumerate() {
            for b in &operands[..i] {
                if a.party == b.party {
                    return Err(Error::Argument(format!(
                        "party {} appears twice in one modular term",
                        a.party
                    )));
                }
            }
        }
        Ok(ModularTerm { operands, shift })
    }

    pub fn operands(&self) -> &[TermOperand] {
        &self.operands
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    fn describe(&self) -> String {
        let mut s = String::from("<[");
        for (i, op) in self.operands.iter().enumerate() {
            let letter = party_letter(op.party);
            match (i, op.sign) {
                (0, Sign::Plus) => s.push_str(&format!("{letter}{}", op.setting)),
                (0, Sign::Minus) => s.push_str(&format!("-{letter}{}", op.setting)),
                (_, Sign::Plus) => s.push_str(&format!("+{letter}{}", op.setting)),
                (_, Sign::Minus) => s.push_str(&format!("-{letter}{}", op.setting)),
            }
        }
        match self.shift.cmp(&0) {
            std::cmp::Ordering::Greater => s.push_str(&format!("+{}", self.shift)),
            std::cmp::Ordering::Less => s.push_str(&format!("{}", self.shift)),
            std::cmp::Ordering::Equal => {}
        }
        s.push_str("]>");
        s
    }
}

fn party_letter(party: usize) -> String {
    const LETTERS: &[u8] = b"ABCEFGHJKL"; // D is reserved for the outcome count
    if party < LETTERS.len() {
        (LETTERS[party] as char).to_string()
    } else {
        format!("P{party}")
    }
}

/// Advisory bounds a builder knows for its functional. Documentation only —
/// nothing enforces these; the verification routines recompute what they need.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionalMetadata {
    /// Bound on the value over local (classical) behaviors, in the
    /// functional's natural optimization direction. Exact (attained) for the
    /// bipartite and counterexample builders; for the multipartite family it
    /// is the chain-inherited bound, which need not be attained — at
    /// `(N,M,d) = (3,3,2)` the deterministic optimum is 5, not the bound 3.
    #[serde(with = "serde_rational")]
    pub classical_bound: Rational,
    /// Optimal value over no-signaling behaviors, same direction.
    #[serde(with = "serde_rational")]
    pub ns_optimum: Rational,
}

/// An exact linear functional on behaviors: `value(p) = c · p + offset`.
///
/// Equality (`==`) compares scenario, coefficients, and offset exactly;
/// labels and metadata are ignored. Two functionals that disagree as raw
/// vectors can still agree on every normalized behavior — when the
/// difference is constant on each setting row — so structural identities
/// should usually be tested with [`BellFunctional::eq_canonical`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawFunctional")]
pub struct BellFunctional {
    scenario: Scenario,
    #[serde(with = "serde_rational_vec")]
    coefficients: Vec<Rational>,
    #[serde(with = "serde_rational")]
    offset: Rational,
    label: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    metadata: Option<FunctionalMetadata>,
}

#[derive(Deserialize)]
struct RawFunctional {
    scenario: Scenario,
    coefficients: Vec<String>,
    offset: String,
    label: String,
    #[serde(default)]
    metadata: Option<FunctionalMetadata>,
}

impl TryFrom<RawFunctional> for BellFunctional {
    type Error = Error;

    fn try_from(raw: RawFunctional) -> Result<Self, Error> {
        let coefficients = raw
            .coefficients
            .iter()
            .map(|s| crate::rational::parse(s))
            .collect::<Result<Vec<_>, _>>()?;
        if coefficients.len() != raw.scenario.table_len() {
            return Err(Error::Dimension(format!(
                "{} coefficients for scenario {} needing {}",
                coefficients.len(),
                raw.scenario,
                raw.scenario.table_len()
            )));
        }
        Ok(BellFunctional {
            scenario: raw.scenario,
            coefficients,
            offset: crate::rational::parse(&raw.offset)?,
            label: raw.label,
            metadata: raw.metadata,
        })
    }
}

impl PartialEq for BellFunctional {
    fn eq(&self, other: &Self) -> bool {
        self.scenario == other.scenario
            && self.offset == other.offset
            && self.coefficients == other.coefficients
    }
}

impl BellFunctional {
    /// The zero functional.
    pub fn zero(scenario: Scenario, label: impl Into<String>) -> Self {
        BellFunctional {
            scenario,
            coefficients: vec![Rational::zero(); scenario.table_len()],
            offset: Rational::zero(),
            label: label.into(),
            metadata: None,
        }
    }

    /// Wraps an explicit coefficient vector.
    pub fn from_parts(
        scenario: Scenario,
        coefficients: Vec<Rational>,
        offset: Rational,
        label: impl Into<String>,
    ) -> Result<Self, Error> {
        if coefficients.len() != scenario.table_len() {
            return Err(Error::Dimension(format!(
                "{} coefficients for scenario {} needing {}",
                coefficients.len(),
                scenario,
                scenario.table_len()
            )));
        }
        Ok(BellFunctional {
            scenario,
            coefficients,
            offset,
            label: label.into(),
            metadata: None,
        })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coefficients
    }

    pub fn offset(&self) -> &Rational {
        &self.offset
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn metadata(&self) -> Option<&FunctionalMetadata> {
        self.metadata.as_ref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_metadata(mut self, metadata: FunctionalMetadata) -> Self {
        self.metadata = Some(metadata);
        self
    }

    /// `c · p + offset`, requiring matching scenarios.
    pub fn value(&self, behavior: &Behavior) -> Result<Rational, Error> {
        if behavior.scenario() != self.scenario {
            return Err(Error::Dimension(format!(
                "functional on {} evaluated on behavior over {}",
                self.scenario,
                behavior.scenario()
            )));
        }
        let mut acc = self.offset.clone();
        for (c, p) in self.coefficients.iter().zip(behavior.table()) {
            if !c.is_zero() {
                acc += c * p;
            }
        }
        Ok(acc)
    }

    /// Adds `weight * other` into `self` (same scenario required).
    pub fn accumulate(&mut self, weight: &Rational, other: &BellFunctional) -> Result<(), Error> {
        if other.scenario != self.scenario {
            return Err(Error::Dimension(format!(
                "cannot combine functionals over {} and {}",
                self.scenario, other.scenario
            )));
        }
        for (c, o) in self.coefficients.iter_mut().zip(&other.coefficients) {
            if !o.is_zero() {
                *c += weight * o;
            }
        }
        self.offset += weight * &other.offset;
        Ok(())
    }

    /// `sum_k weight_k * part_k` under a fresh label.
    pub fn combine(
        parts: &[(Rational, &BellFunctional)],
        label: impl Into<String>,
    ) -> Result<Self, Error> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::Argument("combine needs at least one functional".into()))?;
        let mut acc = BellFunctional::zero(first.scenario, label);
        for (w, f) in parts {
            acc.accumulate(w, f)?;
        }
        Ok(acc)
    }

    /// `k * self` (label kept, metadata dropped).
    pub fn scale(&self, k: &Rational) -> Self {
        BellFunctional {
            scenario: self.scenario,
            coefficients: self.coefficients.iter().map(|c| c * k).collect(),
            offset: &self.offset * k,
            label: self.label.clone(),
            metadata: None,
        }
    }

    /// Adds a constant to the functional's offset.
    pub fn with_offset_added(mut self, c: &Rational) -> Self {
        self.offset += c;
        self
    }

    /// The canonical representative of this functional modulo per-setting
    /// normalization: the minimum coefficient of each setting row is moved
    /// into the offset, leaving every row with minimum zero. Because each
    /// row of a behavior sums to one, this transformation never changes the
    /// functional's value on a normalized table.
    pub fn canonical_form(&self) -> Self {
        let width = self.scenario.joint_outcomes();
        let mut coefficients = self.coefficients.clone();
        let mut offset = self.offset.clone();
        for row in coefficients.chunks_mut(width) {
            let min = row.iter().min().expect("rows are nonempty").clone();
            if !min.is_zero() {
                for c in row.iter_mut() {
                    *c -= &min;
                }
                offset += min;
            }
        }
        BellFunctional {
            scenario: self.scenario,
            coefficients,
            offset,
            label: self.label.clone(),
            metadata: self.metadata.clone(),
        }
    }

    /// True iff the two functionals agree on every normalized behavior,
    /// i.e. their canonical forms coincide exactly.
    pub fn eq_canonical(&self, other: &BellFunctional) -> bool {
        self.canonical_form() == other.canonical_form()
    }
}

/// Compiles one modular-expectation term into a functional over `scenario`.
///
/// For every joint setting compatible with the operands' settings and every
/// joint outcome, the residue `(sum_j sign_j a_j + shift) mod d` contributes
/// itself times the context weight `1/M^(N-k)`; the offset is zero. Rows of
/// settings not matching the operands get no coefficients at all.
pub fn compile_term(term: &ModularTerm, scenario: Scenario) -> Result<BellFunctional, Error> {
    let n = scenario.parties();
    let m = scenario.settings();
    let d = scenario.outcomes() as i64;
    for op in term.operands() {
        if op.party >= n {
            return Err(Error::Dimension(format!(
                "term operand party {} out of range for {scenario}",
                op.party
            )));
        }
        if op.setting >= m {
            return Err(Error::Dimension(format!(
                "term operand setting {} out of range for {scenario}",
                op.setting
            )));
        }
    }
    let free = n - term.operands().len();
    let weight = Rational::new(1.into(), num::pow::pow(num::BigInt::from(m), free));
    let outcomes: Vec<Vec<usize>> = scenario.joint_outcomes_iter().collect();
    let width = scenario.joint_outcomes();

    let mut f = BellFunctional::zero(scenario, term.describe());
    for (s_flat, x) in scenario.joint_settings_iter().enumerate() {
        if term
            .operands()
            .iter()
            .any(|op| x[op.party] != op.setting)
        {
            continue;
        }
        for (a_flat, a) in outcomes.iter().enumerate() {
            let mut v = term.shift();
            for op in term.operands() {
                v += op.sign.factor() * a[op.party] as i64;
            }
            let v = v.rem_euclid(d);
            if v != 0 {
                f.coefficients[s_flat * width + a_flat] = &weight * int(v);
            }
        }
    }
    Ok(f)
}

fn two_party_term(
    a_setting: usize,
    b_setting: usize,
    a_first: bool,
    shift: i64,
) -> ModularTerm {
    let (first, second) = if a_first {
        (
            TermOperand { party: 0, setting: a_setting, sign: Sign::Plus },
            TermOperand { party: 1, setting: b_setting, sign: Sign::Minus },
        )
    } else {
        (
            TermOperand { party: 1, setting: b_setting, sign: Sign::Plus },
            TermOperand { party: 0, setting: a_setting, sign: Sign::Minus },
        )
    };
    ModularTerm::new(vec![first, second], shift).expect("well-formed by construction")
}

/// The chained two-party functional `I^{M,d}`:
/// `sum_{α=0..M-1} ( <[A_α - B_α]> + <[B_α - A_{α+1}]> )` with the wraparound
/// convention that `A_M` means `A_0 + 1` (the final term is
/// `<[B_{M-1} - A_0 - 1]>`). Local behaviors satisfy `I^{M,d} >= d-1`;
/// the no-signaling minimum is `0`.
pub fn build_bkp(m: usize, d: usize) -> Result<BellFunctional, Error> {
    if m < 2 {
        return Err(Error::Argument(
            "chained functional needs at least two settings".into(),
        ));
    }
    let scenario = Scenario::new(2, m, d)?;
    let mut f = BellFunctional::zero(scenario, format!("I^{{{m},{d}}}"));
    let one = Rational::one();
    for alpha in 0..m {
        f.accumulate(&one, &compile_term(&two_party_term(alpha, alpha, true, 0), scenario)?)?;
        let (next_a, shift) = if alpha + 1 < m { (alpha + 1, 0) } else { (0, -1) };
        f.accumulate(&one, &compile_term(&two_party_term(next_a, alpha, false, shift), scenario)?)?;
    }
    Ok(f.with_metadata(FunctionalMetadata {
        classical_bound: int((d - 1) as i64),
        ns_optimum: int(0),
    }))
}

/// Operand list and accumulated wraparound shift for one term of the
/// multipartite chained functional.
///
/// `alpha` is the 0-based setting multi-index (length `N-1`); the 1-based
/// raw setting of party `j` is `α_1` (first), `α_{j-1} + α_j - 1` (middle),
/// `α_{N-1}` (last). `advance_first` / `advance_last` bump the first/last
/// raw index by one; `negated` flips every sign (the second sum of the
/// functional uses `negated` together with `advance_first`). Raw indices
/// above `M` wrap around, each wraparound adding the operand's sign to the
/// term shift (`A_{M+k} = A_k + 1`).
fn chained_operands(
    n: usize,
    m: usize,
    alpha: &[usize],
    negated: bool,
    advance_first: bool,
    advance_last: bool,
) -> (Vec<TermOperand>, i64) {
    debug_assert_eq!(alpha.len(), n - 1);
    let mut operands = Vec::with_capacity(n);
    let mut shift = 0i64;
    for party in 0..n {
        let raw_1based = if party == 0 {
            alpha[0] + 1 + usize::from(advance_first)
        } else if party == n - 1 {
            alpha[n - 2] + 1 + usize::from(advance_last)
        } else {
            (alpha[party - 1] + 1) + (alpha[party] + 1) - 1
        };
        let base = if party % 2 == 0 { Sign::Plus } else { Sign::Minus };
        let sign = if negated { base.negate() } else { base };
        let setting_1based = if raw_1based > m {
            debug_assert!(raw_1based <= 2 * m, "at most one wraparound");
            shift += sign.factor();
            raw_1based - m
        } else {
            raw_1based
        };
        operands.push(TermOperand {
            party,
            setting: setting_1based - 1,
            sign,
        });
    }
    (operands, shift)
}

/// The `N`-party chained functional `I^{N;M,d}`: for every setting
/// multi-index `α ∈ {1..M}^(N-1)`, one alternating-sign term and one
/// sign-flipped term with the first index advanced,
///
/// ```text
/// <[A¹_{α1} - A²_{α1+α2-1} + ... ± Aᴺ_{α(N-1)}]>
///   + <[-A¹_{α1+1} + A²_{α1+α2-1} - ... ∓ Aᴺ_{α(N-1)}]>,
/// ```
///
/// with the wraparound `A_{M+k} = A_k + 1` on every party. Local behaviors
/// satisfy `I^{N;M,d} >= M^(N-2) (d-1)` — a bound inherited from summing
/// `M^(N-2)` bipartite chains, tight at `(3,2,2)` but not in general (the
/// deterministic optimum at `(3,3,2)` is 5) — and the no-signaling minimum
/// is `0`. For `N = 2` this reproduces [`build_bkp`] coefficient for
/// coefficient.
pub fn build_bkp_multipartite(n: usize, m: usize, d: usize) -> Result<BellFunctional, Error> {
    if n < 2 {
        return Err(Error::Argument(
            "multipartite chained functional needs at least two parties".into(),
        ));
    }
    if m < 2 {
        return Err(Error::Argument(
            "chained functional needs at least two settings".into(),
        ));
    }
    let scenario = Scenario::new(n, m, d)?;
    let mut f = BellFunctional::zero(scenario, format!("I^{{{n};{m},{d}}}"));
    let one = Rational::one();
    for alpha in tuples(n - 1, m) {
        for negated in [false, true] {
            let (operands, shift) = chained_operands(n, m, &alpha, negated, negated, false);
            let term = ModularTerm::new(operands, shift)?;
            f.accumulate(&one, &compile_term(&term, scenario)?)?;
        }
    }
    let classical = int(num::pow::pow(m as i64, n - 2) * (d as i64 - 1));
    Ok(f.with_metadata(FunctionalMetadata {
        classical_bound: classical,
        ns_optimum: int(0),
    }))
}

/// The first (non-negated) sum of [`build_bkp_multipartite`] on its own.
/// With `advance_outer` the first and last parties' raw setting indices are
/// both bumped by one before wraparound. For an even number of parties the
/// advanced sum agrees with the plain one on every normalized behavior (a
/// change of summation variables maps one sum onto the other) — the identity
/// that lets the multipartite functional be split into bipartite chains.
pub fn bkp_leading_sum(
    n: usize,
    m: usize,
    d: usize,
    advance_outer: bool,
) -> Result<BellFunctional, Error> {
    if n < 2 || m < 2 {
        return Err(Error::Argument(
            "leading sum needs at least two parties and two settings".into(),
        ));
    }
    let scenario = Scenario::new(n, m, d)?;
    let label = if advance_outer {
        format!("I^{{{n};{m},{d}}}-leading-advanced")
    } else {
        format!("I^{{{n};{m},{d}}}-leading")
    };
    let mut f = BellFunctional::zero(scenario, label);
    let one = Rational::one();
    for alpha in tuples(n - 1, m) {
        let (operands, shift) =
            chained_operands(n, m, &alpha, false, advance_outer, advance_outer);
        let term = ModularTerm::new(operands, shift)?;
        f.accumulate(&one, &compile_term(&term, scenario)?)?;
    }
    Ok(f)
}

/// Splits `I^{M,d}` into `M-1` four-term chained pieces
///
/// ```text
/// G_i = <[A_0 - B_i]> + <[B_i - A_{i+1}]> + <[A_{i+1} - B_{i+1}]> + <[B_{i+1} - A_0 - 1]>,
/// ```
///
/// for `i = 0..M-2` (each a two-setting chained functional on settings
/// `{0, i, i+1}`), returning the pieces and the constant `-(M-2)(d-1)` such
/// that `sum_i G_i + constant` agrees with `I^{M,d}` on every normalized
/// behavior (exactly equal as vectors when `M = 2`; for larger `M` the
/// leftover cross terms are constant on each setting row, so the identity
/// holds canonically).
pub fn decompose_bkp_cglmp(m: usize, d: usize) -> Result<(Vec<BellFunctional>, Rational), Error> {
    if m < 2 {
        return Err(Error::Argument(
            "decomposition needs at least two settings".into(),
        ));
    }
    let scenario = Scenario::new(2, m, d)?;
    let mut parts = Vec::with_capacity(m - 1);
    let one = Rational::one();
    for i in 0..m - 1 {
        let mut g = BellFunctional::zero(scenario, format!("G_{i}^{{{m},{d}}}"));
        g.accumulate(&one, &compile_term(&two_party_term(0, i, true, 0), scenario)?)?;
        g.accumulate(&one, &compile_term(&two_party_term(i + 1, i, false, 0), scenario)?)?;
        g.accumulate(&one, &compile_term(&two_party_term(i + 1, i + 1, true, 0), scenario)?)?;
        g.accumulate(&one, &compile_term(&two_party_term(0, i + 1, false, -1), scenario)?)?;
        parts.push(g);
    }
    let constant = int(-((m as i64 - 2) * (d as i64 - 1)));
    Ok((parts, constant))
}

/// The modified chained functional `I'` on the `(2, 3, 2)` scenario:
///
/// ```text
/// I' = <[A0 - B0]> + <[B0 - A1]> + <[A1 - B1]>
///      + 2 <[B1 - A2]> + 2 <[A2 - B2]> + <[B2 - A0 - 1]>,
/// ```
///
/// i.e. the three-setting chain with its two final links doubled. Local
/// behaviors satisfy `I' >= 1`; the no-signaling minimum is `0`. Unlike the
/// uniform chain, this functional admits no nontrivial tradeoff between
/// overlapping pairs — it is the two-party counterexample material.
pub fn build_i_prime() -> BellFunctional {
    let scenario = Scenario::new(2, 3, 2).expect("static scenario");
    let mut f = BellFunctional::zero(scenario, "I'");
    let one = Rational::one();
    let two = int(2);
    let terms: [(usize, usize, bool, i64, &Rational); 6] = [
        (0, 0, true, 0, &one),
        (1, 0, false, 0, &one),
        (1, 1, true, 0, &one),
        (2, 1, false, 0, &two),
        (2, 2, true, 0, &two),
        (0, 2, false, -1, &one),
    ];
    for (a, b, a_first, shift, w) in terms {
        let t = compile_term(&two_party_term(a, b, a_first, shift), scenario)
            .expect("static term");
        f.accumulate(w, &t).expect("same scenario");
    }
    f.with_metadata(FunctionalMetadata {
        classical_bound: int(1),
        ns_optimum: int(0),
    })
}

/// `<A_x B_y>` for two-outcome parties: coefficients `(-1)^(a+b)` on the one
/// setting row `(x, y)`. Two parties, `d = 2` only.
pub fn correlator(scenario: Scenario, x: usize, y: usize) -> Result<BellFunctional, Error> {
    if scenario.parties() != 2 || scenario.outcomes() != 2 {
        return Err(Error::Argument(
            "correlator needs two parties with binary outcomes".into(),
        ));
    }
    let mut f = BellFunctional::zero(scenario, format!("<A{x}B{y}>"));
    for a in 0..2usize {
        for b in 0..2usize {
            let idx = scenario.flat_index(&[x, y], &[a, b])?;
            f.coefficients[idx] = int(if (a + b) % 2 == 0 { 1 } else { -1 });
        }
    }
    Ok(f)
}

/// `<A_x>` for a two-outcome party inside any scenario: coefficients
/// `(-1)^(a_party) / M^(N-1)` on every setting row where `party` measures
/// `x` (uniform average over the other parties' settings).
pub fn marginal_correlator(
    scenario: Scenario,
    party: usize,
    x: usize,
) -> Result<BellFunctional, Error> {
    if scenario.outcomes() != 2 {
        return Err(Error::Argument(
            "marginal correlator needs binary outcomes".into(),
        ));
    }
    if party >= scenario.parties() || x >= scenario.settings() {
        return Err(Error::Dimension(format!(
            "party {party} setting {x} out of range for {scenario}"
        )));
    }
    let weight = Rational::new(
        1.into(),
        num::pow::pow(num::BigInt::from(scenario.settings()), scenario.parties() - 1),
    );
    let width = scenario.joint_outcomes();
    let mut f = BellFunctional::zero(
        scenario,
        format!("<{}{x}>", party_letter(party)),
    );
    let outcomes: Vec<Vec<usize>> = scenario.joint_outcomes_iter().collect();
    for (s_flat, xs) in scenario.joint_settings_iter().enumerate() {
        if xs[party] != x {
            continue;
        }
        for (a_flat, a) in outcomes.iter().enumerate() {
            let sign = if a[party] % 2 == 0 { 1 } else { -1 };
            f.coefficients[s_flat * width + a_flat] = &weight * int(sign);
        }
    }
    Ok(f)
}

/// The `I3322` functional on the `(2, 3, 2)` scenario, in correlator form:
///
/// ```text
/// I3322 = <A0B0> + <A0B1> + <A1B0> + <A1B1> - <A0B2> + <A1B2>
///         - <A2B0> + <A2B1> + <A0> + <A1> - <B0> - <B1> - 4,
/// ```
///
/// normalized so local behaviors satisfy `I3322 <= 0` while no-signaling
/// behaviors reach `4`. This is four times the probability-table form of the
/// same facet (unit weights on `P(00|xy)` with these signs and the marginal
/// deficits `-P_A(0|1) - P_B(0|0) - 2 P_B(0|1)`); expanding those
/// probabilities into `±1` correlators is what produces the marginal block
/// and the `-4` constant above. The maximization of `I3322` trades off
/// *additively* across parties (a tripartite sum can reach twice the
/// two-party maximum), which is exactly the behavior the chained family
/// excludes.
pub fn build_i3322() -> BellFunctional {
    let scenario = Scenario::new(2, 3, 2).expect("static scenario");
    let one = Rational::one();
    let neg = int(-1);
    let correlators: [(usize, usize, &Rational); 8] = [
        (0, 0, &one),
        (0, 1, &one),
        (1, 0, &one),
        (1, 1, &one),
        (0, 2, &neg),
        (1, 2, &one),
        (2, 0, &neg),
        (2, 1, &one),
    ];
    let mut f = BellFunctional::zero(scenario, "I3322");
    for (x, y, w) in correlators {
        f.accumulate(w, &correlator(scenario, x, y).expect("static"))
            .expect("same scenario");
    }
    let marginals: [(usize, usize, &Rational); 4] =
        [(0, 0, &one), (0, 1, &one), (1, 0, &neg), (1, 1, &neg)];
    for (party, x, w) in marginals {
        f.accumulate(w, &marginal_correlator(scenario, party, x).expect("static"))
            .expect("same scenario");
    }
    f.with_offset_added(&int(-4)).with_metadata(FunctionalMetadata {
        classical_bound: int(0),
        ns_optimum: int(4),
    })
}

/// Reinterprets a functional over a larger scenario: party `j` of `f`
/// becomes party `party_map[j]`, and the coefficient of each cell of the
/// big table is the matching cell of `f` weighted by `1/M^extra` (uniform
/// averaging over the added parties' settings). On any no-signaling
/// behavior the lifted value equals the value of `f` on the marginal of the
/// mapped parties, so bounds in the metadata remain meaningful and are
/// carried through.
pub fn lift(
    f: &BellFunctional,
    party_map: &[usize],
    target: Scenario,
) -> Result<BellFunctional, Error> {
    let src = f.scenario();
    if target.settings() != src.settings() || target.outcomes() != src.outcomes() {
        return Err(Error::Dimension(format!(
            "lift target {target} must keep settings and outcomes of {src}"
        )));
    }
    if party_map.len() != src.parties() {
        return Err(Error::Dimension(format!(
            "party map has {} entries for {} parties",
            party_map.len(),
            src.parties()
        )));
    }
    let mut seen = vec![false; target.parties()];
    for &p in party_map {
        if p >= target.parties() {
            return Err(Error::Dimension(format!(
                "party map entry {p} out of range for {target}"
            )));
        }
        if seen[p] {
            return Err(Error::Argument(format!("party map repeats party {p}")));
        }
        seen[p] = true;
    }
    let extra = target.parties() - src.parties();
    let weight = Rational::new(
        1.into(),
        num::pow::pow(num::BigInt::from(target.settings()), extra),
    );
    let width = target.joint_outcomes();
    let mut out = BellFunctional::zero(
        target,
        format!("{}@{:?}", f.label(), party_map),
    );
    let outcomes: Vec<Vec<usize>> = target.joint_outcomes_iter().collect();
    for (s_flat, xs) in target.joint_settings_iter().enumerate() {
        let src_x: Vec<usize> = party_map.iter().map(|&p| xs[p]).collect();
        let src_s = src.setting_index(&src_x)?;
        for (a_flat, a) in outcomes.iter().enumerate() {
            let src_a: Vec<usize> = party_map.iter().map(|&p| a[p]).collect();
            let src_idx = src_s * src.joint_outcomes() + src.outcome_index(&src_a)?;
            let c = &f.coefficients()[src_idx];
            if !c.is_zero() {
                out.coefficients[s_flat * width + a_flat] = c * &weight;
            }
        }
    }
    out.offset = f.offset().clone();
    out.metadata = f.metadata.clone();
    Ok(out)
}

/// `P(a_i = a_j)` as a functional: weight `1/M^(N-2)` on the diagonal
/// `a_i = a_j` of every setting row with `x_i = setting_i`, `x_j = setting_j`
/// (uniform average over the remaining parties' settings).
pub fn agreement_functional(
    scenario: Scenario,
    party_i: usize,
    setting_i: usize,
    party_j: usize,
    setting_j: usize,
) -> Result<BellFunctional, Error> {
    let n = scenario.parties();
    let m = scenario.settings();
    if party_i == party_j {
        return Err(Error::Argument(
            "agreement functional needs two distinct parties".into(),
        ));
    }
    if party_i >= n || party_j >= n || setting_i >= m || setting_j >= m {
        return Err(Error::Dimension(format!(
            "agreement parties ({party_i}@{setting_i}, {party_j}@{setting_j}) out of range for {scenario}"
        )));
    }
    let weight = Rational::new(
        1.into(),
        num::pow::pow(num::BigInt::from(m), n - 2),
    );
    let width = scenario.joint_outcomes();
    let mut f = BellFunctional::zero(
        scenario,
        format!(
            "P({}{} = {}{})",
            party_letter(party_i),
            setting_i,
            party_letter(party_j),
            setting_j
        ),
    );
    let outcomes: Vec<Vec<usize>> = scenario.joint_outcomes_iter().collect();
    for (s_flat, xs) in scenario.joint_settings_iter().enumerate() {
        if xs[party_i] != setting_i || xs[party_j] != setting_j {
            continue;
        }
        for (a_flat, a) in outcomes.iter().enumerate() {
            if a[party_i] == a[party_j] {
                f.coefficients[s_flat * width + a_flat] = weight.clone();
            }
        }
    }
    Ok(f)
}

/// `P(a_party = outcome | x_party = setting)` as a functional: weight
/// `1/M^(N-1)` on every cell with the party's setting and outcome pinned
/// (uniform average over the other parties' settings). On a no-signaling
/// behavior this is exactly the single-party marginal probability.
pub fn outcome_probability_functional(
    scenario: Scenario,
    party: usize,
    setting: usize,
    outcome: usize,
) -> Result<BellFunctional, Error> {
    let n = scenario.parties();
    if party >= n || setting >= scenario.settings() || outcome >= scenario.outcomes() {
        return Err(Error::Dimension(format!(
            "probability of {}{setting} = {outcome} out of range for {scenario}",
            party_letter(party)
        )));
    }
    let weight = Rational::new(
        1.into(),
        num::pow::pow(num::BigInt::from(scenario.settings()), n - 1),
    );
    let width = scenario.joint_outcomes();
    let mut f = BellFunctional::zero(
        scenario,
        format!("P({}{setting} = {outcome})", party_letter(party)),
    );
    let outcomes: Vec<Vec<usize>> = scenario.joint_outcomes_iter().collect();
    for (s_flat, xs) in scenario.joint_settings_iter().enumerate() {
        if xs[party] != setting {
            continue;
        }
        for (a_flat, a) in outcomes.iter().enumerate() {
            if a[party] == outcome {
                f.coefficients[s_flat * width + a_flat] = weight.clone();
            }
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn uniform(n: usize, m: usize, d: usize) -> Behavior {
        let s = Scenario::new(n, m, d).unwrap();
        let cells = s.joint_outcomes() as i64;
        Behavior::from_fn(s, |_, _| ratio(1, cells))
    }

    fn all_zero_deterministic(n: usize, m: usize, d: usize) -> Behavior {
        let s = Scenario::new(n, m, d).unwrap();
        Behavior::from_fn(s, |_, a| {
            if a.iter().all(|&ai| ai == 0) {
                int(1)
            } else {
                int(0)
            }
        })
    }

    #[test]
    fn modular_term_rejects_duplicates_and_emptiness() {
        assert!(ModularTerm::new(vec![], 0).is_err());
        let op = TermOperand { party: 0, setting: 0, sign: Sign::Plus };
        let dup = TermOperand { party: 0, setting: 1, sign: Sign::Minus };
        assert!(ModularTerm::new(vec![op, dup], 0).is_err());
        assert!(ModularTerm::new(vec![op], 0).is_ok());
    }

    #[test]
    fn single_party_term_compiles_to_outcome_values() {
        // <[A0]> over N=1, M=2, d=3: row x=0 holds (0,1,2); row x=1 is empty.
        let s = Scenario::new(1, 2, 3).unwrap();
        let t = ModularTerm::new(
            vec![TermOperand { party: 0, setting: 0, sign: Sign::Plus }],
            0,
        )
        .unwrap();
        let f = compile_term(&t, s).unwrap();
        assert_eq!(
            f.coefficients(),
            &[int(0), int(1), int(2), int(0), int(0), int(0)]
        );
        assert_eq!(*f.offset(), int(0));
    }

    #[test]
    fn shift_is_reduced_modulo_d() {
        // <[A0 + 5]> with d=2: outcomes (0,1) -> residues (1,0).
        let s = Scenario::new(1, 1, 2).unwrap();
        let t = ModularTerm::new(
            vec![TermOperand { party: 0, setting: 0, sign: Sign::Plus }],
            5,
        )
        .unwrap();
        let f = compile_term(&t, s).unwrap();
        assert_eq!(f.coefficients(), &[int(1), int(0)]);
        // Negative shifts reduce into 0..d as well: <[A0 - 1]> -> (1, 0).
        let t = ModularTerm::new(
            vec![TermOperand { party: 0, setting: 0, sign: Sign::Plus }],
            -1,
        )
        .unwrap();
        let f = compile_term(&t, s).unwrap();
        assert_eq!(f.coefficients(), &[int(1), int(0)]);
    }

    #[test]
    fn partial_terms_average_over_free_settings() {
        // <[A0]> over N=2, M=2, d=2 puts weight 1/2 on rows (0,0) and (0,1).
        let s = Scenario::new(2, 2, 2).unwrap();
        let t = ModularTerm::new(
            vec![TermOperand { party: 0, setting: 0, sign: Sign::Plus }],
            0,
        )
        .unwrap();
        let f = compile_term(&t, s).unwrap();
        for (s_flat, x) in s.joint_settings_iter().enumerate() {
            for (a_flat, a) in s.joint_outcomes_iter().enumerate() {
                let expected = if x[0] == 0 && a[0] == 1 { ratio(1, 2) } else { int(0) };
                assert_eq!(f.coefficients()[s_flat * 4 + a_flat], expected, "x={x:?} a={a:?}");
            }
        }
        // Its value is the context-averaged expectation of a0 at x0 = 0.
        assert_eq!(f.value(&uniform(2, 2, 2)).unwrap(), ratio(1, 2));
    }

    #[test]
    fn chained_functional_known_values() {
        for (m, d) in [(2usize, 2usize), (2, 3), (3, 2), (3, 3), (4, 5)] {
            let f = build_bkp(m, d).unwrap();
            // All-zero deterministic outcomes leave only the wraparound term:
            // every link is <[0 - 0]> except <[B - A - 1]> = d - 1.
            let det = all_zero_deterministic(2, m, d);
            assert_eq!(f.value(&det).unwrap(), int(d as i64 - 1), "det M={m} d={d}");
            // Uniform noise: each of the 2M links averages (d-1)/2.
            let uni = uniform(2, m, d);
            assert_eq!(
                f.value(&uni).unwrap(),
                int(m as i64) * ratio(d as i64 - 1, 1),
                "uniform M={m} d={d}"
            );
            let meta = f.metadata().unwrap();
            assert_eq!(meta.classical_bound, int(d as i64 - 1));
            assert_eq!(meta.ns_optimum, int(0));
        }
    }

    #[test]
    fn multipartite_chain_reduces_to_bipartite_exactly() {
        for (m, d) in [(2usize, 2usize), (3, 2), (2, 3), (3, 3)] {
            let two = build_bkp(m, d).unwrap();
            let multi = build_bkp_multipartite(2, m, d).unwrap();
            assert_eq!(two, multi, "M={m} d={d}");
        }
    }

    #[test]
    fn multipartite_chain_known_values() {
        // N=3, M=2, d=2: all-zero outcomes make every term with a wrapped
        // index contribute its shift residue; the total is M^(N-2)(d-1) = 2.
        let f = build_bkp_multipartite(3, 2, 2).unwrap();
        let det = all_zero_deterministic(3, 2, 2);
        assert_eq!(f.value(&det).unwrap(), int(2));
        // Uniform: 2 M^(N-1) terms, each averaging (d-1)/2.
        let uni = uniform(3, 2, 2);
        assert_eq!(f.value(&uni).unwrap(), int(4));
        assert_eq!(f.metadata().unwrap().classical_bound, int(2));

        // N=3, M=3, d=2: the all-zero box is local but not optimal. Counting
        // wraparound shifts by hand: the plain sum picks up 1 on the three
        // indices with α1+α2 >= 5, the flipped sum on (2,3) and (3,1).
        let f = build_bkp_multipartite(3, 3, 2).unwrap();
        assert_eq!(f.value(&all_zero_deterministic(3, 3, 2)).unwrap(), int(5));
        assert_eq!(f.metadata().unwrap().classical_bound, int(3));
    }

    #[test]
    fn canonical_form_moves_row_minima_into_offset() {
        let s = Scenario::new(1, 1, 2).unwrap();
        let f = BellFunctional::from_parts(s, vec![int(3), int(5)], int(1), "t").unwrap();
        let c = f.canonical_form();
        assert_eq!(c.coefficients(), &[int(0), int(2)]);
        assert_eq!(*c.offset(), int(4));
        // Idempotent, and value-preserving on a normalized behavior.
        assert_eq!(c.canonical_form(), c);
        let b = Behavior::new(s, vec![ratio(1, 3), ratio(2, 3)]).unwrap();
        assert_eq!(f.value(&b).unwrap(), c.value(&b).unwrap());
    }

    #[test]
    fn eq_canonical_ignores_row_constants_only() {
        let s = Scenario::new(1, 2, 2).unwrap();
        let f = BellFunctional::from_parts(s, vec![int(0), int(1), int(2), int(2)], int(0), "f")
            .unwrap();
        // Add 3 to row 0 and -2 to row 1, compensating in the offset.
        let g = BellFunctional::from_parts(s, vec![int(3), int(4), int(0), int(0)], int(-1), "g")
            .unwrap();
        assert!(f != g);
        assert!(f.eq_canonical(&g));
        // A non-row-constant change breaks canonical equality.
        let h = BellFunctional::from_parts(s, vec![int(0), int(1), int(2), int(3)], int(0), "h")
            .unwrap();
        assert!(!f.eq_canonical(&h));
    }

    #[test]
    fn decomposition_into_chained_pieces() {
        // M=2: one piece, equal as raw vectors, zero constant.
        let (parts, constant) = decompose_bkp_cglmp(2, 3).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(constant, int(0));
        assert_eq!(parts[0], build_bkp(2, 3).unwrap());

        // Larger M: the sum of pieces plus the constant agrees with the chain
        // on all normalized behaviors (the cross links appear once per piece
        // pair as row constants), though not as raw vectors.
        for (m, d) in [(3usize, 2usize), (3, 3), (4, 2), (4, 3), (5, 4)] {
            let (parts, constant) = decompose_bkp_cglmp(m, d).unwrap();
            assert_eq!(parts.len(), m - 1);
            assert_eq!(constant, int(-((m as i64 - 2) * (d as i64 - 1))));
            let weighted: Vec<(Rational, &BellFunctional)> =
                parts.iter().map(|p| (int(1), p)).collect();
            let sum = BellFunctional::combine(&weighted, "sum")
                .unwrap()
                .with_offset_added(&constant);
            let chain = build_bkp(m, d).unwrap();
            if m > 2 {
                assert!(sum != chain, "raw vectors differ for M={m}");
            }
            assert!(sum.eq_canonical(&chain), "M={m} d={d}");
        }
    }

    #[test]
    fn chsh_is_an_affine_image_of_the_chain() {
        // CHSH = <A0B0> + <A1B0> + <A1B1> - <A0B1> = 4 - 2 I^{2,2} on all
        // normalized behaviors.
        let s = Scenario::new(2, 2, 2).unwrap();
        let mut chsh = BellFunctional::zero(s, "CHSH");
        for (x, y, w) in [(0, 0, 1i64), (1, 0, 1), (1, 1, 1), (0, 1, -1)] {
            chsh.accumulate(&int(w), &correlator(s, x, y).unwrap()).unwrap();
        }
        let rhs = build_bkp(2, 2)
            .unwrap()
            .scale(&int(-2))
            .with_offset_added(&int(4));
        assert!(chsh.eq_canonical(&rhs));
        // Spot-check the correspondence of the two classical bounds: 2 <-> 1.
        let det = all_zero_deterministic(2, 2, 2);
        assert_eq!(chsh.value(&det).unwrap(), int(2));
    }

    #[test]
    fn modified_chain_known_values() {
        let f = build_i_prime();
        assert_eq!(f.scenario(), Scenario::new(2, 3, 2).unwrap());
        // All-zero outcomes: only <[B2 - A0 - 1]> survives, value 1.
        assert_eq!(f.value(&all_zero_deterministic(2, 3, 2)).unwrap(), int(1));
        // Uniform: total term weight 8, each averaging 1/2.
        assert_eq!(f.value(&uniform(2, 3, 2)).unwrap(), int(4));
    }

    #[test]
    fn i3322_known_values() {
        let f = build_i3322();
        // All-zero outcomes: correlators sum to 4, marginals cancel, and the
        // -4 constant lands the local value exactly on the bound.
        assert_eq!(f.value(&all_zero_deterministic(2, 3, 2)).unwrap(), int(0));
        // Uniform noise kills every correlator and marginal; only the
        // constant remains.
        assert_eq!(f.value(&uniform(2, 3, 2)).unwrap(), int(-4));
    }

    #[test]
    fn lift_matches_direct_compilation() {
        // Compiling a term in the big scenario equals lifting its small
        // compilation, for either choice of the embedded party.
        let small = Scenario::new(1, 2, 3).unwrap();
        let big = Scenario::new(2, 2, 3).unwrap();
        let t = ModularTerm::new(
            vec![TermOperand { party: 0, setting: 1, sign: Sign::Plus }],
            1,
        )
        .unwrap();
        let f_small = compile_term(&t, small).unwrap();
        let lifted = lift(&f_small, &[0], big).unwrap();
        assert_eq!(lifted, compile_term(&t, big).unwrap());

        let t_on_1 = ModularTerm::new(
            vec![TermOperand { party: 1, setting: 1, sign: Sign::Plus }],
            1,
        )
        .unwrap();
        let lifted = lift(&f_small, &[1], big).unwrap();
        assert_eq!(lifted, compile_term(&t_on_1, big).unwrap());
    }

    #[test]
    fn lift_rejects_bad_maps() {
        let small = Scenario::new(2, 2, 2).unwrap();
        let big = Scenario::new(3, 2, 2).unwrap();
        let f = build_bkp(2, 2).unwrap();
        assert!(lift(&f, &[0, 0], big).is_err());
        assert!(lift(&f, &[0, 3], big).is_err());
        assert!(lift(&f, &[0], big).is_err());
        assert!(lift(&f, &[0, 1], Scenario::new(3, 3, 2).unwrap()).is_err());
        assert!(lift(&f, &[0, 1], small).is_ok());
    }

    #[test]
    fn agreement_functional_matches_behavior_agreement() {
        let s = Scenario::new(3, 2, 2).unwrap();
        let b = Behavior::from_fn(s, |_, a| {
            // Perfect three-way correlation.
            if a[0] == a[1] && a[1] == a[2] {
                ratio(1, 2)
            } else {
                int(0)
            }
        });
        for (i, j) in [(0usize, 2usize), (2, 0), (0, 1)] {
            let f = agreement_functional(s, i, 0, j, 1).unwrap();
            assert_eq!(
                f.value(&b).unwrap(),
                b.pair_agreement_probability(i, 0, j, 1).unwrap()
            );
        }
        let f = agreement_functional(s, 0, 0, 2, 1).unwrap();
        assert_eq!(f.value(&b).unwrap(), int(1));
    }

    #[test]
    fn outcome_probability_matches_marginals() {
        let s = Scenario::new(2, 3, 2).unwrap();
        let u = uniform(2, 3, 2);
        let z = all_zero_deterministic(2, 3, 2);
        for party in 0..2 {
            for x in 0..3 {
                for a in 0..2 {
                    let f = outcome_probability_functional(s, party, x, a).unwrap();
                    assert_eq!(f.value(&u).unwrap(), ratio(1, 2));
                    assert_eq!(f.value(&z).unwrap(), int(1 - a as i64));
                }
            }
        }
        assert!(outcome_probability_functional(s, 2, 0, 0).is_err());
        assert!(outcome_probability_functional(s, 0, 3, 0).is_err());
        assert!(outcome_probability_functional(s, 0, 0, 2).is_err());
    }

    #[test]
    fn functional_serde_round_trip() {
        let f = build_bkp(3, 2).unwrap();
        let json = serde_json::to_string(&f).unwrap();
        let back: BellFunctional = serde_json::from_str(&json).unwrap();
        assert_eq!(f, back);
        assert_eq!(f.label(), back.label());
        assert_eq!(f.metadata(), back.metadata());
    }
}
