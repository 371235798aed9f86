//! Exact linear programming: equality-form problems over nonnegative
//! variables, a two-phase dense-tableau simplex with Bland's rule, dual
//! certificates checked by pure recomputation, and the no-signaling
//! constraint system.
//!
//! Everything is `BigRational`; a reported optimum is an exact number, and
//! [`verify_certificate`] re-derives optimality from the problem data alone
//! (primal feasibility, dual feasibility, zero duality gap), so no claim
//! rests on trusting the solver's internals.

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::behavior::Behavior;
use crate::bell::BellFunctional;
use crate::error::Error;
use crate::rational::{
    serde_rational, serde_rational_opt, serde_rational_vec, serde_rational_vec_opt, Rational,
};
use crate::scenario::{tuples, Scenario};

/// Optimization direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpSense {
    #[serde(rename = "minimize")]
    Minimize,
    #[serde(rename = "maximize")]
    Maximize,
}

impl std::fmt::Display for LpSense {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpSense::Minimize => write!(f, "minimize"),
            LpSense::Maximize => write!(f, "maximize"),
        }
    }
}

/// Outcome classification of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// One equality constraint `row · x = rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpConstraint {
    #[serde(with = "serde_rational_vec")]
    pub row: Vec<Rational>,
    #[serde(with = "serde_rational")]
    pub rhs: Rational,
}

/// `optimize objective · x + constant  subject to  A x = b, x >= 0`.
///
/// Equality-only on purpose: the no-signaling polytope is natively equalities
/// plus nonnegativity, and Bell-value side conditions enter as equalities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLpProblem")]
pub struct LpProblem {
    num_vars: usize,
    sense: LpSense,
    #[serde(with = "serde_rational_vec")]
    objective: Vec<Rational>,
    #[serde(with = "serde_rational")]
    constant: Rational,
    eq_constraints: Vec<LpConstraint>,
}

#[derive(Deserialize)]
struct RawLpProblem {
    num_vars: usize,
    sense: LpSense,
    objective: Vec<String>,
    constant: String,
    eq_constraints: Vec<LpConstraint>,
}

impl TryFrom<RawLpProblem> for LpProblem {
    type Error = Error;

    fn try_from(raw: RawLpProblem) -> Result<Self, Error> {
        let objective = raw
            .objective
            .iter()
            .map(|s| crate::rational::parse(s))
            .collect::<Result<Vec<_>, _>>()?;
        LpProblem::new(
            raw.num_vars,
            raw.sense,
            objective,
            crate::rational::parse(&raw.constant)?,
            raw.eq_constraints,
        )
    }
}

impl LpProblem {
    pub fn new(
        num_vars: usize,
        sense: LpSense,
        objective: Vec<Rational>,
        constant: Rational,
        eq_constraints: Vec<LpConstraint>,
    ) -> Result<Self, Error> {
        if objective.len() != num_vars {
            return Err(Error::Dimension(format!(
                "objective has {} coefficients for {num_vars} variables",
                objective.len()
            )));
        }
        for (i, c) in eq_constraints.iter().enumerate() {
            if c.row.len() != num_vars {
                return Err(Error::Dimension(format!(
                    "constraint {i} has {} coefficients for {num_vars} variables",
                    c.row.len()
                )));
            }
        }
        Ok(LpProblem {
            num_vars,
            sense,
            objective,
            constant,
            eq_constraints,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn sense(&self) -> LpSense {
        self.sense
    }

    pub fn objective(&self) -> &[Rational] {
        &self.objective
    }

    pub fn constant(&self) -> &Rational {
        &self.constant
    }

    pub fn eq_constraints(&self) -> &[LpConstraint] {
        &self.eq_constraints
    }
}

/// Result of a solve. `optimum` includes the problem's constant term; the
/// certificate (`dual`, `reduced_costs`) is populated exactly when optimal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    #[serde(
        with = "serde_rational_opt",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub optimum: Option<Rational>,
    #[serde(
        with = "serde_rational_vec_opt",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub primal: Option<Vec<Rational>>,
    /// One multiplier per equality constraint.
    #[serde(
        with = "serde_rational_vec_opt",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub dual: Option<Vec<Rational>>,
    /// `objective - Aᵀ·dual`, componentwise; nonnegative for a minimum,
    /// nonpositive for a maximum.
    #[serde(
        with = "serde_rational_vec_opt",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub reduced_costs: Option<Vec<Rational>>,
}

impl LpSolution {
    fn terminal(status: LpStatus) -> Self {
        LpSolution {
            status,
            optimum: None,
            primal: None,
            dual: None,
            reduced_costs: None,
        }
    }
}

enum RunResult {
    Optimal,
    Unbounded,
}

/// Normalized pivot: scales row `r` so column `j` reads 1, eliminates column
/// `j` from every other row, and records `j` as basic in row `r`. Rationals
/// stay in lowest terms automatically, which keeps entry growth in check.
fn pivot(
    rows: &mut [Vec<Rational>],
    rhs: &mut [Rational],
    basis: &mut [usize],
    r: usize,
    j: usize,
) {
    let width = rows[r].len();
    let piv = rows[r][j].clone();
    if !piv.is_one() {
        for c in 0..width {
            if !rows[r][c].is_zero() {
                rows[r][c] /= &piv;
            }
        }
        rhs[r] /= &piv;
    }
    let touched: Vec<usize> = (0..width).filter(|&c| !rows[r][c].is_zero()).collect();
    for i in 0..rows.len() {
        if i == r {
            continue;
        }
        let factor = rows[i][j].clone();
        if factor.is_zero() {
            continue;
        }
        for &c in &touched {
            let delta = &factor * &rows[r][c];
            rows[i][c] -= delta;
        }
        let delta = &factor * &rhs[r];
        rhs[i] -= delta;
    }
    basis[r] = j;
}

/// Runs simplex iterations on a feasible tableau until optimal or unbounded.
///
/// Bland's rule throughout: the entering column is the smallest index (below
/// `entering_limit`, so artificials never re-enter) with negative reduced
/// cost; ratio-test ties break toward the smallest basic variable index.
/// This guarantees termination on degenerate problems.
fn run(
    rows: &mut [Vec<Rational>],
    rhs: &mut [Rational],
    basis: &mut [usize],
    cost: &mut [Rational],
    cost_rhs: &mut Rational,
    entering_limit: usize,
) -> RunResult {
    loop {
        let Some(j) = (0..entering_limit).find(|&j| cost[j].is_negative()) else {
            return RunResult::Optimal;
        };
        let mut leaving: Option<(usize, Rational)> = None;
        for i in 0..rows.len() {
            if rows[i][j].is_positive() {
                let ratio = &rhs[i] / &rows[i][j];
                let better = match &leaving {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && basis[i] < basis[*bi]),
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
        }
        let Some((r, _)) = leaving else {
            return RunResult::Unbounded;
        };
        let factor = cost[j].clone();
        pivot(rows, rhs, basis, r, j);
        for (c, cost_c) in cost.iter_mut().enumerate() {
            if !rows[r][c].is_zero() {
                let delta = &factor * &rows[r][c];
                *cost_c -= delta;
            }
        }
        *cost_rhs -= &factor * &rhs[r];
    }
}

/// Exact two-phase simplex. Deterministic: identical problems produce
/// bit-identical solutions. Infeasibility and unboundedness are reported in
/// the status, never as errors.
pub fn solve(problem: &LpProblem) -> LpSolution {
    let n = problem.num_vars;
    let m = problem.eq_constraints.len();
    let width = n + m;

    let internal_obj: Vec<Rational> = match problem.sense {
        LpSense::Minimize => problem.objective.clone(),
        LpSense::Maximize => problem.objective.iter().map(|c| -c).collect(),
    };

    // Tableau with nonnegative right-hand sides and an artificial identity
    // block; remember which rows were negated to un-flip duals later.
    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(m);
    let mut rhs: Vec<Rational> = Vec::with_capacity(m);
    let mut flipped = vec![false; m];
    for (i, c) in problem.eq_constraints.iter().enumerate() {
        let neg = c.rhs.is_negative();
        flipped[i] = neg;
        let mut row: Vec<Rational> = Vec::with_capacity(width);
        row.extend(c.row.iter().map(|v| if neg { -v } else { v.clone() }));
        row.extend((0..m).map(|k| {
            if k == i {
                Rational::one()
            } else {
                Rational::zero()
            }
        }));
        rows.push(row);
        rhs.push(if neg { -&c.rhs } else { c.rhs.clone() });
    }
    let mut basis: Vec<usize> = (n..width).collect();

    // Phase 1: minimize the sum of artificials, starting from the artificial
    // basis (cost row with basic columns eliminated).
    let mut cost: Vec<Rational> = vec![Rational::zero(); width];
    for slot in cost.iter_mut().take(width).skip(n) {
        *slot = Rational::one();
    }
    let mut cost_rhs = Rational::zero();
    for i in 0..m {
        for (c, cost_c) in cost.iter_mut().enumerate() {
            if !rows[i][c].is_zero() {
                let delta = rows[i][c].clone();
                *cost_c -= delta;
            }
        }
        cost_rhs -= &rhs[i];
    }
    match run(&mut rows, &mut rhs, &mut basis, &mut cost, &mut cost_rhs, n) {
        RunResult::Optimal => {}
        RunResult::Unbounded => unreachable!("phase-1 objective is bounded below by zero"),
    }
    if !cost_rhs.is_zero() {
        // Residual artificial mass: the equalities admit no nonnegative point.
        return LpSolution::terminal(LpStatus::Infeasible);
    }

    // Pivot remaining artificials out of the basis; a row whose original
    // coefficients were eliminated entirely is a dependent constraint and is
    // dropped (its artificial column stays all-zero on surviving rows, so the
    // corresponding dual multiplier comes out zero below).
    let mut i = 0;
    while i < rows.len() {
        if basis[i] >= n {
            match (0..n).find(|&j| !rows[i][j].is_zero()) {
                Some(j) => pivot(&mut rows, &mut rhs, &mut basis, i, j),
                None => {
                    rows.remove(i);
                    rhs.remove(i);
                    basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    // Phase 2 on the original objective.
    let mut cost: Vec<Rational> = vec![Rational::zero(); width];
    cost[..n].clone_from_slice(&internal_obj);
    let mut cost_rhs = Rational::zero();
    for i in 0..rows.len() {
        let cb = cost[basis[i]].clone();
        if !cb.is_zero() {
            for (c, cost_c) in cost.iter_mut().enumerate() {
                if !rows[i][c].is_zero() {
                    let delta = &cb * &rows[i][c];
                    *cost_c -= delta;
                }
            }
            cost_rhs -= &cb * &rhs[i];
        }
    }
    match run(&mut rows, &mut rhs, &mut basis, &mut cost, &mut cost_rhs, n) {
        RunResult::Optimal => {}
        RunResult::Unbounded => return LpSolution::terminal(LpStatus::Unbounded),
    }

    let mut primal = vec![Rational::zero(); n];
    for (i, &b) in basis.iter().enumerate() {
        debug_assert!(b < n, "artificials were driven out before phase 2");
        primal[b] = rhs[i].clone();
    }
    let internal_value = -cost_rhs;
    let optimum = match problem.sense {
        LpSense::Minimize => internal_value + &problem.constant,
        LpSense::Maximize => -internal_value + &problem.constant,
    };

    // Dual multipliers: the artificial block of the final tableau holds the
    // basis inverse, so y = c_B · B⁻¹ column by column; un-flip negated rows
    // and re-orient for maximization.
    let mut dual = Vec::with_capacity(m);
    for k in 0..m {
        let mut acc = Rational::zero();
        for (i, row) in rows.iter().enumerate() {
            if !row[n + k].is_zero() {
                acc += &internal_obj[basis[i]] * &row[n + k];
            }
        }
        if flipped[k] {
            acc = -acc;
        }
        if problem.sense == LpSense::Maximize {
            acc = -acc;
        }
        dual.push(acc);
    }

    // Reduced costs recomputed from the original data, so the certificate is
    // a statement about the problem, not about solver state.
    let mut reduced = problem.objective.clone();
    for (k, c) in problem.eq_constraints.iter().enumerate() {
        if dual[k].is_zero() {
            continue;
        }
        for (j, slot) in reduced.iter_mut().enumerate() {
            if !c.row[j].is_zero() {
                let delta = &dual[k] * &c.row[j];
                *slot -= delta;
            }
        }
    }

    LpSolution {
        status: LpStatus::Optimal,
        optimum: Some(optimum),
        primal: Some(primal),
        dual: Some(dual),
        reduced_costs: Some(reduced),
    }
}

/// Pure recomputation of optimality from problem data and a claimed solution:
/// primal feasibility (`x >= 0`, `Ax = b` exactly), consistency of the
/// reported optimum with the primal, dual feasibility (reduced costs equal
/// `c - Aᵀy` and carry the sign required by the sense), zero duality gap
/// (`y·b + constant` equals the optimum), and complementary slackness.
/// Anything missing or inexact returns false; nothing here trusts `solve`.
pub fn verify_certificate(problem: &LpProblem, solution: &LpSolution) -> bool {
    if solution.status != LpStatus::Optimal {
        return false;
    }
    let (Some(optimum), Some(x), Some(y), Some(r)) = (
        solution.optimum.as_ref(),
        solution.primal.as_ref(),
        solution.dual.as_ref(),
        solution.reduced_costs.as_ref(),
    ) else {
        return false;
    };
    let n = problem.num_vars;
    let m = problem.eq_constraints.len();
    if x.len() != n || y.len() != m || r.len() != n {
        return false;
    }
    if x.iter().any(|v| v.is_negative()) {
        return false;
    }
    for c in &problem.eq_constraints {
        let mut lhs = Rational::zero();
        for (a, v) in c.row.iter().zip(x) {
            if !a.is_zero() && !v.is_zero() {
                lhs += a * v;
            }
        }
        if lhs != c.rhs {
            return false;
        }
    }
    let mut primal_value = problem.constant.clone();
    for (c, v) in problem.objective.iter().zip(x) {
        if !c.is_zero() && !v.is_zero() {
            primal_value += c * v;
        }
    }
    if primal_value != *optimum {
        return false;
    }
    // Reduced costs must be exactly c - Aᵀy …
    let mut expected = problem.objective.clone();
    for (k, c) in problem.eq_constraints.iter().enumerate() {
        if y[k].is_zero() {
            continue;
        }
        for (j, slot) in expected.iter_mut().enumerate() {
            if !c.row[j].is_zero() {
                let delta = &y[k] * &c.row[j];
                *slot -= delta;
            }
        }
    }
    if expected != *r {
        return false;
    }
    // … with the sign dictated by the sense.
    let sign_ok = match problem.sense {
        LpSense::Minimize => r.iter().all(|v| !v.is_negative()),
        LpSense::Maximize => r.iter().all(|v| !v.is_positive()),
    };
    if !sign_ok {
        return false;
    }
    // Zero duality gap.
    let mut dual_value = problem.constant.clone();
    for (yk, c) in y.iter().zip(&problem.eq_constraints) {
        if !yk.is_zero() && !c.rhs.is_zero() {
            dual_value += yk * &c.rhs;
        }
    }
    if dual_value != *optimum {
        return false;
    }
    // Complementary slackness.
    let mut slack = Rational::zero();
    for (rj, xj) in r.iter().zip(x) {
        if !rj.is_zero() && !xj.is_zero() {
            slack += rj * xj;
        }
    }
    slack.is_zero()
}

/// The equality system cutting the no-signaling polytope out of the
/// nonnegative orthant: one normalization row per joint setting (in flat
/// order), then, for each party, each adjacent settings pair `x` vs `x+1`,
/// each joint setting of the other parties, and each joint outcome of the
/// other parties (all in lexicographic order), the difference of the two
/// summed-out marginals. Redundant rows are deliberately kept; the solver's
/// phase 1 absorbs them. Row count: `M^N + N(M-1)M^(N-1)d^(N-1)`.
pub fn ns_constraints(scenario: Scenario) -> Vec<LpConstraint> {
    let n = scenario.parties();
    let m = scenario.settings();
    let d = scenario.outcomes();
    let num_vars = scenario.table_len();
    let mut out = Vec::new();

    let width = scenario.joint_outcomes();
    for s_flat in 0..scenario.joint_settings() {
        let mut row = vec![Rational::zero(); num_vars];
        for slot in row.iter_mut().skip(s_flat * width).take(width) {
            *slot = Rational::one();
        }
        out.push(LpConstraint {
            row,
            rhs: Rational::one(),
        });
    }

    for party in 0..n {
        let others: Vec<usize> = (0..n).filter(|&p| p != party).collect();
        for x_low in 0..m - 1 {
            for ctx_settings in tuples(n - 1, m) {
                for ctx_outcomes in tuples(n - 1, d) {
                    let mut row = vec![Rational::zero(); num_vars];
                    for (x_party, sign) in [(x_low, 1i64), (x_low + 1, -1i64)] {
                        let mut x = vec![0usize; n];
                        x[party] = x_party;
                        for (k, &p) in others.iter().enumerate() {
                            x[p] = ctx_settings[k];
                        }
                        let mut a = vec![0usize; n];
                        for (k, &p) in others.iter().enumerate() {
                            a[p] = ctx_outcomes[k];
                        }
                        for a_party in 0..d {
                            a[party] = a_party;
                            let idx = scenario
                                .flat_index(&x, &a)
                                .expect("indices in range by construction");
                            row[idx] += crate::rational::int(sign);
                        }
                    }
                    out.push(LpConstraint {
                        row,
                        rhs: Rational::zero(),
                    });
                }
            }
        }
    }
    out
}

/// An optimal Bell-value computation: exact optimum, the optimizing behavior,
/// and the underlying certified solution.
#[derive(Clone, Debug)]
pub struct BellOptimum {
    pub optimum: Rational,
    pub witness: Behavior,
    pub solution: LpSolution,
}

/// Outcome of [`optimize_bell`]: inconsistent side conditions surface as
/// `Infeasible`, never as an error.
#[derive(Clone, Debug)]
pub enum BellOutcome {
    Optimal(BellOptimum),
    Infeasible(LpSolution),
    Unbounded(LpSolution),
}

impl BellOutcome {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, BellOutcome::Infeasible(_))
    }

    pub fn optimal(&self) -> Option<&BellOptimum> {
        match self {
            BellOutcome::Optimal(opt) => Some(opt),
            _ => None,
        }
    }

    /// Unwraps the optimal case; a non-optimal outcome becomes a
    /// construction error naming the status.
    pub fn into_optimal(self) -> Result<BellOptimum, Error> {
        match self {
            BellOutcome::Optimal(opt) => Ok(opt),
            BellOutcome::Infeasible(_) => Err(Error::Construction(
                "expected an optimal LP, got infeasible".into(),
            )),
            BellOutcome::Unbounded(_) => Err(Error::Construction(
                "expected an optimal LP, got unbounded".into(),
            )),
        }
    }
}

/// Assembles the LP for optimizing `f` over its scenario's no-signaling
/// polytope intersected with `{ g(p) = target }` for each extra pair:
/// variables are the table cells, constraints are [`ns_constraints`] plus one
/// equality per extra functional (`g`'s offset folded into the target).
pub fn bell_lp_problem(
    f: &BellFunctional,
    sense: LpSense,
    extra_eq: &[(&BellFunctional, Rational)],
) -> Result<LpProblem, Error> {
    let scenario = f.scenario();
    let mut constraints = ns_constraints(scenario);
    for (g, target) in extra_eq {
        if g.scenario() != scenario {
            return Err(Error::Dimension(format!(
                "side condition over {} mixed into an LP over {}",
                g.scenario(),
                scenario
            )));
        }
        constraints.push(LpConstraint {
            row: g.coefficients().to_vec(),
            rhs: target - g.offset(),
        });
    }
    LpProblem::new(
        scenario.table_len(),
        sense,
        f.coefficients().to_vec(),
        f.offset().clone(),
        constraints,
    )
}

/// Optimizes a Bell functional over the no-signaling polytope (plus optional
/// equality side conditions). An optimal vertex is repackaged as a
/// [`Behavior`] and re-validated — normalization, nonnegativity, and
/// no-signaling are checked on the result, not assumed.
pub fn optimize_bell(
    f: &BellFunctional,
    sense: LpSense,
    extra_eq: &[(&BellFunctional, Rational)],
) -> Result<BellOutcome, Error> {
    let problem = bell_lp_problem(f, sense, extra_eq)?;
    let solution = solve(&problem);
    match solution.status {
        LpStatus::Infeasible => Ok(BellOutcome::Infeasible(solution)),
        LpStatus::Unbounded => Ok(BellOutcome::Unbounded(solution)),
        LpStatus::Optimal => {
            let optimum = solution.optimum.clone().expect("present when optimal");
            let table = solution.primal.clone().expect("present when optimal");
            let witness = Behavior::new(f.scenario(), table)?.with_provenance(format!(
                "lp witness: {sense} {}",
                f.label()
            ));
            if !witness.validate().is_empty() || !witness.check_no_signaling().is_empty() {
                return Err(Error::Construction(
                    "LP produced a vertex violating the behavior invariants".into(),
                ));
            }
            Ok(BellOutcome::Optimal(BellOptimum {
                optimum,
                witness,
                solution,
            }))
        }
    }
}
