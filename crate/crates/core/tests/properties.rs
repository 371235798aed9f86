//! Structural and algebraic invariants that need no large LP runs: exact
//! tensor identities between the functional builders, brute-force classical
//! bounds, no-signaling invariance of the context-averaging rule, solver
//! determinism, and certificate tamper-resistance.

use bellmono::behavior::Behavior;
use bellmono::bell::{
    bkp_leading_sum, build_bkp, build_bkp_multipartite, build_i3322, build_i_prime,
    compile_term, correlator, decompose_bkp_cglmp, lift, BellFunctional, ModularTerm,
    Sign, TermOperand,
};
use bellmono::boxes::{local_box, mix, nl_box_bipartite, nl_box_multipartite, MixtureSpec};
use bellmono::error::Error;
use bellmono::lp::{bell_lp_problem, optimize_bell, solve, verify_certificate, LpSense, LpStatus};
use bellmono::rational::{int, ratio, Rational};
use bellmono::scenario::{tuples, Scenario};
use num::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The deterministic behavior in which party `i` answers `assign[i][x]` to
/// setting `x`.
fn deterministic(scenario: Scenario, assign: &[Vec<usize>]) -> Behavior {
    Behavior::from_fn(scenario, |x, a| {
        let hit = (0..scenario.parties()).all(|i| a[i] == assign[i][x[i]]);
        if hit {
            Rational::one()
        } else {
            Rational::zero()
        }
    })
}

/// Every deterministic local strategy of the scenario.
fn all_deterministic(scenario: Scenario) -> Vec<Behavior> {
    let per_party: Vec<Vec<usize>> =
        tuples(scenario.settings(), scenario.outcomes()).collect();
    tuples(scenario.parties(), per_party.len())
        .map(|choice| {
            let assign: Vec<Vec<usize>> =
                choice.iter().map(|&k| per_party[k].clone()).collect();
            deterministic(scenario, &assign)
        })
        .collect()
}

fn extremes(
    f: &BellFunctional,
) -> (Rational, Rational) {
    let mut lo: Option<Rational> = None;
    let mut hi: Option<Rational> = None;
    for det in all_deterministic(f.scenario()) {
        let v = f.value(&det).unwrap();
        if lo.as_ref().is_none_or(|cur| v < *cur) {
            lo = Some(v.clone());
        }
        if hi.as_ref().is_none_or(|cur| v > *cur) {
            hi = Some(v);
        }
    }
    (lo.unwrap(), hi.unwrap())
}

proptest! {
    #[test]
    fn flat_indexing_round_trips(n in 1usize..=3, m in 1usize..=3, d in 2usize..=4, salt in 0usize..10_000) {
        let scenario = Scenario::new(n, m, d).unwrap();
        let flat = salt % scenario.table_len();
        let (x, a) = scenario.split_index(flat).unwrap();
        prop_assert_eq!(x.len(), n);
        prop_assert_eq!(a.len(), n);
        prop_assert!(x.iter().all(|&v| v < m));
        prop_assert!(a.iter().all(|&v| v < d));
        prop_assert_eq!(scenario.flat_index(&x, &a).unwrap(), flat);
        // The split respects the row layout: settings index is the row.
        prop_assert_eq!(scenario.setting_index(&x).unwrap(), flat / scenario.joint_outcomes());
        prop_assert_eq!(scenario.outcome_index(&a).unwrap(), flat % scenario.joint_outcomes());
    }
}

/// Seeded pseudo-random no-signaling behaviors: convex mixtures of random
/// deterministic strategies and the extremal box, with exact rational
/// weights.
fn random_ns_points(n: usize, m: usize, d: usize, count: usize, seed: u64) -> Vec<Behavior> {
    let scenario = Scenario::new(n, m, d).unwrap();
    let extremal = if n == 2 {
        nl_box_bipartite(m, d).unwrap()
    } else {
        nl_box_multipartite(n, m, d).unwrap()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut picks: Vec<(Behavior, i64)> = Vec::with_capacity(5);
            for _ in 0..4 {
                let det = random_deterministic(n, m, d, &mut rng);
                picks.push((det, rng.gen_range(1..100i64)));
            }
            picks.push((extremal.clone(), rng.gen_range(1..100i64)));
            let total: i64 = picks.iter().map(|(_, w)| w).sum();
            let table: Vec<Rational> = (0..scenario.table_len())
                .map(|idx| {
                    picks
                        .iter()
                        .map(|(b, w)| ratio(*w, total) * &b.table()[idx])
                        .sum()
                })
                .collect();
            Behavior::new(scenario, table).unwrap()
        })
        .collect()
}

/// A uniformly random deterministic strategy.
fn random_deterministic(n: usize, m: usize, d: usize, rng: &mut ChaCha8Rng) -> Behavior {
    let scenario = Scenario::new(n, m, d).unwrap();
    let assign: Vec<Vec<usize>> = (0..n)
        .map(|_| (0..m).map(|_| rng.gen_range(0..d)).collect())
        .collect();
    deterministic(scenario, &assign)
}

/// The context-averaging rule is invisible on no-signaling behaviors: a
/// two-party term evaluated through the averaged lift equals the same term
/// pinned to any single setting of the third party.
#[test]
fn context_averaging_matches_every_pinned_context_on_ns_points() {
    let (n, m, d) = (3usize, 2usize, 2usize);
    let tri = Scenario::new(n, m, d).unwrap();
    let bip = Scenario::new(2, m, d).unwrap();
    let term = ModularTerm::new(
        vec![
            TermOperand { party: 0, setting: 1, sign: Sign::Plus },
            TermOperand { party: 1, setting: 0, sign: Sign::Minus },
        ],
        0,
    )
    .unwrap();
    let f2 = compile_term(&term, bip).unwrap();
    let averaged = lift(&f2, &[0, 1], tri).unwrap();

    // Same functional with the third party's setting pinned to `z` instead
    // of averaged: coefficients copied onto the rows with that context.
    let pinned = |z: usize| -> BellFunctional {
        let width = tri.joint_outcomes();
        let mut coeffs = vec![Rational::zero(); tri.table_len()];
        let outcomes: Vec<Vec<usize>> = tri.joint_outcomes_iter().collect();
        for (s_flat, xs) in tri.joint_settings_iter().enumerate() {
            if xs[2] != z {
                continue;
            }
            let bip_row = bip.setting_index(&xs[..2]).unwrap();
            for (a_flat, a) in outcomes.iter().enumerate() {
                let bip_cell =
                    bip_row * bip.joint_outcomes() + bip.outcome_index(&a[..2]).unwrap();
                coeffs[s_flat * width + a_flat] = f2.coefficients()[bip_cell].clone();
            }
        }
        BellFunctional::from_parts(tri, coeffs, Rational::zero(), "pinned").unwrap()
    };

    for b in random_ns_points(n, m, d, 20, 0xBE11) {
        assert!(b.check_no_signaling().is_empty());
        let avg = averaged.value(&b).unwrap();
        for z in 0..m {
            assert_eq!(pinned(z).value(&b).unwrap(), avg, "context {z}");
        }
    }
}

#[test]
fn marginals_reject_signaling_tables() {
    // p(a,b|x,y) = [a = 0][b = x]: B's outcome tracks A's setting.
    let s = Scenario::new(2, 2, 2).unwrap();
    let b = Behavior::from_fn(s, |x, a| {
        if a[0] == 0 && a[1] == x[0] {
            Rational::one()
        } else {
            Rational::zero()
        }
    });
    assert!(b.validate().is_empty(), "each row is a distribution");
    assert!(!b.check_no_signaling().is_empty());
    match b.marginal(&[1], &[0], None) {
        Err(Error::AmbiguousMarginal(_)) => {}
        other => panic!("expected an ambiguous marginal, got {other:?}"),
    }
    // Pinning the context still works.
    assert_eq!(b.marginal(&[1], &[0], Some(&[1])).unwrap(), vec![int(0), int(1)]);
}

#[test]
fn mixtures_stay_no_signaling_and_values_interpolate() {
    for (m, d) in [(2usize, 2usize), (3, 2), (2, 3)] {
        let f = build_bkp(m, d).unwrap();
        let ext = nl_box_bipartite(m, d).unwrap();
        let loc = local_box(2, m, d).unwrap();
        let ve = f.value(&ext).unwrap();
        let vl = f.value(&loc).unwrap();
        for q in [int(0), ratio(1, 4), ratio(1, 2), ratio(3, 4), int(1)] {
            let b = mix(&MixtureSpec::new(q.clone(), ext.clone(), loc.clone()).unwrap());
            assert!(b.validate().is_empty());
            assert!(b.check_no_signaling().is_empty());
            let expect = q.clone() * &ve + (int(1) - &q) * &vl;
            assert_eq!(f.value(&b).unwrap(), expect, "(m,d)=({m},{d}), q={q}");
        }
    }
}

/// The chained functional splits into four-term pieces: the pieces plus the
/// stated constant agree with the whole functional on every normalized
/// behavior, and for two settings the identity is exact on raw vectors.
#[test]
fn chained_pieces_reassemble_across_the_whole_grid() {
    for m in 2usize..=5 {
        for d in 2usize..=4 {
            let (parts, constant) = decompose_bkp_cglmp(m, d).unwrap();
            assert_eq!(parts.len(), m - 1);
            assert_eq!(constant, int(-((m as i64 - 2) * (d as i64 - 1))));
            let weighted: Vec<(Rational, &BellFunctional)> =
                parts.iter().map(|p| (int(1), p)).collect();
            let sum = BellFunctional::combine(&weighted, "sum")
                .unwrap()
                .with_offset_added(&constant);
            let chain = build_bkp(m, d).unwrap();
            assert!(sum.eq_canonical(&chain), "(m,d)=({m},{d})");
            if m == 2 {
                assert!(sum == chain, "two settings: exact raw equality");
            }
        }
    }
}

/// Advancing both outer parties' setting indices by one leaves the leading
/// sum unchanged on normalized behaviors when the party count is even — the
/// change of summation variables is a bijection on the index tuples.
#[test]
fn leading_sum_survives_the_outer_index_advance() {
    for m in [2usize, 3] {
        let plain = bkp_leading_sum(4, m, 2, false).unwrap();
        let advanced = bkp_leading_sum(4, m, 2, true).unwrap();
        assert!(plain.eq_canonical(&advanced), "m={m}");
        for b in random_ns_points(4, m, 2, 3, 0x5EED ^ m as u64) {
            assert_eq!(plain.value(&b).unwrap(), advanced.value(&b).unwrap());
        }
    }
}

/// The two-setting chain and the four-correlator expression are affine
/// images of each other: correlator form = 4 - 2 * chain, exactly.
#[test]
fn correlator_form_is_an_affine_image_of_the_two_setting_chain() {
    let s = Scenario::new(2, 2, 2).unwrap();
    let mut chsh = BellFunctional::zero(s, "correlator form");
    for (x, y, w) in [(0usize, 0usize, 1i64), (1, 0, 1), (1, 1, 1), (0, 1, -1)] {
        chsh.accumulate(&int(w), &correlator(s, x, y).unwrap()).unwrap();
    }
    let rhs = build_bkp(2, 2).unwrap().scale(&int(-2)).with_offset_added(&int(4));
    assert!(chsh.eq_canonical(&rhs));

    // Brute force over all 16 deterministic strategies: the two local bounds
    // correspond under the same affine map (max 2 <-> min 1).
    let (_, hi) = extremes(&chsh);
    let (lo, _) = extremes(&build_bkp(2, 2).unwrap());
    assert_eq!(hi, int(2));
    assert_eq!(lo, int(1));
}

/// Complementary modular terms sum to a constant: <[W]> + <[-W-1]> = d - 1
/// pointwise, hence as functionals up to row constants.
#[test]
fn complementary_terms_sum_to_a_constant() {
    for d in [2usize, 3, 4] {
        let s = Scenario::new(2, 2, d).unwrap();
        let fwd = ModularTerm::new(
            vec![
                TermOperand { party: 0, setting: 1, sign: Sign::Plus },
                TermOperand { party: 1, setting: 0, sign: Sign::Minus },
            ],
            0,
        )
        .unwrap();
        let rev = ModularTerm::new(
            vec![
                TermOperand { party: 0, setting: 1, sign: Sign::Minus },
                TermOperand { party: 1, setting: 0, sign: Sign::Plus },
            ],
            -1,
        )
        .unwrap();
        let mut sum = compile_term(&fwd, s).unwrap();
        sum.accumulate(&int(1), &compile_term(&rev, s).unwrap()).unwrap();
        let constant = BellFunctional::zero(s, "constant").with_offset_added(&int(d as i64 - 1));
        assert!(sum.eq_canonical(&constant), "d={d}");
    }
}

/// Brute force over every deterministic local strategy reproduces the
/// advertised classical bounds of all builders.
#[test]
fn deterministic_enumeration_confirms_classical_bounds() {
    for (m, d) in [(2usize, 2usize), (3, 2), (2, 3)] {
        let f = build_bkp(m, d).unwrap();
        let (lo, _) = extremes(&f);
        assert_eq!(lo, int(d as i64 - 1), "chain ({m},{d})");
        assert_eq!(lo, f.metadata().unwrap().classical_bound);
    }

    let f = build_bkp_multipartite(3, 2, 2).unwrap();
    let (lo, _) = extremes(&f);
    assert_eq!(lo, int(2));
    assert_eq!(lo, f.metadata().unwrap().classical_bound);

    // Three parties, three settings: the inherited bound 3 is valid but not
    // attained — complete enumeration of all 512 strategies puts the exact
    // deterministic optimum at 5, achieved by the all-zeros strategy.
    let f = build_bkp_multipartite(3, 3, 2).unwrap();
    let (lo, _) = extremes(&f);
    assert_eq!(lo, int(5));
    assert!(f.metadata().unwrap().classical_bound < lo);
    assert_eq!(f.metadata().unwrap().classical_bound, int(3));
    let zeros = deterministic(f.scenario(), &vec![vec![0, 0, 0]; 3]);
    assert_eq!(f.value(&zeros).unwrap(), int(5));

    let f = build_i_prime();
    let (lo, _) = extremes(&f);
    assert_eq!(lo, int(1));
    assert_eq!(lo, f.metadata().unwrap().classical_bound);

    let f = build_i3322();
    let (_, hi) = extremes(&f);
    assert_eq!(hi, int(0));
    assert_eq!(hi, f.metadata().unwrap().classical_bound);
}

#[test]
fn solver_output_is_deterministic() {
    let f = build_bkp(2, 2).unwrap();
    let problem = bell_lp_problem(&f, LpSense::Minimize, &[]).unwrap();
    let first = solve(&problem);
    let second = solve(&problem);
    assert_eq!(first, second);
    assert_eq!(
        serde_json::to_vec(&first).unwrap(),
        serde_json::to_vec(&second).unwrap()
    );
    let w1 = optimize_bell(&f, LpSense::Minimize, &[]).unwrap().into_optimal().unwrap();
    let w2 = optimize_bell(&f, LpSense::Minimize, &[]).unwrap().into_optimal().unwrap();
    assert_eq!(w1.witness.table(), w2.witness.table());
}

#[test]
fn certificates_reject_tampering() {
    let f = build_bkp(2, 2).unwrap();
    let problem = bell_lp_problem(&f, LpSense::Minimize, &[]).unwrap();
    let honest = solve(&problem);
    assert_eq!(honest.status, LpStatus::Optimal);
    assert!(verify_certificate(&problem, &honest));

    let mut wrong_optimum = honest.clone();
    *wrong_optimum.optimum.as_mut().unwrap() += int(1);
    assert!(!verify_certificate(&problem, &wrong_optimum));

    let mut wrong_primal = honest.clone();
    wrong_primal.primal.as_mut().unwrap()[0] += ratio(1, 2);
    assert!(!verify_certificate(&problem, &wrong_primal));

    let mut wrong_dual = honest.clone();
    wrong_dual.dual.as_mut().unwrap()[0] += int(1);
    assert!(!verify_certificate(&problem, &wrong_dual));
}

/// Pinning one pair value forces the other: with I_AB fixed to t below the
/// classical bound, the least possible I_AC is exactly M(d-1) - (M-1)t,
/// strictly above d-1.
#[test]
fn pinning_one_pair_forces_the_other_exactly() {
    for (m, d) in [(2usize, 2usize), (3, 2)] {
        let tri = Scenario::new(3, m, d).unwrap();
        let f = build_bkp(m, d).unwrap();
        let i_ab = lift(&f, &[0, 1], tri).unwrap();
        let i_ac = lift(&f, &[0, 2], tri).unwrap();
        for num in 0..(d as i64 - 1) * 4 {
            let t = ratio(num, 4);
            let pinned = optimize_bell(&i_ac, LpSense::Minimize, &[(&i_ab, t.clone())])
                .unwrap()
                .into_optimal()
                .unwrap();
            let expect = int(m as i64) * int(d as i64 - 1) - int(m as i64 - 1) * &t;
            assert_eq!(pinned.optimum, expect, "(m,d)=({m},{d}), t={t}");
            assert!(pinned.optimum > int(d as i64 - 1));
        }
    }
}

/// Certified LP optima dominate the deterministic-strategy optima in each
/// functional's natural direction and reproduce the advertised no-signaling
/// values.
#[test]
fn lp_optima_dominate_deterministic_enumeration() {
    let minimizing = [build_bkp(2, 2).unwrap(), build_bkp(3, 2).unwrap(), build_i_prime()];
    for f in &minimizing {
        let opt = optimize_bell(f, LpSense::Minimize, &[]).unwrap().into_optimal().unwrap();
        let (lo, _) = extremes(f);
        assert!(opt.optimum <= lo, "{}", f.label());
        assert_eq!(opt.optimum, f.metadata().unwrap().ns_optimum, "{}", f.label());
    }
    let f = build_i3322();
    let opt = optimize_bell(&f, LpSense::Maximize, &[]).unwrap().into_optimal().unwrap();
    let (_, hi) = extremes(&f);
    assert!(opt.optimum >= hi);
    assert_eq!(opt.optimum, f.metadata().unwrap().ns_optimum);
}

/// The weighted pair relations imply the unweighted one; the reports agree
/// with that arithmetic at both two and three settings.
#[test]
fn weighted_reports_are_consistent_with_the_unweighted_bound() {
    let config = bellmono::monogamy::VerifyConfig::default();
    for (m, d) in [(2usize, 2usize), (3, 2)] {
        let (first, _) = bellmono::monogamy::verify_theorem1(m, d, &config).unwrap();
        let unweighted = bellmono::monogamy::verify_observation1(m, d, &config).unwrap();
        assert!(first.verified);
        assert!(unweighted.verified);
        assert_eq!(first.lp_optimum.as_ref().unwrap(), &int((m * (d - 1)) as i64));
        assert_eq!(
            unweighted.lp_optimum.as_ref().unwrap(),
            &int((2 * (d - 1)) as i64)
        );
        // Every witness point of the weighted line satisfies the unweighted
        // relation, with slack growing in q for m > 2.
        let two_bound = int((2 * (d - 1)) as i64);
        for p in &first.tight_points {
            assert!(p.i_left.clone() + &p.i_right >= two_bound);
        }
    }
}
