#!/usr/bin/env python3
"""Smoke test for the bellmono_py extension module.

Builds nothing itself: run `cargo build -p bellmono-py` first (or
`--release`). The test locates the compiled cdylib, loads it under the
importable name, and exercises the main types and operations end to end,
asserting exact rational values throughout.
"""

import json
import shutil
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO_ROOT / "target" / "release" / "libbellmono_py.so",
        REPO_ROOT / "target" / "debug" / "libbellmono_py.so",
    ]
    for built in candidates:
        if built.exists():
            stage = Path(tempfile.mkdtemp(prefix="bellmono_py_"))
            shutil.copy2(built, stage / "bellmono_py.so")
            sys.path.insert(0, str(stage))
            import bellmono_py

            return bellmono_py
    sys.exit(
        "bellmono_py cdylib not found; run `cargo build -p bellmono-py` first\n"
        f"looked for: {', '.join(str(c) for c in candidates)}"
    )


def frac(s: str) -> Fraction:
    return Fraction(s)


def main() -> None:
    m = load_module()

    # Functional construction and metadata.
    chain = m.build_bkp(2, 2)
    assert chain.scenario == (2, 2, 2), chain.scenario
    assert frac(chain.classical_bound) == 1, chain.classical_bound
    assert frac(chain.ns_optimum) == 0, chain.ns_optimum
    print("ok: two-setting chain builds with exact metadata")

    # Canonical boxes and exact evaluation.
    extremal = m.nl_box(2, 2)
    assert extremal.is_no_signaling()
    assert extremal.validation_failures() == []
    assert frac(chain.value(extremal)) == 0, chain.value(extremal)

    local = m.local_box(2, 2, 2)
    uniform = m.uniform_box(2, 2, 2)
    assert frac(chain.value(local)) == 1  # the classical floor
    assert frac(chain.value(uniform)) == 2  # M*(d-1) on uniform noise
    halfway = m.mix("1/2", extremal, local)
    assert frac(chain.value(halfway)) == Fraction(1, 2)
    assert halfway.is_no_signaling()
    print("ok: canonical boxes evaluate to the exact expected values")

    # A probability entry crosses the boundary exactly.
    assert frac(extremal.prob([0, 0], [0, 0])) == Fraction(1, 2)

    # JSON round trips preserve identity.
    chain_again = m.BellFunctional.from_json(chain.to_json())
    assert chain.eq_canonical(chain_again)
    box_again = m.Behavior.from_json(halfway.to_json())
    assert box_again.prob([1, 0], [0, 1]) == halfway.prob([1, 0], [0, 1])
    print("ok: JSON round trips preserve functionals and behaviors")

    # Certified linear programming from Python.
    optimum, certified = m.optimize(chain, "min")
    assert frac(optimum) == 0 and certified
    big = m.build_bkp_multipartite(3, 2, 2)
    optimum, certified = m.optimize(big, "min")
    assert frac(optimum) == 0 and certified
    print("ok: certified no-signaling optima")

    # Decomposition pieces recombine exactly (checked in Python arithmetic).
    pieces, constant = m.decompose_bkp_cglmp(3, 2)
    probe = m.mix("1/3", m.nl_box(3, 2), m.local_box(2, 3, 2))
    whole = m.build_bkp(3, 2)
    recombined = sum(frac(p.value(probe)) for p in pieces) + frac(constant)
    assert recombined == frac(whole.value(probe)), (recombined, whole.value(probe))
    print("ok: decomposition recombines to the chain value")

    # The verification harness, reports as JSON.
    first, swapped = m.verify_theorem1(2, 2)
    for raw in (first, swapped):
        report = json.loads(raw)
        assert report["verified"] and report["certificate_ok"]
        assert frac(report["lp_optimum"]) == 2
    print("ok: weighted pair relation verified in both orders")

    report = json.loads(m.guessing_bound(2, 0, "0/1"))
    assert report["verified"] and frac(report["lp_optimum"]) == Fraction(1, 2)
    report = json.loads(m.correlation_monogamy(2, 0, 1))
    assert report["verified"] and frac(report["lp_optimum"]) == 1
    print("ok: guessing and agreement bounds verified")

    # The honest counterexample: the additivity claim fails with a valid
    # certificate on the true optimum.
    report = json.loads(m.counterexample_i3322())
    assert not report["verified"]
    assert report["certificate_ok"]
    assert frac(report["lp_optimum"]) == Fraction(8, 3)
    report = json.loads(m.counterexample_iprime())
    assert report["verified"] and frac(report["lp_optimum"]) == 4
    print("ok: counterexamples report honestly")

    # Witness-family sweep, byte-exact.
    csv = m.sweep_csv(2, 2, ["0", "1/2", "1"])
    assert csv == (
        "q,I_left,I_right,combination_value\n"
        "0/1,1/1,1/1,2/1\n"
        "1/2,1/2,3/2,2/1\n"
        "1/1,0/1,2/1,2/1\n"
    ), csv
    print("ok: sweep table is byte-exact")

    # Resource guard surfaces as a Python exception.
    try:
        m.verify_pb(2, 2, max_lp_vars=5)
    except ValueError as e:
        assert "limit" in str(e)
        print("ok: variable limit raises ValueError")
    else:
        sys.exit("expected the variable limit to raise")

    print("smoke test passed")


if __name__ == "__main__":
    main()
