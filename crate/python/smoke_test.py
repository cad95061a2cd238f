"""Smoke test for the numertree_py extension.

Build and install first:
    pip install --no-build-isolation -e crates/python
"""

import json
import sys
from fractions import Fraction

import numertree_py as nt


def main():
    s32 = nt.NumerationSystem("3/2")
    assert s32.rep(22) == "2120012", s32.rep(22)
    assert s32.val("2120012") == 22
    assert not s32.is_valid("1")
    assert s32.signature() == ["02", "1"], s32.signature()
    assert not s32.is_expanding() and nt.NumerationSystem("5/2").is_expanding()

    fib = nt.NumerationSystem("fib")
    assert fib.rep(18) == "101000"
    assert all(fib.val(fib.rep(n)) == n for n in range(500))

    sd = nt.Gdlr.build(nt.RelationSet.fixture("sumdigits-matrix"), "builtin:sumdigits")
    assert sd.eval(22) == Fraction(8)
    value, steps = sd.eval_word("2120012")
    assert value == 8 and steps > 0

    squares = nt.RelationSet.fixture("squares")
    assert len(squares) == 27
    rep = squares.verify("builtin:squares", 5000)
    assert rep["ok"] and rep["violations"] == 0, rep

    two = nt.NumerationSystem("2")
    rel, report = nt.guess(two, "builtin:sumdigits", 1, 512)
    report = json.loads(report)
    assert rel.h == 1 and len(rel) > 0
    again = nt.RelationSet.from_json(rel.to_json())
    assert again.verify("builtin:sumdigits", 4096)["ok"]

    g = nt.Gdlr.from_json(sd.to_json())
    assert all(g.eval(n) == sum(map(int, s32.rep(n))) for n in range(300))

    t = nt.kernel_element(s32, "builtin:sumdigits", "2", 50)
    assert len(t) == 50 and all(isinstance(x, Fraction) for x in t)

    ranks = nt.rank_profile(two, "builtin:sumdigits", 3, 2000)
    assert ranks == sorted(ranks) and ranks[-1] <= 3, ranks

    print("python smoke test: ok")


if __name__ == "__main__":
    sys.exit(main())
