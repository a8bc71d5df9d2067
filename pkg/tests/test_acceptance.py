"""Acceptance criteria, one test per criterion line.

Each test prints ``PASS`` or ``FAIL`` with the measured runtime.  Run just
this file with ``pytest -s tests/test_acceptance.py`` or directly with
``python tests/test_acceptance.py``.
"""

import time

import pytest

from mdimlab import verify

# per-letter BA oracle slope for the uniform 64-level source (see test_ratedist)
RD64_SLOPE = 0.8649290557

_RUNS = {}
LINES = []      # echoed again in the terminal summary by conftest.py


def _run(name):
    if name not in _RUNS:
        t0 = time.perf_counter()
        rows = verify.SUITES[name](0)
        _RUNS[name] = (rows, time.perf_counter() - t0)
    return _RUNS[name]


def _report(label, ok, seconds, limit, detail=""):
    ok = ok and seconds < limit
    line = f"{'PASS' if ok else 'FAIL'}  {label}  ({seconds:.1f} s, limit {limit:g} s){'  ' + detail if detail else ''}"
    LINES.append(line)
    print(line)
    return ok


def _bad(rows, keep=lambda r: True):
    return [r for r in rows if r["gating"] and keep(r) and not r["ok"]]


def _check(label, suite, limit, keep=lambda r: True, min_rows=1):
    rows, secs = _run(suite)
    sel = [r for r in rows if keep(r)]
    bad = _bad(sel)
    detail = f"{len(sel)} rows, {len(bad)} failing"
    if bad:
        detail += "; first: " + ", ".join(f"{r['check']}@{r['instance']} lhs={r['lhs']:.6g} rhs={r['rhs']:.6g}"
                                         for r in bad[:3])
    ok = _report(label, len(sel) >= min_rows and not bad, secs, limit, detail)
    assert ok, detail


def test_c01_information_suite():
    _check("C1 information identities and inequalities", "info", 10, min_rows=1200)


def test_c02_blahut_arimoto():
    _check("C2 BA closed form, endpoints, envelope", "ba", 30)


def test_c03a_kd_constant():
    rows, secs = _run("bounds")
    r = next(r for r in rows if r["check"] == "kd_constant")
    detail = f"K={r['lhs']:.10f} target 2.0 +- 0.01, argmax s={r['s_star']:.6f}"
    ok = _report("C3a KD constant equals 2.0 with supremum at s=0", r["ok"] and r["s_star"] < 1e-6,
                 secs, 60, detail)
    assert ok, detail


def test_c03b_bounds_dominance():
    _check("C3b BA value dominates duality and KD bounds", "bounds", 60,
           keep=lambda r: r["check"] != "kd_constant", min_rows=60)


def test_c04_cover_and_hausdorff():
    _check("C4 exact cover, dimh vs covering ratio, Cantor dimension", "cover", 120)


def test_c05_frostman():
    _check("C5 Frostman constraints, Cantor feasibility, two-point infeasibility", "frostman", 60)


def test_c06a_chain_inequalities():
    _check("C6a chain inequalities on the q=4 shift", "chain", 600,
           keep=lambda r: r["check"] != "finest_log_cover_band")


def test_c06b_finest_cell_band():
    _check("C6b normalized log cover at the finest cell in [0.8, 1.05]", "chain", 600,
           keep=lambda r: r["check"] == "finest_log_cover_band")


def test_c07_variational():
    _check("C7 free energy and per-scale variational inequality", "variational", 60, min_rows=200)


def test_c08a_rd_structure():
    _check("C8a product-channel subadditivity and translation invariance", "rdstructure", 300,
           keep=lambda r: r["check"] != "rdim_slope")


def test_c08b_rdim_slope():
    rows, secs = _run("rdstructure")
    r = next(r for r in rows if r["check"] == "rdim_slope")
    detail = f"slope={r['lhs']:.6f}, oracle {RD64_SLOPE:.6f}"
    ok = _report("C8b rdim slope in [0.7, 1.1] and matches the per-letter oracle",
                 r["ok"] and r["lhs"] == pytest.approx(RD64_SLOPE, abs=1e-3), secs, 300, detail)
    assert ok, detail


def test_c09_tiling():
    rows, _ = _run("tiling")
    inst = {r["instance"] for r in rows if r["check"].startswith("quasi_tile")}
    assert len([r for r in rows if r["check"] == "quasi_tile_post"]) == 50, inst
    _check("C9 quasi-tiling, block coding, crude estimate", "tiling", 60)


def test_c10_local_formula():
    _check("C10 local formula trivial direction and finest ratio", "local", 300)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
