"""Acceptance criteria, one test each.

Every test records a single ``ACCEPTANCE <n>: PASS|FAIL|SKIP <detail>``
line; the lines are printed in the terminal summary (see conftest) and
by ``python3 tests/test_acceptance.py``.  Tolerances are the pinned
ones; a failing criterion is reported as such, not relaxed.
"""
import itertools
import math
import sys
import time

import numpy as np
import pytest

from redpool import (
    ProviderParams,
    erlang_c,
    ksbs,
    mean_response_coc,
    mean_response_overall,
    mean_response_pair,
    mixture_sign_constants,
    pareto_coc,
    pareto_frontier,
    provider_from_wait,
    standalone_delay,
    typed_ctmc_oracle,
    unit_frontier_closed_form,
    waiting_probabilities,
)
from redpool import cos, pareto
from redpool.desim import SimScenario, simulate
from redpool.exceptions import DegenerateFrontierError
from redpool.pareto import _edge_dominator, conjecture_check, frontier_distance, gradients

LINES = {}

INTRO = (((16, 20), 0.25), ((28, 30), 0.62), ((44, 50), 0.28))
DELAY_ROWS = {
    5: (0.3231, 1.0161, 0.3722, 1.0372, 0.1730, 1.0220),
    10: (0.2121, 1.0106, 0.2491, 1.0249, 0.1145, 1.0015),
    15: (0.1679, 1.0084, 0.1988, 1.0199, 0.0910, 1.0012),
    20: (0.1428, 1.0071, 0.1699, 1.0170, 0.0776, 1.0011),
}
DELAY_NAMES = ("D1 c.o.c.", "D1 alone", "D2 c.o.c.", "D2 alone", "D full c.o.c.", "D full naive")
BARGAIN_ROWS = {
    (10, 10): (1.82, 1.0, 1.0, 1.82, 1.82),
    (10, 30): (6.65, 0.69, 1.0, 5.54, 14.54),
    (10, 50): (13.85, 0.37, 1.0, 8.26, 37.30),
}
UTILISATIONS = (0.15, 0.3, 0.45, 0.6, 0.75)


def record(n, ok, detail):
    LINES[n] = f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} {detail}"
    print(LINES[n])
    return ok


def _clear_caches():
    cos._corner_wait.cache_clear()
    pareto._cos_delay.cache_clear()


def test_criterion_1_intro_example():
    bad = []
    for (rho, n), ref in INTRO:
        v = erlang_c(rho, n)
        if abs(v - ref) > 0.005:
            bad.append(f"erlang_c({rho},{n})={v:.5f} vs {ref}")
    reps = 1000
    t = time.perf_counter()
    for _ in range(reps):
        for (rho, n), _ in INTRO:
            erlang_c(rho, n)
    per_call = (time.perf_counter() - t) / (reps * len(INTRO))
    if per_call >= 1e-3:
        bad.append(f"{per_call * 1e3:.3f} ms per call")
    ok = record(1, not bad, "; ".join(bad) or f"3/3 within 0.005, {per_call * 1e6:.1f} us per call")
    assert ok, LINES[1]


def test_criterion_2_delay_reference_rows():
    t = time.perf_counter()
    bad, checked = [], 0
    identity_dev = 0.0
    for n, refs in DELAY_ROWS.items():
        p1, p2 = provider_from_wait(0.05, n), provider_from_wait(0.10, n)
        pooled = ProviderParams(p1.lam + p2.lam, 1.0, 2 * n)
        vals = (mean_response_coc(p1, p2, (0, 0), 1), standalone_delay(p1),
                mean_response_coc(p1, p2, (0, 0), 2), standalone_delay(p2),
                mean_response_overall(p1, p2, (n, n)), standalone_delay(pooled))
        for name, v, r in zip(DELAY_NAMES, vals, refs):
            checked += 1
            if abs(v - r) > 1e-3:
                bad.append(f"N={n} {name}: {v:.5f} vs {r}")
        exact = 1 / (2 * n - p1.rho - p2.rho)
        for d in mean_response_pair(p1, p2, (n, n)):
            identity_dev = max(identity_dev, abs(d - exact) / exact)
    elapsed = time.perf_counter() - t
    if identity_dev > 1e-12:
        bad.append(f"full-sharing identity off by {identity_dev:.2e}")
    if elapsed >= 1.0:
        bad.append(f"runtime {elapsed:.2f} s")
    detail = f"{checked - sum('N=' in b for b in bad)}/{checked} values within 1e-3, " \
             f"identity rel dev {identity_dev:.1e}, {elapsed * 1e3:.0f} ms"
    ok = record(2, not bad, detail + ("; " + "; ".join(bad) if bad else ""))
    assert ok, LINES[2]


def test_criterion_3_bargaining_reference_rows():
    _clear_caches()
    t = time.perf_counter()
    bad = []
    for (w1, w2), refs in BARGAIN_ROWS.items():
        p1, p2 = provider_from_wait(w1 / 100, 1), provider_from_wait(w2 / 100, 1)
        full = 100 * waiting_probabilities(p1, p2, (1, 1))[0]
        pt = ksbs(p1, p2, "cos", "wait", 0.01)
        vals = (full, pt.k[0], pt.k[1], 100 * pt.metrics[0], 100 * pt.metrics[1])
        tols = (0.05, 0.01, 0.01, 0.05, 0.05)
        names = ("C full %", "k1*", "k2*", "C1* %", "C2* %")
        for name, v, r, tol in zip(names, vals, refs, tols):
            if abs(v - r) > tol:
                bad.append(f"{w1}|{w2} {name}: {v:.4f} vs {r}")
    elapsed = time.perf_counter() - t
    if elapsed >= 10:
        bad.append(f"runtime {elapsed:.1f} s")
    ok = record(3, not bad, "; ".join(bad) or f"15/15 values within tolerance, {elapsed:.2f} s")
    assert ok, LINES[3]


def _random_coc_instance(rng):
    while True:
        n1, n2 = (int(v) for v in rng.integers(1, 11, 2))
        u1, u2 = rng.uniform(0.02, 0.98, 2)
        nu1, nu2 = rng.choice([0.5, 1.0, 2.0], 2)
        p1 = ProviderParams(float(u1 * n1 * nu1), float(nu1), n1)
        p2 = ProviderParams(float(u2 * n2 * nu2), float(nu2), n2)
        return p1, p2


def test_criterion_4_monotonicity_suite():
    rng = np.random.default_rng(20240401)
    bad, comparisons, min_margin = [], 0, math.inf
    for _ in range(200):
        p1, p2 = _random_coc_instance(rng)
        n = (p1.n_servers, p2.n_servers)
        D = {k: mean_response_pair(p1, p2, k) for k in itertools.product(range(n[0] + 1), range(n[1] + 1))}
        for (a, b), d in D.items():
            for i in (0, 1):
                own, other = ((a, b)[i], (a, b)[1 - i])
                up_other = (a, b + 1) if i == 0 else (a + 1, b)
                up_own = (a + 1, b) if i == 0 else (a, b + 1)
                if other < n[1 - i]:
                    m = d[i] - D[up_other][i]
                    comparisons += 1
                    min_margin = min(min_margin, m)
                    if not m > 1e-12:
                        bad.append(f"D{i + 1} not decreasing in partner share at {(a, b)}: {m:.2e}")
                    if own < n[i]:
                        m = D[up_own][i] - d[i]
                        comparisons += 1
                        min_margin = min(min_margin, m)
                        if not m > 1e-12:
                            bad.append(f"D{i + 1} not increasing in own share at {(a, b)}: {m:.2e}")
                elif own < n[i]:
                    comparisons += 1
                    if abs(D[up_own][i] - d[i]) > 1e-12:
                        bad.append(f"D{i + 1} depends on own share at {(a, b)}")
    ok = record(4, not bad, f"{comparisons} comparisons on 200 instances, smallest strict margin {min_margin:.2e}"
                + (f"; {len(bad)} violations, first: {bad[0]}" if bad else ""))
    assert ok, LINES[4]


def test_criterion_5_full_pooling_unique():
    rng = np.random.default_rng(7)
    bad = []
    for _ in range(50):
        p1, p2 = _random_coc_instance(rng)
        front = pareto_coc(p1, p2)
        if front != {(p1.n_servers, p2.n_servers)}:
            bad.append(f"{p1}, {p2}: {sorted(front)}")
    ok = record(5, not bad, "50/50 instances: full pooling is the unique Pareto-optimal configuration"
                if not bad else f"{len(bad)} instances differ, first {bad[0]}")
    assert ok, LINES[5]


def _cross_oracle_cases():
    for n1, n2 in itertools.product((1, 2), repeat=2):
        for k1, k2 in itertools.product(range(n1 + 1), range(n2 + 1)):
            for u1, u2 in itertools.product(UTILISATIONS, repeat=2):
                yield n1, n2, k1, k2, u1, u2


@pytest.mark.slow
def test_criterion_6_cross_oracle():
    t = time.perf_counter()
    worst_ctmc, ctmc_bad = 0.0, []
    misses, comparisons, zs = [], 0, []
    for seed, (n1, n2, k1, k2, u1, u2) in enumerate(_cross_oracle_cases()):
        p1, p2 = ProviderParams(u1 * n1, 1.0, n1), ProviderParams(u2 * n2, 1.0, n2)
        exact = waiting_probabilities(p1, p2, (k1, k2))
        chain = typed_ctmc_oracle(p1, p2, (k1, k2)).C
        dev = abs(exact[0] - chain[0]) + abs(exact[1] - chain[1])
        worst_ctmc = max(worst_ctmc, dev)
        if dev >= 1e-8:
            ctmc_bad.append((n1, n2, k1, k2, u1, u2, dev))
        res = simulate(SimScenario(p1, p2, (k1, k2), horizon=1_100_000, warmup=100_000, seed=seed))
        for i in range(2):
            comparisons += 1
            z = (res.C[i].mean - exact[i]) / res.C[i].stderr
            zs.append(z)
            if abs(z) > 3:
                misses.append(f"N=({n1},{n2}) k=({k1},{k2}) u=({u1},{u2}) C{i + 1} z={z:+.2f}")
    elapsed = time.perf_counter() - t
    problems = []
    if ctmc_bad:
        problems.append(f"{len(ctmc_bad)} chain deviations >= 1e-8")
    if misses:
        problems.append(f"{len(misses)}/{comparisons} simulation estimates beyond 3 SE "
                        f"(about {0.0027 * comparisons:.1f} expected by chance): " + ", ".join(misses))
    if elapsed >= 300:
        problems.append(f"runtime {elapsed:.0f} s")
    zs = np.array(zs)
    detail = (f"625 instances, max chain deviation {worst_ctmc:.1e}, "
              f"z mean {zs.mean():+.3f} sd {zs.std():.3f}, {elapsed:.0f} s")
    ok = record(6, not problems, detail + ("; " + "; ".join(problems) if problems else ""))
    assert ok, LINES[6]


def _arm_certificate(p1, p2, point):
    return _edge_dominator(p1, p2, point, 1) or _edge_dominator(p1, p2, point, 0)


def test_criterion_7_single_server_frontier_structure():
    rng = np.random.default_rng(3)
    step = 0.01
    bad, cases = [], {}
    far, worst = [], 0.0
    off_arm = beyond = certified = 0
    for _ in range(100):
        l1, l2 = (float(v) for v in rng.uniform(0, 1, 2))
        p1, p2 = ProviderParams(l1), ProviderParams(l2)
        tag = f"({l1:.4f},{l2:.4f})"
        front = pareto_frontier(p1, p2, "cos", "wait", step)
        try:
            fs = unit_frontier_closed_form(p1, p2)
        except DegenerateFrontierError:
            if front:
                bad.append(f"{tag} closed form empty, grid has {len(front)} points")
            continue
        cases[fs.case] = cases.get(fs.case, 0) + 1
        full_on_grid = any(p.k == (1.0, 1.0) for p in front)
        if full_on_grid != (fs.case == "both-benefit"):
            bad.append(f"{tag} case {fs.case} but (1,1) on grid frontier: {full_on_grid}")
        dist = frontier_distance([p.k for p in front], fs)
        worst = max(worst, dist)
        if not dist <= step + 1e-12:
            far.append(f"{tag} {dist:.2f}")
        for p in front:
            if p.k[0] == 1.0 or p.k[1] == 1.0:
                continue
            off_arm += 1
            if _arm_certificate(p1, p2, p) is not None:
                certified += 1
            if min(1 - p.k[0], 1 - p.k[1]) > step + 1e-12:
                beyond += 1
        c = mixture_sign_constants(p1, p2)
        if min(c.omega1, c.omega2, c.alpha, c.beta, c.gamma) <= 0:
            bad.append(f"{tag} non-positive sign constant")
        for k in itertools.product(np.linspace(0, 1, 11), repeat=2):
            g = gradients(p1, p2, k)
            if not (g[0, 0] > 0 and g[0, 1] < 0 and g[1, 1] > 0 and g[1, 0] < 0):
                bad.append(f"{tag} derivative signs at {k}")
                break
    grid_bad = 0
    for l1, l2 in itertools.product(np.linspace(0.005, 0.995, 100), repeat=2):
        c = mixture_sign_constants(ProviderParams(l1), ProviderParams(l2))
        if min(c.omega1, c.omega2, c.alpha, c.beta, c.gamma) <= 0:
            grid_bad += 1
    if grid_bad:
        bad.append(f"{grid_bad} dense-grid points with a non-positive sign constant")
    if far:
        bad.append(f"{len(far)} instances with grid/exact Hausdorff distance above {step}: " + ", ".join(far))
    if beyond:
        bad.append(f"{beyond} grid frontier points more than one cell from k1 = 1 and k2 = 1")
    detail = (f"cases {dict(sorted(cases.items()))}, classification agrees with grid; sign conditions hold; "
              f"max Hausdorff {worst:.3f}; {off_arm} grid frontier points off k_i = 1, "
              f"{certified} of them dominated by an exact k_i = 1 configuration")
    ok = record(7, not bad, detail + ("; " + "; ".join(bad) if bad else ""))
    assert ok, LINES[7]


def test_criterion_8_two_server_boundary():
    out, ok_all = [], True
    for w1, w2 in ((0.10, 0.50), (0.20, 0.50)):
        rep = conjecture_check(provider_from_wait(w1, 2), provider_from_wait(w2, 2))
        ok_all &= not rep.off_boundary
        where = ", ".join(f"({p.k[0]:.2f},{p.k[1]:.2f})" for p in rep.off_boundary)
        out.append(f"{int(w1 * 100)}|{int(w2 * 100)}: {len(rep.frontier)} points, "
                   f"{len(rep.off_boundary)} beyond one cell of the boundary"
                   + (f" [{where}], {len(rep.certificates)} dominated by exact boundary points" if where else ""))
    ok = record(8, ok_all, "; ".join(out))
    assert ok, LINES[8]


def test_criterion_9_excluded():
    LINES[9] = "ACCEPTANCE 9: SKIP claims about deployed systems and proofs are out of scope"
    print(LINES[9])
    pytest.skip("not desk-reproducible; excluded")


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    for fn in tests:
        try:
            fn()
        except (AssertionError, pytest.skip.Exception):
            pass
    sys.exit(0 if all("PASS" in line or "SKIP" in line for line in LINES.values()) else 1)
