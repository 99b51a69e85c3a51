"""Typed continuous-time Markov chain of the cancel-on-start system.

This is a verification oracle independent of the product form.  The
state records the busy servers per class and the FCFS waiting line
with job types.  Types of jobs that joined the line while every server
was busy are revealed lazily: such a job is provider 1 with probability
lam1 / (lam1 + lam2) independently of everything looked at so far, so
the line is stored as a revealed single-type prefix of length ``a``
followed by ``b`` unrevealed jobs.  A dedicated server scanning for its
provider's first job reveals jobs until it finds one, which keeps the
prefix single-typed.  The reduction is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._validation import check_config, check_equal_nu, check_providers
from .cos import ServerClasses, blocked_rate, solve_assignment_rates
from .exceptions import DomainError, SolverError, TruncationError
from .params import ProviderParams

MAX_STATES = 1_000_000
SCAN_CUTOFF = 1e-18


@dataclass(frozen=True)
class CTMCResult:
    C: tuple[float, float]
    D: tuple[float, float]
    occupancy: dict[tuple[int, int, int], float]
    mean_queue: tuple[float, float]
    buffer_cap: int
    tail_bound: float
    n_states: int


def _uniform_split(cl: ServerClasses):
    def split(x, provider):
        if cl.blocked(x, provider):
            return (0.0, 0.0, 0.0)
        idle = cl.idle(x)
        own = 0 if provider == 1 else 1
        tot = idle[own] + idle[2]
        out = [0.0, 0.0, 0.0]
        out[own] = idle[own] / tot
        out[2] = idle[2] / tot
        return tuple(out)
    return split


def tail_bound(alpha_max: float, cap: int) -> float:
    return alpha_max ** cap / (1.0 - alpha_max)


def typed_ctmc_oracle(p1: ProviderParams, p2: ProviderParams, cfg, buffer_cap: int | None = None,
                      assignment: str = "arc", tail_tol: float = 1e-10) -> CTMCResult:
    """Solve the truncated typed chain by a sparse linear solve.

    ``assignment`` chooses how an arrival picks among idle eligible
    servers: ``"arc"`` uses the product-form assignment rates,
    ``"uniform"`` picks an idle eligible server uniformly.  The waiting
    line is capped at ``buffer_cap`` jobs; when omitted, the smallest
    cap with alpha_max^B / (1 - alpha_max) < tail_tol is used.
    """
    p1, p2 = check_providers(p1, p2)
    nu = check_equal_nu(p1, p2)
    cfg = check_config(cfg, p1.n_servers, p2.n_servers, integral=True)
    cl = ServerClasses.from_config(p1.n_servers, p2.n_servers, int(cfg.k1), int(cfg.k2))
    lam1, lam2 = p1.lam, p2.lam
    if assignment == "arc":
        split = solve_assignment_rates(p1, p2, cfg).check().split
    elif assignment == "uniform":
        split = _uniform_split(cl)
    else:
        raise DomainError(f"unknown assignment rule {assignment!r}")

    occupancies = cl.states()
    alpha_max = max(blocked_rate(x, lam1, lam2, cl) / (sum(x) * nu) for x in occupancies if sum(x))
    if buffer_cap is None:
        buffer_cap = 1
        while tail_bound(alpha_max, buffer_cap) >= tail_tol:
            buffer_cap += 1
    B = int(buffer_cap)
    bound = tail_bound(alpha_max, B)
    if bound >= 1e-8:
        raise TruncationError(f"buffer cap {B} certifies only tail mass {bound:.3g}")

    full = cl.sizes
    index: dict[tuple, int] = {}
    for x in occupancies:
        b1, b2 = cl.blocked(x, 1), cl.blocked(x, 2)
        if b1 and b2:
            index[(x, 0, 0, 0)] = len(index)
            for t in (1, 2):
                for a in range(1, B + 1):
                    for b in range(0, B - a + 1):
                        index[(x, t, a, b)] = len(index)
            for b in range(1, B + 1):
                index[(x, 0, 0, b)] = len(index)
        elif b1 or b2:
            t = 1 if b1 else 2
            index[(x, 0, 0, 0)] = len(index)
            for a in range(1, B + 1):
                index[(x, t, a, 0)] = len(index)
        else:
            index[(x, 0, 0, 0)] = len(index)
        if len(index) > MAX_STATES:
            raise TruncationError(f"more than {MAX_STATES} states; lower buffer_cap or instance size")

    def canon(x, t, a, b):
        return (x, t if a > 0 else 0, a, b)

    rows, cols, vals = [], [], []

    def add(src, dst, rate):
        if rate > 0 and src != dst:
            rows.append(src)
            cols.append(index[dst])
            vals.append(rate)

    prob1 = lam1 / (lam1 + lam2)
    prob = {1: prob1, 2: 1.0 - prob1}
    own_class = {1: 0, 2: 1}
    for state, i in index.items():
        x, t, a, b = state
        is_full = x == full
        for prov, lam in ((1, lam1), (2, lam2)):
            if not cl.blocked(x, prov):
                for c, pc in enumerate(split(x, prov)):
                    if pc > 0:
                        y = list(x)
                        y[c] += 1
                        add(i, canon(tuple(y), t, a, b), lam * pc)
            elif not is_full:
                if a + 1 <= B:
                    add(i, (x, prov, a + 1, 0), lam)
            elif a + b + 1 <= B:
                add(i, (x, t, a, b + 1), lam)
        for prov in (1, 2):
            c = own_class[prov]
            if x[c] == 0:
                continue
            rate = nu * x[c]
            down = list(x)
            down[c] -= 1
            down = tuple(down)
            if t == prov and a > 0:
                add(i, canon(x, t, a - 1, b), rate)
            elif not is_full or b == 0:
                add(i, canon(down, t, a, 0) if (t != prov) else canon(down, 0, 0, 0), rate)
            else:
                other = 2 if prov == 1 else 1
                # scan unrevealed jobs for the first one of this provider
                # terms below SCAN_CUTOFF are folded into the not-found branch
                skip = 1.0
                for j in range(b):
                    if skip < SCAN_CUTOFF:
                        break
                    add(i, canon(x, other, a + j, b - j - 1), rate * skip * prob[prov])
                    skip *= prob[other]
                add(i, canon(down, other, a + b, 0), rate * skip)
        if x[2] > 0:
            rate = nu * x[2]
            if a > 0:
                add(i, canon(x, t, a - 1, b), rate)
            elif b > 0:
                add(i, (x, 0, 0, b - 1), rate)
            else:
                add(i, ((x[0], x[1], x[2] - 1), 0, 0, 0), rate)

    n = len(index)
    Q = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    Q = Q - sp.diags(np.asarray(Q.sum(axis=1)).ravel())
    # pin pi[0] = 1 and drop its balance equation (a row of ones would fill the LU)
    QT = Q.T.tocsc()
    A = QT[1:, 1:]
    rhs = -QT[1:, 0].toarray().ravel()
    try:
        pi = np.concatenate([[1.0], spla.spsolve(A, rhs)])
    except Exception as exc:  # pragma: no cover - scipy raises several types here
        raise SolverError(f"sparse solve failed: {exc}") from exc
    if not np.all(np.isfinite(pi)) or pi.min() < -1e-10:
        raise SolverError("linear solve did not return a probability vector")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()

    occ: dict[tuple[int, int, int], float] = {x: 0.0 for x in occupancies}
    c1 = c2 = q1 = q2 = 0.0
    for (x, t, a, b), i in index.items():
        m = pi[i]
        occ[x] += m
        if cl.blocked(x, 1):
            c1 += m
        if cl.blocked(x, 2):
            c2 += m
        q1 += m * ((a if t == 1 else 0) + prob[1] * b)
        q2 += m * ((a if t == 2 else 0) + prob[2] * b)
    D = (q1 / lam1 + 1 / nu, q2 / lam2 + 1 / nu)
    return CTMCResult((c1, c2), D, occ, (q1, q2), B, bound, n)
