"""Partial pooling under cancel-on-complete replication.

Mean response times follow from the equivalence between c.o.c.
replication and balanced fairness on the polymatroid rate region
``{r1 <= N1 + k2, r2 <= N2 + k1, r1 + r2 <= N1 + N2}``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_config, check_providers, require
from .exceptions import DomainError, InstabilityError, TruncationError
from .params import MetricPair, ProviderParams, SharingConfig

TAIL_TOL = 1e-9


@dataclass(frozen=True)
class RateRegion:
    """Two-class polymatroid: per-class caps and a shared total cap."""

    cap1: float
    cap2: float
    cap_total: float

    def __post_init__(self):
        if min(self.cap1, self.cap2, self.cap_total) <= 0:
            raise DomainError("rate region capacities must be positive")
        if self.cap1 > self.cap_total or self.cap2 > self.cap_total:
            raise DomainError("per-class caps cannot exceed the total cap")
        if self.cap1 + self.cap2 < self.cap_total:
            raise DomainError("caps do not form a polymatroid (cap1 + cap2 < cap_total)")

    @classmethod
    def from_config(cls, n1: float, n2: float, k1: float, k2: float) -> RateRegion:
        """Region for N_i servers (or capacity mu_i) with k_i placed in the pool."""
        return cls(n1 + k2, n2 + k1, n1 + n2)

    def mu(self, classes: frozenset) -> float:
        if classes == {1}:
            return self.cap1
        if classes == {2}:
            return self.cap2
        if classes == {1, 2}:
            return self.cap_total
        return 0.0

    def swapped(self) -> RateRegion:
        return RateRegion(self.cap2, self.cap1, self.cap_total)


def _check_region_stable(rho1, rho2, region: RateRegion):
    require(rho1 < region.cap1 and rho2 < region.cap2 and rho1 + rho2 < region.cap_total,
            f"loads ({rho1:.6g}, {rho2:.6g}) are not inside the rate region {region}")


def normalization_terms(rho1: float, rho2: float, region: RateRegion) -> dict[frozenset, float]:
    """Per-set terms G_A with G_{} = 1 and G_A = sum_i rho_i G_{A-i} / (mu(A) - rho(A))."""
    _check_region_stable(rho1, rho2, region)
    rho = {1: rho1, 2: rho2}
    terms: dict[frozenset, float] = {frozenset(): 1.0}
    for size in (1, 2):
        for A in itertools.combinations((1, 2), size):
            A = frozenset(A)
            num = sum(rho[i] * terms[A - {i}] for i in A)
            terms[A] = num / (region.mu(A) - sum(rho[i] for i in A))
    return terms


def _h(rho_i, rho_j, cap_i, cap_j, total):
    # the bracket H in G = H / (1 - (rho_i + rho_j) / total)
    return (1 - rho_i / total) / (1 - rho_i / cap_i) + (1 - rho_j / total) / (1 - rho_j / cap_j) - 1


def region_G(rho1: float, rho2: float, region: RateRegion) -> float:
    _check_region_stable(rho1, rho2, region)
    c = region.cap_total
    return _h(rho1, rho2, region.cap1, region.cap2, c) / (1 - (rho1 + rho2) / c)


def _region_delay_factor(rho_i, rho_j, cap_i, cap_j, total):
    """(dG/drho_i) / G for the closed-form G; symmetric in the class labels by construction."""
    h = _h(rho_i, rho_j, cap_i, cap_j, total)
    dh = (1 / cap_i - 1 / total) / (1 - rho_i / cap_i) ** 2
    return 1 / (total - rho_i - rho_j) + dh / h


def region_mean_response(rho1, rho2, nu1, nu2, region: RateRegion) -> tuple[float, float]:
    _check_region_stable(rho1, rho2, region)
    c = region.cap_total
    d1 = _region_delay_factor(rho1, rho2, region.cap1, region.cap2, c) / nu1
    d2 = _region_delay_factor(rho2, rho1, region.cap2, region.cap1, c) / nu2
    return d1, d2


def region_wait_probability(rho1, rho2, region: RateRegion) -> tuple[float, float]:
    """Probability an arriving class-i job finds its own queue non-empty.

    P(n_i = 0) is the sum of the other class's geometric axis,
    cap_j / (cap_j - rho_j), divided by G.
    """
    G = region_G(rho1, rho2, region)
    c1 = 1 - region.cap2 / (region.cap2 - rho2) / G
    c2 = 1 - region.cap1 / (region.cap1 - rho1) / G
    return c1, c2


def _coc_region(p1, p2, cfg, integral=True):
    p1, p2 = check_providers(p1, p2)
    cfg = check_config(cfg, p1.n_servers, p2.n_servers, integral=integral)
    require(p1.rho + p2.rho < p1.n_servers + p2.n_servers, "joint load exceeds total capacity")
    return p1, p2, cfg, RateRegion.from_config(p1.n_servers, p2.n_servers, cfg.k1, cfg.k2)


def normalization_G(p1: ProviderParams, p2: ProviderParams, cfg) -> float:
    """Closed-form balanced-fairness normalization G(k1, k2)."""
    p1, p2, cfg, region = _coc_region(p1, p2, cfg)
    return region_G(p1.rho, p2.rho, region)


def mean_response_coc(p1: ProviderParams, p2: ProviderParams, cfg, i: int) -> float:
    """Mean response time D_i(k1, k2) of provider ``i`` (1 or 2) under c.o.c.

    Computed as (dG/drho_i) / (nu_i G) with the derivative taken in
    closed form.
    """
    if i not in (1, 2):
        raise DomainError(f"provider index must be 1 or 2, got {i!r}")
    p1, p2, cfg, region = _coc_region(p1, p2, cfg)
    return region_mean_response(p1.rho, p2.rho, p1.nu, p2.nu, region)[i - 1]


def mean_response_pair(p1, p2, cfg) -> tuple[float, float]:
    p1, p2, cfg, region = _coc_region(p1, p2, cfg)
    return region_mean_response(p1.rho, p2.rho, p1.nu, p2.nu, region)


def printed_response_provider1(p1: ProviderParams, p2: ProviderParams, cfg) -> float:
    """D_1 written out as the published closed form, kept as a cross-check."""
    p1, p2, cfg, _ = _coc_region(p1, p2, cfg)
    r1, r2 = p1.rho, p2.rho
    n1, n2, k1, k2 = p1.n_servers, p2.n_servers, cfg.k1, cfg.k2
    total = n1 + n2
    cap = n1 + k2
    h = (1 - r1 / total) / (1 - r1 / (n1 + k2)) + (1 - r2 / total) / (1 - r2 / (n2 + k1)) - 1
    inner = (1 - r1 / total) / cap / (1 - r1 / cap) ** 2 - (1 / total) / (1 - r1 / (n1 + k2))
    return (1 / (total - r1 - r2) + inner / h) / p1.nu


def mean_response_overall(p1: ProviderParams, p2: ProviderParams, cfg) -> float:
    """Arrival-weighted mean response time, via the H and L_i decomposition."""
    p1, p2, cfg, region = _coc_region(p1, p2, cfg)
    r1, r2 = p1.rho, p2.rho
    c = region.cap_total
    h = _h(r1, r2, region.cap1, region.cap2, c)
    # L_i = rho_i (1/cap_i - 1/total) / (1 - rho_i/cap_i)^2 is the excess occupancy of class i
    l1 = r1 * (1 / region.cap1 - 1 / c) / (1 - r1 / region.cap1) ** 2
    l2 = r2 * (1 / region.cap2 - 1 / c) / (1 - r2 / region.cap2) ** 2
    occupancy = (r1 + r2) / (c - r1 - r2) + (l1 + l2) / h
    return occupancy / (p1.lam + p2.lam)


@dataclass(frozen=True)
class BFOccupancy:
    """Truncated balanced-fairness stationary law over (n1, n2)."""

    pi: np.ndarray
    mean_jobs: tuple[float, float]
    D: tuple[float, float]
    tail_bound: float
    truncation: int


def _auto_truncation(q: float, tol: float) -> int:
    # smallest T with T q^T / (1 - q)^2 below tol, doubled for margin on the 2-d sum
    T = 16
    while (T + 1) * q ** T / (1 - q) ** 2 > tol * 1e-3:
        T += 16
    return T


def bf_occupancy_oracle(p1: ProviderParams, p2: ProviderParams, region: RateRegion,
                        truncation: int | None = None) -> BFOccupancy:
    """Balanced-fairness occupancy law from the balance-function recursion.

    Phi(0, 0) = 1 and Phi(n) = max over active sets A of
    sum_{i in A} Phi(n - e_i) / mu(A); the stationary weight of n is
    Phi(n) rho1^n1 rho2^n2, and D_i follows from Little's law.
    """
    r1, r2 = p1.rho, p2.rho
    _check_region_stable(r1, r2, region)
    q = max(r1 / region.cap1, r2 / region.cap2, (r1 + r2) / region.cap_total)
    T = _auto_truncation(q, TAIL_TOL) if truncation is None else int(truncation)
    c1, c2, c = region.cap1, region.cap2, region.cap_total
    w = np.zeros((T + 1, T + 1))
    w[0, 0] = 1.0
    for n1 in range(T + 1):
        for n2 in range(T + 1):
            if n1 == 0 and n2 == 0:
                continue
            if n2 == 0:
                w[n1, 0] = r1 * w[n1 - 1, 0] / c1
            elif n1 == 0:
                w[0, n2] = r2 * w[0, n2 - 1] / c2
            else:
                a = r1 * w[n1 - 1, n2]
                b = r2 * w[n1, n2 - 1]
                w[n1, n2] = max(a / c1, b / c2, (a + b) / c)
    total = w.sum()
    pi = w / total
    edge = pi[T, :].sum() + pi[:, T].sum()
    tail = edge * q / (1 - q)
    if tail > TAIL_TOL:
        raise TruncationError(f"truncation {T} leaves estimated tail mass {tail:.3g} > {TAIL_TOL}")
    idx = np.arange(T + 1)
    m1 = float((pi.sum(axis=1) * idx).sum())
    m2 = float((pi.sum(axis=0) * idx).sum())
    return BFOccupancy(pi=pi, mean_jobs=(m1, m2), D=(m1 / p1.lam, m2 / p2.lam),
                       tail_bound=float(tail), truncation=T)


def _strictly_better(a, b, tol):
    return a < b - tol * max(1.0, abs(b))


def pareto_coc(p1: ProviderParams, p2: ProviderParams, tol: float = 1e-12) -> set[tuple[int, int]]:
    """Pareto-optimal integer configurations for mean response time under c.o.c.

    Evaluates the whole grid {0..N1} x {0..N2}, keeps individually
    rational points and removes every point weakly dominated by another
    with a strict improvement for one provider.
    """
    p1, p2 = check_providers(p1, p2)
    grid = list(itertools.product(range(p1.n_servers + 1), range(p2.n_servers + 1)))
    values = {k: mean_response_pair(p1, p2, k) for k in grid}
    base = values[(0, 0)]
    frontier = set()
    for k, v in values.items():
        if not all(_strictly_better(v[i], base[i], tol) for i in (0, 1)):
            continue
        dominated = False
        for other, u in values.items():
            if other == k:
                continue
            weak = all(not _strictly_better(v[i], u[i], tol) for i in (0, 1))
            strict = any(_strictly_better(u[i], v[i], tol) for i in (0, 1))
            if weak and strict:
                dominated = True
                break
        if not dominated:
            frontier.add(k)
    return frontier


def single_server_metrics(mu1: float, mu2: float, p1: ProviderParams, p2: ProviderParams,
                          cfg) -> MetricPair:
    """Waiting probability and mean response time of BF pooling on one merged server.

    ``cfg`` may be real with k_i in [0, mu_i]; capacities mu_i replace
    the server counts of the multi-server model.
    """
    if mu1 <= 0 or mu2 <= 0:
        raise DomainError("service rates must be positive")
    cfg = check_config(cfg, mu1, mu2)
    if p1.rho >= mu1 or p2.rho >= mu2:
        raise InstabilityError(f"loads ({p1.rho}, {p2.rho}) must be below rates ({mu1}, {mu2})")
    region = RateRegion.from_config(mu1, mu2, cfg.k1, cfg.k2)
    D = region_mean_response(p1.rho, p2.rho, p1.nu, p2.nu, region)
    C = region_wait_probability(p1.rho, p2.rho, region)
    return MetricPair(C=C, D=D, source="analytic")


def single_server_pareto(mu1: float, mu2: float, p1: ProviderParams, p2: ProviderParams,
                         metric: str = "delay", grid_step: float = 0.05,
                         tol: float = 1e-12) -> list[tuple[float, float]]:
    """Undominated, individually rational points of a real grid over [0, mu1] x [0, mu2]."""
    from .pareto import pareto_mask

    n = int(round(1 / grid_step))
    ks = [(mu1 * a / n, mu2 * b / n) for a in range(n + 1) for b in range(n + 1)]
    vals = np.array([single_server_metrics(mu1, mu2, p1, p2, k).get(metric) for k in ks])
    mask = pareto_mask(vals, vals[0], tol=tol)
    return [ks[i] for i in np.flatnonzero(mask)]
