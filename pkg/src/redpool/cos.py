"""Partial pooling under cancel-on-start replication.

The c.o.s. system behaves like one FCFS queue in which every server
takes the earliest waiting job it is eligible for.  With assignment
rates that satisfy the permutation (assignment-rate) condition, the
stationary law has a product form; it is aggregated here over the
occupancy vector x = (x1, x2, x3) of busy dedicated-1, dedicated-2 and
shared servers.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_config, check_equal_nu, check_providers
from .exceptions import DomainError, InfeasibleRatesError, InstabilityError
from .params import ProviderParams, SharingConfig

Occupancy = tuple[int, int, int]

# eligible server classes per provider (0: dedicated-1, 1: dedicated-2, 2: shared)
ELIGIBLE = {1: (0, 2), 2: (1, 2)}


@dataclass(frozen=True)
class ServerClasses:
    """Sizes of the dedicated-1, dedicated-2 and shared server pools."""

    d1: int
    d2: int
    shared: int

    def __post_init__(self):
        if min(self.d1, self.d2, self.shared) < 0:
            raise DomainError(f"server class sizes must be non-negative: {self}")

    @classmethod
    def from_config(cls, n1: int, n2: int, k1: int, k2: int) -> ServerClasses:
        return cls(int(n1 - k1), int(n2 - k2), int(k1 + k2))

    @property
    def sizes(self) -> Occupancy:
        return (self.d1, self.d2, self.shared)

    @property
    def total(self) -> int:
        return self.d1 + self.d2 + self.shared

    def states(self) -> list[Occupancy]:
        return list(itertools.product(range(self.d1 + 1), range(self.d2 + 1), range(self.shared + 1)))

    def idle(self, x: Occupancy) -> Occupancy:
        return (self.d1 - x[0], self.d2 - x[1], self.shared - x[2])

    def blocked(self, x: Occupancy, provider: int) -> bool:
        """True when every server provider ``provider`` may use is busy."""
        own = x[0] == self.d1 if provider == 1 else x[1] == self.d2
        return own and x[2] == self.shared


def blocked_rate(x: Occupancy, lam1: float, lam2: float, classes: ServerClasses) -> float:
    """Arrival rate of jobs no idle server can take in occupancy ``x``."""
    rate = 0.0
    if classes.blocked(x, 1):
        rate += lam1
    if classes.blocked(x, 2):
        rate += lam2
    return rate


def servable_rate(x: Occupancy, lam1: float, lam2: float, classes: ServerClasses) -> float:
    return lam1 + lam2 - blocked_rate(x, lam1, lam2, classes)


def _step(x: Occupancy, c: int, delta: int = 1) -> Occupancy:
    y = list(x)
    y[c] += delta
    return (y[0], y[1], y[2])


def _by_level(classes: ServerClasses) -> list[list[Occupancy]]:
    levels: list[list[Occupancy]] = [[] for _ in range(classes.total + 1)]
    for x in classes.states():
        levels[sum(x)].append(x)
    return levels


@dataclass(frozen=True)
class AssignmentRateTable:
    """Per-server assignment rates r_c(x) for every occupancy vector.

    ``log_potential[x]`` is log Pi(x), the product of assignment rates
    along any path from the empty state to ``x`` (Pi(0) = 1).
    """

    classes: ServerClasses
    lam1: float
    lam2: float
    nu: float
    rates: dict[Occupancy, tuple[float, float, float]]
    log_potential: dict[Occupancy, float]
    log_weight: dict[Occupancy, float] = field(repr=False)

    def rate(self, x: Occupancy, c: int) -> float:
        return self.rates[x][c]

    def servable(self, x: Occupancy) -> float:
        return servable_rate(x, self.lam1, self.lam2, self.classes)

    def split(self, x: Occupancy, provider: int) -> tuple[float, float, float]:
        """Probability that an arriving job of ``provider`` starts on each server class.

        Dedicated servers of the provider receive x̄_c r_c(x) of its
        arrival rate; the remainder goes to the shared pool.
        """
        if self.classes.blocked(x, provider):
            return (0.0, 0.0, 0.0)
        lam = self.lam1 if provider == 1 else self.lam2
        own = 0 if provider == 1 else 1
        idle = self.classes.idle(x)
        p_own = idle[own] * self.rates[x][own] / lam
        out = [0.0, 0.0, 0.0]
        out[own] = p_own
        out[2] = 1.0 - p_own if idle[2] > 0 else 0.0
        return (out[0], out[1], out[2])

    def check(self, tol: float = 1e-9) -> AssignmentRateTable:
        """Verify non-negativity, balance, per-provider feasibility and the boundary values."""
        cl = self.classes
        lam = {1: self.lam1, 2: self.lam2}
        for x, r in self.rates.items():
            idle = cl.idle(x)
            if any(v < -tol for v in r):
                raise InfeasibleRatesError(f"negative assignment rate at {x}: {r}")
            scale = max(1.0, self.lam1 + self.lam2)
            resid = sum(idle[c] * r[c] for c in range(3)) - self.servable(x)
            if abs(resid) > tol * scale:
                raise InfeasibleRatesError(f"balance residual {resid:.3g} at {x}")
            for prov, own in ((1, 0), (2, 1)):
                flow = idle[own] * r[own]
                if flow > lam[prov] * (1 + tol) + tol:
                    raise InfeasibleRatesError(f"dedicated flow {flow} exceeds lambda{prov} at {x}")
                if idle[2] == 0 and idle[own] > 0 and abs(flow - lam[prov]) > tol * scale:
                    raise InfeasibleRatesError(f"provider {prov} arrivals not fully assigned at {x}")
        full = cl.sizes
        boundary = (self.lam1, self.lam2, self.lam1 + self.lam2)
        for c in range(3):
            if full[c] > 0:
                got = self.rates[_step(full, c, -1)][c]
                if abs(got - boundary[c]) > tol * max(1.0, boundary[c]):
                    raise InfeasibleRatesError(f"boundary rate r_{c + 1}={got} != {boundary[c]}")
        return self

    def dump(self) -> str:
        """Sorted ``x1 x2 x3 r1 r2 r3`` lines with round-trippable floats."""
        lines = []
        for x in sorted(self.rates):
            r = self.rates[x]
            lines.append(f"{x[0]} {x[1]} {x[2]} {r[0]!r} {r[1]!r} {r[2]!r}")
        return "\n".join(lines) + "\n"


def _logsumexp(values) -> float:
    values = [v for v in values if v != -math.inf]
    if not values:
        return -math.inf
    m = max(values)
    return m + math.log(sum(math.exp(v - m) for v in values))


def _resolve(p1, p2, cfg, integral=True):
    p1, p2 = check_providers(p1, p2)
    nu = check_equal_nu(p1, p2)
    cfg = check_config(cfg, p1.n_servers, p2.n_servers, integral=integral)
    return p1, p2, nu, cfg


def solve_assignment_rates(p1: ProviderParams, p2: ProviderParams, cfg) -> AssignmentRateTable:
    """Assignment rates for an integer configuration.

    Works downward from full occupancy.  Writing W(x) = Pi(x) F(x) /
    (|x|! nu^|x|), with F(x) the number of ways to pick the busy
    servers, the balance equation sum_c x̄_c r_c(x) = r(x) becomes
    W(x) = (|x|+1) nu sum_c W(x + e_c) / r(x), and r_c(x) follows as
    the potential ratio Pi(x + e_c) / Pi(x).  Defining rates as ratios
    of one potential makes every permutation of an assignment path give
    the same product.
    """
    p1, p2, nu, cfg = _resolve(p1, p2, cfg)
    cl = ServerClasses.from_config(p1.n_servers, p2.n_servers, int(cfg.k1), int(cfg.k2))
    return _solve_rates(p1.lam, p2.lam, nu, cl)


def _solve_rates(lam1: float, lam2: float, nu: float, cl: ServerClasses) -> AssignmentRateTable:
    full = cl.sizes
    log_w: dict[Occupancy, float] = {}
    for level in reversed(_by_level(cl)):
        for x in level:
            if x == full:
                log_w[x] = 0.0
                continue
            j = sum(x)
            ups = [log_w[_step(x, c)] for c in range(3) if x[c] < full[c]]
            log_w[x] = _logsumexp(ups) + math.log((j + 1) * nu / servable_rate(x, lam1, lam2, cl))
    rates = {}
    for x in log_w:
        j = sum(x)
        idle = cl.idle(x)
        rates[x] = tuple(
            (j + 1) * nu * math.exp(log_w[_step(x, c)] - log_w[x]) / idle[c] if idle[c] > 0 else 0.0
            for c in range(3)
        )
    log_pi = {}
    for x, lw in log_w.items():
        j = sum(x)
        log_f = sum(math.lgamma(full[c] + 1) - math.lgamma(full[c] - x[c] + 1) for c in range(3))
        log_pi[x] = lw + math.lgamma(j + 1) + j * math.log(nu) - log_f
    ref = log_pi[(0, 0, 0)]
    log_pi = {x: v - ref for x, v in log_pi.items()}
    return AssignmentRateTable(cl, lam1, lam2, nu, rates, log_pi, log_w)


@dataclass(frozen=True)
class CosStationaryDescription:
    """Product-form stationary law aggregated over occupancy vectors.

    ``mass[x]`` includes every state whose busy set has occupancy ``x``,
    summed over the numbers of waiting jobs.  ``log_path_sum[x]`` is the
    log of the sum, over class-label paths ending in ``x``, of the
    geometric factors prod_j 1 / (1 - alpha_j).
    """

    table: AssignmentRateTable
    pi0: float
    alpha: dict[Occupancy, float]
    log_path_sum: dict[Occupancy, float]
    mass: dict[Occupancy, float]

    @property
    def classes(self) -> ServerClasses:
        return self.table.classes

    def blocked_mass(self, provider: int) -> float:
        cl = self.classes
        return math.fsum(m for x, m in self.mass.items() if cl.blocked(x, provider))

    def enumerate_paths(self, limit: int = 200_000):
        """Yield (label path, weight) for every ordered class-label path.

        The weight is pi(0) times the rate product along the path, the
        number of server sequences realising the labels, the geometric
        waiting factors, divided by i! nu^i.  Summing the weights of all
        paths ending in x gives ``mass[x]``; intended for small systems.
        """
        tb = self.table
        full = self.classes.sizes
        count = 0

        def walk(x, path, weight):
            nonlocal count
            count += 1
            if count > limit:
                raise DomainError("too many label paths to enumerate")
            yield tuple(path), weight
            j = sum(x)
            for c in range(3):
                if x[c] < full[c]:
                    y = _step(x, c)
                    w = weight * tb.rates[x][c] * (full[c] - x[c]) / ((j + 1) * tb.nu)
                    w /= 1.0 - self.alpha[y]
                    path.append(c)
                    yield from walk(y, path, w)
                    path.pop()

        yield from walk((0, 0, 0), [], self.pi0)

    def dump(self) -> str:
        return "".join(f"{x[0]} {x[1]} {x[2]} {self.mass[x]!r}\n" for x in sorted(self.mass))


def stationary_normalization(p1: ProviderParams, p2: ProviderParams, cfg,
                             rates: AssignmentRateTable | None = None) -> CosStationaryDescription:
    """Normalised product-form law for an integer configuration."""
    p1, p2, nu, cfg = _resolve(p1, p2, cfg)
    if rates is None:
        rates = solve_assignment_rates(p1, p2, cfg)
    return _stationary(rates)


def _stationary(tb: AssignmentRateTable) -> CosStationaryDescription:
    cl = tb.classes
    alpha = {}
    log_s: dict[Occupancy, float] = {}
    for level in _by_level(cl):
        for x in level:
            j = sum(x)
            a = blocked_rate(x, tb.lam1, tb.lam2, cl) / (j * tb.nu) if j else 0.0
            if a >= 1.0:
                raise InstabilityError(f"geometric factor alpha={a:.6g} >= 1 at occupancy {x}")
            alpha[x] = a
            if j == 0:
                log_s[x] = 0.0
                continue
            downs = [log_s[_step(x, c, -1)] for c in range(3) if x[c] > 0]
            log_s[x] = _logsumexp(downs) - math.log1p(-a)
    log_m = {x: tb.log_weight[x] + log_s[x] for x in log_s}
    z = _logsumexp(log_m.values())
    mass = {x: math.exp(v - z) for x, v in log_m.items()}
    return CosStationaryDescription(tb, mass[(0, 0, 0)], alpha, log_s, mass)


def _canonical(p1: ProviderParams, p2: ProviderParams, k1, k2) -> bool:
    """True when the provider labels should be swapped before computing."""
    return (p2.lam, p2.n_servers, k2) < (p1.lam, p1.n_servers, k1)


@functools.lru_cache(maxsize=4096)
def _corner_wait(lam1, lam2, nu, n1, n2, k1, k2) -> tuple[float, float]:
    cl = ServerClasses.from_config(n1, n2, k1, k2)
    desc = _stationary(_solve_rates(lam1, lam2, nu, cl))
    return desc.blocked_mass(1), desc.blocked_mass(2)


def waiting_probabilities(p1: ProviderParams, p2: ProviderParams, cfg) -> tuple[float, float]:
    """Stationary waiting probabilities (C1, C2) at an integer configuration.

    An arrival waits exactly when all servers it may use are busy, so by
    PASTA C_i is the stationary mass of occupancies blocking provider i.
    """
    p1, p2, nu, cfg = _resolve(p1, p2, cfg)
    k1, k2 = int(cfg.k1), int(cfg.k2)
    if _canonical(p1, p2, k1, k2):
        c2, c1 = _corner_wait(p2.lam, p1.lam, nu, p2.n_servers, p1.n_servers, k2, k1)
        return c1, c2
    return _corner_wait(p1.lam, p2.lam, nu, p1.n_servers, p2.n_servers, k1, k2)


def _corners(k: float, n: int) -> tuple[int, int, float]:
    lo = min(int(math.floor(k)), n)
    if lo == n:
        return n, n, 0.0
    return lo, lo + 1, k - lo


def bilinear_mix(values: dict[tuple[int, int], tuple[float, float]], a: tuple[int, int, float],
                 b: tuple[int, int, float]) -> tuple[float, float]:
    """Time-sharing mixture over the four integer corners surrounding (k1, k2).

    Terms are grouped so that relabelling the providers reproduces the
    swapped result bit for bit.
    """
    lo1, hi1, f1 = a
    lo2, hi2, f2 = b
    w00 = (1 - f1) * (1 - f2)
    w11 = f1 * f2
    w10 = f1 * (1 - f2)
    w01 = (1 - f1) * f2
    out = []
    for i in range(2):
        diag = w00 * values[(lo1, lo2)][i] + w11 * values[(hi1, hi2)][i]
        anti = w10 * values[(hi1, lo2)][i] + w01 * values[(lo1, hi2)][i]
        out.append(diag + anti)
    return out[0], out[1]


def mixed_config_metrics(p1: ProviderParams, p2: ProviderParams, k1: float, k2: float,
                         corner_metric=None) -> tuple[float, float]:
    """Waiting probabilities for a real configuration realised by time-sharing.

    Each provider independently alternates between floor(k_i) and
    ceil(k_i) with long-run fraction k_i - floor(k_i) on the upper
    value; for N1 = N2 = 1 this is the four-corner mixture over
    (0,0), (0,1), (1,0), (1,1).  ``corner_metric(p1, p2, (a, b))``
    replaces the waiting probability when another metric is mixed.
    """
    p1, p2 = check_providers(p1, p2)
    check_equal_nu(p1, p2)
    check_config((k1, k2), p1.n_servers, p2.n_servers)
    metric = corner_metric or waiting_probabilities
    a = _corners(float(k1), p1.n_servers)
    b = _corners(float(k2), p2.n_servers)
    values = {(u, v): metric(p1, p2, (u, v)) for u in {a[0], a[1]} for v in {b[0], b[1]}}
    return bilinear_mix(values, a, b)


def mixed_grid(p1: ProviderParams, p2: ProviderParams, K: np.ndarray, corner_metric=None) -> np.ndarray:
    """Vectorised :func:`mixed_config_metrics` over an (n, 2) array of configurations."""
    metric = corner_metric or waiting_probabilities
    n1, n2 = p1.n_servers, p2.n_servers
    table = np.empty((n1 + 1, n2 + 1, 2))
    for u in range(n1 + 1):
        for v in range(n2 + 1):
            table[u, v] = metric(p1, p2, (u, v))
    K = np.asarray(K, dtype=float)
    lo1 = np.minimum(np.floor(K[:, 0]).astype(int), n1 - 1)
    lo2 = np.minimum(np.floor(K[:, 1]).astype(int), n2 - 1)
    f1 = K[:, 0] - lo1
    f2 = K[:, 1] - lo2
    w00 = (1 - f1) * (1 - f2)
    w11 = f1 * f2
    w10 = f1 * (1 - f2)
    w01 = (1 - f1) * f2
    out = np.empty((K.shape[0], 2))
    for i in range(2):
        diag = w00 * table[lo1, lo2, i] + w11 * table[lo1 + 1, lo2 + 1, i]
        anti = w10 * table[lo1 + 1, lo2, i] + w01 * table[lo1, lo2 + 1, i]
        out[:, i] = diag + anti
    return out


def printed_blocked_masses(p1: ProviderParams, p2: ProviderParams, cfg) -> dict[str, float]:
    """Evaluate the nested closed sums for pi_{1} and pi_{1,2} exactly as typeset.

    The typeset sums mix index names, so ``y`` is read as ``x2``.  The
    result is returned next to the aggregated product-form values for
    comparison only; nothing else in the package uses it.
    """
    p1, p2, nu, cfg = _resolve(p1, p2, cfg)
    n1, n2 = p1.n_servers, p2.n_servers
    k1, k2 = int(cfg.k1), int(cfg.k2)
    lam1, lam2 = p1.lam, p2.lam
    tb = solve_assignment_rates(p1, p2, cfg)
    desc = _stationary(tb)
    cl = tb.classes
    d2 = cl.d2
    big = n1 + k2
    pi0 = desc.pi0
    potential = {x: math.exp(v) for x, v in tb.log_potential.items()}
    pi_1 = 0.0
    for x2 in range(d2):
        inner = 0.0
        for w in range(x2 + 1):
            prod = 1.0
            for v in range(w + 1):
                prod *= (big + x2 - w + v) / (big + x2 - w + v - lam1)
            inner += math.comb(x2, w) * math.factorial(w) * big * math.factorial(big + x2 - w - 1) * prod
        pi_1 += potential[(cl.d1, x2, cl.shared)] * pi0 / math.factorial(big + x2) * math.comb(d2, x2) * inner
    n = n1 + n2
    outer = 0.0
    for w in range(d2 + 1):
        prod = 1.0
        for v in range(w):
            prod *= (n - w + v) / (n - w + v - lam1)
        outer += math.comb(d2, w) * math.factorial(w) * big * math.factorial(n - w - 1) * prod
    pi_12 = potential[cl.sizes] * pi0 / (math.factorial(n - 1) * (n - lam1 - lam2)) * outer
    full = cl.sizes
    exact_12 = desc.mass[full]
    exact_1 = desc.blocked_mass(1) - exact_12
    return {"pi_1_printed": pi_1, "pi_12_printed": pi_12, "pi_1": exact_1, "pi_12": exact_12}
