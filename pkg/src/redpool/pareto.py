"""Pareto frontiers and Kalai-Smorodinsky bargaining over sharing configurations.

Configurations are compared through a pair of per-provider costs
(B1, B2), either waiting probabilities or mean response times.  A
configuration is on the frontier when it is individually rational
(strictly better than no sharing for both providers) and no other
configuration is at least as good for both and strictly better for one.
"""
from __future__ import annotations

import csv
import functools
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from ._validation import check_equal_nu, check_grid_step, check_providers
from .coc import mean_response_pair
from .cos import mixed_grid, waiting_probabilities
from .exceptions import DegenerateFrontierError, DomainError, NoFrontierError
from .params import ProviderParams, SharingConfig

log = logging.getLogger(__name__)

POLICIES = ("coc", "cos")
METRICS = ("wait", "delay")
DOMINANCE_TOL = 1e-12


@dataclass(frozen=True)
class ParetoPoint:
    config: SharingConfig
    metrics: tuple[float, float]
    rational: bool
    undominated: bool
    is_ksbs: bool = False
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def on_frontier(self) -> bool:
        return self.rational and self.undominated

    @property
    def k(self) -> tuple[float, float]:
        return self.config.as_tuple()


def dominated_mask(values, tol: float = DOMINANCE_TOL) -> np.ndarray:
    """Flag rows of an (n, 2) cost array dominated by some other row.

    Row u dominates v when u is no worse in both costs and strictly
    better in one; differences below ``tol * max(1, max|value|)`` count
    as ties.  Runs in O(n log n) with two prefix-minimum sweeps.
    """
    v = np.asarray(values, dtype=float)
    n = v.shape[0]
    if n == 0:
        return np.zeros(0, dtype=bool)
    eps = tol * max(1.0, float(np.max(np.abs(v))))
    order = np.argsort(v[:, 0], kind="stable")
    s1 = v[order, 0]
    pmin2 = np.minimum.accumulate(v[order, 1])
    # some u with u1 < v1 - eps and u2 <= v2 + eps
    cnt = np.searchsorted(s1, v[:, 0] - eps, side="left")
    a = (cnt > 0) & (pmin2[np.maximum(cnt - 1, 0)] <= v[:, 1] + eps)
    # some u with u1 <= v1 + eps and u2 < v2 - eps
    cnt = np.searchsorted(s1, v[:, 0] + eps, side="right")
    b = (cnt > 0) & (pmin2[np.maximum(cnt - 1, 0)] < v[:, 1] - eps)
    return a | b


def rational_mask(values, base, tol: float = DOMINANCE_TOL) -> np.ndarray:
    """Strict individual rationality: both costs below their no-sharing values."""
    v = np.asarray(values, dtype=float)
    base = np.asarray(base, dtype=float)
    eps = tol * np.maximum(1.0, np.abs(base))
    return np.all(v < base - eps, axis=1)


def pareto_mask(values, base, tol: float = DOMINANCE_TOL) -> np.ndarray:
    return rational_mask(values, base, tol) & ~dominated_mask(values, tol)


def default_grid_step(p1: ProviderParams, p2: ProviderParams) -> float:
    return 0.01 if p1.n_servers == 1 and p2.n_servers == 1 else 0.05


def config_grid(n1: int, n2: int, grid_step: float) -> np.ndarray:
    """Grid over [0, N1] x [0, N2] with ``1/grid_step`` cells per axis.

    Axis values are N_i * j / m with integer j, so corners and (when m
    is a multiple of N_i) all integer configurations are exact.
    """
    m = int(round(1.0 / check_grid_step(grid_step)))
    a = n1 * np.arange(m + 1) / m
    b = n2 * np.arange(m + 1) / m
    g1, g2 = np.meshgrid(a, b, indexing="ij")
    return np.column_stack([g1.ravel(), g2.ravel()])


@functools.lru_cache(maxsize=1024)
def _cos_delay(p1: ProviderParams, p2: ProviderParams, k) -> tuple[float, float]:
    from .ctmc import typed_ctmc_oracle

    return tuple(float(d) for d in typed_ctmc_oracle(p1, p2, k).D)


def _cos_delay_corner(p1, p2, k):
    return _cos_delay(p1, p2, tuple(int(v) for v in k))


def evaluate_grid(p1: ProviderParams, p2: ProviderParams, policy: str = "cos",
                  metric: str = "wait", grid_step: float | None = None):
    """Configurations and their cost pairs for a policy and metric.

    c.o.c. pooling is evaluated on the integer grid only (the server
    pool is integral), for mean response time.  c.o.s. uses time-sharing
    mixtures on a real grid; its mean response time comes from the typed
    Markov chain at the integer corners.
    """
    p1, p2 = check_providers(p1, p2)
    if policy not in POLICIES:
        raise DomainError(f"policy must be one of {POLICIES}, got {policy!r}")
    if metric not in METRICS:
        raise DomainError(f"metric must be one of {METRICS}, got {metric!r}")
    if policy == "coc":
        if metric != "delay":
            raise DomainError("cancel-on-complete pooling is compared on mean response time only")
        K = np.array([(a, b) for a in range(p1.n_servers + 1) for b in range(p2.n_servers + 1)], dtype=float)
        V = np.array([mean_response_pair(p1, p2, (int(a), int(b))) for a, b in K])
        return K, V
    check_equal_nu(p1, p2)
    step = default_grid_step(p1, p2) if grid_step is None else grid_step
    K = config_grid(p1.n_servers, p2.n_servers, step)
    corner = waiting_probabilities if metric == "wait" else _cos_delay_corner
    return K, mixed_grid(p1, p2, K, corner_metric=corner)


def _points(K, V, rational, undominated) -> list[ParetoPoint]:
    return [ParetoPoint(SharingConfig(float(k[0]), float(k[1])), (float(v[0]), float(v[1])), bool(r), bool(u))
            for k, v, r, u in zip(K, V, rational, undominated)]


def pareto_grid(p1: ProviderParams, p2: ProviderParams, policy: str = "cos", metric: str = "wait",
                grid_step: float | None = None, tol: float = DOMINANCE_TOL) -> list[ParetoPoint]:
    """Every grid configuration with its rationality and dominance flags."""
    K, V = evaluate_grid(p1, p2, policy, metric, grid_step)
    base = V[0]  # the grid starts at (0, 0)
    return _points(K, V, rational_mask(V, base, tol), ~dominated_mask(V, tol))


def pareto_frontier(p1: ProviderParams, p2: ProviderParams, policy: str = "cos", metric: str = "wait",
                    grid_step: float | None = None, tol: float = DOMINANCE_TOL) -> list[ParetoPoint]:
    """Individually rational, undominated grid configurations, sorted by (k1, k2).

    Tied cost pairs at distinct configurations are all kept.
    """
    return [p for p in pareto_grid(p1, p2, policy, metric, grid_step, tol) if p.on_frontier]


def audit_frontier(frontier, grid_values, tol: float = DOMINANCE_TOL) -> list[ParetoPoint]:
    """Return frontier points dominated by some grid value (empty when the audit passes).

    Brute force on purpose: this double-checks the sweep in
    :func:`dominated_mask`.
    """
    V = np.asarray(grid_values, dtype=float)
    eps = tol * max(1.0, float(np.max(np.abs(V))))
    bad = []
    for p in frontier:
        b = np.asarray(p.metrics)
        weak = np.all(V <= b + eps, axis=1)
        strict = np.any(V < b - eps, axis=1)
        if np.any(weak & strict):
            bad.append(p)
    return bad


# ---------------------------------------------------------------------------
# N1 = N2 = 1 under cancel-on-start: exact frontier structure


@dataclass(frozen=True)
class FrontierStructure:
    """Closed-form frontier for one server per provider.

    ``case`` is ``"both-benefit"`` (two arms through full pooling),
    ``"one-benefits"`` (provider 1 gains from full pooling, provider 2
    does not; a single arm with k1 = 1) or ``"symmetric-other"`` (the
    mirror image, a single arm with k2 = 1).
    """

    case: str
    x_hat1: float | None = None
    x_hat2: float | None = None
    lower: float | None = None
    upper: float | None = None
    corners: dict = field(default_factory=dict, compare=False)

    def segments(self) -> list[tuple[tuple[float, float], tuple[float, float]]]:
        """Frontier pieces as configuration segments (endpoints may be open)."""
        if self.case == "both-benefit":
            return [((self.x_hat1, 1.0), (1.0, 1.0)), ((1.0, self.x_hat2), (1.0, 1.0))]
        if self.case == "one-benefits":
            return [((1.0, self.lower), (1.0, self.upper))]
        return [((self.lower, 1.0), (self.upper, 1.0))]

    def contains(self, k, tol: float = 0.0) -> bool:
        k1, k2 = k
        if self.case == "both-benefit":
            return (abs(k2 - 1) <= tol and self.x_hat1 - tol < k1 <= 1 + tol) or \
                   (abs(k1 - 1) <= tol and self.x_hat2 - tol < k2 <= 1 + tol)
        if self.case == "one-benefits":
            return abs(k1 - 1) <= tol and self.lower - tol < k2 < self.upper + tol
        return abs(k2 - 1) <= tol and self.lower - tol < k1 < self.upper + tol

    def sample(self, step: float) -> np.ndarray:
        pts = []
        for (a, b) in self.segments():
            n = max(2, int(math.ceil(math.dist(a, b) / step)) + 1)
            t = np.linspace(0.0, 1.0, n)[:, None]
            pts.append((1 - t) * np.asarray(a) + t * np.asarray(b))
        return np.vstack(pts)


def _unit_corners(p1, p2) -> dict:
    p1, p2 = check_providers(p1, p2)
    check_equal_nu(p1, p2)
    if p1.n_servers != 1 or p2.n_servers != 1:
        raise DomainError("this construction needs one server per provider")
    return {k: waiting_probabilities(p1, p2, k) for k in ((0, 0), (0, 1), (1, 0), (1, 1))}


def _solve_linear(c_from, c_to, target):
    # x with (1 - x) * c_from + x * c_to = target
    return (c_from - target) / (c_from - c_to)


def unit_frontier_closed_form(p1: ProviderParams, p2: ProviderParams) -> FrontierStructure:
    """Exact frontier of the waiting probability for N1 = N2 = 1.

    The mixed waiting probabilities are bilinear in (k1, k2), so every
    threshold is the root of a linear equation along an edge k_i = 1.
    """
    C = _unit_corners(p1, p2)
    c1 = {k: v[0] for k, v in C.items()}
    c2 = {k: v[1] for k, v in C.items()}
    gain1 = c1[(1, 1)] < c1[(0, 0)]
    gain2 = c2[(1, 1)] < c2[(0, 0)]
    if gain1 and gain2:
        return FrontierStructure(
            "both-benefit",
            x_hat1=_solve_linear(c2[(0, 1)], c2[(1, 1)], c2[(0, 0)]),
            x_hat2=_solve_linear(c1[(1, 0)], c1[(1, 1)], c1[(0, 0)]),
            corners=C,
        )
    if gain1:
        lo = _solve_linear(c1[(1, 0)], c1[(1, 1)], c1[(0, 0)])
        hi = _solve_linear(c2[(1, 0)], c2[(1, 1)], c2[(0, 0)])
        if c2[(1, 1)] == c2[(0, 0)]:
            log.info("full pooling leaves provider 2 exactly indifferent; endpoint (1, 1) excluded")
        return FrontierStructure("one-benefits", lower=lo, upper=min(hi, 1.0), corners=C)
    if gain2:
        lo = _solve_linear(c2[(0, 1)], c2[(1, 1)], c2[(0, 0)])
        hi = _solve_linear(c1[(0, 1)], c1[(1, 1)], c1[(0, 0)])
        if c1[(1, 1)] == c1[(0, 0)]:
            log.info("full pooling leaves provider 1 exactly indifferent; endpoint (1, 1) excluded")
        return FrontierStructure("symmetric-other", lower=lo, upper=min(hi, 1.0), corners=C)
    raise DegenerateFrontierError("neither provider gains from full pooling")


def _point_segment_distance(P, a, b) -> np.ndarray:
    P = np.asarray(P, dtype=float).reshape(-1, 2)
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    d = b - a
    L = float(d @ d)
    t = np.zeros(len(P)) if L == 0 else np.clip((P - a) @ d / L, 0.0, 1.0)
    return np.linalg.norm(P - (a + t[:, None] * d), axis=1)


def hausdorff(a, b) -> float:
    """Symmetric Hausdorff distance between two point sets (inf if exactly one is empty)."""
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    if len(a) == 0 and len(b) == 0:
        return 0.0
    if len(a) == 0 or len(b) == 0:
        return math.inf
    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])


def frontier_distance(points, structure: FrontierStructure, resolution: float = 1e-4) -> float:
    """Hausdorff distance between grid configurations and the closed-form frontier.

    Distances from the points to the segments are exact; the other
    direction samples the segments every ``resolution``.
    """
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(P) == 0:
        return math.inf
    to_set = np.min([_point_segment_distance(P, a, b) for a, b in structure.segments()], axis=0)
    S = structure.sample(resolution)
    return max(float(to_set.max()), directed_hausdorff(S, P)[0])


def gradients(p1: ProviderParams, p2: ProviderParams, k) -> np.ndarray:
    """Row i holds (dC_i/dk1, dC_i/dk2) of the bilinear mixture at k, N1 = N2 = 1."""
    C = _unit_corners(p1, p2)
    k1, k2 = k
    g = np.empty((2, 2))
    for i in range(2):
        g[i, 0] = (1 - k2) * (C[(1, 0)][i] - C[(0, 0)][i]) + k2 * (C[(1, 1)][i] - C[(0, 1)][i])
        g[i, 1] = (1 - k1) * (C[(0, 1)][i] - C[(0, 0)][i]) + k1 * (C[(1, 1)][i] - C[(1, 0)][i])
    return g


@dataclass(frozen=True)
class DirectionCertificate:
    theta: float
    lower: float
    upper: float
    gradients: np.ndarray = field(compare=False)
    cross: float = 0.0

    @property
    def direction(self) -> tuple[float, float]:
        return (1.0, self.theta)


def boundary_direction_check(p1: ProviderParams, p2: ProviderParams, k) -> DirectionCertificate:
    """Direction (1, theta) along which both waiting probabilities drop at interior k.

    Moving along it shows the interior configuration is dominated.
    """
    k1, k2 = float(k[0]), float(k[1])
    if not (0.0 <= k1 < 1.0 and 0.0 <= k2 < 1.0):
        raise DomainError(f"need an interior configuration with k1, k2 < 1, got {(k1, k2)}")
    g = gradients(p1, p2, (k1, k2))
    lower = -g[0, 0] / g[0, 1]
    upper = -g[1, 0] / g[1, 1]
    cross = g[0, 1] * g[1, 0] - g[0, 0] * g[1, 1]
    if not lower < upper:
        raise DomainError(f"no improving direction at {(k1, k2)}: interval ({lower}, {upper})")
    return DirectionCertificate((lower + upper) / 2, lower, upper, g, cross)


@dataclass(frozen=True)
class MixtureSignConstants:
    omega1: float
    omega2: float
    alpha: float
    beta: float
    gamma: float
    diffs: dict = field(default_factory=dict, compare=False)


def mixture_sign_constants(p1: ProviderParams, p2: ProviderParams, form: str = "closed") -> MixtureSignConstants:
    """Constants governing the signs of the mixture derivatives for N1 = N2 = 1.

    ``form="closed"`` evaluates the rational closed forms in the loads;
    ``form="corners"`` builds the same quantities from the four exact
    corner waiting probabilities.  ``diffs`` holds the corner differences
    C1(1,0)-C1(0,0), C1(1,1)-C1(0,1), C1(0,1)-C1(0,0), C1(1,1)-C1(1,0).
    The cross-derivative gap equals alpha*k1 + beta*k2 + gamma.
    """
    C = _unit_corners(p1, p2)
    l1, l2 = p1.rho, p2.rho
    s = l1 + l2
    om1 = (l1 + l2 + l2 ** 2) * (1 - l1) + l1 * (1 - l1 * l2) + 3 * l2 + l2 ** 2
    om2 = (l1 + l2 + l1 ** 2) * (1 - l2) + l2 * (1 - l1 * l2) + 3 * l1 + l1 ** 2
    if form == "closed":
        diffs = {
            "c1_10_00": (2 - l1 + l2 - l1 * l2 - l1 ** 2) * l2 ** 2 / om1,
            "c1_11_01": (2 - l1 - l2) * l2 * s ** 2 / (om2 * (2 + s)),
            "c1_01_00": l1 * (1 - l2) * (l1 * (l2 - 4) + l2 * (l2 - 2)) / om2,
            "c1_11_10": (l1 * l2 + l2 ** 2 + 2 * l1 - 4) * s ** 2 / (om1 * (2 + s)),
        }
        common = (2 - s) / ((2 + s) * om1 * om2)
        alpha = 2 * (1 - l1) * (2 + l1 - l2 + l1 ** 2 + l1 * l2) * common * (l2 * s) ** 2
        beta = 2 * (1 - l2) * (2 + l2 - l1 + l2 ** 2 + l1 * l2) * common * (l1 * s) ** 2
        gamma = 4 * l1 * l2 * (1 - l1) * (1 - l2) * (2 - s) * s ** 2 / (om1 * om2)
    elif form == "corners":
        c1 = {k: v[0] for k, v in C.items()}
        c2 = {k: v[1] for k, v in C.items()}
        diffs = {
            "c1_10_00": c1[(1, 0)] - c1[(0, 0)],
            "c1_11_01": c1[(1, 1)] - c1[(0, 1)],
            "c1_01_00": c1[(0, 1)] - c1[(0, 0)],
            "c1_11_10": c1[(1, 1)] - c1[(1, 0)],
        }
        alpha = ((c1[(1, 0)] - c1[(0, 0)]) * (c2[(0, 1)] - c2[(1, 1)])
                 - (c1[(1, 1)] - c1[(0, 1)]) * (c2[(0, 0)] - c2[(1, 0)]))
        beta = ((c1[(1, 0)] - c1[(1, 1)]) * (c2[(0, 1)] - c2[(0, 0)])
                - (c1[(0, 0)] - c1[(0, 1)]) * (c2[(1, 1)] - c2[(1, 0)]))
        gamma = ((c1[(0, 0)] - c1[(0, 1)]) * (c2[(0, 0)] - c2[(1, 0)])
                 - (c1[(1, 0)] - c1[(0, 0)]) * (c2[(0, 1)] - c2[(0, 0)]))
    else:
        raise DomainError(f"form must be 'closed' or 'corners', got {form!r}")
    return MixtureSignConstants(om1, om2, alpha, beta, gamma, diffs)


# ---------------------------------------------------------------------------
# larger pools and bargaining


@dataclass(frozen=True)
class ConjectureReport:
    """Outcome of the boundary check for c.o.s. waiting-probability frontiers.

    ``off_boundary`` lists grid-frontier points farther than one grid
    cell from both edges k1 = N1 and k2 = N2.  ``certificates`` maps
    each of them to an edge configuration that dominates it under the
    exact mixture, when one exists; such a point is only on the grid
    frontier because the dominating configuration falls between grid
    nodes.  ``counterexamples`` are the off-boundary points without a
    certificate.
    """

    holds: bool
    frontier: list
    off_boundary: list
    certificates: dict
    counterexamples: list
    tolerance: tuple[float, float]

    def __str__(self):
        head = (f"{len(self.frontier)} frontier points, {len(self.off_boundary)} beyond one cell "
                f"of the boundary, {len(self.counterexamples)} without a dominating boundary point")
        lines = [head]
        lines += [f"  counterexample k=({p.k[0]!r}, {p.k[1]!r}) B=({p.metrics[0]!r}, {p.metrics[1]!r})"
                  for p in self.counterexamples]
        return "\n".join(lines)


def _edge_dominator(p1, p2, point: ParetoPoint, axis: int, tol: float = DOMINANCE_TOL):
    """An edge configuration (k_axis = N_axis) dominating ``point``, or None.

    Along an edge the mixture is linear inside each unit cell, so the
    set of configurations no worse than ``point`` in both costs is an
    interval per cell, found exactly.
    """
    n_edge = (p1.n_servers, p2.n_servers)[axis]
    n_free = (p2.n_servers, p1.n_servers)[axis]
    c = np.asarray(point.metrics)
    for j in range(n_free):
        ends = np.array([[j, n_edge], [j + 1, n_edge]], dtype=float)
        if axis == 1:
            ends = ends[:, ::-1]
        v0, v1 = mixed_grid(p1, p2, ends)
        lo, hi = 0.0, 1.0
        for i in range(2):
            slope = v1[i] - v0[i]
            if slope == 0.0:
                if v0[i] > c[i]:
                    lo, hi = 1.0, 0.0
            elif slope > 0:
                hi = min(hi, (c[i] - v0[i]) / slope)
            else:
                lo = max(lo, (c[i] - v0[i]) / slope)
        if lo <= hi:
            t = 0.5 * (lo + hi)
            k = (1 - t) * ends[0] + t * ends[1]
            v = mixed_grid(p1, p2, k[None, :])[0]
            eps = tol * max(1.0, float(np.max(np.abs(c))))
            if np.all(v <= c + eps) and np.any(v < c - eps):
                return (float(k[0]), float(k[1])), (float(v[0]), float(v[1]))
    return None


def conjecture_check(p1: ProviderParams, p2: ProviderParams, grid_step: float | None = None) -> ConjectureReport:
    """Check that the c.o.s. waiting-probability frontier sits on k1 = N1 or k2 = N2.

    Points within one grid cell (grid_step * N_i) of an edge count as on
    it.  Points farther out are kept as counterexamples unless an edge
    configuration dominates them (see :class:`ConjectureReport`).
    """
    p1, p2 = check_providers(p1, p2)
    step = default_grid_step(p1, p2) if grid_step is None else check_grid_step(grid_step)
    front = pareto_frontier(p1, p2, "cos", "wait", step)
    tol = (step * p1.n_servers * (1 + 1e-9), step * p2.n_servers * (1 + 1e-9))
    off = [p for p in front
           if p1.n_servers - p.k[0] > tol[0] and p2.n_servers - p.k[1] > tol[1]]
    certs, bad = {}, []
    for p in off:
        cert = _edge_dominator(p1, p2, p, 1) or _edge_dominator(p1, p2, p, 0)
        if cert is None:
            bad.append(p)
        else:
            certs[p.k] = cert
    return ConjectureReport(not bad, front, off, certs, bad, tol)


def _metric_at(p1, p2, policy, metric, k) -> tuple[float, float]:
    if policy == "coc":
        return mean_response_pair(p1, p2, (int(round(k[0])), int(round(k[1]))))
    corner = waiting_probabilities if metric == "wait" else _cos_delay_corner
    v = mixed_grid(p1, p2, np.asarray([k], dtype=float), corner_metric=corner)[0]
    return float(v[0]), float(v[1])


def ksbs(p1: ProviderParams, p2: ProviderParams, policy: str = "cos", metric: str = "wait",
         grid_step: float | None = None, tol: float = 1e-14) -> ParetoPoint:
    """Kalai-Smorodinsky point: gains proportional to the maximal achievable gains.

    The ideal costs are grid minima.  Frontier points are ordered by
    B1; a sign change of g = (b1 - B1) - R (b2 - B2) between neighbours
    is refined by bisection on the configuration segment joining them.
    ``extra`` carries the residual of the ratio equation, the ideal
    point and the number of roots (more than one is logged).
    """
    grid = pareto_grid(p1, p2, policy, metric, grid_step)
    front = [p for p in grid if p.on_frontier]
    if not front:
        raise NoFrontierError("no individually rational, undominated configuration on the grid")
    V = np.array([p.metrics for p in grid])
    base = np.asarray(grid[0].metrics)
    ideal = V.min(axis=0)
    R = (base[0] - ideal[0]) / (base[1] - ideal[1])

    def g(v):
        return (base[0] - v[0]) - R * (base[1] - v[1])

    front.sort(key=lambda p: (p.metrics[0], -p.metrics[1]))
    vals = [g(p.metrics) for p in front]
    roots = []
    for i, (p, gv) in enumerate(zip(front, vals)):
        if gv == 0.0:
            roots.append((p.k, p.metrics))
        elif i + 1 < len(front) and gv * vals[i + 1] < 0:
            a, b = np.asarray(p.k), np.asarray(front[i + 1].k)
            lo, hi, glo = 0.0, 1.0, gv
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                gm = g(_metric_at(p1, p2, policy, metric, (1 - mid) * a + mid * b))
                if gm == 0.0:
                    lo = hi = mid
                    break
                if (gm > 0) == (glo > 0):
                    lo, glo = mid, gm
                else:
                    hi = mid
            t = 0.5 * (lo + hi)
            k = tuple(float(v) for v in (1 - t) * a + t * b)
            roots.append((k, _metric_at(p1, p2, policy, metric, k)))
    if not roots:
        # no crossing: the frontier point closest to the ratio line
        best = int(np.argmin(np.abs(vals)))
        roots.append((front[best].k, front[best].metrics))
        log.warning("KSBS ratio equation has no root on the frontier; returning the closest point")
    if len(roots) > 1:
        log.warning("KSBS is not unique on this grid: %d roots", len(roots))
    k, v = roots[0]
    den = base[1] - v[1]
    residual = abs((base[0] - v[0]) / den - R) if den != 0 else math.inf
    extra = {"residual": residual, "ideal": tuple(ideal), "ratio": R, "n_roots": len(roots),
             "roots": [r[0] for r in roots]}
    return ParetoPoint(SharingConfig(*k), (float(v[0]), float(v[1])), True, True, True, extra)


def frontier_to_csv(points, ksbs_point: ParetoPoint | None = None, fh=None) -> str:
    """Write points as CSV (k1, k2, B1, B2, undominated, is_ksbs); returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k1", "k2", "B1", "B2", "undominated", "is_ksbs"])
    rows = list(points)
    if ksbs_point is not None:
        rows.append(ksbs_point)
    for p in rows:
        w.writerow([repr(p.k[0]), repr(p.k[1]), repr(p.metrics[0]), repr(p.metrics[1]),
                    int(p.undominated), int(p.is_ksbs)])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text
