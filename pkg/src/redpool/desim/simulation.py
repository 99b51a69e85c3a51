"""Scenario, result and estimator plumbing around the compiled event loops."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .._validation import check_config, check_providers
from ..cos import _corners, solve_assignment_rates
from ..exceptions import ConfigError, InstabilityError, PoolingError
from ..params import MetricPair, ProviderParams, SharingConfig
from . import _kernels

MASK64 = (1 << 64) - 1
CSV_COLUMNS = ("policy", "k1", "k2", "metric", "estimate", "stderr", "ci_lo", "ci_hi", "jobs", "seed")


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def child_seed(seed: int, index: int) -> int:
    """Seed of replication ``index``; the kernels take 32-bit seeds."""
    return splitmix64((seed & MASK64) ^ splitmix64(index)) >> 32


@dataclass(frozen=True)
class SimScenario:
    """What to simulate.  ``horizon`` counts all jobs, the first ``warmup`` are discarded.

    ``warmup=None`` means 10% of the horizon.  ``assignment`` picks the
    idle server for a c.o.s. arrival: ``"arc"`` follows the product-form
    assignment rates, ``"uniform"`` draws an idle eligible server.
    """

    p1: ProviderParams
    p2: ProviderParams
    cfg: SharingConfig
    policy: str = "cos"
    horizon: int = 1_100_000
    warmup: int | None = None
    seed: int = 0
    replications: int = 1
    assignment: str = "arc"
    batches: int = 30

    def __post_init__(self):
        if not isinstance(self.cfg, SharingConfig):
            object.__setattr__(self, "cfg", SharingConfig(*self.cfg))
        if self.warmup is None:
            object.__setattr__(self, "warmup", self.horizon // 10)
        if self.policy not in ("coc", "cos"):
            raise ConfigError(f"policy must be 'coc' or 'cos', got {self.policy!r}")
        if self.assignment not in ("arc", "uniform"):
            raise ConfigError(f"assignment must be 'arc' or 'uniform', got {self.assignment!r}")
        if not (0 <= self.warmup < self.horizon):
            raise ConfigError(f"need 0 <= warmup < horizon, got warmup={self.warmup}, horizon={self.horizon}")
        if self.replications < 1 or self.batches < 2:
            raise ConfigError("replications must be >= 1 and batches >= 2")

    @property
    def jobs(self) -> int:
        return self.horizon - self.warmup


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    ci_lo: float
    ci_hi: float
    n: int

    @classmethod
    def from_samples(cls, means: np.ndarray, n: int, level: float = 0.95) -> Estimate:
        means = np.asarray(means, dtype=float)
        m = float(means.mean())
        se = float(means.std(ddof=1) / math.sqrt(len(means)))
        half = float(stats.t.ppf(0.5 + level / 2, len(means) - 1)) * se
        return cls(m, se, m - half, m + half, n)

    def within(self, value: float, k: float = 3.0) -> bool:
        return abs(self.mean - value) <= k * self.stderr


@dataclass(frozen=True)
class SimResult:
    scenario: SimScenario
    C: tuple[Estimate, Estimate]
    D: tuple[Estimate, Estimate]
    violations: int
    extra: dict = field(default_factory=dict, compare=False)

    def metric_pair(self) -> MetricPair:
        return MetricPair(
            C=(self.C[0].mean, self.C[1].mean), D=(self.D[0].mean, self.D[1].mean), source="simulation",
            C_stderr=(self.C[0].stderr, self.C[1].stderr), D_stderr=(self.D[0].stderr, self.D[1].stderr),
        )

    def rows(self) -> list[dict]:
        scn = self.scenario
        k1, k2 = self.extra.get("k", scn.cfg.as_tuple())
        out = []
        for name, ests in (("C", self.C), ("D", self.D)):
            for i, e in enumerate(ests, start=1):
                out.append({"policy": scn.policy, "k1": k1, "k2": k2, "metric": f"{name}{i}",
                            "estimate": e.mean, "stderr": e.stderr, "ci_lo": e.ci_lo, "ci_hi": e.ci_hi,
                            "jobs": e.n, "seed": scn.seed})
        return out

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        if header:
            w.writeheader()
        for row in self.rows():
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()


def _split_table(p1, p2, corners) -> np.ndarray:
    n = p1.n_servers + p2.n_servers
    table = np.zeros((len(corners), n + 1, n + 1, n + 1, 2, 3))
    for c, k in enumerate(corners):
        tb = solve_assignment_rates(p1, p2, k).check()
        for x in tb.classes.states():
            for prov in (1, 2):
                table[(c, *x, prov - 1)] = tb.split(x, prov)
    return table


def _check_scenario(scn: SimScenario, integral: bool = True):
    p1, p2 = check_providers(scn.p1, scn.p2)
    check_config(scn.cfg, p1.n_servers, p2.n_servers, integral=integral)
    if p1.rho + p2.rho >= p1.n_servers + p2.n_servers:
        raise InstabilityError("total load must be below the total number of servers")
    if scn.policy == "cos" and scn.assignment == "arc" and p1.nu != p2.nu:
        raise ConfigError("assignment='arc' needs nu1 == nu2; use assignment='uniform'")
    return p1, p2


def _run_once(scn: SimScenario, seed: int, corners, durations):
    p1, p2 = scn.p1, scn.p2
    lam = np.array([p1.lam, p2.lam])
    nu = np.array([p1.nu, p2.nu])
    qcap = 1 << 16
    while True:
        if scn.policy == "cos":
            split = _split_table(p1, p2, corners) if scn.assignment == "arc" else np.zeros((1, 1, 1, 1, 2, 3))
            ck = np.asarray(corners, dtype=np.int64).reshape(-1, 2)
            out = _kernels.simulate_cos_kernel(lam, nu, p1.n_servers, p2.n_servers, ck,
                                               np.asarray(durations, dtype=float), split,
                                               scn.assignment == "uniform", scn.horizon, qcap, seed)
        else:
            k1, k2 = corners[0]
            out = _kernels.simulate_coc_kernel(lam, nu, p1.n_servers, p2.n_servers, int(k1), int(k2),
                                               scn.horizon, qcap, seed)
        prov, waited, resp, violations, status = out
        if status == _kernels.STATUS_OK:
            return prov, waited, resp, violations
        if qcap >= 1 << 28:
            raise PoolingError("waiting line overflowed the simulator buffer")
        qcap <<= 2


def _summarise(scn: SimScenario, runs) -> tuple[tuple[Estimate, Estimate], tuple[Estimate, Estimate]]:
    C, D = [], []
    for p in (0, 1):
        waits, resps, counts = [], [], []
        for prov, waited, resp, _ in runs:
            sel = prov[scn.warmup:] == p
            w = waited[scn.warmup:][sel].astype(float)
            r = resp[scn.warmup:][sel]
            counts.append(len(w))
            if len(runs) == 1:
                if len(w) < scn.batches:
                    raise ConfigError(f"provider {p + 1} has only {len(w)} measured jobs")
                chunks = np.array_split(np.arange(len(w)), scn.batches)
                waits = [w[c].mean() for c in chunks]
                resps = [r[c].mean() for c in chunks]
            else:
                if len(w) == 0:
                    raise ConfigError(f"provider {p + 1} has no measured jobs")
                waits.append(w.mean())
                resps.append(r.mean())
        n = int(sum(counts))
        C.append(Estimate.from_samples(np.array(waits), n))
        D.append(Estimate.from_samples(np.array(resps), n))
    return (C[0], C[1]), (D[0], D[1])


def _simulate(scn: SimScenario, corners, durations, n_jobs: int = 1, extra=None) -> SimResult:
    seeds = [child_seed(scn.seed, r) for r in range(scn.replications)]
    if n_jobs > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            runs = list(ex.map(lambda s: _run_once(scn, s, corners, durations), seeds))
    else:
        runs = [_run_once(scn, s, corners, durations) for s in seeds]
    violations = int(sum(r[3] for r in runs))
    if violations:
        kind = "work-conservation" if scn.policy == "cos" else "response-time"
        raise PoolingError(f"{violations} {kind} violations during simulation")
    C, D = _summarise(scn, runs)
    return SimResult(scn, C, D, violations, dict(extra or {}))


def simulate(scn: SimScenario, n_jobs: int = 1) -> SimResult:
    """Simulate an integer configuration; deterministic given the scenario.

    With one replication the confidence intervals come from batch means
    over post-warmup jobs of each provider; with several, from the
    spread of the per-replication means (seeds derived by splitmix64).
    """
    _check_scenario(scn)
    k = (int(scn.cfg.k1), int(scn.cfg.k2))
    return _simulate(scn, [k], [math.inf], n_jobs)


def simulate_mixed(scn: SimScenario, k1: float, k2: float, switch_epochs: int = 200,
                   n_jobs: int = 1) -> SimResult:
    """Time-share between the integer corners around a real (k1, k2) under c.o.s.

    The run is cut into ``switch_epochs`` cycles of equal expected
    length; in each cycle every corner is held for its long-run
    fraction of time.  Integral k reduces to :func:`simulate`.
    """
    if scn.policy != "cos":
        raise ConfigError("time-sharing mixtures are simulated for cancel-on-start only")
    p1, p2 = check_providers(scn.p1, scn.p2)
    check_config((k1, k2), p1.n_servers, p2.n_servers)
    if switch_epochs < 1:
        raise ConfigError("switch_epochs must be positive")
    a = _corners(float(k1), p1.n_servers)
    b = _corners(float(k2), p2.n_servers)
    if a[2] == 0.0 and b[2] == 0.0:
        return simulate(replace(scn, cfg=SharingConfig(a[0], b[0])), n_jobs)
    plan = [((a[0], b[0]), (1 - a[2]) * (1 - b[2])), ((a[1], b[0]), a[2] * (1 - b[2])),
            ((a[1], b[1]), a[2] * b[2]), ((a[0], b[1]), (1 - a[2]) * b[2])]
    plan = [(k, w) for k, w in plan if w > 0]
    scn = replace(scn, cfg=SharingConfig(*plan[0][0]))
    _check_scenario(scn)
    cycle = scn.horizon / (p1.lam + p2.lam) / switch_epochs
    corners = [k for k, _ in plan]
    durations = [w * cycle for _, w in plan]
    return _simulate(scn, corners, durations, n_jobs, extra={"k": (float(k1), float(k2)), "plan": plan})


def results_to_csv(results) -> str:
    parts = [r.to_csv(header=(i == 0)) for i, r in enumerate(results)]
    return "".join(parts)
