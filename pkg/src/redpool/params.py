from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

from .exceptions import DomainError, InstabilityError

Source = Literal["analytic", "ctmc", "simulation"]


@dataclass(frozen=True)
class ProviderParams:
    """Poisson arrival rate, inverse mean job size and server count of one provider."""

    lam: float
    nu: float = 1.0
    n_servers: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise DomainError(f"arrival rate must be positive, got {self.lam!r}")
        if not (math.isfinite(self.nu) and self.nu > 0):
            raise DomainError(f"nu must be positive, got {self.nu!r}")
        if isinstance(self.n_servers, bool) or int(self.n_servers) != self.n_servers or self.n_servers < 1:
            raise DomainError(f"n_servers must be a positive integer, got {self.n_servers!r}")
        object.__setattr__(self, "n_servers", int(self.n_servers))

    @property
    def rho(self) -> float:
        return self.lam / self.nu

    @property
    def stable(self) -> bool:
        return self.rho < self.n_servers

    def check_stable(self) -> ProviderParams:
        if not self.stable:
            raise InstabilityError(
                f"load {self.rho:.6g} is not below {self.n_servers} servers"
            )
        return self


@dataclass(frozen=True)
class SharingConfig:
    """Servers (k1, k2) each provider places in the common pool.

    Values may be real only where a time-sharing or continuous-capacity
    interpretation exists; ``integral`` tells which case applies.
    """

    k1: float
    k2: float

    def __post_init__(self):
        for name in ("k1", "k2"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"{name} must be a non-negative number, got {v!r}")

    @property
    def integral(self) -> bool:
        return float(self.k1).is_integer() and float(self.k2).is_integer()

    def as_tuple(self) -> tuple[float, float]:
        return (self.k1, self.k2)

    def swapped(self) -> SharingConfig:
        return SharingConfig(self.k2, self.k1)

    def check_within(self, n1: float, n2: float, integral: bool = False) -> SharingConfig:
        if self.k1 > n1 or self.k2 > n2:
            raise DomainError(f"configuration {self.as_tuple()} exceeds server counts ({n1}, {n2})")
        if integral and not self.integral:
            raise DomainError(f"configuration {self.as_tuple()} must be integral here")
        return self


@dataclass(frozen=True)
class MetricPair:
    """Per-provider waiting probability C and/or mean response time D."""

    C: tuple[float, float] | None = None
    D: tuple[float, float] | None = None
    source: Source = "analytic"
    C_stderr: tuple[float, float] | None = None
    D_stderr: tuple[float, float] | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def get(self, metric: str) -> tuple[float, float]:
        value = self.C if metric == "wait" else self.D
        if value is None:
            raise DomainError(f"metric {metric!r} not available from {self.source} result")
        return value


def as_config(k) -> SharingConfig:
    if isinstance(k, SharingConfig):
        return k
    k1, k2 = k
    return SharingConfig(float(k1), float(k2))
