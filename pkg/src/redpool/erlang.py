"""Standalone M/M/N benchmarks: Erlang-C waiting probability and delay."""
from __future__ import annotations

import math

from .exceptions import DomainError, InstabilityError
from .params import ProviderParams


def _check_servers(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"server count must be a positive integer, got {n!r}")
    return int(n)


def erlang_b(rho: float, n: int) -> float:
    """Erlang-B blocking probability via B(k) = rho B(k-1) / (k + rho B(k-1))."""
    n = _check_servers(n)
    if rho < 0:
        raise DomainError(f"load must be non-negative, got {rho!r}")
    b = 1.0
    for k in range(1, n + 1):
        b = rho * b / (k + rho * b)
    return b


def erlang_c(rho: float, n: int) -> float:
    """Probability that an arrival to a stable M/M/n queue with load ``rho`` waits.

    Built from the Erlang-B recurrence so that large ``n`` does not
    overflow, using C = n B / (n - rho (1 - B)).
    """
    n = _check_servers(n)
    if not math.isfinite(rho) or rho < 0:
        raise DomainError(f"load must be non-negative, got {rho!r}")
    if rho >= n:
        raise InstabilityError(f"load {rho!r} is not below {n} servers")
    if rho == 0:
        return 0.0
    if n == 1:
        return float(rho)
    b = erlang_b(rho, n)
    return n * b / (n - rho * (1.0 - b))


def standalone_delay(p: ProviderParams) -> float:
    """Mean response time 1/nu + C / (nu (N - rho)) of the provider alone."""
    c = erlang_c(p.rho, p.n_servers)
    return 1.0 / p.nu + c / (p.nu * (p.n_servers - p.rho))


def invert_erlang_c(target: float, n: int, tol: float = 1e-10) -> float:
    """Load at which :func:`erlang_c` equals ``target`` on ``n`` servers.

    Bisection on [0, n); the result satisfies
    ``abs(erlang_c(rho, n) - target) < tol``.
    """
    n = _check_servers(n)
    if not (0.0 < target < 1.0):
        raise DomainError(f"target probability must lie in (0, 1), got {target!r}")
    if n == 1:
        return float(target)
    lo, hi = 0.0, float(n)
    # bisect until the bracket stops shrinking; tol is then met with room to spare
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if erlang_c(mid, n) < target:
            lo = mid
        else:
            hi = mid
    rho = lo if hi >= n else min((lo, hi), key=lambda r: abs(erlang_c(r, n) - target))
    if abs(erlang_c(rho, n) - target) >= tol:
        raise DomainError(f"could not reach tolerance {tol} for target {target} on {n} servers")
    return rho


def provider_from_wait(target: float, n: int, nu: float = 1.0) -> ProviderParams:
    """Provider whose standalone Erlang-C waiting probability equals ``target``."""
    rho = invert_erlang_c(target, n)
    return ProviderParams(lam=rho * nu, nu=nu, n_servers=n)
