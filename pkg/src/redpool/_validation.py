"""Input validation helpers shared by the function and estimator APIs."""
from __future__ import annotations

import math

import numpy as np

from .exceptions import DomainError, InstabilityError
from .params import ProviderParams, SharingConfig, as_config


def check_providers(p1, p2) -> tuple[ProviderParams, ProviderParams]:
    for p in (p1, p2):
        if not isinstance(p, ProviderParams):
            raise DomainError(f"expected ProviderParams, got {type(p).__name__}")
        p.check_stable()
    return p1, p2


def check_config(k, n1: float, n2: float, integral: bool = False) -> SharingConfig:
    return as_config(k).check_within(n1, n2, integral=integral)


def check_equal_nu(p1: ProviderParams, p2: ProviderParams) -> float:
    # cancel-on-start analysis assumes a common job-size distribution
    if not math.isclose(p1.nu, p2.nu, rel_tol=0.0, abs_tol=0.0):
        raise DomainError(f"cancel-on-start requires nu1 == nu2, got {p1.nu} and {p2.nu}")
    return p1.nu


def check_grid_step(step: float) -> float:
    if not (0.0 < step <= 1.0):
        raise DomainError(f"grid_step must lie in (0, 1], got {step!r}")
    return float(step)


def check_configs_array(K, n1: float, n2: float) -> np.ndarray:
    """Validate an (n_samples, 2) array of sharing configurations."""
    K = np.asarray(K, dtype=float)
    if K.ndim == 1 and K.shape[0] == 2:
        K = K[None, :]
    if K.ndim != 2 or K.shape[1] != 2:
        raise DomainError(f"configurations must have shape (n, 2), got {K.shape}")
    if not np.all(np.isfinite(K)):
        raise DomainError("configurations must be finite")
    if np.any(K < 0) or np.any(K[:, 0] > n1) or np.any(K[:, 1] > n2):
        raise DomainError(f"configurations must lie in [0, {n1}] x [0, {n2}]")
    return K


def require(cond: bool, msg: str, exc=InstabilityError):
    if not cond:
        raise exc(msg)
