"""Estimator-style wrappers: configure with parameters, ``fit`` resolves the
providers, ``predict`` maps sharing configurations to per-provider costs.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_configs_array
from .coc import mean_response_pair
from .cos import mixed_grid, waiting_probabilities
from .erlang import invert_erlang_c
from .exceptions import DomainError
from .pareto import (
    _cos_delay_corner,
    dominated_mask,
    evaluate_grid,
    ksbs,
    pareto_frontier,
    rational_mask,
    unit_frontier_closed_form,
)
from .params import ProviderParams


def _pair(value, name):
    if value is None:
        return None
    arr = np.broadcast_to(np.asarray(value, dtype=float), (2,))
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


class _ProviderMixin:
    """Resolve two ProviderParams from either arrival rates or standalone waits."""

    def _resolve_providers(self):
        n = np.broadcast_to(np.asarray(self.n_servers), (2,))
        if np.any(n < 1) or np.any(n != np.round(n)):
            raise DomainError(f"n_servers must be positive integers, got {self.n_servers!r}")
        n = [int(v) for v in n]
        nu = _pair(self.nu, "nu")
        lam = _pair(self.lam, "lam")
        wait = _pair(self.standalone_wait, "standalone_wait")
        if (lam is None) == (wait is None):
            raise DomainError("give exactly one of lam and standalone_wait")
        if lam is None:
            lam = [invert_erlang_c(float(w), n[i]) * nu[i] for i, w in enumerate(wait)]
        self.providers_ = (ProviderParams(float(lam[0]), float(nu[0]), n[0]).check_stable(),
                           ProviderParams(float(lam[1]), float(nu[1]), n[1]).check_stable())
        return self.providers_

    def _check_fitted(self):
        if not hasattr(self, "providers_"):
            raise DomainError(f"{type(self).__name__} is not fitted yet; call fit() first")


class CocPoolingModel(_ProviderMixin, BaseEstimator):
    """Mean response times (D1, D2) under cancel-on-complete pooling."""

    def __init__(self, n_servers=(1, 1), lam=None, standalone_wait=None, nu=1.0):
        self.n_servers = n_servers
        self.lam = lam
        self.standalone_wait = standalone_wait
        self.nu = nu

    def fit(self, X=None, y=None):
        p1, p2 = self._resolve_providers()
        self.baseline_ = np.asarray(mean_response_pair(p1, p2, (0, 0)))
        return self

    def predict(self, X) -> np.ndarray:
        """Rows of X are integer configurations (k1, k2); returns (n, 2) mean response times."""
        self._check_fitted()
        p1, p2 = self.providers_
        K = check_configs_array(X, p1.n_servers, p2.n_servers)
        if np.any(K != np.round(K)):
            raise DomainError("cancel-on-complete pooling needs integer configurations")
        return np.array([mean_response_pair(p1, p2, (int(a), int(b))) for a, b in K])


class CosPoolingModel(_ProviderMixin, BaseEstimator):
    """Waiting probabilities or mean response times under cancel-on-start pooling.

    Real configurations are time-sharing mixtures of their integer
    corners.  ``metric="delay"`` solves the typed Markov chain at each
    corner, which is slow for heavy loads.
    """

    def __init__(self, n_servers=(1, 1), lam=None, standalone_wait=None, nu=1.0, metric="wait"):
        self.n_servers = n_servers
        self.lam = lam
        self.standalone_wait = standalone_wait
        self.nu = nu
        self.metric = metric

    def fit(self, X=None, y=None):
        if self.metric not in ("wait", "delay"):
            raise DomainError(f"metric must be 'wait' or 'delay', got {self.metric!r}")
        if _pair(self.nu, "nu")[0] != _pair(self.nu, "nu")[1]:
            raise DomainError("cancel-on-start pooling needs nu1 == nu2")
        p1, p2 = self._resolve_providers()
        self._corner = waiting_probabilities if self.metric == "wait" else _cos_delay_corner
        self.baseline_ = np.asarray(self._corner(p1, p2, (0, 0)))
        return self

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        p1, p2 = self.providers_
        K = check_configs_array(X, p1.n_servers, p2.n_servers)
        return mixed_grid(p1, p2, K, corner_metric=self._corner)


class ParetoFrontierSearch(_ProviderMixin, BaseEstimator):
    """Grid Pareto frontier and Kalai-Smorodinsky point.

    After ``fit``: ``frontier_`` (list of ParetoPoint), ``ksbs_`` and,
    for one server per provider under c.o.s. waiting, ``structure_``.
    ``predict`` tells whether configurations are individually rational
    and undominated against the fitted grid.
    """

    def __init__(self, n_servers=(1, 1), lam=None, standalone_wait=None, nu=1.0,
                 policy="cos", metric="wait", grid_step=None):
        self.n_servers = n_servers
        self.lam = lam
        self.standalone_wait = standalone_wait
        self.nu = nu
        self.policy = policy
        self.metric = metric
        self.grid_step = grid_step

    def fit(self, X=None, y=None):
        p1, p2 = self._resolve_providers()
        self.grid_, self.grid_values_ = evaluate_grid(p1, p2, self.policy, self.metric, self.grid_step)
        self.frontier_ = pareto_frontier(p1, p2, self.policy, self.metric, self.grid_step)
        self.ksbs_ = ksbs(p1, p2, self.policy, self.metric, self.grid_step) if self.frontier_ else None
        self.structure_ = None
        if self.policy == "cos" and self.metric == "wait" and p1.n_servers == 1 and p2.n_servers == 1:
            self.structure_ = unit_frontier_closed_form(p1, p2)
        return self

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        p1, p2 = self.providers_
        K = check_configs_array(X, p1.n_servers, p2.n_servers)
        if self.policy == "coc":
            V = CocPoolingModel(lam=[p1.lam, p2.lam], nu=[p1.nu, p2.nu],
                                n_servers=[p1.n_servers, p2.n_servers]).fit().predict(K)
        else:
            corner = waiting_probabilities if self.metric == "wait" else _cos_delay_corner
            V = mixed_grid(p1, p2, K, corner_metric=corner)
        both = np.vstack([self.grid_values_, V])
        undominated = ~dominated_mask(both)[len(self.grid_values_):]
        return rational_mask(V, self.grid_values_[0]) & undominated
