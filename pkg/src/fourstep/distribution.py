"""Doubly-constrained gravity trip distribution.

Solves T_ij = A_i B_j O_i D_j f(c_ij) by alternating (Furness) balancing,
with exponential or power deterrence, plus entropy diagnostics and
deterrence-parameter calibration against a target mean trip cost.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNREACHABLE = np.inf
DEFAULT_COST_FLOOR = 60.0  # seconds; also the intrazonal floor


class DistributionError(ValueError):
    pass


@dataclass
class Deterrence:
    """f(c) for the gravity model: exponential exp(-beta c) or power c^-gamma."""

    form: str  # "exponential" | "power"
    parameter: float
    cost_floor: float = DEFAULT_COST_FLOOR

    def __post_init__(self):
        if self.form not in ("exponential", "power"):
            raise DistributionError(f"unknown deterrence form {self.form!r}")
        if self.form == "exponential" and self.parameter < 0:
            raise DistributionError("exponential beta must be >= 0")
        if self.form == "power" and self.parameter <= 0:
            raise DistributionError("power gamma must be > 0")

    def __call__(self, cost: np.ndarray) -> np.ndarray:
        """Elementwise f(c); unreachable (infinite) costs map to 0."""
        c = np.asarray(cost, dtype=float)
        reachable = np.isfinite(c)
        out = np.zeros_like(c)
        if self.form == "exponential":
            out[reachable] = np.exp(-self.parameter * c[reachable])
        else:
            floored = np.maximum(c[reachable], self.cost_floor)
            out[reachable] = floored ** (-self.parameter)
        return out

    @classmethod
    def parse(cls, text: str) -> "Deterrence":
        """Parse "exp:1.0" or "pow:2.0"."""
        form, _, value = text.partition(":")
        forms = {"exp": "exponential", "pow": "power"}
        if form not in forms or not value:
            raise DistributionError(f"cannot parse deterrence spec {text!r}")
        return cls(form=forms[form], parameter=float(value))


@dataclass
class ODMatrix:
    trips: np.ndarray  # (n_zones, n_zones)
    a_factors: np.ndarray
    b_factors: np.ndarray
    converged: bool
    iterations: int

    def row_sums(self) -> np.ndarray:
        return self.trips.sum(axis=1)

    def col_sums(self) -> np.ndarray:
        return self.trips.sum(axis=0)


def balance_attractions(O, D):
    """Rescale D so its total matches the productions total."""
    O = np.asarray(O, dtype=float)
    D = np.asarray(D, dtype=float)
    if np.any(O < 0) or np.any(D < 0):
        raise DistributionError("productions and attractions must be non-negative")
    total_o = O.sum()
    total_d = D.sum()
    if total_o == 0:
        return O, np.zeros_like(D)
    if total_d == 0:
        raise DistributionError("positive productions but zero total attractions")
    return O, D * (total_o / total_d)


def furness_balance(
    O,
    D,
    cost: np.ndarray,
    det: Deterrence,
    tol: float = 1e-8,
    max_iter: int = 5000,
) -> ODMatrix:
    """Alternating-scaling solve of the doubly-constrained gravity model.

    Balancing factors are normalized so that sum(A_i O_i) = sum(O), which
    pins the scalar freedom between A and B without changing T.
    """
    O = np.asarray(O, dtype=float)
    D = np.asarray(D, dtype=float)
    cost = np.asarray(cost, dtype=float)
    n = len(O)
    if cost.shape != (n, n) or len(D) != n:
        raise DistributionError("cost matrix dimensions do not match zones")
    total_o, total_d = O.sum(), D.sum()
    if abs(total_o - total_d) > 1e-9 * max(total_o, 1.0):
        raise DistributionError(
            "productions and attractions are unbalanced; call balance_attractions first"
        )

    F = det(cost)
    feasible = F * D[None, :]
    bad = (O > 0) & (feasible.sum(axis=1) == 0)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise DistributionError(
            f"zone index {i} has positive production but no reachable "
            f"positive-attraction destination"
        )

    A = np.ones(n)
    B = np.ones(n)
    converged = False
    it = 0
    K = F * np.outer(O, D)  # fixed kernel; T = diag(A) K diag(B)
    for it in range(1, max_iter + 1):
        rows = K @ B
        A = np.divide(O, rows, out=np.zeros(n), where=rows > 0)
        cols = K.T @ A
        B = np.divide(D, cols, out=np.zeros(n), where=cols > 0)
        T = (A[:, None] * K) * B[None, :]
        dev = max(
            float(np.abs(T.sum(axis=1) - O).max()),
            float(np.abs(T.sum(axis=0) - D).max()),
        )
        if dev <= tol:
            converged = True
            break

    denom = float(A @ O)
    if denom > 0:
        scale = total_o / denom
        A = A * scale
        B = B / scale
    T = (A[:, None] * K) * B[None, :]
    return ODMatrix(trips=T, a_factors=A, b_factors=B, converged=converged, iterations=it)


def entropy_of(trips: np.ndarray) -> float:
    """S = -sum T_ij ln T_ij with 0 ln 0 = 0."""
    T = np.asarray(trips, dtype=float)
    if np.any(T < 0):
        raise DistributionError("negative cell in trip matrix")
    pos = T > 0
    return float(-(T[pos] * np.log(T[pos])).sum())


def mean_trip_cost(trips: np.ndarray, cost: np.ndarray) -> float:
    """Trip-weighted mean cost over reachable pairs."""
    T = np.asarray(trips, dtype=float)
    c = np.asarray(cost, dtype=float)
    mask = (T > 0) & np.isfinite(c)
    total = T[mask].sum()
    if total == 0:
        raise DistributionError("empty trip matrix has no mean cost")
    return float((T[mask] * c[mask]).sum() / total)


def calibrate_deterrence(
    O,
    D,
    cost: np.ndarray,
    form: str,
    target_mean_cost: float,
    mean_tol: float = 1e-6,
    balance_tol: float = 1e-10,
    cost_floor: float = DEFAULT_COST_FLOOR,
) -> Deterrence:
    """Find the deterrence parameter whose converged gravity matrix has the
    target trip-weighted mean cost, by bisection (mean cost is monotone
    non-increasing in the parameter)."""
    O = np.asarray(O, dtype=float)
    D = np.asarray(D, dtype=float)

    lo_param = 0.0 if form == "exponential" else 1e-9

    def mean_at(p):
        det = Deterrence(form=form, parameter=max(p, lo_param), cost_floor=cost_floor)
        od = furness_balance(O, D, cost, det, tol=balance_tol)
        return mean_trip_cost(od.trips, cost)

    mean_lo = mean_at(lo_param)
    if abs(mean_lo - target_mean_cost) <= mean_tol:
        return Deterrence(form=form, parameter=lo_param, cost_floor=cost_floor)
    if target_mean_cost > mean_lo:
        raise DistributionError(
            f"target mean cost {target_mean_cost} above achievable maximum {mean_lo}"
        )

    hi = 1.0
    for _ in range(80):
        if mean_at(hi) <= target_mean_cost:
            break
        hi *= 2.0
    else:
        raise DistributionError(
            f"target mean cost {target_mean_cost} below achievable minimum"
        )

    lo = lo_param
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        m = mean_at(mid)
        if abs(m - target_mean_cost) <= mean_tol:
            return Deterrence(form=form, parameter=mid, cost_floor=cost_floor)
        if m > target_mean_cost:
            lo = mid
        else:
            hi = mid
    raise DistributionError("deterrence calibration did not converge")
