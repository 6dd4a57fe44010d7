"""Fractional delay/advance FIR design for the state feedback loop.

Two designs: closed-form Lagrange interpolation (extrapolation when the
delay adjustment is negative) and a minimax design that minimises the
worst-case complex frequency-response error over a band, subject to
unity gain at DC. Both always satisfy sum(taps) == 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class FilterDesignError(RuntimeError):
    pass


@dataclass(frozen=True)
class DelaySpec:
    """Target fractional delay for a train-rate to inference-rate change.

    delta = inference_rate / train_rate - 1, derived from the exact
    rational ratio (never from rounded float rates).
    """

    train_rate: float
    inference_rate: float
    ratio: Fraction
    delta: float

    @property
    def undersampling(self) -> bool:
        return self.ratio < 1


def delta_for_ratio(p: int, q: int, train_rate: float = 44100.0) -> DelaySpec:
    """Delay adjustment for an inference/train rate ratio of p/q."""
    if p <= 0 or q <= 0:
        raise ValueError(f"ratio parts must be positive, got {p}/{q}")
    ratio = Fraction(p, q)
    return DelaySpec(
        train_rate=train_rate,
        inference_rate=train_rate * p / q,
        ratio=ratio,
        delta=float(ratio - 1),
    )


@dataclass(frozen=True)
class FirCoefficients:
    """Designed taps l_0..l_K plus design metadata."""

    taps: np.ndarray
    method: str                 # lagrange | minimax | identity
    spec: DelaySpec | None = None
    objective: float | None = None   # realized in-band max error (minimax)

    @property
    def order(self) -> int:
        return self.taps.size - 1

    @property
    def delta(self) -> float:
        return self.spec.delta if self.spec is not None else 0.0

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        object.__setattr__(self, "taps", taps)
        if taps.ndim != 1 or taps.size < 1:
            raise FilterDesignError("taps must be a nonempty 1-D array")
        if not np.all(np.isfinite(taps)):
            raise FilterDesignError("non-finite tap values")


def identity_filter(spec: DelaySpec | None = None) -> FirCoefficients:
    """Single-tap [1] filter: the naive no-interpolation baseline."""
    return FirCoefficients(np.array([1.0]), "identity", spec)


def lagrange_coeffs(delta, order: int, spec: DelaySpec | None = None) -> FirCoefficients:
    """Lagrange interpolation taps l_k = prod_{j != k} (delta - j)/(k - j).

    Negative delta gives an extrapolation (signal advance). Integer delta
    m in [0, order] collapses to a unit impulse at tap m, exactly.
    """
    if isinstance(delta, DelaySpec):
        spec, delta = delta, delta.delta
    if order == 0:
        if delta != 0:
            raise FilterDesignError("order 0 cannot represent a nonzero delay")
        return FirCoefficients(np.array([1.0]), "lagrange", spec)
    if order < 0:
        raise FilterDesignError("order must be >= 0")
    if not np.isfinite(delta):
        raise FilterDesignError("delta must be finite")
    k = np.arange(order + 1)
    taps = np.empty(order + 1)
    for ki in k:
        j = k[k != ki]
        taps[ki] = np.prod((delta - j) / (ki - j))
    return FirCoefficients(taps, "lagrange", spec)


def minimax_coeffs(delta, order: int, band_fraction: float = 0.25,
                   grid_size: int = 512, spec: DelaySpec | None = None,
                   tolerance: float = 1e-9) -> FirCoefficients:
    """Minimax taps: minimise the in-band worst-case complex error.

    Solves min_l max_w |sum_k l_k e^{-jwk} - e^{-jw*delta}| over a uniform
    grid on [0, 2*pi*band_fraction], subject to sum(l) = 1, as an
    epigraph second-order cone program.
    """
    import cvxpy as cp

    if isinstance(delta, DelaySpec):
        spec, delta = delta, delta.delta
    if order < 1:
        raise FilterDesignError("minimax design needs order >= 1")
    if not 0 < band_fraction <= 0.5:
        raise FilterDesignError("band_fraction must be in (0, 0.5]")

    omega = np.linspace(0.0, 2 * np.pi * band_fraction, grid_size)
    k = np.arange(order + 1)
    cos_mat = np.cos(omega[:, None] * k)
    sin_mat = -np.sin(omega[:, None] * k)
    target_re = np.cos(omega * delta)
    target_im = -np.sin(omega * delta)

    taps = cp.Variable(order + 1)
    t = cp.Variable()
    err = cp.vstack([cos_mat @ taps - target_re, sin_mat @ taps - target_im])
    constraints = [cp.sum(taps) == 1]
    constraints += [cp.SOC(t, err[:, i]) for i in range(grid_size)]
    prob = cp.Problem(cp.Minimize(t), constraints)
    prob.solve(solver=cp.CLARABEL,
               tol_gap_abs=tolerance, tol_gap_rel=tolerance,
               tol_feas=tolerance)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise FilterDesignError(f"minimax solver failed: status {prob.status}")

    sol = np.asarray(taps.value, dtype=np.float64)
    sol = sol / sol.sum()   # re-project onto the exact DC constraint
    resp = np.exp(-1j * omega[:, None] * k) @ sol
    realized = float(np.max(np.abs(resp - np.exp(-1j * omega * delta))))
    return FirCoefficients(sol, "minimax", spec, objective=realized)


@dataclass(frozen=True)
class FrequencyResponse:
    """DTFT of a tap set on a frequency grid, with phase-delay error.

    phase_delay_error(w) = -angle(H(w))/w - delta, with the w -> 0 value
    taken as the limit sum_k k*l_k - delta.
    """

    omega: np.ndarray
    response: np.ndarray
    magnitude: np.ndarray
    phase_delay_error: np.ndarray
    delta: float


def frequency_response(coeffs: FirCoefficients, grid_size: int = 1024,
                       delta: float | None = None) -> FrequencyResponse:
    """Evaluate the filter exactly on a uniform grid over [0, pi]."""
    taps = coeffs.taps
    if delta is None:
        delta = coeffs.delta
    omega = np.linspace(0.0, np.pi, grid_size)
    h = np.exp(-1j * omega[:, None] * np.arange(taps.size)) @ taps
    phase = np.unwrap(np.angle(h))
    with np.errstate(divide="ignore", invalid="ignore"):
        pde = -phase / omega - delta
    pde[0] = float(np.arange(taps.size) @ taps) - delta
    return FrequencyResponse(omega, h, np.abs(h), pde, delta)


def inband_error(coeffs: FirCoefficients, delta: float | None = None,
                 band_fraction: float = 0.25, grid_size: int = 2048) -> float:
    """Max complex-response error magnitude over [0, 2*pi*band_fraction]."""
    if delta is None:
        delta = coeffs.delta
    omega = np.linspace(0.0, 2 * np.pi * band_fraction, grid_size)
    h = np.exp(-1j * omega[:, None] * np.arange(coeffs.taps.size)) @ coeffs.taps
    return float(np.max(np.abs(h - np.exp(-1j * omega * delta))))


def design(method: str, spec: DelaySpec, order: int,
           band_fraction: float = 0.25, grid_size: int = 512) -> FirCoefficients:
    """Dispatch on method name; 'identity' ignores the order."""
    if method == "lagrange":
        return lagrange_coeffs(spec, order)
    if method == "minimax":
        return minimax_coeffs(spec, order, band_fraction, grid_size)
    if method in ("identity", "naive"):
        return identity_filter(spec)
    raise FilterDesignError(f"unknown design method {method!r}")
