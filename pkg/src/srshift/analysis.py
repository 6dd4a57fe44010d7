"""Linearised stability analysis of the filter-modified recurrence.

Pipeline: settle the unmodified model to an approximate zero-input fixed
point, take the analytic Jacobian there, embed the FIR taps in a block
companion matrix, and read stability off its eigenvalues. Two pole
routes are provided: dense eigenvalues of the full companion matrix, and
a structured route factoring through the Jacobian's own eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .filters import FirCoefficients
from .model import StreamRunner

MARGINAL_BAND = 1e-9          # |rho - 1| below this is labeled marginal
RESIDUAL_CONFIDENCE = 1e-6    # fixed-point residual above this downgrades confidence


class DivergentTrajectoryError(RuntimeError):
    """Zero-input trajectory went non-finite; no fixed point to report."""


@dataclass(frozen=True)
class FixedPoint:
    state: np.ndarray
    residual: float           # max-norm of step(a, 0) - a
    run_len: int
    avg_len: int

    @property
    def low_confidence(self) -> bool:
        return self.residual > RESIDUAL_CONFIDENCE


@dataclass(frozen=True)
class LinearisedSystem:
    jacobian: np.ndarray      # (H, H)
    taps: np.ndarray          # (K+1,)
    companion: np.ndarray     # (H*(K+1), H*(K+1))
    offset: np.ndarray        # (H*(K+1),); affects the fixed point, not the poles


@dataclass(frozen=True)
class StabilityReport:
    poles: np.ndarray         # complex, H*(K+1) values
    spectral_radius: float
    stable: bool
    margin: float             # 1 - spectral_radius
    marginal: bool
    confidence: str           # high | low | indeterminate
    fixed_point: FixedPoint | None
    unstable_angles: np.ndarray       # radians, poles with |z| > 1
    ringing_frequencies: np.ndarray   # Hz at the inference rate


def find_fixed_point(model, run_len: int = 10000, avg_len: int = 1000) -> FixedPoint:
    """Settle under zero input from zero state; average the tail states."""
    if avg_len > run_len or avg_len < 1:
        raise ValueError("need 1 <= avg_len <= run_len")
    s = np.zeros(model.state_dim)
    acc = np.zeros(model.state_dim)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(run_len):
            s = model.step(s, 0.0)
            if not np.all(np.isfinite(s)):
                raise DivergentTrajectoryError(f"trajectory non-finite at sample {n}")
            if n >= run_len - avg_len:
                acc += s
    a = acc / avg_len
    residual = float(np.max(np.abs(model.step(a, 0.0) - a)))
    return FixedPoint(a, residual, run_len, avg_len)


def lstm_jacobian(model, a: np.ndarray) -> np.ndarray:
    """Jacobian of the packed one-step map at state a, zero input."""
    if not np.all(np.isfinite(a)):
        raise ValueError("state must be finite")
    return model.jacobian(np.asarray(a, dtype=np.float64))


def build_companion(jacobian: np.ndarray, taps, step_at_a: np.ndarray | None = None,
                    a: np.ndarray | None = None) -> LinearisedSystem:
    """Block companion matrix: top row [l_0 J | ... | l_K J], shifted identity below."""
    if isinstance(taps, FirCoefficients):
        taps = taps.taps
    taps = np.asarray(taps, dtype=np.float64)
    jacobian = np.asarray(jacobian, dtype=np.float64)
    h = jacobian.shape[0]
    if jacobian.shape != (h, h):
        raise ValueError("jacobian must be square")
    if taps.ndim != 1 or taps.size < 1:
        raise ValueError("taps must be a nonempty 1-D array")
    k = taps.size - 1
    dim = h * (k + 1)
    companion = np.zeros((dim, dim))
    companion[:h] = np.kron(taps, jacobian)
    if k > 0:
        companion[h:, :h * k] = np.eye(h * k)
    offset = np.zeros(dim)
    if step_at_a is not None and a is not None:
        offset[:h] = step_at_a - jacobian @ a
    return LinearisedSystem(jacobian, taps, companion, offset)


def poles_dense(companion: np.ndarray) -> np.ndarray:
    """All eigenvalues of the dense companion matrix (LAPACK QR path)."""
    companion = np.asarray(companion, dtype=np.float64)
    if not np.all(np.isfinite(companion)):
        raise ValueError("matrix must be finite")
    return np.linalg.eigvals(companion)


def poles_structured(jacobian: np.ndarray, taps) -> np.ndarray:
    """Poles via the Kronecker structure of the companion matrix.

    For each Jacobian eigenvalue mu, the corresponding K+1 poles are the
    roots of z^{K+1} - mu * (l_0 z^K + ... + l_K).
    """
    if isinstance(taps, FirCoefficients):
        taps = taps.taps
    taps = np.asarray(taps, dtype=np.float64)
    mus = np.linalg.eigvals(np.asarray(jacobian, dtype=np.float64))
    k = taps.size - 1
    if k == 0:
        return mus * taps[0]
    out = np.empty(mus.size * (k + 1), dtype=complex)
    for i, mu in enumerate(mus):
        coeffs = np.concatenate([[1.0 + 0j], -mu * taps])
        out[i * (k + 1):(i + 1) * (k + 1)] = np.roots(coeffs)
    return out


def pole_multiset_distance(a, b) -> float:
    """Max pairing distance between two pole multisets (optimal assignment)."""
    from scipy.optimize import linear_sum_assignment

    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.size != b.size:
        raise ValueError(f"multiset sizes differ: {a.size} vs {b.size}")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def predict_stability(model, taps, run_len: int = 10000, avg_len: int | None = None,
                      inference_rate: float | None = None) -> StabilityReport:
    """Fixed point -> Jacobian -> companion poles -> verdict.

    Stable iff the spectral radius <= 1. Unstable poles additionally get
    their angles and predicted ringing frequencies (angle/2pi * rate).
    """
    if avg_len is None:
        avg_len = max(1, run_len // 10)
    fir = taps if isinstance(taps, FirCoefficients) else None
    if isinstance(taps, FirCoefficients):
        taps = taps.taps
    taps = np.asarray(taps, dtype=np.float64)
    if inference_rate is None:
        if fir is not None and fir.spec is not None:
            inference_rate = fir.spec.inference_rate
        else:
            inference_rate = getattr(model, "train_rate", 44100.0)

    try:
        fp = find_fixed_point(model, run_len, avg_len)
    except DivergentTrajectoryError:
        dim = model.state_dim * taps.size
        return StabilityReport(
            poles=np.full(dim, np.nan, dtype=complex), spectral_radius=float("nan"),
            stable=False, margin=float("nan"), marginal=False,
            confidence="indeterminate", fixed_point=None,
            unstable_angles=np.empty(0), ringing_frequencies=np.empty(0))

    jac = lstm_jacobian(model, fp.state)
    system = build_companion(jac, taps, model.step(fp.state, 0.0), fp.state)
    poles = poles_dense(system.companion)
    rho = float(np.max(np.abs(poles)))
    unstable = poles[np.abs(poles) > 1.0]
    angles = np.sort(np.abs(np.angle(unstable)))
    return StabilityReport(
        poles=poles, spectral_radius=rho, stable=rho <= 1.0, margin=1.0 - rho,
        marginal=abs(rho - 1.0) <= MARGINAL_BAND,
        confidence="low" if fp.low_confidence else "high",
        fixed_point=fp, unstable_angles=angles,
        ringing_frequencies=angles / (2 * np.pi) * inference_rate)


def ringdown(model, taps, pre_len: int = 10000, post_len: int = 20000,
             kick: float = 0.0):
    """Zero-input run: naive for pre_len samples, then the filter engaged.

    Returns the concatenated output signal. A small input kick at sample 0
    can seed oscillation for models whose zero state is already settled.
    """
    if isinstance(taps, FirCoefficients):
        taps = taps.taps
    runner = StreamRunner(model, np.array([1.0]))
    x_pre = np.zeros(pre_len)
    if pre_len:
        x_pre[0] = kick
    y_pre = runner.process(x_pre)
    runner.set_taps(taps)
    y_post = runner.process(np.zeros(post_len))
    return np.concatenate([y_pre, y_post])


def stft_table(signal: np.ndarray, window: int = 1024, hop: int = 256,
               floor_db: float = -120.0):
    """Hann STFT magnitudes in dB, as (n_frames, n_bins) plus axes."""
    signal = np.asarray(signal, dtype=np.float64)
    if len(signal) < window:
        raise ValueError("signal shorter than one analysis window")
    win = np.hanning(window)
    n_frames = (len(signal) - window) // hop + 1
    frames = np.lib.stride_tricks.sliding_window_view(signal, window)[::hop][:n_frames]
    mags = np.abs(np.fft.rfft(frames * win, axis=1))
    db = 20 * np.log10(np.maximum(mags, 10 ** (floor_db / 20)))
    return db, np.arange(n_frames) * hop, np.arange(window // 2 + 1)
