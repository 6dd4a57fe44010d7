"""LSTM audio-effect models and stream processing.

The recurrent state is always handled in "packed" form s = [h; c]
(hidden then cell), length H = 2 * hidden_size. The adjusted-rate path
replaces the fed-back state with an FIR combination of recent states.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ShapeError(ValueError):
    """Model weight shapes are mutually inconsistent."""


class UnstableOutputError(RuntimeError):
    """A non-finite state was produced during stream processing."""

    def __init__(self, sample_index: int):
        self.sample_index = sample_index
        super().__init__(f"non-finite state at sample {sample_index}")


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


@dataclass(frozen=True)
class RnnModel:
    """LSTM cell with affine readout, trained at a fixed sample rate.

    Weight layout follows the common PyTorch export convention: gate
    blocks stacked in (i, f, g, o) order, bias already combined
    (b_ih + b_hh if the source stored them separately).
    """

    hidden_size: int
    w_ih: np.ndarray        # (4*hidden_size, input_dim)
    w_hh: np.ndarray        # (4*hidden_size, hidden_size)
    b: np.ndarray           # (4*hidden_size,)
    out_w: np.ndarray       # (1, hidden_size)
    out_b: float
    train_rate: float = 44100.0
    has_direct_term: bool = False   # readout includes the raw input
    direct_w: float = 0.0
    name: str = ""

    def __post_init__(self):
        n = self.hidden_size
        if n < 1:
            raise ShapeError("hidden_size must be positive")
        if self.w_ih.ndim != 2 or self.w_ih.shape[0] != 4 * n:
            raise ShapeError(f"w_ih shape {self.w_ih.shape}, expected (4*{n}, input_dim)")
        if self.w_ih.shape[1] < 1:
            raise ShapeError("input_dim must be >= 1")
        if self.w_hh.shape != (4 * n, n):
            raise ShapeError(f"w_hh shape {self.w_hh.shape}, expected {(4 * n, n)}")
        if self.b.shape != (4 * n,):
            raise ShapeError(f"b shape {self.b.shape}, expected {(4 * n,)}")
        if self.out_w.shape != (1, n):
            raise ShapeError(f"out_w shape {self.out_w.shape}, expected {(1, n)}")
        for name in ("w_ih", "w_hh", "b", "out_w"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ShapeError(f"non-finite values in {name}")

    @property
    def input_dim(self) -> int:
        return self.w_ih.shape[1]

    @property
    def state_dim(self) -> int:
        return 2 * self.hidden_size

    def step(self, s: np.ndarray, x) -> np.ndarray:
        """One cell update on the packed state; returns [h'; c']."""
        n = self.hidden_size
        h, c = s[:n], s[n:]
        z = self.w_ih @ np.atleast_1d(np.asarray(x, dtype=np.float64)) + self.w_hh @ h + self.b
        i = _sigmoid(z[:n])
        f = _sigmoid(z[n:2 * n])
        g = np.tanh(z[2 * n:3 * n])
        o = _sigmoid(z[3 * n:])
        c_next = f * c + i * g
        h_next = o * np.tanh(c_next)
        return np.concatenate([h_next, c_next])

    def output(self, s: np.ndarray, x) -> float:
        """Affine readout from the hidden part of the packed state."""
        y = float(self.out_w[0] @ s[:self.hidden_size]) + self.out_b
        if self.has_direct_term:
            y += self.direct_w * float(np.atleast_1d(x)[0])
        return y

    def jacobian(self, s: np.ndarray) -> np.ndarray:
        """Analytic Jacobian of the packed map [h;c] -> [h';c'] at x = 0.

        Gate derivatives: sigma' = sigma(1-sigma), tanh' = 1 - tanh^2.
        """
        n = self.hidden_size
        h, c = s[:n], s[n:]
        z = self.w_hh @ h + self.b
        i = _sigmoid(z[:n])
        f = _sigmoid(z[n:2 * n])
        g = np.tanh(z[2 * n:3 * n])
        o = _sigmoid(z[3 * n:])
        wi, wf, wg, wo = (self.w_hh[k * n:(k + 1) * n] for k in range(4))

        c_next = f * c + i * g
        tc = np.tanh(c_next)

        dc_dh = (g * i * (1 - i))[:, None] * wi \
            + (c * f * (1 - f))[:, None] * wf \
            + (i * (1 - g * g))[:, None] * wg
        dc_dc = np.diag(f)
        # h' = o * tanh(c'); o depends on h, c' on both h and c
        dh_dh = (tc * o * (1 - o))[:, None] * wo + (o * (1 - tc * tc))[:, None] * dc_dh
        dh_dc = np.diag(o * (1 - tc * tc) * f)

        top = np.hstack([dh_dh, dh_dc])
        bot = np.hstack([dc_dh, dc_dc])
        return np.vstack([top, bot])


@dataclass(frozen=True)
class LinearModel:
    """Linear recurrence pushed through the same stream machinery.

    s_n = A s_{n-1} + b_in x_n,  y_n = c_out . s_n + d. The adjusted-rate
    path and the stability analysis are exact for this model, which makes
    it the workhorse surrogate for oracle tests.
    """

    a: np.ndarray           # (H, H)
    b_in: np.ndarray        # (H,)
    c_out: np.ndarray       # (H,)
    d: float = 0.0
    offset: np.ndarray = None   # constant drive, optional
    train_rate: float = 44100.0
    name: str = ""

    def __post_init__(self):
        if self.offset is None:
            object.__setattr__(self, "offset", np.zeros(self.a.shape[0]))

    @property
    def state_dim(self) -> int:
        return self.a.shape[0]

    def step(self, s: np.ndarray, x) -> np.ndarray:
        return self.a @ s + self.b_in * float(np.atleast_1d(x)[0]) + self.offset

    def output(self, s: np.ndarray, x) -> float:
        return float(self.c_out @ s) + self.d

    def jacobian(self, s: np.ndarray) -> np.ndarray:
        return self.a.copy()


class StateHistory:
    """Ring buffer of the last K+1 packed states, zero-initialized."""

    def __init__(self, state_dim: int, order: int):
        self.order = order
        self.buf = np.zeros((order + 1, state_dim))
        self.pos = 0

    def push(self, s: np.ndarray) -> None:
        self.pos = (self.pos + 1) % (self.order + 1)
        self.buf[self.pos] = s

    def combine(self, taps: np.ndarray) -> np.ndarray:
        """FIR combination sum_k taps[k] * s_{n-1-k} (k=0 is newest)."""
        idx = (self.pos - np.arange(self.order + 1)) % (self.order + 1)
        return taps @ self.buf[idx]


class StreamRunner:
    """Sample-by-sample driver with an FIR filter in the state feedback.

    Taps may be swapped mid-stream (used by the ringdown experiment).
    With taps [1] the recursion reduces exactly to the native model.
    """

    def __init__(self, model, taps):
        taps = np.asarray(taps, dtype=np.float64)
        if taps.ndim != 1 or taps.size < 1:
            raise ValueError("taps must be a nonempty 1-D array")
        self.model = model
        self.taps = taps
        self.history = StateHistory(model.state_dim, taps.size - 1)
        self.samples_run = 0

    def set_taps(self, taps) -> None:
        taps = np.asarray(taps, dtype=np.float64)
        if taps.size - 1 > self.history.order:
            old = self.history
            self.history = StateHistory(self.model.state_dim, taps.size - 1)
            # replay as much history as the new buffer holds
            for k in range(old.order, -1, -1):
                idx = (old.pos - k) % (old.order + 1)
                self.history.push(old.buf[idx])
        self.taps = taps

    def process(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        y = np.empty(len(x))
        model, hist, taps = self.model, self.history, self.taps
        # overflow is detected explicitly below, not via warnings
        with np.errstate(over="ignore", invalid="ignore"):
            for n in range(len(x)):
                s_tilde = hist.combine(taps)
                s = model.step(s_tilde, x[n])
                if not np.all(np.isfinite(s)):
                    raise UnstableOutputError(self.samples_run + n)
                hist.push(s)
                y[n] = model.output(s, x[n])
        self.samples_run += len(x)
        return y


def process_native(model, x: np.ndarray) -> np.ndarray:
    """Run the model at its native rate from zero initial state."""
    x = np.asarray(x, dtype=np.float64)
    if x.size and not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite samples")
    return StreamRunner(model, np.array([1.0])).process(x)


def process_adjusted(model, x: np.ndarray, taps) -> np.ndarray:
    """Run the model with FIR taps applied to the fed-back packed state.

    Raises UnstableOutputError (with the sample index) if the state goes
    non-finite; empirical instability surfaces through this path.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size and not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite samples")
    from .filters import FirCoefficients
    if isinstance(taps, FirCoefficients):
        taps = taps.taps
    return StreamRunner(model, taps).process(x)
