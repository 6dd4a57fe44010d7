"""DFT-based rational sample rate conversion.

Single full-length real DFT; spectrum truncated (downsampling) or
zero-padded (upsampling) to the new length, rescaled, inverted. Used to
generate rate-converted inputs and reference targets for SNR scoring.
"""

from __future__ import annotations

from math import gcd

import numpy as np


def trim_for_ratio(x: np.ndarray, q: int) -> np.ndarray:
    """Largest prefix whose length is divisible by q."""
    n = (len(x) // q) * q
    return x[:n]


def dft_resample(x: np.ndarray, p: int, q: int) -> np.ndarray:
    """Resample len-N signal to length N*p/q via spectral zero-pad/truncate.

    Requires N divisible by q (use trim_for_ratio first). The even-length
    Nyquist bin is halved on upsampling and realified on downsampling so
    the output stays exactly real and energy-consistent.
    """
    x = np.asarray(x, dtype=np.float64)
    if p <= 0 or q <= 0:
        raise ValueError(f"ratio parts must be positive, got {p}/{q}")
    g = gcd(p, q)
    p, q = p // g, q // g
    n = len(x)
    if n < 2:
        raise ValueError("input too short to resample")
    if n % q != 0:
        raise ValueError(f"input length {n} not divisible by {q}; trim first")
    m = n * p // q
    if p == q:
        return x.copy()

    spec = np.fft.rfft(x)
    if m > n:
        out = np.zeros(m // 2 + 1, dtype=complex)
        out[:spec.size] = spec
        if n % 2 == 0:
            out[n // 2] *= 0.5     # old Nyquist bin splits across +/- bins
    else:
        out = spec[:m // 2 + 1].copy()
        if m % 2 == 0:
            out[m // 2] = out[m // 2].real
    return np.fft.irfft(out, n=m) * (m / n)
