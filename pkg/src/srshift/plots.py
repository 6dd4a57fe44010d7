"""Matplotlib renderings of the report tables (PNG alongside the CSVs)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_filter_responses(responses, path, band_fraction: float = 0.25) -> None:
    """Magnitude (top) and phase-delay error (bottom) for labeled responses.

    responses: list of (label, FrequencyResponse).
    """
    fig, (ax_mag, ax_pde) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for label, resp in responses:
        freq = resp.omega / (2 * np.pi)
        ax_mag.plot(freq, 20 * np.log10(np.maximum(resp.magnitude, 1e-12)), label=label)
        ax_pde.plot(freq, resp.phase_delay_error, label=label)
    for ax in (ax_mag, ax_pde):
        ax.axvline(band_fraction, color="k", ls=":", lw=0.8)
        ax.grid(alpha=0.3)
    ax_mag.set_ylabel("magnitude (dB)")
    ax_pde.set_ylabel("phase delay error (samples)")
    ax_pde.set_xlabel("normalized frequency (cycles/sample)")
    ax_mag.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_poles(poles, path, title: str = "") -> None:
    """Pole scatter against the unit circle; unstable poles highlighted."""
    poles = np.asarray(poles)
    fig, ax = plt.subplots(figsize=(5, 5))
    theta = np.linspace(0, 2 * np.pi, 512)
    ax.plot(np.cos(theta), np.sin(theta), "k--", lw=0.8)
    inside = np.abs(poles) <= 1.0
    ax.plot(poles[inside].real, poles[inside].imag, "x", color="tab:blue", ms=5)
    if np.any(~inside):
        ax.plot(poles[~inside].real, poles[~inside].imag, "x", color="tab:red", ms=7)
        for z in poles[~inside]:
            ax.plot([0, 1.2 * np.cos(np.angle(z))], [0, 1.2 * np.sin(np.angle(z))],
                    "r:", lw=0.8)
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_spectrogram(db, frame_starts, path, sample_rate: float | None = None,
                     marker_freqs=(), title: str = "") -> None:
    """STFT magnitude image; optional horizontal lines at predicted ringing."""
    fig, ax = plt.subplots(figsize=(7, 4))
    n_bins = db.shape[1]
    extent = [frame_starts[0], frame_starts[-1], 0.0,
              (sample_rate / 2 if sample_rate else n_bins - 1)]
    ax.imshow(db.T, origin="lower", aspect="auto", extent=extent, cmap="magma",
              vmin=np.max(db) - 100, vmax=np.max(db))
    for f in marker_freqs:
        ax.axhline(f, color="r", ls="--", lw=1.0)
    ax.set_xlabel("sample")
    ax.set_ylabel("frequency (Hz)" if sample_rate else "bin")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_snr_violin(distributions, path, title: str = "") -> None:
    """Violin plot of per-filter SNR distributions.

    distributions: mapping {(ratio, method, order): snr array}.
    """
    labels, columns = [], []
    for (ratio, method, order), vals in distributions.items():
        finite = np.asarray(vals)[np.isfinite(vals)]
        if finite.size == 0:
            finite = np.array([0.0])
        labels.append(f"{method}-{order}\n{ratio[0]}/{ratio[1]}")
        columns.append(finite)
    fig, ax = plt.subplots(figsize=(1.2 * len(columns) + 2, 4))
    parts = ax.violinplot(columns, showmeans=True, showextrema=True)
    for body in parts["bodies"]:
        body.set_alpha(0.6)
    ax.set_xticks(np.arange(1, len(labels) + 1))
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_ylabel("SNR (dB)")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
