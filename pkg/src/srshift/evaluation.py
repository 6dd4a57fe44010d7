"""SNR scoring, per-case experiment runner, and the batch harness.

A case is (model, ratio, filter): the native-rate output is resampled to
the target rate as the reference; the model is then run at the target
rate with the filter in the feedback loop, and scored against that
reference. Success means beating the no-interpolation baseline.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import filters as flt
from .analysis import predict_stability
from .model import UnstableOutputError, process_adjusted, process_native
from .resample import dft_resample, trim_for_ratio

log = logging.getLogger(__name__)

DEFAULT_TRUNCATE = 44100   # transient samples dropped before scoring


@dataclass(frozen=True)
class SnrResult:
    snr_linear: float
    snr_db: float
    samples: int
    truncated: int


@dataclass(frozen=True)
class ExperimentRecord:
    model_id: str
    ratio: tuple[int, int]
    method: str
    order: int
    snr_db: float
    naive_snr_db: float
    success: bool              # snr_db > naive_snr_db
    predicted_stable: bool
    spectral_radius: float
    confidence: str


@dataclass(frozen=True)
class ContingencyTable:
    stable_success: int
    stable_failure: int
    unstable_success: int
    unstable_failure: int

    @property
    def total(self) -> int:
        return (self.stable_success + self.stable_failure
                + self.unstable_success + self.unstable_failure)

    @property
    def agreement_rate(self) -> float:
        if self.total == 0:
            return float("nan")
        return (self.stable_success + self.unstable_failure) / self.total


def snr(y_test: np.ndarray, y_ref: np.ndarray,
        truncate: int = DEFAULT_TRUNCATE) -> SnrResult:
    """Reference-energy over error-energy, after dropping leading transients."""
    y_test = np.asarray(y_test, dtype=np.float64)
    y_ref = np.asarray(y_ref, dtype=np.float64)
    if y_test.shape != y_ref.shape:
        raise ValueError(f"length mismatch: {y_test.shape} vs {y_ref.shape}")
    if len(y_ref) <= truncate:
        raise ValueError(f"signal length {len(y_ref)} <= truncation {truncate}")
    yt, yr = y_test[truncate:], y_ref[truncate:]
    ref_energy = float(yr @ yr)
    if ref_energy == 0.0:
        raise ValueError("reference signal has zero energy after truncation")
    with np.errstate(over="ignore"):
        err = yt - yr
        err_energy = float(err @ err)
    if err_energy == 0.0:
        linear, db = np.inf, np.inf
    elif np.isinf(err_energy):      # pre-blow-up garbage output
        linear, db = 0.0, -np.inf
    else:
        linear = ref_energy / err_energy
        db = 10.0 * np.log10(linear)
    return SnrResult(linear, db, len(yr), truncate)


def run_case(model, x: np.ndarray, p: int, q: int, fir: flt.FirCoefficients,
             truncate: int = DEFAULT_TRUNCATE, model_id: str = "",
             with_stability: bool = True,
             fixed_point_run: int = 10000) -> ExperimentRecord:
    """Score one (model, ratio, filter) case against the resampled reference."""
    x = trim_for_ratio(np.asarray(x, dtype=np.float64), q)
    y = process_native(model, x)
    y_ref = dft_resample(y, p, q)
    x_conv = dft_resample(x, p, q)

    def adjusted_db(taps) -> float:
        try:
            y_adj = process_adjusted(model, x_conv, taps)
        except UnstableOutputError as exc:
            log.warning("%s %d/%d order %d: blow-up at sample %d",
                        model_id, p, q, len(np.atleast_1d(taps)) - 1, exc.sample_index)
            return -np.inf
        return snr(y_adj, y_ref, truncate).snr_db

    snr_db = adjusted_db(fir.taps)
    naive_snr_db = adjusted_db(np.array([1.0]))

    rho, stable, confidence = float("nan"), True, "skipped"
    if with_stability:
        spec = fir.spec or flt.delta_for_ratio(p, q, getattr(model, "train_rate", 44100.0))
        report = predict_stability(model, fir, run_len=fixed_point_run,
                                   inference_rate=spec.inference_rate)
        rho, stable, confidence = report.spectral_radius, report.stable, report.confidence

    return ExperimentRecord(
        model_id=model_id, ratio=(p, q), method=fir.method, order=fir.order,
        snr_db=snr_db, naive_snr_db=naive_snr_db, success=snr_db > naive_snr_db,
        predicted_stable=stable, spectral_radius=rho, confidence=confidence)


def contingency(records) -> ContingencyTable:
    cells = {(True, True): 0, (True, False): 0, (False, True): 0, (False, False): 0}
    for r in records:
        cells[(r.predicted_stable, r.success)] += 1
    return ContingencyTable(
        stable_success=cells[(True, True)], stable_failure=cells[(True, False)],
        unstable_success=cells[(False, True)], unstable_failure=cells[(False, False)])


def parse_filter_set(text: str):
    """'lagrange:1-5,minimax:2,naive' -> [(method, order), ...]."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if part in ("naive", "identity"):
            out.append(("identity", 0))
            continue
        method, _, orders = part.partition(":")
        if not orders:
            raise ValueError(f"missing order spec in {part!r}")
        lo, _, hi = orders.partition("-")
        for k in range(int(lo), int(hi or lo) + 1):
            out.append((method, k))
    return out


def batch_experiment(models, x: np.ndarray, ratios, filter_set,
                     truncate: int = DEFAULT_TRUNCATE, threads: int = 1,
                     band_fraction: float = 0.25, grid_size: int = 512,
                     fixed_point_run: int = 10000):
    """Full cross product of models x ratios x filters.

    models: iterable of (model_id, model); unreadable entries should have
    been filtered (and logged) by the caller. Returns (records, table)
    with records in deterministic cross-product order regardless of the
    thread count.
    """
    models = list(models)
    if not models:
        raise ValueError("no models to evaluate")
    cases = []
    for p, q in ratios:
        designed = {}
        for method, order in filter_set:
            spec = flt.delta_for_ratio(p, q)
            key = (method, order)
            if key not in designed:
                designed[key] = (flt.identity_filter(spec) if method == "identity"
                                 else flt.design(method, spec, order, band_fraction, grid_size))
        for model_id, model in models:
            for method, order in filter_set:
                cases.append((model_id, model, p, q, designed[(method, order)]))

    def run_one(case):
        model_id, model, p, q, fir = case
        return run_case(model, x, p, q, fir, truncate=truncate, model_id=model_id,
                        fixed_point_run=fixed_point_run)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(run_one, cases))
    else:
        records = [run_one(c) for c in cases]
    return records, contingency(records)


def snr_distributions(records):
    """Per-(ratio, method, order) SNR columns for violin-style summaries."""
    groups: dict[tuple, list] = {}
    for r in records:
        groups.setdefault((r.ratio, r.method, r.order), []).append(r.snr_db)
    return {k: np.asarray(v) for k, v in sorted(groups.items())}
