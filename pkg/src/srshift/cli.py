"""Command line entry point: process, design-filter, resample, analyze, evaluate."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import analysis, evaluation, filters, io, resample
from .model import process_adjusted, process_native

log = logging.getLogger("srshift")


def _ratio(text: str) -> tuple[int, int]:
    try:
        p, q = text.split("/")
        return int(p), int(q)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected P/Q, got {text!r}")


def _design_from_args(args) -> filters.FirCoefficients:
    p, q = args.ratio
    spec = filters.delta_for_ratio(p, q, getattr(args, "train_rate", 44100.0))
    return filters.design(args.method, spec, args.order, args.band, args.grid)


def _emit_json(doc, out_path) -> None:
    if out_path:
        io.write_json(out_path, doc)
    else:
        print(json.dumps(io.json_ready(doc), sort_keys=True, indent=2, default=str))


def cmd_design_filter(args) -> int:
    fir = _design_from_args(args)
    doc = {
        "taps": [io.fmt_float(t) for t in fir.taps.tolist()],
        "delta": io.fmt_float(fir.delta),
        "order": fir.order,
        "method": fir.method,
        "objective": None if fir.objective is None else io.fmt_float(fir.objective),
        "ratio": f"{args.ratio[0]}/{args.ratio[1]}",
    }
    _emit_json(doc, args.out)
    if args.response or args.plot:
        resp = filters.frequency_response(fir, grid_size=args.grid * 2)
        if args.response:
            io.write_csv(args.response,
                         ["omega", "frequency", "magnitude", "phase_delay_error"],
                         zip(resp.omega, resp.omega / (2 * np.pi),
                             resp.magnitude, resp.phase_delay_error))
        if args.plot:
            from . import plots
            plots.plot_filter_responses(
                [(f"{fir.method}-{fir.order}", resp)], args.plot, args.band)
    return 0


def cmd_resample(args) -> int:
    buf = io.read_wav(args.input)
    p, q = args.ratio
    x = resample.trim_for_ratio(buf.samples, q)
    y = resample.dft_resample(x, p, q)
    out_rate = int(round(buf.sample_rate * p / q))
    io.write_wav(args.output, io.AudioBuffer(y, out_rate, buf.source_format))
    log.info("wrote %s (%d samples at %d Hz)", args.output, len(y), out_rate)
    return 0


def cmd_process(args) -> int:
    model = io.load_model(args.model)
    buf = io.read_wav(args.input)
    if args.ratio is None or args.method in ("naive", "identity"):
        y = process_native(model, buf.samples)
    else:
        fir = _design_from_args(args)
        y = process_adjusted(model, buf.samples, fir)
    io.write_wav(args.output, io.AudioBuffer(y, buf.sample_rate, buf.source_format))
    return 0


def cmd_analyze(args) -> int:
    model = io.load_model(args.model)
    fir = _design_from_args(args)
    report = analysis.predict_stability(model, fir, run_len=args.settle)
    doc = {
        "model": model.name,
        "ratio": f"{args.ratio[0]}/{args.ratio[1]}",
        "method": fir.method,
        "order": fir.order,
        "spectral_radius": report.spectral_radius,
        "stable": report.stable,
        "margin": report.margin,
        "marginal": report.marginal,
        "confidence": report.confidence,
        "fixed_point_residual":
            None if report.fixed_point is None else report.fixed_point.residual,
        "unstable_pole_angles": report.unstable_angles,
        "ringing_frequencies_hz": report.ringing_frequencies,
        "pole_count": int(report.poles.size),
    }
    _emit_json(doc, args.out)

    if args.emit_poles or args.plot_poles:
        if args.emit_poles:
            io.write_csv(args.emit_poles, ["re", "im", "abs"],
                         ((z.real, z.imag, abs(z)) for z in report.poles))
        if args.plot_poles:
            from . import plots
            plots.plot_poles(report.poles, args.plot_poles,
                             title=f"{model.name} {fir.method}-{fir.order}")

    if args.emit_ringdown or args.plot_ringdown:
        rate = (fir.spec.inference_rate if fir.spec else model.train_rate)
        y = analysis.ringdown(model, fir, pre_len=args.settle, post_len=2 * args.settle)
        db, frame_starts, bins = analysis.stft_table(y)
        if args.emit_ringdown:
            rows = ((int(frame_starts[i]), int(b), db[i, b])
                    for i in range(db.shape[0]) for b in bins)
            io.write_csv(args.emit_ringdown, ["frame_start", "bin", "db"], rows)
        if args.plot_ringdown:
            from . import plots
            plots.plot_spectrogram(db, frame_starts, args.plot_ringdown,
                                   sample_rate=rate,
                                   marker_freqs=report.ringing_frequencies,
                                   title=f"{model.name} ringdown")
    return 0 if report.confidence != "indeterminate" else 1


def cmd_evaluate(args) -> int:
    paths = sorted(
        os.path.join(args.models, f) for f in os.listdir(args.models)
        if f.endswith(".json")) if os.path.isdir(args.models) else [args.models]
    models = []
    for path in paths:
        try:
            models.append((os.path.splitext(os.path.basename(path))[0], io.load_model(path)))
        except (io.ModelFormatError, OSError, json.JSONDecodeError) as exc:
            log.warning("skipping %s: %s", path, exc)
    buf = io.read_wav(args.input)
    filter_set = evaluation.parse_filter_set(args.filters)
    records, table = evaluation.batch_experiment(
        models, buf.samples, args.ratios, filter_set,
        truncate=args.truncate, threads=args.threads,
        band_fraction=args.band, grid_size=args.grid,
        fixed_point_run=args.settle)

    io.write_csv(args.out,
                 ["model", "ratio", "method", "order", "snr_db", "naive_snr_db",
                  "success", "rho", "predicted_stable"],
                 ((r.model_id, f"{r.ratio[0]}/{r.ratio[1]}", r.method, r.order,
                   r.snr_db, r.naive_snr_db, r.success, r.spectral_radius,
                   r.predicted_stable) for r in records))
    if args.contingency:
        io.write_json(args.contingency, {
            "stable_success": table.stable_success,
            "stable_failure": table.stable_failure,
            "unstable_success": table.unstable_success,
            "unstable_failure": table.unstable_failure,
            "total": table.total,
            "agreement_rate": table.agreement_rate,
        })
    dists = evaluation.snr_distributions(records)
    if args.violin:
        io.write_csv(args.violin, ["ratio", "method", "order", "model", "snr_db"],
                     ((f"{r.ratio[0]}/{r.ratio[1]}", r.method, r.order,
                       r.model_id, r.snr_db)
                      for r in sorted(records,
                                      key=lambda r: (r.ratio, r.method, r.order, r.model_id))))
    if args.plot_violin:
        from . import plots
        plots.plot_snr_violin(dists, args.plot_violin)
    log.info("evaluated %d cases, agreement %.1f%%",
             table.total, 100 * table.agreement_rate)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srshift",
        description="Run LSTM audio-effect models at adjusted sample rates "
                    "with FIR-filtered state feedback, and screen filter "
                    "choices via linearised stability analysis.")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for randomized signal generation")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_design_args(p, ratio_required=True):
        p.add_argument("--ratio", type=_ratio, required=ratio_required,
                       default=None, help="inference/train rate ratio P/Q")
        p.add_argument("--method", choices=["lagrange", "minimax", "naive"],
                       default="lagrange")
        p.add_argument("--order", type=int, default=3)
        p.add_argument("--band", type=float, default=0.25,
                       help="minimax optimization band as a fraction of the rate")
        p.add_argument("--grid", type=int, default=512)
        p.add_argument("--train-rate", type=float, default=44100.0)

    p = sub.add_parser("design-filter", help="design a feedback-loop FIR filter")
    add_design_args(p)
    p.add_argument("--out", help="write the JSON result here instead of stdout")
    p.add_argument("--response", help="CSV of the frequency response")
    p.add_argument("--plot", help="PNG of magnitude and phase-delay error")
    p.set_defaults(func=cmd_design_filter)

    p = sub.add_parser("resample", help="DFT-based rational resampling of a WAV")
    p.add_argument("--ratio", type=_ratio, required=True)
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("process", help="run a model over a WAV file")
    p.add_argument("--model", required=True)
    add_design_args(p, ratio_required=False)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("analyze", help="stability analysis for a model + filter")
    p.add_argument("--model", required=True)
    add_design_args(p)
    p.add_argument("--settle", type=int, default=10000,
                   help="zero-input samples run before averaging the fixed point")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--emit-poles", help="CSV of (re, im, abs) pole rows")
    p.add_argument("--emit-ringdown",
                   help="CSV STFT table of the filter-engage experiment")
    p.add_argument("--plot-poles", help="PNG pole chart")
    p.add_argument("--plot-ringdown", help="PNG spectrogram")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("evaluate", help="batch SNR experiment over a model library")
    p.add_argument("--models", required=True, help="directory of model JSON files")
    p.add_argument("--input", required=True, help="test WAV at the training rate")
    p.add_argument("--ratios", type=lambda s: [_ratio(r) for r in s.split(",")],
                   default=[(160, 147), (147, 160)])
    p.add_argument("--filters", default="lagrange:1-5,minimax:1-5")
    p.add_argument("--truncate", type=int, default=44100)
    p.add_argument("--band", type=float, default=0.25)
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--settle", type=int, default=10000)
    p.add_argument("--out", required=True, help="results CSV")
    p.add_argument("--contingency", help="contingency table JSON")
    p.add_argument("--violin", help="per-case SNR CSV for distribution plots")
    p.add_argument("--plot-violin", help="PNG violin plot")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    np.random.seed(args.seed)
    try:
        return args.func(args)
    except Exception as exc:   # CLI boundary: fail nonzero with a parseable line
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
