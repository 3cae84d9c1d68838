"""Command-line entry point: ``arng <subcommand> ...``.

Exit codes: 0 success, 2 configuration/usage error, 3 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import bits as bitmod
from . import calibration, eraser, mi, spectral, validity
from .config import ConfigError, load_config
from .simulate import ScenarioConfig, simulate
from .stream import StreamFormatError, TagStream, cross_channel_deadtime_filter, read_stream, write_stream

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3

log = logging.getLogger("arng")


class DataError(Exception):
    pass


# ---------------------------------------------------------------- manifest / JSON


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"))


def digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def make_manifest(subcommand, config, seed, inputs=(), outputs=(), options=None) -> dict:
    return {
        "tool": "arng",
        "tool_version": __version__,
        "subcommand": subcommand,
        "config_digest": digest(config),
        "seed": seed,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "options": _clean(options or {}),
    }


def emit_report(report: dict, manifest: dict, out) -> str:
    body = dict(report)
    body["schema_version"] = SCHEMA_VERSION
    body["manifest"] = manifest
    text = json.dumps(_clean(body), sort_keys=True, indent=2) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
    return text


# ---------------------------------------------------------------- loaders


def _load_stream(path) -> TagStream:
    try:
        return read_stream(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except StreamFormatError as exc:
        raise DataError(f"{path}: {exc}") from None


def _load_bits(path, args) -> bitmod.BitStream:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if data[:6] == b"ARNGTT":
        return _extract(_load_stream(path), args)
    try:
        return bitmod.read_bits(path)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def _extract(stream: TagStream, args) -> bitmod.BitStream:
    if args.filter_window_ns > 0:
        stream = cross_channel_deadtime_filter(stream, args.filter_window_ns * 1e-9)
    if args.scheme == "color":
        return bitmod.bits_from_color(stream)
    return bitmod.bits_from_time_parity(stream, args.digit_period_ns * 1e-9)


def _parse_depths(text) -> list[int]:
    out = []
    for part in str(text).split(","):
        if "-" in part:
            a, b = part.split("-")
            out.extend(range(int(a), int(b) + 1))
        elif part.strip():
            out.append(int(part))
    return out


# ---------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = ScenarioConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    stream = simulate(cfg)
    manifest = make_manifest("simulate", cfg.to_dict(), cfg.seed, [args.config], [args.out])
    manifest["duration"] = cfg.duration
    manifest["config"] = _clean(cfg.to_dict())
    write_stream(args.out, stream, manifest)
    if args.text:
        from .stream import write_stream_text

        write_stream_text(args.text, stream)
    log.info("wrote %d events to %s", len(stream), args.out)
    return EXIT_OK


def cmd_extract(args) -> int:
    stream = _load_stream(args.stream)
    bs = _extract(stream, args)
    bs.metadata["source"] = str(args.stream)
    if args.format == "ascii":
        bitmod.write_nist_ascii(args.out, bs)
    else:
        bitmod.write_bits(args.out, bs)
    if args.report:
        manifest = make_manifest("extract", _opts(args), None, [args.stream], [args.out], _opts(args))
        emit_report({"imbalance": bitmod.imbalance_report(bs)}, manifest, args.report)
    return EXIT_OK


def cmd_export_nist(args) -> int:
    stream = _load_stream(args.stream)
    bs = _extract(stream, args)
    bitmod.write_nist_ascii(args.out, bs)
    return EXIT_OK


def cmd_analyze_mi(args) -> int:
    bs = _load_bits(args.input, args)
    report = _mi_section(bs, args)
    manifest = make_manifest("analyze-mi", _opts(args), args.seed, [args.input], [args.out], _opts(args))
    emit_report(report, manifest, args.out)
    return EXIT_OK


def _mi_section(bs, args) -> dict:
    if len(bs) == 0:
        raise DataError("insufficient data: no events after extraction")
    try:
        report = mi.mi_report(bs, _parse_depths(args.depths), args.surrogates, args.seed,
                              args.surrogate_method, args.z_crit)
    except mi.InsufficientDataError as exc:
        raise DataError(f"insufficient data: {exc}") from None
    report["imbalance"] = bitmod.imbalance_report(bs)
    if not args.tables:
        report.pop("conditional_tables")
    return report


def cmd_analyze(args) -> int:
    stream = _load_stream(args.stream)
    if len(stream) == 0:
        raise DataError("insufficient data: stream is empty")
    bs = _extract(stream, args)
    report = {"mutual_information": _mi_section(bs, args)}

    cfg = stream.manifest.get("config", {}) if isinstance(stream.manifest, dict) else {}
    xt = cfg.get("crosstalk", {}) or {}
    n_blue = _pick(args.noise_blue, cfg.get("skyglow_blue", 0) + cfg.get("dark_blue", 0) if cfg else None, 61.0)
    n_red = _pick(args.noise_red, cfg.get("skyglow_red", 0) + cfg.get("dark_red", 0) if cfg else None, 153.0)
    f_br = _pick(args.f_b_to_r, xt.get("f_b_to_r"), 0.002)
    f_rb = _pick(args.f_r_to_b, xt.get("f_r_to_b"), f_br)
    span = stream.span
    if span <= 0:
        raise DataError("insufficient data: cannot determine observation span")
    counts = stream.counts()
    try:
        det = validity.DetectorObservation.from_rates(
            counts["blue"] / span, counts["red"] / span, n_blue, n_red, f_br, f_rb
        )
        report["validity"] = validity.validity_report(det)
    except ValueError as exc:
        raise DataError(f"validity budget failed: {exc}") from None
    report["stream"] = {"events": len(stream), "span_s": span, "counts": counts,
                        "events_after_filter": len(bs)}
    manifest = make_manifest("analyze", _opts(args), args.seed, [args.stream], [args.out], _opts(args))
    emit_report(report, manifest, args.out)
    return EXIT_OK


def _pick(explicit, from_stream, default):
    if explicit is not None:
        return float(explicit)
    if from_stream is not None:
        return float(from_stream)
    return default


def cmd_validity(args) -> int:
    if args.q_alice is not None or args.q_bob is not None:
        if args.q_alice is None or args.q_bob is None:
            raise ConfigError("--q-alice and --q-bob go together")
        report = {"bell": validity.bell_budget(args.q_alice, args.q_bob).to_dict()}
    elif args.r_blue is not None or args.r_red is not None:
        if args.r_blue is None or args.r_red is None:
            raise ConfigError("--r-blue and --r-red go together")
        try:
            det = validity.DetectorObservation.from_rates(
                args.r_blue, args.r_red, args.n_blue, args.n_red, args.f_b_to_r, args.f_r_to_b
            )
            report = {"detector": validity.validity_report(det)}
        except ValueError as exc:
            raise DataError(str(exc)) from None
    else:
        obs = _load_catalog(args.catalog)
        sources, skipped = [], []
        for o in obs:
            try:
                det = validity.DetectorObservation.from_rates(
                    o.blue_rate, o.red_rate, o.background_blue, o.background_red, args.f_b_to_r, args.f_r_to_b
                )
                sources.append({"name": o.name, **validity.validity_report(det)})
            except ValueError as exc:
                log.warning("skipping %s: %s", o.name, exc)
                skipped.append({"name": o.name, "reason": str(exc)})
        pairs = []
        for a, b in itertools.combinations(sources, 2):
            bb = validity.bell_budget(a["budget"]["q_detector"], b["budget"]["q_detector"])
            pairs.append({"alice": a["name"], "bob": b["name"], **bb.to_dict()})
        pairs.sort(key=lambda p: -p["q_joint"])
        report = {"sources": sources, "passing_pairs": [p for p in pairs if p["passes_threshold"]],
                  "skipped": skipped}
    manifest = make_manifest("validity", _opts(args), None, [args.catalog] if args.catalog else [], [args.out], _opts(args))
    emit_report(report, manifest, args.out)
    return EXIT_OK


def _load_catalog(path):
    if not path:
        return calibration.quasar_catalog()
    try:
        return calibration.read_catalog(path)
    except (OSError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from None


def cmd_calibrate(args) -> int:
    obs = _load_catalog(args.catalog)
    try:
        fit = calibration.fit_magnitude_rate(obs, args.area)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    report = {"fit": fit.to_dict(), "collecting_area_m2": args.area}
    if args.predict:
        report["predictions"] = {str(m): float(calibration.predict_rate(fit, m)) for m in args.predict}
    manifest = make_manifest("calibrate", _opts(args), None, [args.catalog] if args.catalog else [], [args.out], _opts(args))
    emit_report(report, manifest, args.out)
    return EXIT_OK


def cmd_crosstalk(args) -> int:
    grid = spectral.WavelengthGrid.uniform(args.grid_min, args.grid_max, args.grid_step)
    if args.spectrum:
        spec = spectral.load_spectrum(args.spectrum)
    elif args.temperature:
        spec = spectral.blackbody_spectrum(args.temperature, grid)
    else:
        spec = spectral.composite_quasar_spectrum()
    spec = spectral.redshift_spectrum(spec, args.redshift, grid)
    n_in = spectral.attenuate(spec, spectral.default_atmosphere(grid), args.airmass)
    resp = spectral.default_instrument(grid, args.cutoff)
    f = spectral.crosstalk_fractions(n_in, resp)
    rates = spectral.expected_arm_rates(n_in, resp, 1.0)
    report = {"f_b_to_r": f.f_b_to_r, "f_r_to_b": f.f_r_to_b,
              "relative_arm_rates": {"blue": rates[0], "red": rates[1]}}
    manifest = make_manifest("crosstalk", _opts(args), None, [], [args.out], _opts(args))
    emit_report(report, manifest, args.out)
    return EXIT_OK


def cmd_eraser(args) -> int:
    needed = args.phases * args.trials
    if args.bits:
        bs = _load_bits(args.bits, args)
    else:
        rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(1,)))
        bs = bitmod.BitStream.from_array((rng.random(needed) < args.p1).astype(np.uint8))
    phases = np.linspace(0.0, 2.0 * math.pi, args.phases, endpoint=False)
    log_rows = [] if args.trial_log else None
    try:
        rep = eraser.simulate_eraser(bs, phases, args.trials, args.seed, log_rows)
    except eraser.BitExhaustionError as exc:
        raise DataError(str(exc)) from None
    if args.trial_log:
        with open(args.trial_log, "w") as fh:
            fh.write("phase basis_bit env signal\n")
            for phi, b, e, s in log_rows:
                fh.write(f"{phi:.6f} {b} {e} {s}\n")
    manifest = make_manifest("eraser", _opts(args), args.seed, [args.bits] if args.bits else [], [args.out], _opts(args))
    emit_report(rep.to_dict(), manifest, args.out)
    return EXIT_OK


# file arguments are recorded as manifest inputs/outputs, not as options
_PATH_ARGS = ("func", "verbose", "out", "stream", "input", "config", "catalog", "bits", "trial_log", "text", "report")


def _opts(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _PATH_ARGS}


# ---------------------------------------------------------------- parser


def _add_extraction(p):
    p.add_argument("--scheme", choices=("color", "time_parity"), default="color")
    p.add_argument("--digit-period-ns", type=float, default=10.0,
                   help="parity period for the time_parity scheme")
    p.add_argument("--filter-window-ns", type=float, default=420.0,
                   help="cross-channel dead-time window; 0 disables")


def _add_mi(p):
    p.add_argument("--depths", default="1-6", help="lookback depths, e.g. 1-6 or 1,2,4")
    p.add_argument("--surrogates", type=int, default=mi.DEFAULT_SURROGATES)
    p.add_argument("--surrogate-method", choices=("bernoulli", "permutation"), default="bernoulli")
    p.add_argument("--z-crit", type=float, default=mi.DEFAULT_Z_CRIT)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tables", action="store_true", help="include conditional-probability tables")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="arng", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--version", action="version", version=f"arng {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a tag-stream file from a scenario config")
    p.add_argument("config")
    p.add_argument("out")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--text", help="also write a plain-text (channel tick) export")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("extract", help="turn a tag stream into bits")
    p.add_argument("stream")
    p.add_argument("out")
    p.add_argument("--format", choices=("packed", "ascii"), default="packed")
    p.add_argument("--report", help="write an imbalance report JSON here")
    _add_extraction(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("export-nist", help="write ASCII 0/1 bits for the NIST STS")
    p.add_argument("stream")
    p.add_argument("out")
    _add_extraction(p)
    p.set_defaults(func=cmd_export_nist)

    p = sub.add_parser("analyze-mi", help="bias-corrected mutual information with surrogate nulls")
    p.add_argument("input", help="bit file (packed/ASCII) or tag-stream file")
    p.add_argument("--out", default="-")
    _add_extraction(p)
    _add_mi(p)
    p.set_defaults(func=cmd_analyze_mi)

    p = sub.add_parser("analyze", help="extraction, filtering, MI and validity in one report")
    p.add_argument("stream")
    p.add_argument("--out", default="-")
    p.add_argument("--noise-blue", type=float)
    p.add_argument("--noise-red", type=float)
    p.add_argument("--f-b-to-r", type=float)
    p.add_argument("--f-r-to-b", type=float)
    _add_extraction(p)
    _add_mi(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("validity", help="valid-setting budget for a detector or catalogue")
    p.add_argument("--catalog", help="observation catalogue (default: bundled quasars)")
    p.add_argument("--r-blue", type=float)
    p.add_argument("--r-red", type=float)
    p.add_argument("--n-blue", type=float, default=61.0)
    p.add_argument("--n-red", type=float, default=153.0)
    p.add_argument("--f-b-to-r", type=float, default=0.002)
    p.add_argument("--f-r-to-b", type=float, default=0.002)
    p.add_argument("--q-alice", type=float)
    p.add_argument("--q-bob", type=float)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_validity)

    p = sub.add_parser("calibrate", help="fit log10(rate) against V magnitude")
    p.add_argument("--catalog")
    p.add_argument("--area", type=float, default=1.0, help="collecting area in m^2")
    p.add_argument("--predict", type=float, nargs="*", help="V magnitudes to predict")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("crosstalk", help="wrong-way fractions from the bundled spectral models")
    p.add_argument("--redshift", type=float, default=1.083)
    p.add_argument("--airmass", type=float, default=1.1)
    p.add_argument("--temperature", type=float, help="use a blackbody source instead of the quasar")
    p.add_argument("--spectrum", help="rest-frame spectrum table to use instead")
    p.add_argument("--cutoff", type=float, default=spectral.DEFAULT_CUTOFF_NM)
    p.add_argument("--grid-min", type=float, default=300.0)
    p.add_argument("--grid-max", type=float, default=1200.0)
    p.add_argument("--grid-step", type=float, default=0.5)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_crosstalk)

    p = sub.add_parser("eraser", help="Monte Carlo quantum eraser driven by ARNG bits")
    p.add_argument("--bits", help="bit file or tag stream; default synthetic Bernoulli(p1)")
    p.add_argument("--p1", type=float, default=0.74)
    p.add_argument("--phases", type=int, default=8)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trial-log")
    p.add_argument("--out", default="-")
    _add_extraction(p)
    p.set_defaults(func=cmd_eraser)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"arng: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"arng: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
