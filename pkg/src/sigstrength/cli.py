"""Command-line entry point: simulate, analyze, similarity, sweep, serve.

Exit codes: 0 success, 2 validation/usage, 3 transport, 4 internal.
Data files are deterministic for a given config and seed.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config
from .exceptions import (
    ConfigError,
    SigstrengthError,
    TransportError,
)
from .instrument import BenchPreset, serve
from .security import MODES, MeasurementSet, compare
from .signalgen import synthesize
from .similarity import similarity
from .sweep import run_sweep, simulate_capture
from .trace import read_trace, spectrum, write_trace

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_TRANSPORT = 3
EXIT_INTERNAL = 4


def _parse_address(text: str):
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"address must be host:port, got {text!r}")
    return host, int(port)


def _apply_common_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "mode", None) is not None:
        cfg.mode = args.mode
    return cfg


def _require(condition: bool, message: str):
    if not condition:
        raise ConfigError(message)


def cmd_simulate(args) -> int:
    cfg = _apply_common_overrides(load_config(args.config), args)
    _require(cfg.adc is not None, "simulate requires an [adc] section")
    _require(cfg.am is not None, "simulate requires an [am] section")
    n_samples = int(cfg.simulate.get(
        "n_samples",
        round(cfg.simulate.get("duration", 0.1) * cfg.adc.f_s),
    ))
    _require(n_samples >= 2, "simulate.duration/n_samples too short")
    input_rate = cfg.simulate.get("input_rate")

    dig = simulate_capture(cfg.adc, cfg.channel, cfg.tone, cfg.am, cfg.noise,
                           cfg.seed, n_samples, input_rate=input_rate)
    out = dig.to_trace()
    trace_path = f"{args.out}_trace.csv"
    spectrum_path = f"{args.out}_spectrum.csv"
    write_trace(out, trace_path)
    spectrum(out).to_csv(spectrum_path)

    # Noise estimate from a repeated capture, the way a bench operator would.
    repeat = simulate_capture(cfg.adc, cfg.channel, cfg.tone, cfg.am, cfg.noise,
                              cfg.seed + 1, n_samples, input_rate=input_rate)
    sigma_est = float(np.std(out.samples - repeat.volts) / np.sqrt(2.0))

    ideal = synthesize(cfg.tone, cfg.adc.f_s, n_samples / cfg.adc.f_s)
    try:
        rho = similarity(out, ideal).rho
    except SigstrengthError:
        rho = float("nan")
    print(f"q {dig.q!r}")
    print(f"sigma_estimate {sigma_est!r}")
    print(f"similarity {rho!r}")
    print(f"wrote {trace_path} {spectrum_path}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    if len(args.traces) < 2:
        raise ConfigError("analyze needs at least 2 trace files")
    cfg = _apply_common_overrides(load_config(args.config), args)
    traces = []
    for path in args.traces:
        try:
            traces.append(read_trace(path))
        except SigstrengthError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    first = traces[0]
    for path, t in zip(args.traces, traces):
        if t.sample_rate != first.sample_rate or len(t) != len(first):
            raise ConfigError(
                f"{path}: rate/length mismatch against {args.traces[0]}"
            )
    measurements = MeasurementSet.from_traces(traces,
                                              n_estimation=args.n_estimation)
    ideal = synthesize(cfg.tone, first.sample_rate, first.duration)
    ideals = {cfg.tone.kind: ideal}
    if measurements.validation:
        ideals["validation"] = measurements.validation[0]
    q = cfg.adc.q if cfg.adc is not None else 0.0
    report = compare(measurements, ideals, mode=cfg.mode, q=q)
    payload = report.to_dict()
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"sigma_noise {report.sigma_noise!r}")
    for name in sorted(report.eps_selective):
        print(f"eps_selective[{name}] {report.eps_selective[name]!r}")
    print(f"eps_universal {report.eps_universal!r}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_similarity(args) -> int:
    ideal = read_trace(args.ideal)
    rows = []
    for path in args.traces:
        measured = read_trace(path)
        result = similarity(measured, ideal)
        rows.append((path, result.rho, result.lag))
        print(f"{path} rho {result.rho!r} lag {result.lag}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("trace,rho,lag\n")
            for path, rho, lag in rows:
                fh.write(f"{path},{rho!r},{lag}\n")
        print(f"wrote {args.csv}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _apply_common_overrides(load_config(args.config), args)
    _require(cfg.adc is not None, "sweep requires an [adc] section")
    axes = cfg.sweep_axes()
    backend = "remote" if args.remote else "inprocess"
    remote = _parse_address(args.remote) if args.remote else None
    n_samples = int(cfg.sweep.get("n_samples", 1024))
    parallelism = int(cfg.sweep.get("parallelism", 1))
    print(
        f"sweep {len(axes.carriers)}x{len(axes.powers)}x{len(axes.depths)} "
        f"cells via {backend}",
        file=sys.stderr,
    )
    grid = run_sweep(cfg.adc, cfg.channel, cfg.tone, axes, cfg.noise,
                     seed=cfg.seed, backend=backend, remote=remote,
                     n_samples=n_samples,
                     input_rate=cfg.sweep.get("input_rate"),
                     parallelism=parallelism)
    csv_path = f"{args.out}.csv"
    json_path = f"{args.out}.json"
    grid.to_csv(csv_path)
    grid.to_json(json_path)
    failures = [c for c in grid.cells if c.error is not None]
    print(f"wrote {csv_path} {json_path} ({len(failures)} failed cells)",
          file=sys.stderr)
    return EXIT_OK


def cmd_serve(args) -> int:
    cfg = load_config(args.config) if args.config else None
    if cfg is not None and cfg.adc is not None:
        preset_cfg = BenchPreset(
            adc=cfg.adc,
            channel=cfg.channel,
            noise=cfg.noise,
            tone_kind=cfg.tone.kind,
            f_m=cfg.tone.f_m,
            f_c=cfg.am.f_c if cfg.am else 1e6,
            depth=cfg.am.depth if cfg.am else 1.0,
            v_pk=cfg.am.v_pk if cfg.am else 0.5,
            seed=cfg.seed,
        )
    else:
        raise ConfigError("serve requires a config with an [adc] section")
    address = _parse_address(args.bind)
    server = serve(address, preset_cfg)
    print(f"sigstrength-bench listening on "
          f"{server.address[0]}:{server.address[1]}", file=sys.stderr)
    try:
        server._thread.join()
    except KeyboardInterrupt:
        server.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigstrength",
        description="Signal-injection simulation and security thresholds",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--mode", choices=MODES, default=None)

    p_sim = sub.add_parser("simulate", help="run the injection pipeline once")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", default="simulate")
    add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_an = sub.add_parser("analyze", help="critical thresholds from traces")
    p_an.add_argument("traces", nargs="+")
    p_an.add_argument("--config", required=True)
    p_an.add_argument("--out", default="report.json")
    p_an.add_argument("--n-estimation", type=int, default=None)
    add_common(p_an)
    p_an.set_defaults(func=cmd_analyze)

    p_si = sub.add_parser("similarity", help="correlation against an ideal")
    p_si.add_argument("traces", nargs="+")
    p_si.add_argument("--ideal", required=True)
    p_si.add_argument("--csv", default=None)
    p_si.set_defaults(func=cmd_similarity)

    p_sw = sub.add_parser("sweep", help="carrier/power/depth campaign")
    p_sw.add_argument("--config", required=True)
    p_sw.add_argument("--out", default="sweep")
    p_sw.add_argument("--remote", default=None, metavar="HOST:PORT")
    add_common(p_sw)
    p_sw.set_defaults(func=cmd_sweep)

    p_sv = sub.add_parser("serve", help="run the mock bench server")
    p_sv.add_argument("--bind", required=True, metavar="HOST:PORT")
    p_sv.add_argument("--config", required=True)
    p_sv.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (ConfigError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SigstrengthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - safety net
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
