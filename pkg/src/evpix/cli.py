"""evpix command line.

    evpix simulate --config c.json --stimulus disk.json --out ev.bin
    evpix render --in ev.bin --window-ms 10 --full-scale 3 --out-dir frames/
    evpix recommend --data-priority sparse --sensor-motion static ...
    evpix sweep illuminance --out bathtub.csv
    evpix stimulus --stimulus disk.json --out-dir preview/
    evpix trace --sine-freq 5 --contrast 0.62 --out trace.csv

Exit status is 0 on success, 1 on a runtime error and 2 on a usage error.
Errors also go to stderr as one JSON line.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from evpix import __version__, characterize, config, eventio
from evpix.array import ArrayConfig, simulate
from evpix.bias import currents_for_thresholds, thresholds_from_biases
from evpix.errors import EvpixError
from evpix.params import BiasConfig, PixelParams
from evpix.pgm import write_pgm
from evpix.recommend import CRITERIA, Recommender, ScenarioCriteria, recommended_bias, to_tweaks
from evpix.stimulus import log_sine
from evpix.trace import trace_pixel

logger = logging.getLogger("evpix")


def _load_sim(args) -> config.SimConfig:
    sim = config.load(args.config) if args.config else config.SimConfig(ArrayConfig(seed=config.seed_override(0)))
    stim = config.load_stimulus(args.stimulus) if getattr(args, "stimulus", None) else sim.stimulus
    arr = sim.array
    if stim is not None and args.config is None:
        arr = dataclasses.replace(arr, width=stim.width, height=stim.height)
    if getattr(args, "seed", None) is not None:
        arr = dataclasses.replace(arr, seed=args.seed)
    if getattr(args, "workers", None):
        arr = dataclasses.replace(arr, workers=args.workers)
    return config.SimConfig(arr, stim)


def cmd_simulate(args) -> int:
    sim = _load_sim(args)
    if sim.stimulus is None:
        raise EvpixError("no stimulus: pass --stimulus or put one in the config")
    stream = simulate(sim.stimulus, sim.array, duration=args.duration)
    eventio.write_events(args.out, stream)
    logger.info("%d events -> %s", len(stream), args.out)
    return 0


def cmd_render(args) -> int:
    stream = eventio.read_events(args.input)
    window = args.window_ms / 1e3
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    starts = eventio.window_starts(stream, window, args.t_end)
    for i, t0 in enumerate(starts):
        img = eventio.render_accumulation(stream, float(t0), window, args.full_scale)
        write_pgm(out / f"frame_{i:05d}.pgm", img)
    logger.info("%d frames -> %s", len(starts), out)
    return 0


def cmd_recommend(args) -> int:
    criteria = ScenarioCriteria(**{name: getattr(args, name) for name in CRITERIA})
    rec = (Recommender.from_file(args.rules) if args.rules else Recommender())(criteria)
    tw = to_tweaks(rec)
    print(f"bandwidth:   {rec.bandwidth}")
    print(f"sensitivity: {rec.sensitivity}")
    print(f"refractory:  {rec.refractory}")
    print(f"tweaks: threshold {tw.threshold_tweak:+g}, i_sf x{tw.bandwidth_scaler:g}, "
          f"max firing rate {tw.max_firing_rate_tweak:+g}")
    print("why:")
    for line in rec.rationale:
        print(f"  - {line}")
    if args.emit_config:
        cfg = ArrayConfig(bias=recommended_bias(rec))
        config.save(args.emit_config, cfg)
        logger.info("config -> %s", args.emit_config)
    return 0


def cmd_sweep(args) -> int:
    base = config.load(args.config).array if args.config else None
    size = dict(width=args.size, height=args.size, workers=args.workers or 1)

    def cfg_for(bias):
        if base is not None:
            return base
        return ArrayConfig(bias=bias, seed=config.seed_override(0), **size)

    grid = np.array(args.grid, dtype=float) if args.grid else None
    if args.kind == "illuminance":
        table = characterize.sweep_noise_vs_illuminance(
            cfg_for(BiasConfig(i_pr=30e-12, i_sf=15e-12)), grid, duration=args.duration)
    elif args.kind == "ipr":
        table = characterize.sweep_noise_vs_ipr(cfg_for(BiasConfig(i_sf=30e-12)), grid, args.lux, args.duration)
    elif args.kind == "threshold":
        table = characterize.sweep_noise_vs_threshold(
            cfg_for(BiasConfig(i_pr=3e-9, i_sf=15e-12)), grid, args.lux, args.duration)
    elif args.kind == "refractory":
        table = characterize.sweep_refractory(grid if grid is not None else np.linspace(-0.8, 1.0, 10))
    else:
        table = characterize.sweep_threshold(grid if grid is not None else np.linspace(-1.0, 1.0, 9))
    table.write_csv(args.out, gnuplot=args.gnuplot)
    logger.info("%d rows -> %s", len(table.rows), args.out)
    return 0


def cmd_stimulus(args) -> int:
    stim = config.load_stimulus(args.stimulus)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    top = stim.max_lux() or 1.0
    times = np.arange(0.0, stim.duration, 1.0 / args.fps)
    for i, t in enumerate(times):
        lux = stim.field(float(t))
        write_pgm(out / f"stim_{i:05d}.pgm", np.rint(np.clip(lux / top, 0, 1) * 255).astype(np.uint8))
    logger.info("%d preview frames -> %s", len(times), out)
    return 0


def cmd_trace(args) -> int:
    if args.config:
        sim = config.load(args.config)
        bias, params = sim.array.bias, sim.array.params
    else:
        bias, params = BiasConfig(), PixelParams()
    if args.theta_on is not None or args.theta_off is not None:
        on, off = thresholds_from_biases(bias, params)
        on = on if args.theta_on is None else args.theta_on
        off = off if args.theta_off is None else args.theta_off
        bias = currents_for_thresholds(on, off, bias, params)
    if args.stimulus:
        stim = config.load_stimulus(args.stimulus)
    else:
        stim = log_sine(1, 1, args.duration, args.base_lux, args.sine_freq, args.contrast, args.phase)
    tr = trace_pixel(
        stim, args.x, args.y, bias, params, dt=args.dt, duration=args.duration,
        noise_enabled=args.noise, leak_enabled=args.leak, seed=args.seed or config.seed_override(0),
    )
    eventio.write_trace(args.out, tr.rows())
    for ev in tr.events(args.x, args.y):
        print(f"{ev.t} {'ON' if ev.polarity > 0 else 'OFF'}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": "UsageError", "message": message}), file=sys.stderr)
        self.exit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evpix", description="Behavioral event-camera pixel simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="stimulus + config -> event file")
    p.add_argument("--config", help="JSON config document")
    p.add_argument("--stimulus", help="stimulus JSON (overrides the config's)")
    p.add_argument("--out", required=True, help="event file; .csv for CSV, anything else binary")
    p.add_argument("--duration", type=float, help="seconds (default: the stimulus's)")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("render", help="event file -> PGM accumulation frames")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--window-ms", type=float, default=10.0)
    p.add_argument("--full-scale", type=int, default=3)
    p.add_argument("--t-end", type=float, help="seconds (default: last event)")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("recommend", help="scenario -> bias tweaks")
    for name, values in CRITERIA.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, choices=values, required=True)
    p.add_argument("--rules", help="alternative rules file")
    p.add_argument("--emit-config", help="write the recommended config document here")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("sweep", help="characterization sweep -> CSV")
    p.add_argument("kind", choices=["illuminance", "ipr", "threshold", "refractory", "threshold-table"])
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="use this array config instead of the sweep's defaults")
    p.add_argument("--grid", type=float, nargs="+", help="grid values (lux, amperes or tweaks)")
    p.add_argument("--lux", type=float, default=0.04, help="fixed illuminance for ipr/threshold sweeps")
    p.add_argument("--duration", type=float, default=characterize.MIN_DURATION_S)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--workers", type=int)
    p.add_argument("--gnuplot", action="store_true", help="whitespace-separated data instead of CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stimulus", help="stimulus -> preview PGM frames")
    p.add_argument("--stimulus", required=True)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_stimulus)

    p = sub.add_parser("trace", help="single-pixel per-step dump")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--stimulus", help="stimulus JSON (default: a log sine)")
    p.add_argument("--sine-freq", type=float, default=5.0)
    p.add_argument("--contrast", type=float, default=0.62, help="peak-to-peak, log-e units")
    p.add_argument("--phase", type=float, default=math.pi / 2, help="radians; the default starts at a peak")
    p.add_argument("--base-lux", type=float, default=100.0)
    p.add_argument("--duration", type=float, default=0.25)
    p.add_argument("--theta-on", type=float)
    p.add_argument("--theta-off", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--x", type=int, default=0)
    p.add_argument("--y", type=int, default=0)
    p.add_argument("--noise", action="store_true")
    p.add_argument("--leak", action="store_true")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (EvpixError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
