"""Command-line surface tying the model, simulator and analysis together.

Subcommands
-----------
wavepacket   delay curve CSV + SVG + width summary
spectrum     frequency spectrum CSV + SVG + linewidth summary
simulate     stochastic run: event streams, histogram, fit report, SBR, g2
fit          fit an external histogram CSV (delay_ns, counts)
sweep        figures of merit over the pump/temperature grid (CSV + SVG panels)
check        run the acceptance criteria and print a pass/fail table

Exit codes: 0 success, 1 usage or configuration error, 2 numeric failure,
3 acceptance failure.  Errors are emitted as JSON on stderr.  The default
output directory is ``$BIPHOTON_OUT`` or the current directory.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__, acceptance, analysis, fitting, waveform
from .analysis import MONTE_CARLO, THEORY, OperatingPoint
from .config import (RunConfig, RunManifest, atomic_write, config_hash,
                     load_config, serialize_config, validate_config)
from .errors import BiphotonError, ConfigError
from .figures import FigureStyle, Series, render_figure, render_sweep_panels

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_ACCEPTANCE = 0, 1, 2, 3


def _parser():
    p = argparse.ArgumentParser(
        prog="biphoton",
        description="photon-pair source model, counting simulator and analysis")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--config", metavar="PATH", help="YAML configuration file")
    p.add_argument("--seed", type=int, metavar="N", help="override sim.seed")
    p.add_argument("--out", metavar="DIR",
                   help="output directory (default $BIPHOTON_OUT or '.')")
    p.add_argument("--mode", choices=[THEORY, MONTE_CARLO],
                   help="sweep evaluation mode")
    p.add_argument("--format", action="append", choices=["csv", "json", "svg"],
                   help="restrict artifact formats (repeatable)")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND")
    sub.add_parser("wavepacket", help="emit the delay curve")
    sub.add_parser("spectrum", help="emit the frequency spectrum")
    sub.add_parser("simulate", help="run the counting simulation")
    fp = sub.add_parser("fit", help="fit an external histogram CSV")
    fp.add_argument("histogram", help="CSV with columns delay_ns, counts")
    sub.add_parser("sweep", help="figures of merit over the grid")
    sub.add_parser("check", help="run the acceptance suite")
    return p


class _Emitter:
    """Collects artifacts, writes them atomically, tracks the manifest."""

    def __init__(self, out_dir, cfg: RunConfig, formats):
        self.dir = out_dir
        self.formats = formats
        self.manifest = RunManifest(config_hash=config_hash(cfg))
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.dir, name)

    def want(self, fmt):
        return fmt in self.formats

    def write(self, name, data):
        path = self.path(name)
        atomic_write(path, data)
        self.manifest.add(path)
        return path

    def csv(self, name, header, rows):
        if not self.want("csv"):
            return None
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_csv_cell(v) for v in row))
        return self.write(name, "\n".join(lines) + "\n")

    def json(self, name, obj):
        if not self.want("json"):
            return None
        return self.write(name, json.dumps(obj, indent=2, sort_keys=True))

    def svg(self, name, text):
        if not self.want("svg"):
            return None
        return self.write(name, text)

    def finish(self):
        self.manifest.write(self.path("manifest.json"))


def _csv_cell(v):
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else validate_config({})
    over = {}
    if args.seed is not None:
        over.setdefault("sim", dict(cfg.sim))["seed"] = args.seed
    if args.out is not None:
        over.setdefault("output", dict(cfg.output))["directory"] = args.out
    if args.format:
        over.setdefault("output", dict(cfg.output))["formats"] = list(
            dict.fromkeys(args.format))
    if over:
        merged = cfg.as_dict()
        merged.update(over)
        cfg = validate_config(merged)
    return cfg


def _out_dir(cfg: RunConfig, args):
    if args.out:
        return args.out
    if cfg.output["directory"] != ".":
        return cfg.output["directory"]
    return os.environ.get("BIPHOTON_OUT", ".")


def cmd_wavepacket(cfg, em):
    p = cfg.source_params()
    wp = waveform.wavepacket(p)
    em.csv("wavepacket.csv", ["x", "value"],
           zip(wp.tau_grid.tolist(), wp.values.tolist()))
    t, y = acceptance.theory_histogram(p)
    fit = fitting.fit_wavepacket(delays=t, counts=y, contrast=0.0, weighted=False,
                                 compute_linewidth=False)
    lw = fitting.linewidth_from_curve(wp.tau_grid, wp.values)
    em.csv("wavepacket_summary.csv",
           ["fwhm_ns", "fwhm_raw_ns", "linewidth_khz", "integral_per_s"],
           [(fit.temporal_fwhm * 1e9, waveform.fwhm(wp.tau_grid, wp.values) * 1e9,
             lw / 1e3, waveform.integrated_rate(wp))])
    em.svg("wavepacket.svg", render_figure(
        [Series("G2", wp.tau_grid * 1e9, wp.values)],
        FigureStyle(title="pair wave packet", xlabel="delay (ns)",
                    ylabel="coincidence density (1/s^2)")))


def cmd_spectrum(cfg, em):
    p = cfg.source_params()
    sp = waveform.spectrum(p)
    wp = waveform.wavepacket(p)
    lw = fitting.linewidth_from_curve(wp.tau_grid, wp.values)
    em.csv("spectrum.csv", ["x", "value"],
           zip(sp.delta_grid.tolist(), sp.values.tolist()))
    em.csv("spectrum_summary.csv", ["fwhm_khz", "linewidth_khz"],
           [(sp.fwhm / 1e3, lw / 1e3)])
    sel = np.abs(sp.delta_grid) < 50e6 * 2 * math.pi
    em.svg("spectrum.svg", render_figure(
        [Series("F", sp.delta_grid[sel] / (2 * math.pi * 1e6), sp.values[sel])],
        FigureStyle(title="pair spectrum", xlabel="detuning (MHz)",
                    ylabel="spectral density")))


def cmd_simulate(cfg, em):
    sim = cfg.sim
    op = OperatingPoint(pump_mw=max(cfg.sweep["pump_mw"]),
                        temp_c=max(cfg.sweep["temps_c"]),
                        coupling_mw=cfg.sweep["coupling_mw"])
    mc = analysis.run_operating_point(
        op, cfg.calibration_obj(), cfg.detector_config(),
        duration=sim["duration_s"], seed=sim["seed"],
        statistics_mode=sim["statistics_mode"],
        bin_width_s=sim["bin_width_s"], window_s=sim["window_s"],
        estimate_g2=True)
    hist = mc.histogram
    for name, stream in (("anti_stokes", mc.anti_stokes), ("stokes", mc.stokes)):
        buf = io.BytesIO()
        np.save(buf, stream)
        em.write(f"{name}.npy", buf.getvalue())
        if em.want("csv") and sim["duration_s"] <= 30.0:
            em.csv(f"{name}.csv", ["t_s"], ((t,) for t in stream.tolist()))
    em.csv("histogram.csv", ["delay_ns", "counts"],
           zip((hist.delay_centers * 1e9).tolist(), hist.counts.tolist()))
    em.json("fit_report.json", _fit_report(mc.fit))
    em.json("simulate_summary.json", {
        "sbr": mc.record.sbr,
        "success_probability": mc.success_prob,
        "detected_pair_rate": mc.detected_pair_rate,
        "g2_auto_zero": mc.g2_auto_zero,
        "linewidth_hz": mc.record.linewidth_hz,
        "n_triggers": hist.n_triggers,
        "seed": sim["seed"],
    })
    em.svg("histogram.svg", render_figure(
        [Series("counts", hist.delay_centers * 1e9, hist.counts.astype(float))],
        FigureStyle(title="coincidence histogram", xlabel="delay (ns)",
                    ylabel="counts per bin")))


def cmd_fit(cfg, em, histogram_path):
    data = np.genfromtxt(histogram_path, delimiter=",", names=True)
    delays = np.asarray(data["delay_ns"], dtype=float) * 1e-9
    counts = np.asarray(data["counts"], dtype=float)
    fit = fitting.fit_wavepacket(delays=delays, counts=counts, contrast=0.0)
    em.json("fit_report.json", _fit_report(fit))


def _fit_report(fit):
    cov = fit.covariance
    sigmas = (np.sqrt(np.clip(np.diag(cov), 0, None)).tolist()
              if cov is not None else None)
    report = {name: getattr(fit, name) for name in fitting.PHENO_PARAM_NAMES}
    report.update({
        "uncertainties": dict(zip(fitting.PHENO_PARAM_NAMES, sigmas))
        if sigmas else None,
        "temporal_fwhm_s": fit.temporal_fwhm,
        "linewidth_hz": fit.linewidth_hz,
        "residual_norm": fit.residual_norm,
        "lorentzian_residual": fit.lorentzian_residual,
        "low_contrast": fit.low_contrast,
        "degenerate_plateau": fit.degenerate_plateau,
    })
    return report


SWEEP_COLUMNS = ["pump_mw", "temp_c", "od", "rate_pairs_s", "linewidth_khz",
                 "sbr", "brightness_pairs_s_mhz", "s_product",
                 "background_per_bin", "r_t", "r_s", "mode", "seed"]


def cmd_sweep(cfg, em, mode):
    records = analysis.sweep(
        cfg.operating_points(), cfg.calibration_obj(), cfg.detector_config(),
        mode=mode, duration=cfg.sim["duration_s"], master_seed=cfg.sim["seed"],
        statistics_mode=cfg.sim["statistics_mode"])
    rows = [(r.pump_mw, r.temp_c, r.od_measured, r.generation_rate,
             r.linewidth_hz / 1e3, r.sbr, r.brightness, r.s_product,
             r.background_per_bin, r.r_t, r.r_s, r.mode, r.seed)
            for r in records]
    em.csv("sweep.csv", SWEEP_COLUMNS, rows)
    ok = [r for r in records if not r.error]
    if ok and em.want("svg"):
        panels = [("generation_rate", "rate (pairs/s)", False),
                  ("sbr", "signal-to-background", True),
                  ("linewidth_hz", "linewidth (Hz)", False),
                  ("brightness", "brightness (pairs/s/MHz)", False),
                  ("s_product", "brightness x SBR", False)]
        for quantity, label, logy in panels:
            em.svg(f"sweep_{quantity}.svg", render_sweep_panels(
                ok, quantity, FigureStyle(title=label, xlabel="pump power (mW)",
                                          ylabel=label, log_y=logy)))
    errors = [r for r in records if r.error]
    if errors:
        em.json("sweep_errors.json",
                [{"pump_mw": r.pump_mw, "temp_c": r.temp_c, "error": r.error}
                 for r in errors])


def cmd_check(cfg, em):
    results = acceptance.run_all(verbose=True)
    table = [{"number": r.number, "title": r.title, "passed": r.passed,
              "runtime_s": r.runtime_s,
              "checks": [{"name": c.name, "value": c.value,
                          "low": c.low, "high": c.high, "passed": c.passed}
                         for c in r.checks]} for r in results]
    em.json("acceptance.json", table)
    n_fail = sum(not r.passed for r in results)
    print(f"\n{len(results) - n_fail}/{len(results)} criteria passed")
    return EXIT_ACCEPTANCE if n_fail else EXIT_OK


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if not args.command:
        parser.print_help()
        return EXIT_USAGE
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        _err("config", exc)
        return EXIT_USAGE
    em = _Emitter(_out_dir(cfg, args), cfg,
                  args.format or cfg.output["formats"])
    try:
        if args.command == "wavepacket":
            cmd_wavepacket(cfg, em)
        elif args.command == "spectrum":
            cmd_spectrum(cfg, em)
        elif args.command == "simulate":
            cmd_simulate(cfg, em)
        elif args.command == "fit":
            cmd_fit(cfg, em, args.histogram)
        elif args.command == "sweep":
            code = cmd_sweep(cfg, em, args.mode or THEORY) or EXIT_OK
            em.finish()
            return code
        elif args.command == "check":
            code = cmd_check(cfg, em)
            em.finish()
            return code
        else:
            parser.print_help()
            return EXIT_USAGE
    except (ConfigError, FileNotFoundError) as exc:
        _err("usage", exc)
        return EXIT_USAGE
    except (BiphotonError, ValueError, np.linalg.LinAlgError) as exc:
        _err("numeric", exc)
        return EXIT_NUMERIC
    em.finish()
    return EXIT_OK


def _err(kind, exc):
    sys.stderr.write(json.dumps(
        {"error": {"kind": kind, "type": type(exc).__name__,
                   "message": str(exc)}}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
