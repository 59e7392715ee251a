"""Command-line front end: scenario runner and verification harness.

Subcommands
-----------
spectrum   scattering and delay quantities over a detuning sweep
decay      stored-energy decay after source turn-off, per coupling strength
pulse      pulse transit through a barrier (bulk, overlay and front records)
hartman    delay saturation with barrier length (photonic or quantum)
quantum    quantum-barrier delay quantities over an energy sweep
verify     run every invariant suite and write a manifest

All data files are CSV (or JSON) with floats at 17 significant digits so
repeated runs are byte-identical; each run writes a manifest that echoes
the fully resolved configuration and every tolerance used.  Infinite flux
delays serialize as the field ``inf``.

Exit codes: 0 success, 1 verification failure, 2 I/O error,
3 simulation-quality failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, cmt, delays, quantum, tdsim, verify
from .cmt import BarrierSpec
from .delays import SimulationQualityError
from .quantum import QBarrierSpec
from .tdsim import Grid, SourceSpec

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_IO_ERROR = 2
EXIT_SIM_QUALITY = 3

_GAUSS_SIGMA_PER_FWHM = 1.0 / (2.0 * math.sqrt(math.log(2.0)))


# ---------------------------------------------------------------------------
# small shared helpers
# ---------------------------------------------------------------------------

def _worker_count(n_items: int) -> int:
    env = os.environ.get("EVLAB_THREADS", "")
    if env.strip():
        try:
            limit = max(1, int(env))
        except ValueError:
            raise SystemExit(f"EVLAB_THREADS must be an integer, got {env!r}")
    else:
        limit = os.cpu_count() or 1
    return max(1, min(limit, n_items))


def _pmap(fn, items):
    """Map preserving input order; sweep points fan out across threads."""
    items = list(items)
    workers = _worker_count(len(items))
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _jsonable(value):
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
    return value


def write_table(path: Path, columns: list[str], rows, fmt: str = "csv") -> None:
    if fmt == "csv":
        lines = [",".join(columns)]
        lines.extend(",".join(_fmt(v) for v in row) for row in rows)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif fmt == "json":
        payload = {"columns": columns,
                   "rows": [[_jsonable(v) for v in row] for row in rows]}
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def write_manifest(path: Path, scenario: str, config: dict, files: list[str],
                   checks: list[dict] | None = None, metrics: dict | None = None,
                   runtime_seconds: float | None = None) -> dict:
    manifest = {
        "scenario": scenario,
        "version": __version__,
        "config": {k: _jsonable(v) for k, v in sorted(config.items())},
        "files": files,
    }
    if metrics is not None:
        manifest["metrics"] = {k: _jsonable(v) for k, v in sorted(metrics.items())}
    if checks is not None:
        manifest["checks"] = checks
        manifest["all_passed"] = all(c["passed"] for c in checks)
    if runtime_seconds is not None:
        # deliberately absent from verify manifests, which must be
        # byte-reproducible across runs
        manifest["runtime_seconds"] = round(runtime_seconds, 3)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return manifest


def _gnuplot_script(out: Path, columns: list[str]) -> str:
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set grid",
        f"# data: {out.name}",
    ]
    plots = ", ".join(f"'{out.name}' using 1:{i} with lines"
                      for i in range(2, len(columns) + 1))
    lines.append(f"plot {plots}")
    return "\n".join(lines) + "\n"


def _check_dict(c: verify.CheckResult) -> dict:
    return {"name": c.name, "value": _jsonable(c.value),
            "tolerance": _jsonable(c.tolerance), "passed": c.passed,
            "detail": c.detail}


# ---------------------------------------------------------------------------
# scenario implementations
# ---------------------------------------------------------------------------

def run_spectrum(cfg: dict) -> int:
    spec = BarrierSpec.normalized(cfg["kappa_l"])
    detunings = np.linspace(cfg["detuning_min"], cfg["detuning_max"], cfg["points"])
    if cfg["include_resonances"] and spec.kappa > 0:
        extra = cmt.resonance_detunings(spec, cfg["resonance_count"])
        extra = np.concatenate([-extra[::-1], extra])
        extra = extra[(extra >= detunings[0]) & (extra <= detunings[-1])]
        detunings = np.unique(np.concatenate([detunings, extra]))

    def one(omega: float):
        report = delays.delay_report(spec, float(omega))
        return (omega * spec.length_L / spec.v, report.T2, report.R2,
                report.tau_g / spec.tau0, report.tau_d / spec.tau0,
                report.tau_d / spec.tau0)  # U/U0 equals dwell/tau0

    rows = _pmap(one, detunings)
    columns = ["detuning_norm", "T_mag2", "R_mag2", "group_delay_norm",
               "dwell_norm", "stored_energy_norm"]
    out = Path(cfg["out"])
    started = time.perf_counter()
    write_table(out, columns, rows, cfg["format"])
    files = [out.name]
    if cfg["gnuplot"]:
        gp = out.with_suffix(out.suffix + ".gp")
        gp.write_text(_gnuplot_script(out, columns), encoding="utf-8")
        files.append(gp.name)
    idx_min = int(np.argmin([r[3] for r in rows]))
    write_manifest(out.with_suffix(out.suffix + ".manifest.json"), "spectrum", cfg,
                   files, metrics={
                       "rows": len(rows),
                       "min_group_delay_norm": rows[idx_min][3],
                       "min_group_delay_at_detuning": rows[idx_min][0],
                   },
                   runtime_seconds=time.perf_counter() - started)
    return EXIT_OK


def run_decay(cfg: dict) -> int:
    kappa_list = cfg["kappa_l_list"]
    n_z = cfg["nz"]
    t_off = cfg["t_off"]
    duration = cfg["duration"] if cfg["duration"] is not None else t_off + 6.0
    started = time.perf_counter()

    def one(kappa_l: float):
        spec = BarrierSpec.normalized(kappa_l)
        return tdsim.decay_experiment(spec, t_off=t_off, duration=duration,
                                      n_z=n_z, ramp=cfg["ramp"])

    traces = _pmap(one, kappa_list)
    free_trace = tdsim.decay_experiment(BarrierSpec.normalized(0.0), t_off=t_off,
                                        duration=duration, n_z=n_z, ramp=cfg["ramp"])

    columns = ["vt_over_L"] + [f"U_over_taug_kL{k:g}" for k in kappa_list] \
        + ["U_over_taug_free"]
    times = traces[0].times
    rows = []
    for i, t in enumerate(times):
        row = [t] + [tr.energy[i] for tr in traces] + [free_trace.energy[i]]
        rows.append(tuple(row))
    out = Path(cfg["out"])
    write_table(out, columns, rows, cfg["format"])
    files = [out.name]
    if cfg["gnuplot"]:
        gp = out.with_suffix(out.suffix + ".gp")
        gp.write_text(_gnuplot_script(out, columns), encoding="utf-8")
        files.append(gp.name)

    checks = []
    metrics = {}
    for kappa_l, trace in zip(kappa_list, traces):
        estimate = delays.cavity_lifetime(trace)
        reference = math.tanh(kappa_l) / kappa_l
        deviation = abs(estimate.tau_c - reference) / reference
        metrics[f"tau_c_kL{kappa_l:g}"] = estimate.tau_c
        metrics[f"tau_fit_kL{kappa_l:g}"] = estimate.tau_fit
        metrics[f"tau_ref_kL{kappa_l:g}"] = reference
        checks.append({"name": f"1/e lifetime within 10% (kL={kappa_l:g})",
                       "value": _jsonable(deviation), "tolerance": 0.10,
                       "passed": bool(deviation <= 0.10), "detail": ""})
    write_manifest(out.with_suffix(out.suffix + ".manifest.json"), "decay", cfg,
                   files, checks=checks, metrics=metrics,
                   runtime_seconds=time.perf_counter() - started)
    return EXIT_OK


def run_pulse(cfg: dict) -> int:
    spec = BarrierSpec.normalized(cfg["kappa_l"])
    fwhm = cfg["fwhm"]
    if cfg["t_peak"] is not None:
        t_peak = cfg["t_peak"]
    elif cfg["pulse_shape"] == "gaussian":
        t_peak = 3.0 * fwhm * _GAUSS_SIGMA_PER_FWHM
    else:
        t_peak = fwhm * tdsim._RC_HALFWIDTH_PER_FWHM
    pulse = SourceSpec(kind=cfg["pulse_shape"], fwhm=fwhm, t_peak=t_peak,
                       detuning=cfg["detuning"])
    started = time.perf_counter()
    report = tdsim.pulse_experiment(spec, pulse, n_z=cfg["nz"],
                                    duration=cfg["duration"])
    series = report.series
    grid = Grid.for_barrier(spec, cfg["nz"])

    reference = np.array([abs(pulse.envelope(t - spec.tau0)) ** 2 * spec.v
                          for t in series.times])
    peak_in = series.P_i.max()
    peak_out = series.P_t.max()
    aligned = np.interp(series.times + report.peak_delay_transmitted,
                        series.times, series.P_t)
    columns = ["t_norm", "P_incident", "P_reference", "P_transmitted",
               "P_incident_peaknorm", "P_transmitted_aligned_peaknorm"]
    rows = [(series.times[i] / spec.tau0, series.P_i[i], reference[i],
             series.P_t[i], series.P_i[i] / peak_in, aligned[i] / peak_out)
            for i in range(series.times.size)]
    out = Path(cfg["out"])
    write_table(out, columns, rows, cfg["format"])
    files = [out.name]

    # front window: earliest arrivals at the exit face, three orders below
    # the bulk transmitted scale
    front_end = report.front_transit + 5.0 * spec.tau0
    front_cols = ["t_norm", "P_incident", "P_transmitted"]
    front_rows = [(series.times[i] / spec.tau0, series.P_i[i], series.P_t[i])
                  for i in range(series.times.size)
                  if series.times[i] <= front_end]
    front_path = out.with_name(out.stem + "_front" + out.suffix)
    write_table(front_path, front_cols, front_rows, cfg["format"])
    files.append(front_path.name)
    if cfg["gnuplot"]:
        gp = out.with_suffix(out.suffix + ".gp")
        gp.write_text(_gnuplot_script(out, columns), encoding="utf-8")
        files.append(gp.name)

    metrics = {
        "peak_delay": report.peak_delay_transmitted,
        "peak_delay_reflected": report.peak_delay_reflected,
        "T2_measured": report.T2_measured,
        "shape_deviation": report.shape_deviation,
        "front_transit": report.front_transit,
        "flags": ";".join(report.flags),
        "fwhm": fwhm,
        "t_peak": t_peak,
    }
    tau_ref = cmt.group_delay_closed(spec, cfg["detuning"])
    checks = [
        {"name": "peak delay within 2% of closed form",
         "value": _jsonable(abs(report.peak_delay_transmitted - tau_ref) / tau_ref),
         "tolerance": 0.02,
         "passed": bool(abs(report.peak_delay_transmitted - tau_ref) / tau_ref <= 0.02),
         "detail": ""},
        {"name": "shape deviation below 1e-3",
         "value": _jsonable(report.shape_deviation), "tolerance": 1e-3,
         "passed": bool(report.shape_deviation <= 1e-3), "detail": ""},
        {"name": "front transit equals tau0 within one step",
         "value": _jsonable(abs(report.front_transit - spec.tau0)),
         "tolerance": _jsonable(grid.dt),
         "passed": bool(abs(report.front_transit - spec.tau0) <= grid.dt * (1 + 1e-9)),
         "detail": ""},
    ]
    write_manifest(out.with_suffix(out.suffix + ".manifest.json"), "pulse", cfg,
                   files, checks=checks, metrics=metrics,
                   runtime_seconds=time.perf_counter() - started)
    return EXIT_OK


def run_hartman(cfg: dict) -> int:
    lengths = np.linspace(cfg["length_min"], cfg["length_max"], cfg["points"])
    started = time.perf_counter()
    if cfg["mode"] == "photonic":
        kappa = cfg["kappa"]

        def one(length: float):
            spec = BarrierSpec(kappa=kappa, length_L=float(length), v=1.0,
                               omega_B=100.0)
            tau_g = cmt.group_delay_closed(spec, 0.0)
            tau_d = cmt.stored_energy(spec, 0.0, 1.0)
            return (kappa * length, tau_g, tau_d)

        limit = 1.0 / kappa  # opaque-limit delay 1/(kappa v)
    else:
        v0 = cfg["v0"]
        energy = cfg["energy"] if cfg["energy"] is not None else 0.5 * v0
        q = math.sqrt(max(2.0 * (v0 - energy), 0.0))

        def one(length: float):
            spec = QBarrierSpec(v0=v0, length_L=float(length))
            return (q * length, quantum.group_delay(spec, energy),
                    quantum.dwell_time(spec, energy))

        limit = None

    rows = _pmap(one, lengths)
    columns = ["length_norm", "group_delay", "dwell"]
    out = Path(cfg["out"])
    write_table(out, columns, rows, cfg["format"])
    files = [out.name]
    if cfg["gnuplot"]:
        gp = out.with_suffix(out.suffix + ".gp")
        gp.write_text(_gnuplot_script(out, columns), encoding="utf-8")
        files.append(gp.name)

    # saturation: relative change of the delay per doubling of length,
    # evaluated on the sweep's own samples beyond length_norm > 5
    sat = 0.0
    xs = np.array([r[0] for r in rows])
    gs = np.array([r[1] for r in rows])
    for i, x in enumerate(xs):
        if x <= 5.0 or 2.0 * x > xs[-1]:
            continue
        g2 = float(np.interp(2.0 * x, xs, gs))
        sat = max(sat, abs(g2 - gs[i]) / gs[i])
    checks = [{"name": "delay saturates (<1% per doubling beyond length_norm=5)",
               "value": _jsonable(sat), "tolerance": 0.01,
               "passed": bool(sat <= 0.01), "detail": ""}]
    metrics = {"saturation_per_doubling": sat}
    if limit is not None:
        metrics["opaque_limit_delay"] = limit
    write_manifest(out.with_suffix(out.suffix + ".manifest.json"), "hartman", cfg,
                   files, checks=checks, metrics=metrics,
                   runtime_seconds=time.perf_counter() - started)
    return EXIT_OK


def run_quantum(cfg: dict) -> int:
    spec = QBarrierSpec(v0=cfg["v0"], length_L=cfg["length"])
    fractions = np.linspace(cfg["energy_min"], cfg["energy_max"], cfg["points"])
    started = time.perf_counter()

    def one(frac: float):
        energy = float(frac) * spec.v0
        sc = quantum.scatter(spec, energy)
        report = quantum.delay_report(spec, energy)
        return (frac, abs(sc.T) ** 2, abs(sc.R) ** 2, report.tau_g,
                report.tau_d, report.tau_i, report.tau_d_tilde,
                quantum.sum_rule_residual(spec, energy))

    rows = _pmap(one, fractions)
    columns = ["E_over_V0", "T_mag2", "R_mag2", "tau_g", "tau_d", "tau_i",
               "tau_d_tilde", "sum_rule_residual"]
    out = Path(cfg["out"])
    write_table(out, columns, rows, cfg["format"])
    files = [out.name]
    if cfg["gnuplot"]:
        gp = out.with_suffix(out.suffix + ".gp")
        gp.write_text(_gnuplot_script(out, columns), encoding="utf-8")
        files.append(gp.name)
    max_rule = max(r[7] for r in rows)
    max_flux = max(abs(r[1] + r[2] - 1.0) for r in rows)
    checks = [
        {"name": "flux conservation over the sweep", "value": _jsonable(max_flux),
         "tolerance": 1e-12, "passed": bool(max_flux <= 1e-12), "detail": ""},
        {"name": "sum rule residual over the sweep", "value": _jsonable(max_rule),
         "tolerance": 1e-6, "passed": bool(max_rule <= 1e-6), "detail": ""},
    ]
    write_manifest(out.with_suffix(out.suffix + ".manifest.json"), "quantum", cfg,
                   files, checks=checks,
                   runtime_seconds=time.perf_counter() - started)
    return EXIT_OK


def run_verify(cfg: dict) -> int:
    checks = verify.run_all(n_z=cfg["nz"], quantum_only=cfg["quantum_only"])
    out = Path(cfg["out"])
    check_dicts = [_check_dict(c) for c in checks]
    write_manifest(out, "verify", cfg, [], checks=check_dicts)
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"[{status}] {c.name}: value={c.value:.3e} tolerance={c.tolerance:.3e}")
        if c.detail and not c.passed:
            print(f"       {c.detail}")
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed; "
          f"manifest: {out}")
    return EXIT_OK if not failed else EXIT_VERIFY_FAILED


# ---------------------------------------------------------------------------
# argument handling: defaults < config file < explicit flags
# ---------------------------------------------------------------------------

_SCENARIO_DEFAULTS: dict[str, dict[str, object]] = {
    "spectrum": {"kappa_l": 4.0, "detuning_min": -8.0, "detuning_max": 8.0,
                 "points": 801, "include_resonances": False, "resonance_count": 2,
                 "out": "spectrum.csv", "format": "csv", "gnuplot": False},
    "decay": {"kappa_l_list": [2.0, 4.0, 6.0], "nz": 1024, "t_off": 20.0,
              "duration": None, "ramp": 5.0, "out": "decay.csv", "format": "csv",
              "gnuplot": False},
    "pulse": {"kappa_l": 4.0, "fwhm": 40.0, "nz": 1024, "detuning": 0.0,
              "t_peak": None, "duration": None, "pulse_shape": "gaussian",
              "out": "pulse.csv", "format": "csv", "gnuplot": False},
    "hartman": {"mode": "photonic", "kappa": 1.0, "v0": 1.0, "energy": None,
                "length_min": 1.0, "length_max": 12.0, "points": 45,
                "out": "hartman.csv", "format": "csv", "gnuplot": False},
    "quantum": {"v0": 1.0, "length": 2.0, "energy_min": 0.05, "energy_max": 2.5,
                "points": 50, "out": "quantum.csv", "format": "csv",
                "gnuplot": False},
    "verify": {"nz": 1024, "quantum_only": False, "out": "verify_manifest.json",
               "format": "csv", "gnuplot": False},
}

_RUNNERS = {
    "spectrum": run_spectrum,
    "decay": run_decay,
    "pulse": run_pulse,
    "hartman": run_hartman,
    "quantum": run_quantum,
    "verify": run_verify,
}


def _parse_config_file(path: str) -> dict[str, str]:
    """Flat key = value text; '#' starts a comment, blank lines ignored."""
    values: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _coerce(key: str, text: str, default):
    if key == "kappa_l_list":
        return [float(part) for part in text.split(",") if part.strip()]
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes", "on")
    if key in ("duration", "t_peak", "energy"):  # optional floats
        return None if text.lower() in ("", "none") else float(text)
    if isinstance(default, int) and not isinstance(default, bool):
        return int(text)
    if isinstance(default, float) or default is None:
        return float(text)
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evlab",
        description="Delay-time laboratory for photonic bandgap and quantum "
                    "tunneling barriers",
    )
    parser.add_argument("--version", action="version", version=f"evlab {__version__}")
    sub = parser.add_subparsers(dest="scenario", required=True)

    def add_common(p):
        p.add_argument("--out", help="output data file (manifest goes next to it)")
        p.add_argument("--format", choices=("csv", "json"), dest="format_")
        p.add_argument("--config", help="flat key=value config file; flags win")
        p.add_argument("--gnuplot", action="store_const", const=True, default=None,
                       help="emit a companion gnuplot script")

    p = sub.add_parser("spectrum", help="delay quantities vs detuning")
    p.add_argument("--kappa-L", type=float, dest="kappa_l")
    p.add_argument("--detuning-min", type=float)
    p.add_argument("--detuning-max", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--include-resonances", action="store_const", const=True,
                   default=None)
    p.add_argument("--resonance-count", type=int)
    add_common(p)

    p = sub.add_parser("decay", help="stored-energy decay after turn-off")
    p.add_argument("--kappa-L", dest="kappa_l_list",
                   help="comma-separated coupling strengths, e.g. 2,4,6")
    p.add_argument("--nz", type=int)
    p.add_argument("--t-off", type=float)
    p.add_argument("--duration", type=float)
    p.add_argument("--ramp", type=float)
    add_common(p)

    p = sub.add_parser("pulse", help="pulse transit and reshaping records")
    p.add_argument("--kappa-L", type=float, dest="kappa_l")
    p.add_argument("--fwhm", type=float)
    p.add_argument("--nz", type=int)
    p.add_argument("--detuning", type=float)
    p.add_argument("--t-peak", type=float)
    p.add_argument("--duration", type=float)
    p.add_argument("--pulse-shape", choices=("gaussian", "raised_cosine"))
    add_common(p)

    p = sub.add_parser("hartman", help="delay saturation with barrier length")
    p.add_argument("--mode", choices=("photonic", "quantum"))
    p.add_argument("--kappa", type=float)
    p.add_argument("--v0", type=float)
    p.add_argument("--energy", type=float)
    p.add_argument("--length-min", type=float)
    p.add_argument("--length-max", type=float)
    p.add_argument("--points", type=int)
    add_common(p)

    p = sub.add_parser("quantum", help="quantum-barrier delays vs energy")
    p.add_argument("--v0", type=float)
    p.add_argument("--length", type=float)
    p.add_argument("--energy-min", type=float)
    p.add_argument("--energy-max", type=float)
    p.add_argument("--points", type=int)
    add_common(p)

    p = sub.add_parser("verify", help="run every invariant suite")
    p.add_argument("--nz", type=int)
    p.add_argument("--quantum-only", action="store_const", const=True, default=None)
    add_common(p)

    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    scenario = args.scenario
    resolved = dict(_SCENARIO_DEFAULTS[scenario])
    file_values: dict[str, str] = {}
    if getattr(args, "config", None):
        file_values = _parse_config_file(args.config)
    for key, default in resolved.items():
        if key in file_values:
            resolved[key] = _coerce(key, file_values[key], default)
    for key in resolved:
        attr = "format_" if key == "format" else key
        flag_value = getattr(args, attr, None)
        if flag_value is not None:
            if key == "kappa_l_list" and isinstance(flag_value, str):
                flag_value = _coerce(key, flag_value, None)
            resolved[key] = flag_value
    return resolved


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = resolve_config(args)
    runner = _RUNNERS[args.scenario]
    try:
        return runner(cfg)
    except SimulationQualityError as exc:
        print(f"simulation quality failure: {exc}", file=sys.stderr)
        return EXIT_SIM_QUALITY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR


def console_main() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()
