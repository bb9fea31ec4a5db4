"""Command-line batch runner: scenario configs in, CSV series and metadata out.

Configs are INI files.  Site and qubit labels in configs are 1-based, as in
the usual site numbering; everything inside the library is 0-based.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import metadata, resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import assemblage as asm_mod
from .assemblage import Assemblage, Scenario, assemblage_series_by_target
from .dynamics import (
    CM_INV_TO_RAD_PER_PS,
    FMO_DEPHASING_CM,
    FMO_HAMILTONIAN_CM,
    FMO_SINK_CM,
    ChainParams,
    FmoParams,
    IntegratorOptions,
)
from .scenarios import chain_scenario, epr_scenario, fmo_scenario, network_scenario
from .sdp import SolverOptions, export_problem
from .steering import (
    REPORT_THRESHOLD,
    SUPPORT_TOL,
    VANISHING_THRESHOLD,
    Measure,
    SolverFailure,
    measure_value,
    robustness_problem,
    vanishing_time,
    weight_problem,
)

log = logging.getLogger("ststeer")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3
KINDS = ("chain", "fmo", "custom", "epr-fixture")
PRESET_PACKAGE = "ststeer.presets"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Series:
    """One scenario instance; ``targets`` are 0-based factor indices."""

    label: str
    scenario: Scenario
    targets: tuple[int, ...]
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    kind: str
    measures: tuple[Measure, ...]
    times: np.ndarray
    time_units: str
    reduced: bool
    series: tuple[Series, ...]
    raw: dict  # the parsed config, section -> key -> string
    solver: SolverOptions = SolverOptions()
    integrator: IntegratorOptions = IntegratorOptions()


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as e:
        raise ConfigError(f"expected numbers, got {text!r}") from e


def _labels(text: str) -> list[int]:
    vals = _floats(text)
    if any(v != int(v) or v < 1 for v in vals):
        raise ConfigError(f"labels are 1-based integers, got {text!r}")
    return [int(v) for v in vals]


def _tag(v: float) -> str:
    return f"{v:g}"


def time_grid(start: float, stop: float, step: float) -> np.ndarray:
    """Grid start, start+step, ... up to stop inclusive, rounded to 12 decimals."""
    if start != 0:
        raise ConfigError("grid start must be 0")
    if not step > 0 or not stop >= start:
        raise ConfigError("grid needs step > 0 and stop >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 12)


def _section(cp: configparser.ConfigParser, name: str) -> configparser.SectionProxy:
    if not cp.has_section(name):
        raise ConfigError(f"missing [{name}] section")
    return cp[name]


def _chain_series(cp, measured: int, targets: list[int], reduced: bool, integ: IntegratorOptions) -> list[Series]:
    sec = cp["chain"] if cp.has_section("chain") else {}
    j12 = float(sec.get("J12", 1.0))
    j23 = float(sec.get("J23", 1.0))
    out = []
    for g in _floats(sec.get("gamma", "0")):
        params = ChainParams(J12=j12, J23=j23, gamma=g)
        sc = chain_scenario(params, target=targets[0], measured=measured, reduced=reduced, integrator=integ)
        out.append(Series(f"chain_gamma{_tag(g)}", sc, tuple(targets), asdict(params)))
    return out


def _fmo_series(cp, measured: int, targets: list[int], reduced: bool, integ: IntegratorOptions) -> list[Series]:
    sec = cp["fmo"] if cp.has_section("fmo") else {}
    params = FmoParams(
        hamiltonian_cm=FMO_HAMILTONIAN_CM.copy(),
        gamma_dp=float(sec.get("dephasing_cm", FMO_DEPHASING_CM)),
        gamma_sink=float(sec.get("sink_cm", FMO_SINK_CM)),
        include_reaction_center=configparser.ConfigParser.BOOLEAN_STATES.get(
            str(sec.get("reaction_center", "true")).lower(), True
        ),
        sink_site=_labels(sec.get("sink_site", "3"))[0] - 1,
    )
    sc = fmo_scenario(targets[0], params, measured=measured, reduced=reduced, integrator=integ)
    info = {k: v for k, v in asdict(params).items() if k != "hamiltonian_cm"}
    info["hamiltonian_cm"] = params.hamiltonian_cm.tolist()
    if "temperature_k" in sec:
        info["temperature_k"] = float(sec["temperature_k"])
    return [Series(f"fmo_site{measured + 1}", sc, tuple(targets), info)]


def _custom_series(cp, measured: int, targets: list[int], reduced: bool, integ: IntegratorOptions) -> list[Series]:
    sec = _section(cp, "custom")
    rows = [r for r in sec.get("hamiltonian", "").split(";") if r.strip()]
    hm = np.array([_floats(r) for r in rows])
    if hm.ndim != 2 or hm.shape[0] != hm.shape[1]:
        raise ConfigError("custom hamiltonian must be square: rows separated by ';', entries by ','")
    scale = {"cm-1": CM_INV_TO_RAD_PER_PS, "angular": 1.0}.get(sec.get("units", "angular"))
    if scale is None:
        raise ConfigError("custom units must be 'cm-1' or 'angular'")
    deph = _floats(sec.get("dephasing", "0"))
    deph_arr = np.array(deph[0] if len(deph) == 1 else deph) * scale
    sc = network_scenario(
        hm * scale, deph_arr, measured, targets[0], initial=sec.get("initial", "mixed"), reduced=reduced, integrator=integ
    )
    return [Series(f"custom_site{measured + 1}", sc, tuple(targets), {"hamiltonian": hm.tolist(), "dephasing": deph})]


def _epr_series(cp, measured: int, targets: list[int], reduced: bool, integ: IntegratorOptions) -> list[Series]:
    sec = cp["epr"] if cp.has_section("epr") else {}
    out = []
    for p in _floats(sec.get("p", "1")):
        if not 0 <= p <= 1:
            raise ConfigError("Werner visibility p must lie in [0, 1]")
        out.append(Series(f"epr_p{_tag(p)}", epr_scenario(p), (1,), {"p": p}))
    return out


_BUILDERS: dict[str, Callable[..., list[Series]]] = {
    "chain": _chain_series,
    "fmo": _fmo_series,
    "custom": _custom_series,
    "epr-fixture": _epr_series,
}
_DEFAULT_SITES = {"chain": (1, "3"), "fmo": (6, "1,2,3,4,5,7"), "custom": (1, "2"), "epr-fixture": (1, "2")}


def parse_config(text: str, full_space: bool = False) -> RunConfig:
    """Parse an INI run config; raises ConfigError on anything malformed."""
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep J12 / J23 as written
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e)) from e
    try:
        sc = _section(cp, "scenario")
        kind = sc.get("kind", "").strip()
        if kind not in KINDS:
            raise ConfigError(f"unknown scenario kind {kind!r}; expected one of {', '.join(KINDS)}")
        try:
            measures = tuple(Measure(m.strip()) for m in sc.get("measures", "weight").split(",") if m.strip())
        except ValueError as e:
            raise ConfigError(str(e)) from e
        reduced = sc.getboolean("reduced", fallback=True) and not full_space
        d_meas, d_targets = _DEFAULT_SITES[kind]
        measured = _labels(sc.get("measured", str(d_meas)))[0] - 1
        targets = [t - 1 for t in _labels(sc.get("targets", d_targets))]
        gr = _section(cp, "grid")
        times = time_grid(gr.getfloat("start", 0.0), gr.getfloat("stop"), gr.getfloat("step"))
        units = gr.get("units", "")
        sol = cp["solver"] if cp.has_section("solver") else {}
        solver = SolverOptions(
            gap_tol=float(sol.get("gap_tol", SolverOptions.gap_tol)),
            feas_tol=float(sol.get("feas_tol", SolverOptions.feas_tol)),
            max_iterations=int(sol.get("max_iterations", SolverOptions.max_iterations)),
        )
        integ_sec = cp["integrator"] if cp.has_section("integrator") else {}
        integ = IntegratorOptions(
            rtol=float(integ_sec.get("rtol", IntegratorOptions.rtol)),
            atol=float(integ_sec.get("atol", IntegratorOptions.atol)),
        )
        series = tuple(_BUILDERS[kind](cp, measured, targets, reduced, integ))
    except (ValueError, TypeError, KeyError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from e
    if not series:
        raise ConfigError("config defines no series")
    raw = {s: dict(cp[s]) for s in cp.sections()}
    return RunConfig(kind, measures, times, units, reduced, series, raw, solver, integ)


def preset_names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files(PRESET_PACKAGE).iterdir() if p.name.endswith(".ini"))


def preset_text(name: str) -> str:
    path = resources.files(PRESET_PACKAGE) / f"{name}.ini"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return path.read_text()


def _fmt(v: float) -> str:
    return "nan" if not np.isfinite(v) else f"{v:.17g}"


def _solve_task(members: np.ndarray, time: float, measure: str, options: SolverOptions) -> tuple[float, float, str]:
    """Worker entry point: (value, gap, status) for one assemblage."""
    try:
        res = measure_value(Assemblage(members, time), measure, options)
    except SolverFailure as e:
        return math.nan, e.solution.gap, e.solution.status
    return res.value, res.gap, res.status


def _series_csv(times: np.ndarray, rows: Sequence[tuple[float, float, str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", "value", "solver_gap", "status"])
    for t, (v, g, st) in zip(times, rows):
        w.writerow([_fmt(t), _fmt(v), _fmt(g), st])
    return buf.getvalue()


def _code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def series_filename(series: Series, target: int, measure: Measure) -> str:
    return f"{series.label}_target{target + 1}_{measure.value}.csv"


def run(cfg: RunConfig, out_dir: Path, workers: int = 1) -> int:
    """Compute every (series, target, measure) CSV; returns the exit code."""
    out_dir.mkdir(parents=True, exist_ok=True)
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    pmap = pool.map if pool else map
    failed = 0
    summary = []
    try:
        for s in cfg.series:
            log.info("series %s: evolving %d branches", s.label, s.scenario.measurements.n_settings * s.scenario.measurements.n_outcomes)
            per_target = assemblage_series_by_target(s.scenario, cfg.times, [(t,) for t in s.targets], pmap)
            for target, asms in zip(s.targets, per_target):
                for meas in cfg.measures:
                    n = len(asms)
                    rows = list(
                        pmap(
                            _solve_task,
                            [a.members for a in asms],
                            [a.time for a in asms],
                            [meas.value] * n,
                            [cfg.solver] * n,
                        )
                    )
                    bad = sum(st != "optimal" for _, _, st in rows)
                    failed += bad
                    name = series_filename(s, target, meas)
                    (out_dir / name).write_text(_series_csv(cfg.times, rows))
                    vals = np.array([v for v, _, _ in rows])
                    ok = np.isfinite(vals)
                    summary.append(
                        {
                            "file": name,
                            "series": s.label,
                            "target": target + 1,
                            "measure": meas.value,
                            "max_value": float(np.max(vals[ok])) if ok.any() else None,
                            "argmax_time": float(cfg.times[ok][np.argmax(vals[ok])]) if ok.any() else None,
                            "vanishing_time": vanishing_time(cfg.times[ok], vals[ok]),
                            "failed_points": bad,
                        }
                    )
                    log.info("wrote %s (%d failed points)", name, bad)
    finally:
        if pool:
            pool.shutdown()
    meta = {
        "code_version": _code_version(),
        "config": cfg.raw,
        "kind": cfg.kind,
        "reduced_subspace": cfg.reduced,
        "time_units": cfg.time_units,
        "grid": {"points": len(cfg.times), "start": float(cfg.times[0]), "stop": float(cfg.times[-1])},
        "series": [{"label": s.label, "targets": [t + 1 for t in s.targets], "params": s.params} for s in cfg.series],
        "thresholds": {
            "report": REPORT_THRESHOLD,
            "vanishing": VANISHING_THRESHOLD,
            "support": SUPPORT_TOL,
            "null_branch_probability": asm_mod.NULL_BRANCH_PROBABILITY,
        },
        "constants": {"cm_inv_to_rad_per_ps": CM_INV_TO_RAD_PER_PS},
        "solver": asdict(cfg.solver),
        "integrator": asdict(cfg.integrator),
        "outputs": summary,
        "csv_columns": ["time", "value", "solver_gap", "status"],
    }
    (out_dir / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if failed:
        log.error("%d solver failures; rows are marked in the status column", failed)
        return EXIT_SOLVER
    return EXIT_OK


def export(cfg: RunConfig, out_dir: Path, t: float, sdp: bool = False) -> int:
    """Write the assemblage at time ``t`` for every (series, target); optionally the SDPs too."""
    out_dir.mkdir(parents=True, exist_ok=True)
    times = np.array([0.0, t]) if t > 0 else np.array([0.0])
    for s in cfg.series:
        per_target = assemblage_series_by_target(s.scenario, times, [(tg,) for tg in s.targets])
        for target, asms in zip(s.targets, per_target):
            a = asms[-1]
            stem = f"{s.label}_target{target + 1}_t{_tag(t)}"
            asm_mod.save(a, out_dir / f"{stem}.asm")
            if sdp:
                export_problem(weight_problem(a, reduce=False)[0], out_dir / f"{stem}_weight.sdp")
                export_problem(robustness_problem(a)[0], out_dir / f"{stem}_robustness.sdp")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ststeer", description="Spatio-temporal steering of open quantum networks.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", type=Path, help="INI run config")
        src.add_argument("--preset", help="name of a shipped preset (see 'presets list')")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--full-space", action="store_true", help="evolve in the full Hilbert space")

    p_run = sub.add_parser("run", help="compute measure series and write CSVs")
    add_common(p_run)
    p_run.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p_exp = sub.add_parser("export", help="write assemblages (and SDPs) at one time")
    add_common(p_exp)
    p_exp.add_argument("--time", type=float, default=0.0)
    p_exp.add_argument("--sdp", action="store_true", help="also write weight and robustness SDP files")
    p_pre = sub.add_parser("presets", help="shipped presets")
    pre_sub = p_pre.add_subparsers(dest="presets_command", required=True)
    pre_sub.add_parser("list")
    p_show = pre_sub.add_parser("show")
    p_show.add_argument("name")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "presets":
        if args.presets_command == "list":
            for name in preset_names():
                print(name)
            return EXIT_OK
        try:
            sys.stdout.write(preset_text(args.name))
        except ConfigError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK
    try:
        text = preset_text(args.preset) if args.preset else args.config.read_text()
        cfg = parse_config(text, full_space=args.full_space)
        if args.command == "run" and args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        if args.command == "export" and args.time < 0:
            raise ConfigError("--time must be non-negative")
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "run":
        return run(cfg, args.out, args.workers)
    return export(cfg, args.out, args.time, args.sdp)


if __name__ == "__main__":
    sys.exit(main())
