"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run standalone with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES, cvxpy_value, lhs_assemblage, random_assemblage

from ststeer.assemblage import Assemblage, assemblage_series_by_target, make_st_assemblage
from ststeer.cli import parse_config, preset_names, preset_text, run, series_filename
from ststeer.dynamics import (
    ChainParams,
    LindbladModel,
    build_network_model,
    evolve,
    excitation_numbers,
    reduce_to_excitation_sectors,
)
from ststeer.quantum import SITE_Z, kron, ket, projector, random_unitary
from ststeer.scenarios import chain_scenario, epr_scenario, fmo_scenario
from ststeer.sdp import export_problem, import_problem
from ststeer.steering import (
    REPORT_THRESHOLD,
    VANISHING_THRESHOLD,
    is_unsteerable,
    robustness_problem,
    sts_robustness,
    sts_weight,
    unsteerability_margin,
    vanishing_time,
    weight_problem,
)


def record(n: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def strict_maxima(v: np.ndarray) -> np.ndarray:
    return np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])) + 1


def read_values(path: Path) -> np.ndarray:
    rows = path.read_text().splitlines()[1:]
    return np.array([float(r.split(",")[1]) for r in rows])


@pytest.fixture(scope="module")
def preset_runs(tmp_path_factory):
    """Every preset run once with a single worker; reused by several criteria."""
    out = {}
    for name in preset_names():
        d = tmp_path_factory.mktemp(f"{name}_w1")
        cfg = parse_config(preset_text(name))
        t0 = time.perf_counter()
        code = run(cfg, d, workers=1)
        out[name] = (cfg, d, code, time.perf_counter() - t0)
    return out


@pytest.fixture(scope="module")
def fmo_full_and_reduced():
    sc = fmo_scenario(4)
    times = np.linspace(0.0, 2.0, 10)
    rho0 = sc.initial_state.matrix
    full = evolve(sc.channel, rho0, times)
    red_model, red0 = reduce_to_excitation_sectors(sc.channel, rho0)
    red = evolve(red_model, red0, times)
    lifted = np.array([red_model.lift(s) for s in red.states])
    return sc, full, lifted


def test_criterion_1_null_steering_at_t0():
    t0 = time.perf_counter()
    worst = 0.0
    cases = [(chain_scenario(ChainParams(gamma=g), reduced=True), [1, 2]) for g in (0.01, 1, 20)]
    cases.append((fmo_scenario(0), [0, 1, 2, 3, 4, 6]))
    for sc, targets in cases:
        for asms in assemblage_series_by_target(sc, [0.0], [(t,) for t in targets]):
            for fn in (sts_weight, sts_robustness):
                worst = max(worst, fn(asms[0]).value)
    dt = time.perf_counter() - t0
    record(1, worst <= 1e-7 and dt < 5, f"max weight/robustness at t=0 = {worst:.1e} over chain and FMO targets ({dt:.2f} s)")


def test_criterion_2_werner_threshold():
    t0 = time.perf_counter()
    lo, hi = 0.0, 1.0
    while hi - lo > 1e-4:
        mid = 0.5 * (lo + hi)
        if is_unsteerable(make_st_assemblage(epr_scenario(mid), 0.0))[0]:
            lo = mid
        else:
            hi = mid
    p_star = 0.5 * (lo + hi)
    dt = time.perf_counter() - t0
    ok = abs(p_star - 0.5774) <= 0.002 and dt < 30
    record(2, ok, f"p* = {p_star:.5f} (1/sqrt(3) = {1 / np.sqrt(3):.5f}) in {dt:.2f} s")


def test_criterion_3_bell_cross_solver(tmp_path):
    asm = make_st_assemblage(epr_scenario(1.0), 0.0)
    export_problem(weight_problem(asm, reduce=False)[0], tmp_path / "bell_weight.sdp")
    export_problem(robustness_problem(asm)[0], tmp_path / "bell_robustness.sdp")
    ref_w = 1 + cvxpy_value(import_problem(tmp_path / "bell_weight.sdp"))
    ref_r = cvxpy_value(import_problem(tmp_path / "bell_robustness.sdp")) - 1
    w, r = sts_weight(asm).value, sts_robustness(asm).value
    ok = abs(w - ref_w) <= 1e-5 and abs(r - ref_r) <= 1e-5
    record(
        3,
        ok,
        f"weight {w:.8f} vs reference {ref_w:.8f}; robustness {r:.8f} vs reference {ref_r:.8f} "
        f"(oracle weight is 1, not 1 - 1/sqrt(3) = {1 - 1 / np.sqrt(3):.4f})",
    )


def test_criterion_4_chain_dynamics(preset_runs):
    cfg, d, code, dt = preset_runs["fig2"]
    t = cfg.times
    by_gamma = {s.params["gamma"]: s for s in cfg.series}
    weak = read_values(d / series_filename(by_gamma[0.01], 2, cfg.measures[0]))
    strong = read_values(d / series_filename(by_gamma[20.0], 2, cfg.measures[0]))
    peaks = strict_maxima(weak)
    late = t[np.argmax(strong)] > t[np.argmax(weak)]
    quiet = np.all(strong[t < 0.5] < 1e-3)
    ok = code == 0 and len(peaks) >= 3 and late and quiet and dt < 600
    record(
        4,
        ok,
        f"gamma=0.01 strict maxima {len(peaks)} (need >= 3) at t = {np.round(t[peaks], 2).tolist()}; "
        f"gamma=20 argmax {t[np.argmax(strong)]:.2f} > {t[np.argmax(weak)]:.2f}: {late}; "
        f"gamma=20 below 1e-3 for t < 0.5: {quiet} ({dt:.1f} s)",
    )


def test_criterion_5_fmo_robustness(preset_runs):
    cfg, d, code, dt = preset_runs["fig4"]
    t = cfg.times
    s = cfg.series[0]
    curves = {k + 1: read_values(d / series_filename(s, k, cfg.measures[0])) for k in s.targets}
    peak = {k: v.max() for k, v in curves.items()}
    arg = {k: t[np.argmax(v)] for k, v in curves.items()}
    vanish = {k: vanishing_time(t, v, VANISHING_THRESHOLD) for k, v in curves.items()}
    order = sorted(peak, key=peak.get, reverse=True)
    largest = order[0] == 5 and all(peak[5] > peak[k] for k in peak if k != 5)
    second = order[1] == 7 and arg[7] > arg[5]
    decays = all(v[-1] < VANISHING_THRESHOLD for v in curves.values())
    crossing = {k: (v if v is not None else -1.0) for k, v in vanish.items()}
    latest = all(crossing[7] > crossing[k] for k in crossing if k != 7)
    ok = code == 0 and largest and second and decays and latest and dt < 1800
    record(
        5,
        ok,
        f"peaks {', '.join(f'6->{k} {peak[k]:.4f}@{arg[k]:.2f}' for k in order)}; "
        f"largest 6->5: {largest}; second 6->7 and later: {second}; all decay: {decays}; "
        f"6->7 latest crossing: {latest} (vanishing {', '.join(f'6->{k} {vanish[k]}' for k in sorted(vanish))}) ({dt:.1f} s)",
    )


def test_criterion_6_dynamics_analytics(fmo_full_and_reduced):
    times = np.linspace(0, 3, 31)
    gamma = 0.37
    plus = projector(np.array([1, 1]) / np.sqrt(2))
    deph = evolve(LindbladModel(np.zeros((2, 2)), ((SITE_Z, gamma),), (2,)), plus, times)
    err_deph = np.max(np.abs(2 * deph.states[:, 0, 1] - np.exp(-4 * gamma * times)))
    j = 1.3
    ex = evolve(build_network_model(np.array([[0.0, j], [j, 0.0]]), 0.0), projector(kron(ket(1), ket(0))), times)
    pop = ex.states[:, 3, 3].real + ex.states[:, 1, 1].real  # site 2 excited
    err_ex = np.max(np.abs(pop - np.sin(j * times) ** 2))

    trajs = [deph.states, ex.states]
    sc_chain = chain_scenario(ChainParams(gamma=1.0))
    for g in (0.01, 1.0, 20.0):
        model = chain_scenario(ChainParams(gamma=g)).channel
        trajs.append(evolve(model, sc_chain.initial_state.matrix, np.linspace(0, 10, 201)).states)
    sc, full, lifted = fmo_full_and_reduced
    trajs += [full.states, lifted]
    drift = max(np.max(np.abs(np.trace(s, axis1=1, axis2=2) - 1)) for s in trajs)
    n_op = excitation_numbers(sc.channel.dims).astype(float)
    n_exp = np.einsum("i,tii->t", n_op, full.states).real
    err_n = np.max(np.abs(n_exp - n_exp[0]))
    ok = err_deph <= 1e-6 and err_ex <= 1e-6 and drift <= 1e-9 and err_n <= 1e-8
    record(
        6,
        ok,
        f"dephasing err {err_deph:.1e}, exchange err {err_ex:.1e}, trace drift {drift:.1e}, "
        f"FMO excitation drift {err_n:.1e}",
    )


def test_criterion_7_subspace_reduction(fmo_full_and_reduced):
    _, full, lifted = fmo_full_and_reduced
    dist = np.max(np.linalg.norm(full.states - lifted, axis=(1, 2)))
    record(7, dist <= 1e-8, f"max Frobenius distance full vs reduced FMO over 10 points = {dist:.1e}")


def test_criterion_8_property_suite():
    rng = np.random.default_rng(8)
    n = 200
    zero_mismatch = conv_viol = mono_viol = cov_err = 0.0
    worst_gap = 0.0
    steerable = 0
    asms = [random_assemblage(rng) for _ in range(n)]
    cache = {}

    def evaluate(key, a: Assemblage):
        nonlocal worst_gap
        if key not in cache:
            w, r = sts_weight(a), sts_robustness(a)
            worst_gap = max(worst_gap, abs(w.gap), abs(r.gap))
            cache[key] = (w.value, r.value)
        return cache[key]

    mismatches = 0
    for i, a in enumerate(asms):
        w, r = evaluate(i, a)
        f = unsteerability_margin(a)
        worst_gap = max(worst_gap, abs(f.gap))
        zs = {w == 0, r == 0, f.raw_value <= REPORT_THRESHOLD}
        mismatches += len(zs) != 1
        steerable += r > 0
        b = asms[(i + 1) % n]
        p = rng.uniform(0.05, 0.95)
        wm, rm = evaluate(("mix", i), a.mix(b, p))
        wb, rb = evaluate((i + 1) % n, b)
        conv_viol = max(conv_viol, wm - p * w - (1 - p) * wb, rm - p * r - (1 - p) * rb)
        wl, rl = evaluate(("lhs", i), a.mix(lhs_assemblage(rng), p))
        mono_viol = max(mono_viol, wl - w, rl - r)
        wu, ru = evaluate(("lu", i), a.conjugate(random_unitary(2, rng)))
        cov_err = max(cov_err, abs(wu - w), abs(ru - r))
    zero_mismatch = mismatches
    ok = zero_mismatch == 0 and conv_viol <= 1e-7 and mono_viol <= 1e-7 and cov_err <= 1e-7 and worst_gap <= 1e-8
    record(
        8,
        ok,
        f"{n} assemblages ({steerable} steerable): zero-set mismatches {zero_mismatch}, "
        f"convexity excess {conv_viol:.1e}, mixing excess {mono_viol:.1e}, LU deviation {cov_err:.1e}, "
        f"max |gap| {worst_gap:.1e}",
    )


def test_criterion_9_determinism(preset_runs, tmp_path):
    differing = []
    for name, (cfg, d1, _, _) in preset_runs.items():
        d2 = tmp_path / name
        run(cfg, d2, workers=2)
        csvs = sorted(p.name for p in d1.glob("*.csv"))
        assert csvs
        differing += [f"{name}/{c}" for c in csvs if (d1 / c).read_bytes() != (d2 / c).read_bytes()]
        if (d1 / "metadata.json").read_bytes() != (d2 / "metadata.json").read_bytes():
            differing.append(f"{name}/metadata.json")
    record(9, not differing, f"presets {', '.join(preset_runs)} byte-identical with 1 and 2 workers" + (f"; differing: {differing}" if differing else ""))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
