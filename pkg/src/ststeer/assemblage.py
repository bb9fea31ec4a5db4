"""Measurement-conditioned assemblages from open-system dynamics."""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .dynamics import IntegratorOptions, LindbladModel, evolve, reduce_to_excitation_sectors
from .quantum import (
    DensityMatrix,
    MeasurementSet,
    embed_site_operator,
    hermitize,
    kron,
    partial_trace,
    psd_sqrt,
)

NULL_BRANCH_PROBABILITY = 1e-12


class Mode(str, Enum):
    SPATIO_TEMPORAL = "spatio-temporal"
    TEMPORAL = "temporal"
    EPR = "epr"


@dataclass(frozen=True)
class Assemblage:
    """Subnormalized states ``members[x, a]`` of the target system at ``time``."""

    members: np.ndarray  # (m, o, d, d) complex
    time: float = 0.0

    def __post_init__(self) -> None:
        arr = np.array(self.members, dtype=complex)
        if arr.ndim != 4 or arr.shape[2] != arr.shape[3]:
            raise ValueError("members must have shape (settings, outcomes, d, d)")
        arr = 0.5 * (arr + arr.conj().swapaxes(-1, -2))
        arr.setflags(write=False)
        object.__setattr__(self, "members", arr)
        object.__setattr__(self, "time", float(self.time))

    @property
    def n_settings(self) -> int:
        return self.members.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.members.shape[1]

    @property
    def dim(self) -> int:
        return self.members.shape[2]

    def probabilities(self) -> np.ndarray:
        """p(a|x) as an (m, o) array."""
        return np.trace(self.members, axis1=2, axis2=3).real

    def marginals(self) -> np.ndarray:
        """sum_a sigma_{a|x} for each x."""
        return self.members.sum(axis=1)

    def mix(self, other: Assemblage, q: float) -> Assemblage:
        if self.members.shape != other.members.shape:
            raise ValueError("assemblages have different layouts")
        return Assemblage(q * self.members + (1 - q) * other.members, self.time)

    def conjugate(self, u: np.ndarray) -> Assemblage:
        return Assemblage(u @ self.members @ u.conj().T, self.time)


@dataclass(frozen=True)
class Scenario:
    """What is measured (``measured`` factors) and what is steered (``target`` factors).

    ``channel`` is ignored in EPR mode.  With ``reduced`` the branches are
    evolved in the low-excitation subspace of the channel.
    """

    initial_state: DensityMatrix
    measurements: MeasurementSet
    measured: tuple[int, ...]
    target: tuple[int, ...]
    channel: LindbladModel | None = None
    mode: Mode = Mode.SPATIO_TEMPORAL
    reduced: bool = False
    integrator: IntegratorOptions = field(default_factory=IntegratorOptions)

    def __post_init__(self) -> None:
        dims = self.initial_state.dims
        measured = tuple(sorted(set(self.measured)))
        target = tuple(sorted(set(self.target)))
        for idx in measured + target:
            if not 0 <= idx < len(dims):
                raise ValueError(f"factor index {idx} out of range")
        mode = Mode(self.mode)
        if mode is Mode.TEMPORAL and measured != target:
            raise ValueError("temporal mode measures and steers the same system")
        if mode is not Mode.TEMPORAL and set(measured) & set(target):
            raise ValueError("measured and target systems overlap")
        d_meas = int(np.prod([dims[i] for i in measured]))
        if self.measurements.dim != d_meas:
            raise ValueError("measurement dimension does not match the measured factors")
        if mode is not Mode.EPR:
            if self.channel is None:
                raise ValueError("a channel is required outside EPR mode")
            if self.channel.dim != self.initial_state.dim or self.channel.dims != dims:
                raise ValueError("channel dimension does not match the initial state")
        object.__setattr__(self, "measured", measured)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "mode", mode)


def _measurement_operator(sc: Scenario, x: int, a: int) -> np.ndarray:
    """sqrt(F_{a|x}) acting on the measured factors, identity elsewhere."""
    dims = sc.initial_state.dims
    root = psd_sqrt(sc.measurements.effect(x, a))
    if len(sc.measured) == 1:
        return embed_site_operator(root, sc.measured[0], dims)
    # Measured factors are contiguous in the supported layouts; permute otherwise.
    lo, hi = sc.measured[0], sc.measured[-1]
    if list(sc.measured) != list(range(lo, hi + 1)):
        raise ValueError("multi-factor measured systems must be contiguous")
    left = int(np.prod(dims[:lo]))
    right = int(np.prod(dims[hi + 1 :]))
    return kron(np.eye(left), root, np.eye(right))


def post_measurement_branches(sc: Scenario) -> np.ndarray:
    """(sqrt F (x) 1) rho0 (sqrt F (x) 1) for every (x, a); shape (m, o, D, D)."""
    rho0 = sc.initial_state.matrix
    ms = sc.measurements
    out = np.empty((ms.n_settings, ms.n_outcomes) + rho0.shape, dtype=complex)
    for x in range(ms.n_settings):
        for a in range(ms.n_outcomes):
            k = _measurement_operator(sc, x, a)
            out[x, a] = hermitize(k @ rho0 @ k.conj().T)
    return out


def _branch_series(
    sc: Scenario, branch: np.ndarray, times: np.ndarray, targets: Sequence[tuple[int, ...]]
) -> list[np.ndarray]:
    """States of each target system along one branch, each of shape (T, d, d)."""
    dims = sc.initial_state.dims
    p = float(np.trace(branch).real)
    sizes = [int(np.prod([dims[i] for i in tg])) for tg in targets]
    if p < NULL_BRANCH_PROBABILITY:
        return [np.zeros((len(times), d, d), dtype=complex) for d in sizes]
    if sc.mode is Mode.EPR:
        return [np.broadcast_to(partial_trace(branch, dims, tg), (len(times), d, d)).copy() for tg, d in zip(targets, sizes)]
    model, rho = sc.channel, branch
    if sc.reduced:
        model, rho = reduce_to_excitation_sectors(sc.channel, branch)
    grid = times if times[0] == 0 else np.concatenate([[0.0], times])
    traj = evolve(model, rho, grid, sc.integrator)
    states = traj.states if times[0] == 0 else traj.states[1:]
    out = [np.empty((len(times), d, d), dtype=complex) for d in sizes]
    for i, s in enumerate(states):
        full = model.lift(s)
        for arr, tg in zip(out, targets):
            arr[i] = partial_trace(full, dims, tg)
    return out


def _check_times(times: Sequence[float]) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be non-negative and strictly increasing")
    return times


def assemblage_series_by_target(
    sc: Scenario, times: Sequence[float], targets: Sequence[Sequence[int]], map_fn=map
) -> list[list[Assemblage]]:
    """Assemblages for several target systems from one trajectory per branch.

    ``map_fn`` runs the per-branch evolutions (e.g. an executor's ``map``);
    results are assembled in branch order whatever the scheduling.
    """
    times = _check_times(times)
    targets = [tuple(sorted(set(tg))) for tg in targets]
    for tg in targets:
        replace(sc, target=tg)  # validates the target against the scenario
    branches = post_measurement_branches(sc)
    m, o = branches.shape[:2]
    flat = [branches[x, a] for x in range(m) for a in range(o)]
    per_branch = list(map_fn(_branch_series, [sc] * len(flat), flat, [times] * len(flat), [targets] * len(flat)))
    out = []
    for k in range(len(targets)):
        members = np.array([per_branch[i][k] for i in range(len(flat))])  # (m*o, T, d, d)
        members = members.reshape((m, o) + members.shape[1:])
        out.append([Assemblage(members[:, :, i], t) for i, t in enumerate(times)])
    return out


def assemblage_series(sc: Scenario, times: Sequence[float]) -> list[Assemblage]:
    """Assemblages at every time, using one trajectory per measurement branch."""
    return assemblage_series_by_target(sc, times, [sc.target])[0]


def make_st_assemblage(sc: Scenario, t: float) -> Assemblage:
    """Spatio-temporal assemblage tr_A Lambda_t[(sqrt F (x) 1) rho0 (sqrt F (x) 1)]."""
    if t < 0:
        raise ValueError("time must be non-negative")
    return assemblage_series(sc, [t])[0]


def make_temporal_assemblage(sc: Scenario, t: float) -> Assemblage:
    """p(a|x) Lambda_t[post-measurement state] for a single measured system."""
    if sc.mode is not Mode.TEMPORAL:
        raise ValueError("scenario is not in temporal mode")
    return make_st_assemblage(sc, t)


@dataclass(frozen=True)
class ValidationReport:
    hermitian: bool
    psd: bool
    normalized: bool
    no_signalling: bool
    max_hermiticity_error: float
    min_eigenvalue: float
    max_normalization_error: float
    max_marginal_spread: float
    notes: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        """Hard checks only; signalling is expected for temporal-type channels."""
        return self.hermitian and self.psd and self.normalized


def validate(asm: Assemblage, atol: float = 1e-8, norm_tol: float = 1e-7) -> ValidationReport:
    mem = np.asarray(asm.members)
    herm_err = float(np.max(np.abs(mem - mem.conj().swapaxes(-1, -2))))
    min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (mem + mem.conj().swapaxes(-1, -2)))))
    norm_err = float(np.max(np.abs(asm.probabilities().sum(axis=1) - 1)))
    marg = asm.marginals()
    spread = float(np.max(np.abs(marg - marg[0]))) if asm.n_settings > 1 else 0.0
    notes = []
    no_sig = spread <= atol
    if not no_sig:
        notes.append(
            "sum_a sigma_{a|x} depends on x: the measurement disturbance reaches the target "
            "through the channel, as expected for temporal-type scenarios"
        )
    return ValidationReport(
        hermitian=herm_err <= atol,
        psd=min_eig >= -atol,
        normalized=norm_err <= norm_tol,
        no_signalling=no_sig,
        max_hermiticity_error=herm_err,
        min_eigenvalue=min_eig,
        max_normalization_error=norm_err,
        max_marginal_spread=spread,
        notes=tuple(notes),
    )


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def dumps(asm: Assemblage) -> str:
    """Header ``m o d t``, then one block per (x, a): a tag line and d rows of re/im pairs."""
    out = io.StringIO()
    out.write(f"{asm.n_settings} {asm.n_outcomes} {asm.dim} {_fmt(asm.time)}\n")
    for x in range(asm.n_settings):
        for a in range(asm.n_outcomes):
            out.write(f"# x={x} a={a}\n")
            for row in asm.members[x, a]:
                out.write(" ".join(f"{_fmt(v.real)} {_fmt(v.imag)}" for v in row) + "\n")
    return out.getvalue()


def loads(text: str) -> Assemblage:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    m, o, d = int(head[0]), int(head[1]), int(head[2])
    t = float(head[3])
    rows = [ln for ln in lines[1:] if not ln.startswith("#")]
    if len(rows) != m * o * d:
        raise ValueError(f"expected {m * o * d} matrix rows, found {len(rows)}")
    vals = np.array([[float(v) for v in r.split()] for r in rows])
    if vals.shape != (m * o * d, 2 * d):
        raise ValueError("malformed matrix rows")
    mem = (vals[:, 0::2] + 1j * vals[:, 1::2]).reshape(m, o, d, d)
    return Assemblage(mem, t)


def save(asm: Assemblage, path: str | Path) -> None:
    Path(path).write_text(dumps(asm))


def load(path: str | Path) -> Assemblage:
    return loads(Path(path).read_text())
