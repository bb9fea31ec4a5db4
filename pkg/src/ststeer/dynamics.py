"""Lindblad models of the two networks and a master-equation integrator.

Dissipators use the factor-2 form ``gamma (2 A rho A^+ - A^+A rho - rho A^+A)``
throughout, so a sigma_z collapse operator at rate gamma damps coherences as
``exp(-4 gamma t)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .quantum import (
    ATOL,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SITE_Z,
    embed_site_operator,
    hermitize,
    is_hermitian,
)

SPEED_OF_LIGHT_CM_PER_S = 2.99792458e10
# rad/ps per cm^-1
CM_INV_TO_RAD_PER_PS = 2 * math.pi * SPEED_OF_LIGHT_CM_PER_S * 1e-12

# Site energies (diagonal) and couplings in cm^-1 for the seven-site FMO monomer.
FMO_HAMILTONIAN_CM = np.array(
    [
        [215.0, -104.1, 5.1, -4.3, 4.7, -15.1, -7.8],
        [-104.1, 220.0, 32.6, 7.1, 5.4, 8.3, 0.8],
        [5.1, 32.6, 0.0, -46.8, 1.0, -8.1, 5.1],
        [-4.3, 7.1, -46.8, 125.0, -70.7, -14.7, -61.5],
        [4.7, 5.4, 1.0, -70.7, 450.0, 89.7, -2.5],
        [-15.1, 8.3, -8.1, -14.7, 89.7, 330.0, 32.7],
        [-7.8, 0.8, 5.1, -61.5, -2.5, 32.7, 280.0],
    ]
)
FMO_DEPHASING_CM = 7.7 / 8
FMO_SINK_CM = 5.3


class StiffnessError(RuntimeError):
    """The adaptive step size collapsed below the representable resolution."""


def cm_inv_to_angular(v: float) -> float:
    """Convert a wavenumber in cm^-1 to an angular frequency in rad/ps."""
    return v * CM_INV_TO_RAD_PER_PS


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian plus weighted collapse operators.

    ``subspace`` is set on reduced models: it lists, for each reduced basis
    vector, the index of the product-basis state of the parent space with
    factor dims ``dims``.
    """

    hamiltonian: np.ndarray
    collapse_terms: tuple[tuple[np.ndarray, float], ...] = ()
    dims: tuple[int, ...] = ()
    subspace: np.ndarray | None = None

    def __post_init__(self) -> None:
        h = np.array(self.hamiltonian, dtype=complex)
        if not is_hermitian(h):
            raise ValueError("Hamiltonian is not Hermitian")
        terms = []
        for op, rate in self.collapse_terms:
            op = np.array(op, dtype=complex)
            if op.shape != h.shape:
                raise ValueError("collapse operator dimension differs from the Hamiltonian")
            if rate < 0:
                raise ValueError(f"negative rate {rate}")
            op.setflags(write=False)
            terms.append((op, float(rate)))
        h = hermitize(h)
        h.setflags(write=False)
        dims = tuple(self.dims) if self.dims else (h.shape[0],)
        if self.subspace is None and int(np.prod(dims)) != h.shape[0]:
            raise ValueError("factor dims do not match the model dimension")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "collapse_terms", tuple(terms))
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def is_reduced(self) -> bool:
        return self.subspace is not None

    def lift(self, rho: np.ndarray) -> np.ndarray:
        """Map a state of a reduced model back into the full product space."""
        if self.subspace is None:
            return np.asarray(rho)
        n = int(np.prod(self.dims))
        full = np.zeros((n, n), dtype=complex)
        full[np.ix_(self.subspace, self.subspace)] = rho
        return full


@dataclass(frozen=True)
class ChainParams:
    J12: float = 1.0
    J23: float = 1.0
    gamma: float = 0.0


@dataclass(frozen=True)
class FmoParams:
    hamiltonian_cm: np.ndarray = field(default_factory=lambda: FMO_HAMILTONIAN_CM.copy())
    gamma_dp: float = FMO_DEPHASING_CM
    gamma_sink: float = FMO_SINK_CM
    include_reaction_center: bool = True
    sink_site: int = 2


def _hopping(j: float, n: int, m: int, dims: Sequence[int]) -> np.ndarray:
    sp_n = embed_site_operator(SIGMA_PLUS, n, dims)
    sm_m = embed_site_operator(SIGMA_MINUS, m, dims)
    a = sp_n @ sm_m
    return j * (a + a.conj().T)


def build_three_qubit_chain(p: ChainParams) -> LindbladModel:
    """XY-coupled chain 1-2-3 with optional dephasing of the middle qubit."""
    if min(p.J12, p.J23, p.gamma) < 0:
        raise ValueError("chain parameters must be non-negative")
    dims = (2, 2, 2)
    h = _hopping(p.J12, 0, 1, dims) + _hopping(p.J23, 1, 2, dims)
    terms = ((embed_site_operator(SITE_Z, 1, dims), p.gamma),) if p.gamma > 0 else ()
    return LindbladModel(h, terms, dims)


def build_network_model(
    hamiltonian: np.ndarray,
    dephasing: Sequence[float] | float,
    *,
    sink_site: int | None = None,
    sink_rate: float = 0.0,
    include_sink_qubit: bool = False,
) -> LindbladModel:
    """One qubit per site; ``hamiltonian`` holds energies on the diagonal and couplings off it.

    All numbers are taken in the model's own angular-frequency units.  With
    ``include_sink_qubit`` an extra trailing qubit receives excitations from
    ``sink_site`` at ``sink_rate``.
    """
    hm = np.asarray(hamiltonian, dtype=float)
    n_sites = hm.shape[0]
    if hm.shape != (n_sites, n_sites) or not np.allclose(hm, hm.T):
        raise ValueError("site Hamiltonian must be a symmetric square matrix")
    dims = (2,) * (n_sites + (1 if include_sink_qubit else 0))
    h = sum(0.5 * hm[n, n] * embed_site_operator(SITE_Z, n, dims) for n in range(n_sites))
    for n, m in itertools.combinations(range(n_sites), 2):
        if hm[n, m] != 0:
            h = h + _hopping(hm[n, m], n, m, dims)
    rates = np.broadcast_to(np.asarray(dephasing, dtype=float), (n_sites,))
    terms = [(embed_site_operator(SITE_Z, n, dims), float(r)) for n, r in enumerate(rates) if r > 0]
    if include_sink_qubit and sink_rate > 0:
        if sink_site is None:
            raise ValueError("sink_site is required with a sink rate")
        s = embed_site_operator(SIGMA_PLUS, n_sites, dims) @ embed_site_operator(SIGMA_MINUS, sink_site, dims)
        terms.append((s, float(sink_rate)))
    return LindbladModel(h, tuple(terms), dims)


def build_fmo_model(p: FmoParams = FmoParams()) -> LindbladModel:
    """Seven-site FMO monomer with site dephasing and a reaction-center sink.

    Energies and rates are converted from cm^-1 to rad/ps; time is in ps.
    """
    hm = np.asarray(p.hamiltonian_cm, dtype=float)
    if hm.shape != (7, 7) or not np.allclose(hm, hm.T):
        raise ValueError("FMO Hamiltonian must be a symmetric 7x7 matrix")
    return build_network_model(
        hm * CM_INV_TO_RAD_PER_PS,
        cm_inv_to_angular(p.gamma_dp),
        sink_site=p.sink_site,
        sink_rate=cm_inv_to_angular(p.gamma_sink),
        include_sink_qubit=p.include_reaction_center,
    )


class _Generator:
    """Precomputed pieces of the Lindblad generator.

    Diagonal collapse operators are folded into one elementwise mask; the
    anti-commutator parts of the others go into a non-Hermitian effective
    Hamiltonian, so rhs = Y + Y^+ + sum 2g A rho A^+ + mask * rho with
    Y = -i K rho.  Every output is Hermitian by construction.
    """

    def __init__(self, model: LindbladModel) -> None:
        d = model.dim
        k = model.hamiltonian.astype(complex)
        mask = np.zeros((d, d), dtype=complex)
        jumps = []
        for op, rate in model.collapse_terms:
            if rate == 0:
                continue
            if np.count_nonzero(op - np.diag(np.diagonal(op))) == 0:
                a = np.diagonal(op)
                n = np.abs(a) ** 2
                mask += rate * (2 * np.outer(a, a.conj()) - n[:, None] - n[None, :])
            else:
                k = k - 0.5j * rate * 2 * (op.conj().T @ op)
                jumps.append((2 * rate, op, op.conj().T))
        self.k = k
        self.mask = mask if np.any(mask) else None
        self.jumps = jumps

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        y = -1j * (self.k @ rho)
        out = y + y.conj().T
        for g, a, ad in self.jumps:
            out += g * (a @ rho @ ad)
        if self.mask is not None:
            out += self.mask * rho
        return out


def lindblad_rhs(model: LindbladModel, rho: np.ndarray) -> np.ndarray:
    """-i[H, rho] + sum_k g_k (2 A rho A^+ - A^+A rho - rho A^+A)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (model.dim, model.dim):
        raise ValueError(f"state shape {rho.shape} does not match model dim {model.dim}")
    return _Generator(model)(rho)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), d, d)

    def __post_init__(self) -> None:
        if len(self.times) != len(self.states):
            raise ValueError("one state per time is required")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


# Dormand-Prince 5(4) tableau.
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array(_A[6] + [0])
_E = _B - np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


@dataclass(frozen=True)
class IntegratorOptions:
    rtol: float = 1e-8
    atol: float = 1e-10
    first_step: float | None = None
    max_steps: int = 1_000_000


def _initial_step(f, y0: np.ndarray, k0: np.ndarray, opts: IntegratorOptions) -> float:
    scale = opts.atol + opts.rtol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(k0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * k0
    d2 = np.max(np.abs(f(y1) - k0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def evolve(
    model: LindbladModel,
    rho0: np.ndarray,
    t_grid: Sequence[float],
    options: IntegratorOptions = IntegratorOptions(),
) -> Trajectory:
    """Integrate the master equation and return the states at ``t_grid``.

    Steps are shortened to land exactly on every grid time.  The error
    estimate uses the max norm over all matrix entries so the step sequence
    does not depend on how many entries are identically zero.
    """
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ValueError("t_grid must be a non-empty 1-d sequence")
    if times[0] != 0 or np.any(np.diff(times) <= 0):
        raise ValueError("t_grid must start at 0 and increase strictly")
    y = np.array(rho0, dtype=complex)
    if y.shape != (model.dim, model.dim):
        raise ValueError(f"initial state shape {y.shape} does not match model dim {model.dim}")
    y = hermitize(y)
    f = _Generator(model)
    out = np.empty((len(times),) + y.shape, dtype=complex)
    out[0] = y
    if len(times) == 1:
        return Trajectory(times, out)

    k = [None] * 7
    k[0] = f(y)
    h = options.first_step or _initial_step(f, y, k[0], options)
    t = 0.0
    steps = 0
    for i_out in range(1, len(times)):
        t_target = times[i_out]
        while t < t_target:
            steps += 1
            if steps > options.max_steps:
                raise StiffnessError(f"exceeded {options.max_steps} steps at t={t}")
            remaining = t_target - t
            clipped = h >= remaining
            h_try = remaining if clipped else h
            for s in range(1, 7):
                acc = y + h_try * sum(a * k[j] for j, a in enumerate(_A[s]) if a != 0)
                k[s] = f(acc)
            y_new = acc  # stage 7 evaluates at the 5th-order solution (FSAL)
            err_vec = h_try * sum(e * k[j] for j, e in enumerate(_E) if e != 0)
            scale = options.atol + options.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.max(np.abs(err_vec) / scale))
            if err <= 1.0:
                t = t_target if clipped else t + h_try
                y = hermitize(y_new)
                k[0] = k[6]
                factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                h_new = h_try * factor
                h = max(h, h_new) if clipped else h_new
            else:
                h = h_try * max(0.2, 0.9 * err ** -0.2)
            if h < 1e-14 * max(1.0, abs(t)):
                raise StiffnessError(f"step size underflow at t={t}")
        out[i_out] = y
    return Trajectory(times, out)


def excitation_numbers(dims: Sequence[int]) -> np.ndarray:
    """Total excitation (sum of level indices) of each product-basis state."""
    levels = np.indices(tuple(dims)).reshape(len(dims), -1)
    return levels.sum(axis=0)


def conserves_excitations(model: LindbladModel, atol: float = ATOL) -> bool:
    n = np.diag(excitation_numbers(model.dims)).astype(complex)
    ops = [model.hamiltonian] + [op for op, _ in model.collapse_terms]
    return all(np.allclose(n @ op - op @ n, 0, atol=atol) for op in ops)


def reduce_to_excitation_sectors(
    model: LindbladModel, rho0: np.ndarray, max_excitations: int = 1
) -> tuple[LindbladModel, np.ndarray]:
    """Restrict model and state to the sectors with at most ``max_excitations``.

    Exact when the model conserves total excitation number and ``rho0`` is
    supported on those sectors; both conditions are checked.
    """
    if model.is_reduced:
        raise ValueError("model is already reduced")
    if not conserves_excitations(model):
        raise ValueError("model does not conserve total excitation number")
    rho0 = np.asarray(rho0, dtype=complex)
    basis = np.flatnonzero(excitation_numbers(model.dims) <= max_excitations)
    outside = np.ones(model.dim, dtype=bool)
    outside[basis] = False
    if np.any(np.abs(rho0[outside]) > ATOL) or np.any(np.abs(rho0[:, outside]) > ATOL):
        raise ValueError("initial state has weight outside the retained excitation sectors")
    sel = np.ix_(basis, basis)
    reduced = LindbladModel(
        model.hamiltonian[sel],
        tuple((op[sel], rate) for op, rate in model.collapse_terms),
        model.dims,
        subspace=basis,
    )
    return reduced, rho0[sel]
