"""Hidden-state certification and the two steerability measures.

Each program optimizes over one subnormalized state ``rho_lambda`` per
response function lambda.  Hidden-variable responses are restricted to the
o**m deterministic strategies; any stochastic response is a convex
combination of them, so nothing is lost.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .assemblage import Assemblage, Scenario, assemblage_series
from .sdp import SdpProblem, SdpSolution, SolverOptions, embed_hermitian, solve, unembed_hermitian

REPORT_THRESHOLD = 1e-7
VANISHING_THRESHOLD = 1e-3
MAX_STRATEGIES = 10**6
# Member eigenvalues at or below this count as exact zeros in the weight program.
SUPPORT_TOL = 1e-9


class SolverFailure(RuntimeError):
    def __init__(self, message: str, solution: SdpSolution):
        super().__init__(message)
        self.solution = solution


class Measure(str, Enum):
    WEIGHT = "weight"
    ROBUSTNESS = "robustness"


def enumerate_strategies(m: int, o: int) -> np.ndarray:
    """All deterministic responses as a 0/1 table ``D[lambda, x, a]``.

    lambda enumerates the outcome tuples (a_0, ..., a_{m-1}) in lexicographic order.
    """
    if m < 1 or o < 1:
        raise ValueError("need at least one setting and one outcome")
    if o**m > MAX_STRATEGIES:
        raise ValueError(f"{o}**{m} deterministic strategies exceed the guard of {MAX_STRATEGIES}")
    table = np.zeros((o**m, m, o))
    for lam, outcomes in enumerate(itertools.product(range(o), repeat=m)):
        table[lam, np.arange(m), outcomes] = 1.0
    return table


def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal (Hilbert-Schmidt) basis of d x d Hermitian matrices, shape (d*d, d, d)."""
    out = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1
        out.append(e)
    for i, j in itertools.combinations(range(d), 2):
        e = np.zeros((d, d), dtype=complex)
        e[i, j] = e[j, i] = 1 / np.sqrt(2)
        out.append(e)
        e = np.zeros((d, d), dtype=complex)
        e[i, j], e[j, i] = -1j / np.sqrt(2), 1j / np.sqrt(2)
        out.append(e)
    return np.array(out, dtype=complex).reshape(d * d, d, d)


def _embed_stack(mats: np.ndarray) -> np.ndarray:
    re, im = mats.real, mats.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


class _Layout:
    """Variable layout: the real coordinates of each rho_lambda, then extras.

    ``supports[lambda]`` is a d x r isometry; rho_lambda = V X V^+ with X an
    r x r Hermitian variable (r = 0 removes the variable).
    """

    def __init__(self, asm: Assemblage, strategies: np.ndarray, extra: int = 0, supports=None):
        self.m, self.o, self.d = asm.n_settings, asm.n_outcomes, asm.dim
        if strategies.shape[1:] != (self.m, self.o):
            raise ValueError("strategy table does not match the assemblage layout")
        self.strategies = strategies
        self.n_lam = strategies.shape[0]
        eye = np.eye(self.d, dtype=complex)
        self.supports = [eye] * self.n_lam if supports is None else list(supports)
        self.offsets = [0]
        for v in self.supports:
            self.offsets.append(self.offsets[-1] + v.shape[1] ** 2)
        self.n = self.offsets[-1] + extra
        self.bases = {r: hermitian_basis(r) for r in {v.shape[1] for v in self.supports}}

    def _coords(self, lam: int) -> slice:
        return slice(self.offsets[lam], self.offsets[lam + 1])

    def rho_block(self, lam: int) -> np.ndarray:
        """Coefficient stack mapping x -> embed(X_lambda), shape (n, 2r, 2r)."""
        r = self.supports[lam].shape[1]
        g = np.zeros((self.n, 2 * r, 2 * r))
        g[self._coords(lam)] = _embed_stack(self.bases[r])
        return g

    def sum_block(self, x: int, a: int, proj: np.ndarray | None = None) -> np.ndarray:
        """Coefficients of embed(P^+ (sum_lambda D(a|x,lambda) rho_lambda) P)."""
        proj = np.eye(self.d, dtype=complex) if proj is None else proj
        q = proj.shape[1]
        g = np.zeros((self.n, 2 * q, 2 * q))
        for lam in range(self.n_lam):
            w = self.strategies[lam, x, a]
            v = self.supports[lam]
            if w != 0 and v.shape[1]:
                pv = proj.conj().T @ v
                mats = pv @ self.bases[v.shape[1]] @ pv.conj().T
                g[self._coords(lam)] = w * _embed_stack(mats)
        return g

    def trace_vector(self) -> np.ndarray:
        t = np.zeros(self.n)
        for lam, v in enumerate(self.supports):
            r = v.shape[1]
            t[self._coords(lam)] = np.trace(self.bases[r], axis1=1, axis2=2).real
        return t

    def hidden_states(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        """rho_lambda from the solver's slack blocks; the first blocks are the X_lambda."""
        out = np.zeros((self.n_lam, self.d, self.d), dtype=complex)
        it = iter(blocks)
        for lam, v in enumerate(self.supports):
            if v.shape[1]:
                out[lam] = v @ unembed_hermitian(next(it)) @ v.conj().T
        return out

    def rho_blocks(self) -> tuple[list[np.ndarray], list[np.ndarray]]:
        h, G = [], []
        for lam, v in enumerate(self.supports):
            r = v.shape[1]
            if r:
                h.append(np.zeros((2 * r, 2 * r)))
                G.append(-self.rho_block(lam))
        return h, G


def _strategies_for(asm: Assemblage, strategies: np.ndarray | None) -> np.ndarray:
    if strategies is None:
        return enumerate_strategies(asm.n_settings, asm.n_outcomes)
    strategies = np.asarray(strategies, dtype=float)
    if np.any(strategies < 0) or not np.allclose(strategies.sum(axis=2), 1):
        raise ValueError("response functions must be conditional probability tables")
    return strategies


def _support(m: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis (d x r) of the eigenvectors of ``m`` with eigenvalue above ``tol``."""
    w, v = np.linalg.eigh(m)
    return v[:, w > tol]


def _intersection(bases: Sequence[np.ndarray], d: int) -> np.ndarray:
    """Orthonormal basis of the intersection of the spans of ``bases``."""
    miss = sum(np.eye(d) - b @ b.conj().T for b in bases)
    w, v = np.linalg.eigh(miss)
    return v[:, w < 1e-9]


def weight_problem(
    asm: Assemblage, strategies: np.ndarray | None = None, reduce: bool = True
) -> tuple[SdpProblem, _Layout]:
    """minimize -tr sum rho_l  s.t.  rho_l PSD,  sigma_{a|x} - sum_l D rho_l PSD.

    With ``reduce`` the program is restricted to its minimal face: since
    rho_l <= sigma_{a|x} whenever D(a|x,l) > 0, rho_l lives on the
    intersection of those members' supports, and each member constraint only
    needs to hold on the member's own support.  Member eigenvalues below
    ``SUPPORT_TOL`` count as zero.  The restricted program has strictly
    feasible points on both sides, which the unrestricted one lacks as soon
    as a member is rank deficient.
    """
    strategies = _strategies_for(asm, strategies)
    members = asm.members
    projs = None
    supports = None
    if reduce:
        projs = [[_support(members[x, a], SUPPORT_TOL) for a in range(asm.n_outcomes)] for x in range(asm.n_settings)]
        supports = []
        for lam in range(strategies.shape[0]):
            used = [projs[x][a] for x in range(asm.n_settings) for a in range(asm.n_outcomes) if strategies[lam, x, a] > 0]
            supports.append(_intersection(used, asm.dim))
    lay = _Layout(asm, strategies, supports=supports)
    h, G = lay.rho_blocks()
    for x in range(lay.m):
        for a in range(lay.o):
            proj = None if projs is None else projs[x][a]
            if proj is not None and proj.shape[1] == 0:
                continue
            sig = members[x, a] if proj is None else proj.conj().T @ members[x, a] @ proj
            h.append(embed_hermitian(0.5 * (sig + sig.conj().T)))
            G.append(lay.sum_block(x, a, proj))
    return SdpProblem(-lay.trace_vector(), tuple(h), tuple(G)), lay


def robustness_problem(asm: Assemblage, strategies: np.ndarray | None = None) -> tuple[SdpProblem, _Layout]:
    """minimize tr sum rho_l  s.t.  rho_l PSD,  sum_l D rho_l - sigma_{a|x} PSD."""
    lay = _Layout(asm, _strategies_for(asm, strategies))
    h, G = lay.rho_blocks()
    for x in range(lay.m):
        for a in range(lay.o):
            h.append(-embed_hermitian(asm.members[x, a]))
            G.append(-lay.sum_block(x, a))
    return SdpProblem(lay.trace_vector(), tuple(h), tuple(G)), lay


def feasibility_problem(asm: Assemblage, strategies: np.ndarray | None = None) -> tuple[SdpProblem, _Layout]:
    """minimize t  s.t.  rho_l PSD,  -t 1 <= sigma_{a|x} - sum_l D rho_l <= t 1,  tr sum rho_l = 1.

    t* = 0 exactly when the hidden-state model exists; otherwise t* is the
    smallest worst-case operator-norm mismatch over all hidden-state models.
    """
    lay = _Layout(asm, _strategies_for(asm, strategies), extra=1)
    k = 2 * lay.d
    t_coef = np.zeros((lay.n, k, k))
    t_coef[-1] = np.eye(k)
    h, G = lay.rho_blocks()
    for x in range(lay.m):
        for a in range(lay.o):
            sig = embed_hermitian(asm.members[x, a])
            s_blk = lay.sum_block(x, a)
            # t + (sigma - sum D rho) PSD
            h.append(sig)
            G.append(s_blk - t_coef)
            # t - (sigma - sum D rho) PSD
            h.append(-sig)
            G.append(-s_blk - t_coef)
    c = np.zeros(lay.n)
    c[-1] = 1.0
    A = lay.trace_vector()[None, :]
    return SdpProblem(c, tuple(h), tuple(G), A, np.array([1.0])), lay


@dataclass(frozen=True)
class SteeringResult:
    measure: str
    value: float
    raw_value: float
    hidden_states: np.ndarray  # (n_lambda, d, d) optimal rho_lambda
    status: str
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    noise: np.ndarray | None = None  # robustness only: tau_{a|x}, shape (m, o, d, d)


def _run(problem: SdpProblem, options: SolverOptions | None) -> SdpSolution:
    sol = solve(problem, options or SolverOptions())
    if sol.status != "optimal":
        raise SolverFailure(f"SDP solver returned {sol.status}: {sol.message}", sol)
    return sol


def _result(measure: str, value: float, raw: float, lay: _Layout, sol: SdpSolution, noise=None) -> SteeringResult:
    return SteeringResult(
        measure=measure,
        value=value,
        raw_value=raw,
        hidden_states=lay.hidden_states(sol.s),
        status=sol.status,
        gap=sol.gap,
        primal_residual=sol.primal_residual,
        dual_residual=sol.dual_residual,
        iterations=sol.iterations,
        noise=noise,
    )


def _threshold(v: float) -> float:
    return 0.0 if v < REPORT_THRESHOLD else v


def sts_weight(
    asm: Assemblage,
    strategies: np.ndarray | None = None,
    options: SolverOptions | None = None,
    reduce: bool = True,
) -> SteeringResult:
    """1 - max tr sum rho_l over hidden-state parts that fit under the assemblage."""
    problem, lay = weight_problem(asm, strategies, reduce=reduce)
    if lay.n == 0:
        # No strategy has room for a hidden state: nothing fits under the assemblage.
        return SteeringResult(
            Measure.WEIGHT.value, 1.0, 1.0, np.zeros((lay.n_lam, lay.d, lay.d), dtype=complex),
            "optimal", 0.0, 0.0, 0.0, 0,
        )
    sol = _run(problem, options)
    raw = 1.0 + sol.primal_objective
    value = _threshold(min(1.0, max(0.0, raw)))
    return _result(Measure.WEIGHT.value, value, raw, lay, sol)


def sts_robustness(
    asm: Assemblage, strategies: np.ndarray | None = None, options: SolverOptions | None = None
) -> SteeringResult:
    """min tr sum rho_l - 1 over hidden-state models lying above the assemblage."""
    problem, lay = robustness_problem(asm, strategies)
    sol = _run(problem, options)
    raw = sol.primal_objective - 1.0
    value = _threshold(max(0.0, raw))
    rho = lay.hidden_states(sol.s)
    noise = None
    if value > 0:
        fitted = np.einsum("lxa,lij->xaij", lay.strategies, rho)
        noise = (fitted - asm.members) / value
    return _result(Measure.ROBUSTNESS.value, value, raw, lay, sol, noise)


def unsteerability_margin(
    asm: Assemblage, strategies: np.ndarray | None = None, options: SolverOptions | None = None
) -> SteeringResult:
    problem, lay = feasibility_problem(asm, strategies)
    sol = _run(problem, options)
    raw = sol.primal_objective
    return _result("feasibility", max(0.0, raw), raw, lay, sol)


def is_unsteerable(
    asm: Assemblage, strategies: np.ndarray | None = None, options: SolverOptions | None = None
) -> tuple[bool, float]:
    """Whether a hidden-state model reproduces ``asm``, with the optimal slack as margin."""
    res = unsteerability_margin(asm, strategies, options)
    return res.raw_value <= REPORT_THRESHOLD, res.raw_value


MEASURES = {Measure.WEIGHT: sts_weight, Measure.ROBUSTNESS: sts_robustness}


def measure_value(asm: Assemblage, measure: Measure | str, options: SolverOptions | None = None) -> SteeringResult:
    return MEASURES[Measure(measure)](asm, options=options)


def measure_sweep(
    sc: Scenario, t_grid: Sequence[float], measure: Measure | str, options: SolverOptions | None = None
) -> np.ndarray:
    """One measure value per grid time, in grid order."""
    asms = assemblage_series(sc, t_grid)
    return np.array([measure_value(a, measure, options).value for a in asms])


def vanishing_time(times: Sequence[float], values: Sequence[float], threshold: float = VANISHING_THRESHOLD) -> float | None:
    """Last grid time at which the series exceeds ``threshold`` (None if it never does)."""
    above = np.flatnonzero(np.asarray(values) > threshold)
    return float(np.asarray(times)[above[-1]]) if above.size else None
