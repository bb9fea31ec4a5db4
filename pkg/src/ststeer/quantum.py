"""Dense linear algebra and state primitives shared by the rest of the package.

Subsystem ordering: factor 0 is the leftmost Kronecker factor.  For qubits the
basis index 0 is the ground level and 1 the excited level.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

ATOL = 1e-9

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# Excitation ladder in the ground=0 / excited=1 convention.
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
# |e><e| - |g><g|, the site operator of the excitation-transfer models.
SITE_Z = np.array([[-1, 0], [0, 1]], dtype=complex)


class QuantumStateError(ValueError):
    """Raised when an operator violates a physical validity condition."""


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def is_hermitian(m: np.ndarray, atol: float = ATOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(m, m.conj().T, rtol=0, atol=atol)


def min_eigenvalue(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitize(np.asarray(m, dtype=complex)))[0])


def is_psd(m: np.ndarray, atol: float = ATOL) -> bool:
    return is_hermitian(m, atol) and min_eigenvalue(m) >= -atol


def allclose(a: np.ndarray, b: np.ndarray, atol: float = ATOL) -> bool:
    """Tolerance-based matrix equality; never compare matrices bitwise."""
    a, b = np.asarray(a), np.asarray(b)
    return a.shape == b.shape and bool(np.allclose(a, b, rtol=0, atol=atol))


def kron(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices, left to right."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    return reduce(np.kron, (np.asarray(op, dtype=complex) for op in ops))


def ket(index: int, dim: int = 2) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    return np.outer(vec, vec.conj())


def product_basis_state(levels: Sequence[int], dims: Sequence[int] | None = None) -> np.ndarray:
    """Ket |l_0 l_1 ...> in the product basis."""
    dims = [2] * len(levels) if dims is None else list(dims)
    return kron(*(ket(l, d) for l, d in zip(levels, dims)))


def bell_state() -> np.ndarray:
    """Density matrix of |Phi+> = (|00> + |11>)/sqrt(2)."""
    return projector(np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2))


def werner_state(p: float) -> np.ndarray:
    """p |Phi+><Phi+| + (1 - p) 1/4."""
    if not 0 <= p <= 1:
        raise ValueError(f"Werner visibility {p} outside [0, 1]")
    return p * bell_state() + (1 - p) * np.eye(4, dtype=complex) / 4


def _check_dims(dims: Sequence[int], size: int) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims) or int(np.prod(dims)) != size:
        raise ValueError(f"factor dims {dims} do not match matrix size {size}")
    return dims


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every factor not listed in ``keep``.

    The kept factors stay in ascending order regardless of the order given.
    """
    rho = np.asarray(rho)
    dims = _check_dims(dims, rho.shape[0])
    keep = sorted(set(int(k) for k in keep))
    n = len(dims)
    if not keep or any(k < 0 or k >= n for k in keep):
        raise ValueError(f"invalid keep set {keep} for {n} factors")
    drop = [i for i in range(n) if i not in keep]
    t = rho.reshape(dims + dims)
    # Trace pairs from the highest index down so remaining axis numbers stay valid.
    for i in sorted(drop, reverse=True):
        t = np.trace(t, axis1=i, axis2=i + t.ndim // 2)
    d_keep = int(np.prod([dims[k] for k in keep]))
    return t.reshape(d_keep, d_keep)


def psd_sqrt(f: np.ndarray, atol: float = ATOL) -> np.ndarray:
    """Hermitian PSD square root via eigendecomposition."""
    f = np.asarray(f, dtype=complex)
    if not is_hermitian(f, atol):
        raise QuantumStateError("psd_sqrt needs a Hermitian matrix")
    w, v = np.linalg.eigh(hermitize(f))
    if w[0] < -atol:
        raise QuantumStateError(f"matrix is not PSD (min eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    return hermitize((v * np.sqrt(w)) @ v.conj().T)


def embed_site_operator(op: np.ndarray, site: int, dims: Sequence[int]) -> np.ndarray:
    """Place ``op`` on factor ``site`` with identities elsewhere."""
    dims = [int(d) for d in dims]
    if not 0 <= site < len(dims):
        raise IndexError(f"site {site} out of range for {len(dims)} factors")
    op = np.asarray(op, dtype=complex)
    if op.shape != (dims[site], dims[site]):
        raise ValueError(f"operator shape {op.shape} does not match factor dim {dims[site]}")
    return kron(*(op if i == site else np.eye(d, dtype=complex) for i, d in enumerate(dims)))


@dataclass(frozen=True)
class DensityMatrix:
    """A validated state with its tensor-factor structure.

    ``subnormalized`` relaxes the unit-trace condition to a trace in [0, 1].
    """

    matrix: np.ndarray
    dims: tuple[int, ...]
    subnormalized: bool = False

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        object.__setattr__(self, "dims", _check_dims(self.dims, m.shape[0]))
        if not is_hermitian(m):
            raise QuantumStateError("density matrix is not Hermitian")
        m = hermitize(m)
        if min_eigenvalue(m) < -ATOL:
            raise QuantumStateError("density matrix is not PSD")
        tr = float(np.trace(m).real)
        if self.subnormalized:
            if not -ATOL <= tr <= 1 + ATOL:
                raise QuantumStateError(f"subnormalized trace {tr} outside [0, 1]")
        elif abs(tr - 1) > ATOL:
            raise QuantumStateError(f"trace {tr} differs from 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def partial_trace(self, keep: Iterable[int]) -> DensityMatrix:
        keep = sorted(set(keep))
        reduced = partial_trace(self.matrix, self.dims, keep)
        return DensityMatrix(reduced, tuple(self.dims[k] for k in keep), self.subnormalized)


@dataclass(frozen=True)
class Povm:
    effects: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        effects = tuple(np.array(e, dtype=complex) for e in self.effects)
        if not effects:
            raise ValueError("a POVM needs at least one effect")
        d = effects[0].shape[0]
        for e in effects:
            if e.shape != (d, d) or not is_psd(e):
                raise QuantumStateError("POVM effects must be Hermitian PSD of equal size")
            e.setflags(write=False)
        if not allclose(sum(effects), np.eye(d)):
            raise QuantumStateError("POVM effects do not sum to the identity")
        object.__setattr__(self, "effects", effects)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.effects)


@dataclass(frozen=True)
class MeasurementSet:
    settings: tuple[Povm, ...]

    def __post_init__(self) -> None:
        settings = tuple(self.settings)
        if not settings:
            raise ValueError("need at least one measurement setting")
        if len({(p.dim, p.n_outcomes) for p in settings}) != 1:
            raise ValueError("all settings must share outcome count and dimension")
        object.__setattr__(self, "settings", settings)

    @property
    def n_settings(self) -> int:
        return len(self.settings)

    @property
    def n_outcomes(self) -> int:
        return self.settings[0].n_outcomes

    @property
    def dim(self) -> int:
        return self.settings[0].dim

    def effect(self, x: int, a: int) -> np.ndarray:
        return self.settings[x].effects[a]


def projective_measurement(observable: np.ndarray) -> Povm:
    """Eigenprojectors of a Hermitian observable, largest eigenvalue first."""
    w, v = np.linalg.eigh(hermitize(np.asarray(observable, dtype=complex)))
    order = np.argsort(-w, kind="stable")
    return Povm(tuple(projector(v[:, i]) for i in order))


def pauli_measurement_set() -> MeasurementSet:
    """X, Y, Z projective measurements; outcome 0 is the +1 eigenvalue."""
    return MeasurementSet(tuple(projective_measurement(p) for p in (SIGMA_X, SIGMA_Y, SIGMA_Z)))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed random state of the given rank."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return hermitize(rho / np.trace(rho).real)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))
