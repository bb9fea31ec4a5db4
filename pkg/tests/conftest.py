from __future__ import annotations

import cvxpy as cp
import numpy as np
import pytest

from ststeer.assemblage import Assemblage
from ststeer.quantum import kron, partial_trace, random_density_matrix, random_unitary
from ststeer.sdp import SdpProblem

ACCEPTANCE_LINES: list[str] = []


def random_isometry_kraus(d: int, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    g = rng.normal(size=(d * k, d)) + 1j * rng.normal(size=(d * k, d))
    q, _ = np.linalg.qr(g)
    return [q[i * d : (i + 1) * d] for i in range(k)]


def random_two_qubit_state(rng: np.random.Generator) -> np.ndarray:
    """Noisy partially entangled pure state half the time, product state otherwise."""
    if rng.random() < 0.5:
        th = rng.uniform(0.3, np.pi / 4)
        psi = kron(random_unitary(2, rng), random_unitary(2, rng)) @ np.array([np.cos(th), 0, 0, np.sin(th)])
        p = rng.uniform(0.8, 1.0)
        return p * np.outer(psi, psi.conj()) + (1 - p) * np.eye(4) / 4
    return kron(random_density_matrix(2, rng), random_density_matrix(2, rng))


def random_assemblage(rng: np.random.Generator, m: int = 3, temporal: bool | None = None) -> Assemblage:
    """Measure qubit A in random bases, push the branches through a random channel, keep B.

    Local channels on B give no-signalling assemblages; a joint unitary on AB
    before discarding A gives temporal-type (signalling) ones.
    """
    rho = random_two_qubit_state(rng)
    temporal = bool(rng.random() < 0.3) if temporal is None else temporal
    eps = rng.uniform(0, 0.2)
    kraus = [np.sqrt(1 - eps) * random_unitary(2, rng)] + [np.sqrt(eps) * k for k in random_isometry_kraus(2, 2, rng)]
    if temporal:
        th = rng.uniform(0, np.pi / 4)
        swapish = np.cos(th) * np.eye(4) + 1j * np.sin(th) * np.array(
            [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]
        )
    bases = [random_unitary(2, rng) for _ in range(m)]
    mem = np.zeros((m, 2, 2, 2), dtype=complex)
    for x in range(m):
        for a in range(2):
            proj = kron(np.outer(bases[x][:, a], bases[x][:, a].conj()), np.eye(2))
            branch = proj @ rho @ proj
            if temporal:
                branch = swapish @ branch @ swapish.conj().T
            sb = partial_trace(branch, (2, 2), [1])
            mem[x, a] = sum(k @ sb @ k.conj().T for k in kraus)
    return Assemblage(mem)


def lhs_assemblage(rng: np.random.Generator, m: int = 3, o: int = 2, d: int = 2, n_hidden: int = 4) -> Assemblage:
    """sum_l p(a|x,l) sigma_l with random response functions; unsteerable by construction."""
    weights = rng.dirichlet(np.ones(n_hidden))
    states = [w * random_density_matrix(d, rng) for w in weights]
    resp = rng.dirichlet(np.ones(o), size=(n_hidden, m))  # (l, x, a)
    mem = np.einsum("lxa,lij->xaij", resp, np.array(states))
    return Assemblage(mem)


def cvxpy_value(problem: SdpProblem) -> float:
    """Optimal value of an exported-form SDP from an external conic solver."""
    x = cp.Variable(problem.n)
    cons = [cp.Constant(h) - sum(x[i] * g[i] for i in range(problem.n)) >> 0 for h, g in zip(problem.h, problem.G)]
    if problem.b.size:
        cons.append(problem.A @ x == problem.b)
    prob = cp.Problem(cp.Minimize(problem.c @ x), cons)
    prob.solve(solver=cp.CLARABEL)
    assert prob.status == cp.OPTIMAL
    return float(prob.value)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
