"""Small dense semidefinite programs.

Problems are stored in inequality form::

    minimize    c'x
    subject to  h_j - sum_i x_i G_ji  is PSD   for every block j
                A x = b

with dual ::

    maximize    -sum_j <h_j, Z_j> - b'y
    subject to  sum_j <G_ji, Z_j> + (A'y)_i + c_i = 0,   Z_j PSD.

The solver is a primal-dual path-following method on the homogeneous
self-dual embedding with Nesterov-Todd scaling and a Mehrotra
predictor-corrector.  Blocks of equal size are batched.  Each Newton
system is solved through a QR factorization of the scaled constraint
matrix, then refined once against the full embedding system.
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from .quantum import is_hermitian

log = logging.getLogger(__name__)

REFINEMENT_STEPS = 1
FULL_REFINEMENT_STEPS = 1


@dataclass(frozen=True)
class SdpProblem:
    c: np.ndarray
    h: tuple[np.ndarray, ...]
    G: tuple[np.ndarray, ...]  # per block, shape (n, k, k)
    A: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        hs, gs = [], []
        if len(self.h) != len(self.G):
            raise ValueError("h and G must list the same blocks")
        for h, g in zip(self.h, self.G):
            h = np.asarray(h, dtype=float)
            g = np.asarray(g, dtype=float)
            k = h.shape[0]
            if h.shape != (k, k) or g.shape != (n, k, k):
                raise ValueError(f"block shapes {h.shape}, {g.shape} inconsistent with n={n}")
            if not np.allclose(h, h.T) or not np.allclose(g, g.transpose(0, 2, 1)):
                raise ValueError("constraint matrices must be symmetric")
            hs.append(0.5 * (h + h.T))
            gs.append(0.5 * (g + g.transpose(0, 2, 1)))
        a = np.asarray(self.A, dtype=float)
        if a.size == 0:
            a = np.zeros((0, n))
        b = np.asarray(self.b, dtype=float).ravel()
        if a.shape != (b.size, n):
            raise ValueError(f"equality data shapes {a.shape}, {b.shape} inconsistent with n={n}")
        for arr in [c, a, b, *hs, *gs]:
            arr.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "h", tuple(hs))
        object.__setattr__(self, "G", tuple(gs))
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def block_sizes(self) -> tuple[int, ...]:
        return tuple(h.shape[0] for h in self.h)

    def slack(self, x: np.ndarray) -> list[np.ndarray]:
        """h_j - sum_i x_i G_ji for every block."""
        return [h - np.tensordot(x, g, axes=1) for h, g in zip(self.h, self.G)]

    def scaled(self, factor: float) -> SdpProblem:
        return SdpProblem(self.c * factor, self.h, self.G, self.A, self.b)


@dataclass(frozen=True)
class SolverOptions:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iterations: int = 200
    step_fraction: float = 0.99


@dataclass(frozen=True)
class SdpSolution:
    status: str  # optimal | infeasible | unbounded | max-iterations
    x: np.ndarray
    y: np.ndarray
    s: tuple[np.ndarray, ...]
    z: tuple[np.ndarray, ...]
    primal_objective: float
    dual_objective: float
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    message: str = ""
    complementarity: float = math.nan

    @property
    def objective(self) -> float:
        return self.primal_objective


def embed_hermitian(h: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re h, -Im h], [Im h, Re h]]."""
    h = np.asarray(h)
    if not is_hermitian(h):
        raise ValueError("embed_hermitian needs a Hermitian matrix")
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def unembed_hermitian(m: np.ndarray) -> np.ndarray:
    """Inverse of :func:`embed_hermitian`, averaging over the redundant copies."""
    d = m.shape[0] // 2
    re = 0.5 * (m[:d, :d] + m[d:, d:])
    im = 0.5 * (m[d:, :d] - m[:d, d:])
    return re + 1j * im


class _Groups:
    """Blocks of equal size stacked for batched linear algebra."""

    def __init__(self, sizes: Sequence[int]):
        self.sizes = tuple(sizes)
        self.keys = sorted(set(self.sizes))
        self.index = {k: [j for j, s in enumerate(self.sizes) if s == k] for k in self.keys}

    def stack(self, blocks: Sequence[np.ndarray]) -> list[np.ndarray]:
        return [np.stack([blocks[j] for j in self.index[k]]) for k in self.keys]

    def unstack(self, groups: Sequence[np.ndarray]) -> list[np.ndarray]:
        out: list[np.ndarray] = [None] * len(self.sizes)  # type: ignore[list-item]
        for k, arr in zip(self.keys, groups):
            for pos, j in enumerate(self.index[k]):
                out[j] = arr[pos].copy()
        return out


def _inner(a: list[np.ndarray], b: list[np.ndarray]) -> float:
    return float(sum(np.sum(x * y) for x, y in zip(a, b)))


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def _eye_like(groups: list[np.ndarray]) -> list[np.ndarray]:
    return [np.broadcast_to(np.eye(g.shape[-1]), g.shape).copy() for g in groups]


def _max_step(lam: list[np.ndarray], d: list[np.ndarray]) -> float:
    """Largest a with diag(lam) + a d PSD (inf when unconstrained)."""
    worst = 0.0
    for l, dd in zip(lam, d):
        r = 1.0 / np.sqrt(l)
        m = r[..., :, None] * dd * r[..., None, :]
        worst = max(worst, -float(np.linalg.eigvalsh(_sym(m))[..., 0].min()))
    return math.inf if worst <= 0 else 1.0 / worst


def solve(problem: SdpProblem, options: SolverOptions = SolverOptions()) -> SdpSolution:
    """Solve ``problem``; the returned status is never silently wrong.

    Requires independent rows of A and linearly independent G_i.  Numerical breakdown is reported as ``max-iterations`` with the last
    iterate and its residuals.
    """
    p = problem
    n, m = p.n, p.b.size
    if m and np.linalg.matrix_rank(p.A) < m:
        raise ValueError("equality constraints are linearly dependent")
    if n and np.linalg.matrix_rank(np.concatenate([g.reshape(n, -1) for g in p.G], axis=1)) < n:
        raise ValueError("the constraint matrices G_i must be linearly independent")
    grp = _Groups(p.block_sizes)
    h = grp.stack(p.h)
    G = grp.stack(p.G)  # (nb, n, k, k)
    c, A, b = p.c, p.A, p.b
    nu = sum(p.block_sizes)

    def gmul(x: np.ndarray) -> list[np.ndarray]:
        return [np.tensordot(g, x, axes=([1], [0])) for g in G]

    def gtmul(zs: list[np.ndarray]) -> np.ndarray:
        return sum(np.einsum("bikl,bkl->i", g, z) for g, z in zip(G, zs)) if G else np.zeros(n)

    res_x0 = max(1.0, float(np.linalg.norm(c)))
    res_y0 = max(1.0, float(np.linalg.norm(b)))
    res_z0 = max(1.0, math.sqrt(_inner(h, h)))

    x = np.zeros(n)
    y = np.zeros(m)
    s = _eye_like(h)
    z = _eye_like(h)
    tau = kappa = 1.0
    status, message = "max-iterations", "iteration limit reached"
    it = 0
    stats = {}

    def report() -> dict:
        xs, ys = x / tau, y / tau
        ss = [v / tau for v in s]
        zs = [v / tau for v in z]
        gx = gmul(xs)
        rz = [gi + si - hi for gi, si, hi in zip(gx, ss, h)]
        pres = max(
            float(np.linalg.norm(A @ xs - b)) / res_y0 if m else 0.0,
            math.sqrt(_inner(rz, rz)) / res_z0,
        )
        dres = float(np.linalg.norm(A.T @ ys + gtmul(zs) + c)) / res_x0
        pcost = float(c @ xs)
        dcost = -_inner(h, zs) - float(b @ ys)
        return dict(pres=pres, dres=dres, pcost=pcost, dcost=dcost, gap=pcost - dcost, comp=_inner(ss, zs))

    for it in range(options.max_iterations + 1):
        # Residuals of the homogeneous embedding.
        gx = gmul(x)
        gtz = gtmul(z)
        r1 = A.T @ y + gtz + c * tau
        r2 = A @ x - b * tau
        r3 = [gi + si - hi * tau for gi, si, hi in zip(gx, s, h)]
        hz = _inner(h, z)
        r4 = kappa + float(c @ x) + float(b @ y) + hz

        stats = report()
        if stats["pres"] <= options.feas_tol and stats["dres"] <= options.feas_tol and abs(stats["gap"]) <= options.gap_tol:
            status, message = "optimal", ""
            break
        # Certificates of infeasibility (rays with tau -> 0).
        dual_obj_ray = -hz - float(b @ y)
        if dual_obj_ray > 0:
            if np.linalg.norm(A.T @ y + gtz) / dual_obj_ray <= options.feas_tol:
                status, message = "infeasible", "primal infeasibility certificate"
                break
        cx = float(c @ x)
        if cx < 0:
            gxs = [gi + si for gi, si in zip(gx, s)]
            ray = math.sqrt(float(np.linalg.norm(A @ x)) ** 2 + _inner(gxs, gxs))
            if ray / -cx <= options.feas_tol:
                status, message = "unbounded", "dual infeasibility certificate"
                break
        if it == options.max_iterations:
            break

        try:
            # Nesterov-Todd scaling: R^T z R = R^-1 s R^-T = diag(lam).
            r, rinv, lam = [], [], []
            for sg, zg in zip(s, z):
                ls = np.linalg.cholesky(sg)
                lz = np.linalg.cholesky(zg)
                u, lg, vt = np.linalg.svd(np.swapaxes(lz, -1, -2) @ ls)
                r.append(ls @ np.swapaxes(vt, -1, -2) / np.sqrt(lg)[..., None, :])
                rinv.append((1 / np.sqrt(lg))[..., :, None] * np.swapaxes(u, -1, -2) @ np.swapaxes(lz, -1, -2))
                lam.append(lg)
        except np.linalg.LinAlgError:
            message = "loss of positive definiteness"
            break
        rinv_t = [np.swapaxes(ri, -1, -2) for ri in rinv]
        # G scaled: R^-1 G_i R^-T, shape (nb, n, k, k)
        gh = [ri[:, None] @ g @ rit[:, None] for ri, g, rit in zip(rinv, G, rinv_t)]
        mu = (_inner(s, z) + tau * kappa) / (nu + 1)
        # The reduced Newton matrix is Gh' Gh with Gh the stacked scaled
        # constraint matrix.  Forming it squares the condition number, which
        # reaches 1e17 on degenerate problems, so factor Gh = QR instead.
        gmat = np.concatenate([np.moveaxis(g, 1, -1).reshape(-1, n) for g in gh])
        q_f, r_f = scipy.linalg.qr(gmat, mode="economic", check_finite=False)
        if not np.all(np.isfinite(r_f)) or np.min(np.abs(np.diag(r_f)), initial=np.inf) == 0:
            message = "singular Newton system"
            break
        u_a = scipy.linalg.solve_triangular(r_f, A.T, trans="T", check_finite=False)  # R^-T A'
        if m:
            schur = scipy.linalg.cho_factor(u_a.T @ u_a, check_finite=False)

        def flat(us):
            return np.concatenate([u.reshape(-1) for u in us])

        def unflat(v):
            out, pos = [], 0
            for g in gh:
                size = g.shape[0] * g.shape[2] * g.shape[3]
                out.append(v[pos : pos + size].reshape(g.shape[0], g.shape[2], g.shape[3]))
                pos += size
            return out

        def scale_in(u_list):
            return [ri @ ui @ rit for ri, ui, rit in zip(rinv, u_list, rinv_t)]

        def newton(p1, p2, qv):
            # Gh'Gh dx + A'dy = p1 + Gh'q, A dx = p2, via R dx = w - U dy with U = R^-T A'.
            w = q_f.T @ qv + scipy.linalg.solve_triangular(r_f, p1, trans="T", check_finite=False)
            if m:
                dy = scipy.linalg.cho_solve(schur, u_a.T @ w - p2, check_finite=False)
                w = w - u_a @ dy
            else:
                dy = np.zeros(0)
            dx = scipy.linalg.solve_triangular(r_f, w, check_finite=False)
            return dx, dy

        def kkt_solve(p1, p2, qv):
            # [0 A' Gh'; A 0 0; Gh 0 -I] [dx; dy; W dz] = [p1; p2; qv], qv already scaled.
            dx, dy = newton(p1, p2, qv)
            for _ in range(REFINEMENT_STEPS):
                wz = gmat @ dx - qv
                dx_c, dy_c = newton(p1 - A.T @ dy - gmat.T @ wz, p2 - A @ dx, np.zeros_like(qv))
                dx, dy = dx + dx_c, dy + dy_c
            return dx, dy, gmat @ dx - qv

        h_hat = flat(scale_in(h))
        lam_f = [l[..., :, None] + l[..., None, :] for l in lam]  # twice the Jordan product weights

        def lam_prod(u):
            return flat([0.5 * lf * ui for lf, ui in zip(lam_f, unflat(u))])

        def lam_div(u):
            return flat([2 * ui / lf for lf, ui in zip(lam_f, unflat(u))])

        try:
            x1, y1, wz1 = kkt_solve(-c, b, h_hat)
        except np.linalg.LinAlgError:
            message = "singular Newton system"
            break
        denom = float(c @ x1) + float(b @ y1) + float(h_hat @ wz1) - kappa / tau

        def solve6(bx, by, bz, bt, bs, bk):
            # Full scaled Newton system of the embedding:
            #   A'dy + Gh'wdz + c dtau = bx,  A dx - b dtau = by,  Gh dx + dss - hh dtau = bz,
            #   c'dx + b'dy + hh'wdz + dkappa = bt,  lam o (dss + wdz) = bs,  kappa dtau + tau dkappa = bk.
            x2, y2, wz2 = kkt_solve(bx, by, bz - lam_div(bs))
            dtau = (bt - bk / tau - (float(c @ x2) + float(b @ y2) + float(h_hat @ wz2))) / denom
            dx, dy, wdz = x2 + dtau * x1, y2 + dtau * y1, wz2 + dtau * wz1
            return dx, dy, wdz, lam_div(bs) - wdz, dtau, (bk - kappa * dtau) / tau

        def apply6(dx, dy, wdz, dss, dtau, dkappa):
            return (
                A.T @ dy + gmat.T @ wdz + c * dtau,
                A @ dx - b * dtau,
                gmat @ dx + dss - h_hat * dtau,
                float(c @ dx) + float(b @ dy) + float(h_hat @ wdz) + dkappa,
                lam_prod(dss + wdz),
                kappa * dtau + tau * dkappa,
            )

        def direction(eta: float, qs: list[np.ndarray], qk: float):
            rhs = (-(1 - eta) * r1, -(1 - eta) * r2, -(1 - eta) * flat(scale_in(r3)), -(1 - eta) * r4, flat(qs), qk)
            sol = solve6(*rhs)
            for _ in range(FULL_REFINEMENT_STEPS):
                res = [u - v for u, v in zip(rhs, apply6(*sol))]
                sol = tuple(u + v for u, v in zip(sol, solve6(*res)))
            dx, dy, wdz, dss, dtau, dkappa = sol
            return dx, dy, unflat(wdz), unflat(dss), dtau, dkappa

        def step_length(wdz, dss, dtau, dkappa):
            a = min(_max_step(lam, wdz), _max_step(lam, dss))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkappa < 0:
                a = min(a, -kappa / dkappa)
            return a

        lam_sq = [np.zeros_like(l[..., None] * l[..., None, :]) for l in lam]
        for q, l in zip(lam_sq, lam):
            idx = np.arange(l.shape[-1])
            q[..., idx, idx] = l**2
        # Predictor.
        aff = direction(0.0, [-q for q in lam_sq], -tau * kappa)
        a_aff = min(1.0, step_length(*aff[2:]))
        sigma = (1 - a_aff) ** 3
        # Corrector.
        wdz_a, dss_a = aff[2], aff[3]
        qs = []
        for q, sa, za, l in zip(lam_sq, dss_a, wdz_a, lam):
            cross = _sym(sa @ za)
            eye = np.broadcast_to(np.eye(l.shape[-1]), q.shape)
            qs.append(-q - cross + sigma * mu * eye)
        qk = -tau * kappa - aff[4] * aff[5] + sigma * mu
        dx, dy, wdz, dss, dtau, dkappa = direction(sigma, qs, qk)
        alpha = min(1.0, options.step_fraction * step_length(wdz, dss, dtau, dkappa))
        if not np.isfinite(alpha) or alpha < 1e-12:
            message = "step length collapsed"
            break

        log.debug(
            "it %d pres %.2e dres %.2e gap %.2e mu %.2e sigma %.2e alpha %.3f tau %.3e kappa %.3e",
            it, stats["pres"], stats["dres"], stats["gap"], mu, sigma, alpha, tau, kappa,
        )
        x = x + alpha * dx
        y = y + alpha * dy
        # Back to original coordinates: ds = R (W^-T ds) R^T, dz = R^-T (W dz) R^-1.
        s = [_sym(si + alpha * (ri @ d @ np.swapaxes(ri, -1, -2))) for si, ri, d in zip(s, r, dss)]
        z = [_sym(zi + alpha * (rit @ d @ ri)) for zi, ri, rit, d in zip(z, rinv, rinv_t, wdz)]
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa

    if status in ("infeasible", "unbounded"):
        xs, ys, ss, zs = x, y, s, z
    else:
        xs, ys = x / tau, y / tau
        ss = [v / tau for v in s]
        zs = [v / tau for v in z]
    return SdpSolution(
        status=status,
        x=xs,
        y=ys,
        s=tuple(grp.unstack(ss)),
        z=tuple(grp.unstack(zs)),
        primal_objective=stats.get("pcost", math.nan),
        dual_objective=stats.get("dcost", math.nan),
        gap=stats.get("gap", math.nan),
        primal_residual=stats.get("pres", math.nan),
        dual_residual=stats.get("dres", math.nan),
        iterations=it,
        message=message,
        complementarity=stats.get("comp", math.nan),
    )


@dataclass(frozen=True)
class CertificateReport:
    violations: tuple[str, ...]
    primal_residual: float
    dual_residual: float
    gap: float
    complementarity: float
    min_eig_s: float
    min_eig_z: float

    @property
    def ok(self) -> bool:
        return not self.violations


def check_certificates(
    problem: SdpProblem, sol: SdpSolution, tol: float = 1e-8, psd_tol: float = 1e-9, comp_tol: float = 1e-6
) -> CertificateReport:
    """Recompute optimality certificates of ``sol`` from the raw problem data.

    <S, Z> equals the objective gap only up to residual terms, and on
    degenerate problems it is the slowest quantity to shrink, so it gets
    its own looser tolerance.
    """
    x, y = sol.x, sol.y
    s_from_x = problem.slack(x)
    res_p = [sk - si for sk, si in zip(s_from_x, sol.s)]
    pres = max(
        float(np.linalg.norm(problem.A @ x - problem.b)) / max(1.0, float(np.linalg.norm(problem.b))) if problem.b.size else 0.0,
        math.sqrt(sum(float(np.sum(r * r)) for r in res_p)) / max(1.0, math.sqrt(sum(float(np.sum(h * h)) for h in problem.h))),
    )
    gtz = sum(np.einsum("ikl,kl->i", g, zj) for g, zj in zip(problem.G, sol.z)) if problem.G else np.zeros(problem.n)
    dres = float(np.linalg.norm(problem.A.T @ y + gtz + problem.c)) / max(1.0, float(np.linalg.norm(problem.c)))
    pcost = float(problem.c @ x)
    dcost = -sum(float(np.sum(h * zj)) for h, zj in zip(problem.h, sol.z)) - float(problem.b @ y)
    gap = pcost - dcost
    comp = sum(float(np.sum(si * zj)) for si, zj in zip(sol.s, sol.z))
    min_s = min((float(np.linalg.eigvalsh(si)[0]) for si in sol.s), default=0.0)
    min_z = min((float(np.linalg.eigvalsh(zj)[0]) for zj in sol.z), default=0.0)
    v = []
    if sol.status != "optimal":
        v.append(f"status is {sol.status}")
    if pres > tol:
        v.append(f"primal residual {pres:.3e} > {tol:g}")
    if dres > tol:
        v.append(f"dual residual {dres:.3e} > {tol:g}")
    if gap < -tol:
        v.append(f"weak duality violated: primal - dual = {gap:.3e}")
    if abs(gap) > tol:
        v.append(f"duality gap {gap:.3e} > {tol:g}")
    if comp > comp_tol:
        v.append(f"complementary slackness <S, Z> = {comp:.3e} > {comp_tol:g}")
    if min_s < -psd_tol:
        v.append(f"slack block not PSD (min eigenvalue {min_s:.3e})")
    if min_z < -psd_tol:
        v.append(f"dual block not PSD (min eigenvalue {min_z:.3e})")
    return CertificateReport(tuple(v), pres, dres, gap, comp, min_s, min_z)


# Export format, line oriented, 0-based indices, 17 significant digits:
#   sdp-export 1
#   n <vars> p <equalities> blocks <count>
#   sizes <k_1> ... <k_B>
#   c <i> <value>                  nonzero cost entries
#   A <row> <col> <value>          nonzero equality coefficients
#   b <row> <value>                nonzero equality right-hand sides
#   F <block> <var> <i> <j> <value>
# F lines list the upper triangle (i <= j) of the block's constant (var = 0,
# the matrix h_j) and coefficient matrices (var = i + 1, the matrix G_ji);
# the block constraint is  F_0 - sum_i x_i F_{i+1}  PSD.


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def export_problem(problem: SdpProblem, path: str | Path | None = None) -> str:
    out = io.StringIO()
    out.write("sdp-export 1\n")
    out.write(f"n {problem.n} p {problem.b.size} blocks {len(problem.h)}\n")
    out.write("sizes " + " ".join(str(k) for k in problem.block_sizes) + "\n")
    for i in np.flatnonzero(problem.c):
        out.write(f"c {i} {_fmt(problem.c[i])}\n")
    for r, col in zip(*np.nonzero(problem.A)):
        out.write(f"A {r} {col} {_fmt(problem.A[r, col])}\n")
    for r in np.flatnonzero(problem.b):
        out.write(f"b {r} {_fmt(problem.b[r])}\n")
    for j, (h, g) in enumerate(zip(problem.h, problem.G)):
        mats = np.concatenate([h[None], g])
        for var, i, k in zip(*np.nonzero(np.triu(mats))):
            out.write(f"F {j} {var} {i} {k} {_fmt(mats[var, i, k])}\n")
    text = out.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def import_problem(source: str | Path) -> SdpProblem:
    text = Path(source).read_text() if isinstance(source, Path) or "\n" not in str(source) else str(source)
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if lines[0] != ["sdp-export", "1"]:
        raise ValueError("not an sdp-export version 1 file")
    head = lines[1]
    n, p, nb = int(head[1]), int(head[3]), int(head[5])
    sizes = [int(v) for v in lines[2][1:]]
    if len(sizes) != nb:
        raise ValueError("block count mismatch")
    c = np.zeros(n)
    A = np.zeros((p, n))
    b = np.zeros(p)
    mats = [np.zeros((n + 1, k, k)) for k in sizes]
    for ln in lines[3:]:
        tag = ln[0]
        if tag == "c":
            c[int(ln[1])] = float(ln[2])
        elif tag == "A":
            A[int(ln[1]), int(ln[2])] = float(ln[3])
        elif tag == "b":
            b[int(ln[1])] = float(ln[2])
        elif tag == "F":
            j, var, i, k, v = int(ln[1]), int(ln[2]), int(ln[3]), int(ln[4]), float(ln[5])
            mats[j][var, i, k] = v
            mats[j][var, k, i] = v
        else:
            raise ValueError(f"unknown record {tag!r}")
    return SdpProblem(c, tuple(m[0] for m in mats), tuple(m[1:] for m in mats), A, b)
