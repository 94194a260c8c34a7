"""Restarted GMRES with residual instrumentation and spectral diagnostics.

Left preconditioning only; residual norms are reported in the
preconditioned norm.  Orthogonalization is modified Gram-Schmidt with one
reorthogonalization pass, which keeps the basis orthogonal for the
clustered-spectrum systems produced by Calderon preconditioning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class GmresReport:
    """Per-iteration residual norms (including iteration 0) and outcome."""

    residuals: list[float]
    converged: bool
    iterations: int
    restart: int
    tol: float

    def convergence_factor(self, m: int) -> float:
        """Q_m = (||r_m|| / ||r_0||)^(1/m)."""
        return convergence_factor(self, m)


def convergence_factor(report: GmresReport, m: int) -> float:
    if m < 1 or m >= len(report.residuals):
        raise ValueError(f"m must be in [1, {len(report.residuals) - 1}], got {m}")
    r0 = report.residuals[0]
    if r0 == 0.0:
        raise ValueError("zero initial residual")
    return float((report.residuals[m] / r0) ** (1.0 / m))


def _givens(a: complex, b: complex) -> tuple[float, complex]:
    """Unitary [[c, s], [-conj(s), c]] with real c zeroing the second entry."""
    t = np.hypot(abs(a), abs(b))
    if t == 0.0:
        return 1.0, 0.0 + 0.0j
    if abs(a) == 0.0:
        return 0.0, np.conj(b) / abs(b)
    c = abs(a) / t
    s = abs(a) * np.conj(b) / (t * np.conj(a))
    return float(c), complex(s)


def gmres(apply_op, rhs, precond=None, tol: float = 1e-8, restart: int = 200,
          max_iter: int = 1000, x0=None):
    """Solve A x = b with left-preconditioned restarted GMRES.

    apply_op/precond: callables vector -> vector (precond defaults to the
    identity).  Returns (solution, GmresReport).  Non-convergence within
    max_iter is reported, not raised.
    """
    b = np.asarray(rhs)
    n = b.shape[0]
    if precond is None:
        precond = lambda v: v
    x = np.zeros(n, dtype=complex) if x0 is None else np.array(x0, dtype=complex)

    pb = np.asarray(precond(b), dtype=complex)
    if pb.shape != (n,):
        raise ValueError("preconditioner changed the vector dimension")
    bnorm = float(np.linalg.norm(pb))
    if bnorm == 0.0:
        return np.zeros(n, dtype=complex), GmresReport([0.0], True, 0, restart, tol)

    residuals: list[float] = []
    total_iters = 0

    while True:
        r = pb - np.asarray(precond(apply_op(x)), dtype=complex)
        rnorm = float(np.linalg.norm(r))
        if not residuals:
            residuals.append(rnorm)
        if rnorm / bnorm <= tol:
            return x, GmresReport(residuals, True, total_iters, restart, tol)
        if total_iters >= max_iter:
            return x, GmresReport(residuals, False, total_iters, restart, tol)

        m = min(restart, max_iter - total_iters, n)
        basis = np.empty((m + 1, n), dtype=complex)
        h = np.zeros((m + 1, m), dtype=complex)
        cs = np.zeros(m)
        sn = np.zeros(m, dtype=complex)
        g = np.zeros(m + 1, dtype=complex)
        basis[0] = r / rnorm
        g[0] = rnorm
        k_done = 0
        invariant = False

        for k in range(m):
            w = np.asarray(precond(apply_op(basis[k])), dtype=complex)
            av_norm = float(np.linalg.norm(w))
            for i in range(k + 1):          # MGS
                hik = np.vdot(basis[i], w)
                h[i, k] = hik
                w -= hik * basis[i]
            for i in range(k + 1):          # one reorthogonalization pass
                corr = np.vdot(basis[i], w)
                h[i, k] += corr
                w -= corr * basis[i]
            wnorm = float(np.linalg.norm(w))
            if wnorm <= 1e-13 * av_norm:    # happy breakdown: invariant space
                wnorm = 0.0
            h[k + 1, k] = wnorm

            for i in range(k):              # stored rotations
                t = cs[i] * h[i, k] + sn[i] * h[i + 1, k]
                h[i + 1, k] = -np.conj(sn[i]) * h[i, k] + cs[i] * h[i + 1, k]
                h[i, k] = t
            cs[k], sn[k] = _givens(h[k, k], h[k + 1, k])
            h[k, k] = cs[k] * h[k, k] + sn[k] * h[k + 1, k]
            h[k + 1, k] = 0.0
            g[k + 1] = -np.conj(sn[k]) * g[k]
            g[k] = cs[k] * g[k]

            total_iters += 1
            k_done = k + 1
            residuals.append(float(abs(g[k + 1])))

            if wnorm == 0.0:                # invariant subspace: exact solve
                invariant = True
                break
            if abs(g[k + 1]) / bnorm <= tol or total_iters >= max_iter:
                break
            basis[k + 1] = w / wnorm

        if k_done > 0:
            y = np.linalg.solve(h[:k_done, :k_done], g[:k_done])
            x = x + basis[:k_done].T @ y
        if invariant:
            r = pb - np.asarray(precond(apply_op(x)), dtype=complex)
            ok = float(np.linalg.norm(r)) / bnorm <= tol
            return x, GmresReport(residuals, ok, total_iters, restart, tol)


def spectrum_diagnostic(matrix: np.ndarray, size_cap: int = 5000) -> np.ndarray:
    """All eigenvalues of a dense matrix (guarded by a size cap)."""
    matrix = np.asarray(matrix)
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise ValueError("matrix must be square")
    if n > size_cap:
        raise ValueError(f"matrix size {n} exceeds the diagnostic cap {size_cap}")
    return np.linalg.eigvals(matrix)


def cluster_fraction(eigs: np.ndarray, center: complex = 1.0, radius: float = 0.5) -> float:
    """Fraction of eigenvalues within |z - center| < radius."""
    eigs = np.asarray(eigs)
    return float(np.mean(np.abs(eigs - center) < radius))
