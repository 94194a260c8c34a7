import numpy as np
import pytest

from helmuq.krylov import (GmresReport, cluster_fraction, convergence_factor,
                           gmres, spectrum_diagnostic)


def test_identity_converges_in_one_iteration():
    rng = np.random.default_rng(0)
    b = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    x, rep = gmres(lambda v: v, b, tol=1e-12)
    assert rep.converged and rep.iterations == 1
    assert np.allclose(x, b, atol=1e-12)


def test_two_distinct_eigenvalues_two_iterations():
    d = np.array([2.0] * 6 + [5.0] * 6)
    rng = np.random.default_rng(1)
    b = rng.standard_normal(12)
    x, rep = gmres(lambda v: d * v, b, tol=1e-10)
    assert rep.converged and rep.iterations <= 2
    assert np.allclose(d * x, b, atol=1e-8)


def test_random_dense_matches_lu_oracle():
    rng = np.random.default_rng(2)
    n = 40
    a = np.eye(n) + 0.3 * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(n)
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    exact = np.linalg.solve(a, b)
    x, rep = gmres(lambda v: a @ v, b, tol=1e-10, restart=15)
    assert rep.converged
    assert np.linalg.norm(x - exact) <= 10 * 1e-10 * np.linalg.norm(exact) / 1e-2


def test_left_preconditioning():
    rng = np.random.default_rng(3)
    n = 30
    a = np.diag(np.linspace(1, 500, n)).astype(complex)
    a += 0.1 * rng.standard_normal((n, n))
    p = np.linalg.inv(a)  # perfect preconditioner
    b = rng.standard_normal(n)
    x, rep = gmres(lambda v: a @ v, b, precond=lambda v: p @ v, tol=1e-12)
    assert rep.converged and rep.iterations <= 2


def test_report_residual_history_monotone_within_cycle():
    rng = np.random.default_rng(4)
    n = 50
    a = np.eye(n) + 0.5 * rng.standard_normal((n, n)) / np.sqrt(n)
    b = rng.standard_normal(n)
    _, rep = gmres(lambda v: a @ v, b, tol=1e-12, restart=60)
    res = rep.residuals
    assert all(r2 <= r1 * (1 + 1e-12) for r1, r2 in zip(res, res[1:]))
    assert res[-1] / res[0] <= 1e-12 * 10


def test_reproducible_history():
    rng = np.random.default_rng(5)
    n = 25
    a = np.eye(n) + 0.4 * rng.standard_normal((n, n)) / np.sqrt(n)
    b = rng.standard_normal(n)
    _, rep1 = gmres(lambda v: a @ v, b, tol=1e-10)
    _, rep2 = gmres(lambda v: a @ v, b, tol=1e-10)
    assert rep1.residuals == rep2.residuals


def test_nonconvergence_reported():
    # rotation-like system stalls; must report, not raise
    rng = np.random.default_rng(6)
    n = 60
    a = np.diag(np.exp(2j * np.pi * rng.random(n)))
    b = rng.standard_normal(n) + 0j
    x, rep = gmres(lambda v: a @ v, b, tol=1e-14, restart=5, max_iter=8)
    assert not rep.converged
    assert rep.iterations == 8


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        gmres(lambda v: v, np.ones(4), precond=lambda v: np.ones(3))


def test_convergence_factor_identities():
    rep = GmresReport([1.0, 0.5, 0.25, 0.125], True, 3, 200, 1e-8)
    # geometric residuals rho^m give Q_m = rho for every m
    for m in (1, 2, 3):
        assert convergence_factor(rep, m) == pytest.approx(0.5, rel=1e-14)
    rep2 = GmresReport([1.0, 1.0], False, 1, 200, 1e-8)
    assert convergence_factor(rep2, 1) == 1.0
    with pytest.raises(ValueError):
        convergence_factor(rep, 0)
    with pytest.raises(ValueError):
        convergence_factor(rep, 4)


def test_qm_leq_one_for_monotone_histories():
    rng = np.random.default_rng(7)
    res = np.sort(rng.random(10))[::-1]
    res = [1.0] + list(res[res < 1.0])
    rep = GmresReport([float(r) for r in res], True, len(res) - 1, 200, 1e-8)
    for m in range(1, len(res)):
        assert convergence_factor(rep, m) <= 1.0


def test_spectrum_identity():
    eigs = spectrum_diagnostic(np.eye(7))
    assert np.allclose(eigs, 1.0)
    assert cluster_fraction(eigs) == 1.0


def test_spectrum_size_cap():
    with pytest.raises(ValueError, match="cap"):
        spectrum_diagnostic(np.eye(10), size_cap=5)


def test_kronecker_spectrum_products():
    rng = np.random.default_rng(8)
    a = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    b = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    big = spectrum_diagnostic(np.kron(a, b))
    ea = spectrum_diagnostic(a)
    eb = spectrum_diagnostic(b)
    prods = np.sort_complex((ea[:, None] * eb[None, :]).ravel())
    assert np.allclose(np.sort_complex(big), prods, atol=1e-8)


def test_condition_number_multiplicative():
    rng = np.random.default_rng(9)
    a = np.eye(6) + 0.3 * rng.standard_normal((6, 6))
    b = np.eye(6) + 0.3 * rng.standard_normal((6, 6))
    ka = np.linalg.cond(a)
    kb = np.linalg.cond(b)
    kab = np.linalg.cond(np.kron(a, b))
    assert kab == pytest.approx(ka * kb, rel=0.05)
