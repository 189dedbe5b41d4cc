import numpy as np
import pytest

from cclqr import matcore
from cclqr.errors import DimensionError, DomainError


def test_spectral_radius_identity():
    assert matcore.spectral_radius(np.eye(4)) == pytest.approx(1.0, abs=1e-10)


def test_spectral_radius_zero():
    assert matcore.spectral_radius(np.zeros((3, 3))) == pytest.approx(0.0, abs=1e-10)


def test_spectral_radius_sec5_A(sec5):
    # upper triangular with unit diagonal
    assert matcore.spectral_radius(sec5.A) == pytest.approx(1.0, abs=1e-10)


def test_spectral_radius_complex_pair():
    # rotation scaled by 0.8: complex eigenvalues, radius 0.8
    th = 0.7
    m = 0.8 * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    assert matcore.spectral_radius(m) == pytest.approx(0.8, abs=1e-10)


def test_spectral_radius_rejects_nonsquare():
    with pytest.raises(DimensionError):
        matcore.spectral_radius(np.ones((2, 3)))


def test_spectral_radius_rejects_nan():
    m = np.eye(2)
    m[0, 1] = np.nan
    with pytest.raises(DomainError):
        matcore.spectral_radius(m)


def test_spectral_radius_scaling(rng):
    for _ in range(20):
        m = rng.standard_normal((5, 5))
        c = rng.uniform(-4, 4)
        assert matcore.spectral_radius(c * m) == pytest.approx(
            abs(c) * matcore.spectral_radius(m), abs=1e-9)


def test_spectral_radius_triangular(rng):
    for _ in range(10):
        m = np.triu(rng.standard_normal((6, 6)))
        assert matcore.spectral_radius(m) == pytest.approx(
            np.max(np.abs(np.diag(m))), abs=1e-10)


def test_sym_part_fixed_point():
    s = np.array([[2.0, 1.0], [1.0, 3.0]])
    np.testing.assert_allclose(matcore.sym_part(s), s)


def test_sym_part_direct():
    np.testing.assert_allclose(
        matcore.sym_part([[0.0, 2.0], [0.0, 0.0]]), [[0.0, 1.0], [1.0, 0.0]])


def test_sym_part_idempotent(rng):
    for _ in range(10):
        m = rng.standard_normal((4, 4))
        s = matcore.sym_part(m)
        np.testing.assert_allclose(matcore.sym_part(s), s)


def test_sym_part_rejects_nonsquare():
    with pytest.raises(DimensionError):
        matcore.sym_part(np.ones((2, 3)))


def test_is_psd_sec5_Q2(sec5):
    # eigenvalues {2, 0, 0, 0}
    Q2 = sec5.Q[2]
    assert matcore.is_psd(Q2, tol=1e-12)
    assert sorted(np.round(np.linalg.eigvalsh(Q2), 9)) == [0.0, 0.0, 0.0, 2.0]


def test_is_psd_identity():
    assert matcore.is_psd(np.eye(3))
    assert not matcore.is_psd(-np.eye(3))


def test_is_pd_strict():
    assert matcore.is_pd(np.eye(2))
    assert not matcore.is_pd(np.diag([1.0, 0.0]))


def test_is_psd_rejects_asymmetric():
    with pytest.raises(DimensionError):
        matcore.is_psd([[1.0, 0.5], [0.0, 1.0]])


def test_is_psd_gram_matrices(rng):
    for _ in range(25):
        G = rng.standard_normal((4, 4))
        assert matcore.is_psd(G.T @ G)
