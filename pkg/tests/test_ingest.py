import math

import numpy as np
import pytest

from projstruct.errors import DimensionMismatchError
from projstruct.ingest import (
    covariance_to_matrix,
    density_to_sequence,
    graph_coefficients,
    laplacian_eigen_order,
    trig_basis_value,
)


def test_density_uniform_coefficients():
    rng = np.random.default_rng(0)
    x = rng.random(50_000)
    Y, sigma_n = density_to_sequence(x, n_coeffs=7)
    assert Y[0] == 1.0  # constant basis function averages to one exactly
    for i in range(1, 7):
        se = math.sqrt(2.0 / x.size)  # Var phi_i <= sup^2 = 2
        assert abs(Y[i]) <= 3.0 * se
    assert np.all(np.abs(Y) <= math.sqrt(2.0))


def test_density_single_sample_and_sigma_formula():
    x = np.array([0.3])
    Y, _ = density_to_sequence(x, n_coeffs=5)
    expected = [trig_basis_value(i, np.array([0.3]))[0] for i in range(1, 6)]
    assert np.allclose(Y, expected)

    _, sigma_n = density_to_sequence(np.linspace(0.0, 1.0, 100), n_coeffs=3, C=1.0)
    assert sigma_n == pytest.approx(math.sqrt(math.log(100) / 100))


def test_density_rejects_out_of_range_samples():
    with pytest.raises(ValueError):
        density_to_sequence(np.array([0.5, 1.2]), 3)


def test_covariance_single_row_outer_product():
    x = np.array([[1.0, -2.0, 0.5]])
    got = covariance_to_matrix(x)
    assert np.allclose(got, np.outer(x[0], x[0]))
    assert np.array_equal(got, got.T)


def test_covariance_identity_monte_carlo_and_psd():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((10_000, 4))
    got = covariance_to_matrix(X)
    se = math.sqrt(2.0 / X.shape[0])
    assert np.all(np.abs(got - np.eye(4)) <= 4.0 * se)
    assert np.linalg.eigvalsh(got).min() >= -1e-10
    with pytest.raises(DimensionMismatchError):
        covariance_to_matrix(np.zeros(3))


def test_laplacian_path_graph_spectrum():
    adj = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    basis, eigvals = laplacian_eigen_order(adj)
    assert np.allclose(eigvals, [0.0, 1.0, 3.0], atol=1e-12)
    # constant vector spans the zero eigenspace
    assert np.allclose(np.abs(basis[:, 0]), 1.0 / math.sqrt(3.0))
    assert np.allclose(basis.T @ basis, np.eye(3), atol=1e-12)


def test_laplacian_complete_graph_spectrum():
    n = 5
    adj = np.ones((n, n)) - np.eye(n)
    _, eigvals = laplacian_eigen_order(adj)
    assert eigvals[0] == pytest.approx(0.0, abs=1e-10)
    assert np.allclose(eigvals[1:], n, atol=1e-10)


def test_laplacian_input_validation():
    with pytest.raises(ValueError):
        laplacian_eigen_order(np.array([[0, 1], [0, 0]], dtype=float))  # asymmetric
    with pytest.raises(ValueError):
        laplacian_eigen_order(np.array([[1, 1], [1, 0]], dtype=float))  # self loop
    with pytest.raises(ValueError):
        laplacian_eigen_order(np.zeros((3, 3)))  # disconnected


def test_graph_coefficients_round_trip():
    adj = np.array([[0, 1, 1, 0], [1, 0, 1, 0], [1, 1, 0, 1], [0, 0, 1, 0]], dtype=float)
    basis, _ = laplacian_eigen_order(adj)
    f = np.array([1.0, 1.2, 0.9, 1.1])
    coeffs = graph_coefficients(basis, f)
    assert np.allclose(basis @ coeffs, f)
    # a smooth function concentrates on the low-frequency coordinates
    assert abs(coeffs[0]) > np.max(np.abs(coeffs[1:]))


def test_csv_conventions_round_trip(tmp_path):
    # one sample per line for sequences; comma-separated rows for matrices
    samples = np.random.default_rng(3).random(200)
    f1 = tmp_path / "samples.csv"
    f1.write_text("\n".join(repr(float(v)) for v in samples) + "\n")
    loaded = np.loadtxt(f1, delimiter=",")
    Y_file, _ = density_to_sequence(loaded, n_coeffs=4)
    Y_mem, _ = density_to_sequence(samples, n_coeffs=4)
    assert np.array_equal(Y_file, Y_mem)

    rows = np.random.default_rng(4).standard_normal((6, 3))
    f2 = tmp_path / "rows.csv"
    f2.write_text("\n".join(",".join(repr(float(v)) for v in row) for row in rows) + "\n")
    assert np.allclose(covariance_to_matrix(np.loadtxt(f2, delimiter=",")),
                       covariance_to_matrix(rows))


def test_graph_smoothness_composition_end_to_end():
    # path graph, smooth vertex function: selection in the Laplacian basis
    # truncates to a low level and reconstructs the signal well
    from projstruct.selection import select_penalized
    from projstruct.structures import SmoothnessFamily

    n = 16
    adj = np.zeros((n, n))
    for i in range(n - 1):
        adj[i, i + 1] = adj[i + 1, i] = 1.0
    basis, _ = laplacian_eigen_order(adj)
    f = np.linspace(0.0, 1.0, n) ** 2  # smooth on the path
    rng = np.random.default_rng(5)
    sigma = 0.05
    y = basis.T @ (f + sigma * rng.standard_normal(n))
    fam = SmoothnessFamily(n)
    level, _ = select_penalized(y, fam, sigma, kappa=1.0)
    assert 0 < level.level < n
    recon = basis @ fam.project(level, y)
    assert np.mean((recon - f) ** 2) <= 4.0 * sigma**2


def test_banded_covariance_pipeline_end_to_end():
    # sample covariance of an AR-ish tridiagonal truth, ingested and fed to
    # the banding family selector with sigma_n^2 = C log(p) / n
    from projstruct.selection import select_penalized
    from projstruct.structures import BandingFamily

    p, n = 6, 4000
    truth = np.eye(p) + 0.45 * (np.eye(p, k=1) + np.eye(p, k=-1))
    rng = np.random.default_rng(8)
    chol = np.linalg.cholesky(truth)
    X = rng.standard_normal((n, p)) @ chol.T
    Y = covariance_to_matrix(X)
    sigma_n = math.sqrt(math.log(p) / n)
    fam = BandingFamily(p)
    width, _ = select_penalized(Y.reshape(-1), fam, sigma_n, kappa=1.0)
    assert width.width == 1
    fitted = fam.project(width, Y.reshape(-1)).reshape(p, p)
    assert np.max(np.abs(fitted - truth)) <= 0.1
