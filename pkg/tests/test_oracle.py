import numpy as np
import pytest

from oubridge import OuParams
from oubridge.grid import BridgePath, TimeGrid, paths_to_csv
from oubridge.kl_solver import kl_basis
from oubridge.oracle import DenseKernel, conditioned_kernel, empirical_cov, nystrom_eigen
from oubridge.ou_model import bridge_cov


def test_conditioned_kernel_matches_closed_form(ref_params):
    g = TimeGrid.uniform(ref_params.T, 100)
    K = conditioned_kernel(ref_params, g)
    t = g.points
    assert np.max(np.abs(K.matrix - bridge_cov(ref_params, t[:, None], t[None, :]))) < 1e-10
    assert K.is_psd()


def test_nystrom_matches_analytic(ref_params):
    lam = kl_basis(ref_params, 5).lambdas
    ny, funcs = nystrom_eigen(conditioned_kernel(ref_params, TimeGrid.uniform(1.0, 1000)), 5)
    assert np.all(np.diff(ny) < 0)
    assert np.allclose(lam, ny, rtol=1e-4)
    w = TimeGrid.uniform(1.0, 1000).trapezoid_weights()
    assert np.allclose((funcs * w) @ funcs.T, np.eye(5), atol=1e-10)


def test_nystrom_bad_m():
    K = conditioned_kernel(OuParams(), TimeGrid.uniform(1.0, 10))
    with pytest.raises(ValueError):
        nystrom_eigen(K, 11)


def test_indefinite_kernel_detected():
    g = TimeGrid.uniform(1.0, 3)
    K = DenseKernel(g, np.diag([1.0, -0.5, 1.0]))
    assert not K.is_psd()


def test_empirical_cov_requires_common_grid():
    a = BridgePath(TimeGrid.uniform(1.0, 5), np.zeros((2, 5)))
    b = BridgePath(TimeGrid.uniform(1.0, 6), np.zeros((2, 6)))
    with pytest.raises(ValueError):
        empirical_cov([a, b])
    with pytest.raises(ValueError):
        empirical_cov(BridgePath(TimeGrid.uniform(1.0, 5), np.zeros(5)))


def test_empirical_cov_unbiased():
    X = np.array([[0.0, 1.0, 0.0], [0.0, -1.0, 0.0]])
    K, mean = empirical_cov(BridgePath(TimeGrid.uniform(1.0, 3), X))
    assert np.allclose(mean, 0)
    assert K.matrix[1, 1] == 2.0


def test_grid_validation_and_csv():
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0, 0.5, 0.5, 1.0]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.1, 1.0]))
    g = TimeGrid.uniform(2.0, 3)
    assert g == TimeGrid(np.array([0.0, 1.0, 2.0]))
    assert np.allclose(g.trapezoid_weights(), [0.5, 1.0, 0.5])
    text = paths_to_csv(BridgePath(g, np.array([[0.0, 1.0, 2.0]])), [1.0])
    lines = text.splitlines()
    assert lines[0] == "t,value,path_id,probability"
    assert lines[2] == "1.0,1.0,0,1.0"
    csv = conditioned_kernel(OuParams(T=2.0), g).to_csv()
    assert csv.splitlines()[0] == "s,t,value"
