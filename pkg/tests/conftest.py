import numpy as np
import pytest


def dense_matrix(fn, n):
    """Matrix of a linear map on N x N images, built column by column from unit images."""
    cols = []
    for i in range(n * n):
        e = np.zeros(n * n)
        e[i] = 1.0
        cols.append(np.ravel(fn(e.reshape(n, n))))
    return np.array(cols).T


def reference_minimizer(op, meas, weights, bank, levels, M=1.0):
    """Interior-point solution of the constrained model on an explicit matrix form."""
    cp = pytest.importorskip("cvxpy")
    from wfrestore.transform import analyze

    n = meas.sample_set.n
    W = dense_matrix(lambda u: analyze(u, bank, levels).planes, n)
    lam = np.ravel(weights.broadcast(np.empty((1, n, n))) * np.ones((1, n, n)))
    A = dense_matrix(op.apply, n)[meas.sample_set.indices]
    u = cp.Variable(n * n)
    cons = [u >= 0, u <= M]
    if meas.eta == 0:
        cons.append(A @ u == meas.values)
    else:
        cons.append(cp.sum_squares(A @ u - meas.values) <= meas.sample_set.m * meas.eta**2)
    prob = cp.Problem(cp.Minimize(cp.norm1(cp.multiply(lam, W @ u))), cons)
    prob.solve(solver=cp.CLARABEL)
    return u.value.reshape(n, n), prob.value


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def piecewise_constant(n=8):
    x = (np.arange(n) + 0.5) / n
    return 0.2 + 0.6 * ((x[:, None] > 0.25) & (x[:, None] < 0.625) & (x[None, :] > 0.375))
