import numpy as np
import pytest

from edgemod.graph_model import Kind, Network, build_network, erdos_renyi


def random_direct(rng, n=20, p=0.2, rho=0.9, n_in=None, n_out=None):
    """ER network with random input/output subsets."""
    seed = int(rng.integers(2**31))
    net = erdos_renyi(n, p, rho, seed)
    n_in = n_in or int(rng.integers(1, n // 2 + 1))
    n_out = n_out or int(rng.integers(1, n // 2 + 1))
    K = sorted(rng.choice(n, n_in, replace=False).tolist())
    O = sorted(rng.choice(n, n_out, replace=False).tolist())
    return net.with_io(K, O)


def random_laplacian(rng, n=15, p=0.3, rho_L=None, all_io=True):
    """Connected undirected network, weights rescaled so rho(L) = rho_L.

    A random spanning tree guarantees connectivity; further pairs join with
    probability ``p``. ``rho_L`` defaults to a uniform draw in (0.3, 0.95).
    """
    W = np.triu(rng.random((n, n)) < p, 1) * rng.uniform(0.1, 1.0, (n, n))
    order = rng.permutation(n)
    for k in range(1, n):
        a, b = order[k], order[int(rng.integers(k))]
        i, j = min(a, b), max(a, b)
        if W[i, j] == 0:
            W[i, j] = rng.uniform(0.1, 1.0)
    adj = W + W.T
    L = np.diag(adj.sum(axis=1)) - adj
    target = rng.uniform(0.3, 0.95) if rho_L is None else rho_L
    adj = adj * (target / np.linalg.eigvalsh(L)[-1])
    net = Network(adj, range(n), range(n), Kind.LAPLACIAN)
    if not all_io:
        K = sorted(rng.choice(n, max(1, n // 4), replace=False).tolist())
        O = sorted(rng.choice(n, max(1, n // 3), replace=False).tolist())
        net = net.with_io(K, O)
    return net


def finite_margin_pair(rng, R):
    n = R.shape[0]
    while True:
        s, t = (int(v) for v in rng.choice(n, 2, replace=False))
        if R[s, t] > 0:
            return s, t


@pytest.fixture
def chain():
    """Two nodes, edge 0 -> 1 of weight 0.5, input at 0, output at 1."""
    return build_network(2, [(0, 1, 0.5)], [0], [1])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
