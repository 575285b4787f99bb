"""Finite-difference oracles and random model factories shared by tests."""

import numpy as np

from fpsqp.surrogate import (
    Branch,
    DecisionTreeModel,
    EnsembleModel,
    Kernel,
    Leaf,
    LeafModel,
    MlpModel,
    SvrModel,
)


def fd_jacobian(fn, x, rel_step=1e-5):
    """Central differences of a vector function, step ``rel_step*(1+|x_i|)``."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.shape[0]):
        h = rel_step * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        cols.append((np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def rel_err(a, b):
    """Max abs difference scaled by the oracle's magnitude (floored at 1)."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b))))


def check_model_derivatives(model, x, grad_tol=1e-5, hess_tol=1e-3):
    t = model.evaluate(x)
    fd_j = fd_jacobian(lambda z: model.evaluate(z, 0).value, x)
    fd_h = fd_jacobian(lambda z: model.evaluate(z, 1).jacobian, x)
    ej, eh = rel_err(t.jacobian, fd_j), rel_err(t.hessians, fd_h)
    assert ej <= grad_tol, ej
    assert eh <= hess_tol, eh
    return ej, eh


def random_mlp(rng, n=None, m=None, hidden=None, act="swish"):
    n = n or int(rng.integers(1, 6))
    m = m or int(rng.integers(1, 4))
    hidden = hidden if hidden is not None else list(rng.integers(2, 9, size=int(rng.integers(1, 4))))
    dims = [n, *hidden, m]
    ws = [rng.normal(0, 1 / np.sqrt(a), size=(b, a)) for a, b in zip(dims[:-1], dims[1:])]
    bs = [rng.normal(0, 0.5, size=b) for b in dims[1:]]
    return MlpModel(ws, bs, (act,) * len(hidden))


def random_svr(rng, n=None, kind="rbf"):
    n = n or int(rng.integers(1, 6))
    k = int(rng.integers(1, 12))
    if kind == "rbf":
        kernel = Kernel("rbf", gamma=float(rng.uniform(0.1, 1.0)))
    elif kind == "polynomial":
        kernel = Kernel("polynomial", gamma=0.5, degree=int(rng.integers(1, 4)), coef=1.0)
    else:
        kernel = Kernel("linear")
    return SvrModel(rng.normal(size=(k, n)), rng.normal(size=k), float(rng.normal()), kernel)


def random_tree(rng, n=None, depth=3):
    """Complete oblique tree of the given depth with quadratic leaves."""
    n = n or int(rng.integers(1, 5))
    nodes = {}
    counter = [0]

    def build(d):
        nid = counter[0]
        counter[0] += 1
        if d == depth:
            A = rng.normal(size=(n, n))
            nodes[nid] = Leaf(LeafModel("quadratic", rng.normal(size=n), float(rng.normal()), A + A.T))
        else:
            a = rng.normal(size=n)
            b = float(rng.normal(scale=0.5))
            left = build(d + 1)
            right = build(d + 1)
            nodes[nid] = Branch(a, b, left, right)
        return nid

    root = build(0)
    return DecisionTreeModel(nodes, root)


def random_ensemble(rng, n=None):
    n = n or int(rng.integers(1, 5))
    members = [random_mlp(rng, n=n, m=1), random_svr(rng, n=n)]
    return EnsembleModel(members, rng.uniform(0.1, 1.0, size=2))


def leaf_by_enumeration(tree, x):
    """Brute force: the leaf whose path conditions all hold at ``x``."""
    hits = []

    def walk(nid, ok):
        node = tree.nodes[nid]
        if isinstance(node, Leaf):
            if ok:
                hits.append(nid)
            return
        left = node.a @ x <= node.b
        walk(node.left, ok and left)
        walk(node.right, ok and not left)

    walk(tree.root, True)
    assert len(hits) == 1
    return hits[0]


# QP oracles ------------------------------------------------------------------


def random_spd(rng, n, cond=100.0):
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return (Q * np.geomspace(1.0, cond, n)) @ Q.T


def kkt_direct(B, g, A, b):
    """Equality-constrained QP by one dense solve of the KKT system."""
    n, p = B.shape[0], A.shape[0]
    K = np.block([[B, A.T], [A, np.zeros((p, p))]])
    sol = np.linalg.solve(K, np.concatenate([-g, b]))
    return sol[:n], sol[n:]


def enumerate_active_sets(B, g, A_in, b_in, A_eq=None, b_eq=None, tol=1e-9):
    """Try all 2^p working sets; return the unique KKT point ``(d, mu)``."""
    from itertools import combinations

    n, p = B.shape[0], A_in.shape[0]
    A_eq = np.zeros((0, n)) if A_eq is None else A_eq
    b_eq = np.zeros(0) if b_eq is None else b_eq
    for k in range(p + 1):
        for S in combinations(range(p), k):
            S = list(S)
            A = np.vstack([A_eq, A_in[S]])
            b = np.concatenate([b_eq, b_in[S]])
            try:
                d, nu = kkt_direct(B, g, A, b)
            except np.linalg.LinAlgError:
                continue
            mu = np.zeros(p)
            mu[S] = nu[A_eq.shape[0]:]
            if np.all(A_in @ d - b_in <= tol) and np.all(mu >= -tol):
                return d, mu
    raise AssertionError("no KKT point found")
