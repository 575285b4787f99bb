"""Oblique decision trees with smooth leaf models.

A branch node ``j`` sends ``x`` left iff ``a_j . x <= b_j``. Each leaf holds
``p(x) = 0.5 x^T Q x + c . x + r``. Away from split hyperplanes the tree is
as smooth as its leaves. On a hyperplane the gradient is replaced by the
minimum-norm element of the convex hull of the gradients of every leaf that
touches the point, and the Hessian by central differences of that field.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from fpsqp.errors import ConfigurationError, ShapeError, StructureError
from fpsqp.surrogate.base import EvalTriple, as_point, check_order, symmetrize

BOUNDARY_TOL = 1e-9
FD_STEP = 1e-6
LEAF_KINDS = ("affine", "quadratic")


@dataclass(frozen=True, eq=False)
class LeafModel:
    kind: str
    lin: np.ndarray
    const: float = 0.0
    quad: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in LEAF_KINDS:
            raise ConfigurationError(
                f"leaf model kind {self.kind!r} is not twice differentiable "
                f"or not supported; expected one of {LEAF_KINDS}"
            )
        lin = np.array(self.lin, dtype=float).reshape(-1)
        n = lin.shape[0]
        if self.kind == "quadratic":
            if self.quad is None:
                raise ConfigurationError("quadratic leaf needs a 'quad' matrix")
            quad = np.array(self.quad, dtype=float)
            if quad.shape != (n, n):
                raise ShapeError(f"leaf quad shape {quad.shape}, expected {(n, n)}")
            quad = 0.5 * (quad + quad.T)
        else:
            if self.quad is not None:
                raise ConfigurationError("affine leaf must not carry 'quad'")
            quad = np.zeros((n, n))
        lin.setflags(write=False)
        quad.setflags(write=False)
        object.__setattr__(self, "lin", lin)
        object.__setattr__(self, "quad", quad)
        object.__setattr__(self, "const", float(self.const))

    def value(self, x):
        return 0.5 * x @ self.quad @ x + self.lin @ x + self.const

    def gradient(self, x):
        return self.quad @ x + self.lin

    def hessian(self):
        return np.array(self.quad)


@dataclass(frozen=True)
class Branch:
    a: np.ndarray
    b: float
    left: object
    right: object


@dataclass(frozen=True)
class Leaf:
    model: LeafModel


@dataclass(frozen=True, eq=False)
class DecisionTreeModel:
    """Binary tree keyed by node id; ``root`` names the root node."""

    nodes: dict
    root: object
    kind: str = field(default="tree", init=False)

    def __post_init__(self):
        nodes = dict(self.nodes)
        if self.root not in nodes:
            raise StructureError(f"root {self.root!r} is not a node")
        n = None
        seen = set()
        stack = [self.root]
        while stack:
            nid = stack.pop()
            if nid in seen:
                raise StructureError(f"node {nid!r} is reachable twice (cycle or DAG)")
            seen.add(nid)
            node = nodes[nid]
            if isinstance(node, Branch):
                a = np.array(node.a, dtype=float).reshape(-1)
                a.setflags(write=False)
                nodes[nid] = node = Branch(a, float(node.b), node.left, node.right)
                dim = a.shape[0]
                for child in (node.left, node.right):
                    if child not in nodes:
                        raise StructureError(
                            f"branch {nid!r} points to missing node {child!r}"
                        )
                    stack.append(child)
            elif isinstance(node, Leaf):
                dim = node.model.lin.shape[0]
            else:
                raise StructureError(f"node {nid!r} is neither Branch nor Leaf")
            if n is None:
                n = dim
            elif dim != n:
                raise ShapeError(f"node {nid!r} has dimension {dim}, expected {n}")
        unreachable = set(nodes) - seen
        if unreachable:
            raise StructureError(f"unreachable nodes: {sorted(map(str, unreachable))}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "_n", n)

    @property
    def n_inputs(self) -> int:
        return self._n

    @property
    def n_outputs(self) -> int:
        return 1

    def leaves(self) -> list:
        return [nid for nid, node in self.nodes.items() if isinstance(node, Leaf)]

    def evaluate(self, x, order: int = 2) -> EvalTriple:
        return dt_eval(self, x, order)


def _is_active(node: Branch, x, tol) -> bool:
    return abs(node.a @ x - node.b) <= tol * (1.0 + abs(node.b))


def _descend(tree, start, x, tol):
    """Walk from ``start`` to a leaf; return the leaf id and active branches."""
    nid = start
    active = []
    steps = 0
    while True:
        node = tree.nodes[nid]
        if isinstance(node, Leaf):
            return nid, active
        if _is_active(node, x, tol):
            active.append(nid)
        nid = node.left if node.a @ x <= node.b else node.right
        steps += 1
        if steps > len(tree.nodes):
            raise StructureError("descent did not reach a leaf")


def dt_locate_leaf(tree: DecisionTreeModel, x, tol: float = BOUNDARY_TOL):
    """Return ``(leaf_id, active_boundaries)`` for the path containing ``x``.

    Ties go left. ``active_boundaries`` is the set of path branches whose
    hyperplane passes through ``x`` within ``tol * (1 + |b|)``.
    """
    x = as_point(x, tree.n_inputs)
    leaf, active = _descend(tree, tree.root, x, tol)
    return leaf, set(active)


def candidate_leaves(tree: DecisionTreeModel, x, tol: float = BOUNDARY_TOL) -> list:
    """Every leaf whose closed cell contains ``x``.

    Each active boundary met on a descent queues the sibling subtree, which
    is then descended the same way (breadth first, no repeats).
    """
    x = as_point(x, tree.n_inputs)
    found = []
    queue = deque([tree.root])
    queued = {tree.root}
    while queue:
        leaf, active = _descend(tree, queue.popleft(), x, tol)
        if leaf not in found:
            found.append(leaf)
        for nid in active:
            node = tree.nodes[nid]
            sibling = node.right if node.a @ x <= node.b else node.left
            if sibling not in queued:
                queued.add(sibling)
                queue.append(sibling)
    return found


def min_norm_point(points: np.ndarray, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-norm point of the convex hull of the rows of ``points``.

    Wolfe's algorithm. Returns the point and the convex weights.
    """
    P = np.asarray(points, dtype=float)
    k = P.shape[0]
    scale = max(1.0, float(np.max(np.einsum("ij,ij->i", P, P))))
    first = int(np.argmin(np.einsum("ij,ij->i", P, P)))
    S = [first]
    lam = np.array([1.0])
    x = P[first].copy()
    for _ in range(50 * k + 50):
        dots = P @ x
        j = int(np.argmin(dots))
        if x @ x - dots[j] <= tol * scale or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            Q = P[S]
            m = len(S)
            kkt = np.zeros((m + 1, m + 1))
            kkt[:m, :m] = Q @ Q.T
            kkt[:m, m] = 1.0
            kkt[m, :m] = 1.0
            rhs = np.zeros(m + 1)
            rhs[m] = 1.0
            w = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:m]
            if np.all(w > tol):
                lam = w
                x = w @ Q
                break
            neg = w <= tol
            denom = lam[neg] - w[neg]
            ratios = np.divide(lam[neg], denom, out=np.zeros_like(denom), where=denom > 0)
            theta = float(np.clip(np.min(ratios), 0.0, 1.0))
            lam = theta * w + (1.0 - theta) * lam
            keep = lam > tol
            # always drop at least one point
            if keep.all():
                keep[int(np.argmin(np.where(neg, w, np.inf)))] = False
            S = [s for s, kp in zip(S, keep) if kp]
            lam = lam[keep] / lam[keep].sum()
            x = lam @ P[S]
    weights = np.zeros(k)
    weights[S] = lam
    return x, weights


def dt_subgradient(tree: DecisionTreeModel, x, tol: float = BOUNDARY_TOL) -> np.ndarray:
    """Gradient in a cell interior, minimum-norm subgradient on a boundary."""
    x = as_point(x, tree.n_inputs)
    leaf, active = _descend(tree, tree.root, x, tol)
    if not active:
        return tree.nodes[leaf].model.gradient(x)
    grads = np.array(
        [tree.nodes[nid].model.gradient(x) for nid in candidate_leaves(tree, x, tol)]
    )
    grads = np.unique(grads, axis=0)
    if grads.shape[0] == 1:
        return grads[0]
    return min_norm_point(grads)[0]


def dt_eval(tree: DecisionTreeModel, x, order: int = 2, tol: float = BOUNDARY_TOL) -> EvalTriple:
    check_order(order)
    x = as_point(x, tree.n_inputs)
    leaf, active = _descend(tree, tree.root, x, tol)
    model = tree.nodes[leaf].model
    value = np.array([model.value(x)])
    if order == 0:
        return EvalTriple(value)
    if not active:
        jac = model.gradient(x)[None, :]
        hess = model.hessian()[None] if order >= 2 else None
        return EvalTriple(value, jac, hess)
    grad = dt_subgradient(tree, x, tol)
    if order == 1:
        return EvalTriple(value, grad[None, :])
    n = x.shape[0]
    hess = np.empty((n, n))
    for i in range(n):
        step = FD_STEP * (1.0 + abs(x[i]))
        e = np.zeros(n)
        e[i] = step
        hess[:, i] = (dt_subgradient(tree, x + e, tol) - dt_subgradient(tree, x - e, tol)) / (
            2.0 * step
        )
    return EvalTriple(value, grad[None, :], symmetrize(hess)[None])
