import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpsqp.errors import ConfigurationError, NumericError, ShapeError, StructureError
from fpsqp.surrogate import (
    AnalyticAdapter,
    Branch,
    DecisionTreeModel,
    EnsembleModel,
    Kernel,
    Leaf,
    LeafModel,
    MlpModel,
    SvrModel,
    activation_eval,
    dt_eval,
    dt_locate_leaf,
    ensemble_eval,
    kernel_eval,
    load_model,
    mlp_eval,
    save_model,
    surrogate_eval,
    svr_eval,
)
from fpsqp.surrogate.tree import candidate_leaves, dt_subgradient, min_norm_point

from helpers import (
    check_model_derivatives,
    fd_jacobian,
    leaf_by_enumeration,
    random_ensemble,
    random_mlp,
    random_svr,
    random_tree,
    rel_err,
)


class TestActivations:
    def test_swish_at_zero(self):
        assert activation_eval("swish", 0.0) == (0.0, 0.5, 0.5)

    def test_swish_at_ten(self):
        # direct scalar evaluation of z / (1 + exp(-z))
        expected = 10.0 / (1.0 + np.exp(-10.0))
        phi, _, _ = activation_eval("swish", 10.0)
        assert phi == pytest.approx(expected, rel=1e-15)
        assert phi == pytest.approx(9.999546, abs=1e-6)

    def test_tanh_at_zero(self):
        assert activation_eval("tanh", 0.0) == (0.0, 1.0, 0.0)

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            activation_eval("relu", 0.0)

    @pytest.mark.parametrize("kind", ["swish", "tanh", "sigmoid"])
    def test_derivatives_match_finite_differences(self, kind):
        z = np.linspace(-6, 6, 41)
        h = 1e-5
        phi_p, d1_p, _ = activation_eval(kind, z + h)
        phi_m, d1_m, _ = activation_eval(kind, z - h)
        _, d1, d2 = activation_eval(kind, z)
        np.testing.assert_allclose(d1, (phi_p - phi_m) / (2 * h), atol=1e-9)
        np.testing.assert_allclose(d2, (d1_p - d1_m) / (2 * h), atol=1e-9)


class TestMlp:
    def test_affine_identity(self):
        model = MlpModel([np.eye(2)], [np.zeros(2)], ())
        t = mlp_eval(model, [1.0, 2.0])
        np.testing.assert_array_equal(t.value, [1.0, 2.0])
        np.testing.assert_array_equal(t.jacobian, np.eye(2))
        np.testing.assert_array_equal(t.hessians, np.zeros((2, 2, 2)))

    def test_single_swish_neuron(self):
        model = MlpModel([[[1.0]], [[1.0]]], [[0.0], [0.0]], ("swish",))
        t = mlp_eval(model, [0.0])
        assert t.value[0] == 0.0
        assert t.jacobian[0, 0] == 0.5
        assert t.hessians[0, 0, 0] == 0.5

    def test_random_three_layer_net(self, rng):
        for _ in range(10):
            model = random_mlp(rng, hidden=[6, 5, 4])
            x = rng.uniform(-2, 2, size=model.n_inputs)
            check_model_derivatives(model, x)

    def test_identity_activation_gives_zero_hessian(self, rng):
        model = random_mlp(rng, n=3, m=2, hidden=[5, 4], act="identity")
        t = mlp_eval(model, rng.normal(size=3))
        assert np.all(t.hessians == 0.0)

    def test_hessians_symmetric(self, rng):
        model = random_mlp(rng, n=4, m=3, hidden=[7, 7])
        h = mlp_eval(model, rng.normal(size=4)).hessians
        assert np.max(np.abs(h - np.swapaxes(h, 1, 2))) <= 1e-12

    def test_predict_matches_eval(self, rng):
        model = random_mlp(rng, n=3, m=2)
        X = rng.normal(size=(5, 3))
        np.testing.assert_allclose(
            model.predict(X), np.array([mlp_eval(model, x, 0).value for x in X]), atol=1e-14
        )

    def test_shape_error(self, rng):
        model = random_mlp(rng, n=3)
        with pytest.raises(ShapeError):
            mlp_eval(model, np.zeros(4))

    def test_non_finite_input(self, rng):
        model = random_mlp(rng, n=2)
        with pytest.raises(NumericError):
            mlp_eval(model, [np.nan, 0.0])

    def test_non_finite_weight(self):
        with pytest.raises(NumericError):
            MlpModel([[[np.inf]]], [[0.0]], ())

    def test_inconsistent_layers(self):
        with pytest.raises(ShapeError):
            MlpModel([np.ones((3, 2)), np.ones((1, 4))], [np.zeros(3), np.zeros(1)], ("tanh",))


class TestKernels:
    def test_rbf_at_support_vector(self):
        x = np.array([0.3, -1.2])
        k, g, h = kernel_eval(Kernel("rbf", gamma=1.0), x, x)
        assert k == 1.0
        np.testing.assert_array_equal(g, 0.0)
        np.testing.assert_allclose(h, -2.0 * np.eye(2))

    def test_linear(self):
        k, g, h = kernel_eval(Kernel("linear"), np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert k == 0.0
        np.testing.assert_array_equal(g, [0.0, 1.0])
        np.testing.assert_array_equal(h, 0.0)

    def test_polynomial_finite_differences(self, rng):
        kernel = Kernel("polynomial", gamma=0.7, degree=2, coef=0.5)
        for _ in range(10):
            x, xi = rng.normal(size=3), rng.normal(size=3)
            _, g, h = kernel_eval(kernel, x, xi)
            fd_g = fd_jacobian(lambda z: kernel_eval(kernel, z, xi)[0], x)
            fd_h = fd_jacobian(lambda z: kernel_eval(kernel, z, xi)[1], x)
            assert rel_err(g, fd_g) <= 1e-6
            assert rel_err(h, fd_h) <= 1e-6

    @pytest.mark.parametrize(
        "kwargs", [dict(kind="rbf", gamma=0.0), dict(kind="rbf", gamma=-1.0),
                   dict(kind="polynomial", degree=0), dict(kind="sigmoid")]
    )
    def test_bad_parameters(self, kwargs):
        with pytest.raises(ConfigurationError):
            Kernel(**kwargs)


class TestSvr:
    def test_single_vector_rbf(self):
        sv = np.array([[0.5, -0.5, 2.0]])
        model = SvrModel(sv, [1.0], 0.0, Kernel("rbf", gamma=1.0))
        t = svr_eval(model, sv[0])
        assert t.value[0] == 1.0
        np.testing.assert_array_equal(t.jacobian, 0.0)
        np.testing.assert_allclose(t.hessians[0], -2.0 * np.eye(3))

    def test_linear_kernel_hessian_exactly_zero(self, rng):
        model = random_svr(rng, n=4, kind="linear")
        assert np.all(svr_eval(model, rng.normal(size=4)).hessians == 0.0)

    @pytest.mark.parametrize("kind", ["rbf", "polynomial"])
    def test_random_models(self, rng, kind):
        for _ in range(10):
            model = random_svr(rng, kind=kind)
            check_model_derivatives(model, rng.normal(size=model.n_inputs))

    def test_empty_support(self):
        with pytest.raises(ConfigurationError):
            SvrModel(np.zeros((0, 2)), [], 0.0, Kernel("rbf"))


def one_split_tree(left_model, right_model, a=(1.0,), b=0.0):
    return DecisionTreeModel(
        {"root": Branch(np.array(a), b, "L", "R"), "L": Leaf(left_model), "R": Leaf(right_model)},
        "root",
    )


SQUARE = LeafModel("quadratic", [0.0], 0.0, [[2.0]])  # x^2
LINE = LeafModel("affine", [-1.0], 1.0)  # -x + 1


class TestDecisionTree:
    def test_interior_left(self):
        tree = one_split_tree(SQUARE, LINE)
        assert dt_locate_leaf(tree, [-1.0]) == ("L", set())

    def test_equality_goes_left_and_is_active(self):
        tree = one_split_tree(SQUARE, LINE)
        assert dt_locate_leaf(tree, [0.0]) == ("L", {"root"})

    def test_random_trees_match_enumeration(self, rng):
        for _ in range(5):
            tree = random_tree(rng, n=3, depth=3)
            for x in rng.uniform(-2, 2, size=(100, 3)):
                leaf, _ = dt_locate_leaf(tree, x)
                assert leaf == leaf_by_enumeration(tree, x)

    def test_interior_leaf_calculus(self):
        tree = one_split_tree(LINE, SQUARE)
        t = dt_eval(tree, [3.0])
        assert (t.value[0], t.jacobian[0, 0], t.hessians[0, 0, 0]) == (9.0, 6.0, 2.0)

    def test_boundary_subgradient_grid_oracle(self):
        tree = one_split_tree(SQUARE, LINE)
        # grid over w in [0, 1] of |w * 0 + (1 - w) * (-1)|
        w = np.linspace(0, 1, 10001)
        oracle = np.min(np.abs(w * 0.0 + (1 - w) * -1.0))
        g = dt_eval(tree, [0.0]).jacobian[0, 0]
        assert abs(g) == pytest.approx(oracle, abs=1e-12)
        assert g == 0.0

    def test_same_slope_across_boundary(self):
        tree = one_split_tree(LeafModel("affine", [2.5], 0.0), LeafModel("affine", [2.5], 1.0))
        assert dt_eval(tree, [0.0]).jacobian[0, 0] == 2.5

    def test_nested_boundaries_collect_all_touching_leaves(self):
        # root split on x1, both children split on x2: the origin touches all 4 cells
        leaves = {f"l{i}": Leaf(LeafModel("affine", g, 0.0))
                  for i, g in enumerate([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])}
        nodes = {
            "r": Branch(np.array([1.0, 0.0]), 0.0, "a", "b"),
            "a": Branch(np.array([0.0, 1.0]), 0.0, "l0", "l1"),
            "b": Branch(np.array([0.0, 1.0]), 0.0, "l2", "l3"),
            **leaves,
        }
        tree = DecisionTreeModel(nodes, "r")
        assert sorted(candidate_leaves(tree, np.zeros(2))) == ["l0", "l1", "l2", "l3"]
        np.testing.assert_allclose(dt_subgradient(tree, np.zeros(2)), 0.0, atol=1e-12)

    def test_interior_derivatives_exact(self, rng):
        tree = random_tree(rng, n=3, depth=3)
        for x in rng.uniform(-2, 2, size=(50, 3)):
            leaf, active = dt_locate_leaf(tree, x)
            assert not active
            m = tree.nodes[leaf].model
            t = dt_eval(tree, x)
            np.testing.assert_array_equal(t.jacobian[0], m.gradient(x))
            np.testing.assert_array_equal(t.hessians[0], m.hessian())

    def test_subgradient_norm_bounded_by_candidates(self, rng):
        for _ in range(20):
            tree = random_tree(rng, n=2, depth=2)
            root = tree.nodes[tree.root]
            # a point on the root hyperplane
            x = rng.normal(size=2)
            x = x - (root.a @ x - root.b) / (root.a @ root.a) * root.a
            g = dt_subgradient(tree, x)
            cands = candidate_leaves(tree, x)
            assert len(cands) >= 2
            best = min(np.linalg.norm(tree.nodes[c].model.gradient(x)) for c in cands)
            assert np.linalg.norm(g) <= best + 1e-12

    def test_boundary_hessian_is_symmetric(self, rng):
        tree = random_tree(rng, n=2, depth=2)
        root = tree.nodes[tree.root]
        x = root.b / (root.a @ root.a) * root.a
        h = dt_eval(tree, x).hessians[0]
        assert np.max(np.abs(h - h.T)) <= 1e-12

    def test_missing_child(self):
        with pytest.raises(StructureError):
            DecisionTreeModel({"r": Branch(np.ones(1), 0.0, "a", "b"), "a": Leaf(LINE)}, "r")

    def test_cycle(self):
        with pytest.raises(StructureError):
            DecisionTreeModel({"r": Branch(np.ones(1), 0.0, "r", "a"), "a": Leaf(LINE)}, "r")

    def test_non_differentiable_leaf_kind(self):
        with pytest.raises(ConfigurationError):
            LeafModel("piecewise", [1.0])


class TestMinNormPoint:
    def test_segment(self):
        p, w = min_norm_point(np.array([[1.0, 1.0], [1.0, -1.0]]))
        np.testing.assert_allclose(p, [1.0, 0.0], atol=1e-14)
        np.testing.assert_allclose(w, [0.5, 0.5], atol=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000), st.integers(2, 6), st.integers(1, 4))
    def test_optimality_conditions(self, seed, k, n):
        pts = np.random.default_rng(seed).normal(size=(k, n))
        p, w = min_norm_point(pts)
        assert np.all(w >= 0) and w.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(w @ pts, p, atol=1e-10)
        # p is the projection of 0: <p, q - p> >= 0 for every vertex q
        assert np.all(pts @ p - p @ p >= -1e-9)


class TestEnsemble:
    def test_single_member_identity(self, rng):
        member = random_mlp(rng, n=3, m=2)
        x = rng.normal(size=3)
        a, b = ensemble_eval(EnsembleModel([member], [1.0]), x), mlp_eval(member, x)
        np.testing.assert_array_equal(a.value, b.value)
        np.testing.assert_array_equal(a.jacobian, b.jacobian)
        np.testing.assert_array_equal(a.hessians, b.hessians)

    def test_two_copies_half_weights(self, rng):
        member = random_mlp(rng, n=3, m=1)
        x = rng.normal(size=3)
        a, b = ensemble_eval(EnsembleModel([member, member], [0.5, 0.5]), x), mlp_eval(member, x)
        np.testing.assert_allclose(a.value, b.value, rtol=1e-15)
        np.testing.assert_allclose(a.jacobian, b.jacobian, rtol=1e-15)
        np.testing.assert_allclose(a.hessians, b.hessians, rtol=1e-15)

    def test_mixture_jacobian(self, rng):
        for _ in range(10):
            model = random_ensemble(rng)
            check_model_derivatives(model, rng.normal(size=model.n_inputs))

    def test_weighted_sum_exact(self, rng):
        model = random_ensemble(rng, n=3)
        x = rng.normal(size=3)
        t = ensemble_eval(model, x)
        parts = [m.evaluate(x) for m in model.members]
        w = model.weights
        np.testing.assert_allclose(t.hessians, w[0] * parts[0].hessians + w[1] * parts[1].hessians, atol=1e-14)

    def test_empty(self):
        with pytest.raises(ConfigurationError):
            EnsembleModel([], [])

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ShapeError):
            EnsembleModel([random_mlp(rng, n=2, m=1), random_mlp(rng, n=3, m=1)], [1, 1])


class TestDispatchAndFiles:
    def test_analytic_sphere(self):
        t = surrogate_eval(AnalyticAdapter.from_test_function("sphere"), np.zeros(10))
        assert t.value[0] == 0.0
        np.testing.assert_array_equal(t.jacobian, 0.0)
        np.testing.assert_array_equal(t.hessians[0], 2.0 * np.eye(10))

    def test_mlp_dispatch_identity(self, rng):
        model = random_mlp(rng, n=3, m=2)
        x = rng.normal(size=3)
        a, b = surrogate_eval(model, x), mlp_eval(model, x)
        assert a.value.tobytes() == b.value.tobytes()
        assert a.jacobian.tobytes() == b.jacobian.tobytes()
        assert a.hessians.tobytes() == b.hessians.tobytes()

    @pytest.mark.parametrize(
        "factory",
        [
            lambda r: random_mlp(r, n=3),
            lambda r: random_svr(r, n=3, kind="rbf"),
            lambda r: random_svr(r, n=3, kind="polynomial"),
            lambda r: random_tree(r, n=3),
            lambda r: random_ensemble(r, n=3),
            lambda r: AnalyticAdapter.from_test_function("griewank", 3),
        ],
    )
    def test_round_trip(self, rng, tmp_path, factory):
        model = factory(rng)
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        for x in rng.uniform(-2, 2, size=(100, 3)):
            a, b = surrogate_eval(model, x), surrogate_eval(loaded, x)
            assert a.value.tobytes() == b.value.tobytes()
            assert a.jacobian.tobytes() == b.jacobian.tobytes()

    def test_unknown_field_rejected(self, rng, tmp_path):
        import json

        from fpsqp.errors import ParseError

        path = tmp_path / "m.json"
        save_model(random_mlp(rng, n=2), path)
        doc = json.loads(path.read_text())
        doc["payload"]["extra"] = 1
        path.write_text(json.dumps(doc))
        with pytest.raises(ParseError, match="extra"):
            load_model(path)
