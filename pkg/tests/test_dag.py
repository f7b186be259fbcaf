"""Tests for DAG construction, forward evaluation, grouping, serialization."""

import numpy as np
import pytest

from multifid.autodiff import Tape, Tensor, backward, fd_gradient, mse
from multifid.candidates import OpKind, mixed_forward
from multifid.dag import (
    DagConfig,
    build_dag,
    dag_forward,
    load_network,
    n_params,
    network_from_doc,
    network_to_doc,
    param_groups,
    save_network,
)
from multifid.errors import ConfigError


def op_count_oracle(op):
    """Per-layer summation: every affine contributes p*q + q parameters."""
    return sum(w.data.shape[0] * w.data.shape[1] + b.data.shape[0]
               for w, b in op.layers)


class TestBuildDag:
    @pytest.mark.parametrize("n_cells,expected", [(3, 3), (6, 15), (2, 1), (7, 21)])
    def test_edge_counts(self, n_cells, expected):
        net = build_dag(DagConfig(n_cells, 2, 1), 0)
        assert len(net.edges) == expected == n_cells * (n_cells - 1) // 2

    def test_edge_dims_follow_construction_rule(self):
        net = build_dag(DagConfig(3, 8, 100), 0)
        # construction rule walked by hand: edges into the output node carry
        # out_dim, edge (0,1) carries the node width, edges from node 0 take in_dim
        assert (net.edges[(0, 2)].in_dim, net.edges[(0, 2)].out_dim) == (8, 100)
        assert (net.edges[(1, 2)].in_dim, net.edges[(1, 2)].out_dim) == (20, 100)
        assert (net.edges[(0, 1)].in_dim, net.edges[(0, 1)].out_dim) == (8, 20)

    def test_invalid_cell_counts_rejected(self):
        with pytest.raises(ConfigError):
            DagConfig(1, 2, 1)
        with pytest.raises(ConfigError):
            DagConfig(8, 2, 1)

    def test_deterministic_for_seed(self):
        a = build_dag(DagConfig(3, 2, 1), 11)
        b = build_dag(DagConfig(3, 2, 1), 11)
        for key in a.edges:
            np.testing.assert_array_equal(a.edges[key].alpha.data, b.edges[key].alpha.data)
            for op_a, op_b in zip(a.edges[key].ops, b.edges[key].ops):
                for (w1, _), (w2, _) in zip(op_a.layers, op_b.layers):
                    np.testing.assert_array_equal(w1.data, w2.data)


class TestDagForward:
    def test_zero_saturated_network_outputs_zero(self):
        net = build_dag(DagConfig(3, 2, 1), 0)
        for edge in net.edges.values():
            alpha = np.zeros(5)
            alpha[OpKind.ZERO.value] = 60.0
            edge.alpha.data = alpha
        x = np.random.default_rng(0).random((5, 2))
        out = dag_forward(net, Tensor(x))
        assert np.max(np.abs(out.data)) < 1e-12

    def test_two_cells_degenerates_to_single_edge(self):
        net = build_dag(DagConfig(2, 3, 4), 1)
        x = np.random.default_rng(1).random((6, 3))
        direct = mixed_forward(net.edges[(0, 1)], Tensor(x)).data
        np.testing.assert_array_equal(dag_forward(net, Tensor(x)).data, direct)

    def test_three_cells_matches_manual_composition(self):
        net = build_dag(DagConfig(3, 2, 1), 2)
        x = np.random.default_rng(2).random((4, 2))
        h1 = mixed_forward(net.edges[(0, 1)], Tensor(x))
        expected = (mixed_forward(net.edges[(0, 2)], Tensor(x)).data
                    + mixed_forward(net.edges[(1, 2)], h1).data)
        np.testing.assert_allclose(dag_forward(net, Tensor(x)).data, expected,
                                   atol=1e-12)

    def test_deterministic_forward(self):
        net = build_dag(DagConfig(4, 3, 2), 3)
        x = np.random.default_rng(3).random((5, 3))
        np.testing.assert_array_equal(dag_forward(net, Tensor(x)).data,
                                      dag_forward(net, Tensor(x)).data)

    def test_logit_shift_leaves_output_unchanged(self):
        net = build_dag(DagConfig(3, 2, 1), 4)
        x = np.random.default_rng(4).random((5, 2))
        before = dag_forward(net, Tensor(x)).data.copy()
        net.edges[(0, 1)].alpha.data = net.edges[(0, 1)].alpha.data + 7.5
        after = dag_forward(net, Tensor(x)).data
        np.testing.assert_allclose(after, before, atol=1e-10)


class TestParamGroups:
    def test_architecture_group_holds_alpha_vectors(self):
        net = build_dag(DagConfig(3, 2, 1), 0)
        _, arch = param_groups(net)
        assert len(arch.params) == 3
        assert all(t.data.shape == (5,) for t in arch.params.values())

    def test_zero_ops_add_nothing_to_weights(self):
        net = build_dag(DagConfig(3, 2, 1), 0)
        weights, _ = param_groups(net)
        assert not any("zero" in name for name in weights.params)

    def test_total_count_matches_summation_oracle(self):
        net = build_dag(DagConfig(3, 4, 2), 5)
        expected = sum(op_count_oracle(op) for edge in net.edges.values()
                       for op in edge.ops)
        expected += 5 * len(net.edges)  # alpha logits
        assert n_params(net) == expected

    def test_groups_partition_parameters(self):
        net = build_dag(DagConfig(3, 2, 1), 6)
        weights, arch = param_groups(net)
        ids_w = {id(t) for t in weights.params.values()}
        ids_a = {id(t) for t in arch.params.values()}
        assert not ids_w & ids_a
        all_ids = set()
        for edge in net.edges.values():
            all_ids.add(id(edge.alpha))
            for op in edge.ops:
                for w, b in op.layers:
                    all_ids.update((id(w), id(b)))
        assert ids_w | ids_a == all_ids


class TestGradientFlow:
    def test_alpha_gradients_match_finite_differences(self):
        net = build_dag(DagConfig(3, 2, 2, node_width=5), 7)
        rng = np.random.default_rng(7)
        _, arch = param_groups(net)
        for t in arch.params.values():
            t.data = rng.standard_normal(5) * 0.3
        x = rng.random((6, 2))
        target = rng.random((6, 2))

        def forward():
            return mse(dag_forward(net, Tensor(x)), target)

        with Tape() as tape:
            loss = forward()
        backward(tape, loss)
        alphas = arch.tensors()
        analytic = [t.grad.copy() for t in alphas]
        fd = fd_gradient(lambda: float(forward().data), alphas, 1e-5)
        for a, f in zip(analytic, fd):
            np.testing.assert_allclose(a, f, rtol=1e-5, atol=1e-8)


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path):
        net = build_dag(DagConfig(3, 2, 1), 8)
        rng = np.random.default_rng(8)
        for edge in net.edges.values():
            edge.alpha.data = rng.standard_normal(5)
        path = tmp_path / "model.json"
        save_network(net, path)
        loaded = load_network(path)
        assert loaded.config == net.config
        x = rng.random((5, 2))
        np.testing.assert_array_equal(dag_forward(loaded, Tensor(x)).data,
                                      dag_forward(net, Tensor(x)).data)
        for key in net.edges:
            np.testing.assert_array_equal(loaded.edges[key].alpha.data,
                                          net.edges[key].alpha.data)
            for op_a, op_b in zip(net.edges[key].ops, loaded.edges[key].ops):
                for (w1, b1), (w2, b2) in zip(op_a.layers, op_b.layers):
                    np.testing.assert_array_equal(w1.data, w2.data)
                    np.testing.assert_array_equal(b1.data, b2.data)

    def test_doc_round_trip_preserves_prediction(self):
        net = build_dag(DagConfig(4, 3, 2), 9)
        clone = network_from_doc(network_to_doc(net))
        x = np.random.default_rng(9).random((4, 3))
        np.testing.assert_array_equal(dag_forward(clone, Tensor(x)).data,
                                      dag_forward(net, Tensor(x)).data)

    def test_unknown_format_rejected(self):
        with pytest.raises(ConfigError):
            network_from_doc({"format": "something-else"})
