import math

import numpy as np
import pytest

from helpers import central_diff
from sepoc.errors import DegenerateObservableError
from sepoc.models import (ClassDistribution, Graph, adn_initial_state,
                          adn_system, default_graph, kuramoto_system,
                          oa_initial_state, oa_system, power_law_distribution,
                          power_law_weights, splay_state)


class TestGraph:
    def test_from_file_dedup_and_comments(self, tmp_path):
        p = tmp_path / "g.edges"
        p.write_text("# a comment\n0 1\n1 0\n1 2\n\n# another\n2 0\n")
        g = Graph.from_file(p)
        assert g.n == 3
        assert g.edges == ((0, 1), (0, 2), (1, 2))

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError):
            Graph.from_edges([(0, 0), (0, 1)])

    def test_connectivity_warning(self):
        g = Graph(n=4, edges=((0, 1), (2, 3)))
        assert not g.is_connected()
        with pytest.warns(UserWarning):
            kuramoto_system(g)

    def test_default_graph_shape(self):
        g = default_graph()
        assert g.n == 10
        assert len(g.edges) == 12
        assert g.is_connected()
        # splay state must not be an equilibrium of the shipped graph
        sys_ = kuramoto_system(g)
        assert np.max(np.abs(sys_.rhs(splay_state(10)))) > 0.1


class TestKuramoto:
    def test_two_node_example(self):
        g = Graph.from_edges([(0, 1)])
        sys_ = kuramoto_system(g)
        x = np.array([0.0, math.pi / 2])
        np.testing.assert_allclose(sys_.rhs(x), [1.0, -1.0], atol=1e-15)
        assert sys_.phi(x) == pytest.approx(abs((1 + 1j) / 2), abs=1e-15)

    def test_full_sync_is_equilibrium(self):
        sys_ = kuramoto_system(default_graph())
        x = np.full(10, 0.7)
        np.testing.assert_allclose(sys_.rhs(x), 0.0, atol=1e-15)
        assert sys_.phi(x) == pytest.approx(1.0, abs=1e-15)

    def test_splay_zero_centroid(self):
        sys_ = kuramoto_system(default_graph())
        assert sys_.phi(splay_state(10)) == pytest.approx(0.0, abs=1e-14)

    def test_grad_phi_degenerate_at_zero_centroid(self):
        sys_ = kuramoto_system(default_graph())
        with pytest.raises(DegenerateObservableError):
            sys_.grad_phi(splay_state(10))


class TestClassDistribution:
    def test_weight_renormalization(self):
        d = ClassDistribution(np.array([1.0, 2.0]), np.array([0.5000001, 0.5]))
        assert d.weights.sum() == pytest.approx(1.0, abs=1e-15)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            ClassDistribution(np.array([2.0, 1.0]), np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            ClassDistribution(np.array([1.0, 2.0]), np.array([0.9, 0.5]))
        with pytest.raises(ValueError):
            ClassDistribution(np.array([-1.0, 2.0]), np.array([0.5, 0.5]))


class TestPowerLawWeights:
    def test_uniform_at_zero_exponent(self):
        np.testing.assert_allclose(power_law_weights([1.0, 2.0, 3.0], 0.0), 1.0 / 3.0)

    def test_two_values(self):
        np.testing.assert_allclose(power_law_weights([1.0, 2.0], 1.0), [2 / 3, 1 / 3])

    def test_activity_rates_at_2p2(self):
        # direct normalization oracle
        a = np.array([0.2, 0.6, 1.0, 1.4, 1.8])
        raw = a ** -2.2
        assert raw.sum() == pytest.approx(39.32, abs=5e-3)
        w = power_law_weights(a, 2.2)
        np.testing.assert_allclose(w, raw / raw.sum(), atol=1e-15)
        assert w[0] == pytest.approx(0.8772, abs=5e-4)


class TestOA:
    def test_incoherent_equilibrium(self):
        d = power_law_distribution(np.arange(1.0, 11.0), 2.2)
        sys_ = oa_system(d)
        np.testing.assert_allclose(sys_.rhs(np.zeros(20)), 0.0, atol=1e-15)

    def test_single_class_cubic(self):
        # M=1, k=1, real alpha: alpha' = (alpha - alpha^3)/2, fixed point at 1
        d = ClassDistribution(np.array([1.0]), np.array([1.0]))
        sys_ = oa_system(d)
        for a in (0.3, 0.8, 1.0):
            z = np.array([a, 0.0])
            np.testing.assert_allclose(sys_.rhs(z), [(a - a ** 3) / 2, 0.0], atol=1e-14)

    def test_documented_class_setup(self):
        # M=10 degree classes k_i = i with splayed initial amplitudes
        d = power_law_distribution(np.arange(1.0, 11.0), 2.2)
        sys_ = oa_system(d)
        z0 = oa_initial_state(10, 0.1)
        al = z0[0::2] + 1j * z0[1::2]
        np.testing.assert_allclose(np.abs(al), 0.1, atol=1e-15)
        assert sys_.state_dim == 20
        assert sys_.phi(z0) < 0.1  # partial cancellation of splayed phases


class TestADN:
    def test_disease_free_equilibrium(self):
        d = power_law_distribution(0.2 + 0.4 * np.arange(5.0), 2.2)
        sys_ = adn_system(d)
        np.testing.assert_allclose(sys_.rhs(np.zeros(5)), 0.0, atol=1e-15)

    def test_single_class_rate(self):
        d = ClassDistribution(np.array([1.0]), np.array([1.0]))
        sys_ = adn_system(d)
        out = sys_.rhs(np.array([0.02]))
        assert out[0] == pytest.approx(0.98 * (0.02 + 0.02), abs=1e-15)

    def test_documented_rate_setup(self):
        d = power_law_distribution(0.2 + 0.4 * np.arange(5.0), 2.2)
        sys_ = adn_system(d)
        z0 = adn_initial_state(5, 0.02)
        assert sys_.phi(z0) == pytest.approx(0.02, abs=1e-15)
        assert np.all(sys_.rhs(z0) > 0)


@pytest.mark.parametrize("case", ["kuramoto", "oa", "adn"])
def test_analytic_derivatives_match_fd(case):
    rng = np.random.default_rng(42)
    if case == "kuramoto":
        sys_ = kuramoto_system(default_graph())
        draw = lambda: rng.uniform(0, 2 * math.pi, size=10)
    elif case == "oa":
        sys_ = oa_system(power_law_distribution(np.arange(1.0, 11.0), 2.2))

        def draw():
            mag = rng.uniform(0.1, 0.95, size=10)
            ang = rng.uniform(0, 2 * math.pi, size=10)
            z = np.empty(20)
            z[0::2] = mag * np.cos(ang)
            z[1::2] = mag * np.sin(ang)
            return z
    else:
        sys_ = adn_system(power_law_distribution(0.2 + 0.4 * np.arange(5.0), 2.2))
        draw = lambda: rng.uniform(0.05, 0.9, size=5)

    for _ in range(100):
        z = draw()
        if sys_.phi(z) < 1e-3:
            continue
        J_fd = central_diff(lambda x: sys_.rhs(x), z)
        g_fd = central_diff(lambda x: sys_.phi(x), z)
        np.testing.assert_allclose(sys_.jacobian(z), J_fd, rtol=1e-5, atol=1e-6)
        np.testing.assert_allclose(sys_.grad_phi(z), g_fd, rtol=1e-5, atol=1e-6)
