import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emoxgen import numerics as nx
from emoxgen.errors import ContractError
from emoxgen.losses import bce_loss, nll_loss


class TestNll:
    def test_perfect(self):
        assert float(nll_loss(np.array([1.0]), [1])) == pytest.approx(0.0, abs=1e-6)

    def test_half(self):
        assert float(nll_loss(np.array([0.5]), [1])) == pytest.approx(math.log(2), abs=1e-6)

    def test_batch_sum(self):
        loss = nll_loss(np.array([0.9, 0.2]), [1, 0])
        assert float(loss) == pytest.approx(-(math.log(0.9) + math.log(0.8)), abs=1e-6)
        assert loss.n_terms == 2

    def test_normalized(self):
        loss = nll_loss(np.array([0.9, 0.2]), [1, 0], normalize=True)
        assert float(loss) == pytest.approx(-(math.log(0.9) + math.log(0.8)) / 2, abs=1e-6)

    def test_categorical(self):
        p = np.array([[0.7, 0.2, 0.1], [0.1, 0.1, 0.8]])
        assert float(nll_loss(p, [0, 2])) == pytest.approx(-(math.log(0.7) + math.log(0.8)), abs=1e-6)

    def test_clamped_zero_is_finite(self):
        assert float(nll_loss(np.array([0.0]), [1])) == pytest.approx(-math.log(1e-7), rel=1e-6)

    def test_bad_target(self):
        with pytest.raises(ContractError):
            nll_loss(np.array([0.5]), [2])

    def test_gradient(self):
        with nx.float64():
            z = nx.Tensor([0.3, -1.2, 2.0], requires_grad=True)
            assert nx.grad_check(lambda: nll_loss(nx.sigmoid(z), [1, 0, 1]).value, [z]) <= 1e-6


class TestBce:
    def test_two_by_two(self):
        p = np.array([[0.9, 0.1], [0.2, 0.8]])
        expected = -(2 * math.log(0.9) + 2 * math.log(0.8)) / 4
        assert float(bce_loss(p, [[1, 0], [0, 1]])) == pytest.approx(expected, abs=1e-6)

    def test_perfect(self):
        assert float(bce_loss(np.array([[0.0, 1.0]]), [[0, 1]])) == pytest.approx(0.0, abs=1e-6)

    def test_single_term(self):
        assert float(bce_loss(np.array([[0.5]]), [[1]])) == pytest.approx(math.log(2), abs=1e-6)

    def test_shape_mismatch(self):
        with pytest.raises(ContractError):
            bce_loss(np.array([[0.5, 0.5]]), [[1]])

    def test_non_binary_target(self):
        with pytest.raises(ContractError):
            bce_loss(np.array([[0.5]]), [[0.3]])

    def test_gradient(self):
        with nx.float64():
            z = nx.Tensor(np.random.default_rng(0).normal(size=(3, 28)), requires_grad=True)
            y = (np.random.default_rng(1).random((3, 28)) < 0.2).astype(float)
            assert nx.grad_check(lambda: bce_loss(nx.sigmoid(z), y).value, [z]) <= 1e-6

    @settings(max_examples=200, deadline=None)
    @given(p=st.floats(0.0, 1.0), y=st.integers(0, 1))
    def test_single_term_equals_nll(self, p, y):
        assert float(bce_loss(np.array([[p]]), [[y]])) == float(nll_loss(np.array([p]), [y]))
