import math

import pytest
import torch

from rethinknet.common.errors import ConfigurationError, DimensionError, ParameterError, StateError
from rethinknet.common.pytorch_util import make_generator
from rethinknet.model.common.losses import backward, weighted_bce
from rethinknet.model.rnn.cells import (
    CELL_KINDS, build_cell, cell_parameter_count, gru_step, irnn_step, lstm_step, srn_step)
from rethinknet.model.rnn.recurrent_dropout import recurrent_dropout_mask


def zeros(*shape):
    return torch.zeros(*shape, dtype=torch.float64)


def t(values):
    return torch.tensor(values, dtype=torch.float64)


class TestSteps:
    def test_srn_zero_parameters(self):
        x = torch.randn(3, 4, dtype=torch.float64)
        h = torch.rand(3, 2, dtype=torch.float64)
        out = srn_step(x, h, zeros(2, 4), zeros(2, 2), zeros(2))
        assert torch.equal(out, torch.full((3, 2), 0.5, dtype=torch.float64))

    def test_srn_ignores_previous_output_without_memory(self):
        x = torch.randn(1, 3, dtype=torch.float64)
        u = torch.randn(2, 3, dtype=torch.float64)
        a = srn_step(x, t([[0.1, 0.9]]), u, zeros(2, 2), zeros(2))
        b = srn_step(x, t([[0.7, 0.2]]), u, zeros(2, 2), zeros(2))
        assert torch.equal(a, b)

    def test_srn_scalar(self):
        out = srn_step(t([[0.0]]), t([[1.0]]), t([[1.0]]), t([[1.0]]), t([0.0]))
        assert float(out) == pytest.approx(1 / (1 + math.exp(-1)), abs=1e-12)
        assert float(out) == pytest.approx(0.73106, abs=1e-5)

    def test_lstm_zero_parameters(self):
        x = torch.randn(2, 3, dtype=torch.float64)
        h, c = lstm_step(x, (zeros(2, 4), zeros(2, 4)), zeros(16, 3), zeros(16, 4), zeros(16))
        assert torch.equal(h, zeros(2, 4))
        assert torch.equal(c, zeros(2, 4))

    def test_gru_closed_update_gate_keeps_state(self):
        hidden = 3
        bias = zeros(3 * hidden)
        bias[:hidden] = 50.0
        x = torch.randn(2, 4, dtype=torch.float64)
        h_prev = torch.rand(2, hidden, dtype=torch.float64)
        out = gru_step(x, h_prev, torch.randn(9, 4, dtype=torch.float64),
            torch.randn(9, 3, dtype=torch.float64), bias)
        torch.testing.assert_close(out, h_prev, rtol=0, atol=1e-12)

    def test_irnn_identity(self):
        out = irnn_step(t([[5.0]]), t([[0.3]]), t([[0.0]]), t([[1.0]]), t([0.0]))
        assert float(out) == pytest.approx(0.3)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            srn_step(zeros(1, 3), zeros(1, 2), zeros(2, 4), zeros(2, 2), zeros(2))
        with pytest.raises(DimensionError):
            srn_step(zeros(1, 3), zeros(2, 2), zeros(2, 3), zeros(2, 2), zeros(2))
        with pytest.raises(DimensionError):
            lstm_step(zeros(1, 3), (zeros(1, 2), zeros(1, 3)), zeros(8, 3), zeros(8, 2), zeros(8))


class TestCells:
    @pytest.mark.parametrize('kind', CELL_KINDS)
    def test_parameter_count(self, kind):
        cell = build_cell(kind, 4, 5, generator=make_generator(0))
        n = sum(p.numel() for p in cell.parameters())
        assert n == cell_parameter_count(kind, 4, 5)

    def test_initialization(self):
        irnn = build_cell('irnn', 3, 4, generator=make_generator(0))
        assert torch.equal(irnn.weight_hh, torch.eye(4, dtype=torch.float64))
        assert torch.equal(irnn.bias, zeros(4))

        lstm = build_cell('lstm', 3, 4, generator=make_generator(0))
        assert torch.equal(lstm.bias[4:8], torch.ones(4, dtype=torch.float64))
        assert torch.equal(lstm.bias[:4], zeros(4))

        gru = build_cell('gru', 3, 4, generator=make_generator(0))
        for block in gru.weight_hh.detach().split(4, dim=0):
            torch.testing.assert_close(block @ block.T, torch.eye(4, dtype=torch.float64))
        limit = math.sqrt(6 / (3 + 12))
        assert float(gru.weight_ih.abs().max()) <= limit

    def test_seeded_initialization(self):
        a = build_cell('lstm', 3, 4, generator=make_generator(7))
        b = build_cell('lstm', 3, 4, generator=make_generator(7))
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)

    @pytest.mark.parametrize('kind', CELL_KINDS)
    def test_outputs_finite_and_bounded(self, kind):
        cell = build_cell(kind, 6, 5, generator=make_generator(1))
        x = 3 * torch.randn(8, 6, dtype=torch.float64)
        state = cell.init_state(8)
        for _ in range(3):
            state = cell(x, state)
            out = cell.output(state)
            assert bool(torch.isfinite(out).all())
            if kind == 'srn':
                assert bool(((out > 0) & (out < 1)).all())
            if kind in ('lstm', 'gru'):
                assert bool((out.abs() < 1).all())
            if kind == 'irnn':
                assert bool((out >= 0).all())

    def test_unknown_cell(self):
        with pytest.raises(ConfigurationError):
            build_cell('transformer', 2, 2)


class TestRecurrentDropout:
    def test_zero_rate(self):
        assert torch.equal(recurrent_dropout_mask((3, 4), rate=0.0),
            torch.ones(3, 4, dtype=torch.float64))

    @pytest.mark.parametrize('rate', [-0.1, 1.0, 1.5])
    def test_invalid_rate(self, rate):
        with pytest.raises(ParameterError):
            recurrent_dropout_mask((2, 2), rate=rate)

    def test_unbiased(self):
        mask = recurrent_dropout_mask((100_000,), rate=0.25, generator=make_generator(0))
        assert float(mask.mean()) == pytest.approx(1.0, rel=0.01)
        values = set(mask.unique().tolist())
        assert values == {0.0, 1 / 0.75}

    def test_deterministic(self):
        a = recurrent_dropout_mask((5, 5), generator=make_generator(3))
        b = recurrent_dropout_mask((5, 5), generator=make_generator(3))
        assert torch.equal(a, b)


class TestWeightedBCE:
    def test_zero_weights(self):
        p = torch.rand(4, 3, dtype=torch.float64)
        y = (torch.rand(4, 3) < 0.5).to(torch.float64)
        assert float(weighted_bce(p, y, torch.zeros_like(p))) == 0.0

    def test_scalar(self):
        loss = weighted_bce(t([[0.5]]), t([[1.0]]), t([[1.0]]))
        assert float(loss) == pytest.approx(math.log(2), abs=1e-12)

    def test_linear_in_weights(self):
        p = torch.rand(4, 3, dtype=torch.float64) * 0.8 + 0.1
        y = (torch.rand(4, 3) < 0.5).to(torch.float64)
        w = torch.rand(4, 3, dtype=torch.float64)
        torch.testing.assert_close(weighted_bce(p, y, 3.5 * w), 3.5 * weighted_bce(p, y, w))

    def test_unit_weights_equal_unweighted(self):
        p = torch.rand(5, 2, dtype=torch.float64) * 0.8 + 0.1
        y = (torch.rand(5, 2) < 0.5).to(torch.float64)
        assert torch.equal(weighted_bce(p, y, torch.ones_like(p)), weighted_bce(p, y))

    def test_clamped(self):
        loss = weighted_bce(t([[0.0, 1.0]]), t([[1.0, 0.0]]))
        assert math.isfinite(float(loss))
        assert float(loss) == pytest.approx(-2 * math.log(1e-7), rel=1e-6)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            weighted_bce(zeros(2, 3) + 0.5, zeros(2, 2))
        with pytest.raises(DimensionError):
            weighted_bce(zeros(2, 3) + 0.5, zeros(2, 3), zeros(3, 2))


class TestBackward:
    def test_gradient_at_half(self):
        p = t([[0.5]]).requires_grad_(True)
        (grad,) = backward(weighted_bce(p, t([[1.0]]), t([[1.0]])), [p])
        assert float(grad) == pytest.approx(-2.0)

    def test_zero_weights_zero_gradients(self):
        cell = build_cell('srn', 3, 2, generator=make_generator(0))
        x = torch.randn(4, 3, dtype=torch.float64)
        p = cell(x, cell.init_state(4))
        y = (torch.rand(4, 2) < 0.5).to(torch.float64)
        grads = backward(weighted_bce(p, y, torch.zeros_like(p)), list(cell.parameters()))
        for g in grads:
            assert torch.equal(g, torch.zeros_like(g))

    def test_unused_parameters_get_zeros(self):
        a = t([1.0]).requires_grad_(True)
        b = t([2.0]).requires_grad_(True)
        grads = backward((3 * a).sum(), [a, b])
        assert grads[0].tolist() == [3.0]
        assert grads[1].tolist() == [0.0]

    def test_backward_before_forward(self):
        w = t([1.0]).requires_grad_(True)
        with pytest.raises(StateError):
            backward(t(0.0), [w])
