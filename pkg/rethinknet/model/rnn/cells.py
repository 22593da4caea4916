"""
Recurrent cells of the rethink layer.

The step kernels are plain functions of explicit tensors so they can be
checked in isolation; the ``nn.Module`` cells own the parameters and call
them. Weight layout follows torch: ``weight_ih`` is (gates*h, d),
``weight_hh`` is (gates*h, h) and gate blocks are stacked along dim 0.
"""
from typing import Optional, Tuple, Union
import math

import torch
import torch.nn as nn

from rethinknet.common.errors import ConfigurationError, DimensionError

State = Union[torch.Tensor, Tuple[torch.Tensor, torch.Tensor]]

CELL_KINDS = ('srn', 'gru', 'lstm', 'irnn')


def _check_shapes(x, h_prev, weight_ih, weight_hh, bias, n_gates):
    if x.dim() != 2 or h_prev.dim() != 2:
        raise DimensionError(
            f"inputs must be (N, d) and (N, h), got {tuple(x.shape)} and {tuple(h_prev.shape)}")
    n, d = x.shape
    hidden = h_prev.shape[1]
    if h_prev.shape[0] != n:
        raise DimensionError(f"batch sizes differ: {n} vs {h_prev.shape[0]}")
    if tuple(weight_ih.shape) != (n_gates * hidden, d):
        raise DimensionError(
            f"weight_ih must be {(n_gates * hidden, d)}, got {tuple(weight_ih.shape)}")
    if tuple(weight_hh.shape) != (n_gates * hidden, hidden):
        raise DimensionError(
            f"weight_hh must be {(n_gates * hidden, hidden)}, got {tuple(weight_hh.shape)}")
    if tuple(bias.shape) != (n_gates * hidden,):
        raise DimensionError(f"bias must be {(n_gates * hidden,)}, got {tuple(bias.shape)}")


def srn_step(x, h_prev, weight_ih, weight_hh, bias) -> torch.Tensor:
    """o = sigmoid(U x + W o_prev + b)"""
    _check_shapes(x, h_prev, weight_ih, weight_hh, bias, 1)
    return torch.sigmoid(x @ weight_ih.T + h_prev @ weight_hh.T + bias)


def irnn_step(x, h_prev, weight_ih, weight_hh, bias) -> torch.Tensor:
    """o = relu(U x + W o_prev + b)"""
    _check_shapes(x, h_prev, weight_ih, weight_hh, bias, 1)
    return torch.relu(x @ weight_ih.T + h_prev @ weight_hh.T + bias)


def gru_step(x, h_prev, weight_ih, weight_hh, bias) -> torch.Tensor:
    _check_shapes(x, h_prev, weight_ih, weight_hh, bias, 3)
    hidden = h_prev.shape[1]
    gi_z, gi_r, gi_n = (x @ weight_ih.T + bias).split(hidden, dim=1)
    w_z, w_r, w_n = weight_hh.split(hidden, dim=0)
    update = torch.sigmoid(gi_z + h_prev @ w_z.T)
    reset = torch.sigmoid(gi_r + h_prev @ w_r.T)
    candidate = torch.tanh(gi_n + (reset * h_prev) @ w_n.T)
    return update * h_prev + (1 - update) * candidate


def lstm_step(x, state, weight_ih, weight_hh, bias) -> Tuple[torch.Tensor, torch.Tensor]:
    h_prev, c_prev = state
    _check_shapes(x, h_prev, weight_ih, weight_hh, bias, 4)
    if c_prev.shape != h_prev.shape:
        raise DimensionError(
            f"cell state {tuple(c_prev.shape)} does not match hidden {tuple(h_prev.shape)}")
    hidden = h_prev.shape[1]
    gates = x @ weight_ih.T + h_prev @ weight_hh.T + bias
    in_gate, forget_gate, cell_gate, out_gate = gates.split(hidden, dim=1)
    in_gate = torch.sigmoid(in_gate)
    forget_gate = torch.sigmoid(forget_gate)
    cell_gate = torch.tanh(cell_gate)
    out_gate = torch.sigmoid(out_gate)
    c = forget_gate * c_prev + in_gate * cell_gate
    h = out_gate * torch.tanh(c)
    return h, c


# ========= initialization ============
@torch.no_grad()
def glorot_uniform_(tensor: torch.Tensor, generator: Optional[torch.Generator] = None):
    fan_out, fan_in = tensor.shape
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return tensor.uniform_(-limit, limit, generator=generator)


@torch.no_grad()
def orthogonal_(tensor: torch.Tensor, generator: Optional[torch.Generator] = None):
    """Orthogonal (h, h) blocks stacked along dim 0."""
    rows, hidden = tensor.shape
    for start in range(0, rows, hidden):
        a = torch.randn(hidden, hidden, generator=generator, dtype=torch.float64)
        q, r = torch.linalg.qr(a)
        q = q * torch.sign(torch.diagonal(r)).unsqueeze(0)
        tensor[start:start + hidden].copy_(q)
    return tensor


class RecurrentCell(nn.Module):
    kind = None
    n_gates = 1

    def __init__(self, input_dim: int, hidden_dim: int,
            generator: Optional[torch.Generator] = None):
        super().__init__()
        if input_dim < 1 or hidden_dim < 1:
            raise ConfigurationError(
                f"input_dim and hidden_dim must be >= 1, got {input_dim}, {hidden_dim}")
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        rows = self.n_gates * hidden_dim
        self.weight_ih = nn.Parameter(torch.empty(rows, input_dim, dtype=torch.float64))
        self.weight_hh = nn.Parameter(torch.empty(rows, hidden_dim, dtype=torch.float64))
        self.bias = nn.Parameter(torch.zeros(rows, dtype=torch.float64))
        self.reset_parameters(generator)

    def reset_parameters(self, generator: Optional[torch.Generator] = None):
        glorot_uniform_(self.weight_ih, generator)
        orthogonal_(self.weight_hh, generator)
        with torch.no_grad():
            self.bias.zero_()

    def init_state(self, n: int) -> State:
        return torch.zeros(n, self.hidden_dim, dtype=self.weight_hh.dtype,
            device=self.weight_hh.device)

    def output(self, state: State) -> torch.Tensor:
        return state

    def step(self, x: torch.Tensor, state: State,
            weight_hh: Optional[torch.Tensor] = None) -> State:
        """One recurrence; ``weight_hh`` replaces the stored matrix (DropConnect)."""
        raise NotImplementedError()

    def forward(self, x: torch.Tensor, state: State,
            weight_hh: Optional[torch.Tensor] = None) -> State:
        return self.step(x, state, weight_hh)

    @property
    def memory_matrix(self) -> torch.Tensor:
        """Recurrent matrix oriented so entry [i, j] maps previous output i to output j."""
        return self.weight_hh.T


class SRNCell(RecurrentCell):
    kind = 'srn'

    def step(self, x, state, weight_hh=None):
        w = self.weight_hh if weight_hh is None else weight_hh
        return srn_step(x, state, self.weight_ih, w, self.bias)


class IRNNCell(RecurrentCell):
    kind = 'irnn'

    def reset_parameters(self, generator=None):
        glorot_uniform_(self.weight_ih, generator)
        with torch.no_grad():
            self.weight_hh.copy_(torch.eye(self.hidden_dim, dtype=self.weight_hh.dtype))
            self.bias.zero_()

    def step(self, x, state, weight_hh=None):
        w = self.weight_hh if weight_hh is None else weight_hh
        return irnn_step(x, state, self.weight_ih, w, self.bias)


class GRUCell(RecurrentCell):
    kind = 'gru'
    n_gates = 3

    def step(self, x, state, weight_hh=None):
        w = self.weight_hh if weight_hh is None else weight_hh
        return gru_step(x, state, self.weight_ih, w, self.bias)


class LSTMCell(RecurrentCell):
    kind = 'lstm'
    n_gates = 4

    def reset_parameters(self, generator=None):
        super().reset_parameters(generator)
        with torch.no_grad():
            # forget gate starts open
            self.bias[self.hidden_dim:2 * self.hidden_dim].fill_(1.0)

    def init_state(self, n):
        h = super().init_state(n)
        return h, torch.zeros_like(h)

    def output(self, state):
        return state[0]

    def step(self, x, state, weight_hh=None):
        w = self.weight_hh if weight_hh is None else weight_hh
        return lstm_step(x, state, self.weight_ih, w, self.bias)


_CELL_CLASSES = {
    'srn': SRNCell,
    'irnn': IRNNCell,
    'gru': GRUCell,
    'lstm': LSTMCell,
}


def build_cell(kind: str, input_dim: int, hidden_dim: int,
        generator: Optional[torch.Generator] = None) -> RecurrentCell:
    kind = str(kind).lower()
    if kind not in _CELL_CLASSES:
        raise ConfigurationError(f"unknown cell '{kind}', expected one of {CELL_KINDS}")
    return _CELL_CLASSES[kind](input_dim, hidden_dim, generator=generator)


def cell_parameter_count(kind: str, input_dim: int, hidden_dim: int) -> int:
    n_gates = _CELL_CLASSES[str(kind).lower()].n_gates
    return n_gates * hidden_dim * (input_dim + hidden_dim + 1)
