# coding: utf-8
# vim:sw=4:ts=4:et:
"""Dense and recurrent building blocks on torch."""
import logging

import torch
import torch.nn.functional as nnf
from torch import nn

from thermonet.const import (
    ADAM_BETAS, ADAM_EPS, MSG_BAD_VALUE, MSG_NON_FINITE,
    MSG_NOT_SCALAR, MSG_SHAPE)
from thermonet.exceptions import (
    InvalidParameterError, ShapeError, TrainingAbortError, UsageError)

_LOGGER = logging.getLogger(__name__)

DTYPE = torch.float64

_ACTIVATION_FUNCTIONS = {
    'sigmoid': torch.sigmoid,
    'tanh': torch.tanh,
    'swish': nnf.silu,
    'softplus': nnf.softplus,
    'relu': torch.relu,
    'linear': lambda x: x,
}


def activation(tag):
    """Return the activation function of a tag."""
    try:
        return _ACTIVATION_FUNCTIONS[tag]
    except KeyError:
        raise InvalidParameterError(MSG_BAD_VALUE.format('activation', tag))


class DenseNet(nn.Module):
    """Stack of affine layers with tagged activations.

    ``activations`` holds one tag per layer.  With ``non_negative`` the
    weights and bias of the last layer are kept >= 0 by
    :func:`clamp_non_negative`; ``last_bias=False`` drops that bias.
    """

    def __init__(self, widths, activations, non_negative=False,
                 last_bias=True):
        super(DenseNet, self).__init__()
        if len(widths) < 2 or len(activations) != len(widths) - 1:
            raise ShapeError(MSG_SHAPE.format(
                '{0} activations'.format(len(widths) - 1), len(activations)))
        for tag in activations:
            activation(tag)
        self.widths = list(widths)
        self.activations = list(activations)
        last = len(widths) - 2
        self.layers = nn.ModuleList(
            nn.Linear(n_in, n_out, bias=last_bias or k < last, dtype=DTYPE)
            for k, (n_in, n_out) in enumerate(zip(widths[:-1], widths[1:])))
        self.layers[-1].non_negative = bool(non_negative)

    def forward(self, x):
        """Return a^L for input a^0 = x, batched over leading axes."""
        if x.shape[-1] != self.widths[0]:
            raise ShapeError(MSG_SHAPE.format(self.widths[0], x.shape[-1]))
        for layer, tag in zip(self.layers, self.activations):
            x = activation(tag)(layer(x))
        return x


class LSTMStack(nn.Module):
    """Stacked LSTM encoder with per-step access.

    Weight layout follows ``nn.LSTM``: gates stacked as i, f, g, o.
    """

    def __init__(self, n_input, width, layers):
        super(LSTMStack, self).__init__()
        self.n_input = n_input
        self.width = width
        self.n_layers = layers
        self.lstm = nn.LSTM(n_input, width, num_layers=layers,
                            batch_first=True, dtype=DTYPE)

    def initial_state(self, batch):
        """Return zero hidden and cell states for a batch."""
        zeros = torch.zeros(self.n_layers, batch, self.width, dtype=DTYPE)
        return zeros, zeros.clone()

    def forward(self, x, state=None):
        """Run the stack over x of shape (batch, T, n_input)."""
        if x.shape[-1] != self.n_input:
            raise ShapeError(MSG_SHAPE.format(self.n_input, x.shape[-1]))
        if state is None:
            state = self.initial_state(x.shape[0])
        return self.lstm(x, state)

    def step(self, x, state):
        """Advance one timestep for x of shape (batch, n_input)."""
        out, state = self.forward(x.unsqueeze(1), state)
        return out[:, 0], state


def lstm_step(params, x, state):
    """Return (h', c') of one LSTM cell for explicit parameters.

    ``params`` is ``(W, R, b)`` with W (4H, n), R (4H, H) and b (4H,);
    x, h and c are batched along the first axis.
    """
    weight, recurrent, bias = params
    h_prev, c_prev = state
    width = recurrent.shape[1]
    if weight.shape[0] != 4 * width or x.shape[-1] != weight.shape[1]:
        raise ShapeError(MSG_SHAPE.format(
            (4 * width, x.shape[-1]), tuple(weight.shape)))
    gates = x @ weight.T + h_prev @ recurrent.T + bias
    gate_i, gate_f, gate_g, gate_o = gates.split(width, dim=-1)
    c_next = torch.sigmoid(gate_f) * c_prev + \
        torch.sigmoid(gate_i) * torch.tanh(gate_g)
    h_next = torch.sigmoid(gate_o) * torch.tanh(c_next)
    return h_next, c_next


def layer_params(stack, layer=0):
    """Return (W, R, b) of one layer of an LSTMStack."""
    lstm = stack.lstm
    return (getattr(lstm, 'weight_ih_l{0}'.format(layer)),
            getattr(lstm, 'weight_hh_l{0}'.format(layer)),
            getattr(lstm, 'bias_ih_l{0}'.format(layer)) +
            getattr(lstm, 'bias_hh_l{0}'.format(layer)))


def init_parameters(module, generator=None):
    """Glorot-uniform weights, zero biases, forget gate bias one."""
    with torch.no_grad():
        for name, param in module.named_parameters():
            if name.endswith('bias') or '.bias_' in name or \
                    name.startswith('bias_'):
                param.zero_()
                if 'bias_ih' in name:
                    width = param.shape[0] // 4
                    param[width:2 * width] = 1.0
            else:
                nn.init.xavier_uniform_(param, generator=generator)
    return module


def differentiate(output, inputs, create_graph=False):
    """Return d output / d inputs for a scalar output.

    With ``create_graph`` the result can itself be differentiated.
    Inputs the output does not depend on get zero gradients.
    """
    if output.numel() != 1:
        raise UsageError(MSG_NOT_SCALAR.format(tuple(output.shape)))
    single = isinstance(inputs, torch.Tensor)
    inputs = [inputs] if single else list(inputs)
    grads = torch.autograd.grad(output, inputs, create_graph=create_graph,
                                retain_graph=True, allow_unused=True)
    grads = [torch.zeros_like(x) if g is None else g
             for x, g in zip(inputs, grads)]
    return grads[0] if single else grads


def make_optimizer(parameters, learning_rate):
    """Return the adaptive-moment optimizer used for training."""
    return torch.optim.Adam(parameters, lr=learning_rate, betas=ADAM_BETAS,
                            eps=ADAM_EPS)


def clamp_non_negative(module):
    """Clip the entries of flagged layers at zero."""
    with torch.no_grad():
        for layer in module.modules():
            if getattr(layer, 'non_negative', False):
                for param in layer.parameters():
                    param.clamp_(min=0.0)
    return module


def optimizer_step(optimizer, module):
    """Apply one optimizer update, then re-impose non-negativity."""
    for name, param in module.named_parameters():
        if param.grad is not None and \
                not bool(torch.isfinite(param.grad).all()):
            _LOGGER.error("Non-finite gradient in %s", name)
            raise TrainingAbortError(
                MSG_NON_FINITE.format('gradient of ' + name))
    optimizer.step()
    clamp_non_negative(module)
    return optimizer
