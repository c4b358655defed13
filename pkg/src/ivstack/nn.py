"""Minimal dense-network engine.

Plain affine chains with relu/sigmoid/linear activations, exact reverse-mode
gradients, and bias-corrected Adam. Everything is float64; all randomness
comes from explicit seeds. This is deliberately not a general autodiff: the
two VAE topologies are straight-line dense chains and nothing more.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ShapeMismatch

ACTIVATIONS = ("relu", "sigmoid", "linear")


@dataclass(frozen=True)
class LayerSpec:
    fan_in: int
    fan_out: int
    activation: str  # one of ACTIVATIONS


@dataclass
class NetParams:
    """Weights (fan_out x fan_in) and biases (fan_out) per layer."""

    specs: tuple[LayerSpec, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def input_dim(self) -> int:
        return self.specs[0].fan_in

    @property
    def output_dim(self) -> int:
        return self.specs[-1].fan_out

    def copy(self) -> "NetParams":
        return NetParams(
            specs=self.specs,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


@dataclass
class NetGrads:
    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]


@dataclass
class AdamState:
    """First/second-moment accumulators congruent with one NetParams."""

    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    t: int = 0
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def _check_chain(specs) -> None:
    if len(specs) == 0:
        raise ShapeMismatch("empty layer chain")
    for spec in specs:
        if spec.fan_in < 1 or spec.fan_out < 1:
            raise ShapeMismatch(f"non-positive layer size in {spec}")
        if spec.activation not in ACTIVATIONS:
            raise ShapeMismatch(f"unknown activation {spec.activation!r}")
    for a, b in zip(specs, specs[1:]):
        if a.fan_out != b.fan_in:
            raise ShapeMismatch(f"fan_out {a.fan_out} feeds fan_in {b.fan_in}")


def init_params(specs, rng_seed: int) -> NetParams:
    """He-uniform weights for relu layers, Glorot-uniform otherwise; zero biases."""
    specs = tuple(specs)
    _check_chain(specs)
    rng = np.random.default_rng(rng_seed)
    weights, biases = [], []
    for spec in specs:
        if spec.activation == "relu":
            bound = np.sqrt(6.0 / spec.fan_in)
        else:
            bound = np.sqrt(6.0 / (spec.fan_in + spec.fan_out))
        weights.append(rng.uniform(-bound, bound, (spec.fan_out, spec.fan_in)))
        biases.append(np.zeros(spec.fan_out))
    return NetParams(specs=specs, weights=weights, biases=biases)


def forward(params: NetParams, x: np.ndarray):
    """Run the chain; returns (output, cache) with cache feeding backward.

    Accepts a single vector or a (batch, fan_in) matrix; the output keeps
    the input's rank.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    h = arr[None, :] if single else arr
    if h.ndim != 2 or h.shape[1] != params.input_dim:
        raise ShapeMismatch(
            f"input shape {arr.shape} incompatible with fan_in {params.input_dim}"
        )
    inputs = []   # layer inputs h_{l-1}
    outputs = []  # layer outputs h_l (post-activation)
    for spec, w, b in zip(params.specs, params.weights, params.biases):
        inputs.append(h)
        a = h @ w.T + b
        if spec.activation == "relu":
            h = np.maximum(a, 0.0)
        elif spec.activation == "sigmoid":
            h = expit(a)
        else:
            h = a
        outputs.append(h)
    cache = (inputs, outputs, single)
    return (h[0] if single else h), cache


def backward(params: NetParams, cache, d_out: np.ndarray):
    """Exact gradients of the chain; returns (NetGrads, d_input).

    Gradients are summed over batch rows; the caller owns any 1/batch
    scaling (fold it into d_out).
    """
    inputs, outputs, single = cache
    d = np.asarray(d_out, dtype=float)
    if single:
        d = d[None, :]
    if d.shape != outputs[-1].shape:
        raise ShapeMismatch(
            f"d_out shape {d_out.shape} does not match output {outputs[-1].shape}"
        )
    d_ws = [None] * len(params.specs)
    d_bs = [None] * len(params.specs)
    for i in range(len(params.specs) - 1, -1, -1):
        act = params.specs[i].activation
        h = outputs[i]
        if act == "relu":
            da = d * (h > 0.0)
        elif act == "sigmoid":
            da = d * h * (1.0 - h)
        else:
            da = d
        d_ws[i] = da.T @ inputs[i]
        d_bs[i] = da.sum(axis=0)
        d = da @ params.weights[i]
    grads = NetGrads(d_weights=d_ws, d_biases=d_bs)
    return grads, (d[0] if single else d)


def init_adam(params: NetParams, alpha: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    return AdamState(
        m_w=[np.zeros_like(w) for w in params.weights],
        v_w=[np.zeros_like(w) for w in params.weights],
        m_b=[np.zeros_like(b) for b in params.biases],
        v_b=[np.zeros_like(b) for b in params.biases],
        alpha=alpha, beta1=beta1, beta2=beta2, eps=eps,
    )


def adam_step(params: NetParams, grads: NetGrads, state: AdamState):
    """One bias-corrected Adam update; mutates params/state and returns them."""
    if len(grads.d_weights) != len(params.weights):
        raise ShapeMismatch("gradient/parameter layer count mismatch")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for w, g, m, v in zip(params.weights, grads.d_weights, state.m_w, state.v_w):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        w -= state.alpha * (m / c1) / (np.sqrt(v / c2) + state.eps)
    for b, g, m, v in zip(params.biases, grads.d_biases, state.m_b, state.v_b):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        b -= state.alpha * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state
