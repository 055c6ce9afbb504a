"""The transformation model: a fully connected ReLU network whose output is
squashed into the decision-variable box, with hand-written reverse-mode
gradients and an Adam optimizer.

The output layer applies ``x = lb + sigmoid(z) * (ub - lb)``, so every output
lies strictly inside the bounds and no downstream clipping is ever needed.
Latent inputs are standardised by a fixed affine transform stored with the
parameters; this keeps the first layer well-scaled even when the latent
distribution is centred far from the origin (e.g. box midpoints of problems
with large-magnitude bounds) and is part of the model, not of the sampler.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NetworkParams",
    "AdamState",
    "init_network",
    "forward",
    "backward",
    "init_adam",
    "adam_step",
    "save_checkpoint",
    "load_checkpoint",
]


@dataclass
class NetworkParams:
    """Weights and biases of the transformation model.

    ``weights[l]`` has shape (layer_sizes[l+1], layer_sizes[l]); biases match
    the output side. ``input_offset``/``input_scale`` define the fixed input
    standardisation ``v' = (v - offset) / scale``.
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input_offset: np.ndarray
    input_scale: np.ndarray
    activation: str = "relu"

    def n_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            layer_sizes=self.layer_sizes,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            input_offset=self.input_offset.copy(),
            input_scale=self.input_scale.copy(),
            activation=self.activation,
        )


@dataclass
class AdamState:
    """First/second moment accumulators and hyperparameters of Adam."""

    m_weights: list[np.ndarray]
    v_weights: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_biases: list[np.ndarray]
    t: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_network(
    layer_sizes,
    seed,
    input_offset=None,
    input_scale=None,
) -> NetworkParams:
    """Symmetric scaled-uniform weight init (scale 1/sqrt(fan_in)), zero biases."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2:
        raise ValueError(f"need at least an input and an output layer, got {sizes}")
    if any(s < 1 for s in sizes):
        raise ValueError(f"all layer sizes must be positive, got {sizes}")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    k = sizes[0]
    offset = np.zeros(k) if input_offset is None else np.broadcast_to(
        np.asarray(input_offset, dtype=float), (k,)
    ).copy()
    scale = np.ones(k) if input_scale is None else np.broadcast_to(
        np.asarray(input_scale, dtype=float), (k,)
    ).copy()
    if np.any(scale <= 0.0):
        raise ValueError("input_scale must be strictly positive")
    return NetworkParams(
        layer_sizes=sizes,
        weights=weights,
        biases=biases,
        input_offset=offset,
        input_scale=scale,
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(params: NetworkParams, v, lb, ub):
    """Map latent vectors to decision vectors strictly inside (lb, ub).

    Accepts a single vector (shape (k,)) or a batch (shape (n, k)); a batch
    forward equals n independent single forwards. Returns ``(x, cache)``
    where the cache holds everything :func:`backward` needs.
    """
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    batch = v[None, :] if single else v
    if batch.ndim != 2 or batch.shape[1] != params.layer_sizes[0]:
        raise ValueError(
            f"latent input has shape {v.shape}, expected (..., {params.layer_sizes[0]})"
        )
    if not np.all(np.isfinite(batch)):
        raise ValueError("latent input contains non-finite values")
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)

    a = (batch - params.input_offset) / params.input_scale
    activations = [a]
    pre_acts = []
    n_layers = params.n_layers()
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T + b
        pre_acts.append(z)
        a = np.maximum(z, 0.0) if layer < n_layers - 1 else z
        activations.append(a)
    sig = _sigmoid(pre_acts[-1])
    x = lb + sig * (ub - lb)
    cache = {
        "activations": activations,
        "pre_acts": pre_acts,
        "sigmoid": sig,
        "span": ub - lb,
        "single": single,
    }
    return (x[0] if single else x), cache


def backward(params: NetworkParams, cache, upstream):
    """Accumulate dL/d(theta) from dL/dx by reverse-mode differentiation.

    ``upstream`` must match the shape of the forward output the cache came
    from. Returns ``(grad_weights, grad_biases)`` shaped like the parameters.
    The ReLU subgradient at 0 is taken as 0.
    """
    upstream = np.asarray(upstream, dtype=float)
    if cache["single"]:
        upstream = upstream[None, :]
    sig = cache["sigmoid"]
    if upstream.shape != sig.shape:
        raise ValueError(
            f"upstream gradient has shape {upstream.shape}, cached forward produced {sig.shape}"
        )
    # Through the output squashing x = lb + sigmoid(z) * span.
    delta = upstream * cache["span"] * sig * (1.0 - sig)
    grad_w = [None] * params.n_layers()
    grad_b = [None] * params.n_layers()
    for layer in range(params.n_layers() - 1, -1, -1):
        a_prev = cache["activations"][layer]
        grad_w[layer] = delta.T @ a_prev
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ params.weights[layer]) * (cache["pre_acts"][layer - 1] > 0.0)
    return grad_w, grad_b


def init_adam(
    params: NetworkParams,
    learning_rate: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    return AdamState(
        m_weights=[np.zeros_like(w) for w in params.weights],
        v_weights=[np.zeros_like(w) for w in params.weights],
        m_biases=[np.zeros_like(b) for b in params.biases],
        v_biases=[np.zeros_like(b) for b in params.biases],
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
    )


def adam_step(params: NetworkParams, grads, state: AdamState):
    """One Adam update with bias correction; returns new (params, state)."""
    grad_w, grad_b = grads
    for layer, (gw, gb) in enumerate(zip(grad_w, grad_b)):
        if not (np.all(np.isfinite(gw)) and np.all(np.isfinite(gb))):
            raise ValueError(f"non-finite gradient at layer {layer}")
        if gw.shape != params.weights[layer].shape or gb.shape != params.biases[layer].shape:
            raise ValueError(f"gradient shape mismatch at layer {layer}")
    t = state.t + 1
    b1, b2, lr, eps = state.beta1, state.beta2, state.learning_rate, state.eps
    corr1 = 1.0 - b1**t
    corr2 = 1.0 - b2**t

    def update(theta, g, m, v):
        m_new = b1 * m + (1.0 - b1) * g
        v_new = b2 * v + (1.0 - b2) * g**2
        theta_new = theta - lr * (m_new / corr1) / (np.sqrt(v_new / corr2) + eps)
        return theta_new, m_new, v_new

    new_params = params.copy()
    new_state = AdamState(
        m_weights=[], v_weights=[], m_biases=[], v_biases=[],
        t=t, learning_rate=lr, beta1=b1, beta2=b2, eps=eps,
    )
    for layer in range(params.n_layers()):
        w, mw, vw = update(
            params.weights[layer], grad_w[layer],
            state.m_weights[layer], state.v_weights[layer],
        )
        b, mb, vb = update(
            params.biases[layer], grad_b[layer],
            state.m_biases[layer], state.v_biases[layer],
        )
        new_params.weights[layer] = w
        new_params.biases[layer] = b
        new_state.m_weights.append(mw)
        new_state.v_weights.append(vw)
        new_state.m_biases.append(mb)
        new_state.v_biases.append(vb)
    return new_params, new_state


def save_checkpoint(path, params: NetworkParams, state: AdamState, seeds: dict) -> None:
    """Dump parameters, optimizer state and seed lineage to an .npz file.

    The round-trip through :func:`load_checkpoint` is exact (float64 arrays
    are stored in binary).
    """
    arrays = {}
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
        arrays[f"adam_mw{i}"] = state.m_weights[i]
        arrays[f"adam_vw{i}"] = state.v_weights[i]
        arrays[f"adam_mb{i}"] = state.m_biases[i]
        arrays[f"adam_vb{i}"] = state.v_biases[i]
    arrays["input_offset"] = params.input_offset
    arrays["input_scale"] = params.input_scale
    meta = {
        "layer_sizes": list(params.layer_sizes),
        "activation": params.activation,
        "adam": {
            "t": state.t,
            "learning_rate": state.learning_rate,
            "beta1": state.beta1,
            "beta2": state.beta2,
            "eps": state.eps,
        },
        "seeds": seeds,
    }
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    # Write through a handle so numpy never appends an extension to the path
    # (keeps temp-file-then-rename writes working).
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path):
    """Inverse of :func:`save_checkpoint`; returns (params, adam_state, seeds)."""
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        sizes = tuple(meta["layer_sizes"])
        n_layers = len(sizes) - 1
        params = NetworkParams(
            layer_sizes=sizes,
            weights=[data[f"w{i}"] for i in range(n_layers)],
            biases=[data[f"b{i}"] for i in range(n_layers)],
            input_offset=data["input_offset"],
            input_scale=data["input_scale"],
            activation=meta["activation"],
        )
        adam_meta = meta["adam"]
        state = AdamState(
            m_weights=[data[f"adam_mw{i}"] for i in range(n_layers)],
            v_weights=[data[f"adam_vw{i}"] for i in range(n_layers)],
            m_biases=[data[f"adam_mb{i}"] for i in range(n_layers)],
            v_biases=[data[f"adam_vb{i}"] for i in range(n_layers)],
            t=adam_meta["t"],
            learning_rate=adam_meta["learning_rate"],
            beta1=adam_meta["beta1"],
            beta2=adam_meta["beta2"],
            eps=adam_meta["eps"],
        )
    return params, state, meta["seeds"]
