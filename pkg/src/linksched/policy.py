"""Dual-conditioned graph-convolutional scheduling policy.

The policy maps a nonnegative per-link dual vector to per-link transmission
probabilities.  Each layer applies a polynomial graph filter
``y = sum_k S^k x h_k`` (S the configured shift operator), per-feature
normalization over the node dimension, and a leaky rectifier; a per-node
linear map plus sigmoid produces the output.  Gradients of the augmented
Lagrangian with respect to every learnable array are computed in closed form
by reverse mode here — no autodiff framework is involved.

Parameter files are NumPy ``.npz`` archives with the field order::

    format_version, config,
    layer{i}_taps, layer{i}_gamma, layer{i}_beta,
    layer{i}_running_mean, layer{i}_running_var   (for i = 0..L-1),
    out_weight, out_bias
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .graphs import ConflictGraph, normalized_adjacency
from .scheduling import Requirements, Schedule

__all__ = [
    "OPERATOR_RAW",
    "OPERATOR_SYMMETRIC",
    "TRAIN",
    "EVAL",
    "ArchConfig",
    "LayerParams",
    "PolicyParameters",
    "LayerGrads",
    "PolicyGradients",
    "AdamState",
    "ForwardCache",
    "init_params",
    "shift_operator",
    "forward",
    "lagrangian_value_and_grad",
    "init_adam",
    "adam_step",
    "threshold",
    "save_params",
    "load_params",
]

OPERATOR_RAW = "raw"
OPERATOR_SYMMETRIC = "symmetric"
TRAIN = "train"
EVAL = "eval"

_PARAMS_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ArchConfig:
    """Architecture hyperparameters of the policy network."""

    layers: int = 3
    features: int = 256
    order: int = 3
    leaky_slope: float = 0.01
    operator: str = OPERATOR_SYMMETRIC
    norm_momentum: float = 0.1
    norm_epsilon: float = 1e-5

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")
        if self.features < 1:
            raise ValueError(f"features must be >= 1, got {self.features}")
        if self.order < 0:
            raise ValueError(f"order must be >= 0, got {self.order}")
        if not 0.0 < self.leaky_slope < 1.0:
            raise ValueError(f"leaky_slope must lie in (0, 1), got {self.leaky_slope}")
        if self.operator not in (OPERATOR_RAW, OPERATOR_SYMMETRIC):
            raise ValueError(f"unknown operator '{self.operator}'")
        if not 0.0 < self.norm_momentum <= 1.0:
            raise ValueError(f"norm_momentum must lie in (0, 1], got {self.norm_momentum}")
        if self.norm_epsilon <= 0.0:
            raise ValueError(f"norm_epsilon must be positive, got {self.norm_epsilon}")

    def layer_widths(self) -> list[tuple[int, int]]:
        widths = []
        f_in = 1
        for _ in range(self.layers):
            widths.append((f_in, self.features))
            f_in = self.features
        return widths


@dataclass
class LayerParams:
    """One layer: filter taps of shape (order+1, f_in, f_out) plus the
    per-feature normalization state."""

    taps: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray


@dataclass
class PolicyParameters:
    """All learnable arrays of the policy plus its architecture."""

    config: ArchConfig
    layers: list[LayerParams]
    out_weight: np.ndarray
    out_bias: np.ndarray  # shape (1,)

    def validate(self) -> None:
        cfg = self.config
        widths = cfg.layer_widths()
        if len(self.layers) != cfg.layers:
            raise ValueError(f"{len(self.layers)} layers for config with {cfg.layers}")
        for i, (layer, (f_in, f_out)) in enumerate(zip(self.layers, widths)):
            expected = (cfg.order + 1, f_in, f_out)
            if layer.taps.shape != expected:
                raise ValueError(
                    f"layer {i} taps shape {layer.taps.shape}, expected {expected}"
                )
            for name in ("gamma", "beta", "running_mean", "running_var"):
                arr = getattr(layer, name)
                if arr.shape != (f_out,):
                    raise ValueError(f"layer {i} {name} shape {arr.shape}, expected ({f_out},)")
            if np.any(layer.running_var < 0.0):
                raise ValueError(f"layer {i} running_var has negative entries")
        if self.out_weight.shape != (cfg.features,):
            raise ValueError(
                f"out_weight shape {self.out_weight.shape}, expected ({cfg.features},)"
            )
        if self.out_bias.shape != (1,):
            raise ValueError(f"out_bias shape {self.out_bias.shape}, expected (1,)")
        for arr in self._all_arrays():
            if not np.all(np.isfinite(arr)):
                raise ValueError("policy parameters contain non-finite values")

    def _all_arrays(self) -> list[np.ndarray]:
        arrays = []
        for layer in self.layers:
            arrays.extend(
                [layer.taps, layer.gamma, layer.beta, layer.running_mean, layer.running_var]
            )
        arrays.extend([self.out_weight, self.out_bias])
        return arrays

    def trainable_arrays(self) -> list[np.ndarray]:
        """Learnable arrays in a fixed order (running statistics excluded)."""
        arrays = []
        for layer in self.layers:
            arrays.extend([layer.taps, layer.gamma, layer.beta])
        arrays.extend([self.out_weight, self.out_bias])
        return arrays


@dataclass
class LayerGrads:
    taps: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray


@dataclass
class PolicyGradients:
    """Gradients shaped like the trainable part of :class:`PolicyParameters`."""

    layers: list[LayerGrads]
    out_weight: np.ndarray
    out_bias: np.ndarray

    def arrays(self) -> list[np.ndarray]:
        arrays = []
        for layer in self.layers:
            arrays.extend([layer.taps, layer.gamma, layer.beta])
        arrays.extend([self.out_weight, self.out_bias])
        return arrays


_INIT_OUT_BIAS = -2.0


def init_params(config: ArchConfig, rng: np.random.Generator) -> PolicyParameters:
    """Zero-mean uniform taps scaled by 1/sqrt(f_in * (order+1)); unit scale,
    zero offset, unit running variance.

    The output bias starts at -2 so initial outputs are small: with outputs
    near one half, links of conflict degree >= 2 sit beyond the success
    ramp's kink and the ascent signal vanishes there; starting low keeps the
    ramp unsaturated everywhere from the first update.
    """
    layers = []
    for f_in, f_out in config.layer_widths():
        bound = 1.0 / np.sqrt(f_in * (config.order + 1))
        layers.append(
            LayerParams(
                taps=rng.uniform(-bound, bound, size=(config.order + 1, f_in, f_out)),
                gamma=np.ones(f_out),
                beta=np.zeros(f_out),
                running_mean=np.zeros(f_out),
                running_var=np.ones(f_out),
            )
        )
    bound = 1.0 / np.sqrt(config.features)
    out_weight = rng.uniform(-bound, bound, size=config.features)
    return PolicyParameters(
        config=config,
        layers=layers,
        out_weight=out_weight,
        out_bias=np.array([_INIT_OUT_BIAS]),
    )


def shift_operator(graph: ConflictGraph, config: ArchConfig) -> np.ndarray:
    if config.operator == OPERATOR_RAW:
        return np.asarray(graph.adjacency, dtype=float)
    return normalized_adjacency(graph.adjacency)


@dataclass
class _LayerCache:
    powers: list[np.ndarray]  # S^k x_in for k = 0..order, each (K, f_in)
    mean: np.ndarray
    var: np.ndarray
    batch_stats: bool
    normalized: np.ndarray
    pre_act: np.ndarray
    activated: np.ndarray


@dataclass
class ForwardCache:
    """Intermediates of one forward pass, sufficient for reverse mode."""

    operator: np.ndarray
    phase: str
    layers: list[_LayerCache]
    hidden: np.ndarray
    outputs: np.ndarray


def forward(
    graph: ConflictGraph,
    lam,
    params: PolicyParameters,
    phase: str = EVAL,
) -> tuple[np.ndarray, ForwardCache]:
    """Evaluate the policy on a dual vector; outputs lie strictly in (0, 1).

    Train phase normalizes with the statistics of the current node batch
    (falling back to running statistics when K < 2, where a batch variance is
    undefined); eval phase always uses running statistics.  The pass is pure:
    running statistics are only changed by :func:`update_running_stats`.
    """
    if phase not in (TRAIN, EVAL):
        raise ValueError(f"unknown phase '{phase}'")
    lam = np.asarray(lam, dtype=float)
    k = graph.n_links
    if lam.shape != (k,):
        raise ValueError(f"dual vector shape {lam.shape} does not match K={k}")
    if not np.all(np.isfinite(lam)):
        raise ValueError("dual vector contains non-finite values")
    if np.any(lam < 0.0):
        raise ValueError("dual vector entries must be nonnegative")
    params.validate()

    cfg = params.config
    op = shift_operator(graph, cfg)
    x = lam[:, None]
    layer_caches = []
    for layer in params.layers:
        powers = [x]
        for _ in range(cfg.order):
            powers.append(op @ powers[-1])
        # One GEMM over the stacked powers: (K, (order+1)*f_in) @ ((order+1)*f_in, f_out)
        stacked = np.concatenate(powers, axis=1)
        y = stacked @ layer.taps.reshape(-1, layer.taps.shape[2])

        batch_stats = phase == TRAIN and k >= 2
        if batch_stats:
            mean = y.mean(axis=0)
            var = y.var(axis=0)
        else:
            mean = layer.running_mean
            var = layer.running_var
        normalized = (y - mean) / np.sqrt(var + cfg.norm_epsilon)
        pre_act = layer.gamma * normalized + layer.beta
        activated = np.where(pre_act > 0.0, pre_act, cfg.leaky_slope * pre_act)
        layer_caches.append(
            _LayerCache(
                powers=powers,
                mean=mean,
                var=var,
                batch_stats=batch_stats,
                normalized=normalized,
                pre_act=pre_act,
                activated=activated,
            )
        )
        x = activated

    logits = x @ params.out_weight + params.out_bias[0]
    outputs = 1.0 / (1.0 + np.exp(-logits))
    cache = ForwardCache(
        operator=op, phase=phase, layers=layer_caches, hidden=x, outputs=outputs
    )
    return outputs, cache


def update_running_stats(params: PolicyParameters, cache: ForwardCache) -> None:
    """Fold the cached batch statistics into the running statistics.

    Intended to be called by the training loop's single writer after each
    train-phase pass; the running variance uses the unbiased batch estimate.
    """
    mom = params.config.norm_momentum
    for layer, lc in zip(params.layers, cache.layers):
        if not lc.batch_stats:
            continue
        k = lc.normalized.shape[0]
        unbiased = lc.var * k / (k - 1)
        layer.running_mean = (1.0 - mom) * layer.running_mean + mom * lc.mean
        layer.running_var = (1.0 - mom) * layer.running_var + mom * unbiased


def lagrangian_value_and_grad(
    graph: ConflictGraph,
    lam,
    req: Requirements,
    params: PolicyParameters,
    update_norm_stats: bool = False,
) -> tuple[float, PolicyGradients]:
    """Augmented Lagrangian at the relaxed policy output and its exact
    gradient with respect to every trainable array.

    The value is ``phi^T [1 - A phi]_+ + lam^T (phi * [1 - A phi]_+ - delta)``
    with ``phi`` the train-phase forward output.  The ramp uses subgradient 0
    at its kink.
    """
    lam = np.asarray(lam, dtype=float)
    if req.delta.shape != (graph.n_links,):
        raise ValueError(
            f"requirements length {req.delta.shape} does not match K={graph.n_links}"
        )
    phi, cache = forward(graph, lam, params, phase=TRAIN)
    if update_norm_stats:
        update_running_stats(params, cache)

    adj = graph.adjacency
    margin = 1.0 - adj @ phi
    success = np.maximum(margin, 0.0)
    active = (margin > 0.0).astype(float)
    weight = 1.0 + lam
    value = float(phi @ success + lam @ (phi * success - req.delta))
    grad_phi = weight * success - adj @ (weight * phi * active)
    grads = _backprop(params, cache, grad_phi)
    return value, grads


def _backprop(
    params: PolicyParameters, cache: ForwardCache, grad_outputs: np.ndarray
) -> PolicyGradients:
    cfg = params.config
    op = cache.operator
    phi = cache.outputs

    d_logits = grad_outputs * phi * (1.0 - phi)
    grad_out_weight = cache.hidden.T @ d_logits
    grad_out_bias = np.array([d_logits.sum()])
    dx = np.outer(d_logits, params.out_weight)

    layer_grads: list[LayerGrads | None] = [None] * cfg.layers
    for idx in range(cfg.layers - 1, -1, -1):
        layer = params.layers[idx]
        lc = cache.layers[idx]

        dz = dx * np.where(lc.pre_act > 0.0, 1.0, cfg.leaky_slope)
        grad_gamma = (dz * lc.normalized).sum(axis=0)
        grad_beta = dz.sum(axis=0)
        d_norm = dz * layer.gamma
        inv_std = 1.0 / np.sqrt(lc.var + cfg.norm_epsilon)
        if lc.batch_stats:
            k = d_norm.shape[0]
            dy = (inv_std / k) * (
                k * d_norm
                - d_norm.sum(axis=0)
                - lc.normalized * (d_norm * lc.normalized).sum(axis=0)
            )
        else:
            dy = d_norm * inv_std

        order = cfg.order
        f_out = layer.taps.shape[2]
        stacked = np.concatenate(lc.powers, axis=1)
        grad_taps = (stacked.T @ dy).reshape(order + 1, -1, f_out)
        layer_grads[idx] = LayerGrads(taps=grad_taps, gamma=grad_gamma, beta=grad_beta)

        if idx > 0:
            # d x_prev = sum_k S^k (dy h_k^T), evaluated Horner-style.
            acc = dy @ layer.taps[order].T
            for kk in range(order - 1, -1, -1):
                acc = dy @ layer.taps[kk].T + op @ acc
            dx = acc

    return PolicyGradients(
        layers=[g for g in layer_grads if g is not None],
        out_weight=grad_out_weight,
        out_bias=grad_out_bias,
    )


@dataclass
class AdamState:
    """Moment estimates for every trainable array, in trainable order."""

    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def init_adam(
    params: PolicyParameters,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> AdamState:
    arrays = params.trainable_arrays()
    return AdamState(
        first_moment=[np.zeros_like(a) for a in arrays],
        second_moment=[np.zeros_like(a) for a in arrays],
        step_count=0,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )


def adam_step(
    params: PolicyParameters,
    grads: PolicyGradients,
    state: AdamState,
    lr: float,
) -> tuple[PolicyParameters, AdamState]:
    """One bias-corrected Adam update in the ascent direction; functional,
    returns fresh parameter and state objects."""
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    grad_arrays = grads.arrays()
    for g in grad_arrays:
        if not np.all(np.isfinite(g)):
            raise ValueError("gradients contain non-finite values")
    old_arrays = params.trainable_arrays()
    if len(grad_arrays) != len(old_arrays):
        raise ValueError("gradient structure does not match parameters")

    t = state.step_count + 1
    new_m, new_v, new_arrays = [], [], []
    for p, g, m, v in zip(old_arrays, grad_arrays, state.first_moment, state.second_moment):
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m1 = state.beta1 * m + (1.0 - state.beta1) * g
        v1 = state.beta2 * v + (1.0 - state.beta2) * g * g
        m_hat = m1 / (1.0 - state.beta1**t)
        v_hat = v1 / (1.0 - state.beta2**t)
        new_arrays.append(p + lr * m_hat / (np.sqrt(v_hat) + state.epsilon))
        new_m.append(m1)
        new_v.append(v1)

    it = iter(new_arrays)
    layers = []
    for layer in params.layers:
        layers.append(
            LayerParams(
                taps=next(it),
                gamma=next(it),
                beta=next(it),
                running_mean=layer.running_mean.copy(),
                running_var=layer.running_var.copy(),
            )
        )
    out_weight = next(it)
    out_bias = next(it)
    new_params = PolicyParameters(
        config=params.config, layers=layers, out_weight=out_weight, out_bias=out_bias
    )
    new_state = AdamState(
        first_moment=new_m,
        second_moment=new_v,
        step_count=t,
        beta1=state.beta1,
        beta2=state.beta2,
        epsilon=state.epsilon,
    )
    return new_params, new_state


def threshold(outputs) -> Schedule:
    """Binary schedule: link scheduled iff its output is >= 0.5."""
    vals = np.asarray(outputs, dtype=float)
    if np.any(vals < 0.0) or np.any(vals > 1.0):
        raise ValueError("outputs must lie in [0, 1]")
    return Schedule.binary((vals >= 0.5).astype(float))


def save_params(params: PolicyParameters, path) -> None:
    """Write parameters to a versioned .npz archive (bit-faithful float64)."""
    params.validate()
    path = Path(path)
    payload: dict[str, np.ndarray] = {
        "format_version": np.array([_PARAMS_FORMAT_VERSION]),
        "config": np.frombuffer(
            json.dumps(asdict(params.config)).encode("utf-8"), dtype=np.uint8
        ),
    }
    for i, layer in enumerate(params.layers):
        payload[f"layer{i}_taps"] = layer.taps
        payload[f"layer{i}_gamma"] = layer.gamma
        payload[f"layer{i}_beta"] = layer.beta
        payload[f"layer{i}_running_mean"] = layer.running_mean
        payload[f"layer{i}_running_var"] = layer.running_var
    payload["out_weight"] = params.out_weight
    payload["out_bias"] = params.out_bias
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_params(path, expected_config: ArchConfig | None = None) -> PolicyParameters:
    """Load a parameter archive; optionally reject architecture mismatches,
    naming every differing field."""
    path = Path(path)
    with np.load(path) as archive:
        version = int(archive["format_version"][0])
        if version != _PARAMS_FORMAT_VERSION:
            raise ValueError(
                f"{path}: unsupported parameter format version {version}"
            )
        config_dict = json.loads(bytes(archive["config"]).decode("utf-8"))
        config = ArchConfig(**config_dict)
        if expected_config is not None and config != expected_config:
            mismatches = [
                f"{key}: file={getattr(config, key)!r} expected={getattr(expected_config, key)!r}"
                for key in config_dict
                if getattr(config, key) != getattr(expected_config, key)
            ]
            raise ValueError(
                f"{path}: architecture mismatch ({'; '.join(mismatches)})"
            )
        layers = []
        for i in range(config.layers):
            layers.append(
                LayerParams(
                    taps=np.array(archive[f"layer{i}_taps"]),
                    gamma=np.array(archive[f"layer{i}_gamma"]),
                    beta=np.array(archive[f"layer{i}_beta"]),
                    running_mean=np.array(archive[f"layer{i}_running_mean"]),
                    running_var=np.array(archive[f"layer{i}_running_var"]),
                )
            )
        params = PolicyParameters(
            config=config,
            layers=layers,
            out_weight=np.array(archive["out_weight"]),
            out_bias=np.array(archive["out_bias"]),
        )
    try:
        params.validate()
    except ValueError as exc:
        raise ValueError(f"{path}: invalid parameter archive: {exc}") from exc
    return params
