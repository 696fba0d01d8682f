"""Minimal trainable network engine in plain numpy.

Implements exactly the layer set used by the checkout classifier: valid 3x3
convolution, batch norm, PReLU, max pooling, fully-connected layers, inverted
dropout, and softmax, each with analytic gradients. Tensors are numpy arrays,
float32 by default (float64 for gradient checking), always carrying a leading
batch axis internally.
"""

from __future__ import annotations

import json
import struct
from collections import OrderedDict

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidLabel, NumericalError, ShapeError

CHECKPOINT_MAGIC = b"ARCCKPT1"


def _batched(x: np.ndarray, sample_ndim: int) -> tuple[np.ndarray, bool]:
    if x.ndim == sample_ndim:
        return x[None], True
    if x.ndim == sample_ndim + 1:
        return x, False
    raise ShapeError(f"expected {sample_ndim}- or {sample_ndim + 1}-d input, got shape {x.shape}")


# ---------------------------------------------------------------------------
# Functional cores
# ---------------------------------------------------------------------------


def _im2col(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    # x: (N, C, H, W) -> (N, OH, OW, C*kh*kw)
    win = sliding_window_view(x, (kh, kw), axis=(2, 3))
    n, _, oh, ow = win.shape[:4]
    return np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(n, oh, ow, -1)


def _conv_fwd(x, kernels, bias):
    n_out, n_in, kh, kw = kernels.shape
    if x.shape[1] != n_in:
        raise ShapeError(f"conv expects {n_in} input channels, got {x.shape[1]}")
    if x.shape[2] < kh or x.shape[3] < kw:
        raise ShapeError("input smaller than kernel")
    cols = _im2col(x, kh, kw)
    wmat = kernels.reshape(n_out, -1)
    out = cols @ wmat.T + bias
    out = out.transpose(0, 3, 1, 2)
    return np.ascontiguousarray(out), (cols, x.shape, kernels.shape)


def _conv_bwd(grad_out, cache, kernels):
    cols, x_shape, k_shape = cache
    n_out, n_in, kh, kw = k_shape
    g = grad_out.transpose(0, 2, 3, 1)  # (N, OH, OW, n_out)
    grad_b = g.sum(axis=(0, 1, 2))
    grad_w = np.tensordot(g, cols, axes=([0, 1, 2], [0, 1, 2])).reshape(k_shape)
    grad_cols = g @ kernels.reshape(n_out, -1)
    n, oh, ow = g.shape[:3]
    gc = grad_cols.reshape(n, oh, ow, n_in, kh, kw)
    grad_x = np.zeros(x_shape, dtype=grad_out.dtype)
    for i in range(kh):
        for j in range(kw):
            grad_x[:, :, i : i + oh, j : j + ow] += gc[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    return grad_x, grad_w, grad_b


def _pool_fwd(x, k: int, s: int):
    if k != s:
        raise ShapeError("pooling window and stride must match")
    n, c, h, w = x.shape
    if k > h or k > w:
        raise ShapeError(f"pool window {k} exceeds input {h}x{w}")
    oh = (h - k) // s + 1
    ow = (w - k) // s + 1
    view = x[:, :, : oh * k, : ow * k].reshape(n, c, oh, k, ow, k)
    win = np.ascontiguousarray(view.transpose(0, 1, 2, 4, 3, 5)).reshape(n, c, oh, ow, k * k)
    idx = win.argmax(axis=-1)  # first max in row-major window order
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return out, idx


def _pool_bwd(grad_out, idx, x_shape, k: int, s: int):
    n, c, h, w = x_shape
    oh, ow = grad_out.shape[2], grad_out.shape[3]
    win = np.zeros((n, c, oh, ow, k * k), dtype=grad_out.dtype)
    np.put_along_axis(win, idx[..., None], grad_out[..., None], axis=-1)
    grad_x = np.zeros(x_shape, dtype=grad_out.dtype)
    block = win.reshape(n, c, oh, ow, k, k).transpose(0, 1, 2, 4, 3, 5)
    grad_x[:, :, : oh * k, : ow * k] = block.reshape(n, c, oh * k, ow * k)
    return grad_x


def _channel_shape(x: np.ndarray) -> tuple:
    # broadcastable shape putting the channel axis second
    return (1, x.shape[1]) + (1,) * (x.ndim - 2)


def _bn_fwd(x, gamma, beta, running_mean, running_var, eps, momentum, training):
    if x.shape[0] == 0:
        raise ShapeError("batch norm needs at least one sample")
    if x.shape[1] != gamma.shape[0]:
        raise ShapeError(f"batch norm expects {gamma.shape[0]} channels, got {x.shape[1]}")
    axes = (0,) + tuple(range(2, x.ndim))
    cs = _channel_shape(x)
    if training:
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        new_running_mean = momentum * running_mean + (1.0 - momentum) * mean
        new_running_var = momentum * running_var + (1.0 - momentum) * var
    else:
        mean, var = running_mean, running_var
        new_running_mean, new_running_var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean.reshape(cs)) * inv_std.reshape(cs)
    y = gamma.reshape(cs) * xhat + beta.reshape(cs)
    cache = (xhat, inv_std, axes, cs, training)
    return y, cache, new_running_mean, new_running_var


def _bn_bwd(grad_out, cache, gamma):
    xhat, inv_std, axes, cs, training = cache
    grad_gamma = (grad_out * xhat).sum(axis=axes)
    grad_beta = grad_out.sum(axis=axes)
    dxhat = grad_out * gamma.reshape(cs)
    if not training:
        return dxhat * inv_std.reshape(cs), grad_gamma, grad_beta
    m = xhat.size // xhat.shape[1]
    mean_dxhat = dxhat.mean(axis=axes).reshape(cs)
    mean_dxhat_xhat = (dxhat * xhat).mean(axis=axes).reshape(cs)
    grad_x = inv_std.reshape(cs) * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat)
    return grad_x, grad_gamma, grad_beta


def _prelu_fwd(x, alpha):
    if alpha.shape[0] not in (1, x.shape[1] if x.ndim > 1 else x.shape[0]):
        raise ShapeError(f"alpha count {alpha.shape[0]} does not match input channels")
    cs = _channel_shape(x) if alpha.shape[0] != 1 else (1,) * x.ndim
    a = alpha.reshape(cs)
    y = np.maximum(x, 0) + a * np.minimum(x, 0)
    return y, (x, cs)


def _prelu_bwd(grad_out, cache, alpha):
    x, cs = cache
    a = alpha.reshape(cs)
    grad_x = np.where(x > 0, grad_out, a * grad_out)
    neg = np.minimum(x, 0) * grad_out
    if alpha.shape[0] == 1:
        grad_alpha = np.array([neg.sum()], dtype=alpha.dtype)
    else:
        axes = (0,) + tuple(range(2, x.ndim))
        grad_alpha = neg.sum(axis=axes)
    return grad_x, grad_alpha


def _dropout_fwd(x, rate, training, rng):
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    if not training or rate == 0.0:
        return x, None
    if rng is None:
        raise ValueError("training-mode dropout needs an rng")
    keep = rng.random(x.shape) >= rate
    scale = 1.0 / (1.0 - rate)
    return x * keep * scale, (keep, scale)


def _dropout_bwd(grad_out, cache):
    if cache is None:
        return grad_out
    keep, scale = cache
    return grad_out * keep * scale


def _fc_fwd(x, weight, bias):
    if x.shape[-1] != weight.shape[1]:
        raise ShapeError(f"fc expects input size {weight.shape[1]}, got {x.shape[-1]}")
    return x @ weight.T + bias, x


def _fc_bwd(grad_out, cache, weight):
    x = cache
    grad_w = grad_out.T @ x
    grad_b = grad_out.sum(axis=0)
    grad_x = grad_out @ weight
    return grad_x, grad_w, grad_b


def softmax(z: np.ndarray) -> np.ndarray:
    """Max-shifted softmax along the last axis; rows sum to 1."""
    z = np.asarray(z)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs: np.ndarray, onehot: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood and its gradient w.r.t. the logits.

    ``probs`` must already be softmax outputs; the combined gradient is then
    exactly (probs - onehot) / batch. Probabilities are floored at 1e-12
    inside the log.
    """
    p, squeezed = _batched(np.asarray(probs), 1)
    y, _ = _batched(np.asarray(onehot), 1)
    if p.shape != y.shape:
        raise ShapeError(f"probs {p.shape} and labels {y.shape} differ")
    is_binary = ((y == 0) | (y == 1)).all()
    if not is_binary or not (y.sum(axis=-1) == 1).all():
        raise InvalidLabel("labels must be one-hot")
    losses = -(y * np.log(np.maximum(p, 1e-12))).sum(axis=-1)
    grad = (p - y) / p.shape[0]
    return float(losses.mean()), (grad[0] if squeezed else grad)


# ---------------------------------------------------------------------------
# Layers
# ---------------------------------------------------------------------------


class Layer:
    """Base layer: holds params/grads dicts; backward overwrites grads."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.stats: dict[str, np.ndarray] = {}  # saved but not trained
        self.decay_keys: frozenset[str] = frozenset()
        self._cache = None

    def forward(self, x, training: bool = False, rng=None):
        raise NotImplementedError

    def backward(self, grad_out):
        raise NotImplementedError

    def astype(self, dtype):
        for d in (self.params, self.grads, self.stats):
            for k in d:
                d[k] = d[k].astype(dtype)
        return self


class Conv2D(Layer):
    """Valid (unpadded) stride-1 cross-correlation with per-filter bias."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int = 3, dtype=np.float32):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.params["kernels"] = np.zeros((out_channels, in_channels, kernel_size, kernel_size), dtype)
        self.params["bias"] = np.zeros(out_channels, dtype)
        self.decay_keys = frozenset(("kernels", "bias"))

    def forward(self, x, training=False, rng=None):
        out, self._cache = _conv_fwd(x, self.params["kernels"], self.params["bias"])
        return out

    def backward(self, grad_out):
        grad_x, gw, gb = _conv_bwd(grad_out, self._cache, self.params["kernels"])
        self.grads["kernels"], self.grads["bias"] = gw, gb
        return grad_x


class MaxPool(Layer):
    def __init__(self, size: int):
        super().__init__()
        self.size = size
        self._x_shape = None

    def forward(self, x, training=False, rng=None):
        out, idx = _pool_fwd(x, self.size, self.size)
        self._cache = idx
        self._x_shape = x.shape
        return out

    def backward(self, grad_out):
        return _pool_bwd(grad_out, self._cache, self._x_shape, self.size, self.size)


class BatchNorm(Layer):
    """Per-channel batch normalization with running statistics."""

    def __init__(self, channels: int, eps: float = 1e-5, momentum: float = 0.9, dtype=np.float32):
        super().__init__()
        self.eps = eps
        self.momentum = momentum
        self.params["gamma"] = np.ones(channels, dtype)
        self.params["beta"] = np.zeros(channels, dtype)
        self.stats["running_mean"] = np.zeros(channels, dtype)
        self.stats["running_var"] = np.ones(channels, dtype)

    def forward(self, x, training=False, rng=None):
        y, self._cache, rm, rv = _bn_fwd(
            x,
            self.params["gamma"],
            self.params["beta"],
            self.stats["running_mean"],
            self.stats["running_var"],
            self.eps,
            self.momentum,
            training,
        )
        if training:
            self.stats["running_mean"] = rm.astype(x.dtype)
            self.stats["running_var"] = rv.astype(x.dtype)
        return y

    def backward(self, grad_out):
        grad_x, gg, gb = _bn_bwd(grad_out, self._cache, self.params["gamma"])
        self.grads["gamma"], self.grads["beta"] = gg, gb
        return grad_x


class PReLU(Layer):
    """max(0, x) + alpha * min(0, x); alpha per channel, or one shared value."""

    def __init__(self, channels: int = 1, init: float = 0.25, dtype=np.float32):
        super().__init__()
        self.params["alpha"] = np.full(channels, init, dtype)

    def forward(self, x, training=False, rng=None):
        y, self._cache = _prelu_fwd(x, self.params["alpha"])
        return y

    def backward(self, grad_out):
        grad_x, ga = _prelu_bwd(grad_out, self._cache, self.params["alpha"])
        self.grads["alpha"] = ga
        return grad_x


class Dropout(Layer):
    """Inverted dropout: inference is an identity map."""

    def __init__(self, rate: float = 0.1):
        super().__init__()
        self.rate = rate

    def forward(self, x, training=False, rng=None):
        y, self._cache = _dropout_fwd(x, self.rate, training, rng)
        return y

    def backward(self, grad_out):
        return _dropout_bwd(grad_out, self._cache)


class Flatten(Layer):
    """(N, C, H, W) -> (N, C*H*W), channel-row-column order."""

    def forward(self, x, training=False, rng=None):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out):
        return grad_out.reshape(self._cache)


class Dense(Layer):
    def __init__(self, in_features: int, out_features: int, dtype=np.float32):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.params["weight"] = np.zeros((out_features, in_features), dtype)
        self.params["bias"] = np.zeros(out_features, dtype)
        self.decay_keys = frozenset(("weight", "bias"))

    def forward(self, x, training=False, rng=None):
        y, self._cache = _fc_fwd(x, self.params["weight"], self.params["bias"])
        return y

    def backward(self, grad_out):
        grad_x, gw, gb = _fc_bwd(grad_out, self._cache, self.params["weight"])
        self.grads["weight"], self.grads["bias"] = gw, gb
        return grad_x


class Softmax(Layer):
    def forward(self, x, training=False, rng=None):
        y = softmax(x)
        self._cache = y
        return y

    def backward(self, grad_out):
        # full Jacobian; training normally bypasses this via the fused
        # cross-entropy gradient taken w.r.t. the logits
        y = self._cache
        return y * (grad_out - (grad_out * y).sum(axis=-1, keepdims=True))


# ---------------------------------------------------------------------------
# Spec-level functional wrappers
# ---------------------------------------------------------------------------


def conv2d_forward(x: np.ndarray, layer: Conv2D) -> np.ndarray:
    xb, squeezed = _batched(np.asarray(x), 3)
    out, _ = _conv_fwd(xb, layer.params["kernels"], layer.params["bias"])
    return out[0] if squeezed else out


def conv2d_backward(x: np.ndarray, layer: Conv2D, grad_out: np.ndarray):
    xb, squeezed = _batched(np.asarray(x), 3)
    gb, _ = _batched(np.asarray(grad_out), 3)
    _, cache = _conv_fwd(xb, layer.params["kernels"], layer.params["bias"])
    grad_x, gw, gbias = _conv_bwd(gb, cache, layer.params["kernels"])
    return (grad_x[0] if squeezed else grad_x), gw, gbias


def maxpool(x: np.ndarray, k: int, s: int):
    xb, squeezed = _batched(np.asarray(x), 3)
    out, idx = _pool_fwd(xb, k, s)
    return (out[0] if squeezed else out), (idx[0] if squeezed else idx)


def maxpool_backward(grad_out: np.ndarray, idx: np.ndarray, x_shape, k: int, s: int):
    gb, squeezed = _batched(np.asarray(grad_out), 3)
    ib, _ = _batched(np.asarray(idx), 3)
    shape = (1,) + tuple(x_shape) if len(x_shape) == 3 else tuple(x_shape)
    gx = _pool_bwd(gb, ib, shape, k, s)
    return gx[0] if squeezed else gx


def batchnorm_forward(x: np.ndarray, layer: BatchNorm, training: bool = True) -> np.ndarray:
    return layer.forward(np.asarray(x), training=training)


def prelu(x: np.ndarray, layer: PReLU) -> np.ndarray:
    y, _ = _prelu_fwd(np.asarray(x), layer.params["alpha"])
    return y


def dropout(x: np.ndarray, layer: Dropout, rng=None, training: bool = True) -> np.ndarray:
    y, _ = _dropout_fwd(np.asarray(x), layer.rate, training, rng)
    return y


def fc_forward(x: np.ndarray, layer: Dense) -> np.ndarray:
    y, _ = _fc_fwd(np.asarray(x), layer.params["weight"], layer.params["bias"])
    return y


# ---------------------------------------------------------------------------
# Initialization, network assembly, checkpoints
# ---------------------------------------------------------------------------


def he_init(layer: Layer, rng: np.random.Generator) -> Layer:
    """Gaussian weights with std sqrt(2 / fan-in); biases 0.1; PReLU alpha
    0.25; batch norm gamma 1, beta 0."""
    if isinstance(layer, Conv2D):
        k = layer.params["kernels"]
        fan_in = k.shape[1] * k.shape[2] * k.shape[3]
        layer.params["kernels"] = (rng.standard_normal(k.shape) * np.sqrt(2.0 / fan_in)).astype(k.dtype)
        layer.params["bias"] = np.full_like(layer.params["bias"], 0.1)
    elif isinstance(layer, Dense):
        w = layer.params["weight"]
        layer.params["weight"] = (rng.standard_normal(w.shape) * np.sqrt(2.0 / w.shape[1])).astype(w.dtype)
        layer.params["bias"] = np.full_like(layer.params["bias"], 0.1)
    elif isinstance(layer, PReLU):
        layer.params["alpha"] = np.full_like(layer.params["alpha"], 0.25)
    elif isinstance(layer, BatchNorm):
        layer.params["gamma"] = np.ones_like(layer.params["gamma"])
        layer.params["beta"] = np.zeros_like(layer.params["beta"])
        layer.stats["running_mean"] = np.zeros_like(layer.stats["running_mean"])
        layer.stats["running_var"] = np.ones_like(layer.stats["running_var"])
    return layer


class Network:
    """An ordered layer chain with a training/inference mode flag."""

    def __init__(self, layers: list[Layer], dtype=np.float32, check_finite: bool = True):
        self.layers = layers
        self.dtype = np.dtype(dtype)
        self.check_finite = check_finite
        self.training = False

    def train(self) -> "Network":
        self.training = True
        return self

    def eval(self) -> "Network":
        self.training = False
        return self

    def astype(self, dtype) -> "Network":
        self.dtype = np.dtype(dtype)
        for layer in self.layers:
            layer.astype(self.dtype)
        return self

    def forward(self, x: np.ndarray, rng=None) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        x, squeezed = _batched(x, 3) if x.ndim in (3, 4) else (x, False)
        if self.check_finite and not np.isfinite(x).all():
            raise NumericalError("non-finite network input")
        for layer in self.layers:
            x = layer.forward(x, training=self.training, rng=rng)
            if self.check_finite and not np.isfinite(x).all():
                raise NumericalError(f"non-finite output from {type(layer).__name__}")
        return x[0] if squeezed else x

    def forward_trace(self, x: np.ndarray, rng=None) -> list[tuple[str, tuple]]:
        """Forward pass recording (layer name, output shape) per layer."""
        x = np.asarray(x, dtype=self.dtype)
        x, _ = _batched(x, 3)
        trace = []
        for layer in self.layers:
            x = layer.forward(x, training=self.training, rng=rng)
            trace.append((type(layer).__name__, tuple(x.shape[1:])))
        return trace

    def backward_from_logits(self, grad_logits: np.ndarray) -> np.ndarray:
        """Backpropagate d(loss)/d(logits), skipping the trailing softmax."""
        layers = self.layers
        if layers and isinstance(layers[-1], Softmax):
            layers = layers[:-1]
        g = np.asarray(grad_logits, dtype=self.dtype)
        if g.ndim == 1:
            g = g[None]
        for layer in reversed(layers):
            g = layer.backward(g)
        return g

    def parameters(self) -> list[tuple[str, Layer, str, bool]]:
        """Trainable slots as (name, layer, key, weight_decay_applies)."""
        out = []
        for i, layer in enumerate(self.layers):
            for key in layer.params:
                out.append((f"layer{i}.{key}", layer, key, key in layer.decay_keys))
        return out

    def state_arrays(self) -> "OrderedDict[str, np.ndarray]":
        """All persistent arrays (params then running stats) in layer order."""
        out: OrderedDict[str, np.ndarray] = OrderedDict()
        for i, layer in enumerate(self.layers):
            for key, val in layer.params.items():
                out[f"layer{i}.{key}"] = val
            for key, val in layer.stats.items():
                out[f"layer{i}.{key}"] = val
        return out

    def load_state_arrays(self, arrays: dict) -> None:
        for i, layer in enumerate(self.layers):
            for key in layer.params:
                src = arrays[f"layer{i}.{key}"]
                layer.params[key] = np.asarray(src, dtype=self.dtype).reshape(layer.params[key].shape)
            for key in layer.stats:
                src = arrays[f"layer{i}.{key}"]
                layer.stats[key] = np.asarray(src, dtype=self.dtype).reshape(layer.stats[key].shape)

    def num_params(self) -> int:
        return sum(p.size for _, layer, key, _ in self.parameters() for p in (layer.params[key],))


def build_arc_network(num_classes: int = 100, rng: np.random.Generator | None = None, dtype=np.float32) -> Network:
    """The checkout classifier: two conv blocks then three dense layers.

    Conv(8)->BN->PReLU->Pool(4) -> Conv(8)->BN->PReLU->Pool(2) -> Flatten
    -> Dense(512)->PReLU->Dropout -> Dense(256)->PReLU->Dropout
    -> Dense(num_classes)->Softmax. For 150x150x3 inputs the flattened size
    is 8*17*17 = 2312.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    layers: list[Layer] = [
        Conv2D(3, 8, 3, dtype),
        BatchNorm(8, dtype=dtype),
        PReLU(8, dtype=dtype),
        MaxPool(4),
        Conv2D(8, 8, 3, dtype),
        BatchNorm(8, dtype=dtype),
        PReLU(8, dtype=dtype),
        MaxPool(2),
        Flatten(),
        Dense(2312, 512, dtype),
        PReLU(1, dtype=dtype),
        Dropout(0.1),
        Dense(512, 256, dtype),
        PReLU(1, dtype=dtype),
        Dropout(0.1),
        Dense(256, num_classes, dtype),
        Softmax(),
    ]
    for layer in layers:
        he_init(layer, rng)
    return Network(layers, dtype=dtype)


class Checkpoint:
    """On-disk container: a JSON metadata document plus the parameter arrays
    as little-endian float32 in declared order. Load then save is
    byte-identical."""

    def __init__(self, meta: dict, arrays: "OrderedDict[str, np.ndarray]"):
        self.meta = meta
        self.arrays = arrays

    def save(self, path) -> None:
        names = [a["name"] for a in self.meta["arrays"]]
        blob = json.dumps(self.meta, sort_keys=True, separators=(",", ":")).encode()
        with open(path, "wb") as fh:
            fh.write(CHECKPOINT_MAGIC)
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            for name in names:
                fh.write(np.ascontiguousarray(self.arrays[name], dtype="<f4").tobytes())

    @classmethod
    def load(cls, path) -> "Checkpoint":
        with open(path, "rb") as fh:
            magic = fh.read(len(CHECKPOINT_MAGIC))
            if magic != CHECKPOINT_MAGIC:
                raise ValueError(f"{path} is not a checkpoint file")
            (meta_len,) = struct.unpack("<I", fh.read(4))
            meta = json.loads(fh.read(meta_len))
            arrays: OrderedDict[str, np.ndarray] = OrderedDict()
            for spec in meta["arrays"]:
                shape = tuple(spec["shape"])
                count = int(np.prod(shape)) if shape else 1
                buf = fh.read(4 * count)
                arrays[spec["name"]] = np.frombuffer(buf, dtype="<f4").reshape(shape).copy()
        return cls(meta, arrays)


def checkpoint_from_network(network: Network, epoch: int = 0, seed: int = 0, metrics: dict | None = None) -> Checkpoint:
    arrays = network.state_arrays()
    meta = {
        "format": 1,
        "arch": "arc",
        "num_classes": int(network.layers[-2].out_features),
        "epoch": int(epoch),
        "seed": int(seed),
        "metrics": metrics or {},
        "arrays": [{"name": k, "shape": list(v.shape)} for k, v in arrays.items()],
    }
    return Checkpoint(meta, arrays)


def network_from_checkpoint(source, dtype=np.float32) -> tuple[Network, dict]:
    """Rebuild the classifier from a checkpoint path or object."""
    ckpt = source if isinstance(source, Checkpoint) else Checkpoint.load(source)
    net = build_arc_network(num_classes=ckpt.meta["num_classes"], dtype=dtype)
    net.load_state_arrays(ckpt.arrays)
    return net, ckpt.meta
