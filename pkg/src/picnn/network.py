"""1D CNN + MLP trial functions, generic over plain or jet payloads.

The experiment architecture treats the ambient coordinates (x,y,z) as a
length-3, single-channel sequence, applies L one-sided stride-one conv layers
of width c, average-pools over the spatial axis, and feeds the c features to
a small MLP with squared-GeLU activations and a final affine output.

The same forward code runs with float/ndarray payloads (evaluation, metrics)
and with tape Tensors (training); Jet2 payloads ride through all linear maps
componentwise, so second chart derivatives of the network come out exactly.
"""
from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field

import numpy as np

from .jets import Jet2, jet_gelu, jet_gelu_sq, jet_relu, jet_requ
from .tape import Tensor

__all__ = [
    "ConvActivation", "MlpActivation", "ConvSpec", "MlpSpec", "NetworkSpec",
    "LayoutSlice", "NetworkParams", "build_layout", "init", "forward",
    "SingleChannelSpec", "single_channel_forward", "downsample",
    "conv1d_onesided", "save_params", "load_params",
]

INPUT_LEN = 3  # ambient coordinates reshaped to a 1-D sequence


class ConvActivation(enum.Enum):
    RELU = "relu"
    GELU = "gelu"


class MlpActivation(enum.Enum):
    REQU = "requ"
    GELU2 = "gelu2"


@dataclass(frozen=True)
class ConvSpec:
    layers: int = 3
    channels: int = 56
    kernel_size: int = 3
    activation: ConvActivation = ConvActivation.GELU

    def __post_init__(self):
        if self.layers < 1 or self.channels < 1 or self.kernel_size < 1:
            raise ValueError("conv spec counts must be >= 1")


@dataclass(frozen=True)
class MlpSpec:
    widths: tuple = (24, 8)
    activation: MlpActivation = MlpActivation.GELU2

    def __post_init__(self):
        if not self.widths:
            raise ValueError("mlp needs at least one hidden width")


@dataclass(frozen=True)
class NetworkSpec:
    conv: ConvSpec = ConvSpec()
    mlp: MlpSpec = MlpSpec()


@dataclass(frozen=True)
class LayoutSlice:
    name: str
    shape: tuple
    offset: int

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


def build_layout(spec: NetworkSpec, input_len: int = INPUT_LEN) -> tuple[LayoutSlice, ...]:
    s = spec.conv.kernel_size
    c = spec.conv.channels
    slices = []
    off = 0

    def add(name, shape):
        nonlocal off
        slices.append(LayoutSlice(name, shape, off))
        off += int(np.prod(shape))

    j_in = 1
    for ell in range(spec.conv.layers):
        add(f"conv{ell}.w", (s, c, j_in))
        add(f"conv{ell}.b", (c,))
        j_in = c
    width_in = c
    for i, w in enumerate(spec.mlp.widths):
        add(f"dense{i}.w", (w, width_in))
        add(f"dense{i}.b", (w,))
        width_in = w
    add("out.w", (1, width_in))
    add("out.b", (1,))
    return tuple(slices)


@dataclass
class NetworkParams:
    flat: np.ndarray
    layout: tuple

    def __post_init__(self):
        total = sum(sl.size for sl in self.layout)
        if self.flat.size != total:
            raise ValueError(f"flat length {self.flat.size} != layout total {total}")

    def slices(self):
        """Views of the flat vector reshaped per layout entry."""
        return [self.flat[sl.offset: sl.offset + sl.size].reshape(sl.shape)
                for sl in self.layout]


def init(spec: NetworkSpec, rng: np.random.Generator) -> NetworkParams:
    """Glorot-uniform weights, zero biases."""
    layout = build_layout(spec)
    flat = np.zeros(sum(sl.size for sl in layout))
    for sl in layout:
        if sl.name.endswith(".b"):
            continue
        if len(sl.shape) == 3:  # conv filter (s, J', J)
            s, jp, j = sl.shape
            fan_in, fan_out = s * j, s * jp
        else:  # dense (out, in)
            fan_out, fan_in = sl.shape
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        flat[sl.offset: sl.offset + sl.size] = rng.uniform(-bound, bound, size=sl.size)
    return NetworkParams(flat, layout)


# ---------------------------------------------------------------------------
# forward pass


def _is_jet(x):
    return isinstance(x, Jet2)


def _linmap(x, fn):
    return x.map_linear(fn) if _is_jet(x) else fn(x)


def _conv_activation(act: ConvActivation):
    if act is ConvActivation.GELU:
        return jet_gelu
    return jet_relu


def _mlp_activation(act: MlpActivation):
    if act is MlpActivation.GELU2:
        return jet_gelu_sq
    return jet_requ


def _apply_act(x, jet_fn):
    if _is_jet(x):
        return jet_fn(x)
    # plain payloads are the val channel of the corresponding jet computation
    from .jets import jet_const
    return jet_fn(jet_const(x)).val


def forward(params: NetworkParams | list, spec: NetworkSpec, inputs):
    """Evaluate the network on a length-3 input sequence.

    `inputs` is a list of 3 payloads (floats, (B,) arrays, Tensors, or Jet2
    of those). `params` is a NetworkParams or a pre-unpacked list of per-slice
    arrays/Tensors matching build_layout(spec). Returns a scalar payload
    (shape (B,) for batched arrays).
    """
    if isinstance(params, NetworkParams):
        slices = params.slices()
    else:
        slices = list(params)
    expected = build_layout(spec)
    if len(slices) != len(expected):
        raise ValueError("parameter slices do not match the spec layout")

    conv_act = _conv_activation(spec.conv.activation)
    mlp_act = _mlp_activation(spec.mlp.activation)
    s = spec.conv.kernel_size
    D = INPUT_LEN

    # promote inputs to (B,1) channel columns
    def to_col(v):
        return _linmap(v, lambda a: a.reshape(-1, 1) if hasattr(a, "reshape") else np.reshape(a, (-1, 1)))

    feats = [to_col(v) for v in inputs]

    idx = 0
    for ell in range(spec.conv.layers):
        w, b = slices[idx], slices[idx + 1]
        idx += 2
        wk = [w[k] if isinstance(w, np.ndarray) else None for k in range(s)]
        if wk[0] is None:  # Tensor filter: index via matmul-free slicing
            wk = _tensor_filter_taps(w, s)
        new = []
        for i in range(D):
            acc = None
            for k in range(s):
                if i + k >= D:
                    break
                term = _linmap(feats[i + k], lambda a, Wk=wk[k]: a @ _T(Wk))
                acc = term if acc is None else acc + term
            acc = _add_bias(acc, b)
            new.append(_apply_act(acc, conv_act))
        feats = new

    pooled = feats[0]
    for f in feats[1:]:
        pooled = pooled + f
    h = pooled * (1.0 / D)

    for i in range(len(spec.mlp.widths)):
        w, b = slices[idx], slices[idx + 1]
        idx += 2
        h = _linmap(h, lambda a, W=w: a @ _T(W))
        h = _add_bias(h, b)
        h = _apply_act(h, mlp_act)

    w, b = slices[idx], slices[idx + 1]
    out = _linmap(h, lambda a, W=w: a @ _T(W))
    out = _add_bias(out, b)
    return _linmap(out, lambda a: a.reshape(-1) if hasattr(a, "reshape") else np.reshape(a, (-1,)))


def _T(W):
    return W.t() if isinstance(W, Tensor) else W.T


def _add_bias(x, b):
    if _is_jet(x):
        return Jet2(x.val + b, x.g0, x.g1, x.h00, x.h01, x.h11)
    return x + b


def _tensor_filter_taps(w: Tensor, s: int):
    # split a (s, J', J) Tensor filter into s (J', J) tap Tensors
    taps = []
    for k in range(s):
        pick = np.zeros((1, s))
        pick[0, k] = 1.0
        jp, j = w.value.shape[1], w.value.shape[2]
        flatw = w.reshape(s, jp * j)
        taps.append((pick @ flatw).reshape(jp, j))
    return taps


# ---------------------------------------------------------------------------
# single-channel expanding-width architecture


@dataclass(frozen=True)
class SingleChannelSpec:
    depth: int
    filter_size: int
    downsample_stride: int

    def __post_init__(self):
        if self.filter_size < 3:
            raise ValueError("filter size must be >= 3")

    def widths(self, d0: int) -> list[int]:
        ws = [d0]
        for _ in range(self.depth):
            ws.append(ws[-1] + self.filter_size - 1)
        return ws


def _expanding_toeplitz(w: np.ndarray, d_in: int) -> np.ndarray:
    """T in R^{(d_in+S-1) x d_in} with T[i,j] = w[i-j]."""
    S = w.size
    d_out = d_in + S - 1
    T = np.zeros((d_out, d_in))
    for j in range(d_in):
        T[j: j + S, j] = w
    return T


def downsample(x: np.ndarray, d: int) -> np.ndarray:
    """D(x)_i = x_{i*d}, 1-based indexing."""
    return np.asarray(x)[d - 1:: d]


def single_channel_forward(spec: SingleChannelSpec, filters, biases, x,
                           apply_downsample: bool = True) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if len(filters) != spec.depth or len(biases) != spec.depth:
        raise ValueError("need one filter and bias per layer")
    h = x
    for w, b in zip(filters, biases):
        w = np.asarray(w, dtype=float)
        if w.size != spec.filter_size:
            raise ValueError("filter support size mismatch")
        T = _expanding_toeplitz(w, h.size)
        h = np.maximum(T @ h - np.asarray(b, dtype=float), 0.0)
    if apply_downsample:
        return downsample(h, spec.downsample_stride)
    return h


# ---------------------------------------------------------------------------
# multichannel one-sided convolution on a fixed spatial width (numpy only)


def conv1d_onesided(x: np.ndarray, w: np.ndarray, b=None) -> np.ndarray:
    """y[i, j'] = sum_{k,j} w[k, j', j] * x[i+k, j]  (zero beyond the end)."""
    D, J = x.shape
    s, Jp, Jw = w.shape
    if Jw != J:
        raise ValueError("channel mismatch")
    y = np.zeros((D, Jp))
    for k in range(s):
        if k >= D:
            break
        y[: D - k] += x[k:] @ w[k].T
    if b is not None:
        y += np.asarray(b)
    return y


# ---------------------------------------------------------------------------
# checkpoints: layout-hash header + little-endian float64 payload


def _layout_hash(layout) -> bytes:
    desc = ";".join(f"{sl.name}:{sl.shape}:{sl.offset}" for sl in layout)
    return hashlib.sha256(desc.encode()).digest()


def save_params(params: NetworkParams, path):
    with open(path, "wb") as fh:
        fh.write(_layout_hash(params.layout))
        fh.write(params.flat.astype("<f8").tobytes())


def load_params(path, spec: NetworkSpec) -> NetworkParams:
    layout = build_layout(spec)
    with open(path, "rb") as fh:
        head = fh.read(32)
        if head != _layout_hash(layout):
            raise ValueError("checkpoint layout hash does not match the spec")
        flat = np.frombuffer(fh.read(), dtype="<f8").astype(float)
    return NetworkParams(flat, layout)
