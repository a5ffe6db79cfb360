"""Small dense networks used as teachers, TAs, and students."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from ._binio import FileFormatError, read_framed, write_framed
from .autodiff import Graph, ShapeError, Tensor

ACTIVATIONS = ("identity", "relu", "tanh")

_CKPT_MAGIC = b"KDLABNET"
_CKPT_VERSION = 1


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = "identity"

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError(f"layer dims must be positive, got {self.in_dim}x{self.out_dim}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


def mlp_spec(in_dim: int, hidden: list[int], out_dim: int, activation: str = "relu") -> list[LayerSpec]:
    """Layer specs for an MLP with the given hidden widths; final layer is identity."""
    dims = [in_dim, *hidden, out_dim]
    layers = [LayerSpec(dims[i], dims[i + 1], activation) for i in range(len(dims) - 2)]
    layers.append(LayerSpec(dims[-2], dims[-1], "identity"))
    return layers


class Network:
    """Ordered dense layers; holds weight and bias tensors per layer."""

    def __init__(self, spec: list[LayerSpec], weights: list[np.ndarray], biases: list[np.ndarray]):
        self.spec = list(spec)
        self.weights = [Tensor(w, requires_grad=True) for w in weights]
        self.biases = [Tensor(b, requires_grad=True) for b in biases]

    @property
    def in_dim(self) -> int:
        return self.spec[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.spec[-1].out_dim

    def parameters(self) -> list[Tensor]:
        params = []
        for w, b in zip(self.weights, self.biases):
            params.append(w)
            params.append(b)
        return params

    def param_count(self) -> int:
        return sum(s.in_dim * s.out_dim + s.out_dim for s in self.spec)

    def zero_grads(self):
        for p in self.parameters():
            p.zero_grad()

    def snapshot(self) -> list[np.ndarray]:
        """Copies of all parameter arrays, in layer order."""
        return [p.data.copy() for p in self.parameters()]

    def restore(self, arrays: list[np.ndarray]):
        for p, a in zip(self.parameters(), arrays):
            p.data[...] = a

    def clone(self) -> "Network":
        return Network(self.spec, [w.data.copy() for w in self.weights], [b.data.copy() for b in self.biases])


def _validate_spec(spec: list[LayerSpec]):
    if not spec:
        raise ValueError("network spec is empty")
    for i in range(len(spec) - 1):
        if spec[i].out_dim != spec[i + 1].in_dim:
            raise ValueError(
                f"layer {i} out_dim {spec[i].out_dim} != layer {i + 1} in_dim {spec[i + 1].in_dim}"
            )


def init_network(spec: list[LayerSpec], seed: int) -> Network:
    """Glorot-uniform weights (limit sqrt(6/(in+out))), zero biases; deterministic in seed."""
    _validate_spec(spec)
    rng = np.random.Generator(np.random.PCG64(seed))
    weights, biases = [], []
    for layer in spec:
        limit = np.sqrt(6.0 / (layer.in_dim + layer.out_dim))
        weights.append(rng.uniform(-limit, limit, size=(layer.in_dim, layer.out_dim)))
        biases.append(np.zeros(layer.out_dim))
    return Network(spec, weights, biases)


def forward(g: Graph, net: Network, batch: Tensor) -> Tensor:
    """Logits for a batch, differentiable w.r.t. the network parameters."""
    if batch.data.ndim != 2 or batch.data.shape[1] != net.in_dim:
        raise ShapeError(f"batch shape {batch.data.shape} does not match input width {net.in_dim}")
    h = batch
    for layer, w, b in zip(net.spec, net.weights, net.biases):
        h = g.add(g.matmul(h, w), b)
        if layer.activation == "relu":
            h = g.relu(h)
        elif layer.activation == "tanh":
            h = g.tanh(h)
    return h


def predict(net: Network, x: np.ndarray) -> np.ndarray:
    """Forward pass on raw arrays, no graph; for evaluation and reporting."""
    h = np.ascontiguousarray(x, dtype=np.float64)
    for layer, w, b in zip(net.spec, net.weights, net.biases):
        h = K.bias_add(K.matmul(h, w.data), b.data)
        if layer.activation == "relu":
            h = K.relu(h)
        elif layer.activation == "tanh":
            h = K.tanh(h)
    return h


class TeacherSource:
    """Frozen teacher: either a network or a tabulated input -> output map.

    Tabulated teachers look rows up by exact value and must cover every
    training input; they model a sampled function acting as the teacher.
    """

    def __init__(self, kind: str, network: Network | None = None,
                 table_inputs: np.ndarray | None = None, table_outputs: np.ndarray | None = None):
        if kind not in ("network", "tabulated"):
            raise ValueError(f"unknown teacher kind {kind!r}")
        self.kind = kind
        self.network = network
        if kind == "tabulated":
            outs = np.asarray(table_outputs, dtype=np.float64)
            if outs.ndim == 1:
                outs = outs[:, None]
            self._table = {row.tobytes(): outs[i] for i, row in
                           enumerate(np.ascontiguousarray(table_inputs, dtype=np.float64))}
            self._width = outs.shape[1]

    @staticmethod
    def from_network(net: Network) -> "TeacherSource":
        return TeacherSource("network", network=net)

    @staticmethod
    def from_table(inputs: np.ndarray, outputs: np.ndarray) -> "TeacherSource":
        return TeacherSource("tabulated", table_inputs=inputs, table_outputs=outputs)

    def logits(self, batch: np.ndarray) -> np.ndarray:
        """Teacher outputs for a batch, as a constant (non-differentiable) array."""
        batch = np.ascontiguousarray(batch, dtype=np.float64)
        if self.kind == "network":
            if batch.shape[1] != self.network.in_dim:
                raise ShapeError(
                    f"batch width {batch.shape[1]} does not match teacher input {self.network.in_dim}"
                )
            return predict(self.network, batch)
        out = np.empty((batch.shape[0], self._width))
        for i, row in enumerate(batch):
            key = row.tobytes()
            if key not in self._table:
                raise KeyError(f"tabulated teacher has no entry for batch row {i}")
            out[i] = self._table[key]
        return out


def teacher_logits(src: TeacherSource, batch: np.ndarray) -> Tensor:
    """Teacher outputs wrapped as a constant tensor (never receives gradients)."""
    return Tensor(src.logits(batch))


_ACT_CODE = {name: i for i, name in enumerate(ACTIVATIONS)}


def save_network(net: Network, path):
    """Versioned binary checkpoint; round-trips parameters bit-exactly."""
    parts = [struct.pack("<I", len(net.spec))]
    for layer in net.spec:
        parts.append(struct.pack("<IIB", layer.in_dim, layer.out_dim, _ACT_CODE[layer.activation]))
    for w, b in zip(net.weights, net.biases):
        parts.append(w.data.astype("<f8").tobytes())
        parts.append(b.data.astype("<f8").tobytes())
    write_framed(path, _CKPT_MAGIC, _CKPT_VERSION, b"".join(parts))


def load_network(path) -> Network:
    payload = read_framed(path, _CKPT_MAGIC, _CKPT_VERSION)
    try:
        (n_layers,) = struct.unpack_from("<I", payload, 0)
        off = 4
        spec = []
        for _ in range(n_layers):
            in_dim, out_dim, act = struct.unpack_from("<IIB", payload, off)
            off += 9
            spec.append(LayerSpec(in_dim, out_dim, ACTIVATIONS[act]))
        weights, biases = [], []
        for layer in spec:
            n = layer.in_dim * layer.out_dim
            w = np.frombuffer(payload, dtype="<f8", count=n, offset=off).reshape(layer.in_dim, layer.out_dim)
            off += 8 * n
            b = np.frombuffer(payload, dtype="<f8", count=layer.out_dim, offset=off)
            off += 8 * layer.out_dim
            weights.append(w.copy())
            biases.append(b.copy())
        if off != len(payload):
            raise FileFormatError(f"{path}: {len(payload) - off} trailing payload bytes")
    except (struct.error, ValueError, IndexError) as e:
        raise FileFormatError(f"{path}: malformed checkpoint payload: {e}") from e
    return Network(spec, weights, biases)
