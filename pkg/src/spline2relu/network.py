"""ReLU network data model: forward pass, exact extraction, serialization.

A network of width W and depth L is the map A_L o relu o A_{L-1} o ... o relu o A_0
from [0, 1] to R, where A_0 is W x 1, the hidden A_l are W x W, and A_L is 1 x W.

A "special" network reserves channel 0 as a source channel (carries x through
every hidden layer) and channel W-1 as a collation channel (accumulates partial
results and never feeds a computational node); both are exempt from ReLU.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import cpwl
from .errors import ParseError, ResourceError, StructureError

DEFAULT_NODE_BUDGET = 1 << 21


def param_count(width: int, depth: int) -> int:
    """Total number of weights and biases: W(W+1)L - (W-1)^2 + 2."""
    return width * (width + 1) * depth - (width - 1) ** 2 + 2


class AffineLayer:
    """One affine map y = weights @ x + bias with read-only arrays."""

    __slots__ = ("weights", "bias")

    def __init__(self, weights, bias):
        w = np.array(weights, dtype=float)
        b = np.array(bias, dtype=float)
        if w.ndim != 2 or b.ndim != 1 or b.size != w.shape[0]:
            raise StructureError("weights must be 2-d with one bias per row")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise StructureError("weights and bias must be finite")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    def __setattr__(self, name, value):
        raise AttributeError("AffineLayer objects are immutable")

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape


class ReluNetwork:
    """Validated layer chain; `width` is W, `depth` is the hidden-layer count L."""

    special = False

    def __init__(self, layers: Sequence[AffineLayer]):
        layers = tuple(layers)
        if len(layers) < 2:
            raise StructureError("need an input layer and an output layer")
        w = layers[0].shape[0]
        if layers[0].shape != (w, 1):
            raise StructureError("input layer must be W x 1")
        for lay in layers[1:-1]:
            if lay.shape != (w, w):
                raise StructureError("hidden layers must be W x W")
        if layers[-1].shape != (1, w):
            raise StructureError("output layer must be 1 x W")
        self._check_structure(layers, w)
        object.__setattr__(self, "layers", layers)

    def __setattr__(self, name, value):
        raise AttributeError("network objects are immutable")

    def _check_structure(self, layers, width):
        pass

    @property
    def width(self) -> int:
        return self.layers[0].shape[0]

    @property
    def depth(self) -> int:
        return len(self.layers) - 1

    @property
    def params(self) -> int:
        return param_count(self.width, self.depth)

    def _relu_mask(self) -> np.ndarray:
        return np.ones(self.width, dtype=bool)

    def forward(self, x):
        """Evaluate at scalar or 1-d array x."""
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        mask = self._relu_mask()
        state = self.layers[0].weights @ xa[None, :] + self.layers[0].bias[:, None]
        state[mask] = np.maximum(state[mask], 0.0)
        for lay in self.layers[1:-1]:
            state = lay.weights @ state + lay.bias[:, None]
            state[mask] = np.maximum(state[mask], 0.0)
        out = (self.layers[-1].weights @ state + self.layers[-1].bias[:, None])[0]
        return float(out[0]) if np.isscalar(x) or np.asarray(x).ndim == 0 else out

    def __repr__(self) -> str:
        kind = "SpecialNetwork" if self.special else "ReluNetwork"
        return f"{kind}(width={self.width}, depth={self.depth})"


class SpecialNetwork(ReluNetwork):
    """Network with ReLU-free source (channel 0) and collation (channel W-1) rails."""

    special = True

    def _check_structure(self, layers, width):
        if width < 4:
            raise StructureError("special networks need width >= 4")
        first, last = layers[0], layers[-1]
        if first.weights[0, 0] != 1.0 or first.weights[-1, 0] != 0.0:
            raise StructureError("input layer must seed the source channel with x only")
        if first.bias[0] != 0.0 or first.bias[-1] != 0.0:
            raise StructureError("source and collation biases must start at 0")
        e0 = np.zeros(width)
        e0[0] = 1.0
        for lay in layers[1:-1]:
            if not np.array_equal(lay.weights[0], e0):
                raise StructureError("hidden layers must copy the source channel")
            col = lay.weights[:, -1]
            if col[-1] != 1.0 or np.any(col[:-1] != 0.0):
                raise StructureError("collation channel must only accumulate into itself")
            if lay.bias[0] != 0.0:
                raise StructureError("source channel bias must stay 0")
        if last.weights[0, -1] != 1.0:
            raise StructureError("output layer must read the collation channel")

    def _relu_mask(self) -> np.ndarray:
        mask = np.ones(self.width, dtype=bool)
        mask[0] = False
        mask[-1] = False
        return mask


def _affine_channels(states, weights, bias):
    out = []
    for i in range(weights.shape[0]):
        nz = np.nonzero(weights[i])[0]
        out.append(cpwl.combine([states[j] for j in nz], weights[i, nz], bias[i]))
    return out


def extract_cpwl(net: ReluNetwork, node_budget: int = DEFAULT_NODE_BUDGET) -> cpwl.CPwL:
    """Exact symbolic function computed by the network on [0, 1].

    Propagates one CPwL per channel: affine layers are nodal combinations,
    ReLU inserts exact zero-crossing nodes (skipping exempt rails).
    """
    mask = net._relu_mask()

    def clamp(states):
        total = sum(s.breakpoints.size for s in states)
        if total > node_budget:
            raise ResourceError(f"extraction grew past {node_budget} nodes")
        return [cpwl.relu(s) if mask[i] else s for i, s in enumerate(states)]

    first = net.layers[0]
    states = [cpwl.line(first.weights[i, 0], first.bias[i]) for i in range(net.width)]
    states = clamp(states)
    for lay in net.layers[1:-1]:
        states = clamp(_affine_channels(states, lay.weights, lay.bias))
    last = net.layers[-1]
    return _affine_channels(states, last.weights, last.bias)[0]


def collation_courses(net: SpecialNetwork) -> list[cpwl.CPwL]:
    """Pre-ReLU collation-channel functions after each hidden layer 1..L-1."""
    mask = net._relu_mask()
    first = net.layers[0]
    states = [cpwl.line(first.weights[i, 0], first.bias[i]) for i in range(net.width)]
    states = [cpwl.relu(s) if mask[i] else s for i, s in enumerate(states)]
    courses = []
    for lay in net.layers[1:-1]:
        states = _affine_channels(states, lay.weights, lay.bias)
        courses.append(states[-1])
        states = [cpwl.relu(s) if mask[i] else s for i, s in enumerate(states)]
    return courses


def special_to_standard(net: SpecialNetwork) -> ReluNetwork:
    """Equivalent plain network on [0, 1].

    The source rail is nonnegative, so its ReLU is free.  The collation rail is
    lifted by the exact constant C_l = max(0, -min of its course at layer l),
    computed by partial extraction, and the total lift is removed at the output.
    """
    if not isinstance(net, SpecialNetwork):
        raise StructureError("expected a special network")
    lifts = [max(0.0, -float(c.values.min())) for c in collation_courses(net)]
    layers = [net.layers[0]]
    for lay, c in zip(net.layers[1:-1], lifts):
        bias = lay.bias.copy()
        bias[-1] += c
        layers.append(AffineLayer(lay.weights, bias))
    out = net.layers[-1]
    layers.append(AffineLayer(out.weights, out.bias - sum(lifts)))
    return ReluNetwork(layers)


def hat_net() -> ReluNetwork:
    """Width-2, depth-1 network computing the unit hat: 2(x)_+ - 4(x - 1/2)_+."""
    return ReluNetwork([
        AffineLayer([[1.0], [1.0]], [0.0, -0.5]),
        AffineLayer([[2.0, -4.0]], [0.0]),
    ])


def identity_net(depth: int = 1) -> ReluNetwork:
    """Width-2 network computing x on [0, 1] at the requested depth."""
    if depth < 1:
        raise StructureError("depth must be >= 1")
    layers = [AffineLayer([[1.0], [0.0]], [0.0, 0.0])]
    keep = AffineLayer([[1.0, 0.0], [0.0, 0.0]], [0.0, 0.0])
    layers.extend(keep for _ in range(depth - 1))
    layers.append(AffineLayer([[1.0, 0.0]], [0.0]))
    return ReluNetwork(layers)


def write_network(net: ReluNetwork, path) -> None:
    """Header 'W L kind', then per layer a dims line, weight rows, and the bias."""
    kind = "special" if net.special else "standard"
    with open(path, "w") as fh:
        fh.write(f"{net.width} {net.depth} {kind}\n")
        for lay in net.layers:
            r, c = lay.shape
            fh.write(f"{r} {c}\n")
            for row in lay.weights:
                fh.write(" ".join(f"{w:.17g}" for w in row) + "\n")
            fh.write(" ".join(f"{b:.17g}" for b in lay.bias) + "\n")


def read_network(path) -> ReluNetwork:
    """Read the write_network format; the special flag re-runs shape validation."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    pos = 0

    def next_line():
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            raise ParseError("unexpected end of file", line=max(1, len(lines)))
        pos += 1
        return lines[pos - 1], pos

    header, lineno = next_line()
    parts = header.split()
    if len(parts) != 3 or parts[2] not in ("special", "standard"):
        raise ParseError("expected 'W L special|standard'", line=lineno)
    try:
        width, depth = int(parts[0]), int(parts[1])
    except ValueError:
        raise ParseError("malformed width or depth", line=lineno) from None
    if width < 1 or depth < 1:
        raise ParseError("width and depth must be positive", line=lineno)

    def floats(text, lineno, count):
        vals = text.split()
        if len(vals) != count:
            raise ParseError(f"expected {count} numbers, found {len(vals)}", line=lineno)
        try:
            return [float(v) for v in vals]
        except ValueError:
            raise ParseError("malformed number", line=lineno) from None

    layers = []
    for k in range(depth + 1):
        dims, lineno = next_line()
        try:
            r, c = (int(t) for t in dims.split())
        except ValueError:
            raise ParseError("expected 'rows cols'", line=lineno) from None
        expect = (width, 1) if k == 0 else (1, width) if k == depth else (width, width)
        if (r, c) != expect:
            raise ParseError(f"layer {k} must be {expect[0]} x {expect[1]}", line=lineno)
        rows = []
        for _ in range(r):
            text, lineno = next_line()
            rows.append(floats(text, lineno, c))
        text, lineno = next_line()
        bias = floats(text, lineno, r)
        layers.append(AffineLayer(rows, bias))
    for i in range(pos, len(lines)):
        if lines[i].strip():
            raise ParseError("trailing content after final layer", line=i + 1)
    cls = SpecialNetwork if parts[2] == "special" else ReluNetwork
    try:
        return cls(layers)
    except StructureError as exc:
        raise ParseError(str(exc)) from exc
