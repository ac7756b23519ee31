"""Assembly operations that build bigger networks out of exact smaller ones.

All constructions here are weight-level: the returned networks compute the
stated combination exactly (up to float rounding), which the test suite checks
against the symbolic CPwL oracle.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import StructureError
from .network import AffineLayer, ReluNetwork, SpecialNetwork


def _common_width(nets) -> int:
    widths = {n.width for n in nets}
    if len(widths) != 1:
        raise StructureError("all networks must share one width")
    return widths.pop()


def zero_special(width: int, depth: int) -> SpecialNetwork:
    """Special network of the given size computing the zero function."""
    if depth < 1:
        raise StructureError("depth must be >= 1")
    first = np.zeros((width, 1))
    first[0, 0] = 1.0
    mid = np.zeros((width, width))
    mid[0, 0] = 1.0
    mid[-1, -1] = 1.0
    out = np.zeros((1, width))
    out[0, -1] = 1.0
    layers = [AffineLayer(first, np.zeros(width))]
    layers.extend(AffineLayer(mid, np.zeros(width)) for _ in range(depth - 1))
    layers.append(AffineLayer(out, [0.0]))
    return SpecialNetwork(layers)


def concat_sum(first: SpecialNetwork, second: SpecialNetwork) -> SpecialNetwork:
    """Special network of depth L1 + L2 computing first(x) + second(x).

    The interface layer seeds the second network's computational nodes from the
    source rail and drops the first network's output into the collation rail.
    """
    if not (first.special and second.special):
        raise StructureError("concat_sum needs special networks")
    width = _common_width([first, second])
    out1 = first.layers[-1]
    in2 = second.layers[0]
    seam_w = np.zeros((width, width))
    seam_w[1:-1, 0] = in2.weights[1:-1, 0]
    seam_w[0, 0] = 1.0
    seam_w[-1, :] = out1.weights[0]
    seam_b = in2.bias.copy()
    seam_b[-1] = out1.bias[0]
    layers = list(first.layers[:-1])
    layers.append(AffineLayer(seam_w, seam_b))
    layers.extend(second.layers[1:])
    return SpecialNetwork(layers)


def embed_deeper(net: SpecialNetwork, depth: int) -> SpecialNetwork:
    """Pad a special network with a zero summand so its depth becomes `depth`."""
    if depth < net.depth:
        raise StructureError("target depth is smaller than the current depth")
    if depth == net.depth:
        return net
    return concat_sum(net, zero_special(net.width, depth - net.depth))


def compose_nets(inner: ReluNetwork, outer: ReluNetwork) -> ReluNetwork:
    """Depth L1 + L2 network computing outer(inner(x)) with a fused interface."""
    width = _common_width([inner, outer])
    out1 = inner.layers[-1]
    in2 = outer.layers[0]
    seam_w = in2.weights @ out1.weights
    seam_b = in2.weights[:, 0] * out1.bias[0] + in2.bias
    layers = list(inner.layers[:-1])
    layers.append(AffineLayer(seam_w, seam_b))
    layers.extend(outer.layers[1:])
    return ReluNetwork(layers)


def _weights_vector(nets, weights) -> np.ndarray:
    if weights is None:
        return np.ones(len(nets))
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(nets),):
        raise StructureError("one weight per network required")
    return w


def stack_sum(nets: Sequence[ReluNetwork], weights=None) -> SpecialNetwork:
    """Width W+2 special network of depth sum(L_i) computing sum_i w_i f_i(x).

    The networks run one after another on the computational channels; each
    finished output is folded into the collation rail at the next seam.
    """
    if not nets:
        raise StructureError("need at least one network")
    w = _common_width(nets)
    coeff = _weights_vector(nets, weights)
    width = w + 2
    comp = slice(1, w + 1)

    first = np.zeros((width, 1))
    first[0, 0] = 1.0
    first[comp, 0] = nets[0].layers[0].weights[:, 0]
    fb = np.zeros(width)
    fb[comp] = nets[0].layers[0].bias
    layers = [AffineLayer(first, fb)]

    def mid_template():
        m = np.zeros((width, width))
        m[0, 0] = 1.0
        m[-1, -1] = 1.0
        return m, np.zeros(width)

    for i, net in enumerate(nets):
        for lay in net.layers[1:-1]:
            m, b = mid_template()
            m[comp, comp] = lay.weights
            b[comp] = lay.bias
            layers.append(AffineLayer(m, b))
        out = net.layers[-1]
        if i + 1 < len(nets):
            nxt = nets[i + 1].layers[0]
            m, b = mid_template()
            m[comp, 0] = nxt.weights[:, 0]
            m[-1, comp] = coeff[i] * out.weights[0]
            b[comp] = nxt.bias
            b[-1] = coeff[i] * out.bias[0]
            layers.append(AffineLayer(m, b))
        else:
            final = np.zeros((1, width))
            final[0, comp] = coeff[i] * out.weights[0]
            final[0, -1] = 1.0
            layers.append(AffineLayer(final, [coeff[i] * out.bias[0]]))
    return SpecialNetwork(layers)


def stack_relu_sum(nets: Sequence[ReluNetwork], weights=None) -> SpecialNetwork:
    """Width W+2 special network of depth k + sum(L_i) computing sum_i w_i (f_i(x))_+.

    Each network gets one extra layer whose first computational node holds its
    pre-activation output, so the rail collects the rectified value.
    """
    if not nets:
        raise StructureError("need at least one network")
    w = _common_width(nets)
    coeff = _weights_vector(nets, weights)
    width = w + 2
    comp = slice(1, w + 1)

    first = np.zeros((width, 1))
    first[0, 0] = 1.0
    first[comp, 0] = nets[0].layers[0].weights[:, 0]
    fb = np.zeros(width)
    fb[comp] = nets[0].layers[0].bias
    layers = [AffineLayer(first, fb)]

    def mid_template():
        m = np.zeros((width, width))
        m[0, 0] = 1.0
        m[-1, -1] = 1.0
        return m, np.zeros(width)

    for i, net in enumerate(nets):
        for lay in net.layers[1:-1]:
            m, b = mid_template()
            m[comp, comp] = lay.weights
            b[comp] = lay.bias
            layers.append(AffineLayer(m, b))
        out = net.layers[-1]
        m, b = mid_template()
        m[1, comp] = out.weights[0]
        b[1] = out.bias[0]
        layers.append(AffineLayer(m, b))
        if i + 1 < len(nets):
            nxt = nets[i + 1].layers[0]
            m, b = mid_template()
            m[comp, 0] = nxt.weights[:, 0]
            m[-1, 1] = coeff[i]
            b[comp] = nxt.bias
            layers.append(AffineLayer(m, b))
        else:
            final = np.zeros((1, width))
            final[0, 1] = coeff[i]
            final[0, -1] = 1.0
            layers.append(AffineLayer(final, [0.0]))
    return SpecialNetwork(layers)


def iterate_sum(net: ReluNetwork, coeffs: Sequence[float]) -> SpecialNetwork:
    """Width W+2 special network of depth m*L computing sum_i coeffs[i] f^(i)(x).

    f^(i) is the i-fold self-composition; copies are chained with fused seams
    and each iterate is folded into the collation rail as it completes.
    """
    coeff = np.asarray(coeffs, dtype=float)
    if coeff.ndim != 1 or coeff.size == 0:
        raise StructureError("need at least one coefficient")
    m = coeff.size
    w = net.width
    width = w + 2
    comp = slice(1, w + 1)
    t_in = net.layers[0]
    t_out = net.layers[-1]

    first = np.zeros((width, 1))
    first[0, 0] = 1.0
    first[comp, 0] = t_in.weights[:, 0]
    fb = np.zeros(width)
    fb[comp] = t_in.bias
    layers = [AffineLayer(first, fb)]

    def mid_template():
        mm = np.zeros((width, width))
        mm[0, 0] = 1.0
        mm[-1, -1] = 1.0
        return mm, np.zeros(width)

    for i in range(m):
        for lay in net.layers[1:-1]:
            mm, b = mid_template()
            mm[comp, comp] = lay.weights
            b[comp] = lay.bias
            layers.append(AffineLayer(mm, b))
        if i + 1 < m:
            mm, b = mid_template()
            mm[comp, comp] = t_in.weights @ t_out.weights
            mm[-1, comp] = coeff[i] * t_out.weights[0]
            b[comp] = t_in.weights[:, 0] * t_out.bias[0] + t_in.bias
            b[-1] = coeff[i] * t_out.bias[0]
            layers.append(AffineLayer(mm, b))
        else:
            final = np.zeros((1, width))
            final[0, comp] = coeff[i] * t_out.weights[0]
            final[0, -1] = 1.0
            layers.append(AffineLayer(final, [coeff[i] * t_out.bias[0]]))
    return SpecialNetwork(layers)


def iterate_apply_sum(tnet: ReluNetwork, gnet: ReluNetwork,
                      coeffs: Sequence[float]) -> SpecialNetwork:
    """Special network computing sum_i coeffs[i] g(t^(i)(x)).

    Width W1 + W2 + 2, depth L(m+1): the iterate pipeline and the applied
    network advance in parallel phases of L layers, one phase per term plus a
    priming phase, with seams handing each finished iterate to both blocks.
    """
    coeff = np.asarray(coeffs, dtype=float)
    if coeff.ndim != 1 or coeff.size == 0:
        raise StructureError("need at least one coefficient")
    if tnet.depth != gnet.depth:
        raise StructureError("iterate and applied networks must have equal depth")
    m = coeff.size
    w1, w2 = tnet.width, gnet.width
    width = w1 + w2 + 2
    tb = slice(1, w1 + 1)
    gb = slice(w1 + 1, w1 + w2 + 1)
    t_in, t_out = tnet.layers[0], tnet.layers[-1]
    g_in, g_out = gnet.layers[0], gnet.layers[-1]

    first = np.zeros((width, 1))
    first[0, 0] = 1.0
    first[tb, 0] = t_in.weights[:, 0]
    fb = np.zeros(width)
    fb[tb] = t_in.bias
    layers = [AffineLayer(first, fb)]

    def mid_template():
        mm = np.zeros((width, width))
        mm[0, 0] = 1.0
        mm[-1, -1] = 1.0
        return mm, np.zeros(width)

    for phase in range(1, m + 2):
        if phase > 1:
            # seam entering this phase: iterate t^(phase-1) is ready
            mm, b = mid_template()
            if phase <= m:
                mm[tb, tb] = t_in.weights @ t_out.weights
                b[tb] = t_in.weights[:, 0] * t_out.bias[0] + t_in.bias
            mm[gb, tb] = g_in.weights @ t_out.weights
            b[gb] = g_in.weights[:, 0] * t_out.bias[0] + g_in.bias
            if phase > 2:
                mm[-1, gb] = coeff[phase - 3] * g_out.weights[0]
                b[-1] = coeff[phase - 3] * g_out.bias[0]
            layers.append(AffineLayer(mm, b))
        inner = tnet.layers[1:-1] if phase <= m else gnet.layers[1:-1]
        for r in range(len(inner)):
            mm, b = mid_template()
            if phase <= m:
                mm[tb, tb] = tnet.layers[1 + r].weights
                b[tb] = tnet.layers[1 + r].bias
            if phase > 1:
                mm[gb, gb] = gnet.layers[1 + r].weights
                b[gb] = gnet.layers[1 + r].bias
            layers.append(AffineLayer(mm, b))
    final = np.zeros((1, width))
    final[0, gb] = coeff[m - 1] * g_out.weights[0]
    final[0, -1] = 1.0
    layers.append(AffineLayer(final, [coeff[m - 1] * g_out.bias[0]]))
    return SpecialNetwork(layers)


def pad_width(net: ReluNetwork, width: int) -> ReluNetwork:
    """Zero-pad a plain network to a larger width; padded channels stay at 0."""
    w = net.width
    if width < w:
        raise StructureError("cannot shrink a network")
    if width == w:
        return net
    extra = width - w
    first = np.vstack([net.layers[0].weights, np.zeros((extra, 1))])
    fb = np.concatenate([net.layers[0].bias, np.zeros(extra)])
    layers = [AffineLayer(first, fb)]
    for lay in net.layers[1:-1]:
        mm = np.zeros((width, width))
        mm[:w, :w] = lay.weights
        layers.append(AffineLayer(mm, np.concatenate([lay.bias, np.zeros(extra)])))
    out = np.hstack([net.layers[-1].weights, np.zeros((1, extra))])
    layers.append(AffineLayer(out, net.layers[-1].bias))
    return ReluNetwork(layers)


def parallel_sum(nets: Sequence[ReluNetwork], weights=None) -> ReluNetwork:
    """Block-diagonal merge of equal-depth plain networks, outputs summed."""
    if not nets:
        raise StructureError("need at least one network")
    depths = {n.depth for n in nets}
    if len(depths) != 1:
        raise StructureError("all networks must share one depth")
    coeff = _weights_vector(nets, weights)
    widths = [n.width for n in nets]
    width = sum(widths)
    offs = np.concatenate([[0], np.cumsum(widths)])

    first = np.vstack([n.layers[0].weights for n in nets])
    fb = np.concatenate([n.layers[0].bias for n in nets])
    layers = [AffineLayer(first, fb)]
    for r in range(1, depths.pop()):
        mm = np.zeros((width, width))
        b = np.zeros(width)
        for i, n in enumerate(nets):
            sl = slice(offs[i], offs[i + 1])
            mm[sl, sl] = n.layers[r].weights
            b[sl] = n.layers[r].bias
        layers.append(AffineLayer(mm, b))
    out = np.zeros((1, width))
    bias = 0.0
    for i, n in enumerate(nets):
        out[0, offs[i]:offs[i + 1]] = coeff[i] * n.layers[-1].weights[0]
        bias += coeff[i] * n.layers[-1].bias[0]
    layers.append(AffineLayer(out, [bias]))
    return ReluNetwork(layers)
