"""Compilation of piecewise-linear targets into explicit network weights.

Every routine here emits weights whose extracted function reproduces the target
exactly (float rounding aside) together with a CompileReport whose parameter
count is guaranteed against an explicit budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import cpwl
from .combinators import (
    compose_nets,
    concat_sum,
    embed_deeper,
    pad_width,
    parallel_sum,
    stack_relu_sum,
    stack_sum,
    iterate_sum,
    zero_special,
)
from .errors import (
    BudgetError,
    ContractError,
    DegenerateCompositionError,
    DomainError,
)
from .network import (
    AffineLayer,
    ReluNetwork,
    SpecialNetwork,
    hat_net,
    param_count,
    special_to_standard,
)

# frozen budget constants for compile_self_similar: params <= C1*(k+m) + C2*W^2
SELF_SIMILAR_C1 = 816
SELF_SIMILAR_C2 = 72

_DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class CompileReport:
    """Size accounting for one compiled network."""

    width: int
    depth: int
    params: int
    budget_bound: int
    target_breakpoints: int
    note: str = ""

    def __post_init__(self):
        if self.params != param_count(self.width, self.depth):
            raise BudgetError("parameter count does not match width and depth")
        if self.params > self.budget_bound:
            raise BudgetError(
                f"{self.params} parameters exceed the guaranteed bound {self.budget_bound}"
            )


def _report(net, bound: int, n: int, note: str = "") -> CompileReport:
    return CompileReport(net.width, net.depth, net.params, int(bound), n, note)


def block_size(width: int) -> int:
    """Breakpoints absorbed per pair of layers at the given width."""
    if width >= 8:
        return ((width - 2) // 6) * (width - 2)
    if width >= 4:
        return 2 * (width - 2)
    raise DomainError("width must be at least 4")


def spline_budget(width: int, n: int) -> int:
    """Guaranteed parameter bound for compiling an n-breakpoint target."""
    small = width * width + 4 * width + 1
    if width >= 8:
        return 61 * n if n >= block_size(width) else small
    if width == 4:
        return 19 * n if n >= 4 else small
    if width in (5, 6, 7):
        return 25 * n if n >= 2 * (width - 2) else small
    raise DomainError("width must be at least 4")


def partition_indices(coeffs: Sequence[float], q: int, width: int) -> list[list[int]]:
    """Deterministic split of hat-expansion indices into width-2 classes.

    Index k (0-based) belongs to the hat with peak position t = ceil((k+1)/q)
    and reach i = t*q - k; classes fix (sign, t mod 3, i), so members share a
    sign, sit at least three peaks apart, and there are 6q <= width-2 classes.
    Zero coefficients are left out.  Returned list always has width-2 entries.
    """
    if q < 1 or width < 4 or 6 * q > width - 2:
        raise DomainError("need 1 <= q and 6q <= width - 2")
    classes: list[list[int]] = [[] for _ in range(width - 2)]
    for k, c in enumerate(coeffs):
        if c == 0.0:
            continue
        t = (k // q) + 1
        i = t * q - k
        cls = (0 if c > 0 else 3 * q) + (t % 3) * q + (i - 1)
        classes[cls].append(k)
    return classes


def _hat_coefficients(y: np.ndarray, s: np.ndarray, q: int, peaks: int) -> np.ndarray:
    """Solve for hat-basis coefficients on one block by forward substitution.

    y are the block nodes (bounding nodes included), s the target values with
    s[0] = s[-1] = 0.  Hat (t, i) has feet y[t*q - i], y[t*q + 1] and peak 1 at
    y[t*q]; equations at the q nodes owned by each peak are triangular.
    """
    coeff = np.zeros(peaks * q)
    for t in range(1, peaks + 1):
        p = t * q
        solved: dict[int, float] = {}
        for u in range(p - q + 1, p + 1):
            if u == p:
                residual = s[p] - sum(solved.values())
                solved[p - u + 1] = residual  # i = 1, hat value 1 at the peak
            else:
                i_new = p - u + 1
                acc = 0.0
                for i, c in solved.items():
                    acc += c * (y[u] - y[p - i]) / (y[p] - y[p - i])
                w = (y[u] - y[p - i_new]) / (y[p] - y[p - i_new])
                solved[i_new] = (s[u] - acc) / w
        for i, c in solved.items():
            coeff[p - i] = c  # phi index k = t*q - i (0-based)
    return coeff


def _class_profile(cls: list[int], coeff: np.ndarray, y: np.ndarray, q: int,
                   peaks: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Nodal profile of the pre-ReLU function for one index class.

    Returns (xs, vs, sign): a piecewise-linear profile on the peak positions
    (plus the endpoints 0 and 1) whose positive part is exactly the class's
    hat combination.  Values at peaks neighbouring a used hat are chosen so
    the profile crosses zero at the hat's feet; everything else interpolates
    between (or extends) those anchors, staying nonpositive.
    """
    xs = np.concatenate(([0.0], y[q:peaks * q + 1:q], [1.0]))
    sign = 1.0 if coeff[cls[0]] > 0 else -1.0
    det: dict[int, float] = {}
    edge0 = None
    edge1 = None
    for k in cls:
        t = (k // q) + 1
        i = t * q - k
        mag = abs(coeff[k])
        p = t * q
        foot_l, peak, foot_r = y[p - i], y[p], y[p + 1]
        det[t] = mag
        left = lambda x: mag * (x - foot_l) / (peak - foot_l)
        right = lambda x: mag * (x - foot_r) / (peak - foot_r)
        if t - 1 >= 1:
            det[t - 1] = left(y[p - q])
        else:
            edge0 = left(0.0)
        if t + 1 <= peaks:
            det[t + 1] = right(y[p + q])
        else:
            edge1 = right(1.0)
    order = sorted(det)
    vs = np.empty(xs.size)
    anchor_x = [xs[t] for t in order]
    anchor_v = [det[t] for t in order]
    vs[1:-1] = np.interp(xs[1:-1], anchor_x, anchor_v)
    vs[0] = edge0 if edge0 is not None else anchor_v[0]
    vs[-1] = edge1 if edge1 is not None else anchor_v[-1]
    return xs, vs, sign


def _block_special(y: np.ndarray, s: np.ndarray, width: int, q: int) -> SpecialNetwork:
    """Depth-2 special network for one residual block (W >= 8 construction)."""
    peaks = width - 2
    coeff = _hat_coefficients(y, s, q, peaks)
    classes = partition_indices(coeff, q, width)
    xi = y[q:peaks * q + 1:q]

    first = np.zeros((width, 1))
    first[:-1, 0] = 1.0
    fb = np.zeros(width)
    fb[1:-1] = -xi

    mid = np.zeros((width, width))
    mid[0, 0] = 1.0
    mid[-1, -1] = 1.0
    mb = np.zeros(width)
    out = np.zeros((1, width))
    out[0, -1] = 1.0
    for row, cls in enumerate(classes, start=1):
        if not cls:
            continue
        xs, vs, sign = _class_profile(cls, coeff, y, q, peaks)
        slopes = np.diff(vs) / np.diff(xs)
        mid[row, 0] = slopes[0]
        mid[row, 1:-1] = np.diff(slopes)
        mb[row] = vs[0]
        out[0, row] = sign
    return SpecialNetwork([
        AffineLayer(first, fb),
        AffineLayer(mid, mb),
        AffineLayer(out, [0.0]),
    ])


def _pad_knots(knots: np.ndarray, total: int) -> np.ndarray:
    """Extend a sorted interior-knot list to `total` with points in the last gap."""
    missing = total - knots.size
    if missing <= 0:
        return knots
    lo = knots[-1] if knots.size else 0.0
    step = (1.0 - lo) / (missing + 1)
    if step < 1e-12:
        raise DomainError("last gap too small to host artificial breakpoints")
    extra = lo + step * np.arange(1, missing + 1)
    return np.concatenate([knots, extra])


def _compile_wide(target: cpwl.CPwL, width: int) -> SpecialNetwork:
    """Width >= 8 pipeline: subtract the endpoint line, slice, build hat blocks."""
    q = (width - 2) // 6
    slope = float(target.values[-1] - target.values[0])
    offset = float(target.values[0])
    residual = cpwl.add(target, cpwl.line(slope, offset), 1.0, -1.0)
    size = block_size(width)
    n = residual.n_interior
    blocks = max(1, math.ceil(n / size))
    full = np.concatenate(([0.0], _pad_knots(residual.breakpoints[1:-1], blocks * size), [1.0]))
    vals = residual.eval(full)
    nets = []
    for j in range(blocks):
        y = full[j * size:(j + 1) * size + 2]
        s = vals[j * size:(j + 1) * size + 2].copy()
        s[0] = 0.0
        s[-1] = 0.0
        nets.append(_block_special(y, s, width, q))
    net = nets[0]
    for nxt in nets[1:]:
        net = concat_sum(net, nxt)
    last = net.layers[-1]
    w = last.weights.copy()
    w[0, 0] += slope
    return SpecialNetwork(list(net.layers[:-1]) + [AffineLayer(w, last.bias + offset)])


def _compile_narrow(target: cpwl.CPwL, width: int) -> SpecialNetwork:
    """Width 4..7 pipeline: ramp accumulation, width-2 knots per layer group."""
    x, v = target.breakpoints, target.values
    slopes = np.diff(v) / np.diff(x)
    knots = x[1:-1]
    changes = np.diff(slopes)
    per = width - 2
    groups = 2 * max(1, math.ceil(knots.size / (2 * per)))
    full = _pad_knots(knots, groups * per)
    coeff = np.zeros(full.size)
    coeff[:changes.size] = changes
    comp = slice(1, width - 1)

    def seed(g: int) -> tuple[np.ndarray, np.ndarray]:
        w = np.zeros((width, 1))
        b = np.zeros(width)
        w[comp, 0] = 1.0
        b[comp] = -full[g * per:(g + 1) * per]
        return w, b

    def collect(g: int) -> np.ndarray:
        return coeff[g * per:(g + 1) * per]

    w0, b0 = seed(0)
    first = np.zeros((width, 1))
    first[0, 0] = 1.0
    first[comp, 0] = w0[comp, 0]
    layers = [AffineLayer(first, b0)]
    for g in range(1, groups):
        m = np.zeros((width, width))
        m[0, 0] = 1.0
        m[-1, -1] = 1.0
        wg, bg = seed(g)
        m[comp, 0] = wg[comp, 0]
        m[-1, comp] = collect(g - 1)
        layers.append(AffineLayer(m, bg))
    out = np.zeros((1, width))
    out[0, 0] = slopes[0]
    out[0, comp] = collect(groups - 1)
    out[0, -1] = 1.0
    layers.append(AffineLayer(out, [float(v[0])]))
    return SpecialNetwork(layers)


def compile_spline(target: cpwl.CPwL, width: int) -> tuple[SpecialNetwork, CompileReport]:
    """Exact special network for a piecewise-linear target at the given width."""
    if width < 4:
        raise DomainError("width must be at least 4")
    n = target.n_interior
    if width >= 8:
        net = _compile_wide(target, width)
        note = ""
    else:
        net = _compile_narrow(target, width)
        note = "width 7 uses the narrow ramp construction (q=2)" if width == 7 else ""
    return net, _report(net, spline_budget(width, n), n, note)


def compile_shallow(target: cpwl.CPwL) -> ReluNetwork:
    """One-hidden-layer network with width n+1 computing the target directly."""
    x, v = target.breakpoints, target.values
    slopes = np.diff(v) / np.diff(x)
    w = target.n_interior + 1
    first = np.ones((w, 1))
    fb = np.concatenate(([0.0], -x[1:-1]))
    out = np.concatenate(([slopes[0]], np.diff(slopes)))[None, :]
    return ReluNetwork([AffineLayer(first, fb), AffineLayer(out, [float(v[0])])])


def representative_chain(chain: Sequence[cpwl.CPwL]) -> list[cpwl.CPwL]:
    """Affine renormalization of a composition chain so every intermediate
    factor maps onto [0, 1]; the end-to-end composition is unchanged."""
    k = len(chain)
    if k == 1:
        return [chain[0]]
    reps = []
    lo = float(chain[0].values.min())
    hi = float(chain[0].values.max())
    if hi - lo <= _DEGENERATE_TOL:
        raise DegenerateCompositionError("first factor is constant")
    reps.append(cpwl.combine([chain[0]], [1.0 / (hi - lo)], -lo / (hi - lo)))
    for j in range(1, k):
        pulled = cpwl.restrict(chain[j], lo, hi)
        if j == k - 1:
            reps.append(pulled)
            break
        lo = float(pulled.values.min())
        hi = float(pulled.values.max())
        if hi - lo <= _DEGENERATE_TOL:
            raise DegenerateCompositionError(f"factor {j} is constant on its input range")
        reps.append(cpwl.combine([pulled], [1.0 / (hi - lo)], -lo / (hi - lo)))
    return reps


def compile_composition(chain: Sequence[cpwl.CPwL], width: int
                        ) -> tuple[ReluNetwork, CompileReport]:
    """Plain network computing chain[-1] o ... o chain[0] at the given width.

    The chain is replaced by its representative renormalization first, then
    each factor is compiled and the factors are fused end to end.
    """
    if width < 8:
        raise DomainError("composition compilation needs width >= 8")
    if not chain:
        raise DomainError("empty chain")
    for f in chain[:-1]:
        if f.values.min() < -cpwl.EDGE_TOL or f.values.max() > 1.0 + cpwl.EDGE_TOL:
            raise DomainError("intermediate factor escapes [0, 1]")
    reps = representative_chain(chain)
    nets = [special_to_standard(compile_spline(rep, width)[0]) for rep in reps]
    net = nets[0]
    for nxt in nets[1:]:
        net = compose_nets(net, nxt)
    total_n = sum(rep.n_interior for rep in reps)
    k = len(chain)
    bound = 34 * total_n + 2 * k * (width * width + width)
    return net, _report(net, bound, total_n)


def compile_sum_of_compositions(terms: Sequence[tuple[float, Sequence[cpwl.CPwL]]],
                                width: int) -> tuple[SpecialNetwork, CompileReport]:
    """Special network for sum_i a_i * (chain_i composition), factors at width-2."""
    if width < 10:
        raise DomainError("sums of compositions need width >= 10")
    if not terms:
        raise DomainError("need at least one term")
    weights = [float(a) for a, _ in terms]
    compiled = [compile_composition(chain, width - 2) for _, chain in terms]
    net = stack_sum([c[0] for c in compiled], weights)
    total_n = sum(c[1].target_breakpoints for c in compiled)
    chain_lengths = sum(len(chain) for _, chain in terms)
    bound = 44 * total_n + 2 * width * (width + 1) * chain_lengths
    return net, _report(net, bound, total_n)


def _interval_hats(intervals: list[tuple[float, float]]) -> tuple[cpwl.CPwL, cpwl.CPwL]:
    """Tent systems for pattern replication over strictly separated intervals.

    The first tent rises over each interval [a_i, b_i] and returns to zero at
    the midpoint c_i of the following gap; the second rises from b_i to c_i and
    returns to zero at the next interval's start.  An interval reaching x = 1
    ends in a plain ramp with no second tent.
    """
    m = len(intervals)
    xs_t, vs_t = [0.0], [0.0]
    xs_h, vs_h = [0.0], [0.0]

    def push(xs, vs, x, v):
        if x > xs[-1]:
            xs.append(x)
            vs.append(v)

    for i, (a, b) in enumerate(intervals):
        nxt = intervals[i + 1][0] if i + 1 < m else 1.0
        push(xs_t, vs_t, a, 0.0)
        push(xs_t, vs_t, b, 1.0)
        if b < 1.0:
            c = 0.5 * (b + nxt)
            push(xs_t, vs_t, c, 0.0)
            push(xs_h, vs_h, b, 0.0)
            push(xs_h, vs_h, c, 1.0)
            push(xs_h, vs_h, nxt, 0.0)
    push(xs_t, vs_t, 1.0, 0.0)
    push(xs_h, vs_h, 1.0, 0.0)
    return cpwl.CPwL(xs_t, vs_t), cpwl.CPwL(xs_h, vs_h)


def self_similar_oracle(pattern: cpwl.CPwL,
                        intervals: Sequence[tuple[float, float]]) -> cpwl.CPwL:
    """Exact CPwL of sum_i pattern(h_i (x - a_i)) over the given intervals."""
    xs, vs = [0.0], [0.0]
    for a, b in intervals:
        px = a + (b - a) * pattern.breakpoints
        for x, v in zip(px, pattern.values):
            if x > xs[-1]:
                xs.append(float(x))
                vs.append(float(v))
    if xs[-1] < 1.0:
        xs.append(1.0)
        vs.append(0.0)
    return cpwl.CPwL(xs, vs)


def _similar_term(pattern: cpwl.CPwL, intervals: list[tuple[float, float]],
                  width: int) -> ReluNetwork:
    """Plain width-(W-2) network for (pattern o T - pattern~ o That) on the
    given strictly separated intervals (pattern nonnegative)."""
    tent, tent_hat = _interval_hats(intervals)
    mirrored = cpwl.reflect(pattern)
    s_net = special_to_standard(compile_spline(pattern, width - 4)[0])
    sh_net = special_to_standard(compile_spline(mirrored, width - 4)[0])
    t_net = special_to_standard(compile_spline(tent, width - 4)[0])
    th_net = special_to_standard(compile_spline(tent_hat, width - 4)[0])
    st = compose_nets(t_net, s_net)
    sh_th = compose_nets(th_net, sh_net)
    return special_to_standard(stack_sum([st, sh_th], [1.0, -1.0]))


def compile_self_similar(pattern: cpwl.CPwL,
                         intervals: Sequence[tuple[float, float]],
                         width: int) -> tuple[SpecialNetwork, CompileReport]:
    """Special network replicating a pattern over disjoint intervals.

    The pattern must vanish at 0 and 1.  Interval interiors must be disjoint;
    shared endpoints are handled by splitting the list into odd and even
    positions, and sign changes by splitting the pattern into its positive and
    negative parts, each replicated through a rectified tent composition.
    """
    if width < 8:
        raise DomainError("self-similar compilation needs width >= 8")
    iv = [(float(a), float(b)) for a, b in intervals]
    if not iv:
        raise DomainError("need at least one interval")
    for a, b in iv:
        if not (0.0 <= a < b <= 1.0):
            raise DomainError("intervals must be nondegenerate inside [0, 1]")
    for (a0, b0), (a1, b1) in zip(iv, iv[1:]):
        if b0 > a1:
            raise DomainError("interval interiors must be disjoint and sorted")
    if abs(pattern.eval(0.0)) > _DEGENERATE_TOL or abs(pattern.eval(1.0)) > _DEGENERATE_TOL:
        raise ContractError("pattern must vanish at both endpoints")
    fixed = pattern.values.copy()
    fixed[0] = 0.0
    fixed[-1] = 0.0
    pattern = cpwl.CPwL(pattern.breakpoints, fixed)

    k = pattern.n_interior
    m = len(iv)
    pos = cpwl.relu(pattern)
    neg = cpwl.relu(cpwl.combine([pattern], [-1.0]))
    strictly_separated = all(b0 < a1 for (_, b0), (a1, _) in zip(iv, iv[1:]))

    parts: list[tuple[cpwl.CPwL, list[tuple[float, float]], float]] = []
    halves = [(pos, 1.0)] if neg.values.max() == 0.0 else [(pos, 1.0), (neg, -1.0)]
    for half, sign in halves:
        if half.values.max() == 0.0:
            continue
        if strictly_separated:
            parts.append((half, iv, sign))
        else:
            for group in (iv[0::2], iv[1::2]):
                if group:
                    parts.append((half, group, sign))

    bound = SELF_SIMILAR_C1 * (k + m) + SELF_SIMILAR_C2 * width * width
    oracle_n = self_similar_oracle(pattern, iv).n_interior
    if not parts:
        net = zero_special(width, 1)
        return net, _report(net, bound, oracle_n)
    nets = [_similar_term(p, g, width) for p, g, _ in parts]
    net = stack_relu_sum(nets, [s for _, _, s in parts])
    return net, _report(net, bound, oracle_n)


def fourier_atom(kind: str, j: int) -> ReluNetwork:
    """Width-2 network for the j-th sawtooth cosine or sine pattern.

    The cosine pattern repeats C(t) = 1 - 2*hat(t) j times; depth is
    ceil(log2 j) + 1.  The sine pattern is the cosine advanced by 3/4 of a
    period, built with one extra halving layer; depth is ceil(log2 j) + 2.
    """
    if j < 1:
        raise DomainError("index must be >= 1")
    if kind == "cosine":
        halvings = max(0, math.ceil(math.log2(j)))
    elif kind == "sine":
        halvings = math.ceil(math.log2(j)) + 1 if j > 1 else 1
    else:
        raise DomainError("kind must be 'cosine' or 'sine'")
    scale = j / float(2 ** halvings)
    shift = 0.75 / float(2 ** halvings) if kind == "sine" else 0.0
    flip = AffineLayer([[-4.0, 8.0]], [1.0])  # 1 - 2*hat from hat pre-activations
    if halvings == 0:
        return ReluNetwork([AffineLayer([[1.0], [1.0]], [0.0, -0.5]), flip])
    first = AffineLayer([[scale], [scale]], [shift, shift - 0.5])
    net = ReluNetwork([first, AffineLayer([[2.0, -4.0]], [0.0])])
    for _ in range(halvings - 1):
        net = compose_nets(net, hat_net())
    return compose_nets(net, ReluNetwork([AffineLayer([[1.0], [1.0]], [0.0, -0.5]), flip]))


def fourier_oracle(terms: Sequence[tuple[int, float, float]]) -> cpwl.CPwL:
    """Direct CPwL of sum_j a_j * cosine_j + b_j * sine_j."""
    fs, cs = [], []
    for j, a, b in terms:
        if a != 0.0:
            fs.append(_cosine_cpwl(j))
            cs.append(a)
        if b != 0.0:
            fs.append(_sine_cpwl(j))
            cs.append(b)
    return cpwl.combine(fs, cs) if fs else cpwl.line(0.0, 0.0)


def _cosine_cpwl(k: int) -> cpwl.CPwL:
    xs = np.arange(2 * k + 1) / (2.0 * k)
    xs[-1] = 1.0
    vs = np.where(np.arange(2 * k + 1) % 2 == 0, 1.0, -1.0)
    return cpwl.CPwL(xs, vs)


def _sine_cpwl(k: int) -> cpwl.CPwL:
    xs = [0.0]
    vs = [0.0]
    for ell in range(k):
        xs.extend([(ell + 0.25) / k, (ell + 0.75) / k])
        vs.extend([1.0, -1.0])
    xs.append(1.0)
    vs.append(0.0)
    return cpwl.CPwL(xs, vs)


def compile_fourier_sum(terms: Sequence[tuple[int, float, float]], width: int
                        ) -> tuple[SpecialNetwork, CompileReport]:
    """Special network for a finite sawtooth-trigonometric sum.

    `terms` lists (index, cosine coefficient, sine coefficient).  Pairs are
    grouped floor((width-2)/4) at a time; each group's width-4 pair networks
    are padded to one common depth and run side by side, and the groups are
    summed sequentially.
    """
    if width < 6:
        raise DomainError("trigonometric sums need width >= 6")
    if not terms:
        raise DomainError("need at least one term")
    indices = [j for j, _, _ in terms]
    if len(set(indices)) != len(indices):
        raise DomainError("duplicate indices in terms")
    if min(indices) < 1:
        raise DomainError("indices must be >= 1")
    lam = max(indices)
    p = 2 * (max(0, math.ceil(math.log2(lam))) + 2)
    group_size = (width - 2) // 4
    pairs = []
    for j, a, b in terms:
        pair = stack_sum([fourier_atom("cosine", j), fourier_atom("sine", j)], [a, b])
        pairs.append(special_to_standard(embed_deeper(pair, p)))
    blocks = []
    for g in range(0, len(pairs), group_size):
        block = parallel_sum(pairs[g:g + group_size])
        blocks.append(pad_width(block, width - 2))
    net = stack_sum(blocks)
    depth_bound = 2 * math.ceil(len(terms) / group_size) * (max(0, math.ceil(math.log2(lam))) + 2)
    oracle_n = fourier_oracle(terms).n_interior
    return net, _report(net, param_count(width, depth_bound), oracle_n)


def takagi_network(coeffs: Sequence[float]) -> SpecialNetwork:
    """Width-4 special network for sum_k coeffs[k-1] * H^(k) (depth = len(coeffs))."""
    if len(coeffs) == 0:
        raise DomainError("need at least one coefficient")
    return iterate_sum(hat_net(), coeffs)
