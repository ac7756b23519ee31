"""Shared random constructions used across the test modules."""

import numpy as np

from spline2relu import approx, cpwl
from spline2relu.compiler import compile_spline
from spline2relu.network import special_to_standard


def random_spline(rng, n, low=-2.0, high=2.0):
    """Random CPwL with n interior breakpoints spaced at least 1/(4(n+1))."""
    gaps = rng.uniform(0.4, 1.6, n + 1)
    inner = np.cumsum(gaps)[:-1] / gaps.sum()
    x = np.concatenate(([0.0], inner, [1.0]))
    return cpwl.CPwL(x, rng.uniform(low, high, n + 2))


def gentle_unit_spline(rng, max_knots=3):
    """Unit-range spline on a coarse tenths grid, safe to self-compose."""
    n = int(rng.integers(1, max_knots + 1))
    ticks = np.sort(rng.choice(np.arange(1, 10), size=n, replace=False)) / 10.0
    x = np.concatenate(([0.0], ticks, [1.0]))
    return cpwl.CPwL(x, rng.uniform(0.0, 1.0, n + 2))


def plain_net(f, width=4):
    """Plain ReLU network computing the spline f exactly."""
    net, _ = compile_spline(f, width)
    return special_to_standard(net)


def compose_chain(chain):
    """chain[-1] o ... o chain[0] as a single CPwL."""
    out = chain[0]
    for f in chain[1:]:
        out = cpwl.compose(f, out)
    return out


def sample_lip_ball(rng, alpha):
    """Random function vanishing at 0 and 1 with Lip-alpha seminorm below one.

    Sums a few kink atoms c * |x - t|**alpha, subtracts the line through the
    endpoint values, and rescales by the pairwise seminorm measured over a
    fine mesh joined with the kink centers.
    """
    count = int(rng.integers(1, 7))
    centers = rng.uniform(0.0, 1.0, count)
    coeffs = rng.uniform(-1.0, 1.0, count)

    def raw(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c, t in zip(coeffs, centers):
            out = out + c * np.abs(x - t) ** alpha
        return out

    v0 = float(raw(np.array([0.0]))[0])
    v1 = float(raw(np.array([1.0]))[0])

    def pinned(x):
        x = np.asarray(x, dtype=float)
        return raw(x) - (1.0 - x) * v0 - x * v1

    mesh = np.union1d(np.arange(841) / 840.0, np.clip(centers, 0.0, 1.0))
    gv = pinned(mesh)
    dx = np.abs(mesh[:, None] - mesh[None, :])
    np.fill_diagonal(dx, 1.0)
    semi = float((np.abs(gv[:, None] - gv[None, :]) / dx ** alpha).max())
    rho = float(rng.uniform(0.3, 0.97))
    if semi < 1e-12:
        return approx.TargetFunction(
            lambda x: np.zeros_like(np.asarray(x, dtype=float)),
            lip_alpha=(alpha, 0.0))
    scale = rho / semi
    return approx.TargetFunction(lambda x: scale * pinned(x), lip_alpha=(alpha, rho))


def pattern_rich_target(rng, m, k, alpha, theta=0.9):
    """Piecewise-linear target carrying a random pattern on every 1/m panel.

    Each panel holds theta * 2 * m**(-alpha) * S_i(m x - i) for a random
    level pattern S_i at resolution k; the factor theta < 1 keeps the node
    values strictly between quantization levels so the panel residuals
    quantize back to exactly S_i.  Returns the target and the pattern list.
    """
    pats = []
    for _ in range(m):
        levels = [0]
        for j in range(k - 1):
            step = int(rng.integers(-1, 2))
            nxt = levels[-1] + step
            if abs(nxt) > k - 2 - j:
                nxt = levels[-1] - int(np.sign(levels[-1]) or 1) * abs(step)
            levels.append(int(nxt))
        levels.append(0)
        if abs(levels[-2]) > 1:
            levels[-2] = 1 if levels[-2] > 0 else -1
        pats.append(approx.Pattern(tuple(levels)))

    xs, vs = [0.0], [0.0]
    amp = 2.0 * float(m) ** (-alpha) * theta
    for i, pat in enumerate(pats):
        shape = pat.to_cpwl(alpha)
        for bx, bv in zip(shape.breakpoints[1:], shape.values[1:]):
            x = (i + bx) / m
            if x > xs[-1]:
                xs.append(x)
                vs.append(amp * bv)
            else:
                vs[-1] = amp * bv
    f = cpwl.CPwL(xs, vs)
    return approx.TargetFunction(f, lip_alpha=(alpha, 1.0)), pats
