"""Hand-built ReLU networks with known analytic truth, for interpretation
and acceptance tests.  Piecewise-linear interpolation of a 1-d function
through fixed knots is exact ReLU algebra, so no training is involved."""

import numpy as np

from life_ensemble.nn import SingleLayerNN


def ridge_pl_neurons(func, knots, direction, p):
    """Neurons reproducing the piecewise-linear interpolant of ``func``
    along ``direction . x``, valid for projections >= knots[0].

    Returns (W, b, beta, intercept).
    """
    knots = np.asarray(knots, dtype=float)
    vals = np.array([func(k) for k in knots])
    slopes = np.diff(vals) / np.diff(knots)
    direction = np.asarray(direction, dtype=float)

    W, b, beta = [], [], []
    prev = 0.0
    for i, slope in enumerate(slopes):
        W.append(direction)
        b.append(-knots[i])
        beta.append(slope - prev)
        prev = slope
    return np.vstack(W), np.array(b), np.array(beta), float(vals[0])


def combine(parts, p, task="regression"):
    """Stack (W, b, beta, intercept) blocks into one network."""
    Ws, bs, betas, icpt = [], [], [], 0.0
    for W, b, beta, c in parts:
        Ws.append(W)
        bs.append(b)
        betas.append(beta)
        icpt += c
    return SingleLayerNN(np.vstack(Ws), np.concatenate(bs),
                         np.concatenate(betas), icpt, task)


def linear_net(coefs, p, task="regression"):
    """Exact linear function sum_m coefs[m] * x_m via paired ReLUs."""
    coefs = np.asarray(coefs, dtype=float)
    W, b, beta = [], [], []
    for m, c in enumerate(coefs):
        if c == 0.0:
            continue
        e = np.zeros(p)
        e[m] = 1.0
        W.extend([e, -e])
        b.extend([0.0, 0.0])
        beta.extend([c, -c])
    return SingleLayerNN(np.vstack(W), np.array(b), np.array(beta), 0.0, task)


def square_net(m, p, lo=-4.0, hi=4.0, n_knots=41):
    """Close piecewise-linear approximation of x_m ** 2 on [lo, hi]."""
    e = np.zeros(p)
    e[m] = 1.0
    knots = np.linspace(lo, hi, n_knots)
    W, b, beta, icpt = ridge_pl_neurons(lambda t: t * t, knots, e, p)
    return SingleLayerNN(W, b, beta, icpt)


def product_net(m, k, p, lo=-4.0, hi=4.0, n_knots=61):
    """x_m * x_k as (u^2 - v^2)/4 with u = x_m + x_k, v = x_m - x_k,
    each square approximated piecewise-linearly on projections in
    [2*lo, 2*hi]."""
    u = np.zeros(p)
    u[m] = 1.0
    u[k] = 1.0
    v = np.zeros(p)
    v[m] = 1.0
    v[k] = -1.0
    knots = np.linspace(2 * lo, 2 * hi, n_knots)
    Wu, bu, cu, icu = ridge_pl_neurons(lambda t: t * t / 4.0, knots, u, p)
    Wv, bv, cv, icv = ridge_pl_neurons(lambda t: -t * t / 4.0, knots, v, p)
    return combine([(Wu, bu, cu, icu), (Wv, bv, cv, icv)], p)
