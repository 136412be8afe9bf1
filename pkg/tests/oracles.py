"""Independent reference implementations used only by the tests.

Everything here is written with explicit loops / textbook formulas and
shares no code with the package.
"""

import cmath
import itertools
import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


# -- metrics by nested loops ------------------------------------------------------

def _cells(shape):
    return list(itertools.product(*[range(n) for n in shape]))


def _per_btv(pred, true, fn):
    """Apply fn(p_cells, t_cells, spatial_shape) for every (b, t, v); average."""
    b, nt = pred.shape[:2]
    shape = pred.shape[2:-1]
    nv = pred.shape[-1]
    per_channel = []
    for v in range(nv):
        acc = 0.0
        for i in range(b):
            for k in range(nt):
                p = {c: float(pred[(i, k) + c + (v,)]) for c in _cells(shape)}
                t = {c: float(true[(i, k) + c + (v,)]) for c in _cells(shape)}
                acc += fn(p, t, shape)
        per_channel.append(acc / (b * nt))
    return sum(per_channel) / nv


def rmse(pred, true):
    return _per_btv(pred, true, lambda p, t, s: math.sqrt(sum((p[c] - t[c]) ** 2 for c in p) / len(p)))


def nrmse(pred, true):
    return _per_btv(pred, true, lambda p, t, s: math.sqrt(sum((p[c] - t[c]) ** 2 for c in p))
                    / math.sqrt(sum(t[c] ** 2 for c in t)))


def crmse(pred, true):
    return _per_btv(pred, true, lambda p, t, s: abs(sum(p.values()) - sum(t.values())) / len(p))


def brmse(pred, true):
    def f(p, t, shape):
        cells = [c for c in p if any(ci == 0 or ci == n - 1 for ci, n in zip(c, shape))]
        return math.sqrt(sum((p[c] - t[c]) ** 2 for c in cells) / len(cells))
    return _per_btv(pred, true, f)


def max_error(pred, true):
    b = pred.shape[0]
    total = 0.0
    for i in range(b):
        m = 0.0
        for idx in itertools.product(*[range(n) for n in pred.shape[1:]]):
            m = max(m, abs(float(pred[(i,) + idx]) - float(true[(i,) + idx])))
        total += m
    return total / b


def signed_k(k, n):
    return k if k <= n // 2 else k - n


def dft(values: dict, shape):
    """Unnormalized forward DFT by explicit summation."""
    out = {}
    for kk in _cells(shape):
        s = 0j
        for c, val in values.items():
            phase = sum(kk[a] * c[a] / shape[a] for a in range(len(shape)))
            s += val * cmath.exp(-2j * math.pi * phase)
        out[kk] = s
    return out


def shell_of(kk, shape):
    ks = [signed_k(k, n) for k, n in zip(kk, shape)]
    if len(shape) == 1:
        return abs(ks[0])
    return int(round(math.sqrt(sum(k * k for k in ks))))


def shell_power(values: dict, shape):
    n = math.prod(shape)
    F = dft(values, shape)
    power = {}
    for kk, f in F.items():
        s = shell_of(kk, shape)
        power[s] = power.get(s, 0.0) + abs(f) ** 2 / n
    return power


def frmse(pred, true, band):
    lo, hi = {"low": (0, 4), "mid": (5, 12), "high": (13, None)}[band]

    def f(p, t, shape):
        power = shell_power({c: p[c] - t[c] for c in p}, shape)
        nyq = min(shape) // 2
        if hi is None:
            total = sum(v for s, v in power.items() if s >= lo)
            width = max(nyq - lo + 1, 1)
        else:
            total = sum(v for s, v in power.items() if lo <= s <= hi)
            width = hi - lo + 1
        return math.sqrt(total) / width
    return _per_btv(pred, true, f)


def norm_error(pred, true, p):
    e = sum(abs(a - b) ** p for a, b in zip(np.ravel(pred), np.ravel(true)))
    d = sum(abs(b) ** p for b in np.ravel(true))
    return (e / d) ** (1.0 / p)


def inverse_spectral(pred, true):
    """Fields (x..., v); quarter bands of the Nyquist shell."""
    shape = pred.shape[:-1]
    nv = pred.shape[-1]
    n = math.prod(shape)
    kmax = min(shape) // 2
    bands = {"": lambda s: True, " low": lambda s: s < kmax / 4,
             " mid": lambda s: kmax / 4 <= s < 3 * kmax / 4, " high": lambda s: s >= 3 * kmax / 4}
    fe, ft = [], []
    for v in range(nv):
        e = dft({c: float(pred[c + (v,)] - true[c + (v,)]) for c in _cells(shape)}, shape)
        t = dft({c: float(true[c + (v,)]) for c in _cells(shape)}, shape)
        fe += [(shell_of(k, shape), abs(x)) for k, x in e.items()]
        ft += [abs(x) for x in t.values()]
    out = {}
    for name, inb in bands.items():
        out[f"fMSE{name}"] = sum(a * a for s, a in fe if inb(s)) / (n * n * nv)
        for p in (2, 3):
            denom = sum(a**p for a in ft) ** (1.0 / p)
            out[f"fL{p}{name}"] = sum(a**p for s, a in fe if inb(s)) ** (1.0 / p) / denom
    return out


# -- ODE oracle for the logistic source --------------------------------------------------

def logistic_rk4(u0, rho, t_end, h=1e-6):
    """Classical RK4 on u' = rho u (1 - u), vectorized over u0 (and rho)."""
    u = np.array(u0, dtype=float)
    n = int(round(t_end / h))
    f = lambda v: rho * v * (1.0 - v)
    for _ in range(n):
        k1 = f(u)
        k2 = f(u + 0.5 * h * k1)
        k3 = f(u + 0.5 * h * k2)
        k4 = f(u + h * k3)
        u = u + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return u


# -- Darcy / Poisson direct solve --------------------------------------------------------

def poisson_vertex_fd(n: int, f: float = 1.0) -> np.ndarray:
    """-lap u = f on (0,1)^2, u = 0 on the boundary; 5-point FD on an n-interval
    vertex grid.  Returns interior nodal values, shape (n-1, n-1)."""
    m = n - 1
    h = 1.0 / n
    main = 2.0 * np.ones(m)
    off = -np.ones(m - 1)
    t = sp.diags([off, main, off], [-1, 0, 1])
    eye = sp.identity(m)
    a = (sp.kron(t, eye) + sp.kron(eye, t)).tocsc() / (h * h)
    u = spla.spsolve(a, np.full(m * m, f))
    return u.reshape(m, m)
