"""Exact Riemann solver for the 1D Euler equations (ideal gas).

Used only as an independent oracle in the tests.  Follows the classical
pressure-function iteration: solve f_L(p) + f_R(p) + (u_R - u_L) = 0 for the
star pressure with Newton's method, then sample the self-similar solution.
"""

import numpy as np


def _pressure_function(p, rho, pk, ck, gamma):
    if p > pk:  # shock
        a = 2.0 / ((gamma + 1.0) * rho)
        b = (gamma - 1.0) / (gamma + 1.0) * pk
        f = (p - pk) * np.sqrt(a / (p + b))
        df = np.sqrt(a / (b + p)) * (1.0 - 0.5 * (p - pk) / (b + p))
    else:  # rarefaction
        f = 2.0 * ck / (gamma - 1.0) * ((p / pk) ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0)
        df = 1.0 / (rho * ck) * (p / pk) ** (-(gamma + 1.0) / (2.0 * gamma))
    return f, df


def star_state(left, right, gamma):
    rl, ul, pl = left
    rr, ur, pr = right
    cl, cr = np.sqrt(gamma * pl / rl), np.sqrt(gamma * pr / rr)
    p = max(1e-10, 0.5 * (pl + pr))
    for _ in range(100):
        fl, dfl = _pressure_function(p, rl, pl, cl, gamma)
        fr, dfr = _pressure_function(p, rr, pr, cr, gamma)
        p_new = max(1e-12, p - (fl + fr + ur - ul) / (dfl + dfr))
        if abs(p_new - p) < 1e-14 * (p_new + p):
            p = p_new
            break
        p = p_new
    fl, _ = _pressure_function(p, rl, pl, cl, gamma)
    fr, _ = _pressure_function(p, rr, pr, cr, gamma)
    u = 0.5 * (ul + ur) + 0.5 * (fr - fl)
    return p, u


def sample(left, right, gamma, xi):
    """Primitive (rho, u, p) at similarity coordinates ``xi = (x - x0)/t``."""
    rl, ul, pl = left
    rr, ur, pr = right
    cl, cr = np.sqrt(gamma * pl / rl), np.sqrt(gamma * pr / rr)
    ps, us = star_state(left, right, gamma)
    g1 = (gamma - 1.0) / (gamma + 1.0)
    out = np.empty((len(xi), 3))
    for i, s in enumerate(np.asarray(xi, dtype=float)):
        if s <= us:
            if ps > pl:
                sl = ul - cl * np.sqrt((gamma + 1) / (2 * gamma) * ps / pl + (gamma - 1) / (2 * gamma))
                if s <= sl:
                    out[i] = rl, ul, pl
                else:
                    out[i] = rl * (ps / pl + g1) / (g1 * ps / pl + 1.0), us, ps
            else:
                csl = cl * (ps / pl) ** ((gamma - 1) / (2 * gamma))
                if s <= ul - cl:
                    out[i] = rl, ul, pl
                elif s >= us - csl:
                    out[i] = rl * (ps / pl) ** (1.0 / gamma), us, ps
                else:
                    u = 2.0 / (gamma + 1) * (cl + (gamma - 1) / 2 * ul + s)
                    c = 2.0 / (gamma + 1) * (cl + (gamma - 1) / 2 * (ul - s))
                    rho = rl * (c / cl) ** (2.0 / (gamma - 1))
                    out[i] = rho, u, pl * (c / cl) ** (2 * gamma / (gamma - 1))
        else:
            if ps > pr:
                sr = ur + cr * np.sqrt((gamma + 1) / (2 * gamma) * ps / pr + (gamma - 1) / (2 * gamma))
                if s >= sr:
                    out[i] = rr, ur, pr
                else:
                    out[i] = rr * (ps / pr + g1) / (g1 * ps / pr + 1.0), us, ps
            else:
                csr = cr * (ps / pr) ** ((gamma - 1) / (2 * gamma))
                if s >= ur + cr:
                    out[i] = rr, ur, pr
                elif s <= us + csr:
                    out[i] = rr * (ps / pr) ** (1.0 / gamma), us, ps
                else:
                    u = 2.0 / (gamma + 1) * (-cr + (gamma - 1) / 2 * ur + s)
                    c = 2.0 / (gamma + 1) * (cr - (gamma - 1) / 2 * (ur - s))
                    rho = rr * (c / cr) ** (2.0 / (gamma - 1))
                    out[i] = rho, u, pr * (c / cr) ** (2 * gamma / (gamma - 1))
    return out


def wave_speeds(left, right, gamma):
    """Rarefaction head, contact and shock speeds for a left-rarefaction / right-shock problem."""
    rl, ul, pl = left
    rr, ur, pr = right
    cl, cr = np.sqrt(gamma * pl / rl), np.sqrt(gamma * pr / rr)
    ps, us = star_state(left, right, gamma)
    shock = ur + cr * np.sqrt((gamma + 1) / (2 * gamma) * ps / pr + (gamma - 1) / (2 * gamma))
    return {"head": ul - cl, "contact": us, "shock": shock, "p_star": ps, "u_star": us}
