"""Independent re-implementations used as test oracles.

Nothing here imports the package's numerical code; formulas are written out
element by element so that an error in the vectorised library code cannot be
mirrored.
"""
from __future__ import annotations

import cmath
import math

import numpy as np


# -- geometry and channels --------------------------------------------------

def steering_loop(q, w_r, z_u, z_r, Mx, Mz, d_over_lambda):
    """URA response built with explicit loops: entry (iz, ix) at index iz * Mx + ix."""
    dx, dy = q[0] - w_r[0], q[1] - w_r[1]
    d = math.sqrt((z_u - z_r) ** 2 + dx * dx + dy * dy)
    cz = (z_u - z_r) / d
    cx = (w_r[0] - q[0]) / d
    out = []
    for iz in range(Mz):
        for ix in range(Mx):
            phase = -2 * math.pi * d_over_lambda * (ix * cx + iz * cz)
            out.append(cmath.exp(1j * phase))
    return np.array(out)


def path_loss_oracle(q, sc):
    def dist(a, b):
        return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))

    U = (q[0], q[1], sc.z_u)
    R = (sc.w_r[0], sc.w_r[1], sc.z_r)
    G = (sc.w_g[0], sc.w_g[1], 0.0)
    E = (sc.w_e[0], sc.w_e[1], 0.0)
    d_ur, d_rg, d_re = dist(U, R), dist(R, G), dist(R, E)
    d_ug, d_ue, d_ge = dist(U, G), dist(U, E), dist(G, E)
    rho = sc.rho
    return {
        "urg": math.sqrt(rho / (d_ur * d_rg) ** sc.alpha),
        "ure": math.sqrt(rho / (d_ur * d_re) ** sc.alpha),
        "ug": math.sqrt(rho / d_ug ** sc.kappa),
        "ue": math.sqrt(rho / d_ue ** sc.kappa),
        "ge": math.sqrt(rho / d_ge ** sc.varsigma),
        "gre": math.sqrt(rho / (d_rg * d_re) ** sc.alpha),
    }


def dl_gain_sum_form(L_ug, h_ug, L_urg, h_rg, h_ur, theta):
    """``L_UG h_UG + L_URG sum_i conj(h_RG,i) e^{j theta_i} h_UR,i``."""
    acc = L_ug * h_ug
    for i in range(len(theta)):
        acc += L_urg * np.conj(h_rg[i]) * cmath.exp(1j * theta[i]) * h_ur[i]
    return acc


def snr(power, gain, sigma2):
    return power * abs(gain) ** 2 / sigma2


# -- worst-case CSI error ---------------------------------------------------

def sphere_samples(rng, count, dim, eps):
    z = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return eps * z / np.linalg.norm(z, axis=1, keepdims=True)


def sampled_gain_max(h_bar, c, eps, rng, count=100_000, chunk=20_000):
    best = 0.0
    for start in range(0, count, chunk):
        dh = sphere_samples(rng, min(chunk, count - start), h_bar.shape[0], eps)
        vals = np.abs((np.conj(h_bar)[None, :] + np.conj(dh)) @ c) ** 2
        best = max(best, float(vals.max()))
    return best


def gradient_ascent_gain(h_bar, c, eps, rng, iters=2000, restarts=8, tol=1e-15):
    """Projected gradient ascent of ``|(h_bar + dh)^H c|^2`` on ``||dh|| = eps`` (restarts in parallel)."""
    if eps == 0:
        return abs(np.vdot(h_bar, c)) ** 2
    dh = sphere_samples(rng, restarts, h_bar.shape[0], eps)
    step = 1.0 / max(float(np.vdot(c, c).real), 1e-300)
    prev = -np.inf
    for _ in range(iters):
        z = (np.conj(h_bar)[None, :] + np.conj(dh)) @ c
        val = float(np.max(np.abs(z) ** 2))
        if val - prev <= tol * val:
            break
        prev = val
        # ascent direction of |z|^2 with respect to the error is c conj(z)
        dh = dh + step * c[None, :] * np.conj(z)[:, None]
        dh = eps * dh / np.linalg.norm(dh, axis=1, keepdims=True)
    z = (np.conj(h_bar)[None, :] + np.conj(dh)) @ c
    return float(np.max(np.abs(z) ** 2))


# -- power control ----------------------------------------------------------

def lagrangian_grid(a, b, varpi, peak, points=100_000):
    p = np.linspace(0.0, peak, points)
    val = np.log2(1 + p * a) - np.log2(1 + p * b) - varpi * p
    k = int(np.argmax(val))
    return p[k], p[1] - p[0]


# -- beamforming ------------------------------------------------------------

def exhaustive_phase_search(f, G, h_bar, levels=256):
    """Best per-slot secrecy over a uniform phase grid (M = 2, last entry fixed at 1)."""
    ang = 2 * np.pi * np.arange(levels) / levels
    e = np.exp(1j * ang)
    v1, v2 = np.meshgrid(e, e, indexing="ij")
    V = np.stack([v1.ravel(), v2.ravel(), np.ones(levels * levels)], axis=1)
    legit = np.abs(V @ np.conj(f)) ** 2
    eve = np.abs(V @ (np.conj(h_bar) * G)) ** 2
    val = np.log2(1 + legit) - np.log2(1 + eve)
    k = int(np.argmax(val))
    return float(val[k]), V[k]


# -- trajectory surrogate at fixed positions --------------------------------

def box_min_rank2(alpha, beta, lo, hi):
    """``min |alpha s + beta t|^2`` over ``s in [lo0, hi0]``, ``t in [lo1, hi1]`` (origin outside the box)."""
    best = math.inf

    def f(s, t):
        return abs(alpha * s + beta * t) ** 2

    for s in (lo[0], hi[0]):
        t = -((np.conj(beta) * alpha).real * s) / max(abs(beta) ** 2, 1e-300)
        t = min(max(t, lo[1]), hi[1])
        best = min(best, f(s, t), f(s, lo[1]), f(s, hi[1]))
    for t in (lo[1], hi[1]):
        s = -((np.conj(alpha) * beta).real * t) / max(abs(alpha) ** 2, 1e-300)
        s = min(max(s, lo[0]), hi[0])
        best = min(best, f(s, t), f(lo[0], t), f(hi[0], t))
    return best


def trajectory_surrogate_at(q, q_lin, coeffs, p, g, sc):
    """Surrogate objective (bps/Hz) with positions fixed at ``q`` and slacks optimal.

    ``q_lin`` is the linearisation trajectory. ``coeffs`` = (c_qg, c_gq, c_qe)
    per slot. Assumes the legitimate linearisations increase in both ``u`` and
    ``e`` (checked by the caller), so the largest admissible values are optimal.
    """
    c_qg, c_gq, c_qe = coeffs
    N = q.shape[0]
    total = 0.0
    zr = sc.z_u - sc.z_r
    for n in range(N):
        x, y = q[n]
        x0, y0 = q_lin[n]
        dug0 = (x0 - sc.w_g[0]) ** 2 + (y0 - sc.w_g[1]) ** 2 + sc.z_u ** 2
        dur0 = (x0 - sc.w_r[0]) ** 2 + (y0 - sc.w_r[1]) ** 2 + zr ** 2
        due0 = (x0 - sc.w_e[0]) ** 2 + (y0 - sc.w_e[1]) ** 2 + sc.z_u ** 2
        u0, e0 = dug0 ** (-sc.kappa / 4), dur0 ** (-sc.alpha / 4)
        s0, t0 = due0 ** (-sc.kappa / 4), dur0 ** (-sc.alpha / 4)
        dug = (x - sc.w_g[0]) ** 2 + (y - sc.w_g[1]) ** 2 + sc.z_u ** 2
        dur = (x - sc.w_r[0]) ** 2 + (y - sc.w_r[1]) ** 2 + zr ** 2
        # u^(-4/kappa) >= its tangent at u0, solved for the largest feasible u
        u_max = (1 + 4 / sc.kappa - dug / dug0) * sc.kappa / 4
        e_max = (1 + 4 / sc.alpha - dur / dur0) * sc.alpha / 4
        if u_max < 0 or e_max < 0:
            return -math.inf
        # -x^2 <= x0^2 - 2 x0 x lower-bounds the squared distances
        lin_e = (x0 - sc.w_e[0]) ** 2 + (y0 - sc.w_e[1]) ** 2 + 2 * (x0 - sc.w_e[0]) * (x - x0) \
            + 2 * (y0 - sc.w_e[1]) * (y - y0) + sc.z_u ** 2
        lin_r = (x0 - sc.w_r[0]) ** 2 + (y0 - sc.w_r[1]) ** 2 + 2 * (x0 - sc.w_r[0]) * (x - x0) \
            + 2 * (y0 - sc.w_r[1]) * (y - y0) + zr ** 2
        if lin_e <= 0 or lin_r <= 0:
            return -math.inf
        s_min = (lin_e / due0) ** (-sc.kappa / 4)
        t_min = (lin_r / dur0) ** (-sc.alpha / 4)
        s_max = sc.z_u ** (-sc.kappa / 2) / s0
        t_max = zr ** (-sc.alpha / 2) / t0
        if s_min > s_max + 1e-12 or t_min > t_max + 1e-12:
            return -math.inf
        gd = sc.rho * p[n] / sc.sigma2
        gu = sc.rho * g[n] / sc.sigma2

        def lin_quad(c, scale):
            h0 = np.array([u0, e0])
            Kq = scale * np.real(np.outer(np.conj(c), c)) * np.outer(h0, h0)
            return 2 * (Kq.sum(axis=0) @ np.array([u_max, e_max])) - Kq.sum()

        rd = lin_quad(c_qg[n], gd)
        ru = lin_quad(c_gq[n], gu)
        if rd < 0 or ru < 0:
            return -math.inf
        zeta = gd * box_min_rank2(c_qe[n][0] * s0, c_qe[n][1] * t0, (s_min, t_min), (s_max, t_max))
        zeta0 = gd * abs(c_qe[n][0] * s0 + c_qe[n][1] * t0) ** 2
        total += sc.w * (math.log(1 + rd) - zeta / (1 + zeta0)) + (1 - sc.w) * math.log(1 + ru)
    return total / (N * math.log(2))


# -- heuristic path ---------------------------------------------------------

def step_path(q0, w_g, q_f, D, N):
    """Walk toward the user in steps of at most D, hover, and leave at the last moment."""
    pos = np.array(q0, dtype=float)
    path = [pos.copy()]
    target = np.array(w_g, dtype=float)
    while len(path) < N:
        delta = target - pos
        dist = float(np.hypot(*delta))
        pos = target.copy() if dist <= D else pos + D * delta / dist
        path.append(pos.copy())
    # walking backward from q_F fixes the departure slots
    back = []
    pos = np.array(q_f, dtype=float)
    while True:
        delta = target - pos
        dist = float(np.hypot(*delta))
        if dist <= D:
            break
        pos = pos + D * delta / dist
        back.append(pos.copy())
    for k, b in enumerate(back):
        path[N - 1 - k] = b
    return np.array(path)


# -- end-to-end secrecy -----------------------------------------------------

def secrecy_end_to_end(sc, real, q, v_d, v_u, p, g, delta_a):
    """Worst-case average secrecy rate with every channel rebuilt from its definition."""
    M = sc.Mx * sc.Mz
    eps1 = delta_a * np.linalg.norm(np.append(real.h_re, np.conj(real.h_ue)))
    eps2 = delta_a * np.linalg.norm(np.append(real.h_re, np.conj(real.h_ge)))
    beta_ur, beta_ru = sc.rician_ur, sc.rician_ru
    total = 0.0
    for n in range(q.shape[0]):
        pl = path_loss_oracle(q[n], sc)
        a = steering_loop(q[n], sc.w_r, sc.z_u, sc.z_r, sc.Mx, sc.Mz, sc.d_over_lambda)
        h_ur = math.sqrt(beta_ur / (1 + beta_ur)) * a + math.sqrt(1 / (1 + beta_ur)) * real.nlos_ur
        h_ru = math.sqrt(beta_ru / (1 + beta_ru)) * a + math.sqrt(1 / (1 + beta_ru)) * real.nlos_ru
        th_d = v_d[n][:M]
        th_u = v_u[n][:M]
        g_ug = pl["ug"] * real.h_ug + pl["urg"] * sum(np.conj(real.h_rg[i]) * th_d[i] * h_ur[i] for i in range(M))
        g_gu = pl["ug"] * real.h_gu + pl["urg"] * sum(np.conj(h_ru[i]) * th_u[i] * real.h_gr[i] for i in range(M))
        # eavesdropper: worst error co-phases with the nominal sum, so the gain is (|nominal| + eps ||c||)^2
        c1 = np.array([pl["ure"] * h_ur[i] * th_d[i] for i in range(M)] + [pl["ue"]])
        nom1 = pl["ue"] * real.h_ue + sum(np.conj(real.h_re[i]) * c1[i] for i in range(M))
        c2 = np.array([pl["gre"] * real.h_gr[i] * th_u[i] for i in range(M)] + [pl["ge"]])
        nom2 = pl["ge"] * real.h_ge + sum(np.conj(real.h_re[i]) * c2[i] for i in range(M))
        eve1 = (abs(nom1) + eps1 * np.linalg.norm(c1)) ** 2
        eve2 = (abs(nom2) + eps2 * np.linalg.norm(c2)) ** 2
        s2 = sc.sigma2
        down = max(math.log2(1 + p[n] * abs(g_ug) ** 2 / s2) - math.log2(1 + p[n] * eve1 / s2), 0.0)
        up = max(math.log2(1 + g[n] * abs(g_gu) ** 2 / s2) - math.log2(1 + g[n] * eve2 / s2), 0.0)
        total += sc.w * down + (1 - sc.w) * up
    return total / q.shape[0]
