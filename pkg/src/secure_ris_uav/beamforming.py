"""Robust passive beamforming: S-procedure LMIs, SDR with one SCA step, Gaussian randomization.

Each slot and each link (DL, UL) gives an independent small SDP in the Hermitian
matrix ``V`` (size ``K = M + 1``). The unit diagonal is substituted directly, so
the free variables are the real and imaginary parts of the strict upper triangle.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import channel, conic, csi
from .channel import ChannelRealization
from .scenario import Scenario

log = logging.getLogger(__name__)

DEFAULT_COUNT = 100
LN2 = math.log(2.0)


@dataclass(frozen=True)
class PhaseSchedule:
    """Per-slot DL/UL reflection vectors, shape ``(N, M+1)``, last entry 1."""

    v_d: np.ndarray
    v_u: np.ndarray

    def __post_init__(self):
        for name in ("v_d", "v_u"):
            v = np.array(channel.unit_phases(getattr(self, name)), dtype=complex)
            if v.ndim != 2:
                raise ValueError(f"{name} must have shape (N, M+1)")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def zeros(cls, N: int, M: int) -> "PhaseSchedule":
        ones = np.ones((N, M + 1), dtype=complex)
        return cls(ones, ones)

    @property
    def theta_d(self) -> np.ndarray:
        return np.mod(np.angle(self.v_d[:, :-1]), 2 * np.pi)

    @property
    def theta_u(self) -> np.ndarray:
        return np.mod(np.angle(self.v_u[:, :-1]), 2 * np.pi)


@dataclass(frozen=True)
class SdrState:
    """Solution of one slot/link SDP."""

    V: np.ndarray
    xi: float
    eta: float
    tau: float
    objective: float
    status: str


class SlotLink(NamedTuple):
    """Data of one slot/link SDP.

    The legitimate SNR is ``f^H V f``; the eavesdropper SNR is
    ``(h_bar + dh)^H diag(G) V diag(G)^H (h_bar + dh)`` with ``G = sqrt(power / sigma2) H``.
    """

    f: np.ndarray
    G: np.ndarray
    h_bar: np.ndarray
    eps: float

    @property
    def W(self) -> np.ndarray:
        """Congruence rows ``[diag(G); h_bar^H diag(G)]`` of the S-procedure block."""
        return np.vstack([np.diag(self.G), (np.conj(self.h_bar) * self.G)[None, :]])


# -- Hermitian parametrisation ---------------------------------------------

def _iu(K: int):
    return np.triu_indices(K, 1)


def herm_from_params(x, K: int) -> np.ndarray:
    """``V = I + sum x_k E_k`` (real parts of the upper triangle, then imaginary parts)."""
    x = np.asarray(x, dtype=float)
    i, j = _iu(K)
    P = i.shape[0]
    V = np.eye(K, dtype=complex)
    V[i, j] = x[:P] + 1j * x[P:]
    V[j, i] = x[:P] - 1j * x[P:]
    return V


def params_from_herm(V) -> np.ndarray:
    V = np.asarray(V)
    i, j = _iu(V.shape[0])
    return np.concatenate([V[i, j].real, V[i, j].imag])


def congruence_basis(W) -> tuple[np.ndarray, np.ndarray]:
    """Affine map ``x -> W V(x) W^H``: constant term and one matrix per parameter."""
    W = np.atleast_2d(np.asarray(W, dtype=complex))
    K = W.shape[1]
    i, j = _iu(K)
    const = W @ W.conj().T
    A = W[:, i][:, None, :] * W[:, j].conj()[None, :, :]   # W_ai conj(W_bj)
    B = W[:, j][:, None, :] * W[:, i].conj()[None, :, :]   # W_aj conj(W_bi)
    re = A + B
    im = 1j * (A - B)
    mats = np.concatenate([re, im], axis=-1)
    return const, np.moveaxis(mats, -1, 0)


def _psd_columns(mats) -> np.ndarray:
    return conic.svec(conic.realify(mats)).T


def _psd_vec(H) -> np.ndarray:
    return conic.svec(conic.realify(H))


# -- problem data -----------------------------------------------------------

def link_data(h, H, h_bar, H_e, power: float, sigma2: float, eps: float) -> SlotLink:
    scale = math.sqrt(power / sigma2)
    f = scale * np.asarray(h) * np.conj(H)
    G = scale * np.asarray(H_e, dtype=complex)
    return SlotLink(f, G, np.asarray(h_bar, dtype=complex), float(eps))


def slot_links(realization: ChannelRealization, comp: channel.Composite, n: int, p, g,
               scenario: Scenario, unc: csi.UncertaintyModel) -> tuple[SlotLink, SlotLink]:
    s2 = scenario.sigma2
    H_e2 = comp.H_e2
    down = link_data(comp.h_g1, comp.H_g1[n], realization.h_bar_e1, comp.H_e1[n], p[n], s2, unc.eps1)
    up = link_data(comp.h_g2[n], comp.H_g2[n], realization.h_bar_e2, H_e2, g[n], s2, unc.eps2)
    return down, up


class LmiBlocks(NamedTuple):
    U1: np.ndarray
    U2: np.ndarray
    U3: np.ndarray
    U4: np.ndarray


def _u_pair(link: SlotLink, V, xi, eta):
    W = link.W
    R = W.shape[0]
    U_a = np.zeros((R, R), dtype=complex)
    U_a[:-1, :-1] = eta * np.eye(R - 1)
    U_a[-1, -1] = -eta * link.eps ** 2 + xi
    U_b = W @ V @ W.conj().T
    return U_a, 0.5 * (U_b + U_b.conj().T)


def build_lmis(realization: ChannelRealization, q_n, p_n: float, g_n: float, eps1: float, eps2: float,
               scenario: Scenario, v_d=None, v_u=None, V_d=None, V_u=None,
               xi1: float = 0.0, xi2: float = 0.0, eta1: float = 0.0, eta2: float = 0.0) -> LmiBlocks:
    """Numerical S-procedure blocks of one slot; robust constraints read ``U1 - U2 >= 0``, ``U3 - U4 >= 0``."""
    K = scenario.M + 1
    ones = np.ones(K, dtype=complex)
    comp = channel.composite_channels(realization, np.asarray(q_n, dtype=float)[None, :],
                                      ones if v_d is None else v_d, ones if v_u is None else v_u, scenario)
    unc = csi.UncertaintyModel(np.nan, eps1, eps2)
    down, up = slot_links(realization, comp, 0, [p_n], [g_n], scenario, unc)
    V_d = np.eye(K) if V_d is None else V_d
    V_u = np.eye(K) if V_u is None else V_u
    U1, U2 = _u_pair(down, V_d, xi1, eta1)
    U3, U4 = _u_pair(up, V_u, xi2, eta2)
    return LmiBlocks(U1, U2, U3, U4)


def legit_snr(link: SlotLink, v) -> np.ndarray:
    """``|f^H v|^2`` for one or many candidate vectors (last axis)."""
    return np.abs(np.asarray(v) @ np.conj(link.f)) ** 2


def eve_snr(link: SlotLink, v) -> np.ndarray:
    """Closed-form worst-case eavesdropper SNR of candidate vectors."""
    return csi.worst_case_error(link.h_bar, link.G, v, link.eps).gain


def surrogate(link: SlotLink, v, xi0: float) -> np.ndarray:
    """SCA surrogate in nats at rank-one points: ``ln(1 + f^H V f) - xi / (1 + xi0)``, tight ``xi``."""
    return np.log1p(legit_snr(link, v)) - eve_snr(link, v) / (1.0 + xi0)


def secrecy_value(link: SlotLink, v) -> np.ndarray:
    """Per-slot secrecy term ``log2(1 + a) - log2(1 + b_wc)`` of candidate vectors."""
    return (np.log1p(legit_snr(link, v)) - np.log1p(eve_snr(link, v))) / LN2


# -- the slot SDP -----------------------------------------------------------

def build_slot_program(link: SlotLink, xi0: float) -> conic.ConicProgram:
    K = link.f.shape[0]
    P = K * (K - 1)
    b = conic.ProgramBuilder()
    x = b.variable("v", (P,))
    tau = b.variable("tau")
    xi = b.variable("xi")

    const, mats = congruence_basis(np.eye(K))
    b.add("psd", [(x, _psd_columns(mats))], _psd_vec(const), name="V")

    cq, mq = congruence_basis(link.f.conj()[None, :])
    exp_x = np.zeros((3, P))
    exp_x[2] = mq[:, 0, 0].real
    b.add("exp", [(tau, [[1.0], [0.0], [0.0]]), (x, exp_x)], [0.0, 1.0, 1.0 + cq[0, 0].real], name="legit")

    W = link.W
    R = W.shape[0]
    if link.eps > 0:
        eta = b.variable("eta")
        cw, mw = congruence_basis(W)
        J_eta = np.eye(R)
        J_eta[-1, -1] = -link.eps ** 2
        J_xi = np.zeros((R, R))
        J_xi[-1, -1] = 1.0
        b.add("psd", [(x, -_psd_columns(mw)), (eta, _psd_vec(J_eta)[:, None]), (xi, _psd_vec(J_xi)[:, None])],
              -_psd_vec(cw), name="lmi")
        b.add("nonneg", [(eta, [[1.0]])], [0.0], name="eta")
    else:
        # zero radius: the LMI degenerates (eta unbounded); use the exact scalar bound
        cl, ml = congruence_basis(W[-1:])
        b.add("nonneg", [(xi, [[1.0]]), (x, -ml[:, 0, 0].real[None, :])], [-cl[0, 0].real], name="eve")
    b.add("nonneg", [(xi, [[1.0]])], [0.0], name="xi")
    b.maximize(tau, 1.0)
    b.maximize(xi, -1.0 / (1.0 + xi0))
    return b.build()


def _polish(link: SlotLink, V, xi: float, eta: float) -> tuple[np.ndarray, float, float]:
    """Remove interior-point residue so the returned point is exactly feasible.

    ``V`` is pulled toward the identity (keeps the unit diagonal) until PSD; then
    ``(eta, xi)`` grow by ``(d, d (1 + eps^2))``, which adds ``d I`` to the robust block.
    """
    K = V.shape[0]
    low = float(np.linalg.eigvalsh(V)[0])
    if low < 0:
        V = (V - low * np.eye(K)) / (1.0 - low)
    xi, eta = max(xi, 0.0), max(eta, 0.0)
    U_a, U_b = _u_pair(link, V, xi, eta)
    if link.eps == 0:
        xi = max(xi, float(U_b[-1, -1].real))
    else:
        low = float(np.linalg.eigvalsh(U_a - U_b)[0])
        if low < 0:
            d = -low * (1.0 + 1e-9)
            eta += d
            xi += d * (1.0 + link.eps ** 2)
    return V, xi, eta


def solve_slot_sdp(link: SlotLink, xi0: float, tol: float = conic.DEFAULT_TOL,
                   context: str = "slot SDP") -> SdrState:
    if xi0 < 0:
        raise ValueError("linearisation point xi0 must be nonnegative")
    program = build_slot_program(link, xi0)
    sol = conic.solve_or_raise(program, context, tol)
    K = link.f.shape[0]
    names = program.names
    V = herm_from_params(sol.x[names["v"]], K)
    eta = float(sol.x[names["eta"]]) if "eta" in names else 0.0
    V, xi, eta = _polish(link, V, float(sol.x[names["xi"]]), eta)
    tau = min(float(sol.x[names["tau"]]), math.log1p(float(np.real(link.f.conj() @ V @ link.f))))
    return SdrState(V, xi, eta, tau, tau - xi / (1.0 + xi0), sol.status)


# -- randomization ----------------------------------------------------------

def _normalise(v: np.ndarray) -> np.ndarray:
    u = np.exp(1j * np.angle(v))
    return u * np.conj(u[..., -1:])


def principal_projection(V) -> np.ndarray:
    w, U = np.linalg.eigh(V)
    return _normalise(U[:, -1])


def gaussian_randomization(V, count: int, evaluator, rng: np.random.Generator,
                           extra=()) -> tuple[np.ndarray, float]:
    """Best unit-modulus candidate drawn from ``CN(0, V)``.

    Candidate 0 is the phase projection of the principal eigenvector; ``extra``
    vectors (e.g. the incumbent) are appended before the random draws.
    ``evaluator`` maps a ``(C, K)`` candidate stack to scores.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    V = np.asarray(V, dtype=complex)
    K = V.shape[0]
    w, U = np.linalg.eigh(0.5 * (V + V.conj().T))
    # eigenvalues at rounding level would only add noise to the draws
    w = np.where(w > 1e-12 * max(w[-1], 0.0), w, 0.0)
    root = U * np.sqrt(w)
    z = channel.cscg(rng, (count, K))
    draws = z @ root.T
    cands = [principal_projection(V)[None, :]]
    cands += [np.asarray(e, dtype=complex).reshape(1, K) for e in extra]
    cands.append(_normalise(draws))
    cands = np.vstack(cands)
    scores = np.asarray(evaluator(cands), dtype=float)
    k = int(np.argmax(scores))
    return cands[k], float(scores[k])


def slot_rng(seed, stage: int, link: int) -> np.random.Generator:
    # one fresh stream per (seed, iteration, link) reused by every slot, so that
    # the result for a slot depends only on that slot's data
    return np.random.default_rng(np.random.SeedSequence([int(seed or 0), int(stage), int(link)]))


def improve_slot(link: SlotLink, v0, count: int, rng: np.random.Generator,
                 context: str = "slot SDP") -> tuple[np.ndarray, SdrState]:
    """One SCA step from ``v0`` followed by randomization (``v0`` kept as a candidate)."""
    xi0 = float(eve_snr(link, v0))
    state = solve_slot_sdp(link, xi0, context=context)
    v, _ = gaussian_randomization(state.V, count, lambda c: secrecy_value(link, c), rng, extra=(v0,))
    return v, state


def lmi_min_eig(link: SlotLink, state: SdrState) -> float:
    """Smallest eigenvalue of the enforced robust block at an SDP solution.

    With a zero error radius only the last (scalar) entry of ``U1 - U2`` is
    binding, which is the form the program uses.
    """
    U_a, U_b = _u_pair(link, state.V, state.xi, state.eta)
    if link.eps == 0:
        return float((U_a - U_b)[-1, -1].real)
    return float(np.linalg.eigvalsh(U_a - U_b)[0])


def relaxed_value(link: SlotLink, state: SdrState) -> float:
    """Relaxed-problem objective ``ln(1 + f^H V f) - ln(1 + xi)`` at an SDP solution."""
    return math.log1p(float(np.real(link.f.conj() @ state.V @ link.f))) - math.log1p(state.xi)


def sca_slot(link: SlotLink, v0, count: int = DEFAULT_COUNT, rng=None, max_iter: int = 50,
             tol: float = 1e-7) -> tuple[np.ndarray, SdrState]:
    """SCA iterated to convergence on the relaxed problem, then randomization."""
    rng = np.random.default_rng(0) if rng is None else rng
    xi0 = float(eve_snr(link, v0))
    state = solve_slot_sdp(link, xi0)
    value = relaxed_value(link, state)
    for _ in range(max_iter):
        state = solve_slot_sdp(link, state.xi)
        prev, value = value, relaxed_value(link, state)
        if abs(value - prev) <= tol:
            break
    v, _ = gaussian_randomization(state.V, count, lambda c: secrecy_value(link, c), rng, extra=(v0,))
    return v, state


def optimize_phases(realization: ChannelRealization, q, phases: PhaseSchedule, p, g,
                    scenario: Scenario, delta_a: float, seed=None, stage: int = 0,
                    count: int = DEFAULT_COUNT) -> PhaseSchedule:
    """One beamforming update over all slots, keeping each incumbent as a candidate."""
    unc = csi.uncertainty(realization, delta_a)
    comp = channel.composite_channels(realization, q, phases.v_d, phases.v_u, scenario)
    v_d = np.array(phases.v_d)
    v_u = np.array(phases.v_u)
    rng_d = slot_rng(seed, stage, 0)
    rng_u = slot_rng(seed, stage, 1)
    state_d = rng_d.bit_generator.state
    state_u = rng_u.bit_generator.state
    for n in range(scenario.N):
        down, up = slot_links(realization, comp, n, p, g, scenario, unc)
        if scenario.w > 0 and p[n] > 0:
            rng_d.bit_generator.state = state_d
            v_d[n], _ = improve_slot(down, v_d[n], count, rng_d, f"DL slot {n}")
        if scenario.w < 1 and g[n] > 0:
            rng_u.bit_generator.state = state_u
            v_u[n], _ = improve_slot(up, v_u[n], count, rng_u, f"UL slot {n}")
    return PhaseSchedule(v_d, v_u)
