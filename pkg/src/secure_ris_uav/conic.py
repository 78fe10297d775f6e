"""Backend-neutral conic programs: ``maximize c^T x  s.t.  A_k x + b_k in K_k``.

Cone conventions (``r = A_k x + b_k``):

``zero``      r = 0
``nonneg``    r >= 0
``soc``       r = (t, z),    ||z|| <= t
``rsoc``      r = (u, v, z), ||z||^2 <= 2 u v,  u, v >= 0
``psd``       r = svec(S) of a real symmetric k x k matrix S, S >= 0
``exp``       r = (x, y, z), y exp(x / y) <= z,  y > 0  (closure included)
``pow``       r = (x, y, z), x^a y^(1-a) >= |z|,  x, y >= 0

``svec`` packs the upper triangle column by column with off-diagonal entries
scaled by sqrt(2), so ``svec(S) . svec(T) = trace(S T)``.

Complex Hermitian constraints are handled by the real embedding
``[[Re H, -Im H], [Im H, Re H]]`` (see :func:`realify`).
"""
from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

log = logging.getLogger(__name__)

CONES = ("zero", "nonneg", "soc", "rsoc", "psd", "exp", "pow")
SQRT2 = math.sqrt(2.0)
DEFAULT_TOL = 1e-8


class SolverError(RuntimeError):
    """A conic solve did not return a usable point."""


class VerificationError(RuntimeError):
    pass


# -- symmetric packing ------------------------------------------------------

def _triu_index(k: int):
    cols, rows = [], []
    for j in range(k):
        for i in range(j + 1):
            rows.append(i)
            cols.append(j)
    return np.array(rows), np.array(cols)


_TRIU_CACHE: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _triu(k: int):
    if k not in _TRIU_CACHE:
        r, c = _triu_index(k)
        scale = np.where(r == c, 1.0, SQRT2)
        _TRIU_CACHE[k] = (r, c, scale)
    return _TRIU_CACHE[k]


def svec_dim(k: int) -> int:
    return k * (k + 1) // 2


def psd_order(m: int) -> int:
    k = int(round((math.sqrt(8 * m + 1) - 1) / 2))
    if svec_dim(k) != m:
        raise ValueError(f"{m} is not a triangular number")
    return k


def svec(S: np.ndarray) -> np.ndarray:
    """Pack the trailing ``k x k`` axes of ``S``."""
    S = np.asarray(S)
    r, c, scale = _triu(S.shape[-1])
    return S[..., r, c] * scale


def smat(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    k = psd_order(x.shape[-1])
    r, c, scale = _triu(k)
    S = np.zeros(x.shape[:-1] + (k, k))
    S[..., r, c] = x / scale
    S[..., c, r] = x / scale
    return S


def realify(H: np.ndarray) -> np.ndarray:
    """Real symmetric embedding of complex Hermitian matrices (trailing two axes)."""
    H = np.asarray(H)
    re, im = H.real, H.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def unrealify(S: np.ndarray) -> np.ndarray:
    k = S.shape[-1] // 2
    return 0.5 * (S[..., :k, :k] + S[..., k:, k:]) + 0.5j * (S[..., k:, :k] - S[..., :k, k:])


# -- program containers -----------------------------------------------------

@dataclass(frozen=True)
class Block:
    A: sparse.csr_matrix
    b: np.ndarray
    cone: str
    param: float | None = None
    name: str = ""

    @property
    def rows(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class ConicProgram:
    c: np.ndarray
    blocks: tuple[Block, ...]
    names: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.c.shape[0]

    def objective(self, x) -> float:
        return float(self.c @ np.asarray(x, dtype=float))

    def dump(self) -> str:
        """Plain-text standard-form listing, one constraint block per line."""
        buf = io.StringIO()
        buf.write(f"n {self.n}\n")
        buf.write("maximize " + " ".join(f"{i}:{v!r}" for i, v in enumerate(self.c) if v != 0) + "\n")
        for k, blk in enumerate(self.blocks):
            A = blk.A.tocoo()
            entries = " ".join(f"{i},{j},{v!r}" for i, j, v in sorted(zip(A.row, A.col, A.data)))
            offs = " ".join(repr(float(v)) for v in blk.b)
            param = "" if blk.param is None else f" param={blk.param!r}"
            buf.write(f"block {k} {blk.cone} rows={blk.rows}{param} name={blk.name or '-'} | A {entries} | b {offs}\n")
        return buf.getvalue()


class ProgramBuilder:
    """Incremental builder: declare variables, then add affine cone constraints."""

    def __init__(self):
        self._n = 0
        self._names: dict[str, np.ndarray] = {}
        self._blocks: list[tuple] = []
        self._c: dict[int, float] = {}

    def variable(self, name: str, shape=()) -> np.ndarray:
        size = int(np.prod(shape)) if shape != () else 1
        idx = np.arange(self._n, self._n + size).reshape(shape) if shape != () else np.array(self._n)
        self._n += size
        self._names[name] = idx
        return idx

    def maximize(self, idx, coef) -> None:
        for i, v in zip(np.ravel(idx), np.broadcast_to(coef, np.shape(idx)).ravel()):
            self._c[int(i)] = self._c.get(int(i), 0.0) + float(v)

    def add(self, cone: str, terms, offset, param=None, name: str = "") -> None:
        """Add ``sum_k C_k x[idx_k] + offset in cone``.

        ``terms`` is a list of ``(idx, C)`` with ``C`` of shape ``(m, len(idx))``.
        """
        if cone not in CONES:
            raise ValueError(f"unknown cone {cone!r}")
        offset = np.atleast_1d(np.asarray(offset, dtype=float))
        m = offset.shape[0]
        rows, cols, vals = [], [], []
        for idx, C in terms:
            idx = np.atleast_1d(np.asarray(idx)).ravel()
            C = np.asarray(C, dtype=float).reshape(m, idx.shape[0])
            r, j = np.nonzero(C)
            rows.append(r)
            cols.append(idx[j])
            vals.append(C[r, j])
        self._blocks.append((cone, param, name, m, rows, cols, vals, offset))

    def build(self) -> ConicProgram:
        n = self._n
        used = np.zeros(n, dtype=bool)
        for *_, cols, _vals, _off in self._blocks:
            for c in cols:
                used[c] = True
        if not used.all():
            names = [k for k, idx in self._names.items() if not used[np.ravel(idx)].all()]
            raise ValueError(f"variables {names} appear in no constraint block")
        blocks = []
        for cone, param, name, m, rows, cols, vals, offset in self._blocks:
            if rows:
                A = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, n))
            else:
                A = sparse.csr_matrix((m, n))
            blocks.append(Block(A, offset, cone, param, name))
        c = np.zeros(n)
        for i, v in self._c.items():
            c[i] = v
        return ConicProgram(c, tuple(blocks), dict(self._names))


def diag_terms(idx, coef=1.0):
    """Shorthand ``(idx, coef * I)`` for elementwise terms."""
    idx = np.atleast_1d(idx).ravel()
    return idx, np.eye(idx.shape[0]) * coef


# -- solving ----------------------------------------------------------------

@dataclass(frozen=True)
class ConicSolution:
    x: np.ndarray | None
    status: str
    primal_residual: float = math.inf
    gap: float = math.inf
    objective: float = math.nan
    iterations: int = 0
    info: str = ""

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "near-optimal")


def _rsoc_to_soc(A, b):
    """Rows (u, v, z) of a rotated cone to rows ((u+v)/sqrt2, (u-v)/sqrt2, z)."""
    m = A.shape[0]
    T = sparse.lil_matrix((m, m))
    T[0, 0] = T[0, 1] = T[1, 0] = 1.0 / SQRT2
    T[1, 1] = -1.0 / SQRT2
    for i in range(2, m):
        T[i, i] = 1.0
    T = T.tocsr()
    return T @ A, T @ b


def _clarabel_data(program: ConicProgram):
    import clarabel

    A_rows, b_rows, cones = [], [], []
    order = {"zero": 0, "nonneg": 1}
    # group zero/nonneg blocks first, as the solver merges them more efficiently
    for blk in sorted(program.blocks, key=lambda b: order.get(b.cone, 2)):
        A, b = blk.A, blk.b
        if blk.cone == "zero":
            cones.append(clarabel.ZeroConeT(blk.rows))
        elif blk.cone == "nonneg":
            cones.append(clarabel.NonnegativeConeT(blk.rows))
        elif blk.cone == "soc":
            cones.append(clarabel.SecondOrderConeT(blk.rows))
        elif blk.cone == "rsoc":
            A, b = _rsoc_to_soc(A, b)
            cones.append(clarabel.SecondOrderConeT(blk.rows))
        elif blk.cone == "psd":
            cones.append(clarabel.PSDTriangleConeT(psd_order(blk.rows)))
        elif blk.cone == "exp":
            cones.append(clarabel.ExponentialConeT())
        elif blk.cone == "pow":
            cones.append(clarabel.PowerConeT(float(blk.param)))
        A_rows.append(A)
        b_rows.append(np.asarray(b).ravel())
    # solver form: s = b - A' x in K  with  A' = -A
    A_all = -sparse.vstack(A_rows).tocsc()
    b_all = np.concatenate(b_rows)
    return A_all, b_all, cones


_STATUS = {
    "Solved": "optimal",
    "AlmostSolved": "near-optimal",
    "PrimalInfeasible": "infeasible",
    "AlmostPrimalInfeasible": "infeasible",
    "DualInfeasible": "unbounded",
    "AlmostDualInfeasible": "unbounded",
}


# settings tried in turn when the interior-point iteration stalls
RETRY_SETTINGS = ({}, {"equilibrate_enable": False}, {"max_step_fraction": 0.9})
_STALLED = ("InsufficientProgress", "NumericalError", "MaxIterations")


def _clarabel_run(program: ConicProgram, data, tol: float, max_iter: int, extra: dict):
    import clarabel

    A, b, cones = data
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    settings.max_iter = max_iter
    settings.max_threads = 1
    for key, value in extra.items():
        setattr(settings, key, value)
    P = sparse.csc_matrix((program.n, program.n))
    return clarabel.DefaultSolver(P, -program.c, A, b, cones, settings).solve()


def solve(program: ConicProgram, tol: float = DEFAULT_TOL, max_iter: int = 200) -> ConicSolution:
    """Solve with the Clarabel interior-point backend, retrying stalled runs with safer settings."""
    try:
        data = _clarabel_data(program)
    except Exception as exc:  # bad program data
        return ConicSolution(None, "failed", info=f"backend error: {exc}")
    tried = []
    for extra in RETRY_SETTINGS:
        try:
            result = _clarabel_run(program, data, tol, max_iter, extra)
        except Exception as exc:  # backend raised (bad data, panic)
            return ConicSolution(None, "failed", info=f"backend error: {exc}")
        raw = str(result.status)
        tried.append(raw)
        if raw not in _STALLED:
            break
        log.debug("solver stalled (%s); retrying with %s", raw, extra)
    info = raw if len(tried) == 1 else " -> ".join(tried)
    status = _STATUS.get(raw, "failed")
    if status not in ("optimal", "near-optimal"):
        return ConicSolution(None, status, iterations=result.iterations, info=info)
    x = np.asarray(result.x, dtype=float)
    report = verify(program, x, tol)
    p_obj, d_obj = -result.obj_val, -result.obj_val_dual
    gap = abs(p_obj - d_obj) / max(1.0, abs(p_obj))
    if status == "optimal" and (report.max_residual > 1e-7 or gap > 1e-7):
        status = "near-optimal"
    return ConicSolution(x, status, report.max_residual, gap, program.objective(x),
                         result.iterations, info)


def solve_or_raise(program: ConicProgram, context: str, tol: float = DEFAULT_TOL) -> ConicSolution:
    sol = solve(program, tol)
    if not sol.ok:
        raise SolverError(f"{context}: solver returned {sol.status} ({sol.info})")
    return sol


# -- verification -----------------------------------------------------------

def cone_residual(cone: str, r: np.ndarray, param=None) -> float:
    """Distance-like violation of ``r`` in ``cone``; 0 when ``r`` is inside."""
    r = np.asarray(r, dtype=float)
    if cone == "zero":
        return float(np.max(np.abs(r), initial=0.0))
    if cone == "nonneg":
        return float(max(0.0, -np.min(r, initial=0.0)))
    if cone == "soc":
        return float(max(0.0, np.linalg.norm(r[1:]) - r[0]))
    if cone == "rsoc":
        u, v, z = r[0], r[1], r[2:]
        t = np.array([(u + v) / SQRT2, (u - v) / SQRT2, *z])
        return cone_residual("soc", t)
    if cone == "psd":
        S = smat(r)
        return float(max(0.0, -np.linalg.eigvalsh(S)[0]))
    if cone == "exp":
        x, y, z = r
        if y > 0 and z > 0:
            return float(max(0.0, x - y * math.log(z / y)))
        return float(max(abs(min(y, 0.0)), max(x, 0.0) if y <= 0 else abs(min(z, 0.0)), -min(z, 0.0)))
    if cone == "pow":
        x, y, z = r
        a = float(param)
        neg = max(-x, -y, 0.0)
        if neg > 0:
            return float(neg + abs(z))
        return float(max(0.0, abs(z) - x ** a * y ** (1.0 - a)))
    raise ValueError(f"unknown cone {cone!r}")


@dataclass(frozen=True)
class ResidualReport:
    residuals: tuple[float, ...]
    tol: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)

    @property
    def failing(self) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.residuals) if r > 10 * self.tol)

    @property
    def ok(self) -> bool:
        return not self.failing

    def check(self, program: ConicProgram | None = None) -> None:
        if self.ok:
            return
        labels = [f"{i}" + (f"({program.blocks[i].cone}:{program.blocks[i].name})" if program else "")
                  for i in self.failing]
        raise VerificationError("cone residuals above tolerance in blocks " + ", ".join(labels))


def verify(program: ConicProgram, solution, tol: float = DEFAULT_TOL) -> ResidualReport:
    """Recompute every block residual from the primal point alone."""
    x = solution.x if isinstance(solution, ConicSolution) else solution
    if x is None:
        raise VerificationError("solution carries no primal point")
    x = np.asarray(x, dtype=float)
    res = tuple(cone_residual(b.cone, b.A @ x + b.b, b.param) for b in program.blocks)
    return ResidualReport(res, tol)
