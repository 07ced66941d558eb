"""Dense primal-dual interior-point solver for linear SDPs.

Problem form, with one vector variable y of length m:

    minimize    b' y
    subject to  S_k(y) = sum_i y_i A_i(k) - C(k)  >=  0   (PSD, per block k)
                E y = d

The dual introduces a PSD matrix Z_k per block and a multiplier nu for the
equalities: maximize sum_k <C(k), Z_k> + d'nu subject to
sum_k <A_i(k), Z_k> + (E'nu)_i = b_i and Z_k >= 0.  The gap between the two
objectives on any iterate equals

    <S, Z> + rd'y - <rp, Z> - re'nu

exactly, where rp, rd, re are the residuals of the three linear equations, so
weak duality holds up to rounding whenever the residuals are small.

The solver follows the scaled Mehrotra predictor-corrector recipe: Nesterov-
Todd scaling points are computed per block from Cholesky factors of S and Z
through one SVD, which renders the scaled pair jointly diagonal.  The
linearized complementarity equation then reduces to an elementwise divide,
and each step costs one dense Schur-complement assembly and factorization.
Infeasibility and unboundedness are reported through divergence heuristics,
not certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky, eigvalsh, solve_triangular, svd


class SdpError(ValueError):
    """Malformed SDP data."""


SYM_RTOL = 1e-12        # relative symmetry check on input matrices
RANK_TOL = 1e-10        # QR tolerance for the full-row-rank check on E


def _as_symmetric(mat: np.ndarray, what: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise SdpError(f"{what} must be square, got shape {mat.shape}")
    scale = max(np.abs(mat).max(), 1.0)
    if np.abs(mat - mat.T).max() > SYM_RTOL * scale:
        raise SdpError(f"{what} is not symmetric")
    return 0.5 * (mat + mat.T)


@dataclass
class SdpBlock:
    """One PSD constraint sum_i y_i A_i - C >= 0, with the A_i stored sparsely.

    The coefficient entries are coordinate triplets over the upper triangle
    (row <= col); the mirror image is implied.  `var` holds the 0-based index
    of the variable each entry belongs to.
    """

    n: int
    c: np.ndarray
    var: np.ndarray
    row: np.ndarray
    col: np.ndarray
    val: np.ndarray

    def __post_init__(self) -> None:
        if self.n < 1:
            raise SdpError("block size must be >= 1")
        self.c = _as_symmetric(self.c, "block C")
        if self.c.shape[0] != self.n:
            raise SdpError("C has the wrong size for its block")
        self.var = np.asarray(self.var, dtype=int)
        self.row = np.asarray(self.row, dtype=int)
        self.col = np.asarray(self.col, dtype=int)
        self.val = np.asarray(self.val, dtype=float)
        sizes = {arr.shape for arr in (self.var, self.row, self.col, self.val)}
        if len(sizes) != 1:
            raise SdpError("entry arrays must have equal length")
        if self.var.size and (self.row.min() < 0 or self.col.max() >= self.n):
            raise SdpError("entry indices out of range")
        if np.any(self.row > self.col):
            raise SdpError("entries must lie in the upper triangle (row <= col)")

    @classmethod
    def from_matrices(cls, c: np.ndarray, mats: list[np.ndarray]) -> "SdpBlock":
        """Build a block from dense symmetric A_1 ... A_m."""
        c = _as_symmetric(c, "block C")
        n = c.shape[0]
        var, row, col, val = [], [], [], []
        for i, mat in enumerate(mats):
            mat = _as_symmetric(mat, f"block A_{i + 1}")
            if mat.shape[0] != n:
                raise SdpError("pencil matrices must share the block size")
            r, s = np.nonzero(np.triu(mat))
            var.extend([i] * r.size)
            row.extend(r)
            col.extend(s)
            val.extend(mat[r, s])
        return cls(n, c, np.array(var, int), np.array(row, int),
                   np.array(col, int), np.array(val, float))

    def coefficient(self, i: int) -> np.ndarray:
        """Dense A_i."""
        mask = self.var == i
        mat = np.zeros((self.n, self.n))
        mat[self.row[mask], self.col[mask]] = self.val[mask]
        return mat + np.triu(mat, 1).T


@dataclass
class SdpProblem:
    """min b'y  s.t.  sum y_i A_i(k) - C(k) >= 0 per block,  E y = d."""

    b: np.ndarray
    blocks: list[SdpBlock]
    e: np.ndarray | None = None
    d: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float))
        m = self.b.size
        for blk in self.blocks:
            if blk.var.size and blk.var.max() >= m:
                raise SdpError("block references a variable beyond len(b)")
        if self.e is None:
            self.e = np.zeros((0, m))
        self.e = np.atleast_2d(np.asarray(self.e, dtype=float))
        if self.d is None:
            self.d = np.zeros(self.e.shape[0])
        self.d = np.atleast_1d(np.asarray(self.d, dtype=float))
        if self.e.shape != (self.d.size, m):
            raise SdpError(f"E must be {self.d.size} x {m}, got {self.e.shape}")
        if self.d.size:
            diag = np.abs(np.diag(np.linalg.qr(self.e.T, mode="r")))
            if self.d.size > m or np.any(diag[: self.d.size] <= RANK_TOL * max(diag.max(), 1.0)):
                raise SdpError("equality matrix E must have full row rank")

    @property
    def m(self) -> int:
        return self.b.size


@dataclass
class SdpConfig:
    max_iter: int = 200
    tol_gap: float = 1e-7        # relative duality gap for status optimal
    tol_feas: float = 1e-8       # relative feasibility for status optimal
    near_gap: float = 1e-5       # relaxed thresholds for near-optimal
    near_feas: float = 1e-6
    step_fraction: float = 0.98  # fraction-to-the-boundary
    diverge: float = 1e12        # objective blow-up threshold
    stall_steps: int = 3         # consecutive tiny steps before giving up
    patience: int = 30           # iterations without a new best iterate


@dataclass
class SdpSolution:
    y: np.ndarray
    nu: np.ndarray
    z: list[np.ndarray]
    objective: float
    dual_objective: float
    gap: float
    rel_gap: float
    status: str
    iterations: int
    diagnostics: dict = field(default_factory=dict)


@dataclass
class KktReport:
    """Residuals of a candidate primal-dual pair, in the original data scale."""

    equality_residual: float          # ||E y - d||
    dual_residual: float              # ||b - A'(Z) - E'nu||
    complementarity: float            # sum_k <A(y) - C, Z_k>
    slack_min_eigs: tuple[float, ...]  # min eig of A(y) - C per block
    dual_min_eigs: tuple[float, ...]   # min eig of Z_k per block

    @property
    def primal_residual(self) -> float:
        """Equality residual plus the worst PSD violation of the slack."""
        viol = max((max(0.0, -lam) for lam in self.slack_min_eigs), default=0.0)
        return max(self.equality_residual, viol)


class _BlockData:
    """Runtime view of a block: scaled pencil, flat operators, per-var slices."""

    def __init__(self, blk: SdpBlock, m: int):
        self.n = blk.n
        # Mirror the upper triangle so every stored matrix is fully populated.
        off = blk.row != blk.col
        var = np.concatenate([blk.var, blk.var[off]])
        row = np.concatenate([blk.row, blk.col[off]])
        col = np.concatenate([blk.col, blk.row[off]])
        val = np.concatenate([blk.val, blk.val[off]])
        # Coalesce duplicate (var, row, col) triplets so the Schur kernels can
        # assume each position appears once per variable.
        if var.size:
            key = (var * blk.n + row) * blk.n + col
            uniq, inverse = np.unique(key, return_inverse=True)
            val = np.bincount(inverse, weights=val, minlength=uniq.size)
            col = uniq % blk.n
            row = (uniq // blk.n) % blk.n
            var = uniq // (blk.n * blk.n)
        norms = np.sqrt(np.bincount(var, val * val, minlength=m)) if var.size else np.zeros(m)
        self.scale = max(1.0, np.linalg.norm(blk.c), norms.max() if m else 1.0)
        val = val / self.scale
        self.c = blk.c / self.scale
        self.var = var
        self.row = row
        self.col = col
        self.val = val
        self.support = np.unique(self.var)
        self.ptr = np.searchsorted(self.var, np.arange(m + 1))
        self.opmat = scipy.sparse.csr_matrix(
            (self.val, (self.var, self.row * self.n + self.col)), shape=(m, self.n * self.n))

    def apply(self, y: np.ndarray) -> np.ndarray:
        """A(y) as a dense symmetric matrix (scaled data)."""
        return np.asarray(self.opmat.T @ y).reshape(self.n, self.n)

    def adjoint(self, z: np.ndarray) -> np.ndarray:
        """Vector of <A_i, Z> for all i (scaled data)."""
        return np.asarray(self.opmat @ z.ravel())

    def schur_accumulate(self, minv: np.ndarray, out: np.ndarray) -> None:
        """out[:, v] += <A_i, Winv A_v Winv> for every supported variable v."""
        n = self.n
        dense_cost_cutoff = 2 * n
        for v in self.support:
            lo, hi = self.ptr[v], self.ptr[v + 1]
            if hi - lo < dense_cost_cutoff:
                left = minv[:, self.row[lo:hi]] * self.val[lo:hi]
                t = left @ minv[self.col[lo:hi], :]
                t = 0.5 * (t + t.T)
            else:
                a_v = np.zeros((n, n))
                a_v[self.row[lo:hi], self.col[lo:hi]] = self.val[lo:hi]
                t = minv @ a_v @ minv
                t = 0.5 * (t + t.T)
            out[:, v] += self.opmat @ t.ravel()


def _max_step(chol_lower: np.ndarray, delta: np.ndarray) -> float:
    """Largest t with X + t*Delta still PSD, given X = L L'."""
    w = solve_triangular(chol_lower, delta, lower=True, check_finite=False)
    w = solve_triangular(chol_lower, w.T, lower=True, check_finite=False)
    lam = eigvalsh(0.5 * (w + w.T), check_finite=False)[0]
    if lam >= -1e-14:
        return np.inf
    return -1.0 / lam


def _chol(mat: np.ndarray) -> np.ndarray:
    try:
        return cholesky(mat, lower=True, check_finite=False)
    except LinAlgError:
        bump = 1e-14 * max(np.abs(np.diag(mat)).max(), 1.0)
        return cholesky(mat + bump * np.eye(mat.shape[0]), lower=True, check_finite=False)


def solve_sdp(p: SdpProblem, cfg: SdpConfig | None = None) -> SdpSolution:
    """Scaled predictor-corrector path following; deterministic and seed-free."""
    cfg = cfg or SdpConfig()
    m = p.m
    if not p.blocks:
        return _solve_unconstrained(p)

    blocks = [_BlockData(blk, m) for blk in p.blocks]
    n_total = sum(bd.n for bd in blocks)
    # Row-normalize the equalities; nu is rescaled back on exit.
    e_norms = np.maximum(np.linalg.norm(p.e, axis=1), 1.0) if p.d.size else np.zeros(0)
    e_int = p.e / e_norms[:, None] if p.d.size else p.e
    d_int = p.d / e_norms if p.d.size else p.d

    y = np.zeros(m)
    nu = np.zeros(p.d.size)
    b_scale = 1.0 + float(np.abs(p.b).max(initial=0.0))
    s_mats = [max(10.0, math.sqrt(bd.n), np.linalg.norm(bd.c)) * np.eye(bd.n) for bd in blocks]
    z_mats = [max(10.0, math.sqrt(bd.n), b_scale) * np.eye(bd.n) for bd in blocks]

    best = None
    best_score = np.inf
    history = []
    stall = 0
    since_best = 0
    status = "numerical-failure"
    reason = "iteration limit"
    iterations = 0

    for it in range(1, cfg.max_iter + 1):
        iterations = it
        # Residuals of S = A(y) - C, Ey = d, A'(Z) + E'nu = b; a full Newton
        # step with ds = A(dy) - rp etc. zeroes all three.
        rp = [bd.c + s - bd.apply(y) for bd, s in zip(blocks, s_mats)]
        re = d_int - e_int @ y
        rd = p.b - e_int.T @ nu
        for bd, z in zip(blocks, z_mats):
            rd -= bd.adjoint(z)
        mu = sum(float(np.tensordot(s, z)) for s, z in zip(s_mats, z_mats)) / n_total

        metrics = _convergence_metrics(p, blocks, y, nu, z_mats, rp, rd, re)
        # gap - correction = <S, Z> exactly; recorded so the weak-duality
        # identity can be audited on every iterate.
        correction = float(rd @ y) - float(re @ nu) - sum(
            float(np.tensordot(rp_k, z)) for rp_k, z in zip(rp, z_mats))
        history.append({"iteration": it, "mu": mu, "duality_correction": correction,
                        **metrics})
        if not math.isfinite(mu):
            status, reason = "numerical-failure", "non-finite iterate"
            break
        score = max(metrics["rel_gap_abs"], metrics["rel_eq"], metrics["rel_dual"],
                    metrics["rel_psd_violation"])
        if score < best_score:
            best_score = score
            best = (y.copy(), nu.copy(), [z.copy() for z in z_mats], metrics)
            since_best = 0
        else:
            # Degenerate problems grind to a halt with mu still shrinking;
            # stop polishing once the best iterate stops improving.
            since_best += 1
            if since_best >= cfg.patience:
                status, reason = "numerical-failure", "no further progress"
                break
        if _is_within(metrics, cfg.tol_feas, cfg.tol_gap):
            status, reason = "optimal", "tolerances met"
            break
        if metrics["objective"] < -cfg.diverge:
            status, reason = "unbounded", "primal objective diverging"
            break
        if metrics["dual_objective"] > cfg.diverge or \
                max(np.linalg.norm(z) for z in z_mats) > cfg.diverge:
            status, reason = "infeasible", "dual objective diverging"
            break

        # Nesterov-Todd scaling per block: G' Z G = Ginv S Ginv' = diag(sig).
        # Late iterates of degenerate problems can drop positive definiteness
        # to roundoff; that ends the run on the best iterate seen so far.
        try:
            factors = []
            for s, z in zip(s_mats, z_mats):
                ls = _chol(s)
                lz = _chol(z)
                u, sig, vt = svd(lz.T @ ls, check_finite=False)
                root = np.sqrt(sig)
                g = ls @ (vt.T / root)
                ginv = (root[:, None] * vt) @ solve_triangular(
                    ls, np.eye(ls.shape[0]), lower=True, check_finite=False)
                winv = ginv.T @ ginv
                factors.append((ls, lz, g, ginv, winv, sig))

            schur = np.zeros((m, m))
            for bd, (_, _, _, _, winv, _) in zip(blocks, factors):
                bd.schur_accumulate(winv, schur)
            schur = 0.5 * (schur + schur.T)
            try:
                schur_f = cho_factor(schur, lower=True, check_finite=False)
            except LinAlgError:
                bump = 1e-12 * max(np.abs(np.diag(schur)).max(), 1.0)
                schur_f = cho_factor(schur + bump * np.eye(m), lower=True, check_finite=False)

            def newton(n_mats):
                h = -rd
                for bd, (_, _, _, _, winv, _), n_mat, rp_k in zip(blocks, factors, n_mats, rp):
                    h = h + bd.adjoint(n_mat + winv @ rp_k @ winv)
                if p.d.size:
                    minv_h = cho_solve(schur_f, h, check_finite=False)
                    minv_et = cho_solve(schur_f, e_int.T, check_finite=False)
                    lhs = e_int @ minv_et
                    dnu = np.linalg.solve(lhs, re - e_int @ minv_h)
                    dy = minv_h + minv_et @ dnu
                else:
                    dnu = np.zeros(0)
                    dy = cho_solve(schur_f, h, check_finite=False)
                ds = [bd.apply(dy) - rp_k for bd, rp_k in zip(blocks, rp)]
                dz = [n_mat - winv @ ds_k @ winv
                      for (_, _, _, _, winv, _), n_mat, ds_k in zip(factors, n_mats, ds)]
                return dy, dnu, ds, dz

            # Predictor: target sym(V dZ~ + dS~ V) = -V^2, whose unscaled N is -Z.
            dy_a, dnu_a, ds_a, dz_a = newton([-z for z in z_mats])
            alpha_pa = min(1.0, min(_max_step(f[0], d) for f, d in zip(factors, ds_a)))
            alpha_da = min(1.0, min(_max_step(f[1], d) for f, d in zip(factors, dz_a)))
            mu_aff = sum(float(np.tensordot(s + alpha_pa * ds_k, z + alpha_da * dz_k))
                         for s, z, ds_k, dz_k in zip(s_mats, z_mats, ds_a, dz_a)) / n_total
            sigma = min(1.0, max(1e-8, (max(mu_aff, 0.0) / mu) ** 3))

            # Corrector: subtract the second-order term in the scaled space.
            n_mats = []
            for (_, _, g, ginv, _, sig), ds_k, dz_k in zip(factors, ds_a, dz_a):
                ds_t = ginv @ ds_k @ ginv.T
                dz_t = g.T @ dz_k @ g
                cross = ds_t @ dz_t
                rc = sigma * mu * np.eye(len(sig)) - np.diag(sig * sig) - 0.5 * (cross + cross.T)
                t_mat = 2.0 * rc / np.add.outer(sig, sig)
                n_mats.append(ginv.T @ t_mat @ ginv)
            dy, dnu, ds, dz = newton(n_mats)

            alpha_p = min(1.0, cfg.step_fraction * min(_max_step(f[0], d)
                                                       for f, d in zip(factors, ds)))
            alpha_d = min(1.0, cfg.step_fraction * min(_max_step(f[1], d)
                                                       for f, d in zip(factors, dz)))
            history[-1].update({"alpha_p": alpha_p, "alpha_d": alpha_d, "sigma": sigma})

            y = y + alpha_p * dy
            nu = nu + alpha_d * dnu
            s_mats = [0.5 * ((s + alpha_p * d) + (s + alpha_p * d).T) for s, d in zip(s_mats, ds)]
            z_mats = [0.5 * ((z + alpha_d * d) + (z + alpha_d * d).T) for z, d in zip(z_mats, dz)]

        except LinAlgError:
            status, reason = "numerical-failure", "lost positive definiteness"
            break

        if max(alpha_p, alpha_d) < 1e-5:
            stall += 1
            if stall >= cfg.stall_steps:
                status, reason = "numerical-failure", "step lengths collapsed"
                break
        else:
            stall = 0

    y_best, nu_best, z_best, met = best if best is not None else (y, nu, z_mats, metrics)
    if status not in ("optimal", "unbounded", "infeasible"):
        if _is_within(met, cfg.tol_feas, cfg.tol_gap):
            status = "optimal"
        elif _is_within(met, cfg.near_feas, cfg.near_gap):
            status = "near-optimal"
        elif met["rel_psd_violation"] > cfg.near_feas and met["rel_dual"] < cfg.near_feas:
            # Slack residual cannot be driven out while the dual stays clean:
            # treat the primal constraints as inconsistent.
            status = "infeasible"

    # Internal pencils are the originals over bd.scale, so the dual matrix in
    # original units is Z/scale; likewise nu picks up the row normalization.
    z_out = [z / bd.scale for bd, z in zip(blocks, z_best)]
    nu_out = nu_best / e_norms if p.d.size else nu_best
    return SdpSolution(
        y=y_best, nu=nu_out, z=z_out,
        objective=met["objective"], dual_objective=met["dual_objective"],
        gap=met["gap"], rel_gap=met["rel_gap"], status=status, iterations=iterations,
        diagnostics={"history": history, "reason": reason, "best_score": best_score},
    )


def _convergence_metrics(p, blocks, y, nu, z_mats, rp, rd, re) -> dict:
    """Original-scale objective values and relative residuals for one iterate."""
    pobj = float(p.b @ y)
    dobj = 0.0
    psd_viol = 0.0
    for bd, z in zip(blocks, z_mats):
        dobj += float(np.tensordot(bd.c, z))
        slack = bd.apply(y) - bd.c
        lam = eigvalsh(slack, check_finite=False)[0]
        scale = 1.0 + float(np.linalg.norm(slack))
        psd_viol = max(psd_viol, max(0.0, -lam) / scale)
    if p.d.size:
        dobj += float((p.d / np.maximum(np.linalg.norm(p.e, axis=1), 1.0)) @ nu)
        eq = float(np.linalg.norm(re)) / (1.0 + float(np.linalg.norm(p.d)))
    else:
        eq = 0.0
    gap = pobj - dobj
    denom = 1.0 + abs(pobj) + abs(dobj)
    return {
        "objective": pobj,
        "dual_objective": dobj,
        "gap": gap,
        "rel_gap": gap / denom,
        "rel_gap_abs": abs(gap) / denom,
        "rel_eq": eq,
        "rel_dual": float(np.linalg.norm(rd)) / (1.0 + float(np.linalg.norm(p.b))),
        "rel_psd_violation": psd_viol,
    }


def _is_within(metrics: dict, tol_feas: float, tol_gap: float) -> bool:
    return (metrics["rel_eq"] <= tol_feas and metrics["rel_dual"] <= tol_feas
            and metrics["rel_psd_violation"] <= tol_feas
            and metrics["rel_gap_abs"] <= tol_gap)


def _solve_unconstrained(p: SdpProblem) -> SdpSolution:
    """No PSD blocks: the problem is a linear program over Ey = d alone."""
    m = p.m
    if p.d.size == 0:
        status = "optimal" if not np.any(p.b) else "unbounded"
        return SdpSolution(np.zeros(m), np.zeros(0), [], 0.0, 0.0, 0.0, 0.0, status, 0,
                           {"reason": "no constraints"})
    y, *_ = np.linalg.lstsq(p.e, p.d, rcond=None)
    nu, *_ = np.linalg.lstsq(p.e.T, p.b, rcond=None)
    if np.linalg.norm(p.e.T @ nu - p.b) > 1e-9 * (1.0 + np.linalg.norm(p.b)):
        return SdpSolution(y, nu, [], float(p.b @ y), -np.inf, np.inf, np.inf,
                           "unbounded", 0, {"reason": "objective not in row space"})
    obj = float(p.b @ y)
    dobj = float(p.d @ nu)
    gap = obj - dobj
    return SdpSolution(y, nu, [], obj, dobj, gap, abs(gap) / (1 + abs(obj) + abs(dobj)),
                       "optimal", 0, {"reason": "equality-constrained LP"})


def check_kkt(p: SdpProblem, sol: SdpSolution) -> KktReport:
    """Recompute all optimality residuals from the original problem data."""
    y = np.asarray(sol.y, dtype=float)
    rd = p.b - p.e.T @ sol.nu if p.d.size else p.b.copy()
    comp = 0.0
    slack_eigs = []
    dual_eigs = []
    for blk, z in zip(p.blocks, sol.z):
        slack = -blk.c.copy()
        full_row = np.concatenate([blk.row, blk.col[blk.row != blk.col]])
        full_col = np.concatenate([blk.col, blk.row[blk.row != blk.col]])
        full_var = np.concatenate([blk.var, blk.var[blk.row != blk.col]])
        full_val = np.concatenate([blk.val, blk.val[blk.row != blk.col]])
        np.add.at(slack, (full_row, full_col), full_val * y[full_var])
        comp += float(np.tensordot(slack, z))
        slack_eigs.append(float(eigvalsh(slack, check_finite=False)[0]))
        dual_eigs.append(float(eigvalsh(z, check_finite=False)[0]))
        np.subtract.at(rd, full_var, full_val * z[full_row, full_col])
    eq = float(np.linalg.norm(p.e @ y - p.d)) if p.d.size else 0.0
    return KktReport(
        equality_residual=eq,
        dual_residual=float(np.linalg.norm(rd)),
        complementarity=comp,
        slack_min_eigs=tuple(slack_eigs),
        dual_min_eigs=tuple(dual_eigs),
    )


# -- debug dump ---------------------------------------------------------------

DUMP_HEADER = "sdp 1"


def dump_problem(p: SdpProblem) -> str:
    """Serialize to a line-oriented text format for external cross-checks.

    Lines:
        sdp 1
        vars <m>
        minimize <i> <value>            one per nonzero of b (1-based i)
        block <k> <n>                   one per block, in order (1-based k)
        entry <k> <i> <j> <v> <value>   upper-triangle nonzero; v=0 means C,
                                        otherwise the 1-based variable index
        eq <r> <i> <value>              one per nonzero of E (1-based r, i)
        rhs <r> <value>                 one per nonzero of d
    """
    out = [DUMP_HEADER, f"vars {p.m}"]
    for i in np.nonzero(p.b)[0]:
        out.append(f"minimize {i + 1} {float(p.b[i])!r}")
    for k, blk in enumerate(p.blocks, start=1):
        out.append(f"block {k} {blk.n}")
        rows, cols = np.nonzero(np.triu(blk.c))
        for i, j in zip(rows, cols):
            out.append(f"entry {k} {i + 1} {j + 1} 0 {float(blk.c[i, j])!r}")
        for v, i, j, val in zip(blk.var, blk.row, blk.col, blk.val):
            out.append(f"entry {k} {i + 1} {j + 1} {v + 1} {float(val)!r}")
    for r, i in zip(*np.nonzero(p.e)):
        out.append(f"eq {r + 1} {i + 1} {float(p.e[r, i])!r}")
    for r in np.nonzero(p.d)[0]:
        out.append(f"rhs {r + 1} {float(p.d[r])!r}")
    return "\n".join(out) + "\n"


def parse_problem(text: str) -> SdpProblem:
    """Inverse of dump_problem."""
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or " ".join(lines[0]) != DUMP_HEADER:
        raise SdpError("missing dump header")
    m = None
    b = None
    block_sizes: dict[int, int] = {}
    entries: list[tuple[int, int, int, int, float]] = []
    eq_entries: list[tuple[int, int, float]] = []
    rhs_entries: list[tuple[int, float]] = []
    for parts in lines[1:]:
        tag = parts[0]
        if tag == "vars":
            m = int(parts[1])
            b = np.zeros(m)
        elif tag == "minimize":
            b[int(parts[1]) - 1] = float(parts[2])
        elif tag == "block":
            block_sizes[int(parts[1])] = int(parts[2])
        elif tag == "entry":
            k, i, j, v = (int(x) for x in parts[1:5])
            entries.append((k, i - 1, j - 1, v - 1, float(parts[5])))
        elif tag == "eq":
            eq_entries.append((int(parts[1]) - 1, int(parts[2]) - 1, float(parts[3])))
        elif tag == "rhs":
            rhs_entries.append((int(parts[1]) - 1, float(parts[2])))
        else:
            raise SdpError(f"unknown dump line tag {tag!r}")
    if m is None:
        raise SdpError("dump lacks a vars line")
    blocks = []
    for k in sorted(block_sizes):
        n = block_sizes[k]
        c = np.zeros((n, n))
        var, row, col, val = [], [], [], []
        for bk, i, j, v, value in entries:
            if bk != k:
                continue
            if v < 0:
                c[i, j] = value
                c[j, i] = value
            else:
                var.append(v)
                row.append(i)
                col.append(j)
                val.append(value)
        blocks.append(SdpBlock(n, c, np.array(var, int), np.array(row, int),
                               np.array(col, int), np.array(val, float)))
    n_eq = 1 + max((r for r, _, _ in eq_entries), default=-1)
    n_eq = max(n_eq, 1 + max((r for r, _ in rhs_entries), default=-1))
    e = np.zeros((n_eq, m))
    d = np.zeros(n_eq)
    for r, i, value in eq_entries:
        e[r, i] = value
    for r, value in rhs_entries:
        d[r] = value
    return SdpProblem(b=b, blocks=blocks, e=e, d=d)
