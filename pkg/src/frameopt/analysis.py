"""Equilibrium solves and compliance evaluation.

Zero-area substructures are handled with pseudo-inverse semantics: after
removing supported DOFs, any row of K whose entries all fall below
1e-14 * trace(K) is dropped ("dangling"), provided it carries no load.
On the remaining SPD system a dense Cholesky factorization is used; the
benchmark problems stay below ~900 DOFs so sparsity machinery would not
pay for itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from frameopt.model import FrameAssembly, GroundStructure, uniform_design

DANGLING_ROW_TOL = 1e-14
DANGLING_LOAD_TOL = 1e-12


class SingularSystemError(RuntimeError):
    """Reduced stiffness matrix is not positive definite at this design."""


class DanglingLoadError(RuntimeError):
    """A load acts on a DOF whose incident members all have zero stiffness."""


@dataclass
class ReducedSystem:
    free: np.ndarray        # full-vector indices kept in the reduced system
    K: np.ndarray
    f: np.ndarray
    n_dof: int
    n_dangling: int = 0

    def scatter(self, u_hat: np.ndarray) -> np.ndarray:
        u = np.zeros(self.n_dof)
        u[self.free] = u_hat
        return u


@dataclass
class AnalysisResult:
    u: np.ndarray
    compliance: float
    energy_stiffness: np.ndarray   # per element: u' (dK/da_i) u
    energy_load: np.ndarray        # per element: 2 u' (df/da_i)


def reduce(K: np.ndarray, f: np.ndarray, fixed: np.ndarray,
           drop_dangling: bool = True) -> ReducedSystem:
    """Remove supported DOFs and, optionally, dangling zero-stiffness DOFs."""
    n = K.shape[0]
    free = np.flatnonzero(~np.asarray(fixed, dtype=bool))
    Ks = K[np.ix_(free, free)]
    n_dangling = 0
    if drop_dangling and free.size:
        row_scale = np.max(np.abs(Ks), axis=1, initial=0.0)
        floor = DANGLING_ROW_TOL * max(np.trace(K), 0.0)
        dangling = row_scale <= floor
        n_dangling = int(np.count_nonzero(dangling))
        if n_dangling:
            dropped = free[dangling]
            fnorm = np.linalg.norm(f)
            bad = np.abs(f[dropped]) > DANGLING_LOAD_TOL * fnorm
            if np.any(bad):
                idx = dropped[np.argmax(np.abs(f[dropped]))]
                raise DanglingLoadError(
                    f"load of magnitude {abs(f[idx]):.3g} acts on dangling DOF {idx}"
                )
            free = free[~dangling]
            Ks = K[np.ix_(free, free)]
    return ReducedSystem(free=free, K=Ks, f=f[free], n_dof=n, n_dangling=n_dangling)


def solve_displacements(rs: ReducedSystem) -> np.ndarray:
    """Solve K_hat u_hat = f_hat and scatter to full length."""
    if rs.free.size == 0:
        return np.zeros(rs.n_dof)
    if not np.any(rs.f):
        return np.zeros(rs.n_dof)
    try:
        factor = cho_factor(rs.K, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"stiffness not positive definite: {exc}") from exc
    u_hat = cho_solve(factor, rs.f, check_finite=False)
    fnorm = np.linalg.norm(rs.f)
    # A couple of refinement sweeps recover accuracy on badly scaled designs.
    for _ in range(3):
        residual = rs.f - rs.K @ u_hat
        if np.linalg.norm(residual) <= 1e-10 * fnorm:
            break
        u_hat += cho_solve(factor, residual, check_finite=False)
    # Normwise backward error: long slender chains are ill-conditioned, so
    # the residual is judged against ||K|| ||u|| + ||f||, not ||f|| alone.
    scale = fnorm + np.linalg.norm(rs.K) * np.linalg.norm(u_hat)
    if np.linalg.norm(rs.K @ u_hat - rs.f) > 1e-9 * scale:
        raise SingularSystemError("equilibrium residual exceeds tolerance")
    return rs.scatter(u_hat)


def compliance(gs: GroundStructure, a: np.ndarray,
               assembly: FrameAssembly | None = None) -> AnalysisResult:
    """Compliance f(a)'u and per-element energy terms at a design."""
    asm = assembly if assembly is not None else FrameAssembly(gs)
    K = asm.stiffness(a)
    f = asm.loads(a)
    rs = reduce(K, f, asm.fixed)
    u = solve_displacements(rs)
    c = float(f @ u)
    ek, ef = asm.element_energies(np.asarray(a, dtype=float), u)
    return AnalysisResult(u=u, compliance=c, energy_stiffness=ek, energy_load=ef)


def compliance_gradient(result: AnalysisResult) -> np.ndarray:
    """Adjoint gradient dc/da_i = 2 u'(df/da_i) - u'(dK/da_i)u.

    The adjoint variable coincides with the displacement field, so no
    second solve is needed.
    """
    return result.energy_load - result.energy_stiffness


def uniform_upper_bound(gs: GroundStructure,
                        assembly: FrameAssembly | None = None) -> tuple[float, np.ndarray]:
    """Compliance of the volume-saturating uniform design."""
    asm = assembly if assembly is not None else FrameAssembly(gs)
    a = uniform_design(gs, asm)
    res = compliance(gs, a, asm)
    return res.compliance, a


def element_energies(gs: GroundStructure, a: np.ndarray, u: np.ndarray,
                     assembly: FrameAssembly | None = None) -> tuple[np.ndarray, np.ndarray]:
    asm = assembly if assembly is not None else FrameAssembly(gs)
    return asm.element_energies(np.asarray(a, dtype=float), u)
