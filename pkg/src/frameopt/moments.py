"""Moment-relaxation hierarchy with certified global bounds on compliance.

Once the compliance LMI is written out, minimum compliance is a polynomial
optimization problem in x = (c, a): minimize c subject to G(a, c) >= 0,
l'a <= V, 0 <= a_i <= V/l_i.  Scaling every variable into [-1, 1],

    a_i = V (a_sc_i + 1) / (2 l_i),      c = c_hat (c_sc + 1) / 2,

with c_hat the uniform-design compliance, keeps the feasible set inside the
unit ball of each coordinate, which the Lasserre moment hierarchy needs for
convergence.  The order-r relaxation optimizes pseudo-moments y indexed by
monomials of degree <= 2r:

    minimize    sum_alpha p0_alpha y_alpha          (objective polynomial)
    subject to  M_r(y) >= 0                         (moment matrix)
                M_{r-1}(g_j y) >= 0                 (volume and ball localizers)
                M_{r-1}(P y) >= 0                   (matrix localizer of the LMI)
                y_0 = 1,

all expressible in the dual SDP form the interior-point solver consumes.  The
SDP optimum is a lower bound on the global compliance; the repaired
first-moment design gives an FEM upper bound.  The gap between them closing
(or the moment matrix going flat, reported alongside) certifies that a global
optimum has been found.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from frameopt.analysis import (
    DanglingLoadError,
    SingularSystemError,
    compliance,
    uniform_upper_bound,
)
from frameopt.model import FrameAssembly, GroundStructure, ModelError
from frameopt.sdp import SdpBlock, SdpConfig, SdpProblem, SdpSolution, solve_sdp

BASIS_LIMIT = 10 ** 6   # refuse monomial bases beyond this size
RANK_TOL = 1e-6         # relative singular-value cutoff for numerical rank
GAP_TOL = 1e-4          # default relative gap that certifies optimality
MONO_SLACK = 1e-7       # tolerated lower-bound decrease between orders

_OK_STATUS = ("optimal", "near-optimal")

# Moment SDPs are degenerate near optimality: the dual residual typically
# floors around 1e-4 while the gap keeps closing.  Accept such iterates as
# near-optimal; the certificate logic judges the resulting bounds on their
# numerical merits either way.
MOMENT_SDP_CONFIG = SdpConfig(near_gap=1e-3, near_feas=1e-4)

Exponent = tuple[int, ...]


def _add(a: Exponent, b: Exponent) -> Exponent:
    return tuple(x + y for x, y in zip(a, b))


def _unit(n: int, i: int, power: int = 1) -> Exponent:
    alpha = [0] * n
    alpha[i] = power
    return tuple(alpha)


def _power(x: np.ndarray, alpha: Exponent) -> float:
    out = 1.0
    for xi, ai in zip(x, alpha):
        if ai:
            out *= xi ** ai
    return out


@dataclass(frozen=True)
class MonomialBasis:
    """Monomials of total degree <= r in n variables, graded-lex ordered."""

    n: int
    r: int
    exponents: tuple[Exponent, ...]
    index: dict[Exponent, int]

    def __len__(self) -> int:
        return len(self.exponents)


def monomial_basis(n: int, r: int) -> MonomialBasis:
    """Graded-lexicographic basis; bases of lower order are prefixes."""
    if n < 1 or r < 0:
        raise ValueError("need n >= 1 and r >= 0")
    if math.comb(n + r, r) > BASIS_LIMIT:
        raise ValueError(
            f"monomial basis size C({n + r},{r}) = {math.comb(n + r, r)} "
            f"exceeds the {BASIS_LIMIT} limit")
    exponents: list[Exponent] = []
    for degree in range(r + 1):
        for combo in combinations_with_replacement(range(n), degree):
            alpha = [0] * n
            for v in combo:
                alpha[v] += 1
            exponents.append(tuple(alpha))
    index = {alpha: k for k, alpha in enumerate(exponents)}
    return MonomialBasis(n, r, tuple(exponents), index)


def moment_vector(basis: MonomialBasis, x: np.ndarray) -> np.ndarray:
    """Moments of the Dirac measure at x: y_alpha = x^alpha."""
    x = np.asarray(x, dtype=float)
    return np.array([_power(x, alpha) for alpha in basis.exponents])


@dataclass
class ScaledProblem:
    """Design problem mapped onto the unit box, with its polynomial data.

    Variables are x = (c_sc, a_sc_1 ... a_sc_ne); index 0 is the scaled
    compliance.  Scalar constraint polynomials and the coefficient matrices of
    the matrix polynomial P(x) (the compliance LMI on the support-reduced
    DOFs) are keyed by exponent offset; every polynomial has degree <= 2.
    """

    gs: GroundStructure
    c_hat: float
    lengths: np.ndarray
    area_scale: np.ndarray  # s_i = V / (2 l_i), so a_i = s_i (a_sc_i + 1)
    objective: dict[Exponent, float]
    scalar_constraints: list[tuple[str, dict[Exponent, float]]]
    pmi: dict[Exponent, np.ndarray]
    pmi_size: int

    @property
    def n_vars(self) -> int:
        return 1 + self.gs.n_elements

    def areas_from_scaled(self, a_sc: np.ndarray) -> np.ndarray:
        return self.area_scale * (np.asarray(a_sc, dtype=float) + 1.0)

    def scaled_from_areas(self, areas: np.ndarray) -> np.ndarray:
        return np.asarray(areas, dtype=float) / self.area_scale - 1.0

    def compliance_from_scaled(self, c_sc: float) -> float:
        return 0.5 * self.c_hat * (c_sc + 1.0)

    def scaled_from_compliance(self, c: float) -> float:
        return 2.0 * c / self.c_hat - 1.0

    def pmi_at(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the matrix polynomial P(x) densely."""
        out = np.zeros((self.pmi_size, self.pmi_size))
        for delta, mat in self.pmi.items():
            out += mat * _power(x, delta)
        return out


def scale_problem(gs: GroundStructure) -> ScaledProblem:
    """Build the unit-box polynomial formulation around the uniform design."""
    asm = FrameAssembly(gs)
    c_hat, _ = uniform_upper_bound(gs, asm)
    if not math.isfinite(c_hat) or c_hat <= 0.0:
        raise ModelError("uniform design compliance is degenerate; cannot scale")
    ne = gs.n_elements
    n = ne + 1
    svec = gs.volume_bound / (2.0 * asm.lengths)
    zero = (0,) * n

    objective = {zero: 0.5 * c_hat, _unit(n, 0): 0.5 * c_hat}

    volume: dict[Exponent, float] = {zero: 2.0 - float(ne)}
    for i in range(ne):
        volume[_unit(n, 1 + i)] = -1.0
    scalar = [("volume", volume)]
    for i in range(ne):
        scalar.append((f"ball-a{i + 1}", {zero: 1.0, _unit(n, 1 + i, 2): -1.0}))
    scalar.append(("ball-c", {zero: 1.0, _unit(n, 0, 2): -1.0}))

    free = ~asm.fixed
    pos = np.full(asm.n_dof, -1, dtype=int)
    nf = int(free.sum())
    pos[free] = np.arange(nf)
    size = 1 + nf

    pmi: dict[Exponent, np.ndarray] = {}

    def coeff(delta: Exponent) -> np.ndarray:
        if delta not in pmi:
            pmi[delta] = np.zeros((size, size))
        return pmi[delta]

    coeff(zero)[0, 0] += 0.5 * c_hat
    coeff(_unit(n, 0))[0, 0] += 0.5 * c_hat
    f0 = asm.f0[free]
    coeff(zero)[0, 1:] -= f0
    coeff(zero)[1:, 0] -= f0

    for k in range(ne):
        gd = asm.dofs[k]
        keep = free[gd]
        rows = pos[gd[keep]] + 1
        sk = svec[k]
        if asm.f1 is not None:
            fk = asm.f1[k][keep]
            for delta in (zero, _unit(n, 1 + k)):
                m = coeff(delta)
                m[0, rows] -= sk * fk
                m[rows, 0] -= sk * fk
        ka = asm.ka[k][np.ix_(keep, keep)]
        kb = asm.kb[k][np.ix_(keep, keep)]
        ij = np.ix_(rows, rows)
        coeff(zero)[ij] += sk * ka + sk * sk * kb
        coeff(_unit(n, 1 + k))[ij] += sk * ka + 2.0 * sk * sk * kb
        coeff(_unit(n, 1 + k, 2))[ij] += sk * sk * kb

    return ScaledProblem(gs, float(c_hat), asm.lengths.copy(), svec,
                         objective, scalar, pmi, size)


@dataclass
class Relaxation:
    """Order-r moment relaxation assembled as a dual-form SDP."""

    sp: ScaledProblem
    order: int
    y_basis: MonomialBasis          # b_{2r}: one SDP variable per entry
    moment_basis: MonomialBasis     # b_r
    localizer_basis: MonomialBasis  # b_{r-1}
    problem: SdpProblem
    block_names: list[str]

    @property
    def n_moments(self) -> int:
        return len(self.y_basis)


def build_relaxation(sp: ScaledProblem, r: int) -> Relaxation:
    """Assemble the order-r SDP: moment block, localizers, PMI block, y0 = 1."""
    if r < 1:
        raise ValueError("relaxation order must be >= 1")
    n = sp.n_vars
    yb = monomial_basis(n, 2 * r)
    mb = monomial_basis(n, r)
    lb = monomial_basis(n, r - 1)
    yix = yb.index

    blocks: list[SdpBlock] = []
    names: list[str] = []

    var, row, col = [], [], []
    for bpos, beta in enumerate(mb.exponents):
        for gpos in range(bpos, len(mb)):
            var.append(yix[_add(beta, mb.exponents[gpos])])
            row.append(bpos)
            col.append(gpos)
    blocks.append(SdpBlock(len(mb), np.zeros((len(mb), len(mb))),
                           np.array(var), np.array(row), np.array(col),
                           np.ones(len(var))))
    names.append(f"moment-M{r}")

    for name, poly in sp.scalar_constraints:
        var, row, col, val = [], [], [], []
        for bpos, beta in enumerate(lb.exponents):
            for gpos in range(bpos, len(lb)):
                base = _add(beta, lb.exponents[gpos])
                for delta, c in poly.items():
                    var.append(yix[_add(base, delta)])
                    row.append(bpos)
                    col.append(gpos)
                    val.append(c)
        blocks.append(SdpBlock(len(lb), np.zeros((len(lb), len(lb))),
                               np.array(var), np.array(row), np.array(col),
                               np.array(val)))
        names.append(f"localizer-{name}")

    # PMI localizer in basis-major layout: flat index beta * J + s.  For
    # beta < gamma every (s, t) lands in the upper triangle; on the diagonal
    # cell only s <= t does.
    J = sp.pmi_size
    full_trip, diag_trip = [], []
    for delta, mat in sp.pmi.items():
        s_all, t_all = np.nonzero(mat)
        full_trip.append((delta, s_all, t_all, mat[s_all, t_all]))
        s_up, t_up = np.nonzero(np.triu(mat))
        diag_trip.append((delta, s_up, t_up, mat[s_up, t_up]))
    var, row, col, val = [], [], [], []
    for bpos, beta in enumerate(lb.exponents):
        for gpos in range(bpos, len(lb)):
            base = _add(beta, lb.exponents[gpos])
            roff, coff = bpos * J, gpos * J
            for delta, s_, t_, v_ in (diag_trip if gpos == bpos else full_trip):
                yv = yix[_add(base, delta)]
                for s, t, v in zip(s_, t_, v_):
                    var.append(yv)
                    row.append(roff + s)
                    col.append(coff + t)
                    val.append(v)
    size = J * len(lb)
    blocks.append(SdpBlock(size, np.zeros((size, size)),
                           np.array(var), np.array(row), np.array(col),
                           np.array(val)))
    names.append("localizer-pmi")

    b = np.zeros(len(yb))
    for alpha, c in sp.objective.items():
        b[yix[alpha]] += c
    e = np.zeros((1, len(yb)))
    e[0, 0] = 1.0  # the constant monomial is first: y_0 = 1
    problem = SdpProblem(b, blocks, e, np.ones(1))
    return Relaxation(sp, r, yb, mb, lb, problem, names)


@dataclass
class RelaxationSolution:
    y: np.ndarray
    lower: float
    status: str
    sdp: SdpSolution


def solve_relaxation(rel: Relaxation,
                     cfg: SdpConfig | None = None) -> RelaxationSolution:
    """Solve one order; the SDP optimum is the certified lower bound."""
    sol = solve_sdp(rel.problem, cfg or MOMENT_SDP_CONFIG)
    return RelaxationSolution(sol.y, float(sol.objective), sol.status, sol)


def moment_matrix(rel: Relaxation, y: np.ndarray,
                  order: int | None = None) -> np.ndarray:
    """Dense M_order(y); defaults to the relaxation order."""
    if order is None or order == rel.order:
        basis = rel.moment_basis
    else:
        basis = monomial_basis(rel.sp.n_vars, order)
    yix = rel.y_basis.index
    out = np.zeros((len(basis), len(basis)))
    for i, alpha in enumerate(basis.exponents):
        for j in range(i, len(basis)):
            out[i, j] = out[j, i] = y[yix[_add(alpha, basis.exponents[j])]]
    return out


def extract_design(rel: Relaxation, y: np.ndarray) -> tuple[np.ndarray, float]:
    """First-moment design with clamp-and-rescale repair, plus its compliance.

    The repair (clamp a_sc into [-1, 1], rescale onto the volume budget if
    needed) always yields a feasible design, so its FEM compliance is a valid
    upper bound for the global optimum.
    """
    sp = rel.sp
    yix = rel.y_basis.index
    n = sp.n_vars
    a_sc = np.array([y[yix[_unit(n, 1 + i)]] for i in range(sp.gs.n_elements)])
    areas = sp.areas_from_scaled(np.clip(a_sc, -1.0, 1.0))
    vol = float(sp.lengths @ areas)
    if vol > sp.gs.volume_bound > 0.0:
        areas *= sp.gs.volume_bound / vol
    return areas, float(compliance(sp.gs, areas).compliance)


@dataclass(frozen=True)
class RankReport:
    """Numerical ranks of M_r(y) and its order-(r-1) leading block."""

    rank_full: int
    rank_reduced: int
    tol: float

    @property
    def flat(self) -> bool:
        return self.rank_full == self.rank_reduced


def _numerical_rank(mat: np.ndarray, tol: float) -> int:
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv.size == 0 or sv[0] <= 0.0:
        return 0
    return int(np.count_nonzero(sv > tol * sv[0]))


def rank_certificate(rel: Relaxation, y: np.ndarray,
                     tol: float = RANK_TOL) -> RankReport:
    """Flat truncation check: rank M_r(y) == rank M_{r-1}(y).

    The graded basis makes M_{r-1} the leading principal block of M_r, so one
    dense evaluation serves both.  Equal numerical ranks mean the pseudo-
    moments come from an atomic measure supported on as many points as the
    rank, which certifies the relaxation is exact.
    """
    full = moment_matrix(rel, y)
    reduced = len(rel.localizer_basis)
    return RankReport(_numerical_rank(full, tol),
                      _numerical_rank(full[:reduced, :reduced], tol), tol)


@dataclass(frozen=True)
class Certificate:
    """Bound pair for one relaxation order and its optimality verdict."""

    order: int
    lower: float
    upper: float
    gap: float
    verdict: str  # certified-optimal | bounded | failed
    rank_full: int | None = None
    rank_reduced: int | None = None
    areas: np.ndarray | None = None

    @property
    def certified(self) -> bool:
        return self.verdict == "certified-optimal"

    def report(self) -> dict:
        return {
            "r": self.order,
            "c_lower": self.lower,
            "c_upper": self.upper,
            "gap": self.gap,
            "rank_Mr": self.rank_full,
            "rank_Mr_minus_d": self.rank_reduced,
            "certified": self.certified,
            "extracted_areas":
                [] if self.areas is None else [float(a) for a in self.areas],
        }


def gap_certificate(lower: float, upper: float, gap_tol: float = GAP_TOL,
                    order: int = 0, ranks: RankReport | None = None,
                    areas: np.ndarray | None = None) -> Certificate:
    """Classify a (lower, upper) bound pair.

    A lower bound overshooting the upper bound beyond tolerance signals
    numerical failure somewhere in the solve.  A closed relative gap certifies
    global optimality; anything else is an honest two-sided bound.
    """
    gap = upper - lower
    scale = max(1.0, abs(upper))
    if not math.isfinite(lower) or lower - upper > gap_tol * scale:
        verdict = "failed"
    elif math.isfinite(gap) and gap <= gap_tol * scale:
        verdict = "certified-optimal"
    else:
        verdict = "bounded"
    return Certificate(order, float(lower), float(upper), float(gap), verdict,
                       None if ranks is None else ranks.rank_full,
                       None if ranks is None else ranks.rank_reduced,
                       areas)


@dataclass
class HierarchyConfig:
    r_max: int = 3
    gap_tol: float = GAP_TOL
    rank_tol: float = RANK_TOL
    sdp: SdpConfig | None = None


@dataclass
class HierarchyResult:
    certificates: list[Certificate]
    areas: np.ndarray | None
    compliance: float | None
    lower: float
    status: str  # certified-optimal | bounded | failed
    diagnostics: dict


def run_hierarchy(gs: GroundStructure,
                  cfg: HierarchyConfig | None = None) -> HierarchyResult:
    """Run orders r = 1 ... r_max, stopping early once an order certifies.

    Solver failures are recorded per order and the hierarchy moves on; the
    best feasible design found across orders is returned either way.
    """
    cfg = cfg or HierarchyConfig()
    sp = scale_problem(gs)
    certs: list[Certificate] = []
    best_c = math.inf
    best_a: np.ndarray | None = None
    best_lower = -math.inf
    prev_lower = -math.inf
    diag: dict = {"c_hat": sp.c_hat, "orders": [],
                  "monotonicity_violations": []}
    for r in range(1, cfg.r_max + 1):
        try:
            rel = build_relaxation(sp, r)
        except ValueError as exc:
            diag["orders"].append({"r": r, "status": f"skipped: {exc}"})
            break
        rsol = solve_relaxation(rel, cfg.sdp)
        diag["orders"].append({"r": r, "status": rsol.status,
                               "sdp_iterations": rsol.sdp.iterations,
                               "n_moments": rel.n_moments})
        if rsol.status not in _OK_STATUS:
            certs.append(Certificate(r, math.nan, math.inf, math.nan, "failed"))
            continue
        lower = rsol.lower
        if lower < prev_lower - MONO_SLACK * max(1.0, abs(prev_lower)):
            diag["monotonicity_violations"].append((r, prev_lower, lower))
        prev_lower = max(prev_lower, lower)
        try:
            areas, upper = extract_design(rel, rsol.y)
        except (SingularSystemError, DanglingLoadError):
            areas, upper = None, math.inf
        ranks = rank_certificate(rel, rsol.y, cfg.rank_tol)
        cert = gap_certificate(lower, upper, cfg.gap_tol, order=r,
                               ranks=ranks, areas=areas)
        certs.append(cert)
        if areas is not None and upper < best_c:
            best_c, best_a = upper, areas
        if cert.verdict != "failed":
            best_lower = max(best_lower, lower)
        if cert.certified:
            break
    if any(c.certified for c in certs):
        status = "certified-optimal"
    elif best_a is not None:
        status = "bounded"
    else:
        status = "failed"
    return HierarchyResult(certs, best_a,
                           None if best_a is None else best_c,
                           best_lower, status, diag)
