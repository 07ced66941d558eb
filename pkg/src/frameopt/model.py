"""Ground-structure model for 2-D frame topology optimization.

A ground structure is a fixed set of nodes and candidate Euler-Bernoulli
frame elements; optimization picks the cross-sectional areas ``a`` (possibly
zero) subject to a volume budget.  Each node carries three global DOFs
(u_x, u_y, theta), ordered by node position in the node list; rotations are
counterclockwise-positive.

The second moment of area follows the one-parameter law I = c_I * a**2, so
global stiffness entries are polynomials of degree <= 2 in the areas (axial
terms linear, bending terms quadratic), while load vectors are affine in the
areas (self-weight contributes rho * g * a_i per unit length, applied as
work-equivalent nodal loads).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Cross-section coefficients c_I in I = c_I * a**2.
SQUARE_SECTION = 1.0 / 12.0              # solid square: I = h**4/12, a = h**2
CIRCLE_SECTION = 1.0 / (4.0 * math.pi)   # solid circle: I = pi*r**4/4, a = pi*r**2
PLATE_GIRDER_SECTION = 58.0 / 27.0       # stiffened plate profile: I = 696*t**4, a = 18*t**2

SECTION_COEFFICIENTS = {
    "square": SQUARE_SECTION,
    "circle": CIRCLE_SECTION,
    "plate-girder": PLATE_GIRDER_SECTION,
}

DOF_NAMES = ("ux", "uy", "rot")


class ModelError(ValueError):
    """Malformed ground-structure input."""


class MechanismError(ModelError):
    """The supported structure admits a zero-energy (rigid-body) mode."""


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class Element:
    """Frame element between two nodes with I = c_i * a**2."""

    id: int
    node_a: int
    node_b: int
    young_modulus: float = 1.0
    c_i: float = SQUARE_SECTION


@dataclass(frozen=True)
class Support:
    node: int
    ux: bool = False
    uy: bool = False
    rot: bool = False


@dataclass(frozen=True)
class NodalForce:
    node: int
    fx: float = 0.0
    fy: float = 0.0


@dataclass(frozen=True)
class NodalMoment:
    node: int
    m: float = 0.0


@dataclass(frozen=True)
class DistributedLoad:
    """Uniform line load of intensity q per unit length acting in global -y.

    scheme selects the nodal discretization: "consistent" applies the
    work-equivalent pattern including fixed-end moments, "lumped" places
    statically equivalent forces q*l/2 at the end nodes only.
    """

    elements: tuple[int, ...]
    q: float
    scheme: str = "consistent"


@dataclass(frozen=True)
class SelfWeight:
    """Area-proportional line load rho * g * a_i per unit length, global -y."""

    rho: float
    g: float = 1.0
    scheme: str = "consistent"


@dataclass
class GroundStructure:
    nodes: list[Node]
    elements: list[Element]
    supports: list[Support]
    loads: list = field(default_factory=list)
    volume_bound: float = 1.0
    name: str = ""

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_dof(self) -> int:
        return 3 * len(self.nodes)


@dataclass
class ValidationReport:
    ok: bool
    errors: list[str]
    mechanism: bool = False
    n_free_dof: int = 0

    def message(self) -> str:
        return "; ".join(self.errors) if self.errors else "ok"


def _rotation(c: float, s: float) -> np.ndarray:
    """Global-to-local transformation for one element (6x6)."""
    r = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    out = np.zeros((6, 6))
    out[:3, :3] = r
    out[3:, 3:] = r
    return out


def _local_axial(length: float) -> np.ndarray:
    """Axial stiffness pattern per unit EA (local coordinates)."""
    k = 1.0 / length
    m = np.zeros((6, 6))
    m[0, 0] = m[3, 3] = k
    m[0, 3] = m[3, 0] = -k
    return m


def _local_bending(length: float) -> np.ndarray:
    """Bending stiffness pattern per unit EI (local coordinates)."""
    l1, l2, l3 = length, length**2, length**3
    rows = np.array([1, 2, 4, 5])
    sub = np.array(
        [
            [12.0 / l3, 6.0 / l2, -12.0 / l3, 6.0 / l2],
            [6.0 / l2, 4.0 / l1, -6.0 / l2, 2.0 / l1],
            [-12.0 / l3, -6.0 / l2, 12.0 / l3, -6.0 / l2],
            [6.0 / l2, 2.0 / l1, -6.0 / l2, 4.0 / l1],
        ]
    )
    m = np.zeros((6, 6))
    m[np.ix_(rows, rows)] = sub
    return m


def _transverse_consistent(length: float, c: float, s: float, q: float) -> np.ndarray:
    """Work-equivalent nodal loads for a uniform line load q in global -y.

    Returns the global 6-vector (Fx1, Fy1, M1, Fx2, Fy2, M2).  The load is
    decomposed into local axial and transverse components, each applied via
    the standard consistent pattern, then rotated back to global axes.
    """
    wx = -q * s        # local axial component per unit length
    wy = -q * c        # local transverse component per unit length
    fl = np.array(
        [
            wx * length / 2.0,
            wy * length / 2.0,
            wy * length**2 / 12.0,
            wx * length / 2.0,
            wy * length / 2.0,
            -wy * length**2 / 12.0,
        ]
    )
    out = fl.copy()
    out[0] = c * fl[0] - s * fl[1]
    out[1] = s * fl[0] + c * fl[1]
    out[3] = c * fl[3] - s * fl[4]
    out[4] = s * fl[3] + c * fl[4]
    return out


def _transverse_lumped(length: float, c: float, s: float, q: float) -> np.ndarray:
    """Statically equivalent nodal loads for a uniform line load q in global -y.

    Half the resultant q*length goes to each end node; no fixed-end moments.
    """
    half = q * length / 2.0
    return np.array([0.0, -half, 0.0, 0.0, -half, 0.0])


_LOAD_SCHEMES = {
    "consistent": _transverse_consistent,
    "lumped": _transverse_lumped,
}


class FrameAssembly:
    """Precompiled assembly operators for a ground structure.

    Splits every element stiffness into the two global patterns
    K_e(a) = a * ka_e + a**2 * kb_e and every load vector into
    f(a) = f0 + sum_i a_i * f1_i, which is all downstream code needs.
    """

    def __init__(self, gs: GroundStructure):
        self.gs = gs
        node_index = {}
        for pos, node in enumerate(gs.nodes):
            if node.id in node_index:
                raise ModelError(f"duplicate node id {node.id}")
            if not (math.isfinite(node.x) and math.isfinite(node.y)):
                raise ModelError(f"non-finite coordinates at node {node.id}")
            node_index[node.id] = pos
        self.node_index = node_index
        self.n_dof = gs.n_dof
        ne = gs.n_elements

        self.lengths = np.zeros(ne)
        self.cos = np.zeros(ne)
        self.sin = np.zeros(ne)
        self.dofs = np.zeros((ne, 6), dtype=int)
        self.ka = np.zeros((ne, 6, 6))
        self.kb = np.zeros((ne, 6, 6))

        seen = set()
        for k, el in enumerate(gs.elements):
            if el.id in seen:
                raise ModelError(f"duplicate element id {el.id}")
            seen.add(el.id)
            if el.node_a == el.node_b:
                raise ModelError(f"element {el.id} connects node {el.node_a} to itself")
            if el.node_a not in node_index or el.node_b not in node_index:
                raise ModelError(f"element {el.id} references an unknown node")
            if el.young_modulus <= 0.0:
                raise ModelError(f"element {el.id} has non-positive Young's modulus")
            if el.c_i <= 0.0:
                raise ModelError(f"element {el.id} has non-positive section coefficient")
            na, nb = gs.nodes[node_index[el.node_a]], gs.nodes[node_index[el.node_b]]
            dx, dy = nb.x - na.x, nb.y - na.y
            length = math.hypot(dx, dy)
            if length <= 0.0:
                raise ModelError(f"element {el.id} has zero length")
            c, s = dx / length, dy / length
            self.lengths[k] = length
            self.cos[k], self.sin[k] = c, s
            ia, ib = node_index[el.node_a], node_index[el.node_b]
            self.dofs[k] = [3 * ia, 3 * ia + 1, 3 * ia + 2, 3 * ib, 3 * ib + 1, 3 * ib + 2]
            rot = _rotation(c, s)
            self.ka[k] = el.young_modulus * rot.T @ _local_axial(length) @ rot
            self.kb[k] = el.young_modulus * el.c_i * rot.T @ _local_bending(length) @ rot

        self.fixed = np.zeros(self.n_dof, dtype=bool)
        if not gs.supports:
            raise ModelError("structure has no supports")
        for sup in gs.supports:
            if sup.node not in node_index:
                raise ModelError(f"support references unknown node {sup.node}")
            base = 3 * node_index[sup.node]
            for j, flag in enumerate((sup.ux, sup.uy, sup.rot)):
                if flag:
                    self.fixed[base + j] = True

        element_pos = {el.id: k for k, el in enumerate(gs.elements)}
        self.f0 = np.zeros(self.n_dof)
        self.f1 = None
        sw = 0.0
        for load in gs.loads:
            if isinstance(load, NodalForce):
                if load.node not in node_index:
                    raise ModelError(f"force references unknown node {load.node}")
                base = 3 * node_index[load.node]
                self.f0[base] += load.fx
                self.f0[base + 1] += load.fy
            elif isinstance(load, NodalMoment):
                if load.node not in node_index:
                    raise ModelError(f"moment references unknown node {load.node}")
                self.f0[3 * node_index[load.node] + 2] += load.m
            elif isinstance(load, DistributedLoad):
                pattern = self._scheme(load.scheme)
                for eid in load.elements:
                    if eid not in element_pos:
                        raise ModelError(f"distributed load references unknown element {eid}")
                    k = element_pos[eid]
                    vec = pattern(self.lengths[k], self.cos[k], self.sin[k], load.q)
                    np.add.at(self.f0, self.dofs[k], vec)
            elif isinstance(load, SelfWeight):
                if load.rho < 0.0:
                    raise ModelError("self-weight density must be non-negative")
                pattern = self._scheme(load.scheme)
                rate = load.rho * load.g
                sw += rate
                if rate > 0.0:
                    if self.f1 is None:
                        self.f1 = np.zeros((ne, 6))
                    # Unit pattern per element: line load "rate" per unit area.
                    for k in range(ne):
                        self.f1[k] += pattern(self.lengths[k], self.cos[k], self.sin[k], rate)
            else:
                raise ModelError(f"unknown load type {type(load).__name__}")

        self.self_weight = sw

    @staticmethod
    def _scheme(name: str):
        try:
            return _LOAD_SCHEMES[name]
        except KeyError:
            raise ModelError(f"unknown load scheme {name!r}") from None

    # -- assembly ---------------------------------------------------------

    def _check_design(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if a.shape != (self.gs.n_elements,):
            raise ModelError(
                f"design has {a.size} areas, structure has {self.gs.n_elements} elements"
            )
        if not np.all(np.isfinite(a)):
            raise ModelError("design contains non-finite areas")
        return a

    def stiffness(self, a: np.ndarray) -> np.ndarray:
        a = self._check_design(a)
        ke = self.ka * a[:, None, None] + self.kb * (a * a)[:, None, None]
        K = np.zeros((self.n_dof, self.n_dof))
        np.add.at(K, (self.dofs[:, :, None], self.dofs[:, None, :]), ke)
        return K

    def loads(self, a: np.ndarray) -> np.ndarray:
        a = self._check_design(a)
        f = self.f0.copy()
        if self.f1 is not None:
            np.add.at(f, self.dofs, self.f1 * a[:, None])
        return f

    def stiffness_derivative(self, a: np.ndarray, i: int) -> np.ndarray:
        a = self._check_design(a)
        self._check_index(i)
        dK = np.zeros((self.n_dof, self.n_dof))
        ke = self.ka[i] + 2.0 * a[i] * self.kb[i]
        dK[np.ix_(self.dofs[i], self.dofs[i])] += ke
        return dK

    def load_derivative(self, i: int) -> np.ndarray:
        self._check_index(i)
        df = np.zeros(self.n_dof)
        if self.f1 is not None:
            np.add.at(df, self.dofs[i], self.f1[i])
        return df

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.gs.n_elements:
            raise ModelError(f"element index {i} out of range")

    def element_energies(self, a: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-element u'(dK/da_i)u and 2 u'(df/da_i)."""
        a = self._check_design(a)
        ue = u[self.dofs]
        ek = np.einsum("ei,eij,ej->e", ue, self.ka, ue)
        ek += 2.0 * a * np.einsum("ei,eij,ej->e", ue, self.kb, ue)
        if self.f1 is not None:
            ef = 2.0 * np.einsum("ei,ei->e", self.f1, ue)
        else:
            ef = np.zeros(self.gs.n_elements)
        return ek, ef

    def volume(self, a: np.ndarray) -> float:
        return float(self.lengths @ np.asarray(a, dtype=float))


def element_stiffness(gs: GroundStructure, element_id: int, a_i: float) -> np.ndarray:
    """Global 6x6 stiffness of one element at area a_i."""
    if not (isinstance(a_i, (int, float)) and math.isfinite(a_i)):
        raise ModelError("area must be a finite number")
    if a_i < 0.0:
        raise ModelError("area must be non-negative")
    asm = FrameAssembly(gs)
    for k, el in enumerate(gs.elements):
        if el.id == element_id:
            return a_i * asm.ka[k] + a_i**2 * asm.kb[k]
    raise ModelError(f"unknown element id {element_id}")


def assemble_stiffness(gs: GroundStructure, a: np.ndarray) -> np.ndarray:
    return FrameAssembly(gs).stiffness(a)


def assemble_loads(gs: GroundStructure, a: np.ndarray) -> np.ndarray:
    return FrameAssembly(gs).loads(a)


def assembly_derivatives(gs: GroundStructure, a: np.ndarray, i: int) -> tuple[np.ndarray, np.ndarray]:
    asm = FrameAssembly(gs)
    return asm.stiffness_derivative(a, i), asm.load_derivative(i)


def uniform_design(gs: GroundStructure, assembly: FrameAssembly | None = None) -> np.ndarray:
    """The volume-saturating uniform design a_i = Vbar / sum(l)."""
    asm = assembly if assembly is not None else FrameAssembly(gs)
    total = float(np.sum(asm.lengths))
    return np.full(gs.n_elements, gs.volume_bound / total)


def validate(gs: GroundStructure) -> ValidationReport:
    """Check model sanity and that the supported structure is not a mechanism.

    The kinematic check assembles the stiffness matrix at the uniform
    positive design, removes supported DOFs and requires a successful
    Cholesky factorization with pivots above 1e-12 * trace.
    """
    errors: list[str] = []
    if gs.volume_bound <= 0.0:
        errors.append("volume bound must be positive")
    if not gs.nodes:
        errors.append("structure has no nodes")
    if not gs.elements:
        errors.append("structure has no elements")
    if errors:
        return ValidationReport(ok=False, errors=errors)

    try:
        asm = FrameAssembly(gs)
    except ModelError as exc:
        return ValidationReport(ok=False, errors=[str(exc)])

    free = ~asm.fixed
    n_free = int(np.count_nonzero(free))
    if n_free == 0:
        return ValidationReport(ok=True, errors=[], n_free_dof=0)

    K = asm.stiffness(uniform_design(gs, asm))
    Kff = K[np.ix_(free, free)]
    pivot_floor = 1e-12 * np.trace(Kff)
    try:
        chol = np.linalg.cholesky(Kff)
        min_pivot = float(np.min(np.diag(chol)) ** 2)
    except np.linalg.LinAlgError:
        min_pivot = -1.0
    if min_pivot < pivot_floor:
        # Name the dominant DOFs of the zero-energy mode.
        w, v = np.linalg.eigh(Kff)
        mode = v[:, 0]
        full = np.zeros(gs.n_dof)
        full[free] = mode
        order = np.argsort(-np.abs(full))[:3]
        parts = []
        for idx in order:
            if abs(full[idx]) < 1e-6:
                continue
            node = gs.nodes[idx // 3]
            parts.append(f"node {node.id} {DOF_NAMES[idx % 3]} ({full[idx]:+.3f})")
        errors.append(
            "kinematic mechanism: zero-energy mode dominated by " + ", ".join(parts)
        )
        return ValidationReport(ok=False, errors=errors, mechanism=True, n_free_dof=n_free)

    return ValidationReport(ok=True, errors=[], n_free_dof=n_free)


def require_valid(gs: GroundStructure) -> None:
    report = validate(gs)
    if not report.ok:
        if report.mechanism:
            raise MechanismError(report.message())
        raise ModelError(report.message())
