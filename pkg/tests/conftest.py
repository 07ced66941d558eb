"""Shared builders for test structures.

These are written out longhand, independent of frameopt.problems, so the
shipped benchmark definitions can be cross-checked against them.
"""

import math

import numpy as np
import pytest

from frameopt.model import (
    CIRCLE_SECTION,
    PLATE_GIRDER_SECTION,
    SQUARE_SECTION,
    DistributedLoad,
    Element,
    GroundStructure,
    NodalForce,
    NodalMoment,
    Node,
    SelfWeight,
    Support,
)

TIP_FX = math.cos(math.pi / 6.0)
TIP_FY = -math.sin(math.pi / 6.0)


def make_cantilever(n_e: int, volume: float = 0.1) -> GroundStructure:
    """Span-1 cantilever, clamped left, unit tip force 30 degrees off axis."""
    nodes = [Node(i + 1, i / n_e, 0.0) for i in range(n_e + 1)]
    elements = [Element(i + 1, i + 1, i + 2, 1.0, SQUARE_SECTION) for i in range(n_e)]
    supports = [Support(1, ux=True, uy=True, rot=True)]
    loads = [NodalForce(n_e + 1, fx=TIP_FX, fy=TIP_FY)]
    return GroundStructure(nodes, elements, supports, loads, volume, f"cantilever-{n_e}")


def make_ten_beam(m2: float = 1.0, m3: float = 2.0) -> GroundStructure:
    """Six-node, ten-element frame on a unit grid, clamped at the left edge."""
    coords = [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1)]
    nodes = [Node(i + 1, float(x), float(y)) for i, (x, y) in enumerate(coords)]
    pairs = [(1, 2), (1, 5), (2, 3), (2, 4), (2, 5), (2, 6), (3, 5), (3, 6), (4, 5), (5, 6)]
    elements = [Element(i + 1, a, b, 1.0, CIRCLE_SECTION) for i, (a, b) in enumerate(pairs)]
    supports = [Support(1, True, True, True), Support(4, True, True, True)]
    loads = [NodalMoment(2, m2), NodalMoment(3, m3)]
    return GroundStructure(nodes, elements, supports, loads, 0.5, "tenbeam")


def make_girder(scheme: str = "lumped") -> GroundStructure:
    """Half of a span-20 girder: pin at the left end, symmetry at midspan.

    The reference design uses statically equivalent (lumped) nodal loads;
    pass scheme="consistent" for the work-equivalent discretization.
    """
    nodes = [Node(i + 1, 2.0 * i, 0.0) for i in range(6)]
    elements = [Element(i + 1, i + 1, i + 2, 1.0e4, PLATE_GIRDER_SECTION) for i in range(5)]
    supports = [Support(1, ux=True, uy=True), Support(6, ux=True, rot=True)]
    loads = [
        DistributedLoad(elements=tuple(range(1, 6)), q=1.0, scheme=scheme),
        SelfWeight(rho=3.0, g=1.0, scheme=scheme),
    ]
    return GroundStructure(nodes, elements, supports, loads, 0.2, "girder")


@pytest.fixture
def cantilever3() -> GroundStructure:
    return make_cantilever(3)


@pytest.fixture
def ten_beam() -> GroundStructure:
    return make_ten_beam()


@pytest.fixture
def girder() -> GroundStructure:
    return make_girder()


def closed_form_tip_compliance(a: float, length: float = 1.0) -> float:
    """Prismatic cantilever under the unit 30-degree tip force.

    Axial and bending responses decouple for a straight member:
    c = fx^2 * L / (E A) + fy^2 * L^3 / (3 E I), with I = a^2 / 12.
    """
    inertia = SQUARE_SECTION * a * a
    return TIP_FX**2 * length / a + TIP_FY**2 * length**3 / (3.0 * inertia)


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
