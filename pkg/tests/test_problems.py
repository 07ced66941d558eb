"""Problem-file round trips, shipped data files, and the benchmark registry."""

import math

import pytest

from conftest import make_cantilever, make_girder, make_ten_beam
from frameopt.model import ModelError, require_valid
from frameopt.problems import (
    TIP_FX,
    TIP_FY,
    benchmark_case,
    build_benchmarks,
    cantilever,
    girder,
    load_problem,
    packaged_problem,
    problem_from_dict,
    problem_to_dict,
    save_problem,
    ten_beam,
)

BUILDERS = {
    "cantilever-1": lambda: cantilever(1),
    "cantilever-3": lambda: cantilever(3),
    "cantilever-5": lambda: cantilever(5),
    "cantilever-7": lambda: cantilever(7),
    "tenbeam": ten_beam,
    "girder": girder,
}


@pytest.mark.parametrize("name", sorted(BUILDERS))
def test_dict_round_trip_is_lossless(name):
    doc = problem_to_dict(BUILDERS[name]())
    again = problem_to_dict(problem_from_dict(doc))
    assert again == doc


@pytest.mark.parametrize("name", ["cantilever-3", "tenbeam", "girder"])
def test_file_round_trip_is_lossless(name, tmp_path):
    gs = BUILDERS[name]()
    path = tmp_path / f"{name}.json"
    save_problem(gs, path)
    assert problem_to_dict(load_problem(path)) == problem_to_dict(gs)


@pytest.mark.parametrize("name", sorted(BUILDERS))
def test_packaged_data_matches_builders(name):
    packaged = packaged_problem(name)
    assert problem_to_dict(packaged) == problem_to_dict(BUILDERS[name]())


def test_builders_agree_with_independent_definitions():
    pairs = [
        (cantilever(3), make_cantilever(3)),
        (ten_beam(), make_ten_beam()),
        (girder(), make_girder(scheme="lumped")),
    ]
    for built, reference in pairs:
        assert problem_to_dict(built) == problem_to_dict(reference)


def test_tip_force_has_unit_magnitude():
    assert math.hypot(TIP_FX, TIP_FY) == pytest.approx(1.0, rel=1e-15)
    assert TIP_FY < 0.0


def test_duplicate_node_id_rejected():
    doc = problem_to_dict(cantilever(3))
    doc["nodes"][1]["id"] = doc["nodes"][0]["id"]
    with pytest.raises(ModelError):
        problem_from_dict(doc)


def test_unknown_top_level_key_rejected():
    doc = problem_to_dict(cantilever(3))
    doc["material"] = "steel"
    with pytest.raises(ModelError, match="problem file invalid"):
        problem_from_dict(doc)


def test_unknown_section_name_rejected():
    doc = problem_to_dict(cantilever(3))
    doc["elements"][0]["section"] = {"type": "hexagon"}
    with pytest.raises(ModelError, match="invalid at elements/0"):
        problem_from_dict(doc)


def test_custom_section_coefficient_survives():
    doc = problem_to_dict(cantilever(3))
    doc["elements"][0]["section"] = {"c_i": 58.0 / 27.0}
    gs = problem_from_dict(doc)
    assert gs.elements[0].c_i == pytest.approx(58.0 / 27.0)
    assert problem_to_dict(gs)["elements"][0]["section"] == {
        "type": "plate-girder"}


def test_parse_error_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "nodes": [,]\n}\n', encoding="utf-8")
    with pytest.raises(ModelError, match="line 2"):
        load_problem(path)


def test_mechanism_rejected_on_load():
    doc = problem_to_dict(cantilever(3))
    doc["supports"] = [{"node": 1, "ux": True}]  # free to rotate and drop
    with pytest.raises(ModelError):
        problem_from_dict(doc)


def test_packaged_unknown_name():
    with pytest.raises(ModelError, match="no packaged problem"):
        packaged_problem("mystery")


def test_cantilever_needs_an_element():
    with pytest.raises(ModelError):
        cantilever(0)


def test_registry_contents():
    cases = {c.name: c for c in build_benchmarks()}
    assert set(cases) == {
        "cantilever-1", "cantilever-3", "cantilever-5", "cantilever-7",
        "tenbeam", "girder", "cantilever-150", "cantilever-300",
    }
    for name in ("cantilever-150", "cantilever-300"):
        assert cases[name].methods == ("oc",)
    for name in ("cantilever-3", "tenbeam", "girder"):
        assert cases[name].methods == ("oc", "nlp", "nsdp", "po")
    assert cases["cantilever-3"].po_order == 2
    assert cases["cantilever-5"].po_order == 3
    assert cases["tenbeam"].expected["po"][2]["certified"]


def test_registry_cases_build_valid_structures():
    for case in build_benchmarks():
        gs = case.build()
        require_valid(gs)
        if case.name == "cantilever-300":
            assert gs.n_elements == 300


def test_benchmark_case_lookup():
    assert benchmark_case("tenbeam").name == "tenbeam"
    with pytest.raises(KeyError, match="unknown benchmark"):
        benchmark_case("bridge")
