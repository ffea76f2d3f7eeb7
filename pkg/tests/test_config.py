import json
from pathlib import Path

import pytest

from rbgk_slab.config import RunConfig, parse_config
from rbgk_slab.errors import SchemaError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SPECIES = {
    "label": "A",
    "mass": 1.0,
    "omega": 0.1,
    "left": {"kind": "juttner", "beta": 1.0},
    "right": {"kind": "juttner", "beta": 1.0},
}


def doc(**over):
    d = {"species": [dict(SPECIES)]}
    d.update(over)
    return json.dumps(d)


def test_minimal_defaults():
    cfg = parse_config(doc())
    assert cfg.mode == "solve"
    assert cfg.constants.c == 1.0 and cfg.constants.k == 1.0
    assert cfg.grid.p_max is None and cfg.grid.n_p1 == 64 and cfg.grid.K == 64
    assert cfg.solver.tol == 1e-10 and cfg.solver.max_iter == 200
    assert cfg.solver.normalization == "discrete"
    assert cfg.scan.scales == [0.25, 0.5, 1.0, 2.0, 4.0, 8.0]
    assert cfg.species[0].left.drift == 0.0 and cfg.species[0].left.amplitude == 1.0


def test_error_names_key_path():
    bad = dict(SPECIES, mass=-1.0)
    with pytest.raises(SchemaError, match=r"species\[0\]\.mass"):
        parse_config(json.dumps({"species": [bad]}))


def test_nested_family_key_path():
    bad = dict(SPECIES, right={"kind": "gaussian", "width": 0.0})
    with pytest.raises(SchemaError, match=r"species\[0\]\.right\.width"):
        parse_config(json.dumps({"species": [bad]}))


@pytest.mark.parametrize("extra", [{"bogus": 1}, {"grid": {"n_p": 8}}, {"solver": {"tolerance": 1e-8}}])
def test_unknown_keys_rejected(extra):
    with pytest.raises(SchemaError):
        parse_config(doc(**extra))


def test_unknown_family_rejected():
    bad = dict(SPECIES, left={"kind": "maxwell", "beta": 1.0})
    with pytest.raises(SchemaError):
        parse_config(json.dumps({"species": [bad]}))


@pytest.mark.parametrize("drift", [1.0, -1.5])
def test_drift_must_be_subluminal(drift):
    bad = dict(SPECIES, left={"kind": "juttner", "beta": 1.0, "drift": drift})
    with pytest.raises(SchemaError, match=r"species\[0\]\.left\.drift"):
        parse_config(json.dumps({"species": [bad]}))


def test_drift_bound_uses_configured_c():
    ok = dict(SPECIES, left={"kind": "juttner", "beta": 1.0, "drift": 1.5})
    parse_config(json.dumps({"species": [ok], "constants": {"c": 2.0}}))


def test_zero_amplitudes_rejected():
    bad = dict(
        SPECIES,
        left={"kind": "juttner", "beta": 1.0, "amplitude": 0.0},
        right={"kind": "gaussian", "width": 1.0, "amplitude": 0.0},
    )
    with pytest.raises(SchemaError, match="amplitude"):
        parse_config(json.dumps({"species": [bad]}))


def test_one_sided_inflow_allowed():
    one = dict(SPECIES, right={"kind": "juttner", "beta": 1.0, "amplitude": 0.0})
    parse_config(json.dumps({"species": [one]}))


def test_odd_n_p1_rejected():
    with pytest.raises(SchemaError, match="n_p1"):
        parse_config(doc(grid={"n_p1": 33}))


@pytest.mark.parametrize("tol", [0.0, 1.0, -1e-3])
def test_tol_range(tol):
    with pytest.raises(SchemaError, match="solver.tol"):
        parse_config(doc(solver={"tol": tol}))


def test_labels_unique():
    with pytest.raises(SchemaError, match="unique"):
        parse_config(json.dumps({"species": [SPECIES, SPECIES]}))


@pytest.mark.parametrize("scales", [[], [1.0, 1.0], [2.0, 1.0], [-1.0, 1.0]])
def test_scale_ladder(scales):
    with pytest.raises(SchemaError, match="scales"):
        parse_config(doc(scan={"scales": scales}))


@pytest.mark.parametrize("text", ["", "{", "[1, 2]", '{"species": []}'])
def test_malformed_documents(text):
    with pytest.raises(SchemaError):
        parse_config(text)


def test_models_are_frozen():
    cfg = parse_config(doc())
    with pytest.raises(Exception):
        cfg.mode = "scan"


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.name)
def test_bundled_configs_round_trip(path):
    raw = json.loads(path.read_text())
    if "species" not in raw:
        pytest.skip("data table, not a run configuration")
    cfg = parse_config(path.read_text())
    again = parse_config(cfg.to_json())
    assert again == cfg and isinstance(again, RunConfig)
    assert again.to_json() == cfg.to_json()
