from __future__ import annotations

import json

import pytest

from xresil.config import load_config, parse_config
from xresil.errors import ConfigError, InvalidMix
from xresil.identify import Strategy
from xresil.model import PredictionMode, RegionKind
from xresil.synth import WorldSpec, generate_world, write_world


@pytest.fixture
def world_dir(tmp_path):
    return write_world(generate_world(WorldSpec(seed=4, n_links=100)), tmp_path / "w")


def _cfg(world_dir, **changes):
    d = json.loads((world_dir / "config.json").read_text())
    d.update(changes)
    return d


def test_default_config_loads(world_dir):
    cfg = load_config(world_dir / "config.json")
    assert cfg.mode is PredictionMode.TOP
    assert cfg.scenario.model.threshold == 6.0
    assert cfg.data.stations == world_dir / "stations.csv"
    assert cfg.seed_schedule()["root"] == 0


def test_unknown_keys_and_sub_seeds_rejected(world_dir):
    with pytest.raises(ConfigError):
        parse_config(_cfg(world_dir, extra=1), world_dir)
    d = _cfg(world_dir)
    d["scenario"]["distribution"]["seed"] = 5
    with pytest.raises(ConfigError):
        parse_config(d, world_dir)


def test_missing_files_and_bad_json(world_dir, tmp_path):
    d = _cfg(world_dir)
    d["data"]["stations"] = "nope.csv"
    with pytest.raises(ConfigError):
        parse_config(d, world_dir)
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")


def test_model_manifest_rules(world_dir):
    d = _cfg(world_dir)
    d["scenario"]["model"]["latitude_rule"] = True
    with pytest.raises(ConfigError):
        parse_config(d, world_dir)
    d = _cfg(world_dir)
    d["scenario"]["model"] = {"name": "solar"}
    cfg = parse_config(d, world_dir)
    assert cfg.scenario.model.latitude_rule


def test_analyses_and_regions(world_dir):
    d = _cfg(
        world_dir,
        analyses={
            "sweep": {"p": "0.1:0.3:0.1", "strategies": "top,random", "runs": 2},
            "cluster": {"cut": 0.5},
            "sensitivity": {"mixes": ["77,19,4", [100, 0, 0]], "rounds": 3},
            "connectivity": True,
        },
    )
    d["scenario"]["region"] = {"kind": "bbox", "bbox": [-10, 10, -20, 20]}
    cfg = parse_config(d, world_dir)
    a = cfg.analyses
    assert a.sweep.probabilities == (0.1, 0.2, 0.3)
    assert a.sweep.strategies == (Strategy.TOP_N, Strategy.RANDOM)
    assert a.cluster.cut == 0.5 and a.connectivity
    assert [m.label() for m in a.sensitivity.mixes] == ["(77,19,4)", "(100,0,0)"]
    assert cfg.scenario.region.kind is RegionKind.BBOX
    assert cfg.seed_schedule()["sweep"] == [0, 1]
    d["analyses"] = {"sensitivity": {"mixes": ["50,50,50"]}}
    with pytest.raises(InvalidMix):
        parse_config(d, world_dir)


def test_overrides_change_digest(world_dir):
    cfg = load_config(world_dir / "config.json")
    assert cfg.digest() == load_config(world_dir / "config.json").digest()
    assert cfg.with_overrides(seed=3).digest() != cfg.digest()
    assert cfg.with_overrides(mode="weighted").mode is PredictionMode.WEIGHTED


def test_gmice_override(world_dir):
    d = _cfg(world_dir)
    d["scenario"]["model"] = {
        "name": "earthquake",
        "grid_file": "grid_hazard.csv",
        "gmice": {"c1": 1.0, "c2": 1.0, "c3": 0.0, "c4": 2.0, "breakpoint_log10": 1.0},
    }
    cfg = parse_config(d, world_dir)
    assert cfg.scenario.model.convert == "pga_to_mmi"
    assert cfg.scenario.model.gmice.c4 == 2.0
