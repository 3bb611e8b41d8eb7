"""Tests for model file loading and saving."""

import json
import tempfile
from pathlib import Path

import numpy as np
import pytest

from it2synth.errors import ModelInputError
from it2synth.fuzzy.loader import ModelLoader
from it2synth.fuzzy.model import combined_grades


def _minimal_model():
    near = {"lower": {"shape": "triangular", "params": [-1, 0, 1], "height": 0.8},
            "upper": {"shape": "triangular", "params": [-1, 0, 1]}}
    far = {"lower": {"shape": "tabulated", "params": [-1, 0, 1], "grades": [0.8, 0, 0.8]},
           "upper": {"shape": "tabulated", "params": [-1, 0, 1], "grades": [1, 0, 1]}}
    rule = {
        "A": [[0, 1], [2, 0]],
        "B": [[0], [1]],
        "antecedents": [{"state": 0, "set": "near"}],
    }
    return {
        "sets": {"near": near, "far": far},
        "subsystems": [
            {
                "label": "plant",
                "rules": [rule, {**rule, "A": [[0, 1], [1, 0]], "antecedents": [{"state": 0, "set": "far"}]}],
            }
        ],
        "controllers": [
            {"rules": [{"antecedents": [{"state": 0, "set": "near"}]},
                       {"antecedents": [{"state": 0, "set": "far"}]}]}
        ],
    }


@pytest.fixture
def temp_dir():
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def loader():
    return ModelLoader(verbose=False)


def _write(path, data):
    with open(path, "w") as f:
        json.dump(data, f)
    return path


class TestModelLoader:
    """Test model parsing."""

    def test_load_minimal(self, loader, temp_dir):
        system = loader.load(_write(temp_dir / "model.json", _minimal_model()))
        assert system.N == 1
        sub = system.subsystems[0]
        assert sub.p == 2
        assert sub.label == "plant"
        assert system.controllers[0].c == 2
        np.testing.assert_allclose(sub.rules[0].A, [[0, 1], [2, 0]])
        assert sub.rules[0].D1.shape == (2, 1)

    def test_missing_file(self, loader, temp_dir):
        with pytest.raises(FileNotFoundError):
            loader.load(temp_dir / "missing.json")

    def test_unknown_root_key(self, loader):
        data = _minimal_model()
        data["plants"] = []
        with pytest.raises(ModelInputError, match="plants: unknown key"):
            loader.parse(data)

    def test_unknown_rule_key(self, loader):
        data = _minimal_model()
        data["subsystems"][0]["rules"][0]["E"] = [[1]]
        with pytest.raises(ModelInputError, match=r"subsystems\[0\]\.rules\[0\]\.E: unknown key"):
            loader.parse(data)

    def test_missing_a(self, loader):
        data = _minimal_model()
        del data["subsystems"][0]["rules"][1]["A"]
        with pytest.raises(ModelInputError, match=r"rules\[1\]\.A: required"):
            loader.parse(data)

    def test_unknown_set_name(self, loader):
        data = _minimal_model()
        data["controllers"][0]["rules"][0]["antecedents"][0]["set"] = "tilted"
        with pytest.raises(ModelInputError, match="unknown set name 'tilted'"):
            loader.parse(data)

    def test_dimension_mismatch_names_rule(self, loader):
        data = _minimal_model()
        data["subsystems"][0]["rules"][0]["B"] = [[0], [1], [2]]
        with pytest.raises(ModelInputError, match=r"subsystems\[0\]\.rules\[0\]"):
            loader.parse(data)

    def test_alpha_shape(self, loader):
        data = _minimal_model()
        data["subsystems"][0]["alpha"] = [[0.5, 0.5]]
        with pytest.raises(ModelInputError, match="alpha"):
            loader.parse(data)

    def test_yaml_spelling_accepted(self, loader, temp_dir):
        path = temp_dir / "model.yaml"
        path.write_text(
            "subsystems:\n"
            "  - rules:\n"
            "      - A: [[0, 1], [1, 0]]\n"
            "        B: [[0], [1]]\n"
            "controllers:\n"
            "  - rules:\n"
            "      - antecedents: []\n"
        )
        system = loader.load(path)
        assert system.subsystems[0].n == 2


class TestModelDump:
    """Test writing models back to the schema."""

    def test_pendulum_round_trip(self, loader, temp_dir, pendulum_system):
        path = temp_dir / "pendulum.json"
        loader.dump(pendulum_system, path)
        back = loader.load(path)

        assert back.N == 2
        for sub, sub_back in zip(pendulum_system.subsystems, back.subsystems):
            for rule, rule_back in zip(sub.rules, sub_back.rules):
                np.testing.assert_allclose(rule_back.A, rule.A)
                np.testing.assert_allclose(rule_back.D1, rule.D1)
                for k, mat in rule.interconnections.items():
                    np.testing.assert_allclose(rule_back.interconnections[k], mat)

        rng = np.random.default_rng(0)
        for x in rng.uniform(-1.5, 1.5, size=(20, 2)):
            np.testing.assert_allclose(
                combined_grades(back, 0, x), combined_grades(pendulum_system, 0, x), atol=1e-12
            )
