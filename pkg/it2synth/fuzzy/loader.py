"""Model ingestion from the structured JSON model schema.

Schema (all matrices as nested lists, row-major)::

    {
      "sets": {"<name>": {"lower": <mf>, "upper": <mf>}},      # optional
      "subsystems": [
        {
          "label": "pendulum 1",                                # optional
          "rules": [
            {
              "A": [[...]], "B": [[...]],
              "D1": [[...]], "C": [[...]], "D2": [[...]],     # optional
              "interconnections": {"1": [[...]]},              # optional
              "antecedents": [{"state": 0, "set": "<name>" | {<it2 set>}}]
            }
          ],
          "alpha": [[0.5, 0.5], ...]                            # optional
        }
      ],
      "controllers": [
        {"rules": [{"antecedents": [...]}], "beta": [[...]]}   # optional beta
      ]
    }

with ``<mf>`` = ``{"shape": "triangular", "params": [a, b, c], "height": 1.0}``
(``tabulated`` takes ``params`` as breakpoints plus ``grades``).
"""

import json
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from ..errors import It2SynthError, ModelInputError
from ..utils.logger import get_logger
from .membership import IT2Set
from .model import (
    Antecedent,
    ConstantRealization,
    ControllerRuleBase,
    LargeScaleSystem,
    PlantRule,
    Subsystem,
)

_RULE_KEYS = {"A", "B", "D1", "C", "D2", "interconnections", "antecedents"}
_SUBSYSTEM_KEYS = {"label", "rules", "alpha"}
_CONTROLLER_KEYS = {"rules", "beta"}
_ROOT_KEYS = {"sets", "subsystems", "controllers"}


def _reject_unknown(data: dict[str, Any], allowed: set[str], where: str) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ModelInputError(f"{where}.{unknown[0]}: unknown key")


class ModelLoader:
    """Load and save large-scale IT2 system models."""

    def __init__(self, verbose: bool = True) -> None:
        """
        Initialize the loader.

        Args:
            verbose: Enable verbose logging
        """
        self.logger = get_logger(verbose=verbose)

    def load(self, path: Path) -> LargeScaleSystem:
        """
        Load a model file.

        Args:
            path: Path to the JSON (or YAML) model file

        Returns:
            LargeScaleSystem instance

        Raises:
            FileNotFoundError: If the file is missing
            ModelInputError: If the content violates the schema
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Model file not found: {path}")

        self.logger.info(f"Loading model from: {path}")
        text = path.read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            try:
                data = yaml.safe_load(text)
            except yaml.YAMLError as e:
                raise ModelInputError(f"Failed to parse model file {path}: {e}")

        system = self.parse(data)
        with self.logger.nested():
            for sub in system.subsystems:
                self.logger.success(
                    f"subsystem {sub.index}: n={sub.n}, m={sub.m}, m_w={sub.m_w}, "
                    f"n_z={sub.n_z}, p={sub.p}, c={system.controllers[sub.index].c}"
                )
        return system

    def parse(self, data: Any) -> LargeScaleSystem:
        """Build a system from a parsed mapping."""
        if not isinstance(data, dict):
            raise ModelInputError("<model>: expected an object")
        _reject_unknown(data, _ROOT_KEYS, "<model>")

        named_sets = {
            name: self._parse_set(spec, f"sets.{name}", {}) for name, spec in data.get("sets", {}).items()
        }

        raw_subs = data.get("subsystems")
        if not isinstance(raw_subs, list) or not raw_subs:
            raise ModelInputError("subsystems: expected a non-empty list")
        subsystems = [
            self._parse_subsystem(raw, i, named_sets) for i, raw in enumerate(raw_subs)
        ]

        raw_ctrl = data.get("controllers")
        if not isinstance(raw_ctrl, list):
            raise ModelInputError("controllers: expected a list (one entry per subsystem)")
        controllers = [self._parse_controller(raw, i, named_sets) for i, raw in enumerate(raw_ctrl)]

        return LargeScaleSystem(subsystems=subsystems, controllers=controllers)

    def _parse_set(self, spec: Any, where: str, named: dict[str, IT2Set]) -> IT2Set:
        if isinstance(spec, str):
            if spec not in named:
                raise ModelInputError(f"{where}: unknown set name {spec!r}")
            return named[spec]
        try:
            return IT2Set.from_dict(spec)
        except (KeyError, TypeError) as e:
            raise ModelInputError(f"{where}: malformed IT2 set ({e})")
        except It2SynthError as e:
            raise ModelInputError(f"{where}: {e.message}")

    def _parse_antecedents(self, raw: Any, where: str, named: dict[str, IT2Set]) -> tuple[Antecedent, ...]:
        if raw is None:
            return ()
        if not isinstance(raw, list):
            raise ModelInputError(f"{where}: expected a list")
        out = []
        for a, item in enumerate(raw):
            if not isinstance(item, dict) or set(item) != {"state", "set"}:
                raise ModelInputError(f"{where}[{a}]: expected {{'state': int, 'set': ...}}")
            out.append((int(item["state"]), self._parse_set(item["set"], f"{where}[{a}].set", named)))
        return tuple(out)

    def _parse_subsystem(self, raw: Any, i: int, named: dict[str, IT2Set]) -> Subsystem:
        where = f"subsystems[{i}]"
        if not isinstance(raw, dict):
            raise ModelInputError(f"{where}: expected an object")
        _reject_unknown(raw, _SUBSYSTEM_KEYS, where)
        rules_raw = raw.get("rules")
        if not isinstance(rules_raw, list) or not rules_raw:
            raise ModelInputError(f"{where}.rules: expected a non-empty list")

        rules = []
        for l, rr in enumerate(rules_raw):
            rwhere = f"{where}.rules[{l}]"
            if not isinstance(rr, dict):
                raise ModelInputError(f"{rwhere}: expected an object")
            _reject_unknown(rr, _RULE_KEYS, rwhere)
            for required in ("A", "B"):
                if required not in rr:
                    raise ModelInputError(f"{rwhere}.{required}: required")
            try:
                rules.append(
                    PlantRule(
                        A=rr["A"],
                        B=rr["B"],
                        D1=rr.get("D1"),
                        C=rr.get("C"),
                        D2=rr.get("D2"),
                        interconnections={
                            int(k): v for k, v in (rr.get("interconnections") or {}).items()
                        },
                        antecedents=self._parse_antecedents(
                            rr.get("antecedents"), f"{rwhere}.antecedents", named
                        ),
                    )
                )
            except It2SynthError as e:
                raise ModelInputError(f"{rwhere}: {e.message}")

        alpha = raw.get("alpha")
        try:
            return Subsystem(
                index=i,
                rules=rules,
                alpha_realization=self._realization(alpha, len(rules), f"{where}.alpha"),
                label=str(raw.get("label", "")),
            )
        except It2SynthError as e:
            raise ModelInputError(f"{where}: {e.message}")

    def _parse_controller(self, raw: Any, i: int, named: dict[str, IT2Set]) -> ControllerRuleBase:
        where = f"controllers[{i}]"
        if not isinstance(raw, dict):
            raise ModelInputError(f"{where}: expected an object")
        _reject_unknown(raw, _CONTROLLER_KEYS, where)
        rules_raw = raw.get("rules")
        if not isinstance(rules_raw, list) or not rules_raw:
            raise ModelInputError(f"{where}.rules: expected a non-empty list")
        rules = []
        for j, rr in enumerate(rules_raw):
            if not isinstance(rr, dict) or set(rr) - {"antecedents"}:
                raise ModelInputError(f"{where}.rules[{j}]: expected {{'antecedents': [...]}}")
            rules.append(
                self._parse_antecedents(rr.get("antecedents"), f"{where}.rules[{j}].antecedents", named)
            )
        beta = self._realization(raw.get("beta"), len(rules), f"{where}.beta")
        return ControllerRuleBase(rules=rules, beta_realization=beta)

    @staticmethod
    def _realization(raw: Any, n_rules: int, where: str) -> Optional[ConstantRealization]:
        if raw is None:
            return None
        values = np.asarray(raw, dtype=float)
        if values.shape != (n_rules, 2):
            raise ModelInputError(f"{where}: expected shape ({n_rules}, 2), got {values.shape}")
        return ConstantRealization(tuple((float(a), float(b)) for a, b in values))

    def dump(self, system: LargeScaleSystem, path: Path) -> None:
        """
        Write a system back to the JSON schema.

        Only constant realizations can be serialised; state-dependent ones
        are dropped with a warning.
        """
        data = {
            "subsystems": [self._dump_subsystem(sub) for sub in system.subsystems],
            "controllers": [self._dump_controller(rb) for rb in system.controllers],
        }
        with open(path, "w") as f:
            json.dump(data, f, indent=2)
            f.write("\n")
        self.logger.success(f"Model written to: {path}")

    @staticmethod
    def _dump_antecedents(antecedents: tuple[Antecedent, ...]) -> list[dict[str, Any]]:
        return [{"state": idx, "set": it2.to_dict()} for idx, it2 in antecedents]

    def _dump_realization(self, realization: Any, where: str) -> Optional[list[list[float]]]:
        if realization is None:
            return None
        if isinstance(realization, ConstantRealization):
            return [list(pair) for pair in realization.values]
        self.logger.warning(f"{where}: state-dependent realization is not serialisable; dropped")
        return None

    def _dump_subsystem(self, sub: Subsystem) -> dict[str, Any]:
        data: dict[str, Any] = {
            "rules": [
                {
                    "A": rule.A.tolist(),
                    "B": rule.B.tolist(),
                    "D1": rule.D1.tolist(),
                    "C": rule.C.tolist(),
                    "D2": rule.D2.tolist(),
                    "interconnections": {str(k): v.tolist() for k, v in rule.interconnections.items()},
                    "antecedents": self._dump_antecedents(rule.antecedents),
                }
                for rule in sub.rules
            ]
        }
        if sub.label:
            data["label"] = sub.label
        alpha = self._dump_realization(sub.alpha_realization, f"subsystem {sub.index} alpha")
        if alpha is not None:
            data["alpha"] = alpha
        return data

    def _dump_controller(self, rb: ControllerRuleBase) -> dict[str, Any]:
        data: dict[str, Any] = {
            "rules": [{"antecedents": self._dump_antecedents(rule)} for rule in rb.rules]
        }
        beta = self._dump_realization(rb.beta_realization, "controller beta")
        if beta is not None:
            data["beta"] = beta
        return data
