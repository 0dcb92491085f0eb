"""Experiment manifests: JSON documents validated field by field.

Every number a run reports traces back to a manifest field; randomized
steps draw from the single mandatory seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .circle import GOLDEN_MEAN


class ManifestError(ValueError):
    """Validation failure with the offending field paths."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("manifest validation failed:\n" +
                         "\n".join(f"  - {p}" for p in self.problems))


DEFAULTS = {
    "base_map": {"type": "denjoy", "alpha": GOLDEN_MEAN, "gap_n_max": 2000},
    "cycle_library": {
        "classes": [[1, 0], [0, 1]],
        "base_center": [0.5, 0.5],
        "base_radius": 0.12,
        "lane_spread": 0.05,
        "mode": "immerse",
    },
    "ribbon_halfwidth": 0.01,
    "horizons": {"t_min": 10.0, "t_max": 10000.0, "count": 20},
    "sweep": {"leaves": 20, "returns": 20000},
    "raster": {"n_grid": 512, "tube_radius": 0.02},
    "norm": {"classes": [[3, 4], [1, 1], [2, -5]], "n_max": 50},
    "cluster": {"fixture": "two_ray", "horizon_count": 300, "radius": 0.05},
    "flow_velocity": [1.0, GOLDEN_MEAN],
    "realize": {"random_classes": 0, "exactness_forms": 20},
    "intersect": {"second_class": [1.0, 0.0], "shift": [0.31, 0.17],
                  "leafwise_returns": 2000, "random_pairs": 0},
    "tolerances": {
        "agreement": 0.01,
        "exactness": 1e-6,
        "pairing": 1e-4,
        "current": 1e-6,
        "raster": 0.01,
        "leaf_class": 0.01,
        "rotation": None,
        "cluster_angle": 0.05,
    },
}

REQUIRED = {
    "realize": ["seed", "target_class", "tolerances.current"],
    "schwartzman": ["seed", "target_class", "horizons.t_max", "tolerances.agreement"],
    "cluster": ["seed", "cluster.fixture", "tolerances.cluster_angle"],
    "intersect": ["seed", "target_class", "intersect.second_class", "tolerances.pairing"],
    "dualform": ["seed", "target_class", "raster.n_grid", "raster.tube_radius",
                 "tolerances.raster"],
    "norm": ["seed", "norm.classes", "norm.n_max"],
    "denjoy": ["seed", "base_map.alpha"],
}


def _get(doc: dict, dotted: str):
    cur = doc
    for part in dotted.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return None
        cur = cur[part]
    return cur


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


@dataclass
class ExperimentManifest:
    doc: dict
    path: str = "<inline>"

    @classmethod
    def load(cls, path) -> "ExperimentManifest":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ManifestError([f"not valid JSON: {exc}"]) from exc
        if not isinstance(doc, dict):
            raise ManifestError(["top level must be a JSON object"])
        return cls(doc=doc, path=str(path))

    def validate(self, subcommand: str) -> dict:
        """Fill defaults, check required fields, return the effective document."""
        if subcommand not in REQUIRED:
            raise ManifestError([f"unknown subcommand {subcommand!r}"])
        problems = []
        for dotted in REQUIRED[subcommand]:
            if _get(self.doc, dotted) is None and _get(DEFAULTS, dotted) is None:
                problems.append(f"missing required field: {dotted}")
        eff = _merge(DEFAULTS, self.doc)
        if "seed" not in self.doc:
            problems.append("missing required field: seed")
        tol = eff.get("tolerances", {})
        for name, val in tol.items():
            if val is not None and not (isinstance(val, (int, float)) and val > 0):
                problems.append(f"tolerances.{name} must be a positive number")
        if eff["base_map"].get("type") not in ("denjoy", "rotation", "morse_smale"):
            problems.append("base_map.type must be one of denjoy|rotation|morse_smale")
        alpha = eff["base_map"].get("alpha")
        if isinstance(alpha, dict):
            cf = alpha.get("continued_fraction")
            if not (isinstance(cf, list) and cf and all(isinstance(a, int) and a > 0 for a in cf)):
                problems.append("base_map.alpha.continued_fraction must be a list of positive integers")
        elif alpha is not None and not (isinstance(alpha, (int, float)) and 0.0 < alpha < 1.0):
            problems.append("base_map.alpha must lie in (0, 1)")
        if problems:
            raise ManifestError(problems)
        return eff

    def effective(self, subcommand: str, seed_override=None, tolerance_scale=1.0) -> dict:
        eff = self.validate(subcommand)
        if seed_override is not None:
            eff["seed"] = int(seed_override)
        if tolerance_scale != 1.0:
            eff["tolerances"] = {
                k: (v * tolerance_scale if isinstance(v, (int, float)) else v)
                for k, v in eff["tolerances"].items()
            }
        return eff


def alpha_value(spec) -> float:
    """Rotation number from a decimal or a continued-fraction digit list."""
    if isinstance(spec, dict):
        digits = spec["continued_fraction"]
        val = 0.0
        for a in reversed(digits):
            val = 1.0 / (a + val)
        return val
    return float(spec)
