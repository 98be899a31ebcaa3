"""JSON and CSV persistence.

Complex numbers are stored as [re, im] pairs and matrices as row-major
nested arrays, so every file round-trips exactly. Output formatting is
deterministic: rerunning a command with the same config and seed yields
byte-identical files (wall-clock timing columns are the documented
exception in sweep tables).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .arrays import MeasurementSet, Scene

__all__ = [
    "complex_to_pairs",
    "pairs_to_complex",
    "scene_to_dict",
    "scene_from_dict",
    "measurement_set_to_dict",
    "measurement_set_from_dict",
    "save_json",
    "load_json",
    "write_csv",
]


def complex_to_pairs(arr: np.ndarray):
    """Nested row-major lists with complex entries encoded as [re, im]."""
    arr = np.asarray(arr, dtype=complex)
    if arr.ndim == 0:
        return [arr.real.item(), arr.imag.item()]
    return [complex_to_pairs(sub) for sub in arr]


def pairs_to_complex(data) -> np.ndarray:
    """Inverse of :func:`complex_to_pairs`."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise ValueError("expected nested [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def scene_to_dict(scene: Scene) -> dict:
    return {
        "true_doas_deg": [float(x) for x in scene.true_doas],
        "num_snapshots": scene.num_snapshots,
        "source_matrix": complex_to_pairs(scene.source_matrix),
        "calib_coeffs": complex_to_pairs(scene.calib_coeffs),
        "noise_sigma": scene.noise_sigma,
    }


def scene_from_dict(data: dict) -> Scene:
    return Scene(
        true_doas=np.asarray(data["true_doas_deg"], dtype=float),
        source_matrix=pairs_to_complex(data["source_matrix"]),
        calib_coeffs=pairs_to_complex(data["calib_coeffs"]),
        noise_sigma=float(data["noise_sigma"]),
    )


def measurement_set_to_dict(ms: MeasurementSet) -> dict:
    return {
        "measurements": complex_to_pairs(ms.Y),
        "rng_seed": ms.rng_seed,
        "scene": scene_to_dict(ms.scene) if ms.scene is not None else None,
    }


def measurement_set_from_dict(data: dict) -> MeasurementSet:
    scene = scene_from_dict(data["scene"]) if data.get("scene") is not None else None
    return MeasurementSet(
        Y=pairs_to_complex(data["measurements"]),
        rng_seed=int(data["rng_seed"]),
        scene=scene,
    )


def save_json(path: Union[str, Path], payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_json(path: Union[str, Path]) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_csv(path: Union[str, Path], header: Sequence[str],
              rows: Iterable[Sequence]) -> None:
    """Comma-separated UTF-8 with a header row and repr-formatted floats."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(c) for c in row) + "\n")


def _format_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)
