"""Procedural stand-in part clouds for the asset ids used by the bundled plans.

Each part is a box whose six faces are sampled on a regular grid. Clouds are
authored in the source datasets' local convention (y up, front towards +z,
left towards -x) so the usual ``[pi/2, 0, 0]`` plan rotation stands them up.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

Box = tuple[tuple[float, float, float], tuple[float, float, float]]

_BED = {
    "frame": [((-0.40, 0.00, -0.28), (0.40, 0.14, 0.28))],
    "mattress": [((-0.38, 0.14, -0.27), (0.38, 0.20, 0.27))],
    "pillow": [((0.26, 0.20, -0.15), (0.36, 0.24, 0.15))],
    "headboard": [((0.40, 0.00, -0.28), (0.42, 0.40, 0.28))],
}


def _legs(half_x: float, half_z: float, height: float, t: float) -> list[Box]:
    return [
        ((sx * half_x - (t if sx > 0 else 0), 0.0, sz * half_z - (t if sz > 0 else 0)),
         (sx * half_x + (0 if sx > 0 else t), height, sz * half_z + (0 if sz > 0 else t)))
        for sx in (-1, 1)
        for sz in (-1, 1)
    ]


_CHAIR = {
    "seat": [((-0.17, 0.26, -0.17), (0.17, 0.30, 0.17))],
    "back": [((-0.17, 0.30, -0.20), (0.17, 0.68, -0.17))],
    "left_arm": [((-0.21, 0.30, -0.17), (-0.17, 0.44, 0.15))],
    "right_arm": [((0.17, 0.30, -0.17), (0.21, 0.44, 0.15))],
    "legs": _legs(0.17, 0.17, 0.26, 0.03),
}

_TABLE = {
    "top": [((-0.30, 0.33, -0.20), (0.30, 0.36, 0.20))],
    "legs": _legs(0.30, 0.20, 0.33, 0.03),
}

_LAPTOP = {
    "keyboard": [((-0.25, 0.00, -0.17), (0.25, 0.03, 0.17))],
    "screen": [((-0.25, 0.03, -0.18), (0.25, 0.35, -0.17))],
}

TEMPLATES = {"bed": _BED, "chair": _CHAIR, "table": _TABLE, "laptop": _LAPTOP}

# asset id -> (category, template part -> dataset part name)
ASSETS: dict[str, tuple[str, dict[str, str]]] = {
    "12747": ("bed", {"mattress": "mattress25", "pillow": "pillow26", "frame": "bed_frame24", "headboard": "headboard27"}),
    "10873": ("bed", {"mattress": "mattress16", "pillow": "pillow17", "frame": "bed_frame15", "headboard": "headboard18"}),
    "45005": ("chair", {
        "seat": "seat_soft_surface42", "back": "back_soft_surface47",
        "left_arm": "arm_sofa_style44", "right_arm": "arm_sofa_style48", "legs": "leg40",
    }),
    "37825": ("chair", {
        "seat": "seat_soft_surface58", "back": "back_soft_surface61",
        "left_arm": "arm_sofa_style59", "right_arm": "arm_sofa_style60", "legs": "leg56",
    }),
    "21980": ("table", {"top": "board3", "legs": "leg4"}),
    "11873": ("laptop", {"keyboard": "keyboard15", "screen": "screen14"}),
}

SPACING = {"bed": 0.02, "chair": 0.015, "table": 0.02, "laptop": 0.02}


def box_surface(lo, hi, spacing: float) -> np.ndarray:
    """Grid samples on the six faces of an axis-aligned box."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    axes = [np.linspace(lo[i], hi[i], max(2, int(np.ceil((hi[i] - lo[i]) / spacing)) + 1)) for i in range(3)]
    faces = []
    for axis in range(3):
        a, b = [i for i in range(3) if i != axis]
        ga, gb = np.meshgrid(axes[a], axes[b], indexing="ij")
        for value in (lo[axis], hi[axis]):
            face = np.empty((ga.size, 3))
            face[:, axis] = value
            face[:, a] = ga.ravel()
            face[:, b] = gb.ravel()
            faces.append(face)
    return np.unique(np.round(np.concatenate(faces), 6), axis=0)


def category_clouds(category: str, spacing: float | None = None) -> dict[str, np.ndarray]:
    spacing = SPACING[category] if spacing is None else spacing
    return {
        part: np.concatenate([box_surface(lo, hi, spacing) for lo, hi in boxes])
        for part, boxes in TEMPLATES[category].items()
    }


def asset_clouds(asset_id: str) -> dict[str, np.ndarray]:
    category, names = ASSETS[asset_id]
    clouds = category_clouds(category)
    return {names[part]: pts for part, pts in clouds.items()}


def write_assets(out_dir: str | Path, asset_ids=None) -> list[Path]:
    """Write one ``<asset_id>.json`` part-cloud file per asset."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for asset_id in asset_ids or sorted(ASSETS):
        clouds = asset_clouds(asset_id)
        doc = {name: pts.round(6).tolist() for name, pts in sorted(clouds.items())}
        path = out / f"{asset_id}.json"
        path.write_text(json.dumps(doc, separators=(",", ":")) + "\n")
        written.append(path)
    return written


if __name__ == "__main__":
    write_assets(Path(__file__).parent / "assets")
