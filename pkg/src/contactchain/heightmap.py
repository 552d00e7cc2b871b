"""Square ego-centric heightmap around the humanoid root."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene import SceneInstance


@dataclass(frozen=True)
class HeightmapConfig:
    grid_n: int = 16
    extent: float = 1.0
    cell_radius: float = 0.12

    def __post_init__(self) -> None:
        if self.grid_n < 2:
            raise ValueError("grid_n must be at least 2")
        if not (self.extent > 0 and self.cell_radius > 0):
            raise ValueError("extent and cell_radius must be positive")

    def cell_offsets(self) -> np.ndarray:
        """Cell-center coordinates along one axis of the ego frame."""
        step = 2.0 * self.extent / self.grid_n
        return -self.extent + step * (np.arange(self.grid_n) + 0.5)


def cell_centers(root_pos, root_yaw: float, cfg: HeightmapConfig) -> np.ndarray:
    """World xy of every cell center, shape ``(grid_n, grid_n, 2)``.

    Row index runs along the ego y axis and column index along ego x.
    """
    off = cfg.cell_offsets()
    ex, ey = np.meshgrid(off, off, indexing="xy")
    c, s = math.cos(root_yaw), math.sin(root_yaw)
    wx = root_pos[0] + c * ex - s * ey
    wy = root_pos[1] + s * ex + c * ey
    return np.stack([wx, wy], axis=-1)


def sample_heightmap(
    scene: SceneInstance,
    root_pos,
    root_yaw: float = 0.0,
    cfg: HeightmapConfig = HeightmapConfig(),
    points: np.ndarray | None = None,
) -> np.ndarray:
    """Max point height within ``cell_radius`` (horizontally) of each cell center.

    Cells with no nearby point, or only points below ground, read the ground
    height. ``points`` overrides the scene's cloud when given.
    """
    ground = float(scene.ground_height)
    out = np.full((cfg.grid_n, cfg.grid_n), ground)
    pts = scene.points if points is None else np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        return out
    centers = cell_centers(np.asarray(root_pos, dtype=float), root_yaw, cfg).reshape(-1, 2)

    # cull points outside the map footprint before the pairwise pass
    reach = cfg.extent * math.sqrt(2.0) + cfg.cell_radius
    rel = pts[:, :2] - np.asarray(root_pos, dtype=float)[:2]
    pts = pts[(rel * rel).sum(axis=1) <= reach * reach]
    if len(pts) == 0:
        return out

    r2 = cfg.cell_radius * cfg.cell_radius
    flat = out.reshape(-1)
    chunk = max(1, 2_000_000 // len(centers))
    for start in range(0, len(pts), chunk):
        block = pts[start:start + chunk]
        d = centers[:, None, :] - block[None, :, :2]
        near = (d * d).sum(axis=2) <= r2
        heights = np.where(near, block[None, :, 2], -np.inf).max(axis=1)
        np.maximum(flat, heights, out=flat)
    return out


def heightmap_csv(values: np.ndarray) -> str:
    return "\n".join(",".join(repr(float(v)) for v in row) for row in values) + "\n"


def heightmap_pgm(values: np.ndarray, ground: float = 0.0) -> str:
    """Plain (P2) greyscale image; darker pixels are higher."""
    span = float(values.max() - ground)
    if span > 0:
        grey = 255 - np.clip(np.rint((values - ground) / span * 255), 0, 255).astype(int)
    else:
        grey = np.full(values.shape, 255, dtype=int)
    rows = [" ".join(str(v) for v in row) for row in grey]
    h, w = values.shape
    return f"P2\n{w} {h}\n255\n" + "\n".join(rows) + "\n"
