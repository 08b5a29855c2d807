"""Deterministic synthetic road scenes for desk-scale testing.

The three kinds are invented fixtures, not measurements. They differ in
road width, terrain roughness and roadside structures so that structural
statistics separate them:

* ``highway``: 24 m flat strip (z noise 0.05 m), flat verges, 65 mph.
* ``rural``: 5 m strip over rolling terrain (+-3 m sinusoids, 0.3 m noise off
  the road), 35 mph.
* ``urban``: 10 m strip flanked by boxes 10-80 m tall, 25 mph.
"""

from __future__ import annotations

import math

import numpy as np

from .core import PointCloud, SpeedSample
from .segment_sampler import SEGMENT_SIDE

KINDS = ("highway", "rural", "urban")
SCENE_POINTS = 60_000
ROAD_WIDTH = {"highway": 24.0, "rural": 5.0, "urban": 10.0}
SPEED_MPH = {"highway": 65.0, "rural": 35.0, "urban": 25.0}


def _intensity(rng, n, mean, sd):
    return np.clip(np.round(rng.normal(mean, sd, n)), 0, 255)


def synth_scene(kind: str, seed: int, origin=(0.0, 0.0),
                n_points: int = SCENE_POINTS) -> tuple[PointCloud, SpeedSample]:
    """One ``SEGMENT_SIDE``-square scene centered on ``origin`` and its label.

    The road passes through the center along a seeded heading.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown scene kind {kind!r}; expected one of {KINDS}")
    rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, KINDS.index(kind)])
    ox, oy = float(origin[0]), float(origin[1])
    half = SEGMENT_SIDE / 2
    heading = float(rng.uniform(0.0, 360.0))
    h = math.radians(heading)

    x = rng.uniform(-half, half, n_points)
    y = rng.uniform(-half, half, n_points)
    along = x * math.sin(h) + y * math.cos(h)
    across = x * math.cos(h) - y * math.sin(h)
    road = np.abs(across) <= ROAD_WIDTH[kind] / 2
    n_road = int(road.sum())

    inten = _intensity(rng, n_points, 150.0, 25.0)
    inten[road] = _intensity(rng, n_road, 70.0, 8.0)

    if kind == "highway":
        z = 0.4 + rng.normal(0.0, 0.1, n_points)
        z[road] = rng.normal(0.0, 0.05, n_road)
    elif kind == "rural":
        p1, p2 = rng.uniform(0, 2 * math.pi, 2)
        terrain = (1.8 * np.sin(2 * math.pi * along / 70.0 + p1)
                   + 1.2 * np.sin(2 * math.pi * across / 45.0 + p2))
        z = terrain + rng.normal(0.0, 0.3, n_points)
        z[road] = terrain[road] + rng.normal(0.0, 0.05, n_road)
    else:
        z = rng.normal(0.0, 0.1, n_points)
        z[road] = rng.normal(0.0, 0.05, n_road)
        setback = ROAD_WIDTH[kind] / 2 + 4.0
        for side in (-1.0, 1.0):
            start = -half * 1.5
            while start < half * 1.5:
                width = rng.uniform(15.0, 35.0)
                depth = rng.uniform(15.0, 40.0)
                height = rng.uniform(10.0, 80.0)
                inside = ((along >= start) & (along <= start + width)
                          & (side * across >= setback) & (side * across <= setback + depth))
                z[inside] = height + rng.normal(0.0, 0.05, int(inside.sum()))
                inten[inside] = _intensity(rng, int(inside.sum()), 110.0, 15.0)
                start += width + rng.uniform(3.0, 10.0)

    cloud = PointCloud(np.stack([x + ox, y + oy, z], axis=1), inten)
    label = SpeedSample(f"{kind}-{seed}", (ox, oy), heading, SPEED_MPH[kind])
    return cloud, label
