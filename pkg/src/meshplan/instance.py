"""Planning instances: candidate sites on a grid, demand points, radio limits."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

FORMAT_VERSION = 1


class InstanceError(ValueError):
    """Invalid instance parameters or malformed instance file."""


@dataclass(frozen=True)
class RadioParams:
    """Per-node radio limits shared by every candidate site."""

    traffic: float = 2.0
    capacity: float = 54.0
    radios: int = 3
    channels: int = 11
    max_hops: int = 3

    def validate(self) -> None:
        if self.traffic <= 0:
            raise InstanceError("traffic must be positive")
        if self.capacity <= 0:
            raise InstanceError("capacity must be positive")
        if self.radios < 1:
            raise InstanceError("radios must be >= 1")
        if self.channels < self.radios:
            raise InstanceError(
                f"channels ({self.channels}) must be >= radios ({self.radios})"
            )
        if self.max_hops < 1:
            raise InstanceError("max_hops must be >= 1")


@dataclass(frozen=True, eq=False)
class PlanningInstance:
    """Immutable problem data: geometry, traffic, radio limits, capacities.

    Sites are indexed row-major on the grid; site j sits at
    (col * spacing, row * spacing). Coverage/connectivity matrices are derived
    from geometry unless a seeded random override (density) is active.
    """

    rows: int
    cols: int
    spacing: float
    sites: np.ndarray          # (s, 2) float64 positions
    dp_positions: np.ndarray   # (n, 2) float64
    dp_traffic: np.ndarray     # (n,) float64
    coverage_radius: float
    backbone_range: float
    R: int
    K: int
    C_max: float
    A: int
    M: float
    seed: int
    capacity_overrides: tuple = ()          # ((j, l, k, capacity), ...)
    random_matrix_density: float | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InstanceError("grid must have at least one site")
        if self.spacing <= 0:
            raise InstanceError("spacing must be positive")
        if self.coverage_radius <= 0 or self.backbone_range <= 0:
            raise InstanceError("radii must be positive")
        if self.R < 1:
            raise InstanceError("radios must be >= 1")
        if self.K < self.R:
            raise InstanceError(f"channels ({self.K}) must be >= radios ({self.R})")
        if self.C_max <= 0:
            raise InstanceError("capacity must be positive")
        if self.A < 1:
            raise InstanceError("hop bound must be >= 1")
        if self.M <= 0:
            raise InstanceError("gateway big-M must be positive")
        if self.sites.shape != (self.rows * self.cols, 2):
            raise InstanceError("sites array does not match grid shape")
        if self.dp_positions.shape != (len(self.dp_traffic), 2):
            raise InstanceError("demand point arrays disagree on count")
        if np.any(self.dp_traffic <= 0):
            raise InstanceError("demand traffic must be positive")
        if self.random_matrix_density is not None and not (
            0.0 < self.random_matrix_density <= 1.0
        ):
            raise InstanceError("random matrix density must be in (0, 1]")
        for j, l, k, cap in self.capacity_overrides:
            if not (0 <= j < self.num_sites and 0 <= l < self.num_sites):
                raise InstanceError(f"capacity override site out of range: ({j},{l})")
            if not 0 <= k < self.K:
                raise InstanceError(f"capacity override channel out of range: {k}")
            if cap <= 0:
                raise InstanceError("link capacity must be positive")
        self.sites.setflags(write=False)
        self.dp_positions.setflags(write=False)
        self.dp_traffic.setflags(write=False)

    @property
    def num_sites(self) -> int:
        return self.rows * self.cols

    @property
    def num_dps(self) -> int:
        return len(self.dp_traffic)

    def site_position(self, j: int) -> tuple[float, float]:
        return float(self.sites[j, 0]), float(self.sites[j, 1])

    def link_capacities(self) -> np.ndarray:
        """(s, s, K) capacity tensor: uniform C_max plus symmetric overrides."""
        cached = self._cache.get("caps")
        if cached is not None:
            return cached
        s = self.num_sites
        cap = np.full((s, s, self.K), self.C_max, dtype=np.float64)
        for j, l, k, value in self.capacity_overrides:
            cap[j, l, k] = value
            cap[l, j, k] = value
        cap.setflags(write=False)
        self._cache["caps"] = cap
        return cap

    def content_hash(self) -> str:
        """Stable sha256 over the canonical serialized form."""
        blob = json.dumps(instance_to_dict(self), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()


def build_grid_instance(
    rows: int,
    cols: int,
    n_dps: int,
    radio: RadioParams,
    seed: int,
    spacing: float = 1.0,
    coverage_radius: float | None = None,
    backbone_range: float | None = None,
    random_matrix_density: float | None = None,
) -> PlanningInstance:
    """Grid of rows x cols candidate sites plus n_dps uniform demand points."""
    if rows < 2 or cols < 2:
        raise InstanceError("grid generation needs rows >= 2 and cols >= 2")
    if n_dps < 1:
        raise InstanceError("need at least one demand point")
    radio.validate()
    rng = np.random.default_rng(seed)
    sites = np.array(
        [(c * spacing, r * spacing) for r in range(rows) for c in range(cols)],
        dtype=np.float64,
    )
    width = (cols - 1) * spacing
    height = (rows - 1) * spacing
    dp_positions = np.column_stack(
        [rng.uniform(0.0, width, n_dps), rng.uniform(0.0, height, n_dps)]
    )
    dp_traffic = np.full(n_dps, radio.traffic, dtype=np.float64)
    return PlanningInstance(
        rows=rows,
        cols=cols,
        spacing=spacing,
        sites=sites,
        dp_positions=dp_positions,
        dp_traffic=dp_traffic,
        coverage_radius=coverage_radius if coverage_radius is not None else spacing,
        backbone_range=backbone_range if backbone_range is not None else spacing,
        R=radio.radios,
        K=radio.channels,
        C_max=radio.capacity,
        A=radio.max_hops,
        M=n_dps * float(np.max(dp_traffic)) if n_dps else radio.capacity,
        seed=seed,
        random_matrix_density=random_matrix_density,
    )


def coverage_matrix(instance: PlanningInstance) -> np.ndarray:
    """a[i, j] = 1 iff demand point i lies within coverage_radius of site j."""
    cached = instance._cache.get("coverage")
    if cached is not None:
        return cached
    if instance.random_matrix_density is not None:
        rng = np.random.default_rng((instance.seed, 0xC0))
        a = (
            rng.random((instance.num_dps, instance.num_sites))
            < instance.random_matrix_density
        ).astype(np.uint8)
    elif instance.num_dps == 0:
        a = np.zeros((0, instance.num_sites), dtype=np.uint8)
    else:
        d = np.hypot(
            instance.dp_positions[:, None, 0] - instance.sites[None, :, 0],
            instance.dp_positions[:, None, 1] - instance.sites[None, :, 1],
        )
        a = (d <= instance.coverage_radius + 1e-12).astype(np.uint8)
    a.setflags(write=False)
    instance._cache["coverage"] = a
    return a


def connectivity_matrix(instance: PlanningInstance) -> np.ndarray:
    """b[j, l] = 1 iff sites j, l are within backbone_range (symmetric, zero diag)."""
    cached = instance._cache.get("connectivity")
    if cached is not None:
        return cached
    if instance.random_matrix_density is not None:
        rng = np.random.default_rng((instance.seed, 0xB0))
        upper = rng.random((instance.num_sites, instance.num_sites))
        b = (upper < instance.random_matrix_density).astype(np.uint8)
        b = np.triu(b, k=1)
        b = (b | b.T).astype(np.uint8)
    else:
        d = np.hypot(
            instance.sites[:, None, 0] - instance.sites[None, :, 0],
            instance.sites[:, None, 1] - instance.sites[None, :, 1],
        )
        b = (d <= instance.backbone_range + 1e-12).astype(np.uint8)
        np.fill_diagonal(b, 0)
    b.setflags(write=False)
    instance._cache["connectivity"] = b
    return b


CORNER = "corner"
EDGE = "edge"
INTERNAL = "internal"


def classify_site(instance: PlanningInstance, j: int) -> str:
    """Grid position class: corner (2 neighbors), edge (3) or internal (4)."""
    row, col = divmod(j, instance.cols)
    on_row_border = row in (0, instance.rows - 1)
    on_col_border = col in (0, instance.cols - 1)
    if on_row_border and on_col_border:
        return CORNER
    if on_row_border or on_col_border:
        return EDGE
    return INTERNAL


def grid_neighbors(instance: PlanningInstance, j: int) -> list[int]:
    """4-neighborhood in fixed north, east, south, west order (north = +row)."""
    row, col = divmod(j, instance.cols)
    out = []
    if row + 1 < instance.rows:
        out.append((row + 1) * instance.cols + col)
    if col + 1 < instance.cols:
        out.append(row * instance.cols + col + 1)
    if row - 1 >= 0:
        out.append((row - 1) * instance.cols + col)
    if col - 1 >= 0:
        out.append(row * instance.cols + col - 1)
    return out


def instance_to_dict(instance: PlanningInstance) -> dict:
    data = {
        "version": FORMAT_VERSION,
        "rows": instance.rows,
        "cols": instance.cols,
        "spacing": instance.spacing,
        "sites": [[float(x), float(y)] for x, y in instance.sites],
        "demand_points": [
            {
                "x": float(instance.dp_positions[i, 0]),
                "y": float(instance.dp_positions[i, 1]),
                "traffic": float(instance.dp_traffic[i]),
            }
            for i in range(instance.num_dps)
        ],
        "coverage_radius": instance.coverage_radius,
        "backbone_range": instance.backbone_range,
        "R": instance.R,
        "K": instance.K,
        "C_max": instance.C_max,
        "A": instance.A,
        "M": instance.M,
        "seed": instance.seed,
    }
    if instance.capacity_overrides:
        data["link_capacities"] = [
            {"j": j, "l": l, "k": k, "capacity": cap}
            for j, l, k, cap in instance.capacity_overrides
        ]
    if instance.random_matrix_density is not None:
        data["random_matrices"] = {"density": instance.random_matrix_density}
    return data


def save_instance(instance: PlanningInstance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2, sort_keys=True)
        fh.write("\n")


def instance_from_dict(data: dict) -> PlanningInstance:
    if not isinstance(data, dict):
        raise InstanceError("instance file must hold a JSON object")
    version = data.get("version")
    if version != FORMAT_VERSION:
        raise InstanceError(f"unsupported instance format version: {version!r}")
    required = [
        "rows", "cols", "spacing", "sites", "demand_points",
        "coverage_radius", "backbone_range", "R", "K", "C_max", "A", "M", "seed",
    ]
    missing = [key for key in required if key not in data]
    if missing:
        raise InstanceError(f"instance file missing fields: {', '.join(missing)}")
    sites = np.array(data["sites"], dtype=np.float64)
    if sites.ndim != 2 or sites.shape[1] != 2:
        raise InstanceError("sites must be a list of [x, y] pairs")
    dps = data["demand_points"]
    try:
        dp_positions = np.array([[p["x"], p["y"]] for p in dps], dtype=np.float64)
        dp_traffic = np.array([p["traffic"] for p in dps], dtype=np.float64)
    except (TypeError, KeyError) as exc:
        raise InstanceError(f"malformed demand point entry: {exc}") from exc
    if len(dps) == 0:
        dp_positions = dp_positions.reshape(0, 2)
    overrides = tuple(
        (int(e["j"]), int(e["l"]), int(e["k"]), float(e["capacity"]))
        for e in data.get("link_capacities", ())
    )
    density = None
    if "random_matrices" in data:
        density = float(data["random_matrices"]["density"])
    try:
        return PlanningInstance(
            rows=int(data["rows"]),
            cols=int(data["cols"]),
            spacing=float(data["spacing"]),
            sites=sites,
            dp_positions=dp_positions,
            dp_traffic=dp_traffic,
            coverage_radius=float(data["coverage_radius"]),
            backbone_range=float(data["backbone_range"]),
            R=int(data["R"]),
            K=int(data["K"]),
            C_max=float(data["C_max"]),
            A=int(data["A"]),
            M=float(data["M"]),
            seed=int(data["seed"]),
            capacity_overrides=overrides,
            random_matrix_density=density,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InstanceError):
            raise
        raise InstanceError(f"invalid instance field: {exc}") from exc


def load_instance(path) -> PlanningInstance:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"instance file is not valid JSON: {exc}") from exc
    return instance_from_dict(data)


def default_gateway_count(assigned_demand: float, c_max: float) -> int:
    """max(1, ceil(demand / C_max)) with a guard against float fuzz."""
    return max(1, math.ceil(assigned_demand / c_max - 1e-12))
