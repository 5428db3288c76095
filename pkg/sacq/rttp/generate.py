"""Synthetic instances: a 2-D grid phantom and random feasible block problems."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from sacq.errors import ConfigError, DegenerateGeometryError
from sacq.landweber import LinearMap
from sacq.log import get_logger
from sacq.operators import Sense
from sacq.pvc import max_violations
from sacq.rttp.problem import BlockSpec, PvcSpec

log = get_logger(__name__)

TARGET = "target"
AVOIDANCE = "avoidance"


@dataclass(frozen=True)
class StructureSpec:
    """A disk or ring, in units of the grid size, centred at `center`.

    Targets get lower bounds, avoidance structures upper bounds.
    """

    name: str
    kind: str
    inner: float
    outer: float
    dose: float
    alpha: Optional[float] = None
    beta: Optional[float] = None
    center: tuple = (0.5, 0.5)

    @property
    def sense(self) -> Sense:
        return Sense.LOWER if self.kind == TARGET else Sense.UPPER

    @property
    def pvc(self) -> Optional[PvcSpec]:
        if self.alpha is None:
            return None
        return PvcSpec(self.alpha, self.beta)


DEFAULT_STRUCTURES = (
    StructureSpec("PTV", TARGET, inner=0.0, outer=0.2, dose=60.0, alpha=0.2, beta=0.1),
    StructureSpec("OAR", AVOIDANCE, inner=0.28, outer=0.45, dose=20.0, alpha=0.3, beta=0.1),
)


@dataclass(frozen=True)
class PhantomConfig:
    grid_size: int = 16
    beamlets: int = 8
    angles: tuple = (0.0, 90.0)
    kernel_width: float = 1.5
    tail_threshold: float = 1e-6
    jitter: float = 0.25
    bounds: str = "witness"
    structures: tuple = DEFAULT_STRUCTURES

    def check(self) -> None:
        if self.grid_size < 2:
            raise ConfigError(f"grid_size must be at least 2, got {self.grid_size}")
        if self.beamlets < 1:
            raise ConfigError(f"beamlets must be at least 1, got {self.beamlets}")
        if not self.angles:
            raise ConfigError("angles must not be empty")
        if self.kernel_width <= 0:
            raise ConfigError(f"kernel_width must be positive, got {self.kernel_width}")
        if not (0.0 <= self.tail_threshold < 1.0):
            raise ConfigError(f"tail_threshold must lie in [0, 1), got {self.tail_threshold}")
        if self.jitter < 0:
            raise ConfigError(f"jitter must be nonnegative, got {self.jitter}")
        if self.bounds not in ("witness", "prescribed"):
            raise ConfigError(f"bounds must be 'witness' or 'prescribed', got {self.bounds!r}")
        if not self.structures:
            raise ConfigError("phantom needs at least one structure")
        for s in self.structures:
            if s.kind not in (TARGET, AVOIDANCE):
                raise ConfigError(f"structure {s.name!r}: kind must be {TARGET!r} or {AVOIDANCE!r}")
            if not (0.0 <= s.inner < s.outer):
                raise ConfigError(f"structure {s.name!r}: need 0 <= inner < outer")


@dataclass
class Geometry:
    grid_size: int
    voxel_centers: np.ndarray
    masks: dict
    beamlet_angles: np.ndarray
    beamlet_offsets: np.ndarray
    kernel_width: float
    tail_threshold: float
    witness: Optional[np.ndarray] = None

    def ray_distances(self) -> np.ndarray:
        """Distance of every voxel centre (row-major) to every beamlet ray."""
        c = self.grid_size / 2.0
        theta = np.deg2rad(self.beamlet_angles)
        normal = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
        along = (self.voxel_centers - c) @ normal.T
        return np.abs(along - self.beamlet_offsets[None, :])

    def voxel_indices(self, name: str) -> np.ndarray:
        return np.flatnonzero(self.masks[name].ravel())


def _beamlet_layout(config: PhantomConfig, rng: np.random.Generator):
    angles = []
    offsets = []
    per_angle = [config.beamlets // len(config.angles)] * len(config.angles)
    for i in range(config.beamlets % len(config.angles)):
        per_angle[i] += 1
    reach = 0.4 * config.grid_size
    for angle, count in zip(config.angles, per_angle):
        if count == 0:
            continue
        base = np.linspace(-reach, reach, count) if count > 1 else np.zeros(1)
        angles.extend([float(angle)] * count)
        offsets.extend(base + rng.uniform(-config.jitter, config.jitter, count))
    return np.asarray(angles), np.asarray(offsets)


def generate_phantom(config: Optional[PhantomConfig] = None, seed: int = 0):
    """Build the blocks of a 2-D phantom and its geometry.

    Each beamlet is a straight ray across the grid depositing
    exp(-d^2 / 2w^2) in a voxel at distance d from it; values under
    `tail_threshold` are dropped. With `bounds="witness"` the bounds are
    fitted around the dose of a random nonnegative intensity vector so the
    instance is feasible with every PVC tight.
    """
    config = config or PhantomConfig()
    config.check()
    rng = np.random.default_rng(seed)
    g = config.grid_size

    ii, jj = np.meshgrid(np.arange(g), np.arange(g), indexing="ij")
    centers = np.stack([ii.ravel() + 0.5, jj.ravel() + 0.5], axis=1)

    masks = {}
    for s in config.structures:
        cx, cy = s.center[0] * g, s.center[1] * g
        r = np.hypot(centers[:, 0] - cx, centers[:, 1] - cy)
        mask = (r >= s.inner * g) & (r <= s.outer * g)
        for other in masks.values():
            mask &= ~other.ravel()
        if not mask.any():
            raise DegenerateGeometryError(f"structure {s.name!r} contains no voxels")
        masks[s.name] = mask.reshape(g, g)

    angles, offsets = _beamlet_layout(config, rng)
    geometry = Geometry(
        grid_size=g,
        voxel_centers=centers,
        masks=masks,
        beamlet_angles=angles,
        beamlet_offsets=offsets,
        kernel_width=config.kernel_width,
        tail_threshold=config.tail_threshold,
    )
    kernel = np.exp(-geometry.ray_distances() ** 2 / (2.0 * config.kernel_width ** 2))
    kernel[kernel < config.tail_threshold] = 0.0

    witness = rng.uniform(0.5, 1.5, angles.shape[0])
    blocks = []
    for s in config.structures:
        voxels = geometry.voxel_indices(s.name)
        dose_map = kernel[voxels]
        undosed = np.flatnonzero(~dose_map.any(axis=1))
        if undosed.size:
            raise DegenerateGeometryError(
                f"structure {s.name!r}: {undosed.size} voxels receive no dose from any beamlet"
            )
        entries = [
            (int(r), int(c), float(dose_map[r, c]))
            for r, c in zip(*np.nonzero(dose_map))
        ]
        linear_map = LinearMap.from_triplets(dose_map.shape, entries)
        if config.bounds == "witness":
            geometry.witness = witness
            k = max_violations(s.alpha, voxels.size) if s.alpha is not None else 0
            bounds = bounds_from_witness(
                linear_map.matvec(witness), s.sense, k, s.beta or 0.0, rng
            )
        else:
            bounds = np.full(voxels.size, float(s.dose))
        blocks.append(BlockSpec(s.name, linear_map, s.sense, bounds, s.pvc))
        log.debug("structure %s: %d voxels", s.name, voxels.size)
    return blocks, geometry


def bounds_from_witness(
    dose: np.ndarray,
    sense: Sense,
    k: int,
    beta: float,
    rng: np.random.Generator,
    tight: bool = True,
    margin: float = 0.2,
) -> np.ndarray:
    """Bounds that `dose` meets after relaxation by beta, with k original-bound misses.

    With `tight` exactly k components (among those with positive dose)
    violate their original bound; otherwise a random number up to k.
    """
    m = dose.shape[0]
    positive = np.flatnonzero(dose > 0.0)
    misses = min(k, positive.size) if beta > 0.0 else 0
    if misses and not tight:
        misses = int(rng.integers(0, misses + 1))
    violators = rng.choice(positive, size=misses, replace=False) if misses else np.empty(0, dtype=int)

    # every non-violating row keeps at least half the margin as slack
    slack = margin * (0.5 + 0.5 * rng.random(m))
    scale = float(dose.mean()) if np.any(dose > 0.0) else 1.0
    if sense is Sense.UPPER:
        bounds = dose * (1.0 + slack) + slack * scale * (dose == 0.0)
    else:
        bounds = dose * (1.0 - slack)

    if misses:
        u = rng.uniform(0.2, 0.8, misses)
        if sense is Sense.UPPER:
            bounds[violators] = dose[violators] / (1.0 + beta * u)
        else:
            bounds[violators] = dose[violators] / (1.0 - beta * u)
    return bounds


@dataclass(frozen=True)
class BlockDims:
    name: str
    sense: str
    rows: int
    alpha: Optional[float] = None
    beta: Optional[float] = None


@dataclass(frozen=True)
class InstanceDims:
    n: int
    blocks: tuple = field(default_factory=tuple)
    density: float = 1.0
    tight: bool = True

    def check(self) -> None:
        if self.n < 1:
            raise ConfigError(f"n must be at least 1, got {self.n}")
        if not self.blocks:
            raise ConfigError("instance needs at least one block")
        if not (0.0 < self.density <= 1.0):
            raise ConfigError(f"density must lie in (0, 1], got {self.density}")
        for b in self.blocks:
            if b.rows < 1:
                raise ConfigError(f"block {b.name!r}: rows must be at least 1")
            Sense.parse(b.sense)
            if (b.alpha is None) != (b.beta is None):
                raise ConfigError(f"block {b.name!r}: give both alpha and beta or neither")


def generate_feasible_instance(dims: InstanceDims, seed: int = 0):
    """Random nonnegative blocks plus a witness x* that solves the translated problem."""
    dims.check()
    rng = np.random.default_rng(seed)
    witness = rng.uniform(0.0, 1.0, dims.n)
    blocks = []
    for b in dims.blocks:
        sense = Sense.parse(b.sense)
        values = rng.random((b.rows, dims.n))
        keep = rng.random((b.rows, dims.n)) < dims.density
        matrix = values * keep
        # every row needs at least one nonzero entry
        empty = np.flatnonzero(~matrix.any(axis=1))
        matrix[empty, rng.integers(0, dims.n, empty.size)] = rng.uniform(0.5, 1.0, empty.size)
        pvc = PvcSpec(b.alpha, b.beta) if b.alpha is not None else None
        k = max_violations(b.alpha, b.rows) if pvc else 0
        dose = matrix @ witness
        bounds = bounds_from_witness(dose, sense, k, b.beta or 0.0, rng, tight=dims.tight)
        blocks.append(BlockSpec(b.name, LinearMap.from_dense(matrix), sense, bounds, pvc))
    return blocks, witness
