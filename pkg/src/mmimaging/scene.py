"""Synthetic scenes and channel impulse response synthesis.

A scene is a set of point scatterers (targets plus static clutter), an
internal-leakage profile on the first few taps, and a noise power. The
CIR cube between every Tx/Rx element pair collects, per scatterer, a
complex return at the tap nearest the round-trip delay:

    tap   = round(tau / tap_spacing),   tau = (|p_s - p_tx| + |p_s - p_rx|) / c
    value = reflectivity * exp(-j 2 pi f_c tau)

Human subjects are stood in for by ellipsoid phantoms whose array-facing
surface is sampled into point scatterers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import SPEED_OF_LIGHT, ArrayGeometry

#: Tap spacing of the 60 GHz device (3.52 GHz bandwidth).
DEFAULT_TAP_SPACING = 0.28e-9

_GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


class SceneError(ValueError):
    """Invalid scene, phantom, or simulation request."""


@dataclass(frozen=True)
class Scatterer:
    """Point reflector: (x, y, z) position in meters (x = range axis away
    from the panel) and a complex reflectivity."""

    position: tuple
    reflectivity: complex

    def __post_init__(self):
        if len(self.position) != 3:
            raise SceneError("scatterer position must be (x, y, z)")
        if self.position[0] <= 0:
            raise SceneError("scatterer must sit in front of the array (x > 0)")
        if not np.isfinite(self.reflectivity):
            raise SceneError("scatterer reflectivity must be finite")


@dataclass
class Scene:
    """Everything a single capture sees: targets, clutter, leakage, noise."""

    targets: list = field(default_factory=list)
    clutter: list = field(default_factory=list)
    leakage_profile: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    noise_power: float = 0.0

    def __post_init__(self):
        self.leakage_profile = np.asarray(self.leakage_profile, dtype=complex)
        if self.leakage_profile.ndim != 1:
            raise SceneError("leakage profile must be a 1-D tap vector")
        if self.noise_power < 0:
            raise SceneError("noise power must be non-negative")

    def without_targets(self) -> "Scene":
        """The matching empty-room capture: clutter and leakage only."""
        return Scene(
            targets=[],
            clutter=list(self.clutter),
            leakage_profile=self.leakage_profile.copy(),
            noise_power=self.noise_power,
        )


@dataclass
class CirFrame:
    """One CIR snapshot: complex cube (n_tx, n_rx, taps) plus tap spacing."""

    data: np.ndarray
    tap_spacing: float = DEFAULT_TAP_SPACING
    timestamp: float = 0.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim != 3:
            raise SceneError("CIR cube must have (tx, rx, tap) axes")
        if self.tap_spacing <= 0:
            raise SceneError("tap spacing must be positive")

    @property
    def n_tx(self) -> int:
        return self.data.shape[0]

    @property
    def n_rx(self) -> int:
        return self.data.shape[1]

    @property
    def n_taps(self) -> int:
        return self.data.shape[2]

    def tap_range_m(self, tap: int) -> float:
        """One-way range of a tap center (c * tap * spacing / 2)."""
        return SPEED_OF_LIGHT * tap * self.tap_spacing / 2.0


@dataclass(frozen=True)
class Ellipsoid:
    center: tuple
    semi_axes: tuple

    def __post_init__(self):
        if len(self.center) != 3 or len(self.semi_axes) != 3:
            raise SceneError("ellipsoid needs 3-D center and semi-axes")
        if min(self.semi_axes) <= 0:
            raise SceneError("ellipsoid semi-axes must be positive")

    def surface_area(self) -> float:
        # Thomsen approximation (exact for spheres, <1.1% error otherwise).
        p = 1.6075
        a, b, c = self.semi_axes
        return 4.0 * np.pi * (((a * b) ** p + (a * c) ** p + (b * c) ** p) / 3.0) ** (1.0 / p)


@dataclass
class HumanPhantom:
    """Union of ellipsoids standing in for a person facing the panel."""

    ellipsoids: list
    sample_density: float = 500.0
    distance: float = 1.5

    def __post_init__(self):
        if not (0.1 <= self.distance <= 10.0):
            raise SceneError("phantom distance outside simulator's valid range")


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def synthesize_cir(
    scene: Scene,
    geom: ArrayGeometry,
    k_taps: int,
    seed,
    deposition: str = "nearest",
    tap_spacing: float = DEFAULT_TAP_SPACING,
    timestamp: float = 0.0,
) -> CirFrame:
    """Synthesize one CIR frame for a scene.

    Args:
        scene: targets + clutter + leakage + noise description.
        geom: panel geometry; Tx and Rx share it (co-located arrays).
        k_taps: number of delay taps; the tap window must cover the
            farthest scatterer or ``SceneError`` is raised.
        seed: anything accepted by ``numpy.random.default_rng``; fixes the
            noise realization bit-exactly.
        deposition: "nearest" puts each return on its rounded tap (keeps
            delay oracles exact); "sinc" spreads it over +-3 taps with a
            bandlimited kernel.

    Returns:
        CirFrame with shape (n_active, n_active, k_taps).
    """
    if k_taps < 1:
        raise SceneError("k_taps must be positive")
    if deposition not in ("nearest", "sinc"):
        raise SceneError(f"unknown deposition mode {deposition!r}")
    if scene.leakage_profile.size > k_taps:
        raise SceneError("leakage profile longer than tap window")

    n = geom.n_active
    cube = np.zeros((n, n, k_taps), dtype=complex)
    scatterers = list(scene.targets) + list(scene.clutter)

    if scatterers:
        pos = geom.element_positions()  # (n, 3)
        p = np.array([s.position for s in scatterers], dtype=float)  # (S, 3)
        refl = np.array([s.reflectivity for s in scatterers], dtype=complex)
        dist = np.linalg.norm(pos[:, None, :] - p[None, :, :], axis=2)  # (n, S)
        tau = (dist[:, None, :] + dist[None, :, :]) / SPEED_OF_LIGHT  # (n, n, S)
        frac = tau / tap_spacing
        center = np.rint(frac).astype(int)
        if center.max() >= k_taps:
            raise SceneError("scene exceeds tap window")
        amp = refl[None, None, :] * np.exp(-2j * np.pi * geom.carrier_freq * tau)
        m_idx = np.broadcast_to(np.arange(n)[:, None, None], center.shape)
        r_idx = np.broadcast_to(np.arange(n)[None, :, None], center.shape)
        if deposition == "nearest":
            np.add.at(cube, (m_idx, r_idx, center), amp)
        else:
            for off in range(-3, 4):
                tap = center + off
                w = np.sinc(frac - tap)
                ok = (tap >= 0) & (tap < k_taps)
                np.add.at(cube, (m_idx[ok], r_idx[ok], tap[ok]), (amp * w)[ok])

    if scene.leakage_profile.size:
        cube[:, :, : scene.leakage_profile.size] += scene.leakage_profile

    if scene.noise_power > 0:
        rng = _rng(seed)
        sigma = np.sqrt(scene.noise_power / 2.0)
        cube += sigma * (
            rng.standard_normal(cube.shape) + 1j * rng.standard_normal(cube.shape)
        )

    return CirFrame(cube, tap_spacing=tap_spacing, timestamp=timestamp)


def simulate_frames(
    scene: Scene,
    geom: ArrayGeometry,
    k_taps: int,
    n_frames: int,
    seed,
    frame_interval: float = 0.1,
    deposition: str = "nearest",
    tap_spacing: float = DEFAULT_TAP_SPACING,
) -> list:
    """A burst of frames of a static scene; only the noise varies."""
    if n_frames < 1:
        raise SceneError("need at least one frame")
    children = _seed_sequence(seed).spawn(n_frames)
    return [
        synthesize_cir(
            scene,
            geom,
            k_taps,
            seed=children[i],
            deposition=deposition,
            tap_spacing=tap_spacing,
            timestamp=i * frame_interval,
        )
        for i in range(n_frames)
    ]


def sample_phantom(phantom: HumanPhantom, seed) -> list:
    """Sample the array-facing surface of a phantom into point scatterers.

    Sample positions form a deterministic quasi-uniform (Fibonacci) lattice
    on the facing half of each ellipsoid: count = round(density * area / 2).
    Reflectivity magnitude follows the facet cosine toward the panel;
    phases are drawn from ``seed`` (one speckle realization per capture).
    """
    if phantom.sample_density <= 0:
        raise SceneError("sample_density must be positive")
    rng = _rng(seed)
    out = []
    for ell in phantom.ellipsoids:
        count = max(1, round(phantom.sample_density * ell.surface_area() / 2.0))
        unit = _fibonacci_hemisphere(count)  # x < 0 half of the unit sphere
        axes = np.asarray(ell.semi_axes, dtype=float)
        pts = np.asarray(ell.center, dtype=float) + unit * axes
        normals = unit / axes  # outward normal direction of the scaled surface
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        toward = -pts / np.linalg.norm(pts, axis=1, keepdims=True)
        cos_facet = np.maximum((normals * toward).sum(axis=1), 0.0)
        phases = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, count))
        for p, a in zip(pts, cos_facet * phases):
            out.append(Scatterer(position=tuple(p), reflectivity=complex(a)))
    return out


def _fibonacci_hemisphere(count: int) -> np.ndarray:
    """Quasi-uniform points on the x < 0 half of the unit sphere."""
    i = np.arange(count)
    x = -(i + 0.5) / count
    r = np.sqrt(1.0 - x * x)
    ang = i * _GOLDEN_ANGLE
    return np.column_stack([x, r * np.cos(ang), r * np.sin(ang)])


def render_ground_truth(
    phantom: HumanPhantom,
    geom: ArrayGeometry,
    extent_deg: float = 60.0,
    size: int = 256,
) -> np.ndarray:
    """Ray-cast the phantom into a background-free depth image.

    Pixels sample elevation/azimuth uniformly over +-extent_deg (matching
    the spectrum grid convention); each value is the distance in meters to
    the nearest ellipsoid surface along that ray, 0 where nothing is hit.
    """
    for ell in phantom.ellipsoids:
        if ell.center[0] <= 0:
            raise SceneError("phantom must sit in front of the array")
    extent = np.deg2rad(extent_deg)
    theta = np.linspace(-extent, extent, size)
    phi = np.linspace(-extent, extent, size)
    ct = np.cos(theta)[:, None]
    u = np.stack(
        [
            np.broadcast_to(ct * np.cos(phi)[None, :], (size, size)),
            np.broadcast_to(ct * np.sin(phi)[None, :], (size, size)),
            np.broadcast_to(np.sin(theta)[:, None], (size, size)),
        ],
        axis=-1,
    ).reshape(-1, 3)

    depth = np.full(u.shape[0], np.inf)
    for ell in phantom.ellipsoids:
        axes = np.asarray(ell.semi_axes, dtype=float)
        w = u / axes
        q = -np.asarray(ell.center, dtype=float) / axes
        a = (w * w).sum(axis=1)
        b = (w * q).sum(axis=1)
        c = (q * q).sum() - 1.0
        disc = b * b - a * c
        hit = disc >= 0
        t = np.full_like(depth, np.inf)
        sq = np.sqrt(disc[hit])
        t_near = (-b[hit] - sq) / a[hit]
        t_far = (-b[hit] + sq) / a[hit]
        t_hit = np.where(t_near > 1e-9, t_near, np.where(t_far > 1e-9, t_far, np.inf))
        t[hit] = t_hit
        depth = np.minimum(depth, t)

    img = np.where(np.isfinite(depth), depth, 0.0).reshape(size, size)
    if phantom.ellipsoids and not img.any():
        raise SceneError("phantom outside field of view")
    return img


# --------------------------------------------------------------------------
# Scene description files
# --------------------------------------------------------------------------

@dataclass
class SceneTemplate:
    """Parsed scene file: fixed scene content plus an optional phantom and
    per-sample placement jitter (used by the dataset builder)."""

    scene: Scene
    phantom: HumanPhantom | None = None
    jitter_xyz: tuple = (0.0, 0.0, 0.0)
    label: str | None = None


def parse_scene(text: str) -> SceneTemplate:
    """Parse the plain-text scene format (see docs/formats.md)."""
    targets, clutter, ellipsoids = [], [], []
    leakage = np.zeros(0, complex)
    noise_power = 0.0
    density = 500.0
    distance = None
    jitter = (0.0, 0.0, 0.0)
    label = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        try:
            if key == "noise_power":
                noise_power = float(rest[0])
            elif key == "leakage":
                leakage = np.array([complex(tok.strip("()")) for tok in rest])
            elif key in ("scatterer", "clutter"):
                x, y, z = (float(v) for v in rest[:3])
                refl = complex(rest[3].strip("()")) if len(rest) > 3 else 1 + 0j
                dest = targets if key == "scatterer" else clutter
                dest.append(Scatterer(position=(x, y, z), reflectivity=refl))
            elif key == "ellipsoid":
                vals = [float(v) for v in rest[:6]]
                ellipsoids.append(Ellipsoid(center=tuple(vals[:3]), semi_axes=tuple(vals[3:])))
            elif key == "density":
                density = float(rest[0])
            elif key == "phantom_distance":
                distance = float(rest[0])
            elif key == "jitter_xyz":
                jitter = tuple(float(v) for v in rest[:3])
            elif key == "label":
                label = rest[0]
            else:
                raise SceneError(f"line {lineno}: unknown key {key!r}")
        except SceneError:
            raise
        except (ValueError, IndexError) as exc:
            raise SceneError(f"line {lineno}: cannot parse {raw!r}") from exc

    scene = Scene(
        targets=targets,
        clutter=clutter,
        leakage_profile=leakage,
        noise_power=noise_power,
    )
    phantom = None
    if ellipsoids:
        if distance is None:
            distance = float(np.mean([e.center[0] for e in ellipsoids]))
        phantom = HumanPhantom(ellipsoids=ellipsoids, sample_density=density, distance=distance)
    return SceneTemplate(scene=scene, phantom=phantom, jitter_xyz=jitter, label=label)


def load_scene(path) -> SceneTemplate:
    tpl = parse_scene(Path(path).read_text())
    if tpl.label is None:
        tpl.label = Path(path).stem
    return tpl


def realize(template: SceneTemplate, seed):
    """Instantiate a template for one capture session.

    Applies the per-sample placement jitter to the phantom, samples its
    surface speckle, and merges the samples into the scene targets.
    Returns (scene, placed_phantom); the phantom is None for scenes
    without one.
    """
    if template.phantom is None:
        return template.scene, None
    jitter_seed, speckle_seed = _seed_sequence(seed).spawn(2)
    offset = np.zeros(3)
    jit = np.asarray(template.jitter_xyz, dtype=float)
    if jit.any():
        offset = _rng(jitter_seed).uniform(-jit, jit)
    placed = HumanPhantom(
        ellipsoids=[
            Ellipsoid(center=tuple(np.asarray(e.center) + offset), semi_axes=e.semi_axes)
            for e in template.phantom.ellipsoids
        ],
        sample_density=template.phantom.sample_density,
        distance=template.phantom.distance + offset[0],
    )
    scene = Scene(
        targets=list(template.scene.targets) + sample_phantom(placed, speckle_seed),
        clutter=list(template.scene.clutter),
        leakage_profile=template.scene.leakage_profile.copy(),
        noise_power=template.scene.noise_power,
    )
    return scene, placed
