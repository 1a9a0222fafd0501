"""MUSIC spatial spectra from CIR cubes.

Snapshots are 16-element vectors read out of 4x4 receiver subarrays.
Pooling them over shifted subarrays (spatial smoothing), over frames
(temporal smoothing) and over transmitters (joint transmitter smoothing)
restores the covariance rank that fully coherent returns would otherwise
collapse. The pseudospectrum for a direction is the reciprocal of the
steering vector's energy inside the noise subspace; peaks mark arrivals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .background import BackgroundConfig, EmptyCirSet, remove_background
from .geometry import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    SubarraySpec,
    enumerate_subarrays,
    full_array,
    steering_matrix,
)
from .scene import CirFrame

#: Pseudospectrum denominators below this are clamped (steering vector
#: exactly inside the signal subspace, e.g. noiseless on-grid source).
DENOM_CLAMP = 1e-18


class SpectrumError(ValueError):
    """Invalid MUSIC configuration or input."""


@dataclass
class MusicConfig:
    """Knobs for the spectrum estimator.

    order_mode selects the source order M: "fixed" uses order_value;
    "eigen-gap" takes the largest drop in the sorted eigenvalues, with a
    no-source gate that returns M = 0 (flat spectrum) when the eigenvalue
    spread stays within the Marchenko-Pastur band expected of pure noise;
    "energy-threshold" takes the smallest M capturing fraction
    (1 - epsilon) of the covariance trace.

    range_gate is a half-open tap interval (lo, hi); when None it is
    derived from gate_meters at build time.
    """

    order_mode: str = "eigen-gap"
    order_value: int = 1
    epsilon: float = 0.1
    range_gate: tuple | None = None
    gate_meters: tuple = (1.0, 2.5)
    spatial_smoothing: bool = True
    temporal_smoothing: bool = True
    jts: bool = True
    grid_size: int = 128
    grid_extent_deg: float = 60.0
    reduction: str = "max"

    def __post_init__(self):
        if self.order_mode not in ("fixed", "eigen-gap", "energy-threshold"):
            raise SpectrumError(f"unknown order mode {self.order_mode!r}")
        if not (0.0 < self.epsilon < 1.0):
            raise SpectrumError("epsilon must lie in (0, 1)")
        if self.reduction not in ("max", "depth"):
            raise SpectrumError(f"unknown reduction {self.reduction!r}")
        if self.grid_size < 2:
            raise SpectrumError("grid must have at least 2 points per axis")


@dataclass
class CovarianceMatrix:
    """Hermitian snapshot covariance with its pooled snapshot count."""

    matrix: np.ndarray
    snapshot_count: int

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        n = self.matrix.shape[0]
        if self.matrix.ndim != 2 or self.matrix.shape[1] != n:
            raise SpectrumError("covariance must be square")
        scale = max(np.abs(self.matrix).max(), 1.0)
        if np.abs(self.matrix - self.matrix.conj().T).max() > 1e-10 * scale:
            raise SpectrumError("covariance is not Hermitian")
        if np.linalg.eigvalsh(self.matrix).min() < -1e-9 * scale:
            raise SpectrumError("covariance is not positive semidefinite")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass
class SpectrumImage:
    """Pseudospectrum sampled on a (theta, phi) grid for one transmitter."""

    values: np.ndarray
    theta_grid: np.ndarray
    phi_grid: np.ndarray
    tx_index: int = 0
    clamped: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.theta_grid), len(self.phi_grid)):
            raise SpectrumError("grid sizes do not match values")
        if not np.all(np.isfinite(self.values)):
            raise SpectrumError("spectrum values must be finite")


@dataclass
class SpectrumTensor:
    """Per-transmitter spectrum images stacked along the last axis,
    each max-normalized to [0, 1]."""

    values: np.ndarray
    theta_grid: np.ndarray
    phi_grid: np.ndarray

    @property
    def n_tx(self) -> int:
        return self.values.shape[2]

    def mean_image(self) -> np.ndarray:
        return self.values.mean(axis=2)


def angle_grids(cfg: MusicConfig):
    """Uniform elevation/azimuth grids over +-grid_extent_deg."""
    extent = np.deg2rad(cfg.grid_extent_deg)
    theta = np.linspace(-extent, extent, cfg.grid_size)
    phi = np.linspace(-extent, extent, cfg.grid_size)
    return theta, phi


def gate_taps(cfg: MusicConfig, tap_spacing: float, k_taps: int) -> range:
    """Resolve the configured range gate to a tap range."""
    if cfg.range_gate is not None:
        lo, hi = cfg.range_gate
    else:
        d_lo, d_hi = cfg.gate_meters
        lo = int(np.floor(2.0 * d_lo / (SPEED_OF_LIGHT * tap_spacing)))
        hi = int(np.ceil(2.0 * d_hi / (SPEED_OF_LIGHT * tap_spacing))) + 1
    lo = max(lo, 0)
    hi = min(hi, k_taps)
    if lo >= hi:
        raise SpectrumError("range gate selects no taps")
    return range(lo, hi)


def subarray_snapshots(frame: CirFrame, tx: int, tap: int, subs) -> list:
    """One receive snapshot per subarray at a single (tx, tap).

    Each snapshot is the subarray's element values read from the Rx axis,
    ordered row-major within the window.
    """
    if not (0 <= tx < frame.n_tx):
        raise SpectrumError(f"tx index {tx} out of range")
    if not (0 <= tap < frame.n_taps):
        raise SpectrumError(f"tap index {tap} out of range")
    out = []
    for sub in subs:
        if not sub.complete:
            raise SpectrumError("missing element in subarray")
        idx = np.asarray(sub.element_indices)
        if idx.max() >= frame.n_rx:
            raise SpectrumError("subarray element index out of range")
        out.append(frame.data[tx, idx, tap].copy())
    return out


def covariance(snapshots) -> CovarianceMatrix:
    """Average outer product R = (1/L) sum_i h_i h_i^H of the snapshots.

    The snapshot list is the smoothing pool: spatial subarrays, temporal
    frames, and transmitters (under JTS) all enter as extra snapshots.
    """
    snaps = np.asarray(list(snapshots), dtype=complex)
    if snaps.size == 0:
        raise SpectrumError("covariance needs at least one snapshot")
    if snaps.ndim != 2:
        raise SpectrumError("snapshots must be equal-length vectors")
    r = snaps.T @ snaps.conj() / snaps.shape[0]
    r = 0.5 * (r + r.conj().T)  # strip rounding skew
    return CovarianceMatrix(matrix=r, snapshot_count=snaps.shape[0])


def _looks_like_pure_noise(lam: np.ndarray, snapshot_count) -> bool:
    """True when the eigenvalue spread fits a source-free sample covariance.

    For L independent noise snapshots of dimension n the eigenvalues fall
    inside the Marchenko-Pastur band, whose edge ratio is
    ((1 + sqrt(n/L)) / (1 - sqrt(n/L)))^2; a 1.5x margin absorbs the
    subarray-overlap correlation of pooled snapshots. Undecidable (and
    treated as "sources present") when L < n or L is unknown.
    """
    n = lam.size
    if snapshot_count is None or snapshot_count < n:
        return False
    lmin, lmax = lam[0], lam[-1]
    if lmin <= 0:
        return False
    root = np.sqrt(n / snapshot_count)
    edge_ratio = ((1.0 + root) / (1.0 - root)) ** 2
    return lmax / lmin < 1.5 * edge_ratio


def source_order(eigenvalues: np.ndarray, cfg: MusicConfig, snapshot_count=None) -> int:
    """Pick the source order M from eigenvalues (sorted any way).

    "eigen-gap" may return 0 — no detected sources — in which case the
    noise subspace is the whole space and the pseudospectrum is flat.
    """
    lam = np.sort(np.asarray(eigenvalues, dtype=float))
    n = lam.size
    if cfg.order_mode == "fixed":
        m = cfg.order_value
        if m < 1:
            raise SpectrumError("source order must be at least 1")
    elif cfg.order_mode == "eigen-gap":
        if _looks_like_pure_noise(lam, snapshot_count):
            return 0
        desc = lam[::-1]
        m = int(np.argmax(desc[:-1] - desc[1:])) + 1
    else:
        total = lam.sum()
        if total <= 0:
            m = 1
        else:
            frac = np.cumsum(lam[::-1]) / total
            m = int(np.searchsorted(frac, 1.0 - cfg.epsilon) + 1)
        m = min(m, n - 1)
    if m >= n:
        raise SpectrumError(f"source order {m} must be below the aperture size {n}")
    return m


def noise_subspace(cov: CovarianceMatrix, cfg: MusicConfig) -> np.ndarray:
    """Orthonormal basis of the (dim - M)-dimensional noise subspace.

    Columns are the eigenvectors of the smallest eigenvalues of R, with M
    chosen per the config's order mode (all of them when M = 0).
    """
    lam, vec = np.linalg.eigh(cov.matrix)  # ascending
    m = source_order(lam, cfg, snapshot_count=cov.snapshot_count)
    return vec[:, : cov.dim - m]


def music_spectrum(
    noise_sub: np.ndarray,
    geom: ArrayGeometry,
    sub_ref: SubarraySpec,
    theta_grid: np.ndarray,
    phi_grid: np.ndarray,
    tx_index: int = 0,
) -> SpectrumImage:
    """Evaluate P(theta, phi) = 1 / ||V^H a(theta, phi)||^2 over a grid.

    ``sub_ref`` fixes the steering manifold; every complete 4x4 window is
    congruent, so any one of them serves. Denominators below DENOM_CLAMP
    are clamped and counted in the image's ``clamped`` field.
    """
    v = np.asarray(noise_sub, dtype=complex)
    if v.ndim != 2 or v.shape[0] != sub_ref.n_elements:
        raise SpectrumError("noise subspace and subarray sizes disagree")
    if np.abs(v.conj().T @ v - np.eye(v.shape[1])).max() > 1e-8:
        raise SpectrumError("noise subspace columns must be orthonormal")
    for grid in (theta_grid, phi_grid):
        if np.any(np.diff(np.asarray(grid, dtype=float)) <= 0):
            raise SpectrumError("angle grids must be strictly increasing")
    a = steering_matrix(geom, sub_ref, theta_grid, phi_grid)
    n, nt, nples = a.shape
    proj = v.conj().T @ a.reshape(n, -1)
    denom = (proj.real**2 + proj.imag**2).sum(axis=0)
    clamped = int(np.count_nonzero(denom < DENOM_CLAMP))
    values = 1.0 / np.maximum(denom, DENOM_CLAMP)
    return SpectrumImage(
        values=values.reshape(nt, nples),
        theta_grid=np.asarray(theta_grid, float),
        phi_grid=np.asarray(phi_grid, float),
        tx_index=tx_index,
        clamped=clamped,
    )


def build_spectrum_tensor(
    frames,
    empty: EmptyCirSet | None,
    geom: ArrayGeometry,
    cfg: MusicConfig,
    bg_cfg: BackgroundConfig | None = None,
) -> SpectrumTensor:
    """Full front-end: cleaned frames -> per-Tx MUSIC images -> stacked tensor.

    Per transmitter, snapshots are pooled over the complete 4x4 subarrays
    (spatial smoothing on) or read from the whole active array (off), over
    all frames (temporal smoothing on) or the first frame only, and over
    every transmitter when JTS is on — under JTS the per-Tx images share
    one covariance, as the smoothing sum is exactly the snapshot pooling.
    The per-tap pseudospectra inside the range gate are reduced to one
    image ("max": strongest response; "depth": range in meters of the
    maximizing tap), then each image is normalized to peak 1.
    """
    frames = list(frames)
    if not frames:
        raise SpectrumError("need at least one frame")
    shape = frames[0].data.shape
    for f in frames[1:]:
        if f.data.shape != shape:
            raise SpectrumError("frames have mismatched dimensions")

    if empty is not None:
        bg = bg_cfg if bg_cfg is not None else BackgroundConfig()
        frames = [remove_background(f, empty, bg) for f in frames]
    if not cfg.temporal_smoothing:
        frames = frames[:1]

    if cfg.spatial_smoothing:
        subs = enumerate_subarrays(geom)
        if not subs:
            raise SpectrumError("no complete subarrays for this geometry")
    else:
        subs = [full_array(geom)]
    sub_ref = subs[0]
    idx = np.array([s.element_indices for s in subs])  # (n_subs, n_elem)

    n_tx = shape[0]
    taps = gate_taps(cfg, frames[0].tap_spacing, shape[2])
    theta_grid, phi_grid = angle_grids(cfg)
    a = steering_matrix(geom, sub_ref, theta_grid, phi_grid)
    a_flat = a.reshape(a.shape[0], -1)

    # snaps[frame] has shape (n_tx, n_subs, n_elem, n_gate_taps)
    gathered = np.stack([f.data[:, idx, :][:, :, :, list(taps)] for f in frames])

    def tap_image(tap_pos: int, tx_sel) -> np.ndarray:
        snaps = gathered[:, tx_sel, :, :, tap_pos].reshape(-1, idx.shape[1])
        cov = covariance(snaps)
        v = noise_subspace(cov, cfg)
        proj = v.conj().T @ a_flat
        denom = (proj.real**2 + proj.imag**2).sum(axis=0)
        return 1.0 / np.maximum(denom, DENOM_CLAMP)

    n_grid = cfg.grid_size * cfg.grid_size
    images = np.empty((n_grid, n_tx))
    tap_ranges = np.array(
        [SPEED_OF_LIGHT * t * frames[0].tap_spacing / 2.0 for t in taps]
    )

    if cfg.jts:
        stack = np.stack([tap_image(i, slice(None)) for i in range(len(taps))])
        reduced = _reduce(stack, tap_ranges, cfg.reduction)
        images[:] = reduced[:, None]
    else:
        for t in range(n_tx):
            stack = np.stack([tap_image(i, [t]) for i in range(len(taps))])
            images[:, t] = _reduce(stack, tap_ranges, cfg.reduction)

    images = images.reshape(cfg.grid_size, cfg.grid_size, n_tx)
    peaks = images.max(axis=(0, 1), keepdims=True)
    images = images / np.maximum(peaks, np.finfo(float).tiny)
    return SpectrumTensor(values=images, theta_grid=theta_grid, phi_grid=phi_grid)


def _reduce(stack: np.ndarray, tap_ranges: np.ndarray, mode: str) -> np.ndarray:
    """Collapse the per-tap axis of (n_taps, n_grid) pseudospectra."""
    if mode == "max":
        return stack.max(axis=0)
    return tap_ranges[stack.argmax(axis=0)]


def parse_music_config(text: str) -> MusicConfig:
    """Parse the plain-text estimator config (see docs/formats.md)."""
    cfg = MusicConfig()
    flags = {"on": True, "off": False, "true": True, "false": False}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        try:
            if key == "order_mode":
                cfg.order_mode = rest[0]
            elif key == "order_value":
                cfg.order_value = int(rest[0])
            elif key == "epsilon":
                cfg.epsilon = float(rest[0])
            elif key == "range_gate":
                cfg.range_gate = (int(rest[0]), int(rest[1]))
            elif key == "gate_meters":
                cfg.gate_meters = (float(rest[0]), float(rest[1]))
            elif key in ("spatial", "temporal", "jts"):
                value = flags[rest[0].lower()]
                if key == "spatial":
                    cfg.spatial_smoothing = value
                elif key == "temporal":
                    cfg.temporal_smoothing = value
                else:
                    cfg.jts = value
            elif key == "grid_size":
                cfg.grid_size = int(rest[0])
            elif key == "grid_extent_deg":
                cfg.grid_extent_deg = float(rest[0])
            elif key == "reduction":
                cfg.reduction = rest[0]
            else:
                raise SpectrumError(f"line {lineno}: unknown key {key!r}")
        except SpectrumError:
            raise
        except (ValueError, IndexError, KeyError) as exc:
            raise SpectrumError(f"line {lineno}: cannot parse {raw!r}") from exc
    cfg.__post_init__()
    return cfg
