"""Periodic bandlimited scenes: video as a low-rank signal collection.

A scene is a finite Fourier series in time and one or two spatial
coordinates.  Sampling it at fixed sensor locations yields signals with the
mixing structure ``y(t) = A x(t)``: the temporal slices ``x`` collect the
coefficients along the time orders, and the mixing entries are the spatial
exponentials evaluated at the sensor positions.  Placing sensors on a
sufficient uniform grid makes ``A^H A`` an exact multiple of the identity.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .fourier_model import (
    CoefficientMatrix,
    PeriodicExpBasis,
    SignalEnsemble,
    _readonly,
    _real_or_raise,
)

__all__ = [
    "SceneSpec",
    "SensorGrid",
    "VideoPatch",
    "GramReport",
    "rect_grid",
    "uniform_grid",
    "mixing_from_grid_2d",
    "mixing_from_grid_1d",
    "temporal_slices",
    "scene_ensemble",
    "scene_eval",
    "interpolate_patch",
    "gram_check",
    "random_scene",
    "save_scene",
    "load_scene",
    "write_patch",
    "read_patch",
]

PATCH_MAGIC = b"VPF1"


@dataclass(frozen=True)
class SceneSpec:
    """Fourier-series scene.

    ``coeffs`` is order-indexed with shape ``(2*K0+1, 2*K1+1, 2*K2+1)`` for a
    scene with two spatial dimensions, or ``(2*K0+1, 2*K1+1)`` when ``k2 ``
    is None (one spatial dimension).  Axis order is (time, d1[, d2]).
    """

    k0: int
    k1: int
    k2: int | None
    period_t: float
    period_d1: float
    period_d2: float | None
    coeffs: np.ndarray
    real_valued: bool = True

    def __post_init__(self):
        if min(self.k0, self.k1) < 0 or (self.k2 is not None and self.k2 < 0):
            raise ValueError("half-bandwidths must be non-negative")
        if self.period_t <= 0 or self.period_d1 <= 0:
            raise ValueError("periods must be positive")
        expected = (2 * self.k0 + 1, 2 * self.k1 + 1)
        if self.k2 is not None:
            if self.period_d2 is None or self.period_d2 <= 0:
                raise ValueError("period_d2 required for two spatial dimensions")
            expected = expected + (2 * self.k2 + 1,)
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != expected:
            raise ValueError(f"coefficient shape {c.shape} != expected {expected}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        if self.real_valued:
            flipped = np.conj(c[tuple(slice(None, None, -1) for _ in c.shape)])
            err = float(np.max(np.abs(c - flipped)))
            if err > 1e-12 * max(1.0, float(np.max(np.abs(c)))):
                raise ValueError(
                    f"real-valued flag set but Hermitian symmetry violated by {err:.3e}"
                )
        object.__setattr__(self, "coeffs", _readonly(c))

    @property
    def n_slices(self) -> int:
        """Number of spatial components J."""
        n = 2 * self.k1 + 1
        if self.k2 is not None:
            n *= 2 * self.k2 + 1
        return n

    def temporal_basis(self) -> PeriodicExpBasis:
        return PeriodicExpBasis(self.period_t, self.k0)


@dataclass(frozen=True)
class SensorGrid:
    """Distinct sensor locations, one (d1, d2) pair per row."""

    locations: np.ndarray

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float)
        if loc.ndim != 2 or loc.shape[1] != 2:
            raise ValueError("locations must have shape (N, 2)")
        if len({(a, b) for a, b in map(tuple, loc)}) != loc.shape[0]:
            raise ValueError("sensor locations must be distinct")
        object.__setattr__(self, "locations", _readonly(loc))

    @property
    def n_sensors(self) -> int:
        return self.locations.shape[0]


@dataclass(frozen=True)
class VideoPatch:
    """Raw intensity samples, shape (H, W, Nf) = (rows, cols, frames)."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 3 or min(s.shape) < 1:
            raise ValueError("samples must be a non-empty 3-d array")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", _readonly(s))

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def n_frames(self) -> int:
        return self.samples.shape[2]


@dataclass(frozen=True)
class GramReport:
    is_scaled_identity: bool
    max_off_diagonal: float


def rect_grid(n1: int, n2: int, period_d1: float, period_d2: float) -> SensorGrid:
    """Uniform ``n1 x n2`` sensor lattice over one spatial period.

    Sensor ``i`` sits at ``d1 = floor(i/n2) * D1/n1``,
    ``d2 = (i mod n2) * D2/n2``.
    """
    if n1 < 1 or n2 < 1:
        raise ValueError("grid dimensions must be positive")
    i = np.arange(n1 * n2)
    d1 = (i // n2) * period_d1 / n1
    d2 = (i % n2) * period_d2 / n2
    return SensorGrid(np.column_stack([d1, d2]))


def uniform_grid(k1: int, k2: int, period_d1: float, period_d2: float) -> SensorGrid:
    """Sufficient uniform gridding: (2*K1+1) x (2*K2+1) sensors over one period.

    This sensor count and spacing makes the Gram of the resulting mixing
    matrix an exact multiple of the identity.
    """
    if k1 < 0 or k2 < 0:
        raise ValueError("half-bandwidths must be non-negative")
    return rect_grid(2 * k1 + 1, 2 * k2 + 1, period_d1, period_d2)


def mixing_from_grid_2d(
    grid: SensorGrid, k1: int, k2: int, period_d1: float, period_d2: float
) -> np.ndarray:
    """Mixing matrix of a 2-spatial-dimension scene sampled at ``grid``.

    Entry for sensor i and spatial orders (q1, q2) is
    ``exp(j*2*pi*(d1_i*q1/D1 + d2_i*q2/D2))``.  Columns are q1-major: the
    column of (q1, q2) is ``(q1+K1)*(2*K2+1) + (q2+K2)``, matching the row
    order of :func:`temporal_slices`.
    """
    orders1 = np.arange(-k1, k1 + 1)
    orders2 = np.arange(-k2, k2 + 1)
    d1 = grid.locations[:, 0][:, np.newaxis]
    d2 = grid.locations[:, 1][:, np.newaxis]
    phase1 = np.exp(2j * np.pi * d1 * orders1 / period_d1)  # (N, 2K1+1)
    phase2 = np.exp(2j * np.pi * d2 * orders2 / period_d2)  # (N, 2K2+1)
    return (phase1[:, :, np.newaxis] * phase2[:, np.newaxis, :]).reshape(
        grid.n_sensors, -1
    )


def mixing_from_grid_1d(locations, k1: int, period_d: float) -> np.ndarray:
    """Mixing matrix of a 1-spatial-dimension scene sampled at ``locations``.

    Entry (i, q1) is ``exp(j*2*pi*q1*d_i/D)`` with q1-columns ordered
    ``-K1..K1``.
    """
    d = np.asarray(locations, dtype=float).reshape(-1, 1)
    orders = np.arange(-k1, k1 + 1)
    return np.exp(2j * np.pi * d * orders / period_d)


def temporal_slices(scene: SceneSpec) -> CoefficientMatrix:
    """Coefficients of the temporal slice signals ``x^(q1[,q2])(t)``.

    Row order is q1-major (then q2); columns follow time orders ``-K0..K0``.
    Pairing with the matching ``mixing_from_grid`` matrix reproduces the
    sensor signals: ``C(y) = A C(x)``.
    """
    if scene.k2 is None:
        mat = scene.coeffs.T  # (2K1+1, 2K0+1)
    else:
        mat = np.transpose(scene.coeffs, (1, 2, 0)).reshape(
            scene.n_slices, 2 * scene.k0 + 1
        )
    return CoefficientMatrix(mat)


def scene_ensemble(
    scene: SceneSpec, grid: SensorGrid, amplitude_bound: float | None = None
) -> SignalEnsemble:
    """Signal ensemble observed by sensors at ``grid`` watching ``scene``."""
    if scene.k2 is None:
        mixing = mixing_from_grid_1d(grid.locations[:, 0], scene.k1, scene.period_d1)
    else:
        mixing = mixing_from_grid_2d(
            grid, scene.k1, scene.k2, scene.period_d1, scene.period_d2
        )
    return SignalEnsemble(
        scene.temporal_basis(), mixing, temporal_slices(scene), amplitude_bound
    )


def scene_eval(scene: SceneSpec, d1: float, d2: float | None, t: float):
    """Real scene value at spatial position (d1[, d2]) and time t."""
    if not scene.real_valued:
        raise ValueError("scene_eval requires a real-valued scene")
    v0 = np.exp(2j * np.pi * np.arange(-scene.k0, scene.k0 + 1) * t / scene.period_t)
    v1 = np.exp(2j * np.pi * np.arange(-scene.k1, scene.k1 + 1) * d1 / scene.period_d1)
    if scene.k2 is None:
        total = np.einsum("ab,a,b->", scene.coeffs, v0, v1)
    else:
        if d2 is None:
            raise ValueError("d2 required for a scene with two spatial dimensions")
        v2 = np.exp(
            2j * np.pi * np.arange(-scene.k2, scene.k2 + 1) * d2 / scene.period_d2
        )
        total = np.einsum("abc,a,b,c->", scene.coeffs, v0, v1, v2)
    return _real_or_raise(total)


def interpolate_patch(
    patch: VideoPatch,
    period_t: float | None = None,
    period_d1: float | None = None,
    period_d2: float | None = None,
) -> SceneSpec:
    """Scene whose Fourier series interpolates the patch samples.

    The patch is treated as one period sampled uniformly: sample (r, c, f)
    sits at ``d1 = r*D1/H, d2 = c*D2/W, t = f*T/Nf``.  All dimensions must be
    odd so that the half-bandwidths ``K1 = H//2`` etc. give exactly H*W*Nf
    coefficients; evaluating the scene back on the sample lattice reproduces
    the patch.  Periods default to the sample counts (one sample unit per
    pixel/frame).
    """
    h, w, nf = patch.samples.shape
    if h % 2 == 0 or w % 2 == 0 or nf % 2 == 0:
        raise ValueError("patch dimensions must be odd; crop before interpolating")
    period_t = float(nf if period_t is None else period_t)
    period_d1 = float(h if period_d1 is None else period_d1)
    period_d2 = float(w if period_d2 is None else period_d2)
    # Forward DFT with 1/N scaling recovers series coefficients; fftshift
    # reorders bins 0..N-1 into orders -K..K (exact for odd N).
    spectrum = np.fft.fftn(patch.samples) / patch.samples.size
    spectrum = np.fft.fftshift(spectrum)
    coeffs = np.transpose(spectrum, (2, 0, 1))  # (k0, k1, k2)
    return SceneSpec(
        nf // 2, h // 2, w // 2, period_t, period_d1, period_d2, coeffs, True
    )


def gram_check(mixing, tol: float = 1e-10) -> GramReport:
    """Check whether ``A^H A`` equals (row count) times the identity."""
    a = np.asarray(mixing, dtype=complex)
    gram = a.conj().T @ a
    n = a.shape[0]
    deviation = float(np.max(np.abs(gram - n * np.eye(a.shape[1]))))
    off = gram - np.diag(np.diag(gram))
    max_off = float(np.max(np.abs(off))) if a.shape[1] > 1 else 0.0
    return GramReport(deviation < tol, max_off)


def random_scene(
    k0: int, k1: int, k2: int | None, seed: int, amplitude: float = 1.0
) -> SceneSpec:
    """Random real-valued scene with unit periods and the given bandwidths.

    Coefficients are complex standard normal, Hermitian-symmetrized over all
    axes jointly, and scaled by ``amplitude``.  Deterministic in ``seed``.
    """
    shape = (2 * k0 + 1, 2 * k1 + 1) + (() if k2 is None else (2 * k2 + 1,))
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    flipped = np.conj(c[tuple(slice(None, None, -1) for _ in shape)])
    c = amplitude * 0.5 * (c + flipped)
    return SceneSpec(
        k0, k1, k2, 1.0, 1.0, None if k2 is None else 1.0, c, True
    )


def save_scene(scene: SceneSpec, csv_path, sidecar_path) -> None:
    """Write the slice coefficients as CSV plus a JSON sidecar of dimensions."""
    temporal_slices(scene).to_csv(csv_path)
    meta = {
        "K0": scene.k0,
        "K1": scene.k1,
        "K2": scene.k2,
        "T": scene.period_t,
        "D1": scene.period_d1,
        "D2": scene.period_d2,
    }
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def load_scene(csv_path, sidecar_path) -> SceneSpec:
    with open(sidecar_path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    slices = CoefficientMatrix.from_csv(csv_path)
    k0, k1, k2 = meta["K0"], meta["K1"], meta["K2"]
    if k2 is None:
        coeffs = slices.values.T
    else:
        coeffs = np.transpose(
            slices.values.reshape(2 * k1 + 1, 2 * k2 + 1, 2 * k0 + 1), (2, 0, 1)
        )
    return SceneSpec(k0, k1, k2, meta["T"], meta["D1"], meta["D2"], coeffs, True)


def write_patch(patch: VideoPatch, path) -> None:
    """Binary patch format: magic ``VPF1``, H W Nf as little-endian uint32,
    then float64 samples indexed frame-major (f*H*W + r*W + c)."""
    h, w, nf = patch.samples.shape
    frame_major = np.ascontiguousarray(np.transpose(patch.samples, (2, 0, 1)))
    with open(path, "wb") as fh:
        fh.write(PATCH_MAGIC)
        fh.write(struct.pack("<III", h, w, nf))
        fh.write(frame_major.astype("<f8").tobytes())


def read_patch(path) -> VideoPatch:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != PATCH_MAGIC:
            raise ValueError(f"not a video patch file (magic {magic!r})")
        h, w, nf = struct.unpack("<III", fh.read(12))
        data = np.frombuffer(fh.read(8 * h * w * nf), dtype="<f8")
        if data.size != h * w * nf:
            raise ValueError("truncated video patch file")
    samples = np.transpose(data.reshape(nf, h, w), (1, 2, 0))
    return VideoPatch(samples)
