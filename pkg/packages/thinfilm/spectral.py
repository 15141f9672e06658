"""Periodic grid, transform pair and norm machinery.

The box ``[0, L)^2`` with an ``n x n`` Fourier lattice stands in for the plane.
Conventions used everywhere in the package:

- Coefficient arrays are indexed ``[i1, i2]`` in FFT order: axis 0 carries the
  ``x1`` wavenumber ``k1``, axis 1 carries ``k2``, with integer
  ``k in [-n/2, n/2)``. The physical wavevector is ``xi = (2*pi/L) * k``.
- ``to_fourier`` uses ``numpy.fft.fft2(..., norm="forward")`` so the stored
  numbers are the Fourier-series coefficients ``c_k`` of
  ``u(x) = sum_k c_k exp(i xi_k . x)``.
- Parseval then reads ``||u||_{L^2}^2 = L^2 * sum_k |c_k|^2`` and the Sobolev
  norm is ``L * sqrt(sum_k (1 + |xi_k|^2)^s |c_k|^2)``.

Trajectory norms (``et_norm``) take discrete sups over the stored sample times.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from types import MappingProxyType
from typing import TYPE_CHECKING, Any

import numpy as np
from numpy.typing import NDArray

if TYPE_CHECKING:
    from .kernel import PhysicalParams

type ComplexArray = NDArray[np.complex128]
type RealArray = NDArray[np.float64]


# ----------------------------------------------------------------------------
# Grid
# ----------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class SpectralGrid:
    """Square periodic box of side ``L`` resolved by ``n`` modes per axis."""

    L: float
    n: int

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, int):
            raise ValueError(f"n must be an integer, got {self.n!r}")
        if self.n < 8 or self.n % 2:
            raise ValueError(f"n must be even and >= 8, got {self.n}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be finite and > 0, got {self.L}")

    @property
    def spacing(self) -> float:
        """Lattice spacing ``2*pi/L`` of the wavevectors."""

        return 2.0 * math.pi / self.L

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def k(self) -> NDArray[np.int64]:
        """Integer wavenumbers per axis in FFT order."""

        return _lattice(self.L, self.n).k

    @property
    def xi1(self) -> RealArray:
        return _lattice(self.L, self.n).xi1

    @property
    def xi2(self) -> RealArray:
        return _lattice(self.L, self.n).xi2

    @property
    def xi_sq(self) -> RealArray:
        return _lattice(self.L, self.n).xi_sq

    @property
    def xi_abs(self) -> RealArray:
        return _lattice(self.L, self.n).xi_abs

    @property
    def xi1_derivative(self) -> RealArray:
        """``xi1`` with the Nyquist row zeroed, for derivatives of real fields."""

        return _lattice(self.L, self.n).xi1_derivative

    @property
    def nyquist_mask(self) -> NDArray[np.bool_]:
        """True on the Nyquist row and column (``k = -n/2`` on either axis)."""

        return _lattice(self.L, self.n).nyquist

    @property
    def max_wavenumber(self) -> float:
        """Largest positive per-axis wavevector component on the lattice."""

        return (self.n // 2 - 1) * self.spacing

    def dealias_mask(self, fraction: float) -> NDArray[np.bool_]:
        """Modes kept by the dealiasing rule: ``max(|k1|, |k2|) <= fraction * n/2``."""

        return _dealias_mask(self.L, self.n, float(fraction))

    def coordinates(self) -> tuple[RealArray, RealArray]:
        """Physical sample points ``x_j = j L / n`` as ``(x1, x2)`` meshes."""

        x = np.arange(self.n) * (self.L / self.n)
        x1, x2 = np.meshgrid(x, x, indexing="ij")
        return x1, x2

    def index_of(self, k1: int, k2: int) -> tuple[int, int]:
        """Array index of the integer wavevector ``(k1, k2)``; raises when off-lattice."""

        half = self.n // 2
        for k in (k1, k2):
            if not -half <= k < half:
                raise ValueError(f"wavenumber {k} outside lattice [-{half}, {half})")
        return (k1 % self.n, k2 % self.n)


@dataclass(frozen=True, slots=True)
class _Lattice:
    k: NDArray[np.int64]
    xi1: RealArray
    xi2: RealArray
    xi_sq: RealArray
    xi_abs: RealArray
    xi1_derivative: RealArray
    nyquist: NDArray[np.bool_]


def _readonly[A: np.ndarray](arr: A) -> A:
    arr.flags.writeable = False
    return arr


@lru_cache(maxsize=32)
def _lattice(L: float, n: int) -> _Lattice:
    k = np.fft.fftfreq(n, d=1.0 / n).round().astype(np.int64)
    spacing = 2.0 * math.pi / L
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    xi1 = k1 * spacing
    xi2 = k2 * spacing
    xi_sq = xi1 * xi1 + xi2 * xi2
    nyquist = (k1 == -(n // 2)) | (k2 == -(n // 2))
    xi1_d = np.where(k1 == -(n // 2), 0.0, xi1)
    return _Lattice(
        k=_readonly(k),
        xi1=_readonly(xi1),
        xi2=_readonly(xi2),
        xi_sq=_readonly(xi_sq),
        xi_abs=_readonly(np.sqrt(xi_sq)),
        xi1_derivative=_readonly(xi1_d),
        nyquist=_readonly(nyquist),
    )


@lru_cache(maxsize=32)
def _dealias_mask(L: float, n: int, fraction: float) -> NDArray[np.bool_]:
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"dealias fraction must lie in (0, 1], got {fraction}")
    k = _lattice(L, n).k
    k1, k2 = np.meshgrid(np.abs(k), np.abs(k), indexing="ij")
    return _readonly(np.maximum(k1, k2) <= fraction * (n / 2))


def make_grid(L: float, n: int) -> SpectralGrid:
    """Build a :class:`SpectralGrid`; rejects odd or tiny ``n`` and non-positive ``L``."""

    return SpectralGrid(L=float(L), n=n)


# ----------------------------------------------------------------------------
# Fields and transforms
# ----------------------------------------------------------------------------


@dataclass(frozen=True, slots=True, eq=False)
class FourierField:
    """Fourier-series coefficients of a field on ``grid``.

    ``real=False`` marks deliberately complex-valued data (band indicators)
    which carry no Hermitian symmetry.
    """

    grid: SpectralGrid
    coeffs: ComplexArray
    real: bool = True

    def __post_init__(self) -> None:
        arr = np.array(self.coeffs, dtype=np.complex128, copy=True)
        if arr.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {arr.shape} does not match grid {self.grid.shape}"
            )
        object.__setattr__(self, "coeffs", _readonly(arr))

    @classmethod
    def zeros(cls, grid: SpectralGrid, *, real: bool = True) -> FourierField:
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128), real)

    def with_coeffs(self, coeffs: ComplexArray) -> FourierField:
        return FourierField(self.grid, coeffs, self.real)

    def _check_grid(self, other: FourierField) -> None:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: FourierField) -> FourierField:
        self._check_grid(other)
        return FourierField(self.grid, self.coeffs + other.coeffs, self.real and other.real)

    def __sub__(self, other: FourierField) -> FourierField:
        self._check_grid(other)
        return FourierField(self.grid, self.coeffs - other.coeffs, self.real and other.real)

    def scaled(self, factor: complex) -> FourierField:
        real = self.real and complex(factor).imag == 0.0
        return FourierField(self.grid, self.coeffs * factor, real)

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)


def to_fourier(
    values: NDArray[Any], grid: SpectralGrid, *, real: bool | None = None
) -> FourierField:
    """Forward transform of physical samples on ``grid``."""

    arr = np.asarray(values)
    if arr.shape != grid.shape:
        raise ValueError(f"values shape {arr.shape} does not match grid {grid.shape}")
    if real is None:
        real = not np.iscomplexobj(arr)
    return FourierField(grid, np.fft.fft2(arr, norm="forward"), real)


def to_physical(f: FourierField) -> NDArray[Any]:
    """Inverse transform; real fields return their real part."""

    values = np.fft.ifft2(f.coeffs, norm="forward")
    return values.real if f.real else values


def reflect(coeffs: ComplexArray) -> ComplexArray:
    """Return the array ``c(-k)`` in the same FFT ordering."""

    return np.roll(np.flip(coeffs, axis=(0, 1)), 1, axis=(0, 1))


def resample(f: FourierField, grid: SpectralGrid) -> FourierField:
    """Carry ``f`` onto another lattice over the same box (zero-fill or truncate)."""

    if grid.L != f.grid.L:
        raise ValueError("resampling requires the same box length")
    half = min(grid.n, f.grid.n) // 2
    ks = np.arange(-half + 1, half)
    src = np.mod(ks, f.grid.n)
    dst = np.mod(ks, grid.n)
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    coeffs[np.ix_(dst, dst)] = f.coeffs[np.ix_(src, src)]
    return FourierField(grid, coeffs, f.real)


def hermitian_defect(f: FourierField) -> float:
    """Max of ``|c(-k) - conj(c(k))|`` away from the Nyquist row and column."""

    gap = np.abs(reflect(f.coeffs) - np.conj(f.coeffs))
    gap[f.grid.nyquist_mask] = 0.0
    return float(gap.max())


def convolve(a: ComplexArray, b: ComplexArray, grid: SpectralGrid) -> ComplexArray:
    """Exact lattice convolution ``(a * b)(k) = sum_j a(j) b(k - j)`` truncated to the grid.

    Both inputs are zero-padded to ``2n`` so the circular product of the padded
    transforms has no wrap-around.
    """

    n = grid.n
    idx = np.mod(grid.k, 2 * n)
    pa = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    pb = np.zeros_like(pa)
    pa[np.ix_(idx, idx)] = a
    pb[np.ix_(idx, idx)] = b
    prod = np.fft.ifft2(pa, norm="forward") * np.fft.ifft2(pb, norm="forward")
    full = np.fft.fft2(prod, norm="forward")
    return full[np.ix_(idx, idx)]


# ----------------------------------------------------------------------------
# Norms
# ----------------------------------------------------------------------------


def sobolev_norm(f: FourierField, s: float) -> float:
    """``H^s`` norm with the series Parseval weight ``L^2``."""

    power = np.abs(f.coeffs) ** 2
    if s != 0.0:
        power = power * (1.0 + f.grid.xi_sq) ** s
    return f.grid.L * math.sqrt(float(power.sum()))


def lebesgue2_norm(f: FourierField) -> float:
    return sobolev_norm(f, 0.0)


def physical_l2_norm(values: NDArray[Any], grid: SpectralGrid) -> float:
    """Riemann-sum ``L^2`` norm of physical samples (cell area ``(L/n)^2``)."""

    cell = grid.L / grid.n
    return cell * math.sqrt(float(np.sum(np.abs(values) ** 2)))


def random_band_limited(
    grid: SpectralGrid,
    rng: np.random.Generator,
    *,
    band: int | None = None,
    s: float = 0.0,
    norm: float | None = 1.0,
    zero_mean: bool = True,
) -> FourierField:
    """Random real field supported on ``max(|k1|, |k2|) <= band``.

    ``band`` defaults to ``n // 6``. When ``norm`` is given the field is scaled
    to that ``H^s`` norm.
    """

    band = grid.n // 6 if band is None else band
    if not 0 < band < grid.n // 2:
        raise ValueError(f"band must lie in (0, n/2), got {band}")
    raw = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    k = np.abs(grid.k)
    support = np.maximum.outer(k, k) <= band
    coeffs = np.where(support, raw, 0.0)
    coeffs = 0.5 * (coeffs + np.conj(reflect(coeffs)))
    if zero_mean:
        coeffs[0, 0] = 0.0
    field_ = FourierField(grid, coeffs, real=True)
    if norm is None:
        return field_
    current = sobolev_norm(field_, s)
    if current == 0.0:
        raise ValueError("random field vanished; widen the band")
    return field_.scaled(norm / current)


def rough_field(grid: SpectralGrid, s: float, *, norm: float = 1.0) -> FourierField:
    """``c(xi) ~ (1 + |xi|^2)^{-(s+1)/2}``: in ``H^s`` but not ``H^{s+1}`` in the continuum.

    Mean and Nyquist modes are zeroed; the result is scaled to ``H^s`` norm ``norm``.
    """

    coeffs = (1.0 + grid.xi_sq) ** (-(s + 1.0) / 2.0) + 0j
    coeffs[grid.nyquist_mask] = 0.0
    coeffs[0, 0] = 0.0
    field_ = FourierField(grid, coeffs, real=True)
    return field_.scaled(norm / sobolev_norm(field_, s))


# ----------------------------------------------------------------------------
# Trajectories and E_T norms
# ----------------------------------------------------------------------------


@dataclass(frozen=True, slots=True, eq=False)
class Trajectory:
    """Time-stamped states generated under ``params``.

    ``info`` holds solver bookkeeping (step counts, Picard sweeps, constants).
    """

    times: tuple[float, ...]
    states: tuple[FourierField, ...]
    params: PhysicalParams
    info: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        times = tuple(float(t) for t in self.times)
        states = tuple(self.states)
        if not times:
            raise ValueError("trajectory needs at least one sample")
        if len(times) != len(states):
            raise ValueError("times and states differ in length")
        if times[0] != 0.0:
            raise ValueError("trajectory must start at t = 0")
        if any(b <= a for a, b in zip(times, times[1:], strict=False)):
            raise ValueError("trajectory times must be strictly increasing")
        grid = states[0].grid
        if any(u.grid != grid for u in states):
            raise ValueError("trajectory states must share one grid")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "info", MappingProxyType(dict(self.info)))

    @property
    def grid(self) -> SpectralGrid:
        return self.states[0].grid

    @property
    def final(self) -> FourierField:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self) -> Iterator[tuple[float, FourierField]]:
        return iter(zip(self.times, self.states, strict=True))

    def truncated(self, horizon: float) -> Trajectory:
        """Samples with ``t <= horizon``."""

        keep = [i for i, t in enumerate(self.times) if t <= horizon]
        return Trajectory(
            tuple(self.times[i] for i in keep),
            tuple(self.states[i] for i in keep),
            self.params,
            self.info,
        )


def _check_et_indices(s: float, s1: float | None) -> None:
    if s <= -2.0:
        raise ValueError(f"s > -2 required for trajectory norms, got s={s}")
    if s > 0.0:
        if s1 is None or not -2.0 < s1 <= 0.0:
            raise ValueError(f"s > 0 requires an auxiliary index s1 in (-2, 0], got s1={s1}")
    elif s1 is not None:
        raise ValueError(f"s1 must be absent when -2 < s <= 0, got s1={s1}")


def et_norm(
    traj: Trajectory | Sequence[tuple[float, FourierField]],
    s: float,
    s1: float | None = None,
    *,
    start: float = 0.0,
) -> float:
    """Discrete ``E_T`` norm over the samples with ``t >= start``.

    ``-2 < s <= 0``: ``sup ||u||_{H^s} + sup_{t>0} t^{|s|/4} ||u||_{L^2}``.
    ``s > 0``: adds ``sup_{t>0} t^{|s1|/4} ||u||_{H^{s-s1}}`` and weights the
    ``L^2`` term with ``|s1|``.
    """

    _check_et_indices(s, s1)
    weight = abs(s) / 4.0 if s1 is None else abs(s1) / 4.0
    sup_hs = 0.0
    sup_l2 = 0.0
    sup_shift = 0.0
    for t, u in traj:
        if t < start:
            continue
        sup_hs = max(sup_hs, sobolev_norm(u, s))
        if t <= 0.0:
            continue
        w = t**weight
        sup_l2 = max(sup_l2, w * lebesgue2_norm(u))
        if s1 is not None:
            sup_shift = max(sup_shift, w * sobolev_norm(u, s - s1))
    return sup_hs + sup_l2 + sup_shift


__all__ = [
    "FourierField",
    "SpectralGrid",
    "Trajectory",
    "convolve",
    "et_norm",
    "hermitian_defect",
    "lebesgue2_norm",
    "make_grid",
    "physical_l2_norm",
    "random_band_limited",
    "reflect",
    "resample",
    "rough_field",
    "sobolev_norm",
    "to_fourier",
    "to_physical",
]
