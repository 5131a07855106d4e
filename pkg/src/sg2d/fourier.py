"""Spectral representation of real fields on the 2-torus [0, 2pi)^2.

Coefficients are stored in the unitary-on-modes convention: a field is
u(x) = (2pi)^{-1} sum_n c(n) exp(i n.x), so the L^2(T^2) norm of u equals
the plain l^2 norm of the coefficient array and an independent standard
complex Gaussian per mode has unit variance.  Arrays use the numpy fft2
frequency layout; Hermitian symmetry c(-n) = conj(c(n)) encodes realness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from functools import cached_property

import numpy as np

from . import kernels

TWO_PI = 2.0 * math.pi


def _bump_bridge(s: np.ndarray) -> np.ndarray:
    # smooth monotone bridge on [0,1]: 0 at 0, 1 at 1, flat to all orders at both ends
    a = np.exp(-1.0 / np.clip(s, 1e-300, None), where=s > 0, out=np.zeros_like(s))
    b = np.exp(-1.0 / np.clip(1.0 - s, 1e-300, None), where=s < 1, out=np.zeros_like(s))
    return a / (a + b)


def _poly_bridge(s: np.ndarray) -> np.ndarray:
    # quintic smoothstep: C^2 junctions, used for cutoff-sensitivity checks
    t = np.clip(s, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


_BRIDGES = {"bump": _bump_bridge, "poly": _poly_bridge}


@dataclass(frozen=True)
class CutoffProfile:
    """Radial frequency-cutoff profile: 1 on [0, 1/2], 0 on [1, inf), smooth bridge between.

    The profile is non-increasing and at least C^2, so the induced Fourier
    multiplier is a smooth projector onto modes |n| < cutoff.
    """

    bridge: str = "bump"

    def __post_init__(self):
        if self.bridge not in _BRIDGES:
            raise ValueError(f"unknown bridge {self.bridge!r}; options: {sorted(_BRIDGES)}")

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.ones_like(r)
        out[r >= 1.0] = 0.0
        mid = (r > 0.5) & (r < 1.0)
        out[mid] = _BRIDGES[self.bridge](2.0 * (1.0 - r[mid]))
        return out

    def multiplier(self, n1, n2, cutoff: int) -> np.ndarray:
        """Evaluate chi(|n| / cutoff) on integer mode arrays."""
        return self(np.hypot(n1, n2) / float(cutoff))


@dataclass(frozen=True)
class GridSpec:
    """Simulation grid: M points per axis, frequency cutoff, model parameters.

    Invariants enforced at construction:
      * m_points is even and >= 2 * cutoff + 2 (all modes |n_i| <= M/2 - 1
        touched by the projector are representable without Nyquist ambiguity);
      * beta_sq > 0.
    A ratio m_points >= 4 * cutoff is recommended to control aliasing of the
    non-polynomial nonlinearity and is the default everywhere.
    """

    m_points: int
    cutoff: int
    beta_sq: float
    coupling: float = 1.0
    profile: CutoffProfile = dataclass_field(default_factory=CutoffProfile)

    def __post_init__(self):
        if self.m_points % 2 != 0 or self.m_points <= 0:
            raise ValueError(f"m_points must be a positive even integer, got {self.m_points}")
        if self.cutoff < 1:
            raise ValueError(f"cutoff must be >= 1, got {self.cutoff}")
        if self.m_points < 2 * self.cutoff + 2:
            raise ValueError(
                f"m_points={self.m_points} violates m_points >= 2*cutoff + 2 "
                f"(mode representability), cutoff={self.cutoff}"
            )
        if not self.beta_sq > 0:
            raise ValueError(f"beta_sq must be > 0, got {self.beta_sq}")

    def __reduce__(self):
        # keep pickles lean: cached mode arrays are rebuilt on unpickle
        return (
            GridSpec,
            (self.m_points, self.cutoff, self.beta_sq, self.coupling, self.profile),
        )

    @property
    def beta(self) -> float:
        return math.sqrt(self.beta_sq)

    @property
    def cell_area(self) -> float:
        return (TWO_PI / self.m_points) ** 2

    @cached_property
    def mode_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer mode numbers (n1, n2) in fft2 layout, each shaped (M, M)."""
        idx = np.fft.fftfreq(self.m_points, d=1.0 / self.m_points).astype(np.int64)
        n1 = np.repeat(idx[:, None], self.m_points, axis=1)
        n2 = np.repeat(idx[None, :], self.m_points, axis=0)
        return n1, n2

    @cached_property
    def mode_norm_sq(self) -> np.ndarray:
        n1, n2 = self.mode_index
        return (n1 * n1 + n2 * n2).astype(float)

    @cached_property
    def bracket_sq(self) -> np.ndarray:
        """<n>^2 = 1 + |n|^2 per mode."""
        return 1.0 + self.mode_norm_sq

    @cached_property
    def bracket(self) -> np.ndarray:
        return np.sqrt(self.bracket_sq)

    @cached_property
    def representable(self) -> np.ndarray:
        """Mask of modes with |n_i| <= M/2 - 1 (Nyquist lines excluded)."""
        n1, n2 = self.mode_index
        half = self.m_points // 2
        return (np.abs(n1) < half) & (np.abs(n2) < half)

    def projector_multiplier(self, cutoff: int | None = None) -> np.ndarray:
        n = cutoff if cutoff is not None else self.cutoff
        if n == self.cutoff:
            return self.chi
        n1, n2 = self.mode_index
        return self.profile.multiplier(n1, n2, n)

    @cached_property
    def chi(self) -> np.ndarray:
        """chi(|n| / cutoff) on the grid layout (the default projector symbol)."""
        n1, n2 = self.mode_index
        return self.profile.multiplier(n1, n2, self.cutoff)

    def grid_points(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.m_points) * (TWO_PI / self.m_points)
        return np.meshgrid(x, x, indexing="ij")


@dataclass
class FourierField:
    """Real field on the torus stored by its complex mode coefficients."""

    grid: GridSpec
    coef: np.ndarray

    @classmethod
    def zeros(cls, grid: GridSpec) -> "FourierField":
        return cls(grid, np.zeros((grid.m_points, grid.m_points), dtype=np.complex128))

    @classmethod
    def from_point_values(cls, grid: GridSpec, values: np.ndarray) -> "FourierField":
        """Transform an M x M array of real point values to coefficients.

        Inverse of :meth:`point_values`; the round trip is exact to fft
        precision for any real input array.
        """
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.m_points, grid.m_points):
            raise ValueError(
                f"point-value array has shape {values.shape}, "
                f"expected {(grid.m_points, grid.m_points)}"
            )
        coef = np.fft.fft2(values) * (TWO_PI / grid.m_points**2)
        return cls(grid, coef)

    def point_values(self) -> np.ndarray:
        """Evaluate the field on the M x M collocation grid."""
        m = self.grid.m_points
        return np.fft.ifft2(self.coef).real * (m * m / TWO_PI)

    def copy(self) -> "FourierField":
        return FourierField(self.grid, self.coef.copy())

    def project(self, cutoff: int | None = None) -> "FourierField":
        """Apply the smooth frequency projector (default: the grid's cutoff)."""
        return FourierField(self.grid, self.coef * self.grid.projector_multiplier(cutoff))

    def sobolev_norm(self, s: float) -> float:
        """H^s norm: ( sum <n>^{2s} |c(n)|^2 )^{1/2}."""
        w = self.grid.bracket_sq ** s
        return float(np.sqrt(np.sum(w * (self.coef.real**2 + self.coef.imag**2))))

    def smooth_sup_norm(self, alpha: float) -> float:
        """Grid sup of <grad>^{-alpha} applied to the field.

        Cheap monotone proxy for the W^{-alpha,inf} norm on band-limited
        fields (Bessel-potential smoothing then pointwise max).
        """
        if not alpha > 0:
            raise ValueError("alpha must be > 0")
        return smooth_sup_norm_of_coef(self.grid, self.coef, alpha)

    def l2_norm(self) -> float:
        return self.sobolev_norm(0.0)

    def hermitian_defect(self) -> float:
        """Max deviation from c(-n) = conj(c(n)); zero for a real field."""
        rev = _reverse_index(self.grid.m_points)
        return float(np.abs(self.coef - np.conj(self.coef[rev][:, rev])).max())

    def __add__(self, other: "FourierField") -> "FourierField":
        return FourierField(self.grid, self.coef + other.coef)

    def __sub__(self, other: "FourierField") -> "FourierField":
        return FourierField(self.grid, self.coef - other.coef)

    def __mul__(self, scalar: float) -> "FourierField":
        return FourierField(self.grid, self.coef * scalar)

    __rmul__ = __mul__


def _reverse_index(m: int) -> np.ndarray:
    return (-np.arange(m)) % m


def hermitian_point_values(coef: np.ndarray) -> np.ndarray:
    """Grid values of a Hermitian coefficient array via the real inverse FFT."""
    m = coef.shape[0]
    half = np.ascontiguousarray(coef[:, : m // 2 + 1])
    return np.fft.irfft2(half, s=(m, m)) * (m * m / TWO_PI)


def real_forward_coef(values: np.ndarray) -> np.ndarray:
    """Full Hermitian coefficient array of a real grid array via rfft2."""
    m = values.shape[0]
    half = np.fft.rfft2(values) * (TWO_PI / (m * m))
    full = np.empty((m, m), dtype=np.complex128)
    full[:, : m // 2 + 1] = half
    rev = _reverse_index(m)
    full[:, m // 2 + 1:] = np.conj(half[rev][:, 1: m // 2][:, ::-1])
    return full


def smooth_sup_norm_of_coef(grid: GridSpec, coef: np.ndarray, alpha: float) -> float:
    """sup over grid points of |<grad>^{-alpha} u| for a coefficient array."""
    m = grid.m_points
    smoothed = np.fft.ifft2(coef * grid.bracket_sq ** (-0.5 * alpha)) * (m * m / TWO_PI)
    return float(np.abs(smoothed).max())


def hermitian_symmetrize(coef: np.ndarray) -> np.ndarray:
    rev = _reverse_index(coef.shape[0])
    return 0.5 * (coef + np.conj(coef[rev][:, rev]))


def cutoff_weights(cutoff: int, profile: CutoffProfile | None = None):
    """Mode list and summation weights of the squared-projector Green kernel.

    Returns integer mode coordinates (k, 2) and weights
    chi(|n|/cutoff)^2 / (4 pi^2 <n>^2) for every lattice mode the profile
    touches (|n| < cutoff; the profile vanishes beyond).
    """
    profile = profile or CutoffProfile()
    rng = np.arange(-cutoff, cutoff + 1)
    n1, n2 = np.meshgrid(rng, rng, indexing="ij")
    n1 = n1.ravel()
    n2 = n2.ravel()
    chi = profile.multiplier(n1, n2, cutoff)
    keep = chi > 0.0
    n1, n2, chi = n1[keep], n2[keep], chi[keep]
    w = chi**2 / ((1.0 + n1**2 + n2**2) * (4.0 * math.pi**2))
    modes = np.stack([n1, n2], axis=1).astype(float)
    return modes, w


def truncated_green(x, cutoff: int, profile: CutoffProfile | None = None):
    """Green function of 1 - Laplacian smoothed by the squared projector.

    Evaluates (1/4pi^2) sum_n chi(|n|/cutoff)^2 <n>^{-2} exp(i n.x) by direct
    lattice summation at arbitrary points of the torus.  At x = 0 this is the
    variance of the frequency-truncated free field; away from 0 it tracks
    -log(|x| + 1/cutoff)/(2 pi) up to a bounded additive band.

    Parameters
    ----------
    x : pair of floats or array of shape (p, 2)
        Evaluation points.
    cutoff : int
        Frequency cutoff (>= 1).

    Returns
    -------
    float or ndarray of shape (p,)
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if pts.shape[1] != 2:
        raise ValueError("points must have shape (p, 2)")
    modes, w = cutoff_weights(cutoff, profile)
    out = kernels.lattice_cos_sum(
        np.ascontiguousarray(pts[:, 0]),
        np.ascontiguousarray(pts[:, 1]),
        np.ascontiguousarray(modes[:, 0]),
        np.ascontiguousarray(modes[:, 1]),
        np.ascontiguousarray(w),
    )
    if np.ndim(x) == 1 or isinstance(x, tuple):
        return float(out[0])
    return out
