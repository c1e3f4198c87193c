"""Sampling grids and spinor fields."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class Grid:
    """Quadrature points in R^n with weights.

    ``points`` has shape (P, n).  A periodic line grid is uniform on [-L, L)
    with equal weights; a Dirichlet line grid holds the interior nodes
    x_i = -L + (i+1) h, h = 2L/(M+1).
    """

    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    periodic: bool = False
    L: float | None = None

    @classmethod
    def periodic_line(cls, L: float, M: int) -> "Grid":
        x = -L + 2.0 * L * np.arange(M) / M
        return cls(x[:, None], np.full(M, 2.0 * L / M), True, float(L))

    @classmethod
    def dirichlet_line(cls, L: float, M: int) -> "Grid":
        h = 2.0 * L / (M + 1)
        x = -L + h * np.arange(1, M + 1)
        return cls(x[:, None], np.full(M, h), False, float(L))

    @classmethod
    def scattered(cls, points, weights=None) -> "Grid":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        w = np.ones(len(pts)) if weights is None else np.asarray(weights, dtype=float)
        return cls(pts, w)

    @classmethod
    def box(cls, L: float, M: int, n: int) -> "Grid":
        """Tensor-product midpoint grid on [-L, L]^n (M points per axis)."""
        h = 2.0 * L / M
        axis = -L + h * (np.arange(M) + 0.5)
        mesh = np.meshgrid(*([axis] * n), indexing="ij")
        pts = np.stack([a.ravel() for a in mesh], axis=1)
        return cls(pts, np.full(len(pts), h**n), False, float(L))

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def x(self) -> np.ndarray:
        if self.n != 1:
            raise ConfigurationError("x is only defined on line grids")
        return self.points[:, 0]

    @property
    def spacing(self) -> float:
        return float(self.x[1] - self.x[0])

    def wavenumbers(self) -> np.ndarray:
        if not self.periodic:
            raise ConfigurationError("wavenumbers need a periodic grid")
        return 2.0 * np.pi * np.fft.fftfreq(self.size, d=self.spacing)


@dataclass
class SpinorField:
    """Complex N-component field; ``data`` has shape (N, P) on ``grid``."""

    data: np.ndarray
    grid: Grid

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim != 2 or self.data.shape[1] != self.grid.size:
            raise ConfigurationError(
                f"field data of shape {self.data.shape} does not fit a grid of {self.grid.size} points")

    @property
    def N(self) -> int:
        return self.data.shape[0]

    def copy(self) -> "SpinorField":
        return SpinorField(self.data.copy(), self.grid)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.grid.weights * np.sum(np.abs(self.data) ** 2, axis=0))))

    def sup(self) -> float:
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    def __add__(self, other):
        return SpinorField(self.data + _data(other), self.grid)

    def __sub__(self, other):
        return SpinorField(self.data - _data(other), self.grid)

    def __mul__(self, c):
        return SpinorField(self.data * c, self.grid)

    __rmul__ = __mul__


def _data(x):
    return x.data if isinstance(x, SpinorField) else x


def pointwise_form(matrix: np.ndarray, psi: np.ndarray, phi: np.ndarray | None = None) -> np.ndarray:
    """psi^* M phi at every point (``phi`` defaults to ``psi``); arrays of shape (N, P)."""
    phi = psi if phi is None else phi
    return np.einsum("ap,ab,bp->p", psi.conj(), matrix, phi)


def line_derivative(data: np.ndarray, grid: Grid) -> np.ndarray:
    """d/dx along the last axis: spectral on periodic grids, fourth-order with zero padding otherwise."""
    if grid.periodic:
        k = grid.wavenumbers()
        if grid.size % 2 == 0:
            k[grid.size // 2] = 0.0
        return np.fft.ifft(1j * k * np.fft.fft(data, axis=-1), axis=-1)
    h = grid.spacing
    pad = np.zeros(data.shape[:-1] + (data.shape[-1] + 4,), dtype=data.dtype)
    pad[..., 2:-2] = data
    return (pad[..., :-4] - 8.0 * pad[..., 1:-3] + 8.0 * pad[..., 3:-1] - pad[..., 4:]) / (12.0 * h)
