"""One- and bi-frequency solitary waves built from a radial profile, plus a substitution residual."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .clifford import DiracAlgebra, build_algebra, sigma_dot
from .errors import DomainError
from .fields import Grid
from .profiles import DkgProfile, Nonlinearity, SolitonProfile


def _points(x, n):
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1 and (x.size == n)
    pts = x.reshape(-1, n)
    return pts, single


def _unit(vec, name):
    vec = np.atleast_1d(np.asarray(vec, dtype=complex))
    if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
        raise DomainError(f"{name} must be a unit vector, |{name}| = {np.linalg.norm(vec)}")
    return vec


def _algebra(profile, half, alg):
    if alg is not None:
        return alg
    return build_algebra(profile.n, 2 * half)


def _radial_parts(profile, alg, x):
    """v(r), u(r) and sigma_r at every point; sigma_r is set to 0 where r = 0 (u vanishes there)."""
    pts, single = _points(x, profile.n)
    r = np.linalg.norm(pts, axis=1)
    v, u = profile.evaluate(r)
    S = sigma_dot(alg, pts)
    safe = np.where(r > 0, r, 1.0)
    S = S / safe[:, None, None]
    S[r == 0] = 0.0
    return v, u, S, single


def build_phi(profile: SolitonProfile, xi, x, alg: DiracAlgebra | None = None) -> np.ndarray:
    """phi_xi(x) = (v xi, i u sigma_r xi); returns shape (N, P), or (N,) for a single point."""
    xi = _unit(xi, "xi")
    alg = _algebra(profile, xi.size, alg)
    v, u, S, single = _radial_parts(profile, alg, x)
    top = v[None, :] * xi[:, None]
    bottom = 1j * u[None, :] * np.einsum("pab,b->ap", S, xi)
    out = np.concatenate([top, bottom], axis=0)
    return out[:, 0] if single else out


def build_chi(profile: SolitonProfile, eta, x, alg: DiracAlgebra | None = None) -> np.ndarray:
    """chi_eta(x) = (-i u sigma_r^* eta, v eta)."""
    eta = _unit(eta, "eta")
    alg = _algebra(profile, eta.size, alg)
    v, u, S, single = _radial_parts(profile, alg, x)
    top = -1j * u[None, :] * np.einsum("pba,b->ap", S.conj(), eta)
    bottom = v[None, :] * eta[:, None]
    out = np.concatenate([top, bottom], axis=0)
    return out[:, 0] if single else out


@dataclass(frozen=True)
class BiFrequencyParams:
    """Amplitude vectors (Xi, H) with |Xi|^2 - |H|^2 = 1.

    ``sign = -1`` selects the branch |Xi|^2 - |H|^2 = -1, which also solves the
    equation when f is even.
    """

    Xi: np.ndarray
    H: np.ndarray
    sign: int = 1

    def __post_init__(self):
        Xi = np.atleast_1d(np.asarray(self.Xi, dtype=complex))
        H = np.atleast_1d(np.asarray(self.H, dtype=complex))
        if Xi.shape != H.shape:
            raise DomainError("Xi and H must have the same length")
        if self.sign not in (1, -1):
            raise DomainError("sign must be +1 or -1")
        gap = np.vdot(Xi, Xi).real - np.vdot(H, H).real
        if abs(gap - self.sign) > 1e-12:
            raise DomainError(f"|Xi|^2 - |H|^2 = {gap!r}, expected {self.sign}")
        object.__setattr__(self, "Xi", Xi)
        object.__setattr__(self, "H", H)

    @classmethod
    def from_ab(cls, a: float, b: float, xi, eta) -> "BiFrequencyParams":
        return cls(a * np.asarray(xi, dtype=complex), b * np.asarray(eta, dtype=complex))

    @property
    def a(self) -> float:
        return float(np.linalg.norm(self.Xi))

    @property
    def b(self) -> float:
        return float(np.linalg.norm(self.H))

    @property
    def xi(self) -> np.ndarray:
        return self.Xi / self.a if self.a > 0 else _first_axis(self.Xi.size)

    @property
    def eta(self) -> np.ndarray:
        # any unit vector works when H = 0, its amplitude is zero
        return self.H / self.b if self.b > 0 else _first_axis(self.H.size)


def _first_axis(k):
    e = np.zeros(k, dtype=complex)
    e[0] = 1.0
    return e


def build_bifrequency(profile: SolitonProfile, p: BiFrequencyParams, t: float, x,
                      alg: DiracAlgebra | None = None) -> np.ndarray:
    """|Xi| phi_xi e^{-i omega t} + |H| chi_eta e^{i omega t}."""
    w = profile.omega
    out = p.a * np.exp(-1j * w * t) * build_phi(profile, p.xi, x, alg)
    if p.b > 0:
        out = out + p.b * np.exp(1j * w * t) * build_chi(profile, p.eta, x, alg)
    return out


class OneFrequencyWave:
    """t, x -> phi_xi(x) e^{-i omega t}, with the mass attached for residual checks."""

    def __init__(self, profile: SolitonProfile, xi, alg: DiracAlgebra | None = None):
        self.profile = profile
        self.xi = _unit(xi, "xi")
        self.alg = _algebra(profile, self.xi.size, alg)
        self.m = profile.m

    def __call__(self, t, x):
        return np.exp(-1j * self.profile.omega * t) * build_phi(self.profile, self.xi, x, self.alg)


class BiFrequencyWave:
    def __init__(self, profile: SolitonProfile, params: BiFrequencyParams, alg: DiracAlgebra | None = None):
        self.profile = profile
        self.params = params
        self.alg = _algebra(profile, params.Xi.size, alg)
        self.m = profile.m

    def __call__(self, t, x):
        return build_bifrequency(self.profile, self.params, t, x, self.alg)


def closure_values(nl, tau, points) -> np.ndarray:
    """Scalar coupling at each point: f(tau) for a Nonlinearity, the static field for a DkgProfile."""
    if isinstance(nl, DkgProfile):
        r = np.linalg.norm(points, axis=1)
        return np.interp(r, nl.r, nl.Phi, right=0.0)
    if isinstance(nl, Nonlinearity):
        return nl(tau)
    return nl(tau, points)


def nld_residual(alg: DiracAlgebra, nl, field, t: float, grid: Grid, m: float | None = None,
                 dt_res: float = 1e-3, h_fd: float = 1e-2) -> float:
    """Sup norm of i d_t psi - D_m psi + f(psi^* beta psi) beta psi over the grid points.

    ``field(t, points)`` must return shape (N, P).  The time derivative is a centered
    difference with step ``dt_res``; spatial derivatives use five-point stencils of
    width ``h_fd``, so for an exact solution the result is O(dt_res^2 + h_fd^4).
    """
    m = getattr(field, "m", None) if m is None else m
    if m is None:
        raise DomainError("mass m is required")
    prof = getattr(field, "profile", None)
    if prof is not None and h_fd * prof.decay_rate > 0.3:
        warnings.warn("finite-difference step does not resolve the decay rate of the wave", stacklevel=2)
    pts = grid.points
    psi = field(t, pts)
    dt_psi = (field(t + dt_res, pts) - field(t - dt_res, pts)) / (2.0 * dt_res)
    Dpsi = m * np.tensordot(alg.beta, psi, axes=(1, 0))
    for j in range(alg.n):
        e = np.zeros(alg.n)
        e[j] = h_fd
        d = (field(t, pts - 2 * e) - 8.0 * field(t, pts - e) + 8.0 * field(t, pts + e)
             - field(t, pts + 2 * e)) / (12.0 * h_fd)
        Dpsi = Dpsi - 1j * np.tensordot(alg.alpha[j], d, axes=(1, 0))
    tau = np.einsum("ap,ab,bp->p", psi.conj(), alg.beta, psi).real
    fb = closure_values(nl, tau, pts)[None, :] * np.tensordot(alg.beta, psi, axes=(1, 0))
    res = 1j * dt_psi - Dpsi + fb
    return float(np.max(np.abs(res)))
