"""Split-step time integration of the one-dimensional Soler model

    i d_t psi = -i alpha d_x psi + m beta psi - f(psi^* beta psi) beta psi

on a periodic grid.  The nonlinear sub-flow i d_t psi = -f(tau) beta psi keeps
tau = psi^* beta psi fixed pointwise, so it is the exact rotation
exp(i t f(tau) beta); the free sub-flow is exact in Fourier space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .clifford import DiracAlgebra, build_algebra
from .errors import BlowUpError, ConfigurationError, DomainError
from .fields import Grid, SpinorField
from .profiles import Nonlinearity, SolitonProfile
from .symmetry import Charges, compute_charges
from .waves import build_phi

BLOWUP_LEVEL = 1e6


@dataclass
class EvolutionRun:
    psi: SpinorField
    dt: float
    nl: Nonlinearity
    m: float
    times: np.ndarray
    snapshots: np.ndarray = field(repr=False)
    alg: DiracAlgebra = field(repr=False)
    steps: int = 0

    @property
    def grid(self) -> Grid:
        return self.psi.grid

    def snapshot(self, i: int) -> SpinorField:
        return SpinorField(self.snapshots[i], self.grid)


def periodic_grid_for(profile: SolitonProfile, M: int = 1024, tail: float = 1e-12, L_min: float = 10.0) -> Grid:
    """Periodic grid on [-L, L) with the profile below ``tail`` at the edges."""
    if M & (M - 1):
        raise ConfigurationError(f"grid size must be a power of two, got {M}")
    kappa = profile.decay_rate
    amp = max(float(np.max(np.abs(profile.v))), 1e-300)
    L = max(L_min, math.log(amp / tail) / kappa)
    for _ in range(60):
        v, u = profile.evaluate(np.array([L]))
        if math.hypot(v[0], u[0]) < tail:
            break
        L *= 1.1
    return Grid.periodic_line(L, M)


def _check_grid(grid: Grid):
    if not grid.periodic or grid.n != 1:
        raise ConfigurationError("evolution needs a periodic line grid")
    if grid.size & (grid.size - 1):
        raise ConfigurationError(f"grid size must be a power of two, got {grid.size}")


def nonlinear_substep(alg: DiracAlgebra, nl: Nonlinearity, data: np.ndarray, s: float) -> np.ndarray:
    """psi -> exp(i s f(psi^* beta psi) beta) psi, pointwise."""
    beta = np.diag(alg.beta).real
    tau = np.einsum("a,ap->p", beta, np.abs(data) ** 2)
    phase = s * nl(tau)
    return data * np.exp(1j * phase[None, :] * beta[:, None])


class _FreeStep:
    """exp(-i dt (k alpha + m beta)) per Fourier mode; the Nyquist wavenumber is set to zero."""

    def __init__(self, alg: DiracAlgebra, m: float, grid: Grid, dt: float):
        k = grid.wavenumbers()
        if grid.size % 2 == 0:
            k[grid.size // 2] = 0.0
        E = np.sqrt(k**2 + m * m)
        if dt != 0 and abs(dt) * float(E.max()) >= math.pi:
            raise ConfigurationError(
                f"dt * max free frequency = {abs(dt) * E.max():.3f} must stay below pi")
        H = k[:, None, None] * alg.alpha[0][None] + m * alg.beta[None]
        if m == 0:
            Einv = np.where(E > 0, 1.0 / np.where(E > 0, E, 1.0), 0.0)
            sinc = np.where(E > 0, np.sin(E * dt) * Einv, dt)
        else:
            sinc = np.sin(E * dt) / E
        self.U = np.cos(E * dt)[:, None, None] * np.eye(alg.N)[None] - 1j * sinc[:, None, None] * H

    def __call__(self, data: np.ndarray) -> np.ndarray:
        hat = np.fft.fft(data, axis=1)
        hat = np.einsum("pab,bp->ap", self.U, hat)
        return np.fft.ifft(hat, axis=1)


def evolve(psi0: SpinorField, nl: Nonlinearity, m: float, T: float, dt: float, grid: Grid | None = None,
           alg: DiracAlgebra | None = None, snapshot_every: int | None = None,
           edge_tol: float = 1e-10) -> EvolutionRun:
    """Strang splitting: half nonlinear rotation, exact free step, half nonlinear rotation.

    A negative ``dt`` integrates backwards.  Snapshots are stored every
    max(1, floor(T / (200 |dt|))) steps unless ``snapshot_every`` is given.
    """
    grid = grid if grid is not None else psi0.grid
    _check_grid(grid)
    alg = alg or build_algebra(1, psi0.N)
    if dt == 0 or T < 0:
        raise ConfigurationError("need dt != 0 and T >= 0")
    data = np.array(psi0.data, dtype=complex)
    edge = float(np.max(np.abs(data[:, [0, -1]]))) if data.size else 0.0
    if edge > edge_tol * max(1.0, float(np.max(np.abs(data)))):
        raise DomainError(f"initial data is {edge:.2e} at the box edge; enlarge the box")
    steps = int(round(T / abs(dt)))
    every = snapshot_every or max(1, steps // 200)
    free = _FreeStep(alg, m, grid, dt)
    times, snaps = [0.0], [data.copy()]
    t = 0.0
    half = 0.5 * dt
    for i in range(1, steps + 1):
        data = nonlinear_substep(alg, nl, data, half)
        data = free(data)
        data = nonlinear_substep(alg, nl, data, half)
        t = i * dt
        if i % every == 0 or i == steps:
            sup = float(np.max(np.abs(data)))
            if not np.isfinite(sup) or sup > BLOWUP_LEVEL:
                raise BlowUpError(f"sup|psi| = {sup:.3e} at t = {t}", last_time=times[-1])
            times.append(t)
            snaps.append(data.copy())
    return EvolutionRun(SpinorField(data, grid), dt, nl, m, np.array(times), np.array(snaps), alg, steps)


@dataclass
class ChargeSeries:
    t: np.ndarray
    Q: np.ndarray
    Lambda: np.ndarray
    Q_plus: np.ndarray
    Q_minus: np.ndarray
    invariant: np.ndarray
    sup_beta_density: np.ndarray

    def rows(self):
        for i in range(self.t.size):
            yield (self.t[i], self.Q[i], self.Lambda[i].real, self.Lambda[i].imag,
                   self.Q_plus[i], self.Q_minus[i], self.invariant[i])


def track_charges(run: EvolutionRun) -> ChargeSeries:
    vals: list[Charges] = [compute_charges(run.alg, s, run.grid) for s in run.snapshots]
    beta = np.diag(run.alg.beta).real
    dens = [float(np.max(np.abs(np.einsum("a,ap->p", beta, np.abs(s) ** 2)))) for s in run.snapshots]
    Q = np.array([c.Q for c in vals])
    Lam = np.array([c.Lambda for c in vals], dtype=complex)
    return ChargeSeries(run.times, Q, Lam, 0.5 * (Q + Lam.real), 0.5 * (Q - Lam.real),
                        Q**2 - np.abs(Lam) ** 2, np.array(dens))


def deviation_series(run: EvolutionRun, exact) -> np.ndarray:
    """sup_x |psi(t) - exact(t, x)| at the snapshot times; ``exact(t, points)`` has shape (N, P)."""
    pts = run.grid.points
    return np.array([float(np.max(np.abs(s - exact(t, pts)))) for t, s in zip(run.times, run.snapshots)])


def _shift(data: np.ndarray, grid: Grid, x0: float) -> np.ndarray:
    k = grid.wavenumbers()
    return np.fft.ifft(np.fft.fft(data, axis=1) * np.exp(-1j * k * x0)[None, :], axis=1)


def orbit_distance(psi: np.ndarray, phi: np.ndarray, grid: Grid) -> float:
    """L^2 distance from psi to the orbit {e^{i s} phi(. - x0)}, x0 the charge centre of psi."""
    w = grid.weights
    dens = np.sum(np.abs(psi) ** 2, axis=0)
    x0 = float(np.sum(w * grid.x * dens) / np.sum(w * dens))
    ref = _shift(phi, grid, x0)
    overlap = np.sum(w * np.sum(ref.conj() * psi, axis=0))
    if abs(overlap) > 0:
        ref = ref * (overlap / abs(overlap))
    return float(np.sqrt(np.sum(w * np.sum(np.abs(psi - ref) ** 2, axis=0))))


@dataclass
class GrowthRecord:
    rate: float | None
    r_squared: float | None
    inconclusive: bool
    times: np.ndarray = field(repr=False)
    deviation: np.ndarray = field(repr=False)
    window: tuple[float, float] | None = None
    reason: str = ""


def perturbation_growth(profile: SolitonProfile, mode: SpinorField, eps: float, T: float, dt: float = 1e-3,
                        grid: Grid | None = None, nl: Nonlinearity | None = None, upper: float = 1e-2,
                        min_growth: float = math.e ** 3, min_r2: float = 0.99) -> GrowthRecord:
    """Evolve phi + eps * mode and fit log(orbit distance) against t on the window where the
    distance lies in [10 eps, upper].

    ``mode`` may live on any line grid; it is interpolated onto the evolution grid
    (zero outside its support) and normalized in L^2.
    """
    nl = nl or profile.nl
    if nl is None:
        raise ConfigurationError("a Nonlinearity is required")
    grid = grid or periodic_grid_for(profile)
    alg = build_algebra(1, 2)
    phi = build_phi(profile, [1.0], grid.points, alg)
    phi_norm = math.sqrt(float(np.sum(grid.weights * np.sum(np.abs(phi) ** 2, axis=0))))
    if eps > 1e-4 * phi_norm:
        raise DomainError(f"eps = {eps} exceeds 1e-4 ||phi|| = {1e-4 * phi_norm}")
    x = grid.x
    xm = mode.grid.x
    md = np.array([np.interp(x, xm, c.real, left=0.0, right=0.0)
                   + 1j * np.interp(x, xm, c.imag, left=0.0, right=0.0) for c in mode.data])
    nrm = math.sqrt(float(np.sum(grid.weights * np.sum(np.abs(md) ** 2, axis=0))))
    md = md / nrm if nrm > 0 else md
    run = evolve(SpinorField(phi + eps * md, grid), nl, profile.m, T, dt, grid, alg,
                 snapshot_every=max(1, int(round(0.05 / dt))))
    dev = np.array([orbit_distance(s, phi, grid) for s in run.snapshots])
    lo = 10.0 * eps
    if eps == 0:
        return GrowthRecord(None, None, True, run.times, dev, None, "zero perturbation")
    inside = np.where((dev >= lo) & (dev <= upper))[0]
    if inside.size < 5:
        return GrowthRecord(None, None, True, run.times, dev, None, "deviation never entered the linear window")
    # first contiguous stretch inside the window
    stop = inside[0]
    while stop + 1 < dev.size and lo <= dev[stop + 1] <= upper:
        stop += 1
    sel = np.arange(inside[0], stop + 1)
    if sel.size < 5:
        return GrowthRecord(None, None, True, run.times, dev, None, "window too short")
    t, y = run.times[sel], np.log(dev[sel])
    A = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    fit = A @ coef
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - fit) ** 2)) / ss if ss > 0 else 0.0
    growth = math.exp(y[-1] - y[0])
    window = (float(t[0]), float(t[-1]))
    if growth < min_growth or r2 < min_r2:
        return GrowthRecord(float(coef[0]), r2, True, run.times, dev, window,
                            f"growth factor {growth:.3g}, R^2 {r2:.4f}")
    return GrowthRecord(float(coef[0]), r2, False, run.times, dev, window)
