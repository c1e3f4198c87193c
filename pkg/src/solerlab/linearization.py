"""Linearization at one- and bi-frequency solitary waves (n = 1, N = 2) and the
pointwise algebra behind the equivalence of their spectra for N = 4.

Perturbations are written in the rotating frame, psi = (phi + rho) e^{-i omega t},
so that

    d_t rho = L rho + A conj(rho),
    L = -i (D_m - f beta - omega) + i f' (beta phi)(beta phi)^*,
    A = i f' (beta phi)(beta phi)^T,

with f, f' evaluated at phi^* beta phi = v^2 - u^2.  Because of A the map is only
real-linear; it is stored as a real matrix acting on (Re rho, Im rho), where each
half lists the spinor components one after another on the grid:
[Re rho_1, Re rho_2, Im rho_1, Im rho_2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import linear_sum_assignment

from .clifford import DiracAlgebra, sigma_dot
from .errors import ConfigurationError, DomainError, NumericalError, UnsupportedNonlinearityError
from .fields import Grid, SpinorField
from .profiles import DkgProfile, Nonlinearity, SolitonProfile
from .waves import build_bifrequency, build_chi, build_phi

ZERO_MODE = "zero-mode"
TWO_OMEGA = "two-omega"
DISCRETE = "stable-discrete"
ESSENTIAL = "essential-band"
UNSTABLE = "unstable"


# ---------------------------------------------------------------------------
# grids and elementary blocks


@dataclass(frozen=True)
class GridConfig:
    """Dirichlet grid on [-L, L].  L = None picks min(L_factor/kappa, L_cap).

    ``wilson`` weights the mass term w (-delta^2)^4 / h added to m beta, with delta^2
    the undivided second difference.  It vanishes like h^7 on smooth modes and
    lifts the spurious branch of the central stencil near k h = pi (whose
    symbol returns to zero there) to a mass of about 256 w / h.
    """

    L: float | None = None
    M: int = 800
    L_factor: float = 30.0
    L_cap: float = 60.0
    wilson: float = 1.0 / 64.0

    def half_width(self, omega: float, m: float) -> float:
        if self.L is not None:
            return float(self.L)
        kappa = math.sqrt(m * m - omega * omega)
        return min(self.L_factor / kappa, self.L_cap)

    def build(self, omega: float, m: float) -> Grid:
        if self.M < 8:
            raise ConfigurationError("the linearization grid needs at least 8 points")
        return Grid.dirichlet_line(self.half_width(omega, m), self.M)


def derivative_matrix(M: int, h: float) -> sp.csr_matrix:
    """Fourth-order central difference with zero values beyond both ends."""
    c = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * h)
    return sp.diags([np.full(M - abs(k), c[k + 2]) for k in range(-2, 3)], list(range(-2, 3)),
                    shape=(M, M), format="csr")


def wilson_matrix(M: int, h: float, weight: float) -> sp.csr_matrix:
    """weight (-delta^2)^4 / h with zero values beyond both ends."""
    d2 = sp.diags([np.ones(M - 1), np.full(M, -2.0), np.ones(M - 1)], [-1, 0, 1], shape=(M, M), format="csr")
    return (weight / h) * (d2 @ d2 @ d2 @ d2)


def realify(L, A=None) -> np.ndarray:
    """Real matrix of rho -> L rho + A conj(rho) acting on (Re rho, Im rho)."""
    L = np.asarray(L.toarray() if sp.issparse(L) else L, dtype=complex)
    A = np.zeros_like(L) if A is None else np.asarray(A.toarray() if sp.issparse(A) else A, dtype=complex)
    P, Q = L + A, L - A
    return np.block([[P.real, -Q.imag], [P.imag, Q.real]])


def realify_vector(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex).ravel()
    return np.concatenate([z.real, z.imag])


def complexify_vector(y: np.ndarray) -> np.ndarray:
    """Inverse of :func:`realify_vector` for real vectors."""
    half = y.shape[0] // 2
    return y[:half] + 1j * y[half:]


def eigvec_to_rho(vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Spinor coefficients of e^{lambda t} and e^{conj(lambda) t} in the real solution
    y(t) = c e^{lambda t} + conj(c) e^{conj(lambda) t} built from a complex eigenvector c = (c_r, c_i):
    rho(t) = (c_r + i c_i) e^{lambda t} + conj(c_r - i c_i) e^{conj(lambda) t}.
    """
    half = vec.shape[0] // 2
    cr, ci = vec[:half], vec[half:]
    return cr + 1j * ci, np.conj(cr - 1j * ci)


def _dirac_block(alg: DiracAlgebra, m: float, grid: Grid, wilson: float = 0.0) -> sp.csr_matrix:
    """D_m = -i alpha d_x + (m + W) beta as a complex 2M x 2M matrix."""
    M = grid.size
    D = derivative_matrix(M, grid.spacing)
    mass = m * sp.identity(M, format="csr")
    if wilson:
        mass = mass + wilson_matrix(M, grid.spacing, wilson)
    return (sp.kron(sp.csr_matrix(-1j * alg.alpha[0]), D) + sp.kron(sp.csr_matrix(alg.beta), mass)).tocsr()


def _pointwise(mat: np.ndarray) -> sp.csr_matrix:
    """(N, N, M) array of pointwise matrices -> block matrix acting on stacked components."""
    N = mat.shape[0]
    return sp.bmat([[sp.diags(mat[i, j]) for j in range(N)] for i in range(N)], format="csr")


def _outer(y: np.ndarray, w: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """Pointwise coef * y w^T for spinor fields y, w of shape (N, M)."""
    return coef[None, None, :] * y[:, None, :] * w[None, :, :]


def _check_scope(alg: DiracAlgebra, profile, nl):
    if (alg.n, alg.N) != (1, 2):
        raise ConfigurationError("operator assembly is implemented for (n, N) = (1, 2)")
    if profile is not None and profile.n != 1:
        raise ConfigurationError("the profile must be one-dimensional")
    if isinstance(profile, DkgProfile):
        raise ConfigurationError("the Dirac-Klein-Gordon linearization is nonlocal and not assembled here")
    if nl is not None:
        if not isinstance(nl, Nonlinearity):
            raise UnsupportedNonlinearityError("the nonlinearity must be a Nonlinearity instance")
        if nl.kind == "power" and nl.k < 1.0:
            raise UnsupportedNonlinearityError(
                f"f = |tau|^{nl.k} is not differentiable at the nodes of v^2 - u^2 (need k >= 1)")


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True)
class LinearizedOperator:
    """Realified generator of the linearized flow.

    ``frame`` is ``"rotating"`` (unknown rho), ``"bifrequency"`` (unknowns P, Q of the
    pointwise basis phi/v, chi/v) or ``"bifrequency-full"`` (unknowns rho_-, rho_+
    multiplying e^{-i omega t} and e^{i omega t}).  For the bi-frequency frame,
    ``basis`` is the real matrix T with realified rho = T (P, Q).
    """

    matrix: np.ndarray = field(repr=False)
    omega: float
    m: float
    grid: Grid = field(repr=False)
    frame: str
    profile: SolitonProfile | None = field(default=None, repr=False)
    a: float = 1.0
    b: float = 0.0
    basis: sp.csr_matrix | None = field(default=None, repr=False)
    phi: np.ndarray | None = field(default=None, repr=False)
    chi: np.ndarray | None = field(default=None, repr=False)

    @property
    def h(self) -> float:
        return self.grid.spacing

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def scale(self) -> float:
        """Width of the spectral gap, m - omega; thresholds are measured in this unit."""
        return self.m - self.omega

    def to_rho(self, vec: np.ndarray) -> np.ndarray:
        """Map a (possibly complex) vector of this frame to realified rotating-frame coordinates."""
        if self.frame == "bifrequency":
            return self.basis @ vec
        if self.frame == "bifrequency-full":
            return vec[: vec.shape[0] // 2]
        return vec


def _wave_fields(profile: SolitonProfile, alg: DiracAlgebra, grid: Grid):
    phi = build_phi(profile, [1.0], grid.points, alg)
    chi = build_chi(profile, [1.0], grid.points, alg)
    tau = np.einsum("ap,ab,bp->p", phi.conj(), alg.beta, phi).real
    return phi, chi, tau


def free_operator(alg: DiracAlgebra, omega: float, m: float, grid_cfg: GridConfig | None = None) -> LinearizedOperator:
    """Linearization at the zero solution in the frame rotating with frequency omega."""
    _check_scope(alg, None, None)
    cfg = grid_cfg or GridConfig()
    grid = cfg.build(omega, m)
    I2M = sp.identity(2 * grid.size, format="csr")
    L = -1j * (_dirac_block(alg, m, grid, cfg.wilson) - omega * I2M)
    return LinearizedOperator(realify(L), omega, m, grid, "rotating")


def _one_frequency_parts(alg, profile, nl, grid, wilson, a2=1.0, b2=0.0):
    """Complex (L, A) of the rotating-frame generator; a2, b2 weight the phi and
    B K chi couplings (a2 = 1, b2 = 0 is the plain one-frequency case)."""
    phi, chi, tau = _wave_fields(profile, alg, grid)
    f = nl(tau)
    fp = nl.derivative(tau)
    omega = profile.omega
    M = grid.size
    beta = np.diag(alg.beta).real
    H = _dirac_block(alg, profile.m, grid, wilson) - _pointwise(
        np.einsum("a,ab,p->abp", beta, np.eye(alg.N), f)) - omega * sp.identity(2 * M)
    w = beta[:, None] * phi
    # chi^* beta B conj(rho) = c^T conj(rho) with c = B^T beta conj(chi)
    c = alg.B.T @ (beta[:, None] * chi.conj())
    Lc = -1j * H + _pointwise(_outer(1j * w, a2 * w.conj() + b2 * c.conj(), fp))
    Ac = _pointwise(_outer(1j * w, a2 * w + b2 * c, fp))
    return Lc, Ac, phi, chi


def assemble_one_frequency(alg: DiracAlgebra, profile: SolitonProfile, nl: Nonlinearity,
                           grid_cfg: GridConfig | None = None) -> LinearizedOperator:
    """Realified 4M x 4M generator of the linearization at phi e^{-i omega t}."""
    _check_scope(alg, profile, nl)
    cfg = grid_cfg or GridConfig()
    grid = cfg.build(profile.omega, profile.m)
    Lc, Ac, phi, chi = _one_frequency_parts(alg, profile, nl, grid, cfg.wilson)
    return LinearizedOperator(realify(Lc, Ac), profile.omega, profile.m, grid, "rotating",
                              profile, phi=phi, chi=chi)


def _check_ab(a, b):
    if a < 0 or b < 0:
        raise DomainError("a and b must be real and non-negative")
    if abs(a * a - b * b - 1.0) > 1e-12:
        raise DomainError(f"|a|^2 - |b|^2 = {a * a - b * b!r}, must equal 1")


def assemble_bifrequency_full(alg: DiracAlgebra, profile: SolitonProfile, nl: Nonlinearity, a: float, b: float,
                              grid_cfg: GridConfig | None = None) -> LinearizedOperator:
    """Generator for the pair (rho_-, rho_+) in

        psi = a (phi + rho_-) e^{-i omega t} + b (chi + rho_+) e^{i omega t},

    keeping only the non-oscillating part 2 Re(a^2 phi^* beta rho_- + b^2 chi^* beta rho_+)
    of the linearized density (the e^{+-2 i omega t} terms vanish when rho_+ has no
    component that mixes frequencies).  Unknowns: (realified rho_-, realified rho_+).
    """
    _check_scope(alg, profile, nl)
    _check_ab(a, b)
    cfg = grid_cfg or GridConfig()
    grid = cfg.build(profile.omega, profile.m)
    phi, chi, tau = _wave_fields(profile, alg, grid)
    f, fp = nl(tau), nl.derivative(tau)
    omega, M = profile.omega, grid.size
    beta = np.diag(alg.beta).real
    H0 = _dirac_block(alg, profile.m, grid, cfg.wilson) - _pointwise(np.einsum("a,ab,p->abp", beta, np.eye(alg.N), f))
    I = sp.identity(2 * M)
    wp, wc = beta[:, None] * phi, beta[:, None] * chi
    blocks = []
    for y, H in ((wp, H0 - omega * I), (wc, H0 + omega * I)):
        row = []
        for z, weight, own in ((wp, a * a, y is wp), (wc, b * b, y is wc)):
            Lc = _pointwise(_outer(1j * y, weight * z.conj(), fp))
            Ac = _pointwise(_outer(1j * y, weight * z, fp))
            if own:
                Lc = Lc - 1j * H
            row.append(realify(Lc, Ac))
        blocks.append(row)
    return LinearizedOperator(np.block(blocks), omega, profile.m, grid, "bifrequency-full", profile,
                              a=a, b=b, phi=phi, chi=chi)


def conjugation_embedding(alg: DiracAlgebra, M: int) -> np.ndarray:
    """Real matrix of rho -> (rho, B K rho), the invariant subspace r = conj(q), s = conj(p)."""
    Bc = sp.kron(sp.csr_matrix(alg.B), sp.identity(M))
    BK = realify(sp.csr_matrix(Bc.shape, dtype=complex), Bc)
    return np.vstack([np.eye(BK.shape[0]), BK])


def pq_basis(profile: SolitonProfile, alg: DiracAlgebra, grid: Grid) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Realified maps (P, Q) -> rho = P phi/v + Q chi/v and back, pointwise."""
    phi, chi, _ = _wave_fields(profile, alg, grid)
    v = phi[0].real
    if np.any(v <= 0):
        raise DomainError("v must be positive on the grid for the (P, Q) frame")
    E = np.stack([phi / v, chi / v], axis=1)  # (N, 2, M): column j is the j-th basis spinor
    det = E[0, 0] * E[1, 1] - E[0, 1] * E[1, 0]
    Einv = np.stack([np.stack([E[1, 1], -E[0, 1]]), np.stack([-E[1, 0], E[0, 0]])]) / det
    T = sp.csr_matrix(realify(_pointwise(E)))
    Tinv = sp.csr_matrix(realify(_pointwise(Einv)))
    return T, Tinv


def assemble_bifrequency(alg: DiracAlgebra, profile: SolitonProfile, nl: Nonlinearity, a: float, b: float,
                         grid_cfg: GridConfig | None = None) -> LinearizedOperator:
    """Linearization at a phi e^{-i omega t} + b chi e^{i omega t} in the coordinates (P, Q)
    of the no-frequency-mixing subspace rho_+ = B K rho_-, with rho_- = P phi/v + Q chi/v.

    The (rho_-, rho_+) system is restricted through the embedding rho -> (rho, B K rho)
    and transported to (P, Q).
    """
    full = assemble_bifrequency_full(alg, profile, nl, a, b, grid_cfg)
    M = full.grid.size
    J = conjugation_embedding(alg, M)
    half = 4 * M
    restricted = full.matrix[:half] @ J
    T, Tinv = pq_basis(profile, alg, full.grid)
    mat = np.asarray(Tinv @ sp.csr_matrix(restricted) @ T.toarray())
    return LinearizedOperator(mat, full.omega, full.m, full.grid, "bifrequency", profile, a=a, b=b,
                              basis=T, phi=full.phi, chi=full.chi)


def invariant_subspace_defect(full: LinearizedOperator, alg: DiracAlgebra) -> float:
    """Relative size of the component of A_full J that leaves range(J)."""
    M = full.grid.size
    J = conjugation_embedding(alg, M)
    AJ = full.matrix @ J
    half = 4 * M
    # inside range(J) the second half equals B K applied to the first half
    leak = AJ[half:] - J[half:] @ AJ[:half]
    return float(np.linalg.norm(leak) / np.linalg.norm(AJ))


def mixing_coefficient(a: complex, b: complex, q, r) -> np.ndarray:
    """conj(a) b (conj(q) - r): coefficient of the e^{2 i omega t} term (up to the
    pointwise factor phi^* beta phi) in the linearized density."""
    return np.conj(a) * b * (np.conj(np.asarray(q)) - np.asarray(r))


def frequency_mixing_amplitude(profile: SolitonProfile, alg: DiracAlgebra, a: float, b: float,
                               p, q, r, s, x, samples: int = 8) -> float:
    """Largest e^{+-2 i omega t} Fourier amplitude of 2 Re(theta^* beta delta) over the points ``x``.

    Evaluated by sampling one period of the ansatz in time; independent of the
    algebra that leads to :func:`mixing_coefficient`.
    """
    omega = profile.omega
    phi = build_phi(profile, [1.0], x, alg)
    chi = build_chi(profile, [1.0], x, alg)
    p, q, r, s = (np.asarray(z, dtype=complex) for z in (p, q, r, s))
    ts = np.arange(samples) * (np.pi / omega) / samples
    vals = []
    for t in ts:
        em, ep = np.exp(-1j * omega * t), np.exp(1j * omega * t)
        theta = a * phi * em + b * chi * ep
        delta = a * (p * phi + q * chi) * em + b * (r * phi + s * chi) * ep
        vals.append(2.0 * np.einsum("ap,ab,bp->p", theta.conj(), alg.beta, delta).real)
    coef = np.fft.fft(np.array(vals), axis=0) / samples
    return float(np.max(np.abs(coef[1])))


# ---------------------------------------------------------------------------
# spectra


@dataclass(frozen=True)
class SpectrumConfig:
    """``method`` is ``"dense"`` (all eigenvalues) or ``"shift-invert"`` (``count`` eigenvalues
    nearest ``target``).  Tolerances left as None are scaled from the grid:
    zero-mode and instability thresholds 10 h^2 (m - omega), two-omega window 50 h^2."""

    method: str = "dense"
    target: complex | None = None
    count: int = 12
    vectors: bool = True
    pr_threshold: float = 0.3
    zero_tol: float | None = None
    tol_2w: float | None = None
    threshold: float | None = None
    max_restarts: int = 3


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    classes: list[str]
    residuals: np.ndarray
    participation: np.ndarray
    tolerances: dict
    vectors: np.ndarray | None = field(default=None, repr=False)
    omega: float = 0.0
    frame: str = "rotating"

    def count(self, cls: str) -> int:
        return sum(c == cls for c in self.classes)

    def summary(self) -> dict:
        lam = self.eigenvalues
        two = 2j * self.omega
        return {
            "size": int(lam.size),
            "counts": {c: self.count(c) for c in (ZERO_MODE, TWO_OMEGA, DISCRETE, ESSENTIAL, UNSTABLE)},
            "min_distance_plus_2omega": float(np.min(np.abs(lam - two))) if lam.size else None,
            "min_distance_minus_2omega": float(np.min(np.abs(lam + two))) if lam.size else None,
            "max_real_part": float(np.max(lam.real)) if lam.size else None,
            "tolerances": dict(self.tolerances),
        }


def participation_ratio(op: LinearizedOperator, vec: np.ndarray) -> float:
    """(sum rho_i^2)^2 / (M sum rho_i^4) for the pointwise density of the mode; about 2/3
    for a standing wave across the box and small for a localized mode."""
    rho = op.to_rho(vec)
    M = op.grid.size
    dens = np.sum(np.abs(rho.reshape(-1, M)) ** 2, axis=0)
    s2 = np.sum(dens**2)
    return float(np.sum(dens) ** 2 / (M * s2)) if s2 > 0 else 0.0


def _tolerances(op: LinearizedOperator, cfg: SpectrumConfig) -> dict:
    h2 = op.h**2
    return {
        "zero_tol": cfg.zero_tol if cfg.zero_tol is not None else 10.0 * h2 * op.scale,
        "tol_2w": cfg.tol_2w if cfg.tol_2w is not None else 50.0 * h2,
        "threshold": cfg.threshold if cfg.threshold is not None else 10.0 * h2 * op.scale,
        "pr_threshold": cfg.pr_threshold,
    }


def compute_spectrum(op: LinearizedOperator, cfg: SpectrumConfig | None = None) -> Spectrum:
    cfg = cfg or SpectrumConfig()
    A = op.matrix
    if cfg.method == "dense":
        if cfg.vectors:
            lam, V = scipy.linalg.eig(A, check_finite=False)
        else:
            lam, V = scipy.linalg.eigvals(A, check_finite=False), None
    elif cfg.method == "shift-invert":
        if cfg.target is None:
            raise ConfigurationError("shift-invert needs a target")
        log = []
        k = min(cfg.count, A.shape[0] - 2)
        for attempt in range(cfg.max_restarts):
            try:
                # complex arithmetic: a real matrix with a complex shift would also return the
                # eigenvalues nearest conj(target)
                lam, V = spla.eigs(sp.csc_matrix(A, dtype=complex), k=k, sigma=complex(cfg.target), which="LM",
                                   ncv=min(A.shape[0] - 1, max(4 * k, 40) * (attempt + 1)), tol=1e-13)
                break
            except spla.ArpackNoConvergence as exc:
                log.append(f"attempt {attempt}: {len(exc.eigenvalues)} of {k} converged")
        else:
            raise NumericalError("shift-invert eigensolver did not converge", log)
    else:
        raise ConfigurationError(f"unknown eigensolver method {cfg.method!r}")
    tol = _tolerances(op, cfg)
    if V is None:
        res = np.full(lam.size, np.nan)
        pr = np.full(lam.size, np.nan)
    else:
        V = V / np.linalg.norm(V, axis=0)
        res = np.linalg.norm(A @ V - V * lam, axis=0)
        pr = np.array([participation_ratio(op, V[:, j]) for j in range(V.shape[1])])
    classes = classify(lam, pr, op.omega, tol)
    return Spectrum(lam, classes, res, pr, tol, V if cfg.vectors else None, op.omega, op.frame)


def classify(lam: np.ndarray, pr: np.ndarray, omega: float, tol: dict) -> list[str]:
    """Tag eigenvalues.  Order of precedence: unstable, zero-mode, two-omega, band, discrete.

    Delocalized modes (participation above ``pr_threshold``) are band modes; among
    localized ones, the nearest eigenvalue to each of +-2 i omega within ``tol_2w`` is
    tagged two-omega, together with any localized eigenvalue in the same cluster.
    """
    out = []
    localized = ~(pr > tol["pr_threshold"])  # NaN participation (no vectors) counts as localized
    two_idx = set()
    for sign in (1, -1):
        d = np.abs(lam - sign * 2j * omega)
        cand = np.where(localized & (d < tol["tol_2w"]))[0]
        if cand.size:
            best = d[cand].min()
            radius = max(100.0 * best, 1e-8)
            two_idx.update(int(j) for j in cand if d[j] <= radius)
    for j, z in enumerate(lam):
        if z.real > tol["threshold"]:
            out.append(UNSTABLE)
        elif localized[j] and abs(z) < tol["zero_tol"]:
            out.append(ZERO_MODE)
        elif j in two_idx:
            out.append(TWO_OMEGA)
        elif not localized[j]:
            out.append(ESSENTIAL)
        else:
            out.append(DISCRETE)
    return out


def chi_mode(op: LinearizedOperator) -> np.ndarray:
    """Realified-frame complex vector of the solution chi e^{2 i omega t}: (chi, -i chi)."""
    chi = op.chi.ravel()
    return np.concatenate([chi, -1j * chi])


def locate_two_omega(spec: Spectrum, op: LinearizedOperator, tol: float | None = None) -> dict:
    """Eigenvalues nearest +-2 i omega and the overlap of the +2 i omega eigenvector
    with the discretized chi mode."""
    omega = op.omega
    tol = spec.tolerances["tol_2w"] if tol is None else tol
    lam = spec.eigenvalues
    rec = {"omega": omega, "tol": tol, "embedded": bool(2.0 * omega > op.m - omega)}
    for name, sign in (("plus", 1), ("minus", -1)):
        target = sign * 2j * omega
        d = np.abs(lam - target)
        j = int(np.argmin(d))
        rec[f"{name}_eigenvalue"] = complex(lam[j])
        rec[f"{name}_distance"] = float(d[j])
        rec[f"{name}_index"] = j
        loc = [i for i, c in enumerate(spec.classes) if c == TWO_OMEGA and abs(lam[i] - target) < tol]
        rec[f"{name}_multiplicity"] = _geometric_multiplicity(spec, loc)
    overlap = float("nan")
    if spec.vectors is not None and op.chi is not None:
        ref = chi_mode(op)
        vec = op.to_rho(spec.vectors[:, rec["plus_index"]])
        overlap = float(abs(np.vdot(ref, vec)) / (np.linalg.norm(ref) * np.linalg.norm(vec)))
        if op.frame == "bifrequency":
            ref_pq = np.linalg.lstsq(op.basis.toarray(), ref, rcond=None)[0]
            rec["pq_reference_norm"] = float(np.linalg.norm(ref_pq))
    rec["overlap"] = overlap
    rec["detected"] = bool(rec["plus_distance"] < tol and rec["minus_distance"] < tol and overlap > 0.999)
    return rec


def _geometric_multiplicity(spec: Spectrum, idx: list[int]) -> int:
    if not idx:
        return 0
    if spec.vectors is None:
        return len(idx)
    s = np.linalg.svd(spec.vectors[:, idx], compute_uv=False)
    return int(np.sum(s > 1e-6 * s[0]))


@dataclass
class UnstableMode:
    eigenvalue: complex
    vector: np.ndarray | None = field(repr=False)
    confirmed: bool | None = None
    fitted_rate: float | None = None


def detect_instability(spec: Spectrum, threshold: float | None = None, validator=None) -> list[UnstableMode]:
    """Eigenvalues with Re lambda > threshold, strongest first.

    ``validator(mode) -> (confirmed, rate)`` cross-checks each candidate, typically by
    a nonlinear evolution (see :func:`solerlab.evolution.perturbation_growth`).
    """
    thr = spec.tolerances["threshold"] if threshold is None else threshold
    idx = [j for j in np.argsort(-spec.eigenvalues.real) if spec.eigenvalues[j].real > thr]
    modes = []
    for j in idx:
        vec = spec.vectors[:, j] if spec.vectors is not None else None
        mode = UnstableMode(complex(spec.eigenvalues[j]), vec)
        if validator is not None:
            mode.confirmed, mode.fitted_rate = validator(mode)
        modes.append(mode)
    return modes


def kernel_residuals(op: LinearizedOperator) -> dict:
    """|A y|/|y| for the U(1) tangent i phi and the translation tangent d_x phi."""
    if op.frame != "rotating":
        raise ConfigurationError("kernel residuals are defined in the rotating frame")
    x = op.grid.x
    h = 1e-4
    prof = op.profile
    alg_phi = op.phi
    dphi = (build_phi(prof, [1.0], x[:, None] + h) - build_phi(prof, [1.0], x[:, None] - h)) / (2 * h)
    out = {}
    for name, field_ in (("u1", 1j * alg_phi), ("translation", dphi)):
        y = realify_vector(field_)
        out[name] = float(np.linalg.norm(op.matrix @ y) / np.linalg.norm(y))
    return out


def bogoliubov_tangent(profile: SolitonProfile, alg: DiracAlgebra, s: float, grid: Grid, ds: float = 1e-5) -> np.ndarray:
    """Finite-difference derivative along s of cosh s phi e^{-i omega t} + sinh s chi e^{i omega t},
    in the (rho_-, rho_+) coordinates of :func:`assemble_bifrequency_full` (realified)."""
    from .waves import BiFrequencyParams

    a, b = math.cosh(s), math.sinh(s)
    if b == 0.0:
        raise DomainError("the tangent in these coordinates needs s > 0")
    t1 = math.pi / (2.0 * profile.omega)

    def theta(sv, t):
        return build_bifrequency(profile, BiFrequencyParams.from_ab(math.cosh(sv), math.sinh(sv), [1.0], [1.0]),
                                 t, grid.points, alg)

    X0 = (theta(s + ds, 0.0) - theta(s - ds, 0.0)) / (2 * ds)
    X1 = (theta(s + ds, t1) - theta(s - ds, t1)) / (2 * ds)
    # X(t) = minus e^{-i omega t} + plus e^{i omega t}; e^{-i omega t1} = -i
    minus = 0.5 * (X0 + 1j * X1)
    plus = 0.5 * (X0 - 1j * X1)
    return np.concatenate([realify_vector(minus / a), realify_vector(plus / b)])


def symmetry_mode_check(full: LinearizedOperator, alg: DiracAlgebra) -> dict:
    """Residual of the Bogoliubov-orbit tangent in the (rho_-, rho_+) system, and its
    distance from the no-mixing subspace (it is not inside: r = 0 = conj(q) but s != conj(p))."""
    s = math.asinh(full.b)
    y = bogoliubov_tangent(full.profile, alg, s, full.grid)
    res = float(np.linalg.norm(full.matrix @ y) / np.linalg.norm(y))
    M = full.grid.size
    J = conjugation_embedding(alg, M)
    half = 4 * M
    off = y[half:] - J[half:] @ y[:half]
    return {"tangent_residual": res, "subspace_distance": float(np.linalg.norm(off) / np.linalg.norm(y))}


def matched_distance(lam1: np.ndarray, lam2: np.ndarray) -> float:
    """Largest distance of the optimal one-to-one matching between two eigenvalue lists."""
    if lam1.size != lam2.size:
        raise DomainError("spectra of different sizes")
    cost = np.abs(lam1[:, None] - lam2[None, :])
    i, j = linear_sum_assignment(cost)
    return float(cost[i, j].max())


def spectral_symmetry_defect(lam: np.ndarray) -> dict:
    """Matched distance of the spectrum to its images under lambda -> conj(lambda) and -lambda."""
    return {"conjugation": matched_distance(lam, lam.conj()), "reflection": matched_distance(lam, -lam)}


def reflection_symmetry(op: LinearizedOperator) -> sp.csr_matrix:
    """C = K o (x -> -x) on realified coordinates: diag(P, -P); the one-frequency matrix anticommutes with it."""
    M = op.grid.size
    flip = sp.csr_matrix(np.fliplr(np.eye(M)))
    P = sp.kron(sp.identity(2), flip)
    return sp.block_diag([P, -P]).tocsr()


# ---------------------------------------------------------------------------
# pointwise algebra for N = 4


def su_matrix(vec) -> np.ndarray:
    """Special unitary R with R e_1 = vec (a unit vector of length 1 or 2)."""
    vec = np.atleast_1d(np.asarray(vec, dtype=complex))
    if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
        raise DomainError("the first column must be a unit vector")
    if vec.size == 1:
        return vec.reshape(1, 1)
    if vec.size == 2:
        x1, x2 = vec
        return np.array([[x1, -np.conj(x2)], [x2, np.conj(x1)]])
    raise DomainError("only N/2 in {1, 2} is supported")


def _check_special_unitary(R, name):
    R = np.asarray(R, dtype=complex)
    k = R.shape[0]
    if np.linalg.norm(R.conj().T @ R - np.eye(k)) > 1e-12 or abs(np.linalg.det(R) - 1.0) > 1e-12:
        raise DomainError(f"{name} must be special unitary")
    return R


def _sigma_r(alg: DiracAlgebra, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    r = np.linalg.norm(x)
    if r == 0.0:
        return np.zeros((alg.half, alg.half), dtype=complex)
    return sigma_dot(alg, x[None, :])[0] / r


def basis_vectors(alg: DiracAlgebra, R, S, v: float, u: float, x):
    """phi_j = (v R e_j, i u sigma_r R e_j), chi_j = (-i u sigma_r^* S e_j, v S e_j), as columns."""
    sr = _sigma_r(alg, x)
    R, S = np.asarray(R, dtype=complex), np.asarray(S, dtype=complex)
    phis = np.vstack([v * R, 1j * u * sr @ R])
    chis = np.vstack([-1j * u * sr.conj().T @ S, v * S])
    return phis, chis


def partner_matrix(R) -> np.ndarray:
    """S = R eps with eps = [[0, 1], [-1, 0]]: then chi_j is, up to sign, the charge conjugate of phi_j."""
    return np.asarray(R, dtype=complex) @ np.array([[0.0, 1.0], [-1.0, 0.0]])


def verify_matrix_identities(alg: DiracAlgebra, R, S, v: float, u: float, x) -> dict:
    """Violations of the pointwise identities between phi_j^* K chi_k and chi_j^* K phi_k
    (K = 1, beta, -i beta alpha^i), all j, k, plus the SU(2) entry identities for
    M = R^* sigma_i^* S.

    ``*_offdiagonal`` entries are the j != k part of the cross identities; the
    ``unitary_det_property`` entry checks M_12 = conj(M_21).
    """
    if alg.N != 4:
        raise ConfigurationError("the matrix-element identities are stated for N = 4")
    R = _check_special_unitary(R, "R")
    S = _check_special_unitary(S, "S")
    if v == 0:
        raise DomainError("v must be nonzero")
    P, C = basis_vectors(alg, R, S, v, u, x)
    beta = alg.beta
    form = lambda a, M, b: a.conj().T @ M @ b  # noqa: E731
    off = ~np.eye(2, dtype=bool)
    I = np.eye(4)
    cross = form(P, I, C) - form(C, I, P).conj()
    rep = {
        "phi_phi_vs_chi_chi": np.abs(form(P, I, P) - form(C, I, C).conj()).max(),
        "phi_chi_vs_chi_phi": np.abs(cross).max(),
        "phi_chi_vs_chi_phi_diagonal": np.abs(np.diag(cross)).max(),
        "phi_beta_phi_vs_chi_beta_chi": np.abs(form(P, beta, P) + form(C, beta, C).conj()).max(),
        "phi_beta_chi": np.abs(form(P, beta, C)).max(),
        "chi_beta_phi": np.abs(form(C, beta, P)).max(),
    }
    ba_pp = ba_pc = ba_diag = 0.0
    for i in range(alg.n):
        K = -1j * beta @ alg.alpha[i]
        ba_pp = max(ba_pp, np.abs(form(P, K, P) - form(C, K, C).conj()).max())
        d = form(P, K, C) - form(C, K, P).conj()
        ba_pc = max(ba_pc, np.abs(d).max())
        ba_diag = max(ba_diag, np.abs(np.diag(d)).max())
    rep["beta_alpha_phi_phi"] = ba_pp
    rep["beta_alpha_phi_chi"] = ba_pc
    rep["beta_alpha_phi_chi_diagonal"] = ba_diag
    su2 = det_prop = 0.0
    for i in range(alg.n):
        Mx = R.conj().T @ alg.sigma[i].conj().T @ S
        Nx = S.conj().T @ alg.sigma[i] @ R
        su2 = max(su2, abs(np.conj(Mx[0, 1]) - Nx[0, 1]), abs(np.conj(Mx[1, 0]) - Nx[1, 0]))
        det_prop = max(det_prop, abs(Mx[0, 1] - np.conj(Mx[1, 0])))
    rep["su2_identities"] = su2
    rep["unitary_det_property"] = det_prop
    return {k: float(val) for k, val in rep.items()}


def basis_determinant(v: float, u: float, x, alg: DiracAlgebra, R=None, S=None) -> float:
    """det[Phi_1 .. X_{N/2}] with Phi_j = phi_j/v, X_j = chi_j/v, through the Schur complement
    det(I - (u/v)^2 sigma_r^* sigma_r) of the block form."""
    if v == 0:
        raise DomainError("v must be nonzero")
    k = alg.half
    R = np.eye(k) if R is None else np.asarray(R, dtype=complex)
    S = np.eye(k) if S is None else np.asarray(S, dtype=complex)
    sr = _sigma_r(alg, x)
    c = u / v
    # blocks [[R, -i c sr^* S], [i c sr R, S]]; det = det(R) det(S - (i c sr R) R^{-1} (-i c sr^* S))
    schur = S - (c * c) * sr @ sr.conj().T @ S
    val = np.linalg.det(R) * np.linalg.det(schur)
    return float(val.real)


def basis_matrix(v: float, u: float, x, alg: DiracAlgebra, R=None, S=None) -> np.ndarray:
    k = alg.half
    R = np.eye(k) if R is None else R
    S = np.eye(k) if S is None else S
    P, C = basis_vectors(alg, R, S, v, u, x)
    return np.hstack([P, C]) / v


@dataclass
class Decomposition:
    P: np.ndarray = field(repr=False)
    Q: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)
    iterations: int
    reconstruction_error: float
    history: list = field(default_factory=list, repr=False)


def pointwise_basis(profile: SolitonProfile, alg: DiracAlgebra, points, xi=None, eta=None) -> np.ndarray:
    """(P, N, N) array whose columns at each point are Phi_1..Phi_{N/2}, X_1..X_{N/2}."""
    k = alg.half
    xi = np.eye(k)[0] if xi is None else xi
    eta = np.eye(k)[0] if eta is None else eta
    R, S = su_matrix(xi), su_matrix(eta)
    pts = np.asarray(points, dtype=float).reshape(-1, alg.n)
    r = np.linalg.norm(pts, axis=1)
    v, u = profile.evaluate(r)
    if np.any(v <= 0):
        raise DomainError("v must be positive where the basis is built")
    Sd = sigma_dot(alg, pts)
    safe = np.where(r > 0, r, 1.0)
    sr = Sd / safe[:, None, None]
    sr[r == 0] = 0.0
    c = (u / v)[:, None, None]
    top = np.concatenate([np.broadcast_to(R, sr.shape), -1j * c * np.conj(np.swapaxes(sr, 1, 2)) @ S], axis=2)
    bottom = np.concatenate([1j * c * sr @ R, np.broadcast_to(S, sr.shape)], axis=2)
    return np.concatenate([top, bottom], axis=1)


def decompose_perturbation(a: complex, b: complex, rho: SpinorField, profile: SolitonProfile,
                           alg: DiracAlgebra | None = None, xi=None, eta=None,
                           tol: float = 1e-12, max_iter: int = 10000) -> Decomposition:
    """Scalar fields (P_j, Q_j) with a sum(P Phi + Q X) + b sum(conj(Q) Phi + conj(P) X) = rho.

    First rho = sum(f Phi + g X) pointwise, then the fixed point of
    (P, Q) -> ((f - b conj(Q))/a, (g - b conj(P))/a), a contraction since |b/a| < 1.
    """
    from .clifford import build_algebra

    a, b = complex(a), complex(b)
    if a == 0 or abs(b / a) >= 1.0:
        raise DomainError(f"|b/a| = {abs(b / a) if a else math.inf} must be below 1 for the contraction")
    alg = alg or build_algebra(profile.n, rho.N)
    k = alg.half
    E = pointwise_basis(profile, alg, rho.grid.points, xi, eta)
    coef = np.linalg.solve(E, rho.data.T[:, :, None])[:, :, 0].T  # (N, P)
    f, g = coef[:k], coef[k:]
    w = rho.grid.weights
    l2 = lambda z: math.sqrt(float(np.sum(w * np.sum(np.abs(z) ** 2, axis=0))))  # noqa: E731
    P, Q = f / a, g / a
    hist = []
    it = 0
    scale = max(l2(f) + l2(g), 1e-300)
    while it < max_iter:
        it += 1
        Pn = (f - b * np.conj(Q)) / a
        Qn = (g - b * np.conj(P)) / a
        step = (l2(Pn - P) + l2(Qn - Q)) / scale
        P, Q = Pn, Qn
        hist.append(step)
        if step < tol:
            break
    else:
        raise NumericalError("the contraction did not reach the requested tolerance", hist)
    lhs_coef = np.concatenate([a * P + b * np.conj(Q), a * Q + b * np.conj(P)])
    lhs = np.einsum("pab,bp->ap", E, lhs_coef)
    err = l2(lhs - rho.data) / max(l2(rho.data), 1e-300)
    return Decomposition(P, Q, f, g, it, err, hist)
