"""Bogoliubov SU(1,1) action psi -> a psi + b B K psi and the charges Q, Lambda."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clifford import DiracAlgebra
from .errors import DomainError, UnsupportedSymmetryError
from .fields import Grid, SpinorField, line_derivative, pointwise_form


@dataclass(frozen=True)
class BogoliubovElement:
    """g = a + b B K with |a|^2 - |b|^2 = 1."""

    a: complex
    b: complex = 0.0

    def __post_init__(self):
        a, b = complex(self.a), complex(self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if abs(abs(a) ** 2 - abs(b) ** 2 - 1.0) > 1e-12:
            raise DomainError(f"|a|^2 - |b|^2 = {abs(a)**2 - abs(b)**2!r}, must equal 1")

    @classmethod
    def boost(cls, s: float, phase: float = 0.0) -> "BogoliubovElement":
        return cls(math.cosh(s), math.sinh(s) * np.exp(1j * phase))

    @classmethod
    def rotation(cls, theta: float) -> "BogoliubovElement":
        return cls(np.exp(1j * theta), 0.0)

    @classmethod
    def from_matrix(cls, g: np.ndarray) -> "BogoliubovElement":
        return cls(g[0, 0], g[0, 1])

    def inverse(self) -> "BogoliubovElement":
        return BogoliubovElement(self.a.conjugate(), -self.b)

    def __matmul__(self, other: "BogoliubovElement") -> "BogoliubovElement":
        # (a1 + b1 BK)(a2 + b2 BK) = a1 a2 + b1 conj(b2) + (a1 b2 + b1 conj(a2)) BK, using (BK)^2 = 1
        a = self.a * other.a + self.b * other.b.conjugate()
        b = self.a * other.b + self.b * other.a.conjugate()
        return BogoliubovElement(a, b)


@dataclass(frozen=True)
class Charges:
    Q: float
    Lambda: complex | None

    @property
    def has_lambda(self) -> bool:
        return self.Lambda is not None

    @property
    def Q_plus(self) -> float:
        return 0.5 * (self.Q + self.Lambda.real)

    @property
    def Q_minus(self) -> float:
        return 0.5 * (self.Q - self.Lambda.real)

    @property
    def invariant(self) -> float:
        """Q^2 - |Lambda|^2."""
        return self.Q**2 - abs(self.Lambda) ** 2


def su11_matrix(g: BogoliubovElement) -> np.ndarray:
    return np.array([[g.a, g.b], [g.b.conjugate(), g.a.conjugate()]])


def _require_B(alg: DiracAlgebra) -> np.ndarray:
    if alg.B is None:
        raise UnsupportedSymmetryError(
            f"no Bogoliubov symmetry for (n, N) = ({alg.n}, {alg.N}): matrix B does not exist")
    return alg.B


def conjugate_field(alg: DiracAlgebra, data: np.ndarray) -> np.ndarray:
    """B K psi for data of shape (N, ...)."""
    B = _require_B(alg)
    return np.tensordot(B, np.conj(data), axes=(1, 0))


def apply_bogoliubov(g: BogoliubovElement, alg: DiracAlgebra, psi):
    """a psi + b B conj(psi), pointwise.  Accepts a SpinorField or a raw (N, ...) array."""
    data = psi.data if isinstance(psi, SpinorField) else np.asarray(psi, dtype=complex)
    out = g.a * data + g.b * conjugate_field(alg, data)
    return SpinorField(out, psi.grid) if isinstance(psi, SpinorField) else out


def compute_charges(alg: DiracAlgebra, psi, grid: Grid | None = None) -> Charges:
    """Q = int psi^* psi and Lambda = int psi^* B K psi with the grid's quadrature weights.

    Lambda is None when the algebra has no B.
    """
    data = psi.data if isinstance(psi, SpinorField) else np.asarray(psi, dtype=complex)
    grid = grid if grid is not None else psi.grid
    w = grid.weights
    Q = float(np.sum(w * np.sum(np.abs(data) ** 2, axis=0)))
    if alg.B is None:
        return Charges(Q, None)
    # Lambda = int sum_jk B_jk conj(psi_j) conj(psi_k)
    Lam = complex(np.sum(w * np.einsum("jp,jk,kp->p", data.conj(), alg.B, data.conj())))
    return Charges(Q, Lam)


def predict_transformed_charges(g: BogoliubovElement, c: Charges) -> Charges:
    a, b = g.a, g.b
    Q = (abs(a) ** 2 + abs(b) ** 2) * c.Q + 2.0 * (a.conjugate() * b * c.Lambda).real
    Lam = a.conjugate() ** 2 * c.Lambda + 2.0 * a.conjugate() * b.conjugate() * c.Q \
        + b.conjugate() ** 2 * c.Lambda.conjugate()
    return Charges(float(Q), complex(Lam))


def null_defect(alg: DiracAlgebra, c: Charges, z: complex = 1.0) -> float:
    """(1/2) int |B K psi - z psi|^2 = Q - Re(conj(z) Lambda); equals 2 Q_- for z = 1.

    It is built from conserved charges, so a vanishing defect persists in time.
    """
    return float(c.Q - (np.conj(z) * c.Lambda).real)


def check_null_condition(alg: DiracAlgebra, psi, z: complex, grid: Grid | None = None) -> dict:
    """Report on the implication  B K psi = z psi  =>  psi^* beta psi = 0."""
    if abs(abs(z) - 1.0) > 1e-12:
        raise DomainError(f"|z| must be 1, got {abs(z)}")
    data = psi.data if isinstance(psi, SpinorField) else np.asarray(psi, dtype=complex)
    grid = grid if grid is not None else (psi.grid if isinstance(psi, SpinorField) else None)
    diff = conjugate_field(alg, data) - z * data
    pointwise_norm = np.sqrt(np.sum(np.abs(data) ** 2, axis=0))
    if grid is not None:
        w = grid.weights
        norm = float(np.sqrt(np.sum(w * pointwise_norm**2)))
        defect = float(np.sqrt(np.sum(w * np.sum(np.abs(diff) ** 2, axis=0))))
    else:
        norm = float(np.max(pointwise_norm))
        defect = float(np.max(np.sqrt(np.sum(np.abs(diff) ** 2, axis=0))))
    density = pointwise_form(alg.beta, data).real
    sup_density = float(np.max(np.abs(density)))
    premise = defect < 1e-10 * max(norm, 1e-300)
    conclusion = sup_density < 1e-9 * max(norm**2, float(np.max(pointwise_norm)) ** 2)
    rep = {
        "conjugation_defect": defect,
        "norm": norm,
        "sup_beta_density": sup_density,
        "premise": bool(premise),
        "implication_holds": bool((not premise) or conclusion),
    }
    if alg.N == 4:
        # Chadam-Glassey integrand |psi1 - conj(psi4)|^2 + |psi2 + conj(psi3)|^2
        cg = np.abs(data[0] - data[3].conj()) ** 2 + np.abs(data[1] + data[2].conj()) ** 2
        rep["chadam_glassey_sup"] = float(np.max(cg))
    return rep


def pseudoscalar_noninvariance(alg: DiracAlgebra, g: BogoliubovElement, psi) -> dict:
    """Compare (g psi)^* alpha4 (g psi) with (|a|^2 + |b|^2) psi^* alpha4 psi, alpha4 = -i beta gamma5.

    The cross terms vanish because alpha4 gamma^2 is antisymmetric, so the
    pseudoscalar density is rescaled rather than preserved.
    """
    if (alg.n, alg.N) != (3, 4):
        raise DomainError("the pseudoscalar check needs the (n, N) = (3, 4) algebra")
    data = psi.data if isinstance(psi, SpinorField) else np.asarray(psi, dtype=complex)
    A4 = alg.alpha4_pseudoscalar()
    factor = abs(g.a) ** 2 + abs(g.b) ** 2
    gpsi = apply_bogoliubov(g, alg, data)
    lhs = pointwise_form(A4, gpsi)
    rhs = factor * pointwise_form(A4, data)
    scale = max(1.0, float(np.max(np.abs(rhs))))
    M = A4 @ alg.gamma(2)
    return {
        "factor": float(factor),
        "max_violation": float(np.max(np.abs(lhs - rhs))) / scale,
        "antisymmetry_defect": float(np.max(np.abs(M.T + M))),
        "invariant": bool(np.max(np.abs(lhs - pointwise_form(A4, data))) < 1e-12 * scale),
    }


def beta_density(alg: DiracAlgebra, data: np.ndarray) -> np.ndarray:
    return pointwise_form(alg.beta, data).real


def hamiltonian_density(alg: DiracAlgebra, nl, m: float, psi: SpinorField) -> np.ndarray:
    """psi^* D_m psi - F(psi^* beta psi) on a line grid (n = 1)."""
    if psi.grid.n != 1 or alg.n != 1:
        raise DomainError("the discrete Hamiltonian density is implemented on line grids")
    data = psi.data
    dpsi = line_derivative(data, psi.grid)
    Dpsi = -1j * np.tensordot(alg.alpha[0], dpsi, axes=(1, 0)) + m * np.tensordot(alg.beta, data, axes=(1, 0))
    kinetic = np.sum(data.conj() * Dpsi, axis=0)
    return kinetic - nl.primitive(beta_density(alg, data))


def energy(alg: DiracAlgebra, nl, m: float, psi: SpinorField) -> complex:
    return complex(np.sum(psi.grid.weights * hamiltonian_density(alg, nl, m, psi)))
