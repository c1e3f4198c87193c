"""Dirac matrices in block form, the radial matrix and the charge-conjugation matrix B.

Matrices follow the block convention

    alpha^j = [[0, sigma_j^*], [sigma_j, 0]],    beta = diag(1_{N/2}, -1_{N/2}),

with sigma_j the (N/2)x(N/2) analogue Pauli matrices.  Antilinear maps such as
B K (matrix B composed with complex conjugation K) are never written as a single
complex matrix; they are carried around as :class:`Semilinear` values, i.e. a
matrix together with a flag telling whether the input is conjugated first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError, UnsupportedSymmetryError

SUPPORTED_PAIRS = ((1, 2), (2, 2), (3, 4), (4, 4))

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Semilinear:
    """The map ``x -> matrix @ (conj(x) if conjugate else x)``.

    Composition keeps track of the conjugation: ``(A K) o (C K) = A conj(C)``.
    Sums are only defined between maps of the same type (both linear or both
    antilinear), which is exactly what anticommutators of such maps need.
    """

    matrix: np.ndarray
    conjugate: bool = False

    def __call__(self, psi):
        psi = np.asarray(psi)
        return np.tensordot(self.matrix, psi.conj() if self.conjugate else psi, axes=(1, 0))

    def __matmul__(self, other: "Semilinear") -> "Semilinear":
        inner = other.matrix.conj() if self.conjugate else other.matrix
        return Semilinear(self.matrix @ inner, self.conjugate != other.conjugate)

    def __add__(self, other: "Semilinear") -> "Semilinear":
        if self.conjugate != other.conjugate:
            raise TypeError("cannot add a linear and an antilinear map")
        return Semilinear(self.matrix + other.matrix, self.conjugate)

    def __neg__(self):
        return Semilinear(-self.matrix, self.conjugate)

    def __rmul__(self, c):
        # scalar on the left: c * (A K^e) = (c A) K^e
        return Semilinear(c * self.matrix, self.conjugate)

    def norm(self) -> float:
        """Spectral norm of the matrix part (the operator norm of the map)."""
        return float(np.linalg.norm(self.matrix, 2))


def linear(matrix) -> Semilinear:
    return Semilinear(np.asarray(matrix, dtype=complex), False)


def antilinear(matrix) -> Semilinear:
    return Semilinear(np.asarray(matrix, dtype=complex), True)


def anticommutator(x: Semilinear, y: Semilinear) -> Semilinear:
    return x @ y + y @ x


@dataclass(frozen=True)
class DiracAlgebra:
    n: int
    N: int
    sigma: tuple
    alpha: tuple
    beta: np.ndarray
    gamma5: np.ndarray | None = None
    B: np.ndarray | None = None
    label: str = field(default="", compare=False)

    @property
    def half(self) -> int:
        return self.N // 2

    @property
    def has_B(self) -> bool:
        return self.B is not None

    def gamma(self, j: int) -> np.ndarray:
        """gamma^j = beta alpha^j (1-based j)."""
        return self.beta @ self.alpha[j - 1]

    def BK(self) -> Semilinear:
        if self.B is None:
            raise UnsupportedSymmetryError(f"no conjugation matrix B for (n, N) = ({self.n}, {self.N})")
        return antilinear(self.B)

    def dirac_symbol(self, xi, m) -> np.ndarray:
        """alpha . xi + m beta."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        out = m * self.beta.copy()
        for j in range(self.n):
            out = out + xi[j] * self.alpha[j]
        return out

    def dirac_operator_real_direction(self, xi, m) -> Semilinear:
        """D_m with the gradient replaced by a real vector: -i alpha . xi + m beta.

        K commutes with real derivatives, so the relation {B K, D_m} = 0 is
        equivalent to {B K, -i alpha . xi + m beta} = 0 for all real xi, m.
        """
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        mat = m * self.beta.astype(complex)
        for j in range(self.n):
            mat = mat - 1j * xi[j] * self.alpha[j]
        return linear(mat)

    def alpha4_pseudoscalar(self) -> np.ndarray:
        """-i beta gamma^5, the matrix of the pseudoscalar coupling (N = 4 only)."""
        if self.gamma5 is None:
            raise ConfigurationError("gamma5 is only defined for N = 4")
        return -1j * self.beta @ self.gamma5


def _assemble(n, N, sigma, B, label):
    h = N // 2
    Z = np.zeros((h, h), dtype=complex)
    Id = np.eye(h, dtype=complex)
    alpha = tuple(_frozen(np.block([[Z, s.conj().T], [s, Z]])) for s in sigma)
    beta = _frozen(np.block([[Id, Z], [Z, -Id]]))
    gamma5 = _frozen(np.block([[Z, Id], [Id, Z]])) if N == 4 else None
    return DiracAlgebra(
        n=n,
        N=N,
        sigma=tuple(_frozen(s) for s in sigma),
        alpha=alpha,
        beta=beta,
        gamma5=gamma5,
        B=None if B is None else _frozen(B),
        label=label,
    )


def build_algebra(n: int, N: int) -> DiracAlgebra:
    """Dirac matrices for one of the supported (n, N) pairs.

    (1,2), (2,2): sigma_j are the 1x1 values 1 and i, B = Pauli sigma_1.
    (3,4): sigma_j Pauli, B = -i gamma^2.
    (4,4): Pauli plus sigma_4 = i 1_2; no B exists.
    """
    if (n, N) not in SUPPORTED_PAIRS:
        raise ConfigurationError(
            f"unsupported (n, N) = ({n}, {N}); supported pairs are {list(SUPPORTED_PAIRS)}"
        )
    if N == 2:
        sigma = [np.array([[1.0 + 0j]]), np.array([[1j]])][:n]
        return _assemble(n, N, sigma, PAULI[0], f"n={n},N=2")
    sigma = list(PAULI)
    if n == 4:
        sigma.append(1j * np.eye(2, dtype=complex))
        return _assemble(n, N, sigma, None, "n=4,N=4")
    alg = _assemble(n, N, sigma, None, "n=3,N=4")
    B = -1j * alg.gamma(2)
    return _assemble(n, N, sigma, B, "n=3,N=4")


def with_B(alg: DiracAlgebra, B) -> DiracAlgebra:
    """Copy of ``alg`` carrying a different conjugation matrix (used for fault injection)."""
    return DiracAlgebra(alg.n, alg.N, alg.sigma, alg.alpha, alg.beta, alg.gamma5,
                        None if B is None else _frozen(B), alg.label)


def sigma_radial(alg: DiracAlgebra, x) -> np.ndarray:
    """(x . sigma)/|x|.  Raises DomainError at the origin."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    r = np.linalg.norm(x)
    if r == 0.0:
        raise DomainError("sigma_r is undefined at x = 0")
    out = np.zeros((alg.half, alg.half), dtype=complex)
    for j in range(alg.n):
        out += x[j] * alg.sigma[j]
    return out / r


def sigma_dot(alg: DiracAlgebra, x) -> np.ndarray:
    """x . sigma for a batch of points; ``x`` has shape (P, n), result (P, N/2, N/2)."""
    x = np.asarray(x, dtype=float).reshape(-1, alg.n)
    return np.einsum("pj,jab->pab", x, np.array(alg.sigma))


def conjugation_constraint_space(alg: DiracAlgebra, tol: float = 1e-10) -> np.ndarray:
    """Real basis of all B solving B conj(alpha^j) = alpha^j B and B beta = -beta B.

    These two linear conditions are {B K, D_m} = 0 written out.  The result has
    shape (d, N, N); d = 0 means no conjugation symmetry of this type exists.
    """
    N = alg.N
    rows = []
    basis = []
    for idx in range(2 * N * N):
        E = np.zeros(N * N, dtype=complex)
        E[idx % (N * N)] = 1.0 if idx < N * N else 1j
        basis.append(E.reshape(N, N))
    for E in basis:
        parts = [E @ a.conj() - a @ E for a in alg.alpha]
        parts.append(E @ alg.beta.conj() + alg.beta @ E)
        vec = np.concatenate([p.ravel() for p in parts])
        rows.append(np.concatenate([vec.real, vec.imag]))
    A = np.array(rows).T
    _, s, vh = np.linalg.svd(A)
    null = vh[np.sum(s > tol):]
    return np.array([sum(c * E for c, E in zip(vec, basis)) for vec in null])


def verify_algebra(alg: DiracAlgebra, trials: int = 100, rng=None) -> dict:
    """Largest violation of every algebraic invariant, over ``trials`` random samples.

    Keys ending in ``_defect`` should vanish to round-off.  For (4,4) the report
    also contains ``anticommutator_alpha4_norm``: the norm of
    {-i alpha^4, i alpha^2 beta K}, which equals 2 and obstructs B = -i gamma^2.
    Since -i alpha^4 = -beta gamma^5 the anticommutator is -2i alpha^2 gamma^5 K.
    """
    rng = np.random.default_rng(rng)
    h, N = alg.half, alg.N
    I_h, I_N = np.eye(h), np.eye(N)
    rep = {"n": alg.n, "N": N, "trials": int(trials)}

    sig = 0.0
    alp = 0.0
    for j in range(alg.n):
        for k in range(alg.n):
            sj, sk = alg.sigma[j], alg.sigma[k]
            d = 2.0 * (j == k)
            sig = max(sig,
                      np.abs(sj.conj().T @ sk + sk.conj().T @ sj - d * I_h).max(),
                      np.abs(sj @ sk.conj().T + sk @ sj.conj().T - d * I_h).max())
            aj, ak = alg.alpha[j], alg.alpha[k]
            alp = max(alp, np.abs(aj @ ak + ak @ aj - d * I_N).max())
    rep["sigma_anticommutator_defect"] = float(sig)
    rep["alpha_anticommutator_defect"] = float(alp)
    rep["alpha_beta_anticommutator_defect"] = float(
        max(np.abs(a @ alg.beta + alg.beta @ a).max() for a in alg.alpha))
    rep["beta_square_defect"] = float(np.abs(alg.beta @ alg.beta - I_N).max())
    rep["self_adjoint_defect"] = float(
        max(np.abs(a - a.conj().T).max() for a in (*alg.alpha, alg.beta)))

    sym = 0.0
    rad = 0.0
    bsuch = 0.0
    for _ in range(trials):
        xi = rng.standard_normal(alg.n)
        m = rng.uniform(0.1, 3.0)
        S = alg.dirac_symbol(xi, m)
        sym = max(sym, np.abs(S @ S - (xi @ xi + m * m) * I_N).max())
        sr = sigma_radial(alg, xi)
        rad = max(rad, np.abs(sr @ sr.conj().T - I_h).max(), np.abs(sr.conj().T @ sr - I_h).max())
        if alg.has_B:
            D = alg.dirac_operator_real_direction(xi, m)
            bsuch = max(bsuch, np.abs(anticommutator(alg.BK(), D).matrix).max())
    rep["symbol_square_defect"] = float(sym)
    rep["sigma_radial_unitarity_defect"] = float(rad)

    rep["has_B"] = alg.has_B
    if alg.has_B:
        B = alg.B
        BK = alg.BK()
        rep["b_anticommutes_dirac_defect"] = float(bsuch)
        # B K = K B^*  <=>  B = B^t
        rep["bk_equals_kbstar_defect"] = float(np.abs(B - B.T).max())
        rep["b_unitary_defect"] = float(np.abs(B.conj().T @ B - I_N).max())
        rep["bk_square_defect"] = float(np.abs((BK @ BK).matrix - I_N).max())
        bb = alg.beta @ B
        rep["beta_b_antisymmetry_defect"] = float(np.abs(bb.T + bb).max())
    else:
        rep["conjugation_space_dimension"] = int(len(conjugation_constraint_space(alg)))

    if alg.n == 4:
        a2, a4 = alg.alpha[1], alg.alpha[3]
        anti = anticommutator(linear(-1j * a4), antilinear(1j * a2 @ alg.beta))
        rep["anticommutator_alpha4_norm"] = anti.norm()
        rep["anticommutator_alpha4_formula_defect"] = float(
            np.abs(anti.matrix + 2j * a2 @ alg.gamma5).max())
        rep["alpha4_pseudoscalar_defect"] = float(np.abs(a4 - alg.alpha4_pseudoscalar()).max())
    return rep


def max_defect(report: dict) -> float:
    return max((v for k, v in report.items() if k.endswith("_defect")), default=0.0)
