"""Randomized identity suites run by ``solerlab verify``.

Each suite takes a numpy Generator and a trial count and returns a record with
``max_violation``, ``tolerance`` and ``passed``; extra keys break the violation down.
Suites are pure functions of (seed, trials), so the report is reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clifford import SUPPORTED_PAIRS, DiracAlgebra, build_algebra, verify_algebra, with_B
from .fields import Grid, SpinorField
from .linearization import (basis_determinant, basis_matrix, decompose_perturbation, partner_matrix,
                            su_matrix, verify_matrix_identities)
from .profiles import Nonlinearity, solve_soler_profile
from .symmetry import (BogoliubovElement, apply_bogoliubov, compute_charges, conjugate_field,
                       predict_transformed_charges, pseudoscalar_noninvariance)

SUITES = ("clifford", "b-such", "su11", "charges", "matrix-elements", "lin-independent", "r-s", "pseudoscalar")
FAULTS = ("gamma2",)


@dataclass(frozen=True)
class SuiteOptions:
    trials: int = 1000
    fault: str | None = None


def _record(violations: dict, tol: float, **extra) -> dict:
    worst = max(violations.values(), default=0.0)
    return {"max_violation": float(worst), "tolerance": tol, "passed": bool(worst < tol),
            "violations": {k: float(v) for k, v in violations.items()}, **extra}


def corrupt_gamma2(alg: DiracAlgebra) -> DiracAlgebra:
    """Fault hook: flip the sign of one entry of gamma^2 and rebuild B = -i gamma^2 from it."""
    g2 = np.array(alg.gamma(2))
    i, j = np.argwhere(np.abs(g2) > 0)[0]
    g2[i, j] = -g2[i, j]
    return with_B(alg, -1j * g2)


def _algebras(fault: str | None) -> list[DiracAlgebra]:
    out = []
    for n, N in SUPPORTED_PAIRS:
        alg = build_algebra(n, N)
        if fault == "gamma2" and (n, N) == (3, 4):
            alg = corrupt_gamma2(alg)
        out.append(alg)
    return out


def _bk_algebras(fault):
    return [a for a in _algebras(fault) if a.has_B]


def _random_g(rng, size: int, smax: float = 2.0):
    s = rng.uniform(0.0, smax, size)
    ta, tb = rng.uniform(0.0, 2 * math.pi, (2, size))
    return np.cosh(s) * np.exp(1j * ta), np.sinh(s) * np.exp(1j * tb)


def _spinors(rng, N: int, size: int) -> np.ndarray:
    return rng.standard_normal((N, size)) + 1j * rng.standard_normal((N, size))


def suite_clifford(rng, opts: SuiteOptions) -> dict:
    viol = {}
    extra = {}
    for alg in _algebras(opts.fault):
        rep = verify_algebra(alg, opts.trials, rng)
        for k, v in rep.items():
            if k.endswith("_defect") and not k.startswith(("b_", "bk_", "beta_b")):
                viol[f"{alg.label}:{k}"] = v
        if "anticommutator_alpha4_norm" in rep:
            viol[f"{alg.label}:anticommutator_alpha4_norm_minus_2"] = abs(rep["anticommutator_alpha4_norm"] - 2.0)
            extra["anticommutator_alpha4_norm"] = rep["anticommutator_alpha4_norm"]
    return _record(viol, 1e-13, **extra)


def suite_b_such(rng, opts: SuiteOptions) -> dict:
    viol = {}
    for alg in _bk_algebras(opts.fault):
        rep = verify_algebra(alg, opts.trials, rng)
        for k, v in rep.items():
            if k.startswith(("b_", "bk_", "beta_b")):
                viol[f"{alg.label}:{k}"] = v
    return _record(viol, 1e-13)


def suite_su11(rng, opts: SuiteOptions) -> dict:
    """Group law, action homomorphism and invariance of psi^* beta psi, vectorized over trials."""
    T = opts.trials
    viol = {}
    for alg in _bk_algebras(opts.fault):
        a1, b1 = _random_g(rng, T)
        a2, b2 = _random_g(rng, T)
        psi = _spinors(rng, alg.N, T)
        scale = (np.abs(a1) + np.abs(b1)) ** 2 * (np.abs(a2) + np.abs(b2)) ** 2 * np.sum(np.abs(psi) ** 2, axis=0)

        def act(a, b, x):
            return a * x + b * conjugate_field(alg, x)

        # (a1 + b1 BK)(a2 + b2 BK) = a1 a2 + b1 conj(b2) + (a1 b2 + b1 conj(a2)) BK
        a12 = a1 * a2 + b1 * np.conj(b2)
        b12 = a1 * b2 + b1 * np.conj(a2)
        hom = np.abs(act(a12, b12, psi) - act(a1, b1, act(a2, b2, psi))).max(axis=0)
        viol[f"{alg.label}:homomorphism"] = float(np.max(hom / np.sqrt(scale)))
        viol[f"{alg.label}:composed_determinant"] = float(np.max(np.abs(np.abs(a12) ** 2 - np.abs(b12) ** 2 - 1.0)
                                                                 / (np.abs(a12) ** 2 + np.abs(b12) ** 2)))
        gpsi = act(a1, b1, psi)
        beta = np.diag(alg.beta).real
        d0 = np.einsum("a,ap->p", beta, np.abs(psi) ** 2)
        d1 = np.einsum("a,ap->p", beta, np.abs(gpsi) ** 2)
        s1 = (np.abs(a1) + np.abs(b1)) ** 2 * np.sum(np.abs(psi) ** 2, axis=0)
        viol[f"{alg.label}:beta_density_invariance"] = float(np.max(np.abs(d1 - d0) / s1))
        # inverse through the element API on a subsample
        for j in range(min(T, 50)):
            g = BogoliubovElement(a1[j], b1[j])
            back = apply_bogoliubov(g.inverse(), alg, apply_bogoliubov(g, alg, psi[:, j]))
            viol[f"{alg.label}:inverse"] = max(viol.get(f"{alg.label}:inverse", 0.0),
                                               float(np.max(np.abs(back - psi[:, j])) / math.sqrt(s1[j])))
    return _record(viol, 1e-12)


def suite_charges(rng, opts: SuiteOptions, points: int = 8) -> dict:
    """compute_charges after apply_bogoliubov against predict_transformed_charges, and Q^2 - |Lambda|^2."""
    viol = {"charges_Q": 0.0, "charges_Lambda": 0.0, "invariant": 0.0}
    for alg in _bk_algebras(opts.fault):
        for _ in range(opts.trials):
            grid = Grid.scattered(rng.standard_normal((points, 1)), rng.uniform(0.1, 1.0, points))
            psi = _spinors(rng, alg.N, points)
            a, b = _random_g(rng, 1)
            g = BogoliubovElement(a[0], b[0])
            c0 = compute_charges(alg, psi, grid)
            c1 = compute_charges(alg, apply_bogoliubov(g, alg, psi), grid)
            pr = predict_transformed_charges(g, c0)
            s = c1.Q
            viol["charges_Q"] = max(viol["charges_Q"], abs(c1.Q - pr.Q) / s)
            viol["charges_Lambda"] = max(viol["charges_Lambda"], abs(c1.Lambda - pr.Lambda) / s)
            viol["invariant"] = max(viol["invariant"], abs(c1.invariant - c0.invariant) / s**2)
    return _record(viol, 1e-10)


def _unit(rng, k):
    z = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return z / np.linalg.norm(z)


def _sample_vux(rng, n):
    v = rng.uniform(0.2, 2.0)
    u = v * rng.uniform(-0.95, 0.95)
    x = rng.standard_normal(n)
    return v, u, x


def suite_matrix_elements(rng, opts: SuiteOptions) -> dict:
    """Pointwise identities for independent random R, S; the partner case S = R J is reported alongside."""
    viol = {}
    partner = {}
    for n in (3, 4):
        alg = build_algebra(n, 4)
        for _ in range(opts.trials):
            R, S = su_matrix(_unit(rng, 2)), su_matrix(_unit(rng, 2))
            v, u, x = _sample_vux(rng, n)
            for k, val in verify_matrix_identities(alg, R, S, v, u, x).items():
                key = f"{alg.label}:{k}"
                viol[key] = max(viol.get(key, 0.0), val)
            for k, val in verify_matrix_identities(alg, R, partner_matrix(R), v, u, x).items():
                key = f"{alg.label}:{k}"
                partner[key] = max(partner.get(key, 0.0), val)
    by_alg = {}
    for key, val in partner.items():
        label = key.split(":")[0]
        by_alg[label] = max(by_alg.get(label, 0.0), val)
    return _record(viol, 1e-13, partner_case_max_violation=by_alg, partner_case=partner)


def suite_lin_independent(rng, opts: SuiteOptions) -> dict:
    """Schur-complement determinant, dense determinant and (1 - u^2/v^2)^{N/2}, with |u| < v."""
    viol = {"closed_form_vs_dense": 0.0, "schur_vs_dense": 0.0}
    for n, N in ((1, 2), (2, 2), (3, 4), (4, 4)):
        alg = build_algebra(n, N)
        for _ in range(opts.trials):
            v, u, x = _sample_vux(rng, n)
            if alg.half == 1:
                R = S = np.eye(1)  # SU(1) is trivial
            else:
                R, S = su_matrix(_unit(rng, 2)), su_matrix(_unit(rng, 2))
            dense = np.linalg.det(basis_matrix(v, u, x, alg, R, S))
            closed = (1.0 - (u / v) ** 2) ** (N // 2)
            viol["closed_form_vs_dense"] = max(viol["closed_form_vs_dense"], abs(dense - closed))
            viol["schur_vs_dense"] = max(viol["schur_vs_dense"], abs(basis_determinant(v, u, x, alg, R, S) - dense))
    return _record(viol, 1e-14)


_RS_PROFILES: dict = {}


def _rs_profile(n: int):
    if n not in _RS_PROFILES:
        _RS_PROFILES[n] = solve_soler_profile(0.9, 1.0, n, Nonlinearity.power(1.0))
    return _RS_PROFILES[n]


def suite_r_s(rng, opts: SuiteOptions, cases: int | None = None) -> dict:
    """Decompose random rho and rebuild it, |b/a| up to 0.9, for (n, N) = (1, 2) and (3, 4)."""
    cases = cases if cases is not None else max(1, min(opts.trials, 6))
    viol = {}
    its = {}
    for n, N, grid in ((1, 2, Grid.dirichlet_line(8.0, 64)), (3, 4, Grid.box(6.0, 8, 3))):
        prof = _rs_profile(n)
        alg = build_algebra(n, N)
        ratios = np.concatenate([[0.0, 0.9], rng.uniform(0.0, 0.9, max(0, cases - 2))])
        for ratio in ratios:
            s = math.atanh(ratio)
            a, b = _random_g(rng, 1)
            a = math.cosh(s) * a[0] / abs(a[0])
            b = math.sinh(s) * np.exp(1j * rng.uniform(0, 2 * math.pi))
            rho = SpinorField(_spinors(rng, N, grid.size), grid)
            dec = decompose_perturbation(a, b, rho, prof, alg, _unit(rng, alg.half), _unit(rng, alg.half))
            key = f"{alg.label}"
            viol[key] = max(viol.get(key, 0.0), dec.reconstruction_error)
            its[key] = max(its.get(key, 0), dec.iterations)
    return _record(viol, 1e-10, max_iterations=its)


def suite_pseudoscalar(rng, opts: SuiteOptions) -> dict:
    """(g psi)^* alpha4 (g psi) against (|a|^2 + |b|^2) psi^* alpha4 psi, and antisymmetry of alpha4 gamma^2."""
    alg = build_algebra(3, 4)
    if opts.fault == "gamma2":
        alg = corrupt_gamma2(alg)
    worst = anti = 0.0
    invariant = True
    for _ in range(opts.trials):
        a, b = _random_g(rng, 1)
        rep = pseudoscalar_noninvariance(alg, BogoliubovElement(a[0], b[0]), _spinors(rng, 4, 1))
        worst = max(worst, rep["max_violation"])
        anti = max(anti, rep["antisymmetry_defect"])
        invariant = invariant and rep["invariant"]
    return _record({"rescaling": worst, "antisymmetry": anti}, 1e-12, density_invariant=bool(invariant))


_TABLE = {
    "clifford": suite_clifford,
    "b-such": suite_b_such,
    "su11": suite_su11,
    "charges": suite_charges,
    "matrix-elements": suite_matrix_elements,
    "lin-independent": suite_lin_independent,
    "r-s": suite_r_s,
    "pseudoscalar": suite_pseudoscalar,
}


def run_suite(name: str, seed: int, trials: int, fault: str | None = None) -> dict:
    """Run one suite with its own Generator derived from (seed, suite index)."""
    idx = SUITES.index(name)
    rng = np.random.default_rng([seed, idx])
    rec = _TABLE[name](rng, SuiteOptions(trials, fault))
    rec["trials"] = trials
    return rec
