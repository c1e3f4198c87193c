"""Radial profiles v(r), u(r) of solitary waves.

The profile system is

    omega v = u' + (n-1) u / r + (m - f) v,
    omega u = -v' - (m - f) u,          u(0) = 0,

with f = f(v^2 - u^2) for the Soler model and f = Phi, Phi = (-Delta + M^2)^{-1}(v^2 - u^2),
for the Dirac-Klein-Gordon system.

Ground states are found by shooting on v(0): bisection between an undershoot
(u turns negative while v is positive) and an overshoot (v crosses zero), followed by a
two-sided Newton polish that matches the forward solution to a decaying
modified-Bessel tail integrated backwards from r = R.  The polish is what makes
the far tail accurate; a pure forward shot loses it to the growing mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numba
import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import lfilter
from scipy.special import gamma as gamma_fn
from scipy.special import kve

from .errors import ConfigurationError, DomainError, IterationError, NoSolutionError, NumericalError

# ---------------------------------------------------------------------------
# nonlinearity


@dataclass(frozen=True)
class Nonlinearity:
    """Real scalar self-coupling f with f(0) = 0.

    ``power`` is f(tau) = |tau|^k.  ``tabulated`` interpolates linearly in the
    samples (tau_i, f_i) and is constant beyond the table ends.
    """

    kind: str
    k: float = 1.0
    tau: np.ndarray | None = field(default=None, repr=False)
    values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind == "power":
            if not self.k > 0:
                raise ConfigurationError(f"power nonlinearity needs k > 0, got {self.k}")
        elif self.kind == "tabulated":
            tau = np.asarray(self.tau, dtype=float)
            vals = np.asarray(self.values, dtype=float)
            if tau.ndim != 1 or tau.shape != vals.shape or tau.size < 2:
                raise ConfigurationError("tabulated nonlinearity needs matching 1D sample arrays")
            if np.any(np.diff(tau) <= 0):
                raise ConfigurationError("tabulated tau samples must be strictly increasing")
            if not tau[0] <= 0.0 <= tau[-1] or abs(np.interp(0.0, tau, vals)) > 1e-14:
                raise ConfigurationError("tabulated nonlinearity must satisfy f(0) = 0")
            object.__setattr__(self, "tau", tau)
            object.__setattr__(self, "values", vals)
        else:
            raise ConfigurationError(f"unknown nonlinearity kind {self.kind!r}")

    @classmethod
    def power(cls, k: float) -> "Nonlinearity":
        return cls("power", float(k))

    @classmethod
    def tabulated(cls, tau, values) -> "Nonlinearity":
        return cls("tabulated", 1.0, np.asarray(tau, float), np.asarray(values, float))

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.kind == "power":
            return np.abs(tau) ** self.k
        return np.interp(tau, self.tau, self.values)

    def derivative(self, tau):
        """f'(tau); for the power law f'(0) is set to 0 when k > 1 and to 1 when k = 1."""
        tau = np.asarray(tau, dtype=float)
        if self.kind == "power":
            k = self.k
            if k == 1.0:
                return np.where(tau == 0.0, 1.0, np.sign(tau))
            with np.errstate(divide="ignore", invalid="ignore"):
                out = k * np.abs(tau) ** (k - 1.0) * np.sign(tau)
            return np.where(tau == 0.0, 0.0, out)
        slopes = np.diff(self.values) / np.diff(self.tau)
        idx = np.clip(np.searchsorted(self.tau, tau, side="right") - 1, 0, slopes.size - 1)
        inside = (tau >= self.tau[0]) & (tau <= self.tau[-1])
        return np.where(inside, slopes[idx], 0.0)

    def primitive(self, tau):
        """F(tau) = int_0^tau f."""
        tau = np.asarray(tau, dtype=float)
        if self.kind == "power":
            return np.sign(tau) * np.abs(tau) ** (self.k + 1.0) / (self.k + 1.0)
        t, f = self.tau, self.values
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(t))])
        cum -= np.interp(0.0, t, cum)
        idx = np.clip(np.searchsorted(t, tau, side="right") - 1, 0, t.size - 2)
        ft = np.interp(tau, t, f)
        inner = cum[idx] + 0.5 * (f[idx] + ft) * (np.clip(tau, t[0], t[-1]) - t[idx])
        # constant extension beyond the table
        return inner + ft * (tau - np.clip(tau, t[0], t[-1]))

    def describe(self) -> dict:
        if self.kind == "power":
            return {"kind": "power", "k": self.k}
        return {"kind": "tabulated", "samples": int(self.tau.size)}


# ---------------------------------------------------------------------------
# configuration and results


@dataclass(frozen=True)
class SolverConfig:
    """Numerical settings for the profile solvers.

    R = None picks max(30, 12/kappa) with kappa = sqrt(m^2 - omega^2).
    ``bracket`` optionally fixes the (low, high) shooting bracket; otherwise it
    is found by a geometric scan from ``scan_start``.
    """

    h: float = 1e-4
    R: float | None = None
    bracket: tuple[float, float] | None = None
    scan_start: float = 1e-4
    scan_factor: float = 1.25
    scan_max: float = 1e4
    tol_shoot: float = 1e-9
    tol_match: float = 1e-13
    max_newton: int = 40
    tol_residual: float | None = 1e-8
    match_level: float = 0.5
    coarsen: int = 8
    # fixed-point settings (Dirac-Klein-Gordon)
    theta: float = 0.5
    tol_fixedpoint: float = 1e-9
    max_iters: int = 300

    def radius(self, kappa: float) -> float:
        return float(self.R) if self.R is not None else max(30.0, 12.0 / kappa)

    def grid(self, kappa: float) -> np.ndarray:
        """Uniform radial grid; the node count is a multiple of ``coarsen``."""
        c = max(1, int(self.coarsen))
        N = c * int(math.ceil(self.radius(kappa) / (self.h * c) - 1e-9))
        return np.arange(N + 1) * self.h


@dataclass(frozen=True, kw_only=True)
class SolitonProfile:
    omega: float
    m: float
    n: int
    r: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    f_field: np.ndarray = field(repr=False)
    v0: float
    decay_rate: float
    tail_amplitude: float
    nl: Nonlinearity | None = None
    u_less_v: bool = True
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def h(self) -> float:
        return float(self.r[1] - self.r[0])

    @property
    def R(self) -> float:
        return float(self.r[-1])

    def _tail(self, r):
        nu = self.n / 2.0 - 1.0
        kap = self.decay_rate
        rr = np.maximum(r, self.R)
        scale = self.tail_amplitude * rr ** (-nu) * np.exp(-kap * (rr - self.R))
        v = scale * kve(nu, kap * rr)
        u = scale * kap * kve(nu + 1.0, kap * rr) / (self.omega + self.m)
        return v, u

    def evaluate(self, r):
        """(v, u) at arbitrary radii: cubic spline on [0, R], decaying Bessel tail beyond."""
        r = np.abs(np.asarray(r, dtype=float))
        sv, su = _splines(self)
        v = np.empty_like(r)
        u = np.empty_like(r)
        inside = r <= self.R
        v[inside] = sv(r[inside])
        u[inside] = su(r[inside])
        if np.any(~inside):
            tv, tu = self._tail(r[~inside])
            v[~inside] = tv
            u[~inside] = tu
        return v, u

    def charge(self) -> float:
        """Q(phi) = int (v^2 + u^2) over R^n."""
        area = 2.0 * math.pi ** (self.n / 2.0) / gamma_fn(self.n / 2.0)
        w = (self.v**2 + self.u**2) * self.r ** (self.n - 1)
        return float(area * np.trapezoid(w, self.r))

    def sup_u_over_v(self) -> float:
        mask = np.abs(self.v) > 0
        return float(np.max(np.abs(self.u[mask] / self.v[mask])))


@dataclass(frozen=True, kw_only=True)
class DkgProfile(SolitonProfile):
    M: float
    Phi: np.ndarray = field(repr=False)


_SPLINE_CACHE: dict[int, tuple] = {}


def _splines(p: SolitonProfile):
    key = id(p)
    hit = _SPLINE_CACHE.get(key)
    if hit is not None and hit[0] is p:
        return hit[1], hit[2]
    # v is even in r, u is odd: v'(0) = 0 clamps the first spline, u'' (0) = 0 the second
    sv = CubicSpline(p.r, p.v, bc_type=((1, 0.0), "not-a-knot"))
    su = CubicSpline(p.r, p.u, bc_type=((2, 0.0), "not-a-knot"))
    if len(_SPLINE_CACHE) > 16:
        _SPLINE_CACHE.clear()
    _SPLINE_CACHE[key] = (p, sv, su)
    return sv, su


# ---------------------------------------------------------------------------
# RK4 kernel

_MODE_POWER, _MODE_TABLE, _MODE_FIELD = 0, 1, 2


@numba.njit(cache=True, inline="always")
def _table(x, xs, ys):
    # scalar linear interpolation, constant outside the table
    if x <= xs[0]:
        return ys[0]
    if x >= xs[-1]:
        return ys[-1]
    lo, hi = 0, xs.size - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xs[mid] <= x:
            lo = mid
        else:
            hi = mid
    t = (x - xs[lo]) / (xs[hi] - xs[lo])
    return ys[lo] + t * (ys[hi] - ys[lo])


@numba.njit(cache=True, inline="always")
def _f_power(tau, half, k, mu, tab_x, tab_f, fld, fld_mid):
    a = abs(tau)
    if k == 1.0:
        return a
    if k == 2.0:
        return a * a
    if k == 3.0:
        return a * a * a
    return a**k


@numba.njit(cache=True, inline="always")
def _f_table(tau, half, k, mu, tab_x, tab_f, fld, fld_mid):
    return _table(tau, tab_x, tab_f)


@numba.njit(cache=True, inline="always")
def _f_field(tau, half, k, mu, tab_x, tab_f, fld, fld_mid):
    # frozen field; odd half-indices are the midpoints r_{i+1/2}
    if half % 2 == 0:
        return mu * fld[half // 2]
    return mu * fld_mid[half // 2]


@numba.njit(cache=True, inline="always")
def _rhs(r, v, u, fv, omega, m, n):
    dv = -(omega + m - fv) * u
    du = (omega - m + fv) * v - (n - 1) * u / r
    return dv, du


def _make_integrator(_f_at):
    # one compiled kernel per closure kind; a shared kernel with a runtime switch is ~4x slower
    @numba.njit(cache=True)
    def integrate(v, u, i0, i1, h, n, omega, m, k, mu, tab_x, tab_f, fld, fld_mid,
                  classify, kappa, out_v, out_u):
        """RK4 from node i0 to node i1 (either direction), writing nodes into out_v/out_u.

        With ``classify`` the forward run stops at the first overshoot (+1, v < 0) or
        undershoot (-1, u < 0 with v > 0); otherwise 0 is returned.
        """
        s = 1 if i1 >= i0 else -1
        hs = s * h
        out_v[i0] = v
        out_u[i0] = u
        i = i0
        while i != i1:
            r = i * h
            hi = 2 * i
            f1 = _f_at(v * v - u * u, hi, k, mu, tab_x, tab_f, fld, fld_mid)
            a1, b1 = _rhs(r, v, u, f1, omega, m, n)
            vv = v + 0.5 * hs * a1
            uu = u + 0.5 * hs * b1
            f2 = _f_at(vv * vv - uu * uu, hi + s, k, mu, tab_x, tab_f, fld, fld_mid)
            a2, b2 = _rhs(r + 0.5 * hs, vv, uu, f2, omega, m, n)
            vv = v + 0.5 * hs * a2
            uu = u + 0.5 * hs * b2
            f3 = _f_at(vv * vv - uu * uu, hi + s, k, mu, tab_x, tab_f, fld, fld_mid)
            a3, b3 = _rhs(r + 0.5 * hs, vv, uu, f3, omega, m, n)
            vv = v + hs * a3
            uu = u + hs * b3
            f4 = _f_at(vv * vv - uu * uu, hi + 2 * s, k, mu, tab_x, tab_f, fld, fld_mid)
            a4, b4 = _rhs(r + hs, vv, uu, f4, omega, m, n)
            v = v + hs * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0
            u = u + hs * (b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0
            i += s
            out_v[i] = v
            out_u[i] = u
            if not (abs(v) < 1e150 and abs(u) < 1e150):
                return 2, i
            if classify:
                if v < 0.0:
                    return 1, i
                # ground states keep u > 0 for r > 0; v itself may rise near the core
                # whenever f(v(0)^2) > m + omega
                if u < 0.0:
                    return -1, i
        if classify:
            fv = _f_at(v * v - u * u, 2 * i, k, mu, tab_x, tab_f, fld, fld_mid)
            dv = -(omega + m - fv) * u
            if dv + kappa * v > 0.0:
                return -1, i
            return 1, i
        return 0, i

    return integrate


_KERNELS = {}


def _kernel(mode):
    if mode not in _KERNELS:
        _KERNELS[mode] = _make_integrator((_f_power, _f_table, _f_field)[mode])
    return _KERNELS[mode]


def midpoint_values(fld: np.ndarray) -> np.ndarray:
    """Values of an even radial function at r_{i+1/2}, fourth-order interpolation."""
    ext = np.concatenate([[fld[1]], fld, [2 * fld[-1] - fld[-2], 3 * fld[-1] - 2 * fld[-2]]])
    return (-ext[:-3] + 9.0 * ext[1:-2] + 9.0 * ext[2:-1] - ext[3:])[: fld.size] / 16.0


class _Shooter:
    """Forward/backward integrations for one (omega, m, n, closure) on a fixed grid.

    The shooting parameter ``p`` is v(0) for the Soler closure and a multiplier mu
    of the frozen field (with v(0) = 1) for the Dirac-Klein-Gordon closure.
    """

    def __init__(self, omega, m, n, h, R, nl=None, fld=None):
        self.omega, self.m, self.n, self.h = float(omega), float(m), int(n), float(h)
        self.N = int(round(R / h))
        self.r = np.arange(self.N + 1) * self.h
        self.kappa = math.sqrt(m * m - omega * omega)
        self.nu = self.n / 2.0 - 1.0
        self.v = np.zeros(self.N + 1)
        self.u = np.zeros(self.N + 1)
        dummy = np.zeros(2)
        self.tab_x = self.tab_f = dummy
        self.k = 1.0
        if fld is not None:
            self.mode = _MODE_FIELD
            self.fld = np.ascontiguousarray(fld, dtype=float)
            if self.fld.size != self.N + 1:
                raise ConfigurationError("frozen field must live on the profile grid")
            self.fld_mid = midpoint_values(self.fld)
            self.nl = None
        else:
            self.nl = nl
            self.fld = self.fld_mid = dummy
            if nl.kind == "power":
                self.mode, self.k = _MODE_POWER, float(nl.k)
            else:
                self.mode = _MODE_TABLE
                self.tab_x, self.tab_f = nl.tau, nl.values

    # closure helpers -------------------------------------------------------
    def _params(self, p):
        """(v0, mu) for shooting parameter p."""
        return (p, 1.0) if self.mode != _MODE_FIELD else (1.0, p)

    def _f0_f2(self, p, v0, u1):
        """f(0) and the r^2 coefficient of f along the solution."""
        if self.mode == _MODE_FIELD:
            f0 = p * self.fld[0]
            f2 = p * (self.fld[1] - self.fld[0]) / self.h**2
            return f0, f2
        f0 = float(self.nl(v0 * v0))
        v2 = -(self.omega + self.m - f0) * u1 / 2.0
        f2 = float(self.nl.derivative(v0 * v0)) * (2.0 * v0 * v2 - u1 * u1)
        return f0, f2

    def series(self, p):
        """Regular expansion at the origin, evaluated at r = h."""
        v0, _ = self._params(p)
        om, m, n, h = self.omega, self.m, self.n, self.h
        if self.mode == _MODE_FIELD:
            f0 = p * self.fld[0]
        else:
            f0 = float(self.nl(v0 * v0))
        u1 = (om - m + f0) * v0 / n
        v2 = -(om + m - f0) * u1 / 2.0
        _, f2 = self._f0_f2(p, v0, u1)
        u3 = ((om - m + f0) * v2 + f2 * v0) / (n + 2)
        return v0, v0 + v2 * h * h, u1 * h + u3 * h**3

    def run(self, p, i_stop, classify=False):
        v0, mu = self._params(p)
        _, vh, uh = self.series(p)
        self.v[0], self.u[0] = v0, 0.0
        status, i_end = _kernel(self.mode)(vh, uh, 1, i_stop, self.h, float(self.n), self.omega,
                                           self.m, self.k, mu, self.tab_x, self.tab_f, self.fld,
                                           self.fld_mid, classify, self.kappa, self.v, self.u)
        return status, i_end

    def tail_values(self, amp):
        R = self.r[-1]
        x = self.kappa * R
        v = amp * R ** (-self.nu) * kve(self.nu, x)
        u = amp * self.kappa * R ** (-self.nu) * kve(self.nu + 1.0, x) / (self.omega + self.m)
        return v, u

    def run_back(self, p, amp, i_stop):
        _, mu = self._params(p)
        vR, uR = self.tail_values(amp)
        _kernel(self.mode)(vR, uR, self.N, i_stop, self.h, float(self.n), self.omega, self.m,
                           self.k, mu, self.tab_x, self.tab_f, self.fld, self.fld_mid, False,
                           self.kappa, self.v, self.u)

    def classify(self, p) -> int:
        status, _ = self.run(p, self.N, classify=True)
        return 1 if status == 2 else status

    # ------------------------------------------------------------------------
    def bracket(self, cfg: SolverConfig):
        if cfg.bracket is not None:
            lo, hi = map(float, cfg.bracket)
            s_lo, s_hi = self.classify(lo), self.classify(hi)
            if not (s_lo < 0 < s_hi):
                raise NoSolutionError(
                    f"bracket [{lo}, {hi}] does not straddle a sign change of the shooting map "
                    f"(classes {s_lo}, {s_hi})")
            return lo, hi
        p = cfg.scan_start
        if self.mode == _MODE_FIELD:
            if not self.fld[0] > 0:
                raise NoSolutionError("frozen field vanishes at the origin: no bound state")
            p = 0.5 * (self.m - self.omega) / self.fld[0]
        prev = None
        while p < cfg.scan_max:
            s = self.classify(p)
            if s > 0:
                if prev is None:
                    raise NoSolutionError(f"shooting already overshoots at the scan start {p}")
                return prev, p
            prev = p
            p *= cfg.scan_factor
        raise NoSolutionError(f"no overshoot found below {cfg.scan_max}")

    def bisect(self, lo, hi, tol):
        it = 0
        while hi - lo > tol * hi:
            mid = 0.5 * (lo + hi)
            if self.classify(mid) > 0:
                hi = mid
            else:
                lo = mid
            it += 1
            if it > 200:
                break
        return lo, hi, it

    def match_index(self, p, level):
        self.run(p, self.N)
        v0 = self.v[0]
        below = np.nonzero(np.abs(self.v) < level * abs(v0))[0]
        i_m = int(below[0]) if below.size else self.N
        return max(8, min(i_m, int(0.75 * self.N)))

    def _forward_end(self, p, i_m):
        self.run(p, i_m)
        return np.array([self.v[i_m], self.u[i_m]])

    def _backward_end(self, p, amp, i_m):
        self.run_back(p, amp, i_m)
        return np.array([self.v[i_m], self.u[i_m]])

    def mismatch(self, p, amp, i_m):
        return self._forward_end(p, i_m) - self._backward_end(p, amp, i_m)

    def polish(self, p, cfg: SolverConfig, amp=None, i_m=None):
        """Newton on (p, tail amplitude) so both sides agree at the matching node."""
        if i_m is None:
            i_m = self.match_index(p, cfg.match_level)
        if amp is None:
            self.run(p, i_m)
            # rough amplitude from the decay law between r_m and R
            rm = self.r[i_m]
            ref = rm ** (-self.nu) * kve(self.nu, self.kappa * rm) * math.exp(-self.kappa * (rm - self.r[-1]))
            amp = self.v[i_m] / ref
        history = []
        x = np.array([p, amp], dtype=float)
        v0_scale = max(abs(self._params(p)[0]), 1e-300)
        for _ in range(cfg.max_newton):
            fw = self._forward_end(x[0], i_m)
            bw = self._backward_end(x[0], x[1], i_m)
            F = fw - bw
            err = float(np.max(np.abs(F))) / v0_scale
            history.append(err)
            if err < cfg.tol_match:
                break
            if len(history) > 4 and err < 1e3 * cfg.tol_match and err > 0.5 * history[-2]:
                # stagnation at the round-off floor
                break
            J = np.empty((2, 2))
            d = 1e-7 * max(abs(x[0]), 1e-12)
            bw_p = self._backward_end(x[0] + d, x[1], i_m) if self.mode == _MODE_FIELD else bw
            J[:, 0] = (self._forward_end(x[0] + d, i_m) - bw_p - F) / d
            d = 1e-7 * max(abs(x[1]), 1e-300)
            J[:, 1] = -(self._backward_end(x[0], x[1] + d, i_m) - bw) / d
            try:
                step = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError as exc:
                raise NumericalError("singular matching Jacobian", history) from exc
            x = x + step
        else:
            raise NumericalError("tail matching did not converge", history)
        # leave the matched solution in self.v / self.u
        self.run(x[0], i_m)
        vf, uf = self.v[i_m], self.u[i_m]
        self.run_back(x[0], x[1], i_m)
        self.v[i_m] = 0.5 * (vf + self.v[i_m])
        self.u[i_m] = 0.5 * (uf + self.u[i_m])
        return float(x[0]), float(x[1]), i_m, history


# ---------------------------------------------------------------------------
# public solvers


def _check_frequency(omega, m, n):
    if not m > 0:
        raise DomainError(f"mass must be positive, got m = {m}")
    if not 0.0 < omega < m:
        raise DomainError(f"omega outside (0,m): omega = {omega}, m = {m}")
    if n not in (1, 2, 3, 4):
        raise ConfigurationError(f"dimension n must be 1..4, got {n}")


def _residual_arrays(r, v, u, f, omega, m, n):
    # fourth-order centered differences, so the check resolves the O(h^4) RK4 error
    # rather than its own truncation on steep low-frequency profiles
    h = r[1] - r[0]
    ri = r[2:-2]

    def d(y):
        return (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)

    dv, du = d(v), d(u)
    vi, ui, fi = v[2:-2], u[2:-2], f[2:-2]
    res_v = omega * vi - du - (n - 1) * ui / ri - (m - fi) * vi
    res_u = omega * ui + dv + (m - fi) * ui
    return res_v, res_u


def profile_residual(p: SolitonProfile) -> tuple[float, float]:
    """Sup norms of both profile equations on interior nodes."""
    rv, ru = _residual_arrays(p.r, p.v, p.u, p.f_field, p.omega, p.m, p.n)
    return float(np.max(np.abs(rv))), float(np.max(np.abs(ru)))


def tail_slope(p: SolitonProfile, fraction: float = 0.25) -> float:
    """Slope of log(r^{(n-1)/2} |v|) fitted on the last ``fraction`` of the grid.

    The r^{(n-1)/2} factor removes the algebraic spreading of the radial tail, so
    the slope should be -sqrt(m^2 - omega^2).
    """
    i0 = int((1.0 - fraction) * (p.r.size - 1))
    r = p.r[i0:]
    y = np.log(np.abs(p.v[i0:]) * r ** ((p.n - 1) / 2.0))
    return float(np.polyfit(r, y, 1)[0])


def _finish(sh: _Shooter, omega, m, n, nl, f_field, v0, amp, diag, cfg, cls=SolitonProfile, **extra):
    v = sh.v.copy()
    u = sh.u.copy()
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(u)) and np.all(v > 0)):
        raise NumericalError("shooting produced a non-finite or sign-changing profile",
                             diag.get("newton_history", []))
    p = cls(omega=float(omega), m=float(m), n=int(n), r=sh.r.copy(), v=v, u=u, f_field=f_field,
            v0=float(v0), decay_rate=sh.kappa, tail_amplitude=float(amp), nl=nl,
            diagnostics=diag, **extra)
    res = profile_residual(p)
    diag["residual_v"], diag["residual_u"] = res
    ratio = p.sup_u_over_v()
    diag["sup_u_over_v"] = ratio
    object.__setattr__(p, "u_less_v", bool(ratio < 1.0))
    if cfg.tol_residual is not None and max(res) >= cfg.tol_residual:
        raise NumericalError(
            f"profile residual {max(res):.3e} exceeds tolerance {cfg.tol_residual:.1e}; "
            "reduce the step h", [max(res)])
    return p


def solve_soler_profile(omega: float, m: float, n: int, nl: Nonlinearity,
                        cfg: SolverConfig | None = None) -> SolitonProfile:
    """Nodeless ground state of the Soler profile system."""
    cfg = cfg or SolverConfig()
    _check_frequency(omega, m, n)
    kappa = math.sqrt(m * m - omega * omega)
    r = cfg.grid(kappa)
    sh = _Shooter(omega, m, n, cfg.h, r[-1], nl=nl)
    # classification only needs the sign of the shooting map: use a coarser step
    coarse = _Shooter(omega, m, n, cfg.h * cfg.coarsen, r[-1], nl=nl)
    lo, hi = coarse.bracket(cfg)
    lo, hi, nbis = coarse.bisect(lo, hi, cfg.tol_shoot)
    v0, amp, i_m, hist = sh.polish(0.5 * (lo + hi), cfg)
    diag = {"bracket": (lo, hi), "bisections": nbis, "newton_history": hist,
            "match_radius": float(sh.r[i_m]), "R": float(sh.r[-1]), "h": sh.h}
    f_field = nl(sh.v**2 - sh.u**2)
    return _finish(sh, omega, m, n, nl, f_field, v0, amp, diag, cfg)


# ---------------------------------------------------------------------------
# Dirac-Klein-Gordon


def _forward_sum(g, q, h):
    """T_i = int_0^{r_i} e^{-M(r_i - s)} g(s) ds, trapezoid, q = e^{-M h}."""
    x = np.empty_like(g)
    x[0] = 0.0
    x[1:] = 0.5 * h * (g[1:] + q * g[:-1])
    return lfilter([1.0], [1.0, -q], x)


def yukawa_apply(source, M: float, n: int, r) -> np.ndarray:
    """(-Delta + M^2)^{-1} applied to a radial source sampled on the uniform grid ``r``.

    Uses the radial Green's function split into an inner and an outer integral,
    each evaluated by a trapezoid recursion so no exponential overflows.
    """
    if n not in (1, 3):
        raise ConfigurationError(f"Yukawa resolvent implemented for n in {{1, 3}}, got n = {n}")
    if not M > 0:
        raise DomainError(f"scalar mass must be positive, got M = {M}")
    s = np.asarray(source, dtype=float)
    r = np.asarray(r, dtype=float)
    h = float(r[1] - r[0])
    q = math.exp(-M * h)
    g = s if n == 1 else r * s
    inner = _forward_sum(g, q, h)
    outer = _forward_sum(g[::-1], q, h)[::-1]
    full = np.trapezoid(np.exp(-M * r) * g, r)
    if n == 1:
        return (inner + outer + np.exp(-M * r) * full) / (2.0 * M)
    out = np.empty_like(s)
    out[1:] = (inner[1:] + outer[1:] - np.exp(-M * r[1:]) * full) / (2.0 * M * r[1:])
    out[0] = full
    return out


def solve_dkg_profile(omega: float, m: float, M: float, n: int, cfg: SolverConfig | None = None,
                      initial_field=None) -> DkgProfile:
    """Ground state of the Dirac-Klein-Gordon profile system by damped fixed-point iteration.

    Each sweep freezes the field f, finds the multiplier mu for which the linear
    profile equations with mu*f have a decaying solution w (normalised by w_v(0) = 1),
    and rescales w so that the new field Y[v^2 - u^2] matches mu*f at the origin.
    At the fixed point mu = 1 and f = Y[v^2 - u^2].
    """
    cfg = cfg or SolverConfig()
    _check_frequency(omega, m, n)
    if n not in (1, 3):
        raise ConfigurationError(f"Dirac-Klein-Gordon profiles implemented for n in {{1, 3}}, got n = {n}")
    if not M > 0:
        raise DomainError(f"scalar mass must be positive, got M = {M}")
    if not 0 < cfg.theta <= 1:
        raise ConfigurationError("damping theta must lie in (0, 1]")
    kappa = math.sqrt(m * m - omega * omega)
    r = cfg.grid(kappa)
    c = max(1, int(cfg.coarsen))
    if initial_field is None:
        seed = solve_soler_profile(omega, m, n, Nonlinearity.power(1.0),
                                   replace(cfg, R=float(r[-1]), tol_residual=None))
        f = yukawa_apply(seed.v**2 - seed.u**2, M, n, r)
    else:
        f = np.asarray(initial_field, dtype=float).copy()

    history = []
    p = amp = None
    i_m = None
    for it in range(cfg.max_iters):
        sh = _Shooter(omega, m, n, cfg.h, r[-1], fld=f)

        def fresh_start():
            coarse = _Shooter(omega, m, n, cfg.h * c, r[-1], fld=f[::c])
            lo, hi = coarse.bracket(replace(cfg, bracket=None))
            lo, hi, _ = coarse.bisect(lo, hi, cfg.tol_shoot)
            return sh.polish(0.5 * (lo + hi), cfg)

        if p is None:
            p, amp, i_m, _ = fresh_start()
        else:
            try:
                p, amp, i_m, _ = sh.polish(p, cfg, amp=amp, i_m=i_m)
            except NumericalError:
                p, amp, i_m, _ = fresh_start()
        src = sh.v**2 - sh.u**2
        Y = yukawa_apply(src, M, n, r)
        c2 = p * f[0] / Y[0]
        f_new = c2 * Y
        diff = float(np.max(np.abs(f_new - p * f)))
        history.append(diff)
        if diff < cfg.tol_fixedpoint:
            c = math.sqrt(c2)
            sh.v *= c
            sh.u *= c
            diag = {"iterations": it + 1, "fixedpoint_history": history, "mu": p,
                    "R": float(r[-1]), "h": cfg.h, "theta": cfg.theta}
            eff = p * f
            prof = _finish(sh, omega, m, n, None, eff, c, amp * c, diag, cfg, cls=DkgProfile,
                           M=float(M), Phi=yukawa_apply(sh.v**2 - sh.u**2, M, n, r))
            prof.diagnostics["fixedpoint_residual"] = float(np.max(np.abs(prof.Phi - eff)))
            return prof
        f = (1.0 - cfg.theta) * p * f + cfg.theta * f_new
        # the multiplier was absorbed into f
        p = 1.0
    raise IterationError(f"fixed-point iteration did not converge in {cfg.max_iters} sweeps", history)
