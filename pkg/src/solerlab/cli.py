"""Command-line entry point.

    solerlab profile   --model soler --n 1 --k 1 --omega 0.9
    solerlab spectrum  --omega 0.9 --k 1 [--bifreq 0.5]
    solerlab evolve    --initial bi --s 0.5 --omega 0.9
    solerlab verify    [--suite su11] [--trials 10000] [--seed 0]
    solerlab decompose --n 3 --omega 0.9 --s 0.5

Outputs go to ``--out`` (default ``solerlab-out``), relative to $SOLERLAB_OUTPUT when set.
A ``--config`` file of ``key = value`` lines supplies defaults; flags on the command
line win.  Exit codes: 0 success, 1 configuration or domain error, 2 numerical
failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .clifford import build_algebra
from .errors import ConfigurationError, DomainError, SolerLabError, UnsupportedSymmetryError
from .evolution import deviation_series, evolve, periodic_grid_for, perturbation_growth, track_charges
from .fields import Grid, SpinorField
from .io import read_config, sidecar, write_csv, write_json
from .linearization import (GridConfig, SpectrumConfig, assemble_bifrequency, assemble_one_frequency,
                            complexify_vector, compute_spectrum, decompose_perturbation, detect_instability,
                            locate_two_omega)
from .profiles import Nonlinearity, SolverConfig, solve_dkg_profile, solve_soler_profile
from .suites import FAULTS, SUITES, run_suite
from .symmetry import null_defect
from .waves import BiFrequencyParams, BiFrequencyWave, OneFrequencyWave, build_chi, build_phi

OUTPUT_ENV = "SOLERLAB_OUTPUT"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3
COMMANDS = ("profile", "spectrum", "evolve", "verify", "decompose")


@dataclass
class RunConfig:
    command: str
    model: str = "soler"
    n: int = 1
    N: int | None = None
    m: float = 1.0
    M: float = 1.0
    omega: float | None = None
    omega_sweep: str | None = None
    k: float = 1.0
    h: float | None = None
    R: float | None = None
    points: int | None = None
    L: float | None = None
    method: str = "dense"
    target: str | None = None
    count: int = 12
    bifreq: float | None = None
    initial: str = "one"
    s: float | None = None
    a: float | None = None
    b: float | None = None
    z_phase: float = 0.0
    T: float | None = None
    dt: float = 1e-3
    eps: float = 1e-5
    mode: str = "unstable"
    suite: str = "all"
    trials: int = 1000
    inject_fault: str | None = None
    seed: int = 0
    workers: int = 1
    out: str = "solerlab-out"

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigurationError(f"unknown command {self.command!r}")
        if self.model not in ("soler", "dkg"):
            raise ConfigurationError(f"model must be soler or dkg, got {self.model!r}")
        for name in ("m", "M", "k", "dt", "eps"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("h", "R", "L", "T"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise DomainError(f"{name} must be positive, got {val}")
        if self.omega is not None and not 0.0 < self.omega < self.m:
            raise DomainError(f"omega outside (0,m): omega = {self.omega}, m = {self.m}")
        if self.trials < 1 or self.workers < 1 or self.count < 1:
            raise ConfigurationError("trials, workers and count must be at least 1")
        if self.suite != "all" and self.suite not in SUITES:
            raise ConfigurationError(f"unknown suite {self.suite!r}; choose from {('all',) + SUITES}")
        if self.inject_fault is not None and self.inject_fault not in FAULTS:
            raise ConfigurationError(f"unknown fault {self.inject_fault!r}; choose from {FAULTS}")
        if self.initial not in ("one", "bi", "null", "perturbed"):
            raise ConfigurationError(f"unknown initial data {self.initial!r}")
        if self.mode not in ("unstable", "random"):
            raise ConfigurationError(f"unknown perturbation mode {self.mode!r}")
        if self.method not in ("dense", "shift-invert"):
            raise ConfigurationError(f"unknown eigensolver method {self.method!r}")
        return self

    def omegas(self) -> list[float]:
        if self.omega_sweep is None:
            if self.omega is None:
                raise ConfigurationError("give --omega or --omega-sweep")
            return [self.omega]
        spec = self.omega_sweep.strip()
        if ":" in spec:
            lo, hi, num = spec.split(":")
            vals = np.linspace(float(lo), float(hi), int(num)).tolist()
        else:
            vals = [float(x) for x in spec.split(",") if x.strip()]
        for w in vals:
            if not 0.0 < w < self.m:
                raise DomainError(f"omega outside (0,m): omega = {w}, m = {self.m}")
        return vals

    def record(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def output_dir(self) -> Path:
        out = Path(self.out)
        root = os.environ.get(OUTPUT_ENV)
        if root and not out.is_absolute():
            out = Path(root) / out
        out.mkdir(parents=True, exist_ok=True)
        return out

    def ab(self) -> tuple[float, float]:
        if self.s is not None:
            return math.cosh(self.s), math.sinh(self.s)
        if self.a is not None:
            b = self.b if self.b is not None else math.sqrt(max(self.a**2 - 1.0, 0.0))
            return self.a, b
        if self.b is not None:
            return math.sqrt(1.0 + self.b**2), self.b
        return 1.0, 0.0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="solerlab", description="Solitary waves of the Soler model: profiles, spectra, "
                                             "evolution and identity checks.")
    p.add_argument("--version", action="version", version=f"solerlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value file; flags win over its entries")
    common.add_argument("--out", help="output directory (relative to $%s if set)" % OUTPUT_ENV)
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--m", type=float, help="fermion mass")
    common.add_argument("--n", type=int, help="spatial dimension")
    common.add_argument("--N", type=int, help="spinor dimension")
    common.add_argument("--k", type=float, help="power nonlinearity f(tau) = |tau|^k")
    common.add_argument("--omega", type=float)

    pr = sub.add_parser("profile", parents=[common], help="solve for the radial profile")
    pr.add_argument("--model", choices=("soler", "dkg"))
    pr.add_argument("--M", type=float, help="scalar mass (dkg)")
    pr.add_argument("--omega-sweep", dest="omega_sweep", help="lo:hi:count or a comma list")
    pr.add_argument("--h", type=float, help="radial step")
    pr.add_argument("--R", type=float, help="outer radius")

    sp_ = sub.add_parser("spectrum", parents=[common], help="spectrum of the linearization (n = 1)")
    sp_.add_argument("--points", type=int, help="grid points (default 800)")
    sp_.add_argument("--L", type=float, help="half width of the box")
    sp_.add_argument("--method", choices=("dense", "shift-invert"))
    sp_.add_argument("--target", help="complex shift for shift-invert, e.g. 1.8j")
    sp_.add_argument("--count", type=int)
    sp_.add_argument("--bifreq", type=float, help="use the bi-frequency operator at (cosh s, sinh s)")

    ev = sub.add_parser("evolve", parents=[common], help="split-step evolution (n = 1)")
    ev.add_argument("--initial", choices=("one", "bi", "null", "perturbed"))
    ev.add_argument("--s", type=float, help="bi-frequency rapidity, (a, b) = (cosh s, sinh s)")
    ev.add_argument("--a", type=float)
    ev.add_argument("--b", type=float)
    ev.add_argument("--z-phase", dest="z_phase", type=float, help="null data: B K psi = e^{i phase} psi")
    ev.add_argument("--T", type=float, help="final time (default 20/omega)")
    ev.add_argument("--dt", type=float)
    ev.add_argument("--points", type=int, help="periodic grid size (power of two, default 1024)")
    ev.add_argument("--eps", type=float)
    ev.add_argument("--mode", choices=("unstable", "random"))

    ve = sub.add_parser("verify", parents=[common], help="randomized identity suites")
    ve.add_argument("--suite", choices=("all",) + SUITES)
    ve.add_argument("--trials", type=int)
    ve.add_argument("--inject-fault", dest="inject_fault", choices=FAULTS, help="mutation hook")

    de = sub.add_parser("decompose", parents=[common], help="split a random perturbation into (P, Q)")
    de.add_argument("--s", type=float)
    de.add_argument("--a", type=float)
    de.add_argument("--b", type=float)
    de.add_argument("--points", type=int, help="points per axis")
    de.add_argument("--L", type=float)
    return p


def parse_config(argv: list[str] | None = None) -> RunConfig:
    """Defaults < config file < command-line flags."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    ns = parser.parse_args(argv)
    values = {k: v for k, v in vars(ns).items() if v is not None}
    if ns.config:
        from_file = read_config(Path(ns.config))
        known = {f.name for f in fields(RunConfig)}
        bad = sorted(set(from_file) - known)
        if bad:
            raise ConfigurationError(f"unknown config keys: {bad}")
        # run the file values through the parser so they get the flags' types
        sub = parser._subparsers._group_actions[0].choices[ns.command]
        actions = {a.dest: a for a in sub._actions}
        typed = {}
        for key, raw in from_file.items():
            act = actions.get(key)
            if act is None:
                raise ConfigurationError(f"config key {key!r} does not apply to {ns.command}")
            typed[key] = act.type(raw) if act.type else raw
        values = {**typed, **values}
    values.pop("config", None)
    return RunConfig(**values).validate()


# ---------------------------------------------------------------------------
# profile


def _solve_profile(cfg: RunConfig, omega: float):
    scfg = SolverConfig(**{k: v for k, v in (("h", cfg.h), ("R", cfg.R)) if v is not None})
    if cfg.model == "dkg":
        return solve_dkg_profile(omega, cfg.m, cfg.M, cfg.n, scfg)
    return solve_soler_profile(omega, cfg.m, cfg.n, Nonlinearity.power(cfg.k), scfg)


def _profile_job(cfg: RunConfig, omega: float) -> dict:
    p = _solve_profile(cfg, omega)
    fcol = p.Phi if cfg.model == "dkg" else p.f_field
    return {"omega": omega, "r": p.r, "v": p.v, "u": p.u, "f": fcol,
            "summary": {"omega": omega, "v0": p.v0, "charge": p.charge(), "sup_u_over_v": p.sup_u_over_v(),
                        "decay_rate": p.decay_rate, "residual": max(p.diagnostics["residual_v"],
                                                                    p.diagnostics["residual_u"]),
                        "iterations": p.diagnostics.get("iterations")}}


def _pool_map(fn, cfg: RunConfig, items: list):
    if cfg.workers <= 1 or len(items) <= 1:
        return [fn(cfg, x) for x in items]
    with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
        return list(ex.map(fn, [cfg] * len(items), items))


def cmd_profile(cfg: RunConfig) -> list[Path]:
    out = cfg.output_dir()
    omegas = cfg.omegas()
    results = _pool_map(_profile_job, cfg, omegas)
    files = []
    for res in results:
        path = out / f"profile_{cfg.model}_n{cfg.n}_omega{res['omega']:.6g}.csv"
        files.append(write_csv(path, ["r", "v", "u", "f"], zip(res["r"], res["v"], res["u"], res["f"])))
        files.append(sidecar(path, "profile", cfg.record(), cfg.seed, {"result": res["summary"]}))
    if cfg.omega_sweep is not None:
        path = out / f"profile_{cfg.model}_n{cfg.n}_sweep.csv"
        rows = [(r["omega"], r["summary"]["v0"], r["summary"]["charge"], r["summary"]["sup_u_over_v"])
                for r in results]
        files.append(write_csv(path, ["omega", "v0", "Q", "sup_u_over_v"], rows))
        files.append(sidecar(path, "profile", cfg.record(), cfg.seed))
    return files


# ---------------------------------------------------------------------------
# spectrum


def _need_line(cfg: RunConfig):
    if cfg.n != 1 or (cfg.N or 2) != 2:
        raise ConfigurationError("spectra and evolution are implemented for (n, N) = (1, 2)")
    if cfg.model != "soler":
        raise ConfigurationError("spectra and evolution need the soler model")


def _operator(cfg: RunConfig, profile):
    alg = build_algebra(1, 2)
    nl = Nonlinearity.power(cfg.k)
    gcfg = GridConfig(L=cfg.L, M=cfg.points or 800)
    if cfg.bifreq is None:
        return assemble_one_frequency(alg, profile, nl, gcfg)
    return assemble_bifrequency(alg, profile, nl, math.cosh(cfg.bifreq), math.sinh(cfg.bifreq), gcfg)


def cmd_spectrum(cfg: RunConfig) -> list[Path]:
    _need_line(cfg)
    out = cfg.output_dir()
    profile = _solve_profile(cfg, cfg.omegas()[0])
    op = _operator(cfg, profile)
    target = complex(cfg.target.replace(" ", "")) if cfg.target else None
    spec = compute_spectrum(op, SpectrumConfig(method=cfg.method, target=target, count=cfg.count))
    order = np.lexsort((spec.eigenvalues.imag, spec.eigenvalues.real))
    path = out / "spectrum.csv"
    rows = [(spec.eigenvalues[j].real, spec.eigenvalues[j].imag, spec.classes[j], spec.residuals[j],
             spec.participation[j]) for j in order]
    files = [write_csv(path, ["re", "im", "class", "residual", "participation"], rows),
             sidecar(path, "spectrum", cfg.record(), cfg.seed)]
    summary = spec.summary()
    summary["frame"] = op.frame
    summary["h"] = op.h
    summary["scale"] = op.scale
    summary["two_omega"] = locate_two_omega(spec, op)
    summary["unstable_eigenvalues"] = [m.eigenvalue for m in detect_instability(spec)]
    summary["meta"] = {"command": "spectrum", "config": cfg.record(), "seed": cfg.seed, "version": __version__}
    files.append(write_json(out / "spectrum_summary.json", summary))
    return files


# ---------------------------------------------------------------------------
# evolve


def _real_mode(op, vec) -> SpinorField:
    """Real perturbation Re(c e^{i theta} vec), theta aligning the largest entry, as a spinor field."""
    vec = op.to_rho(vec)
    j = int(np.argmax(np.abs(vec)))
    y = (vec * np.exp(-1j * np.angle(vec[j]))).real
    return SpinorField(complexify_vector(y).reshape(2, -1), op.grid)


def _random_mode(profile, grid: Grid, rng) -> SpinorField:
    x = grid.x
    env = 1.0 / np.cosh(profile.decay_rate * x)
    c = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    data = c[:, :1] * env + c[:, 1:] * (x * profile.decay_rate) * env
    return SpinorField(data, grid)


def cmd_evolve(cfg: RunConfig) -> list[Path]:
    _need_line(cfg)
    out = cfg.output_dir()
    omega = cfg.omegas()[0]
    profile = _solve_profile(cfg, omega)
    alg = build_algebra(1, 2)
    nl = Nonlinearity.power(cfg.k)
    T = cfg.T if cfg.T is not None else 20.0 / omega
    grid = periodic_grid_for(profile, M=cfg.points or 1024)
    rec = cfg.record()
    files = []
    summary = {"T": T, "dt": cfg.dt, "L": grid.L, "points": grid.size}

    if cfg.initial == "perturbed":
        rng = np.random.default_rng(cfg.seed)
        if cfg.mode == "unstable":
            op = assemble_one_frequency(alg, profile, nl, GridConfig(M=800))
            modes = detect_instability(compute_spectrum(op))
            if not modes:
                summary.update(eigenvalue=None, rate=None, inconclusive=True, reason="no unstable eigenvalue")
                summary["meta"] = {"command": "evolve", "config": rec, "seed": cfg.seed, "version": __version__}
                return [write_json(out / "growth.json", summary)]
            mode = _real_mode(op, modes[0].vector)
            summary["eigenvalue"] = modes[0].eigenvalue
        else:
            mode = _random_mode(profile, grid, rng)
        g = perturbation_growth(profile, mode, cfg.eps, T, cfg.dt, grid, nl)
        summary.update(rate=g.rate, r_squared=g.r_squared, inconclusive=g.inconclusive, window=g.window,
                       reason=g.reason, eps=cfg.eps, mode=cfg.mode)
        path = out / "deviation.csv"
        files += [write_csv(path, ["t", "orbit_distance"], zip(g.times, g.deviation)),
                  sidecar(path, "evolve", rec, cfg.seed)]
        summary["meta"] = {"command": "evolve", "config": rec, "seed": cfg.seed, "version": __version__}
        files.append(write_json(out / "growth.json", summary))
        return files

    pts = grid.points
    exact = None
    if cfg.initial == "one":
        exact = OneFrequencyWave(profile, [1.0], alg)
    elif cfg.initial == "bi":
        a, b = cfg.ab()
        exact = BiFrequencyWave(profile, BiFrequencyParams.from_ab(a, b, [1.0], [1.0]), alg)
        summary.update(a=a, b=b)
    if exact is not None:
        psi0 = exact(0.0, pts)
    else:
        # B K (phi + conj(z) chi) = chi + z phi = z (phi + conj(z) chi)
        z = np.exp(1j * cfg.z_phase)
        psi0 = (build_phi(profile, [1.0], pts, alg) + np.conj(z) * build_chi(profile, [1.0], pts, alg)) / math.sqrt(2)
        summary["z"] = z
    run = evolve(SpinorField(psi0, grid), nl, cfg.m, T, cfg.dt, grid, alg)
    ch = track_charges(run)
    path = out / "charges.csv"
    header = ["t", "Q", "re_Lambda", "im_Lambda", "Q_plus", "Q_minus", "invariant", "sup_beta_density"]
    rows = [(*r, d) for r, d in zip(ch.rows(), ch.sup_beta_density)]
    files += [write_csv(path, header, rows), sidecar(path, "evolve", rec, cfg.seed)]
    summary["charge_drift_Q"] = float(np.max(np.abs(ch.Q - ch.Q[0])) / ch.Q[0])
    summary["charge_drift_Lambda"] = float(np.max(np.abs(ch.Lambda - ch.Lambda[0])) / ch.Q[0])
    summary["max_Q_minus"] = float(np.max(np.abs(ch.Q_minus)))
    summary["max_sup_beta_density"] = float(np.max(ch.sup_beta_density))
    if exact is not None:
        dev = deviation_series(run, exact)
        path = out / "deviation.csv"
        files += [write_csv(path, ["t", "deviation"], zip(run.times, dev)), sidecar(path, "evolve", rec, cfg.seed)]
        summary["max_deviation"] = float(dev.max())
    else:
        from .symmetry import Charges

        nd = [null_defect(alg, Charges(q, lam), z) for q, lam in zip(ch.Q, ch.Lambda)]
        summary["max_null_defect"] = float(np.max(np.abs(nd)))
    summary["meta"] = {"command": "evolve", "config": rec, "seed": cfg.seed, "version": __version__}
    files.append(write_json(out / "evolve_summary.json", summary))
    return files


# ---------------------------------------------------------------------------
# verify


def _suite_job(cfg: RunConfig, name: str) -> dict:
    return run_suite(name, cfg.seed, cfg.trials, cfg.inject_fault)


def cmd_verify(cfg: RunConfig) -> tuple[list[Path], bool]:
    out = cfg.output_dir()
    names = list(SUITES) if cfg.suite == "all" else [cfg.suite]
    results = dict(zip(names, _pool_map(_suite_job, cfg, names)))
    passed = all(r["passed"] for r in results.values())
    report = {"passed": passed, "failed": [k for k, r in results.items() if not r["passed"]], "suites": results,
              "meta": {"command": "verify", "config": cfg.record(), "seed": cfg.seed, "version": __version__}}
    return [write_json(out / "verify_report.json", report)], passed


# ---------------------------------------------------------------------------
# decompose


def cmd_decompose(cfg: RunConfig) -> list[Path]:
    if cfg.n not in (1, 3):
        raise ConfigurationError("decompose supports n = 1 (N = 2) and n = 3 (N = 4)")
    if cfg.model != "soler":
        raise ConfigurationError("decompose needs the soler model")
    out = cfg.output_dir()
    N = 2 if cfg.n == 1 else 4
    alg = build_algebra(cfg.n, N)
    profile = _solve_profile(cfg, cfg.omegas()[0])
    if cfg.n == 1:
        grid = Grid.dirichlet_line(cfg.L or 10.0, cfg.points or 128)
    else:
        grid = Grid.box(cfg.L or 6.0, cfg.points or 10, 3)
    rng = np.random.default_rng(cfg.seed)
    rho = SpinorField(rng.standard_normal((N, grid.size)) + 1j * rng.standard_normal((N, grid.size)), grid)
    a, b = cfg.ab()
    dec = decompose_perturbation(a, b, rho, profile, alg)
    k = alg.half
    coords = [f"x{i + 1}" for i in range(cfg.n)]
    header = coords + [f"{part}_{c}{j + 1}" for c in ("P", "Q") for j in range(k) for part in ("re", "im")]
    rows = []
    for p in range(grid.size):
        vals = list(grid.points[p])
        for F in (dec.P, dec.Q):
            for j in range(k):
                vals += [F[j, p].real, F[j, p].imag]
        rows.append(vals)
    path = out / "decomposition.csv"
    files = [write_csv(path, header, rows), sidecar(path, "decompose", cfg.record(), cfg.seed)]
    summary = {"a": a, "b": b, "iterations": dec.iterations, "reconstruction_error": dec.reconstruction_error,
               "meta": {"command": "decompose", "config": cfg.record(), "seed": cfg.seed, "version": __version__}}
    files.append(write_json(out / "decompose_summary.json", summary))
    return files


# ---------------------------------------------------------------------------


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (ConfigurationError, DomainError, UnsupportedSymmetryError)):
        return EXIT_CONFIG
    return EXIT_NUMERICAL


def _error_record(cfg: RunConfig | None, argv, exc: BaseException, code: int):
    rec = {"error": type(exc).__name__, "message": str(exc), "exit_code": code,
           "argv": list(argv), "version": __version__}
    log = getattr(exc, "log", None)
    if log:
        rec["log"] = [float(x) if isinstance(x, (int, float, np.floating)) else str(x) for x in log[-20:]]
    if cfg is not None:
        rec["config"] = cfg.record()
        out = cfg.out
    else:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--out", default=RunConfig.out)
        out = pre.parse_known_args(argv)[0].out
    try:
        write_json(RunConfig("profile", out=out).output_dir() / "error.json", rec)
    except OSError:
        pass
    print(f"solerlab: error: {exc}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    cfg = None
    try:
        cfg = parse_config(argv)
        if cfg.command == "verify":
            files, passed = cmd_verify(cfg)
        else:
            files = {"profile": cmd_profile, "spectrum": cmd_spectrum, "evolve": cmd_evolve,
                     "decompose": cmd_decompose}[cfg.command](cfg)
            passed = True
    except SolerLabError as exc:
        code = _exit_code(exc)
        _error_record(cfg, argv, exc, code)
        return code
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        _error_record(cfg, argv, exc, EXIT_NUMERICAL)
        return EXIT_NUMERICAL
    for f in files:
        print(f)
    if not passed:
        print("solerlab: verification failed", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
