"""Command-line harness: instance generation, experiment execution,
optimizer comparison and certification.

Subcommands: ``rmom gen | run | compare | certify``. Exit codes: 0 ok,
2 invalid configuration, 3 certification failure, 4 numerical abort.

Randomness is split into named streams derived from the experiment seed:
instances use ``default_rng([seed, 0])``, initial points
``default_rng([seed, 1])`` and certification sampling ``[seed, 2]``, so
instances and starts are independently reproducible. Trace CSVs are
deterministic per (config, seed, build) in every column except wall_ns.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import subprocess
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import certifier, optimizers, problems
from .curvature import CurvatureBounds, CurvatureConstants
from .optimizers import NumericalAbort, OptConfig, RestartConfig, Trace
from .search import SearchConfig

PROBLEMS = ("rayleigh", "karcher", "scaling")
OPTIMIZERS = ("rgd", "ragdsdr", "ragdsdr-restart", "linear-coupling", "ragd", "gurvits")
CERTIFIABLE = ("ragdsdr", "linear-coupling")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CERTIFICATION = 3
EXIT_NUMERICAL = 4


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem: str = "rayleigh"
    optimizer: str = "ragdsdr"
    d: int | None = None
    n: int | None = None
    m: int | None = None
    cond: float | None = None
    seed: int = 0
    iters: int = 300
    gs_iters: int = 10
    beta_rule: str = "search"
    lipschitz: float | None = None  # --L
    mu: float | None = None
    alpha: float = 1.0
    c: float = 2.0
    diameter: float | None = None  # --D
    certify: bool = False
    observed_diameter: bool = False
    threshold: float = 1e-6
    target_eps: float | None = None
    instance: str | None = None
    out: str | None = None

    def apply_defaults(self) -> "ExperimentConfig":
        if self.problem == "rayleigh":
            self.d = 200 if self.d is None else self.d
            self.n = 210 if self.n is None else self.n
            self.diameter = math.pi / 2 if self.diameter is None else self.diameter
        elif self.problem == "karcher":
            self.d = 20 if self.d is None else self.d
            self.m = 20 if self.m is None else self.m
            self.cond = 1e4 if self.cond is None else self.cond
            self.diameter = 1.0 if self.diameter is None else self.diameter
        elif self.problem == "scaling":
            self.d = 10 if self.d is None else self.d
            self.m = 3 if self.m is None else self.m
            self.diameter = 1.0 if self.diameter is None else self.diameter
        return self

    def validate(self) -> "ExperimentConfig":
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.optimizer == "ragd" and self.problem == "scaling":
            raise ConfigError(
                "RAGD is not applicable to operator scaling: there is no "
                "strong-convexity estimate for the log-capacity"
            )
        if self.optimizer == "gurvits" and self.problem != "scaling":
            raise ConfigError("the gurvits baseline only applies to the scaling problem")
        if self.certify and self.optimizer not in CERTIFIABLE:
            raise ConfigError(
                f"--certify applies to {CERTIFIABLE}, not {self.optimizer!r}"
            )
        if self.cond is not None and self.cond < 1.0:
            raise ConfigError(f"cond must be >= 1, got {self.cond}")
        if self.beta_rule not in ("search", "nesterov"):
            raise ConfigError(f"unknown beta rule {self.beta_rule!r}")
        if self.iters < 1 or self.gs_iters < 1:
            raise ConfigError("iters and gs-iters must be >= 1")
        return self

    @property
    def scale(self) -> str:
        if self.problem == "rayleigh" and (self.d or 0) >= 2000:
            return "paper"
        if self.problem == "karcher" and (self.d or 0) >= 100 and (self.m or 0) >= 100:
            return "paper"
        return "desk"


_CONFIG_KEYS = {f.name for f in fields(ExperimentConfig)}


def parse_config(toml_path: str | None, overrides: dict) -> ExperimentConfig:
    """Build a config from an optional TOML file plus flag overrides.

    Unknown TOML keys are rejected; flags win over file values.
    """
    values: dict = {}
    if toml_path:
        with open(toml_path, "rb") as fh:
            doc = tomllib.load(fh)
        unknown = set(doc) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(doc)
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ExperimentConfig(**values)
    return cfg.apply_defaults().validate()


def build_problem(cfg: ExperimentConfig):
    if cfg.instance:
        return problems.load_instance(cfg.instance)
    if cfg.problem == "rayleigh":
        return problems.gen_rayleigh(cfg.d, cfg.n, cfg.seed)
    if cfg.problem == "karcher":
        return problems.gen_spd_set(cfg.m, cfg.d, cfg.cond, cfg.seed)
    return problems.gen_scaling(cfg.m, cfg.d, cfg.seed)


def resolve_lipschitz(cfg: ExperimentConfig, problem) -> float:
    if cfg.lipschitz is not None:
        return cfg.lipschitz
    if cfg.problem == "rayleigh":
        return problem.lipschitz
    if cfg.problem == "karcher":
        return problems.KarcherProblem.DEFAULT_L
    return problems.ScalingProblem.DEFAULT_L


def resolve_mu(cfg: ExperimentConfig, problem) -> float | None:
    if cfg.mu is not None:
        return cfg.mu
    if cfg.problem == "rayleigh":
        return problem.mu_hint
    if cfg.problem == "karcher":
        return problems.KarcherProblem.DEFAULT_MU
    return None


def make_witness(cfg: ExperimentConfig, problem) -> certifier.OptimumWitness:
    if cfg.problem == "rayleigh":
        return certifier.rayleigh_witness(problem)
    lipschitz = resolve_lipschitz(cfg, problem)
    return certifier.presolve_witness(problem, lipschitz, 10 * cfg.iters, grad_tol=1e-13)


def initial_point(cfg: ExperimentConfig, problem):
    """Initialization-stream start point: a random unit vector inside the
    hemisphere cap of the dominant eigenvector for the sphere, the
    identity matrix for the SPD problems."""
    if cfg.problem == "rayleigh":
        rng = np.random.default_rng([int(cfg.seed), 1])
        witness = certifier.rayleigh_witness(problem)
        man = problem.manifold
        for _ in range(10000):
            x0 = man.random_point(rng)
            if man.dist(x0, witness.x_star) <= math.pi / 2 - 0.05:
                return x0
        raise ConfigError("failed to sample a start inside the hemisphere cap")
    return np.eye(problem.dim)


def opt_config(cfg: ExperimentConfig, problem) -> tuple[OptConfig, CurvatureBounds]:
    man = problem.manifold
    bounds = man.curvature_bounds(cfg.diameter)
    beta_rule = "nesterov" if cfg.optimizer == "linear-coupling" else cfg.beta_rule
    oc = OptConfig(
        lipschitz=resolve_lipschitz(cfg, problem),
        curvature=CurvatureConstants.from_bounds(bounds),
        beta_rule=beta_rule,
        search_cfg=SearchConfig(max_iters=cfg.gs_iters),
        max_iters=cfg.iters,
    )
    return oc, bounds


def run_one(cfg: ExperimentConfig, problem, x0, collect_points: bool = False) -> Trace:
    oc, _ = opt_config(cfg, problem)
    if cfg.optimizer in ("ragdsdr", "linear-coupling"):
        return optimizers.run_ragdsdr(problem, x0, oc, collect_points=collect_points)
    if cfg.optimizer == "rgd":
        return optimizers.run_rgd(problem, x0, oc, collect_points=collect_points)
    if cfg.optimizer == "ragd":
        mu = resolve_mu(cfg, problem)
        if mu is None or mu <= 0.0:
            raise ConfigError("ragd requires a strong-convexity modulus --mu > 0")
        return optimizers.run_ragd(problem, x0, oc, mu)
    if cfg.optimizer == "ragdsdr-restart":
        witness = make_witness(cfg, problem)
        rcfg = RestartConfig(
            alpha=cfg.alpha, c=cfg.c, f_star=witness.f_star,
            target_eps=cfg.target_eps if cfg.target_eps is not None else cfg.threshold,
        )
        return optimizers.run_restarted(
            problem, x0, oc, rcfg, cfg.diameter, collect_points=collect_points
        )
    if cfg.optimizer == "gurvits":
        return optimizers.run_gurvits(problem, cfg.iters)
    raise ConfigError(f"unknown optimizer {cfg.optimizer!r}")


# ---------------------------------------------------------------------------
# output plumbing

def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".rmom-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=10,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def _instance_hash(problem, cfg: ExperimentConfig) -> str:
    doc = problems.instance_to_dict(problem, cfg.seed, n=cfg.n, cond=cfg.cond)
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def write_manifest(path: str, cfg: ExperimentConfig, problem, trace: Trace,
                   wall_s: float) -> None:
    last = trace.rows[-1] if trace.rows else None
    manifest = {
        "config": asdict(cfg),
        "scale": cfg.scale,
        "git_describe": _git_describe(),
        "instance_hash": _instance_hash(problem, cfg),
        "wall_time_s": wall_s,
        "result": {
            "final_f": last.f_x if last else trace.f_x0,
            "final_grad_norm": last.grad_norm_y if last else 0.0,
            "iterations": trace.steps,
            "restarts": len(trace.restarts),
        },
    }
    _atomic_write(path, json.dumps(manifest, indent=2) + "\n")


def print_constants(constants: CurvatureConstants) -> None:
    print(f"zeta={constants.zeta:.12g}")
    print(f"delta={constants.delta:.12g}")
    print(f"discrepancy={constants.discrepancy:.12g}")
    horizon = "inf" if math.isinf(constants.horizon) else f"{constants.horizon:.12g}"
    print(f"horizon={horizon}")


# ---------------------------------------------------------------------------
# subcommands

def cmd_gen(cfg: ExperimentConfig) -> int:
    problem = build_problem(cfg)
    out = cfg.out or f"{cfg.problem}-{cfg.seed}.json"
    doc = problems.instance_to_dict(problem, cfg.seed, n=cfg.n, cond=cfg.cond)
    _atomic_write(out, json.dumps(doc) + "\n")
    print(f"wrote {out} (kind={cfg.problem}, d={cfg.d}, seed={cfg.seed})")
    return EXIT_OK


def cmd_run(cfg: ExperimentConfig) -> int:
    problem = build_problem(cfg)
    x0 = initial_point(cfg, problem)
    out = cfg.out or "trace.csv"
    t0 = time.perf_counter()
    trace = run_one(cfg, problem, x0, collect_points=cfg.certify)
    wall = time.perf_counter() - t0
    _atomic_write(out, optimizers.trace_csv_text(trace))
    write_manifest(out + ".manifest.json", cfg, problem, trace, wall)
    if cfg.optimizer == "ragdsdr-restart":
        _atomic_write(out + ".restarts.json", json.dumps({"restarts": trace.restarts}) + "\n")
    print(f"wrote {out} ({trace.steps} iterations)")
    if cfg.certify:
        oc, bounds = opt_config(cfg, problem)
        witness = make_witness(cfg, problem)
        cert = certifier.certify_run(
            trace, problem, witness, oc, bounds,
            use_observed_diameter=cfg.observed_diameter, seed=cfg.seed,
        )
        _atomic_write(out + ".certificate.json", json.dumps(cert.to_dict(), indent=2) + "\n")
        print(f"certificate: {cert.verdict}")
        if cert.verdict != "pass":
            return EXIT_CERTIFICATION
    return EXIT_OK


def _metric_series(cfg: ExperimentConfig, trace: Trace, witness) -> list:
    subs = [trace.f_x0 - witness.f_star] + [r.f_x - witness.f_star for r in trace.rows]
    walls = [0] + [r.wall_ns for r in trace.rows]
    return list(zip(range(len(subs)), subs, walls))


def cmd_compare(cfg_list: list) -> int:
    base = cfg_list[0]
    ref = {k: v for k, v in asdict(base).items() if k not in ("optimizer", "mu", "alpha", "c", "out")}
    for other in cfg_list[1:]:
        vals = {k: v for k, v in asdict(other).items() if k not in ("optimizer", "mu", "alpha", "c", "out")}
        if vals != ref:
            raise ConfigError("compare configs must differ only in the optimizer")
    problem = build_problem(base)
    witness = make_witness(base, problem)
    x0 = initial_point(base, problem)
    out = base.out or "compare.csv"

    lines = ["optimizer,k,suboptimality,wall_ns"]
    ds_lines = ["optimizer,k,ds_distance,wall_ns"]
    thresholds = {}
    for cfg in cfg_list:
        trace = run_one(cfg, problem, x0)
        name = cfg.optimizer
        for k, sub, wall in _metric_series(cfg, trace, witness):
            lines.append(f"{name},{k},{sub:.17g},{wall}")
        if trace.ds is not None:
            for k, (ds, wall) in enumerate(zip(trace.ds, [0] + [r.wall_ns for r in trace.rows])):
                ds_lines.append(f"{name},{k},{ds:.17g},{wall}")
        series = trace.ds if (base.problem == "scaling" and trace.ds is not None) else [
            s for _, s, _ in _metric_series(cfg, trace, witness)
        ]
        hit = next((k for k, v in enumerate(series) if v <= base.threshold), None)
        thresholds[name] = hit

    _atomic_write(out, "\n".join(lines) + "\n")
    if len(ds_lines) > 1:
        _atomic_write(out.replace(".csv", "") + "_ds.csv", "\n".join(ds_lines) + "\n")
    metric = "ds_distance" if base.problem == "scaling" else "suboptimality"
    print(f"wrote {out}; iterations to {metric} <= {base.threshold:g}:")
    for name, hit in thresholds.items():
        print(f"  {name}: {hit if hit is not None else 'not reached'}")
    return EXIT_OK


def cmd_certify(cfg: ExperimentConfig) -> int:
    cfg.certify = True
    cfg.validate()
    problem = build_problem(cfg)
    oc, bounds = opt_config(cfg, problem)
    print_constants(oc.curvature)
    x0 = initial_point(cfg, problem)
    trace = run_one(cfg, problem, x0, collect_points=True)
    witness = make_witness(cfg, problem)
    cert = certifier.certify_run(
        trace, problem, witness, oc, bounds,
        use_observed_diameter=cfg.observed_diameter, seed=cfg.seed,
    )
    out = cfg.out or "certificate.json"
    _atomic_write(out, json.dumps(cert.to_dict(), indent=2) + "\n")
    print(f"certificate: {cert.verdict} (wrote {out})")
    return EXIT_OK if cert.verdict == "pass" else EXIT_CERTIFICATION


# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, compare: bool = False) -> None:
    if compare:
        p.add_argument("--optimizer", action="append", choices=OPTIMIZERS,
                       help="repeatable; one run per optimizer")
    else:
        p.add_argument("--optimizer", choices=OPTIMIZERS, default=None)
    p.add_argument("--problem", choices=PROBLEMS, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--cond", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--gs-iters", type=int, default=None, dest="gs_iters")
    p.add_argument("--beta-rule", choices=("search", "nesterov"), default=None, dest="beta_rule")
    p.add_argument("--L", type=float, default=None, dest="lipschitz")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--D", type=float, default=None, dest="diameter")
    p.add_argument("--certify", action="store_true", default=None)
    p.add_argument("--observed-diameter", action="store_true", default=None,
                   dest="observed_diameter")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--target-eps", type=float, default=None, dest="target_eps")
    p.add_argument("--instance", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None, help="TOML config file; flags override")


def _overrides(args: argparse.Namespace) -> dict:
    skip = {"command", "config"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rmom",
        description="Geodesically convex optimization with momentum, plus a run certifier.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, is_cmp in (("gen", False), ("run", False), ("compare", True), ("certify", False)):
        p = sub.add_parser(name)
        _add_common(p, compare=is_cmp)

    args = parser.parse_args(argv)
    try:
        if args.command == "compare":
            opts = args.optimizer or ["rgd", "ragdsdr"]
            over = _overrides(args)
            over.pop("optimizer", None)
            cfgs = [parse_config(args.config, {**over, "optimizer": o}) for o in opts]
            return cmd_compare(cfgs)
        cfg = parse_config(args.config, _overrides(args))
        if args.command == "gen":
            return cmd_gen(cfg)
        if args.command == "run":
            return cmd_run(cfg)
        return cmd_certify(cfg)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as err:
        print(f"numerical abort: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
