"""Command-line entry point: index and measure tables, convergence sweeps, verification, simulation.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from typing import Sequence

import numpy as np

from .bandit_sim import ArmSpec, EpisodeConfig, Policy, compare_policies
from .errors import ConfigError, NumericalError
from .gittins import GittinsEvaluator, Problem, convergence_sweep
from .levy import LevyModel, Orientation, RewardSpec
from .verify import run_suite

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def fmt(v) -> str:
    """17 significant digits, so identical runs give byte-identical files."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return f"{v:.17g}"


def _json_value(v) -> str:
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    s = fmt(v)
    return s if s not in ("nan", "inf", "-inf") else json.dumps(s)


class Table:
    def __init__(self, columns: Sequence[str], rows, meta: dict | None = None, notes: Sequence[str] = ()):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.meta = dict(meta or {})
        self.notes = list(notes)

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        lines += [",".join(fmt(v) for v in row) for row in self.rows]
        if self.meta:
            body = ", ".join(f"{json.dumps(k)}: {_json_value(v)}" for k, v in self.meta.items())
            lines.append("# {" + body + "}")
        lines += [f"# {n}" for n in self.notes]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        rows = ",\n    ".join("[" + ", ".join(_json_value(v) for v in row) + "]" for row in self.rows)
        parts = [f'  "columns": {json.dumps(self.columns)}', f'  "rows": [\n    {rows}\n  ]' if rows else '  "rows": []']
        parts += [f"  {json.dumps(k)}: {_json_value(v)}" for k, v in self.meta.items()]
        if self.notes:
            parts.append(f'  "notes": {json.dumps(self.notes)}')
        return "{\n" + ",\n".join(parts) + "\n}\n"

    def render(self, kind: str) -> str:
        return self.to_json() if kind == "json" else self.to_csv()


# --- argument parsing --------------------------------------------------------
def _load_json(text: str, what: str):
    text = text.strip()
    if not text.startswith(("{", "[")):
        if not os.path.exists(text):
            raise ConfigError(f"{what}: no such file {text!r}")
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def parse_model(text: str | None, orientation: str | None = None) -> LevyModel:
    if text is None:
        raise ConfigError("missing --model")
    model = LevyModel.from_dict(_load_json(text, "--model"))
    if orientation:
        try:
            model = model.with_orientation(Orientation(orientation))
        except ValueError:
            raise ConfigError(f"unknown orientation {orientation!r}") from None
    return model


def parse_reward(text: str | None, problem: Problem) -> RewardSpec:
    if text is None:
        raise ConfigError("missing --reward")
    role = "R" if problem is Problem.P1 else "r"
    head, _, rest = text.partition(":")
    if head.strip() == "affine" and rest:
        try:
            a, b = (float(v) for v in rest.split(","))
        except ValueError:
            raise ConfigError("reward shorthand must be affine:a,b") from None
        return RewardSpec.affine(a, b, role=role)
    return RewardSpec.from_dict(_load_json(text, "--reward"), role=role)


def parse_range(text: str) -> np.ndarray:
    """``start:stop:step`` with ``stop`` included when it lies on the grid."""
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError(f"range must be start:stop:step, got {text!r}") from None
    if not step > 0:
        raise ConfigError("range step must be > 0")
    if stop < start:
        raise ConfigError("range stop must be >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def parse_lambdas(text: str | None) -> list[float]:
    if text is None:
        raise ConfigError("missing --lambda")
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--lambda must be a number or comma list, got {text!r}") from None
    if not vals or any(not v > 0 for v in vals):
        raise ConfigError("--lambda values must be > 0")
    return vals


def _positive(value, name):
    if value is None:
        raise ConfigError(f"missing --{name}")
    if not value > 0:
        raise ConfigError(f"--{name} must be > 0")
    return value


def _problem(args) -> Problem:
    return Problem(int(args.problem))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poissongittins", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=True):
        if model:
            p.add_argument("--model", help="model JSON file or inline JSON")
            p.add_argument("--orientation", choices=["sn", "sp"], help="override the model orientation")
        p.add_argument("--reward", help="reward JSON file, inline JSON, or affine:a,b")
        p.add_argument("--q", type=float, help="discount rate")
        p.add_argument("--lambda", dest="lam", help="Poisson epoch rate (comma list for converge)")
        p.add_argument("--problem", choices=["1", "2"], default="1")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("index", help="Gittins index table")
    common(p)
    p.add_argument("--x", default="-2:2:0.5", help="state range start:stop:step")

    p = sub.add_parser("measure", help="index measure table")
    common(p)
    p.add_argument("--x", help="grid of y values start:stop:step")

    p = sub.add_parser("converge", help="sup-distance to the classical measure over a lambda list")
    common(p)
    p.add_argument("--theta", help="theta grid start:stop:step (default 0:10 for P1, -10:10 for P2)")

    p = sub.add_parser("verify", help="identity and Monte Carlo verification suites")
    common(p, model=False)
    p.add_argument("--suite", choices=["transforms", "oracle", "all"], default="transforms")
    p.add_argument("--n-paths", type=int, default=100_000)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("simulate", help="empirical comparison of bandit policies")
    common(p)
    p.add_argument("--arms", help="arms JSON file or inline JSON")
    p.add_argument("--policy", default="gittins,greedy,roundrobin,random")
    p.add_argument("--episodes", type=int, default=10_000)
    return parser


# --- subcommands ---------------------------------------------------------------
def cmd_index(args) -> tuple[Table, int]:
    problem = _problem(args)
    model = parse_model(args.model, args.orientation)
    reward = parse_reward(args.reward, problem)
    q = _positive(args.q, "q")
    lam = _positive(_single_lambda(args.lam), "lambda")
    xs = parse_range(args.x)
    ev = GittinsEvaluator(model, reward, q, lam, problem)
    gam = np.atleast_1d(ev.gittins_index(xs))
    return Table(["x", "gamma"], zip(xs, gam)), EXIT_OK


def cmd_measure(args) -> tuple[Table, int]:
    problem = _problem(args)
    model = parse_model(args.model, args.orientation)
    reward = parse_reward(args.reward, problem) if args.reward else RewardSpec.affine(0.0, 1.0)
    q = _positive(args.q, "q")
    lam = _positive(_single_lambda(args.lam), "lambda")
    default = "0:10:0.5" if problem is Problem.P1 else "-10:10:0.5"
    ys = parse_range(args.x or default)
    m = GittinsEvaluator(model, reward, q, lam, problem).index_measure
    rows = []
    if m.atom_at_zero > 0:
        rows.append([0.0, 1, m.atom_at_zero])
    rows += [[y, 0, d] for y, d in zip(ys, np.atleast_1d(m.density(ys)))]
    return Table(["y", "atom_flag", "density"], rows, meta={"total_mass": m.total_mass()}), EXIT_OK


def cmd_converge(args) -> tuple[Table, int]:
    problem = _problem(args)
    model = parse_model(args.model, args.orientation)
    reward = parse_reward(args.reward, problem) if args.reward else RewardSpec.affine(0.0, 1.0)
    q = _positive(args.q, "q")
    lams = parse_lambdas(args.lam)
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ConfigError("--lambda list must be strictly ascending")
    thetas = parse_range(args.theta) if args.theta else None
    rows = convergence_sweep(model, reward, q, lams, problem, thetas)
    return Table(["lambda", "sup_distance"], [[r.lam, r.sup_distance] for r in rows]), EXIT_OK


def cmd_verify(args) -> tuple[Table, int]:
    if args.n_paths < 100:
        raise ConfigError("--n-paths must be >= 100")
    report = run_suite(args.suite, n_paths=args.n_paths, seed=args.seed, workers=args.workers)
    rows = [[c.name, c.error, c.tolerance, c.passed] for c in report.checks]
    failed = [f"{c.name}: error={fmt(c.error)} tolerance={fmt(c.tolerance)}" for c in report.failed()]
    meta = {"suite": report.suite, "passed": report.passed, "failed": failed}
    table = Table(["check", "error", "tolerance", "passed"], rows, meta=meta)
    return table, EXIT_OK if report.passed else EXIT_VERIFY


def _arms_config(args):
    problem = _problem(args)
    data = _load_json(args.arms, "--arms") if args.arms else None
    if data is None:
        # a single-arm instance from --model/--reward
        arms = [ArmSpec(parse_model(args.model, args.orientation), parse_reward(args.reward, problem))]
        data = {}
    else:
        if not isinstance(data, dict) or "arms" not in data:
            raise ConfigError("arms descriptor missing field 'arms'")
        role = "R" if problem is Problem.P1 else "r"
        arms = [ArmSpec.from_dict(a, role) for a in data["arms"]]
        if args.orientation:
            arms = [ArmSpec(a.model.with_orientation(args.orientation), a.reward, a.x0) for a in arms]
    q = args.q if args.q is not None else data.get("q")
    lam = _single_lambda(args.lam) if args.lam is not None else data.get("lambda")
    q = _positive(None if q is None else float(q), "q")
    lam = _positive(None if lam is None else float(lam), "lambda")
    return EpisodeConfig(arms, q, lam, Policy.GITTINS, problem, seed=args.seed)


def cmd_simulate(args) -> tuple[Table, int]:
    config = _arms_config(args)
    policies = [Policy.parse(p) for p in args.policy.split(",") if p.strip()]
    if not policies:
        raise ConfigError("--policy list is empty")
    if args.episodes < 100:
        raise ConfigError("--episodes must be >= 100")
    report = compare_policies(config, args.episodes, policies)
    rows = [[r.policy, r.mean, r.std_error, r.n_episodes] for r in report.results]
    n = args.episodes
    for i, a in enumerate(policies):
        for b in policies[i + 1 :]:
            d = report.difference(a, b)
            rows.append([f"{d.policy}-minus-{d.baseline}", d.mean_difference, d.std_error, n])
    notes = ["empirical comparison on common random numbers; no optimality claim is made"]
    return Table(["policy", "mean", "std_error", "n_episodes"], rows, notes=notes), EXIT_OK


def _single_lambda(text):
    if text is None:
        return None
    vals = parse_lambdas(text)
    if len(vals) != 1:
        raise ConfigError("this subcommand takes a single --lambda value")
    return vals[0]


COMMANDS = {
    "index": cmd_index,
    "measure": cmd_measure,
    "converge": cmd_converge,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
}


_VALUE_FLAGS = ("--x", "--theta", "--lambda", "--reward", "--q")


def _glue_negative_values(argv):
    """Rewrite ``--x -1:1:0.5`` as ``--x=-1:1:0.5`` so argparse accepts negative values."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            if nxt is None:
                out.append(tok)
            elif nxt.startswith("-") and nxt[1:2] and (nxt[1].isdigit() or nxt[1] == "."):
                out.append(f"{tok}={nxt}")
            else:
                out += [tok, nxt]
        else:
            out.append(tok)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(_glue_negative_values(list(sys.argv[1:] if argv is None else argv)))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            table, code = COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = table.render(args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
