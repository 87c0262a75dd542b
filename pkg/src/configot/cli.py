"""Command-line front end: ``configot <command> [options]``.

Every command writes one report (JSON by default, CSV with ``--format csv``)
to ``--out`` or stdout. Exit status is 0 on success or a passing identity
check, 1 when an identity check fails and 2 on bad input. An infinite
distance is a valid answer and exits 0.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .core import Configuration, ExtendedCost
from .distance import (
    barbour_distance,
    combine_by_count,
    cox_distance,
    empirical_process_distance,
    finiteness_gate,
    poisson_coupling_estimate,
    poisson_distance,
    scaled_poisson_distance,
    base_transport,
    shift_bound_check,
    tensorization_check,
)
from .matching import config_cost, cost_matrix
from .processes import (
    BinomialModel,
    CoxModel,
    Intensity,
    PoissonModel,
    count_pmf,
    density_from_json,
    model_from_json,
    sample_cox,
    sample_many,
)

SCHEMA = "config-ot/1"
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


def _load_json(value: str) -> Any:
    try:
        if value.lstrip()[:1] in ("{", "["):
            return json.loads(value)
        with Path(value).open("r", encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON from {value!r}: {exc}") from exc


def _configuration(value: str) -> Configuration:
    obj = _load_json(value)
    if isinstance(obj, list):
        obj = {"points": obj}
    try:
        return Configuration.from_json(obj)
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"bad configuration {value!r}: {exc}") from exc


def _intensity(value: str) -> Intensity:
    obj = _load_json(value)
    try:
        if "density" in obj:
            return Intensity.from_json(obj)
        return Intensity(density_from_json(obj), 1.0)
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"bad intensity {value!r}: {exc}") from exc


def _model(value: str):
    obj = _load_json(value)
    try:
        return model_from_json(obj), obj
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"bad model {value!r}: {exc}") from exc


def _shift(obj: dict) -> Callable[[Any], Any]:
    kind = obj.get("kind")
    if kind == "constant":
        value = np.asarray(obj["value"], dtype=float)
        return lambda x: value + 0.0 * np.asarray(x)
    if kind == "linear":
        scale = float(obj["scale"])
        return lambda x: scale * np.asarray(x, dtype=float)
    if kind == "affine":
        scale, offset = float(obj["scale"]), np.asarray(obj["offset"], dtype=float)
        return lambda x: scale * np.asarray(x, dtype=float) + offset
    raise InputError(f"unknown shift kind {kind!r}")


def _mc_rows(values: np.ndarray, name: str = "cost") -> tuple[list[str], list[list]]:
    running = np.cumsum(values) / np.arange(1, values.size + 1)
    return ["sample", name, "running_mean"], [[i, float(v), float(r)] for i, (v, r) in enumerate(zip(values, running))]


# ------------------------------------------------------------- commands
# Each returns (result dict, passed flag or None, csv header, csv rows).


def cmd_config_dist(args):
    eta, omega = _configuration(args.eta), _configuration(args.omega)
    cost, matching = config_cost(eta, omega)
    result = {"w2": cost.to_json(), "n_eta": eta.n, "n_omega": omega.n}
    rows = []
    if matching is not None:
        result["matching"] = list(matching.permutation)
        if eta.n:
            c = cost_matrix(eta.points, omega.points)
            rows = [[i, j, float(c[i, j])] for i, j in matching.pairs()]
    inputs = {"eta": eta.to_json(), "omega": omega.to_json()}
    return inputs, result, None, ["eta_index", "omega_index", "pair_cost"], rows


def _exact_gate(mu, nu, args):
    p = count_pmf(mu, args.nmax, side=0)
    q = count_pmf(nu, args.nmax, side=1 if isinstance(nu, CoxModel) else 0)
    return finiteness_gate(p, q, args.eps if args.eps is not None else 0.0)


def cmd_process_dist(args):
    mu, mu_obj = _model(args.mu)
    nu, nu_obj = _model(args.nu)
    inputs = {"mu": mu_obj, "nu": nu_obj, "nmax": args.nmax}
    header = ["n", "w2", "weight"]
    gate = _exact_gate(mu, nu, args)
    result: dict[str, Any] = {"gate": gate.to_json()}
    if not gate:
        result["w2"] = "inf"
        result["reason"] = "count laws differ"
        return inputs, result, None, header, []
    rows = []
    if isinstance(mu, PoissonModel) and isinstance(nu, PoissonModel):
        if abs(mu.mass - 1.0) <= 1e-9:
            te2 = poisson_distance(mu, nu, args.grid)
            result.update({"w2": te2, "method": "intensity-transport"})
            if args.samples:
                est = poisson_coupling_estimate(mu, nu, args.samples, args.seed, args.grid)
                result["coupling_estimate"] = est.estimate.to_json()
        else:
            report = scaled_poisson_distance(mu, nu, args.grid)
            result.update(report.to_json())
            result["method"] = "count-decomposition"
            result["experimental"] = True
            rows = [[r.n, r.w2.to_json(), r.weight] for r in report.rows]
    elif isinstance(mu, BinomialModel) and isinstance(nu, BinomialModel):
        te2 = base_transport(mu.density, nu.density, args.grid).cost
        report = combine_by_count({mu.n: mu.n * te2} if mu.n else {}, count_pmf(mu, args.nmax))
        result.update(report.to_json())
        result["method"] = "count-decomposition"
        rows = [[r.n, r.w2.to_json(), r.weight] for r in report.rows]
    elif isinstance(mu, CoxModel) and isinstance(nu, CoxModel):
        raise InputError("use the cox command with a single joint mixture model")
    else:
        if not args.samples:
            raise InputError("mixed model types need --samples for the empirical estimator")
        a = sample_many(mu, args.seed, args.samples)
        b = sample_many(nu, args.seed + 1, args.samples)
        report = empirical_process_distance(a, b, args.eps)
        result.update(report.to_json())
        result["method"] = "empirical"
        rows = [[r.n, r.w2.to_json(), r.weight] for r in report.rows]
    return inputs, result, None, header, rows


def cmd_poisson_identity(args):
    s1, s2 = _intensity(args.sigma1), _intensity(args.sigma2)
    est = poisson_coupling_estimate(s1, s2, args.samples, args.seed, args.grid)
    result = {"w2_closed_form": est.base_cost, **est.estimate.to_json(), "estimate": est.estimate.mean}
    header, rows = _mc_rows(est.values)
    return {"sigma1": s1.to_json(), "sigma2": s2.to_json()}, result, est.identity, header, rows


def cmd_tensorization(args):
    s1, s2 = _intensity(args.sigma1), _intensity(args.sigma2)
    ns = [int(x) for x in args.strata.split(",")]
    rep = tensorization_check(s1, s2, ns, args.samples, args.seed, args.grid)
    rows = [[r.n, r.per_point, r.se] for r in rep.rows]
    inputs = {"sigma1": s1.to_json(), "sigma2": s2.to_json(), "strata": ns}
    return inputs, rep.to_json(), rep.passed, ["n", "w2_per_point", "se"], rows


def cmd_barbour(args):
    s1, s2 = _intensity(args.sigma1), _intensity(args.sigma2)
    res = barbour_distance(s1, s2, args.nmax, args.grid)
    tol = args.eps if args.eps is not None else 1e-9
    result = {**res.to_json(), "tolerance": tol}
    rows = [[r.n, r.w2.to_json(), r.weight] for r in res.decomposition.rows]
    inputs = {"sigma1": s1.to_json(), "sigma2": s2.to_json(), "nmax": args.nmax}
    return inputs, result, bool(res.discrepancy <= tol), ["n", "w2", "weight"], rows


def cmd_cox(args):
    model, obj = _model(args.model)
    if not isinstance(model, CoxModel):
        raise InputError("cox needs a model of type 'cox'")
    est = cox_distance(model, args.samples, args.seed, args.grid)
    result = est.to_json()
    rows = []
    if not est.infinite:
        rows = [[i, float(v), float(v * v)] for i, v in enumerate(est.values)]
    return {"model": obj}, result, None, ["sample", "te", "te2"], rows


def cmd_shift_bound(args):
    model, obj = _model(args.model)
    if not isinstance(model, PoissonModel):
        raise InputError("shift-bound needs a Poisson model")
    shift_obj = _load_json(args.shift)
    res = shift_bound_check(model, _shift(shift_obj), args.samples, args.seed)
    header, rows = _mc_rows(res.values)
    return {"model": obj, "shift": shift_obj}, res.to_json(), res.passed, header, rows


def cmd_sample(args):
    model, obj = _model(args.model)
    if isinstance(model, CoxModel):
        draws = [sample_cox(model, args.seed, i) for i in range(args.samples)]
        configs = {"eta": [d.eta.to_json() for d in draws], "omega": [d.omega.to_json() for d in draws]}
        rows = [[i, side, k, *map(float, p)] for i, d in enumerate(draws) for side, c in (("eta", d.eta), ("omega", d.omega)) for k, p in enumerate(c.points)]
        header = ["sample", "side", "point_index", "coords"]
        return {"model": obj}, {"configurations": configs}, None, header, rows
    configs = sample_many(model, args.seed, args.samples)
    rows = [[i, k, *map(float, p)] for i, c in enumerate(configs) for k, p in enumerate(c.points)]
    return {"model": obj}, {"configurations": [c.to_json() for c in configs]}, None, ["sample", "point_index", "coords"], rows


COMMANDS = {
    "config-dist": cmd_config_dist,
    "process-dist": cmd_process_dist,
    "poisson-identity": cmd_poisson_identity,
    "tensorization": cmd_tensorization,
    "barbour": cmd_barbour,
    "cox": cmd_cox,
    "shift-bound": cmd_shift_bound,
    "sample": cmd_sample,
}

STOCHASTIC = {"poisson-identity", "tensorization", "cox", "shift-bound", "sample"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--samples", type=int, default=None, help="Monte-Carlo sample size (command default if omitted)")
    common.add_argument("--nmax", type=int, default=20, help="count truncation N_max (default 20)")
    common.add_argument("--eps", type=float, default=None, help="gate or agreement tolerance (command default if omitted)")
    common.add_argument("--grid", type=int, default=1024, help="quantile grid size M for 1-D transport (default 1024)")
    common.add_argument("--out", type=Path, default=None, help="report path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="report format (default json)")

    parser = argparse.ArgumentParser(prog="configot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("config-dist", parents=[common], help="cost between two configurations")
    p.add_argument("--eta", required=True, help='configuration JSON, e.g. {"points": [[0], [1]]}')
    p.add_argument("--omega", required=True)

    p = sub.add_parser("process-dist", parents=[common], help="distance between two point-process models")
    p.add_argument("--mu", required=True, help="model JSON or path")
    p.add_argument("--nu", required=True)

    for name, help_text in (
        ("poisson-identity", "Poisson coupling estimate vs intensity transport cost"),
        ("tensorization", "per-point empirical OT across atom counts"),
        ("barbour", "count-normalized cost: decomposition vs closed form"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--sigma1", required=True, help='density JSON, e.g. {"kind": "uniform", "a": 0, "b": 1}')
        p.add_argument("--sigma2", required=True)
        if name == "tensorization":
            p.add_argument("--strata", default="1,2,3", help="comma-separated atom counts (default 1,2,3)")

    p = sub.add_parser("cox", parents=[common], help="Cox mixture: average intensity distance")
    p.add_argument("--model", required=True)

    p = sub.add_parser("shift-bound", parents=[common], help="shifted Poisson process vs energy bound")
    p.add_argument("--model", required=True)
    p.add_argument("--shift", required=True, help='{"kind": "constant", "value": 0.1} or {"kind": "linear", "scale": 0.1}')

    p = sub.add_parser("sample", parents=[common], help="draw configurations from a model")
    p.add_argument("--model", required=True)
    return parser


DEFAULT_SAMPLES = {"poisson-identity": 100000, "tensorization": 500, "cox": 10000, "shift-bound": 100000, "sample": 10}


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, ExtendedCost):
        return obj.to_json()
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return "inf" if math.isinf(v) and v > 0 else v
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def render(report: dict, header: list[str], rows: list[list], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header and header[-1] == "coords":
        width = max((len(r) for r in rows), default=len(header))
        extra = width - (len(header) - 1)
        header = header[:-1] + [f"x{i}" for i in range(max(extra, 1))]
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.samples is None:
        args.samples = DEFAULT_SAMPLES.get(args.command, 0)
    if args.command in STOCHASTIC and args.samples <= 0:
        print(f"configot: {args.command} needs --samples > 0", file=sys.stderr)
        return EXIT_INPUT
    try:
        inputs, result, passed, header, rows = COMMANDS[args.command](args)
    except (InputError, ValueError, TypeError, KeyError) as exc:
        print(f"configot: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report: dict[str, Any] = {
        "schema": SCHEMA,
        "command": args.command,
        "inputs": inputs,
        "seed": args.seed,
        "result": result,
    }
    if args.command in STOCHASTIC or args.samples:
        report["samples"] = args.samples
    if passed is not None:
        report["pass"] = bool(passed)
    text = render(report, header, rows, args.format)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8")
    if passed is False:
        return EXIT_FAIL
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
