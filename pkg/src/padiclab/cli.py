"""Command-line front door.

    padiclab <command> --config run.json --out DIR [--seed N] [--workers N] [--set key=value ...]

Each command reads a JSON config, computes everything in memory and only
then writes its files, so a validation error leaves the output directory
untouched.  Exit codes: 0 success, 2 invalid input, 3 precision exhausted,
4 budget exhausted (partial results written and flagged).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

from . import dynamics, exponents, exterior, lab
from .core import PAdicScalar, Prime, format_mag, parse_scalar, parse_vector, sample_padic
from .errors import BudgetExceeded, PadicLabError, PrecisionExhausted

EXIT_OK, EXIT_INVALID, EXIT_PRECISION, EXIT_BUDGET = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


class Partial(Exception):
    """Raised after a command has produced flagged partial output."""

    def __init__(self, files: dict[str, str]):
        super().__init__("budget exhausted")
        self.files = files


# -- config helpers ----------------------------------------------------------------


def _get(cfg: dict, key: str, kind: Callable | None = None, default: Any = ...):
    if key not in cfg:
        if default is ...:
            raise ConfigError(f"missing config key '{key}'")
        return default
    val = cfg[key]
    if kind is None:
        return val
    try:
        return kind(val)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for '{key}': {val!r}") from exc


def _prime(cfg: dict) -> int:
    try:
        return int(Prime(_get(cfg, "p", int)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _vector(cfg: dict, key: str, p: int) -> tuple[PAdicScalar, ...]:
    raw = _get(cfg, key)
    if isinstance(raw, list):
        raw = ",".join(str(x) for x in raw)
    if not isinstance(raw, str):
        raise ConfigError(f"'{key}' must be a string or a list")
    return parse_vector(raw, p)


def _matrix(cfg: dict, key: str, p: int) -> list[list[PAdicScalar]]:
    raw = _get(cfg, key)
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"'{key}' must be a nonempty list of rows")
    rows = []
    for row in raw:
        if isinstance(row, str):
            rows.append(list(parse_vector(row, p)))
        elif isinstance(row, list):
            rows.append([parse_scalar(str(c), p) for c in row])
        else:
            raise ConfigError(f"bad row in '{key}': {row!r}")
    if any(len(r) != len(rows[0]) for r in rows):
        raise ConfigError(f"'{key}' rows differ in length")
    return rows


def _seed(cfg: dict, args) -> int:
    seed = args.seed if args.seed is not None else cfg.get("seed")
    if seed is None:
        raise ConfigError("this command is stochastic; pass --seed or set 'seed'")
    try:
        seed = int(seed)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad seed {seed!r}") from exc
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return seed


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, tuple):
        return list(x)
    return str(x)


def _fnum(x: float) -> str:
    if x == float("inf"):
        return "inf"
    if x == float("-inf"):
        return "-inf"
    return f"{x:.12f}"


# -- commands ----------------------------------------------------------------------


def cmd_exponent(cfg: dict, args) -> dict[str, str]:
    p = _prime(cfg)
    bound = _get(cfg, "bound", Fraction)
    kinds = _get(cfg, "kind", str, "both")
    kinds = exponents.KINDS if kinds == "both" else (kinds,)
    if any(k not in exponents.KINDS for k in kinds):
        raise ConfigError(f"kind must be one of {exponents.KINDS} or 'both'")
    if "A" in cfg:
        A = _matrix(cfg, "A", p)
        make = lambda kind: exponents.matrix_profile(A, kind, bound, p)  # noqa: E731
    else:
        y = _vector(cfg, "y", p)
        make = lambda kind: exponents.best_profile(y, kind, bound, p)  # noqa: E731
    files, summary = {}, {"p": p, "bound": str(bound), "estimates": {}}
    for kind in kinds:
        prof = make(kind)
        files[f"profile_{kind}.csv"] = exponents.profile_to_csv(prof)
        est = exponents.estimate_exponent(prof) if prof.records else None
        summary["estimates"][kind] = {
            "value": _fnum(est.value) if est else None,
            "records": len(prof.records),
            "search_bound": str(prof.search_bound),
            "precision_exhausted": prof.precision_exhausted,
            "lower_bound_certified": est.lower_bound_certified if est else False,
        }
    files["estimate.json"] = _json(summary)
    return files


def cmd_flow(cfg: dict, args) -> dict[str, str]:
    p = _prime(cfg)
    y = _vector(cfg, "y", p)
    if "t" in cfg:
        ts = [Fraction(str(t)) for t in _get(cfg, "t", list)]
    else:
        ts = list(range(0, _get(cfg, "t_max", int) + 1))
    budget = _get(cfg, "budget", int, None)
    traj = dynamics.delta_trajectory(y, ts, budget, p)
    files = {"trajectory.csv": dynamics.trajectory_to_csv(traj)}
    if not traj.complete:
        raise Partial(files)
    return files


def _random_instance(rng, p: int, t_max: int):
    n = rng.randint(1, 3)
    j = rng.randint(1, n + 1)
    y = [sample_padic(p, 60, rng) for _ in range(n)]
    while True:
        basis = [[Fraction(rng.randint(-6, 6), p ** rng.randint(0, 2)) for _ in range(n + 1)] for _ in range(j)]
        try:
            return exterior.Submodule.of(basis, p), y, rng.randint(0, t_max)
        except ValueError:
            continue


def cmd_covolume(cfg: dict, args) -> dict[str, str]:
    p = _prime(cfg)
    rows = []
    if "instances" in cfg and isinstance(cfg["instances"], list):
        insts = []
        for item in cfg["instances"]:
            basis = [[parse_scalar(str(c), p).value for c in b] for b in _get(item, "basis", list)]
            insts.append((exterior.Submodule.of(basis, p), list(_vector(item, "y", p)), _get(item, "t", int)))
    else:
        rng = lab.trial_rng(_seed(cfg, args), "covolume", 0)
        insts = [_random_instance(rng, p, _get(cfg, "t_max", int, 12)) for _ in range(_get(cfg, "instances", int, 100))]
    for i, (sub, y, t) in enumerate(insts):
        w = sub.plucker
        f = exterior.cov_formula(w, y, t)
        o = exterior.cov_oracle(sub, y, t)
        rows.append([i, w.n, w.j, t, format_mag(f), format_mag(o), str(f == o).lower()])
    return {"covolume.csv": _csv(["index", "n", "j", "t", "formula", "oracle", "equal"], rows)}


def _subspace_param(cfg: dict) -> exterior.SubspaceParam:
    p = _prime(cfg)
    n, s = _get(cfg, "n", int), _get(cfg, "s", int)
    A = _matrix(cfg, "A", p)
    return exterior.SubspaceParam(p, n, s, tuple(map(tuple, A)))


def cmd_subspace(cfg: dict, args) -> dict[str, str]:
    L = _subspace_param(cfg)
    bound = _get(cfg, "bound", Fraction)
    files, rows, vals = {}, [], []
    for j in range(1, L.n - L.s + 1):
        est = exterior.wjp_estimate(L, j, bound)
        vals.append(est.value)
        rows.append([j, _fnum(est.value), _fnum(est.value_decomposable), len(est.witnesses)])
        files[f"witnesses_j{j}.csv"] = exterior.witnesses_to_csv(est)
    files["wjp.csv"] = _csv(["j", "value", "value_decomposable", "witnesses"], rows)
    files["subspace.json"] = _json(
        {
            "param": json.loads(L.to_json()),
            "bound": str(bound),
            "w_p_L": _fnum(max([float(L.n)] + vals)),
            "pidot_constant": str(exterior.pidot_constant(L)),
        }
    )
    return files


def cmd_verify(cfg: dict, args) -> dict[str, str]:
    p = _prime(cfg)
    y = _vector(cfg, "y", p)
    v = _get(cfg, "v", Fraction)
    rep = dynamics.verify_correspondence(
        y, v, _get(cfg, "t_max", int), _get(cfg, "height_bound", Fraction), p, _get(cfg, "budget", int, None)
    )
    out = {
        "v": str(rep.v),
        "c": str(rep.c),
        "ok": rep.ok,
        "failures": rep.failures,
        "side1": [
            {"witness": list(e["witness"]), "x": str(e["x"]), "H": str(e["H"]), "t": _fnum(e["t"]), "holds": e["side2_holds"]}
            for e in rep.side1
        ],
        "side2": [
            {"t": e["t"], "delta": format_mag(e["delta"]), "witness": list(e["witness"]), "x": str(e["x"]), "H": str(e["H"]), "holds": e["side1_holds"]}
            for e in rep.side2
        ],
    }
    return {"correspondence.json": _json(out)}


def _polymap(desc) -> lab.PolyMap:
    if not isinstance(desc, dict):
        raise ConfigError("'map' must be an object")
    if "veronese" in desc:
        return lab.PolyMap.veronese(int(desc["veronese"]))
    if "constant" in desc:
        return lab.PolyMap.constant([Fraction(str(c)) for c in desc["constant"]])
    if "components" in desc:
        d = int(desc.get("d", 1))
        comps = []
        for comp in desc["components"]:
            comps.append({tuple(int(e) for e in str(k).split(",")): Fraction(str(c)) for k, c in comp.items()})
        return lab.PolyMap(d, tuple(comps))
    raise ConfigError("'map' needs one of veronese, constant, components")


def cmd_lab(cfg: dict, args) -> dict[str, str]:
    p = _prime(cfg)
    seed = _seed(cfg, args)
    exp = _get(cfg, "experiment", str)
    f = _polymap(_get(cfg, "map"))
    workers = args.workers
    if exp == "good_fit":
        eps = [Fraction(str(e)) for e in cfg["epsilons"]] if "epsilons" in cfg else None
        ball = _get(cfg, "ball", list, [0, 0])
        fit = lab.good_fit(f, (parse_scalar(str(ball[0]), p), int(ball[1])), _get(cfg, "samples", int, 1000), eps, seed, p)
        return {"good_fit.json": _json(fit.to_dict() | {"seed": seed})}
    if exp == "qnd":
        eps = [Fraction(str(e)) for e in cfg["epsilons"]] if "epsilons" in cfg else None
        rep = lab.qnd_empirical(
            f, _get(cfg, "t", int), eps, _get(cfg, "trials", int), _get(cfg, "budget", int, None), seed, p, workers=workers
        )
        files = {"qnd.json": rep.to_json()}
        if rep.excluded:
            raise Partial(files)
        return files
    if exp == "pushforward":
        summ = lab.pushforward_exponent_mc(
            f, _get(cfg, "trials", int), _get(cfg, "bound", Fraction), seed, p, _get(cfg, "kind", str, "Zp"), workers=workers
        )
        return {"pushforward.json": _json(summ.to_dict())}
    raise ConfigError("experiment must be good_fit, qnd or pushforward")


COMMANDS = {
    "exponent": cmd_exponent,
    "flow": cmd_flow,
    "covolume": cmd_covolume,
    "subspace": cmd_subspace,
    "verify": cmd_verify,
    "lab": cmd_lab,
}


# -- entry point -------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="padiclab", description="p-adic Diophantine exponents and lattice dynamics")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="JSON run config")
    ap.add_argument("--out", type=Path, default=Path("."), help="output directory")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key (value parsed as JSON)")
    return ap


def _load_config(args) -> dict:
    cfg: dict = {}
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set needs KEY=VALUE, got {item!r}")
        try:
            cfg[key] = json.loads(val)
        except json.JSONDecodeError:
            cfg[key] = val
    return cfg


def _write(out: Path, files: dict[str, str]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(files.items()):
        with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        files = COMMANDS[args.command](cfg, args)
    except Partial as part:
        _write(args.out, part.files)
        print("budget exhausted; partial output written", file=sys.stderr)
        return EXIT_BUDGET
    except BudgetExceeded as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except PrecisionExhausted as exc:
        print(f"precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (ConfigError, PadicLabError, ValueError, KeyError, TypeError, ZeroDivisionError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _write(args.out, files)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
