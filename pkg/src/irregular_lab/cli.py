"""Command-line experiment runner (``lab``).

Every subcommand builds an experiment config (a plain dict), validates it
against a JSON schema and hands it to :func:`run_experiment`, which returns a
:class:`ReportBundle`. The bundle is written atomically: JSON results, CSV
traces and, for trace-producing operations, SVG/PNG figures next to the CSV.

Exit codes: 0 success, 2 config error, 3 numeric or construction failure.
Seed precedence: ``--seed`` flag, then ``LAB_SEED``, then the config value.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from . import __version__

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

SAMPLING_OPS = {
    "synth.irregular",
    "synth.jointly",
    "synth.saturated",
    "synth.gmax",
    "synth.family",
    "demo.section4",
}

OPERATIONS = sorted(
    SAMPLING_OPS
    | {
        "space.info",
        "beta.kneading",
        "measure.integrate",
        "trace",
        "pressure.transfer",
        "pressure.cylinder",
        "pressure.bsdim",
        "pressure.beta",
        "verify.all",
    }
)

_SPACE = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["full", "sft", "beta"]},
        "k": {"type": "integer", "minimum": 2},
        "transition": {
            "type": "array",
            "items": {"type": "array", "items": {"enum": [0, 1]}},
        },
        "beta": {"type": "string"},
        "kneading_depth": {"type": "integer", "minimum": 1},
        "precision_bits": {"type": "integer", "minimum": 64},
    },
}

_MEASURE = {
    "type": "object",
    "required": ["type"],
    "properties": {"type": {"enum": ["periodic", "markov", "bernoulli", "parry", "mixture"]}},
}

_OBSERVABLE = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["locally_constant", "trig", "constant"]},
        "range": {"type": "integer", "minimum": 1},
        "table": {"type": "object", "additionalProperties": {"type": "number"}},
        "kind": {"enum": ["sin", "cos"]},
        "frequency": {"type": "integer", "minimum": 1},
        "value": {"type": "number"},
        "id": {"type": "string"},
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["operation"],
    "properties": {
        "operation": {"enum": OPERATIONS},
        "space": _SPACE,
        "measures": {"type": "array", "items": _MEASURE},
        "observables": {"type": "array", "items": _OBSERVABLE},
        "schedule": {
            "oneOf": [
                {"const": "default"},
                {
                    "type": "object",
                    "properties": {
                        "initial_length": {"type": "integer", "minimum": 1},
                        "growth": {"oneOf": [{"const": "default"}, {"type": "number", "minimum": 1}]},
                        "tol0": {"type": "number", "exclusiveMinimum": 0},
                        "tol_decay": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                        "tol_floor": {"type": "number", "exclusiveMinimum": 0},
                        "horizon_cap": {"type": ["integer", "null"], "minimum": 1},
                        "depth": {"type": "integer", "minimum": 1},
                    },
                    "additionalProperties": False,
                },
            ]
        },
        "point": {"type": "object", "required": ["type"]},
        "horizon": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "checkpoints": {"type": ["string", "array"]},
        "beta": {"type": "string"},
        "digits": {"type": "integer", "minimum": 1},
        "precision_bits": {"type": ["integer", "null"], "minimum": 64},
        "n": {"type": "integer", "minimum": 1},
        "n_list": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "free_fraction": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "block_len": {"type": "integer", "minimum": 20},
        "eps0": {"type": "number", "exclusiveMinimum": 0},
        "close_periodic": {"type": "boolean"},
        "checks": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 9}},
        "out": {"type": "array", "items": {"type": "string"}},
    },
    "allOf": [
        {
            "if": {"properties": {"operation": {"enum": sorted(SAMPLING_OPS)}}},
            "then": {"required": ["seed"]},
        }
    ],
}


class ConfigError(ValueError):
    """Invalid experiment configuration; carries field-level diagnostics."""

    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


@dataclass
class ReportBundle:
    results: dict
    traces: list = field(default_factory=list)  # rows (checkpoint, observable_id, average)
    summary: str = ""
    provenance: dict = field(default_factory=dict)
    trace_obj: object = None
    expected: dict | None = None
    plan: object = None
    failed: bool = False

    def to_json(self) -> str:
        return json.dumps(
            {"provenance": self.provenance, "results": self.results},
            indent=2,
            sort_keys=True,
            default=_json_default,
        )

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["checkpoint", "observable_id", "average"])
        for c, name, a in self.traces:
            w.writerow([c, name, repr(float(a))])
        return buf.getvalue()


def _json_default(o):
    import numpy as np

    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


# ---------------------------------------------------------------------------
# config handling


def validate_config(config: dict) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        diags = []
        for e in errors:
            where = "config" + "".join(f"[{p!r}]" if isinstance(p, int) else f".{p}" for p in e.absolute_path)
            msg = e.message
            if e.validator == "required" and e.instance.get("operation") in SAMPLING_OPS and "seed" in msg:
                msg = f"{msg} (seed is mandatory for sampling operations; use --seed or LAB_SEED)"
            diags.append(f"{where}: {msg}")
        raise ConfigError(diags)


def resolve_seed(config: dict, flag: int | None = None, env=None) -> dict:
    """Apply the seed precedence ``flag > LAB_SEED > config``."""
    env = os.environ if env is None else env
    out = dict(config)
    if flag is not None:
        out["seed"] = int(flag)
    elif env.get("LAB_SEED", "").strip():
        try:
            out["seed"] = int(env["LAB_SEED"])
        except ValueError:
            raise ConfigError(f"LAB_SEED: not an integer: {env['LAB_SEED']!r}") from None
    return out


def config_hash(config: dict) -> str:
    body = {k: v for k, v in config.items() if k != "out"}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _build(what: str, fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"config.{what}: {exc}") from exc


def _space(config):
    from .symbolic import make_space

    if "space" not in config:
        raise ConfigError("config.space: required for this operation")
    return _build("space", make_space, config["space"])


def _measures(config, space):
    from .measures import measure_from_dict

    ms = config.get("measures") or []
    return [_build(f"measures[{i}]", measure_from_dict, space, d) for i, d in enumerate(ms)]


def _observables(config, k):
    from .observables import observable_from_dict

    obs = config.get("observables") or []
    out = []
    for i, d in enumerate(obs):
        default = d.get("id") or f"obs{i}"
        out.append(_build(f"observables[{i}]", observable_from_dict, d, k, default))
    return out


def _schedule(config, **defaults):
    from .synthesis import BlockSchedule

    sch = config.get("schedule", "default")
    if sch == "default":
        return BlockSchedule(**defaults)
    return _build("schedule", BlockSchedule.from_dict, {**defaults, **sch})


def _need(config, key, op):
    if key not in config:
        raise ConfigError(f"config.{key}: required for {op}")
    return config[key]


def _require_count(items, n, what, op, exact=False):
    if (exact and len(items) != n) or len(items) < n:
        raise ConfigError(f"config.{what}: {op} needs {'exactly' if exact else 'at least'} {n}")


# ---------------------------------------------------------------------------
# operations


def _op_space_info(config):
    space = _space(config)
    return ReportBundle({"space": space.describe()})


def _op_beta_kneading(config):
    from .symbolic import beta_kneading

    beta = _need(config, "beta", "beta kneading")
    digits = _need(config, "digits", "beta kneading")
    try:
        d = beta_kneading(beta, digits, config.get("precision_bits"))
    except ValueError as exc:
        raise ConfigError(f"config.beta: {exc}") from exc
    return ReportBundle({"digits": list(d)})


def _op_measure_integrate(config):
    from .measures import integrate

    space = _space(config)
    mus = _measures(config, space)
    obs = _observables(config, space.k)
    _require_count(mus, 1, "measures", "measure integrate")
    _require_count(obs, 1, "observables", "measure integrate")
    rows = []
    for i, mu in enumerate(mus):
        for phi in obs:
            rows.append({"measure": i, "observable_id": phi.name, "value": integrate(mu, phi)})
    return ReportBundle({"method": "exact", "integrals": rows, "value": rows[0]["value"]})


def _point(config, space):
    from .circle import bit_backed, rational_point
    from .symbolic import periodic_point

    d = _need(config, "point", "trace")
    kind = d["type"]
    if kind == "periodic":
        return _build("point", periodic_point, space, d["cycle"], d.get("prefix", ""))
    if kind == "rational":
        return _build("point", rational_point, int(d["p"]), int(d["q"]))
    if kind in ("irregular", "gmax", "saturated"):
        if "seed" not in config:
            raise ConfigError("config.seed: required to build a sampled point")
        sub = {**config, "operation": f"synth.{kind}", "measures": d.get("measures", config.get("measures"))}
        pt, _ = _synth_point(sub, space, _measures(sub, space))
        return bit_backed(pt) if d.get("circle") else pt
    raise ConfigError(f"config.point.type: unknown point type {kind!r}")


def _op_trace(config):
    from .observables import birkhoff_averages, checkpoint_plan

    space = _space(config)
    x = _point(config, space)
    obs = _observables(config, space.k)
    _require_count(obs, 1, "observables", "trace")
    horizon = int(config.get("horizon", 10**5))
    cps = _build("checkpoints", checkpoint_plan, config.get("checkpoints", "geometric:1.5"), horizon)
    tr = birkhoff_averages(x, obs, cps)
    final = {name: a[-1] for name, a in tr.averages.items()}
    return ReportBundle({"final_averages": final, "checkpoints": len(cps)}, list(tr.rows()), trace_obj=tr)


def _synth_point(config, space, mus):
    from .synthesis import (
        build_irregular_point,
        build_maximal_oscillation_point,
        build_saturated_point,
    )

    op = config["operation"]
    seed = config["seed"]
    if op == "synth.irregular":
        _require_count(mus, 2, "measures", op, exact=True)
        return build_irregular_point(
            space,
            mus[0],
            mus[1],
            _schedule(config),
            seed,
            close_periodic=bool(config.get("close_periodic", False)),
            horizon=config.get("horizon"),
        )
    if op == "synth.gmax":
        _require_count(mus, 1, "measures", op)
        return build_maximal_oscillation_point(space, mus, _schedule(config, growth=1.0), seed)
    if op == "synth.saturated":
        _require_count(mus, 1, "measures", op)
        return build_saturated_point(space, mus, _schedule(config), seed, float(config.get("eps0", 0.1)))
    raise ConfigError(f"config.operation: {op} does not produce a single point")


def _trace_and_certs(point, plan, obs, horizon, tol, checkpoints):
    from .observables import birkhoff_averages, checkpoint_plan, irregularity_certificate

    certs = {phi.name: irregularity_certificate(point, phi, "blocks", tol, horizon) for phi in obs}
    cps = checkpoint_plan(checkpoints, horizon, plan)
    tr = birkhoff_averages(point, obs, cps)
    return certs, tr


def _op_synth(config):
    from .synthesis import build_jointly_irregular_point, separated_irregular_family

    op = config["operation"]
    space = _space(config)
    mus = _measures(config, space)
    obs = _observables(config, space.k)
    seed = config["seed"]
    horizon = int(config.get("horizon", 10**6))
    tol = float(config.get("tol", 0.01))
    checkpoints = config.get("checkpoints", "geometric:1.25")

    if op == "synth.family":
        _require_count(mus, 2, "measures", op, exact=True)
        n = int(_need(config, "n", op))
        fam = separated_irregular_family(
            space, mus[0], mus[1], n, float(config.get("free_fraction", 0.8)),
            int(config.get("block_len", 100)), seed,
        )
        res = {"family": fam.to_dict()}
        for phi in obs:
            from .pressure import cylinder_pressure_estimate

            res.setdefault("partition_rates", {})[phi.name] = cylinder_pressure_estimate(space, fam, phi, n).value
        return ReportBundle(res)

    if op == "synth.jointly":
        _require_count(obs, 1, "observables", op)
        if len(mus) != 2 * len(obs):
            raise ConfigError("config.measures: jointly needs two measures per observable")
        pairs = [(mus[2 * i], mus[2 * i + 1]) for i in range(len(obs))]
        point, plan, certs = build_jointly_irregular_point(
            space, obs, pairs, _schedule(config), seed, horizon, tol
        )
        from .observables import birkhoff_averages, checkpoint_plan

        tr = birkhoff_averages(point, obs, checkpoint_plan(checkpoints, horizon, plan))
    else:
        point, plan = _synth_point(config, space, mus)
        if plan.close_periodic:
            from .observables import birkhoff_averages, checkpoint_plan, irregularity_certificate

            cps = checkpoint_plan(checkpoints, horizon)
            certs = {phi.name: irregularity_certificate(point, phi, cps, tol, horizon) for phi in obs}
            tr = birkhoff_averages(point, obs, cps)
        else:
            certs, tr = _trace_and_certs(point, plan, obs, horizon, tol, checkpoints)
    plan.block_ends(horizon)
    res = {
        "plan": plan.to_dict(),
        "certificates": {k: (c.to_dict() if c else None) for k, c in certs.items()},
    }
    return ReportBundle(res, list(tr.rows()), trace_obj=tr, plan=plan)


def _pressure_observable(config, space):
    obs = _observables(config, space.k)
    if obs:
        return obs[0]
    from .observables import constant

    return constant(space.k, 0.0, "zero")


def _op_pressure(config):
    from .pressure import (
        beta_entropy_estimate,
        bs_dimension,
        cylinder_pressure_estimate,
        transfer_pressure,
    )

    op = config["operation"]
    if op == "pressure.beta":
        beta = _need(config, "beta", op)
        n_list = config.get("n_list", [8, 12, 16, 20])
        try:
            rows = beta_entropy_estimate(beta, n_list)
        except ValueError as exc:
            raise ConfigError(f"config.beta: {exc}") from exc
        last = rows[-1]
        b = _beta_float(beta)
        # counting bound: beta^n <= #words(n) <= beta^(n+1) / (beta - 1)
        return ReportBundle(
            {
                "value": last["estimate"],
                "method": "cylinder_estimate",
                "n": last["n"],
                "error_bound": math.log(b * b / (b - 1)) / last["n"],
                "rows": rows,
            }
        )
    space = _space(config)
    phi = _pressure_observable(config, space)
    if op == "pressure.transfer":
        r = transfer_pressure(space, phi)
        return ReportBundle({**r.to_dict(), "error_bound": r.residual})
    if op == "pressure.cylinder":
        n = int(_need(config, "n", op))
        r = cylinder_pressure_estimate(space, None, phi, n)
        return ReportBundle(r.to_dict())
    tol = float(config.get("tol", 1e-8))
    n = config.get("n")
    s = bs_dimension(space, phi, tol=tol, n=n)
    method = "transfer_exact" if space.is_markov else "cylinder_estimate"
    return ReportBundle({"value": s, "method": method, "n": n, "error_bound": tol})


def _beta_float(beta) -> float:
    from .symbolic import _parse_beta

    return float(_parse_beta(beta))


def _op_section4(config):
    from .circle import section4_report

    horizon = int(config.get("horizon", 10**6))
    rep = section4_report(horizon=horizon, seed=config["seed"], tol=float(config.get("tol", 0.01)))
    res = {
        "frequencies": rep["frequencies"],
        "certificates": [dict(c, observable=k) if c else {"observable": k, "issued": False}
                         for k, c in rep["certificates"].items()],
        "expected": rep["expected"],
        "plan": rep["plan"].to_dict(),
    }
    bands = {"sin1": rep["expected"]["sin"], "cos1": rep["expected"]["cos"]}
    return ReportBundle(
        res, rep["trace"], trace_obj=_RowsTrace(rep["trace"]), expected=bands, plan=rep["plan"]
    )


class _RowsTrace:
    """Trace-like view over ``(checkpoint, name, average)`` rows, for plotting."""

    def __init__(self, rows):
        self.averages: dict[str, list[float]] = {}
        cps: dict[str, list[int]] = {}
        for c, name, a in rows:
            self.averages.setdefault(name, []).append(a)
            cps.setdefault(name, []).append(c)
        self.checkpoints = next(iter(cps.values())) if cps else []


def _op_verify(config):
    from .verify import run_all

    lines = []
    results = run_all(config.get("checks"), echo=lines.append)
    b = ReportBundle(
        {"checks": [r.to_dict() for r in results], "all_passed": all(r.passed for r in results)},
        summary="\n".join(lines),
    )
    b.failed = not all(r.passed for r in results)
    return b


DISPATCH = {
    "space.info": _op_space_info,
    "beta.kneading": _op_beta_kneading,
    "measure.integrate": _op_measure_integrate,
    "trace": _op_trace,
    "pressure.transfer": _op_pressure,
    "pressure.cylinder": _op_pressure,
    "pressure.bsdim": _op_pressure,
    "pressure.beta": _op_pressure,
    "demo.section4": _op_section4,
    "verify.all": _op_verify,
    **{op: _op_synth for op in SAMPLING_OPS if op.startswith("synth.")},
}


def run_experiment(config: dict, now: str | None = None) -> ReportBundle:
    """Validate ``config`` and dispatch to the named operation.

    The returned bundle carries a provenance block: config hash, seed,
    package version, operation and timestamp. Everything except the
    timestamp is a function of ``config``.
    """
    validate_config(config)
    op = config["operation"]
    bundle = DISPATCH[op](config)
    bundle.provenance = {
        "operation": op,
        "config_hash": config_hash(config),
        "seed": config.get("seed"),
        "version": __version__,
        "timestamp": now or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    if not bundle.summary:
        bundle.summary = _summary(op, bundle.results)
    return bundle


def _summary(op: str, res: dict) -> str:
    if "value" in res:
        return f"{op}: value = {res['value']!r}"
    if res.get("certificates"):
        certs = res["certificates"]
        items = certs.items() if isinstance(certs, dict) else ((c["observable"], c) for c in certs)
        parts = [f"{k}: gap {c['gap']:.6f}" if c and "gap" in c else f"{k}: no certificate" for k, c in items]
        return f"{op}: " + ", ".join(parts)
    if "digits" in res:
        return "digits: " + "".join(map(str, res["digits"]))
    if "plan" in res:
        return f"{op}: {len(res['plan']['segments'])} blocks"
    if "family" in res:
        return f"{op}: rate {res['family']['rate']:.6f}"

    return f"{op}: done"


# ---------------------------------------------------------------------------
# output


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_bundle(bundle: ReportBundle, outs: list[str]) -> list[Path]:
    """Write JSON to the ``.json`` target and traces to the ``.csv`` target.

    A figure of the trace is rendered next to the CSV (same stem, ``.svg`` and
    ``.png``); glue plans also get a block-distance chart.
    """
    written = []
    for o in outs:
        p = Path(o)
        if p.suffix == ".csv":
            _atomic_write(p, bundle.trace_csv())
            written.append(p)
            if bundle.trace_obj is not None and bundle.traces:
                from .plotting import plot_block_distances, plot_trace

                written += plot_trace(bundle.trace_obj, p.with_suffix(".svg"), bands=bundle.expected)
                if bundle.plan is not None and bundle.plan.records:
                    written += plot_block_distances(bundle.plan.records, p.with_name(p.stem + "_blocks.svg"))
        else:
            _atomic_write(p, bundle.to_json() + "\n")
            written.append(p)
    return written


# ---------------------------------------------------------------------------
# argument parsing


def _load_json(path: str, what: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"--{what}: no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--{what}: {path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _horizon(s: str) -> int:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if v < 1 or v != int(v):
        raise argparse.ArgumentTypeError(f"horizon must be a positive integer, got {s!r}")
    return int(v)


def _common(p: argparse.ArgumentParser, *, space=False, measures=False, observables=False,
            sampling=False, out_default=None):
    if space:
        p.add_argument("--space", help="space description JSON file")
    if measures:
        p.add_argument("--measures", nargs="+", default=[], help="measure JSON files")
    if observables:
        p.add_argument("--observables", nargs="+", default=[], help="observable JSON files")
    if sampling:
        p.add_argument("--schedule", default="default", help="'default' or a schedule JSON file")
        p.add_argument("--horizon", type=_horizon, default=10**6)
        p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--config", help="base experiment config JSON; flags override its fields")
    p.add_argument("--out", default=out_default, help="comma-separated output paths (.json, .csv)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="group", required=True)

    sp = sub.add_parser("space", help="symbolic spaces").add_subparsers(dest="action", required=True)
    _common(sp.add_parser("info"), space=True)

    bp = sub.add_parser("beta", help="beta expansions").add_subparsers(dest="action", required=True)
    k = bp.add_parser("kneading")
    k.add_argument("--beta", required=True)
    k.add_argument("--digits", type=int, required=True)
    k.add_argument("--precision-bits", type=int, default=None)
    _common(k)

    mp = sub.add_parser("measure", help="measure models").add_subparsers(dest="action", required=True)
    mi = mp.add_parser("integrate")
    _common(mi, space=True, measures=True, observables=True)
    mi.add_argument("--measure", dest="measure_alias", nargs="+", default=[], help=argparse.SUPPRESS)
    mi.add_argument("--observable", dest="observable_alias", nargs="+", default=[], help=argparse.SUPPRESS)

    tp = sub.add_parser("trace", help="Birkhoff averages along a point")
    _common(tp, space=True, measures=True, observables=True, sampling=True, out_default="trace.csv")
    tp.add_argument("--point", required=True, help="point description JSON file")
    tp.add_argument("--checkpoints", default="geometric:1.5")

    syn = sub.add_parser("synth", help="point constructions").add_subparsers(dest="action", required=True)
    for name in ("irregular", "jointly", "saturated", "gmax", "family"):
        s = syn.add_parser(name)
        _common(s, space=True, measures=True, observables=True, sampling=True, out_default="plan.json,trace.csv")
        s.add_argument("--checkpoints", default=None)
        if name == "irregular":
            s.add_argument("--close-periodic", action="store_true")
        if name == "saturated":
            s.add_argument("--eps0", type=float, default=None)
        if name == "family":
            s.add_argument("--n", type=int, default=None)
            s.add_argument("--free-fraction", type=float, default=None)
            s.add_argument("--block-len", type=int, default=None)

    pp = sub.add_parser("pressure", help="pressure and dimension").add_subparsers(dest="action", required=True)
    for name in ("transfer", "cylinder", "bsdim", "beta"):
        s = pp.add_parser(name)
        _common(s, space=name != "beta", observables=name != "beta")
        if name in ("cylinder", "bsdim"):
            s.add_argument("--n", type=int, default=None)
        if name == "beta":
            s.add_argument("--beta", required=True)
            s.add_argument("--n", dest="n_list", type=int, nargs="+", default=None)

    dp = sub.add_parser("demo", help="worked demonstrations").add_subparsers(dest="action", required=True)
    d = dp.add_parser("section4", help="doubling map: truly-observable trig functions")
    d.add_argument("--horizon", type=_horizon, default=10**6)
    d.add_argument("--seed", type=int, default=None)
    _common(d, out_default="report.json,trace.csv")

    vp = sub.add_parser("verify", help="acceptance checks").add_subparsers(dest="action", required=True)
    v = vp.add_parser("all")
    v.add_argument("--only", type=int, nargs="+", default=None)
    _common(v)
    return parser


def config_from_args(args: argparse.Namespace) -> dict:
    config = _load_json(args.config, "config") if getattr(args, "config", None) else {}
    config["operation"] = f"{args.group}.{args.action}" if args.group != "trace" else "trace"
    a = vars(args)
    if a.get("space"):
        config["space"] = _load_json(a["space"], "space")
    ms = list(a.get("measures") or []) + list(a.get("measure_alias") or [])
    if ms:
        config["measures"] = [_load_json(m, "measures") for m in ms]
    obs = list(a.get("observables") or []) + list(a.get("observable_alias") or [])
    if obs:
        loaded = []
        for path in obs:
            d = _load_json(path, "observables")
            d.setdefault("id", Path(path).stem)
            loaded.append(d)
        config["observables"] = loaded
    if a.get("schedule") not in (None, "default"):
        config["schedule"] = _load_json(a["schedule"], "schedule")
    if a.get("point"):
        config["point"] = _load_json(a["point"], "point")
    for key in ("horizon", "tol", "checkpoints", "digits", "precision_bits", "n", "n_list",
                "free_fraction", "block_len", "eps0"):
        if a.get(key) is not None:
            config[key] = a[key]
    if a.get("beta") is not None:
        config["beta"] = str(a["beta"])
    if a.get("close_periodic"):
        config["close_periodic"] = True
    if a.get("only"):
        config["checks"] = a["only"]
    if a.get("out"):
        config["out"] = [s for s in a["out"].split(",") if s]
    return resolve_seed(config, a.get("seed"))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    from .symbolic import BridgeError, HorizonError, PrecisionError

    config: dict = {}
    try:
        config = config_from_args(args)
        bundle = run_experiment(config)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, BridgeError, HorizonError, PrecisionError, RuntimeError, ValueError) as exc:
        print(f"{config.get('operation', 'lab')}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    outs = config.get("out")
    if outs:
        for p in write_bundle(bundle, outs):
            print(f"wrote {p}", file=sys.stderr)
        print(bundle.summary)
    else:
        print(bundle.to_json() if args.group != "verify" else bundle.summary)
    return EXIT_NUMERIC if bundle.failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
