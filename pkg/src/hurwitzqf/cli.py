"""Command-line front end.

Every run writes its configuration and the library version into the output
header, so a table can be regenerated from its own header.  Certified numbers
always appear as a lower/upper pair.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

from . import __version__
from .counting import (
    CountBudgetExceeded,
    CountQuery,
    RegionKind,
    compare_wedge_components,
    count_region,
    grid_component_count,
)
from .forms import BinaryForm, h_reduce, is_h_reduced, parse_form
from .hurwitz import TerminatingExpansion, expand, validate
from .hyperbolic import trace_segments
from .numerics import CertifiedReal, as_fraction, format_literal, parse_literal
from .stats import constants, gauss_generic, birkhoff_average, verify_reduced_bounds

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BUDGET = 3

SUBCOMMANDS = ("expand", "reduce", "trace", "count", "components", "verify", "generic", "constants")


class ValidationError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    value: Optional[str] = None
    form: Optional[str] = None
    delta: Optional[str] = None
    kappa: Optional[str] = None
    epsilon: Optional[str] = None
    rho: Optional[str] = None
    rho_start: Optional[str] = None
    rho_stop: Optional[str] = None
    rho_mult: str = "10"
    n: int = 20
    kind: str = "main"
    tol: str = "1e-6"
    max_steps: int = 10_000
    budget: Optional[int] = None
    birkhoff_steps: int = 0
    grid: bool = False
    prec: int = 4096
    workers: int = 1
    format: str = "csv"
    output: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise ValidationError(f"unknown subcommand {self.subcommand!r}")
        if self.prec < 128:
            raise ValidationError("precision cap must be at least 128 bits")
        if as_fraction(self.rho_mult) <= 1:
            raise ValidationError("rho grid multiplier must exceed 1")
        if self.format not in ("csv", "json"):
            raise ValidationError("format must be csv or json")
        if self.workers < 1:
            raise ValidationError("workers must be at least 1")
        if self.n < 1:
            raise ValidationError("n must be at least 1")

    def rho_grid(self) -> list[Fraction]:
        if self.rho is not None:
            return [as_fraction(r) for r in str(self.rho).split(",")]
        if self.rho_start is None or self.rho_stop is None:
            raise ValidationError("give --rho or both --rho-start and --rho-stop")
        start, stop = as_fraction(self.rho_start), as_fraction(self.rho_stop)
        mult = as_fraction(self.rho_mult)
        if start <= 0 or stop < start:
            raise ValidationError("need 0 < rho-start <= rho-stop")
        out = []
        r = start
        while r <= stop:
            out.append(r)
            r *= mult
        return out

    def header(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        return {"version": __version__, "config": {k: v for k, v in d.items() if v is not None}}


# ---------------------------------------------------------------------------
# output


def _num(x):
    if isinstance(x, Fraction):
        return str(x)
    return x


def _bracket(prefix: str, x: CertifiedReal) -> dict:
    return {f"{prefix}_lower": float(x.lower), f"{prefix}_upper": float(x.upper)}


def emit(cfg: RunConfig, rows: list[dict], meta: Optional[dict] = None,
         wall: Optional[float] = None) -> str:
    header = cfg.header()
    if meta:
        header["result"] = meta
    if cfg.format == "json":
        doc = {"header": header, "rows": [{k: _num(v) for k, v in r.items()} for r in rows]}
        if wall is not None:
            doc["wall_time"] = round(wall, 6)
        text = json.dumps(doc, indent=1, sort_keys=True, default=str) + "\n"
    else:
        buf = io.StringIO()
        buf.write("# " + json.dumps(header, sort_keys=True, default=str) + "\n")
        if rows:
            cols = []
            for r in rows:
                for k in r:
                    if k not in cols:
                        cols.append(k)
            w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: _num(v) for k, v in r.items()})
        if wall is not None:
            buf.write(f"# wall_time={wall:.6f}\n")
        text = buf.getvalue()
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


# ---------------------------------------------------------------------------
# subcommands


def _need(cfg, name):
    v = getattr(cfg, name)
    if v is None:
        raise ValidationError(f"--{name.replace('_', '-')} is required for {cfg.subcommand}")
    return v


def _form(cfg) -> BinaryForm:
    return parse_form(_need(cfg, "form"))


def _reduced(cfg) -> tuple[BinaryForm, dict]:
    Q = _form(cfg)
    if is_h_reduced(Q.u, Q.w):
        return Q, {"reduced_input": True}
    red = h_reduce(Q, cfg.max_steps)
    return red.form, {"reduced_input": False, "reduction_word": list(red.word)}


def cmd_expand(cfg):
    x = parse_literal(_need(cfg, "value"))
    seq = expand(x, cfg.n)
    bad = validate(seq.digits)
    rows = [{"j": j, "a_j": a} for j, a in enumerate(seq.digits)]
    meta = {"period": list(seq.period) if seq.period else None,
            "violations": [str(v) for v in bad]}
    return rows, meta


def cmd_reduce(cfg):
    Q = _form(cfg)
    red = h_reduce(Q, cfg.max_steps)
    (a, b), (c, d) = red.gamma.rows
    row = {
        "steps": red.steps,
        "gamma": f"[[{a},{b}],[{c},{d}]]",
        "word": " ".join(map(str, red.word)),
        "reduced_form": red.form.literal(),
        "u": format_literal(red.form.u),
        "w": format_literal(red.form.w),
    }
    return [row], {"input": Q.literal()}


def cmd_trace(cfg):
    Q, meta = _reduced(cfg)
    deltas = [as_fraction(d) for d in str(cfg.delta).split(",")] if cfg.delta else []
    segs = trace_segments(Q.u, Q.w, cfg.n, deltas=deltas, max_prec=cfg.prec)
    meta["form"] = Q.literal()
    return [s.to_row() for s in segs], meta


def cmd_count(cfg):
    Q = _form(cfg)
    delta = as_fraction(_need(cfg, "delta"))
    kind = RegionKind.parse(cfg.kind)
    if cfg.kappa is not None:
        kappa = as_fraction(cfg.kappa)
    elif kind is RegionKind.FULL_H:
        kappa = Fraction(0)
    else:
        raise ValidationError("--kappa is required for this region kind")
    rows = []
    for rho in cfg.rho_grid():
        q = CountQuery(Q, delta, kappa, rho, kind, workers=cfg.workers, budget=cfg.budget)
        try:
            res = count_region(q)
        except CountBudgetExceeded as exc:
            rows.append(_count_row(exc.partial))
            raise _Partial(rows) from exc
        rows.append(_count_row(res))
    return rows, {"form": Q.literal()}


def _count_row(res) -> dict:
    q = res.query
    row = {
        "rho": q.rho,
        "kind": q.kind.value,
        "delta": q.delta,
        "kappa": q.kappa,
        "count": res.count,
        "boundary_flags": res.boundary_flags,
        "candidates": res.candidates,
    }
    if res.split is not None:
        row["g_count"], row["gprime_count"] = res.split
        row["split_ok"] = int(res.split_ok)
    row["partial"] = int(res.partial)
    return row


class _Partial(Exception):
    def __init__(self, rows):
        self.rows = rows


def cmd_components(cfg):
    Q = _form(cfg)
    eps = as_fraction(_need(cfg, "epsilon"))
    if not 0 < eps < 1:
        raise ValidationError("epsilon must lie in (0, 1)")
    rows_c, threshold = compare_wedge_components(Q, eps, cfg.rho_grid())
    rows = []
    g = Q.g
    ge1_sq = g.a * g.a + g.c * g.c
    for r in rows_c:
        row = {"rho": r.rho, "wedge_count": r.wedge_count, "components": r.components, "diff": r.diff}
        if cfg.grid:
            t2 = (r.rho * r.rho) / ge1_sq
            if t2 > eps:
                row["grid_components"], row["grid_ambiguous"] = grid_component_count(
                    g, sigma_sq=eps, tau_sq=t2)
        rows.append(row)
    return rows, {"form": Q.literal(), "empirical_threshold": None if threshold is None else str(threshold)}


def cmd_verify(cfg):
    Q, meta = _reduced(cfg)
    delta = as_fraction(_need(cfg, "delta"))
    kappa = as_fraction(_need(cfg, "kappa"))
    rep = verify_reduced_bounds(Q, delta, kappa, cfg.rho_grid(), workers=cfg.workers)
    d = rep.to_dict()
    rows = d.pop("rows")
    meta.update(d)
    return rows, meta


def cmd_generic(cfg):
    delta = as_fraction(cfg.delta) if cfg.delta is not None else None
    res = gauss_generic(delta, float(cfg.tol))
    row = {"alpha": res.alpha, "alpha_lower": res.alpha_bracket[0],
           "alpha_upper": res.alpha_bracket[1], "terms": res.terms}
    if res.e is not None:
        row.update({"k": res.k, "l": res.l})
        row.update(_bracket("e", res.e))
        row.update(_bracket("f", res.f))
    if cfg.birkhoff_steps:
        row["birkhoff"] = birkhoff_average(cfg.birkhoff_steps)
    return [row], None


def cmd_constants(cfg):
    rows = []
    for name, v in constants().items():
        v = v.refine(Fraction(1, 10**15))
        rows.append({"name": name, "lower": float(v.lower), "upper": float(v.upper)})
    return rows, None


COMMANDS = {
    "expand": cmd_expand,
    "reduce": cmd_reduce,
    "trace": cmd_trace,
    "count": cmd_count,
    "components": cmd_components,
    "verify": cmd_verify,
    "generic": cmd_generic,
    "constants": cmd_constants,
}


# ---------------------------------------------------------------------------
# argument parsing


def read_config_file(path: str) -> dict:
    """key = value lines; '#' starts a comment; keys use flag names."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hurwitzqf", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file supplying defaults")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--output", "-o")
    common.add_argument("--workers", type=int)
    common.add_argument("--prec", type=int, help="precision cap in bits")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    s = add("expand", "minus continued fraction digits of a surd")
    s.add_argument("--value")
    s.add_argument("--n", type=int)

    s = add("reduce", "H-reduce a form")
    s.add_argument("--form")
    s.add_argument("--max-steps", type=int)

    s = add("trace", "return times and cusp flags along the coding")
    s.add_argument("--form")
    s.add_argument("--n", type=int)
    s.add_argument("--delta", help="comma-separated list")
    s.add_argument("--max-steps", type=int)

    for name, help_ in (("count", "exact lattice counts over a rho grid"),
                        ("components", "wedge counts against component counts"),
                        ("verify", "check the reduced-form counting bounds")):
        s = add(name, help_)
        s.add_argument("--form")
        s.add_argument("--rho")
        s.add_argument("--rho-start")
        s.add_argument("--rho-stop")
        s.add_argument("--rho-mult")
        if name == "count":
            s.add_argument("--delta")
            s.add_argument("--kappa")
            s.add_argument("--kind", choices=[k.value for k in RegionKind])
            s.add_argument("--budget", type=int, help="candidate budget per count")
        elif name == "components":
            s.add_argument("--epsilon")
            s.add_argument("--grid", action="store_true", default=None)
        else:
            s.add_argument("--delta")
            s.add_argument("--kappa")
            s.add_argument("--max-steps", type=int)

    s = add("generic", "Gauss-measure generic constants")
    s.add_argument("--delta")
    s.add_argument("--tol")
    s.add_argument("--birkhoff-steps", type=int)

    add("constants", "certified values of the fixed constants")
    return p


_INT_KEYS = {"n", "max_steps", "budget", "birkhoff_steps", "prec", "workers"}


def config_from_args(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    values = {}
    if ns.config:
        values.update(read_config_file(ns.config))
    for k, v in vars(ns).items():
        if k == "config" or v is None:
            continue
        values[k] = v
    values["subcommand"] = ns.subcommand
    known = set(RunConfig.__dataclass_fields__) - {"extra"}
    extra = {k: v for k, v in values.items() if k not in known}
    if extra:
        raise ValidationError(f"unknown configuration keys: {', '.join(sorted(extra))}")
    for k in _INT_KEYS & set(values):
        values[k] = int(values[k])
    if isinstance(values.get("grid"), str):
        values["grid"] = values["grid"].lower() in ("1", "true", "yes")
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def run(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    try:
        rows, meta = COMMANDS[cfg.subcommand](cfg)
    except _Partial as part:
        meta = {"partial": True}
        emit(cfg, part.rows, meta, time.perf_counter() - t0)
        print("budget exhausted: partial results written", file=sys.stderr)
        return EXIT_BUDGET
    emit(cfg, rows, meta, time.perf_counter() - t0)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
        return run(cfg)
    except (ValidationError, ValueError, TerminatingExpansion) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
