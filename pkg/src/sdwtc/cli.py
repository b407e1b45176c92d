"""Command-line front end: region computation, scheme comparison, gallery
examples, and simulation, with machine-readable output.

Subcommands: ``region``, ``compare``, ``example``, ``simulate``. Common flags:
``--seed``, ``--out``, ``--format json|csv``. Every output document embeds a
run manifest (command, input digests, seed, tool version, timestamp). The
manifest timestamp honours SOURCE_DATE_EPOCH so that repeated runs with fixed
seeds produce byte-identical documents.

Exit codes: 0 success, 1 validation error, 2 budget error. The dense-array
budget can be overridden with the SDWTC_CELL_BUDGET environment variable.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .errors import BudgetError, InfeasibleError, ValidationError
from .gallery import (
    build_msaf_example,
    coin_counterexample_report,
    coin_reference_aux,
    coin_wtc,
    msaf_reference_aux,
)
from .prob import assemble_joint
from .regions import intercepts, region_a, region_per, region_polygon
from .search import SearchConfig, _collect, search_with_frontier
from .sim import BACKEND, SimConfig, run_trials
from .specio import (
    emit_aux_spec,
    emit_channel_spec,
    parse_aux_spec,
    parse_channel_spec,
    sha256_hex,
)

_SCHEMES = ("A", "PER", "GCP", "BASSI_JOINT", "BASSI_SEP")


class _Parser(argparse.ArgumentParser):
    """Argument errors are validation errors (exit 1), not argparse's 2."""

    def error(self, message):
        raise ValidationError(message)


def _manifest(command: str, seed: int | None, inputs: dict[str, str]) -> dict:
    stamp = os.environ.get("SOURCE_DATE_EPOCH")
    ts = int(stamp) if stamp is not None else int(time.time())
    return {
        "command": command,
        "version": __version__,
        "seed": seed,
        "inputs": inputs,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(ts)),
    }


def _read(path: str) -> tuple[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return text, sha256_hex(text)


def _emit(doc: dict, rows: list[dict], args) -> None:
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(doc, indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _search_cfg(args, weight: float) -> SearchConfig:
    return SearchConfig(
        card_u=args.card_u,
        card_v=args.card_v,
        restarts=args.restarts,
        steps=args.steps,
        seed=args.seed,
        weight=weight,
        workers=args.workers,
    )


# ---------------------------------------------------------------------------
# region
# ---------------------------------------------------------------------------


def _cmd_region(args) -> tuple[dict, list[dict]]:
    text, digest = _read(args.channel)
    wtc = parse_channel_spec(text)
    inputs = {args.channel: digest}
    evaluator = region_per if args.scheme == "per" else region_a

    if args.aux:
        aux_text, aux_digest = _read(args.aux)
        inputs[args.aux] = aux_digest
        aux = parse_aux_spec(aux_text)
        j = assemble_joint(wtc, aux)
        bounds = evaluator(j)
        search_block = None
        aux_doc = json.loads(aux_text)
    elif args.search:
        family = "independent_inner" if args.scheme == "per" else "general"
        cfg = _search_cfg(args, args.weight)
        result, front = search_with_frontier(wtc, cfg, family=family)
        aux, bounds = result.aux, result.bounds
        search_block = {
            "objective_weight": cfg.weight,
            "objective": result.objective,
            "evaluations": result.evaluations,
            "sweep": front["sweep"],
            "hull": [list(p) for p in front["hull"]],
        }
        aux_doc = json.loads(emit_aux_spec(aux))
    else:
        raise ValidationError("region: provide --aux FILE or --search")

    rm_int, sum_int = intercepts(bounds)
    b3 = bounds.b3 if bounds.b3 != float("inf") else "unbounded"
    doc = {
        "manifest": _manifest("region", args.seed, inputs),
        "scheme": args.scheme,
        "bounds": {"b1": bounds.b1, "b2": bounds.b2, "b3": b3},
        "intercepts": {"rm": rm_int, "sum": sum_int},
        "polygon": [list(p) for p in region_polygon(bounds)],
        "aux": aux_doc,
        "aux_digest": sha256_hex(json.dumps(aux_doc)),
    }
    if search_block is not None:
        doc["search"] = search_block
    rows = [
        {
            "scheme": args.scheme,
            "b1": bounds.b1,
            "b2": bounds.b2,
            "b3": b3,
            "rm_intercept": rm_int,
            "sum_intercept": sum_int,
        }
    ]
    return doc, rows


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

_FAMILY_OF = {
    "A": "general",
    "PER": "independent_inner",
    "GCP": "general",
    "BASSI_JOINT": "layered_markov",
    "BASSI_SEP": "separated",
}


def _compare_row(wtc, scheme: str, args) -> dict:
    family = _FAMILY_OF[scheme]
    cfg = _search_cfg(args, 1.0)
    fam, total = _collect(wtc, cfg, family)

    def select(lam: float):
        best = None
        for rm, sm, ser, params in total.pareto:
            obj = lam * rm + (1 - lam) * sm
            if best is None or obj > best[0] or (obj == best[0] and ser < best[1]):
                best = (obj, ser, rm, sm, params)
        return best

    _, ser_rm, rm, _, _ = select(1.0)
    _, ser_sum, _, sm, _ = select(0.0)
    if scheme == "GCP":
        # Message-rate projection; any slice of it may be declared key.
        sm = rm
        ser_sum = ser_rm
    return {
        "scheme": scheme,
        "rm_intercept": rm,
        "sum_intercept": sm,
        "rm_aux_digest": sha256_hex(ser_rm),
        "sum_aux_digest": sha256_hex(ser_sum),
        "evaluations": total.count,
    }


def _cmd_compare(args) -> tuple[dict, list[dict]]:
    text, digest = _read(args.channel)
    wtc = parse_channel_spec(text)
    schemes = [s.strip().upper() for s in args.schemes.split(",") if s.strip()]
    for s in schemes:
        if s not in _SCHEMES:
            raise ValidationError(f"unknown scheme {s!r}; choose from {_SCHEMES}")
    rows = [_compare_row(wtc, s, args) for s in schemes]
    doc = {
        "manifest": _manifest("compare", args.seed, {args.channel: digest}),
        "rows": rows,
    }
    return doc, rows


# ---------------------------------------------------------------------------
# example
# ---------------------------------------------------------------------------


def _cmd_example(args) -> tuple[dict, list[dict]]:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.name == "msaf":
        wtc, params, ana = build_msaf_example(args.sigma)
        aux = msaf_reference_aux(params)
        ch_path = out_dir / "msaf_channel.json"
        aux_path = out_dir / "msaf_aux.json"
        ch_path.write_text(emit_channel_spec(wtc), encoding="utf-8")
        aux_path.write_text(emit_aux_spec(aux), encoding="utf-8")
        payload = {
            "sigma": params.sigma,
            "epsilon": params.epsilon,
            "lambda": params.lam,
            "capacity": ana.capacity,
            "gp_capacity": ana.gp_capacity,
            "causal_bound": ana.causal_bound,
            "key_entropy": ana.key_entropy,
        }
    else:
        rep = coin_counterexample_report()
        ch_path = out_dir / "coin_channel.json"
        aux_path = out_dir / "coin_aux.json"
        ch_path.write_text(emit_channel_spec(coin_wtc()), encoding="utf-8")
        aux_path.write_text(emit_aux_spec(coin_reference_aux()), encoding="utf-8")
        payload = {
            "r_zib": rep.r_zib,
            "cr_upper_bound": rep.cr_upper_bound,
            "contradiction": rep.contradiction,
            "feasibility_margin": rep.feasibility_margin,
        }
    files = {
        str(ch_path): sha256_hex(ch_path.read_text(encoding="utf-8")),
        str(aux_path): sha256_hex(aux_path.read_text(encoding="utf-8")),
    }
    doc = {
        "manifest": _manifest(f"example {args.name}", args.seed, {}),
        "analytics": payload,
        "files": files,
    }
    rows = [dict(payload)]
    return doc, rows


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _parse_grid(raw: str | None, cast) -> list:
    if not raw:
        return []
    try:
        return [cast(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad grid value: {exc}") from None


def _cmd_simulate(args) -> tuple[dict, list[dict]]:
    ch_text, ch_digest = _read(args.channel)
    aux_text, aux_digest = _read(args.aux)
    wtc = parse_channel_spec(ch_text)
    aux = parse_aux_spec(aux_text)
    n_grid = _parse_grid(args.sweep_n, int) or [args.n]
    scale_grid = _parse_grid(args.rate_scale, float) or [1.0]
    reports = []
    for n in n_grid:
        for scale in scale_grid:
            cfg = SimConfig(
                n=n,
                rate_m=args.rate_m * scale,
                rate_k=args.rate_k * scale,
                rate_1=args.rate_1 * scale,
                rate_2=args.rate_2 * scale,
                eps_typ=args.eps_typ,
                trials=args.trials,
                seed=args.seed,
                exact_mode=args.exact,
            )
            rep = run_trials(wtc, aux, cfg)
            row = rep.to_dict()
            row["rate_scale"] = scale
            reports.append(row)
    doc = {
        "manifest": _manifest(
            "simulate", args.seed, {args.channel: ch_digest, args.aux: aux_digest}
        ),
        "backend": BACKEND,
        "reports": reports,
    }
    rows = [
        {
            "n": r["n"],
            "rate_scale": r["rate_scale"],
            "avg_error": r["avg_error"],
            "max_error": r["max_error"],
            "key_tv": r["key_tv"],
            "leakage_bits": r["leakage_bits"],
            "encoding_failures": r["encoding_failures"],
            "trial_count": r["trial_count"],
        }
        for r in reports
    ]
    return doc, rows


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="sdwtc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="write the document here")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    def search_flags(p):
        p.add_argument("--card-u", type=int, default=4, dest="card_u")
        p.add_argument("--card-v", type=int, default=8, dest="card_v")
        p.add_argument("--restarts", type=int, default=96)
        p.add_argument("--steps", type=int, default=600)
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("region", help="evaluate or search rate bounds")
    p.add_argument("--channel", required=True)
    p.add_argument("--aux", default=None)
    p.add_argument("--search", action="store_true")
    p.add_argument("--scheme", choices=("a", "per"), default="a")
    p.add_argument("--weight", type=float, default=0.5)
    search_flags(p)
    common(p)
    p.set_defaults(run=_cmd_region)

    p = sub.add_parser("compare", help="best-found intercepts per scheme")
    p.add_argument("--channel", required=True)
    p.add_argument("--schemes", default="A,PER,GCP")
    search_flags(p)
    common(p)
    p.set_defaults(run=_cmd_compare)

    p = sub.add_parser("example", help="write a gallery fixture and analytics")
    p.add_argument("name", choices=("msaf", "coin"))
    p.add_argument("--sigma", type=float, default=0.25)
    p.add_argument("--out-dir", default=".", dest="out_dir")
    common(p)
    p.set_defaults(run=_cmd_example)

    p = sub.add_parser("simulate", help="run the coding-scheme simulator")
    p.add_argument("--channel", required=True)
    p.add_argument("--aux", required=True)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--rate-m", type=float, default=0.25, dest="rate_m")
    p.add_argument("--rate-k", type=float, default=0.25, dest="rate_k")
    p.add_argument("--rate-1", type=float, default=0.0, dest="rate_1")
    p.add_argument("--rate-2", type=float, default=0.25, dest="rate_2")
    p.add_argument("--eps-typ", type=float, default=0.1, dest="eps_typ")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--sweep-n", default=None, dest="sweep_n",
                   help="comma-separated block lengths, one report row each")
    p.add_argument("--rate-scale", default=None, dest="rate_scale",
                   help="comma-separated scale factors applied to all rates")
    common(p)
    p.set_defaults(run=_cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        doc, rows = args.run(args)
        _emit(doc, rows, args)
        return 0
    except BudgetError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
