"""Configuration-driven command line front end.

Each subcommand reads one JSON config document, runs one experiment, and
writes CSV/JSON artifacts into the output directory.  Identical inputs
give byte-identical files: floats carry 17 significant digits, row and
key orderings are fixed, and nothing is timestamped.

Exit codes: 0 success, 2 malformed config, 3 evaluation budget
exhausted, 4 a machine-checked invariant failed, 5 any other failure
from this package.  All artifacts are staged before the first rename,
so a failing run leaves no partial outputs behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import random
import statistics
import sys
import tempfile
from dataclasses import fields

from .crossratio import (
    Quadruple,
    cross_ratio,
    distortion,
    lift_into,
    single_break_closed_form,
    smooth_distortion_bound,
)
from .errors import (
    BreakCollision,
    BreakNotInStatedInterval,
    CircleBreakError,
    ConfigError,
    InvariantFailure,
    PrecisionBudgetExceeded,
)
from .maps import make_pl_two_break, make_pq_two_break, make_rotation, map_stats
from .measure import conjugacy_values, mass_identity_residual, partition_masses
from .numerics import DEFAULT_ORBIT_CAP
from .partition import (
    build_partition,
    check_refinement,
    denjoy_product,
    max_element_decay,
    partition_rows,
)
from .rotation import (
    ContinuedFraction,
    cf_expand_convergents,
    rho_farey,
    rho_iterate_estimate,
    tune_translation,
)
from .singularity import ExperimentConfig, _rho_enclosure, singularity_report

SCHEMA = 1


def fmt(x) -> str:
    """Fixed 17-significant-digit rendering, round-trip safe in binary64."""
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if not math.isfinite(x):
        raise InvariantFailure(f"non-finite value {x!r} reached an output table")
    return format(x, ".17g")


# The stdlib json encoder hardcodes repr() for floats, so the fixed-width
# float contract needs its own (deterministic) walker.
def _json_text(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = ",\n".join(
            "  " * (indent + 1) + _json_text(v, indent + 1) for v in obj
        )
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(
            "  " * (indent + 1) + json.dumps(str(k)) + ": " + _json_text(v, indent + 1)
            for k, v in obj.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    raise InvariantFailure(f"cannot serialize {type(obj).__name__} into a report")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([c if isinstance(c, str) else fmt(c) for c in row])
    return buf.getvalue()


def _write_all(outdir, artifacts):
    """Stage every artifact, then rename; no partial output on failure."""
    os.makedirs(outdir, exist_ok=True)
    staged = []
    try:
        for name, text in artifacts:
            fd, tmp = tempfile.mkstemp(dir=outdir, prefix=".stage-")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, os.path.join(outdir, name)))
    except BaseException:
        for tmp, _ in staged:
            try:
                os.unlink(tmp)
            except OSError:
                pass
        raise
    written = []
    for tmp, final in staged:
        os.replace(tmp, final)
        written.append(final)
    return written


_MISSING = object()


class _Keys:
    """Tracked view of a config object; leftover keys are rejected."""

    def __init__(self, doc, where="config"):
        if not isinstance(doc, dict):
            raise ConfigError(f"{where} must be a JSON object")
        self._doc = dict(doc)
        self.where = where

    def take(self, key, default=_MISSING):
        if key in self._doc:
            return self._doc.pop(key)
        if default is _MISSING:
            raise ConfigError(f"{self.where} is missing required key {key!r}")
        return default

    def real(self, key, default=_MISSING):
        v = self.take(key, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{self.where} key {key!r} must be a number")
        return float(v)

    def integer(self, key, default=_MISSING):
        v = self.take(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{self.where} key {key!r} must be an integer")
        return v

    def flag(self, key, default=False):
        v = self.take(key, default)
        if not isinstance(v, bool):
            raise ConfigError(f"{self.where} key {key!r} must be true or false")
        return v

    def done(self):
        if self._doc:
            raise ConfigError(
                f"unknown {self.where} keys: {', '.join(sorted(self._doc))}"
            )


def _map_from_config(spec, forbid_translation=False, where="map"):
    k = _Keys(spec, where)
    kind = k.take("kind")
    if forbid_translation and "translation" in spec:
        raise ConfigError(
            "the tune command searches over the translation; remove it "
            "from the map spec"
        )
    if kind == "rotation":
        t = 0.0 if forbid_translation else k.real("translation")
        k.done()
        return make_rotation(t), kind
    if kind == "pq":
        a = k.real("a")
        c = k.real("c")
        sa = k.real("sigma_a")
        sc = k.real("sigma_c")
        t = k.real("translation", 0.0)
        k.done()
        return make_pq_two_break(a, c, sa, sc, t), kind
    if kind == "pl":
        a = k.real("a")
        c = k.real("c")
        r = k.real("slope_ratio")
        t = k.real("translation", 0.0)
        k.done()
        return make_pl_two_break(a, c, r, t), kind
    raise ConfigError(f"unknown map kind {kind!r}; expected rotation, pq, or pl")


def _cf_from_config(spec, where="rho"):
    """CF-prefix list or a decimal in (0,1), as a ContinuedFraction."""
    if isinstance(spec, dict):
        k = _Keys(spec, where)
        ks = k.take("cf")
        k.done()
        ok = (
            isinstance(ks, list)
            and ks
            and all(isinstance(x, int) and not isinstance(x, bool) and x >= 1 for x in ks)
        )
        if not ok:
            raise ConfigError(
                f"{where}.cf must be a non-empty list of positive integers"
            )
        return ContinuedFraction.from_quotients(ks)
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        v = float(spec)
        if not 0 < v < 1:
            raise ConfigError(f"{where} must lie in (0, 1), got {v!r}")
        return cf_expand_convergents(v)
    raise ConfigError(f"{where} must be a number or an object with a cf list")


def cmd_rotnum(doc, outdir, seed):
    k = _Keys(doc)
    m, _ = _map_from_config(k.take("map"))
    depth = k.integer("depth", 40)
    estimate_n = k.integer("estimate_n", 10_000)
    cap = k.integer("cap", DEFAULT_ORBIT_CAP)
    k.done()
    if depth < 1:
        raise ConfigError("depth must be >= 1")

    est, cfr = rho_farey(m, depth=depth, cap=cap)
    it = rho_iterate_estimate(m, estimate_n, cap=cap) if estimate_n > 0 else None
    if it is not None and (it.upper < est.lower or est.upper < it.lower):
        raise InvariantFailure(
            "farey and iterated rotation estimates do not intersect: "
            f"[{est.lower}, {est.upper}] vs [{it.lower}, {it.upper}]"
        )

    table = []
    for n in range(1, cfr.depth + 1):
        p, q = cfr.convergents[n]
        table.append((n, cfr.quotients[n - 1], p, q, abs(est.value - p / q)))

    report = {
        "schema": SCHEMA,
        "command": "rotnum",
        "farey": {
            "value": est.value,
            "lower": est.lower,
            "upper": est.upper,
            "width": est.width,
            "rational": list(est.rational) if est.rational else None,
            "depth": depth,
        },
        "iterate": (
            None
            if it is None
            else {"value": it.value, "lower": it.lower, "upper": it.upper, "n": estimate_n}
        ),
        "quotients": list(cfr.quotients),
        "max_quotient": max(cfr.quotients) if cfr.quotients else None,
    }
    return _write_all(
        outdir,
        [
            ("rotnum.json", _json_text(report) + "\n"),
            ("cf_table.csv", _csv_text(["n", "k_n", "p_n", "q_n", "err"], table)),
        ],
    )


def cmd_tune(doc, outdir, seed):
    k = _Keys(doc)
    mspec = k.take("map")
    m, kind = _map_from_config(mspec, forbid_translation=True)
    target = _cf_from_config(k.take("target_rho"), "target_rho")
    tol = k.real("tol", 1e-10)
    cap = k.integer("cap", DEFAULT_ORBIT_CAP)
    k.done()

    res = tune_translation(m, target.value, tol=tol, cap=cap)
    report = {
        "schema": SCHEMA,
        "command": "tune",
        "kind": kind,
        "target": target.value,
        "t_star": res.translation,
        "certified_tol": res.certified_tol,
        "bisections": res.bisections,
        "rho": {
            "value": res.rho.value,
            "lower": res.rho.lower,
            "upper": res.rho.upper,
        },
    }
    return _write_all(outdir, [("tune.json", _json_text(report) + "\n")])


def cmd_partition(doc, outdir, seed):
    k = _Keys(doc)
    m, _ = _map_from_config(k.take("map"))
    cf = _cf_from_config(k.take("rho"))
    x0 = k.real("x0", 0.05)
    n = k.integer("n")
    denjoy_samples = k.integer("denjoy_samples", 0)
    decay_n_max = k.integer("decay_n_max", 0)
    refinement = k.flag("refinement", False)
    cap = k.integer("cap", DEFAULT_ORBIT_CAP)
    k.done()

    part = build_partition(m, cf, x0, n, cap=cap)
    summary = {
        "schema": SCHEMA,
        "command": "partition",
        "n": n,
        "q_n": part.q_n,
        "q_nm1": part.q_nm1,
        "elements": len(part.elements),
        "total_length": part.total_length(),
        "max_length": part.max_length(),
        "min_length": part.min_length(),
    }

    if denjoy_samples > 0:
        stats = map_stats(m)
        rng = random.Random(seed)
        prods = []
        attempts = 0
        while len(prods) < denjoy_samples:
            attempts += 1
            if attempts > 10 * denjoy_samples:
                raise InvariantFailure(
                    "random base points keep colliding with break orbits"
                )
            try:
                prods.append(denjoy_product(m, cf, rng.random(), n, cap=cap))
            except BreakCollision:
                continue
        summary["denjoy"] = {
            "samples": denjoy_samples,
            "n": n,
            "min": min(prods),
            "max": max(prods),
            "lower_bound": math.exp(-stats.v),
            "upper_bound": math.exp(stats.v),
            "v": stats.v,
        }

    if decay_n_max > 0:
        if decay_n_max < 2:
            raise ConfigError("decay_n_max must be at least 2")
        fit = max_element_decay(m, cf, x0, decay_n_max, cap=cap)
        summary["decay"] = {
            "rows": [[rn, ln] for rn, ln in fit.rows],
            "slope": fit.slope,
            "intercept": fit.intercept,
            "log_lambda": fit.log_lambda,
            "margin": fit.margin,
            "within_bound": fit.within_bound,
        }

    if refinement:
        fine = build_partition(m, cf, x0, n + 1, cap=cap)
        rep = check_refinement(part, fine, cf)
        summary["refinement"] = {
            "k_next": rep.k_next,
            "expected_splits": rep.k_next + 1,
            "split_min": min(rep.split_counts),
            "split_max": max(rep.split_counts),
            "persisted": rep.persisted,
        }

    return _write_all(
        outdir,
        [
            ("partition.json", _json_text(summary) + "\n"),
            (
                "partition.csv",
                _csv_text(
                    ["n", "rank_tag", "index", "left", "length"],
                    partition_rows(part),
                ),
            ),
        ],
    )


def _config_quadruple(raw, where):
    ok = (
        isinstance(raw, list)
        and len(raw) == 4
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw)
    )
    if not ok:
        raise ConfigError(f"{where} must be a list of four numbers")
    try:
        return Quadruple(*(float(v) for v in raw))
    except CircleBreakError as e:
        raise ConfigError(f"{where}: {e}") from e


def cmd_distortion(doc, outdir, seed):
    k = _Keys(doc)
    m, _ = _map_from_config(k.take("map"))
    quads_spec = k.take("quadruples", None)
    sample_spec = k.take("sample", None)
    k.done()

    quads = []
    if quads_spec is not None:
        if not isinstance(quads_spec, list):
            raise ConfigError("quadruples must be a list of 4-point lists")
        quads = [
            _config_quadruple(raw, f"quadruples[{i}]")
            for i, raw in enumerate(quads_spec)
        ]
    if sample_spec is not None:
        sk = _Keys(sample_spec, "sample")
        count = sk.integer("count")
        scale = sk.real("scale", 0.01)
        sk.done()
        if count < 1 or not 0 < scale <= 0.2:
            raise ConfigError("sample.count must be >= 1 and 0 < sample.scale <= 0.2")
        rng = random.Random(seed)
        for _ in range(count):
            z1 = rng.random()
            gaps = [scale * (0.25 + rng.random()) for _ in range(3)]
            quads.append(
                Quadruple(
                    z1,
                    z1 + gaps[0],
                    z1 + gaps[0] + gaps[1],
                    z1 + gaps[0] + gaps[1] + gaps[2],
                )
            )
    if not quads:
        raise ConfigError("distortion needs a quadruples list or a sample block")

    rows = []
    closed_form_rows = 0
    max_residual = 0.0
    for q in quads:
        cr = cross_ratio(q)
        d = distortion(q, m)
        inside = [
            b for b in m.breaks if q.z1 < lift_into(b.location, q.z1) < q.z4
        ]
        pred = resid = bound = ""
        if not inside:
            sb = smooth_distortion_bound(m, q)
            pred, resid, bound = 1.0, abs(d - 1.0), sb.bound
            if resid > bound + 1e-13:
                raise InvariantFailure(
                    f"break-free distortion residual {resid:.3e} exceeds the "
                    f"smooth bound {bound:.3e}"
                )
        elif len(inside) == 1:
            try:
                cf = single_break_closed_form(q, inside[0], m)
            except BreakNotInStatedInterval:
                pass  # break in the middle gap: no closed form applies
            else:
                pred = cf.predicted
                resid = abs(cf.actual - cf.predicted)
                bound = cf.residual_bound
                closed_form_rows += 1
                max_residual = max(max_residual, resid)
        rows.append((q.z1, q.z2, q.z3, q.z4, cr, d, pred, resid, bound))

    report = {
        "schema": SCHEMA,
        "command": "distortion",
        "count": len(rows),
        "closed_form_rows": closed_form_rows,
        "max_closed_form_residual": max_residual if closed_form_rows else None,
    }
    return _write_all(
        outdir,
        [
            ("distortion.json", _json_text(report) + "\n"),
            (
                "distortion.csv",
                _csv_text(
                    ["z1", "z2", "z3", "z4", "Cr", "Dist", "predicted", "residual", "bound"],
                    rows,
                ),
            ),
        ],
    )


def cmd_measure(doc, outdir, seed):
    k = _Keys(doc)
    m, _ = _map_from_config(k.take("map"))
    cf = _cf_from_config(k.take("rho"))
    x0 = k.real("x0", 0.05)
    n = k.integer("n")
    points = k.integer("points", 2000)
    drift_tol = k.real("drift_tol", 1e-6)
    cap = k.integer("cap", DEFAULT_ORBIT_CAP)
    k.done()

    est = _rho_enclosure(m, cap)
    om = conjugacy_values(m, est, x0, points, drift_tol=drift_tol, cap=cap)
    part = build_partition(m, cf, x0, n, cap=cap)
    mrows = partition_masses(om, part)

    by_rank = {}
    for r in mrows:
        by_rank.setdefault(r.rank_tag, []).append(r.mass)
    rank_summary = {
        str(tag): {
            "count": len(masses),
            "mass": statistics.median(masses),
            "spread": max(masses) - min(masses),
        }
        for tag, masses in sorted(by_rank.items())
    }
    report = {
        "schema": SCHEMA,
        "command": "measure",
        "n": n,
        "points": points,
        "rho": {"value": est.value, "lower": est.lower, "upper": est.upper},
        "mass_sum": sum(r.mass for r in mrows),
        "ranks": rank_summary,
        "identity_residual": mass_identity_residual(cf, est.value, n),
    }
    return _write_all(
        outdir,
        [
            ("measure.json", _json_text(report) + "\n"),
            (
                "measure.csv",
                _csv_text(
                    ["n", "rank", "index", "length", "mass", "density"],
                    [
                        (n, r.rank_tag, r.index, r.length, r.mass, r.density)
                        for r in mrows
                    ],
                ),
            ),
        ],
    )


def cmd_singularity(doc, outdir, seed):
    allowed = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"unknown singularity config keys: {', '.join(unknown)}")
    kwargs = dict(doc)
    if "rho_quotients" in kwargs:
        rq = kwargs["rho_quotients"]
        if not isinstance(rq, list) or not rq:
            raise ConfigError("rho_quotients must be a non-empty list of integers")
        kwargs["rho_quotients"] = tuple(rq)
    config = ExperimentConfig(**kwargs)

    report = singularity_report(config)
    body = {"schema": SCHEMA, "command": "singularity"}
    body.update(report.to_json_dict())

    artifacts = [
        ("report.json", _json_text(body) + "\n"),
        (
            "rows.csv",
            _csv_text(
                ["n", "q_n", "gf_gap", "dist_qn_gap", "lorenz_90_length", "case_tag"],
                [
                    (
                        r.n,
                        r.q_n,
                        "" if r.gf is None else r.gf,
                        r.dist_gap,
                        r.lorenz_90_length,
                        r.case_tag,
                    )
                    for r in report.rows
                ],
            ),
        ),
    ]
    for curve in report.curves:
        artifacts.append(
            (
                f"lorenz_n{curve.n}.csv",
                _csv_text(["cum_length", "cum_mass"], list(curve.points)),
            )
        )
    return _write_all(outdir, artifacts)


_COMMANDS = {
    "rotnum": cmd_rotnum,
    "tune": cmd_tune,
    "partition": cmd_partition,
    "distortion": cmd_distortion,
    "measure": cmd_measure,
    "singularity": cmd_singularity,
}


def _load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    return doc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="circlebreak",
        description="Circle maps with break points: rotation numbers, "
        "dynamical partitions, cross-ratio distortion, invariant-measure "
        "experiments.",
    )
    ap.add_argument("command", choices=sorted(_COMMANDS))
    ap.add_argument("--config", required=True, help="path to the JSON config")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument(
        "--precision",
        choices=("double", "extended"),
        default="double",
        help="numeric backend (only double is built in)",
    )
    ap.add_argument(
        "--seed", type=int, default=0, help="seed for sampled base points"
    )
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.precision != "double":
            raise ConfigError(
                "the extended precision backend is not built into this "
                "package; run with --precision double"
            )
        doc = _load_config(args.config)
        written = _COMMANDS[args.command](doc, args.out, args.seed)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except PrecisionBudgetExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except InvariantFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except CircleBreakError as e:
        print(f"error: {e}", file=sys.stderr)
        return 5
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
