"""Batch analyses over sampled chart points and their JSON/CSV encodings."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from . import catalog
from . import chart as ch
from . import twistor as tw
from .chern import chern_data, one_one_defect, wedge_square_coeff
from .curvature import FrameError, SingularMetricError, point_geometry
from .dsl import DSLError, MetricDomainError, MetricSpec, parse_metric, validate
from .jets import JetDomainError
from .lambda2 import ZERO_TOL, CurvatureSymmetryError, blocks_from_frame_curvature, sup_over_rotations
from .forms import numerical_d

SCHEMA = "twistorlab/1"
ROTATIONS = 200
GRAM_TOL = 1e-9
SCAN_COLUMNS = ("t", "gauduchon1_plus", "gauduchon1_minus", "kahler_plus_defect", "kahler_minus_defect")


class ValidationFailure(Exception):
    """Bad configuration or metric input (exit code 2)."""

    def __init__(self, message: str, **detail: Any):
        super().__init__(message)
        self.detail = detail


class NumericalFailure(Exception):
    """The engine could not evaluate the metric reliably (exit code 3)."""

    def __init__(self, message: str, **detail: Any):
        super().__init__(message)
        self.detail = detail


NUMERICAL_ERRORS = (
    SingularMetricError,
    FrameError,
    CurvatureSymmetryError,
    tw.LambdaConsistencyError,
    JetDomainError,
    MetricDomainError,
    np.linalg.LinAlgError,
    FloatingPointError,
    ZeroDivisionError,
    OverflowError,
)


@dataclass
class RunConfig:
    manifold: str | None = "sphere4"
    params: dict[str, float] = field(default_factory=dict)
    metric_file: str | None = None
    orientation: str = "standard"
    t_values: list[float] = field(default_factory=lambda: [1.0])
    points: int = 10
    seed: int = 0
    tol: float = ZERO_TOL
    h: float = ch.DEFAULT_H
    format: str = "json"
    out: str | None = None
    analyses: tuple[str, ...] = ("blocks", "twistor", "chern")
    workers: int = 4
    corrupt_frame: bool = False

    def check(self) -> None:
        if (self.manifold is None) == (self.metric_file is None):
            raise ValidationFailure("give exactly one of a catalog manifold or a metric file")
        if not self.t_values or any(not (t > 0 and np.isfinite(t)) for t in self.t_values):
            raise ValidationFailure("t values must be positive", t=list(self.t_values))
        if self.points < 1:
            raise ValidationFailure("need at least one sample point", points=self.points)
        if not self.tol > 0 or not self.h > 0:
            raise ValidationFailure("tolerances must be positive", tol=self.tol, h=self.h)
        if self.format not in ("json", "csv"):
            raise ValidationFailure("format must be json or csv", format=self.format)
        if self.orientation not in ("standard", "reversed"):
            raise ValidationFailure("orientation must be standard or reversed")
        unknown = set(self.analyses) - {"blocks", "twistor", "chern"}
        if unknown:
            raise ValidationFailure("unknown analyses", analyses=sorted(unknown))

    def echo(self) -> dict[str, Any]:
        d = asdict(self)
        d["analyses"] = list(self.analyses)
        d.pop("workers")
        if not self.corrupt_frame:
            d.pop("corrupt_frame")
        return d


def load_spec(config: RunConfig) -> tuple[MetricSpec, catalog.CatalogEntry | None]:
    try:
        if config.metric_file is not None:
            try:
                text = Path(config.metric_file).read_text(encoding="utf-8")
            except OSError as exc:
                raise ValidationFailure(f"cannot read metric file: {exc}") from exc
            spec = parse_metric(text, **config.params).with_orientation(config.orientation)
            return spec, None
        entry = catalog.get(config.manifold, config.params, config.orientation)
        return entry.spec, entry
    except catalog.CatalogError as exc:
        raise ValidationFailure(str(exc)) from exc
    except DSLError as exc:
        detail = {}
        if hasattr(exc, "line"):
            detail = {"line": exc.line, "col": exc.col}
        raise ValidationFailure(str(exc), **detail) from exc


def sample(spec: MetricSpec, config: RunConfig) -> np.ndarray:
    rng = np.random.default_rng(config.seed)
    pts = catalog.sample_points(spec, config.points, rng)
    diag = validate(spec, pts)
    if not diag.passed:
        bad = diag.first_failure
        raise ValidationFailure(
            "metric failed validation", point=list(bad.point), reason=bad.error or "not symmetric"
        )
    return pts


def _cplx(z: complex) -> dict[str, float]:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def _matrix(M: np.ndarray) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.asarray(M)]


def _sup_rotations(blocks, quantity, seed: int, index: int) -> float:
    return float(sup_over_rotations(blocks, quantity, np.random.default_rng([seed, index]), ROTATIONS))


def _balanced_of(blocks) -> float:
    return tw.balanced_defect(tw.lambda_from_blocks(blocks, 1.0))


def analyze_point(spec: MetricSpec, x: np.ndarray, index: int, config: RunConfig) -> dict[str, Any]:
    geo = point_geometry(spec, x)
    R = geo.frame_curvature()
    blocks = blocks_from_frame_curvature(R)
    rec: dict[str, Any] = {
        "index": index,
        "coords": [float(v) for v in x],
        "s": blocks.s,
        "w_plus_norm": float(np.linalg.norm(blocks.w_plus)),
        "w_minus_norm": float(np.linalg.norm(blocks.w_minus)),
        "b_norm": blocks.einstein_defect,
        "curvature_norm": blocks.norm,
        "asd": blocks.is_asd(config.tol),
        "einstein": blocks.is_einstein(config.tol),
    }
    if "blocks" in config.analyses:
        rec["blocks"] = {"A": _matrix(blocks.A), "B": _matrix(blocks.B), "C": _matrix(blocks.C)}
    if "twistor" in config.analyses:
        rec["balanced_defect_sup"] = _sup_rotations(blocks, _balanced_of, config.seed, index)
        ts = tw.t_star(blocks)
        rec["t_star"] = ts
        rec["twistor"] = []
        for t in config.t_values:
            lam = tw.lambda_from_blocks(blocks, t)
            d = tw.twistor_defects(blocks, t, config.tol)
            rec["twistor"].append(
                {
                    "t": float(t),
                    "lambdas": {k: _cplx(v) for k, v in lam.as_dict().items()},
                    "balanced_defect": d.balanced_defect,
                    "kahler_plus_defect": d.kahler_plus_defect,
                    "kahler_minus_defect": d.kahler_minus_defect,
                    "gauduchon1_plus": d.gauduchon1_plus,
                    "gauduchon1_minus": d.gauduchon1_minus,
                    "symplectic12_class": d.symplectic12_class.value,
                }
            )
    if "chern" in config.analyses:
        cd = chern_data(R)
        rec["chern"] = {
            "D": _matrix(cd.D),
            "class": cd.definiteness.kind.value,
            "eigenvalues": list(cd.definiteness.eigenvalues),
            "one_one_defect": cd.one_one_defect,
            "one_one_defect_sup": _sup_rotations(blocks, one_one_defect, config.seed + 1, index),
            "wedge_square_coeff": cd.wedge_square_coeff,
            "c1_fiber_coeff": cd.c1_fiber_coeff,
        }
    return rec


def _parallel(fn, items: Sequence, workers: int) -> list:
    # ordered map: results come back in sample order, so output is byte-stable
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _stats(values: Sequence[float]) -> dict[str, float]:
    a = np.asarray(values, dtype=float)
    return {"max": float(a.max()), "min": float(a.min()), "mean": float(a.mean())}


def _guard(fn, *args):
    try:
        with np.errstate(divide="raise", invalid="raise", over="raise"):
            return fn(*args)
    except NUMERICAL_ERRORS as exc:
        raise NumericalFailure(f"{type(exc).__name__}: {exc}") from exc


def _constant_s(values: Sequence[float]) -> bool:
    s = np.asarray(values)
    return bool(s.max() - s.min() < 1e-6 * max(1.0, float(np.max(np.abs(s)))))


def run_analyze(config: RunConfig) -> dict[str, Any]:
    config.check()
    spec, entry = load_spec(config)
    pts = sample(spec, config)

    def one(item):
        i, x = item
        try:
            return _guard(analyze_point, spec, x, i, config)
        except NumericalFailure as exc:
            exc.detail["point"] = [float(v) for v in x]
            raise

    records = _parallel(one, list(enumerate(pts)), config.workers)
    records.sort(key=lambda r: r["index"])

    agg: dict[str, Any] = {
        "s": _stats([r["s"] for r in records]),
        "w_plus_norm": _stats([r["w_plus_norm"] for r in records]),
        "b_norm": _stats([r["b_norm"] for r in records]),
        "asd": all(r["asd"] for r in records),
        "einstein": all(r["einstein"] for r in records),
        "constant_s": _constant_s([r["s"] for r in records]),
    }
    agg["gauduchon_applicable"] = agg["asd"] and agg["constant_s"]
    if "twistor" in config.analyses:
        agg["balanced_defect_sup"] = _stats([r["balanced_defect_sup"] for r in records])
        per_t = []
        for k, t in enumerate(config.t_values):
            rows = [r["twistor"][k] for r in records]
            per_t.append(
                {"t": float(t)}
                | {
                    key: _stats([row[key] for row in rows])
                    for key in (
                        "balanced_defect",
                        "kahler_plus_defect",
                        "kahler_minus_defect",
                        "gauduchon1_plus",
                        "gauduchon1_minus",
                    )
                }
            )
        agg["twistor"] = per_t
    if "chern" in config.analyses:
        classes: dict[str, int] = {}
        for r in records:
            classes[r["chern"]["class"]] = classes.get(r["chern"]["class"], 0) + 1
        agg["chern_classes"] = dict(sorted(classes.items()))
        agg["one_one_defect_sup"] = _stats([r["chern"]["one_one_defect_sup"] for r in records])
        agg["wedge_square_coeff"] = _stats([r["chern"]["wedge_square_coeff"] for r in records])

    return {
        "schema": SCHEMA,
        "version": __version__,
        "command": "analyze",
        "config": config.echo(),
        "manifold": _entry_info(entry),
        "tolerances": {"zero": config.tol, "h": config.h, "rotations": ROTATIONS},
        "points": records,
        "aggregates": agg,
    }


def _entry_info(entry: catalog.CatalogEntry | None) -> dict[str, Any] | None:
    if entry is None:
        return None
    return {
        "name": entry.name,
        "params": dict(entry.params),
        "expected": entry.flags | {"s": entry.expected_s},
    }


def _signed_extreme(values: Sequence[float]) -> float:
    a = np.asarray(values, dtype=float)
    return float(a[np.argmax(np.abs(a))])


def run_scan_t(config: RunConfig) -> dict[str, Any]:
    """Defects over a t-grid; gauduchon columns keep the sample value of largest magnitude, defects the max."""
    config.check()
    spec, entry = load_spec(config)
    pts = sample(spec, config)

    def blocks_at(x):
        return _guard(lambda: blocks_from_frame_curvature(point_geometry(spec, x).frame_curvature()))

    blocks = _parallel(blocks_at, list(pts), config.workers)

    def row(t):
        ds = [tw.twistor_defects(b, t, config.tol) for b in blocks]
        return {
            "t": float(t),
            "gauduchon1_plus": _signed_extreme([d.gauduchon1_plus for d in ds]),
            "gauduchon1_minus": _signed_extreme([d.gauduchon1_minus for d in ds]),
            "kahler_plus_defect": max(d.kahler_plus_defect for d in ds),
            "kahler_minus_defect": max(d.kahler_minus_defect for d in ds),
        }

    rows = [_guard(row, t) for t in config.t_values]
    s_values = [b.s for b in blocks]
    return {
        "schema": SCHEMA,
        "version": __version__,
        "command": "scan-t",
        "config": config.echo(),
        "manifold": _entry_info(entry),
        "gauduchon_applicable": all(b.is_asd(config.tol) for b in blocks) and _constant_s(s_values),
        "rows": rows,
    }


def oracle_point(spec: MetricSpec, p: np.ndarray, index: int, config: RunConfig, ddbar: bool = False) -> dict[str, Any]:
    corrupt = 0.5 if config.corrupt_frame else None
    t = config.t_values[0]
    h = config.h
    res: list[ch.Residual] = []
    chart = ch.TwistorChart(spec, t, corrupt_omega=corrupt)
    for sign in "+-":
        if corrupt is None:
            res.append(ch.compare_dK(spec, p, t, sign, h))
        else:
            # the prediction is evaluated from the corrupted frame too
            sec = chart.section(p)
            pred = ch.predicted_dK(sec, sign)

            def r(hh, sign=sign, pred=pred, sec=sec):
                return ch.coframe_size(numerical_d(lambda q: chart.kform(q, sign), p, hh) - pred, sec)

            res.append(ch._residual(f"dK{sign}", r, h, True))
    res.extend(ch.verify_structure_equations(spec, p, t, h, corrupt_omega=corrupt))
    sec = chart.section(p)
    gram = ch.gram_residual(sec)
    comp = ch.compatibility_residual(sec, "+")
    ws_formula = wedge_square_coeff(sec.curvature)
    ws_num = ch.numerical_wedge_square(spec, p, t, h)
    out = {
        "index": index,
        "coords": [float(v) for v in p],
        "residuals": [r.as_dict() for r in res],
        "gram_residual": gram,
        "compatibility": comp,
        "wedge_square": {
            "formula": ws_formula,
            "numerical": ws_num,
            "residual": abs(ws_num - ws_formula),
            "threshold": 10 * h * h * max(1.0, abs(ws_formula)),
        },
    }
    if ddbar and corrupt is None:
        dd = ch.check_ddbar_kplus(spec, p, t, h)
        out["residuals"].append(dd.residual.as_dict())
        out["gauduchon1_plus"] = {"measured": dd.gauduchon_measured, "formula": dd.gauduchon_formula}
    return out


def run_oracle(config: RunConfig) -> dict[str, Any]:
    config.check()
    spec, entry = load_spec(config)
    base = sample(spec, config)
    rng = np.random.default_rng([config.seed, 1])
    ys = rng.uniform(-1.0, 1.0, size=(len(base), 2))
    pts = np.hstack([base, ys])

    # the closed form for dd-bar K+ only holds for ASD metrics of constant s
    blocks = [_guard(lambda x=x: blocks_from_frame_curvature(point_geometry(spec, x).frame_curvature())) for x in base]
    ddbar = all(b.is_asd(config.tol) for b in blocks) and _constant_s([b.s for b in blocks])

    def one(item):
        i, p = item
        try:
            return _guard(oracle_point, spec, p, i, config, ddbar)
        except ch.ChartError as exc:
            raise ValidationFailure(str(exc), point=[float(v) for v in p]) from exc

    records = _parallel(one, list(enumerate(pts)), config.workers)
    records.sort(key=lambda r: r["index"])
    failures = []
    for r in records:
        checks = [(res["name"], res["residual"], res["passed"] and res["converges"]) for res in r["residuals"]]
        checks.append(("gram", r["gram_residual"], r["gram_residual"] < GRAM_TOL))
        worst = max(r["compatibility"].values())
        checks.append(("compatibility", worst, worst < GRAM_TOL))
        ws = r["wedge_square"]
        checks.append(("wedge_square", ws["residual"], ws["residual"] < ws["threshold"]))
        failures += [{"index": r["index"], "name": n, "residual": v} for n, v, good in checks if not good]
    return {
        "schema": SCHEMA,
        "version": __version__,
        "command": "oracle",
        "config": config.echo(),
        "manifold": _entry_info(entry),
        "tolerances": {"h": config.h, "threshold": 10 * config.h**2, "gram": GRAM_TOL},
        "points": records,
        "failures": failures,
        "passed": not failures,
    }


# ---------------------------------------------------------------------------
# encodings
# ---------------------------------------------------------------------------


def to_json(report: dict[str, Any]) -> str:
    # repr-based float formatting gives the shortest round-trip decimal
    return json.dumps(report, indent=2, sort_keys=False, allow_nan=False) + "\n"


ANALYZE_COLUMNS = (
    "index", "x1", "x2", "x3", "x4", "s", "w_plus_norm", "w_minus_norm", "b_norm", "t",
    "balanced_defect", "kahler_plus_defect", "kahler_minus_defect", "gauduchon1_plus", "gauduchon1_minus",
    "one_one_defect", "wedge_square_coeff",
)


def analyze_rows(report: dict[str, Any]) -> list[dict[str, Any]]:
    rows = []
    for r in report["points"]:
        base = {"index": r["index"], **{f"x{k + 1}": v for k, v in enumerate(r["coords"])}}
        base |= {k: r[k] for k in ("s", "w_plus_norm", "w_minus_norm", "b_norm")}
        chern = r.get("chern", {})
        extra = {"one_one_defect": chern.get("one_one_defect"), "wedge_square_coeff": chern.get("wedge_square_coeff")}
        for tw_rec in r.get("twistor", [{"t": None}]):
            row = dict(base)
            row["t"] = tw_rec.get("t")
            for k in ANALYZE_COLUMNS[10:15]:
                row[k] = tw_rec.get(k)
            row |= extra
            rows.append(row)
    return rows


def _cell(v: Any) -> str:
    # repr of a float is its shortest round-trip decimal, the same digits json writes
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def _csv(rows: list[dict[str, Any]], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def to_csv(report: dict[str, Any]) -> str:
    if report["command"] == "scan-t":
        return _csv(report["rows"], SCAN_COLUMNS)
    if report["command"] == "analyze":
        return _csv(analyze_rows(report), ANALYZE_COLUMNS)
    rows = []
    for r in report["points"]:
        for res in r["residuals"]:
            rows.append({"index": r["index"], **res})
    return _csv(rows, ("index", "name", "h", "residual", "residual_half", "ratio", "threshold", "passed", "converges"))


def encode(report: dict[str, Any], fmt: str) -> str:
    return to_json(report) if fmt == "json" else to_csv(report)
