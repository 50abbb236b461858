"""One test per acceptance criterion; each records a PASS/FAIL line for the run summary."""

import json

import numpy as np
import pytest

from twistorlab import catalog
from twistorlab import chart as ch
from twistorlab import twistor as tw
from twistorlab.chern import Definiteness, chern_data, classify_definiteness, definiteness_operator, one_one_defect, wedge_square_coeff
from twistorlab.cli import main
from twistorlab.curvature import point_geometry
from twistorlab.dsl import format_metric, metric_derivatives, parse_metric
from twistorlab.lambda2 import (
    CurvatureBlocks,
    blocks_from_frame_curvature,
    frame_curvature_from_blocks,
    random_so4,
    rotate_blocks,
    so4_split,
    sup_over_rotations,
)

from conftest import ACCEPTANCE_LINES, synthetic_blocks

H = 1e-3
SQRT2 = float(np.sqrt(2))


def record(n, title, ok, detail):
    line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line


def catalog_blocks(name, params=None, orientation="standard", n=5, seed=0):
    entry = catalog.get(name, params, orientation)
    rng = np.random.default_rng(seed)
    return [
        blocks_from_frame_curvature(point_geometry(entry.spec, x).frame_curvature())
        for x in catalog.sample_points(entry.spec, n, rng)
    ]


def chart_points(spec, n, rng):
    return np.hstack([catalog.sample_points(spec, n, rng, margin=0.1), rng.uniform(-1, 1, (n, 2))])


def test_criterion_01_sphere_calibration():
    err = 0.0
    for b in catalog_blocks("sphere4", {"r": 1}, n=10, seed=1):
        lam = tw.lambda_from_blocks(b, 1.0)
        err = max(
            err,
            abs(b.s - 12),
            np.abs(b.A - np.eye(3)).max(),
            np.abs(b.C - np.eye(3)).max(),
            np.abs(b.B).max(),
            abs(lam.l12 - 0.5),
        )
    record(1, "unit S4 calibration", err < 1e-8, f"max deviation {err:.2e} (tol 1e-8)")


def test_criterion_02_kahler_point():
    ts = np.linspace(0.5, 2.0, 16)
    blocks = catalog_blocks("sphere4", {"r": 1}, n=5, seed=2)
    zeros, lhs_err = set(), 0.0
    for t in ts:
        for b in blocks:
            lam = tw.lambda_from_blocks(b, t)
            if tw.kahler_defect(lam, "+") < 1e-8:
                zeros.add(float(t))
            lhs_err = max(lhs_err, abs(tw.gauduchon1_plus(b, lam) - 2 * (1 - t * t) ** 2))
    ok = zeros == {1.0} and lhs_err < 1e-8
    record(2, "Kahler point of J+", ok, f"zeros at t={sorted(zeros)}, gauduchon lhs error {lhs_err:.2e}")


def test_criterion_03_gauduchon_minus():
    worst = 0.0
    for r in (1, 2):
        for b in catalog_blocks("sphere4", {"r": r}, n=5, seed=3):
            for t in (0.1, 1.0, 10.0):
                worst = max(worst, abs(tw.gauduchon1_minus(b, tw.lambda_from_blocks(b, t))))
    b = CurvatureBlocks(np.eye(3), np.diag([0, 0.2, 0]), np.eye(3))
    conv = max(abs(tw.gauduchon1_minus(b, tw.lambda_from_blocks(b, t)) + t**4 * 0.04) for t in (0.1, 0.5, 1.0, 3.0))
    ok = worst < 1e-8 and conv < 1e-10
    record(3, "J- first Gauduchon", ok, f"sphere max {worst:.2e}, synthetic B error {conv:.2e}")


def test_criterion_04_balanced():
    cases = [
        ("flat", {}, "standard", True),
        ("sphere4", {"r": 1}, "standard", True),
        ("cp2_fs", {}, "reversed", True),
        ("s2xs2", {"r1": 1, "r2": 1}, "standard", False),
        ("cp2_fs", {}, "standard", False),
    ]

    def bal(b):
        return tw.balanced_defect(tw.lambda_from_blocks(b, 1.0))

    ok, parts = True, []
    for k, (name, params, orientation, asd) in enumerate(cases):
        blocks = catalog_blocks(name, params, orientation, n=3, seed=40 + k)
        rng = np.random.default_rng(400 + k)
        sups = [sup_over_rotations(b, bal, rng, 200) for b in blocks]
        assert all((b.asd_defect < 1e-8) == asd for b in blocks)
        good = max(sups) < 1e-8 if asd else min(sups) > 1e-3
        ok &= good
        parts.append(f"{name}/{orientation[:3]} {max(sups) if asd else min(sups):.1e}")
    rng = np.random.default_rng(4)
    ident = 0.0
    for _ in range(20):
        lam = tw.lambda_from_blocks(synthetic_blocks(rng), rng.uniform(0.2, 2))
        ident = max(ident, (tw.kdk_form(lam, "+") + tw.kdk_form(lam, "-")).max_abs())
    ok &= ident < 1e-12
    record(4, "balanced iff ASD", ok, ", ".join(parts) + f"; K+dK+ + K-dK- = {ident:.1e}")


def test_criterion_05_definiteness():
    D = [definiteness_operator(catalog_blocks(n, p, n=1, seed=5)[0]) for n, p in (("sphere4", {"r": 1}), ("s2xs2", {"r1": 1, "r2": 1}), ("flat", {}))]
    c = [classify_definiteness(d) for d in D]
    ok = np.abs(D[0] - np.eye(3)).max() < 1e-8 and c[0].kind is Definiteness.positive_definite
    ok &= np.allclose(sorted(c[1].eigenvalues), [0, 0, 1], atol=1e-8) and c[1].kind is Definiteness.semidefinite
    ok &= np.abs(D[2]).max() < 1e-12 and c[2].kind is Definiteness.semidefinite
    rng = np.random.default_rng(5)
    err = 0.0
    for _ in range(20):
        b = synthetic_blocks(rng, asd=True, einstein=True)
        err = max(err, np.abs(definiteness_operator(b) - (b.s / 12) ** 2 * np.eye(3)).max())
    ok &= err < 1e-9
    record(5, "definiteness of D", ok, f"classes {[x.kind.value for x in c]}, ASD-Einstein error {err:.1e}")


def test_criterion_06_one_one():
    rng = np.random.default_rng(6)
    samples = []
    for k, (name, orientation) in enumerate(
        [("flat", "standard"), ("sphere4", "standard"), ("s2xs2", "standard"), ("cp2_fs", "standard"),
         ("cp2_fs", "reversed"), ("perturbed_flat", "standard")]
    ):
        samples += catalog_blocks(name, None, orientation, n=2, seed=60 + k)
    for k in range(50):
        samples.append(synthetic_blocks(rng, asd=k % 2 == 0, einstein=k % 3 == 0))
    mismatches = 0
    for b in samples:
        sup = sup_over_rotations(b, one_one_defect, rng, 200)
        mismatches += (sup < 1e-8) != (b.asd_defect < 1e-8)
    record(6, "(1,1) Chern form iff ASD", mismatches == 0, f"{len(samples)} blocks, {mismatches} mismatches")


def test_criterion_07_wedge_square():
    rng = np.random.default_rng(7)
    err = 0.0
    for _ in range(20):
        b = synthetic_blocks(rng, asd=True, einstein=True)
        err = max(err, abs(wedge_square_coeff(frame_curvature_from_blocks(b)) - b.s**2 / 72))
    entry = catalog.get("sphere4", {"r": 1})
    vals = [chern_data(point_geometry(entry.spec, x).frame_curvature()).wedge_square_coeff
            for x in catalog.sample_points(entry.spec, 5, rng)]
    s4 = max(abs(v - 2) for v in vals)
    p = chart_points(entry.spec, 1, rng)[0]
    stencil = abs(ch.numerical_wedge_square(entry.spec, p, 1.0, H) - 2)
    ok = err < 1e-9 and s4 < 1e-9 and stencil < 10 * H * H
    record(7, "wedge square s^2/72", ok, f"synthetic {err:.1e}, sphere4 {s4:.1e}, stencil {stencil:.1e}")


def test_criterion_08_frame_covariance():
    rng = np.random.default_rng(8)
    cov = hom = 0.0
    for _ in range(100):
        b = synthetic_blocks(rng)
        a = random_so4(rng)
        direct = blocks_from_frame_curvature(frame_curvature_from_blocks(b).rotated(a))
        via = rotate_blocks(b, a)
        cov = max(cov, *(np.abs(M - N).max() for M, N in ((direct.A, via.A), (direct.B, via.B), (direct.C, via.C))))
        c = random_so4(rng)
        (ap, am), (cp, cm), (acp, acm) = so4_split(a), so4_split(c), so4_split(a @ c)
        hom = max(hom, np.abs(acp - ap @ cp).max(), np.abs(acm - am @ cm).max())
    record(8, "frame covariance", cov < 1e-9 and hom < 1e-9, f"rotation {cov:.1e}, homomorphism {hom:.1e}")


def test_criterion_09_chart_oracle():
    rng = np.random.default_rng(9)
    worst, ratios, gram, n = 0.0, [], 0.0, 0
    ok = True
    for name, params, t in (("flat", {}, 1.0), ("sphere4", {"r": 1}, 1.0), ("sphere4", {"r": 1}, SQRT2),
                            ("perturbed_flat", {"eps": 0.01}, 1.0)):
        spec = catalog.get(name, params).spec
        for p in chart_points(spec, 5, rng):
            res = [ch.compare_dK(spec, p, t, s, H) for s in "+-"] + ch.verify_structure_equations(spec, p, t, H)
            for r in res:
                n += 1
                ok &= r.passed and r.converges
                worst = max(worst, r.residual / r.threshold)
                if r.ratio is not None and r.residual > ch.ROUNDOFF_FLOOR:
                    ratios.append(r.ratio)
            gram = max(gram, ch.gram_residual(ch.section_frame(spec, p, t)))
    ok &= gram < 1e-9
    record(9, "chart oracle", ok,
           f"{n} residuals, worst {worst:.2f} of 10h^2, ratios [{min(ratios):.3f}, {max(ratios):.3f}], gram {gram:.1e}")


def test_criterion_10_type_decomposition():
    rng = np.random.default_rng(10)
    alg = 0.0
    for _ in range(50):
        lam = tw.lambda_from_blocks(synthetic_blocks(rng), rng.uniform(0.2, 2))
        tab = tw.type_decomposition_coeffs(lam)
        plus = tw.type_parts(tw.dK_coefficients(lam, "+"), "+")
        minus = tw.type_parts(tw.dK_coefficients(lam, "-"), "-")
        alg = max(
            alg,
            (tw.d21(plus[(1, 2)], lam, "+") - tab["d21_dbar_Kplus"]).max_abs(),
            (tw.d21(plus[(0, 3)], lam, "+") - tab["d21_dm12_Kplus"]).max_abs(),
            (tw.d21(minus[(1, 2)], lam, "-") - tab["d21_dbar_Kminus"]).max_abs(),
            (tw.d21(minus[(0, 3)], lam, "-") - tab["d21_dm12_Kminus"]).max_abs(),
        )
    spec = catalog.get("sphere4", {"r": 1}).spec
    num = 0.0
    conv = True
    for t in (1.0, SQRT2):
        for p in chart_points(spec, 3, rng):
            rep = ch.check_ddbar_kplus(spec, p, t, H)
            num = max(num, (rep.measured - tw.ddbar_kplus_asd_einstein(12.0, t)).max_abs())
            conv &= rep.residual.converges
    ok = alg < 1e-12 and num < 10 * H * H and conv
    record(10, "type decomposition and dd-bar K+", ok, f"algebraic {alg:.1e}, sphere4 stencil {num:.1e} (tol {10*H*H:.0e})")


def test_criterion_11_dsl_and_jets():
    rng = np.random.default_rng(11)
    rt_ok = True
    for name in catalog.NAMES:
        spec = catalog.get(name).spec
        again = parse_metric(format_metric(spec))
        rt_ok &= again == spec
        for x in catalog.sample_points(spec, 100, rng):
            rt_ok &= bool(np.array_equal(spec.metric_value(x), again.metric_value(x)))
    h = 1e-4
    rel = 0.0
    for name in catalog.NAMES:
        spec = catalog.get(name).spec
        for x in catalog.sample_points(spec, 3, rng, margin=0.1):
            g, dg, ddg = metric_derivatives(spec, x)
            E = np.eye(4) * h
            for k in range(4):
                fd = (spec.metric_value(x + E[k]) - spec.metric_value(x - E[k])) / (2 * h)
                rel = max(rel, np.abs(fd - dg[k]).max() / max(1.0, np.abs(dg).max()))
                for l in range(4):
                    fd2 = (spec.metric_value(x + E[k] + E[l]) - spec.metric_value(x + E[k] - E[l])
                           - spec.metric_value(x - E[k] + E[l]) + spec.metric_value(x - E[k] - E[l])) / (4 * h * h)
                    rel = max(rel, np.abs(fd2 - ddg[k, l]).max() / max(1.0, np.abs(ddg).max()))
    record(11, "DSL round trip and jets", rt_ok and rel < 1e-5, f"round trip {'exact' if rt_ok else 'MISMATCH'}, jet vs FD {rel:.1e}")


def test_criterion_12_determinism(tmp_path, capsys):
    out = tmp_path / "rep.json"
    blobs = []
    for _ in range(2):
        code = main(["analyze", "--manifold", "s2xs2", "--r2", "2", "--t", "0.8", "--points", "8", "--seed", "12", "--out", str(out)])
        assert code == 0
        blobs.append(out.read_bytes())
    capsys.readouterr()
    json.loads(blobs[0])
    record(12, "byte-identical analyze", blobs[0] == blobs[1], f"{len(blobs[0])} bytes per report")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
