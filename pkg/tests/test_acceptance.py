"""Acceptance criteria 1-9; each test prints one ``CRITERION n: PASS/FAIL`` line."""

import time
from contextlib import contextmanager

import numpy as np
import pytest

from bulkedge.cli import run
from bulkedge.configspace import equivalence_residual, gl_equivalence
from bulkedge.confmap import bun_family, conf_region, conf_via_chart
from bulkedge.contours import Contour
from bulkedge.indices import (bulk_field, bulk_index, chern_diagnostics, chern_number, edge_family, edge_field,
                              verify_correspondence)
from bulkedge.matpoly import MatrixLaurentPoly, winding_number
from bulkedge.models import BUILTINS, builtin
from bulkedge.projectors import range_frames, riesz_projector
from bulkedge.toeplitz import stabilized_coker_dim
from helpers import (complex_normal, random_poly, random_poly_from_roots, random_unitary, two_band_family)
from oracles import berry_oracle

# independent Berry-curvature integrals (256 x 256 midpoint grid), frozen before the build
BERRY_FROZEN = {1.0: 1, -1.0: -1, 5.0: 0}


@contextmanager
def criterion(capsys, number, title):
    state = {"detail": ""}
    ok = False
    try:
        yield state
        ok = True
    finally:
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} - {title} {state['detail']}".rstrip())


def test_criterion_1_three_level_spectral_flow(capsys):
    with criterion(capsys, 1, "three-level path spectral flow") as state:
        t0 = time.perf_counter()
        code = run(["sf", "--builtin", "three_level"])
        elapsed = time.perf_counter() - t0
        out = capsys.readouterr().out
        state["detail"] = f"(sf = {out.strip()}, {elapsed:.3f} s)"
        assert code == 0 and out == "1\n"
        assert elapsed < 1.0


ZOO = [("qwz", {"m": 1.0}), ("qwz", {"m": -1.0}), ("qwz", {"m": 5.0}), ("hofstadter", {"p": 1, "q": 3}),
       ("hatano_nelson_x", {})]


def test_criterion_2_correspondence_zoo(capsys):
    with criterion(capsys, 2, "bulk = edge on the model zoo") as state:
        t0 = time.perf_counter()
        rows = []
        for name, params in ZOO:
            spec = builtin(name, **params)
            report = verify_correspondence(spec)
            grids = report.bulk.grids + report.edge.grids
            ambient = spec.d * (spec.k + spec.l)
            rows.append(f"{name}{params}: {report.bulk.value}/{report.edge.value}")
            assert report.converged and report.equal, rows[-1]
            assert max(max(g) for g in grids) <= 128
            assert ambient <= 12
        elapsed = time.perf_counter() - t0
        state["detail"] = f"({'; '.join(rows)}; {elapsed:.1f} s)"
        assert elapsed < 600


def test_criterion_3_qwz_calibration(capsys):
    with criterion(capsys, 3, "QWZ bulk index against Berry oracle") as state:
        parts = []
        for m, frozen in BERRY_FROZEN.items():
            oracle = berry_oracle(m)
            assert abs(oracle - round(oracle)) < 0.05
            assert round(oracle) == frozen
            value = bulk_index(builtin("qwz", m=m))
            raw = -chern_diagnostics(bulk_field(builtin("qwz", m=m), (32, 32))).raw
            assert abs(raw - value) < 0.05
            assert value == frozen
            parts.append(f"m={m:g}: {value} (oracle {oracle:.4f})")
        state["detail"] = "(" + "; ".join(parts) + ")"


def test_criterion_4_conf_rank_equals_winding(capsys):
    with criterion(capsys, 4, "conf_region rank = winding number") as state:
        rng = np.random.default_rng(2024)
        t0 = time.perf_counter()
        count = 0
        for d in (1, 2):
            for l in (1, 2, 3):  # noqa: E741
                for _ in range(200):
                    p = random_poly(rng, d, l, margin=1e-3)
                    assert conf_region(p).r == winding_number(p)
                    count += 1
        elapsed = time.perf_counter() - t0
        state["detail"] = f"({count} polynomials, {elapsed:.1f} s)"
        assert elapsed < 30


def block_sum(c1, c2):
    l = max(c1.shape[2], c2.shape[2])  # noqa: E741
    n1, n2, _, d1, _ = c1.shape
    d2 = c2.shape[3]
    out = np.zeros((n1, n2, l, d1 + d2, d1 + d2), dtype=complex)
    out[:, :, :c1.shape[2], :d1, :d1] = c1
    out[:, :, :c2.shape[2], d1:, d1:] = c2
    return out


def times_z(c):
    n1, n2, lp1, d, _ = c.shape
    out = np.zeros((n1, n2, lp1 + 1, d, d), dtype=complex)
    out[:, :, 1:] = c
    return out


def test_criterion_5_bun_properties(capsys):
    with criterion(capsys, 5, "Bun direct sum, identity, zH, tensor") as state:
        rng = np.random.default_rng(5)
        trials = 50
        grid = (16, 16)
        for _ in range(trials):
            c1, _ = two_band_family(rng, grid)
            c2, _ = two_band_family(rng, grid)
            f1, f2 = bun_family(c1), bun_family(c2)
            ch1, ch2 = chern_number(f1), chern_number(f2)
            s = bun_family(block_sum(c1, c2))
            assert s.rank == f1.rank + f2.rank and chern_number(s) == ch1 + ch2
            identity = np.broadcast_to(np.eye(2), (*grid, 1, 2, 2)).copy()
            e = bun_family(identity)
            assert e.rank == 0 and chern_number(e) == 0
            shifted = bun_family(times_z(c1))
            assert shifted.rank == f1.rank + 2 and chern_number(shifted) == ch1
            g = complex_normal(rng, 2, 2) + 2 * np.eye(2)
            tensor = np.einsum("ab,...ij->...aibj", g, c1).reshape(*c1.shape[:3], 4, 4)
            t = bun_family(tensor)
            assert t.rank == 2 * f1.rank and chern_number(t) == 2 * ch1
        state["detail"] = f"({trials} trials each)"


def test_criterion_6_riesz_comparison(capsys):
    with criterion(capsys, 6, "Riesz projector vs conf_region for z - A") as state:
        rng = np.random.default_rng(6)
        worst = np.inf
        nonnormal = 0
        for trial in range(50):
            n = int(rng.integers(1, 7))
            radii = np.where(rng.random(n) < 0.5, rng.uniform(0, 0.99, n), rng.uniform(1.01, 2.0, n))
            eig = radii * np.exp(2j * np.pi * rng.random(n))
            upper = np.triu(complex_normal(rng, n, n), 1) * (trial % 3)
            u = random_unitary(rng, n)
            a = u @ (np.diag(eig) + upper) @ u.conj().T
            nonnormal += int(np.linalg.norm(a @ a.conj().T - a.conj().T @ a) > 1e-8)
            p = riesz_projector(a, Contour.unit_circle())
            frames, ranks = range_frames(p[None])
            cfg = conf_region(MatrixLaurentPoly(np.stack([-a, np.eye(n)])))
            assert int(ranks[0]) == cfg.r == int(np.sum(radii < 1))
            if cfg.r == 0:
                continue
            f = frames[0]
            comparison = cfg.iota @ f
            sv = np.linalg.svd(comparison, compute_uv=False)
            worst = min(worst, sv[-1] / sv[0])
            assert sv[-1] > 1e-8 * sv[0]
            lhs = comparison @ (f.conj().T @ a @ f)
            assert np.allclose(lhs, cfg.A @ comparison, atol=1e-8 * max(1.0, np.linalg.norm(a)))
        state["detail"] = f"(50 matrices, {nonnormal} non-normal, worst sigma_min/norm {worst:.3g})"
        assert nonnormal >= 20


def test_criterion_7_toeplitz_sections(capsys):
    with criterion(capsys, 7, "stabilized Toeplitz cokernel = conf_region rank") as state:
        rng = np.random.default_rng(7)
        largest = 0
        for i in range(50):
            d, l = 1 + i % 2, 1 + (i // 2) % 3  # noqa: E741
            if i < 25:
                p = random_poly(rng, d, l, margin=0.05)
            else:
                p, _ = random_poly_from_roots(rng, d, l, margin=0.05)
            scan = stabilized_coker_dim(p)
            assert scan.stabilized and scan.value == conf_region(p).r
            largest = max(largest, scan.N_sequence[-1])
        state["detail"] = f"(50 symbols, largest N = {largest})"


def test_criterion_8_chart_coherence(capsys):
    with criterion(capsys, 8, "pencil and chart backends agree") as state:
        grid = (32, 32)
        parts = []
        for name in sorted(BUILTINS):
            spec = builtin(name)
            pen = edge_field(spec, grid)
            cha = edge_field(spec, grid, backend="chart")
            assert pen.rank == cha.rank
            assert chern_number(pen) == chern_number(cha)
            parts.append(f"{name}: r={pen.rank} c={chern_number(pen)}")
            # pointwise: two different charts give GL-equivalent configurations
            fam = edge_family(spec, (4, 4))
            for coeffs in fam.reshape(-1, *fam.shape[2:])[::5]:
                p = MatrixLaurentPoly(coeffs)
                if p.l == 0:
                    continue
                c1 = conf_via_chart(p, candidates=[3.0 + 0.5j])
                c2 = conf_via_chart(p, candidates=[-2.5 - 2.0j])
                g = gl_equivalence(c1, c2, tol=1e-6)
                assert g is not None and equivalence_residual(c1, c2, g) < 1e-6
        rng = np.random.default_rng(8)
        worst = 0.0
        for _ in range(50):
            p = random_poly(rng, int(rng.integers(1, 3)), int(rng.integers(1, 4)), margin=1e-2)
            plane, chart = conf_region(p), conf_via_chart(p)
            g = gl_equivalence(plane, chart, tol=1e-6)
            assert g is not None
            worst = max(worst, equivalence_residual(plane, chart, g))
        assert worst < 1e-6
        state["detail"] = f"({'; '.join(parts)}; chart-vs-plane residual {worst:.2g})"


def test_criterion_9_chern_properties(capsys):
    with criterion(capsys, 9, "Chern gauge invariance, antisymmetry, additivity") as state:
        rng = np.random.default_rng(9)
        values = []
        for _ in range(30):
            c1, _ = two_band_family(rng, (20, 20))
            c2, _ = two_band_family(rng, (20, 20))
            f, g = bun_family(c1), bun_family(c2)
            cf, cg = chern_number(f), chern_number(g)
            values.append(cf)
            s = f.direct_sum(g)
            gauge = np.stack([[random_unitary(rng, s.rank) for _ in range(20)] for _ in range(20)])
            assert chern_number(s.regauged(gauge)) == cf + cg
            assert chern_number(f.transposed()) == -cf
            assert chern_number(f.flipped(1)) == -cf
            assert chern_number(s) == cf + cg
        state["detail"] = f"(30 field pairs, Chern values seen {sorted(set(values))})"
        assert len(set(values)) >= 2


@pytest.mark.parametrize("m", [1.0, -1.0, 5.0])
def test_berry_oracle_matches_frozen_values(m):
    assert round(berry_oracle(m)) == BERRY_FROZEN[m]
