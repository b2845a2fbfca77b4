"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py``.
"""
import itertools
import math
import sys
import time

import numpy as np
import pytest

from hardyamp.bell import CHSH, classical_mdl_max, hardy_frame_222, mdl_functional, validate_box
from hardyamp.data import PAPER_N, paper_frequency_table
from hardyamp.extractor import exhaustive_bias, k_from_h, pipeline
from hardyamp.gadgets import Gadget, clifton_gadget, complete_bases, four_copy_game, quaternion_copies, verify_gadget
from hardyamp.polytope import (
    bound_all_entries, chsh_hardy_gap, hardy_frame_2xn, max_hardy_probability, max_pH_2xn, witness_box_2xn,
)
from hardyamp.protocol import BoxSequenceModel, SVParams, best_deterministic_model, h_bound, input_distribution, run_protocol
from hardyamp.quantum import P_STAR, THETA_STAR, hardy_box, mes_box, noise_tolerance

FRAME = hardy_frame_222()
CHSH_EVENTS = [(0, 0, 0, 0), (1, 1, 0, 0), (0, 0, 0, 1), (1, 1, 0, 1),
               (0, 0, 1, 0), (1, 1, 1, 0), (0, 1, 1, 1), (1, 0, 1, 1)]
Q_MAX = [(1, 2, 9), (1, 3, 10), (2, 4, 6), (3, 5, 7), (4, 5, 11), (6, 8, 12), (7, 8, 13)]


def report(number, ok, detail, started, capsys=None):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail} ({time.perf_counter() - started:.2f} s)"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)
    return ok


def paper_delta(eps):
    f = paper_frequency_table()
    return float(np.sum(mdl_functional(FRAME, eps).coeff * f))


def expected_L(box, eps):
    nu = input_distribution(SVParams(eps), "iid")
    return float(np.einsum("xy,xyab,xyab->", nu, mdl_functional(FRAME, eps).coeff, box.p))


# --- criteria -------------------------------------------------------------------

def criterion_1():
    box = hardy_box(THETA_STAR, 0.0)
    p_h = box.prob(0, 0, 0, 0)
    zeros = max(abs(box.prob(*e)) for e in FRAME.zero_set)
    target = (5 * math.sqrt(5) - 11) / 2
    ok = abs(p_h - target) <= 1e-9 and zeros <= 1e-12
    return ok, f"optimal Hardy probability {p_h:.12f} (target {target:.12f}), max zero entry {zeros:.1e}"


def criterion_2():
    exact = max_hardy_probability(FRAME, "exact")
    ok = abs(exact.value - 0.5) <= 1e-9 and validate_box(exact.witness).valid
    parts = [f"exact {exact.value:.10f}"]
    for z in (0.0, 0.1, 0.5):
        sol = max_hardy_probability(FRAME, "relaxed", z)
        ok &= abs(sol.value - (1 + z) / 2) <= 1e-9 and validate_box(sol.witness, tol=1e-9).valid
        parts.append(f"z={z}: {sol.value:.10f}")
    return ok, "(2,2,2) p_H ceiling " + ", ".join(parts)


def criterion_3():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        eps = rng.uniform(0, 0.45)
        lvl_scale = (0.25 - eps**2) ** 2
        delta = rng.uniform(0, 0.5) * lvl_scale  # B_H level stays feasible (<= 1/2)
        lvl = delta / lvl_scale
        bounds = bound_all_entries(FRAME, delta, eps)
        for ev in CHSH_EVENTS:
            b = bounds[ev]
            worst = max(worst, abs(b.lower - lvl), abs(b.upper - (1 - lvl)))
    return worst <= 1e-7, f"100 random (delta, eps): max deviation of CHSH entry bounds {worst:.2e}"


def criterion_4():
    worst = 0.0
    for n in range(2, 9):
        for z in (0.0, 0.3):
            res = max_pH_2xn(n, z)
            worst = max(worst, abs(res.value - res.closed_form))
    ok = worst <= 1e-8
    for z in (0.0, 0.3):
        box = witness_box_2xn(3, z)
        frame = hardy_frame_2xn(3)
        ok &= validate_box(box, tol=1e-12).valid
        ok &= abs(box.prob(0, 0, 0, 0) - (2 + z) / 3) <= 1e-12
        ok &= abs(sum(box.prob(*e) for e in frame.zero_set) - z) <= 1e-12
    return ok, f"2 x n LP vs (n-1)/n + z/n for n=2..8: max deviation {worst:.2e}; n=3 boxes attain it"


def criterion_5():
    sol = chsh_hardy_gap()
    return abs(sol.value - 3.0) <= 1e-9, f"min B_CHSH - 2 B_H = {sol.value:.12f}"


def criterion_6():
    g = clifton_gadget()
    verdict = verify_gadget(g)
    game = complete_bases(g)
    sc = game.scenario
    cliques_ok = sorted(tuple(v + 1 for v in c) for c in game.cliques) == sorted(Q_MAX)
    classical = classical_mdl_max(game.to_frame(), 0.0)
    quantum = game.hardy_probability(mes_box(game))
    ok = (verdict.is_gadget and (sc.nX, sc.nY, sc.nA) == (7, 7, 3) and cliques_ok
          and abs(classical) <= 1e-15 and abs(quantum - 1 / 27) <= 1e-9)
    return ok, (f"gadget={verdict.is_gadget} ({verdict.colorings} colorings), scenario (2,{sc.nX},{sc.nA}), "
                f"cliques match={cliques_ok}, classical={classical:.1e}, quantum={quantum:.12f}")


def criterion_7():
    rng = np.random.default_rng(7)
    bad = 0
    for v in rng.integers(-100, 101, size=(1000, 4)):
        if not v.any():
            v = np.array([1, 0, 0, 0])
        q = quaternion_copies(v)
        gram = q @ q.T
        bad += int(np.any(gram - np.diag(np.diag(gram))))
    base = clifton_gadget()
    g = Gadget(3, base.vectors, (0, 0), allow_identical=True)
    game = four_copy_game(g, check=False)
    total = game.hardy_probability(mes_box(game))
    ok = bad == 0 and abs(total - 1.0) <= 1e-9
    return ok, f"1000 quaternion copy sets, {bad} non-orthogonal; identical-vector 4-copy total {total:.12f}"


def criterion_8():
    eps_grid = np.arange(0.0, 0.2071, 0.001)
    hs = [h_bound(paper_delta(e), e, PAPER_N).h for e in eps_grid]
    pl = pipeline(paper_delta(0.1), 0.1, PAPER_N, 5)
    k = pl.k.kFloor
    ok = min(hs) >= 371 and 20 <= k <= 31
    return ok, (f"min hBound over {len(eps_grid)} eps in [0, 0.2071) = {min(hs):.1f} (>= 371); "
                f"floor k(0.1, t=5) = {k} (window [20, 31], grid 200x200x3)")


def criterion_9():
    vals = {eps: classical_mdl_max(FRAME, eps) for eps in (0.0, 0.05, 0.1, 0.2)}
    ok = all(abs(v) <= 1e-15 for v in vals.values())
    return ok, "classical MDL max " + ", ".join(f"eps={e}: {v:.1e}" for e, v in vals.items())


def criterion_10():
    eps, n, seeds = 0.05, 1_000_000, 100
    params = SVParams(eps)
    delta = expected_L(hardy_box(), eps) / 2
    honest = BoxSequenceModel("honest", theta=THETA_STAR, eta=0.0)
    det = best_deterministic_model(FRAME, params)
    acc_h = sum(run_protocol(honest, params, n, seed=s).Ln >= delta for s in range(seeds))
    acc_d = sum(run_protocol(det, params, n, seed=s).Ln >= delta for s in range(seeds))
    eta_max = noise_tolerance(0.0)
    eta = eta_max - 0.01
    noisy = BoxSequenceModel("honest", theta=THETA_STAR, eta=eta)
    d_noisy = expected_L(hardy_box(THETA_STAR, eta), 0.0) / 2
    acc_n = sum(run_protocol(noisy, SVParams(0.0), n, seed=s).Ln >= d_noisy for s in range(seeds))
    ok = acc_h >= 99 and acc_d == 0 and abs(eta_max - 0.1528) < 5e-4 and acc_n > seeds // 2
    return ok, (f"honest accepted {acc_h}/{seeds}, deterministic rejected {seeds - acc_d}/{seeds} at delta={delta:.5f}; "
                f"eta_max(0)={eta_max:.6f}, noisy honest accepted {acc_n}/{seeds}")


def criterion_11():
    biases_ok = all(exhaustive_bias(L) * 2**L == 1.0 for L in range(4, 13))
    shift_ok = True
    for h, eps, t in itertools.product((400.0, 6328.3, 17000.0), (0.0, 0.1, 0.2), (0, 5, 10, 99)):
        a, b = k_from_h(h, eps, PAPER_N, t), k_from_h(h, eps, PAPER_N, t + 2)
        shift_ok &= a.raw - b.raw == 1.0
    pl = pipeline(paper_delta(0.1), 0.1, PAPER_N, 5)
    slack_ok = bool(pl.security.conditionHolds) and pl.security.log2Delta <= -5
    ok = biases_ok and shift_ok and slack_ok
    return ok, (f"inner-product bias = 2^-L for L=4..12: {biases_ok}; t-shift identity exact: {shift_ok}; "
                f"log2 Delta = {pl.security.log2Delta:.1f} <= -5: {slack_ok}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


@pytest.mark.parametrize("number", range(1, len(CRITERIA) + 1))
def test_criterion(number, capsys):
    started = time.perf_counter()
    ok, detail = CRITERIA[number - 1]()
    assert report(number, ok, detail, started, capsys), detail


if __name__ == "__main__":
    results = []
    for i, fn in enumerate(CRITERIA, 1):
        t0 = time.perf_counter()
        results.append(report(i, *fn(), t0))
    sys.exit(0 if all(results) else 1)
