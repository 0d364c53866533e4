"""Acceptance gate.

Each test prints one PASS/FAIL line (run with ``pytest -s`` to see them
all) and then asserts, so a red line and a red test always agree.  The
criteria pin down the shipped examples end to end: the two donation-game
controller files, the two public-goods alliance files, the synthesized
constructions, and the exact evaluation paths they rely on.
"""

import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from payoffcontrol import (
    Custom,
    Delta,
    FiniteHorizon,
    Infeasible,
    Infinite,
    MarkovStrategy,
    MixedAction,
    PayoffRelation,
    StrategyProfile,
    SynthesisResult,
    SynthesisTarget,
    average_distribution,
    build_game,
    detect_relations,
    falsify_candidate,
    initial_distribution,
    joint_conditionals,
    joint_initial,
    profile_from_index,
    profile_index,
    repeat_indicator,
    ruling_basis,
    sample_markov_strategy,
    synthesize,
    transition_matrix,
    verify_relation,
)
from payoffcontrol.fileio import (
    parse_game_file,
    parse_strategy_file,
    write_game_file,
)

from conftest import wsls_pd

DATA = Path(__file__).resolve().parent.parent / "data"


def report(num, desc, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    tail = f"  [{detail}]" if detail else ""
    print(f"{status}  criterion {num}: {desc}{tail}")
    assert ok, f"criterion {num}: {desc}{tail}"


def load(game_name, strategy_name):
    game = parse_game_file(DATA / game_name).game
    doc = parse_strategy_file(DATA / strategy_name, game)
    return game, doc.strategies


def test_criterion_1_pin_reproduction():
    game, strategies = load("donation3.game", "donation-pin.strategy")
    rel = PayoffRelation(alpha=(0.0, 1.0), gamma=-2.0)
    start = time.perf_counter()
    rep = verify_relation(game, strategies, Infinite(), rel,
                          samples=20000, seed=2026)
    elapsed = time.perf_counter() - start
    interior = float(rep.residuals[~rep.boundary_mask].max())
    boundary = float(rep.residuals[rep.boundary_mask].max())
    ok = (rep.samples_used + rep.samples_skipped == 20000
          and interior < 1e-8 and boundary < 1e-6 and elapsed < 60.0)
    report(1, "pin holds |u2bar - 2| over 20000 opponents", ok,
           f"interior {interior:.2e}, boundary {boundary:.2e}, "
           f"{elapsed:.1f}s, {rep.samples_skipped} skipped")


def test_criterion_2_equalizer_reproduction():
    game, strategies = load("donation3.game", "donation-equalizer.strategy")
    rel = PayoffRelation(alpha=(1.0, -1.0), gamma=0.0)
    rep = verify_relation(game, strategies, Infinite(), rel,
                          samples=20000, seed=2027)
    ok = rep.passed and rep.max_abs_violation < 1e-8
    report(2, "equalizer holds |u1bar - u2bar| over 20000 opponents", ok,
           f"max {rep.max_abs_violation:.2e}")


def test_criterion_3_alliance_reproduction():
    game, self_pair = load("pgg3.game", "alliance-pin-u1.strategy")
    _, out_pair = load("pgg3.game", "alliance-pin-u3.strategy")
    rep_self = verify_relation(game, self_pair, Infinite(),
                               PayoffRelation(alpha=(1.0, 0.0, 0.0),
                                              gamma=-1.0),
                               samples=20000, seed=2028)
    rep_out = verify_relation(game, out_pair, Infinite(),
                              PayoffRelation(alpha=(0.0, 0.0, 1.0),
                                             gamma=-1.0),
                              samples=20000, seed=2029)
    ok = (rep_self.passed and rep_self.max_abs_violation < 1e-8
          and rep_out.passed and rep_out.max_abs_violation < 1e-8)
    report(3, "alliances pin u1bar and u3bar over 20000 opponents each", ok,
           f"self {rep_self.max_abs_violation:.2e}, "
           f"outsider {rep_out.max_abs_violation:.2e}")


def test_criterion_4_lone_controller_infeasibility():
    game = parse_game_file(DATA / "pgg3.game").game
    start = time.perf_counter()
    bad = []
    for g in np.linspace(-4.0, 4.0, 81):
        target = SynthesisTarget(
            PayoffRelation(alpha=(0.0, 0.0, 1.0), gamma=-float(g)),
            controllers=(0,))
        result = synthesize(game, Infinite(), target)
        if not (isinstance(result, Infeasible) and result.conclusive
                and result.certificate == "exact-interval-empty"):
            bad.append(float(g))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 5.0
    report(4, "single controller cannot pin the outsider on an 81-point "
              "grid", ok, f"{elapsed:.2f}s" + (f", bad {bad}" if bad else ""))


def test_criterion_5_synthesis_roundtrip():
    game = parse_game_file(DATA / "donation3.game").game
    targets = [PayoffRelation(alpha=(0.0, 1.0), gamma=-2.0),
               PayoffRelation(alpha=(1.0, -1.0), gamma=0.0)]
    details = []
    ok = True
    for rel in targets:
        result = synthesize(game, Infinite(),
                            SynthesisTarget(rel, controllers=(0,)))
        if not isinstance(result, SynthesisResult):
            ok = False
            details.append("infeasible")
            continue
        found = detect_relations(game, result.strategies, Infinite())
        recovered = any(r.close_to(rel, tol=1e-8) for r in found)
        rep = verify_relation(game, result.strategies, Infinite(), rel,
                              samples=1000, seed=2030)
        ok = ok and recovered and rep.passed
        details.append(f"max {rep.max_abs_violation:.2e}"
                       + ("" if recovered else ", not recovered"))
    report(5, "synthesized pin and equalizer detect and verify at 1e-8", ok,
           "; ".join(details))


def test_criterion_6_constant_continuation_pin():
    game = build_game([("C", "D"), ("C", "D")],
                      [[3, 3], [0, 5], [5, 0], [1, 1]])
    delta = 0.9
    rel = PayoffRelation(alpha=(0.0, 1.0), gamma=-2.0)
    result = synthesize(game, Delta(delta),
                        SynthesisTarget(rel, controllers=(0,)))
    assert isinstance(result, SynthesisResult)
    rep = verify_relation(game, result.strategies, Delta(delta),
                          samples=1000, seed=2031, relation=rel)

    # closed form against a 500-term truncated weighted sum; the tail is
    # 0.9^500 / (1 - 0.9) ~ 1e-22, far below the 1e-10 agreement bound
    rng = np.random.default_rng(2032)
    worst = 0.0
    for _ in range(50):
        opponent = sample_markov_strategy(rng, game, 1)
        profile = StrategyProfile((result.strategies[0], opponent))
        exact = average_distribution(game, profile, Delta(delta)).dist.probs
        v = initial_distribution(game, profile).probs
        matrix = transition_matrix(game, profile)
        total = np.zeros(4)
        weight = 1.0 - delta
        for _ in range(500):
            total += weight * v
            v = v @ matrix
            weight *= delta
        worst = max(worst, float(np.max(np.abs(exact - total))))
    ok = rep.passed and rep.max_abs_violation < 1e-8 and worst < 1e-10
    report(6, "delta=0.9 synthesized pin verifies; closed form matches "
              "truncated sum", ok,
           f"max {rep.max_abs_violation:.2e}, series gap {worst:.2e}")


def test_criterion_7_two_round_falsification():
    game = build_game([("C", "D"), ("C", "D")],
                      [[3, 3], [0, 5], [5, 0], [1, 1]])
    wsls = wsls_pd(0)
    candidate = wsls.conditionals[:, 0] - np.array([1.0, 1.0, 0.0, 0.0])
    rep_f = falsify_candidate(game, [wsls], FiniteHorizon(2), candidate,
                              budget=60, seed=2033, threshold=1e-3)

    # independent closed form for the two-round average against WSLS
    # started at C: vbar = (v1 + v1 M)/2 depends on the opponent only
    # through (sigma, q_CC, q_CD); candidate is (0,-1,0,1), giving
    # <cand, vbar> = -(sigma (1-q_CC) + (1-sigma) q_CD) / 2 on a 0.1 grid
    grid = np.linspace(0.0, 1.0, 11)
    sigma, q_cc, q_cd = np.meshgrid(grid, grid, grid, indexing="ij")
    values = -(sigma * (1.0 - q_cc) + (1.0 - sigma) * q_cd) / 2.0
    oracle_max = float(np.max(np.abs(values)))
    ok = (rep_f.conclusive and rep_f.achieved > 1e-3
          and oracle_max > 1e-3
          and rep_f.achieved <= oracle_max + 1e-9)
    report(7, "two-round play breaks the WSLS pseudo ruling vector", ok,
           f"achieved {rep_f.achieved:.3g}, grid oracle max {oracle_max:.3g}")


def _dyadic_strategy(rng, game, player):
    """Entries k/64: exactly representable, rows summing to exactly 1.0."""
    m = game.action_counts[player]
    rows = []
    for _ in range(game.profile_count):
        cuts = np.sort(rng.integers(0, 65, size=m - 1))
        row = np.diff(np.concatenate(([0], cuts, [64]))) / 64.0
        rows.append(row)
    init = np.diff(np.concatenate(
        ([0], np.sort(rng.integers(0, 65, size=m - 1)), [64]))) / 64.0
    return MarkovStrategy(player, MixedAction(init), np.array(rows))


def test_criterion_8_property_suites(tmp_path):
    rng = np.random.default_rng(2034)
    games = [parse_game_file(DATA / name).game
             for name in ("donation3.game", "pgg3.game", "pd.game")]
    failures = []

    # stochastic rows
    worst_row = 0.0
    for game in games:
        for _ in range(40):
            profile = StrategyProfile(tuple(
                sample_markov_strategy(rng, game, p)
                for p in range(game.player_count)))
            sums = transition_matrix(game, profile).sum(axis=1)
            worst_row = max(worst_row, float(np.max(np.abs(sums - 1.0))))
    if worst_row > 1e-10:
        failures.append(f"row sums off by {worst_row:.2e}")

    # family sums to zero: exactly for exactly-representable tables, and
    # to machine dust for arbitrary ones
    donation, pgg = games[0], games[1]
    for _ in range(40):
        strategy = _dyadic_strategy(rng, donation, 0)
        q = joint_conditionals(donation, [strategy])
        rep = np.column_stack([repeat_indicator(donation, [0], [label])
                               for label in donation.action_labels[0]])
        sums = (q - rep).sum(axis=1)
        if np.any(sums != 0.0):
            failures.append("dyadic family sum not exactly zero")
            break
    pair = [_dyadic_strategy(rng, pgg, 0), _dyadic_strategy(rng, pgg, 1)]
    q = joint_conditionals(pgg, pair)
    labels = [(a, b) for a in pgg.action_labels[0]
              for b in pgg.action_labels[1]]
    rep = np.column_stack([repeat_indicator(pgg, [0, 1], list(lab))
                           for lab in labels])
    if np.any((q - rep).sum(axis=1) != 0.0):
        failures.append("dyadic alliance family sum not exactly zero")
    for _ in range(40):
        strategy = sample_markov_strategy(rng, donation, 0)
        q = joint_conditionals(donation, [strategy])
        rep = np.column_stack([repeat_indicator(donation, [0], [label])
                               for label in donation.action_labels[0]])
        if float(np.max(np.abs((q - rep).sum(axis=1)))) > 1e-12:
            failures.append("float family sum above machine dust")
            break

    # vanishing inner product across 500 controller/opponent pairs
    worst_inner = 0.0
    schedules = (Infinite(), Delta(0.3), Delta(0.9))
    for k in range(500):
        game = games[k % 2]
        controller = sample_markov_strategy(rng, game, 0)
        others = tuple(sample_markov_strategy(rng, game, p)
                       for p in range(1, game.player_count))
        profile = StrategyProfile((controller,) + others)
        for schedule in schedules:
            basis = ruling_basis(game, [controller], schedule)
            dist = average_distribution(game, profile, schedule).dist
            worst_inner = max(worst_inner, float(
                np.max(np.abs(basis.vectors @ dist.probs))))
    if worst_inner > 1e-8:
        failures.append(f"inner product {worst_inner:.2e}")

    # relation scaling invariance
    for _ in range(100):
        coeffs = rng.normal(size=3)
        if np.max(np.abs(coeffs)) < 1e-3:
            continue
        lam = rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 10.0)
        a = PayoffRelation(alpha=tuple(coeffs[:2]), gamma=coeffs[2])
        b = PayoffRelation(alpha=tuple(lam * coeffs[:2]),
                           gamma=lam * coeffs[2])
        if not a.close_to(b, tol=1e-9):
            failures.append("scaling changed the canonical form")
            break

    # profile index round trip
    for game in games:
        for idx in range(game.profile_count):
            if profile_index(game, profile_from_index(game, idx)) != idx:
                failures.append("index round trip broke")
                break

    # file round trip
    game = build_game([("a", "b", "c"), ("x", "y")],
                      rng.normal(size=(6, 2)) + 1 / 3)
    strategies = tuple(sample_markov_strategy(rng, game, p) for p in (0, 1))
    for schedule in (Infinite(), Delta(1 / 3), FiniteHorizon(5),
                     Custom((0.9, 1 / 3), tail=0.5)):
        out = tmp_path / "roundtrip.game"
        write_game_file(out, game, strategies, schedule)
        doc = parse_game_file(out)
        if (doc.game, doc.strategies, doc.schedule) != (game, strategies,
                                                        schedule):
            failures.append(f"file round trip changed {schedule}")

    report(8, "property suites hold", not failures,
           "; ".join(failures) if failures
           else f"row sums {worst_row:.1e}, inner products {worst_inner:.1e}")
