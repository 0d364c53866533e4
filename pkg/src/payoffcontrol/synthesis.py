"""Construction of ruling strategies enforcing a target payoff relation.

Given a target w = sum_i alpha_i u_i + gamma 1, a controller set, and a
supported schedule form, we look for controller strategies whose ruling
vectors span w.  Writing q_a for the controllers' joint conditional
distribution after profile a, jhat(a) for the joint action they played in
a, and y for the combination coefficients over the full joint-action
family, the requirement reads per profile:

    infinite rounds:   <y, q_a> - y[jhat(a)] = w(a)
    continuation d:  d <y, q_a> + (1-d) <y, sigma> - y[jhat(a)] = w(a)

with q_a a distribution (a product of member rows in independent mode)
and sigma the controllers' joint initial distribution.  A distribution
q with <y, q> = beta exists exactly when beta lies between min(y) and
max(y), so for a fixed y feasibility is a set of linear inequalities.
Which component attains the min or the max is unknown, but enumerating
the (min, max) index pair keeps everything linear: each pair gives a
small linear program in (y, slack), and the target is feasible if and
only if some pair admits a solution.  Infeasibility of every pair is
therefore a proof, not a search failure.

For a single controller with two actions the same feasible set has a
one-parameter closed form (s = rep + z*w with z = 1/y), and an exact
interval intersection in z decides feasibility; this is the certificate
reported for that case.

Independent alliances need each q_a to factor as a product over members.
The multilinear map (p_1, ..., p_q) -> <y, p_1 x ... x p_q> attains every
value between min(y) and max(y) on product distributions (its range ends
are corners of the cube), so independent feasibility coincides with
correlated feasibility; rows are built by walking corner to corner and
solving the one linear segment that crosses beta.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .control import (
    PayoffRelation,
    _controller_setup,
    is_trivial,
    joint_conditionals,
    joint_initial,
    relation_vector,
)
from .dynamics import (
    Classification,
    ConstantContinuation,
    ContinuationSchedule,
    InfiniteExpectedRounds,
    MarkovStrategy,
    classify_schedule,
    repeat_strategy,
)
from .games import GameSpec, MixedAction
from .errors import (
    InvalidParamsError,
    TrivialTargetError,
    UnsupportedScheduleError,
)


@dataclass(frozen=True)
class SynthesisTarget:
    """A relation to enforce, the players enforcing it, and the alliance mode."""

    relation: PayoffRelation
    controllers: tuple[int, ...]
    mode: str = "independent"

    def __post_init__(self):
        players = tuple(sorted(set(self.controllers)))
        if not players:
            raise InvalidParamsError("at least one controller is required")
        if players != tuple(self.controllers) and set(players) != set(self.controllers):
            raise InvalidParamsError("duplicate controller player")
        object.__setattr__(self, "controllers", players)
        if self.mode not in ("independent", "correlated"):
            raise InvalidParamsError(
                f"mode must be 'independent' or 'correlated', got {self.mode!r}")


@dataclass(frozen=True, eq=False)
class SynthesisResult:
    """A feasible construction.

    ``strategies`` holds one MarkovStrategy per controller in independent
    mode; correlated alliances return the joint tables instead.  ``y``
    follows the ruling-basis convention (last joint action dropped).
    ``margin`` is the smallest slack min(p, 1-p) over all probability
    entries that the construction constrains.
    """

    target: SynthesisTarget
    form: Classification
    strategies: tuple[MarkovStrategy, ...] | None
    joint_conditionals: np.ndarray | None
    joint_initial: np.ndarray | None
    y: np.ndarray
    w: np.ndarray
    margin: float
    note: str = ""


@dataclass(frozen=True)
class Infeasible:
    """No construction exists (conclusive) or none was found (inconclusive).

    certificate: "exact-interval-empty" for the single-controller
    two-action interval proof, "exact-lp-empty" when every (min, max)
    linear program is infeasible, "search-budget-exhausted" otherwise.
    """

    certificate: str
    conclusive: bool
    detail: str


# ---------------------------------------------------------------------------
# Row construction helpers


def _row_max_margin(y: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    """Distribution q with <y, q> = beta maximizing the smallest entry.

    The optimum mixes the uniform distribution with the extreme component
    on the side of beta; the mixing weight has a closed form.
    """
    count = y.size
    ymin, ymax = float(y.min()), float(y.max())
    ybar = float(y.mean())
    eps = 1e-12 * max(1.0, abs(ymin), abs(ymax))
    if beta < ymin - eps or beta > ymax + eps:
        raise InvalidParamsError("row target outside achievable range")
    if abs(beta - ybar) <= eps:
        return np.full(count, 1.0 / count), 1.0 / count
    if beta > ybar:
        tau = (ymax - beta) / (count * (ymax - ybar))
        ext = int(np.argmax(y))
    else:
        tau = (beta - ymin) / (count * (ybar - ymin))
        ext = int(np.argmin(y))
    tau = float(np.clip(tau, 0.0, 1.0 / count))
    q = np.full(count, tau)
    q[ext] += 1.0 - count * tau
    return q, tau


def _member_margin(probs: np.ndarray) -> float:
    return float(np.minimum(probs, 1.0 - probs).min())


def _product_row(y: np.ndarray, sizes: tuple[int, ...],
                 beta: float) -> tuple[list[np.ndarray], float]:
    """Per-member distributions whose product satisfies <y, prod> = beta.

    For a pair of two-action members a scan over the first member's
    probability with the second solved exactly gives good margins.  The
    general fallback walks from the corner attaining min(y) to the corner
    attaining max(y) one member at a time; the crossing segment is linear
    and solved exactly.
    """
    tensor = y.reshape(sizes)
    if sizes == (2, 2):
        best = None
        for p1 in np.linspace(0.0, 1.0, 401):
            slope = (tensor[0, 0] - tensor[0, 1]) * p1 \
                + (tensor[1, 0] - tensor[1, 1]) * (1.0 - p1)
            offset = tensor[0, 1] * p1 + tensor[1, 1] * (1.0 - p1)
            if abs(slope) < 1e-13:
                if abs(offset - beta) > 1e-10:
                    continue
                p2 = 0.5
            else:
                p2 = (beta - offset) / slope
            if not -1e-12 <= p2 <= 1.0 + 1e-12:
                continue
            p2 = float(np.clip(p2, 0.0, 1.0))
            margin = min(p1, 1.0 - p1, p2, 1.0 - p2)
            if best is None or margin > best[2]:
                best = (p1, p2, margin)
        if best is not None:
            p1, p2, margin = best
            return [np.array([p1, 1.0 - p1]), np.array([p2, 1.0 - p2])], margin

    corner_lo = list(np.unravel_index(int(np.argmin(y)), sizes))
    corner_hi = list(np.unravel_index(int(np.argmax(y)), sizes))
    current = corner_lo[:]
    value = float(y[np.ravel_multi_index(tuple(current), sizes)])
    members = [None] * len(sizes)
    crossing = None
    for k in range(len(sizes)):
        if current[k] == corner_hi[k]:
            continue
        switched = current[:]
        switched[k] = corner_hi[k]
        after = float(y[np.ravel_multi_index(tuple(switched), sizes)])
        lo, hi = min(value, after), max(value, after)
        if lo - 1e-12 <= beta <= hi + 1e-12 and crossing is None:
            t = 0.0 if after == value else float(
                np.clip((beta - value) / (after - value), 0.0, 1.0))
            probs = np.zeros(sizes[k])
            probs[current[k]] = 1.0 - t
            probs[corner_hi[k]] += t
            members[k] = probs
            crossing = k
            # members before k sit at corner_hi, after k at corner_lo
            break
        current = switched
        value = after
    if crossing is None:
        # beta equals an endpoint the loop walked past; use the last corner
        crossing = len(sizes)
    for k in range(len(sizes)):
        if members[k] is not None:
            continue
        probs = np.zeros(sizes[k])
        probs[corner_hi[k] if k < crossing else corner_lo[k]] = 1.0
        members[k] = probs
    margin = min(_member_margin(p) for p in members)
    return members, margin


# ---------------------------------------------------------------------------
# Exact interval rung: single controller, two actions, infinite rounds


def _interval_rung(w: np.ndarray, rep0: np.ndarray):
    """Feasible z interval for s = rep + z*w (infinite form, two actions).

    Entries with rep0 = 1 need z*w in [-1, 0]; entries with rep0 = 0 need
    z*w in [0, 1].  Returns (lo, hi) or None when only z = 0 remains.
    """
    lo, hi = -np.inf, np.inf
    for wa, on in zip(w, rep0):
        if wa == 0.0:
            continue
        bounds = (-1.0, 0.0) if on else (0.0, 1.0)
        a, b = (bounds[0] / wa, bounds[1] / wa)
        if a > b:
            a, b = b, a
        lo, hi = max(lo, a), min(hi, b)
    if lo > hi or (lo == 0.0 and hi == 0.0):
        return None
    return lo, hi


def _interval_candidate(w, rep0, lo, hi):
    """Best-margin z in [lo, hi] \\ {0} and the resulting conditional column."""
    zs = np.linspace(lo, hi, 2001)
    zs = zs[np.abs(zs) > 1e-12 * max(1.0, abs(lo), abs(hi))]
    if zs.size == 0:
        return None
    cols = rep0[None, :] + zs[:, None] * w[None, :]
    margins = np.minimum(cols, 1.0 - cols).min(axis=1)
    best = int(np.argmax(margins))
    return float(zs[best]), float(margins[best])


# ---------------------------------------------------------------------------
# Pairwise linear programs over y


def _pair_lp(joint_count, jhat, w, delta, lo, hi, spread_cap):
    """Max-slack LP fixing which joint action attains min(y) and max(y).

    Variables: y (last pinned to 0), slack t >= 0, and for the
    constant-continuation form the scalar m = <y, sigma>.
    """
    has_m = delta is not None
    nvar = joint_count + 1 + (1 if has_m else 0)
    t_idx = joint_count
    m_idx = joint_count + 1
    rows_ub, rhs_ub = [], []
    rows_eq, rhs_eq = [], []

    def add(rows, rhs, coeffs, bound):
        row = np.zeros(nvar)
        for idx, val in coeffs:
            row[idx] += val
        rows.append(row)
        rhs.append(bound)

    for j in range(joint_count):
        if j != lo:
            add(rows_ub, rhs_ub, [(lo, 1.0), (j, -1.0)], 0.0)
        if j != hi:
            add(rows_ub, rhs_ub, [(j, 1.0), (hi, -1.0)], 0.0)
    add(rows_ub, rhs_ub, [(hi, 1.0), (lo, -1.0)], spread_cap)

    if delta is None:
        for a, wa in enumerate(w):
            add(rows_ub, rhs_ub,
                [(lo, 1.0), (int(jhat[a]), -1.0), (t_idx, 1.0)], wa)
            add(rows_ub, rhs_ub,
                [(int(jhat[a]), 1.0), (hi, -1.0), (t_idx, 1.0)], -wa)
    elif delta > 0.0:
        for a, wa in enumerate(w):
            add(rows_ub, rhs_ub,
                [(lo, delta), (int(jhat[a]), -1.0), (m_idx, 1.0 - delta),
                 (t_idx, delta)], wa)
            add(rows_ub, rhs_ub,
                [(hi, -delta), (int(jhat[a]), 1.0), (m_idx, -(1.0 - delta)),
                 (t_idx, delta)], -wa)
        add(rows_ub, rhs_ub, [(lo, 1.0), (m_idx, -1.0), (t_idx, 1.0)], 0.0)
        add(rows_ub, rhs_ub, [(m_idx, 1.0), (hi, -1.0), (t_idx, 1.0)], 0.0)
    else:
        # one-shot: the initial distribution carries the whole constraint
        for a, wa in enumerate(w):
            add(rows_eq, rhs_eq, [(m_idx, 1.0), (int(jhat[a]), -1.0)], wa)
        add(rows_ub, rhs_ub, [(lo, 1.0), (m_idx, -1.0), (t_idx, 1.0)], 0.0)
        add(rows_ub, rhs_ub, [(m_idx, 1.0), (hi, -1.0), (t_idx, 1.0)], 0.0)

    cost = np.zeros(nvar)
    cost[t_idx] = -1.0
    bounds = [(None, None)] * joint_count + [(0.0, None)]
    bounds[joint_count - 1] = (0.0, 0.0)
    if has_m:
        bounds.append((None, None))
    res = linprog(cost, A_ub=np.array(rows_ub), b_ub=np.array(rhs_ub),
                  A_eq=np.array(rows_eq) if rows_eq else None,
                  b_eq=np.array(rhs_eq) if rhs_eq else None,
                  bounds=bounds, method="highs")
    if res.status != 0:
        return None
    y = res.x[:joint_count]
    return y, (float(res.x[m_idx]) if has_m else None), float(res.x[t_idx])


# ---------------------------------------------------------------------------
# Candidate assembly


def _betas(w, jhat, y, delta, mval):
    if delta is None:
        return w + y[jhat]
    return (w + y[jhat] - (1.0 - delta) * mval) / delta


def _assemble(game, target, form, ordered, sizes, jhat, w, y, mval):
    """Build tables for a fixed y (and m for the constant form).

    Returns (strategies, joint_cond, joint_init, margin) or None when a
    row cannot be solved, which only happens on numerically degenerate y.
    """
    delta = form.delta if isinstance(form, ConstantContinuation) else None
    joint_count = int(np.prod(sizes))
    count = game.profile_count
    margins = []

    if delta == 0.0:
        # conditionals never fire in a one-shot game; use repeat rows
        joint_cond = np.zeros((count, joint_count))
        joint_cond[np.arange(count), jhat] = 1.0
        row_members = None
    else:
        betas = _betas(w, jhat, y, delta, mval)
        joint_cond = np.empty((count, joint_count))
        row_members = []
        for a in range(count):
            if target.mode == "independent" and len(sizes) > 1:
                members, margin = _product_row(y, sizes, float(betas[a]))
                q = members[0]
                for part in members[1:]:
                    q = np.outer(q, part).ravel()
                row_members.append(members)
            else:
                q, margin = _row_max_margin(y, float(betas[a]))
            joint_cond[a] = q
            margins.append(margin)

    if delta is None:
        joint_init = None
        init_members = [MixedAction.uniform(m) for m in sizes]
    else:
        if target.mode == "independent" and len(sizes) > 1:
            members, margin = _product_row(y, sizes, float(mval))
            sigma = members[0]
            for part in members[1:]:
                sigma = np.outer(sigma, part).ravel()
            init_members = [MixedAction(p) for p in members]
        else:
            sigma, margin = _row_max_margin(y, float(mval))
            init_members = [MixedAction(sigma)] if len(sizes) == 1 else None
        joint_init = sigma
        margins.append(margin)

    if target.mode == "correlated" and len(sizes) > 1:
        if joint_init is None:
            joint_init = np.full(joint_count, 1.0 / joint_count)
        return None, joint_cond, joint_init, float(min(margins))

    # independent: per-member conditional tables
    strategies = []
    if len(sizes) == 1:
        strategies.append(
            MarkovStrategy(ordered[0].player, init_members[0], joint_cond))
    else:
        for k, base in enumerate(ordered):
            table = np.empty((count, sizes[k]))
            for a in range(count):
                if delta == 0.0:
                    row = np.zeros(sizes[k])
                    row[game.profile_actions[a, base.player]] = 1.0
                else:
                    row = row_members[a][k]
                table[a] = row
            strategies.append(MarkovStrategy(base.player, init_members[k], table))
    return tuple(strategies), None, None, float(min(margins))


def _family_residual(form, joint_cond, joint_init, jhat, y, w):
    """Max deviation of sum_j y_j u~_j from w for the assembled tables."""
    count, joint_count = joint_cond.shape
    rep = np.zeros((count, joint_count))
    rep[np.arange(count), jhat] = 1.0
    if isinstance(form, InfiniteExpectedRounds):
        family = joint_cond - rep
    else:
        sigma = joint_init if joint_init is not None \
            else np.full(joint_count, 1.0 / joint_count)
        family = form.delta * joint_cond \
            + (1.0 - form.delta) * sigma[None, :] - rep
    return float(np.max(np.abs(family @ y - w)))


def synthesize(game: GameSpec, schedule: ContinuationSchedule,
               target: SynthesisTarget, *,
               spread_caps: tuple[float, ...] = (2.0, 4.0, 8.0, 16.0, 64.0),
               ) -> SynthesisResult | Infeasible:
    """Find controller strategies enforcing ``target.relation``.

    Tries, in order: the exact z-interval analysis (single controller with
    two actions, infinite rounds), a two-column perturbation of the repeat
    strategy (single controller), and the exact (min, max)-pair linear
    programs over y.  The best feasible construction by margin wins.
    Returns Infeasible with a conclusive certificate when the interval or
    every pair LP is empty.
    """
    form = classify_schedule(schedule)
    if not isinstance(form, (InfiniteExpectedRounds, ConstantContinuation)):
        raise UnsupportedScheduleError(
            "ruling strategies require infinite expected rounds or a "
            "constant continuation probability below one")
    if is_trivial(game, target.relation):
        raise TrivialTargetError(
            "relation already holds identically; nothing to enforce")
    base = [repeat_strategy(game, p) for p in target.controllers]
    ordered, _, sizes, jhat = _controller_setup(game, base)
    w = relation_vector(game, target.relation)
    delta = form.delta if isinstance(form, ConstantContinuation) else None
    joint_count = int(np.prod(sizes))
    scale = max(1.0, float(np.max(np.abs(w))))

    candidates = []  # (margin, y_full, mval, note)

    # (a) exact interval certificate
    if joint_count == 2 and delta is None:
        rep0 = (jhat == 0).astype(float)
        interval = _interval_rung(w, rep0)
        if interval is None:
            return Infeasible(
                certificate="exact-interval-empty",
                conclusive=True,
                detail="the per-profile bounds on z = 1/y intersect at most "
                       "in {0}; no Markov strategy of this controller can "
                       "reach the target",
            )
        found = _interval_candidate(w, rep0, *interval)
        if found is not None:
            z, margin = found
            candidates.append((margin, np.array([1.0 / z, 0.0]), None,
                               "interval"))

    # (b) two-column perturbation of the repeat strategy
    if len(sizes) == 1 and delta is None:
        rep_cols = np.zeros((game.profile_count, joint_count))
        rep_cols[np.arange(game.profile_count), jhat] = 1.0
        for c1, c2 in itertools.permutations(range(joint_count), 2):
            lo, hi = -np.inf, np.inf
            for a in range(game.profile_count):
                if w[a] == 0.0:
                    continue
                for rep_col, sign in ((rep_cols[a, c1], 1.0), (rep_cols[a, c2], -1.0)):
                    b0, b1 = -rep_col / (sign * w[a]), (1.0 - rep_col) / (sign * w[a])
                    if b0 > b1:
                        b0, b1 = b1, b0
                    lo, hi = max(lo, b0), min(hi, b1)
            if lo > hi or (lo == 0.0 and hi == 0.0):
                continue
            phis = np.linspace(lo, hi, 801)
            phis = phis[np.abs(phis) > 1e-12 * max(1.0, abs(lo), abs(hi))]
            if phis.size == 0:
                continue
            cols1 = rep_cols[None, :, c1] + phis[:, None] * w[None, :]
            cols2 = rep_cols[None, :, c2] - phis[:, None] * w[None, :]
            both = np.concatenate([cols1, cols2], axis=1)
            other = rep_cols[:, [c for c in range(joint_count)
                                 if c not in (c1, c2)]]
            fixed = float(np.minimum(other, 1.0 - other).min()) if other.size else np.inf
            margins = np.minimum(np.minimum(both, 1.0 - both).min(axis=1), fixed)
            best = int(np.argmax(margins))
            phi = float(phis[best])
            y_full = np.zeros(joint_count)
            y_full[c1] = 0.5 / phi
            y_full[c2] = -0.5 / phi
            candidates.append((float(margins[best]), y_full, None, "two-column"))

    # (c) exact pair LPs
    any_pair_feasible = False
    for lo, hi in itertools.permutations(range(joint_count), 2):
        for cap in spread_caps:
            solved = _pair_lp(joint_count, jhat, w, delta, lo, hi, cap * scale)
            if solved is None:
                continue
            any_pair_feasible = True
            y, mval, slack = solved
            candidates.append((slack, y, mval, "pair-lp"))

    if not candidates:
        if not any_pair_feasible:
            return Infeasible(
                certificate="exact-lp-empty",
                conclusive=True,
                detail=f"all {joint_count * (joint_count - 1)} (min, max) "
                       "pair programs are infeasible; no Markov controller "
                       "tables reach the target under this schedule form",
            )
        return Infeasible(
            certificate="search-budget-exhausted",
            conclusive=False,
            detail="feasible coefficient region found but no construction "
                   "survived assembly",
        )

    # assemble the actual tables; rank candidates by true margin
    best_result = None
    for _, y_full, mval, note in sorted(candidates, key=lambda c: -c[0]):
        try:
            assembled = _assemble(game, target, form, ordered, sizes, jhat,
                                  w, y_full, mval)
        except InvalidParamsError:
            continue
        if assembled is None:
            continue
        strategies, joint_cond, joint_init, margin = assembled
        if strategies is not None:
            cond_check = joint_conditionals(game, strategies)
            init_check = joint_initial(strategies)
        else:
            cond_check = joint_cond
            init_check = joint_init
        residual = _family_residual(form, cond_check, init_check, jhat,
                                    y_full, w)
        if residual > 1e-8 * scale:
            continue
        if best_result is None or margin > best_result[0]:
            best_result = (margin, strategies, joint_cond, joint_init,
                           y_full, note)
    if best_result is None:
        return Infeasible(
            certificate="search-budget-exhausted",
            conclusive=False,
            detail="candidate coefficients found but every assembled "
                   "construction failed its residual check",
        )
    margin, strategies, joint_cond, joint_init, y_full, note = best_result
    y_reduced = y_full[:-1] - y_full[-1]
    return SynthesisResult(
        target=target,
        form=form,
        strategies=strategies,
        joint_conditionals=joint_cond,
        joint_initial=joint_init,
        y=y_reduced,
        w=w,
        margin=margin,
        note=note,
    )
