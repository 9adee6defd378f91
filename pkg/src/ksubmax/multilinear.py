"""The continuous extension of a k-dimensional assignment function.

A fractional point assigns each element i a sub-probability row
(p_i1, ..., p_ik) with sum <= 1; the leftover mass is the probability of
leaving i unassigned.  The extension F(p) is the expectation of f under
independent per-element sampling.  Everything here that feeds an inequality
check runs in exact rational arithmetic: probabilities are Fractions, the
enumeration works on scaled integers, and results are reduced once at the
end.  Monte Carlo estimation is the only floating-point consumer, and it
reports its standard error.

The second half of the module builds and verifies piecewise-linear
transformation schedules between two equal-cost solutions: the reference
solution's coordinates decrease one at a time while the greedy trace's
coordinates increase, each at rate 1/c(e).  Derivative inequalities are
checked at segment midpoints, where the per-segment quadratic F(x(t)) has
its exact mean slope.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .core import Instance, cost, support
from .errors import CostMismatch, InfeasibleSchedule, ShapeMismatch, TooLarge

EVAL_MAX_N = 12
PROPERTY_MAX_N = 10


@dataclass(frozen=True)
class FractionalPoint:
    """An n x k matrix of rationals with row sums at most 1."""

    probs: tuple  # tuple of n rows, each a tuple of k Fractions

    def __post_init__(self):
        rows = tuple(tuple(Fraction(v) for v in row) for row in self.probs)
        object.__setattr__(self, "probs", rows)
        for i, row in enumerate(rows):
            if any(v < 0 for v in row):
                raise ValueError(f"negative probability in row {i}")
            if sum(row) > 1:
                raise ValueError(f"row {i} sums to {sum(row)} > 1")

    @property
    def n(self) -> int:
        return len(self.probs)

    @property
    def k(self) -> int:
        return len(self.probs[0]) if self.probs else 0

    @classmethod
    def zeros(cls, n: int, k: int) -> "FractionalPoint":
        return cls(tuple((Fraction(0),) * k for _ in range(n)))

    @classmethod
    def from_solution(cls, x: Sequence[int], k: int) -> "FractionalPoint":
        rows = []
        for j in x:
            row = [Fraction(0)] * k
            if j:
                row[j - 1] = Fraction(1)
            rows.append(tuple(row))
        return cls(tuple(rows))

    def with_entry(self, i: int, j: int, value) -> "FractionalPoint":
        rows = [list(r) for r in self.probs]
        rows[i][j - 1] = Fraction(value)
        return FractionalPoint(tuple(tuple(r) for r in rows))

    def row_sum(self, i: int) -> Fraction:
        return sum(self.probs[i], Fraction(0))


def _check_point(inst: Instance, p: FractionalPoint) -> None:
    if p.n != inst.n or p.k != inst.k:
        raise ShapeMismatch(f"point shape ({p.n}, {p.k}) vs instance ({inst.n}, {inst.k})")


def _scaled_rows(p: FractionalPoint):
    """Per row: integer weights (w_0, w_1, ..., w_k) over a common denominator.

    w_0 is the unassigned mass.  Zero weights let the enumerations prune whole
    branches, which makes near-integral points cheap.
    """
    weights = []
    denoms = []
    for row in p.probs:
        d = 1
        for v in row:
            d = d * v.denominator // math.gcd(d, v.denominator)
        nums = [int(v * d) for v in row]
        weights.append([d - sum(nums)] + nums)
        denoms.append(d)
    return weights, denoms


def _expectation(weights, value_fn, digits, i=0, w=1):
    """Sum of w * value over outcomes of rows i.., pruning zero-probability branches."""
    if i == len(weights):
        return w * value_fn(digits)
    total = 0
    for digit, wd in enumerate(weights[i]):
        if wd:
            digits[i] = digit
            total += _expectation(weights, value_fn, digits, i + 1, w * wd)
    digits[i] = 0
    return total


def eval_exact(inst: Instance, p: FractionalPoint, _value_fn: Optional[Callable] = None) -> Fraction:
    """Exact expectation of f under independent per-element sampling at p."""
    _check_point(inst, p)
    if inst.n > EVAL_MAX_N:
        raise TooLarge(f"exact evaluation capped at n <= {EVAL_MAX_N}")
    value_fn = _value_fn if _value_fn is not None else inst.oracle.evaluate
    weights, denoms = _scaled_rows(p)
    total = _expectation(weights, value_fn, [0] * inst.n)
    return Fraction(total, math.prod(denoms))


def partial_exact(
    inst: Instance, p: FractionalPoint, i: int, j: int, _value_fn: Optional[Callable] = None
) -> Fraction:
    """Exact partial derivative of F in coordinate (i, j).

    By multilinearity this is E[f | element i -> j] - E[f | element i
    unassigned], which does not depend on row i of p.
    """
    _check_point(inst, p)
    if inst.n > EVAL_MAX_N:
        raise TooLarge(f"exact evaluation capped at n <= {EVAL_MAX_N}")
    if not 1 <= j <= inst.k:
        raise ShapeMismatch(f"dimension {j} outside 1..{inst.k}")
    value_fn = _value_fn if _value_fn is not None else inst.oracle.evaluate
    weights, denoms = _scaled_rows(p)
    weights_rest = weights[:i] + weights[i + 1 :]
    denom = math.prod(denoms[:i] + denoms[i + 1 :])
    digits = [0] * inst.n

    def diff_at(rest_digits):
        # rest_digits aliases `digits` laid out over n-1 rows; remap around i
        for t in range(i):
            digits[t] = rest_digits[t]
        for t in range(i, inst.n - 1):
            digits[t + 1] = rest_digits[t]
        digits[i] = j
        hi = value_fn(digits)
        digits[i] = 0
        return hi - value_fn(digits)

    total = _expectation(weights_rest, diff_at, [0] * (inst.n - 1))
    return Fraction(total, denom)


def eval_mc(inst: Instance, p: FractionalPoint, samples: int, seed: int):
    """Monte Carlo estimate of the extension.

    Returns (estimate, stderr) where the estimate is the exact rational
    sample mean and stderr is the floating-point sample standard error.
    Deterministic in seed; counts one query per sample.
    """
    _check_point(inst, p)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    cums = np.array(
        [np.cumsum([float(v) for v in row]) for row in p.probs], dtype=np.float64
    )
    oracle = inst.oracle
    total = 0
    sq_total = 0.0
    chunk = 1 << 15
    done = 0
    k = inst.k
    while done < samples:
        m = min(chunk, samples - done)
        u = rng.random((m, inst.n))
        digits = np.empty((m, inst.n), dtype=np.int64)
        for i in range(inst.n):
            pos = np.searchsorted(cums[i], u[:, i], side="right")
            digits[:, i] = np.where(pos < k, pos + 1, 0)
        if hasattr(oracle, "evaluate_batch"):
            vals = oracle.evaluate_batch(digits)
        else:
            vals = np.fromiter(
                (oracle.evaluate(row) for row in digits.tolist()), dtype=np.int64, count=m
            )
        total += int(vals.sum())
        sq_total += float(np.dot(vals, vals))
        done += m
    estimate = Fraction(total, samples)
    if samples == 1:
        return estimate, 0.0
    mean = total / samples
    var = max(0.0, (sq_total - samples * mean * mean) / (samples - 1))
    return estimate, math.sqrt(var / samples)


def _all_partials(inst: Instance, p: FractionalPoint, value_fn: Callable):
    """All nk exact partials in one pass over the outcome tree.

    For each leaf the product excluding each row comes from prefix/suffix
    products, so every outcome value serves all coordinates at once.  A
    partial in row i conditions on row i, so branches through a
    zero-probability digit still matter for that row; pruning only kicks in
    once two rows on the path carry zero weight (every exclusion product is
    then zero).
    """
    n, k = inst.n, inst.k
    weights, denoms = _scaled_rows(p)
    full = math.prod(denoms)
    buckets = [[0] * (k + 1) for _ in range(n)]
    digits = [0] * n
    wpath = [0] * n

    def rec(i, zeros):
        if i == n:
            v = value_fn(digits)
            if v == 0:
                return
            pre = 1
            prefixes = [1] * n
            for t in range(n):
                prefixes[t] = pre
                pre *= wpath[t]
            suf = 1
            for t in range(n - 1, -1, -1):
                excl = prefixes[t] * suf
                if excl:
                    buckets[t][digits[t]] += excl * v
                suf *= wpath[t]
            return
        for digit, wd in enumerate(weights[i]):
            if wd == 0 and zeros:
                continue
            digits[i] = digit
            wpath[i] = wd
            rec(i + 1, zeros + (wd == 0))
        digits[i] = 0

    rec(0, 0)
    out = []
    for i in range(n):
        row_denom = full // denoms[i]
        out.append(
            [Fraction(buckets[i][j] - buckets[i][0], row_denom) for j in range(1, k + 1)]
        )
    return out


@dataclass(frozen=True)
class ExtensionViolation:
    prop: str
    detail: dict


@dataclass
class ExtensionReport:
    """Outcome of the extension property checks at sampled points."""

    points: int
    checks: dict
    violations: list
    monotone_checked: bool

    @property
    def ok(self) -> bool:
        return not self.violations


def _random_point(rng, n, k, denom=8) -> FractionalPoint:
    rows = []
    for _ in range(n):
        while True:
            nums = [rng.randint(0, denom) for _ in range(k)]
            if sum(nums) <= denom:
                break
        rows.append(tuple(Fraction(v, denom) for v in nums))
    return FractionalPoint(tuple(rows))


def _table_value_fn(oracle):
    from .oracles import full_value_table

    table = full_value_table(oracle).reshape(-1)
    n, k = oracle.n, oracle.k
    powers = [(k + 1) ** (n - 1 - e) for e in range(n)]

    def value_fn(digits):
        idx = 0
        for e in range(n):
            idx += digits[e] * powers[e]
        return int(table[idx])

    return value_fn


def check_extension_properties(
    inst: Instance,
    points: int = 50,
    seed: int = 0,
    hessian_pairs: int = 4,
    antitone_pairs: int = 2,
) -> ExtensionReport:
    """Check the extension's structural properties at random rational points.

    Per point, exactly: (a) nonnegative partials when the instance is
    monotone, (b) nonnegative pairwise sums of same-row partials, (c)
    nonpositive cross-row second differences at step 1/4 (clipped to stay
    inside the domain), and (d) partial antitonicity between comparable
    points.  All comparisons are exact; the report lists every violation.
    """
    if inst.n > PROPERTY_MAX_N:
        raise TooLarge(f"extension property checks capped at n <= {PROPERTY_MAX_N}")
    rng = random.Random(f"extension:{seed}")
    value_fn = _table_value_fn(inst.oracle)
    n, k = inst.n, inst.k
    violations = []
    checks = {"monotone": 0, "pairwise": 0, "hessian": 0, "antitone": 0}

    for pt_index in range(points):
        p = _random_point(rng, n, k)
        partials = _all_partials(inst, p, value_fn)

        if inst.monotone:
            for i in range(n):
                for j in range(1, k + 1):
                    checks["monotone"] += 1
                    if partials[i][j - 1] < 0:
                        violations.append(
                            ExtensionViolation(
                                "monotone",
                                {"point": pt_index, "coord": (i, j), "value": partials[i][j - 1]},
                            )
                        )

        for i in range(n):
            for j1 in range(1, k + 1):
                for j2 in range(j1 + 1, k + 1):
                    checks["pairwise"] += 1
                    s = partials[i][j1 - 1] + partials[i][j2 - 1]
                    if s < 0:
                        violations.append(
                            ExtensionViolation(
                                "pairwise",
                                {"point": pt_index, "element": i, "dims": (j1, j2), "sum": s},
                            )
                        )

        base_val = eval_exact(inst, p, _value_fn=value_fn)
        for _ in range(hessian_pairs):
            if n < 2:
                break
            i1 = rng.randrange(n)
            i2 = rng.randrange(n)
            while i2 == i1:
                i2 = rng.randrange(n)
            j1 = rng.randint(1, k)
            j2 = rng.randint(1, k)
            d1 = min(Fraction(1, 4), 1 - p.row_sum(i1))
            d2 = min(Fraction(1, 4), 1 - p.row_sum(i2))
            if d1 == 0 or d2 == 0:
                continue
            p1 = p.with_entry(i1, j1, p.probs[i1][j1 - 1] + d1)
            p2 = p.with_entry(i2, j2, p.probs[i2][j2 - 1] + d2)
            p12 = p1.with_entry(i2, j2, p.probs[i2][j2 - 1] + d2)
            checks["hessian"] += 1
            second = (
                eval_exact(inst, p12, _value_fn=value_fn)
                - eval_exact(inst, p1, _value_fn=value_fn)
                - eval_exact(inst, p2, _value_fn=value_fn)
                + base_val
            )
            if second > 0:
                violations.append(
                    ExtensionViolation(
                        "hessian",
                        {
                            "point": pt_index,
                            "coords": ((i1, j1), (i2, j2)),
                            "second_difference": second,
                        },
                    )
                )

        for _ in range(antitone_pairs):
            scale_rows = tuple(
                tuple(v * Fraction(rng.randint(0, 8), 8) for v in row) for row in p.probs
            )
            y = FractionalPoint(scale_rows)
            y_partials = _all_partials(inst, y, value_fn)
            for i in range(n):
                for j in range(1, k + 1):
                    checks["antitone"] += 1
                    if y_partials[i][j - 1] < partials[i][j - 1]:
                        violations.append(
                            ExtensionViolation(
                                "antitone",
                                {
                                    "point": pt_index,
                                    "coord": (i, j),
                                    "smaller_point_partial": y_partials[i][j - 1],
                                    "larger_point_partial": partials[i][j - 1],
                                },
                            )
                        )

    return ExtensionReport(
        points=points, checks=checks, violations=violations, monotone_checked=inst.monotone
    )


# ---------------------------------------------------------------------------
# transformation paths


@dataclass(frozen=True)
class PathSegment:
    """One linear piece: a single reference coordinate falls at rate 1/c
    while a single trace coordinate rises at rate 1/c."""

    start: Fraction
    end: Fraction
    o_element: int
    o_dim: int
    s_element: int
    s_dim: int

    @property
    def midpoint(self) -> Fraction:
        return (self.start + self.end) / 2


@dataclass(frozen=True)
class TransformationPath:
    """Piecewise-linear schedule turning a reference solution into a traced one.

    The trace's elements rise in pick order, each occupying a time slot of
    length c(e).  Reference elements shared with the trace fall exactly in
    their rise slots; the remaining reference elements fall in increasing
    index order through the leftover time, splitting across gaps when an
    aligned slot interrupts.  Every element therefore starts falling no later
    than it starts rising, which keeps the combined point inside the domain.
    """

    instance: Instance
    reference: tuple
    greedy: tuple
    picks: tuple
    total_time: int
    s_slots: tuple  # (element, start, end, dim) in pick order
    o_pieces: tuple  # (start, end, element, dim) sorted by start
    segments: tuple

    @property
    def breakpoints(self) -> tuple:
        if not self.segments:
            return (Fraction(0),)
        return tuple(s.start for s in self.segments) + (self.segments[-1].end,)

    def _s_entry(self, e: int, t: Fraction) -> Fraction:
        for el, st, en, _ in self.s_slots:
            if el == e:
                if t <= st:
                    return Fraction(0)
                if t >= en:
                    return Fraction(1)
                return Fraction(t - st, en - st)
        return Fraction(0)

    def s_at(self, t) -> FractionalPoint:
        t = Fraction(t)
        rows = [[Fraction(0)] * self.instance.k for _ in range(self.instance.n)]
        for el, st, en, dim in self.s_slots:
            rows[el][dim - 1] = (
                Fraction(0) if t <= st else Fraction(1) if t >= en else Fraction(t - st, en - st)
            )
        return FractionalPoint(tuple(tuple(r) for r in rows))

    def floor_s_at(self, t) -> FractionalPoint:
        t = Fraction(t)
        rows = [[Fraction(0)] * self.instance.k for _ in range(self.instance.n)]
        for el, st, en, dim in self.s_slots:
            if t >= en:
                rows[el][dim - 1] = Fraction(1)
        return FractionalPoint(tuple(tuple(r) for r in rows))

    def o_at(self, t) -> FractionalPoint:
        t = Fraction(t)
        rows = [[Fraction(0)] * self.instance.k for _ in range(self.instance.n)]
        costs = self.instance.costs
        elapsed = {}
        for st, en, el, _ in self.o_pieces:
            if t > st:
                elapsed[el] = elapsed.get(el, Fraction(0)) + (min(t, en) - st)
        for e in range(self.instance.n):
            dim = self.reference[e]
            if dim:
                rows[e][dim - 1] = 1 - Fraction(elapsed.get(e, 0), costs[e])
        return FractionalPoint(tuple(tuple(r) for r in rows))

    def _combine(self, a: FractionalPoint, b: FractionalPoint) -> FractionalPoint:
        rows = []
        for ra, rb in zip(a.probs, b.probs):
            rows.append(tuple(va + vb for va, vb in zip(ra, rb)))
        return FractionalPoint(tuple(rows))

    def x_at(self, t) -> FractionalPoint:
        return self._combine(self.o_at(t), self.s_at(t))

    def y_at(self, t) -> FractionalPoint:
        return self._combine(self.o_at(t), self.floor_s_at(t))


def build_path(inst: Instance, o: Sequence[int], s_trace: Sequence) -> TransformationPath:
    """Schedule the transformation from a reference solution to a trace's solution.

    The two endpoints must have equal cost; pad the cheaper side with
    zero-value elements first (see oracles.extend_with_null_elements).
    Raises CostMismatch on unequal costs and InfeasibleSchedule if the
    start-ordering rule cannot be realized.
    """
    n, k = inst.n, inst.k
    o = tuple(o)
    if len(o) != n:
        raise ShapeMismatch(f"reference length {len(o)} vs n = {n}")
    costs = inst.costs
    s = [0] * n
    slots = []
    cum = 0
    for e, j in s_trace:
        if not 0 <= e < n:
            raise ShapeMismatch(f"pick element {e} out of range")
        if not 1 <= j <= k:
            raise ShapeMismatch(f"pick dimension {j} outside 1..{k}")
        if s[e] != 0:
            raise ShapeMismatch(f"element {e} picked twice")
        slots.append((e, cum, cum + costs[e], j))
        s[e] = j
        cum += costs[e]
    total = cum
    c_o = cost(o, inst)
    if c_o != total:
        raise CostMismatch(f"reference cost {c_o} != trace cost {total}")

    slot_of = {e: (st, en, j) for e, st, en, j in slots}
    shared = sorted(e for e in support(o) if s[e] != 0)
    pieces = [(slot_of[e][0], slot_of[e][1], e, o[e]) for e in shared]

    busy = sorted((slot_of[e][0], slot_of[e][1]) for e in shared)
    free = []
    prev = 0
    for a, b in busy:
        if a > prev:
            free.append([prev, a])
        prev = b
    if prev < total:
        free.append([prev, total])

    fi = 0
    for e in sorted(e for e in support(o) if s[e] == 0):
        need = costs[e]
        while need > 0:
            if fi >= len(free):
                raise InfeasibleSchedule(f"no remaining time to lower element {e}")
            a, b = free[fi]
            take = min(need, b - a)
            pieces.append((a, a + take, e, o[e]))
            need -= take
            if a + take == b:
                fi += 1
            else:
                free[fi][0] = a + take
    if any(a < b for a, b in free[fi:]):
        raise InfeasibleSchedule("reference schedule leaves uncovered time")

    pieces.sort()
    bps = sorted(
        {0, total}
        | {st for _, st, _, _ in slots}
        | {en for _, _, en, _ in slots}
        | {a for a, _, _, _ in pieces}
        | {b for _, b, _, _ in pieces}
    )
    segments = []
    for a, b in zip(bps, bps[1:]):
        opc = next(((pe, pa, pb) for pa, pb, pe, _ in pieces if pa <= a < pb), None)
        spc = next(((e, st, en) for e, st, en, _ in slots if st <= a < en), None)
        if opc is None or spc is None:
            raise InfeasibleSchedule(f"time {a} not covered by both schedules")
        o_e = opc[0]
        s_e = spc[0]
        segments.append(
            PathSegment(
                start=Fraction(a),
                end=Fraction(b),
                o_element=o_e,
                o_dim=o[o_e],
                s_element=s_e,
                s_dim=s[s_e],
            )
        )

    return TransformationPath(
        instance=inst,
        reference=o,
        greedy=tuple(s),
        picks=tuple((e, j) for e, _, _, j in slots),
        total_time=total,
        s_slots=tuple(slots),
        o_pieces=tuple(pieces),
        segments=tuple(segments),
    )


@dataclass(frozen=True)
class SegmentCheck:
    index: int
    midpoint: Fraction
    rate_x: Fraction
    rate_y: Fraction
    rate_s: Fraction
    failed: tuple


@dataclass
class PathReport:
    """Midpoint derivative inequalities plus the telescoped value identity."""

    monotone: bool
    segment_checks: list
    telescoped: Fraction
    value_gap: Fraction
    violations: list

    @property
    def telescoping_ok(self) -> bool:
        return self.telescoped == self.value_gap

    @property
    def ok(self) -> bool:
        return not self.violations and self.telescoping_ok


def verify_path(inst: Instance, path: TransformationPath) -> PathReport:
    """Check the derivative inequalities at every segment midpoint.

    Monotone instances must satisfy, at each midpoint, F'(y) <= 0,
    F'(x) >= F'(y) and -F'(y) <= F'(s); non-monotone instances must satisfy
    F'(x) >= -2 F'(s).  The per-segment value changes of F(x(t)) must
    telescope exactly to f(s) - f(o).
    """
    if inst.n > PROPERTY_MAX_N:
        raise TooLarge(f"path verification capped at n <= {PROPERTY_MAX_N}")
    value_fn = _table_value_fn(inst.oracle)
    costs = inst.costs
    f_s = value_fn(list(path.greedy))
    f_o = value_fn(list(path.reference))

    telescoped = Fraction(0)
    for seg in path.segments:
        telescoped += eval_exact(inst, path.x_at(seg.end), _value_fn=value_fn) - eval_exact(
            inst, path.x_at(seg.start), _value_fn=value_fn
        )

    checks = []
    violations = []
    for idx, seg in enumerate(path.segments):
        m = seg.midpoint
        x_m = path.x_at(m)
        y_m = path.y_at(m)
        s_m = path.s_at(m)
        d_inc = partial_exact(inst, x_m, seg.s_element, seg.s_dim, _value_fn=value_fn)
        d_dec = partial_exact(inst, x_m, seg.o_element, seg.o_dim, _value_fn=value_fn)
        rate_x = Fraction(d_inc, costs[seg.s_element]) - Fraction(d_dec, costs[seg.o_element])
        rate_y = -Fraction(
            partial_exact(inst, y_m, seg.o_element, seg.o_dim, _value_fn=value_fn),
            costs[seg.o_element],
        )
        rate_s = Fraction(
            partial_exact(inst, s_m, seg.s_element, seg.s_dim, _value_fn=value_fn),
            costs[seg.s_element],
        )
        failed = []
        if inst.monotone:
            if rate_y > 0:
                failed.append("y_rate_nonpositive")
            if rate_x < rate_y:
                failed.append("x_rate_dominates_y")
            if -rate_y > rate_s:
                failed.append("loss_rate_at_most_greedy_rate")
        else:
            if rate_x < -2 * rate_s:
                failed.append("x_rate_at_least_minus_twice_greedy")
        check = SegmentCheck(
            index=idx,
            midpoint=m,
            rate_x=rate_x,
            rate_y=rate_y,
            rate_s=rate_s,
            failed=tuple(failed),
        )
        checks.append(check)
        if failed:
            violations.append(check)

    return PathReport(
        monotone=inst.monotone,
        segment_checks=checks,
        telescoped=telescoped,
        value_gap=Fraction(f_s - f_o),
        violations=violations,
    )
