"""Verification layer: exact rational checks, exhaustive word suites, paired
distributional invariance tests and Monte Carlo expectation bounds.

Statistical tests treat invariance as the null hypothesis, so the suite is a
falsification harness: it can refute a claimed invariance, never prove one.
Exact suites (word formulas, non-dyadic triples, pathwise identities) are
deterministic and their thresholds are zero failures.

Conventions
-----------
* alpha defaults to 0.001 with a Bonferroni correction across functionals.
* mean-zero Monte Carlo checks use a 4 standard-error band; with batteries of
  dozens of checks a 3 SE band would flake too often.
* unobserved hitting times are mapped to horizon + 1 before any two-sample
  comparison; both arms of a paired test receive the same mapping, so the
  null is preserved under invariance.
* every report records seed, sizes, statistics and thresholds; verdicts are
  recomputable from the recorded numbers alone.
"""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import ks_2samp

from .errors import ConfigurationError, RuleError
from .path import (
    NOT_OBSERVED,
    Path,
    is_observed,
    max_deviation,
    negate,
    reflect_at_rule,
    reflect_at_time,
    value_at,
)
from .rational import Rational, as_rational, is_dyadic
from .signs import (
    SignWord,
    advance_path,
    advance_path_power,
    advance_word,
    all_words,
    exit_alignment_power,
    first_down_index,
    first_zero_index,
    negate_word,
    reflect_word,
    rewind_word,
    trace_sign_word,
    word_after_steps,
)
from .stopping import (
    ComposeReflect,
    FirstPassage,
    FixedTime,
    LadderStep,
    LevelLike,
    MinOf,
    Mixture,
    StoppingRule,
    TimeCompare,
    TwoSidedHit,
    ladder_trace,
)

DEFAULT_ALPHA = 1e-3
SE_BAND = 4.0
#: Normalized sup-norm tolerance for pathwise identities where a knot
#: insertion at an interpolated value enters; pure increment flips are exact.
PATH_RTOL = 1e-9


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _judge(value: float, threshold: float, direction: str) -> str:
    if direction == "abs_below":
        ok = abs(value) <= threshold
    elif direction == "above":
        ok = value > threshold
    elif direction == "below":
        ok = value < threshold
    else:
        raise RuleError(f"unknown direction {direction!r}")
    return "pass" if ok else "fail"


@dataclass
class Statistic:
    name: str
    value: float
    threshold: float
    direction: str
    verdict: str
    se: Optional[float] = None
    detail: dict = field(default_factory=dict)

    @classmethod
    def judged(cls, name: str, value: float, threshold: float,
               direction: str, se: Optional[float] = None,
               **detail) -> "Statistic":
        return cls(name, value, threshold, direction,
                   _judge(value, threshold, direction), se, detail)

    @classmethod
    def skipped(cls, name: str, **detail) -> "Statistic":
        return cls(name, math.nan, math.nan, "abs_below", "skip", None, detail)


@dataclass
class TestReport:
    name: str
    params: dict
    seed: Optional[int]
    sample_size: int
    statistics: list[Statistic]
    notes: list[str] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "fail" if any(s.verdict == "fail" for s in self.statistics) \
            else "pass"

    def recheck(self) -> bool:
        """Verdicts follow from the recorded numbers alone."""
        return all(s.verdict == _judge(s.value, s.threshold, s.direction)
                   for s in self.statistics if s.verdict != "skip")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "params": _jsonable(self.params),
            "seed": self.seed,
            "sample_size": self.sample_size,
            "verdict": self.verdict,
            "notes": list(self.notes),
            "statistics": [
                {"name": s.name, "value": _jsonable(s.value),
                 "threshold": _jsonable(s.threshold),
                 "direction": s.direction, "verdict": s.verdict,
                 "se": _jsonable(s.se), "detail": _jsonable(s.detail)}
                for s in self.statistics
            ],
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("indent", 2)
        kwargs.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kwargs)

    def csv_rows(self) -> list[dict]:
        return [
            {"test": f"{self.name}/{s.name}", "statistic": _csv_num(s.value),
             "threshold": _csv_num(s.threshold), "verdict": s.verdict,
             "seed": self.seed if self.seed is not None else ""}
            for s in self.statistics
        ]


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, SignWord):
        return x.to_string()
    if isinstance(x, float):
        if math.isnan(x):
            return None
        if x == math.inf:
            return "inf"
        if x == -math.inf:
            return "-inf"
        return x
    if isinstance(x, (np.floating, np.integer)):
        return _jsonable(float(x))
    if x is None or isinstance(x, (bool, int, str)):
        return x
    return repr(x)


def _csv_num(x) -> str:
    j = _jsonable(x)
    return "" if j is None else str(j)


# ---------------------------------------------------------------------------
# parallel sharding
# ---------------------------------------------------------------------------

def _shards(n: int, workers: int) -> list[tuple[int, int]]:
    bounds = np.linspace(0, n, max(1, workers) + 1).astype(int)
    return [(int(bounds[i]), int(bounds[i + 1]))
            for i in range(len(bounds) - 1) if bounds[i] < bounds[i + 1]]


def _run_shards(fn: Callable, args: tuple, n: int, workers: int) -> list:
    """Run fn(args, start, stop) over contiguous index ranges, in order.

    Results are reduced by the caller; splitting by draw index keeps every
    statistic independent of the worker count.
    """
    shards = _shards(n, workers)
    if len(shards) <= 1 or workers <= 1:
        return [fn(args, s, e) for s, e in shards]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futures = [ex.submit(fn, args, s, e) for s, e in shards]
        return [f.result() for f in futures]


def _reseeded(sampler, seed: Optional[int]):
    return sampler if seed is None else dataclasses.replace(sampler, seed=seed)


# ---------------------------------------------------------------------------
# functionals (closed vocabulary for invariance testing)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValueAtTime:
    t: float

    @property
    def name(self) -> str:
        return f"value_at_{self.t:g}"

    def apply(self, p: Path) -> float:
        if self.t > p.horizon:
            raise ConfigurationError(
                f"functional time {self.t} exceeds horizon {p.horizon}")
        return value_at(p, self.t)


@dataclass(frozen=True)
class RunningMax:
    @property
    def name(self) -> str:
        return "running_max"

    def apply(self, p: Path) -> float:
        return float(np.max(p.values))


@dataclass(frozen=True)
class HittingTime:
    """First-passage time of a level, with NOT_OBSERVED mapped to
    horizon + 1 so the statistic is always finite."""

    level: float

    @property
    def name(self) -> str:
        return f"hitting_time_{self.level:g}"

    def apply(self, p: Path) -> float:
        t = FirstPassage(self.level).evaluate(p)
        return t if is_observed(t) else p.horizon + 1.0


@dataclass(frozen=True)
class ValueAtRuleTime:
    """Path value at a rule's time (at the horizon when unobserved, the
    same frozen-at-the-end convention on both arms of a paired test)."""

    rule: StoppingRule
    label: str

    @property
    def name(self) -> str:
        return f"value_at_{self.label}"

    def apply(self, p: Path) -> float:
        t = self.rule.evaluate(p)
        return value_at(p, t if is_observed(t) else p.horizon)


Functional = object  # duck typed: .name, .apply(Path) -> float


def default_functionals(horizon: float, level: float = 1.0) -> list:
    return [
        ValueAtTime(horizon / 2.0),
        ValueAtTime(horizon),
        RunningMax(),
        HittingTime(level),
        HittingTime(-level),
    ]


# ---------------------------------------------------------------------------
# invariance test
# ---------------------------------------------------------------------------

def _invariance_chunk(args, start, stop):
    sampler, rule, functionals = args
    k = len(functionals)
    x = np.empty((k, stop - start))
    y = np.empty((k, stop - start))
    for i in range(start, stop):
        p = sampler.sample(i)
        q = reflect_at_rule(p, rule)
        for j, f in enumerate(functionals):
            x[j, i - start] = f.apply(p)
            y[j, i - start] = f.apply(q)
    return x, y


def invariance_test(sampler, rule: StoppingRule, functionals: Sequence,
                    n_draws: int, seed: Optional[int] = None,
                    alpha: float = DEFAULT_ALPHA, workers: int = 1,
                    name: str = "invariance") -> TestReport:
    """Paired two-sample KS test of law invariance under one reflection.

    Each functional is computed on every draw and on its reflection (same
    draws on both arms).  The per-functional KS p-value is Bonferroni
    adjusted across the functionals that are not degenerate; the test passes
    iff every adjusted p-value exceeds alpha.
    """
    if n_draws < 1000:
        raise ConfigurationError("invariance test needs at least 10^3 draws")
    sampler = _reseeded(sampler, seed)
    chunks = _run_shards(_invariance_chunk, (sampler, rule, list(functionals)),
                         n_draws, workers)
    x = np.concatenate([c[0] for c in chunks], axis=1)
    y = np.concatenate([c[1] for c in chunks], axis=1)

    live = []
    for j, f in enumerate(functionals):
        constant = (x[j].min() == x[j].max() == y[j].min() == y[j].max())
        live.append(not constant)
    n_live = sum(live)
    stats = []
    for j, f in enumerate(functionals):
        if not live[j]:
            stats.append(Statistic.skipped(
                f.name, reason="constant on both samples"))
            continue
        # asymptotic p-values: exact computation is unavailable under the
        # heavy ties that discrete laws produce, and at these sample sizes
        # the asymptotic form is standard
        res = ks_2samp(x[j], y[j], method="asymp")
        p_adj = min(1.0, float(res.pvalue) * n_live)
        stats.append(Statistic.judged(
            f.name, p_adj, alpha, "above",
            ks_statistic=float(res.statistic), p_raw=float(res.pvalue)))
    return TestReport(
        name=name,
        params={"law": repr(sampler), "rule": repr(rule), "alpha": alpha,
                "bonferroni": n_live},
        seed=getattr(sampler, "seed", None),
        sample_size=n_draws,
        statistics=stats,
    )


# ---------------------------------------------------------------------------
# expectation bound for stopped paths
# ---------------------------------------------------------------------------

def _bound_chunk(args, start, stop):
    sampler, rule, bound_cap = args
    xs = np.empty(stop - start)
    sup = 0.0
    for i in range(start, stop):
        p = sampler.sample(i)
        t, annotated = rule.observe(p)
        if not is_observed(t):
            raise ConfigurationError(
                f"stopping rule unobserved on draw {i}; cap the rule with a "
                "fixed time inside the horizon")
        idx = annotated.knot_index(t)
        running = float(np.max(np.abs(annotated.values[:idx + 1])))
        if running > bound_cap:
            raise ConfigurationError(
                f"draw {i} exceeds bound_cap: |path| reached {running}")
        sup = max(sup, running)
        xs[i - start] = annotated.values[idx]
    return xs, sup


def bound_check(sampler, a: LevelLike, b: LevelLike, rule: StoppingRule,
                bound_cap: float, n_draws: int, seed: Optional[int] = None,
                workers: int = 1) -> TestReport:
    """Estimate the mean of the path value at a bounded stopping rule and
    compare |mean| against (a + b) plus a 4 SE allowance.

    The rule must be observed on every draw and the stopped path must stay
    within bound_cap; either violation is a configuration error, not a test
    failure.  The bound is only meaningful for laws invariant under the sign
    flip and the exit reflection with a non-dyadic a/(a+b); a dyadic ratio is
    annotated in the report, since the bound can genuinely fail there.
    """
    a = as_rational(a)
    b = as_rational(b)
    sampler = _reseeded(sampler, seed)
    chunks = _run_shards(_bound_chunk, (sampler, rule, float(bound_cap)),
                         n_draws, workers)
    xs = np.concatenate([c[0] for c in chunks])
    sup = max(c[1] for c in chunks)
    mean = float(np.mean(xs))
    se = float(np.std(xs, ddof=1) / math.sqrt(xs.size)) if xs.size > 1 else 0.0
    notes = []
    if is_dyadic(a / (a + b)):
        notes.append(
            f"a/(a+b) = {a / (a + b)} is dyadic: the invariance hypothesis "
            "behind the bound does not hold, result is informational")
    return TestReport(
        name="bound_check",
        params={"a": a, "b": b, "rule": repr(rule), "bound_cap": bound_cap},
        seed=getattr(sampler, "seed", None),
        sample_size=n_draws,
        statistics=[
            Statistic.judged("stopped_mean", mean,
                             float(a + b) + SE_BAND * se, "abs_below", se=se,
                             bound=float(a + b), sup_observed=sup),
        ],
        notes=notes,
    )


# ---------------------------------------------------------------------------
# discrete martingale checks along the ladder
# ---------------------------------------------------------------------------

def _martingale_chunk(args, start, stop):
    sampler, a, b, n_steps = args
    acc: dict = {}
    anti_failures = 0
    for i in range(start, stop):
        p = sampler.sample(i)
        tr = ladder_trace(a, b, p, n_steps + 1)
        word = trace_sign_word(tr)
        for n in range(n_steps + 1):
            dy = tr.skeleton_value(n + 1) - tr.skeleton_value(n)
            key = (n, word.entries[:n])
            s, ss, c = acc.get(key, (0.0, 0.0, 0))
            f = float(dy)
            acc[key] = (s + f, ss + f * f, c + 1)
            t_n = tr.times[n]
            q = reflect_at_time(tr.path, t_n) if is_observed(t_n) else tr.path
            tr_q = ladder_trace(a, b, q, n + 1)
            dy_q = tr_q.skeleton_value(n + 1) - tr_q.skeleton_value(n)
            if dy_q != -dy:
                anti_failures += 1
    return acc, anti_failures


def martingale_step_test(sampler, a: LevelLike, b: LevelLike, n_steps: int,
                         n_draws: int, seed: Optional[int] = None,
                         workers: int = 1) -> TestReport:
    """Two checks on the ladder skeleton Y_n (path value at the last observed
    ladder time <= n):

    * for each n <= n_steps and each realized sign-word prefix e, the
      estimate of E[(Y_{n+1} - Y_n) 1{word prefix = e}] lies within 4 SE of 0
      (the martingale property restricted to the prefix events);
    * the exact antisymmetry of the increment under the reflection pivoted at
      the n-th ladder time holds on every draw, as exact rationals.
    """
    a = as_rational(a)
    b = as_rational(b)
    sampler = _reseeded(sampler, seed)
    chunks = _run_shards(_martingale_chunk, (sampler, a, b, n_steps),
                         n_draws, workers)
    acc: dict = {}
    anti_failures = 0
    for part, fails in chunks:
        anti_failures += fails
        for key, (s, ss, c) in part.items():
            s0, ss0, c0 = acc.get(key, (0.0, 0.0, 0))
            acc[key] = (s0 + s, ss0 + ss, c0 + c)
    stats = [Statistic.judged("antisymmetry_failures", anti_failures, 0.0,
                              "abs_below")]
    for (n, prefix) in sorted(acc, key=lambda k: (k[0], k[1])):
        s, ss, _ = acc[(n, prefix)]
        mean = s / n_draws
        var = max(0.0, (ss - s * s / n_draws) / max(1, n_draws - 1))
        se = math.sqrt(var / n_draws)
        label = "".join("+" if e == 1 else "-" if e == -1 else "0"
                        for e in prefix) or "()"
        stats.append(Statistic.judged(
            f"mean_increment_n{n}_prefix_{label}", mean, SE_BAND * se,
            "abs_below", se=se, count=acc[(n, prefix)][2]))
    return TestReport(
        name="martingale_step_test",
        params={"a": a, "b": b, "n_steps": n_steps},
        seed=getattr(sampler, "seed", None),
        sample_size=n_draws,
        statistics=stats,
    )


# ---------------------------------------------------------------------------
# pathwise stability suite
# ---------------------------------------------------------------------------

def _cmp(x: float, y: float) -> int:
    return (x > y) - (x < y)


def _stability_chunk(args, start, stop):
    sampler, = args
    exit_rule = TwoSidedHit(1, 2)
    hit_up = FirstPassage(Fraction(1))
    hit_down = FirstPassage(Fraction(-1))
    fixed_mid = FixedTime(1.0)
    ladder2 = LadderStep(1, 2, 2)
    never = FirstPassage(Fraction(50))
    reflect_rules = [exit_rule, hit_up, fixed_mid, ladder2, never]
    compose_pairs = [(hit_up, exit_rule), (fixed_mid, exit_rule),
                     (hit_up, fixed_mid), (exit_rule, exit_rule)]
    mix = Mixture(((hit_up, TimeCompare(hit_up, fixed_mid, "le")),
                   (fixed_mid, TimeCompare(hit_up, fixed_mid, "gt"))))
    mix_min = MinOf(hit_up, fixed_mid)

    fails = {k: 0 for k in
             ["involution_exact", "involution_function", "time_idempotent",
              "formulas_low_branch", "formulas_high_branch",
              "negated_level_chain", "prefix_determinism", "order_consistency",
              "mixture_events", "mixture_min", "mixture_involution"]}
    worst = 0.0

    def dev(p1, p2, superset: bool = False) -> float:
        scale = max(1.0, float(np.max(np.abs(p1.values))),
                    float(np.max(np.abs(p2.values))))
        if superset:
            # p1's knots contain p2's by construction, so p1's grid is the
            # union and one interpolation suffices
            d = float(np.max(np.abs(
                p1.values - np.interp(p1.knots, p2.knots, p2.values))))
        else:
            d = max_deviation(p1, p2)
        return d / scale

    for i in range(start, stop):
        p = sampler.sample(i)

        for rule in reflect_rules:
            t, p1 = rule.observe(p)
            if not is_observed(t):
                if reflect_at_rule(p, rule) != p:
                    fails["involution_exact"] += 1
                continue
            q1 = reflect_at_time(p1, t)
            t2, q1a = rule.observe(q1)
            if t2 != t:
                fails["time_idempotent"] += 1
            if reflect_at_time(q1a, t2 if is_observed(t2) else t) != p1:
                fails["involution_exact"] += 1
            d = dev(p1, p, superset=True)
            worst = max(worst, d)
            if d > PATH_RTOL:
                fails["involution_function"] += 1

        for s_rule, t_rule in compose_pairs:
            ts, tt = s_rule.evaluate(p), t_rule.evaluate(p)
            lhs = reflect_at_rule(p, ComposeReflect(s_rule, t_rule))
            q = reflect_at_rule(p, t_rule)
            if ts <= tt:
                s_on_q = s_rule.evaluate(q)
                d = dev(lhs, reflect_at_rule(p, s_rule), superset=True)
                worst = max(worst, d)
                if (is_observed(ts) and s_on_q != ts) or d > PATH_RTOL:
                    fails["formulas_low_branch"] += 1
            if ts >= tt:
                qq = reflect_at_rule(q, s_rule)
                t_back = t_rule.evaluate(qq)
                d = dev(lhs, reflect_at_rule(qq, t_rule), superset=True)
                worst = max(worst, d)
                if (is_observed(tt) and t_back != tt) or d > PATH_RTOL:
                    fails["formulas_high_branch"] += 1

        lhs = reflect_at_rule(p, hit_down)
        rhs = negate(reflect_at_rule(negate(p), hit_up))
        if lhs != rhs or hit_down.evaluate(p) != hit_up.evaluate(negate(p)):
            fails["negated_level_chain"] += 1

        # prefix surgery at a knot: q agrees with p on [0, t0] bit for bit
        t0 = float(p.knots[p.knots.size // 4])
        q = reflect_at_time(p, t0)
        others_p = None
        for rule in (hit_up, exit_rule, mix):
            rp, rq = rule.evaluate(p), rule.evaluate(q)
            if min(rp, rq) <= t0:
                if rp != rq:
                    fails["prefix_determinism"] += 1
                if others_p is None:
                    others_p = [(o, o.evaluate(p), o.evaluate(q))
                                for o in (fixed_mid, exit_rule)]
                for _, op_, oq_ in others_p:
                    if _cmp(op_, rp) != _cmp(oq_, rq):
                        fails["order_consistency"] += 1

        q = reflect_at_rule(p, fixed_mid)
        for op in ("lt", "eq", "gt"):
            ev = TimeCompare(hit_up, fixed_mid, op)
            if ev.holds(p) != ev.holds(q):
                fails["mixture_events"] += 1
        if mix.evaluate(p) != mix_min.evaluate(p):
            fails["mixture_min"] += 1
        d = dev(reflect_at_rule(reflect_at_rule(p, mix), mix), p)
        worst = max(worst, d)
        if d > PATH_RTOL:
            fails["mixture_involution"] += 1

    return fails, worst


def stability_suite(n_paths: int, seed: int = 0, sampler=None,
                    workers: int = 1) -> TestReport:
    """Pathwise identity battery on random paths, all at zero tolerance on
    increments with a 1e-9 normalized allowance where knot interpolation
    enters: reflections are involutions, reflecting twice is idempotent on
    the stopping time, both branches of the reflected-composition formula,
    the negated-level reflection chain, prefix determinism of rule times,
    order consistency, and mixture stability."""
    from .samplers import BrownianMotion
    if sampler is None:
        sampler = BrownianMotion(dt=1e-3, horizon=10.0, seed=seed)
    else:
        sampler = _reseeded(sampler, seed)
    chunks = _run_shards(_stability_chunk, (sampler,), n_paths, workers)
    fails: dict = {}
    worst = 0.0
    for part, w in chunks:
        worst = max(worst, w)
        for k, v in part.items():
            fails[k] = fails.get(k, 0) + v
    stats = [Statistic.judged(k, v, 0.0, "abs_below")
             for k, v in sorted(fails.items())]
    stats.append(Statistic.judged("max_normalized_deviation", worst,
                                  PATH_RTOL, "abs_below"))
    return TestReport(
        name="stability_suite",
        params={"law": repr(sampler)},
        seed=seed,
        sample_size=n_paths,
        statistics=stats,
    )


# ---------------------------------------------------------------------------
# sign-word identity suite
# ---------------------------------------------------------------------------

def _sign_chunk(args, start, stop):
    sampler, a, b, n = args
    rule = TwoSidedHit(a, b)
    fails = {k: 0 for k in ["negation", "reflection", "advance",
                            "hit_identity", "times_preserved"]}
    word_counts: dict = {}
    for i in range(start, stop):
        p = sampler.sample(i)
        tr = ladder_trace(a, b, p, n)
        w = trace_sign_word(tr)
        word_counts[w.to_string()] = word_counts.get(w.to_string(), 0) + 1
        base = tr.path

        tr_neg = ladder_trace(a, b, negate(base), n)
        if trace_sign_word(tr_neg) != negate_word(w):
            fails["negation"] += 1
        tr_ref = ladder_trace(a, b, reflect_at_rule(base, rule), n)
        if trace_sign_word(tr_ref) != reflect_word(w):
            fails["reflection"] += 1
        tr_adv = ladder_trace(a, b, advance_path(base, rule), n)
        if trace_sign_word(tr_adv) != advance_word(w):
            fails["advance"] += 1
        if not (tr_neg.times == tr_ref.times == tr_adv.times == tr.times):
            fails["times_preserved"] += 1

        t_exit = rule.evaluate(base)
        m = first_down_index(w)
        if m is not None:
            ok = t_exit == tr.times[m]
        elif first_zero_index(w) is not None:
            ok = not is_observed(t_exit)
        else:
            ok = t_exit > tr.times[n]
        if not ok:
            fails["hit_identity"] += 1
    return fails, word_counts


def sign_identity_test(sampler, a: LevelLike, b: LevelLike, n: int,
                       n_draws: int, seed: Optional[int] = None,
                       workers: int = 1) -> TestReport:
    """Exact pathwise checks tying sign words to path transformations:
    negating the path negates the word, reflecting at the exit time applies
    reflect_word, the advance map applies advance_word, ladder times are
    preserved by all three transformations, and the exit time equals the
    ladder time indexed by the word's first -1 (unobserved on both sides
    when the word has no -1 but a 0; strictly later than step n when the
    word is all plus)."""
    a = as_rational(a)
    b = as_rational(b)
    sampler = _reseeded(sampler, seed)
    chunks = _run_shards(_sign_chunk, (sampler, a, b, n), n_draws, workers)
    fails: dict = {}
    words: dict = {}
    for part, counts in chunks:
        for k, v in part.items():
            fails[k] = fails.get(k, 0) + v
        for w, c in counts.items():
            words[w] = words.get(w, 0) + c
    stats = [Statistic.judged(k, v, 0.0, "abs_below")
             for k, v in sorted(fails.items())]
    stats.append(Statistic.judged(
        "distinct_words_observed", len(words), 0.0, "above",
        word_counts=dict(sorted(words.items()))))
    return TestReport(
        name="sign_identity_test",
        params={"a": a, "b": b, "n": n, "law": repr(sampler)},
        seed=getattr(sampler, "seed", None),
        sample_size=n_draws,
        statistics=stats,
    )


# ---------------------------------------------------------------------------
# exit alignment (word -> power of the advance map)
# ---------------------------------------------------------------------------

def exit_alignment_test(sampler, a: LevelLike, b: LevelLike, n: int,
                        min_per_word: int, n_draws_max: int,
                        seed: Optional[int] = None) -> TestReport:
    """For every zero-absorbing word e of length n, on draws whose observed
    word equals e, the n-th ladder time must coincide exactly with the exit
    time evaluated after exit_alignment_power(e) applications of the advance
    map (rewinding when negative); unobserved on both sides in the truncated
    case.  Draws continue until every word has min_per_word checks or the
    draw cap is reached (falling short is a failure)."""
    a = as_rational(a)
    b = as_rational(b)
    sampler = _reseeded(sampler, seed)
    rule = TwoSidedHit(a, b)
    words = list(all_words(n))
    powers = {w.entries: exit_alignment_power(w) for w in words}
    counts = {w.entries: 0 for w in words}
    failures = 0
    draws = 0
    while draws < n_draws_max and any(c < min_per_word
                                      for c in counts.values()):
        p = sampler.sample(draws)
        draws += 1
        tr = ladder_trace(a, b, p, n)
        w = trace_sign_word(tr).entries
        if counts[w] >= min_per_word:
            continue
        counts[w] += 1
        q = advance_path_power(tr.path, rule, powers[w])
        t_exit = rule.evaluate(q)
        if t_exit != tr.times[n]:
            failures += 1
    short = sum(1 for c in counts.values() if c < min_per_word)
    return TestReport(
        name="exit_alignment_test",
        params={"a": a, "b": b, "n": n, "min_per_word": min_per_word,
                "words": len(words)},
        seed=getattr(sampler, "seed", None),
        sample_size=draws,
        statistics=[
            Statistic.judged("alignment_failures", failures, 0.0, "abs_below"),
            Statistic.judged("words_below_quota", short, 0.0, "abs_below",
                             min_count=min(counts.values()),
                             checks_total=sum(counts.values())),
        ],
    )


# ---------------------------------------------------------------------------
# exhaustive deterministic suites
# ---------------------------------------------------------------------------

def check_non_dyadic_triple(a, b, c) -> bool:
    """For rationals 0 < a < b < c, whether at least one of a/(a+b), b/(b+c),
    a/(a+c) is non-dyadic (exhaustive sweeps show this always holds)."""
    a, b, c = as_rational(a), as_rational(b), as_rational(c)
    if not 0 < a < b < c:
        raise RuleError(f"need 0 < a < b < c, got {a}, {b}, {c}")
    return (not is_dyadic(a / (a + b)) or not is_dyadic(b / (b + c))
            or not is_dyadic(a / (a + c)))


def non_dyadic_sweep(limit: int) -> TestReport:
    """check_non_dyadic_triple over all integer triples 0 < a < b < c <= limit
    (the exhaustive enumeration is itself the oracle)."""
    checked = 0
    failures = 0
    first_failure = None
    for c in range(3, limit + 1):
        for b in range(2, c):
            for a in range(1, b):
                checked += 1
                if not check_non_dyadic_triple(a, b, c):
                    failures += 1
                    if first_failure is None:
                        first_failure = (a, b, c)
    stats = [Statistic.judged("triple_failures", failures, 0.0, "abs_below",
                              checked=checked, first_failure=first_failure)]
    return TestReport(name="non_dyadic_sweep", params={"limit": limit},
                      seed=None, sample_size=checked, statistics=stats)


def counterexample_demo(n_draws: int, seed: int = 0,
                        c: Rational = Fraction(3), horizon: float = 5.0,
                        workers: int = 1) -> TestReport:
    """Experiment on the two-segment counterexample law.

    Checks, on the same draws: the exit time of (-1, 1) equals 1 on every
    draw; the mean value at the exit of (-2, c) equals (c-2)/2 within 4 SE
    (that value is uniform on {-2, c}, so the mean grows with c even though
    the law is invariant under the sign flip and the exit reflection of
    (-1, 1), whose barrier ratio 1/2 is dyadic); and the paired invariance
    tests at those two reflections pass.
    """
    from .samplers import DyadicCounterexample
    c = as_rational(c)
    if c <= 1:
        raise ConfigurationError("c must exceed 1")
    if horizon < 2.0 + float(c):
        horizon = 2.0 + float(c)  # ensure the exit of (-2, c) is observed
    sampler = DyadicCounterexample(horizon=horizon, seed=seed)
    exit_wide = TwoSidedHit(2, c)
    exit_unit = TwoSidedHit(1, 1)
    xs = np.empty(n_draws)
    unit_time_failures = 0
    for i in range(n_draws):
        p = sampler.sample(i)
        if exit_unit.evaluate(p) != 1.0:
            unit_time_failures += 1
        t, annotated = exit_wide.observe(p)
        xs[i] = value_at(annotated, t)
    mean = float(np.mean(xs))
    se = float(np.std(xs, ddof=1) / math.sqrt(n_draws))
    expected = float((c - 2) / 2)
    functionals = [
        ValueAtTime(2.0), ValueAtTime(horizon), RunningMax(),
        HittingTime(2.0), HittingTime(-2.0),
        ValueAtRuleTime(exit_wide, f"exit_m2_{c}"),
    ]
    stats = [
        Statistic.judged("unit_exit_time_failures", unit_time_failures, 0.0,
                         "abs_below"),
        Statistic.judged("stopped_mean_vs_expected", mean - expected,
                         SE_BAND * se, "abs_below", se=se, mean=mean,
                         expected=expected),
    ]
    for label, rule in (("reflect0", FixedTime(0.0)), ("exit11", exit_unit)):
        rep = invariance_test(sampler, rule, functionals, n_draws,
                              workers=workers, name=label)
        for s in rep.statistics:
            stats.append(dataclasses.replace(s, name=f"{label}_{s.name}"))
    return TestReport(
        name="counterexample_demo",
        params={"c": c, "horizon": horizon},
        seed=seed,
        sample_size=n_draws,
        statistics=stats,
    )


def advance_formula_check(n_max: int) -> TestReport:
    """Exhaustive check of the closed-form advance formula against brute
    iteration, for every prefix length n <= n_max, every step count below
    2**n, and suffixes headed by +1 and by -1; plus the shifted variant
    starting from (plus^(n-1), -1, suffix) with signed exponents, and
    bijectivity of the advance map on each word space."""
    mismatches = 0
    shifted_mismatches = 0
    non_bijective = 0
    checked = 0
    for n in range(n_max + 1):
        for suffix in ((1,), (-1,)):
            w = SignWord((1,) * n + suffix)
            for steps in range(2 ** n):
                checked += 1
                if word_after_steps(n, steps, suffix) != w:
                    mismatches += 1
                w = advance_word(w)
            if n >= 1:
                base = SignWord((1,) * (n - 1) + (-1,) + suffix)
                w = base
                for e in range(2 ** (n - 1)):
                    checked += 1
                    if word_after_steps(n, 2 ** (n - 1) + e, suffix) != w:
                        shifted_mismatches += 1
                    w = advance_word(w)
                w = base
                for e in range(1, 2 ** (n - 1) + 1):
                    w = rewind_word(w)
                    checked += 1
                    if word_after_steps(n, 2 ** (n - 1) - e, suffix) != w:
                        shifted_mismatches += 1
    for n in range(min(n_max, 12) + 1):
        words = list(all_words(n))
        image = {advance_word(w).entries for w in words}
        if len(image) != len(words):
            non_bijective += 1
    stats = [
        Statistic.judged("formula_mismatches", mismatches, 0.0, "abs_below",
                         checked=checked),
        Statistic.judged("shifted_formula_mismatches", shifted_mismatches,
                         0.0, "abs_below"),
        Statistic.judged("non_bijective_lengths", non_bijective, 0.0,
                         "abs_below"),
    ]
    return TestReport(name="advance_formula_check", params={"n_max": n_max},
                      seed=None, sample_size=checked, statistics=stats)
