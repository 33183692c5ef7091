"""Spectral rates of the normalized total time and the experiments around them.

The normalized total T_n/(n*v_sum) concentrates; its upper spectral rate
(ebar) is the smallest rate whose exceedance probability vanishes, and the
lower rate (ebar_underline) is the largest rate undershot with vanishing
probability.  ebar equals the best achievable per-job cost with vanishing
discard probability, which the experiments here certify at finite n with
exact tail probabilities and exact rational cost accounting.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import SchedulingProblem, as_fraction
from .errors import DomainError, NumericError, ResourceError
from .schedulers import (
    BruteForce,
    EarliestFinishTime,
    LPT,
    Scheduler,
    ThresholdDiscardSet,
    batch_eft_makespans_scaled,
    brute_force_optimal,
    cost_exact,
    max_kept_total_time,
)
from .stochastic import (
    IIDModel,
    MarkovModel,
    MixtureModel,
    flatten_mixture,
    mean_time_exact,
    mean_total_time_exact,
    sample_time_matrix,
    sum_distribution,
)


def ebar_theoretical(problem: SchedulingProblem) -> Fraction:
    """Exact upper spectral rate of T_n/(n*v_sum).

    IID: mean time over v_sum.  Markov (irreducible): stationary mean over
    v_sum.  Mixture: the largest component rate among positive weights,
    after flattening nested mixtures.
    """
    process = problem.process
    v_sum = problem.machines.v_sum
    if isinstance(process, (IIDModel, MarkovModel)):
        return mean_time_exact(process, problem.alphabet) / v_sum
    if isinstance(process, MixtureModel):
        rates = [
            mean_time_exact(sub, problem.alphabet) / v_sum
            for w, sub in flatten_mixture(process)
            if w > 0
        ]
        return max(rates)
    raise DomainError(f"unsupported process type {type(process).__name__}")


def ebar_underline_theoretical(problem: SchedulingProblem) -> Fraction:
    """Exact lower spectral rate: like ebar_theoretical but mixtures take the min."""
    process = problem.process
    if isinstance(process, MixtureModel):
        v_sum = problem.machines.v_sum
        rates = [
            mean_time_exact(sub, problem.alphabet) / v_sum
            for w, sub in flatten_mixture(process)
            if w > 0
        ]
        return min(rates)
    return ebar_theoretical(problem)


def strong_converse_holds(problem: SchedulingProblem) -> bool:
    """True when the two spectral rates coincide (exact rational comparison)."""
    return ebar_theoretical(problem) == ebar_underline_theoretical(problem)


@dataclass(frozen=True)
class SpectralReport:
    """Exceedance tails over an (n, alpha) grid plus per-alpha convergence flags."""

    alpha_grid: tuple[Fraction, ...]
    n_grid: tuple[int, ...]
    tail: tuple[tuple[float, ...], ...]  # tail[i][j] = P(T_n_i/(n_i*v_sum) > alpha_j)
    converged: tuple[bool, ...]
    ebar_estimate: Fraction | None


def _tails_for_n(problem: SchedulingProblem, n: int, alphas: Sequence[Fraction]) -> list[float]:
    dist = sum_distribution(problem.process, problem.alphabet, n)
    v_sum = problem.machines.v_sum
    return [dist.prob_above(n * v_sum * alpha) for alpha in alphas]


def spectral_scan(
    problem: SchedulingProblem,
    alpha_grid: Sequence,
    n_grid: Sequence[int],
    delta: float = 1e-3,
    workers: int = 1,
) -> SpectralReport:
    """Exact tail matrix over the grid; flags alphas whose tails have converged.

    An alpha counts as converged when its tail at the largest n is below
    delta and the tail is non-increasing over the last three grid lengths.
    ebar_estimate is the smallest converged alpha (None when there is none).
    Grid cells are independent, so workers > 1 may evaluate rows in parallel;
    assembly order is fixed by the grid, not by completion order.
    """
    alphas = tuple(as_fraction(a) for a in alpha_grid)
    ns = tuple(int(n) for n in n_grid)
    if not alphas or not ns:
        raise DomainError("alpha_grid and n_grid must be non-empty")
    if any(a < 0 for a in alphas):
        raise DomainError("threshold rates must be non-negative")
    if list(alphas) != sorted(alphas) or len(set(alphas)) != len(alphas):
        raise DomainError("alpha_grid must be strictly increasing")
    if list(ns) != sorted(ns) or len(set(ns)) != len(ns) or ns[0] < 1:
        raise DomainError("n_grid must be strictly increasing positive integers")
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta!r}")
    if workers < 1:
        raise DomainError(f"workers must be >= 1, got {workers!r}")

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_tails_for_n, [problem] * len(ns), ns, [alphas] * len(ns)))
    else:
        rows = [_tails_for_n(problem, n, alphas) for n in ns]

    tail = tuple(tuple(r) for r in rows)
    window = min(3, len(ns))
    converged = []
    for j in range(len(alphas)):
        col = [tail[i][j] for i in range(len(ns))]
        last = col[-window:]
        ok = col[-1] < delta and all(a >= b for a, b in zip(last, last[1:]))
        converged.append(ok)
    estimate = next((alphas[j] for j, ok in enumerate(converged) if ok), None)
    return SpectralReport(
        alpha_grid=alphas, n_grid=ns, tail=tail, converged=tuple(converged), ebar_estimate=estimate
    )


@dataclass(frozen=True)
class RateExperimentRow:
    """One achievability row: exact discard probability and certified cost.

    When `exact` is True, cost is the scheduler's exact COST over the kept
    set and cost_lower equals it.  Otherwise [cost_lower, cost] brackets the
    optimal COST: cost_lower = max kept total / v_sum (no scheduler can beat
    it) and cost = cost_lower + t_max/v_min (EFT provably stays under it).
    """

    n: int
    discard_prob: float
    cost: Fraction
    cost_per_job: Fraction
    cost_lower: Fraction
    exact: bool

    def __post_init__(self):
        if self.cost_per_job != Fraction(self.cost) / self.n:
            raise DomainError("cost_per_job must equal cost/n exactly")


def achievability_experiment(
    problem: SchedulingProblem,
    gamma,
    scheduler: Scheduler,
    n_grid: Sequence[int],
    budget: int = 2_000_000,
) -> list[RateExperimentRow]:
    """Certify that rate ebar + gamma is achievable with vanishing discard probability.

    For each n, builds the threshold discard set at alpha = ebar + gamma,
    computes the exact discard probability, and either the exact scheduler
    COST over the kept set or (when enumeration exceeds the budget) the
    analytic bracket from the largest kept total time.
    """
    gamma = as_fraction(gamma)
    if gamma <= 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    alpha = ebar_theoretical(problem) + gamma
    v_sum = problem.machines.v_sum
    t_max_over_v_min = Fraction(problem.alphabet.t_max) / problem.machines.v_min
    rows = []
    for n in n_grid:
        discard = ThresholdDiscardSet(n=int(n), alpha=alpha)
        dist = sum_distribution(problem.process, problem.alphabet, discard.n)
        p = dist.prob_above(discard.keep_threshold(problem))
        try:
            cost = cost_exact(scheduler, discard, problem, budget=budget)
            rows.append(
                RateExperimentRow(
                    n=discard.n,
                    discard_prob=p,
                    cost=cost,
                    cost_per_job=cost / discard.n,
                    cost_lower=cost,
                    exact=True,
                )
            )
        except ResourceError:
            lower = Fraction(max_kept_total_time(discard, problem)) / v_sum
            upper = lower + t_max_over_v_min
            rows.append(
                RateExperimentRow(
                    n=discard.n,
                    discard_prob=p,
                    cost=upper,
                    cost_per_job=upper / discard.n,
                    cost_lower=lower,
                    exact=False,
                )
            )
    return rows


def converse_experiment(
    problem: SchedulingProblem, epsilon_gap, n_grid: Sequence[int]
) -> list[tuple[int, float]]:
    """Minimum feasible discard probability when targeting rate ebar - epsilon_gap.

    Any schedule fitting the kept sequences under per-job cost alpha must
    keep only sequences with T_n <= n*v_sum*alpha (the total-work floor),
    so the discard probability is at least P(T_n/(n*v_sum) > alpha).
    Returns that exact tail for each n.
    """
    gap = as_fraction(epsilon_gap)
    ebar = ebar_theoretical(problem)
    if not 0 < gap < ebar:
        raise DomainError(f"gap out of range: need 0 < gap < ebar = {ebar}, got {gap}")
    alpha = ebar - gap
    v_sum = problem.machines.v_sum
    out = []
    for n in n_grid:
        n = int(n)
        dist = sum_distribution(problem.process, problem.alphabet, n)
        out.append((n, dist.prob_above(n * v_sum * alpha)))
    return out


@dataclass(frozen=True)
class AverageCaseResult:
    """Monte-Carlo mean per-job makespan and the exact bracket it must fall in."""

    n: int
    trials: int
    mc_mean_span_per_job: float
    bracket_lo: float
    bracket_hi: float
    std_error: float


def average_case_bracket(
    problem: SchedulingProblem,
    n: int,
    trials: int,
    seed: int,
    scheduler: Scheduler,
) -> AverageCaseResult:
    """Monte-Carlo mean of SPAN/n against the exact bracket [E T_n/(n v_sum), + t_max/(n v_min)].

    Every sampled makespan lies in its per-sequence bracket, so the mean must
    fall inside the bracket up to Monte-Carlo noise; a violation beyond three
    standard errors raises NumericError.
    """
    if not isinstance(trials, int) or trials < 2:
        raise DomainError(f"trials must be an integer >= 2, got {trials!r}")
    times = sample_time_matrix(problem.process, problem.alphabet, n, trials, seed)
    if isinstance(scheduler, LPT):
        times = -np.sort(-times, axis=1)
        scheduler = EarliestFinishTime()
    if isinstance(scheduler, EarliestFinishTime):
        scaled, scale = batch_eft_makespans_scaled(times, problem.machines)
        spans = scaled.astype(np.float64) / scale
    elif isinstance(scheduler, BruteForce):
        from .core import JobSequence  # local import to keep module tops tidy

        rev = {t: sym for sym, t in problem.alphabet.proc_time.items()}
        spans = np.empty(trials)
        for i in range(trials):
            seq = JobSequence(tuple(rev[int(t)] for t in times[i]))
            spans[i] = float(brute_force_optimal(seq, problem, budget=scheduler.budget)[1])
    else:
        raise DomainError(f"unknown scheduler {scheduler!r}")
    per_job = spans / n
    mc_mean = float(per_job.mean())
    std_error = float(per_job.std(ddof=1) / math.sqrt(trials))
    v_sum = problem.machines.v_sum
    lo = mean_total_time_exact(problem.process, problem.alphabet, n) / (n * v_sum)
    hi = lo + Fraction(problem.alphabet.t_max) / (n * problem.machines.v_min)
    lo_f, hi_f = float(lo), float(hi)
    if not (lo_f - 3 * std_error <= mc_mean <= hi_f + 3 * std_error):
        raise NumericError(
            f"Monte-Carlo mean {mc_mean} escaped bracket [{lo_f}, {hi_f}] by more than 3 SE ({std_error})"
        )
    return AverageCaseResult(
        n=n,
        trials=trials,
        mc_mean_span_per_job=mc_mean,
        bracket_lo=lo_f,
        bracket_hi=hi_f,
        std_error=std_error,
    )
