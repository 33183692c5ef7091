"""Deterministic scheduling domain: job alphabets, uniform machines, makespans.

Machines run at individual speeds; a job with processing requirement t
occupies a machine of speed v for t/v time units.  All quantities here are
exact: processing requirements are positive integers, speeds are positive
rationals, and every derived time (finish time, makespan, bound) is a
`fractions.Fraction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Mapping, Sequence

from .errors import DomainError


def as_fraction(value) -> Fraction:
    """Convert ints, rationals, decimal/ratio strings, and floats to an exact Fraction.

    Strings accept both decimal ("1.5") and ratio ("3/2") notation.  Floats
    convert to the exact rational value of the double, so callers that need a
    tame denominator should pass strings or Fractions.
    """
    if isinstance(value, bool):
        raise DomainError(f"expected a rational number, got {value!r}")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, (str, float)):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise DomainError(f"cannot interpret {value!r} as a rational: {exc}") from None
    raise DomainError(f"expected a rational number, got {type(value).__name__}")


@dataclass(frozen=True)
class JobAlphabet:
    """Finite set of job types with integer processing requirements."""

    proc_time: Mapping[str, int]

    def __post_init__(self):
        if not self.proc_time:
            raise DomainError("job alphabet must contain at least one symbol")
        clean = {}
        for sym, t in self.proc_time.items():
            if not isinstance(sym, str) or not sym:
                raise DomainError(f"alphabet symbol {sym!r} must be a non-empty string")
            if isinstance(t, bool) or not isinstance(t, int) or t < 1:
                raise DomainError(f"processing time for {sym!r} must be a positive integer, got {t!r}")
            clean[sym] = t
        object.__setattr__(self, "proc_time", clean)

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(self.proc_time)

    @property
    def t_min(self) -> int:
        return min(self.proc_time.values())

    @property
    def t_max(self) -> int:
        return max(self.proc_time.values())

    def time_of(self, symbol: str) -> int:
        try:
            return self.proc_time[symbol]
        except KeyError:
            raise DomainError(f"unknown job symbol {symbol!r}") from None


@dataclass(frozen=True)
class MachineSet:
    """Uniform machines described by their positive rational speeds."""

    speeds: tuple[Fraction, ...]

    def __post_init__(self):
        speeds = tuple(as_fraction(v) for v in self.speeds)
        if not speeds:
            raise DomainError("machine set must contain at least one machine")
        for v in speeds:
            if v <= 0:
                raise DomainError(f"machine speed must be positive, got {v}")
        object.__setattr__(self, "speeds", speeds)

    @property
    def m(self) -> int:
        return len(self.speeds)

    @property
    def v_sum(self) -> Fraction:
        return sum(self.speeds, Fraction(0))

    @property
    def v_min(self) -> Fraction:
        return min(self.speeds)

    @property
    def v_max(self) -> Fraction:
        return max(self.speeds)


@dataclass(frozen=True)
class JobSequence:
    """Ordered sequence of job symbols to be scheduled."""

    items: tuple[str, ...]

    def __post_init__(self):
        items = tuple(self.items)
        if not items:
            raise DomainError("job sequence must be non-empty")
        object.__setattr__(self, "items", items)

    @property
    def n(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class Assignment:
    """Machine index chosen for each sequence position."""

    machine_of: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "machine_of", tuple(self.machine_of))


@dataclass(frozen=True)
class SchedulingProblem:
    """A job alphabet, a machine set, and the stochastic law of the job stream."""

    alphabet: JobAlphabet
    machines: MachineSet
    process: object  # a JobProcess; duck-typed here to keep this module self-contained

    def __post_init__(self):
        proc_syms = set(self.process.symbols)
        if proc_syms != set(self.alphabet.symbols):
            raise DomainError(
                "process symbols do not match the alphabet: "
                f"{sorted(proc_syms)} vs {sorted(self.alphabet.symbols)}"
            )


def scaled_inverse_speeds(machines: MachineSet) -> tuple[tuple[int, ...], int]:
    """Integer weights (w, scale) with load/speed_i == load*w_i/scale exactly.

    Lets schedulers compare finish times with pure integer arithmetic.
    """
    scale = math.lcm(*(v.numerator for v in machines.speeds))
    weights = tuple(v.denominator * (scale // v.numerator) for v in machines.speeds)
    return weights, scale


def total_processing_time(seq: JobSequence, alphabet: JobAlphabet) -> int:
    """Sum of the processing requirements of the sequence."""
    return sum(alphabet.time_of(sym) for sym in seq.items)


def machine_loads(assignment: Assignment, seq: JobSequence, alphabet: JobAlphabet, m: int) -> list[int]:
    """Total processing units placed on each of the m machines."""
    if len(assignment.machine_of) != seq.n:
        raise DomainError(
            f"assignment length {len(assignment.machine_of)} does not match sequence length {seq.n}"
        )
    loads = [0] * m
    for sym, k in zip(seq.items, assignment.machine_of):
        if not isinstance(k, int) or isinstance(k, bool) or not 0 <= k < m:
            raise DomainError(f"machine index {k!r} out of range for {m} machines")
        loads[k] += alphabet.time_of(sym)
    return loads


def makespan(assignment: Assignment, seq: JobSequence, problem: SchedulingProblem) -> Fraction:
    """Exact makespan: the largest machine finish time under the assignment."""
    loads = machine_loads(assignment, seq, problem.alphabet, problem.machines.m)
    return max(Fraction(u) / v for u, v in zip(loads, problem.machines.speeds))


def span_lower_bound(seq: JobSequence, problem: SchedulingProblem) -> Fraction:
    """Total work over total speed; no schedule of the sequence can finish sooner."""
    return Fraction(total_processing_time(seq, problem.alphabet)) / problem.machines.v_sum


def span_upper_bound(seq: JobSequence, problem: SchedulingProblem) -> Fraction:
    """span_lower_bound plus one worst job on the slowest machine.

    Earliest-finish-time list scheduling provably stays under this value, so
    it certifies an achievable makespan for the sequence.
    """
    machines = problem.machines
    return span_lower_bound(seq, problem) + Fraction(problem.alphabet.t_max) / machines.v_min


def optimal_cost_per_job_bracket(n: int, problem: SchedulingProblem) -> tuple[Fraction, Fraction]:
    """Exact bracket for the per-job cost of optimally scheduling any length-n stream.

    Returns (lo, hi) with
        lo = (1/m) * (1 - m/n) * t_min / v_max
        hi = (1/m) * (1 + m/n) * t_max / v_min.
    Both endpoints converge monotonically to the n -> infinity interval
    [t_min/(m*v_max), t_max/(m*v_min)].
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise DomainError(f"sequence length must be a positive integer, got {n!r}")
    machines = problem.machines
    m = machines.m
    lo = Fraction(1, m) * (1 - Fraction(m, n)) * Fraction(problem.alphabet.t_min) / machines.v_max
    hi = Fraction(1, m) * (1 + Fraction(m, n)) * Fraction(problem.alphabet.t_max) / machines.v_min
    return lo, hi
