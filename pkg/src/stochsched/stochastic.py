"""Job-stream models and the exact law of the total processing time.

Three model families over a common symbol set: i.i.d. draws, a Markov chain,
and a finite mixture (one component drawn per sequence, then held fixed).
Probabilities are stored as exact rationals so that closed-form quantities
(means, stationary vectors, spectral rates) come out exact; dynamic programs
and samplers work in binary floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .core import JobAlphabet, JobSequence, as_fraction
from .errors import DomainError, NumericError, ResourceError

_PROB_TOL = Fraction(1, 10**12)
_MAX_LATTICE = 200_000_000  # refuse sum-law tables beyond this many lattice points


def _check_prob_vector(values: Sequence[Fraction], what: str) -> None:
    for p in values:
        if p < 0:
            raise DomainError(f"{what} has a negative entry: {p}")
    total = sum(values, Fraction(0))
    if abs(total - 1) > _PROB_TOL:
        raise DomainError(f"{what} must sum to 1 (got {float(total)!r})")


@dataclass(frozen=True)
class IIDModel:
    """Independent, identically distributed job symbols."""

    probs: Mapping[str, Fraction]

    def __post_init__(self):
        if not self.probs:
            raise DomainError("IID model needs at least one symbol")
        clean = {sym: as_fraction(p) for sym, p in self.probs.items()}
        _check_prob_vector(list(clean.values()), "IID probability vector")
        object.__setattr__(self, "probs", clean)

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(self.probs)


@dataclass(frozen=True)
class MarkovModel:
    """Markov chain over job symbols; requires irreducibility, not aperiodicity."""

    symbols: tuple[str, ...]
    transition: tuple[tuple[Fraction, ...], ...]
    initial: tuple[Fraction, ...]

    def __post_init__(self):
        symbols = tuple(self.symbols)
        if not symbols or len(set(symbols)) != len(symbols):
            raise DomainError("Markov symbols must be non-empty and distinct")
        k = len(symbols)
        rows = tuple(tuple(as_fraction(p) for p in row) for row in self.transition)
        if len(rows) != k or any(len(row) != k for row in rows):
            raise DomainError(f"transition matrix must be {k}x{k}")
        for i, row in enumerate(rows):
            _check_prob_vector(row, f"transition row for {symbols[i]!r}")
        initial = tuple(as_fraction(p) for p in self.initial)
        if len(initial) != k:
            raise DomainError(f"initial distribution must have {k} entries")
        _check_prob_vector(initial, "initial distribution")
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "transition", rows)
        object.__setattr__(self, "initial", initial)
        if not _strongly_connected(rows):
            raise DomainError("Markov chain is reducible; spectral rates need an irreducible chain")


def _strongly_connected(rows: Sequence[Sequence[Fraction]]) -> bool:
    k = len(rows)
    adj = [[j for j in range(k) if rows[i][j] > 0] for i in range(k)]
    radj = [[i for i in range(k) if rows[i][j] > 0] for j in range(k)]

    def reaches_all(start: int, edges) -> bool:
        seen = {start}
        stack = [start]
        while stack:
            for nxt in edges[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return len(seen) == k

    return reaches_all(0, adj) and reaches_all(0, radj)


@dataclass(frozen=True)
class MixtureModel:
    """Weighted mixture of job processes sharing one symbol set.

    A sequence is generated by drawing a component once, then sampling the
    whole sequence from it; the total-time law is the weighted combination
    of the component laws.
    """

    components: tuple[tuple[Fraction, "JobProcess"], ...]

    def __post_init__(self):
        comps = tuple((as_fraction(w), model) for w, model in self.components)
        if len(comps) < 2:
            raise DomainError("mixture needs at least two components")
        for w, _ in comps:
            if w <= 0:
                raise DomainError(f"mixture weights must be positive, got {w}")
        _check_prob_vector([w for w, _ in comps], "mixture weight vector")
        base = set(comps[0][1].symbols)
        for _, model in comps[1:]:
            if set(model.symbols) != base:
                raise DomainError("all mixture components must share one symbol set")
        object.__setattr__(self, "components", comps)

    @property
    def symbols(self) -> tuple[str, ...]:
        return self.components[0][1].symbols


JobProcess = Union[IIDModel, MarkovModel, MixtureModel]


def flatten_mixture(process: JobProcess) -> list[tuple[Fraction, JobProcess]]:
    """Flatten nested mixtures into weighted IID/Markov components."""
    if isinstance(process, MixtureModel):
        out = []
        for w, sub in process.components:
            out.extend((w * sw, sm) for sw, sm in flatten_mixture(sub))
        return out
    return [(Fraction(1), process)]


# ---------------------------------------------------------------------------
# exact law of the total processing time


@dataclass(frozen=True)
class SumDistribution:
    """Exact lattice law of the total processing time of n jobs.

    mass maps each attainable integer total to its probability; totals whose
    probability underflows double precision are dropped.
    """

    n: int
    mass: Mapping[int, float]

    @cached_property
    def _support(self) -> np.ndarray:
        return np.array(sorted(self.mass), dtype=np.int64)

    @cached_property
    def _probs(self) -> np.ndarray:
        return np.array([self.mass[int(s)] for s in self._support], dtype=np.float64)

    @cached_property
    def _suffix(self) -> np.ndarray:
        # _suffix[i] = P(T_n >= support[i]); one extra trailing 0 entry
        tail = np.cumsum(self._probs[::-1])[::-1]
        return np.concatenate([tail, [0.0]])

    @cached_property
    def _prefix(self) -> np.ndarray:
        # _prefix[i] = P(T_n < support[i])
        return np.concatenate([[0.0], np.cumsum(self._probs)])[: len(self._probs) + 1]

    def support(self) -> list[int]:
        return [int(s) for s in self._support]

    def mass_at(self, total: int) -> float:
        return float(self.mass.get(total, 0.0))

    def prob_above(self, threshold) -> float:
        """P(T_n > threshold), exact placement for rational thresholds."""
        cut = math.floor(as_fraction(threshold)) + 1  # T_n > thr  <=>  T_n >= cut
        idx = int(np.searchsorted(self._support, cut, side="left"))
        return float(min(1.0, max(0.0, self._suffix[idx])))

    def prob_below(self, threshold) -> float:
        """P(T_n < threshold)."""
        cut = math.ceil(as_fraction(threshold)) - 1  # T_n < thr  <=>  T_n <= cut
        idx = int(np.searchsorted(self._support, cut, side="right"))
        return float(min(1.0, max(0.0, self._prefix[idx])))

    def mean(self) -> float:
        return float(np.dot(self._support.astype(np.float64), self._probs))

    def total_mass(self) -> float:
        return float(self._probs.sum())

    def upper_quantile_total(self, epsilon: float) -> int:
        """Smallest attainable total s with P(T_n > s) <= epsilon."""
        if not 0 < epsilon < 1:
            raise DomainError(f"epsilon must lie in (0, 1), got {epsilon!r}")
        tail_after = self._suffix[1:]  # tail_after[i] = P(T_n > support[i])
        idx = int(np.argmax(tail_after <= epsilon))  # first hit; always exists (last entry is 0)
        return int(self._support[idx])


def _guard_lattice(n: int, t_min: int, t_max: int) -> None:
    if n * t_max > 2**53:
        raise DomainError(f"total-time bound {n}*{t_max} exceeds the exact double-integer range")
    if n * (t_max - t_min) + 1 > _MAX_LATTICE:
        raise ResourceError(f"sum-law support for n={n} would exceed {_MAX_LATTICE} lattice points")


def _symbol_times(process: JobProcess, alphabet: JobAlphabet) -> list[int]:
    return [alphabet.time_of(sym) for sym in process.symbols]


def _iid_weight_array(model: IIDModel, alphabet: JobAlphabet) -> tuple[int, np.ndarray]:
    """One-job law as (offset, dense probability array over [t_min, t_max])."""
    times = _symbol_times(model, alphabet)
    t_min, t_max = min(times), max(times)
    arr = np.zeros(t_max - t_min + 1, dtype=np.float64)
    for sym, t in zip(model.symbols, times):
        arr[t - t_min] += float(model.probs[sym])
    return t_min, arr


def _pow_convolve(base: np.ndarray, n: int) -> np.ndarray:
    """n-fold self-convolution by binary exponentiation."""
    result = np.array([1.0])
    cur = base
    k = n
    while k:
        if k & 1:
            result = np.convolve(result, cur)
        k >>= 1
        if k:
            cur = np.convolve(cur, cur)
    return result


def _mass_from_array(offset: int, arr: np.ndarray, n: int) -> SumDistribution:
    idx = np.nonzero(arr > 0.0)[0]
    mass = {int(offset + i): float(arr[i]) for i in idx}
    return SumDistribution(n=n, mass=mass)


def _iid_sum(model: IIDModel, alphabet: JobAlphabet, n: int) -> SumDistribution:
    t_min, arr = _iid_weight_array(model, alphabet)
    _guard_lattice(n, t_min, t_min + len(arr) - 1)
    return _mass_from_array(n * t_min, _pow_convolve(arr, n), n)


def _markov_sum(model: MarkovModel, alphabet: JobAlphabet, n: int) -> SumDistribution:
    times = _symbol_times(model, alphabet)
    t_min, t_max = min(times), max(times)
    _guard_lattice(n, t_min, t_max)
    k = len(model.symbols)
    span = t_max - t_min
    trans = np.array([[float(p) for p in row] for row in model.transition])
    # state-resolved law of the running total, window re-based at step*t_min
    cur = np.zeros((k, span + 1))
    for j in range(k):
        cur[j, times[j] - t_min] = float(model.initial[j])
    for step in range(1, n):
        new = np.zeros((k, step * span + span + 1))
        width = step * span + 1
        for j in range(k):
            col = cur[j]
            if not col.any():
                continue
            for kk in range(k):
                p = trans[j, kk]
                if p:
                    off = times[kk] - t_min
                    new[kk, off : off + width] += col * p
        cur = new
    return _mass_from_array(n * t_min, cur.sum(axis=0), n)


def _mixture_sum(model: MixtureModel, alphabet: JobAlphabet, n: int) -> SumDistribution:
    mass: dict[int, float] = {}
    for w, sub in model.components:
        part = sum_distribution(sub, alphabet, n)
        wf = float(w)
        for s, p in part.mass.items():
            mass[s] = mass.get(s, 0.0) + wf * p
    return SumDistribution(n=n, mass=mass)


def sum_distribution(process: JobProcess, alphabet: JobAlphabet, n: int) -> SumDistribution:
    """Exact dynamic-programming law of the n-job total processing time."""
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise DomainError(f"sequence length must be a positive integer, got {n!r}")
    if isinstance(process, IIDModel):
        return _iid_sum(process, alphabet, n)
    if isinstance(process, MarkovModel):
        return _markov_sum(process, alphabet, n)
    if isinstance(process, MixtureModel):
        return _mixture_sum(process, alphabet, n)
    raise DomainError(f"unsupported process type {type(process).__name__}")


# ---------------------------------------------------------------------------
# exact closed-form moments


def stationary_distribution(model: MarkovModel) -> tuple[Fraction, ...]:
    """Exact stationary vector of an irreducible chain (pi @ P == pi, sum 1).

    Solved by rational Gaussian elimination on (P^T - I) with the last
    equation replaced by normalization.
    """
    k = len(model.symbols)
    rows: list[list[Fraction]] = [
        [model.transition[j][i] - (1 if i == j else 0) for j in range(k)] for i in range(k)
    ]
    rows[k - 1] = [Fraction(1)] * k
    rhs = [Fraction(0)] * (k - 1) + [Fraction(1)]

    for col in range(k):
        pivot = next((r for r in range(col, k) if rows[r][col] != 0), None)
        if pivot is None:
            raise NumericError("stationary solve hit a singular system despite irreducibility")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        rhs[col], rhs[pivot] = rhs[pivot], rhs[col]
        inv = 1 / rows[col][col]
        rows[col] = [x * inv for x in rows[col]]
        rhs[col] = rhs[col] * inv
        for r in range(k):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[col])]
                rhs[r] = rhs[r] - f * rhs[col]

    pi = tuple(rhs)
    residual = max(
        abs(sum(pi[j] * model.transition[j][i] for j in range(k)) - pi[i]) for i in range(k)
    )
    if residual != 0 or any(p < 0 for p in pi):
        raise NumericError(f"stationary vector failed verification (residual {float(residual)})")
    return pi


def mean_time_exact(process: JobProcess, alphabet: JobAlphabet) -> Fraction:
    """Exact long-run mean processing time of one job.

    IID: sum p(j) T(j).  Markov: the stationary mean.  Mixtures have no
    single long-run mean, so they are rejected here.
    """
    if isinstance(process, IIDModel):
        return sum((p * alphabet.time_of(sym) for sym, p in process.probs.items()), Fraction(0))
    if isinstance(process, MarkovModel):
        pi = stationary_distribution(process)
        return sum((p * alphabet.time_of(sym) for sym, p in zip(process.symbols, pi)), Fraction(0))
    raise DomainError("mixtures do not have a single per-job mean; query the components")


def expected_processing_time(process: JobProcess, alphabet: JobAlphabet):
    """Per-job mean time as a float; for mixtures, the list of component means."""
    if isinstance(process, MixtureModel):
        return [float(mean_time_exact(sub, alphabet)) for _, sub in process.components]
    return float(mean_time_exact(process, alphabet))


def _iid_central_moments(model: IIDModel, alphabet: JobAlphabet) -> tuple[Fraction, Fraction, Fraction]:
    mu = mean_time_exact(model, alphabet)
    var = Fraction(0)
    rho = Fraction(0)
    for sym, p in model.probs.items():
        d = alphabet.time_of(sym) - mu
        var += p * d * d
        rho += p * abs(d) ** 3
    return mu, var, rho


def variance_processing_time(model: IIDModel, alphabet: JobAlphabet) -> float:
    """Exact central second moment of the one-job time (IID only)."""
    if not isinstance(model, IIDModel):
        raise DomainError("variance_processing_time applies to IID models only")
    return float(_iid_central_moments(model, alphabet)[1])


def third_abs_central_moment(model: IIDModel, alphabet: JobAlphabet) -> float:
    """Exact E|T - E[T]|^3 of the one-job time (IID only)."""
    if not isinstance(model, IIDModel):
        raise DomainError("third_abs_central_moment applies to IID models only")
    return float(_iid_central_moments(model, alphabet)[2])


def mean_total_time_exact(process: JobProcess, alphabet: JobAlphabet, n: int) -> Fraction:
    """Exact E[T_n] for any model, honoring Markov initial distributions."""
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise DomainError(f"sequence length must be a positive integer, got {n!r}")
    if isinstance(process, IIDModel):
        return n * mean_time_exact(process, alphabet)
    if isinstance(process, MarkovModel):
        times = [Fraction(t) for t in _symbol_times(process, alphabet)]
        marg = list(process.initial)
        total = sum((p * t for p, t in zip(marg, times)), Fraction(0))
        for _ in range(n - 1):
            marg = [
                sum((marg[j] * process.transition[j][i] for j in range(len(marg))), Fraction(0))
                for i in range(len(marg))
            ]
            total += sum((p * t for p, t in zip(marg, times)), Fraction(0))
        return total
    if isinstance(process, MixtureModel):
        return sum((w * mean_total_time_exact(sub, alphabet, n) for w, sub in process.components), Fraction(0))
    raise DomainError(f"unsupported process type {type(process).__name__}")


# ---------------------------------------------------------------------------
# sampling


def rng_stream(master_seed: int, worker: int, trial: int) -> np.random.Generator:
    """Counter-style stream: (master_seed, worker, trial) fully determines the draws."""
    key = (int(master_seed) & (2**64 - 1), int(worker), int(trial))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


def _canonical_symbols(process: JobProcess) -> tuple[str, ...]:
    return process.symbols


def _cumulative(probs: Iterable[Fraction]) -> np.ndarray:
    return np.cumsum(np.array([float(p) for p in probs]))


def _pick(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, len(cum) - 1)


def _sample_iid_block(model: IIDModel, u: np.ndarray, canon_index: dict[str, int]) -> np.ndarray:
    cum = _cumulative(model.probs.values())
    remap = np.array([canon_index[s] for s in model.symbols])
    return remap[_pick(cum, u)]


def _sample_markov_block(model: MarkovModel, u: np.ndarray, canon_index: dict[str, int]) -> np.ndarray:
    rows, n = u.shape
    cum_init = _cumulative(model.initial)
    cum_rows = [_cumulative(r) for r in model.transition]
    remap = np.array([canon_index[s] for s in model.symbols])
    out = np.empty((rows, n), dtype=np.int64)
    states = _pick(cum_init, u[:, 0])
    out[:, 0] = states
    for i in range(1, n):
        nxt = np.empty(rows, dtype=np.int64)
        for j in range(len(model.symbols)):
            mask = states == j
            if mask.any():
                nxt[mask] = _pick(cum_rows[j], u[mask, i])
        states = nxt
        out[:, i] = states
    return remap[out]


def sample_index_matrix(process: JobProcess, n: int, trials: int, master_seed: int, worker: int = 0) -> tuple[np.ndarray, tuple[str, ...]]:
    """Sample `trials` independent length-n symbol sequences, one stream per trial.

    Returns (matrix of symbol indices, canonical symbol order).  Trial t uses
    the stream (master_seed, worker, t), so any subset of trials reproduces
    identically regardless of how work is scheduled.
    """
    if n < 1 or trials < 1:
        raise DomainError("n and trials must be positive")
    symbols = _canonical_symbols(process)
    canon_index = {s: i for i, s in enumerate(symbols)}
    flat = flatten_mixture(process)
    is_mixture = isinstance(process, MixtureModel)
    cols = n + 1 if is_mixture else n
    u = np.empty((trials, cols), dtype=np.float64)
    for t in range(trials):
        u[t] = rng_stream(master_seed, worker, t).random(cols)
    out = np.empty((trials, n), dtype=np.int64)
    if is_mixture:
        cum_w = _cumulative([w for w, _ in flat])
        comp = _pick(cum_w, u[:, 0])
        body = u[:, 1:]
        for c, (_, sub) in enumerate(flat):
            mask = comp == c
            if not mask.any():
                continue
            block = body[mask]
            if isinstance(sub, IIDModel):
                out[mask] = _sample_iid_block(sub, block, canon_index)
            else:
                out[mask] = _sample_markov_block(sub, block, canon_index)
    elif isinstance(process, IIDModel):
        out = _sample_iid_block(process, u, canon_index)
    else:
        out = _sample_markov_block(process, u, canon_index)
    return out, symbols


def sample_sequence(process: JobProcess, n: int, seed: int) -> JobSequence:
    """Draw one job sequence of length n; fully determined by (process, n, seed)."""
    idx, symbols = sample_index_matrix(process, n, 1, seed)
    return JobSequence(tuple(symbols[i] for i in idx[0]))


def sample_time_matrix(process: JobProcess, alphabet: JobAlphabet, n: int, trials: int, master_seed: int, worker: int = 0) -> np.ndarray:
    """Processing-time matrix (trials, n) sampled per-trial as in sample_index_matrix."""
    idx, symbols = sample_index_matrix(process, n, trials, master_seed, worker)
    t_of = np.array([alphabet.time_of(s) for s in symbols], dtype=np.int64)
    return t_of[idx]
