"""Second-order (finite-n) analysis of the optimal discard threshold.

r_n_plus(n, epsilon) is the smallest rate whose exceedance probability is at
most epsilon; n times it brackets the optimal epsilon-discard COST within an
additive t_max/v_min.  The Gaussian prediction
    n*E[T]/v_sum - sqrt(V*n)*Phi^{-1}(epsilon)/v_sum
matches that cost up to a bounded residual; the Berry-Esseen bound
rho/(sigma^3 sqrt(n)) quantifies how far the exact tail may sit from the
Gaussian tail, with the lattice atom at the quantile covering the
strict/non-strict tail convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import SchedulingProblem
from .errors import DomainError, NumericError
from .stochastic import IIDModel, SumDistribution, _iid_central_moments, sum_distribution

_SQRT2 = math.sqrt(2.0)


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / _SQRT2)


# Rational initial approximation to the normal quantile (Acklam's coefficients),
# accurate to ~1.15e-9 on (0, 1); Newton steps against normal_cdf finish the job.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _quantile_seed(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                 / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF with |Phi(x) - p| <= 1e-10.

    Rational seed refined by Newton iteration on the erfc-based CDF.
    """
    if not isinstance(p, (int, float)) or isinstance(p, bool) or not 0.0 < float(p) < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {p!r}")
    p = float(p)
    x = _quantile_seed(p)
    for _ in range(3):
        err = normal_cdf(x) - p
        density = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        if density == 0.0:
            break
        x -= err / density
    if abs(normal_cdf(x) - p) > 1e-10:
        raise NumericError(f"normal quantile failed to converge at p={p}")
    return x


def r_n_plus(n: int, epsilon: float, problem: SchedulingProblem, _dist: SumDistribution | None = None) -> Fraction:
    """Smallest rate alpha with P(T_n/(n*v_sum) > alpha) <= epsilon, as an exact rational.

    The tail is a right-continuous step function dropping only at attainable
    totals, so the infimum is attained at a lattice point s/(n*v_sum).
    epsilon -> 0 gives t_max/v_sum; epsilon >= the mass above the minimum
    total gives t_min/v_sum.
    """
    if not 0.0 < float(epsilon) < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    dist = _dist if _dist is not None else sum_distribution(problem.process, problem.alphabet, n)
    s = dist.upper_quantile_total(float(epsilon))
    return Fraction(s) / (n * problem.machines.v_sum)


def _require_iid_nondegenerate(problem: SchedulingProblem) -> tuple[Fraction, Fraction, Fraction]:
    if not isinstance(problem.process, IIDModel):
        raise DomainError("second-order analysis covers IID job streams only")
    mu, var, rho = _iid_central_moments(problem.process, problem.alphabet)
    if var == 0:
        raise DomainError("degenerate one-point time law: variance is zero")
    return mu, var, rho


def berry_esseen_prediction(n: int, epsilon: float, problem: SchedulingProblem) -> float:
    """Gaussian prediction of the optimal epsilon-discard cost at length n."""
    if not 0.0 < float(epsilon) < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    mu, var, _ = _require_iid_nondegenerate(problem)
    v_sum = float(problem.machines.v_sum)
    q = normal_quantile(float(epsilon))
    return n * float(mu) / v_sum - math.sqrt(float(var) * n) * q / v_sum


def berry_esseen_error_bound(n: int, problem: SchedulingProblem) -> float:
    """Uniform CDF error bound rho/(sigma^3 sqrt(n)) for the normalized total.

    With the per-job summand (T - E[T])/v_sum the v_sum factors cancel, so
    the bound equals E|T-E[T]|^3 / (Var[T]^{3/2} sqrt(n)).
    """
    _, var, rho = _require_iid_nondegenerate(problem)
    return float(rho) / (float(var) ** 1.5 * math.sqrt(n))


@dataclass(frozen=True)
class SecondOrderRow:
    """One grid length: exact optimal rate, its cost bracket, and the Gaussian view."""

    n: int
    epsilon: float
    r_n_plus: Fraction
    cost_lo: Fraction
    cost_hi: Fraction
    prediction: float
    residual: float
    be_bound: float
    quantile_atom: float
    gaussian_tail: float


def second_order_table(n_grid: Sequence[int], epsilon: float, problem: SchedulingProblem) -> list[SecondOrderRow]:
    """Exact-vs-Gaussian comparison of the optimal discard cost along n_grid.

    Per n: the exact rate r_n_plus, the cost bracket
    [n*r_n_plus, n*r_n_plus + t_max/v_min], the Gaussian prediction, and the
    residual midpoint(bracket) - prediction.  gaussian_tail is the normal
    approximation of the exceedance probability at the chosen quantile, to be
    compared against epsilon within be_bound plus the lattice atom there.
    """
    mu, var, _ = _require_iid_nondegenerate(problem)
    if not 0.0 < float(epsilon) < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    epsilon = float(epsilon)
    v_sum = problem.machines.v_sum
    slack = Fraction(problem.alphabet.t_max) / problem.machines.v_min
    rows = []
    for n in n_grid:
        n = int(n)
        dist = sum_distribution(problem.process, problem.alphabet, n)
        r = r_n_plus(n, epsilon, problem, _dist=dist)
        lo = n * r
        hi = lo + slack
        pred = berry_esseen_prediction(n, epsilon, problem)
        resid = float(lo + hi) / 2.0 - pred
        s_star = n * v_sum * r
        assert s_star.denominator == 1
        s_star = int(s_star)
        z = (s_star - n * float(mu)) / math.sqrt(n * float(var))
        rows.append(
            SecondOrderRow(
                n=n,
                epsilon=epsilon,
                r_n_plus=r,
                cost_lo=lo,
                cost_hi=hi,
                prediction=pred,
                residual=resid,
                be_bound=berry_esseen_error_bound(n, problem),
                quantile_atom=dist.mass_at(s_star),
                gaussian_tail=normal_cdf(-z),
            )
        )
    return rows
