"""Closed-form evaluators for the error-correction tolerance analysis.

Everything here is a pure function of scalar inputs.  The recurring symbols:

* ``r``      size of the small "regular" subsets; ``s`` the subsample size
* ``delta``  confidence parameter of the generalization bound
* ``theta``  error level of the regularity assumption
* ``rho``    label-error budget as a multiple of the minority fraction
* ``beta``   minority fraction of the clean data
* ``p``      minority-pick probability of the biased sampler; ``p* = min(p, 1-p)``
* ``radius``/``margin``  enclosing-ball radius R and separation margin gamma
* ``c``      the unnamed leading constant of the generalization bound
* ``eta``    probability a subsample holds fewer than r/2 clean points of
             either class

Bound values may exceed 1; they are reported unclamped with a ``vacuous``
flag (plus a clamped copy) rather than being silently truncated, because at
small scale these bounds frequently are vacuous and that must stay visible.
All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "BoundValue",
    "EpsilonBound",
    "HoeffdingEta",
    "RhoBetaBudget",
    "BoundsInput",
    "generalization_bound",
    "epsilon_bound",
    "translate_error_rate",
    "phi",
    "vote_error_bound",
    "rho_beta_budget",
    "rho_beta_budget_subbagging",
    "clean_point_probs",
    "worst_case_clean_probs",
    "eta_exact",
    "eta_surrogate",
    "eta_hoeffding",
    "s_min_main",
    "s_min_appendix",
    "s_min_hessian",
    "evaluate_chain",
]

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class BoundValue:
    """An upper bound that may be vacuous (>= 1)."""

    value: float
    clamped: float
    vacuous: bool

    @classmethod
    def of(cls, value: float) -> "BoundValue":
        return cls(value=value, clamped=min(max(value, 0.0), 1.0), vacuous=value >= 1.0)


@dataclass(frozen=True)
class EpsilonBound:
    """Per-member error bound under the sampling distribution.

    ``value`` is the direct evaluation; ``regularity_form`` replaces the
    clean-subset term by the regularity level theta, giving
    ``theta + (c/s) * 4 R^2 (s-r) log^2 s / gamma^2``.
    """

    value: float
    regularity_form: float
    vacuous: bool


@dataclass(frozen=True)
class HoeffdingEta:
    """Exponential eta bound; ``applicable`` is False when the validity
    conditions ``s p/(1+rho) > r/2 - 1`` and ``s(1-p)/(1+rho) > r/2 - 1``
    fail, in which case ``value`` is NaN."""

    value: float
    applicable: bool


@dataclass(frozen=True)
class RhoBetaBudget:
    """Tolerable error fraction, two printed forms.

    ``theorem_form``:   1 - 2 theta - [1/(2(1-eta-delta)) + 4 R^2 c (s-r) log^2 s / (gamma^2 s)]
    ``derivation_form``: 1 - eps/p* - 1/(2(1-eta-delta)) with eps in its
    regularity form.  The two differ by the 1/p* factor on the slack term;
    both are reported because the source material states both.
    """

    theorem_form: float
    derivation_form: float


@dataclass(frozen=True)
class BoundsInput:
    """The full symbol bundle feeding the evaluators."""

    r: int
    delta: float
    theta: float
    rho: float
    beta: float
    s: int
    p: float
    radius: float
    margin: float
    alpha: float = 1.0
    c: float = 1.0
    n_members: int = 1000
    slack_norm_sq: float = 0.0

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be a positive integer")
        if not 0.0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 0.5)")
        if not 0.0 < self.theta < 0.5:
            raise ValueError("theta must lie in (0, 0.5)")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if not 0.0 < self.beta <= 0.5:
            raise ValueError("beta must lie in (0, 0.5]")
        if self.s < 1:
            raise ValueError("s must be a positive integer")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie strictly between 0 and 1")
        if not self.radius > 0 or not self.margin > 0:
            raise ValueError("radius and margin must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not self.c > 0:
            raise ValueError("c must be positive")
        if self.n_members < 1:
            raise ValueError("n_members must be >= 1")
        if self.slack_norm_sq < 0:
            raise ValueError("slack_norm_sq must be non-negative")

    @property
    def p_star(self) -> float:
        return min(self.p, 1.0 - self.p)


def generalization_bound(
    n: int, radius: float, margin: float, slack_norm_sq: float, delta: float, c: float = 1.0
) -> BoundValue:
    """Margin-based error bound for one classifier trained on ``n`` points:

        (c/n) * ((R^2 + ||xi||^2) / gamma^2 * log^2 n + log(1/delta))
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    ln = math.log(n)
    value = (c / n) * ((radius**2 + slack_norm_sq) / margin**2 * ln * ln + math.log(1.0 / delta))
    return BoundValue.of(value)


def _slack_term(s: int, r: int, radius: float, margin: float, c: float) -> float:
    ls = math.log(s)
    return (c / s) * (4.0 * radius**2 * (s - r)) / margin**2 * ls * ls


def epsilon_bound(inputs: BoundsInput) -> EpsilonBound:
    """Per-member error rate under the sampling distribution, assuming the
    subsample holds at least r/2 clean points per class.  The clean r-subset
    generalizes like an r-point margin separator while the up-to-(s-r)
    contaminated points contribute squared slack at most 4 R^2 each:

        (c/s) * ((R^2 + 4 R^2 (s-r)) / gamma^2 * log^2 s + log(1/delta))
    """
    if inputs.s < inputs.r:
        raise ValueError("epsilon_bound requires s >= r")
    s, r = inputs.s, inputs.r
    ls = math.log(s)
    value = (inputs.c / s) * (
        (inputs.radius**2 + 4.0 * inputs.radius**2 * (s - r)) / inputs.margin**2 * ls * ls
        + math.log(1.0 / inputs.delta)
    )
    regularity_form = inputs.theta + _slack_term(s, r, inputs.radius, inputs.margin, inputs.c)
    return EpsilonBound(value=value, regularity_form=regularity_form, vacuous=value >= 1.0)


def translate_error_rate(epsilon: float, p: float) -> float:
    """Worst-case inflation from class-biased to uniform test draws:
    ``epsilon / min(p, 1-p)``."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    return epsilon / min(p, 1.0 - p)


def phi(epsilon: float, p: float, rho: float, beta: float, eta: float, delta: float) -> BoundValue:
    """Per-member error probability against the clean data:

        (1 - eta - delta) * (epsilon/p* + rho*beta) + eta + delta
    """
    value = (1.0 - eta - delta) * (translate_error_rate(epsilon, p) + rho * beta) + eta + delta
    return BoundValue.of(value)


def vote_error_bound(phi_value: float, n_members: int) -> BoundValue:
    """Failure probability of a majority vote of ``n_members`` independent
    voters each wrong with probability ``phi_value``:
    ``exp(-2 J (0.5 - phi)^2)``.  Returns 1 (vacuous) when phi >= 0.5."""
    if n_members < 1:
        raise ValueError("n_members must be >= 1")
    if phi_value >= 0.5:
        return BoundValue(value=1.0, clamped=1.0, vacuous=True)
    value = math.exp(-2.0 * n_members * (0.5 - phi_value) ** 2)
    return BoundValue.of(value)


def rho_beta_budget(inputs: BoundsInput, eta: float) -> RhoBetaBudget:
    """Largest tolerable error fraction rho*beta (see :class:`RhoBetaBudget`
    for the two printed forms).  ``eta + delta >= 1`` yields -inf."""
    if inputs.s < inputs.r:
        raise ValueError("rho_beta_budget requires s >= r")
    mass = 1.0 - eta - inputs.delta
    slack = _slack_term(inputs.s, inputs.r, inputs.radius, inputs.margin, inputs.c)
    if mass <= 0.0:
        return RhoBetaBudget(theorem_form=-math.inf, derivation_form=-math.inf)
    theorem = 1.0 - 2.0 * inputs.theta - (1.0 / (2.0 * mass) + slack)
    eps_reg = inputs.theta + slack
    derivation = 1.0 - eps_reg / inputs.p_star - 1.0 / (2.0 * mass)
    return RhoBetaBudget(theorem_form=theorem, derivation_form=derivation)


def rho_beta_budget_subbagging(inputs: BoundsInput, eta: float) -> float:
    """Theorem-form budget with the subsample size pinned to the smallest
    size that keeps class-balanced sampling optimal: s = ceil(s_min_main(r))."""
    s = math.ceil(s_min_main(inputs.r))
    pinned = BoundsInput(
        r=inputs.r,
        delta=inputs.delta,
        theta=inputs.theta,
        rho=inputs.rho,
        beta=inputs.beta,
        s=s,
        p=inputs.p,
        radius=inputs.radius,
        margin=inputs.margin,
        alpha=inputs.alpha,
        c=inputs.c,
        n_members=inputs.n_members,
        slack_norm_sq=inputs.slack_norm_sq,
    )
    return rho_beta_budget(pinned, eta).theorem_form


def clean_point_probs(beta: float, rho: float, alpha: float, p: float) -> tuple[float, float]:
    """Probability that one biased draw yields a clean minority-side point
    (first) or a clean majority-side point (second)."""
    if not 0.0 < beta <= 0.5:
        raise ValueError("beta must lie in (0, 0.5]")
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    p_ag = p * (1.0 - (1.0 - alpha) * rho) / (1.0 + alpha * rho - (1.0 - alpha) * rho)
    p_bg = (
        (1.0 - p)
        * (1.0 - beta - alpha * rho * beta)
        / (1.0 - beta - alpha * rho * beta + (1.0 - alpha) * rho * beta)
    )
    return p_ag, p_bg


def worst_case_clean_probs(rho: float, p: float) -> tuple[float, float]:
    """Minima of :func:`clean_point_probs` over the attack direction and the
    minority fraction: ``(p/(1+rho), (1-p)/(1+rho))``."""
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    return p / (1.0 + rho), (1.0 - p) / (1.0 + rho)


def _binom_lower_tail(k_max: int, n: int, q: float) -> float:
    """P(X <= k_max) for X ~ Binomial(n, q).

    Small ``n`` sums the exact terms directly; larger ``n`` works in log
    space so huge binomial coefficients cannot overflow.
    """
    if k_max < 0:
        return 0.0
    if k_max >= n:
        return 1.0
    if q <= 0.0:
        return 1.0
    if q >= 1.0:
        return 0.0
    if n <= 64:
        return float(
            sum(math.comb(n, k) * q**k * (1.0 - q) ** (n - k) for k in range(k_max + 1))
        )
    log_q = math.log(q)
    log_1q = math.log1p(-q)
    terms = []
    for k in range(k_max + 1):
        log_comb = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
        terms.append(log_comb + k * log_q + (n - k) * log_1q)
    peak = max(terms)
    return math.exp(peak) * sum(math.exp(t - peak) for t in terms)


def eta_exact(s: int, r: int, q_a: float, q_b: float) -> BoundValue:
    """Two-class binomial union bound on the probability that fewer than r/2
    of ``s`` iid draws are clean points of either class, with per-draw clean
    probabilities ``q_a`` and ``q_b``:

        sum_{k=0}^{ceil(r/2)-1} C(s,k) q^k (1-q)^(s-k)   summed for both q.

    The sum of the two tails can exceed 1; it is returned unclamped with a
    clamped copy.
    """
    if s < 1 or r < 1:
        raise ValueError("s and r must be positive")
    k_max = math.ceil(r / 2) - 1
    if k_max >= s:
        raise ValueError("r/2 - 1 must be smaller than s")
    for q in (q_a, q_b):
        if not 0.0 <= q <= 1.0:
            raise ValueError("clean-point probabilities must lie in [0, 1]")
    value = _binom_lower_tail(k_max, s, q_a) + _binom_lower_tail(k_max, s, q_b)
    return BoundValue.of(value)


def eta_surrogate(p: float, s: int, r: int, rho: float) -> float:
    """Two-term Gaussian surrogate for the worst-case eta as a function of
    the sampling bias ``p``:

        1/2 exp(-(2/s)(s p/(1+rho) - r/2 + 1)^2)
      + 1/2 exp(-(2/s)(s(1-p)/(1+rho) - r/2 + 1)^2)

    Defined for every p in (0, 1); it upper-bounds the exact eta only where
    the validity conditions of :func:`eta_hoeffding` hold with room to spare.
    """
    if s < 1 or r < 1:
        raise ValueError("s and r must be positive")
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    t1 = s * p / (1.0 + rho) - r / 2.0 + 1.0
    t2 = s * (1.0 - p) / (1.0 + rho) - r / 2.0 + 1.0
    return 0.5 * math.exp(-2.0 / s * t1 * t1) + 0.5 * math.exp(-2.0 / s * t2 * t2)


def eta_hoeffding(s: int, r: int, rho: float, p: float) -> HoeffdingEta:
    """Exponential (Hoeffding-style) form of the worst-case eta bound.

    Applicable only when ``s p/(1+rho) > r/2 - 1`` and
    ``s(1-p)/(1+rho) > r/2 - 1``; outside that region the result is flagged
    inapplicable and carries NaN.
    """
    if s < 1 or r < 1:
        raise ValueError("s and r must be positive")
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    ok = (s * p / (1.0 + rho) > r / 2.0 - 1.0) and (s * (1.0 - p) / (1.0 + rho) > r / 2.0 - 1.0)
    if not ok:
        return HoeffdingEta(value=math.nan, applicable=False)
    return HoeffdingEta(value=eta_surrogate(p, s, r, rho), applicable=True)


def s_min_main(r: int) -> float:
    """Smallest subsample size for which class-balanced sampling minimizes
    the worst-case eta regardless of the attack:

        2 r + 4 sqrt(r log 2 + log^2 2 - log 4) + log 16 - 4
    """
    arg = r * LOG2 + LOG2 * LOG2 - math.log(4.0)
    if arg < 0:
        raise ValueError(f"r={r} too small for a real square root")
    return 2.0 * r + 4.0 * math.sqrt(arg) + math.log(16.0) - 4.0


def s_min_appendix(r: int, rho: float) -> float:
    """Rho-dependent strengthening that makes p = 1/2 the global minimizer of
    the eta surrogate:

        (1+rho) (r - 2 + (1+rho) (log 2 + sqrt(log 2 (log 2 + 2r + rho log 2 - 4) / (1+rho))))

    Coincides with :func:`s_min_main` at rho = 1.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    arg = LOG2 * (LOG2 + 2.0 * r + rho * LOG2 - 4.0) / (1.0 + rho)
    if arg < 0:
        raise ValueError(f"r={r} too small for a real square root")
    return (1.0 + rho) * (r - 2.0 + (1.0 + rho) * (LOG2 + math.sqrt(arg)))


def s_min_hessian(r: int, rho: float) -> float:
    """Weaker rho-dependent condition that only makes p = 1/2 a local minimum
    of the eta surrogate:

        (1+rho) (r - 2 + (1+rho)/2 (1 + sqrt((4r + rho - 7) / (1+rho))))
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    arg = (4.0 * r + rho - 7.0) / (1.0 + rho)
    if arg < 0:
        raise ValueError(f"r={r} too small for a real square root")
    return (1.0 + rho) * (r - 2.0 + 0.5 * (1.0 + rho) * (1.0 + math.sqrt(arg)))


def evaluate_chain(inputs: BoundsInput) -> dict[str, float]:
    """Evaluate the whole pipeline from one symbol bundle: worst-case clean
    probabilities, eta (exact and exponential), epsilon, phi, the majority
    vote failure bound, and the error budgets.  Values are floats keyed by
    name; vacuous/inapplicable markers are encoded as 0/1 flags."""
    q_a, q_b = worst_case_clean_probs(inputs.rho, inputs.p)
    eta_ex = eta_exact(inputs.s, inputs.r, q_a, q_b)
    eta_h = eta_hoeffding(inputs.s, inputs.r, inputs.rho, inputs.p)
    eps = epsilon_bound(inputs)
    phi_v = phi(eps.value, inputs.p, inputs.rho, inputs.beta, eta_ex.clamped, inputs.delta)
    vote = vote_error_bound(phi_v.value, inputs.n_members)
    budget = rho_beta_budget(inputs, eta_ex.clamped)
    return {
        "q_clean_minority": q_a,
        "q_clean_majority": q_b,
        "eta_exact": eta_ex.value,
        "eta_exact_clamped": eta_ex.clamped,
        "eta_hoeffding": eta_h.value,
        "eta_hoeffding_applicable": float(eta_h.applicable),
        "epsilon": eps.value,
        "epsilon_regularity_form": eps.regularity_form,
        "epsilon_vacuous": float(eps.vacuous),
        "phi": phi_v.value,
        "phi_clamped": phi_v.clamped,
        "vote_error_bound": vote.value,
        "vote_error_vacuous": float(vote.vacuous),
        "rho_beta_budget": budget.theorem_form,
        "rho_beta_budget_derivation": budget.derivation_form,
        "rho_beta_actual": inputs.rho * inputs.beta,
    }
