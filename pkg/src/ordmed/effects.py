"""Closed-form causal effects on the log odds-ratio scale.

For a logistic mediator and a proportional-odds outcome, the total effect of
moving the exposure from ``xstar`` to ``x`` factors exactly, level by level,
into natural direct and indirect parts:

    log TCE_j = log NDE_j + log NIE_j,        j = 1..J-1

with every term an explicit function of the two fitted parameter vectors.
All quantities here are conditional on a single covariate vector ``c``; no
averaging over a covariate distribution is performed.  Exponentiated odds
ratios are a presentation concern handled by the CLI.

The interchanged decomposition (baseline and active exposure swapping roles
inside the mediator) is the same computation with ``x`` and ``xstar`` swapped
in the query; it is deliberately not a separate code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConsistencyError, DimensionError
from .models import (
    MediatorModel,
    OutcomeModel,
    _check_level,
    _covariate_vector,
    category_probabilities,
    cumulative_probability,
    mediator_probability,
)
from .numerics import log1pexp

_DECOMPOSITION_TOL = 1e-10


@dataclass(frozen=True)
class EffectQuery:
    """Contrast specification: active exposure ``x`` against baseline
    ``xstar``, conditional on covariates ``c``."""

    x: float
    xstar: float
    c: tuple[float, ...] = ()

    def __post_init__(self):
        x, xstar = float(self.x), float(self.xstar)
        if not (np.isfinite(x) and np.isfinite(xstar)):
            raise ValueError(f"x and xstar must be finite, got {self.x!r}, {self.xstar!r}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xstar", xstar)
        c = tuple(float(v) for v in self.c)
        if c and not np.all(np.isfinite(c)):
            raise ValueError(f"covariates must be finite, got {self.c!r}")
        object.__setattr__(self, "c", c)


@dataclass(frozen=True)
class EffectTable:
    """Per-level log effects for one query.

    ``log_tce``, ``log_nde``, ``log_nie`` have one entry per threshold
    j = 1..J-1.  ``log_cde`` is the pair (m=1, m=0); the controlled direct
    effect does not vary with j under proportional odds, so it is stored once
    per mediator level.
    """

    log_tce: tuple[float, ...]
    log_nde: tuple[float, ...]
    log_nie: tuple[float, ...]
    log_cde: tuple[float, float]
    query: EffectQuery

    @property
    def J(self):
        return len(self.log_tce) + 1

    def flatten(self):
        """All entries in the canonical label order of :func:`effect_labels`."""
        return np.concatenate([self.log_nde, self.log_nie, self.log_tce, self.log_cde])


def effect_labels(J):
    """Canonical (effect, level) label order used by every tabular export:
    nde 1..J-1, nie 1..J-1, tce 1..J-1, cde m=1, cde m=0."""
    levels = [str(j) for j in range(1, J)]
    return tuple(
        [("nde", j) for j in levels]
        + [("nie", j) for j in levels]
        + [("tce", j) for j in levels]
        + [("cde", "m1"), ("cde", "m0")]
    )


def _check_pair(mediator: MediatorModel, outcome: OutcomeModel, c):
    if mediator.p != outcome.p:
        raise DimensionError(
            f"mediator model has {mediator.p} covariate(s) but outcome model has {outcome.p}"
        )
    return _covariate_vector(c, outcome.p, "effect evaluation")


def g_cross(d, j, x, xstar, c, mediator: MediatorModel, outcome: OutcomeModel):
    """Log odds of M=1 given the event I(Y<=j)=d, mixing the outcome part at
    exposure ``x`` with the mediator part at exposure ``xstar``:

        g_d_j(x, xstar; c) = -d*(betaM + betaXM*x)
                             + log[(1+exp(a_j - betaX*x - betaC.c))
                                   / (1+exp(a_j - betaX*x - betaM - betaXM*x - betaC.c))]
                             + gamma0 + gammaX*xstar + gammaC.c

    ``g_cross(d, j, x, x, c)`` collapses to the one-exposure form exactly
    (same arithmetic path).
    """
    if d not in (0, 1):
        raise ValueError(f"d must be 0 or 1, got {d!r}")
    c = _check_pair(mediator, outcome, c)
    j = _check_level(j, outcome.J)
    x = float(x)
    base = outcome.alpha[j - 1] - outcome.betaX * x - float(c @ np.asarray(outcome.betaC, dtype=float))
    shift = outcome.betaM + outcome.betaXM * x
    log_ratio = log1pexp(base) - log1pexp(base - shift)
    return -d * shift + log_ratio + mediator.linear_predictor(xstar, c)


def g_observed(d, j, x, c, mediator: MediatorModel, outcome: OutcomeModel):
    """Log odds of M=1 given I(Y<=j)=d at a single exposure ``x``; depends on
    j only through the threshold alpha_j."""
    return g_cross(d, j, x, x, c, mediator, outcome)


def log_rr_correction(j, x, c, mediator: MediatorModel, outcome: OutcomeModel):
    """log of the relative risk of M=0 across I(Y<=j) levels,
    log[(1+exp g_0) / (1+exp g_1)]: the term separating the conditional from
    the marginal cumulative logit.  Zero when betaM + betaXM*x = 0."""
    g0 = g_observed(0, j, x, c, mediator, outcome)
    g1 = g_observed(1, j, x, c, mediator, outcome)
    return log1pexp(g0) - log1pexp(g1)


def counterfactual_cumulative_logit(j, x, xstar, c, mediator: MediatorModel, outcome: OutcomeModel):
    """logit P(Y(x, M(xstar)) <= j | c): the counterfactual outcome model is
    itself a cumulative logit, with the mediator held at its natural law
    under exposure ``xstar``.  With xstar = x this is the ordinary marginal
    cumulative logit of Y on X."""
    c_arr = _check_pair(mediator, outcome, c)
    j = _check_level(j, outcome.J)
    g0 = g_cross(0, j, x, xstar, c, mediator, outcome)
    g1 = g_cross(1, j, x, xstar, c, mediator, outcome)
    return (
        outcome.alpha[j - 1]
        - outcome.betaX * float(x)
        - float(c_arr @ np.asarray(outcome.betaC, dtype=float))
        - (log1pexp(g0) - log1pexp(g1))
    )


def marginal_cumulative_logit(j, x, c, mediator: MediatorModel, outcome: OutcomeModel):
    """logit P(Y<=j | x, c) after marginalising the mediator:
    alpha_j - betaX*x - betaC.c - log RR correction.  Shares its arithmetic
    path with the counterfactual logit at xstar = x, and must agree with the
    direct two-term mixture logit to machine precision."""
    return counterfactual_cumulative_logit(j, x, x, c, mediator, outcome)


def plug_in_oracle(j, x, xstar, c, mediator: MediatorModel, outcome: OutcomeModel):
    """logit P(Y(x, M(xstar)) <= j | c) by direct summation over the mediator,

        log sum_m P(Y<=j|x,m,c) P(M=m|xstar,c) - log sum_m P(Y>j|x,m,c) P(M=m|xstar,c),

    using only the probability primitives.  Kept deliberately independent of
    the closed-form route so the two can cross-check each other."""
    _check_pair(mediator, outcome, c)
    j = _check_level(j, outcome.J)
    p1 = mediator_probability(mediator, xstar, c)
    num = 0.0
    den = 0.0
    for m, w in ((0, 1.0 - p1), (1, p1)):
        below = cumulative_probability(outcome, j, x, m, c)
        # P(Y>j) as the sum of upper category probabilities, which stays
        # relatively accurate when the cumulative probability saturates
        above = float(np.sum(category_probabilities(outcome, x, m, c)[j:]))
        num += below * w
        den += above * w
    return math.log(num) - math.log(den)


def _log_one_plus_exp_ratio(j, x, xstar, c, mediator, outcome):
    # log[(1+exp g_1)/(1+exp g_0)] at (x, xstar); the recurring block in
    # every effect formula.
    g1 = g_cross(1, j, x, xstar, c, mediator, outcome)
    g0 = g_cross(0, j, x, xstar, c, mediator, outcome)
    return log1pexp(g1) - log1pexp(g0)


def log_tce(j, query: EffectQuery, mediator: MediatorModel, outcome: OutcomeModel):
    """log total causal effect at level j: the marginal log-odds contrast of
    Y > j between exposures x and xstar."""
    x, xs, c = query.x, query.xstar, query.c
    return (
        outcome.betaX * (x - xs)
        - _log_one_plus_exp_ratio(j, x, x, c, mediator, outcome)
        + _log_one_plus_exp_ratio(j, xs, xs, c, mediator, outcome)
    )


def log_cde(m, query: EffectQuery, outcome: OutcomeModel):
    """log controlled direct effect with the mediator held at m:
    (betaX + betaXM*m)(x - xstar).  Constant in j under proportional odds,
    hence no per-level variant."""
    if m not in (0, 1):
        raise ValueError(f"m must be 0 or 1, got {m!r}")
    return (outcome.betaX + outcome.betaXM * m) * (query.x - query.xstar)


def log_nde(j, query: EffectQuery, mediator: MediatorModel, outcome: OutcomeModel):
    """log natural direct effect at level j: exposure moves xstar -> x while
    the mediator keeps its natural law under xstar."""
    x, xs, c = query.x, query.xstar, query.c
    return (
        outcome.betaX * (x - xs)
        - _log_one_plus_exp_ratio(j, x, xs, c, mediator, outcome)
        + _log_one_plus_exp_ratio(j, xs, xs, c, mediator, outcome)
    )


def log_nie(j, query: EffectQuery, mediator: MediatorModel, outcome: OutcomeModel):
    """log natural indirect effect at level j: exposure fixed at x while the
    mediator law moves from xstar to x.  Zero whenever the exposure does not
    move the mediator (gammaX = 0) or the mediator does not move the outcome
    (betaM = betaXM = 0)."""
    x, xs, c = query.x, query.xstar, query.c
    return (
        -_log_one_plus_exp_ratio(j, x, x, c, mediator, outcome)
        + _log_one_plus_exp_ratio(j, x, xs, c, mediator, outcome)
    )


def effect_table(query: EffectQuery, mediator: MediatorModel, outcome: OutcomeModel):
    """All per-level effects plus both controlled direct effects, with the
    multiplicative decomposition TCE = NDE * NIE verified on the log scale
    before returning."""
    _check_pair(mediator, outcome, query.c)
    levels = range(1, outcome.J)
    nde = tuple(log_nde(j, query, mediator, outcome) for j in levels)
    nie = tuple(log_nie(j, query, mediator, outcome) for j in levels)
    tce = tuple(log_tce(j, query, mediator, outcome) for j in levels)
    for j, (t, d, i) in enumerate(zip(tce, nde, nie), start=1):
        if abs(t - (d + i)) > _DECOMPOSITION_TOL:
            raise ConsistencyError(
                f"log TCE != log NDE + log NIE at level {j}: {t!r} vs {d + i!r}"
            )
    cde = (log_cde(1, query, outcome), log_cde(0, query, outcome))
    return EffectTable(tce, nde, nie, cde, query)
