"""Maximum-likelihood fitting of both regressions by Newton-Raphson.

Both likelihoods are smooth and low-dimensional, so a full Newton step with a
step-halving line search (and a damped gradient fallback when the Hessian is
not usable) converges in a handful of iterations and yields the observed
information as a by-product.

Threshold ordering in the outcome model is kept by optimizing over
(alpha_1, log of successive gaps) and mapping standard errors back with the
delta method, which leaves the optimizer unconstrained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, DegenerateDataError, DimensionError, SeparationError
from .models import (
    Dataset,
    MediatorModel,
    OutcomeModel,
    _category_matrix,
    _mediator_eta_vec,
)
from .numerics import expit, log1pexp

GRADIENT_TOL = 1e-8
_LOGLIK_RTOL = 1e-12
_MAX_ITERATIONS = 100
_MAX_HALVINGS = 30
_DIVERGENCE_NORM = 1e3


@dataclass(frozen=True)
class FitResult:
    """Outcome of one maximum-likelihood fit.

    ``standard_errors`` is aligned with the natural parameter vector of
    ``model``: (gamma0, gammaX, gammaC...) for the mediator regression,
    (alpha_1..alpha_{J-1}, betaX, betaM, betaXM, betaC...) for the outcome
    regression.  Entries are NaN when the observed information is not
    positive definite.
    """

    model: MediatorModel | OutcomeModel
    loglik: float
    gradient_norm: float
    iterations: int
    standard_errors: tuple[float, ...]
    converged: bool


def parameter_labels(model):
    """Names matching the parameter-vector order used by FitResult."""
    if isinstance(model, MediatorModel):
        return ("gamma0", "gammaX") + tuple(f"gammaC{i}" for i in range(1, model.p + 1))
    return (
        tuple(f"alpha{j}" for j in range(1, model.J))
        + ("betaX", "betaM", "betaXM")
        + tuple(f"betaC{i}" for i in range(1, model.p + 1))
    )


def _check_dims(model, data: Dataset):
    if model.p != data.p:
        raise DimensionError(f"model has {model.p} covariate(s) but dataset has {data.p}")


def loglik_mediator(model: MediatorModel, data: Dataset):
    """Bernoulli log-likelihood of the mediator regression."""
    _check_dims(model, data)
    eta = _mediator_eta_vec(model, data.x, data.covariates)
    return float(np.sum(data.m * eta - log1pexp(eta)))


def loglik_outcome(model: OutcomeModel, data: Dataset):
    """Multinomial log-likelihood implied by the cumulative-logit model.

    A record whose category probability underflows to zero makes the result
    exactly -inf (no exception, no clamping).
    """
    _check_dims(model, data)
    if model.J != data.J:
        raise DimensionError(f"model has J={model.J} levels but dataset declares J={data.J}")
    probs = _category_matrix(model, data.x, data.m, data.covariates)
    picked = probs[np.arange(data.n), data.y - 1]
    with np.errstate(divide="ignore"):
        return float(np.sum(np.log(picked)))


def mediator_loglik_gradient(model: MediatorModel, data: Dataset):
    """Score of loglik_mediator with respect to (gamma0, gammaX, gammaC...)."""
    _check_dims(model, data)
    Z = _mediator_design(data)
    theta = np.concatenate([[model.gamma0, model.gammaX], model.gammaC])
    _, grad, _ = _bernoulli_parts(theta, Z, data.m.astype(float))
    return grad


def outcome_loglik_gradient(model: OutcomeModel, data: Dataset):
    """Score of loglik_outcome with respect to (alpha..., betaX, betaM,
    betaXM, betaC...)."""
    _check_dims(model, data)
    alpha = np.asarray(model.alpha, dtype=float)
    beta = np.concatenate([[model.betaX, model.betaM, model.betaXM], model.betaC])
    _, grad, _ = _proportional_odds_parts(alpha, beta, _outcome_design(data), data.y, data.J)
    if grad is None:
        raise ValueError("gradient undefined: some record has probability zero")
    return grad


def fit_mediator(data: Dataset) -> FitResult:
    """MLE of the logistic mediator regression.

    Requires both mediator values present and a full-rank (1, x, c) design.
    Complete separation is reported as :class:`SeparationError` when the
    parameter norm passes 1e3 while the likelihood is still improving.
    """
    if not (np.any(data.m == 0) and np.any(data.m == 1)):
        raise DegenerateDataError("mediator takes a single value; need both M=0 and M=1 to fit")
    Z = _mediator_design(data)
    _require_full_rank(Z, "mediator design matrix (1, x, c)")
    m = data.m.astype(float)

    theta, ll, grad, hess, iters, converged = _newton_maximize(
        lambda t: _bernoulli_parts(t, Z, m), np.zeros(Z.shape[1]), "mediator model"
    )
    se = _standard_errors(-hess)
    model = MediatorModel(theta[0], theta[1], tuple(theta[2:]))
    return FitResult(model, ll, float(np.max(np.abs(grad))), iters, tuple(se), converged)


def fit_outcome(data: Dataset) -> FitResult:
    """MLE of the proportional-odds outcome regression.

    Every level 1..J must be observed: empty categories abort with a clear
    error rather than being merged, since merging would change the estimand.
    Slopes start at zero and thresholds at the empirical marginal cumulative
    logits of Y.
    """
    counts = np.bincount(data.y, minlength=data.J + 1)[1:]
    missing = np.flatnonzero(counts == 0) + 1
    if missing.size:
        raise DegenerateDataError(
            f"outcome level(s) {', '.join(map(str, missing))} never observed; "
            f"every level 1..{data.J} must appear at least once"
        )
    W = _outcome_design(data)
    _require_full_rank(np.column_stack([np.ones(data.n), W]), "outcome design matrix (1, x, m, x*m, c)")

    K = data.J - 1
    cum = np.cumsum(counts)[:-1] / data.n
    alpha0 = np.log(cum / (1.0 - cum))
    if K == 1:
        phi0 = np.concatenate([alpha0, np.zeros(W.shape[1])])
    else:
        phi0 = np.concatenate([alpha0[:1], np.log(np.diff(alpha0)), np.zeros(W.shape[1])])

    phi, ll, grad_phi, hess_phi, iters, converged = _newton_maximize(
        lambda ph: _outcome_parts_phi(ph, K, W, data.y, data.J), phi0, "outcome model"
    )

    alpha = _alpha_from_phi(phi, K)
    beta = phi[K:]
    jac = _phi_jacobian(phi, K)
    se = _delta_method_errors(jac, -hess_phi)

    if np.any(np.diff(alpha) <= 0.0):
        raise ConvergenceError(
            "threshold ordering degenerate at the optimum (a gap underflowed to zero); "
            "the data cannot separate adjacent outcome levels"
        )
    model = OutcomeModel(tuple(alpha), beta[0], beta[1], beta[2], tuple(beta[3:]))
    return FitResult(model, ll, float(np.max(np.abs(grad_phi))), iters, tuple(se), converged)


# ----------------------------------------------------------------------
# designs and likelihood parts

def _mediator_design(data: Dataset):
    return np.column_stack([np.ones(data.n), data.x, data.covariates])


def _outcome_design(data: Dataset):
    x = data.x
    m = data.m.astype(float)
    return np.column_stack([x, m, x * m, data.covariates])


def _require_full_rank(design, what):
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise DegenerateDataError(f"{what} is rank-deficient; parameters are not identifiable")


def _bernoulli_parts(theta, Z, m):
    # log-likelihood, score and Hessian of a logistic regression at theta.
    eta = Z @ theta
    ll = float(np.sum(m * eta - log1pexp(eta)))
    prob = expit(eta)
    grad = Z.T @ (m - prob)
    hess = -(Z * (prob * (1.0 - prob))[:, None]).T @ Z
    return ll, grad, hess


def _proportional_odds_parts(alpha, beta, W, y, J):
    """Log-likelihood, score and Hessian in the natural (alpha, beta)
    parameterization.  Returns (-inf, None, None) when any record's category
    probability is nonpositive, which the line search treats as a rejection.
    """
    K = J - 1
    n, q = W.shape
    eta = W @ beta
    Z = alpha[None, :] - eta[:, None]

    ll = 0.0
    g_alpha = np.zeros(K)
    g_beta = np.zeros(q)
    Haa = np.zeros((K, K))
    Hab = np.zeros((K, q))
    Hbb = np.zeros((q, q))

    for k in range(1, J + 1):
        sel = y == k
        nk = int(np.count_nonzero(sel))
        if nk == 0:
            continue
        Wk = W[sel]
        zh = Z[sel, k - 1] if k <= K else np.full(nk, np.inf)
        zl = Z[sel, k - 2] if k >= 2 else np.full(nk, -np.inf)
        a, ac = expit(zh), expit(-zh)
        b, bc = expit(zl), expit(-zl)
        # F(zh) - F(zl) in cancellation-free product form
        pi = bc * a * (-np.expm1(zl - zh))
        if np.any(pi <= 0.0):
            return -np.inf, None, None
        ll += float(np.sum(np.log(pi)))

        # logistic density values f = F(1-F) and their z-derivatives
        fa = a * ac
        fb = b * bc
        fpa = fa * (ac - a)
        fpb = fb * (bc - b)
        pi2 = pi * pi

        g_beta += Wk.T @ (-(fa - fb) / pi)
        Hbb += Wk.T @ ((((fpa - fpb) * pi - (fa - fb) ** 2) / pi2)[:, None] * Wk)
        if k <= K:
            g_alpha[k - 1] += float(np.sum(fa / pi))
            Haa[k - 1, k - 1] += float(np.sum((fpa * pi - fa * fa) / pi2))
            Hab[k - 1] += Wk.T @ ((-fpa * pi + fa * (fa - fb)) / pi2)
        if k >= 2:
            g_alpha[k - 2] -= float(np.sum(fb / pi))
            Haa[k - 2, k - 2] += float(np.sum((-fpb * pi - fb * fb) / pi2))
            Hab[k - 2] += Wk.T @ ((fpb * pi - fb * (fa - fb)) / pi2)
        if 2 <= k <= K:
            off = float(np.sum(fa * fb / pi2))
            Haa[k - 1, k - 2] += off
            Haa[k - 2, k - 1] += off

    grad = np.concatenate([g_alpha, g_beta])
    hess = np.empty((K + q, K + q))
    hess[:K, :K] = Haa
    hess[:K, K:] = Hab
    hess[K:, :K] = Hab.T
    hess[K:, K:] = Hbb
    return ll, grad, hess


# ----------------------------------------------------------------------
# unconstrained threshold parameterization
#
# phi = (alpha_1, log(alpha_2 - alpha_1), ..., log(alpha_{K} - alpha_{K-1}),
#        betaX, betaM, betaXM, betaC...)

def _alpha_from_phi(phi, K):
    if K == 1:
        return phi[:1].copy()
    return phi[0] + np.concatenate([[0.0], np.cumsum(np.exp(phi[1:K]))])


def _phi_jacobian(phi, K):
    # d(alpha, beta) / d(phi); lower-triangular in the threshold block.
    q = phi.size - K
    jac = np.zeros((K + q, K + q))
    jac[0:K, 0] = 1.0
    for pos in range(1, K):
        jac[pos:K, pos] = np.exp(phi[pos])
    jac[K:, K:] = np.eye(q)
    return jac


def _outcome_parts_phi(phi, K, W, y, J):
    alpha = _alpha_from_phi(phi, K)
    beta = phi[K:]
    ll, grad, hess = _proportional_odds_parts(alpha, beta, W, y, J)
    if grad is None:
        return ll, None, None
    jac = _phi_jacobian(phi, K)
    grad_phi = jac.T @ grad
    hess_phi = jac.T @ hess @ jac
    # curvature of alpha in the gap parameters: d2 alpha_j / d delta_k^2 = gap_k
    for pos in range(1, K):
        hess_phi[pos, pos] += np.exp(phi[pos]) * float(np.sum(grad[pos:K]))
    return ll, grad_phi, hess_phi


# ----------------------------------------------------------------------
# Newton engine

def _newton_maximize(fun, theta0, what):
    theta = np.asarray(theta0, dtype=float).copy()
    ll, grad, hess = fun(theta)
    if not np.isfinite(ll):
        raise ConvergenceError(f"{what}: log-likelihood not finite at the starting values")

    iterations = 0
    flat = False
    for iterations in range(1, _MAX_ITERATIONS + 1):
        if float(np.max(np.abs(grad))) <= GRADIENT_TOL:
            return theta, ll, grad, hess, iterations - 1, True

        direction = _ascent_direction(grad, hess)
        step = 1.0
        accepted = None
        for _ in range(_MAX_HALVINGS + 1):
            cand = theta + step * direction
            cll, cgrad, chess = fun(cand)
            if np.isfinite(cll) and cll > ll:
                accepted = (cand, cll, cgrad, chess)
                break
            step *= 0.5

        if accepted is None:
            flat = True  # the likelihood can no longer visibly improve
            break
        previous_ll = ll
        theta, ll, grad, hess = accepted
        if float(np.max(np.abs(theta))) > _DIVERGENCE_NORM:
            raise SeparationError(
                f"{what}: parameter norm exceeded {_DIVERGENCE_NORM:g} while the "
                "log-likelihood is still improving; the data are likely completely separated"
            )
        if abs(ll - previous_ll) <= _LOGLIK_RTOL * (abs(ll) + 1.0):
            flat = True
            break

    # Polish: once the likelihood is flat to double precision, unguarded
    # Newton steps still contract the gradient quadratically towards its
    # floor, which the step-halving search cannot do (every candidate looks
    # like "no improvement").
    gnorm = float(np.max(np.abs(grad)))
    if flat:
        for _ in range(10):
            if gnorm <= GRADIENT_TOL:
                break
            try:
                direction = np.linalg.solve(-hess, grad)
            except np.linalg.LinAlgError:
                break
            cll, cgrad, chess = fun(theta + direction)
            if cgrad is None or not np.isfinite(cll) or not np.all(np.isfinite(cgrad)):
                break
            cnorm = float(np.max(np.abs(cgrad)))
            if cnorm >= gnorm:
                break
            theta, ll, grad, hess, gnorm = theta + direction, cll, cgrad, chess, cnorm

    if gnorm <= GRADIENT_TOL or flat:
        return theta, ll, grad, hess, iterations, True
    raise ConvergenceError(
        f"{what}: no convergence after {_MAX_ITERATIONS} iterations "
        f"(max |gradient| = {gnorm:.3e})"
    )


def _ascent_direction(grad, hess):
    try:
        direction = np.linalg.solve(-hess, grad)
        if grad @ direction > 0.0 and np.all(np.isfinite(direction)):
            return direction
    except np.linalg.LinAlgError:
        pass
    # Hessian not negative definite here: fall back to a damped gradient step.
    return grad / (float(np.max(np.abs(np.diag(hess)))) + 1.0)


def _standard_errors(information):
    try:
        cov = np.linalg.inv(information)
    except np.linalg.LinAlgError:
        return np.full(information.shape[0], np.nan)
    diag = np.diag(cov)
    if np.any(diag <= 0.0) or not np.all(np.isfinite(diag)):
        return np.full(diag.size, np.nan)
    return np.sqrt(diag)


def _delta_method_errors(jac, information_phi):
    try:
        cov_phi = np.linalg.inv(information_phi)
    except np.linalg.LinAlgError:
        return np.full(information_phi.shape[0], np.nan)
    cov = jac @ cov_phi @ jac.T
    diag = np.diag(cov)
    if np.any(diag <= 0.0) or not np.all(np.isfinite(diag)):
        return np.full(diag.size, np.nan)
    return np.sqrt(diag)
