"""Risk estimation and the bound-side calculus.

This module owns the Monte-Carlo / exact-summation excess-risk estimators,
the compressibility estimator (how much excess risk the best low-dimensional
predictor must eat after a random compression), the three-term risk bracket,
the optimal-target-dimension rules, the sketched least-squares inequality,
and local Rademacher complexity tools.

Distributions are duck-typed.  An object usable here provides:

* ``d`` — ambient dimension;
* ``loss_spec`` — the LossSpec its labels live under;
* ``sample(n, seed) -> (X, y)`` — i.i.d. draws, deterministic per seed;
* ``bayes_predict(X)`` — the risk-minimizing predictor, vectorized;

and optionally:

* ``atoms() -> (points, probs, label_values, label_probs)`` for finite
  support, unlocking exact summation (std_error 0);
* ``eta(X)`` — P(Y=+1 | X) for continuous classification laws, unlocking the
  low-variance pointwise estimator E[|2 eta - 1| ; predictor != bayes].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hypotheses import (
    erm_exact_classification,
    erm_regression,
    erm_surrogate_classification,
)
from .losses import bayes_action, eval_loss
from .projections import ProjectionMap, apply, sample_projection
from .seeds import derive_seed

__all__ = [
    "COVERING_CONSTANT",
    "RiskEstimate",
    "RiskBracket",
    "log_plus",
    "estimate_excess_risk",
    "estimate_compressibility",
    "ensemble_compressibility_bound",
    "risk_bound_bracket",
    "optimal_k_classification",
    "rate_exponent_classification",
    "optimal_k_regression",
    "sketched_ols_ratio",
    "rademacher_fixed_point",
    "empirical_rademacher",
]

#: Covering-number constant for the sign-linear and clipped-linear classes;
#: both have pseudo-dimension k + 1, giving this value in the local
#: complexity bound used by rademacher_fixed_point.
COVERING_CONSTANT = 4.0


@dataclass(frozen=True)
class RiskEstimate:
    """A risk (or excess-risk) value with its sampling uncertainty.

    ``exact`` marks values computed by finite summation, which carry no
    Monte-Carlo error at all.
    """

    value: float
    std_error: float
    n_samples: int
    exact: bool = False

    def __post_init__(self) -> None:
        if self.std_error < 0:
            raise ValueError("std_error must be nonnegative")
        if self.exact and self.std_error != 0.0:
            raise ValueError("exact estimates carry std_error 0")


@dataclass(frozen=True)
class RiskBracket:
    """The three-term excess-risk bracket, constant-free.

    total = compressibility_term + statistical_term + ensemble_term, where the
    statistical term is ((k log_+(n) + log_+(1/delta)) / n)^(1/(2-alpha)) and
    the ensemble term is log_+(1/delta) / m.  Used for shape comparisons only;
    the multiplicative constant in front is unknown.
    """

    compressibility_term: float
    statistical_term: float
    ensemble_term: float
    total: float
    n: int
    k: int
    m: int
    delta: float
    alpha: float


def log_plus(x):
    """max(ln x, 1) for positive x; vectorized, scalar in gives scalar out."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("log_plus requires strictly positive input")
    out = np.maximum(np.log(arr), 1.0)
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# excess risk estimation
# ---------------------------------------------------------------------------


def _mc_estimate(values: np.ndarray) -> RiskEstimate:
    n = values.size
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return RiskEstimate(value=float(np.mean(values)), std_error=se, n_samples=n, exact=False)


def _atom_conditional_risks(loss, predictions, label_values, label_probs):
    """Per-atom expected loss of the given per-atom predictions."""
    losses = eval_loss(loss, np.asarray(predictions, float)[:, None], label_values)
    return np.sum(np.asarray(label_probs, float) * losses, axis=1)


def estimate_excess_risk(predictor, dist, n_test: int = 100_000, seed: int = 0) -> RiskEstimate:
    """Excess risk of ``predictor`` (a callable X -> predictions) under ``dist``.

    Finite-support distributions are summed exactly.  Continuous
    classification laws use the pointwise form E[|2 eta(X) - 1| ; predictor
    disagrees with Bayes], whose terms are nonnegative and low-variance.
    Continuous regression laws use paired loss differences on a shared draw.
    The draw is a pure function of (dist, n_test, seed), so two estimates with
    equal arguments share their test sample.
    """
    loss = dist.loss_spec
    if hasattr(dist, "atoms"):
        points, probs, label_values, label_probs = dist.atoms()
        pred_risk = _atom_conditional_risks(loss, predictor(points), label_values, label_probs)
        bayes = [
            bayes_action(loss, label_values[i], label_probs[i]) for i in range(len(probs))
        ]
        bayes_risk = _atom_conditional_risks(loss, np.array(bayes), label_values, label_probs)
        value = float(np.sum(np.asarray(probs, float) * (pred_risk - bayes_risk)))
        return RiskEstimate(value=value, std_error=0.0, n_samples=len(probs), exact=True)

    if loss.kind == "zero_one" and hasattr(dist, "eta"):
        X, _ = dist.sample(n_test, seed)
        weight = np.abs(2.0 * dist.eta(X) - 1.0)
        disagree = predictor(X) != dist.bayes_predict(X)
        return _mc_estimate(weight * disagree)

    X, y = dist.sample(n_test, seed)
    diffs = eval_loss(loss, predictor(X), y) - eval_loss(loss, dist.bayes_predict(X), y)
    return _mc_estimate(diffs)


def _fit_compressed(U, y, loss, solver: str, iters: int):
    if loss.kind == "zero_one":
        if solver == "exact":
            return erm_exact_classification(U, y)
        return erm_surrogate_classification(U, y, iters=iters)
    return erm_regression(U, y, loss, iters=iters)


def estimate_compressibility(
    dist,
    family: str,
    k: int,
    reps: int = 32,
    pop_n: int = 2000,
    solver: str = "surrogate",
    seed: int = 0,
    iters: int = 2000,
) -> RiskEstimate:
    """Average best-achievable excess risk after a random k-dimensional compression.

    The inner infimum over the compressed class is uncomputable exactly; the
    proxy is an ERM fit on a fresh population-scale sample (``pop_n`` points)
    compressed by each drawn map, evaluated independently.  The returned
    standard error is across the ``reps`` map draws, which is the genuine
    randomness being averaged.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    loss = dist.loss_spec
    values = np.empty(reps)
    for rep in range(reps):
        a_seed = derive_seed(seed, 3 * rep)
        data_seed = derive_seed(seed, 3 * rep + 1)
        eval_seed = derive_seed(seed, 3 * rep + 2)
        X, y = dist.sample(pop_n, data_seed)
        pmap = sample_projection(family, k, dist.d, a_seed)
        report = _fit_compressed(apply(pmap, X), y, loss, solver, iters)

        def compressed_predictor(Xq, _pmap=pmap, _h=report.hypothesis):
            return _h.predict(apply(_pmap, Xq))

        values[rep] = estimate_excess_risk(
            compressed_predictor, dist, n_test=pop_n, seed=eval_seed
        ).value
    se = float(np.std(values, ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return RiskEstimate(value=float(np.mean(values)), std_error=se, n_samples=reps, exact=False)


# ---------------------------------------------------------------------------
# bound-side calculus
# ---------------------------------------------------------------------------


def ensemble_compressibility_bound(psi: float, B: float, m: int, delta: float) -> float:
    """High-probability bound 2 psi + 3 B ln(1/delta) / (2 m) on the average
    member approximation error of an m-map ensemble."""
    if psi < 0:
        raise ValueError("psi must be nonnegative")
    if B < 1:
        raise ValueError("B must be >= 1")
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return 2.0 * psi + 3.0 * B * math.log(1.0 / delta) / (2.0 * m)


def risk_bound_bracket(
    n: int, k: int, m: int, delta: float, alpha: float, psi_hat: float
) -> RiskBracket:
    """Assemble the constant-free three-term excess-risk bracket."""
    if n < 1 or k < 1 or m < 1:
        raise ValueError("n, k, m must be >= 1")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    if psi_hat < 0:
        raise ValueError("psi_hat must be nonnegative")
    log_conf = log_plus(1.0 / delta)
    statistical = ((k * log_plus(n) + log_conf) / n) ** (1.0 / (2.0 - alpha))
    ensemble = log_conf / m
    return RiskBracket(
        compressibility_term=float(psi_hat),
        statistical_term=float(statistical),
        ensemble_term=float(ensemble),
        total=float(psi_hat + statistical + ensemble),
        n=n,
        k=k,
        m=m,
        delta=delta,
        alpha=alpha,
    )


def _check_exponents(gamma: float, rho: float, alpha: float) -> None:
    if gamma <= 0 or rho <= 0:
        raise ValueError("gamma and rho must be positive")
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")


def optimal_k_classification(n: int, gamma: float, rho: float, alpha: float) -> int:
    """Rate-optimal target dimension for margin/moment classification families."""
    _check_exponents(gamma, rho, alpha)
    if n < 1:
        raise ValueError("n must be >= 1")
    denom = 2.0 * (gamma + rho) + gamma * rho * (2.0 - alpha)
    exponent = 2.0 * (gamma + rho) / denom
    return int(math.ceil((n / log_plus(n)) ** exponent))


def rate_exponent_classification(gamma: float, rho: float, alpha: float) -> float:
    """Exponent of the (log n / n) excess-risk rate at the optimal dimension."""
    _check_exponents(gamma, rho, alpha)
    return gamma * rho / (2.0 * (gamma + rho) + gamma * rho * (2.0 - alpha))


def optimal_k_regression(n: int) -> int:
    """Rate-optimal target dimension ceil(log_+ n) under spectral decay."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return int(math.ceil(log_plus(n)))


# ---------------------------------------------------------------------------
# sketched least squares
# ---------------------------------------------------------------------------


def sketched_ols_ratio(Xmat, w_diamond, pmap: ProjectionMap, r: int) -> dict:
    """Compare the sketched least-squares residual to its spectral-tail bound.

    ``Xmat`` is a d x q design, ``w_diamond`` the reference d-vector, and
    ``pmap`` a k x d compression.  lhs is the best achievable squared
    fitting error min_w || w^T A X - w_diamond^T X ||^2; rhs is
    18 ||w_diamond||^2 times the eigenvalue tail sum_{j >= r+1} lambda_j(X X^T).
    An rhs that vanishes (rank <= r designs) reports ratio 0 when the lhs
    vanishes too, and infinity otherwise.
    """
    Xmat = np.asarray(Xmat, dtype=float)
    w_diamond = np.asarray(w_diamond, dtype=float)
    if Xmat.ndim != 2:
        raise ValueError("Xmat must be d x q")
    d, q = Xmat.shape
    if w_diamond.shape != (d,):
        raise ValueError("w_diamond must be a d-vector")
    if pmap.d != d:
        raise ValueError("projection ambient dimension mismatch")
    if not 0 <= r < min(q, pmap.k):
        raise ValueError(f"need 0 <= r < min(q, k) = {min(q, pmap.k)}, got r={r}")

    sketched = pmap.matrix @ Xmat  # k x q
    target = w_diamond @ Xmat  # q
    w_hat, *_ = np.linalg.lstsq(sketched.T, target, rcond=None)
    lhs = float(np.sum((sketched.T @ w_hat - target) ** 2))

    eigs = np.linalg.eigvalsh(Xmat @ Xmat.T)[::-1]
    tail = float(np.sum(np.clip(eigs[r:], 0.0, None)))
    rhs = 18.0 * float(w_diamond @ w_diamond) * tail

    total = float(np.sum(np.clip(eigs, 0.0, None)))
    if rhs <= 1e-10 * max(1.0, 18.0 * float(w_diamond @ w_diamond) * total):
        scale = float(target @ target) + 1.0
        ratio = 0.0 if lhs <= 1e-8 * scale else math.inf
    else:
        ratio = lhs / rhs
    return {"lhs": lhs, "rhs": rhs, "ratio": ratio}


# ---------------------------------------------------------------------------
# local Rademacher complexity
# ---------------------------------------------------------------------------


class NoFixedPointError(RuntimeError):
    """Raised when the fixed-point bracket cannot be established."""


def rademacher_fixed_point(
    n: int, k: int, c_cn: float = COVERING_CONSTANT, lambda_lip: float = 1.0, beta: float = 1.0
) -> float:
    """Fixed point of the sub-root local complexity bound.

    Solves phi(r) = r for phi(r) = 2 sqrt(c_cn k r / n) *
    sqrt(log_+(lambda_lip beta n / (k sqrt(r)))) by bisection — phi(r)/sqrt(r)
    is non-increasing, so the crossing is unique — then polishes with
    fixed-point iteration (phi is a local contraction).  The result is checked
    against the closed-form ceiling 6 c_cn k log_+(lambda_lip beta n) / n.
    """
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    if c_cn <= 0 or lambda_lip <= 0 or beta <= 0:
        raise ValueError("c_cn, lambda_lip, beta must be positive")

    scale = lambda_lip * beta * n / k

    def phi(r: float) -> float:
        return 2.0 * math.sqrt(c_cn * k * r / n) * math.sqrt(log_plus(scale / math.sqrt(r)))

    hi = max(1.0, 4.0 * c_cn * k / n)
    for _ in range(200):
        if phi(hi) <= hi:
            break
        hi *= 2.0
    else:
        raise NoFixedPointError("could not bracket the fixed point from above")
    lo = min(1e-12, hi / 2.0)
    for _ in range(2000):
        if phi(lo) > lo:
            break
        lo /= 2.0
    else:
        raise NoFixedPointError("could not bracket the fixed point from below")

    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if phi(mid) > mid:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    for _ in range(60):
        root = phi(root)

    if abs(phi(root) - root) > 1e-9:
        raise NoFixedPointError("fixed-point polish failed to converge")
    ceiling = 6.0 * c_cn * k * log_plus(lambda_lip * beta * n) / n
    if root > ceiling * (1.0 + 1e-9):
        raise NoFixedPointError(
            f"fixed point {root:.6g} exceeds its closed-form ceiling {ceiling:.6g}"
        )
    return root


def empirical_rademacher(values, mc_draws: int = 10_000, seed: int = 0) -> RiskEstimate:
    """Empirical Rademacher complexity of a finite function class.

    ``values`` is an F x n matrix of function evaluations on the sample.  For
    n <= 16 all 2^n sign vectors are enumerated and the result is exact;
    otherwise ``mc_draws`` i.i.d. sign vectors give a Monte-Carlo estimate
    with a standard error.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[0] < 1:
        raise ValueError("values must be a nonempty F x n matrix")
    n = values.shape[1]
    if n <= 16:
        count = 1 << n
        bits = (np.arange(count)[:, None] >> np.arange(n)) & 1
        signs = 2.0 * bits - 1.0  # 2^n x n
        sups = np.max(values @ signs.T, axis=0) / n
        return RiskEstimate(
            value=float(np.mean(sups)), std_error=0.0, n_samples=count, exact=True
        )
    rng = np.random.default_rng(seed)
    signs = 2.0 * rng.integers(0, 2, size=(mc_draws, n)) - 1.0
    sups = np.max(values @ signs.T, axis=0) / n
    return _mc_estimate(sups)
