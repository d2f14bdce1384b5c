"""Bounded loss functions and their certified constants.

Three losses are supported, each with the constants the rest of the library
relies on:

============  =========  ==========  ===================  =============  ========
kind          bound      lipschitz   curvature            quasi_convex   combiner
============  =========  ==========  ===================  =============  ========
zero_one      1          1/2         0                    2              mode
squared       4*beta^2   4*beta      2                    1              mean
kl            beta+ln 2  1           e^b/(1+e^b)^2, b=beta 1             mean
============  =========  ==========  ===================  =============  ========

``bound`` is the largest attainable loss value, ``lipschitz`` the Lipschitz
constant of v -> loss(v, y) on the prediction domain, ``curvature`` the
strong mid-point convexity constant (0 when the loss has none), and
``quasi_convexity`` the factor by which combining predictions can inflate the
average member excess risk.  ``combiner`` names the ensemble rule the loss
calls for: majority vote for zero_one, arithmetic mean for the others.

Domains: zero_one takes predictions and labels in {-1,+1}; squared takes both
in [-beta, beta]; kl takes a prediction in [-beta, beta] (a logit) and a label
in {0, 1}.  The kl loss is evaluated in the numerically stable logit form
log(1 + exp(-(2y-1) v)), exact at y in {0, 1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LOSS_KINDS",
    "LossSpec",
    "make_loss",
    "eval_loss",
    "bernstein_constant",
    "bayes_action",
]

LOSS_KINDS = ("zero_one", "squared", "kl")

#: absolute slack allowed on [-beta, beta] domain checks, to admit predictions
#: that picked up a rounding ulp (e.g. a clipped value averaged m times).
_DOMAIN_TOL = 1e-9


class InvalidBetaError(ValueError):
    """Raised when a range bound beta is missing, nonpositive, or non-finite."""


class LossDomainError(ValueError):
    """Raised when eval_loss sees a prediction or label outside the loss domain."""


class UndefinedBernsteinError(ValueError):
    """Raised for losses with no strong convexity (curvature 0)."""


@dataclass(frozen=True)
class LossSpec:
    kind: str
    beta: float
    bound: float
    lipschitz: float
    curvature: float
    quasi_convexity: float
    combiner: str


def make_loss(kind: str, beta: float = 1.0) -> LossSpec:
    """Build the LossSpec for ``kind``, populating every constant.

    ``beta`` is the prediction-range radius for squared and kl; it is ignored
    for zero_one (whose prediction space is {-1,+1}).
    """
    if kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss kind {kind!r}")
    if kind == "zero_one":
        return LossSpec(
            kind="zero_one",
            beta=1.0,
            bound=1.0,
            lipschitz=0.5,
            curvature=0.0,
            quasi_convexity=2.0,
            combiner="mode",
        )
    beta = float(beta)
    if not np.isfinite(beta) or beta <= 0:
        raise InvalidBetaError(f"beta must be a positive finite real, got {beta!r}")
    if kind == "squared":
        return LossSpec(
            kind="squared",
            beta=beta,
            bound=4.0 * beta**2,
            lipschitz=4.0 * beta,
            curvature=2.0,
            quasi_convexity=1.0,
            combiner="mean",
        )
    # kl: prediction is a logit in [-beta, beta]; curvature is the minimum of
    # the second derivative e^v/(1+e^v)^2 over the interval, attained at |v|=beta.
    # (1+e^beta)^2 overflows near beta ~ 354; switch to the algebraically equal
    # e^-beta form there, where it is the numerically safe one.
    if beta <= 300.0:
        curvature = float(np.exp(beta) / (1.0 + np.exp(beta)) ** 2)
    else:
        curvature = float(np.exp(-beta) / (1.0 + np.exp(-beta)) ** 2)
    return LossSpec(
        kind="kl",
        beta=beta,
        bound=beta + np.log(2.0),
        lipschitz=1.0,
        curvature=curvature,
        quasi_convexity=1.0,
        combiner="mean",
    )


def _check_range(name: str, arr: np.ndarray, beta: float) -> None:
    if arr.size and (np.min(arr) < -beta - _DOMAIN_TOL or np.max(arr) > beta + _DOMAIN_TOL):
        raise LossDomainError(f"{name} outside [-{beta}, {beta}]")


def _check_binary(name: str, arr: np.ndarray, values: tuple) -> None:
    ok = np.zeros(arr.shape, dtype=bool)
    for val in values:
        ok |= arr == val
    if not np.all(ok):
        raise LossDomainError(f"{name} must take values in {values}")


def eval_loss(loss: LossSpec, v, y):
    """Evaluate the loss at prediction(s) v and label(s) y; vectorized.

    Inputs broadcast; scalars in give a scalar out.  Out-of-domain inputs
    raise LossDomainError rather than being thresholded silently.
    """
    v = np.asarray(v, dtype=float)
    y = np.asarray(y, dtype=float)
    if loss.kind == "zero_one":
        _check_binary("predictions", v, (-1.0, 1.0))
        _check_binary("labels", y, (-1.0, 1.0))
        out = 0.5 * (1.0 - v * y)
    elif loss.kind == "squared":
        _check_range("predictions", v, loss.beta)
        _check_range("labels", y, loss.beta)
        out = (v - y) ** 2
    else:  # kl
        _check_range("predictions", v, loss.beta)
        _check_binary("labels", y, (0.0, 1.0))
        out = np.logaddexp(0.0, -(2.0 * y - 1.0) * v)
    if out.ndim == 0:
        return float(out)
    return out


def bernstein_constant(loss: LossSpec) -> float:
    """The constant 4 * lipschitz^2 / curvature relating second moments to
    first moments of centered excess losses.

    Defined only for losses with strictly positive curvature.
    """
    if loss.curvature <= 0.0:
        raise UndefinedBernsteinError(f"loss {loss.kind!r} has no strong convexity")
    return 4.0 * loss.lipschitz**2 / loss.curvature


def bayes_action(loss: LossSpec, label_values, label_probs) -> float:
    """Risk-minimizing prediction for a finite conditional label law.

    ``label_values`` and ``label_probs`` describe the conditional distribution
    of the label at one point.  zero_one: sign of 2*P(y=+1) - 1, ties to +1.
    squared: conditional mean clipped to [-beta, beta].  kl: logit of P(y=1)
    clipped to [-beta, beta] (so deterministic labels map to the endpoints).
    """
    values = np.asarray(label_values, dtype=float)
    probs = np.asarray(label_probs, dtype=float)
    if values.shape != probs.shape:
        raise ValueError("label_values and label_probs must have matching shapes")
    if loss.kind == "zero_one":
        eta = float(np.sum(probs[values == 1.0]))
        return 1.0 if 2.0 * eta - 1.0 >= 0.0 else -1.0
    if loss.kind == "squared":
        return float(np.clip(np.sum(probs * values), -loss.beta, loss.beta))
    eta = float(np.sum(probs[values == 1.0]))
    if eta <= 0.0:
        return -loss.beta
    if eta >= 1.0:
        return loss.beta
    return float(np.clip(np.log(eta / (1.0 - eta)), -loss.beta, loss.beta))
