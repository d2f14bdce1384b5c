"""Low-dimensional linear predictors and their empirical risk minimizers.

Two hypothesis classes over compressed inputs u in R^k:

* sign-linear classifiers  u -> sign(w.u - t), with sign(0) = +1;
* clipped-linear regressors u -> clip(w.u - t, -beta, beta).

Three solvers:

* ``erm_exact_classification`` — a combinatorial enumerator that returns a
  certified global minimizer of the empirical zero-one risk.  Every labeling a
  hyperplane can realize on n points is realized by some hyperplane through at
  most k of the points (completed with coordinate directions when fewer points
  pin it down), tilted so the touched points land on their labeled sides.
  Guarded to k <= 3 and n <= 200, where the enumeration is exhaustive and fast.
* ``erm_surrogate_classification`` — full-batch gradient descent on the
  logistic surrogate with a backtracking step size, reporting the zero-one
  risk of the result, for scales where enumeration is infeasible.
* ``erm_regression`` — subgradient descent on the clipped-linear empirical
  risk (squared or kl), initialized at the ordinary least squares solution for
  the squared loss.  The clip's subgradient is the identity inside
  [-beta, beta] and 0 outside.

Every report's ``empirical_risk`` is recomputed from the returned hypothesis
on the training pairs, never taken from solver internals.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, islice

import numpy as np
from scipy.special import expit

from .losses import LossSpec, eval_loss

__all__ = [
    "LinearHypothesis",
    "ErmReport",
    "LrSchedule",
    "ScaleGuardError",
    "erm_exact_classification",
    "erm_surrogate_classification",
    "erm_regression",
    "ols_init",
]

EXACT_MAX_K = 3
EXACT_MAX_N = 200


class ScaleGuardError(ValueError):
    """Raised when the exact enumerator is asked to exceed its size limits."""


@dataclass(frozen=True, eq=False)
class LinearHypothesis:
    """A linear rule u -> w.u - t, rendered as a sign or clipped to a range."""

    w: np.ndarray
    t: float
    mode: str  # "sign" or "clip"
    beta: float = 1.0

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=float)
        object.__setattr__(self, "w", w)
        if w.ndim != 1:
            raise ValueError("w must be a 1-d vector")
        if not (np.all(np.isfinite(w)) and np.isfinite(self.t)):
            raise ValueError("hypothesis parameters must be finite")
        if self.mode not in ("sign", "clip"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "clip" and self.beta <= 0:
            raise ValueError("clip mode needs beta > 0")

    def raw(self, U: np.ndarray) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        if U.ndim != 2 or U.shape[1] != self.w.shape[0]:
            raise ValueError(f"expected n x {self.w.shape[0]} input, got shape {U.shape}")
        return U @ self.w - self.t

    def predict(self, U: np.ndarray) -> np.ndarray:
        s = self.raw(U)
        if self.mode == "sign":
            return np.where(s >= 0.0, 1.0, -1.0)
        return np.clip(s, -self.beta, self.beta)


@dataclass(frozen=True, eq=False)
class ErmReport:
    """Outcome of one ERM solve.

    ``surrogate_gap`` is the achieved empirical risk minus the best known
    lower bound (the exact optimum when the enumerator is feasible); None when
    no lower bound is available.  ``objective_checkpoints`` records the
    surrogate objective along the descent for monotonicity diagnostics.
    """

    hypothesis: LinearHypothesis
    empirical_risk: float
    solver: str  # "exact" or "surrogate"
    surrogate_gap: float | None = None
    objective_checkpoints: tuple | None = None


@dataclass(frozen=True)
class LrSchedule:
    """Backtracking step-size policy for the descent solvers."""

    init: float = 1.0
    grow: float = 1.3
    shrink: float = 0.5
    max_backtracks: int = 40


def _validate_classification(U, y):
    U = np.asarray(U, dtype=float)
    if U.ndim != 2:
        raise ValueError("U must be an n x k array")
    y = np.asarray(y, dtype=float)
    if y.shape != (U.shape[0],):
        raise ValueError("y must have one label per row of U")
    if not np.all((y == 1.0) | (y == -1.0)):
        raise ValueError("labels must be in {-1, +1}")
    return U, y


def _zero_one_risk(h: LinearHypothesis, U, y) -> float:
    return float(np.mean(h.predict(U) != y))


# ---------------------------------------------------------------------------
# exact zero-one ERM by hyperplane enumeration
# ---------------------------------------------------------------------------
#
# A sign rule u -> sign(w.u - t) is the sign of v.z for the lifted point
# z = (u, -1) and v = (w, t), so the search runs over directions v in R^(k+1).
# The labelings realizable on n points are the sign patterns of the cells cut
# out by the hyperplanes {v : v.z_i = 0} (refined by the coordinate planes so
# every cell is a pointed cone).  Each cell has an extreme ray lying on k
# independent constraints, and the cell's own labeling is recovered from that
# ray by tilting it so the touched points fall on their labeled sides.  So it
# suffices to enumerate, for every subset of min(k, n) points completed with
# coordinate directions, the ray v solving the subset's equations, plus the
# tilted variants v + tau*a where a restores the subset's labels and tau is
# small enough to leave every off-subset point on its current side.

_EXACT_CHUNK = 8192


def _batched_null_vectors(blocks: np.ndarray) -> np.ndarray:
    """One null vector per (k, k+1) constraint block, batched over axis 0.

    Degenerate blocks (rank < k) yield the zero vector, which callers drop:
    every labeling reachable through them is reachable through a full-rank
    block in the same enumeration.
    """
    _, k, k1 = blocks.shape
    if k1 == 2:
        row = blocks[:, 0, :]
        return np.stack([-row[:, 1], row[:, 0]], axis=1)
    if k1 == 3:
        return np.cross(blocks[:, 0, :], blocks[:, 1, :])
    # k1 == 4: generalized cross product via signed 3x3 minors.
    out = np.empty((blocks.shape[0], 4))
    cols = np.arange(4)
    sign = 1.0
    for i in range(4):
        out[:, i] = sign * np.linalg.det(blocks[:, :, cols != i])
        sign = -sign
    return out


def _index_chunks(n: int, j: int, chunk: int):
    """Yield (c, j) int arrays covering all j-subsets of range(n), c <= chunk."""
    it = combinations(range(n), j)
    while True:
        block = list(islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=int).reshape(len(block), j)


def erm_exact_classification(U, y) -> ErmReport:
    """Global minimizer of the empirical zero-one risk over sign-linear rules.

    Enumerates a hyperplane through every subset of up to k points (completed
    with coordinate directions when fewer points pin it down), in both
    orientations, both as-is and tilted so the spanning points land on their
    labeled sides; the two constant classifiers seed the search.  Every
    candidate is scored as the concrete hypothesis it is, and the best one is
    returned with its risk recomputed from scratch.  Scale-guarded to k <= 3,
    n <= 200.
    """
    U, y = _validate_classification(U, y)
    n, k = U.shape
    if k > EXACT_MAX_K or n > EXACT_MAX_N:
        raise ScaleGuardError(
            f"exact enumeration limited to k <= {EXACT_MAX_K} and n <= {EXACT_MAX_N}, "
            f"got k={k}, n={n}"
        )
    if k < 1:
        raise ValueError("need k >= 1")

    y_pos = y == 1.0
    n_pos = int(np.count_nonzero(y_pos))
    # Constant classifiers: v = (0, ..., 0, -1) predicts +1 everywhere.
    best_errors = n - n_pos
    best_v = np.zeros(k + 1)
    best_v[k] = -1.0
    if n_pos < best_errors:
        best_errors = n_pos
        best_v = -best_v

    Z = np.concatenate([U, -np.ones((n, 1))], axis=1)
    ZT = Z.T
    eye = np.eye(k + 1)
    rows_of = np.arange

    for j in range(min(k, n), -1, -1):
        if best_errors == 0:
            break
        for pads in combinations(range(k + 1), k - j):
            if best_errors == 0:
                break
            for idx in _index_chunks(n, j, _EXACT_CHUNK):
                c = idx.shape[0]
                P = Z[idx]  # (c, j, k+1)
                blocks = np.empty((c, k, k + 1))
                blocks[:, :j, :] = P
                blocks[:, j:, :] = eye[list(pads)]
                V = _batched_null_vectors(blocks)
                norms = np.linalg.norm(V, axis=1)
                keep = np.isfinite(norms) & (norms > 0.0)
                if not np.any(keep):
                    continue
                V = V[keep] / norms[keep, None]
                idx_k = idx[keep]
                P = P[keep]
                c = V.shape[0]

                if j:
                    # Min-norm tilt a with a.z_i = y_i on the subset; a tiny
                    # ridge keeps duplicate-point Grams solvable (the tilt's
                    # magnitude is not load-bearing, only its signs are).
                    G = P @ P.transpose(0, 2, 1)
                    ridge = 1e-12 * np.einsum("cjj->c", G)
                    G[:, rows_of(j), rows_of(j)] += ridge[:, None]
                    coef = np.linalg.solve(G, y[idx_k][..., None])[..., 0]
                    A = np.einsum("cjd,cj->cd", P, coef)
                else:
                    A = np.zeros_like(V)

                S = V @ ZT
                Sa = A @ ZT
                # Largest tilt that cannot flip any point clearly off the ray.
                prot = np.abs(S) > 1e-12 * np.max(np.abs(S), axis=1, keepdims=True)
                if j:
                    prot[rows_of(c)[:, None], idx_k] = False
                ratio = np.where(
                    prot, np.abs(S) / np.maximum(np.abs(Sa), 1e-300), np.inf
                )
                tau = 0.5 * np.min(ratio, axis=1)
                tau = np.where(np.isfinite(tau), np.minimum(tau, 1e12), 1.0)
                M = tau[:, None] * Sa

                for sign in (1.0, -1.0):
                    base = S if sign > 0 else -S
                    for tilted in (True, False):
                        scores = base + M if tilted else base
                        errs = np.count_nonzero((scores >= 0.0) != y_pos, axis=1)
                        local = int(np.argmin(errs))
                        if errs[local] < best_errors:
                            best_errors = int(errs[local])
                            best_v = sign * V[local]
                            if tilted:
                                best_v = best_v + tau[local] * A[local]
                if best_errors == 0:
                    break

    hypothesis = LinearHypothesis(w=best_v[:k].copy(), t=float(best_v[k]), mode="sign")
    risk = _zero_one_risk(hypothesis, U, y)
    return ErmReport(hypothesis=hypothesis, empirical_risk=risk, solver="exact")


# ---------------------------------------------------------------------------
# descent solvers
# ---------------------------------------------------------------------------

_CHECKPOINT_EVERY = 50
_PLATEAU_FACTOR = 1e-10


def _descend(objective, gradient, x0: np.ndarray, iters: int, schedule: LrSchedule, plateau_tol: float):
    """Monotone first-order descent with backtracking.

    Accepts a step only when the objective does not increase; on rejection the
    step size shrinks (up to max_backtracks times per iteration), on success
    it grows.  Stops early when the decrease over a 50-step window falls
    below plateau_tol.  Returns (x, checkpoints) with the objective recorded
    every 50 accepted steps plus at entry and exit.
    """
    x = x0.astype(float).copy()
    obj = float(objective(x))
    checkpoints = [obj]
    lr = schedule.init
    window_start = obj
    for it in range(iters):
        g = gradient(x)
        accepted = False
        for _ in range(schedule.max_backtracks):
            trial = x - lr * g
            trial_obj = float(objective(trial))
            if np.isfinite(trial_obj) and trial_obj <= obj:
                x, obj = trial, trial_obj
                lr *= schedule.grow
                accepted = True
                break
            lr *= schedule.shrink
        if not accepted:
            break
        if (it + 1) % _CHECKPOINT_EVERY == 0:
            checkpoints.append(obj)
            if window_start - obj < plateau_tol:
                break
            window_start = obj
    if checkpoints[-1] != obj:
        checkpoints.append(obj)
    return x, tuple(checkpoints)


def erm_surrogate_classification(
    U,
    y,
    iters: int = 2000,
    lr_schedule: LrSchedule | None = None,
) -> ErmReport:
    """Logistic-surrogate gradient descent for the sign-linear class.

    Minimizes mean log(1 + exp(-y (w.u - t))) by full-batch descent, then
    reports the zero-one empirical risk of the resulting sign rule.  When the
    exact enumerator is feasible at this size it is run as well, and the gap
    between the two risks is reported; otherwise the gap is unknown (None).
    Non-convergence is not an error — the checkpoint trace is the diagnostic.
    """
    U, y = _validate_classification(U, y)
    n, k = U.shape
    schedule = lr_schedule or LrSchedule()

    def objective(x):
        s = U @ x[:k] - x[k]
        return float(np.mean(np.logaddexp(0.0, -y * s)))

    def gradient(x):
        s = U @ x[:k] - x[k]
        # d/ds log(1+exp(-y s)) = -y * sigmoid(-y s)
        g_s = -y * expit(-y * s)
        return np.concatenate([U.T @ g_s / n, [-np.mean(g_s)]])

    x0 = np.zeros(k + 1)
    plateau_tol = _PLATEAU_FACTOR * (1.0 + float(objective(x0)))
    x, checkpoints = _descend(objective, gradient, x0, iters, schedule, plateau_tol)

    hypothesis = LinearHypothesis(w=x[:k], t=float(x[k]), mode="sign")
    risk = _zero_one_risk(hypothesis, U, y)
    gap = None
    if k <= EXACT_MAX_K and n <= EXACT_MAX_N:
        gap = risk - erm_exact_classification(U, y).empirical_risk
    return ErmReport(
        hypothesis=hypothesis,
        empirical_risk=risk,
        solver="surrogate",
        surrogate_gap=gap,
        objective_checkpoints=checkpoints,
    )


def ols_init(U, y) -> tuple[np.ndarray, float]:
    """Least-squares fit of w.u - t to y, ignoring the clip.

    Returns (w, t) solving the normal equations of the design [U, 1] via a
    pseudo-inverse least squares, so singular designs are fine.
    """
    U = np.asarray(U, dtype=float)
    y = np.asarray(y, dtype=float)
    design = np.concatenate([U, np.ones((U.shape[0], 1))], axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return coef[:-1], -float(coef[-1])


def erm_regression(U, y, loss: LossSpec, iters: int = 2000) -> ErmReport:
    """Subgradient descent on the clipped-linear empirical risk.

    The predictor is u -> clip(w.u - t, -beta, beta); the optimized objective
    is the actual empirical risk, with the clip contributing subgradient 0
    outside the range and the identity inside.  Squared loss starts from the
    OLS solution; kl starts from zero.  Terminates after ``iters`` steps or
    when the objective decrease over 50 steps drops below 1e-10 * bound.
    """
    if loss.kind not in ("squared", "kl"):
        raise ValueError("erm_regression handles the squared and kl losses only")
    U = np.asarray(U, dtype=float)
    if U.ndim != 2:
        raise ValueError("U must be an n x k array")
    y = np.asarray(y, dtype=float)
    if y.shape != (U.shape[0],):
        raise ValueError("y must have one label per row of U")
    # Validate the label domain up front against the loss.
    eval_loss(loss, np.zeros_like(y), y)
    n, k = U.shape
    beta = loss.beta

    def objective(x):
        v = np.clip(U @ x[:k] - x[k], -beta, beta)
        return float(np.mean(eval_loss(loss, v, y)))

    if loss.kind == "squared":

        def pointwise_grad(v):
            return 2.0 * (v - y)

    else:

        def pointwise_grad(v):
            return 1.0 / (1.0 + np.exp(-v)) - y

    def gradient(x):
        s = U @ x[:k] - x[k]
        inside = np.abs(s) < beta
        g_s = np.where(inside, pointwise_grad(np.clip(s, -beta, beta)), 0.0)
        return np.concatenate([U.T @ g_s / n, [-np.mean(g_s)]])

    if loss.kind == "squared":
        w0, t0 = ols_init(U, y)
        x0 = np.concatenate([w0, [t0]])
    else:
        x0 = np.zeros(k + 1)
    x, checkpoints = _descend(
        objective, gradient, x0, iters, LrSchedule(), _PLATEAU_FACTOR * loss.bound
    )

    hypothesis = LinearHypothesis(w=x[:k], t=float(x[k]), mode="clip", beta=beta)
    risk = float(np.mean(eval_loss(loss, hypothesis.predict(U), y)))
    return ErmReport(
        hypothesis=hypothesis,
        empirical_risk=risk,
        solver="surrogate",
        objective_checkpoints=checkpoints,
    )
