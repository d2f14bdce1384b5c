"""Ensembles of predictors fit on independent random compressions.

Each member gets its own projection map, drawn from the shared family with a
seed derived from the ensemble's master seed, and a predictor fit by empirical
risk minimization on its compressed view of the same training sample.  The
combination rule is the loss's combiner: majority vote with ties broken
toward +1 for the zero-one loss, the clipped mean of member outputs
otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hypotheses import (
    ErmReport,
    LinearHypothesis,
    erm_exact_classification,
    erm_regression,
    erm_surrogate_classification,
)
from .losses import LossSpec
from .projections import ProjectionMap, apply, sample_projection
from .riskbounds import RiskEstimate, estimate_excess_risk
from .seeds import derive_seed

__all__ = ["EnsembleModel", "train_ensemble", "predict", "member_excess_risks", "model_summary"]


@dataclass(frozen=True, eq=False)
class EnsembleModel:
    """A trained compression ensemble.

    ``members`` pairs each projection map with the hypothesis fit on its
    compressed data; ``member_reports`` keeps the per-member fit reports in
    the same order.
    """

    members: tuple[tuple[ProjectionMap, LinearHypothesis], ...]
    loss: LossSpec
    family: str
    k: int
    d: int
    m: int
    member_reports: tuple[ErmReport, ...]
    master_seed: int

    def __post_init__(self):
        if self.m != len(self.members) or self.m < 1:
            raise ValueError("m must equal the number of members and be >= 1")
        if len(self.member_reports) != self.m:
            raise ValueError("one fit report per member required")
        seeds = set()
        for pmap, hyp in self.members:
            if pmap.family != self.family or pmap.k != self.k or pmap.d != self.d:
                raise ValueError("all members must share the ensemble's family, k, and d")
            if hyp.w.shape != (self.k,):
                raise ValueError("member hypothesis dimension must match k")
            seeds.add(pmap.seed)
        if len(seeds) != self.m:
            raise ValueError("member projection seeds must be distinct")


def _fit_member(U: np.ndarray, y: np.ndarray, loss: LossSpec, solver: str, iters: int) -> ErmReport:
    if loss.kind == "zero_one":
        if solver == "exact":
            return erm_exact_classification(U, y)
        if solver == "surrogate":
            return erm_surrogate_classification(U, y, iters=iters)
        raise ValueError(f"unknown classification solver {solver!r}")
    if solver != "surrogate":
        raise ValueError(f"solver {solver!r} is only defined for the zero-one loss")
    return erm_regression(U, y, loss, iters=iters)


def train_ensemble(
    X,
    y,
    loss: LossSpec,
    family: str,
    k: int,
    m: int,
    solver: str = "surrogate",
    master_seed: int = 0,
    iters: int | None = None,
) -> EnsembleModel:
    """Fit an m-member ensemble on (X, y).

    Member i draws its projection with seed ``derive_seed(master_seed, i)``,
    so retraining with the same arguments is bit-identical and ensembles with
    different master seeds are independent.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be n x d with matching labels y")
    if m < 1:
        raise ValueError("m must be >= 1")
    iters = 2000 if iters is None else int(iters)
    d = X.shape[1]
    members = []
    reports = []
    for i in range(m):
        pmap = sample_projection(family, k, d, derive_seed(master_seed, i))
        report = _fit_member(apply(pmap, X), y, loss, solver, iters)
        members.append((pmap, report.hypothesis))
        reports.append(report)
    return EnsembleModel(
        members=tuple(members),
        loss=loss,
        family=family,
        k=k,
        d=d,
        m=m,
        member_reports=tuple(reports),
        master_seed=master_seed,
    )


def _member_outputs(model: EnsembleModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    outputs = np.empty((model.m, X.shape[0]))
    for i, (pmap, hyp) in enumerate(model.members):
        outputs[i] = hyp.predict(apply(pmap, X))
    return outputs


def predict(model: EnsembleModel, X) -> np.ndarray:
    """Combined prediction: majority vote (ties to +1) or clipped mean."""
    outputs = _member_outputs(model, X)
    if model.loss.combiner == "mode":
        return np.where(np.sum(outputs, axis=0) >= 0.0, 1.0, -1.0)
    beta = model.loss.beta
    return np.clip(np.mean(outputs, axis=0), -beta, beta)


def member_excess_risks(
    model: EnsembleModel, dist, n_test: int = 100_000, seed: int = 0
) -> tuple[list[RiskEstimate], RiskEstimate]:
    """Excess risk of each member alone and of the combined ensemble.

    All estimates share the same evaluation seed, hence the same test draw,
    so member-vs-ensemble comparisons are paired rather than independent.
    """
    member_estimates = []
    for pmap, hyp in model.members:
        def member_predictor(Xq, _pmap=pmap, _h=hyp):
            return _h.predict(apply(_pmap, Xq))

        member_estimates.append(estimate_excess_risk(member_predictor, dist, n_test=n_test, seed=seed))
    ensemble_estimate = estimate_excess_risk(
        lambda Xq: predict(model, Xq), dist, n_test=n_test, seed=seed
    )
    return member_estimates, ensemble_estimate


def model_summary(model: EnsembleModel) -> dict:
    """JSON-able description of a trained ensemble."""
    return {
        "family": model.family,
        "k": model.k,
        "d": model.d,
        "m": model.m,
        "loss": {"kind": model.loss.kind, "beta": model.loss.beta},
        "master_seed": model.master_seed,
        "member_seeds": [pmap.seed for pmap, _ in model.members],
        "member_empirical_risks": [float(r.empirical_risk) for r in model.member_reports],
        "member_solvers": [r.solver for r in model.member_reports],
    }
