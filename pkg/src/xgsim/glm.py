"""Binomial-logit GLM fitted by iteratively reweighted least squares."""
from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .errors import ComparabilityError, DegenerateOutcomeError, DomainError, ScoringError
from .features import DesignLayout, DesignMatrix, ModelSpec, build_design_matrix
from .ingest import ShotEvent

log = logging.getLogger(__name__)

MAX_ITER = 50
TOL = 1e-8
MAX_HALVINGS = 30
MAX_POLISH = 3
SEPARATION_BOUND = 15.0
RANK_TOL = 1e-7


class GlmWarning(UserWarning):
    pass


def sigmoid(eta):
    """Inverse logit, stable for large |eta|."""
    eta = np.asarray(eta, dtype=float)
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def bernoulli_deviance(y: np.ndarray, eta: np.ndarray) -> float:
    """-2 log-likelihood of 0/1 labels under logit-linear predictor ``eta``."""
    # log p = -log(1+e^-eta), log(1-p) = -log(1+e^eta)
    return float(2.0 * np.sum(y * np.logaddexp(0.0, -eta) + (1.0 - y) * np.logaddexp(0.0, eta)))


def log_likelihood(X: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    return -0.5 * bernoulli_deviance(y, X @ beta)


def score(X: np.ndarray, y: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Gradient of the log-likelihood."""
    return X.T @ (y - sigmoid(X @ beta))


@dataclass(frozen=True)
class GlmFit:
    spec: ModelSpec
    columns: tuple[str, ...]
    coefficients: Mapping[str, float]
    log_likelihood: float
    residual_deviance: float
    aic: float
    n_params: int
    n_obs: int
    n_goals: int
    converged: bool
    iterations: int
    aliased: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()
    deviance_trace: tuple[float, ...] = ()
    null_deviance: float = math.nan
    layout: DesignLayout | None = field(default=None, compare=False, repr=False)

    @property
    def name(self) -> str:
        return self.spec.name

    def beta(self) -> np.ndarray:
        """Coefficient vector aligned to ``columns``; aliased columns are 0."""
        return np.array([self.coefficients.get(c, 0.0) for c in self.columns])

    def summary(self) -> dict:
        return {
            "spec": self.spec.name,
            "n_obs": self.n_obs,
            "n_goals": self.n_goals,
            "n_params": self.n_params,
            "coefficients": {c: self.coefficients.get(c) for c in self.columns},
            "aliased": list(self.aliased),
            "log_likelihood": self.log_likelihood,
            "null_deviance": self.null_deviance,
            "residual_deviance": self.residual_deviance,
            "aic": self.aic,
            "converged": self.converged,
            "iterations": self.iterations,
            "warnings": list(self.warnings),
        }

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2) + "\n", encoding="utf-8")


def _estimable_columns(X: np.ndarray) -> np.ndarray:
    """Indices of a maximal linearly independent column subset, in order."""
    if X.shape[1] == 0:
        return np.arange(0)
    _, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > RANK_TOL * d[0])) if d.size and d[0] > 0 else 0
    return np.sort(piv[:rank])


def fit(design: DesignMatrix, max_iter: int = MAX_ITER, tol: float = TOL) -> GlmFit:
    """Maximum-likelihood fit of the logistic model.

    Newton-Raphson in IRLS form starting from the intercept-only solution.
    A step that raises the deviance is halved until it does not.  Convergence
    is declared when ``|dev - dev_old| / (|dev| + 0.1) < tol``.
    """
    X, y = design.X, design.y
    n = X.shape[0]
    if n == 0:
        raise DomainError("design matrix has no rows")
    if not np.all((y == 0) | (y == 1)):
        raise DomainError("labels must be binary")
    n_goals = int(y.sum())
    if n_goals in (0, n):
        raise DegenerateOutcomeError(
            f"all {n} labels are {'goals' if n_goals else 'non-goals'}; the MLE does not exist"
        )
    notes = []
    keep = _estimable_columns(X)
    aliased = tuple(design.columns[j] for j in range(X.shape[1]) if j not in set(keep))
    if aliased:
        msg = f"dropped aliased columns: {', '.join(aliased)}"
        notes.append(msg)
        warnings.warn(f"{design.layout.spec.name}: {msg}", GlmWarning, stacklevel=2)
    Xk = X[:, keep]

    beta = np.zeros(Xk.shape[1])
    ybar = n_goals / n
    icpt = [i for i, j in enumerate(keep) if np.all(X[:, j] == 1.0)]
    if icpt:
        beta[icpt[0]] = math.log(ybar / (1 - ybar))
    null_dev = -2.0 * (n_goals * math.log(ybar) + (n - n_goals) * math.log(1 - ybar))

    eta = Xk @ beta
    dev = bernoulli_deviance(y, eta)
    trace = [dev]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = sigmoid(eta)
        w = np.clip(mu * (1.0 - mu), 1e-12, None)
        z = eta + (y - mu) / w
        sw = np.sqrt(w)
        new_beta = scipy.linalg.lstsq(Xk * sw[:, None], z * sw, lapack_driver="gelsy")[0]
        new_dev = bernoulli_deviance(y, Xk @ new_beta)
        halvings = 0
        while (not np.isfinite(new_dev) or new_dev > dev) and halvings < MAX_HALVINGS:
            new_beta = 0.5 * (beta + new_beta)
            new_dev = bernoulli_deviance(y, Xk @ new_beta)
            halvings += 1
        if new_dev > dev:
            # no descent direction left at machine precision
            converged = abs(new_dev - dev) / (abs(dev) + 0.1) < tol
            break
        beta, eta = new_beta, Xk @ new_beta
        change = abs(new_dev - dev) / (abs(new_dev) + 0.1)
        dev = new_dev
        trace.append(dev)
        if change < tol:
            converged = True
            break

    if converged:
        # Newton polishing: the deviance criterion stops while coefficients can
        # still be off by ~sqrt(tol); quadratic convergence removes that
        for _ in range(MAX_POLISH):
            mu = sigmoid(eta)
            w = np.clip(mu * (1.0 - mu), 1e-12, None)
            sw = np.sqrt(w)
            polished = scipy.linalg.lstsq(Xk * sw[:, None], (eta + (y - mu) / w) * sw,
                                          lapack_driver="gelsy")[0]
            pdev = bernoulli_deviance(y, Xk @ polished)
            if not np.isfinite(pdev) or pdev > dev + 1e-10 * (abs(dev) + 1.0):
                break
            step = float(np.max(np.abs(polished - beta))) if beta.size else 0.0
            beta, eta, dev = polished, Xk @ polished, min(dev, pdev)
            if step < 1e-12:
                break

    if not converged:
        msg = f"IRLS did not converge in {max_iter} iterations"
        notes.append(msg)
        warnings.warn(f"{design.layout.spec.name}: {msg}", GlmWarning, stacklevel=2)

    coefs = {design.columns[j]: float(b) for j, b in zip(keep, beta)}
    big = [c for c, b in coefs.items() if abs(b) > SEPARATION_BOUND]
    if big:
        msg = f"possible quasi-separation, |coefficient| > {SEPARATION_BOUND:g}: {', '.join(big)}"
        notes.append(msg)
        warnings.warn(f"{design.layout.spec.name}: {msg}", GlmWarning, stacklevel=2)

    k = len(keep)
    return GlmFit(
        spec=design.layout.spec,
        columns=design.columns,
        coefficients=coefs,
        log_likelihood=-0.5 * dev,
        residual_deviance=dev,
        aic=dev + 2 * k,
        n_params=k,
        n_obs=n,
        n_goals=n_goals,
        converged=converged,
        iterations=it,
        aliased=aliased,
        warnings=tuple(design.notes) + tuple(notes),
        deviance_trace=tuple(trace),
        null_deviance=null_dev,
        layout=design.layout,
    )


def predict(fit: GlmFit, row: Mapping[str, float] | Sequence[float]) -> float:
    """Goal probability for one design row.

    ``row`` is either a mapping keyed by column name or a sequence aligned
    with ``fit.columns``.
    """
    if isinstance(row, Mapping):
        missing = [c for c in fit.columns if c not in row]
        extra = [c for c in row if c not in fit.columns]
        if missing or extra:
            raise ScoringError(f"column mismatch: missing {missing}, extra {extra}")
        x = np.array([row[c] for c in fit.columns], dtype=float)
    else:
        x = np.asarray(row, dtype=float)
        if x.shape != (len(fit.columns),):
            raise ScoringError(
                f"row has {x.size} values, model has {len(fit.columns)} columns"
            )
    return float(sigmoid(np.array([x @ fit.beta()]))[0])


def predict_design(fit: GlmFit, design: DesignMatrix) -> np.ndarray:
    if tuple(design.columns) != tuple(fit.columns):
        missing = [c for c in fit.columns if c not in design.columns]
        extra = [c for c in design.columns if c not in fit.columns]
        raise ScoringError(f"column mismatch: missing {missing}, extra {extra}")
    return sigmoid(design.X @ fit.beta())


def score_shots(fit: GlmFit, shots: Sequence[ShotEvent]) -> np.ndarray:
    """xG for each shot, encoded with the fit's frozen column registry."""
    if fit.layout is None:
        raise ScoringError("fit carries no design layout")
    return predict_design(fit, build_design_matrix(shots, fit.spec, fit.layout))


def fit_shots(shots: Sequence[ShotEvent], spec: ModelSpec) -> GlmFit:
    return fit(build_design_matrix(shots, spec))


@dataclass(frozen=True)
class ComparisonRow:
    model: str
    aic: float
    residual_deviance: float
    n_params: int
    delta_aic: float


def compare_models(fits: Sequence[GlmFit]) -> list[ComparisonRow]:
    """Rank fits by AIC (ties by model name); all must share one sample."""
    if not fits:
        return []
    samples = {(f.n_obs, f.n_goals) for f in fits}
    if len(samples) > 1:
        raise ComparabilityError(
            "fits were estimated on different samples: "
            + ", ".join(f"{f.name}=(n={f.n_obs}, goals={f.n_goals})" for f in fits)
        )
    ordered = sorted(fits, key=lambda f: (f.aic, f.name))
    best = ordered[0].aic
    return [ComparisonRow(f.name, f.aic, f.residual_deviance, f.n_params, f.aic - best)
            for f in ordered]
