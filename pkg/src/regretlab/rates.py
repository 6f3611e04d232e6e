"""Least-squares rate fitting for regret curves.

Three two-parameter models are fit to a curve R_t for t at or above a
cutoff (10 by default): a log t + b, a sqrt(t) + b, and a t + b. The model
with the largest coefficient of determination wins. Two choices keep the
comparison meaningful across three decades of t. The curve is subsampled at
log-spaced rounds so every decade carries the same number of points, and
the fit is weighted by 1/t: regret curves of randomized runs disperse on
the random-walk scale, so Var R_t grows linearly in t and 1/t is the
inverse-variance weight. Without both, the last decade's noise dominates
the residuals and the comparison degenerates.

A log-log regression slope is also reported, along with a pinned-slope fit
of c / t to the per-round increments averaged over dyadic windows, which is
how a logarithmic regret curve shows its 1/t increment structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODEL_NAMES = ("logarithmic", "sqrt", "linear")
FIT_T_MIN = 10
_SUBSAMPLE = 200


@dataclass(frozen=True)
class ModelFit:
    name: str
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class RateFit:
    models: dict
    selected: str
    loglog_exponent: float | None
    t_min: int
    n_points: int

    def model(self, name: str) -> ModelFit:
        return self.models[name]


def _weighted_least_squares(phi: np.ndarray, y: np.ndarray,
                            w: np.ndarray) -> tuple[float, float, float]:
    sw = np.sqrt(w)
    design = np.column_stack([phi, np.ones_like(phi)]) * sw[:, None]
    target = y * sw
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ coef
    ss_res = float(resid @ resid)
    w_mean = float(np.sum(w * y) / np.sum(w))
    centered = y - w_mean
    ss_tot = float(np.sum(w * centered * centered))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(coef[0]), float(coef[1]), r2


def _log_spaced_rounds(t: np.ndarray, t_min: int) -> np.ndarray:
    lo = max(t_min, int(t[0]))
    hi = int(t[-1])
    if hi <= lo:
        raise ValueError(f"curve ends at t={hi}, need rounds beyond t_min={t_min}")
    targets = np.unique(np.round(np.logspace(np.log10(lo), np.log10(hi),
                                             _SUBSAMPLE)).astype(int))
    return targets[(targets >= lo) & (targets <= hi)]


def fit_rate(t: np.ndarray, regret: np.ndarray, t_min: int = FIT_T_MIN) -> RateFit:
    """Fit the three growth models and pick the best by weighted R^2."""
    t = np.asarray(t, dtype=float)
    regret = np.asarray(regret, dtype=float)
    if len(t) != len(regret):
        raise ValueError("t and regret must have equal length")
    rounds = _log_spaced_rounds(t, t_min)
    if len(rounds) < 3:
        raise ValueError(f"need at least 3 rounds with t >= {t_min}")
    sel = np.searchsorted(t, rounds)
    tt = t[sel]
    rr = regret[sel]
    weights = 1.0 / tt
    models = {}
    for name, phi in (("logarithmic", np.log(tt)), ("sqrt", np.sqrt(tt)), ("linear", tt)):
        slope, intercept, r2 = _weighted_least_squares(phi, rr, weights)
        models[name] = ModelFit(name=name, slope=slope, intercept=intercept, r_squared=r2)
    selected = max(MODEL_NAMES, key=lambda n: models[n].r_squared)

    positive = rr > 0
    exponent = None
    if int(positive.sum()) >= 3:
        slope, _, _ = _weighted_least_squares(np.log(tt[positive]), np.log(rr[positive]),
                                              np.ones(int(positive.sum())))
        exponent = slope
    return RateFit(models=models, selected=selected, loglog_exponent=exponent,
                   t_min=t_min, n_points=len(rounds))


@dataclass(frozen=True)
class IncrementFit:
    """Pinned-slope fit of c/t to window-averaged per-round increments."""

    c: float
    r_squared: float
    window_centers: np.ndarray
    window_means: np.ndarray


def dyadic_increment_fit(t: np.ndarray, regret: np.ndarray, t_lo: int = 100,
                         t_hi: int | None = None) -> IncrementFit:
    """Average regret increments over dyadic windows and fit c / t.

    Increments R_t - R_{t-1} are averaged over windows [2^j, 2^{j+1})
    intersected with [t_lo, t_hi]; windows with nonpositive means are
    dropped (the model lives on the log scale). The fit pins the log-log
    slope at -1 and reports the R^2 of that one-parameter model against
    the window means.
    """
    t = np.asarray(t, dtype=float)
    regret = np.asarray(regret, dtype=float)
    if t_hi is None:
        t_hi = int(t[-1])
    increments = np.diff(regret)
    inc_t = t[1:]
    centers, means = [], []
    j = int(np.floor(np.log2(max(t_lo, 2))))
    while (1 << j) < t_hi:
        lo = max(t_lo, 1 << j)
        hi = min(t_hi, 1 << (j + 1))
        j += 1
        if hi <= lo:
            continue
        mask = (inc_t >= lo) & (inc_t < hi)
        if not mask.any():
            continue
        mean = float(np.mean(increments[mask]))
        if mean <= 0:
            continue
        centers.append(float(np.exp(np.mean(np.log(inc_t[mask])))))
        means.append(mean)
    if len(means) < 2:
        raise ValueError("not enough positive dyadic windows to fit")
    centers_arr = np.array(centers)
    means_arr = np.array(means)
    logs = np.log(means_arr) + np.log(centers_arr)
    log_c = float(np.mean(logs))
    fitted = log_c - np.log(centers_arr)
    resid = np.log(means_arr) - fitted
    centered = np.log(means_arr) - np.log(means_arr).mean()
    ss_tot = float(centered @ centered)
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return IncrementFit(c=float(np.exp(log_c)), r_squared=r2,
                        window_centers=centers_arr, window_means=means_arr)
