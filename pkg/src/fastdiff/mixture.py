"""Gaussian mixtures with analytic diffusion oracles.

For data distributed as a mixture sum_k w_k N(mu_k, Sigma_k), the marginal of
the diffusion at signal fraction alpha_bar is again a mixture,

    q(x) = sum_k w_k N(sqrt(alpha_bar) mu_k, alpha_bar Sigma_k
                                              + (1 - alpha_bar) I),

so the score grad log q, the mean-square-optimal noise predictor

    eps*(x, t) = -sqrt(1 - alpha_bar) * grad log q(x),

and the Bayes posterior over component labels are all available in closed
form.  These serve as exact reference models for the samplers: a sampler
driven by `AnalyticEpsilonModel` should reproduce the mixture's moments as
the number of reverse steps grows.

Responsibilities are computed in the log domain; per-component Cholesky
factors are cached keyed by alpha_bar, since samplers query only a handful
of distinct steps.
"""

from __future__ import annotations

import json

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky

from .errors import ConstructionError, NumericError
from .schedule import NoiseLevelMap

_LOG_2PI = float(np.log(2.0 * np.pi))
_CACHE_LIMIT = 1024


class GaussianMixture:
    """Weighted Gaussian mixture; optionally labelled per component."""

    def __init__(self, weights, means, covariances, labels=None):
        self.weights = np.asarray(weights, dtype=float)
        self.means = np.atleast_2d(np.asarray(means, dtype=float))
        self.covariances = np.asarray(covariances, dtype=float)
        if self.covariances.ndim == 2:
            self.covariances = self.covariances[None, :, :]
        k, d = self.means.shape
        if self.weights.shape != (k,) or self.covariances.shape != (k, d, d):
            raise ConstructionError("weights/means/covariances shapes disagree")
        if np.any(self.weights <= 0.0):
            raise ConstructionError("weights must be positive")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ConstructionError(
                f"weights sum to {self.weights.sum()!r}, not 1")
        self._chols = []
        for i, cov in enumerate(self.covariances):
            if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
                raise ConstructionError(f"covariance {i} is not symmetric")
            try:
                self._chols.append(cholesky(cov, lower=True))
            except np.linalg.LinAlgError:
                raise ConstructionError(
                    f"covariance {i} is not positive definite")
        self.labels = None if labels is None else np.asarray(labels, dtype=int)
        if self.labels is not None and self.labels.shape != (k,):
            raise ConstructionError("labels must give one class per component")
        self.num_components = k
        self.dim = d
        for a in (self.weights, self.means, self.covariances):
            a.flags.writeable = False
        self._noisy_cache: dict[float, list] = {}

    # -- basic facts ---------------------------------------------------------

    def moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact mean and covariance of the mixture."""
        mean = self.weights @ self.means
        cov = np.zeros((self.dim, self.dim))
        for w, mu, sig in zip(self.weights, self.means, self.covariances):
            cov += w * (sig + np.outer(mu, mu))
        cov -= np.outer(mean, mean)
        return mean, cov

    def sample(self, stream, n: int) -> np.ndarray:
        comps = stream.choice(self.num_components, size=n, p=self.weights)
        z = stream.standard_normal((n, self.dim))
        chols = np.stack(self._chols)[comps]
        return self.means[comps] + np.einsum("nij,nj->ni", chols, z)

    def class_labels(self) -> np.ndarray:
        if self.labels is None:
            raise ValueError("mixture has no labels")
        return np.unique(self.labels)

    def restrict(self, label: int) -> "GaussianMixture":
        """Sub-mixture of the components carrying `label`, renormalized."""
        if self.labels is None:
            raise ValueError("mixture has no labels")
        keep = self.labels == label
        if not np.any(keep):
            raise ValueError(f"no component has label {label}")
        w = self.weights[keep]
        return GaussianMixture(w / w.sum(), self.means[keep],
                               self.covariances[keep], self.labels[keep])

    # -- noisy-marginal quantities -------------------------------------------

    def _noisy_factors(self, alpha_bar: float):
        """Means and Cholesky factorizations of the marginal at alpha_bar."""
        key = float(alpha_bar)
        hit = self._noisy_cache.get(key)
        if hit is not None:
            return hit
        eye = np.eye(self.dim)
        factors = []
        for mu, sig in zip(self.means, self.covariances):
            cov = alpha_bar * sig + (1.0 - alpha_bar) * eye
            try:
                cf = cho_factor(cov, lower=True)
            except np.linalg.LinAlgError:
                raise NumericError(
                    f"singular marginal covariance at alpha_bar={alpha_bar}")
            logdet = 2.0 * np.sum(np.log(np.diag(cf[0])))
            factors.append((np.sqrt(alpha_bar) * mu, cf, logdet))
        if len(self._noisy_cache) >= _CACHE_LIMIT:
            self._noisy_cache.clear()
        self._noisy_cache[key] = factors
        return factors

    def _component_log_density(self, x: np.ndarray, alpha_bar: float):
        """log w_k + log N(x; ...) for each component; x is (n, d)."""
        factors = self._noisy_factors(alpha_bar)
        out = np.empty((x.shape[0], self.num_components))
        for k, (mean, cf, logdet) in enumerate(factors):
            diff = x - mean
            solved = cho_solve(cf, diff.T).T
            maha = np.sum(diff * solved, axis=1)
            out[:, k] = (np.log(self.weights[k])
                         - 0.5 * (self.dim * _LOG_2PI + logdet + maha))
        return out

    def log_density(self, x: np.ndarray, alpha_bar: float = 1.0) -> np.ndarray:
        """log q(x) of the marginal at signal fraction alpha_bar; (n,)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        logs = self._component_log_density(x, alpha_bar)
        peak = np.max(logs, axis=1, keepdims=True)
        return (peak + np.log(np.sum(np.exp(logs - peak), axis=1,
                                     keepdims=True))).ravel()

    def score(self, x: np.ndarray, alpha_bar: float = 1.0) -> np.ndarray:
        """grad_x log q(x) of the marginal at alpha_bar; (n, d)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        logs = self._component_log_density(x, alpha_bar)
        peak = np.max(logs, axis=1, keepdims=True)
        resp = np.exp(logs - peak)
        resp /= np.sum(resp, axis=1, keepdims=True)
        factors = self._noisy_factors(alpha_bar)
        grad = np.zeros_like(x)
        for k, (mean, cf, _) in enumerate(factors):
            grad -= resp[:, k:k + 1] * cho_solve(cf, (x - mean).T).T
        return grad

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        out = {"weights": self.weights.tolist(), "means": self.means.tolist(),
               "covariances": self.covariances.tolist()}
        if self.labels is not None:
            out["labels"] = self.labels.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianMixture":
        return cls(data["weights"], data["means"], data["covariances"],
                   data.get("labels"))

    @classmethod
    def from_json(cls, path) -> "GaussianMixture":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def analytic_epsilon(gm: GaussianMixture, level_map: NoiseLevelMap,
                     x: np.ndarray, t_cont: float) -> np.ndarray:
    """The MSE-optimal noise predictor for mixture data, evaluated exactly.

    eps*(x, t) = -sqrt(1 - alpha_bar(t)) * grad_x log q(x); for a single
    standard normal component this reduces to sqrt(1 - alpha_bar) * x.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    alpha_bar = float(np.exp(level_map.log_alpha_bar(t_cont)))
    return -np.sqrt(1.0 - alpha_bar) * gm.score(x, alpha_bar)


def posterior_classifier(gm: GaussianMixture, x: np.ndarray) -> np.ndarray:
    """Exact Bayes posterior over class labels at the data level; (n, L)
    with columns ordered by `gm.class_labels()`."""
    if gm.labels is None:
        raise ValueError("posterior_classifier requires a labelled mixture")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    logs = gm._component_log_density(x, 1.0)
    peak = np.max(logs, axis=1, keepdims=True)
    resp = np.exp(logs - peak)
    resp /= np.sum(resp, axis=1, keepdims=True)
    classes = gm.class_labels()
    probs = np.empty((x.shape[0], classes.size))
    for j, label in enumerate(classes):
        probs[:, j] = np.sum(resp[:, gm.labels == label], axis=1)
    return probs


class AnalyticEpsilonModel:
    """EpsilonModel wrapper around `analytic_epsilon` for a fixed mixture
    and schedule; deterministic and safe for concurrent use."""

    def __init__(self, gm: GaussianMixture, level_map: NoiseLevelMap):
        self.gm = gm
        self.level_map = level_map
        self.dim = gm.dim

    def predict(self, x: np.ndarray, t: float) -> np.ndarray:
        return analytic_epsilon(self.gm, self.level_map, x, t)
