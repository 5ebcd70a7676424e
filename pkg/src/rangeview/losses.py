"""Reconstruction, KL and hinge adversarial terms of the autoencoder objective.

All functions return plain floats and expect numpy-compatible inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_KL_WEIGHT = 1e-6
DEFAULT_ADV_WEIGHT = 0.5


@dataclass
class DiagonalGaussian:
    mu: np.ndarray
    log_var: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.log_var = np.asarray(self.log_var, dtype=np.float64)
        if self.mu.shape != self.log_var.shape:
            raise ValueError("mu and log_var must have the same shape")
        if not (np.all(np.isfinite(self.mu)) and np.all(np.isfinite(self.log_var))):
            raise ValueError("posterior parameters must be finite")

    def sample(self, rng, n: int) -> np.ndarray:
        rng = np.random.default_rng(rng)
        eps = rng.standard_normal((n,) + self.mu.shape)
        return self.mu + np.exp(0.5 * self.log_var) * eps

    def log_prob(self, z) -> np.ndarray:
        """Log density summed over all non-sample axes."""
        z = np.asarray(z, dtype=np.float64)
        var = np.exp(self.log_var)
        lp = -0.5 * (np.log(2 * np.pi) + self.log_var + (z - self.mu) ** 2 / var)
        return lp.reshape(lp.shape[: lp.ndim - self.mu.ndim] + (-1,)).sum(-1)


def l1_reconstruction(x, x_hat) -> float:
    x, x_hat = np.asarray(x, dtype=np.float64), np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_hat.shape}")
    return float(np.mean(np.abs(x - x_hat)))


def kl_to_standard_normal(q: DiagonalGaussian) -> float:
    """KL(q || N(0, I)), summed over dimensions."""
    return float(0.5 * np.sum(np.exp(q.log_var) + q.mu ** 2 - 1.0 - q.log_var))


def _scores(s, name):
    s = np.asarray(s, dtype=np.float64).reshape(-1)
    if s.size == 0:
        raise ValueError(f"{name} must not be empty")
    return s


def hinge_d_loss(real_scores, fake_scores) -> float:
    real = _scores(real_scores, "real_scores")
    fake = _scores(fake_scores, "fake_scores")
    return float(np.mean(np.maximum(0.0, 1.0 - real)) + np.mean(np.maximum(0.0, 1.0 + fake)))


def hinge_g_loss(fake_scores) -> float:
    return float(-np.mean(_scores(fake_scores, "fake_scores")))


def first_stage_objective(x, x_hat, q: DiagonalGaussian, fake_scores,
                          lambda1: float = DEFAULT_KL_WEIGHT,
                          lambda2: float = DEFAULT_ADV_WEIGHT) -> float:
    """Quantity minimised by the decoder: L1 + lambda1 * KL + lambda2 * generator hinge."""
    return (l1_reconstruction(x, x_hat) + lambda1 * kl_to_standard_normal(q)
            + lambda2 * hinge_g_loss(fake_scores))
