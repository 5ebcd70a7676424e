"""Gaussian diffusion over latent tensors with pluggable noise predictors.

Timesteps are 1-based: ``t = 1`` is the least noisy step and ``t = T`` the
last one; ``alpha_bar(0) == 1``.  A denoiser is any callable
``denoiser(z_t, t, condition) -> eps_hat`` returning an array shaped like
``z_t``.  Arrays may carry a leading batch axis; ``t`` is a single step.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Protocol

import numpy as np


class Denoiser(Protocol):
    def __call__(self, z_t: np.ndarray, t: int,
                 condition: Optional[np.ndarray] = None) -> np.ndarray: ...


@dataclass(frozen=True)
class NoiseSchedule:
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray

    @property
    def T(self) -> int:
        return len(self.beta)

    def _check(self, t: int, lo: int = 1):
        if not lo <= t <= self.T:
            raise ValueError(f"timestep {t} outside [{lo}, {self.T}]")

    def beta_at(self, t: int) -> float:
        self._check(t)
        return float(self.beta[t - 1])

    def alpha_at(self, t: int) -> float:
        self._check(t)
        return float(self.alpha[t - 1])

    def alpha_bar_at(self, t: int) -> float:
        self._check(t, lo=0)
        return 1.0 if t == 0 else float(self.alpha_bar[t - 1])

    def posterior_variance(self, t: int) -> float:
        """Variance of q(x_{t-1} | x_t, x_0); zero at t = 1."""
        ab, ab_prev = self.alpha_bar_at(t), self.alpha_bar_at(t - 1)
        return (1.0 - ab_prev) / (1.0 - ab) * self.beta_at(t)


def schedule_from_betas(beta) -> NoiseSchedule:
    beta = np.asarray(beta, dtype=np.float64)
    if beta.ndim != 1 or len(beta) < 1:
        raise ValueError("beta must be a non-empty vector")
    if np.any((beta <= 0) | (beta >= 1)):
        raise ValueError("every beta must lie in (0, 1)")
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    return NoiseSchedule(beta, alpha, alpha_bar)


def linear_schedule(T: int = 1000, beta_start: float = 1e-4,
                    beta_end: float = 2e-2) -> NoiseSchedule:
    if T < 1:
        raise ValueError("T must be at least 1")
    if not 0 < beta_start <= beta_end < 1:
        raise ValueError("need 0 < beta_start <= beta_end < 1")
    return schedule_from_betas(np.linspace(beta_start, beta_end, T))


def forward_sample(x0, t: int, eps, sched: NoiseSchedule) -> np.ndarray:
    x0, eps = np.asarray(x0, dtype=np.float64), np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise ValueError(f"x0 shape {x0.shape} != eps shape {eps.shape}")
    ab = sched.alpha_bar_at(t)
    if t == 0:
        raise ValueError("timestep must be at least 1")
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def denoising_loss_from_draws(pairs, den: Denoiser, sched: NoiseSchedule,
                              ts, eps) -> float:
    """Mean of ``||eps - den(z_t, t, c)||^2`` over explicit draws.

    ``pairs`` is a sequence of (x0, condition); ``ts[s][i]`` and ``eps[s][i]``
    are the step and noise of draw ``s`` for item ``i``.
    """
    total, count = 0.0, 0
    for ts_row, eps_row in zip(ts, eps):
        for (x0, cond), t, e in zip(pairs, ts_row, eps_row):
            z_t = forward_sample(x0, int(t), e, sched)
            diff = np.asarray(e) - np.asarray(den(z_t, int(t), cond))
            total += float(np.sum(diff * diff))
            count += 1
    return total / count


def _draws(pairs, sched, rng, n_samples):
    rng = np.random.default_rng(rng)
    ts, eps = [], []
    for _ in range(n_samples):
        ts.append([int(rng.integers(1, sched.T + 1)) for _ in pairs])
        eps.append([rng.standard_normal(np.shape(x0)) for x0, _ in pairs])
    return ts, eps


def conditional_denoising_loss(pairs, den: Denoiser, sched: NoiseSchedule, rng=None,
                               n_samples: int = 1) -> float:
    """Monte-Carlo noise-prediction loss with the condition forwarded to ``den``."""
    pairs = [(np.asarray(x0, dtype=np.float64), c) for x0, c in pairs]
    if not pairs:
        raise ValueError("batch must not be empty")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    ts, eps = _draws(pairs, sched, rng, n_samples)
    return denoising_loss_from_draws(pairs, den, sched, ts, eps)


def denoising_loss(x0_batch, den: Denoiser, sched: NoiseSchedule, rng=None,
                   n_samples: int = 1) -> float:
    """Monte-Carlo estimate of E_{t, eps} ||eps - den(z_t, t)||^2.

    ``t`` is uniform on 1..T and ``eps`` standard normal; every item gets its
    own draw in each of the ``n_samples`` rounds.
    """
    return conditional_denoising_loss([(x0, None) for x0 in x0_batch], den, sched,
                                      rng, n_samples)


def ddpm_step(z_t, t: int, eps_hat, sched: NoiseSchedule, noise) -> np.ndarray:
    """One ancestral step with reverse variance equal to the posterior variance."""
    z_t, eps_hat = np.asarray(z_t, dtype=np.float64), np.asarray(eps_hat, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if z_t.shape != eps_hat.shape:
        raise ValueError("z_t and eps_hat must have the same shape")
    if t < 1:
        raise ValueError("timestep must be at least 1")
    if t == 1 and np.any(noise != 0):
        raise ValueError("noise must be zero at t = 1")
    beta, ab = sched.beta_at(t), sched.alpha_bar_at(t)
    mean = (z_t - beta / np.sqrt(1.0 - ab) * eps_hat) / np.sqrt(sched.alpha_at(t))
    return mean + np.sqrt(sched.posterior_variance(t)) * noise


def ddpm_sample(den: Denoiser, sched: NoiseSchedule, shape, rng=None,
                condition=None) -> np.ndarray:
    rng = np.random.default_rng(rng)
    z = rng.standard_normal(shape)
    for t in range(sched.T, 0, -1):
        noise = rng.standard_normal(shape) if t > 1 else np.zeros(shape)
        z = ddpm_step(z, t, den(z, t, condition), sched, noise)
    return z


def ddim_timesteps(T: int, n_steps: int) -> list[int]:
    """Descending steps ``T, T - s, ...`` with stride ``s = T // n_steps``."""
    if not 1 <= n_steps <= T:
        raise ValueError(f"n_steps must lie in [1, {T}]")
    stride = T // n_steps
    return [T - k * stride for k in range(n_steps)]


def ddim_sample(den: Denoiser, sched: NoiseSchedule, n_steps: int = 50, shape=(1,),
                rng=None, condition=None, z_T=None) -> np.ndarray:
    """Deterministic (eta = 0) implicit sampling from standard-normal ``z_T``.

    Returns the clean-sample estimate made at the final step.
    """
    steps = ddim_timesteps(sched.T, n_steps)
    if z_T is None:
        z = np.random.default_rng(rng).standard_normal(shape)
    else:
        z = np.array(z_T, dtype=np.float64)
    for k, t in enumerate(steps):
        ab = sched.alpha_bar_at(t)
        eps_hat = np.asarray(den(z, t, condition), dtype=np.float64)
        x0_hat = (z - np.sqrt(1.0 - ab) * eps_hat) / np.sqrt(ab)
        if k == len(steps) - 1:
            return x0_hat
        ab_next = sched.alpha_bar_at(steps[k + 1])
        z = np.sqrt(ab_next) * x0_hat + np.sqrt(1.0 - ab_next) * eps_hat
    raise AssertionError("unreachable")


def analytic_gaussian_denoiser(mu, sigma2, sched: NoiseSchedule) -> Callable:
    """Bayes-optimal noise predictor for data distributed as N(mu, diag(sigma2))."""
    mu = np.asarray(mu, dtype=np.float64)
    sigma2 = np.asarray(sigma2, dtype=np.float64)
    if np.any(sigma2 < 0):
        raise ValueError("variance must be non-negative")

    def predict(z_t, t, condition=None):
        ab = sched.alpha_bar_at(t)
        s_ab = np.sqrt(ab)
        m_post = (s_ab * sigma2 * z_t + (1.0 - ab) * mu) / (ab * sigma2 + (1.0 - ab))
        return (z_t - s_ab * m_post) / np.sqrt(1.0 - ab)

    return predict
