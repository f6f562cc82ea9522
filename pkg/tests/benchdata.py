"""Synthetic dataset constructors shared by harness and acceptance tests.

All constructions were fixed before the implementations they exercise:

latent_quality_dataset
    x = q * u + noise, with latent quality q ~ uniform(-1, 1) along a unit
    direction u and an isotropic Gaussian noise vector whose expected
    squared norm is sigma^2 (per-coordinate std sigma/sqrt(dim)). High-q and
    low-q samples point in opposite directions along u, so a median split
    yields directionally separated anchors. MOS is q itself.

imbalanced_pool / imbalanced_eval
    Embeddings carry a quality direction plus one of two strong content
    modes. The low-quality half of the pool puts 90% of its mass on one
    mode, so plain mean anchors misrepresent the rare mode, while averaging
    cluster centroids re-balances it.

corrupted_band_pool / clean_eval
    MOS-labeled pool whose middle MOS band is replaced by random junk
    vectors; peeling records near the High/Low division point removes the
    junk, so rank agreement peaks at a positive offset.
"""
from __future__ import annotations

import numpy as np

from anchorscore import EmbeddingDataset

LATENT_DIM = 64
LATENT_SIGMA = 0.5


def _unit_direction(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def latent_quality_dataset(
    n: int,
    seed: int,
    dim: int = LATENT_DIM,
    sigma: float = LATENT_SIGMA,
    tag: str = "latent",
) -> EmbeddingDataset:
    rng = np.random.default_rng(seed)
    direction = _unit_direction(dim, seed=90210)
    q = rng.uniform(-1.0, 1.0, size=n)
    noise = rng.normal(0.0, sigma / np.sqrt(dim), size=(n, dim))
    x = (q[:, None] * direction[None, :] + noise).astype(np.float32)
    ids = [f"{tag}-{i:05d}" for i in range(n)]
    return EmbeddingDataset(dim, x, ids, mos=[float(v) for v in q], source_tag=tag)


IMBALANCED_DIM = 16


def _content_sample(
    n: int, q_sign: float, mode_a_fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    u = np.zeros(IMBALANCED_DIM)
    u[0] = 1.0
    v = np.zeros(IMBALANCED_DIM)
    v[1] = 1.0
    w = np.zeros(IMBALANCED_DIM)
    w[2] = 1.0
    q = rng.uniform(0.5, 1.0, size=n) * q_sign
    on_mode_a = rng.uniform(size=n) < mode_a_fraction
    content = np.where(on_mode_a[:, None], v[None, :], w[None, :])
    x = q[:, None] * u[None, :] + 2.0 * content + rng.normal(0.0, 0.1, (n, IMBALANCED_DIM))
    return q, x.astype(np.float32)


def imbalanced_pool(seed: int = 11, n_per_side: int = 400) -> EmbeddingDataset:
    """90% of the low-quality mass sits on one content mode."""
    rng = np.random.default_rng(seed)
    q_hi, x_hi = _content_sample(n_per_side, +1.0, 0.5, rng)
    q_lo, x_lo = _content_sample(n_per_side, -1.0, 0.9, rng)
    x = np.vstack([x_hi, x_lo])
    q = np.concatenate([q_hi, q_lo])
    ids = [f"pool-{i:05d}" for i in range(len(q))]
    return EmbeddingDataset(IMBALANCED_DIM, x, ids, mos=[float(v) for v in q], source_tag="imbalanced")


def imbalanced_eval(seed: int = 12, n_per_side: int = 300) -> EmbeddingDataset:
    rng = np.random.default_rng(seed)
    q_hi, x_hi = _content_sample(n_per_side, +1.0, 0.5, rng)
    q_lo, x_lo = _content_sample(n_per_side, -1.0, 0.5, rng)
    x = np.vstack([x_hi, x_lo])
    q = np.concatenate([q_hi, q_lo])
    ids = [f"eval-{i:05d}" for i in range(len(q))]
    return EmbeddingDataset(IMBALANCED_DIM, x, ids, mos=[float(v) for v in q], source_tag="imbalanced-eval")


BAND_DIM = 16
BAND_HALF_WIDTH = 0.35


def corrupted_band_pool(seed: int = 21, n: int = 400) -> EmbeddingDataset:
    rng = np.random.default_rng(seed)
    direction = _unit_direction(BAND_DIM, seed=555)
    mos = rng.uniform(-1.0, 1.0, size=n)
    clean = mos[:, None] * direction[None, :] + rng.normal(
        0.0, 0.05 / np.sqrt(BAND_DIM), (n, BAND_DIM)
    )
    junk = rng.normal(0.0, 1.0, (n, BAND_DIM))
    in_band = np.abs(mos) < BAND_HALF_WIDTH
    x = np.where(in_band[:, None], junk, clean).astype(np.float32)
    ids = [f"band-{i:05d}" for i in range(n)]
    return EmbeddingDataset(BAND_DIM, x, ids, mos=[float(v) for v in mos], source_tag="band")


def clean_eval(seed: int = 22, n: int = 500) -> EmbeddingDataset:
    rng = np.random.default_rng(seed)
    direction = _unit_direction(BAND_DIM, seed=555)
    mos = rng.uniform(-1.0, 1.0, size=n)
    x = (
        mos[:, None] * direction[None, :]
        + rng.normal(0.0, 0.05 / np.sqrt(BAND_DIM), (n, BAND_DIM))
    ).astype(np.float32)
    ids = [f"clean-{i:05d}" for i in range(n)]
    return EmbeddingDataset(BAND_DIM, x, ids, mos=[float(v) for v in mos], source_tag="clean")
