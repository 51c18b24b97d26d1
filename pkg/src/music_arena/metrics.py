"""Objective evaluation metrics over ingested embedding, logit and feature files.

Feature extraction happens elsewhere; these functions consume matrices that
already live on disk (see :mod:`music_arena.matrixio`). The two Fréchet
columns (FAD and FD) use identical mathematics and differ only in which
embedding backbone produced the ingested sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSampleError, InvalidArgumentError

_EIGENVALUE_CLAMP = 1e-10
_SYMMETRY_TOL = 1e-8


@dataclass
class EmbeddingSet:
    """A set of clip embeddings, one row per clip, stored as float32."""

    data: np.ndarray
    source_tag: str = ""

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise InvalidArgumentError(f"embeddings must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("embeddings contain non-finite entries")
        self.data = arr

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass
class GaussianStats:
    """Mean and covariance fitted to an embedding set."""

    mean: np.ndarray
    cov: np.ndarray

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass
class PairedLogits:
    """Classifier logits for reference/generated clips paired by prompt id."""

    ref: np.ndarray
    gen: np.ndarray
    prompt_ids: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        self.ref = np.asarray(self.ref, dtype=np.float64)
        self.gen = np.asarray(self.gen, dtype=np.float64)
        if self.ref.shape != self.gen.shape or self.ref.ndim != 2:
            raise InvalidArgumentError(
                f"paired logits must be equal-shape 2-D arrays, got "
                f"{self.ref.shape} vs {self.gen.shape}"
            )
        if not (np.all(np.isfinite(self.ref)) and np.all(np.isfinite(self.gen))):
            raise InvalidArgumentError("logits contain non-finite entries")
        if self.prompt_ids and len(self.prompt_ids) != self.ref.shape[0]:
            raise InvalidArgumentError(
                f"{len(self.prompt_ids)} prompt ids for {self.ref.shape[0]} rows"
            )

    @classmethod
    def pair_by_prompt(
        cls,
        ref_ids: list[str],
        ref_logits: np.ndarray,
        gen_ids: list[str],
        gen_logits: np.ndarray,
    ) -> "PairedLogits":
        """Align two keyed logit matrices on their shared prompt ids.

        Rows are matched by id (reference order); unmatched rows on either
        side are dropped.
        """
        gen_index = {pid: i for i, pid in enumerate(gen_ids)}
        keep = [(i, gen_index[pid], pid) for i, pid in enumerate(ref_ids) if pid in gen_index]
        if not keep:
            raise InvalidArgumentError("no shared prompt ids between the two logit sets")
        ref_rows = np.asarray(ref_logits)[[i for i, _, _ in keep]]
        gen_rows = np.asarray(gen_logits)[[j for _, j, _ in keep]]
        return cls(ref=ref_rows, gen=gen_rows, prompt_ids=tuple(pid for _, _, pid in keep))


def fit_gaussian(embeddings: EmbeddingSet) -> GaussianStats:
    """Fit a Gaussian: column means and unbiased (n-1) sample covariance.

    The covariance is symmetrised exactly as (C + C^T) / 2. Statistics are
    computed in float64 regardless of the stored embedding precision.
    """
    if embeddings.n < 2:
        raise InsufficientSampleError(
            f"need at least 2 rows to fit a covariance, got {embeddings.n}"
        )
    data = embeddings.data.astype(np.float64)
    mean = data.mean(axis=0)
    centered = data - mean
    cov = centered.T @ centered / (embeddings.n - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianStats(mean=mean, cov=cov)


def matrix_sqrt_psd(matrix: np.ndarray) -> np.ndarray:
    """Principal square root of a symmetric PSD matrix via eigendecomposition.

    Eigenvalues below 1e-10 are clamped to zero, repairing mildly indefinite
    inputs produced by near-singular covariance products.
    """
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {arr.shape}")
    if arr.size and np.max(np.abs(arr - arr.T)) > _SYMMETRY_TOL:
        raise InvalidArgumentError("matrix is not symmetric within 1e-8")
    eigvals, eigvecs = np.linalg.eigh((arr + arr.T) / 2.0)
    eigvals = np.where(eigvals < _EIGENVALUE_CLAMP, 0.0, eigvals)
    root = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    return (root + root.T) / 2.0


def frechet_distance(g1: GaussianStats, g2: GaussianStats) -> float:
    """Fréchet distance between two Gaussians.

    ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^(1/2)), evaluated through the
    symmetric product sqrt(S1)^T S2 sqrt(S1) so the eigensolver only ever
    sees symmetric matrices. Tiny negative results from rounding are
    clamped to zero.
    """
    if g1.dim != g2.dim:
        raise InvalidArgumentError(f"dimension mismatch: {g1.dim} vs {g2.dim}")
    diff = g1.mean - g2.mean
    s1_root = matrix_sqrt_psd(g1.cov)
    inner = s1_root @ g2.cov @ s1_root
    covmean_trace = float(np.trace(matrix_sqrt_psd((inner + inner.T) / 2.0)))
    value = float(diff @ diff + np.trace(g1.cov) + np.trace(g2.cov) - 2.0 * covmean_trace)
    return max(value, 0.0)


def kl_sigmoid(paired: PairedLogits, eps: float = 1e-7) -> float:
    """Mean Bernoulli KL divergence after a sigmoid over paired logits.

    Per class and clip pair, both logits pass through a sigmoid, get clamped
    to [eps, 1 - eps], and contribute p ln(p/q) + (1-p) ln((1-p)/(1-q)) with
    the reference as p. The result averages over classes, then clip pairs.
    """
    if not (0.0 < eps < 0.5):
        raise InvalidArgumentError(f"eps must be in (0, 0.5), got {eps}")
    p = np.clip(_sigmoid(paired.ref), eps, 1.0 - eps)
    q = np.clip(_sigmoid(paired.gen), eps, 1.0 - eps)
    kl = p * np.log(p / q) + (1.0 - p) * np.log((1.0 - p) / (1.0 - q))
    return float(kl.mean(axis=1).mean())


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    expx = np.exp(x[~pos])
    out[~pos] = expx / (1.0 + expx)
    return out


def psnr(ref: np.ndarray, gen: np.ndarray, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; infinite for identical inputs."""
    ref = np.asarray(ref, dtype=np.float64)
    gen = np.asarray(gen, dtype=np.float64)
    if ref.shape != gen.shape:
        raise InvalidArgumentError(f"shape mismatch: {ref.shape} vs {gen.shape}")
    if not (peak > 0):
        raise InvalidArgumentError(f"peak must be > 0, got {peak}")
    mse = float(np.mean((ref - gen) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


@dataclass(frozen=True)
class MetricReport:
    """One row of the objective-metric table; absent metrics are None."""

    system_id: str
    fad: float | None
    fd: float | None
    kld: float | None
    psnr: float | None

    COLUMNS = ("system", "FAD", "FD", "KLD", "PSNR")

    def as_row(self) -> tuple:
        return (self.system_id, self.fad, self.fd, self.kld, self.psnr)


def evaluate_corpus(
    ref_set: EmbeddingSet | None = None,
    gen_set: EmbeddingSet | None = None,
    logits: PairedLogits | None = None,
    features: tuple[np.ndarray, np.ndarray] | None = None,
    *,
    fd_ref_set: EmbeddingSet | None = None,
    fd_gen_set: EmbeddingSet | None = None,
    peak: float = 1.0,
    system_id: str = "system",
) -> MetricReport:
    """Evaluate one system, reporting whichever metrics have inputs.

    FAD comes from (ref_set, gen_set); FD from the second backbone's
    (fd_ref_set, fd_gen_set); KLD from paired logits; PSNR from paired
    feature matrices. A missing input pair yields None for that metric
    rather than an error.
    """
    fad = fd = kld = snr = None
    if ref_set is not None and gen_set is not None:
        fad = frechet_distance(fit_gaussian(ref_set), fit_gaussian(gen_set))
    if fd_ref_set is not None and fd_gen_set is not None:
        fd = frechet_distance(fit_gaussian(fd_ref_set), fit_gaussian(fd_gen_set))
    if logits is not None:
        kld = kl_sigmoid(logits)
    if features is not None:
        snr = psnr(features[0], features[1], peak=peak)
    return MetricReport(system_id=system_id, fad=fad, fd=fd, kld=kld, psnr=snr)
