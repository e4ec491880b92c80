"""MMSE equalization, interference matrices, and hard detection.

Equalizers are built per channel realization from the dense effective
channel of a detection domain.  The white-noise MMSE form is used in
both domains even though the receive chains color the noise; that
mismatch is part of the modeled receiver, not an implementation
shortcut.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .modem import AFFINE, FILTERED, EffectiveChannel

__all__ = [
    "DeltaMatrix",
    "Equalizer",
    "conditioned_delta",
    "delta_from_gram",
    "delta_matrix",
    "equalize_and_detect",
    "mmse",
]


@dataclass(frozen=True, eq=False)
class Equalizer:
    """Linear payload estimator E for one domain and noise level."""

    matrix: np.ndarray
    domain: str
    noise_var: float


@dataclass(frozen=True, eq=False)
class DeltaMatrix:
    """Square payload-to-payload matrix after equalization.

    The identity on the diagonal means perfect restoration; everything
    off the diagonal (and any diagonal deficit) is interference.
    """

    matrix: np.ndarray
    domain: str


def _solve_spd(gram: np.ndarray, rhs: np.ndarray, sigma2: float,
               context: str) -> np.ndarray:
    """Solve (gram + sigma2 I) X = rhs through a Hermitian factorization."""
    reg = gram + sigma2 * np.eye(gram.shape[0])
    try:
        factor = scipy.linalg.cho_factor(reg, check_finite=False)
    except np.linalg.LinAlgError:
        rank = np.linalg.matrix_rank(gram)
        raise ValueError(
            f"{context}: Gram matrix is rank deficient "
            f"(rank {rank} of {gram.shape[0]}) and sigma2={sigma2:g} does "
            f"not regularize it") from None
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False)


def mmse(heff: EffectiveChannel, sigma2: float) -> Equalizer:
    """MMSE equalizer E = (Heff^H Heff + sigma2 I)^-1 Heff^H.

    Computed through a positive-definite solve, never an explicit
    inverse.  With sigma2 = 0 this is the zero-forcing pseudo-inverse
    and requires a full-column-rank effective channel.
    """
    if sigma2 < 0:
        raise ValueError(f"noise variance must be >= 0, got {sigma2}")
    Hm = heff.matrix
    gram = Hm.conj().T @ Hm
    E = _solve_spd(gram, Hm.conj().T, sigma2, "mmse")
    return Equalizer(E, heff.domain, float(sigma2))


def delta_matrix(eq: Equalizer, heff: EffectiveChannel) -> DeltaMatrix:
    """End-to-end payload matrix Delta = E Heff of one realization."""
    if eq.domain != heff.domain:
        raise ValueError(f"equalizer domain {eq.domain!r} does not match "
                         f"effective channel domain {heff.domain!r}")
    return DeltaMatrix(eq.matrix @ heff.matrix, eq.domain)


def delta_from_gram(gram: np.ndarray, sigma2: float) -> np.ndarray:
    """Delta computed from the effective-channel Gram alone.

    Algebraically (gram + sigma2 I)^-1 gram, identical to composing
    :func:`mmse` with :func:`delta_matrix` but skipping the rectangular
    factors; this is the Monte-Carlo hot path.  With sigma2 = 0 a
    rank-deficient Gram falls back to a relative ridge of 1e-10 times
    the mean diagonal, keeping the zero-forcing reading while staying
    solvable.
    """
    if sigma2 < 0:
        raise ValueError(f"noise variance must be >= 0, got {sigma2}")
    try:
        return _solve_spd(gram, gram, sigma2, "delta_from_gram")
    except ValueError:
        if sigma2 > 0:
            raise
        ridge = 1e-10 * np.trace(gram).real / gram.shape[0]
        return _solve_spd(gram, gram, ridge, "delta_from_gram(ridge)")


def conditioned_delta(modem, H, domain: str, sigma2: float) -> DeltaMatrix:
    """Build the domain's effective channel for H and return its Delta."""
    if domain == AFFINE:
        heff = modem.effective_channel_affine(H)
    elif domain == FILTERED:
        heff = modem.effective_channel_filtered(H)
    else:
        raise ValueError(f"unknown domain {domain!r}")
    gram = heff.matrix.conj().T @ heff.matrix
    return DeltaMatrix(delta_from_gram(gram, sigma2), domain)


def equalize_and_detect(eq: Equalizer, received: np.ndarray,
                        alphabet: np.ndarray) -> np.ndarray:
    """Apply the equalizer and slice each coordinate to the nearest symbol."""
    received = np.asarray(received, dtype=complex)
    if received.shape != (eq.matrix.shape[1],):
        raise ValueError(f"received vector must have shape "
                         f"({eq.matrix.shape[1]},), got {received.shape}")
    soft = eq.matrix @ received
    alphabet = np.asarray(alphabet, dtype=complex)
    nearest = np.argmin(np.abs(soft[:, None] - alphabet[None, :]), axis=1)
    return alphabet[nearest]
