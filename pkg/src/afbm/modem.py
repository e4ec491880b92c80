"""End-to-end multicarrier modulation chain.

A frame of K·L/2 payload symbols is mapped to the edge subcarriers of
K staggered multicarrier symbols, precoded through a chirped transform
with a per-subcarrier gain compensation, synthesized on an N-point
grid, and shaped by a half-period overlapped filter bank.  The matched
receiver runs the adjoint of that composition.

Two effective-channel views of a propagation matrix H are provided:
the affine domain (after the full matched receive chain) and the
filtered time domain (after the receive filter bank only).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import channel as _channel
from .filters import (PrototypeFilter, block_toeplitz, hermite_prototype,
                      phydyas_prototype, single_symbol_matrix)
from .transforms import (ChirpParams, daft_matrix, default_c1, default_c2,
                         synthesis_block)

__all__ = [
    "AFFINE",
    "FILTERED",
    "AfbmModem",
    "CompensationVector",
    "EffectiveChannel",
    "ModulationConfig",
    "active_indices",
    "design_config",
    "mapping_matrix",
    "qam_alphabet",
    "qam_demap",
    "qam_map",
]

# Detection domain tags.
AFFINE = "affine"
FILTERED = "filtered"


@dataclass(frozen=True)
class ModulationConfig:
    """Grid and transform parameters of one modulation setup.

    Parameters
    ----------
    L : int
        Subcarriers per symbol; divisible by 4.  Half of them carry
        payload (the first and last quarter), the middle half is guard.
    K : int
        Multicarrier symbols per frame.
    N : int
        Filter-bank grid size, L < P <= N.
    P : int
        Chirped-transform size between the subcarrier and bank grids.
    overlap : float
        Filter overlap factor; 2*overlap must be an integer.
    filter_family : str
        "hermite", "phydyas" or "custom".
    c1_L, c2_L : float
        Chirp rates of the L-point stage.
    c1_P, c2_P : float
        Chirp rates of the P-point stage.  The two pre-chirp rates
        must match for the stages to cancel through the grid
        embedding; :func:`design_config` enforces that.
    xi : int
        Guard width entering the default pre-chirp rate.
    metadata : dict
        Free-form physical-grid annotations (subcarrier spacing,
        carrier frequency, ...) that do not affect the simulation.
    """

    L: int
    K: int
    N: int
    P: int
    overlap: float
    filter_family: str = "hermite"
    c1_L: float = 0.0
    c2_L: float = 0.0
    c1_P: float = 0.0
    c2_P: float = 0.0
    xi: int = 0
    metadata: dict = field(default_factory=dict, compare=False)

    def violations(self) -> list[str]:
        """All violated structural constraints, empty when valid."""
        out = []
        if not self.L < self.P <= self.N:
            out.append(f"need L < P <= N, got L={self.L} P={self.P} N={self.N}")
        if self.L % 4:
            out.append(f"L must be divisible by 4, got {self.L}")
        for name in ("L", "N", "P"):
            if getattr(self, name) % 2:
                out.append(f"{name} must be even, got {getattr(self, name)}")
        if abs(2 * self.overlap - round(2 * self.overlap)) > 1e-9:
            out.append(f"2*overlap must be an integer, got {self.overlap}")
        if self.K < 1:
            out.append(f"need K >= 1, got K={self.K}")
        if self.xi < 0:
            out.append(f"guard width must be >= 0, got {self.xi}")
        return out

    @property
    def payload_size(self) -> int:
        return self.K * self.L // 2

    @property
    def frame_size(self) -> int:
        """Transmit samples per frame, overlap*N + (K-1)*N/2."""
        return round(self.overlap * self.N) + (self.K - 1) * self.N // 2


_DEFAULT_OVERLAP = {"hermite": 1.5, "phydyas": 4.0}


def design_config(L: int, K: int, N: int, P: int,
                  filter_family: str = "hermite",
                  overlap: float | None = None,
                  f_max: float = 2.0, xi: int = 0,
                  metadata: dict | None = None) -> ModulationConfig:
    """Populate a configuration with the default chirp rates.

    The pre-chirp rate follows the delay-Doppler separability default
    for the P-point stage and is shared with the L-point stage, so the
    two stages cancel exactly through the grid embedding.  The
    post-chirp rates use the 1/(pi n^2) convention per stage.
    """
    if overlap is None:
        try:
            overlap = _DEFAULT_OVERLAP[filter_family]
        except KeyError:
            raise ValueError(f"no default overlap for family "
                             f"{filter_family!r}; pass overlap explicitly")
    c1 = default_c1(f_max, xi, P)
    return ModulationConfig(
        L=L, K=K, N=N, P=P, overlap=overlap, filter_family=filter_family,
        c1_L=c1, c2_L=default_c2(L), c1_P=c1, c2_P=default_c2(P),
        xi=xi, metadata=metadata or {})


@dataclass(frozen=True, eq=False)
class CompensationVector:
    """Per-subcarrier gain restoring orthogonality through the bank.

    ``entries`` is the length-L gain vector: 1/sqrt(gram_diag) on the
    active edge subcarriers and exactly zero on the guard band.
    ``gram_diag`` is the real diagonal of the synthesis-bank Gram the
    gains are computed from.
    """

    entries: np.ndarray
    gram_diag: np.ndarray


@dataclass(frozen=True, eq=False)
class EffectiveChannel:
    """Dense end-to-end channel matrix in a declared detection domain."""

    matrix: np.ndarray
    domain: str

    def __post_init__(self):
        if self.domain not in (AFFINE, FILTERED):
            raise ValueError(f"unknown domain {self.domain!r}")

    @property
    def dims(self) -> tuple[int, int]:
        return self.matrix.shape


def active_indices(L: int) -> np.ndarray:
    """Payload subcarrier indices: the first and last L/4."""
    if L % 4:
        raise ValueError(f"L must be divisible by 4, got {L}")
    q = L // 4
    return np.concatenate([np.arange(q), np.arange(3 * q, L)])


def mapping_matrix(L: int, K: int) -> np.ndarray:
    """LK x KL/2 selection matrix scattering payload onto edge subcarriers.

    Column j of each per-symbol block has a single 1 in the row of the
    j-th active subcarrier; the middle L/2 subcarriers receive nothing.
    The matrix has orthonormal columns by construction.
    """
    act = active_indices(L)
    single = np.zeros((L, L // 2))
    single[act, np.arange(L // 2)] = 1.0
    out = np.zeros((L * K, K * L // 2))
    for k in range(K):
        out[k * L:(k + 1) * L, k * L // 2:(k + 1) * L // 2] = single
    return out


class AfbmModem:
    """Precomputed operators of one modulation configuration.

    Builds the chirped transforms, the synthesis block, the filter
    bank and the gain compensation once, then exposes fast per-symbol
    modulate/demodulate paths along with their dense matrix oracles.

    The filter bank inside the modem carries gain sqrt(N/2) on top of
    the unit-energy prototype.  At half-symbol stride the unit bank is
    a tight frame with bound 2/N, so this gain makes analysis-synthesis
    near-unit: transmit columns come out unit norm and the filtered
    Gram of an identity channel sits near the identity, putting both
    detection domains on the same noise scale.
    """

    def __init__(self, cfg: ModulationConfig,
                 prototype: PrototypeFilter | None = None):
        problems = cfg.violations()
        if problems:
            raise ValueError("; ".join(problems))
        if prototype is None:
            if cfg.filter_family == "hermite":
                prototype = hermite_prototype(cfg.N, cfg.overlap)
            elif cfg.filter_family == "phydyas":
                prototype = phydyas_prototype(cfg.N, cfg.overlap)
            else:
                raise ValueError(f"family {cfg.filter_family!r} needs an "
                                 f"explicit prototype")
        if prototype.fft_size != cfg.N or prototype.overlap != cfg.overlap:
            raise ValueError("prototype grid does not match configuration")
        self.cfg = cfg
        self.prototype = prototype
        self._bank_gain = np.sqrt(cfg.N / 2)

        self._w_L = daft_matrix(ChirpParams(cfg.c1_L, cfg.c2_L, cfg.L))
        self._synthesis = synthesis_block(cfg)
        gt = single_symbol_matrix(prototype)
        self._bank_single = self._bank_gain * gt
        # Diagonal of the scaled bank Gram; exact because each bank row
        # touches one column.
        bank_diag = np.sum(self._bank_single ** 2, axis=0)

        composed = self._synthesis @ self._w_L
        gram_diag = bank_diag @ (np.abs(composed) ** 2)
        self._gram_diag = gram_diag
        act = active_indices(cfg.L)
        if np.any(gram_diag[act] <= 0):
            raise ValueError("bank Gram vanishes on an active subcarrier")
        comp = np.zeros(cfg.L)
        comp[act] = 1.0 / np.sqrt(gram_diag[act])
        self._comp = comp
        self._active = act

        # Per-symbol transmit block: bank o synthesis o precoder,
        # restricted to the active columns.  Columns are unit norm.
        self._tx_block = self._bank_single @ (composed * comp[None, :])[:, act]
        self._modulation_matrix: np.ndarray | None = None
        self._filter_matrix: np.ndarray | None = None

    # ------------------------------------------------------------ chain parts

    def gram_diagonal(self) -> np.ndarray:
        """Real diagonal of the composed synthesis-bank Gram, length L."""
        return self._gram_diag.copy()

    def compensation_vector(self) -> CompensationVector:
        return CompensationVector(entries=self._comp.copy(),
                                  gram_diag=self._gram_diag.copy())

    def precoder(self) -> np.ndarray:
        """L x L precoding matrix: chirped transform times the gain vector.

        The middle L/2 columns are exactly zero, mirroring the guard
        band of the subcarrier mapping.
        """
        return self._w_L * self._comp[None, :]

    def synthesis_matrix(self) -> np.ndarray:
        """The N x L synthesis isometry between the P-stage and the bank grid."""
        return self._synthesis.copy()

    # ------------------------------------------------------------- fast paths

    def modulate(self, x: np.ndarray) -> np.ndarray:
        """Transmit frame for a payload vector of length K*L/2.

        Linear in the payload; per-symbol blocks are overlap-added at
        half-period stride.
        """
        cfg = self.cfg
        x = np.asarray(x, dtype=complex)
        if x.shape != (cfg.payload_size,):
            raise ValueError(f"payload must have shape ({cfg.payload_size},), "
                             f"got {x.shape}")
        h = cfg.N // 2
        blocks = self._tx_block @ x.reshape(cfg.K, cfg.L // 2).T
        s = np.zeros(cfg.frame_size, dtype=complex)
        span = self._tx_block.shape[0]
        for k in range(cfg.K):
            s[k * h:k * h + span] += blocks[:, k]
        return s

    def matched_demodulate(self, r: np.ndarray) -> np.ndarray:
        """Adjoint of :meth:`modulate`: bank analysis, synthesis adjoint,
        compensated inverse transform, guard removal."""
        cfg = self.cfg
        r = np.asarray(r, dtype=complex)
        if r.shape != (cfg.frame_size,):
            raise ValueError(f"frame must have shape ({cfg.frame_size},), "
                             f"got {r.shape}")
        h = cfg.N // 2
        span = self._tx_block.shape[0]
        windows = np.stack([r[k * h:k * h + span] for k in range(cfg.K)],
                           axis=1)
        return (self._tx_block.conj().T @ windows).T.reshape(-1)

    def filtered_receive(self, r: np.ndarray) -> np.ndarray:
        """Receive bank analysis only: length-NK vector of per-symbol
        filtered grids, the input of filtered-domain detection."""
        cfg = self.cfg
        r = np.asarray(r, dtype=complex)
        if r.shape != (cfg.frame_size,):
            raise ValueError(f"frame must have shape ({cfg.frame_size},), "
                             f"got {r.shape}")
        h = cfg.N // 2
        span = self._bank_single.shape[0]
        out = np.empty(cfg.N * cfg.K, dtype=complex)
        for k in range(cfg.K):
            out[k * cfg.N:(k + 1) * cfg.N] = \
                self._bank_single.T @ r[k * h:k * h + span]
        return out

    def received_noise_power(self, domain: str, sigma2: float) -> float:
        """Per-branch noise variance after the receive front end.

        White noise of power ``sigma2`` on the frame passes through the
        matched demodulator (affine domain) or the analysis bank
        (filtered domain); either front end scales each output branch by
        its column energy.  This is the variance a white-noise equalizer
        should regularize with.

        Parameters
        ----------
        domain : str
            ``AFFINE`` or ``FILTERED``.
        sigma2 : float
            Noise variance per frame sample.

        Returns
        -------
        float
            Noise variance per receive branch.
        """
        if sigma2 < 0:
            raise ValueError("noise power must be nonnegative")
        if domain == AFFINE:
            front = self._tx_block
        elif domain == FILTERED:
            front = self._bank_single
        else:
            raise ValueError(f"unknown domain {domain!r}")
        return float(sigma2 * np.mean(np.sum(np.abs(front) ** 2, axis=0)))

    # ---------------------------------------------------------- dense oracles

    def modulation_matrix(self) -> np.ndarray:
        """Dense frame_size x KL/2 transmit matrix (cached)."""
        if self._modulation_matrix is None:
            cfg = self.cfg
            h = cfg.N // 2
            span, width = self._tx_block.shape
            S = np.zeros((cfg.frame_size, cfg.payload_size), dtype=complex)
            for k in range(cfg.K):
                S[k * h:k * h + span, k * width:(k + 1) * width] += \
                    self._tx_block
            self._modulation_matrix = S
        return self._modulation_matrix

    def filter_matrix(self) -> np.ndarray:
        """Dense frame_size x NK transmit filter bank with the modem gain
        (cached)."""
        if self._filter_matrix is None:
            self._filter_matrix = self._bank_gain * \
                block_toeplitz(self.prototype, self.cfg.K)
        return self._filter_matrix

    # ------------------------------------------------------ effective channels

    def _propagated(self, H) -> np.ndarray:
        """H applied to every column of the modulation matrix."""
        S = self.modulation_matrix()
        if isinstance(H, np.ndarray):
            if H.shape != (self.cfg.frame_size,) * 2:
                raise ValueError(f"channel matrix must be "
                                 f"{self.cfg.frame_size} square, "
                                 f"got {H.shape}")
            return H @ S
        return _channel.apply_channel(H, S)

    def effective_channel_affine(self, H) -> EffectiveChannel:
        """Payload-to-payload matrix seen by affine-domain detection.

        ``H`` may be a dense frame_size-square matrix or a channel
        realization (applied sparsely).  The result is the matched
        receive chain composed with the propagated transmit chain,
        restricted to payload coordinates on both sides.
        """
        HS = self._propagated(H)
        return EffectiveChannel(self.modulation_matrix().conj().T @ HS,
                                AFFINE)

    def effective_channel_filtered(self, H) -> EffectiveChannel:
        """Payload-to-filtered-grid matrix seen by filtered-domain detection.

        Rows live on the NK-point receive bank output; columns are the
        payload coordinates.  With an identity channel this matrix is
        a near isometry.
        """
        HS = self._propagated(H)
        cfg = self.cfg
        h = cfg.N // 2
        span = self._bank_single.shape[0]
        out = np.empty((cfg.N * cfg.K, cfg.payload_size), dtype=complex)
        for k in range(cfg.K):
            out[k * cfg.N:(k + 1) * cfg.N] = \
                self._bank_single.T @ HS[k * h:k * h + span]
        return EffectiveChannel(out, FILTERED)


# ------------------------------------------------------------------- QAM maps


def _gray_levels(bits_per_axis: int) -> tuple[np.ndarray, np.ndarray]:
    """PAM levels indexed by bit pattern, plus the inverse lookup.

    Position i (amplitude order) carries pattern i ^ (i >> 1), the
    binary-reflected Gray code, so adjacent levels differ in one bit.
    """
    m = 1 << bits_per_axis
    positions = np.arange(m)
    patterns = positions ^ (positions >> 1)
    level_of_pattern = np.empty(m, dtype=float)
    level_of_pattern[patterns] = 2.0 * positions - (m - 1)
    pattern_of_position = patterns
    return level_of_pattern, pattern_of_position


def _qam_params(order: int) -> tuple[int, float]:
    bits = int(round(np.log2(order)))
    if 1 << bits != order or bits % 2:
        raise ValueError(f"order must be an even power of 2, got {order}")
    # Mean symbol energy of the unnormalized square constellation.
    m = 1 << (bits // 2)
    energy = 2.0 * (m * m - 1) / 3.0
    return bits, np.sqrt(energy)


def qam_alphabet(order: int = 4) -> np.ndarray:
    """Unit-average-energy Gray-mapped square QAM alphabet.

    Entry v is the symbol of bit pattern v, first half of the bits on
    the in-phase axis, second half on the quadrature axis.
    """
    bits, scale = _qam_params(order)
    half = bits // 2
    level, _ = _gray_levels(half)
    v = np.arange(order)
    re = level[v >> half]
    im = level[v & ((1 << half) - 1)]
    return (re + 1j * im) / scale


def qam_map(bits: np.ndarray, order: int = 4) -> np.ndarray:
    """Map a 0/1 vector to constellation symbols, most significant bit first."""
    bits = np.asarray(bits, dtype=np.int64)
    n, _ = _qam_params(order)
    if bits.size % n:
        raise ValueError(f"bit count must be divisible by {n}, "
                         f"got {bits.size}")
    groups = bits.reshape(-1, n)
    values = groups @ (1 << np.arange(n - 1, -1, -1, dtype=np.int64))
    return qam_alphabet(order)[values]


def qam_demap(symbols: np.ndarray, order: int = 4) -> np.ndarray:
    """Nearest-neighbor hard demapping back to bits.

    Square QAM factors over the two axes, so per-axis nearest level is
    the exact nearest neighbor; round trip with :func:`qam_map` is the
    identity in the noiseless case.
    """
    symbols = np.asarray(symbols, dtype=complex)
    bits, scale = _qam_params(order)
    half = bits // 2
    level, pattern_of_position = _gray_levels(half)
    m = 1 << half

    def axis_patterns(values):
        # Nearest odd level by rounding the scaled coordinate.
        pos = np.clip(np.round((values * scale + (m - 1)) / 2.0), 0, m - 1)
        return pattern_of_position[pos.astype(np.int64)]

    v = (axis_patterns(symbols.real) << half) | axis_patterns(symbols.imag)
    shifts = np.arange(bits - 1, -1, -1, dtype=np.int64)
    return ((v[:, None] >> shifts[None, :]) & 1).reshape(-1)
