"""Compound channel class for dual-polarization links with polarization-dependent loss.

A channel realization is a point (gamma, theta) or (gamma, theta, phi) picked
by nature from the compound set: gamma is the PDL parameter bounded by the
worst case alpha, theta rotates the polarizations, and phi (complex model
only) is a differential phase.  The 2x2 real model is D_gamma @ R_theta; the
complex model is handled through its 4x4 real-equivalent matrix
D_gamma @ R_theta @ B_phi, where vector entries 1-2 carry real parts and 3-4
imaginary parts.

Noise variance is fixed at 1 per real dimension everywhere; the SNR carries
all scaling.  All dB values are power dB (10*log10).  Every type here is an
immutable value and every operation a pure function, so evaluation from many
workers needs no coordination; random streams are split per worker by
deriving child seeds from (master seed, worker index), see
:func:`spawn_seeds`.
"""

import enum
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

TWO_PI = 2.0 * math.pi

#: Default lattice resolution for Grid sampling.  The gamma grid includes
#: both endpoints +-alpha (provably the worst case); theta and phi are
#: periodic so their grids exclude the right endpoint.
GRID_N_GAMMA = 41
GRID_N_THETA = 64
GRID_N_PHI = 64


class Model(enum.Enum):
    """Channel model family."""

    REAL = "real"
    COMPLEX = "complex"  # real-equivalent form of the complex 2x2 channel

    @property
    def dim(self) -> int:
        """Single-use matrix dimension (2 real, 4 complex-equivalent)."""
        return 2 if self is Model.REAL else 4

    @classmethod
    def parse(cls, name: str) -> "Model":
        key = str(name).strip().lower()
        if key in ("real",):
            return cls.REAL
        if key in ("complex", "complexequivalent"):
            return cls.COMPLEX
        raise ValueError(f"unknown channel model {name!r}")


class SampleMode(enum.Enum):
    """How channel parameters are drawn from the compound set."""

    WORST_CASE_EDGE = "WorstCaseEdge"
    UNIFORM_INTERIOR = "UniformInterior"
    GRID = "Grid"

    @classmethod
    def parse(cls, name: str) -> "SampleMode":
        for mode in cls:
            if mode.value.lower() == str(name).strip().lower():
                return mode
        raise ValueError(f"unknown sample mode {name!r}")


def pdl_db_from_alpha(alpha: float) -> float:
    """Worst-case PDL in dB, 10*log10((1+alpha)/(1-alpha))."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    return 10.0 * math.log10((1.0 + alpha) / (1.0 - alpha))


def alpha_from_pdl_db(pdl_db: float) -> float:
    """Inverse of :func:`pdl_db_from_alpha`: alpha = (r-1)/(r+1), r = 10^(dB/10)."""
    if pdl_db < 0.0:
        raise ValueError(f"pdl_db must be non-negative, got {pdl_db}")
    r = 10.0 ** (pdl_db / 10.0)
    return (r - 1.0) / (r + 1.0)


@dataclass(frozen=True)
class PdlClass:
    """The compound class: all channels with |gamma| <= alpha."""

    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")

    @property
    def pdl_db(self) -> float:
        return pdl_db_from_alpha(self.alpha)

    @classmethod
    def from_db(cls, pdl_db: float) -> "PdlClass":
        return cls(alpha_from_pdl_db(pdl_db))


@dataclass(frozen=True)
class SnrSpec:
    """Per-real-dimension signal-to-noise ratio (noise variance 1)."""

    snr_linear: float

    def __post_init__(self):
        if not self.snr_linear > 0.0:
            raise ValueError(f"snr_linear must be positive, got {self.snr_linear}")

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.snr_linear)

    @classmethod
    def from_db(cls, snr_db: float) -> "SnrSpec":
        return cls(10.0 ** (snr_db / 10.0))


@dataclass(frozen=True)
class ChannelParams:
    """One member of the compound class.

    ``theta`` and ``phi`` are normalized into [0, 2*pi); ``phi`` is present
    only for the complex model.
    """

    gamma: float
    theta: float
    phi: float | None = None

    def __post_init__(self):
        if not abs(self.gamma) < 1.0:
            raise ValueError(f"|gamma| must be < 1, got {self.gamma}")
        object.__setattr__(self, "theta", self.theta % TWO_PI)
        if self.phi is not None:
            object.__setattr__(self, "phi", self.phi % TWO_PI)

    @property
    def model(self) -> Model:
        return Model.REAL if self.phi is None else Model.COMPLEX


@dataclass(frozen=True)
class ChannelMatrix:
    """Dense single-use channel matrix with its model tag."""

    entries: np.ndarray
    model: Model


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def channel_matrix_real(params: ChannelParams) -> ChannelMatrix:
    """2x2 real-model matrix D_gamma @ R_theta."""
    if params.phi is not None:
        raise ValueError("real model takes no phi; use channel_matrix_complex")
    d = np.diag([math.sqrt(1.0 + params.gamma), math.sqrt(1.0 - params.gamma)])
    return ChannelMatrix(d @ _rotation(params.theta), Model.REAL)


def channel_matrix_complex(params: ChannelParams) -> ChannelMatrix:
    """4x4 real-equivalent matrix D_gamma @ R_theta @ B_phi.

    The layout puts real parts in entries 1-2 and imaginary parts in 3-4, so
    the matrix is the real representation [[A, -B], [B, A]] of the complex
    2x2 channel A + iB.
    """
    if params.phi is None:
        raise ValueError("complex model requires phi; use channel_matrix_real")
    rp = math.sqrt(1.0 + params.gamma)
    rm = math.sqrt(1.0 - params.gamma)
    d = np.diag([rp, rm, rp, rm])
    r2 = _rotation(params.theta)
    r = np.zeros((4, 4))
    r[:2, :2] = r2
    r[2:, 2:] = r2
    cp, sp = math.cos(params.phi), math.sin(params.phi)
    b = np.array(
        [
            [cp, 0.0, -sp, 0.0],
            [0.0, cp, 0.0, sp],
            [sp, 0.0, cp, 0.0],
            [0.0, -sp, 0.0, cp],
        ]
    )
    return ChannelMatrix(d @ r @ b, Model.COMPLEX)


def channel_matrix(params: ChannelParams) -> ChannelMatrix:
    """Dispatch on the params' model tag."""
    if params.model is Model.REAL:
        return channel_matrix_real(params)
    return channel_matrix_complex(params)


def received_snr(matrix: ChannelMatrix, snr: SnrSpec) -> float:
    """Total received signal power over total noise power under a balanced input.

    Equals trace(H^T H) * snr_linear / n, which is snr_linear for every
    (gamma, theta, phi) because the squared singular values {1+gamma,
    1-gamma} average to 1.
    """
    h = matrix.entries
    n = h.shape[0]
    return float(np.trace(h.T @ h)) * snr.snr_linear / n


def sample_params(
    pdl_class: PdlClass,
    mode: SampleMode,
    model: Model = Model.REAL,
    *,
    seed=None,
    count: int | None = None,
    n_gamma: int = GRID_N_GAMMA,
    n_theta: int = GRID_N_THETA,
    n_phi: int = GRID_N_PHI,
) -> Iterator[ChannelParams]:
    """Yield channel parameters from the compound set.

    WorstCaseEdge draws gamma from {-alpha, +alpha} with theta (and phi)
    uniform; UniformInterior draws gamma uniformly on [-alpha, alpha]; Grid
    walks the deterministic lattice (gamma outermost, phi innermost) and
    ignores ``seed`` and ``count``.  Random modes require ``count`` and are
    deterministic for a fixed seed.
    """
    alpha = pdl_class.alpha
    use_phi = model is Model.COMPLEX
    if mode is SampleMode.GRID:
        gammas = np.linspace(-alpha, alpha, n_gamma)
        thetas = np.linspace(0.0, TWO_PI, n_theta, endpoint=False)
        phis = np.linspace(0.0, TWO_PI, n_phi, endpoint=False) if use_phi else [None]
        for g in gammas:
            for t in thetas:
                for p in phis:
                    yield ChannelParams(float(g), float(t), p if p is None else float(p))
        return
    if count is None:
        raise ValueError(f"{mode.value} sampling requires count")
    rng = np.random.default_rng(seed)
    for _ in range(count):
        if mode is SampleMode.WORST_CASE_EDGE:
            g = alpha * (1.0 if rng.integers(0, 2) == 1 else -1.0)
        else:
            g = rng.uniform(-alpha, alpha)
        t = rng.uniform(0.0, TWO_PI)
        p = rng.uniform(0.0, TWO_PI) if use_phi else None
        yield ChannelParams(g, t, p)


def spawn_seeds(master_seed, n_workers: int) -> list[np.random.SeedSequence]:
    """Derive independent child seeds from (master seed, worker index)."""
    return np.random.SeedSequence(master_seed).spawn(n_workers)
