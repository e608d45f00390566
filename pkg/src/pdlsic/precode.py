"""Universal orthogonal precoders and the two-channel-use effective channel.

Both precoders are fixed, channel-independent orthogonal matrices whose
nonzero entries all have magnitude 1/sqrt(2).  Applied across two channel
uses, they turn the effective channel H = blockdiag(M, M) @ G into an
orthogonal design in the channel parameters: the column halves H1, H2
satisfy H1^T H1 = H2^T H2 = I for every (gamma, theta, phi), and
H^T H = [[I, -S], [-S, I]] with S symmetric and S^T S = gamma^2 I.

The constructors return the fixed column order these properties need.  It is
load-bearing (it fixes the interference cancellation order), so
:func:`permute_columns` exists for negative tests only.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, Model, SnrSpec, channel_matrix

_ORTHOGONALITY_TOL = 1e-12

_G_REAL = np.array(
    [
        [1, 0, 1, 0],
        [0, 1, 0, 1],
        [0, 1, 0, -1],
        [-1, 0, 1, 0],
    ],
    dtype=float,
) / math.sqrt(2.0)

_G_COMPLEX = np.array(
    [
        [1, 0, 0, 0, 1, 0, 0, 0],
        [0, 0, 1, 0, 0, 0, 1, 0],
        [0, -1, 0, 0, 0, -1, 0, 0],
        [0, 0, 0, -1, 0, 0, 0, -1],
        [0, 0, 1, 0, 0, 0, -1, 0],
        [-1, 0, 0, 0, 1, 0, 0, 0],
        [0, 0, 0, 1, 0, 0, 0, -1],
        [0, -1, 0, 0, 0, 1, 0, 0],
    ],
    dtype=float,
) / math.sqrt(2.0)


@dataclass(frozen=True)
class Precoder:
    """Orthogonal precoding matrix with its model tag."""

    entries: np.ndarray
    model: Model

    def __post_init__(self):
        g = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", g)
        n = 2 * self.model.dim
        if g.shape != (n, n):
            raise ValueError(f"precoder for {self.model.value} model must be {n}x{n}")
        eye = np.eye(n)
        if (
            np.abs(g @ g.T - eye).max() > _ORTHOGONALITY_TOL
            or np.abs(g.T @ g - eye).max() > _ORTHOGONALITY_TOL
        ):
            raise ValueError("precoder must be orthogonal")

    @property
    def n_streams(self) -> int:
        return self.entries.shape[1]


def precoder_real() -> Precoder:
    """The universal 4x4 precoder for the real model."""
    return Precoder(_G_REAL.copy(), Model.REAL)


def precoder_complex() -> Precoder:
    """The universal 8x8 precoder for the complex (real-equivalent) model."""
    return Precoder(_G_COMPLEX.copy(), Model.COMPLEX)


def identity_precoder(model: Model) -> Precoder:
    """No precoding.  Negative control: the result is not an orthogonal design."""
    return Precoder(np.eye(2 * model.dim), model)


def permute_columns(precoder: Precoder, order: list[int] | tuple[int, ...]) -> Precoder:
    """Column-permuted variant, for negative tests only.

    The sum-of-minima side of the capacity split is not invariant under
    stream permutations, so even swapping two columns breaks optimality.
    """
    n = precoder.n_streams
    if sorted(order) != list(range(n)):
        raise ValueError(f"order must be a permutation of 0..{n - 1}")
    return Precoder(precoder.entries[:, list(order)], precoder.model)


@dataclass(frozen=True)
class EffectiveChannel:
    """Two-use effective channel H = blockdiag(M, M) @ G with its context."""

    matrix: np.ndarray
    params: ChannelParams
    snr: SnrSpec
    model: Model

    @property
    def n_streams(self) -> int:
        return self.matrix.shape[1]

    @property
    def h1(self) -> np.ndarray:
        """Left column half (first-decoded stream group)."""
        return self.matrix[:, : self.n_streams // 2]

    @property
    def h2(self) -> np.ndarray:
        """Right column half (group decoded after cancellation)."""
        return self.matrix[:, self.n_streams // 2 :]


def effective_channel(
    params: ChannelParams, precoder: Precoder, snr: SnrSpec
) -> EffectiveChannel:
    """Build the precoded two-channel-use effective channel."""
    if params.model is not precoder.model:
        raise ValueError(
            f"model mismatch: params are {params.model.value}, "
            f"precoder is {precoder.model.value}"
        )
    m = channel_matrix(params).entries
    d = m.shape[0]
    block = np.zeros((2 * d, 2 * d))
    block[:d, :d] = m
    block[d:, d:] = m
    return EffectiveChannel(block @ precoder.entries, params, snr, params.model)


def interference_coupling(effective: EffectiveChannel) -> np.ndarray:
    """The matrix S in H^T H = [[I, -S], [-S, I]], recovered numerically.

    For the real model S has entries +-gamma*cos(2 theta), +-gamma*sin(2 theta);
    for the complex model it is extracted numerically from the product.
    """
    k = effective.n_streams // 2
    hth = effective.matrix.T @ effective.matrix
    return -hth[:k, k:]


@dataclass(frozen=True)
class OrthogonalDesignReport:
    """Numeric defects of the orthogonal-design structure of an effective channel."""

    max_dev_h1: float
    max_dev_h2: float
    coupling: np.ndarray
    symmetry_defect: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.max_dev_h1, self.max_dev_h2, self.symmetry_defect) < self.tol


def verify_orthogonal_design(
    effective: EffectiveChannel, tol: float = 1e-10
) -> OrthogonalDesignReport:
    """Certify H1^T H1 = H2^T H2 = I and recover the symmetric coupling S."""
    k = effective.n_streams // 2
    eye = np.eye(k)
    dev1 = float(np.abs(effective.h1.T @ effective.h1 - eye).max())
    dev2 = float(np.abs(effective.h2.T @ effective.h2 - eye).max())
    s = interference_coupling(effective)
    sym = float(np.abs(s - s.T).max())
    return OrthogonalDesignReport(dev1, dev2, s, sym, tol)
