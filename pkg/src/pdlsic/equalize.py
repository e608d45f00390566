"""Linear equalization statistics and the two-stage interference cancellation pipeline.

For an effective channel Y = H U + Z with E[U U^T] = SNR*I and Z white unit
Gaussian, any equalizer E splits E@H into its diagonal Lambda plus remainder
F, giving the exact second-order statistics

    K_UU = SNR * Lambda^2
    K_UZ = SNR * Lambda @ F^T
    K_ZZ = SNR * F @ F^T + E @ E^T

with zero per-stream signal-noise correlation by construction, so stream i
is an additive-noise channel of SNR (K_UU)_ii / (K_ZZ)_ii.

The SIC pipeline decodes the first stream group, subtracts its contribution
through H1, and matched-filters the remainder with H2^T.  Because H2 has
orthonormal columns for every channel realization under the universal
precoders, the second stage is exactly white with per-stream SNR equal to
the channel SNR.  Cancellation here is genie-aided (the rate claims are
conditioned on correct first-group decoding); decision-directed cancellation
lives in the Monte Carlo experiments.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .capacity import c_awgn
from .channel import SnrSpec
from .precode import EffectiveChannel

#: Conditioning guard for the direct inverses; |gamma| near 1 degrades the
#: effective channel as 1/(1-gamma^2).
CONDITION_LIMIT = 1e12


class SingularChannelError(ValueError):
    """Channel too ill-conditioned to invert (|gamma| at or beyond 1)."""


class EqualizerKind(enum.Enum):
    ZF = "ZF"
    LMMSE = "LMMSE"
    MATCHED_SECOND_STAGE = "MatchedSecondStage"


class StreamScheme(enum.Enum):
    """Schemes with closed-form per-stream SNRs under the universal precoders."""

    ZF = "ZF"
    LMMSE = "LMMSE"
    POST_SIC = "PostSIC"


@dataclass(frozen=True)
class Equalizer:
    matrix: np.ndarray
    kind: EqualizerKind


def zf_equalizer(effective: EffectiveChannel) -> Equalizer:
    """E = H^-1; exists whenever |gamma| < 1."""
    h = effective.matrix
    if np.linalg.cond(h) > CONDITION_LIMIT:
        raise SingularChannelError(
            f"effective channel condition number exceeds {CONDITION_LIMIT:g}"
        )
    return Equalizer(np.linalg.inv(h), EqualizerKind.ZF)


def lmmse_equalizer(effective: EffectiveChannel) -> Equalizer:
    """E = H^T (H H^T + I/SNR)^-1 for the channel's SNR context."""
    h = effective.matrix
    m = h.shape[0]
    s = effective.snr.snr_linear
    e = h.T @ np.linalg.inv(h @ h.T + np.eye(m) / s)
    return Equalizer(e, EqualizerKind.LMMSE)


@dataclass(frozen=True)
class StreamStats:
    """Exact post-equalization second-order statistics and per-stream SNRs."""

    k_uu: np.ndarray
    k_uz: np.ndarray
    k_zz: np.ndarray
    lam: np.ndarray  # diagonal of E @ H
    f: np.ndarray  # off-diagonal remainder of E @ H
    snr_per_stream: np.ndarray


def _statistics(h: np.ndarray, e: np.ndarray, snr_linear: float) -> StreamStats:
    eh = e @ h
    lam = np.diag(eh).copy()
    f = eh - np.diag(lam)
    k_uu = snr_linear * np.diag(lam**2)
    k_uz = snr_linear * np.diag(lam) @ f.T
    k_zz = snr_linear * (f @ f.T) + e @ e.T
    snrs = np.diag(k_uu) / np.diag(k_zz)
    return StreamStats(k_uu, k_uz, k_zz, lam, f, snrs)


def stream_statistics(effective: EffectiveChannel, equalizer: Equalizer) -> StreamStats:
    """Statistics of the equalized channel E @ Y for the given equalizer."""
    h = effective.matrix
    e = equalizer.matrix
    if e.shape[1] != h.shape[0]:
        raise ValueError(
            f"equalizer expects {e.shape[1]} observations, channel provides {h.shape[0]}"
        )
    return _statistics(h, e, effective.snr.snr_linear)


def second_stage_statistics(effective: EffectiveChannel) -> StreamStats:
    """Statistics of the post-cancellation channel H2 under its matched filter H2^T."""
    return _statistics(effective.h2, effective.h2.T, effective.snr.snr_linear)


@dataclass(frozen=True)
class SicResult:
    """Two-stage pipeline output: statistics per stage plus the equalized remainder."""

    first_stage: StreamStats
    second_stage: StreamStats
    second_stage_output: np.ndarray
    achievable_rate_bits_per_real_dim: float


def sic_pipeline(
    effective: EffectiveChannel,
    first_stage_kind: EqualizerKind,
    first_half_symbols: np.ndarray,
    received: np.ndarray,
) -> SicResult:
    """Cancel the first stream group and matched-filter the remainder.

    ``first_half_symbols`` are the true (genie) or decoded values of the
    first group; ``received`` is Y.  Both may carry a trailing batch axis.
    Returns H2^T (Y - H1 @ u_first) along with exact statistics for both
    stages; the achievable rate averages C(SNR_i) over all streams.
    """
    if first_stage_kind is EqualizerKind.ZF:
        first_eq = zf_equalizer(effective)
    elif first_stage_kind is EqualizerKind.LMMSE:
        first_eq = lmmse_equalizer(effective)
    else:
        raise ValueError("first stage must be ZF or LMMSE")
    first_stats = stream_statistics(effective, first_eq)

    k = effective.n_streams // 2
    u_first = np.asarray(first_half_symbols, float)
    y = np.asarray(received, float)
    if u_first.shape[0] != k:
        raise ValueError(f"first_half_symbols must have {k} rows, got {u_first.shape[0]}")
    if y.shape[0] != effective.matrix.shape[0]:
        raise ValueError(
            f"received must have {effective.matrix.shape[0]} rows, got {y.shape[0]}"
        )
    h1, h2 = effective.h1, effective.h2
    y_hat = h2.T @ (y - h1 @ u_first)

    second_stats = _statistics(h2, h2.T, effective.snr.snr_linear)
    snrs = np.concatenate([first_stats.snr_per_stream[:k], second_stats.snr_per_stream])
    rate = float(np.mean(c_awgn(snrs)))
    return SicResult(first_stats, second_stats, y_hat, rate)


def closed_form_stream_snr(scheme: StreamScheme, gamma: float, snr: SnrSpec) -> float:
    """Per-stream SNR under the universal precoders, independent of theta and phi.

    ZF: (1-g^2)*s;  LMMSE: ((1-g^2)*s^2 + s)/(s+1);  post-SIC: s.
    """
    if not abs(gamma) < 1.0:
        raise ValueError(f"|gamma| must be < 1, got {gamma}")
    s = snr.snr_linear
    if scheme is StreamScheme.ZF:
        return (1.0 - gamma**2) * s
    if scheme is StreamScheme.LMMSE:
        return ((1.0 - gamma**2) * s**2 + s) / (s + 1.0)
    if scheme is StreamScheme.POST_SIC:
        return s
    raise ValueError(f"unknown scheme {scheme}")
