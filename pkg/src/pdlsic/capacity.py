"""Closed-form capacities, penalties, and independent max-min grid oracles.

Capacities are reported in bits per real dimension (matching the curve
normalization); the underlying two-real-dimension forms are simply twice
these values.  With C(s) = 0.5*log2(1+s):

* compound:      [C((1+a)s) + C((1-a)s)] / 2
* high-SNR form: [C((1-a^2)s) + C(s)] / 2, within O(1/s) of compound
* parallel:      2*compound - awgn  (no cancellation across polarizations)
* non-joint:     C((1-a)s)          (each polarization coded alone)

The grid searches here are deliberately brute force: they are the
independent oracles against which the closed forms are checked.  Grid
reductions run in a fixed iteration order so reports are bit-reproducible.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import SnrSpec, TWO_PI, ChannelParams, Model, channel_matrix
from .precode import Precoder

#: Default grid resolutions for the max-min searches.  201 points in beta
#: and gamma resolve the quadratic flatness near beta* = 1/2 at the 1e-9-bit
#: scale; theta and phi are periodic.
GRID_N_BETA = 201
GRID_N_GAMMA = 201
GRID_N_THETA = 256
GRID_N_PHI = 64

STAR_TOL_BITS = 1e-9


def _check_alpha(alpha: float):
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")


def c_awgn(snr):
    """Real scalar AWGN capacity C(snr) = 0.5*log2(1+snr), bits per real dimension."""
    s = np.asarray(snr, dtype=float)
    if np.any(s < 0.0):
        raise ValueError("snr must be non-negative")
    out = 0.5 * np.log2(1.0 + s)
    return float(out) if np.isscalar(snr) or s.ndim == 0 else out


def c_compound(alpha: float, snr):
    """Worst-case (compound) capacity per real dimension."""
    _check_alpha(alpha)
    s = np.asarray(snr, float)
    return (c_awgn((1.0 + alpha) * s) + c_awgn((1.0 - alpha) * s)) / 2.0


def c_compound_approx(alpha: float, snr):
    """High-SNR approximation to the compound capacity, per real dimension."""
    _check_alpha(alpha)
    return (c_awgn((1.0 - alpha**2) * np.asarray(snr, float)) + c_awgn(snr)) / 2.0


def c_parallel(alpha: float, snr):
    """Capacity under joint coding with parallel decoding, per real dimension."""
    return 2.0 * c_compound(alpha, snr) - c_awgn(snr)


def c_parallel_approx(alpha: float, snr):
    """High-SNR approximation to the parallel capacity, per real dimension."""
    _check_alpha(alpha)
    return c_awgn((1.0 - alpha**2) * np.asarray(snr, float))


def c_nonjoint(alpha: float, snr):
    """Guaranteed rate with fully separate per-polarization coding, per real dimension."""
    _check_alpha(alpha)
    return c_awgn((1.0 - alpha) * np.asarray(snr, float))


def inverse_c_compound(alpha: float, rate: float) -> float:
    """SNR at which the compound capacity (per real dimension) equals ``rate``.

    Closed form from (1+(1+a)s)(1+(1-a)s) = 2^(4*rate).
    """
    _check_alpha(alpha)
    if rate < 0.0:
        raise ValueError("rate must be non-negative")
    q = 2.0 ** (4.0 * rate) - 1.0
    a2 = 1.0 - alpha**2
    return (-1.0 + math.sqrt(1.0 + a2 * q)) / a2


@dataclass(frozen=True)
class PdlPenalties:
    """Asymptotic SNR penalties in dB relative to a PDL-free channel."""

    nonjoint_db: float
    parallel_db: float
    sic_db: float

    def as_dict(self) -> dict:
        return {
            "nonjoint": self.nonjoint_db,
            "parallel": self.parallel_db,
            "sic": self.sic_db,
        }


def penalties_db(alpha: float) -> PdlPenalties:
    """The three high-SNR penalties: 1/(1-a), 1/(1-a^2), 1/sqrt(1-a^2) in dB."""
    _check_alpha(alpha)
    return PdlPenalties(
        nonjoint_db=10.0 * math.log10(1.0 / (1.0 - alpha)),
        parallel_db=10.0 * math.log10(1.0 / (1.0 - alpha**2)),
        sic_db=10.0 * math.log10(1.0 / math.sqrt(1.0 - alpha**2)),
    )


@dataclass(frozen=True)
class CapacityReport:
    """All capacity figures for one (alpha, SNR) point, per real dimension."""

    snr: SnrSpec
    alpha: float
    c_awgn: float
    c_compound: float
    c_compound_approx: float
    c_parallel: float
    c_parallel_approx: float
    c_nonjoint: float
    penalties_db: PdlPenalties


def capacity_report(alpha: float, snr: SnrSpec) -> CapacityReport:
    s = snr.snr_linear
    return CapacityReport(
        snr=snr,
        alpha=alpha,
        c_awgn=c_awgn(s),
        c_compound=float(c_compound(alpha, s)),
        c_compound_approx=float(c_compound_approx(alpha, s)),
        c_parallel=float(c_parallel(alpha, s)),
        c_parallel_approx=float(c_parallel_approx(alpha, s)),
        c_nonjoint=float(c_nonjoint(alpha, s)),
        penalties_db=penalties_db(alpha),
    )


@dataclass(frozen=True)
class MiTerms:
    """Chain-rule mutual information terms for one channel realization, in bits."""

    gamma: float
    theta: float
    snr: float
    i_x1_y: float
    i_x2_y_given_x1: float
    i_x2_y: float

    @property
    def sum_check(self) -> float:
        """i_x1_y + i_x2_y_given_x1; must equal C((1+g)s) + C((1-g)s)."""
        return self.i_x1_y + self.i_x2_y_given_x1


def mi_terms(gamma: float, theta: float, snr: float) -> MiTerms:
    """Per-stream mutual information under balanced Gaussian inputs.

    These are exactly the sub-channel capacities induced by an LMMSE receiver
    with (for the conditional term) cancellation of the first stream.
    """
    if not abs(gamma) < 1.0:
        raise ValueError(f"|gamma| must be < 1, got {gamma}")
    total = c_awgn((1.0 + gamma) * snr) + c_awgn((1.0 - gamma) * snr)
    cond = c_awgn((1.0 - gamma * math.cos(2.0 * theta)) * snr)
    other = c_awgn((1.0 + gamma * math.cos(2.0 * theta)) * snr)
    return MiTerms(
        gamma=gamma,
        theta=theta,
        snr=snr,
        i_x1_y=total - cond,
        i_x2_y_given_x1=cond,
        i_x2_y=total - other,
    )


@dataclass(frozen=True)
class WorstCaseSearch:
    """Brute-force max-min over (beta, gamma) of the two-stream rate sum."""

    alpha: float
    snr: float
    beta_grid: np.ndarray
    gamma_star: np.ndarray  # worst gamma for each beta
    min_value: np.ndarray  # worst-case rate sum for each beta, bits per 2 real dims
    beta_star: float
    max_min_bits: float  # bits per two real dimensions
    closed_form_bits: float  # 2 * c_compound(alpha, snr)

    @property
    def all_extremal(self) -> bool:
        """True when the worst gamma sits at +-alpha for every beta."""
        if self.alpha == 0.0:
            return True
        return bool(np.all(np.isclose(np.abs(self.gamma_star), self.alpha)))

    @property
    def defect_bits(self) -> float:
        return abs(self.max_min_bits - self.closed_form_bits)


def worst_case_search(
    alpha: float,
    snr: float,
    n_beta: int = GRID_N_BETA,
    n_gamma: int = GRID_N_GAMMA,
) -> WorstCaseSearch:
    """Confirm beta* = 1/2 and extremal worst-case gamma by exhaustive search.

    The objective is C(2(1+g)*b*s) + C(2(1-g)*(1-b)*s) over the power split
    b in [0,1] and g in [-alpha, alpha]; theta drops out of the mutual
    information sum.  Runs on an inclusive lattice in fixed order.
    """
    _check_alpha(alpha)
    betas = np.linspace(0.0, 1.0, n_beta)
    gammas = np.linspace(-alpha, alpha, n_gamma)
    bb = betas[:, None]
    gg = gammas[None, :]
    objective = c_awgn(2.0 * (1.0 + gg) * bb * snr) + c_awgn(
        2.0 * (1.0 - gg) * (1.0 - bb) * snr
    )
    idx = np.argmin(objective, axis=1)
    min_value = objective[np.arange(n_beta), idx]
    gamma_star = gammas[idx]
    k = int(np.argmax(min_value))
    return WorstCaseSearch(
        alpha=alpha,
        snr=snr,
        beta_grid=betas,
        gamma_star=gamma_star,
        min_value=min_value,
        beta_star=float(betas[k]),
        max_min_bits=float(min_value[k]),
        closed_form_bits=2.0 * float(c_compound(alpha, snr)),
    )


def _single_use_batch(gammas, thetas, phis, model: Model) -> np.ndarray:
    """Stacked single-use channel matrices for flattened parameter arrays."""
    g = np.asarray(gammas, float)
    t = np.asarray(thetas, float)
    b = g.size
    c, s = np.cos(t), np.sin(t)
    rp, rm = np.sqrt(1.0 + g), np.sqrt(1.0 - g)
    if model is Model.REAL:
        m = np.empty((b, 2, 2))
        m[:, 0, 0] = rp * c
        m[:, 0, 1] = -rp * s
        m[:, 1, 0] = rm * s
        m[:, 1, 1] = rm * c
        return m
    p = np.asarray(phis, float)
    cp, sp = np.cos(p), np.sin(p)
    dr = np.zeros((b, 4, 4))
    dr[:, 0, 0] = rp * c
    dr[:, 0, 1] = -rp * s
    dr[:, 1, 0] = rm * s
    dr[:, 1, 1] = rm * c
    dr[:, 2:, 2:] = dr[:, :2, :2]
    bp = np.zeros((b, 4, 4))
    bp[:, 0, 0] = cp
    bp[:, 0, 2] = -sp
    bp[:, 1, 1] = cp
    bp[:, 1, 3] = sp
    bp[:, 2, 0] = sp
    bp[:, 2, 2] = cp
    bp[:, 3, 1] = -sp
    bp[:, 3, 3] = cp
    return dr @ bp


def successive_stream_snrs(gram: np.ndarray, snr: float) -> np.ndarray:
    """LMMSE-SIC per-stream SNRs from stacked Gram matrices H^T H.

    Stream i sees streams 1..i-1 cancelled and i+1..n as Gaussian
    interference; its SNR is the unbiased LMMSE SNR
    1/[(I + snr * Gram_i)^-1]_00 - 1 on the trailing submatrix.  With
    Gaussian inputs, C of these SNRs are exactly the chain-rule mutual
    information terms, so their sum is the full mutual information.
    """
    gram = np.asarray(gram, float)
    squeeze = gram.ndim == 2
    if squeeze:
        gram = gram[None]
    b, n, _ = gram.shape
    out = np.empty((b, n))
    for i in range(n):
        sub = gram[:, i:, i:]
        minv = np.linalg.inv(np.eye(n - i) + snr * sub)
        out[:, i] = 1.0 / minv[:, 0, 0] - 1.0
    return out[0] if squeeze else out


@dataclass(frozen=True)
class StarPropertyReport:
    """Both sides of the min-sum vs sum-min capacity split, per real dimension."""

    lhs_bits: float  # min over the grid of the rate sum
    rhs_bits: float  # sum over streams of the per-stream minima
    gap_bits: float
    min_stream_snrs: np.ndarray
    tol: float

    @property
    def passed(self) -> bool:
        return self.gap_bits < self.tol


def verify_star_property(
    precoder: Precoder,
    alpha: float,
    snr: float,
    n_gamma: int = GRID_N_GAMMA,
    n_theta: int = GRID_N_THETA,
    n_phi: int = GRID_N_PHI,
    tol: float = STAR_TOL_BITS,
) -> StarPropertyReport:
    """Grid oracle for the precoder property that SIC order does not lose rate.

    Evaluates, over the (gamma, theta[, phi]) lattice, the minimum of the sum
    of successive per-stream capacities against the sum of the per-stream
    minima.  The left side equals twice the compound capacity for any
    orthogonal precoder (chain rule); the right side reaches it only for a
    correct precoder and stream order.  gap >= 0 always, and a pass means the
    two sides agree to ``tol`` bits per real dimension.
    """
    _check_alpha(alpha)
    g_mat = precoder.entries
    n = precoder.n_streams
    d = n // 2
    gammas = np.linspace(-alpha, alpha, n_gamma)
    thetas = np.linspace(0.0, TWO_PI, n_theta, endpoint=False)
    use_phi = precoder.model is Model.COMPLEX
    phis = np.linspace(0.0, TWO_PI, n_phi, endpoint=False) if use_phi else np.array([0.0])

    lhs = np.inf
    min_snrs = np.full(n, np.inf)
    # Chunk over gamma: each chunk is the full theta x phi sheet.
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    tt, pp = tt.ravel(), pp.ravel()
    for g in gammas:
        m = _single_use_batch(np.full(tt.size, g), tt, pp, precoder.model)
        block = np.zeros((tt.size, n, n))
        block[:, :d, :d] = m
        block[:, d:, d:] = m
        h = block @ g_mat
        gram = np.swapaxes(h, 1, 2) @ h
        snrs = successive_stream_snrs(gram, snr)
        caps = 0.5 * np.log2(1.0 + snrs)
        lhs = min(lhs, float(caps.sum(axis=1).min()))
        min_snrs = np.minimum(min_snrs, snrs.min(axis=0))
    rhs = float(np.sum(0.5 * np.log2(1.0 + min_snrs)))
    return StarPropertyReport(
        lhs_bits=lhs / n,
        rhs_bits=rhs / n,
        gap_bits=(lhs - rhs) / n,
        min_stream_snrs=min_snrs,
        tol=tol,
    )


@dataclass(frozen=True)
class MeanIdentityReport:
    """Arithmetic/geometric/harmonic means of two positives and their identity defects."""

    arithmetic: float
    geometric: float
    harmonic: float
    product_defect: float  # |G^2 - A*H|
    chain_defect_bits: float  # capacity decomposition chain at the given SNR


def mean_identity_check(a: float, b: float, snr: float = 100.0) -> MeanIdentityReport:
    """Check G^2 = A*H and the high-SNR capacity decomposition it underwrites.

    The chain compares 0.5*log2(a s) + 0.5*log2(b s) against the product,
    geometric-mean, and arithmetic/harmonic-mean splits; the last equality is
    exactly the G^2 = A*H identity, which is what makes a channel-independent
    precoder possible when a + b is constant.
    """
    if a <= 0.0 or b <= 0.0:
        raise ValueError("both inputs must be positive")
    am = (a + b) / 2.0
    gm = math.sqrt(a * b)
    hm = 2.0 * a * b / (a + b)
    product_defect = abs(gm**2 - am * hm)
    t_sum = 0.5 * math.log2(a * snr) + 0.5 * math.log2(b * snr)
    t_product = 0.5 * math.log2(a * b * snr * snr)
    t_geometric = 2.0 * (0.5 * math.log2(gm * snr))
    t_mean_split = 0.5 * math.log2(am * snr) + 0.5 * math.log2(hm * snr)
    terms = (t_sum, t_product, t_geometric, t_mean_split)
    chain_defect = max(abs(x - t_sum) for x in terms)
    return MeanIdentityReport(am, gm, hm, product_defect, chain_defect)


def gram_matrix(params: ChannelParams, precoder: Precoder) -> np.ndarray:
    """H^T H of the effective channel, for cross-checks against the grid engine."""
    m = channel_matrix(params).entries
    d = m.shape[0]
    block = np.zeros((2 * d, 2 * d))
    block[:d, :d] = m
    block[d:, d:] = m
    h = block @ precoder.entries
    return h.T @ h
