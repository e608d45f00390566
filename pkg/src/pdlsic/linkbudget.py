"""Link-budget composition from two constituent coded-modulation schemes.

The SIC architecture needs two codes: one sees the derated SNR (1-a^2)*SNR,
the other the full SNR.  Given each code's scalar AWGN FER curve as an
externally supplied table, the end-to-end frame error rate is
f1 + f2 - f1*f2 (bounded by f1 + f2) and the overall gap to the compound
capacity is the average of the per-code dB gaps.

Tables are CSV with the exact header ``snr_db,fer,rate_bits_per_real_dim,label``
(decimal point, no thousands separators), so published waterfall tables can
be hand-transcribed.  Lookups interpolate log10(FER) linearly in SNR-dB and
never extrapolate: a query outside the table span is a hard error naming the
required SNR.  Queries within 1e-3 dB of a row snap to it, absorbing the
rounding of hand-transcribed values.
"""

import csv
import math
from dataclasses import dataclass

from .capacity import inverse_c_compound
from .channel import SnrSpec

FER_COLUMNS = ("snr_db", "fer", "rate_bits_per_real_dim", "label")

#: Queries this close to a tabulated SNR (in dB) count as that row.
SNAP_TOL_DB = 1e-3


class FerTableError(ValueError):
    """Malformed FER table (CSV format, header, or value constraints)."""


class SnrOutOfRangeError(ValueError):
    """A required lookup SNR falls outside the table span."""

    def __init__(self, required_snr_db: float, lo: float, hi: float):
        self.required_snr_db = required_snr_db
        super().__init__(
            f"required lookup SNR {required_snr_db:.4f} dB is outside the table span "
            f"[{lo:.4f}, {hi:.4f}] dB"
        )


@dataclass(frozen=True)
class FerPoint:
    snr_db: float
    fer: float
    rate_bits_per_real_dim: float
    label: str


@dataclass(frozen=True)
class FerTable:
    """Sorted FER-vs-SNR records for one coded-modulation scheme."""

    points: tuple[FerPoint, ...]
    source: str = ""

    def __post_init__(self):
        if not self.points:
            raise FerTableError("FER table has no entries")
        pts = tuple(sorted(self.points, key=lambda p: p.snr_db))
        for p in pts:
            if not 0.0 <= p.fer <= 1.0:
                raise FerTableError(f"fer must lie in [0, 1], got {p.fer}")
            if not p.rate_bits_per_real_dim > 0.0:
                raise FerTableError(f"rate must be positive, got {p.rate_bits_per_real_dim}")
        for a, b in zip(pts, pts[1:]):
            if b.snr_db - a.snr_db < SNAP_TOL_DB:
                raise FerTableError(
                    f"table rows at {a.snr_db} and {b.snr_db} dB are not distinct"
                )
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_csv(cls, path) -> "FerTable":
        try:
            with open(path, newline="") as fh:
                reader = csv.reader(fh)
                rows = [row for row in reader if row]
        except OSError as exc:
            raise FerTableError(f"cannot read FER table {path}: {exc}") from exc
        if not rows:
            raise FerTableError(f"FER table {path} is empty")
        header = tuple(cell.strip() for cell in rows[0])
        if header != FER_COLUMNS:
            raise FerTableError(
                f"FER table {path} must have header {','.join(FER_COLUMNS)}, "
                f"got {','.join(header)}"
            )
        points = []
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) != len(FER_COLUMNS):
                raise FerTableError(
                    f"{path}:{lineno}: expected {len(FER_COLUMNS)} columns, got {len(row)}"
                )
            try:
                points.append(
                    FerPoint(
                        snr_db=float(row[0]),
                        fer=float(row[1]),
                        rate_bits_per_real_dim=float(row[2]),
                        label=row[3].strip(),
                    )
                )
            except ValueError as exc:
                raise FerTableError(f"{path}:{lineno}: {exc}") from exc
        return cls(tuple(points), source=str(path))

    def _locate(self, snr_db: float) -> tuple[int, int, float]:
        """Indices of the bracketing rows and the interpolation weight."""
        snrs = [p.snr_db for p in self.points]
        for i, v in enumerate(snrs):
            if abs(snr_db - v) <= SNAP_TOL_DB:
                return i, i, 0.0
        if snr_db < snrs[0] or snr_db > snrs[-1]:
            raise SnrOutOfRangeError(snr_db, snrs[0], snrs[-1])
        hi = next(i for i, v in enumerate(snrs) if v >= snr_db)
        lo = hi - 1
        w = (snr_db - snrs[lo]) / (snrs[hi] - snrs[lo])
        return lo, hi, w

    def fer_at(self, snr_db: float) -> float:
        """FER at the given SNR, log-linear in dB between rows; no extrapolation."""
        lo, hi, w = self._locate(snr_db)
        f_lo, f_hi = self.points[lo].fer, self.points[hi].fer
        if lo == hi:
            return f_lo
        if f_lo <= 0.0 or f_hi <= 0.0:
            return (1.0 - w) * f_lo + w * f_hi
        return 10.0 ** ((1.0 - w) * math.log10(f_lo) + w * math.log10(f_hi))

    def rate_at(self, snr_db: float) -> float:
        """Code rate at the nearest tabulated row to the given SNR."""
        lo, hi, w = self._locate(snr_db)
        return self.points[hi if w > 0.5 else lo].rate_bits_per_real_dim

    @property
    def span_db(self) -> tuple[float, float]:
        return self.points[0].snr_db, self.points[-1].snr_db


def compose_gap(g1_db: float, g2_db: float) -> float:
    """Overall dB gap to the compound capacity: the mean of the per-code gaps."""
    if g1_db < 0.0 or g2_db < 0.0:
        raise ValueError("gaps must be non-negative")
    return (g1_db + g2_db) / 2.0


@dataclass(frozen=True)
class FerComposition:
    exact: float
    bound: float


def compose_fer(fer1_at_derated_snr: float, fer2_at_snr: float) -> FerComposition:
    """End-to-end FER: exact inclusion-exclusion and the additive bound."""
    f1, f2 = fer1_at_derated_snr, fer2_at_snr
    if not (0.0 <= f1 <= 1.0 and 0.0 <= f2 <= 1.0):
        raise ValueError("FER inputs must lie in [0, 1]")
    return FerComposition(exact=f1 + f2 - f1 * f2, bound=min(f1 + f2, 1.0))


def rate_split(alpha: float, snr: SnrSpec, g1_db: float, g2_db: float) -> tuple[float, float]:
    """Rates of the two required codes given their gaps to capacity.

    Code 1 carries C((1-a^2)*s/g1) bits per real dimension, code 2 C(s/g2).
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    if g1_db < 0.0 or g2_db < 0.0:
        raise ValueError("gaps must be non-negative")
    s = snr.snr_linear
    g1 = 10.0 ** (g1_db / 10.0)
    g2 = 10.0 ** (g2_db / 10.0)
    rate1 = 0.5 * math.log2(1.0 + (1.0 - alpha**2) * s / g1)
    rate2 = 0.5 * math.log2(1.0 + s / g2)
    return rate1, rate2


@dataclass(frozen=True)
class CodePoint:
    """One constituent code at its operating SNR."""

    snr_db: float
    fer: float
    rate_bits_per_real_dim: float
    gap_db: float


@dataclass(frozen=True)
class OperatingPoint:
    alpha: float
    snr: SnrSpec
    code1: CodePoint
    code2: CodePoint
    total_rate_bits_per_real_dim: float
    composed_gap_db: float
    gap_to_capacity_db: float
    fer_exact: float
    fer_bound: float

    def as_dict(self) -> dict:
        def code(c: CodePoint) -> dict:
            return {
                "snr_db": c.snr_db,
                "fer": c.fer,
                "rate_bits_per_real_dim": c.rate_bits_per_real_dim,
                "gap_db": c.gap_db,
            }

        return {
            "alpha": self.alpha,
            "snr_db": self.snr.snr_db,
            "snr_linear": self.snr.snr_linear,
            "code1": code(self.code1),
            "code2": code(self.code2),
            "total_rate_bits_per_real_dim": self.total_rate_bits_per_real_dim,
            "composed_gap_db": self.composed_gap_db,
            "gap_to_capacity_db": self.gap_to_capacity_db,
            "fer_exact": self.fer_exact,
            "fer_bound": self.fer_bound,
        }


def _implied_gap_db(snr_db: float, rate: float) -> float:
    """dB margin between the operating SNR and the Shannon SNR for the rate."""
    shannon = 2.0 ** (2.0 * rate) - 1.0
    return snr_db - 10.0 * math.log10(shannon)


def evaluate_operating_point(
    alpha: float, snr: SnrSpec, table1: FerTable, table2: FerTable
) -> OperatingPoint:
    """Compose the end-to-end operating point from the two code tables.

    Table 1 is queried at the derated SNR 10*log10((1-a^2)*s), table 2 at the
    channel SNR.  Per-code gaps invert the scalar AWGN capacity at each
    code's tabulated rate; the composed gap averages them in dB, and the
    direct gap measures the horizontal distance to the compound capacity
    curve at the combined rate.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    s = snr.snr_linear
    snr1_db = 10.0 * math.log10((1.0 - alpha**2) * s)
    snr2_db = snr.snr_db

    fer1 = table1.fer_at(snr1_db)
    rate1 = table1.rate_at(snr1_db)
    fer2 = table2.fer_at(snr2_db)
    rate2 = table2.rate_at(snr2_db)

    g1_db = _implied_gap_db(snr1_db, rate1)
    g2_db = _implied_gap_db(snr2_db, rate2)
    if min(g1_db, g2_db) < 0.0:
        raise FerTableError(
            "table claims a rate above the Shannon limit at its operating SNR"
        )
    total_rate = (rate1 + rate2) / 2.0
    fer = compose_fer(fer1, fer2)
    direct_gap = snr2_db - 10.0 * math.log10(inverse_c_compound(alpha, total_rate))
    return OperatingPoint(
        alpha=alpha,
        snr=snr,
        code1=CodePoint(snr1_db, fer1, rate1, g1_db),
        code2=CodePoint(snr2_db, fer2, rate2, g2_db),
        total_rate_bits_per_real_dim=total_rate,
        composed_gap_db=compose_gap(g1_db, g2_db),
        gap_to_capacity_db=direct_gap,
        fer_exact=fer.exact,
        fer_bound=fer.bound,
    )
