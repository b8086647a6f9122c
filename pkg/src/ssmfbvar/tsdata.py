"""Mixed-frequency series, transformations, panels and vintages.

Calendar periods are month ordinals ``year * 12 + (month - 1)``. Quarterly
observations live at the last month of their quarter. Missing values are
tracked by an explicit boolean ``observed`` mask; the value slot of a
missing entry holds NaN only so that accidental arithmetic is poisoned.
"""

from __future__ import annotations

import configparser
import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DataError

MONTHLY = "monthly"
QUARTERLY = "quarterly"

_MONTH_RE = re.compile(r"^\s*(\d{4})-(\d{1,2})\s*$")
_QUARTER_RE = re.compile(r"^\s*(\d{4})\s*[Qq]([1-4])\s*$")
_MISSING_TOKENS = {"", "na", "nan", "n/a", ".", "null", "none", "#n/a"}


def month_ordinal(year: int, month: int) -> int:
    if not 1 <= month <= 12:
        raise DataError(f"month out of range: {month}")
    return year * 12 + (month - 1)


def ordinal_to_ym(ordinal: int) -> tuple[int, int]:
    return int(ordinal) // 12, int(ordinal) % 12 + 1


def format_month(ordinal: int) -> str:
    y, m = ordinal_to_ym(ordinal)
    return f"{y:04d}-{m:02d}"


def format_quarter(ordinal: int) -> str:
    y, m = ordinal_to_ym(ordinal)
    return f"{y:04d}Q{(m - 1) // 3 + 1}"


def is_quarter_end(ordinal: int | np.ndarray) -> bool | np.ndarray:
    return np.asarray(ordinal) % 3 == 2 if isinstance(ordinal, np.ndarray) else int(ordinal) % 3 == 2


def quarter_end_of(ordinal: int) -> int:
    """Month ordinal of the last month of the quarter containing ``ordinal``."""
    return int(ordinal) + (2 - int(ordinal) % 3)


def parse_period(text: str) -> tuple[int, str]:
    """Parse ``YYYY-MM`` or ``YYYYQn`` into ``(month ordinal, frequency)``."""
    m = _MONTH_RE.match(text)
    if m:
        return month_ordinal(int(m.group(1)), int(m.group(2))), MONTHLY
    q = _QUARTER_RE.match(text)
    if q:
        return month_ordinal(int(q.group(1)), 3 * int(q.group(2))), QUARTERLY
    raise DataError(f"unrecognised period {text!r}; expected YYYY-MM or YYYYQn")


def as_month(value: int | str) -> int:
    if isinstance(value, (int, np.integer)):
        return int(value)
    return parse_period(value)[0]


@dataclass(frozen=True)
class Series:
    id: str
    frequency: str
    dates: np.ndarray
    values: np.ndarray
    observed: np.ndarray

    def __post_init__(self) -> None:
        if self.frequency not in (MONTHLY, QUARTERLY):
            raise DataError(f"{self.id}: unknown frequency {self.frequency!r}")
        dates = np.asarray(self.dates, dtype=np.int64).copy()
        values = np.asarray(self.values, dtype=float).copy()
        observed = np.asarray(self.observed, dtype=bool).copy()
        if not (dates.shape == values.shape == observed.shape) or dates.ndim != 1:
            raise DataError(f"{self.id}: dates, values and mask must be 1-d and equally long")
        if dates.size > 1 and np.any(np.diff(dates) <= 0):
            raise DataError(f"{self.id}: dates must be strictly increasing")
        if self.frequency == QUARTERLY and np.any(dates % 3 != 2):
            raise DataError(f"{self.id}: quarterly dates must fall on quarter-end months")
        if np.any(~np.isfinite(values[observed])):
            raise DataError(f"{self.id}: observed values must be finite")
        values[~observed] = np.nan
        for arr in (dates, values, observed):
            arr.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "observed", observed)

    def __len__(self) -> int:
        return int(self.dates.size)

    @property
    def step(self) -> int:
        return 1 if self.frequency == MONTHLY else 3

    def last_observed(self) -> int | None:
        idx = np.flatnonzero(self.observed)
        return int(self.dates[idx[-1]]) if idx.size else None

    @classmethod
    def from_pairs(cls, id: str, frequency: str, pairs: Iterable[tuple[int | str, float | None]]) -> "Series":
        dates, values, observed = [], [], []
        for date, value in pairs:
            dates.append(as_month(date))
            ok = value is not None and not (isinstance(value, float) and math.isnan(value))
            values.append(float(value) if ok else np.nan)
            observed.append(ok)
        order = np.argsort(dates, kind="stable")
        return cls(id, frequency, np.asarray(dates)[order], np.asarray(values)[order], np.asarray(observed)[order])


@dataclass(frozen=True)
class TransformSpec:
    kind: str = "none"
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("none", "log_diff"):
            raise ConfigurationError(f"unknown transform kind {self.kind!r}")
        if not self.scale > 0:
            raise ConfigurationError("transform scale must be positive")

    @classmethod
    def annualized_growth(cls, frequency: str) -> "TransformSpec":
        return cls("log_diff", 1200.0 if frequency == MONTHLY else 400.0)


@dataclass(frozen=True)
class PublicationPattern:
    """Per-series publication delay in months, relative to the preceding month."""

    delays: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for key, value in self.delays.items():
            if int(value) != value or value < 0:
                raise ConfigurationError(f"delay for {key!r} must be a non-negative integer")
        object.__setattr__(self, "delays", dict(self.delays))

    def delay(self, series_id: str) -> int:
        return int(self.delays.get(series_id, 0))


def load_series_csv(
    path: str | Path,
    *,
    series_id: str | None = None,
    date_column: str = "date",
    value_column: str = "value",
    frequency: str | None = None,
) -> Series:
    """Read a two-column ``date,value`` CSV into a :class:`Series`.

    Frequency is inferred from the date format unless given. Values that do
    not parse as numbers become missing.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    rows: list[tuple[int, float | None]] = []
    freqs: set[str] = set()
    seen: set[int] = set()
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or date_column not in reader.fieldnames or value_column not in reader.fieldnames:
            raise DataError(f"{path}: header must contain {date_column!r} and {value_column!r}")
        for lineno, row in enumerate(reader, start=2):
            raw_date = row[date_column] or ""
            try:
                ordinal, freq = parse_period(raw_date)
            except DataError as exc:
                raise DataError(f"{path}, row {lineno}: malformed date {raw_date!r}") from exc
            if ordinal in seen:
                raise DataError(f"{path}, row {lineno}: duplicate date {raw_date.strip()}")
            seen.add(ordinal)
            freqs.add(freq)
            raw = (row[value_column] or "").strip()
            value: float | None
            if raw.lower() in _MISSING_TOKENS:
                value = None
            else:
                try:
                    value = float(raw)
                except ValueError:
                    value = None
                if value is not None and not math.isfinite(value):
                    value = None
            rows.append((ordinal, value))
    if len(freqs) > 1:
        raise DataError(f"{path}: mixed date formats")
    freq = frequency or (freqs.pop() if freqs else MONTHLY)
    return Series.from_pairs(series_id or path.stem, freq, rows)


def apply_transform(s: Series, spec: TransformSpec) -> Series:
    """Apply ``scale * (ln x_t - ln x_{t-1})`` between consecutive periods."""
    if spec.kind == "none":
        return s
    if len(s) < 2:
        raise DataError(f"{s.id}: at least two observations needed for differencing")
    bad = s.observed & ~(s.values > 0)
    if np.any(bad):
        first = int(s.dates[np.flatnonzero(bad)[0]])
        raise DataError(f"{s.id}: non-positive level at {format_month(first)} under log_diff")
    logs = np.where(s.observed, np.log(np.where(s.observed, s.values, 1.0)), np.nan)
    contiguous = np.diff(s.dates) == s.step
    ok = s.observed[1:] & s.observed[:-1] & contiguous
    out = np.where(ok, spec.scale * (logs[1:] - np.where(ok, logs[:-1], 0.0)), np.nan)
    return Series(s.id, s.frequency, s.dates[1:], out, ok)


def invert_transform(s: Series, spec: TransformSpec, initial_level: float) -> np.ndarray:
    """Rebuild levels from a fully observed transformed series."""
    if spec.kind == "none":
        return np.asarray(s.values, dtype=float).copy()
    if not np.all(s.observed):
        raise DataError(f"{s.id}: cannot invert a transform across missing values")
    steps = np.concatenate([[0.0], np.cumsum(s.values / spec.scale)])
    return initial_level * np.exp(steps)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MixedPanel:
    """Monthly and quarterly series on a common monthly index.

    ``y_monthly``/``y_quarterly`` are ``(T, n_m)`` and ``(T, n_q)`` with
    matching boolean masks. ``freq`` is ``"M"`` for the usual mixed panel and
    ``"Q"`` for a pre-aggregated single-frequency quarterly panel whose rows
    are consecutive quarters (all series then sit in the monthly block).
    """

    dates: np.ndarray
    monthly_ids: tuple[str, ...]
    quarterly_ids: tuple[str, ...]
    y_monthly: np.ndarray
    obs_monthly: np.ndarray
    y_quarterly: np.ndarray
    obs_quarterly: np.ndarray
    freq: str = "M"

    def __post_init__(self) -> None:
        T = np.asarray(self.dates).size
        ym = np.asarray(self.y_monthly, dtype=float).reshape(T, len(self.monthly_ids))
        yq = np.asarray(self.y_quarterly, dtype=float).reshape(T, len(self.quarterly_ids))
        om = np.asarray(self.obs_monthly, dtype=bool).reshape(ym.shape)
        oq = np.asarray(self.obs_quarterly, dtype=bool).reshape(yq.shape)
        dates = np.asarray(self.dates, dtype=np.int64)
        step = 1 if self.freq == "M" else 3
        if T > 1 and np.any(np.diff(dates) != step):
            raise DataError("panel dates must be consecutive periods")
        if self.freq == "Q" and (self.quarterly_ids or np.any(dates % 3 != 2)):
            raise DataError("a quarterly panel keeps all series in the high-frequency block")
        if oq.any() and np.any(dates[np.flatnonzero(oq.any(axis=1))] % 3 != 2):
            raise DataError("quarterly observations must sit at quarter-end months")
        if np.any(~np.isfinite(ym[om])) or np.any(~np.isfinite(yq[oq])):
            raise DataError("observed values must be finite")
        ym = np.where(om, ym, np.nan)
        yq = np.where(oq, yq, np.nan)
        object.__setattr__(self, "dates", _frozen(dates))
        object.__setattr__(self, "monthly_ids", tuple(self.monthly_ids))
        object.__setattr__(self, "quarterly_ids", tuple(self.quarterly_ids))
        for name, arr in (("y_monthly", ym), ("obs_monthly", om), ("y_quarterly", yq), ("obs_quarterly", oq)):
            object.__setattr__(self, name, _frozen(arr))

    @property
    def T(self) -> int:
        return int(self.dates.size)

    @property
    def n_m(self) -> int:
        return len(self.monthly_ids)

    @property
    def n_q(self) -> int:
        return len(self.quarterly_ids)

    @property
    def n(self) -> int:
        return self.n_m + self.n_q

    @property
    def ids(self) -> tuple[str, ...]:
        return self.monthly_ids + self.quarterly_ids

    @property
    def T_b(self) -> int:
        """Number of leading rows in which every monthly series is observed."""
        full = self.obs_monthly.all(axis=1)
        if full.all():
            return self.T
        return int(np.argmin(full))

    @property
    def last_date(self) -> int:
        return int(self.dates[-1])

    def index_of(self, date: int | str) -> int:
        d = as_month(date)
        pos = np.flatnonzero(self.dates == d)
        if pos.size == 0:
            raise DataError(f"{format_month(d)} is not in the panel index")
        return int(pos[0])

    def series(self, series_id: str) -> Series:
        if series_id in self.monthly_ids:
            j = self.monthly_ids.index(series_id)
            freq = MONTHLY if self.freq == "M" else QUARTERLY
            return Series(series_id, freq, self.dates, self.y_monthly[:, j], self.obs_monthly[:, j])
        j = self.quarterly_ids.index(series_id)
        keep = self.dates % 3 == 2
        return Series(series_id, QUARTERLY, self.dates[keep], self.y_quarterly[keep, j], self.obs_quarterly[keep, j])

    def value(self, series_id: str, date: int) -> float | None:
        """Observed value at a date, or ``None``."""
        if series_id in self.monthly_ids:
            j, y, o = self.monthly_ids.index(series_id), self.y_monthly, self.obs_monthly
        elif series_id in self.quarterly_ids:
            j, y, o = self.quarterly_ids.index(series_id), self.y_quarterly, self.obs_quarterly
        else:
            return None
        pos = np.flatnonzero(self.dates == date)
        if pos.size == 0 or not o[pos[0], j]:
            return None
        return float(y[pos[0], j])

    def select(self, monthly: Sequence[str] | None = None, quarterly: Sequence[str] | None = None) -> "MixedPanel":
        mon = list(self.monthly_ids if monthly is None else monthly)
        qtr = list(self.quarterly_ids if quarterly is None else quarterly)
        mi = [self.monthly_ids.index(s) for s in mon]
        qi = [self.quarterly_ids.index(s) for s in qtr]
        return MixedPanel(self.dates, tuple(mon), tuple(qtr), self.y_monthly[:, mi], self.obs_monthly[:, mi],
                          self.y_quarterly[:, qi], self.obs_quarterly[:, qi], self.freq)

    def head(self, rows: int) -> "MixedPanel":
        rows = max(0, min(rows, self.T))
        return MixedPanel(self.dates[:rows], self.monthly_ids, self.quarterly_ids, self.y_monthly[:rows],
                          self.obs_monthly[:rows], self.y_quarterly[:rows], self.obs_quarterly[:rows], self.freq)

    def balanced(self) -> "MixedPanel":
        """Rows up to ``T_b``: what a single-frequency monthly model would use."""
        return self.head(self.T_b)


def assemble_panel(monthly: Sequence[Series], quarterly: Sequence[Series] = ()) -> MixedPanel:
    for s in monthly:
        if s.frequency != MONTHLY:
            raise DataError(f"{s.id} is not monthly")
    for s in quarterly:
        if s.frequency != QUARTERLY:
            raise DataError(f"{s.id} is not quarterly")
    all_series = list(monthly) + list(quarterly)
    if not all_series:
        raise DataError("no series supplied")
    ids = [s.id for s in all_series]
    if len(set(ids)) != len(ids):
        raise DataError("series ids must be unique")
    spans = []
    for s in all_series:
        obs_dates = s.dates[s.observed]
        if obs_dates.size == 0:
            raise DataError(f"{s.id} has no observations")
        lo = int(obs_dates[0]) - (2 if s.frequency == QUARTERLY else 0)
        spans.append((lo, int(obs_dates[-1])))
    if max(lo for lo, _ in spans) > min(hi for _, hi in spans):
        raise DataError("series samples do not overlap")
    start = min(lo for lo, _ in spans)
    end = max(hi for _, hi in spans)
    dates = np.arange(start, end + 1)
    T = dates.size

    def place(series: Sequence[Series]) -> tuple[np.ndarray, np.ndarray]:
        y = np.full((T, len(series)), np.nan)
        o = np.zeros((T, len(series)), dtype=bool)
        for j, s in enumerate(series):
            keep = (s.dates >= start) & (s.dates <= end) & s.observed
            rows = s.dates[keep] - start
            y[rows, j] = s.values[keep]
            o[rows, j] = True
        return y, o

    ym, om = place(monthly)
    yq, oq = place(quarterly)
    return MixedPanel(dates, tuple(s.id for s in monthly), tuple(s.id for s in quarterly), ym, om, yq, oq)


def truncate_to_vintage(panel: MixedPanel, asof: int | str, pattern: PublicationPattern) -> MixedPanel:
    """Information set on a day within month ``asof``.

    A delay of zero means the preceding month is available; each series is
    cut after ``asof - 1 - delay``. The index ends at ``asof - 1``.
    """
    asof = as_month(asof)
    if asof <= int(panel.dates[0]):
        raise DataError(f"{format_month(asof)} precedes the panel start")
    last = asof - 1
    keep_rows = panel.dates <= last
    dates = panel.dates[keep_rows]

    def cut(ids: Sequence[str], obs: np.ndarray) -> np.ndarray:
        o = obs[keep_rows].copy()
        for j, sid in enumerate(ids):
            o[dates > last - pattern.delay(sid), j] = False
        return o

    om = cut(panel.monthly_ids, panel.obs_monthly)
    oq = cut(panel.quarterly_ids, panel.obs_quarterly)
    return MixedPanel(dates, panel.monthly_ids, panel.quarterly_ids, panel.y_monthly[keep_rows], om,
                      panel.y_quarterly[keep_rows], oq, panel.freq)


def to_quarterly(panel: MixedPanel) -> MixedPanel:
    """Pre-aggregate a mixed panel to a single-frequency quarterly panel.

    Monthly series become the mean of their three months (missing unless all
    three are observed); quarterly series are taken as published. All series
    end up in the high-frequency block of a ``freq="Q"`` panel.
    """
    if panel.freq != "M":
        raise DataError("panel is already quarterly")
    ends = panel.dates[(panel.dates % 3 == 2)]
    ends = ends[ends - 2 >= panel.dates[0]]
    if ends.size == 0:
        raise DataError("panel spans no complete quarter")
    rows = ends - int(panel.dates[0])
    window = rows[:, None] - np.arange(3)[None, :]
    ym = panel.y_monthly[window].mean(axis=1) if panel.n_m else np.zeros((ends.size, 0))
    om = panel.obs_monthly[window].all(axis=1) if panel.n_m else np.zeros((ends.size, 0), dtype=bool)
    y = np.hstack([np.where(om, ym, np.nan), panel.y_quarterly[rows]])
    o = np.hstack([om, panel.obs_quarterly[rows]])
    return MixedPanel(ends, panel.monthly_ids + panel.quarterly_ids, (), y, o,
                      np.zeros((ends.size, 0)), np.zeros((ends.size, 0), dtype=bool), "Q")


@dataclass(frozen=True)
class SeriesConfig:
    id: str
    path: Path
    frequency: str
    transform: TransformSpec
    delay_months: int = 0


def read_panel_manifest(path: str | Path) -> list[SeriesConfig]:
    """Parse a panel manifest: one ``[series.<id>]`` section per series."""
    path = Path(path)
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ConfigurationError(f"cannot read manifest {path}")
    out = []
    for section in parser.sections():
        if not section.startswith("series."):
            continue
        sec = parser[section]
        sid = sec.get("id", section.split(".", 1)[1])
        freq = sec.get("frequency", MONTHLY).strip().lower()
        if freq not in (MONTHLY, QUARTERLY):
            raise ConfigurationError(f"{section}: frequency must be monthly or quarterly")
        kind = sec.get("transform", "none").strip().lower()
        default_scale = 1200.0 if freq == MONTHLY else 400.0
        scale = sec.getfloat("scale", default_scale if kind == "log_diff" else 1.0)
        series_path = Path(sec.get("path", f"{sid}.csv"))
        if not series_path.is_absolute():
            series_path = path.parent / series_path
        out.append(SeriesConfig(sid, series_path, freq, TransformSpec(kind, scale), sec.getint("delay_months", 0)))
    if not out:
        raise ConfigurationError(f"{path}: no [series.*] sections")
    return out


def load_panel_manifest(path: str | Path) -> tuple[MixedPanel, PublicationPattern]:
    configs = read_panel_manifest(path)
    monthly, quarterly = [], []
    for cfg in configs:
        s = load_series_csv(cfg.path, series_id=cfg.id, frequency=cfg.frequency)
        s = apply_transform(s, cfg.transform)
        (monthly if cfg.frequency == MONTHLY else quarterly).append(s)
    pattern = PublicationPattern({cfg.id: cfg.delay_months for cfg in configs})
    return assemble_panel(monthly, quarterly), pattern


def write_series_csv(path: str | Path, s: Series) -> None:
    fmt = format_month if s.frequency == MONTHLY else format_quarter
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "value"])
        for d, v, o in zip(s.dates, s.values, s.observed):
            w.writerow([fmt(int(d)), repr(float(v)) if o else "NA"])


def load_vintages_csv(path: str | Path, frequency: str | None = None) -> dict[int, dict[str, Series]]:
    """Long-format vintage file with columns ``vintage,series,date,value``.

    Returns ``{vintage month: {series id: Series}}``.
    """
    path = Path(path)
    buckets: dict[tuple[int, str], list[tuple[int, float | None]]] = {}
    freqs: dict[str, str] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"vintage", "series", "date", "value"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise DataError(f"{path}: header must contain {sorted(need)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                vintage = as_month(row["vintage"].strip()[:7])
                date, freq = parse_period(row["date"])
            except DataError as exc:
                raise DataError(f"{path}, row {lineno}: {exc}") from exc
            raw = (row["value"] or "").strip()
            try:
                value = None if raw.lower() in _MISSING_TOKENS else float(raw)
            except ValueError:
                value = None
            sid = row["series"].strip()
            freqs[sid] = frequency or freq
            buckets.setdefault((vintage, sid), []).append((date, value))
    out: dict[int, dict[str, Series]] = {}
    for (vintage, sid), pairs in sorted(buckets.items()):
        out.setdefault(vintage, {})[sid] = Series.from_pairs(sid, freqs[sid], pairs)
    return out
