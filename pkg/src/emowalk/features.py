"""Windowing, denoising, and the 107-feature catalog."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateWindow, InvalidConfig, MalformedRow
from .ingest import WalkingSample, _open_lines

CATALOG_VERSION = 1

CHANNELS = ("acc_x", "acc_y", "acc_z", "acc_mag",
            "gyro_x", "gyro_y", "gyro_z", "gyro_mag", "heart")
STATS = ("mean", "std", "min", "max", "range", "median",
         "rms", "iqr", "mad", "skew", "kurt")
_EXTRAS = ("angle_x", "angle_y", "angle_z",
           "corr_acc_xy", "corr_acc_xz", "corr_acc_yz",
           "sma_acc", "sma_gyro")

_CATALOG = tuple(f"{ch}_{st}" for ch in CHANNELS for st in STATS) + _EXTRAS

# column layout of Window.data
_COLS = ("ax", "ay", "az", "rot_x", "rot_y", "rot_z", "heart")


def feature_catalog() -> tuple[str, ...]:
    """The fixed, ordered names of all 107 features (a compatibility contract)."""
    return _CATALOG


@dataclass(frozen=True)
class WindowingConfig:
    window_len: int = 64
    overlap: float = 0.5
    frequency_rate: float = 32.0

    def __post_init__(self):
        if self.window_len < 2:
            raise InvalidConfig(f"window_len must be >= 2, got {self.window_len}")
        if not 0.0 <= self.overlap < 1.0:
            raise InvalidConfig(f"overlap must be in [0, 1), got {self.overlap}")
        if self.frequency_rate <= 0:
            raise InvalidConfig(f"frequency_rate must be > 0, got {self.frequency_rate}")
        if self.stride < 1:
            raise InvalidConfig(
                f"stride rounds to 0 for window_len {self.window_len} "
                f"overlap {self.overlap}")

    @property
    def stride(self) -> int:
        return round(self.window_len * (1.0 - self.overlap))


@dataclass(frozen=True)
class Window:
    """window_len consecutive samples sharing one (condition, emotion)."""

    data: np.ndarray = field(repr=False)  # (window_len, 7): ax..az, rot_x..z, heart
    condition: int
    emotion: int
    start: int = 0  # start offset within its run

    @classmethod
    def from_samples(cls, samples: list[WalkingSample], start: int = 0) -> "Window":
        if not samples:
            raise DegenerateWindow("a window needs at least one sample")
        pairs = {(s.condition, s.emotion) for s in samples}
        if len(pairs) != 1:
            raise ValueError(f"window mixes (condition, emotion) pairs: {sorted(pairs)}")
        data = np.array([[s.ax, s.ay, s.az, s.rot_x, s.rot_y, s.rot_z, s.heart]
                         for s in samples], dtype=np.float64)
        return cls(data=data, condition=samples[0].condition,
                   emotion=samples[0].emotion, start=start)

    def samples(self) -> list[WalkingSample]:
        return [WalkingSample(self.condition, self.emotion,
                              float(r[0]), float(r[1]), float(r[2]),
                              float(r[3]), float(r[4]), float(r[5]), int(r[6]))
                for r in self.data]

    def __len__(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray = field(repr=False)  # (107,) in catalog order
    emotion: int
    condition: int


def segment_windows(samples: list[WalkingSample], cfg: WindowingConfig) -> list[Window]:
    """Slide a window over each contiguous (condition, emotion) run.

    A run of n samples yields floor((n - window_len)/stride) + 1 windows
    (none if n < window_len), starting at multiples of the stride.
    """
    if not isinstance(cfg, WindowingConfig):
        raise InvalidConfig(f"cfg must be a WindowingConfig, got {type(cfg)!r}")
    length = cfg.window_len
    stride = cfg.stride
    windows: list[Window] = []
    i = 0
    n = len(samples)
    while i < n:
        j = i
        key = (samples[i].condition, samples[i].emotion)
        while j < n and (samples[j].condition, samples[j].emotion) == key:
            j += 1
        run = samples[i:j]
        run_n = j - i
        if run_n >= length:
            arr = np.array([[s.ax, s.ay, s.az, s.rot_x, s.rot_y, s.rot_z, s.heart]
                            for s in run], dtype=np.float64)
            for start in range(0, run_n - length + 1, stride):
                windows.append(Window(data=arr[start:start + length],
                                      condition=key[0], emotion=key[1], start=start))
        i = j
    return windows


def denoise_accel(window: Window) -> Window:
    """3-point median filter on the accelerometer channels only.

    Edges replicate the boundary sample; gyro and heart pass through.
    """
    data = window.data.copy()
    for col in range(3):
        x = window.data[:, col]
        prev = np.concatenate([x[:1], x[:-1]])
        nxt = np.concatenate([x[1:], x[-1:]])
        data[:, col] = np.median(np.stack([prev, x, nxt]), axis=0)
    return Window(data=data, condition=window.condition,
                  emotion=window.emotion, start=window.start)


def _scaled_moments(chans: np.ndarray):
    """Skewness and excess kurtosis, scale-normalized so finite in, finite out."""
    centered = chans - chans.mean(axis=1, keepdims=True)
    peak = np.abs(centered).max(axis=1, keepdims=True)
    safe = np.where(peak > 0, peak, 1.0)
    u = centered / safe
    m2 = (u * u).mean(axis=1)
    live = m2 > 0
    z2 = np.where(live, m2, 1.0)
    skew = np.where(live, (u ** 3).mean(axis=1) / z2 ** 1.5, 0.0)
    kurt = np.where(live, (u ** 4).mean(axis=1) / z2 ** 2 - 3.0, 0.0)
    return skew, kurt


def _corr(a: np.ndarray, b: np.ndarray) -> float:
    ca = a - a.mean()
    cb = b - b.mean()
    pa = np.abs(ca).max()
    pb = np.abs(cb).max()
    if pa == 0 or pb == 0:
        return 0.0
    ua = ca / pa
    ub = cb / pb
    denom = np.sqrt((ua * ua).mean() * (ub * ub).mean())
    r = (ua * ub).mean() / denom
    return float(min(1.0, max(-1.0, r)))


def extract_features(window: Window) -> FeatureVector:
    """The 107 catalog statistics of one (already denoised) window."""
    if len(window) == 0:
        raise DegenerateWindow("cannot extract features from an empty window")
    data = window.data
    acc = data[:, 0:3]
    gyro = data[:, 3:6]
    heart = data[:, 6]
    acc_mag = np.sqrt((acc * acc).sum(axis=1))
    gyro_mag = np.sqrt((gyro * gyro).sum(axis=1))

    chans = np.vstack([acc.T, acc_mag, gyro.T, gyro_mag, heart])  # 9 x L

    mean = chans.mean(axis=1)
    std = chans.std(axis=1)  # population
    mn = chans.min(axis=1)
    mx = chans.max(axis=1)
    rng = mx - mn
    med = np.median(chans, axis=1)
    rms = np.sqrt((chans * chans).mean(axis=1))
    q75, q25 = np.percentile(chans, [75, 25], axis=1)
    iqr = q75 - q25
    mad = np.median(np.abs(chans - med[:, None]), axis=1)
    skew, kurt = _scaled_moments(chans)

    block = np.column_stack([mean, std, mn, mx, rng, med, rms, iqr, mad, skew, kurt])

    m_bar = acc.mean(axis=0)
    peak = np.abs(m_bar).max()
    if peak == 0:
        angles = np.full(3, np.pi / 2)
    else:
        unit = m_bar / peak
        unit = unit / np.linalg.norm(unit)
        angles = np.arccos(np.clip(unit, -1.0, 1.0))

    corrs = np.array([_corr(acc[:, 0], acc[:, 1]),
                      _corr(acc[:, 0], acc[:, 2]),
                      _corr(acc[:, 1], acc[:, 2])])
    sma_acc = float(np.abs(acc).sum(axis=1).mean())
    sma_gyro = float(np.abs(gyro).sum(axis=1).mean())

    values = np.concatenate([block.ravel(), angles, corrs, [sma_acc, sma_gyro]])
    return FeatureVector(values=values, emotion=window.emotion,
                         condition=window.condition)


def extract_pipeline(samples: list[WalkingSample], cfg: WindowingConfig) -> list[FeatureVector]:
    """segment -> denoise -> extract, in window-start order."""
    return [extract_features(denoise_accel(w)) for w in segment_windows(samples, cfg)]


FEATURES_HEADER = _CATALOG + ("emotion", "condition")


def features_to_csv_text(fvs: list[FeatureVector]) -> str:
    buf = io.StringIO()
    buf.write(",".join(FEATURES_HEADER) + "\n")
    for fv in fvs:
        buf.write(",".join(repr(float(v)) for v in fv.values))
        buf.write(f",{fv.emotion},{fv.condition}\n")
    return buf.getvalue()


def read_features_csv(source, delimiter: str = ",") -> list[FeatureVector]:
    fh, should_close = _open_lines(source)
    name = getattr(fh, "name", "")
    name = name if isinstance(name, str) else ""
    try:
        reader = csv.reader(fh, delimiter=delimiter)
        out: list[FeatureVector] = []
        header_seen = False
        for line_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if not header_seen:
                got = tuple(tok.strip() for tok in row)
                if got != FEATURES_HEADER:
                    raise MalformedRow(1, "feature CSV header does not match catalog", name)
                header_seen = True
                continue
            if len(row) != len(FEATURES_HEADER):
                raise MalformedRow(
                    line_no, f"expected {len(FEATURES_HEADER)} fields, got {len(row)}", name)
            try:
                values = np.array([float(tok) for tok in row[:-2]], dtype=np.float64)
                emotion = int(row[-2])
                condition = int(row[-1])
            except ValueError:
                raise MalformedRow(line_no, "unparsable numeric field", name) from None
            out.append(FeatureVector(values=values, emotion=emotion, condition=condition))
        if not header_seen:
            raise MalformedRow(1, "missing header row", name)
        return out
    finally:
        if should_close:
            fh.close()
