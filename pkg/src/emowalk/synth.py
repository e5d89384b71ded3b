"""Seeded synthetic cohorts: encoding + raw CSVs with emotion-shaped gait."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec
from .ingest import RAW_HEADER
from .io_utils import atomic_write_text, ensure_dir
from .seeding import rng_from

# per-emotion gait and heart parameters at separability 1; everything
# interpolates linearly toward the neutral column as separability -> 0
CADENCE_HZ = {-1: 1.6, 0: 1.8, 1: 2.0}
AMPLITUDE_MS2 = {-1: 0.8, 0: 1.0, 1: 1.2}
HEART_OFFSET_BPM = {-1: -5.0, 0: 0.0, 1: 10.0}
ACC_NOISE_STD = 0.3
GYRO_SCALE = 6.0
GYRO_PHASE = np.pi / 4
GYRO_NOISE_STD = 12.0
HEART_NOISE_STD = 2.0
PAD_S = 2.0          # stream extends past each walk by this much
GAP_S = 60           # rest between walks
MIN_WINDOW = 64      # default window length a walk must fill

PREFIX_BY_CONDITION = {0: "Mo", 1: "Mu", 2: "Mw"}
LETTER_BY_EMOTION = {1: "H", 0: "N", -1: "S"}


@dataclass(frozen=True)
class SynthSpec:
    n_users: int = 10
    conditions: tuple[int, ...] = (0,)
    walk_duration_s: float = 30.0
    sample_rate_hz: float = 32.0
    separability: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_users < 1:
            raise InvalidSpec(f"n_users must be >= 1, got {self.n_users}")
        conds = tuple(self.conditions)
        if not conds or len(set(conds)) != len(conds) or \
                not set(conds) <= {0, 1, 2}:
            raise InvalidSpec(f"conditions must be a nonempty subset of "
                              f"{{0,1,2}}, got {self.conditions}")
        if self.walk_duration_s <= 0 or self.sample_rate_hz <= 0:
            raise InvalidSpec("walk duration and sample rate must be positive")
        if self.walk_duration_s * self.sample_rate_hz < MIN_WINDOW:
            raise InvalidSpec(
                f"a walk holds {self.walk_duration_s * self.sample_rate_hz:.0f} "
                f"samples, fewer than one {MIN_WINDOW}-sample window")
        if not 0.0 <= self.separability <= 1.0:
            raise InvalidSpec(f"separability must be in [0, 1], got {self.separability}")
        block = 3 * (int(np.ceil(self.walk_duration_s)) + GAP_S) + 120
        if self.n_users * block > 6 * 3600:
            raise InvalidSpec(
                f"{self.n_users} users at {self.walk_duration_s}s walks do not "
                f"fit the per-condition session window")


@dataclass(frozen=True)
class CohortPaths:
    encoding_path: str
    raw_dir: str
    raw_paths: dict[str, str]


def _fmt_time_ms(t_ms: int) -> str:
    ms = t_ms % 1000
    s = t_ms // 1000
    return f"{s // 3600:02d}:{s % 3600 // 60:02d}:{s % 60:02d}:{ms:03d}"


def _fmt_time_s(t_s: int) -> str:
    return f"{t_s // 3600:02d}.{t_s % 3600 // 60:02d}.{t_s % 60:02d}"


def _lerp(target: float, neutral: float, s: float) -> float:
    return neutral + s * (target - neutral)


def generate_cohort(spec: SynthSpec, out_dir: str | os.PathLike) -> CohortPaths:
    """Write encoding.csv plus raw/<pid>_raw.csv per user; byte-deterministic.

    Each user walks three times per condition, one emotion per walk in a
    seeded random order.  Gait is a per-axis sinusoid whose cadence and
    amplitude shift with emotion in proportion to separability, on top
    of per-user phases, baselines and resting heart rate, so at
    separability 0 walks are statistically identical across emotions.
    """
    out_dir = ensure_dir(out_dir)
    raw_dir = ensure_dir(os.path.join(out_dir, "raw"))
    s = spec.separability
    dur = int(np.ceil(spec.walk_duration_s))
    n_walk = round(spec.walk_duration_s * spec.sample_rate_hz)
    n_pad = round(PAD_S * spec.sample_rate_hz)
    step_ms = 1000.0 / spec.sample_rate_hz

    enc = io.StringIO()
    enc.write("participant_id,condition,age,sex,start_w1,end_w1,"
              "start_w2,end_w2,start_w3,end_w3\n")
    raw_paths: dict[str, str] = {}

    for u in range(spec.n_users):
        pid = f"SYN{u + 1:03d}"
        rng = rng_from(spec.seed, "user", u)
        heart_base = rng.uniform(60.0, 90.0)
        acc_base = rng.uniform(-0.5, 0.5, size=3)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=3)
        tilt = rng.uniform(-0.15, 0.15, size=2)
        g_vec = np.array([tilt[0], tilt[1], 1.0])
        g_vec = 9.8 * g_vec / np.linalg.norm(g_vec)

        raw = io.StringIO()
        raw.write(",".join(RAW_HEADER) + "\n")
        for c in sorted(spec.conditions):
            order = [int(v) for v in rng.permutation([-1, 0, 1])]
            base_s = (6 + 6 * c) * 3600 + u * (3 * (dur + GAP_S) + 120)
            walk_bounds = []
            for w, emotion in enumerate(order):
                start_s = base_s + w * (dur + GAP_S)
                end_s = start_s + dur
                walk_bounds.append((start_s, end_s))

                freq = _lerp(CADENCE_HZ[emotion], CADENCE_HZ[0], s)
                amp = _lerp(AMPLITUDE_MS2[emotion], AMPLITUDE_MS2[0], s)
                h_off = s * HEART_OFFSET_BPM[emotion]

                idx = np.arange(-n_pad, n_walk + n_pad)
                t_ms = start_s * 1000 + np.rint(idx * step_ms).astype(np.int64)
                t = t_ms / 1000.0
                acc = np.empty((len(idx), 3))
                rot = np.empty((len(idx), 3))
                for axis in range(3):
                    carrier = 2.0 * np.pi * freq * t + phases[axis]
                    acc[:, axis] = (amp * np.sin(carrier) + acc_base[axis]
                                    + rng.normal(0.0, ACC_NOISE_STD, len(idx)))
                    rot[:, axis] = (GYRO_SCALE * amp * np.sin(carrier + GYRO_PHASE)
                                    + rng.normal(0.0, GYRO_NOISE_STD, len(idx)))
                heart = np.rint(heart_base + h_off
                                + rng.normal(0.0, HEART_NOISE_STD, len(idx)))
                heart = np.clip(heart, 40, 200).astype(np.int64)
                acc_g = acc + g_vec

                for i in range(len(idx)):
                    raw.write(f"{_fmt_time_ms(int(t_ms[i]))},"
                              f"{acc[i, 0]:.2f},{acc[i, 1]:.2f},{acc[i, 2]:.2f},"
                              f"{acc_g[i, 0]:.2f},{acc_g[i, 1]:.2f},{acc_g[i, 2]:.2f},"
                              f"{rot[i, 0]:.2f},{rot[i, 1]:.2f},{rot[i, 2]:.2f},"
                              f"{heart[i]}\n")

            code = PREFIX_BY_CONDITION[c] + "-" + "".join(
                LETTER_BY_EMOTION[e] for e in order)
            age = 20 + (u % 40)
            sex = "F" if u % 2 == 0 else "M"
            times = ",".join(f"{_fmt_time_s(a)},{_fmt_time_s(b)}" for a, b in walk_bounds)
            enc.write(f"{pid},{code},{age},{sex},{times}\n")

        raw_path = os.path.join(raw_dir, f"{pid}_raw.csv")
        atomic_write_text(raw_path, raw.getvalue())
        raw_paths[pid] = raw_path

    encoding_path = os.path.join(out_dir, "encoding.csv")
    atomic_write_text(encoding_path, enc.getvalue())
    return CohortPaths(encoding_path=encoding_path, raw_dir=raw_dir,
                       raw_paths=raw_paths)
