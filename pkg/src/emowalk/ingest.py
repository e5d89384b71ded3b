"""Parse encoding and raw sensor files and slice streams into labeled walks."""

from __future__ import annotations

import csv
import io
import logging
import os
import re
import warnings
from dataclasses import dataclass

from .errors import EmptyWalkWarning, MalformedRow, UnknownConditionCode

log = logging.getLogger(__name__)

DEFAULT_PREFIX_MAP = {"Mo": 0, "Mu": 1, "Mw": 2}
STIMULUS_BY_CONDITION = {0: "movie", 1: "music", 2: "music_while_walking"}
EMOTION_BY_LETTER = {"H": 1, "N": 0, "S": -1}

ENCODING_HEADER = ("participant_id", "condition", "age", "sex",
                   "start_w1", "end_w1", "start_w2", "end_w2",
                   "start_w3", "end_w3")
RAW_HEADER = ("time", "ax", "ay", "az", "ax_g", "ay_g", "az_g",
              "rot_x", "rot_y", "rot_z", "heart")
WALKING_HEADER = ("condition", "emotion", "ax", "ay", "az",
                  "rot_x", "rot_y", "rot_z", "heart")

_CODE_RE = re.compile(r"^([A-Za-z]+)-([A-Z]{3})$")


@dataclass(frozen=True)
class Walk:
    start_s: int  # seconds since midnight
    end_s: int


@dataclass(frozen=True)
class EncodingRecord:
    participant_id: str
    condition_code: str
    age: int
    sex: str
    walks: tuple[Walk, Walk, Walk]


@dataclass(frozen=True)
class ConditionDecoding:
    condition: int
    stimulus: str
    emotion_order: tuple[int, int, int]


@dataclass(slots=True)
class RawSample:
    t_ms: int
    ax: float
    ay: float
    az: float
    ax_g: float
    ay_g: float
    az_g: float
    rot_x: float
    rot_y: float
    rot_z: float
    heart: int


@dataclass(slots=True)
class WalkingSample:
    condition: int
    emotion: int
    ax: float
    ay: float
    az: float
    rot_x: float
    rot_y: float
    rot_z: float
    heart: int


def decode_condition_code(code: str, prefix_map: dict[str, int] | None = None) -> ConditionDecoding:
    """Split "<prefix>-<HNS permutation>" into stimulus and per-walk emotions."""
    prefix_map = DEFAULT_PREFIX_MAP if prefix_map is None else prefix_map
    m = _CODE_RE.match(code.strip())
    if not m:
        raise UnknownConditionCode(f"condition code {code!r} does not match '<prefix>-<3 letters>'")
    prefix, letters = m.group(1), m.group(2)
    if prefix not in prefix_map:
        raise UnknownConditionCode(f"unknown condition prefix {prefix!r} in {code!r}")
    if sorted(letters) != ["H", "N", "S"]:
        raise UnknownConditionCode(
            f"condition suffix {letters!r} is not a permutation of H, N, S")
    condition = prefix_map[prefix]
    stimulus = STIMULUS_BY_CONDITION.get(condition, f"condition_{condition}")
    order = tuple(EMOTION_BY_LETTER[ch] for ch in letters)
    return ConditionDecoding(condition=condition, stimulus=stimulus, emotion_order=order)


def _open_lines(source):
    """Accept a path or a file-like object; return (iterable, should_close)."""
    if hasattr(source, "read"):
        return source, False
    return open(source, "r", encoding="utf-8", newline=""), True


def _parse_dot_time(text: str, line_no: int, source: str) -> int:
    parts = text.strip().split(".")
    if len(parts) != 3:
        raise MalformedRow(line_no, f"time {text!r} is not HH.MM.SS", source)
    try:
        hh, mm, ss = (int(p) for p in parts)
    except ValueError:
        raise MalformedRow(line_no, f"time {text!r} has non-integer fields", source) from None
    if not (0 <= hh < 24 and 0 <= mm < 60 and 0 <= ss < 60):
        raise MalformedRow(line_no, f"time {text!r} out of range", source)
    return hh * 3600 + mm * 60 + ss


def _parse_colon_time_ms(text: str, line_no: int, source: str) -> int:
    parts = text.strip().split(":")
    if len(parts) != 4:
        raise MalformedRow(line_no, f"time {text!r} is not HH:MM:SS:mmm", source)
    try:
        hh, mm, ss, ms = (int(p) for p in parts)
    except ValueError:
        raise MalformedRow(line_no, f"time {text!r} has non-integer fields", source) from None
    if not (0 <= hh < 24 and 0 <= mm < 60 and 0 <= ss < 60 and 0 <= ms < 1000):
        raise MalformedRow(line_no, f"time {text!r} out of range", source)
    return hh * 3_600_000 + mm * 60_000 + ss * 1_000 + ms


def _check_header(row: list[str], expected: tuple[str, ...], source: str) -> None:
    got = tuple(tok.strip().lower() for tok in row)
    if got != expected:
        raise MalformedRow(1, f"header {row!r} does not match {','.join(expected)}", source)


def parse_encoding(source, delimiter: str = ",",
                   prefix_map: dict[str, int] | None = None) -> list[EncodingRecord]:
    """Read the study encoding file: one record per participant-condition row."""
    fh, should_close = _open_lines(source)
    name = getattr(fh, "name", "") if should_close or hasattr(fh, "name") else ""
    name = name if isinstance(name, str) else ""
    try:
        reader = csv.reader(fh, delimiter=delimiter)
        records: list[EncodingRecord] = []
        header_seen = False
        for line_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if not header_seen:
                _check_header(row, ENCODING_HEADER, name)
                header_seen = True
                continue
            if len(row) != 10:
                raise MalformedRow(line_no, f"expected 10 fields, got {len(row)}", name)
            fields = [tok.strip() for tok in row]
            pid, code = fields[0], fields[1]
            if not pid:
                raise MalformedRow(line_no, "empty participant_id", name)
            try:
                decode_condition_code(code, prefix_map)
            except UnknownConditionCode as exc:
                raise UnknownConditionCode(f"{name or 'encoding'}:{line_no}: {exc}") from None
            try:
                age = int(fields[2])
            except ValueError:
                raise MalformedRow(line_no, f"age {fields[2]!r} is not an integer", name) from None
            if age < 0:
                raise MalformedRow(line_no, f"age {age} is negative", name)
            sex = fields[3].upper()
            if sex not in ("F", "M"):
                raise MalformedRow(line_no, f"sex {fields[3]!r} is not F or M", name)
            bounds = [_parse_dot_time(tok, line_no, name) for tok in fields[4:10]]
            walks = []
            for w in range(3):
                start_s, end_s = bounds[2 * w], bounds[2 * w + 1]
                if start_s >= end_s:
                    raise MalformedRow(
                        line_no, f"walk {w + 1} start {fields[4 + 2 * w]} is not "
                        f"before end {fields[5 + 2 * w]}", name)
                walks.append(Walk(start_s, end_s))
            for w in range(2):
                if walks[w].end_s >= walks[w + 1].start_s:
                    raise MalformedRow(
                        line_no, f"walks {w + 1} and {w + 2} overlap or are out of order", name)
            records.append(EncodingRecord(
                participant_id=pid, condition_code=code, age=age, sex=sex,
                walks=(walks[0], walks[1], walks[2])))
        if not header_seen:
            raise MalformedRow(1, "missing header row", name)
        return records
    finally:
        if should_close:
            fh.close()


def parse_raw_stream(source, delimiter: str = ",", strict: bool = True) -> list[RawSample]:
    """Read one participant's raw sensor CSV into samples in file order.

    With strict=False malformed data rows are skipped with a warning
    instead of aborting the parse.
    """
    fh, should_close = _open_lines(source)
    name = getattr(fh, "name", "")
    name = name if isinstance(name, str) else ""
    try:
        reader = csv.reader(fh, delimiter=delimiter)
        samples: list[RawSample] = []
        header_seen = False
        for line_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if not header_seen:
                _check_header(row, RAW_HEADER, name)
                header_seen = True
                continue
            try:
                if len(row) != 11:
                    raise MalformedRow(line_no, f"expected 11 fields, got {len(row)}", name)
                fields = [tok.strip() for tok in row]
                t_ms = _parse_colon_time_ms(fields[0], line_no, name)
                try:
                    nums = [float(tok) for tok in fields[1:10]]
                except ValueError:
                    raise MalformedRow(line_no, "unparsable numeric field", name) from None
                try:
                    heart = int(fields[10])
                except ValueError:
                    raise MalformedRow(line_no, f"heart {fields[10]!r} is not an integer",
                                       name) from None
                if not 25 <= heart <= 250:
                    raise MalformedRow(line_no, f"heart {heart} outside [25, 250]", name)
            except MalformedRow as exc:
                if strict:
                    raise
                log.warning("skipping malformed row: %s", exc)
                continue
            samples.append(RawSample(t_ms, *nums, heart))
        if not header_seen:
            raise MalformedRow(1, "missing header row", name)
        return samples
    finally:
        if should_close:
            fh.close()


def build_walking_data(raw: list[RawSample], rec: EncodingRecord,
                       prefix_map: dict[str, int] | None = None) -> list[WalkingSample]:
    """Slice a raw stream into the record's three walks, labeling each sample.

    Samples on a walk's start or end instant are included; samples
    outside every walk are dropped.  A walk that captures no samples is
    reported with EmptyWalkWarning and the run continues.
    """
    decoding = decode_condition_code(rec.condition_code, prefix_map)
    ordered = raw
    if any(ordered[i].t_ms > ordered[i + 1].t_ms for i in range(len(ordered) - 1)):
        ordered = sorted(ordered, key=lambda s: s.t_ms)

    bounds = [(w.start_s * 1000, w.end_s * 1000, decoding.emotion_order[i])
              for i, w in enumerate(rec.walks)]
    out: list[WalkingSample] = []
    walk_counts = [0, 0, 0]
    w = 0
    for s in ordered:
        while w < 3 and s.t_ms > bounds[w][1]:
            w += 1
        if w == 3:
            break
        start_ms, _, emotion = bounds[w]
        if s.t_ms >= start_ms:
            out.append(WalkingSample(
                condition=decoding.condition, emotion=emotion,
                ax=s.ax, ay=s.ay, az=s.az,
                rot_x=s.rot_x, rot_y=s.rot_y, rot_z=s.rot_z, heart=s.heart))
            walk_counts[w] += 1
    for i, count in enumerate(walk_counts):
        if count == 0:
            warnings.warn(
                f"participant {rec.participant_id} condition {rec.condition_code}: "
                f"walk {i + 1} contains no samples", EmptyWalkWarning, stacklevel=2)
    return out


def walking_to_csv_text(samples: list[WalkingSample]) -> str:
    buf = io.StringIO()
    buf.write(",".join(WALKING_HEADER) + "\n")
    for s in samples:
        buf.write(f"{s.condition},{s.emotion},{s.ax!r},{s.ay!r},{s.az!r},"
                  f"{s.rot_x!r},{s.rot_y!r},{s.rot_z!r},{s.heart}\n")
    return buf.getvalue()


def read_walking_csv(source, delimiter: str = ",") -> list[WalkingSample]:
    """Read a walking-data CSV written by walking_to_csv_text."""
    fh, should_close = _open_lines(source)
    name = getattr(fh, "name", "")
    name = name if isinstance(name, str) else ""
    try:
        reader = csv.reader(fh, delimiter=delimiter)
        samples: list[WalkingSample] = []
        header_seen = False
        for line_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if not header_seen:
                _check_header(row, WALKING_HEADER, name)
                header_seen = True
                continue
            if len(row) != 9:
                raise MalformedRow(line_no, f"expected 9 fields, got {len(row)}", name)
            try:
                samples.append(WalkingSample(
                    condition=int(row[0]), emotion=int(row[1]),
                    ax=float(row[2]), ay=float(row[3]), az=float(row[4]),
                    rot_x=float(row[5]), rot_y=float(row[6]), rot_z=float(row[7]),
                    heart=int(row[8])))
            except ValueError:
                raise MalformedRow(line_no, "unparsable numeric field", name) from None
        if not header_seen:
            raise MalformedRow(1, "missing header row", name)
        return samples
    finally:
        if should_close:
            fh.close()


def match_raw_file(participant_id: str, raw_dir: str | os.PathLike) -> str:
    """Find the raw CSV for a participant: filename contains the id."""
    candidates = sorted(
        fn for fn in os.listdir(raw_dir)
        if participant_id in fn and fn.lower().endswith(".csv"))
    if not candidates:
        raise FileNotFoundError(
            f"no raw CSV matching participant {participant_id!r} in {raw_dir}")
    if len(candidates) > 1:
        log.warning("participant %s matches several raw files %s; using %s",
                    participant_id, candidates, candidates[0])
    return os.path.join(os.fspath(raw_dir), candidates[0])
