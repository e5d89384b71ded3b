import io
import logging
import warnings

import numpy as np
import pytest

from emowalk.errors import EmptyWalkWarning, MalformedRow, UnknownConditionCode
from emowalk.ingest import (
    ENCODING_HEADER,
    RAW_HEADER,
    EncodingRecord,
    RawSample,
    Walk,
    build_walking_data,
    decode_condition_code,
    match_raw_file,
    parse_encoding,
    parse_raw_stream,
    read_walking_csv,
    walking_to_csv_text,
)

ENC_HEADER = ",".join(ENCODING_HEADER)
RAW_HDR = ",".join(RAW_HEADER)


def enc_text(*rows: str) -> io.StringIO:
    return io.StringIO("\n".join([ENC_HEADER, *rows]) + "\n")


def raw_text(*rows: str) -> io.StringIO:
    return io.StringIO("\n".join([RAW_HDR, *rows]) + "\n")


class TestDecodeConditionCode:
    def test_prefixes_and_stimuli(self):
        assert decode_condition_code("Mo-HNS").condition == 0
        assert decode_condition_code("Mu-HNS").condition == 1
        assert decode_condition_code("Mw-HNS").condition == 2
        assert decode_condition_code("Mo-HNS").stimulus == "movie"
        assert decode_condition_code("Mu-HNS").stimulus == "music"
        assert decode_condition_code("Mw-HNS").stimulus == "music_while_walking"

    def test_emotion_order_follows_letters(self):
        assert decode_condition_code("Mo-HNS").emotion_order == (1, 0, -1)
        assert decode_condition_code("Mo-SNH").emotion_order == (-1, 0, 1)
        assert decode_condition_code("Mu-NHS").emotion_order == (0, 1, -1)

    def test_custom_prefix_map(self):
        dec = decode_condition_code("Lab-SHN", prefix_map={"Lab": 7})
        assert dec.condition == 7
        assert dec.emotion_order == (-1, 1, 0)

    @pytest.mark.parametrize("code", ["Mo-HN", "MoHNS", "Mo-hns", "Mo-HNSX", "-HNS"])
    def test_shape_rejected(self, code):
        with pytest.raises(UnknownConditionCode):
            decode_condition_code(code)

    def test_unknown_prefix_rejected(self):
        with pytest.raises(UnknownConditionCode, match="prefix"):
            decode_condition_code("Xy-HNS")

    @pytest.mark.parametrize("code", ["Mo-HHS", "Mo-NNN", "Mo-HNX"])
    def test_non_permutation_rejected(self, code):
        with pytest.raises(UnknownConditionCode, match="permutation"):
            decode_condition_code(code)


class TestParseEncoding:
    GOOD = "p01,Mo-HNS,24,F,10.00.00,10.05.00,10.06.00,10.11.00,10.12.00,10.17.00"

    def test_golden_row(self):
        (rec,) = parse_encoding(enc_text(self.GOOD))
        assert rec.participant_id == "p01"
        assert rec.condition_code == "Mo-HNS"
        assert rec.age == 24
        assert rec.sex == "F"
        assert rec.walks[0] == Walk(36000, 36300)
        assert rec.walks[2] == Walk(36720, 37020)

    def test_whitespace_and_blank_lines_tolerated(self):
        src = io.StringIO(ENC_HEADER + "\n\n p01 , Mo-HNS , 24 , f ,"
                          "10.00.00,10.05.00,10.06.00,10.11.00,10.12.00,10.17.00\n")
        (rec,) = parse_encoding(src)
        assert rec.participant_id == "p01"
        assert rec.sex == "F"

    def test_missing_header(self):
        with pytest.raises(MalformedRow, match="header"):
            parse_encoding(io.StringIO(self.GOOD + "\n"))

    def test_empty_file_is_missing_header(self):
        with pytest.raises(MalformedRow, match="header"):
            parse_encoding(io.StringIO(""))

    def test_error_carries_line_number(self):
        bad = self.GOOD.replace("24", "twenty")
        with pytest.raises(MalformedRow, match="3"):
            parse_encoding(enc_text(self.GOOD, bad))

    @pytest.mark.parametrize("mangle, pattern", [
        (lambda r: r + ",extra", "10 fields"),
        (lambda r: r.replace("24", "-3"), "negative"),
        (lambda r: r.replace(",F,", ",Q,"), "sex"),
        (lambda r: r.replace("10.00.00", "10:00:00"), "HH.MM.SS"),
        (lambda r: r.replace("10.00.00", "25.00.00"), "range"),
        (lambda r: r.replace("10.05.00", "09.59.00"), "before"),
        (lambda r: r.replace("10.06.00", "10.04.00"), "overlap"),
        (lambda r: r.replace("p01", ""), "participant_id"),
    ])
    def test_malformed_rows(self, mangle, pattern):
        with pytest.raises(MalformedRow, match=pattern):
            parse_encoding(enc_text(mangle(self.GOOD)))

    def test_unknown_code_names_line(self):
        bad = self.GOOD.replace("Mo-HNS", "Zz-HNS")
        with pytest.raises(UnknownConditionCode, match="2"):
            parse_encoding(enc_text(bad))


class TestParseRawStream:
    GOOD = "10:00:01:500,0.1,0.2,0.3,0.1,0.2,10.1,1.5,-2.5,0.25,72"

    def test_golden_row(self):
        (s,) = parse_raw_stream(raw_text(self.GOOD))
        assert s.t_ms == 10 * 3_600_000 + 1_500
        assert s.ax == 0.1 and s.az_g == 10.1
        assert s.rot_y == -2.5
        assert s.heart == 72

    @pytest.mark.parametrize("mangle, pattern", [
        (lambda r: r + ",9", "11 fields"),
        (lambda r: r.replace("10:00:01:500", "10:00:01"), "HH:MM:SS:mmm"),
        (lambda r: r.replace("10:00:01:500", "10:61:01:500"), "range"),
        (lambda r: r.replace("0.2,0.3", "0.2,oops"), "numeric"),
        (lambda r: r.replace(",72", ",7.2"), "heart"),
        (lambda r: r.replace(",72", ",24"), r"\[25, 250\]"),
        (lambda r: r.replace(",72", ",251"), r"\[25, 250\]"),
    ])
    def test_strict_rejects(self, mangle, pattern):
        with pytest.raises(MalformedRow, match=pattern):
            parse_raw_stream(raw_text(self.GOOD, mangle(self.GOOD)))

    def test_lenient_skips_and_warns(self, caplog):
        bad = self.GOOD.replace(",72", ",999")
        with caplog.at_level(logging.WARNING, logger="emowalk.ingest"):
            samples = parse_raw_stream(raw_text(self.GOOD, bad, self.GOOD),
                                       strict=False)
        assert len(samples) == 2
        assert any("skipping" in r.message for r in caplog.records)

    def test_lenient_still_requires_header(self):
        with pytest.raises(MalformedRow, match="header"):
            parse_raw_stream(io.StringIO(self.GOOD + "\n"), strict=False)


def make_record(code: str = "Mo-HNS") -> EncodingRecord:
    return EncodingRecord(
        participant_id="p01", condition_code=code, age=30, sex="M",
        walks=(Walk(100, 200), Walk(300, 400), Walk(500, 600)))


def make_sample(t_ms: int, heart: int = 70) -> RawSample:
    v = t_ms / 1000.0
    return RawSample(t_ms, v, -v, v + 1, v, v, v + 9.8, 2 * v, -2 * v, v, heart)


class TestBuildWalkingData:
    def test_brute_force_interval_oracle(self):
        rng = np.random.default_rng(11)
        rec = make_record("Mu-SHN")
        order = decode_condition_code(rec.condition_code).emotion_order
        for _ in range(50):
            times = rng.integers(0, 700_000, size=80)
            raw = [make_sample(int(t)) for t in times]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", EmptyWalkWarning)
                got = build_walking_data(raw, rec)
            expect = []
            for s in sorted(raw, key=lambda r: r.t_ms):
                for i, w in enumerate(rec.walks):
                    if w.start_s * 1000 <= s.t_ms <= w.end_s * 1000:
                        expect.append((s.ax, order[i]))
                        break
            assert [(w.ax, w.emotion) for w in got] == expect

    def test_boundary_instants_included(self):
        rec = make_record()
        raw = [make_sample(t) for t in (99_999, 100_000, 200_000, 200_001,
                                        300_000, 500_000, 600_000)]
        got = build_walking_data(raw, rec)
        assert [w.emotion for w in got] == [1, 1, 0, -1, -1]

    def test_unsorted_input_sorted_first(self):
        rec = make_record()
        ordered = [make_sample(t) for t in (100_000, 150_000, 300_500, 550_000)]
        shuffled = [ordered[2], ordered[0], ordered[3], ordered[1]]
        assert build_walking_data(shuffled, rec) == build_walking_data(ordered, rec)

    def test_empty_walk_warns_but_keeps_rest(self):
        rec = make_record()
        raw = [make_sample(t) for t in (100_000, 150_000, 550_000)]
        with pytest.warns(EmptyWalkWarning, match="walk 2"):
            got = build_walking_data(raw, rec)
        assert len(got) == 3

    def test_labels_follow_condition_code(self):
        rec = make_record("Mw-NSH")
        raw = [make_sample(t) for t in (150_000, 350_000, 550_000)]
        got = build_walking_data(raw, rec)
        assert [w.emotion for w in got] == [0, -1, 1]
        assert all(w.condition == 2 for w in got)


class TestWalkingCsv:
    def test_round_trip_is_exact(self):
        rec = make_record()
        raw = [make_sample(t, heart=70 + t % 13) for t in
               range(100_000, 600_000, 7_001)]
        samples = build_walking_data(raw, rec)
        text = walking_to_csv_text(samples)
        back = read_walking_csv(io.StringIO(text))
        assert back == samples

    def test_read_rejects_bad_field(self):
        text = "condition,emotion,ax,ay,az,rot_x,rot_y,rot_z,heart\n0,1,a,0,0,0,0,0,70\n"
        with pytest.raises(MalformedRow, match="numeric"):
            read_walking_csv(io.StringIO(text))


class TestMatchRawFile:
    def test_substring_match(self, tmp_path):
        (tmp_path / "2024-01-05_p07_watch.csv").write_text("x")
        (tmp_path / "2024-01-05_p08_watch.csv").write_text("x")
        assert match_raw_file("p07", tmp_path).endswith("2024-01-05_p07_watch.csv")

    def test_multiple_matches_warns_and_takes_sorted_first(self, tmp_path, caplog):
        (tmp_path / "b_p07.csv").write_text("x")
        (tmp_path / "a_p07.csv").write_text("x")
        with caplog.at_level(logging.WARNING, logger="emowalk.ingest"):
            path = match_raw_file("p07", tmp_path)
        assert path.endswith("a_p07.csv")
        assert any("several" in r.message for r in caplog.records)

    def test_non_csv_ignored(self, tmp_path):
        (tmp_path / "p07.txt").write_text("x")
        with pytest.raises(FileNotFoundError):
            match_raw_file("p07", tmp_path)
