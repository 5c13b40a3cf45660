"""Binary dump format, corpus loading, and JSON sidecar readers."""

import json
import struct

import numpy as np
import numpy.testing as npt
import pytest

from tokenprune import (
    BadMagic,
    HeaderMismatch,
    InvalidValue,
    IoFailure,
    TruncatedFile,
    read_dump,
    write_dump,
)
from tokenprune.dataio import (
    HEADER_SIZE,
    MAGIC,
    TokenDumpHeader,
    list_dumps,
    read_caption_records,
    read_corpus,
    read_lexicon,
    read_stats,
    reference_stats,
    thread_cap,
)


def sample_arrays(rng, n=7, d=5):
    matrix = rng.standard_normal((n, d))
    attn = rng.random(n) + 1e-6
    return matrix, attn


class TestHeader:
    def test_pack_layout(self):
        header = TokenDumpHeader(n_tokens=3, dim=2, has_attention=True)
        raw = header.pack()
        assert len(raw) == HEADER_SIZE
        assert raw[:4] == MAGIC
        assert struct.unpack("<I", raw[4:8])[0] == 3
        assert struct.unpack("<I", raw[8:12])[0] == 2
        assert raw[12] == 1
        assert raw[13:16] == b"\x00\x00\x00"

    def test_expected_file_size(self):
        header = TokenDumpHeader(n_tokens=3, dim=2, has_attention=True)
        assert header.expected_file_size == 16 + 4 * 3 * 2 + 4 * 3

    def test_zero_dims_rejected(self):
        with pytest.raises(HeaderMismatch):
            TokenDumpHeader(n_tokens=0, dim=2, has_attention=False)
        with pytest.raises(HeaderMismatch):
            TokenDumpHeader(n_tokens=2, dim=0, has_attention=False)


class TestRoundTrip:
    def test_matrix_and_attention(self, tmp_path, rng):
        matrix, attn = sample_arrays(rng)
        path = tmp_path / "pair.tpk1"
        write_dump(path, matrix, attn)
        got_m, got_a = read_dump(path)
        npt.assert_array_equal(got_m.values, matrix.astype(np.float32).astype(np.float64))
        npt.assert_array_equal(got_a.scores, attn.astype(np.float32).astype(np.float64))
        assert got_m.values.dtype == np.float64

    def test_matrix_only(self, tmp_path, rng):
        matrix, _ = sample_arrays(rng)
        path = tmp_path / "bare.tpk1"
        write_dump(path, matrix)
        got_m, got_a = read_dump(path)
        assert got_a is None
        assert got_m.rows == matrix.shape[0]

    def test_rewrite_is_byte_identical(self, tmp_path, rng):
        matrix, attn = sample_arrays(rng)
        first = tmp_path / "a.tpk1"
        second = tmp_path / "b.tpk1"
        write_dump(first, matrix, attn)
        got_m, got_a = read_dump(first)
        write_dump(second, got_m.values, got_a.scores)
        assert first.read_bytes() == second.read_bytes()

    def test_float32_overflow_rejected(self, tmp_path):
        huge = np.full((2, 2), 1e300)
        with pytest.raises(InvalidValue):
            write_dump(tmp_path / "x.tpk1", huge)


class TestMalformed:
    def write_valid(self, tmp_path, rng):
        matrix, attn = sample_arrays(rng, n=4, d=3)
        path = tmp_path / "good.tpk1"
        write_dump(path, matrix, attn)
        return path

    def test_bad_magic(self, tmp_path, rng):
        path = self.write_valid(tmp_path, rng)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"ZZZZ"
        path.write_bytes(bytes(raw))
        with pytest.raises(BadMagic):
            read_dump(path)

    def test_bad_magic_wins_over_short_file(self, tmp_path):
        path = tmp_path / "stub.tpk1"
        path.write_bytes(b"NOPE")
        with pytest.raises(BadMagic):
            read_dump(path)

    def test_truncated_header(self, tmp_path, rng):
        path = self.write_valid(tmp_path, rng)
        path.write_bytes(path.read_bytes()[:10])
        with pytest.raises(TruncatedFile):
            read_dump(path)

    def test_truncated_payload(self, tmp_path, rng):
        path = self.write_valid(tmp_path, rng)
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(TruncatedFile):
            read_dump(path)

    def test_trailing_bytes(self, tmp_path, rng):
        path = self.write_valid(tmp_path, rng)
        path.write_bytes(path.read_bytes() + b"\x00\x00")
        with pytest.raises(HeaderMismatch):
            read_dump(path)

    def test_nonzero_reserved(self, tmp_path, rng):
        path = self.write_valid(tmp_path, rng)
        raw = bytearray(path.read_bytes())
        raw[14] = 7
        path.write_bytes(bytes(raw))
        with pytest.raises(HeaderMismatch):
            read_dump(path)

    def test_bad_attention_flag(self, tmp_path, rng):
        path = self.write_valid(tmp_path, rng)
        raw = bytearray(path.read_bytes())
        raw[12] = 2
        path.write_bytes(bytes(raw))
        with pytest.raises(HeaderMismatch):
            read_dump(path)

    def test_nan_payload(self, tmp_path):
        header = TokenDumpHeader(n_tokens=2, dim=2, has_attention=False)
        payload = np.array([[1.0, np.nan], [0.0, 1.0]], dtype="<f4").tobytes()
        path = tmp_path / "nan.tpk1"
        path.write_bytes(header.pack() + payload)
        with pytest.raises(InvalidValue):
            read_dump(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoFailure):
            read_dump(tmp_path / "absent.tpk1")


class TestCorpus:
    def fill_dir(self, tmp_path, rng, count=5):
        paths = []
        for i in range(count):
            matrix, attn = sample_arrays(rng, n=6, d=4)
            path = tmp_path / f"sample_{i:02d}.tpk1"
            write_dump(path, matrix, attn)
            paths.append(path)
        return paths

    def test_list_dumps_directory_sorted(self, tmp_path, rng):
        self.fill_dir(tmp_path, rng)
        (tmp_path / "notes.txt").write_text("ignored")
        found = list_dumps(tmp_path)
        assert [p.name for p in found] == [f"sample_{i:02d}.tpk1" for i in range(5)]

    def test_list_dumps_manifest(self, tmp_path, rng):
        paths = self.fill_dir(tmp_path, rng, count=3)
        manifest = tmp_path / "corpus.txt"
        manifest.write_text(
            "# comment line\n"
            f"{paths[2].name}\n"
            f"{paths[0].name}\n"
            "\n"
        )
        found = list_dumps(manifest)
        assert [p.name for p in found] == [paths[2].name, paths[0].name]

    def test_list_dumps_empty_directory(self, tmp_path):
        with pytest.raises(IoFailure):
            list_dumps(tmp_path)

    def test_read_corpus_preserves_order(self, tmp_path, rng):
        self.fill_dir(tmp_path, rng)
        samples = read_corpus(tmp_path)
        assert len(samples) == 5
        direct = [read_dump(p) for p in list_dumps(tmp_path)]
        for (m_a, a_a), (m_b, a_b) in zip(samples, direct):
            npt.assert_array_equal(m_a.values, m_b.values)
            npt.assert_array_equal(a_a.scores, a_b.scores)

    def test_thread_cap_env(self, monkeypatch):
        monkeypatch.setenv("TOKENPRUNE_THREADS", "3")
        assert thread_cap() == 3
        monkeypatch.setenv("TOKENPRUNE_THREADS", "0")
        assert thread_cap() == 1
        monkeypatch.setenv("TOKENPRUNE_THREADS", "lots")
        with pytest.raises(InvalidValue):
            thread_cap()
        monkeypatch.delenv("TOKENPRUNE_THREADS")
        assert thread_cap() >= 1


class TestSidecars:
    def test_caption_records(self, tmp_path):
        path = tmp_path / "caps.jsonl"
        path.write_text(
            json.dumps({"caption": "a dog", "gt_objects": ["dog"]})
            + "\n"
            + json.dumps({"caption": "a cat", "gt_objects": ["cat", "table"]})
            + "\n"
        )
        records = read_caption_records(path)
        assert len(records) == 2
        assert records[1].gt_objects == frozenset({"cat", "table"})

    def test_caption_records_missing_field(self, tmp_path):
        path = tmp_path / "caps.jsonl"
        path.write_text(json.dumps({"caption": "a dog"}) + "\n")
        with pytest.raises(InvalidValue):
            read_caption_records(path)

    def test_lexicon_reader(self, tmp_path):
        path = tmp_path / "lex.json"
        path.write_text(json.dumps({"dog": "dog", "puppy": "dog"}))
        lex = read_lexicon(path)
        assert lex.objects == frozenset({"dog"})

    def test_stats_reader(self, tmp_path):
        path = tmp_path / "stats.json"
        path.write_text(json.dumps({"erank_mean": 94.87, "entropy_mean": 4.8}))
        stats = read_stats(path)
        assert stats["erank_mean"] == 94.87

    def test_stats_reader_rejects_non_object(self, tmp_path):
        path = tmp_path / "stats.json"
        path.write_text("[1, 2, 3]")
        with pytest.raises(InvalidValue):
            read_stats(path)

    def test_reference_stats_keys(self):
        stats = reference_stats()
        for key in ("erank_mean", "erank_q1", "erank_q3", "entropy_mean"):
            assert key in stats
        assert stats["erank_q1"] < stats["erank_mean"] < stats["erank_q3"]
