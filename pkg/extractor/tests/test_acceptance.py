"""Acceptance gate for the extractor: the consumer-side round trip.

Run with `pytest tests/test_acceptance.py -v -s` to see the verdict line.
"""

import json
import math
import subprocess
import sys

from tokendump import ExtractionJob, extract


def metrics_via_cli(dump_path):
    completed = subprocess.run(
        [sys.executable, "-m", "tokenprune.cli", "metrics", str(dump_path)],
        capture_output=True,
        text=True,
    )
    assert completed.returncode == 0, completed.stderr
    return json.loads(completed.stdout)


def test_criterion_12_round_trip(tiny_model_dir, image_dir, tmp_path):
    try:
        from tokenprune import read_dump, validate_pair

        job = ExtractionJob(
            model_id=str(tiny_model_dir),
            image_paths=tuple(sorted(image_dir.glob("*.png"))),
            out_dir=tmp_path / "dumps",
        )
        paths = extract(job)
        assert len(paths) == 3

        expected_patches = 4  # (image_size / patch_size)^2 for the fixture
        for path in paths:
            matrix, attn = read_dump(path)
            validate_pair(matrix, attn)
            assert matrix.rows == expected_patches
            assert len(attn) == expected_patches

            payload = metrics_via_cli(path)
            assert payload["n_tokens"] == expected_patches
            entropy = payload["attention_entropy"]
            assert entropy is not None
            assert 0.0 <= entropy <= math.log(expected_patches) + 1e-9
            assert 1.0 <= payload["erank_fast"] <= expected_patches
    except BaseException:
        print("\n[criterion 12] extractor dumps round-trip through the consumer: FAIL")
        raise
    print("\n[criterion 12] extractor dumps round-trip through the consumer: PASS")
