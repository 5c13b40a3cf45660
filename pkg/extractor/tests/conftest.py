"""Shared fixtures: a tiny on-disk vision model and synthetic images."""

import numpy as np
import pytest


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A two-layer CLIP vision checkpoint with 4 patches (32px / 16px)."""
    import torch
    from transformers import (
        CLIPImageProcessor,
        CLIPVisionConfig,
        CLIPVisionModelWithProjection,
    )

    target = tmp_path_factory.mktemp("tiny-model")
    config = CLIPVisionConfig(
        hidden_size=16,
        intermediate_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        image_size=32,
        patch_size=16,
        projection_dim=8,
    )
    torch.manual_seed(7)
    model = CLIPVisionModelWithProjection(config)
    model.save_pretrained(target)
    processor = CLIPImageProcessor(
        do_resize=True,
        size={"shortest_edge": 32},
        do_center_crop=True,
        crop_size={"height": 32, "width": 32},
    )
    processor.save_pretrained(target)
    return target


@pytest.fixture(scope="session")
def single_layer_model_dir(tmp_path_factory):
    """A one-layer checkpoint; it has no penultimate layer."""
    import torch
    from transformers import (
        CLIPImageProcessor,
        CLIPVisionConfig,
        CLIPVisionModelWithProjection,
    )

    target = tmp_path_factory.mktemp("one-layer-model")
    config = CLIPVisionConfig(
        hidden_size=16,
        intermediate_size=32,
        num_hidden_layers=1,
        num_attention_heads=2,
        image_size=32,
        patch_size=16,
        projection_dim=8,
    )
    torch.manual_seed(7)
    CLIPVisionModelWithProjection(config).save_pretrained(target)
    CLIPImageProcessor(
        do_resize=True,
        size={"shortest_edge": 32},
        do_center_crop=True,
        crop_size={"height": 32, "width": 32},
    ).save_pretrained(target)
    return target


@pytest.fixture(scope="session")
def image_dir(tmp_path_factory):
    """Three deterministic random RGB images."""
    from PIL import Image

    target = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(20260817)
    for i in range(3):
        pixels = rng.integers(0, 256, size=(48, 48, 3), dtype=np.uint8)
        Image.fromarray(pixels, mode="RGB").save(target / f"img_{i}.png")
    return target
