"""Run a vision encoder over images and dump tokens to .tpk1 files.

Each image produces one dump holding the patch-token embedding matrix and
the encoder's own saliency signal: the softmaxed attention row of the CLS
query over the patch keys, averaged over heads, with the CLS self-entry
dropped. Scores are written raw, without renormalizing after the drop;
any consumer that wants a distribution renormalizes itself.

Embeddings default to the encoder's final hidden states (the rows before
any projection head). With post_projector the checkpoint's visual
projection is applied to every patch row instead.

The file layout is the .tpk1 format: a 16-byte header (magic "TPK1",
u32 LE token count, u32 LE dim, u8 attention flag, 3 zero bytes) followed
by the float32 little-endian row-major matrix and, flag permitting, the
float32 attention vector. File length is exact; there is no padding.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ExtractorError,
    ImageDecodeFailure,
    LayerOutOfRange,
    ModelLoadFailure,
)

MAGIC = b"TPK1"
_HEADER = struct.Struct("<4sIIB3s")
DUMP_SUFFIX = ".tpk1"
MANIFEST_NAME = "manifest.json"

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".webp")


@dataclass(frozen=True)
class ExtractionJob:
    """Everything one extraction run needs.

    layer selects which per-layer attention map supplies the saliency
    scores: the string "penultimate" (default) or a 0-based layer index.
    Embeddings always come from the encoder output regardless of layer.
    """

    model_id: str
    image_paths: tuple
    out_dir: Path
    layer: str | int = "penultimate"
    post_projector: bool = False
    device: str = "cpu"

    def __post_init__(self):
        if not self.model_id:
            raise ExtractorError("model_id must be a non-empty string")
        paths = tuple(Path(p) for p in self.image_paths)
        if not paths:
            raise ExtractorError("image_paths must list at least one image")
        object.__setattr__(self, "image_paths", paths)
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        if isinstance(self.layer, bool) or not isinstance(self.layer, (str, int)):
            raise ExtractorError(
                f"layer must be 'penultimate' or an integer index, got {self.layer!r}"
            )
        if isinstance(self.layer, str) and self.layer != "penultimate":
            raise ExtractorError(
                f"layer must be 'penultimate' or an integer index, got {self.layer!r}"
            )


def pack_dump(embeddings: np.ndarray, attention: np.ndarray) -> bytes:
    """Serialize one (matrix, attention) pair to .tpk1 bytes."""
    emb = np.ascontiguousarray(embeddings, dtype="<f4")
    att = np.ascontiguousarray(attention, dtype="<f4")
    if emb.ndim != 2 or emb.shape[0] < 1 or emb.shape[1] < 1:
        raise ExtractorError(f"embeddings must be a 2-D matrix, got shape {emb.shape}")
    if att.shape != (emb.shape[0],):
        raise ExtractorError(
            f"attention length {att.shape} does not match {emb.shape[0]} tokens"
        )
    if not np.isfinite(emb).all() or not np.isfinite(att).all():
        raise ExtractorError("model produced non-finite values")
    header = _HEADER.pack(MAGIC, emb.shape[0], emb.shape[1], 1, b"\x00" * 3)
    return header + emb.tobytes(order="C") + att.tobytes()


def _atomic_write(path: Path, blob: bytes) -> None:
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(blob)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def _load_model(job: ExtractionJob):
    import torch
    from transformers import AutoImageProcessor, CLIPVisionModelWithProjection

    try:
        processor = AutoImageProcessor.from_pretrained(job.model_id)
        # Eager attention guarantees output_attentions actually returns
        # the per-layer maps instead of a fused-kernel fallback.
        model = CLIPVisionModelWithProjection.from_pretrained(
            job.model_id, attn_implementation="eager"
        )
    except ExtractorError:
        raise
    except Exception as exc:
        raise ModelLoadFailure(f"cannot load {job.model_id!r}: {exc}") from exc
    model.eval()
    model.to(torch.device(job.device))
    return processor, model


def _resolve_layer(job: ExtractionJob, n_layers: int) -> int:
    if job.layer == "penultimate":
        if n_layers < 2:
            raise LayerOutOfRange(
                f"model has {n_layers} layer(s); no penultimate layer exists"
            )
        return n_layers - 2
    index = int(job.layer)
    if not 0 <= index < n_layers:
        raise LayerOutOfRange(
            f"layer index {index} outside [0, {n_layers - 1}]"
        )
    return index


def _decode_image(path: Path):
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise ImageDecodeFailure(f"cannot decode {path}: {exc}") from exc


def _dump_name(path: Path, used: set) -> str:
    name = path.stem + DUMP_SUFFIX
    serial = 1
    while name in used:
        name = f"{path.stem}_{serial}{DUMP_SUFFIX}"
        serial += 1
    used.add(name)
    return name


def extract(job: ExtractionJob) -> list[Path]:
    """Produce one .tpk1 dump per image plus a manifest; return dump paths.

    Dumps are written atomically (temp file, then rename), so a crash
    never leaves a half-written .tpk1 behind. Same images, same model,
    same settings give byte-identical output.

    Raises:
        ModelLoadFailure: the encoder or preprocessor cannot be loaded.
        ImageDecodeFailure: an input image cannot be decoded.
        LayerOutOfRange: the layer selector misses the model's layers.
        ExtractorError: job parameters or model outputs are unusable.
    """
    import torch

    processor, model = _load_model(job)
    layer_index = _resolve_layer(job, int(model.config.num_hidden_layers))
    projector = getattr(model, "visual_projection", None)
    if job.post_projector and projector is None:
        raise ExtractorError("checkpoint has no visual projection to apply")

    job.out_dir.mkdir(parents=True, exist_ok=True)
    dump_paths = []
    entries = []
    used_names: set = set()
    for image_path in job.image_paths:
        image = _decode_image(image_path)
        pixel_values = processor(images=image, return_tensors="pt").pixel_values
        pixel_values = pixel_values.to(torch.device(job.device))
        with torch.no_grad():
            output = model(pixel_values=pixel_values, output_attentions=True)
            # Attention maps are (batch, heads, query, key); row 0 is the
            # CLS query, keys from 1 on are the patches. Head-average the
            # softmaxed rows and keep them unnormalized.
            cls_rows = output.attentions[layer_index][0, :, 0, 1:]
            attention = cls_rows.mean(dim=0)
            embeddings = output.last_hidden_state[0, 1:, :]
            if job.post_projector:
                embeddings = projector(embeddings)
        blob = pack_dump(
            embeddings.cpu().numpy().astype(np.float64),
            attention.cpu().numpy().astype(np.float64),
        )
        dump_path = job.out_dir / _dump_name(image_path, used_names)
        _atomic_write(dump_path, blob)
        dump_paths.append(dump_path)
        n_tokens, dim = embeddings.shape
        entries.append(
            {
                "image": str(image_path),
                "dump": dump_path.name,
                "n_tokens": int(n_tokens),
                "dim": int(dim),
            }
        )

    manifest = {
        "model": job.model_id,
        "layer": job.layer,
        "attention_layer_index": layer_index,
        "post_projector": job.post_projector,
        "device": job.device,
        "dumps": entries,
    }
    _atomic_write(
        job.out_dir / MANIFEST_NAME,
        json.dumps(manifest, indent=2).encode() + b"\n",
    )
    return dump_paths
