"""Shared fixtures: tiny ONNX backbones and a miniature image cohort."""

from __future__ import annotations

import numpy as np
import pytest

from lusscore.data import ALL_ZONES
from lusscore.onnx import Graph, Model, Node, ValueInfo, model_bytes


def tiny_backbone_bytes(
    feature_dim: int = 8,
    input_size: int = 16,
    layout: str = "NCHW",
    pre_pooled: bool = False,
    seed: int = 11,
) -> bytes:
    """A one-conv feature extractor with fixed random weights.

    NCHW: images -> Conv(3->d, k3, pad 1) -> Relu -> [GAP -> Flatten].
    NHWC variants transpose on the way in so the math matches.
    """
    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, 0.4, (feature_dim, 3, 3, 3)).astype(np.float32)
    b = rng.normal(0.0, 0.1, feature_dim).astype(np.float32)

    nodes = []
    conv_in = "images"
    if layout == "NHWC":
        nodes.append(Node("Transpose", ["images"], ["nchw"], attrs={"perm": [0, 3, 1, 2]}))
        conv_in = "nchw"
    nodes.append(Node("Conv", [conv_in, "w", "b"], ["conv"], attrs={"pads": [1, 1, 1, 1]}))
    nodes.append(Node("Relu", ["conv"], ["relu"]))
    if pre_pooled:
        nodes.append(Node("GlobalAveragePool", ["relu"], ["gap"]))
        nodes.append(Node("Flatten", ["gap"], ["features"]))
        out_shape: tuple[int | None, ...] = (None, feature_dim)
    else:
        nodes.append(Node("Identity", ["relu"], ["features"]))
        out_shape = (None, feature_dim, input_size, input_size)

    if layout == "NHWC":
        in_shape: tuple[int | None, ...] = (None, input_size, input_size, 3)
    else:
        in_shape = (None, 3, input_size, input_size)
    graph = Graph(
        nodes=nodes,
        inputs=[ValueInfo("images", 1, in_shape)],
        outputs=[ValueInfo("features", 1, out_shape)],
        initializers={"w": w, "b": b},
    )
    return model_bytes(Model(graph=graph, producer="tests"))


@pytest.fixture
def tiny_model_file(tmp_path):
    path = tmp_path / "tiny.onnx"
    path.write_bytes(tiny_backbone_bytes())
    return path


def make_cohort_images(tmp_path, n_patients: int = 6, frames_per_patient: int = 8, seed: int = 3):
    """Write PNG frames plus a manifest; labels follow a per-patient pattern."""
    from PIL import Image

    rng = np.random.default_rng(seed)
    image_dir = tmp_path / "frames"
    image_dir.mkdir(exist_ok=True)
    rows = ["image_id,patient_id,covid_status,zone,score,image_path"]
    idx = 0
    for p in range(n_patients):
        status = "healthy" if p % 3 == 2 else "positive"
        for f in range(frames_per_patient):
            image_id = f"img{idx:04d}"
            label = (p + f) % 4
            zone = ALL_ZONES[idx % len(ALL_ZONES)].name
            pixels = rng.integers(0, 256, (20, 20), dtype=np.uint8)
            path = image_dir / f"{image_id}.png"
            Image.fromarray(pixels, mode="L").save(path)
            rows.append(f"{image_id},pat{p:02d},{status},{zone},{label},{path}")
            idx += 1
    manifest = tmp_path / "manifest.csv"
    manifest.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return manifest
