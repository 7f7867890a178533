import struct

import numpy as np
import pytest
import torch

from decotok.config import ModelConfig
from decotok.errors import FormatError, ValidationError
from decotok.video import (VideoClip, denormalize_frames, load_clip,
                           normalize_frames, save_clip)


def _container_bytes(t, h, w, payload=None, magic=b"SWTV", version=1):
    if payload is None:
        payload = np.random.default_rng(0).integers(
            0, 256, size=t * h * w * 3, dtype=np.uint8).tobytes()
    return struct.pack("<4sBIII", magic, version, t, h, w) + payload


def test_load_paper_shape(tmp_path):
    cfg = ModelConfig()  # 17 frames, 256x256, kernel (4, 8, 8)
    path = tmp_path / "clip.swtv"
    path.write_bytes(_container_bytes(17, 256, 256))
    clip = load_clip(path, cfg)
    assert clip.shape == (17, 256, 256)


def test_load_desk_shape(tmp_path):
    cfg = ModelConfig(frames=5, height=32, width=32, patch_t=2, patch_h=4,
                      patch_w=4)
    path = tmp_path / "clip.swtv"
    path.write_bytes(_container_bytes(5, 32, 32))
    clip = load_clip(path, cfg)
    assert clip.shape == (5, 32, 32)
    assert clip.clip_id == "clip"


def test_load_rejects_bad_temporal_divisibility(tmp_path):
    # 16 - 1 = 15 is not divisible by patch_t = 4.
    path = tmp_path / "bad.swtv"
    path.write_bytes(_container_bytes(16, 8, 8))
    cfg = ModelConfig(frames=17, height=8, width=8, patch_t=4, patch_h=8,
                      patch_w=8)
    with pytest.raises(ValidationError):
        load_clip(path, cfg)


@pytest.mark.parametrize("mutate, err", [
    (lambda b: b"XXXX" + b[4:], "magic"),
    (lambda b: b[:4] + b"\x02" + b[5:], "version"),
    (lambda b: b[:-1], "payload"),
    (lambda b: b + b"\x00", "payload"),
    (lambda b: b[:10], "header"),
])
def test_malformed_container_rejected(tmp_path, mutate, err):
    blob = _container_bytes(2, 4, 4)
    path = tmp_path / "bad.swtv"
    path.write_bytes(mutate(blob))
    with pytest.raises(FormatError):
        load_clip(path)


def test_round_trip_is_byte_identical(tmp_path):
    blob = _container_bytes(3, 8, 12)
    src = tmp_path / "src.swtv"
    src.write_bytes(blob)
    clip = load_clip(src)
    dst = tmp_path / "dst.swtv"
    save_clip(clip, dst)
    assert dst.read_bytes() == blob


def test_normalization_range_and_exact_inverse():
    raw = np.arange(256, dtype=np.uint8).reshape(1, 8, 8, 4)[..., :3].copy()
    raw = np.ascontiguousarray(raw)
    frames = normalize_frames(raw)
    assert float(frames.min()) >= -0.5
    assert float(frames.max()) <= 0.5
    back = denormalize_frames(frames)
    np.testing.assert_array_equal(back, raw)


def test_normalization_covers_every_byte_value():
    raw = np.tile(np.arange(256, dtype=np.uint8)[:, None], (1, 3))
    raw = raw.reshape(1, 16, 16, 3)
    assert np.array_equal(denormalize_frames(normalize_frames(raw)), raw)


def test_clip_validation_rejects_out_of_range():
    bad = VideoClip(frames=torch.full((1, 4, 4, 3), 0.7))
    with pytest.raises(ValidationError):
        bad.validate()


def test_clip_validation_rejects_bad_rank():
    with pytest.raises(ValidationError):
        VideoClip(frames=torch.zeros(4, 4, 3)).validate()
