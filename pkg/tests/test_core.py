import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image as PILImage

from patchkit.core import (FormatError, Keypoint, PatchSet, load_image,
                           load_patch_set, make_rng, read_embeddings,
                           read_keypoints, save_patch_set, write_embeddings,
                           write_keypoints)


def write_pgm(path, w, h, data):
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode())
        f.write(bytes(data))


def test_load_pgm_scaling(tmp_path):
    p = tmp_path / "t.pgm"
    write_pgm(p, 2, 2, [0, 255, 128, 64])
    img = load_image(p)
    assert img.shape == (2, 2)
    np.testing.assert_allclose(img.ravel(), [0.0, 1.0, 128 / 255, 64 / 255])


def test_load_rgb_luminance(tmp_path):
    p = tmp_path / "red.png"
    PILImage.fromarray(np.array([[[255, 0, 0]]], dtype=np.uint8)).save(p)
    img = load_image(p)
    # 0.299*1 + 0.587*0 + 0.114*0
    np.testing.assert_allclose(img, [[0.299]])


def test_load_truncated_file(tmp_path):
    p = tmp_path / "bad.png"
    p.write_bytes(b"\x89PNG\r\n\x1a\n truncated")
    with pytest.raises(IOError):
        load_image(p)


def test_embeddings_roundtrip(tmp_path):
    m = np.arange(12, dtype=np.float32).reshape(3, 4) / 7.0
    f = tmp_path / "m.emb"
    write_embeddings(m, f)
    np.testing.assert_array_equal(read_embeddings(f), m)


def test_embeddings_size_mismatch(tmp_path):
    f = tmp_path / "m.emb"
    f.write_bytes(b"EMB1" + (2).to_bytes(4, "little") * 2
                  + np.zeros(3, dtype="<f4").tobytes())
    with pytest.raises(FormatError, match="size mismatch"):
        read_embeddings(f)


def test_embeddings_bad_magic(tmp_path):
    f = tmp_path / "m.emb"
    f.write_bytes(b"NOPE" + bytes(12))
    with pytest.raises(FormatError, match="magic"):
        read_embeddings(f)


def test_embeddings_file_size(tmp_path):
    f = tmp_path / "one.emb"
    write_embeddings(np.array([[0.5]], dtype=np.float32), f)
    # 4-byte magic + two u32 + one float32
    assert f.stat().st_size == 12 + 4


@settings(max_examples=50, deadline=None)
@given(arrays(np.float32, st.tuples(st.integers(1, 8), st.integers(1, 8)),
              elements=st.floats(-1e6, 1e6, width=32)))
def test_embeddings_roundtrip_property(tmp_path_factory, m):
    f = tmp_path_factory.mktemp("emb") / "m.emb"
    write_embeddings(m, f)
    np.testing.assert_array_equal(read_embeddings(f), m)


def test_keypoint_csv_roundtrip(tmp_path):
    kps = [Keypoint(1.5, 2.25, 30.0, 359.0, 0.125, 2),
           Keypoint(0.1, 0.2, 1.0, 0.0, 1e-9, 0)]
    f = tmp_path / "k.csv"
    write_keypoints(kps, f)
    assert read_keypoints(f) == kps


def test_keypoint_invalid_scale():
    with pytest.raises(ValueError):
        Keypoint(0, 0, scale=0)


def test_rng_reproducible():
    a = make_rng(42).random(10)
    b = make_rng(42).random(10)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, make_rng(43).random(10))


def test_patch_set_store_roundtrip(tmp_path):
    rng = make_rng(0)
    # quantization-free values: multiples of 1/255
    patches = [np.round(rng.random((8, 8)) * 255) / 255 for _ in range(3)]
    ps = PatchSet(label=7, view_id=2, patches=patches,
                  source_keypoint=Keypoint(4.0, 4.0, 8.0, 90.0, 0.5, 1))
    save_patch_set(ps, tmp_path)
    back = load_patch_set(tmp_path / "set_000007.png")
    assert back.label == 7 and back.view_id == 2
    assert back.source_keypoint == ps.source_keypoint
    assert len(back.patches) == 3
    for p, q in zip(patches, back.patches):
        np.testing.assert_allclose(p, q, atol=1e-12)


def test_patch_set_needs_two_patches():
    with pytest.raises(ValueError):
        PatchSet(0, 0, [np.zeros((4, 4))], Keypoint(2, 2, 4))
