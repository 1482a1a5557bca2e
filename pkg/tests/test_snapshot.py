import numpy as np
import pytest

from wavemap.evolve import FieldState
from wavemap.snapshot import SnapshotError, read_snapshot, write_snapshot


def _state(n=8, seed=0):
    rng = np.random.default_rng(seed)
    phi = rng.normal(size=(n, n, 3))
    phi /= np.linalg.norm(phi, axis=-1, keepdims=True)
    return FieldState(-2.5, phi, rng.normal(size=(n, n, 3)))


def test_roundtrip(tmp_path):
    st = _state()
    p = write_snapshot(tmp_path / "a.wmap", st, 4.4, {"seed": 3})
    back, L, side = read_snapshot(p)
    assert back.t == st.t and L == 4.4
    assert np.array_equal(back.phi, st.phi) and np.array_equal(back.pi, st.pi)
    assert side["config"] == {"seed": 3} and side["n"] == 8


def test_missing_sidecar_is_allowed(tmp_path):
    p = write_snapshot(tmp_path / "a.wmap", _state(), 1.0)
    (tmp_path / "a.wmap.json").unlink()
    assert read_snapshot(p)[2] is None


def test_corruption_detected(tmp_path):
    p = write_snapshot(tmp_path / "a.wmap", _state(), 1.0)
    raw = bytearray(p.read_bytes())
    (tmp_path / "b.wmap").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(SnapshotError, match="magic"):
        read_snapshot(tmp_path / "b.wmap")
    (tmp_path / "c.wmap").write_bytes(raw[:-8])
    with pytest.raises(SnapshotError, match="size"):
        read_snapshot(tmp_path / "c.wmap")
    (tmp_path / "d.wmap").write_bytes(raw[:10])
    with pytest.raises(SnapshotError, match="truncated"):
        read_snapshot(tmp_path / "d.wmap")
    raw[4] = 9
    (tmp_path / "e.wmap").write_bytes(raw)
    with pytest.raises(SnapshotError, match="version"):
        read_snapshot(tmp_path / "e.wmap")


def test_shape_checked(tmp_path):
    with pytest.raises(SnapshotError):
        write_snapshot(tmp_path / "a.wmap", FieldState(0.0, np.zeros((4, 5, 3)), np.zeros((4, 5, 3))), 1.0)
