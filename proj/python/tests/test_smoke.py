import numpy as np
import pytest

import becv


def translating(n, h, w, ux, uy):
    y, x = np.mgrid[0:h, 0:w].astype(np.float32)
    frames = []
    for t in range(n):
        xs, ys = x - ux * t, y - uy * t
        frames.append(np.stack([0.5 + 0.3 * np.sin(0.3 * xs + c) * np.cos(0.2 * ys) for c in range(3)]))
    return np.stack(frames).astype(np.float32)


def test_plan_matches_reference_structure():
    order = becv.plan(8, 9)
    assert [f["t"] for f in order] == [0, 8, 4, 2, 6, 1, 3, 5, 7]
    frame3 = next(f for f in order if f["t"] == 3)
    assert sorted(frame3["refs"]) == [0, 2, 4, 8]
    assert "proxy" in becv.format_plan(8, 10)


def test_round_trip_is_bit_exact():
    profile = becv.Profile.seeded(3)
    frames = translating(5, 32, 32, 1.0, 0.5)
    bitstream, recon, reports = becv.encode(frames, profile, intra_period=4, qp=2)
    assert recon.shape == frames.shape
    assert len(reports) == 5
    decoded = becv.decode(bitstream, profile)
    assert np.array_equal(decoded, recon)
    assert np.array_equal(becv.decode(bitstream, profile, use_cache=False), recon)


def test_identity_profile_quality():
    profile = becv.Profile.identity()
    frames = translating(3, 16, 16, 0.0, 0.0)
    _, recon, reports = becv.encode(frames, profile, intra_period=2, qp=3)
    assert becv.psnr(frames[0], recon[0]) > 30.0
    assert all(r["psnr"] > 30.0 for r in reports)


def test_errors_surface_as_python_exceptions(tmp_path):
    profile = becv.Profile.identity()
    with pytest.raises(becv.DecodeError):
        becv.decode(b"BECV", profile)
    with pytest.raises(ValueError):
        becv.encode(np.zeros((2, 4, 16, 16), np.float32), profile)
    path = tmp_path / "p.bin"
    becv.Profile.seeded(9).save(str(path))
    assert becv.Profile.load(str(path)).profile_id == becv.Profile.seeded(9).profile_id
