from pathlib import Path

import numpy as np
import pytest

from traject import RawActivationBundle, Trajectory

DATA_DIR = Path(__file__).parent / "data"
GOLDEN_DIR = Path(__file__).parent / "golden"


def random_trajectory(rng, L, D, scale=1.0, meta=None) -> Trajectory:
    return Trajectory(rng.standard_normal((L, D)) * scale, meta=meta)


def random_bundle(rng, L, T, D, K_h, sample_id="s") -> RawActivationBundle:
    hidden = rng.standard_normal((L, T, D))
    attn = rng.random((L, K_h, T)) + 1e-3
    attn /= attn.sum(axis=2, keepdims=True)
    return RawActivationBundle(hidden=hidden, attn_last=attn, sample_id=sample_id)


def fig5_style_trajectory(L=36, D=16, seed=5) -> Trajectory:
    """Linear tails with a curved middle: straight in, arc through the
    middle band, straight out."""
    rng = np.random.default_rng(seed)
    pts = np.zeros((L, D))
    direction = np.zeros(D)
    direction[0] = 1.0
    for l in range(L):
        pts[l] = l * direction
    # curved middle third: a circle arc in two extra coordinates
    mid_lo, mid_hi = L // 4, 3 * L // 4
    angles = np.linspace(0, np.pi, mid_hi - mid_lo)
    pts[mid_lo:mid_hi, 1] = 6.0 * np.sin(angles)
    pts[mid_lo:mid_hi, 2] = 6.0 * (1 - np.cos(angles))
    pts[mid_hi:, 2] = 12.0
    pts += 0.01 * rng.standard_normal((L, D))
    return Trajectory(pts, meta="fig5_style")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
