import numpy as np
import pytest

from src.errors import ParameterError
from src.modules import degrade, diffops
from src.modules.degrade import GapSpec


def test_gaussian_noise_statistics():
    mid = np.full((256, 256), 0.5)
    noisy = degrade.add_gaussian_noise(mid, 0.01, seed=42)
    residual = noisy - mid
    assert abs(residual.mean()) < 0.005
    # clipping at 0 and 1 is ~5 sigma away, so the sample variance is essentially untouched
    assert residual.var() == pytest.approx(0.01, rel=0.05)
    assert noisy.min() >= 0.0 and noisy.max() <= 1.0


def test_gaussian_noise_zero_variance_and_seeds():
    u = np.linspace(0, 1, 64).reshape(8, 8)
    np.testing.assert_array_equal(degrade.add_gaussian_noise(u, 0.0, seed=1), u)
    a = degrade.add_gaussian_noise(u, 0.02, seed=9)
    assert np.array_equal(a, degrade.add_gaussian_noise(u, 0.02, seed=9))
    assert not np.array_equal(a, degrade.add_gaussian_noise(u, 0.02, seed=10))
    with pytest.raises(ParameterError):
        degrade.add_gaussian_noise(u, -0.1, seed=1)


def test_salt_pepper_density():
    mid = np.full((200, 200), 0.5)
    noisy = degrade.add_salt_pepper(mid, 0.3, seed=3)
    changed = noisy != 0.5
    assert changed.mean() == pytest.approx(0.3, abs=0.01)
    assert set(np.unique(noisy[changed])) <= {0.0, 1.0}
    assert (noisy[changed] == 1.0).mean() == pytest.approx(0.5, abs=0.02)


def test_salt_pepper_edges():
    u = np.full((16, 16), 0.25)
    np.testing.assert_array_equal(degrade.add_salt_pepper(u, 0.0, seed=1), u)
    assert np.all(np.isin(degrade.add_salt_pepper(u, 1.0, seed=1), (0.0, 1.0)))
    with pytest.raises(ParameterError):
        degrade.add_salt_pepper(u, 1.5, seed=1)


def test_seed_range():
    with pytest.raises(ParameterError):
        degrade.rng_for(-1)
    with pytest.raises(ParameterError):
        degrade.rng_for(2**64)
    degrade.rng_for(2**64 - 1)


@pytest.mark.parametrize("fraction", [0.0, 0.4, 0.9, 1.0])
def test_random_mask_exact_count(fraction):
    known = degrade.make_random_mask(30, 40, fraction, seed=7)
    assert known.shape == (30, 40)
    assert (~known).sum() == round(fraction * 1200)


def test_random_mask_is_deterministic():
    a = degrade.make_random_mask(16, 16, 0.5, seed=1)
    assert np.array_equal(a, degrade.make_random_mask(16, 16, 0.5, seed=1))
    assert not np.array_equal(a, degrade.make_random_mask(16, 16, 0.5, seed=2))


def test_apply_mask_fills_missing():
    u = np.full((4, 4, 3), 0.9)
    known = np.ones((4, 4), dtype=bool)
    known[1, 2] = False
    out = degrade.apply_mask(u, known)
    np.testing.assert_array_equal(out[1, 2], [0.5, 0.5, 0.5])
    assert out[0, 0, 1] == 0.9
    assert degrade.apply_mask(u[..., 0], known, fill=0.0)[1, 2] == 0.0


def test_gap_spec_parsing():
    assert GapSpec.parse("straight:8") == GapSpec("straight", 8)
    assert GapSpec.parse("Wide") == GapSpec("wide")
    for bad in ("straight", "curved:4", "zigzag:x", "slanted:0"):
        with pytest.raises(ParameterError):
            GapSpec.parse(bad)


@pytest.mark.parametrize("gap", ["straight:8", "slanted:8", "zigzag:8", "wide:16"])
def test_stripe_fixture(gap):
    truth, known = degrade.make_stripe_fixture(64, 64, gap)
    assert set(np.unique(truth)) == {0.0, 1.0}
    np.testing.assert_array_equal(truth[24:40], 0.0)
    np.testing.assert_array_equal(truth[:24], 1.0)
    width = GapSpec.parse(gap).width
    assert (~known).sum() == width * 64
    np.testing.assert_array_equal((~known).sum(axis=1), width)


def test_straight_gap_is_centred():
    _, known = degrade.make_stripe_fixture(64, 64, "straight:8")
    missing_cols = np.flatnonzero(~known[0])
    np.testing.assert_array_equal(missing_cols, np.arange(28, 36))
    assert np.array_equal(known, np.broadcast_to(known[0], known.shape))


def test_slanted_and_zigzag_gaps_move():
    _, slanted = degrade.make_stripe_fixture(64, 64, "slanted:8")
    first = [np.flatnonzero(~row)[0] for row in slanted]
    assert first[-1] > first[0]
    _, zigzag = degrade.make_stripe_fixture(64, 64, "zigzag:8")
    starts = {np.flatnonzero(~row)[0] for row in zigzag}
    assert len(starts) > 2


def test_wide_gap_default_width():
    _, known = degrade.make_stripe_fixture(64, 64, "wide")
    assert (~known).sum(axis=1).max() == 16


def test_gap_must_fit():
    with pytest.raises(ParameterError):
        degrade.make_stripe_fixture(16, 16, "straight:17")
    with pytest.raises(ParameterError):
        degrade.make_stripe_fixture(64, 20, "slanted:8")


def test_shapes_fixture(shapes64):
    assert shapes64.shape == (64, 64)
    assert shapes64.min() >= 0.0 and shapes64.max() <= 1.0
    assert shapes64[56, 60] == pytest.approx(0.1, abs=1e-3)  # background, dome tail only
    assert shapes64[40, 48] == 0.9  # inside the rectangle
    assert shapes64[0, 63] == pytest.approx(0.8)
    assert shapes64[40, 16] > 0.6  # dome centre
    ramp = shapes64[2:14, 1:63]
    assert np.max(np.abs(diffops.dxx(shapes64)[2:14, 1:63])) < 0.01  # linear along x
    assert ramp.max() - ramp.min() > 0.2
    assert abs(shapes64[40, 40] - shapes64[40, 39]) > 0.5  # rectangle edge
    with pytest.raises(ParameterError):
        degrade.make_shapes_fixture(16, 64)
