"""The numba kernels and their numpy twins must agree."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactwav import _kernels as k
from contactwav.resample import ResampleSpec, design_filter, output_length


def test_backend_flag_is_known():
    assert k.BACKEND in ("numba", "numpy")


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(1, 600),
    rates=st.sampled_from([(48000, 16000), (16000, 48000), (44100, 16000), (32000, 24000)]),
    seed=st.integers(0, 2**32 - 1),
)
def test_polyphase_twins_agree(n, rates, seed):
    x = np.random.default_rng(seed).standard_normal(n)
    spec = ResampleSpec(*rates, filter_taps_per_phase=16)
    b = design_filter(spec)
    n_out = output_length(n, spec)
    a = k.polyphase_resample_numba(x, b.taps, b.up, b.down, b.delay, n_out)
    c = k.polyphase_resample_numpy(x, b.taps, b.up, b.down, b.delay, n_out)
    np.testing.assert_allclose(a, c, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(rows=st.integers(1, 6), cols=st.integers(1, 80), a=st.floats(0.0, 0.999), seed=st.integers(0, 1000))
def test_iir_twins_agree(rows, cols, a, seed):
    x = np.random.default_rng(seed).random((rows, cols))
    np.testing.assert_allclose(k.iir_forward_backward_numba(x, a), k.iir_forward_backward_numpy(x, a), atol=1e-14)


@pytest.mark.parametrize("n,frame,hop", [(1000, 80, 40), (79, 80, 40), (80, 80, 40), (999, 240, 120)])
def test_frame_energy_twins_agree(n, frame, hop, rng):
    x = rng.standard_normal(n)
    a = k.frame_energy_numba(x, frame, hop)
    c = k.frame_energy_numpy(x, frame, hop)
    assert a.shape == c.shape
    np.testing.assert_allclose(a, c, rtol=1e-12)


def test_frame_energy_brute_force(rng):
    x = rng.standard_normal(500)
    expected = [np.sum(x[i : i + 50] ** 2) for i in range(0, 451, 25)]
    np.testing.assert_allclose(k.frame_energy(x, 50, 25), expected, rtol=1e-12)


def test_overlap_add_twins_agree(rng):
    frames = rng.standard_normal((12, 400))
    win = np.hanning(400)
    for n_out in (400, 2160, 2000):
        a = k.overlap_add_numba(frames, win, 160, n_out)
        c = k.overlap_add_numpy(frames, win, 160, n_out)
        np.testing.assert_allclose(a[0], c[0], atol=1e-12)
        np.testing.assert_allclose(a[1], c[1], atol=1e-12)


@pytest.mark.parametrize("shift", [0.0, 0.03, -0.08, 0.5, 1.0])
def test_hue_twins_agree(shift, rng):
    img = rng.random((17, 23, 3))
    img[0, 0] = 0.4  # gray pixel
    img[1, 1] = 0.0  # black pixel
    np.testing.assert_allclose(k.hue_shift_numba(img, shift), k.hue_shift_numpy(img, shift), atol=1e-12)
