"""Hot inner loops, each in two flavours.

The numba versions are used by default. Setting ``CONTACTWAV_PURE_NUMPY=1``
in the environment (or running without numba installed) selects the numpy
versions instead. Both flavours are importable by name so tests and the
benchmark can compare them directly.
"""

import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

PURE_NUMPY = os.environ.get("CONTACTWAV_PURE_NUMPY", "").lower() in ("1", "true", "yes")
BACKEND = "numpy" if (PURE_NUMPY or not HAVE_NUMBA) else "numba"


# -- polyphase resampling ----------------------------------------------------


def polyphase_resample_numpy(x, h, up, down, delay, n_out):
    """y[k] = up * sum_j h[j] * xu[k*down + delay - j], xu = x zero-stuffed by up."""
    nx = x.shape[0]
    n_taps = -(-h.shape[0] // up)
    # phases[t, p] = h[p + t*up]
    phases = np.zeros(n_taps * up)
    phases[: h.shape[0]] = h
    phases = phases.reshape(n_taps, up)
    n = np.arange(n_out) * down + delay
    phase = n % up
    base = (n - phase) // up
    y = np.zeros(n_out)
    for t in range(n_taps):
        idx = base - t
        ok = (idx >= 0) & (idx < nx)
        y[ok] += phases[t, phase[ok]] * x[idx[ok]]
    return y * up


def _polyphase_resample_py(x, h, up, down, delay, n_out):
    nx = x.shape[0]
    nh = h.shape[0]
    y = np.zeros(n_out)
    for k in range(n_out):
        n = k * down + delay
        j = n % up
        # skip taps that would read past the end of x
        lo = n - up * (nx - 1)
        if j < lo:
            j = lo
        i = (n - j) // up
        acc = 0.0
        while j < nh and i >= 0:
            acc += h[j] * x[i]
            j += up
            i -= 1
        y[k] = acc * up
    return y


# -- bidirectional one-pole smoothing -----------------------------------------


def iir_forward_backward_numpy(x, a):
    b = 1.0 - a
    out = np.empty_like(x)
    n = x.shape[1]
    if n == 0:
        return out
    y = x[:, 0].copy()
    out[:, 0] = y
    for t in range(1, n):
        y = y + b * (x[:, t] - y)
        out[:, t] = y
    z = out[:, n - 1].copy()
    for t in range(n - 2, -1, -1):
        z = z + b * (out[:, t] - z)
        out[:, t] = z
    return out


def _iir_forward_backward_py(x, a):
    b = 1.0 - a
    rows, n = x.shape
    out = np.empty_like(x)
    if n == 0:
        return out
    for r in range(rows):
        y = x[r, 0]
        out[r, 0] = y
        for t in range(1, n):
            y = y + b * (x[r, t] - y)
            out[r, t] = y
        z = out[r, n - 1]
        for t in range(n - 2, -1, -1):
            z = z + b * (out[r, t] - z)
            out[r, t] = z
    return out


# -- short-time energy --------------------------------------------------------


def frame_energy_numpy(x, frame, hop):
    if x.shape[0] < frame:
        return np.zeros(0)
    frames = sliding_window_view(x, frame)[::hop]
    return np.einsum("ij,ij->i", frames, frames)


def _frame_energy_py(x, frame, hop):
    if x.shape[0] < frame:
        return np.zeros(0)
    n = (x.shape[0] - frame) // hop + 1
    e = np.zeros(n)
    for i in range(n):
        s = 0.0
        start = i * hop
        for j in range(frame):
            v = x[start + j]
            s += v * v
        e[i] = s
    return e


# -- overlap-add --------------------------------------------------------------


def overlap_add_numpy(frames, window, hop, n_out):
    """Weighted overlap-add. Returns (sum of frames*window, sum of window**2)."""
    y = np.zeros(n_out)
    wsum = np.zeros(n_out)
    w2 = window * window
    width = frames.shape[1]
    for m in range(frames.shape[0]):
        s = m * hop
        e = min(s + width, n_out)
        if e <= s:
            break
        y[s:e] += frames[m, : e - s] * window[: e - s]
        wsum[s:e] += w2[: e - s]
    return y, wsum


def _overlap_add_py(frames, window, hop, n_out):
    y = np.zeros(n_out)
    wsum = np.zeros(n_out)
    width = frames.shape[1]
    for m in range(frames.shape[0]):
        s = m * hop
        for j in range(width):
            n = s + j
            if n >= n_out:
                break
            w = window[j]
            y[n] += frames[m, j] * w
            wsum[n] += w * w
    return y, wsum


# -- hue rotation ---------------------------------------------------------------


def hue_shift_numpy(img, shift):
    from matplotlib.colors import hsv_to_rgb, rgb_to_hsv

    hsv = rgb_to_hsv(img)
    hsv[..., 0] = np.mod(hsv[..., 0] + shift, 1.0)
    return hsv_to_rgb(hsv)


def _hue_shift_py(img, shift):
    h_, w_ = img.shape[0], img.shape[1]
    out = np.empty_like(img)
    for yy in range(h_):
        for xx in range(w_):
            r = img[yy, xx, 0]
            g = img[yy, xx, 1]
            b = img[yy, xx, 2]
            v = max(r, g, b)
            delta = v - min(r, g, b)
            if delta <= 0.0 or v <= 0.0:
                out[yy, xx, 0] = r
                out[yy, xx, 1] = g
                out[yy, xx, 2] = b
                continue
            s = delta / v
            if r == v:
                h = (g - b) / delta
            elif g == v:
                h = 2.0 + (b - r) / delta
            else:
                h = 4.0 + (r - g) / delta
            h = (h / 6.0) % 1.0
            h = (h + shift) % 1.0
            h6 = h * 6.0
            i = int(h6)
            f = h6 - i
            p = v * (1.0 - s)
            q = v * (1.0 - s * f)
            t = v * (1.0 - s * (1.0 - f))
            i = i % 6
            if i == 0:
                r, g, b = v, t, p
            elif i == 1:
                r, g, b = q, v, p
            elif i == 2:
                r, g, b = p, v, t
            elif i == 3:
                r, g, b = p, q, v
            elif i == 4:
                r, g, b = t, p, v
            else:
                r, g, b = v, p, q
            out[yy, xx, 0] = r
            out[yy, xx, 1] = g
            out[yy, xx, 2] = b
    return out


if HAVE_NUMBA:
    polyphase_resample_numba = njit(cache=True)(_polyphase_resample_py)
    iir_forward_backward_numba = njit(cache=True)(_iir_forward_backward_py)
    frame_energy_numba = njit(cache=True)(_frame_energy_py)
    overlap_add_numba = njit(cache=True)(_overlap_add_py)
    hue_shift_numba = njit(cache=True)(_hue_shift_py)
else:  # pragma: no cover
    polyphase_resample_numba = _polyphase_resample_py
    iir_forward_backward_numba = _iir_forward_backward_py
    frame_energy_numba = _frame_energy_py
    overlap_add_numba = _overlap_add_py
    hue_shift_numba = _hue_shift_py

if BACKEND == "numba":
    polyphase_resample = polyphase_resample_numba
    iir_forward_backward = iir_forward_backward_numba
    frame_energy = frame_energy_numba
    overlap_add = overlap_add_numba
    hue_shift = hue_shift_numba
else:
    polyphase_resample = polyphase_resample_numpy
    iir_forward_backward = iir_forward_backward_numpy
    frame_energy = frame_energy_numpy
    overlap_add = overlap_add_numpy
    hue_shift = hue_shift_numpy
