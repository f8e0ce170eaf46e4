"""Quaternion / rotation matrix / 6D conversions.

Conventions used throughout the package:

* quaternions are ``(w, x, y, z)`` with the Hamilton product;
* the 6D representation is the first two columns of the rotation matrix,
  concatenated column-major: ``(r00, r10, r20, r01, r11, r21)``.

All functions broadcast over leading batch dimensions.
"""

import numpy as np

from .errors import DegenerateSixD, NonUnitQuaternion

QUAT_NORM_TOL = 1e-6
DEGENERATE_TOL = 1e-8


def quat_to_rotmat(q):
    q = np.asarray(q, dtype=np.float64)
    norm = np.linalg.norm(q, axis=-1)
    if np.any(np.abs(norm - 1.0) > QUAT_NORM_TOL):
        raise NonUnitQuaternion(f"quaternion norm {np.max(np.abs(norm - 1.0)) + 1.0:.9g} not within 1e-6 of 1")
    w, x, y, z = np.moveaxis(q / norm[..., None], -1, 0)
    r = np.stack(
        [
            1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
            2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
            2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y),
        ],
        axis=-1,
    )
    return r.reshape(q.shape[:-1] + (3, 3))


def rotmat_to_sixd(r):
    """Read off the first two columns. ``r`` is assumed to be a proper rotation."""
    r = np.asarray(r, dtype=np.float64)
    return np.concatenate([r[..., :, 0], r[..., :, 1]], axis=-1)


def sixd_to_rotmat(v):
    """Gram-Schmidt decode of a (possibly unnormalized, non-orthogonal) 6-vector."""
    v = np.asarray(v, dtype=np.float64)
    a, b = v[..., :3], v[..., 3:6]
    na = np.linalg.norm(a, axis=-1, keepdims=True)
    if np.any(na <= DEGENERATE_TOL):
        raise DegenerateSixD("first column has (near) zero norm")
    c1 = a / na
    b_perp = b - np.sum(b * c1, axis=-1, keepdims=True) * c1
    nb = np.linalg.norm(b_perp, axis=-1, keepdims=True)
    # parallel test is on the normalized second vector so it is scale free
    nb_rel = nb / np.maximum(np.linalg.norm(b, axis=-1, keepdims=True), np.finfo(float).tiny)
    if np.any(nb_rel <= DEGENERATE_TOL):
        raise DegenerateSixD("columns are zero or parallel")
    c2 = b_perp / nb
    # second pass removes residual round-off so the output is orthonormal to ~1e-16
    c2 = c2 - np.sum(c2 * c1, axis=-1, keepdims=True) * c1
    c2 = c2 / np.linalg.norm(c2, axis=-1, keepdims=True)
    c3 = np.cross(c1, c2)
    return np.stack([c1, c2, c3], axis=-1)


def quat_to_sixd(q):
    return rotmat_to_sixd(quat_to_rotmat(q))


def rotation_residuals(r):
    """Return (max |R^T R - I|, max |det R - 1|) over a batch of matrices."""
    r = np.asarray(r, dtype=np.float64)
    gram = np.swapaxes(r, -1, -2) @ r
    ortho = np.max(np.abs(gram - np.eye(3)))
    det = np.max(np.abs(np.linalg.det(r) - 1.0))
    return float(ortho), float(det)

