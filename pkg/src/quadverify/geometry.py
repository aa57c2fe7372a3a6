"""Minimal SO(3) kernel: skew maps, nearest-rotation projection, attitude error.

All vectors are numpy arrays of shape (3,) and rotation matrices of shape
(3, 3), row-major. Functions are pure and parallel-safe.
"""

import numpy as np

from .errors import DegenerateRotation, NotSkewSymmetric

SKEW_TOL = 1e-9


def wedge(w):
    """Map a 3-vector to its skew-symmetric cross-product matrix.

    wedge(w) @ u == cross(w, u) for every u.
    """
    wx, wy, wz = w
    return np.array([
        [0.0, -wz, wy],
        [wz, 0.0, -wx],
        [-wy, wx, 0.0],
    ])


def vee(S):
    """Inverse of wedge. Raises NotSkewSymmetric if |S + S^T| exceeds 1e-9."""
    S = np.asarray(S, dtype=float)
    if np.max(np.abs(S + S.T)) > SKEW_TOL:
        raise NotSkewSymmetric(f"max |S + S^T| = {np.max(np.abs(S + S.T)):.3e}")
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def project_to_so3(A):
    """Nearest rotation matrix in the Frobenius norm (polar decomposition).

    Repairs the orthonormality drift that accumulates when integrating
    Rdot = R @ wedge(Omega) numerically. Requires det(A) > 0.
    """
    A = np.asarray(A, dtype=float)
    U, s, Vt = np.linalg.svd(A)
    if s[-1] < 1e-12 * max(s[0], 1.0):
        raise DegenerateRotation("input matrix is (near) rank-deficient")
    d = np.linalg.det(U @ Vt)
    if d <= 0:
        raise DegenerateRotation("input matrix has non-positive determinant")
    return U @ Vt


def rotation_error(R, R_d):
    """Attitude error vector e_R = 0.5 * vee(R_d^T R - R^T R_d)."""
    E = R_d.T @ R - R.T @ R_d
    return 0.5 * np.array([E[2, 1], E[0, 2], E[1, 0]])
