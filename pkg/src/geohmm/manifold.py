"""Geometry kernels for the Poincare disk and the 2x2 SPD manifold.

Points are plain numpy arrays:

* Poincare disk: complex numbers ``y`` with ``|y| < 1``; an array of points is
  a complex array of shape ``(n,)``. Tangent vectors are complex numbers in
  ambient (Euclidean) coordinates; the Riemannian norm of ``v`` at ``y`` is
  ``2|v| / (1 - |y|^2)`` (curvature -1).
* SPD(2) with the affine-invariant metric: real arrays of shape ``(..., 2, 2)``.
  Tangent vectors are symmetric ``(..., 2, 2)`` arrays and the norm of ``V``
  at ``Y`` is ``||Y^{-1/2} V Y^{-1/2}||_F``.

Every routine broadcasts a single base point against an array of points.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import ConvergenceError, GeometryError

POINT_SLACK = 1e-12
_MAX_INIT_CANDIDATES = 64


class ManifoldKind(str, Enum):
    POINCARE_DISK = "PoincareDisk"
    SPD2 = "Spd2"


def get_manifold(kind) -> "Manifold":
    """Return the manifold singleton for a kind tag (enum or string)."""
    kind = ManifoldKind(kind)
    return _MANIFOLDS[kind]


class Manifold:
    """Shared machinery; subclasses supply the closed-form kernels."""

    kind: ManifoldKind
    dim: int
    coord_size: int

    def __repr__(self):
        return f"{type(self).__name__}()"

    # -- interface implemented by subclasses ------------------------------
    def validate(self, points):
        raise NotImplementedError

    def dist(self, y, z):
        raise NotImplementedError

    def exp(self, base, v):
        raise NotImplementedError

    def log(self, base, z):
        raise NotImplementedError

    def norm(self, base, v):
        raise NotImplementedError

    def origin(self):
        raise NotImplementedError

    def translate(self, base, points):
        """Apply the isometry sending the origin to ``base``."""
        raise NotImplementedError

    def to_coords(self, points):
        raise NotImplementedError

    def from_coords(self, coords):
        raise NotImplementedError

    def zero_tangent(self):
        raise NotImplementedError

    def equal(self, y, z):
        """Exact elementwise point equality, reduced over the coordinates."""
        raise NotImplementedError

    # -- Karcher mean -------------------------------------------------------
    def sq_dist_sum(self, m, points, weights):
        d = self.dist(m, points)
        return float(np.dot(weights, d * d))

    def weighted_log(self, m, points, weights):
        logs = self.log(m, points)
        return np.tensordot(weights, logs, axes=(0, 0))

    def _initial_mean(self, points, weights):
        n = len(points)
        if n <= _MAX_INIT_CANDIDATES:
            cand = np.arange(n)
        else:
            # heaviest points first; stable sort keeps this deterministic
            cand = np.argsort(-weights, kind="stable")[:_MAX_INIT_CANDIDATES]
        costs = [self.sq_dist_sum(points[i], points, weights) for i in cand]
        return points[cand[int(np.argmin(costs))]]

    def karcher_mean(self, points, weights=None, init=None, tol=1e-9, max_iter=200):
        """Weighted Riemannian (Karcher) mean by gradient descent.

        Parameters
        ----------
        points : array of points
        weights : array_like, optional
            Nonnegative weights; normalized internally. Uniform if omitted.
        init : point, optional
            Starting point. Defaults to the input point with the smallest
            weighted sum of squared distances (searched over at most 64
            candidates, the heaviest ones).
        tol : float
            Riemannian norm of ``sum_i w_i log_m(y_i)`` at which to stop.
        max_iter : int

        Raises
        ------
        ConvergenceError
            If the gradient norm is still above ``tol`` after ``max_iter``
            iterations; the final gradient norm is attached as ``residual``.
        """
        points = np.asarray(points)
        n = len(points)
        if n == 0:
            raise GeometryError("karcher_mean needs at least one point")
        if weights is None:
            w = np.full(n, 1.0 / n)
        else:
            w = np.asarray(weights, dtype=float)
            if w.shape != (n,) or np.any(w < 0) or w.sum() <= 0:
                raise ValueError("weights must be nonnegative with positive sum")
            w = w / w.sum()
        keep = w > 0
        if not np.all(keep):
            points, w = points[keep], w[keep]
        m = self._initial_mean(points, w) if init is None else np.asarray(init)
        f = self.sq_dist_sum(m, points, w)
        gnorm = np.inf
        for _ in range(max_iter):
            g = self.weighted_log(m, points, w)
            gnorm = float(self.norm(m, g))
            if gnorm <= tol:
                return m
            # fixed unit step, halved only if it fails to decrease the cost
            step = 1.0
            while True:
                cand = self.exp(m, step * g)
                fc = self.sq_dist_sum(cand, points, w)
                if fc <= f * (1.0 + 1e-12) or step < 1e-3:
                    break
                step *= 0.5
            m, f = cand, fc
        g = self.weighted_log(m, points, w)
        gnorm = float(self.norm(m, g))
        if gnorm <= tol:
            return m
        raise ConvergenceError(
            f"Karcher mean did not converge in {max_iter} iterations "
            f"(gradient norm {gnorm:.3e})",
            residual=gnorm,
        )


class PoincareDisk(Manifold):
    kind = ManifoldKind.POINCARE_DISK
    dim = 2
    coord_size = 2

    def validate(self, points):
        y = np.asarray(points)
        if np.iscomplexobj(y):
            y = y.astype(complex)
        else:
            y = np.asarray(y, dtype=float)
            if y.shape[-1:] != (2,):
                raise GeometryError("disk points need complex values or (re, im) pairs")
            y = y[..., 0] + 1j * y[..., 1]
        if not np.all(np.isfinite(y)):
            raise GeometryError("disk point has non-finite coordinates")
        r = np.abs(y)
        if np.any(r >= 1.0 + POINT_SLACK):
            bad = int(np.argmax(np.atleast_1d(r)))
            raise GeometryError(f"point {bad} lies outside the unit disk (|y| = {np.max(r)!r})")
        limit = 1.0 - POINT_SLACK
        over = r > limit
        if np.any(over):
            y = np.where(over, y / np.where(over, r, 1.0) * limit, y)
        return y

    def origin(self):
        return np.complex128(0.0)

    def zero_tangent(self):
        return np.complex128(0.0)

    def equal(self, y, z):
        return np.asarray(y) == np.asarray(z)

    def dist(self, y, z):
        y = np.asarray(y)
        z = np.asarray(z)
        num = 2.0 * np.abs(y - z) ** 2
        den = (1.0 - np.abs(y) ** 2) * (1.0 - np.abs(z) ** 2)
        x = num / den
        # acosh(1 + x) without the cancellation near x = 0
        return np.log1p(x + np.sqrt(x * (x + 2.0)))

    @staticmethod
    def mobius(a, z):
        """The disk automorphism z -> (z + a) / (1 + conj(a) z); maps 0 to a."""
        return (z + a) / (1.0 + np.conj(a) * z)

    def translate(self, base, points):
        return self.mobius(base, points)

    @staticmethod
    def _exp0(u):
        r = np.abs(u)
        scale = np.where(r > 0, np.tanh(r) / np.where(r > 0, r, 1.0), 1.0)
        return u * scale

    @staticmethod
    def _log0(w):
        r = np.abs(w)
        scale = np.where(r > 0, np.arctanh(r) / np.where(r > 0, r, 1.0), 1.0)
        return w * scale

    def exp(self, base, v):
        base = np.asarray(base)
        lam = 1.0 - np.abs(base) ** 2
        return self.mobius(base, self._exp0(np.asarray(v) / lam))

    def log(self, base, z):
        base = np.asarray(base)
        lam = 1.0 - np.abs(base) ** 2
        return lam * self._log0(self.mobius(-base, np.asarray(z)))

    def norm(self, base, v):
        return 2.0 * np.abs(v) / (1.0 - np.abs(base) ** 2)

    def to_coords(self, points):
        y = np.asarray(points)
        return np.stack([y.real, y.imag], axis=-1)

    def from_coords(self, coords):
        return self.validate(np.asarray(coords, dtype=float))


# ---------------------------------------------------------------------------
# closed-form 2x2 symmetric matrix functions


def _parts(s):
    return s[..., 0, 0], 0.5 * (s[..., 0, 1] + s[..., 1, 0]), s[..., 1, 1]


def _assemble(alpha, beta, s, mid):
    """Return ``alpha * I + beta * (S - mid * I)`` for stacked 2x2 ``S``."""
    a, b, c = _parts(s)
    out = np.empty(np.shape(a) + (2, 2))
    out[..., 0, 0] = alpha + beta * (a - mid)
    out[..., 1, 1] = alpha + beta * (c - mid)
    out[..., 0, 1] = out[..., 1, 0] = beta * b
    return out


def symmetrize(s):
    """Average the off-diagonal pair so the result is exactly symmetric."""
    out = np.array(s, dtype=float)
    off = 0.5 * (out[..., 0, 1] + out[..., 1, 0])
    out[..., 0, 1] = out[..., 1, 0] = off
    return out


def congruence(r, x):
    """``r @ x @ r`` for symmetric ``r``, returned exactly symmetric."""
    return symmetrize(r @ x @ r)


def _mid_gap(s):
    a, b, c = _parts(s)
    return 0.5 * (a + c), np.hypot(0.5 * (a - c), b)


def sym_sqrt(s):
    a, b, c = _parts(s)
    rdet = np.sqrt(a * c - b * b)
    t = np.sqrt(a + c + 2.0 * rdet)
    out = np.empty(np.shape(a) + (2, 2))
    out[..., 0, 0] = (a + rdet) / t
    out[..., 1, 1] = (c + rdet) / t
    out[..., 0, 1] = out[..., 1, 0] = b / t
    return out


def sym_inv(s):
    a, b, c = _parts(s)
    det = a * c - b * b
    out = np.empty(np.shape(a) + (2, 2))
    out[..., 0, 0] = c / det
    out[..., 1, 1] = a / det
    out[..., 0, 1] = out[..., 1, 0] = -b / det
    return out


def sym_invsqrt(s):
    return sym_inv(sym_sqrt(s))


def sym_logm(s):
    """Matrix logarithm of SPD 2x2 matrices."""
    a, b, c = _parts(s)
    mid, gap = _mid_gap(s)
    lam1 = mid + gap
    lam2 = (a * c - b * b) / lam1
    alpha = 0.5 * (np.log(lam1) + np.log(lam2))
    ratio = gap / mid
    small = ratio < 1e-6
    beta = np.where(
        small,
        (1.0 + ratio * ratio / 3.0) / mid,
        np.arctanh(np.where(small, 0.5, ratio)) / np.where(small, 1.0, gap),
    )
    return _assemble(alpha, beta, s, mid)


def sym_expm(s):
    """Matrix exponential of symmetric 2x2 matrices."""
    mid, gap = _mid_gap(s)
    e = np.exp(mid)
    small = gap < 1e-6
    sinhc = np.where(small, 1.0 + gap * gap / 6.0, np.sinh(gap) / np.where(small, 1.0, gap))
    return _assemble(e * np.cosh(gap), e * sinhc, s, mid)


def sym_eigvals(s):
    """Eigenvalues (largest first) of symmetric 2x2 matrices."""
    a, b, c = _parts(s)
    mid, gap = _mid_gap(s)
    lam1 = mid + gap
    return np.stack([lam1, mid - gap], axis=-1)


class Spd2(Manifold):
    kind = ManifoldKind.SPD2
    dim = 3
    coord_size = 3

    def validate(self, points):
        y = np.asarray(points, dtype=float)
        if y.shape[-2:] != (2, 2):
            if y.shape[-1:] == (3,):
                return self.from_coords(y)
            raise GeometryError("SPD(2) points must have shape (..., 2, 2) or (..., 3)")
        if not np.all(np.isfinite(y)):
            raise GeometryError("SPD(2) point has non-finite entries")
        skew = np.abs(y[..., 0, 1] - y[..., 1, 0])
        scale = np.maximum(1.0, np.abs(y).max(axis=(-1, -2)))
        if np.any(skew > POINT_SLACK * scale):
            raise GeometryError("SPD(2) point is not symmetric")
        y = y.copy()
        off = 0.5 * (y[..., 0, 1] + y[..., 1, 0])
        y[..., 0, 1] = y[..., 1, 0] = off
        lam = sym_eigvals(y)
        if np.any(lam[..., 1] < -POINT_SLACK * scale):
            raise GeometryError("SPD(2) point is not positive definite")
        low = lam[..., 1] <= POINT_SLACK
        if np.any(low):
            # clamp the small eigenvalue into the cone: Y + (eps - lam_min) I
            shift = np.where(low, POINT_SLACK - lam[..., 1], 0.0)
            y[..., 0, 0] += shift
            y[..., 1, 1] += shift
        return y

    def origin(self):
        return np.eye(2)

    def zero_tangent(self):
        return np.zeros((2, 2))

    def equal(self, y, z):
        return np.all(np.asarray(y) == np.asarray(z), axis=(-1, -2))

    def dist(self, y, z):
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        s = sym_invsqrt(y)
        w = s @ z @ s
        mid, gap = _mid_gap(w)
        ya, yb, yc = _parts(y)
        za, zb, zc = _parts(z)
        logdet = np.log(za * zc - zb * zb) - np.log(ya * yc - yb * yb)
        spread = 2.0 * np.arctanh(gap / mid)
        d = np.sqrt(0.5 * (logdet * logdet + spread * spread))
        return np.where(self.equal(y, z), 0.0, d)

    def translate(self, base, points):
        r = sym_sqrt(np.asarray(base, dtype=float))
        return congruence(r, np.asarray(points, dtype=float))

    def exp(self, base, v):
        base = np.asarray(base, dtype=float)
        r = sym_sqrt(base)
        ri = sym_inv(r)
        return congruence(r, sym_expm(ri @ np.asarray(v, dtype=float) @ ri))

    def log(self, base, z):
        base = np.asarray(base, dtype=float)
        r = sym_sqrt(base)
        ri = sym_inv(r)
        return congruence(r, sym_logm(ri @ np.asarray(z, dtype=float) @ ri))

    def norm(self, base, v):
        ri = sym_invsqrt(np.asarray(base, dtype=float))
        u = ri @ np.asarray(v, dtype=float) @ ri
        return np.sqrt(np.sum(u * u, axis=(-1, -2)))

    def weighted_log(self, m, points, weights):
        r = sym_sqrt(m)
        ri = sym_inv(r)
        g = np.tensordot(weights, sym_logm(ri @ points @ ri), axes=(0, 0))
        return congruence(r, g)

    def to_coords(self, points):
        y = np.asarray(points, dtype=float)
        return np.stack([y[..., 0, 0], y[..., 0, 1], y[..., 1, 1]], axis=-1)

    def from_coords(self, coords):
        c = np.asarray(coords, dtype=float)
        if c.shape[-1:] != (3,):
            raise GeometryError("SPD(2) coordinates must be (a, b, c) triples")
        m = np.empty(c.shape[:-1] + (2, 2))
        m[..., 0, 0] = c[..., 0]
        m[..., 0, 1] = m[..., 1, 0] = c[..., 1]
        m[..., 1, 1] = c[..., 2]
        return self.validate(m)


POINCARE_DISK = PoincareDisk()
SPD2 = Spd2()
_MANIFOLDS = {ManifoldKind.POINCARE_DISK: POINCARE_DISK, ManifoldKind.SPD2: SPD2}


def check_same_kind(*kinds):
    kinds = {ManifoldKind(k) for k in kinds}
    if len(kinds) > 1:
        raise GeometryError(f"manifold kind mismatch: {sorted(k.value for k in kinds)}")
