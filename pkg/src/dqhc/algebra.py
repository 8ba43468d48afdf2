"""Quaternion and dual quaternion algebra.

Quaternions are stored as ``[eta, mu1, mu2, mu3]`` and dual quaternions as
the 8-vector ``[eta, mu1, mu2, mu3, eta', mu1', mu2', mu3']``.  The same
layout is used by every file format in the package.

Two layers live here.  The array kernels (``qmul_arr``, ``dqmul_arr``,
``dqconj_arr``, ``project_arr``) work on stacked ``(..., 4)`` / ``(..., 8)``
arrays and are what the simulator uses.  The value types (``Quaternion``,
``DualQuaternion``, ``UnitDualQuaternion``, ``Twist``) wrap single elements
and are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-9
ZERO_PRIMARY_TOL = 1e-12
ROTATION_TOL = 1e-6


class NotOnManifold(ValueError):
    """Element violates a unit dual quaternion constraint."""


class ZeroPrimaryPart(ValueError):
    """Primary part too small to normalize."""


class NonUnitRotation(ValueError):
    pass


class NonPureQuaternion(ValueError):
    pass


# ---------------------------------------------------------------------------
# array kernels


def qmul_arr(a, b):
    """Hamilton product of stacked quaternions, shape ``(..., 4)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a0, a1, a2, a3 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    b0, b1, b2, b3 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ],
        axis=-1,
    )


def qconj_arr(a):
    a = np.asarray(a, dtype=float)
    return a * np.array([1.0, -1.0, -1.0, -1.0])


def dqmul_arr(a, b):
    """Dual quaternion product of stacked 8-vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ap, ad = a[..., :4], a[..., 4:]
    bp, bd = b[..., :4], b[..., 4:]
    return np.concatenate(
        [qmul_arr(ap, bp), qmul_arr(ap, bd) + qmul_arr(ad, bp)], axis=-1
    )


def _product_table():
    # T[i] @ b == vec(e_i * b) for the i-th basis element, from the explicit product
    eye = np.eye(8)
    table = np.stack([dqmul_arr(eye[i], eye).T for i in range(8)])
    return table.reshape(8, 64)


_DQ_TABLE = _product_table()


def dqmul_fast(a, b):
    """Same product as :func:`dqmul_arr` as two matmuls; the simulator hot path."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    left = (a @ _DQ_TABLE).reshape(a.shape[:-1] + (8, 8))
    return (left @ b[..., None])[..., 0]


def dqconj_arr(a):
    a = np.asarray(a, dtype=float)
    return a * np.array([1.0, -1.0, -1.0, -1.0, 1.0, -1.0, -1.0, -1.0])


def hamilton_plus4_arr(q):
    """Left-multiplication matrix ``H4+(q)`` so that ``H4+(a) @ b == a*b``."""
    q = np.asarray(q, dtype=float)
    e, m1, m2, m3 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    rows = [
        [e, -m1, -m2, -m3],
        [m1, e, -m3, m2],
        [m2, m3, e, -m1],
        [m3, -m2, m1, e],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def hamilton_plus_arr(x):
    x = np.asarray(x, dtype=float)
    hp = hamilton_plus4_arr(x[..., :4])
    hd = hamilton_plus4_arr(x[..., 4:])
    out = np.zeros(x.shape[:-1] + (8, 8))
    out[..., :4, :4] = hp
    out[..., 4:, :4] = hd
    out[..., 4:, 4:] = hp
    return out


def manifold_residuals(x):
    """Return ``(| |p| - 1 |, |<p, d>|)`` for stacked 8-vectors."""
    x = np.asarray(x, dtype=float)
    p, d = x[..., :4], x[..., 4:]
    return (
        np.abs(np.linalg.norm(p, axis=-1) - 1.0),
        np.abs(np.sum(p * d, axis=-1)),
    )


def project_arr(x):
    """Project stacked 8-vectors onto the unit dual quaternion manifold.

    The primary part is normalized, then the component of the dual part
    along the primary part is removed.
    """
    x = np.asarray(x, dtype=float)
    p, d = x[..., :4], x[..., 4:]
    n = np.linalg.norm(p, axis=-1, keepdims=True)
    if np.any(n <= ZERO_PRIMARY_TOL):
        raise ZeroPrimaryPart(f"primary part norm {float(np.min(n)):.3e} too small")
    p = p / n
    d = d - np.sum(p * d, axis=-1, keepdims=True) * p
    return np.concatenate([p, d], axis=-1)


# ---------------------------------------------------------------------------
# value types


def _frozen(values, size):
    arr = np.array(values, dtype=float).reshape(size)
    arr.setflags(write=False)
    return arr


class Quaternion:
    """Quaternion ``eta + mu1 i + mu2 j + mu3 k``."""

    __slots__ = ("_v",)

    def __init__(self, eta=0.0, mu=(0.0, 0.0, 0.0)):
        mu = np.asarray(mu, dtype=float).reshape(3)
        self._v = _frozen([eta, *mu], 4)

    @classmethod
    def from_array(cls, arr) -> Quaternion:
        arr = np.asarray(arr, dtype=float).reshape(4)
        return cls(arr[0], arr[1:])

    @classmethod
    def pure(cls, vector) -> Quaternion:
        return cls(0.0, vector)

    @property
    def eta(self) -> float:
        return float(self._v[0])

    @property
    def mu(self) -> np.ndarray:
        return self._v[1:]

    def as_array(self) -> np.ndarray:
        return self._v.copy()

    def norm(self) -> float:
        return float(np.linalg.norm(self._v))

    def is_pure(self, tol=UNIT_TOL) -> bool:
        return abs(self.eta) <= tol

    def conj(self) -> Quaternion:
        return Quaternion(self.eta, -self.mu)

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return quat_mul(self, other)
        if np.isscalar(other):
            return Quaternion.from_array(self._v * other)
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return Quaternion.from_array(self._v * other)
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion.from_array(self._v + other._v)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion.from_array(self._v - other._v)
        return NotImplemented

    def __neg__(self):
        return Quaternion.from_array(-self._v)

    def __eq__(self, other):
        if not isinstance(other, Quaternion):
            return NotImplemented
        return bool(np.array_equal(self._v, other._v))

    def __hash__(self):
        return hash(self._v.tobytes())

    def __repr__(self):
        e, m1, m2, m3 = self._v
        return f"Quaternion({e:.6g} + {m1:.6g}i + {m2:.6g}j + {m3:.6g}k)"


class DualQuaternion:
    """Dual quaternion ``p + eps d`` with ``eps**2 == 0``."""

    __slots__ = ("_v",)

    def __init__(self, p: Quaternion | None = None, d: Quaternion | None = None):
        p = Quaternion() if p is None else p
        d = Quaternion() if d is None else d
        self._v = _frozen([*p.as_array(), *d.as_array()], 8)

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=float).reshape(8)
        return cls(Quaternion.from_array(arr[:4]), Quaternion.from_array(arr[4:]))

    @classmethod
    def identity(cls):
        return cls.from_array([1, 0, 0, 0, 0, 0, 0, 0])

    @property
    def p(self) -> Quaternion:
        return Quaternion.from_array(self._v[:4])

    @property
    def d(self) -> Quaternion:
        return Quaternion.from_array(self._v[4:])

    # component shorthands used throughout the control code
    @property
    def eta(self) -> float:
        return float(self._v[0])

    @property
    def mu(self) -> np.ndarray:
        return self._v[1:4]

    @property
    def eta_d(self) -> float:
        return float(self._v[4])

    @property
    def mu_d(self) -> np.ndarray:
        return self._v[5:8]

    def as_array(self) -> np.ndarray:
        return self._v.copy()

    def conj(self):
        return dq_conj(self)

    def __mul__(self, other):
        if isinstance(other, DualQuaternion):
            return dq_mul(self, other)
        if np.isscalar(other):
            return DualQuaternion.from_array(self._v * other)
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return DualQuaternion.from_array(self._v * other)
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, DualQuaternion):
            return DualQuaternion.from_array(self._v + other._v)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, DualQuaternion):
            return DualQuaternion.from_array(self._v - other._v)
        return NotImplemented

    def __neg__(self):
        return DualQuaternion.from_array(-self._v)

    def __eq__(self, other):
        if not isinstance(other, DualQuaternion):
            return NotImplemented
        return bool(np.array_equal(self._v, other._v))

    def __hash__(self):
        return hash(self._v.tobytes())

    def __repr__(self):
        return f"{type(self).__name__}({np.array2string(self._v, precision=6)})"


class UnitDualQuaternion(DualQuaternion):
    """Dual quaternion satisfying ``|p| = 1`` and ``<p, d> = 0``.

    Construction validates both constraints to ``tol`` and raises
    :class:`NotOnManifold` otherwise; use :func:`project_to_unit` to repair an
    element first.
    """

    __slots__ = ()

    def __init__(self, p=None, d=None, tol=UNIT_TOL):
        if p is None:
            p = Quaternion(1.0)
        super().__init__(p, d)
        norm_err, orth_err = manifold_residuals(self._v)
        if norm_err > tol or orth_err > tol:
            raise NotOnManifold(
                f"| |p| - 1 | = {norm_err:.3e}, |<p, d>| = {orth_err:.3e} (tol {tol:g})"
            )

    @classmethod
    def from_array(cls, arr, tol=UNIT_TOL):
        arr = np.asarray(arr, dtype=float).reshape(8)
        return cls(Quaternion.from_array(arr[:4]), Quaternion.from_array(arr[4:]), tol=tol)

    def __neg__(self):
        return UnitDualQuaternion.from_array(-self._v)


@dataclass(frozen=True)
class Twist:
    """Body-frame twist ``w + eps v`` with ``v = p_dot + w x p``."""

    w: tuple = (0.0, 0.0, 0.0)
    v: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(float(x) for x in np.asarray(self.w).reshape(3)))
        object.__setattr__(self, "v", tuple(float(x) for x in np.asarray(self.v).reshape(3)))

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=float).reshape(8)
        if arr[0] != 0.0 or arr[4] != 0.0:
            raise NonPureQuaternion("twist scalar parts must be zero")
        return cls(arr[1:4], arr[5:8])

    def as_array(self) -> np.ndarray:
        return np.array([0.0, *self.w, 0.0, *self.v])

    def as_dq(self) -> DualQuaternion:
        return DualQuaternion.from_array(self.as_array())

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))


# ---------------------------------------------------------------------------
# operations


def quat_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    return Quaternion.from_array(qmul_arr(a.as_array(), b.as_array()))


def dq_mul(a: DualQuaternion, b: DualQuaternion) -> DualQuaternion:
    return DualQuaternion.from_array(dqmul_arr(a.as_array(), b.as_array()))


def conj(q: Quaternion) -> Quaternion:
    return q.conj()


def dq_conj(dq: DualQuaternion) -> DualQuaternion:
    out = dqconj_arr(dq.as_array())
    if isinstance(dq, UnitDualQuaternion):
        return UnitDualQuaternion.from_array(out)
    return DualQuaternion.from_array(out)


def _require_pure(*qs):
    for q in qs:
        if not q.is_pure():
            raise NonPureQuaternion(f"scalar part {q.eta:.3e} is not zero")


def dot(u: Quaternion, v: Quaternion) -> float:
    """Dot product of pure quaternions, ``-(uv + vu) / 2``."""
    _require_pure(u, v)
    return -0.5 * (quat_mul(u, v) + quat_mul(v, u)).eta


def cross(u: Quaternion, v: Quaternion) -> Quaternion:
    """Cross product of pure quaternions, ``(uv - vu) / 2``."""
    _require_pure(u, v)
    return 0.5 * (quat_mul(u, v) - quat_mul(v, u))


def vec8(dq: DualQuaternion) -> np.ndarray:
    return dq.as_array()


def unvec8(x) -> DualQuaternion:
    return DualQuaternion.from_array(x)


def hamilton_plus4(q: Quaternion) -> np.ndarray:
    return hamilton_plus4_arr(q.as_array())


def hamilton_plus(dq: DualQuaternion) -> np.ndarray:
    """8x8 matrix with ``hamilton_plus(a) @ vec8(b) == vec8(a * b)``."""
    return hamilton_plus_arr(dq.as_array())


def project_to_unit(dq: DualQuaternion) -> UnitDualQuaternion:
    return UnitDualQuaternion.from_array(project_arr(dq.as_array()))


def pose_from_rp(r: Quaternion, p: Quaternion) -> UnitDualQuaternion:
    """Pose of a rotation ``r`` followed by a translation ``p``: ``r + eps r p / 2``."""
    if abs(r.norm() - 1.0) > ROTATION_TOL:
        raise NonUnitRotation(f"|r| = {r.norm():.9f}")
    _require_pure(p)
    r = Quaternion.from_array(r.as_array() / r.norm())
    return project_to_unit(DualQuaternion(r, 0.5 * quat_mul(r, p)))


def translation_of(dq: DualQuaternion) -> Quaternion:
    """Translation ``p = 2 conj(r) d``; the scalar part is dropped (zero on the manifold)."""
    t = 2.0 * quat_mul(dq.p.conj(), dq.d)
    return Quaternion.pure(t.mu)


def rotation_of(dq: DualQuaternion) -> Quaternion:
    return dq.p
