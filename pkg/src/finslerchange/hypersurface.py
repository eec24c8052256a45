"""Hypersurfaces of a Finsler space and their behaviour under the
Randers-type conformal change.

A hypersurface is given parametrically, x^i = x^i(u^1 .. u^{n-1}).  With a
tangential supporting element y^i = B^i_a v^a, the ambient metric induces
tangent projection factors, a unique unit normal (up to sign), and the
normal curvature vector whose vanishing characterises totally geodesic
hypersurfaces.

Sign convention: by default the normal is chosen so that the frame
(B_1, ..., B_{n-1}, N) is positively oriented in the ambient coordinates,
which is deterministic and continuous along a connected chart; a
``normal_ref`` vector in the spec overrides this with sign(N . ref) > 0.
"""

from __future__ import annotations

import numpy as np

from .change import ChangedPair
from .core import FinslerSpace
from .jets import Jet, JetDomainError
from .lang import HypersurfaceSpec, evaluate


class HypersurfaceGeometry:
    """An embedding bound to an ambient Finsler space."""

    def __init__(self, spec: HypersurfaceSpec, space: FinslerSpace):
        if spec.dim != space.n:
            raise ValueError(
                f"hypersurface {spec.name!r} is for dim {spec.dim}, "
                f"ambient space has dim {space.n}")
        self.spec = spec
        self.space = space
        self.n = spec.dim
        self.m = spec.pdim

    def at(self, u, v):
        return HyperPoint(self, u, v)


class HyperPoint:
    """Embedding data and induced geometry at one (u, v)."""

    def __init__(self, geom: HypersurfaceGeometry, u, v):
        self.geom = geom
        self.n, self.m = geom.n, geom.m
        self.u = np.asarray(u, dtype=float)
        self.v = np.asarray(v, dtype=float)
        if self.u.shape != (self.m,) or self.v.shape != (self.m,):
            raise ValueError(f"expected {self.m} surface coordinates")

        env = {f"u{a + 1}": j for a, j in enumerate(
            _u_jets(self.u, order=2))}
        probe = env["u1"]
        self.x = np.empty(self.n)
        self.B = np.empty((self.n, self.m))      # B[i, a] = dx^i/du^a
        self.B2 = np.empty((self.n, self.m, self.m))
        for i, expr in enumerate(geom.spec.embed_exprs):
            val = evaluate(expr, env)
            if not isinstance(val, Jet):
                val = probe._like(float(val))
            self.x[i] = val.value
            for a in range(self.m):
                self.B[i, a] = val.extract(_ei(self.m, a))
                for b in range(a, self.m):
                    d2 = val.extract(_eij(self.m, a, b))
                    self.B2[i, a, b] = self.B2[i, b, a] = d2
        self.y = self.B @ self.v
        self.pg = geom.space.point(self.x, self.y)
        self._vals = {}

    def _memo(self, name, build):
        if name not in self._vals:
            self._vals[name] = build()
        return self._vals[name]

    def induced_metric(self):
        """g_ab = B^i_a g_ij B^j_b."""
        return self._memo(
            "g_ind", lambda: self.B.T @ self.pg.g_low() @ self.B)

    def normal_up(self):
        """Unit normal N^i: g-orthogonal to every tangent, unit g-length."""
        def build():
            M = self.B.T @ self.pg.g_low()        # (m, n); kernel is span(N)
            _, s, vt = np.linalg.svd(M)
            if s[-1] < 1e-10 * max(1.0, s[0]):
                raise JetDomainError(
                    "embedding is rank-deficient here; normal direction "
                    "is not unique")
            k = vt[-1]
            norm2 = float(k @ self.pg.g_low() @ k)
            if norm2 <= 0.0:
                raise JetDomainError(
                    f"no unit normal: candidate has g-norm^2 {norm2:.3g}")
            N = k / np.sqrt(norm2)
            ref = self.geom.spec.normal_ref
            if ref is not None:
                dot = float(N @ ref)
                if dot == 0.0:
                    raise JetDomainError(
                        "normal_ref is orthogonal to the normal here; "
                        "cannot fix a sign")
                if dot < 0.0:
                    N = -N
            else:
                frame = np.column_stack([self.B, N])
                if np.linalg.det(frame) < 0.0:
                    N = -N
            return N
        return self._memo("N_up", build)

    def normal_low(self):
        return self._memo("N_low", lambda: self.pg.g_low() @ self.normal_up())

    def tangent_inverse(self):
        """B_i^a = g^{ab} B^j_b g_ji, the tangential part of the inverse
        frame; rows are surface indices."""
        def build():
            g_ind_inv = np.linalg.inv(self.induced_metric())
            return g_ind_inv @ self.B.T @ self.pg.g_low()
        return self._memo("B_inv", build)

    def frame_residuals(self):
        """Max deviations of the standard frame identities:
        B^i_a B_i^b = delta, B^i_a N_i = 0, N^i N_i = 1,
        B^i_a B_j^a + N^i N_j = delta^i_j."""
        Binv = self.tangent_inverse()
        N = self.normal_up()
        Nl = self.normal_low()
        r1 = np.max(np.abs(Binv @ self.B - np.eye(self.m)))
        r2 = np.max(np.abs(Nl @ self.B))
        r3 = abs(float(N @ Nl) - 1.0)
        r4 = np.max(np.abs(self.B @ Binv + np.outer(N, Nl) - np.eye(self.n)))
        return max(r1, r2, r3, r4)

    def normal_curvature(self):
        """H_a = N_i (v^b B^i_ba + N^i_j B^j_a); identically zero exactly
        for totally geodesic hypersurfaces."""
        def build():
            B0 = np.einsum("b,iba->ia", self.v, self.B2)
            inner = B0 + self.pg.n_conn() @ self.B
            return self.normal_low() @ inner
        return self._memo("H", build)


def _u_jets(u, order):
    from .jets import lift
    return lift(list(u), active=range(len(u)), order=order)


def _ei(m, a):
    e = [0] * m
    e[a] = 1
    return e


def _eij(m, a, b):
    e = [0] * m
    e[a] += 1
    e[b] += 1
    return e


class ChangedHypersurface:
    """A hypersurface seen from both sides of a metric change."""

    def __init__(self, metric_spec, change_spec, hyper_spec):
        self.pair = ChangedPair(metric_spec, change_spec)
        self.base_h = HypersurfaceGeometry(hyper_spec, self.pair.base)
        self.star_h = HypersurfaceGeometry(hyper_spec, self.pair.starred)

    def at(self, u, v):
        return ChangedHyperPoint(self, u, v)


class ChangedHyperPoint:
    """Base and changed hypersurface data at one (u, v), plus the
    closed-form predictions that tie them together."""

    def __init__(self, owner: ChangedHypersurface, u, v):
        self.base = owner.base_h.at(u, v)
        self.star = owner.star_h.at(u, v)
        self.cp = owner.pair.at(self.base.x, self.base.y)

    def b_dot_normal(self):
        """Tangency scalar b_i N^i; the frame transfer below needs it to
        vanish."""
        return float(self.cp.b_low @ self.base.normal_up())

    def gstar_on_normal(self):
        """Direct value of g*_ij N^i N^j on the base normal."""
        N = self.base.normal_up()
        return float(N @ self.star.pg.g_low() @ N)

    def gstar_on_normal_closed(self):
        """Closed form tau + (b_i N^i)^2."""
        return self.cp.tau + self.b_dot_normal() ** 2

    def normal_transfer_closed(self):
        """N*^i = N^i / sqrt(tau) (requires tangential b)."""
        return self.base.normal_up() / np.sqrt(self.cp.tau)

    def conormal_transfer_closed(self):
        """N*_i = sqrt(tau) N_i (requires tangential b)."""
        return np.sqrt(self.cp.tau) * self.base.normal_low()

    def d_term(self):
        """N_i D^i_j B^j_a: the obstruction separating the changed normal
        curvature from a pure rescaling; vanishes for projective changes."""
        return (self.base.normal_low()
                @ self.cp.d_jacobian() @ self.base.B)

    def hstar_decomposition_residual(self):
        """Residual of H*_a = sqrt(tau) (H_a + N_i D^i_j B^j_a), which
        needs only tangency of b, not projectivity."""
        want = np.sqrt(self.cp.tau) * (self.base.normal_curvature()
                                       + self.d_term())
        return np.max(np.abs(self.star.normal_curvature() - want))

    def hstar_reported_residual(self):
        """Residual of the reported relation
        H*_a = sqrt(tau) H_a + N_i D^i_j B^j_a (no scale factor on the
        correction term); coincides with the decomposition above whenever
        the correction vanishes."""
        want = (np.sqrt(self.cp.tau) * self.base.normal_curvature()
                + self.d_term())
        return np.max(np.abs(self.star.normal_curvature() - want))
