"""Ambient space-form models and immersion charts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import engines
from .errors import DomainError, ModelConsistencyError

EUCLIDEAN = "euclidean"
SPHERE = "sphere"
HYPERBOLIC = "hyperbolic"

MODEL_TOL = 1e-9


@dataclass(frozen=True)
class AmbientModel:
    """A space form presented inside a flat (or Lorentzian) container.

    * euclidean: the container itself, curvature 0.
    * sphere: {<x,x> = 1/c~} in Euclidean R^(m+1), c~ > 0.
    * hyperbolic: upper sheet of {<x,x> = 1/c~} in Lorentzian R^(m,1)
      (one minus sign, last coordinate), c~ < 0.
    """

    kind: str
    curvature: float
    embedding_dimension: int

    def __post_init__(self):
        if self.kind not in (EUCLIDEAN, SPHERE, HYPERBOLIC):
            raise ValueError(f"unknown ambient kind {self.kind!r}")
        c = self.curvature
        ok = {EUCLIDEAN: c == 0.0, SPHERE: c > 0.0, HYPERBOLIC: c < 0.0}
        if not ok[self.kind]:
            raise ValueError(
                f"{self.kind} ambient requires curvature sign constraint, got {c}")

    @property
    def flat(self):
        return self.kind == EUCLIDEAN

    @property
    def signature(self):
        """Diagonal of the container metric."""
        s = np.ones(self.embedding_dimension)
        if self.kind == HYPERBOLIC:
            s[-1] = -1.0
        return s

    def inner(self, u, v):
        """Container inner product along the last axis (broadcasts)."""
        return np.einsum("...k,...k->...", u * self.signature, v)

    def constraint_residual(self, x):
        """|<x,x> - 1/c~|, scaled; zero array for the flat kind."""
        if self.flat:
            return np.zeros(np.shape(x)[:-1])
        target = 1.0 / self.curvature
        return np.abs(self.inner(x, x) - target) / max(1.0, abs(target))


def euclidean(m):
    return AmbientModel(EUCLIDEAN, 0.0, m)


def sphere(c, m):
    return AmbientModel(SPHERE, c, m + 1)


def hyperbolic(c, m):
    return AmbientModel(HYPERBOLIC, c, m + 1)


@dataclass(frozen=True)
class ImmersionChart:
    """A parametric immersion of a box in R^n into an ambient space form.

    ``map`` takes a sequence of n coordinate scalars (floats, arrays or
    hyper-duals) and returns the container coordinates; writing it with the
    :mod:`flatbundle.dual` math functions makes it AD-differentiable.
    """

    name: str
    map: object
    n: int
    ambient: AmbientModel
    c: object            # asserted intrinsic curvature, or None if unasserted
    domain: tuple        # per-axis (lo, hi)
    periodic: tuple = None
    engine: str = engines.AD

    def __post_init__(self):
        if self.periodic is None:
            object.__setattr__(self, "periodic", (False,) * self.n)
        if len(self.domain) != self.n or len(self.periodic) != self.n:
            raise ValueError("domain/periodic length must equal n")

    @property
    def C(self):
        """Curvature gap c~ - c of the theorem, or None if c is unasserted."""
        if self.c is None:
            return None
        return self.ambient.curvature - self.c

    @property
    def codimension(self):
        radial = 0 if self.ambient.flat else 1
        return self.ambient.embedding_dimension - self.n - radial

    def fd_step(self):
        return engines.fd_step(self.domain)

    def usable_domain(self, engine=None):
        """Declared domain shrunk by the stencil radius on non-periodic axes."""
        engine = engine or self.engine
        if engine == engines.AD:
            return tuple(self.domain)
        h = self.fd_step()
        out = []
        for k, (lo, hi) in enumerate(self.domain):
            if self.periodic[k]:
                out.append((lo, hi))
            else:
                pad = engines.STENCIL_RADIUS * h[k]
                out.append((lo + pad, hi - pad))
        return tuple(out)

    def contains(self, u, engine=None, interior=False):
        u = np.asarray(u, dtype=float)
        box = self.usable_domain(engine) if interior else self.domain
        ok = np.ones(u.shape[:-1], dtype=bool)
        for k, (lo, hi) in enumerate(box):
            if self.periodic[k]:
                continue
            ok &= (u[..., k] >= lo - 1e-12) & (u[..., k] <= hi + 1e-12)
        return ok

    def evaluate(self, u, check=True):
        """Evaluate the map; checks domain membership and the model constraint."""
        u = np.asarray(u, dtype=float)
        if check and not np.all(self.contains(u)):
            raise DomainError(f"parameter {u!r} outside domain of {self.name}")
        x = engines.evaluate(self.map, u)
        if check:
            res = self.ambient.constraint_residual(x)
            worst = float(np.max(res)) if np.size(res) else 0.0
            if worst > MODEL_TOL:
                raise ModelConsistencyError(
                    f"{self.name}: model constraint residual {worst:.3e}")
        return x

    def jet(self, u, engine=None, interior_check=True):
        engine = engine or self.engine
        u = np.asarray(u, dtype=float)
        if interior_check and not np.all(self.contains(u, engine, interior=True)):
            raise DomainError(
                f"stencil around {u!r} leaves domain of {self.name}")
        h = self.fd_step() if engine == engines.FD else None
        return engines.jet(self.map, u, self.n, engine=engine, h=h)
