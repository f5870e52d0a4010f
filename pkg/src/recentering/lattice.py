"""Periodic spatial lattice, field configurations and the real Fourier mode basis."""

from dataclasses import dataclass
from functools import cached_property
import itertools

import numpy as np

from .errors import InputError

__all__ = ["LatticeSpec", "FieldConfig", "Mode"]


@dataclass(frozen=True)
class Mode:
    """One real oscillator mode: ``kind`` is ``'cos'`` or ``'sin'``."""
    index: int
    wavenumber: tuple
    kind: str
    k: float


@dataclass(frozen=True, eq=False)
class LatticeSpec:
    """Hypercubic periodic lattice with ``n**d`` sites in a box of side ``L_box``.

    Spatial integrals become ``dx**d * sum_x`` and momentum integrals
    ``(2 pi / L_box)**d * sum_k``.  Modes are ordered by increasing ``|k|``,
    ties by the lexicographic order of the integer wave vector; each
    ``+-k`` pair yields a cosine and a sine mode.
    """
    d: int
    n: int
    L_box: float = 2 * np.pi

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise InputError(f"d must be 1, 2 or 3, got {self.d}")
        if self.n < 2 or self.n % 2:
            raise InputError(f"n must be even and >= 2, got {self.n}")
        if self.d == 3 and self.n > 4:
            raise InputError("d = 3 lattices are limited to n <= 4")
        if not self.L_box > 0:
            raise InputError(f"L_box must be positive, got {self.L_box}")

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def sites(self):
        return self.n ** self.d

    @property
    def dx(self):
        return self.L_box / self.n

    @property
    def cell(self):
        """Site volume ``dx**d``."""
        return self.dx ** self.d

    @property
    def volume(self):
        return self.L_box ** self.d

    @property
    def dk(self):
        """Momentum cell ``(2 pi / L_box)**d``."""
        return (2 * np.pi / self.L_box) ** self.d

    @cached_property
    def positions(self):
        """Site coordinates, shape ``(sites, d)``, C order."""
        grid = np.indices(self.shape).reshape(self.d, -1).T
        return grid * self.dx

    def _wrap(self, j):
        h = self.n // 2
        return tuple(((x + h - 1) % self.n) - h + 1 for x in j)

    @cached_property
    def modes(self):
        h = self.n // 2
        vecs = list(itertools.product(range(-h + 1, h + 1), repeat=self.d))
        vecs.sort(key=lambda j: (sum(x * x for x in j), j))
        used = set()
        out = []
        unit = 2 * np.pi / self.L_box
        for j in vecs:
            if j in used:
                continue
            mj = self._wrap(tuple(-x for x in j))
            used.add(j)
            used.add(mj)
            k = unit * float(np.sqrt(sum(x * x for x in j)))
            if mj == j:
                out.append(Mode(len(out), j, "cos", k))
            else:
                rep = max(j, mj)
                out.append(Mode(len(out), rep, "cos", k))
                out.append(Mode(len(out), rep, "sin", k))
        return tuple(out)

    @cached_property
    def mode_k(self):
        return np.array([m.k for m in self.modes])

    @cached_property
    def basis(self):
        """Real orthonormal mode functions ``h[mode, site]``.

        Orthonormal in the lattice measure: ``cell * h @ h.T = 1``.
        """
        unit = 2 * np.pi / self.L_box
        x = self.positions
        H = np.empty((self.sites, self.sites))
        V = self.volume
        for m in self.modes:
            phase = x @ (unit * np.array(m.wavenumber, dtype=float))
            self_conj = self._wrap(tuple(-v for v in m.wavenumber)) == tuple(m.wavenumber)
            if self_conj:
                H[m.index] = np.cos(phase) / np.sqrt(V)
            elif m.kind == "cos":
                H[m.index] = np.sqrt(2.0 / V) * np.cos(phase)
            else:
                H[m.index] = np.sqrt(2.0 / V) * np.sin(phase)
        return H

    def to_modes(self, values):
        """Mode amplitudes ``cell * sum_x h_n(x) f(x)`` of a site field."""
        return self.cell * (self.basis @ np.asarray(values, dtype=float).reshape(-1))

    def from_modes(self, amps):
        return (np.asarray(amps, dtype=float) @ self.basis).reshape(self.shape)

    def dispersion(self, m):
        """``omega_n = sqrt(k_n**2 + m**2)`` in mode order."""
        return np.sqrt(self.mode_k ** 2 + float(m) ** 2)

    def laplacian_form(self):
        """Site matrix ``G`` with ``cell * phi @ G @ phi = int (grad phi)**2``.

        Spectral: ``G = cell * h.T diag(k^2) h`` so the gradient energy of
        mode ``n`` is exactly ``k_n**2``.
        """
        h = self.basis
        return self.cell * (h.T * self.mode_k ** 2) @ h


@dataclass(frozen=True, eq=False)
class FieldConfig:
    """Momentum and field values on the lattice sites."""
    pi: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if pi.shape != phi.shape:
            raise InputError(f"pi shape {pi.shape} != phi shape {phi.shape}")
        if not (np.all(np.isfinite(pi)) and np.all(np.isfinite(phi))):
            raise InputError("field configuration has non-finite entries")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def zeros(cls, spec):
        return cls(np.zeros(spec.shape), np.zeros(spec.shape))

    @classmethod
    def random(cls, spec, rng, scale=0.3):
        return cls(scale * rng.standard_normal(spec.shape),
                   scale * rng.standard_normal(spec.shape))

    def flat(self):
        return self.pi.reshape(-1), self.phi.reshape(-1)

    def check(self, spec):
        if self.pi.size != spec.sites:
            raise InputError(f"config has {self.pi.size} sites, lattice has {spec.sites}")
        return self
