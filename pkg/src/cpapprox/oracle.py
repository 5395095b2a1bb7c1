"""Closed-form target map on the unit disk.

On the disk the map with prescribed boundary modulus ``lam`` of its
derivative, prescribed critical points and the normalization ``F(0) = 0``,
``F(xi) > 0`` is

    F(z) = int_0^z B(t) exp(h(t)) dt,

with ``h`` the analytic function whose real part has boundary values
``log lam`` and ``Im h(0) = 0``, and ``B`` a Blaschke product carrying the
critical points, rotated by a unimodular constant so that ``F(xi) > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

QUAD_TOL = 1e-10


class QuadratureFailure(RuntimeError):
    """Adaptive quadrature could not certify the requested absolute error."""


@dataclass(frozen=True)
class AnalyticCompletion:
    """Power series ``sum a_m z^m`` of ``h``; ``Re h`` matches ``log lam`` on the circle."""

    coeffs: np.ndarray
    tail_tol: float = 1e-10

    def terms(self, radius: float) -> int:
        """Number of leading coefficients whose dropped tail is below ``tail_tol`` on ``|z| <= radius``."""
        mags = np.abs(self.coeffs) * radius ** np.arange(len(self.coeffs))
        tail = np.cumsum(mags[::-1])[::-1]  # tail[m] = sum_{j >= m}
        keep = np.flatnonzero(tail >= self.tail_tol)
        return int(keep[-1]) + 1 if len(keep) else 1

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        m = self.terms(float(np.max(np.abs(z), initial=0.0)))
        return np.polynomial.polynomial.polyval(z, self.coeffs[:m])

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        m = self.terms(float(np.max(np.abs(z), initial=0.0)))
        d = self.coeffs[1:m] * np.arange(1, m)
        return np.polynomial.polynomial.polyval(z, d) if len(d) else np.zeros_like(z)


def analytic_completion(lambda_samples, tail_tol: float = 1e-10) -> AnalyticCompletion:
    """Series coefficients of ``h`` from ``M`` equispaced samples ``lam(exp(2 pi i j / M))``.

    ``M`` must be a power of two, at least 64.
    """
    lam = np.asarray(lambda_samples, dtype=float)
    m = len(lam)
    if m < 64 or m & (m - 1):
        raise ValueError(f"need a power of two >= 64 samples, got {m}")
    if np.any(~(lam > 0)):
        raise ValueError("boundary modulus must be positive")
    spec = np.fft.rfft(np.log(lam)) / m
    coeffs = 2.0 * spec
    coeffs[0] = spec[0].real
    coeffs[-1] = spec[-1].real  # Nyquist cosine term
    return AnalyticCompletion(coeffs, tail_tol)


def blaschke(z, crit, c: complex = 1.0):
    """``c * prod ((z - x) / (1 - conj(x) z)) ** k`` over ``(x, k)`` in ``crit``."""
    z = np.asarray(z, dtype=complex)
    out = np.full(z.shape, complex(c))
    for x, k in crit:
        x = complex(x)
        out = out * ((z - x) / (1.0 - np.conj(x) * z)) ** int(k)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class DiskProblem:
    lambda_samples: np.ndarray
    crit: tuple = ()
    xi: float = 0.5
    tail_tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        lam = np.asarray(self.lambda_samples, dtype=float)
        object.__setattr__(self, "lambda_samples", lam)
        object.__setattr__(self, "crit", tuple((complex(x), int(k)) for x, k in self.crit))
        if np.any(~(lam > 0)):
            raise ValueError("boundary modulus must be positive")
        if not 0.0 < self.xi < 1.0:
            raise ValueError("xi must lie in (0, 1)")
        for x, k in self.crit:
            if not abs(x) < 1.0:
                raise ValueError(f"critical point {x} is not inside the disk")
            if k < 1:
                raise ValueError("critical orders must be positive")
            if x == self.xi:
                raise ValueError("xi coincides with a critical point")

    @classmethod
    def constant(cls, value: float, crit=(), xi: float = 0.5, samples: int = 256) -> "DiskProblem":
        return cls(np.full(samples, float(value)), crit, xi)

    @classmethod
    def from_function(cls, lam, crit=(), xi: float = 0.5, samples: int = 256) -> "DiskProblem":
        """Sample ``lam(theta)`` at ``samples`` equispaced angles."""
        theta = 2.0 * np.pi * np.arange(samples) / samples
        return cls(np.asarray(lam(theta), dtype=float), crit, xi)

    @cached_property
    def h(self) -> AnalyticCompletion:
        return analytic_completion(self.lambda_samples, self.tail_tol)

    def lam(self, theta):
        """Boundary modulus at angle ``theta``, linear between samples."""
        m = len(self.lambda_samples)
        t = np.asarray(theta, dtype=float) / (2.0 * np.pi) * m
        return np.interp(np.mod(t, m), np.arange(m + 1), np.append(self.lambda_samples, self.lambda_samples[0]))

    def _integrand(self, z):
        return blaschke(z, self.crit) * np.exp(self.h(z))

    @cached_property
    def rotation(self) -> complex:
        """The unimodular constant making ``F(xi)`` real and positive."""
        raw = _segment_integral(self._integrand, complex(self.xi))
        if abs(raw) == 0.0:
            raise ValueError("F(xi) vanishes; no normalization exists")
        return np.conj(raw) / abs(raw)


def _segment_integral(g, z: complex) -> complex:
    if z == 0:
        return 0j

    def part(fn):
        val, err, *_ = integrate.quad(fn, 0.0, 1.0, epsabs=QUAD_TOL, epsrel=0.0, limit=200, full_output=1)
        if not err <= QUAD_TOL:
            raise QuadratureFailure(f"quadrature error {err:.2e} along [0, {z}]")
        return val

    re = part(lambda t: (z * g(t * z)).real)
    im = part(lambda t: (z * g(t * z)).imag)
    return complex(re, im)


def F_eval(problem: DiskProblem, z: complex) -> complex:
    """Target map at ``z`` by adaptive quadrature along ``[0, z]``."""
    z = complex(z)
    if not abs(z) < 1.0:
        raise ValueError("z must lie inside the unit disk")
    return problem.rotation * _segment_integral(problem._integrand, z)


def derivative(problem: DiskProblem, z):
    """``F'(z) = c B(z) exp(h(z))``."""
    return problem.rotation * problem._integrand(np.asarray(z, dtype=complex))


def derivative_modulus(problem: DiskProblem, z):
    """``|B(z)| exp(Re h(z))``, computed without the rotation or the conjugate part."""
    z = np.asarray(z, dtype=complex)
    return np.abs(blaschke(z, problem.crit)) * np.exp(problem.h(z).real)
