"""Filon-type quadrature for oscillatory integrals.

Each panel linearises the phase about its centre; the remaining factor
(amplitude times the curvature part of the phase) is expanded in Legendre
polynomials, and the products with the linear exponential are integrated
exactly through

    int_{-1}^{1} P_k(s) exp(i w s) ds = 2 i^k j_k(w).

Panels are refined by doubling until two successive estimates agree.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.special import spherical_jn

from .errors import AccuracyError


def _legendre_setup(degree):
    nodes, weights = npleg.leggauss(degree + 1)
    k = np.arange(degree + 1)
    vander = npleg.legvander(nodes, degree)  # (nodes, k)
    # discrete Legendre projection, exact for polynomials of this degree
    project = ((2 * k + 1) / 2.0)[:, None] * (vander * weights[:, None]).T
    return nodes, project


def _moments(omega, degree):
    """``2 i^k j_k(omega)`` for k = 0..degree, shape ``omega.shape + (degree+1,)``."""
    k = np.arange(degree + 1)
    w = np.asarray(omega, dtype=float)[..., None]
    return 2.0 * (1j ** k) * spherical_jn(k, np.abs(w)) * np.where(w < 0, (-1.0) ** k, 1.0)


def filon_panels(amplitude, phase, dphase, a, b, n_panels, degree=12):
    """One Filon-Legendre estimate of ``int_a^b amplitude(x) exp(i phase(x)) dx``.

    ``amplitude``, ``phase`` and ``dphase`` are vectorised callables.
    """
    nodes, project = _legendre_setup(degree)
    edges = np.linspace(a, b, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    h = 0.5 * (edges[1:] - edges[:-1])
    x = mid[:, None] + h[:, None] * nodes[None, :]
    th_mid = phase(mid)
    omega = dphase(mid) * h
    resid = phase(x) - th_mid[:, None] - omega[:, None] * nodes[None, :]
    amp = amplitude(x) * np.exp(1j * resid)
    coeffs = amp @ project.T
    mom = _moments(omega, degree)
    return np.sum(h * np.exp(1j * th_mid) * np.sum(coeffs * mom, axis=-1))


def filon_integrate(amplitude, phase, dphase, a, b, rtol=1e-10, atol=0.0,
                    n_panels=16, degree=12, max_panels=2 ** 20):
    """Adaptive (panel-doubling) Filon-Legendre quadrature.

    Returns ``(value, error_estimate)``.
    """
    prev = filon_panels(amplitude, phase, dphase, a, b, n_panels, degree)
    while True:
        n_panels *= 2
        cur = filon_panels(amplitude, phase, dphase, a, b, n_panels, degree)
        err = abs(cur - prev)
        if err <= max(rtol * abs(cur), atol):
            return cur, err
        if n_panels >= max_panels:
            raise AccuracyError(f"Filon quadrature stalled at error {err:.3e}", achieved=err)
        prev = cur


def filon_panels_2d(amplitude, phase, grad_phase, box, n_panels, degree=7, chunk=4096):
    """Tensor-product Filon-Legendre estimate over ``box = (a0, b0, a1, b1)``.

    ``amplitude(x, y)`` and ``phase(x, y)`` are vectorised; ``grad_phase``
    returns the pair of partial derivatives.
    """
    a0, b0, a1, b1 = box
    nodes, project = _legendre_setup(degree)
    e0 = np.linspace(a0, b0, n_panels + 1)
    e1 = np.linspace(a1, b1, n_panels + 1)
    m0 = 0.5 * (e0[:-1] + e0[1:])
    m1 = 0.5 * (e1[:-1] + e1[1:])
    h0 = 0.5 * (b0 - a0) / n_panels
    h1 = 0.5 * (b1 - a1) / n_panels
    c0, c1 = (arr.ravel() for arr in np.meshgrid(m0, m1, indexing="ij"))
    total = 0.0 + 0.0j
    for start in range(0, c0.size, chunk):
        p0 = c0[start:start + chunk]
        p1 = c1[start:start + chunk]
        th = phase(p0, p1)
        g0, g1 = grad_phase(p0, p1)
        w0 = g0 * h0
        w1 = g1 * h1
        s = nodes[None, :, None]
        r = nodes[None, None, :]
        x = p0[:, None, None] + h0 * s
        y = p1[:, None, None] + h1 * r
        resid = phase(x, y) - th[:, None, None] - w0[:, None, None] * s - w1[:, None, None] * r
        amp = amplitude(x, y) * np.exp(1j * resid)
        coeffs = np.einsum("ka,pab,lb->pkl", project, amp, project)
        mom0 = _moments(w0, degree)
        mom1 = _moments(w1, degree)
        panel = np.einsum("pkl,pk,pl->p", coeffs, mom0, mom1)
        total += np.sum(np.exp(1j * th) * panel) * h0 * h1
    return total


def filon_integrate_2d(amplitude, phase, grad_phase, box, rtol=1e-3, atol=0.0,
                       n_panels=32, degree=7, max_nodes=4e7):
    """Adaptive 2-D Filon quadrature; returns ``(value, error_estimate)``."""
    prev = filon_panels_2d(amplitude, phase, grad_phase, box, n_panels, degree)
    while True:
        n_panels *= 2
        if (n_panels * (degree + 1)) ** 2 > max_nodes:
            raise AccuracyError("2-D quadrature budget exceeded", achieved=None)
        cur = filon_panels_2d(amplitude, phase, grad_phase, box, n_panels, degree)
        err = abs(cur - prev)
        if err <= max(rtol * abs(cur), atol):
            return cur, err
        prev = cur
