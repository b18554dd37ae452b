"""Shared fixtures and the independent complex-arithmetic oracle.

The oracle in this file deliberately re-derives everything with dense
complex numpy: it never calls the package's real-split assembly, so the
two encodings of the continuation system check each other.
"""

import cmath
import os

import numpy as np
import pytest

import delaytrack as dt

HERE = os.path.dirname(__file__)
FIXTURES = os.path.join(HERE, "..", "fixtures")

# principal root of s + exp(-s) = 0, certified by |g(s)| < 1e-15
HAYES_PRINCIPAL = complex(-0.3181315052047641, 1.3372357014306895)


@pytest.fixture
def hayes_model():
    return dt.DelayedLinearModel([[1.0]], [[0.0]], [(1.0, [[-1.0]])])


@pytest.fixture
def hayes_family(hayes_model):
    return dt.DelayParameterFamily(hayes_model, 0, (0.5, 2.5))


@pytest.fixture
def quadratic_family():
    """Delay-free 2x2 rotation-damping family A0(p) = [[0,1],[-1,-p]]."""
    base = dt.DelayedLinearModel(np.eye(2), [[0.0, 1.0], [-1.0, 0.0]])
    slopes = dt.ModelDerivatives(
        np.zeros((2, 2)), [[0.0, 0.0], [0.0, -1.0]], []
    )
    return dt.AffineFamily(base, slopes, (0.05, 1.2))


@pytest.fixture
def coalescing_family():
    """Affine 2x2 family with eigenvalues -1 +/- sqrt(p - 1).

    A conjugate pair collapses onto the real axis at p = 1 and splits into
    two real branches (companion form of s^2 + 2 s + (2 - p)).
    """
    base = dt.DelayedLinearModel(np.eye(2), [[0.0, 1.0], [-2.0, -2.0]])
    slopes = dt.ModelDerivatives(
        np.zeros((2, 2)), [[0.0, 0.0], [1.0, 0.0]], []
    )
    return dt.AffineFamily(base, slopes, (0.2, 1.8))


def quadratic_eigenvalue(p):
    """Upper root of the rotation-damping family, (-p + sqrt(p^2-4))/2."""
    return (-p + cmath.sqrt(complex(p * p - 4.0, 0.0))) / 2.0


def random_model_with_derivatives(r, mu, seed, density=0.6):
    """Dense-ish random model plus independent random derivatives."""
    rng = np.random.default_rng(seed)

    def mat(scale=1.0):
        M = rng.standard_normal((r, r))
        M[rng.random((r, r)) > density] = 0.0
        return scale * M

    model = dt.DelayedLinearModel(
        mat() + 2.0 * np.eye(r),
        mat() - 2.0 * np.eye(r),
        [(float(rng.uniform(0.05, 1.5)), mat(0.5)) for _ in range(mu)],
    )
    derivs = dt.ModelDerivatives(mat(0.7), mat(0.7), [mat(0.7) for _ in range(mu)])
    return model, derivs


def random_state(r, seed, p=0.4):
    rng = np.random.default_rng(seed)
    phi = rng.standard_normal(r) + 1j * rng.standard_normal(r)
    phi = phi / np.sqrt(phi @ phi)
    s = complex(rng.uniform(-2.0, 0.5), rng.uniform(-3.0, 3.0))
    return dt.TrackState.from_eigenpair(p, s, phi)


# --- independent transfer functions (raw quotient rule, no simplification)

def oracle_hp(spec, s):
    q = 1.0 - spec.p_dr
    e = cmath.exp(-s * spec.T)
    return (q / s) * (1.0 + (spec.p_dr - 1.0) * e / (1.0 - spec.p_dr * e))


def oracle_dhp_ds(spec, s):
    q = 1.0 - spec.p_dr
    e = cmath.exp(-s * spec.T)
    D = 1.0 - spec.p_dr * e
    u = 1.0 + (spec.p_dr - 1.0) * e / D
    # d/ds[e/D] by the raw quotient rule
    de = -spec.T * e
    dD = spec.p_dr * spec.T * e
    du = (spec.p_dr - 1.0) * (de * D - e * dD) / (D * D)
    return -q / (s * s) * u + (q / s) * du


def oracle_hs(spec, s):
    if spec.b == 0.0 or spec.alpha == 0.0:
        return 1.0 + 0.0j
    return (1.0 + spec.alpha * s / (1.0 - spec.p_dr)) ** (-spec.b)


def oracle_dhs_ds(spec, s):
    if spec.b == 0.0 or spec.alpha == 0.0:
        return 0.0 + 0.0j
    c = spec.alpha / (1.0 - spec.p_dr)
    return -spec.b * c * (1.0 + c * s) ** (-spec.b - 1.0)


def complex_split_oracle(model, derivs, state, regime, delay_index=None,
                         wams=None):
    """(M, h) from the complex continuation equation, split independently.

    Builds P, the dsdp coefficient W = dP/ds, and the parameter forcing
    G = -dP/dp (explicit part) with dense complex arithmetic, then encodes
    the real form [[M1, M2], [M3, 0]] y' = h directly.
    """
    r = model.r
    s = state.s
    phi = state.phi
    E = model.E.toarray().astype(complex)
    A0 = model.A0.toarray().astype(complex)
    dE = derivs.dE.toarray().astype(complex)
    dA0 = derivs.dA0.toarray().astype(complex)
    As = [A.toarray().astype(complex) for _, A in model.delay_terms]
    dAs = [dA.toarray().astype(complex) for dA in derivs.dA_terms]
    taus = list(model.taus)

    if regime in ("single", "multi"):
        P = s * E - A0
        W = E.copy()
        G = -(s * dE - dA0)
        for tau, A, dA in zip(taus, As, dAs):
            e = cmath.exp(-s * tau)
            P -= A * e
            W += tau * A * e
            G += dA * e
    elif regime == "delay_param":
        p = state.p
        Al = As[delay_index]
        el = cmath.exp(-s * p)
        P = s * E - A0 - Al * el
        W = E + p * Al * el
        G = -(s * dE - dA0 + Al * el * s)
        for j, (tau, A) in enumerate(zip(taus, As)):
            if j == delay_index:
                continue
            e = cmath.exp(-s * tau)
            P -= A * e
            W += tau * A * e
    elif regime == "wams":
        A1, dA1 = As[0], dAs[0]
        if wams.constant_limit:
            hp = hs = 1.0 + 0.0j
            dhp = dhs = 0.0 + 0.0j
        else:
            hp, hs = oracle_hp(wams, s), oracle_hs(wams, s)
            dhp, dhs = oracle_dhp_ds(wams, s), oracle_dhs_ds(wams, s)
        e0 = cmath.exp(-s * wams.tau0)
        g = hp * hs * e0
        dg = (dhp * hs + hp * dhs) * e0 - wams.tau0 * g
        P = s * E - A0 - g * A1
        W = E - dg * A1
        G = -(s * dE - dA0 - g * dA1)
    else:
        raise ValueError(regime)

    w = W @ phi
    gvec = G @ phi
    M = np.zeros((2 * r + 2, 2 * r + 2))
    M[:r, :r] = P.real
    M[:r, r:2 * r] = -P.imag
    M[r:2 * r, :r] = P.imag
    M[r:2 * r, r:2 * r] = P.real
    M[:r, 2 * r] = w.real
    M[:r, 2 * r + 1] = -w.imag
    M[r:2 * r, 2 * r] = w.imag
    M[r:2 * r, 2 * r + 1] = w.real
    M[2 * r, :r] = phi.real
    M[2 * r, r:2 * r] = -phi.imag
    M[2 * r + 1, :r] = phi.imag
    M[2 * r + 1, r:2 * r] = phi.real
    h = np.concatenate([gvec.real, gvec.imag, [0.0, 0.0]])
    return M, h


def system_as_dense(system):
    M = system.M
    return (M.toarray() if hasattr(M, "toarray") else np.asarray(M)), system.h
