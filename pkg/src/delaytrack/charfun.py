"""Characteristic matrix function of a delayed model and WAMS transfer maps.

The eigenvalues of a linear DDAE are the complex numbers s at which

    P(s) = s E - A0 - sum_j A_j exp(-s tau_j)

is singular.  For wide-area measurement (WAMS) latency with packet dropouts
and Gamma-distributed noise, the single delayed term is shaped in the
frequency domain by two scalar transfer functions h_p and h_s, giving

    P(s) = s E - A0 - h_p(s) h_s(s) A1 exp(-s tau0).

All evaluations scale the real sparse matrices by complex scalars computed
once per delay term, so the sparsity pattern of the inputs is preserved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, SingularityError

# exp() overflows shortly above this; treat as a nonfinite evaluation
_EXP_MAX = 700.0


def _delay_scalar(s, tau):
    z = -s * tau
    if z.real > _EXP_MAX:
        raise SingularityError(
            f"exp({z.real:.3g}) overflows evaluating a delay term "
            f"(s={s}, tau={tau})"
        )
    return np.exp(z)


def _check_finite(mat, what):
    data = mat.data if hasattr(mat, "data") else np.asarray(mat)
    if data.size and not np.all(np.isfinite(data)):
        raise SingularityError(f"nonfinite entries in {what}")
    return mat


def eval_P(model, s):
    """Characteristic matrix s*E - A0 - sum_j A_j exp(-s*tau_j).

    Returns a complex sparse matrix whose pattern is the union of the
    input patterns.  Raises :class:`SingularityError` if a delay
    exponential overflows.
    """
    s = complex(s)
    P = s * model.E - (1.0 + 0.0j) * model.A0
    for tau, A in model.delay_terms:
        P = P - _delay_scalar(s, tau) * A
    return _check_finite(P, "P(s)")


def eval_dP_ds(model, s):
    """Derivative of the characteristic matrix with respect to s:
    E + sum_j tau_j A_j exp(-s*tau_j)."""
    s = complex(s)
    D = (1.0 + 0.0j) * model.E
    for tau, A in model.delay_terms:
        D = D + (tau * _delay_scalar(s, tau)) * A
    return _check_finite(D, "dP/ds")


@dataclass(frozen=True)
class WamsSpec:
    """Stochastic communication-delay parameters.

    tau0 is the constant latency component; p_dr the packet dropout rate in
    [0, 1); T the nominal delivery period; alpha and b the scale and shape
    of the Gamma-distributed noise.  ``constant_limit=True`` degenerates the
    transfer functions to h_p = h_s = 1 with zero derivatives, which turns
    the WAMS model into a plain constant delay of magnitude tau0.
    """

    tau0: float
    p_dr: float = 0.0
    T: float = 1.0
    alpha: float = 0.0
    b: float = 0.0
    constant_limit: bool = False

    def __post_init__(self):
        if self.tau0 < 0.0:
            raise ConfigurationError("tau0 must be non-negative")
        if not 0.0 <= self.p_dr < 1.0:
            raise ConfigurationError("p_dr must lie in [0, 1)")
        if not self.T > 0.0:
            raise ConfigurationError("delivery period T must be positive")
        if self.alpha < 0.0 or self.b < 0.0:
            raise ConfigurationError("alpha and b must be non-negative")

    @classmethod
    def constant_delay(cls, tau0):
        """Spec for the constant-delay degeneration (no dropouts, no noise)."""
        return cls(tau0=tau0, constant_limit=True)


def eval_hp(spec, s):
    """Packet-dropout transfer function.

    h_p(s) = (1 - p_dr)/s * [1 + (p_dr - 1) exp(-sT) / (1 - p_dr exp(-sT))]
    """
    if spec.constant_limit:
        return 1.0 + 0.0j
    s = complex(s)
    if abs(s) < 1e-150:
        raise SingularityError("h_p has a pole at s = 0")
    e = _delay_scalar(s, spec.T)
    den = 1.0 - spec.p_dr * e
    if abs(den) < 1e-14:
        raise SingularityError(
            f"h_p denominator 1 - p_dr*exp(-sT) vanishes at s={s}"
        )
    q = 1.0 - spec.p_dr
    return (q / s) * (1.0 + (spec.p_dr - 1.0) * e / den)


def eval_dhp_ds(spec, s):
    """Analytic s-derivative of :func:`eval_hp`.

    With q = 1 - p_dr, D = 1 - p_dr exp(-sT) and u = 1 - q exp(-sT)/D the
    quotient rule collapses (D + p_dr exp(-sT) = 1) to

        dh_p/ds = -q u / s^2 + q^2 T exp(-sT) / (s D^2).
    """
    if spec.constant_limit:
        return 0.0 + 0.0j
    s = complex(s)
    if abs(s) < 1e-150:
        raise SingularityError("h_p has a pole at s = 0")
    e = _delay_scalar(s, spec.T)
    den = 1.0 - spec.p_dr * e
    if abs(den) < 1e-14:
        raise SingularityError(
            f"h_p denominator 1 - p_dr*exp(-sT) vanishes at s={s}"
        )
    q = 1.0 - spec.p_dr
    u = 1.0 - q * e / den
    return -q * u / (s * s) + q * q * spec.T * e / (s * den * den)


def _hs_base(spec, s):
    base = 1.0 + spec.alpha * complex(s) / (1.0 - spec.p_dr)
    if abs(base) < 1e-150:
        raise SingularityError("h_s base vanishes; pole of the noise shaping")
    frac = abs(spec.b - round(spec.b)) > 1e-12
    if frac and base.real < 0.0 and abs(base.imag) <= 1e-14 * abs(base.real):
        raise SingularityError(
            "h_s base on the negative real branch cut with non-integer b"
        )
    return base


def eval_hs(spec, s):
    """Gamma-noise transfer function (1 + alpha s/(1 - p_dr))^(-b).

    Uses the principal branch of the complex power; b may be non-integer.
    """
    if spec.constant_limit or spec.b == 0.0 or spec.alpha == 0.0:
        return 1.0 + 0.0j
    return _hs_base(spec, s) ** (-spec.b)


def eval_dhs_ds(spec, s):
    """Analytic s-derivative of :func:`eval_hs`:
    -b * alpha/(1-p_dr) * base^(-b-1)."""
    if spec.constant_limit or spec.b == 0.0 or spec.alpha == 0.0:
        return 0.0 + 0.0j
    c = spec.alpha / (1.0 - spec.p_dr)
    return -spec.b * c * _hs_base(spec, s) ** (-spec.b - 1.0)


def _single_delay_matrix(model):
    if model.mu != 1:
        raise ConfigurationError(
            f"WAMS shaping requires exactly one delay term, got mu={model.mu}"
        )
    return model.delay_terms[0][1]


def transfer_scalars(spec, s):
    """Scalar pair (g, g_s): the shaped delay factor and its h-part slope.

    g   = h_p(s) h_s(s) exp(-s tau0)
    g_s = (dh_p/ds h_s + h_p dh_s/ds) exp(-s tau0)

    The full s-derivative of g is g_s - tau0 * g.
    """
    s = complex(s)
    e0 = _delay_scalar(s, spec.tau0)
    hp, hs = eval_hp(spec, s), eval_hs(spec, s)
    g = hp * hs * e0
    g_s = (eval_dhp_ds(spec, s) * hs + hp * eval_dhs_ds(spec, s)) * e0
    return g, g_s


def eval_ST(model, spec, s):
    """Shaped delayed-state matrix h_p h_s A1 exp(-s tau0)."""
    A1 = _single_delay_matrix(model)
    g, _ = transfer_scalars(spec, s)
    return _check_finite(g * A1, "S_T")


def eval_STD(model, derivatives, spec, s):
    """Parameter-forcing companion of :func:`eval_ST`:

    (dA1 h_p h_s + A1 (dh_p/ds h_s + h_p dh_s/ds)) exp(-s tau0).
    """
    A1 = _single_delay_matrix(model)
    dA1 = derivatives.dA_terms[0]
    g, g_s = transfer_scalars(spec, s)
    return _check_finite(g * dA1 + g_s * A1, "S_TD")


def eval_dST_ds(model, spec, s):
    """Exact s-derivative of :func:`eval_ST`: (g_s - tau0 g) A1."""
    A1 = _single_delay_matrix(model)
    g, g_s = transfer_scalars(spec, s)
    return _check_finite((g_s - spec.tau0 * g) * A1, "dS_T/ds")


def eval_P_wams(model, spec, s):
    """WAMS characteristic matrix s*E - A0 - h_p h_s A1 exp(-s tau0)."""
    s = complex(s)
    P = s * model.E - (1.0 + 0.0j) * model.A0 - eval_ST(model, spec, s)
    return _check_finite(P, "P(s) (WAMS)")


def eval_dP_ds_wams(model, spec, s):
    """Exact s-derivative of the WAMS characteristic matrix."""
    return _check_finite(
        (1.0 + 0.0j) * model.E - eval_dST_ds(model, spec, s), "dP/ds (WAMS)"
    )
