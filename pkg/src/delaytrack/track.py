"""Continuation tracking of eigenpairs across a parameter sweep.

Implicit differentiation of P(s(p), p) phi(p) = 0 together with the
eigenvector normalization phi^T phi = 1 yields a real ODE in

    y(p) = (phi_r, phi_i, s_r, s_i),        M(y) dy/dp = h(y)

whose mass matrix M has the block form [[M1, M2], [M3, 0]]: M1 is the
real/imaginary split of P(s), M2 the split of (dP/ds) phi, and M3 the
normalization rows.  Four assembly variants cover a single constant delay,
multiple constant delays, a delay magnitude acting as the parameter, and a
WAMS-shaped stochastic delay.  The sweep advances y with explicit
integrators (LU solve per stage), optionally re-polished by the bordered
Newton corrector at fixed p, while watching for conjugate-pair folds and
real-axis crossings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.linalg import splu

from . import charfun, spectral
from .errors import (
    ConfigurationError,
    DefectiveEigenvalueError,
    NonConvergenceError,
    RangeError,
    ReinitializationError,
    SingularSystemError,
)

# below this model dimension the (2r+2)-sized continuation system is
# assembled and solved densely; sparse LU above
DENSE_ASSEMBLY_MAX_R = 200

REGIMES = ("single", "multi", "delay_param", "wams")
INTEGRATORS = ("euler", "heun", "rk4")
EVENT_KINDS = ("fold", "axis_crossing", "reinit", "corrector_fail")

# candidates within this overlap margin of the best are tie-broken on Re(s)
_OVERLAP_TIE = 0.02
_OVERLAP_MIN = 0.5


@dataclass(frozen=True)
class TrackState:
    """Real continuation vector (phi_r, phi_i, s_r, s_i) at one p."""

    p: float
    phi_r: np.ndarray
    phi_i: np.ndarray
    s_r: float
    s_i: float
    residual: float = math.nan

    @property
    def s(self):
        return complex(self.s_r, self.s_i)

    @property
    def phi(self):
        return self.phi_r + 1j * self.phi_i

    @property
    def r(self):
        return self.phi_r.size

    @classmethod
    def from_eigenpair(cls, p, s, phi, residual=math.nan):
        phi = np.asarray(phi, dtype=complex).ravel()
        return cls(
            p=float(p),
            phi_r=phi.real.copy(),
            phi_i=phi.imag.copy(),
            s_r=float(np.real(s)),
            s_i=float(np.imag(s)),
            residual=float(residual),
        )


@dataclass
class ContinuationSystem:
    """Assembled pair (M, h); M is dense or sparse depending on size."""

    M: object
    h: np.ndarray
    r: int


@dataclass
class TrackEvent:
    kind: str
    p: float
    s: complex
    index: int = -1  # sample index the event is attached to


@dataclass
class Trajectory:
    samples: list = field(default_factory=list)
    events: list = field(default_factory=list)
    settings: dict = field(default_factory=dict)
    truncated: bool = False

    @property
    def ps(self):
        return np.array([st.p for st in self.samples])

    @property
    def eigenvalues(self):
        return np.array([st.s for st in self.samples])


@dataclass
class TrackOptions:
    """Sweep controls.  ``regime`` selects the assembly variant; for
    ``delay_param`` also set ``delay_index``, for ``wams`` also ``wams``."""

    dp: float | None = None
    method: str = "euler"
    corrector_every: int = 10
    corrector_tol: float = 1e-10
    fold_eps: float = 1e-4
    regime: str = "multi"
    delay_index: int | None = None
    wams: charfun.WamsSpec | None = None
    p_fin: float | None = None
    reinit_on_fold: bool = False
    init_degree: int = 16
    init_count: int = 6
    norm_tol: float = 1e-8

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ConfigurationError(f"unknown regime {self.regime!r}")
        if self.method not in INTEGRATORS:
            raise ConfigurationError(f"unknown integrator {self.method!r}")
        if self.regime == "delay_param" and self.delay_index is None:
            raise ConfigurationError("delay_param regime needs delay_index")
        if self.regime == "wams" and self.wams is None:
            raise ConfigurationError("wams regime needs a WamsSpec")


def _exp_cs(s_r, s_i, t):
    a = math.exp(-s_r * t)
    return a * math.cos(s_i * t), a * math.sin(s_i * t)


def _materialize(model, derivatives, dense):
    """Matrices as either ndarray or csr, per the assembly backend."""
    mats = [model.E, model.A0, derivatives.dE, derivatives.dA0]
    mats += [A for _, A in model.delay_terms]
    mats += list(derivatives.dA_terms)
    if dense:
        mats = [m.toarray() for m in mats]
    n = 4
    mu = model.mu
    E, A0, dE, dA0 = mats[:n]
    return E, A0, dE, dA0, mats[n:n + mu], mats[n + mu:]


def _compose(X, Y, wR, wI, fr, fi, gR, gI, r, dense):
    """Stack the blocks [[M1, M2], [M3, 0]] and the right-hand side h.

    M1 = [[X, -Y], [Y, X]],  M2 = [[wR, -wI], [wI, wR]] (columns),
    M3 = [[fr, -fi], [fi, fr]] (rows),  h = (gR, gI, 0, 0).
    """
    h = np.concatenate([gR, gI, [0.0, 0.0]])
    if dense:
        M = np.zeros((2 * r + 2, 2 * r + 2))
        M[:r, :r] = X
        M[:r, r:2 * r] = -Y
        M[r:2 * r, :r] = Y
        M[r:2 * r, r:2 * r] = X
        M[:r, 2 * r] = wR
        M[:r, 2 * r + 1] = -wI
        M[r:2 * r, 2 * r] = wI
        M[r:2 * r, 2 * r + 1] = wR
        M[2 * r, :r] = fr
        M[2 * r, r:2 * r] = -fi
        M[2 * r + 1, :r] = fi
        M[2 * r + 1, r:2 * r] = fr
    else:
        M2 = np.vstack(
            [np.column_stack([wR, -wI]), np.column_stack([wI, wR])]
        )
        M1 = sparse.block_array([[X, -Y], [Y, X]])
        M3 = np.vstack(
            [np.concatenate([fr, -fi]), np.concatenate([fi, fr])]
        )
        M = sparse.block_array(
            [[M1, sparse.csr_array(M2)], [sparse.csr_array(M3), None]],
            format="csr",
        )
    return M, h


def _use_dense(model, dense):
    return model.r < DENSE_ASSEMBLY_MAX_R if dense is None else bool(dense)


def assemble_single(model, derivatives, state, dense=None):
    """Continuation system for exactly one constant delay."""
    if model.mu != 1:
        raise ConfigurationError(
            f"single-delay assembly needs mu=1, got mu={model.mu}"
        )
    return assemble_multi(model, derivatives, state, dense=dense,
                          _require_single=True)


def assemble_multi(model, derivatives, state, dense=None,
                   _require_single=False):
    """Continuation system for any number of constant delays.

    The delay sum enters through C = sum_j A_j hr_j, S = sum_j A_j hi_j
    (and their tau-weighted versions in the dsdp column), with
    hr_j + i hi_j the polar split of exp(-s tau_j)."""
    r = model.r
    dense_ = _use_dense(model, dense)
    E, A0, dE, dA0, As, dAs = _materialize(model, derivatives, dense_)
    s_r, s_i = state.s_r, state.s_i
    fr, fi = state.phi_r, state.phi_i

    X = s_r * E - A0
    Y = s_i * E
    wR = E @ fr
    wI = E @ fi
    hA = -s_r * dE + dA0
    hB = s_i * dE
    for (tau, _), A, dA in zip(model.delay_terms, As, dAs):
        hr, hi = _exp_cs(s_r, s_i, tau)
        X = X - hr * A
        Y = Y + hi * A
        Afr, Afi = A @ fr, A @ fi
        wR = wR + tau * (hr * Afr + hi * Afi)
        wI = wI + tau * (hr * Afi - hi * Afr)
        hA = hA + hr * dA
        hB = hB + hi * dA
    gR = hA @ fr + hB @ fi
    gI = -hB @ fr + hA @ fi
    M, h = _compose(X, Y, wR, wI, fr, fi, gR, gI, r, dense_)
    return ContinuationSystem(M=M, h=h, r=r)


def assemble_delay_param(model, derivatives, state, delay_index, dense=None):
    """Continuation system when p is the magnitude of delay ``delay_index``.

    The varying term A_l exp(-s p) stays separate from the constant-delay
    sum; its explicit p-derivative contributes the forcing -A_l exp(-s p) s
    while all delayed-matrix derivatives vanish by definition."""
    r = model.r
    if not 0 <= delay_index < model.mu:
        raise ConfigurationError(
            f"delay index {delay_index} out of range for mu={model.mu}"
        )
    dense_ = _use_dense(model, dense)
    E, A0, dE, dA0, As, dAs = _materialize(model, derivatives, dense_)
    s_r, s_i = state.s_r, state.s_i
    fr, fi = state.phi_r, state.phi_i
    p = state.p

    Al = As[delay_index]
    hrl, hil = _exp_cs(s_r, s_i, p)

    X = s_r * E - A0 - hrl * Al
    Y = s_i * E + hil * Al
    Alfr, Alfi = Al @ fr, Al @ fi
    wR = E @ fr + p * (hrl * Alfr + hil * Alfi)
    wI = E @ fi + p * (hrl * Alfi - hil * Alfr)
    for j, ((tau, _), A) in enumerate(zip(model.delay_terms, As)):
        if j == delay_index:
            continue
        hr, hi = _exp_cs(s_r, s_i, tau)
        X = X - hr * A
        Y = Y + hi * A
        Afr, Afi = A @ fr, A @ fi
        wR = wR + tau * (hr * Afr + hi * Afi)
        wI = wI + tau * (hr * Afi - hi * Afr)

    h1 = dA0 - s_r * dE - (s_r * hrl + s_i * hil) * Al
    h2 = s_i * dE + (s_i * hrl - s_r * hil) * Al
    gR = h1 @ fr + h2 @ fi
    gI = -h2 @ fr + h1 @ fi
    M, h = _compose(X, Y, wR, wI, fr, fi, gR, gI, r, dense_)
    return ContinuationSystem(M=M, h=h, r=r)


def assemble_wams(model, derivatives, state, wams, dense=None):
    """Continuation system for one WAMS-shaped stochastic delay.

    The delayed term is A1 scaled by the complex factor
    g = h_p(s) h_s(s) exp(-s tau0); its exact s-slope g' = g_s - tau0 g
    (g_s collecting the transfer-function derivatives) enters the dsdp
    column, and the explicit parameter forcing uses g dA1."""
    r = model.r
    if model.mu != 1:
        raise ConfigurationError(
            f"WAMS assembly needs exactly one delay term, got mu={model.mu}"
        )
    dense_ = _use_dense(model, dense)
    E, A0, dE, dA0, As, dAs = _materialize(model, derivatives, dense_)
    A1, dA1 = As[0], dAs[0]
    s_r, s_i = state.s_r, state.s_i
    fr, fi = state.phi_r, state.phi_i

    g, g_s = charfun.transfer_scalars(wams, state.s)
    X = s_r * E - A0 - g.real * A1
    Y = s_i * E - g.imag * A1

    cw = wams.tau0 * g - g_s  # W = E + cw * A1 = dP/ds
    Wr_fr, Wr_fi = E @ fr + cw.real * (A1 @ fr), E @ fi + cw.real * (A1 @ fi)
    Wi_fr, Wi_fi = cw.imag * (A1 @ fr), cw.imag * (A1 @ fi)
    wR = Wr_fr - Wi_fi
    wI = Wi_fr + Wr_fi

    GR = -s_r * dE + dA0 + g.real * dA1
    GI = -s_i * dE + g.imag * dA1
    gR = GR @ fr - GI @ fi
    gI = GI @ fr + GR @ fi
    M, h = _compose(X, Y, wR, wI, fr, fi, gR, gI, r, dense_)
    return ContinuationSystem(M=M, h=h, r=r)


def _solve_system(system):
    if sparse.issparse(system.M):
        try:
            dy = splu(system.M.tocsc()).solve(system.h)
        except RuntimeError as exc:
            raise SingularSystemError(
                f"continuation mass matrix is singular: {exc}"
            ) from exc
    else:
        try:
            dy = np.linalg.solve(system.M, system.h)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(
                "continuation mass matrix is singular"
            ) from exc
    if not np.all(np.isfinite(dy)):
        raise SingularSystemError("nonfinite continuation slope")
    return dy


def _state_vector(state):
    return np.concatenate(
        [state.phi_r, state.phi_i, [state.s_r, state.s_i]]
    )


def _vector_state(p, y, r, residual=math.nan):
    return TrackState(
        p=float(p),
        phi_r=y[:r].copy(),
        phi_i=y[r:2 * r].copy(),
        s_r=float(y[2 * r]),
        s_i=float(y[2 * r + 1]),
        residual=residual,
    )


def integrate_step(system, state, dp, method="euler", assemble=None):
    """Advance the continuation state by one step of size ``dp``.

    ``assemble`` maps an intermediate TrackState to a fresh
    ContinuationSystem and is required for the multi-stage methods.
    """
    r = system.r
    y = _state_vector(state)
    k1 = _solve_system(system)
    if method == "euler":
        y_new = y + dp * k1
    elif method in ("heun", "rk4"):
        if assemble is None:
            raise ConfigurationError(
                f"{method} needs an assembly callback for internal stages"
            )
        if method == "heun":
            k2 = _solve_system(
                assemble(_vector_state(state.p + dp, y + dp * k1, r))
            )
            y_new = y + (dp / 2.0) * (k1 + k2)
        else:
            half = state.p + dp / 2.0
            k2 = _solve_system(
                assemble(_vector_state(half, y + (dp / 2.0) * k1, r))
            )
            k3 = _solve_system(
                assemble(_vector_state(half, y + (dp / 2.0) * k2, r))
            )
            k4 = _solve_system(
                assemble(_vector_state(state.p + dp, y + dp * k3, r))
            )
            y_new = y + (dp / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    else:
        raise ConfigurationError(f"unknown integrator {method!r}")
    return _vector_state(state.p + dp, y_new, r, residual=state.residual)


def _assembler(options):
    regime = options.regime
    if regime == "single":
        return lambda m, d, st: assemble_single(m, d, st)
    if regime == "multi":
        return lambda m, d, st: assemble_multi(m, d, st)
    if regime == "delay_param":
        idx = options.delay_index
        return lambda m, d, st: assemble_delay_param(m, d, st, idx)
    return lambda m, d, st: assemble_wams(m, d, st, options.wams)


def detect_fold(window, fold_eps, model=None, wams=None):
    """Fold event for the most recent sample, or None.

    A conjugate pair collapsing onto the real axis shows up either as the
    tracked s_i crossing (or dropping below ``fold_eps``) after having been
    clearly away from the axis, or as a singular bordered Jacobian.  States
    that simply live near the axis trigger the Jacobian test only, so a
    plain real eigenvalue far from any coalescence partner never raises.
    """
    if len(window) < 2:
        return None
    prev, cur = window[-2], window[-1]
    came_from_above = abs(prev.s_i) >= fold_eps
    crossed = came_from_above and prev.s_i * cur.s_i < 0.0
    shrunk = came_from_above and abs(cur.s_i) < fold_eps
    if crossed or shrunk:
        return TrackEvent(kind="fold", p=cur.p, s=cur.s)
    if model is not None and abs(cur.s_i) < fold_eps:
        gap = spectral.bordered_smallest_singular_value(
            model, cur.s, cur.phi, wams=wams
        )
        if gap < 1e-10:
            return TrackEvent(kind="fold", p=cur.p, s=cur.s)
    return None


def reinitialize_at(family, p, prev_state, options):
    """Recompute the eigendecomposition at ``p`` and pick up the branch
    overlapping the previously tracked eigenvector.

    Candidates from the collocation pencil are Newton-refined; the one
    maximizing |phi_prev^H phi| (unit-normalized) wins, with ties broken
    toward larger Re(s).  Raises :class:`ReinitializationError` when no
    candidate reaches overlap 0.5.
    """
    model = family.evaluate(p)
    N = options.init_degree if model.mu else 0
    pencil = spectral.discretize(model, N)
    raw = spectral.solve_discretized(pencil, prev_state.s, options.init_count)
    prev_phi = prev_state.phi
    prev_phi = prev_phi / np.linalg.norm(prev_phi)

    candidates = []
    for pair in raw:
        phi0 = spectral.lift_eigenvector(pencil, pair.phi)
        if np.linalg.norm(phi0) == 0.0:
            continue
        try:
            ref = spectral.refine_newton(
                model, pair.s, phi0, tol=options.corrector_tol,
                wams=options.wams,
            )
        except (NonConvergenceError, DefectiveEigenvalueError):
            continue
        if any(abs(ref.s - c.s) < 1e-9 for c in candidates):
            continue
        candidates.append(ref)
    if not candidates:
        raise ReinitializationError(f"no refined eigenpair near p={p}")

    overlaps = [
        abs(np.vdot(prev_phi, c.phi / np.linalg.norm(c.phi)))
        for c in candidates
    ]
    best = max(overlaps)
    if best < _OVERLAP_MIN:
        raise ReinitializationError(
            f"best eigenvector overlap {best:.3f} below {_OVERLAP_MIN} "
            f"at p={p}"
        )
    near = [
        c for c, ov in zip(candidates, overlaps) if ov >= best - _OVERLAP_TIE
    ]
    chosen = max(near, key=lambda c: c.s.real)
    return TrackState.from_eigenpair(p, chosen.s, chosen.phi, chosen.residual)


def _refine_state(model, state, options):
    ref = spectral.refine_newton(
        model, state.s, state.phi, tol=options.corrector_tol,
        wams=options.wams,
    )
    return TrackState.from_eigenpair(state.p, ref.s, ref.phi, ref.residual)


def _with_residual(model, state, wams):
    res = spectral.eigenpair_residual(model, state.s, state.phi, wams=wams)
    return replace(state, residual=res)


def track_run(family, initial, options):
    """Sweep the continuation parameter and record the eigenpair path.

    Starts from ``initial`` (already refined at its p) and integrates to
    ``options.p_fin`` (default: the upper end of the family range) in steps
    of ``options.dp`` (default: 1/1000 of the span), applying the Newton
    corrector at fixed p every ``corrector_every`` steps and at the final
    point.  Fold, axis-crossing, reinitialization, and corrector-failure
    events are recorded; a fold truncates the run unless
    ``options.reinit_on_fold`` restarts it on the overlapping branch.
    """
    p_init = initial.p
    p_fin = options.p_fin if options.p_fin is not None else family.p_range[1]
    if p_fin == p_init:
        raise ConfigurationError("p_fin equals the initial parameter")
    span = p_fin - p_init
    dp = abs(options.dp) if options.dp else abs(span) / 1000.0
    dp = math.copysign(dp, span)
    build = _assembler(options)

    def assemble_at(st):
        m = family.evaluate(st.p)
        d = family.derivative(st.p)
        return build(m, d, st)

    traj = Trajectory(
        settings={
            "regime": options.regime,
            "method": options.method,
            "dp": dp,
            "p_init": p_init,
            "p_fin": p_fin,
            "corrector_every": options.corrector_every,
            "corrector_tol": options.corrector_tol,
            "fold_eps": options.fold_eps,
        }
    )
    model = family.evaluate(p_init)
    state = _with_residual(model, initial, options.wams)
    traj.samples.append(state)

    step = 0
    while (p_fin - state.p) * math.copysign(1.0, dp) > 1e-14 * max(
        1.0, abs(p_fin)
    ):
        step += 1
        remaining = p_fin - state.p
        last = abs(remaining) <= abs(dp) * (1.0 + 1e-9)
        dp_k = remaining if last else dp  # land exactly on p_fin

        try:
            model = family.evaluate(state.p)
            derivs = family.derivative(state.p)
            system = build(model, derivs, state)
            new_state = integrate_step(
                system, state, dp_k, options.method, assemble=assemble_at
            )
            if last:
                new_state = replace(new_state, p=p_fin)
            model_new = family.evaluate(new_state.p)
        except RangeError:
            traj.truncated = True
            break
        except SingularSystemError:
            ev = TrackEvent(
                kind="fold", p=state.p, s=state.s,
                index=len(traj.samples) - 1,
            )
            traj.events.append(ev)
            if not _handle_fold(family, traj, options):
                break
            state = traj.samples[-1]
            continue

        correct = options.corrector_every > 0 and (
            step % options.corrector_every == 0 or last
        )
        if correct:
            try:
                new_state = _refine_state(model_new, new_state, options)
            except DefectiveEigenvalueError:
                traj.samples.append(
                    _with_residual(model_new, new_state, options.wams)
                )
                traj.events.append(
                    TrackEvent(
                        kind="fold", p=new_state.p, s=new_state.s,
                        index=len(traj.samples) - 1,
                    )
                )
                if not _handle_fold(family, traj, options):
                    break
                state = traj.samples[-1]
                continue
            except NonConvergenceError:
                traj.events.append(
                    TrackEvent(
                        kind="corrector_fail", p=new_state.p, s=new_state.s,
                        index=len(traj.samples),
                    )
                )
                new_state = _with_residual(model_new, new_state, options.wams)
        else:
            new_state = _with_residual(model_new, new_state, options.wams)

        prev_state = state
        state = new_state
        traj.samples.append(state)
        idx = len(traj.samples) - 1

        if prev_state.s_r * state.s_r < 0.0:
            traj.events.append(
                TrackEvent(
                    kind="axis_crossing", p=state.p, s=state.s, index=idx
                )
            )

        fold = detect_fold(
            traj.samples[-3:], options.fold_eps, model=model_new,
            wams=options.wams,
        )
        if fold is not None:
            fold.index = idx
            traj.events.append(fold)
            if not _handle_fold(family, traj, options):
                break
            state = traj.samples[-1]
    return traj


def _handle_fold(family, traj, options):
    """Reinitialize past a fold when enabled; otherwise truncate the run.

    Resumes one step beyond the fold sample: at the fold itself the
    eigenvalue is defective and the mass matrix singular, so stepping from
    it is hopeless.  Returns True when tracking may continue."""
    if not options.reinit_on_fold:
        traj.truncated = True
        return False
    at = traj.samples[-1]
    dp = traj.settings["dp"]
    p_fin = traj.settings["p_fin"]
    p_resume = at.p + dp
    if (p_fin - p_resume) * math.copysign(1.0, dp) < 0.0:
        p_resume = p_fin
    if p_resume == at.p:
        traj.truncated = True
        return False
    try:
        fresh = reinitialize_at(family, p_resume, at, options)
    except (ReinitializationError, NonConvergenceError):
        traj.truncated = True
        return False
    traj.samples.append(fresh)
    traj.events.append(
        TrackEvent(
            kind="reinit", p=fresh.p, s=fresh.s, index=len(traj.samples) - 1
        )
    )
    return True


def find_crossing(family, trajectory, options):
    """Refine every real-axis crossing of the tracked eigenvalue.

    Each sign change of s_r between consecutive samples is bisected in p;
    the eigenpair is re-solved by warm-started Newton at every midpoint
    until |Re s| < 1e-9 or the bracket narrows below 1e-9.  Returns a list
    of (p_star, s_star), empty when the trajectory never crosses.
    """
    crossings = []
    samples = trajectory.samples
    for a, b in zip(samples[:-1], samples[1:]):
        if not (np.isfinite(a.s_r) and np.isfinite(b.s_r)):
            continue
        if a.s_r == 0.0 or a.s_r * b.s_r >= 0.0:
            continue
        lo, hi = a, b
        pm, sm = lo.p, lo.s
        for _ in range(200):
            if abs(hi.p - lo.p) < 1e-9:
                break
            pm = 0.5 * (lo.p + hi.p)
            warm = lo if abs(pm - lo.p) <= abs(pm - hi.p) else hi
            model = family.evaluate(pm)
            ref = spectral.refine_newton(
                model, warm.s, warm.phi, tol=options.corrector_tol,
                wams=options.wams,
            )
            sm = ref.s
            mid = TrackState.from_eigenpair(pm, ref.s, ref.phi, ref.residual)
            if abs(sm.real) < 1e-9:
                break
            if (sm.real > 0.0) == (lo.s_r > 0.0):
                lo = mid
            else:
                hi = mid
        crossings.append((pm, sm))
    return crossings
