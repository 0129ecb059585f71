"""Operator-inequality certificates for quantum Markov stability.

Checks the Lyapunov conditions G(V) <= 0 and G(V) <= -cV + dI, coercivity
of the spectrum, the tail projection bound implied by a mean bound on a
coercive observable, the invariance-principle hypothesis pairs (tags t5-t7
plus the relaxed form with a companion operator), the ground-set convergence
conditions (tag t8 on the CLI), and a best-effort feasibility search for
weak Lyapunov certificates over an operator basis.

All inequalities are certified through `psd_check` at a single relative
tolerance (default 1e-9), overridable per call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .generator import ModelSpec, dissipation_functional, generator_heisenberg
from .operators import (
    DEGENERACY_TOL,
    PSD_TOL,
    EigWitness,
    OperatorError,
    PsdReport,
    SpectralDecomposition,
    Verdict,
    _frozen,
    dag,
    hermitian_part,
    max_abs,
    op_norm,
    psd_check,
    require_hermitian,
    spectral_decompose,
)

MODE_STRICT = "strict"
MODE_WEAK = "weak"
MODE_LASALLE = "lasalle"
MODE_RELAXED = "relaxed"
MODE_EQUALITY = "equality"

THEOREM_5 = "t5"
THEOREM_6 = "t6"
THEOREM_7 = "t7"
COROLLARY_1 = "corollary1"


@dataclass(frozen=True)
class LyapunovCertificate:
    """Verdict for one operator inequality, with enough data to re-verify.

    `shift` records the multiple of the identity added to V before
    checking positivity; the generator is unchanged by the shift, so the
    inequality itself is unaffected.
    """

    mode: str
    verdict: Verdict
    v: np.ndarray
    c: float | None = None
    d: float | None = None
    w: np.ndarray | None = None
    u: np.ndarray | None = None
    theorem: str | None = None
    tolerance: float = PSD_TOL
    shift: float = 0.0
    witness: EigWitness | None = None
    metrics: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()


def _require_psd_input(name: str, a: np.ndarray, tol: float) -> None:
    report = psd_check(a, tol)
    if not report.holds:
        raise OperatorError(
            f"{name} must be positive semidefinite "
            f"(min eigenvalue {report.min_eigenvalue:.3e})"
        )


def check_lyapunov(model: ModelSpec, v, tol: float = PSD_TOL) -> LyapunovCertificate:
    """Strict Lyapunov condition: V >= 0 and G(V) <= 0.

    On failure the witness is the eigenvector with <G(V)> > 0, i.e. a pure
    state along which the expectation of V initially increases.
    """
    varr = require_hermitian(v)
    _require_psd_input("V", varr, tol)
    gv = hermitian_part(generator_heisenberg(model, varr))
    report = psd_check(-gv, tol)
    witness = None
    if not report.holds:
        witness = EigWitness(-report.min_eigenvalue, report.witness.vector)
    return LyapunovCertificate(
        mode=MODE_STRICT,
        verdict=report.verdict,
        v=_frozen(varr),
        tolerance=tol,
        witness=witness,
        metrics={"generator_max_eigenvalue": -report.min_eigenvalue},
    )


def check_weak_lyapunov(
    model: ModelSpec, v, c: float, d: float, tol: float = PSD_TOL
) -> LyapunovCertificate:
    """Weak (exponential) Lyapunov condition G(V) <= -cV + dI, c > 0, d >= 0."""
    if c <= 0 or d < 0:
        raise OperatorError(f"weak Lyapunov condition needs c > 0 and d >= 0, got c={c}, d={d}")
    varr = require_hermitian(v)
    _require_psd_input("V", varr, tol)
    gv = hermitian_part(generator_heisenberg(model, varr))
    slack = -gv - c * varr + d * np.eye(model.dim)
    report = psd_check(slack, tol)
    witness = report.witness
    return LyapunovCertificate(
        mode=MODE_WEAK,
        verdict=report.verdict,
        v=_frozen(varr),
        c=float(c),
        d=float(d),
        tolerance=tol,
        witness=witness,
        metrics={"slack_min_eigenvalue": report.min_eigenvalue},
    )


# ---------------------------------------------------------------------------
# Coercivity and tightness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthEnvelope:
    """Affine lower envelope k(i) = slope*i + intercept, slope > 0."""

    slope: float
    intercept: float

    def __call__(self, i) -> np.ndarray:
        return self.slope * np.asarray(i, dtype=float) + self.intercept


@dataclass(frozen=True)
class CoercivityReport:
    """Monotone-growth pattern of a finite spectrum.

    Coercivity proper is an infinite-spectrum notion; a finite matrix can
    only exhibit the pattern, so `truncated` is always True and the report
    is the finite shadow of the hypothesis, not a proof of it.
    """

    spectral: SpectralDecomposition
    monotone_from: int | None
    growth_witness: GrowthEnvelope | None
    truncated: bool = True

    @property
    def coercive_pattern(self) -> bool:
        return self.growth_witness is not None


def coercivity_assess(v, degeneracy_tol: float = DEGENERACY_TOL) -> CoercivityReport:
    """Report the largest strictly-increasing tail of the sorted spectrum.

    `monotone_from` is the first index i0 (into the multiplicity-expanded
    ascending spectrum) past which consecutive eigenvalues strictly
    increase; the fitted envelope satisfies v_i >= k(i) for all i >= i0.
    A constant tail (e.g. V = I) has no growth pattern.
    """
    varr = require_hermitian(v)
    _require_psd_input("V", varr, PSD_TOL)
    sd = spectral_decompose(varr, degeneracy_tol)
    w = sd.expanded_eigenvalues()
    n = len(w)
    gaps = np.diff(w)
    i0 = n - 1
    while i0 > 0 and gaps[i0 - 1] > degeneracy_tol:
        i0 -= 1
    if i0 > n - 2:
        return CoercivityReport(spectral=sd, monotone_from=None, growth_witness=None)
    tail = np.arange(i0, n)
    slope = float(gaps[i0:].min())
    intercept = float((w[tail] - slope * tail).min())
    return CoercivityReport(
        spectral=sd,
        monotone_from=int(i0),
        growth_witness=GrowthEnvelope(slope=slope, intercept=intercept),
    )


@dataclass(frozen=True)
class TailBound:
    """Finite-rank projection capturing all but eps of the probability mass.

    Contract: any state with tr(rho V) <= c satisfies tr(rho P) > 1 - eps,
    where P sums the spectral projections below index m.
    """

    verdict: Verdict
    m: int | None
    projection: np.ndarray | None
    threshold: float
    note: str = ""


def tightness_tail_bound(spectral: SpectralDecomposition, c: float, eps: float) -> TailBound:
    """Smallest admissible cut m with v_m >= c/eps, and P = sum_{i<m} P_i.

    The mean bound tr(rho V) <= c is the caller's hypothesis (e.g. from a
    certified weak Lyapunov condition plus the initial mean).
    """
    if eps <= 0:
        raise OperatorError("eps must be positive")
    if c < 0:
        raise OperatorError("mean bound c must be nonnegative")
    w = spectral.eigenvalues
    if float(w[0]) < -PSD_TOL * max(1.0, float(np.abs(w).max())):
        raise OperatorError("tail bound requires a positive semidefinite operator")
    if eps >= 1.0:
        return TailBound(
            verdict=Verdict.HOLDS,
            m=0,
            projection=_frozen(np.zeros((spectral.dim, spectral.dim))),
            threshold=c / eps,
            note="eps >= 1 makes the bound vacuous; minimal projection returned",
        )
    threshold = c / eps
    candidates = np.nonzero((w >= threshold) & (w > 0))[0]
    if candidates.size == 0:
        return TailBound(
            verdict=Verdict.INCONCLUSIVE,
            m=None,
            projection=None,
            threshold=threshold,
            note=(
                f"available spectrum tops out at {w[-1]:.6g} < c/eps = {threshold:.6g}; "
                "enlarge the truncation to certify the tail"
            ),
        )
    m = int(candidates[0])
    p = np.zeros((spectral.dim, spectral.dim), dtype=complex)
    for i in range(m):
        p += spectral.projections[i]
    return TailBound(verdict=Verdict.HOLDS, m=m, projection=_frozen(p), threshold=threshold)


# ---------------------------------------------------------------------------
# LaSalle hypothesis pairs
# ---------------------------------------------------------------------------

def _shifted_psd(name: str, a: np.ndarray, tol: float, auto_shift: bool) -> tuple[np.ndarray, float]:
    """Return a PSD version of `a`, shifting by a multiple of I if allowed.

    Shifting V leaves G(V) unchanged, so inequalities on the generator are
    insensitive to it; the shift is recorded on the certificate.
    """
    report = psd_check(a, tol)
    if report.holds:
        return a, 0.0
    if not auto_shift:
        raise OperatorError(
            f"{name} must be positive semidefinite "
            f"(min eigenvalue {report.min_eigenvalue:.3e}); pass auto_shift=True "
            "to add a compensating multiple of the identity"
        )
    shift = -report.min_eigenvalue
    return a + shift * np.eye(a.shape[0]), shift


def check_lasalle_pair(
    model: ModelSpec,
    v,
    w,
    theorem: str = THEOREM_5,
    u=None,
    tol: float = PSD_TOL,
    auto_shift: bool = True,
) -> LyapunovCertificate:
    """Check one LaSalle hypothesis pair (V, W).

    t5: G(V) <= -W with W >= 0; ||G(W)|| is recorded (always finite here).
    t6: additionally G(W) <= 0.
    t7: G(V) = W for Hermitian W, with G(W) <= 0.
    corollary1: G(V) <= U - W; the integrability of <U(t)> must be
    confirmed by simulation and is flagged as such.
    """
    varr = require_hermitian(v)
    warr = require_hermitian(w)
    notes: list[str] = []
    varr, shift = _shifted_psd("V", varr, tol, auto_shift)
    if shift > 0:
        notes.append(f"V shifted by {shift:.6g} * I to reach positivity; G(V) is unaffected")
    gv = hermitian_part(generator_heisenberg(model, varr))
    gw = hermitian_part(generator_heisenberg(model, warr))
    metrics: dict = {"generator_w_norm": op_norm(gw)}

    if theorem in (THEOREM_5, THEOREM_6):
        _require_psd_input("W", warr, tol)
        main = psd_check(-gv - warr, tol)
        verdict = main.verdict
        witness = main.witness
        metrics["slack_min_eigenvalue"] = main.min_eigenvalue
        if theorem == THEOREM_6:
            decay = psd_check(-gw, tol)
            metrics["generator_w_max_eigenvalue"] = -decay.min_eigenvalue
            if not decay.holds:
                verdict = Verdict.FAILS
                witness = witness or decay.witness
                notes.append("G(W) <= 0 fails")
        mode = MODE_LASALLE
    elif theorem == THEOREM_7:
        residual = max_abs(gv - warr)
        scale = max(1.0, max_abs(warr))
        metrics["equality_residual"] = residual
        decay = psd_check(-gw, tol)
        metrics["generator_w_max_eigenvalue"] = -decay.min_eigenvalue
        ok = residual <= tol * scale and decay.holds
        verdict = Verdict.HOLDS if ok else Verdict.FAILS
        witness = None if ok else decay.witness
        if residual > tol * scale:
            notes.append(f"G(V) = W residual {residual:.3e} exceeds {tol * scale:.3e}")
        mode = MODE_EQUALITY
    elif theorem == COROLLARY_1:
        if u is None:
            raise OperatorError("corollary1 mode needs the companion operator U")
        uarr = require_hermitian(u)
        _require_psd_input("W", warr, tol)
        _require_psd_input("U", uarr, tol)
        main = psd_check(uarr - warr - gv, tol)
        verdict = main.verdict
        witness = main.witness
        metrics["slack_min_eigenvalue"] = main.min_eigenvalue
        notes.append(
            "finite integral of <U(t)> is a hypothesis this check cannot certify; "
            "confirm it by simulation (lasalle_diagnostics)"
        )
        mode = MODE_RELAXED
        return LyapunovCertificate(
            mode=mode,
            verdict=verdict,
            v=_frozen(varr),
            w=_frozen(warr),
            u=_frozen(uarr),
            theorem=theorem,
            tolerance=tol,
            shift=shift,
            witness=witness,
            metrics=metrics,
            notes=tuple(notes),
        )
    else:
        raise OperatorError(f"unknown LaSalle mode {theorem!r}")

    return LyapunovCertificate(
        mode=mode,
        verdict=verdict,
        v=_frozen(varr),
        w=_frozen(warr),
        theorem=theorem,
        tolerance=tol,
        shift=shift,
        witness=witness,
        metrics=metrics,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# Ground-set convergence conditions (theorem 8)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroundConvergenceReport:
    """Checkable conditions for convergence onto the ground space of V.

    Certifies (a) G(V) <= 0, (b) [G(V), V] = 0, and (c) the spectral
    sufficient condition for the state-quantified positivity of D(V):
    D(V) >= 0 with every null vector of D(V) inside ker V (equivalently,
    D(V) positive definite off ker V). When (c) fails but D(V) >= 0 the
    verdict is inconclusive, since only a sufficient test is available.
    """

    verdict: Verdict
    lyapunov: PsdReport
    commutator_norm: float
    dissipation_psd: PsdReport
    restricted_min_eigenvalue: float | None
    kernel_dim: int
    notes: tuple[str, ...] = ()


def check_theorem8(model: ModelSpec, v, tol: float = PSD_TOL) -> GroundConvergenceReport:
    varr = require_hermitian(v)
    _require_psd_input("V", varr, tol)
    n = model.dim
    notes: list[str] = []

    gv = hermitian_part(generator_heisenberg(model, varr))
    lyap = psd_check(-gv, tol)

    comm = gv @ varr - varr @ gv
    comm_scale = max(1.0, op_norm(gv) * op_norm(varr))
    comm_norm = op_norm(comm)
    comm_ok = comm_norm <= tol * comm_scale

    dv = hermitian_part(dissipation_functional(model, varr))
    dv_psd = psd_check(dv, tol)

    w, vecs = np.linalg.eigh(varr)
    vscale = max(1.0, float(np.abs(w).max()))
    kernel_mask = w <= tol * vscale
    kernel_dim = int(kernel_mask.sum())
    q = vecs[:, ~kernel_mask]

    restricted_min = None
    positivity_ok = False
    if q.shape[1] == 0:
        notes.append("V has no positive part; its ground space is everything")
        positivity_ok = True
    else:
        restricted = dag(q) @ dv @ q
        restricted_min = float(np.linalg.eigvalsh(hermitian_part(restricted))[0])
        dscale = max(1.0, op_norm(dv))
        pd_off_kernel = restricted_min > tol * dscale
        # Null vectors of D(V) must lie inside ker V; restriction-PD alone
        # can miss mixed-direction null vectors.
        dw, dvecs = np.linalg.eigh(dv)
        null_vecs = dvecs[:, dw <= tol * dscale]
        leak = max_abs(varr @ null_vecs) if null_vecs.size else 0.0
        kernel_ok = leak <= tol * vscale
        positivity_ok = pd_off_kernel and kernel_ok
        if pd_off_kernel and not kernel_ok:
            notes.append(
                "D(V) has null directions leaking outside ker V; "
                "state-quantified positivity cannot be certified"
            )

    if not lyap.holds:
        verdict = Verdict.FAILS
        notes.append("G(V) <= 0 fails")
    elif not comm_ok:
        verdict = Verdict.FAILS
        notes.append(f"[G(V), V] norm {comm_norm:.3e} exceeds {tol * comm_scale:.3e}")
    elif positivity_ok:
        verdict = Verdict.HOLDS
    elif dv_psd.holds:
        verdict = Verdict.INCONCLUSIVE
        notes.append(
            "D(V) is PSD but not positive definite off ker V; the sufficient "
            "spectral test cannot decide the state-quantified condition"
        )
    else:
        verdict = Verdict.FAILS
        notes.append("D(V) fails positive semidefiniteness (numerical)")

    return GroundConvergenceReport(
        verdict=verdict,
        lyapunov=lyap,
        commutator_norm=comm_norm,
        dissipation_psd=dv_psd,
        restricted_min_eigenvalue=restricted_min,
        kernel_dim=kernel_dim,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# Certificate search
# ---------------------------------------------------------------------------

def lyapunov_search(
    model: ModelSpec,
    basis,
    c: float,
    d: float,
    max_iter: int = 2000,
    tol: float = PSD_TOL,
    seed: int = 0,
) -> np.ndarray | None:
    """Search for V = sum_j x_j B_j with V >= 0 and G(V) <= -cV + dI.

    Subgradient ascent on the smaller of the two constraint margins
    (eigenvalue-penalty descent), with the trace normalized to the
    dimension to exclude the trivial V = 0. Best effort: a None return
    means "not found", never "infeasible". Deterministic for a fixed seed.
    """
    mats = [require_hermitian(b) for b in basis]
    if not mats:
        raise OperatorError("search basis must be nonempty")
    n = model.dim
    stacked = np.stack([m.ravel() for m in mats])
    if np.linalg.matrix_rank(stacked) < len(mats):
        raise OperatorError("search basis is linearly dependent")

    eye = np.eye(n)
    gb = [hermitian_part(generator_heisenberg(model, b)) for b in mats]
    traces = np.array([np.trace(b).real for b in mats])

    def assemble(x):
        v = np.zeros((n, n), dtype=complex)
        for xi, b in zip(x, mats):
            v += xi * b
        return v

    def normalize(x):
        tr = float(traces @ x)
        if abs(tr) > 1e-9:
            return x * (n / tr)
        nrm = np.linalg.norm(x)
        return x / nrm if nrm > 0 else x

    def margins(x):
        v = assemble(x)
        s = -sum(xi * g for xi, g in zip(x, gb)) - c * v + d * eye
        wv, pv = np.linalg.eigh(v)
        ws, ps = np.linalg.eigh(hermitian_part(s))
        return (float(wv[0]), pv[:, 0]), (float(ws[0]), ps[:, 0])

    rng = np.random.default_rng(seed)
    # Start from the identity direction when it is in the span, else random.
    x0, *_ = np.linalg.lstsq(stacked.T, eye.astype(complex).ravel(), rcond=None)
    x = np.real(x0)
    if max_abs(assemble(x) - eye) > 1e-8:
        x = rng.standard_normal(len(mats))
    x = normalize(x)

    margin_goal = 0.0
    for it in range(max_iter):
        (mv, vecv), (ms, vecs_) = margins(x)
        if min(mv, ms) >= margin_goal:
            break
        if mv <= ms:
            grad = np.array([np.real(vecv.conj() @ b @ vecv) for b in mats])
        else:
            grad = np.array(
                [np.real(vecs_.conj() @ (-g - c * b) @ vecs_) for b, g in zip(mats, gb)]
            )
        gn = np.linalg.norm(grad)
        if gn < 1e-14:
            break
        step = 0.5 / (1 + it / 50)
        x = normalize(x + step * grad / gn)
    else:
        return None

    v = hermitian_part(assemble(x))
    # No unverified solution escapes: certify through the standard checker.
    try:
        cert = check_weak_lyapunov(model, v, c, d, tol)
    except OperatorError:
        return None
    if cert.verdict is not Verdict.HOLDS:
        return None
    return _frozen(v)
