"""Regime classification of Theta_rho(t) along a parameter sweep.

Classification is spectral: reality and sign of the eigenvalues of the metric
decide the kind, with precedence Singular, ComplexSpectrum, Unitary/Krein.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from itertools import groupby

import numpy as np
import scipy.linalg
from scipy.optimize import bisect, minimize_scalar

from app.dense_linalg import DEFAULT_CLASSIFY_TOL, classify_spectrum, eig_general, eig_hermitian, numeric_rank
from app.errors import DegenerateSpectrum
from app.metric_engine import MetricFamily
from app.models import Boundary, EpReport, RegimeClassification, RegimeKind, ScanReport, SpectrumKind
from app.toy_models import get_model, model_id
from app.utils.numeric import as_matrix, check_tol, min_gap, relative_asymmetry

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 400
DEFAULT_EP_EXCLUSION = 1e-4
DEFAULT_TOL_T = 1e-10
DEFAULT_EP_TOL = 1e-2
EP_METRIC_TOL = 1e-10


def _metric_spectrum(theta, tol):
    hermitian = relative_asymmetry(theta) <= tol
    kernel = eig_hermitian if hermitian else eig_general
    return kernel(theta, tol).eigenvalues, hermitian


def classify_metric(theta, tol=DEFAULT_CLASSIFY_TOL):
    theta = as_matrix(theta, 'theta')
    tol = check_tol(tol)
    eigs, hermitian = _metric_spectrum(theta, tol)
    return _classify_eigs(eigs, hermitian, tol)


def _classify_eigs(eigs, hermitian, tol):
    scale = float(np.max(np.abs(eigs)))
    smallest = eigs[int(np.argmin(np.abs(eigs)))]
    if scale == 0.0 or abs(smallest) <= tol * scale:
        return RegimeClassification(RegimeKind.SINGULAR_METRIC, (complex(smallest),), hermitian)

    spectrum = classify_spectrum(eigs, tol)
    if spectrum.kind is SpectrumKind.SOME_COMPLEX:
        witness = tuple(complex(z) for z in eigs if abs(z.imag) > tol * scale)
        return RegimeClassification(RegimeKind.COMPLEX_SPECTRUM, witness, hermitian)
    if spectrum.kind is SpectrumKind.ALL_REAL_POSITIVE:
        return RegimeClassification(RegimeKind.UNITARY_METRIC, (), hermitian)
    witness = tuple(complex(z) for z in eigs if z.real <= tol * scale)
    return RegimeClassification(RegimeKind.KREIN_PSEUDO_METRIC, witness, hermitian)


def evaluate_point(family, dim, rho, t, tol):
    """Sorted metric eigenvalues and classification at one grid point."""
    try:
        theta = family.theta(t, rho)
    except DegenerateSpectrum as e:
        classification = RegimeClassification(RegimeKind.SINGULAR_METRIC, e.witness, False)
        return np.full(dim, np.nan, dtype=np.complex128), classification
    eigs, hermitian = _metric_spectrum(theta, tol)
    return eigs, _classify_eigs(eigs, hermitian, tol)


def classify_point(model, rho, t, tol=DEFAULT_CLASSIFY_TOL, kappa=None):
    model = get_model(model)
    family = MetricFamily.for_model(model, kappa=kappa)
    return evaluate_point(family, model.dim, rho, float(t), check_tol(tol))[1]


def _determinant_indicator(family, rho):
    # det Theta_rho = det Theta_0 * (det H)^rho; the factored form keeps high-order zeros sharp.
    def indicator(t):
        det0 = np.real(np.linalg.det(family.theta0(t)))
        det_h = np.real(np.linalg.det(family.hamiltonian(t)))
        return float(np.sign(det0) * np.sign(det_h) ** rho)
    return indicator


def _refine(family, dim, rho, left, right, t_a, t_b, tol, tol_t):
    if {left, right} == {RegimeKind.UNITARY_METRIC, RegimeKind.KREIN_PSEUDO_METRIC}:
        indicator = _determinant_indicator(family, rho)
        if indicator(t_a) * indicator(t_b) < 0:
            return bisect(indicator, t_a, t_b, xtol=tol_t)

    def predicate(t):
        return 1.0 if evaluate_point(family, dim, rho, t, tol)[1].kind is left else -1.0

    return bisect(predicate, t_a, t_b, xtol=tol_t)


def _runs(kinds):
    """Collapse per-point kinds into (kind, first index, last index) runs."""
    runs = []
    index = 0
    for kind, group in groupby(kinds):
        length = len(list(group))
        runs.append((kind, index, index + length - 1))
        index += length
    return runs


def scan(model, rho, t_lo, t_hi, tol_t=DEFAULT_TOL_T, tol=DEFAULT_CLASSIFY_TOL,
         grid_points=DEFAULT_GRID_POINTS, ep_exclusion=DEFAULT_EP_EXCLUSION, threads=1, kappa=None):
    """Coarse grid classification followed by bisection of every regime change."""
    if not t_lo < t_hi:
        raise ValueError(f"t_lo must be below t_hi, got [{t_lo}, {t_hi}]")
    tol_t = check_tol(tol_t, 'tol_t')
    tol = check_tol(tol)
    resolved = get_model(model)
    family = MetricFamily.for_model(resolved, kappa=kappa)

    grid = np.linspace(t_lo, t_hi, int(grid_points))
    grid = grid[np.abs(grid) >= ep_exclusion]

    def evaluate(t):
        return evaluate_point(family, resolved.dim, rho, float(t), tol)

    # map() yields in submission order, so the trace stays ascending in t.
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(evaluate, grid))
    else:
        points = [evaluate(t) for t in grid]

    classifications = [c for _, c in points]
    runs = _runs([c.kind for c in classifications])
    boundaries, touches = [], []
    for i, (kind, first, last) in enumerate(runs):
        if i + 1 >= len(runs):
            break
        next_kind, next_first, _ = runs[i + 1]
        if kind is RegimeKind.SINGULAR_METRIC and i > 0:
            # handled together with the preceding run
            continue
        if next_kind is RegimeKind.SINGULAR_METRIC and i + 2 < len(runs) and kind is not RegimeKind.SINGULAR_METRIC:
            after_kind, after_first, _ = runs[i + 2]
            if after_kind is kind:
                singular = points[next_first:runs[i + 1][2] + 1]
                centre = next_first + int(np.argmin([np.nanmin(np.abs(e)) for e, _ in singular]))
                touches.append(float(grid[centre]))
                logger.debug(f"singular touch point near t={grid[centre]:.6f} for rho={rho}")
                continue
            t_b, right = grid[after_first], after_kind
        else:
            t_b, right = grid[next_first], next_kind
        t = _refine(family, resolved.dim, rho, kind, right, float(grid[last]), float(t_b), tol, tol_t)
        boundaries.append(Boundary(t=float(t), left=kind, right=right))

    logger.info(f"scan of {model_id(model)} rho={rho} on [{t_lo}, {t_hi}]: "
                f"{len(boundaries)} boundaries, {len(touches)} touch points")
    return ScanReport(
        model=model_id(model),
        rho=int(rho),
        t_grid=[float(t) for t in grid],
        eigen_traces=[[complex(z) for z in e] for e, _ in points],
        classifications=classifications,
        boundaries=boundaries,
        touches=touches,
    )


def boundary_scan(model, rho, t_lo, t_hi, tol_t=DEFAULT_TOL_T, **kwargs):
    """Ascending regime boundaries; an empty list means the classification never changes."""
    return scan(model, rho, t_lo, t_hi, tol_t=tol_t, **kwargs).boundaries


def _coalescence(eigs):
    """Spread of the eigenvalue cluster around the closest pair; equals the gap for a pair."""
    gap = min_gap(eigs)
    if not np.isfinite(gap):
        return 0.0
    distance = np.abs(eigs[:, None] - eigs[None, :])
    i, j = np.unravel_index(np.argmin(distance + np.diag(np.full(len(eigs), np.inf))), distance.shape)
    cluster = {int(i), int(j)}
    linked = distance <= 4.0 * gap
    grew = True
    while grew:
        members = {int(k) for k in np.nonzero(linked[sorted(cluster)].any(axis=0))[0]}
        grew = not members <= cluster
        cluster |= members
    values = eigs[sorted(cluster)]
    spread = np.sum((values - values.mean()) ** 2)
    return float(np.sqrt(2.0 * abs(spread) / (len(values) - 1)))


def ep_probe(model, t_center, radius, tol=DEFAULT_EP_TOL):
    """Locate the closest approach of the energies of H on [t_center - radius, t_center + radius]."""
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    resolved = get_model(model)

    def objective(t):
        return _coalescence(scipy.linalg.eigvals(resolved.hamiltonian(t)))

    result = minimize_scalar(
        objective,
        bounds=(t_center - radius, t_center + radius),
        method='bounded',
        options={'xatol': 1e-9 * radius},
    )
    t_ep = float(result.x)
    h = resolved.hamiltonian(t_ep)
    gap = min_gap(scipy.linalg.eigvals(h))
    condition = eig_general(h).condition

    if resolved.metric0 is not None:
        metric_rank = numeric_rank(resolved.metric0(t_ep), EP_METRIC_TOL)
    else:
        vectors = eig_general(as_matrix(h).conj().T).right_vectors
        metric_rank = numeric_rank(vectors @ vectors.conj().T, EP_METRIC_TOL)

    is_ep = gap <= tol and condition >= 1.0 / tol
    logger.info(f"ep_probe {model_id(model)}: t={t_ep:.3e} gap={gap:.3e} cond={condition:.3e} rank={metric_rank}")
    return EpReport(t_ep=t_ep, eigvec_condition=condition, min_gap=gap, metric_rank=metric_rank, is_ep=is_ep)
