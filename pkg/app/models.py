from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
import numpy.typing as npt

# Dense N x N complex matrix carrying H, Theta and Omega.
ComplexMatrix = npt.NDArray[np.complex128]
# Matrix-valued function of the real model parameter t.
ParamOperator = Callable[[float], ComplexMatrix]


def _encode_complex(z):
    z = complex(z)
    return [z.real, z.imag]


def _decode_complex(pair):
    # JSON carries undefined parts (NaN) as null
    re, im = (np.nan if part is None else part for part in pair)
    return complex(re, im)


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues sorted by (real, imag) with unit-norm, phase-fixed columns."""
    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    condition: float
    tol: float

    @property
    def defective(self):
        return self.condition >= 1.0 / self.tol

    @property
    def dim(self):
        return len(self.eigenvalues)


class SpectrumKind(str, Enum):
    ALL_REAL_POSITIVE = 'all_real_positive'
    ALL_REAL_MIXED_SIGN = 'all_real_mixed_sign'
    SOME_COMPLEX = 'some_complex'


@dataclass(frozen=True)
class SpectrumClass:
    kind: SpectrumKind
    min_real: float
    max_imag_abs: float


@dataclass(frozen=True)
class KetKetBasis:
    """Energies E_n (ascending) and eigenvectors of H^dagger as columns."""
    energies: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self):
        return len(self.energies)


@dataclass(frozen=True)
class DysonMap:
    omega: np.ndarray
    kappa: np.ndarray

    @property
    def theta(self):
        return self.omega.conj().T @ self.omega


class RegimeKind(str, Enum):
    UNITARY_METRIC = 'unitary'
    KREIN_PSEUDO_METRIC = 'krein'
    COMPLEX_SPECTRUM = 'complex'
    SINGULAR_METRIC = 'singular'


@dataclass(frozen=True)
class RegimeClassification:
    kind: RegimeKind
    witness: tuple = ()
    hermitian: bool = True

    def to_dict(self):
        return {
            'kind': self.kind.value,
            'witness': [_encode_complex(w) for w in self.witness],
            'hermitian': self.hermitian,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            kind=RegimeKind(data['kind']),
            witness=tuple(_decode_complex(w) for w in data['witness']),
            hermitian=bool(data['hermitian']),
        )


@dataclass(frozen=True)
class Boundary:
    t: float
    left: RegimeKind
    right: RegimeKind

    @property
    def label(self):
        return f"{self.left.value}->{self.right.value}"

    def to_dict(self):
        return {'t': self.t, 'left': self.left.value, 'right': self.right.value}

    @classmethod
    def from_dict(cls, data):
        return cls(t=float(data['t']), left=RegimeKind(data['left']), right=RegimeKind(data['right']))


@dataclass
class ScanReport:
    model: str
    rho: int
    t_grid: list
    eigen_traces: list
    classifications: list
    boundaries: list = field(default_factory=list)
    touches: list = field(default_factory=list)

    def first_exit(self) -> Optional[Boundary]:
        """First boundary leaving the unitary regime, i.e. the end of (0, t_rho)."""
        for boundary in self.boundaries:
            if boundary.left is RegimeKind.UNITARY_METRIC:
                return boundary
        return None

    def to_dict(self):
        return {
            'model': self.model,
            'rho': self.rho,
            't_grid': list(self.t_grid),
            'eigen_traces': [[_encode_complex(z) for z in row] for row in self.eigen_traces],
            'classifications': [c.to_dict() for c in self.classifications],
            'boundaries': [b.to_dict() for b in self.boundaries],
            'touches': list(self.touches),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            model=data['model'],
            rho=int(data['rho']),
            t_grid=[float(t) for t in data['t_grid']],
            eigen_traces=[[_decode_complex(z) for z in row] for row in data['eigen_traces']],
            classifications=[RegimeClassification.from_dict(c) for c in data['classifications']],
            boundaries=[Boundary.from_dict(b) for b in data['boundaries']],
            touches=[float(t) for t in data['touches']],
        )


@dataclass(frozen=True)
class EpReport:
    t_ep: float
    eigvec_condition: float
    min_gap: float
    metric_rank: int
    is_ep: bool

    def to_dict(self):
        return {
            't_ep': self.t_ep,
            'eigvec_condition': self.eigvec_condition,
            'min_gap': self.min_gap,
            'metric_rank': self.metric_rank,
            'is_ep': self.is_ep,
        }


@dataclass
class PropagationRecord:
    samples: np.ndarray
    states: np.ndarray
    physical_norms: np.ndarray
    drift: float
    dirac_norms: np.ndarray
    dirac_drift: float
    # Spectra of the Coriolis term per sample; recorded, never asserted.
    coriolis_spectra: list = field(default_factory=list)


@dataclass
class FigureTrace:
    figure: str
    columns: list
    rows: list
    rescale: dict
    regimes: dict = field(default_factory=dict)


@dataclass
class RunConfig:
    command: str
    model: str = 'two'
    rho: list = field(default_factory=lambda: [0])
    t_min: float = 0.0
    t_max: float = 5.0
    t_step: float = 0.05
    tol: Optional[float] = None
    classify_tol: float = 1e-8
    tol_t: float = 1e-10
    kappa: Optional[list] = None
    figure: Optional[str] = None
    output_format: str = 'csv'
    out: Optional[str] = None
    threads: int = 1
    grid_points: int = 400
    ep_exclusion: float = 1e-4
    ep_tol: float = 1e-2
    t_center: float = 0.0
    t_point: float = 0.5
    fd_step: float = 1e-5
    radius: float = 0.5
    horizon: float = 100.0
    steps: int = 2000
    mode: str = 'stationary'
    inject_identity: bool = False
