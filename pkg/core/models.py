from __future__ import annotations

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class KalmanCertificate(BaseModel):
    K_matrix: List[List[float]]
    numerical_rank: int
    singular_values: List[float]
    holds: bool


class CorrectorConstants(BaseModel):
    eta0: float = Field(gt=0)
    eps0: float = Field(gt=0)
    eps_k: List[float]
    certificate: Dict[str, bool]
    base: float  # ε in eps_k = ε**m_k
    exponents: List[float]
    gap: float = 0.1  # m_k - (m_{k-1} + m_{k+1})/2
    C: float  # operator-norm constant of the constraints
    C2: float  # |y|^2 <= C2 * N(y)^2
    lam: float

    @property
    def eps_star(self) -> float:
        return min([self.lam] + list(self.eps_k))


class DecayRecord(BaseModel):
    times: List[float]
    norm_u2: List[float]
    norm_dhU: List[float]
    lyapunov: List[float]
    h1_norm_initial: float
    h: float


class RelaxationErrorRecord(BaseModel):
    eps: float
    h: float
    T: float
    sup_error_besov: float
    l1t_error_besov: float
    darcy_l1t: float
    sup_error_linf: float
    darcy_l1t_linf: float
    s: float = 2.25
    kappa: float = 0.5
    # B^{s-2} sup error split at 2^J = κ/ε
    sup_split_low: float = 0.0
    sup_split_high: float = 0.0

    def columns(self) -> Dict[str, float]:
        return {
            "sup_besov": self.sup_error_besov,
            "l1t_besov": self.l1t_error_besov,
            "darcy_besov": self.darcy_l1t,
            "sup_linf": self.sup_error_linf,
            "darcy_linf": self.darcy_l1t_linf,
        }


class SlopeFit(BaseModel):
    slope: float
    r_squared: float
    stderr: float
    n_samples: int


class StabilityReport(BaseModel):
    scheme: str
    max_amplification: float  # inf once the norm overflows
    log_amplification: float
    stable: bool
    worst_frequency: float


class TruncationReport(BaseModel):
    admissible: bool
    discrepancy: float
    threshold: float
    conditions: Dict[str, bool] = Field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.admissible


class SuiteResult(BaseModel):
    name: str
    passed: bool
    worst_residual: float
    detail: str = ""


class ExperimentOutcome(BaseModel):
    command: str
    run_id: str
    passed: bool
    summary: Dict[str, Any] = Field(default_factory=dict)
    files: List[str] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)
    failed_suite: Optional[str] = None
