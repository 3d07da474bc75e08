"""Parameter update rules and the query-driven optimization loop."""

import enum
import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels as kernels
from . import estimators, objectives, sampling
from .estimators import EstimatorConfig, HistoryBuffer, QueryRecord
from .sampling import DirectionSpec

DIVERGENCE_LIMIT = 1e12


class UpdateRule(enum.Enum):
    SGD = "sgd"
    ADAMM = "adamm"
    RADAZO = "radazo"

    @classmethod
    def parse(cls, name: str) -> "UpdateRule":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown update rule: {name!r}") from None


class EstimatorKind(enum.Enum):
    VANILLA = "vanilla"
    REINFORCE_GS = "reinforce_gs"
    ZOHS = "zohs"
    ZOAR = "zoar"

    @classmethod
    def parse(cls, name: str) -> "EstimatorKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown estimator kind: {name!r}") from None


@dataclass(frozen=True)
class OptimizerConfig:
    rule: UpdateRule = UpdateRule.RADAZO
    eta: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    zeta: float = 1e-8
    bias_correction: bool = False  # adaptive rules only; off mirrors the moment loop

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if not self.zeta > 0:
            raise ValueError(f"zeta must be positive, got {self.zeta}")


@dataclass
class MomentState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, dim: int) -> "MomentState":
        return cls(m=np.zeros(dim), v=np.zeros(dim), t=0)


def sgd_step(theta: np.ndarray, grad: np.ndarray, cfg: OptimizerConfig) -> np.ndarray:
    return theta - cfg.eta * grad


def adamm_step(theta: np.ndarray, state: MomentState, grad: np.ndarray,
               cfg: OptimizerConfig) -> tuple[np.ndarray, MomentState]:
    """Adam-style step: second moment tracks squared gradients."""
    t = state.t + 1
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad * grad
    if cfg.bias_correction:
        m_hat = m / (1.0 - cfg.beta1 ** t)
        v_hat = v / (1.0 - cfg.beta2 ** t)
    else:
        m_hat, v_hat = m, v
    theta_new = theta - cfg.eta * m_hat / np.sqrt(v_hat + cfg.zeta)
    return theta_new, MomentState(m=m, v=v, t=t)


def radazo_step(theta: np.ndarray, state: MomentState, grad: np.ndarray,
                cfg: OptimizerConfig) -> tuple[np.ndarray, MomentState]:
    """Variance-refined adaptive step: the second moment is an EMA of the
    *squared first moment*, and no bias correction is applied.

    Since v_t >= (1-beta2) m_t^2 elementwise, each coordinate moves by at
    most eta / sqrt(1 - beta2) per step.
    """
    t = state.t + 1
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * m * m
    theta_new = theta - cfg.eta * m / np.sqrt(v + cfg.zeta)
    return theta_new, MomentState(m=m, v=v, t=t)


class TraceRow(NamedTuple):
    iter: int
    queries_cum: int
    f_clean: float
    gap: float
    wall_ms: float


@dataclass
class Trace:
    """Per-iteration log of one optimization run."""

    rows: list[TraceRow]
    status: str = "completed"  # "completed" | "diverged"
    diverged_at: int | None = None
    fingerprint: str = ""

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    def final_gap(self) -> float:
        return self.rows[-1].gap


def _new_block(obj, theta, cfg: EstimatorConfig, iteration: int, master_seed: int):
    """Query k fresh perturbed points; returns (records, queries)."""
    d = theta.shape[0]
    seeds = [sampling.direction_seed(master_seed, iteration, k)
             for k in range(1, cfg.k + 1)]
    dirs = kernels.materialize_block(np.array(seeds, dtype=np.uint64),
                                     int(cfg.tag), d)
    nseed = sampling.noise_seed(master_seed, iteration)
    values = np.atleast_1d(obj.eval(theta[None, :] + cfg.mu * dirs, nseed))
    records = [QueryRecord(dir=DirectionSpec(seed=s, tag=cfg.tag, dim=d),
                           value=float(y), iteration=iteration)
               for s, y in zip(seeds, values)]
    return records, cfg.k


def run_optimization(obj: objectives.ObjectiveSpec, estimator_kind: EstimatorKind,
                     est_cfg: EstimatorConfig, opt_cfg: OptimizerConfig,
                     iterations: int, master_seed: int, theta0) -> Trace:
    """Run the full loop: sample, query, estimate, update, log.

    The trace has iterations+1 rows when the run completes (row 0 is the
    initial state); a run whose parameters go non-finite or whose clean
    value exceeds the divergence limit stops early with the offending
    iteration recorded.
    """
    theta = sampling.as_params(theta0, obj.dim)
    if estimator_kind is EstimatorKind.ZOAR:
        est_cfg.require_reusable()
        buffer = HistoryBuffer(block_size=est_cfg.k, depth=est_cfg.n)
    grad_history: list[np.ndarray] = []

    state = MomentState.zeros(obj.dim)
    f0 = objectives.clean_value(obj, theta)
    rows = [TraceRow(0, 0, f0, f0 - 0.0, 0.0)]
    queries_cum = 0
    status, diverged_at = "completed", None

    for t in range(1, iterations + 1):
        tic = time.perf_counter()
        if estimator_kind is EstimatorKind.ZOAR:
            records, queries = _new_block(obj, theta, est_cfg, t, master_seed)
            buffer.push_block(records)
            if len(buffer) >= 2:
                grad = estimators.zoar_estimate(buffer, est_cfg.mu)
            else:
                # k = 1 warm-up: a single record pins the baseline to its
                # own value, so the estimate is identically zero
                grad = np.zeros(obj.dim)
        elif estimator_kind is EstimatorKind.ZOHS:
            fd_grad, queries = estimators.fd_estimate(obj, theta, est_cfg, t,
                                                      master_seed)
            grad_history.append(fd_grad)
            if len(grad_history) > est_cfg.n:
                grad_history.pop(0)
            grad = estimators.zohs_estimate(grad_history)
        elif estimator_kind is EstimatorKind.REINFORCE_GS:
            grad, queries = estimators.reinforce_gs_estimate(obj, theta, est_cfg,
                                                             t, master_seed)
        else:
            grad, queries = estimators.fd_estimate(obj, theta, est_cfg, t,
                                                   master_seed)

        if opt_cfg.rule is UpdateRule.SGD:
            theta = sgd_step(theta, grad, opt_cfg)
        elif opt_cfg.rule is UpdateRule.ADAMM:
            theta, state = adamm_step(theta, state, grad, opt_cfg)
        else:
            theta, state = radazo_step(theta, state, grad, opt_cfg)

        queries_cum += queries
        wall_ms = (time.perf_counter() - tic) * 1000.0
        if not np.all(np.isfinite(theta)):
            status, diverged_at = "diverged", t
            break
        f_clean = objectives.clean_value(obj, theta)
        if not np.isfinite(f_clean) or abs(f_clean) > DIVERGENCE_LIMIT:
            status, diverged_at = "diverged", t
            break
        rows.append(TraceRow(t, queries_cum, f_clean, f_clean - 0.0, wall_ms))

    return Trace(rows=rows, status=status, diverged_at=diverged_at)
