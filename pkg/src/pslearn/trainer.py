"""Training loops and model evaluation.

Two families of algorithms share one engine:

* ``gpsl-g`` / ``gpsl-l`` / ``gpsl-d`` train the transformation model by
  maximizing the direction-decomposed hypervolume approximation of the batch
  in normalized objective space.
* ``psl-ls`` / ``psl-tch`` / ``psl-mtch`` / ``cosmos`` / ``psl-hv`` train the
  classic preference-conditioned model: the latent input is a Dirichlet(1)
  preference vector and the loss is the per-sample scalarization.

Objectives are min-max normalized during training with running extremes
updated from each batch (the reference front is never consulted while
training); evaluation normalizes with the reference front's extremes so the
metric is identical for every algorithm. Holding the seed fixed, the whole
pipeline is bit-reproducible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import network as net
from .hv import (
    HvReport,
    exact_hv,
    log_hv_difference,
    nondominated_filter,
    r2_hv_approx,
    r2_hv_subgradient,
)
from .problems import ParetoFrontData, Problem, get_problem, pareto_front
from .sampling import (
    DirectionSet,
    das_dennis,
    default_divisions,
    sample_dirichlet,
    sample_gaussian,
    sample_lhs,
)
from .scalarization import (
    IdealPoint,
    cosmos,
    hv_scalarization,
    modified_tchebycheff,
    tchebycheff,
    weighted_sum,
)

__all__ = [
    "GPSL_ALGORITHMS",
    "PREFERENCE_ALGORITHMS",
    "ALGORITHMS",
    "TrainConfig",
    "MetricsRecord",
    "MetricsLog",
    "TrainResult",
    "TrainingDiverged",
    "train",
    "train_gpsl",
    "train_preference_psl",
    "evaluate_model",
    "latent_sampler",
    "write_metrics_csv",
]

GPSL_ALGORITHMS = ("gpsl-g", "gpsl-l", "gpsl-d")
PREFERENCE_ALGORITHMS = ("psl-ls", "psl-tch", "psl-mtch", "cosmos", "psl-hv")
ALGORITHMS = GPSL_ALGORITHMS + PREFERENCE_ALGORITHMS

# Evaluation draws use one fixed seed so every algorithm is scored on the
# same number of identically-seeded latent samples.
DEFAULT_EVAL_SEED = 915_857_341
REF_OFFSET = 1.1
MIN_RANGE = 1e-12


@dataclass
class TrainConfig:
    """Everything needed to reproduce a single training run."""

    problem: str
    algorithm: str
    iterations: int = 1000
    batch_size: int = 32
    latent_dim: int | None = None  # None: d for gpsl-g/l, m otherwise
    seed: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    hidden_sizes: tuple[int, ...] = (64, 64)
    directions_h: int | None = None  # None: ~100 directions for the problem's m
    eval_samples: int = 1000
    eval_interval: int = 10
    eval_seed: int = DEFAULT_EVAL_SEED
    hv_batch_as_set: bool = True  # False: score each sample as its own set
    tch_epsilon: float = 0.1
    cosmos_gamma: float = 1.0
    dirichlet_alpha: float = 1.0
    ref_offset: float = REF_OFFSET

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(
                f"unknown algorithm {self.algorithm!r}; valid: {', '.join(ALGORITHMS)}"
            )
        if self.iterations < 1 or self.batch_size < 1:
            raise ValueError("need iterations >= 1 and batch_size >= 1")
        if self.latent_dim is not None and self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")

    def resolved_latent_dim(self, problem: Problem) -> int:
        if self.algorithm in ("gpsl-g", "gpsl-l"):
            return self.latent_dim if self.latent_dim is not None else problem.d
        # Dirichlet-input algorithms sample from the objective-space simplex.
        if self.latent_dim is not None and self.latent_dim != problem.m:
            raise ValueError(
                f"{self.algorithm} samples the {problem.m}-simplex; latent_dim "
                f"{self.latent_dim} is not configurable"
            )
        return problem.m


@dataclass(frozen=True)
class MetricsRecord:
    iteration: int
    loss: float
    hv_learned: float
    hv_true: float
    log_hv_difference: float
    seconds: float  # wall clock since run start; excluded from the metrics CSV


@dataclass
class MetricsLog:
    records: list[MetricsRecord] = field(default_factory=list)

    def append(self, record: MetricsRecord) -> None:
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ValueError("iteration indices must be strictly increasing")
        self.records.append(record)

    def final(self) -> MetricsRecord:
        return self.records[-1]


@dataclass
class TrainResult:
    params: net.NetworkParams
    adam_state: net.AdamState
    metrics: MetricsLog
    config: TrainConfig


class TrainingDiverged(RuntimeError):
    """Raised when the training loss becomes non-finite."""

    def __init__(self, iteration: int, params: net.NetworkParams):
        super().__init__(f"non-finite loss at iteration {iteration}")
        self.iteration = iteration
        self.params = params


CSV_COLUMNS = ("iteration", "loss", "hv_learned", "hv_true", "log_hv_difference")


def write_metrics_csv(metrics: MetricsLog, path) -> None:
    """Write the metrics log as CSV with full-precision round-trip cells.

    Wall-clock timings are intentionally not written: the CSV is byte-stable
    across reruns of the same config and seed.
    """
    lines = [",".join(CSV_COLUMNS)]
    for rec in metrics.records:
        lines.append(
            ",".join(
                [
                    str(rec.iteration),
                    repr(rec.loss),
                    repr(rec.hv_learned),
                    repr(rec.hv_true),
                    repr(rec.log_hv_difference),
                ]
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Samplers and normalization state


def latent_sampler(config: TrainConfig, problem: Problem):
    """Build the initial-distribution sampler for the configured algorithm.

    Returns ``draw(n, seed)`` producing an (n, k) array, plus the input
    standardisation (offset, scale) the network should apply.
    """
    k = config.resolved_latent_dim(problem)
    if config.algorithm == "gpsl-g":
        # Sampling center is the box midpoint when the latent space matches
        # the decision space; reduced-dimension ablations use a standard normal.
        center = (problem.lb + problem.ub) / 2.0 if k == problem.d else np.zeros(k)

        def draw(n, seed):
            return sample_gaussian(k, center, n, seed).samples

        return draw, center, np.ones(k)
    if config.algorithm == "gpsl-l":
        if k == problem.d:
            lo, hi = problem.lb, problem.ub
        else:
            lo, hi = np.zeros(k), np.ones(k)

        def draw(n, seed):
            return sample_lhs(k, lo, hi, n, seed).samples

        return draw, (lo + hi) / 2.0, np.maximum((hi - lo) / 2.0, MIN_RANGE)
    # Dirichlet input (gpsl-d and every preference-based algorithm).
    alpha = config.dirichlet_alpha if config.algorithm == "gpsl-d" else 1.0

    def draw(n, seed):
        return sample_dirichlet(k, alpha, n, seed).samples

    return draw, np.zeros(k), np.ones(k)


class _RunningExtremes:
    """Componentwise running min/max of raw objective vectors."""

    def __init__(self, m: int):
        self.low = np.full(m, np.inf)
        self.high = np.full(m, -np.inf)

    def update(self, objectives: np.ndarray) -> None:
        self.low = np.minimum(self.low, objectives.min(axis=0))
        self.high = np.maximum(self.high, objectives.max(axis=0))

    @property
    def range(self) -> np.ndarray:
        return np.maximum(self.high - self.low, MIN_RANGE)

    def normalize(self, objectives: np.ndarray) -> np.ndarray:
        return (objectives - self.low) / self.range


# ---------------------------------------------------------------------------
# Per-batch loss + gradient (shared by training and gradient tests)


def _chain_to_params(params, cache, problem, xs, d_loss_d_raw):
    """dL/d(theta) from per-sample dL/df via problem Jacobians and backprop."""
    d_loss_d_x = np.empty((xs.shape[0], problem.d))
    for i in range(xs.shape[0]):
        d_loss_d_x[i] = problem.jacobian(xs[i]).T @ d_loss_d_raw[i]
    return net.backward(params, cache, d_loss_d_x)


def _gpsl_batch_loss(params, latents, problem, dirs: DirectionSet, extremes,
                     ref_offset: float, batch_as_set: bool):
    """Loss, parameter gradients and raw objectives for one GPSL batch.

    Updates ``extremes`` from the batch before normalizing. The batch's
    outputs form the point set of one hypervolume term (default) or each
    sample is scored as a singleton set; either way the mean over the batch
    is the loss and its negative gradient flows back through the problem
    Jacobian and the network.
    """
    xs, cache = net.forward(params, latents, problem.lb, problem.ub)
    raw = problem.evaluate_batch(xs)
    extremes.update(raw)
    y = extremes.normalize(raw)
    n = y.shape[0]
    r = np.full(problem.m, ref_offset)
    if batch_as_set:
        value = r2_hv_approx(y, r, dirs)
        d_loss_d_y = -r2_hv_subgradient(y, r, dirs) / n
        loss = -value / n
    else:
        loss = 0.0
        d_loss_d_y = np.zeros_like(y)
        for i in range(n):
            loss -= r2_hv_approx(y[i : i + 1], r, dirs) / n
            d_loss_d_y[i] = -r2_hv_subgradient(y[i : i + 1], r, dirs)[0] / n
    d_loss_d_raw = d_loss_d_y / extremes.range
    grads = _chain_to_params(params, cache, problem, xs, d_loss_d_raw)
    return loss, grads, raw


def _preference_batch_loss(params, prefs, problem, loss_kind: str, ideal: IdealPoint,
                           extremes, config: TrainConfig):
    """Loss, parameter gradients and raw objectives for one preference batch."""
    xs, cache = net.forward(params, prefs, problem.lb, problem.ub)
    raw = problem.evaluate_batch(xs)
    extremes.update(raw)
    ideal.update(raw)
    y = extremes.normalize(raw)
    n = y.shape[0]
    ideal_norm = IdealPoint(
        z=(ideal.z - extremes.low) / extremes.range, epsilon=config.tch_epsilon
    )
    r = np.full(problem.m, config.ref_offset)
    loss = 0.0
    d_loss_d_y = np.zeros_like(y)
    for i in range(n):
        if loss_kind == "psl-ls":
            value, grad = weighted_sum(y[i], prefs[i])
        elif loss_kind == "psl-tch":
            value, grad = tchebycheff(y[i], prefs[i], ideal_norm)
        elif loss_kind == "psl-mtch":
            value, grad = modified_tchebycheff(y[i], prefs[i], ideal_norm)
        elif loss_kind == "cosmos":
            value, grad = cosmos(y[i], prefs[i], config.cosmos_gamma)
        elif loss_kind == "psl-hv":
            lam = np.maximum(prefs[i], 1e-6)
            lam = lam / np.linalg.norm(lam)
            s, grad_s, _ = hv_scalarization(y[i], lam, r)
            value, grad = -s, -grad_s
        else:
            raise ValueError(f"unknown preference loss {loss_kind!r}")
        loss += value / n
        d_loss_d_y[i] = grad / n
    d_loss_d_raw = d_loss_d_y / extremes.range
    grads = _chain_to_params(params, cache, problem, xs, d_loss_d_raw)
    return loss, grads, raw


# ---------------------------------------------------------------------------
# Evaluation


def _normalized_front(front: ParetoFrontData, ref_offset: float):
    f_min = front.points.min(axis=0)
    f_range = np.maximum(front.points.max(axis=0) - f_min, MIN_RANGE)
    front_norm = (front.points - f_min) / f_range
    r = np.full(front.m, ref_offset)
    hv_true = exact_hv(front_norm, r)
    return f_min, f_range, r, hv_true


def _hv_report(hv_true: float, hv_learned: float) -> HvReport:
    # The log-difference floor: exact ties (or tiny overshoots) land on
    # log(1e-6) rather than a domain error.
    epsilon_log = 0.0 if hv_learned < hv_true else 1e-6
    return HvReport(
        hv_true=hv_true,
        hv_learned=hv_learned,
        log_hv_difference=log_hv_difference(hv_true, hv_learned, epsilon_log),
        epsilon_log=epsilon_log,
    )


def evaluate_model(
    params: net.NetworkParams,
    problem: Problem,
    sampler,
    front: ParetoFrontData,
    n_eval: int = 1000,
    seed: int = DEFAULT_EVAL_SEED,
    ref_offset: float = REF_OFFSET,
) -> HvReport:
    """Score a trained model against a reference front.

    Draws ``n_eval`` latent vectors from the algorithm's initial distribution
    with a fixed seed, maps them through the model, normalizes objectives by
    the front's componentwise extremes, filters the non-dominated subset and
    compares exact hypervolumes at reference point (ref_offset, ...).
    """
    if n_eval < 1:
        raise ValueError("n_eval must be >= 1")
    f_min, f_range, r, hv_true = _normalized_front(front, ref_offset)
    latents = sampler(n_eval, seed)
    xs, _ = net.forward(params, latents, problem.lb, problem.ub)
    raw = problem.evaluate_batch(xs)
    y = (raw - f_min) / f_range
    hv_learned = exact_hv(nondominated_filter(y), r)
    return _hv_report(hv_true, hv_learned)


# ---------------------------------------------------------------------------
# Training loops


def _resolve_front(problem: Problem, front: ParetoFrontData | None) -> ParetoFrontData:
    if front is not None:
        if front.m != problem.m:
            raise ValueError(
                f"front has {front.m} objectives but {problem.id} has {problem.m}"
            )
        return front
    return pareto_front(problem)


def _train_loop(config: TrainConfig, problem: Problem, front: ParetoFrontData,
                make_batch_loss) -> TrainResult:
    draw, in_offset, in_scale = latent_sampler(config, problem)
    k = config.resolved_latent_dim(problem)
    layer_sizes = (k, *config.hidden_sizes, problem.d)
    params = net.init_network(layer_sizes, config.seed, in_offset, in_scale)
    state = net.init_adam(
        params,
        learning_rate=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        eps=config.eps_adam,
    )
    rng = np.random.default_rng(config.seed)
    f_min, f_range, r, hv_true = _normalized_front(front, config.ref_offset)
    metrics = MetricsLog()
    start = time.perf_counter()

    def evaluate(iteration: int, loss: float):
        latents = draw(config.eval_samples, config.eval_seed)
        xs, _ = net.forward(params, latents, problem.lb, problem.ub)
        y = (problem.evaluate_batch(xs) - f_min) / f_range
        hv_learned = exact_hv(nondominated_filter(y), r)
        report = _hv_report(hv_true, hv_learned)
        metrics.append(
            MetricsRecord(
                iteration=iteration,
                loss=loss,
                hv_learned=report.hv_learned,
                hv_true=report.hv_true,
                log_hv_difference=report.log_hv_difference,
                seconds=time.perf_counter() - start,
            )
        )

    # Row 0 scores the untrained model; its loss is probed on an evaluation
    # batch with throwaway state so neither the training extremes nor the
    # rng stream are touched.
    probe_latents = draw(config.batch_size, config.eval_seed)
    probe_loss, _, _ = make_batch_loss()(params, probe_latents, _RunningExtremes(problem.m))
    evaluate(0, probe_loss)

    batch_loss = make_batch_loss()
    extremes = _RunningExtremes(problem.m)
    loss = math.nan
    for iteration in range(1, config.iterations + 1):
        latents = draw(config.batch_size, rng)
        loss, grads, _ = batch_loss(params, latents, extremes)
        if not math.isfinite(loss):
            raise TrainingDiverged(iteration, params)
        params, state = net.adam_step(params, grads, state)
        if iteration % config.eval_interval == 0 or iteration == config.iterations:
            evaluate(iteration, loss)
    return TrainResult(params=params, adam_state=state, metrics=metrics, config=config)


def train_gpsl(config: TrainConfig, front: ParetoFrontData | None = None) -> TrainResult:
    """Train a distribution-transformation model by hypervolume maximization."""
    if config.algorithm not in GPSL_ALGORITHMS:
        raise ValueError(f"train_gpsl got non-GPSL algorithm {config.algorithm!r}")
    problem = get_problem(config.problem)
    front = _resolve_front(problem, front)
    divisions = config.directions_h or default_divisions(problem.m)
    dirs = das_dennis(problem.m, divisions)

    def make_batch_loss():
        def batch_loss(params, latents, extremes):
            return _gpsl_batch_loss(
                params, latents, problem, dirs, extremes,
                config.ref_offset, config.hv_batch_as_set,
            )

        return batch_loss

    return _train_loop(config, problem, front, make_batch_loss)


def train_preference_psl(
    config: TrainConfig,
    front: ParetoFrontData | None = None,
    loss_kind: str | None = None,
) -> TrainResult:
    """Train a preference-conditioned model with the chosen scalarization."""
    kind = loss_kind or config.algorithm
    if kind not in PREFERENCE_ALGORITHMS:
        raise ValueError(f"unknown preference loss {kind!r}")
    problem = get_problem(config.problem)
    front = _resolve_front(problem, front)

    def make_batch_loss():
        # Ideal point starts at the first observed batch minimum and only
        # ever decreases; each loop owns its own copy.
        ideal = IdealPoint(z=np.full(problem.m, np.inf), epsilon=config.tch_epsilon)

        def batch_loss(params, latents, extremes):
            return _preference_batch_loss(
                params, latents, problem, kind, ideal, extremes, config
            )

        return batch_loss

    return _train_loop(config, problem, front, make_batch_loss)


def train(config: TrainConfig, front: ParetoFrontData | None = None) -> TrainResult:
    """Dispatch to the GPSL or preference-based trainer by algorithm tag."""
    if config.algorithm in GPSL_ALGORITHMS:
        return train_gpsl(config, front)
    return train_preference_psl(config, front)
