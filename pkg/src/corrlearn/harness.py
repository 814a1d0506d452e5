"""Configuration-driven trial runner: the online teaching loop, sweeps over
channel/noise/threshold, the behavior-cloning baseline, and CSV/JSON output.

Each trial is an isolated unit (own world, teacher, weights, rng) and is
bit-reproducible from (config, trial seed).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import learner, teacher as teacher_mod, world
from .feedback import NoFeedback, feedback_to_pseudo_loss
from .teacher import CHANNELS, Teacher

TRIAL_CSV_HEADER = (
    "t,chosen_index,latent_loss,corrected,feedback_kind,pseudo_regret_increment,reset"
)

SIGMA_SWEEP = (0.0, 0.25, 0.5, 1.0)
THRESHOLD_SWEEP = (0.0, 0.25, 0.5, 0.75, 1.0)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class TeacherConfig:
    w_star: tuple[float, ...]
    threshold: float = 1.0
    sigma: float = 0.0
    channel: str = "action"
    seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    map: str
    teacher: TeacherConfig | None = None
    steps: int = 5000
    trials: int = 10
    eta: float = 0.01
    k: int = 64
    kappa_max: float = 1.0
    clip: float = 3.0
    epsilon: float = 0.1
    seed: int = 0
    smoothing_window: int = 100
    n_samples: int = 8
    bc_samples: int = 50
    bc_epochs: int = 10
    out_dir: str | None = None
    mode: str = "stepper"
    auto_advance_ms: int | None = None

    def validate(self, require_teacher: bool = True) -> None:
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.eta > 0:
            raise ConfigError("eta must be > 0")
        if self.k < 2:
            raise ConfigError("k must be >= 2")
        if not self.kappa_max > 0:
            raise ConfigError("kappa_max must be > 0")
        if not self.clip > 0:
            raise ConfigError("clip must be > 0")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        if self.mode not in ("stepper", "timed"):
            raise ConfigError("mode must be 'stepper' or 'timed'")
        if require_teacher:
            if self.teacher is None:
                raise ConfigError("teacher block is required")
            if len(self.teacher.w_star) != world.FEATURE_DIM:
                raise ConfigError(f"teacher.w_star must have {world.FEATURE_DIM} entries")
            if self.teacher.channel not in CHANNELS:
                raise ConfigError(f"teacher.channel must be one of {CHANNELS}")
            if self.teacher.threshold < 0 or self.teacher.sigma < 0:
                raise ConfigError("teacher.threshold and teacher.sigma must be >= 0")
            if self.teacher.seed < 0:
                raise ConfigError("teacher.seed must be >= 0")

    def build_teacher(self) -> Teacher:
        tc = self.teacher
        if tc is None:
            raise ConfigError("teacher block is required")
        return Teacher(
            w_star=np.array(tc.w_star, dtype=float),
            threshold=tc.threshold,
            noise_sigma=tc.sigma,
            channel=tc.channel,
            rng_seed=tc.seed,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.teacher is not None:
            d["teacher"] = asdict(self.teacher)
            d["teacher"]["w_star"] = list(self.teacher.w_star)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    if "map" not in data:
        raise ConfigError("config needs a 'map' field")
    data = dict(data)
    tc = data.get("teacher")
    if tc is not None:
        if not isinstance(tc, dict):
            raise ConfigError("teacher block must be an object")
        t_known = set(TeacherConfig.__dataclass_fields__)
        t_unknown = set(tc) - t_known
        if t_unknown:
            raise ConfigError(f"unknown teacher fields: {sorted(t_unknown)}")
        if "w_star" not in tc:
            raise ConfigError("teacher block needs w_star")
        tc = dict(tc)
        tc["w_star"] = tuple(float(x) for x in tc["w_star"])
        data["teacher"] = TeacherConfig(**tc)
    try:
        cfg = ExperimentConfig(**data)
    except TypeError as e:
        raise ConfigError(str(e)) from e
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return config_from_dict(data)


# ---------- trial records ----------

@dataclass(frozen=True)
class StepRecord:
    t: int
    chosen_index: int
    latent_loss: float
    corrected: bool
    feedback_kind: str
    pseudo_regret_increment: float
    reset: bool


@dataclass(frozen=True)
class TrialLog:
    config_hash: str
    records: tuple[StepRecord, ...]
    final_weights: np.ndarray
    update_count: int
    alpha_pairs: tuple[tuple[float, float], ...]
    # (features, pseudo values) per corrected step, kept only on request
    hinge_stream: tuple[tuple[np.ndarray, np.ndarray], ...] = ()

    @property
    def latent_curve(self) -> np.ndarray:
        return np.array([r.latent_loss for r in self.records])

    @property
    def corrections_curve(self) -> np.ndarray:
        return np.cumsum([1 if r.corrected else 0 for r in self.records])

    @property
    def regret_curve(self) -> np.ndarray:
        return np.cumsum(self.latent_curve)

    def total_corrections(self) -> int:
        return int(self.corrections_curve[-1]) if self.records else 0


@dataclass(frozen=True)
class MetricsRecord:
    moving_avg_latent: np.ndarray
    final_smoothed_latent_loss: float
    cumulative_corrections: np.ndarray
    cumulative_latent_regret: np.ndarray
    regret_total: float
    regret_quarter: float
    sublinearity_ratio: float
    empirical_alpha: float | None


def compute_metrics(log: TrialLog, window: int) -> MetricsRecord:
    """Moving-average latent loss, correction/regret curves, the
    R(T)/R(T/4) sublinearity ratio, and the stream's empirical alpha."""
    latent = log.latent_curve
    steps = len(latent)
    if not 1 <= window <= steps:
        raise ValueError("window must be in [1, steps]")
    kernel = np.ones(window) / window
    moving = np.convolve(latent, kernel, mode="valid")
    regret = np.cumsum(latent)
    total = float(regret[-1])
    quarter = float(regret[max(1, steps // 4) - 1])
    if total == 0.0:
        ratio = 1.0
    elif quarter == 0.0:
        ratio = float("inf")
    else:
        ratio = total / quarter
    alpha = None
    if log.alpha_pairs:
        alpha = learner.empirical_alpha(log.alpha_pairs)
    return MetricsRecord(
        moving_avg_latent=moving,
        final_smoothed_latent_loss=float(latent[-window:].mean()),
        cumulative_corrections=log.corrections_curve,
        cumulative_latent_regret=regret,
        regret_total=total,
        regret_quarter=quarter,
        sublinearity_ratio=ratio,
        empirical_alpha=alpha,
    )


# ---------- trial loop ----------

def run_trial(
    config: ExperimentConfig, trial_seed: int, on_step=None, keep_hinge_stream: bool = False
) -> TrialLog:
    """One online learning trial.

    Loop: observe state, generate and mask actions, select, let the teacher
    decide, convert feedback to a pseudo-loss, hinge + OGD on corrected
    steps only, then advance the world. on_step(t, state, weights, record)
    is called after each step when given. keep_hinge_stream retains the
    corrected steps' loss functions for best-in-hindsight reporting.
    """
    config.validate()
    the_map = world.load_map(config.map)
    t_teacher = config.build_teacher()
    rng = np.random.default_rng([config.seed, t_teacher.rng_seed, trial_seed])
    w = learner.zero_weights()
    state = world.initial_state(the_map)
    records: list[StepRecord] = []
    alpha_pairs: list[tuple[float, float]] = []
    hinge_stream: list[tuple[np.ndarray, np.ndarray]] = []
    update_count = 0

    for t in range(config.steps):
        trajs = world.generate_action_set(
            state.pose, k=config.k, kappa_max=config.kappa_max, n_samples=config.n_samples
        )
        selectable = world.mask_colliding(the_map, trajs)
        if not selectable:
            raise ConfigError("no collision-free action at the start pose")
        phi = world.feature_matrix(the_map, state, trajs, clip=config.clip)
        chosen = learner.select_action(w, phi, selectable)
        latent = teacher_mod.latent_eval(t_teacher, phi, selectable)
        noisy = teacher_mod.perturb(latent, t_teacher.noise_sigma, rng)
        fb = teacher_mod.decide_correction(
            t_teacher, noisy, chosen, phi, rng, epsilon=config.epsilon
        )
        corrected = not isinstance(fb, NoFeedback)
        pseudo_inc = 0.0
        if corrected:
            pseudo = feedback_to_pseudo_loss(fb, phi, chosen, epsilon=config.epsilon)
            ev = learner.hinge_eval(w, phi, pseudo)
            w = learner.ogd_update(w, ev.subgradient, config.eta)
            update_count += 1
            pseudo_inc = float(pseudo.values[chosen])
            if keep_hinge_stream:
                hinge_stream.append((phi, pseudo.values))
            chosen_gap = _clean_gap(latent, chosen)
            if chosen_gap > 0:
                alpha_pairs.append(
                    (chosen_gap - _clean_gap(latent, pseudo.best_index), chosen_gap)
                )
        prev_resets = state.reset_count
        state = world.step(
            state, trajs[chosen], k=config.k, kappa_max=config.kappa_max,
            n_samples=config.n_samples,
        )
        record = StepRecord(
            t=t,
            chosen_index=chosen,
            latent_loss=float(latent.losses[chosen]),
            corrected=corrected,
            feedback_kind=fb.kind,
            pseudo_regret_increment=pseudo_inc,
            reset=state.reset_count > prev_resets,
        )
        records.append(record)
        if on_step is not None:
            on_step(t, state, w, record)

    return TrialLog(
        config_hash=config.config_hash(),
        records=tuple(records),
        final_weights=w,
        update_count=update_count,
        alpha_pairs=tuple(alpha_pairs),
        hinge_stream=tuple(hinge_stream),
    )


def _clean_gap(latent: teacher_mod.LatentEval, index: int) -> float:
    # latent loss against the best selectable action, defined for any index
    return float(latent.utilities[latent.best_index] - latent.utilities[index])


def best_in_hindsight(hinge_stream, iters: int = 400) -> tuple[np.ndarray, float]:
    """Approximate min over fixed weights of the summed corrected-step hinge
    losses, by subgradient descent with a decaying rate.

    With 7 linear features the minimum is not guaranteed to be zero on every
    teacher/map pair, so sweeps can report this instead of assuming it.
    Returns (weights, total loss at those weights).
    """
    stream = list(hinge_stream)
    if not stream:
        return learner.zero_weights(), 0.0

    def total(w):
        from .feedback import PseudoLoss

        s = 0.0
        g = np.zeros_like(w)
        for phi, values in stream:
            ev = learner.hinge_eval(w, phi, PseudoLoss(values=values, best_index=int(np.argmin(values))))
            s += ev.loss
            g += ev.subgradient
        return s, g

    w = learner.zero_weights()
    best_w, best_total = w, total(w)[0]
    scale = max(1.0, float(np.mean([np.abs(v).max() for _, v in stream])))
    for t in range(iters):
        loss, g = total(w)
        if loss < best_total:
            best_total, best_w = loss, w
        norm = float(np.linalg.norm(g))
        if norm == 0.0:
            break
        w = w - (scale / (norm * math.sqrt(t + 1.0))) * g
    loss, _ = total(w)
    if loss < best_total:
        best_total, best_w = loss, w
    return best_w, float(best_total)


def run_bc_baseline(config: ExperimentConfig, on_step=None) -> TrialLog:
    """Behavior cloning baseline: fit on teacher-policy rollout samples,
    then evaluate the frozen weights with no further updates."""
    config.validate()
    if config.teacher is None or config.teacher.channel != "action":
        raise ConfigError("bc baseline requires an action-channel teacher")
    the_map = world.load_map(config.map)
    t_teacher = config.build_teacher()

    dataset = []
    state = world.initial_state(the_map)
    for _ in range(config.bc_samples):
        trajs = world.generate_action_set(
            state.pose, k=config.k, kappa_max=config.kappa_max, n_samples=config.n_samples
        )
        selectable = world.mask_colliding(the_map, trajs)
        if not selectable:
            raise ConfigError("teacher rollout hit a state with no free action")
        phi = world.feature_matrix(the_map, state, trajs, clip=config.clip)
        latent = teacher_mod.latent_eval(t_teacher, phi, selectable)
        dataset.append((phi, latent.best_index))
        state = world.step(
            state, trajs[latent.best_index], k=config.k,
            kappa_max=config.kappa_max, n_samples=config.n_samples,
        )
    w = (
        learner.bc_fit(dataset, epochs=config.bc_epochs, eta=config.eta)
        if dataset
        else learner.zero_weights()
    )

    records = []
    state = world.initial_state(the_map)
    for t in range(config.steps):
        trajs = world.generate_action_set(
            state.pose, k=config.k, kappa_max=config.kappa_max, n_samples=config.n_samples
        )
        selectable = world.mask_colliding(the_map, trajs)
        phi = world.feature_matrix(the_map, state, trajs, clip=config.clip)
        chosen = learner.select_action(w, phi, selectable)
        latent = teacher_mod.latent_eval(t_teacher, phi, selectable)
        prev_resets = state.reset_count
        state = world.step(
            state, trajs[chosen], k=config.k, kappa_max=config.kappa_max,
            n_samples=config.n_samples,
        )
        record = StepRecord(
            t=t,
            chosen_index=chosen,
            latent_loss=float(latent.losses[chosen]),
            corrected=False,
            feedback_kind="none",
            pseudo_regret_increment=0.0,
            reset=state.reset_count > prev_resets,
        )
        records.append(record)
        if on_step is not None:
            on_step(t, state, w, record)
    return TrialLog(
        config_hash=config.config_hash(),
        records=tuple(records),
        final_weights=w,
        update_count=0,
        alpha_pairs=(),
    )


# ---------- sweeps ----------

@dataclass(frozen=True)
class SweepCell:
    axis: str
    value: object
    trials_ok: int
    errors: int
    mean_final_loss: float
    std_final_loss: float
    mean_corrections: float
    std_corrections: float
    error_messages: tuple[str, ...] = field(default=())


def _config_for_axis(base: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if base.teacher is None:
        raise ConfigError("sweep requires a teacher block")
    if axis == "channel":
        return replace(base, teacher=replace(base.teacher, channel=str(value)))
    if axis == "sigma":
        return replace(base, teacher=replace(base.teacher, sigma=float(value)))
    if axis == "threshold":
        return replace(base, teacher=replace(base.teacher, threshold=float(value)))
    raise ConfigError(f"unknown sweep axis: {axis}")


def sweep_values(axis: str, values=None):
    if values is not None:
        return list(values)
    if axis == "channel":
        return list(CHANNELS)
    if axis == "sigma":
        return list(SIGMA_SWEEP)
    if axis == "threshold":
        return list(THRESHOLD_SWEEP)
    raise ConfigError(f"unknown sweep axis: {axis}")


def run_sweep(
    base: ExperimentConfig, axis: str, values=None, out_dir: str | Path | None = None
) -> list[SweepCell]:
    """trials x run_trial per axis value; per-trial failures are recorded in
    the cell and the sweep continues."""
    cells = []
    vals = sweep_values(axis, values)
    if not vals:
        raise ConfigError("sweep needs at least one axis value")
    for value in vals:
        cfg = _config_for_axis(base, axis, value)
        logs, errors = [], []
        for i in range(cfg.trials):
            try:
                logs.append(run_trial(cfg, i))
            except Exception as e:  # record and continue
                errors.append(f"trial {i}: {e}")
        finals = [
            compute_metrics(lg, min(cfg.smoothing_window, cfg.steps)).final_smoothed_latent_loss
            for lg in logs
        ]
        corrections = [lg.total_corrections() for lg in logs]
        cells.append(
            SweepCell(
                axis=axis,
                value=value,
                trials_ok=len(logs),
                errors=len(errors),
                mean_final_loss=float(np.mean(finals)) if finals else float("nan"),
                std_final_loss=float(np.std(finals)) if finals else float("nan"),
                mean_corrections=float(np.mean(corrections)) if corrections else float("nan"),
                std_corrections=float(np.std(corrections)) if corrections else float("nan"),
                error_messages=tuple(errors),
            )
        )
        if out_dir is not None:
            cell_dir = Path(out_dir) / f"{axis}_{value}"
            for i, lg in enumerate(logs):
                write_trial_csv(lg, cell_dir / f"trial_{i}.csv")
    if out_dir is not None:
        write_summary_csv(cells, Path(out_dir) / "summary.csv")
    return cells


# ---------- output ----------

def _fmt(x: float) -> str:
    return repr(float(x))


def trial_csv_text(log: TrialLog) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRIAL_CSV_HEADER.split(","))
    for r in log.records:
        writer.writerow(
            [
                r.t,
                r.chosen_index,
                _fmt(r.latent_loss),
                1 if r.corrected else 0,
                r.feedback_kind,
                _fmt(r.pseudo_regret_increment),
                1 if r.reset else 0,
            ]
        )
    return buf.getvalue()


def write_trial_csv(log: TrialLog, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(trial_csv_text(log))
    return path


def write_summary_csv(cells: list[SweepCell], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "axis", "value", "trials_ok", "errors",
            "mean_final_smoothed_latent_loss", "std_final_smoothed_latent_loss",
            "mean_total_corrections", "std_total_corrections",
        ]
    )
    for c in cells:
        writer.writerow(
            [
                c.axis, c.value, c.trials_ok, c.errors,
                _fmt(c.mean_final_loss), _fmt(c.std_final_loss),
                _fmt(c.mean_corrections), _fmt(c.std_corrections),
            ]
        )
    path.write_text(buf.getvalue())
    return path


def write_weights_json(w: np.ndarray, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(learner.weights_to_json(w))
    return path


def run(
    config: ExperimentConfig,
    out_dir: str | Path | None = None,
    keep_hinge_stream: bool = False,
) -> list[TrialLog]:
    """config.trials independent trials; writes trial_<i>.csv plus a
    weights.json checkpoint of the last trial when out_dir is given."""
    config.validate()
    logs = [
        run_trial(config, i, keep_hinge_stream=keep_hinge_stream)
        for i in range(config.trials)
    ]
    if out_dir is not None:
        out = Path(out_dir)
        for i, lg in enumerate(logs):
            write_trial_csv(lg, out / f"trial_{i}.csv")
        write_weights_json(logs[-1].final_weights, out / "weights.json")
    return logs
