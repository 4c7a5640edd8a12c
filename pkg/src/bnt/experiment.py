"""Benchmark protocol runner: repeated seeded 70:30 splits, per-model fits,
original-unit metrics, and table/CSV report emission.

Every (model, repeat) cell derives its own seed from (base seed, repeat,
model name), so removing a model from the list or reordering execution
changes nothing else; the whole report is a pure function of the config
file and the dataset file.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import bcart
from .bnn import BnnHyper, train_bnn_fixed_k
from .cart import fit_cart, predict_tree_batch, used_features
from .data import (
    Dataset,
    apply_scaler,
    clean,
    fit_scaler,
    invert_response,
    load_csv,
    shuffle_split,
)
from .metrics import MetricsReport, compute_metrics
from .mlp import TrainConfig, forward_batch, train_ann
from .pipelines import SelectionConfig, fit_bnt1, fit_bnt2, predict_bnt_batch
from .seeding import derive_seed

KNOWN_MODELS = (
    "CART", "BCART", "ANN", "BNN",
    "BNT1@p=0.3", "BNT1@p=0.6", "BNT1@p=0.9", "BNT2",
)

METRIC_FIELDS = ("mae", "mape", "rmse", "r2", "adj_r2")


class ConfigError(ValueError):
    """Malformed experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_path: str
    response: str | None = None
    dataset_name: str = ""
    models: tuple[str, ...] = KNOWN_MODELS
    n_repeats: int = 10
    train_fraction: float = 0.7
    minsplit_fraction: float = 0.1
    base_seed: int = 42
    # network training
    epochs: int = 5000
    learning_rate: float = 0.1
    init_scale: float = 0.5
    ann_k: int = 2                   # standalone baseline hidden units
    sigma_p: float = 1.0
    sigma_l: float = 1.0
    evidence_updates: int = 3
    # chain budget
    chain_iterations: int = 7000
    chain_burn_in: int = 2000
    chain_thinning: int = 5
    alpha: float = 0.95
    beta: float = 2.0
    nu: float = 3.0
    a: float = 1.0
    # feature selection
    permutations: int = 50
    level: float = 0.05

    def __post_init__(self):
        if self.n_repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must be in (0, 1)")
        if not 0.0 < self.minsplit_fraction < 1.0:
            raise ConfigError("minsplit_fraction must be in (0, 1)")
        for m in self.models:
            if m not in KNOWN_MODELS:
                raise ConfigError(f"unknown model {m!r}; known: {KNOWN_MODELS}")


_CONFIG_KEYS = {
    "dataset": ("dataset_path", str),
    "response": ("response", str),
    "name": ("dataset_name", str),
    "models": ("models", lambda s: tuple(m.strip() for m in s.split(",") if m.strip())),
    "repeats": ("n_repeats", int),
    "train_fraction": ("train_fraction", float),
    "minsplit_fraction": ("minsplit_fraction", float),
    "seed": ("base_seed", int),
    "epochs": ("epochs", int),
    "learning_rate": ("learning_rate", float),
    "init_scale": ("init_scale", float),
    "ann_k": ("ann_k", int),
    "sigma_p": ("sigma_p", float),
    "sigma_l": ("sigma_l", float),
    "evidence_updates": ("evidence_updates", int),
    "chain_iterations": ("chain_iterations", int),
    "chain_burn_in": ("chain_burn_in", int),
    "chain_thinning": ("chain_thinning", int),
    "alpha": ("alpha", float),
    "beta": ("beta", float),
    "nu": ("nu", float),
    "a": ("a", float),
    "permutations": ("permutations", int),
    "level": ("level", float),
}


def parse_config(path: str) -> ExperimentConfig:
    """Read a key=value config file (# starts a comment, blank lines ok)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    kwargs: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        attr, conv = _CONFIG_KEYS[key]
        try:
            kwargs[attr] = conv(value)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    if "dataset_path" not in kwargs:
        raise ConfigError(f"{path}: missing required key 'dataset'")
    if not kwargs.get("dataset_name"):
        kwargs["dataset_name"] = Path(kwargs["dataset_path"]).stem
    try:
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


@dataclass
class RepeatOutcome:
    dataset: str
    model: str
    repeat: int
    seed: int
    features_used: float = math.nan
    metrics: MetricsReport | None = None
    error: str | None = None


@dataclass
class ResultRow:
    """Seed-averaged metrics for one (dataset, model) pair."""

    dataset: str
    model: str
    n_ok: int
    n_failed: int
    features_used: float
    mae: float
    mape: float
    rmse: float
    r2: float
    adj_r2: float
    per_repeat: list[RepeatOutcome] = field(default_factory=list)


def _chain_config(cfg: ExperimentConfig) -> bcart.ChainConfig:
    return bcart.ChainConfig(
        iterations=cfg.chain_iterations,
        burn_in=cfg.chain_burn_in,
        thinning=cfg.chain_thinning,
        tree_prior=bcart.TreePrior(alpha=cfg.alpha, beta=cfg.beta),
        nu=cfg.nu,
        a=cfg.a,
    )


def _minsplit(cfg: ExperimentConfig, n_train: int) -> int:
    return max(2, int(round(cfg.minsplit_fraction * n_train)))


def _fit_predict(model: str, cfg: ExperimentConfig, train_s: Dataset,
                 test_s: Dataset, test_orig: Dataset, scaler,
                 seed: int) -> tuple[float, np.ndarray, int]:
    """Fit one model on the scaled train split and return
    (features-used count, original-unit test predictions, d_used)."""
    d = train_s.d
    tc = TrainConfig(epochs=cfg.epochs, learning_rate=cfg.learning_rate,
                     seed=seed, init_scale=cfg.init_scale)
    if model == "CART":
        tree = fit_cart(train_s, _minsplit(cfg, train_s.n))
        yhat = invert_response(scaler, predict_tree_batch(tree, test_s.features))
        return float(len(used_features(tree))), yhat, d
    if model == "BCART":
        cc = _chain_config(cfg)
        leaf = bcart.LeafPrior.from_data(train_s.response, nu=cc.nu, a=cc.a)
        res = bcart.run_chain(train_s, cc.tree_prior, leaf, cc.iterations,
                              cc.burn_in, seed, thinning=cc.thinning)
        yhat = invert_response(scaler, predict_tree_batch(res.best, test_s.features))
        return float(len(used_features(res.best))), yhat, d
    if model == "ANN":
        net = train_ann(train_s, cfg.ann_k, tc)
        yhat = invert_response(scaler, forward_batch(net, test_s.features))
        return float(d), yhat, d
    if model == "BNN":
        hyper = BnnHyper(sigma_p=cfg.sigma_p, sigma_l=cfg.sigma_l,
                         evidence_updates=cfg.evidence_updates)
        bm = train_bnn_fixed_k(train_s, cfg.ann_k, hyper, tc)
        yhat = invert_response(scaler, forward_batch(bm.net, test_s.features))
        return float(d), yhat, d
    if model.startswith("BNT1@p="):
        p = float(model.split("=", 1)[1])
        hyper = BnnHyper(sigma_p=cfg.sigma_p, sigma_l=cfg.sigma_l,
                         evidence_updates=cfg.evidence_updates)
        bnt = fit_bnt1(train_s, scaler, _minsplit(cfg, train_s.n), p, hyper, tc)
        return float(bnt.d_m), predict_bnt_batch(bnt, test_orig.features), bnt.d_m
    if model == "BNT2":
        sel = SelectionConfig(chain=_chain_config(cfg),
                              permutations=cfg.permutations, level=cfg.level)
        bnt = fit_bnt2(train_s, scaler, sel, tc)
        return float(bnt.d_m), predict_bnt_batch(bnt, test_orig.features), bnt.d_m
    raise ConfigError(f"unknown model {model!r}")


def _run_cell(args) -> RepeatOutcome:
    cfg, ds, model, repeat = args
    seed = derive_seed(cfg.base_seed, repeat, model)
    out = RepeatOutcome(dataset=cfg.dataset_name, model=model, repeat=repeat,
                        seed=seed)
    try:
        pair = shuffle_split(ds, cfg.train_fraction, cfg.base_seed + repeat)
        scaler = fit_scaler(pair.train)
        train_s = apply_scaler(pair.train, scaler)
        test_s = apply_scaler(pair.test, scaler)
        used, yhat, d_used = _fit_predict(model, cfg, train_s, test_s,
                                          pair.test, scaler, seed)
        out.features_used = used
        out.metrics = compute_metrics(pair.test.response, yhat, d_used)
    except Exception as exc:  # recorded per-cell, never aborts other models
        out.error = f"{type(exc).__name__}: {exc}"
    return out


def run_experiment(cfg: ExperimentConfig, dataset: Dataset | None = None,
                   jobs: int = 1) -> list[ResultRow]:
    """Run the repeated-split protocol for every configured model.

    ``dataset`` may be passed pre-loaded (it is cleaned here either way);
    otherwise ``cfg.dataset_path`` is loaded. Deterministic given the
    config; cells are independent so ``jobs`` > 1 changes nothing but
    wall time.
    """
    if dataset is None:
        dataset = load_csv(cfg.dataset_path, response=cfg.response)
    ds = clean(dataset)
    cells = [(cfg, ds, model, repeat)
             for model in cfg.models for repeat in range(cfg.n_repeats)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_cell, cells, chunksize=1))
    else:
        outcomes = [_run_cell(c) for c in cells]

    by_model: dict[str, list[RepeatOutcome]] = {m: [] for m in cfg.models}
    for oc in outcomes:
        by_model[oc.model].append(oc)

    rows = []
    for model in cfg.models:
        outs = sorted(by_model[model], key=lambda o: o.repeat)
        good = [o for o in outs if o.error is None]
        def avg(get):
            return float(np.mean([get(o) for o in good])) if good else math.nan
        rows.append(ResultRow(
            dataset=cfg.dataset_name,
            model=model,
            n_ok=len(good),
            n_failed=len(outs) - len(good),
            features_used=avg(lambda o: o.features_used),
            mae=avg(lambda o: o.metrics.mae),
            mape=avg(lambda o: o.metrics.mape),
            rmse=avg(lambda o: o.metrics.rmse),
            r2=avg(lambda o: o.metrics.r2),
            adj_r2=avg(lambda o: o.metrics.adj_r2),
            per_repeat=outs,
        ))
    return rows


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

_TEXT_COLUMNS = ("Features used", "MAE", "MAPE", "RMSE", "R2", "adj R2")


def format_table(rows: list[ResultRow]) -> str:
    """Plain-text table mirroring the benchmark layout: dataset, model,
    then the six metric columns."""
    header = ["Dataset", "Model", *_TEXT_COLUMNS]
    body = []
    for r in rows:
        body.append([
            r.dataset, r.model,
            f"{r.features_used:.1f}",
            f"{r.mae:.3f}", f"{r.mape:.3f}", f"{r.rmse:.3f}",
            f"{r.r2:.3f}", f"{r.adj_r2:.3f}",
        ])
        if r.n_failed:
            body[-1][1] += f" [{r.n_failed} failed]"
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*header), fmt.format(*["-" * w for w in widths])]
    lines += [fmt.format(*row) for row in body]
    return "\n".join(lines) + "\n"


def emit_report(rows: list[ResultRow], fmt: str, out_dir: str) -> list[Path]:
    """Write the report files and return their paths.

    ``table`` writes report.txt; ``csv`` writes summary.csv plus the
    long-format per_repeat.csv. Floats in CSVs use shortest round-trip
    formatting, so re-parsing reproduces values exactly.
    """
    if not rows:
        raise ValueError("no result rows to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []
    if fmt == "table":
        p = out / "report.txt"
        p.write_text(format_table(rows))
        paths.append(p)
    elif fmt == "csv":
        p = out / "summary.csv"
        with p.open("w") as fh:
            fh.write("dataset,model,n_ok,n_failed,features_used,"
                     + ",".join(METRIC_FIELDS) + "\n")
            for r in rows:
                vals = [r.dataset, r.model, str(r.n_ok), str(r.n_failed),
                        repr(r.features_used)]
                vals += [repr(getattr(r, m)) for m in METRIC_FIELDS]
                fh.write(",".join(vals) + "\n")
        paths.append(p)
        q = out / "per_repeat.csv"
        with q.open("w") as fh:
            fh.write("dataset,model,repeat,seed,features_used,"
                     + ",".join(METRIC_FIELDS) + ",error\n")
            for r in rows:
                for oc in r.per_repeat:
                    vals = [oc.dataset, oc.model, str(oc.repeat), str(oc.seed)]
                    if oc.error is None:
                        vals.append(repr(oc.features_used))
                        vals += [repr(getattr(oc.metrics, m)) for m in METRIC_FIELDS]
                        vals.append("")
                    else:
                        vals += [""] * 6
                        vals.append(oc.error.replace(",", ";"))
                    fh.write(",".join(vals) + "\n")
        paths.append(q)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return paths
