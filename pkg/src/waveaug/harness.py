"""Experiment orchestration: configs, multi-seed runs, ledgers and reports.

A run trains one fresh DLinear model per (fraction, horizon, method, seed)
and appends a JSON line to ``ledger.jsonl`` as soon as it finishes.  Rerunning
the same spec skips every key already in the ledger, so an interrupted run
picks up where it stopped.  Wall-clock times go to ``timings.jsonl`` instead,
which keeps the ledger byte-identical across reruns.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from waveaug.augment import FREQ_METHODS, METHODS, WAVE_METHODS, AugmentationPolicy
from waveaug.data import (
    Dataset,
    ForecastTask,
    downsample_train,
    fit_normalizer,
    load_csv,
    make_windows,
    split_622,
    synthetic_seasonal,
)
from waveaug.model import TrainConfig, evaluate, init_params, train

__all__ = [
    "ConfigError",
    "ExperimentSpec",
    "ResultRecord",
    "Aggregate",
    "OUTPUT_ENV",
    "DATA_ENV",
    "shipped_configs",
    "parse_config",
    "load_dataset",
    "run_experiment",
    "read_ledger",
    "aggregate",
    "coldstart_points",
    "emit_report",
]

OUTPUT_ENV = "WAVEAUG_OUTPUT_DIR"
DATA_ENV = "WAVEAUG_DATA_DIR"
LEDGER_NAME = "ledger.jsonl"
TIMINGS_NAME = "timings.jsonl"

_TRAIN_KEYS = {"epochs", "patience", "batch_size", "learning_rate", "lr_schedule", "kernel"}
_TOP_KEYS = {"dataset", "lookback", "horizons", "methods", "n_repeats", "fractions", "train", "policies", "output_dir"}
_DATASET_KEYS = {"name", "path", "synthetic"}
_SYNTHETIC_KEYS = {"timesteps", "channels", "seed", "noise"}
_POLICY_KEYS = {
    "wave_mask": {"wavelet", "level", "rates", "sampling_rate"},
    "wave_mix": {"wavelet", "level", "rates", "sampling_rate"},
    "freq_mask": {"rate", "sampling_rate"},
    "freq_mix": {"rate", "sampling_rate"},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    dataset_name: str
    lookback: int
    horizons: list[int]
    methods: list[str]
    policies: dict[int, dict[str, AugmentationPolicy]]
    train: TrainConfig
    n_repeats: int = 10
    fractions: list[float] = field(default_factory=lambda: [1.0])
    dataset_path: Path | None = None
    synthetic: dict | None = None
    output_dir: Path | None = None

    def policy(self, horizon: int, method: str) -> AugmentationPolicy:
        if method == "none":
            return AugmentationPolicy()
        return self.policies[horizon][method]

    @property
    def seeds(self) -> range:
        return range(self.n_repeats)


@dataclass
class ResultRecord:
    dataset: str
    horizon: int
    method: str
    seed: int
    mse: float
    mae: float
    best_epoch: int
    wall_time: float = 0.0
    fraction: float = 1.0

    @property
    def key(self) -> tuple:
        return (self.dataset, self.fraction, self.horizon, self.method, self.seed)

    def ledger_line(self) -> str:
        doc = asdict(self)
        del doc["wall_time"]
        return json.dumps(doc, sort_keys=True)


@dataclass
class Aggregate:
    dataset: str
    horizon: int
    method: str
    fraction: float
    n: int
    mse_mean: float
    mse_std: float
    mae_mean: float
    mae_std: float
    rank: int = 0

    @property
    def flag(self) -> str:
        return {1: "best", 2: "second"}.get(self.rank, "")


# --------------------------------------------------------------------- config


def shipped_configs() -> list[str]:
    root = resources.files("waveaug") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def _resolve_config(source) -> tuple[dict, Path | None]:
    if isinstance(source, dict):
        return source, None
    path = Path(source)
    if path.exists():
        text = path.read_text(encoding="utf-8")
        base = path.resolve().parent
    else:
        name = str(source)[:-5] if str(source).endswith(".yaml") else str(source)
        res = resources.files("waveaug") / "configs" / f"{name}.yaml"
        if not res.is_file():
            raise ConfigError(f"config {source!r} is neither a file nor a shipped config {shipped_configs()}")
        text = res.read_text(encoding="utf-8")
        base = None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: malformed YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    return doc, base


def _check_keys(where: str, got: dict, allowed: set, required: set = frozenset()):
    unknown = set(got) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = set(required) - set(got)
    if missing:
        raise ConfigError(f"{where}: missing required key(s) {sorted(missing)}")


def _as_int(where: str, v) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}: expected an integer, got {v!r}")
    return v


def _as_float(where: str, v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    return float(v)


def _parse_policy(where: str, method: str, doc) -> AugmentationPolicy:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: policy must be a mapping")
    if method in WAVE_METHODS:
        _check_keys(where, doc, _POLICY_KEYS[method], {"wavelet", "level", "rates"})
        rates = doc["rates"]
        if not isinstance(rates, list):
            raise ConfigError(f"{where}.rates: expected a list")
        kwargs = dict(
            wavelet=str(doc["wavelet"]),
            level=_as_int(f"{where}.level", doc["level"]),
            rates=tuple(_as_float(f"{where}.rates", r) for r in rates),
        )
    else:
        _check_keys(where, doc, _POLICY_KEYS[method], {"rate"})
        kwargs = dict(rate=_as_float(f"{where}.rate", doc["rate"]))
    kwargs["sampling_rate"] = _as_float(f"{where}.sampling_rate", doc.get("sampling_rate", 1.0))
    try:
        return AugmentationPolicy(method, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(source) -> ExperimentSpec:
    """Build an :class:`ExperimentSpec` from a YAML file, shipped config name or dict.

    See ``docs/config.md`` for the grammar.  Unknown keys are errors.
    """
    doc, base = _resolve_config(source)
    _check_keys("config", doc, _TOP_KEYS, {"dataset", "horizons"})

    ds = doc["dataset"]
    if not isinstance(ds, dict):
        raise ConfigError("dataset: expected a mapping")
    _check_keys("dataset", ds, _DATASET_KEYS, {"name"})
    if ("path" in ds) == ("synthetic" in ds):
        raise ConfigError("dataset: give exactly one of 'path' or 'synthetic'")
    name = str(ds["name"])
    path = synthetic = None
    if "path" in ds:
        path = Path(str(ds["path"]))
        if not path.is_absolute() and base is not None and (base / path).exists():
            path = base / path
    else:
        synthetic = ds["synthetic"] or {}
        if not isinstance(synthetic, dict):
            raise ConfigError("dataset.synthetic: expected a mapping")
        _check_keys("dataset.synthetic", synthetic, _SYNTHETIC_KEYS)

    horizons = doc["horizons"]
    if not isinstance(horizons, list) or not horizons:
        raise ConfigError("horizons: expected a non-empty list")
    horizons = [_as_int("horizons", h) for h in horizons]
    if any(h < 1 for h in horizons):
        raise ConfigError("horizons: every horizon must be >= 1")
    lookback = _as_int("lookback", doc.get("lookback", ForecastTask.standard(name, 1).lookback))

    methods = doc.get("methods", ["none"])
    if not isinstance(methods, list) or not methods:
        raise ConfigError("methods: expected a non-empty list")
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"methods: unknown method {m!r}; expected one of {list(METHODS)}")
    if len(set(methods)) != len(methods):
        raise ConfigError("methods: duplicate entries")

    raw_policies = doc.get("policies") or {}
    if not isinstance(raw_policies, dict):
        raise ConfigError("policies: expected a mapping of horizon -> method -> policy")
    policies: dict[int, dict[str, AugmentationPolicy]] = {}
    default = raw_policies.get("default") or {}
    for key in raw_policies:
        if key != "default" and (isinstance(key, bool) or not isinstance(key, int)):
            raise ConfigError(f"policies: key {key!r} must be a horizon or 'default'")
        if key != "default" and key not in horizons:
            raise ConfigError(f"policies: horizon {key} is not in horizons")
    for h in horizons:
        per = dict(default)
        per.update(raw_policies.get(h) or {})
        policies[h] = {}
        for m, pdoc in per.items():
            if m not in _POLICY_KEYS:
                raise ConfigError(f"policies.{h}: unknown method {m!r}")
            policies[h][m] = _parse_policy(f"policies.{h}.{m}", m, pdoc)
        for m in methods:
            if m != "none" and m not in policies[h]:
                raise ConfigError(f"policies: no {m} policy for horizon {h}")

    tdoc = doc.get("train") or {}
    if not isinstance(tdoc, dict):
        raise ConfigError("train: expected a mapping")
    _check_keys("train", tdoc, _TRAIN_KEYS)
    tkw = {}
    for k, v in tdoc.items():
        if k == "learning_rate":
            tkw[k] = _as_float(f"train.{k}", v)
        elif k == "lr_schedule":
            tkw[k] = str(v)
        else:
            tkw[k] = _as_int(f"train.{k}", v)
    try:
        tcfg = TrainConfig(**tkw)
    except ValueError as exc:
        raise ConfigError(f"train: {exc}") from None

    n_repeats = _as_int("n_repeats", doc.get("n_repeats", 10))
    if n_repeats < 1:
        raise ConfigError("n_repeats must be >= 1")
    fractions = doc.get("fractions", [1.0])
    if not isinstance(fractions, list) or not fractions:
        raise ConfigError("fractions: expected a non-empty list")
    fractions = [_as_float("fractions", f) for f in fractions]
    if any(not 0 < f <= 1 for f in fractions):
        raise ConfigError("fractions: every entry must lie in (0, 1]")

    out = doc.get("output_dir")
    return ExperimentSpec(
        dataset_name=name,
        lookback=lookback,
        horizons=horizons,
        methods=list(methods),
        policies=policies,
        train=tcfg,
        n_repeats=n_repeats,
        fractions=fractions,
        dataset_path=path,
        synthetic=synthetic,
        output_dir=Path(out) if out else None,
    )


# ------------------------------------------------------------------------ run


def load_dataset(spec: ExperimentSpec) -> Dataset:
    if spec.synthetic is not None:
        return synthetic_seasonal(name=spec.dataset_name, **spec.synthetic)
    path = spec.dataset_path
    if not path.is_absolute() and not path.exists() and os.environ.get(DATA_ENV):
        path = Path(os.environ[DATA_ENV]) / path
    if not path.exists():
        raise FileNotFoundError(
            f"dataset file {spec.dataset_path} not found (set {DATA_ENV} to its directory)"
        )
    return load_csv(path, name=spec.dataset_name)


def _output_dir(spec: ExperimentSpec, override=None) -> Path:
    if override is not None:
        return Path(override)
    if os.environ.get(OUTPUT_ENV):
        return Path(os.environ[OUTPUT_ENV])
    if spec.output_dir is not None:
        return spec.output_dir
    return Path("runs") / spec.dataset_name


def read_ledger(path) -> list[ResultRecord]:
    path = Path(path)
    if not path.exists():
        return []
    names = {f.name for f in fields(ResultRecord)}
    out = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError:
            # a crash mid-write leaves at most one torn line; it is recomputed
            continue
        unknown = set(doc) - names
        if unknown:
            raise ValueError(f"{path}:{lineno}: unknown ledger fields {sorted(unknown)}")
        out.append(ResultRecord(**doc))
    return out


def _drop_torn_tail(path: Path):
    # a crash mid-append leaves a line without its newline; cut it so the next append starts clean
    if not path.exists():
        return
    raw = path.read_bytes()
    if raw and not raw.endswith(b"\n"):
        with path.open("r+b") as fh:
            fh.truncate(raw.rfind(b"\n") + 1)


class _Prepared:
    """Normalized windows for one (fraction, horizon) pair."""

    def __init__(self, ds: Dataset, spec: ExperimentSpec, horizon: int, fraction: float):
        task = ForecastTask(spec.lookback, horizon, spec.dataset_name)
        tr, va, te = split_622(ds, task.lookback)
        # scaling is fit on the full train split so the test scale is the same for every fraction
        norm = fit_normalizer(ds, tr)
        values = norm.apply(ds.values)
        if fraction < 1.0:
            tr = downsample_train(tr, fraction, task)
        self.train = make_windows(values, tr, task)
        self.val = make_windows(values, va, task)
        self.test = make_windows(values, te, task)
        self.task = task


def _run_one(prep: _Prepared, spec: ExperimentSpec, horizon: int, method: str, seed: int,
             fraction: float) -> ResultRecord:
    t0 = time.perf_counter()
    init_rng, train_rng = np.random.default_rng(seed).spawn(2)
    cfg = TrainConfig(**{**{f.name: getattr(spec.train, f.name) for f in fields(TrainConfig)},
                         "seed": seed, "policy": spec.policy(horizon, method)})
    params = init_params(prep.task.lookback, horizon, init_rng, kernel=cfg.kernel)
    result = train(params, prep.train, prep.val, cfg, train_rng)
    mse, mae = evaluate(result.params, prep.test)
    return ResultRecord(spec.dataset_name, horizon, method, seed, mse, mae, result.best_epoch,
                        time.perf_counter() - t0, fraction)


def run_experiment(spec: ExperimentSpec, output_dir=None, fractions=None, log=None) -> list[ResultRecord]:
    """Train and evaluate every (fraction, horizon, method, seed) of ``spec``.

    Each finished record is appended to the ledger immediately.  Keys already
    present in the ledger are not recomputed.  Returns the records of this
    spec in canonical order.
    """
    out = _output_dir(spec, output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ledger_path = out / LEDGER_NAME
    _drop_torn_tail(ledger_path)
    done = {r.key: r for r in read_ledger(ledger_path)}
    fractions = list(fractions) if fractions is not None else list(spec.fractions)
    ds = None
    records = []
    for fraction in fractions:
        for horizon in spec.horizons:
            prep = None
            for method in spec.methods:
                for seed in spec.seeds:
                    key = (spec.dataset_name, fraction, horizon, method, seed)
                    if key in done:
                        records.append(done[key])
                        continue
                    if ds is None:
                        ds = load_dataset(spec)
                    try:
                        if prep is None:
                            prep = _Prepared(ds, spec, horizon, fraction)
                        rec = _run_one(prep, spec, horizon, method, seed, fraction)
                    except Exception as exc:
                        raise RuntimeError(
                            f"run failed for fraction={fraction} horizon={horizon} method={method} seed={seed}: {exc}"
                        ) from exc
                    with ledger_path.open("a", encoding="utf-8") as fh:
                        fh.write(rec.ledger_line() + "\n")
                    with (out / TIMINGS_NAME).open("a", encoding="utf-8") as fh:
                        fh.write(json.dumps({"key": list(rec.key), "wall_time": rec.wall_time}) + "\n")
                    if log is not None:
                        log(f"{spec.dataset_name} frac={fraction:g} h={horizon} {method} seed={seed}: "
                            f"mse={rec.mse:.4f} mae={rec.mae:.4f} best_epoch={rec.best_epoch} "
                            f"({rec.wall_time:.1f}s)")
                    done[key] = rec
                    records.append(rec)
    return records


# --------------------------------------------------------------------- report

_METHOD_ORDER = {m: i for i, m in enumerate(METHODS)}


def _mean_std(values: list[float]) -> tuple[float, float]:
    if min(values) == max(values):
        return float(values[0]), 0.0
    mean = math.fsum(values) / len(values)
    if len(values) < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var)


def aggregate(records) -> list[Aggregate]:
    """Mean and sample std of MSE/MAE per (dataset, fraction, horizon, method).

    Within each (dataset, fraction, horizon) the methods are ranked by mean
    MSE, 1 = best.
    """
    groups: dict[tuple, list[ResultRecord]] = {}
    for r in records:
        groups.setdefault((r.dataset, r.fraction, r.horizon, r.method), []).append(r)
    if not groups:
        raise ValueError("no records to aggregate")
    aggs = []
    for (dataset, fraction, horizon, method), rs in groups.items():
        rs = sorted(rs, key=lambda r: r.seed)
        mse_m, mse_s = _mean_std([r.mse for r in rs])
        mae_m, mae_s = _mean_std([r.mae for r in rs])
        aggs.append(Aggregate(dataset, horizon, method, fraction, len(rs), mse_m, mse_s, mae_m, mae_s))
    aggs.sort(key=lambda a: (a.dataset, -a.fraction, a.horizon, _METHOD_ORDER.get(a.method, 99), a.method))
    rows: dict[tuple, list[Aggregate]] = {}
    for a in aggs:
        rows.setdefault((a.dataset, a.fraction, a.horizon), []).append(a)
    for row in rows.values():
        for rank, a in enumerate(sorted(row, key=lambda a: (a.mse_mean, _METHOD_ORDER.get(a.method, 99))), 1):
            a.rank = rank
    return aggs


def coldstart_points(aggs: list[Aggregate]) -> list[dict]:
    """Best mean MSE per family (wave vs freq) for every fraction."""
    rows: dict[tuple, dict] = {}
    for a in aggs:
        row = rows.setdefault(
            (a.dataset, a.horizon, a.fraction),
            {"dataset": a.dataset, "horizon": a.horizon, "fraction": a.fraction,
             "wave_best_mse": None, "wave_best_method": "", "freq_best_mse": None,
             "freq_best_method": "", "none_mse": None},
        )
        if a.method == "none":
            row["none_mse"] = a.mse_mean
        for family, members in (("wave", WAVE_METHODS), ("freq", FREQ_METHODS)):
            if a.method in members:
                cur = row[f"{family}_best_mse"]
                if cur is None or a.mse_mean < cur:
                    row[f"{family}_best_mse"] = a.mse_mean
                    row[f"{family}_best_method"] = a.method
    return [rows[k] for k in sorted(rows, key=lambda k: (k[0], k[1], k[2]))]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _write_csv(path: Path, header: list[str], rows: list[list]):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def emit_report(aggs: list[Aggregate], output_dir, fmt: str = "csv") -> list[Path]:
    """Write ``metrics.csv`` and, when several fractions are present, ``coldstart.csv``."""
    if not aggs:
        raise ValueError("nothing to report: aggregate list is empty")
    if fmt != "csv":
        raise ValueError(f"unsupported report format {fmt!r}")
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create report directory {out}: {exc}") from None
    paths = [out / "metrics.csv"]
    _write_csv(
        paths[0],
        ["dataset", "horizon", "method", "mse_mean", "mse_std", "mae_mean", "mae_std", "rank", "fraction"],
        [[a.dataset, a.horizon, a.method, a.mse_mean, a.mse_std, a.mae_mean, a.mae_std, a.rank, a.fraction]
         for a in aggs],
    )
    if len({a.fraction for a in aggs}) > 1:
        pts = coldstart_points(aggs)
        cols = ["dataset", "horizon", "fraction", "wave_best_mse", "wave_best_method",
                "freq_best_mse", "freq_best_method", "none_mse"]
        paths.append(out / "coldstart.csv")
        _write_csv(paths[1], cols, [[p[c] for c in cols] for p in pts])
    return paths
