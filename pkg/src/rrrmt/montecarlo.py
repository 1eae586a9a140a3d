"""Replicated experiments: simulation, rank selection, estimation, export.

Replication ``k`` of an experiment draws its data from
``make_rng(master_seed, k)``, so records do not depend on which worker
computed them or in what order.  Aggregation sorts by ``(r, algorithm)``
before reducing, making serial and threaded runs identical.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
import csv
import json
import math
from pathlib import Path

import numpy as np

from .ensembles import ModelConfig, SignalConvention, simulate_model
from .estimation import (CorrectionKind, clt_parameters, correction_from_A,
                         empirical_correction, estimate_thetas_from_A,
                         estimate_thetas_from_Y, export_threshold_surface,
                         studentized_error, threshold_A, threshold_surface)
from .exceptions import AggregationError, ParameterError, RRRError
from .ranktests import (Algorithm, all_statistics, select_rank_bsw,
                        select_rank_tw)
from .regression import fit, ols_coefficients, singular_values
from .spectra import AbLaw, MpLaw, esd_from_values, law_table
from .tracywidom import tw_cdf

DEFAULT_REPLICATIONS = 100
ALGORITHM_ORDER = (Algorithm.BSW, Algorithm.TW_Y, Algorithm.TW_YHAT,
                   Algorithm.TW_AHAT)


class Output(str, Enum):
    RANK_TABLE = "rank_table"
    ESD_OVERLAY = "esd_overlay"
    TW_NULL_CDF = "tw_null_cdf"
    CLT_HISTOGRAM = "clt_histogram"
    THRESHOLD_SURFACE = "threshold_surface"


class ExportFormat(str, Enum):
    CSV = "CSV"
    JSON = "JSON"
    TSV = "TSV"


class ReplicationError(RRRError):
    """A module error raised inside one replication."""

    def __init__(self, index, cause):
        super().__init__(f"replication {index}: {type(cause).__name__}: {cause}")
        self.index = index
        self.cause = cause


_CONFIG_KEYS = {"N", "p", "r", "rank", "thetas", "signal_convention",
                "replications", "master_seed", "algorithms", "estimators",
                "outputs", "significance", "noise_sd"}


@dataclass(frozen=True)
class ExperimentConfig:
    """A model plus what to compute on each of ``replications`` draws.

    ``r_values`` lists the response dimensions of a table (one row each);
    it defaults to ``(model.r,)``.
    """

    model: ModelConfig
    replications: int = DEFAULT_REPLICATIONS
    master_seed: int = 0
    algorithms: tuple = ALGORITHM_ORDER
    estimators: tuple = ()
    outputs: tuple = (Output.RANK_TABLE,)
    significance: float = 0.10
    r_values: tuple = ()

    def __post_init__(self):
        if int(self.replications) < 1:
            raise ParameterError("replications must be at least 1")
        if int(self.master_seed) < 0:
            raise ParameterError("master_seed must be nonnegative")
        if not self.outputs:
            raise ParameterError("request at least one output")
        object.__setattr__(self, "replications", int(self.replications))
        object.__setattr__(self, "master_seed", int(self.master_seed))
        object.__setattr__(self, "algorithms",
                           tuple(Algorithm(a) for a in self.algorithms))
        object.__setattr__(self, "estimators",
                           tuple(CorrectionKind(e) for e in self.estimators))
        object.__setattr__(self, "outputs", tuple(Output(o) for o in self.outputs))
        r_values = tuple(int(r) for r in self.r_values) or (self.model.r,)
        object.__setattr__(self, "r_values", r_values)
        for r in r_values:
            self.model_for(r)  # validates every row

    def model_for(self, r):
        return replace(self.model, r=int(r))

    @classmethod
    def from_dict(cls, doc):
        unknown = set(doc) - _CONFIG_KEYS
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        missing = {"N", "p", "r"} - set(doc)
        if missing:
            raise ParameterError(f"missing config keys: {sorted(missing)}")
        r_values = doc["r"] if isinstance(doc["r"], list) else [doc["r"]]
        model = ModelConfig(
            N=int(doc["N"]), p=int(doc["p"]), r=int(r_values[0]),
            rank=int(doc.get("rank", 0)), thetas=tuple(doc.get("thetas", ())),
            signal_convention=doc.get("signal_convention",
                                      SignalConvention.UNIT_VECTORS.value),
            noise_sd=float(doc.get("noise_sd", 1.0)))
        kwargs = {k: doc[k] for k in ("replications", "master_seed",
                                      "significance") if k in doc}
        for k in ("algorithms", "estimators", "outputs"):
            if k in doc:
                kwargs[k] = tuple(doc[k])
        return cls(model=model, r_values=tuple(r_values), **kwargs)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        doc = self.model.to_dict()
        doc["r"] = list(self.r_values) if len(self.r_values) > 1 else self.r_values[0]
        doc.update(replications=self.replications, master_seed=self.master_seed,
                   algorithms=[a.value for a in self.algorithms],
                   estimators=[e.value for e in self.estimators],
                   outputs=[o.value for o in self.outputs],
                   significance=self.significance)
        return doc


@dataclass(frozen=True)
class ReplicationRecord:
    """Everything computed on one simulated dataset."""

    model: ModelConfig
    index: int
    ranks: dict
    top_statistics: dict
    estimates: dict = field(default_factory=dict)
    studentized: dict = field(default_factory=dict)

    @property
    def r(self):
        return self.model.r


def _estimate(kind, model, ds, A_hat, Y_hat):
    """Records of one estimator and the correction behind them."""
    s = max(model.rank, 1)
    lam, beta = model.lam, model.beta
    if kind is CorrectionKind.FROM_Y:
        recs = estimate_thetas_from_Y(Y_hat, model.r, s, beta, model.mu)
        return recs, None
    if kind is CorrectionKind.FROM_A:
        correction = correction_from_A(lam, beta)
    else:
        noise = ols_coefficients(ds.X, ds.U)
        correction = empirical_correction(singular_values(noise), model.p, model.r)
    recs = estimate_thetas_from_A(A_hat, s, correction, lam, beta, N=model.N,
                                  std_error=False)
    return recs, correction


def run_replication(config, replication_index, r=None):
    """Simulate and analyse replication ``replication_index`` (row ``r``)."""
    model = config.model_for(config.r_values[0] if r is None else r)
    try:
        ds = simulate_model(model, config.master_seed, replication_index)
        A_hat, Y_hat = fit(ds.X, ds.Y)
        stats = all_statistics(ds.Y, Y_hat, A_hat, model.N, model.p, model.r)
        cap = min(model.p, model.r)
        ranks, tops = {}, {}
        for alg in config.algorithms:
            if alg is Algorithm.BSW:
                lsq = stats[Algorithm.TW_YHAT].raw_squared_singulars
                ranks[alg] = select_rank_bsw(lsq, model.p, model.r).selected_rank
            else:
                ranks[alg] = select_rank_tw(stats[alg], config.significance,
                                            max_rank=cap).selected_rank
                tops[alg] = float(stats[alg].values[0])
        estimates, studentized = {}, {}
        for kind in config.estimators:
            recs, correction = _estimate(kind, model, ds, A_hat, Y_hat)
            estimates[kind] = tuple(rec.theta_hat for rec in recs)
            theta = model.thetas[0] if model.rank == 1 else None
            # the limit theorem concerns D(sigma_hat) itself, so the TW
            # detection guard is not applied to the studentized error
            sigma1 = recs[0].sigma_hat
            if (theta is not None and correction is not None and model.lam > 0
                    and sigma1 > correction.domain_lower
                    and theta > threshold_A(model.lam, model.beta)):
                omega = clt_parameters(theta, model.lam, model.beta).omega
                studentized[kind] = studentized_error(correction(sigma1), theta,
                                                      model.r, omega)
    except (RRRError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise ReplicationError(replication_index, exc) from exc
    return ReplicationRecord(model, int(replication_index), ranks, tops,
                             estimates, studentized)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list
    failures: list  # (r, index, message)

    @property
    def failure_count(self):
        return len(self.failures)


def run_experiment(config, threads=1):
    """All replications of every row of ``config``; failures are excluded and counted."""
    tasks = [(r, k) for r in config.r_values for k in range(config.replications)]

    def work(task):
        try:
            return run_replication(config, task[1], task[0]), None
        except ReplicationError as exc:
            return None, (task[0], task[1], str(exc))

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            outcomes = list(pool.map(work, tasks))
    else:
        outcomes = [work(t) for t in tasks]
    records = [rec for rec, _ in outcomes if rec is not None]
    failures = [err for _, err in outcomes if err is not None]
    return ExperimentResult(config, records, failures)


@dataclass(frozen=True)
class Cell:
    mean: float
    std_err: float
    replications: int


@dataclass
class ResultTable:
    """Mean selected rank per ``(r, algorithm)``."""

    cells: dict
    failures: int = 0

    def rows(self):
        for (r, alg) in sorted(self.cells, key=lambda k: (k[0], ALGORITHM_ORDER.index(k[1]))):
            cell = self.cells[(r, alg)]
            yield r, alg.value, cell.mean, cell.std_err, cell.replications

    def mean(self, r, algorithm):
        return self.cells[(int(r), Algorithm(algorithm))].mean


def _homogeneity_key(model):
    doc = model.to_dict()
    doc.pop("r")
    return json.dumps(doc, sort_keys=True)


def aggregate(records, failures=0):
    """Mean and standard error of the selected rank per cell, order independent."""
    records = list(records)
    if not records:
        raise AggregationError("nothing to aggregate")
    keys = {_homogeneity_key(rec.model) for rec in records}
    if len(keys) > 1:
        raise AggregationError("records come from different model configurations")
    algs = {frozenset(rec.ranks) for rec in records}
    if len(algs) > 1:
        raise AggregationError("records ran different algorithms")
    buckets = {}
    for rec in sorted(records, key=lambda rec: (rec.r, rec.index)):
        for alg, rank in rec.ranks.items():
            buckets.setdefault((rec.r, alg), []).append(rank)
    cells = {}
    for key, ranks in buckets.items():
        arr = np.asarray(ranks, dtype=float)
        se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
        cells[key] = Cell(float(arr.mean()), se, int(arr.size))
    return ResultTable(cells, int(failures))


# Plot-ready series -----------------------------------------------------------

def esd_overlay(model, seed=0, stream=None, grid=400):
    """Empirical and limiting CDFs of the fitted and coefficient spectra.

    Returns ``{"fitted": (emp, law), "coefficients": (emp, law)}`` where each
    ``emp`` / ``law`` is a two-column ``(x, cdf)`` array.  The fitted spectrum
    is that of ``Y_hat' Y_hat / r`` against Marchenko-Pastur(p/r); the
    coefficient spectrum that of ``A_hat' A_hat`` against the ``(lam, beta)``
    law.
    """
    ds = simulate_model(model, seed, stream)
    A_hat, Y_hat = fit(ds.X, ds.Y)
    spectra = {
        "fitted": (np.linalg.eigvalsh(Y_hat.T @ Y_hat / model.r), MpLaw(model.beta)),
        "coefficients": (np.linalg.eigvalsh(A_hat.T @ A_hat),
                         AbLaw(model.lam, model.beta)),
    }
    out = {}
    for name, (eig, law) in spectra.items():
        esd = esd_from_values(np.maximum(eig, 0.0))
        emp = np.column_stack([esd.points, np.arange(1, esd.n + 1) / esd.n])
        x, _, cdf = law_table(law, grid, upper=1.5 * esd.points[-1])
        out[name] = (emp, np.column_stack([x, cdf]))
    return out


def tw_null_series(records, algorithm):
    """``(x, empirical cdf, TW1 cdf)`` of the top statistic across records."""
    alg = Algorithm(algorithm)
    values = np.sort([rec.top_statistics[alg] for rec in records])
    n = values.size
    return np.column_stack([values, np.arange(1, n + 1) / n, tw_cdf(values)])


def clt_series(records, estimator=CorrectionKind.FROM_A):
    kind = CorrectionKind(estimator)
    return np.asarray([rec.studentized[kind] for rec in records
                       if kind in rec.studentized])


# Export ------------------------------------------------------------------------

_TABLE_HEADER = ("r", "algorithm", "mean_rank", "std_err", "replications")


def export_results(table_or_series, path, format=ExportFormat.CSV, header=None):
    """Write a :class:`ResultTable` (CSV/JSON/TSV) or an array series.

    Series are written one row per line; a 1-D series gives one value per
    line.  ``header`` names the series columns.
    """
    fmt = ExportFormat(format.upper() if isinstance(format, str) else format)
    path = Path(path)
    try:
        if isinstance(table_or_series, ResultTable):
            rows = list(table_or_series.rows())
            if fmt is ExportFormat.JSON:
                doc = {"rows": [dict(zip(_TABLE_HEADER, row)) for row in rows],
                       "failures": table_or_series.failures}
                path.write_text(json.dumps(doc, indent=2) + "\n")
                return
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh, delimiter="," if fmt is ExportFormat.CSV else "\t",
                                    lineterminator="\n")
                writer.writerow(_TABLE_HEADER)
                for r, alg, mean, se, n in rows:
                    writer.writerow([r, alg, f"{mean:.6g}", f"{se:.6g}", n])
            return
        arr = np.asarray(table_or_series, dtype=float)
        if fmt is ExportFormat.JSON:
            path.write_text(json.dumps({"columns": header, "data": arr.tolist()}) + "\n")
            return
        delim = "," if fmt is ExportFormat.CSV else "\t"
        names = "" if header is None else delim.join(header)
        np.savetxt(path, arr, delimiter=delim, header=names, comments="", fmt="%.10g")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_outputs(result, out_dir, threshold_grid=None):
    """Export every artifact requested by ``result.config``; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    written = []
    if Output.RANK_TABLE in cfg.outputs and result.records:
        table = aggregate(result.records, result.failure_count)
        for fmt, ext in ((ExportFormat.CSV, "csv"), (ExportFormat.JSON, "json")):
            export_results(table, out_dir / f"rank_table.{ext}", fmt)
            written.append(out_dir / f"rank_table.{ext}")
    if Output.ESD_OVERLAY in cfg.outputs:
        for r in cfg.r_values:
            overlay = esd_overlay(cfg.model_for(r), cfg.master_seed, 0)
            for name, (emp, law) in overlay.items():
                for part, arr in (("empirical", emp), ("law", law)):
                    path = out_dir / f"esd_{name}_r{r}_{part}.tsv"
                    export_results(arr, path, ExportFormat.TSV, header=("x", "cdf"))
                    written.append(path)
    if Output.TW_NULL_CDF in cfg.outputs and result.records:
        for r in cfg.r_values:
            recs = [rec for rec in result.records if rec.r == r]
            for alg in cfg.algorithms:
                if alg is Algorithm.BSW:
                    continue
                path = out_dir / f"tw_null_{alg.value}_r{r}.tsv"
                export_results(tw_null_series(recs, alg), path, ExportFormat.TSV,
                               header=("statistic", "empirical_cdf", "tw1_cdf"))
                written.append(path)
    if Output.CLT_HISTOGRAM in cfg.outputs:
        for kind in cfg.estimators:
            series = clt_series(result.records, kind)
            if series.size:
                path = out_dir / f"clt_{kind.value}.tsv"
                export_results(series, path, ExportFormat.TSV)
                written.append(path)
    if Output.THRESHOLD_SURFACE in cfg.outputs:
        lams, betas = threshold_grid or (np.linspace(0.05, 2, 40), np.linspace(0.1, 3, 40))
        path = out_dir / "threshold_surface.csv"
        export_threshold_surface(threshold_surface(lams, betas), path)
        written.append(path)
    return written
