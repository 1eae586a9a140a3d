import json

import numpy as np
import pytest

from rrrmt.ensembles import ModelConfig
from rrrmt.exceptions import AggregationError, ParameterError
from rrrmt.montecarlo import (ExperimentConfig, ReplicationError, ReplicationRecord,
                              ResultTable, aggregate, clt_series, esd_overlay,
                              export_results, run_experiment, run_replication,
                              tw_null_series, write_outputs)
from rrrmt.ranktests import Algorithm

NULL = ModelConfig(100, 25, 25)


def _record(rank, r=25, index=0, model=NULL):
    from dataclasses import replace
    return ReplicationRecord(replace(model, r=r), index, {Algorithm.BSW: rank}, {})


class TestConfig:
    def test_json_round_trip(self, tmp_path):
        doc = {"N": 100, "p": 25, "r": [25, 75], "rank": 1, "thetas": [0.025],
               "signal_convention": "RowColScaled", "replications": 10,
               "master_seed": 4, "algorithms": ["TW_Y", "BSW"],
               "estimators": ["FromY"], "outputs": ["rank_table", "tw_null_cdf"]}
        path = tmp_path / "c.json"
        path.write_text(json.dumps(doc))
        cfg = ExperimentConfig.from_json(path)
        assert cfg.r_values == (25, 75)
        assert cfg.model.signal_convention.value == "RowColScaled"
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_key(self):
        with pytest.raises(ParameterError):
            ExperimentConfig.from_dict({"N": 10, "p": 2, "r": 2, "colour": 1})

    def test_needs_outputs(self):
        with pytest.raises(ParameterError):
            ExperimentConfig(NULL, outputs=())

    def test_needs_replications(self):
        with pytest.raises(ParameterError):
            ExperimentConfig(NULL, replications=0)


class TestReplication:
    def test_null_ranks(self):
        rec = run_replication(ExperimentConfig(NULL), 0)
        assert set(rec.ranks) == set(Algorithm)
        assert all(isinstance(v, int) and v >= 0 for v in rec.ranks.values())

    def test_deterministic(self):
        cfg = ExperimentConfig(ModelConfig(100, 25, 75, rank=1, thetas=(0.025,)),
                               estimators=("FromY",))
        assert run_replication(cfg, 3) == run_replication(cfg, 3)

    def test_error_carries_index(self):
        # a rank-deficient model: N = p gives lam = 0, which estimation rejects
        cfg = ExperimentConfig(ModelConfig(30, 30, 40, rank=1, thetas=(1.0,)),
                               estimators=("FromA",))
        with pytest.raises(ReplicationError) as info:
            run_replication(cfg, 7)
        assert info.value.index == 7

    def test_failures_counted(self):
        cfg = ExperimentConfig(ModelConfig(30, 30, 40, rank=1, thetas=(1.0,)),
                               replications=3, estimators=("FromA",))
        result = run_experiment(cfg)
        assert result.records == [] and result.failure_count == 3


class TestAggregate:
    def test_zero(self):
        cell = aggregate([_record(0, index=k) for k in range(5)]).cells[(25, Algorithm.BSW)]
        assert (cell.mean, cell.std_err, cell.replications) == (0.0, 0.0, 5)

    def test_half(self):
        assert aggregate([_record(0), _record(1, index=1)]).mean(25, "BSW") == 0.5

    def test_order_independent(self):
        recs = [_record(k % 3, index=k) for k in range(10)]
        a, b = aggregate(recs), aggregate(recs[::-1])
        assert list(a.rows()) == list(b.rows())

    def test_mixed(self):
        other = ModelConfig(200, 25, 25)
        with pytest.raises(AggregationError):
            aggregate([_record(0), _record(0, model=other)])
        with pytest.raises(AggregationError):
            aggregate([])

    def test_parallel_equals_serial(self):
        cfg = ExperimentConfig(ModelConfig(100, 25, 25, rank=1, thetas=(0.025,),
                                           signal_convention="RowColScaled"),
                               replications=30, r_values=(25, 75))
        serial = run_experiment(cfg, threads=1)
        threaded = run_experiment(cfg, threads=4)
        assert serial.records == threaded.records
        assert list(aggregate(serial.records).rows()) == list(aggregate(threaded.records).rows())

    def test_standard_error_shrinks(self):
        se = {}
        for n in (100, 400):
            res = run_experiment(ExperimentConfig(NULL, replications=n, master_seed=9), threads=4)
            se[n] = aggregate(res.records).cells[(25, Algorithm.TW_YHAT)].std_err
        assert se[400] == pytest.approx(se[100] / 2, rel=0.5)

    @pytest.mark.slow
    def test_null_row(self):
        res = run_experiment(ExperimentConfig(NULL, replications=400, master_seed=1), threads=4)
        table = aggregate(res.records)
        for alg, expected in (("BSW", 0.12), ("TW_Y", 0.08), ("TW_Yhat", 0.10),
                              ("TW_Ahat", 0.09)):
            assert table.mean(25, alg) == pytest.approx(expected, abs=0.05)


class TestExport:
    def test_csv_schema(self, tmp_path):
        table = aggregate([_record(1), _record(0, index=1)])
        export_results(table, tmp_path / "t.csv", "CSV")
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines[0] == "r,algorithm,mean_rank,std_err,replications"
        assert lines[1].startswith("25,BSW,0.5,")

    def test_json_mirrors_csv(self, tmp_path):
        table = aggregate([_record(1), _record(0, index=1)])
        export_results(table, tmp_path / "t.json", "JSON")
        doc = json.loads((tmp_path / "t.json").read_text())
        assert doc["rows"][0]["mean_rank"] == 0.5 and doc["failures"] == 0

    def test_series_one_per_line(self, tmp_path):
        export_results(np.array([0.1, -0.2, 0.3]), tmp_path / "c.tsv", "TSV")
        assert (tmp_path / "c.tsv").read_text().split() == ["0.1", "-0.2", "0.3"]

    def test_bad_path(self, tmp_path):
        with pytest.raises(OSError, match="cannot write"):
            export_results(np.zeros(2), tmp_path / "missing" / "x.tsv", "TSV")

    def test_esd_overlay(self):
        overlay = esd_overlay(ModelConfig(100, 66, 66), 0, grid=50)
        emp, law = overlay["fitted"]
        assert emp.shape == (66, 2) and law.shape == (50, 2)
        assert emp[-1, 1] == 1.0 and np.all(np.diff(law[:, 1]) >= 0)

    def test_write_outputs(self, tmp_path):
        cfg = ExperimentConfig(ModelConfig(300, 250, 125, rank=1, thetas=(9.0,)),
                               replications=5, estimators=("FromA",),
                               outputs=("rank_table", "esd_overlay", "tw_null_cdf",
                                        "clt_histogram", "threshold_surface"))
        res = run_experiment(cfg)
        names = {p.name for p in write_outputs(res, tmp_path, ([0.2, 1.0], [0.5, 2.0]))}
        assert {"rank_table.csv", "rank_table.json", "clt_FromA.tsv",
                "threshold_surface.csv", "esd_fitted_r125_empirical.tsv",
                "tw_null_TW_Yhat_r125.tsv"} <= names
        assert clt_series(res.records).size == 5
        assert tw_null_series(res.records, "TW_Y").shape == (5, 3)
