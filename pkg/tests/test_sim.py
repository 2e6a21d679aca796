"""Monte Carlo engine: determinism under batching/threading, early-stop
semantics, metric accounting, and persistence formats."""

import json

import numpy as np
import pytest

from tbmpsk.bounds import linear_to_db, min_snr_for_rate, tbm_rate
from tbmpsk.sim import (
    SimConfig,
    _snr_key,
    config_from_dict,
    config_to_dict,
    min_snr_sweep,
    missed_users,
    result_csv,
    run,
    run_point,
    sweep_csv,
    sweep_table,
    trial_rng,
    write_manifest,
)

BASE = dict(dims=(4, 2, 2), modulation_order=4, snrs_db=(2.0,), trials=60,
            seed=9, case=1, decoder="bp", stop_errors=0)


class TestConfig:
    def test_round_trip_through_dict(self):
        cfg = SimConfig(**BASE)
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_dims_canonical_in_shape(self):
        cfg = SimConfig(**{**BASE, "dims": (2, 4, 2)})
        assert cfg.shape.dims == (4, 2, 2)

    def test_rejects_unknown_scenario(self):
        with pytest.raises(ValueError):
            SimConfig(**{**BASE, "scenario": "fading"})

    def test_rejects_bp_on_case2(self):
        with pytest.raises(ValueError):
            SimConfig(**{**BASE, "case": 2})

    def test_rejects_multiuser_case3(self):
        with pytest.raises(ValueError):
            SimConfig(**{**BASE, "scenario": "simo-mac", "case": 3})

    def test_rejects_negative_seed(self):
        with pytest.raises(ValueError):
            SimConfig(**{**BASE, "seed": -1})


class TestSubstreams:
    def test_snr_key_distinguishes_values(self):
        keys = {_snr_key(s) for s in (0.0, 0.25, 0.5, 2.0, -2.0, 15.0)}
        assert len(keys) == 6

    def test_trial_rng_reproducible(self):
        a = trial_rng(9, 2.0, 17).integers(0, 1000, 5)
        b = trial_rng(9, 2.0, 17).integers(0, 1000, 5)
        assert np.array_equal(a, b)

    def test_trial_rng_varies_by_index(self):
        a = trial_rng(9, 2.0, 0).integers(0, 1000, 8)
        b = trial_rng(9, 2.0, 1).integers(0, 1000, 8)
        assert not np.array_equal(a, b)


class TestDeterminism:
    def test_repeat_run_identical(self):
        cfg = SimConfig(**BASE)
        a = result_csv(run(cfg))
        b = result_csv(run(cfg))
        assert a == b

    def test_batch_size_invariance(self):
        p1 = run_point(SimConfig(**{**BASE, "batch_size": 7}), 2.0)
        p2 = run_point(SimConfig(**{**BASE, "batch_size": 32}), 2.0)
        assert p1 == p2

    def test_thread_invariance(self):
        p1 = run_point(SimConfig(**{**BASE, "threads": 1}), 2.0)
        p2 = run_point(SimConfig(**{**BASE, "threads": 2, "batch_size": 16}), 2.0)
        assert p1 == p2

    def test_snr_grid_order_irrelevant(self):
        cfg_a = SimConfig(**{**BASE, "snrs_db": (0.0, 2.0)})
        cfg_b = SimConfig(**{**BASE, "snrs_db": (2.0, 0.0)})
        pts_a = {p.snr_db: p for p in run(cfg_a).points}
        pts_b = {p.snr_db: p for p in run(cfg_b).points}
        assert pts_a == pts_b


class TestEarlyStop:
    def test_stops_at_exact_error_budget(self):
        full = run_point(SimConfig(**{**BASE, "snrs_db": (-2.0,), "trials": 200}), -2.0)
        assert full.errors > 12  # enough activity at this SNR for the test
        stopped = run_point(
            SimConfig(**{**BASE, "snrs_db": (-2.0,), "trials": 200, "stop_errors": 8}), -2.0
        )
        assert stopped.errors == 8
        assert stopped.trials < full.trials

    def test_truncation_is_prefix_of_full_run(self):
        # per-trial substreams make the stopped run a literal prefix
        cfg_full = SimConfig(**{**BASE, "snrs_db": (-2.0,), "trials": 200})
        cfg_stop = SimConfig(**{**BASE, "snrs_db": (-2.0,), "trials": 200, "stop_errors": 8})
        from tbmpsk.sim import _collect_outcomes

        a = _collect_outcomes(cfg_full, -2.0)
        b = _collect_outcomes(cfg_stop, -2.0)
        assert np.array_equal(a[: b.size], b)

    def test_budget_never_reached_runs_all(self):
        p = run_point(SimConfig(**{**BASE, "snrs_db": (20.0,), "stop_errors": 5}), 20.0)
        assert p.trials == 60
        assert p.errors == 0


class TestMetrics:
    def test_per_accounting(self):
        p = run_point(SimConfig(**BASE), 2.0)
        assert p.value == p.errors / p.trials
        expect_se = np.sqrt(p.value * (1 - p.value) / p.trials)
        assert abs(p.stderr - expect_se) < 1e-15

    def test_missed_users_multiset(self):
        sent = np.array([[0, 1], [2, 3], [0, 1]])
        assert missed_users(sent, [np.array([0, 1]), np.array([2, 3]), np.array([0, 1])]) == 0
        # a duplicate word must be matched twice to count twice
        assert missed_users(sent, [np.array([0, 1]), np.array([2, 3])]) == 1
        assert missed_users(sent, [np.array([0, 1]), None, np.array([9, 9])]) == 2
        assert missed_users(sent, [None, None, None]) == 3

    def test_pupe_uses_user_units(self):
        cfg = SimConfig(dims=(4, 3, 2), modulation_order=4, snrs_db=(15.0,), trials=10,
                        seed=3, scenario="simo-mac", num_users=2, num_antennas=4,
                        stop_errors=0)
        p = run_point(cfg, 15.0)
        assert p.value == p.errors / (10 * 2)


class TestPersistence:
    def test_csv_header_and_rows(self):
        cfg = SimConfig(**{**BASE, "snrs_db": (0.0, 2.0), "trials": 20})
        text = result_csv(run(cfg))
        lines = text.splitlines()
        assert lines[0] == "scenario,shape,M,case,decoder,snr_db,trials,errors,metric,stderr,seed"
        assert len(lines) == 3
        cells = lines[1].split(",")
        assert cells[0] == "awgn" and cells[1] == "4x2x2" and cells[4] == "bp"
        float(cells[8]), float(cells[9])  # metric and stderr parse

    def test_manifest_sidecar(self, tmp_path):
        cfg = SimConfig(**{**BASE, "trials": 5})
        out = tmp_path / "r.csv"
        out.write_text(result_csv(run(cfg)))
        mpath = write_manifest(str(out), "simulate", config_to_dict(cfg))
        doc = json.loads(open(mpath).read())
        assert doc["command"] == "simulate"
        assert config_from_dict(doc["config"]) == cfg
        assert doc["output"] == str(out)


class TestSweep:
    def _cfg(self):
        return SimConfig(**{**BASE, "snrs_db": (-2.0, 6.0), "trials": 150,
                            "stop_errors": 0, "batch_size": 75})

    def test_min_snr_on_grid_and_minimal(self):
        cfg = self._cfg()
        target = 0.05
        got = min_snr_sweep(cfg, target, -2.0, 6.0, resolution_db=1.0)
        assert got is not None
        steps = round((got - (-2.0)) / 1.0)
        assert abs(got - (-2.0 + steps * 1.0)) < 1e-12  # lands on the grid
        assert run_point(cfg, got).value <= target
        if got > -2.0:
            assert run_point(cfg, got - 1.0).value > target

    def test_unreachable_target_is_none(self):
        cfg = SimConfig(**{**BASE, "snrs_db": (-12.0, -9.0), "trials": 80})
        assert min_snr_sweep(cfg, 1e-4, -12.0, -9.0, resolution_db=1.0) is None

    def test_table_bound_column_matches_bounds_module(self):
        cfg = self._cfg()
        rows = sweep_table([cfg], 0.05, -2.0, 6.0, resolution_db=2.0)
        assert len(rows) == 1
        row = rows[0]
        want = linear_to_db(min_snr_for_rate(cfg.shape.blocklength, 0.05,
                                             tbm_rate(cfg.shape, cfg.case)))
        assert abs(row.bound_snr_db - want) < 1e-12
        assert row.rate == tbm_rate(cfg.shape, cfg.case)

    def test_sweep_csv_format(self):
        cfg = self._cfg()
        rows = sweep_table([cfg], 0.05, -2.0, 6.0, resolution_db=2.0)
        lines = sweep_csv(rows).splitlines()
        assert lines[0] == "shape,M,case,rate,target_per,min_snr_db,bound_snr_db,trials,seed"
        assert len(lines) == 2
