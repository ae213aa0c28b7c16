import numpy as np
import pytest

from atomline.experiments import (ExperimentConfig, run_crb_comparison,
                                  run_phase_transition, run_scaling_check,
                                  write_phase_outputs)


class TestConfig:
    def test_json_round_trip_and_hash(self):
        cfg = ExperimentConfig(n=130, k=2, trials=3, x_grid=(1.0, 2.0),
                               gamma_grid=(1e-4,), seed=5)
        again = ExperimentConfig.from_json(cfg.to_json())
        assert again == cfg
        assert again.sha256() == cfg.sha256()

    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(trials=0)
        with pytest.raises(ValueError):
            ExperimentConfig(x_grid=())
        with pytest.raises(ValueError):
            ExperimentConfig(n=130, k=60, sep_min=3.0)
        with pytest.raises(ValueError):
            ExperimentConfig(modes=("bogus",))


class TestPhaseTransition:
    def test_noiseless_unregularized_cell_always_succeeds(self):
        cfg = ExperimentConfig(n=130, k=2, trials=4, x_grid=(0.0,),
                               gamma_grid=(0.0,), seed=3)
        res = run_phase_transition(cfg)
        assert res.rates[0, 0] == 1.0

    def test_small_grid_shape_and_records(self):
        cfg = ExperimentConfig(n=130, k=2, trials=3, x_grid=(2.0,),
                               gamma_grid=(1e-4, 1e-3), seed=3)
        res = run_phase_transition(cfg)
        assert res.rates.shape == (1, 2)
        assert len(res.records) == 6
        assert all(r.certificate_ok for r in res.records if r.success)

    def test_deterministic_csv_outputs(self, tmp_path):
        cfg = ExperimentConfig(n=130, k=2, trials=3, x_grid=(0.5, 2.0),
                               gamma_grid=(1e-4,), seed=9)
        a = tmp_path / "a"
        b = tmp_path / "b"
        write_phase_outputs(run_phase_transition(cfg), a)
        write_phase_outputs(run_phase_transition(cfg), b)
        for name in ("rates.csv", "trials.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_blind_mode_cell(self):
        cfg = ExperimentConfig(n=130, k=2, trials=3, x_grid=(2.0,),
                               gamma_grid=(1e-4,), seed=21,
                               modes=("atomic_blind",))
        res = run_phase_transition(cfg)
        assert res.mode == "atomic_blind"
        assert res.rates[0, 0] >= 2 / 3

    def test_worker_pool_matches_serial(self):
        cfg = ExperimentConfig(n=130, k=2, trials=2, x_grid=(2.0,),
                               gamma_grid=(1e-4,), seed=11)
        serial = run_phase_transition(cfg, workers=1)
        pooled = run_phase_transition(cfg, workers=2)
        assert np.array_equal(serial.rates, pooled.rates)
        for r1, r2 in zip(serial.records, pooled.records):
            assert r1.freq_err == r2.freq_err
            assert r1.coeff_err == r2.coeff_err


class TestCrbComparison:
    def test_row_structure(self):
        cfg = ExperimentConfig(n=130, k=2, trials=2, seed=13,
                               x_grid=(2.0,), gamma_grid=(1e-4,),
                               modes=("atomic_witness", "music"),
                               delta_grid=(4.0,), snr_db_grid=(30.0,))
        res = run_crb_comparison(cfg)
        assert len(res.rows) == 2
        for row in res.rows:
            assert row["crb"] > 0
            assert np.isfinite(row["mse"])

    def test_easy_cell_all_methods_near_crb(self):
        cfg = ExperimentConfig(n=130, k=2, trials=10, seed=14,
                               x_grid=(2.0,), gamma_grid=(1e-4,),
                               modes=("atomic_witness", "music", "mle"),
                               delta_grid=(4.0,), snr_db_grid=(35.0,))
        res = run_crb_comparison(cfg)
        for row in res.rows:
            assert row["mse"] <= 10.0 * row["crb"], row


class TestScaling:
    def test_requires_three_sizes(self):
        with pytest.raises(ValueError):
            run_scaling_check([130, 260], trials=1)

    def test_zero_noise_skips_fit(self):
        res = run_scaling_check([130, 260, 520], sigma=0.0, trials=2, seed=1)
        assert res.fit_skipped
        assert all(m == 0.0 for m in res.medians)

    def test_small_run_slope_reasonable(self):
        res = run_scaling_check([130, 260, 520], trials=8, sigma=1e-3, seed=7)
        assert not res.fit_skipped
        assert 0.7 <= res.slope <= 1.3
