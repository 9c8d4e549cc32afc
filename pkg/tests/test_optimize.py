import math
from dataclasses import replace

import numpy as np
import pytest

from ringqed.analytic import IsolationPoint, isolation_conditions, optimal_coupling
from ringqed.errors import ContinuationError, ValidationError
from ringqed.model import DriveSpec, SystemParams, transmission
from ringqed.optimize import (
    CONTOUR_COLUMNS,
    CONTRAST_FLOOR,
    RIDGE_THRESHOLD,
    ZERO_TB_ACCEPT,
    cavity_dip_detuning,
    contrast_db,
    maximize_contrast,
    save_contour,
    save_zero_trace,
    sweep_grid,
    trace_zero_tb_line,
)
from ringqed.tableio import read_table

IDEAL = SystemParams(g0=20.0, kappa_i=5.0, kappa_ex=6.0)
NONIDEAL = SystemParams(g0=20.0, kappa_i=5.0, kappa_ex=7.0, h=20.0, p=0.8)


def backward_at(params, delta12, delta_c):
    return transmission(
        replace(params, delta12=float(delta12)), DriveSpec("backward", float(delta_c))
    )


# --- contrast ---


def test_contrast_db_values_and_floor():
    assert contrast_db(1.0, 1.0) == 0.0
    assert math.isclose(contrast_db(1.0, 1e-6), 60.0)
    # a vanishing backward transmission is clamped at the floor
    assert math.isclose(contrast_db(1.0, 0.0), 120.0)
    assert math.isclose(contrast_db(1.0, 0.0, floor=1e-6), 60.0)


# --- backward dip location ---


def test_dip_matches_closed_form_operating_point():
    d12, dc = isolation_conditions(20.0, 1.0, 5.0, 6.0)
    params = replace(IDEAL, delta12=d12)
    dip = cavity_dip_detuning(params)
    assert abs(dip - dc) < 1e-3
    assert backward_at(IDEAL, d12, dip) < 1e-12


def test_dip_of_bare_cavity_sits_at_resonance():
    bare = SystemParams(g0=0.0, kappa_i=5.0, kappa_ex=6.0)
    assert abs(cavity_dip_detuning(bare)) < 1e-6


def test_dip_regression_with_backscattering():
    params = replace(NONIDEAL, delta12=30.0)
    assert abs(cavity_dip_detuning(params) - (-12.247764284722717)) < 1e-6


# --- zero-backward-transmission tracing ---


def test_trace_follows_closed_form_conditions():
    points = trace_zero_tb_line(IDEAL, (5.5, 8.0), 6)
    assert len(points) == 6
    assert [p.kappa_ex for p in points] == sorted(p.kappa_ex for p in points)
    for point in points:
        d12, dc = isolation_conditions(20.0, 1.0, 5.0, point.kappa_ex)
        assert abs(point.delta12 - d12) < 1e-4
        assert abs(point.delta_c - dc) < 1e-4
        assert 0.0 < point.t_fwd_predicted <= 1.0
        params = replace(IDEAL, kappa_ex=point.kappa_ex)
        assert backward_at(params, point.delta12, point.delta_c) <= ZERO_TB_ACCEPT


def test_trace_input_validation():
    with pytest.raises(ValidationError, match="lo <= hi"):
        trace_zero_tb_line(IDEAL, (8.0, 6.0), 3)
    with pytest.raises(ValidationError, match="kappa_ex > kappa_i"):
        trace_zero_tb_line(IDEAL, (4.0, 8.0), 3)
    with pytest.raises(ValidationError, match="n_points"):
        trace_zero_tb_line(IDEAL, (6.0, 8.0), 0)


def test_trace_nonideal_from_seed_is_honest():
    seed = IsolationPoint(
        kappa_ex=6.9, delta12=28.2, delta_c=-12.0, t_fwd_predicted=0.79
    )
    points = trace_zero_tb_line(NONIDEAL, (7.0, 9.0), 5, seed=seed)
    assert len(points) == 5
    for point in points:
        params = replace(NONIDEAL, kappa_ex=point.kappa_ex)
        assert backward_at(params, point.delta12, point.delta_c) <= ZERO_TB_ACCEPT


def test_trace_reports_unreachable_couplings():
    # just above critical coupling the backscattered system admits no
    # zero-backward point, so tracing fails and names the samples
    with pytest.raises(ContinuationError) as info:
        trace_zero_tb_line(NONIDEAL, (5.1, 6.5), 3)
    assert info.value.failed_kappa_ex == pytest.approx([5.1, 5.8, 6.5])
    assert info.value.points == []


def test_trace_is_deterministic():
    first = trace_zero_tb_line(NONIDEAL, (7.0, 8.0), 3)
    second = trace_zero_tb_line(NONIDEAL, (7.0, 8.0), 3)
    assert first == second


# --- contrast maximization ---


def test_maximize_contrast_with_fixed_splitting():
    result = maximize_contrast(replace(NONIDEAL, drive_amp=2.0), fixed_delta12=30.0)
    assert result.kappa_ex == 7.0
    assert result.delta12 == 30.0
    assert abs(result.delta_c - (-12.247764284722717)) < 1e-6
    assert abs(result.t_fwd - 0.78698860728823661) < 1e-9
    assert abs(result.t_bwd - 7.8654881906371264e-05) < 1e-12
    assert abs(result.contrast_db - 40.002427620733911) < 1e-6
    assert result.iterations == 0
    assert not result.converged


def test_maximize_contrast_zero_splitting_is_reciprocal():
    result = maximize_contrast(NONIDEAL, fixed_delta12=0.0)
    assert result.t_fwd == result.t_bwd
    assert result.contrast_db == 0.0
    assert not result.converged


def test_maximize_contrast_requires_emitter():
    with pytest.raises(ValidationError, match="g0"):
        maximize_contrast(SystemParams(g0=0.0, kappa_i=5.0, kappa_ex=6.0))


def test_maximize_contrast_recovers_closed_form_optimum():
    reference = optimal_coupling(20.0, 1.0, 5.0)
    result = maximize_contrast(IDEAL)
    assert result.converged
    assert abs(result.kappa_ex - reference.kappa_ex) < 1e-2
    assert abs(result.delta12 - reference.delta12) < 0.1
    assert abs(result.delta_c - reference.delta_c) < 0.1
    assert abs(result.t_fwd - reference.t_fwd_predicted) < 1e-5
    assert result.t_bwd <= 1e-10


def test_maximize_contrast_nonideal_regression():
    result = maximize_contrast(NONIDEAL)
    assert result.converged
    assert abs(result.kappa_ex - 6.897819551367728) < 1e-4
    assert abs(result.delta12 - 28.233927970780336) < 1e-3
    assert abs(result.delta_c - (-12.027429340503707)) < 1e-3
    assert abs(result.t_fwd - 0.791357046906854) < 1e-6
    assert result.contrast_db > 100.0
    # the reported point must reproduce when evaluated from scratch
    params = replace(NONIDEAL, kappa_ex=result.kappa_ex)
    assert backward_at(params, result.delta12, result.delta_c) <= 1e-10
    t_fwd = transmission(
        replace(params, delta12=result.delta12), DriveSpec("forward", result.delta_c)
    )
    assert abs(t_fwd - result.t_fwd) < 1e-12


# --- grid sweeps ---


def test_sweep_grid_nodes_and_trace():
    kex_axis = np.array([7.0, 8.0, 9.0])
    d12_axis = np.array([0.0, 15.0, 25.0, 35.0])
    contour = sweep_grid(NONIDEAL, kex_axis, d12_axis)
    assert contour.t_fwd.shape == (3, 4)
    assert np.all(np.isfinite(contour.contrast_db))
    # the dip detuning follows the negative-branch convention
    assert np.all(contour.delta_c <= 1e-6)
    # contrast and saturation flags are consistent with the node values
    for i in range(3):
        for j in range(4):
            expected = contrast_db(contour.t_fwd[i, j], contour.t_bwd[i, j])
            assert abs(contour.contrast_db[i, j] - expected) < 1e-9
            assert contour.saturated[i, j] == (contour.t_bwd[i, j] < CONTRAST_FLOOR)
    # transmission is reciprocal at zero splitting: contrast vanishes there
    assert np.all(np.abs(contour.contrast_db[:, 0]) < 1e-8)
    # refined ridge rows re-evaluate honestly below the threshold
    assert contour.zero_tb_rows.shape[1] == 7
    assert len(contour.zero_tb_rows) >= 1
    for row in contour.zero_tb_rows:
        kex, d12, dc, tf, tb, cdb, saturated = row
        assert kex in kex_axis
        assert d12_axis[0] <= d12 <= d12_axis[-1]
        params = replace(NONIDEAL, kappa_ex=kex)
        assert backward_at(params, d12, dc) < RIDGE_THRESHOLD
        assert abs(tb - backward_at(params, d12, dc)) < 1e-12
        assert abs(cdb - contrast_db(tf, tb)) < 1e-9
        assert bool(saturated) == (tb < CONTRAST_FLOOR)
    assert np.array_equal(contour.zero_tb_trace, contour.zero_tb_rows[:, :2])


def test_sweep_grid_axis_validation():
    with pytest.raises(ValidationError, match="monotone"):
        sweep_grid(NONIDEAL, np.array([7.0, 7.0, 9.0]), np.array([10.0]))
    with pytest.raises(ValidationError, match="delta12"):
        sweep_grid(NONIDEAL, np.array([7.0]), np.array([]))
    with pytest.raises(ValidationError, match="kappa_ex"):
        sweep_grid(NONIDEAL, np.array([[7.0, 8.0]]), np.array([10.0]))


def test_save_contour_and_trace_round_trip(tmp_path):
    contour = sweep_grid(NONIDEAL, np.array([7.0, 8.0]), np.array([20.0, 30.0]))
    grid_path = tmp_path / "grid.csv"
    trace_path = tmp_path / "trace.csv"
    save_contour(grid_path, contour)
    save_zero_trace(trace_path, contour)

    grid = read_table(grid_path, required_columns=CONTOUR_COLUMNS)
    assert list(grid) == list(CONTOUR_COLUMNS)
    # row-major over (kappa_ex, delta12)
    assert grid["kappa_ex"].tolist() == [7.0, 7.0, 8.0, 8.0]
    assert grid["delta12"].tolist() == [20.0, 30.0, 20.0, 30.0]
    assert np.array_equal(grid["t_fwd"], contour.t_fwd.ravel())

    trace = read_table(trace_path, required_columns=CONTOUR_COLUMNS)
    stacked = np.column_stack([trace[name] for name in CONTOUR_COLUMNS])
    assert np.array_equal(stacked, contour.zero_tb_rows)
