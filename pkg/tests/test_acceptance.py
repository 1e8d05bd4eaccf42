"""Acceptance criteria. Each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or
``python3 tests/test_acceptance.py``.
"""

import sys
import time

import numpy as np
import pytest
from scipy.linalg import solve_banded

from kpi_fixtures import COM_ERR, JOINT_ERR_DEG, ZMP_ERR, make_log
from test_robot_model import fd_com_jacobian, fd_frame_jacobian
from zmpgait import ik_solver
from zmpgait.cli import main
from zmpgait.ik_solver import SolverOptions, TaskTarget, gradient, residuals, solve_frame
from zmpgait.kpi import ExecutionLog, cost_of_transport, froude, reconstruct_zmp, stability_check, tracking_rmse
from zmpgait.params import GaitParameters, load_params
from zmpgait.pattern_gen import (DOUBLE, GRAVITY, generate_footsteps, generate_references,
                                 solve_com_xy, zmp_system)
from zmpgait.robot_model import FramePose, com_jacobian, forward_kinematics, frame_jacobian, whole_body_com
from zmpgait import trajio

from conftest import random_q


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}"
                  + (f" ({detail})" if detail else ""))
        assert ok, f"criterion {number} failed: {detail}"
    return emit


def random_params(rng, kind):
    common = dict(
        ts=float(rng.choice([0.005, 0.01, 0.02])),
        z_c=float(rng.uniform(0.35, 0.6)),
        z_c_offset=float(rng.uniform(0.0, 0.03)),
        n_strides=int(rng.integers(1, 4)),
        T_stride=float(rng.uniform(3.0, 8.0)),
        T_switch=float(rng.uniform(0.6, 1.4)),
        step_width=float(rng.uniform(0.12, 0.16)),
        step_length=float(rng.uniform(0.0, 0.12)),
        step_height=float(rng.uniform(0.0, 0.04)),
        right_step_first=bool(rng.integers(0, 2)),
        type=kind,
    )
    if kind in ("slope_up", "slope_down"):
        common["theta"] = float(rng.uniform(1.0, 8.0))
    if kind == "stairs_up":
        common["stair_height"] = float(rng.uniform(0.005, 0.03))
        common["stair_length"] = float(rng.uniform(0.12, 0.24))
    return GaitParameters(**common)


def dense(lower, diag, upper):
    n = diag.size
    a = np.diag(diag)
    a[np.arange(1, n), np.arange(n - 1)] = lower[1:]
    a[np.arange(n - 1), np.arange(1, n)] = upper[:-1]
    return a


def test_criterion_01_zmp_round_trip(verdict):
    rng = np.random.default_rng(1)
    kinds = ["level", "slope_up", "slope_down", "stairs_up"]
    start = time.perf_counter()
    worst = 0.0
    for i in range(50):
        refs = generate_references(random_params(rng, kinds[i % 4]))
        zmp, flags = reconstruct_zmp(refs.com_d, GRAVITY, refs.params.ts, ground=refs.zmp_height)
        assert not flags.any()
        worst = max(worst, float(np.max(np.abs(zmp[1:-1] - refs.zmp_d[1:-1]))))
    elapsed = time.perf_counter() - start
    verdict(1, "ZMP round trip over 50 random scenarios", worst <= 1e-9 and elapsed <= 10.0,
            f"max error {worst:.2e} m, {elapsed:.2f} s")


def test_criterion_02_row_sums_and_constant_input(verdict):
    rng = np.random.default_rng(2)
    worst_row = 0.0
    exact = True
    for _ in range(50):
        n = int(rng.integers(3, 400))
        z = rng.uniform(0.2, 1.0, n)
        zdd = rng.uniform(-0.9 * GRAVITY, 3 * GRAVITY, n)
        ts = float(rng.uniform(1e-3, 0.05))
        lower, diag, upper = zmp_system(z, zdd, ts)
        worst_row = max(worst_row, float(np.max(np.abs(lower + diag + upper - 1.0))))
        p0 = rng.normal(size=2)
        com = solve_com_xy(np.tile(p0, (n, 1)), z, zdd, ts=ts)
        exact &= bool(np.all(com == p0))
    verdict(2, "row sums equal one, constant ZMP gives constant CoM", worst_row <= 1e-12 and exact,
            f"max row-sum error {worst_row:.1e}, exact constant output {exact}")


def test_criterion_03_dense_oracle(verdict):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(3, 201))
        t = np.linspace(0, 1, n)
        z = 0.45 + rng.uniform(-0.1, 0.1) * np.sin(rng.uniform(1, 10) * t)
        zdd = rng.uniform(0.5, 3.0) * np.cos(rng.uniform(1, 10) * t)
        assert np.any(zdd != 0)
        zmp = rng.normal(size=(n, 2))
        com = solve_com_xy(zmp, z, zdd, ts=0.01)
        ref = np.linalg.solve(dense(*zmp_system(z, zdd, 0.01)), zmp)
        worst = max(worst, float(np.max(np.abs(com - ref)) / np.max(np.abs(ref))))
    verdict(3, "Thomas solve matches dense solve", worst <= 1e-10, f"max relative error {worst:.1e}")


def constant_height_com(zmp, z_c, ts, g=GRAVITY):
    """Independent constant-coefficient solver (banded LAPACK)."""
    n = zmp.shape[0]
    a = -z_c / (g * ts * ts)
    b = 1.0 + 2.0 * z_c / (g * ts * ts)
    ab = np.zeros((3, n))
    ab[0, 1:] = a
    ab[1, :] = b
    ab[1, 0] = ab[1, -1] = a + b
    ab[2, :-1] = a
    return solve_banded((1, 1), ab, zmp)


def test_criterion_04_constant_height_reduction(verdict):
    rng = np.random.default_rng(4)
    worst = 0.0
    for n, z_c, ts in ((50, 0.45, 0.01), (300, 0.6, 0.005), (1201, 0.5, 0.01)):
        zmp = np.cumsum(rng.normal(scale=0.01, size=(n, 2)), axis=0)
        com = solve_com_xy(zmp, np.full(n, z_c), np.zeros(n), ts=ts)
        ref = constant_height_com(zmp, z_c, ts)
        worst = max(worst, float(np.max(np.abs(com - ref))))
    verdict(4, "constant-height reduction", worst <= 1e-12, f"max difference {worst:.1e} m")


def test_criterion_05_jacobians(verdict, model):
    rng = np.random.default_rng(5)
    worst_frame = worst_com = worst_grad = 0.0
    h = 1e-6
    for _ in range(100):
        q = random_q(model, rng)
        for frame in ("l_sole", "r_sole", "chest_point"):
            worst_frame = max(worst_frame, float(np.max(np.abs(
                frame_jacobian(model, q, frame) - fd_frame_jacobian(model, q, frame)))))
        worst_com = max(worst_com, float(np.max(np.abs(com_jacobian(model, q) - fd_com_jacobian(model, q)))))
        q_t = random_q(model, rng)
        targets = [TaskTarget.pose("l_sole", forward_kinematics(model, q_t, "l_sole")),
                   TaskTarget.pose("r_sole", forward_kinematics(model, q_t, "r_sole")),
                   TaskTarget.com(whole_body_com(model, q_t))]
        g = gradient(model, q, targets)
        num = np.empty_like(g)
        for k in range(model.n_joints):
            d = np.zeros_like(q)
            d[k] = h
            ep, em = residuals(model, q + d, targets), residuals(model, q - d, targets)
            num[k] = (0.5 * ep @ ep - 0.5 * em @ em) / (2 * h)
        worst_grad = max(worst_grad, float(np.linalg.norm(g - num) / max(1.0, np.linalg.norm(num))))
    ok = worst_frame <= 1e-5 and worst_com <= 1e-5 and worst_grad <= 1e-5
    verdict(5, "Jacobian and gradient finite-difference checks", ok,
            f"frame {worst_frame:.1e} abs, CoM {worst_com:.1e} abs, gradient {worst_grad:.1e} rel")


def test_criterion_06_ik_round_trip(verdict, model, monkeypatch):
    rng = np.random.default_rng(6)
    seen = []
    original = ik_solver.residual_jacobian

    def spy(m, q, targets, anchor=None):
        seen.append(np.array(q))
        return original(m, q, targets, anchor)

    monkeypatch.setattr(ik_solver, "residual_jacobian", spy)
    options = SolverOptions(residual_tolerance=1e-14)
    worst_pos = worst_rot = 0.0
    for _ in range(100):
        q_star = random_q(model, rng)
        q0 = model.clamp(q_star + rng.uniform(-0.1, 0.1, model.n_joints))
        targets = [TaskTarget.pose("l_sole", forward_kinematics(model, q_star, "l_sole")),
                   TaskTarget.pose("r_sole", forward_kinematics(model, q_star, "r_sole")),
                   TaskTarget.com(whole_body_com(model, q_star))]
        res = solve_frame(model, targets, q0, options)
        e = residuals(model, res.q, targets)
        worst_pos = max(worst_pos, float(np.max(np.abs(np.r_[e[0:3], e[6:9], e[12:15]]))))
        worst_rot = max(worst_rot, float(np.max(np.abs(np.r_[e[3:6], e[9:12]]))))
    in_bounds = all(np.all(q >= model.q_min) and np.all(q <= model.q_max) for q in seen)

    unreachable_ok = True
    for _ in range(10):
        q = random_q(model, rng, 0.5)
        pose = forward_kinematics(model, q, "l_sole")
        far = TaskTarget.pose("l_sole", FramePose(pose.position + rng.normal(size=3) * 5.0, pose.orientation))
        res = solve_frame(model, [far, TaskTarget.com(whole_body_com(model, q))], q)
        unreachable_ok &= (not res.converged) and bool(np.all(res.q >= model.q_min) and np.all(res.q <= model.q_max))
    ok = worst_pos <= 1e-6 and worst_rot <= 1e-6 and in_bounds and unreachable_ok
    verdict(6, "IK round trip within bounds", ok,
            f"max task error {worst_pos:.1e} m / {worst_rot:.1e} rad, {len(seen)} iterates in bounds "
            f"{in_bounds}, unreachable handled {unreachable_ok}")


def test_criterion_07_level_4s_end_to_end(verdict, tmp_path):
    start = time.perf_counter()
    codes = [main(["gen", "--params", "level_4s", "--out", str(tmp_path)]),
             main(["ik", "--params", "level_4s", "--refs", str(tmp_path / "references.csv"),
                   "--out", str(tmp_path)])]
    elapsed = time.perf_counter() - start
    _, rows, meta = trajio.read_table(tmp_path / "ik_report.csv")
    converged = meta["feasible"] == "1" and all(float(r[5]) <= 1e-4 for r in rows)
    params = load_params("level_4s")
    plan = generate_footsteps(params)
    refs = trajio.read_references(tmp_path / "references.csv", plan, params)
    margin = stability_check(refs.zmp_d, plan, refs.times).worst_margin
    swings = [p.t1 - p.t0 for p in plan.support_timeline if p.phase != DOUBLE]
    swing_ok = all(abs(s - 1.5) <= 1e-12 for s in swings)
    ok = codes == [0, 0] and converged and margin >= 0.005 and swing_ok and elapsed <= 60.0
    verdict(7, "end-to-end level walking, 4 s stride", ok,
            f"exit {codes}, {len(rows)} samples converged {converged}, worst ZMP margin {margin * 1000:.1f} mm, "
            f"swings {sorted(set(round(s, 12) for s in swings))} s, {elapsed:.1f} s")


def test_criterion_08_stairs(verdict, model):
    from zmpgait.cli import PipelineConfig, run_ik

    params = load_params("stairs_0_02m")
    assert (params.stair_height, params.stair_length, params.T_stride) == (0.02, 0.21, 8.0)
    plan = generate_footsteps(params)
    rises = []
    for side in ("left", "right"):
        z = [h.position[2] for h in plan.holds(side)]
        rises += [float(r) for r in np.diff(z)[1:-1]]
    rise_ok = all(abs(r - 0.04) <= 1e-12 for r in rises)
    _, _, result = run_ik(PipelineConfig(params_path="stairs_0_02m"))
    verdict(8, "stairs 0.02 m", rise_ok and result.feasible,
            f"interior rises {sorted(set(round(r, 12) for r in rises))} m, converged {result.feasible}, "
            f"worst task error {result.residual_norms.max():.1e}")


def test_criterion_09_froude(verdict):
    fr = froude(0.037, 0.51, 9.81)
    verdict(9, "Froude number", abs(fr - 0.0165) <= 5e-4, f"Fr = {fr:.5f}")


def test_criterion_10_kpi_formulas(verdict):
    errors = []
    n = 1001
    for ts, current, voltage, mass, dist, exact in (
            (0.01, np.ones(n), np.ones(n), 2.0, 5.0, 10.0 / (2.0 * 5.0)),
            (1e-3, np.arange(n) * 1e-3, np.ones(n), 1.0, 1.0, 0.5),
            (1e-3, 2.0 + 3.0 * np.arange(n) * 1e-3, np.full(n, 4.0), 1.5, 2.0, (8.0 + 6.0) / 3.0)):
        t = np.arange(n) * ts
        x = np.linspace(0, dist, n)
        com = np.column_stack([x, np.zeros(n), np.full(n, 0.45)])
        log = ExecutionLog(times=t, current=current[:, None], voltage=voltage[:, None],
                           q_meas=np.zeros((n, 1)), q_des=np.zeros((n, 1)), com_meas=com, com_des=com,
                           zmp_meas=com[:, :2], zmp_des=com[:, :2], robot_mass=mass, leg_length=0.51)
        errors.append(abs(cost_of_transport(log) - exact))
    rmse = tracking_rmse(make_log())
    rmse_err = max(abs(rmse["joint_rmse"] - JOINT_ERR_DEG) / JOINT_ERR_DEG,
                   abs(rmse["com_rmse"] - COM_ERR) / COM_ERR, abs(rmse["zmp_rmse"] - ZMP_ERR) / ZMP_ERR)
    ok = max(errors) <= 1e-6 and rmse_err <= 1e-13
    verdict(10, "cost of transport and RMSE fixtures", ok,
            f"max CoT error {max(errors):.1e}, RMSE relative error {rmse_err:.1e} "
            f"({rmse['joint_rmse']:.4f} deg, {rmse['com_rmse']:.4f} m, {rmse['zmp_rmse']:.4f} m)")


@pytest.mark.parametrize("name, sign", [("slope_up_7deg", 1), ("slope_down_7deg", -1)])
def test_criterion_11_slopes(verdict, model, name, sign):
    from zmpgait.cli import PipelineConfig, run_ik

    refs, _, result = run_ik(PipelineConfig(params_path=name))
    pitches = np.rad2deg([h.pitch for h in refs.plan.footholds])
    pitch_ok = bool(np.all(np.abs(pitches - sign * 7.0) <= 1e-12))
    cols = [model.joint_index["l_ankle_pitch"], model.joint_index["r_ankle_pitch"]]
    ankle = np.rad2deg(result.trajectory.q[:, cols])
    lo, hi = float(ankle.min()), float(ankle.max())
    ok = pitch_ok and lo >= -36.0 - 1e-12 and hi <= 27.0 + 1e-12 and result.feasible
    verdict(11, f"{name}: foothold pitch and ankle range", ok,
            f"pitch {sign * 7:+d} deg on all {len(pitches)} holds {pitch_ok}, ankle pitch [{lo:.2f}, {hi:.2f}] deg, "
            f"converged {result.feasible}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
