import numpy as np
import pytest

from conftest import random_q
from zmpgait.robot_model import (FramePose, ModelError, ModelParseError, com_jacobian,
                                 format_model, forward_kinematics, frame_jacobian, load_model,
                                 parse_model, save_model, whole_body_com, with_joint_limits)
from zmpgait.rotations import log_so3, orthonormality_error

ARM = """
root_link = base
link name=base mass=0 com_offset=0,0,0
link name=upper mass=1 com_offset=0.5,0,0
link name=lower mass=1 com_offset=0.5,0,0
joint name=shoulder axis=0,0,1 parent_link=base child_link=upper limit_min=-180 limit_max=180
joint name=elbow axis=0,0,1 parent_link=upper child_link=lower origin_translation=1,0,0 limit_min=-180 limit_max=180
frame name=tip parent_link=lower offset_translation=1,0,0
"""

SINGLE = """
root_link = base
link name=base mass=1 com_offset=0,0,0
link name=arm mass=1 com_offset=0,0,0
joint name=j axis=0,0,1 parent_link=base child_link=arm limit_min=0 limit_max=10
frame name=p parent_link=arm offset_translation=1,0,0
"""


def fd_frame_jacobian(model, q, frame, anchor=None, h=1e-6):
    jac = np.empty((6, model.n_joints))
    for k in range(model.n_joints):
        dq = np.zeros(model.n_joints)
        dq[k] = h
        a = forward_kinematics(model, q + dq, frame, anchor)
        b = forward_kinematics(model, q - dq, frame, anchor)
        jac[:3, k] = (a.position - b.position) / (2 * h)
        jac[3:, k] = log_so3(a.orientation @ b.orientation.T) / (2 * h)
    return jac


def fd_com_jacobian(model, q, anchor=None, h=1e-6):
    cols = []
    for k in range(model.n_joints):
        dq = np.zeros(model.n_joints)
        dq[k] = h
        cols.append((whole_body_com(model, q + dq, anchor) - whole_body_com(model, q - dq, anchor)) / (2 * h))
    return np.column_stack(cols)


def test_bundled_model_dimensions(model):
    assert model.n_joints == 15
    assert model.total_mass == pytest.approx(26.4, abs=1e-12)
    i = model.joint_index["l_knee"]
    assert model.q_min[i] == pytest.approx(np.deg2rad(-100))
    assert model.q_max[i] == 0.0
    hip = forward_kinematics(model, np.zeros(15), "l_hip_1").position
    sole = forward_kinematics(model, np.zeros(15), "l_sole").position
    np.testing.assert_allclose(hip - sole, [0, 0, 0.51], atol=1e-15)


def test_single_joint_model():
    m = parse_model(SINGLE)
    assert m.n_joints == 1
    np.testing.assert_allclose(m.q_max, [np.deg2rad(10)])
    np.testing.assert_allclose(frame_jacobian(m, [0.0], "p")[:, 0], [0, 1, 0, 0, 0, 1], atol=1e-15)


def test_two_link_arm_forward_kinematics():
    m = parse_model(ARM)
    tip = forward_kinematics(m, [np.pi / 2, 0.0], "tip").position
    np.testing.assert_allclose(tip, [0, 2, 0], atol=1e-15)
    tip = forward_kinematics(m, [0.0, np.pi / 2], "tip").position
    np.testing.assert_allclose(tip, [1, 1, 0], atol=1e-15)


def test_zero_configuration_is_static_chain(model):
    pose = forward_kinematics(model, np.zeros(15), "chest_point")
    np.testing.assert_allclose(pose.orientation, np.eye(3), atol=1e-15)


def test_com_two_body_mean():
    m = parse_model(ARM)
    # bodies at x = 0.5 and 1.5 -> mean 1.0
    np.testing.assert_allclose(whole_body_com(m, [0.0, 0.0]), [1.0, 0, 0], atol=1e-15)


def test_com_jacobian_two_body_formula():
    m = parse_model(ARM)
    q = np.array([0.3, -0.4])
    half = forward_kinematics(m, q, "lower")
    # elbow column: only the lower body moves, weight m2/(m1+m2) = 1/2
    point = half.position + half.orientation @ np.array([0.5, 0, 0])
    expected = 0.5 * np.cross([0, 0, 1], point - half.position)
    np.testing.assert_allclose(com_jacobian(m, q)[:, 1], expected, atol=1e-14)


def test_com_jacobian_zero_when_mass_only_in_root():
    text = ARM.replace("name=base mass=0", "name=base mass=3").replace(
        "name=upper mass=1", "name=upper mass=0").replace("name=lower mass=1", "name=lower mass=0")
    m = parse_model(text)
    np.testing.assert_array_equal(com_jacobian(m, [0.2, 0.1]), np.zeros((3, 2)))


def test_com_brute_force(model):
    q = np.zeros(15)
    total = np.zeros(3)
    for link in model.links:
        pose = forward_kinematics(model, q, link.name)
        total += link.mass * (pose.position + pose.orientation @ np.array(link.com_offset))
    np.testing.assert_allclose(whole_body_com(model, q), total / 26.4, atol=1e-15)


def test_orthonormal_for_random_q(model, rng):
    for _ in range(1000):
        q = rng.uniform(-np.pi, np.pi, 15)
        assert orthonormality_error(forward_kinematics(model, q, "r_sole").orientation) <= 1e-9


@pytest.mark.parametrize("frame", ["l_sole", "r_sole", "chest_point"])
def test_frame_jacobian_finite_difference(model, rng, frame):
    for _ in range(20):
        q = random_q(model, rng)
        np.testing.assert_allclose(frame_jacobian(model, q, frame), fd_frame_jacobian(model, q, frame),
                                   atol=1e-5)


def test_anchored_jacobians_finite_difference(model, rng):
    anchor = ("l_sole", FramePose(np.array([0.1, 0.07, 0.0]), np.eye(3)))
    for _ in range(10):
        q = random_q(model, rng)
        np.testing.assert_allclose(frame_jacobian(model, q, "r_sole", anchor),
                                   fd_frame_jacobian(model, q, "r_sole", anchor), atol=1e-5)
        np.testing.assert_allclose(com_jacobian(model, q, anchor), fd_com_jacobian(model, q, anchor),
                                   atol=1e-5)
        pinned = forward_kinematics(model, q, "l_sole", anchor)
        np.testing.assert_allclose(pinned.position, anchor[1].position, atol=1e-14)


def test_off_path_columns_are_zero(model, rng):
    jac = frame_jacobian(model, random_q(model, rng), "l_sole")
    for name, i in model.joint_index.items():
        if not name.startswith("l_"):
            assert np.all(jac[:, i] == 0.0)


def test_com_translation_equivariant(model, rng):
    q = random_q(model, rng)
    shift = np.array([0.3, -1.2, 0.7])
    base = whole_body_com(model, q)
    moved = whole_body_com(model, q, ("root_link", FramePose(shift, np.eye(3))))
    np.testing.assert_allclose(moved, base + shift, atol=1e-15)


def test_roundtrip_serialization(model, tmp_path):
    path = tmp_path / "m.model"
    save_model(model, path)
    assert load_model(path) == model
    narrowed = with_joint_limits(model, "l_knee", np.deg2rad(-5), 0.0)
    assert parse_model(format_model(narrowed)) == narrowed


@pytest.mark.parametrize("text, message", [
    (SINGLE.replace("child_link=arm", "child_link=base"), "cycle"),
    (SINGLE.replace("axis=0,0,1", "axis=0,0,2"), "axis"),
    (SINGLE.replace("limit_min=0 limit_max=10", "limit_min=10 limit_max=0"), "limit"),
    (SINGLE.replace("mass=1 com_offset=0,0,0\nlink name=arm mass=1", "mass=-1 com_offset=0,0,0\nlink name=arm mass=1"), "mass"),
])
def test_validation_errors_name_the_problem(text, message):
    with pytest.raises(ModelError, match=message):
        parse_model(text)


def test_parse_error_reports_line():
    with pytest.raises(ModelParseError, match="line"):
        parse_model("root_link = base\nbogus name=x\n")


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_model(tmp_path / "nope.model")


def test_unknown_frame(model):
    with pytest.raises((KeyError, ValueError)):
        forward_kinematics(model, np.zeros(15), "no_such_frame")
