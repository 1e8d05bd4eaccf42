"""Kinematic tree of a legged robot: file format, forward kinematics,
frame and CoM Jacobians.

The model file is line oriented. Blank lines and ``#`` comments are
ignored; every other line is either ``root_link = <name>`` or a record::

    link  name=<str> mass=<kg> com_offset=<x,y,z>
    joint name=<str> type=revolute axis=<x,y,z> parent_link=<str>
          child_link=<str> origin_translation=<x,y,z>
          origin_rotation=<roll,pitch,yaw in deg | 9 row-major entries>
          limit_min=<deg> limit_max=<deg>
    frame name=<str> parent_link=<str> offset_translation=<x,y,z>
          offset_rotation=<roll,pitch,yaw in deg | 9 row-major entries>

(each record on a single line). Joint limits are stored in radians
once loaded.

Poses can be anchored: passing ``anchor=(frame, FramePose)`` treats that
frame as fixed in the world at the given pose instead of the root link.
The walking pipeline uses this to pin the stance sole.
"""

from dataclasses import dataclass, field
from functools import cached_property
import logging
from pathlib import Path

import numpy as np

from zmpgait import kernels
from zmpgait.rotations import check_rotation, rpy_to_matrix, skew

LOG = logging.getLogger(__name__)

AXIS_NORM_TOL = 1e-9
ROTATION_TOL = 1e-9


class ModelError(ValueError):
    """Invalid robot description."""


class ModelParseError(ModelError):
    """Malformed model file."""


@dataclass(frozen=True)
class Link:
    name: str
    mass: float
    com_offset: tuple = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Joint:
    name: str
    axis: tuple
    parent_link: str
    child_link: str
    limit_min: float
    limit_max: float
    origin_translation: tuple = (0.0, 0.0, 0.0)
    origin_rotation: tuple = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    type: str = "revolute"


@dataclass(frozen=True)
class NamedFrame:
    name: str
    parent_link: str
    offset_translation: tuple = (0.0, 0.0, 0.0)
    offset_rotation: tuple = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))


@dataclass(frozen=True)
class FramePose:
    position: np.ndarray
    orientation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def as_matrix(self):
        t = np.eye(4)
        t[:3, :3] = self.orientation
        t[:3, 3] = self.position
        return t


def _vec3(v):
    return tuple(float(x) for x in v)


def _mat3(m):
    return tuple(tuple(float(x) for x in row) for row in np.asarray(m, dtype=float))


@dataclass(frozen=True, eq=True)
class RobotModel:
    """Validated, immutable kinematic tree.

    Joint order defines the layout of joint configuration vectors.
    """

    links: tuple
    joints: tuple
    root_link: str
    named_frames: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "named_frames", tuple(self.named_frames))
        _validate(self)

    # -- bookkeeping ---------------------------------------------------

    @property
    def n_joints(self):
        return len(self.joints)

    @property
    def joint_names(self):
        return [j.name for j in self.joints]

    @property
    def total_mass(self):
        return float(sum(link.mass for link in self.links))

    @cached_property
    def joint_index(self):
        return {j.name: i for i, j in enumerate(self.joints)}

    @cached_property
    def link_index(self):
        return {link.name: i for i, link in enumerate(self.links)}

    @cached_property
    def q_min(self):
        return _frozen(np.array([j.limit_min for j in self.joints]))

    @cached_property
    def q_max(self):
        return _frozen(np.array([j.limit_max for j in self.joints]))

    @cached_property
    def _arrays(self):
        return _build_arrays(self)

    def frame_names(self):
        return [f.name for f in self.named_frames] + [link.name for link in self.links]

    def has_frame(self, name):
        return name in self._arrays["frames"]

    def check_q(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape != (self.n_joints,):
            raise ValueError(
                f"joint configuration has shape {q.shape}, model has {self.n_joints} joints")
        return q

    def clamp(self, q):
        return np.minimum(np.maximum(q, self.q_min), self.q_max)

    def state(self, q, anchor=None):
        """Evaluate all link poses at ``q``; see :class:`KinematicState`."""
        return KinematicState(self, q, anchor)


def _frozen(a):
    a.setflags(write=False)
    return a


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------

def _validate(model):
    names = [link.name for link in model.links]
    if len(set(names)) != len(names):
        raise ModelError("duplicate link names")
    links = set(names)
    if model.root_link not in links:
        raise ModelError(f"root_link '{model.root_link}' is not a declared link")

    for link in model.links:
        if not np.isfinite(link.mass) or link.mass < 0.0:
            raise ModelError(f"link '{link.name}': mass must be >= 0")
        if len(link.com_offset) != 3:
            raise ModelError(f"link '{link.name}': com_offset must have 3 entries")
    if model.total_mass <= 0.0:
        raise ModelError("total mass must be positive")

    parent_of = {}
    jnames = set()
    for joint in model.joints:
        if joint.name in jnames:
            raise ModelError(f"duplicate joint name '{joint.name}'")
        jnames.add(joint.name)
        if joint.type != "revolute":
            raise ModelError(f"joint '{joint.name}': unsupported type '{joint.type}'")
        for role in ("parent_link", "child_link"):
            if getattr(joint, role) not in links:
                raise ModelError(
                    f"joint '{joint.name}': {role} '{getattr(joint, role)}' is not a declared link")
        if joint.parent_link == joint.child_link:
            raise ModelError(f"joint '{joint.name}': cycle (parent_link equals child_link)")
        if joint.child_link == model.root_link:
            raise ModelError(f"joint '{joint.name}': cycle (root link '{model.root_link}' has a parent)")
        if joint.child_link in parent_of:
            raise ModelError(
                f"joint '{joint.name}': link '{joint.child_link}' already has parent joint "
                f"'{parent_of[joint.child_link].name}'")
        parent_of[joint.child_link] = joint
        norm = np.linalg.norm(joint.axis)
        if len(joint.axis) != 3 or abs(norm - 1.0) > AXIS_NORM_TOL:
            raise ModelError(f"joint '{joint.name}': axis is not a unit vector (norm {norm:.12g})")
        if not joint.limit_min < joint.limit_max:
            raise ModelError(f"joint '{joint.name}': inverted limits (limit_min >= limit_max)")
        _check_frame_rotation(joint.origin_rotation, f"joint '{joint.name}': origin_rotation")

    # every link must reach the root by following parent joints
    for name in names:
        seen = set()
        cur = name
        while cur != model.root_link:
            if cur in seen:
                raise ModelError(f"joint '{parent_of[cur].name}': cycle in the joint graph")
            seen.add(cur)
            if cur not in parent_of:
                raise ModelError(f"link '{cur}' is not connected to root link '{model.root_link}'")
            cur = parent_of[cur].parent_link

    fnames = set()
    for frame in model.named_frames:
        if frame.name in fnames or frame.name in links:
            raise ModelError(f"frame '{frame.name}': name already used")
        fnames.add(frame.name)
        if frame.parent_link not in links:
            raise ModelError(f"frame '{frame.name}': parent_link '{frame.parent_link}' is not a declared link")
        _check_frame_rotation(frame.offset_rotation, f"frame '{frame.name}': offset_rotation")


def _check_frame_rotation(r, what):
    r = np.asarray(r, dtype=float)
    try:
        check_rotation(r, what, tol=ROTATION_TOL)
    except ValueError as exc:
        raise ModelError(str(exc)) from None
    if np.linalg.det(r) < 0.0:
        raise ModelError(f"{what} has determinant -1")


def _build_arrays(model):
    n = model.n_joints
    jidx = model.joint_index
    lidx = model.link_index
    child_joint = {j.child_link: i for i, j in enumerate(model.joints)}

    parent = np.full(n, -1, dtype=np.int64)
    for i, joint in enumerate(model.joints):
        parent[i] = child_joint.get(joint.parent_link, -1)

    order = []
    depth = {}

    def joint_depth(i):
        if i not in depth:
            depth[i] = 0 if parent[i] < 0 else joint_depth(parent[i]) + 1
        return depth[i]

    order = np.array(sorted(range(n), key=lambda i: (joint_depth(i), i)), dtype=np.int64)

    n_links = len(model.links)
    link_joint = np.full(n_links, -1, dtype=np.int64)
    for link in model.links:
        link_joint[lidx[link.name]] = child_joint.get(link.name, -1)

    ancestors = np.zeros((n_links, n), dtype=bool)
    for l in range(n_links):
        j = link_joint[l]
        while j >= 0:
            ancestors[l, j] = True
            j = parent[j]

    frames = {}
    for link in model.links:
        frames[link.name] = (lidx[link.name], np.eye(3), np.zeros(3))
    for frame in model.named_frames:
        frames[frame.name] = (lidx[frame.parent_link],
                              np.array(frame.offset_rotation, dtype=float),
                              np.array(frame.offset_translation, dtype=float))

    masses = np.array([link.mass for link in model.links])
    arrays = {
        "parent": parent,
        "order": order,
        "origin_rot": np.ascontiguousarray([j.origin_rotation for j in model.joints], dtype=float).reshape(n, 3, 3),
        "origin_pos": np.ascontiguousarray([j.origin_translation for j in model.joints], dtype=float).reshape(n, 3),
        "axis": np.ascontiguousarray([j.axis for j in model.joints], dtype=float).reshape(n, 3),
        "link_joint": link_joint,
        "ancestors": ancestors,
        "frames": frames,
        "masses": masses,
        "com_offsets": np.array([link.com_offset for link in model.links], dtype=float).reshape(n_links, 3),
        # subtree mass and the joint-to-subtree map used by the CoM Jacobian
        "subtree_mass": ancestors.T.astype(float) @ masses,
    }
    for v in arrays.values():
        if isinstance(v, np.ndarray):
            v.setflags(write=False)
    return arrays


# --------------------------------------------------------------------------
# Kinematics
# --------------------------------------------------------------------------

class KinematicState:
    """All link poses of a model at one configuration.

    Without an anchor the root link sits at the world origin. With
    ``anchor=(frame_name, FramePose)`` the named frame is placed at the
    given world pose and everything else follows; Jacobians then describe
    motion relative to that fixed frame.
    """

    def __init__(self, model, q, anchor=None):
        self.model = model
        self.q = model.check_q(q)
        arr = model._arrays
        rot, pos = kernels.chain_poses(self.q, arr["order"], arr["parent"],
                                       arr["origin_rot"], arr["origin_pos"], arr["axis"])
        n_links = len(model.links)
        link_rot = np.empty((n_links, 3, 3))
        link_pos = np.empty((n_links, 3))
        lj = arr["link_joint"]
        root = lj < 0
        link_rot[root] = np.eye(3)
        link_pos[root] = 0.0
        link_rot[~root] = rot[lj[~root]]
        link_pos[~root] = pos[lj[~root]]

        # joint axes and axis points, model frame
        self._axes = np.einsum("jab,jb->ja", rot, arr["axis"])
        self._origins = pos
        self._link_rot = link_rot
        self._link_pos = link_pos

        self._anchor = None
        self._world_rot = np.eye(3)
        self._world_pos = np.zeros(3)
        if anchor is not None:
            name, pose = anchor
            ra, pa = self._model_frame(name)
            self._anchor = name
            self._world_rot = np.asarray(pose.orientation, dtype=float) @ ra.T
            self._world_pos = np.asarray(pose.position, dtype=float) - self._world_rot @ pa
            self._anchor_jac = self._model_jacobian(name)
            self._anchor_pos = pa

    # -- model-frame primitives ----------------------------------------

    def _lookup(self, frame):
        try:
            return self.model._arrays["frames"][frame]
        except KeyError:
            raise KeyError(f"unknown frame '{frame}'") from None

    def _model_frame(self, frame):
        l, off_r, off_p = self._lookup(frame)
        r = self._link_rot[l]
        return r @ off_r, self._link_pos[l] + r @ off_p

    def _point_jacobian(self, link, point):
        """6 x n Jacobian of a point fixed to ``link`` (model frame)."""
        mask = self.model._arrays["ancestors"][link]
        jac = np.zeros((6, self.model.n_joints))
        a = self._axes[mask]
        jac[:3, mask] = np.cross(a, point - self._origins[mask]).T
        jac[3:, mask] = a.T
        return jac

    def _model_jacobian(self, frame):
        l, _, _ = self._lookup(frame)
        _, p = self._model_frame(frame)
        return self._point_jacobian(l, p)

    def _relative(self, jac_lin, jac_ang, point):
        """Express model-frame Jacobian rows relative to the anchor, in world axes."""
        if self._anchor is not None:
            ja = self._anchor_jac
            jac_lin = jac_lin - ja[:3] + skew(point - self._anchor_pos) @ ja[3:]
            if jac_ang is not None:
                jac_ang = jac_ang - ja[3:]
        jac_lin = self._world_rot @ jac_lin
        if jac_ang is not None:
            jac_ang = self._world_rot @ jac_ang
        return jac_lin, jac_ang

    # -- public queries ------------------------------------------------

    def frame_pose(self, frame):
        r, p = self._model_frame(frame)
        return FramePose(self._world_rot @ p + self._world_pos, self._world_rot @ r)

    def frame_jacobian(self, frame):
        jac = self._model_jacobian(frame)
        _, p = self._model_frame(frame)
        lin, ang = self._relative(jac[:3], jac[3:], p)
        return np.vstack([lin, ang])

    def _model_com(self):
        arr = self.model._arrays
        world = np.einsum("lab,lb->la", self._link_rot, arr["com_offsets"]) + self._link_pos
        return world, arr["masses"] @ world / self.model.total_mass

    def com(self):
        _, c = self._model_com()
        return self._world_rot @ c + self._world_pos

    def com_jacobian(self):
        arr = self.model._arrays
        world, c = self._model_com()
        # first mass moment of each joint's subtree
        moment = arr["ancestors"].T.astype(float) @ (arr["masses"][:, None] * world)
        lever = moment - arr["subtree_mass"][:, None] * self._origins
        jac = np.cross(self._axes, lever).T / self.model.total_mass
        lin, _ = self._relative(jac, None, c)
        return lin


def forward_kinematics(model, q, frame, anchor=None):
    """World pose of ``frame`` at configuration ``q``."""
    return model.state(q, anchor).frame_pose(frame)


def frame_jacobian(model, q, frame, anchor=None):
    """6 x n Jacobian of ``frame``: linear velocity rows, then angular velocity rows."""
    return model.state(q, anchor).frame_jacobian(frame)


def whole_body_com(model, q, anchor=None):
    return model.state(q, anchor).com()


def com_jacobian(model, q, anchor=None):
    return model.state(q, anchor).com_jacobian()


# --------------------------------------------------------------------------
# File format
# --------------------------------------------------------------------------

_LINK_KEYS = {"name", "mass", "com_offset"}
_JOINT_KEYS = {"name", "type", "axis", "parent_link", "child_link", "origin_translation",
               "origin_rotation", "limit_min", "limit_max"}
_JOINT_REQUIRED = {"name", "axis", "parent_link", "child_link", "limit_min", "limit_max"}
_FRAME_KEYS = {"name", "parent_link", "offset_translation", "offset_rotation"}


def _floats(text, lineno, key):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise ModelParseError(f"line {lineno}: '{key}' expects comma separated numbers") from None


def _parse_vector(text, lineno, key):
    v = _floats(text, lineno, key)
    if len(v) != 3:
        raise ModelParseError(f"line {lineno}: '{key}' expects 3 values, got {len(v)}")
    return tuple(v)


def _parse_rotation(text, lineno, key):
    v = _floats(text, lineno, key)
    if len(v) == 3:
        return _mat3(rpy_to_matrix(*np.deg2rad(v)))
    if len(v) == 9:
        return tuple(tuple(v[3 * i:3 * i + 3]) for i in range(3))
    raise ModelParseError(f"line {lineno}: '{key}' expects roll,pitch,yaw (deg) or 9 matrix entries")


def _parse_scalar(text, lineno, key):
    try:
        return float(text)
    except ValueError:
        raise ModelParseError(f"line {lineno}: '{key}' expects a number") from None


def _fields(tokens, lineno, allowed, kind):
    out = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or not value:
            raise ModelParseError(f"line {lineno}: expected key=value, got '{tok}'")
        if key not in allowed:
            raise ModelParseError(f"line {lineno}: unknown {kind} field '{key}'")
        if key in out:
            raise ModelParseError(f"line {lineno}: duplicate field '{key}'")
        out[key] = value
    if "name" not in out:
        raise ModelParseError(f"line {lineno}: {kind} record without name")
    return out


def parse_model(text):
    """Build a :class:`RobotModel` from model-file text."""
    links, joints, frames = [], [], []
    root = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("root_link"):
            key, sep, value = line.partition("=")
            if key.strip() != "root_link" or not sep or not value.strip():
                raise ModelParseError(f"line {lineno}: expected 'root_link = <name>'")
            root = value.strip()
            continue
        kind, *tokens = line.split()
        if kind == "link":
            f = _fields(tokens, lineno, _LINK_KEYS, kind)
            links.append(Link(
                name=f["name"],
                mass=_parse_scalar(f.get("mass", "0"), lineno, "mass"),
                com_offset=_parse_vector(f.get("com_offset", "0,0,0"), lineno, "com_offset"),
            ))
        elif kind == "joint":
            f = _fields(tokens, lineno, _JOINT_KEYS, kind)
            missing = _JOINT_REQUIRED - f.keys()
            if missing:
                raise ModelParseError(
                    f"line {lineno}: joint '{f['name']}' missing {', '.join(sorted(missing))}")
            joints.append(Joint(
                name=f["name"],
                type=f.get("type", "revolute"),
                axis=_parse_vector(f["axis"], lineno, "axis"),
                parent_link=f["parent_link"],
                child_link=f["child_link"],
                origin_translation=_parse_vector(f.get("origin_translation", "0,0,0"), lineno,
                                                 "origin_translation"),
                origin_rotation=_parse_rotation(f.get("origin_rotation", "0,0,0"), lineno,
                                                "origin_rotation"),
                limit_min=float(np.deg2rad(_parse_scalar(f["limit_min"], lineno, "limit_min"))),
                limit_max=float(np.deg2rad(_parse_scalar(f["limit_max"], lineno, "limit_max"))),
            ))
        elif kind == "frame":
            f = _fields(tokens, lineno, _FRAME_KEYS, kind)
            if "parent_link" not in f:
                raise ModelParseError(f"line {lineno}: frame '{f['name']}' missing parent_link")
            frames.append(NamedFrame(
                name=f["name"],
                parent_link=f["parent_link"],
                offset_translation=_parse_vector(f.get("offset_translation", "0,0,0"), lineno,
                                                 "offset_translation"),
                offset_rotation=_parse_rotation(f.get("offset_rotation", "0,0,0"), lineno,
                                                "offset_rotation"),
            ))
        else:
            raise ModelParseError(f"line {lineno}: unknown record type '{kind}'")
    if root is None:
        raise ModelParseError("missing 'root_link = <name>' line")
    return RobotModel(links=links, joints=joints, root_link=root, named_frames=frames)


def load_model(path):
    """Read and validate a model file. Joint limits are converted to radians."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise FileNotFoundError(f"model file not found: {path}") from None
    model = parse_model(text)
    LOG.debug("loaded %s: %d joints, %.3f kg", path, model.n_joints, model.total_mass)
    return model


def _degrees_exact(rad):
    """A degree value that converts back to exactly ``rad``."""
    deg = float(np.rad2deg(rad))
    candidates = [deg]
    up = down = deg
    for _ in range(8):
        up = float(np.nextafter(up, np.inf))
        down = float(np.nextafter(down, -np.inf))
        candidates += [up, down]
    for d in candidates:
        if float(np.deg2rad(d)) == rad:
            return d
    return deg


def _fmt_vec(v):
    return ",".join(repr(float(x)) for x in v)


def _fmt_rot(r):
    if np.array_equal(np.asarray(r, dtype=float), np.eye(3)):
        return "0,0,0"
    return ",".join(repr(float(x)) for row in r for x in row)


def format_model(model):
    """Serialise ``model``; :func:`parse_model` of the result gives back an equal model."""
    lines = [f"root_link = {model.root_link}"]
    for link in model.links:
        lines.append(f"link name={link.name} mass={link.mass!r} com_offset={_fmt_vec(link.com_offset)}")
    for j in model.joints:
        lines.append(
            f"joint name={j.name} type={j.type} axis={_fmt_vec(j.axis)} parent_link={j.parent_link} "
            f"child_link={j.child_link} origin_translation={_fmt_vec(j.origin_translation)} "
            f"origin_rotation={_fmt_rot(j.origin_rotation)} "
            f"limit_min={_degrees_exact(j.limit_min)!r} limit_max={_degrees_exact(j.limit_max)!r}")
    for f in model.named_frames:
        lines.append(
            f"frame name={f.name} parent_link={f.parent_link} "
            f"offset_translation={_fmt_vec(f.offset_translation)} "
            f"offset_rotation={_fmt_rot(f.offset_rotation)}")
    return "\n".join(lines) + "\n"


def save_model(model, path):
    Path(path).write_text(format_model(model))


def bundled_model_path(name="heicub_like"):
    return Path(__file__).parent / "data" / f"{name}.model"


def with_joint_limits(model, name, limit_min, limit_max):
    """Copy of ``model`` with one joint's limits (radians) replaced."""
    joints = [Joint(**{**j.__dict__, "limit_min": float(limit_min), "limit_max": float(limit_max)})
              if j.name == name else j for j in model.joints]
    if name not in model.joint_index:
        raise KeyError(f"unknown joint '{name}'")
    return RobotModel(links=model.links, joints=joints, root_link=model.root_link,
                      named_frames=model.named_frames)
