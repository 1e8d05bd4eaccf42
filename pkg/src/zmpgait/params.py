"""Walking parameters and the ``name = value`` parameter file."""

from dataclasses import dataclass, fields, replace
from pathlib import Path

WALK_TYPES = ("level", "slope_up", "slope_down", "stairs_up")

SCENARIO_DIR = Path(__file__).parent / "data" / "scenarios"


class ParameterError(ValueError):
    """Invalid walking parameters or parameter file."""


@dataclass(frozen=True)
class GaitParameters:
    """Pattern generator inputs. Lengths in m, times in s, ``theta`` in degrees."""

    ts: float = 0.01
    z_c: float = 0.45
    z_c_offset: float = 0.0
    n_strides: int = 3
    T_stride: float = 4.0
    T_switch: float = 1.0
    step_width: float = 0.14
    step_length: float = 0.1
    theta: float = 0.0
    stair_length: float = 0.0
    stair_height: float = 0.0
    right_step_first: bool = False
    type: str = "level"
    step_height: float = 0.02

    def __post_init__(self):
        self.validate()

    @property
    def single_support(self):
        return (self.T_stride - self.T_switch) / 2.0

    @property
    def duration(self):
        return self.n_strides * self.T_stride

    @property
    def n_samples(self):
        return int(round(self.duration / self.ts)) + 1

    def validate(self):
        if self.type not in WALK_TYPES:
            raise ParameterError(f"unknown type '{self.type}' (expected one of {', '.join(WALK_TYPES)})")
        if not self.ts > 0:
            raise ParameterError("ts must be > 0")
        if not self.T_switch > 0:
            raise ParameterError("T_switch must be > 0")
        if not self.T_stride > self.T_switch:
            raise ParameterError("T_stride must be greater than T_switch")
        if not self.single_support > 0:
            raise ParameterError("single support time (T_stride - T_switch)/2 must be > 0")
        if int(self.n_strides) != self.n_strides or self.n_strides < 1:
            raise ParameterError("n_strides must be an integer >= 1")
        if not self.z_c > 0:
            raise ParameterError("z_c must be > 0")
        if not self.z_c + self.z_c_offset > 0:
            raise ParameterError("z_c + z_c_offset must be > 0")
        if self.step_height < 0:
            raise ParameterError("step_height must be >= 0")
        if self.step_width < 0:
            raise ParameterError("step_width must be >= 0")
        if self.type == "stairs_up" and (self.stair_length < 0 or self.stair_height < 0):
            raise ParameterError("stair_length and stair_height must be >= 0")

    def replace(self, **changes):
        return replace(self, **changes)


_FIELD_TYPES = {f.name: f.type for f in fields(GaitParameters)}


def _convert(name, text, lineno):
    kind = _FIELD_TYPES[name]
    if kind in (bool, "bool"):
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ParameterError(f"line {lineno}: '{name}' expects a boolean, got '{text}'")
    if kind in (str, "str"):
        return text
    try:
        value = float(text)
    except ValueError:
        raise ParameterError(f"line {lineno}: '{name}' expects a number, got '{text}'") from None
    if kind in (int, "int"):
        if value != int(value):
            raise ParameterError(f"line {lineno}: '{name}' expects an integer, got '{text}'")
        return int(value)
    return value


def parse_params(text):
    """Parse parameter-file text. Missing names keep their defaults."""
    values = {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, value = line.partition("=")
        name, value = name.strip(), value.strip()
        if not sep or not name or not value:
            raise ParameterError(f"line {lineno}: expected 'name = value'")
        if name not in _FIELD_TYPES:
            raise ParameterError(f"line {lineno}: unknown parameter '{name}'")
        if name in values:
            raise ParameterError(f"line {lineno}: duplicate parameter '{name}'")
        values[name] = _convert(name, value, lineno)
        lines[name] = lineno
    if "type" in values and values["type"] not in WALK_TYPES:
        raise ParameterError(f"line {lines['type']}: unknown type '{values['type']}'")
    try:
        return GaitParameters(**values)
    except ParameterError as exc:
        where = ", ".join(f"{k} (line {v})" for k, v in lines.items() if k in str(exc))
        raise ParameterError(f"{exc}" + (f" [{where}]" if where else "")) from None


def format_params(params):
    out = []
    for f in fields(GaitParameters):
        value = getattr(params, f.name)
        if isinstance(value, bool):
            value = int(value)
        out.append(f"{f.name} = {value!r}" if isinstance(value, float) else f"{f.name} = {value}")
    return "\n".join(out) + "\n"


def load_params(path):
    """Load a parameter file, or a bundled scenario by name (e.g. ``level_4s``)."""
    p = Path(path)
    if not p.exists():
        preset = SCENARIO_DIR / f"{path}.params"
        if preset.exists():
            p = preset
        else:
            raise FileNotFoundError(f"parameter file not found: {path}")
    return parse_params(p.read_text())


def bundled_scenarios():
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.params"))
