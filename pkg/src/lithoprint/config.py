"""Job configuration: INI files with named sections, overridable from flags.

Every key below can be given in its section of a config file or as a long
flag of the same name (underscores become dashes, ``budget_bytes`` is
``--budget-bytes``).  Flags win over the file; the file wins over defaults.
Relative paths in a file are resolved against the file's directory.

Example::

    [job]
    input = cells.png
    output = cells.stl
    um_per_px = 0.5
    budget_bytes = 100000000

    [filters]
    order = blur, brightness_contrast, gamma, invert, posterize
    posterize_levels = 8

    [relief]
    mode = external
    base_mm = 2.0
    relief_mm = 3.0
    target_width_mm = 100

    [layout]
    scale_bar_um = 10
"""

from __future__ import annotations

import argparse
import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

from .errors import ConfigError, ParameterOutOfRange
from .relief import ReliefParams

DEFAULT_BUDGET_BYTES = 100_000_000
FINE_DETAIL_SIGMA = 1.0
FILTER_NAMES = ("blur", "brightness_contrast", "gamma", "invert", "posterize")
DEFAULT_PROFILES = ("bambu_x1e", "stratasys_j835", "carbon_m2")


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _list(text: str) -> Tuple[str, ...]:
    return tuple(item.strip() for item in text.replace("\n", ",").split(",") if item.strip())


def _optional_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("", "none") else float(text)


@dataclass(frozen=True)
class Key:
    section: str
    name: str
    parse: Callable[[str], Any]
    default: Any
    help: str
    is_path: bool = False

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")


KEYS: Tuple[Key, ...] = (
    Key("job", "input", _list, (), "input image path(s), comma separated", is_path=True),
    Key("job", "output", str, None, "output STL path", is_path=True),
    Key("job", "um_per_px", _list, (), "micrometres per pixel, one value or one per input"),
    Key("job", "budget_bytes", int, DEFAULT_BUDGET_BYTES,
        "maximum STL size in bytes (default 100000000, i.e. 100 MB read as decimal megabytes)"),
    Key("job", "threads", int, 1, "worker threads for tessellation (output is identical for any value)"),
    Key("filters", "order", _list, FILTER_NAMES, "filter application order"),
    Key("filters", "fine_detail", _bool, False, f"blur with sigma={FINE_DETAIL_SIGMA} px unless blur_sigma is set"),
    Key("filters", "blur_sigma", float, 0.0, "Gaussian blur sigma in pixels (0 = off)"),
    Key("filters", "brightness", float, 0.0, "brightness offset in [-1, 1]"),
    Key("filters", "contrast", float, 1.0, "contrast gain about mid-grey"),
    Key("filters", "gamma", float, 1.0, "gamma exponent"),
    Key("filters", "invert", _bool, False, "inverse LUT v -> 1 - v"),
    Key("filters", "posterize_levels", int, 0, "quantize to this many levels (0 = off)"),
    Key("relief", "mode", str, "external", "external (bright is tall) or internal (bright is thin)"),
    Key("relief", "base_mm", float, 2.0, "base plate thickness"),
    Key("relief", "relief_mm", float, 3.0, "height range above the base"),
    Key("relief", "target_width_mm", float, 100.0, "printed width of each panel"),
    Key("decimate", "decimate", _bool, True, "remove redundant coplanar vertices"),
    Key("decimate", "eps_mm", float, 0.0, "planarity tolerance; > 0 alters geometry"),
    Key("layout", "columns", int, 0, "panels per row (0 = all in one row)"),
    Key("layout", "gutter_mm", float, 0.0, "gap between panels"),
    Key("layout", "frame", _bool, False, "raised frame around the plate"),
    Key("layout", "frame_width_mm", float, 2.0, "frame width"),
    Key("layout", "frame_height_mm", _optional_float, None, "frame height (default min(relief, 1.5))"),
    Key("layout", "scale_bar_um", _optional_float, None, "emboss a scale bar of this specimen length"),
    Key("layout", "bar_thickness_mm", float, 1.0, "scale bar thickness"),
    Key("layout", "bar_margin_mm", float, 3.0, "height of the strip holding the scale bar"),
    Key("estimate", "profile", _list, DEFAULT_PROFILES, "printer profile name(s)"),
    Key("estimate", "profile_file", str, None, "extra printer profiles (INI)", is_path=True),
    Key("preview", "heightmap", str, None, "heightmap PNG path (default: <output>_height.png)", is_path=True),
    Key("preview", "hillshade", str, None, "hillshade PNG path (default: <output>_shade.png)", is_path=True),
)
KEY_BY_NAME = {k.name: k for k in KEYS}
assert len(KEY_BY_NAME) == len(KEYS), "config key names must be unique across sections"


@dataclass(frozen=True)
class FilterSettings:
    order: Tuple[str, ...] = FILTER_NAMES
    blur_sigma: float = 0.0
    brightness: float = 0.0
    contrast: float = 1.0
    gamma: float = 1.0
    invert: bool = False
    posterize_levels: int = 0

    def active(self) -> List[str]:
        """Filters that change the image, in application order."""
        on = {
            "blur": self.blur_sigma > 0,
            "brightness_contrast": self.brightness != 0.0 or self.contrast != 1.0,
            "gamma": self.gamma != 1.0,
            "invert": self.invert,
            "posterize": self.posterize_levels > 0,
        }
        return [name for name in self.order if on[name]]


@dataclass(frozen=True)
class LayoutSettings:
    columns: int = 0
    gutter_mm: float = 0.0
    frame: bool = False
    frame_width_mm: float = 2.0
    frame_height_mm: Optional[float] = None
    scale_bar_um: Optional[float] = None
    bar_thickness_mm: float = 1.0
    bar_margin_mm: float = 3.0


@dataclass(frozen=True)
class JobConfig:
    inputs: Tuple[Path, ...] = ()
    output: Optional[Path] = None
    um_per_px: Tuple[Optional[float], ...] = ()
    budget_bytes: int = DEFAULT_BUDGET_BYTES
    threads: int = 1
    filters: FilterSettings = field(default_factory=FilterSettings)
    relief: ReliefParams = field(default_factory=ReliefParams)
    decimate: bool = True
    eps_mm: float = 0.0
    layout: LayoutSettings = field(default_factory=LayoutSettings)
    profiles: Tuple[str, ...] = DEFAULT_PROFILES
    profile_file: Optional[Path] = None
    heightmap: Optional[Path] = None
    hillshade: Optional[Path] = None

    def preview_paths(self) -> Tuple[Path, Path]:
        stem = self.output.with_suffix("") if self.output is not None else None
        heightmap = self.heightmap or (Path(f"{stem}_height.png") if stem else None)
        hillshade = self.hillshade or (Path(f"{stem}_shade.png") if stem else None)
        if heightmap is None or hillshade is None:
            raise ConfigError("preview needs an output path or explicit heightmap/hillshade paths")
        return heightmap, hillshade


def add_flags(parser: argparse.ArgumentParser, sections: Optional[Tuple[str, ...]] = None) -> None:
    """Register one long flag per config key; unset flags stay absent."""
    groups: Dict[str, argparse._ArgumentGroup] = {}
    for key in KEYS:
        if sections is not None and key.section not in sections:
            continue
        group = groups.get(key.section)
        if group is None:
            group = groups[key.section] = parser.add_argument_group(f"[{key.section}] settings")
        names = [key.flag]
        if key.name == "budget_bytes":
            names.append("--budget")
        extra = {"nargs": "?", "const": "true"} if key.parse is _bool else {}
        group.add_argument(*names, dest=key.name, default=argparse.SUPPRESS, metavar="VALUE", help=key.help, **extra)


def _raw_from_file(path: Path) -> Dict[str, Tuple[str, Path]]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    base_dir = path.parent
    raw = {}
    for section in parser.sections():
        for name, value in parser[section].items():
            key = KEY_BY_NAME.get(name)
            if key is None or key.section != section:
                raise ConfigError(f"{path}: unknown key [{section}] {name}")
            raw[name] = (value, base_dir)
    return raw


def _resolve(value: Any, base_dir: Path):
    if value is None:
        return None
    if isinstance(value, tuple):
        return tuple(_resolve(v, base_dir) for v in value)
    p = Path(value)
    return p if p.is_absolute() else base_dir / p


def build_config(
    config_file: Optional[Path] = None, overrides: Optional[Mapping[str, str]] = None, cwd: Optional[Path] = None
) -> JobConfig:
    """Merge defaults, ``config_file`` and string ``overrides`` (flag values)."""
    cwd = Path.cwd() if cwd is None else Path(cwd)
    raw: Dict[str, Tuple[str, Path]] = {}
    if config_file is not None:
        raw.update(_raw_from_file(Path(config_file)))
    for name, value in (overrides or {}).items():
        if name not in KEY_BY_NAME:
            raise ConfigError(f"unknown setting {name}")
        raw[name] = (value, cwd)

    values: Dict[str, Any] = {}
    for key in KEYS:
        if key.name not in raw:
            values[key.name] = key.default
            continue
        text, base_dir = raw[key.name]
        try:
            value = key.parse(text) if isinstance(text, str) else text
        except ValueError as exc:
            raise ConfigError(f"bad value for {key.name}: {exc}") from exc
        values[key.name] = _resolve(value, base_dir) if key.is_path else value
    return _assemble(values)


def _assemble(v: Dict[str, Any]) -> JobConfig:
    order = tuple(v["order"])
    unknown = [name for name in order if name not in FILTER_NAMES]
    if unknown:
        raise ConfigError(f"unknown filter(s) in order: {', '.join(unknown)}")
    if len(set(order)) != len(order):
        raise ConfigError("a filter appears twice in order")
    sigma = v["blur_sigma"]
    if v["fine_detail"] and sigma == 0.0:
        sigma = FINE_DETAIL_SIGMA
    filters = FilterSettings(
        order=order,
        blur_sigma=sigma,
        brightness=v["brightness"],
        contrast=v["contrast"],
        gamma=v["gamma"],
        invert=v["invert"],
        posterize_levels=v["posterize_levels"],
    )
    configured = set(replace(filters, order=FILTER_NAMES).active())
    missing = sorted(configured - set(order))
    if missing:
        raise ConfigError(f"filter(s) configured but absent from order: {', '.join(missing)}")
    if sigma < 0 or v["posterize_levels"] < 0 or v["posterize_levels"] == 1:
        raise ConfigError("blur_sigma must be >= 0 and posterize_levels 0 or >= 2")

    try:
        relief = ReliefParams(v["mode"], v["base_mm"], v["relief_mm"], v["target_width_mm"])
    except ParameterOutOfRange as exc:
        raise ConfigError(str(exc)) from exc
    try:
        um = tuple(_optional_float(x) for x in v["um_per_px"])
    except ValueError as exc:
        raise ConfigError(f"bad um_per_px: {exc}") from exc
    inputs = tuple(v["input"])
    if len(um) > 1 and len(um) != len(inputs):
        raise ConfigError(f"um_per_px has {len(um)} values for {len(inputs)} inputs")
    if any(x is not None and not x > 0 for x in um):
        raise ConfigError("um_per_px must be > 0")
    if v["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    if v["eps_mm"] < 0:
        raise ConfigError("eps_mm must be >= 0")
    if v["columns"] < 0:
        raise ConfigError("columns must be >= 0")
    # budget_bytes below the closed-mesh floor is reported as an unreachable
    # budget when the job runs, not as a configuration error.
    layout = LayoutSettings(
        columns=v["columns"],
        gutter_mm=v["gutter_mm"],
        frame=v["frame"],
        frame_width_mm=v["frame_width_mm"],
        frame_height_mm=v["frame_height_mm"],
        scale_bar_um=v["scale_bar_um"],
        bar_thickness_mm=v["bar_thickness_mm"],
        bar_margin_mm=v["bar_margin_mm"],
    )
    return JobConfig(
        inputs=inputs,
        output=v["output"],
        um_per_px=um,
        budget_bytes=v["budget_bytes"],
        threads=v["threads"],
        filters=filters,
        relief=relief,
        decimate=v["decimate"],
        eps_mm=v["eps_mm"],
        layout=layout,
        profiles=tuple(v["profile"]),
        profile_file=v["profile_file"],
        heightmap=v["heightmap"],
        hillshade=v["hillshade"],
    )


def calibration_for(config: JobConfig, index: int) -> Optional[float]:
    if not config.um_per_px:
        return None
    if len(config.um_per_px) == 1:
        return config.um_per_px[0]
    return config.um_per_px[index]

