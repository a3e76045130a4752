"""Printer profiles, material/cost/time estimates and byte-budget solving."""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, List, Optional

from .errors import BudgetTooSmall, ProfileError, UnknownProfile
from .mesh import TriMesh, signed_volume, triangle_budget_for_bytes, triangle_count

TECHNOLOGIES = ("FDM", "SLA", "MJP")
QUOTE_BASES = ("per_gram", "per_milliliter")


@dataclass(frozen=True)
class PrinterProfile:
    name: str
    technology: str
    quote_basis: str
    density_g_per_mm3: float
    unit_price: float
    throughput: float
    layer_height_mm: float
    currency: str = "USD"
    material: str = ""

    def __post_init__(self):
        if self.technology not in TECHNOLOGIES:
            raise ValueError(f"technology must be one of {TECHNOLOGIES}, got {self.technology!r}")
        if self.quote_basis not in QUOTE_BASES:
            raise ValueError(f"quote_basis must be one of {QUOTE_BASES}, got {self.quote_basis!r}")
        for name in ("density_g_per_mm3", "unit_price", "throughput", "layer_height_mm"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    @property
    def quantity_unit(self) -> str:
        return "g" if self.quote_basis == "per_gram" else "mL"


@dataclass(frozen=True)
class Estimate:
    """Model material only: no supports, infill, purge or resin waste."""

    profile: str
    volume_mm3: float
    quantity: float
    quantity_unit: str
    cost: float
    currency: str
    hours: float

    def as_dict(self) -> dict:
        return {
            "profile": self.profile,
            "volume_mm3": self.volume_mm3,
            "quantity": self.quantity,
            "quantity_unit": self.quantity_unit,
            "cost": self.cost,
            "currency": self.currency,
            "hours": self.hours,
        }


_REQUIRED = ("technology", "quote_basis", "density_g_per_mm3", "layer_height_mm")


def _profile_from_section(name: str, sec: configparser.SectionProxy) -> PrinterProfile:
    missing = [key for key in _REQUIRED if key not in sec]
    if missing:
        raise ProfileError(f"profile [{name}] is missing {', '.join(missing)}")
    try:
        if "unit_price" in sec:
            unit_price = float(sec["unit_price"])
        else:
            unit_price = float(sec["reference_cost"]) / float(sec["reference_quantity"])
        if "throughput" in sec:
            throughput = float(sec["throughput"])
        else:
            if "reference_hours" in sec:
                hours = float(sec["reference_hours"])
            else:
                hours = float(sec["reference_minutes"]) / 60.0
            throughput = float(sec["reference_quantity"]) / hours
        return PrinterProfile(
            name=name,
            technology=sec["technology"].strip().upper(),
            quote_basis=sec["quote_basis"].strip(),
            density_g_per_mm3=float(sec["density_g_per_mm3"]),
            unit_price=unit_price,
            throughput=throughput,
            layer_height_mm=float(sec["layer_height_mm"]),
            currency=sec.get("currency", "USD").strip(),
            material=sec.get("material", "").strip(),
        )
    except KeyError as exc:
        raise ProfileError(f"profile [{name}] needs unit_price/throughput or a reference print ({exc.args[0]} missing)") from exc
    except (ValueError, ZeroDivisionError) as exc:
        raise ProfileError(f"profile [{name}]: {exc}") from exc


def parse_profiles(text: str, source: str = "<string>") -> Dict[str, PrinterProfile]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ProfileError(f"{source}: {exc}") from exc
    return {name: _profile_from_section(name, parser[name]) for name in parser.sections()}


def builtin_profiles() -> Dict[str, PrinterProfile]:
    text = resources.files("lithoprint").joinpath("data/profiles.ini").read_text(encoding="utf-8")
    return parse_profiles(text, source="profiles.ini")


def load_profiles(user_file: Optional[Path] = None) -> Dict[str, PrinterProfile]:
    """Built-ins, overlaid with entries from ``user_file`` when given."""
    profiles = builtin_profiles()
    if user_file is not None:
        text = Path(user_file).read_text(encoding="utf-8")
        profiles.update(parse_profiles(text, source=str(user_file)))
    return profiles


def select_profiles(names: Iterable[str], registry: Dict[str, PrinterProfile]) -> List[PrinterProfile]:
    out = []
    for name in names:
        if name not in registry:
            raise UnknownProfile(name)
        out.append(registry[name])
    return out


def estimate_volume(volume_mm3: float, profile: PrinterProfile) -> Estimate:
    if profile.quote_basis == "per_gram":
        quantity = volume_mm3 * profile.density_g_per_mm3
    else:
        quantity = volume_mm3 / 1000.0
    return Estimate(
        profile=profile.name,
        volume_mm3=volume_mm3,
        quantity=quantity,
        quantity_unit=profile.quantity_unit,
        cost=quantity * profile.unit_price,
        currency=profile.currency,
        hours=quantity / profile.throughput,
    )


def estimate(mesh: TriMesh, profile: PrinterProfile) -> Estimate:
    """Material, cost and time for printing ``mesh`` solid on ``profile``."""
    return estimate_volume(signed_volume(mesh), profile)


def rank_by_cost(mesh: TriMesh, profiles: Iterable[PrinterProfile]) -> List[Estimate]:
    volume = signed_volume(mesh)
    estimates = [estimate_volume(volume, p) for p in profiles]
    return sorted(estimates, key=lambda e: (e.cost, e.profile))


def solve_budget(width: int, height: int, budget_bytes: int) -> int:
    """Smallest downsample factor whose tessellation fits ``budget_bytes``.

    ``width``/``height`` are vertex-grid dimensions (one vertex per pixel).
    """
    max_tris = triangle_budget_for_bytes(budget_bytes)
    k = 1
    while True:
        cols = -(-width // k)
        rows = -(-height // k)
        if cols < 2 or rows < 2:
            raise BudgetTooSmall(f"no downsample factor fits a {width}x{height} image into {budget_bytes} bytes")
        if triangle_count(cols, rows) <= max_tris:
            return k
        k += 1
