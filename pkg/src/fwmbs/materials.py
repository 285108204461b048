"""Refractive-index models loaded from an external material database file.

The file format is INI-style: one section per material, with a ``kind``
discriminator. Sellmeier materials carry term arrays ``B`` (dimensionless)
and ``C_um2`` (squared resonance wavelengths, um^2) plus a validity range;
constant materials carry a fixed index. Unknown fields are rejected.

    [SiO2]
    kind = sellmeier
    B = 0.6961663 0.4079426 0.8974794
    C_um2 = 0.00467914825849 0.013512063074 97.934002537921
    range_nm = 210 3710

    [Air]
    kind = constant
    n = 1.0
    range_nm = 150 20000

n^2(lambda) = 1 + sum_i B_i lambda^2 / (lambda^2 - C_i) with lambda in um.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import MaterialEvalError, ValidationError

# Reject evaluation closer to a Sellmeier pole than this relative distance.
POLE_GUARD_REL = 1e-6

_SELLMEIER_FIELDS = {"kind", "B", "C_um2", "range_nm"}
_CONSTANT_FIELDS = {"kind", "n", "range_nm"}


@dataclass(frozen=True)
class SellmeierModel:
    """Multi-term Sellmeier refractive-index model."""

    name: str
    b: tuple
    c_um2: tuple
    range_m: tuple  # (lambda_min, lambda_max), meters

    def index(self, wavelength_m):
        lam_um2 = (np.asarray(wavelength_m, dtype=float) * 1e6) ** 2
        self._check_range(wavelength_m)
        n2 = np.ones_like(lam_um2)
        for b_i, c_i in zip(self.b, self.c_um2):
            dist = lam_um2 - c_i
            if np.any(np.abs(dist) < POLE_GUARD_REL * c_i):
                raise MaterialEvalError(
                    f"{self.name}: wavelength too close to the Sellmeier pole at "
                    f"{np.sqrt(c_i):.6g} um"
                )
            n2 = n2 + b_i * lam_um2 / dist
        if np.any(n2 <= 1.0):
            raise MaterialEvalError(f"{self.name}: non-physical n^2 <= 1")
        n = np.sqrt(n2)
        return n if n.ndim else float(n)

    def _check_range(self, wavelength_m):
        lam = np.asarray(wavelength_m, dtype=float)
        lo, hi = self.range_m
        if np.any(lam < lo) or np.any(lam > hi):
            raise MaterialEvalError(
                f"{self.name}: wavelength outside validity range "
                f"[{lo * 1e9:.0f}, {hi * 1e9:.0f}] nm"
            )


@dataclass(frozen=True)
class ConstantIndexModel:
    """Fixed refractive index (air, quick tests)."""

    name: str
    n: float
    range_m: tuple

    def index(self, wavelength_m):
        lam = np.asarray(wavelength_m, dtype=float)
        lo, hi = self.range_m
        if np.any(lam < lo) or np.any(lam > hi):
            raise MaterialEvalError(
                f"{self.name}: wavelength outside validity range "
                f"[{lo * 1e9:.0f}, {hi * 1e9:.0f}] nm"
            )
        out = np.full_like(lam, self.n)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class MaterialDb:
    """Immutable map from material identifier to index model."""

    materials: dict

    def get(self, name: str):
        try:
            return self.materials[name]
        except KeyError:
            raise ValidationError(
                f"unknown material {name!r}; available: {sorted(self.materials)}"
            ) from None

    def names(self):
        return sorted(self.materials)


def refractive_index(db: MaterialDb, material: str, wavelength_m):
    """Refractive index of a named material at a vacuum wavelength (m)."""
    return db.get(material).index(wavelength_m)


def _parse_floats(raw: str, section: str, field: str):
    try:
        values = tuple(float(tok) for tok in raw.replace(",", " ").split())
    except ValueError as exc:
        raise ValidationError(f"[{section}] field {field!r}: {exc}") from None
    if not values:
        raise ValidationError(f"[{section}] field {field!r} is empty")
    return values


def _parse_range(parser, section: str):
    raw = parser.get(section, "range_nm", fallback=None)
    if raw is None:
        raise ValidationError(f"[{section}] missing field 'range_nm'")
    vals = _parse_floats(raw, section, "range_nm")
    if len(vals) != 2 or vals[0] >= vals[1]:
        raise ValidationError(f"[{section}] range_nm must be [min, max] with min < max")
    return (vals[0] * 1e-9, vals[1] * 1e-9)


def _build_sellmeier(parser, section: str) -> SellmeierModel:
    for field in ("B", "C_um2"):
        if not parser.has_option(section, field):
            raise ValidationError(f"[{section}] missing field {field!r}")
    b = _parse_floats(parser.get(section, "B"), section, "B")
    c = _parse_floats(parser.get(section, "C_um2"), section, "C_um2")
    if len(b) != len(c):
        raise ValidationError(f"[{section}] B and C_um2 must have the same length")
    if any(ci <= 0 for ci in c):
        raise ValidationError(f"[{section}] C_um2 entries must be positive")
    rng = _parse_range(parser, section)
    lo2, hi2 = (rng[0] * 1e6) ** 2, (rng[1] * 1e6) ** 2
    for ci in c:
        if lo2 <= ci <= hi2:
            raise ValidationError(
                f"[{section}] Sellmeier pole at {np.sqrt(ci):.4g} um lies inside "
                "the validity range"
            )
    model = SellmeierModel(name=section, b=b, c_um2=c, range_m=rng)
    # n^2 > 1 over the whole declared range (sampled).
    model.index(np.linspace(rng[0] * (1 + 1e-9), rng[1] * (1 - 1e-9), 64))
    return model


def _build_constant(parser, section: str) -> ConstantIndexModel:
    if not parser.has_option(section, "n"):
        raise ValidationError(f"[{section}] missing field 'n'")
    n = _parse_floats(parser.get(section, "n"), section, "n")
    if len(n) != 1 or n[0] < 1.0:
        raise ValidationError(f"[{section}] 'n' must be a single value >= 1")
    return ConstantIndexModel(name=section, n=n[0], range_m=_parse_range(parser, section))


def load_material_db(path) -> MaterialDb:
    """Parse a material database file; every model is validated on load."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"material file not found: {path}")
    parser = configparser.ConfigParser(
        strict=True, interpolation=None, delimiters=("=",), comment_prefixes=("#", ";")
    )
    parser.optionxform = str  # keep keys case-sensitive
    try:
        with path.open(encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.DuplicateSectionError as exc:
        raise ValidationError(f"duplicate material name: {exc}") from None
    except configparser.Error as exc:
        raise ValidationError(f"material file parse error: {exc}") from None

    materials = {}
    for section in parser.sections():
        kind = parser.get(section, "kind", fallback=None)
        if kind is None:
            raise ValidationError(f"[{section}] missing field 'kind'")
        if kind == "sellmeier":
            allowed = _SELLMEIER_FIELDS
            model = _build_sellmeier(parser, section)
        elif kind == "constant":
            allowed = _CONSTANT_FIELDS
            model = _build_constant(parser, section)
        else:
            raise ValidationError(f"[{section}] unknown kind {kind!r}")
        unknown = set(parser.options(section)) - allowed
        if unknown:
            raise ValidationError(f"[{section}] unknown fields {sorted(unknown)}")
        materials[section] = model
    if not materials:
        raise ValidationError(f"no materials defined in {path}")
    return MaterialDb(materials=materials)


def default_material_db_path() -> Path:
    """Path of the bundled material database."""
    return Path(resources.files("fwmbs.data") / "materials.ini")


def default_material_db() -> MaterialDb:
    """Load the bundled SiO2 / Si3N4 / Air database."""
    return load_material_db(default_material_db_path())
