"""Fabrication laws: thermal-draw diameter, film stability, bead layout, design cards.

All quantities are SI (metres, Pa, T, kg/m^3). The draw constant C therefore carries
m*(m/s)^(1/2); multiply by 3.1623e7 to read it in the lab-sheet unit um*(mm/s)^(1/2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

SQRT2_MINUS_1 = math.sqrt(2.0) - 1.0

# bead spacing / fiber diameter: nominal and tolerated band
SPACING_RATIO = 7.7
SPACING_RATIO_LO = 6.3
SPACING_RATIO_HI = 9.1


class DomainError(ValueError):
    """Input outside the physical domain of a fabrication law."""


class FilmStableError(ValueError):
    """Bead prediction requested for a film below the breakup threshold."""


class Variant(enum.Enum):
    BOAS_BIG_HEAD = "boas-big-head"
    BOAS = "boas"
    MAGNETIC_LAYER = "magnetic-layer"
    FIBER_BIG_HEAD = "fiber-big-head"

    @property
    def has_beads(self) -> bool:
        return self in (Variant.BOAS_BIG_HEAD, Variant.BOAS)

    @property
    def has_head(self) -> bool:
        return self in (Variant.BOAS_BIG_HEAD, Variant.FIBER_BIG_HEAD)

    @property
    def has_layer(self) -> bool:
        return self is Variant.MAGNETIC_LAYER


class FilmState(enum.Enum):
    UNIFORM_LAYER = "uniform-layer"
    BEADS = "beads"


@dataclass(frozen=True)
class ThermalDrawModel:
    """Draw law D = C / sqrt(v), with C fitted from one observed (D, v) pair."""

    draw_constant: float  # m * (m/s)^0.5

    def __post_init__(self):
        if not self.draw_constant > 0.0:
            raise DomainError(f"draw constant must be positive, got {self.draw_constant}")


@dataclass(frozen=True)
class FilmSpec:
    fiber_diameter: float  # m
    film_thickness: float  # m

    def __post_init__(self):
        if not self.fiber_diameter > 0.0:
            raise DomainError(f"fiber diameter must be positive, got {self.fiber_diameter}")
        if self.film_thickness < 0.0:
            raise DomainError(f"film thickness must be >= 0, got {self.film_thickness}")

    @property
    def critical_thickness(self) -> float:
        return SQRT2_MINUS_1 * self.fiber_diameter


@dataclass(frozen=True)
class BeadGeometry:
    """Periodic bead layout on a fiber: nominal spacing, tolerance band, per-bead volume."""

    spacing: float                     # m, nominal center-to-center
    spacing_interval: tuple[float, float]  # m
    bead_volume: float                 # m^3
    axes_ratio: float = 1.0            # minor/major, 1.0 = spherical

    def __post_init__(self):
        lo, hi = self.spacing_interval
        if not (lo <= self.spacing <= hi):
            raise DomainError(f"nominal spacing {self.spacing} outside interval [{lo}, {hi}]")
        if not self.bead_volume > 0.0:
            raise DomainError(f"bead volume must be positive, got {self.bead_volume}")
        if not 0.0 < self.axes_ratio <= 1.0:
            raise DomainError(f"axes ratio must be in (0, 1], got {self.axes_ratio}")

    @property
    def minor_diameter(self) -> float:
        """Transverse diameter of a prolate-spheroid bead of this volume and axes ratio."""
        b = (3.0 * self.bead_volume * self.axes_ratio / (4.0 * math.pi)) ** (1.0 / 3.0)
        return 2.0 * b


@dataclass(frozen=True)
class MaterialSet:
    """Moduli / remanence / densities of fiber and magnetic composite.

    Defaults: measured moduli of the thermoplastic fiber and the NdFeB-silicone
    composite, 5 mT composite remanence. Densities are reconstructions (hot-melt
    adhesive ~980; 1:1 NdFeB:silicone mass mix via harmonic volume rule ~1870).
    """

    E_fiber: float = 22e6          # Pa
    E_composite: float = 0.4e6     # Pa
    remanence: float = 5e-3        # T
    density_fiber: float = 980.0   # kg/m^3
    density_composite: float = 1870.0  # kg/m^3

    def __post_init__(self):
        for name in ("E_fiber", "E_composite", "remanence", "density_fiber", "density_composite"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class RobotDesign:
    """One robot variant with its geometry and materials. Immutable design card."""

    variant: Variant
    fiber_diameter: float          # m
    length: float                  # m
    bead_geometry: BeadGeometry | None = None
    layer_thickness: float | None = None   # m
    head_diameter: float | None = None     # m
    materials: MaterialSet = field(default_factory=MaterialSet)
    name: str = ""
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.fiber_diameter > 0.0 or not self.length > 0.0:
            raise DomainError("fiber diameter and length must be positive")
        if self.variant.has_beads and self.bead_geometry is None:
            raise DomainError(f"{self.variant.value} requires a bead geometry")
        if not self.variant.has_beads and self.bead_geometry is not None:
            raise DomainError(f"{self.variant.value} must not carry a bead geometry")
        if self.variant.has_layer:
            if self.layer_thickness is None or not self.layer_thickness > 0.0:
                raise DomainError("magnetic-layer variant requires a positive layer thickness")
        elif self.layer_thickness is not None:
            raise DomainError(f"{self.variant.value} must not carry a layer thickness")
        if self.variant.has_head:
            if self.head_diameter is None:
                raise DomainError(f"{self.variant.value} requires a head diameter")
            if self.head_diameter < self.fiber_diameter:
                raise DomainError("head diameter must be >= fiber diameter")
        elif self.head_diameter is not None:
            raise DomainError(f"{self.variant.value} must not carry a head diameter")

    @property
    def aspect_ratio(self) -> float:
        return self.length / self.fiber_diameter

    @property
    def body_outer_diameter(self) -> float:
        """Diameter governing slender-body drag (fiber, or fiber + layer)."""
        if self.variant.has_layer:
            return self.fiber_diameter + 2.0 * self.layer_thickness
        return self.fiber_diameter

    @property
    def head_volume(self) -> float:
        if not self.variant.has_head:
            return 0.0
        return (4.0 / 3.0) * math.pi * (self.head_diameter / 2.0) ** 3

    def bead_positions(self) -> list[float]:
        """Arc positions of body beads: multiples of the spacing, tip zone excluded.

        The tail node (s=0) carries no bead and beads stay at least half a spacing
        away from the tip so a big head never overlaps a body bead.
        """
        if not self.variant.has_beads:
            return []
        lam = self.bead_geometry.spacing
        s_max = self.length - 0.5 * lam
        out = []
        k = 1
        while k * lam <= s_max + 1e-12:
            out.append(k * lam)
            k += 1
        return out

    def total_mass(self) -> float:
        """Mass of fiber + coating + beads + head; the discretizer must conserve this."""
        m = self.materials
        mass = m.density_fiber * math.pi * self.fiber_diameter**2 / 4.0 * self.length
        if self.variant.has_layer:
            d, h = self.fiber_diameter, self.layer_thickness
            mass += m.density_composite * math.pi * h * (d + h) * self.length
        if self.variant.has_beads:
            mass += m.density_composite * self.bead_geometry.bead_volume * len(self.bead_positions())
        if self.variant.has_head:
            mass += m.density_composite * self.head_volume
        return mass


def calibrate_draw_constant(observed_diameter: float, observed_speed: float) -> ThermalDrawModel:
    """Fit C from one observed diameter (m) at one draw speed (m/s)."""
    if not observed_diameter > 0.0:
        raise DomainError(f"observed diameter must be positive, got {observed_diameter}")
    if not observed_speed > 0.0:
        raise DomainError(f"observed draw speed must be positive, got {observed_speed}")
    return ThermalDrawModel(draw_constant=observed_diameter * math.sqrt(observed_speed))


def predict_fiber_diameter(model: ThermalDrawModel, speed: float) -> float:
    """Fiber diameter (m) at draw speed (m/s): D = C / sqrt(v)."""
    if not speed > 0.0:
        raise DomainError(f"draw speed must be positive, got {speed}")
    return model.draw_constant / math.sqrt(speed)


def critical_film_thickness(fiber_diameter: float) -> float:
    """Film thickness above which a coating on the fiber breaks into beads."""
    if not fiber_diameter > 0.0:
        raise DomainError(f"fiber diameter must be positive, got {fiber_diameter}")
    return SQRT2_MINUS_1 * fiber_diameter


def film_breakup_decision(fiber_diameter: float, film_thickness: float) -> FilmState:
    """Beads iff the film is thicker than the critical value, else a stable layer."""
    if film_thickness < 0.0:
        raise DomainError(f"film thickness must be >= 0, got {film_thickness}")
    if film_thickness > critical_film_thickness(fiber_diameter):
        return FilmState.BEADS
    return FilmState.UNIFORM_LAYER


def predict_bead_geometry(fiber_diameter: float, film_thickness: float,
                          axes_ratio: float = 1.0) -> BeadGeometry:
    """Bead spacing and volume after film breakup.

    Spacing is 7.7 D (band 6.3-9.1 D). Each bead collects the whole annular film
    volume of one wavelength: V = pi * h * (D + h) * spacing; residual string
    coating is neglected.
    """
    if film_breakup_decision(fiber_diameter, film_thickness) is not FilmState.BEADS:
        h_t = critical_film_thickness(fiber_diameter)
        raise FilmStableError(
            f"film thickness {film_thickness:.4g} m does not exceed the critical value "
            f"{h_t:.4g} m = (sqrt(2)-1) * D for D = {fiber_diameter:.4g} m; "
            "the coating stays a uniform layer and no beads form"
        )
    spacing = SPACING_RATIO * fiber_diameter
    interval = (SPACING_RATIO_LO * fiber_diameter, SPACING_RATIO_HI * fiber_diameter)
    volume = math.pi * film_thickness * (fiber_diameter + film_thickness) * spacing
    return BeadGeometry(spacing=spacing, spacing_interval=interval,
                        bead_volume=volume, axes_ratio=axes_ratio)


def design_from_fabrication(variant: Variant, model: ThermalDrawModel, speed: float,
                            film_thickness: float, head_diameter: float | None = None,
                            length: float = 0.02, axes_ratio: float = 1.0,
                            materials: MaterialSet | None = None,
                            name: str = "") -> RobotDesign:
    """Compose the draw, breakup and spacing laws into a full design card."""
    materials = materials or MaterialSet()
    diameter = predict_fiber_diameter(model, speed)
    warnings: tuple[str, ...] = ()

    bead_geometry = None
    layer_thickness = None
    if variant.has_beads:
        bead_geometry = predict_bead_geometry(diameter, film_thickness, axes_ratio)
    elif variant.has_layer:
        if film_breakup_decision(diameter, film_thickness) is FilmState.BEADS:
            warnings = (
                f"film thickness {film_thickness:.4g} m exceeds the breakup threshold "
                f"{critical_film_thickness(diameter):.4g} m; a uniform layer requires "
                "magnetically freezing the coating before it beads up",
            )
        layer_thickness = film_thickness

    head = head_diameter if variant.has_head else None
    if variant.has_head and head_diameter is None:
        raise DomainError(f"{variant.value} requires a head diameter")

    return RobotDesign(variant=variant, fiber_diameter=diameter, length=length,
                       bead_geometry=bead_geometry, layer_thickness=layer_thickness,
                       head_diameter=head, materials=materials, name=name,
                       warnings=warnings)
