"""Category catalog: parametric oriented-rectangle footprints per object kind.

Footprints stand in for meshes.  half_extents are half the object's
footprint dimensions in meters at theta = 0 (local x = first extent).
Supports are objects other objects may legally rest on.
"""

from __future__ import annotations

from dataclasses import dataclass

ENV_TAGS = ("coffee", "dining", "office", "bathroom", "mixed")


@dataclass(frozen=True)
class CategorySpec:
    name: str
    half_extents: tuple[float, float]
    is_support: bool
    environments: tuple[str, ...]


_S = CategorySpec
_SPECS = (
    # dining
    _S("plate", (0.110, 0.110), True, ("dining",)),
    _S("fork", (0.090, 0.012), False, ("dining",)),
    _S("knife", (0.100, 0.012), False, ("dining",)),
    _S("spoon", (0.080, 0.015), False, ("dining", "coffee")),
    _S("cup", (0.040, 0.040), False, ("dining", "bathroom")),
    _S("glass", (0.035, 0.035), False, ("dining",)),
    _S("bowl", (0.080, 0.080), False, ("dining",)),
    _S("saucer", (0.070, 0.070), True, ("dining", "coffee")),
    _S("napkin", (0.085, 0.060), True, ("dining",)),
    _S("teapot", (0.075, 0.060), False, ("dining", "coffee")),
    # coffee table
    _S("mug", (0.045, 0.045), False, ("coffee", "office")),
    _S("tray", (0.150, 0.100), True, ("coffee",)),
    _S("coaster", (0.050, 0.050), True, ("coffee", "office")),
    _S("book", (0.105, 0.070), False, ("coffee", "office")),
    _S("remote", (0.080, 0.025), False, ("coffee",)),
    _S("candle", (0.030, 0.030), False, ("coffee",)),
    _S("sugar_bowl", (0.040, 0.040), False, ("coffee",)),
    _S("magazine", (0.140, 0.100), True, ("coffee",)),
    # office desk
    _S("laptop", (0.170, 0.120), False, ("office",)),
    _S("keyboard", (0.220, 0.075), False, ("office",)),
    _S("mouse", (0.030, 0.050), False, ("office",)),
    _S("notebook", (0.105, 0.074), True, ("office",)),
    _S("pen", (0.070, 0.006), False, ("office",)),
    _S("stapler", (0.050, 0.020), False, ("office",)),
    _S("phone", (0.035, 0.075), False, ("office",)),
    _S("mousepad", (0.110, 0.090), True, ("office",)),
    # bathroom
    _S("toothbrush", (0.090, 0.008), False, ("bathroom",)),
    _S("toothpaste", (0.080, 0.020), False, ("bathroom",)),
    _S("soap", (0.045, 0.030), False, ("bathroom",)),
    _S("soap_dish", (0.060, 0.045), True, ("bathroom",)),
    _S("razor", (0.065, 0.015), False, ("bathroom",)),
    _S("comb", (0.075, 0.015), False, ("bathroom",)),
    _S("lotion", (0.030, 0.030), False, ("bathroom",)),
    _S("towel", (0.120, 0.080), True, ("bathroom",)),
)

CATALOG: dict[str, CategorySpec] = {s.name: s for s in _SPECS}
VOCABULARY: tuple[str, ...] = tuple(s.name for s in _SPECS)
_INDEX: dict[str, int] = {name: i for i, name in enumerate(VOCABULARY)}

N_CATEGORIES = len(VOCABULARY)


def category_index(name: str) -> int:
    try:
        return _INDEX[name]
    except KeyError:
        raise ValueError(f"unknown category {name!r}") from None


def categories_for_env(tag: str) -> tuple[str, ...]:
    if tag == "mixed":
        return VOCABULARY
    return tuple(s.name for s in _SPECS if tag in s.environments)
