"""Activity type registry: maps type names to behavior classes.

The engine holds one registry per run. ``register_activity`` is the
decorator the built-in catalog uses; embedders can add their own types to
a copy of the default registry without touching this package.
"""

from __future__ import annotations

from typing import Iterator, Type

from .activities.base import Activity
from .errors import RegistryError


class ActivityRegistry:
    def __init__(self):
        self._types: dict[str, Type[Activity]] = {}

    def register(self, cls: Type[Activity]) -> Type[Activity]:
        name = cls.type_name
        if not name:
            raise RegistryError(f"{cls.__name__} has no type_name")
        if name in self._types:
            raise RegistryError(f"activity type {name!r} is already registered")
        self._types[name] = cls
        return cls

    def copy(self) -> "ActivityRegistry":
        clone = ActivityRegistry()
        clone._types = dict(self._types)
        return clone

    # -- lookups ------------------------------------------------------------

    def get(self, name: str) -> Type[Activity]:
        try:
            return self._types[name]
        except KeyError:
            raise RegistryError(f"unknown activity type {name!r}") from None

    def has_type(self, name: str) -> bool:
        return name in self._types

    def is_ez(self, name: str) -> bool:
        return self.has_type(name) and self._types[name].ez

    def check_options(self, name: str, options: dict) -> list[str]:
        if not self.has_type(name):
            return [f"unknown activity type {name!r}"]
        return self._types[name].check_options(options)

    def type_names(self) -> list[str]:
        return sorted(self._types)

    def ez_type_names(self) -> list[str]:
        return sorted(n for n, c in self._types.items() if c.ez)

    def __len__(self) -> int:
        return len(self._types)

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._types))

    def catalog(self) -> list[dict]:
        """Palette description for editors: every type with its option schema."""
        out = []
        for name in sorted(self._types):
            cls = self._types[name]
            out.append(
                {
                    "type": name,
                    "ez": cls.ez,
                    "doc": (cls.__doc__ or "").strip().split("\n")[0],
                    "options": [spec.to_dict() for spec in cls.option_schema],
                }
            )
        return out


def register_activity(registry: ActivityRegistry):
    """Class decorator form: ``@register_activity(reg)``."""

    def wrap(cls: Type[Activity]) -> Type[Activity]:
        return registry.register(cls)

    return wrap
