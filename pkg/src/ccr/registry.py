"""Hierarchical attribute registry and the shared binary label layout.

The registry fixes three things that every other component relies on:
the grouping of attributes into domains, the order of bits in a label
vector, and the token grammar used to describe edits.  Labels are plain
tuples of 0/1 ints; the registry owns validation and transitions.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

Bits = tuple[int, ...]

_NAME_RE = re.compile(r"[a-z][a-z0-9_]*")


class UnknownAttributeError(NameError):
    """Raised when a token names an attribute absent from the registry."""


class TokenParseError(ValueError):
    """Malformed edit token; ``position`` is the offending column (0-based)."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (column {position})")
        self.position = position


class Direction(str, Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass(frozen=True)
class StyleSpec:
    """Where the style vector for one edit step comes from.

    ``sampled`` draws from the per-attribute mapper (fixed ``seed`` or fresh
    noise when seed is None), ``extracted`` pulls the style out of a reference
    image file, and ``stored`` points at a style recorded in an earlier trace.
    """

    kind: str = "sampled"
    seed: int | None = None
    ref: str | None = None
    style_id: str | None = None

    def __post_init__(self):
        if self.kind not in ("sampled", "extracted", "stored"):
            raise ValueError(f"unknown style source kind: {self.kind!r}")
        if self.kind == "extracted" and not self.ref:
            raise ValueError("extracted style requires a reference")
        if self.kind == "stored" and not self.style_id:
            raise ValueError("stored style requires a style id")

    @classmethod
    def sampled(cls, seed: int | None = None) -> "StyleSpec":
        return cls(kind="sampled", seed=seed)

    @classmethod
    def extracted(cls, ref: str) -> "StyleSpec":
        return cls(kind="extracted", ref=ref)

    @classmethod
    def stored(cls, style_id: str) -> "StyleSpec":
        return cls(kind="stored", style_id=style_id)

    def to_json_obj(self) -> dict:
        obj: dict = {"kind": self.kind}
        if self.seed is not None:
            obj["seed"] = self.seed
        if self.ref is not None:
            obj["ref"] = self.ref
        if self.style_id is not None:
            obj["style_id"] = self.style_id
        return obj

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "StyleSpec":
        return cls(
            kind=obj.get("kind", "sampled"),
            seed=obj.get("seed"),
            ref=obj.get("ref"),
            style_id=obj.get("style_id"),
        )


@dataclass(frozen=True)
class EditStep:
    """One attribute edit: set or clear ``attribute`` within ``domain``."""

    domain: str
    attribute: str
    direction: Direction
    style: StyleSpec = field(default_factory=StyleSpec.sampled)

    def token(self) -> str:
        sign = "+" if self.direction is Direction.FORWARD else "-"
        suffix = ""
        if self.style.kind == "sampled" and self.style.seed is not None:
            suffix = f"@seed:{self.style.seed}"
        elif self.style.kind == "extracted":
            suffix = f"@ref:{self.style.ref}"
        elif self.style.kind == "stored":
            raise ValueError("stored styles have no token form; serialize the trace instead")
        return f"{sign}{self.attribute}{suffix}"

    def to_json_obj(self) -> dict:
        return {
            "domain": self.domain,
            "attribute": self.attribute,
            "direction": self.direction.value,
            "style": self.style.to_json_obj(),
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "EditStep":
        return cls(
            domain=obj["domain"],
            attribute=obj["attribute"],
            direction=Direction(obj["direction"]),
            style=StyleSpec.from_json_obj(obj.get("style", {})),
        )


def inverse(step: EditStep) -> EditStep:
    """Flip the direction of a step; the style payload is dropped."""
    flipped = Direction.BACKWARD if step.direction is Direction.FORWARD else Direction.FORWARD
    return replace(step, direction=flipped, style=StyleSpec.sampled())


@dataclass(frozen=True)
class Domain:
    """A group of mutually related attributes.

    ``exclusive`` means a valid label activates at most one attribute of the
    group (hair colors); binary domains hold a single on/off attribute.
    """

    name: str
    attributes: tuple[str, ...]
    exclusive: bool = False

    def __post_init__(self):
        if not self.attributes:
            raise ValueError(f"domain {self.name!r} has no attributes")
        if not _NAME_RE.fullmatch(self.name):
            raise ValueError(f"invalid domain name: {self.name!r}")
        for a in self.attributes:
            if not _NAME_RE.fullmatch(a):
                raise ValueError(f"invalid attribute name: {a!r}")
        if len(set(self.attributes)) != len(self.attributes):
            raise ValueError(f"duplicate attribute in domain {self.name!r}")


class DomainRegistry:
    """Ordered collection of domains defining the label bit layout.

    Bits are laid out by concatenating each domain's attributes in registry
    order, so the default configuration yields
    ``[bangs, black, blond, brown, glasses]``.
    """

    def __init__(self, domains: Sequence[Domain], aliases: Mapping[str, str] | None = None):
        if not domains:
            raise ValueError("registry needs at least one domain")
        names = [d.name for d in domains]
        if len(set(names)) != len(names):
            raise ValueError("duplicate domain names")
        self._domains: tuple[Domain, ...] = tuple(domains)
        self._by_name = {d.name: d for d in self._domains}
        self._attr_domain: dict[str, Domain] = {}
        self._bit_index: dict[str, int] = {}
        self._slices: dict[str, slice] = {}
        idx = 0
        for d in self._domains:
            start = idx
            for a in d.attributes:
                if a in self._attr_domain:
                    raise ValueError(f"attribute {a!r} appears in more than one domain")
                self._attr_domain[a] = d
                self._bit_index[a] = idx
                idx += 1
            self._slices[d.name] = slice(start, idx)
        self._total_bits = idx
        self._aliases = dict(aliases or {})
        for alias, target in self._aliases.items():
            if alias in self._attr_domain:
                raise ValueError(f"alias {alias!r} shadows an attribute")
            if target not in self._attr_domain:
                raise ValueError(f"alias {alias!r} points at unknown attribute {target!r}")

    # -- structure ---------------------------------------------------------

    @property
    def domains(self) -> tuple[Domain, ...]:
        return self._domains

    @property
    def n_domains(self) -> int:
        return len(self._domains)

    @property
    def total_bits(self) -> int:
        return self._total_bits

    @property
    def attribute_names(self) -> tuple[str, ...]:
        """All attributes in bit order."""
        return tuple(sorted(self._bit_index, key=self._bit_index.__getitem__))

    def domain(self, name: str) -> Domain:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"unknown domain: {name!r}") from None

    def domain_of(self, attribute: str) -> Domain:
        return self._attr_domain[self.resolve(attribute)]

    def resolve(self, name: str) -> str:
        """Map an attribute name or alias to its canonical attribute."""
        if name in self._attr_domain:
            return name
        if name in self._aliases:
            return self._aliases[name]
        raise UnknownAttributeError(f"unknown attribute: {name!r}")

    def bit_index(self, attribute: str) -> int:
        return self._bit_index[self.resolve(attribute)]

    def bit_slice(self, domain_name: str) -> slice:
        return self._slices[self.domain(domain_name).name]

    # -- labels ------------------------------------------------------------

    def empty_label(self) -> Bits:
        return (0,) * self._total_bits

    def validate_label(self, bits: Sequence[int]) -> Bits:
        bits = tuple(int(b) for b in bits)
        if len(bits) != self._total_bits:
            raise ValueError(f"label has {len(bits)} bits, expected {self._total_bits}")
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"label bits must be 0 or 1, got {bits}")
        for d in self._domains:
            if d.exclusive and sum(bits[self._slices[d.name]]) > 1:
                raise ValueError(f"exclusive domain {d.name!r} has multiple bits set in {bits}")
        return bits

    def label_from_attributes(self, names: Iterable[str]) -> Bits:
        bits = [0] * self._total_bits
        for n in names:
            bits[self.bit_index(n)] = 1
        return self.validate_label(bits)

    def active_attributes(self, bits: Sequence[int]) -> tuple[str, ...]:
        return tuple(a for a in self.attribute_names if bits[self._bit_index[a]])

    def group_bits(self, bits: Sequence[int], domain_name: str) -> Bits:
        return tuple(bits[self.bit_slice(domain_name)])

    def label_apply(self, bits: Sequence[int], step: EditStep) -> Bits:
        """Symbolic label transition for one edit step.

        Forward sets the attribute bit, clearing siblings when the domain is
        exclusive; backward clears it.  Both are idempotent.  Note that a
        backward step in an exclusive domain cannot restore a previously set
        sibling: the label does not remember it.  That information loss is
        exactly what reference-driven model reversal exists to cover.
        """
        bits = self.validate_label(bits)
        attr = self.resolve(step.attribute)
        d = self._attr_domain[attr]
        if d.name != step.domain:
            raise ValueError(f"step domain {step.domain!r} does not own attribute {attr!r}")
        out = list(bits)
        if step.direction is Direction.FORWARD:
            if d.exclusive:
                for a in d.attributes:
                    out[self._bit_index[a]] = 0
            out[self._bit_index[attr]] = 1
        else:
            out[self._bit_index[attr]] = 0
        return tuple(out)

    # -- serialization -----------------------------------------------------

    def to_json_obj(self) -> dict:
        obj: dict = {
            "domains": [
                {"name": d.name, "attributes": list(d.attributes), "exclusive": d.exclusive}
                for d in self._domains
            ]
        }
        if self._aliases:
            obj["aliases"] = dict(sorted(self._aliases.items()))
        return obj

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "DomainRegistry":
        domains = [
            Domain(
                name=d["name"],
                attributes=tuple(d["attributes"]),
                exclusive=bool(d.get("exclusive", False)),
            )
            for d in obj["domains"]
        ]
        return cls(domains, aliases=obj.get("aliases"))

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DomainRegistry":
        return cls.from_json_obj(json.loads(text))

    def __eq__(self, other) -> bool:
        return isinstance(other, DomainRegistry) and self.to_json_obj() == other.to_json_obj()

    def __repr__(self) -> str:
        return f"DomainRegistry({[d.name for d in self._domains]})"


def parse_edit_token(token: str, registry: DomainRegistry, offset: int = 0) -> EditStep:
    """Parse one edit token of the form ``(+|-)attribute[@style]``.

    ``@style`` is ``seed:<int>`` or ``ref:<file>``; omitted means fresh noise.
    ``offset`` shifts reported error columns when the token is embedded in a
    longer path string.
    """
    if not token:
        raise TokenParseError("empty token", offset)
    if token[0] not in "+-":
        raise TokenParseError(f"expected '+' or '-', got {token[0]!r}", offset)
    direction = Direction.FORWARD if token[0] == "+" else Direction.BACKWARD
    body = token[1:]
    name, sep, style_text = body.partition("@")
    if not name:
        raise TokenParseError("missing attribute name", offset + 1)
    m = _NAME_RE.match(name)
    if m is None or m.end() != len(name):
        bad = 0 if m is None else m.end()
        raise TokenParseError(f"invalid attribute name {name!r}", offset + 1 + bad)
    try:
        attr = registry.resolve(name)
    except UnknownAttributeError:
        raise UnknownAttributeError(f"unknown attribute in token {token!r}") from None
    style = StyleSpec.sampled()
    if sep:
        style_at = offset + 1 + len(name) + 1
        key, colon, value = style_text.partition(":")
        if not colon:
            raise TokenParseError("style must be 'seed:<int>' or 'ref:<file>'", style_at)
        if key == "seed":
            try:
                style = StyleSpec.sampled(int(value))
            except ValueError:
                raise TokenParseError(f"seed must be an integer, got {value!r}",
                                      style_at + len("seed:")) from None
        elif key == "ref":
            if not value:
                raise TokenParseError("ref style needs a file path", style_at + len("ref:"))
            style = StyleSpec.extracted(value)
        else:
            raise TokenParseError(f"unknown style source {key!r}", style_at)
    return EditStep(
        domain=registry.domain_of(attr).name,
        attribute=attr,
        direction=direction,
        style=style,
    )


def default_registry() -> DomainRegistry:
    """The shipped three-domain configuration with hair color exclusive."""
    return DomainRegistry(
        [
            Domain("bangs", ("bangs",)),
            Domain("hair_color", ("black", "blond", "brown"), exclusive=True),
            Domain("glasses", ("glasses",)),
        ],
        aliases={"black_hair": "black", "blond_hair": "blond", "brown_hair": "brown"},
    )
