"""Component schemas for complete compositional scripts.

A schema fixes the number of component types of a script, the label set of
each type and the rule that maps a character (one or more codepoints) to one
component label per type.  Two decomposition rules are supported:

``syllable``
    A single precomposed codepoint whose offset from a base codepoint is a
    mixed-radix number, the first type being the most significant digit
    (Hangul syllables).
``cluster``
    A sequence of codepoints, each of which is itself a component label of a
    known type (Thai).  Types that may be absent carry an explicit null label.

Schemas are plain data: the built-in ones live as JSON files next to this
module and :func:`load_schema` reads any other file of the same format.
"""
import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from itertools import product
from pathlib import Path
from typing import NamedTuple

from ..errors import CharacterOutOfRange, LabelOutOfRange, MalformedCluster

SCHEMA_FORMAT = "compfont-schema"
SCHEMA_VERSION = 1


class ComponentLabel(NamedTuple):
    """Address of one component: its type and its index within that type."""
    type_index: int
    component_index: int


def _parse_codepoint(text):
    if text is None:
        return None
    if isinstance(text, int):
        return text
    text = text.strip()
    if text.upper().startswith("U+"):
        text = text[2:]
    return int(text, 16)


@dataclass(frozen=True)
class ComponentSchema:
    script_id: str
    type_names: tuple
    label_names: tuple          # per type, tuple of names
    null_labels: tuple          # per type, index of the null label or None
    codec: str                  # "syllable" | "cluster"
    base: int = 0               # syllable codec only
    codepoints: tuple = ()      # cluster codec only: per type, tuple of codepoint or None
    order: tuple = ()           # cluster codec only: canonical type order when composing
    note: str = ""
    _lookup: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.codec not in ("syllable", "cluster"):
            raise ValueError(f"unknown codec {self.codec!r}")
        if not (len(self.type_names) == len(self.label_names) == len(self.null_labels)):
            raise ValueError("type_names, label_names and null_labels must have equal length")
        for names in self.label_names:
            if len(set(names)) != len(names):
                raise ValueError("label names must be unique within a type")
        for t, null in enumerate(self.null_labels):
            if null is not None and not 0 <= null < len(self.label_names[t]):
                raise ValueError(f"null label of type {t} out of range")
        if self.codec == "syllable" and any(n is not None for n in self.null_labels):
            raise ValueError("syllable codec has no null labels")
        if self.codec == "cluster":
            lookup = {}
            for t, cps in enumerate(self.codepoints):
                if len(cps) != len(self.label_names[t]):
                    raise ValueError(f"type {t}: codepoint table length differs from labels")
                for i, cp in enumerate(cps):
                    if cp is None:
                        if i != self.null_labels[t]:
                            raise ValueError(f"type {t}: only the null label may lack a codepoint")
                        continue
                    if cp in lookup:
                        raise ValueError(f"codepoint U+{cp:04X} assigned twice")
                    lookup[cp] = ComponentLabel(t, i)
            order = tuple(self.order) or tuple(range(self.num_types))
            if sorted(order) != list(range(self.num_types)):
                raise ValueError("order must be a permutation of the type indices")
            object.__setattr__(self, "order", order)
            object.__setattr__(self, "_lookup", lookup)

    # -- sizes ---------------------------------------------------------------

    @property
    def num_types(self):
        return len(self.type_names)

    @property
    def type_sizes(self):
        return tuple(len(names) for names in self.label_names)

    @property
    def allows_null(self):
        return tuple(n is not None for n in self.null_labels)

    @property
    def num_components(self):
        """Total label count over all types (the persistent-memory size)."""
        return sum(self.type_sizes)

    @property
    def num_characters(self):
        return math.prod(self.type_sizes)

    @cached_property
    def offsets(self):
        out, acc = [], 0
        for n in self.type_sizes:
            out.append(acc)
            acc += n
        return tuple(out)

    @property
    def min_reference_size(self):
        """Lower bound on the size of any set covering every non-null label."""
        return max(n - (null is not None) for n, null in zip(self.type_sizes, self.null_labels))

    @cached_property
    def codepoint_range(self):
        if self.codec == "syllable":
            return range(self.base, self.base + self.num_characters)
        return frozenset(self._lookup)

    # -- labels --------------------------------------------------------------

    def check_label(self, label):
        t, i = label
        if not 0 <= t < self.num_types:
            raise LabelOutOfRange(f"type index {t} outside [0, {self.num_types})")
        if not 0 <= i < self.type_sizes[t]:
            raise LabelOutOfRange(f"component index {i} outside [0, {self.type_sizes[t]}) for type {t}")
        return ComponentLabel(t, i)

    def is_null(self, label):
        return self.null_labels[label[0]] == label[1]

    def flat_index(self, label):
        t, i = self.check_label(label)
        return self.offsets[t] + i

    def from_flat(self, flat):
        for t in reversed(range(self.num_types)):
            if flat >= self.offsets[t]:
                return self.check_label((t, flat - self.offsets[t]))
        raise LabelOutOfRange(f"flat index {flat} is negative")

    def name(self, label):
        t, i = self.check_label(label)
        return self.label_names[t][i]

    def labels(self, type_index=None, include_null=True):
        types = range(self.num_types) if type_index is None else [type_index]
        return [ComponentLabel(t, i) for t in types for i in range(self.type_sizes[t])
                if include_null or self.null_labels[t] != i]

    def required_labels(self):
        """Every label a complete reference set has to cover."""
        return frozenset(self.labels(include_null=False))

    # -- decomposition -------------------------------------------------------

    def decompose(self, char):
        """Map a character to one component label per type, in type order."""
        if not isinstance(char, str) or not char:
            raise CharacterOutOfRange(f"not a character: {char!r}")
        if self.codec == "syllable":
            if len(char) != 1:
                raise CharacterOutOfRange(f"{char!r} is not a single {self.script_id} syllable")
            code = ord(char) - self.base
            if not 0 <= code < self.num_characters:
                raise CharacterOutOfRange(f"{char!r} (U+{ord(char):04X}) outside the {self.script_id} range")
            labels = []
            for t in reversed(range(self.num_types)):
                n = self.type_sizes[t]
                labels.append(ComponentLabel(t, code % n))
                code //= n
            return labels[::-1]

        slots = [None] * self.num_types
        for c in char:
            label = self._lookup.get(ord(c))
            if label is None:
                raise CharacterOutOfRange(f"U+{ord(c):04X} is not a {self.script_id} component")
            if slots[label.type_index] is not None:
                raise MalformedCluster(f"{char!r} has two codepoints of type {self.type_names[label.type_index]!r}")
            slots[label.type_index] = label
        for t, label in enumerate(slots):
            if label is None:
                if self.null_labels[t] is None:
                    raise MalformedCluster(f"{char!r} lacks a {self.type_names[t]!r} component")
                slots[t] = ComponentLabel(t, self.null_labels[t])
        return slots

    def compose(self, labels):
        """Inverse of :meth:`decompose` (clusters come out in canonical order)."""
        labels = list(labels)
        if len(labels) != self.num_types:
            raise LabelOutOfRange(f"expected {self.num_types} labels, got {len(labels)}")
        checked = []
        for t, label in enumerate(labels):
            label = self.check_label(label)
            if label.type_index != t:
                raise LabelOutOfRange(f"label {tuple(label)} given in position {t}")
            checked.append(label)
        if self.codec == "syllable":
            code = 0
            for t, (_, i) in enumerate(checked):
                code = code * self.type_sizes[t] + i
            return chr(self.base + code)
        return "".join(chr(self.codepoints[t][checked[t].component_index])
                       for t in self.order if not self.is_null(checked[t]))

    def is_valid(self, char):
        try:
            self.decompose(char)
        except (CharacterOutOfRange, MalformedCluster):
            return False
        return True

    def characters(self):
        """Enumerate every representable character in label order."""
        for idx in product(*(range(n) for n in self.type_sizes)):
            yield self.compose([ComponentLabel(t, i) for t, i in enumerate(idx)])

    # -- serialization -------------------------------------------------------

    def to_dict(self):
        types = []
        for t in range(self.num_types):
            if self.codec == "syllable":
                labels = list(self.label_names[t])
            else:
                labels = [{"name": name, "codepoint": None if cp is None else f"U+{cp:04X}"}
                          for name, cp in zip(self.label_names[t], self.codepoints[t])]
            types.append({"name": self.type_names[t], "null_label": self.null_labels[t], "labels": labels})
        codec = ({"kind": "syllable", "base": f"U+{self.base:04X}"} if self.codec == "syllable"
                 else {"kind": "cluster", "order": list(self.order)})
        out = {"format": SCHEMA_FORMAT, "version": SCHEMA_VERSION, "script_id": self.script_id}
        if self.note:
            out["note"] = self.note
        out.update(codec=codec, types=types)
        return out

    @classmethod
    def from_dict(cls, data):
        if data.get("format", SCHEMA_FORMAT) != SCHEMA_FORMAT:
            raise ValueError(f"not a schema file (format {data.get('format')!r})")
        if data.get("version", SCHEMA_VERSION) > SCHEMA_VERSION:
            raise ValueError(f"schema version {data['version']} is newer than supported")
        codec = data["codec"]
        names, nulls, cps = [], [], []
        for entry in data["types"]:
            labels = entry["labels"]
            names.append(tuple(l if isinstance(l, str) else l["name"] for l in labels))
            cps.append(tuple(None if isinstance(l, str) else _parse_codepoint(l.get("codepoint"))
                             for l in labels))
            nulls.append(entry.get("null_label"))
        kwargs = dict(script_id=data["script_id"],
                      type_names=tuple(t["name"] for t in data["types"]),
                      label_names=tuple(names), null_labels=tuple(nulls),
                      codec=codec["kind"], note=data.get("note", ""))
        if codec["kind"] == "syllable":
            kwargs["base"] = _parse_codepoint(codec["base"])
        else:
            kwargs["codepoints"] = tuple(cps)
            kwargs["order"] = tuple(codec.get("order", ()))
        return cls(**kwargs)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), ensure_ascii=False, indent=1), encoding="utf-8")


def load_schema(path):
    """Read a schema from a JSON file."""
    return ComponentSchema.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


BUILTIN_SCHEMAS = ("korean", "thai")


@lru_cache(maxsize=None)
def get_schema(name):
    """Return a built-in schema by script id, or load one from a file path."""
    if name in BUILTIN_SCHEMAS:
        text = resources.files(__package__).joinpath("schemas", f"{name}.json").read_text(encoding="utf-8")
        return ComponentSchema.from_dict(json.loads(text))
    return load_schema(name)


def decompose(schema, char):
    return schema.decompose(char)


def compose(schema, labels):
    return schema.compose(labels)
