"""Small immutable-mapping helper used for environments and stores."""

from __future__ import annotations

from collections.abc import Mapping


class fdict(Mapping):
    """Immutable, hashable mapping with functional update.

    Keys and values must be hashable.  Equality ignores insertion order.
    """

    __slots__ = ("_d", "_hash")

    def __init__(self, items=()):
        self._d = dict(items)
        self._hash = None

    def __getitem__(self, key):
        return self._d[key]

    def __iter__(self):
        return iter(self._d)

    def __len__(self):
        return len(self._d)

    def __contains__(self, key):
        return key in self._d

    def set(self, key, value) -> "fdict":
        d = dict(self._d)
        d[key] = value
        return fdict(d)

    def restrict(self, keys) -> "fdict":
        """Keep only the entries whose key is in `keys`."""
        return fdict({k: v for k, v in self._d.items() if k in keys})

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._d.items()))
        return self._hash

    def __eq__(self, other):
        if isinstance(other, fdict):
            return self._d == other._d
        if isinstance(other, Mapping):
            return dict(self._d) == dict(other)
        return NotImplemented

    def __repr__(self):
        inner = ", ".join(f"{k!r}: {v!r}" for k, v in self._d.items())
        return "{" + inner + "}"


EMPTY = fdict()
