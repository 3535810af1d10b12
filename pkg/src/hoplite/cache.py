"""Plan cache keyed by discretized demand vectors.

Demand vectors are snapped onto an evenly spaced grid (resolution C_max/beta
per component), hashed, and the transmission plan for that demand class is
stored under the first bytes of the digest. Truncated keys can collide, so
every hit re-checks the stored vector before returning a plan; a mismatch
counts as a miss. Eviction is least-recently-used. Entries can be saved to
and reloaded from a compact binary snapshot.
"""

from __future__ import annotations

import hashlib
import struct
import threading
from collections import OrderedDict

import numpy as np

MAGIC = b"BHC1"
DISCRETIZE_MODES = ("nearest", "floor")


def discretize(vector, c_max: float, beta: int, mode: str = "nearest") -> np.ndarray:
    """Snap each component to the grid {k * c_max/beta : k = 0..beta}.

    Values are clamped to [0, c_max] first. "nearest" rounds to the closest
    grid point with ties upward; "floor" takes the grid point at or below.
    """
    if int(beta) != beta or beta < 1:
        raise ValueError("beta must be a positive integer")
    if c_max <= 0:
        raise ValueError("c_max must be positive")
    if mode not in DISCRETIZE_MODES:
        raise ValueError(f"unknown discretization mode {mode!r}")
    step = c_max / beta
    v = np.clip(np.asarray(vector, dtype=float), 0.0, c_max)
    if mode == "nearest":
        k = np.floor(v / step + 0.5)
    else:
        k = np.floor(v / step)
    return np.minimum(k, beta) * step


def demand_key(discretized, key_bytes: int = 4) -> bytes:
    """Truncated digest of the discretized vector's float32 wire form."""
    if not 1 <= key_bytes <= 32:
        raise ValueError("key_bytes must be in 1..32")
    wire = np.asarray(discretized, dtype="<f4").tobytes()
    return hashlib.sha256(wire).digest()[:key_bytes]


def entry_size_bytes(n_cells, beams, horizon) -> int:
    """Accounting model for one stored entry: key + plan ids + vector + sizes.

    Accepts fractional beam counts so average-beams-per-slot budgets can be
    expressed directly.
    """
    if n_cells < 0 or beams < 0 or horizon < 0:
        raise ValueError("sizes must be nonnegative")
    return int(4 + 4 * horizon * beams + 4 * n_cells + 8)


class _Entry:
    __slots__ = ("key", "vector", "bhtp")

    def __init__(self, key: bytes, vector: np.ndarray, bhtp: np.ndarray):
        self.key = key
        self.vector = vector
        self.bhtp = bhtp


def _as_plan_array(bhtp) -> np.ndarray:
    plan = np.asarray(bhtp, dtype=np.int32)
    if plan.ndim != 2:
        raise ValueError("a plan must be a (slots x beams) table of cell ids")
    return plan


class BhtpCache:
    """LRU map from discretized demand vectors to transmission plans.

    Thread-safe; every public operation holds the lock for one entry's worth
    of work, so background writers never stall readers for long.
    """

    def __init__(
        self,
        c_max: float,
        beta: int,
        max_entries: int = 200_000,
        key_bytes: int = 4,
        mode: str = "nearest",
    ):
        if max_entries < 1:
            raise ValueError("max_entries must be >= 1")
        self.c_max = float(c_max)
        self.beta = int(beta)
        self.max_entries = int(max_entries)
        self.key_bytes = int(key_bytes)
        self.mode = mode
        discretize(np.zeros(1), self.c_max, self.beta, mode)  # validate args
        self._entries: OrderedDict[bytes, _Entry] = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        self.collisions = 0
        self.evictions = 0

    def __len__(self) -> int:
        return len(self._entries)

    def discretize(self, vector) -> np.ndarray:
        return discretize(vector, self.c_max, self.beta, self.mode)

    def key_for(self, vector) -> bytes:
        return demand_key(self.discretize(vector), self.key_bytes)

    def lookup(self, vector) -> tuple | None:
        """Stored plan for this demand class, or None.

        A key hit whose stored vector differs from the probe's discretized
        vector is a collision: counted and treated as a miss.
        """
        disc = self.discretize(vector).astype("<f4")
        key = demand_key(disc, self.key_bytes)
        with self._lock:
            entry = self._entries.get(key)
            if entry is None:
                self.misses += 1
                return None
            if not np.array_equal(entry.vector, disc):
                self.collisions += 1
                self.misses += 1
                return None
            self._entries.move_to_end(key)
            self.hits += 1
            return tuple(tuple(int(c) for c in row) for row in entry.bhtp)

    def store(self, vector, bhtp) -> bytes:
        """Insert or overwrite the plan for this demand class; returns the key."""
        disc = self.discretize(vector)
        key = demand_key(disc, self.key_bytes)
        plan = _as_plan_array(bhtp)
        with self._lock:
            self._entries[key] = _Entry(key, disc.astype("<f4"), plan)
            self._entries.move_to_end(key)
            while len(self._entries) > self.max_entries:
                self._entries.popitem(last=False)
                self.evictions += 1
        return key

    def stats(self) -> dict:
        with self._lock:
            return {
                "entries": len(self._entries),
                "hits": self.hits,
                "misses": self.misses,
                "collisions": self.collisions,
                "evictions": self.evictions,
            }

    # -- persistence ------------------------------------------------------

    def save(self, path):
        """Write all entries (in recency order) as length-prefixed records."""
        with self._lock:
            entries = list(self._entries.values())
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<III", 1, self.key_bytes, len(entries)))
            for entry in entries:
                slots, beams = entry.bhtp.shape
                payload = (
                    entry.key
                    + struct.pack("<III", len(entry.vector), beams, slots)
                    + entry.vector.astype("<f4").tobytes()
                    + entry.bhtp.astype("<i4").tobytes()
                )
                fh.write(struct.pack("<I", len(payload)))
                fh.write(payload)

    def load(self, path):
        """Replace current contents with a snapshot written by save()."""
        with open(path, "rb") as fh:
            if fh.read(4) != MAGIC:
                raise ValueError(f"{path}: not a plan-cache snapshot")
            version, key_bytes, count = struct.unpack("<III", fh.read(12))
            if version != 1:
                raise ValueError(f"{path}: unsupported snapshot version {version}")
            if key_bytes != self.key_bytes:
                raise ValueError(
                    f"{path}: snapshot key width {key_bytes} != cache {self.key_bytes}"
                )
            entries: OrderedDict[bytes, _Entry] = OrderedDict()
            for _ in range(count):
                (length,) = struct.unpack("<I", fh.read(4))
                payload = fh.read(length)
                if len(payload) != length:
                    raise ValueError(f"{path}: truncated record")
                key = payload[:key_bytes]
                n, beams, slots = struct.unpack_from("<III", payload, key_bytes)
                off = key_bytes + 12
                vector = np.frombuffer(payload, dtype="<f4", count=n, offset=off)
                off += 4 * n
                plan = np.frombuffer(
                    payload, dtype="<i4", count=slots * beams, offset=off
                ).reshape(slots, beams)
                entries[key] = _Entry(key, vector.copy(), plan.copy())
        with self._lock:
            self._entries = entries
