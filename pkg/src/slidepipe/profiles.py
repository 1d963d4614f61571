"""Device profiles: per-node device inventory, operation base costs, and
per-(operation, device class) speedup estimates relative to one cpu-core.

Profiles are data, not constants: the packaged defaults were produced by
measuring this library's own kernels (see demos/06_make_profile.py), and
any profile can be loaded from a JSON file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

__all__ = [
    "IoModel",
    "DeviceProfile",
    "load_profile",
    "save_profile",
    "reference_profile",
    "default_profile",
]

CPU_CLASS = "cpu-core"


@dataclass(frozen=True)
class IoModel:
    """Tile-read latency model: read = base * (1 + alpha * (readers - 1)).

    ``readers`` counts reads in flight cluster-wide when the read starts.
    """

    base_read_ms: float
    alpha: float

    def __post_init__(self):
        if self.base_read_ms < 0 or self.alpha < 0:
            raise ValueError("malformed io model: base_read_ms and alpha must be >= 0")


@dataclass(frozen=True)
class DeviceProfile:
    """Per-node device classes with counts, base costs, and speedup table."""

    device_counts: dict
    base_cost_ms: dict
    speedup: dict = field(default_factory=dict)
    io: IoModel | None = None

    def __post_init__(self):
        if CPU_CLASS not in self.device_counts:
            raise ValueError(f"profile must declare the {CPU_CLASS!r} device class")
        for cls, n in self.device_counts.items():
            if int(n) < 1:
                raise ValueError(f"device class {cls!r} must have count >= 1")
        for op, c in self.base_cost_ms.items():
            if not c > 0:
                raise ValueError(f"base cost for {op!r} must be > 0")
        for op, table in self.speedup.items():
            for cls, s in table.items():
                if not s > 0:
                    raise ValueError(f"speedup for ({op!r}, {cls!r}) must be > 0")
                if cls == CPU_CLASS and abs(s - 1.0) > 1e-9:
                    raise ValueError(f"{CPU_CLASS} speedup is 1 by definition, got {s}")

    def classes(self) -> list:
        """Device classes, cpu-core first, accelerators after (sorted)."""
        rest = sorted(c for c in self.device_counts if c != CPU_CLASS)
        return [CPU_CLASS] + rest

    def accelerator_classes(self) -> list:
        return [c for c in self.classes() if c != CPU_CLASS]

    def speedup_of(self, op: str, cls: str) -> float:
        if cls == CPU_CLASS:
            return 1.0
        return float(self.speedup.get(op, {}).get(cls, 1.0))

    def duration_ms(self, op: str, cls: str) -> float:
        if op not in self.base_cost_ms:
            raise ValueError(f"profile has no base cost for operation {op!r}")
        return float(self.base_cost_ms[op]) / self.speedup_of(op, cls)

    def accelerator_estimate(self, op: str) -> float:
        """Estimated accelerator speedup used by the PATS ready-queue order."""
        accs = self.accelerator_classes()
        if not accs:
            return 1.0
        return max(self.speedup_of(op, c) for c in accs)

    def devices_per_node(self) -> int:
        return sum(int(n) for n in self.device_counts.values())


def load_profile(path) -> DeviceProfile:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ValueError(f"cannot load profile {path}: {e}") from e
    return _profile_from_doc(doc, path)


def _profile_from_doc(doc, origin) -> DeviceProfile:
    try:
        io = None
        if "io" in doc and doc["io"] is not None:
            io = IoModel(float(doc["io"]["base_read_ms"]), float(doc["io"]["alpha"]))
        return DeviceProfile(
            device_counts={str(k): int(v) for k, v in doc["device_classes"].items()},
            base_cost_ms={str(k): float(v) for k, v in doc["base_cost_ms"].items()},
            speedup={
                str(op): {str(c): float(s) for c, s in t.items()}
                for op, t in doc.get("speedup", {}).items()
            },
            io=io,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"invalid profile {origin}: {e}") from e


def save_profile(profile: DeviceProfile, path) -> None:
    doc = {
        "device_classes": profile.device_counts,
        "base_cost_ms": profile.base_cost_ms,
        "speedup": profile.speedup,
    }
    if profile.io is not None:
        doc["io"] = {"base_read_ms": profile.io.base_read_ms, "alpha": profile.io.alpha}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _packaged(name: str) -> DeviceProfile:
    text = resources.files("slidepipe.data").joinpath(name).read_text()
    return _profile_from_doc(json.loads(text), name)


def default_profile() -> DeviceProfile:
    """Kernel costs measured on the build machine (see demos/06_make_profile.py)."""
    return _packaged("default_profile.json")


def reference_profile() -> DeviceProfile:
    """Synthetic heterogeneous profile: regular ops accelerator-favored
    (~1.9x), irregular ops ~2x, atomic-heavy ops cpu-favored."""
    return _packaged("reference_profile.json")
