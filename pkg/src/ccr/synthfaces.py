"""Procedural face-like image generator with exact attribute ground truth.

Every image is a pure function of a :class:`FaceSpec`, so labels are known
by construction and attribute edits have well-defined pixel regions.  The
renderer draws hard-edged ellipses on a normalized grid; identity variation
comes from a seeded generator whose draws never depend on attribute values,
which keeps attribute toggles strictly local.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from PIL import Image

from .registry import Bits, DomainRegistry, default_registry

PALETTE = {
    "black": (0.08, 0.07, 0.07),
    "blond": (0.85, 0.72, 0.35),
    "brown": (0.45, 0.28, 0.15),
}
HAIR_ORDER = ("black", "blond", "brown")
RESOLUTIONS = (32, 64, 128)

_IRIS_COLORS = (
    (0.29, 0.18, 0.10),
    (0.12, 0.22, 0.38),
    (0.16, 0.30, 0.16),
    (0.33, 0.27, 0.12),
)
_SKIN_LIGHT = np.array([0.97, 0.85, 0.74])
_SKIN_DARK = np.array([0.52, 0.36, 0.26])
_RIM_COLOR = np.array([0.07, 0.07, 0.10])
_NOISE_AMP = 0.012


@dataclass(frozen=True)
class FaceSpec:
    """Complete recipe for one rendered face.

    ``face_geometry`` is (dx, dy, sx, sy): center offsets in [-0.1, 0.1] and
    axis scales in [0.8, 1.2].  Rendering the same spec twice is bit-exact.
    """

    identity_seed: int
    skin_tone: float
    face_geometry: tuple[float, float, float, float]
    hair: str
    bangs: bool
    glasses: bool
    glasses_style: int = 0
    bangs_style: int = 0

    def __post_init__(self):
        if not isinstance(self.identity_seed, int) or self.identity_seed < 0:
            raise ValueError("identity_seed must be a nonnegative integer")
        if not 0.0 <= self.skin_tone <= 1.0:
            raise ValueError(f"skin_tone out of range: {self.skin_tone}")
        g = self.face_geometry
        if len(g) != 4:
            raise ValueError("face_geometry needs 4 entries (dx, dy, sx, sy)")
        eps = 1e-9
        if not (-0.1 - eps <= g[0] <= 0.1 + eps and -0.1 - eps <= g[1] <= 0.1 + eps):
            raise ValueError(f"center offsets out of [-0.1, 0.1]: {g[:2]}")
        if not (0.8 - eps <= g[2] <= 1.2 + eps and 0.8 - eps <= g[3] <= 1.2 + eps):
            raise ValueError(f"axis scales out of [0.8, 1.2]: {g[2:]}")
        if self.hair not in PALETTE:
            raise ValueError(f"unknown hair color {self.hair!r}")
        for name in ("glasses_style", "bangs_style"):
            v = getattr(self, name)
            if not isinstance(v, int) or not 0 <= v <= 3:
                raise ValueError(f"{name} must be an integer in [0, 3], got {v!r}")

    def bits(self, registry: DomainRegistry) -> Bits:
        attrs = [self.hair]
        if self.bangs:
            attrs.append("bangs")
        if self.glasses:
            attrs.append("glasses")
        return registry.label_from_attributes(attrs)

    def to_json_obj(self) -> dict:
        obj = asdict(self)
        obj["face_geometry"] = list(self.face_geometry)
        return obj

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "FaceSpec":
        return cls(
            identity_seed=int(obj["identity_seed"]),
            skin_tone=float(obj["skin_tone"]),
            face_geometry=tuple(float(v) for v in obj["face_geometry"]),
            hair=obj["hair"],
            bangs=bool(obj["bangs"]),
            glasses=bool(obj["glasses"]),
            glasses_style=int(obj.get("glasses_style", 0)),
            bangs_style=int(obj.get("bangs_style", 0)),
        )


def spec_for_identity(identity_seed: int, hair: str, bangs: bool, glasses: bool,
                      glasses_style: int = 0, bangs_style: int = 0) -> FaceSpec:
    """Derive skin tone and geometry from the identity seed alone, so all
    records of one identity share a face."""
    rng = np.random.default_rng([identity_seed, 17])
    skin = float(rng.uniform(0.05, 0.95))
    dx, dy = rng.uniform(-0.1, 0.1, size=2)
    sx, sy = rng.uniform(0.8, 1.2, size=2)
    return FaceSpec(
        identity_seed=identity_seed,
        skin_tone=skin,
        face_geometry=(float(dx), float(dy), float(sx), float(sy)),
        hair=hair,
        bangs=bangs,
        glasses=glasses,
        glasses_style=glasses_style,
        bangs_style=bangs_style,
    )


def spec_from_partial(obj: Mapping, rng: np.random.Generator) -> FaceSpec:
    """Build a spec from a possibly partial JSON object, drawing what is
    missing from ``rng``.  Used by the sampling endpoint."""
    identity_seed = int(obj.get("identity_seed", rng.integers(2**31)))
    hair = obj.get("hair", HAIR_ORDER[int(rng.integers(3))])
    bangs = bool(obj.get("bangs", bool(rng.integers(2))))
    glasses = bool(obj.get("glasses", bool(rng.integers(2))))
    glasses_style = int(obj.get("glasses_style", rng.integers(4)))
    bangs_style = int(obj.get("bangs_style", rng.integers(4)))
    base = spec_for_identity(identity_seed, hair, bangs, glasses, glasses_style, bangs_style)
    if "skin_tone" in obj or "face_geometry" in obj:
        base = FaceSpec(
            identity_seed=identity_seed,
            skin_tone=float(obj.get("skin_tone", base.skin_tone)),
            face_geometry=tuple(obj.get("face_geometry", base.face_geometry)),
            hair=hair, bangs=bangs, glasses=glasses,
            glasses_style=glasses_style, bangs_style=bangs_style,
        )
    return base


# -- geometry --------------------------------------------------------------

def _geometry(spec: FaceSpec) -> dict:
    dx, dy, sx, sy = spec.face_geometry
    cx, cy = 0.5 + dx, 0.52 + dy
    ax, ay = 0.24 * sx, 0.30 * sy
    return {
        "cx": cx, "cy": cy, "ax": ax, "ay": ay,
        "eye_dx": 0.42 * ax,
        "ey": cy - 0.10 * ay,
        "rim_r": 0.26 * ax,
        "rim_halo": 0.05,  # region margin beyond the thickest rim
    }


def _grid(resolution: int):
    if resolution not in RESOLUTIONS:
        raise ValueError(f"unsupported resolution {resolution}; choose one of {RESOLUTIONS}")
    c = (np.arange(resolution) + 0.5) / resolution
    yy, xx = np.meshgrid(c, c, indexing="ij")
    return yy, xx


def _ellipse(yy, xx, cx, cy, ax, ay):
    return ((xx - cx) / ax) ** 2 + ((yy - cy) / ay) ** 2 <= 1.0


def face_mask(spec: FaceSpec, resolution: int) -> np.ndarray:
    yy, xx = _grid(resolution)
    g = _geometry(spec)
    return _ellipse(yy, xx, g["cx"], g["cy"], g["ax"], g["ay"])


def hair_mask(spec: FaceSpec, resolution: int) -> np.ndarray:
    """The always-painted hair crown: an outer shell above ear level."""
    yy, xx = _grid(resolution)
    g = _geometry(spec)
    outer = _ellipse(yy, xx, g["cx"], g["cy"] - 0.02, g["ax"] * 1.16, g["ay"] * 1.14)
    face = _ellipse(yy, xx, g["cx"], g["cy"], g["ax"], g["ay"])
    return outer & ~face & (yy <= g["cy"] + 0.15 * g["ay"])


def bangs_region(spec: FaceSpec, resolution: int) -> np.ndarray:
    """Forehead strip that bounds every bangs style."""
    yy, xx = _grid(resolution)
    g = _geometry(spec)
    return face_mask(spec, resolution) & (yy <= g["cy"] - 0.33 * g["ay"])


def glasses_region(spec: FaceSpec, resolution: int) -> np.ndarray:
    """Bounding box of both rims plus the bridge, any style."""
    yy, xx = _grid(resolution)
    g = _geometry(spec)
    reach = g["rim_r"] + g["rim_halo"]
    x_lo, x_hi = g["cx"] - g["eye_dx"] - reach, g["cx"] + g["eye_dx"] + reach
    y_lo, y_hi = g["ey"] - reach, g["ey"] + reach
    return (xx >= x_lo) & (xx <= x_hi) & (yy >= y_lo) & (yy <= y_hi)


# -- rendering -------------------------------------------------------------

def _paint(img, mask, color):
    img[mask] = color


def render_face(spec: FaceSpec, resolution: int) -> np.ndarray:
    """Render ``spec`` to a float32 image of shape (3, R, R) in [0, 1]."""
    yy, xx = _grid(resolution)
    g = _geometry(spec)
    cx, cy, ax, ay = g["cx"], g["cy"], g["ax"], g["ay"]

    # Identity draws happen in one fixed order, before any attribute is
    # consulted, so toggling attributes cannot shift them.
    rng = np.random.default_rng(spec.identity_seed)
    bg_tint = rng.uniform(-0.06, 0.06, size=3)
    iris = np.array(_IRIS_COLORS[int(rng.integers(0, 4))])
    mouth_w = float(rng.uniform(0.8, 1.2))
    feature_shade = float(rng.uniform(0.75, 0.92))
    noise = rng.normal(0.0, 1.0, size=(resolution, resolution))

    img = np.empty((resolution, resolution, 3), dtype=np.float64)
    img[:] = np.array([0.58, 0.62, 0.68]) + bg_tint
    img += (yy - 0.5)[..., None] * -0.08

    hair_color = np.array(PALETTE[spec.hair])
    _paint(img, hair_mask(spec, resolution), hair_color)

    face = _ellipse(yy, xx, cx, cy, ax, ay)
    skin = _SKIN_LIGHT + (_SKIN_DARK - _SKIN_LIGHT) * spec.skin_tone
    r2 = np.clip(((xx - cx) / ax) ** 2 + ((yy - cy) / ay) ** 2, 0.0, 1.0)
    shade = 1.0 - 0.18 * r2**2
    img[face] = (skin[None, :] * shade[face, None])

    for side in (-1.0, 1.0):
        ex = cx + side * g["eye_dx"]
        sclera = _ellipse(yy, xx, ex, g["ey"], 0.16 * ax, 0.10 * ay)
        _paint(img, sclera, np.array([0.95, 0.95, 0.93]))
        dist = np.sqrt((xx - ex) ** 2 + (yy - g["ey"]) ** 2)
        _paint(img, sclera & (dist <= 0.09 * ax), iris)
        _paint(img, sclera & (dist <= 0.035 * ax), np.array([0.05, 0.05, 0.05]))

    nose = (np.abs(xx - cx) <= 0.05 * ax) & (yy >= cy + 0.02 * ay) & (yy <= cy + 0.25 * ay) & face
    img[nose] = skin * feature_shade

    mouth = _ellipse(yy, xx, cx, cy + 0.55 * ay, 0.30 * ax * mouth_w, 0.07 * ay)
    _paint(img, mouth & face, np.array([0.62, 0.22, 0.22]))

    if spec.bangs:
        xn = (xx - cx) / ax
        y_b = cy - 0.45 * ay
        if spec.bangs_style == 0:
            bottom = np.full_like(xx, y_b)
        elif spec.bangs_style == 1:
            frac = np.mod((xn + 1.0) * 1.5, 1.0)
            bottom = y_b + 0.07 * ay * (2.0 * np.abs(frac - 0.5))
        elif spec.bangs_style == 2:
            bottom = y_b + 0.10 * ay * xn
        else:
            bottom = y_b + 0.10 * ay * (1.0 - xn**2)
        _paint(img, face & (yy <= bottom), hair_color)

    if spec.glasses:
        thick = (0.045, 0.07, 0.045, 0.07)[spec.glasses_style]
        square = spec.glasses_style >= 2
        rim = np.zeros((resolution, resolution), dtype=bool)
        for side in (-1.0, 1.0):
            ex = cx + side * g["eye_dx"]
            if square:
                d = np.maximum(np.abs(xx - ex), np.abs(yy - g["ey"]))
            else:
                d = np.sqrt((xx - ex) ** 2 + (yy - g["ey"]) ** 2)
            rim |= np.abs(d - g["rim_r"]) <= thick / 2
        bridge = ((np.abs(yy - g["ey"]) <= thick * 0.4)
                  & (xx >= cx - g["eye_dx"] + g["rim_r"])
                  & (xx <= cx + g["eye_dx"] - g["rim_r"]))
        _paint(img, rim | bridge, _RIM_COLOR)

    img += noise[..., None] * _NOISE_AMP
    np.clip(img, 0.0, 1.0, out=img)
    return np.ascontiguousarray(img.transpose(2, 0, 1)).astype(np.float32)


# -- image files -----------------------------------------------------------

def save_png(path: str | Path, img: np.ndarray) -> None:
    """Write a (3, R, R) float image in [0, 1] as an 8-bit PNG."""
    arr = np.clip(np.rint(img.transpose(1, 2, 0) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path, format="PNG")


def load_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


# -- dataset ---------------------------------------------------------------

@dataclass(frozen=True)
class DatasetRecord:
    image_path: str
    bits: Bits
    identity: int
    split: str

    def to_manifest_line(self) -> str:
        return json.dumps({
            "file": self.image_path,
            "bits": list(self.bits),
            "identity": self.identity,
            "split": self.split,
        })


_RECORDS_PER_IDENTITY = 4


def _combo_fields(combo: int) -> tuple[str, bool, bool]:
    return HAIR_ORDER[combo % 3], bool((combo // 3) % 2), bool((combo // 6) % 2)


def record_spec(seed: int, index: int) -> FaceSpec:
    """The spec backing record ``index`` of the dataset seeded with ``seed``."""
    offset = int(np.random.default_rng([seed, 0]).integers(12))
    identity = index // _RECORDS_PER_IDENTITY
    combo = (7 * index + offset) % 12
    hair, bangs, glasses = _combo_fields(combo)
    identity_seed = int(np.random.default_rng([seed, 3, identity]).integers(2**31))
    gs, bs = (int(v) for v in np.random.default_rng([seed, 4, index]).integers(4, size=2))
    return spec_for_identity(identity_seed, hair, bangs, glasses, gs, bs)


def generate_dataset(count: int, seed: int, registry: DomainRegistry, out_dir: str | Path,
                     resolution: int = 64) -> list[DatasetRecord]:
    """Render ``count`` labeled faces and write the manifest.

    Label combinations cycle through all 12 (hair, bangs, glasses) settings,
    so marginals are uniform to within one record.  Four records share each
    identity, and the train/test split never splits an identity.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)

    n_identities = math.ceil(count / _RECORDS_PER_IDENTITY)
    n_test = max(1, round(0.1 * n_identities)) if n_identities > 1 else 0
    order = np.random.default_rng([seed, 7]).permutation(n_identities)
    test_ids = set(int(i) for i in order[:n_test])

    records = []
    for i in range(count):
        spec = record_spec(seed, i)
        identity = i // _RECORDS_PER_IDENTITY
        rel = f"images/{i:06d}.png"
        save_png(out / rel, render_face(spec, resolution))
        records.append(DatasetRecord(
            image_path=rel,
            bits=spec.bits(registry),
            identity=identity,
            split="test" if identity in test_ids else "train",
        ))

    with open(out / "labels.jsonl", "w") as fh:
        for r in records:
            fh.write(r.to_manifest_line() + "\n")
    meta = {
        "count": count,
        "registry": registry.to_json_obj(),
        "resolution": resolution,
        "seed": seed,
    }
    with open(out / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return records


@dataclass
class DatasetBundle:
    root: Path
    records: list[DatasetRecord]
    registry: DomainRegistry
    resolution: int

    def split(self, name: str) -> list[DatasetRecord]:
        return [r for r in self.records if r.split == name]

    def load_image(self, record: DatasetRecord) -> np.ndarray:
        return load_png(self.root / record.image_path)


def load_dataset(dir: str | Path, registry: DomainRegistry | None = None) -> DatasetBundle:
    """Read and validate a dataset directory written by :func:`generate_dataset`."""
    root = Path(dir)
    manifest = root / "labels.jsonl"
    if not manifest.exists():
        raise FileNotFoundError(f"no manifest at {manifest}")
    meta_path = root / "meta.json"
    resolution = None
    if meta_path.exists():
        with open(meta_path) as fh:
            meta = json.load(fh)
        resolution = meta.get("resolution")
        if registry is None and "registry" in meta:
            registry = DomainRegistry.from_json_obj(meta["registry"])
    if registry is None:
        registry = default_registry()

    records = []
    with open(manifest) as fh:
        for idx, line in enumerate(fh):
            if not line.strip():
                continue
            obj = json.loads(line)
            try:
                bits = registry.validate_label(obj["bits"])
            except ValueError as e:
                raise ValueError(f"record {idx}: {e}") from None
            path = root / obj["file"]
            if not path.exists():
                raise FileNotFoundError(f"record {idx}: missing image {path}")
            with Image.open(path) as im:
                size = im.size
            if resolution is None:
                resolution = size[0]
            if size != (resolution, resolution):
                raise ValueError(
                    f"record {idx}: image {path} is {size}, expected "
                    f"({resolution}, {resolution})")
            records.append(DatasetRecord(
                image_path=obj["file"], bits=bits,
                identity=int(obj["identity"]), split=obj["split"],
            ))
    return DatasetBundle(root=root, records=records, registry=registry,
                         resolution=int(resolution or 0))
