"""Frame spec files and the seeded random-instance generator.

A frame spec is a JSON document:

    {
      "format": "gpfusion-frame",
      "version": 1,
      "space": {"dim": 2, "p": 2.0},
      "triples": [
        {
          "projection": {"basis": [[1.0, 0.0]]},   # or {"matrix": [[...], ...]}
          "lambda_matrix": [[1.0, 0.0]],
          "weight": 1.0
        }
      ],
      "metadata": {}                                # optional, free-form
    }

Matrices are row arrays of numbers.  Projections given as a basis are
built as least-squares projections onto the span; projections given as
a matrix may be oblique and are validated for idempotence and range.
Serialization is canonical (sorted keys, two-space indent, trailing
newline) and floats round-trip exactly, so serialize(parse(text)) is a
fixed point up to key order.
"""

from __future__ import annotations

import json

import numpy as np

from .frames import GPFusionFrame, WeightedTriple
from .linops import LinOp, SubspaceProjection, make_projection, projection_from_matrix
from .seeding import make_rng
from .spaces import PNormSpace

FORMAT_NAME = "gpfusion-frame"
SCHEMA_VERSION = 1

CLASS_FRAME = "frame"
CLASS_PARSEVAL = "parseval"
CLASS_TIGHT = "tight"
CLASS_NOTFRAME = "notframe"

GENERATOR_CLASSES = (CLASS_FRAME, CLASS_PARSEVAL, CLASS_TIGHT, CLASS_NOTFRAME)


class FrameSpecError(ValueError):
    """Raised for malformed or invalid frame spec documents."""


def _fail(path: str, message: str):
    raise FrameSpecError(f"{path}: {message}")


def _require(obj, key, path, kind=None):
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    if key not in obj:
        _fail(path, f"missing required field '{key}'")
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        _fail(f"{path}.{key}", f"expected {kind.__name__}, got {type(val).__name__}")
    return val


def _matrix_field(raw, path) -> np.ndarray:
    if not isinstance(raw, list) or not raw or not all(isinstance(r, list) for r in raw):
        _fail(path, "expected a non-empty list of rows")
    width = len(raw[0])
    for i, row in enumerate(raw):
        if len(row) != width:
            _fail(path, f"row {i} has length {len(row)}, expected {width}")
        for j, x in enumerate(row):
            if not isinstance(x, (int, float)) or isinstance(x, bool):
                _fail(f"{path}[{i}][{j}]", "expected a number")
    m = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(m)):
        _fail(path, "matrix has a non-finite entry")
    return m


def parse_frame_spec(text: str) -> GPFusionFrame:
    """Parse and validate a frame spec document.

    Syntax errors carry the line and column from the JSON decoder;
    validation errors name the failing field and triple index.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FrameSpecError(
            f"syntax error at line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(doc, dict):
        _fail("$", "top-level value must be an object")
    fmt = _require(doc, "format", "$", str)
    if fmt != FORMAT_NAME:
        _fail("$.format", f"expected '{FORMAT_NAME}', got '{fmt}'")
    version = _require(doc, "version", "$", int)
    if version != SCHEMA_VERSION:
        _fail("$.version", f"unsupported version {version}")

    space_obj = _require(doc, "space", "$", dict)
    dim = _require(space_obj, "dim", "$.space", int)
    p = _require(space_obj, "p", "$.space", (int, float))
    try:
        space = PNormSpace(dim, float(p))
    except ValueError as e:
        _fail("$.space", str(e))

    triples_raw = _require(doc, "triples", "$", list)
    if not triples_raw:
        _fail("$.triples", "a family needs at least one triple")
    triples = []
    for i, traw in enumerate(triples_raw):
        path = f"$.triples[{i}]"
        proj_obj = _require(traw, "projection", path, dict)
        if ("basis" in proj_obj) == ("matrix" in proj_obj):
            _fail(f"{path}.projection",
                  "exactly one of 'basis' or 'matrix' must be given")
        try:
            if "basis" in proj_obj:
                basis = _matrix_field(proj_obj["basis"], f"{path}.projection.basis")
                if basis.shape[1] != space.dim:
                    _fail(f"{path}.projection.basis",
                          f"basis vectors have length {basis.shape[1]}, "
                          f"expected {space.dim}")
                proj = make_projection(basis)
            else:
                pm = _matrix_field(proj_obj["matrix"], f"{path}.projection.matrix")
                if pm.shape != (space.dim, space.dim):
                    _fail(f"{path}.projection.matrix",
                          f"expected shape ({space.dim}, {space.dim}), got {pm.shape}")
                proj = projection_from_matrix(pm)
        except FrameSpecError:
            raise
        except ValueError as e:
            _fail(f"{path}.projection", str(e))

        lam = _matrix_field(_require(traw, "lambda_matrix", path, list),
                            f"{path}.lambda_matrix")
        if lam.shape[1] != space.dim:
            _fail(f"{path}.lambda_matrix",
                  f"operator has {lam.shape[1]} columns, expected {space.dim}")

        weight = _require(traw, "weight", path, (int, float))
        if isinstance(weight, bool) or not float(weight) > 0.0:
            _fail(f"{path}.weight",
                  "weight must be > 0 (weights of a fusion family are strictly positive)")
        try:
            triples.append(WeightedTriple(proj, LinOp(lam), float(weight)))
        except ValueError as e:
            _fail(path, str(e))
    return GPFusionFrame(space, tuple(triples))


def frame_to_spec(frame: GPFusionFrame, metadata: dict | None = None) -> dict:
    """Plain-data document for a family (inverse of parsing, up to basis)."""
    doc = {
        "format": FORMAT_NAME,
        "version": SCHEMA_VERSION,
        "space": {"dim": frame.dim, "p": frame.p},
        "triples": [
            {
                "projection": {"matrix": _rows(t.projection.matrix)},
                "lambda_matrix": _rows(t.local_op.matrix),
                "weight": t.weight,
            }
            for t in frame.triples
        ],
    }
    if metadata is not None:
        doc["metadata"] = metadata
    return doc


def serialize_frame_spec(frame: GPFusionFrame, metadata: dict | None = None) -> str:
    """Canonical JSON text for a family; byte-stable for equal inputs."""
    return json.dumps(frame_to_spec(frame, metadata), indent=2, sort_keys=True) + "\n"


def _rows(m: np.ndarray) -> list:
    return [[float(x) for x in row] for row in m]


def frames_allclose(a: GPFusionFrame, b: GPFusionFrame, tol: float = 1e-15) -> bool:
    """Structural equality of two families within an entrywise tolerance."""
    if a.dim != b.dim or a.p != b.p or len(a) != len(b):
        return False
    if a.block_dims != b.block_dims:
        return False
    for ta, tb in zip(a.triples, b.triples):
        if abs(ta.weight - tb.weight) > tol * max(1.0, abs(ta.weight)):
            return False
        if not np.allclose(ta.projection.matrix, tb.projection.matrix,
                           rtol=0.0, atol=tol):
            return False
        if not np.allclose(ta.local_op.matrix, tb.local_op.matrix,
                           rtol=0.0, atol=tol):
            return False
    return True


def random_frame(dim: int, block_dims, p: float, seed: int,
                 target: str = CLASS_FRAME, scale: float = 2.0,
                 stream: int = 0) -> GPFusionFrame:
    """Deterministic random family of the requested class.

    * ``frame``: random subspace projections and local operators with
      weights in [0.5, 2.0], resampled until the stacked composite has
      full rank.
    * ``parseval``: identity projections, local operators cut from a
      random orthonormal stack, unit weights (certified at p = 2).
    * ``tight``: a parseval instance with every local operator scaled
      by ``scale`` (certified tight at p = 2 with common bound
      ``scale``).
    * ``notframe``: all projection ranges inside a common hyperplane, so
      the stacked composite deliberately has a nontrivial kernel.

    Infeasible shape requests (for example a total block dimension
    below ``dim`` for a frame target) raise with a rank-deficit
    diagnostic.
    """
    block_dims = [int(d) for d in block_dims]
    if dim < 1 or not block_dims or any(d < 1 for d in block_dims):
        raise ValueError("dim and every block dimension must be positive")
    if target not in GENERATOR_CLASSES:
        raise ValueError(f"unknown generator class '{target}'")
    total = sum(block_dims)
    rng = make_rng(seed, stream)
    space = PNormSpace(dim, p)

    if target in (CLASS_PARSEVAL, CLASS_TIGHT):
        if total < dim:
            raise ValueError(
                f"rank deficit: total block dimension {total} < dim {dim}; "
                f"no {target} family exists for this shape")
        if p == 2.0:
            # any orthonormal stack encodes isometrically at p = 2
            base, _ = np.linalg.qr(rng.standard_normal((total, dim)))
        else:
            # weighted coordinate cover: row t selects one coordinate k with
            # entry (1/multiplicity_k)**(1/p), so the p-th powers telescope
            # to ||f||_p**p exactly, for every exponent
            coords = rng.permutation(np.arange(total) % dim)
            counts = np.bincount(coords, minlength=dim)
            base = np.zeros((total, dim))
            for t, k in enumerate(coords):
                sign = 1.0 if rng.random() < 0.5 else -1.0
                base[t, k] = sign * (1.0 / counts[k]) ** (1.0 / p)
        factor = scale if target == CLASS_TIGHT else 1.0
        triples = []
        pos = 0
        eye = np.eye(dim)
        for d in block_dims:
            lam = factor * base[pos:pos + d, :]
            triples.append(WeightedTriple(make_projection(eye), LinOp(lam), 1.0))
            pos += d
        return GPFusionFrame(space, tuple(triples))

    if target == CLASS_NOTFRAME:
        if dim < 2:
            raise ValueError("a rank-deficient family needs dim >= 2")
        h = rng.standard_normal(dim)
        h /= np.linalg.norm(h)
        # orthonormal completion of h; columns 1.. span the hyperplane h-perp
        completion = np.linalg.svd(h.reshape(-1, 1), full_matrices=True)[0]
        hyperplane = completion[:, 1:]
        triples = []
        for d in block_dims:
            r = int(rng.integers(1, dim))  # at most dim - 1
            basis = hyperplane @ rng.standard_normal((dim - 1, r))
            proj = make_projection(basis.T)
            lam = rng.standard_normal((d, dim))
            weight = float(rng.uniform(0.5, 2.0))
            triples.append(WeightedTriple(proj, LinOp(lam), weight))
        return GPFusionFrame(space, tuple(triples))

    # target == CLASS_FRAME
    if total < dim:
        raise ValueError(
            f"rank deficit: total block dimension {total} < dim {dim}; "
            f"no frame exists for this shape")
    for _ in range(100):
        ranks = [int(rng.integers(1, dim + 1)) for _ in block_dims]
        if sum(min(d, r) for d, r in zip(block_dims, ranks)) < dim:
            continue
        triples = []
        for d, r in zip(block_dims, ranks):
            basis = rng.standard_normal((dim, r))
            proj = make_projection(basis.T)
            lam = rng.standard_normal((d, dim))
            weight = float(rng.uniform(0.5, 2.0))
            triples.append(WeightedTriple(proj, LinOp(lam), weight))
        frame = GPFusionFrame(space, tuple(triples))
        s = np.linalg.svd(frame.stacked_matrix, compute_uv=False)
        if s[0] > 0.0 and s[-1] > 1e-8 * s[0]:
            return frame
    raise RuntimeError("could not draw a full-rank family in 100 attempts")
