"""JSON documents for oracle families, problems, algorithms, solutions and certificates.

Complex numbers are two-element arrays ``[re, im]``; matrices are nested
arrays of those.  Floats are written with ``repr`` precision, so reading a
document back gives bit-identical values.

An algorithm's ``unitaries`` entry is either a dense matrix or a list of
gates ``{"support": [...], "matrix": ..., "basis": ...}`` (``basis``
optional) applied in order.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .adversary import DualCertificate, FeasibleSolution
from .errors import LasVegasError, ParseError, ShapeError
from .model import ComplexityProfile, OracleFamily, StateConversionProblem, block_slices
from .sim import Gate, QueryAlgorithm, QueryEmbedding


def encode_complex(a) -> Any:
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_complex(obj, ndim: int | None = None) -> np.ndarray:
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"not a numeric array: {exc}") from None
    if a.ndim == 0 or a.shape[-1] != 2:
        raise ParseError("complex entries must be [re, im] pairs")
    out = a[..., 0] + 1j * a[..., 1]
    if ndim is not None and out.ndim != ndim:
        raise ParseError(f"expected a {ndim}-dimensional complex array, got shape {out.shape}")
    return out


def _get(doc: dict, key: str):
    if not isinstance(doc, dict) or key not in doc:
        raise ParseError(f"missing field {key!r}")
    return doc[key]


# ---------------------------------------------------------------------------
# oracle families and problems


def family_to_json(fam: OracleFamily) -> dict:
    return {"labels": list(fam.labels), "block_dims": list(fam.block_dims), "kind": fam.kind,
            "operators": {x: [encode_complex(b) for b in fam.operators[x]] for x in fam.labels}}


def family_from_json(doc: dict) -> OracleFamily:
    ops_doc = _get(doc, "operators")
    if not isinstance(ops_doc, dict):
        raise ParseError("operators must be keyed by label")
    labels = tuple(doc.get("labels", list(ops_doc)))
    bd = tuple(int(d) for d in _get(doc, "block_dims"))
    ops = {}
    for x in labels:
        blocks = ops_doc.get(x)
        if blocks is None:
            raise ParseError(f"no operator for label {x!r}")
        ops[x] = tuple(decode_complex(b, 2) for b in blocks)
    return OracleFamily(labels, bd, ops, doc.get("kind", "unitary"))


def problem_to_json(p: StateConversionProblem) -> dict:
    return {"oracles": family_to_json(p.oracles),
            "xi": {x: encode_complex(p.xi[i]) for i, x in enumerate(p.labels)},
            "tau": {x: encode_complex(p.tau[i]) for i, x in enumerate(p.labels)}}


def problem_from_json(doc: dict, base: Path | None = None) -> StateConversionProblem:
    fam_doc = _get(doc, "oracles")
    if isinstance(fam_doc, str):
        path = Path(fam_doc) if base is None else base / fam_doc
        fam_doc = read_json(path)
    fam = family_from_json(fam_doc)
    xi, tau = _get(doc, "xi"), _get(doc, "tau")
    try:
        return StateConversionProblem(fam, {x: decode_complex(xi[x], 1) for x in fam.labels},
                                      {x: decode_complex(tau[x], 1) for x in fam.labels})
    except KeyError as exc:
        raise ParseError(f"missing state for label {exc}") from None


# ---------------------------------------------------------------------------
# algorithms


def _step_to_json(step, h: int):
    if len(step) == 1 and step[0].basis is None and np.array_equal(step[0].support, np.arange(h)):
        return encode_complex(step[0].matrix)
    out = []
    for g in step:
        d = {"support": g.support.tolist(), "matrix": encode_complex(g.matrix)}
        if g.basis is not None:
            d["basis"] = encode_complex(g.basis)
        out.append(d)
    return out


def _step_from_json(obj, h: int):
    if isinstance(obj, list) and (not obj or isinstance(obj[0], dict)):
        return tuple(Gate(_get(g, "support"), decode_complex(_get(g, "matrix"), 2),
                          decode_complex(g["basis"], 2) if "basis" in g else None) for g in obj)
    u = decode_complex(obj, 2)
    if u.shape != (h, h):
        raise ShapeError(f"unitary of shape {u.shape} in a workspace of dimension {h}")
    return (Gate(np.arange(h), u),)


def algorithm_to_json(algo: QueryAlgorithm) -> dict:
    e = algo.embedding
    return {"h_dim": algo.h_dim,
            "embedding": {"b_dim": e.b_dim, "c_dim": e.c_dim, "layout": list(e.layout)},
            "oracle_block_dims": list(algo.oracle_block_dims),
            "unitaries": [_step_to_json(s, algo.h_dim) for s in algo.steps]}


def algorithm_from_json(doc: dict) -> QueryAlgorithm:
    h = int(_get(doc, "h_dim"))
    e = _get(doc, "embedding")
    emb = QueryEmbedding(int(_get(e, "b_dim")), int(_get(e, "c_dim")), tuple(_get(e, "layout")))
    steps = tuple(_step_from_json(s, h) for s in _get(doc, "unitaries"))
    return QueryAlgorithm(h, steps, emb, tuple(int(d) for d in _get(doc, "oracle_block_dims")))


# ---------------------------------------------------------------------------
# solutions, certificates, profiles


def solution_to_json(sol: FeasibleSolution) -> dict:
    return {"w_dim": sol.w_dim, "block_dims": list(sol.block_dims),
            "vectors": {x: [encode_complex(sol.data[i, s]) for s in block_slices(sol.block_dims)]
                        for i, x in enumerate(sol.labels)}}


def solution_from_json(doc: dict, labels=None) -> FeasibleSolution:
    w = int(_get(doc, "w_dim"))
    bd = tuple(int(d) for d in _get(doc, "block_dims"))
    vecs = _get(doc, "vectors")
    labels = tuple(vecs) if labels is None else tuple(labels)
    data = np.zeros((len(labels), sum(bd), w), dtype=complex)
    for i, x in enumerate(labels):
        if x not in vecs:
            raise ParseError(f"no vector for label {x!r}")
        for s, blk in zip(block_slices(bd), vecs[x]):
            b = decode_complex(blk, 2) if w else np.zeros((s.stop - s.start, 0))
            if b.shape != (s.stop - s.start, w):
                raise ShapeError(f"block of shape {b.shape}, expected {(s.stop - s.start, w)}")
            data[i, s] = b
    return FeasibleSolution(labels, bd, data)


def certificate_to_json(cert: DualCertificate) -> dict:
    return {"gamma": encode_complex(cert.gamma)}


def certificate_from_json(doc: dict) -> DualCertificate:
    return DualCertificate(decode_complex(_get(doc, "gamma"), 2))


def profile_to_json(prof: ComplexityProfile) -> dict:
    return {"labels": list(prof.labels), "values": prof.values.tolist()}


def profile_from_json(doc: dict) -> ComplexityProfile:
    return ComplexityProfile(tuple(_get(doc, "labels")), np.asarray(_get(doc, "values"), dtype=float))


# ---------------------------------------------------------------------------
# files


def read_json(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None


def write_json(path: str | Path, doc: Any) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load(kind: str, path: str | Path, labels=None):
    """Read a document of the given kind from a file.

    ``labels`` fixes the label order of a solution document.
    """
    path = Path(path)
    doc = read_json(path)
    readers = {"family": family_from_json, "algorithm": algorithm_from_json,
               "solution": lambda d: solution_from_json(d, labels),
               "certificate": certificate_from_json, "profile": profile_from_json,
               "problem": lambda d: problem_from_json(d, path.parent)}
    try:
        return readers[kind](doc)
    except LasVegasError:
        raise
    except (TypeError, ValueError, KeyError, AttributeError) as exc:
        raise ParseError(f"malformed {kind} document {path}: {exc}") from None
