"""On-disk formats: state JSON, tableau text, and content fingerprints.

States travel as JSON documents::

    {
      "format": "eopkit-state",
      "version": 1,
      "kind": "pure" | "density",
      "parties": [{"label": "A", "dim": 2}, ...],
      "amplitudes": [re0, im0, re1, im1, ...]      # pure, row-major
      "matrix":     [re00, im00, re01, im01, ...]  # density, row-major
    }

Tableaus use the text format understood by :func:`eopkit.stab.parse_tableau`
(an ``n=<qubits>`` header, then one signed Pauli string per line).
:func:`load_any` sniffs between the two by the leading character.
"""

from __future__ import annotations

import hashlib
import json
import os
from typing import Union

import numpy as np

from .errors import ParseError, VersionError
from .qdense import DensityOperator, PartySpec, PureState
from .stab import StabilizerTableau, format_tableau, parse_tableau

STATE_FORMAT = "eopkit-state"
STATE_VERSION = 1

AnyState = Union[PureState, DensityOperator, StabilizerTableau]


def _interleave(values: np.ndarray) -> list:
    flat = np.asarray(values, dtype=complex).reshape(-1)
    out = np.empty(2 * flat.size, dtype=float)
    out[0::2] = flat.real
    out[1::2] = flat.imag
    return out.tolist()


def _deinterleave(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size % 2:
        raise ParseError(f"{what} must be a flat list of re,im pairs")
    return arr[0::2] + 1j * arr[1::2]


def save_state(state: Union[PureState, DensityOperator], path: str) -> str:
    """Serialize a dense state; returns the path written."""
    doc = {
        "format": STATE_FORMAT,
        "version": STATE_VERSION,
        "kind": "pure" if isinstance(state, PureState) else "density",
        "parties": [{"label": lab, "dim": dim} for lab, dim in state.spec.parties],
    }
    if isinstance(state, PureState):
        doc["amplitudes"] = _interleave(state.amplitudes)
    else:
        doc["matrix"] = _interleave(state.matrix)
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")
    return path


def _parse_state_doc(doc) -> Union[PureState, DensityOperator]:
    if not isinstance(doc, dict):
        raise ParseError("state document must be a JSON object")
    if doc.get("format") != STATE_FORMAT:
        raise ParseError(f"not a {STATE_FORMAT} document")
    if doc.get("version") != STATE_VERSION:
        raise VersionError(
            f"state version {doc.get('version')!r} is not {STATE_VERSION}")
    parties = doc.get("parties")
    if not isinstance(parties, list) or not parties:
        raise ParseError("parties must be a nonempty list")
    try:
        spec = PartySpec([(p["label"], int(p["dim"])) for p in parties])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad party entry: {exc}") from None
    d = spec.total_dim
    kind = doc.get("kind")
    if kind == "pure":
        amp = _deinterleave(doc.get("amplitudes", []), "amplitudes")
        if amp.size != d:
            raise ParseError(
                f"amplitudes hold {amp.size} entries, parties need {d}")
        return PureState(amp, spec)
    if kind == "density":
        mat = _deinterleave(doc.get("matrix", []), "matrix")
        if mat.size != d * d:
            raise ParseError(
                f"matrix holds {mat.size} entries, parties need {d * d}")
        return DensityOperator(mat.reshape(d, d), spec)
    raise ParseError(f"kind must be 'pure' or 'density', got {kind!r}")


def load_state(path: str) -> Union[PureState, DensityOperator]:
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}",
                         line=exc.lineno, offset=exc.colno) from None
    return _parse_state_doc(doc)


def save_tableau(tab: StabilizerTableau, path: str) -> str:
    with open(path, "w") as fh:
        fh.write(format_tableau(tab))
    return path


def load_tableau(path: str) -> StabilizerTableau:
    with open(path) as fh:
        return parse_tableau(fh.read())


def load_any(path: str) -> AnyState:
    """Load a state or tableau file, deciding the format by content.

    JSON documents (first non-blank character ``{``) are parsed as dense
    states; anything else goes through the tableau parser.
    """
    with open(path) as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}",
                             line=exc.lineno, offset=exc.colno) from None
        return _parse_state_doc(doc)
    return parse_tableau(text)


def state_fingerprint(path: str) -> str:
    """sha256 of the file's bytes; ties derived reports to their source."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
