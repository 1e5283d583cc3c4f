"""JSON model files and deterministic report serialization.

Models are UTF-8 JSON objects carrying ``schema_version`` and ``kind``.
Matrices are row-major lists of decimal strings (plain JSON numbers are
accepted on input); words are little-endian mixed-radix integer ids.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .counterexample import ThetaSubset, naive_identity_code, v_theta_channel
from .model import AvwcFamily, GavwcInstance, RandomEncoderCode
from .probability import Channel

SCHEMA_VERSION = "1.0"
SUPPORTED_MAJOR = 1
MODEL_KINDS = ("avwc", "gavwc", "v_theta", "code", "naive_code", "system")


class FormatError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass(frozen=True)
class System:
    """A code together with the channel family it is used on."""

    code: RandomEncoderCode
    family: AvwcFamily | GavwcInstance


# parsing -------------------------------------------------------------------

def _num(value, path: str) -> float:
    if isinstance(value, bool):
        raise FormatError(path, "expected a probability, got a boolean")
    if isinstance(value, (int, float)):
        x = float(value)
    elif isinstance(value, str):
        try:
            x = float(value)
        except ValueError:
            raise FormatError(path, f"not a decimal number: {value!r}") from None
    else:
        raise FormatError(path, f"expected a number, got {type(value).__name__}")
    if not math.isfinite(x):
        raise FormatError(path, "non-finite value")
    return x


def _field(obj: dict, key: str, path: str):
    if not isinstance(obj, dict):
        raise FormatError(path, "expected an object")
    if key not in obj:
        raise FormatError(f"{path}.{key}" if path else key, "missing field")
    return obj[key]


def _matrix(value, path: str) -> Channel:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise FormatError(path, "expected a non-empty list of rows")
    width = len(value[0])
    rows = []
    for i, r in enumerate(value):
        if len(r) != width:
            raise FormatError(f"{path}[{i}]", f"row has {len(r)} entries, expected {width}")
        rows.append([_num(v, f"{path}[{i}][{k}]") for k, v in enumerate(r)])
    m = np.array(rows)
    sums = m.sum(axis=1)
    for i, s in enumerate(sums):
        if abs(s - 1.0) > 1e-9:
            raise FormatError(f"{path}[{i}]", f"row {i} sums to {s!r}, not 1")
    try:
        return Channel(m)
    except ValueError as e:
        raise FormatError(path, str(e)) from None


def _int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatError(path, "expected an integer")
    return value


def check_version(doc: dict, path: str = "") -> None:
    version = _field(doc, "schema_version", path)
    if not isinstance(version, str):
        raise FormatError("schema_version", "expected a string like '1.0'")
    try:
        major = int(version.split(".")[0])
    except ValueError:
        raise FormatError("schema_version", f"malformed version {version!r}") from None
    if major > SUPPORTED_MAJOR:
        raise FormatError("schema_version", f"version {version} is newer than supported "
                          f"{SUPPORTED_MAJOR}.x")
    if major < 1:
        raise FormatError("schema_version", f"unknown version {version}")


def _parse(doc, path: str = ""):
    kind = _field(doc, "kind", path)
    p = f"{path}." if path else ""
    if kind == "avwc":
        states = _field(doc, "states", path)
        if not isinstance(states, list) or not states:
            raise FormatError(f"{p}states", "expected a non-empty list")
        pairs = []
        for i, st in enumerate(states):
            sp = f"{p}states[{i}]"
            pairs.append((_matrix(_field(st, "main", sp), f"{sp}.main"),
                          _matrix(_field(st, "wiretap", sp), f"{sp}.wiretap")))
        try:
            return AvwcFamily(tuple(pairs))
        except ValueError as e:
            raise FormatError(f"{p}states", str(e)) from None
    if kind == "gavwc":
        n = _int(_field(doc, "block_length", path), f"{p}block_length")
        mains = [_matrix(m, f"{p}mains[{i}]") for i, m in enumerate(_field(doc, "mains", path))]
        wts = [_matrix(w, f"{p}wiretaps[{i}]") for i, w in enumerate(_field(doc, "wiretaps", path))]
        try:
            return GavwcInstance(n, tuple(mains), tuple(wts))
        except ValueError as e:
            raise FormatError(path, str(e)) from None
    if kind == "v_theta":
        n = _int(_field(doc, "n", path), f"{p}n")
        thetas = _field(doc, "thetas", path)
        if not isinstance(thetas, list) or not thetas:
            raise FormatError(f"{p}thetas", "expected a non-empty list of word-id lists")
        wts = []
        for i, t in enumerate(thetas):
            try:
                members = [_int(v, f"{p}thetas[{i}]") for v in t]
                wts.append(v_theta_channel(ThetaSubset(n, frozenset(members))))
            except (TypeError, ValueError) as e:
                raise FormatError(f"{p}thetas[{i}]", str(e)) from None
        main = doc.get("main", "identity")
        if main != "identity":
            raise FormatError(f"{p}main", "only the noiseless 'identity' main is supported")
        return GavwcInstance(n, (Channel.identity(2**n),), tuple(wts))
    if kind == "code":
        enc = _matrix(_field(doc, "encoder", path), f"{p}encoder")
        dec = _field(doc, "decoder", path)
        if not isinstance(dec, list):
            raise FormatError(f"{p}decoder", "expected a list of message ids")
        dec = [_int(v, f"{p}decoder[{i}]") for i, v in enumerate(dec)]
        try:
            return RandomEncoderCode(enc, np.array(dec))
        except ValueError as e:
            raise FormatError(f"{p}decoder", str(e)) from None
    if kind == "naive_code":
        return naive_identity_code(_int(_field(doc, "n", path), f"{p}n"))
    if kind == "system":
        code = _parse(_field(doc, "code", path), f"{p}code")
        family = _parse(_field(doc, "family", path), f"{p}family")
        if not isinstance(code, RandomEncoderCode):
            raise FormatError(f"{p}code", "expected a code")
        if not isinstance(family, (AvwcFamily, GavwcInstance)):
            raise FormatError(f"{p}family", "expected a channel family")
        return System(code, family)
    raise FormatError(f"{p}kind", f"unknown kind {kind!r}; expected one of {MODEL_KINDS}")


def loads(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"line {e.lineno}", f"invalid JSON: {e.msg}") from None
    check_version(doc)
    return _parse(doc)


def load_model(path):
    return loads(Path(path).read_text(encoding="utf-8"))


def load_family(path) -> AvwcFamily | GavwcInstance:
    model = load_model(path)
    if isinstance(model, System):
        return model.family
    if not isinstance(model, (AvwcFamily, GavwcInstance)):
        raise FormatError("kind", "file does not describe a channel family")
    return model


# writing -------------------------------------------------------------------

def _mat_out(ch) -> list:
    rows = ch.rows if isinstance(ch, Channel) else np.asarray(ch)
    return [[repr(float(v)) for v in r] for r in rows]


def to_document(model) -> dict:
    """Plain-JSON form of a model (generator shorthands are expanded)."""
    if isinstance(model, AvwcFamily):
        body = {"kind": "avwc", "states": [{"main": _mat_out(m), "wiretap": _mat_out(w)}
                                           for m, w in model.states]}
    elif isinstance(model, GavwcInstance):
        body = {"kind": "gavwc", "block_length": model.block_length,
                "mains": [_mat_out(m) for m in model.mains],
                "wiretaps": [_mat_out(w) for w in model.wiretaps]}
    elif isinstance(model, RandomEncoderCode):
        body = {"kind": "code", "encoder": _mat_out(model.encoder),
                "decoder": [int(v) for v in model.decoder]}
    elif isinstance(model, System):
        body = {"kind": "system", "code": to_document(model.code),
                "family": to_document(model.family)}
        body["code"].pop("schema_version")
        body["family"].pop("schema_version")
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return {"schema_version": SCHEMA_VERSION, **body}


def canonical_dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def dumps(model) -> str:
    return canonical_dumps(to_document(model))


def save(model, path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")


def digest(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return "sha256:" + hashlib.sha256(data).hexdigest()


# shipped fixtures ------------------------------------------------------------

def fixture_dir():
    return resources.files("avwc") / "fixtures"


def fixture_paths() -> list:
    return sorted((p for p in fixture_dir().iterdir() if p.name.endswith(".json")),
                  key=lambda p: p.name)


def fixture(name: str):
    return fixture_dir() / (name if name.endswith(".json") else f"{name}.json")
