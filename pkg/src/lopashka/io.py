"""Problem files and field dumps.

Two on-disk formats live here.  Problems (an interior symbol plus its
boundary rows) travel as JSON documents with split real and imaginary
parts, so files are diffable and round-trip exactly through float64.
Solved fields travel as a small self-describing binary container:

* 8 magic bytes ``LPSHBIN1``,
* a little-endian ``uint32`` header length,
* a UTF-8 JSON header recording ``dims``, ``dtype`` (``complex128``),
  storage ``order`` (``C``) and ``byteorder`` (``little``),
* the raw array payload in exactly that layout.

Problem schema, with all matrices given as ``{"re": [[...]], "im":
[[...]]}`` of shape ``N x N``::

    {"m": 1, "n": 1, "N": 1,
     "interior": [{"alpha": [0, 2], "re": [[1.0]], "im": [[0.0]]}],
     "boundary": [{"components": [
         {"k": 0, "projection": {...},
          "coeffs": [{"beta": [0, 0], "re": [[1.0]], "im": [[0.0]]}]}]}]}

Exponent tuples have length ``n + 1`` with the normal variable last.
Top-level ``name`` and ``description`` entries are allowed and ignored
by the loader.
"""

import json
import struct

import numpy as np

from .errors import ArgumentError
from .symbols import (InteriorSymbol, BoundaryComponent, BoundaryRow,
                      BoundaryOperatorSpec)

__all__ = [
    "MAGIC",
    "problem_to_dict",
    "problem_from_dict",
    "load_problem",
    "save_problem",
    "write_field",
    "read_field",
]

MAGIC = b"LPSHBIN1"

_META_KEYS = ("name", "description")


def _matrix_pair(mat):
    mat = np.asarray(mat, dtype=complex)
    return {"re": mat.real.tolist(), "im": mat.imag.tolist()}


def _pair_matrix(obj, N, where):
    if not isinstance(obj, dict) or set(obj) != {"re", "im"}:
        raise ArgumentError('%s must be {"re": [[...]], "im": [[...]]}'
                            % where)
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (TypeError, ValueError):
        raise ArgumentError("%s has non-numeric entries" % where)
    if re.shape != (N, N) or im.shape != (N, N):
        raise ArgumentError("%s has shape re=%r im=%r, expected (%d, %d)"
                            % (where, re.shape, im.shape, N, N))
    return re + 1j * im


def _exponent(obj, dim, where):
    if (not isinstance(obj, list) or len(obj) != dim
            or not all(isinstance(e, int) and e >= 0 for e in obj)):
        raise ArgumentError("%s must be a list of %d nonnegative integers"
                            % (where, dim))
    return tuple(obj)


def _positive_int(doc, key):
    val = doc.get(key)
    if not isinstance(val, int) or isinstance(val, bool) or val < 1:
        raise ArgumentError('field "%s" must be a positive integer' % key)
    return val


def problem_to_dict(sym, bspec, name=None, description=None):
    """Serialize a symbol / boundary-spec pair to the problem schema."""
    bspec.check_against(sym)
    doc = {}
    if name is not None:
        doc["name"] = str(name)
    if description is not None:
        doc["description"] = str(description)
    doc["m"] = sym.m
    doc["n"] = sym.n
    doc["N"] = sym.N
    doc["interior"] = [
        dict([("alpha", list(expo))] + sorted(_matrix_pair(mat).items()))
        for expo, mat in sorted(sym.coeffs.items())]
    rows = []
    for row in bspec.rows:
        comps = []
        for comp in row.components:
            comps.append({
                "k": comp.k,
                "projection": _matrix_pair(comp.projection),
                "coeffs": [
                    dict([("beta", list(expo))]
                         + sorted(_matrix_pair(mat).items()))
                    for expo, mat in sorted(comp.coeffs.items())],
            })
        rows.append({"components": comps})
    doc["boundary"] = rows
    return doc


def problem_from_dict(doc):
    """Build ``(InteriorSymbol, BoundaryOperatorSpec)`` from a problem dict.

    Validates field names, dimensions and degrees, and re-raises
    constructor complaints with the offending JSON path prepended.

    Raises
    ------
    ArgumentError
        On any schema violation.
    """
    if not isinstance(doc, dict):
        raise ArgumentError("problem document must be a JSON object")
    required = {"m", "n", "N", "interior", "boundary"}
    missing = required - set(doc)
    if missing:
        raise ArgumentError("missing required fields: %s"
                            % ", ".join(sorted(missing)))
    unknown = set(doc) - required - set(_META_KEYS)
    if unknown:
        raise ArgumentError("unknown fields: %s (allowed extras: %s)"
                            % (", ".join(sorted(unknown)),
                               ", ".join(_META_KEYS)))
    m = _positive_int(doc, "m")
    n = _positive_int(doc, "n")
    N = _positive_int(doc, "N")
    dim = n + 1

    entries = doc["interior"]
    if not isinstance(entries, list) or not entries:
        raise ArgumentError('"interior" must be a nonempty list')
    coeffs = {}
    for i, entry in enumerate(entries):
        where = "interior[%d]" % i
        if not isinstance(entry, dict) or set(entry) != {"alpha", "re", "im"}:
            raise ArgumentError('%s must have exactly the fields "alpha", '
                                '"re", "im"' % where)
        alpha = _exponent(entry["alpha"], dim, where + ".alpha")
        if alpha in coeffs:
            raise ArgumentError("%s repeats exponent %r" % (where, alpha))
        coeffs[alpha] = _pair_matrix({"re": entry["re"], "im": entry["im"]},
                                     N, where)
    try:
        sym = InteriorSymbol(order=2 * m, dim=dim, coeffs=coeffs)
    except ArgumentError as exc:
        raise ArgumentError('"interior": %s' % exc)

    rows_doc = doc["boundary"]
    if not isinstance(rows_doc, list) or not rows_doc:
        raise ArgumentError('"boundary" must be a nonempty list')
    rows = []
    for j, row_doc in enumerate(rows_doc):
        rwhere = "boundary[%d]" % j
        if not isinstance(row_doc, dict) or set(row_doc) != {"components"}:
            raise ArgumentError('%s must have exactly the field "components"'
                                % rwhere)
        comps_doc = row_doc["components"]
        if not isinstance(comps_doc, list) or not comps_doc:
            raise ArgumentError('%s.components must be a nonempty list'
                                % rwhere)
        comps = []
        for c, comp_doc in enumerate(comps_doc):
            cwhere = "%s.components[%d]" % (rwhere, c)
            if (not isinstance(comp_doc, dict)
                    or set(comp_doc) != {"k", "projection", "coeffs"}):
                raise ArgumentError('%s must have exactly the fields "k", '
                                    '"projection", "coeffs"' % cwhere)
            k = comp_doc["k"]
            if not isinstance(k, int) or isinstance(k, bool) or k < 0:
                raise ArgumentError("%s.k must be a nonnegative integer"
                                    % cwhere)
            proj = _pair_matrix(comp_doc["projection"], N,
                                cwhere + ".projection")
            coeffs_doc = comp_doc["coeffs"]
            if not isinstance(coeffs_doc, list) or not coeffs_doc:
                raise ArgumentError("%s.coeffs must be a nonempty list"
                                    % cwhere)
            bcoeffs = {}
            for b, coeff_doc in enumerate(coeffs_doc):
                bwhere = "%s.coeffs[%d]" % (cwhere, b)
                if (not isinstance(coeff_doc, dict)
                        or set(coeff_doc) != {"beta", "re", "im"}):
                    raise ArgumentError('%s must have exactly the fields '
                                        '"beta", "re", "im"' % bwhere)
                beta = _exponent(coeff_doc["beta"], dim, bwhere + ".beta")
                if beta in bcoeffs:
                    raise ArgumentError("%s repeats exponent %r"
                                        % (bwhere, beta))
                bcoeffs[beta] = _pair_matrix(
                    {"re": coeff_doc["re"], "im": coeff_doc["im"]},
                    N, bwhere)
            try:
                comps.append(BoundaryComponent(k=k, projection=proj,
                                               coeffs=bcoeffs, dim=dim))
            except ArgumentError as exc:
                raise ArgumentError("%s: %s" % (cwhere, exc))
        try:
            rows.append(BoundaryRow(comps))
        except ArgumentError as exc:
            raise ArgumentError("%s: %s" % (rwhere, exc))
    try:
        bspec = BoundaryOperatorSpec(rows)
        bspec.check_against(sym)
    except ArgumentError as exc:
        raise ArgumentError('"boundary": %s' % exc)
    return sym, bspec


def load_problem(path):
    """Load a problem JSON file.

    Raises
    ------
    ArgumentError
        With line and column on malformed JSON, or the schema complaint
        otherwise.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ArgumentError("cannot read %s: %s" % (path, exc))
    except json.JSONDecodeError as exc:
        raise ArgumentError("malformed JSON in %s at line %d column %d: %s"
                            % (path, exc.lineno, exc.colno, exc.msg))
    try:
        return problem_from_dict(doc)
    except ArgumentError as exc:
        raise ArgumentError("%s: %s" % (path, exc))


def save_problem(path, sym, bspec, name=None, description=None):
    """Write a problem JSON file (sorted keys, two-space indent)."""
    doc = problem_to_dict(sym, bspec, name=name, description=description)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_field(path, values):
    """Dump a complex array to the self-describing binary container."""
    values = np.ascontiguousarray(np.asarray(values, dtype="<c16"))
    header = {
        "dims": list(values.shape),
        "dtype": "complex128",
        "order": "C",
        "byteorder": "little",
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(values.tobytes(order="C"))


def read_field(path):
    """Read a binary field dump back into a complex array.

    Raises
    ------
    ArgumentError
        On a bad magic number, truncated file, or unsupported layout.
    """
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ArgumentError("cannot read %s: %s" % (path, exc))
    if len(raw) < len(MAGIC) + 4 or raw[:len(MAGIC)] != MAGIC:
        raise ArgumentError("%s is not a field dump (bad magic)" % path)
    (hlen,) = struct.unpack_from("<I", raw, len(MAGIC))
    start = len(MAGIC) + 4
    if len(raw) < start + hlen:
        raise ArgumentError("%s is truncated inside the header" % path)
    try:
        header = json.loads(raw[start:start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ArgumentError("%s has a malformed header: %s" % (path, exc))
    for key, want in (("dtype", "complex128"), ("order", "C"),
                      ("byteorder", "little")):
        if header.get(key) != want:
            raise ArgumentError("%s: unsupported %s %r (only %r)"
                                % (path, key, header.get(key), want))
    dims = header.get("dims")
    if (not isinstance(dims, list)
            or not all(isinstance(d, int) and d >= 0 for d in dims)):
        raise ArgumentError("%s: header dims must be nonnegative integers"
                            % path)
    count = int(np.prod(dims, dtype=np.int64)) if dims else 1
    payload = raw[start + hlen:]
    if len(payload) != 16 * count:
        raise ArgumentError("%s payload has %d bytes, dims %r need %d"
                            % (path, len(payload), dims, 16 * count))
    return np.frombuffer(payload, dtype="<c16").reshape(dims).copy()
