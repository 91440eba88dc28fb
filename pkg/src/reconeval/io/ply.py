"""PLY reader and writer for point clouds and triangle meshes.

Supports ASCII and binary little-endian PLY 1.0 with float32/float64 vertex
coordinates, optional uchar red/green/blue, and triangular faces. Extra
scalar properties with standard PLY types are parsed and discarded; a
property with an unknown type name is an error because its byte width is
undefined.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ..errors import ParseError
from ..geometry import PointCloud, TriangleMesh

_SCALAR_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}

_FLOAT_CODES = {"f4", "f8"}


@dataclass
class _Property:
    name: str
    dtype: str  # numpy code for scalars
    is_list: bool = False
    count_dtype: str = ""


@dataclass
class _Element:
    name: str
    count: int
    properties: list


def _parse_header(fh, path):
    line = fh.readline()
    if line.strip() != b"ply":
        raise ParseError(f"{path}: not a PLY file (missing 'ply' magic)")
    fmt = None
    elements: list[_Element] = []
    while True:
        raw = fh.readline()
        if not raw:
            raise ParseError(f"{path}: unexpected end of header")
        try:
            line = raw.decode("ascii").strip()
        except UnicodeDecodeError:
            raise ParseError(f"{path}: non-ASCII bytes in header") from None
        if not line or line.startswith("comment") or line.startswith("obj_info"):
            continue
        if line == "end_header":
            break
        fields = line.split()
        if fields[0] == "format":
            if len(fields) != 3 or fields[2] != "1.0":
                raise ParseError(f"{path}: malformed format line '{line}'")
            if fields[1] not in ("ascii", "binary_little_endian"):
                raise ParseError(f"{path}: unsupported format '{fields[1]}'")
            fmt = fields[1]
        elif fields[0] == "element":
            if len(fields) != 3:
                raise ParseError(f"{path}: malformed element line '{line}'")
            try:
                count = int(fields[2])
            except ValueError:
                raise ParseError(f"{path}: bad element count in '{line}'") from None
            if count < 0:
                raise ParseError(f"{path}: negative element count in '{line}'")
            elements.append(_Element(fields[1], count, []))
        elif fields[0] == "property":
            if not elements:
                raise ParseError(f"{path}: property before any element")
            if len(fields) >= 2 and fields[1] == "list":
                if len(fields) != 5:
                    raise ParseError(f"{path}: malformed list property '{line}'")
                count_t, item_t, name = fields[2], fields[3], fields[4]
                if count_t not in _SCALAR_TYPES or item_t not in _SCALAR_TYPES:
                    raise ParseError(f"{path}: unknown property type in '{line}'")
                elements[-1].properties.append(
                    _Property(name, _SCALAR_TYPES[item_t], True, _SCALAR_TYPES[count_t])
                )
            else:
                if len(fields) != 3:
                    raise ParseError(f"{path}: malformed property line '{line}'")
                if fields[1] not in _SCALAR_TYPES:
                    raise ParseError(f"{path}: unknown property type '{fields[1]}'")
                elements[-1].properties.append(_Property(fields[2], _SCALAR_TYPES[fields[1]]))
        else:
            raise ParseError(f"{path}: unrecognized header line '{line}'")
    if fmt is None:
        raise ParseError(f"{path}: header has no format line")
    return fmt, elements


class _AsciiTokens:
    def __init__(self, data: bytes, path):
        try:
            text = data.decode("ascii")
        except UnicodeDecodeError:
            raise ParseError(f"{path}: non-ASCII bytes in ASCII body") from None
        self.tokens = text.split()
        self.pos = 0
        self.path = path

    def next(self) -> str:
        if self.pos >= len(self.tokens):
            raise ParseError(f"{self.path}: unexpected end of data")
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def number(self, dtype: str):
        tok = self.next()
        try:
            return float(tok) if dtype in _FLOAT_CODES else int(tok)
        except ValueError:
            raise ParseError(f"{self.path}: bad numeric token '{tok}'") from None


class _BinaryCursor:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def read(self, dtype: str):
        size = int(dtype[1])
        if self.pos + size > len(self.data):
            raise ParseError(f"{self.path}: unexpected end of data")
        value = np.frombuffer(self.data, dtype="<" + dtype, count=1, offset=self.pos)[0]
        self.pos += size
        return value.item()


def _read_element_ascii(tokens: _AsciiTokens, element: _Element):
    rows = []
    for _ in range(element.count):
        row = {}
        for prop in element.properties:
            if prop.is_list:
                n = int(tokens.number(prop.count_dtype))
                if n < 0:
                    raise ParseError(f"{tokens.path}: negative list length")
                row[prop.name] = [tokens.number(prop.dtype) for _ in range(n)]
            else:
                row[prop.name] = tokens.number(prop.dtype)
        rows.append(row)
    return rows


def _read_element_binary(cursor: _BinaryCursor, element: _Element):
    # Fast path: fixed-size records with no list properties.
    if not any(p.is_list for p in element.properties):
        dt = np.dtype([(p.name, "<" + p.dtype) for p in element.properties])
        end = cursor.pos + dt.itemsize * element.count
        if end > len(cursor.data):
            raise ParseError(f"{cursor.path}: unexpected end of data")
        table = np.frombuffer(cursor.data, dtype=dt, count=element.count, offset=cursor.pos)
        cursor.pos = end
        return table
    rows = []
    for _ in range(element.count):
        row = {}
        for prop in element.properties:
            if prop.is_list:
                n = int(cursor.read(prop.count_dtype))
                if n < 0:
                    raise ParseError(f"{cursor.path}: negative list length")
                row[prop.name] = [cursor.read(prop.dtype) for _ in range(n)]
            else:
                row[prop.name] = cursor.read(prop.dtype)
        rows.append(row)
    return rows


def _column(rows, name: str) -> np.ndarray:
    if isinstance(rows, np.ndarray):
        return np.asarray(rows[name])
    return np.array([row[name] for row in rows])


def read_ply(path):
    """Read a PLY file; returns a TriangleMesh when a face element is
    present, otherwise a PointCloud."""
    with open(path, "rb") as fh:
        fmt, elements = _parse_header(fh, path)
        body = fh.read()

    names = [e.name for e in elements]
    if "vertex" not in names:
        raise ParseError(f"{path}: no vertex element")

    reader = _AsciiTokens(body, path) if fmt == "ascii" else _BinaryCursor(body, path)
    parsed = {}
    for element in elements:
        if fmt == "ascii":
            parsed[element.name] = _read_element_ascii(reader, element)
        else:
            parsed[element.name] = _read_element_binary(reader, element)

    vertex_element = elements[names.index("vertex")]
    vprops = {p.name: p for p in vertex_element.properties}
    for coord in ("x", "y", "z"):
        if coord not in vprops:
            raise ParseError(f"{path}: vertex element lacks property '{coord}'")
        if vprops[coord].is_list or vprops[coord].dtype not in _FLOAT_CODES:
            raise ParseError(f"{path}: vertex property '{coord}' must be float32 or float64")
    rows = parsed["vertex"]
    vertices = np.stack([_column(rows, c).astype(np.float64) for c in ("x", "y", "z")], axis=1)

    colors = None
    if all(c in vprops for c in ("red", "green", "blue")):
        if all(not vprops[c].is_list and vprops[c].dtype == "u1" for c in ("red", "green", "blue")):
            colors = np.stack(
                [_column(rows, c).astype(np.uint8) for c in ("red", "green", "blue")], axis=1
            )

    if "face" in names:
        face_element = elements[names.index("face")]
        list_props = [p for p in face_element.properties if p.is_list]
        index_prop = next(
            (p for p in list_props if p.name in ("vertex_indices", "vertex_index")), None
        )
        if index_prop is None:
            raise ParseError(f"{path}: face element lacks a vertex_indices list")
        faces = []
        for i, row in enumerate(parsed["face"]):
            idx = row[index_prop.name]
            if len(idx) != 3:
                raise ParseError(f"{path}: face {i} has {len(idx)} vertices, only triangles "
                                 f"are supported")
            faces.append([int(v) for v in idx])
        faces_arr = np.array(faces, dtype=np.int64).reshape(-1, 3)
        if faces_arr.size and (faces_arr.min() < 0 or faces_arr.max() >= vertices.shape[0]):
            raise ParseError(f"{path}: face vertex index out of range")
        try:
            return TriangleMesh(vertices, faces_arr)
        except ValueError as exc:
            raise ParseError(f"{path}: {exc}") from None
    try:
        return PointCloud(vertices, colors)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None


def write_ply(obj, path, binary: bool = False) -> None:
    """Write a PointCloud or TriangleMesh as PLY (coordinates as float64)."""
    if isinstance(obj, PointCloud):
        vertices, faces, colors = obj.points, None, obj.colors
    elif isinstance(obj, TriangleMesh):
        vertices, faces, colors = obj.vertices, obj.faces, None
    else:
        raise TypeError(f"cannot write {type(obj).__name__} as PLY")

    header = ["ply"]
    header.append("format binary_little_endian 1.0" if binary else "format ascii 1.0")
    header.append(f"element vertex {len(vertices)}")
    header += ["property double x", "property double y", "property double z"]
    if colors is not None:
        header += ["property uchar red", "property uchar green", "property uchar blue"]
    if faces is not None:
        header.append(f"element face {len(faces)}")
        header.append("property list uchar int vertex_indices")
    header.append("end_header")

    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            for i, v in enumerate(vertices):
                fh.write(struct.pack("<3d", *v))
                if colors is not None:
                    fh.write(struct.pack("<3B", *(int(c) for c in colors[i])))
            if faces is not None:
                for f in faces:
                    fh.write(struct.pack("<B3i", 3, *(int(v) for v in f)))
        else:
            for i, v in enumerate(vertices):
                line = " ".join(repr(float(c)) for c in v)
                if colors is not None:
                    line += " " + " ".join(str(int(c)) for c in colors[i])
                fh.write((line + "\n").encode("ascii"))
            if faces is not None:
                for f in faces:
                    fh.write(("3 " + " ".join(str(int(v)) for v in f) + "\n").encode("ascii"))
