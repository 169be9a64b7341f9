"""
Report I/O
ComplexDocument JSON (complexes with optional cohomology representatives),
deterministic JSON payloads and the zeta evaluation CSV
"""

import csv
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional, TextIO, Tuple, Union

import numpy as np

from .errors import StructuralError
from .fried_dynamics import ZetaEvaluation
from .graded_core import Complex, GradedMap, GradedSpace

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["sigma_re", "sigma_im", "K", "value_re", "value_im", "tail_bound", "closed_re", "closed_im", "abs_diff"]
MAP_SHIFTS = {"d": 1, "delta": -1}


def _encode_matrix(matrix: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(matrix, dtype=complex)]


def _decode_matrix(data, shape: Tuple[int, int], where: str) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.size == 0:
        return np.zeros(shape, dtype=complex)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise StructuralError(f"{where}: entries must be [re, im] pairs")
    if arr.shape[:2] != shape:
        raise StructuralError(f"{where}: shape {arr.shape[:2]}, expected {shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def complex_to_document(c: Complex, representatives: Optional[Mapping[int, np.ndarray]] = None) -> Dict:
    """
    Encode a complex as a ComplexDocument

    Args:
        c: complex with d and/or δ
        representatives: optional closed columns per degree, stored under 'h'

    Returns:
        JSON-ready dictionary
    """
    doc = {"degrees": [c.space.p, c.space.q], "dims": list(c.space.dims), "maps": {}}
    for name, f in (("d", c.d), ("delta", c.delta)):
        if f is not None:
            doc["maps"][name] = {
                "shift": f.shift,
                "blocks": {str(i): _encode_matrix(b) for i, b in sorted(f.blocks.items())},
            }
    if representatives:
        doc["h"] = {str(i): _encode_matrix(h) for i, h in sorted(representatives.items())}
    return doc


def document_to_complex(doc: Mapping) -> Tuple[Complex, Optional[Dict[int, np.ndarray]]]:
    """Decode a ComplexDocument; malformed documents raise StructuralError"""
    try:
        p, q = (int(x) for x in doc["degrees"])
        space = GradedSpace.from_range(p, q, doc["dims"])
        maps = doc["maps"]
    except (KeyError, TypeError, ValueError) as exc:
        raise StructuralError(f"malformed complex document: {exc}") from exc

    decoded = {}
    for name, entry in maps.items():
        if name not in MAP_SHIFTS:
            raise StructuralError(f"unknown map '{name}' (expected d or delta)")
        shift = int(entry.get("shift", MAP_SHIFTS[name]))
        if shift != MAP_SHIFTS[name]:
            raise StructuralError(f"map '{name}' must have shift {MAP_SHIFTS[name]:+d}")
        blocks = {
            int(i): _decode_matrix(b, (space.dim(int(i) + shift), space.dim(int(i))), f"{name} block {i}")
            for i, b in entry.get("blocks", {}).items()
        }
        decoded[name] = GradedMap(space, space, shift, blocks)

    representatives = None
    if "h" in doc:
        representatives = {}
        for i, h in doc["h"].items():
            arr = np.asarray(h, dtype=float)
            columns = arr.shape[1] if arr.ndim == 3 else 0
            representatives[int(i)] = _decode_matrix(h, (space.dim(int(i)), columns), f"h block {i}")
    return Complex(space, decoded.get("d"), decoded.get("delta")), representatives


def load_complex_document(path: Union[str, Path]) -> Tuple[Complex, Optional[Dict[int, np.ndarray]]]:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    logger.info(f"📥 Loaded complex document {path}")
    return document_to_complex(doc)


def save_complex_document(path: Union[str, Path], c: Complex,
                          representatives: Optional[Mapping[int, np.ndarray]] = None):
    Path(path).write_text(dumps_payload(complex_to_document(c, representatives)), encoding="utf-8")


def dumps_payload(payload: Mapping) -> str:
    """Stable JSON text: sorted keys, fixed indentation, trailing newline"""
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def emit(text: str, out: Optional[Union[str, Path]], stream: TextIO):
    """Write to `out` when given, else to `stream`"""
    if out is None:
        stream.write(text)
        return
    Path(out).write_text(text, encoding="utf-8")
    logger.info(f"✅ Wrote {out}")


def _format_cell(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".17g")


def write_zeta_csv(evaluations: Iterable[ZetaEvaluation], stream: TextIO):
    writer = csv.DictWriter(stream, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for evaluation in evaluations:
        row = evaluation.to_row()
        writer.writerow({key: _format_cell(row[key]) for key in CSV_COLUMNS})
