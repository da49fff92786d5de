"""
JSON codec for function, sequence and witness specs.

A spec document looks like

    {"kind": "sequence", "label": "E1", "p": 2,
     "domain": {"lo": 0, "hi": 1, "lo_closed": true, "hi_closed": true},
     "pieces": [{"lo": 0, "hi": {"a": 1, "b": -1}, "lo_closed": true, "hi_closed": true,
                 "terms": [{"coeff": {"a": 1, "b": 1, "b_p": -1}, "exponent": 0}]}, ...],
     "limit": {"pieces": [...]},
     "witness": {"kind": "complement", "intervals": [{"lo": 2, "hi": [{"a": 2}, {"a": 1, "b": -1}]}]}}

Slots are numbers, "inf"/"-inf", a monomial {"a", "b", "a_p", "b_p", "alt"}
meaning a·p^a_p · n^(b·p^b_p) · (-1)^n, or a list of monomials (their sum).
Every validation problem is collected and raised together as one SpecError.
"""
import json
from dataclasses import dataclass
from typing import Optional

from services.convergence import IntervalTemplate, WitnessTemplate
from services.func_model import (
    FunctionSequence, Monomial, PieceTemplate, PiecewiseFunction, Slot, TermTemplate, instantiate, zero_function,
)
from services.measure_core import Domain, Interval, encode_number
from utils.errors import ConvlabError, DomainError, SpecError
from utils.validators import parse_extended, validate_value

SPEC_KINDS = ("sequence", "function")


@dataclass
class SpecDocument:
    kind: str
    label: str
    p: float
    sequence: Optional[FunctionSequence] = None
    function: Optional[PiecewiseFunction] = None
    limit: Optional[PiecewiseFunction] = None
    witness: Optional[WitnessTemplate] = None
    source: str = "<spec>"

    @property
    def domain(self) -> Domain:
        return self.sequence.domain if self.sequence is not None else self.function.domain


class _Collector:
    def __init__(self):
        self.errors = []

    def check(self, path, value, *validators):
        for name in validators:
            ok, msg = validate_value(value, name)
            if not ok:
                self.errors.append((path, msg))
                return False
        return True

    def add(self, path, msg):
        self.errors.append((path, msg))


# ==========================================
#  DECODING
# ==========================================

def _slot(value) -> Slot:
    number = parse_extended(value)
    if number is not None:
        return Slot.const(number)
    items = value if isinstance(value, list) else [value]
    return Slot(tuple(
        Monomial(
            a=parse_extended(m["a"]),
            b=parse_extended(m.get("b", 0.0)),
            a_p=parse_extended(m.get("a_p", 0.0)),
            b_p=parse_extended(m.get("b_p", 0.0)),
            alt=bool(m.get("alt", False)),
        )
        for m in items
    ))


def _decode_domain(data, col: _Collector, path="domain") -> Optional[Domain]:
    if not isinstance(data, dict):
        col.add(path, "Must be an object with lo/hi/lo_closed/hi_closed")
        return None
    ok = col.check(f"{path}.lo", data.get("lo"), "REQUIRED", "EXTENDED_NUMBER")
    ok &= col.check(f"{path}.hi", data.get("hi"), "REQUIRED", "EXTENDED_NUMBER")
    ok &= col.check(f"{path}.lo_closed", data.get("lo_closed"), "BOOLEAN")
    ok &= col.check(f"{path}.hi_closed", data.get("hi_closed"), "BOOLEAN")
    if not ok:
        return None
    try:
        return Domain(Interval(parse_extended(data["lo"]), parse_extended(data["hi"]),
                               data.get("lo_closed", True), data.get("hi_closed", True)))
    except DomainError as e:
        col.add(path, str(e))
        return None


def _decode_pieces(data, col: _Collector, path):
    if not col.check(path, data, "REQUIRED", "NON_EMPTY_LIST"):
        return None
    pieces = []
    for i, raw in enumerate(data):
        ppath = f"{path}[{i}]"
        if not isinstance(raw, dict):
            col.add(ppath, "Piece must be an object")
            continue
        ok = col.check(f"{ppath}.lo", raw.get("lo"), "REQUIRED", "SLOT")
        ok &= col.check(f"{ppath}.hi", raw.get("hi"), "REQUIRED", "SLOT")
        ok &= col.check(f"{ppath}.lo_closed", raw.get("lo_closed"), "BOOLEAN")
        ok &= col.check(f"{ppath}.hi_closed", raw.get("hi_closed"), "BOOLEAN")
        terms = raw.get("terms")
        if not col.check(f"{ppath}.terms", terms, "REQUIRED", "NON_EMPTY_LIST"):
            continue
        decoded_terms = []
        for j, t in enumerate(terms):
            tpath = f"{ppath}.terms[{j}]"
            if not isinstance(t, dict):
                col.add(tpath, "Term must be an object with coeff and exponent")
                ok = False
                continue
            ok &= col.check(f"{tpath}.coeff", t.get("coeff"), "REQUIRED", "SLOT")
            ok &= col.check(f"{tpath}.exponent", t.get("exponent", 0), "SLOT")
            if ok:
                decoded_terms.append(TermTemplate(_slot(t["coeff"]), _slot(t.get("exponent", 0))))
        if ok:
            pieces.append(PieceTemplate(_slot(raw["lo"]), _slot(raw["hi"]),
                                        raw.get("lo_closed", True), raw.get("hi_closed", True),
                                        tuple(decoded_terms)))
    return tuple(pieces)


def _decode_witness(data, col: _Collector, path="witness") -> Optional[WitnessTemplate]:
    if not isinstance(data, dict) or data.get("kind") not in WitnessTemplate.KINDS:
        col.add(f"{path}.kind", f"Must be one of {', '.join(WitnessTemplate.KINDS)}")
        return None
    if data["kind"] == "full":
        return WitnessTemplate("full")
    intervals = data.get("intervals")
    if not col.check(f"{path}.intervals", intervals, "REQUIRED", "NON_EMPTY_LIST"):
        return None
    out = []
    for i, raw in enumerate(intervals):
        ipath = f"{path}.intervals[{i}]"
        ok = isinstance(raw, dict)
        if not ok:
            col.add(ipath, "Interval must be an object")
            continue
        ok &= col.check(f"{ipath}.lo", raw.get("lo"), "REQUIRED", "SLOT")
        ok &= col.check(f"{ipath}.hi", raw.get("hi"), "REQUIRED", "SLOT")
        ok &= col.check(f"{ipath}.lo_closed", raw.get("lo_closed"), "BOOLEAN")
        ok &= col.check(f"{ipath}.hi_closed", raw.get("hi_closed"), "BOOLEAN")
        if ok:
            out.append(IntervalTemplate(_slot(raw["lo"]), _slot(raw["hi"]),
                                        raw.get("lo_closed", True), raw.get("hi_closed", True)))
    return WitnessTemplate(data["kind"], tuple(out))


def _as_function(seq: FunctionSequence, col: _Collector, path) -> Optional[PiecewiseFunction]:
    constant = all(
        s.is_constant
        for tpl in seq.pieces
        for s in (tpl.lo, tpl.hi, *(x for t in tpl.terms for x in (t.coeff, t.exponent)))
    )
    if not constant:
        col.add(path, "Function slots must not depend on n")
        return None
    try:
        return instantiate(seq, 1)
    except ConvlabError as e:
        col.add(path, str(e))
        return None


def decode_spec(data, source="<spec>") -> SpecDocument:
    if not isinstance(data, dict):
        raise SpecError(f"{source}: top level must be a JSON object")
    col = _Collector()

    kind = data.get("kind", "sequence")
    if kind not in SPEC_KINDS:
        col.add("kind", f"Must be one of {', '.join(SPEC_KINDS)}")
    col.check("p", data.get("p"), "P_EXPONENT")
    p = float(parse_extended(data.get("p", 1.0)) or 1.0)
    label = str(data.get("label", source))

    domain = _decode_domain(data.get("domain"), col)
    pieces = _decode_pieces(data.get("pieces"), col, "pieces")
    witness = _decode_witness(data["witness"], col) if "witness" in data else None

    limit_pieces = None
    if "limit" in data:
        limit_data = data["limit"]
        if not isinstance(limit_data, dict):
            col.add("limit", "Must be an object with pieces")
        else:
            limit_pieces = _decode_pieces(limit_data.get("pieces"), col, "limit.pieces")

    if col.errors or domain is None or pieces is None:
        raise SpecError(f"{source}: invalid spec ({len(col.errors)} problem(s))", fields=col.errors)

    seq = FunctionSequence(domain, pieces, p, label)
    doc = SpecDocument(kind, label, p, source=source, witness=witness)
    if kind == "function":
        doc.function = _as_function(seq, col, "pieces")
    else:
        for n in (1, 2):
            try:
                instantiate(seq, n)
            except ConvlabError as e:
                col.add("pieces", str(e))
                break
        doc.sequence = seq
    if limit_pieces is not None:
        doc.limit = _as_function(FunctionSequence(domain, limit_pieces, p), col, "limit")
    elif kind == "sequence":
        doc.limit = zero_function(domain)

    if col.errors:
        raise SpecError(f"{source}: invalid spec ({len(col.errors)} problem(s))", fields=col.errors)
    return doc


def loads_spec(text, source="<spec>") -> SpecDocument:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError(f"{source}: {e.msg}", line=e.lineno, column=e.colno) from e
    return decode_spec(data, source)


def load_spec(path) -> SpecDocument:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise SpecError(f"Cannot read spec file {path}: {e.strerror}") from e
    return loads_spec(text, source=str(path))


# ==========================================
#  ENCODING
# ==========================================

def encode_slot(slot: Slot):
    if len(slot.monomials) == 1:
        m = slot.monomials[0]
        if m.b == 0 and not m.alt and not m.a_p:
            return encode_number(m.a)
    out = []
    for m in slot.monomials:
        d = {"a": encode_number(m.a)}
        if m.b:
            d["b"] = m.b
        if m.a_p:
            d["a_p"] = m.a_p
        if m.b_p:
            d["b_p"] = m.b_p
        if m.alt:
            d["alt"] = True
        out.append(d)
    return out[0] if len(out) == 1 else out


def _encode_piece_templates(pieces):
    return [
        {
            "lo": encode_slot(t.lo),
            "hi": encode_slot(t.hi),
            "lo_closed": t.lo_closed,
            "hi_closed": t.hi_closed,
            "terms": [{"coeff": encode_slot(tt.coeff), "exponent": encode_slot(tt.exponent)} for tt in t.terms],
        }
        for t in pieces
    ]


def encode_sequence(seq: FunctionSequence) -> dict:
    return {
        "kind": "sequence",
        "label": seq.label,
        "p": seq.p_exponent,
        "domain": seq.domain.carrier.to_dict(),
        "pieces": _encode_piece_templates(seq.pieces),
    }


def encode_function(f: PiecewiseFunction, p: float = 1.0, label: str = "") -> dict:
    seq = FunctionSequence.from_function(f, p, label)
    d = encode_sequence(seq)
    d["kind"] = "function"
    return d


def encode_witness(w: WitnessTemplate) -> dict:
    d = {"kind": w.kind}
    if w.kind != "full":
        d["intervals"] = [
            {"lo": encode_slot(t.lo), "hi": encode_slot(t.hi), "lo_closed": t.lo_closed, "hi_closed": t.hi_closed}
            for t in w.intervals
        ]
    return d
