import math

from config import GALLERY_IDS, MIN_HORIZON

INFINITY_STRINGS = {"inf": math.inf, "+inf": math.inf, "-inf": -math.inf}
SLOT_KEYS = {"a", "b", "a_p", "b_p", "alt"}


def parse_extended(value):
    """Number, or one of the strings "inf"/"-inf". Returns None when neither."""
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str) and value.strip().lower() in INFINITY_STRINGS:
        return INFINITY_STRINGS[value.strip().lower()]
    return None


def validate_value(value, validator_name):
    """Returns (True, "") if valid, (False, "Error Message") if invalid"""
    if validator_name == "REQUIRED":
        return (value is not None, "Value is required")

    if value is None:
        return (True, "")  # Skip other checks if absent and not required

    if validator_name == "NUMBER":
        ok = isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)
        return (ok, "Must be a finite number")

    if validator_name == "EXTENDED_NUMBER":
        return (parse_extended(value) is not None, 'Must be a number or "inf"/"-inf"')

    if validator_name == "BOOLEAN":
        return (isinstance(value, bool), "Must be true or false")

    if validator_name == "POSITIVE_NUMBER":
        v = parse_extended(value)
        return (v is not None and math.isfinite(v) and v > 0, "Must be > 0")

    if validator_name == "P_EXPONENT":
        v = parse_extended(value)
        return (v is not None and math.isfinite(v) and v >= 1, "Must be a number >= 1")

    if validator_name == "HORIZON":
        ok = isinstance(value, int) and not isinstance(value, bool) and value >= MIN_HORIZON
        return (ok, f"Must be an integer >= {MIN_HORIZON}")

    if validator_name == "NON_EMPTY_LIST":
        return (isinstance(value, list) and len(value) > 0, "Must be a non-empty list")

    if validator_name == "GALLERY_ID":
        return (value in GALLERY_IDS, f"Must be one of {', '.join(GALLERY_IDS)}")

    if validator_name == "SLOT":
        return check_slot(value)

    return (True, "")


def check_slot(value):
    """A slot is a number, "inf"/"-inf", a monomial object, or a list of monomial objects."""
    if parse_extended(value) is not None:
        return (True, "")
    monomials = value if isinstance(value, list) else [value]
    if not monomials:
        return (False, "Slot list must not be empty")
    for m in monomials:
        if not isinstance(m, dict):
            return (False, "Slot must be a number, \"inf\", or {\"a\": .., \"b\": ..} monomials")
        unknown = set(m) - SLOT_KEYS
        if unknown:
            return (False, f"Unknown slot keys: {', '.join(sorted(unknown))}")
        if "a" not in m:
            return (False, "Monomial needs an \"a\" coefficient")
        for key in ("a", "b", "a_p", "b_p"):
            if key in m and parse_extended(m[key]) is None:
                return (False, f"Monomial \"{key}\" must be numeric")
        if "alt" in m and not isinstance(m["alt"], bool):
            return (False, "Monomial \"alt\" must be true or false")
    return (True, "")
