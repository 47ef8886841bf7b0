"""Binary-prefix byte units. Internal quantities are bytes, FIL and days."""

KiB = 2**10
MiB = 2**20
GiB = 2**30
TiB = 2**40
PiB = 2**50
EiB = 2**60

DEFAULT_SECTOR_SIZE = 32 * GiB

FILPLUS_MULTIPLIER = 10

_UNITS = {
    "B": 1,
    "KIB": KiB,
    "MIB": MiB,
    "GIB": GiB,
    "TIB": TiB,
    "PIB": PiB,
    "EIB": EiB,
}


def parse_bytes(value):
    """Parse a byte quantity.

    Accepts plain numbers (bytes) or strings such as ``"1.5 PiB"`` / ``"32GiB"``.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a byte quantity: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip()
    idx = len(text)
    while idx > 0 and text[idx - 1].isalpha():
        idx -= 1
    number, unit = text[:idx].strip(), text[idx:].upper()
    if not unit:
        unit = "B"
    if unit not in _UNITS:
        raise ValueError(f"unknown byte unit {text[idx:]!r} in {value!r}")
    try:
        return float(number) * _UNITS[unit]
    except ValueError:
        raise ValueError(f"not a byte quantity: {value!r}") from None
