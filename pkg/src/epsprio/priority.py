"""Priority field signals: urgency and incremental parameters.

The Priority field is a structured-field dictionary. Only two members carry
meaning here: ``u`` (urgency, integer 0..7, lower is more urgent) and ``i``
(incremental, boolean). Everything else is parsed for syntax and dropped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

DEFAULT_URGENCY = 3
MIN_URGENCY = 0
MAX_URGENCY = 7


class MalformedField(ValueError):
    """The input is not a syntactically valid Priority dictionary."""


class UrgencyLevel(int):
    """An integer urgency in [0, 7]; numerically smaller means more urgent."""

    def __new__(cls, value: int) -> "UrgencyLevel":
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"urgency must be an int, got {value!r}")
        if not MIN_URGENCY <= value <= MAX_URGENCY:
            raise ValueError(f"urgency {value} outside [{MIN_URGENCY}, {MAX_URGENCY}]")
        return super().__new__(cls, value)

    def __repr__(self) -> str:
        return f"UrgencyLevel({int(self)})"

    def more_urgent_than(self, other: int) -> bool:
        return int(self) < int(other)


@dataclass(frozen=True)
class PriorityParams:
    urgency: int = DEFAULT_URGENCY
    incremental: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "urgency", UrgencyLevel(self.urgency))
        if not isinstance(self.incremental, bool):
            raise TypeError(f"incremental must be a bool, got {self.incremental!r}")


@dataclass(frozen=True)
class UpdateMask:
    """Which members of an update are present and should overwrite the base."""

    urgency_present: bool = False
    incremental_present: bool = False


# --- structured-field dictionary syntax (subset sufficient to skip unknown members)

_KEY = re.compile(rb"[a-z*][a-z0-9_\-.*]*")
_INTEGER = re.compile(rb"-?[0-9]{1,15}")
_DECIMAL = re.compile(rb"-?[0-9]{1,12}\.[0-9]{1,3}")
_TOKEN = re.compile(rb"[A-Za-z*][!#$%&'*+\-.^_`|~0-9A-Za-z:/]*")
_BYTES = re.compile(rb":[A-Za-z0-9+/=]*:")
_OWS = b" \t"


class _Cursor:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def at_end(self) -> bool:
        return self.pos >= len(self.data)

    def peek(self) -> int | None:
        return None if self.at_end() else self.data[self.pos]

    def match(self, pattern: re.Pattern) -> bytes | None:
        m = pattern.match(self.data, self.pos)
        if m is None:
            return None
        self.pos = m.end()
        return m.group()

    def skip(self, chars: bytes) -> None:
        while not self.at_end() and self.data[self.pos] in chars:
            self.pos += 1


def _parse_string(cur: _Cursor) -> str:
    cur.pos += 1  # opening quote
    out = bytearray()
    while not cur.at_end():
        ch = cur.data[cur.pos]
        cur.pos += 1
        if ch == 0x5C:  # backslash
            if cur.at_end() or cur.data[cur.pos] not in b'"\\':
                raise MalformedField("bad escape in string")
            out.append(cur.data[cur.pos])
            cur.pos += 1
        elif ch == 0x22:
            return out.decode("ascii")
        elif ch < 0x20 or ch > 0x7E:
            raise MalformedField("non-printable character in string")
        else:
            out.append(ch)
    raise MalformedField("unterminated string")


def _parse_bare_item(cur: _Cursor) -> object:
    ch = cur.peek()
    if ch is None:
        raise MalformedField("missing value")
    if ch == 0x22:
        return _parse_string(cur)
    if ch == 0x3F:  # '?'
        flag = cur.data[cur.pos:cur.pos + 2]
        if flag == b"?1":
            cur.pos += 2
            return True
        if flag == b"?0":
            cur.pos += 2
            return False
        raise MalformedField("bad boolean")
    if ch == 0x3A:  # ':'
        if cur.match(_BYTES) is None:
            raise MalformedField("bad byte sequence")
        return b""
    if ch == 0x2D or 0x30 <= ch <= 0x39:
        dec = cur.match(_DECIMAL)
        if dec is not None:
            return float(dec)
        num = cur.match(_INTEGER)
        if num is None:
            raise MalformedField("bad number")
        nxt = cur.peek()
        if nxt is not None and (0x30 <= nxt <= 0x39 or nxt == 0x2E):
            raise MalformedField("number too long")
        return int(num)
    tok = cur.match(_TOKEN)
    if tok is None:
        raise MalformedField(f"unexpected character {chr(ch)!r}")
    return tok.decode("ascii")


def _skip_parameters(cur: _Cursor) -> None:
    while cur.peek() == 0x3B:  # ';'
        cur.pos += 1
        cur.skip(b" ")
        if cur.match(_KEY) is None:
            raise MalformedField("bad parameter key")
        if cur.peek() == 0x3D:
            cur.pos += 1
            _parse_bare_item(cur)


def _parse_dictionary(data: bytes) -> dict[str, object]:
    cur = _Cursor(data.strip(b" "))
    members: dict[str, object] = {}
    if cur.at_end():
        return members
    while True:
        key = cur.match(_KEY)
        if key is None:
            raise MalformedField(f"bad dictionary key at offset {cur.pos}")
        if cur.peek() == 0x3D:  # '='
            cur.pos += 1
            if cur.peek() == 0x28:  # '(' inner lists are not supported
                raise MalformedField("inner lists are not supported")
            value = _parse_bare_item(cur)
        else:
            value = True
        _skip_parameters(cur)
        members[key.decode("ascii")] = value
        cur.skip(_OWS)
        if cur.at_end():
            return members
        if cur.peek() != 0x2C:
            raise MalformedField(f"expected ',' at offset {cur.pos}")
        cur.pos += 1
        cur.skip(_OWS)
        if cur.at_end():
            raise MalformedField("trailing comma")


def _as_bytes(text: Union[bytes, bytearray, str]) -> bytes:
    if isinstance(text, str):
        try:
            return text.encode("ascii")
        except UnicodeEncodeError as exc:
            raise MalformedField("non-ASCII field value") from exc
    return bytes(text)


def parse_priority_update(text: Union[bytes, str]) -> tuple[PriorityParams, UpdateMask]:
    """Parse a Priority field and report which recognized members were present.

    A ``u`` outside [0, 7] and a non-boolean ``i`` count as absent.

    Raises:
        MalformedField: the value is not a valid dictionary, or ``u`` is not
            an integer.
    """
    members = _parse_dictionary(_as_bytes(text))
    urgency = DEFAULT_URGENCY
    incremental = False
    u_present = i_present = False

    if "u" in members:
        u = members["u"]
        if isinstance(u, bool) or not isinstance(u, int):
            raise MalformedField(f"urgency is not an integer: {u!r}")
        if MIN_URGENCY <= u <= MAX_URGENCY:
            urgency, u_present = u, True
    if "i" in members and isinstance(members["i"], bool):
        incremental, i_present = members["i"], True

    return PriorityParams(urgency, incremental), UpdateMask(u_present, i_present)


def parse_priority_field(text: Union[bytes, str]) -> PriorityParams:
    """Parse a Priority field value, applying defaults for absent members.

    >>> parse_priority_field(b"u=2, i")
    PriorityParams(urgency=UrgencyLevel(2), incremental=True)
    """
    return parse_priority_update(text)[0]


def serialize_priority_field(params: PriorityParams) -> bytes:
    """Canonical form: ``u=<n>``, followed by ``, i`` when incremental."""
    out = b"u=%d" % params.urgency
    if params.incremental:
        out += b", i"
    return out


def apply_update(base: PriorityParams, update: PriorityParams, mask: UpdateMask) -> PriorityParams:
    return PriorityParams(
        urgency=update.urgency if mask.urgency_present else base.urgency,
        incremental=update.incremental if mask.incremental_present else base.incremental,
    )
