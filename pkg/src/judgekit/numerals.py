"""Chinese numeral parsing and rendering.

Judgment documents write durations and amounts with Chinese numerals
(有期徒刑三年六个月, 罚金人民币二千元) but occasionally use Arabic digits.
``parse_chinese_numeral`` accepts both and is idempotent on Arabic input;
``int_to_chinese`` renders the canonical form the parser inverts, which is
what the deterministic document writer emits.
"""

from __future__ import annotations

import re

from .errors import NumeralParseError

_DIGITS = {
    "〇": 0, "零": 0, "一": 1, "二": 2, "两": 2, "三": 3, "四": 4,
    "五": 5, "六": 6, "七": 7, "八": 8, "九": 9,
}
# Arabic digits may appear inside a unit expression, e.g. 3千.
_DIGITS.update({str(d): d for d in range(10)})

_SMALL_UNITS = {"十": 10, "百": 100, "千": 1000}

_FULLWIDTH = str.maketrans("０１２３４５６７８９", "0123456789")

# Character class for grabbing a numeral token out of running text.
NUMERAL_CHARS = "0-9０-９〇零一二三四五六七八九两十百千万亿"
NUMERAL_RE = re.compile(f"[{NUMERAL_CHARS}]+")

_RENDER_DIGITS = "零一二三四五六七八九"


def parse_chinese_numeral(text: str) -> int:
    """Parse a Chinese or Arabic numeral into a non-negative integer.

    Raises NumeralParseError for anything outside the numeral grammar.
    """
    s = text.strip().translate(_FULLWIDTH)
    if not s:
        raise NumeralParseError(text)
    if s.isascii() and s.isdigit():
        return int(s)
    if "亿" in s:
        left, _, right = s.partition("亿")
        if "亿" in right or not left:
            raise NumeralParseError(text)
        high = _parse_wan(left, text)
        low = _parse_wan(right, text) if right else 0
        return high * 10**8 + low
    return _parse_wan(s, text)


def _parse_wan(s: str, original: str) -> int:
    if "万" in s:
        left, _, right = s.partition("万")
        if "万" in right or not left:
            raise NumeralParseError(original)
        high = _parse_section(left, original)
        low = _parse_section(right, original) if right else 0
        if low >= 10000:
            raise NumeralParseError(original)
        return high * 10000 + low
    return _parse_section(s, original)


def _parse_section(s: str, original: str) -> int:
    """Parse a numeral below 100000 (digits plus 十/百/千)."""
    if not s:
        raise NumeralParseError(original)
    total = 0
    pending = -1  # digit(s) waiting for a unit; -1 = none
    prev_ascii = False  # Arabic digit runs accumulate positionally (35万)
    last_unit = 10000  # units must strictly descend within a section
    for ch in s:
        if ch in _DIGITS:
            d = _DIGITS[ch]
            if ch.isascii():
                if prev_ascii:
                    pending = pending * 10 + d
                elif pending == 0:
                    pending = d  # 零 then digits: 零5
                elif pending > 0:
                    raise NumeralParseError(original)
                else:
                    pending = d
                prev_ascii = True
                continue
            prev_ascii = False
            if pending > 0 and d != 0:
                raise NumeralParseError(original)
            if pending <= 0:
                pending = d if d or pending < 0 else 0
        elif ch in _SMALL_UNITS:
            prev_ascii = False
            unit = _SMALL_UNITS[ch]
            if unit >= last_unit:
                raise NumeralParseError(original)
            if pending <= 0:
                # bare leading 十 means one ten (十五 = 15)
                if unit == 10 and pending == -1 and total == 0:
                    pending = 1
                else:
                    raise NumeralParseError(original)
            total += pending * unit
            pending = -1
            last_unit = unit
        else:
            raise NumeralParseError(original)
    if pending > 0:
        total += pending
    return total


def int_to_chinese(n: int) -> str:
    """Render a non-negative integer as a Chinese numeral.

    The output round-trips through parse_chinese_numeral.
    """
    if n < 0:
        raise ValueError("negative numbers are not rendered")
    if n == 0:
        return "零"
    yi, rest = divmod(n, 10**8)
    wan, low = divmod(rest, 10**4)
    parts: list[str] = []
    if yi:
        parts.append(_render_section(yi) + "亿")
    if wan:
        if yi and wan < 1000:
            parts.append("零")
        parts.append(_render_section(wan) + "万")
    if low:
        if (wan and low < 1000) or (not wan and yi):
            parts.append("零")
        parts.append(_render_section(low))
    out = "".join(parts)
    if out.startswith("一十"):
        out = out[1:]
    return out


def _render_section(x: int) -> str:
    parts: list[str] = []
    started = False
    zero_gap = False
    for unit_val, unit in ((1000, "千"), (100, "百"), (10, "十"), (1, "")):
        d = x // unit_val % 10
        if d == 0:
            if started:
                zero_gap = True
            continue
        if zero_gap:
            parts.append("零")
            zero_gap = False
        parts.append(_RENDER_DIGITS[d] + unit)
        started = True
    return "".join(parts)
