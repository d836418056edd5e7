#!/usr/bin/env python3
"""Regenerate include/asterisk/unicode_tables.hpp.

The byte-level BPE pre-tokenizer needs three codepoint classes: \\p{L},
\\p{N} and \\s, with the same semantics as the `regex` module used by the
reference GPT-2 tokenizer. We enumerate every codepoint once and emit
sorted [lo, hi] range tables for binary search.

Usage: python3 tools/gen_unicode_tables.py > include/asterisk/unicode_tables.hpp
"""
import sys
import regex


def ranges_for(pattern):
    pat = regex.compile(pattern)
    ranges = []
    start = None
    for cp in range(0x110000):
        if 0xD800 <= cp <= 0xDFFF:
            member = False
        else:
            member = pat.fullmatch(chr(cp)) is not None
        if member and start is None:
            start = cp
        elif not member and start is not None:
            ranges.append((start, cp - 1))
            start = None
    if start is not None:
        ranges.append((start, 0x10FFFF))
    return ranges


def emit(name, ranges, out):
    out.write(f"inline constexpr uint32_t {name}[][2] = {{\n")
    for i in range(0, len(ranges), 6):
        row = ", ".join(f"{{0x{lo:X}, 0x{hi:X}}}" for lo, hi in ranges[i:i + 6])
        out.write(f"    {row},\n")
    out.write("};\n\n")


def main():
    out = sys.stdout
    letters = ranges_for(r"\p{L}")
    numbers = ranges_for(r"\p{N}")
    spaces = ranges_for(r"\s")
    out.write("// Generated by tools/gen_unicode_tables.py -- do not edit by hand.\n")
    out.write(f"// regex module version: {regex.__version__}\n")
    out.write("#pragma once\n\n#include <cstdint>\n\nnamespace asterisk::unicode_tables {\n\n")
    emit("kLetterRanges", letters, out)
    emit("kNumberRanges", numbers, out)
    emit("kSpaceRanges", spaces, out)
    out.write("}  // namespace asterisk::unicode_tables\n")
    print(f"letters: {len(letters)} ranges, numbers: {len(numbers)}, spaces: {len(spaces)}",
          file=sys.stderr)


if __name__ == "__main__":
    main()
