"""Tokenizer for the supported Python subset.

Produces a flat token stream with INDENT/DEDENT tokens derived from leading
whitespace (tab = 8 columns), implicit line joining inside brackets, and
byte-offset spans so extracted labels can be checked against the raw file.
"""

from dataclasses import dataclass

KEYWORDS = {
    "import", "from", "as", "if", "elif", "else", "while", "for", "in",
    "def", "return", "and", "or", "not", "is",
    # Reserved words outside the subset; the parser rejects the statement.
    "class", "try", "except", "finally", "with", "raise", "assert", "del",
    "global", "nonlocal", "yield", "lambda", "pass", "break", "continue",
    "async", "await",
}

# Multi-character operators first so maximal munch works on a sorted scan.
_OPERATORS = [
    "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "->", ":=",
    "+", "-", "*", "/", "%", "@", "&", "|", "^", "~",
    "<", ">", "=", ".", ",", ":", ";", "(", ")", "[", "]", "{", "}",
]

_STRING_PREFIXES = {"r", "b", "u", "f", "rb", "br", "fr", "rf", "bR", "Rb"}


class LexicalError(Exception):
    """Unrecoverable lexical failure; the whole file must be skipped."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (char offset {offset})")
        self.offset = offset


@dataclass
class Token:
    type: str       # NAME KEYWORD NUMBER STRING OP NEWLINE INDENT DEDENT ENDMARKER ERROR
    text: str
    start: int      # byte offset into the UTF-8 encoding of the source
    end: int
    subtype: str = ""   # for NUMBER: int/float/complex

    def __repr__(self):
        return f"Token({self.type}, {self.text!r})"


def _byte_offsets(source: str):
    """Cumulative UTF-8 byte offset for every char index (length len+1)."""
    offs = [0] * (len(source) + 1)
    pos = 0
    for i, ch in enumerate(source):
        offs[i] = pos
        pos += len(ch.encode("utf-8"))
    offs[len(source)] = pos
    return offs


def _is_name_start(ch):
    return ch == "_" or ch.isalpha()


def _is_name_cont(ch):
    return ch == "_" or ch.isalnum()


def tokenize(source: str):
    """Tokenize ``source``; returns a list of Tokens ending with ENDMARKER.

    Per-line problems (bad characters, unterminated single-line strings)
    yield ERROR tokens that the parser turns into statement skips.  Only an
    unterminated triple-quoted string reaching EOF raises LexicalError,
    because no statement boundary can be recovered after it.
    """
    boffs = _byte_offsets(source)
    toks: list[Token] = []
    indents = [0]
    paren_depth = 0
    i = 0
    n = len(source)
    at_line_start = True

    def add(type_, text, s, e, subtype=""):
        toks.append(Token(type_, text, boffs[s], boffs[e], subtype))

    while i < n:
        if at_line_start and paren_depth == 0:
            # Measure indentation; blank and comment-only lines emit nothing.
            j = i
            col = 0
            while j < n and source[j] in " \t\f":
                if source[j] == " ":
                    col += 1
                elif source[j] == "\t":
                    col = (col // 8 + 1) * 8
                j += 1
            if j >= n:
                break
            if source[j] in "\r\n":
                i = j + 1 if source[j] == "\n" else j + 1
                continue
            if source[j] == "#":
                while j < n and source[j] != "\n":
                    j += 1
                i = j
                continue
            if col > indents[-1]:
                indents.append(col)
                add("INDENT", "", j, j)
            else:
                while col < indents[-1]:
                    indents.pop()
                    add("DEDENT", "", j, j)
                if col != indents[-1]:
                    # Inconsistent dedent: flag it and realign.
                    add("ERROR", "bad dedent", j, j)
                    indents.append(col)
            i = j
            at_line_start = False
            continue

        ch = source[i]

        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue

        if ch == "\n":
            if paren_depth > 0:
                i += 1
                continue
            add("NEWLINE", "\n", i, i + 1)
            i += 1
            at_line_start = True
            continue

        if ch in " \t\r\f":
            i += 1
            continue

        if ch == "\\" and i + 1 < n and source[i + 1] in "\r\n":
            i += 2
            if source[i - 1] == "\r" and i < n and source[i] == "\n":
                i += 1
            continue

        # String literal, with optional prefix letters.
        if ch in "\"'" or (_is_name_start(ch) and _string_prefix_at(source, i)):
            pfx = _string_prefix_at(source, i) if ch not in "\"'" else ""
            qpos = i + len(pfx)
            quote = source[qpos]
            start = i
            if source.startswith(quote * 3, qpos):
                endq = quote * 3
                j = qpos + 3
                while j < n:
                    if source[j] == "\\":
                        j += 2
                        continue
                    if source.startswith(endq, j):
                        j += 3
                        break
                    j += 1
                else:
                    raise LexicalError("unterminated triple-quoted string", start)
                if j > n:
                    raise LexicalError("unterminated triple-quoted string", start)
                add("STRING", source[start:j], start, j)
                i = j
                continue
            j = qpos + 1
            ok = False
            while j < n:
                c = source[j]
                if c == "\\":
                    j += 2
                    continue
                if c == quote:
                    j += 1
                    ok = True
                    break
                if c == "\n":
                    break
                j += 1
            if not ok:
                add("ERROR", "unterminated string", start, min(j, n))
                i = min(j, n)
                continue
            add("STRING", source[start:j], start, j)
            i = j
            continue

        if _is_name_start(ch):
            j = i + 1
            while j < n and _is_name_cont(source[j]):
                j += 1
            text = source[i:j]
            add("KEYWORD" if text in KEYWORDS else "NAME", text, i, j)
            i = j
            continue

        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            i = _lex_number(source, i, add)
            continue

        op = _operator_at(source, i)
        if op is not None:
            if op in "([{":
                paren_depth += 1
            elif op in ")]}":
                paren_depth = max(0, paren_depth - 1)
            add("OP", op, i, i + len(op))
            i += len(op)
            continue

        add("ERROR", ch, i, i + 1)
        i += 1

    # Close out the file: implicit trailing newline, then dedents.
    if toks and toks[-1].type not in ("NEWLINE", "DEDENT"):
        add("NEWLINE", "", n, n)
    while len(indents) > 1:
        indents.pop()
        add("DEDENT", "", n, n)
    add("ENDMARKER", "", n, n)
    return toks


def _string_prefix_at(source, i):
    for ln in (2, 1):
        pfx = source[i:i + ln]
        if pfx.lower() in ("r", "b", "u", "f", "rb", "br", "fr", "rf") and \
                i + ln < len(source) and source[i + ln] in "\"'":
            return pfx
    return ""


_OPS_BY_FIRST = {}
for _op in _OPERATORS:
    _OPS_BY_FIRST.setdefault(_op[0], []).append(_op)


def _operator_at(source, i):
    for op in _OPS_BY_FIRST.get(source[i], ()):
        if source.startswith(op, i):
            return op
    return None


def _lex_number(source, i, add):
    n = len(source)
    start = i
    subtype = "int"
    if source[i] == "0" and i + 1 < n and source[i + 1] in "xXoObB":
        i += 2
        while i < n and (source[i].isalnum() or source[i] == "_"):
            i += 1
        add("NUMBER", source[start:i], start, i, "int")
        return i
    while i < n and (source[i].isdigit() or source[i] == "_"):
        i += 1
    if i < n and source[i] == "." and not source.startswith("..", i):
        subtype = "float"
        i += 1
        while i < n and (source[i].isdigit() or source[i] == "_"):
            i += 1
    if i < n and source[i] in "eE":
        j = i + 1
        if j < n and source[j] in "+-":
            j += 1
        if j < n and source[j].isdigit():
            subtype = "float"
            i = j
            while i < n and source[i].isdigit():
                i += 1
    if i < n and source[i] in "jJ":
        subtype = "complex"
        i += 1
    add("NUMBER", source[start:i], start, i, subtype)
    return i
