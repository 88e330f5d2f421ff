from __future__ import annotations

import re
from dataclasses import dataclass

from declafl.errors import ParseError

KEYWORDS = {
    "sig", "abstract", "one", "lone", "some", "no", "all", "set", "extends",
    "fact", "pred", "fun", "assert", "run", "check", "for", "but", "exactly",
    "expect", "open", "as", "let", "disj", "none", "univ", "iden", "in",
    "and", "or", "not", "implies", "iff", "else",
}

# longest symbols first
SYMBOLS = [
    "<=>", "=>", "->", "&&", "||", "!=", "{", "}", "[", "]", "(", ")",
    ",", ":", "|", ".", "~", "^", "*", "+", "-", "&", "=", "!",
]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|--[^\n]*|/\*.*?\*/)
  | (?P<int>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*(?:/[A-Za-z_][A-Za-z0-9_']*)*)
  | (?P<sym>"""
    + "|".join(re.escape(s) for s in SYMBOLS)
    + r""")
    """,
    re.VERBOSE | re.DOTALL | re.MULTILINE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "name" | "int" | "kw" | "sym" | "eof"
    text: str
    start: int
    end: int
    line: int
    col: int


def tokenize(source: str, path: str = "<string>") -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    data = source.encode("utf-8")
    byte_of = _ByteOffsets(source)
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1, path)
        kind = m.lastgroup
        text = m.group()
        if kind not in ("ws", "comment"):
            if kind == "name" and text in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, text, byte_of(pos), byte_of(m.end()), line, pos - line_start + 1))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", len(data), len(data), line, pos - line_start + 1))
    return tokens


class _ByteOffsets:
    def __init__(self, source: str):
        self.ascii = source.isascii()
        self.source = source

    def __call__(self, i: int) -> int:
        if self.ascii:
            return i
        return len(self.source[:i].encode("utf-8"))
