"""Parenthesized-expression reader and printer.

All knowledge files (grammar rules, chunk patterns, feature structures,
meaning-graph text) share one surface syntax: nested parenthesized lists
of atoms.  Atoms come in three spellings:

  - bare symbols        (NP, *OR*, ta-form, op1, =c)
  - quoted strings      ("John", "wants")
  - pipe-quoted symbols (|have as a goal|, |found, launch|)

Quoted strings are kept distinct from symbols via the ``QuotedString``
subclass so downstream code can tell target-language text apart from
grammar symbols.  Lines may carry ``;`` comments.
"""


class SexprError(ValueError):
    """Malformed parenthesized input; carries a position message."""


class QuotedString(str):
    """An atom that was written with double quotes."""

    __slots__ = ()


_DELIMS = set('()"|;')


def tokenize(text):
    """Yield (token, line, col) triples. Parens are single-char tokens."""
    line, col = 1, 0
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 0
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch in "()":
            yield ch, start_line, start_col
            i += 1
            col += 1
        elif ch == '"':
            j = i + 1
            buf = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    j += 1
                buf.append(text[j])
                j += 1
            if j >= n:
                raise SexprError("unterminated string at line %d" % start_line)
            yield QuotedString("".join(buf)), start_line, start_col
            col += j + 1 - i
            i = j + 1
        elif ch == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise SexprError("unterminated |atom| at line %d" % start_line)
            yield text[i + 1 : j], start_line, start_col
            col += j + 1 - i
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in _DELIMS:
                j += 1
            yield text[i:j], start_line, start_col
            col += j - i
            i = j


def parse_all(text):
    """Parse every top-level expression in ``text`` into nested lists."""
    stack = [[]]
    for tok, line, _col in tokenize(text):
        if tok == "(" and not isinstance(tok, QuotedString):
            stack.append([])
        elif tok == ")" and not isinstance(tok, QuotedString):
            if len(stack) == 1:
                raise SexprError("unbalanced ')' at line %d" % line)
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SexprError("unbalanced '(': %d open at end of input" % (len(stack) - 1))
    return stack[0]


def parse_one(text):
    exprs = parse_all(text)
    if len(exprs) != 1:
        raise SexprError("expected exactly one expression, got %d" % len(exprs))
    return exprs[0]


def _needs_pipes(atom):
    if atom == "":
        return True
    return any(c.isspace() or c in _DELIMS for c in atom)


def dump(expr):
    """Render a nested-list expression back to text (single line)."""
    if isinstance(expr, QuotedString):
        return '"%s"' % str(expr).replace("\\", "\\\\").replace('"', '\\"')
    if isinstance(expr, str):
        return "|%s|" % expr if _needs_pipes(expr) else expr
    return "(" + " ".join(dump(e) for e in expr) + ")"
