"""Loading, indexing and validating the synchronized rule sets.

A grammar is a set of context-free backbones like ``(NP -> S NP)``, each
carrying up to three kinds of equation sets that share the backbone:
syntax equations (used by the parser), semantic equations (used by the
analyzer) and gloss equations (used by the glosser).  All three kinds
use one file format; which file a rule was loaded from decides its kind.

Lexicons are flat tab-separated files:

  - syntactic lexicon:  ``surface TAB pos [TAB feature-structure]``
  - bilingual dictionary: ``surface TAB pos TAB alt1|alt2|...``
  - semantic lexicon:   ``surface TAB concept1|concept2``
  - compound dictionary: ``compound TAB pos``
"""

import os

from . import sexpr
from .featstruct import parse_equations, parse_featstruct_expr, FeatStruct

__all__ = [
    "RuleKey",
    "SynchronizedRule",
    "LexiconEntry",
    "RuleBase",
    "RuleBaseError",
    "load_rulebase",
    "parse_rule_file",
    "validate_rulebase",
]


class RuleBaseError(ValueError):
    """A rule or lexicon file failed to parse; message carries file/line."""


class RuleKey:
    """Context-free backbone: LHS category and RHS category sequence."""

    __slots__ = ("lhs", "rhs")

    def __init__(self, lhs, rhs):
        if not rhs:
            raise RuleBaseError("rule %s has an empty right-hand side" % lhs)
        self.lhs = lhs
        self.rhs = tuple(rhs)

    @property
    def arity(self):
        return len(self.rhs)

    def as_tuple(self):
        return (self.lhs, self.rhs)

    def __eq__(self, other):
        return isinstance(other, RuleKey) and self.as_tuple() == other.as_tuple()

    def __hash__(self):
        return hash(self.as_tuple())

    def __repr__(self):
        return "(%s -> %s)" % (self.lhs, " ".join(self.rhs))


class EquationSet:
    """One parsed equation list plus its source expressions (for dumps)."""

    __slots__ = ("equations", "exprs")

    def __init__(self, equations, exprs):
        self.equations = equations
        self.exprs = exprs


class SynchronizedRule:
    """All equation sets sharing one backbone."""

    def __init__(self, key):
        self.key = key
        self.syntax_sets = []
        self.semantic_sets = []
        self.gloss_sets = []

    def sets(self, kind):
        return {
            "syntax": self.syntax_sets,
            "semantics": self.semantic_sets,
            "gloss": self.gloss_sets,
        }[kind]


class LexiconEntry:
    def __init__(self, surface, pos, features=None, senses=(), translations=()):
        self.surface = surface
        self.pos = pos
        self.features = features if features is not None else FeatStruct.empty()
        self.senses = list(senses)
        self.translations = list(translations)

    def __repr__(self):
        return "LexiconEntry(%s/%s)" % (self.surface, self.pos)


class RuleBase:
    def __init__(self):
        self.rules = {}  # RuleKey -> SynchronizedRule
        self.syn_lexicon = {}  # surface -> [LexiconEntry]
        self.bilingual = {}  # surface -> [LexiconEntry]
        self.sem_lexicon = {}  # surface -> [concept]
        self.compounds = {}  # compound surface -> pos

    def rule(self, key):
        entry = self.rules.get(key)
        if entry is None:
            entry = self.rules[key] = SynchronizedRule(key)
        return entry

    def rules_by_rhs(self):
        index = {}
        for key, rule in self.rules.items():
            index.setdefault(key.rhs, []).append(rule)
        for rules in index.values():
            rules.sort(key=lambda r: r.key.as_tuple())
        return index

    def arity_counts(self, kind="syntax"):
        counts = {}
        for key, rule in self.rules.items():
            if rule.sets(kind):
                arity = min(key.arity, 3)
                label = {1: "unary", 2: "binary", 3: "n-ary"}[arity]
                counts[label] = counts.get(label, 0) + 1
        return counts


def _max_variable(exprs):
    top = 0

    def visit(e):
        nonlocal top
        if isinstance(e, str):
            if not isinstance(e, sexpr.QuotedString) and e.startswith("X") and e[1:].isdigit():
                top = max(top, int(e[1:]))
        else:
            for sub in e:
                visit(sub)

    for e in exprs:
        visit(e)
    return top


def parse_rule_file(text, kind, rb=None, filename="<string>"):
    """Parse one rule file into (or onto) a RuleBase."""
    if rb is None:
        rb = RuleBase()
    try:
        exprs = sexpr.parse_all(text)
    except sexpr.SexprError as err:
        raise RuleBaseError("%s: %s" % (filename, err))
    for i, expr in enumerate(exprs):
        if not isinstance(expr, list) or not expr or not isinstance(expr[0], list):
            raise RuleBaseError(
                "%s: rule %d must be ((LHS -> RHS...) equations...)" % (filename, i + 1)
            )
        head = expr[0]
        if len(head) < 3 or head[1] != "->":
            raise RuleBaseError("%s: malformed backbone %r" % (filename, head))
        key = RuleKey(head[0], head[2:])
        body = expr[1:]
        try:
            equations = parse_equations(body)
        except sexpr.SexprError as err:
            raise RuleBaseError("%s: rule %r: %s" % (filename, key, err))
        rb.rule(key).sets(kind).append(EquationSet(equations, body))
    return rb


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _tsv_lines(path):
    for lineno, line in enumerate(_read(path).splitlines(), 1):
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield lineno, line.split("\t")


def load_syn_lexicon(path, rb):
    for lineno, cols in _tsv_lines(path):
        if len(cols) < 2:
            raise RuleBaseError("%s:%d: need surface TAB pos" % (path, lineno))
        surface, pos = cols[0], cols[1]
        features = FeatStruct.empty()
        if len(cols) > 2 and cols[2].strip():
            try:
                features = parse_featstruct_expr(sexpr.parse_one(cols[2]))
            except sexpr.SexprError as err:
                raise RuleBaseError("%s:%d: %s" % (path, lineno, err))
        rb.syn_lexicon.setdefault(surface, []).append(
            LexiconEntry(surface, pos, features)
        )


def load_bilingual(path, rb):
    for lineno, cols in _tsv_lines(path):
        if len(cols) < 3 or not cols[2].strip():
            raise RuleBaseError(
                "%s:%d: need surface TAB pos TAB alt1|alt2|..." % (path, lineno)
            )
        alts = [a for a in cols[2].split("|") if a]
        rb.bilingual.setdefault(cols[0], []).append(
            LexiconEntry(cols[0], cols[1], translations=alts)
        )


def load_sem_lexicon(path, rb):
    for lineno, cols in _tsv_lines(path):
        if len(cols) < 2 or not cols[1].strip():
            raise RuleBaseError(
                "%s:%d: need surface TAB concept1|concept2" % (path, lineno)
            )
        rb.sem_lexicon.setdefault(cols[0], []).extend(
            c for c in cols[1].split("|") if c
        )


def load_compounds(path, rb):
    for lineno, cols in _tsv_lines(path):
        if len(cols) < 2:
            raise RuleBaseError("%s:%d: need compound TAB pos" % (path, lineno))
        rb.compounds[cols[0]] = cols[1]


def load_rulebase(
    grammar_file=None,
    sem_file=None,
    gloss_file=None,
    syn_lexicon_file=None,
    bilingual_file=None,
    sem_lexicon_file=None,
    compound_file=None,
):
    """Load every configured resource file into one immutable RuleBase."""
    rb = RuleBase()
    for path, kind in (
        (grammar_file, "syntax"),
        (sem_file, "semantics"),
        (gloss_file, "gloss"),
    ):
        if path:
            if not os.path.exists(path):
                raise RuleBaseError("missing rule file: %s" % path)
            parse_rule_file(_read(path), kind, rb, filename=path)
    for path, loader in (
        (syn_lexicon_file, load_syn_lexicon),
        (bilingual_file, load_bilingual),
        (sem_lexicon_file, load_sem_lexicon),
        (compound_file, load_compounds),
    ):
        if path:
            if not os.path.exists(path):
                raise RuleBaseError("missing lexicon file: %s" % path)
            loader(path, rb)
    return rb


def dump_rules(rb, kind):
    """Serialize one rule kind back to file text."""
    lines = []
    for key in sorted(rb.rules, key=lambda k: k.as_tuple()):
        for eqset in rb.rules[key].sets(kind):
            head = [key.lhs, "->", *key.rhs]
            lines.append(sexpr.dump([head, *eqset.exprs]))
    return "\n".join(lines) + ("\n" if lines else "")


def validate_rulebase(rb, mode):
    """Report syntax backbones missing their gloss/semantic counterpart
    and equations referencing out-of-range variables."""
    if mode not in ("gloss", "interlingua"):
        raise ValueError("mode must be 'gloss' or 'interlingua'")
    wanted = "gloss" if mode == "gloss" else "semantics"
    lines = []
    for key in sorted(rb.rules, key=lambda k: k.as_tuple()):
        rule = rb.rules[key]
        if rule.syntax_sets and not rule.sets(wanted):
            lines.append("missing %s rule for backbone %r" % (wanted, key))
        for kind in ("syntax", "semantics", "gloss"):
            for eqset in rule.sets(kind):
                top = _max_variable(eqset.exprs)
                if top > key.arity:
                    lines.append(
                        "%s rule %r references X%d beyond arity %d"
                        % (kind, key, top, key.arity)
                    )
    return lines
