"""Template-based generation: meaning graph -> English word lattice.

A fixed linearization template replaces a full generation grammar:
subject noun phrase, verb, object noun phrase, then the remaining roles
as prepositional phrases in declaration order.  Unspecified
definiteness defaults to the article "the" and unspecified tense to the
present.  Where the generation lexicon does not record a preferred
preposition for a relation, the lattice branches over a configurable
alternative set and the language model downstream picks the winner.
Reentrant fillers are realized once; later mentions are skipped.
"""

from . import lattice_lm as wl
from .glosser import past_form, third_singular_form

__all__ = [
    "GenEntry",
    "RealizeError",
    "load_gen_lexicon",
    "parse_gen_lexicon",
    "realize",
    "DEFAULT_PREPOSITIONS",
    "MONTH_NAMES",
]

DEFAULT_PREPOSITIONS = ("in", "on", "at", "for", "of")
SUBJECT_ROLES = ("senser", "agent", "theme")
OBJECT_ROLES = ("phenomenon", "theme")
MONTH_NAMES = (
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
)
CATEGORIES = ("noun", "verb", "adjective", "preposition")


class RealizeError(ValueError):
    pass


class GenEntry:
    __slots__ = ("concept", "lemma", "category", "countable", "preps")

    def __init__(self, concept, lemma, category, countable=True, preps=None):
        if not lemma:
            raise RealizeError("generation entry for %r has an empty lemma" % concept)
        if category not in CATEGORIES:
            raise RealizeError("entry %r: unknown category %r" % (concept, category))
        self.concept = concept
        self.lemma = lemma
        self.category = category
        self.countable = countable
        self.preps = dict(preps or {})


def parse_gen_lexicon(text, filename="<string>"):
    """TSV rows ``concept TAB lemma TAB category [TAB countable?
    [TAB relation=prep;...]]``."""
    table = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < 3:
            raise RealizeError(
                "%s:%d: need concept TAB lemma TAB category" % (filename, lineno)
            )
        countable = True
        if len(cols) > 3 and cols[3].strip():
            countable = cols[3].strip() != "-"
        preps = {}
        if len(cols) > 4 and cols[4].strip():
            for item in cols[4].split(";"):
                if not item.strip():
                    continue
                if "=" not in item:
                    raise RealizeError(
                        "%s:%d: preposition entry must be relation=prep" % (filename, lineno)
                    )
                relation, prep = item.split("=", 1)
                preps[relation.strip().lower()] = prep.strip()
        concept = cols[0].strip()
        if len(concept) > 1 and concept.startswith("|") and concept.endswith("|"):
            concept = concept[1:-1]
        table[concept] = GenEntry(concept, cols[1], cols[2].strip().lower(), countable, preps)
    return table


def load_gen_lexicon(path):
    with open(path, encoding="utf-8") as fh:
        return parse_gen_lexicon(fh.read(), filename=path)


def _verb_groups(node, entry, irregulars=None):
    tense = node.attributes.get("tense", "present")
    if tense == "past":
        return [[past_form(entry.lemma, irregulars)]]
    return [[third_singular_form(entry.lemma, irregulars)]]


def realize(g, lex, prep_alternatives=DEFAULT_PREPOSITIONS, irregulars=None):
    """Linearize a meaning graph into a word lattice.

    Raises RealizeError listing every concept missing from the
    generation lexicon, and for graphs whose root is not realizable as
    an event or entity.
    """
    missing = sorted({n.concept for n in g.nodes() if n.concept not in lex})
    if missing:
        raise RealizeError("no generation entry for: %s" % ", ".join(missing))

    realized = set()
    groups = []  # each group is a list of alternative word strings

    def pp_groups(head_entry, role, child):
        prep = head_entry.preps.get(role)
        groups.append([prep] if prep else list(prep_alternatives))
        np_groups(child)

    def np_groups(node):
        realized.add(id(node))
        entry = lex[node.concept]
        if "month-index" in node.attributes:
            index = int(node.attributes["month-index"])
            if not 1 <= index <= 12:
                raise RealizeError("month index %d out of range" % index)
            groups.append([MONTH_NAMES[index - 1]])
        elif entry.category == "verb":
            # clausal realization of an event argument
            groups.append(["to"])
            groups.append([entry.lemma])
        else:
            if node.attributes.get("definiteness") == "indefinite":
                groups.append(["a"])
            else:
                groups.append(["the"])
            for role, child in node.roles.items():
                if lex[child.concept].category == "adjective":
                    realized.add(id(child))
                    groups.append([lex[child.concept].lemma])
            groups.append([entry.lemma])
        for role, child in node.roles.items():
            if id(child) in realized:
                continue
            if lex[child.concept].category == "adjective":
                continue
            pp_groups(entry, role, child)

    root = g.root
    entry = lex[root.concept]
    if entry.category == "verb":
        realized.add(id(root))
        subject = None
        for role in SUBJECT_ROLES:
            if role in root.roles:
                subject = root.roles[role]
                break
        if subject is not None:
            np_groups(subject)
        groups.extend(_verb_groups(root, entry, irregulars))
        obj = None
        for role in OBJECT_ROLES:
            child = root.roles.get(role)
            if child is not None and id(child) not in realized:
                obj = child
                break
        if obj is not None:
            np_groups(obj)
        for role, child in root.roles.items():
            if id(child) in realized:
                continue
            pp_groups(entry, role, child)
    elif entry.category == "noun":
        np_groups(root)
    else:
        raise RealizeError(
            "graph root %r (%s) is not an event or entity" % (root.concept, entry.category)
        )

    groups.append(["."])
    groups[0] = sorted({alt[:1].upper() + alt[1:] for alt in groups[0]})
    lattices = [
        wl.alternate_all([wl.from_phrase(alt) for alt in sorted(set(group))])
        for group in groups
    ]
    return wl.concat_all(lattices)
