"""Feature structures and the unification/equation engine.

A feature structure is a rooted, edge-labeled directed acyclic graph.
Interior nodes map feature names to child nodes; interior nodes may be
shared (reentrancy).  Leaves carry one of:

  - an atom (``plus``, ``ta-form``, ``"John"``),
  - an atomic disjunction, written ``(*OR* a b c)``,
  - a negative residue, written ``(*NOT* a b)``: the value is not yet
    known but may never become one of the listed atoms.

Structures are immutable values; ``unify`` returns a fresh structure (or
``None`` on failure) and never mutates its inputs.  Grammar rules attach
equations over variables ``X0..Xn``; ``apply_equations`` solves an
equation list against variable bindings, expanding ``*OR*`` blocks into
alternative solutions and checking ``*XOR*`` blocks, existence tests and
``=c`` constraint equations.
"""

import re

from .sexpr import QuotedString, SexprError, parse_one

__all__ = [
    "FeatStruct",
    "UnboundVariableError",
    "unify",
    "subsumes",
    "canonical",
    "parse_featstruct",
    "Assign",
    "Constraint",
    "Exists",
    "OrBlock",
    "XorBlock",
    "PathRef",
    "parse_equation",
    "parse_equations",
    "apply_equations",
    "evaluate_test",
]

_VAR_RE = re.compile(r"^X[0-9]+$")
_TAG_DEF_RE = re.compile(r"^#([0-9]+)=$")
_TAG_REF_RE = re.compile(r"^#([0-9]+)#$")


class UnboundVariableError(Exception):
    """An equation references a variable missing from its bindings."""


class _Fail(Exception):
    """Internal: unification failure."""


class _XorFail(Exception):
    """Internal: an exclusive-or block had 0 or >1 satisfiable groups."""


class FeatStruct:
    """One node of an immutable feature-structure graph.

    Exactly one of three kinds:

      - complex:  ``features`` is a non-empty dict of child nodes
      - atomic:   ``allowed`` is a non-empty frozenset of candidate atoms
                  (a plain atom is a singleton set)
      - empty:    no commitments yet; ``forbidden`` may carry a negative
                  residue (atoms the value may never take)

    ``forbidden`` is only retained while ``allowed`` is None; once a node
    is atomic the residue has already been subtracted.
    """

    __slots__ = ("features", "allowed", "forbidden", "_canon")

    def __init__(self, features=None, allowed=None, forbidden=frozenset()):
        if features and allowed is not None:
            raise ValueError("node cannot be both complex and atomic")
        if allowed is not None and not allowed:
            raise ValueError("atomic disjunction must be non-empty")
        self.features = dict(features) if features else {}
        self.allowed = frozenset(allowed) if allowed is not None else None
        self.forbidden = frozenset(forbidden) if allowed is None else frozenset()
        self._canon = None

    # -- constructors -------------------------------------------------

    @staticmethod
    def empty():
        return _EMPTY

    @staticmethod
    def atom(value):
        return FeatStruct(allowed=frozenset([value]))

    @staticmethod
    def disjunction(atoms):
        return FeatStruct(allowed=frozenset(atoms))

    @staticmethod
    def negation(atoms):
        atoms = frozenset(atoms)
        if not atoms:
            raise ValueError("*NOT* set must be non-empty")
        return FeatStruct(forbidden=atoms)

    @staticmethod
    def complex(features):
        return FeatStruct(features=features)

    # -- predicates and access ----------------------------------------

    @property
    def is_complex(self):
        return bool(self.features)

    @property
    def is_atomic(self):
        return self.allowed is not None

    @property
    def is_empty(self):
        return not self.features and self.allowed is None

    @property
    def atom_value(self):
        """The atom, if this node is committed to exactly one."""
        if self.allowed is not None and len(self.allowed) == 1:
            return next(iter(self.allowed))
        return None

    def get(self, path):
        """Walk a feature path; None if any step is missing."""
        node = self
        for feat in path:
            child = node.features.get(feat)
            if child is None:
                return None
            node = child
        return node

    def __getitem__(self, feat):
        return self.features[feat]

    def __contains__(self, feat):
        return feat in self.features

    # -- equality is isomorphism (including reentrancy) ---------------

    def __eq__(self, other):
        if not isinstance(other, FeatStruct):
            return NotImplemented
        return canonical(self) == canonical(other)

    def __hash__(self):
        return hash(canonical(self))

    def __repr__(self):
        return "FeatStruct(%s)" % self.serialize()

    def serialize(self):
        """Canonical parenthesized form, reentrancy as numbered tags."""
        return canonical(self)


_EMPTY = FeatStruct()


# ---------------------------------------------------------------------
# Canonical serialization
# ---------------------------------------------------------------------

def _atom_text(a):
    if isinstance(a, QuotedString):
        return '"%s"' % str(a).replace("\\", "\\\\").replace('"', '\\"')
    if a == "" or any(c.isspace() or c in '()"|;' for c in a):
        return "|%s|" % a
    return a


def _sorted_atoms(atoms):
    return sorted(atoms, key=lambda a: (isinstance(a, QuotedString), str(a)))


def canonical(fs):
    """Deterministic text form; equal strings iff isomorphic graphs."""
    if fs._canon is not None:
        return fs._canon

    refcount = {}

    def count(node):
        refcount[id(node)] = refcount.get(id(node), 0) + 1
        if refcount[id(node)] == 1:
            for feat in node.features:
                count(node.features[feat])

    count(fs)
    tags = {}

    def emit(node):
        if id(node) in tags:
            return "#%d#" % tags[id(node)]
        prefix = ""
        if refcount[id(node)] > 1:
            tags[id(node)] = len(tags) + 1
            prefix = "#%d=" % tags[id(node)]
        if node.allowed is not None:
            if len(node.allowed) == 1:
                body = _atom_text(next(iter(node.allowed)))
            else:
                body = "(*OR* %s)" % " ".join(
                    _atom_text(a) for a in _sorted_atoms(node.allowed)
                )
        elif node.features:
            parts = []
            for feat in sorted(node.features):
                parts.append("(%s %s)" % (_atom_text(feat), emit(node.features[feat])))
            body = "(%s)" % " ".join(parts)
        elif node.forbidden:
            body = "(*NOT* %s)" % " ".join(
                _atom_text(a) for a in _sorted_atoms(node.forbidden)
            )
        else:
            body = "()"
        return prefix + body

    text = emit(fs)
    fs._canon = text
    return text


# ---------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------

def _is_op(expr, name):
    return isinstance(expr, str) and not isinstance(expr, QuotedString) and expr.upper() == name


def parse_featstruct_expr(expr, tags=None):
    """Build a FeatStruct from a nested-list expression."""
    if tags is None:
        tags = {}
    if isinstance(expr, str):
        if not isinstance(expr, QuotedString):
            m = _TAG_REF_RE.match(expr)
            if m:
                try:
                    return tags[m.group(1)]
                except KeyError:
                    raise SexprError("undefined reentrancy tag #%s#" % m.group(1))
        return FeatStruct.atom(expr)
    if not expr:
        return _EMPTY
    head = expr[0]
    if _is_op(head, "*OR*"):
        atoms = expr[1:]
        if not atoms or not all(isinstance(a, str) for a in atoms):
            raise SexprError("*OR* leaf must list atoms")
        return FeatStruct.disjunction(atoms)
    if _is_op(head, "*NOT*"):
        atoms = expr[1:]
        if not atoms or not all(isinstance(a, str) for a in atoms):
            raise SexprError("*NOT* must list atoms")
        return FeatStruct.negation(atoms)
    # otherwise: a list of (feature value) pairs, possibly with #n= tags
    features = {}
    for pair in expr:
        if not isinstance(pair, list) or len(pair) < 2:
            raise SexprError("expected (feature value) pair, got %r" % (pair,))
        feat = pair[0]
        if not isinstance(feat, str):
            raise SexprError("feature name must be an atom: %r" % (feat,))
        rest = pair[1:]
        tagname = None
        if (
            isinstance(rest[0], str)
            and not isinstance(rest[0], QuotedString)
            and _TAG_DEF_RE.match(rest[0])
        ):
            tagname = _TAG_DEF_RE.match(rest[0]).group(1)
            rest = rest[1:]
        if len(rest) != 1:
            raise SexprError("feature %s has %d values" % (feat, len(rest)))
        if feat in features:
            raise SexprError("duplicate feature %s" % feat)
        value = parse_featstruct_expr(rest[0], tags)
        if tagname is not None:
            tags[tagname] = value
        features[feat] = value
    return FeatStruct.complex(features)


def parse_featstruct(text):
    """Parse the textual feature-structure syntax (paper-style parens)."""
    return parse_featstruct_expr(parse_one(text))


# ---------------------------------------------------------------------
# Mutable working nodes for unification
# ---------------------------------------------------------------------

class _MNode:
    __slots__ = ("forward", "feats", "allowed", "forbidden")

    def __init__(self, feats=None, allowed=None, forbidden=frozenset()):
        self.forward = None
        self.feats = feats if feats is not None else {}
        self.allowed = allowed
        self.forbidden = forbidden


def _deref(n):
    while n.forward is not None:
        n = n.forward
    return n


def _thaw(fs, memo):
    node = memo.get(id(fs))
    if node is not None:
        return node
    node = _MNode(allowed=fs.allowed, forbidden=fs.forbidden)
    memo[id(fs)] = node
    for feat, child in fs.features.items():
        node.feats[feat] = _thaw(child, memo)
    return node


def _copy(n, memo):
    n = _deref(n)
    dup = memo.get(id(n))
    if dup is not None:
        return dup
    dup = _MNode(allowed=n.allowed, forbidden=n.forbidden)
    memo[id(n)] = dup
    for feat, child in n.feats.items():
        dup.feats[feat] = _copy(child, memo)
    return dup


def _munify(a, b):
    a, b = _deref(a), _deref(b)
    if a is b:
        return a
    a_complex, b_complex = bool(a.feats), bool(b.feats)
    a_atomic, b_atomic = a.allowed is not None, b.allowed is not None
    if a_complex and b_atomic or b_complex and a_atomic:
        raise _Fail("atom vs complex structure")
    if a_complex and b.forbidden or b_complex and a.forbidden:
        # a negative residue constrains an atomic value; a structure
        # can never satisfy it
        raise _Fail("negative residue vs complex structure")
    if a_atomic or b_atomic:
        allowed = a.allowed if a.allowed is not None else b.allowed
        if a.allowed is not None and b.allowed is not None:
            allowed = a.allowed & b.allowed
        allowed = allowed - a.forbidden - b.forbidden
        if not allowed:
            raise _Fail("empty atomic intersection")
        a.allowed, a.forbidden, a.feats = allowed, frozenset(), {}
        b.forward = a
        return a
    if a_complex or b_complex:
        if b_complex and not a_complex:
            a, b = b, a
        b.forward = a
        for feat, child in list(b.feats.items()):
            mine = a.feats.get(feat)
            if mine is None:
                a.feats[feat] = child
            else:
                _munify(mine, child)
        b.feats = {}
        return a
    # both empty: merge residues
    a.forbidden = a.forbidden | b.forbidden
    b.forward = a
    return a


def _freeze(n, memo=None, active=None):
    if memo is None:
        memo, active = {}, set()
    n = _deref(n)
    done = memo.get(id(n))
    if done is not None:
        return done
    if id(n) in active:
        raise _Fail("cyclic structure created by unification")
    active.add(id(n))
    features = {}
    for feat, child in n.feats.items():
        features[feat] = _freeze(child, memo, active)
    active.discard(id(n))
    fs = FeatStruct(features=features, allowed=n.allowed, forbidden=n.forbidden)
    memo[id(n)] = fs
    return fs


def unify(a, b):
    """Most general common specialization of ``a`` and ``b``, or None."""
    memo = {}
    ma, mb = _thaw(a, memo), _thaw(b, memo)
    try:
        return _freeze(_munify(ma, mb))
    except _Fail:
        return None


# ---------------------------------------------------------------------
# Subsumption
# ---------------------------------------------------------------------

def subsumes(a, b):
    """True iff every commitment (values and reentrancy) of a holds in b."""
    mapping = {}

    def check(na, nb):
        seen = mapping.get(id(na))
        if seen is not None:
            return seen is nb  # reentrancy in a must be mirrored in b
        mapping[id(na)] = nb
        if na.features:
            if not nb.features:
                return False
            for feat, child in na.features.items():
                other = nb.features.get(feat)
                if other is None or not check(child, other):
                    return False
            return True
        if na.allowed is not None:
            return nb.allowed is not None and nb.allowed <= na.allowed
        if na.forbidden:
            if nb.allowed is not None:
                return not (nb.allowed & na.forbidden)
            if nb.features:
                return False
            return na.forbidden <= nb.forbidden
        return True

    return check(a, b)


# ---------------------------------------------------------------------
# Equations
# ---------------------------------------------------------------------

class PathRef:
    """A rule variable plus a feature path under it, e.g. (X1 syn infl)."""

    __slots__ = ("var", "path")

    def __init__(self, var, path=()):
        self.var = var
        self.path = tuple(path)

    def __repr__(self):
        return "PathRef(%s %s)" % (self.var, " ".join(self.path))


class Assign:
    """Unifying equation: path = path, or path = value."""

    __slots__ = ("lhs", "rhs")

    def __init__(self, lhs, rhs):
        self.lhs = lhs
        self.rhs = rhs  # PathRef or FeatStruct leaf/literal

    @property
    def is_negation(self):
        return (
            isinstance(self.rhs, FeatStruct)
            and self.rhs.is_empty
            and bool(self.rhs.forbidden)
        )


class Constraint:
    """Check-only equation (``=c``): passes iff the path already holds a
    value compatible with the right-hand side, adding no structure."""

    __slots__ = ("lhs", "rhs")

    def __init__(self, lhs, rhs):
        self.lhs = lhs
        self.rhs = rhs


class Exists:
    """Existence test: the path must already carry a value."""

    __slots__ = ("ref",)

    def __init__(self, ref):
        self.ref = ref


class OrBlock:
    """Disjunction over groups of equations; each satisfiable group
    contributes alternative solutions."""

    __slots__ = ("groups",)

    def __init__(self, groups):
        self.groups = groups


class XorBlock:
    """Exclusive-or: exactly one group may be satisfiable; its effects
    apply.  Anything else fails the whole rule application."""

    __slots__ = ("groups",)

    def __init__(self, groups):
        self.groups = groups


def _parse_pathref(expr):
    if isinstance(expr, str):
        if _VAR_RE.match(expr) and not isinstance(expr, QuotedString):
            return PathRef(expr)
        raise SexprError("expected a variable or path, got %r" % expr)
    if not expr or not isinstance(expr[0], str) or not _VAR_RE.match(expr[0]):
        raise SexprError("path must start with a rule variable: %r" % (expr,))
    if not all(isinstance(f, str) for f in expr[1:]):
        raise SexprError("path steps must be atoms: %r" % (expr,))
    return PathRef(expr[0], expr[1:])


def _parse_rhs(expr):
    if isinstance(expr, str):
        if not isinstance(expr, QuotedString) and _VAR_RE.match(expr):
            return PathRef(expr)
        return FeatStruct.atom(expr)
    if expr and isinstance(expr[0], str) and not isinstance(expr[0], QuotedString) \
            and _VAR_RE.match(expr[0]):
        return _parse_pathref(expr)
    return parse_featstruct_expr(expr)


def parse_equation(expr):
    if not isinstance(expr, list) or not expr:
        raise SexprError("malformed equation: %r" % (expr,))
    head = expr[0]
    if _is_op(head, "IS"):
        if len(expr) != 2:
            raise SexprError("existence test takes one path: %r" % (expr,))
        return Exists(_parse_pathref(expr[1]))
    if _is_op(head, "*OR*") or _is_op(head, "*XOR*"):
        groups = []
        for group in expr[1:]:
            if not isinstance(group, list):
                raise SexprError("block group must be a list of equations")
            groups.append([parse_equation(e) for e in group])
        if not groups:
            raise SexprError("empty %s block" % head)
        return OrBlock(groups) if _is_op(head, "*OR*") else XorBlock(groups)
    if len(expr) == 3 and expr[1] in ("=", "=c"):
        lhs = _parse_pathref(expr[0])
        rhs = _parse_rhs(expr[2])
        return Assign(lhs, rhs) if expr[1] == "=" else Constraint(lhs, rhs)
    raise SexprError("malformed equation: %r" % (expr,))


def parse_equations(exprs):
    return [parse_equation(e) for e in exprs]


def equation_variables(eqs):
    """All rule variables referenced anywhere in an equation list."""
    out = set()

    def visit(eq):
        if isinstance(eq, (Assign, Constraint)):
            out.add(eq.lhs.var)
            if isinstance(eq.rhs, PathRef):
                out.add(eq.rhs.var)
        elif isinstance(eq, Exists):
            out.add(eq.ref.var)
        else:
            for group in eq.groups:
                for sub in group:
                    visit(sub)

    for eq in eqs:
        visit(eq)
    return out


# ---------------------------------------------------------------------
# Equation solving
# ---------------------------------------------------------------------

class _State:
    __slots__ = ("root", "deferred")

    def __init__(self, root, deferred):
        self.root = root
        self.deferred = deferred

    def clone(self):
        return _State(_copy(self.root, {}), list(self.deferred))


def _walk(root, ref, create):
    """Resolve a PathRef against the joint root node."""
    node = _deref(root)
    steps = (ref.var,) + ref.path
    for feat in steps:
        node = _deref(node)
        if node.allowed is not None:
            raise _Fail("path descends into an atom")
        child = node.feats.get(feat)
        if child is None:
            if not create:
                return None
            child = _MNode()
            node.feats[feat] = child
        node = child
    return _deref(node)


def _rhs_node(state, rhs):
    if isinstance(rhs, PathRef):
        return _walk(state.root, rhs, create=True)
    return _thaw(rhs, {})


def _node_has_value(node):
    return node is not None and (bool(node.feats) or node.allowed is not None)


def _check_exists(state, eq):
    try:
        return _node_has_value(_walk(state.root, eq.ref, create=False))
    except _Fail:
        return False


def _check_constraint(state, eq):
    try:
        lhs = _walk(state.root, eq.lhs, create=False)
    except _Fail:
        return False
    if not _node_has_value(lhs):
        return False
    # simulate the unification on a throwaway copy; pass iff it succeeds
    # without adding structure to the left-hand side
    memo = {}
    root_dup = _copy(state.root, memo)
    lhs_dup = memo[id(lhs)]
    before = canonical(_freeze(lhs_dup))
    dup_state = _State(root_dup, [])
    try:
        _munify(lhs_dup, _rhs_node(dup_state, eq.rhs))
        after = canonical(_freeze(_deref(lhs_dup)))
    except _Fail:
        return False
    return before == after


def _apply_seq(states, eqs, cap):
    for eq in eqs:
        if not states:
            return states
        if isinstance(eq, Assign):
            survivors = []
            for st in states:
                try:
                    lhs = _walk(st.root, eq.lhs, create=True)
                    _munify(lhs, _rhs_node(st, eq.rhs))
                    survivors.append(st)
                except _Fail:
                    pass
            states = survivors
        elif isinstance(eq, (Constraint, Exists)):
            for st in states:
                st.deferred.append(eq)
        elif isinstance(eq, OrBlock):
            expanded = []
            for st in states:
                for group in eq.groups:
                    if len(expanded) >= cap:
                        break
                    expanded.extend(_apply_seq([st.clone()], group, cap))
            states = expanded[:cap]
        elif isinstance(eq, XorBlock):
            expanded = []
            for st in states:
                satisfiable = []
                for index, group in enumerate(eq.groups):
                    # probe each group on a throwaway copy, judging only
                    # the tests the group itself introduces
                    trial = _apply_seq([_State(_copy(st.root, {}), [])], group, cap)
                    if any(_deferred_pass(t) for t in trial):
                        satisfiable.append(index)
                if len(satisfiable) != 1:
                    raise _XorFail(len(satisfiable))
                expanded.extend(_apply_seq([st], eq.groups[satisfiable[0]], cap))
            states = expanded[:cap]
        else:
            raise TypeError("unknown equation type: %r" % (eq,))
    return states


def _deferred_pass(state):
    # existence tests first, then check-only =c equations last
    for eq in state.deferred:
        if isinstance(eq, Exists) and not _check_exists(state, eq):
            return False
    for eq in state.deferred:
        if isinstance(eq, Constraint) and not _check_constraint(state, eq):
            return False
    return True


def apply_equations(bindings, eqs, solution_cap=64):
    """Solve an equation list against variable bindings.

    Returns a list of solutions, each a dict mapping every variable to
    its (possibly specialized) feature structure; structures within one
    solution share nodes where the equations made paths reentrant.  An
    empty list signals failure.
    """
    for var in equation_variables(eqs):
        if var not in bindings:
            raise UnboundVariableError(var)
    root = _MNode()
    for var, fs in bindings.items():
        # one memo per variable: binding the same structure to two
        # variables must not alias them
        root.feats[var] = _thaw(fs, {})
    try:
        states = _apply_seq([_State(root, [])], eqs, solution_cap)
    except _XorFail:
        return []
    solutions, seen = [], set()
    for st in states:
        if not _deferred_pass(st):
            continue
        try:
            frozen = _freeze(st.root)
        except _Fail:
            continue
        key = canonical(frozen)
        if key in seen:
            continue
        seen.add(key)
        solutions.append({var: frozen.features.get(var, _EMPTY) for var in bindings})
    return solutions


def evaluate_test(bindings, test):
    """Evaluate a test-only equation (``=c``, negation, existence)."""
    root = _MNode()
    for var, fs in bindings.items():
        root.feats[var] = _thaw(fs, {})
    state = _State(root, [])
    if isinstance(test, Exists):
        return _check_exists(state, test)
    if isinstance(test, Constraint):
        return _check_constraint(state, test)
    if isinstance(test, Assign) and test.is_negation:
        try:
            node = _walk(root, test.lhs, create=False)
        except _Fail:
            return False
        if node is None or not _node_has_value(node):
            return True  # absent values pass a negation test
        if node.feats:
            return False
        return bool(node.allowed - test.rhs.forbidden)
    raise TypeError("not a test-only equation: %r" % (test,))
