"""Single-statement defect patterns: matching a buggy/fixed pair, injecting a
pattern into a correct function, and generating a seeded synthetic corpus.

Every pattern describes the *fix*, i.e. the change from the buggy version to
the fixed one.  Rules are tried in the fixed order of :class:`DefectLabel`
and the first one that fires wins.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .jparse import (
    AstNode,
    FunctionDecl,
    JParseError,
    NodeKind,
    diff_statements,
    format_tokens,
    is_boolean_literal,
    is_numeric_literal,
    parse_function,
)
from .labels import DEFECT_LABELS, DefectLabel
from .triples import FunctionTriple

K = NodeKind


class PatternError(ValueError):
    pass


class NotSingleStatement(PatternError):
    pass


class Inapplicable(PatternError):
    pass


class NoApplicableTemplate(PatternError):
    pass


@dataclass(frozen=True)
class PatternMatch:
    label: DefectLabel
    before_stmt: AstNode
    after_stmt: AstNode
    site: tuple[int, int]  # token span in the buggy version


@dataclass(frozen=True)
class Site:
    a: AstNode
    b: AstNode
    parent_a: AstNode | None
    parent_b: AstNode | None
    index: int


# operators that can be confused with one another
OPERATOR_CLASSES = (
    frozenset("+ -".split()),
    frozenset("* / %".split()),
    frozenset("< <= > >=".split()),
    frozenset("== !=".split()),
    frozenset("&& ||".split()),
    frozenset("& | ^".split()),
    frozenset("<< >> >>>".split()),
)


def operator_class(op: str) -> int | None:
    for i, c in enumerate(OPERATOR_CLASSES):
        if op in c:
            return i
    return None


class _Pair:
    """Buggy/fixed functions plus text helpers."""

    def __init__(self, buggy: FunctionDecl, fixed: FunctionDecl):
        self.buggy, self.fixed = buggy, fixed

    def ta(self, n: AstNode) -> str:
        return n.text(self.buggy.tokens)

    def tb(self, n: AstNode) -> str:
        return n.text(self.fixed.tokens)

    def same(self, a: AstNode, b: AstNode) -> bool:
        return a.kind is b.kind and self.ta(a) == self.tb(b)

    def sites(self, a: AstNode, b: AstNode, pa=None, pb=None, index=0) -> list[Site]:
        """Minimal differing subtree pairs from a parallel walk."""
        if self.same(a, b):
            return []
        if a.kind is b.kind and a.value == b.value and a.receiver == b.receiver and a.children and len(a.children) == len(b.children):
            out: list[Site] = []
            for i, (x, y) in enumerate(zip(a.children, b.children)):
                out.extend(self.sites(x, y, a, b, i))
            if out:
                return out
        return [Site(a, b, pa, pb, index)]

    def receiver_text(self, call: AstNode, side: str) -> str | None:
        if not call.receiver:
            return None
        return (self.ta if side == "a" else self.tb)(call.children[0])

    def arg_texts(self, call: AstNode, side: str) -> list[str]:
        t = self.ta if side == "a" else self.tb
        return [t(c) for c in call.args]


def _is_receiver(s: Site) -> bool:
    return s.parent_a is not None and s.parent_a.kind is K.CALL and s.parent_a.receiver and s.index == 0


def _is_binary_operand(s: Site) -> bool:
    return s.parent_a is not None and s.parent_a.kind is K.BINARY_OP


def _modifiers(n: AstNode) -> list[str]:
    return [c.value for c in n.children if c.kind is K.MODIFIER]


def _non_modifiers(n: AstNode) -> list[AstNode]:
    return [c for c in n.children if c.kind is not K.MODIFIER]


# ---------------------------------------------------------------------------
# rules over the single changed statement; each returns True when it fires


def _r_identifier(p: _Pair, sites: list[Site], x, y) -> bool:
    if len(sites) != 1:
        return False
    s = sites[0]
    if s.a.kind is K.IDENTIFIER and s.b.kind is K.IDENTIFIER:
        return not _is_receiver(s) and not _is_binary_operand(s) and not (s.parent_a is not None and s.parent_a.kind is K.TYPE)
    if s.a.kind is K.FIELD_ACCESS and s.b.kind is K.FIELD_ACCESS and s.a.value != s.b.value:
        return len(s.a.children) == len(s.b.children) and all(p.same(c, d) for c, d in zip(s.a.children, s.b.children)) and not _is_binary_operand(s)
    return False


def _r_numeric(p, sites, x, y) -> bool:
    return len(sites) == 1 and is_numeric_literal(sites[0].a) and is_numeric_literal(sites[0].b)


def _r_boolean(p, sites, x, y) -> bool:
    return len(sites) == 1 and is_boolean_literal(sites[0].a) and is_boolean_literal(sites[0].b)


def _r_modifier(p: _Pair, sites, x, y) -> bool:
    if len(sites) != 1:
        return False
    s = sites[0]
    decl_a, decl_b = s.a, s.b
    if s.a.kind is K.MODIFIER and s.b.kind is K.MODIFIER:
        decl_a, decl_b = s.parent_a, s.parent_b
    if decl_a is None or decl_a.kind is not K.VAR_DECL or decl_b.kind is not K.VAR_DECL:
        return False
    na, nb = _non_modifiers(decl_a), _non_modifiers(decl_b)
    return (
        _modifiers(decl_a) != _modifiers(decl_b)
        and len(na) == len(nb)
        and all(p.same(c, d) for c, d in zip(na, nb))
    )


def _call_pair(p: _Pair, sites) -> tuple[AstNode, AstNode] | None:
    if len(sites) == 1 and sites[0].a.kind is K.CALL and sites[0].b.kind is K.CALL:
        return sites[0].a, sites[0].b
    return None


def _r_wrong_name(p: _Pair, sites, x, y) -> bool:
    c = _call_pair(p, sites)
    return bool(
        c
        and c[0].value != c[1].value
        and p.receiver_text(c[0], "a") == p.receiver_text(c[1], "b")
        and p.arg_texts(c[0], "a") == p.arg_texts(c[1], "b")
    )


def _same_callee(p: _Pair, c) -> bool:
    return c[0].value == c[1].value and p.receiver_text(c[0], "a") == p.receiver_text(c[1], "b")


def _r_more_args(p: _Pair, sites, x, y) -> bool:
    c = _call_pair(p, sites)
    return bool(c and _same_callee(p, c) and len(c[1].args) > len(c[0].args))


def _r_less_args(p: _Pair, sites, x, y) -> bool:
    c = _call_pair(p, sites)
    return bool(c and _same_callee(p, c) and len(c[1].args) < len(c[0].args))


def _r_change_caller(p: _Pair, sites, x, y) -> bool:
    if len(sites) != 1:
        return False
    if _is_receiver(sites[0]):
        return True
    c = _call_pair(p, sites)
    return bool(
        c
        and c[0].value == c[1].value
        and p.arg_texts(c[0], "a") == p.arg_texts(c[1], "b")
        and p.receiver_text(c[0], "a") != p.receiver_text(c[1], "b")
    )


def _r_swap_args(p: _Pair, sites, x, y) -> bool:
    if len(sites) < 2:
        return False
    ca, cb = sites[0].parent_a, sites[0].parent_b
    if ca is None or ca.kind is not K.CALL or any(s.parent_a is not ca for s in sites):
        return False
    if any(_is_receiver(s) for s in sites):
        return False
    aa, ab = p.arg_texts(ca, "a"), p.arg_texts(cb, "b")
    return aa != ab and sorted(aa) == sorted(ab)


def _r_binary(p: _Pair, sites, x, y) -> bool:
    if len(sites) != 1:
        return False
    a, b = sites[0].a, sites[0].b
    if a.kind is not K.BINARY_OP or b.kind is not K.BINARY_OP or a.value == b.value:
        return False
    cls = operator_class(a.value)
    return (
        cls is not None
        and cls == operator_class(b.value)
        and all(p.same(c, d) for c, d in zip(a.children, b.children))
    )


def _r_unary(p: _Pair, sites, x, y) -> bool:
    if len(sites) != 1:
        return False
    a, b = sites[0].a, sites[0].b
    if a.kind is K.UNARY_OP and b.kind is K.UNARY_OP:
        return a.value != b.value and p.same(a.children[0], b.children[0])
    if b.kind is K.UNARY_OP and a.kind is not K.UNARY_OP:
        return p.same(a, b.children[0])
    if a.kind is K.UNARY_OP and b.kind is not K.UNARY_OP:
        return p.same(a.children[0], b)
    return False


def _r_operand(p: _Pair, sites, x, y) -> bool:
    return len(sites) == 1 and _is_binary_operand(sites[0])


def _if_conditions(p: _Pair, x: AstNode, y: AstNode):
    if x.kind is K.IF and y.kind is K.IF and not p.same(x.children[0], y.children[0]):
        return x.children[0], y.children[0]
    return None


def _strip_parens(n: AstNode) -> AstNode:
    while n.kind is K.PAREN and n.children:
        n = n.children[0]
    return n


def _extends(p: _Pair, x, y, op: str) -> bool:
    conds = _if_conditions(p, x, y)
    if conds is None:
        return False
    old, new = conds
    new = _strip_parens(new)
    if new.kind is not K.BINARY_OP or new.value != op:
        return False
    old_text = p.ta(_strip_parens(old))
    return any(p.tb(_strip_parens(c)) == old_text for c in new.children)


def _r_more_specific(p, sites, x, y) -> bool:
    return _extends(p, x, y, "&&")


def _r_less_specific(p, sites, x, y) -> bool:
    return _extends(p, x, y, "||")


Rule = Callable[[_Pair, list, AstNode, AstNode], bool]

STATEMENT_RULES: tuple[tuple[DefectLabel, Rule], ...] = (
    (DefectLabel.CHANGE_IDENTIFIER_USED, _r_identifier),
    (DefectLabel.CHANGE_NUMERIC_LITERAL, _r_numeric),
    (DefectLabel.CHANGE_BOOLEAN_LITERAL, _r_boolean),
    (DefectLabel.CHANGE_MODIFIER, _r_modifier),
    (DefectLabel.WRONG_FUNCTION_NAME, _r_wrong_name),
    (DefectLabel.SAME_FUNCTION_MORE_ARGS, _r_more_args),
    (DefectLabel.SAME_FUNCTION_LESS_ARGS, _r_less_args),
    (DefectLabel.SAME_FUNCTION_CHANGE_CALLER, _r_change_caller),
    (DefectLabel.SAME_FUNCTION_SWAP_ARGS, _r_swap_args),
    (DefectLabel.CHANGE_BINARY_OPERATOR, _r_binary),
    (DefectLabel.CHANGE_UNARY_OPERATOR, _r_unary),
    (DefectLabel.CHANGE_OPERAND, _r_operand),
    (DefectLabel.MORE_SPECIFIC_IF, _r_more_specific),
    (DefectLabel.LESS_SPECIFIC_IF, _r_less_specific),
)


def _header_span(fn: FunctionDecl) -> tuple[int, int]:
    return (fn.node.token_span[0], fn.body.token_span[0])


def _signature_match(buggy: FunctionDecl, fixed: FunctionDecl) -> DefectLabel | None:
    if buggy.signature_key() != fixed.signature_key():
        return None
    mods_differ = buggy.modifiers != fixed.modifiers
    throws_differ = buggy.throws_list != fixed.throws_list
    if mods_differ and not throws_differ:
        return DefectLabel.CHANGE_MODIFIER
    if throws_differ and not mods_differ:
        tb, tf = set(buggy.throws_list), set(fixed.throws_list)
        if tb < tf:
            return DefectLabel.MISSING_THROWS_EXCEPTION
        if tf < tb:
            return DefectLabel.DELETE_THROWS_EXCEPTION
    return None


def _as_decl(f: FunctionDecl | str) -> FunctionDecl:
    return parse_function(f) if isinstance(f, str) else f


def match_pattern(before: FunctionDecl | str, after: FunctionDecl | str) -> PatternMatch | None:
    """Label the change ``before`` (buggy) -> ``after`` (fixed); None if no rule fires.

    Raises NotSingleStatement unless exactly one statement changed, or only
    the signature (modifiers / throws clause) changed.
    """
    buggy, fixed = _as_decl(before), _as_decl(after)
    diff = diff_statements(buggy, fixed)
    header_same = buggy.modifiers == fixed.modifiers and buggy.throws_list == fixed.throws_list and buggy.signature_key() == fixed.signature_key()
    if diff.counts() == (0, 0, 0):
        if header_same:
            raise NotSingleStatement("functions are identical: no changed statement")
        label = _signature_match(buggy, fixed)
        if label is None:
            return None
        return PatternMatch(label, buggy.node, fixed.node, _header_span(buggy))
    if diff.counts() != (1, 0, 0) or not header_same:
        raise NotSingleStatement(f"change touches {diff.counts()} statements (changed, inserted, deleted)")
    x, y, header_only = diff.pairs[0]
    p = _Pair(buggy, fixed)
    if header_only:
        sites = p.sites(x.children[0], y.children[0], x, y, 0)
    else:
        sites = p.sites(x, y)
    for label, rule in STATEMENT_RULES:
        if rule(p, sites, x, y):
            span = sites[0].a.token_span if sites else x.token_span
            return PatternMatch(label, x, y, span)
    return None


def classify_pair(before, after) -> DefectLabel | None:
    """match_pattern without the exception: None for anything unlabelled."""
    try:
        m = match_pattern(before, after)
    except NotSingleStatement:
        return None
    return None if m is None else m.label


# ---------------------------------------------------------------------------
# injection


def _walk_with_parent(node: AstNode, parent: AstNode | None = None, index: int = 0) -> Iterator[tuple[AstNode, AstNode | None, int]]:
    yield node, parent, index
    for i, c in enumerate(node.children):
        yield from _walk_with_parent(c, node, i)


def _body_nodes(fn: FunctionDecl):
    """(node, parent, index) for every node inside the body, skipping types."""
    for n, parent, i in _walk_with_parent(fn.body):
        if n.kind is K.TYPE or (parent is not None and parent.kind is K.TYPE):
            continue
        yield n, parent, i


def variable_names(fn: FunctionDecl) -> list[str]:
    names = [p.name for p in fn.params]
    for n in fn.body.walk():
        if n.kind is K.VAR_DECL and n.value not in names:
            names.append(n.value)
    return names


Edit = tuple[int, int, list[str]]  # replace tokens[s:e] with new texts


def _apply(fn: FunctionDecl, edit: Edit) -> str:
    s, e, new = edit
    texts = [t.text for t in fn.tokens]
    return format_tokens(texts[:s] + list(new) + texts[e:])


def _texts(fn: FunctionDecl, n: AstNode) -> list[str]:
    s, e = n.token_span
    return [t.text for t in fn.tokens[s:e]]


def _is_decl_name(n: AstNode, parent: AstNode | None) -> bool:
    return parent is not None and parent.kind is K.VAR_DECL and n.kind is K.IDENTIFIER and n.value == parent.value


def _e_identifier(fn: FunctionDecl, rng) -> Iterator[Edit]:
    names = variable_names(fn)
    for n, parent, i in _body_nodes(fn):
        if n.kind is not K.IDENTIFIER or parent is None or _is_decl_name(n, parent):
            continue
        if parent.kind is K.BINARY_OP or (parent.kind is K.CALL and parent.receiver and i == 0):
            continue
        for other in names:
            if other != n.value:
                yield (*n.token_span, [other])


def _e_numeric(fn, rng) -> Iterator[Edit]:
    for n, _, _ in _body_nodes(fn):
        if is_numeric_literal(n):
            text = n.value
            if text.isdigit():
                v = int(text)
                for alt in (v + 1, v - 1 if v > 0 else v + 2):
                    yield (*n.token_span, [str(alt)])
            elif text.replace(".", "", 1).isdigit():
                yield (*n.token_span, [str(float(text) + 1.0)])


def _e_boolean(fn, rng) -> Iterator[Edit]:
    for n, _, _ in _body_nodes(fn):
        if is_boolean_literal(n):
            yield (*n.token_span, ["false" if n.value == "true" else "true"])


def _e_modifier(fn, rng) -> Iterator[Edit]:
    for n, _, _ in _body_nodes(fn):
        if n.kind is K.VAR_DECL:
            s = n.token_span[0]
            mods = [c for c in n.children if c.kind is K.MODIFIER]
            if mods:
                yield (mods[0].token_span[0], mods[-1].token_span[1], [])
            else:
                yield (s, s, ["final"])


def _calls(fn):
    for n, _, _ in _body_nodes(fn):
        if n.kind is K.CALL:
            yield n


def _name_token(fn: FunctionDecl, call: AstNode) -> int:
    s, e = call.token_span
    start = call.children[0].token_span[1] if call.receiver else s
    for k in range(start, e):
        if fn.tokens[k].text == call.value:
            return k
    raise Inapplicable("call name token not found")


# names a developer could plausibly confuse
CONFUSABLE_NAMES = {
    "add": "put",
    "put": "add",
    "min": "max",
    "max": "min",
    "get": "remove",
    "remove": "get",
    "open": "close",
    "close": "open",
    "read": "write",
    "write": "read",
    "info": "debug",
    "debug": "info",
    "size": "length",
    "length": "size",
    "flush": "close",
    "contains": "containsKey",
    "containsKey": "containsValue",
    "isOpen": "isClosed",
    "isEmpty": "isBlank",
}


def _e_wrong_name(fn, rng) -> Iterator[Edit]:
    for c in _calls(fn):
        k = _name_token(fn, c)
        if c.value in CONFUSABLE_NAMES:
            yield (k, k + 1, [CONFUSABLE_NAMES[c.value]])


def _arg_edit(fn: FunctionDecl, call: AstNode, new_args: list[list[str]]) -> Edit:
    k = _name_token(fn, call)
    # tokens k+1 .. end-1 are "(" args ")"
    out = ["("]
    for i, a in enumerate(new_args):
        if i:
            out.append(",")
        out.extend(a)
    out.append(")")
    return (k + 1, call.token_span[1], out)


def _e_more_args(fn, rng) -> Iterator[Edit]:
    # the fix calls the overload with more arguments, so the bug drops one
    for c in _calls(fn):
        args = [_texts(fn, a) for a in c.args]
        if args:
            yield _arg_edit(fn, c, args[:-1])


def _e_less_args(fn, rng) -> Iterator[Edit]:
    names = variable_names(fn)
    for c in _calls(fn):
        args = [_texts(fn, a) for a in c.args]
        for extra in names:
            if [extra] not in args:
                yield _arg_edit(fn, c, args + [[extra]])


def _e_change_caller(fn, rng) -> Iterator[Edit]:
    names = variable_names(fn)
    for c in _calls(fn):
        if c.receiver and c.children[0].kind is K.IDENTIFIER:
            r = c.children[0]
            for other in names:
                if other != r.value:
                    yield (*r.token_span, [other])


def _e_swap_args(fn, rng) -> Iterator[Edit]:
    for c in _calls(fn):
        args = [_texts(fn, a) for a in c.args]
        for i in range(len(args)):
            for j in range(i + 1, len(args)):
                if args[i] != args[j]:
                    new = list(args)
                    new[i], new[j] = new[j], new[i]
                    yield _arg_edit(fn, c, new)


def _op_token(fn: FunctionDecl, n: AstNode) -> int:
    k = n.children[0].token_span[1]
    while fn.tokens[k].text != n.value:
        k += 1
    return k


def _e_binary(fn, rng) -> Iterator[Edit]:
    for n, _, _ in _body_nodes(fn):
        if n.kind is K.BINARY_OP:
            cls = operator_class(n.value)
            if cls is None:
                continue
            k = _op_token(fn, n)
            for alt in sorted(OPERATOR_CLASSES[cls] - {n.value}):
                yield (k, k + 1, [alt])


def _e_unary(fn, rng) -> Iterator[Edit]:
    for n, parent, _ in _body_nodes(fn):
        if n.kind is K.UNARY_OP:
            s, e = n.token_span
            inner = _texts(fn, n.children[0])
            if n.value in ("post++", "post--"):
                yield (e - 1, e, ["--" if n.value == "post++" else "++"])
            elif n.value in ("++", "--"):
                yield (s, s + 1, ["--" if n.value == "++" else "++"])
            elif n.value in ("!", "-", "~"):
                yield (s, e, inner)
        elif parent is not None and parent.kind is K.IF and n is parent.children[0]:
            if n.kind in (K.IDENTIFIER, K.CALL, K.FIELD_ACCESS, K.PAREN):
                s, _ = n.token_span
                yield (s, s, ["!"])


def _e_operand(fn, rng) -> Iterator[Edit]:
    names = variable_names(fn)
    for n, parent, _ in _body_nodes(fn):
        if parent is None or parent.kind is not K.BINARY_OP:
            continue
        if n.kind is K.IDENTIFIER or (n.kind is K.LITERAL and not is_boolean_literal(n)):
            for other in names:
                if other != n.value:
                    yield (*n.token_span, [other])


def _e_specific_if(op: str):
    def gen(fn, rng) -> Iterator[Edit]:
        # the fix adds an operand, so the bug keeps only one side
        for n, _, _ in _body_nodes(fn):
            if n.kind is K.IF:
                cond = n.children[0]
                if cond.kind is K.BINARY_OP and cond.value == op:
                    left, right = cond.children
                    yield (*cond.token_span, _texts(fn, left))
                    yield (*cond.token_span, _texts(fn, right))

    return gen


def _throws_node(fn: FunctionDecl) -> AstNode | None:
    for c in fn.node.children:
        if c.kind is K.THROWS:
            return c
    return None


def _e_missing_throws(fn, rng) -> Iterator[Edit]:
    # the fix adds a throws entry, so the bug lacks one
    t = _throws_node(fn)
    if t is None:
        return
    types = [_texts(fn, c) for c in t.children]
    if len(types) == 1:
        yield (*t.token_span, [])
        return
    for i in range(len(types)):
        rest = [x for j, x in enumerate(types) if j != i]
        new = ["throws"]
        for k, x in enumerate(rest):
            if k:
                new.append(",")
            new.extend(x)
        yield (*t.token_span, new)


EXTRA_EXCEPTIONS = ("Exception", "IOException", "IllegalStateException", "RuntimeException")


def _e_delete_throws(fn, rng) -> Iterator[Edit]:
    # the fix removes a throws entry, so the bug declares an extra one
    t = _throws_node(fn)
    existing = set(fn.throws_list)
    for exc in EXTRA_EXCEPTIONS:
        if exc in existing:
            continue
        if t is None:
            k = fn.body.token_span[0]
            yield (k, k, ["throws", exc])
        else:
            k = t.token_span[1]
            yield (k, k, [",", exc])


INJECTORS: dict[DefectLabel, Callable[[FunctionDecl, np.random.Generator], Iterator[Edit]]] = {
    DefectLabel.CHANGE_IDENTIFIER_USED: _e_identifier,
    DefectLabel.CHANGE_NUMERIC_LITERAL: _e_numeric,
    DefectLabel.CHANGE_BOOLEAN_LITERAL: _e_boolean,
    DefectLabel.CHANGE_MODIFIER: _e_modifier,
    DefectLabel.WRONG_FUNCTION_NAME: _e_wrong_name,
    DefectLabel.SAME_FUNCTION_MORE_ARGS: _e_more_args,
    DefectLabel.SAME_FUNCTION_LESS_ARGS: _e_less_args,
    DefectLabel.SAME_FUNCTION_CHANGE_CALLER: _e_change_caller,
    DefectLabel.SAME_FUNCTION_SWAP_ARGS: _e_swap_args,
    DefectLabel.CHANGE_BINARY_OPERATOR: _e_binary,
    DefectLabel.CHANGE_UNARY_OPERATOR: _e_unary,
    DefectLabel.CHANGE_OPERAND: _e_operand,
    DefectLabel.MORE_SPECIFIC_IF: _e_specific_if("&&"),
    DefectLabel.LESS_SPECIFIC_IF: _e_specific_if("||"),
    DefectLabel.MISSING_THROWS_EXCEPTION: _e_missing_throws,
    DefectLabel.DELETE_THROWS_EXCEPTION: _e_delete_throws,
}


def candidate_injections(template: FunctionDecl | str, label: DefectLabel) -> list[str]:
    """Every buggy version of ``template`` whose fix is recognised as ``label``."""
    fn = _as_decl(template)
    fixed_src = format_tokens(fn.tokens)
    fixed = parse_function(fixed_src)
    out: list[str] = []
    for edit in INJECTORS[label](fixed, None):
        try:
            buggy_src = _apply(fixed, edit)
            if buggy_src in out or buggy_src == fixed_src:
                continue
            if classify_pair(buggy_src, fixed) is label:
                out.append(buggy_src)
        except JParseError:
            continue
    return out


def inject_defect(template: FunctionDecl | str, label: DefectLabel, rng: np.random.Generator, triple_id: str = "synthetic") -> FunctionTriple:
    """clean = fixed = template; buggy carries one defect of ``label``."""
    label = DefectLabel(label)
    if label is DefectLabel.CLEAN:
        raise ValueError("inject_defect needs a defect label, not CLEAN")
    options = candidate_injections(template, label)
    if not options:
        raise Inapplicable(f"template has no site for {label.name}")
    buggy = options[int(rng.integers(len(options)))]
    fixed = format_tokens(_as_decl(template).tokens)
    return _triple(triple_id, label, fixed, buggy, fixed)


def _first_diff_lines(a_src: str, b_src: str) -> tuple[int, int]:
    a, b = parse_function(a_src).tokens, parse_function(b_src).tokens
    for x, y in zip(a, b):
        if x.text != y.text:
            return x.line, y.line
    n = min(len(a), len(b))
    return (a[n].line if n < len(a) else a[-1].line), (b[n].line if n < len(b) else b[-1].line)


def _triple(tid: str, label: DefectLabel, clean: str, buggy: str, fixed: str) -> FunctionTriple:
    if buggy == fixed:
        line = _first_diff_lines(clean, buggy)[1] if clean != buggy else 1
        bl = fl = line
    else:
        bl, fl = _first_diff_lines(buggy, fixed)
    return FunctionTriple(tid, "synthetic", "", None, label, clean, buggy, fixed, bl, fl, "Synthetic.java")


# ---------------------------------------------------------------------------
# benign edits and the corpus generator

RENAME_POOL = ("value", "item", "acc", "cur", "res", "tmp", "elem", "total")


def benign_renames(template: FunctionDecl | str) -> list[str]:
    """Consistent renames of a local variable used in two or more statements."""
    fn = _as_decl(template)
    taken = {t.text for t in fn.tokens}
    locals_ = [n.value for n in fn.body.walk() if n.kind is K.VAR_DECL]
    out = []
    for name in locals_:
        stmts = 0
        for st in fn.body.walk():
            if st.kind in (K.VAR_DECL, K.EXPRESSION_STMT, K.RETURN, K.IF, K.WHILE, K.THROW):
                head = st.children[0] if st.kind in (K.IF, K.WHILE) else st
                if any(n.kind is K.IDENTIFIER and n.value == name for n in head.walk()) or (st.kind is K.VAR_DECL and st.value == name):
                    stmts += 1
        if stmts < 2:
            continue
        for new in RENAME_POOL:
            if new in taken:
                continue
            texts = [new if (t.kind.value == "Identifier" and t.text == name) else t.text for t in fn.tokens]
            out.append(format_tokens(texts))
    return out


DEFAULT_TEMPLATES: tuple[str, ...] = (
    """public int clamp(int value, int low, int high) {
    if (value < low && low <= high) {
        return low;
    }
    int result = Math.min(value, high);
    return result;
}""",
    """boolean isReady(Connection conn, int retries) throws IOException {
    if (conn == null || retries > 3) {
        return false;
    }
    conn.open(retries, 100);
    return true;
}""",
    """void addItems(List items, Item item, int count) {
    int added = 0;
    while (added < count) {
        items.add(item);
        added++;
    }
    log.info(item, added);
}""",
    """String describe(Buffer buf, String prefix) throws IllegalStateException {
    final int size = buf.size();
    if (!buf.isOpen()) {
        throw new IllegalStateException(prefix);
    }
    return prefix + buf.read(0, size);
}""",
    """static double scale(double x, double factor) {
    double y = x * factor;
    if (y > 1.0) {
        y = 1.0;
    }
    return y - 0.5;
}""",
    """public void update(Map cache, String key, Object value) {
    boolean force = false;
    if (cache.containsKey(key) && value != null) {
        cache.put(key, value);
        force = true;
    }
    notify(key, force);
}""",
    """int indexOf(int[] data, int target) {
    int i = 0;
    while (i < data.length) {
        if (data[i] == target) {
            return i;
        }
        i = i + 1;
    }
    return -1;
}""",
    """protected void send(Socket socket, byte[] payload, int offset) throws IOException, TimeoutException {
    Stream out = socket.getOutputStream();
    out.write(payload, offset, payload.length - offset);
    out.flush();
}""",
)


@dataclass
class SynthSpec:
    seed: int = 0
    count_per_label: int = 2
    templates: Sequence[str] = DEFAULT_TEMPLATES
    clean_fraction: float = 0.5
    labels: Sequence[DefectLabel] = field(default_factory=lambda: list(DEFECT_LABELS))

    def validate(self) -> None:
        if self.count_per_label < 1:
            raise ValueError("count_per_label must be >= 1")
        if not 0.0 <= self.clean_fraction < 1.0:
            raise ValueError("clean_fraction must be in [0, 1)")
        if not self.templates:
            raise ValueError("no templates")


def clean_count(n_defective: int, clean_fraction: float) -> int:
    return int(round(n_defective * clean_fraction / (1.0 - clean_fraction)))


def generate_corpus(spec: SynthSpec) -> list[FunctionTriple]:
    """Deterministic synthetic triples: ``count_per_label`` per defect label
    followed by clean triples making up ``clean_fraction`` of the total."""
    spec.validate()
    templates = [format_tokens(parse_function(t).tokens) for t in spec.templates]
    out: list[FunctionTriple] = []
    for label in spec.labels:
        label = DefectLabel(label)
        rng = np.random.default_rng([spec.seed, int(label)])
        pool = [(ti, b) for ti, t in enumerate(templates) for b in candidate_injections(t, label)]
        if not pool:
            raise NoApplicableTemplate(f"no template admits {label.name}")
        order = rng.permutation(len(pool))
        # spread picks over templates before reusing one
        picked: list[int] = []
        used_templates: set[int] = set()
        for k in order:
            if pool[k][0] not in used_templates:
                picked.append(int(k))
                used_templates.add(pool[k][0])
            if len(picked) == spec.count_per_label:
                break
        for k in order:
            if len(picked) >= spec.count_per_label:
                break
            if int(k) not in picked:
                picked.append(int(k))
        while len(picked) < spec.count_per_label:
            picked.append(picked[len(picked) % len(pool)])
        for j, k in enumerate(picked):
            ti, buggy = pool[k]
            out.append(_triple(f"synth-{label.name.lower()}-{j}", label, templates[ti], buggy, templates[ti]))
    n_clean = clean_count(len(out), spec.clean_fraction)
    rng = np.random.default_rng([spec.seed, 0])
    pool = [(ti, b) for ti, t in enumerate(templates) for b in benign_renames(t)]
    if n_clean and not pool:
        raise NoApplicableTemplate("no template admits a benign rename")
    order = list(rng.permutation(len(pool))) if pool else []
    for j in range(n_clean):
        ti, renamed = pool[int(order[j % len(order)])]
        out.append(_triple(f"synth-clean-{j}", DefectLabel.CLEAN, templates[ti], renamed, renamed))
    return out
