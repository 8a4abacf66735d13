"""Variable sequence and "comes-from" data-flow graph over a parsed function."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .jparse import AstNode, FunctionDecl, NodeKind


class Access(str, enum.Enum):
    READ = "Read"
    WRITE = "Write"


@dataclass(frozen=True)
class VariableOccurrence:
    name: str
    index: int
    token_index: int
    access: Access


@dataclass(frozen=True)
class DataFlowGraph:
    vars: tuple[VariableOccurrence, ...]
    edges: frozenset[tuple[int, int]]

    def validate(self) -> None:
        k = len(self.vars)
        for a, b in self.edges:
            if not (0 <= a < k and 0 <= b < k):
                raise ValueError(f"edge {(a, b)} out of range for {k} vars")
            if a == b:
                raise ValueError(f"self-loop on var {a}")


def _is_write_target(node: AstNode, parent: AstNode | None, idx: int) -> bool:
    if parent is None:
        return False
    if parent.kind is NodeKind.VAR_DECL or parent.kind is NodeKind.PARAM:
        return node.kind is NodeKind.IDENTIFIER and node.value == parent.value
    if parent.kind is NodeKind.ASSIGN:
        return idx == 0
    if parent.kind is NodeKind.UNARY_OP:
        return parent.value in ("++", "--", "post++", "post--")
    return False


def _occurrence_map(fn: FunctionDecl) -> dict[int, VariableOccurrence]:
    """Identifier leaves in left-to-right order, keyed by token index."""
    occ: dict[int, VariableOccurrence] = {}

    def visit(node: AstNode, parent: AstNode | None, idx: int) -> None:
        if node.kind is NodeKind.IDENTIFIER:
            tok = node.token_span[0]
            access = Access.WRITE if _is_write_target(node, parent, idx) else Access.READ
            occ[tok] = VariableOccurrence(node.value, len(occ), tok, access)
            return
        for i, c in enumerate(node.children):
            visit(c, node, i)

    visit(fn.node, None, 0)
    return occ


def extract_variables(fn: FunctionDecl) -> list[VariableOccurrence]:
    """Variable occurrences (parameters included) in AST-leaf order."""
    return list(_occurrence_map(fn).values())


@dataclass
class _Env:
    defs: dict[str, set[int]] = field(default_factory=dict)

    def copy(self) -> "_Env":
        return _Env({k: set(v) for k, v in self.defs.items()})

    def merge(self, other: "_Env") -> "_Env":
        out = self.copy()
        for k, v in other.defs.items():
            out.defs.setdefault(k, set()).update(v)
        return out


class _Builder:
    def __init__(self, occ: dict[int, VariableOccurrence]):
        self.occ = occ
        self.edges: set[tuple[int, int]] = set()

    def add(self, src: int, dst: int) -> None:
        if src != dst:
            self.edges.add((src, dst))

    def write_index(self, ident: AstNode) -> int:
        return self.occ[ident.token_span[0]].index

    # Expressions return the occurrences the expression's value comes from.
    def expr(self, node: AstNode, env: _Env) -> list[int]:
        k = node.kind
        if k is NodeKind.IDENTIFIER:
            o = self.occ[node.token_span[0]]
            for d in sorted(env.defs.get(o.name, ())):
                self.add(d, o.index)
            return [o.index]
        if k is NodeKind.ASSIGN:
            target, value = node.children
            sources = self.expr(value, env)
            if target.kind is NodeKind.IDENTIFIER:
                w = self.write_index(target)
                if node.value != "=":
                    for d in sorted(env.defs.get(target.value, ())):
                        self.add(d, w)
                for s in sources:
                    self.add(s, w)
                env.defs[target.value] = {w}
                return [w]
            self.expr(target, env)
            return sources
        if k is NodeKind.UNARY_OP and node.value in ("++", "--", "post++", "post--"):
            target = node.children[0]
            if target.kind is NodeKind.IDENTIFIER:
                w = self.write_index(target)
                for d in sorted(env.defs.get(target.value, ())):
                    self.add(d, w)
                env.defs[target.value] = {w}
                return [w]
            return self.expr(target, env)
        if k is NodeKind.CONDITIONAL:
            cond, a, b = node.children
            out = self.expr(cond, env)
            ea, eb = env.copy(), env.copy()
            out += self.expr(a, ea) + self.expr(b, eb)
            env.defs = ea.merge(eb).defs
            return out
        if k is NodeKind.BINARY_OP and node.value in ("&&", "||"):
            left, right = node.children
            out = self.expr(left, env)
            er = env.copy()
            out += self.expr(right, er)
            env.defs = env.merge(er).defs
            return out
        out: list[int] = []
        for c in node.children:
            if c.kind is NodeKind.TYPE:
                continue
            out.extend(self.expr(c, env))
        return out

    def stmts(self, nodes, env: _Env) -> None:
        declared: list[str] = []
        for s in nodes:
            self.stmt(s, env, declared)
        for name in declared:
            env.defs.pop(name, None)

    def stmt(self, node: AstNode, env: _Env, declared: list[str]) -> None:
        k = node.kind
        if k is NodeKind.BLOCK:
            self.stmts(node.children, env)
        elif k is NodeKind.VAR_DECL:
            ident = next(c for c in node.children if c.kind is NodeKind.IDENTIFIER and c.value == node.value)
            w = self.write_index(ident)
            init = node.children[-1] if node.children[-1] is not ident else None
            if init is not None:
                for s in self.expr(init, env):
                    self.add(s, w)
            env.defs[node.value] = {w}
            declared.append(node.value)
        elif k is NodeKind.IF:
            self.expr(node.children[0], env)
            then_env = env.copy()
            self.stmts([node.children[1]], then_env)
            else_env = env.copy()
            if len(node.children) > 2:
                self.stmts([node.children[2]], else_env)
            env.defs = then_env.merge(else_env).defs
        elif k is NodeKind.WHILE:
            cond, body = node.children
            entry = env.copy()
            first = env.copy()
            self.expr(cond, first)
            self.stmts([body], first)
            # second pass: definitions from the body reach the loop head
            second = entry.merge(first)
            self.expr(cond, second)
            self.stmts([body], second)
            env.defs = entry.merge(second).defs
        else:
            for c in node.children:
                self.expr(c, env)


def build_dfg(fn: FunctionDecl) -> DataFlowGraph:
    """Edges (i, j) meaning occurrence j's value comes from occurrence i."""
    occ = _occurrence_map(fn)
    b = _Builder(occ)
    env = _Env()
    for c in fn.node.children:
        if c.kind is NodeKind.PARAM:
            ident = next(x for x in c.children if x.kind is NodeKind.IDENTIFIER)
            env.defs[c.value] = {b.write_index(ident)}
    b.stmts(fn.body.children, env)
    g = DataFlowGraph(tuple(occ.values()), frozenset(b.edges))
    g.validate()
    return g
