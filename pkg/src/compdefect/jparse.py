"""Lexer and recursive-descent parser for a statement-oriented Java subset.

The subset covers what single-statement defect patterns touch: local
declarations, assignments, if/else, while, return, throw, calls with
receivers, object creation, binary/unary/conditional expressions, casts,
literals, throws clauses and modifiers.  Generics, lambdas, method
references and anonymous classes raise :class:`UnsupportedConstruct`.
"""
from __future__ import annotations

import bisect
import enum
import re
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence


class TokenKind(str, enum.Enum):
    IDENTIFIER = "Identifier"
    KEYWORD = "Keyword"
    NUMERIC_LITERAL = "NumericLiteral"
    STRING_LITERAL = "StringLiteral"
    BOOLEAN_LITERAL = "BooleanLiteral"
    OPERATOR = "Operator"
    PUNCTUATION = "Punctuation"


KEYWORDS = frozenset(
    """abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new null package
    private protected public return short static strictfp super switch
    synchronized this throw throws transient try void volatile while""".split()
)
PRIMITIVE_TYPES = frozenset("boolean byte char short int long float double".split())
MODIFIERS = frozenset(
    """public private protected static final abstract synchronized native
    strictfp transient volatile default""".split()
)

_OPERATORS = sorted(
    """>>>= <<= >>= >>> -> :: ++ -- && || == != <= >= += -= *= /= %= &= |= ^=
    << >> = + - * / % < > ! ~ & | ^ ? :""".split(),
    key=len,
    reverse=True,
)
_PUNCTUATION = ("...", "(", ")", "{", "}", "[", "]", ";", ",", ".", "@")

_WS_RE = re.compile(r"[ \t\r\n\f]+")
_IDENT_RE = re.compile(r"(?:[^\W\d]|\$)(?:\w|\$)*")
_NUMBER_RE = re.compile(
    r"0[xX][0-9a-fA-F_]+[lL]?"
    r"|0[bB][01_]+[lL]?"
    r"|(?:\d[\d_]*(?:\.(?!\.)[\d_]*)?|\.\d[\d_]*)(?:[eE][+-]?\d+)?[fFdDlL]?"
)


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    line: int
    column: int
    offset: int = 0

    @property
    def end(self) -> int:
        return self.offset + len(self.text)


class JParseError(Exception):
    """Base class for front-end failures."""


class LexError(JParseError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at {line}:{column}")
        self.line = line
        self.column = column


class UnterminatedString(LexError):
    pass


class UnterminatedComment(LexError):
    pass


class IllegalCharacter(LexError):
    pass


class JavaSyntaxError(JParseError):
    def __init__(self, token: Token | None, expected: Sequence[str]):
        self.token = token
        self.expected = tuple(sorted(set(expected)))
        if token is None:
            where = "end of input"
            self.line = self.column = None
        else:
            where = f"{token.text!r} at {token.line}:{token.column}"
            self.line, self.column = token.line, token.column
        super().__init__(f"unexpected {where}; expected one of {', '.join(self.expected)}")


class UnsupportedConstruct(JParseError):
    def __init__(self, construct: str, token: Token | None = None):
        self.construct = construct
        self.token = token
        where = f" at {token.line}:{token.column}" if token is not None else ""
        super().__init__(f"unsupported construct: {construct}{where}")


def _line_starts(source: str) -> list[int]:
    starts = [0]
    for m in re.finditer("\n", source):
        starts.append(m.end())
    return starts


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens, dropping whitespace, comments and annotations."""
    starts = _line_starts(source)

    def pos(offset: int) -> tuple[int, int]:
        line = bisect.bisect_right(starts, offset)
        return line, offset - starts[line - 1] + 1

    raw: list[Token] = []
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        m = _WS_RE.match(source, i)
        if m:
            i = m.end()
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            i = n if j < 0 else j
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j < 0:
                raise UnterminatedComment("unterminated comment", *pos(i))
            i = j + 2
            continue
        if ch == '"' or ch == "'":
            j = i + 1
            while True:
                if j >= n or source[j] == "\n":
                    raise UnterminatedString("unterminated literal", *pos(i))
                if source[j] == "\\":
                    j += 2
                    continue
                if source[j] == ch:
                    break
                j += 1
            raw.append(Token(TokenKind.STRING_LITERAL, source[i : j + 1], *pos(i), i))
            i = j + 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            m = _NUMBER_RE.match(source, i)
            raw.append(Token(TokenKind.NUMERIC_LITERAL, m.group(), *pos(i), i))
            i = m.end()
            continue
        m = _IDENT_RE.match(source, i)
        if m:
            word = m.group()
            if word in ("true", "false"):
                kind = TokenKind.BOOLEAN_LITERAL
            elif word in KEYWORDS:
                kind = TokenKind.KEYWORD
            else:
                kind = TokenKind.IDENTIFIER
            raw.append(Token(kind, word, *pos(i), i))
            i = m.end()
            continue
        for p in _PUNCTUATION:
            if source.startswith(p, i):
                raw.append(Token(TokenKind.PUNCTUATION, p, *pos(i), i))
                i += len(p)
                break
        else:
            for op in _OPERATORS:
                if source.startswith(op, i):
                    raw.append(Token(TokenKind.OPERATOR, op, *pos(i), i))
                    i += len(op)
                    break
            else:
                raise IllegalCharacter(f"illegal character {ch!r}", *pos(i))
    return _strip_annotations(raw)


def _strip_annotations(tokens: list[Token]) -> list[Token]:
    out: list[Token] = []
    i = 0
    while i < len(tokens):
        t = tokens[i]
        if t.text == "@" and i + 1 < len(tokens) and tokens[i + 1].kind is TokenKind.IDENTIFIER:
            i += 2
            while (
                i + 1 < len(tokens)
                and tokens[i].text == "."
                and tokens[i + 1].kind is TokenKind.IDENTIFIER
            ):
                i += 2
            if i < len(tokens) and tokens[i].text == "(":
                depth = 0
                while i < len(tokens):
                    if tokens[i].text == "(":
                        depth += 1
                    elif tokens[i].text == ")":
                        depth -= 1
                        if depth == 0:
                            i += 1
                            break
                    i += 1
            continue
        out.append(t)
        i += 1
    return out


# ---------------------------------------------------------------------------
# Token-level rendering


def join_tokens(tokens: Sequence[Token | str]) -> str:
    """Whitespace-normalized form: token texts separated by single spaces."""
    return " ".join(t if isinstance(t, str) else t.text for t in tokens)


def normalize_source(source: str) -> str:
    return join_tokens(tokenize(source))


_NO_SPACE_BEFORE = frozenset(";,)].")
_NO_SPACE_AFTER = frozenset("([.")
_UNARY_CONTEXT = frozenset(
    "( [ , = return throw ? : += -= *= /= %= &= |= ^= <<= >>= >>>= == != < > <= >= && || + - * / % ! ~ & | ^ case".split()
)


def _text(t: Token | str) -> str:
    return t if isinstance(t, str) else t.text


def format_tokens(tokens: Sequence[Token | str], indent: str = "    ") -> str:
    """Render tokens as readable multi-line Java that re-tokenizes identically."""
    texts = [_text(t) for t in tokens]
    lines: list[str] = []
    cur = ""
    depth = 0
    paren = 0

    def flush() -> None:
        nonlocal cur
        if cur.strip():
            lines.append(indent * depth + cur.strip())
        cur = ""

    prev = None
    for k, tx in enumerate(texts):
        nxt = texts[k + 1] if k + 1 < len(texts) else None
        if tx == "{":
            cur += " {"
            flush()
            depth += 1
            prev = None
            continue
        if tx == "}":
            flush()
            depth = max(0, depth - 1)
            cur = "}"
            if nxt != "else":
                flush()
                prev = None
            else:
                prev = tx
            continue
        if prev is None:
            cur += tx
        else:
            space = True
            if tx in _NO_SPACE_BEFORE or prev in _NO_SPACE_AFTER:
                space = False
            elif tx in ("(", "[") and (_is_word(prev) and prev not in _SPACED_KEYWORDS or prev in (")", "]")):
                space = False
            elif prev in ("!", "~") or (
                prev in ("-", "+", "++", "--") and _is_unary_at(texts, k - 1)
            ):
                space = False
            elif tx in ("++", "--") and _is_word(prev) and not (nxt and _is_word(nxt)):
                space = False
            if _is_op(prev) and _is_op(tx):
                space = True
            cur += (" " if space else "") + tx
        if tx == "(":
            paren += 1
        elif tx == ")":
            paren = max(0, paren - 1)
        if tx == ";" and paren == 0:
            flush()
            prev = None
        else:
            prev = tx
    flush()
    return "\n".join(lines) + ("\n" if lines else "")


_SPACED_KEYWORDS = frozenset("if while for switch catch return throw synchronized".split())


def _is_word(tx: str) -> bool:
    return bool(tx) and (tx[0].isalnum() or tx[0] in "_$\"'")


def _is_op(tx: str) -> bool:
    return tx in _OPERATORS


def _is_unary_at(texts: Sequence[str], k: int) -> bool:
    if k == 0:
        return True
    return texts[k - 1] in _UNARY_CONTEXT or texts[k - 1] in ("{", "}", ";")


# ---------------------------------------------------------------------------
# AST


class NodeKind(str, enum.Enum):
    FUNCTION = "Function"
    BLOCK = "Block"
    IF = "If"
    WHILE = "While"
    RETURN = "Return"
    THROW = "Throw"
    BREAK = "Break"
    CONTINUE = "Continue"
    EMPTY = "Empty"
    EXPRESSION_STMT = "ExpressionStmt"
    VAR_DECL = "VarDecl"
    ASSIGN = "Assign"
    CALL = "Call"
    NEW = "New"
    FIELD_ACCESS = "FieldAccess"
    INDEX = "Index"
    CONDITIONAL = "Conditional"
    CAST = "Cast"
    PAREN = "Paren"
    BINARY_OP = "BinaryOp"
    UNARY_OP = "UnaryOp"
    IDENTIFIER = "Identifier"
    LITERAL = "Literal"
    THIS = "This"
    TYPE = "Type"
    THROWS = "Throws"
    MODIFIER = "Modifier"
    PARAM = "Param"


STATEMENT_KINDS = frozenset(
    {
        NodeKind.BLOCK,
        NodeKind.IF,
        NodeKind.WHILE,
        NodeKind.RETURN,
        NodeKind.THROW,
        NodeKind.BREAK,
        NodeKind.CONTINUE,
        NodeKind.EMPTY,
        NodeKind.EXPRESSION_STMT,
        NodeKind.VAR_DECL,
    }
)


@dataclass(frozen=True)
class AstNode:
    kind: NodeKind
    children: tuple["AstNode", ...]
    token_span: tuple[int, int]
    value: str | None = None
    # Call nodes only: first child is the receiver expression.
    receiver: bool = False

    def walk(self) -> Iterator["AstNode"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def leaves(self) -> Iterator["AstNode"]:
        if not self.children:
            yield self
        for c in self.children:
            yield from c.leaves()

    @property
    def args(self) -> tuple["AstNode", ...]:
        if self.kind is NodeKind.CALL and self.receiver:
            return self.children[1:]
        return self.children

    def text(self, tokens: Sequence[Token]) -> str:
        s, e = self.token_span
        return join_tokens(tokens[s:e])


@dataclass(frozen=True)
class Param:
    name: str
    type: str
    modifiers: tuple[str, ...] = ()


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    params: tuple[Param, ...]
    modifiers: tuple[str, ...]
    throws_list: tuple[str, ...]
    body: AstNode
    source_span: tuple[int, int]
    return_type: str | None
    tokens: tuple[Token, ...] = field(repr=False)
    node: AstNode = field(repr=False)
    start_line: int = 1
    end_line: int = 1

    @property
    def statements(self) -> tuple[AstNode, ...]:
        return self.body.children

    def signature_key(self) -> tuple:
        """Everything but modifiers, throws and body."""
        return (self.name, self.return_type, tuple((p.type, p.name) for p in self.params))


def is_numeric_literal(node: AstNode) -> bool:
    return node.kind is NodeKind.LITERAL and bool(node.value) and (node.value[0].isdigit() or node.value[0] == ".")


def is_boolean_literal(node: AstNode) -> bool:
    return node.kind is NodeKind.LITERAL and node.value in ("true", "false")


_BINARY_PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "|": 3,
    "^": 4,
    "&": 5,
    "==": 6,
    "!=": 6,
    "<": 7,
    ">": 7,
    "<=": 7,
    ">=": 7,
    "instanceof": 7,
    "<<": 8,
    ">>": 8,
    ">>>": 8,
    "+": 9,
    "-": 9,
    "*": 10,
    "/": 10,
    "%": 10,
}
ASSIGN_OPS = frozenset("= += -= *= /= %= &= |= ^= <<= >>= >>>=".split())
_PREFIX_OPS = frozenset("! ~ - + ++ --".split())
_UNSUPPORTED_STATEMENTS = {
    "for": "for loop",
    "do": "do-while loop",
    "switch": "switch statement",
    "try": "try statement",
    "synchronized": "synchronized block",
    "assert": "assert statement",
    "class": "local class",
    "interface": "local interface",
    "enum": "local enum",
}


class _Parser:
    def __init__(self, tokens: Sequence[Token]):
        self.toks = tokens
        self.pos = 0

    # -- token helpers ----------------------------------------------------
    def peek(self, k: int = 0) -> Token | None:
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else None

    def at(self, *texts: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t is not None and t.text in texts and t.kind not in (
            TokenKind.STRING_LITERAL,
        )

    def at_kind(self, kind: TokenKind, k: int = 0) -> bool:
        t = self.peek(k)
        return t is not None and t.kind is kind

    def advance(self) -> Token:
        t = self.peek()
        if t is None:
            raise JavaSyntaxError(None, ["<token>"])
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise JavaSyntaxError(self.peek(), [text])
        return self.advance()

    def expect_ident(self) -> Token:
        if not self.at_kind(TokenKind.IDENTIFIER):
            raise JavaSyntaxError(self.peek(), ["<identifier>"])
        return self.advance()

    def node(self, kind: NodeKind, start: int, children=(), value=None, receiver=False) -> AstNode:
        return AstNode(kind, tuple(children), (start, self.pos), value, receiver)

    # -- declarations -----------------------------------------------------
    def function(self) -> AstNode:
        start = self.pos
        children: list[AstNode] = list(self.modifiers())
        if self.at("<"):
            raise UnsupportedConstruct("generics", self.peek())
        ctor = self.at_kind(TokenKind.IDENTIFIER) and self.at("(", k=1)
        if not ctor:
            if self.at("void"):
                s = self.pos
                self.advance()
                children.append(self.node(NodeKind.TYPE, s, value="void"))
            else:
                children.append(self.type_())
        name = self.expect_ident()
        self.expect("(")
        if not self.at(")"):
            t = self.peek()
            if t is None or not (t.kind is TokenKind.IDENTIFIER or t.text in PRIMITIVE_TYPES or t.text in MODIFIERS):
                raise JavaSyntaxError(t, [")", "<type>"])
            while True:
                children.append(self.param())
                if not self.at(","):
                    break
                self.advance()
        if not self.at(")"):
            raise JavaSyntaxError(self.peek(), [")", ","])
        self.advance()
        if self.at("throws"):
            s = self.pos
            self.advance()
            names = [self.qualified_type()]
            while self.at(","):
                self.advance()
                names.append(self.qualified_type())
            children.append(self.node(NodeKind.THROWS, s, names))
        if not self.at("{"):
            raise JavaSyntaxError(self.peek(), ["{", "throws"])
        children.append(self.block())
        if self.peek() is not None:
            raise JavaSyntaxError(self.peek(), ["<end of input>"])
        return self.node(NodeKind.FUNCTION, start, children, value=name.text)

    def modifiers(self) -> list[AstNode]:
        mods = []
        while self.at(*MODIFIERS) and self.at_kind(TokenKind.KEYWORD):
            s = self.pos
            text = self.advance().text
            mods.append(self.node(NodeKind.MODIFIER, s, value=text))
        return mods

    def param(self) -> AstNode:
        s = self.pos
        mods = self.modifiers()
        ty = self.type_()
        if self.at("..."):
            self.advance()
            ty = AstNode(NodeKind.TYPE, (), (ty.token_span[0], self.pos), ty.value + "...")
        name = self.expect_ident()
        ident = AstNode(NodeKind.IDENTIFIER, (), (self.pos - 1, self.pos), name.text)
        if not (self.at(",") or self.at(")")):
            raise JavaSyntaxError(self.peek(), [",", ")"])
        return self.node(NodeKind.PARAM, s, [*mods, ty, ident], value=name.text)

    def qualified_type(self) -> AstNode:
        s = self.pos
        parts = [self.expect_ident().text]
        while self.at(".") and self.at_kind(TokenKind.IDENTIFIER, k=1):
            self.advance()
            parts.append(self.advance().text)
        if self.at("<"):
            raise UnsupportedConstruct("generics", self.peek())
        return self.node(NodeKind.TYPE, s, value=".".join(parts))

    def type_(self) -> AstNode:
        s = self.pos
        t = self.peek()
        if t is not None and t.text in PRIMITIVE_TYPES:
            self.advance()
            text = t.text
        elif t is not None and t.kind is TokenKind.IDENTIFIER:
            text = self.qualified_type().value
        else:
            raise JavaSyntaxError(t, ["<type>"])
        while self.at("[") and self.at("]", k=1):
            self.advance()
            self.advance()
            text += "[]"
        if self.at("<"):
            raise UnsupportedConstruct("generics", self.peek())
        return AstNode(NodeKind.TYPE, (), (s, self.pos), text)

    # -- statements -------------------------------------------------------
    def block(self) -> AstNode:
        s = self.pos
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.peek() is None:
                raise JavaSyntaxError(None, ["}"])
            stmts.append(self.statement())
        self.advance()
        return self.node(NodeKind.BLOCK, s, stmts)

    def statement(self) -> AstNode:
        t = self.peek()
        s = self.pos
        if t is None:
            raise JavaSyntaxError(None, ["<statement>"])
        if t.kind is TokenKind.KEYWORD and t.text in _UNSUPPORTED_STATEMENTS:
            raise UnsupportedConstruct(_UNSUPPORTED_STATEMENTS[t.text], t)
        if self.at("{"):
            return self.block()
        if self.at(";"):
            self.advance()
            return self.node(NodeKind.EMPTY, s)
        if self.at("if") and t.kind is TokenKind.KEYWORD:
            self.advance()
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            then = self.statement()
            children = [cond, then]
            if self.at("else"):
                self.advance()
                children.append(self.statement())
            return self.node(NodeKind.IF, s, children)
        if self.at("while") and t.kind is TokenKind.KEYWORD:
            self.advance()
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            body = self.statement()
            return self.node(NodeKind.WHILE, s, [cond, body])
        if self.at("return") and t.kind is TokenKind.KEYWORD:
            self.advance()
            children = [] if self.at(";") else [self.expression()]
            self.expect(";")
            return self.node(NodeKind.RETURN, s, children)
        if self.at("throw") and t.kind is TokenKind.KEYWORD:
            self.advance()
            expr = self.expression()
            self.expect(";")
            return self.node(NodeKind.THROW, s, [expr])
        if self.at("break", "continue") and t.kind is TokenKind.KEYWORD:
            kind = NodeKind.BREAK if t.text == "break" else NodeKind.CONTINUE
            self.advance()
            self.expect(";")
            return self.node(kind, s)
        if t.kind is TokenKind.IDENTIFIER and self.at(":", k=1):
            raise UnsupportedConstruct("labeled statement", t)
        if self._looks_like_declaration():
            return self.var_decl()
        expr = self.expression()
        self.expect(";")
        return self.node(NodeKind.EXPRESSION_STMT, s, [expr])

    def _looks_like_declaration(self) -> bool:
        k = 0
        while self.at("final", k=k) and self.at_kind(TokenKind.KEYWORD, k=k):
            k += 1
        t = self.peek(k)
        if t is None:
            return False
        if t.text in PRIMITIVE_TYPES and t.kind is TokenKind.KEYWORD:
            return True
        if k > 0:
            return True
        if t.kind is not TokenKind.IDENTIFIER:
            return False
        k += 1
        while self.at(".", k=k) and self.at_kind(TokenKind.IDENTIFIER, k=k + 1):
            k += 2
        if self.at("<", k=k) and self._generic_type_ahead(k):
            raise UnsupportedConstruct("generics", self.peek(k))
        while self.at("[", k=k) and self.at("]", k=k + 1):
            k += 2
        return self.at_kind(TokenKind.IDENTIFIER, k=k)

    def _generic_type_ahead(self, k: int) -> bool:
        depth = 0
        while True:
            t = self.peek(k)
            if t is None:
                return False
            if t.text == "<":
                depth += 1
            elif t.text == ">":
                depth -= 1
            elif t.text == ">>":
                depth -= 2
            elif t.text == ">>>":
                depth -= 3
            elif not (t.kind is TokenKind.IDENTIFIER or t.text in (",", ".", "?", "[", "]", "extends", "super") or t.text in PRIMITIVE_TYPES):
                return False
            k += 1
            if depth <= 0:
                return self.at_kind(TokenKind.IDENTIFIER, k=k) or self.at("(", k=k) or self.at(">", k=k)

    def var_decl(self) -> AstNode:
        s = self.pos
        mods = self.modifiers()
        ty = self.type_()
        name = self.expect_ident()
        children = [*mods, ty, AstNode(NodeKind.IDENTIFIER, (), (self.pos - 1, self.pos), name.text)]
        if self.at("["):
            raise UnsupportedConstruct("C-style array declarator", self.peek())
        if self.at("="):
            self.advance()
            if self.at("{"):
                raise UnsupportedConstruct("array initializer", self.peek())
            children.append(self.expression())
        if self.at(","):
            raise UnsupportedConstruct("multiple declarators", self.peek())
        self.expect(";")
        return self.node(NodeKind.VAR_DECL, s, children, value=name.text)

    # -- expressions ------------------------------------------------------
    def expression(self) -> AstNode:
        s = self.pos
        lhs = self.conditional()
        t = self.peek()
        if t is not None and t.kind is TokenKind.OPERATOR and t.text in ASSIGN_OPS:
            if lhs.kind not in (NodeKind.IDENTIFIER, NodeKind.FIELD_ACCESS, NodeKind.INDEX):
                raise JavaSyntaxError(t, [";", ")"])
            self.advance()
            rhs = self.expression()
            return self.node(NodeKind.ASSIGN, s, [lhs, rhs], value=t.text)
        if self.at("->"):
            raise UnsupportedConstruct("lambda", self.peek())
        return lhs

    def conditional(self) -> AstNode:
        s = self.pos
        cond = self.binary(1)
        if self.at("?"):
            self.advance()
            a = self.expression()
            self.expect(":")
            b = self.conditional()
            return self.node(NodeKind.CONDITIONAL, s, [cond, a, b])
        return cond

    def binary(self, min_prec: int) -> AstNode:
        s = self.pos
        left = self.unary()
        while True:
            t = self.peek()
            if t is None or t.kind not in (TokenKind.OPERATOR, TokenKind.KEYWORD):
                break
            prec = _BINARY_PRECEDENCE.get(t.text)
            if prec is None or prec < min_prec:
                break
            self.advance()
            if t.text == "instanceof":
                right = self.type_()
            else:
                right = self.binary(prec + 1)
            left = self.node(NodeKind.BINARY_OP, s, [left, right], value=t.text)
        return left

    def unary(self) -> AstNode:
        s = self.pos
        t = self.peek()
        if t is not None and t.kind is TokenKind.OPERATOR and t.text in _PREFIX_OPS:
            self.advance()
            operand = self.unary()
            return self.node(NodeKind.UNARY_OP, s, [operand], value=t.text)
        if self.at("(") and self._cast_ahead():
            self.advance()
            ty = self.type_()
            self.expect(")")
            operand = self.unary()
            return self.node(NodeKind.CAST, s, [ty, operand])
        return self.postfix()

    def _cast_ahead(self) -> bool:
        t = self.peek(1)
        if t is None:
            return False
        k = 2
        if t.text in PRIMITIVE_TYPES and t.kind is TokenKind.KEYWORD:
            primitive = True
        elif t.kind is TokenKind.IDENTIFIER:
            primitive = False
            while self.at(".", k=k) and self.at_kind(TokenKind.IDENTIFIER, k=k + 1):
                k += 2
        else:
            return False
        while self.at("[", k=k) and self.at("]", k=k + 1):
            k += 2
        if not self.at(")", k=k):
            return False
        nxt = self.peek(k + 1)
        if nxt is None:
            return False
        if primitive:
            return True
        if self.at("->", k=k + 1):
            raise UnsupportedConstruct("lambda", nxt)
        return nxt.kind in (
            TokenKind.IDENTIFIER,
            TokenKind.NUMERIC_LITERAL,
            TokenKind.STRING_LITERAL,
            TokenKind.BOOLEAN_LITERAL,
        ) or nxt.text in ("(", "!", "~", "this", "new", "null", "super")

    def postfix(self) -> AstNode:
        s = self.pos
        expr = self.primary()
        while True:
            if self.at("."):
                self.advance()
                if self.at("<"):
                    raise UnsupportedConstruct("generics", self.peek())
                t = self.peek()
                if t is None or not (t.kind is TokenKind.IDENTIFIER or t.text == "class"):
                    raise JavaSyntaxError(t, ["<identifier>"])
                self.advance()
                if self.at("("):
                    args = self.arguments()
                    expr = self.node(NodeKind.CALL, s, [expr, *args], value=t.text, receiver=True)
                else:
                    expr = self.node(NodeKind.FIELD_ACCESS, s, [expr], value=t.text)
            elif self.at("["):
                self.advance()
                idx = self.expression()
                self.expect("]")
                expr = self.node(NodeKind.INDEX, s, [expr, idx])
            elif self.at("++", "--"):
                op = self.advance().text
                expr = self.node(NodeKind.UNARY_OP, s, [expr], value="post" + op)
            elif self.at("::"):
                raise UnsupportedConstruct("method reference", self.peek())
            else:
                return expr

    def arguments(self) -> list[AstNode]:
        self.expect("(")
        args = []
        if not self.at(")"):
            while True:
                args.append(self.expression())
                if not self.at(","):
                    break
                self.advance()
        if not self.at(")"):
            raise JavaSyntaxError(self.peek(), [")", ","])
        self.advance()
        return args

    def primary(self) -> AstNode:
        s = self.pos
        t = self.peek()
        if t is None:
            raise JavaSyntaxError(None, ["<expression>"])
        if t.kind in (TokenKind.NUMERIC_LITERAL, TokenKind.STRING_LITERAL, TokenKind.BOOLEAN_LITERAL) or (
            t.text == "null" and t.kind is TokenKind.KEYWORD
        ):
            self.advance()
            return self.node(NodeKind.LITERAL, s, value=t.text)
        if t.text in ("this", "super") and t.kind is TokenKind.KEYWORD:
            self.advance()
            if self.at("("):
                args = self.arguments()
                return self.node(NodeKind.CALL, s, args, value=t.text)
            return self.node(NodeKind.THIS, s, value=t.text)
        if t.kind is TokenKind.IDENTIFIER:
            if self.at("->", k=1):
                raise UnsupportedConstruct("lambda", t)
            self.advance()
            if self.at("("):
                args = self.arguments()
                return self.node(NodeKind.CALL, s, args, value=t.text)
            return self.node(NodeKind.IDENTIFIER, s, value=t.text)
        if t.text == "(":
            if self._lambda_params_ahead():
                raise UnsupportedConstruct("lambda", t)
            self.advance()
            inner = self.expression()
            self.expect(")")
            return self.node(NodeKind.PAREN, s, [inner])
        if t.text == "new" and t.kind is TokenKind.KEYWORD:
            self.advance()
            ty = self.type_no_dims()
            if self.at("["):
                dims = []
                text = ty.value
                while self.at("["):
                    self.advance()
                    if self.at("]"):
                        self.advance()
                    else:
                        dims.append(self.expression())
                        self.expect("]")
                    text += "[]"
                if self.at("{"):
                    raise UnsupportedConstruct("array initializer", self.peek())
                return self.node(NodeKind.NEW, s, dims, value=text)
            args = self.arguments()
            if self.at("{"):
                raise UnsupportedConstruct("anonymous class", self.peek())
            return self.node(NodeKind.NEW, s, args, value=ty.value)
        if t.text == "{":
            raise UnsupportedConstruct("array initializer", t)
        raise JavaSyntaxError(t, ["<expression>"])

    def type_no_dims(self) -> AstNode:
        s = self.pos
        t = self.peek()
        if t is not None and t.text in PRIMITIVE_TYPES and t.kind is TokenKind.KEYWORD:
            self.advance()
            return AstNode(NodeKind.TYPE, (), (s, self.pos), t.text)
        if t is not None and t.kind is TokenKind.IDENTIFIER:
            ty = self.qualified_type()
            return ty
        raise JavaSyntaxError(t, ["<type>"])

    def _lambda_params_ahead(self) -> bool:
        depth = 0
        k = 0
        while True:
            t = self.peek(k)
            if t is None:
                return False
            if t.text == "(":
                depth += 1
            elif t.text == ")":
                depth -= 1
                if depth == 0:
                    return self.at("->", k=k + 1)
            k += 1


def parse_function(source: str) -> FunctionDecl:
    """Parse ``source`` holding exactly one function declaration."""
    tokens = tokenize(source)
    return _decl_from_tokens(tokens, source)


def _decl_from_tokens(tokens: Sequence[Token], source: str, base_offset: int = 0) -> FunctionDecl:
    if not tokens:
        raise JavaSyntaxError(None, ["<function declaration>"])
    p = _Parser(tokens)
    node = p.function()
    mods, params, throws, ret = [], [], (), None
    for c in node.children:
        if c.kind is NodeKind.MODIFIER:
            mods.append(c.value)
        elif c.kind is NodeKind.TYPE:
            ret = c.value
        elif c.kind is NodeKind.PARAM:
            pm = tuple(x.value for x in c.children if x.kind is NodeKind.MODIFIER)
            ty = next(x.value for x in c.children if x.kind is NodeKind.TYPE)
            params.append(Param(c.value, ty, pm))
        elif c.kind is NodeKind.THROWS:
            throws = tuple(x.value for x in c.children)
    first, last = tokens[0], tokens[-1]
    start_b = len(source[: first.offset].encode("utf-8")) + base_offset
    end_b = len(source[: last.end].encode("utf-8")) + base_offset
    return FunctionDecl(
        name=node.value,
        params=tuple(params),
        modifiers=tuple(mods),
        throws_list=tuple(throws),
        body=node.children[-1],
        source_span=(start_b, end_b),
        return_type=ret,
        tokens=tuple(tokens),
        node=node,
        start_line=first.line,
        end_line=last.line,
    )


def function_source(fn: FunctionDecl) -> str:
    """Canonical multi-line rendering of a parsed function."""
    return format_tokens(fn.tokens)


# ---------------------------------------------------------------------------
# Statement alignment


def _stmt_lists(node: AstNode) -> list[list[AstNode]]:
    def as_list(n: AstNode | None) -> list[AstNode]:
        if n is None:
            return []
        return list(n.children) if n.kind is NodeKind.BLOCK else [n]

    if node.kind is NodeKind.IF:
        return [as_list(node.children[1]), as_list(node.children[2] if len(node.children) > 2 else None)]
    if node.kind is NodeKind.WHILE:
        return [as_list(node.children[1])]
    if node.kind is NodeKind.BLOCK:
        return [list(node.children)]
    return []


def _header(node: AstNode, tokens: Sequence[Token]) -> str | None:
    if node.kind in (NodeKind.IF, NodeKind.WHILE):
        return node.children[0].text(tokens)
    return None


@dataclass
class StatementDiff:
    changed: int = 0
    inserted: int = 0
    deleted: int = 0
    # (before_stmt, after_stmt, header_only) for each changed statement
    pairs: list[tuple[AstNode, AstNode, bool]] = field(default_factory=list)

    def counts(self) -> tuple[int, int, int]:
        return (self.changed, self.inserted, self.deleted)

    def __iadd__(self, other: "StatementDiff") -> "StatementDiff":
        self.changed += other.changed
        self.inserted += other.inserted
        self.deleted += other.deleted
        self.pairs.extend(other.pairs)
        return self


def _lcs_pairs(a: Sequence[str], b: Sequence[str]) -> list[tuple[int, int]]:
    n, m = len(a), len(b)
    L = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            L[i][j] = L[i + 1][j + 1] + 1 if a[i] == b[j] else max(L[i + 1][j], L[i][j + 1])
    pairs = []
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j] and L[i][j] == L[i + 1][j + 1] + 1:
            pairs.append((i, j))
            i += 1
            j += 1
        elif L[i + 1][j] >= L[i][j + 1]:
            i += 1
        else:
            j += 1
    return pairs


def _diff_lists(xs, ys, xt, yt) -> StatementDiff:
    ta = [s.text(xt) for s in xs]
    tb = [s.text(yt) for s in ys]
    out = StatementDiff()
    anchors = _lcs_pairs(ta, tb) + [(len(xs), len(ys))]
    pi = pj = 0
    for ai, bj in anchors:
        gap_a, gap_b = xs[pi:ai], ys[pj:bj]
        k = min(len(gap_a), len(gap_b))
        for x, y in zip(gap_a[:k], gap_b[:k]):
            out += _diff_pair(x, y, xt, yt)
        out.inserted += len(gap_b) - k
        out.deleted += len(gap_a) - k
        pi, pj = ai + 1, bj + 1
    return out


def _diff_pair(x: AstNode, y: AstNode, xt, yt) -> StatementDiff:
    if x.kind is y.kind and x.kind in (NodeKind.IF, NodeKind.WHILE, NodeKind.BLOCK):
        lx, ly = _stmt_lists(x), _stmt_lists(y)
        out = StatementDiff()
        if _header(x, xt) != _header(y, yt):
            out.changed += 1
            out.pairs.append((x, y, True))
        for a, b in zip(lx, ly):
            out += _diff_lists(a, b, xt, yt)
        if out.counts() == (0, 0, 0):
            return StatementDiff(1, 0, 0, [(x, y, False)])
        return out
    return StatementDiff(1, 0, 0, [(x, y, False)])


def diff_statements(before: FunctionDecl, after: FunctionDecl) -> StatementDiff:
    return _diff_lists(list(before.statements), list(after.statements), before.tokens, after.tokens)


def statement_count_delta(before: FunctionDecl, after: FunctionDecl) -> tuple[int, int, int]:
    """(changed, inserted, deleted) statement counts between two versions."""
    return diff_statements(before, after).counts()


def is_single_statement_change(before: FunctionDecl, after: FunctionDecl) -> bool:
    return statement_count_delta(before, after) == (1, 0, 0)


# ---------------------------------------------------------------------------
# Whole-file scanning


@dataclass(frozen=True)
class FunctionSpan:
    name: str
    start_line: int
    end_line: int
    start_offset: int
    end_offset: int
    decl: FunctionDecl | None
    error: str | None = None
    depth: int = 0


@dataclass
class FileScan:
    functions: list[FunctionSpan]
    tokens: list[Token]

    def enclosing(self, line: int) -> FunctionSpan | None:
        best = None
        for f in self.functions:
            if f.start_line <= line <= f.end_line and (best is None or f.depth >= best.depth):
                best = f
        return best

    def by_name(self, name: str) -> list[FunctionSpan]:
        return [f for f in self.functions if f.name == name]


def _match_close(tokens: Sequence[Token], i: int, open_: str, close: str) -> int:
    depth = 0
    for k in range(i, len(tokens)):
        tx = tokens[k].text
        if tokens[k].kind is TokenKind.STRING_LITERAL:
            continue
        if tx == open_:
            depth += 1
        elif tx == close:
            depth -= 1
            if depth == 0:
                return k
    raise JavaSyntaxError(None, [close])


def scan_java_file(text: str) -> FileScan:
    """Locate every method/constructor in a Java compilation unit.

    Function bodies that fall outside the parser subset are still recorded
    (with ``decl=None`` and an error message) so callers can tell them apart
    from class-level code.
    """
    tokens = tokenize(text)
    funcs: list[FunctionSpan] = []
    i = 0
    n = len(tokens)
    while i < n:
        t = tokens[i]
        if t.text in ("package", "import") and t.kind is TokenKind.KEYWORD:
            while i < n and tokens[i].text != ";":
                i += 1
            i += 1
            continue
        if t.text == ";":
            i += 1
            continue
        i = _scan_type(tokens, i, text, funcs, 0)
    funcs.sort(key=lambda f: (f.start_offset, f.depth))
    return FileScan(funcs, tokens)


def _scan_type(tokens, i, text, funcs, depth) -> int:
    n = len(tokens)
    k = i
    while k < n and tokens[k].text not in ("class", "interface", "enum", "{", ";"):
        k += 1
    if k >= n:
        raise JavaSyntaxError(None, ["class"])
    if tokens[k].text in ("{", ";"):
        raise JavaSyntaxError(tokens[k], ["class", "interface", "enum"])
    is_enum = tokens[k].text == "enum"
    while k < n and tokens[k].text != "{":
        k += 1
    close = _match_close(tokens, k, "{", "}")
    body_start = k + 1
    if is_enum:
        # constants section ends at the first top-level ';'
        d = 0
        j = body_start
        while j < close:
            tx = tokens[j].text
            if tx in ("(", "{", "["):
                d += 1
            elif tx in (")", "}", "]"):
                d -= 1
            elif tx == ";" and d == 0:
                break
            j += 1
        body_start = j + 1 if j < close else close
    _scan_members(tokens, body_start, close, text, funcs, depth + 1)
    return close + 1


def _scan_members(tokens, i, end, text, funcs, depth) -> None:
    while i < end:
        t = tokens[i]
        if t.text == ";":
            i += 1
            continue
        if t.text == "{":
            i = _match_close(tokens, i, "{", "}") + 1
            continue
        if t.text == "static" and tokens[i + 1].text == "{":
            i = _match_close(tokens, i + 1, "{", "}") + 1
            continue
        k = i
        kind = None
        while k < end:
            tx = tokens[k].text
            if tokens[k].kind is TokenKind.KEYWORD and tx in ("class", "interface", "enum"):
                kind = "type"
                break
            if tx == "(" and tokens[k - 1].kind is TokenKind.IDENTIFIER:
                kind = "method"
                break
            if tx in ("=", ";", "{"):
                kind = "field"
                break
            k += 1
        if kind == "type":
            i = _scan_type(tokens, i, text, funcs, depth)
            continue
        if kind == "method":
            rparen = _match_close(tokens, k, "(", ")")
            j = rparen + 1
            while j < end and tokens[j].text not in ("{", ";"):
                j += 1
            if j >= end or tokens[j].text == ";":
                i = j + 1
                continue
            close = _match_close(tokens, j, "{", "}")
            name = tokens[k - 1].text
            first, last = tokens[i], tokens[close]
            src = text[first.offset : last.end]
            decl, err = None, None
            try:
                decl = parse_function(src)
                base = len(text[: first.offset].encode("utf-8"))
                decl = replace(
                    decl,
                    source_span=(decl.source_span[0] + base, decl.source_span[1] + base),
                    start_line=first.line,
                    end_line=last.line,
                )
            except JParseError as exc:
                err = str(exc)
            funcs.append(FunctionSpan(name, first.line, last.line, first.offset, last.end, decl, err, depth))
            i = close + 1
            continue
        # field: skip to the terminating ';' at depth 0
        d = 0
        while i < end:
            tx = tokens[i].text
            if tx in ("(", "{", "["):
                d += 1
            elif tx in (")", "}", "]"):
                d -= 1
            elif tx == ";" and d == 0:
                break
            i += 1
        i += 1
