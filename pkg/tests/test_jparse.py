from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compdefect.jparse import (
    JavaSyntaxError,
    NodeKind,
    TokenKind,
    UnsupportedConstruct,
    UnterminatedString,
    IllegalCharacter,
    join_tokens,
    normalize_source,
    parse_function,
    scan_java_file,
    statement_count_delta,
    tokenize,
)
from compdefect.patterns import DEFAULT_TEMPLATES, SynthSpec, generate_corpus


def kinds(src):
    return [(t.kind, t.text) for t in tokenize(src)]


def test_tokenize_declaration():
    assert kinds("int a = 0;") == [
        (TokenKind.KEYWORD, "int"),
        (TokenKind.IDENTIFIER, "a"),
        (TokenKind.OPERATOR, "="),
        (TokenKind.NUMERIC_LITERAL, "0"),
        (TokenKind.PUNCTUATION, ";"),
    ]


def test_tokenize_empty():
    assert tokenize("") == []


def test_unterminated_string():
    with pytest.raises(UnterminatedString) as exc:
        tokenize('String s = "x;  // tail')
    assert exc.value.line == 1


def test_illegal_character_position():
    with pytest.raises(IllegalCharacter) as exc:
        tokenize("int a;\n  #")
    assert (exc.value.line, exc.value.column) == (2, 3)


def test_positions_and_comments():
    toks = tokenize("a /* x */ b // c\n  true")
    assert [(t.text, t.line, t.column) for t in toks] == [("a", 1, 1), ("b", 1, 11), ("true", 2, 3)]
    assert toks[-1].kind is TokenKind.BOOLEAN_LITERAL


def test_annotations_dropped():
    fn = parse_function("@Override public String toString() { return name; }")
    assert fn.name == "toString"
    assert fn.modifiers == ("public",)


def test_longest_operator_match():
    assert [t.text for t in tokenize("a >>>= b >= c")] == ["a", ">>>=", "b", ">=", "c"]


def test_empty_function():
    fn = parse_function("void f(){}")
    assert fn.name == "f" and fn.params == () and len(fn.statements) == 0


def test_return_binary():
    fn = parse_function("int g(int x){ return x + 1; }")
    assert fn.name == "g" and len(fn.params) == 1
    (ret,) = fn.statements
    assert ret.kind is NodeKind.RETURN
    (expr,) = ret.children
    assert expr.kind is NodeKind.BINARY_OP and expr.value == "+"
    assert [c.kind for c in expr.children] == [NodeKind.IDENTIFIER, NodeKind.LITERAL]


def test_syntax_error_at_brace():
    with pytest.raises(JavaSyntaxError) as exc:
        parse_function("void f( {")
    assert exc.value.token is not None and exc.value.token.text == "{"
    assert exc.value.expected


@pytest.mark.parametrize(
    "src",
    [
        "void f() { List<String> xs = null; }",
        "void f() { Runnable r = () -> {}; }",
        "void f() { Object o = new Object() { }; }",
    ],
)
def test_unsupported(src):
    with pytest.raises(UnsupportedConstruct):
        parse_function(src)


def test_throws_and_modifiers():
    fn = parse_function("public static void run(final int n) throws IOException, Exception { go(n); }")
    assert fn.modifiers == ("public", "static")
    assert fn.throws_list == ("IOException", "Exception")
    assert fn.params[0].modifiers == ("final",)


def test_receiver_call():
    fn = parse_function("void f() { list.add(x, 1); }")
    call = fn.statements[0].children[0]
    assert call.kind is NodeKind.CALL and call.receiver and call.value == "add"
    assert len(call.args) == 2


def test_delta_identity():
    a = parse_function("int f(int x) { int y = x; return y; }")
    assert statement_count_delta(a, a) == (0, 0, 0)


def test_delta_one_changed():
    a = parse_function("int f(int x) { int y = x; return y; }")
    b = parse_function("int f(int x) { int y = x; return y + 1; }")
    assert statement_count_delta(a, b) == (1, 0, 0)


def test_delta_one_inserted():
    a = parse_function("int f(int x) { int y = x; return y; }")
    b = parse_function("int f(int x) { int y = x; y++; return y; }")
    assert statement_count_delta(a, b) == (0, 1, 0)


def test_delta_one_deleted():
    a = parse_function("int f(int x) { int y = x; y++; return y; }")
    b = parse_function("int f(int x) { int y = x; return y; }")
    assert statement_count_delta(a, b) == (0, 0, 1)


def test_delta_nested_statement():
    a = parse_function("int f(int x) { if (x > 0) { x = 1; } return x; }")
    b = parse_function("int f(int x) { if (x > 0) { x = 2; } return x; }")
    assert statement_count_delta(a, b) == (1, 0, 0)


def test_delta_ignores_whitespace():
    a = parse_function("int f(int x) { return x; }")
    b = parse_function("int f(int x)\n{\n    return   x ;\n}")
    assert statement_count_delta(a, b) == (0, 0, 0)


def _check_spans(node):
    s, e = node.token_span
    for c in node.children:
        cs, ce = c.token_span
        assert s <= cs <= ce <= e
        _check_spans(c)
    if node.kind in (NodeKind.IDENTIFIER, NodeKind.LITERAL):
        assert node.children == ()


CORPUS = generate_corpus(SynthSpec(seed=0, count_per_label=2))
SOURCES = sorted({src for t in CORPUS for src in (t.clean_src, t.buggy_src, t.fixed_src)}) + list(DEFAULT_TEMPLATES)


@pytest.mark.parametrize("src", SOURCES)
def test_round_trip_and_spans(src):
    assert join_tokens(tokenize(src)) == normalize_source(src)
    fn = parse_function(src)
    _check_spans(fn.node)
    a, b = fn.source_span
    offsets = {t.offset for t in fn.tokens} | {t.end for t in fn.tokens}
    assert a in offsets and b in offsets


_ident = st.from_regex(r"[a-z][a-zA-Z0-9_]{0,6}", fullmatch=True).filter(lambda s: s not in {"if", "do", "int", "new", "for", "try", "true", "null"})


@settings(max_examples=200, deadline=None)
@given(st.lists(st.one_of(_ident, st.integers(0, 999).map(str), st.sampled_from(["+", "-", "==", "&&", "(", ")", ";", ".", "!"])), max_size=30), st.lists(st.sampled_from([" ", "\n", "\t", "  "]), min_size=30, max_size=30))
def test_join_reproduces_normalized_source(parts, seps):
    src = "".join(p + s for p, s in zip(parts, seps))
    assert join_tokens(tokenize(src)) == normalize_source(src)
    assert tokenize(src) == tokenize(src)


def test_scan_file_enclosing():
    text = "class A {\n  int f() {\n    return 1;\n  }\n  void g() { h(); }\n}\n"
    scan = scan_java_file(text)
    assert [f.name for f in scan.functions] == ["f", "g"]
    assert scan.enclosing(3).name == "f"
    assert scan.enclosing(5).name == "g"
    assert scan.enclosing(1) is None
    assert text[scan.functions[0].start_offset : scan.functions[0].end_offset].startswith("int f()")
