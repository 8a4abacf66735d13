from __future__ import annotations

import pytest

from compdefect.dfg import Access, build_dfg, extract_variables
from compdefect.jparse import TokenKind, parse_function
from compdefect.patterns import SynthSpec, generate_corpus

W, R = Access.WRITE, Access.READ


def occ(src):
    return [(v.name, v.access) for v in extract_variables(parse_function(src))]


def edges(src):
    return set(build_dfg(parse_function(src)).edges)


def test_single_declaration():
    src = "void f() { int x = 1; }"
    assert occ(src) == [("x", W)]
    assert edges(src) == set()


def test_chain():
    src = "void f() { int a = b; int c = a; }"
    assert occ(src) == [("a", W), ("b", R), ("c", W), ("a", R)]
    assert edges(src) == {(1, 0), (0, 3), (3, 2)}


def test_empty_body():
    assert occ("void f() { }") == []


def test_undeclared_self_assignment():
    src = "void f() { a = a + 1; }"
    assert occ(src) == [("a", W), ("a", R)]
    assert edges(src) == {(1, 0)}


# hand-traced: (source, occurrences as name/access letters, expected edges)
FIXTURES = [
    ("int f(int x) { int y = x + 1; return y; }", "xW yW xR yR", {(0, 2), (2, 1), (1, 3)}),
    ("void f(int a) { a = a * 2; a += 3; g(a); }", "aW aW aR aW aR", {(0, 2), (2, 1), (1, 3), (3, 4)}),
    ("int f(boolean c) { int x = 0; if (c) { x = 1; } else { x = 2; } return x; }", "cW xW cR xW xW xR", {(0, 2), (3, 5), (4, 5)}),
    (
        "int f(int n) { int r = n; if (n > 0) { r = n * 2; } return r; }",
        "nW rW nR nR rW nR rR",
        {(0, 2), (2, 1), (0, 3), (0, 5), (5, 4), (1, 6), (4, 6)},
    ),
    ("void f(Point p) { int a = p.x; p.move(a); }", "pW aW pR pR aR", {(0, 2), (2, 1), (0, 3), (1, 4)}),
    ("int f() { int i = 0; i++; return i; }", "iW iW iR", {(0, 1), (1, 2)}),
    (
        "int f(int n) { int s = 0; while (n > 0) { s = s + n; n = n - 1; } return s; }",
        "nW sW nR sW sR nR nW nR sR",
        {(0, 2), (6, 2), (1, 4), (3, 4), (0, 5), (6, 5), (4, 3), (5, 3), (0, 7), (6, 7), (7, 6), (1, 8), (3, 8)},
    ),
    (
        "int f(int a, int b) { int m = a > b ? a : b; return m; }",
        "aW bW mW aR bR aR bR mR",
        {(0, 3), (1, 4), (0, 5), (1, 6), (3, 2), (4, 2), (5, 2), (6, 2), (2, 7)},
    ),
    ("void f(int[] arr) { int t = arr[0]; arr[0] = t; }", "arrW tW arrR arrR tR", {(0, 2), (2, 1), (1, 4), (0, 3)}),
    (
        "boolean f(String s, boolean d) { boolean ok = !d && s.isEmpty(); if (ok) { d = false; } return d || ok; }",
        "sW dW okW dR sR okR dW dR okR",
        {(1, 3), (0, 4), (3, 2), (4, 2), (2, 5), (1, 7), (6, 7), (2, 8)},
    ),
]


@pytest.mark.parametrize("src,expected_occ,expected_edges", FIXTURES)
def test_hand_traced_fixture(src, expected_occ, expected_edges):
    got = [f"{n}{a.value[0]}" for n, a in occ(src)]
    assert got == expected_occ.split()
    assert edges(src) == expected_edges


def test_occurrences_point_at_identifier_tokens():
    for src, _, _ in FIXTURES:
        fn = parse_function(src)
        vs = extract_variables(fn)
        assert [v.index for v in vs] == list(range(len(vs)))
        for v in vs:
            tok = fn.tokens[v.token_index]
            assert tok.kind is TokenKind.IDENTIFIER and tok.text == v.name


CORPUS = generate_corpus(SynthSpec(seed=1, count_per_label=2))


@pytest.mark.parametrize("triple", CORPUS, ids=lambda t: t.id)
def test_corpus_graphs_are_valid(triple):
    for src in (triple.clean_src, triple.buggy_src):
        g = build_dfg(parse_function(src))
        k = len(g.vars)
        assert all(0 <= a < k and 0 <= b < k and a != b for a, b in g.edges)
        assert build_dfg(parse_function(src)) == g


@pytest.mark.parametrize("src", [f[0] for f in FIXTURES])
def test_trailing_statement_keeps_edges(src):
    grown = src[: src.rindex("}")] + " int zz = 7; }"
    assert edges(src) <= edges(grown)
