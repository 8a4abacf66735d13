from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compdefect.jparse import normalize_source, parse_function
from compdefect.labels import DefectLabel as L
from compdefect.patterns import (
    DEFECT_LABELS,
    Inapplicable,
    NotSingleStatement,
    SynthSpec,
    candidate_injections,
    classify_pair,
    clean_count,
    generate_corpus,
    inject_defect,
    match_pattern,
)

HEADER = "int f(int a, int b, boolean c)"


def fn(body: str, header: str = HEADER) -> str:
    return f"{header} {{ int x = 0; {body} return x; }}"


# (label, positive pair, two negative pairs); pairs are buggy -> fixed statements
FIXTURES = [
    (L.CHANGE_IDENTIFIER_USED, ("int y = a;", "int y = b;"), [("int y = a + 1;", "int y = b + 1;"), ("int y = 1;", "int y = 2;")]),
    (L.CHANGE_NUMERIC_LITERAL, ("int y = 1;", "int y = 2;"), [("int y = a;", "int y = b;"), ("boolean y = true;", "boolean y = false;")]),
    (L.CHANGE_BOOLEAN_LITERAL, ("c = true;", "c = false;"), [("c = true;", "c = !true;"), ("int y = 0;", "int y = 1;")]),
    (L.CHANGE_MODIFIER, ("int y = a;", "final int y = a;"), [("int y = a;", "long y = a;"), ("int y = a;", "int y = b;")]),
    (L.WRONG_FUNCTION_NAME, ("foo(a);", "bar(a);"), [("foo(a);", "foo(a, b);"), ("p.foo(a);", "q.foo(a);")]),
    (L.SAME_FUNCTION_MORE_ARGS, ("foo(a);", "foo(a, b);"), [("foo(a, b);", "foo(a);"), ("foo(a);", "bar(a, b);")]),
    (L.SAME_FUNCTION_LESS_ARGS, ("foo(a, b);", "foo(a);"), [("foo(a);", "foo(a, b);"), ("foo(a, b);", "foo(b, a);")]),
    (L.SAME_FUNCTION_CHANGE_CALLER, ("p.foo(a);", "q.foo(a);"), [("p.foo(a);", "p.bar(a);"), ("p.foo(a);", "p.foo(a, b);")]),
    (L.SAME_FUNCTION_SWAP_ARGS, ("foo(a, b);", "foo(b, a);"), [("foo(a, b);", "foo(a, a);"), ("foo(a, b);", "foo(b);")]),
    (L.CHANGE_BINARY_OPERATOR, ("int y = a + b;", "int y = a - b;"), [("int y = a + b;", "int y = a + x;"), ("boolean y = a < b;", "boolean y = a < b && c;")]),
    (L.CHANGE_UNARY_OPERATOR, ("boolean y = !c;", "boolean y = c;"), [("boolean y = c;", "boolean y = true;"), ("int y = a - b;", "int y = a * b;")]),
    (L.CHANGE_OPERAND, ("int y = a + b;", "int y = a + x;"), [("int y = a + b;", "int y = a * b;"), ("int y = a;", "int y = x;")]),
    (L.MORE_SPECIFIC_IF, ("if (a > 0) { x = 1; }", "if (a > 0 && c) { x = 1; }"), [("if (a > 0) { x = 1; }", "if (a > 0 || c) { x = 1; }"), ("if (a > 0) { x = 1; }", "if (b > 0) { x = 1; }")]),
    (L.LESS_SPECIFIC_IF, ("if (a > 0) { x = 1; }", "if (a > 0 || c) { x = 1; }"), [("if (a > 0) { x = 1; }", "if (a > 0 && c) { x = 1; }"), ("if (a > 0) { x = 1; }", "if (a >= 0) { x = 1; }")]),
]

THROWS = HEADER + " throws IOException"
HEADER_FIXTURES = [
    (L.MISSING_THROWS_EXCEPTION, (HEADER, THROWS), [(THROWS, HEADER), (HEADER, "public " + HEADER)]),
    (L.DELETE_THROWS_EXCEPTION, (THROWS, HEADER), [(HEADER, THROWS), (THROWS, THROWS + ", SQLException")]),
    (L.CHANGE_MODIFIER, (HEADER, "static " + HEADER), [(HEADER, THROWS), (THROWS, HEADER)]),
]

CASES = []
for lab, pos, negs in FIXTURES:
    CASES.append((lab, fn(pos[0]), fn(pos[1]), True))
    CASES += [(lab, fn(a), fn(b), False) for a, b in negs]
for lab, pos, negs in HEADER_FIXTURES:
    CASES.append((lab, fn("", pos[0]), fn("", pos[1]), True))
    CASES += [(lab, fn("", a), fn("", b), False) for a, b in negs]


def test_every_label_has_fixtures():
    covered = {c[0] for c in CASES}
    assert covered == set(DEFECT_LABELS) and len(DEFECT_LABELS) == 16
    for lab in DEFECT_LABELS:
        assert sum(1 for c in CASES if c[0] is lab and c[3]) >= 1
        assert sum(1 for c in CASES if c[0] is lab and not c[3]) >= 2


@pytest.mark.parametrize("label,buggy,fixed,positive", CASES, ids=[f"{c[0].name}-{'pos' if c[3] else 'neg'}{i}" for i, c in enumerate(CASES)])
def test_matcher_fixture(label, buggy, fixed, positive):
    got = classify_pair(buggy, fixed)
    if positive:
        assert got is label
    else:
        assert got is not label


def test_paper_examples():
    assert match_pattern(fn("return true;"), fn("return false;")).label is L.CHANGE_BOOLEAN_LITERAL
    assert match_pattern(fn("foo(x);"), fn("bar(x);")).label is L.WRONG_FUNCTION_NAME
    assert match_pattern(fn("if (a) { x = 1; }"), fn("if (a && b) { x = 1; }")).label is L.MORE_SPECIFIC_IF


def test_identical_functions_are_not_single_statement():
    with pytest.raises(NotSingleStatement):
        match_pattern(fn("int y = a;"), fn("int y = a;"))
    assert classify_pair(fn("int y = a;"), fn("int y = a;")) is None


def test_two_statement_change_rejected():
    with pytest.raises(NotSingleStatement):
        match_pattern(fn("int y = a; int z = b;"), fn("int y = b; int z = a;"))
    with pytest.raises(NotSingleStatement):
        match_pattern(fn("int y = a;"), fn("int y = a; foo(y);"))


def test_unrecognised_single_change_is_no_match():
    assert match_pattern(fn("foo(a);"), fn("int q = 3;")) is None


# injection ----------------------------------------------------------------

TEMPLATE_NO_THROWS = "boolean ready(int n) { boolean r = true; if (n > 0) { r = false; } return r; }"


def test_boolean_injection_flips_the_literal():
    t = inject_defect(TEMPLATE_NO_THROWS, L.CHANGE_BOOLEAN_LITERAL, np.random.default_rng(0))
    assert t.clean_src == t.fixed_src
    a, b = normalize_source(t.buggy_src).split(), normalize_source(t.fixed_src).split()
    diff = [(x, y) for x, y in zip(a, b) if x != y]
    assert len(a) == len(b) and len(diff) == 1 and set(diff[0]) == {"true", "false"}


def test_throws_direction():
    # the buggy version of MISSING lacks a throws clause the fix adds, so the
    # template (the fixed version) must already declare one
    with pytest.raises(Inapplicable):
        inject_defect(TEMPLATE_NO_THROWS, L.MISSING_THROWS_EXCEPTION, np.random.default_rng(0))
    t = inject_defect(TEMPLATE_NO_THROWS, L.DELETE_THROWS_EXCEPTION, np.random.default_rng(0))
    assert "throws" in t.buggy_src and "throws" not in t.fixed_src
    t = inject_defect(TEMPLATE_NO_THROWS.replace(")", ") throws IOException", 1), L.MISSING_THROWS_EXCEPTION, np.random.default_rng(0))
    assert "throws" not in t.buggy_src and "throws" in t.fixed_src


def test_if_patterns_need_an_if():
    with pytest.raises(Inapplicable):
        inject_defect("int f(int a) { return a; }", L.MORE_SPECIFIC_IF, np.random.default_rng(0))


def test_clean_label_cannot_be_injected():
    with pytest.raises((Inapplicable, ValueError)):
        inject_defect(TEMPLATE_NO_THROWS, L.CLEAN, np.random.default_rng(0))


# generator ----------------------------------------------------------------


@pytest.fixture(scope="module")
def corpus2():
    return generate_corpus(SynthSpec(seed=0, count_per_label=2))


def test_round_trip_over_generator_output(corpus2):
    defective = [t for t in corpus2 if t.label is not L.CLEAN]
    assert len(defective) == 32
    for t in defective:
        m = match_pattern(t.buggy_src, t.fixed_src)
        assert m is not None and m.label is t.label, t.id


def test_candidates_all_round_trip(corpus2):
    from compdefect.patterns import DEFAULT_TEMPLATES

    n = 0
    for tmpl in DEFAULT_TEMPLATES:
        for lab in DEFECT_LABELS:
            for buggy in candidate_injections(tmpl, lab):
                assert classify_pair(buggy, tmpl) is lab
                n += 1
    assert n > 100


def test_clean_triples_never_match(corpus2):
    clean = [t for t in corpus2 if t.label is L.CLEAN]
    assert len(clean) == 32
    for t in clean:
        assert t.buggy_src == t.fixed_src
        assert normalize_source(t.clean_src) != normalize_source(t.buggy_src)
        assert classify_pair(t.clean_src, t.buggy_src) is None


def test_triples_parse_with_one_name(corpus2):
    for t in corpus2:
        names = {parse_function(s).name for s in (t.clean_src, t.buggy_src, t.fixed_src)}
        assert len(names) == 1


def test_generator_counts():
    spec = SynthSpec(seed=3, count_per_label=2, labels=list(DEFECT_LABELS)[:14])
    out = generate_corpus(spec)
    assert sum(t.label is not L.CLEAN for t in out) == 28
    assert sum(t.label is L.CLEAN for t in out) == 28
    assert clean_count(16, 0.5) == 16 and clean_count(10, 0.0) == 0


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2**31))
def test_generator_deterministic(seed):
    a = generate_corpus(SynthSpec(seed=seed, count_per_label=1))
    b = generate_corpus(SynthSpec(seed=seed, count_per_label=1))
    assert a == b
