import pytest

from hybridmt.rulebase import (
    RuleBase,
    RuleBaseError,
    RuleKey,
    dump_rules,
    load_rulebase,
    parse_rule_file,
    validate_rulebase,
)

from conftest import fixture_path

SIMPLE = """
((S -> NP VP)
 ((X0 head) = (X2 head))
 ((X2 subject) = X1))

((NP -> N)
 (X0 = X1))
"""


def test_parse_rule_file_backbones():
    rb = parse_rule_file(SIMPLE, "syntax")
    assert RuleKey("S", ("NP", "VP")) in rb.rules
    assert RuleKey("NP", ("N",)) in rb.rules
    rule = rb.rules[RuleKey("S", ("NP", "VP"))]
    assert len(rule.sets("syntax")) == 1
    assert rule.sets("gloss") == []


def test_rule_key_identity():
    a = RuleKey("S", ("NP", "VP"))
    b = RuleKey("S", ("NP", "VP"))
    assert a == b and hash(a) == hash(b)
    assert a.arity == 2
    assert a != RuleKey("S", ("NP",))


def test_same_backbone_multiple_kinds():
    rb = RuleBase()
    parse_rule_file("((NP -> N) (X0 = X1))", "syntax", rb)
    parse_rule_file("((NP -> N) ((X0 gloss) = (X1 gloss)))", "gloss", rb)
    assert len(rb.rules) == 1
    rule = rb.rules[RuleKey("NP", ("N",))]
    assert len(rule.sets("syntax")) == 1
    assert len(rule.sets("gloss")) == 1


def test_dump_roundtrip():
    rb = parse_rule_file(SIMPLE, "syntax")
    text = dump_rules(rb, "syntax")
    rb2 = parse_rule_file(text, "syntax")
    assert set(rb.rules) == set(rb2.rules)
    assert dump_rules(rb2, "syntax") == text


def test_rules_by_rhs_sorted():
    rb = parse_rule_file("((B -> X Y)) ((A -> X Y)) ((C -> X))", "syntax")
    index = rb.rules_by_rhs()
    assert [r.key.lhs for r in index[("X", "Y")]] == ["A", "B"]
    assert [r.key.lhs for r in index[("X",)]] == ["C"]


def test_arity_counts():
    rb = parse_rule_file(
        "((A -> X)) ((B -> X Y)) ((C -> X Y Z)) ((D -> X Y Z W))", "syntax"
    )
    counts = rb.arity_counts("syntax")
    assert counts == {"unary": 1, "binary": 1, "n-ary": 2}


def test_parse_rejects_malformed():
    with pytest.raises(RuleBaseError):
        parse_rule_file("((S NP VP))", "syntax")
    with pytest.raises(RuleBaseError):
        parse_rule_file("(42)", "syntax")


def test_load_rulebase_fixture_files():
    rb = load_rulebase(
        grammar_file=fixture_path("grammar.rules"),
        sem_file=fixture_path("sem.rules"),
        gloss_file=fixture_path("gloss.rules"),
        syn_lexicon_file=fixture_path("syn_lexicon.tsv"),
        bilingual_file=fixture_path("bilingual.tsv"),
        sem_lexicon_file=fixture_path("sem_lexicon.tsv"),
        compound_file=fixture_path("compounds.tsv"),
    )
    assert RuleKey("NP", ("N",)) in rb.rules
    assert rb.syn_lexicon["nigatsu"][0].pos == "DATE"
    assert "wants to eat" in rb.bilingual["tabetai"][0].translations
    assert "company/business" in rb.sem_lexicon["kaisha"]
    assert rb.compounds["shinkaisha"] == "N"


def test_load_rulebase_missing_file():
    with pytest.raises(RuleBaseError):
        load_rulebase(grammar_file=fixture_path("no-such-file.rules"))


def test_syn_lexicon_features_column():
    rb = load_rulebase(syn_lexicon_file=fixture_path("syn_lexicon.tsv"))
    entry = rb.syn_lexicon["nigatsu"][0]
    month = entry.features.get(("syn", "month-index"))
    assert month.atom_value == "2"


def test_bilingual_alternatives_split():
    rb = load_rulebase(bilingual_file=fixture_path("bilingual.tsv"))
    assert rb.bilingual["tabetai"][0].translations == [
        "wants to eat",
        "want to eat",
    ]


def test_validate_reports_missing_counterpart():
    rb = RuleBase()
    parse_rule_file("((S -> NP VP) (X0 = X1))", "syntax", rb)
    report = validate_rulebase(rb, "gloss")
    assert any("missing gloss" in line for line in report)
    report2 = validate_rulebase(rb, "interlingua")
    assert any("missing semantics" in line for line in report2)


def test_validate_reports_out_of_range_variable():
    rb = RuleBase()
    parse_rule_file("((NP -> N) (X0 = X2))", "syntax", rb)
    report = validate_rulebase(rb, "interlingua")
    assert any("X2" in line and "arity 1" in line for line in report)


def test_validate_clean_fixture():
    rb = load_rulebase(
        grammar_file=fixture_path("grammar.rules"),
        sem_file=fixture_path("sem.rules"),
        gloss_file=fixture_path("gloss.rules"),
    )
    for mode in ("gloss", "interlingua"):
        assert validate_rulebase(rb, mode) == []


def test_validate_rejects_bad_mode():
    with pytest.raises(ValueError):
        validate_rulebase(RuleBase(), "syntax")
