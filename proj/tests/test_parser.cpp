#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kbf/raw.hpp"

using namespace kbf;

TEST_CASE("tokenize structure assignment") {
    auto toks = tokenize("takes::ct = {1,Logic};");
    std::vector<std::string> texts;
    for (auto& t : toks)
        if (t.kind != Token::Kind::End) texts.push_back(t.text);
    std::vector<std::string> want = {"takes", "::", "ct", "=", "{", "1", ",", "Logic", "}", ";"};
    CHECK(texts == want);
}

TEST_CASE("tokenize comments and strings") {
    CHECK(tokenize("// x").size() == 1);  // just End
    auto toks = tokenize("\"200 A\"");
    REQUIRE(toks.size() == 2);
    CHECK(toks[0].kind == Token::Kind::Str);
    CHECK(toks[0].text == "200 A");
    CHECK(tokenize("/* a /* not nested */ b").size() == 2);  // ident b + End

    CHECK_THROWS_AS(tokenize("\"unterminated"), Error);
    CHECK_THROWS_AS(tokenize("/* unterminated"), Error);
}

TEST_CASE("tokenize operators, ranges and floats") {
    auto toks = tokenize("1..3");
    REQUIRE(toks.size() == 4);
    CHECK(toks[0].kind == Token::Kind::Int);
    CHECK(toks[1].text == "..");
    CHECK(toks[2].kind == Token::Kind::Int);

    toks = tokenize("1.5");
    CHECK(toks[0].kind == Token::Kind::Float);

    toks = tokenize("a =< b >= c <=> d <- e");
    CHECK(toks[1].text == "=<");
    CHECK(toks[3].text == ">=");
    CHECK(toks[5].text == "<=>");
    CHECK(toks[7].text == "<-");

    // case sensitivity: upper/lowercase are different identifiers
    toks = tokenize("Course course");
    CHECK(toks[0].text != toks[1].text);
}

static RawNamespacePtr parseText(const std::string& text) {
    return parseSpecification(text, "test.idp");
}

TEST_CASE("parse the data1 structure of the running example") {
    const char* text = R"(
vocabulary database is {
    type course;
    type person;
    type student subtype of person;
    pred takes[student, course];
    func age[person -> nat];
};
structure data1 over database is {
    course = {Logic; Chinese};
    student = {1..3};
    takes::ct = {1,Logic};
    takes::cf = {2,Chinese};
    age::ct = {1,25; 3,30};
};
)";
    auto root = parseText(text);
    REQUIRE(root->entries.size() == 2);
    auto& voc = *root->entries[0].vocab;
    CHECK(voc.name == "database");
    REQUIRE(voc.entries.size() == 5);
    CHECK(voc.entries[2].type.subtypeOf.size() == 1);
    CHECK(voc.entries[3].pred.argTypes.size() == 2);
    CHECK(voc.entries[4].func.outType.str() == "nat");

    auto& s = *root->entries[1].structure;
    CHECK(s.name == "data1");
    REQUIRE(s.entries.size() == 5);
    CHECK(s.entries[0].rhs == RawStructEntry::Rhs::Enum);
    CHECK(s.entries[0].tuples.size() == 2);
    CHECK(s.entries[1].rhs == RawStructEntry::Rhs::Range);
    CHECK(s.entries[2].mode == RawStructEntry::Mode::Ct);
    REQUIRE(s.entries[2].tuples.size() == 1);
    CHECK(s.entries[2].tuples[0][0].intVal == 1);
    CHECK(s.entries[2].tuples[0][1].name == "Logic");
    CHECK(s.entries[3].mode == RawStructEntry::Mode::Cf);
    CHECK(s.entries[4].tuples.size() == 2);
}

TEST_CASE("parse empty theory and quantified sentences") {
    auto root = parseText("theory T over V is { };");
    REQUIRE(root->entries.size() == 1);
    CHECK(root->entries[0].theory->items.empty());

    root = parseText(R"(
theory sessionAssignment over scheduling is {
    !sess in session: available(teaches(courseOf(sess)),planned(sess));
    !stud in student, sess in session: takes(stud,courseOf(sess)) => attends(stud,sess);
};
)");
    auto& t = *root->entries[0].theory;
    REQUIRE(t.items.size() == 2);
    auto s1 = t.items[0].sentence;
    CHECK(s1->kind == RawExpr::Kind::Quant);
    CHECK(s1->forall);
    auto s2 = t.items[1].sentence;
    REQUIRE(s2->binders.size() == 2);
    CHECK(s2->body->kind == RawExpr::Kind::Binary);
    CHECK(s2->body->op == "=>");
}

TEST_CASE("parse definition block (noOverlap, three rules)") {
    auto root = parseText(R"(
theory D over sched is {
    define {
        !s in session: noOverlap(s,s);
        !(s1)(s2) in session: noOverlap(s1,s2) <- planned(s1)+length(s1)=<planned(s2);
        !(s1)(s2) in session: noOverlap(s1,s2) <- planned(s2)+length(s2)=<planned(s1);
    };
};
)");
    auto& t = *root->entries[0].theory;
    REQUIRE(t.items.size() == 1);
    REQUIRE(t.items[0].kind == RawTheoryItem::Kind::Definition);
    auto& d = t.items[0].def;
    REQUIRE(d.rules.size() == 3);
    CHECK(d.rules[0].body == nullptr);  // fact rule
    CHECK(d.rules[0].head->name.str() == "noOverlap");
    CHECK(d.rules[1].binders[0].kind == RawBinderGroup::Kind::Tuples);
    CHECK(d.rules[1].binders[0].tuples.size() == 2);
    REQUIRE(d.rules[1].body != nullptr);
    CHECK(d.rules[1].body->kind == RawExpr::Kind::Chain);
}

TEST_CASE("parse aggregates, extended and generalized quantifiers") {
    auto root = parseText(R"(
theory T over V is {
    ?>=5 stud in student: attends(stud,sess);
    #{stud in student: attends(stud,sess)} >= 5;
    !s sat teaches(A,course(s)): day(s)=Wednesday;
    #(Course) > 0;
    c = sum({x : P(x) : t(x)});
    ?=1 t: timeOf(s,t);
};
)");
    auto& t = *root->entries[0].theory;
    REQUIRE(t.items.size() == 6);
    auto e0 = t.items[0].sentence;
    CHECK(e0->kind == RawExpr::Kind::ExtQuant);
    CHECK(e0->extOp == ">=");
    CHECK(e0->extBound == 5);

    auto e1 = t.items[1].sentence;
    REQUIRE(e1->kind == RawExpr::Kind::Chain);
    CHECK(e1->chainTerms[0]->kind == RawExpr::Kind::Agg);

    auto e2 = t.items[2].sentence;
    REQUIRE(e2->kind == RawExpr::Kind::Quant);
    CHECK(e2->binders[0].kind == RawBinderGroup::Kind::Sat);

    auto e3 = t.items[3].sentence;
    CHECK(e3->chainTerms[0]->aggIsPred);

    auto e4 = t.items[4].sentence;
    REQUIRE(e4->kind == RawExpr::Kind::Chain);
    auto agg = e4->chainTerms[1];
    REQUIRE(agg->kind == RawExpr::Kind::Agg);
    CHECK(agg->aggFn == "sum");
    REQUIRE(agg->aggSet != nullptr);
    CHECK(agg->aggSet->tuple.size() == 1);

    auto e5 = t.items[5].sentence;
    CHECK(e5->kind == RawExpr::Kind::ExtQuant);
    CHECK(e5->extOp == "=");
}

TEST_CASE("parse namespaces; same-name namespaces merge") {
    auto root = parseText(R"(
namespace A is {
    vocabulary V is { type T; };
};
namespace B is {
    vocabulary V is { type T; };
    term t over V is sum({x: P(x): t(x)});
};
namespace A is {
    vocabulary W is { type U; };
};
)");
    int nsCount = 0;
    for (auto& e : root->entries)
        if (e.kind == RawNsEntry::Kind::Namespace) ++nsCount;
    CHECK(nsCount == 2);  // A and B merged
    auto* a = root->findChild("A");
    REQUIRE(a != nullptr);
    CHECK(a->entries.size() == 2);  // V and W
    CHECK(a->fqn == "global::A");
}

TEST_CASE("include flattening copies vocabulary contents") {
    auto root = parseText(R"(
vocabulary database is {
    type course;   type location;   type session;
    func nameOf[course->string];
};
vocabulary schedule is {
    include database;
    func assigned[session -> course];
    func assigned[session -> location];
};
)");
    flattenIncludes(root);
    auto& sched = *root->entries[1].vocab;
    // 4 included entries + 2 own
    REQUIRE(sched.entries.size() == 6);
    CHECK(sched.entries[0].type.name == "course");
    CHECK(sched.entries[3].func.name == "nameOf");
    CHECK(sched.entries[4].func.name == "assigned");
}

TEST_CASE("refined include pulls one symbol plus its argument types") {
    auto root = parseText(R"(
vocabulary database is {
    type course;   type location;
    func nameOf[course->string];
};
vocabulary V2 is {
    include database::nameOf;
};
)");
    flattenIncludes(root);
    auto& v2 = *root->entries[1].vocab;
    REQUIRE(v2.entries.size() == 2);
    CHECK(v2.entries[0].type.name == "course");
    CHECK(v2.entries[1].func.name == "nameOf");
}

TEST_CASE("include of empty vocabulary leaves content unchanged") {
    auto root = parseText(R"(
vocabulary E is { };
vocabulary V is { include E; type T; };
)");
    flattenIncludes(root);
    auto& v = *root->entries[1].vocab;
    REQUIRE(v.entries.size() == 1);
    CHECK(v.entries[0].type.name == "T");
}

TEST_CASE("cyclic includes are rejected with the cycle named") {
    auto root = parseText(R"(
vocabulary A is { include B; };
vocabulary B is { include A; };
)");
    try {
        flattenIncludes(root);
        FAIL("expected cycle error");
    } catch (const Error& e) {
        CHECK(e.kind == Error::Kind::Input);
        CHECK(std::string(e.what()).find("A") != std::string::npos);
        CHECK(std::string(e.what()).find("B") != std::string::npos);
    }
}

TEST_CASE("unresolvable include target errors") {
    auto root = parseText("vocabulary V is { include Nowhere; };");
    CHECK_THROWS_AS(flattenIncludes(root), Error);
}

TEST_CASE("procedure blocks are rejected as unsupported, not a syntax error") {
    try {
        parseText("procedure append(left, right) { return left..right; };");
        FAIL("expected unsupported error");
    } catch (const Error& e) {
        CHECK(e.kind == Error::Kind::Unsupported);
    }
}

TEST_CASE("syntax errors carry location") {
    try {
        parseText("vocabulary V is { type ; };");
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.kind == Error::Kind::Parse);
        CHECK(e.loc.line == 1);
    }
}

TEST_CASE("constructed type declarations") {
    auto root = parseText(R"(
vocabulary V is {
    type days constructed from Monday, Tuesday, Sunday;
    type day; type hour;
    type time constructed from { time(day,hour) };
};
)");
    auto& v = *root->entries[0].vocab;
    CHECK(v.entries[0].type.constructed);
    CHECK(v.entries[0].type.ctors.size() == 3);
    auto& timeDecl = v.entries[3].type;
    REQUIRE(timeDecl.ctors.size() == 1);
    CHECK(timeDecl.ctors[0].name == "time");
    CHECK(timeDecl.ctors[0].argTypes.size() == 2);
}

TEST_CASE("require statements are recorded") {
    auto root = parseText("require \"base.idp\";\nvocabulary V is { };");
    REQUIRE(root->requiredFiles.size() == 1);
    CHECK(root->requiredFiles[0] == "base.idp");
}
