#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kbf/printer.hpp"
#include "kbf/typecheck.hpp"
#include "kbf/wfs.hpp"

using namespace kbf;

namespace {

Spec resolveText(const std::string& text) {
    auto root = parseSpecification(text, "test.idp");
    flattenIncludes(root);
    return disambiguate(root);
}

SymbolPtr symOf(const VocabularyPtr& voc, const std::string& name) {
    for (auto& s : voc->symbols)
        if (s->name == name) return s;
    return nullptr;
}

DomainElem I(long long v) { return DomainElem::mkInt(v); }

}  // namespace

TEST_CASE("graph translation rewrites function rules and body occurrences") {
    auto spec = resolveText(R"(
vocabulary V is {
    type T;
    func f[T -> T];
    pred P[T];
    func c[ -> T];
};
theory Th over V is {
    define {
        !x in T: f(x) = x <- P(x);
        !x in T: P(x) <- P(f(c));
    };
};
)");
    auto d = spec.findTheory("Th")->definitions[0];
    auto g = graphTranslate(d);
    REQUIRE(g->rules.size() == 2);
    // function rule became a graph-predicate rule with fresh head variables
    CHECK(g->rules[0].head->graphOf != nullptr);
    CHECK(g->rules[0].headArgs.size() == 2);
    CHECK(g->rules[0].headValue == nullptr);
    // P(f(c)) became ?z: P(z) & F(c,z)
    auto body = g->rules[1].body;
    std::set<SymbolPtr> syms;
    collectSymbols(body, syms);
    auto voc = spec.findVocabulary("V");
    auto f = symOf(voc, "f");
    CHECK(syms.count(f->graphPred) == 1);

    // predicate-only definitions stay unchanged
    auto spec2 = resolveText(R"(
vocabulary W is { type T; pred p[T]; pred q[T]; };
theory Th2 over W is { define { !x in T: p(x) <- q(x); }; };
)");
    auto d2 = spec2.findTheory("Th2")->definitions[0];
    auto g2 = graphTranslate(d2);
    CHECK(equal(*d2, *g2));
}

TEST_CASE("wfm: monotone canTake reaches all courses when nothing depends") {
    auto spec = resolveText(R"(
vocabulary V is {
    type course;
    pred depends[course, course];
    pred canTake[course];
};
theory Th over V is {
    define {
        !c1 in course: canTake(c1) <- !c2 in course: depends(c1,c2) => canTake(c2);
    };
};
structure S over V is {
    course = {1; 2};
    depends = {};
};
)");
    auto d = spec.findTheory("Th")->definitions[0];
    auto S = spec.findStructure("S");
    auto w = wfm(d, *S);
    CHECK(w.twoValued());
    auto canTake = symOf(spec.findVocabulary("V"), "canTake");
    CHECK(w.tables[canTake].trueSet.size() == 2);

    // with a cyclic dependency the definition still has a two-valued model:
    // the construction can never begin, so nothing can be taken... except the
    // rule is monotone in canTake, making the least fixpoint empty only when
    // a course depends on something untakeable. 1 -> 2 -> 1 gives neither.
    auto spec2 = resolveText(R"(
vocabulary V is {
    type course;
    pred depends[course, course];
    pred canTake[course];
};
theory Th over V is {
    define {
        !c1 in course: canTake(c1) <- !c2 in course: depends(c1,c2) => canTake(c2);
    };
};
structure S over V is {
    course = {1; 2};
    depends = {1,2; 2,1};
};
)");
    auto w2 = wfm(spec2.findTheory("Th")->definitions[0], *spec2.findStructure("S"));
    CHECK(w2.twoValued());
    auto canTake2 = symOf(spec2.findVocabulary("V"), "canTake");
    CHECK(w2.tables[canTake2].trueSet.empty());
}

TEST_CASE("wfm: rule sets with odd negation loops are three-valued") {
    auto spec = resolveText(R"(
vocabulary V is { pred p; };
theory Th over V is { define { p <- ~p; }; };
structure S over V is { };
)");
    auto w = wfm(spec.findTheory("Th")->definitions[0], *spec.findStructure("S"));
    CHECK(!w.twoValued());
    auto p = symOf(spec.findVocabulary("V"), "p");
    CHECK(w.tables[p].unknown.size() == 1);
}

TEST_CASE("wfm: induction over a well-founded order (Def. 3 style)") {
    // sat(f) for formulas f over one atom: 10 is P, 20 is ~P; I = {}
    auto spec = resolveText(R"(
vocabulary V is {
    type form;
    pred isAtomP[form];
    pred negOf[form, form];
    pred inI[form];
    pred sat[form];
};
theory Th over V is {
    define {
        !f in form: sat(f) <- isAtomP(f) & inI(f);
        !f in form, g in form: sat(f) <- negOf(f,g) & ~sat(g);
    };
};
structure S over V is {
    form = {10; 20};
    isAtomP = {10};
    negOf = {20,10};
    inI = {};
};
)");
    auto w = wfm(spec.findTheory("Th")->definitions[0], *spec.findStructure("S"));
    REQUIRE(w.twoValued());
    auto sat = symOf(spec.findVocabulary("V"), "sat");
    CHECK(w.tables[sat].trueSet.count({I(20)}) == 1);  // |= ~P
    CHECK(w.tables[sat].trueSet.count({I(10)}) == 0);  // not |= P
}

TEST_CASE("wfm is a fixpoint: folding and re-running changes nothing") {
    auto spec = resolveText(R"(
vocabulary V is {
    type n;
    pred edge[n, n];
    pred reach[n, n];
};
theory Th over V is {
    define {
        !x in n, y in n: reach(x,y) <- edge(x,y);
        !x in n, y in n, z in n: reach(x,y) <- reach(x,z) & reach(z,y);
    };
};
structure S over V is {
    n = {1..4};
    edge = {1,2; 2,3};
};
)");
    auto d = spec.findTheory("Th")->definitions[0];
    auto S = spec.findStructure("S");
    auto w1 = wfm(d, *S);
    REQUIRE(w1.twoValued());
    auto I1 = S->clone();
    foldWfm(d, w1, *I1);
    auto w2 = wfm(d, *I1);
    auto reach = symOf(spec.findVocabulary("V"), "reach");
    CHECK(w1.tables[reach].trueSet == w2.tables[reach].trueSet);
    // Floyd-Warshall oracle
    bool adj[5][5] = {};
    adj[1][2] = adj[2][3] = true;
    for (int k = 1; k <= 4; ++k)
        for (int i = 1; i <= 4; ++i)
            for (int j = 1; j <= 4; ++j)
                if (adj[i][k] && adj[k][j]) adj[i][j] = true;
    TupleSet expected;
    for (int i = 1; i <= 4; ++i)
        for (int j = 1; j <= 4; ++j)
            if (adj[i][j]) expected.insert({I(i), I(j)});
    CHECK(w1.tables[reach].trueSet == expected);
}

TEST_CASE("classification: input-*, output-*, neither") {
    auto spec = resolveText(R"(
vocabulary V is {
    type session; type timeslot;
    pred timeOf[session, timeslot];
    pred overlaps[session, session];
    pred unused[session];
};
theory Th over V is {
    define {
        !s1 in session, s2 in session: overlaps(s1,s2) <-
            s1 ~= s2 & ?t in timeslot: timeOf(s1,t) & timeOf(s2,t);
    };
    define {
        !s in session: unused(s) <- ?t in timeslot: timeOf(s,t);
    };
    !s1 in session, s2 in session: overlaps(s1,s2) => s1 ~= s2;
};
structure Sopen over V is {
    session = {1; 2};
    timeslot = {10};
};
structure Sgiven over V is {
    session = {1; 2};
    timeslot = {10};
    timeOf = {1,10; 2,10};
};
)");
    auto th = spec.findTheory("Th");
    auto overlapsDef = th->definitions[0];
    auto unusedDef = th->definitions[1];
    auto open = spec.findStructure("Sopen");
    auto given = spec.findStructure("Sgiven");

    // overlaps: parameters unknown -> neither (it occurs in a sentence)
    CHECK(classify(overlapsDef, *th, *open) == DefClass::Neither);
    // with timeOf two-valued it becomes input-*
    CHECK(classify(overlapsDef, *th, *given) == DefClass::InputStar);
    // unused: not interpreted, occurs nowhere else, parameters open -> output-*
    CHECK(classify(unusedDef, *th, *open) == DefClass::OutputStar);
}

TEST_CASE("evaluate_input_defs: closure computed, chained definitions in SCC order") {
    auto spec = resolveText(R"(
vocabulary V is {
    type n;
    pred edge[n, n];
    pred reach[n, n];
    pred far[n];
};
theory Th over V is {
    define {
        !x in n, y in n: reach(x,y) <- edge(x,y);
        !x in n, y in n, z in n: reach(x,y) <- reach(x,z) & edge(z,y);
        !x in n: far(x) <- ?y in n: reach(y,x) & y ~= x;
    };
};
structure S over V is {
    n = {1..4};
    edge = {1,2; 2,3};
};
)");
    auto th = spec.findTheory("Th");
    auto S = spec.findStructure("S");
    auto r = evaluateInputDefs(th, *S);
    REQUIRE(!r.unsat);
    CHECK(r.residual->definitions.empty());
    auto voc = spec.findVocabulary("V");
    auto reach = symOf(voc, "reach");
    auto far = symOf(voc, "far");
    CHECK(r.structure->predTruth(reach, {I(1), I(3)}) == TruthValue::True);
    CHECK(r.structure->predTruth(reach, {I(3), I(1)}) == TruthValue::False);
    CHECK(r.structure->predTruth(far, {I(3)}) == TruthValue::True);
    CHECK(r.structure->predTruth(far, {I(1)}) == TruthValue::False);
    CHECK(r.structure->twoValuedOn(reach));

    // a theory without definitions is unchanged
    auto spec2 = resolveText(R"(
vocabulary W is { type T; pred p[T]; };
theory Th2 over W is { !x in T: p(x); };
structure S2 over W is { T = {1}; };
)");
    auto r2 = evaluateInputDefs(spec2.findTheory("Th2"), *spec2.findStructure("S2"));
    CHECK(!r2.unsat);
    CHECK(r2.residual->sentences.size() == 1);
    CHECK(precisionLeq(*spec2.findStructure("S2"), *r2.structure));
    CHECK(precisionLeq(*r2.structure, *spec2.findStructure("S2")));
}

TEST_CASE("evaluate_input_defs detects inconsistency with prior knowledge") {
    auto spec = resolveText(R"(
vocabulary V is {
    type n;
    pred edge[n, n];
    pred reach[n, n];
};
theory Th over V is {
    define { !x in n, y in n: reach(x,y) <- edge(x,y); };
};
structure S over V is {
    n = {1; 2};
    edge = {1,2};
    reach::cf = {1,2};
};
)");
    auto r = evaluateInputDefs(spec.findTheory("Th"), *spec.findStructure("S"));
    CHECK(r.unsat);
    CHECK(r.witness.find("reach") != std::string::npos);
}

TEST_CASE("completion: single rule gives both implications") {
    auto spec = resolveText(R"(
vocabulary V is { pred p; pred q; };
theory Th over V is { define { p <- q; }; };
)");
    auto sentences = completion(spec.findTheory("Th")->definitions[0]);
    REQUIRE(sentences.size() == 2);
    // q => p and p => q (as ~a | b forms)
    for (auto& s : sentences) CHECK(s->kind == Formula::Kind::Or);
}

TEST_CASE("completion of noOverlap: three rule-wise implications plus closure") {
    auto spec = resolveText(R"(
vocabulary sched is {
    type session; type timep subtype of int;
    func planned[session -> timep];
    func length[session -> timep];
    pred noOverlap[session, session];
};
theory D over sched is {
    define {
        !s in session: noOverlap(s,s);
        !(s1)(s2) in session: noOverlap(s1,s2) <- planned(s1)+length(s1)=<planned(s2);
        !(s1)(s2) in session: noOverlap(s1,s2) <- planned(s2)+length(s2)=<planned(s1);
    };
};
)");
    auto sentences = completion(spec.findTheory("D")->definitions[0]);
    CHECK(sentences.size() == 4);
}

TEST_CASE("transitive closure is stronger than its completion") {
    // two-node cycle with no base edge: the WFM makes reach empty, yet the
    // completion admits the all-true interpretation
    auto spec = resolveText(R"(
vocabulary V is {
    type n;
    pred edge[n, n];
    pred reach[n, n];
};
theory Th over V is {
    define {
        !x in n, y in n: reach(x,y) <- edge(x,y);
        !x in n, y in n, z in n: reach(x,y) <- reach(x,z) & reach(z,y);
    };
};
structure S over V is {
    n = {1; 2};
    edge = {};
};
)");
    auto th = spec.findTheory("Th");
    auto S = spec.findStructure("S");
    auto w = wfm(th->definitions[0], *S);
    REQUIRE(w.twoValued());
    auto reach = symOf(spec.findVocabulary("V"), "reach");
    CHECK(w.tables[reach].trueSet.empty());

    // all-true satisfies every completion sentence
    auto M = S->clone();
    SymbolTable& tab = M->tableMut(reach);
    auto space = M->tupleSpace(reach);
    for (auto& t : *space) tab.ct.insert(t);
    tab.closed = true;
    for (auto& c : completion(th->definitions[0]))
        CHECK(evalFormula(c, *M) == TruthValue::True);
}

TEST_CASE("dependency graph polarity and SCC split") {
    auto spec = resolveText(R"(
vocabulary V is {
    type T;
    pred a[T]; pred b[T]; pred c[T]; pred open1[T];
};
theory Th over V is {
    define {
        !x in T: a(x) <- b(x);
        !x in T: b(x) <- a(x) & open1(x);
        !x in T: c(x) <- ~a(x);
    };
};
)");
    auto d = spec.findTheory("Th")->definitions[0];
    auto g = DefDependencyGraph::build(*d);
    auto voc = spec.findVocabulary("V");
    auto a = symOf(voc, "a");
    auto b = symOf(voc, "b");
    auto c = symOf(voc, "c");
    CHECK(g.edges[a][b] == DefDependencyGraph::Polarity::Pos);
    CHECK(g.edges[c][a] == DefDependencyGraph::Polarity::Neg);

    auto subs = splitSccs(d);
    REQUIRE(subs.size() == 2);
    // a and b form one SCC evaluated before c
    CHECK(subs[0]->rules.size() == 2);
    CHECK(subs[1]->rules.size() == 1);
    CHECK(subs[1]->rules[0].head == c);
}
