#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "kbf/printer.hpp"
#include "kbf/query.hpp"
#include "kbf/typecheck.hpp"

using namespace kbf;

namespace {

Spec resolveText(const std::string& text) {
    auto root = parseSpecification(text, "test.idp");
    flattenIncludes(root);
    return disambiguate(root);
}

const char* kDatabase = R"(
vocabulary database is {
    type course;
    type person;
    type student subtype of person;
    pred takes[student, course];
    func age[person -> nat];
};
structure data1 over database is {
    course = {Logic; Chinese};
    person = {1..3};
    student = {1..3};
    takes::ct = {1,Logic};
    takes::cf = {2,Chinese};
    age::ct = {1,25; 3,30};
};
)";

SymbolPtr symOf(const VocabularyPtr& voc, const std::string& name) {
    for (auto& s : voc->symbols)
        if (s->name == name) return s;
    return nullptr;
}

DomainElem I(long long v) { return DomainElem::mkInt(v); }
DomainElem Id(const std::string& s) { return DomainElem::mkIdent(s); }

}  // namespace

TEST_CASE("precision order") {
    auto spec = resolveText(kDatabase);
    auto data1 = spec.findStructure("data1");
    auto voc = spec.findVocabulary("database");
    auto takes = symOf(voc, "takes");

    auto empty = data1->clone();
    empty->tableMut(takes) = SymbolTable{};
    empty->tableMut(symOf(voc, "age")) = SymbolTable{};
    CHECK(precisionLeq(*empty, *data1));
    CHECK(!precisionLeq(*data1, *empty));

    auto more = data1->clone();
    more->tableMut(takes).ct.insert({I(1), Id("Chinese")});
    CHECK(precisionLeq(*data1, *more));
    CHECK(!precisionLeq(*more, *data1));

    auto other = data1->clone();
    other->tableMut(takes).ct.insert({I(3), Id("Chinese")});
    CHECK(!precisionLeq(*more, *other));
    CHECK(!precisionLeq(*other, *more));

    CHECK(precisionLeq(*data1, *data1));
}

TEST_CASE("integrity: multi-image witness as in the consistency-check query") {
    auto spec = resolveText(R"(
vocabulary V is {
    type person;
    func age[person -> nat];
};
structure S over V is {
    person = {1};
    age::ct = {1,25; 1,30};
};
)");
    auto S = spec.findStructure("S");
    auto violations = S->checkIntegrity();
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].kind == Violation::Kind::MultiImage);
    Tuple expected{I(1), I(25), I(30)};
    CHECK(violations[0].witness == expected);
}

TEST_CASE("integrity: data1 passes clean, subtype violation is caught") {
    auto spec = resolveText(kDatabase);
    CHECK(spec.findStructure("data1")->checkIntegrity().empty());

    auto bad = resolveText(R"(
vocabulary V is {
    type person;
    type student subtype of person;
};
structure S over V is {
    student = {1};
    person = {2; 3};
};
)");
    auto violations = bad.findStructure("S")->checkIntegrity();
    REQUIRE(!violations.empty());
    CHECK(violations[0].kind == Violation::Kind::Subtype);
}

TEST_CASE("integrity: total function without an image") {
    auto spec = resolveText(R"(
vocabulary V is {
    type person; type height;
    func h[person -> height];
};
structure S over V is {
    person = {1; 2};
    height = {170; 180};
    h = {1,170};
};
)");
    auto violations = spec.findStructure("S")->checkIntegrity();
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].kind == Violation::Kind::MissingImage);
    CHECK(violations[0].witness == Tuple{I(2)});
}

TEST_CASE("merge is an upper bound; overlaps surface in the integrity check") {
    auto spec = resolveText(kDatabase);
    auto data1 = spec.findStructure("data1");
    auto voc = spec.findVocabulary("database");
    auto takes = symOf(voc, "takes");

    auto empty = data1->clone();
    empty->tableMut(takes) = SymbolTable{};
    auto m = merge(*data1, *empty);
    CHECK(precisionLeq(*data1, *m));
    CHECK(precisionLeq(*m, *data1));

    auto a = data1->clone();
    a->tableMut(takes).ct.insert({I(1), Id("Chinese")});
    auto b = data1->clone();
    b->tableMut(takes).ct.insert({I(3), Id("Logic")});
    auto ab = merge(*a, *b);
    CHECK(ab->table(takes)->ct.size() == 3);
    CHECK(precisionLeq(*a, *ab));
    CHECK(precisionLeq(*b, *ab));

    auto c = data1->clone();
    c->tableMut(takes).ct.insert({I(2), Id("Chinese")});  // cf in data1
    auto inconsistent = merge(*data1, *c);
    bool flagged = false;
    for (auto& v : inconsistent->checkIntegrity())
        if (v.kind == Violation::Kind::Inconsistent) flagged = true;
    CHECK(flagged);
}

TEST_CASE("projection restricts to the target vocabulary") {
    auto spec2 = resolveText(R"(
vocabulary V is {
    type course; type person;
    pred takes[person, course];
    func age[person -> nat];
};
vocabulary Vout is {
    include V::takes;
};
structure S over V is {
    course = {Logic};
    person = {1};
    takes = {1,Logic};
    age = {1,25};
};
)");
    auto S2 = spec2.findStructure("S");
    auto vout2 = spec2.findVocabulary("Vout");
    auto P = project(*S2, vout2);
    CHECK(P->table(symOf(vout2, "takes")) != nullptr);
    CHECK(P->table(symOf(spec2.findVocabulary("V"), "age")) == nullptr);
    auto Pid = project(*S2, S2->voc());
    CHECK(precisionLeq(*S2, *Pid));
    CHECK(precisionLeq(*Pid, *S2));
}

TEST_CASE("enumerate_type: ranges, constructed types, and min/max/pred/succ") {
    auto spec = resolveText(R"(
vocabulary V is {
    type student;
    type days constructed from Monday, Tuesday, Wednesday, Thursday, Friday,
        Saturday, Sunday;
    type empties;
    func emin[ -> empties];
};
structure S over V is {
    student = {1..3};
    empties = {};
};
)");
    auto S = spec.findStructure("S");
    auto voc = spec.findVocabulary("V");
    auto student = symOf(voc, "student");
    auto days = symOf(voc, "days");

    auto elems = S->enumerateType(student);
    CHECK(elems == std::vector<DomainElem>{I(1), I(2), I(3)});

    auto dayElems = S->enumerateType(days);
    REQUIRE(dayElems.size() == 7);
    CHECK(dayElems[0].cons->name == "Monday");  // declaration order
    CHECK(dayElems[6].cons->name == "Sunday");

    auto minStudent = Term::mkFunc(student->type->minFn, {});
    auto r = evalTerm(minStudent, *S);
    REQUIRE(r.isDefined());
    CHECK(r.value == I(1));
    auto maxStudent = Term::mkFunc(student->type->maxFn, {});
    CHECK(evalTerm(maxStudent, *S).value == I(3));
    auto succ1 = Term::mkFunc(student->type->succFn, {Term::mkElem(I(1))});
    CHECK(evalTerm(succ1, *S).value == I(2));
    auto pred1 = Term::mkFunc(student->type->predFn, {Term::mkElem(I(1))});
    CHECK(evalTerm(pred1, *S).kind == EvalResult::Kind::Undefined);

    auto empties = symOf(voc, "empties");
    auto minEmpty = Term::mkFunc(empties->type->minFn, {});
    CHECK(evalTerm(minEmpty, *S).kind == EvalResult::Kind::Undefined);

    auto spec2 = resolveText("vocabulary W is { type t; };\nstructure T over W is { };");
    auto t2 = symOf(spec2.findVocabulary("W"), "t");
    CHECK_THROWS_AS(spec2.findStructure("T")->enumerateType(t2), Error);
}

TEST_CASE("aggregate evaluation: sum/prod of empty set, min undefined") {
    auto spec = resolveText(R"(
vocabulary V is {
    type T;
    pred P[T];
    func w[T -> int];
};
structure S over V is {
    T = {1; 2; 3};
    P = {};
    w = {1,10; 2,20; 3,30};
};
)");
    auto S = spec.findStructure("S");
    auto voc = spec.findVocabulary("V");
    auto T = symOf(voc, "T");
    auto P = symOf(voc, "P");
    auto w = symOf(voc, "w");

    auto x = Term::mkVar("x", T);
    auto setEmpty = SetExpr::mk({{"x", T}}, Formula::mkAtom(P, {x}), {Term::mkFunc(w, {x})});
    CHECK(evalTerm(Term::mkAgg(AggFn::Sum, setEmpty), *S).value == I(0));
    CHECK(evalTerm(Term::mkAgg(AggFn::Prod, setEmpty), *S).value == I(1));
    CHECK(evalTerm(Term::mkAgg(AggFn::Min, setEmpty), *S).kind == EvalResult::Kind::Undefined);
    CHECK(evalTerm(Term::mkAgg(AggFn::Max, setEmpty), *S).kind == EvalResult::Kind::Undefined);
    auto cmp = Formula::mkCmp(CmpOp::Leq, Term::mkAgg(AggFn::Min, setEmpty), Term::mkElem(I(5)));
    CHECK(evalFormula(cmp, *S) == TruthValue::False);

    auto setAll = SetExpr::mk({{"x", T}}, Formula::mkBool(true), {Term::mkFunc(w, {x})});
    CHECK(evalTerm(Term::mkAgg(AggFn::Sum, setAll), *S).value == I(60));
    CHECK(evalTerm(Term::mkAgg(AggFn::Prod, setAll), *S).value == I(6000));
    CHECK(evalTerm(Term::mkAgg(AggFn::Min, setAll), *S).value == I(10));
    CHECK(evalTerm(Term::mkAgg(AggFn::Max, setAll), *S).value == I(30));
    CHECK(evalTerm(Term::mkAgg(AggFn::Card, setAll), *S).value == I(3));
}

TEST_CASE("partial functions: cost/number with number = 0") {
    auto spec = resolveText(R"(
vocabulary V is {
    func cost[ -> int];
    func number[ -> int];
};
structure S over V is {
    cost = 120;
    number = 0;
};
theory T over V is {
    cost/number =< 100;
    ~denotes(cost/number) | cost/number =< 100;
};
)");
    auto S = spec.findStructure("S");
    auto th = spec.findTheory("T");
    CHECK(evalFormula(th->sentences[0], *S) == TruthValue::False);
    CHECK(evalFormula(th->sentences[1], *S) == TruthValue::True);
}

TEST_CASE("quantification over an empty type is vacuous") {
    auto spec = resolveText(R"(
vocabulary V is { type T; pred P[T]; };
structure S over V is { T = {}; };
theory Th over V is { !x in T: P(x); ?x in T: P(x); };
)");
    auto S = spec.findStructure("S");
    auto th = spec.findTheory("Th");
    CHECK(evalFormula(th->sentences[0], *S) == TruthValue::True);
    CHECK(evalFormula(th->sentences[1], *S) == TruthValue::False);
}

TEST_CASE("query_set over derived symbols") {
    auto spec = resolveText(kDatabase);
    auto S = spec.findStructure("data1");
    auto voc = spec.findVocabulary("database");

    auto set1 = resolveSetText("{x in course : takes_ct(1,x)}", voc);
    auto r1 = querySet(set1, *S);
    REQUIRE(r1.size() == 1);
    CHECK(*r1.begin() == Tuple{Id("Logic")});

    auto set2 = resolveSetText("{x in course : false}", voc);
    CHECK(querySet(set2, *S).empty());

    auto set3 = resolveSetText("{s in student, a in nat : age_ct(s,a)}", voc);
    auto r3 = querySet(set3, *S);
    REQUIRE(r3.size() == 2);
    CHECK(r3.count({I(1), I(25)}) == 1);
    CHECK(r3.count({I(3), I(30)}) == 1);

    auto set4 = resolveSetText("{x in course : takes(1,x)}", voc);
    try {
        querySet(set4, *S);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("takes") != std::string::npos);
    }
}

TEST_CASE("Kleene evaluation is precision-monotone (random property)") {
    auto spec = resolveText(R"(
vocabulary V is {
    type T;
    pred p[T]; pred q[T,T];
};
structure S over V is { T = {1; 2}; };
theory Th over V is {
    !x in T: p(x) | ?y in T: q(x,y);
    ?x in T: p(x) & ~q(x,x);
    #{x in T: p(x)} >= 1;
    !x in T: (?=1 y in T: q(x,y)) => p(x);
};
)");
    auto base = spec.findStructure("S");
    auto voc = spec.findVocabulary("V");
    auto p = symOf(voc, "p");
    auto q = symOf(voc, "q");
    auto th = spec.findTheory("Th");

    std::mt19937 rng(20240817);
    auto randomize = [&](PartialStructure& s, double density) {
        std::uniform_real_distribution<double> u(0, 1);
        for (auto& sym : {p, q}) {
            auto space = s.tupleSpace(sym);
            SymbolTable& tab = s.tableMut(sym);
            for (auto& t : *space) {
                double r = u(rng);
                if (r < density / 2) tab.ct.insert(t);
                else if (r < density) tab.cf.insert(t);
            }
        }
    };
    int checked = 0;
    for (int iter = 0; iter < 300; ++iter) {
        auto I0 = base->clone();
        randomize(*I0, 0.5);
        if (!I0->checkIntegrity().empty()) continue;
        auto J = I0->clone();
        std::uniform_int_distribution<int> coin(0, 1);
        for (auto& sym : {p, q}) {
            auto space = J->tupleSpace(sym);
            SymbolTable& tab = J->tableMut(sym);
            for (auto& t : *space) {
                if (tab.ct.count(t) || tab.cf.count(t)) continue;
                if (coin(rng)) (coin(rng) ? tab.ct : tab.cf).insert(t);
            }
        }
        REQUIRE(precisionLeq(*I0, *J));
        for (auto& f : th->sentences) {
            TruthValue vi = evalFormula(f, *I0);
            TruthValue vj = evalFormula(f, *J);
            if (vi == TruthValue::True) CHECK(vj == TruthValue::True);
            if (vi == TruthValue::False) CHECK(vj == TruthValue::False);
            ++checked;
        }
        auto M = I0->clone();
        for (auto& sym : {p, q}) {
            auto space = M->tupleSpace(sym);
            SymbolTable& tab = M->tableMut(sym);
            for (auto& t : *space)
                if (!tab.ct.count(t) && !tab.cf.count(t)) tab.cf.insert(t);
        }
        for (auto& f : th->sentences) CHECK(evalFormula(f, *M) != TruthValue::Unknown);
    }
    CHECK(checked > 100);
}

TEST_CASE("structure printing emits re-parsable syntax with ranges") {
    auto spec = resolveText(kDatabase);
    auto S = spec.findStructure("data1");
    std::string printed = printStructure(*S);
    CHECK(printed.find("student = {1..3}") != std::string::npos);
    CHECK(printed.find("takes::ct = {1,Logic}") != std::string::npos);
    CHECK(printed.find("takes::cf = {2,Chinese}") != std::string::npos);
    CHECK(printed.find("age::ct = {1,25; 3,30}") != std::string::npos);
}
