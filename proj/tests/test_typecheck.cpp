#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kbf/printer.hpp"
#include "kbf/typecheck.hpp"

using namespace kbf;

static Spec resolveText(const std::string& text) {
    auto root = parseSpecification(text, "test.idp");
    flattenIncludes(root);
    return disambiguate(root);
}

TEST_CASE("overloading: P(P(x)) has exactly one disambiguation") {
    auto spec = resolveText(R"(
vocabulary V is {
    type T1; type T2;
    pred P[T1]; pred P[T2];
    func P[T1 -> T2];
};
theory T over V is {
    P(P(x));
};
)");
    auto th = spec.findTheory("T");
    REQUIRE(th != nullptr);
    REQUIRE(th->sentences.size() == 1);
    // !x in T1: P[T2](P[T1->T2](x))
    auto f = th->sentences[0];
    REQUIRE(f->kind == Formula::Kind::Forall);
    CHECK(f->vars.size() == 1);
    CHECK(f->vars[0].type->name == "T1");
    auto atom = f->body;
    REQUIRE(atom->kind == Formula::Kind::Atom);
    CHECK(atom->pred->fqn == "global::V::P[T2]");
    auto inner = atom->args[0];
    REQUIRE(inner->kind == Term::Kind::FuncApp);
    CHECK(inner->symbol->fqn == "global::V::P[T1->T2]");
}

TEST_CASE("a truly ambiguous sentence is reported with candidates") {
    try {
        resolveText(R"(
vocabulary V is {
    type T1;
    pred P[T1]; pred Q[T1]; pred Q[T1,T1];
    pred P2[T1];
};
vocabulary W is {
    type T1;
    pred P[T1];
};
theory T over V is { !x in T1: P(x); };
theory T2 over W is { !x in T1: P(x); };
)");
        // both resolve fine: P is unambiguous within each vocabulary
        CHECK(true);
    } catch (const Error&) {
        FAIL("should not be ambiguous");
    }
    try {
        resolveText(R"(
vocabulary V is {
    type T1; type T2; type T0 supertype of T1, T2;
    pred P[T1]; pred P[T2];
};
theory T over V is { !x in T0: ?y sat P(y): y = x; };
)");
        FAIL("expected ambiguity");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("P[T1]") != std::string::npos);
        CHECK(std::string(e.what()).find("P[T2]") != std::string::npos);
    }
}

TEST_CASE("!x: x=x over a single-type vocabulary types x by fallback") {
    auto spec = resolveText(R"(
vocabulary V is { type T; };
theory T1 over V is { !x: x=x; };
)");
    auto th = spec.findTheory("T1");
    auto f = th->sentences[0];
    REQUIRE(f->kind == Formula::Kind::Forall);
    CHECK(f->vars[0].type->name == "T");
}

TEST_CASE("P(1) with P[course] has no disambiguation") {
    CHECK_THROWS_AS(resolveText(R"(
vocabulary V is { type course; pred P[course]; };
theory T over V is { P(1); };
)"),
                    Error);
}

TEST_CASE("car in vehicle position ok; car in arithmetic is a violation") {
    auto spec = resolveText(R"(
vocabulary V is {
    type vehicle;
    type car subtype of vehicle;
    pred fast[vehicle];
    func speed[car -> int];
};
theory T over V is { !c in car: fast(c); };
)");
    CHECK(spec.findTheory("T") != nullptr);

    CHECK_THROWS_AS(resolveText(R"(
vocabulary V is {
    type vehicle;
    type car subtype of vehicle;
    func one[ -> car];
};
theory T over V is { one + 1 > 0; };
)"),
                    Error);
}

TEST_CASE("unquantified free names become outer universal variables") {
    auto spec = resolveText(R"(
vocabulary V is { type T; pred P[T]; pred Q[T]; };
theory T1 over V is { P(x) => Q(x); };
)");
    auto f = spec.findTheory("T1")->sentences[0];
    REQUIRE(f->kind == Formula::Kind::Forall);
    CHECK(f->vars[0].name == "x");
    CHECK(f->vars[0].type->name == "T");
    CHECK(freeVars(f).empty());
}

TEST_CASE("extended quantifier desugars to ExtExists") {
    auto spec = resolveText(R"(
vocabulary V is {
    type student; type session;
    pred attends[student, session];
};
theory T over V is {
    !sess in session: ?>=5 stud in student: attends(stud,sess);
};
)");
    auto f = spec.findTheory("T")->sentences[0];
    auto ext = f->body;
    REQUIRE(ext->kind == Formula::Kind::ExtExists);
    CHECK(ext->cmp == CmpOp::Geq);
    CHECK(ext->extBound == 5);
    CHECK(ext->vars[0].type->name == "student");
}

TEST_CASE("sat binder desugars to a guarded implication") {
    auto spec = resolveText(R"(
vocabulary V is {
    type session; type person; type day;
    func course[session -> person];
    pred teaches[person, person];
    func dayOf[session -> day];
    func A[ -> person];
    func Wednesday[ -> day];
};
theory T over V is {
    !s sat teaches(A,course(s)): dayOf(s)=Wednesday;
};
)");
    auto f = spec.findTheory("T")->sentences[0];
    REQUIRE(f->kind == Formula::Kind::Forall);
    // body must be ~guard | comparison
    REQUIRE(f->body->kind == Formula::Kind::Or);
    CHECK(f->body->subs[0]->kind == Formula::Kind::Not);
}

TEST_CASE("predicate-as-set shorthand expands to a set expression") {
    auto spec = resolveText(R"(
vocabulary V is { type Course; pred offered[Course]; };
theory T over V is { #(offered) > 0; #(Course) > 0; };
)");
    auto f = spec.findTheory("T")->sentences[0];
    REQUIRE(f->kind == Formula::Kind::Cmp);
    auto agg = f->left;
    REQUIRE(agg->kind == Term::Kind::Agg);
    CHECK(agg->agg == AggFn::Card);
    CHECK(agg->set->boundVars.size() == 1);
    CHECK(agg->set->cond->kind == Formula::Kind::Atom);
}

TEST_CASE("data1 structure resolves to ct/cf tables") {
    auto spec = resolveText(R"(
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
)");
    auto I = spec.findStructure("data1");
    REQUIRE(I != nullptr);
    auto voc = spec.findVocabulary("database");
    SymbolPtr takes, age, course, student;
    for (auto& s : voc->symbols) {
        if (s->name == "takes") takes = s;
        if (s->name == "age") age = s;
        if (s->name == "course") course = s;
        if (s->name == "student") student = s;
    }
    auto elems = I->enumerateType(student);
    REQUIRE(elems.size() == 3);
    CHECK(elems[0] == DomainElem::mkInt(1));
    const SymbolTable* tt = I->table(takes);
    REQUIRE(tt != nullptr);
    CHECK(tt->ct.count({DomainElem::mkInt(1), DomainElem::mkIdent("Logic")}) == 1);
    CHECK(tt->cf.count({DomainElem::mkInt(2), DomainElem::mkIdent("Chinese")}) == 1);
    CHECK(!tt->closed);
    // age: partial knowledge, graph width 2
    const SymbolTable* at = I->table(age);
    REQUIRE(at != nullptr);
    CHECK(at->ct.size() == 2);
    // integrity: data1 is legal
    CHECK(I->checkIntegrity().empty());
    // takes(1,Chinese) unknown
    CHECK(I->predTruth(takes, {DomainElem::mkInt(1), DomainElem::mkIdent("Chinese")}) ==
          TruthValue::Unknown);
}

TEST_CASE("included vocabularies share symbol identity") {
    auto spec = resolveText(R"(
vocabulary database is {
    type course;   type location;   type session;
    func nameOf[course->string];
};
vocabulary schedule is {
    include database;
    func assigned[session -> course];
};
)");
    auto db = spec.findVocabulary("database");
    auto sched = spec.findVocabulary("schedule");
    SymbolPtr c1, c2;
    for (auto& s : db->symbols)
        if (s->name == "course") c1 = s;
    for (auto& s : sched->symbols)
        if (s->name == "course") c2 = s;
    REQUIRE(c1 != nullptr);
    CHECK(c1 == c2);
}

TEST_CASE("cyclic type declarations are rejected") {
    // the same edge declared from both sides is already a dependency cycle
    try {
        resolveText(R"(
vocabulary V is {
    type student subtype of person;
    type person supertype of student;
};
)");
        FAIL("expected cycle error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("cyclic") != std::string::npos);
    }
    // and so is a semantic subtype cycle
    try {
        resolveText(R"(
vocabulary V is {
    type a subtype of b;
    type b subtype of c;
    type c subtype of a;
};
)");
        FAIL("expected cycle error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("cyclic") != std::string::npos);
    }
}

TEST_CASE("noOverlap definition resolves to three rules") {
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
    auto th = spec.findTheory("D");
    REQUIRE(th->definitions.size() == 1);
    auto& d = *th->definitions[0];
    REQUIRE(d.rules.size() == 3);
    CHECK(d.rules[0].head->name == "noOverlap");
    CHECK(d.rules[0].vars.size() == 1);
    CHECK(d.rules[1].vars.size() == 2);
    CHECK(d.rules[1].vars[0].type->name == "session");
    auto defined = d.definedSymbols();
    REQUIRE(defined.size() == 1);
    CHECK(defined[0]->name == "noOverlap");
}

TEST_CASE("function rules and int-subtype arithmetic in heads") {
    auto spec = resolveText(R"(
vocabulary V is {
    type time subtype of nat;
    type fluent;
    pred holds[fluent, time];
    pred causes[fluent, time];
};
theory T over V is {
    define {
        !f t: holds(f,t+1) <- causes(f,t);
    };
};
)");
    auto& d = *spec.findTheory("T")->definitions[0];
    REQUIRE(d.rules.size() == 1);
    CHECK(d.rules[0].vars.size() == 2);
    // head argument t+1 is an int-typed term in a time position (accepted,
    // guarded at evaluation time)
    CHECK(d.rules[0].headArgs[1]->kind == Term::Kind::FuncApp);
}

TEST_CASE("denotes lowering for user functions and min aggregates") {
    auto spec = resolveText(R"(
vocabulary V is {
    type T;
    partial func f[T -> T];
    pred P[T];
};
theory T1 over V is {
    !x in T: denotes(f(x)) => P(x);
};
)");
    auto th = desugarTheory(spec.findTheory("T1"));
    auto f = th->sentences[0];
    // !x in T: ~(?d: f(x) = d) | P(x)
    REQUIRE(f->kind == Formula::Kind::Forall);
    auto orf = f->body;
    REQUIRE(orf->kind == Formula::Kind::Or);
    auto neg = orf->subs[0];
    REQUIRE(neg->kind == Formula::Kind::Not);
    CHECK(neg->subs[0]->kind == Formula::Kind::Exists);
}

TEST_CASE("floats are rejected at resolution, not at parse") {
    auto root = parseSpecification("vocabulary V is { type T; };\n"
                                   "theory T1 over V is { 1.5 > 0; };",
                                   "f.idp");
    flattenIncludes(root);
    CHECK_THROWS_AS(disambiguate(root), Error);
}

TEST_CASE("signature annotations resolve overloaded names") {
    auto spec = resolveText(R"(
vocabulary V is {
    type T1; type T2;
    pred P[T1]; pred P[T2];
    func c1[ -> T1];
};
theory T over V is { P[T1](c1); };
)");
    auto f = spec.findTheory("T")->sentences[0];
    CHECK(f->pred->fqn == "global::V::P[T1]");
}

TEST_CASE("round trip: canonical print is a fixpoint") {
    std::string text = R"(
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
theory T over database is {
    !s in student: ?c in course: takes(s,c);
    #{s in student: takes(s,"Logic")} =< 3;
};
)";
    auto spec1 = resolveText(text);
    std::string p1 = printSpec(spec1);
    auto spec2 = resolveText(p1);
    std::string p2 = printSpec(spec2);
    CHECK(p1 == p2);
    CHECK(!p1.empty());
}
