#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kbf/ast.hpp"

using namespace kbf;

TEST_CASE("domain element total order: integers first, then idents, then cons") {
    auto d1 = DomainElem::mkInt(1);
    auto d2 = DomainElem::mkInt(25);
    auto a = DomainElem::mkIdent("Chinese");
    auto b = DomainElem::mkIdent("Logic");
    CHECK(d1 < d2);
    CHECK(d2 < a);  // integers before every other domain element
    CHECK(a < b);   // identifiers lexicographic

    auto days = makeTypeSymbol("days");
    auto mon = makeFuncSymbol("Monday", {}, days, false);
    auto tue = makeFuncSymbol("Tuesday", {}, days, false);
    mon->constructorOf = days;
    tue->constructorOf = days;
    days->type->constructed = true;
    days->type->constructors = {mon, tue};
    auto em = DomainElem::mkCons(mon, {});
    auto et = DomainElem::mkCons(tue, {});
    CHECK(em < et);  // declaration order
    CHECK(b < em);   // identifiers before cons values
    CHECK(em == DomainElem::mkCons(mon, {}));
}

TEST_CASE("type hierarchy relations") {
    auto person = makeTypeSymbol("person");
    auto student = makeTypeSymbol("student");
    student->type->supertypes = {person};
    person->type->subtypes = {student};
    CHECK(typeLeq(student, person));
    CHECK(!typeLeq(person, student));
    CHECK(typeLeq(student, student));
    auto lubs = minimalCommonSupertypes({student, person});
    REQUIRE(lubs.size() == 1);
    CHECK(lubs[0] == person);
    CHECK(typesCompatible(student, person));

    auto car = makeTypeSymbol("car");
    CHECK(!typesCompatible(car, Builtins::get().intType));
}

TEST_CASE("free variables: binder shadows outer variable") {
    auto T = makeTypeSymbol("T");
    auto P = makePredSymbol("P", {T});
    auto Q = makePredSymbol("Q", {T});
    auto x = Term::mkVar("x", T);
    // P(x) & !x: Q(x)
    auto f = Formula::mkAnd({Formula::mkAtom(P, {x}),
                             Formula::mkForall({{"x", T}}, Formula::mkAtom(Q, {x}))});
    auto fv = freeVars(f);
    REQUIRE(fv.size() == 1);
    CHECK(fv.count("x") == 1);

    // sentence: no free variables once quantified
    auto g = Formula::mkForall({{"x", T}}, f);
    CHECK(freeVars(g).empty());
}

TEST_CASE("free variables of aggregate sets") {
    auto T = makeTypeSymbol("T");
    auto P = makePredSymbol("P", {T});
    auto t = makeFuncSymbol("t", {T}, Builtins::get().intType, false);
    auto x = Term::mkVar("x", T);
    // sum({x : P(x) : t(x)})
    auto set = SetExpr::mk({{"x", T}}, Formula::mkAtom(P, {x}), {Term::mkFunc(t, {x})});
    auto agg = Term::mkAgg(AggFn::Sum, set);
    CHECK(freeVars(agg).empty());
}

TEST_CASE("substitution eliminates free occurrences only") {
    auto T = makeTypeSymbol("T");
    auto P = makePredSymbol("P", {T});
    auto Q = makePredSymbol("Q", {T, T});
    auto one = DomainElem::mkInt(1);

    auto p = Formula::mkAtom(P, {Term::mkVar("x", T)});
    auto p1 = substitute(p, {{"x", one}});
    CHECK(p1->args[0]->kind == Term::Kind::Elem);
    CHECK(p1->args[0]->elem == one);
    CHECK(freeVars(p1).empty());

    // bound occurrence untouched
    auto all = Formula::mkForall({{"x", T}}, p);
    auto all1 = substitute(all, {{"x", one}});
    CHECK(equal(all, all1));

    // Q(x,y)[x -> a]
    auto q = Formula::mkAtom(Q, {Term::mkVar("x", T), Term::mkVar("y", T)});
    auto q1 = substitute(q, {{"x", DomainElem::mkIdent("a")}});
    CHECK(q1->args[0]->kind == Term::Kind::Elem);
    CHECK(q1->args[1]->kind == Term::Kind::Var);
    auto fv = freeVars(q1);
    CHECK(fv.count("x") == 0);
    CHECK(fv.count("y") == 1);
}

TEST_CASE("structural equality is deep") {
    auto T = makeTypeSymbol("T");
    auto P = makePredSymbol("P", {T});
    auto f1 = Formula::mkForall({{"x", T}}, Formula::mkAtom(P, {Term::mkVar("x", T)}));
    auto f2 = Formula::mkForall({{"x", T}}, Formula::mkAtom(P, {Term::mkVar("x", T)}));
    CHECK(equal(f1, f2));
    auto f3 = Formula::mkForall({{"y", T}}, Formula::mkAtom(P, {Term::mkVar("y", T)}));
    CHECK(!equal(f1, f3));  // alpha-variants are distinct structurally
}

TEST_CASE("definition symbol classification") {
    auto T = makeTypeSymbol("T");
    auto P = makePredSymbol("P", {T});
    auto Q = makePredSymbol("Q", {T});
    Definition d;
    Rule r;
    r.vars = {{"x", T}};
    r.head = P;
    r.headArgs = {Term::mkVar("x", T)};
    r.body = Formula::mkAtom(Q, {Term::mkVar("x", T)});
    d.rules.push_back(r);
    auto defined = d.definedSymbols();
    REQUIRE(defined.size() == 1);
    CHECK(defined[0] == P);
    auto opens = d.openSymbols();
    CHECK(std::find(opens.begin(), opens.end(), Q) != opens.end());
    CHECK(std::find(opens.begin(), opens.end(), P) == opens.end());
}

TEST_CASE("vocabulary finalize injects builtins and derived views") {
    auto voc = std::make_shared<Vocabulary>();
    voc->name = "V";
    auto T = makeTypeSymbol("T");
    auto P = makePredSymbol("takes", {T, T});
    voc->add(T);
    voc->add(P);
    voc->finalize();
    CHECK(voc->contains(Builtins::get().intType));
    CHECK(voc->contains(T->type->minFn));
    REQUIRE(P->ctView != nullptr);
    CHECK(P->ctView->name == "takes_ct");
    CHECK(voc->contains(P->ctView));
    CHECK(P->cfView->arity() == 2);
    // function views get graph arity
    auto f = makeFuncSymbol("age", {T}, Builtins::get().natType, false);
    voc->add(f);
    voc->finalize();
    CHECK(f->ctView->arity() == 2);
}
