#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kbf/common.hpp"

namespace kbf {

// ---------------------------------------------------------------------------
// Symbols and vocabularies
// ---------------------------------------------------------------------------

enum class SymbolKind { Predicate, Function, Type };
enum class BuiltinType { None, Int, Nat, Char, String };

struct Symbol;
using SymbolPtr = std::shared_ptr<Symbol>;

// Extra data carried by type symbols.
struct TypeInfo {
    std::vector<SymbolPtr> supertypes;  // direct
    std::vector<SymbolPtr> subtypes;    // direct
    std::vector<SymbolPtr> constructors;
    bool constructed = false;
    BuiltinType builtin = BuiltinType::None;
    // Builtin functions attached to every type: min[->T], max[->T],
    // pred[T->T], succ[T->T]. Created together with the type so that all
    // vocabularies containing T share them.
    SymbolPtr minFn, maxFn, predFn, succFn;
};

struct Symbol {
    SymbolKind kind = SymbolKind::Predicate;
    std::string name;
    std::string fqn;  // e.g. "global::V::P[T1,T2]"; types: "global::V::T"
    std::vector<SymbolPtr> argTypes;
    SymbolPtr outType;  // functions only
    bool partial = false;
    bool builtin = false;
    int declIndex = 0;  // global declaration counter; element and print order
    std::unique_ptr<TypeInfo> type;  // kind == Type

    SymbolPtr constructorOf;  // set on constructor symbols
    // Derived two-valued views P_ct / P_cf (§-style derived symbols).
    Symbol* derivedBase = nullptr;
    bool derivedCt = false;
    SymbolPtr ctView, cfView;  // set on base symbols once created
    // Graph predicate F/n+1 of a function f/n (created on demand).
    SymbolPtr graphPred;
    Symbol* graphOf = nullptr;

    size_t arity() const { return argTypes.size(); }
    bool isType() const { return kind == SymbolKind::Type; }
    bool isFunction() const { return kind == SymbolKind::Function; }
    // Width of the tuples stored for this symbol (functions via their graph).
    size_t tableWidth() const { return isFunction() ? arity() + 1 : (isType() ? 1 : arity()); }
};

int nextDeclIndex();

SymbolPtr makeTypeSymbol(const std::string& name);
SymbolPtr makePredSymbol(const std::string& name, std::vector<SymbolPtr> argTypes);
SymbolPtr makeFuncSymbol(const std::string& name, std::vector<SymbolPtr> argTypes, SymbolPtr out,
                         bool partial);
// The graph predicate symbol F/n+1 of a function f/n.
SymbolPtr graphPredOf(const SymbolPtr& f);

// Reflexive-transitive subtype test.
bool typeLeq(const SymbolPtr& sub, const SymbolPtr& super);
// All common supertypes, minimal ones only (the hierarchy is a DAG).
std::vector<SymbolPtr> minimalCommonSupertypes(const std::vector<SymbolPtr>& types);
bool typesCompatible(const SymbolPtr& a, const SymbolPtr& b);  // share a supertype
std::vector<SymbolPtr> rootTypesOf(const SymbolPtr& t);

// Shared builtin symbols (int/nat/char/string, true/false, arithmetic).
struct Builtins {
    SymbolPtr intType, natType, charType, stringType;
    SymbolPtr trueSym, falseSym;
    SymbolPtr add, sub, mul, divi, mod;  // int x int -> int; div/mod partial
    std::vector<SymbolPtr> all() const;
    static const Builtins& get();
};

struct Vocabulary;
using VocabularyPtr = std::shared_ptr<Vocabulary>;

struct Vocabulary {
    std::string name;
    std::string fqn;
    std::vector<SymbolPtr> symbols;  // declared + included + builtins + derived views

    bool contains(const SymbolPtr& s) const;
    void add(const SymbolPtr& s);
    // All symbols with the given plain name.
    std::vector<SymbolPtr> byName(const std::string& n) const;
    std::vector<SymbolPtr> types() const;
    // Installs builtins and the derived _ct/_cf views; idempotent.
    void finalize();
};

// ---------------------------------------------------------------------------
// Domain elements
// ---------------------------------------------------------------------------

// Closed sum: integer, identifier, constructor application. Total order:
// integers first (natural order), then identifiers (lexicographic), then
// constructor values (constructor declaration order, then arguments).
struct DomainElem {
    enum class Kind { Int, Ident, Cons };
    Kind kind = Kind::Int;
    long long num = 0;
    std::string ident;
    SymbolPtr cons;
    std::vector<DomainElem> args;

    DomainElem() = default;
    static DomainElem mkInt(long long v);
    static DomainElem mkIdent(std::string s);
    static DomainElem mkCons(SymbolPtr c, std::vector<DomainElem> a);

    bool isInt() const { return kind == Kind::Int; }
    std::string str() const;
};

bool operator==(const DomainElem& a, const DomainElem& b);
bool operator!=(const DomainElem& a, const DomainElem& b);
bool operator<(const DomainElem& a, const DomainElem& b);

using Tuple = std::vector<DomainElem>;
using TupleSet = std::set<Tuple>;

std::string tupleStr(const Tuple& t);

// ---------------------------------------------------------------------------
// Terms, set expressions, formulas
// ---------------------------------------------------------------------------

enum class AggFn { Card, Sum, Prod, Min, Max };
enum class CmpOp { Eq, Neq, Lt, Gt, Leq, Geq };

const char* aggName(AggFn f);
const char* cmpName(CmpOp op);  // surface syntax: = ~= < > =< >=
CmpOp cmpNegate(CmpOp op);
CmpOp cmpFlip(CmpOp op);  // swap sides
bool cmpHolds(CmpOp op, const DomainElem& a, const DomainElem& b);
bool cmpHoldsInt(CmpOp op, long long a, long long b);

struct Term;
struct Formula;
struct SetExpr;
using TermPtr = std::shared_ptr<const Term>;
using FormulaPtr = std::shared_ptr<const Formula>;
using SetExprPtr = std::shared_ptr<const SetExpr>;

struct TypedVar {
    std::string name;
    SymbolPtr type;
};

struct Term {
    enum class Kind { Var, Elem, FuncApp, Agg };
    Kind kind = Kind::Elem;

    std::string var;     // Var
    SymbolPtr varType;   // Var
    DomainElem elem;     // Elem
    SymbolPtr symbol;    // FuncApp (function or constructor)
    std::vector<TermPtr> args;
    AggFn agg = AggFn::Card;  // Agg
    SetExprPtr set;

    static TermPtr mkVar(std::string name, SymbolPtr type);
    static TermPtr mkElem(DomainElem e);
    static TermPtr mkFunc(SymbolPtr f, std::vector<TermPtr> args);
    static TermPtr mkAgg(AggFn fn, SetExprPtr s);
};

struct SetExpr {
    std::vector<TypedVar> boundVars;
    FormulaPtr cond;
    std::vector<TermPtr> tuple;  // may be empty ({x : phi} form)

    static SetExprPtr mk(std::vector<TypedVar> vars, FormulaPtr cond, std::vector<TermPtr> tuple);
};

struct Formula {
    enum class Kind {
        BoolConst,  // true / false
        Atom,       // P(t...)
        Cmp,        // t1 op t2
        Not,
        And,
        Or,
        Forall,
        Exists,
        ExtExists,  // ?op k vars : body
        Denotes,    // denotes(t)
    };
    Kind kind = Kind::BoolConst;

    bool boolVal = false;                // BoolConst
    SymbolPtr pred;                      // Atom
    std::vector<TermPtr> args;           // Atom
    CmpOp cmp = CmpOp::Eq;               // Cmp, ExtExists
    TermPtr left, right;                 // Cmp
    std::vector<FormulaPtr> subs;        // Not(1), And, Or
    std::vector<TypedVar> vars;          // quantifiers
    FormulaPtr body;                     // quantifiers
    long long extBound = 0;              // ExtExists
    TermPtr term;                        // Denotes

    static FormulaPtr mkBool(bool b);
    static FormulaPtr mkAtom(SymbolPtr p, std::vector<TermPtr> args);
    static FormulaPtr mkCmp(CmpOp op, TermPtr l, TermPtr r);
    static FormulaPtr mkNot(FormulaPtr f);
    static FormulaPtr mkAnd(std::vector<FormulaPtr> fs);
    static FormulaPtr mkOr(std::vector<FormulaPtr> fs);
    static FormulaPtr mkForall(std::vector<TypedVar> vars, FormulaPtr body);
    static FormulaPtr mkExists(std::vector<TypedVar> vars, FormulaPtr body);
    static FormulaPtr mkExtExists(CmpOp op, long long bound, std::vector<TypedVar> vars,
                                  FormulaPtr body);
    static FormulaPtr mkDenotes(TermPtr t);
    // ~a | b
    static FormulaPtr mkImplies(FormulaPtr a, FormulaPtr b);
};

// ---------------------------------------------------------------------------
// Definitions and theories
// ---------------------------------------------------------------------------

struct Rule {
    std::vector<TypedVar> vars;  // universally quantified
    SymbolPtr head;              // defined predicate or function
    std::vector<TermPtr> headArgs;
    TermPtr headValue;  // function rules only
    FormulaPtr body;
};

struct Definition {
    std::vector<Rule> rules;

    std::vector<SymbolPtr> definedSymbols() const;
    std::vector<SymbolPtr> openSymbols() const;  // non-defined symbols occurring
};
using DefinitionPtr = std::shared_ptr<const Definition>;

struct Theory {
    std::string name;
    std::string fqn;
    VocabularyPtr voc;
    std::vector<FormulaPtr> sentences;
    std::vector<DefinitionPtr> definitions;
};
using TheoryPtr = std::shared_ptr<Theory>;

// ---------------------------------------------------------------------------
// Free variables, substitution, structural equality
// ---------------------------------------------------------------------------

std::set<std::string> freeVars(const TermPtr& t);
std::set<std::string> freeVars(const FormulaPtr& f);
std::set<std::string> freeVars(const Rule& r);

using Binding = std::map<std::string, DomainElem>;

TermPtr substitute(const TermPtr& t, const Binding& b);
FormulaPtr substitute(const FormulaPtr& f, const Binding& b);

// Substitution by arbitrary terms (capture-avoiding via bound-name masking).
using TermSubst = std::map<std::string, TermPtr>;
TermPtr substituteTerms(const TermPtr& t, const TermSubst& s);
FormulaPtr substituteTerms(const FormulaPtr& f, const TermSubst& s);

bool equal(const TermPtr& a, const TermPtr& b);
bool equal(const FormulaPtr& a, const FormulaPtr& b);
bool equal(const SetExprPtr& a, const SetExprPtr& b);
bool equal(const Definition& a, const Definition& b);

// All symbols occurring in a formula/term (predicates, functions, types of
// binders; not variables).
void collectSymbols(const TermPtr& t, std::set<SymbolPtr>& out);
void collectSymbols(const FormulaPtr& f, std::set<SymbolPtr>& out);
// Domain elements occurring syntactically (symmetry detection needs them).
void collectElems(const TermPtr& t, std::set<DomainElem>& out);
void collectElems(const FormulaPtr& f, std::set<DomainElem>& out);

}  // namespace kbf
