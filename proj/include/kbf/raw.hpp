#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kbf/common.hpp"

namespace kbf {

// ---------------------------------------------------------------------------
// Tokens
// ---------------------------------------------------------------------------

struct Token {
    enum class Kind { Ident, Int, Float, Str, Op, End };
    Kind kind = Kind::End;
    std::string text;
    long long intVal = 0;
    SourceLoc loc;
};

std::vector<Token> tokenize(const std::string& text, const std::string& filename = "");

// ---------------------------------------------------------------------------
// Raw (parsed but unresolved) syntax
// ---------------------------------------------------------------------------

// A possibly qualified name, optionally carrying a [T1,...->T] signature
// annotation or a /n arity annotation.
struct QualName {
    std::vector<std::string> parts;
    bool hasSig = false;
    std::vector<QualName> sigArgs;
    std::vector<QualName> sigOut;  // empty or one element
    std::optional<int> arityAnn;
    SourceLoc loc;

    QualName() = default;
    explicit QualName(std::string simple) : parts{std::move(simple)} {}
    std::string str() const;
    const std::string& last() const { return parts.back(); }
    bool simple() const { return parts.size() == 1 && !hasSig && !arityAnn; }
};

struct RawExpr;
using RawExprPtr = std::shared_ptr<RawExpr>;

struct RawBinderGroup {
    enum class Kind { Plain, Tuples, Sat };
    Kind kind = Kind::Plain;
    std::vector<std::vector<std::string>> tuples;  // Plain: singleton tuples
    std::optional<QualName> setName;               // `in T` / `in S`
    RawExprPtr setComp;                            // `in {...}`
    RawExprPtr guard;                              // `sat phi`
    SourceLoc loc;
};

// Unified expression tree covering both terms and formulas; the type checker
// sorts out which is which.
struct RawExpr {
    enum class Kind {
        Int, Float, Str, Bool,
        Name,      // possibly-qualified identifier
        Call,      // name(args)
        Unary,     // ~ e, - e
        Binary,    // & | => <= <=> + - * / %
        Chain,     // t1 op t2 op t3 ... (comparison chain)
        Quant,     // ! binders : e   /  ? binders : e
        ExtQuant,  // ? op k binders : e
        SetComp,   // { binders : cond [: tuple] }
        Agg,       // sum({...}) / #(P) ...
        Denotes,   // denotes(t)
    };
    Kind kind = Kind::Int;
    SourceLoc loc;

    long long intVal = 0;
    double floatVal = 0;
    std::string strVal;
    bool boolVal = false;
    QualName name;
    std::vector<RawExprPtr> args;
    std::string op;
    std::vector<RawExprPtr> chainTerms;
    std::vector<std::string> chainOps;
    bool forall = false;
    std::vector<RawBinderGroup> binders;
    RawExprPtr body;  // quantifier body / set condition
    std::string extOp;
    long long extBound = 0;
    std::vector<RawExprPtr> tuple;  // set term tuple
    std::string aggFn;
    RawExprPtr aggSet;   // SetComp, or null when aggArg names a predicate
    QualName aggPred;
    bool aggIsPred = false;
};

// ---------------------------------------------------------------------------
// Raw components
// ---------------------------------------------------------------------------

struct RawInclude {
    QualName target;
    SourceLoc loc;
};

struct RawCtorDecl {
    std::string name;
    std::vector<QualName> argTypes;
    SourceLoc loc;
};

struct RawTypeDecl {
    std::string name;
    std::vector<QualName> subtypeOf;
    std::vector<QualName> supertypeOf;
    bool constructed = false;
    std::vector<RawCtorDecl> ctors;
    SourceLoc loc;
    std::string origin;  // fqn of the declaring vocabulary; survives include copies
};

struct RawPredDecl {
    std::string name;
    std::vector<QualName> argTypes;
    SourceLoc loc;
    std::string origin;
};

struct RawFuncDecl {
    std::string name;
    std::vector<QualName> argTypes;
    QualName outType;
    bool partial = false;
    SourceLoc loc;
    std::string origin;
};

struct RawVocabEntry {
    enum class Kind { Type, Pred, Func, IsaType, Include };
    Kind kind;
    RawTypeDecl type;
    RawPredDecl pred;
    RawFuncDecl func;
    QualName isa;  // `P isa type;`
    RawInclude include;
};

struct RawVocab {
    std::string name;
    std::vector<RawVocabEntry> entries;
    SourceLoc loc;
};

struct RawRule {
    std::vector<RawBinderGroup> binders;
    RawExprPtr head;  // Call/Name, or Chain `f(t)=t'`
    RawExprPtr body;  // null for facts
    SourceLoc loc;
};

struct RawDefinition {
    std::vector<RawRule> rules;
    SourceLoc loc;
};

struct RawTheoryItem {
    enum class Kind { Sentence, Definition, Include };
    Kind kind;
    RawExprPtr sentence;
    RawDefinition def;
    RawInclude include;
};

struct RawTheory {
    std::string name;
    QualName vocab;
    std::vector<RawTheoryItem> items;
    SourceLoc loc;
};

struct RawElem {
    enum class Kind { Int, Ident, Str, Cons };
    Kind kind = Kind::Int;
    long long intVal = 0;
    std::string name;
    std::vector<RawElem> args;  // Cons
    SourceLoc loc;
    std::string str() const;
};

struct RawStructEntry {
    enum class Mode { Total, Ct, Cf };
    enum class Rhs { Enum, Range, Scalar, Bool, Include };
    QualName symbol;
    Mode mode = Mode::Total;
    Rhs rhs = Rhs::Enum;
    std::vector<std::vector<RawElem>> tuples;
    RawElem lo, hi;     // Range
    RawElem scalar;     // Scalar
    bool boolVal = false;
    RawInclude include;
    SourceLoc loc;
};

struct RawStructure {
    std::string name;
    QualName vocab;
    std::vector<RawStructEntry> entries;
    SourceLoc loc;
};

struct RawTermComp {
    std::string name;
    QualName vocab;
    RawExprPtr expr;
    SourceLoc loc;
};

struct RawFormulaComp {
    std::string name;
    QualName vocab;
    RawExprPtr expr;
    SourceLoc loc;
};

struct RawNamespace;
using RawNamespacePtr = std::shared_ptr<RawNamespace>;

struct RawNsEntry {
    enum class Kind { Vocab, Theory, Structure, Term, Formula, Namespace, Include };
    Kind kind;
    std::shared_ptr<RawVocab> vocab;
    std::shared_ptr<RawTheory> theory;
    std::shared_ptr<RawStructure> structure;
    std::shared_ptr<RawTermComp> term;
    std::shared_ptr<RawFormulaComp> formula;
    RawNamespacePtr ns;
    RawInclude include;
    const std::string& entryName() const;
};

struct RawNamespace {
    std::string name;
    std::string fqn;  // "global", "global::A", ...
    std::vector<RawNsEntry> entries;
    std::vector<std::string> requiredFiles;  // `require f;` statements seen

    RawNamespace* findChild(const std::string& n);
};

// ---------------------------------------------------------------------------
// Parsing entry points
// ---------------------------------------------------------------------------

// Parses one specification text into (or merging into) a root namespace.
RawNamespacePtr parseSpecification(const std::vector<Token>& tokens, RawNamespacePtr root = nullptr);
RawNamespacePtr parseSpecification(const std::string& text, const std::string& filename = "",
                                   RawNamespacePtr root = nullptr);

// Replaces include entries by the contents of their targets. The include
// graph must be stratified (acyclic); cycles raise an error naming the cycle.
void flattenIncludes(const RawNamespacePtr& root);

// Component lookup by (possibly qualified) name with innermost-scope
// preference; used by include flattening and the, resolver.
std::vector<std::pair<RawNamespace*, RawNsEntry*>> lookupComponents(
    RawNamespace& root, const QualName& name, RawNamespace* from);

}  // namespace kbf
