#pragma once

#include "kbf/ast.hpp"
#include "kbf/query.hpp"
#include "kbf/structure.hpp"

namespace kbf {

// One instantiated rule: head atom plus a ground body formula.
struct GroundDefRule {
    SymbolPtr sym;  // original predicate or function graph predicate
    Tuple args;
    FormulaPtr body;
};

// Three-valued outcome of a definition per defined symbol. trueSet/unknown
// are explicit; everything else in the typed space is false.
struct WfmResult {
    struct Table {
        TupleSet trueSet;
        TupleSet unknown;
    };
    std::map<SymbolPtr, Table, SymbolDeclLess> tables;  // original symbols

    bool twoValued() const;
    // some unknown atom, for diagnostics
    std::string witness() const;
};

// §-style graph translation: function-defining rules become rules of the
// graph predicate, defined-function occurrences in bodies are rewritten from
// the leaves upward, and heads are normalized to distinct fresh variables.
DefinitionPtr graphTranslate(const DefinitionPtr& d);

// Dependency graph of the defined symbols, with edge polarities.
struct DefDependencyGraph {
    enum class Polarity { Pos, Neg, Both };
    std::vector<SymbolPtr> nodes;
    std::map<SymbolPtr, std::map<SymbolPtr, Polarity, SymbolDeclLess>, SymbolDeclLess> edges;

    static DefDependencyGraph build(const Definition& d);
    // SCC decomposition in topological order (callees first).
    std::vector<std::vector<SymbolPtr>> sccs() const;
};

// Splits a definition into per-SCC sub-definitions, topologically ordered.
std::vector<DefinitionPtr> splitSccs(const DefinitionPtr& d);

enum class DefClass { InputStar, OutputStar, Neither };

// input-*: all parameters two-valued in I and rule quantifications
// enumerable; output-*: the defined symbols occur neither elsewhere in the
// theory nor interpreted in I (totality is checked when it is evaluated).
DefClass classify(const DefinitionPtr& d, const Theory& context, const PartialStructure& I);

// Instantiates the rules of a (graph-translated) definition over the type
// tables of I; out-of-type head instances are dropped.
struct GroundedDefRules {
    std::vector<GroundDefRule> rules;
    std::map<SymbolPtr, TupleSet, SymbolDeclLess> heads;
};
GroundedDefRules groundDefRules(const Definition& d, const PartialStructure& I);

// The parametrised well-founded model of d with opens fixed by I.
WfmResult wfm(const DefinitionPtr& d, const PartialStructure& I);

// Folds a WFM into a structure; throws on inconsistency with existing
// knowledge (derived ct meeting existing cf and the like).
void foldWfm(const DefinitionPtr& d, const WfmResult& w, PartialStructure& I);

struct InputEvalResult {
    TheoryPtr residual;
    PartialStructurePtr structure;
    bool unsat = false;
    std::string witness;
};

// Repeatedly evaluates input-* definitions (in SCC order) and folds their
// models into the structure.
InputEvalResult evaluateInputDefs(const TheoryPtr& t, const PartialStructure& I);

// Rule-wise implications plus the closure sentence, per defined symbol.
std::vector<FormulaPtr> completion(const DefinitionPtr& d);

}  // namespace kbf
