#pragma once

#include <map>
#include <string>
#include <vector>

#include "kbf/ast.hpp"
#include "kbf/structure.hpp"
#include "kbf/wfs.hpp"

namespace kbf {

using Lit = int;  // signed atom id; atoms are 1-based

struct GroundAtom {
    enum class Origin { SymbolTuple, Tseitin, AggReif };
    int id = 0;
    Origin origin = Origin::Tseitin;
    SymbolPtr sym;  // SymbolTuple only; functions carry their graph tuple
    Tuple tuple;
};

struct GroundClause {
    std::vector<Lit> lits;
};

// Normalized rule: head <- AND/OR of body literals.
struct GroundRuleN {
    int head = 0;
    bool conj = true;
    std::vector<Lit> body;
};

// reif <=> fn(wlits) cmp bound
struct GroundAgg {
    Lit reif = 0;
    AggFn fn = AggFn::Sum;
    CmpOp cmp = CmpOp::Leq;
    long long bound = 0;
    std::vector<std::pair<long long, Lit>> wlits;
};

struct GroundDefinitionInfo {
    std::vector<GroundRuleN> rules;
    std::set<int> definedAtoms;
    // formula-level instantiated rules, kept for the exact model re-check
    std::vector<GroundDefRule> checkRules;
};

struct SymmetryClass {
    SymbolPtr type;
    std::vector<DomainElem> elems;  // ascending element order
};

struct AtomKey {
    SymbolPtr sym;
    Tuple tuple;
    bool operator<(const AtomKey& o) const {
        if (sym != o.sym) return sym->declIndex < o.sym->declIndex;
        return tuple < o.tuple;
    }
};

struct GroundTheory {
    std::vector<GroundAtom> atoms;  // index 0 unused
    std::vector<GroundClause> clauses;
    std::vector<GroundDefinitionInfo> defs;
    std::vector<GroundAgg> aggs;
    bool hasObjective = false;
    std::vector<std::pair<long long, Lit>> objective;
    long long objectiveBase = 0;
    bool unsat = false;
    bool lossyCompletionOnly = false;
    int trueAtom = 0;

    std::map<AtomKey, int> index;
    // tuples of defined symbols fixed false because no rule instance covers them
    std::vector<std::pair<SymbolPtr, Tuple>> closedFalse;
    // interchangeable element classes (for static breaking and orbit expansion)
    std::vector<SymmetryClass> classes;
    // element-swap generators translated to atom transpositions
    std::vector<std::vector<std::pair<int, int>>> generators;

    int numAtoms() const { return static_cast<int>(atoms.size()) - 1; }
};

struct GroundOptions {
    bool completionOnly = false;  // lossy: definitions reduced to completion clauses
};

// Top-down grounding of a kernel theory (optionally with an objective term)
// over a consistent structure.
GroundTheory ground(const TheoryPtr& T, const PartialStructure& I,
                    const TermPtr& objective = nullptr, const GroundOptions& opts = {});

// Interchangeable domain elements per type (same type, symmetric occurrences
// in all interpreted tables, no occurrence as a theory constant).
std::vector<SymmetryClass> detectSymmetries(const TheoryPtr& T, const PartialStructure& I,
                                            const TermPtr& objective = nullptr);

// Adds lex-leader clauses for the adjacent transpositions of every class.
void breakSymmetries(GroundTheory& G, const std::vector<SymmetryClass>& classes);

// DIMACS export; rules or aggregates must have been compiled away.
std::string toCnf(const GroundTheory& G);

// Native line-oriented ground format (ATOM/CLAUSE/DEF/RULE/AGG/MIN lines).
std::string toText(const GroundTheory& G);
GroundTheory fromText(const std::string& text);

// Lifts a total assignment over the original atoms back into a structure.
PartialStructurePtr reconstruct(const GroundTheory& G, const PartialStructure& I,
                                const std::vector<signed char>& model);

}  // namespace kbf
