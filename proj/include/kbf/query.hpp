#pragma once

#include "kbf/ast.hpp"
#include "kbf/structure.hpp"

namespace kbf {

// Result of evaluating a term over a (possibly partial) structure.
struct EvalResult {
    enum class Kind { Defined, Undefined, Unknown };
    Kind kind = Kind::Unknown;
    DomainElem value;

    static EvalResult defined(DomainElem v) { return {Kind::Defined, std::move(v)}; }
    static EvalResult undefined() { return {Kind::Undefined, {}}; }
    static EvalResult unknown() { return {Kind::Unknown, {}}; }
    bool isDefined() const { return kind == Kind::Defined; }
};

// Partial-function applications outside their domain yield undefined;
// aggregates follow the multiset semantics (sum/prod of the empty set are
// 0/1, min/max undefined).
EvalResult evalTerm(const TermPtr& t, const StructureView& I, const Binding& b = {});

// Kleene evaluation; atoms with an undefined direct subterm are false.
TruthValue evalFormula(const FormulaPtr& f, const StructureView& I, const Binding& b = {});

// Strict query over two-valued (or derived) symbols; the result contains the
// satisfying tuples, sorted. Occurrences of non-two-valued plain symbols are
// an error naming the symbol.
TupleSet querySet(const SetExprPtr& set, const PartialStructure& I);

}  // namespace kbf
