#pragma once

#include <string>

#include "kbf/ast.hpp"
#include "kbf/structure.hpp"
#include "kbf/typecheck.hpp"

namespace kbf {

// Emits the concrete syntax; printed components re-parse to structurally
// equal values (canonical print is a fixpoint of print . parse).
std::string printTerm(const TermPtr& t);
std::string printFormula(const FormulaPtr& f);
std::string printRule(const Rule& r);
std::string printVocabulary(const Vocabulary& voc);
std::string printTheory(const Theory& t);
std::string printStructure(const PartialStructure& s);

// Whole-specification printing with namespace blocks reconstructed from FQNs.
std::string printSpec(const Spec& spec);

}  // namespace kbf
