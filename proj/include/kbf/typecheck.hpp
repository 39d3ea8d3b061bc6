#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "kbf/ast.hpp"
#include "kbf/raw.hpp"
#include "kbf/structure.hpp"

namespace kbf {

struct ResolvedTerm {
    std::string name, fqn;
    VocabularyPtr voc;
    TermPtr term;
};

struct ResolvedFormula {
    std::string name, fqn;
    VocabularyPtr voc;
    FormulaPtr formula;
};

// All components of a specification after name resolution, variable typing
// and desugaring to kernel form.
struct Spec {
    std::vector<VocabularyPtr> vocabularies;
    std::vector<TheoryPtr> theories;
    std::vector<PartialStructurePtr> structures;
    std::vector<std::shared_ptr<ResolvedTerm>> terms;
    std::vector<std::shared_ptr<ResolvedFormula>> formulas;

    VocabularyPtr findVocabulary(const std::string& name) const;
    TheoryPtr findTheory(const std::string& name) const;
    PartialStructurePtr findStructure(const std::string& name) const;
    std::shared_ptr<ResolvedTerm> findTerm(const std::string& name) const;
    std::shared_ptr<ResolvedFormula> findFormula(const std::string& name) const;
};

// Resolves a parsed (and include-flattened) namespace tree. Exactly one
// disambiguation must exist per sentence: zero raises a type error, several
// raise an ambiguity error listing the candidate FQNs.
Spec disambiguate(const RawNamespacePtr& root);

// Well-typedness checks on resolved components: acyclic hierarchy for
// vocabularies, the argument-position typing rule for theories.
std::vector<std::string> checkWelltyped(const VocabularyPtr& voc);
std::vector<std::string> checkWelltyped(const TheoryPtr& theory);

// Kernelization that is kept out of resolution: denotes(f(t)) of a
// user-declared function becomes ?x: f(t)=x, denotes of min/max aggregates
// becomes a non-emptiness count.
TheoryPtr desugarTheory(const TheoryPtr& t);
FormulaPtr lowerDenotes(const FormulaPtr& f);

// Resolves one expression against a vocabulary (used by the CLI for --set
// query strings). Free names in term positions become outer universal
// variables only if allowFree is set; otherwise they are errors.
FormulaPtr resolveFormulaText(const std::string& text, const VocabularyPtr& voc);
SetExprPtr resolveSetText(const std::string& text, const VocabularyPtr& voc);

}  // namespace kbf
