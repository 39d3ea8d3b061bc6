#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kbf/ast.hpp"

namespace kbf {

struct SymbolDeclLess {
    bool operator()(const SymbolPtr& a, const SymbolPtr& b) const {
        return a->declIndex < b->declIndex;
    }
};

// Three-valued table of one predicate/function symbol. Functions are stored
// as their graph (arity n+1). `closed` means complete knowledge: any
// well-typed tuple not in ct is certainly false.
struct SymbolTable {
    TupleSet ct;
    TupleSet cf;
    bool closed = false;
};

// Read interface used by the evaluator; implemented by PartialStructure and
// by overlay views (well-founded model computation).
class StructureView {
public:
    virtual ~StructureView() = default;
    virtual const Vocabulary& vocabulary() const = 0;
    // Finite ordered table of a type, or nullptr when not enumerable.
    virtual const std::vector<DomainElem>* typeTable(const SymbolPtr& type) const = 0;
    // Three-valued type membership (subtype tables and builtins taken into account).
    virtual TruthValue typeTruth(const SymbolPtr& type, const DomainElem& e) const = 0;
    // Three-valued truth of a predicate tuple / function graph tuple.
    // Types used as unary predicates and derived _ct/_cf views are handled here.
    virtual TruthValue predTruth(const SymbolPtr& sym, const Tuple& t) const = 0;
    // Known images of a function for a given input tuple (certainly-true graph entries).
    virtual std::vector<DomainElem> funcImages(const SymbolPtr& f, const Tuple& input) const = 0;
    // Whether the function denotes on this input: True (has an image), False
    // (certainly undefined), Unknown.
    virtual TruthValue funcDefined(const SymbolPtr& f, const Tuple& input) const = 0;
};

struct Violation {
    enum class Kind { Inconsistent, MultiImage, MissingImage, Subtype, OutOfType };
    Kind kind;
    SymbolPtr symbol;
    Tuple witness;
    std::string message;
};

class PartialStructure;
using PartialStructurePtr = std::shared_ptr<PartialStructure>;

class PartialStructure : public StructureView {
public:
    std::string name;
    std::string fqn;

    PartialStructure() = default;
    explicit PartialStructure(VocabularyPtr voc) : voc_(std::move(voc)) {}

    const VocabularyPtr& voc() const { return voc_; }
    const Vocabulary& vocabulary() const override { return *voc_; }

    // --- building ---
    void setTypeTable(const SymbolPtr& type, std::vector<DomainElem> elems);
    enum class Mode { Total, Ct, Cf };
    void addKnowledge(const SymbolPtr& sym, Mode mode, const TupleSet& tuples);
    // Materializes constructed-type tables from their argument types.
    void finalize();

    // --- views ---
    const std::vector<DomainElem>* typeTable(const SymbolPtr& type) const override;
    TruthValue typeTruth(const SymbolPtr& type, const DomainElem& e) const override;
    TruthValue predTruth(const SymbolPtr& sym, const Tuple& t) const override;
    std::vector<DomainElem> funcImages(const SymbolPtr& f, const Tuple& input) const override;
    TruthValue funcDefined(const SymbolPtr& f, const Tuple& input) const override;

    bool hasTypeTable(const SymbolPtr& type) const;
    const SymbolTable* table(const SymbolPtr& sym) const;
    SymbolTable& tableMut(const SymbolPtr& sym);
    const std::map<SymbolPtr, std::vector<DomainElem>, SymbolDeclLess>& typeTables() const {
        return typeTables_;
    }
    const std::map<SymbolPtr, SymbolTable, SymbolDeclLess>& tables() const { return tables_; }

    // Cartesian product of the declared argument-type tables (graph space for
    // functions); nullopt when some type is not enumerable.
    std::optional<std::vector<Tuple>> tupleSpace(const SymbolPtr& sym) const;

    bool twoValuedOn(const SymbolPtr& sym) const;
    bool twoValued() const;  // all non-builtin, non-derived symbols

    // --- the five structure operations ---
    std::vector<DomainElem> enumerateType(const SymbolPtr& type) const;
    std::vector<Violation> checkIntegrity() const;
    PartialStructurePtr clone() const;

private:
    VocabularyPtr voc_;
    std::map<SymbolPtr, std::vector<DomainElem>, SymbolDeclLess> typeTables_;
    std::map<SymbolPtr, SymbolTable, SymbolDeclLess> tables_;
};

// true iff for every symbol ct(I) <= ct(J) and cf(I) <= cf(J)
bool precisionLeq(const PartialStructure& i, const PartialStructure& j);
// tablewise union of ct and cf; caller re-checks consistency
PartialStructurePtr merge(const PartialStructure& i, const PartialStructure& j);
// restriction of I to the symbols of vout
PartialStructurePtr project(const PartialStructure& i, const VocabularyPtr& vout);

// Deterministic comparison used to sort enumerated models for output.
int compareStructures(const PartialStructure& a, const PartialStructure& b);

}  // namespace kbf
