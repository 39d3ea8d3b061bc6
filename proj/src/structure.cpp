#include "kbf/structure.hpp"

#include <algorithm>

namespace kbf {

// ---------------------------------------------------------------------------
// Building
// ---------------------------------------------------------------------------

void PartialStructure::setTypeTable(const SymbolPtr& type, std::vector<DomainElem> elems) {
    std::sort(elems.begin(), elems.end());
    elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
    typeTables_[type] = std::move(elems);
}

void PartialStructure::addKnowledge(const SymbolPtr& sym, Mode mode, const TupleSet& tuples) {
    SymbolTable& t = tables_[sym];
    switch (mode) {
        case Mode::Total:
            for (auto& tup : tuples) t.ct.insert(tup);
            t.closed = true;
            break;
        case Mode::Ct:
            for (auto& tup : tuples) t.ct.insert(tup);
            break;
        case Mode::Cf:
            for (auto& tup : tuples) t.cf.insert(tup);
            break;
    }
}

void PartialStructure::finalize() {
    // Materialize constructed types; constructors may take constructed
    // arguments, so iterate until stable (hierarchies are acyclic).
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto& type : voc_->types()) {
            if (!type->type->constructed || typeTables_.count(type)) continue;
            bool ready = true;
            for (auto& c : type->type->constructors)
                for (auto& at : c->argTypes)
                    if (!typeTable(at)) ready = false;
            if (!ready) continue;
            std::vector<DomainElem> elems;
            for (auto& c : type->type->constructors) {
                std::vector<Tuple> inputs{{}};
                for (auto& at : c->argTypes) {
                    const auto* tab = typeTable(at);
                    std::vector<Tuple> next;
                    for (auto& pre : inputs)
                        for (auto& e : *tab) {
                            Tuple ext = pre;
                            ext.push_back(e);
                            next.push_back(std::move(ext));
                        }
                    inputs = std::move(next);
                }
                for (auto& in : inputs) elems.push_back(DomainElem::mkCons(c, in));
            }
            setTypeTable(type, std::move(elems));
            changed = true;
        }
    }
}

// ---------------------------------------------------------------------------
// Views
// ---------------------------------------------------------------------------

bool PartialStructure::hasTypeTable(const SymbolPtr& type) const {
    return typeTables_.count(type) != 0;
}

const std::vector<DomainElem>* PartialStructure::typeTable(const SymbolPtr& type) const {
    auto it = typeTables_.find(type);
    return it == typeTables_.end() ? nullptr : &it->second;
}

TruthValue PartialStructure::typeTruth(const SymbolPtr& type, const DomainElem& e) const {
    if (type->type->builtin != BuiltinType::None && !typeTables_.count(type)) {
        switch (type->type->builtin) {
            case BuiltinType::Int: return tvFromBool(e.isInt());
            case BuiltinType::Nat: return tvFromBool(e.isInt() && e.num >= 0);
            case BuiltinType::String: return tvFromBool(e.kind == DomainElem::Kind::Ident);
            case BuiltinType::Char:
                return tvFromBool(e.kind == DomainElem::Kind::Ident && e.ident.size() == 1);
            default: break;
        }
    }
    if (const auto* tab = typeTable(type))
        return tvFromBool(std::binary_search(tab->begin(), tab->end(), e));
    // No table: certainly a member when some interpreted subtype contains it.
    for (auto& sub : type->type->subtypes)
        if (typeTruth(sub, e) == TruthValue::True) return TruthValue::True;
    return TruthValue::Unknown;
}

const SymbolTable* PartialStructure::table(const SymbolPtr& sym) const {
    auto it = tables_.find(sym);
    return it == tables_.end() ? nullptr : &it->second;
}

SymbolTable& PartialStructure::tableMut(const SymbolPtr& sym) { return tables_[sym]; }

TruthValue PartialStructure::predTruth(const SymbolPtr& sym, const Tuple& t) const {
    if (sym->isType()) return typeTruth(sym, t.at(0));
    if (sym == Builtins::get().trueSym) return TruthValue::True;
    if (sym == Builtins::get().falseSym) return TruthValue::False;
    if (sym->derivedBase) {
        const SymbolTable* base = nullptr;
        for (auto& [s, tab] : tables_)
            if (s.get() == sym->derivedBase) base = &tab;
        if (!base) return TruthValue::False;
        if (sym->derivedCt) return tvFromBool(base->ct.count(t) != 0);
        return tvFromBool(base->cf.count(t) != 0 || (base->closed && base->ct.count(t) == 0));
    }
    const SymbolTable* tab = table(sym);
    if (!tab) return TruthValue::Unknown;
    if (tab->ct.count(t)) return TruthValue::True;
    if (tab->cf.count(t) || tab->closed) return TruthValue::False;
    return TruthValue::Unknown;
}

std::vector<DomainElem> PartialStructure::funcImages(const SymbolPtr& f, const Tuple& input) const {
    std::vector<DomainElem> out;
    const SymbolTable* tab = table(f);
    if (!tab) return out;
    size_t n = f->arity();
    for (auto& tup : tab->ct)
        if (tup.size() == n + 1 && std::equal(input.begin(), input.end(), tup.begin()))
            out.push_back(tup[n]);
    return out;
}

TruthValue PartialStructure::funcDefined(const SymbolPtr& f, const Tuple& input) const {
    if (!funcImages(f, input).empty()) return TruthValue::True;
    const SymbolTable* tab = table(f);
    if (tab && tab->closed) return TruthValue::False;
    const auto* out = typeTable(f->outType);
    if (tab && out) {
        bool allCf = !out->empty();
        for (auto& v : *out) {
            Tuple g = input;
            g.push_back(v);
            if (!tab->cf.count(g)) { allCf = false; break; }
        }
        if (allCf) return TruthValue::False;
    }
    return TruthValue::Unknown;
}

std::optional<std::vector<Tuple>> PartialStructure::tupleSpace(const SymbolPtr& sym) const {
    std::vector<SymbolPtr> types = sym->argTypes;
    if (sym->isFunction()) types.push_back(sym->outType);
    std::vector<Tuple> space{{}};
    for (auto& ty : types) {
        const auto* tab = typeTable(ty);
        if (!tab) return std::nullopt;
        std::vector<Tuple> next;
        next.reserve(space.size() * tab->size());
        for (auto& pre : space)
            for (auto& e : *tab) {
                Tuple ext = pre;
                ext.push_back(e);
                next.push_back(std::move(ext));
            }
        space = std::move(next);
    }
    return space;
}

std::optional<std::vector<Tuple>> inputSpace(const PartialStructure& s, const SymbolPtr& sym) {
    std::vector<Tuple> space{{}};
    for (auto& ty : sym->argTypes) {
        const auto* tab = s.typeTable(ty);
        if (!tab) return std::nullopt;
        std::vector<Tuple> next;
        for (auto& pre : space)
            for (auto& e : *tab) {
                Tuple ext = pre;
                ext.push_back(e);
                next.push_back(std::move(ext));
            }
        space = std::move(next);
    }
    return space;
}

bool PartialStructure::twoValuedOn(const SymbolPtr& sym) const {
    if (sym->isType()) return hasTypeTable(sym) || sym->type->builtin != BuiltinType::None;
    if (sym->builtin || sym->derivedBase || sym->constructorOf) return true;
    const SymbolTable* tab = table(sym);
    if (sym->isFunction()) {
        auto inputs = inputSpace(*this, sym);
        if (!inputs) return false;
        size_t n = sym->arity();
        for (auto& in : *inputs) {
            int images = 0;
            if (tab)
                for (auto& tup : tab->ct)
                    if (std::equal(in.begin(), in.end(), tup.begin(), tup.begin() + n)) ++images;
            if (images > 1) return false;
            if (images == 1) continue;
            if (!sym->partial) return false;
            if (tab && tab->closed) continue;
            // partial function without image: absence must be certain
            const auto* out = typeTable(sym->outType);
            if (!out) return false;
            bool allCf = true;
            for (auto& v : *out) {
                Tuple g = in;
                g.push_back(v);
                if (!tab || !tab->cf.count(g)) { allCf = false; break; }
            }
            if (!allCf) return false;
        }
        return true;
    }
    if (tab && tab->closed) return true;
    auto space = tupleSpace(sym);
    if (!space) return false;
    for (auto& tup : *space)
        if (predTruth(sym, tup) == TruthValue::Unknown) return false;
    return true;
}

bool PartialStructure::twoValued() const {
    for (auto& s : voc_->symbols) {
        if (s->builtin || s->derivedBase || s->constructorOf) continue;
        if (!twoValuedOn(s)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// enumerate_type
// ---------------------------------------------------------------------------

std::vector<DomainElem> PartialStructure::enumerateType(const SymbolPtr& type) const {
    const auto* tab = typeTable(type);
    if (!tab)
        throw Error(Error::Kind::Domain, "type '" + type->name + "' has no finite interpretation");
    return *tab;
}

// ---------------------------------------------------------------------------
// check_integrity
// ---------------------------------------------------------------------------

std::vector<Violation> PartialStructure::checkIntegrity() const {
    std::vector<Violation> out;
    for (auto& [sym, tab] : tables_) {
        for (auto& t : tab.ct)
            if (tab.cf.count(t))
                out.push_back({Violation::Kind::Inconsistent, sym, t,
                               sym->name + tupleStr(t) + " is both certainly true and false"});
    }
    // function multi-image: exists y y': y ~= y' & F_ct(x,y) & F_ct(x,y')
    for (auto& [sym, tab] : tables_) {
        if (!sym->isFunction()) continue;
        size_t n = sym->arity();
        for (auto it = tab.ct.begin(); it != tab.ct.end(); ++it) {
            auto jt = std::next(it);
            if (jt == tab.ct.end()) break;
            if (std::equal(it->begin(), it->begin() + n, jt->begin())) {
                Tuple witness(it->begin(), it->begin() + n);
                witness.push_back((*it)[n]);
                witness.push_back((*jt)[n]);
                out.push_back({Violation::Kind::MultiImage, sym, witness,
                               "function " + sym->name + " has two images " + tupleStr(witness)});
            }
        }
    }
    // total functions without an image
    for (auto& sym : voc_->symbols) {
        if (!sym->isFunction() || sym->partial || sym->builtin || sym->derivedBase ||
            sym->constructorOf)
            continue;
        const SymbolTable* tab = table(sym);
        auto inputs = inputSpace(*this, sym);
        if (!inputs) continue;
        size_t n = sym->arity();
        for (auto& in : *inputs) {
            bool hasImage = false;
            if (tab)
                for (auto& tup : tab->ct)
                    if (std::equal(in.begin(), in.end(), tup.begin(), tup.begin() + n))
                        hasImage = true;
            if (hasImage) continue;
            bool allFalse = false;
            if (tab && tab->closed) allFalse = true;
            else if (tab) {
                const auto* outTab = typeTable(sym->outType);
                if (outTab && !outTab->empty()) {
                    allFalse = true;
                    for (auto& v : *outTab) {
                        Tuple g = in;
                        g.push_back(v);
                        if (!tab->cf.count(g)) { allFalse = false; break; }
                    }
                }
            }
            if (allFalse)
                out.push_back({Violation::Kind::MissingImage, sym, in,
                               "total function " + sym->name + " has no image for " +
                                   tupleStr(in)});
        }
    }
    // subtype containment: element certainly in T but certainly not in supertype
    for (auto& type : voc_->types()) {
        const auto* tab = typeTable(type);
        if (!tab) continue;
        for (auto& super : type->type->supertypes) {
            for (auto& e : *tab)
                if (typeTruth(super, e) == TruthValue::False)
                    out.push_back({Violation::Kind::Subtype, type, {e},
                                   e.str() + " is in " + type->name + " but not in supertype " +
                                       super->name});
        }
    }
    // elements outside declared argument/output types
    for (auto& [sym, tab] : tables_) {
        if (sym->isType()) continue;
        std::vector<SymbolPtr> postypes = sym->argTypes;
        if (sym->isFunction()) postypes.push_back(sym->outType);
        for (const TupleSet* ts : {&tab.ct, &tab.cf}) {
            for (auto& tup : *ts) {
                if (tup.size() != postypes.size()) continue;
                for (size_t i = 0; i < tup.size(); ++i)
                    if (typeTruth(postypes[i], tup[i]) == TruthValue::False)
                        out.push_back({Violation::Kind::OutOfType, sym, tup,
                                       "element " + tup[i].str() + " of " + sym->name +
                                           tupleStr(tup) + " lies outside type " +
                                           postypes[i]->name});
            }
        }
    }
    return out;
}

PartialStructurePtr PartialStructure::clone() const {
    auto c = std::make_shared<PartialStructure>(voc_);
    c->name = name;
    c->fqn = fqn;
    c->typeTables_ = typeTables_;
    c->tables_ = tables_;
    return c;
}

// ---------------------------------------------------------------------------
// precision, merge, project
// ---------------------------------------------------------------------------

bool precisionLeq(const PartialStructure& i, const PartialStructure& j) {
    if (i.voc() != j.voc())
        throw Error(Error::Kind::Input, "precision comparison across different vocabularies");
    for (auto& [type, tab] : i.typeTables()) {
        const auto* other = j.typeTable(type);
        if (!other || *other != tab)
            throw Error(Error::Kind::Input, "precision comparison across different domains");
    }
    for (auto& [sym, tab] : i.tables()) {
        for (auto& t : tab.ct)
            if (j.predTruth(sym, t) != TruthValue::True) return false;
        for (auto& t : tab.cf)
            if (j.predTruth(sym, t) != TruthValue::False) return false;
        if (tab.closed) {
            const SymbolTable* jt = j.table(sym);
            bool jClosedSubset = jt && jt->closed;
            if (jClosedSubset)
                for (auto& t : jt->ct)
                    if (!tab.ct.count(t)) { jClosedSubset = false; break; }
            if (!jClosedSubset) {
                auto space = i.tupleSpace(sym);
                if (!space) return false;
                for (auto& t : *space)
                    if (!tab.ct.count(t) && j.predTruth(sym, t) != TruthValue::False) return false;
            }
        }
    }
    return true;
}

PartialStructurePtr merge(const PartialStructure& i, const PartialStructure& j) {
    if (i.voc() != j.voc())
        throw Error(Error::Kind::Input, "merging structures over different vocabularies");
    auto out = i.clone();
    for (auto& [type, tab] : j.typeTables()) {
        if (!out->hasTypeTable(type)) out->setTypeTable(type, tab);
        else if (*out->typeTable(type) != tab)
            throw Error(Error::Kind::Input,
                        "merging structures with different domains for '" + type->name + "'");
    }
    for (auto& [sym, jt] : j.tables()) {
        SymbolTable& t = out->tableMut(sym);
        // tuples implicitly false on one side and true on the other become
        // explicit, so the integrity check can flag the clash
        if (t.closed)
            for (auto& tup : jt.ct)
                if (!t.ct.count(tup)) t.cf.insert(tup);
        if (jt.closed)
            for (auto& tup : t.ct)
                if (!jt.ct.count(tup)) t.cf.insert(tup);
        for (auto& tup : jt.ct) t.ct.insert(tup);
        for (auto& tup : jt.cf) t.cf.insert(tup);
        t.closed = t.closed || jt.closed;
    }
    out->finalize();
    return out;
}

PartialStructurePtr project(const PartialStructure& i, const VocabularyPtr& vout) {
    auto out = std::make_shared<PartialStructure>(vout);
    out->name = i.name;
    for (auto& sym : vout->symbols) {
        if (sym->builtin || sym->derivedBase) continue;
        if (!i.voc()->contains(sym))
            throw Error(Error::Kind::Input,
                        "projection target symbol '" + sym->name + "' missing from structure");
        if (sym->isType()) {
            if (const auto* tab = i.typeTable(sym)) out->setTypeTable(sym, *tab);
        } else if (const SymbolTable* tab = i.table(sym)) {
            out->tableMut(sym) = *tab;
        }
    }
    out->finalize();
    return out;
}

int compareStructures(const PartialStructure& a, const PartialStructure& b) {
    auto ita = a.tables().begin();
    auto itb = b.tables().begin();
    while (ita != a.tables().end() && itb != b.tables().end()) {
        if (ita->first != itb->first)
            return ita->first->declIndex < itb->first->declIndex ? -1 : 1;
        if (ita->second.ct != itb->second.ct) return ita->second.ct < itb->second.ct ? -1 : 1;
        if (ita->second.cf != itb->second.cf) return ita->second.cf < itb->second.cf ? -1 : 1;
        ++ita;
        ++itb;
    }
    if (ita != a.tables().end()) return 1;
    if (itb != b.tables().end()) return -1;
    return 0;
}

}  // namespace kbf
