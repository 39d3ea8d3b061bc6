#include "kbf/typecheck.hpp"

#include <algorithm>
#include <functional>

namespace kbf {

namespace {

std::vector<std::string> splitFqn(const std::string& fqn) {
    std::vector<std::string> parts;
    size_t start = 0;
    while (true) {
        size_t p = fqn.find("::", start);
        if (p == std::string::npos) {
            parts.push_back(fqn.substr(start));
            break;
        }
        parts.push_back(fqn.substr(start, p - start));
        start = p + 2;
    }
    return parts;
}

std::string stripSig(const std::string& s) {
    size_t p = s.find('[');
    return p == std::string::npos ? s : s.substr(0, p);
}

// name equals the fqn or is a ::-boundary suffix of it (signatures ignored)
bool nameSuffixMatches(const QualName& q, const std::string& fqn) {
    std::vector<std::string> fparts = splitFqn(fqn);
    if (q.parts.empty() || q.parts.size() > fparts.size()) return false;
    for (size_t i = 0; i < q.parts.size(); ++i) {
        const std::string& qp = q.parts[q.parts.size() - 1 - i];
        const std::string& fp = fparts[fparts.size() - 1 - i];
        if (qp != fp && qp != stripSig(fp)) return false;
    }
    return true;
}

SymbolPtr termType(const TermPtr& t) {
    const auto& bi = Builtins::get();
    switch (t->kind) {
        case Term::Kind::Var: return t->varType;
        case Term::Kind::Elem:
            if (t->elem.isInt()) return bi.intType;
            if (t->elem.kind == DomainElem::Kind::Ident) return bi.stringType;
            return t->elem.cons->constructorOf;
        case Term::Kind::FuncApp: return t->symbol->outType;
        case Term::Kind::Agg:
            if (t->agg == AggFn::Min || t->agg == AggFn::Max) {
                if (!t->set->tuple.empty()) return termType(t->set->tuple[0]);
                return nullptr;
            }
            return bi.intType;
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// Vocabulary resolution with include-shared symbol identity
// ---------------------------------------------------------------------------

struct SymbolRegistry {
    std::map<std::string, SymbolPtr> byKey;
    SymbolPtr find(const std::string& key) const {
        auto it = byKey.find(key);
        return it == byKey.end() ? nullptr : it->second;
    }
    void put(const std::string& key, const SymbolPtr& s) { byKey[key] = s; }
};

struct VocabResolver {
    SymbolRegistry& registry;
    const RawVocab& raw;
    VocabularyPtr voc = std::make_shared<Vocabulary>();

    VocabResolver(SymbolRegistry& reg, const RawVocab& rv, const std::string& fqn)
        : registry(reg), raw(rv) {
        voc->name = rv.name;
        voc->fqn = fqn;
    }

    SymbolPtr resolveTypeRef(const QualName& q, SourceLoc loc) const {
        std::vector<SymbolPtr> hits;
        for (auto& s : voc->symbols)
            if (s->isType() && nameSuffixMatches(q, s->fqn) &&
                std::find(hits.begin(), hits.end(), s) == hits.end())
                hits.push_back(s);
        if (hits.empty())
            for (auto& b : Builtins::get().all())
                if (b->isType() && q.parts.size() == 1 && q.last() == b->name) hits.push_back(b);
        if (hits.empty()) throw Error(Error::Kind::Name, "unknown type '" + q.str() + "'", loc);
        if (hits.size() > 1)
            throw Error(Error::Kind::Name, "ambiguous type reference '" + q.str() + "'", loc);
        return hits[0];
    }

    const RawPredDecl* isaTarget(const QualName& isa) const {
        for (auto& pe : raw.entries)
            if (pe.kind == RawVocabEntry::Kind::Pred && pe.pred.name == isa.last())
                return &pe.pred;
        return nullptr;
    }

    VocabularyPtr run() {
        // 1. type symbols, including `P isa type` promotions
        for (auto& e : raw.entries) {
            if (e.kind == RawVocabEntry::Kind::Type) {
                std::string key = e.type.origin + "::type::" + e.type.name;
                SymbolPtr t = registry.find(key);
                if (!t) {
                    t = makeTypeSymbol(e.type.name);
                    t->fqn = e.type.origin + "::" + e.type.name;
                    registry.put(key, t);
                }
                voc->add(t);
            } else if (e.kind == RawVocabEntry::Kind::IsaType) {
                const RawPredDecl* pd = isaTarget(e.isa);
                if (!pd || pd->argTypes.size() != 1)
                    throw Error(Error::Kind::Type,
                                "'" + e.isa.str() +
                                    " isa type' requires a unary predicate declaration",
                                e.isa.loc);
                std::string key = pd->origin + "::type::" + pd->name;
                SymbolPtr t = registry.find(key);
                if (!t) {
                    t = makeTypeSymbol(pd->name);
                    t->fqn = pd->origin + "::" + pd->name;
                    registry.put(key, t);
                }
                voc->add(t);
            }
        }
        // 2. hierarchy edges; sub/supertype declarations must form an acyclic
        // dependency graph (declaring the same edge from both sides included)
        std::map<SymbolPtr, std::vector<SymbolPtr>> deps;
        for (auto& e : raw.entries) {
            if (e.kind == RawVocabEntry::Kind::Type) {
                SymbolPtr t = registry.find(e.type.origin + "::type::" + e.type.name);
                for (auto& up : e.type.subtypeOf) {
                    SymbolPtr super = resolveTypeRef(up, e.type.loc);
                    linkSub(t, super);
                    deps[t].push_back(super);
                }
                for (auto& down : e.type.supertypeOf) {
                    SymbolPtr sub = resolveTypeRef(down, e.type.loc);
                    linkSub(sub, t);
                    deps[t].push_back(sub);
                }
            } else if (e.kind == RawVocabEntry::Kind::IsaType) {
                const RawPredDecl* pd = isaTarget(e.isa);
                SymbolPtr t = registry.find(pd->origin + "::type::" + pd->name);
                SymbolPtr super = resolveTypeRef(pd->argTypes[0], pd->loc);
                linkSub(t, super);
                deps[t].push_back(super);
            }
        }
        {
            std::map<SymbolPtr, int> state;
            std::vector<SymbolPtr> stack;
            std::function<void(const SymbolPtr&)> dfs = [&](const SymbolPtr& t) {
                state[t] = 1;
                stack.push_back(t);
                for (auto& d : deps[t]) {
                    if (state[d] == 1) {
                        std::string cyc;
                        bool in = false;
                        for (auto& s : stack) {
                            if (s == d) in = true;
                            if (in) cyc += s->name + " -> ";
                        }
                        throw Error(Error::Kind::Type,
                                    "cyclic type declarations: " + cyc + d->name, raw.loc);
                    }
                    if (state[d] == 0) dfs(d);
                }
                stack.pop_back();
                state[t] = 2;
            };
            for (auto& [t, _] : deps)
                if (state[t] == 0) dfs(t);
        }
        auto violations = checkWelltyped(voc);
        if (!violations.empty()) throw Error(Error::Kind::Type, violations[0], raw.loc);
        // 3. constructed types (non-recursive only)
        for (auto& e : raw.entries) {
            if (e.kind != RawVocabEntry::Kind::Type || !e.type.constructed) continue;
            SymbolPtr t = registry.find(e.type.origin + "::type::" + e.type.name);
            if (!t->type->supertypes.empty() || !t->type->subtypes.empty())
                throw Error(Error::Kind::Type,
                            "constructed type '" + t->name + "' cannot be in a hierarchy",
                            e.type.loc);
            t->type->constructed = true;
            if (t->type->constructors.empty()) {
                for (auto& c : e.type.ctors) {
                    std::vector<SymbolPtr> args;
                    for (auto& at : c.argTypes) args.push_back(resolveTypeRef(at, c.loc));
                    auto cs = makeFuncSymbol(c.name, args, t, false);
                    cs->constructorOf = t;
                    cs->fqn = e.type.origin + "::" + c.name;
                    t->type->constructors.push_back(cs);
                }
            }
            std::function<bool(const SymbolPtr&)> reachesSelf = [&](const SymbolPtr& from) {
                if (from == t) return true;
                if (!from->isType() || !from->type->constructed) return false;
                for (auto& c : from->type->constructors)
                    for (auto& at : c->argTypes)
                        if (reachesSelf(at)) return true;
                return false;
            };
            for (auto& c : t->type->constructors)
                for (auto& at : c->argTypes)
                    if (reachesSelf(at))
                        throw Error(Error::Kind::Unsupported,
                                    "recursive constructed type '" + t->name + "'", e.type.loc);
        }
        // 4. predicates and functions
        for (auto& e : raw.entries) {
            if (e.kind == RawVocabEntry::Kind::Pred) {
                bool promoted = false;
                for (auto& pe : raw.entries)
                    if (pe.kind == RawVocabEntry::Kind::IsaType && pe.isa.last() == e.pred.name)
                        promoted = true;
                if (promoted) continue;
                std::vector<SymbolPtr> args;
                std::string sig = "[";
                for (size_t i = 0; i < e.pred.argTypes.size(); ++i) {
                    auto ty = resolveTypeRef(e.pred.argTypes[i], e.pred.loc);
                    args.push_back(ty);
                    sig += (i ? "," : "") + ty->name;
                }
                sig += "]";
                std::string key = e.pred.origin + "::" + e.pred.name + sig;
                SymbolPtr p = registry.find(key);
                if (!p) {
                    p = makePredSymbol(e.pred.name, std::move(args));
                    p->fqn = e.pred.origin + "::" + e.pred.name + sig;
                    registry.put(key, p);
                }
                voc->add(p);
            } else if (e.kind == RawVocabEntry::Kind::Func) {
                std::vector<SymbolPtr> args;
                std::string sig = "[";
                for (size_t i = 0; i < e.func.argTypes.size(); ++i) {
                    auto ty = resolveTypeRef(e.func.argTypes[i], e.func.loc);
                    args.push_back(ty);
                    sig += (i ? "," : "") + ty->name;
                }
                auto out = resolveTypeRef(e.func.outType, e.func.loc);
                sig += "->" + out->name + "]";
                std::string key = e.func.origin + "::" + e.func.name + sig;
                SymbolPtr f = registry.find(key);
                if (!f) {
                    f = makeFuncSymbol(e.func.name, std::move(args), out, e.func.partial);
                    f->fqn = e.func.origin + "::" + e.func.name + sig;
                    registry.put(key, f);
                }
                voc->add(f);
            }
        }
        voc->finalize();
        return voc;
    }

    static void linkSub(const SymbolPtr& sub, const SymbolPtr& super) {
        auto& ups = sub->type->supertypes;
        if (std::find(ups.begin(), ups.end(), super) == ups.end()) ups.push_back(super);
        auto& downs = super->type->subtypes;
        if (std::find(downs.begin(), downs.end(), sub) == downs.end()) downs.push_back(sub);
    }
};

// ---------------------------------------------------------------------------
// Expression resolution (the disambiguation engine)
// ---------------------------------------------------------------------------

struct BuildFail {
    std::string why;
};
struct AmbiguousVarTypes {
    std::string msg;
};

struct VarSlot {
    std::string name;
    SymbolPtr declaredType;          // from `in T`
    std::vector<SymbolPtr> demands;  // declared types of the positions it occurs in
    SymbolPtr resolved;
    bool implicit = false;
};
using VarSlotPtr = std::shared_ptr<VarSlot>;

struct Occurrence {
    std::string display;
    SourceLoc loc;
    std::vector<SymbolPtr> candidates;
};

enum class TargetKind { Sentence, TermExpr, RuleTarget, SetTarget };

struct Resolved {
    FormulaPtr formula;
    TermPtr term;
    Rule rule;
    SetExprPtr set;
};

class ExprResolver {
public:
    ExprResolver(const Vocabulary& v, TargetKind kind, bool allowImplicit,
                 bool lenientLiterals = false)
        : voc_(v), kind_(kind), allowImplicit_(allowImplicit), lenient_(lenientLiterals) {}

    // Runs collection plus the candidate search; requires exactly one solution.
    Resolved resolve(const RawExpr* expr, const RawRule* rule, SourceLoc loc) {
        expr_ = expr;
        rule_ = rule;
        loc_ = loc;
        collecting_ = true;
        typing_ = true;
        runPass(nullptr);
        collecting_ = false;
        choice_.assign(occs_.size(), 0);
        std::vector<Resolved> solutions;
        std::vector<std::vector<size_t>> solutionChoices;
        std::string ambVarMsg;
        long long tried = 0;
        std::function<void(size_t)> dfs = [&](size_t i) {
            if (solutions.size() >= 2) return;
            if (i == occs_.size()) {
                if (++tried > 100000)
                    throw Error(Error::Kind::Internal, "disambiguation search too large", loc_);
                try {
                    Resolved r = buildOnce();
                    solutions.push_back(std::move(r));
                    solutionChoices.push_back(choice_);
                } catch (const BuildFail& f) {
                    lastFailure_ = f.why;
                } catch (const AmbiguousVarTypes& a) {
                    ambVarMsg = a.msg;
                }
                return;
            }
            size_t n = std::max<size_t>(1, occs_[i].candidates.size());
            for (size_t c = 0; c < n; ++c) {
                choice_[i] = c;
                dfs(i + 1);
                if (solutions.size() >= 2) return;
            }
        };
        dfs(0);
        if (solutions.empty()) {
            if (!ambVarMsg.empty()) throw Error(Error::Kind::Name, ambVarMsg, loc_);
            for (auto& o : occs_)
                if (o.candidates.empty() && !o.mayBeVariable)
                    throw Error(Error::Kind::Name, "cannot resolve name '" + o.display + "'",
                                o.loc.valid() ? o.loc : loc_);
            std::string msg = "no disambiguation exists";
            if (!lastFailure_.empty()) msg += ": " + lastFailure_;
            throw Error(Error::Kind::Type, msg, loc_);
        }
        if (solutions.size() > 1) {
            const auto &a = solutionChoices[0], &b = solutionChoices[1];
            for (size_t i = 0; i < occs_.size(); ++i) {
                if (a[i] != b[i]) {
                    std::string cands;
                    for (auto& c : occs_[i].candidates)
                        cands += (cands.empty() ? "" : ", ") + c->fqn;
                    throw Error(Error::Kind::Name,
                                "ambiguous occurrence '" + occs_[i].display + "'; candidates: " +
                                    cands + " (add a type signature or qualify the name)",
                                occs_[i].loc.valid() ? occs_[i].loc : loc_);
                }
            }
            throw Error(Error::Kind::Name, "specification is ambiguous", loc_);
        }
        return solutions[0];
    }

private:
    struct Occ : Occurrence {
        bool mayBeVariable = false;
    };

    const Vocabulary& voc_;
    TargetKind kind_;
    bool allowImplicit_;
    bool lenient_ = false;
    const RawExpr* expr_ = nullptr;
    const RawRule* rule_ = nullptr;
    SourceLoc loc_;

    std::vector<Occ> occs_;
    std::vector<size_t> choice_;
    size_t cursor_ = 0;
    bool collecting_ = true;
    bool typing_ = true;
    std::string lastFailure_;

    std::vector<std::map<std::string, VarSlotPtr>> scopes_;
    std::vector<VarSlotPtr> implicitVars_;   // of the current pass
    std::vector<VarSlotPtr> typedImplicits_; // snapshot taken after the typing pass
    std::vector<VarSlotPtr> binderSlots_;    // binder variables in traversal order
    size_t slotCursor_ = 0;

    // ---- pass driver ----

    Resolved buildOnce() {
        typing_ = true;
        Resolved tmp;
        runPass(&tmp);
        for (auto& slot : binderSlots_) resolveVarType(slot);
        for (auto& slot : implicitVars_) resolveVarType(slot);
        typedImplicits_ = implicitVars_;
        typing_ = false;
        Resolved out;
        runPass(&out);
        return out;
    }

    void runPass(Resolved* out) {
        cursor_ = 0;
        slotCursor_ = 0;
        scopes_.clear();
        scopes_.emplace_back();
        implicitVars_.clear();
        if (!collecting_ && typing_) binderSlots_.clear();
        switch (kind_) {
            case TargetKind::Sentence: {
                FormulaPtr f = buildFormula(expr_);
                if (out && !typing_) {
                    std::vector<TypedVar> outer;
                    for (auto& v : implicitVars_) outer.push_back({v->name, v->resolved});
                    out->formula = outer.empty() ? f : Formula::mkForall(outer, f);
                }
                break;
            }
            case TargetKind::TermExpr: {
                TTerm t = buildTerm(expr_);
                if (out && !typing_) out->term = t.term;
                break;
            }
            case TargetKind::SetTarget: {
                SetExprPtr s = buildSet(expr_);
                if (out && !typing_) out->set = s;
                break;
            }
            case TargetKind::RuleTarget: {
                buildRule(out);
                break;
            }
        }
    }

    // ---- scope ----

    VarSlotPtr lookupVar(const std::string& name) {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto f = it->find(name);
            if (f != it->end()) return f->second;
        }
        return nullptr;
    }

    VarSlotPtr implicitVar(const std::string& name) {
        for (auto& v : implicitVars_)
            if (v->name == name) return v;
        if (!collecting_ && !typing_) {
            // the emit pass reuses the typed slots
            for (auto& s : typedImplicits_)
                if (s->name == name) {
                    implicitVars_.push_back(s);
                    return s;
                }
            throw Error(Error::Kind::Internal, "implicit variable lost between passes: " + name);
        }
        auto slot = std::make_shared<VarSlot>();
        slot->name = name;
        slot->implicit = true;
        implicitVars_.push_back(slot);
        return slot;
    }

    VarSlotPtr makeSlot(const std::string& name) {
        if (!collecting_ && !typing_) {
            // the emit pass reuses the typing pass slots (same traversal order)
            if (slotCursor_ >= binderSlots_.size() || binderSlots_[slotCursor_]->name != name)
                throw Error(Error::Kind::Internal, "binder slot mismatch between passes");
            auto slot = binderSlots_[slotCursor_++];
            scopes_.back()[name] = slot;
            return slot;
        }
        auto slot = std::make_shared<VarSlot>();
        slot->name = name;
        scopes_.back()[name] = slot;
        if (!collecting_ && typing_) binderSlots_.push_back(slot);
        return slot;
    }

    void resolveVarType(const VarSlotPtr& slot) {
        if (slot->declaredType) {
            slot->resolved = slot->declaredType;
            return;
        }
        std::vector<SymbolPtr> ds = slot->demands;
        std::sort(ds.begin(), ds.end());
        ds.erase(std::unique(ds.begin(), ds.end()), ds.end());
        if (ds.empty()) {
            std::vector<SymbolPtr> nonBuiltin;
            for (auto& t : voc_.types())
                if (!t->builtin) nonBuiltin.push_back(t);
            if (nonBuiltin.size() == 1) {
                slot->resolved = nonBuiltin[0];
                return;
            }
            throw BuildFail{"cannot infer a type for variable '" + slot->name + "'"};
        }
        auto lubs = minimalCommonSupertypes(ds);
        if (lubs.empty())
            throw BuildFail{"variable '" + slot->name + "' occurs at incompatible types"};
        if (lubs.size() > 1) {
            std::string cands;
            for (auto& t : lubs) cands += (cands.empty() ? "" : ", ") + t->name;
            throw AmbiguousVarTypes{"ambiguous type for variable '" + slot->name +
                                    "'; minimal supertypes: " + cands};
        }
        slot->resolved = lubs[0];
    }

    // ---- occurrences ----

    bool sigMatches(const QualName& q, const SymbolPtr& s) const {
        if (q.arityAnn && (size_t)*q.arityAnn != s->arity()) return false;
        if (!q.hasSig) return true;
        std::vector<SymbolPtr> args;
        for (auto& a : q.sigArgs) {
            auto t = findUniqueType(a);
            if (!t) return false;
            args.push_back(t);
        }
        SymbolPtr out;
        if (!q.sigOut.empty()) {
            out = findUniqueType(q.sigOut[0]);
            if (!out) return false;
        }
        if (!out && args.size() == 1 && s->isFunction() && s->arity() == 0 &&
            s->outType == args[0])
            return true;  // min[T] style annotation for constants of type T
        if (args.size() != s->arity()) return false;
        for (size_t i = 0; i < args.size(); ++i)
            if (args[i] != s->argTypes[i]) return false;
        if (out && (!s->isFunction() || s->outType != out)) return false;
        return true;
    }

    SymbolPtr findUniqueType(const QualName& q) const {
        SymbolPtr hit;
        for (auto& s : voc_.symbols) {
            if (!s->isType() || !nameSuffixMatches(q, s->fqn)) continue;
            if (hit && hit != s) return nullptr;
            hit = s;
        }
        return hit;
    }

    size_t record(Occ o) {
        occs_.push_back(std::move(o));
        return occs_.size() - 1;
    }

    SymbolPtr chosen(size_t idx) const {
        if (occs_[idx].candidates.empty()) return nullptr;
        return occs_[idx].candidates[choice_[idx]];
    }

    // ---- typed term results ----

    struct TTerm {
        TermPtr term;  // only in the emit pass
        SymbolPtr type;
        VarSlotPtr var;
        bool intLit = false;
        bool strLit = false;
    };

    void demand(const VarSlotPtr& slot, const SymbolPtr& t) {
        if (collecting_) return;
        if (slot->declaredType) {
            if (!typesCompatible(slot->declaredType, t))
                throw BuildFail{"variable '" + slot->name + "' of type " +
                                slot->declaredType->name + " used at type " + t->name};
            return;
        }
        if (typing_) slot->demands.push_back(t);
    }

    // Integer literals need an int-compatible position; identifier literals
    // act as untyped constants and fit any non-numeric position (membership
    // is checked against the structure at evaluation time). Interactive
    // queries resolve integer literals leniently too.
    bool literalFits(const TTerm& arg, const SymbolPtr& positionType) const {
        const auto& bi = Builtins::get();
        if (arg.intLit) {
            if (typesCompatible(bi.intType, positionType)) return true;
            return lenient_;
        }
        return !typesCompatible(positionType, bi.intType) || positionType == bi.stringType ||
               positionType == bi.charType;
    }

    void checkPosition(const TTerm& arg, const SymbolPtr& positionType, const std::string& what) {
        if (collecting_) return;
        if (arg.var) {
            demand(arg.var, positionType);
            return;
        }
        if (arg.intLit || arg.strLit) {
            if (!literalFits(arg, positionType))
                throw BuildFail{"literal in a position typed " + positionType->name + " (" + what +
                                ")"};
            return;
        }
        SymbolPtr at = arg.type;
        if (!at) return;
        if (!typesCompatible(at, positionType))
            throw BuildFail{"term of type " + at->name + " in a position typed " +
                            positionType->name + " (" + what + ")"};
    }

    bool argsPlausible(const SymbolPtr&, const std::vector<TTerm>& args,
                       const std::vector<SymbolPtr>& argTypes) const {
        if (args.size() != argTypes.size()) return false;
        for (size_t i = 0; i < args.size(); ++i) {
            if (args[i].var) continue;
            if (args[i].intLit || args[i].strLit) {
                if (!literalFits(args[i], argTypes[i])) return false;
                continue;
            }
            SymbolPtr at = args[i].type;
            if (at && !typesCompatible(at, argTypes[i])) return false;
        }
        return true;
    }

    // ---- term building ----

    TTerm buildTerm(const RawExpr* e) {
        const auto& bi = Builtins::get();
        switch (e->kind) {
            case RawExpr::Kind::Int: {
                TTerm t;
                t.intLit = true;
                t.type = bi.intType;
                if (!typing_) t.term = Term::mkElem(DomainElem::mkInt(e->intVal));
                return t;
            }
            case RawExpr::Kind::Float:
                throw Error(Error::Kind::Type, "real-valued literals are not supported", e->loc);
            case RawExpr::Kind::Str: {
                TTerm t;
                t.strLit = true;
                t.type = bi.stringType;
                if (!typing_) t.term = Term::mkElem(DomainElem::mkIdent(e->strVal));
                return t;
            }
            case RawExpr::Kind::Name: return buildNameTerm(e);
            case RawExpr::Kind::Call: return buildCallTerm(e);
            case RawExpr::Kind::Binary: {
                SymbolPtr f = e->op == "+"   ? bi.add
                              : e->op == "-" ? bi.sub
                              : e->op == "*" ? bi.mul
                              : e->op == "/" ? bi.divi
                              : e->op == "%" ? bi.mod
                                             : nullptr;
                if (!f) throw Error(Error::Kind::Parse, "connective in term position", e->loc);
                TTerm l = buildTerm(e->args[0].get());
                TTerm r = buildTerm(e->args[1].get());
                checkPosition(l, bi.intType, "arithmetic");
                checkPosition(r, bi.intType, "arithmetic");
                TTerm t;
                t.type = bi.intType;
                if (!collecting_ && !typing_) t.term = Term::mkFunc(f, {l.term, r.term});
                return t;
            }
            case RawExpr::Kind::Agg: return buildAggTerm(e);
            default: throw Error(Error::Kind::Parse, "expected a term", e->loc);
        }
    }

    TTerm buildNameTerm(const RawExpr* e) {
        if (e->name.simple()) {
            if (auto slot = lookupVar(e->name.last())) {
                TTerm t;
                t.var = slot;
                t.type = slot->declaredType ? slot->declaredType : slot->resolved;
                if (!typing_ && !collecting_) t.term = Term::mkVar(slot->name, t.type);
                return t;
            }
        }
        size_t idx;
        if (collecting_) {
            Occ o;
            o.display = e->name.str();
            o.loc = e->loc;
            for (auto& s : voc_.symbols) {
                if (!s->isFunction() || s->arity() != 0) continue;
                if (s->builtin && !s->outType) continue;
                if (!nameSuffixMatches(e->name, s->fqn) &&
                    !(e->name.parts.size() == 1 && e->name.last() == s->name))
                    continue;
                if (!sigMatches(e->name, s)) continue;
                o.candidates.push_back(s);
            }
            // constructor constants
            for (auto& ty : voc_.types())
                for (auto& c : ty->type->constructors)
                    if (c->arity() == 0 && nameSuffixMatches(e->name, c->fqn) &&
                        std::find(o.candidates.begin(), o.candidates.end(), c) ==
                            o.candidates.end())
                        o.candidates.push_back(c);
            o.mayBeVariable = o.candidates.empty() && allowImplicit_ && e->name.simple();
            idx = record(std::move(o));
        } else {
            idx = cursor_++;
        }
        if (occs_[idx].candidates.empty()) {
            if (allowImplicit_ && e->name.simple()) {
                auto slot = implicitVar(e->name.last());
                TTerm t;
                t.var = slot;
                t.type = slot->resolved;
                if (!typing_ && !collecting_) t.term = Term::mkVar(slot->name, slot->resolved);
                return t;
            }
            if (!collecting_) throw BuildFail{"unknown name '" + e->name.str() + "'"};
            return {};
        }
        if (collecting_) return {};
        SymbolPtr f = chosen(idx);
        TTerm t;
        t.type = f->outType;
        if (!typing_) t.term = Term::mkFunc(f, {});
        return t;
    }

    TTerm buildCallTerm(const RawExpr* e) {
        size_t idx;
        if (collecting_) {
            Occ o;
            o.display = e->name.str();
            o.loc = e->loc;
            for (auto& s : voc_.symbols) {
                if (!s->isFunction() || s->arity() != e->args.size()) continue;
                if (s->builtin && !s->constructorOf) {
                    // per-type pred/succ are reachable by name
                    if (s->name != "pred" && s->name != "succ") continue;
                }
                if (!nameSuffixMatches(e->name, s->fqn) &&
                    !(e->name.parts.size() == 1 && e->name.last() == s->name))
                    continue;
                if (!sigMatches(e->name, s)) continue;
                o.candidates.push_back(s);
            }
            for (auto& ty : voc_.types())
                for (auto& c : ty->type->constructors)
                    if (c->arity() == e->args.size() &&
                        (nameSuffixMatches(e->name, c->fqn) ||
                         (e->name.parts.size() == 1 && e->name.last() == c->name)) &&
                        std::find(o.candidates.begin(), o.candidates.end(), c) ==
                            o.candidates.end())
                        o.candidates.push_back(c);
            idx = record(std::move(o));
        } else {
            idx = cursor_++;
        }
        std::vector<TTerm> args;
        for (auto& a : e->args) args.push_back(buildTerm(a.get()));
        if (collecting_) {
            auto& cands = occs_[idx].candidates;
            cands.erase(std::remove_if(cands.begin(), cands.end(),
                                       [&](const SymbolPtr& s) {
                                           return !argsPlausible(s, args, s->argTypes);
                                       }),
                        cands.end());
            return {};
        }
        if (occs_[idx].candidates.empty())
            throw BuildFail{"unknown function '" + e->name.str() + "/" +
                            std::to_string(e->args.size()) + "'"};
        SymbolPtr f = chosen(idx);
        for (size_t i = 0; i < args.size(); ++i) checkPosition(args[i], f->argTypes[i], f->name);
        TTerm t;
        t.type = f->outType;
        if (!typing_) {
            std::vector<TermPtr> kargs;
            for (auto& a : args) kargs.push_back(a.term);
            t.term = Term::mkFunc(f, std::move(kargs));
        }
        return t;
    }

    TTerm buildAggTerm(const RawExpr* e) {
        const auto& bi = Builtins::get();
        AggFn fn = e->aggFn == "#"      ? AggFn::Card
                   : e->aggFn == "sum"  ? AggFn::Sum
                   : e->aggFn == "prod" ? AggFn::Prod
                   : e->aggFn == "min"  ? AggFn::Min
                                        : AggFn::Max;
        if (e->aggIsPred) {
            size_t idx;
            if (collecting_) {
                Occ o;
                o.display = e->aggPred.str();
                o.loc = e->loc;
                for (auto& s : voc_.symbols) {
                    if (s->isFunction() || s->derivedBase) {
                        if (!s->derivedBase) continue;
                    }
                    if (!nameSuffixMatches(e->aggPred, s->fqn)) continue;
                    if (!sigMatches(e->aggPred, s)) continue;
                    size_t width = s->isType() ? 1 : s->arity();
                    if (fn != AggFn::Card && width != 1) continue;
                    o.candidates.push_back(s);
                }
                idx = record(std::move(o));
            } else {
                idx = cursor_++;
            }
            if (collecting_) return {};
            if (occs_[idx].candidates.empty())
                throw BuildFail{"unknown set '" + e->aggPred.str() + "' in aggregate"};
            SymbolPtr p = chosen(idx);
            size_t n = p->isType() ? 1 : p->arity();
            TTerm out;
            out.type = (fn == AggFn::Min || fn == AggFn::Max)
                           ? (p->isType() ? p : p->argTypes[0])
                           : bi.intType;
            if (!typing_) {
                std::vector<TypedVar> vars;
                std::vector<TermPtr> argTerms;
                for (size_t i = 0; i < n; ++i) {
                    SymbolPtr ty = p->isType() ? p : p->argTypes[i];
                    std::string vn = "x'" + std::to_string(i);
                    vars.push_back({vn, ty});
                    argTerms.push_back(Term::mkVar(vn, ty));
                }
                FormulaPtr cond = Formula::mkAtom(p, argTerms);
                std::vector<TermPtr> tuple;
                if (fn != AggFn::Card) tuple.push_back(argTerms[0]);
                out.term = Term::mkAgg(fn, SetExpr::mk(std::move(vars), cond, std::move(tuple)));
            }
            return out;
        }
        SetBuild sb = buildSetInner(e->aggSet.get());
        if (collecting_) return {};
        TTerm out;
        out.type = bi.intType;
        if (fn != AggFn::Card) {
            if (sb.tupleTerms.size() > 1)
                throw BuildFail{"sum/prod/min/max need single-valued multisets"};
            if (sb.tupleTerms.empty() && sb.slots.size() != 1)
                throw BuildFail{"sum/prod/min/max over a multi-variable set need a term tuple"};
            if (fn == AggFn::Sum || fn == AggFn::Prod) {
                if (!sb.tupleTerms.empty())
                    checkPosition(sb.tupleTerms[0], bi.intType, "aggregate value");
                else demand(sb.slots[0], bi.intType);
            }
            if (fn == AggFn::Min || fn == AggFn::Max) {
                if (!sb.tupleTerms.empty()) out.type = sb.tupleTerms[0].type;
                else out.type = sb.slots[0]->declaredType ? sb.slots[0]->declaredType
                                                          : sb.slots[0]->resolved;
            }
        }
        if (!typing_) {
            std::vector<TermPtr> tuple;
            for (auto& t : sb.tupleTerms) tuple.push_back(t.term);
            if (fn != AggFn::Card && tuple.empty())
                tuple.push_back(Term::mkVar(sb.slots[0]->name, sb.slots[0]->resolved));
            out.term = Term::mkAgg(fn, SetExpr::mk(sb.vars, sb.cond, std::move(tuple)));
        }
        return out;
    }

    // ---- binders and sets ----

    struct SetBuild {
        std::vector<VarSlotPtr> slots;
        std::vector<TypedVar> vars;      // emit pass only
        FormulaPtr cond;                 // guards folded in; emit pass only
        std::vector<TTerm> tupleTerms;
    };

    // introduces binder variables; returns slots and membership guards
    std::vector<VarSlotPtr> enterBinders(const std::vector<RawBinderGroup>& groups,
                                         std::vector<FormulaPtr>& guards) {
        std::vector<VarSlotPtr> slots;
        for (auto& g : groups) {
            std::vector<std::vector<VarSlotPtr>> rows;
            for (auto& tup : g.tuples) {
                std::vector<VarSlotPtr> row;
                for (auto& name : tup) {
                    auto slot = makeSlot(name);
                    slots.push_back(slot);
                    row.push_back(slot);
                }
                rows.push_back(std::move(row));
            }
            if (g.kind == RawBinderGroup::Kind::Sat) {
                FormulaPtr guard = buildFormula(g.guard.get());
                if (!collecting_ && !typing_) guards.push_back(guard);
                continue;
            }
            if (g.setComp)
                throw Error(Error::Kind::Unsupported,
                            "quantification over inline set expressions is not supported", g.loc);
            if (!g.setName) continue;  // untyped variables, inferred later
            size_t width = g.tuples.empty() ? 1 : g.tuples[0].size();
            size_t idx;
            if (collecting_) {
                Occ o;
                o.display = g.setName->str();
                o.loc = g.setName->loc;
                for (auto& s : voc_.symbols) {
                    if (!nameSuffixMatches(*g.setName, s->fqn)) continue;
                    if (!sigMatches(*g.setName, s)) continue;
                    if (s->isType()) {
                        if (width == 1) o.candidates.push_back(s);
                    } else if (!s->isFunction() && !s->constructorOf && s->arity() == width) {
                        o.candidates.push_back(s);
                    }
                }
                idx = record(std::move(o));
            } else {
                idx = cursor_++;
            }
            if (collecting_) continue;
            if (occs_[idx].candidates.empty())
                throw BuildFail{"unknown type or set '" + g.setName->str() + "'"};
            SymbolPtr s = chosen(idx);
            if (s->isType()) {
                for (auto& row : rows)
                    for (auto& slot : row) slot->declaredType = s;
            } else {
                for (auto& row : rows) {
                    if (row.size() != s->arity())
                        throw BuildFail{"tuple width mismatch for set '" + s->name + "'"};
                    for (size_t i = 0; i < row.size(); ++i) demand(row[i], s->argTypes[i]);
                    if (!typing_) {
                        std::vector<TermPtr> args;
                        for (auto& slot : row)
                            args.push_back(Term::mkVar(slot->name, slot->resolved));
                        guards.push_back(Formula::mkAtom(s, args));
                    }
                }
            }
        }
        return slots;
    }

    SetBuild buildSetInner(const RawExpr* e) {
        scopes_.emplace_back();
        SetBuild sb;
        std::vector<FormulaPtr> guards;
        sb.slots = enterBinders(e->binders, guards);
        FormulaPtr cond = e->body ? buildFormula(e->body.get()) : nullptr;
        for (auto& t : e->tuple) sb.tupleTerms.push_back(buildTerm(t.get()));
        if (!collecting_ && !typing_) {
            for (auto& s : sb.slots) sb.vars.push_back({s->name, s->resolved});
            std::vector<FormulaPtr> all = guards;
            if (cond) all.push_back(cond);
            sb.cond = all.empty() ? Formula::mkBool(true) : Formula::mkAnd(all);
        }
        scopes_.pop_back();
        return sb;
    }

    SetExprPtr buildSet(const RawExpr* e) {
        if (e->kind != RawExpr::Kind::SetComp)
            throw Error(Error::Kind::Parse, "expected a set expression", e->loc);
        SetBuild sb = buildSetInner(e);
        if (collecting_ || typing_) return nullptr;
        std::vector<TermPtr> tuple;
        for (auto& t : sb.tupleTerms) tuple.push_back(t.term);
        return SetExpr::mk(sb.vars, sb.cond, std::move(tuple));
    }

    // ---- formula building ----

    FormulaPtr buildFormula(const RawExpr* e) {
        switch (e->kind) {
            case RawExpr::Kind::Bool:
                return typing_ || collecting_ ? nullptr : Formula::mkBool(e->boolVal);
            case RawExpr::Kind::Name: {
                if (e->name.simple() && lookupVar(e->name.last()))
                    throw Error(Error::Kind::Type,
                                "variable '" + e->name.last() + "' used as a formula", e->loc);
                size_t idx;
                if (collecting_) {
                    Occ o;
                    o.display = e->name.str();
                    o.loc = e->loc;
                    for (auto& s : voc_.symbols) {
                        if (s->isFunction() || s->isType() || s->arity() != 0) continue;
                        if (s == Builtins::get().trueSym || s == Builtins::get().falseSym)
                            continue;
                        if (!nameSuffixMatches(e->name, s->fqn)) continue;
                        if (!sigMatches(e->name, s)) continue;
                        o.candidates.push_back(s);
                    }
                    idx = record(std::move(o));
                } else {
                    idx = cursor_++;
                }
                if (collecting_) return nullptr;
                if (occs_[idx].candidates.empty())
                    throw BuildFail{"unknown proposition '" + e->name.str() + "'"};
                return typing_ ? nullptr : Formula::mkAtom(chosen(idx), {});
            }
            case RawExpr::Kind::Call: {
                size_t idx;
                if (collecting_) {
                    Occ o;
                    o.display = e->name.str();
                    o.loc = e->loc;
                    for (auto& s : voc_.symbols) {
                        if (s->isFunction() || s->constructorOf) continue;
                        if (!nameSuffixMatches(e->name, s->fqn)) continue;
                        if (!sigMatches(e->name, s)) continue;
                        if (s->isType()) {
                            if (e->args.size() == 1) o.candidates.push_back(s);
                        } else if (s->arity() == e->args.size()) {
                            o.candidates.push_back(s);
                        }
                    }
                    idx = record(std::move(o));
                } else {
                    idx = cursor_++;
                }
                std::vector<TTerm> args;
                for (auto& a : e->args) args.push_back(buildTerm(a.get()));
                if (collecting_) {
                    auto& cands = occs_[idx].candidates;
                    cands.erase(std::remove_if(cands.begin(), cands.end(),
                                               [&](const SymbolPtr& s) {
                                                   std::vector<SymbolPtr> at =
                                                       s->isType() ? std::vector<SymbolPtr>{s}
                                                                   : s->argTypes;
                                                   return !argsPlausible(s, args, at);
                                               }),
                                cands.end());
                    return nullptr;
                }
                if (occs_[idx].candidates.empty())
                    throw BuildFail{"unknown predicate '" + e->name.str() + "/" +
                                    std::to_string(e->args.size()) + "'"};
                SymbolPtr p = chosen(idx);
                std::vector<SymbolPtr> argTypes =
                    p->isType() ? std::vector<SymbolPtr>{p} : p->argTypes;
                for (size_t i = 0; i < args.size(); ++i)
                    checkPosition(args[i], argTypes[i], p->name);
                if (typing_) return nullptr;
                std::vector<TermPtr> kargs;
                for (auto& a : args) kargs.push_back(a.term);
                return Formula::mkAtom(p, std::move(kargs));
            }
            case RawExpr::Kind::Unary: {
                if (e->op != "~")
                    throw Error(Error::Kind::Parse, "unexpected unary operator", e->loc);
                FormulaPtr f = buildFormula(e->args[0].get());
                return typing_ || collecting_ ? nullptr : Formula::mkNot(f);
            }
            case RawExpr::Kind::Binary: {
                if (e->op == "&" || e->op == "|" || e->op == "=>" || e->op == "<=" ||
                    e->op == "<=>") {
                    FormulaPtr l = buildFormula(e->args[0].get());
                    FormulaPtr r = buildFormula(e->args[1].get());
                    if (typing_ || collecting_) return nullptr;
                    if (e->op == "&") return Formula::mkAnd({l, r});
                    if (e->op == "|") return Formula::mkOr({l, r});
                    if (e->op == "=>") return Formula::mkImplies(l, r);
                    if (e->op == "<=") return Formula::mkImplies(r, l);
                    return Formula::mkAnd(
                        {Formula::mkImplies(l, r), Formula::mkImplies(r, l)});
                }
                throw Error(Error::Kind::Type, "arithmetic expression used as a formula", e->loc);
            }
            case RawExpr::Kind::Chain: {
                std::vector<TTerm> terms;
                for (auto& t : e->chainTerms) terms.push_back(buildTerm(t.get()));
                if (collecting_) return nullptr;
                for (size_t i = 0; i < e->chainOps.size(); ++i) {
                    TTerm &l = terms[i], &r = terms[i + 1];
                    // comparisons type variables by the other (non-literal) side
                    if (l.var && !l.var->declaredType && r.type && !r.intLit && !r.strLit)
                        demand(l.var, r.type);
                    if (r.var && !r.var->declaredType && l.type && !l.intLit && !l.strLit)
                        demand(r.var, l.type);
                }
                if (typing_) return nullptr;
                std::vector<FormulaPtr> cmps;
                for (size_t i = 0; i < e->chainOps.size(); ++i)
                    cmps.push_back(Formula::mkCmp(parseCmpOp(e->chainOps[i]), terms[i].term,
                                                  terms[i + 1].term));
                return Formula::mkAnd(std::move(cmps));
            }
            case RawExpr::Kind::Quant: {
                scopes_.emplace_back();
                std::vector<FormulaPtr> guards;
                auto slots = enterBinders(e->binders, guards);
                FormulaPtr body = buildFormula(e->body.get());
                FormulaPtr out;
                if (!typing_ && !collecting_) {
                    std::vector<TypedVar> vars;
                    for (auto& s : slots) vars.push_back({s->name, s->resolved});
                    if (e->forall) {
                        FormulaPtr inner =
                            guards.empty() ? body
                                           : Formula::mkImplies(Formula::mkAnd(guards), body);
                        out = Formula::mkForall(std::move(vars), inner);
                    } else {
                        std::vector<FormulaPtr> all = guards;
                        all.push_back(body);
                        out = Formula::mkExists(std::move(vars), Formula::mkAnd(all));
                    }
                }
                scopes_.pop_back();
                return out;
            }
            case RawExpr::Kind::ExtQuant: {
                scopes_.emplace_back();
                std::vector<FormulaPtr> guards;
                auto slots = enterBinders(e->binders, guards);
                FormulaPtr body = buildFormula(e->body.get());
                FormulaPtr out;
                if (!typing_ && !collecting_) {
                    std::vector<TypedVar> vars;
                    for (auto& s : slots) vars.push_back({s->name, s->resolved});
                    std::vector<FormulaPtr> all = guards;
                    all.push_back(body);
                    out = Formula::mkExtExists(parseCmpOp(e->extOp), e->extBound, std::move(vars),
                                               Formula::mkAnd(all));
                }
                scopes_.pop_back();
                return out;
            }
            case RawExpr::Kind::Denotes: {
                TTerm t = buildTerm(e->args[0].get());
                if (typing_ || collecting_) return nullptr;
                return Formula::mkDenotes(t.term);
            }
            default:
                throw Error(Error::Kind::Type, "term used as a formula", e->loc);
        }
    }

    // ---- rules ----

    void buildRule(Resolved* out) {
        const RawRule& r = *rule_;
        scopes_.emplace_back();
        std::vector<FormulaPtr> guards;
        std::vector<VarSlotPtr> slots = enterBinders(r.binders, guards);
        // detect the head shape
        const RawExpr* headPred = nullptr;
        const RawExpr* headValue = nullptr;
        if (r.head->kind == RawExpr::Kind::Chain && r.head->chainOps.size() == 1 &&
            r.head->chainOps[0] == "=" &&
            (r.head->chainTerms[0]->kind == RawExpr::Kind::Call ||
             r.head->chainTerms[0]->kind == RawExpr::Kind::Name)) {
            headPred = r.head->chainTerms[0].get();
            headValue = r.head->chainTerms[1].get();
        } else if (r.head->kind == RawExpr::Kind::Call || r.head->kind == RawExpr::Kind::Name) {
            headPred = r.head.get();
        } else {
            throw Error(Error::Kind::Parse, "malformed rule head", r.loc);
        }
        bool isFuncRule = headValue != nullptr;
        size_t headArity =
            headPred->kind == RawExpr::Kind::Call ? headPred->args.size() : 0;
        size_t idx;
        if (collecting_) {
            Occ o;
            o.display = headPred->name.str();
            o.loc = headPred->loc;
            for (auto& s : voc_.symbols) {
                if (s->builtin || s->derivedBase || s->constructorOf || s->isType()) continue;
                if (isFuncRule != s->isFunction()) continue;
                if (s->arity() != headArity) continue;
                if (!nameSuffixMatches(headPred->name, s->fqn)) continue;
                if (!sigMatches(headPred->name, s)) continue;
                o.candidates.push_back(s);
            }
            idx = record(std::move(o));
        } else {
            idx = cursor_++;
        }
        std::vector<TTerm> headArgs;
        if (headPred->kind == RawExpr::Kind::Call)
            for (auto& a : headPred->args) headArgs.push_back(buildTerm(a.get()));
        TTerm value;
        if (headValue) value = buildTerm(headValue);
        FormulaPtr body = r.body ? buildFormula(r.body.get()) : nullptr;
        if (!collecting_) {
            if (occs_[idx].candidates.empty())
                throw BuildFail{"unknown defined symbol '" + headPred->name.str() + "'"};
            SymbolPtr h = chosen(idx);
            for (size_t i = 0; i < headArgs.size(); ++i)
                checkPosition(headArgs[i], h->argTypes[i], h->name);
            if (headValue) checkPosition(value, h->outType, h->name);
            if (!typing_ && out) {
                Rule kr;
                kr.head = h;
                for (auto& s : slots) kr.vars.push_back({s->name, s->resolved});
                for (auto& v : implicitVars_) kr.vars.push_back({v->name, v->resolved});
                for (auto& a : headArgs) kr.headArgs.push_back(a.term);
                if (headValue) kr.headValue = value.term;
                std::vector<FormulaPtr> bodyParts = guards;
                if (body) bodyParts.push_back(body);
                kr.body = bodyParts.empty() ? Formula::mkBool(true) : Formula::mkAnd(bodyParts);
                out->rule = std::move(kr);
            }
        }
        scopes_.pop_back();
    }

    static CmpOp parseCmpOp(const std::string& s) {
        if (s == "=") return CmpOp::Eq;
        if (s == "~=") return CmpOp::Neq;
        if (s == "<") return CmpOp::Lt;
        if (s == ">") return CmpOp::Gt;
        if (s == "=<") return CmpOp::Leq;
        return CmpOp::Geq;
    }
};

}  // namespace

// ---------------------------------------------------------------------------
// Well-typedness checks on resolved components
// ---------------------------------------------------------------------------

std::vector<std::string> checkWelltyped(const VocabularyPtr& voc) {
    std::vector<std::string> out;
    std::map<SymbolPtr, int> state;
    std::vector<SymbolPtr> stack;
    std::function<bool(const SymbolPtr&)> dfs = [&](const SymbolPtr& t) -> bool {
        state[t] = 1;
        stack.push_back(t);
        for (auto& up : t->type->supertypes) {
            if (state[up] == 1) {
                std::string cyc;
                bool in = false;
                for (auto& s : stack) {
                    if (s == up) in = true;
                    if (in) cyc += s->name + " -> ";
                }
                out.push_back("cyclic type hierarchy: " + cyc + up->name);
                return false;
            }
            if (state[up] == 0 && !dfs(up)) return false;
        }
        stack.pop_back();
        state[t] = 2;
        return true;
    };
    for (auto& t : voc->types())
        if (state[t] == 0 && !dfs(t)) break;
    return out;
}

namespace {

// shared literal rule: identifier elements fit any non-numeric position
bool positionAccepts(const TermPtr& arg, const SymbolPtr& positionType) {
    const auto& bi = Builtins::get();
    if (arg->kind == Term::Kind::Elem) {
        if (arg->elem.isInt()) return typesCompatible(bi.intType, positionType);
        if (arg->elem.kind == DomainElem::Kind::Ident)
            return !typesCompatible(positionType, bi.intType) || positionType == bi.stringType ||
                   positionType == bi.charType;
    }
    SymbolPtr at = termType(arg);
    if (!at) return true;
    return typesCompatible(at, positionType);
}

}  // namespace

std::vector<std::string> checkWelltyped(const TheoryPtr& theory) {
    std::vector<std::string> out;
    std::function<void(const FormulaPtr&)> walkF;
    std::function<void(const TermPtr&)> walkT = [&](const TermPtr& t) {
        if (t->kind == Term::Kind::FuncApp) {
            for (size_t i = 0; i < t->args.size(); ++i) {
                walkT(t->args[i]);
                if (i < t->symbol->argTypes.size() &&
                    !positionAccepts(t->args[i], t->symbol->argTypes[i]))
                    out.push_back("term of type " + termType(t->args[i])->name +
                                  " in position typed " + t->symbol->argTypes[i]->name + " of " +
                                  t->symbol->name);
            }
        } else if (t->kind == Term::Kind::Agg) {
            if (t->set->cond) walkF(t->set->cond);
            for (auto& x : t->set->tuple) walkT(x);
        }
    };
    walkF = [&](const FormulaPtr& f) {
        switch (f->kind) {
            case Formula::Kind::Atom: {
                std::vector<SymbolPtr> argTypes =
                    f->pred->isType() ? std::vector<SymbolPtr>{f->pred} : f->pred->argTypes;
                for (size_t i = 0; i < f->args.size(); ++i) {
                    walkT(f->args[i]);
                    if (i < argTypes.size() && !positionAccepts(f->args[i], argTypes[i]))
                        out.push_back("term of type " + termType(f->args[i])->name +
                                      " in position typed " + argTypes[i]->name + " of " +
                                      f->pred->name);
                }
                break;
            }
            case Formula::Kind::Cmp:
                walkT(f->left);
                walkT(f->right);
                break;
            case Formula::Kind::Not:
            case Formula::Kind::And:
            case Formula::Kind::Or:
                for (auto& g : f->subs) walkF(g);
                break;
            case Formula::Kind::Forall:
            case Formula::Kind::Exists:
            case Formula::Kind::ExtExists: walkF(f->body); break;
            case Formula::Kind::Denotes: walkT(f->term); break;
            default: break;
        }
    };
    for (auto& s : theory->sentences) walkF(s);
    for (auto& d : theory->definitions)
        for (auto& r : d->rules) {
            for (auto& a : r.headArgs) walkT(a);
            if (r.headValue) walkT(r.headValue);
            if (r.body) walkF(r.body);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Structures
// ---------------------------------------------------------------------------

namespace {

DomainElem resolveElem(const RawElem& e, const Vocabulary& voc) {
    switch (e.kind) {
        case RawElem::Kind::Int: return DomainElem::mkInt(e.intVal);
        case RawElem::Kind::Str: return DomainElem::mkIdent(e.name);
        case RawElem::Kind::Ident: {
            // constructor constants shadow plain identifiers
            for (auto& ty : voc.types())
                for (auto& c : ty->type->constructors)
                    if (c->arity() == 0 && c->name == e.name) return DomainElem::mkCons(c, {});
            return DomainElem::mkIdent(e.name);
        }
        case RawElem::Kind::Cons: {
            for (auto& ty : voc.types())
                for (auto& c : ty->type->constructors)
                    if (c->arity() == e.args.size() && c->name == e.name) {
                        std::vector<DomainElem> args;
                        for (auto& a : e.args) args.push_back(resolveElem(a, voc));
                        return DomainElem::mkCons(c, std::move(args));
                    }
            throw Error(Error::Kind::Name, "unknown constructor '" + e.name + "'", e.loc);
        }
    }
    throw Error(Error::Kind::Internal, "bad element");
}

std::vector<DomainElem> expandRange(const RawElem& lo, const RawElem& hi, SourceLoc loc) {
    std::vector<DomainElem> out;
    if (lo.kind == RawElem::Kind::Int && hi.kind == RawElem::Kind::Int) {
        if (lo.intVal > hi.intVal)
            throw Error(Error::Kind::Input, "range lower bound exceeds upper bound", loc);
        for (long long v = lo.intVal; v <= hi.intVal; ++v) out.push_back(DomainElem::mkInt(v));
        return out;
    }
    if (lo.kind == RawElem::Kind::Ident && hi.kind == RawElem::Kind::Ident &&
        lo.name.size() == 1 && hi.name.size() == 1 && lo.name[0] <= hi.name[0]) {
        for (char c = lo.name[0]; c <= hi.name[0]; ++c)
            out.push_back(DomainElem::mkIdent(std::string(1, c)));
        return out;
    }
    throw Error(Error::Kind::Input, "ranges need integer or character bounds", loc);
}

PartialStructurePtr resolveStructure(const RawStructure& raw, const VocabularyPtr& voc,
                                     const std::string& fqn) {
    auto I = std::make_shared<PartialStructure>(voc);
    I->name = raw.name;
    I->fqn = fqn;
    for (auto& e : raw.entries) {
        // candidate symbols by name and table width
        size_t width;
        switch (e.rhs) {
            case RawStructEntry::Rhs::Enum:
                width = e.tuples.empty() ? SIZE_MAX : e.tuples[0].size();
                break;
            case RawStructEntry::Rhs::Range:
            case RawStructEntry::Rhs::Scalar: width = 1; break;
            case RawStructEntry::Rhs::Bool: width = 0; break;
            default: continue;
        }
        std::vector<SymbolPtr> cands;
        for (auto& s : voc->symbols) {
            if (s->derivedBase || s->constructorOf) continue;
            if (s->builtin && !s->isType()) continue;
            if (!nameSuffixMatches(e.symbol, s->fqn)) continue;
            size_t w = s->tableWidth();
            if (width != SIZE_MAX && w != width) continue;
            if (s->isType() && e.mode != RawStructEntry::Mode::Total) continue;
            cands.push_back(s);
        }
        if (cands.empty())
            throw Error(Error::Kind::Name,
                        "no symbol matches '" + e.symbol.str() + "' in structure " + raw.name,
                        e.loc);
        if (cands.size() > 1) {
            std::string list;
            for (auto& c : cands) list += (list.empty() ? "" : ", ") + c->fqn;
            throw Error(Error::Kind::Name,
                        "ambiguous symbol '" + e.symbol.str() + "'; candidates: " + list, e.loc);
        }
        SymbolPtr sym = cands[0];
        // build the tuple set
        TupleSet tuples;
        switch (e.rhs) {
            case RawStructEntry::Rhs::Enum:
                for (auto& tup : e.tuples) {
                    Tuple t;
                    for (auto& el : tup) t.push_back(resolveElem(el, *voc));
                    if (t.size() != sym->tableWidth())
                        throw Error(Error::Kind::Input,
                                    "tuple width mismatch for '" + sym->name + "'", e.loc);
                    tuples.insert(std::move(t));
                }
                break;
            case RawStructEntry::Rhs::Range:
                for (auto& el : expandRange(e.lo, e.hi, e.loc)) tuples.insert({el});
                break;
            case RawStructEntry::Rhs::Scalar: tuples.insert({resolveElem(e.scalar, *voc)}); break;
            case RawStructEntry::Rhs::Bool:
                if (e.boolVal) tuples.insert(Tuple{});
                break;
            default: break;
        }
        if (sym->isType()) {
            if (I->hasTypeTable(sym))
                throw Error(Error::Kind::Input, "type '" + sym->name + "' interpreted twice",
                            e.loc);
            std::vector<DomainElem> elems;
            for (auto& t : tuples) elems.push_back(t[0]);
            I->setTypeTable(sym, std::move(elems));
        } else {
            PartialStructure::Mode m = e.mode == RawStructEntry::Mode::Ct
                                           ? PartialStructure::Mode::Ct
                                       : e.mode == RawStructEntry::Mode::Cf
                                           ? PartialStructure::Mode::Cf
                                           : PartialStructure::Mode::Total;
            I->addKnowledge(sym, m, tuples);
        }
    }
    I->finalize();
    return I;
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec assembly
// ---------------------------------------------------------------------------

namespace {

struct NsWalk {
    struct Item {
        RawNamespace* ns;
        RawNsEntry* entry;
    };
    std::vector<Item> items;
    void collect(RawNamespace& ns) {
        for (auto& e : ns.entries) {
            if (e.kind == RawNsEntry::Kind::Namespace) collect(*e.ns);
            else items.push_back({&ns, &e});
        }
    }
};

// innermost-scope preference among matching fqns
template <typename T>
T* preferScoped(std::vector<std::pair<std::string, T*>>& matches, const std::string& fromFqn) {
    if (matches.empty()) return nullptr;
    if (matches.size() == 1) return matches[0].second;
    std::string scope = fromFqn;
    while (true) {
        std::vector<T*> scoped;
        for (auto& [fqn, ptr] : matches) {
            std::string parent = fqn.substr(0, fqn.rfind("::"));
            if (parent == scope) scoped.push_back(ptr);
        }
        if (scoped.size() == 1) return scoped[0];
        if (scoped.size() > 1) return nullptr;
        size_t p = scope.rfind("::");
        if (p == std::string::npos) break;
        scope = scope.substr(0, p);
    }
    return nullptr;
}

}  // namespace

VocabularyPtr Spec::findVocabulary(const std::string& name) const {
    QualName q;
    q.parts = splitFqn(name);
    for (auto& v : vocabularies)
        if (nameSuffixMatches(q, v->fqn)) return v;
    return nullptr;
}
TheoryPtr Spec::findTheory(const std::string& name) const {
    QualName q;
    q.parts = splitFqn(name);
    for (auto& t : theories)
        if (nameSuffixMatches(q, t->fqn)) return t;
    return nullptr;
}
PartialStructurePtr Spec::findStructure(const std::string& name) const {
    QualName q;
    q.parts = splitFqn(name);
    for (auto& s : structures)
        if (nameSuffixMatches(q, s->fqn)) return s;
    return nullptr;
}
std::shared_ptr<ResolvedTerm> Spec::findTerm(const std::string& name) const {
    QualName q;
    q.parts = splitFqn(name);
    for (auto& t : terms)
        if (nameSuffixMatches(q, t->fqn)) return t;
    return nullptr;
}
std::shared_ptr<ResolvedFormula> Spec::findFormula(const std::string& name) const {
    QualName q;
    q.parts = splitFqn(name);
    for (auto& f : formulas)
        if (nameSuffixMatches(q, f->fqn)) return f;
    return nullptr;
}

Spec disambiguate(const RawNamespacePtr& root) {
    Spec spec;
    SymbolRegistry registry;
    NsWalk walk;
    walk.collect(*root);

    // vocabularies first
    std::vector<std::pair<std::string, VocabularyPtr>> vocByFqn;
    for (auto& item : walk.items) {
        if (item.entry->kind != RawNsEntry::Kind::Vocab) continue;
        std::string fqn = item.ns->fqn + "::" + item.entry->vocab->name;
        VocabResolver vr(registry, *item.entry->vocab, fqn);
        auto voc = vr.run();
        spec.vocabularies.push_back(voc);
        vocByFqn.push_back({fqn, voc});
    }
    auto resolveVocRef = [&](const QualName& q, const std::string& fromFqn,
                             SourceLoc loc) -> VocabularyPtr {
        std::vector<std::pair<std::string, VocabularyPtr*>> matches;
        for (auto& [fqn, voc] : vocByFqn)
            if (nameSuffixMatches(q, fqn)) matches.push_back({fqn, &voc});
        if (matches.empty())
            throw Error(Error::Kind::Name, "unknown vocabulary '" + q.str() + "'", loc);
        if (matches.size() == 1) return *matches[0].second;
        auto* r = preferScoped(matches, fromFqn);
        if (!r)
            throw Error(Error::Kind::Name, "ambiguous vocabulary '" + q.str() + "'", loc);
        return *r;
    };

    // remaining components
    for (auto& item : walk.items) {
        RawNamespace& ns = *item.ns;
        RawNsEntry& e = *item.entry;
        switch (e.kind) {
            case RawNsEntry::Kind::Structure: {
                auto voc = resolveVocRef(e.structure->vocab, ns.fqn, e.structure->loc);
                spec.structures.push_back(
                    resolveStructure(*e.structure, voc, ns.fqn + "::" + e.structure->name));
                break;
            }
            case RawNsEntry::Kind::Theory: {
                auto voc = resolveVocRef(e.theory->vocab, ns.fqn, e.theory->loc);
                auto th = std::make_shared<Theory>();
                th->name = e.theory->name;
                th->fqn = ns.fqn + "::" + e.theory->name;
                th->voc = voc;
                for (auto& item2 : e.theory->items) {
                    if (item2.kind == RawTheoryItem::Kind::Sentence) {
                        ExprResolver R(*voc, TargetKind::Sentence, true);
                        th->sentences.push_back(
                            R.resolve(item2.sentence.get(), nullptr, item2.sentence->loc).formula);
                    } else if (item2.kind == RawTheoryItem::Kind::Definition) {
                        auto def = std::make_shared<Definition>();
                        for (auto& rr : item2.def.rules) {
                            ExprResolver R(*voc, TargetKind::RuleTarget, true);
                            def->rules.push_back(R.resolve(nullptr, &rr, rr.loc).rule);
                        }
                        th->definitions.push_back(def);
                    }
                }
                auto violations = checkWelltyped(th);
                if (!violations.empty())
                    throw Error(Error::Kind::Type, violations[0], e.theory->loc);
                spec.theories.push_back(th);
                break;
            }
            case RawNsEntry::Kind::Term: {
                auto voc = resolveVocRef(e.term->vocab, ns.fqn, e.term->loc);
                ExprResolver R(*voc, TargetKind::TermExpr, false);
                auto rt = std::make_shared<ResolvedTerm>();
                rt->name = e.term->name;
                rt->fqn = ns.fqn + "::" + e.term->name;
                rt->voc = voc;
                rt->term = R.resolve(e.term->expr.get(), nullptr, e.term->loc).term;
                spec.terms.push_back(rt);
                break;
            }
            case RawNsEntry::Kind::Formula: {
                auto voc = resolveVocRef(e.formula->vocab, ns.fqn, e.formula->loc);
                ExprResolver R(*voc, TargetKind::Sentence, false);
                auto rf = std::make_shared<ResolvedFormula>();
                rf->name = e.formula->name;
                rf->fqn = ns.fqn + "::" + e.formula->name;
                rf->voc = voc;
                rf->formula = R.resolve(e.formula->expr.get(), nullptr, e.formula->loc).formula;
                spec.formulas.push_back(rf);
                break;
            }
            default: break;
        }
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Desugaring kept out of resolution
// ---------------------------------------------------------------------------

namespace {

FormulaPtr lowerDenotesIn(const FormulaPtr& f, int& fresh);

TermPtr lowerDenotesInTerm(const TermPtr& t, int& fresh) {
    switch (t->kind) {
        case Term::Kind::Var:
        case Term::Kind::Elem: return t;
        case Term::Kind::FuncApp: {
            std::vector<TermPtr> args;
            for (auto& a : t->args) args.push_back(lowerDenotesInTerm(a, fresh));
            return Term::mkFunc(t->symbol, std::move(args));
        }
        case Term::Kind::Agg: {
            std::vector<TermPtr> tuple;
            for (auto& x : t->set->tuple) tuple.push_back(lowerDenotesInTerm(x, fresh));
            return Term::mkAgg(t->agg, SetExpr::mk(t->set->boundVars,
                                                   lowerDenotesIn(t->set->cond, fresh),
                                                   std::move(tuple)));
        }
    }
    return t;
}

FormulaPtr lowerDenotesIn(const FormulaPtr& f, int& fresh) {
    if (!f) return f;
    switch (f->kind) {
        case Formula::Kind::Denotes: {
            const TermPtr& t = f->term;
            if (t->kind == Term::Kind::Var || t->kind == Term::Kind::Elem)
                return Formula::mkBool(true);
            if (t->kind == Term::Kind::Agg) {
                if (t->agg == AggFn::Min || t->agg == AggFn::Max) {
                    // min/max denote iff the multiset is nonempty
                    FormulaPtr cond = t->set->cond ? t->set->cond : Formula::mkBool(true);
                    if (!t->set->tuple.empty() && t->set->tuple[0]->kind != Term::Kind::Var)
                        cond = Formula::mkAnd(
                            {cond, lowerDenotesIn(Formula::mkDenotes(t->set->tuple[0]), fresh)});
                    return Formula::mkExtExists(CmpOp::Geq, 1, t->set->boundVars, cond);
                }
                return Formula::mkBool(true);  // card/sum/prod always denote
            }
            // f(t): user functions with an enumerable output type
            if (t->kind == Term::Kind::FuncApp && !t->symbol->builtin) {
                std::string x = "d'" + std::to_string(fresh++);
                SymbolPtr ty = t->symbol->outType;
                return Formula::mkExists(
                    {{x, ty}},
                    Formula::mkCmp(CmpOp::Eq, lowerDenotesInTerm(t, fresh), Term::mkVar(x, ty)));
            }
            return Formula::mkDenotes(lowerDenotesInTerm(t, fresh));
        }
        case Formula::Kind::Atom: {
            std::vector<TermPtr> args;
            for (auto& a : f->args) args.push_back(lowerDenotesInTerm(a, fresh));
            return Formula::mkAtom(f->pred, std::move(args));
        }
        case Formula::Kind::Cmp:
            return Formula::mkCmp(f->cmp, lowerDenotesInTerm(f->left, fresh),
                                  lowerDenotesInTerm(f->right, fresh));
        case Formula::Kind::Not: return Formula::mkNot(lowerDenotesIn(f->subs[0], fresh));
        case Formula::Kind::And:
        case Formula::Kind::Or: {
            std::vector<FormulaPtr> subs;
            for (auto& g : f->subs) subs.push_back(lowerDenotesIn(g, fresh));
            return f->kind == Formula::Kind::And ? Formula::mkAnd(std::move(subs))
                                                 : Formula::mkOr(std::move(subs));
        }
        case Formula::Kind::Forall:
            return Formula::mkForall(f->vars, lowerDenotesIn(f->body, fresh));
        case Formula::Kind::Exists:
            return Formula::mkExists(f->vars, lowerDenotesIn(f->body, fresh));
        case Formula::Kind::ExtExists:
            return Formula::mkExtExists(f->cmp, f->extBound, f->vars,
                                        lowerDenotesIn(f->body, fresh));
        default: return f;
    }
}

}  // namespace

FormulaPtr lowerDenotes(const FormulaPtr& f) {
    int fresh = 0;
    return lowerDenotesIn(f, fresh);
}

TheoryPtr desugarTheory(const TheoryPtr& t) {
    auto out = std::make_shared<Theory>();
    out->name = t->name;
    out->fqn = t->fqn;
    out->voc = t->voc;
    int fresh = 0;
    for (auto& s : t->sentences) out->sentences.push_back(lowerDenotesIn(s, fresh));
    for (auto& d : t->definitions) {
        auto nd = std::make_shared<Definition>();
        for (auto& r : d->rules) {
            Rule nr = r;
            nr.body = lowerDenotesIn(r.body, fresh);
            nd->rules.push_back(std::move(nr));
        }
        out->definitions.push_back(nd);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Text helpers for the CLI
// ---------------------------------------------------------------------------

FormulaPtr resolveFormulaText(const std::string& text, const VocabularyPtr& voc) {
    auto root = std::make_shared<RawNamespace>();
    root->name = "global";
    root->fqn = "global";
    // wrap the text as a formula component to reuse the component grammar
    auto wrapped = tokenize("formula q'f is " + text + ";", "<query>");
    parseSpecification(wrapped, root);
    for (auto& e : root->entries)
        if (e.kind == RawNsEntry::Kind::Formula) {
            ExprResolver R(*voc, TargetKind::Sentence, false, true);
            return R.resolve(e.formula->expr.get(), nullptr, SourceLoc{"<query>", 1, 1}).formula;
        }
    throw Error(Error::Kind::Parse, "could not parse formula", SourceLoc{"<query>", 1, 1});
}

SetExprPtr resolveSetText(const std::string& text, const VocabularyPtr& voc) {
    auto wrapped = tokenize("term q't is #(" + text + ");", "<query>");
    auto root = std::make_shared<RawNamespace>();
    root->name = "global";
    root->fqn = "global";
    parseSpecification(wrapped, root);
    for (auto& e : root->entries)
        if (e.kind == RawNsEntry::Kind::Term) {
            ExprResolver R(*voc, TargetKind::TermExpr, false, true);
            TermPtr t = R.resolve(e.term->expr.get(), nullptr, SourceLoc{"<query>", 1, 1}).term;
            if (t->kind == Term::Kind::Agg) return t->set;
        }
    throw Error(Error::Kind::Parse, "could not parse set expression",
                SourceLoc{"<query>", 1, 1});
}

}  // namespace kbf
