#include "kbf/wfs.hpp"

#include <algorithm>
#include <functional>

namespace kbf {

bool WfmResult::twoValued() const {
    for (auto& [sym, t] : tables)
        if (!t.unknown.empty()) return false;
    return true;
}

std::string WfmResult::witness() const {
    for (auto& [sym, t] : tables)
        if (!t.unknown.empty()) return sym->name + tupleStr(*t.unknown.begin());
    return "";
}

// ---------------------------------------------------------------------------
// Graph translation
// ---------------------------------------------------------------------------

namespace {

struct GraphRewriter {
    std::set<SymbolPtr> definedFuncs;
    int fresh = 0;

    std::string freshVar() { return "g'" + std::to_string(fresh++); }

    // Rewrites one term; occurrences of defined functions produce a fresh
    // variable plus a graph-atom binding (leaves first).
    TermPtr rewriteTerm(const TermPtr& t, std::vector<TypedVar>& newVars,
                        std::vector<FormulaPtr>& bindings) {
        switch (t->kind) {
            case Term::Kind::Var:
            case Term::Kind::Elem: return t;
            case Term::Kind::FuncApp: {
                std::vector<TermPtr> args;
                for (auto& a : t->args) args.push_back(rewriteTerm(a, newVars, bindings));
                if (!definedFuncs.count(t->symbol))
                    return Term::mkFunc(t->symbol, std::move(args));
                std::string x = freshVar();
                SymbolPtr ty = t->symbol->outType;
                newVars.push_back({x, ty});
                args.push_back(Term::mkVar(x, ty));
                bindings.push_back(Formula::mkAtom(graphPredOf(t->symbol), std::move(args)));
                return Term::mkVar(x, ty);
            }
            case Term::Kind::Agg: {
                // {x: phi: f(t)} becomes {x: phi & ?z: F(t,z) : z}
                FormulaPtr cond = rewriteFormula(t->set->cond);
                std::vector<TermPtr> tuple;
                for (auto& x : t->set->tuple) {
                    std::vector<TypedVar> innerVars;
                    std::vector<FormulaPtr> innerBinds;
                    TermPtr nx = rewriteTerm(x, innerVars, innerBinds);
                    if (!innerBinds.empty()) {
                        std::vector<FormulaPtr> conj = {cond};
                        for (auto& b : innerBinds) conj.push_back(b);
                        cond = Formula::mkAnd(conj);
                        // the let-variables join the set's bound variables
                        tuple.push_back(nx);
                        auto vars = t->set->boundVars;
                        for (auto& v : innerVars) vars.push_back(v);
                        return Term::mkAgg(t->agg, SetExpr::mk(vars, cond, tuple));
                    }
                    tuple.push_back(nx);
                }
                return Term::mkAgg(t->agg, SetExpr::mk(t->set->boundVars, cond, tuple));
            }
        }
        return t;
    }

    FormulaPtr atomWithRewrites(const std::function<FormulaPtr(std::vector<TermPtr>)>& rebuild,
                                const std::vector<TermPtr>& args) {
        std::vector<TypedVar> newVars;
        std::vector<FormulaPtr> bindings;
        std::vector<TermPtr> rewritten;
        for (auto& a : args) rewritten.push_back(rewriteTerm(a, newVars, bindings));
        FormulaPtr atom = rebuild(std::move(rewritten));
        if (bindings.empty()) return atom;
        bindings.push_back(atom);
        return Formula::mkExists(newVars, Formula::mkAnd(bindings));
    }

    FormulaPtr rewriteFormula(const FormulaPtr& f) {
        if (!f) return f;
        switch (f->kind) {
            case Formula::Kind::BoolConst: return f;
            case Formula::Kind::Atom: {
                SymbolPtr pred = f->pred;
                return atomWithRewrites(
                    [pred](std::vector<TermPtr> args) {
                        return Formula::mkAtom(pred, std::move(args));
                    },
                    f->args);
            }
            case Formula::Kind::Cmp: {
                CmpOp op = f->cmp;
                return atomWithRewrites(
                    [op](std::vector<TermPtr> args) {
                        return Formula::mkCmp(op, args[0], args[1]);
                    },
                    {f->left, f->right});
            }
            case Formula::Kind::Not: return Formula::mkNot(rewriteFormula(f->subs[0]));
            case Formula::Kind::And:
            case Formula::Kind::Or: {
                std::vector<FormulaPtr> subs;
                for (auto& g : f->subs) subs.push_back(rewriteFormula(g));
                return f->kind == Formula::Kind::And ? Formula::mkAnd(std::move(subs))
                                                     : Formula::mkOr(std::move(subs));
            }
            case Formula::Kind::Forall:
                return Formula::mkForall(f->vars, rewriteFormula(f->body));
            case Formula::Kind::Exists:
                return Formula::mkExists(f->vars, rewriteFormula(f->body));
            case Formula::Kind::ExtExists:
                return Formula::mkExtExists(f->cmp, f->extBound, f->vars,
                                            rewriteFormula(f->body));
            case Formula::Kind::Denotes: {
                return atomWithRewrites(
                    [](std::vector<TermPtr> args) { return Formula::mkDenotes(args[0]); },
                    {f->term});
            }
        }
        return f;
    }
};

bool headIsDistinctVars(const Rule& r) {
    std::set<std::string> seen;
    for (auto& a : r.headArgs) {
        if (a->kind != Term::Kind::Var) return false;
        if (!seen.insert(a->var).second) return false;
    }
    return true;
}

}  // namespace

DefinitionPtr graphTranslate(const DefinitionPtr& d) {
    GraphRewriter rw;
    for (auto& s : d->definedSymbols())
        if (s->isFunction()) rw.definedFuncs.insert(s);
    auto out = std::make_shared<Definition>();
    for (auto& r : d->rules) {
        Rule nr;
        bool funcRule = r.head->isFunction();
        nr.head = funcRule ? graphPredOf(r.head) : r.head;
        FormulaPtr body = rw.rewriteFormula(r.body);
        if (!funcRule && headIsDistinctVars(r) && !r.headValue) {
            nr.vars = r.vars;
            nr.headArgs = r.headArgs;
            nr.body = body;
            out->rules.push_back(std::move(nr));
            continue;
        }
        // normalize: P(y1..yn) <- ?x: y = t & body   (function rules add y' = t')
        std::vector<TypedVar> headVars;
        std::vector<FormulaPtr> eqs;
        std::vector<SymbolPtr> headTypes = r.head->argTypes;
        std::vector<TermPtr> headTerms = r.headArgs;
        if (funcRule) {
            headTypes.push_back(r.head->outType);
            headTerms.push_back(r.headValue);
        }
        for (size_t i = 0; i < headTerms.size(); ++i) {
            std::string y = "h'" + std::to_string(i);
            headVars.push_back({y, headTypes[i]});
            nr.headArgs.push_back(Term::mkVar(y, headTypes[i]));
            std::vector<TypedVar> vs;
            std::vector<FormulaPtr> binds;
            TermPtr t = rw.rewriteTerm(headTerms[i], vs, binds);
            FormulaPtr eq = Formula::mkCmp(CmpOp::Eq, Term::mkVar(y, headTypes[i]), t);
            if (!binds.empty()) {
                binds.push_back(eq);
                eq = Formula::mkExists(vs, Formula::mkAnd(binds));
            }
            eqs.push_back(eq);
        }
        eqs.push_back(body);
        nr.vars = headVars;
        nr.body = Formula::mkExists(r.vars, Formula::mkAnd(eqs));
        out->rules.push_back(std::move(nr));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dependency graph and SCC splitting
// ---------------------------------------------------------------------------

namespace {

void collectPolarity(const FormulaPtr& f, int pol,
                     std::map<SymbolPtr, int, SymbolDeclLess>& out) {
    // pol: 1 positive, -1 negative, 0 both
    switch (f->kind) {
        case Formula::Kind::BoolConst: return;
        case Formula::Kind::Atom: {
            std::set<SymbolPtr> syms;
            collectSymbols(f, syms);
            // the atom's predicate occurs at pol; symbols inside argument
            // terms occur in both polarities (value positions)
            for (auto& s : syms) {
                int p = (s == f->pred) ? pol : 0;
                auto it = out.find(s);
                if (it == out.end()) out[s] = p;
                else if (it->second != p) it->second = 0;
            }
            return;
        }
        case Formula::Kind::Cmp:
        case Formula::Kind::Denotes: {
            std::set<SymbolPtr> syms;
            collectSymbols(f, syms);
            for (auto& s : syms) {
                auto it = out.find(s);
                if (it == out.end()) out[s] = 0;
                else it->second = 0;
            }
            return;
        }
        case Formula::Kind::Not: collectPolarity(f->subs[0], -pol, out); return;
        case Formula::Kind::And:
        case Formula::Kind::Or:
            for (auto& g : f->subs) collectPolarity(g, pol, out);
            return;
        case Formula::Kind::Forall:
        case Formula::Kind::Exists: collectPolarity(f->body, pol, out); return;
        case Formula::Kind::ExtExists: collectPolarity(f->body, 0, out); return;
    }
}

}  // namespace

DefDependencyGraph DefDependencyGraph::build(const Definition& d) {
    DefDependencyGraph g;
    auto defined = d.definedSymbols();
    std::set<SymbolPtr> definedSet(defined.begin(), defined.end());
    // the graph predicates of defined functions stand for their functions
    std::map<SymbolPtr, SymbolPtr> graphToFunc;
    for (auto& s : defined)
        if (s->isFunction() && s->graphPred) graphToFunc[s->graphPred] = s;
    g.nodes = defined;
    for (auto& r : d.rules) {
        SymbolPtr head = r.head;
        if (head->graphOf) {
            for (auto& [gp, f] : graphToFunc)
                if (gp == head) head = f;
        }
        std::map<SymbolPtr, int, SymbolDeclLess> occ;
        if (r.body) collectPolarity(r.body, 1, occ);
        for (auto& a : r.headArgs) {
            std::set<SymbolPtr> syms;
            collectSymbols(a, syms);
            for (auto& s : syms) occ[s] = 0;
        }
        if (r.headValue) {
            std::set<SymbolPtr> syms;
            collectSymbols(r.headValue, syms);
            for (auto& s : syms) occ[s] = 0;
        }
        for (auto& [s, pol] : occ) {
            SymbolPtr target = s;
            auto it = graphToFunc.find(s);
            if (it != graphToFunc.end()) target = it->second;
            if (!definedSet.count(target)) continue;
            Polarity p = pol == 1 ? Polarity::Pos : pol == -1 ? Polarity::Neg : Polarity::Both;
            auto& slot = g.edges[head];
            auto eit = slot.find(target);
            if (eit == slot.end()) slot[target] = p;
            else if (eit->second != p) eit->second = Polarity::Both;
        }
    }
    return g;
}

std::vector<std::vector<SymbolPtr>> DefDependencyGraph::sccs() const {
    // Tarjan, with the result reversed into callees-first topological order
    std::map<SymbolPtr, int, SymbolDeclLess> index, low;
    std::map<SymbolPtr, bool, SymbolDeclLess> onStack;
    std::vector<SymbolPtr> stack;
    std::vector<std::vector<SymbolPtr>> out;
    int counter = 0;
    std::function<void(const SymbolPtr&)> strongconnect = [&](const SymbolPtr& v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        onStack[v] = true;
        auto it = edges.find(v);
        if (it != edges.end())
            for (auto& [w, pol] : it->second) {
                if (!index.count(w)) {
                    strongconnect(w);
                    low[v] = std::min(low[v], low[w]);
                } else if (onStack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
            }
        if (low[v] == index[v]) {
            std::vector<SymbolPtr> scc;
            while (true) {
                SymbolPtr w = stack.back();
                stack.pop_back();
                onStack[w] = false;
                scc.push_back(w);
                if (w == v) break;
            }
            out.push_back(std::move(scc));
        }
    };
    for (auto& n : nodes)
        if (!index.count(n)) strongconnect(n);
    return out;  // Tarjan emits callees before callers
}

std::vector<DefinitionPtr> splitSccs(const DefinitionPtr& d) {
    auto g = DefDependencyGraph::build(*d);
    auto comps = g.sccs();
    std::vector<DefinitionPtr> out;
    for (auto& comp : comps) {
        std::set<SymbolPtr> inComp(comp.begin(), comp.end());
        auto sub = std::make_shared<Definition>();
        for (auto& r : d->rules) {
            SymbolPtr head = r.head;
            if (head->graphOf)
                for (auto& s : comp)
                    if (s->graphPred == head) head = s;
            if (inComp.count(head)) sub->rules.push_back(r);
        }
        if (!sub->rules.empty()) out.push_back(sub);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

namespace {

bool symbolOccursIn(const SymbolPtr& s, const FormulaPtr& f) {
    std::set<SymbolPtr> syms;
    collectSymbols(f, syms);
    return syms.count(s) != 0;
}

bool quantifiedTypesEnumerable(const Definition& d, const PartialStructure& I) {
    std::function<bool(const FormulaPtr&)> okF;
    std::function<bool(const TermPtr&)> okT = [&](const TermPtr& t) -> bool {
        switch (t->kind) {
            case Term::Kind::FuncApp:
                for (auto& a : t->args)
                    if (!okT(a)) return false;
                return true;
            case Term::Kind::Agg:
                for (auto& v : t->set->boundVars)
                    if (!v.type || !I.typeTable(v.type)) return false;
                if (t->set->cond && !okF(t->set->cond)) return false;
                for (auto& x : t->set->tuple)
                    if (!okT(x)) return false;
                return true;
            default: return true;
        }
    };
    okF = [&](const FormulaPtr& f) -> bool {
        switch (f->kind) {
            case Formula::Kind::Forall:
            case Formula::Kind::Exists:
            case Formula::Kind::ExtExists:
                for (auto& v : f->vars)
                    if (!v.type || !I.typeTable(v.type)) return false;
                return okF(f->body);
            case Formula::Kind::Not: return okF(f->subs[0]);
            case Formula::Kind::And:
            case Formula::Kind::Or:
                for (auto& g : f->subs)
                    if (!okF(g)) return false;
                return true;
            case Formula::Kind::Atom:
                for (auto& a : f->args)
                    if (!okT(a)) return false;
                return true;
            case Formula::Kind::Cmp: return okT(f->left) && okT(f->right);
            case Formula::Kind::Denotes: return okT(f->term);
            default: return true;
        }
    };
    for (auto& r : d.rules) {
        for (auto& v : r.vars)
            if (!v.type || !I.typeTable(v.type)) return false;
        if (r.body && !okF(r.body)) return false;
        for (auto& a : r.headArgs)
            if (!okT(a)) return false;
        if (r.headValue && !okT(r.headValue)) return false;
    }
    return true;
}

}  // namespace

DefClass classify(const DefinitionPtr& d, const Theory& context, const PartialStructure& I) {
    auto defined = d->definedSymbols();
    std::set<SymbolPtr> definedSet(defined.begin(), defined.end());
    // input-*: every open symbol two-valued, quantifications enumerable
    bool input = quantifiedTypesEnumerable(*d, I);
    if (input) {
        for (auto& s : d->openSymbols()) {
            if (s->builtin || s->derivedBase || s->constructorOf) continue;
            if (s->isType()) {
                if (!I.hasTypeTable(s) && s->type->builtin == BuiltinType::None) input = false;
            } else if (!I.twoValuedOn(s)) {
                input = false;
            }
            if (!input) break;
        }
    }
    if (input) return DefClass::InputStar;
    // output-*: defined symbols occur nowhere else and are uninterpreted
    for (auto& s : defined) {
        const SymbolTable* tab = I.table(s);
        if (tab && (!tab->ct.empty() || !tab->cf.empty() || tab->closed))
            return DefClass::Neither;
        for (auto& sent : context.sentences)
            if (symbolOccursIn(s, sent)) return DefClass::Neither;
        for (auto& other : context.definitions) {
            if (other.get() == d.get()) continue;
            for (auto& r : other->rules) {
                if (r.head == s) return DefClass::Neither;
                if (r.body && symbolOccursIn(s, r.body)) return DefClass::Neither;
                for (auto& a : r.headArgs)
                    if (symbolOccursIn(s, Formula::mkDenotes(a))) return DefClass::Neither;
                if (r.headValue && symbolOccursIn(s, Formula::mkDenotes(r.headValue)))
                    return DefClass::Neither;
            }
        }
    }
    return DefClass::OutputStar;
}

// ---------------------------------------------------------------------------
// The parametrised well-founded model
// ---------------------------------------------------------------------------

namespace {

// Overlay exposing the defined symbols through the evolving (L, U) pair.
class WfsOverlay : public StructureView {
public:
    const PartialStructure& base;
    // keyed by the rule head symbols (graph predicates for functions)
    std::map<SymbolPtr, const TupleSet*, SymbolDeclLess> lower, upper;

    explicit WfsOverlay(const PartialStructure& b) : base(b) {}

    bool overlays(const SymbolPtr& s) const { return lower.count(s) != 0; }

    const Vocabulary& vocabulary() const override { return base.vocabulary(); }
    const std::vector<DomainElem>* typeTable(const SymbolPtr& t) const override {
        return base.typeTable(t);
    }
    TruthValue typeTruth(const SymbolPtr& t, const DomainElem& e) const override {
        return base.typeTruth(t, e);
    }
    TruthValue predTruth(const SymbolPtr& sym, const Tuple& t) const override {
        auto it = lower.find(sym);
        if (it != lower.end()) {
            if (it->second->count(t)) return TruthValue::True;
            if (upper.at(sym)->count(t)) return TruthValue::Unknown;
            return TruthValue::False;
        }
        return base.predTruth(sym, t);
    }
    std::vector<DomainElem> funcImages(const SymbolPtr& f, const Tuple& input) const override {
        SymbolPtr g = f->graphPred;
        if (g && overlays(g)) {
            std::vector<DomainElem> out;
            for (auto& t : *lower.at(g))
                if (std::equal(input.begin(), input.end(), t.begin())) out.push_back(t.back());
            return out;
        }
        return base.funcImages(f, input);
    }
    TruthValue funcDefined(const SymbolPtr& f, const Tuple& input) const override {
        SymbolPtr g = f->graphPred;
        if (g && overlays(g)) {
            if (!funcImages(f, input).empty()) return TruthValue::True;
            for (auto& t : *upper.at(g))
                if (std::equal(input.begin(), input.end(), t.begin()))
                    return TruthValue::Unknown;
            return TruthValue::False;
        }
        return base.funcDefined(f, input);
    }
};

}  // namespace

GroundedDefRules groundDefRules(const Definition& d, const PartialStructure& I) {
    GroundedDefRules out;
    for (auto& r : d.rules) {
        // enumerate rule variables over their type tables
        std::vector<const std::vector<DomainElem>*> tables;
        for (auto& v : r.vars) {
            const auto* tab = v.type ? I.typeTable(v.type) : nullptr;
            if (!tab)
                throw Error(Error::Kind::Domain,
                            "cannot instantiate rule variable '" + v.name + "' over type '" +
                                (v.type ? v.type->name : "?") + "'");
            tables.push_back(tab);
        }
        std::vector<size_t> counters(r.vars.size(), 0);
        while (true) {
            Binding b;
            for (size_t i = 0; i < r.vars.size(); ++i)
                b[r.vars[i].name] = (*tables[i])[counters[i]];
            // heads are variables after graph translation
            GroundDefRule gr;
            gr.sym = r.head;
            bool headOk = true;
            std::vector<SymbolPtr> headTypes = r.head->argTypes;
            for (size_t i = 0; i < r.headArgs.size(); ++i) {
                EvalResult hv = evalTerm(substitute(r.headArgs[i], b), I);
                if (!hv.isDefined()) { headOk = false; break; }
                // out-of-type head instances are dropped
                if (I.typeTruth(headTypes[i], hv.value) == TruthValue::False) {
                    headOk = false;
                    break;
                }
                gr.args.push_back(hv.value);
            }
            if (headOk) {
                gr.body = r.body ? substitute(r.body, b) : Formula::mkBool(true);
                out.heads[gr.sym].insert(gr.args);
                out.rules.push_back(std::move(gr));
            }
            size_t i = 0;
            for (; i < counters.size(); ++i) {
                if (++counters[i] < tables[i]->size()) break;
                counters[i] = 0;
            }
            if (i == counters.size()) break;
        }
    }
    return out;
}

WfmResult wfm(const DefinitionPtr& d0, const PartialStructure& I) {
    DefinitionPtr d = graphTranslate(d0);
    GroundedDefRules g = groundDefRules(*d, I);

    // (L, U) per head symbol
    std::map<SymbolPtr, TupleSet, SymbolDeclLess> L, U;
    for (auto& [sym, heads] : g.heads) {
        L[sym] = {};
        U[sym] = heads;
    }
    for (auto& r : g.rules)
        if (!L.count(r.sym)) {
            L[r.sym] = {};
            U[r.sym] = {};
        }

    WfsOverlay view(I);
    auto setViews = [&](std::map<SymbolPtr, TupleSet, SymbolDeclLess>& lo,
                        std::map<SymbolPtr, TupleSet, SymbolDeclLess>& hi) {
        view.lower.clear();
        view.upper.clear();
        for (auto& [sym, t] : lo) view.lower[sym] = &t;
        for (auto& [sym, t] : hi) view.upper[sym] = &t;
    };

    // alternating fixpoint: U' = lfp of the possibly-true operator at L,
    // then L' = lfp of the certainly-true operator at U'
    for (int outer = 0;; ++outer) {
        if (outer > 1000) throw Error(Error::Kind::Internal, "wfm failed to converge");
        // U' from scratch
        std::map<SymbolPtr, TupleSet, SymbolDeclLess> newU;
        for (auto& [sym, t] : U) newU[sym] = {};
        bool changed = true;
        while (changed) {
            changed = false;
            setViews(L, newU);
            for (auto& r : g.rules) {
                if (newU[r.sym].count(r.args)) continue;
                TruthValue v = evalFormula(r.body, view);
                if (v != TruthValue::False) {
                    newU[r.sym].insert(r.args);
                    changed = true;
                }
            }
        }
        // clamp: L must stay inside U (safety; holds by monotonicity)
        std::map<SymbolPtr, TupleSet, SymbolDeclLess> newL;
        for (auto& [sym, t] : L) newL[sym] = {};
        changed = true;
        while (changed) {
            changed = false;
            setViews(newL, newU);
            for (auto& r : g.rules) {
                if (newL[r.sym].count(r.args)) continue;
                TruthValue v = evalFormula(r.body, view);
                if (v == TruthValue::True) {
                    newL[r.sym].insert(r.args);
                    changed = true;
                }
            }
        }
        bool stable = newL == L && newU == U;
        L = std::move(newL);
        U = std::move(newU);
        if (stable) break;
    }

    // translate graph predicates back to their functions
    WfmResult out;
    for (auto& s : d0->definedSymbols()) {
        SymbolPtr key = s->isFunction() ? s->graphPred : s;
        WfmResult::Table t;
        if (L.count(key)) {
            t.trueSet = L[key];
            for (auto& tup : U[key])
                if (!t.trueSet.count(tup)) t.unknown.insert(tup);
        }
        out.tables[s] = std::move(t);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Folding and input-* evaluation
// ---------------------------------------------------------------------------

void foldWfm(const DefinitionPtr& d, const WfmResult& w, PartialStructure& I) {
    for (auto& [sym, t] : w.tables) {
        if (!t.unknown.empty())
            throw Error(Error::Kind::Input,
                        "definition of '" + sym->name + "' is not total here (" +
                            sym->name + tupleStr(*t.unknown.begin()) + " is unknown)");
        auto space = I.tupleSpace(sym);
        if (!space)
            throw Error(Error::Kind::Domain,
                        "cannot materialize the model of defined symbol '" + sym->name +
                            "' (type space not enumerable)");
        SymbolTable& tab = I.tableMut(sym);
        for (auto& tup : t.trueSet) {
            if (I.predTruth(sym, tup) == TruthValue::False)
                throw Error(Error::Kind::Input, "derived " + sym->name + tupleStr(tup) +
                                                    " contradicts the structure");
            tab.ct.insert(tup);
        }
        for (auto& tup : *space) {
            if (t.trueSet.count(tup)) continue;
            if (I.predTruth(sym, tup) == TruthValue::True)
                throw Error(Error::Kind::Input, "derived ~" + sym->name + tupleStr(tup) +
                                                    " contradicts the structure");
            tab.cf.insert(tup);
        }
        // functions: exactly-one image per input required
        if (sym->isFunction()) {
            std::map<Tuple, int> images;
            for (auto& tup : t.trueSet)
                images[Tuple(tup.begin(), tup.end() - 1)]++;
            for (auto& [in, n] : images)
                if (n > 1)
                    throw Error(Error::Kind::Input, "defined function '" + sym->name +
                                                        "' maps " + tupleStr(in) +
                                                        " to several values");
            if (!sym->partial) {
                std::vector<Tuple> inputs{{}};
                for (auto& ty : sym->argTypes) {
                    const auto* tb = I.typeTable(ty);
                    std::vector<Tuple> next;
                    for (auto& pre : inputs)
                        for (auto& e : *tb) {
                            Tuple ext = pre;
                            ext.push_back(e);
                            next.push_back(ext);
                        }
                    inputs = std::move(next);
                }
                for (auto& in : inputs)
                    if (!images.count(in))
                        throw Error(Error::Kind::Input, "defined total function '" + sym->name +
                                                            "' has no image for " + tupleStr(in));
            }
        }
    }
}

InputEvalResult evaluateInputDefs(const TheoryPtr& t, const PartialStructure& I) {
    InputEvalResult out;
    out.structure = I.clone();
    auto residual = std::make_shared<Theory>();
    residual->name = t->name;
    residual->fqn = t->fqn;
    residual->voc = t->voc;
    residual->sentences = t->sentences;
    // split every definition into SCC components first
    std::vector<DefinitionPtr> defs;
    for (auto& d : t->definitions)
        for (auto& sub : splitSccs(d)) defs.push_back(sub);
    residual->definitions = defs;

    bool progress = true;
    while (progress) {
        progress = false;
        for (size_t i = 0; i < residual->definitions.size(); ++i) {
            auto& d = residual->definitions[i];
            if (classify(d, *residual, *out.structure) != DefClass::InputStar) continue;
            WfmResult w;
            try {
                w = wfm(d, *out.structure);
                foldWfm(d, w, *out.structure);
            } catch (const Error& e) {
                if (e.kind == Error::Kind::Input) {
                    out.unsat = true;
                    out.witness = e.what();
                    out.residual = residual;
                    return out;
                }
                throw;
            }
            residual->definitions.erase(residual->definitions.begin() + i);
            progress = true;
            break;
        }
    }
    out.residual = residual;
    return out;
}

// ---------------------------------------------------------------------------
// Completion
// ---------------------------------------------------------------------------

std::vector<FormulaPtr> completion(const DefinitionPtr& d0) {
    DefinitionPtr d = graphTranslate(d0);
    std::vector<FormulaPtr> out;
    // group rules per head symbol, renaming heads apart to shared variables
    std::map<SymbolPtr, std::vector<const Rule*>, SymbolDeclLess> byHead;
    for (auto& r : d->rules) byHead[r.head].push_back(&r);
    for (auto& [sym, rules] : byHead) {
        // shared head variables y0..yn
        std::vector<TypedVar> ys;
        std::vector<TermPtr> yTerms;
        for (size_t i = 0; i < sym->argTypes.size(); ++i) {
            std::string y = "c'" + std::to_string(i);
            ys.push_back({y, sym->argTypes[i]});
            yTerms.push_back(Term::mkVar(y, sym->argTypes[i]));
        }
        std::vector<FormulaPtr> bodies;
        for (auto* r : rules) {
            // rename the rule's head variables to the shared ones; the other
            // rule variables are existentially closed inside the body
            TermSubst subst;
            std::set<std::string> headVarNames;
            for (size_t i = 0; i < r->headArgs.size(); ++i) {
                subst[r->headArgs[i]->var] = yTerms[i];
                headVarNames.insert(r->headArgs[i]->var);
            }
            std::vector<TypedVar> innerVars;
            for (auto& v : r->vars)
                if (!headVarNames.count(v.name)) innerVars.push_back(v);
            FormulaPtr body = substituteTerms(r->body, subst);
            if (!innerVars.empty()) body = Formula::mkExists(innerVars, body);
            bodies.push_back(body);
            out.push_back(
                Formula::mkForall(ys, Formula::mkImplies(body, Formula::mkAtom(sym, yTerms))));
        }
        out.push_back(Formula::mkForall(
            ys, Formula::mkImplies(Formula::mkAtom(sym, yTerms), Formula::mkOr(bodies))));
    }
    return out;
}

}  // namespace kbf
