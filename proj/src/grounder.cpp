#include "kbf/grounder.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "kbf/query.hpp"

namespace kbf {

namespace {

// Constant-or-literal result of grounding a subformula.
struct GLit {
    enum class Kind { True, False, Lit };
    Kind kind = Kind::True;
    Lit lit = 0;

    static GLit t() { return {Kind::True, 0}; }
    static GLit f() { return {Kind::False, 0}; }
    static GLit l(Lit x) { return {Kind::Lit, x}; }
    GLit neg() const {
        if (kind == Kind::True) return f();
        if (kind == Kind::False) return t();
        return l(-lit);
    }
    bool isTrue() const { return kind == Kind::True; }
    bool isFalse() const { return kind == Kind::False; }
};

class Grounder {
public:
    Grounder(const TheoryPtr& T, const PartialStructure& I, const GroundOptions& opts)
        : T_(T), I_(I), opts_(opts) {
        G_.atoms.push_back({});  // index 0 unused
    }

    GroundTheory run(const TermPtr& objective) {
        for (auto& s : T_->sentences) assertSentence(s);
        for (auto& d : T_->definitions) groundDefinition(d);
        if (objective) groundObjective(objective);
        materializeUnknowns();
        closeDefined();
        return std::move(G_);
    }

private:
    TheoryPtr T_;
    const PartialStructure& I_;
    GroundOptions opts_;
    GroundTheory G_;

    // per-definition context: auxiliary atoms become defined atoms with rules
    struct DefCtx {
        GroundDefinitionInfo info;
        std::map<int, std::vector<GroundRuleN>> rulesByHead;
    };
    DefCtx* defCtx_ = nullptr;

    std::map<SymbolPtr, TupleSet, SymbolDeclLess> definedHeads_;
    std::set<SymbolPtr> definedSyms_;

    // ---------------- atoms ----------------

    SymbolPtr atomSymbol(const SymbolPtr& s) const {
        if (s->graphOf) {
            // key graph atoms by their function symbol
            for (auto& v : T_->voc->symbols)
                if (v.get() == s->graphOf) return v;
        }
        return s;
    }

    int atomOf(const SymbolPtr& sym0, const Tuple& t) {
        SymbolPtr sym = atomSymbol(sym0);
        AtomKey key{sym, t};
        auto it = G_.index.find(key);
        if (it != G_.index.end()) return it->second;
        GroundAtom a;
        a.id = static_cast<int>(G_.atoms.size());
        a.origin = GroundAtom::Origin::SymbolTuple;
        a.sym = sym;
        a.tuple = t;
        G_.atoms.push_back(a);
        G_.index[key] = a.id;
        return a.id;
    }

    int freshAux(GroundAtom::Origin origin) {
        GroundAtom a;
        a.id = static_cast<int>(G_.atoms.size());
        a.origin = origin;
        G_.atoms.push_back(a);
        return a.id;
    }

    Lit trueLit() {
        if (!G_.trueAtom) {
            G_.trueAtom = freshAux(GroundAtom::Origin::Tseitin);
            G_.clauses.push_back({{G_.trueAtom}});
        }
        return G_.trueAtom;
    }

    void addClause(std::vector<Lit> lits) {
        if (lits.empty()) G_.unsat = true;
        G_.clauses.push_back({std::move(lits)});
    }

    // ---------------- glit combinators ----------------

    // one-sided when pol is +1/-1; both directions when pol is 0
    GLit glAnd(std::vector<GLit> parts, int pol) {
        std::vector<Lit> lits;
        for (auto& p : parts) {
            if (p.isFalse()) return GLit::f();
            if (!p.isTrue()) lits.push_back(p.lit);
        }
        if (lits.empty()) return GLit::t();
        if (lits.size() == 1) return GLit::l(lits[0]);
        if (defCtx_) return defAux(true, lits);
        int d = freshAux(GroundAtom::Origin::Tseitin);
        if (pol >= 0)
            for (Lit l : lits) addClause({-d, l});
        if (pol <= 0) {
            std::vector<Lit> c;
            for (Lit l : lits) c.push_back(-l);
            c.push_back(d);
            addClause(std::move(c));
        }
        return GLit::l(d);
    }

    GLit glOr(std::vector<GLit> parts, int pol) {
        std::vector<Lit> lits;
        for (auto& p : parts) {
            if (p.isTrue()) return GLit::t();
            if (!p.isFalse()) lits.push_back(p.lit);
        }
        if (lits.empty()) return GLit::f();
        if (lits.size() == 1) return GLit::l(lits[0]);
        if (defCtx_) return defAux(false, lits);
        int d = freshAux(GroundAtom::Origin::Tseitin);
        if (pol >= 0) {
            std::vector<Lit> c{-d};
            for (Lit l : lits) c.push_back(l);
            addClause(std::move(c));
        }
        if (pol <= 0)
            for (Lit l : lits) addClause({-l, d});
        return GLit::l(d);
    }

    // auxiliary defined atom with a rule (incorporated into the current definition)
    GLit defAux(bool conj, std::vector<Lit> lits) {
        int d = freshAux(GroundAtom::Origin::Tseitin);
        defCtx_->rulesByHead[d].push_back({d, conj, std::move(lits)});
        defCtx_->info.definedAtoms.insert(d);
        return GLit::l(d);
    }

    // ---------------- term grounding ----------------

    struct TVal {
        enum class Kind { Value, Undefined, Open };
        Kind kind = Kind::Undefined;
        DomainElem value;
        // Open: some subterm is an unknown function application
        TermPtr term;  // the (ground) term containing it
    };

    struct Member {
        DomainElem value;
        GLit cond;
    };

    // Finds an innermost unknown function application in a ground term, if any.
    TermPtr findOpenCall(const TermPtr& t) {
        switch (t->kind) {
            case Term::Kind::Var:
            case Term::Kind::Elem: return nullptr;
            case Term::Kind::Agg: return nullptr;  // handled at comparison level
            case Term::Kind::FuncApp: {
                for (auto& a : t->args)
                    if (auto r = findOpenCall(a)) return r;
                // all arguments closed: is this application itself open?
                EvalResult r = evalTerm(t, I_);
                if (r.kind == EvalResult::Kind::Unknown) return t;
                return nullptr;
            }
        }
        return nullptr;
    }

    static TermPtr replaceOccurrence(const TermPtr& t, const TermPtr& target,
                                     const TermPtr& repl) {
        if (t.get() == target.get()) return repl;
        if (t->kind == Term::Kind::FuncApp) {
            std::vector<TermPtr> args;
            bool changed = false;
            for (auto& a : t->args) {
                TermPtr na = replaceOccurrence(a, target, repl);
                changed |= na.get() != a.get();
                args.push_back(na);
            }
            if (changed) return Term::mkFunc(t->symbol, std::move(args));
        }
        return t;
    }

    // Candidate images of an unknown function application.
    std::vector<DomainElem> imageCandidates(const SymbolPtr& f, const Tuple& input) {
        const auto* out = I_.typeTable(f->outType);
        if (!out)
            throw Error(Error::Kind::Domain,
                        "function '" + f->name + "' has a non-enumerable output type '" +
                            f->outType->name + "'; interpret it or bound the type");
        std::vector<DomainElem> cands;
        for (auto& v : *out) {
            Tuple g = input;
            g.push_back(v);
            if (I_.predTruth(f, g) != TruthValue::False) cands.push_back(v);
        }
        return cands;
    }

    bool containsAgg(const TermPtr& t) {
        if (t->kind == Term::Kind::Agg) return true;
        if (t->kind == Term::Kind::FuncApp)
            for (auto& a : t->args)
                if (containsAgg(a)) return true;
        return false;
    }

    // ---------------- formula grounding ----------------

    void assertSentence(const FormulaPtr& f0) {
        FormulaPtr f = f0;
        switch (f->kind) {
            case Formula::Kind::And:
                for (auto& g : f->subs) assertSentence(g);
                return;
            case Formula::Kind::Forall: {
                instantiate(f->vars, 0, f->body, {},
                            [&](const FormulaPtr& inst, const std::vector<GLit>& guards) {
                                // guards => inst
                                std::vector<GLit> parts;
                                for (auto& g : guards) parts.push_back(g.neg());
                                GLit gl = gndFormula(inst, +1);
                                parts.push_back(gl);
                                GLit whole = glOr(std::move(parts), +1);
                                assertGLit(whole);
                                return !G_.unsat;
                            });
                return;
            }
            case Formula::Kind::BoolConst:
                if (!f->boolVal) {
                    G_.unsat = true;
                    addClause({});
                }
                return;
            case Formula::Kind::Or: {
                std::vector<GLit> parts;
                bool sat = false;
                for (auto& g : f->subs) {
                    GLit gl = gndFormula(g, +1);
                    if (gl.isTrue()) { sat = true; break; }
                    parts.push_back(gl);
                }
                if (!sat) assertGLit(glOr(std::move(parts), +1));
                return;
            }
            default: assertGLit(gndFormula(f, +1)); return;
        }
    }

    void assertGLit(GLit g) {
        if (g.isTrue()) return;
        if (g.isFalse()) {
            G_.unsat = true;
            addClause({});
            return;
        }
        addClause({g.lit});
    }

    // Enumerates each variable over its type table or, for uninterpreted
    // subtypes, over the nearest interpreted ancestor with a membership guard.
    void instantiate(const std::vector<TypedVar>& vars, size_t idx, const FormulaPtr& body,
                     std::vector<GLit> guards,
                     const std::function<bool(const FormulaPtr&, const std::vector<GLit>&)>& emit) {
        if (idx == vars.size()) {
            emit(body, guards);
            return;
        }
        const TypedVar& v = vars[idx];
        const std::vector<DomainElem>* tab = v.type ? I_.typeTable(v.type) : nullptr;
        SymbolPtr guardType;
        if (!tab && v.type) {
            // climb to an interpreted ancestor
            SymbolPtr anc = v.type;
            std::function<SymbolPtr(const SymbolPtr&)> find =
                [&](const SymbolPtr& t) -> SymbolPtr {
                for (auto& up : t->type->supertypes) {
                    if (I_.typeTable(up)) return up;
                    if (auto r = find(up)) return r;
                }
                return nullptr;
            };
            anc = find(v.type);
            if (anc) {
                tab = I_.typeTable(anc);
                guardType = v.type;
            }
        }
        if (!tab)
            throw Error(Error::Kind::Domain,
                        "cannot ground variable '" + v.name + "' over type '" +
                            (v.type ? v.type->name : "?") +
                            "' (no finite interpretation)");
        for (auto& e : *tab) {
            std::vector<GLit> g = guards;
            if (guardType) {
                TruthValue m = I_.typeTruth(guardType, e);
                if (m == TruthValue::False) continue;
                if (m == TruthValue::Unknown) g.push_back(GLit::l(atomOf(guardType, {e})));
            }
            Binding b{{v.name, e}};
            FormulaPtr inst = substitute(body, b);
            instantiate(vars, idx + 1, inst, std::move(g), emit);
        }
    }

    GLit gndFormula(const FormulaPtr& f, int pol) {
        switch (f->kind) {
            case Formula::Kind::BoolConst: return f->boolVal ? GLit::t() : GLit::f();
            case Formula::Kind::Atom: return gndAtom(f, pol);
            case Formula::Kind::Cmp: return gndCmp(f->cmp, f->left, f->right, pol);
            case Formula::Kind::Not: return gndFormula(f->subs[0], -pol).neg();
            case Formula::Kind::And: {
                std::vector<GLit> parts;
                for (auto& g : f->subs) {
                    GLit gl = gndFormula(g, pol);
                    if (gl.isFalse()) return GLit::f();
                    parts.push_back(gl);
                }
                return glAnd(std::move(parts), pol);
            }
            case Formula::Kind::Or: {
                std::vector<GLit> parts;
                for (auto& g : f->subs) {
                    GLit gl = gndFormula(g, pol);
                    if (gl.isTrue()) return GLit::t();
                    parts.push_back(gl);
                }
                return glOr(std::move(parts), pol);
            }
            case Formula::Kind::Forall: {
                std::vector<GLit> parts;
                bool dead = false;
                instantiate(f->vars, 0, f->body, {},
                            [&](const FormulaPtr& inst, const std::vector<GLit>& guards) {
                                std::vector<GLit> ps;
                                for (auto& g : guards) ps.push_back(g.neg());
                                GLit gl = gndFormula(inst, pol);
                                ps.push_back(gl);
                                GLit whole = glOr(std::move(ps), pol);
                                if (whole.isFalse()) { dead = true; return false; }
                                parts.push_back(whole);
                                return true;
                            });
                if (dead) return GLit::f();
                return glAnd(std::move(parts), pol);
            }
            case Formula::Kind::Exists: {
                std::vector<GLit> parts;
                bool sat = false;
                instantiate(f->vars, 0, f->body, {},
                            [&](const FormulaPtr& inst, const std::vector<GLit>& guards) {
                                std::vector<GLit> ps = guards;
                                GLit gl = gndFormula(inst, pol);
                                ps.push_back(gl);
                                GLit whole = glAnd(std::move(ps), pol);
                                if (whole.isTrue()) { sat = true; return false; }
                                parts.push_back(whole);
                                return true;
                            });
                if (sat) return GLit::t();
                return glOr(std::move(parts), pol);
            }
            case Formula::Kind::ExtExists: {
                // count the satisfying instantiations: card >= / = ... bound
                std::vector<std::pair<long long, Lit>> wlits;
                long long baseCount = 0;
                instantiate(f->vars, 0, f->body, {},
                            [&](const FormulaPtr& inst, const std::vector<GLit>& guards) {
                                std::vector<GLit> ps = guards;
                                GLit gl = gndFormula(inst, 0);
                                ps.push_back(gl);
                                GLit whole = glAnd(std::move(ps), 0);
                                if (whole.isTrue()) ++baseCount;
                                else if (!whole.isFalse()) wlits.push_back({1, whole.lit});
                                return true;
                            });
                return reifyAgg(AggFn::Card, f->cmp, f->extBound - baseCount, std::move(wlits),
                                pol);
            }
            case Formula::Kind::Denotes: return gndDenotes(f->term, pol);
        }
        return GLit::t();
    }

    GLit gndAtom(const FormulaPtr& f, int pol) {
        // fast path: fully evaluable
        TruthValue direct = tryEvalAtom(f);
        if (direct == TruthValue::True) return GLit::t();
        if (direct == TruthValue::False) return GLit::f();
        // expand an innermost unknown function application if present
        for (auto& a : f->args) {
            if (containsAgg(a))
                throw Error(Error::Kind::Unsupported,
                            "aggregate terms are only supported in comparisons");
            if (TermPtr open = findOpenCall(a)) return expandOpenCall(f, open, pol);
        }
        // plain unknown atom over ground element arguments
        Tuple t;
        for (auto& a : f->args) {
            EvalResult r = evalTerm(a, I_);
            if (r.kind != EvalResult::Kind::Defined) return GLit::f();  // undefined -> false
            t.push_back(r.value);
        }
        return GLit::l(atomOf(f->pred, t));
    }

    // three-valued leaf evaluation; Unknown means "involves search atoms"
    TruthValue tryEvalAtom(const FormulaPtr& f) {
        try {
            return evalFormula(f, I_);
        } catch (const Error&) {
            return TruthValue::Unknown;
        }
    }

    GLit expandOpenCall(const FormulaPtr& atom, const TermPtr& open, int pol) {
        Tuple input;
        for (auto& a : open->args) {
            EvalResult r = evalTerm(a, I_);
            if (r.kind != EvalResult::Kind::Defined) return GLit::f();
            input.push_back(r.value);
        }
        std::vector<GLit> branches;
        for (auto& v : imageCandidates(open->symbol, input)) {
            Tuple g = input;
            g.push_back(v);
            GLit graphLit = GLit::l(atomOf(open->symbol, g));
            // rebuild the atom with the occurrence replaced by the value
            std::vector<TermPtr> args;
            for (auto& a : atom->args)
                args.push_back(replaceOccurrence(a, open, Term::mkElem(v)));
            FormulaPtr inst = atom->kind == Formula::Kind::Cmp
                                  ? Formula::mkCmp(atom->cmp, args[0], args[1])
                                  : Formula::mkAtom(atom->pred, std::move(args));
            GLit rest = gndFormula(inst, pol);
            branches.push_back(glAnd({graphLit, rest}, pol));
        }
        return glOr(std::move(branches), pol);
    }

    GLit gndDenotes(const TermPtr& t, int pol) {
        EvalResult r = evalTerm(t, I_);
        if (r.kind == EvalResult::Kind::Defined) return GLit::t();
        if (r.kind == EvalResult::Kind::Undefined) return GLit::f();
        if (TermPtr open = findOpenCall(t)) {
            Tuple input;
            for (auto& a : open->args) {
                EvalResult ar = evalTerm(a, I_);
                if (ar.kind != EvalResult::Kind::Defined) return GLit::f();
                input.push_back(ar.value);
            }
            std::vector<GLit> branches;
            for (auto& v : imageCandidates(open->symbol, input)) {
                Tuple g = input;
                g.push_back(v);
                GLit graphLit = GLit::l(atomOf(open->symbol, g));
                TermPtr rest = replaceOccurrence(t, open, Term::mkElem(v));
                branches.push_back(glAnd({graphLit, gndDenotes(rest, pol)}, pol));
            }
            return glOr(std::move(branches), pol);
        }
        return GLit::t();
    }

    // ---------------- comparisons and aggregates ----------------

    GLit gndCmp(CmpOp op, const TermPtr& left, const TermPtr& right, int pol) {
        bool la = containsAgg(left), ra = containsAgg(right);
        if (!la && !ra) {
            FormulaPtr atom = Formula::mkCmp(op, left, right);
            return gndAtom(atom, pol);
        }
        if (la && ra)
            throw Error(Error::Kind::Unsupported,
                        "comparisons between two aggregate terms are not supported");
        const TermPtr& aggSide = la ? left : right;
        const TermPtr& other = la ? right : left;
        CmpOp effOp = la ? op : cmpFlip(op);
        // evaluate the non-aggregate side; expand unknown functions in it
        EvalResult r = evalTerm(other, I_);
        if (r.kind == EvalResult::Kind::Undefined) return GLit::f();
        if (r.kind == EvalResult::Kind::Unknown) {
            TermPtr open = findOpenCall(other);
            if (!open)
                throw Error(Error::Kind::Unsupported, "cannot ground comparison bound");
            Tuple input;
            for (auto& a : open->args) {
                EvalResult ar = evalTerm(a, I_);
                if (ar.kind != EvalResult::Kind::Defined) return GLit::f();
                input.push_back(ar.value);
            }
            std::vector<GLit> branches;
            for (auto& v : imageCandidates(open->symbol, input)) {
                Tuple g = input;
                g.push_back(v);
                GLit graphLit = GLit::l(atomOf(open->symbol, g));
                TermPtr rest = replaceOccurrence(other, open, Term::mkElem(v));
                branches.push_back(glAnd({graphLit, gndCmp(effOp, aggSide, rest, pol)}, pol));
            }
            return glOr(std::move(branches), pol);
        }
        // bound known: peel arithmetic around the aggregate
        return gndAggCmp(effOp, aggSide, r.value, pol);
    }

    // agg-side cmp bound, where aggSide may be agg, agg+t, agg-t, t+agg, t-agg
    GLit gndAggCmp(CmpOp op, const TermPtr& aggSide, const DomainElem& bound, int pol) {
        if (aggSide->kind == Term::Kind::FuncApp) {
            const auto& bi = Builtins::get();
            const SymbolPtr& f = aggSide->symbol;
            if (f == bi.add || f == bi.sub) {
                bool leftAgg = containsAgg(aggSide->args[0]);
                const TermPtr& aggArg = leftAgg ? aggSide->args[0] : aggSide->args[1];
                const TermPtr& cArg = leftAgg ? aggSide->args[1] : aggSide->args[0];
                EvalResult cv = evalTerm(cArg, I_);
                if (cv.kind == EvalResult::Kind::Undefined) return GLit::f();
                if (cv.kind == EvalResult::Kind::Unknown) {
                    TermPtr open = findOpenCall(cArg);
                    if (!open)
                        throw Error(Error::Kind::Unsupported, "cannot ground aggregate term");
                    Tuple input;
                    for (auto& a : open->args) {
                        EvalResult ar = evalTerm(a, I_);
                        if (ar.kind != EvalResult::Kind::Defined) return GLit::f();
                        input.push_back(ar.value);
                    }
                    std::vector<GLit> branches;
                    for (auto& v : imageCandidates(open->symbol, input)) {
                        Tuple g = input;
                        g.push_back(v);
                        GLit graphLit = GLit::l(atomOf(open->symbol, g));
                        TermPtr rest = replaceOccurrence(aggSide, open, Term::mkElem(v));
                        branches.push_back(glAnd({graphLit, gndAggCmp(op, rest, bound, pol)}, pol));
                    }
                    return glOr(std::move(branches), pol);
                }
                if (!cv.value.isInt() || !bound.isInt()) return GLit::f();
                long long c = cv.value.num;
                if (f == bi.add) {
                    // agg + c  op  b  <=>  agg op b - c ; c + agg likewise
                    return gndAggCmp(op, aggArg, DomainElem::mkInt(bound.num - c), pol);
                }
                if (leftAgg) {
                    // agg - c op b <=> agg op b + c
                    return gndAggCmp(op, aggArg, DomainElem::mkInt(bound.num + c), pol);
                }
                // c - agg op b <=> agg flipped-op c - b
                return gndAggCmp(cmpFlip(op), aggArg, DomainElem::mkInt(c - bound.num), pol);
            }
            throw Error(Error::Kind::Unsupported,
                        "aggregates may only be combined with +/- in comparisons");
        }
        if (aggSide->kind != Term::Kind::Agg)
            throw Error(Error::Kind::Unsupported, "malformed aggregate comparison");
        return gndAggregate(aggSide->agg, aggSide->set, op, bound, pol);
    }

    GLit gndAggregate(AggFn fn, const SetExprPtr& set, CmpOp op, const DomainElem& bound,
                      int pol) {
        std::vector<Member> members;
        if (fn == AggFn::Card && set->tuple.empty()) {
            FormulaPtr marker = set->cond ? set->cond : Formula::mkBool(true);
            instantiate(set->boundVars, 0, marker, {},
                        [&](const FormulaPtr& inst, const std::vector<GLit>& guards) {
                            std::vector<GLit> ps = guards;
                            GLit cond = gndFormula(inst, 0);
                            ps.push_back(cond);
                            GLit whole = glAnd(std::move(ps), 0);
                            if (!whole.isFalse())
                                members.push_back({DomainElem::mkInt(1), whole});
                            return true;
                        });
            return finishAgg(fn, op, bound, std::move(members), pol);
        }
        std::vector<TypedVar> vars = set->boundVars;
        // represent (cond, value) by instantiating manually
        std::function<void(size_t, Binding&, std::vector<GLit>)> rec =
            [&](size_t idx, Binding& b, std::vector<GLit> guards) {
                if (idx == vars.size()) {
                    FormulaPtr inst =
                        set->cond ? substitute(set->cond, b) : Formula::mkBool(true);
                    std::vector<GLit> ps = guards;
                    GLit cond = gndFormula(inst, 0);
                    ps.push_back(cond);
                    GLit whole = glAnd(std::move(ps), 0);
                    if (whole.isFalse()) return;
                    // evaluate the value term; expand unknown functions
                    TermPtr vt = substitute(set->tuple.at(0), b);
                    emitMember(whole, vt, members);
                    return;
                }
                const TypedVar& v = vars[idx];
                const auto* tab = v.type ? I_.typeTable(v.type) : nullptr;
                SymbolPtr guardType;
                if (!tab && v.type) {
                    for (auto& up : v.type->type->supertypes)
                        if (I_.typeTable(up)) { tab = I_.typeTable(up); guardType = v.type; break; }
                }
                if (!tab)
                    throw Error(Error::Kind::Domain,
                                "cannot ground set variable '" + v.name + "'");
                for (auto& e : *tab) {
                    std::vector<GLit> g = guards;
                    if (guardType) {
                        TruthValue m = I_.typeTruth(guardType, e);
                        if (m == TruthValue::False) continue;
                        if (m == TruthValue::Unknown) g.push_back(GLit::l(atomOf(guardType, {e})));
                    }
                    b[v.name] = e;
                    rec(idx + 1, b, g);
                }
                b.erase(v.name);
            };
        Binding b;
        rec(0, b, {});
        return finishAgg(fn, op, bound, std::move(members), pol);
    }

    void emitMember(GLit cond, const TermPtr& valueTerm, std::vector<Member>& members) {
        EvalResult r = evalTerm(valueTerm, I_);
        if (r.kind == EvalResult::Kind::Defined) {
            members.push_back({r.value, cond});
            return;
        }
        if (r.kind == EvalResult::Kind::Undefined) return;  // excluded from the multiset
        TermPtr open = findOpenCall(valueTerm);
        if (!open)
            throw Error(Error::Kind::Unsupported, "cannot ground aggregate value term");
        Tuple input;
        for (auto& a : open->args) {
            EvalResult ar = evalTerm(a, I_);
            if (ar.kind != EvalResult::Kind::Defined) return;
            input.push_back(ar.value);
        }
        for (auto& v : imageCandidates(open->symbol, input)) {
            Tuple g = input;
            g.push_back(v);
            GLit graphLit = GLit::l(atomOf(open->symbol, g));
            GLit both = glAnd({cond, graphLit}, 0);
            TermPtr rest = replaceOccurrence(valueTerm, open, Term::mkElem(v));
            emitMember(both, rest, members);
        }
    }

    GLit finishAgg(AggFn fn, CmpOp op, const DomainElem& bound, std::vector<Member> members,
                   int pol) {
        if (fn == AggFn::Min || fn == AggFn::Max) return finishMinMax(fn, op, bound, members, pol);
        if (!bound.isInt())
            return cmpHolds(op, DomainElem::mkInt(0), bound) ? GLit::t() : GLit::f();
        long long base = fn == AggFn::Prod ? 1 : 0;
        std::vector<std::pair<long long, Lit>> wlits;
        std::vector<GLit> nonNumericGuards;
        for (auto& m : members) {
            if (fn != AggFn::Card && !m.value.isInt()) {
                // a non-numeric member makes sum/prod undefined, so the atom
                // is false whenever that member is in
                if (m.cond.isTrue()) return GLit::f();
                nonNumericGuards.push_back(m.cond.neg());
                continue;
            }
            long long w = fn == AggFn::Card ? 1 : m.value.num;
            if (fn == AggFn::Prod && w < 0)
                throw Error(Error::Kind::Unsupported,
                            "product aggregates need non-negative weights");
            if (m.cond.isTrue()) {
                if (fn == AggFn::Prod) base *= w;
                else base += w;
            } else {
                wlits.push_back({w, m.cond.lit});
            }
        }
        GLit core;
        if (fn == AggFn::Prod) {
            if (base != 1) wlits.push_back({base, trueLit()});
            core = reifyAgg(AggFn::Prod, op, bound.num, std::move(wlits), pol);
        } else {
            core = reifyAgg(fn == AggFn::Card ? AggFn::Card : AggFn::Sum, op, bound.num - base,
                            std::move(wlits), pol);
        }
        if (nonNumericGuards.empty()) return core;
        nonNumericGuards.push_back(core);
        return glAnd(std::move(nonNumericGuards), pol);
    }

    GLit finishMinMax(AggFn fn, CmpOp op, const DomainElem& bound, std::vector<Member>& members,
                      int pol) {
        // Eq and Neq split into the two order comparisons
        if (op == CmpOp::Eq)
            return glAnd({finishMinMax(fn, CmpOp::Leq, bound, members, pol),
                          finishMinMax(fn, CmpOp::Geq, bound, members, pol)},
                         pol);
        if (op == CmpOp::Neq)
            return finishMinMax(fn, CmpOp::Eq, bound, members, -pol).neg();
        // min(S) >= b  <=>  S nonempty and no member < b is in
        // min(S) =< b  <=>  some member =< b is in
        bool isMin = fn == AggFn::Min;
        CmpOp effOp = isMin ? op : cmpFlip(op);  // max mirrors min with flipped order
        auto memberBelow = [&](const Member& m, bool strict) {
            return strict ? cmpHolds(isMin ? CmpOp::Lt : CmpOp::Gt, m.value, bound)
                          : cmpHolds(isMin ? CmpOp::Leq : CmpOp::Geq, m.value, bound);
        };
        switch (effOp) {
            case CmpOp::Geq:
            case CmpOp::Gt: {
                std::vector<GLit> parts;
                std::vector<GLit> any;
                for (auto& m : members) any.push_back(m.cond);
                parts.push_back(glOr(std::move(any), pol));  // nonempty
                for (auto& m : members)
                    if (memberBelow(m, effOp == CmpOp::Geq)) parts.push_back(m.cond.neg());
                return glAnd(std::move(parts), pol);
            }
            case CmpOp::Leq:
            case CmpOp::Lt: {
                std::vector<GLit> parts;
                for (auto& m : members)
                    if (!memberBelow(m, effOp == CmpOp::Leq)) parts.push_back(m.cond);
                return glOr(std::move(parts), pol);
            }
            default: return GLit::f();
        }
    }

    GLit reifyAgg(AggFn fn, CmpOp op, long long bound, std::vector<std::pair<long long, Lit>> wlits,
                  int pol) {
        (void)pol;
        // constant folding when nothing is open
        if (wlits.empty()) {
            long long v = fn == AggFn::Prod ? 1 : 0;
            return cmpHoldsInt(op, v, bound) ? GLit::t() : GLit::f();
        }
        // interval check: already decided?
        long long lo = fn == AggFn::Prod ? 1 : 0, hi = lo;
        if (fn == AggFn::Prod) {
            for (auto& [w, l] : wlits) {
                (void)l;
                if (w == 0) lo = 0;
                else if (w > 1) hi *= w;
            }
        } else {
            for (auto& [w, l] : wlits) {
                (void)l;
                if (w < 0) lo += w;
                else hi += w;
            }
        }
        bool mayHold = false, mayFail = false;
        for (long long c : {lo, hi}) {
            if (cmpHoldsInt(op, c, bound)) mayHold = true;
            else mayFail = true;
        }
        if (op == CmpOp::Eq && !(lo == bound && hi == bound) && lo <= bound && bound <= hi)
            mayFail = true, mayHold = true;
        if (op == CmpOp::Neq && lo <= bound && bound <= hi) mayHold = true, mayFail = true;
        if (!mayFail && (op != CmpOp::Eq || (lo == bound && hi == bound))) return GLit::t();
        if (!mayHold) return GLit::f();
        int r = freshAux(GroundAtom::Origin::AggReif);
        G_.aggs.push_back({r, fn, op, bound, std::move(wlits)});
        return GLit::l(r);
    }

    // ---------------- definitions ----------------

    void groundDefinition(const DefinitionPtr& d) {
        DefinitionPtr dg = graphTranslate(d);
        GroundedDefRules rules = groundDefRules(*dg, I_);
        // remember the head universe of the defined symbols
        for (auto& s : d->definedSymbols()) {
            definedSyms_.insert(s);
            SymbolPtr key = s->isFunction() ? s->graphPred : s;
            if (rules.heads.count(key))
                for (auto& t : rules.heads[key]) definedHeads_[s].insert(t);
            else definedHeads_[s];
        }
        if (opts_.completionOnly) {
            for (auto& c : completion(d)) assertSentence(c);
            return;
        }
        DefCtx ctx;
        ctx.info.checkRules = rules.rules;
        defCtx_ = &ctx;
        for (auto& r : rules.rules) {
            int hid = atomOf(r.sym, r.args);
            ctx.info.definedAtoms.insert(hid);
            GLit body = gndFormula(r.body, 0);
            if (body.isFalse()) {
                ctx.rulesByHead[hid];  // head exists, this rule can never fire
                continue;
            }
            std::vector<Lit> lits;
            if (!body.isTrue()) lits.push_back(body.lit);
            ctx.rulesByHead[hid].push_back({hid, true, std::move(lits)});
        }
        defCtx_ = nullptr;
        // normalize to one rule per head and emit completion clauses
        for (auto& [head, hrules] : ctx.rulesByHead) {
            if (hrules.empty()) {
                // no applicable rule instance: certainly false
                addClause({-head});
                continue;
            }
            GroundRuleN norm;
            if (hrules.size() == 1) {
                norm = hrules[0];
            } else {
                norm.head = head;
                norm.conj = false;
                for (auto& hr : hrules) {
                    if (hr.body.empty() && hr.conj) {
                        // a fact rule: head is simply true
                        norm.body.push_back(trueLit());
                        continue;
                    }
                    if (hr.body.size() == 1 && hr.conj) {
                        norm.body.push_back(hr.body[0]);
                        continue;
                    }
                    // reify the rule body as an auxiliary defined atom
                    int b = freshAux(GroundAtom::Origin::Tseitin);
                    ctx.info.definedAtoms.insert(b);
                    ctx.info.rules.push_back({b, hr.conj, hr.body});
                    emitRuleCompletion({b, hr.conj, hr.body});
                    norm.body.push_back(b);
                }
            }
            ctx.info.rules.push_back(norm);
            emitRuleCompletion(norm);
        }
        // structure knowledge about defined atoms becomes units
        for (auto& [head, hrules] : ctx.rulesByHead) {
            const GroundAtom& a = G_.atoms[head];
            if (!a.sym) continue;
            TruthValue v = I_.predTruth(a.sym->isFunction() ? a.sym : a.sym, a.tuple);
            if (v == TruthValue::True) addClause({head});
            if (v == TruthValue::False) addClause({-head});
        }
        G_.defs.push_back(std::move(ctx.info));
    }

    void emitRuleCompletion(const GroundRuleN& r) {
        if (r.conj) {
            // head <=> AND(body)
            for (Lit l : r.body) addClause({-r.head, l});
            std::vector<Lit> c;
            for (Lit l : r.body) c.push_back(-l);
            c.push_back(r.head);
            addClause(std::move(c));
        } else {
            std::vector<Lit> c{-r.head};
            for (Lit l : r.body) c.push_back(l);
            addClause(std::move(c));
            for (Lit l : r.body) addClause({-l, r.head});
        }
    }

    // ---------------- objective ----------------

    void groundObjective(const TermPtr& t) {
        G_.hasObjective = true;
        addObjectiveTerm(t, 1);
    }

    void addObjectiveTerm(const TermPtr& t, long long coef) {
        const auto& bi = Builtins::get();
        EvalResult r = evalTerm(t, I_);
        if (r.kind == EvalResult::Kind::Defined) {
            if (!r.value.isInt())
                throw Error(Error::Kind::Unsupported, "objective must be integer-valued");
            G_.objectiveBase += coef * r.value.num;
            return;
        }
        if (t->kind == Term::Kind::FuncApp && (t->symbol == bi.add || t->symbol == bi.sub)) {
            addObjectiveTerm(t->args[0], coef);
            addObjectiveTerm(t->args[1], t->symbol == bi.add ? coef : -coef);
            return;
        }
        if (t->kind == Term::Kind::Agg) {
            if (t->agg != AggFn::Card && t->agg != AggFn::Sum)
                throw Error(Error::Kind::Unsupported,
                            "objective aggregates must be sums or cardinalities");
            std::vector<Member> members;
            std::function<void(size_t, Binding&, std::vector<GLit>)> rec =
                [&](size_t idx, Binding& b, std::vector<GLit> guards) {
                    if (idx == t->set->boundVars.size()) {
                        FormulaPtr inst =
                            t->set->cond ? substitute(t->set->cond, b) : Formula::mkBool(true);
                        std::vector<GLit> ps = guards;
                        GLit cond = gndFormula(inst, 0);
                        ps.push_back(cond);
                        GLit whole = glAnd(std::move(ps), 0);
                        if (whole.isFalse()) return;
                        if (t->agg == AggFn::Card && t->set->tuple.empty()) {
                            members.push_back({DomainElem::mkInt(1), whole});
                        } else {
                            TermPtr vt = substitute(t->set->tuple.at(0), b);
                            emitMember(whole, vt, members);
                        }
                    } else {
                        const TypedVar& v = t->set->boundVars[idx];
                        const auto* tab = v.type ? I_.typeTable(v.type) : nullptr;
                        if (!tab)
                            throw Error(Error::Kind::Domain,
                                        "cannot ground objective variable '" + v.name + "'");
                        for (auto& e : *tab) {
                            b[v.name] = e;
                            rec(idx + 1, b, guards);
                        }
                        b.erase(v.name);
                    }
                };
            Binding b;
            rec(0, b, {});
            for (auto& m : members) {
                long long w = t->agg == AggFn::Card ? 1 : m.value.num;
                if (t->agg == AggFn::Sum && !m.value.isInt())
                    throw Error(Error::Kind::Unsupported, "objective sum over non-integers");
                if (m.cond.isTrue()) G_.objectiveBase += coef * w;
                else G_.objective.push_back({coef * w, m.cond.lit});
            }
            return;
        }
        if (TermPtr open = findOpenCall(t)) {
            // f(d): sum over candidate images v of v * graphLit
            if (open.get() != t.get())
                throw Error(Error::Kind::Unsupported,
                            "objective terms may nest functions only under +/-");
            Tuple input;
            for (auto& a : open->args) {
                EvalResult ar = evalTerm(a, I_);
                if (ar.kind != EvalResult::Kind::Defined)
                    throw Error(Error::Kind::Unsupported, "objective argument undefined");
                input.push_back(ar.value);
            }
            for (auto& v : imageCandidates(open->symbol, input)) {
                if (!v.isInt())
                    throw Error(Error::Kind::Unsupported, "objective over non-integer function");
                Tuple g = input;
                g.push_back(v);
                G_.objective.push_back({coef * v.num, atomOf(open->symbol, g)});
            }
            return;
        }
        throw Error(Error::Kind::Unsupported, "cannot ground objective term");
    }

    // ---------------- materialization and closure ----------------

    void materializeUnknowns() {
        for (auto& sym : T_->voc->symbols) {
            if (sym->builtin || sym->derivedBase || sym->constructorOf || sym->isType()) continue;
            if (definedSyms_.count(sym)) continue;
            if (sym->isFunction()) materializeFunction(sym);
            else materializePredicate(sym);
        }
        // open subtypes referenced by guard atoms: subset constraints
        for (auto& [key, id] : G_.index) {
            if (!key.sym->isType()) continue;
            for (auto& super : key.sym->type->supertypes) {
                TruthValue m = I_.typeTruth(super, key.tuple[0]);
                if (m == TruthValue::False) addClause({-id});
            }
        }
    }

    void materializePredicate(const SymbolPtr& sym) {
        if (I_.twoValuedOn(sym)) return;
        auto space = I_.tupleSpace(sym);
        if (!space)
            throw Error(Error::Kind::Domain,
                        "cannot materialize '" + sym->name +
                            "': argument types have no finite interpretation");
        for (auto& t : *space)
            if (I_.predTruth(sym, t) == TruthValue::Unknown) atomOf(sym, t);
    }

    void materializeFunction(const SymbolPtr& sym) {
        if (I_.twoValuedOn(sym)) return;
        std::vector<Tuple> inputs{{}};
        for (auto& ty : sym->argTypes) {
            const auto* tab = I_.typeTable(ty);
            if (!tab)
                throw Error(Error::Kind::Domain,
                            "cannot materialize function '" + sym->name +
                                "': argument type '" + ty->name + "' not enumerable");
            std::vector<Tuple> next;
            for (auto& pre : inputs)
                for (auto& e : *tab) {
                    Tuple ext = pre;
                    ext.push_back(e);
                    next.push_back(ext);
                }
            inputs = std::move(next);
        }
        for (auto& in : inputs) {
            if (!I_.funcImages(sym, in).empty()) continue;  // image already known
            if (I_.funcDefined(sym, in) == TruthValue::False) continue;
            auto cands = imageCandidates(sym, in);
            std::vector<Lit> atLeast;
            for (auto& v : cands) {
                Tuple g = in;
                g.push_back(v);
                atLeast.push_back(atomOf(sym, g));
            }
            // at most one image
            for (size_t i = 0; i < atLeast.size(); ++i)
                for (size_t j = i + 1; j < atLeast.size(); ++j)
                    addClause({-atLeast[i], -atLeast[j]});
            if (!sym->partial) {
                if (atLeast.empty()) {
                    G_.unsat = true;
                    addClause({});
                } else {
                    addClause(std::move(atLeast));
                }
            }
        }
    }

    void closeDefined() {
        for (auto& [sym, heads] : definedHeads_) {
            // existing atoms of the symbol outside the head universe are false
            for (auto& [key, id] : G_.index) {
                if (key.sym != sym) continue;
                if (!heads.count(key.tuple)) addClause({-id});
            }
            // remember the closure for model reconstruction
            auto space = I_.tupleSpace(sym);
            if (space) {
                for (auto& t : *space)
                    if (!heads.count(t) && I_.predTruth(sym, t) == TruthValue::Unknown)
                        G_.closedFalse.push_back({sym, t});
            }
        }
    }
};

}  // namespace

GroundTheory ground(const TheoryPtr& T, const PartialStructure& I, const TermPtr& objective,
                    const GroundOptions& opts) {
    Grounder g(T, I, opts);
    GroundTheory out = g.run(objective);
    out.lossyCompletionOnly = opts.completionOnly;
    return out;
}

// ---------------------------------------------------------------------------
// Symmetry detection and breaking
// ---------------------------------------------------------------------------

namespace {

DomainElem swapElem(const DomainElem& e, const DomainElem& a, const DomainElem& b) {
    if (e == a) return b;
    if (e == b) return a;
    if (e.kind == DomainElem::Kind::Cons) {
        std::vector<DomainElem> args;
        for (auto& x : e.args) args.push_back(swapElem(x, a, b));
        return DomainElem::mkCons(e.cons, std::move(args));
    }
    return e;
}

Tuple swapTuple(const Tuple& t, const DomainElem& a, const DomainElem& b) {
    Tuple out;
    for (auto& e : t) out.push_back(swapElem(e, a, b));
    return out;
}

bool structureInvariant(const PartialStructure& I, const DomainElem& a, const DomainElem& b) {
    for (auto& [type, tab] : I.typeTables()) {
        std::set<DomainElem> orig(tab.begin(), tab.end());
        std::set<DomainElem> swapped;
        for (auto& e : tab) swapped.insert(swapElem(e, a, b));
        if (orig != swapped) return false;
    }
    for (auto& [sym, tab] : I.tables()) {
        TupleSet ct, cf;
        for (auto& t : tab.ct) ct.insert(swapTuple(t, a, b));
        for (auto& t : tab.cf) cf.insert(swapTuple(t, a, b));
        if (ct != tab.ct || cf != tab.cf) return false;
    }
    return true;
}

}  // namespace

std::vector<SymmetryClass> detectSymmetries(const TheoryPtr& T, const PartialStructure& I,
                                            const TermPtr& objective) {
    // elements mentioned in the theory are not interchangeable
    std::set<DomainElem> constants;
    for (auto& s : T->sentences) collectElems(s, constants);
    for (auto& d : T->definitions)
        for (auto& r : d->rules) {
            for (auto& a : r.headArgs) collectElems(a, constants);
            if (r.headValue) collectElems(r.headValue, constants);
            if (r.body) collectElems(r.body, constants);
        }
    if (objective) collectElems(objective, constants);

    std::vector<SymmetryClass> out;
    for (auto& [type, tab] : I.typeTables()) {
        if (type->type->constructed) continue;
        std::vector<DomainElem> elems;
        for (auto& e : tab)
            if (!constants.count(e)) elems.push_back(e);
        // group by pairwise swap invariance (transitive for permutation groups)
        std::vector<std::vector<DomainElem>> classes;
        for (auto& e : elems) {
            bool placed = false;
            for (auto& cls : classes) {
                if (structureInvariant(I, cls.front(), e)) {
                    cls.push_back(e);
                    placed = true;
                    break;
                }
            }
            if (!placed) classes.push_back({e});
        }
        for (auto& cls : classes)
            if (cls.size() >= 2) out.push_back({type, cls});
    }
    return out;
}

void breakSymmetries(GroundTheory& G, const std::vector<SymmetryClass>& classes) {
    G.classes = classes;
    for (auto& cls : classes) {
        for (size_t k = 0; k + 1 < cls.elems.size(); ++k) {
            const DomainElem& a = cls.elems[k];
            const DomainElem& b = cls.elems[k + 1];
            // atom transposition induced by swapping a and b
            std::vector<std::pair<int, int>> pairs;
            std::set<int> seen;
            for (auto& [key, id] : G.index) {
                if (seen.count(id)) continue;
                Tuple swapped = swapTuple(key.tuple, a, b);
                if (swapped == key.tuple) continue;
                auto it = G.index.find({key.sym, swapped});
                if (it == G.index.end()) continue;  // partner fixed by the structure
                pairs.push_back({id, it->second});
                seen.insert(id);
                seen.insert(it->second);
            }
            if (pairs.empty()) continue;
            G.generators.push_back(pairs);
            // lex-leader: assignment <=_lex swapped assignment
            int prevEq = 0;  // 0 means "true so far"
            for (size_t j = 0; j < pairs.size(); ++j) {
                auto [p, q] = pairs[j];
                if (prevEq == 0) {
                    G.clauses.push_back({{-p, q}});
                } else {
                    G.clauses.push_back({{-prevEq, -p, q}});
                }
                if (j + 1 == pairs.size()) break;
                int y = static_cast<int>(G.atoms.size());
                GroundAtom aux;
                aux.id = y;
                aux.origin = GroundAtom::Origin::Tseitin;
                G.atoms.push_back(aux);
                // y <= prevEq & (p <=> q)
                if (prevEq == 0) {
                    G.clauses.push_back({{y, -p, -q}});
                    G.clauses.push_back({{y, p, q}});
                } else {
                    G.clauses.push_back({{y, -prevEq, -p, -q}});
                    G.clauses.push_back({{y, -prevEq, p, q}});
                }
                prevEq = y;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Exports
// ---------------------------------------------------------------------------

std::string toCnf(const GroundTheory& G) {
    for (auto& d : G.defs)
        if (!d.rules.empty())
            throw Error(Error::Kind::Unsupported,
                        "CNF export needs a rule-free grounding (use completion-only mode)");
    if (!G.aggs.empty())
        throw Error(Error::Kind::Unsupported, "CNF export cannot express aggregates");
    std::ostringstream out;
    size_t n = G.clauses.size() + (G.unsat ? 0 : 0);
    out << "p cnf " << G.numAtoms() << " " << n << "\n";
    for (auto& c : G.clauses) {
        for (Lit l : c.lits) out << l << " ";
        out << "0\n";
    }
    return out.str();
}

std::string toText(const GroundTheory& G) {
    std::ostringstream out;
    out << "c kbforge ground theory\n";
    for (size_t i = 1; i < G.atoms.size(); ++i) {
        const GroundAtom& a = G.atoms[i];
        if (a.origin == GroundAtom::Origin::SymbolTuple) {
            out << "ATOM " << a.id << " " << a.sym->name;
            if (!a.tuple.empty()) out << tupleStr(a.tuple);
            out << "\n";
        }
    }
    for (auto& c : G.clauses) {
        out << "CLAUSE";
        for (Lit l : c.lits) out << " " << l;
        out << "\n";
    }
    for (size_t d = 0; d < G.defs.size(); ++d) {
        out << "DEF " << d << "\n";
        for (auto& r : G.defs[d].rules) {
            out << "RULE " << r.head << " <- " << (r.conj ? "AND" : "OR");
            for (Lit l : r.body) out << " " << l;
            out << "\n";
        }
    }
    for (auto& a : G.aggs) {
        out << "AGG " << a.reif << " <=> " << aggName(a.fn) << " " << cmpName(a.cmp) << " "
            << a.bound << " :";
        for (auto& [w, l] : a.wlits) out << " (" << w << "," << l << ")";
        out << "\n";
    }
    if (G.hasObjective) {
        out << "MIN " << G.objectiveBase << " :";
        for (auto& [w, l] : G.objective) out << " (" << w << "," << l << ")";
        out << "\n";
    }
    return out.str();
}

GroundTheory fromText(const std::string& text) {
    GroundTheory G;
    G.atoms.push_back({});
    std::istringstream in(text);
    std::string line;
    int currentDef = -1;
    auto ensureAtom = [&](int id) {
        while (G.numAtoms() < id) {
            GroundAtom a;
            a.id = static_cast<int>(G.atoms.size());
            a.origin = GroundAtom::Origin::Tseitin;
            G.atoms.push_back(a);
        }
    };
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw)) continue;
        if (kw == "c") continue;
        if (kw == "ATOM") {
            int id;
            std::string name;
            ls >> id >> name;
            ensureAtom(id);
            G.atoms[id].origin = GroundAtom::Origin::SymbolTuple;
            continue;
        }
        if (kw == "CLAUSE") {
            GroundClause c;
            int l;
            while (ls >> l) {
                ensureAtom(std::abs(l));
                c.lits.push_back(l);
            }
            G.clauses.push_back(std::move(c));
            continue;
        }
        if (kw == "DEF") {
            int d;
            ls >> d;
            currentDef = d;
            while ((int)G.defs.size() <= d) G.defs.push_back({});
            continue;
        }
        if (kw == "RULE") {
            GroundRuleN r;
            std::string arrow, kind;
            ls >> r.head >> arrow >> kind;
            r.conj = kind == "AND";
            int l;
            while (ls >> l) {
                ensureAtom(std::abs(l));
                r.body.push_back(l);
            }
            ensureAtom(r.head);
            if (currentDef < 0) {
                currentDef = 0;
                if (G.defs.empty()) G.defs.push_back({});
            }
            G.defs[currentDef].definedAtoms.insert(r.head);
            G.defs[currentDef].rules.push_back(std::move(r));
            continue;
        }
        if (kw == "AGG") {
            GroundAgg a;
            std::string arrow, fn, cmp, colon;
            ls >> a.reif >> arrow >> fn >> cmp >> a.bound >> colon;
            ensureAtom(std::abs(a.reif));
            a.fn = fn == "#" ? AggFn::Card
               : fn == "sum" ? AggFn::Sum
               : fn == "prod" ? AggFn::Prod
               : fn == "min" ? AggFn::Min
                             : AggFn::Max;
            for (CmpOp op : {CmpOp::Eq, CmpOp::Neq, CmpOp::Lt, CmpOp::Gt, CmpOp::Leq, CmpOp::Geq})
                if (cmp == cmpName(op)) a.cmp = op;
            std::string pair;
            while (ls >> pair) {
                long long w;
                int l;
                if (sscanf(pair.c_str(), "(%lld,%d)", &w, &l) == 2) {
                    ensureAtom(std::abs(l));
                    a.wlits.push_back({w, l});
                }
            }
            G.aggs.push_back(std::move(a));
            continue;
        }
        if (kw == "MIN") {
            G.hasObjective = true;
            std::string colon;
            ls >> G.objectiveBase >> colon;
            std::string pair;
            while (ls >> pair) {
                long long w;
                int l;
                if (sscanf(pair.c_str(), "(%lld,%d)", &w, &l) == 2) {
                    ensureAtom(std::abs(l));
                    G.objective.push_back({w, l});
                }
            }
            continue;
        }
        throw Error(Error::Kind::Parse, "unknown ground-format line '" + kw + "'");
    }
    return G;
}

PartialStructurePtr reconstruct(const GroundTheory& G, const PartialStructure& I,
                                const std::vector<signed char>& model) {
    auto out = I.clone();
    for (size_t i = 1; i < G.atoms.size(); ++i) {
        const GroundAtom& a = G.atoms[i];
        if (a.origin != GroundAtom::Origin::SymbolTuple || !a.sym) continue;
        if (a.sym->isType()) {
            // membership atoms of open subtypes are folded into type tables
            if (model[i] > 0) {
                auto tab = out->typeTable(a.sym);
                std::vector<DomainElem> elems = tab ? *tab : std::vector<DomainElem>{};
                elems.push_back(a.tuple[0]);
                out->setTypeTable(a.sym, std::move(elems));
            }
            continue;
        }
        SymbolTable& tab = out->tableMut(a.sym);
        if (model[i] > 0) tab.ct.insert(a.tuple);
        else tab.cf.insert(a.tuple);
    }
    for (auto& [sym, tuple] : G.closedFalse) out->tableMut(sym).cf.insert(tuple);
    out->finalize();
    return out;
}

}  // namespace kbf
