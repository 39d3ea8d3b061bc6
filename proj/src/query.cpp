#include "kbf/query.hpp"

#include <algorithm>

namespace kbf {

namespace {

const std::vector<DomainElem>& varTable(const StructureView& I, const TypedVar& v) {
    if (!v.type)
        throw Error(Error::Kind::Internal, "untyped variable '" + v.name + "' in evaluation");
    const auto* tab = I.typeTable(v.type);
    if (!tab)
        throw Error(Error::Kind::Domain, "cannot enumerate variable '" + v.name + "' over type '" +
                                             v.type->name + "' (no finite interpretation)");
    return *tab;
}

// One element of an aggregate's multiset, as far as it is known.
struct AggContribution {
    TruthValue cond;   // True or Unknown (False ones are dropped)
    EvalResult value;  // for card over {x:phi}: Defined(1)
};

// Collects the contributions of a set expression; cond==False assignments are
// skipped, tuples with an undefined term are excluded entirely.
bool collectSet(const SetExprPtr& set, const StructureView& I, Binding& b, size_t idx,
                bool needValue, std::vector<AggContribution>& out) {
    if (idx == set->boundVars.size()) {
        TruthValue c = set->cond ? evalFormula(set->cond, I, b) : TruthValue::True;
        if (c == TruthValue::False) return true;
        AggContribution contrib;
        contrib.cond = c;
        if (needValue) {
            contrib.value = evalTerm(set->tuple.at(0), I, b);
            if (contrib.value.kind == EvalResult::Kind::Undefined) return true;  // excluded
        } else {
            // multiset of tuples: every listed term must denote
            for (auto& t : set->tuple) {
                EvalResult r = evalTerm(t, I, b);
                if (r.kind == EvalResult::Kind::Undefined) return true;
                if (r.kind == EvalResult::Kind::Unknown) {
                    contrib.value = EvalResult::unknown();
                    out.push_back(contrib);
                    return true;
                }
            }
            contrib.value = EvalResult::defined(DomainElem::mkInt(1));
        }
        out.push_back(contrib);
        return true;
    }
    const auto& tab = varTable(I, set->boundVars[idx]);
    for (auto& e : tab) {
        b[set->boundVars[idx].name] = e;
        if (!collectSet(set, I, b, idx + 1, needValue, out)) return false;
    }
    b.erase(set->boundVars[idx].name);
    return true;
}

bool aggNeedsValue(AggFn fn) { return fn != AggFn::Card; }

// Интервал-style three-valued comparison of an aggregate against a constant.
TruthValue evalAggCmpConst(AggFn fn, const SetExprPtr& set, CmpOp op, const DomainElem& bound,
                           const StructureView& I, const Binding& outer);

}  // namespace

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

EvalResult evalTerm(const TermPtr& t, const StructureView& I, const Binding& b) {
    switch (t->kind) {
        case Term::Kind::Var: {
            auto it = b.find(t->var);
            if (it == b.end())
                throw Error(Error::Kind::Input, "unbound variable '" + t->var + "'");
            return EvalResult::defined(it->second);
        }
        case Term::Kind::Elem: return EvalResult::defined(t->elem);
        case Term::Kind::FuncApp: {
            const auto& bi = Builtins::get();
            std::vector<EvalResult> args;
            args.reserve(t->args.size());
            bool unknown = false;
            for (auto& a : t->args) {
                EvalResult r = evalTerm(a, I, b);
                if (r.kind == EvalResult::Kind::Undefined) return EvalResult::undefined();
                if (r.kind == EvalResult::Kind::Unknown) unknown = true;
                args.push_back(std::move(r));
            }
            if (unknown) return EvalResult::unknown();
            const SymbolPtr& f = t->symbol;
            // builtin arithmetic
            if (f == bi.add || f == bi.sub || f == bi.mul || f == bi.divi || f == bi.mod) {
                if (!args[0].value.isInt() || !args[1].value.isInt()) return EvalResult::undefined();
                long long x = args[0].value.num, y = args[1].value.num;
                if (f == bi.add) return EvalResult::defined(DomainElem::mkInt(x + y));
                if (f == bi.sub) return EvalResult::defined(DomainElem::mkInt(x - y));
                if (f == bi.mul) return EvalResult::defined(DomainElem::mkInt(x * y));
                if (y == 0) return EvalResult::undefined();  // division and modulo are partial
                if (f == bi.divi) return EvalResult::defined(DomainElem::mkInt(x / y));
                return EvalResult::defined(DomainElem::mkInt(x % y));
            }
            // per-type min/max/pred/succ
            if (f->builtin && f->outType) {
                const auto& ti = *f->outType->type;
                if (f == ti.minFn || f == ti.maxFn) {
                    const auto* tab = I.typeTable(f->outType);
                    if (!tab) return EvalResult::unknown();
                    if (tab->empty()) return EvalResult::undefined();
                    return EvalResult::defined(f == ti.minFn ? tab->front() : tab->back());
                }
                if (f == ti.predFn || f == ti.succFn) {
                    const auto* tab = I.typeTable(f->outType);
                    if (!tab) return EvalResult::unknown();
                    auto it = std::lower_bound(tab->begin(), tab->end(), args[0].value);
                    if (it == tab->end() || *it != args[0].value) return EvalResult::undefined();
                    if (f == ti.predFn)
                        return it == tab->begin() ? EvalResult::undefined()
                                                  : EvalResult::defined(*std::prev(it));
                    return std::next(it) == tab->end() ? EvalResult::undefined()
                                                       : EvalResult::defined(*std::next(it));
                }
            }
            // argument type guard
            for (size_t i = 0; i < args.size(); ++i) {
                TruthValue m = I.typeTruth(f->argTypes[i], args[i].value);
                if (m == TruthValue::False) return EvalResult::undefined();
                if (m == TruthValue::Unknown) return EvalResult::unknown();
            }
            // constructors build their own value
            if (f->constructorOf) {
                Tuple vals;
                for (auto& a : args) vals.push_back(a.value);
                return EvalResult::defined(DomainElem::mkCons(f, std::move(vals)));
            }
            Tuple input;
            for (auto& a : args) input.push_back(a.value);
            auto images = I.funcImages(f, input);
            if (!images.empty()) return EvalResult::defined(images.front());
            TruthValue def = I.funcDefined(f, input);
            if (def == TruthValue::False) return EvalResult::undefined();
            return EvalResult::unknown();
        }
        case Term::Kind::Agg: {
            std::vector<AggContribution> contribs;
            Binding local = b;
            collectSet(t->set, I, local, 0, aggNeedsValue(t->agg), contribs);
            bool exact = true;
            for (auto& c : contribs)
                if (c.cond != TruthValue::True || !c.value.isDefined()) exact = false;
            if (!exact) return EvalResult::unknown();
            switch (t->agg) {
                case AggFn::Card:
                    return EvalResult::defined(DomainElem::mkInt((long long)contribs.size()));
                case AggFn::Sum: {
                    long long s = 0;
                    for (auto& c : contribs) {
                        if (!c.value.value.isInt()) return EvalResult::undefined();
                        s += c.value.value.num;
                    }
                    return EvalResult::defined(DomainElem::mkInt(s));
                }
                case AggFn::Prod: {
                    long long p = 1;
                    for (auto& c : contribs) {
                        if (!c.value.value.isInt()) return EvalResult::undefined();
                        p *= c.value.value.num;
                    }
                    return EvalResult::defined(DomainElem::mkInt(p));
                }
                case AggFn::Min:
                case AggFn::Max: {
                    if (contribs.empty()) return EvalResult::undefined();
                    DomainElem best = contribs[0].value.value;
                    for (auto& c : contribs) {
                        if (t->agg == AggFn::Min ? c.value.value < best : best < c.value.value)
                            best = c.value.value;
                    }
                    return EvalResult::defined(best);
                }
            }
            return EvalResult::unknown();
        }
    }
    return EvalResult::unknown();
}

// ---------------------------------------------------------------------------
// Formulas
// ---------------------------------------------------------------------------

namespace {

TruthValue evalQuant(const FormulaPtr& f, const StructureView& I, Binding& b, size_t idx,
                     bool forall) {
    if (idx == f->vars.size()) return evalFormula(f->body, I, b);
    const auto& tab = varTable(I, f->vars[idx]);
    TruthValue acc = forall ? TruthValue::True : TruthValue::False;
    for (auto& e : tab) {
        b[f->vars[idx].name] = e;
        TruthValue v = evalQuant(f, I, b, idx + 1, forall);
        acc = forall ? tvAnd(acc, v) : tvOr(acc, v);
        if ((forall && acc == TruthValue::False) || (!forall && acc == TruthValue::True)) break;
    }
    b.erase(f->vars[idx].name);
    return acc;
}

void countExt(const FormulaPtr& f, const StructureView& I, Binding& b, size_t idx, long long& nTrue,
              long long& nUnknown) {
    if (idx == f->vars.size()) {
        TruthValue v = evalFormula(f->body, I, b);
        if (v == TruthValue::True) ++nTrue;
        else if (v == TruthValue::Unknown) ++nUnknown;
        return;
    }
    const auto& tab = varTable(I, f->vars[idx]);
    for (auto& e : tab) {
        b[f->vars[idx].name] = e;
        countExt(f, I, b, idx + 1, nTrue, nUnknown);
    }
    b.erase(f->vars[idx].name);
}

// Could a count in [lo,hi] satisfy / fail `count op k`?
TruthValue cmpCountInterval(CmpOp op, long long lo, long long hi, long long k) {
    auto holds = [&](long long c) { return cmpHoldsInt(op, c, k); };
    bool any = false, all = true;
    switch (op) {
        case CmpOp::Eq:
            any = lo <= k && k <= hi;
            all = lo == k && hi == k;
            break;
        case CmpOp::Neq:
            any = !(lo == k && hi == k);
            all = k < lo || hi < k;
            break;
        default:
            any = holds(lo) || holds(hi);
            all = holds(lo) && holds(hi);
            break;
    }
    if (all) return TruthValue::True;
    if (!any) return TruthValue::False;
    return TruthValue::Unknown;
}

bool isAggTerm(const TermPtr& t) { return t->kind == Term::Kind::Agg; }

}  // namespace

TruthValue evalFormula(const FormulaPtr& f, const StructureView& I, const Binding& b) {
    switch (f->kind) {
        case Formula::Kind::BoolConst: return tvFromBool(f->boolVal);
        case Formula::Kind::Atom: {
            std::vector<DomainElem> vals;
            bool unknown = false;
            for (auto& a : f->args) {
                EvalResult r = evalTerm(a, I, b);
                if (r.kind == EvalResult::Kind::Undefined) return TruthValue::False;
                if (r.kind == EvalResult::Kind::Unknown) unknown = true;
                else vals.push_back(r.value);
            }
            if (unknown) return TruthValue::Unknown;
            // argument type guard: out-of-type tuples are false
            if (!f->pred->isType() && !f->pred->builtin) {
                const auto& argTypes = f->pred->argTypes;
                for (size_t i = 0; i < vals.size() && i < argTypes.size(); ++i) {
                    TruthValue m = I.typeTruth(argTypes[i], vals[i]);
                    if (m == TruthValue::False) return TruthValue::False;
                    if (m == TruthValue::Unknown) return TruthValue::Unknown;
                }
            }
            return I.predTruth(f->pred, vals);
        }
        case Formula::Kind::Cmp: {
            // aggregate comparisons get interval reasoning on partial data
            if (isAggTerm(f->left) || isAggTerm(f->right)) {
                const TermPtr& aggT = isAggTerm(f->left) ? f->left : f->right;
                const TermPtr& other = isAggTerm(f->left) ? f->right : f->left;
                if (!isAggTerm(other)) {
                    EvalResult r = evalTerm(other, I, b);
                    if (r.kind == EvalResult::Kind::Undefined) return TruthValue::False;
                    if (r.kind == EvalResult::Kind::Defined) {
                        CmpOp op = isAggTerm(f->left) ? f->cmp : cmpFlip(f->cmp);
                        return evalAggCmpConst(aggT->agg, aggT->set, op, r.value, I, b);
                    }
                }
            }
            EvalResult l = evalTerm(f->left, I, b);
            EvalResult r = evalTerm(f->right, I, b);
            if (l.kind == EvalResult::Kind::Undefined || r.kind == EvalResult::Kind::Undefined)
                return TruthValue::False;
            if (l.kind == EvalResult::Kind::Unknown || r.kind == EvalResult::Kind::Unknown)
                return TruthValue::Unknown;
            return tvFromBool(cmpHolds(f->cmp, l.value, r.value));
        }
        case Formula::Kind::Not: return tvNot(evalFormula(f->subs[0], I, b));
        case Formula::Kind::And: {
            TruthValue acc = TruthValue::True;
            for (auto& g : f->subs) {
                acc = tvAnd(acc, evalFormula(g, I, b));
                if (acc == TruthValue::False) return acc;
            }
            return acc;
        }
        case Formula::Kind::Or: {
            TruthValue acc = TruthValue::False;
            for (auto& g : f->subs) {
                acc = tvOr(acc, evalFormula(g, I, b));
                if (acc == TruthValue::True) return acc;
            }
            return acc;
        }
        case Formula::Kind::Forall: {
            Binding local = b;
            return evalQuant(f, I, local, 0, true);
        }
        case Formula::Kind::Exists: {
            Binding local = b;
            return evalQuant(f, I, local, 0, false);
        }
        case Formula::Kind::ExtExists: {
            Binding local = b;
            long long nTrue = 0, nUnknown = 0;
            countExt(f, I, local, 0, nTrue, nUnknown);
            return cmpCountInterval(f->cmp, nTrue, nTrue + nUnknown, f->extBound);
        }
        case Formula::Kind::Denotes: {
            EvalResult r = evalTerm(f->term, I, b);
            if (r.kind == EvalResult::Kind::Defined) return TruthValue::True;
            if (r.kind == EvalResult::Kind::Undefined) return TruthValue::False;
            return TruthValue::Unknown;
        }
    }
    return TruthValue::Unknown;
}

// ---------------------------------------------------------------------------
// Aggregate comparisons with optional contributions
// ---------------------------------------------------------------------------

namespace {

TruthValue evalAggCmpConst(AggFn fn, const SetExprPtr& set, CmpOp op, const DomainElem& bound,
                           const StructureView& I, const Binding& outer) {
    std::vector<AggContribution> contribs;
    Binding local = outer;
    collectSet(set, I, local, 0, aggNeedsValue(fn), contribs);
    std::vector<DomainElem> base, opt;
    for (auto& c : contribs) {
        if (!c.value.isDefined()) return TruthValue::Unknown;
        (c.cond == TruthValue::True ? base : opt).push_back(c.value.value);
    }
    switch (fn) {
        case AggFn::Card: {
            if (!bound.isInt())
                return tvFromBool(cmpHolds(op, DomainElem::mkInt(0), bound));
            return cmpCountInterval(op, (long long)base.size(),
                                    (long long)(base.size() + opt.size()), bound.num);
        }
        case AggFn::Sum: {
            long long lo = 0, hi = 0;
            for (auto& v : base) {
                if (!v.isInt()) return TruthValue::False;  // sum is undefined -> atom false
                lo += v.num;
                hi += v.num;
            }
            for (auto& v : opt) {
                if (!v.isInt()) return TruthValue::Unknown;
                if (v.num < 0) lo += v.num;
                else hi += v.num;
            }
            if (!bound.isInt())  // integers precede all other elements
                return tvFromBool(cmpHolds(op, DomainElem::mkInt(0), bound));
            return cmpCountInterval(op, lo, hi, bound.num);
        }
        case AggFn::Prod: {
            for (auto& v : base)
                if (!v.isInt()) return TruthValue::False;
            for (auto& v : opt)
                if (!v.isInt()) return TruthValue::Unknown;
            long long exact = 1;
            for (auto& v : base) exact *= v.num;
            if (opt.empty()) {
                if (!bound.isInt()) return TruthValue::False;
                return tvFromBool(cmpHoldsInt(op, exact, bound.num));
            }
            bool anyNeg = exact < 0;
            for (auto& v : opt)
                if (v.num < 0) anyNeg = true;
            if (anyNeg) return TruthValue::Unknown;
            long long lo = exact, hi = exact;
            for (auto& v : opt) {
                if (v.num == 0) lo = 0;
                else if (v.num > 1) hi *= v.num;
            }
            if (!bound.isInt()) return TruthValue::False;
            return cmpCountInterval(op, lo, hi, bound.num);
        }
        case AggFn::Min:
        case AggFn::Max: {
            // possible values of the aggregate; empty set makes it undefined
            bool mayBeUndefined = base.empty();
            std::vector<DomainElem> possible;
            if (!base.empty()) {
                DomainElem b0 = base[0];
                for (auto& v : base)
                    if (fn == AggFn::Min ? v < b0 : b0 < v) b0 = v;
                possible.push_back(b0);
                for (auto& v : opt)
                    if (fn == AggFn::Min ? v < b0 : b0 < v) possible.push_back(v);
            } else {
                for (auto& v : opt) possible.push_back(v);
            }
            bool anyTrue = false, anyFalse = mayBeUndefined;  // undefined -> atom false
            for (auto& v : possible)
                (cmpHolds(op, v, bound) ? anyTrue : anyFalse) = true;
            if (anyTrue && !anyFalse) return TruthValue::True;
            if (!anyTrue && anyFalse) return TruthValue::False;
            if (!anyTrue && !anyFalse) return TruthValue::False;  // no possible value at all
            return TruthValue::Unknown;
        }
    }
    return TruthValue::Unknown;
}

}  // namespace

// ---------------------------------------------------------------------------
// query_set
// ---------------------------------------------------------------------------

namespace {

// Bounds a variable whose type is not enumerable by the values it can take in
// positive, conjunctively-reachable atoms backed by stored tables.
void boundFromAtoms(const FormulaPtr& f, const std::string& var, const PartialStructure& I,
                    std::set<DomainElem>& out, bool& bounded) {
    switch (f->kind) {
        case Formula::Kind::Atom: {
            SymbolPtr sym = f->pred;
            const SymbolTable* tab = nullptr;
            bool useCf = false;
            if (sym->derivedBase) {
                for (auto& [s, t] : I.tables())
                    if (s.get() == sym->derivedBase) tab = &t;
                useCf = !sym->derivedCt;
            } else if (!sym->isType() && !sym->builtin) {
                tab = I.table(sym);
            }
            if (!tab) return;
            for (size_t i = 0; i < f->args.size(); ++i) {
                if (f->args[i]->kind != Term::Kind::Var || f->args[i]->var != var) continue;
                for (auto& t : (useCf ? tab->cf : tab->ct))
                    if (i < t.size()) out.insert(t[i]);
                if (!useCf && tab->closed) { /* everything else is false */ }
                bounded = true;
            }
            return;
        }
        case Formula::Kind::Cmp:
            if (f->cmp == CmpOp::Eq) {
                if (f->left->kind == Term::Kind::Var && f->left->var == var &&
                    f->right->kind == Term::Kind::Elem) {
                    out.insert(f->right->elem);
                    bounded = true;
                }
                if (f->right->kind == Term::Kind::Var && f->right->var == var &&
                    f->left->kind == Term::Kind::Elem) {
                    out.insert(f->left->elem);
                    bounded = true;
                }
            }
            return;
        case Formula::Kind::And:
            for (auto& g : f->subs) boundFromAtoms(g, var, I, out, bounded);
            return;
        default: return;  // negation, disjunction, quantifiers: no safe bound
    }
}

}  // namespace

TupleSet querySet(const SetExprPtr& set, const PartialStructure& I) {
    std::set<SymbolPtr> syms;
    if (set->cond) collectSymbols(set->cond, syms);
    for (auto& t : set->tuple) collectSymbols(t, syms);
    for (auto& s : syms) {
        if (s->derivedBase || s->builtin || s->constructorOf) continue;
        if (!I.twoValuedOn(s))
            throw Error(Error::Kind::Input,
                        "query over symbol '" + s->name + "' which is not two-valued");
    }
    TupleSet out;
    std::vector<size_t> idx;
    Binding b;
    // enumerate assignments to the bound variables
    std::vector<std::vector<DomainElem>> boundedTables;
    std::vector<const std::vector<DomainElem>*> tables;
    for (auto& v : set->boundVars) {
        const auto* tab = I.typeTable(v.type);
        if (!tab) {
            std::set<DomainElem> candidates;
            bool bounded = false;
            if (set->cond) boundFromAtoms(set->cond, v.name, I, candidates, bounded);
            if (!bounded)
                throw Error(Error::Kind::Domain,
                            "cannot enumerate query variable '" + v.name + "'");
            boundedTables.emplace_back(candidates.begin(), candidates.end());
            tables.push_back(nullptr);
            continue;
        }
        tables.push_back(tab);
        if (tab->empty()) return out;
    }
    {
        size_t bi = 0;
        for (size_t i = 0; i < tables.size(); ++i)
            if (!tables[i]) tables[i] = &boundedTables[bi++];
        for (auto* t : tables)
            if (t->empty()) return out;
    }
    std::vector<size_t> counters(set->boundVars.size(), 0);
    while (true) {
        for (size_t i = 0; i < counters.size(); ++i)
            b[set->boundVars[i].name] = (*tables[i])[counters[i]];
        TruthValue v = set->cond ? evalFormula(set->cond, I, b) : TruthValue::True;
        if (v == TruthValue::True) {
            Tuple t;
            if (set->tuple.empty()) {
                for (auto& var : set->boundVars) t.push_back(b[var.name]);
                out.insert(t);
            } else {
                bool ok = true;
                for (auto& term : set->tuple) {
                    EvalResult r = evalTerm(term, I, b);
                    if (!r.isDefined()) { ok = false; break; }
                    t.push_back(r.value);
                }
                if (ok) out.insert(t);
            }
        }
        // advance
        size_t i = 0;
        for (; i < counters.size(); ++i) {
            if (++counters[i] < tables[i]->size()) break;
            counters[i] = 0;
        }
        if (i == counters.size()) break;
        if (counters.empty()) break;
    }
    return out;
}

}  // namespace kbf
