#include "kbf/ast.hpp"

#include <algorithm>
#include <atomic>

namespace kbf {

// ---------------------------------------------------------------------------
// Symbols
// ---------------------------------------------------------------------------

int nextDeclIndex() {
    static std::atomic<int> counter{0};
    return ++counter;
}

static void attachTypeFns(const SymbolPtr& t) {
    auto& ti = *t->type;
    ti.minFn = makeFuncSymbol("min", {}, t, true);
    ti.maxFn = makeFuncSymbol("max", {}, t, true);
    ti.predFn = makeFuncSymbol("pred", {t}, t, true);
    ti.succFn = makeFuncSymbol("succ", {t}, t, true);
    for (auto& f : {ti.minFn, ti.maxFn, ti.predFn, ti.succFn}) {
        f->builtin = true;
        f->fqn = f->name + "[" + (f->arity() ? t->name + "->" : "->") + t->name + "]";
    }
}

SymbolPtr makeTypeSymbol(const std::string& name) {
    auto s = std::make_shared<Symbol>();
    s->kind = SymbolKind::Type;
    s->name = name;
    s->declIndex = nextDeclIndex();
    s->type = std::make_unique<TypeInfo>();
    attachTypeFns(s);
    return s;
}

SymbolPtr makePredSymbol(const std::string& name, std::vector<SymbolPtr> argTypes) {
    auto s = std::make_shared<Symbol>();
    s->kind = SymbolKind::Predicate;
    s->name = name;
    s->argTypes = std::move(argTypes);
    s->declIndex = nextDeclIndex();
    return s;
}

SymbolPtr makeFuncSymbol(const std::string& name, std::vector<SymbolPtr> argTypes, SymbolPtr out,
                         bool partial) {
    auto s = std::make_shared<Symbol>();
    s->kind = SymbolKind::Function;
    s->name = name;
    s->argTypes = std::move(argTypes);
    s->outType = std::move(out);
    s->partial = partial;
    s->declIndex = nextDeclIndex();
    return s;
}

SymbolPtr graphPredOf(const SymbolPtr& f) {
    if (f->graphPred) return f->graphPred;
    std::vector<SymbolPtr> argTypes = f->argTypes;
    argTypes.push_back(f->outType);
    auto g = makePredSymbol(f->name + "'g", std::move(argTypes));
    g->graphOf = f.get();
    g->fqn = f->fqn + "'g";
    f->graphPred = g;
    return g;
}

bool typeLeq(const SymbolPtr& sub, const SymbolPtr& super) {
    if (!sub || !super) return false;
    if (sub == super) return true;
    if (!sub->isType()) return false;
    for (auto& up : sub->type->supertypes)
        if (typeLeq(up, super)) return true;
    return false;
}

static void collectSupertypes(const SymbolPtr& t, std::set<SymbolPtr>& out) {
    if (!out.insert(t).second) return;
    for (auto& up : t->type->supertypes) collectSupertypes(up, out);
}

std::vector<SymbolPtr> minimalCommonSupertypes(const std::vector<SymbolPtr>& types) {
    if (types.empty()) return {};
    std::set<SymbolPtr> common;
    collectSupertypes(types[0], common);
    for (size_t i = 1; i < types.size(); ++i) {
        std::set<SymbolPtr> ups;
        collectSupertypes(types[i], ups);
        std::set<SymbolPtr> inter;
        for (auto& s : common)
            if (ups.count(s)) inter.insert(s);
        common = std::move(inter);
    }
    std::vector<SymbolPtr> minimal;
    for (auto& c : common) {
        bool hasLower = false;
        for (auto& d : common)
            if (d != c && typeLeq(d, c)) { hasLower = true; break; }
        if (!hasLower) minimal.push_back(c);
    }
    std::sort(minimal.begin(), minimal.end(),
              [](const SymbolPtr& a, const SymbolPtr& b) { return a->declIndex < b->declIndex; });
    return minimal;
}

bool typesCompatible(const SymbolPtr& a, const SymbolPtr& b) {
    return !minimalCommonSupertypes({a, b}).empty();
}

std::vector<SymbolPtr> rootTypesOf(const SymbolPtr& t) {
    std::set<SymbolPtr> ups;
    collectSupertypes(t, ups);
    std::vector<SymbolPtr> roots;
    for (auto& u : ups)
        if (u->type->supertypes.empty()) roots.push_back(u);
    std::sort(roots.begin(), roots.end(),
              [](const SymbolPtr& a, const SymbolPtr& b) { return a->declIndex < b->declIndex; });
    return roots;
}

const Builtins& Builtins::get() {
    static Builtins b = [] {
        Builtins x;
        x.intType = makeTypeSymbol("int");
        x.natType = makeTypeSymbol("nat");
        x.charType = makeTypeSymbol("char");
        x.stringType = makeTypeSymbol("string");
        x.intType->type->builtin = BuiltinType::Int;
        x.natType->type->builtin = BuiltinType::Nat;
        x.charType->type->builtin = BuiltinType::Char;
        x.stringType->type->builtin = BuiltinType::String;
        x.natType->type->supertypes = {x.intType};
        x.intType->type->subtypes = {x.natType};
        x.charType->type->supertypes = {x.stringType};
        x.stringType->type->subtypes = {x.charType};
        for (auto& t : {x.intType, x.natType, x.charType, x.stringType}) {
            t->builtin = true;
            t->fqn = t->name;
        }
        x.trueSym = makePredSymbol("true", {});
        x.falseSym = makePredSymbol("false", {});
        x.add = makeFuncSymbol("+", {x.intType, x.intType}, x.intType, false);
        x.sub = makeFuncSymbol("-", {x.intType, x.intType}, x.intType, false);
        x.mul = makeFuncSymbol("*", {x.intType, x.intType}, x.intType, false);
        x.divi = makeFuncSymbol("/", {x.intType, x.intType}, x.intType, true);
        x.mod = makeFuncSymbol("%", {x.intType, x.intType}, x.intType, true);
        for (auto& s : {x.trueSym, x.falseSym, x.add, x.sub, x.mul, x.divi, x.mod}) {
            s->builtin = true;
            s->fqn = s->name;
        }
        return x;
    }();
    return b;
}

std::vector<SymbolPtr> Builtins::all() const {
    return {intType, natType, charType, stringType, trueSym, falseSym, add, sub, mul, divi, mod};
}

bool Vocabulary::contains(const SymbolPtr& s) const {
    return std::find(symbols.begin(), symbols.end(), s) != symbols.end();
}

void Vocabulary::add(const SymbolPtr& s) {
    if (!contains(s)) symbols.push_back(s);
}

std::vector<SymbolPtr> Vocabulary::byName(const std::string& n) const {
    std::vector<SymbolPtr> out;
    for (auto& s : symbols)
        if (s->name == n) out.push_back(s);
    return out;
}

std::vector<SymbolPtr> Vocabulary::types() const {
    std::vector<SymbolPtr> out;
    for (auto& s : symbols)
        if (s->isType()) out.push_back(s);
    return out;
}

static SymbolPtr makeDerivedView(Symbol* base, bool ct) {
    std::vector<SymbolPtr> argTypes = base->argTypes;
    if (base->isFunction()) argTypes.push_back(base->outType);
    auto v = makePredSymbol(base->name + (ct ? "_ct" : "_cf"), std::move(argTypes));
    v->derivedBase = base;
    v->derivedCt = ct;
    std::string fqn = base->fqn;
    size_t sigPos = fqn.find('[');
    std::string sig = sigPos == std::string::npos ? "" : fqn.substr(sigPos);
    if (sigPos != std::string::npos) fqn = fqn.substr(0, sigPos);
    v->fqn = fqn + (ct ? "_ct" : "_cf") + sig;
    return v;
}

void Vocabulary::finalize() {
    for (auto& b : Builtins::get().all()) add(b);
    // min/max/pred/succ for every type present.
    std::vector<SymbolPtr> ts = types();
    for (auto& t : ts) {
        add(t->type->minFn);
        add(t->type->maxFn);
        add(t->type->predFn);
        add(t->type->succFn);
        for (auto& c : t->type->constructors) add(c);
    }
    // Derived _ct/_cf views for declared predicates and functions. Skip any
    // whose name collides with a declared symbol.
    std::vector<SymbolPtr> base = symbols;
    for (auto& s : base) {
        if (s->isType() || s->builtin || s->derivedBase || s->constructorOf) continue;
        if (!s->ctView) {
            auto ct = makeDerivedView(s.get(), true);
            auto cf = makeDerivedView(s.get(), false);
            if (byName(ct->name).empty()) s->ctView = ct;
            if (byName(cf->name).empty()) s->cfView = cf;
        }
        if (s->ctView) add(s->ctView);
        if (s->cfView) add(s->cfView);
    }
}

// ---------------------------------------------------------------------------
// Domain elements
// ---------------------------------------------------------------------------

DomainElem DomainElem::mkInt(long long v) {
    DomainElem e;
    e.kind = Kind::Int;
    e.num = v;
    return e;
}

DomainElem DomainElem::mkIdent(std::string s) {
    DomainElem e;
    e.kind = Kind::Ident;
    e.ident = std::move(s);
    return e;
}

DomainElem DomainElem::mkCons(SymbolPtr c, std::vector<DomainElem> a) {
    DomainElem e;
    e.kind = Kind::Cons;
    e.cons = std::move(c);
    e.args = std::move(a);
    return e;
}

std::string DomainElem::str() const {
    switch (kind) {
        case Kind::Int: return std::to_string(num);
        case Kind::Ident: {
            // Idents that are not lexical names print quoted.
            bool plain = !ident.empty() && isalpha(static_cast<unsigned char>(ident[0]));
            for (char c : ident)
                if (!(isalnum(static_cast<unsigned char>(c)) || c == '\'' || c == '_')) plain = false;
            return plain ? ident : "\"" + ident + "\"";
        }
        case Kind::Cons: {
            if (args.empty()) return cons->name;
            std::string s = cons->name + "(";
            for (size_t i = 0; i < args.size(); ++i) s += (i ? "," : "") + args[i].str();
            return s + ")";
        }
    }
    return "?";
}

static int elemCmp(const DomainElem& a, const DomainElem& b) {
    if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind) ? -1 : 1;
    switch (a.kind) {
        case DomainElem::Kind::Int: return a.num < b.num ? -1 : a.num > b.num ? 1 : 0;
        case DomainElem::Kind::Ident: return a.ident.compare(b.ident) < 0 ? -1 : a.ident == b.ident ? 0 : 1;
        case DomainElem::Kind::Cons: {
            if (a.cons != b.cons)
                return a.cons->declIndex < b.cons->declIndex ? -1 : 1;
            for (size_t i = 0; i < a.args.size() && i < b.args.size(); ++i) {
                int c = elemCmp(a.args[i], b.args[i]);
                if (c) return c;
            }
            return a.args.size() < b.args.size() ? -1 : a.args.size() > b.args.size() ? 1 : 0;
        }
    }
    return 0;
}

bool operator==(const DomainElem& a, const DomainElem& b) { return elemCmp(a, b) == 0; }
bool operator!=(const DomainElem& a, const DomainElem& b) { return elemCmp(a, b) != 0; }
bool operator<(const DomainElem& a, const DomainElem& b) { return elemCmp(a, b) < 0; }

std::string tupleStr(const Tuple& t) {
    std::string s = "(";
    for (size_t i = 0; i < t.size(); ++i) s += (i ? "," : "") + t[i].str();
    return s + ")";
}

// ---------------------------------------------------------------------------
// Comparison operators
// ---------------------------------------------------------------------------

const char* aggName(AggFn f) {
    switch (f) {
        case AggFn::Card: return "#";
        case AggFn::Sum: return "sum";
        case AggFn::Prod: return "prod";
        case AggFn::Min: return "min";
        case AggFn::Max: return "max";
    }
    return "?";
}

const char* cmpName(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return "=";
        case CmpOp::Neq: return "~=";
        case CmpOp::Lt: return "<";
        case CmpOp::Gt: return ">";
        case CmpOp::Leq: return "=<";
        case CmpOp::Geq: return ">=";
    }
    return "?";
}

CmpOp cmpNegate(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return CmpOp::Neq;
        case CmpOp::Neq: return CmpOp::Eq;
        case CmpOp::Lt: return CmpOp::Geq;
        case CmpOp::Gt: return CmpOp::Leq;
        case CmpOp::Leq: return CmpOp::Gt;
        case CmpOp::Geq: return CmpOp::Lt;
    }
    return op;
}

CmpOp cmpFlip(CmpOp op) {
    switch (op) {
        case CmpOp::Lt: return CmpOp::Gt;
        case CmpOp::Gt: return CmpOp::Lt;
        case CmpOp::Leq: return CmpOp::Geq;
        case CmpOp::Geq: return CmpOp::Leq;
        default: return op;
    }
}

bool cmpHolds(CmpOp op, const DomainElem& a, const DomainElem& b) {
    int c = a < b ? -1 : b < a ? 1 : 0;
    switch (op) {
        case CmpOp::Eq: return c == 0;
        case CmpOp::Neq: return c != 0;
        case CmpOp::Lt: return c < 0;
        case CmpOp::Gt: return c > 0;
        case CmpOp::Leq: return c <= 0;
        case CmpOp::Geq: return c >= 0;
    }
    return false;
}

bool cmpHoldsInt(CmpOp op, long long a, long long b) {
    return cmpHolds(op, DomainElem::mkInt(a), DomainElem::mkInt(b));
}

// ---------------------------------------------------------------------------
// Term / formula factories
// ---------------------------------------------------------------------------

TermPtr Term::mkVar(std::string name, SymbolPtr type) {
    auto t = std::make_shared<Term>();
    t->kind = Kind::Var;
    t->var = std::move(name);
    t->varType = std::move(type);
    return t;
}

TermPtr Term::mkElem(DomainElem e) {
    auto t = std::make_shared<Term>();
    t->kind = Kind::Elem;
    t->elem = std::move(e);
    return t;
}

TermPtr Term::mkFunc(SymbolPtr f, std::vector<TermPtr> args) {
    auto t = std::make_shared<Term>();
    t->kind = Kind::FuncApp;
    t->symbol = std::move(f);
    t->args = std::move(args);
    return t;
}

TermPtr Term::mkAgg(AggFn fn, SetExprPtr s) {
    auto t = std::make_shared<Term>();
    t->kind = Kind::Agg;
    t->agg = fn;
    t->set = std::move(s);
    return t;
}

SetExprPtr SetExpr::mk(std::vector<TypedVar> vars, FormulaPtr cond, std::vector<TermPtr> tuple) {
    auto s = std::make_shared<SetExpr>();
    s->boundVars = std::move(vars);
    s->cond = std::move(cond);
    s->tuple = std::move(tuple);
    return s;
}

FormulaPtr Formula::mkBool(bool b) {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::BoolConst;
    f->boolVal = b;
    return f;
}

FormulaPtr Formula::mkAtom(SymbolPtr p, std::vector<TermPtr> args) {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::Atom;
    f->pred = std::move(p);
    f->args = std::move(args);
    return f;
}

FormulaPtr Formula::mkCmp(CmpOp op, TermPtr l, TermPtr r) {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::Cmp;
    f->cmp = op;
    f->left = std::move(l);
    f->right = std::move(r);
    return f;
}

FormulaPtr Formula::mkNot(FormulaPtr g) {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::Not;
    f->subs = {std::move(g)};
    return f;
}

FormulaPtr Formula::mkAnd(std::vector<FormulaPtr> fs) {
    if (fs.size() == 1) return fs[0];
    auto f = std::make_shared<Formula>();
    f->kind = Kind::And;
    f->subs = std::move(fs);
    return f;
}

FormulaPtr Formula::mkOr(std::vector<FormulaPtr> fs) {
    if (fs.size() == 1) return fs[0];
    auto f = std::make_shared<Formula>();
    f->kind = Kind::Or;
    f->subs = std::move(fs);
    return f;
}

FormulaPtr Formula::mkForall(std::vector<TypedVar> vars, FormulaPtr body) {
    if (vars.empty()) return body;
    auto f = std::make_shared<Formula>();
    f->kind = Kind::Forall;
    f->vars = std::move(vars);
    f->body = std::move(body);
    return f;
}

FormulaPtr Formula::mkExists(std::vector<TypedVar> vars, FormulaPtr body) {
    if (vars.empty()) return body;
    auto f = std::make_shared<Formula>();
    f->kind = Kind::Exists;
    f->vars = std::move(vars);
    f->body = std::move(body);
    return f;
}

FormulaPtr Formula::mkExtExists(CmpOp op, long long bound, std::vector<TypedVar> vars,
                                FormulaPtr body) {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::ExtExists;
    f->cmp = op;
    f->extBound = bound;
    f->vars = std::move(vars);
    f->body = std::move(body);
    return f;
}

FormulaPtr Formula::mkDenotes(TermPtr t) {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::Denotes;
    f->term = std::move(t);
    return f;
}

FormulaPtr Formula::mkImplies(FormulaPtr a, FormulaPtr b) {
    return mkOr({mkNot(std::move(a)), std::move(b)});
}

// ---------------------------------------------------------------------------
// Free variables
// ---------------------------------------------------------------------------

namespace {

void fvTerm(const TermPtr& t, std::set<std::string>& bound, std::set<std::string>& out);
void fvFormula(const FormulaPtr& f, std::set<std::string>& bound, std::set<std::string>& out);

void fvSet(const SetExprPtr& s, std::set<std::string>& bound, std::set<std::string>& out) {
    std::set<std::string> inner = bound;
    for (auto& v : s->boundVars) inner.insert(v.name);
    if (s->cond) fvFormula(s->cond, inner, out);
    for (auto& t : s->tuple) fvTerm(t, inner, out);
}

void fvTerm(const TermPtr& t, std::set<std::string>& bound, std::set<std::string>& out) {
    switch (t->kind) {
        case Term::Kind::Var:
            if (!bound.count(t->var)) out.insert(t->var);
            break;
        case Term::Kind::Elem: break;
        case Term::Kind::FuncApp:
            for (auto& a : t->args) fvTerm(a, bound, out);
            break;
        case Term::Kind::Agg: fvSet(t->set, bound, out); break;
    }
}

void fvFormula(const FormulaPtr& f, std::set<std::string>& bound, std::set<std::string>& out) {
    switch (f->kind) {
        case Formula::Kind::BoolConst: break;
        case Formula::Kind::Atom:
            for (auto& a : f->args) fvTerm(a, bound, out);
            break;
        case Formula::Kind::Cmp:
            fvTerm(f->left, bound, out);
            fvTerm(f->right, bound, out);
            break;
        case Formula::Kind::Not:
        case Formula::Kind::And:
        case Formula::Kind::Or:
            for (auto& g : f->subs) fvFormula(g, bound, out);
            break;
        case Formula::Kind::Forall:
        case Formula::Kind::Exists:
        case Formula::Kind::ExtExists: {
            std::set<std::string> inner = bound;
            for (auto& v : f->vars) inner.insert(v.name);
            fvFormula(f->body, inner, out);
            break;
        }
        case Formula::Kind::Denotes: fvTerm(f->term, bound, out); break;
    }
}

}  // namespace

std::set<std::string> freeVars(const TermPtr& t) {
    std::set<std::string> bound, out;
    fvTerm(t, bound, out);
    return out;
}

std::set<std::string> freeVars(const FormulaPtr& f) {
    std::set<std::string> bound, out;
    fvFormula(f, bound, out);
    return out;
}

std::set<std::string> freeVars(const Rule& r) {
    std::set<std::string> bound, out;
    for (auto& v : r.vars) bound.insert(v.name);
    for (auto& a : r.headArgs) fvTerm(a, bound, out);
    if (r.headValue) fvTerm(r.headValue, bound, out);
    if (r.body) fvFormula(r.body, bound, out);
    return out;
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

namespace {

TermSubst maskSubst(const TermSubst& s, const std::vector<TypedVar>& vars) {
    TermSubst out = s;
    for (auto& v : vars) out.erase(v.name);
    return out;
}

}  // namespace

TermPtr substituteTerms(const TermPtr& t, const TermSubst& s) {
    if (s.empty()) return t;
    switch (t->kind) {
        case Term::Kind::Var: {
            auto it = s.find(t->var);
            return it == s.end() ? t : it->second;
        }
        case Term::Kind::Elem: return t;
        case Term::Kind::FuncApp: {
            std::vector<TermPtr> args;
            args.reserve(t->args.size());
            for (auto& a : t->args) args.push_back(substituteTerms(a, s));
            return Term::mkFunc(t->symbol, std::move(args));
        }
        case Term::Kind::Agg: {
            TermSubst inner = maskSubst(s, t->set->boundVars);
            std::vector<TermPtr> tuple;
            for (auto& x : t->set->tuple) tuple.push_back(substituteTerms(x, inner));
            return Term::mkAgg(t->agg, SetExpr::mk(t->set->boundVars,
                                                   substituteTerms(t->set->cond, inner),
                                                   std::move(tuple)));
        }
    }
    return t;
}

FormulaPtr substituteTerms(const FormulaPtr& f, const TermSubst& s) {
    if (s.empty()) return f;
    switch (f->kind) {
        case Formula::Kind::BoolConst: return f;
        case Formula::Kind::Atom: {
            std::vector<TermPtr> args;
            for (auto& a : f->args) args.push_back(substituteTerms(a, s));
            return Formula::mkAtom(f->pred, std::move(args));
        }
        case Formula::Kind::Cmp:
            return Formula::mkCmp(f->cmp, substituteTerms(f->left, s), substituteTerms(f->right, s));
        case Formula::Kind::Not: return Formula::mkNot(substituteTerms(f->subs[0], s));
        case Formula::Kind::And:
        case Formula::Kind::Or: {
            std::vector<FormulaPtr> subs;
            for (auto& g : f->subs) subs.push_back(substituteTerms(g, s));
            return f->kind == Formula::Kind::And ? Formula::mkAnd(std::move(subs))
                                                 : Formula::mkOr(std::move(subs));
        }
        case Formula::Kind::Forall:
        case Formula::Kind::Exists: {
            TermSubst inner = maskSubst(s, f->vars);
            auto body = substituteTerms(f->body, inner);
            return f->kind == Formula::Kind::Forall ? Formula::mkForall(f->vars, body)
                                                    : Formula::mkExists(f->vars, body);
        }
        case Formula::Kind::ExtExists: {
            TermSubst inner = maskSubst(s, f->vars);
            return Formula::mkExtExists(f->cmp, f->extBound, f->vars,
                                        substituteTerms(f->body, inner));
        }
        case Formula::Kind::Denotes: return Formula::mkDenotes(substituteTerms(f->term, s));
    }
    return f;
}

static TermSubst toTermSubst(const Binding& b) {
    TermSubst s;
    for (auto& [k, v] : b) s[k] = Term::mkElem(v);
    return s;
}

TermPtr substitute(const TermPtr& t, const Binding& b) { return substituteTerms(t, toTermSubst(b)); }
FormulaPtr substitute(const FormulaPtr& f, const Binding& b) {
    return substituteTerms(f, toTermSubst(b));
}

// ---------------------------------------------------------------------------
// Structural equality
// ---------------------------------------------------------------------------

bool equal(const TermPtr& a, const TermPtr& b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind) return false;
    switch (a->kind) {
        case Term::Kind::Var: return a->var == b->var && a->varType == b->varType;
        case Term::Kind::Elem: return a->elem == b->elem;
        case Term::Kind::FuncApp: {
            if (a->symbol != b->symbol || a->args.size() != b->args.size()) return false;
            for (size_t i = 0; i < a->args.size(); ++i)
                if (!equal(a->args[i], b->args[i])) return false;
            return true;
        }
        case Term::Kind::Agg: return a->agg == b->agg && equal(a->set, b->set);
    }
    return false;
}

bool equal(const SetExprPtr& a, const SetExprPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->boundVars.size() != b->boundVars.size() || a->tuple.size() != b->tuple.size())
        return false;
    for (size_t i = 0; i < a->boundVars.size(); ++i)
        if (a->boundVars[i].name != b->boundVars[i].name ||
            a->boundVars[i].type != b->boundVars[i].type)
            return false;
    if (!equal(a->cond, b->cond)) return false;
    for (size_t i = 0; i < a->tuple.size(); ++i)
        if (!equal(a->tuple[i], b->tuple[i])) return false;
    return true;
}

bool equal(const FormulaPtr& a, const FormulaPtr& b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind) return false;
    switch (a->kind) {
        case Formula::Kind::BoolConst: return a->boolVal == b->boolVal;
        case Formula::Kind::Atom: {
            if (a->pred != b->pred || a->args.size() != b->args.size()) return false;
            for (size_t i = 0; i < a->args.size(); ++i)
                if (!equal(a->args[i], b->args[i])) return false;
            return true;
        }
        case Formula::Kind::Cmp:
            return a->cmp == b->cmp && equal(a->left, b->left) && equal(a->right, b->right);
        case Formula::Kind::Not:
        case Formula::Kind::And:
        case Formula::Kind::Or: {
            if (a->subs.size() != b->subs.size()) return false;
            for (size_t i = 0; i < a->subs.size(); ++i)
                if (!equal(a->subs[i], b->subs[i])) return false;
            return true;
        }
        case Formula::Kind::Forall:
        case Formula::Kind::Exists:
        case Formula::Kind::ExtExists: {
            if (a->vars.size() != b->vars.size()) return false;
            for (size_t i = 0; i < a->vars.size(); ++i)
                if (a->vars[i].name != b->vars[i].name || a->vars[i].type != b->vars[i].type)
                    return false;
            if (a->kind == Formula::Kind::ExtExists &&
                (a->cmp != b->cmp || a->extBound != b->extBound))
                return false;
            return equal(a->body, b->body);
        }
        case Formula::Kind::Denotes: return equal(a->term, b->term);
    }
    return false;
}

bool equal(const Definition& a, const Definition& b) {
    if (a.rules.size() != b.rules.size()) return false;
    for (size_t i = 0; i < a.rules.size(); ++i) {
        const Rule &x = a.rules[i], &y = b.rules[i];
        if (x.head != y.head || x.vars.size() != y.vars.size() ||
            x.headArgs.size() != y.headArgs.size())
            return false;
        for (size_t j = 0; j < x.vars.size(); ++j)
            if (x.vars[j].name != y.vars[j].name || x.vars[j].type != y.vars[j].type) return false;
        for (size_t j = 0; j < x.headArgs.size(); ++j)
            if (!equal(x.headArgs[j], y.headArgs[j])) return false;
        if ((x.headValue == nullptr) != (y.headValue == nullptr)) return false;
        if (x.headValue && !equal(x.headValue, y.headValue)) return false;
        if (!equal(x.body, y.body)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Definitions
// ---------------------------------------------------------------------------

std::vector<SymbolPtr> Definition::definedSymbols() const {
    std::vector<SymbolPtr> out;
    for (auto& r : rules)
        if (std::find(out.begin(), out.end(), r.head) == out.end()) out.push_back(r.head);
    return out;
}

std::vector<SymbolPtr> Definition::openSymbols() const {
    auto def = definedSymbols();
    std::set<SymbolPtr> defined(def.begin(), def.end());
    std::set<SymbolPtr> occ;
    for (auto& r : rules) {
        for (auto& a : r.headArgs) collectSymbols(a, occ);
        if (r.headValue) collectSymbols(r.headValue, occ);
        if (r.body) collectSymbols(r.body, occ);
    }
    std::vector<SymbolPtr> out;
    for (auto& s : occ)
        if (!defined.count(s)) out.push_back(s);
    std::sort(out.begin(), out.end(),
              [](const SymbolPtr& a, const SymbolPtr& b) { return a->declIndex < b->declIndex; });
    return out;
}

// ---------------------------------------------------------------------------
// Collectors
// ---------------------------------------------------------------------------

void collectSymbols(const TermPtr& t, std::set<SymbolPtr>& out) {
    switch (t->kind) {
        case Term::Kind::Var:
            if (t->varType) out.insert(t->varType);
            break;
        case Term::Kind::Elem:
            if (t->elem.kind == DomainElem::Kind::Cons) out.insert(t->elem.cons);
            break;
        case Term::Kind::FuncApp:
            out.insert(t->symbol);
            for (auto& a : t->args) collectSymbols(a, out);
            break;
        case Term::Kind::Agg:
            for (auto& v : t->set->boundVars)
                if (v.type) out.insert(v.type);
            if (t->set->cond) collectSymbols(t->set->cond, out);
            for (auto& x : t->set->tuple) collectSymbols(x, out);
            break;
    }
}

void collectSymbols(const FormulaPtr& f, std::set<SymbolPtr>& out) {
    switch (f->kind) {
        case Formula::Kind::BoolConst: break;
        case Formula::Kind::Atom:
            out.insert(f->pred);
            for (auto& a : f->args) collectSymbols(a, out);
            break;
        case Formula::Kind::Cmp:
            collectSymbols(f->left, out);
            collectSymbols(f->right, out);
            break;
        case Formula::Kind::Not:
        case Formula::Kind::And:
        case Formula::Kind::Or:
            for (auto& g : f->subs) collectSymbols(g, out);
            break;
        case Formula::Kind::Forall:
        case Formula::Kind::Exists:
        case Formula::Kind::ExtExists:
            for (auto& v : f->vars)
                if (v.type) out.insert(v.type);
            collectSymbols(f->body, out);
            break;
        case Formula::Kind::Denotes: collectSymbols(f->term, out); break;
    }
}

void collectElems(const TermPtr& t, std::set<DomainElem>& out) {
    switch (t->kind) {
        case Term::Kind::Var: break;
        case Term::Kind::Elem: out.insert(t->elem); break;
        case Term::Kind::FuncApp:
            for (auto& a : t->args) collectElems(a, out);
            break;
        case Term::Kind::Agg:
            if (t->set->cond) collectElems(t->set->cond, out);
            for (auto& x : t->set->tuple) collectElems(x, out);
            break;
    }
}

void collectElems(const FormulaPtr& f, std::set<DomainElem>& out) {
    switch (f->kind) {
        case Formula::Kind::BoolConst: break;
        case Formula::Kind::Atom:
            for (auto& a : f->args) collectElems(a, out);
            break;
        case Formula::Kind::Cmp:
            collectElems(f->left, out);
            collectElems(f->right, out);
            break;
        case Formula::Kind::Not:
        case Formula::Kind::And:
        case Formula::Kind::Or:
            for (auto& g : f->subs) collectElems(g, out);
            break;
        case Formula::Kind::Forall:
        case Formula::Kind::Exists:
        case Formula::Kind::ExtExists: collectElems(f->body, out); break;
        case Formula::Kind::Denotes: collectElems(f->term, out); break;
    }
}

}  // namespace kbf
