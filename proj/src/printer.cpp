#include "kbf/printer.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace kbf {

namespace {

// In term positions identifier elements must print quoted, otherwise they
// would re-parse as names.
std::string elemInTerm(const DomainElem& e) {
    if (e.kind == DomainElem::Kind::Ident) return "\"" + e.ident + "\"";
    if (e.kind == DomainElem::Kind::Cons) {
        if (e.args.empty()) return e.cons->name;
        std::string s = e.cons->name + "(";
        for (size_t i = 0; i < e.args.size(); ++i) s += (i ? "," : "") + elemInTerm(e.args[i]);
        return s + ")";
    }
    return e.str();
}

int termPrec(const TermPtr& t) {
    if (t->kind != Term::Kind::FuncApp || !t->symbol->builtin) return 3;
    const auto& bi = Builtins::get();
    if (t->symbol == bi.add || t->symbol == bi.sub) return 1;
    if (t->symbol == bi.mul || t->symbol == bi.divi || t->symbol == bi.mod) return 2;
    return 3;
}

std::string printSet(const SetExprPtr& s);

std::string printTermPrec(const TermPtr& t, int parentPrec) {
    const auto& bi = Builtins::get();
    switch (t->kind) {
        case Term::Kind::Var: return t->var;
        case Term::Kind::Elem: return elemInTerm(t->elem);
        case Term::Kind::FuncApp: {
            const SymbolPtr& f = t->symbol;
            if (f == bi.add || f == bi.sub || f == bi.mul || f == bi.divi || f == bi.mod) {
                int prec = termPrec(t);
                std::string lhs = printTermPrec(t->args[0], prec - 1);
                std::string rhs = printTermPrec(t->args[1], prec);
                std::string s = lhs + " " + f->name + " " + rhs;
                return prec < parentPrec ? "(" + s + ")" : s;
            }
            if (f->builtin && f->outType && f->arity() == 0) {
                // min[T] / max[T]
                return f->name + "[" + f->outType->name + "]";
            }
            if (t->args.empty()) return f->name;
            std::string s = f->name + "(";
            for (size_t i = 0; i < t->args.size(); ++i)
                s += (i ? "," : "") + printTermPrec(t->args[i], 0);
            return s + ")";
        }
        case Term::Kind::Agg: {
            std::string fn = t->agg == AggFn::Card ? "#" : aggName(t->agg);
            return fn + "(" + printSet(t->set) + ")";
        }
    }
    return "?";
}

std::string printBinders(const std::vector<TypedVar>& vars) {
    std::string s;
    for (size_t i = 0; i < vars.size(); ++i) {
        if (i) s += ", ";
        s += vars[i].name;
        if (vars[i].type) s += " in " + vars[i].type->name;
    }
    return s;
}

// precedence levels: 0 body, 1 or, 2 and, 3 not/atom
std::string printFormulaPrec(const FormulaPtr& f, int parentPrec) {
    switch (f->kind) {
        case Formula::Kind::BoolConst: return f->boolVal ? "true" : "false";
        case Formula::Kind::Atom: {
            if (f->args.empty()) return f->pred->name;
            std::string s = f->pred->name + "(";
            for (size_t i = 0; i < f->args.size(); ++i)
                s += (i ? "," : "") + printTermPrec(f->args[i], 0);
            return s + ")";
        }
        case Formula::Kind::Cmp:
            return printTermPrec(f->left, 0) + " " + cmpName(f->cmp) + " " +
                   printTermPrec(f->right, 0);
        case Formula::Kind::Not: {
            std::string inner = printFormulaPrec(f->subs[0], 3);
            return "~" + inner;
        }
        case Formula::Kind::And: {
            std::string s;
            for (size_t i = 0; i < f->subs.size(); ++i)
                s += (i ? " & " : "") + printFormulaPrec(f->subs[i], 2);
            if (f->subs.empty()) s = "true";
            return parentPrec > 2 ? "(" + s + ")" : s;
        }
        case Formula::Kind::Or: {
            std::string s;
            for (size_t i = 0; i < f->subs.size(); ++i)
                s += (i ? " | " : "") + printFormulaPrec(f->subs[i], 1);
            if (f->subs.empty()) s = "false";
            return parentPrec > 1 ? "(" + s + ")" : s;
        }
        case Formula::Kind::Forall:
        case Formula::Kind::Exists: {
            std::string s = (f->kind == Formula::Kind::Forall ? "!" : "?") +
                            printBinders(f->vars) + ": " + printFormulaPrec(f->body, 0);
            return parentPrec > 0 ? "(" + s + ")" : s;
        }
        case Formula::Kind::ExtExists: {
            std::string s = "?" + std::string(cmpName(f->cmp)) + std::to_string(f->extBound) +
                            " " + printBinders(f->vars) + ": " + printFormulaPrec(f->body, 0);
            return parentPrec > 0 ? "(" + s + ")" : s;
        }
        case Formula::Kind::Denotes: return "denotes(" + printTermPrec(f->term, 0) + ")";
    }
    return "?";
}

std::string printSet(const SetExprPtr& s) {
    std::string out = "{" + printBinders(s->boundVars);
    out += " : " + printFormulaPrec(s->cond ? s->cond : Formula::mkBool(true), 0);
    if (!s->tuple.empty()) {
        out += " : ";
        if (s->tuple.size() == 1) {
            out += printTermPrec(s->tuple[0], 0);
        } else {
            out += "(";
            for (size_t i = 0; i < s->tuple.size(); ++i)
                out += (i ? "," : "") + printTermPrec(s->tuple[i], 0);
            out += ")";
        }
    }
    return out + "}";
}

}  // namespace

std::string printTerm(const TermPtr& t) { return printTermPrec(t, 0); }
std::string printFormula(const FormulaPtr& f) { return printFormulaPrec(f, 0); }

std::string printRule(const Rule& r) {
    std::string s;
    if (!r.vars.empty()) s += "!" + printBinders(r.vars) + ": ";
    if (r.headArgs.empty()) {
        s += r.head->name;
    } else {
        s += r.head->name + "(";
        for (size_t i = 0; i < r.headArgs.size(); ++i)
            s += (i ? "," : "") + printTermPrec(r.headArgs[i], 0);
        s += ")";
    }
    if (r.headValue) s += " = " + printTermPrec(r.headValue, 0);
    bool trivialBody = r.body && r.body->kind == Formula::Kind::BoolConst && r.body->boolVal;
    if (r.body && !trivialBody) s += " <- " + printFormulaPrec(r.body, 0);
    return s;
}

std::string printVocabulary(const Vocabulary& voc) {
    std::ostringstream out;
    out << "vocabulary " << voc.name << " is {\n";
    for (auto& s : voc.symbols) {
        if (s->builtin || s->derivedBase || s->constructorOf) continue;
        if (s->isType()) {
            out << "    type " << s->name;
            if (s->type->constructed) {
                out << " constructed from ";
                for (size_t i = 0; i < s->type->constructors.size(); ++i) {
                    auto& c = s->type->constructors[i];
                    out << (i ? ", " : "") << c->name;
                    if (!c->argTypes.empty()) {
                        out << "(";
                        for (size_t j = 0; j < c->argTypes.size(); ++j)
                            out << (j ? "," : "") << c->argTypes[j]->name;
                        out << ")";
                    }
                }
            }
            bool first = true;
            for (auto& up : s->type->supertypes) {
                out << (first ? " subtype of " : ", ") << up->name;
                first = false;
            }
            out << ";\n";
        } else if (s->isFunction()) {
            out << "    " << (s->partial ? "partial func " : "func ") << s->name << "[";
            for (size_t i = 0; i < s->argTypes.size(); ++i)
                out << (i ? "," : "") << s->argTypes[i]->name;
            out << "->" << s->outType->name << "];\n";
        } else {
            out << "    pred " << s->name << "[";
            for (size_t i = 0; i < s->argTypes.size(); ++i)
                out << (i ? "," : "") << s->argTypes[i]->name;
            out << "];\n";
        }
    }
    out << "};\n";
    return out.str();
}

std::string printTheory(const Theory& t) {
    std::ostringstream out;
    out << "theory " << t.name << " over " << t.voc->name << " is {\n";
    for (auto& s : t.sentences) out << "    " << printFormula(s) << ";\n";
    for (auto& d : t.definitions) {
        out << "    define {\n";
        for (auto& r : d->rules) out << "        " << printRule(r) << ";\n";
        out << "    };\n";
    }
    out << "};\n";
    return out.str();
}

namespace {

std::string printTupleSet(const TupleSet& ts) {
    // contiguous integer singletons print as a range
    if (ts.size() >= 2) {
        bool allInts = true;
        for (auto& t : ts)
            if (t.size() != 1 || !t[0].isInt()) allInts = false;
        if (allInts) {
            long long lo = ts.begin()->at(0).num;
            long long hi = ts.rbegin()->at(0).num;
            if (hi - lo + 1 == (long long)ts.size()) {
                return "{" + std::to_string(lo) + ".." + std::to_string(hi) + "}";
            }
        }
    }
    std::string s = "{";
    bool firstTuple = true;
    for (auto& t : ts) {
        if (!firstTuple) s += "; ";
        firstTuple = false;
        for (size_t i = 0; i < t.size(); ++i) s += (i ? "," : "") + t[i].str();
    }
    return s + "}";
}

}  // namespace

std::string printStructure(const PartialStructure& s) {
    std::ostringstream out;
    out << "structure " << s.name << " over " << s.voc()->name << " is {\n";
    for (auto& [type, elems] : s.typeTables()) {
        if (type->type->constructed) continue;  // implied by the constructors
        TupleSet ts;
        for (auto& e : elems) ts.insert({e});
        out << "    " << type->name << " = " << printTupleSet(ts) << ";\n";
    }
    for (auto& [sym, tab] : s.tables()) {
        if (sym->builtin || sym->derivedBase || sym->constructorOf) continue;
        if (tab.closed) {
            if (sym->arity() == 0 && !sym->isFunction()) {
                out << "    " << sym->name << " = " << (tab.ct.count({}) ? "true" : "false")
                    << ";\n";
            } else if (sym->isFunction() && sym->arity() == 0 && tab.ct.size() == 1) {
                out << "    " << sym->name << " = " << tab.ct.begin()->at(0).str() << ";\n";
            } else {
                out << "    " << sym->name << " = " << printTupleSet(tab.ct) << ";\n";
            }
        } else {
            if (!tab.ct.empty())
                out << "    " << sym->name << "::ct = " << printTupleSet(tab.ct) << ";\n";
            if (!tab.cf.empty())
                out << "    " << sym->name << "::cf = " << printTupleSet(tab.cf) << ";\n";
        }
    }
    out << "};\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Whole-spec printing with namespaces
// ---------------------------------------------------------------------------

namespace {

struct NsNode {
    std::map<std::string, NsNode> children;
    std::vector<std::string> texts;
};

void insert(NsNode& root, const std::string& fqn, std::string text) {
    // fqn = global::A::B::name ; namespaces are the middle parts
    std::vector<std::string> parts;
    size_t start = 0;
    while (true) {
        size_t p = fqn.find("::", start);
        if (p == std::string::npos) break;
        parts.push_back(fqn.substr(start, p - start));
        start = p + 2;
    }
    NsNode* node = &root;
    for (size_t i = 1; i < parts.size(); ++i) node = &node->children[parts[i]];
    node->texts.push_back(std::move(text));
}

void render(const NsNode& node, std::ostringstream& out, int depth) {
    std::string indent(depth * 4, ' ');
    for (auto& t : node.texts) {
        std::istringstream lines(t);
        std::string line;
        while (std::getline(lines, line)) out << indent << line << "\n";
    }
    for (auto& [name, child] : node.children) {
        out << indent << "namespace " << name << " is {\n";
        render(child, out, depth + 1);
        out << indent << "};\n";
    }
}

}  // namespace

std::string printSpec(const Spec& spec) {
    NsNode root;
    for (auto& v : spec.vocabularies) insert(root, v->fqn, printVocabulary(*v));
    for (auto& t : spec.theories) insert(root, t->fqn, printTheory(*t));
    for (auto& s : spec.structures) insert(root, s->fqn, printStructure(*s));
    for (auto& t : spec.terms)
        insert(root, t->fqn,
               "term " + t->name + " over " + t->voc->name + " is " + printTerm(t->term) + ";\n");
    for (auto& f : spec.formulas)
        insert(root, f->fqn,
               "formula " + f->name + " over " + f->voc->name + " is " +
                   printFormula(f->formula) + ";\n");
    std::ostringstream out;
    render(root, out, 0);
    return out.str();
}

}  // namespace kbf
