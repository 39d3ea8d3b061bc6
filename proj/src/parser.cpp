#include <algorithm>
#include <cctype>
#include <map>

#include "kbf/raw.hpp"

namespace kbf {

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

namespace {

bool nameStart(char c) { return std::isalpha(static_cast<unsigned char>(c)); }
bool nameChar(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '\'' || c == '_';
}

const char* kTwoCharOps[] = {"<=>", "::", "..", "~=", "=<", ">=", "=>", "<=", "<-", "->"};

}  // namespace

std::vector<Token> tokenize(const std::string& text, const std::string& filename) {
    std::vector<Token> out;
    size_t i = 0, n = text.size();
    int line = 1, col = 1;
    auto loc = [&] { return SourceLoc{filename, line, col}; };
    auto advance = [&](size_t k) {
        for (size_t j = 0; j < k && i < n; ++j, ++i) {
            if (text[i] == '\n') { ++line; col = 1; } else { ++col; }
        }
    };

    while (i < n) {
        char c = text[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') { advance(1); continue; }
        if (c == '/' && i + 1 < n && text[i + 1] == '/') {
            while (i < n && text[i] != '\n') advance(1);
            continue;
        }
        if (c == '/' && i + 1 < n && text[i + 1] == '*') {
            SourceLoc start = loc();
            advance(2);
            while (i + 1 < n && !(text[i] == '*' && text[i + 1] == '/')) advance(1);
            if (i + 1 >= n) throw Error(Error::Kind::Lex, "unterminated block comment", start);
            advance(2);
            continue;
        }
        if (c == '"') {
            SourceLoc start = loc();
            advance(1);
            std::string s;
            while (i < n && text[i] != '"') {
                if (text[i] == '\n')
                    throw Error(Error::Kind::Lex, "unterminated string literal", start);
                s += text[i];
                advance(1);
            }
            if (i >= n) throw Error(Error::Kind::Lex, "unterminated string literal", start);
            advance(1);
            out.push_back({Token::Kind::Str, std::move(s), 0, start});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            SourceLoc start = loc();
            std::string num;
            while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
                num += text[i];
                advance(1);
            }
            // a '.' followed by a digit makes a float; '..' is the range op
            if (i + 1 < n && text[i] == '.' && std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
                num += '.';
                advance(1);
                while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
                    num += text[i];
                    advance(1);
                }
                out.push_back({Token::Kind::Float, std::move(num), 0, start});
            } else {
                long long v = std::stoll(num);
                out.push_back({Token::Kind::Int, std::move(num), v, start});
            }
            continue;
        }
        if (nameStart(c)) {
            SourceLoc start = loc();
            std::string name;
            while (i < n && nameChar(text[i])) {
                name += text[i];
                advance(1);
            }
            out.push_back({Token::Kind::Ident, std::move(name), 0, start});
            continue;
        }
        // operators: longest match first
        bool matched = false;
        for (const char* op : kTwoCharOps) {
            size_t len = std::char_traits<char>::length(op);
            if (text.compare(i, len, op) == 0) {
                out.push_back({Token::Kind::Op, op, 0, loc()});
                advance(len);
                matched = true;
                break;
            }
        }
        if (matched) continue;
        static const std::string singles = "(){}[],;:=<>+-*/%#&|~!?.";
        if (singles.find(c) != std::string::npos) {
            out.push_back({Token::Kind::Op, std::string(1, c), 0, loc()});
            advance(1);
            continue;
        }
        throw Error(Error::Kind::Lex, std::string("unexpected character '") + c + "'", loc());
    }
    out.push_back({Token::Kind::End, "", 0, loc()});
    return out;
}

// ---------------------------------------------------------------------------
// QualName / RawElem helpers
// ---------------------------------------------------------------------------

std::string QualName::str() const {
    std::string s;
    for (size_t i = 0; i < parts.size(); ++i) s += (i ? "::" : "") + parts[i];
    if (hasSig) {
        s += "[";
        for (size_t i = 0; i < sigArgs.size(); ++i) s += (i ? "," : "") + sigArgs[i].str();
        if (!sigOut.empty()) s += "->" + sigOut[0].str();
        s += "]";
    }
    if (arityAnn) s += "/" + std::to_string(*arityAnn);
    return s;
}

std::string RawElem::str() const {
    switch (kind) {
        case Kind::Int: return std::to_string(intVal);
        case Kind::Ident: return name;
        case Kind::Str: return "\"" + name + "\"";
        case Kind::Cons: {
            if (args.empty()) return name;
            std::string s = name + "(";
            for (size_t i = 0; i < args.size(); ++i) s += (i ? "," : "") + args[i].str();
            return s + ")";
        }
    }
    return "?";
}

const std::string& RawNsEntry::entryName() const {
    switch (kind) {
        case Kind::Vocab: return vocab->name;
        case Kind::Theory: return theory->name;
        case Kind::Structure: return structure->name;
        case Kind::Term: return term->name;
        case Kind::Formula: return formula->name;
        case Kind::Namespace: return ns->name;
        case Kind::Include: return include.target.parts.back();
    }
    static const std::string empty;
    return empty;
}

RawNamespace* RawNamespace::findChild(const std::string& n) {
    for (auto& e : entries)
        if (e.kind == RawNsEntry::Kind::Namespace && e.ns->name == n) return e.ns.get();
    return nullptr;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

class Parser {
public:
    Parser(const std::vector<Token>& toks, RawNamespacePtr root) : toks_(toks), root_(root) {}

    void parseInto() { parseNamespaceBody(*root_, true); }

private:
    const std::vector<Token>& toks_;
    RawNamespacePtr root_;
    size_t pos_ = 0;

    const Token& cur() const { return toks_[pos_]; }
    const Token& peek(size_t k = 1) const {
        return toks_[std::min(pos_ + k, toks_.size() - 1)];
    }
    void next() { if (pos_ + 1 < toks_.size()) ++pos_; }

    bool isOp(const char* s) const { return cur().kind == Token::Kind::Op && cur().text == s; }
    bool isWord(const char* s) const {
        return cur().kind == Token::Kind::Ident && cur().text == s;
    }
    bool acceptOp(const char* s) {
        if (isOp(s)) { next(); return true; }
        return false;
    }
    bool acceptWord(const char* s) {
        if (isWord(s)) { next(); return true; }
        return false;
    }
    [[noreturn]] void fail(const std::string& expected) const {
        std::string got = cur().kind == Token::Kind::End ? "end of input" : "'" + cur().text + "'";
        throw Error(Error::Kind::Parse, "expected " + expected + ", found " + got, cur().loc);
    }
    void expectOp(const char* s) { if (!acceptOp(s)) fail(std::string("'") + s + "'"); }
    void expectWord(const char* s) { if (!acceptWord(s)) fail(std::string("'") + s + "'"); }
    std::string expectName() {
        if (cur().kind != Token::Kind::Ident) fail("a name");
        std::string s = cur().text;
        next();
        return s;
    }

    // ---- names ----

    QualName parseQualName(bool allowSig = true) {
        QualName q;
        q.loc = cur().loc;
        q.parts.push_back(expectName());
        while (isOp("::") && peek().kind == Token::Kind::Ident &&
               !(peek().text == "ct" || peek().text == "cf") ) {
            next();
            q.parts.push_back(expectName());
        }
        // signature annotation [T1,...->T]
        if (allowSig && isOp("[")) {
            next();
            q.hasSig = true;
            if (!isOp("]")) {
                if (!isOp("->")) {
                    q.sigArgs.push_back(parseQualName(false));
                    while (acceptOp(",")) q.sigArgs.push_back(parseQualName(false));
                }
                if (acceptOp("->")) q.sigOut.push_back(parseQualName(false));
            }
            expectOp("]");
        }
        if (allowSig && isOp("/") && peek().kind == Token::Kind::Int) {
            next();
            q.arityAnn = static_cast<int>(cur().intVal);
            next();
        }
        return q;
    }

    // Structure entry symbols keep a trailing ::ct / ::cf out of the name.
    QualName parseQualNamePlain() {
        QualName q;
        q.loc = cur().loc;
        q.parts.push_back(expectName());
        while (isOp("::") && peek().kind == Token::Kind::Ident &&
               !(peek().text == "ct" || peek().text == "cf")) {
            next();
            q.parts.push_back(expectName());
        }
        return q;
    }

    // ---- namespaces & components ----

    void parseNamespaceBody(RawNamespace& ns, bool topLevel) {
        while (true) {
            if (cur().kind == Token::Kind::End) {
                if (!topLevel) fail("'}'");
                return;
            }
            if (!topLevel && isOp("}")) return;
            parseTopItem(ns);
        }
    }

    void parseTopItem(RawNamespace& ns) {
        if (isWord("namespace")) { parseNamespaceDecl(ns); return; }
        if (isWord("vocabulary")) { parseVocabulary(ns); return; }
        if (isWord("theory")) { parseTheory(ns); return; }
        if (isWord("structure")) { parseStructure(ns); return; }
        if (isWord("term")) { parseTermComp(ns); return; }
        if (isWord("formula")) { parseFormulaComp(ns); return; }
        if (isWord("include")) {
            SourceLoc loc = cur().loc;
            next();
            RawNsEntry e;
            e.kind = RawNsEntry::Kind::Include;
            e.include = {parseQualName(), loc};
            expectOp(";");
            ns.entries.push_back(std::move(e));
            return;
        }
        if (isWord("require")) {
            next();
            std::string file;
            if (cur().kind == Token::Kind::Str) {
                file = cur().text;
                next();
            } else {
                // unquoted path: read tokens until ';'
                while (!isOp(";") && cur().kind != Token::Kind::End) {
                    file += cur().text;
                    next();
                }
            }
            expectOp(";");
            ns.requiredFiles.push_back(file);
            return;
        }
        if (isWord("procedure")) {
            SourceLoc loc = cur().loc;
            skipProcedure();
            throw Error(Error::Kind::Unsupported,
                        "'procedure' blocks are not supported; use the CLI subcommands instead",
                        loc);
        }
        fail("a component declaration");
    }

    void skipProcedure() {
        // consume tokens up to and including the balanced block
        while (cur().kind != Token::Kind::End && !isOp("{")) next();
        int depth = 0;
        while (cur().kind != Token::Kind::End) {
            if (isOp("{")) ++depth;
            if (isOp("}")) {
                --depth;
                if (depth == 0) { next(); acceptOp(";"); return; }
            }
            next();
        }
    }

    void parseNamespaceDecl(RawNamespace& parent) {
        next();  // namespace
        std::string name = expectName();
        acceptWord("is");
        expectOp("{");
        // namespaces with the same name merge into one
        RawNamespace* child = parent.findChild(name);
        if (!child) {
            RawNsEntry e;
            e.kind = RawNsEntry::Kind::Namespace;
            e.ns = std::make_shared<RawNamespace>();
            e.ns->name = name;
            e.ns->fqn = parent.fqn + "::" + name;
            parent.entries.push_back(e);
            child = parent.entries.back().ns.get();
        }
        parseNamespaceBody(*child, false);
        expectOp("}");
        acceptOp(";");
    }

    void parseVocabulary(RawNamespace& ns) {
        SourceLoc loc = cur().loc;
        next();
        auto v = std::make_shared<RawVocab>();
        v->name = expectName();
        v->loc = loc;
        acceptWord("is");
        expectOp("{");
        while (!isOp("}")) parseVocabEntry(*v);
        expectOp("}");
        acceptOp(";");
        std::string origin = ns.fqn + "::" + v->name;
        for (auto& entry : v->entries) {
            switch (entry.kind) {
                case RawVocabEntry::Kind::Type: entry.type.origin = origin; break;
                case RawVocabEntry::Kind::Pred: entry.pred.origin = origin; break;
                case RawVocabEntry::Kind::Func: entry.func.origin = origin; break;
                default: break;
            }
        }
        RawNsEntry e;
        e.kind = RawNsEntry::Kind::Vocab;
        e.vocab = std::move(v);
        ns.entries.push_back(std::move(e));
    }

    void parseVocabEntry(RawVocab& v) {
        if (isWord("include")) {
            SourceLoc loc = cur().loc;
            next();
            RawVocabEntry e;
            e.kind = RawVocabEntry::Kind::Include;
            e.include = {parseQualName(), loc};
            expectOp(";");
            v.entries.push_back(std::move(e));
            return;
        }
        if (isWord("type")) {
            next();
            RawTypeDecl t;
            t.loc = cur().loc;
            t.name = expectName();
            while (!isOp(";")) {
                if (isWord("subtype")) {
                    next();
                    expectWord("of");
                    t.subtypeOf.push_back(parseQualName());
                    while (acceptOp(",")) t.subtypeOf.push_back(parseQualName());
                } else if (isWord("supertype")) {
                    next();
                    expectWord("of");
                    t.supertypeOf.push_back(parseQualName());
                    while (acceptOp(",")) t.supertypeOf.push_back(parseQualName());
                } else if (isWord("constructed")) {
                    next();
                    expectWord("from");
                    t.constructed = true;
                    bool braced = acceptOp("{");
                    parseCtor(t);
                    if (braced) {
                        while (acceptOp(",") || acceptOp(";")) {
                            if (isOp("}")) break;  // trailing separator
                            parseCtor(t);
                        }
                        expectOp("}");
                    } else {
                        while (acceptOp(",")) parseCtor(t);
                    }
                } else {
                    fail("'subtype', 'supertype', 'constructed' or ';'");
                }
            }
            expectOp(";");
            RawVocabEntry e;
            e.kind = RawVocabEntry::Kind::Type;
            e.type = std::move(t);
            v.entries.push_back(std::move(e));
            return;
        }
        if (isWord("pred")) {
            next();
            RawPredDecl p;
            p.loc = cur().loc;
            p.name = expectName();
            if (acceptOp("[")) {
                if (!isOp("]")) {
                    p.argTypes.push_back(parseQualName(false));
                    while (acceptOp(",")) p.argTypes.push_back(parseQualName(false));
                }
                expectOp("]");
            }
            expectOp(";");
            RawVocabEntry e;
            e.kind = RawVocabEntry::Kind::Pred;
            e.pred = std::move(p);
            v.entries.push_back(std::move(e));
            return;
        }
        bool partial = false;
        if (isWord("partial")) {
            partial = true;
            next();
        }
        if (isWord("func")) {
            next();
            RawFuncDecl f;
            f.loc = cur().loc;
            f.partial = partial;
            f.name = expectName();
            if (acceptOp("[")) {
                if (!isOp("->")) {
                    f.argTypes.push_back(parseQualName(false));
                    while (acceptOp(",")) f.argTypes.push_back(parseQualName(false));
                }
                expectOp("->");
                f.outType = parseQualName(false);
                expectOp("]");
            } else {
                // shorthand: func C -> T;
                expectOp("->");
                f.outType = parseQualName(false);
            }
            expectOp(";");
            RawVocabEntry e;
            e.kind = RawVocabEntry::Kind::Func;
            e.func = std::move(f);
            v.entries.push_back(std::move(e));
            return;
        }
        if (partial) fail("'func'");
        // `P isa type;`
        if (cur().kind == Token::Kind::Ident && peek().kind == Token::Kind::Ident &&
            peek().text == "isa") {
            RawVocabEntry e;
            e.kind = RawVocabEntry::Kind::IsaType;
            e.isa = parseQualName();
            expectWord("isa");
            expectWord("type");
            expectOp(";");
            v.entries.push_back(std::move(e));
            return;
        }
        fail("a vocabulary declaration");
    }

    void parseCtor(RawTypeDecl& t) {
        RawCtorDecl c;
        c.loc = cur().loc;
        c.name = expectName();
        if (acceptOp("(")) {
            if (!isOp(")")) {
                c.argTypes.push_back(parseQualName(false));
                while (acceptOp(",")) c.argTypes.push_back(parseQualName(false));
            }
            expectOp(")");
        }
        t.ctors.push_back(std::move(c));
    }

    void parseTheory(RawNamespace& ns) {
        SourceLoc loc = cur().loc;
        next();
        auto t = std::make_shared<RawTheory>();
        t->loc = loc;
        t->name = expectName();
        if (acceptWord("over")) t->vocab = parseQualName();
        acceptWord("is");
        expectOp("{");
        while (!isOp("}")) {
            if (isWord("include")) {
                SourceLoc iloc = cur().loc;
                next();
                RawTheoryItem item;
                item.kind = RawTheoryItem::Kind::Include;
                item.include = {parseQualName(), iloc};
                expectOp(";");
                t->items.push_back(std::move(item));
            } else if (isWord("define")) {
                RawTheoryItem item;
                item.kind = RawTheoryItem::Kind::Definition;
                item.def = parseDefinition();
                t->items.push_back(std::move(item));
            } else {
                RawTheoryItem item;
                item.kind = RawTheoryItem::Kind::Sentence;
                item.sentence = parseExpr();
                expectOp(";");
                t->items.push_back(std::move(item));
            }
        }
        expectOp("}");
        acceptOp(";");
        RawNsEntry e;
        e.kind = RawNsEntry::Kind::Theory;
        e.theory = std::move(t);
        ns.entries.push_back(std::move(e));
    }

    RawDefinition parseDefinition() {
        RawDefinition d;
        d.loc = cur().loc;
        expectWord("define");
        expectOp("{");
        while (!isOp("}")) {
            RawRule r;
            r.loc = cur().loc;
            while (isOp("!")) {
                next();
                parseBinderList(r.binders);
                expectOp(":");
            }
            RawExprPtr e = parseExpr();
            if (e->kind == RawExpr::Kind::Binary && e->op == "<=") {
                // `head <= body` can not occur in rules; treat as parse error
                throw Error(Error::Kind::Parse, "expected '<-' in rule", r.loc);
            }
            r.head = e;
            if (acceptOp("<-")) r.body = parseExpr();
            expectOp(";");
            d.rules.push_back(std::move(r));
        }
        expectOp("}");
        acceptOp(";");
        return d;
    }

    void parseStructure(RawNamespace& ns) {
        SourceLoc loc = cur().loc;
        next();
        auto s = std::make_shared<RawStructure>();
        s->loc = loc;
        s->name = expectName();
        if (acceptWord("over")) s->vocab = parseQualName();
        acceptWord("is");
        expectOp("{");
        while (!isOp("}")) parseStructEntry(*s);
        expectOp("}");
        acceptOp(";");
        RawNsEntry e;
        e.kind = RawNsEntry::Kind::Structure;
        e.structure = std::move(s);
        ns.entries.push_back(std::move(e));
    }

    void parseStructEntry(RawStructure& s) {
        RawStructEntry e;
        e.loc = cur().loc;
        if (isWord("include")) {
            next();
            e.rhs = RawStructEntry::Rhs::Include;
            e.include = {parseQualName(), e.loc};
            expectOp(";");
            s.entries.push_back(std::move(e));
            return;
        }
        e.symbol = parseQualNamePlain();
        if (acceptOp("::")) {
            if (acceptWord("ct")) e.mode = RawStructEntry::Mode::Ct;
            else if (acceptWord("cf")) e.mode = RawStructEntry::Mode::Cf;
            else fail("'ct' or 'cf'");
        }
        expectOp("=");
        if (isWord("procedure"))
            throw Error(Error::Kind::Unsupported, "procedural interpretations are not supported",
                        cur().loc);
        if (isWord("true") || isWord("false")) {
            e.rhs = RawStructEntry::Rhs::Bool;
            e.boolVal = isWord("true");
            next();
        } else if (acceptOp("{")) {
            if (isOp("}")) {
                e.rhs = RawStructEntry::Rhs::Enum;
            } else {
                RawElem first = parseElem();
                if (acceptOp("..")) {
                    e.rhs = RawStructEntry::Rhs::Range;
                    e.lo = first;
                    e.hi = parseElem();
                } else {
                    e.rhs = RawStructEntry::Rhs::Enum;
                    std::vector<RawElem> tup{first};
                    while (acceptOp(",")) tup.push_back(parseElem());
                    e.tuples.push_back(std::move(tup));
                    while (acceptOp(";")) {
                        if (isOp("}")) break;  // trailing separator
                        std::vector<RawElem> t2{parseElem()};
                        while (acceptOp(",")) t2.push_back(parseElem());
                        e.tuples.push_back(std::move(t2));
                    }
                }
            }
            expectOp("}");
        } else {
            e.rhs = RawStructEntry::Rhs::Scalar;
            e.scalar = parseElem();
        }
        expectOp(";");
        s.entries.push_back(std::move(e));
    }

    RawElem parseElem() {
        RawElem e;
        e.loc = cur().loc;
        if (acceptOp("-")) {
            if (cur().kind != Token::Kind::Int) fail("an integer");
            e.kind = RawElem::Kind::Int;
            e.intVal = -cur().intVal;
            next();
            return e;
        }
        if (cur().kind == Token::Kind::Int) {
            e.kind = RawElem::Kind::Int;
            e.intVal = cur().intVal;
            next();
            return e;
        }
        if (cur().kind == Token::Kind::Str) {
            e.kind = RawElem::Kind::Str;
            e.name = cur().text;
            next();
            return e;
        }
        if (cur().kind == Token::Kind::Ident) {
            e.name = cur().text;
            next();
            if (acceptOp("(")) {
                e.kind = RawElem::Kind::Cons;
                if (!isOp(")")) {
                    e.args.push_back(parseElem());
                    while (acceptOp(",")) e.args.push_back(parseElem());
                }
                expectOp(")");
            } else {
                e.kind = RawElem::Kind::Ident;
            }
            return e;
        }
        fail("a domain element");
    }

    void parseTermComp(RawNamespace& ns) {
        SourceLoc loc = cur().loc;
        next();
        auto t = std::make_shared<RawTermComp>();
        t->loc = loc;
        t->name = expectName();
        if (acceptWord("over")) t->vocab = parseQualName();
        expectWord("is");
        t->expr = parseExpr();
        expectOp(";");
        RawNsEntry e;
        e.kind = RawNsEntry::Kind::Term;
        e.term = std::move(t);
        ns.entries.push_back(std::move(e));
    }

    void parseFormulaComp(RawNamespace& ns) {
        SourceLoc loc = cur().loc;
        next();
        auto f = std::make_shared<RawFormulaComp>();
        f->loc = loc;
        f->name = expectName();
        if (acceptWord("over")) f->vocab = parseQualName();
        expectWord("is");
        f->expr = parseExpr();
        expectOp(";");
        RawNsEntry e;
        e.kind = RawNsEntry::Kind::Formula;
        e.formula = std::move(f);
        ns.entries.push_back(std::move(e));
    }

    // ---- expressions ----
    // precedence: <=>  <  =>/<=  <  |  <  &  <  ~  <  cmp  <  +-  <  */%  <  unary-  <  app

    RawExprPtr mkBinary(std::string op, RawExprPtr l, RawExprPtr r, SourceLoc loc) {
        auto e = std::make_shared<RawExpr>();
        e->kind = RawExpr::Kind::Binary;
        e->op = std::move(op);
        e->args = {std::move(l), std::move(r)};
        e->loc = loc;
        return e;
    }

    RawExprPtr parseExpr() { return parseIff(); }

    RawExprPtr parseIff() {
        RawExprPtr e = parseImpl();
        while (isOp("<=>")) {
            SourceLoc loc = cur().loc;
            next();
            e = mkBinary("<=>", e, parseImpl(), loc);
        }
        return e;
    }

    RawExprPtr parseImpl() {
        RawExprPtr e = parseDisj();
        if (isOp("=>") || isOp("<=")) {
            std::string op = cur().text;
            SourceLoc loc = cur().loc;
            next();
            return mkBinary(op, e, parseImpl(), loc);
        }
        return e;
    }

    RawExprPtr parseDisj() {
        RawExprPtr e = parseConj();
        while (isOp("|")) {
            SourceLoc loc = cur().loc;
            next();
            e = mkBinary("|", e, parseConj(), loc);
        }
        return e;
    }

    RawExprPtr parseConj() {
        RawExprPtr e = parseNeg();
        while (isOp("&")) {
            SourceLoc loc = cur().loc;
            next();
            e = mkBinary("&", e, parseNeg(), loc);
        }
        return e;
    }

    RawExprPtr parseNeg() {
        if (isOp("~")) {
            SourceLoc loc = cur().loc;
            next();
            auto e = std::make_shared<RawExpr>();
            e->kind = RawExpr::Kind::Unary;
            e->op = "~";
            e->args = {parseNeg()};
            e->loc = loc;
            return e;
        }
        return parseCmp();
    }

    bool atCmpOp() const {
        return isOp("=") || isOp("~=") || isOp("<") || isOp(">") || isOp("=<") || isOp(">=");
    }

    RawExprPtr parseCmp() {
        RawExprPtr first = parseAddSub();
        if (!atCmpOp()) return first;
        auto e = std::make_shared<RawExpr>();
        e->kind = RawExpr::Kind::Chain;
        e->loc = cur().loc;
        e->chainTerms.push_back(first);
        while (atCmpOp()) {
            e->chainOps.push_back(cur().text);
            next();
            e->chainTerms.push_back(parseAddSub());
        }
        return e;
    }

    RawExprPtr parseAddSub() {
        RawExprPtr e = parseMulDiv();
        while (isOp("+") || isOp("-")) {
            std::string op = cur().text;
            SourceLoc loc = cur().loc;
            next();
            e = mkBinary(op, e, parseMulDiv(), loc);
        }
        return e;
    }

    RawExprPtr parseMulDiv() {
        RawExprPtr e = parseUnary();
        while (isOp("*") || isOp("/") || isOp("%")) {
            std::string op = cur().text;
            SourceLoc loc = cur().loc;
            next();
            e = mkBinary(op, e, parseUnary(), loc);
        }
        return e;
    }

    RawExprPtr parseUnary() {
        if (isOp("-")) {
            SourceLoc loc = cur().loc;
            next();
            if (cur().kind == Token::Kind::Int) {
                auto e = std::make_shared<RawExpr>();
                e->kind = RawExpr::Kind::Int;
                e->intVal = -cur().intVal;
                e->loc = loc;
                next();
                return e;
            }
            auto zero = std::make_shared<RawExpr>();
            zero->kind = RawExpr::Kind::Int;
            zero->intVal = 0;
            zero->loc = loc;
            return mkBinary("-", zero, parseUnary(), loc);
        }
        return parsePrimary();
    }

    bool isAggWord() const {
        return isWord("sum") || isWord("prod") || isWord("min") || isWord("max") ||
               isWord("count");
    }

    RawExprPtr parsePrimary() {
        SourceLoc loc = cur().loc;
        if (cur().kind == Token::Kind::Int) {
            auto e = std::make_shared<RawExpr>();
            e->kind = RawExpr::Kind::Int;
            e->intVal = cur().intVal;
            e->loc = loc;
            next();
            return e;
        }
        if (cur().kind == Token::Kind::Float) {
            auto e = std::make_shared<RawExpr>();
            e->kind = RawExpr::Kind::Float;
            e->floatVal = std::stod(cur().text);
            e->loc = loc;
            next();
            return e;
        }
        if (cur().kind == Token::Kind::Str) {
            auto e = std::make_shared<RawExpr>();
            e->kind = RawExpr::Kind::Str;
            e->strVal = cur().text;
            e->loc = loc;
            next();
            return e;
        }
        if (isWord("true") || isWord("false")) {
            auto e = std::make_shared<RawExpr>();
            e->kind = RawExpr::Kind::Bool;
            e->boolVal = isWord("true");
            e->loc = loc;
            next();
            return e;
        }
        if (isOp("(")) {
            next();
            RawExprPtr e = parseExpr();
            expectOp(")");
            return e;
        }
        if (isOp("!") || isOp("?")) return parseQuantifier();
        if (isOp("{")) return parseSetComp();
        if (isOp("#")) {
            next();
            return parseAggArgs("#", loc);
        }
        if (isAggWord() && peek().kind == Token::Kind::Op && peek().text == "(") {
            std::string fn = cur().text == "count" ? "#" : cur().text;
            next();
            return parseAggArgs(fn, loc);
        }
        if ((isWord("denotes") || isWord("exists")) && peek().kind == Token::Kind::Op &&
            peek().text == "(") {
            next();
            next();
            auto e = std::make_shared<RawExpr>();
            e->kind = RawExpr::Kind::Denotes;
            e->args = {parseExpr()};
            e->loc = loc;
            expectOp(")");
            return e;
        }
        if (cur().kind == Token::Kind::Ident) {
            QualName q = parseQualName();
            auto e = std::make_shared<RawExpr>();
            e->loc = loc;
            e->name = std::move(q);
            if (acceptOp("(")) {
                e->kind = RawExpr::Kind::Call;
                if (!isOp(")")) {
                    e->args.push_back(parseExpr());
                    while (acceptOp(",")) e->args.push_back(parseExpr());
                }
                expectOp(")");
            } else {
                e->kind = RawExpr::Kind::Name;
            }
            return e;
        }
        fail("an expression");
    }

    RawExprPtr parseAggArgs(const std::string& fn, SourceLoc loc) {
        auto e = std::make_shared<RawExpr>();
        e->kind = RawExpr::Kind::Agg;
        e->aggFn = fn;
        e->loc = loc;
        if (isOp("{")) {  // `#{...}` form, no parentheses
            e->aggSet = parseSetComp();
            return e;
        }
        expectOp("(");
        if (isOp("{")) {
            e->aggSet = parseSetComp();
        } else {
            e->aggIsPred = true;
            e->aggPred = parseQualName();
        }
        expectOp(")");
        return e;
    }

    RawExprPtr parseQuantifier() {
        SourceLoc loc = cur().loc;
        bool forall = isOp("!");
        next();
        // extended existential: `? op k vars : body`
        if (!forall && atCmpOp()) {
            std::string op = cur().text;
            next();
            if (cur().kind != Token::Kind::Int) fail("an integer bound");
            long long k = cur().intVal;
            next();
            auto e = std::make_shared<RawExpr>();
            e->kind = RawExpr::Kind::ExtQuant;
            e->extOp = op;
            e->extBound = k;
            e->loc = loc;
            parseBinderList(e->binders);
            expectOp(":");
            e->body = parseExpr();
            return e;
        }
        auto e = std::make_shared<RawExpr>();
        e->kind = RawExpr::Kind::Quant;
        e->forall = forall;
        e->loc = loc;
        parseBinderList(e->binders);
        expectOp(":");
        e->body = parseExpr();
        return e;
    }

    void parseBinderList(std::vector<RawBinderGroup>& out) {
        parseBinderGroup(out);
        while (acceptOp(",")) parseBinderGroup(out);
    }

    void parseBinderGroup(std::vector<RawBinderGroup>& out) {
        RawBinderGroup g;
        g.loc = cur().loc;
        if (isOp("(")) {
            g.kind = RawBinderGroup::Kind::Tuples;
            while (acceptOp("(")) {
                std::vector<std::string> tup;
                tup.push_back(expectName());
                while (acceptOp(",")) tup.push_back(expectName());
                expectOp(")");
                g.tuples.push_back(std::move(tup));
            }
            if (acceptWord("in")) {
                if (isOp("{")) g.setComp = parseSetComp();
                else g.setName = parseQualName();
            } else if (acceptWord("sat")) {
                g.kind = RawBinderGroup::Kind::Sat;
                g.guard = parseExpr();
            } else {
                fail("'in' or 'sat'");
            }
            out.push_back(std::move(g));
            return;
        }
        // plain variables: x y z [in T | sat phi]
        g.kind = RawBinderGroup::Kind::Plain;
        g.tuples.push_back({expectName()});
        while (cur().kind == Token::Kind::Ident && !isWord("in") && !isWord("sat"))
            g.tuples.push_back({cur().text}), next();
        if (acceptWord("in")) {
            if (isOp("{")) g.setComp = parseSetComp();
            else g.setName = parseQualName();
        } else if (acceptWord("sat")) {
            g.kind = RawBinderGroup::Kind::Sat;
            g.guard = parseExpr();
        }
        out.push_back(std::move(g));
    }

    RawExprPtr parseSetComp() {
        SourceLoc loc = cur().loc;
        expectOp("{");
        auto e = std::make_shared<RawExpr>();
        e->kind = RawExpr::Kind::SetComp;
        e->loc = loc;
        parseBinderList(e->binders);
        if (acceptOp(":")) {
            e->body = parseExpr();
            if (acceptOp(":")) {
                // term tuple: single term or (t1,...,tn)
                if (acceptOp("(")) {
                    if (!isOp(")")) {
                        e->tuple.push_back(parseExpr());
                        while (acceptOp(",")) e->tuple.push_back(parseExpr());
                    }
                    expectOp(")");
                } else {
                    e->tuple.push_back(parseExpr());
                }
            }
        }
        expectOp("}");
        return e;
    }
};

}  // namespace

RawNamespacePtr parseSpecification(const std::vector<Token>& tokens, RawNamespacePtr root) {
    if (!root) {
        root = std::make_shared<RawNamespace>();
        root->name = "global";
        root->fqn = "global";
    }
    Parser p(tokens, root);
    p.parseInto();
    return root;
}

RawNamespacePtr parseSpecification(const std::string& text, const std::string& filename,
                                   RawNamespacePtr root) {
    return parseSpecification(tokenize(text, filename), std::move(root));
}

// ---------------------------------------------------------------------------
// Component lookup and include flattening
// ---------------------------------------------------------------------------

namespace {

void collectMatches(RawNamespace& ns, const QualName& name,
                    std::vector<std::pair<RawNamespace*, RawNsEntry*>>& out) {
    for (auto& e : ns.entries) {
        if (e.kind == RawNsEntry::Kind::Namespace) {
            // namespace itself may be the target
            if (e.ns->name == name.last() && name.parts.size() == 1)
                out.push_back({&ns, &e});
            collectMatches(*e.ns, name, out);
            continue;
        }
        if (e.kind == RawNsEntry::Kind::Include) continue;
        if (e.entryName() != name.last()) continue;
        // check qualified prefix: name.parts must be a suffix of (ns.fqn + entry)
        std::vector<std::string> fqnParts;
        {
            std::string f = ns.fqn;
            size_t start = 0;
            while (true) {
                size_t p = f.find("::", start);
                if (p == std::string::npos) { fqnParts.push_back(f.substr(start)); break; }
                fqnParts.push_back(f.substr(start, p - start));
                start = p + 2;
            }
            fqnParts.push_back(e.entryName());
        }
        if (name.parts.size() > fqnParts.size()) continue;
        bool suffix = true;
        for (size_t i = 0; i < name.parts.size(); ++i)
            if (name.parts[name.parts.size() - 1 - i] != fqnParts[fqnParts.size() - 1 - i]) {
                suffix = false;
                break;
            }
        if (suffix) out.push_back({&ns, &e});
    }
}

}  // namespace

std::vector<std::pair<RawNamespace*, RawNsEntry*>> lookupComponents(RawNamespace& root,
                                                                    const QualName& name,
                                                                    RawNamespace* from) {
    std::vector<std::pair<RawNamespace*, RawNsEntry*>> all;
    collectMatches(root, name, all);
    if (all.size() <= 1 || !from) return all;
    // prefer matches declared in the requesting namespace, then its ancestors
    for (RawNamespace* scope = from; scope;) {
        std::vector<std::pair<RawNamespace*, RawNsEntry*>> scoped;
        for (auto& m : all)
            if (m.first == scope) scoped.push_back(m);
        if (!scoped.empty()) return scoped;
        // walk outward by fqn prefix
        if (scope->fqn == "global" || scope == &root) break;
        std::string parentFqn = scope->fqn.substr(0, scope->fqn.rfind("::"));
        RawNamespace* parent = nullptr;
        std::vector<RawNamespace*> stack{&root};
        while (!stack.empty()) {
            RawNamespace* n = stack.back();
            stack.pop_back();
            if (n->fqn == parentFqn) { parent = n; break; }
            for (auto& e : n->entries)
                if (e.kind == RawNsEntry::Kind::Namespace) stack.push_back(e.ns.get());
        }
        scope = parent;
    }
    return all;
}

namespace {

struct IncludeFlattener {
    RawNamespace& root;
    // visit states for cycle detection, keyed by component pointer
    std::map<const void*, int> state;  // 0 unseen / 1 in-progress / 2 done
    std::vector<std::string> chain;

    explicit IncludeFlattener(RawNamespace& r) : root(r) {}

    [[noreturn]] void cycleError(const std::string& name, SourceLoc loc) {
        std::string msg = "cyclic include: ";
        for (auto& c : chain) msg += c + " -> ";
        msg += name;
        throw Error(Error::Kind::Input, msg, loc);
    }

    std::pair<RawNamespace*, RawNsEntry*> resolveTarget(const QualName& q, RawNamespace* from,
                                                        SourceLoc loc) {
        // For refined includes (V::sym), the component is the prefix.
        auto matches = lookupComponents(root, q, from);
        if (matches.size() == 1) return matches[0];
        if (matches.size() > 1)
            throw Error(Error::Kind::Name, "ambiguous include target '" + q.str() + "'", loc);
        return {nullptr, nullptr};
    }

    void run() { flattenNamespace(root); }

    void flattenNamespace(RawNamespace& ns) {
        // first flatten nested namespaces and component-level includes
        std::vector<RawNsEntry> newEntries;
        for (auto& e : ns.entries) {
            switch (e.kind) {
                case RawNsEntry::Kind::Namespace:
                    flattenNamespace(*e.ns);
                    newEntries.push_back(e);
                    break;
                case RawNsEntry::Kind::Include: {
                    auto [inNs, target] = resolveTarget(e.include.target, &ns, e.include.loc);
                    if (!target || target->kind != RawNsEntry::Kind::Namespace)
                        throw Error(Error::Kind::Name,
                                    "cannot resolve namespace include '" +
                                        e.include.target.str() + "'",
                                    e.include.loc);
                    flattenNamespace(*target->ns);
                    for (auto& sub : target->ns->entries) newEntries.push_back(sub);
                    break;
                }
                default:
                    flattenComponent(ns, e);
                    newEntries.push_back(e);
                    break;
            }
        }
        ns.entries = std::move(newEntries);
    }

    void flattenComponent(RawNamespace& ns, RawNsEntry& e) {
        switch (e.kind) {
            case RawNsEntry::Kind::Vocab: flattenVocab(ns, *e.vocab); break;
            case RawNsEntry::Kind::Theory: flattenTheory(ns, *e.theory); break;
            case RawNsEntry::Kind::Structure: flattenStructure(ns, *e.structure); break;
            default: break;
        }
    }

    void flattenVocab(RawNamespace& ns, RawVocab& v) {
        auto st = state.find(&v);
        if (st != state.end() && st->second == 1) cycleError(v.name, v.loc);
        if (st != state.end() && st->second == 2) return;
        state[&v] = 1;
        chain.push_back(v.name);
        std::vector<RawVocabEntry> out;
        for (auto& e : v.entries) {
            if (e.kind != RawVocabEntry::Kind::Include) {
                out.push_back(e);
                continue;
            }
            QualName target = e.include.target;
            // refined include: last part is a symbol inside a vocabulary
            QualName compName = target;
            std::string symName;
            auto [inNs, comp] = resolveTarget(compName, &ns, e.include.loc);
            if ((!comp || comp->kind != RawNsEntry::Kind::Vocab) && target.parts.size() > 1) {
                symName = target.parts.back();
                compName.parts.pop_back();
                compName.hasSig = false;
                compName.arityAnn.reset();
                std::tie(inNs, comp) = resolveTarget(compName, &ns, e.include.loc);
            }
            if (!comp || comp->kind != RawNsEntry::Kind::Vocab)
                throw Error(Error::Kind::Name,
                            "cannot resolve vocabulary include '" + target.str() + "'",
                            e.include.loc);
            flattenVocab(*inNs, *comp->vocab);
            if (symName.empty()) {
                for (auto& sub : comp->vocab->entries) out.push_back(sub);
            } else {
                appendRefined(out, *comp->vocab, target, symName, e.include.loc);
            }
        }
        v.entries = std::move(out);
        chain.pop_back();
        state[&v] = 2;
    }

    // include V::name : the named symbol plus the types it mentions
    void appendRefined(std::vector<RawVocabEntry>& out, RawVocab& from, const QualName& target,
                       const std::string& symName, SourceLoc loc) {
        std::vector<QualName> neededTypes;
        bool found = false;
        for (auto& e : from.entries) {
            bool match = false;
            if (e.kind == RawVocabEntry::Kind::Pred && e.pred.name == symName) {
                if (target.arityAnn && *target.arityAnn != (int)e.pred.argTypes.size()) continue;
                for (auto& t : e.pred.argTypes) neededTypes.push_back(t);
                match = true;
            } else if (e.kind == RawVocabEntry::Kind::Func && e.func.name == symName) {
                if (target.arityAnn && *target.arityAnn != (int)e.func.argTypes.size()) continue;
                for (auto& t : e.func.argTypes) neededTypes.push_back(t);
                neededTypes.push_back(e.func.outType);
                match = true;
            } else if (e.kind == RawVocabEntry::Kind::Type && e.type.name == symName) {
                match = true;
            }
            if (match) {
                found = true;
                // pull in the argument types first
                for (auto& t : neededTypes) {
                    for (auto& te : from.entries)
                        if (te.kind == RawVocabEntry::Kind::Type && te.type.name == t.last())
                            out.push_back(te);
                }
                out.push_back(e);
            }
        }
        if (!found)
            throw Error(Error::Kind::Name,
                        "include target '" + target.str() + "' not found", loc);
    }

    void flattenTheory(RawNamespace& ns, RawTheory& t) {
        auto st = state.find(&t);
        if (st != state.end() && st->second == 1) cycleError(t.name, t.loc);
        if (st != state.end() && st->second == 2) return;
        state[&t] = 1;
        chain.push_back(t.name);
        std::vector<RawTheoryItem> out;
        for (auto& item : t.items) {
            if (item.kind != RawTheoryItem::Kind::Include) {
                out.push_back(item);
                continue;
            }
            auto [inNs, comp] = resolveTarget(item.include.target, &ns, item.include.loc);
            if (!comp || comp->kind != RawNsEntry::Kind::Theory)
                throw Error(Error::Kind::Name,
                            "cannot resolve theory include '" + item.include.target.str() + "'",
                            item.include.loc);
            flattenTheory(*inNs, *comp->theory);
            for (auto& sub : comp->theory->items) out.push_back(sub);
        }
        t.items = std::move(out);
        chain.pop_back();
        state[&t] = 2;
    }

    void flattenStructure(RawNamespace& ns, RawStructure& s) {
        auto st = state.find(&s);
        if (st != state.end() && st->second == 1) cycleError(s.name, s.loc);
        if (st != state.end() && st->second == 2) return;
        state[&s] = 1;
        chain.push_back(s.name);
        std::vector<RawStructEntry> out;
        for (auto& e : s.entries) {
            if (e.rhs != RawStructEntry::Rhs::Include) {
                out.push_back(e);
                continue;
            }
            QualName target = e.include.target;
            QualName compName = target;
            std::string symName;
            auto [inNs, comp] = resolveTarget(compName, &ns, e.include.loc);
            if ((!comp || comp->kind != RawNsEntry::Kind::Structure) && target.parts.size() > 1) {
                symName = target.parts.back();
                compName.parts.pop_back();
                std::tie(inNs, comp) = resolveTarget(compName, &ns, e.include.loc);
            }
            if (!comp || comp->kind != RawNsEntry::Kind::Structure)
                throw Error(Error::Kind::Name,
                            "cannot resolve structure include '" + target.str() + "'",
                            e.include.loc);
            flattenStructure(*inNs, *comp->structure);
            for (auto& sub : comp->structure->entries) {
                if (symName.empty() || sub.symbol.last() == symName) out.push_back(sub);
            }
        }
        s.entries = std::move(out);
        chain.pop_back();
        state[&s] = 2;
    }
};

}  // namespace

void flattenIncludes(const RawNamespacePtr& root) {
    IncludeFlattener f(*root);
    f.run();
}

}  // namespace kbf
