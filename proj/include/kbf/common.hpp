#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace kbf {

struct SourceLoc {
    std::string file;
    int line = 0;
    int col = 0;

    bool valid() const { return line > 0; }
    std::string str() const;
};

// Single error type for the whole pipeline; the kind maps to CLI exit codes.
class Error : public std::runtime_error {
public:
    enum class Kind {
        Lex,          // tokenizer
        Parse,        // syntax
        Name,         // unresolved or ambiguous names
        Type,         // well-typedness
        Input,        // bad structures, inconsistent data
        Domain,       // infinite/uninterpreted quantification domains
        Unsupported,  // recognized but out-of-scope feature
        Usage,        // bad CLI usage
        Internal,
    };

    Error(Kind k, std::string msg, SourceLoc loc = {});

    Kind kind;
    SourceLoc loc;
};

enum class TruthValue { False, Unknown, True };

inline TruthValue tvNot(TruthValue v) {
    if (v == TruthValue::True) return TruthValue::False;
    if (v == TruthValue::False) return TruthValue::True;
    return TruthValue::Unknown;
}
inline TruthValue tvAnd(TruthValue a, TruthValue b) {
    if (a == TruthValue::False || b == TruthValue::False) return TruthValue::False;
    if (a == TruthValue::True && b == TruthValue::True) return TruthValue::True;
    return TruthValue::Unknown;
}
inline TruthValue tvOr(TruthValue a, TruthValue b) {
    if (a == TruthValue::True || b == TruthValue::True) return TruthValue::True;
    if (a == TruthValue::False && b == TruthValue::False) return TruthValue::False;
    return TruthValue::Unknown;
}
inline TruthValue tvFromBool(bool b) { return b ? TruthValue::True : TruthValue::False; }

const char* tvName(TruthValue v);

}  // namespace kbf
