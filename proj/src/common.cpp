#include "kbf/common.hpp"

namespace kbf {

std::string SourceLoc::str() const {
    if (!valid()) return file;
    std::string s = file.empty() ? "" : file + ":";
    s += std::to_string(line) + ":" + std::to_string(col);
    return s;
}

static std::string formatError(const std::string& msg, const SourceLoc& loc) {
    if (loc.valid() || !loc.file.empty()) return loc.str() + ": " + msg;
    return msg;
}

Error::Error(Kind k, std::string msg, SourceLoc l)
    : std::runtime_error(formatError(msg, l)), kind(k), loc(std::move(l)) {}

const char* tvName(TruthValue v) {
    switch (v) {
        case TruthValue::True: return "true";
        case TruthValue::False: return "false";
        default: return "unknown";
    }
}

}  // namespace kbf
