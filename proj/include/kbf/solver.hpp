#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "kbf/grounder.hpp"

namespace kbf {

struct SolveResult {
    enum class Status { Sat, Unsat, UnsatAssumptions, Interrupted };
    Status status = Status::Unsat;
    // 1-based; 1 true, -1 false
    std::vector<signed char> model;
    bool sat() const { return status == Status::Sat; }
};

struct SolverStats {
    long long conflicts = 0;
    long long decisions = 0;
    long long propagations = 0;
    long long wfChecks = 0;
    long long wfConflicts = 0;
};

// CDCL over a ground theory: watched clauses, first-UIP learning, Luby
// restarts, bound-consistency propagation for aggregates, and a
// well-foundedness check for definitions on total assignments.
class Solver {
public:
    explicit Solver(const GroundTheory& G);
    ~Solver();
    Solver(const Solver&) = delete;
    Solver& operator=(const Solver&) = delete;

    SolveResult solve(const std::vector<Lit>& assumptions = {});

    // Unit propagation at the root level across clauses, aggregates and
    // completions; nullopt on root conflict.
    std::optional<std::vector<Lit>> propagateRoot();

    struct MinimizeOutcome {
        bool sat = false;
        bool optimalProven = false;
        long long value = 0;
        std::vector<signed char> model;
    };
    // Branch and bound: each improving model is reported through the
    // callback; returning false stops the search (anytime behavior).
    MinimizeOutcome minimize(
        const std::function<bool(long long, const std::vector<signed char>&)>& onModel);

    // Model enumeration with blocking clauses over the projection atoms.
    std::vector<std::vector<signed char>> enumerateModels(const std::vector<int>& projection,
                                                          long long maxModels);

    long long objectiveValue(const std::vector<signed char>& model) const;
    void setConflictBudget(long long budget);  // <0: unlimited
    const SolverStats& stats() const;

private:
    struct Impl;
    Impl* impl_;
};

}  // namespace kbf
