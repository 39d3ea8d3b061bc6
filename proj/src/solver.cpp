#include "kbf/solver.hpp"

#include <algorithm>
#include <cmath>

namespace kbf {

namespace {

struct Clause {
    std::vector<Lit> lits;
    bool learnt = false;
    double act = 0;
};

int lubyNumber(int i) {
    // the i-th element of the Luby sequence (1-based)
    int k = 1;
    while ((1 << (k + 1)) - 1 <= i) ++k;
    while (i != (1 << k) - 1) {
        i = i - (1 << k) + 1;
        k = 1;
        while ((1 << (k + 1)) - 1 <= i) ++k;
    }
    return 1 << (k - 1);
}

}  // namespace

struct Solver::Impl {
    const GroundTheory& G;
    int nVars;

    std::vector<Clause> clauses;
    std::vector<std::vector<int>> watches;       // literal index -> clause ids
    std::vector<signed char> val;                // 1-based, 0 unassigned
    std::vector<signed char> phase;              // saved phase
    std::vector<int> level;
    std::vector<int> reason;                     // clause id or -1
    std::vector<Lit> trail;
    std::vector<int> trailLim;
    size_t qhead = 0;

    std::vector<double> activity;
    double varInc = 1.0;
    const double varDecay = 0.95;

    // aggregate watching: per-variable list of aggregate ids (reif and members)
    std::vector<std::vector<int>> aggOfVar;

    // branch-and-bound objective bound (objective <= objBound when enabled)
    bool objEnabled = false;
    long long objBound = 0;

    SolverStats st;
    long long conflictBudget = -1;

    explicit Impl(const GroundTheory& g) : G(g), nVars(g.numAtoms()) {
        val.assign(nVars + 1, 0);
        phase.assign(nVars + 1, -1);  // default polarity false
        level.assign(nVars + 1, 0);
        reason.assign(nVars + 1, -1);
        activity.assign(nVars + 1, 0.0);
        watches.assign(2 * (nVars + 1), {});
        aggOfVar.assign(nVars + 1, {});
        for (auto& c : G.clauses) addClause(c.lits, false);
        for (size_t i = 0; i < G.aggs.size(); ++i) {
            const GroundAgg& a = G.aggs[i];
            aggOfVar[std::abs(a.reif)].push_back((int)i);
            for (auto& [w, l] : a.wlits) aggOfVar[std::abs(l)].push_back((int)i);
        }
        for (int v = 1; v <= nVars; ++v) {
            const GroundAtom& a = G.atoms[v];
            if (a.origin == GroundAtom::Origin::SymbolTuple) activity[v] = 1e-3;
        }
    }

    // ---- literals ----
    static int widx(Lit l) { return 2 * std::abs(l) + (l < 0 ? 1 : 0); }
    signed char value(Lit l) const { return l > 0 ? val[l] : (signed char)-val[-l]; }
    bool isTrue(Lit l) const { return value(l) > 0; }
    bool isFalse(Lit l) const { return value(l) < 0; }
    bool isUnassigned(Lit l) const { return value(l) == 0; }
    int varLevel(Lit l) const { return level[std::abs(l)]; }

    int decisionLevel() const { return (int)trailLim.size(); }

    void newDecisionLevel() { trailLim.push_back((int)trail.size()); }

    void enqueue(Lit l, int why) {
        int v = std::abs(l);
        val[v] = l > 0 ? 1 : -1;
        phase[v] = val[v];
        level[v] = decisionLevel();
        reason[v] = why;
        trail.push_back(l);
    }

    void backtrackTo(int lvl) {
        if (decisionLevel() <= lvl) return;
        int bound = trailLim[lvl];
        for (int i = (int)trail.size() - 1; i >= bound; --i) val[std::abs(trail[i])] = 0;
        trail.resize(bound);
        trailLim.resize(lvl);
        qhead = trail.size();
    }

    // ---- clause management ----

    // returns clause id, or -2 when the clause is immediately conflicting
    int addClause(std::vector<Lit> lits, bool learnt) {
        // at level 0, drop false literals and satisfied clauses
        if (decisionLevel() == 0) {
            std::vector<Lit> keep;
            for (Lit l : lits) {
                if (isTrue(l)) return -1;
                if (!isFalse(l)) keep.push_back(l);
            }
            lits = std::move(keep);
            if (lits.empty()) return -2;
            if (lits.size() == 1) {
                enqueue(lits[0], -1);
                return -1;
            }
        }
        Clause c;
        c.lits = std::move(lits);
        c.learnt = learnt;
        int id = (int)clauses.size();
        clauses.push_back(std::move(c));
        watches[widx(clauses[id].lits[0])].push_back(id);
        watches[widx(clauses[id].lits[1])].push_back(id);
        return id;
    }

    // materialize a propagator explanation as a clause usable as a reason;
    // lits[0] must be the implied literal
    int addExplanation(std::vector<Lit> lits) {
        Clause c;
        c.lits = std::move(lits);
        c.learnt = true;
        int id = (int)clauses.size();
        clauses.push_back(std::move(c));
        if (clauses[id].lits.size() >= 2) {
            watches[widx(clauses[id].lits[0])].push_back(id);
            watches[widx(clauses[id].lits[1])].push_back(id);
        }
        return id;
    }

    // ---- propagation ----

    // returns conflicting clause id or -1
    int propagate() {
        while (qhead < trail.size()) {
            Lit p = trail[qhead++];
            ++st.propagations;
            // clause propagation on -p
            std::vector<int>& ws = watches[widx(-p)];
            size_t i = 0, j = 0;
            int confl = -1;
            for (; i < ws.size(); ++i) {
                int ci = ws[i];
                Clause& c = clauses[ci];
                // make sure -p is lits[1]
                if (c.lits[0] == -p) std::swap(c.lits[0], c.lits[1]);
                if (isTrue(c.lits[0])) {
                    ws[j++] = ci;
                    continue;
                }
                bool found = false;
                for (size_t k = 2; k < c.lits.size(); ++k) {
                    if (!isFalse(c.lits[k])) {
                        std::swap(c.lits[1], c.lits[k]);
                        watches[widx(c.lits[1])].push_back(ci);
                        found = true;
                        break;
                    }
                }
                if (found) continue;
                ws[j++] = ci;
                if (isFalse(c.lits[0])) {
                    confl = ci;
                    ++i;
                    break;
                }
                enqueue(c.lits[0], ci);
            }
            while (i < ws.size()) ws[j++] = ws[i++];
            ws.resize(j);
            if (confl >= 0) return confl;
            // aggregate propagation for aggregates watching this variable
            for (int ai : aggOfVar[std::abs(p)]) {
                int c = propagateAgg(ai);
                if (c >= 0) return c;
            }
            if (objEnabled) {
                int c = propagateObjective();
                if (c >= 0) return c;
            }
        }
        return -1;
    }

    struct AggBounds {
        long long lo = 0, hi = 0;
    };

    AggBounds aggBounds(const GroundAgg& a) const {
        AggBounds b;
        if (a.fn == AggFn::Prod) {
            b.lo = 1;
            b.hi = 1;
            bool zeroPossible = false;
            for (auto& [w, l] : a.wlits) {
                if (isTrue(l)) {
                    b.lo *= w;
                    b.hi *= w;
                } else if (!isFalse(l)) {
                    if (w == 0) zeroPossible = true;
                    if (w > 1) b.hi *= w;
                }
            }
            if (zeroPossible) b.lo = 0;
            if (b.lo > b.hi) std::swap(b.lo, b.hi);
            return b;
        }
        for (auto& [w, l] : a.wlits) {
            if (isTrue(l)) {
                b.lo += w;
                b.hi += w;
            } else if (!isFalse(l)) {
                if (w < 0) b.lo += w;
                else b.hi += w;
            }
        }
        return b;
    }

    static bool cmpAllIn(CmpOp op, long long lo, long long hi, long long k) {
        switch (op) {
            case CmpOp::Eq: return lo == k && hi == k;
            case CmpOp::Neq: return k < lo || hi < k;
            case CmpOp::Lt: return hi < k;
            case CmpOp::Leq: return hi <= k;
            case CmpOp::Gt: return lo > k;
            case CmpOp::Geq: return lo >= k;
        }
        return false;
    }
    static bool cmpNoneIn(CmpOp op, long long lo, long long hi, long long k) {
        return cmpAllIn(cmpNegate(op), lo, hi, k);
    }

    // coarse explanation: the current values of all assigned member literals
    void explainAgg(const GroundAgg& a, std::vector<Lit>& out, bool includeReif) {
        if (includeReif && !isUnassigned(a.reif))
            out.push_back(isTrue(a.reif) ? -a.reif : a.reif);
        for (auto& [w, l] : a.wlits) {
            if (isTrue(l)) out.push_back(-l);
            else if (isFalse(l)) out.push_back(l);
        }
    }

    int propagateAgg(int ai) {
        const GroundAgg& a = G.aggs[ai];
        AggBounds b = aggBounds(a);
        // derive the reified literal
        if (isUnassigned(a.reif)) {
            if (cmpAllIn(a.cmp, b.lo, b.hi, a.bound)) {
                std::vector<Lit> expl{a.reif};
                explainAgg(a, expl, false);
                enqueue(a.reif, addExplanation(std::move(expl)));
            } else if (cmpNoneIn(a.cmp, b.lo, b.hi, a.bound)) {
                std::vector<Lit> expl{-a.reif};
                explainAgg(a, expl, false);
                enqueue(-a.reif, addExplanation(std::move(expl)));
            }
            return -1;
        }
        bool want = isTrue(a.reif);
        CmpOp op = want ? a.cmp : cmpNegate(a.cmp);
        // conflict?
        if (cmpNoneIn(op, b.lo, b.hi, a.bound)) {
            std::vector<Lit> expl;
            explainAgg(a, expl, true);
            return addExplanation(std::move(expl));
        }
        if (a.fn == AggFn::Prod) return -1;  // bound reasoning only at the interval level
        // force members whose value would certainly violate the constraint
        for (auto& [w, l] : a.wlits) {
            if (!isUnassigned(l)) continue;
            // bounds if l is set true / false
            long long loT = b.lo + (w < 0 ? 0 : w), hiT = b.hi + (w < 0 ? w : 0);
            long long loF = b.lo - (w < 0 ? w : 0), hiF = b.hi - (w < 0 ? 0 : w);
            if (cmpNoneIn(op, loT, hiT, a.bound)) {
                std::vector<Lit> expl{-l};
                explainAgg(a, expl, true);
                enqueue(-l, addExplanation(std::move(expl)));
            } else if (cmpNoneIn(op, loF, hiF, a.bound)) {
                std::vector<Lit> expl{l};
                explainAgg(a, expl, true);
                enqueue(l, addExplanation(std::move(expl)));
            }
        }
        return -1;
    }

    long long objectiveLo() const {
        long long lo = G.objectiveBase;
        for (auto& [w, l] : G.objective) {
            if (isTrue(l)) lo += w;
            else if (!isFalse(l) && w < 0) lo += w;
        }
        return lo;
    }

    int propagateObjective() {
        if (!objEnabled) return -1;
        long long lo = G.objectiveBase, hi = G.objectiveBase;
        for (auto& [w, l] : G.objective) {
            if (isTrue(l)) {
                lo += w;
                hi += w;
            } else if (!isFalse(l)) {
                if (w < 0) lo += w;
                else hi += w;
            }
        }
        if (lo > objBound) {
            std::vector<Lit> expl;
            for (auto& [w, l] : G.objective) {
                if (isTrue(l) && w > 0) expl.push_back(-l);
                if (isFalse(l) && w < 0) expl.push_back(l);
            }
            return addExplanation(std::move(expl));
        }
        // fix members that would push the objective over the bound
        for (auto& [w, l] : G.objective) {
            if (!isUnassigned(l) || w <= 0) continue;
            if (lo + w > objBound) {
                std::vector<Lit> expl{-l};
                for (auto& [w2, l2] : G.objective) {
                    if (l2 == l) continue;
                    if (isTrue(l2) && w2 > 0) expl.push_back(-l2);
                    if (isFalse(l2) && w2 < 0) expl.push_back(l2);
                }
                enqueue(-l, addExplanation(std::move(expl)));
            }
        }
        return -1;
    }

    // ---- conflict analysis (first UIP) ----

    void bumpVar(int v) {
        activity[v] += varInc;
        if (activity[v] > 1e100) {
            for (int i = 1; i <= nVars; ++i) activity[i] *= 1e-100;
            varInc *= 1e-100;
        }
    }

    void analyze(int confl, std::vector<Lit>& learnt, int& btLevel) {
        learnt.clear();
        learnt.push_back(0);  // placeholder for the asserting literal
        std::vector<char> seen(nVars + 1, 0);
        int counter = 0;
        Lit p = 0;
        int idx = (int)trail.size() - 1;
        int cref = confl;
        do {
            Clause& c = clauses[cref];
            for (size_t k = (p == 0 ? 0 : 1); k < c.lits.size(); ++k) {
                Lit q = c.lits[k];
                int v = std::abs(q);
                if (!seen[v] && level[v] > 0) {
                    seen[v] = 1;
                    bumpVar(v);
                    if (level[v] >= decisionLevel()) ++counter;
                    else learnt.push_back(q);
                }
            }
            // pick the next literal to resolve on
            while (!seen[std::abs(trail[idx])]) --idx;
            p = trail[idx];
            seen[std::abs(p)] = 0;
            cref = reason[std::abs(p)];
            --counter;
            if (counter > 0 && cref < 0) {
                // should not happen: decisions below the UIP are not resolved
                break;
            }
        } while (counter > 0);
        learnt[0] = -p;
        // backtrack level = max level among the other literals
        btLevel = 0;
        for (size_t i = 1; i < learnt.size(); ++i) btLevel = std::max(btLevel, varLevel(learnt[i]));
        // put a literal of btLevel at position 1 for watching
        if (learnt.size() > 1) {
            size_t maxI = 1;
            for (size_t i = 2; i < learnt.size(); ++i)
                if (varLevel(learnt[i]) > varLevel(learnt[maxI])) maxI = i;
            std::swap(learnt[1], learnt[maxI]);
        }
        varInc /= varDecay;
    }

    // ---- search ----

    Lit pickBranch() {
        int best = 0;
        double bestAct = -1;
        for (int v = 1; v <= nVars; ++v) {
            if (val[v] != 0) continue;
            if (activity[v] > bestAct) {
                bestAct = activity[v];
                best = v;
            }
        }
        if (!best) return 0;
        return phase[best] >= 0 ? best : -best;
    }

    // exact verification of all aggregates on a total assignment; returns a
    // falsified explanation clause id or -1
    int checkAggsExact() {
        for (auto& a : G.aggs) {
            long long v = a.fn == AggFn::Prod ? 1 : 0;
            for (auto& [w, l] : a.wlits) {
                if (!isTrue(l)) continue;
                if (a.fn == AggFn::Prod) v *= w;
                else v += w;
            }
            bool holds = cmpHoldsInt(a.cmp, v, a.bound);
            bool reif = isTrue(a.reif);
            if (holds == reif) continue;
            std::vector<Lit> expl;
            explainAgg(a, expl, true);
            return addExplanation(std::move(expl));
        }
        if (objEnabled) {
            long long v = G.objectiveBase;
            for (auto& [w, l] : G.objective)
                if (isTrue(l)) v += w;
            if (v > objBound) {
                std::vector<Lit> expl;
                for (auto& [w, l] : G.objective) {
                    if (isTrue(l) && w > 0) expl.push_back(-l);
                    if (isFalse(l) && w < 0) expl.push_back(l);
                }
                return addExplanation(std::move(expl));
            }
        }
        return -1;
    }

    // ---- well-foundedness of definitions on a total assignment ----

    // returns a conflict clause (possibly empty vector meaning consistent)
    bool checkWellFounded(std::vector<Lit>& conflictOut) {
        ++st.wfChecks;
        for (auto& def : G.defs) {
            if (def.rules.empty()) continue;
            // rules per head
            std::map<int, std::vector<const GroundRuleN*>> byHead;
            for (auto& r : def.rules) byHead[r.head].push_back(&r);
            // SCC decomposition over defined atoms
            std::map<int, int> comp;
            std::vector<std::vector<int>> sccs = defSccs(def, byHead, comp);
            // process SCCs in callee-first order
            for (auto& scc : sccs) {
                std::set<int> members(scc.begin(), scc.end());
                // local WFM with externals fixed by the assignment
                std::set<int> L, U;
                // lfp of "possibly true"
                bool changed = true;
                while (changed) {
                    changed = false;
                    for (int h : scc) {
                        if (U.count(h)) continue;
                        for (auto* r : byHead[h]) {
                            if (ruleBodyEval(*r, members, L, U) != TruthValue::False) {
                                U.insert(h);
                                changed = true;
                                break;
                            }
                        }
                    }
                }
                changed = true;
                while (changed) {
                    changed = false;
                    for (int h : scc) {
                        if (L.count(h)) continue;
                        for (auto* r : byHead[h]) {
                            if (ruleBodyEval(*r, members, L, U) == TruthValue::True) {
                                L.insert(h);
                                changed = true;
                                break;
                            }
                        }
                    }
                }
                // compare with the assignment
                int mismatch = 0;
                signed char wfVal = 0;
                for (int h : scc) {
                    bool assigned = isTrue(h);
                    bool wfTrue = L.count(h) != 0;
                    bool wfFalse = U.count(h) == 0;
                    if (assigned && !wfTrue) {
                        mismatch = h;
                        wfVal = wfFalse ? -1 : 0;
                        break;
                    }
                    if (!assigned && !wfFalse) {
                        mismatch = h;
                        wfVal = wfTrue ? 1 : 0;
                        break;
                    }
                }
                if (!mismatch) continue;
                ++st.wfConflicts;
                // conflict clause over the SCC's open literals (plus the
                // corrected defined atom when its WFM value is known)
                std::set<int> opens;
                for (int h : scc)
                    for (auto* r : byHead[h])
                        for (Lit l : r->body)
                            if (!members.count(std::abs(l))) opens.insert(std::abs(l));
                conflictOut.clear();
                for (int o : opens) conflictOut.push_back(isTrue(o) ? -o : o);
                if (wfVal > 0) conflictOut.push_back(mismatch);
                else if (wfVal < 0) conflictOut.push_back(-mismatch);
                else conflictOut.push_back(isTrue(mismatch) ? -mismatch : mismatch);
                return false;
            }
        }
        return true;
    }

    std::vector<std::vector<int>> defSccs(const GroundDefinitionInfo&,
                                          std::map<int, std::vector<const GroundRuleN*>>& byHead,
                                          std::map<int, int>& comp) {
        std::vector<int> nodes;
        for (auto& [h, rs] : byHead) nodes.push_back(h);
        std::map<int, int> index, low;
        std::map<int, bool> onStack;
        std::vector<int> stack;
        std::vector<std::vector<int>> out;
        int counter = 0;
        std::function<void(int)> connect = [&](int v) {
            index[v] = low[v] = counter++;
            stack.push_back(v);
            onStack[v] = true;
            for (auto* r : byHead[v]) {
                for (Lit l : r->body) {
                    int w = std::abs(l);
                    if (!byHead.count(w)) continue;
                    if (!index.count(w)) {
                        connect(w);
                        low[v] = std::min(low[v], low[w]);
                    } else if (onStack[w]) {
                        low[v] = std::min(low[v], index[w]);
                    }
                }
            }
            if (low[v] == index[v]) {
                std::vector<int> scc;
                while (true) {
                    int w = stack.back();
                    stack.pop_back();
                    onStack[w] = false;
                    comp[w] = (int)out.size();
                    scc.push_back(w);
                    if (w == v) break;
                }
                out.push_back(std::move(scc));
            }
        };
        for (int n : nodes)
            if (!index.count(n)) connect(n);
        return out;
    }

    TruthValue litEval(Lit l, const std::set<int>& members, const std::set<int>& L,
                       const std::set<int>& U) const {
        int v = std::abs(l);
        TruthValue tv;
        if (members.count(v)) {
            if (L.count(v)) tv = TruthValue::True;
            else if (U.count(v)) tv = TruthValue::Unknown;
            else tv = TruthValue::False;
        } else {
            tv = isTrue(v) ? TruthValue::True : TruthValue::False;
        }
        return l > 0 ? tv : tvNot(tv);
    }

    TruthValue ruleBodyEval(const GroundRuleN& r, const std::set<int>& members,
                            const std::set<int>& L, const std::set<int>& U) const {
        TruthValue acc = r.conj ? TruthValue::True : TruthValue::False;
        for (Lit l : r.body) {
            TruthValue v = litEval(l, members, L, U);
            acc = r.conj ? tvAnd(acc, v) : tvOr(acc, v);
        }
        return acc;
    }

    // ---- top-level search ----

    SolveResult search(const std::vector<Lit>& assumptions) {
        if (G.unsat) return {SolveResult::Status::Unsat, {}};
        backtrackTo(0);
        long long conflictsAtStart = st.conflicts;
        long long restartCount = 0;
        long long nextRestart = 64;
        while (true) {
            int confl = propagate();
            if (confl >= 0) {
                ++st.conflicts;
                if (conflictBudget >= 0 && st.conflicts - conflictsAtStart > conflictBudget)
                    return {SolveResult::Status::Interrupted, {}};
                if (decisionLevel() == 0) return {SolveResult::Status::Unsat, {}};
                if (decisionLevel() <= (int)assumptions.size()) {
                    // conflict within the assumptions
                    return {SolveResult::Status::UnsatAssumptions, {}};
                }
                std::vector<Lit> learnt;
                int btLevel = 0;
                analyze(confl, learnt, btLevel);
                btLevel = std::max(btLevel, (int)assumptions.size());
                backtrackTo(btLevel);
                if (learnt.size() == 1 && decisionLevel() == 0) {
                    if (isFalse(learnt[0])) return {SolveResult::Status::Unsat, {}};
                    if (!isTrue(learnt[0])) enqueue(learnt[0], -1);
                } else {
                    int id = addClause(learnt, true);
                    if (id == -2) return {SolveResult::Status::Unsat, {}};
                    if (id >= 0 && !isTrue(clauses[id].lits[0]))
                        enqueue(clauses[id].lits[0], id);
                }
                if (st.conflicts - conflictsAtStart >= nextRestart) {
                    ++restartCount;
                    nextRestart =
                        st.conflicts - conflictsAtStart + 64LL * lubyNumber((int)restartCount);
                    backtrackTo((int)assumptions.size() <= decisionLevel()
                                    ? (int)assumptions.size()
                                    : decisionLevel());
                }
                continue;
            }
            // assumptions first
            if (decisionLevel() < (int)assumptions.size()) {
                Lit a = assumptions[decisionLevel()];
                if (isFalse(a)) return {SolveResult::Status::UnsatAssumptions, {}};
                newDecisionLevel();
                if (!isTrue(a)) enqueue(a, -1);
                continue;
            }
            Lit next = pickBranch();
            if (next == 0) {
                // total assignment: verify aggregates and definitions
                int bad = checkAggsExact();
                if (bad >= 0) {
                    // treat as a conflict: restart and let propagation pick it up
                    if (clauses[bad].lits.empty()) return {SolveResult::Status::Unsat, {}};
                    backtrackTo((int)assumptions.size());
                    if (clauses[bad].lits.size() >= 2) {
                        watches[widx(clauses[bad].lits[0])].push_back(bad);
                        watches[widx(clauses[bad].lits[1])].push_back(bad);
                    } else if (decisionLevel() == 0) {
                        if (isFalse(clauses[bad].lits[0]))
                            return {SolveResult::Status::Unsat, {}};
                        if (!isTrue(clauses[bad].lits[0])) enqueue(clauses[bad].lits[0], bad);
                    }
                    ++st.conflicts;
                    continue;
                }
                std::vector<Lit> wfConflict;
                if (!checkWellFounded(wfConflict)) {
                    if (wfConflict.empty()) return {SolveResult::Status::Unsat, {}};
                    backtrackTo((int)assumptions.size());
                    int id = addClause(wfConflict, true);
                    if (id == -2) return {SolveResult::Status::Unsat, {}};
                    ++st.conflicts;
                    continue;
                }
                SolveResult r;
                r.status = SolveResult::Status::Sat;
                r.model.assign(nVars + 1, 0);
                for (int v = 1; v <= nVars; ++v) r.model[v] = val[v];
                return r;
            }
            ++st.decisions;
            newDecisionLevel();
            enqueue(next, -1);
        }
    }
};

Solver::Solver(const GroundTheory& G) : impl_(new Impl(G)) {}
Solver::~Solver() { delete impl_; }

SolveResult Solver::solve(const std::vector<Lit>& assumptions) {
    return impl_->search(assumptions);
}

std::optional<std::vector<Lit>> Solver::propagateRoot() {
    if (impl_->G.unsat) return std::nullopt;
    impl_->backtrackTo(0);
    // seed aggregate propagation even without fresh assignments
    for (size_t i = 0; i < impl_->G.aggs.size(); ++i) {
        int c = impl_->propagateAgg((int)i);
        if (c >= 0) return std::nullopt;
    }
    int confl = impl_->propagate();
    if (confl >= 0) return std::nullopt;
    // iterate: aggregate propagation may unlock more units
    bool changed = true;
    while (changed) {
        size_t before = impl_->trail.size();
        for (size_t i = 0; i < impl_->G.aggs.size(); ++i) {
            int c = impl_->propagateAgg((int)i);
            if (c >= 0) return std::nullopt;
        }
        if (impl_->propagate() >= 0) return std::nullopt;
        changed = impl_->trail.size() != before;
    }
    return impl_->trail;
}

Solver::MinimizeOutcome Solver::minimize(
    const std::function<bool(long long, const std::vector<signed char>&)>& onModel) {
    MinimizeOutcome out;
    if (!impl_->G.hasObjective)
        throw Error(Error::Kind::Usage, "minimize called without an objective");
    while (true) {
        SolveResult r = solve();
        if (r.status == SolveResult::Status::Interrupted) {
            return out;  // best so far, optimality not proven
        }
        if (!r.sat()) {
            out.optimalProven = out.sat;
            return out;
        }
        long long v = objectiveValue(r.model);
        out.sat = true;
        out.value = v;
        out.model = r.model;
        bool goOn = onModel ? onModel(v, r.model) : true;
        if (!goOn) return out;  // anytime stop: not proven optimal
        impl_->objEnabled = true;
        impl_->objBound = v - 1;
        impl_->backtrackTo(0);
    }
}

std::vector<std::vector<signed char>> Solver::enumerateModels(const std::vector<int>& projection,
                                                              long long maxModels) {
    std::vector<std::vector<signed char>> out;
    while (maxModels < 0 || (long long)out.size() < maxModels) {
        SolveResult r = solve();
        if (!r.sat()) break;
        out.push_back(r.model);
        if (projection.empty()) break;
        std::vector<Lit> block;
        for (int a : projection) block.push_back(r.model[a] > 0 ? -a : a);
        impl_->backtrackTo(0);
        int id = impl_->addClause(block, false);
        if (id == -2) break;
    }
    return out;
}

long long Solver::objectiveValue(const std::vector<signed char>& model) const {
    long long v = impl_->G.objectiveBase;
    for (auto& [w, l] : impl_->G.objective) {
        bool t = l > 0 ? model[l] > 0 : model[-l] < 0;
        if (t) v += w;
    }
    return v;
}

void Solver::setConflictBudget(long long budget) { impl_->conflictBudget = budget; }
const SolverStats& Solver::stats() const { return impl_->st; }

}  // namespace kbf
