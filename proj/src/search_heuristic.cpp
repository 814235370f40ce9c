#include "abn/search_heuristic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <numeric>

#include "abn/error.hpp"
#include "abn/parallel.hpp"
#include "abn/random.hpp"

namespace abn {

std::string_view to_string(HeuristicAlgorithm a) {
    switch (a) {
    case HeuristicAlgorithm::hill_climb: return "hill_climb";
    case HeuristicAlgorithm::tabu: return "tabu";
    case HeuristicAlgorithm::simulated_annealing: return "simulated_annealing";
    }
    return "?";
}

HeuristicAlgorithm parse_algorithm(std::string_view s) {
    if (s == "hill_climb" || s == "hc") return HeuristicAlgorithm::hill_climb;
    if (s == "tabu") return HeuristicAlgorithm::tabu;
    if (s == "simulated_annealing" || s == "sa") return HeuristicAlgorithm::simulated_annealing;
    throw Error("UnknownAlgorithm", "unknown heuristic '" + std::string(s) + "'");
}

void HeuristicConfig::validate() const {
    if (restarts == 0 || max_steps == 0 || tabu_length == 0)
        throw Error("InvalidConfig", "restarts, max_steps and tabu_length must be positive");
    if (!(initial_temperature > 0)) throw Error("InvalidConfig", "temperature must be positive");
    if (!(cooling_factor > 0 && cooling_factor < 1)) throw Error("InvalidConfig", "cooling factor must be in (0,1)");
    if (!(initial_density >= 0 && initial_density <= 1)) throw Error("InvalidConfig", "density must be in [0,1]");
}

std::size_t SearchTrace::best_index() const {
    std::size_t best = 0;
    for (std::size_t r = 1; r < restarts.size(); ++r)
        if (restarts[r].score > restarts[best].score) best = r;
    return best;
}

namespace {

constexpr double kFloor = -1e300;

enum class MoveKind { add, remove, reverse };

struct Move {
    MoveKind kind;
    std::size_t parent, child;  // arc parent -> child before the move
    double delta;
};

// Current structure as parent masks, with cached per-node scores.
class State {
public:
    State(const ScoreCache& cache, ScoreType score, std::vector<std::uint64_t> masks)
        : cache_(cache), score_type_(score), masks_(std::move(masks)), node_score_(masks_.size()) {
        for (std::size_t i = 0; i < masks_.size(); ++i) node_score_[i] = score_of(i, masks_[i]).value();
        total_ = std::accumulate(node_score_.begin(), node_score_.end(), 0.0);
    }

    std::size_t size() const { return masks_.size(); }
    double total() const { return total_; }
    bool has_arc(std::size_t p, std::size_t c) const { return masks_[c] >> p & 1U; }
    const std::vector<std::uint64_t>& masks() const { return masks_; }

    std::optional<double> score_of(std::size_t node, std::uint64_t mask) const {
        const CacheEntry* e = cache_.find(node, mask);
        if (!e) return std::nullopt;
        double s = e->score(score_type_);
        return std::isfinite(s) ? s : kFloor;
    }

    // Is there a directed path from `from` to `to`, ignoring arc skip_p -> skip_c?
    bool reaches(std::size_t from, std::size_t to, std::size_t skip_p = SIZE_MAX, std::size_t skip_c = SIZE_MAX) const {
        const std::size_t n = size();
        std::uint64_t seen = std::uint64_t{1} << from;
        std::vector<std::size_t> stack{from};
        while (!stack.empty()) {
            std::size_t v = stack.back();
            stack.pop_back();
            if (v == to) return true;
            for (std::size_t c = 0; c < n; ++c) {
                if (!(masks_[c] >> v & 1U) || (seen >> c & 1U)) continue;
                if (v == skip_p && c == skip_c) continue;
                seen |= std::uint64_t{1} << c;
                stack.push_back(c);
            }
        }
        return false;
    }

    std::optional<Move> evaluate(MoveKind kind, std::size_t p, std::size_t c) const {
        const std::uint64_t bp = std::uint64_t{1} << p, bc = std::uint64_t{1} << c;
        switch (kind) {
        case MoveKind::add: {
            if (has_arc(p, c) || has_arc(c, p)) return std::nullopt;
            auto s = score_of(c, masks_[c] | bp);
            if (!s || reaches(c, p)) return std::nullopt;
            return Move{kind, p, c, *s - node_score_[c]};
        }
        case MoveKind::remove: {
            if (!has_arc(p, c)) return std::nullopt;
            auto s = score_of(c, masks_[c] & ~bp);
            if (!s) return std::nullopt;
            return Move{kind, p, c, *s - node_score_[c]};
        }
        case MoveKind::reverse: {
            if (!has_arc(p, c)) return std::nullopt;
            auto sc = score_of(c, masks_[c] & ~bp);
            auto sp = score_of(p, masks_[p] | bc);
            if (!sc || !sp || reaches(p, c, p, c)) return std::nullopt;
            return Move{kind, p, c, *sc - node_score_[c] + *sp - node_score_[p]};
        }
        }
        return std::nullopt;
    }

    void apply(const Move& m) {
        const std::uint64_t bp = std::uint64_t{1} << m.parent, bc = std::uint64_t{1} << m.child;
        switch (m.kind) {
        case MoveKind::add: masks_[m.child] |= bp; break;
        case MoveKind::remove: masks_[m.child] &= ~bp; break;
        case MoveKind::reverse:
            masks_[m.child] &= ~bp;
            masks_[m.parent] |= bc;
            break;
        }
        node_score_[m.child] = score_of(m.child, masks_[m.child]).value();
        node_score_[m.parent] = score_of(m.parent, masks_[m.parent]).value();
        total_ = std::accumulate(node_score_.begin(), node_score_.end(), 0.0);
    }

    std::vector<Move> all_moves() const {
        std::vector<Move> out;
        const std::size_t n = size();
        for (std::size_t c = 0; c < n; ++c)
            for (std::size_t p = 0; p < n; ++p) {
                if (p == c) continue;
                for (auto kind : {MoveKind::add, MoveKind::remove, MoveKind::reverse})
                    if (auto m = evaluate(kind, p, c)) out.push_back(*m);
            }
        return out;
    }

    Dag to_dag() const {
        BinaryMatrix adj(size());
        for (std::size_t c = 0; c < size(); ++c)
            for (std::size_t p = 0; p < size(); ++p)
                if (has_arc(p, c)) adj(c, p) = 1;
        return Dag(cache_.nodes(), adj);
    }

private:
    const ScoreCache& cache_;
    ScoreType score_type_;
    std::vector<std::uint64_t> masks_;
    std::vector<double> node_score_;
    double total_ = 0;
};

std::vector<std::uint64_t> masks_of(const Dag& dag) {
    std::vector<std::uint64_t> m(dag.size());
    for (std::size_t i = 0; i < dag.size(); ++i) m[i] = dag.adjacency().row_mask(i);
    return m;
}

RestartTrace run_hill_climb(State s, const HeuristicConfig& cfg) {
    RestartTrace t;
    t.best_scores.push_back(s.total());
    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
        std::optional<Move> best;
        for (const auto& m : s.all_moves())
            if (m.delta > 0 && (!best || m.delta > best->delta)) best = m;
        if (!best) break;
        s.apply(*best);
        t.best_scores.push_back(s.total());
    }
    t.dag = s.to_dag();
    t.score = s.total();
    return t;
}

RestartTrace run_tabu(State s, const HeuristicConfig& cfg) {
    RestartTrace t;
    double best_total = s.total();
    auto best_masks = s.masks();
    t.best_scores.push_back(best_total);
    // Forbidden moves: the inverse of each recent move.
    std::deque<std::tuple<MoveKind, std::size_t, std::size_t>> tabu;
    auto is_tabu = [&](const Move& m) {
        return std::find(tabu.begin(), tabu.end(), std::make_tuple(m.kind, m.parent, m.child)) != tabu.end();
    };
    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
        std::optional<Move> pick;
        for (const auto& m : s.all_moves()) {
            bool aspiration = s.total() + m.delta > best_total;
            if (is_tabu(m) && !aspiration) continue;
            if (!pick || m.delta > pick->delta) pick = m;
        }
        if (!pick) break;
        s.apply(*pick);
        switch (pick->kind) {
        case MoveKind::add: tabu.emplace_back(MoveKind::remove, pick->parent, pick->child); break;
        case MoveKind::remove: tabu.emplace_back(MoveKind::add, pick->parent, pick->child); break;
        case MoveKind::reverse: tabu.emplace_back(MoveKind::reverse, pick->child, pick->parent); break;
        }
        while (tabu.size() > cfg.tabu_length) tabu.pop_front();
        if (s.total() > best_total) {
            best_total = s.total();
            best_masks = s.masks();
        }
        t.best_scores.push_back(best_total);
    }
    t.score = best_total;
    // rebuild the best DAG from its masks
    BinaryMatrix adj(s.size());
    for (std::size_t c = 0; c < s.size(); ++c)
        for (std::size_t p = 0; p < s.size(); ++p)
            if (best_masks[c] >> p & 1U) adj(c, p) = 1;
    t.dag = Dag(s.to_dag().nodes(), adj);
    return t;
}

RestartTrace run_annealing(State s, const HeuristicConfig& cfg, Rng& rng) {
    RestartTrace t;
    double best_total = s.total();
    auto best_masks = s.masks();
    t.best_scores.push_back(best_total);
    const std::size_t n = s.size();
    double temperature = cfg.initial_temperature;
    std::uniform_int_distribution<std::size_t> pick_node(0, n - 1);
    for (std::size_t step = 0; step < cfg.max_steps; ++step, temperature *= cfg.cooling_factor) {
        std::size_t p = pick_node(rng), c = pick_node(rng);
        double u_kind = uniform01(rng);
        double u_accept = uniform01(rng);
        if (p != c) {
            std::optional<Move> m;
            if (s.has_arc(p, c)) m = s.evaluate(u_kind < 0.5 ? MoveKind::remove : MoveKind::reverse, p, c);
            else m = s.evaluate(MoveKind::add, p, c);
            if (m && (m->delta > 0 || u_accept < std::exp(m->delta / temperature))) {
                s.apply(*m);
                if (s.total() > best_total) {
                    best_total = s.total();
                    best_masks = s.masks();
                }
            }
        }
        t.best_scores.push_back(best_total);
    }
    t.score = best_total;
    BinaryMatrix adj(n);
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t p = 0; p < n; ++p)
            if (best_masks[c] >> p & 1U) adj(c, p) = 1;
    t.dag = Dag(s.to_dag().nodes(), adj);
    return t;
}

bool matrix_reaches(const BinaryMatrix& m, std::size_t from, std::size_t to) {
    const std::size_t n = m.size();
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
        std::size_t v = stack.back();
        stack.pop_back();
        if (v == to) return true;
        for (std::size_t c = 0; c < n; ++c)
            if (m(c, v) && !seen[c]) {
                seen[c] = 1;
                stack.push_back(c);
            }
    }
    return false;
}

}  // namespace

Dag initial_dag(const ScoreCache& cache, double density, std::uint64_t seed, std::uint64_t restart) {
    const std::size_t n = cache.size();
    std::vector<std::uint64_t> masks(n);
    for (std::size_t i = 0; i < n; ++i) masks[i] = cache.constraints().retained.row_mask(i);
    Rng rng = make_rng(seed, restart);
    State s(cache, cache.method() == Method::bayes ? ScoreType::mlik : ScoreType::loglik, masks);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t p = 0; p < n; ++p)
            if (p != c) pairs.emplace_back(p, c);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    for (auto [p, c] : pairs) {
        if (uniform01(rng) >= density) continue;
        if (auto m = s.evaluate(MoveKind::add, p, c)) s.apply(*m);
    }
    return s.to_dag();
}

SearchTrace heuristic_search(const ScoreCache& cache, const HeuristicConfig& config) {
    config.validate();
    if (cache.size() == 0 || cache.total_entries() == 0) throw Error("EmptyCache", "score cache is empty");
    if (!score_matches_method(config.score, cache.method()))
        throw Error("ScoreMethodMismatch", "score does not match the cache's method");
    SearchTrace trace;
    trace.restarts.resize(config.restarts);
    parallel_for(config.restarts, config.jobs, [&](std::size_t r) {
        Dag start = initial_dag(cache, config.initial_density, config.seed, r);
        State s(cache, config.score, masks_of(start));
        // separate stream from the initializer's
        Rng rng = make_rng(config.seed ^ 0x5a5a5a5aULL, r);
        switch (config.algorithm) {
        case HeuristicAlgorithm::hill_climb: trace.restarts[r] = run_hill_climb(s, config); break;
        case HeuristicAlgorithm::tabu: trace.restarts[r] = run_tabu(s, config); break;
        case HeuristicAlgorithm::simulated_annealing: trace.restarts[r] = run_annealing(s, config, rng); break;
        }
    });
    return trace;
}

Consensus majority_consensus(const std::vector<Dag>& dags, double threshold, bool undirected) {
    if (dags.empty()) throw Error("EmptyInput", "consensus needs at least one DAG");
    const std::size_t n = dags.front().size();
    Consensus c;
    c.frequency = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (const auto& d : dags) {
        if (d.nodes() != dags.front().nodes()) throw Error("NodeSetMismatch", "DAGs have different node lists");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (d.adjacency()(i, j)) c.frequency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += 1.0;
    }
    c.frequency /= static_cast<double>(dags.size());
    c.undirected = c.frequency + c.frequency.transpose();
    c.arcs = BinaryMatrix(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
            double f = undirected ? c.undirected(ii, jj) : c.frequency(ii, jj);
            // undirected mode keeps each supported pair in its more frequent direction
            if (undirected && c.frequency(ii, jj) < c.frequency(jj, ii)) continue;
            if (undirected && c.frequency(ii, jj) == c.frequency(jj, ii) && i > j) continue;
            if (i != j && f >= threshold && (undirected ? c.undirected(ii, jj) > 0 : f > 0)) c.arcs(i, j) = 1;
        }
    c.acyclic = validate_acyclic(c.arcs).acyclic;
    return c;
}

Dag repair_to_dag(const std::vector<std::string>& nodes, const BinaryMatrix& arcs,
                  const Eigen::MatrixXd& frequency) {
    BinaryMatrix m = arcs;
    const std::size_t n = m.size();
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 0;
    BinaryMatrix reversed_once(n);
    for (;;) {
        auto check = validate_acyclic(m);
        if (check.acyclic) break;
        const auto& cyc = check.cycle;
        // arcs cyc[t] -> cyc[t+1]
        std::size_t best_p = 0, best_c = 0;
        double best_f = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < cyc.size(); ++t) {
            std::size_t p = cyc[t], c = cyc[(t + 1) % cyc.size()];
            double f = frequency(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(p));
            if (f < best_f) {
                best_f = f;
                best_p = p;
                best_c = c;
            }
        }
        m(best_c, best_p) = 0;
        if (m(best_p, best_c) || reversed_once(best_c, best_p) || reversed_once(best_p, best_c)) continue;
        // reversed arc best_c -> best_p closes a cycle iff best_p reaches best_c
        if (!matrix_reaches(m, best_p, best_c)) {
            m(best_p, best_c) = 1;
            reversed_once(best_p, best_c) = 1;
        }
    }
    return Dag(nodes, m);
}

}  // namespace abn
