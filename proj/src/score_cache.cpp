#include "abn/score_cache.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "abn/error.hpp"
#include "abn/parallel.hpp"

namespace abn {

std::string_view to_string(ScoreType s) {
    switch (s) {
    case ScoreType::mlik: return "mlik";
    case ScoreType::loglik: return "loglik";
    case ScoreType::aic: return "aic";
    case ScoreType::bic: return "bic";
    case ScoreType::mdl: return "mdl";
    }
    return "?";
}

ScoreType parse_score(std::string_view s) {
    for (auto t : {ScoreType::mlik, ScoreType::loglik, ScoreType::aic, ScoreType::bic, ScoreType::mdl})
        if (to_string(t) == s) return t;
    throw Error("UnknownScore", "unknown score '" + std::string(s) + "'");
}

bool score_matches_method(ScoreType s, Method m) {
    return (s == ScoreType::mlik) == (m == Method::bayes);
}

double CacheEntry::score(ScoreType s) const {
    switch (s) {
    case ScoreType::mlik: return mlik;
    case ScoreType::loglik: return loglik;
    case ScoreType::aic: return aic;
    case ScoreType::bic: return bic;
    case ScoreType::mdl: return mdl;
    }
    return mlik;
}

std::vector<std::uint64_t> enumerate_parent_sets(std::size_t node, const ConstraintSet& c) {
    const std::size_t n = c.size();
    if (n > 64) throw Error("TooManyNodes", "at most 64 nodes are supported");
    const std::uint64_t retained = c.retained.row_mask(node);
    const std::size_t limit = c.max_parents.at(node);
    const auto n_retained = static_cast<std::size_t>(std::popcount(retained));
    if (n_retained > limit)
        throw Error("RetainedExceedsLimit", "node " + std::to_string(node) + " retains " +
                                                std::to_string(n_retained) + " parents, limit " +
                                                std::to_string(limit));
    std::vector<std::size_t> free;
    for (std::size_t j = 0; j < n; ++j)
        if (j != node && !c.banned(node, j) && !(retained >> j & 1U)) free.push_back(j);

    std::vector<std::uint64_t> out;
    const std::size_t extra = limit - n_retained;
    // depth-first over combinations of the free candidates
    auto recurse = [&](auto&& self, std::size_t start, std::size_t left, std::uint64_t mask) -> void {
        out.push_back(mask);
        if (left == 0) return;
        for (std::size_t k = start; k < free.size(); ++k)
            self(self, k + 1, left - 1, mask | (std::uint64_t{1} << free[k]));
    };
    recurse(recurse, 0, extra, retained);
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t ScoreCache::total_entries() const {
    std::size_t t = 0;
    for (const auto& e : entries_) t += e.size();
    return t;
}

const CacheEntry* ScoreCache::find(std::size_t node, std::uint64_t parents) const {
    const auto& list = entries_.at(node);
    auto it = std::lower_bound(list.begin(), list.end(), parents,
                               [](const CacheEntry& e, std::uint64_t m) { return e.parents < m; });
    if (it == list.end() || it->parents != parents) return nullptr;
    return &*it;
}

const CacheEntry& ScoreCache::lookup(std::size_t node, std::uint64_t parents) const {
    const CacheEntry* e = find(node, parents);
    if (!e) {
        std::ostringstream os;
        os << "parent set 0x" << std::hex << parents << " of node '" << nodes_.at(node) << "' is not in the cache";
        throw Error("NotInCache", os.str());
    }
    return *e;
}

double ScoreCache::total(const Dag& dag, ScoreType score) const {
    if (dag.nodes() != nodes_) throw Error("NodeSetMismatch", "DAG and cache have different nodes");
    double t = 0;
    for (std::size_t i = 0; i < size(); ++i) t += lookup(i, dag.adjacency().row_mask(i)).score(score);
    return t;
}

ScoreCache ScoreCache::from_entries(std::vector<std::string> nodes, ConstraintSet constraints, Method method,
                                    std::vector<std::vector<CacheEntry>> entries, std::string fingerprint) {
    ScoreCache c;
    if (entries.size() != nodes.size()) throw Error("DimensionMismatch", "one entry list per node expected");
    for (auto& list : entries)
        std::sort(list.begin(), list.end(), [](const CacheEntry& a, const CacheEntry& b) { return a.parents < b.parents; });
    c.nodes_ = std::move(nodes);
    c.constraints_ = std::move(constraints);
    c.method_ = method;
    c.fingerprint_ = std::move(fingerprint);
    c.entries_ = std::move(entries);
    return c;
}

ScoreCache build_cache(const Dataset& ds, const ConstraintSet& constraints, Method method,
                       const PriorSpec& priors, unsigned jobs) {
    if (constraints.size() != ds.n_vars())
        throw Error("DimensionMismatch", "constraints do not match the dataset's variables");
    constraints.validate();
    priors.validate();

    struct Job {
        std::size_t node;
        std::size_t slot;
    };
    ScoreCache cache;
    cache.nodes_ = ds.names();
    cache.constraints_ = constraints;
    cache.method_ = method;
    cache.fingerprint_ = ds.fingerprint().empty() ? ds.content_fingerprint() : ds.fingerprint();
    cache.entries_.resize(ds.n_vars());
    std::vector<Job> work;
    for (std::size_t i = 0; i < ds.n_vars(); ++i) {
        auto sets = enumerate_parent_sets(i, constraints);
        cache.entries_[i].resize(sets.size());
        for (std::size_t k = 0; k < sets.size(); ++k) {
            cache.entries_[i][k].parents = sets[k];
            work.push_back({i, k});
        }
    }
    const std::size_t n_candidates = ds.n_vars() - 1;
    parallel_for(work.size(), jobs, [&](std::size_t w) {
        auto& e = cache.entries_[work[w].node][work[w].slot];
        constexpr double ninf = -std::numeric_limits<double>::infinity();
        try {
            DesignMatrix d = build_design(ds, work[w].node, e.parents);
            FitResult f = fit_node(d, ds.dists()[work[w].node], method, priors, {}, n_candidates);
            e.loglik = f.log_likelihood;
            if (method == Method::bayes) {
                e.mlik = f.mlik;
                e.aic = e.bic = e.mdl = ninf;
            } else {
                e.mlik = ninf;
                e.aic = f.aic;
                e.bic = f.bic;
                e.mdl = f.mdl;
            }
            if (!f.ok()) {
                e.mlik = e.loglik = e.aic = e.bic = e.mdl = ninf;
                e.diagnostic = f.diagnostic.empty() ? "fit failed" : f.diagnostic;
            }
        } catch (const std::exception& ex) {
            e.mlik = e.loglik = e.aic = e.bic = e.mdl = ninf;
            e.diagnostic = ex.what();
        }
    });
    return cache;
}

void check_fingerprint(const ScoreCache& cache, const Dataset& ds) {
    std::string fp = ds.fingerprint().empty() ? ds.content_fingerprint() : ds.fingerprint();
    if (cache.fingerprint() != fp)
        throw Error("StaleCache", "score cache fingerprint " + cache.fingerprint() +
                                      " does not match dataset fingerprint " + fp);
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<ScoreType> stored_scores(Method m) {
    if (m == Method::bayes) return {ScoreType::mlik, ScoreType::loglik};
    return {ScoreType::loglik, ScoreType::aic, ScoreType::bic, ScoreType::mdl};
}

}  // namespace

void ScoreCache::write(std::ostream& out) const {
    out << "abn-score-cache 1\n";
    out << "fingerprint " << fingerprint_ << '\n';
    out << "method " << to_string(method_) << '\n';
    out << "nodes " << nodes_.size();
    for (const auto& n : nodes_) out << ' ' << n;
    out << "\nmax_parents";
    for (auto m : constraints_.max_parents) out << ' ' << m;
    out << "\nbanned" << std::hex;
    for (std::size_t i = 0; i < size(); ++i) out << ' ' << constraints_.banned.row_mask(i);
    out << "\nretained";
    for (std::size_t i = 0; i < size(); ++i) out << ' ' << constraints_.retained.row_mask(i);
    out << std::dec << '\n';
    const auto scores = stored_scores(method_);
    out << "records " << total_entries() * scores.size() << '\n';
    for (std::size_t i = 0; i < size(); ++i)
        for (const auto& e : entries_[i])
            for (auto s : scores) out << i << ',' << e.parents << ',' << to_string(s) << ',' << fmt17(e.score(s)) << '\n';
    for (std::size_t i = 0; i < size(); ++i)
        for (const auto& e : entries_[i])
            if (!e.diagnostic.empty()) out << "diagnostic " << i << ',' << e.parents << ',' << e.diagnostic << '\n';
}

ScoreCache ScoreCache::read(std::istream& in) {
    auto fail = [](const std::string& what) -> Error { return Error("ParseError", "score cache: " + what); };
    std::string line, key;
    auto next_line = [&](const char* expected) {
        if (!std::getline(in, line)) throw fail(std::string("missing ") + expected);
        std::istringstream ls(line);
        ls >> key;
        if (key != expected) throw fail(std::string("expected '") + expected + "', got '" + key + "'");
        return ls;
    };
    {
        auto ls = next_line("abn-score-cache");
        int version = 0;
        ls >> version;
        if (version != 1) throw fail("unsupported version");
    }
    ScoreCache c;
    next_line("fingerprint") >> c.fingerprint_;
    {
        std::string m;
        next_line("method") >> m;
        c.method_ = parse_method(m);
    }
    {
        auto ls = next_line("nodes");
        std::size_t n = 0;
        ls >> n;
        c.nodes_.resize(n);
        for (auto& name : c.nodes_) ls >> name;
    }
    const std::size_t n = c.nodes_.size();
    c.constraints_ = ConstraintSet::unconstrained(n, 0);
    {
        auto ls = next_line("max_parents");
        for (auto& m : c.constraints_.max_parents) ls >> m;
    }
    for (const char* which : {"banned", "retained"}) {
        auto ls = next_line(which);
        auto& mat = std::string(which) == "banned" ? c.constraints_.banned : c.constraints_.retained;
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t mask = 0;
            ls >> std::hex >> mask;
            for (std::size_t j = 0; j < n; ++j) mat(i, j) = static_cast<std::uint8_t>(mask >> j & 1U);
        }
    }
    std::size_t records = 0;
    next_line("records") >> records;
    c.entries_.resize(n);
    for (std::size_t r = 0; r < records; ++r) {
        if (!std::getline(in, line)) throw fail("truncated records");
        std::istringstream ls(line);
        std::string f_node, f_mask, f_type, f_value;
        std::getline(ls, f_node, ',');
        std::getline(ls, f_mask, ',');
        std::getline(ls, f_type, ',');
        std::getline(ls, f_value);
        std::size_t node = std::stoul(f_node);
        std::uint64_t mask = std::stoull(f_mask);
        if (node >= n) throw fail("node index out of range");
        auto& list = c.entries_[node];
        if (list.empty() || list.back().parents != mask) {
            if (!list.empty() && list.back().parents > mask) throw fail("records out of order");
            CacheEntry e;
            e.parents = mask;
            constexpr double ninf = -std::numeric_limits<double>::infinity();
            e.mlik = e.loglik = e.aic = e.bic = e.mdl = ninf;
            list.push_back(e);
        }
        double v = std::strtod(f_value.c_str(), nullptr);
        switch (parse_score(f_type)) {
        case ScoreType::mlik: list.back().mlik = v; break;
        case ScoreType::loglik: list.back().loglik = v; break;
        case ScoreType::aic: list.back().aic = v; break;
        case ScoreType::bic: list.back().bic = v; break;
        case ScoreType::mdl: list.back().mdl = v; break;
        }
    }
    while (std::getline(in, line)) {
        if (line.rfind("diagnostic ", 0) != 0) continue;
        std::istringstream ls(line.substr(11));
        std::string f_node, f_mask, text;
        std::getline(ls, f_node, ',');
        std::getline(ls, f_mask, ',');
        std::getline(ls, text);
        std::size_t node = std::stoul(f_node);
        std::uint64_t mask = std::stoull(f_mask);
        if (node >= n) throw fail("diagnostic node index out of range");
        for (auto& e : c.entries_[node])
            if (e.parents == mask) e.diagnostic = text;
    }
    return c;
}

}  // namespace abn
