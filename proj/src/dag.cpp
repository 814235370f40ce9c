#include "abn/dag.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "abn/error.hpp"

namespace abn {

std::size_t BinaryMatrix::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::size_t BinaryMatrix::row_count(std::size_t child) const {
    std::size_t c = 0;
    for (std::size_t p = 0; p < n_; ++p) c += bits_[child * n_ + p] != 0;
    return c;
}

std::uint64_t BinaryMatrix::row_mask(std::size_t child) const {
    std::uint64_t mask = 0;
    for (std::size_t p = 0; p < n_; ++p)
        if (bits_[child * n_ + p]) mask |= std::uint64_t{1} << p;
    return mask;
}

void validate_node_name(std::string_view name) {
    if (name.empty()) throw Error("InvalidName", "node name is empty");
    for (char c : name) {
        if (c == '~' || c == ':' || c == '|' || c == '+' || c == '.' ||
            std::isspace(static_cast<unsigned char>(c)) || c == ',')
            throw Error("InvalidName", "node name '" + std::string(name) +
                                           "' contains a reserved character");
    }
}

AcyclicityResult validate_acyclic(const BinaryMatrix& adj) {
    const std::size_t n = adj.size();
    AcyclicityResult result;
    // Kahn's algorithm on arcs parent -> child.
    std::vector<std::size_t> indegree(n, 0);
    for (std::size_t c = 0; c < n; ++c) indegree[c] = adj.row_count(c);
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
        std::size_t v = ready.back();
        ready.pop_back();
        result.order.push_back(v);
        for (std::size_t c = 0; c < n; ++c)
            if (adj(c, v) && --indegree[c] == 0) ready.push_back(c);
    }
    if (result.order.size() == n) return result;

    result.acyclic = false;
    result.order.clear();
    // Every remaining node has a remaining parent; walk parents until a
    // node repeats.
    std::vector<int> seen_at(n, -1);
    std::size_t v = 0;
    while (indegree[v] == 0) ++v;
    std::vector<std::size_t> walk;
    while (seen_at[v] < 0) {
        seen_at[v] = static_cast<int>(walk.size());
        walk.push_back(v);
        std::size_t p = 0;
        while (!(adj(v, p) && indegree[p] > 0)) ++p;
        v = p;
    }
    // walk[seen_at[v]..] follows child -> parent; report in arc direction.
    result.cycle.assign(walk.begin() + seen_at[v], walk.end());
    std::reverse(result.cycle.begin(), result.cycle.end());
    return result;
}

Dag::Dag(std::vector<std::string> nodes, BinaryMatrix adjacency)
    : nodes_(std::move(nodes)), adj_(std::move(adjacency)) {
    if (adj_.size() != nodes_.size())
        throw Error("DimensionMismatch", "adjacency size does not match node count");
    std::set<std::string> unique;
    for (const auto& n : nodes_) {
        validate_node_name(n);
        if (!unique.insert(n).second) throw Error("DuplicateName", "duplicate node name '" + n + "'");
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (adj_(i, i)) throw Error("SelfArc", "self-arc on node '" + nodes_[i] + "'");
    auto check = validate_acyclic(adj_);
    if (!check.acyclic) {
        std::string cyc;
        for (auto i : check.cycle) cyc += nodes_[i] + " ";
        throw Error("CyclicInput", "adjacency contains a cycle: " + cyc);
    }
}

Dag Dag::empty(std::vector<std::string> nodes) {
    std::size_t n = nodes.size();
    return Dag(std::move(nodes), BinaryMatrix(n));
}

std::size_t Dag::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i] == name) return i;
    throw Error("UnknownName", "no node named '" + std::string(name) + "'");
}

std::vector<std::size_t> Dag::parents(std::size_t node) const {
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < size(); ++p)
        if (adj_(node, p)) out.push_back(p);
    return out;
}

std::vector<std::size_t> Dag::children(std::size_t node) const {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < size(); ++c)
        if (adj_(c, node)) out.push_back(c);
    return out;
}

std::vector<std::size_t> topological_order(const BinaryMatrix& adj,
                                           const std::vector<std::string>& names) {
    const std::size_t n = adj.size();
    std::vector<std::size_t> indegree(n);
    for (std::size_t c = 0; c < n; ++c) indegree[c] = adj.row_count(c);
    auto by_name = [&](std::size_t a, std::size_t b) { return names[a] > names[b]; };
    // min-heap on name
    std::vector<std::size_t> heap;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) heap.push_back(i);
    std::make_heap(heap.begin(), heap.end(), by_name);
    std::vector<std::size_t> order;
    order.reserve(n);
    while (!heap.empty()) {
        std::pop_heap(heap.begin(), heap.end(), by_name);
        std::size_t v = heap.back();
        heap.pop_back();
        order.push_back(v);
        for (std::size_t c = 0; c < n; ++c) {
            if (adj(c, v) && --indegree[c] == 0) {
                heap.push_back(c);
                std::push_heap(heap.begin(), heap.end(), by_name);
            }
        }
    }
    if (order.size() != n) throw Error("CyclicInput", "graph has a directed cycle");
    return order;
}

std::vector<std::size_t> topological_order(const Dag& dag) {
    return topological_order(dag.adjacency(), dag.nodes());
}

std::vector<std::size_t> markov_blanket(const Dag& dag, std::size_t node) {
    if (node >= dag.size()) throw Error("UnknownName", "node index out of range");
    std::vector<bool> in(dag.size(), false);
    for (auto p : dag.parents(node)) in[p] = true;
    for (auto c : dag.children(node)) {
        in[c] = true;
        for (auto cp : dag.parents(c)) in[cp] = true;
    }
    in[node] = false;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < in.size(); ++i)
        if (in[i]) out.push_back(i);
    return out;
}

std::vector<std::string> markov_blanket(const Dag& dag, std::string_view node) {
    std::vector<std::string> out;
    for (auto i : markov_blanket(dag, dag.index_of(node))) out.push_back(dag.nodes()[i]);
    return out;
}

DagMetrics info_metrics(const Dag& dag) {
    DagMetrics m;
    m.n_nodes = dag.size();
    m.n_arcs = dag.n_arcs();
    if (m.n_nodes == 0) return m;
    std::size_t mb = 0, nh = 0;
    for (std::size_t i = 0; i < dag.size(); ++i) {
        mb += markov_blanket(dag, i).size();
        // parents and children are disjoint in a DAG
        nh += dag.parents(i).size() + dag.children(i).size();
    }
    const double n = static_cast<double>(m.n_nodes);
    m.avg_markov_blanket = static_cast<double>(mb) / n;
    m.avg_neighborhood = static_cast<double>(nh) / n;
    m.avg_parents = static_cast<double>(m.n_arcs) / n;
    m.avg_children = m.avg_parents;
    return m;
}

namespace {
double ratio(double num, double den) { return den > 0 ? num / den : 0.0; }
}  // namespace

DagComparison compare_dags(const Dag& reference, const Dag& candidate) {
    if (reference.nodes() != candidate.nodes())
        throw Error("NodeSetMismatch", "DAGs are defined over different node lists");
    DagComparison r;
    const std::size_t n = reference.size();
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t p = 0; p < n; ++p) {
            if (c == p) continue;
            bool ref = reference.adjacency()(c, p);
            bool cand = candidate.adjacency()(c, p);
            if (ref && cand) ++r.tp;
            else if (!ref && cand) ++r.fp;
            else if (ref && !cand) ++r.fn;
            else ++r.tn;
            r.hamming += ref != cand;
        }
    }
    const double tp = r.tp, fp = r.fp, tn = r.tn, fn = r.fn;
    r.tpr = ratio(tp, tp + fn);
    r.fpr = ratio(fp, fp + tn);
    r.accuracy = ratio(tp + tn, tp + tn + fp + fn);
    r.ppv = ratio(tp, tp + fp);
    r.g_measure = std::sqrt(r.ppv * r.tpr);
    r.f1 = ratio(2 * tp, 2 * tp + fp + fn);
    r.false_omission_rate = ratio(fn, fn + tn);
    return r;
}

ConstraintSet ConstraintSet::unconstrained(std::size_t n, std::size_t max_parents) {
    return {BinaryMatrix(n), BinaryMatrix(n), std::vector<std::size_t>(n, max_parents)};
}

void ConstraintSet::validate() const {
    const std::size_t n = banned.size();
    if (retained.size() != n || max_parents.size() != n)
        throw Error("InvalidConstraints", "constraint matrices have inconsistent sizes");
    for (std::size_t c = 0; c < n; ++c) {
        if (retained(c, c)) throw Error("InvalidConstraints", "retained self-arc");
        for (std::size_t p = 0; p < n; ++p)
            if (banned(c, p) && retained(c, p))
                throw Error("InvalidConstraints", "arc is both banned and retained");
        if (retained.row_count(c) > max_parents[c])
            throw Error("RetainedExceedsLimit",
                        "node " + std::to_string(c) + " retains more parents than max_parents");
    }
    if (!validate_acyclic(retained).acyclic)
        throw Error("InvalidConstraints", "retained arcs form a cycle");
}

void write_adjacency(std::ostream& out, const std::vector<std::string>& nodes,
                     const BinaryMatrix& m) {
    for (const auto& n : nodes) out << ' ' << n;
    out << '\n';
    for (std::size_t c = 0; c < nodes.size(); ++c) {
        out << nodes[c];
        for (std::size_t p = 0; p < nodes.size(); ++p) out << ' ' << int(m(c, p));
        out << '\n';
    }
}

std::pair<std::vector<std::string>, BinaryMatrix> read_adjacency(std::istream& in) {
    std::string line;
    std::vector<std::string> nodes;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) nodes.push_back(tok);
        if (!nodes.empty()) break;
    }
    if (nodes.empty()) throw Error("ParseError", "adjacency file has no header");
    BinaryMatrix m(nodes.size());
    for (std::size_t r = 0; r < nodes.size(); ++r) {
        if (!std::getline(in, line)) throw Error("ParseError", "adjacency file truncated");
        std::istringstream ls(line);
        std::string name;
        ls >> name;
        if (name != nodes[r])
            throw Error("ParseError", "row " + std::to_string(r) + " is labelled '" + name +
                                          "', expected '" + nodes[r] + "'");
        for (std::size_t c = 0; c < nodes.size(); ++c) {
            int v = -1;
            if (!(ls >> v) || (v != 0 && v != 1))
                throw Error("ParseError", "adjacency entries must be 0 or 1");
            m(r, c) = static_cast<std::uint8_t>(v);
        }
    }
    return {nodes, m};
}

void write_real_matrix(std::ostream& out, const std::vector<std::string>& nodes,
                       const Eigen::MatrixXd& m, int precision) {
    for (const auto& n : nodes) out << ' ' << n;
    out << '\n';
    std::ostringstream cell;
    for (std::size_t c = 0; c < nodes.size(); ++c) {
        out << nodes[c];
        for (std::size_t p = 0; p < nodes.size(); ++p) {
            cell.str("");
            cell << std::setprecision(precision) << m(c, p);
            out << ' ' << cell.str();
        }
        out << '\n';
    }
}

void write_dot(std::ostream& out, const Dag& dag, const DotOptions& options) {
    static constexpr const char* shape_names[] = {"box", "ellipse", "diamond"};
    out << "digraph abn {\n";
    for (std::size_t i = 0; i < dag.size(); ++i) {
        NodeShape s = options.shapes.empty() ? NodeShape::ellipse : options.shapes.at(i);
        out << "  \"" << dag.nodes()[i] << "\" [shape=" << shape_names[static_cast<int>(s)] << "];\n";
    }
    double wmax = 0;
    if (options.weights) {
        for (std::size_t c = 0; c < dag.size(); ++c)
            for (std::size_t p = 0; p < dag.size(); ++p)
                if (dag.has_arc(p, c)) wmax = std::max(wmax, std::abs((*options.weights)(c, p)));
    }
    for (std::size_t c = 0; c < dag.size(); ++c) {
        for (std::size_t p = 0; p < dag.size(); ++p) {
            if (!dag.has_arc(p, c)) continue;
            out << "  \"" << dag.nodes()[p] << "\" -> \"" << dag.nodes()[c] << "\"";
            if (options.weights && wmax > 0) {
                double w = std::abs((*options.weights)(c, p)) / wmax * options.max_penwidth;
                out << " [penwidth=" << std::setprecision(4) << std::max(w, 0.25) << "]";
            }
            out << ";\n";
        }
    }
    out << "}\n";
}

}  // namespace abn
