#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace abn {

/// Square 0/1 matrix, row = child, column = parent.
class BinaryMatrix {
public:
    BinaryMatrix() = default;
    explicit BinaryMatrix(std::size_t n) : n_(n), bits_(n * n, 0) {}

    std::size_t size() const noexcept { return n_; }
    std::uint8_t operator()(std::size_t child, std::size_t parent) const {
        return bits_[child * n_ + parent];
    }
    std::uint8_t& operator()(std::size_t child, std::size_t parent) {
        return bits_[child * n_ + parent];
    }
    std::size_t count() const;
    std::size_t row_count(std::size_t child) const;
    /// Parents of `child` as a bitmask (requires n <= 64).
    std::uint64_t row_mask(std::size_t child) const;

    bool operator==(const BinaryMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Checks that `name` is usable as a node name (nonempty, no whitespace,
/// none of the formula symbols `~ : | + .`). Throws Error("InvalidName").
void validate_node_name(std::string_view name);

struct AcyclicityResult {
    bool acyclic = true;
    std::vector<std::size_t> order;  // topological certificate when acyclic
    std::vector<std::size_t> cycle;  // node indices of one directed cycle otherwise
};

/// Never throws on cycles; a cycle is reported in the result.
AcyclicityResult validate_acyclic(const BinaryMatrix& adjacency);

/// Named DAG. Immutable once constructed; the constructor rejects cycles,
/// self-arcs and invalid or duplicate names.
class Dag {
public:
    Dag() = default;
    Dag(std::vector<std::string> nodes, BinaryMatrix adjacency);
    static Dag empty(std::vector<std::string> nodes);

    std::size_t size() const noexcept { return nodes_.size(); }
    const std::vector<std::string>& nodes() const noexcept { return nodes_; }
    const BinaryMatrix& adjacency() const noexcept { return adj_; }
    bool has_arc(std::size_t parent, std::size_t child) const { return adj_(child, parent) != 0; }
    std::size_t n_arcs() const { return adj_.count(); }

    /// Throws Error("UnknownName").
    std::size_t index_of(std::string_view name) const;
    std::vector<std::size_t> parents(std::size_t node) const;
    std::vector<std::size_t> children(std::size_t node) const;

    bool operator==(const Dag&) const = default;

private:
    std::vector<std::string> nodes_;
    BinaryMatrix adj_;
};

/// Parents precede children; ties broken by node-name order.
/// Throws Error("CyclicInput") when the adjacency has a cycle.
std::vector<std::size_t> topological_order(const BinaryMatrix& adjacency,
                                           const std::vector<std::string>& names);
std::vector<std::size_t> topological_order(const Dag& dag);

/// Parents, children and co-parents, excluding the node itself; ascending index.
std::vector<std::size_t> markov_blanket(const Dag& dag, std::size_t node);
std::vector<std::string> markov_blanket(const Dag& dag, std::string_view node);

struct DagMetrics {
    std::size_t n_nodes = 0;
    std::size_t n_arcs = 0;
    double avg_markov_blanket = 0;
    double avg_neighborhood = 0;
    double avg_parents = 0;
    double avg_children = 0;
};

DagMetrics info_metrics(const Dag& dag);

struct DagComparison {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double tpr = 0, fpr = 0, accuracy = 0, g_measure = 0, f1 = 0, ppv = 0, false_omission_rate = 0;
    std::size_t hamming = 0;
};

/// Arc-wise confusion over the n(n-1) ordered pairs. Rates with an empty
/// denominator are reported as 0. Throws Error("NodeSetMismatch").
DagComparison compare_dags(const Dag& reference, const Dag& candidate);

/// Constraint matrices for structure learning.
struct ConstraintSet {
    BinaryMatrix banned;
    BinaryMatrix retained;
    std::vector<std::size_t> max_parents;  // per node

    static ConstraintSet unconstrained(std::size_t n, std::size_t max_parents);
    std::size_t size() const noexcept { return banned.size(); }
    /// Throws Error("InvalidConstraints") or Error("RetainedExceedsLimit").
    void validate() const;
};

// ---- text formats ------------------------------------------------------

/// Adjacency text: header row and column of node names, 0/1 entries,
/// whitespace separated.
void write_adjacency(std::ostream& out, const std::vector<std::string>& nodes,
                     const BinaryMatrix& m);
std::pair<std::vector<std::string>, BinaryMatrix> read_adjacency(std::istream& in);
/// Same layout with real-valued entries (frequencies, link strengths).
void write_real_matrix(std::ostream& out, const std::vector<std::string>& nodes,
                       const Eigen::MatrixXd& m, int precision = 6);

enum class NodeShape { box, ellipse, diamond };

struct DotOptions {
    std::vector<NodeShape> shapes;         // empty: all ellipse
    std::optional<Eigen::MatrixXd> weights;  // per-arc (row=child), drives penwidth
    double max_penwidth = 6.0;
};

void write_dot(std::ostream& out, const Dag& dag, const DotOptions& options = {});

}  // namespace abn
