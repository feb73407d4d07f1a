#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lg4av/corpus.hpp"
#include "lg4av/tensor.hpp"

namespace lg4av::graph {

using corpus::AuthorId;
using Edge = std::pair<std::size_t, std::size_t>;  // first < second

/// Undirected, unweighted simple graph over authors. Index i <-> node_ids[i].
class CoauthorGraph {
public:
    CoauthorGraph() = default;
    /// Throws on self pairs or out-of-range indices. Edge orientation is normalized.
    CoauthorGraph(std::vector<AuthorId> node_ids, const std::set<Edge>& edges);

    std::size_t order() const noexcept { return node_ids_.size(); }
    std::size_t size() const noexcept { return edges_.size(); }
    const std::vector<AuthorId>& node_ids() const noexcept { return node_ids_; }
    const std::set<Edge>& edges() const noexcept { return edges_; }
    const std::vector<std::size_t>& neighbors(std::size_t i) const { return adjacency_.at(i); }

    bool contains(const AuthorId& a) const { return index_.contains(a); }
    /// Throws LookupError for an unknown author.
    std::size_t index_of(const AuthorId& a) const;

    bool operator==(const CoauthorGraph& o) const {
        return node_ids_ == o.node_ids_ && edges_ == o.edges_;
    }

private:
    std::vector<AuthorId> node_ids_;
    std::set<Edge> edges_;
    std::vector<std::vector<std::size_t>> adjacency_;
    std::map<AuthorId, std::size_t> index_;
};

/// D^{-1/2} (A + I) D^{-1/2} in compressed-row form; column indices ascend within a row.
struct NormalizedAdjacency {
    std::size_t order = 0;
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> col;
    std::vector<double> value;
    std::vector<double> degree;  // row sums of A + I

    double at(std::size_t i, std::size_t j) const;
    Matrix to_dense() const;
    /// Row-wise sparse product; each output row depends only on the inputs.
    Matrix multiply(const Matrix& x) const;
};

/// [X, ÂX, Â²X, ..., Â^k X]
struct PropagatedFeatures {
    int k = 0;
    std::vector<Matrix> matrices;

    std::size_t rows() const { return matrices.empty() ? 0 : matrices.front().rows(); }
    std::size_t dim() const { return matrices.empty() ? 0 : matrices.front().cols(); }
};

/// Nodes: every author with a document of year <= until. Edge {a,b} iff they share such a document.
CoauthorGraph build_coauthor_graph(const corpus::AuthorshipIndex& index, int until);

/// Induced subgraph on the largest component. Ties go to the component holding the
/// lexicographically smallest author id. Node order is preserved.
CoauthorGraph largest_connected_component(const CoauthorGraph& g);

/// Connected components as sorted index lists, ordered by their smallest index.
std::vector<std::vector<std::size_t>> connected_components(const CoauthorGraph& g);

NormalizedAdjacency normalize_adjacency(const CoauthorGraph& g);

PropagatedFeatures propagate(const NormalizedAdjacency& adj, const Matrix& x, int k);

struct ExtendedGraph {
    CoauthorGraph graph;
    PropagatedFeatures features;
};

/// Appends `new_authors` after the old nodes, adds `new_edges` (by author id) and
/// recomputes normalization and propagation over the union.
ExtendedGraph extend_graph(const CoauthorGraph& old, const std::vector<AuthorId>& new_authors,
                           const std::set<std::pair<AuthorId, AuthorId>>& new_edges,
                           const Matrix& x_old, const Matrix& x_new_rows, int k);

/// "id1<TAB>id2" per edge.
void write_edge_list(std::ostream& out, const CoauthorGraph& g);
/// One author id per line; line number = node index.
void write_node_manifest(std::ostream& out, const CoauthorGraph& g);
CoauthorGraph read_graph(std::istream& node_manifest, std::istream& edge_list);

}  // namespace lg4av::graph
