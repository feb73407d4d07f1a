#include "lg4av/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <queue>

#include "lg4av/error.hpp"

namespace lg4av::graph {

CoauthorGraph::CoauthorGraph(std::vector<AuthorId> node_ids, const std::set<Edge>& edges)
    : node_ids_(std::move(node_ids)), adjacency_(node_ids_.size()) {
    for (std::size_t i = 0; i < node_ids_.size(); ++i) {
        if (!index_.emplace(node_ids_[i], i).second) {
            throw Error("duplicate node id \"" + node_ids_[i] + "\"");
        }
    }
    for (auto [a, b] : edges) {
        if (a == b) throw Error("self pair on node " + std::to_string(a));
        if (a >= order() || b >= order()) throw Error("edge index out of range");
        if (a > b) std::swap(a, b);
        if (edges_.emplace(a, b).second) {
            adjacency_[a].push_back(b);
            adjacency_[b].push_back(a);
        }
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

std::size_t CoauthorGraph::index_of(const AuthorId& a) const {
    auto it = index_.find(a);
    if (it == index_.end()) throw LookupError("author \"" + a + "\" is not a graph node");
    return it->second;
}

double NormalizedAdjacency::at(std::size_t i, std::size_t j) const {
    auto first = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
    auto last = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
    auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return value[static_cast<std::size_t>(it - col.begin())];
}

Matrix NormalizedAdjacency::to_dense() const {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(order), static_cast<Eigen::Index>(order));
    for (std::size_t i = 0; i < order; ++i) {
        for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col[p])) = value[p];
        }
    }
    return m;
}

Matrix NormalizedAdjacency::multiply(const Matrix& x) const {
    if (static_cast<std::size_t>(x.rows()) != order) {
        throw DimensionError("feature matrix has " + std::to_string(x.rows()) +
                             " rows, adjacency order is " + std::to_string(order));
    }
    Matrix out = Matrix::Zero(x.rows(), x.cols());
    for (std::size_t i = 0; i < order; ++i) {
        auto row = out.row(static_cast<Eigen::Index>(i));
        for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
            row += value[p] * x.row(static_cast<Eigen::Index>(col[p]));
        }
    }
    return out;
}

CoauthorGraph build_coauthor_graph(const corpus::AuthorshipIndex& index, int until) {
    std::set<AuthorId> nodes;
    for (const auto& [id, doc] : index.all_docs()) {
        if (doc.year > until) continue;
        nodes.insert(doc.authors.begin(), doc.authors.end());
    }
    std::vector<AuthorId> node_ids(nodes.begin(), nodes.end());
    std::map<AuthorId, std::size_t> pos;
    for (std::size_t i = 0; i < node_ids.size(); ++i) pos[node_ids[i]] = i;

    std::set<Edge> edges;
    for (const auto& [id, doc] : index.all_docs()) {
        if (doc.year > until) continue;
        for (std::size_t x = 0; x < doc.authors.size(); ++x) {
            for (std::size_t y = x + 1; y < doc.authors.size(); ++y) {
                auto a = pos.at(doc.authors[x]);
                auto b = pos.at(doc.authors[y]);
                if (a == b) continue;
                edges.emplace(std::min(a, b), std::max(a, b));
            }
        }
    }
    return CoauthorGraph(std::move(node_ids), edges);
}

std::vector<std::vector<std::size_t>> connected_components(const CoauthorGraph& g) {
    std::vector<std::vector<std::size_t>> comps;
    std::vector<bool> seen(g.order(), false);
    for (std::size_t s = 0; s < g.order(); ++s) {
        if (seen[s]) continue;
        std::vector<std::size_t> comp;
        std::queue<std::size_t> q;
        q.push(s);
        seen[s] = true;
        while (!q.empty()) {
            auto u = q.front();
            q.pop();
            comp.push_back(u);
            for (auto v : g.neighbors(u)) {
                if (!seen[v]) {
                    seen[v] = true;
                    q.push(v);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

CoauthorGraph largest_connected_component(const CoauthorGraph& g) {
    if (g.order() == 0) throw Error("largest_connected_component: empty graph");
    auto comps = connected_components(g);
    auto min_id = [&](const std::vector<std::size_t>& c) {
        AuthorId best = g.node_ids()[c.front()];
        for (auto i : c) best = std::min(best, g.node_ids()[i]);
        return best;
    };
    std::size_t best = 0;
    for (std::size_t c = 1; c < comps.size(); ++c) {
        if (comps[c].size() > comps[best].size() ||
            (comps[c].size() == comps[best].size() && min_id(comps[c]) < min_id(comps[best]))) {
            best = c;
        }
    }
    const auto& keep = comps[best];
    std::vector<std::size_t> remap(g.order(), g.order());
    std::vector<AuthorId> ids;
    for (std::size_t n = 0; n < keep.size(); ++n) {
        remap[keep[n]] = n;
        ids.push_back(g.node_ids()[keep[n]]);
    }
    std::set<Edge> edges;
    for (auto [a, b] : g.edges()) {
        if (remap[a] < g.order() && remap[b] < g.order()) edges.emplace(remap[a], remap[b]);
    }
    return CoauthorGraph(std::move(ids), edges);
}

NormalizedAdjacency normalize_adjacency(const CoauthorGraph& g) {
    if (g.order() == 0) throw Error("normalize_adjacency: empty graph");
    NormalizedAdjacency adj;
    adj.order = g.order();
    adj.degree.resize(g.order());
    for (std::size_t i = 0; i < g.order(); ++i) {
        adj.degree[i] = static_cast<double>(g.neighbors(i).size() + 1);
    }
    adj.row_ptr.push_back(0);
    for (std::size_t i = 0; i < g.order(); ++i) {
        // neighbors are sorted; splice the self loop in at its sorted position
        std::vector<std::size_t> cols = g.neighbors(i);
        cols.insert(std::lower_bound(cols.begin(), cols.end(), i), i);
        for (auto j : cols) {
            adj.col.push_back(j);
            // deg_i * deg_j is an exact integer product, so (i,j) and (j,i) agree bitwise
            adj.value.push_back(1.0 / std::sqrt(adj.degree[i] * adj.degree[j]));
        }
        adj.row_ptr.push_back(adj.col.size());
    }
    return adj;
}

PropagatedFeatures propagate(const NormalizedAdjacency& adj, const Matrix& x, int k) {
    if (k < 0) throw Error("propagation depth must be non-negative");
    if (static_cast<std::size_t>(x.rows()) != adj.order) {
        throw DimensionError("feature matrix has " + std::to_string(x.rows()) +
                             " rows, adjacency order is " + std::to_string(adj.order));
    }
    PropagatedFeatures out;
    out.k = k;
    out.matrices.reserve(static_cast<std::size_t>(k) + 1);
    out.matrices.push_back(x);
    for (int l = 1; l <= k; ++l) out.matrices.push_back(adj.multiply(out.matrices.back()));
    return out;
}

ExtendedGraph extend_graph(const CoauthorGraph& old, const std::vector<AuthorId>& new_authors,
                           const std::set<std::pair<AuthorId, AuthorId>>& new_edges,
                           const Matrix& x_old, const Matrix& x_new_rows, int k) {
    if (static_cast<std::size_t>(x_old.rows()) != old.order()) {
        throw DimensionError("old feature rows do not match the old graph");
    }
    if (static_cast<std::size_t>(x_new_rows.rows()) != new_authors.size() ||
        (!new_authors.empty() && x_new_rows.cols() != x_old.cols())) {
        throw DimensionError("new feature rows do not match the new authors");
    }
    std::vector<AuthorId> ids = old.node_ids();
    for (const auto& a : new_authors) {
        if (old.contains(a)) throw Error("new author \"" + a + "\" is already a node");
        ids.push_back(a);
    }
    std::map<AuthorId, std::size_t> pos;
    for (std::size_t i = 0; i < ids.size(); ++i) pos[ids[i]] = i;
    if (pos.size() != ids.size()) throw Error("duplicate new author id");

    std::set<Edge> edges = old.edges();
    for (const auto& [a, b] : new_edges) {
        auto ia = pos.find(a);
        auto ib = pos.find(b);
        if (ia == pos.end()) throw LookupError("edge references unknown author \"" + a + "\"");
        if (ib == pos.end()) throw LookupError("edge references unknown author \"" + b + "\"");
        if (ia->second == ib->second) continue;
        edges.emplace(std::min(ia->second, ib->second), std::max(ia->second, ib->second));
    }
    CoauthorGraph g(std::move(ids), edges);

    Matrix x(static_cast<Eigen::Index>(g.order()), x_old.cols());
    x.topRows(x_old.rows()) = x_old;
    if (x_new_rows.rows() > 0) x.bottomRows(x_new_rows.rows()) = x_new_rows;
    auto features = propagate(normalize_adjacency(g), x, k);
    return {std::move(g), std::move(features)};
}

void write_edge_list(std::ostream& out, const CoauthorGraph& g) {
    for (auto [a, b] : g.edges()) out << g.node_ids()[a] << '\t' << g.node_ids()[b] << '\n';
}

void write_node_manifest(std::ostream& out, const CoauthorGraph& g) {
    for (const auto& id : g.node_ids()) out << id << '\n';
}

CoauthorGraph read_graph(std::istream& node_manifest, std::istream& edge_list) {
    std::vector<AuthorId> ids;
    std::string line;
    while (std::getline(node_manifest, line)) {
        if (!line.empty()) ids.push_back(line);
    }
    std::map<AuthorId, std::size_t> pos;
    for (std::size_t i = 0; i < ids.size(); ++i) pos[ids[i]] = i;
    std::set<Edge> edges;
    std::size_t lineno = 0;
    while (std::getline(edge_list, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("expected \"id1<TAB>id2\"", lineno);
        auto a = pos.find(line.substr(0, tab));
        auto b = pos.find(line.substr(tab + 1));
        if (a == pos.end() || b == pos.end()) throw ParseError("edge references unknown author", lineno);
        edges.emplace(std::min(a->second, b->second), std::max(a->second, b->second));
    }
    return CoauthorGraph(std::move(ids), edges);
}

}  // namespace lg4av::graph
