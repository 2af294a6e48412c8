#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tnarch/tensor.hpp"

namespace tnarch {

// Node payloads: a dense tensor, or a delta tensor delta(order, dim) that is
// 1 on the super-diagonal and 0 elsewhere. Delta nodes are never materialized
// by the contraction engine; they act as index-merging constraints.
struct DeltaSpec {
    std::size_t order = 0;
    std::size_t dim = 0;
};

struct TNode {
    int id = 0;
    std::variant<DenseTensor, DeltaSpec> kind;
    std::string label;

    bool is_delta() const { return std::holds_alternative<DeltaSpec>(kind); }
    const DenseTensor& dense() const { return std::get<DenseTensor>(kind); }
    const DeltaSpec& delta() const { return std::get<DeltaSpec>(kind); }
    std::size_t order() const {
        return is_delta() ? delta().order : dense().order();
    }
};

// One end of an edge: attached to a node leg, or dangling as open mode k.
struct EdgeEnd {
    enum class Kind { node, open };
    Kind kind = Kind::node;
    int node_id = -1;
    int leg = -1;
    int open_index = -1;

    static EdgeEnd at_node(int node_id, int leg) {
        EdgeEnd e;
        e.kind = Kind::node;
        e.node_id = node_id;
        e.leg = leg;
        return e;
    }
    static EdgeEnd open(int open_index) {
        EdgeEnd e;
        e.kind = Kind::open;
        e.open_index = open_index;
        return e;
    }
};

struct TEdge {
    int id = 0;
    EdgeEnd a, b;
    std::size_t bond = 0;

    bool is_open() const {
        return a.kind == EdgeEnd::Kind::open || b.kind == EdgeEnd::Kind::open;
    }
};

// Undirected multigraph of tensor nodes. open_order lists the ids of the
// open edges and fixes the mode order of the contraction result.
struct TensorNetwork {
    std::vector<TNode> nodes;
    std::vector<TEdge> edges;
    std::vector<int> open_order;

    const TNode& node(int id) const;
    const TEdge& edge(int id) const;

    // Convenience builders used by the convac module; return the new id.
    int add_dense(DenseTensor t, std::string label = {});
    int add_delta(std::size_t order, std::size_t dim, std::string label = {});
    int connect(int node_a, int leg_a, int node_b, int leg_b, std::size_t bond);
    int add_open(int node_id, int leg, std::size_t bond);
};

struct Diagnostic {
    std::string code;
    std::string message;
};

// Structural checks: leg coverage, bond-dimension consistency, delta-leg
// uniformity, open-index uniqueness, connectivity. Returns an empty list
// when the network is well-formed; never throws.
std::vector<Diagnostic> validate(const TensorNetwork& tn);

// delta(order, dim) as an explicit dense tensor. Guarded by the size cap;
// large deltas must stay implicit.
DenseTensor materialize_delta(std::size_t order, std::size_t dim,
                              std::size_t cap = default_size_cap());

struct ContractOptions {
    // Pairwise schedule as a list of edge ids; unset means greedy
    // smallest-intermediate-first.
    std::optional<std::vector<int>> schedule;
    std::size_t size_cap = default_size_cap();
};

// Sums over all contracted indices and returns the tensor whose modes follow
// open_order. Delta nodes are handled by merging their incident edges into a
// single summation index.
DenseTensor contract(const TensorNetwork& tn, const ContractOptions& opts = {});

// Slices away an open edge by fixing its index (0-based), absorbing the
// choice into the attached dense node. Used to pin the class edge.
TensorNetwork fix_open_edge(const TensorNetwork& tn, int edge_id, std::size_t index);

// JSON serialization of the network (schema documented in the README).
std::string network_to_json(const TensorNetwork& tn, int indent = -1);
TensorNetwork network_from_json(const std::string& text);

} // namespace tnarch
