#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>
#include <vector>

#include "tnarch/convac.hpp"
#include "tnarch/network.hpp"

namespace tnarch {

using BigInt = boost::multiprecision::cpp_int;

// The weights network as a plain undirected graph: tensor nodes plus one
// virtual degree-1 vertex per input open edge; the class edge is dropped.
// Edges incident to the same delta tensor form one group (they share a bond
// dimension); every other edge is a group of its own. The group dimension
// function c drives all cut weights.
struct AnalysisEdge {
    int id = 0;        // position in AnalysisGraph::edges
    int u = 0, v = 0;  // vertex ids
    int group = 0;
    int tn_edge_id = 0;
};

struct AnalysisGraph {
    std::size_t n_inputs = 0;
    std::size_t n_vertices = 0;
    std::vector<AnalysisEdge> edges;
    std::vector<std::size_t> group_dim;    // c : group -> bond dimension
    std::vector<int> delta_vertex;         // group -> delta vertex id, or -1
    std::vector<int> input_vertex;         // input j (1-based) -> vertex id at [j-1]
};

// Partition (A, B) of the inputs [N], canonicalized so that 1 in A.
struct InputPartition {
    std::vector<std::size_t> a, b; // 1-based input indices, sorted

    static InputPartition from_a(std::vector<std::size_t> a_side, std::size_t n);
    std::string mask(std::size_t n) const; // '1' at positions in A
};

InputPartition left_right_partition(std::size_t n);
InputPartition interleaved_partition(std::size_t n);
// Alternating contiguous segments of length xi (block 1 in A, block 2 in B, ...).
InputPartition segment_partition(std::size_t n, std::size_t xi);
// 2x2-window checkerboard in quad-tree leaf order: positions 1 and 4 of each
// window in A, positions 2 and 3 in B.
InputPartition checkerboard_partition(std::size_t n);

enum class CutMethod { flow, exhaustive, closed_form };

struct CutReport {
    BigInt weight;
    double log_weight = 0.0;
    std::vector<int> cut_edges; // TN edge ids
    std::vector<int> side_a;    // analysis vertex ids on the A side
    CutMethod method = CutMethod::flow;
};

std::string cut_report_to_json(const CutReport& r, int indent = -1);

// Requires a network built by the convac module: open_order lists the N
// input edges followed by exactly one class edge.
AnalysisGraph to_analysis_graph(const TensorNetwork& tn);

// Graph of the weights network for `spec` (weight values are irrelevant to
// the graph, so zero weights are used).
AnalysisGraph analysis_graph_for(const ConvACSpec& spec);

// Exact multiplicative weight of a separating edge set (TN edge ids):
// per-edge product, and the per-represented-group variant that counts each
// delta group once. Both verify that removing the set separates A from B.
BigInt cut_weight(const AnalysisGraph& g, const InputPartition& p,
                  const std::vector<int>& cut_edges);
BigInt modified_cut_weight(const AnalysisGraph& g, const InputPartition& p,
                           const std::vector<int>& cut_edges);

// Minimal plain cut weight via max-flow with capacities ln c(e); the weight
// is recomputed exactly from the recovered cut edges.
CutReport min_cut(const AnalysisGraph& g, const InputPartition& p);

// Minimal modified weight: delta groups become vertex capacities in a
// split-node flow network (cutting any nonempty subset of a group costs the
// group dimension once, and cutting the whole group separates at least as
// much, so node cuts dominate).
CutReport modified_min_cut(const AnalysisGraph& g, const InputPartition& p);

// Brute-force minimization over all vertex bipartitions, for cross-checks.
CutReport min_cut_exhaustive(const AnalysisGraph& g, const InputPartition& p,
                             bool modified);

// max over integer p >= 2 of the min cut after rounding every dimension down
// to the nearest power of p.
BigInt power_of_p_lower_bound(const AnalysisGraph& g, const InputPartition& p);

enum class ClosedFormKind { left_right, interleaved, shallow };

// Literal closed-form cut weights. left_right and interleaved apply to deep
// specs (left_right assumes pool arity 2); shallow takes the size of the
// smaller partition side.
BigInt closed_form(const ConvACSpec& spec, ClosedFormKind kind,
                   std::optional<std::size_t> size_a = std::nullopt);

// Channel symbols that can appear in a minimal cut for partitions whose
// sides have contiguous segments of length xi: {M, r_0, ..., r_ceil(log2 xi)}.
std::vector<std::string> bounding_layers(const ConvACSpec& spec, std::size_t xi);

} // namespace tnarch
