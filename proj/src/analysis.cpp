#include "tnarch/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <unordered_map>

#include "json.hpp"

namespace tnarch {

using nlohmann::json;

// ---------------------------------------------------------------------------
// partitions
// ---------------------------------------------------------------------------

InputPartition InputPartition::from_a(std::vector<std::size_t> a_side, std::size_t n) {
    std::sort(a_side.begin(), a_side.end());
    a_side.erase(std::unique(a_side.begin(), a_side.end()), a_side.end());
    if (a_side.empty() || a_side.size() >= n)
        throw ValidationError("InputPartition: both sides must be nonempty");
    for (std::size_t j : a_side)
        if (j < 1 || j > n)
            throw ValidationError("InputPartition: input index out of range [1," +
                                  std::to_string(n) + "]");
    InputPartition p;
    std::vector<bool> in_a(n + 1, false);
    for (std::size_t j : a_side) in_a[j] = true;
    // canonical form: input 1 belongs to side A
    const bool flip = !in_a[1];
    for (std::size_t j = 1; j <= n; ++j)
        (in_a[j] != flip ? p.a : p.b).push_back(j);
    return p;
}

std::string InputPartition::mask(std::size_t n) const {
    std::string m(n, '0');
    for (std::size_t j : a) m[j - 1] = '1';
    return m;
}

InputPartition left_right_partition(std::size_t n) {
    return segment_partition(n, n / 2);
}

InputPartition interleaved_partition(std::size_t n) { return segment_partition(n, 1); }

InputPartition segment_partition(std::size_t n, std::size_t xi) {
    if (n < 2 || xi < 1 || xi > n / 2)
        throw ValidationError("segment_partition: need 1 <= xi <= n/2");
    std::vector<std::size_t> a;
    for (std::size_t j = 1; j <= n; ++j)
        if (((j - 1) / xi) % 2 == 0) a.push_back(j);
    return InputPartition::from_a(std::move(a), n);
}

InputPartition checkerboard_partition(std::size_t n) {
    if (n % 4 != 0)
        throw ValidationError("checkerboard_partition: n must be a multiple of 4");
    std::vector<std::size_t> a;
    for (std::size_t j = 1; j <= n; ++j) {
        const std::size_t w = (j - 1) % 4;
        if (w == 0 || w == 3) a.push_back(j);
    }
    return InputPartition::from_a(std::move(a), n);
}

// ---------------------------------------------------------------------------
// graph construction
// ---------------------------------------------------------------------------

AnalysisGraph to_analysis_graph(const TensorNetwork& tn) {
    {
        const auto diags = validate(tn);
        if (!diags.empty())
            throw ValidationError("to_analysis_graph: invalid network: " +
                                  diags.front().message);
    }
    if (tn.open_order.size() < 2)
        throw ValidationError(
            "to_analysis_graph: need N input edges plus exactly one class edge");
    const int class_edge = tn.open_order.back();

    AnalysisGraph g;
    g.n_inputs = tn.open_order.size() - 1;

    std::unordered_map<int, int> vertex_of_node;
    for (const TNode& n : tn.nodes) {
        vertex_of_node[n.id] = static_cast<int>(vertex_of_node.size());
    }
    g.n_vertices = tn.nodes.size() + g.n_inputs;
    for (std::size_t j = 0; j < g.n_inputs; ++j)
        g.input_vertex.push_back(static_cast<int>(tn.nodes.size() + j));

    std::unordered_map<int, std::size_t> open_slot; // tn edge id -> input j-1
    for (std::size_t j = 0; j < g.n_inputs; ++j) open_slot[tn.open_order[j]] = j;

    // group per edge: the delta node it touches, else a fresh singleton
    std::unordered_map<int, int> group_of_delta;
    for (const TEdge& e : tn.edges) {
        if (e.id == class_edge) continue;
        int group = -1;
        std::size_t dim = e.bond;
        for (const EdgeEnd* end : {&e.a, &e.b}) {
            if (end->kind != EdgeEnd::Kind::node) continue;
            const TNode& n = tn.node(end->node_id);
            if (!n.is_delta()) continue;
            if (group != -1)
                throw ValidationError(
                    "to_analysis_graph: edge " + std::to_string(e.id) +
                    " joins two delta tensors; its group labeling is undefined");
            auto [it, inserted] =
                group_of_delta.emplace(n.id, static_cast<int>(g.group_dim.size()));
            if (inserted) {
                g.group_dim.push_back(n.delta().dim);
                g.delta_vertex.push_back(vertex_of_node.at(n.id));
            }
            group = it->second;
        }
        if (group == -1) {
            group = static_cast<int>(g.group_dim.size());
            g.group_dim.push_back(dim);
            g.delta_vertex.push_back(-1);
        }

        int u = -1, v = -1;
        if (e.is_open()) {
            const auto it = open_slot.find(e.id);
            if (it == open_slot.end())
                throw ValidationError("to_analysis_graph: unexpected open edge " +
                                      std::to_string(e.id));
            const EdgeEnd& node_end = e.a.kind == EdgeEnd::Kind::node ? e.a : e.b;
            u = vertex_of_node.at(node_end.node_id);
            v = g.input_vertex[it->second];
        } else {
            u = vertex_of_node.at(e.a.node_id);
            v = vertex_of_node.at(e.b.node_id);
        }
        g.edges.push_back(AnalysisEdge{static_cast<int>(g.edges.size()), u, v, group,
                                       e.id});
    }
    return g;
}

AnalysisGraph analysis_graph_for(const ConvACSpec& spec) {
    spec.check();
    WeightSet w;
    const std::size_t L = spec.kind == DepthKind::deep ? spec.depth() : 1;
    std::size_t positions = spec.n_inputs;
    const std::size_t pool =
        spec.kind == DepthKind::deep ? spec.pool_arity : spec.n_inputs;
    for (std::size_t l = 0; l < L; ++l) {
        w.layers.emplace_back();
        for (std::size_t j = 0; j < positions; ++j)
            w.layers[l].push_back(
                DenseTensor::zeros({spec.channels[l], spec.input_channels(l)}));
        positions /= pool;
    }
    w.output = DenseTensor::zeros({spec.n_classes, spec.channels[L - 1]});
    return to_analysis_graph(build_tn(spec, w).tn);
}

// ---------------------------------------------------------------------------
// cut weights
// ---------------------------------------------------------------------------

namespace {

// Component check: does removing `removed` edges still connect some A input
// to some B input?
bool separates(const AnalysisGraph& g, const InputPartition& p,
               const std::vector<bool>& removed) {
    std::vector<std::vector<std::pair<int, std::size_t>>> adj(g.n_vertices);
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        if (removed[i]) continue;
        adj[static_cast<std::size_t>(g.edges[i].u)].push_back({g.edges[i].v, i});
        adj[static_cast<std::size_t>(g.edges[i].v)].push_back({g.edges[i].u, i});
    }
    std::vector<bool> seen(g.n_vertices, false);
    std::deque<int> queue;
    for (std::size_t j : p.a) {
        const int s = g.input_vertex[j - 1];
        seen[static_cast<std::size_t>(s)] = true;
        queue.push_back(s);
    }
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (const auto& [w, ei] : adj[static_cast<std::size_t>(v)]) {
            if (seen[static_cast<std::size_t>(w)]) continue;
            seen[static_cast<std::size_t>(w)] = true;
            queue.push_back(w);
        }
    }
    for (std::size_t j : p.b)
        if (seen[static_cast<std::size_t>(g.input_vertex[j - 1])]) return false;
    return true;
}

std::vector<bool> removal_mask(const AnalysisGraph& g, const std::vector<int>& tn_edge_ids,
                               const char* what) {
    std::vector<bool> removed(g.edges.size(), false);
    for (int id : tn_edge_ids) {
        bool found = false;
        for (const AnalysisEdge& e : g.edges)
            if (e.tn_edge_id == id) {
                removed[static_cast<std::size_t>(e.id)] = true;
                found = true;
            }
        if (!found)
            throw ValidationError(std::string(what) + ": unknown edge id " +
                                  std::to_string(id));
    }
    return removed;
}

double log_weight_of(const BigInt& w) {
    // reporting only; go through the decimal string for very large weights
    const std::string s = w.str();
    if (s.size() <= 15) return std::log(static_cast<double>(std::stoll(s)));
    const double mantissa = std::stod(s.substr(0, 15));
    return std::log(mantissa) + std::log(10.0) * static_cast<double>(s.size() - 15);
}

} // namespace

BigInt cut_weight(const AnalysisGraph& g, const InputPartition& p,
                  const std::vector<int>& cut_edges) {
    const std::vector<bool> removed = removal_mask(g, cut_edges, "cut_weight");
    if (!separates(g, p, removed))
        throw ValidationError("cut_weight: the given edge set does not separate A from B");
    BigInt w = 1;
    for (std::size_t i = 0; i < g.edges.size(); ++i)
        if (removed[i]) w *= g.group_dim[static_cast<std::size_t>(g.edges[i].group)];
    return w;
}

BigInt modified_cut_weight(const AnalysisGraph& g, const InputPartition& p,
                           const std::vector<int>& cut_edges) {
    const std::vector<bool> removed = removal_mask(g, cut_edges, "modified_cut_weight");
    if (!separates(g, p, removed))
        throw ValidationError(
            "modified_cut_weight: the given edge set does not separate A from B");
    std::set<int> groups;
    for (std::size_t i = 0; i < g.edges.size(); ++i)
        if (removed[i]) groups.insert(g.edges[i].group);
    BigInt w = 1;
    for (int gid : groups) w *= g.group_dim[static_cast<std::size_t>(gid)];
    return w;
}

// ---------------------------------------------------------------------------
// max-flow (Edmonds-Karp on log capacities)
// ---------------------------------------------------------------------------

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = 1e-11;

struct FlowNet {
    struct Arc {
        int to;
        double cap;
    };
    std::vector<Arc> arcs;              // paired: arc i ^ 1 is the reverse
    std::vector<std::vector<int>> out;  // vertex -> arc indices

    explicit FlowNet(std::size_t n) : out(n) {}

    void add(int u, int v, double cap_uv, double cap_vu) {
        out[static_cast<std::size_t>(u)].push_back(static_cast<int>(arcs.size()));
        arcs.push_back({v, cap_uv});
        out[static_cast<std::size_t>(v)].push_back(static_cast<int>(arcs.size()));
        arcs.push_back({u, cap_vu});
    }

    // shortest augmenting paths; augmentation count is bounded by O(V E)
    // regardless of the capacity values
    double max_flow(int s, int t) {
        double total = 0.0;
        std::vector<int> pred_arc(out.size());
        for (;;) {
            std::fill(pred_arc.begin(), pred_arc.end(), -1);
            std::deque<int> queue{s};
            pred_arc[static_cast<std::size_t>(s)] = -2;
            while (!queue.empty() && pred_arc[static_cast<std::size_t>(t)] == -1) {
                const int v = queue.front();
                queue.pop_front();
                for (int ai : out[static_cast<std::size_t>(v)]) {
                    const Arc& a = arcs[static_cast<std::size_t>(ai)];
                    if (a.cap <= kEps || pred_arc[static_cast<std::size_t>(a.to)] != -1)
                        continue;
                    pred_arc[static_cast<std::size_t>(a.to)] = ai;
                    queue.push_back(a.to);
                }
            }
            if (pred_arc[static_cast<std::size_t>(t)] == -1) return total;
            double push = kInf;
            for (int v = t; v != s;) {
                const int ai = pred_arc[static_cast<std::size_t>(v)];
                push = std::min(push, arcs[static_cast<std::size_t>(ai)].cap);
                v = arcs[static_cast<std::size_t>(ai ^ 1)].to;
            }
            for (int v = t; v != s;) {
                const int ai = pred_arc[static_cast<std::size_t>(v)];
                arcs[static_cast<std::size_t>(ai)].cap -= push;
                arcs[static_cast<std::size_t>(ai ^ 1)].cap += push;
                v = arcs[static_cast<std::size_t>(ai ^ 1)].to;
            }
            total += push;
        }
    }

    std::vector<bool> source_side(int s) const {
        std::vector<bool> seen(out.size(), false);
        std::deque<int> queue{s};
        seen[static_cast<std::size_t>(s)] = true;
        while (!queue.empty()) {
            const int v = queue.front();
            queue.pop_front();
            for (int ai : out[static_cast<std::size_t>(v)]) {
                const Arc& a = arcs[static_cast<std::size_t>(ai)];
                if (a.cap <= kEps || seen[static_cast<std::size_t>(a.to)]) continue;
                seen[static_cast<std::size_t>(a.to)] = true;
                queue.push_back(a.to);
            }
        }
        return seen;
    }
};

CutReport report_from_sides(const AnalysisGraph& g, const InputPartition& p,
                            const std::vector<bool>& side_a, bool modified,
                            CutMethod method) {
    CutReport r;
    r.method = method;
    std::set<int> groups;
    for (const AnalysisEdge& e : g.edges) {
        if (side_a[static_cast<std::size_t>(e.u)] == side_a[static_cast<std::size_t>(e.v)])
            continue;
        r.cut_edges.push_back(e.tn_edge_id);
        groups.insert(e.group);
    }
    r.weight = 1;
    if (modified) {
        for (int gid : groups) r.weight *= g.group_dim[static_cast<std::size_t>(gid)];
    } else {
        std::vector<bool> removed = removal_mask(g, r.cut_edges, "min_cut");
        for (std::size_t i = 0; i < g.edges.size(); ++i)
            if (removed[i])
                r.weight *= g.group_dim[static_cast<std::size_t>(g.edges[i].group)];
    }
    r.log_weight = log_weight_of(r.weight);
    for (std::size_t v = 0; v < g.n_vertices; ++v)
        if (side_a[v]) r.side_a.push_back(static_cast<int>(v));

    // sanity: the reported set must actually separate
    if (!separates(g, p, removal_mask(g, r.cut_edges, "min_cut")))
        throw Error("min_cut: internal error, recovered cut does not separate");
    return r;
}

void check_partition(const AnalysisGraph& g, const InputPartition& p) {
    if (p.a.size() + p.b.size() != g.n_inputs)
        throw ValidationError("partition does not cover the graph inputs");
    for (std::size_t j : p.a)
        if (j < 1 || j > g.n_inputs)
            throw ValidationError("partition index out of range");
}

} // namespace

CutReport min_cut(const AnalysisGraph& g, const InputPartition& p) {
    check_partition(g, p);
    FlowNet net(g.n_vertices + 2);
    const int s = static_cast<int>(g.n_vertices);
    const int t = s + 1;
    for (const AnalysisEdge& e : g.edges) {
        const double c =
            std::log(static_cast<double>(g.group_dim[static_cast<std::size_t>(e.group)]));
        net.add(e.u, e.v, c, c);
    }
    for (std::size_t j : p.a) net.add(s, g.input_vertex[j - 1], kInf, 0.0);
    for (std::size_t j : p.b) net.add(g.input_vertex[j - 1], t, kInf, 0.0);
    net.max_flow(s, t);
    std::vector<bool> side = net.source_side(s);
    side.resize(g.n_vertices);
    return report_from_sides(g, p, side, /*modified=*/false, CutMethod::flow);
}

CutReport modified_min_cut(const AnalysisGraph& g, const InputPartition& p) {
    check_partition(g, p);
    // split vertices: in = 2v, out = 2v+1
    FlowNet net(2 * g.n_vertices + 2);
    const int s = static_cast<int>(2 * g.n_vertices);
    const int t = s + 1;

    std::vector<double> node_cap(g.n_vertices, kInf);
    for (std::size_t gid = 0; gid < g.group_dim.size(); ++gid)
        if (g.delta_vertex[gid] >= 0)
            node_cap[static_cast<std::size_t>(g.delta_vertex[gid])] =
                std::log(static_cast<double>(g.group_dim[gid]));
    for (std::size_t v = 0; v < g.n_vertices; ++v)
        net.add(static_cast<int>(2 * v), static_cast<int>(2 * v + 1), node_cap[v], 0.0);

    for (const AnalysisEdge& e : g.edges) {
        const bool delta_edge = g.delta_vertex[static_cast<std::size_t>(e.group)] >= 0;
        const double c =
            delta_edge
                ? kInf
                : std::log(static_cast<double>(g.group_dim[static_cast<std::size_t>(e.group)]));
        net.add(2 * e.u + 1, 2 * e.v, c, 0.0);
        net.add(2 * e.v + 1, 2 * e.u, c, 0.0);
    }
    for (std::size_t j : p.a) net.add(s, 2 * g.input_vertex[j - 1], kInf, 0.0);
    for (std::size_t j : p.b) net.add(2 * g.input_vertex[j - 1] + 1, t, kInf, 0.0);
    net.max_flow(s, t);

    const std::vector<bool> split_side = net.source_side(s);
    std::vector<bool> side(g.n_vertices, false);
    for (std::size_t v = 0; v < g.n_vertices; ++v) side[v] = split_side[2 * v];
    return report_from_sides(g, p, side, /*modified=*/true, CutMethod::flow);
}

CutReport min_cut_exhaustive(const AnalysisGraph& g, const InputPartition& p,
                             bool modified) {
    check_partition(g, p);
    const std::size_t n_free = g.n_vertices - g.n_inputs;
    if (n_free > 24)
        throw ValidationError("min_cut_exhaustive: too many internal vertices (" +
                              std::to_string(n_free) + ")");
    std::vector<bool> is_input(g.n_vertices, false), forced_a(g.n_vertices, false);
    for (std::size_t j : p.a) forced_a[static_cast<std::size_t>(g.input_vertex[j - 1])] = true;
    for (std::size_t j = 0; j < g.n_inputs; ++j)
        is_input[static_cast<std::size_t>(g.input_vertex[j])] = true;
    std::vector<std::size_t> free_vertices;
    for (std::size_t v = 0; v < g.n_vertices; ++v)
        if (!is_input[v]) free_vertices.push_back(v);

    std::optional<BigInt> best;
    std::vector<bool> best_side;
    std::vector<bool> side(g.n_vertices, false);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n_free); ++mask) {
        for (std::size_t v = 0; v < g.n_vertices; ++v) side[v] = forced_a[v];
        for (std::size_t k = 0; k < n_free; ++k)
            if (mask & (std::size_t{1} << k)) side[free_vertices[k]] = true;
        BigInt w = 1;
        std::set<int> groups;
        for (const AnalysisEdge& e : g.edges) {
            if (side[static_cast<std::size_t>(e.u)] == side[static_cast<std::size_t>(e.v)])
                continue;
            if (modified)
                groups.insert(e.group);
            else
                w *= g.group_dim[static_cast<std::size_t>(e.group)];
        }
        if (modified)
            for (int gid : groups) w *= g.group_dim[static_cast<std::size_t>(gid)];
        if (!best || w < *best) {
            best = w;
            best_side = side;
        }
    }
    return report_from_sides(g, p, best_side, modified, CutMethod::exhaustive);
}

BigInt power_of_p_lower_bound(const AnalysisGraph& g, const InputPartition& p) {
    check_partition(g, p);
    std::size_t max_dim = 2;
    for (std::size_t d : g.group_dim) max_dim = std::max(max_dim, d);

    BigInt best = 0;
    for (std::size_t base = 2; base <= max_dim; ++base) {
        AnalysisGraph rounded = g;
        for (std::size_t& d : rounded.group_dim) {
            std::size_t pw = 1;
            while (pw <= d / base) pw *= base;
            d = pw; // largest base^k <= d
        }
        const BigInt w = min_cut(rounded, p).weight;
        if (w > best) best = w;
    }
    return best;
}

// ---------------------------------------------------------------------------
// closed forms
// ---------------------------------------------------------------------------

namespace {

BigInt ipow(std::size_t base, std::size_t exp) {
    BigInt r = 1;
    for (std::size_t i = 0; i < exp; ++i) r *= base;
    return r;
}

} // namespace

BigInt closed_form(const ConvACSpec& spec, ClosedFormKind kind,
                   std::optional<std::size_t> size_a) {
    spec.check();
    const std::size_t n = spec.n_inputs;
    switch (kind) {
    case ClosedFormKind::left_right: {
        if (spec.kind != DepthKind::deep || spec.pool_arity != 2)
            throw ValidationError("closed_form: left-right form needs a deep pool-2 spec");
        const std::size_t L = spec.depth();
        BigInt best = spec.channels[L - 1];
        for (std::size_t l = 0; l + 2 <= L; ++l)
            best = std::min(best, ipow(spec.channels[l], std::size_t{1} << (L - 2 - l)));
        best = std::min(best, ipow(spec.rep_dim, n / 2));
        return best;
    }
    case ClosedFormKind::interleaved: {
        if (spec.kind != DepthKind::deep)
            throw ValidationError("closed_form: interleaved form needs a deep spec");
        return std::min(ipow(spec.channels[0], n / 4), ipow(spec.rep_dim, n / 2));
    }
    case ClosedFormKind::shallow: {
        if (spec.kind != DepthKind::shallow)
            throw ValidationError("closed_form: shallow form needs a shallow spec");
        if (!size_a || *size_a < 1 || *size_a >= n)
            throw ValidationError("closed_form: shallow form needs 1 <= |A| < n");
        const std::size_t small = std::min(*size_a, n - *size_a);
        return std::min(ipow(spec.rep_dim, small), BigInt(spec.channels[0]));
    }
    }
    throw ValidationError("closed_form: unknown kind");
}

std::vector<std::string> bounding_layers(const ConvACSpec& spec, std::size_t xi) {
    spec.check();
    if (spec.kind != DepthKind::deep)
        throw ValidationError("bounding_layers: needs a deep spec");
    if (xi < 1 || xi > spec.n_inputs / 2)
        throw ValidationError("bounding_layers: need 1 <= xi <= n/2");
    std::size_t top = 0; // ceil(log2 xi)
    while ((std::size_t{1} << top) < xi) ++top;
    std::vector<std::string> out{"M"};
    for (std::size_t l = 0; l <= top && l < spec.depth(); ++l)
        out.push_back("r_" + std::to_string(l));
    return out;
}

std::string cut_report_to_json(const CutReport& r, int indent) {
    json j;
    j["weight"] = r.weight.str();
    j["log_weight"] = r.log_weight;
    j["cut_edges"] = r.cut_edges;
    switch (r.method) {
    case CutMethod::flow: j["method"] = "flow"; break;
    case CutMethod::exhaustive: j["method"] = "exhaustive"; break;
    case CutMethod::closed_form: j["method"] = "closed_form"; break;
    }
    return j.dump(indent);
}

} // namespace tnarch
