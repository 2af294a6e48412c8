#include "tnarch/network.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace tnarch {

using nlohmann::json;

const TNode& TensorNetwork::node(int id) const {
    for (const TNode& n : nodes)
        if (n.id == id) return n;
    throw ValidationError("TensorNetwork: no node with id " + std::to_string(id));
}

const TEdge& TensorNetwork::edge(int id) const {
    for (const TEdge& e : edges)
        if (e.id == id) return e;
    throw ValidationError("TensorNetwork: no edge with id " + std::to_string(id));
}

int TensorNetwork::add_dense(DenseTensor t, std::string label) {
    const int id = nodes.empty() ? 0 : nodes.back().id + 1;
    nodes.push_back(TNode{id, std::move(t), std::move(label)});
    return id;
}

int TensorNetwork::add_delta(std::size_t order, std::size_t dim, std::string label) {
    const int id = nodes.empty() ? 0 : nodes.back().id + 1;
    nodes.push_back(TNode{id, DeltaSpec{order, dim}, std::move(label)});
    return id;
}

int TensorNetwork::connect(int node_a, int leg_a, int node_b, int leg_b, std::size_t bond) {
    const int id = edges.empty() ? 0 : edges.back().id + 1;
    edges.push_back(TEdge{id, EdgeEnd::at_node(node_a, leg_a),
                          EdgeEnd::at_node(node_b, leg_b), bond});
    return id;
}

int TensorNetwork::add_open(int node_id, int leg, std::size_t bond) {
    const int id = edges.empty() ? 0 : edges.back().id + 1;
    int open_index = 0;
    for (const TEdge& e : edges)
        for (const EdgeEnd* end : {&e.a, &e.b})
            if (end->kind == EdgeEnd::Kind::open)
                open_index = std::max(open_index, end->open_index + 1);
    edges.push_back(TEdge{id, EdgeEnd::at_node(node_id, leg),
                          EdgeEnd::open(open_index), bond});
    open_order.push_back(id);
    return id;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

std::vector<Diagnostic> validate(const TensorNetwork& tn) {
    std::vector<Diagnostic> diags;
    auto add = [&](const char* code, const std::string& msg) {
        diags.push_back(Diagnostic{code, msg});
    };

    std::unordered_map<int, std::size_t> node_ix;
    for (std::size_t i = 0; i < tn.nodes.size(); ++i) {
        const TNode& n = tn.nodes[i];
        if (!node_ix.emplace(n.id, i).second)
            add("duplicate-node-id", "node id " + std::to_string(n.id) + " appears twice");
        if (n.is_delta()) {
            if (n.delta().order < 2)
                add("delta-order", "delta node " + std::to_string(n.id) + " has order < 2");
            if (n.delta().dim < 1)
                add("delta-dim", "delta node " + std::to_string(n.id) + " has dim < 1");
        }
    }

    // leg coverage per node: leg -> number of edge endpoints referencing it
    std::unordered_map<int, std::vector<int>> coverage;
    for (const auto& [id, ix] : node_ix)
        coverage[id].assign(tn.nodes[ix].order(), 0);

    std::set<int> edge_ids, open_indices;
    for (const TEdge& e : tn.edges) {
        if (!edge_ids.insert(e.id).second)
            add("duplicate-edge-id", "edge id " + std::to_string(e.id) + " appears twice");
        if (e.bond < 1)
            add("bond-dim", "edge " + std::to_string(e.id) + " has bond dimension < 1");
        if (e.a.kind == EdgeEnd::Kind::open && e.b.kind == EdgeEnd::Kind::open)
            add("double-open-edge", "edge " + std::to_string(e.id) + " has two open ends");
        for (const EdgeEnd* end : {&e.a, &e.b}) {
            if (end->kind == EdgeEnd::Kind::open) {
                if (!open_indices.insert(end->open_index).second)
                    add("duplicate-open-index",
                        "open index " + std::to_string(end->open_index) +
                            " used by more than one edge");
                continue;
            }
            auto it = node_ix.find(end->node_id);
            if (it == node_ix.end()) {
                add("dangling-endpoint", "edge " + std::to_string(e.id) +
                                             " references missing node " +
                                             std::to_string(end->node_id));
                continue;
            }
            const TNode& n = tn.nodes[it->second];
            if (end->leg < 0 || static_cast<std::size_t>(end->leg) >= n.order()) {
                add("leg-range", "edge " + std::to_string(e.id) + " references leg " +
                                     std::to_string(end->leg) + " of node " +
                                     std::to_string(n.id) + " (order " +
                                     std::to_string(n.order()) + ")");
                continue;
            }
            coverage[n.id][static_cast<std::size_t>(end->leg)] += 1;
            const std::size_t mode_dim =
                n.is_delta() ? n.delta().dim
                             : n.dense().shape[static_cast<std::size_t>(end->leg)];
            if (mode_dim != e.bond)
                add("dimension-mismatch",
                    "edge " + std::to_string(e.id) + " (dim " + std::to_string(e.bond) +
                        ") attached to mode of dimension " + std::to_string(mode_dim) +
                        " at node " + std::to_string(n.id));
        }
    }

    for (const auto& [id, legs] : coverage)
        for (std::size_t l = 0; l < legs.size(); ++l)
            if (legs[l] != 1)
                add(legs[l] == 0 ? "uncovered-leg" : "overcovered-leg",
                    "node " + std::to_string(id) + " leg " + std::to_string(l) +
                        " covered by " + std::to_string(legs[l]) + " edge endpoints");

    // open_order must list exactly the open edges
    std::set<int> open_edges;
    for (const TEdge& e : tn.edges)
        if (e.is_open()) open_edges.insert(e.id);
    std::set<int> listed(tn.open_order.begin(), tn.open_order.end());
    if (listed.size() != tn.open_order.size())
        add("open-order-duplicate", "open_order contains a repeated edge id");
    if (listed != open_edges)
        add("open-order-mismatch",
            "open_order does not list exactly the open edges of the network");

    // connectivity over node-node edges
    if (tn.nodes.size() > 1) {
        std::unordered_map<int, int> comp;
        for (const TNode& n : tn.nodes) comp[n.id] = n.id;
        std::function<int(int)> find = [&](int v) {
            while (comp[v] != v) v = comp[v] = comp[comp[v]];
            return v;
        };
        for (const TEdge& e : tn.edges)
            if (e.a.kind == EdgeEnd::Kind::node && e.b.kind == EdgeEnd::Kind::node &&
                comp.count(e.a.node_id) && comp.count(e.b.node_id))
                comp[find(e.a.node_id)] = find(e.b.node_id);
        std::set<int> roots;
        for (const TNode& n : tn.nodes) roots.insert(find(n.id));
        if (roots.size() > 1)
            add("disconnected", "network has " + std::to_string(roots.size()) +
                                    " connected components");
    }
    return diags;
}

DenseTensor materialize_delta(std::size_t order, std::size_t dim, std::size_t cap) {
    if (order < 2) throw ValidationError("materialize_delta: order must be >= 2");
    if (dim < 1) throw ValidationError("materialize_delta: dim must be >= 1");
    const std::vector<std::size_t> shape(order, dim);
    const std::size_t n = checked_num_entries(shape, cap, "materialize_delta");
    std::vector<double> data(n, 0.0);
    // super-diagonal stride: 1 + dim + dim^2 + ...
    std::size_t step = 0, acc = 1;
    for (std::size_t k = 0; k < order; ++k) {
        step += acc;
        acc *= dim;
    }
    for (std::size_t d = 0; d < dim; ++d) data[d * step] = 1.0;
    return DenseTensor(shape, std::move(data));
}

// ---------------------------------------------------------------------------
// contraction engine
//
// Every edge gets a summation symbol; edges incident to the same delta node
// share one symbol (the delta acts as a copy tensor). Dense nodes become
// operand blocks labeled by symbols, and the network value is the sum over
// symbol assignments of the product of block entries. Pairwise contractions
// sum a shared symbol once no other block or output mode uses it, and keep
// it as a diagonal (batch) mode otherwise.
// ---------------------------------------------------------------------------

namespace {

struct Block {
    std::vector<std::size_t> dims;
    std::vector<int> syms; // parallel to dims, unique within a block
    std::vector<double> data;

    std::size_t size() const { return data.size(); }
    bool has_sym(int s) const {
        return std::find(syms.begin(), syms.end(), s) != syms.end();
    }
    std::size_t mode_of(int s) const {
        return static_cast<std::size_t>(
            std::find(syms.begin(), syms.end(), s) - syms.begin());
    }
};

// out[f] = src[sum_k idx_k * weight_k] walked with an odometer over `dims`.
std::vector<double> gather(const std::vector<std::size_t>& dims,
                           const std::vector<std::size_t>& weights,
                           const std::vector<double>& src) {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    std::vector<double> out(n);
    std::vector<std::size_t> idx(dims.size(), 0);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < n; ++f) {
        out[f] = src[pos];
        for (std::size_t i = dims.size(); i-- > 0;) {
            pos += weights[i];
            if (++idx[i] < dims[i]) break;
            pos -= weights[i] * dims[i];
            idx[i] = 0;
        }
    }
    return out;
}

std::vector<std::size_t> row_major_strides(const std::vector<std::size_t>& dims) {
    std::vector<std::size_t> s(dims.size());
    std::size_t acc = 1;
    for (std::size_t i = dims.size(); i-- > 0;) {
        s[i] = acc;
        acc *= dims[i];
    }
    return s;
}

// Extracts the diagonal over repeated symbols so block symbols are unique.
Block collapse_repeated(Block b) {
    bool repeated = false;
    for (std::size_t i = 1; i < b.syms.size() && !repeated; ++i)
        repeated = std::find(b.syms.begin(), b.syms.begin() + i, b.syms[i]) !=
                   b.syms.begin() + static_cast<std::ptrdiff_t>(i);
    if (!repeated) return b;

    const std::vector<std::size_t> src_strides = row_major_strides(b.dims);
    Block out;
    std::vector<std::size_t> weights;
    for (std::size_t i = 0; i < b.syms.size(); ++i) {
        const auto first = std::find(b.syms.begin(), b.syms.end(), b.syms[i]) - b.syms.begin();
        if (static_cast<std::size_t>(first) == i) {
            out.syms.push_back(b.syms[i]);
            out.dims.push_back(b.dims[i]);
            weights.push_back(0);
        }
        const std::size_t k = out.mode_of(b.syms[i]);
        weights[k] += src_strides[i];
    }
    out.data = gather(out.dims, weights, b.data);
    return out;
}

Block permute(const Block& b, const std::vector<std::size_t>& perm) {
    const std::vector<std::size_t> src_strides = row_major_strides(b.dims);
    Block out;
    std::vector<std::size_t> weights;
    for (std::size_t k : perm) {
        out.dims.push_back(b.dims[k]);
        out.syms.push_back(b.syms[k]);
        weights.push_back(src_strides[k]);
    }
    out.data = gather(out.dims, weights, b.data);
    return out;
}

Block sum_out(const Block& b, int sym) {
    const std::size_t m = b.mode_of(sym);
    Block out;
    for (std::size_t i = 0; i < b.dims.size(); ++i) {
        if (i == m) continue;
        out.dims.push_back(b.dims[i]);
        out.syms.push_back(b.syms[i]);
    }
    const std::vector<std::size_t> dst_strides = row_major_strides(out.dims);
    std::size_t n = 1;
    for (std::size_t d : out.dims) n *= d;
    out.data.assign(n, 0.0);
    // accumulate: destination weight of the summed mode is zero
    std::vector<std::size_t> weights(b.dims.size(), 0);
    {
        std::size_t k = 0;
        for (std::size_t i = 0; i < b.dims.size(); ++i)
            if (i != m) weights[i] = dst_strides[k++];
    }
    std::vector<std::size_t> idx(b.dims.size(), 0);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < b.data.size(); ++f) {
        out.data[pos] += b.data[f];
        for (std::size_t i = b.dims.size(); i-- > 0;) {
            pos += weights[i];
            if (++idx[i] < b.dims[i]) break;
            pos -= weights[i] * b.dims[i];
            idx[i] = 0;
        }
    }
    return out;
}

using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Contracts x and y; `summed` marks shared symbols to sum over, every other
// shared symbol is kept once as a diagonal mode.
Block pair_contract(const Block& x, const Block& y, const std::set<int>& summed,
                    std::size_t cap) {
    std::vector<int> batch, sum_syms;
    for (int s : x.syms) {
        if (!y.has_sym(s)) continue;
        (summed.count(s) ? sum_syms : batch).push_back(s);
    }
    std::sort(batch.begin(), batch.end());
    std::sort(sum_syms.begin(), sum_syms.end());

    auto arrange = [](const Block& b, const std::vector<int>& front,
                      const std::vector<int>& back, bool free_in_middle) {
        std::vector<std::size_t> perm;
        for (int s : front) perm.push_back(b.mode_of(s));
        if (free_in_middle)
            for (std::size_t i = 0; i < b.syms.size(); ++i) {
                const int s = b.syms[i];
                if (std::find(front.begin(), front.end(), s) == front.end() &&
                    std::find(back.begin(), back.end(), s) == back.end())
                    perm.push_back(i);
            }
        for (int s : back) perm.push_back(b.mode_of(s));
        if (!free_in_middle)
            for (std::size_t i = 0; i < b.syms.size(); ++i) {
                const int s = b.syms[i];
                if (std::find(front.begin(), front.end(), s) == front.end() &&
                    std::find(back.begin(), back.end(), s) == back.end())
                    perm.push_back(i);
            }
        return perm;
    };

    // x -> [batch][x free][sum], y -> [batch][sum][y free]
    const Block xp = permute(x, arrange(x, batch, sum_syms, true));
    const Block yp = permute(y, arrange(y, batch, sum_syms, false));

    std::size_t nb = 1, ns = 1, fx = 1, fy = 1;
    for (int s : batch) nb *= xp.dims[xp.mode_of(s)];
    for (int s : sum_syms) ns *= xp.dims[xp.mode_of(s)];
    fx = xp.size() / (nb * ns);
    fy = yp.size() / (nb * ns);

    Block out;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        out.dims.push_back(xp.dims[i]);
        out.syms.push_back(xp.syms[i]);
    }
    for (std::size_t i = batch.size(); i < xp.dims.size() - sum_syms.size(); ++i) {
        out.dims.push_back(xp.dims[i]);
        out.syms.push_back(xp.syms[i]);
    }
    for (std::size_t i = batch.size() + sum_syms.size(); i < yp.dims.size(); ++i) {
        out.dims.push_back(yp.dims[i]);
        out.syms.push_back(yp.syms[i]);
    }
    {
        std::ostringstream what;
        what << "contract: intermediate over symbols [";
        for (std::size_t i = 0; i < out.syms.size(); ++i)
            what << (i ? " " : "") << out.syms[i];
        what << "] of shape [";
        for (std::size_t i = 0; i < out.dims.size(); ++i)
            what << (i ? " x " : "") << out.dims[i];
        what << "]";
        checked_num_entries(out.dims.empty() ? std::vector<std::size_t>{1} : out.dims,
                            cap, what.str());
    }
    out.data.assign(nb * fx * fy, 0.0);

    for (std::size_t b = 0; b < nb; ++b) {
        Eigen::Map<const RowMatrixXd> xm(xp.data.data() + b * fx * ns,
                                         static_cast<Eigen::Index>(fx),
                                         static_cast<Eigen::Index>(ns));
        Eigen::Map<const RowMatrixXd> ym(yp.data.data() + b * ns * fy,
                                         static_cast<Eigen::Index>(ns),
                                         static_cast<Eigen::Index>(fy));
        Eigen::Map<RowMatrixXd> zm(out.data.data() + b * fx * fy,
                                   static_cast<Eigen::Index>(fx),
                                   static_cast<Eigen::Index>(fy));
        zm.noalias() = xm * ym;
    }
    return out;
}

struct SymbolTable {
    std::vector<int> sym_of_edge;      // edge index -> symbol id
    std::vector<std::size_t> sym_dim;  // symbol id -> index range
};

SymbolTable build_symbols(const TensorNetwork& tn) {
    // union-find over edge indices; delta nodes merge their incident edges
    std::vector<std::size_t> parent(tn.edges.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    std::function<std::size_t(std::size_t)> find = [&](std::size_t v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    std::unordered_map<int, std::size_t> first_edge_of_node;
    for (std::size_t i = 0; i < tn.edges.size(); ++i) {
        const TEdge& e = tn.edges[i];
        for (const EdgeEnd* end : {&e.a, &e.b}) {
            if (end->kind != EdgeEnd::Kind::node) continue;
            const TNode& n = tn.node(end->node_id);
            if (!n.is_delta()) continue;
            auto [it, inserted] = first_edge_of_node.emplace(n.id, i);
            if (!inserted) parent[find(i)] = find(it->second);
        }
    }
    SymbolTable st;
    st.sym_of_edge.assign(tn.edges.size(), -1);
    std::unordered_map<std::size_t, int> compact;
    for (std::size_t i = 0; i < tn.edges.size(); ++i) {
        const std::size_t root = find(i);
        auto [it, inserted] = compact.emplace(root, static_cast<int>(st.sym_dim.size()));
        if (inserted) st.sym_dim.push_back(tn.edges[i].bond);
        st.sym_of_edge[i] = it->second;
    }
    return st;
}

} // namespace

DenseTensor contract(const TensorNetwork& tn, const ContractOptions& opts) {
    {
        const auto diags = validate(tn);
        if (!diags.empty())
            throw ValidationError("contract: invalid network: " + diags.front().message +
                                  (diags.size() > 1
                                       ? " (+" + std::to_string(diags.size() - 1) +
                                             " more diagnostics)"
                                       : ""));
    }
    const std::size_t cap = opts.size_cap;

    std::unordered_map<int, std::size_t> edge_ix;
    for (std::size_t i = 0; i < tn.edges.size(); ++i) edge_ix[tn.edges[i].id] = i;
    const SymbolTable st = build_symbols(tn);

    // (node id, leg) -> edge index
    std::unordered_map<long long, std::size_t> leg_edge;
    for (std::size_t i = 0; i < tn.edges.size(); ++i)
        for (const EdgeEnd* end : {&tn.edges[i].a, &tn.edges[i].b})
            if (end->kind == EdgeEnd::Kind::node)
                leg_edge[(static_cast<long long>(end->node_id) << 20) | end->leg] = i;

    // output modes in open_order
    std::vector<int> out_syms;
    std::vector<std::size_t> out_dims;
    for (int oid : tn.open_order) {
        const std::size_t i = edge_ix.at(oid);
        out_syms.push_back(st.sym_of_edge[i]);
        out_dims.push_back(tn.edges[i].bond);
    }

    std::vector<std::size_t> op_use(st.sym_dim.size(), 0), out_use(st.sym_dim.size(), 0);
    for (int s : out_syms) out_use[static_cast<std::size_t>(s)] += 1;

    std::vector<Block> blocks;
    for (const TNode& n : tn.nodes) {
        if (n.is_delta()) continue;
        Block b;
        b.dims = n.dense().shape;
        b.data = n.dense().data;
        for (std::size_t leg = 0; leg < b.dims.size(); ++leg) {
            const auto it = leg_edge.find((static_cast<long long>(n.id) << 20) |
                                          static_cast<long long>(leg));
            b.syms.push_back(st.sym_of_edge[it->second]);
        }
        blocks.push_back(collapse_repeated(std::move(b)));
        for (int s : blocks.back().syms) op_use[static_cast<std::size_t>(s)] += 1;
    }

    // delta-only cycles: symbols touched by no block and no output mode
    // contribute a free summation of 1s
    double loop_factor = 1.0;
    {
        std::vector<bool> touched(st.sym_dim.size(), false);
        for (const Block& b : blocks)
            for (int s : b.syms) touched[static_cast<std::size_t>(s)] = true;
        for (int s : out_syms) touched[static_cast<std::size_t>(s)] = true;
        for (std::size_t s = 0; s < st.sym_dim.size(); ++s)
            if (!touched[s]) loop_factor *= static_cast<double>(st.sym_dim[s]);
    }

    auto contract_pair_at = [&](std::size_t i, std::size_t j) {
        std::set<int> summed;
        for (int s : blocks[i].syms)
            if (blocks[j].has_sym(s) && op_use[static_cast<std::size_t>(s)] == 2 &&
                out_use[static_cast<std::size_t>(s)] == 0)
                summed.insert(s);
        Block merged = pair_contract(blocks[i], blocks[j], summed, cap);
        for (const Block* b : {&blocks[i], &blocks[j]})
            for (int s : b->syms) op_use[static_cast<std::size_t>(s)] -= 1;
        for (int s : merged.syms) op_use[static_cast<std::size_t>(s)] += 1;
        blocks[i] = std::move(merged);
        blocks.erase(blocks.begin() + static_cast<std::ptrdiff_t>(j));
    };

    if (opts.schedule) {
        for (int eid : *opts.schedule) {
            const auto it = edge_ix.find(eid);
            if (it == edge_ix.end())
                throw ValidationError("contract: schedule references missing edge " +
                                      std::to_string(eid));
            const int s = st.sym_of_edge[it->second];
            std::size_t first = blocks.size(), second = blocks.size();
            for (std::size_t k = 0; k < blocks.size(); ++k) {
                if (!blocks[k].has_sym(s)) continue;
                if (first == blocks.size()) {
                    first = k;
                } else {
                    second = k;
                    break;
                }
            }
            if (second < blocks.size()) contract_pair_at(first, second);
        }
    }

    // greedy smallest-intermediate-first over pairs sharing a symbol
    while (blocks.size() > 1) {
        std::size_t best_i = 0, best_j = 0;
        long double best_size = -1.0L;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            for (std::size_t j = i + 1; j < blocks.size(); ++j) {
                bool shares = false;
                for (int s : blocks[i].syms)
                    if (blocks[j].has_sym(s)) {
                        shares = true;
                        break;
                    }
                if (!shares) continue;
                long double size = 1.0L;
                for (std::size_t k = 0; k < blocks[i].dims.size(); ++k) {
                    const int s = blocks[i].syms[k];
                    const bool summed = blocks[j].has_sym(s) &&
                                        op_use[static_cast<std::size_t>(s)] == 2 &&
                                        out_use[static_cast<std::size_t>(s)] == 0;
                    if (!summed) size *= static_cast<long double>(blocks[i].dims[k]);
                }
                for (std::size_t k = 0; k < blocks[j].dims.size(); ++k)
                    if (!blocks[i].has_sym(blocks[j].syms[k]))
                        size *= static_cast<long double>(blocks[j].dims[k]);
                if (best_size < 0.0L || size < best_size) {
                    best_size = size;
                    best_i = i;
                    best_j = j;
                }
            }
        }
        if (best_size < 0.0L) {
            // no shared symbols left; outer product (disconnected remainder)
            contract_pair_at(0, 1);
            continue;
        }
        contract_pair_at(best_i, best_j);
    }

    Block result;
    if (blocks.empty()) {
        result.data = {1.0};
    } else {
        result = std::move(blocks.front());
    }
    // marginalize symbols that never reach the output
    for (bool changed = true; changed;) {
        changed = false;
        for (int s : result.syms) {
            if (out_use[static_cast<std::size_t>(s)] == 0) {
                result = sum_out(result, s);
                changed = true;
                break;
            }
        }
    }

    // scatter into the open_order layout; output modes sharing a symbol get
    // explicit super-diagonal structure
    if (tn.open_order.empty()) {
        double v = loop_factor * (result.data.empty() ? 0.0 : result.data[0]);
        return DenseTensor::scalar(v);
    }
    checked_num_entries(out_dims, cap, "contract: result");
    DenseTensor out = DenseTensor::zeros(out_dims);
    const std::vector<std::size_t> out_strides = row_major_strides(out_dims);

    // weight per block mode: combined stride over the output modes bound to it
    std::vector<std::size_t> bound_weight(result.dims.size(), 0);
    std::vector<int> free_syms; // output symbols absent from the block
    std::vector<std::size_t> free_weight, free_dim;
    {
        std::set<int> seen;
        for (std::size_t m = 0; m < out_syms.size(); ++m) {
            const int s = out_syms[m];
            if (result.has_sym(s)) {
                bound_weight[result.mode_of(s)] += out_strides[m];
            } else if (seen.insert(s).second) {
                free_syms.push_back(s);
                free_dim.push_back(st.sym_dim[static_cast<std::size_t>(s)]);
                std::size_t w = 0;
                for (std::size_t m2 = 0; m2 < out_syms.size(); ++m2)
                    if (out_syms[m2] == s) w += out_strides[m2];
                free_weight.push_back(w);
            }
        }
    }

    std::vector<std::size_t> idx(result.dims.size(), 0);
    std::size_t base = 0;
    for (std::size_t f = 0; f < result.data.size(); ++f) {
        const double v = loop_factor * result.data[f];
        // free (pure-delta) symbols each range over their dimension
        std::vector<std::size_t> fidx(free_syms.size(), 0);
        for (;;) {
            std::size_t pos = base;
            for (std::size_t k = 0; k < fidx.size(); ++k) pos += fidx[k] * free_weight[k];
            out.data[pos] = v;
            bool advanced = false;
            for (std::size_t k = fidx.size(); k-- > 0;) {
                if (++fidx[k] < free_dim[k]) {
                    advanced = true;
                    break;
                }
                fidx[k] = 0;
            }
            if (!advanced) break;
        }
        if (result.dims.empty()) break;
        for (std::size_t i = result.dims.size(); i-- > 0;) {
            base += bound_weight[i];
            if (++idx[i] < result.dims[i]) break;
            base -= bound_weight[i] * result.dims[i];
            idx[i] = 0;
        }
    }
    return out;
}

TensorNetwork fix_open_edge(const TensorNetwork& tn, int edge_id, std::size_t index) {
    const TEdge& target = tn.edge(edge_id);
    const EdgeEnd* node_end = nullptr;
    if (target.a.kind == EdgeEnd::Kind::node && target.b.kind == EdgeEnd::Kind::open)
        node_end = &target.a;
    else if (target.b.kind == EdgeEnd::Kind::node && target.a.kind == EdgeEnd::Kind::open)
        node_end = &target.b;
    else
        throw ValidationError("fix_open_edge: edge " + std::to_string(edge_id) +
                              " is not open");
    if (index >= target.bond)
        throw ValidationError("fix_open_edge: index out of range");

    const TNode& n = tn.node(node_end->node_id);
    if (n.is_delta())
        throw ValidationError("fix_open_edge: cannot fix a leg of a delta node");
    if (n.order() < 2)
        throw ValidationError("fix_open_edge: fixing the only leg of an order-1 node");
    const std::size_t sliced_leg = static_cast<std::size_t>(node_end->leg);

    // slice the tensor at mode sliced_leg == index
    const DenseTensor& t = n.dense();
    std::vector<std::size_t> new_shape;
    for (std::size_t i = 0; i < t.shape.size(); ++i)
        if (i != sliced_leg) new_shape.push_back(t.shape[i]);
    DenseTensor sliced = DenseTensor::zeros(new_shape);
    std::vector<std::size_t> idx(t.shape.size(), 0);
    idx[sliced_leg] = index;
    for (std::size_t f = 0; f < sliced.data.size(); ++f) {
        sliced.data[f] = t.at(idx);
        for (std::size_t i = t.shape.size(); i-- > 0;) {
            if (i == sliced_leg) continue;
            if (++idx[i] < t.shape[i]) break;
            idx[i] = 0;
        }
    }

    TensorNetwork out;
    out.nodes = tn.nodes;
    for (TNode& node : out.nodes)
        if (node.id == n.id) node.kind = std::move(sliced);
    for (const TEdge& e : tn.edges) {
        if (e.id == edge_id) continue;
        TEdge copy = e;
        for (EdgeEnd* end : {&copy.a, &copy.b})
            if (end->kind == EdgeEnd::Kind::node && end->node_id == n.id &&
                static_cast<std::size_t>(end->leg) > sliced_leg)
                end->leg -= 1;
        out.edges.push_back(copy);
    }
    for (int oid : tn.open_order)
        if (oid != edge_id) out.open_order.push_back(oid);
    return out;
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

std::string network_to_json(const TensorNetwork& tn, int indent) {
    json j;
    j["nodes"] = json::array();
    for (const TNode& n : tn.nodes) {
        json node;
        node["id"] = n.id;
        if (n.is_delta()) {
            node["kind"] = "delta";
            node["order"] = n.delta().order;
            node["dim"] = n.delta().dim;
        } else {
            node["kind"] = "dense";
            node["shape"] = n.dense().shape;
            node["data"] = n.dense().data;
        }
        node["label"] = n.label;
        j["nodes"].push_back(std::move(node));
    }
    j["edges"] = json::array();
    for (const TEdge& e : tn.edges) {
        json edge;
        edge["id"] = e.id;
        json ends = json::array();
        for (const EdgeEnd* end : {&e.a, &e.b}) {
            if (end->kind == EdgeEnd::Kind::node)
                ends.push_back(json::array({"node", end->node_id, end->leg}));
            else
                ends.push_back(json::array({"open", end->open_index}));
        }
        edge["ends"] = std::move(ends);
        edge["dim"] = e.bond;
        j["edges"].push_back(std::move(edge));
    }
    j["open_order"] = tn.open_order;
    return j.dump(indent);
}

TensorNetwork network_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("network_from_json: parse error: ") + e.what());
    }
    try {
        TensorNetwork tn;
        for (const json& node : j.at("nodes")) {
            TNode n;
            n.id = node.at("id").get<int>();
            n.label = node.value("label", std::string{});
            const std::string kind = node.at("kind").get<std::string>();
            if (kind == "delta") {
                n.kind = DeltaSpec{node.at("order").get<std::size_t>(),
                                   node.at("dim").get<std::size_t>()};
            } else if (kind == "dense") {
                n.kind = DenseTensor(node.at("shape").get<std::vector<std::size_t>>(),
                                     node.at("data").get<std::vector<double>>());
            } else {
                throw ValidationError("network_from_json: unknown node kind '" + kind + "'");
            }
            tn.nodes.push_back(std::move(n));
        }
        for (const json& edge : j.at("edges")) {
            TEdge e;
            e.id = edge.at("id").get<int>();
            e.bond = edge.at("dim").get<std::size_t>();
            const json& ends = edge.at("ends");
            if (!ends.is_array() || ends.size() != 2)
                throw ValidationError("network_from_json: edge needs exactly two ends");
            EdgeEnd* slots[2] = {&e.a, &e.b};
            for (int k = 0; k < 2; ++k) {
                const json& end = ends[static_cast<std::size_t>(k)];
                const std::string tag = end.at(0).get<std::string>();
                if (tag == "node")
                    *slots[k] = EdgeEnd::at_node(end.at(1).get<int>(), end.at(2).get<int>());
                else if (tag == "open")
                    *slots[k] = EdgeEnd::open(end.at(1).get<int>());
                else
                    throw ValidationError("network_from_json: unknown end tag '" + tag + "'");
            }
            tn.edges.push_back(std::move(e));
        }
        tn.open_order = j.at("open_order").get<std::vector<int>>();
        return tn;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("network_from_json: malformed network: ") +
                              e.what());
    }
}

} // namespace tnarch
