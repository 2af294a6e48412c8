#include "tnarch/convac.hpp"

#include <sstream>

#include "json.hpp"
#include "tnarch/rng.hpp"

namespace tnarch {

using nlohmann::json;

void ConvACSpec::check() const {
    if (n_inputs < 1) throw ValidationError("ConvACSpec: n must be >= 1");
    if (rep_dim < 1) throw ValidationError("ConvACSpec: m must be >= 1");
    if (n_classes < 1) throw ValidationError("ConvACSpec: classes must be >= 1");
    if (pool_arity < 2) throw ValidationError("ConvACSpec: pool arity must be >= 2");
    if (channels.empty()) throw ValidationError("ConvACSpec: channel list is empty");
    for (std::size_t r : channels)
        if (r < 1) throw ValidationError("ConvACSpec: channel counts must be >= 1");
    if (kind == DepthKind::shallow) {
        if (channels.size() != 1)
            throw ValidationError("ConvACSpec: shallow networks have exactly one hidden width");
        return;
    }
    std::size_t expect = 1;
    for (std::size_t l = 0; l < channels.size(); ++l) expect *= pool_arity;
    if (expect != n_inputs)
        throw ValidationError("ConvACSpec: deep networks require n = pool^L (got n=" +
                              std::to_string(n_inputs) + ", pool=" +
                              std::to_string(pool_arity) + ", L=" +
                              std::to_string(channels.size()) + ")");
}

std::string ConvACSpec::to_json(int indent) const {
    json j;
    j["n"] = n_inputs;
    j["m"] = rep_dim;
    j["channels"] = channels;
    j["classes"] = n_classes;
    j["pool"] = pool_arity;
    j["kind"] = kind == DepthKind::deep ? "deep" : "shallow";
    return j.dump(indent);
}

ConvACSpec ConvACSpec::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("ConvACSpec: parse error: ") + e.what());
    }
    try {
        ConvACSpec s;
        s.n_inputs = j.at("n").get<std::size_t>();
        s.rep_dim = j.at("m").get<std::size_t>();
        s.channels = j.at("channels").get<std::vector<std::size_t>>();
        s.n_classes = j.value("classes", std::size_t{1});
        s.pool_arity = j.value("pool", std::size_t{2});
        const std::string kind = j.value("kind", std::string{"deep"});
        if (kind == "deep")
            s.kind = DepthKind::deep;
        else if (kind == "shallow")
            s.kind = DepthKind::shallow;
        else
            throw ValidationError("ConvACSpec: kind must be 'deep' or 'shallow'");
        s.check();
        return s;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("ConvACSpec: malformed spec: ") + e.what());
    }
}

namespace {

std::vector<std::vector<double>> to_nested(const DenseTensor& m) {
    std::vector<std::vector<double>> rows(m.shape[0], std::vector<double>(m.shape[1]));
    for (std::size_t r = 0; r < m.shape[0]; ++r)
        for (std::size_t c = 0; c < m.shape[1]; ++c)
            rows[r][c] = m.data[r * m.shape[1] + c];
    return rows;
}

DenseTensor from_nested(const std::vector<std::vector<double>>& rows,
                        const std::string& what) {
    if (rows.empty() || rows.front().empty())
        throw ValidationError(what + ": empty matrix");
    std::vector<double> data;
    data.reserve(rows.size() * rows.front().size());
    for (const auto& r : rows) {
        if (r.size() != rows.front().size())
            throw ValidationError(what + ": ragged matrix");
        data.insert(data.end(), r.begin(), r.end());
    }
    return DenseTensor({rows.size(), rows.front().size()}, std::move(data));
}

} // namespace

std::string WeightSet::to_json(int indent) const {
    json j;
    for (std::size_t l = 0; l < layers.size(); ++l)
        for (std::size_t p = 0; p < layers[l].size(); ++p)
            j["A_" + std::to_string(l) + "_" + std::to_string(p + 1)] =
                to_nested(layers[l][p]);
    j["G"] = to_nested(output);
    return j.dump(indent);
}

WeightSet WeightSet::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("WeightSet: parse error: ") + e.what());
    }
    WeightSet w;
    for (std::size_t l = 0;; ++l) {
        std::vector<DenseTensor> layer;
        for (std::size_t p = 1;; ++p) {
            const std::string key = "A_" + std::to_string(l) + "_" + std::to_string(p);
            if (!j.contains(key)) break;
            layer.push_back(from_nested(
                j.at(key).get<std::vector<std::vector<double>>>(), key));
        }
        if (layer.empty()) break;
        w.layers.push_back(std::move(layer));
    }
    if (!j.contains("G")) throw ValidationError("WeightSet: missing G");
    w.output = from_nested(j.at("G").get<std::vector<std::vector<double>>>(), "G");
    if (w.layers.empty()) throw ValidationError("WeightSet: no layer matrices found");
    return w;
}

std::string RepresentationInput::to_json(int indent) const {
    json j;
    j["x"] = x;
    return j.dump(indent);
}

RepresentationInput RepresentationInput::from_json(const std::string& text) {
    try {
        RepresentationInput in;
        in.x = json::parse(text).at("x").get<std::vector<std::vector<double>>>();
        return in;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("RepresentationInput: ") + e.what());
    }
}

WeightSet random_weights(const ConvACSpec& spec, std::uint64_t seed) {
    spec.check();
    const std::size_t L = spec.depth();
    auto normal_at = [&](std::size_t l, std::size_t j, std::size_t row, std::size_t col) {
        std::uint64_t k = rng::derive(seed, l);
        k = rng::derive(k, j);
        k = rng::derive(k, row);
        k = rng::derive(k, col);
        return rng::standard_normal(k);
    };
    auto fill = [&](std::size_t l, std::size_t j, std::size_t rows, std::size_t cols) {
        DenseTensor m = DenseTensor::zeros({rows, cols});
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                m.data[r * cols + c] = normal_at(l, j, r, c);
        return m;
    };

    WeightSet w;
    if (spec.kind == DepthKind::shallow) {
        w.layers.emplace_back();
        for (std::size_t j = 1; j <= spec.n_inputs; ++j)
            w.layers[0].push_back(fill(0, j, spec.channels[0], spec.rep_dim));
        w.output = fill(1, 1, spec.n_classes, spec.channels[0]);
        return w;
    }
    std::size_t positions = spec.n_inputs;
    for (std::size_t l = 0; l < L; ++l) {
        w.layers.emplace_back();
        for (std::size_t j = 1; j <= positions; ++j)
            w.layers[l].push_back(fill(l, j, spec.channels[l], spec.input_channels(l)));
        positions /= spec.pool_arity;
    }
    w.output = fill(L, 1, spec.n_classes, spec.channels[L - 1]);
    return w;
}

ConvACNetwork build_shallow_tn(const ConvACSpec& spec, const WeightSet& w) {
    spec.check();
    if (spec.kind != DepthKind::shallow)
        throw ValidationError("build_shallow_tn: spec is not shallow");
    const std::size_t n = spec.n_inputs;
    const std::size_t k = spec.channels[0];

    ConvACNetwork net;
    std::vector<int> a_nodes;
    for (std::size_t j = 0; j < n; ++j)
        a_nodes.push_back(net.tn.add_dense(w.layers[0][j],
                                           "A(" + std::to_string(j + 1) + ")"));
    for (std::size_t j = 0; j < n; ++j)
        net.input_edges.push_back(net.tn.add_open(a_nodes[j], 1, spec.rep_dim));

    const int delta = net.tn.add_delta(n + 1, k, "delta");
    const int g = net.tn.add_dense(w.output, "G");
    for (std::size_t j = 0; j < n; ++j)
        net.schedule.push_back(
            net.tn.connect(a_nodes[j], 0, delta, static_cast<int>(j), k));
    net.schedule.push_back(net.tn.connect(delta, static_cast<int>(n), g, 1, k));
    net.class_edge = net.tn.add_open(g, 0, spec.n_classes);
    return net;
}

ConvACNetwork build_deep_tn(const ConvACSpec& spec, const WeightSet& w) {
    spec.check();
    if (spec.kind != DepthKind::deep)
        throw ValidationError("build_deep_tn: spec is not deep");
    const std::size_t n = spec.n_inputs;
    const std::size_t L = spec.depth();
    const std::size_t p = spec.pool_arity;

    ConvACNetwork net;
    std::vector<int> level_nodes; // output-leg holders of the current level
    for (std::size_t j = 0; j < n; ++j)
        level_nodes.push_back(net.tn.add_dense(
            w.layers[0][j], "A(0," + std::to_string(j + 1) + ")"));
    for (std::size_t j = 0; j < n; ++j)
        net.input_edges.push_back(net.tn.add_open(level_nodes[j], 1, spec.rep_dim));

    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t groups = level_nodes.size() / p;
        std::vector<int> parents;
        for (std::size_t i = 0; i < groups; ++i) {
            const int delta = net.tn.add_delta(
                p + 1, spec.channels[l],
                "delta(" + std::to_string(l) + "," + std::to_string(i + 1) + ")");
            const bool top = (l + 1 == L);
            const int parent =
                top ? net.tn.add_dense(w.output, "G")
                    : net.tn.add_dense(w.layers[l + 1][i],
                                       "A(" + std::to_string(l + 1) + "," +
                                           std::to_string(i + 1) + ")");
            for (std::size_t c = 0; c < p; ++c)
                net.schedule.push_back(net.tn.connect(level_nodes[i * p + c], 0, delta,
                                                      static_cast<int>(c),
                                                      spec.channels[l]));
            net.schedule.push_back(
                net.tn.connect(delta, static_cast<int>(p), parent, 1, spec.channels[l]));
            parents.push_back(parent);
        }
        level_nodes = std::move(parents);
    }
    net.class_edge = net.tn.add_open(level_nodes.front(), 0, spec.n_classes);
    return net;
}

ConvACNetwork build_tn(const ConvACSpec& spec, const WeightSet& w) {
    return spec.kind == DepthKind::deep ? build_deep_tn(spec, w)
                                        : build_shallow_tn(spec, w);
}

namespace {

std::vector<double> mat_vec(const DenseTensor& m, const std::vector<double>& v) {
    if (m.shape[1] != v.size())
        throw ValidationError("forward: weight/activation dimension mismatch");
    std::vector<double> out(m.shape[0], 0.0);
    for (std::size_t r = 0; r < m.shape[0]; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m.shape[1]; ++c)
            acc += m.data[r * m.shape[1] + c] * v[c];
        out[r] = acc;
    }
    return out;
}

} // namespace

std::vector<double> forward(const ConvACSpec& spec, const WeightSet& w,
                            const RepresentationInput& x) {
    spec.check();
    if (x.x.size() != spec.n_inputs)
        throw ValidationError("forward: expected " + std::to_string(spec.n_inputs) +
                              " input vectors, got " + std::to_string(x.x.size()));
    for (const auto& v : x.x)
        if (v.size() != spec.rep_dim)
            throw ValidationError("forward: representation vectors must have length m");

    // Shallow networks pool globally: one conv level with window N.
    const std::size_t L = spec.kind == DepthKind::deep ? spec.depth() : 1;
    const std::size_t pool =
        spec.kind == DepthKind::deep ? spec.pool_arity : spec.n_inputs;

    std::vector<std::vector<double>> acts = x.x;
    for (std::size_t l = 0; l < L; ++l) {
        std::vector<std::vector<double>> pooled;
        for (std::size_t i = 0; i < acts.size() / pool; ++i) {
            std::vector<double> prod(spec.channels[l], 1.0);
            for (std::size_t c = 0; c < pool; ++c) {
                const std::vector<double> u = mat_vec(w.layers[l][i * pool + c],
                                                      acts[i * pool + c]);
                for (std::size_t d = 0; d < prod.size(); ++d) prod[d] *= u[d];
            }
            pooled.push_back(std::move(prod));
        }
        acts = std::move(pooled);
    }
    return mat_vec(w.output, acts.front());
}

DenseTensor weights_tensor(const ConvACSpec& spec, const WeightSet& w,
                           std::size_t y, std::size_t cap) {
    spec.check();
    if (y < 1 || y > spec.n_classes)
        throw ValidationError("weights_tensor: class index out of range");
    checked_num_entries(std::vector<std::size_t>(spec.n_inputs, spec.rep_dim), cap,
                        "weights_tensor");
    ConvACNetwork net = build_tn(spec, w);
    const TensorNetwork sliced = fix_open_edge(net.tn, net.class_edge, y - 1);
    ContractOptions opts;
    opts.schedule = net.schedule;
    opts.size_cap = cap;
    return contract(sliced, opts);
}

double score_inner_product(const DenseTensor& a, const RepresentationInput& x) {
    if (a.order() != x.x.size())
        throw ValidationError("score_inner_product: tensor order != number of inputs");
    for (std::size_t j = 0; j < x.x.size(); ++j)
        if (a.shape[j] != x.x[j].size())
            throw ValidationError("score_inner_product: mode " + std::to_string(j + 1) +
                                  " dimension mismatch");
    // fold the last mode against the last input vector, repeatedly
    std::vector<double> acc = a.data;
    for (std::size_t j = x.x.size(); j-- > 0;) {
        const std::vector<double>& v = x.x[j];
        std::vector<double> next(acc.size() / v.size(), 0.0);
        for (std::size_t i = 0; i < next.size(); ++i) {
            double s = 0.0;
            for (std::size_t d = 0; d < v.size(); ++d) s += acc[i * v.size() + d] * v[d];
            next[i] = s;
        }
        acc = std::move(next);
    }
    return acc.front();
}

} // namespace tnarch
