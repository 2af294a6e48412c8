#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tnarch/network.hpp"
#include "tnarch/tensor.hpp"

namespace tnarch {

enum class DepthKind { shallow, deep };

// Architecture of a convolutional arithmetic circuit: N inputs carrying
// M-dimensional representation vectors, per-layer channel counts
// r_0..r_{L-1}, Y output classes, and the product-pooling window size.
// Deep networks require N = pool_arity^L; shallow networks have a single
// hidden width channels[0] = K and pool globally.
struct ConvACSpec {
    std::size_t n_inputs = 0;      // N
    std::size_t rep_dim = 0;       // M
    std::vector<std::size_t> channels; // r_0..r_{L-1}
    std::size_t n_classes = 1;     // Y
    std::size_t pool_arity = 2;
    DepthKind kind = DepthKind::deep;

    std::size_t depth() const { return channels.size(); } // L
    // channel count feeding layer l: r_{l-1}, with r_{-1} := M
    std::size_t input_channels(std::size_t l) const {
        return l == 0 ? rep_dim : channels[l - 1];
    }
    void check() const; // throws ValidationError on inconsistency

    std::string to_json(int indent = -1) const;
    static ConvACSpec from_json(const std::string& text);
};

// All convolutional weight matrices. layers[l][j-1] is A^(l,j) of shape
// r_l x r_{l-1}; output is G of shape Y x r_{L-1}, holding the class
// weight vectors in its rows.
struct WeightSet {
    std::vector<std::vector<DenseTensor>> layers;
    DenseTensor output;

    std::string to_json(int indent = -1) const;
    static WeightSet from_json(const std::string& text);
};

// Values of the representation functions at the N inputs: x[j-1] is the
// M-vector (f_1(x_j), ..., f_M(x_j)). The functions themselves are the
// caller's business.
struct RepresentationInput {
    std::vector<std::vector<double>> x;

    std::string to_json(int indent = -1) const;
    static RepresentationInput from_json(const std::string& text);
};

// I.i.d. standard-normal weights from a counter-based stream keyed by
// (seed, l, j, row, col); identical for identical arguments.
WeightSet random_weights(const ConvACSpec& spec, std::uint64_t seed);

// A ConvAC weights tensor as a tensor network plus bookkeeping: a canonical
// bottom-up contraction schedule, the N input open edges (in input order)
// and the class open edge (always last in open_order).
struct ConvACNetwork {
    TensorNetwork tn;
    std::vector<int> schedule;
    std::vector<int> input_edges;
    int class_edge = -1;
};

ConvACNetwork build_shallow_tn(const ConvACSpec& spec, const WeightSet& w);
ConvACNetwork build_deep_tn(const ConvACSpec& spec, const WeightSet& w);
ConvACNetwork build_tn(const ConvACSpec& spec, const WeightSet& w);

// Score vector h(x) via the conv -> product-pool recursion.
std::vector<double> forward(const ConvACSpec& spec, const WeightSet& w,
                            const RepresentationInput& x);

// The order-N convolutional weights tensor of class y (1-based), obtained by
// contracting the builder network with the class edge fixed.
DenseTensor weights_tensor(const ConvACSpec& spec, const WeightSet& w,
                           std::size_t y = 1,
                           std::size_t cap = default_size_cap());

// <A, x1 (x) ... (x) xN>; equals forward(spec, w, x)[y-1] when `a` is the
// class-y weights tensor.
double score_inner_product(const DenseTensor& a, const RepresentationInput& x);

} // namespace tnarch
