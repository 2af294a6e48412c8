#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tnarch/errors.hpp"

namespace tnarch {

// Order-N real tensor stored as a flat row-major array (last index fastest).
struct DenseTensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    DenseTensor() = default;
    DenseTensor(std::vector<std::size_t> shape_, std::vector<double> data_);

    // All-zero tensor of the given shape.
    static DenseTensor zeros(std::vector<std::size_t> shape);
    static DenseTensor scalar(double value);

    std::size_t order() const { return shape.size(); }
    std::size_t size() const { return data.size(); }

    // Entry access by multi-index (0-based, one index per mode).
    double& at(const std::vector<std::size_t>& idx);
    double at(const std::vector<std::size_t>& idx) const;

    // Row-major strides: flat = sum_i idx[i] * stride[i].
    std::vector<std::size_t> strides() const;
};

// Number of entries of a tensor with the given shape; throws SizeLimitError
// on multiplication overflow or when the count exceeds `cap`.
std::size_t checked_num_entries(const std::vector<std::size_t>& shape,
                                std::size_t cap, const std::string& what);

// Partition (I, J) of the mode set {1..N}; both lists sorted ascending,
// 1-based as in the matricization index formula.
struct IndexPartition {
    std::vector<std::size_t> rows; // I
    std::vector<std::size_t> cols; // J

    IndexPartition(std::vector<std::size_t> rows_, std::vector<std::size_t> cols_);

    // (I, J) with J = {1..n} \ I.
    static IndexPartition from_rows(const std::vector<std::size_t>& rows, std::size_t n);
};

// (A ⊗ B)_{d_1..d_{P+Q}} = A_{d_1..d_P} * B_{d_{P+1}..d_{P+Q}}.
DenseTensor tensor_product(const DenseTensor& a, const DenseTensor& b,
                           std::size_t cap = default_size_cap());

// Order-N tensor with entries prod_j v_j[d_j] from N order-1 tensors.
DenseTensor rank1_from_vectors(const std::vector<DenseTensor>& vs,
                               std::size_t cap = default_size_cap());

// Rearranges `a` into a (prod_{i in I} M_i) x (prod_{j in J} M_j) matrix.
// Entry (d_1..d_N) lands at row 1 + sum_t (d_{i_t}-1) prod_{t'>t} M_{i_t'}
// and the analogous column index, both returned 0-based in the result.
DenseTensor matricize(const DenseTensor& a, const IndexPartition& p);

// Inverse of matricize: rebuilds the order-N tensor from its matricization.
DenseTensor dematricize(const DenseTensor& m, const IndexPartition& p,
                        const std::vector<std::size_t>& shape);

} // namespace tnarch
