#include "tnarch/tensor.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>

namespace tnarch {

std::size_t default_size_cap() {
    static const std::size_t cap = [] {
        if (const char* env = std::getenv("TNARCH_SIZE_CAP")) {
            char* end = nullptr;
            const unsigned long long v = std::strtoull(env, &end, 10);
            if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
        }
        return static_cast<std::size_t>(100000000); // 1e8 entries
    }();
    return cap;
}

std::size_t checked_num_entries(const std::vector<std::size_t>& shape,
                                std::size_t cap, const std::string& what) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw ValidationError(what + ": zero mode dimension");
        if (n > cap / d) {
            std::ostringstream os;
            os << what << ": result size exceeds cap of " << cap << " entries";
            throw SizeLimitError(os.str());
        }
        n *= d;
    }
    return n;
}

DenseTensor::DenseTensor(std::vector<std::size_t> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (shape.empty()) throw ValidationError("DenseTensor: order must be >= 1");
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw ValidationError("DenseTensor: mode dimensions must be >= 1");
        n *= d;
    }
    if (n != data.size())
        throw ValidationError("DenseTensor: data length does not match shape product");
}

DenseTensor DenseTensor::zeros(std::vector<std::size_t> shape) {
    const std::size_t n = checked_num_entries(shape, default_size_cap(), "DenseTensor::zeros");
    return DenseTensor(std::move(shape), std::vector<double>(n, 0.0));
}

DenseTensor DenseTensor::scalar(double value) {
    return DenseTensor({1}, {value});
}

std::vector<std::size_t> DenseTensor::strides() const {
    std::vector<std::size_t> s(shape.size());
    std::size_t acc = 1;
    for (std::size_t i = shape.size(); i-- > 0;) {
        s[i] = acc;
        acc *= shape[i];
    }
    return s;
}

double& DenseTensor::at(const std::vector<std::size_t>& idx) {
    return data[std::inner_product(idx.begin(), idx.end(), strides().begin(),
                                   std::size_t{0})];
}

double DenseTensor::at(const std::vector<std::size_t>& idx) const {
    return data[std::inner_product(idx.begin(), idx.end(), strides().begin(),
                                   std::size_t{0})];
}

IndexPartition::IndexPartition(std::vector<std::size_t> rows_, std::vector<std::size_t> cols_)
    : rows(std::move(rows_)), cols(std::move(cols_)) {
    const std::size_t n = rows.size() + cols.size();
    std::vector<bool> seen(n + 1, false);
    for (const auto* side : {&rows, &cols}) {
        if (!std::is_sorted(side->begin(), side->end()))
            throw ValidationError("IndexPartition: sides must be sorted ascending");
        for (std::size_t m : *side) {
            if (m < 1 || m > n) throw ValidationError("IndexPartition: mode index out of range");
            if (seen[m]) throw ValidationError("IndexPartition: duplicated mode index");
            seen[m] = true;
        }
    }
}

IndexPartition IndexPartition::from_rows(const std::vector<std::size_t>& rows, std::size_t n) {
    std::vector<bool> in_rows(n + 1, false);
    for (std::size_t m : rows) {
        if (m < 1 || m > n) throw ValidationError("IndexPartition: mode index out of range");
        in_rows[m] = true;
    }
    std::vector<std::size_t> cols;
    for (std::size_t m = 1; m <= n; ++m)
        if (!in_rows[m]) cols.push_back(m);
    std::vector<std::size_t> sorted_rows = rows;
    std::sort(sorted_rows.begin(), sorted_rows.end());
    return IndexPartition(std::move(sorted_rows), std::move(cols));
}

DenseTensor tensor_product(const DenseTensor& a, const DenseTensor& b, std::size_t cap) {
    std::vector<std::size_t> shape = a.shape;
    shape.insert(shape.end(), b.shape.begin(), b.shape.end());
    checked_num_entries(shape, cap, "tensor_product");
    std::vector<double> out;
    out.reserve(a.size() * b.size());
    for (double x : a.data)
        for (double y : b.data) out.push_back(x * y);
    return DenseTensor(std::move(shape), std::move(out));
}

DenseTensor rank1_from_vectors(const std::vector<DenseTensor>& vs, std::size_t cap) {
    if (vs.empty()) throw ValidationError("rank1_from_vectors: empty vector list");
    for (const DenseTensor& v : vs)
        if (v.order() != 1)
            throw ValidationError("rank1_from_vectors: all factors must have order 1");
    DenseTensor out = vs.front();
    for (std::size_t j = 1; j < vs.size(); ++j) out = tensor_product(out, vs[j], cap);
    return out;
}

namespace {

// Per-mode flat strides into the matricization: mode i contributes to the
// row (if i in I) or column (if i in J) index in mixed-radix order over its
// side, so flat = row * n_cols + col decomposes into per-mode strides.
void matricization_strides(const std::vector<std::size_t>& shape, const IndexPartition& p,
                           std::vector<std::size_t>& strides,
                           std::size_t& n_rows, std::size_t& n_cols) {
    const std::size_t n = shape.size();
    if (p.rows.size() + p.cols.size() != n)
        throw ValidationError("matricize: partition does not cover all modes");
    std::vector<std::size_t> row_weight(n, 0), col_weight(n, 0);
    n_rows = 1;
    for (std::size_t t = p.rows.size(); t-- > 0;) {
        row_weight[p.rows[t] - 1] = n_rows;
        n_rows *= shape[p.rows[t] - 1];
    }
    n_cols = 1;
    for (std::size_t t = p.cols.size(); t-- > 0;) {
        col_weight[p.cols[t] - 1] = n_cols;
        n_cols *= shape[p.cols[t] - 1];
    }
    strides.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        strides[i] = row_weight[i] * n_cols + col_weight[i];
}

} // namespace

DenseTensor matricize(const DenseTensor& a, const IndexPartition& p) {
    std::vector<std::size_t> strides;
    std::size_t n_rows = 0, n_cols = 0;
    matricization_strides(a.shape, p, strides, n_rows, n_cols);

    std::vector<double> out(a.size());
    std::vector<std::size_t> idx(a.order(), 0);
    std::size_t pos = 0; // flat position in the matricization
    for (std::size_t f = 0; f < a.size(); ++f) {
        out[pos] = a.data[f];
        // odometer increment, last mode fastest
        for (std::size_t i = a.order(); i-- > 0;) {
            pos += strides[i];
            if (++idx[i] < a.shape[i]) break;
            pos -= strides[i] * a.shape[i];
            idx[i] = 0;
        }
    }
    return DenseTensor({n_rows, n_cols}, std::move(out));
}

DenseTensor dematricize(const DenseTensor& m, const IndexPartition& p,
                        const std::vector<std::size_t>& shape) {
    if (m.order() != 2) throw ValidationError("dematricize: input must have order 2");
    std::vector<std::size_t> strides;
    std::size_t n_rows = 0, n_cols = 0;
    matricization_strides(shape, p, strides, n_rows, n_cols);
    if (n_rows != m.shape[0] || n_cols != m.shape[1])
        throw ValidationError("dematricize: matrix shape inconsistent with partition");

    std::vector<double> out(m.size());
    std::vector<std::size_t> idx(shape.size(), 0);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < out.size(); ++f) {
        out[f] = m.data[pos];
        for (std::size_t i = shape.size(); i-- > 0;) {
            pos += strides[i];
            if (++idx[i] < shape[i]) break;
            pos -= strides[i] * shape[i];
            idx[i] = 0;
        }
    }
    return DenseTensor(shape, std::move(out));
}

} // namespace tnarch
