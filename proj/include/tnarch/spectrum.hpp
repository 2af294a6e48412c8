#pragma once

#include <vector>

#include "tnarch/tensor.hpp"

namespace tnarch {

// Singular values lambda_1 >= ... >= lambda_r >= 0 of a matricization.
struct SingularSpectrum {
    std::vector<double> values;
};

constexpr double kDefaultRankTol = 1e-7;

// Entanglement measures of a state whose Schmidt coefficients are the
// singular values of the matricized weights tensor. Entropy is reported in
// nats over the squared spectrum normalized to sum 1; the geometric measure
// uses the raw spectrum. tolerance_used records the relative rank threshold.
struct EntanglementReport {
    double entropy = 0.0;
    double geometric = 0.0;
    std::size_t schmidt = 0;
    double tolerance_used = kDefaultRankTol;
};

// Full list of min(rows, cols) singular values, non-increasing.
SingularSpectrum svd_spectrum(const DenseTensor& m);

// Same decomposition carried out in extended (long double) precision. Rank
// decisions near the double-precision noise floor need this: genuine
// singular values of deep weight tensors reach below 1e-14 relative, where a
// double SVD cannot tell them from zeros.
SingularSpectrum svd_spectrum_precise(const DenseTensor& m);

// Count of values above tol * lambda_1 (0 when lambda_1 == 0).
std::size_t numerical_rank(const SingularSpectrum& s, double tol = kDefaultRankTol);

EntanglementReport entanglement_measures(const SingularSpectrum& s,
                                         double tol = kDefaultRankTol);

} // namespace tnarch
