#include "tnarch/spectrum.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>

namespace tnarch {

using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

SingularSpectrum svd_spectrum(const DenseTensor& m) {
    if (m.order() != 2) throw ValidationError("svd_spectrum: input must have order 2");
    for (double x : m.data)
        if (!std::isfinite(x))
            throw ValidationError("svd_spectrum: non-finite entry");
    Eigen::Map<const RowMatrixXd> mat(m.data.data(),
                                      static_cast<Eigen::Index>(m.shape[0]),
                                      static_cast<Eigen::Index>(m.shape[1]));
    Eigen::BDCSVD<Eigen::MatrixXd> svd(mat); // singular values only
    SingularSpectrum s;
    s.values.assign(svd.singularValues().data(),
                    svd.singularValues().data() + svd.singularValues().size());
    return s;
}

SingularSpectrum svd_spectrum_precise(const DenseTensor& m) {
    if (m.order() != 2) throw ValidationError("svd_spectrum: input must have order 2");
    for (double x : m.data)
        if (!std::isfinite(x))
            throw ValidationError("svd_spectrum: non-finite entry");
    using MatLD = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    MatLD mat(static_cast<Eigen::Index>(m.shape[0]),
              static_cast<Eigen::Index>(m.shape[1]));
    for (std::size_t r = 0; r < m.shape[0]; ++r)
        for (std::size_t c = 0; c < m.shape[1]; ++c)
            mat(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                static_cast<long double>(m.data[r * m.shape[1] + c]);
    Eigen::BDCSVD<MatLD> svd(mat);
    SingularSpectrum s;
    s.values.reserve(static_cast<std::size_t>(svd.singularValues().size()));
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        s.values.push_back(static_cast<double>(svd.singularValues()[i]));
    return s;
}

std::size_t numerical_rank(const SingularSpectrum& s, double tol) {
    if (tol <= 0.0) throw ValidationError("numerical_rank: tol must be positive");
    if (s.values.empty() || s.values.front() <= 0.0) return 0;
    const double cutoff = tol * s.values.front();
    std::size_t r = 0;
    while (r < s.values.size() && s.values[r] > cutoff) ++r;
    return r;
}

EntanglementReport entanglement_measures(const SingularSpectrum& s, double tol) {
    if (tol <= 0.0) throw ValidationError("entanglement_measures: tol must be positive");
    if (s.values.empty())
        throw ValidationError("entanglement_measures: empty spectrum");

    double sum_sq = 0.0;
    for (double v : s.values) sum_sq += v * v;
    if (sum_sq <= 0.0)
        throw ValidationError("entanglement_measures: all-zero spectrum has no defined state");

    EntanglementReport rep;
    rep.tolerance_used = tol;
    rep.schmidt = numerical_rank(s, tol);

    // S = -sum p ln p over p = |lambda|^2 / sum |lambda|^2, with 0 ln 0 := 0.
    double entropy = 0.0;
    for (double v : s.values) {
        const double p = (v * v) / sum_sq;
        if (p > 0.0) entropy -= p * std::log(p);
    }
    rep.entropy = std::max(0.0, entropy);

    const double top = s.values.front() * s.values.front();
    rep.geometric = std::sqrt(std::max(0.0, 1.0 - top / sum_sq));
    return rep;
}

} // namespace tnarch
