#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "varicurate/embedset.hpp"
#include "varicurate/error.hpp"

namespace varicurate {

/// Row-major dense matrix used for batches that need double precision
/// (gradients, finite differences, sampler latents).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct VendiOptions {
    /// Eigenvalues closer than this are treated as repeated.
    double degenerate_gap = 1e-9;
    /// When false, a repeated eigenvalue in the spectrum raises a numeric error.
    bool allow_degenerate = true;
};

struct VendiResult {
    double score = 1.0;
    std::vector<double> normalized_eigenvalues;  // non-increasing, sum 1
    double loss = -1.0;                          // -score
    std::optional<Matrix> gradient;              // d loss / d rows, same shape as the input
    bool degenerate_spectrum = false;
    double min_eigen_gap = std::numeric_limits<double>::infinity();
};

/// exp of the Shannon entropy of a normalized spectrum, with 0 log 0 = 0.
inline double exp_entropy(const std::vector<double>& normalized) {
    double h = 0.0;
    for (double p : normalized) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return std::exp(h);
}

namespace detail {

struct Spectrum {
    Eigen::VectorXd eigenvalues;   // ascending, clamped at 0
    Eigen::MatrixXd eigenvectors;  // columns
    double total = 0.0;
};

inline Matrix unit_rows(const Matrix& rows, Eigen::VectorXd* norms) {
    Matrix unit(rows.rows(), rows.cols());
    norms->resize(rows.rows());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const double n = rows.row(i).norm();
        if (!(n > 0.0) || !std::isfinite(n)) {
            fail(ErrorKind::Data, "degenerate embedding: row " + std::to_string(i) + " has norm " + std::to_string(n));
        }
        (*norms)(i) = n;
        unit.row(i) = rows.row(i) / n;
    }
    return unit;
}

inline Spectrum cosine_spectrum(const Matrix& unit) {
    Eigen::MatrixXd kernel = unit * unit.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(kernel);
    if (solver.info() != Eigen::Success) fail(ErrorKind::Numeric, "eigendecomposition of the kernel matrix failed");
    Spectrum s;
    s.eigenvalues = solver.eigenvalues().cwiseMax(0.0);
    s.eigenvectors = solver.eigenvectors();
    s.total = s.eigenvalues.sum();
    if (!(s.total > 0.0)) fail(ErrorKind::Numeric, "kernel matrix has zero trace");
    return s;
}

inline VendiResult summarize(const Spectrum& s, const VendiOptions& opts) {
    VendiResult out;
    const auto n = s.eigenvalues.size();
    out.normalized_eigenvalues.resize(static_cast<std::size_t>(n));
    for (Eigen::Index p = 0; p < n; ++p) {
        out.normalized_eigenvalues[static_cast<std::size_t>(n - 1 - p)] = s.eigenvalues(p) / s.total;
    }
    out.score = exp_entropy(out.normalized_eigenvalues);
    out.loss = -out.score;

    // Spacing among the eigenvalues that carry mass; the null cluster of a
    // rank-deficient kernel does not enter the gradient.
    const double null_level = 1e-10 * s.total;
    for (Eigen::Index p = 1; p < n; ++p) {
        if (s.eigenvalues(p - 1) > null_level) {
            out.min_eigen_gap = std::min(out.min_eigen_gap, s.eigenvalues(p) - s.eigenvalues(p - 1));
        }
    }
    out.degenerate_spectrum = out.min_eigen_gap < opts.degenerate_gap;
    return out;
}

}  // namespace detail

/// Vendi score of a batch under the cosine kernel. Rows need not be
/// normalized; cosine similarity normalizes them.
inline VendiResult vendi_score(const Matrix& rows, const VendiOptions& opts = {}) {
    if (rows.rows() == 0) fail(ErrorKind::Parameter, "Vendi score of an empty batch is undefined");
    Eigen::VectorXd norms;
    auto spectrum = detail::cosine_spectrum(detail::unit_rows(rows, &norms));
    return detail::summarize(spectrum, opts);
}

/// Vendi loss (-score) and its gradient with respect to the raw rows,
/// including the Jacobian of row normalization.
///
/// With H the entropy of the normalized spectrum and S the eigenvalue sum,
/// d VS / d lambda_p = VS (-log lambda_p/S - H) / S, and the gradient in the
/// kernel is sum_p (d VS / d lambda_p) v_p v_p^T, a spectral matrix function
/// that stays well defined when eigenvalues repeat. Null eigenvalues of a
/// rank-deficient kernel contribute nothing: their eigenvectors are
/// orthogonal to every unit row.
inline VendiResult vendi_loss_grad(const Matrix& rows, const VendiOptions& opts = {}) {
    if (rows.rows() == 0) fail(ErrorKind::Parameter, "Vendi score of an empty batch is undefined");
    Eigen::VectorXd norms;
    const Matrix unit = detail::unit_rows(rows, &norms);
    const auto spectrum = detail::cosine_spectrum(unit);
    VendiResult out = detail::summarize(spectrum, opts);
    if (out.degenerate_spectrum && !opts.allow_degenerate) {
        fail(ErrorKind::Numeric, "degenerate kernel spectrum: minimum eigenvalue gap " + std::to_string(out.min_eigen_gap) +
                                     " below " + std::to_string(opts.degenerate_gap));
    }

    const double vs = out.score;
    const double entropy = std::log(vs);
    const double null_level = 1e-10 * spectrum.total;
    Eigen::VectorXd weight = Eigen::VectorXd::Zero(spectrum.eigenvalues.size());
    for (Eigen::Index p = 0; p < weight.size(); ++p) {
        const double lambda = spectrum.eigenvalues(p);
        if (lambda <= null_level) continue;
        const double dvs = vs * (-std::log(lambda / spectrum.total) - entropy) / spectrum.total;
        weight(p) = -dvs;  // loss = -VS
    }
    const Eigen::MatrixXd& v = spectrum.eigenvectors;
    const Eigen::MatrixXd dloss_dkernel = v * weight.asDiagonal() * v.transpose();
    Matrix grad_unit = 2.0 * dloss_dkernel * unit;

    Matrix grad(rows.rows(), rows.cols());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const auto u = unit.row(i);
        const double radial = grad_unit.row(i).dot(u);
        grad.row(i) = (grad_unit.row(i) - radial * u) / norms(i);
    }
    out.gradient = std::move(grad);
    return out;
}

inline Matrix to_matrix(const EmbeddingSet& set) {
    Matrix m(static_cast<Eigen::Index>(set.size()), static_cast<Eigen::Index>(set.dim()));
    for (std::size_t i = 0; i < set.size(); ++i) {
        auto r = set.row(i);
        for (std::size_t j = 0; j < set.dim(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
    }
    return m;
}

inline VendiResult vendi_score(const EmbeddingSet& batch, const VendiOptions& opts = {}) {
    if (batch.empty()) fail(ErrorKind::Parameter, "Vendi score of an empty batch is undefined");
    require_normalized(batch, "vendi_score");
    return vendi_score(to_matrix(batch), opts);
}

inline VendiResult vendi_loss_grad(const EmbeddingSet& batch, const VendiOptions& opts = {}) {
    if (batch.empty()) fail(ErrorKind::Parameter, "Vendi score of an empty batch is undefined");
    require_normalized(batch, "vendi_loss_grad");
    return vendi_loss_grad(to_matrix(batch), opts);
}

}  // namespace varicurate
