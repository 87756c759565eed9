// numkernel.hpp - dense Hermitian linear algebra and entropy primitives

#pragma once

#include "thermeas/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace thermeas {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermiticityTol = 1e-9;
inline constexpr double kClusterTol = 1e-8;
inline constexpr double kSupportTol = 1e-10;

namespace detail {

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

inline Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

// x ln x with the 0 ln 0 = 0 convention; tiny negative round-off is treated as zero.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

} // namespace detail

inline ComplexMatrix identity(std::size_t d) {
    return ComplexMatrix::Identity(detail::idx(d), detail::idx(d));
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Complex trace(const ComplexMatrix& a) { return a.trace(); }

inline void require_square(const ComplexMatrix& a, std::string_view what) {
    if (a.rows() == 0 || a.rows() != a.cols())
        throw ValidationError(std::string(what) + ": expected a non-empty square matrix, got " +
                              std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
}

inline double hermiticity_defect(const ComplexMatrix& a) { return (a - a.adjoint()).norm(); }

// Returns (A + A^dagger)/2 when ||A - A^dagger||_F <= tol; larger defects are errors.
inline ComplexMatrix hermitize(const ComplexMatrix& a, std::string_view what,
                               double tol = kHermiticityTol) {
    require_square(a, what);
    const double defect = hermiticity_defect(a);
    if (!(defect <= tol))
        throw ValidationError(std::string(what) + ": not Hermitian (||A - A^dagger||_F = " +
                              detail::sci(defect) + " > " + detail::sci(tol) + ")");
    return (a + a.adjoint()) * 0.5;
}

// Raw eigenpairs of a Hermitian matrix, eigenvalues ascending.
struct EigenPairs {
    RealVector values;
    ComplexMatrix vectors;
};

inline EigenPairs eigh(const ComplexMatrix& a, std::string_view what = "matrix") {
    const ComplexMatrix h = hermitize(a, what);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
    if (solver.info() != Eigen::Success)
        throw ValidationError(std::string(what) + ": eigendecomposition failed");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

// Spectral measure of a Hermitian matrix: distinct eigenvalues (ascending) with
// their projectors. `bases` holds an orthonormal column basis of each eigenspace.
struct SpectralDecomposition {
    std::vector<double> eigenvalues;
    std::vector<ComplexMatrix> projectors;
    std::vector<std::size_t> multiplicities;
    std::vector<ComplexMatrix> bases;

    std::size_t size() const { return eigenvalues.size(); }
    bool nondegenerate() const {
        return std::all_of(multiplicities.begin(), multiplicities.end(),
                           [](std::size_t m) { return m == 1; });
    }
    ComplexMatrix reconstruct() const {
        ComplexMatrix out = ComplexMatrix::Zero(projectors.front().rows(), projectors.front().cols());
        for (std::size_t n = 0; n < size(); ++n) out += eigenvalues[n] * projectors[n];
        return out;
    }
};

// Eigenvalues closer than cluster_tol * max(1, spectral range) to their
// sorted predecessor are merged into one eigenspace.
inline SpectralDecomposition eig_hermitian(const ComplexMatrix& a, double cluster_tol = kClusterTol) {
    const EigenPairs eig = eigh(a, "eig_hermitian");
    const Eigen::Index d = eig.values.size();
    const double range = eig.values(d - 1) - eig.values(0);
    const double tol = cluster_tol * std::max(1.0, range);

    SpectralDecomposition out;
    Eigen::Index start = 0;
    for (Eigen::Index i = 1; i <= d; ++i) {
        if (i < d && eig.values(i) - eig.values(i - 1) <= tol) continue;
        const Eigen::Index count = i - start;
        ComplexMatrix basis = eig.vectors.middleCols(start, count);
        out.eigenvalues.push_back(eig.values.segment(start, count).mean());
        out.projectors.push_back(basis * basis.adjoint());
        out.multiplicities.push_back(static_cast<std::size_t>(count));
        out.bases.push_back(std::move(basis));
        start = i;
    }
    return out;
}

// f applied to the spectrum of a Hermitian matrix.
template <class F>
ComplexMatrix hermitian_function(const ComplexMatrix& a, F&& f, std::string_view what = "matrix") {
    const EigenPairs eig = eigh(a, what);
    RealVector mapped = eig.values.unaryExpr([&](double v) { return static_cast<double>(f(v)); });
    return eig.vectors * mapped.asDiagonal() * eig.vectors.adjoint();
}

// Square root of a positive semidefinite matrix; round-off negatives are clamped to zero.
inline ComplexMatrix psd_sqrt(const ComplexMatrix& a) {
    return hermitian_function(a, [](double v) { return v > 0.0 ? std::sqrt(v) : 0.0; }, "psd_sqrt");
}

inline ComplexMatrix matrix_power(const ComplexMatrix& a, unsigned k) {
    ComplexMatrix out = ComplexMatrix::Identity(a.rows(), a.cols());
    for (unsigned i = 0; i < k; ++i) out = out * a;
    return out;
}

// e^{-itH} for Hermitian H.
inline ComplexMatrix time_evolution(const ComplexMatrix& h, double t) {
    const EigenPairs eig = eigh(h, "time_evolution");
    ComplexVector phases(eig.values.size());
    for (Eigen::Index i = 0; i < eig.values.size(); ++i)
        phases(i) = std::exp(Complex(0.0, -t * eig.values(i)));
    return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

enum class Factor { First, Second };

// Partial trace on C^{d1} (x) C^{d2}, keeping the requested factor.
inline ComplexMatrix partial_trace(const ComplexMatrix& m, std::size_t d1, std::size_t d2, Factor keep) {
    const auto n = detail::idx(d1 * d2);
    if (d1 == 0 || d2 == 0 || m.rows() != n || m.cols() != n)
        throw ValidationError("partial_trace: matrix is " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()) + ", expected " + std::to_string(d1 * d2) +
                              " square for dims (" + std::to_string(d1) + ", " + std::to_string(d2) + ")");
    const auto a = detail::idx(d1);
    const auto b = detail::idx(d2);
    if (keep == Factor::First) {
        ComplexMatrix out = ComplexMatrix::Zero(a, a);
        for (Eigen::Index i = 0; i < a; ++i)
            for (Eigen::Index j = 0; j < a; ++j)
                out(i, j) = m.block(i * b, j * b, b, b).trace();
        return out;
    }
    ComplexMatrix out = ComplexMatrix::Zero(b, b);
    for (Eigen::Index i = 0; i < a; ++i) out += m.block(i * b, i * b, b, b);
    return out;
}

inline double commutator_defect(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
        throw ValidationError("commutator_defect: dimension mismatch (" + std::to_string(a.rows()) + "x" +
                              std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                              std::to_string(b.cols()) + ")");
    return (a * b - b * a).norm();
}

// Throws unless m is a density operator within tol; returns its Hermitian part.
inline ComplexMatrix check_density(const ComplexMatrix& m, double tol, std::string_view what = "state") {
    ComplexMatrix h = hermitize(m, what, tol);
    const double tr = h.trace().real();
    if (!(std::abs(tr - 1.0) <= tol))
        throw ValidationError(std::string(what) + ": trace " + detail::sci(tr) + " differs from 1 by more than " +
                              detail::sci(tol));
    const double low = eigh(h, what).values(0);
    if (!(low >= -tol))
        throw ValidationError(std::string(what) + ": negative eigenvalue " + detail::sci(low));
    return h;
}

namespace detail {

inline double entropy_of_spectrum(const RealVector& values) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) s -= xlogx(values(i));
    return s;
}

// Unvalidated kernels; callers guarantee (approximate) positivity.
inline double entropy_unchecked(const ComplexMatrix& rho) {
    return entropy_of_spectrum(Eigen::SelfAdjointEigenSolver<ComplexMatrix>((rho + rho.adjoint()) * 0.5).eigenvalues());
}

} // namespace detail

// Quantum relative entropy S(rho || sigma) in nats; `infinite` when supp(rho) is
// not contained in supp(sigma).
struct RelativeEntropy {
    double value = 0.0;
    bool infinite = false;

    bool finite() const { return !infinite; }
};

namespace detail {

inline RelativeEntropy relative_entropy_unchecked(const ComplexMatrix& rho, const ComplexMatrix& sigma,
                                                  double support_tol) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> sig((sigma + sigma.adjoint()) * 0.5);
    const RealVector& mu = sig.eigenvalues();
    const ComplexMatrix& w = sig.eigenvectors();
    const ComplexMatrix rho_h = (rho + rho.adjoint()) * 0.5;
    double cross = 0.0;
    double leak = 0.0;
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
        const double weight = (w.col(j).adjoint() * rho_h * w.col(j))(0, 0).real();
        if (mu(j) <= support_tol)
            leak += weight;
        else
            cross += weight * std::log(mu(j));
    }
    if (leak > support_tol) return {std::numeric_limits<double>::infinity(), true};
    return {-entropy_unchecked(rho_h) - cross, false};
}

} // namespace detail

inline double von_neumann_entropy(const ComplexMatrix& rho, double tol = kHermiticityTol) {
    return detail::entropy_of_spectrum(eigh(check_density(rho, tol, "von_neumann_entropy")).values);
}

inline RelativeEntropy relative_entropy(const ComplexMatrix& rho, const ComplexMatrix& sigma,
                                        double support_tol = kSupportTol, double tol = kHermiticityTol) {
    if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
        throw ValidationError("relative_entropy: dimension mismatch (" + std::to_string(rho.rows()) + " vs " +
                              std::to_string(sigma.rows()) + ")");
    return detail::relative_entropy_unchecked(check_density(rho, tol, "relative_entropy(rho)"),
                                              check_density(sigma, tol, "relative_entropy(sigma)"), support_tol);
}

// Classical relative entropy sum_x p ln(p/q); infinite when p > 0 where q == 0.
inline RelativeEntropy classical_relative_entropy(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw ValidationError("classical_relative_entropy: length mismatch");
    double d = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) {
        if (p[x] <= 0.0) continue;
        if (q[x] <= 0.0) return {std::numeric_limits<double>::infinity(), true};
        d += p[x] * std::log(p[x] / q[x]);
    }
    return {d, false};
}

inline double shannon_entropy(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p) h -= detail::xlogx(v);
    return h;
}

} // namespace thermeas
