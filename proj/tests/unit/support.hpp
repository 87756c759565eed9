// Shared fixtures for the unit tests.

#pragma once

#include "thermeas/thermeas.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

namespace testing_support {

using namespace thermeas;
using namespace std::complex_literals;

inline ComplexMatrix mat(std::initializer_list<std::initializer_list<Complex>> rows) {
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = static_cast<Eigen::Index>(rows.begin()->size());
    ComplexMatrix m(r, c);
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        Eigen::Index j = 0;
        for (const auto& v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

inline ComplexMatrix diag(std::initializer_list<double> v) {
    ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        m(i, i) = x;
        ++i;
    }
    return m;
}

inline ComplexMatrix pauli_x() { return mat({{0, 1}, {1, 0}}); }
inline ComplexMatrix pauli_y() { return mat({{0, -1i}, {1i, 0}}); }
inline ComplexMatrix pauli_z() { return mat({{1, 0}, {0, -1}}); }

inline ComplexVector ket(std::size_t d, std::size_t i) {
    ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(d));
    v(static_cast<Eigen::Index>(i)) = 1.0;
    return v;
}

inline ComplexMatrix proj(const ComplexVector& v) { return v * v.adjoint(); }

inline ComplexVector plus() { return (ket(2, 0) + ket(2, 1)) / std::sqrt(2.0); }
inline ComplexVector minus() { return (ket(2, 0) - ket(2, 1)) / std::sqrt(2.0); }

inline Observable x_basis() { return Observable({"+", "-"}, {proj(plus()), proj(minus())}); }

inline Observable trivial_observable(std::size_t d) {
    return Observable({"a", "b"}, {identity(d) * 0.5, identity(d) * 0.5});
}

inline double dist(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).norm(); }

// Resonant pair: H_S = H_A = omega * diag(0, 1, ..., d-1).
inline ComplexMatrix ladder(std::size_t d, double omega = 1.0) {
    ComplexMatrix h = ComplexMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = omega * double(i);
    return h;
}

// A scheme with the identity interaction: the probe is left alone.
inline MeasurementScheme idle_scheme(const ComplexMatrix& hs, const ComplexMatrix& ha, double beta) {
    return MeasurementScheme(hs, ha, beta, identity_channel(static_cast<std::size_t>(hs.rows() * ha.rows())),
                             spectral_measure(ha));
}

} // namespace testing_support
