// random.hpp - seeded generators for unitaries, states and commuting observables

#pragma once

#include "thermeas/qobjects.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace thermeas {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream seed for (seed, stream) pairs.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline ComplexMatrix ginibre(std::size_t rows, std::size_t cols, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    ComplexMatrix g(detail::idx(rows), detail::idx(cols));
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j) {
            const double re = n(rng);
            const double im = n(rng);
            g(i, j) = Complex(re, im);
        }
    return g;
}

// Haar-distributed unitary via QR of a Ginibre matrix with the phases of diag(R) removed.
inline ComplexMatrix haar_unitary(std::size_t d, Rng& rng) {
    const ComplexMatrix g = ginibre(d, d, rng);
    Eigen::HouseholderQR<ComplexMatrix> qr(g);
    ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(g.rows(), g.cols());
    const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
        const double mag = std::abs(r(i, i));
        if (mag > 0.0) q.col(i) *= r(i, i) / mag;
    }
    return q;
}

// Induced-measure random density matrix of the given rank (0 = full rank).
inline State random_state(std::size_t d, Rng& rng, std::size_t rank = 0) {
    const ComplexMatrix g = ginibre(d, rank == 0 ? d : rank, rng);
    const ComplexMatrix rho = g * g.adjoint();
    return State(rho / rho.trace().real());
}

inline State random_pure_state(std::size_t d, Rng& rng) { return random_state(d, rng, 1); }

inline ComplexMatrix random_hermitian(std::size_t d, Rng& rng) {
    const ComplexMatrix g = ginibre(d, d, rng);
    return (g + g.adjoint()) * 0.5;
}

// Uniform point on the probability simplex.
inline std::vector<double> random_simplex(std::size_t n, Rng& rng) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& v : w) total += (v = e(rng));
    for (auto& v : w) v /= total;
    return w;
}

inline ComplexMatrix random_diagonal_hamiltonian(std::size_t d, Rng& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(0.0, scale);
    ComplexMatrix h = ComplexMatrix::Zero(detail::idx(d), detail::idx(d));
    for (Eigen::Index i = 0; i < h.rows(); ++i) h(i, i) = u(rng);
    return h;
}

// Random POVM with n outcomes whose effects commute with H: within every
// eigenspace of H, effects are S^{-1/2} A_x S^{-1/2} with A_x Wishart and S = sum A_x.
inline Observable random_commuting_observable(const ComplexMatrix& h, std::size_t n, Rng& rng,
                                              const std::string& prefix = "x") {
    const auto sd = eig_hermitian(h);
    const auto d = h.rows();
    std::vector<ComplexMatrix> eff(n, ComplexMatrix::Zero(d, d));
    for (const auto& basis : sd.bases) {
        const auto r = static_cast<std::size_t>(basis.cols());
        std::vector<ComplexMatrix> blocks;
        ComplexMatrix sum = ComplexMatrix::Zero(basis.cols(), basis.cols());
        for (std::size_t x = 0; x < n; ++x) {
            const ComplexMatrix g = ginibre(r, r, rng);
            blocks.push_back(g * g.adjoint());
            sum += blocks.back();
        }
        const ComplexMatrix inv_sqrt = hermitian_function(sum, [](double v) { return 1.0 / std::sqrt(v); });
        for (std::size_t x = 0; x < n; ++x) {
            const ComplexMatrix b = inv_sqrt * blocks[x] * inv_sqrt;
            eff[x] += basis * ((b + b.adjoint()) * 0.5) * basis.adjoint();
        }
    }
    return Observable(default_labels(n, prefix), std::move(eff));
}

} // namespace thermeas
