// schemes.hpp - measurement schemes, thermodynamic freeness and the instruments they induce

#pragma once

#include "thermeas/qobjects.hpp"
#include "thermeas/random.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace thermeas {

inline constexpr double kTheoremTol = 1e-8;
inline constexpr unsigned kDefaultMaxMoment = 4;

// A system coupled to a probe prepared in its Gibbs state, correlated by an
// interaction channel on system (x) probe and read out by a pointer observable.
// The probe state is always gibbs_state(H_A, beta).
class MeasurementScheme {
public:
    MeasurementScheme(const ComplexMatrix& system_hamiltonian, const ComplexMatrix& probe_hamiltonian, double beta,
                      KrausChannel interaction, Observable pointer)
        : h_s_(hermitize(system_hamiltonian, "scheme system Hamiltonian")),
          h_a_(hermitize(probe_hamiltonian, "scheme probe Hamiltonian")), beta_(beta),
          interaction_(std::move(interaction)), pointer_(std::move(pointer)), probe_state_(gibbs_state(h_a_, beta)) {
        const std::size_t n = system_dim() * probe_dim();
        if (interaction_.in_dim() != n || interaction_.out_dim() != n)
            throw ValidationError("scheme: interaction acts on dimension " + std::to_string(interaction_.in_dim()) +
                                  ", expected d_S*d_A = " + std::to_string(n));
        if (pointer_.dim() != probe_dim())
            throw ValidationError("scheme: pointer dimension " + std::to_string(pointer_.dim()) +
                                  " differs from probe dimension " + std::to_string(probe_dim()));
    }

    const ComplexMatrix& system_hamiltonian() const { return h_s_; }
    const ComplexMatrix& probe_hamiltonian() const { return h_a_; }
    double beta() const { return beta_; }
    const KrausChannel& interaction() const { return interaction_; }
    const Observable& pointer() const { return pointer_; }
    const State& probe_state() const { return probe_state_; }
    std::size_t system_dim() const { return static_cast<std::size_t>(h_s_.rows()); }
    std::size_t probe_dim() const { return static_cast<std::size_t>(h_a_.rows()); }

    // H = H_S (x) 1 + 1 (x) H_A
    ComplexMatrix total_hamiltonian() const {
        return kron(h_s_, identity(probe_dim())) + kron(identity(system_dim()), h_a_);
    }

private:
    ComplexMatrix h_s_;
    ComplexMatrix h_a_;
    double beta_;
    KrausChannel interaction_;
    Observable pointer_;
    State probe_state_;
};

// ||Phi^*(H^k) - H^k||_F
inline double energy_moment_defect(const KrausChannel& ch, const ComplexMatrix& h, unsigned k) {
    if (ch.in_dim() != ch.out_dim() || static_cast<std::size_t>(h.rows()) != ch.in_dim() || h.rows() != h.cols())
        throw ValidationError("energy_moment_defect: Hamiltonian dimension " + std::to_string(h.rows()) +
                              " does not match channel dimension " + std::to_string(ch.in_dim()));
    const ComplexMatrix hk = matrix_power(h, k);
    return (ch.apply_dual(hk) - hk).norm();
}

struct FreeSchemeReport {
    bool gibbs_probe_ok = true;
    double bistochastic_defect = 0.0;
    std::vector<double> energy_conservation_defects; // index k-1 holds moment k
    double yanase_defect = 0.0;
    double tolerance = kTheoremTol;
    bool verdict = false;
};

inline FreeSchemeReport validate_free_scheme(const MeasurementScheme& scheme, double tol = kTheoremTol,
                                             unsigned max_moment = kDefaultMaxMoment) {
    FreeSchemeReport r;
    r.tolerance = tol;
    const auto bi = is_bistochastic(scheme.interaction(), tol);
    r.bistochastic_defect = std::max(bi.trace_defect, bi.unital_defect);
    const ComplexMatrix h = scheme.total_hamiltonian();
    for (unsigned k = 1; k <= std::max(1u, max_moment); ++k)
        r.energy_conservation_defects.push_back(energy_moment_defect(scheme.interaction(), h, k));
    for (const auto& z : scheme.pointer().effects())
        r.yanase_defect = std::max(r.yanase_defect, commutator_defect(z, scheme.probe_hamiltonian()));
    r.verdict = r.bistochastic_defect <= tol && r.yanase_defect <= tol;
    for (double d : r.energy_conservation_defects) r.verdict = r.verdict && d <= tol;
    return r;
}

// I_x(rho) = tr_A[(1 (x) Z_x) E(rho (x) xi)], in Kraus form
//   M = sqrt(q_j) (1 (x) <a| sqrt(Z_x)) K (1 (x) |j>)
// with xi = sum_j q_j |j><j| and <a| running over the probe basis.
inline Instrument induced_instrument(const MeasurementScheme& scheme) {
    const std::size_t ds = scheme.system_dim();
    const std::size_t da = scheme.probe_dim();
    const ComplexMatrix id_s = identity(ds);
    const EigenPairs xi = eigh(scheme.probe_state().matrix(), "probe state");

    std::vector<ComplexMatrix> inject; // sqrt(q_j) (1 (x) |j>)
    for (Eigen::Index j = 0; j < xi.values.size(); ++j)
        if (xi.values(j) > 0.0) inject.push_back(std::sqrt(xi.values(j)) * kron(id_s, xi.vectors.col(j)));

    std::vector<KrausSet> sets;
    for (const auto& z : scheme.pointer().effects()) {
        const ComplexMatrix root = psd_sqrt(z);
        KrausSet ks;
        for (std::size_t a = 0; a < da; ++a) {
            const ComplexMatrix readout = kron(id_s, root.row(detail::idx(a)));
            if (readout.norm() == 0.0) continue;
            for (const auto& k : scheme.interaction().kraus()) {
                const ComplexMatrix rk = readout * k;
                for (const auto& in : inject) {
                    ComplexMatrix m = rk * in;
                    if (m.squaredNorm() > 1e-30) ks.push_back(std::move(m));
                }
            }
        }
        sets.push_back(std::move(ks));
    }
    return Instrument(scheme.pointer().outcomes(), std::move(sets), ds);
}

// Lambda(rho) = tr_S[E(rho (x) xi)]: system input, probe output.
inline KrausChannel conjugate_channel(const MeasurementScheme& scheme) {
    const std::size_t ds = scheme.system_dim();
    const std::size_t da = scheme.probe_dim();
    const ComplexMatrix id_s = identity(ds);
    const ComplexMatrix id_a = identity(da);
    const EigenPairs xi = eigh(scheme.probe_state().matrix(), "probe state");
    KrausSet out;
    for (std::size_t s = 0; s < ds; ++s) {
        const ComplexMatrix discard = kron(id_s.row(detail::idx(s)), id_a);
        for (const auto& k : scheme.interaction().kraus()) {
            const ComplexMatrix dk = discard * k;
            for (Eigen::Index j = 0; j < xi.values.size(); ++j) {
                if (xi.values(j) <= 0.0) continue;
                ComplexMatrix m = std::sqrt(xi.values(j)) * dk * kron(id_s, xi.vectors.col(j));
                if (m.squaredNorm() > 1e-30) out.push_back(std::move(m));
            }
        }
    }
    return KrausChannel(std::move(out));
}

// Probe identical to the system, unitary SWAP interaction, pointer = E.
inline MeasurementScheme trivial_scheme(const Observable& e, const ComplexMatrix& system_hamiltonian, double beta,
                                        double tol = kTheoremTol) {
    if (e.dim() != static_cast<std::size_t>(system_hamiltonian.rows()))
        throw ValidationError("trivial_scheme: observable dimension differs from the Hamiltonian");
    double worst = 0.0;
    for (const auto& eff : e.effects()) worst = std::max(worst, commutator_defect(eff, system_hamiltonian));
    if (!(worst <= tol))
        throw PreconditionError("trivial_scheme: observable does not commute with H_S (max ||[E_x, H_S]||_F = " +
                                    detail::sci(worst) + ")",
                                worst);
    const std::size_t d = e.dim();
    return MeasurementScheme(system_hamiltonian, system_hamiltonian, beta, unitary_channel(swap_unitary(d, d)), e);
}

// Mixture of seeded Haar unitaries that are block diagonal on the eigenspaces of
// H = H_S (x) 1 + 1 (x) H_A, mixed with simplex-uniform weights.
inline MeasurementScheme random_free_scheme(const ComplexMatrix& system_hamiltonian,
                                            const ComplexMatrix& probe_hamiltonian, double beta,
                                            const Observable& pointer, std::uint64_t seed,
                                            std::size_t mixture_size, double tol = kTheoremTol) {
    if (mixture_size == 0) throw ValidationError("random_free_scheme: mixture_size must be positive");
    double worst = 0.0;
    for (const auto& z : pointer.effects()) {
        if (z.rows() != probe_hamiltonian.rows())
            throw ValidationError("random_free_scheme: pointer dimension differs from the probe Hamiltonian");
        worst = std::max(worst, commutator_defect(z, probe_hamiltonian));
    }
    if (!(worst <= tol))
        throw PreconditionError("random_free_scheme: pointer violates the Yanase condition (max ||[Z_x, H_A]||_F = " +
                                    detail::sci(worst) + ")",
                                worst);
    const ComplexMatrix h = kron(hermitize(system_hamiltonian, "system Hamiltonian"),
                                 identity(static_cast<std::size_t>(probe_hamiltonian.rows()))) +
                            kron(identity(static_cast<std::size_t>(system_hamiltonian.rows())),
                                 hermitize(probe_hamiltonian, "probe Hamiltonian"));
    const auto sd = eig_hermitian(h);
    Rng rng(seed);
    const std::vector<double> weights = random_simplex(mixture_size, rng);
    KrausSet kraus;
    for (std::size_t i = 0; i < mixture_size; ++i) {
        ComplexMatrix u = ComplexMatrix::Zero(h.rows(), h.cols());
        for (const auto& basis : sd.bases)
            u += basis * haar_unitary(static_cast<std::size_t>(basis.cols()), rng) * basis.adjoint();
        kraus.push_back(std::sqrt(weights[i]) * u);
    }
    return MeasurementScheme(system_hamiltonian, probe_hamiltonian, beta, KrausChannel(std::move(kraus)), pointer);
}

} // namespace thermeas
