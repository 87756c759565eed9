// classify.hpp - structural classifiers for observables and instruments

#pragma once

#include "thermeas/thermo.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace thermeas {

inline constexpr std::array<double, 3> kCovarianceSampleTimes{0.37, 1.0, 2.5};

struct Witness {
    std::optional<std::string> outcome; // label of the worst violation, if any
    std::map<std::string, double> values;
};

// verdict == (defect <= tolerance)
struct ClassifierVerdict {
    std::string name;
    bool verdict = false;
    double defect = 0.0;
    double tolerance = kTheoremTol;
    Witness witness;
};

namespace detail {

inline ClassifierVerdict make_verdict(std::string name, double defect, double tol, Witness w = {}) {
    return {std::move(name), defect <= tol, defect, tol, std::move(w)};
}

inline void require_dim(std::size_t got, const ComplexMatrix& h, const char* what) {
    if (got != static_cast<std::size_t>(h.rows()) || h.rows() != h.cols())
        throw ValidationError(std::string(what) + ": dimension " + std::to_string(got) +
                              " does not match the Hamiltonian (" + std::to_string(h.rows()) + ")");
}

} // namespace detail

inline ClassifierVerdict is_thermal_observable(const Observable& e, const ComplexMatrix& system_hamiltonian,
                                               double tol = kTheoremTol) {
    detail::require_dim(e.dim(), system_hamiltonian, "is_thermal_observable");
    double worst = 0.0;
    Witness w;
    for (std::size_t x = 0; x < e.size(); ++x) {
        const double d = commutator_defect(e.effect(x), system_hamiltonian);
        if (d > worst || !w.outcome) {
            worst = std::max(worst, d);
            w.outcome = e.outcomes()[x];
        }
    }
    w.values["max_commutator_norm"] = worst;
    return detail::make_verdict("thermal_observable", worst, tol, std::move(w));
}

// Superoperator of rho -> -i[H, rho] in the row-major vectorisation used by superoperator().
inline ComplexMatrix derivation_superoperator(const ComplexMatrix& h) {
    const std::size_t d = static_cast<std::size_t>(h.rows());
    return Complex(0.0, -1.0) * (kron(h, identity(d)) - kron(identity(d), h.transpose()));
}

inline ClassifierVerdict is_covariant_instrument(const Instrument& ins, const ComplexMatrix& system_hamiltonian,
                                                 double tol = kTheoremTol) {
    detail::require_dim(ins.dim(), system_hamiltonian, "is_covariant_instrument");
    const ComplexMatrix gen = derivation_superoperator(system_hamiltonian);
    std::vector<ComplexMatrix> flows;
    for (double t : kCovarianceSampleTimes) {
        const ComplexMatrix u = time_evolution(system_hamiltonian, t);
        flows.push_back(kron(u, u.conjugate()));
    }
    double worst = 0.0;
    double worst_sampled = 0.0;
    Witness w;
    for (std::size_t x = 0; x < ins.size(); ++x) {
        const ComplexMatrix s = superoperator(ins.operation(x), ins.dim(), ins.dim());
        const double d = (s * gen - gen * s).norm();
        if (d > worst || !w.outcome) {
            worst = std::max(worst, d);
            w.outcome = ins.outcomes()[x];
        }
        for (const auto& f : flows) worst_sampled = std::max(worst_sampled, (s * f - f * s).norm());
    }
    w.values["generator_commutator_norm"] = worst;
    w.values["sampled_time_defect"] = worst_sampled;
    return detail::make_verdict("covariant", worst, tol, std::move(w));
}

// max_x ||I_x(tau) - tr[E_x tau] tau||_F
inline ClassifierVerdict is_gibbs_preserving(const Instrument& ins, const ComplexMatrix& system_hamiltonian,
                                             double beta, double tol = kTheoremTol) {
    detail::require_dim(ins.dim(), system_hamiltonian, "is_gibbs_preserving");
    const State tau = gibbs_state(system_hamiltonian, beta);
    double worst = 0.0;
    Witness w;
    for (std::size_t x = 0; x < ins.size(); ++x) {
        const ComplexMatrix out = ins.apply(x, tau.matrix());
        const double d = (out - out.trace().real() * tau.matrix()).norm();
        if (d > worst || !w.outcome) {
            worst = std::max(worst, d);
            w.outcome = ins.outcomes()[x];
        }
    }
    return detail::make_verdict("gibbs_preserving", worst, tol, std::move(w));
}

struct NuclearVerdict {
    ClassifierVerdict verdict;
    std::vector<std::optional<ComplexMatrix>> prepared_states; // sigma_x; empty for E_x = 0
};

// Choi(I_x) = sigma_x (x) E_x^T for every outcome, with sigma_x the output marginal / tr[E_x].
inline NuclearVerdict is_nuclear(const Instrument& ins, double tol = kTheoremTol) {
    NuclearVerdict out;
    double worst = 0.0;
    Witness w;
    const std::size_t d = ins.dim();
    for (std::size_t x = 0; x < ins.size(); ++x) {
        const ChoiMatrix c = choi_of_operation(ins.operation(x), d);
        const ComplexMatrix e = apply_operation_dual(ins.operation(x), identity(d), d);
        const double weight = e.trace().real();
        if (weight <= kOutcomeCutoff) {
            out.prepared_states.emplace_back();
            continue;
        }
        const ComplexMatrix sigma = partial_trace(c.matrix, d, d, Factor::First) / weight;
        const double residual = (c.matrix - kron(sigma, e.transpose())).norm();
        if (residual > worst || !w.outcome) {
            worst = std::max(worst, residual);
            w.outcome = ins.outcomes()[x];
        }
        out.prepared_states.emplace_back((sigma + sigma.adjoint()) * 0.5);
    }
    w.values["factorization_residual"] = worst;
    out.verdict = detail::make_verdict("nuclear", worst, tol, std::move(w));
    return out;
}

// For an instrument that is nuclear and Gibbs preserving, every prepared state
// must be the Gibbs state. Throws PreconditionError when either gate fails.
inline ClassifierVerdict check_prop2(const Instrument& ins, const ComplexMatrix& system_hamiltonian, double beta,
                                     double tol = kTheoremTol) {
    const NuclearVerdict nuclear = is_nuclear(ins, tol);
    if (!nuclear.verdict.verdict)
        throw PreconditionError("check_prop2: instrument is not nuclear (residual " +
                                    detail::sci(nuclear.verdict.defect) + ")",
                                nuclear.verdict.defect);
    const ClassifierVerdict gibbs = is_gibbs_preserving(ins, system_hamiltonian, beta, tol);
    if (!gibbs.verdict)
        throw PreconditionError("check_prop2: instrument is not Gibbs preserving (defect " +
                                    detail::sci(gibbs.defect) + ")",
                                gibbs.defect);
    const State tau = gibbs_state(system_hamiltonian, beta);
    double worst = 0.0;
    Witness w;
    for (std::size_t x = 0; x < ins.size(); ++x) {
        if (!nuclear.prepared_states[x]) continue;
        const double d = (*nuclear.prepared_states[x] - tau.matrix()).norm();
        if (d > worst || !w.outcome) {
            worst = std::max(worst, d);
            w.outcome = ins.outcomes()[x];
        }
    }
    w.values["max_prepared_state_distance"] = worst;
    return detail::make_verdict("prop2", worst, tol, std::move(w));
}

// Every operation has Choi rank <= 1; the defect is the largest second Choi eigenvalue.
inline ClassifierVerdict is_quasi_complete(const Instrument& ins, double tol = kValidationTol) {
    double worst = 0.0;
    Witness w;
    std::size_t worst_rank = 0;
    for (std::size_t x = 0; x < ins.size(); ++x) {
        const ChoiMatrix c = choi_of_operation(ins.operation(x), ins.dim());
        const RealVector ev = eigh(c.matrix, "choi").values;
        const double second = ev.size() > 1 ? std::max(0.0, ev(ev.size() - 2)) : 0.0;
        const std::size_t rank = static_cast<std::size_t>((ev.array() > tol).count());
        if (second > worst || !w.outcome) {
            worst = std::max(worst, second);
            worst_rank = rank;
            w.outcome = ins.outcomes()[x];
        }
    }
    w.values["choi_rank"] = static_cast<double>(worst_rank);
    return detail::make_verdict("quasi_complete", worst, tol, std::move(w));
}

struct JointObservable {
    Observable joint;                           // labels "<x>|E<m>"
    std::vector<std::pair<std::size_t, std::size_t>> index; // (x, m) for each joint outcome
    double outcome_marginal_defect = 0.0;       // max_x ||sum_m G_{x,m} - E_x||_F
    double energy_marginal_defect = 0.0;        // max_m ||sum_x G_{x,m} - P_m||_F
};

// G_{x,m} = E_x P_m with P the spectral measure of H_S.
inline JointObservable joint_with_hamiltonian(const Observable& e, const ComplexMatrix& system_hamiltonian,
                                              double tol = kTheoremTol) {
    const ClassifierVerdict thermal = is_thermal_observable(e, system_hamiltonian, tol);
    if (!thermal.verdict)
        throw PreconditionError("joint_with_hamiltonian: observable does not commute with H_S (defect " +
                                    detail::sci(thermal.defect) + ")",
                                thermal.defect);
    const auto sd = eig_hermitian(system_hamiltonian);
    const std::size_t d = e.dim();
    std::vector<std::string> labels;
    std::vector<ComplexMatrix> effects;
    std::vector<std::pair<std::size_t, std::size_t>> index;
    for (std::size_t x = 0; x < e.size(); ++x)
        for (std::size_t m = 0; m < sd.size(); ++m) {
            const ComplexMatrix g = e.effect(x) * sd.projectors[m];
            effects.push_back((g + g.adjoint()) * 0.5);
            labels.push_back(e.outcomes()[x] + "|E" + std::to_string(m));
            index.emplace_back(x, m);
        }
    JointObservable out{Observable(std::move(labels), effects, std::max(tol, kValidationTol)), std::move(index), 0.0, 0.0};
    for (std::size_t x = 0; x < e.size(); ++x) {
        ComplexMatrix s = ComplexMatrix::Zero(detail::idx(d), detail::idx(d));
        for (std::size_t m = 0; m < sd.size(); ++m) s += out.joint.effect(x * sd.size() + m);
        out.outcome_marginal_defect = std::max(out.outcome_marginal_defect, (s - e.effect(x)).norm());
    }
    for (std::size_t m = 0; m < sd.size(); ++m) {
        ComplexMatrix s = ComplexMatrix::Zero(detail::idx(d), detail::idx(d));
        for (std::size_t x = 0; x < e.size(); ++x) s += out.joint.effect(x * sd.size() + m);
        out.energy_marginal_defect = std::max(out.energy_marginal_defect, (s - sd.projectors[m]).norm());
    }
    return out;
}

// p(x|m) = <m|E_x|m> in the eigenbasis of a nondegenerate H_S.
struct PostProcessing {
    std::vector<std::vector<double>> matrix; // [x][m]
    std::vector<double> energies;            // ascending
    double reconstruction_defect = 0.0;      // max_x ||sum_m p(x|m) P_m - E_x||_F
    double column_sum_defect = 0.0;          // max_m |sum_x p(x|m) - 1|
};

inline PostProcessing post_processing_decomposition(const Observable& e, const ComplexMatrix& system_hamiltonian,
                                                    double tol = kTheoremTol) {
    const ClassifierVerdict thermal = is_thermal_observable(e, system_hamiltonian, tol);
    if (!thermal.verdict)
        throw PreconditionError("post_processing_decomposition: observable does not commute with H_S (defect " +
                                    detail::sci(thermal.defect) + ")",
                                thermal.defect);
    const auto sd = eig_hermitian(system_hamiltonian);
    if (!sd.nondegenerate())
        throw PreconditionError("post_processing_decomposition: H_S has a degenerate spectrum", 0.0);
    PostProcessing out;
    out.energies = sd.eigenvalues;
    for (std::size_t x = 0; x < e.size(); ++x) {
        std::vector<double> row;
        ComplexMatrix rebuilt = ComplexMatrix::Zero(e.effect(x).rows(), e.effect(x).cols());
        for (std::size_t m = 0; m < sd.size(); ++m) {
            const auto v = sd.bases[m].col(0);
            row.push_back((v.adjoint() * e.effect(x) * v)(0, 0).real());
            rebuilt += row.back() * sd.projectors[m];
        }
        out.reconstruction_defect = std::max(out.reconstruction_defect, (rebuilt - e.effect(x)).norm());
        out.matrix.push_back(std::move(row));
    }
    for (std::size_t m = 0; m < sd.size(); ++m) {
        double s = 0.0;
        for (const auto& row : out.matrix) s += row[m];
        out.column_sum_defect = std::max(out.column_sum_defect, std::abs(s - 1.0));
    }
    return out;
}

struct Refinement {
    Observable refined;              // labels "<y>#<i>"
    std::vector<std::size_t> parent; // refined outcome -> index of the coarse outcome y
    double coarse_graining_defect = 0.0;
};

// F_y = sum_i lambda_i P_i  ->  E_{(y,i)} = lambda_i P_i, rank-1 projectors from the
// ascending eigenbasis of each effect; eigenvalues <= tol are dropped.
inline Refinement refine_to_rank_one(const Observable& f, double tol = 1e-10) {
    std::vector<std::string> labels;
    std::vector<ComplexMatrix> effects;
    std::vector<std::size_t> parent;
    for (std::size_t y = 0; y < f.size(); ++y) {
        const EigenPairs eig = eigh(f.effect(y), "refine_to_rank_one");
        std::size_t i = 0;
        for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
            if (eig.values(k) <= tol) continue;
            effects.push_back(eig.values(k) * eig.vectors.col(k) * eig.vectors.col(k).adjoint());
            labels.push_back(f.outcomes()[y] + "#" + std::to_string(i++));
            parent.push_back(y);
        }
    }
    Refinement out{Observable(std::move(labels), std::move(effects)), std::move(parent), 0.0};
    for (std::size_t y = 0; y < f.size(); ++y) {
        ComplexMatrix s = ComplexMatrix::Zero(f.effect(y).rows(), f.effect(y).cols());
        for (std::size_t j = 0; j < out.parent.size(); ++j)
            if (out.parent[j] == y) s += out.refined.effect(j);
        out.coarse_graining_defect = std::max(out.coarse_graining_defect, (s - f.effect(y)).norm());
    }
    return out;
}

} // namespace thermeas
