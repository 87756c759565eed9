// thermo.hpp - work, heat, divergences, information gain and asymmetry of measurements

#pragma once

#include "thermeas/schemes.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace thermeas {

// Outcomes with probability at or below this are dropped from conditional sums.
inline constexpr double kOutcomeCutoff = 1e-12;

struct WorkReport {
    double extractable_work = 0.0;         // W = S(rho || tau)/beta
    double average_extractable_work = 0.0; // <W> = sum_x p(x) S(rho_x || tau)/beta
    double outcome_divergence = 0.0;       // D = sum_x p(x) ln(p(x)/q(x))
    double heat = 0.0;                     // Q
    double groenewold_gain = 0.0;          // I = S(rho) - sum_x p(x) S(rho_x)
    double beta = 1.0;
};

struct SecondLawReport {
    double prop1_slack = 0.0;         // W - D/beta - <W>
    double eq5_identity_defect = 0.0; // |<W> - W - Q - I/beta|
    double eq5_bound_slack = 0.0;     // -D/beta - Q - I/beta
    double heat_bound_slack = 0.0;    // -I/beta - Q
    double tolerance = kTheoremTol;
    std::optional<bool> verdict; // empty in diagnostic mode
};

struct ConditionalState {
    std::size_t outcome = 0;
    double probability = 0.0;
    ComplexMatrix state; // I_x(rho)/p(x)
};

inline std::vector<ConditionalState> conditional_states(const Instrument& ins, const ComplexMatrix& rho) {
    std::vector<ConditionalState> out;
    for (std::size_t x = 0; x < ins.size(); ++x) {
        ComplexMatrix sub = ins.apply(x, rho);
        const double p = sub.trace().real();
        if (p <= kOutcomeCutoff) continue;
        sub = ((sub + sub.adjoint()) * (0.5 / p)).eval();
        out.push_back({x, p, std::move(sub)});
    }
    return out;
}

namespace detail {

inline void require_same_dim(std::size_t a, std::size_t b, const char* what) {
    if (a != b)
        throw ValidationError(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                              std::to_string(b) + ")");
}

inline void require_beta(double beta) {
    if (!std::isfinite(beta) || !(beta > 0.0)) throw DomainError("beta must be finite and positive, got " + sci(beta));
}

// ln tr[e^{-beta H}] evaluated with the ground energy factored out.
inline double log_partition(const RealVector& energies, double beta) {
    const double ground = energies.minCoeff();
    double z = 0.0;
    for (Eigen::Index i = 0; i < energies.size(); ++i) z += std::exp(-beta * (energies(i) - ground));
    return -beta * ground + std::log(z);
}

// S(rho || tau_beta) = -S(rho) + beta tr[rho H] + ln Z, finite for every rho.
inline double relative_entropy_to_gibbs(const ComplexMatrix& rho, const ComplexMatrix& h, double beta,
                                        double log_z) {
    return -entropy_unchecked(rho) + beta * (rho * h).trace().real() + log_z;
}

} // namespace detail

inline double extractable_work(const State& rho, const ComplexMatrix& system_hamiltonian, double beta) {
    detail::require_beta(beta);
    detail::require_same_dim(rho.dim(), static_cast<std::size_t>(system_hamiltonian.rows()), "extractable_work");
    const RealVector energies = eigh(system_hamiltonian, "system Hamiltonian").values;
    return detail::relative_entropy_to_gibbs(rho.matrix(), system_hamiltonian, beta,
                                             detail::log_partition(energies, beta)) /
           beta;
}

inline double average_extractable_work(const Instrument& ins, const State& rho,
                                       const ComplexMatrix& system_hamiltonian, double beta) {
    detail::require_beta(beta);
    detail::require_same_dim(rho.dim(), ins.dim(), "average_extractable_work");
    detail::require_same_dim(rho.dim(), static_cast<std::size_t>(system_hamiltonian.rows()),
                             "average_extractable_work");
    const double log_z = detail::log_partition(eigh(system_hamiltonian, "system Hamiltonian").values, beta);
    double total = 0.0;
    for (const auto& c : conditional_states(ins, rho.matrix()))
        total += c.probability * detail::relative_entropy_to_gibbs(c.state, system_hamiltonian, beta, log_z);
    return total / beta;
}

inline double outcome_divergence(const Observable& e, const State& rho, const ComplexMatrix& system_hamiltonian,
                                 double beta) {
    detail::require_same_dim(rho.dim(), e.dim(), "outcome_divergence");
    const State tau = gibbs_state(system_hamiltonian, beta);
    std::vector<double> p;
    std::vector<double> q;
    for (const auto& eff : e.effects()) {
        if (eff.norm() == 0.0) continue;
        p.push_back(std::max(0.0, (eff * rho.matrix()).trace().real()));
        q.push_back((eff * tau.matrix()).trace().real());
    }
    const RelativeEntropy d = classical_relative_entropy(p, q);
    if (d.infinite) throw ValidationError("outcome_divergence: outcome impossible at equilibrium but possible in rho");
    return d.value;
}

struct HeatReport {
    double heat = 0.0;                 // tr[H_A (xi - Lambda(rho))]
    double system_energy_change = 0.0; // tr[H_S (I_X(rho) - rho)]
    double duality_defect = 0.0;       // |heat - system_energy_change|
};

namespace detail {

inline HeatReport heat_report(const MeasurementScheme& scheme, const KrausChannel& conjugate,
                              const Instrument& ins, const ComplexMatrix& rho) {
    HeatReport r;
    r.heat = (scheme.probe_hamiltonian() * (scheme.probe_state().matrix() - conjugate.apply(rho))).trace().real();
    r.system_energy_change = (scheme.system_hamiltonian() * (ins.apply_total(rho) - rho)).trace().real();
    r.duality_defect = std::abs(r.heat - r.system_energy_change);
    return r;
}

} // namespace detail

inline HeatReport heat_absorbed(const MeasurementScheme& scheme, const State& rho) {
    detail::require_same_dim(rho.dim(), scheme.system_dim(), "heat_absorbed");
    return detail::heat_report(scheme, conjugate_channel(scheme), induced_instrument(scheme), rho.matrix());
}

inline double groenewold_gain(const Instrument& ins, const State& rho) {
    detail::require_same_dim(rho.dim(), ins.dim(), "groenewold_gain");
    double avg = 0.0;
    for (const auto& c : conditional_states(ins, rho.matrix())) avg += c.probability * detail::entropy_unchecked(c.state);
    return von_neumann_entropy(rho) - avg;
}

// Wigner-Yanase skew information tr[rho H^2] - tr[sqrt(rho) H sqrt(rho) H] of a
// positive, possibly sub-normalised operator.
inline double skew_information(const ComplexMatrix& h, const ComplexMatrix& rho, double tol = kValidationTol) {
    if (h.rows() != rho.rows() || h.cols() != rho.cols())
        throw ValidationError("skew_information: dimension mismatch");
    const ComplexMatrix r = hermitize(rho, "skew_information operator", tol);
    const RealVector ev = eigh(r).values;
    if (ev(0) < -tol) throw ValidationError("skew_information: operator not positive (" + detail::sci(ev(0)) + ")");
    if (r.trace().real() > 1.0 + tol) throw ValidationError("skew_information: trace exceeds 1");
    const ComplexMatrix hh = hermitize(h, "skew_information Hamiltonian");
    const ComplexMatrix root = psd_sqrt(r);
    return (r * hh * hh).trace().real() - (root * hh * root * hh).trace().real();
}

struct SkewChain {
    double initial = 0.0;      // I(H, rho)
    double outcome_sum = 0.0;  // sum_x I(H, I_x(rho))
    double total = 0.0;        // I(H, I_X(rho))
    double first_slack() const { return initial - outcome_sum; }
    double second_slack() const { return outcome_sum - total; }
};

inline SkewChain skew_chain(const Instrument& ins, const ComplexMatrix& system_hamiltonian, const State& rho) {
    SkewChain c;
    c.initial = skew_information(system_hamiltonian, rho.matrix());
    ComplexMatrix total = ComplexMatrix::Zero(rho.matrix().rows(), rho.matrix().cols());
    for (std::size_t x = 0; x < ins.size(); ++x) {
        const ComplexMatrix out = ins.apply(x, rho.matrix());
        c.outcome_sum += skew_information(system_hamiltonian, out);
        total += out;
    }
    c.total = skew_information(system_hamiltonian, total);
    return c;
}

// Both sides of the classical-register dilation identity
//   S(Phi_X(rho) || Phi_X(tau)) = D(p || q) + sum_x p(x) S(rho_x || tau)
// with Phi_X(sigma) = sum_x I_x(sigma) (x) |x><x|. The left side is evaluated
// directly on the block-diagonal dilated operators.
struct DilationCheck {
    double direct = 0.0;
    double decomposed = 0.0;
    double defect() const { return std::abs(direct - decomposed); }
};

inline DilationCheck dilation_check(const Instrument& ins, const State& rho, const ComplexMatrix& system_hamiltonian,
                                    double beta) {
    const State tau = gibbs_state(system_hamiltonian, beta);
    const auto d = detail::idx(ins.dim());
    const auto n = detail::idx(ins.size());
    ComplexMatrix big_rho = ComplexMatrix::Zero(d * n, d * n);
    ComplexMatrix big_tau = ComplexMatrix::Zero(d * n, d * n);
    std::vector<double> p;
    std::vector<double> q;
    for (Eigen::Index x = 0; x < n; ++x) {
        const ComplexMatrix a = ins.apply(static_cast<std::size_t>(x), rho.matrix());
        const ComplexMatrix b = ins.apply(static_cast<std::size_t>(x), tau.matrix());
        big_rho.block(x * d, x * d, d, d) = a;
        big_tau.block(x * d, x * d, d, d) = b;
        p.push_back(a.trace().real());
        q.push_back(b.trace().real());
    }
    DilationCheck c;
    c.direct = detail::relative_entropy_unchecked(big_rho, big_tau, 1e-14).value;
    double conditional = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) {
        if (p[x] <= kOutcomeCutoff) {
            p[x] = 0.0;
            continue;
        }
        const ComplexMatrix rho_x = ins.apply(x, rho.matrix()) / p[x];
        conditional += p[x] * detail::relative_entropy_unchecked(rho_x, tau.matrix(), 1e-14).value;
    }
    c.decomposed = classical_relative_entropy(p, q).value + conditional;
    return c;
}

// A scheme together with its derived objects, reused across many input states.
struct PreparedScheme {
    MeasurementScheme scheme;
    Instrument instrument;
    KrausChannel conjugate;
    Observable observable;
    FreeSchemeReport freeness;

    explicit PreparedScheme(MeasurementScheme s, double tol = kTheoremTol)
        : scheme(std::move(s)), instrument(induced_instrument(scheme)), conjugate(conjugate_channel(scheme)),
          observable(induced_observable(instrument)), freeness(validate_free_scheme(scheme, tol)) {}
};

inline WorkReport work_report(const Instrument& ins, const State& rho, const ComplexMatrix& system_hamiltonian,
                              double beta, double heat) {
    WorkReport w;
    w.beta = beta;
    w.extractable_work = extractable_work(rho, system_hamiltonian, beta);
    w.average_extractable_work = average_extractable_work(ins, rho, system_hamiltonian, beta);
    w.outcome_divergence = outcome_divergence(induced_observable(ins), rho, system_hamiltonian, beta);
    w.heat = heat;
    w.groenewold_gain = groenewold_gain(ins, rho);
    return w;
}

inline SecondLawReport evaluate_second_law(const WorkReport& w, double tol, bool with_verdict) {
    const double t = 1.0 / w.beta;
    SecondLawReport r;
    r.tolerance = tol;
    r.prop1_slack = w.extractable_work - t * w.outcome_divergence - w.average_extractable_work;
    r.eq5_identity_defect =
        std::abs(w.average_extractable_work - w.extractable_work - w.heat - t * w.groenewold_gain);
    r.eq5_bound_slack = -t * w.outcome_divergence - w.heat - t * w.groenewold_gain;
    r.heat_bound_slack = -t * w.groenewold_gain - w.heat;
    if (with_verdict)
        r.verdict = r.prop1_slack >= -tol && r.eq5_identity_defect <= tol && r.eq5_bound_slack >= -tol &&
                    r.heat_bound_slack >= -tol;
    return r;
}

struct SecondLawResult {
    WorkReport work;
    SecondLawReport law;
    HeatReport heat;
};

inline SecondLawResult second_law_report(const PreparedScheme& prepared, const State& rho, double tol = kTheoremTol) {
    if (!prepared.freeness.verdict) {
        const auto& f = prepared.freeness;
        double worst = std::max(f.bistochastic_defect, f.yanase_defect);
        for (double d : f.energy_conservation_defects) worst = std::max(worst, d);
        throw PreconditionError("second_law_report: scheme is not thermodynamically free (worst defect " +
                                    detail::sci(worst) + ")",
                                worst);
    }
    const auto& s = prepared.scheme;
    detail::require_same_dim(rho.dim(), s.system_dim(), "second_law_report");
    SecondLawResult out;
    out.heat = detail::heat_report(s, prepared.conjugate, prepared.instrument, rho.matrix());
    out.work = work_report(prepared.instrument, rho, s.system_hamiltonian(), s.beta(), out.heat.heat);
    out.law = evaluate_second_law(out.work, tol, true);
    return out;
}

inline SecondLawResult second_law_report(const MeasurementScheme& scheme, const State& rho, double tol = kTheoremTol) {
    return second_law_report(PreparedScheme(scheme, tol), rho, tol);
}

// Same quantities for an arbitrary instrument, without a verdict. Heat is the
// system energy change tr[H_S (I_X(rho) - rho)].
inline SecondLawResult second_law_diagnostics(const Instrument& ins, const State& rho,
                                              const ComplexMatrix& system_hamiltonian, double beta,
                                              double tol = kTheoremTol) {
    SecondLawResult out;
    const double de = (system_hamiltonian * (ins.apply_total(rho.matrix()) - rho.matrix())).trace().real();
    out.heat = {de, de, 0.0};
    out.work = work_report(ins, rho, system_hamiltonian, beta, de);
    out.law = evaluate_second_law(out.work, tol, false);
    return out;
}

} // namespace thermeas
