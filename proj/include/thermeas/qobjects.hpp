// qobjects.hpp - validated states, observables, channels, instruments and Choi matrices

#pragma once

#include "thermeas/numkernel.hpp"

#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace thermeas {

inline constexpr double kValidationTol = 1e-9;

// Kraus operators of a single operation (output x input). An empty set is the zero operation.
using KrausSet = std::vector<ComplexMatrix>;

class State {
public:
    explicit State(const ComplexMatrix& rho, double tol = kValidationTol)
        : rho_(check_density(rho, tol)) {}

    const ComplexMatrix& matrix() const { return rho_; }
    std::size_t dim() const { return static_cast<std::size_t>(rho_.rows()); }

private:
    ComplexMatrix rho_;
};

inline State pure_state(const ComplexVector& psi) {
    const ComplexVector v = psi / psi.norm();
    return State(v * v.adjoint());
}

inline State maximally_mixed(std::size_t d) {
    return State(identity(d) / static_cast<double>(d));
}

inline double von_neumann_entropy(const State& rho) {
    return detail::entropy_unchecked(rho.matrix());
}

inline RelativeEntropy relative_entropy(const State& rho, const State& sigma, double support_tol = kSupportTol) {
    if (rho.dim() != sigma.dim())
        throw ValidationError("relative_entropy: dimension mismatch (" + std::to_string(rho.dim()) + " vs " +
                              std::to_string(sigma.dim()) + ")");
    return detail::relative_entropy_unchecked(rho.matrix(), sigma.matrix(), support_tol);
}

// A discrete POVM: outcome labels in user order, one effect per label.
class Observable {
public:
    Observable(std::vector<std::string> outcomes, std::vector<ComplexMatrix> effects,
               double tol = kValidationTol)
        : outcomes_(std::move(outcomes)), effects_(std::move(effects)) {
        if (effects_.empty()) throw ValidationError("observable: no effects");
        if (outcomes_.size() != effects_.size())
            throw ValidationError("observable: " + std::to_string(outcomes_.size()) + " labels for " +
                                  std::to_string(effects_.size()) + " effects");
        if (std::set<std::string>(outcomes_.begin(), outcomes_.end()).size() != outcomes_.size())
            throw ValidationError("observable: duplicate outcome labels");
        const auto d = effects_.front().rows();
        ComplexMatrix sum = ComplexMatrix::Zero(d, d);
        for (std::size_t x = 0; x < effects_.size(); ++x) {
            const std::string what = "observable effect '" + outcomes_[x] + "'";
            if (effects_[x].rows() != d || effects_[x].cols() != d)
                throw ValidationError(what + ": dimension differs from the first effect");
            effects_[x] = hermitize(effects_[x], what, tol);
            const RealVector ev = eigh(effects_[x], what).values;
            if (ev(0) < -tol)
                throw ValidationError(what + ": eigenvalue " + detail::sci(ev(0)) + " below 0");
            if (ev(ev.size() - 1) > 1.0 + tol)
                throw ValidationError(what + ": eigenvalue " + detail::sci(ev(ev.size() - 1)) + " above 1");
            sum += effects_[x];
        }
        const double defect = (sum - ComplexMatrix::Identity(d, d)).norm();
        if (!(defect <= tol))
            throw ValidationError("observable: effects sum to identity only within " + detail::sci(defect));
    }

    const std::vector<std::string>& outcomes() const { return outcomes_; }
    const std::vector<ComplexMatrix>& effects() const { return effects_; }
    const ComplexMatrix& effect(std::size_t x) const { return effects_.at(x); }
    std::size_t size() const { return effects_.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(effects_.front().rows()); }

    std::vector<double> probabilities(const ComplexMatrix& rho) const {
        std::vector<double> p;
        p.reserve(size());
        for (const auto& e : effects_) p.push_back((e * rho).trace().real());
        return p;
    }

private:
    std::vector<std::string> outcomes_;
    std::vector<ComplexMatrix> effects_;
};

inline Observable validate_observable(std::vector<std::string> outcomes, std::vector<ComplexMatrix> effects,
                                      double tol = kValidationTol) {
    return Observable(std::move(outcomes), std::move(effects), tol);
}

inline std::vector<std::string> default_labels(std::size_t n, const std::string& prefix = "x") {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

// Projective measurement onto the eigenspaces of H (the spectral measure), labels "E0", "E1", ...
// in ascending energy order.
inline Observable spectral_measure(const ComplexMatrix& h, double cluster_tol = kClusterTol) {
    auto sd = eig_hermitian(h, cluster_tol);
    return Observable(default_labels(sd.size(), "E"), std::move(sd.projectors));
}

// Rank-1 projective measurement onto the columns of a unitary.
inline Observable basis_measurement(const ComplexMatrix& u, const std::string& prefix = "x") {
    std::vector<ComplexMatrix> eff;
    for (Eigen::Index i = 0; i < u.cols(); ++i) eff.push_back(u.col(i) * u.col(i).adjoint());
    auto labels = default_labels(eff.size(), prefix);
    return Observable(std::move(labels), std::move(eff));
}

inline bool is_sharp(const Observable& e, double tol = kValidationTol) {
    for (std::size_t x = 0; x < e.size(); ++x)
        for (std::size_t y = 0; y < e.size(); ++y) {
            const ComplexMatrix expect = x == y ? e.effect(x) : ComplexMatrix::Zero(e.dim(), e.dim());
            if ((e.effect(x) * e.effect(y) - expect).norm() > tol) return false;
        }
    return true;
}

// max_x ||E_x - (tr[E_x]/d) 1||_F; zero iff every effect is a multiple of the identity (or zero).
inline double triviality_defect(const Observable& e) {
    const double d = static_cast<double>(e.dim());
    double worst = 0.0;
    for (const auto& eff : e.effects())
        worst = std::max(worst, (eff - (eff.trace().real() / d) * identity(e.dim())).norm());
    return worst;
}

inline bool is_trivial(const Observable& e, double tol = kValidationTol) { return triviality_defect(e) <= tol; }

// Every nonzero effect has exactly one eigenvalue above tol.
inline bool is_rank_one(const Observable& e, double tol = 1e-10) {
    for (const auto& eff : e.effects()) {
        const RealVector ev = eigh(eff).values;
        if ((ev.array() > tol).count() > 1) return false;
    }
    return true;
}

inline ComplexMatrix apply_operation(const KrausSet& ks, const ComplexMatrix& rho) {
    if (ks.empty()) return ComplexMatrix::Zero(rho.rows(), rho.cols());
    ComplexMatrix out = ComplexMatrix::Zero(ks.front().rows(), ks.front().rows());
    for (const auto& k : ks) out.noalias() += k * rho * k.adjoint();
    return out;
}

inline ComplexMatrix apply_operation_dual(const KrausSet& ks, const ComplexMatrix& a, std::size_t in_dim) {
    ComplexMatrix out = ComplexMatrix::Zero(detail::idx(in_dim), detail::idx(in_dim));
    for (const auto& k : ks) out.noalias() += k.adjoint() * a * k;
    return out;
}

// A trace-preserving operation in Kraus form; operators may be rectangular (out x in).
class KrausChannel {
public:
    explicit KrausChannel(KrausSet kraus, double tol = kValidationTol) : kraus_(std::move(kraus)) {
        if (kraus_.empty()) throw ValidationError("channel: no Kraus operators");
        const auto rows = kraus_.front().rows();
        const auto cols = kraus_.front().cols();
        if (rows == 0 || cols == 0) throw ValidationError("channel: empty Kraus operator");
        ComplexMatrix sum = ComplexMatrix::Zero(cols, cols);
        for (const auto& k : kraus_) {
            if (k.rows() != rows || k.cols() != cols)
                throw ValidationError("channel: Kraus operators of unequal shape");
            sum.noalias() += k.adjoint() * k;
        }
        const double defect = (sum - ComplexMatrix::Identity(cols, cols)).norm();
        if (!(defect <= tol))
            throw ValidationError("channel: not trace preserving (||sum K^dagger K - 1||_F = " + detail::sci(defect) +
                                  ")");
    }

    const KrausSet& kraus() const { return kraus_; }
    std::size_t in_dim() const { return static_cast<std::size_t>(kraus_.front().cols()); }
    std::size_t out_dim() const { return static_cast<std::size_t>(kraus_.front().rows()); }

    ComplexMatrix apply(const ComplexMatrix& rho) const {
        if (static_cast<std::size_t>(rho.rows()) != in_dim() || rho.rows() != rho.cols())
            throw ValidationError("apply_channel: input is " + std::to_string(rho.rows()) + "x" +
                                  std::to_string(rho.cols()) + ", channel input dimension is " +
                                  std::to_string(in_dim()));
        return apply_operation(kraus_, rho);
    }

    ComplexMatrix apply_dual(const ComplexMatrix& a) const {
        if (static_cast<std::size_t>(a.rows()) != out_dim() || a.rows() != a.cols())
            throw ValidationError("apply_dual: operator is " + std::to_string(a.rows()) + "x" +
                                  std::to_string(a.cols()) + ", channel output dimension is " +
                                  std::to_string(out_dim()));
        return apply_operation_dual(kraus_, a, in_dim());
    }

private:
    KrausSet kraus_;
};

inline State apply_channel(const KrausChannel& ch, const State& rho) {
    ComplexMatrix out = ch.apply(rho.matrix());
    return State((out + out.adjoint()) * 0.5);
}

inline ComplexMatrix apply_dual(const KrausChannel& ch, const ComplexMatrix& a) { return ch.apply_dual(a); }

inline KrausChannel unitary_channel(const ComplexMatrix& u) { return KrausChannel({u}); }

inline KrausChannel identity_channel(std::size_t d) { return KrausChannel({identity(d)}); }

// SWAP on C^{d1} (x) C^{d2}: |i>|j> -> |j>|i> (output lives on C^{d2} (x) C^{d1}).
inline ComplexMatrix swap_unitary(std::size_t d1, std::size_t d2) {
    const auto n = detail::idx(d1 * d2);
    ComplexMatrix s = ComplexMatrix::Zero(n, n);
    for (std::size_t i = 0; i < d1; ++i)
        for (std::size_t j = 0; j < d2; ++j) s(detail::idx(j * d1 + i), detail::idx(i * d2 + j)) = 1.0;
    return s;
}

inline KrausChannel amplitude_damping(double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("amplitude_damping: gamma outside [0, 1]");
    ComplexMatrix k0 = ComplexMatrix::Zero(2, 2);
    ComplexMatrix k1 = ComplexMatrix::Zero(2, 2);
    k0(0, 0) = 1.0;
    k0(1, 1) = std::sqrt(1.0 - gamma);
    k1(0, 1) = std::sqrt(gamma);
    return KrausChannel({k0, k1});
}

struct BistochasticReport {
    bool bistochastic = false;
    double trace_defect = 0.0;  // ||sum K^dagger K - 1||_F
    double unital_defect = 0.0; // ||sum K K^dagger - 1||_F
};

inline BistochasticReport is_bistochastic(const KrausChannel& ch, double tol = kValidationTol) {
    if (ch.in_dim() != ch.out_dim()) return {false, 0.0, std::numeric_limits<double>::infinity()};
    const auto d = detail::idx(ch.in_dim());
    ComplexMatrix tp = ComplexMatrix::Zero(d, d);
    ComplexMatrix un = ComplexMatrix::Zero(d, d);
    for (const auto& k : ch.kraus()) {
        tp.noalias() += k.adjoint() * k;
        un.noalias() += k * k.adjoint();
    }
    BistochasticReport r;
    r.trace_defect = (tp - ComplexMatrix::Identity(d, d)).norm();
    r.unital_defect = (un - ComplexMatrix::Identity(d, d)).norm();
    r.bistochastic = r.trace_defect <= tol && r.unital_defect <= tol;
    return r;
}

// Outcome-labeled operations in Kraus form whose sum is trace preserving.
class Instrument {
public:
    Instrument(std::vector<std::string> outcomes, std::vector<KrausSet> operations, std::size_t dim,
               double tol = kValidationTol)
        : outcomes_(std::move(outcomes)), operations_(std::move(operations)), dim_(dim) {
        if (operations_.empty()) throw ValidationError("instrument: no outcomes");
        if (outcomes_.size() != operations_.size())
            throw ValidationError("instrument: " + std::to_string(outcomes_.size()) + " labels for " +
                                  std::to_string(operations_.size()) + " operations");
        if (std::set<std::string>(outcomes_.begin(), outcomes_.end()).size() != outcomes_.size())
            throw ValidationError("instrument: duplicate outcome labels");
        const auto d = detail::idx(dim_);
        ComplexMatrix sum = ComplexMatrix::Zero(d, d);
        for (std::size_t x = 0; x < operations_.size(); ++x)
            for (const auto& k : operations_[x]) {
                if (k.rows() != d || k.cols() != d)
                    throw ValidationError("instrument operation '" + outcomes_[x] + "': Kraus operator is " +
                                          std::to_string(k.rows()) + "x" + std::to_string(k.cols()) +
                                          ", expected " + std::to_string(dim_) + " square");
                sum.noalias() += k.adjoint() * k;
            }
        const double defect = (sum - ComplexMatrix::Identity(d, d)).norm();
        if (!(defect <= tol))
            throw ValidationError("instrument: total channel not trace preserving (defect " + detail::sci(defect) +
                                  ")");
    }

    const std::vector<std::string>& outcomes() const { return outcomes_; }
    const std::vector<KrausSet>& operations() const { return operations_; }
    const KrausSet& operation(std::size_t x) const { return operations_.at(x); }
    std::size_t size() const { return operations_.size(); }
    std::size_t dim() const { return dim_; }

    ComplexMatrix apply(std::size_t x, const ComplexMatrix& rho) const { return apply_operation(operations_.at(x), rho); }

    ComplexMatrix apply_total(const ComplexMatrix& rho) const {
        ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
        for (const auto& op : operations_) out += apply_operation(op, rho);
        return out;
    }

    KrausChannel total_channel() const {
        KrausSet all;
        for (const auto& op : operations_) all.insert(all.end(), op.begin(), op.end());
        return KrausChannel(std::move(all));
    }

private:
    std::vector<std::string> outcomes_;
    std::vector<KrausSet> operations_;
    std::size_t dim_;
};

inline Instrument instrument_from_kraus(std::vector<std::string> outcomes, std::vector<KrausSet> sets,
                                        double tol = kValidationTol) {
    std::size_t dim = 0;
    for (const auto& s : sets)
        if (!s.empty()) {
            dim = static_cast<std::size_t>(s.front().cols());
            break;
        }
    if (dim == 0) throw ValidationError("instrument: every operation is empty");
    return Instrument(std::move(outcomes), std::move(sets), dim, tol);
}

// E_x = sum_i K_{x,i}^dagger K_{x,i}
inline Observable induced_observable(const Instrument& ins, double tol = kValidationTol) {
    std::vector<ComplexMatrix> eff;
    eff.reserve(ins.size());
    for (const auto& op : ins.operations()) eff.push_back(apply_operation_dual(op, identity(ins.dim()), ins.dim()));
    return Observable(ins.outcomes(), std::move(eff), tol);
}

// Kraus set {sqrt(E_x)} per outcome.
inline Instrument luders_instrument(const Observable& e) {
    std::vector<KrausSet> sets;
    for (const auto& eff : e.effects()) sets.push_back({psd_sqrt(eff)});
    return Instrument(e.outcomes(), std::move(sets), e.dim());
}

// rho -> tr[E_x rho] sigma for a fixed output state sigma.
inline Instrument thermalising_instrument(const Observable& e, const State& sigma) {
    if (sigma.dim() != e.dim()) throw ValidationError("thermalising_instrument: dimension mismatch");
    const EigenPairs s = eigh(sigma.matrix());
    std::vector<KrausSet> sets;
    for (const auto& eff : e.effects()) {
        const EigenPairs f = eigh(eff);
        KrausSet ks;
        for (Eigen::Index i = 0; i < s.values.size(); ++i) {
            if (s.values(i) <= 0.0) continue;
            for (Eigen::Index j = 0; j < f.values.size(); ++j) {
                if (f.values(j) <= 0.0) continue;
                ks.push_back(std::sqrt(s.values(i) * f.values(j)) * s.vectors.col(i) * f.vectors.col(j).adjoint());
            }
        }
        sets.push_back(std::move(ks));
    }
    return Instrument(e.outcomes(), std::move(sets), e.dim());
}

// Choi operator (Phi (x) id)(|Omega><Omega|) with |Omega> = sum_i |i>|i>; output factor first.
struct ChoiMatrix {
    ComplexMatrix matrix;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
};

inline ChoiMatrix choi_of_operation(const KrausSet& ks, std::size_t in_dim, std::size_t out_dim) {
    const auto n = detail::idx(in_dim * out_dim);
    ChoiMatrix c{ComplexMatrix::Zero(n, n), in_dim, out_dim};
    for (const auto& k : ks) {
        if (static_cast<std::size_t>(k.rows()) != out_dim || static_cast<std::size_t>(k.cols()) != in_dim)
            throw ValidationError("choi_of_operation: Kraus operator shape mismatch");
        // |K>> = sum_i K|i> (x) |i>, entry (a, i) at a*in_dim + i
        ComplexVector v(n);
        for (Eigen::Index a = 0; a < k.rows(); ++a)
            for (Eigen::Index i = 0; i < k.cols(); ++i) v(a * k.cols() + i) = k(a, i);
        c.matrix.noalias() += v * v.adjoint();
    }
    return c;
}

inline ChoiMatrix choi_of_operation(const KrausSet& ks, std::size_t dim) { return choi_of_operation(ks, dim, dim); }

inline std::size_t choi_rank(const ChoiMatrix& c, double tol = kValidationTol) {
    const RealVector ev = eigh(c.matrix, "choi_rank").values;
    return static_cast<std::size_t>((ev.array() > tol).count());
}

// Minimal Kraus set recovered from the Choi spectrum (eigenvalues <= tol dropped).
inline KrausSet kraus_from_choi(const ChoiMatrix& c, double tol = kValidationTol) {
    const EigenPairs eig = eigh(c.matrix, "kraus_from_choi");
    const RealVector& lambda = eig.values;
    KrausSet out;
    for (Eigen::Index j = lambda.size() - 1; j >= 0; --j) {
        if (lambda(j) <= tol) break;
        ComplexMatrix k(detail::idx(c.out_dim), detail::idx(c.in_dim));
        for (Eigen::Index a = 0; a < k.rows(); ++a)
            for (Eigen::Index i = 0; i < k.cols(); ++i) k(a, i) = std::sqrt(lambda(j)) * eig.vectors(a * k.cols() + i, j);
        out.push_back(std::move(k));
    }
    return out;
}

// Matrix S with vec(Phi(rho)) = S vec(rho), row-major vectorisation.
inline ComplexMatrix superoperator(const KrausSet& ks, std::size_t in_dim, std::size_t out_dim) {
    const auto n_out = detail::idx(out_dim * out_dim);
    const auto n_in = detail::idx(in_dim * in_dim);
    ComplexMatrix s = ComplexMatrix::Zero(n_out, n_in);
    for (const auto& k : ks) s += kron(k, k.conjugate());
    return s;
}

// e^{-beta H} / tr[e^{-beta H}], evaluated spectrally with the ground energy shifted to zero.
inline State gibbs_state(const ComplexMatrix& h, double beta) {
    if (!std::isfinite(beta) || !(beta > 0.0))
        throw DomainError("gibbs_state: beta must be finite and positive, got " + detail::sci(beta));
    const EigenPairs eig = eigh(h, "gibbs_state");
    const double ground = eig.values(0);
    RealVector w = eig.values.unaryExpr([&](double e) { return std::exp(-beta * (e - ground)); });
    w /= w.sum();
    const ComplexMatrix rho = eig.vectors * w.asDiagonal() * eig.vectors.adjoint();
    return State((rho + rho.adjoint()) * 0.5);
}

} // namespace thermeas
