#include "support.hpp"

using namespace testing_support;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

TEST_CASE("State validation") {
    CHECK_NOTHROW(State(diag({0.25, 0.75})));
    CHECK_THROWS_AS(State(diag({0.5, 0.6})), ValidationError);
    CHECK_THROWS_AS(State(diag({1.2, -0.2})), ValidationError);
    CHECK_THROWS_AS(State(mat({{0.5, 0.5}, {0.0, 0.5}})), ValidationError);
    CHECK(pure_state(ket(3, 1) * 2.0).matrix().isApprox(diag({0, 1, 0})));
}

TEST_CASE("validate_observable: sharp, trivial and invalid") {
    const Observable sharp = validate_observable({"x1", "x2"}, {diag({1, 0}), diag({0, 1})});
    CHECK(is_sharp(sharp));
    CHECK_FALSE(is_trivial(sharp));

    const Observable triv = validate_observable({"x1", "x2"}, {identity(2) * 0.5, identity(2) * 0.5});
    CHECK(is_trivial(triv));
    CHECK_FALSE(is_sharp(triv));

    CHECK_THROWS_WITH(validate_observable({"x1", "x2"}, {diag({1.2, 0}), diag({-0.2, 1})}), ContainsSubstring("x1"));
    CHECK_THROWS_AS(validate_observable({"x1", "x2"}, {diag({1, 0}), diag({1, 1})}), ValidationError);
    CHECK_THROWS_AS(validate_observable({}, {}), ValidationError);
    CHECK_THROWS_AS(validate_observable({"a", "a"}, {diag({1, 0}), diag({0, 1})}), ValidationError);
    CHECK_THROWS_AS(validate_observable({"a"}, {diag({1, 0}), diag({0, 1})}), ValidationError);
    CHECK_THROWS_AS(validate_observable({"a", "b"}, {identity(2), ComplexMatrix::Zero(3, 3)}), ValidationError);
}

TEST_CASE("observable probabilities follow the Born rule") {
    const Observable e = x_basis();
    const auto p = e.probabilities(proj(plus()));
    CHECK_THAT(p[0], WithinAbs(1.0, 1e-14));
    CHECK_THAT(p[1], WithinAbs(0.0, 1e-14));
}

TEST_CASE("gibbs_state closed forms") {
    CHECK(dist(gibbs_state(diag({0, 0}), 3.7).matrix(), identity(2) * 0.5) < 1e-14);
    CHECK(dist(gibbs_state(diag({0, std::log(2.0)}), 1.0).matrix(), diag({2.0 / 3, 1.0 / 3})) < 1e-14);
    CHECK(dist(gibbs_state(diag({0, 1, 2}), 30.0).matrix(), diag({1, 0, 0})) < 1e-10);
    CHECK_THROWS_AS(gibbs_state(diag({0, 1}), 0.0), DomainError);
    CHECK_THROWS_AS(gibbs_state(diag({0, 1}), -1.0), DomainError);
    CHECK_THROWS_AS(gibbs_state(diag({0, 1}), std::numeric_limits<double>::infinity()), DomainError);
}

TEST_CASE("gibbs_state: Boltzmann ratios, full rank, commutes with H") {
    Rng rng(31);
    for (int t = 0; t < 30; ++t) {
        const std::size_t d = 2 + t % 3;
        const ComplexMatrix u = haar_unitary(d, rng);
        const ComplexMatrix h0 = random_diagonal_hamiltonian(d, rng, 2.0);
        const ComplexMatrix h = u * h0 * u.adjoint();
        const double beta = 0.3 + 0.1 * t;
        const ComplexMatrix tau = gibbs_state(h, beta).matrix();
        CHECK(commutator_defect(tau, h) < 1e-10);
        const ComplexMatrix local = u.adjoint() * tau * u;
        for (std::size_t i = 1; i < d; ++i) {
            const auto a = static_cast<Eigen::Index>(i);
            const double gap = (h0(a, a) - h0(0, 0)).real();
            CHECK_THAT(local(a, a).real() / local(0, 0).real(), WithinAbs(std::exp(-beta * gap), 1e-9));
        }
        CHECK(eigh(tau).values.minCoeff() > 0.0);
    }
}

TEST_CASE("apply_channel and apply_dual examples") {
    Rng rng(11);
    const State rho = random_state(2, rng);
    CHECK(dist(apply_channel(identity_channel(2), rho).matrix(), rho.matrix()) < 1e-14);

    const State xi = random_state(3, rng);
    const KrausChannel swap = unitary_channel(swap_unitary(2, 3));
    const ComplexMatrix out = swap.apply(kron(rho.matrix(), xi.matrix()));
    CHECK(dist(out, kron(xi.matrix(), rho.matrix())) < 1e-14);

    const KrausChannel u = unitary_channel(haar_unitary(3, rng));
    CHECK(dist(apply_dual(u, identity(3)), identity(3)) < 1e-12);
    // amplitude damping is trace preserving, so its dual is unital
    CHECK(dist(apply_dual(amplitude_damping(0.3), identity(2)), identity(2)) < 1e-14);
    CHECK_THROWS_AS(apply_channel(u, rho), ValidationError);
}

TEST_CASE("channels preserve trace and satisfy trace duality") {
    Rng rng(12);
    for (int t = 0; t < 30; ++t) {
        const std::size_t d = 2 + t % 3;
        KrausSet ks;
        const auto w = random_simplex(3, rng);
        for (double p : w) ks.push_back(std::sqrt(p) * haar_unitary(d, rng));
        ks.push_back(ComplexMatrix::Zero(d, d));
        const KrausChannel ch(ks);
        const State rho = random_state(d, rng);
        CHECK_THAT(apply_channel(ch, rho).matrix().trace().real(), WithinAbs(1.0, 1e-9));
        const ComplexMatrix a = random_hermitian(d, rng);
        const ComplexMatrix b = random_hermitian(d, rng);
        CHECK(std::abs((a * ch.apply(b)).trace() - (ch.apply_dual(a) * b).trace()) < 1e-9);
    }
}

TEST_CASE("KrausChannel rejects non-trace-preserving sets") {
    CHECK_THROWS_AS(KrausChannel({diag({1, 0.5})}), ValidationError);
    CHECK_THROWS_AS(KrausChannel({}), ValidationError);
}

TEST_CASE("is_bistochastic examples") {
    Rng rng(13);
    CHECK(is_bistochastic(unitary_channel(haar_unitary(3, rng))).bistochastic);
    const auto damp = is_bistochastic(amplitude_damping(0.3));
    CHECK_FALSE(damp.bistochastic);
    CHECK_THAT(damp.unital_defect, WithinAbs(0.3 * std::sqrt(2.0), 1e-12));
    CHECK_THAT(damp.trace_defect, WithinAbs(0.0, 1e-12));
    const KrausChannel mix({std::sqrt(0.5) * haar_unitary(2, rng), std::sqrt(0.5) * haar_unitary(2, rng)});
    CHECK(is_bistochastic(mix).bistochastic);
}

TEST_CASE("instrument_from_kraus and induced_observable") {
    Rng rng(14);
    const Observable e = random_commuting_observable(random_hermitian(3, rng), 3, rng);
    const Instrument lud = luders_instrument(e);
    const Observable induced = induced_observable(lud);
    for (std::size_t x = 0; x < e.size(); ++x) CHECK(dist(induced.effect(x), e.effect(x)) < 1e-10);
    CHECK(induced.outcomes() == e.outcomes());

    const Instrument single = instrument_from_kraus({"only"}, {{haar_unitary(2, rng)}});
    REQUIRE(induced_observable(single).size() == 1);
    CHECK(dist(induced_observable(single).effect(0), identity(2)) < 1e-12);

    const Instrument proj_ins = instrument_from_kraus({"0", "1"}, {{diag({1, 0})}, {diag({0, 1})}});
    CHECK(dist(induced_observable(proj_ins).effect(0), diag({1, 0})) < 1e-14);
    CHECK(dist(induced_observable(proj_ins).effect(1), diag({0, 1})) < 1e-14);

    CHECK_THROWS_AS(instrument_from_kraus({"0", "1"}, {{diag({1, 0})}, {diag({0, 0.5})}}), ValidationError);
}

TEST_CASE("instrument probabilities sum to one and match the induced observable") {
    Rng rng(15);
    for (int t = 0; t < 20; ++t) {
        const std::size_t d = 2 + t % 3;
        const Observable e = random_commuting_observable(random_hermitian(d, rng), 2 + t % 2, rng);
        const Instrument ins = thermalising_instrument(e, random_state(d, rng));
        const Observable induced = induced_observable(ins);
        const State rho = random_state(d, rng);
        double total = 0.0;
        for (std::size_t x = 0; x < ins.size(); ++x) {
            const double p = ins.apply(x, rho.matrix()).trace().real();
            total += p;
            CHECK_THAT(p, WithinAbs((induced.effect(x) * rho.matrix()).trace().real(), 1e-9));
            CHECK(dist(induced.effect(x), e.effect(x)) < 1e-9);
        }
        CHECK_THAT(total, WithinAbs(1.0, 1e-9));
    }
}

TEST_CASE("Choi matrices and ranks") {
    const ChoiMatrix id = choi_of_operation({identity(2)}, 2);
    const ComplexVector omega = kron(ket(2, 0), ket(2, 0)) + kron(ket(2, 1), ket(2, 1));
    CHECK(dist(id.matrix, proj(omega)) < 1e-14);
    CHECK(choi_rank(id) == 1);

    const Instrument lud = luders_instrument(spectral_measure(diag({0, 1})));
    CHECK(choi_rank(choi_of_operation(lud.operation(0), 2)) == 1);

    const State tau = gibbs_state(diag({0, 1}), 1.0);
    const Instrument therm = thermalising_instrument(spectral_measure(diag({0, 1})), tau);
    const ChoiMatrix c = choi_of_operation(therm.operation(0), 2);
    CHECK(choi_rank(c) == 2);
    // output (x) input ordering: thermalising Choi is tau (x) E^T
    CHECK(dist(c.matrix, kron(tau.matrix(), diag({1, 0}))) < 1e-14);
}

TEST_CASE("Choi-Kraus round trip reproduces the action") {
    Rng rng(16);
    for (int t = 0; t < 20; ++t) {
        const std::size_t d = 2 + t % 2;
        KrausSet ks;
        for (int i = 0; i < 3; ++i) ks.push_back(ginibre(d, d, rng) * 0.4);
        const KrausSet back = kraus_from_choi(choi_of_operation(ks, d));
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                const ComplexMatrix basis = ket(d, i) * ket(d, j).adjoint();
                CHECK(dist(apply_operation(ks, basis), apply_operation(back, basis)) < 1e-9);
            }
        const State rho = random_state(d, rng);
        CHECK(dist(apply_operation(ks, rho.matrix()), apply_operation(back, rho.matrix())) < 1e-9);
    }
}

TEST_CASE("superoperator matches the Kraus action on vectorised inputs") {
    Rng rng(17);
    const KrausSet ks{ginibre(2, 3, rng), ginibre(2, 3, rng)};
    const ComplexMatrix s = superoperator(ks, 3, 2);
    const ComplexMatrix rho = random_state(3, rng).matrix();
    const ComplexMatrix out = apply_operation(ks, rho);
    ComplexVector v(9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) v(i * 3 + j) = rho(i, j);
    const ComplexVector w = s * v;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(std::abs(w(i * 2 + j) - out(i, j)) < 1e-12);
}
