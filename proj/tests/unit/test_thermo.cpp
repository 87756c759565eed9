#include "support.hpp"

using namespace testing_support;
using Catch::Matchers::WithinAbs;

namespace {

MeasurementScheme resonant_scheme(std::uint64_t seed, std::size_t d, double beta) {
    const ComplexMatrix h = ladder(d, 0.6 + 0.1 * double(seed % 7));
    return random_free_scheme(h, h, beta, spectral_measure(h), seed, 1 + seed % 4);
}

State ground_state(const ComplexMatrix& h) { return pure_state(eigh(h).vectors.col(0)); }

} // namespace

TEST_CASE("extractable_work closed forms") {
    const ComplexMatrix h = diag({0, 0.4, 1.3});
    CHECK_THAT(extractable_work(gibbs_state(h, 0.7), h, 0.7), WithinAbs(0.0, 1e-12));
    CHECK_THAT(extractable_work(pure_state(ket(2, 0)), diag({0, 0}), 1.0), WithinAbs(std::log(2.0), 1e-12));
    CHECK_THAT(extractable_work(pure_state(ket(2, 1)), diag({0, std::log(2.0)}), 1.0), WithinAbs(std::log(3.0), 1e-12));
    // finite even far from equilibrium at large beta
    CHECK(std::isfinite(extractable_work(pure_state(ket(3, 2)), h, 200.0)));
    CHECK_THROWS_AS(extractable_work(pure_state(ket(2, 0)), h, 1.0), ValidationError);
    CHECK_THROWS_AS(extractable_work(pure_state(ket(3, 0)), h, 0.0), DomainError);
}

TEST_CASE("extractable_work is non-negative") {
    Rng rng(41);
    for (int t = 0; t < 50; ++t) {
        const std::size_t d = 2 + t % 3;
        const ComplexMatrix h = random_hermitian(d, rng);
        CHECK(extractable_work(random_state(d, rng, t % d), h, 0.2 + 0.1 * t) >= -1e-10);
    }
}

TEST_CASE("average_extractable_work examples") {
    Rng rng(42);
    const ComplexMatrix h = diag({0, 0.8, 1.5});
    const double beta = 1.1;
    const State tau = gibbs_state(h, beta);
    const Instrument therm = thermalising_instrument(random_commuting_observable(h, 2, rng), tau);
    CHECK_THAT(average_extractable_work(therm, random_state(3, rng), h, beta), WithinAbs(0.0, 1e-10));

    // Luders in the energy eigenbasis at equilibrium: beta^-1 times the Shannon entropy of the populations
    const Instrument lud = luders_instrument(spectral_measure(h));
    std::vector<double> pops;
    for (Eigen::Index i = 0; i < 3; ++i) pops.push_back(tau.matrix()(i, i).real());
    CHECK_THAT(average_extractable_work(lud, tau, h, beta), WithinAbs(shannon_entropy(pops) / beta, 1e-10));

    // idle scheme: every conditional state is the input itself
    const MeasurementScheme idle = idle_scheme(h, diag({0, 1}), beta);
    const State rho = random_state(3, rng);
    CHECK_THAT(average_extractable_work(induced_instrument(idle), rho, h, beta),
               WithinAbs(extractable_work(rho, h, beta), 1e-10));
}

TEST_CASE("outcome_divergence examples") {
    Rng rng(43);
    const ComplexMatrix h = diag({0, std::log(2.0)});
    const State tau = gibbs_state(h, 1.0);
    const Observable e = spectral_measure(h);
    CHECK_THAT(outcome_divergence(e, tau, h, 1.0), WithinAbs(0.0, 1e-12));
    CHECK_THAT(outcome_divergence(trivial_observable(2), random_state(2, rng), h, 1.0), WithinAbs(0.0, 1e-12));
    CHECK_THAT(outcome_divergence(e, pure_state(ket(2, 0)), h, 1.0), WithinAbs(std::log(1.5), 1e-12));

    // exactly-zero effects are skipped
    const Observable with_zero({"0", "1", "never"}, {diag({1, 0}), diag({0, 1}), diag({0, 0})});
    CHECK_THAT(outcome_divergence(with_zero, pure_state(ket(2, 0)), h, 1.0), WithinAbs(std::log(1.5), 1e-12));

    for (int t = 0; t < 30; ++t) {
        const Observable f = random_commuting_observable(random_hermitian(3, rng), 3, rng);
        CHECK(outcome_divergence(f, random_state(3, rng), diag({0, 1, 3}), 0.5) >= -1e-10);
    }
}

TEST_CASE("heat_absorbed examples") {
    Rng rng(44);
    const ComplexMatrix h = diag({0, 1.0});
    const double beta = 0.9;
    const State tau = gibbs_state(h, beta);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const MeasurementScheme s = resonant_scheme(seed, 2 + seed % 2, beta);
        CHECK_THAT(heat_absorbed(s, gibbs_state(s.system_hamiltonian(), beta)).heat, WithinAbs(0.0, 1e-9));
    }

    const MeasurementScheme swap = trivial_scheme(spectral_measure(h), h, beta);
    const HeatReport hr = heat_absorbed(swap, pure_state(ket(2, 0)));
    const double mean_energy = (h * tau.matrix()).trace().real();
    CHECK_THAT(hr.heat, WithinAbs(mean_energy - 0.0, 1e-12));
    CHECK(hr.heat >= 0.0);
    CHECK(hr.duality_defect < 1e-12);

    const MeasurementScheme idle = idle_scheme(h, diag({0, 2}), beta);
    const HeatReport none = heat_absorbed(idle, random_state(2, rng));
    CHECK_THAT(none.heat, WithinAbs(0.0, 1e-12));
    CHECK_THAT(none.system_energy_change, WithinAbs(0.0, 1e-12));
}

TEST_CASE("groenewold_gain examples") {
    Rng rng(45);
    const ComplexMatrix h = diag({0, 0.5, 1.7});
    const State rho = random_state(3, rng);
    CHECK_THAT(groenewold_gain(luders_instrument(spectral_measure(h)), rho), WithinAbs(von_neumann_entropy(rho), 1e-10));

    const State tau = gibbs_state(h, 1.4);
    const Instrument therm = thermalising_instrument(random_commuting_observable(h, 2, rng), tau);
    const double gain = groenewold_gain(therm, random_pure_state(3, rng));
    CHECK_THAT(gain, WithinAbs(-von_neumann_entropy(tau), 1e-10));
    CHECK(gain < 0.0);

    const Instrument id = instrument_from_kraus({"id"}, {{identity(3)}});
    CHECK_THAT(groenewold_gain(id, rho), WithinAbs(0.0, 1e-12));
}

TEST_CASE("skew_information examples") {
    Rng rng(46);
    const ComplexMatrix h = diag({0, 1, 2});
    CHECK_THAT(skew_information(h, gibbs_state(h, 1.0).matrix()), WithinAbs(0.0, 1e-12));
    CHECK_THAT(skew_information(pauli_z(), proj(plus())), WithinAbs(1.0, 1e-12));
    for (int t = 0; t < 20; ++t) {
        const ComplexMatrix rho = random_state(3, rng).matrix();
        const ComplexMatrix hh = random_hermitian(3, rng);
        const double p = 0.05 * (t + 1);
        CHECK_THAT(skew_information(hh, p * rho), WithinAbs(p * skew_information(hh, rho), 1e-10));
        CHECK(skew_information(hh, rho) >= -1e-10);
    }
}

TEST_CASE("second_law_report: swap scheme at equilibrium is all zeros") {
    const ComplexMatrix h = diag({0, 0.7, 1.1});
    const double beta = 1.2;
    const MeasurementScheme s = trivial_scheme(spectral_measure(h), h, beta);
    const auto res = second_law_report(s, gibbs_state(h, beta));
    REQUIRE(res.law.verdict.has_value());
    CHECK(*res.law.verdict);
    CHECK_THAT(res.work.extractable_work, WithinAbs(0.0, 1e-10));
    CHECK_THAT(res.work.average_extractable_work, WithinAbs(0.0, 1e-10));
    CHECK_THAT(res.work.outcome_divergence, WithinAbs(0.0, 1e-10));
    CHECK_THAT(res.work.heat, WithinAbs(0.0, 1e-10));
    CHECK_THAT(res.law.prop1_slack, WithinAbs(0.0, 1e-10));
    CHECK_THAT(res.law.eq5_identity_defect, WithinAbs(0.0, 1e-10));
}

TEST_CASE("second_law_report: swap scheme at the ground state has negative information gain") {
    const ComplexMatrix h = diag({0, 1});
    const MeasurementScheme s = trivial_scheme(spectral_measure(h), h, 0.8);
    const auto res = second_law_report(s, ground_state(h));
    CHECK(*res.law.verdict);
    CHECK(res.law.prop1_slack >= 0.0);
    CHECK(res.work.groenewold_gain < 0.0);
    CHECK(res.work.outcome_divergence > 0.0);
}

TEST_CASE("a nontrivial commuting observable can have zero divergence at the ground state") {
    // E_0 = diag(t1 / (1 - t0), 1, 0) has the same ground-state and equilibrium statistics.
    const ComplexMatrix h = diag({0, 1, 2});
    const double beta = 1.0;
    const ComplexMatrix tau = gibbs_state(h, beta).matrix();
    const double t0 = tau(0, 0).real();
    const double t1 = tau(1, 1).real();
    const ComplexMatrix e0 = diag({t1 / (1.0 - t0), 1.0, 0.0});
    const Observable e({"a", "b"}, {e0, identity(3) - e0});
    CHECK(triviality_defect(e) > 1e-3);
    const State g = ground_state(h);
    CHECK_THAT(outcome_divergence(e, g, h, beta), WithinAbs(0.0, 1e-12));
    const auto res = second_law_report(trivial_scheme(e, h, beta), g);
    CHECK(*res.law.verdict);
    // the information gain stays strictly negative
    CHECK(res.work.groenewold_gain < -1e-3);
}

TEST_CASE("second_law_report refuses non-free schemes") {
    const ComplexMatrix h = diag({0, 1});
    const MeasurementScheme s(h, h, 1.0, unitary_channel(swap_unitary(2, 2)), x_basis());
    try {
        second_law_report(s, gibbs_state(h, 1.0));
        FAIL("expected a precondition error");
    } catch (const PreconditionError& e) {
        CHECK(e.defect() > 0.1);
    }
}

TEST_CASE("second_law_diagnostics: Luders eigenbasis instrument beats the bound") {
    const ComplexMatrix h = diag({0, 1});
    const double beta = 1.0;
    const State tau = gibbs_state(h, beta);
    const auto res = second_law_diagnostics(luders_instrument(spectral_measure(h)), tau, h, beta);
    CHECK_FALSE(res.law.verdict.has_value());
    CHECK(res.work.average_extractable_work > res.work.extractable_work + 0.1);
    CHECK(res.law.prop1_slack < 0.0);
    CHECK(res.law.eq5_identity_defect < 1e-10);
}

TEST_CASE("second law holds over random free schemes and states") {
    Rng rng(47);
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const std::size_t d = 2 + seed % 2;
        const double beta = 0.3 + 0.1 * double(seed % 17);
        const PreparedScheme prepared(resonant_scheme(seed, d, beta));
        REQUIRE(prepared.freeness.verdict);
        for (int t = 0; t < 10; ++t) {
            const State rho = random_state(d, rng, t % 3 == 0 ? 1 : 0);
            const auto res = second_law_report(prepared, rho);
            CHECK(*res.law.verdict);
            CHECK(res.law.prop1_slack >= -1e-8);
            CHECK(res.law.eq5_identity_defect < 1e-8);
            CHECK(res.law.eq5_bound_slack >= -1e-8);
            CHECK(res.law.heat_bound_slack >= -1e-8);
            CHECK(res.heat.duality_defect < 1e-8);
            const DilationCheck dil = dilation_check(prepared.instrument, rho, prepared.scheme.system_hamiltonian(), beta);
            CHECK(dil.defect() < 1e-8);
            // the dilated relative entropy accounts for the whole bound slack
            CHECK_THAT(beta * res.law.prop1_slack,
                       WithinAbs(beta * res.work.extractable_work - dil.direct, 1e-8));
            const SkewChain chain = skew_chain(prepared.instrument, prepared.scheme.system_hamiltonian(), rho);
            CHECK(chain.first_slack() >= -1e-8);
            CHECK(chain.second_slack() >= -1e-8);
            ++checked;
        }
    }
    CHECK(checked == 400);
}

TEST_CASE("conditional_states drop negligible outcomes") {
    const Instrument lud = luders_instrument(spectral_measure(diag({0, 1})));
    const auto cs = conditional_states(lud, diag({1, 0}));
    REQUIRE(cs.size() == 1);
    CHECK(cs[0].outcome == 0);
    CHECK_THAT(cs[0].probability, WithinAbs(1.0, 1e-15));
}
