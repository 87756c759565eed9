// scenario.hpp - scenario/sweep files, deterministic check execution and reports

#pragma once

#include "thermeas/io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace thermeas::scenario {

using io::InputError;
using io::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

inline const std::vector<std::string>& known_checks() {
    static const std::vector<std::string> names{
        "free_scheme", "second_law",         "covariant",       "gibbs_preserving", "nuclear",
        "prop2",       "quasi_complete",     "thermal_observable", "joint_observable", "post_processing",
        "refine",      "moments",            "skew_chain",      "heat_duality"};
    return names;
}

// Accepted spellings that map onto a known check.
inline std::string canonical_check(const std::string& name) { return name == "covariance" ? "covariant" : name; }

inline bool is_known_check(const std::string& name) {
    const auto& known = known_checks();
    return std::find(known.begin(), known.end(), canonical_check(name)) != known.end();
}

// Stream ids for derived seeds.
enum SeedStream : std::uint64_t { kSchemeStream = 1, kStatesStream = 2 };

struct ObservableSpec {
    enum class Kind { Explicit, Spectral };
    Kind kind = Kind::Spectral;
    std::vector<std::string> outcomes;
    std::vector<ComplexMatrix> effects;
};

struct InstrumentSpec {
    enum class Kind { Luders, Thermalising, Kraus };
    Kind kind = Kind::Luders;
    ObservableSpec observable;          // Luders, Thermalising
    std::vector<std::string> outcomes;  // Kraus
    std::vector<KrausSet> kraus_sets;   // Kraus
};

struct SchemeSpec {
    enum class Kind { Swap, RandomBlock, Kraus };
    Kind kind = Kind::Swap;
    std::optional<ObservableSpec> pointer;
    std::size_t mixture_size = 3;
    std::optional<std::uint64_t> seed;
    KrausSet kraus;
};

struct StateSpec {
    enum class Kind { Matrix, Pure, Ground, Gibbs, MaximallyMixed };
    std::string name;
    Kind kind = Kind::Ground;
    ComplexMatrix matrix;
    ComplexVector amplitudes;
};

struct RandomStatesSpec {
    std::size_t count = 0;
    std::optional<std::uint64_t> seed;
    std::size_t rank = 0; // 0 = full rank
};

struct Tolerances {
    double theorem = kTheoremTol;
    double validation = kValidationTol;
};

struct Scenario {
    int schema_version = kSchemaVersion;
    std::string name;
    ComplexMatrix system_hamiltonian;
    std::optional<ComplexMatrix> probe_hamiltonian;
    double beta = 1.0;
    std::uint64_t seed = 0;
    std::optional<SchemeSpec> scheme;
    std::optional<InstrumentSpec> instrument;
    std::optional<ObservableSpec> observable;
    std::vector<StateSpec> states;
    RandomStatesSpec random_states;
    std::vector<std::string> checks;
    Tolerances tolerances;
};

// ---------------------------------------------------------------------------
// JSON <-> Scenario

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw InputError(io::child(path, key), "missing");
    return j[key];
}

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw InputError(path, "expected a number");
    return j.get<double>();
}

inline std::uint64_t unsigned_int(const json& j, const std::string& path) {
    if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0))
        throw InputError(path, "expected a non-negative integer");
    return j.get<std::uint64_t>();
}

inline std::string string(const json& j, const std::string& path) {
    if (!j.is_string()) throw InputError(path, "expected a string");
    return j.get<std::string>();
}

inline void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; });
        if (!ok) throw InputError(io::child(path, it.key()), "unknown field");
    }
}

} // namespace detail

inline json to_json(const ObservableSpec& s) {
    if (s.kind == ObservableSpec::Kind::Spectral) return {{"kind", "spectral"}};
    json effects = json::array();
    for (const auto& e : s.effects) effects.push_back(io::matrix_to_json(e));
    return {{"kind", "explicit"}, {"outcomes", s.outcomes}, {"effects", effects}};
}

inline ObservableSpec observable_spec_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) throw InputError(path, "expected an observable object");
    detail::reject_unknown(j, path, {"kind", "outcomes", "effects"});
    ObservableSpec s;
    const std::string kind = j.contains("kind") ? detail::string(j["kind"], io::child(path, "kind"))
                                                : (j.contains("effects") ? "explicit" : "");
    if (kind == "spectral") {
        s.kind = ObservableSpec::Kind::Spectral;
        return s;
    }
    if (kind != "explicit") throw InputError(io::child(path, "kind"), "expected \"spectral\" or \"explicit\"");
    s.kind = ObservableSpec::Kind::Explicit;
    const auto& je = detail::require(j, "effects", path);
    if (!je.is_array() || je.empty()) throw InputError(io::child(path, "effects"), "expected a non-empty list");
    for (std::size_t i = 0; i < je.size(); ++i)
        s.effects.push_back(io::matrix_from_json(je[i], io::child(io::child(path, "effects"), i)));
    s.outcomes = j.contains("outcomes") ? io::labels_from_json(j["outcomes"], io::child(path, "outcomes"))
                                        : default_labels(s.effects.size());
    if (s.outcomes.size() != s.effects.size())
        throw InputError(io::child(path, "outcomes"), "label count differs from effect count");
    return s;
}

inline json to_json(const InstrumentSpec& s) {
    switch (s.kind) {
    case InstrumentSpec::Kind::Luders: return {{"type", "luders"}, {"observable", to_json(s.observable)}};
    case InstrumentSpec::Kind::Thermalising: return {{"type", "thermalising"}, {"observable", to_json(s.observable)}};
    case InstrumentSpec::Kind::Kraus: {
        json sets = json::array();
        for (const auto& ks : s.kraus_sets) sets.push_back(io::kraus_to_json(ks));
        return {{"type", "kraus"}, {"outcomes", s.outcomes}, {"kraus_sets", sets}};
    }
    }
    return {};
}

inline InstrumentSpec instrument_spec_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) throw InputError(path, "expected an instrument object");
    detail::reject_unknown(j, path, {"type", "observable", "outcomes", "kraus_sets"});
    InstrumentSpec s;
    const std::string type = detail::string(detail::require(j, "type", path), io::child(path, "type"));
    if (type == "luders" || type == "thermalising") {
        s.kind = type == "luders" ? InstrumentSpec::Kind::Luders : InstrumentSpec::Kind::Thermalising;
        s.observable = observable_spec_from_json(detail::require(j, "observable", path), io::child(path, "observable"));
    } else if (type == "kraus") {
        s.kind = InstrumentSpec::Kind::Kraus;
        const auto& js = detail::require(j, "kraus_sets", path);
        if (!js.is_array() || js.empty()) throw InputError(io::child(path, "kraus_sets"), "expected a non-empty list");
        for (std::size_t i = 0; i < js.size(); ++i)
            s.kraus_sets.push_back(io::kraus_from_json(js[i], io::child(io::child(path, "kraus_sets"), i)));
        s.outcomes = j.contains("outcomes") ? io::labels_from_json(j["outcomes"], io::child(path, "outcomes"))
                                            : default_labels(s.kraus_sets.size());
        if (s.outcomes.size() != s.kraus_sets.size())
            throw InputError(io::child(path, "outcomes"), "label count differs from operation count");
    } else {
        throw InputError(io::child(path, "type"), "expected \"luders\", \"thermalising\" or \"kraus\"");
    }
    return s;
}

inline json to_json(const SchemeSpec& s) {
    json j;
    switch (s.kind) {
    case SchemeSpec::Kind::Swap: j["type"] = "swap"; break;
    case SchemeSpec::Kind::RandomBlock:
        j["type"] = "random_block";
        j["mixture_size"] = s.mixture_size;
        break;
    case SchemeSpec::Kind::Kraus:
        j["type"] = "kraus";
        j["kraus"] = io::kraus_to_json(s.kraus);
        break;
    }
    if (s.seed) j["seed"] = *s.seed;
    if (s.pointer) j["pointer"] = to_json(*s.pointer);
    return j;
}

inline SchemeSpec scheme_spec_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) throw InputError(path, "expected a scheme object");
    detail::reject_unknown(j, path, {"type", "pointer", "mixture_size", "seed", "kraus"});
    SchemeSpec s;
    const std::string type = detail::string(detail::require(j, "type", path), io::child(path, "type"));
    if (type == "swap") {
        s.kind = SchemeSpec::Kind::Swap;
    } else if (type == "random_block") {
        s.kind = SchemeSpec::Kind::RandomBlock;
        if (j.contains("mixture_size")) {
            s.mixture_size = detail::unsigned_int(j["mixture_size"], io::child(path, "mixture_size"));
            if (s.mixture_size == 0) throw InputError(io::child(path, "mixture_size"), "must be positive");
        }
    } else if (type == "kraus") {
        s.kind = SchemeSpec::Kind::Kraus;
        s.kraus = io::kraus_from_json(detail::require(j, "kraus", path), io::child(path, "kraus"));
        if (s.kraus.empty()) throw InputError(io::child(path, "kraus"), "expected at least one Kraus operator");
    } else {
        throw InputError(io::child(path, "type"), "expected \"swap\", \"random_block\" or \"kraus\"");
    }
    if (j.contains("seed")) s.seed = detail::unsigned_int(j["seed"], io::child(path, "seed"));
    if (j.contains("pointer")) s.pointer = observable_spec_from_json(j["pointer"], io::child(path, "pointer"));
    return s;
}

inline json to_json(const StateSpec& s) {
    json j{{"name", s.name}};
    switch (s.kind) {
    case StateSpec::Kind::Matrix: j["matrix"] = io::matrix_to_json(s.matrix); break;
    case StateSpec::Kind::Pure: j["pure"] = io::vector_to_json(s.amplitudes); break;
    case StateSpec::Kind::Ground: j["kind"] = "ground"; break;
    case StateSpec::Kind::Gibbs: j["kind"] = "gibbs"; break;
    case StateSpec::Kind::MaximallyMixed: j["kind"] = "maximally_mixed"; break;
    }
    return j;
}

inline StateSpec state_spec_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) throw InputError(path, "expected a state object");
    detail::reject_unknown(j, path, {"name", "kind", "matrix", "pure"});
    StateSpec s;
    s.name = detail::string(detail::require(j, "name", path), io::child(path, "name"));
    if (j.contains("matrix")) {
        s.kind = StateSpec::Kind::Matrix;
        s.matrix = io::matrix_from_json(j["matrix"], io::child(path, "matrix"));
    } else if (j.contains("pure")) {
        s.kind = StateSpec::Kind::Pure;
        s.amplitudes = io::vector_from_json(j["pure"], io::child(path, "pure"));
        if (s.amplitudes.norm() == 0.0) throw InputError(io::child(path, "pure"), "zero vector");
    } else {
        const std::string kind = detail::string(detail::require(j, "kind", path), io::child(path, "kind"));
        if (kind == "ground") s.kind = StateSpec::Kind::Ground;
        else if (kind == "gibbs") s.kind = StateSpec::Kind::Gibbs;
        else if (kind == "maximally_mixed") s.kind = StateSpec::Kind::MaximallyMixed;
        else throw InputError(io::child(path, "kind"), "expected \"ground\", \"gibbs\" or \"maximally_mixed\"");
    }
    return s;
}

inline json to_json(const Scenario& s) {
    json j;
    j["schema_version"] = s.schema_version;
    j["name"] = s.name;
    j["system_hamiltonian"] = io::matrix_to_json(s.system_hamiltonian);
    if (s.probe_hamiltonian) j["probe_hamiltonian"] = io::matrix_to_json(*s.probe_hamiltonian);
    j["beta"] = s.beta;
    j["seed"] = s.seed;
    if (s.scheme) j["scheme"] = to_json(*s.scheme);
    if (s.instrument) j["instrument"] = to_json(*s.instrument);
    if (s.observable) j["observable"] = to_json(*s.observable);
    json named = json::array();
    for (const auto& st : s.states) named.push_back(to_json(st));
    json random{{"count", s.random_states.count}, {"rank", s.random_states.rank}};
    if (s.random_states.seed) random["seed"] = *s.random_states.seed;
    j["states"] = {{"named", named}, {"random", random}};
    j["checks"] = s.checks;
    j["tolerances"] = {{"theorem", s.tolerances.theorem}, {"validation", s.tolerances.validation}};
    return j;
}

inline Scenario scenario_from_json(const json& j, const std::string& path = "") {
    if (!j.is_object()) throw InputError(path, "expected a scenario object");
    detail::reject_unknown(j, path,
                           {"schema_version", "name", "system_hamiltonian", "probe_hamiltonian", "beta", "seed", "scheme",
                            "instrument", "observable", "states", "checks", "tolerances"});
    Scenario s;
    const auto version = detail::unsigned_int(detail::require(j, "schema_version", path), io::child(path, "schema_version"));
    if (version != kSchemaVersion)
        throw InputError(io::child(path, "schema_version"), "unsupported schema version " + std::to_string(version));
    if (j.contains("name")) s.name = detail::string(j["name"], io::child(path, "name"));
    s.system_hamiltonian =
        io::matrix_from_json(detail::require(j, "system_hamiltonian", path), io::child(path, "system_hamiltonian"));
    if (j.contains("probe_hamiltonian"))
        s.probe_hamiltonian = io::matrix_from_json(j["probe_hamiltonian"], io::child(path, "probe_hamiltonian"));
    s.beta = detail::number(detail::require(j, "beta", path), io::child(path, "beta"));
    if (j.contains("seed")) s.seed = detail::unsigned_int(j["seed"], io::child(path, "seed"));
    if (j.contains("scheme")) s.scheme = scheme_spec_from_json(j["scheme"], io::child(path, "scheme"));
    if (j.contains("instrument")) s.instrument = instrument_spec_from_json(j["instrument"], io::child(path, "instrument"));
    if (j.contains("observable")) s.observable = observable_spec_from_json(j["observable"], io::child(path, "observable"));
    if (j.contains("states")) {
        const std::string sp = io::child(path, "states");
        const auto& js = j["states"];
        if (!js.is_object()) throw InputError(sp, "expected {\"named\": [...], \"random\": {...}}");
        detail::reject_unknown(js, sp, {"named", "random"});
        if (js.contains("named")) {
            const auto& jn = js["named"];
            if (!jn.is_array()) throw InputError(io::child(sp, "named"), "expected a list");
            for (std::size_t i = 0; i < jn.size(); ++i)
                s.states.push_back(state_spec_from_json(jn[i], io::child(io::child(sp, "named"), i)));
        }
        if (js.contains("random")) {
            const std::string rp = io::child(sp, "random");
            const auto& jr = js["random"];
            if (!jr.is_object()) throw InputError(rp, "expected an object");
            detail::reject_unknown(jr, rp, {"count", "seed", "rank"});
            if (jr.contains("count")) s.random_states.count = detail::unsigned_int(jr["count"], io::child(rp, "count"));
            if (jr.contains("seed")) s.random_states.seed = detail::unsigned_int(jr["seed"], io::child(rp, "seed"));
            if (jr.contains("rank")) s.random_states.rank = detail::unsigned_int(jr["rank"], io::child(rp, "rank"));
        }
    }
    if (j.contains("checks")) {
        const std::string cp = io::child(path, "checks");
        if (!j["checks"].is_array()) throw InputError(cp, "expected a list of check names");
        for (std::size_t i = 0; i < j["checks"].size(); ++i) {
            std::string name = detail::string(j["checks"][i], io::child(cp, i));
            if (!is_known_check(name))
                throw InputError(io::child(cp, i), "unknown check \"" + name + "\"");
            s.checks.push_back(std::move(name));
        }
    }
    if (j.contains("tolerances")) {
        const std::string tp = io::child(path, "tolerances");
        const auto& jt = j["tolerances"];
        if (!jt.is_object()) throw InputError(tp, "expected an object");
        detail::reject_unknown(jt, tp, {"theorem", "validation"});
        if (jt.contains("theorem")) s.tolerances.theorem = detail::number(jt["theorem"], io::child(tp, "theorem"));
        if (jt.contains("validation"))
            s.tolerances.validation = detail::number(jt["validation"], io::child(tp, "validation"));
        if (!(s.tolerances.theorem > 0.0) || !(s.tolerances.validation > 0.0))
            throw InputError(tp, "tolerances must be positive");
    }
    return s;
}

// ---------------------------------------------------------------------------
// Resolution: specs -> validated objects

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<double> tolerance;
    unsigned jobs = 1;
    bool timing = false;
};

struct ResolvedScenario {
    Scenario scenario; // with overrides and derived seeds filled in
    std::optional<PreparedScheme> prepared;
    std::optional<Instrument> instrument;
    std::optional<Observable> observable;
    std::vector<std::pair<std::string, State>> states;
};

namespace detail {

inline Observable build_observable(const ObservableSpec& spec, const ComplexMatrix& h, double tol,
                                   const std::string& path) {
    if (spec.kind == ObservableSpec::Kind::Spectral) return io::at_path(path, [&] { return spectral_measure(h); });
    return io::at_path(path, [&] { return Observable(spec.outcomes, spec.effects, tol); });
}

inline State build_state(const StateSpec& spec, const ComplexMatrix& h, double beta, double tol,
                         const std::string& path) {
    const auto d = static_cast<std::size_t>(h.rows());
    return io::at_path(path, [&]() -> State {
        switch (spec.kind) {
        case StateSpec::Kind::Matrix: {
            if (static_cast<std::size_t>(spec.matrix.rows()) != d) throw ValidationError("state dimension differs from H_S");
            return State(spec.matrix, tol);
        }
        case StateSpec::Kind::Pure:
            if (static_cast<std::size_t>(spec.amplitudes.size()) != d) throw ValidationError("state dimension differs from H_S");
            return pure_state(spec.amplitudes);
        case StateSpec::Kind::Ground: {
            const EigenPairs eig = eigh(h, "system Hamiltonian");
            return pure_state(eig.vectors.col(0));
        }
        case StateSpec::Kind::Gibbs: return gibbs_state(h, beta);
        case StateSpec::Kind::MaximallyMixed: return maximally_mixed(d);
        }
        throw ValidationError("unknown state kind");
    });
}

inline bool needs(const Scenario& s, std::initializer_list<const char*> names) {
    for (const auto& c : s.checks)
        for (const char* n : names)
            if (canonical_check(c) == n) return true;
    return false;
}

} // namespace detail

inline ResolvedScenario resolve(Scenario s, const RunOptions& opt = {}) {
    if (opt.seed) s.seed = *opt.seed;
    if (opt.tolerance) s.tolerances.theorem = *opt.tolerance;
    const double vtol = s.tolerances.validation;
    const double ttol = s.tolerances.theorem;

    const ComplexMatrix hs = io::at_path("system_hamiltonian", [&] { return hermitize(s.system_hamiltonian, "H_S", vtol); });
    if (!std::isfinite(s.beta) || !(s.beta > 0.0)) throw InputError("beta", "must be finite and positive");
    if (s.scheme) {
        if (s.scheme->kind == SchemeSpec::Kind::Swap && !s.probe_hamiltonian) s.probe_hamiltonian = s.system_hamiltonian;
        if (s.scheme->kind == SchemeSpec::Kind::RandomBlock && !s.scheme->seed)
            s.scheme->seed = derive_seed(s.seed, kSchemeStream);
        if (!s.scheme->pointer) s.scheme->pointer = ObservableSpec{};
    }
    if (s.random_states.count > 0 && !s.random_states.seed) s.random_states.seed = derive_seed(s.seed, kStatesStream);

    ResolvedScenario r{s, std::nullopt, std::nullopt, std::nullopt, {}};

    if (s.scheme) {
        const auto& sp = *s.scheme;
        if (sp.kind != SchemeSpec::Kind::Swap && !s.probe_hamiltonian)
            throw InputError("probe_hamiltonian", "required by the \"" + to_json(sp)["type"].get<std::string>() + "\" scheme");
        const ComplexMatrix ha = io::at_path("probe_hamiltonian", [&] { return hermitize(*s.probe_hamiltonian, "H_A", vtol); });
        MeasurementScheme scheme = io::at_path("scheme", [&]() -> MeasurementScheme {
            switch (sp.kind) {
            case SchemeSpec::Kind::Swap: {
                if (ha.rows() != hs.rows() || (ha - hs).norm() > vtol)
                    throw ValidationError("the swap scheme needs probe_hamiltonian == system_hamiltonian");
                const Observable e = detail::build_observable(*sp.pointer, hs, vtol, "scheme.pointer");
                try {
                    return trivial_scheme(e, hs, s.beta, ttol);
                } catch (const PreconditionError& err) {
                    throw ValidationError(err.what());
                }
            }
            case SchemeSpec::Kind::RandomBlock: {
                const Observable z = detail::build_observable(*sp.pointer, ha, vtol, "scheme.pointer");
                try {
                    return random_free_scheme(hs, ha, s.beta, z, *sp.seed, sp.mixture_size, ttol);
                } catch (const PreconditionError& err) {
                    throw ValidationError(err.what());
                }
            }
            case SchemeSpec::Kind::Kraus: {
                const Observable z = detail::build_observable(*sp.pointer, ha, vtol, "scheme.pointer");
                return MeasurementScheme(hs, ha, s.beta, KrausChannel(sp.kraus, vtol), z);
            }
            }
            throw ValidationError("unknown scheme type");
        });
        r.prepared.emplace(std::move(scheme), ttol);
    }

    if (s.instrument) {
        const auto& is = *s.instrument;
        r.instrument = io::at_path("instrument", [&]() -> Instrument {
            switch (is.kind) {
            case InstrumentSpec::Kind::Luders:
                return luders_instrument(detail::build_observable(is.observable, hs, vtol, "instrument.observable"));
            case InstrumentSpec::Kind::Thermalising:
                return thermalising_instrument(detail::build_observable(is.observable, hs, vtol, "instrument.observable"),
                                               gibbs_state(hs, s.beta));
            case InstrumentSpec::Kind::Kraus:
                return Instrument(is.outcomes, is.kraus_sets, static_cast<std::size_t>(hs.rows()), vtol);
            }
            throw ValidationError("unknown instrument type");
        });
    } else if (r.prepared) {
        r.instrument = r.prepared->instrument;
    }
    if (r.instrument && r.instrument->dim() != static_cast<std::size_t>(hs.rows()))
        throw InputError("instrument", "dimension differs from system_hamiltonian");

    if (s.observable)
        r.observable = detail::build_observable(*s.observable, hs, vtol, "observable");
    else if (r.instrument)
        r.observable = io::at_path("instrument", [&] { return induced_observable(*r.instrument, vtol); });
    if (r.observable && r.observable->dim() != static_cast<std::size_t>(hs.rows()))
        throw InputError("observable", "dimension differs from system_hamiltonian");

    for (std::size_t i = 0; i < s.states.size(); ++i)
        r.states.emplace_back(s.states[i].name,
                              detail::build_state(s.states[i], hs, s.beta, vtol, io::child("states.named", i)));
    if (s.random_states.count > 0) {
        Rng rng(*s.random_states.seed);
        const auto d = static_cast<std::size_t>(hs.rows());
        if (s.random_states.rank > d) throw InputError("states.random.rank", "exceeds the system dimension");
        for (std::size_t i = 0; i < s.random_states.count; ++i)
            r.states.emplace_back("random_" + std::to_string(i), random_state(d, rng, s.random_states.rank));
    }

    if (detail::needs(s, {"free_scheme", "moments", "heat_duality"}) && !r.prepared)
        throw InputError("scheme", "required by the requested checks");
    if (detail::needs(s, {"second_law"}) && !r.prepared && !r.instrument)
        throw InputError("scheme", "second_law needs a scheme (or an instrument for diagnostics)");
    if (detail::needs(s, {"covariant", "gibbs_preserving", "nuclear", "prop2", "quasi_complete", "skew_chain"}) &&
        !r.instrument)
        throw InputError("instrument", "required by the requested checks (give a scheme or an instrument)");
    if (detail::needs(s, {"thermal_observable", "joint_observable", "post_processing", "refine"}) && !r.observable)
        throw InputError("observable", "required by the requested checks");
    if (detail::needs(s, {"second_law", "skew_chain", "heat_duality"}) && r.states.empty())
        throw InputError("states", "the requested checks need at least one state");
    return r;
}

// ---------------------------------------------------------------------------
// Check execution

namespace detail {

// fn(i) for i in [0, n) on up to `jobs` threads; results in index order.
template <class F>
std::vector<json> parallel_map(std::size_t n, unsigned jobs, F&& fn) {
    std::vector<json> out(n);
    std::vector<std::exception_ptr> errors(n);
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    auto work = [&](unsigned w) {
        for (std::size_t i = w; i < n; i += workers) {
            try {
                out[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

inline json verdict_json(const ClassifierVerdict& v) {
    json j = io::to_json(v);
    j["check"] = j["name"];
    j.erase("name");
    return j;
}

inline json precondition_json(const std::string& check, const PreconditionError& e) {
    return {{"check", check}, {"verdict", false}, {"status", "precondition_failed"}, {"message", e.what()},
            {"defect", e.defect()}};
}

inline json run_check(const std::string& given, const ResolvedScenario& r, unsigned jobs) {
    const std::string name = canonical_check(given);
    const Scenario& s = r.scenario;
    const double tol = s.tolerances.theorem;
    const ComplexMatrix& hs = s.system_hamiltonian;
    const double beta = s.beta;

    if (name == "free_scheme") {
        json j = io::to_json(r.prepared->freeness);
        j["check"] = name;
        return j;
    }
    if (name == "moments") {
        const auto& sch = r.prepared->scheme;
        const ComplexMatrix h = sch.total_hamiltonian();
        std::vector<double> defects;
        for (unsigned k = 1; k <= kDefaultMaxMoment; ++k) defects.push_back(energy_moment_defect(sch.interaction(), h, k));
        const ComplexMatrix eq = kron(gibbs_state(sch.system_hamiltonian(), beta).matrix(), sch.probe_state().matrix());
        const double fixed = (sch.interaction().apply(eq) - eq).norm();
        const bool ok = fixed <= tol && std::all_of(defects.begin(), defects.end(), [&](double d) { return d <= tol; });
        return {{"check", name}, {"verdict", ok}, {"moment_defects", defects}, {"fixed_point_defect", fixed}, {"tolerance", tol}};
    }
    if (name == "second_law") {
        const bool diagnostic = !r.prepared;
        if (!diagnostic && !r.prepared->freeness.verdict) {
            try {
                second_law_report(*r.prepared, r.states.front().second, tol);
            } catch (const PreconditionError& e) {
                return precondition_json(name, e);
            }
        }
        const auto rows = parallel_map(r.states.size(), jobs, [&](std::size_t i) -> json {
            const auto& [label, rho] = r.states[i];
            const SecondLawResult res = diagnostic ? second_law_diagnostics(*r.instrument, rho, hs, beta, tol)
                                                   : second_law_report(*r.prepared, rho, tol);
            return {{"state", label}, {"work", io::to_json(res.work)}, {"second_law", io::to_json(res.law)}};
        });
        json j{{"check", name}, {"diagnostic", diagnostic}, {"tolerance", tol}};
        if (diagnostic) {
            j["verdict"] = nullptr;
        } else {
            bool ok = true;
            double worst_prop1 = std::numeric_limits<double>::infinity();
            for (const auto& row : rows) {
                ok = ok && row["second_law"]["verdict"].get<bool>();
                worst_prop1 = std::min(worst_prop1, row["second_law"]["prop1_slack"].get<double>());
            }
            j["verdict"] = ok;
            j["min_prop1_slack"] = worst_prop1;
        }
        j["states"] = rows;
        return j;
    }
    if (name == "heat_duality") {
        const auto rows = parallel_map(r.states.size(), jobs, [&](std::size_t i) -> json {
            const auto& [label, rho] = r.states[i];
            const HeatReport h = thermeas::detail::heat_report(r.prepared->scheme, r.prepared->conjugate,
                                                               r.prepared->instrument, rho.matrix());
            json row = io::to_json(h);
            row["state"] = label;
            return row;
        });
        double worst = 0.0;
        for (const auto& row : rows) worst = std::max(worst, row["duality_defect"].get<double>());
        return {{"check", name}, {"verdict", worst <= tol}, {"max_duality_defect", worst}, {"tolerance", tol}, {"states", rows}};
    }
    if (name == "skew_chain") {
        const auto rows = parallel_map(r.states.size(), jobs, [&](std::size_t i) -> json {
            const auto& [label, rho] = r.states[i];
            const SkewChain c = skew_chain(*r.instrument, hs, rho);
            return {{"state", label},           {"initial", c.initial},
                    {"outcome_sum", c.outcome_sum}, {"total", c.total},
                    {"first_slack", c.first_slack()}, {"second_slack", c.second_slack()}};
        });
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& row : rows)
            worst = std::min({worst, row["first_slack"].get<double>(), row["second_slack"].get<double>()});
        return {{"check", name}, {"verdict", worst >= -tol}, {"min_slack", worst}, {"tolerance", tol}, {"states", rows}};
    }
    if (name == "covariant") return verdict_json(is_covariant_instrument(*r.instrument, hs, tol));
    if (name == "gibbs_preserving") return verdict_json(is_gibbs_preserving(*r.instrument, hs, beta, tol));
    if (name == "nuclear") {
        const NuclearVerdict v = is_nuclear(*r.instrument, tol);
        json j = verdict_json(v.verdict);
        if (v.verdict.verdict) {
            json states = json::array();
            for (const auto& sigma : v.prepared_states) states.push_back(sigma ? io::matrix_to_json(*sigma) : json(nullptr));
            j["prepared_states"] = states;
        }
        return j;
    }
    if (name == "prop2") {
        try {
            return verdict_json(check_prop2(*r.instrument, hs, beta, tol));
        } catch (const PreconditionError& e) {
            return precondition_json(name, e);
        }
    }
    if (name == "quasi_complete") return verdict_json(is_quasi_complete(*r.instrument, std::max(tol, kValidationTol)));
    if (name == "thermal_observable") return verdict_json(is_thermal_observable(*r.observable, hs, tol));
    if (name == "joint_observable") {
        try {
            const JointObservable g = joint_with_hamiltonian(*r.observable, hs, tol);
            const bool ok = g.outcome_marginal_defect <= tol && g.energy_marginal_defect <= tol;
            return {{"check", name},
                    {"verdict", ok},
                    {"outcome_marginal_defect", g.outcome_marginal_defect},
                    {"energy_marginal_defect", g.energy_marginal_defect},
                    {"tolerance", tol},
                    {"joint", io::to_json(g.joint)}};
        } catch (const PreconditionError& e) {
            return precondition_json(name, e);
        }
    }
    if (name == "post_processing") {
        try {
            const PostProcessing p = post_processing_decomposition(*r.observable, hs, tol);
            const bool ok = p.reconstruction_defect <= tol && p.column_sum_defect <= tol;
            return {{"check", name},
                    {"verdict", ok},
                    {"matrix", p.matrix},
                    {"energies", p.energies},
                    {"reconstruction_defect", p.reconstruction_defect},
                    {"column_sum_defect", p.column_sum_defect},
                    {"tolerance", tol}};
        } catch (const PreconditionError& e) {
            return precondition_json(name, e);
        }
    }
    if (name == "refine") {
        const Refinement ref = refine_to_rank_one(*r.observable);
        const bool rank_one = is_rank_one(ref.refined);
        json parents = json::array();
        for (auto p : ref.parent) parents.push_back(r.observable->outcomes()[p]);
        return {{"check", name},
                {"verdict", rank_one && ref.coarse_graining_defect <= tol},
                {"rank_one", rank_one},
                {"coarse_graining_defect", ref.coarse_graining_defect},
                {"tolerance", tol},
                {"refined", io::to_json(ref.refined)},
                {"parent", parents}};
    }
    throw InputError("checks", "unknown check \"" + name + "\"");
}

} // namespace detail

struct RunOutcome {
    json report;
    int exit_code = 0; // 0 all verdicts true, 1 some check failed
};

inline RunOutcome run_scenario(const Scenario& scenario, const RunOptions& opt = {}) {
    const auto start = std::chrono::steady_clock::now();
    const ResolvedScenario r = resolve(scenario, opt);
    json results = json::array();
    json failures = json::array();
    for (const auto& name : r.scenario.checks) {
        json res = detail::run_check(name, r, opt.jobs);
        if (res["verdict"].is_boolean() && !res["verdict"].get<bool>()) failures.push_back(name);
        results.push_back(std::move(res));
    }
    json report{{"schema_version", kSchemaVersion},
                {"version", kVersion},
                {"scenario", to_json(r.scenario)},
                {"results", results},
                {"all_passed", failures.empty()},
                {"failures", failures}};
    if (opt.timing)
        report["timing_ms"] =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return {std::move(report), failures.empty() ? 0 : 1};
}

// ---------------------------------------------------------------------------
// Sweeps

struct Sweep {
    int schema_version = kSchemaVersion;
    Scenario base;
    std::string parameter; // "beta" | "seed"
    std::vector<double> betas;
    std::vector<std::uint64_t> seeds;

    std::size_t size() const { return parameter == "seed" ? seeds.size() : betas.size(); }
    std::optional<StateSpec> state;
};

inline json to_json(const Sweep& s) {
    json j{{"schema_version", s.schema_version},
           {"template", to_json(s.base)},
           {"axis", {{"parameter", s.parameter}}}};
    if (s.parameter == "seed") j["axis"]["values"] = s.seeds;
    else j["axis"]["values"] = s.betas;
    if (s.state) j["state"] = to_json(*s.state);
    return j;
}

inline Sweep sweep_from_json(const json& j) {
    if (!j.is_object()) throw InputError("", "expected a sweep object");
    detail::reject_unknown(j, "", {"schema_version", "template", "axis", "state"});
    Sweep s;
    const auto version = detail::unsigned_int(detail::require(j, "schema_version", ""), "schema_version");
    if (version != kSchemaVersion) throw InputError("schema_version", "unsupported schema version " + std::to_string(version));
    s.base = scenario_from_json(detail::require(j, "template", ""), "template");
    const auto& ja = detail::require(j, "axis", "");
    if (!ja.is_object()) throw InputError("axis", "expected an object");
    detail::reject_unknown(ja, "axis", {"parameter", "values", "range"});
    s.parameter = detail::string(detail::require(ja, "parameter", "axis"), "axis.parameter");
    if (s.parameter != "beta" && s.parameter != "seed")
        throw InputError("axis.parameter", "expected \"beta\" or \"seed\"");
    if (ja.contains("values")) {
        if (!ja["values"].is_array()) throw InputError("axis.values", "expected a list");
        for (std::size_t i = 0; i < ja["values"].size(); ++i) {
            const std::string p = io::child("axis.values", i);
            if (s.parameter == "seed") s.seeds.push_back(detail::unsigned_int(ja["values"][i], p));
            else s.betas.push_back(detail::number(ja["values"][i], p));
        }
    }
    if (ja.contains("range")) {
        if (s.parameter != "seed") throw InputError("axis.range", "only seed axes accept a range");
        const auto& jr = ja["range"];
        if (!jr.is_array() || jr.size() != 2) throw InputError("axis.range", "expected [first, last]");
        const auto lo = detail::unsigned_int(jr[0], "axis.range[0]");
        const auto hi = detail::unsigned_int(jr[1], "axis.range[1]");
        if (hi < lo) throw InputError("axis.range", "last is smaller than first");
        if (hi - lo >= 1000000) throw InputError("axis.range", "more than 10^6 grid points");
        for (auto v = lo; v <= hi; ++v) s.seeds.push_back(v);
    }
    if (j.contains("state")) s.state = state_spec_from_json(j["state"], "state");
    return s;
}

inline const std::vector<std::string>& sweep_columns() {
    static const std::vector<std::string> cols{
        "axis_value",       "beta",           "seed",          "extractable_work",
        "average_extractable_work", "outcome_divergence", "heat", "groenewold_gain",
        "prop1_slack",      "eq5_identity_defect", "eq5_bound_slack", "heat_bound_slack",
        "heat_duality_defect", "free_scheme_verdict", "second_law_verdict"};
    return cols;
}

namespace detail {

inline std::string csv_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace detail

struct SweepOutcome {
    std::string csv;
    int exit_code = 0;
};

inline SweepOutcome run_sweep(const Sweep& sweep, const RunOptions& opt = {}) {
    if (!sweep.base.scheme) throw InputError("template.scheme", "sweeps need a measurement scheme");
    std::ostringstream out;
    const auto& cols = sweep_columns();
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
    out << "\n";

    RunOptions base_opt = opt;
    const auto rows = detail::parallel_map(sweep.size(), opt.jobs, [&](std::size_t i) -> json {
        Scenario s = sweep.base;
        RunOptions o = base_opt;
        if (sweep.parameter == "beta") s.beta = sweep.betas[i];
        else o.seed = sweep.seeds[i];
        if (sweep.state) s.states = {*sweep.state};
        s.checks.clear();
        const ResolvedScenario r = resolve(s, o);
        if (r.states.empty()) throw InputError("state", "sweeps need a state (sweep.state or a template state)");
        const State& rho = r.states.front().second;
        const double tol = r.scenario.tolerances.theorem;
        const bool free = r.prepared->freeness.verdict;
        SecondLawResult res;
        if (free) {
            res = second_law_report(*r.prepared, rho, tol);
        } else {
            res.heat = thermeas::detail::heat_report(r.prepared->scheme, r.prepared->conjugate, r.prepared->instrument,
                                                     rho.matrix());
            res.work = work_report(r.prepared->instrument, rho, r.scenario.system_hamiltonian, r.scenario.beta, res.heat.heat);
            res.law = evaluate_second_law(res.work, tol, false);
        }
        return {{"axis_value", sweep.parameter == "seed" ? json(sweep.seeds[i]) : json(sweep.betas[i])},
                {"beta", r.scenario.beta},
                {"seed", r.scenario.seed},
                {"w", io::to_json(res.work)},
                {"l", io::to_json(res.law)},
                {"heat_duality_defect", res.heat.duality_defect},
                {"free", free},
                {"ok", free && res.law.verdict.value_or(false)}};
    });

    bool all_ok = true;
    for (const auto& row : rows) {
        const auto& w = row["w"];
        const auto& l = row["l"];
        const bool ok = row["ok"].get<bool>();
        all_ok = all_ok && ok;
        const auto& axis = row["axis_value"];
        if (axis.is_number_unsigned()) out << axis.get<std::uint64_t>();
        else out << detail::csv_number(axis.get<double>());
        out << ',' << detail::csv_number(row["beta"].get<double>()) << ',' << row["seed"].get<std::uint64_t>();
        for (const char* k : {"extractable_work", "average_extractable_work", "outcome_divergence", "heat", "groenewold_gain"})
            out << ',' << detail::csv_number(w[k].get<double>());
        for (const char* k : {"prop1_slack", "eq5_identity_defect", "eq5_bound_slack", "heat_bound_slack"})
            out << ',' << detail::csv_number(l[k].get<double>());
        out << ',' << detail::csv_number(row["heat_duality_defect"].get<double>()) << ','
            << (row["free"].get<bool>() ? "true" : "false") << ',' << (ok ? "true" : "false") << "\n";
    }
    return {out.str(), all_ok ? 0 : 1};
}

// ---------------------------------------------------------------------------
// File entry points

// Parses JSON text, reporting syntax errors as "<source>:<line>:<column>: ...".
inline json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw InputError(source + ":" + std::to_string(line) + ":" + std::to_string(col), "parse error: " + std::string(e.what()));
    }
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path, "cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_json_text(buf.str(), path);
}

// Serialised report text: pretty-printed JSON with a trailing newline.
inline std::string report_text(const json& report) { return report.dump(2) + "\n"; }

} // namespace thermeas::scenario
