// io.hpp - JSON encoding of matrices, quantum objects and reports
//
// Complex numbers are [re, im] pairs and matrices are row-major nested arrays.
// When reading, a plain number is accepted for a real entry and a flat list of
// real numbers is accepted as a diagonal matrix.

#pragma once

#include "thermeas/classify.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace thermeas::io {

using json = nlohmann::json;

// Input error located at a dotted JSON path ("scheme.pointer.effects[1]").
class InputError : public std::runtime_error {
public:
    InputError(const std::string& path, const std::string& message)
        : std::runtime_error((path.empty() ? std::string("<root>") : path) + ": " + message), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

inline std::string child(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline std::string child(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const json& j, const std::string& path) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw InputError(path, "expected a number or an [re, im] pair");
}

inline json matrix_to_json(const ComplexMatrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline ComplexMatrix matrix_from_json(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw InputError(path, "expected a non-empty matrix or diagonal list");
    if (std::all_of(j.begin(), j.end(), [](const json& v) { return v.is_number(); })) {
        ComplexMatrix m = ComplexMatrix::Zero(detail::idx(j.size()), detail::idx(j.size()));
        for (std::size_t i = 0; i < j.size(); ++i) m(detail::idx(i), detail::idx(i)) = j[i].get<double>();
        return m;
    }
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) throw InputError(path, "expected rows of entries");
    ComplexMatrix m(detail::idx(j.size()), detail::idx(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        const std::string rp = child(path, r);
        if (!j[r].is_array() || j[r].size() != cols) throw InputError(rp, "row length differs from the first row");
        for (std::size_t c = 0; c < cols; ++c) m(detail::idx(r), detail::idx(c)) = complex_from_json(j[r][c], child(rp, c));
    }
    return m;
}

inline json vector_to_json(const ComplexVector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
    return out;
}

inline ComplexVector vector_from_json(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw InputError(path, "expected a non-empty amplitude list");
    ComplexVector v(detail::idx(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(detail::idx(i)) = complex_from_json(j[i], child(path, i));
    return v;
}

inline json kraus_to_json(const KrausSet& ks) {
    json out = json::array();
    for (const auto& k : ks) out.push_back(matrix_to_json(k));
    return out;
}

inline KrausSet kraus_from_json(const json& j, const std::string& path) {
    if (!j.is_array()) throw InputError(path, "expected a list of Kraus matrices");
    KrausSet ks;
    for (std::size_t i = 0; i < j.size(); ++i) ks.push_back(matrix_from_json(j[i], child(path, i)));
    return ks;
}

inline std::vector<std::string> labels_from_json(const json& j, const std::string& path) {
    if (!j.is_array()) throw InputError(path, "expected a list of outcome labels");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_string()) throw InputError(child(path, i), "outcome label must be a string");
        out.push_back(j[i].get<std::string>());
    }
    return out;
}

// Runs a library constructor, re-raising its validation errors at `path`.
template <class F>
auto at_path(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ValidationError& e) {
        throw InputError(path, e.what());
    } catch (const DomainError& e) {
        throw InputError(path, e.what());
    }
}

inline json to_json(const State& s) { return {{"matrix", matrix_to_json(s.matrix())}}; }

inline State state_from_json(const json& j, const std::string& path, double tol = kValidationTol) {
    if (!j.is_object() || !j.contains("matrix")) throw InputError(path, "expected {\"matrix\": ...}");
    const ComplexMatrix m = matrix_from_json(j["matrix"], child(path, "matrix"));
    return at_path(path, [&] { return State(m, tol); });
}

inline json to_json(const Observable& e) {
    json effects = json::array();
    for (const auto& m : e.effects()) effects.push_back(matrix_to_json(m));
    return {{"outcomes", e.outcomes()}, {"effects", effects}};
}

inline Observable observable_from_json(const json& j, const std::string& path, double tol = kValidationTol) {
    if (!j.is_object() || !j.contains("effects")) throw InputError(path, "expected an object with \"effects\"");
    const auto& je = j["effects"];
    if (!je.is_array()) throw InputError(child(path, "effects"), "expected a list of matrices");
    std::vector<ComplexMatrix> effects;
    for (std::size_t i = 0; i < je.size(); ++i) effects.push_back(matrix_from_json(je[i], child(child(path, "effects"), i)));
    std::vector<std::string> labels =
        j.contains("outcomes") ? labels_from_json(j["outcomes"], child(path, "outcomes")) : default_labels(effects.size());
    return at_path(path, [&] { return Observable(std::move(labels), std::move(effects), tol); });
}

inline json to_json(const KrausChannel& ch) { return {{"kraus", kraus_to_json(ch.kraus())}}; }

inline KrausChannel channel_from_json(const json& j, const std::string& path, double tol = kValidationTol) {
    if (!j.is_object() || !j.contains("kraus")) throw InputError(path, "expected {\"kraus\": [...]}");
    KrausSet ks = kraus_from_json(j["kraus"], child(path, "kraus"));
    return at_path(path, [&] { return KrausChannel(std::move(ks), tol); });
}

inline json to_json(const Instrument& ins) {
    json sets = json::array();
    for (const auto& op : ins.operations()) sets.push_back(kraus_to_json(op));
    return {{"outcomes", ins.outcomes()}, {"kraus_sets", sets}, {"dim", ins.dim()}};
}

inline Instrument instrument_from_json(const json& j, const std::string& path, double tol = kValidationTol) {
    if (!j.is_object() || !j.contains("kraus_sets") || !j.contains("dim"))
        throw InputError(path, "expected an object with \"kraus_sets\" and \"dim\"");
    const auto& js = j["kraus_sets"];
    if (!js.is_array()) throw InputError(child(path, "kraus_sets"), "expected a list of Kraus lists");
    std::vector<KrausSet> sets;
    for (std::size_t i = 0; i < js.size(); ++i) sets.push_back(kraus_from_json(js[i], child(child(path, "kraus_sets"), i)));
    std::vector<std::string> labels =
        j.contains("outcomes") ? labels_from_json(j["outcomes"], child(path, "outcomes")) : default_labels(sets.size());
    const auto dim = j["dim"].get<std::size_t>();
    return at_path(path, [&] { return Instrument(std::move(labels), std::move(sets), dim, tol); });
}

inline json to_json(const ChoiMatrix& c) {
    return {{"matrix", matrix_to_json(c.matrix)}, {"in_dim", c.in_dim}, {"out_dim", c.out_dim}};
}

inline json to_json(const MeasurementScheme& s) {
    return {{"system_hamiltonian", matrix_to_json(s.system_hamiltonian())},
            {"probe_hamiltonian", matrix_to_json(s.probe_hamiltonian())},
            {"beta", s.beta()},
            {"interaction", to_json(s.interaction())},
            {"pointer", to_json(s.pointer())}};
}

inline MeasurementScheme scheme_from_json(const json& j, const std::string& path, double tol = kValidationTol) {
    for (const char* key : {"system_hamiltonian", "probe_hamiltonian", "beta", "interaction", "pointer"})
        if (!j.contains(key)) throw InputError(child(path, key), "missing");
    const ComplexMatrix hs = matrix_from_json(j["system_hamiltonian"], child(path, "system_hamiltonian"));
    const ComplexMatrix ha = matrix_from_json(j["probe_hamiltonian"], child(path, "probe_hamiltonian"));
    KrausChannel ch = channel_from_json(j["interaction"], child(path, "interaction"), tol);
    Observable z = observable_from_json(j["pointer"], child(path, "pointer"), tol);
    const double beta = j["beta"].get<double>();
    return at_path(path, [&] { return MeasurementScheme(hs, ha, beta, std::move(ch), std::move(z)); });
}

inline json to_json(const FreeSchemeReport& r) {
    return {{"gibbs_probe_ok", r.gibbs_probe_ok},
            {"bistochastic_defect", r.bistochastic_defect},
            {"energy_conservation_defects", r.energy_conservation_defects},
            {"yanase_defect", r.yanase_defect},
            {"tolerance", r.tolerance},
            {"verdict", r.verdict}};
}

inline json to_json(const WorkReport& w) {
    return {{"extractable_work", w.extractable_work},
            {"average_extractable_work", w.average_extractable_work},
            {"outcome_divergence", w.outcome_divergence},
            {"heat", w.heat},
            {"groenewold_gain", w.groenewold_gain},
            {"beta", w.beta}};
}

inline json to_json(const SecondLawReport& r) {
    json j = {{"prop1_slack", r.prop1_slack},
              {"eq5_identity_defect", r.eq5_identity_defect},
              {"eq5_bound_slack", r.eq5_bound_slack},
              {"heat_bound_slack", r.heat_bound_slack},
              {"tolerance", r.tolerance}};
    j["verdict"] = r.verdict ? json(*r.verdict) : json(nullptr);
    return j;
}

inline json to_json(const HeatReport& h) {
    return {{"heat", h.heat}, {"system_energy_change", h.system_energy_change}, {"duality_defect", h.duality_defect}};
}

inline json to_json(const ClassifierVerdict& v) {
    json w = json::object();
    if (v.witness.outcome) w["outcome"] = *v.witness.outcome;
    for (const auto& [k, val] : v.witness.values) w[k] = val;
    return {{"name", v.name}, {"verdict", v.verdict}, {"defect", v.defect}, {"tolerance", v.tolerance}, {"witness", w}};
}

} // namespace thermeas::io
