// thermeas - run scenario checks and parameter sweeps from JSON files

#include "thermeas/scenario.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

namespace sc = thermeas::scenario;

struct Options {
    std::string file;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    unsigned jobs = 1;
    bool timing = false;
};

void write_output(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw sc::InputError(path, "cannot open output file");
    out << text;
}

sc::RunOptions run_options(const Options& o) {
    sc::RunOptions r;
    r.seed = o.seed;
    r.tolerance = o.tol;
    r.jobs = o.jobs;
    r.timing = o.timing;
    return r;
}

// One-line JSON on stderr so scripts can pick up failures without parsing the report.
void failure_summary(const std::string& file, const nlohmann::json& failures) {
    std::cerr << nlohmann::json{{"file", file}, {"status", "check_failed"}, {"failures", failures}}.dump() << "\n";
}

void input_error(const std::string& file, const std::string& message) {
    std::cerr << nlohmann::json{{"file", file}, {"status", "input_error"}, {"message", message}}.dump() << "\n";
}

int run_check(const Options& o) {
    const auto scenario = sc::scenario_from_json(sc::read_json_file(o.file));
    const auto result = sc::run_scenario(scenario, run_options(o));
    write_output(sc::report_text(result.report), o.out);
    if (result.exit_code != 0) failure_summary(o.file, result.report["failures"]);
    return result.exit_code;
}

int run_sweep(const Options& o) {
    const auto sweep = sc::sweep_from_json(sc::read_json_file(o.file));
    const auto result = sc::run_sweep(sweep, run_options(o));
    write_output(result.csv, o.out);
    if (result.exit_code != 0) failure_summary(o.file, nlohmann::json::array({"second_law_verdict"}));
    return result.exit_code;
}

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("file", o.file, "Input JSON file")->required();
    cmd->add_option("--out", o.out, "Output path (default: stdout)");
    cmd->add_option("--seed", o.seed, "Override the scenario seed");
    cmd->add_option("--tol", o.tol, "Override the theorem tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--jobs", o.jobs, "Worker threads (results do not depend on it)")->check(CLI::Range(1u, 1024u));
    cmd->add_flag("--timing", o.timing, "Add wall-clock timing_ms to the report");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thermodynamically free measurement toolkit"};
    app.set_version_flag("--version", std::string(sc::kVersion));
    app.require_subcommand(1);
    Options opts;
    auto* check = app.add_subcommand("check", "Run the checks listed in a scenario file and emit a JSON report");
    auto* sweep = app.add_subcommand("sweep", "Evaluate a scenario template along a beta or seed axis and emit CSV");
    add_common(check, opts);
    add_common(sweep, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        return check->parsed() ? run_check(opts) : run_sweep(opts);
    } catch (const sc::InputError& e) {
        input_error(opts.file, e.what());
        return 2;
    } catch (const nlohmann::json::exception& e) {
        input_error(opts.file, e.what());
        return 2;
    } catch (const thermeas::ValidationError& e) {
        input_error(opts.file, e.what());
        return 2;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"file", opts.file}, {"status", "error"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }
}
