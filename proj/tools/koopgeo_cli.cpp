// koopgeo command-line front end.
//
//   koopgeo run -s scenario.json [-o report.json] [--table conv.csv] [--seed N] [--rtol X] [-v]
//   koopgeo <task> ...          same flags; the scenario's task must match
//   koopgeo batch [-b batch.json] [scenario.json ...] [-d outdir] [-j jobs]
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 I/O error.

#include "koopgeo/errors.hpp"
#include "koopgeo/runner.hpp"
#include "koopgeo/scenario.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace koopgeo;

struct RunOptions {
    std::string scenario;
    std::string output = "-";
    std::string table;
    std::optional<std::uint64_t> seed;
    std::optional<double> rtol;
    bool verbose = false;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
    cmd->add_option("-s,--scenario", o.scenario, "scenario file (JSON)")->required();
    cmd->add_option("-o,--output", o.output, "report path, '-' for stdout");
    cmd->add_option("--table", o.table, "write the convergence table (CSV) here");
    cmd->add_option("--seed", o.seed, "override the scenario seed");
    cmd->add_option("--rtol", o.rtol, "override the refinement tolerance");
    cmd->add_flag("-v,--verbose", o.verbose, "progress and a summary on stderr");
}

void log(bool verbose, const std::string& msg) {
    if (verbose) std::cerr << "koopgeo: " << msg << '\n';
}

std::string summary(const Report& r) {
    const auto& doc = r.document;
    if (!r.ok) return std::string("failed (") + doc["error"]["kind"].get<std::string>() + "): " +
                      doc["error"]["message"].get<std::string>();
    const auto& res = doc["results"];
    for (const char* key : {"phase", "geometric_phase", "max_defect", "largest_gap"})
        if (res.contains(key)) return std::string("ok, ") + key + " = " + res[key].dump();
    return "ok";
}

Report load_and_run(const std::string& path, const RunOptions& o, const std::string& expected_task) {
    try {
        Scenario s = load_scenario(path);
        if (!expected_task.empty() && s.task() != expected_task)
            throw ConfigError("task", "scenario task '" + std::string(s.task()) + "' does not match subcommand '" +
                                          expected_task + "'");
        apply_overrides(s, o.seed, o.rtol);
        log(o.verbose, "running " + std::string(s.task()) + " scenario '" + s.name + "'");
        return run(s);
    } catch (...) {
        return failed_report(classify(std::current_exception()));
    }
}

int single(const RunOptions& o, const std::string& expected_task) {
    Report report = load_and_run(o.scenario, o, expected_task);
    log(o.verbose, summary(report));
    int code = report.exit_code;
    try {
        if (o.output == "-")
            std::cout << report_text(report);
        else
            write_report(report, o.output);
    } catch (...) {
        const ErrorInfo e = classify(std::current_exception());
        std::cerr << "koopgeo: " << e.message << '\n';
        return e.exit_code;
    }
    if (!report.ok) {
        std::cerr << "koopgeo: " << summary(report) << '\n';
        return code;
    }
    if (!o.table.empty()) {
        try {
            emit_convergence_table(report, o.table);
            log(o.verbose, "wrote convergence table " + o.table);
        } catch (...) {
            const ErrorInfo e = classify(std::current_exception());
            std::cerr << "koopgeo: " << e.message << '\n';
            return e.exit_code;
        }
    }
    return code;
}

struct BatchOptions {
    std::string batch_file;
    std::vector<std::string> scenarios;
    std::string out_dir = ".";
    unsigned jobs = 0;
};

std::vector<std::string> batch_entries(const BatchOptions& b) {
    std::vector<std::string> out;
    if (!b.batch_file.empty()) {
        std::ifstream in(b.batch_file);
        if (!in) throw IoError("cannot open batch file " + b.batch_file);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("<batch>", std::string("malformed JSON: ") + e.what());
        }
        if (!doc.is_object() || !doc.contains("scenarios") || !doc["scenarios"].is_array())
            throw ConfigError("scenarios", "batch file needs a 'scenarios' array of paths");
        const std::filesystem::path base = std::filesystem::path(b.batch_file).parent_path();
        for (const auto& e : doc["scenarios"]) {
            if (!e.is_string()) throw ConfigError("scenarios", "entries must be paths");
            std::filesystem::path p = e.get<std::string>();
            out.push_back((p.is_relative() ? base / p : p).string());
        }
    }
    out.insert(out.end(), b.scenarios.begin(), b.scenarios.end());
    if (out.empty()) throw ConfigError("scenarios", "nothing to run");
    return out;
}

int batch(const BatchOptions& b) {
    std::vector<std::string> paths;
    try {
        paths = batch_entries(b);
        std::filesystem::create_directories(b.out_dir);
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "koopgeo: " << e.what() << '\n';
        return exit_code::io;
    } catch (...) {
        const ErrorInfo e = classify(std::current_exception());
        std::cerr << "koopgeo: " << e.message << '\n';
        return e.exit_code;
    }

    const unsigned jobs = b.jobs ? b.jobs : std::max(1u, std::thread::hardware_concurrency());
    const RunOptions o;
    std::vector<Report> reports(paths.size());
    // Scenarios are independent; each worker runs every jobs-th entry.
    std::vector<std::future<void>> workers;
    for (unsigned w = 0; w < std::min<std::size_t>(jobs, paths.size()); ++w) {
        workers.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < paths.size(); i += jobs) reports[i] = load_and_run(paths[i], o, "");
        }));
    }
    for (auto& f : workers) f.get();

    int worst = exit_code::ok;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const std::filesystem::path out =
            std::filesystem::path(b.out_dir) / (std::filesystem::path(paths[i]).stem().string() + ".report.json");
        int code = reports[i].exit_code;
        try {
            write_report(reports[i], out);
        } catch (...) {
            code = exit_code::io;
        }
        std::cout << paths[i] << ": " << summary(reports[i]) << '\n';
        worst = std::max(worst, code);
    }
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"koopgeo: geometric phases of Koopman operators on tori"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_version));

    RunOptions opts;
    auto* run_cmd = app.add_subcommand("run", "run a scenario of any task");
    add_run_options(run_cmd, opts);
    for (const char* task : {"unitarity", "holonomy", "moving_frame", "hannay", "holonomy_sample"}) {
        auto* cmd = app.add_subcommand(task, std::string("run a '") + task + "' scenario");
        add_run_options(cmd, opts);
    }

    BatchOptions bopts;
    auto* batch_cmd = app.add_subcommand("batch", "run several scenarios, reports into a directory");
    batch_cmd->add_option("-b,--batch", bopts.batch_file, "JSON file with a 'scenarios' array");
    batch_cmd->add_option("scenarios", bopts.scenarios, "scenario files");
    batch_cmd->add_option("-d,--output-dir", bopts.out_dir, "directory for <name>.report.json");
    batch_cmd->add_option("-j,--jobs", bopts.jobs, "parallel workers (default: hardware threads)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code::config;
    }

    if (batch_cmd->parsed()) return batch(bopts);
    for (auto* cmd : app.get_subcommands()) {
        if (cmd == run_cmd) return single(opts, "");
        return single(opts, cmd->get_name());
    }
    return exit_code::internal;
}
