#pragma once

// Executes a Scenario and packages the outcome as a versioned JSON report.
//
//   {
//     "schema_version": 1,
//     "status": "ok" | "failed",
//     "scenario": <serialized scenario>,
//     "results": { ...task payload... },          // present when ok
//     "error": {"kind": "...", "message": "..."}, // present when failed
//     "provenance": {"tool", "version", "seed", "rtol", "tolerances"}
//   }

#include "koopgeo/holonomy.hpp"
#include "koopgeo/scenario.hpp"

#include "json.hpp"

#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace koopgeo {

inline constexpr int report_schema_version = 1;
inline constexpr const char* tool_name = "koopgeo";
inline constexpr const char* tool_version = "0.1.0";

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int internal = 1;
inline constexpr int config = 2;
inline constexpr int numerical = 3;
inline constexpr int io = 4;
}  // namespace exit_code

struct ErrorInfo {
    std::string kind;  // exception class name, e.g. "ConvergenceError"
    std::string message;
    int exit_code = exit_code::internal;
};

// Maps an in-flight exception onto the CLI exit-code scheme.
ErrorInfo classify(const std::exception_ptr& error);

struct Report {
    bool ok = false;
    int exit_code = exit_code::internal;
    nlohmann::json document;
    // Refinement sequence of the task, if it has one.
    std::optional<std::vector<RefinementLevel>> convergence;
};

// Never throws for computation failures; they become status "failed".
Report run(const Scenario& scenario);

// Report for a scenario that could not be loaded at all.
Report failed_report(const ErrorInfo& error);

std::string report_text(const Report& report);
void write_report(const Report& report, const std::filesystem::path& path);

// CSV with header "level,nodes,phase,delta", one row per refinement level.
// Throws DomainError if the report failed or carries no sequence.
std::string convergence_table(const Report& report);
void emit_convergence_table(const Report& report, const std::filesystem::path& path);

}  // namespace koopgeo
