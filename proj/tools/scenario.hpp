#pragma once

#include <cstdint>
#include <exception>
#include <optional>
#include <string>

#include "ops.hpp"

namespace sforge::cli {

// Exit status for an exception escaping an operation: 1 precondition or
// invariant, 2 parse, 3 capacity.
int exit_code(const std::exception& e);
json error_json(const std::exception& e);

struct ScenarioOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> format, out;
};

struct ScenarioRun {
    int status = 0;
    std::string text;  // the rendered report
    std::string format = "json";
    std::optional<std::string> out;
};

// Schema 1:
//   {"schema": 1, "seed": S, "output": {"path": P, "format": "json"|"csv"},
//    "steps": [{"op": O, "params": {...}, "save": H, "require": ["/ptr"]}]}
// Step i runs with seed derive_seed(S, i). `save` stores the step's family (or
// domain) under handle H, referenced later as "$H". Each `require` pointer
// must resolve to true in the step's result. Execution stops at the first
// failing step; the report records the error and its witness.
ScenarioRun run_scenario(const json& scenario, const ScenarioOverrides& ov);

}  // namespace sforge::cli
