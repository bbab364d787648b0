#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sforge/domain.hpp"
#include "sforge/family.hpp"

namespace sforge::cli {

// Named handles threaded between scenario steps.
struct Context {
    std::map<std::string, SetFamily> families;
    std::map<std::string, Domain> domains;
};

struct OpResult {
    json report;
    std::optional<SetFamily> family;  // what `save` stores
    std::optional<Domain> domain;
    std::optional<std::string> csv;   // table form when the operation has one
};

// Family and domain parameters accept "$handle", "@path" (or a bare path on
// the command line), inline JSON objects, or JSON text. `seed` is the step's
// derived seed.
OpResult run_op(const std::string& name, const json& params, Context& ctx, std::uint64_t seed);

const std::vector<std::string>& op_names();

// path,value rows over the flattened report.
std::string flat_csv(const json& report);

}  // namespace sforge::cli
