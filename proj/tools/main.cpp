// sforge: command-line front end over the library and the scenario runner.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "ops.hpp"
#include "scenario.hpp"
#include "sforge/errors.hpp"
#include "sforge/parallel.hpp"
#include "sforge/random.hpp"

namespace {

using sforge::json;

// Operation parameters exposed as --flags on every group subcommand; dashes
// become underscores. Values are read as JSON when they parse, else as text.
const std::vector<std::string> kParamFlags = {
    "family", "domain",   "a",         "b",         "other",   "cover",   "set",           "s",
    "t",      "k",        "n",         "h",         "core",    "degenerate", "budget",     "split-depth",
    "support-bound", "r", "m",         "delta",     "trials",  "p",       "p-tilde",       "tau",
    "rho",    "q",        "z",         "alpha",     "eps",     "lambda",  "w",             "floor",
    "name",   "families", "forbidden", "restarts",  "count",   "subset",  "eta",           "mu",
    "subfamilies", "check-input", "system"};

const std::map<std::string, std::vector<std::string>> kGroups = {
    {"family",
     {"load", "stats", "hex", "restrict", "link", "trace", "shadow", "shadow_upto", "layer", "layers_upto", "join",
      "upper_closure", "union", "difference", "transversal", "random", "equal"}},
    {"sunflower", {"find", "free", "max", "phi", "product", "erdos_rado"}},
    {"spread", {"check", "restrict", "mc", "hit", "reps", "sunflower"}},
    {"domains", {"describe", "spread", "assumptions", "homogeneous", "max_homogeneous", "subfamily", "measure",
                 "regularity"}},
    {"boolean", {"measure", "global", "stab", "threshold", "upgrade", "hyper"}},
    {"pipeline", {"approx", "peeling", "simplify", "cover", "reduce", "cluster", "peel", "delta"}},
    {"bounds", {"eval", "list", "example23", "fstar"}},
};

json flag_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return text;
    }
}

void emit(const std::string& text, const std::optional<std::string>& out) {
    if (!out) {
        std::cout << text;
        return;
    }
    std::ofstream f(*out);
    if (!f) throw sforge::ParseError("cannot write " + *out);
    f << text;
}

std::string read_all(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw sforge::ParseError("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sforge: sunflower-free families, spread approximations and bounds"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
    app.fallthrough();  // global flags may follow the subcommand

    std::uint64_t seed = 0;
    int threads = 0;
    std::string format = "json";
    std::string out;
    auto* seed_opt = app.add_option("--seed", seed, "Base seed; step i uses derive_seed(seed, i)");
    app.add_option("--threads", threads, "Worker threads (default: SFORGE_THREADS, else hardware)");
    auto* format_opt = app.add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    auto* out_opt = app.add_option("--out", out, "Write the report here instead of stdout");

    std::string op_name;
    std::map<std::string, std::string> values;
    std::string params_text;

    for (const auto& [group, verbs] : kGroups) {
        auto* sub = app.add_subcommand(group, group + " operations");
        sub->add_option("action", op_name, "Operation")->required()->check(CLI::IsMember(verbs));
        for (const auto& flag : kParamFlags) sub->add_option("--" + flag, values[flag]);
        sub->add_option("--params", params_text, "Extra parameters as a JSON object");
        sub->final_callback([&, g = group] { op_name = g + "." + op_name; });
    }
    auto* verify = app.add_subcommand("verify", "Optimum, construction and bounds for one instance");
    for (const auto& flag : {"domain", "s", "t", "core", "budget"}) verify->add_option(std::string("--") + flag, values[flag]);
    verify->final_callback([&] { op_name = "verify"; });

    std::string scenario_path;
    auto* run = app.add_subcommand("run", "Run a scenario file");
    run->add_option("scenario", scenario_path, "Scenario JSON (schema 1)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (threads > 0) sforge::set_thread_count(threads);
    const std::optional<std::string> out_path = *out_opt ? std::optional<std::string>(out) : std::nullopt;

    if (run->parsed()) {
        try {
            sforge::cli::ScenarioOverrides ov;
            if (*seed_opt) ov.seed = seed;
            if (*format_opt) ov.format = format;
            ov.out = out_path;
            json scenario;
            try {
                scenario = json::parse(read_all(scenario_path));
            } catch (const json::parse_error& e) {
                throw sforge::ParseError(scenario_path + ": " + e.what());
            }
            const auto res = sforge::cli::run_scenario(scenario, ov);
            emit(res.text, res.out);
            if (res.status != 0) std::cerr << "sforge: scenario failed (exit " << res.status << ")\n";
            return res.status;
        } catch (const std::exception& e) {
            std::cerr << "sforge: " << e.what() << "\n";
            return sforge::cli::exit_code(e);
        }
    }

    try {
        json params = json::object();
        if (!params_text.empty()) {
            params = flag_value(params_text);
            if (!params.is_object()) throw sforge::ParseError("--params must be a JSON object");
        }
        for (const auto& [flag, text] : values) {
            if (text.empty()) continue;
            std::string key = flag;
            std::replace(key.begin(), key.end(), '-', '_');
            params[key] = flag_value(text);
        }
        sforge::cli::Context ctx;
        const auto res = sforge::cli::run_op(op_name, params, ctx, sforge::derive_seed(seed, 0));
        std::string text;
        if (format == "csv")
            text = res.csv ? *res.csv : sforge::cli::flat_csv(res.report);
        else
            text = res.report.dump(2) + "\n";
        emit(text, out_path);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "sforge: " << e.what() << "\n";
        const json err{{"status", "failed"}, {"error", sforge::cli::error_json(e)}};
        try {
            emit(err.dump(2) + "\n", out_path);
        } catch (const std::exception&) {
        }
        return sforge::cli::exit_code(e);
    }
}
