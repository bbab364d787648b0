#include "scenario.hpp"

#include <sstream>

#include "sforge/errors.hpp"
#include "sforge/random.hpp"

namespace sforge::cli {

namespace {

json witness_of(const std::string& w) {
    if (w.empty()) return nullptr;
    try {
        return json::parse(w);
    } catch (const json::parse_error&) {
        return w;
    }
}

void check_requirements(const json& step, const json& result) {
    if (!step.contains("require")) return;
    for (const auto& ptr : step.at("require")) {
        const std::string p = ptr.get<std::string>();
        json::json_pointer jp(p);
        if (!result.contains(jp)) throw InvariantViolation("required field missing: " + p);
        const json& v = result.at(jp);
        if (!(v.is_boolean() && v.get<bool>()))
            throw InvariantViolation("requirement failed: " + p, json{{"path", p}, {"value", v}}.dump());
    }
}

std::string csv_cell(const std::string& v) {
    if (v.find_first_of(",\"\n") == std::string::npos) return v;
    std::string q = "\"";
    for (char c : v) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

std::string scenario_csv(const json& report) {
    std::ostringstream os;
    os << "step,op,path,value\n";
    for (const auto& step : report.at("steps")) {
        if (!step.contains("result")) continue;
        const json flat = step.at("result").flatten();
        for (const auto& [path, v] : flat.items())
            os << step.at("index").get<int>() << ',' << step.at("op").get<std::string>() << ',' << csv_cell(path)
               << ',' << csv_cell(v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    }
    if (report.contains("error"))
        os << "error,," << csv_cell(report.at("error").at("kind").get<std::string>()) << ','
           << csv_cell(report.at("error").at("message").get<std::string>()) << '\n';
    return os.str();
}

}  // namespace

int exit_code(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const json::exception*>(&e)) return 2;
    if (dynamic_cast<const CapacityError*>(&e)) return 3;
    return 1;
}

json error_json(const std::exception& e) {
    json j{{"message", e.what()}};
    if (auto* p = dynamic_cast<const PreconditionError*>(&e)) {
        j["kind"] = "precondition";
        j["witness"] = witness_of(p->witness());
    } else if (auto* v = dynamic_cast<const InvariantViolation*>(&e)) {
        j["kind"] = "invariant";
        j["witness"] = witness_of(v->witness());
    } else if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const json::exception*>(&e)) {
        j["kind"] = "parse";
    } else if (dynamic_cast<const CapacityError*>(&e)) {
        j["kind"] = "capacity";
    } else {
        j["kind"] = "internal";
    }
    return j;
}

ScenarioRun run_scenario(const json& scenario, const ScenarioOverrides& ov) {
    if (!scenario.is_object()) throw ParseError("scenario must be a JSON object");
    if (!scenario.contains("schema") || scenario.at("schema") != 1) throw ParseError("scenario schema must be 1");
    const json steps = scenario.value("steps", json::array());
    if (!steps.is_array()) throw ParseError("scenario steps must be an array");

    ScenarioRun run;
    std::uint64_t seed = 0;
    try {
        seed = scenario.value("seed", std::uint64_t{0});
        if (scenario.contains("output")) {
            const json& out = scenario.at("output");
            if (out.contains("path")) run.out = out.at("path").get<std::string>();
            if (out.contains("format")) run.format = out.at("format").get<std::string>();
        }
        for (const auto& step : steps)
            if (!step.is_object() || !step.contains("op") || !step.at("op").is_string())
                throw ParseError("every step needs an op name");
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
    if (ov.seed) seed = *ov.seed;
    if (ov.out) run.out = ov.out;
    if (ov.format) run.format = *ov.format;
    if (run.format != "json" && run.format != "csv") throw ParseError("format must be json or csv");
    // Unknown operations are rejected before anything runs.
    for (const auto& step : steps) {
        const std::string op = step.at("op").get<std::string>();
        bool known = false;
        for (const auto& n : op_names()) known = known || n == op;
        if (!known) throw ParseError("unknown operation: " + op);
    }

    json report{{"schema", 1}, {"seed", seed}, {"steps", json::array()}, {"status", "ok"}};
    Context ctx;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const json& step = steps[i];
        const std::string op = step.at("op").get<std::string>();
        const std::uint64_t step_seed = derive_seed(seed, i);
        json entry{{"index", i}, {"op", op}, {"seed", step_seed}};
        try {
            OpResult res = run_op(op, step.value("params", json::object()), ctx, step_seed);
            check_requirements(step, res.report);
            if (step.contains("save")) {
                const std::string h = step.at("save").get<std::string>();
                if (res.family) {
                    ctx.families.insert_or_assign(h, *res.family);
                    ctx.domains.erase(h);
                } else if (res.domain) {
                    ctx.domains.insert_or_assign(h, *res.domain);
                    ctx.families.erase(h);
                } else {
                    throw ParseError("operation " + op + " produces nothing to save");
                }
                entry["saved"] = h;
            }
            entry["result"] = std::move(res.report);
            report["steps"].push_back(std::move(entry));
        } catch (const std::exception& e) {
            json err = error_json(e);
            err["step"] = i;
            err["op"] = op;
            report["steps"].push_back(std::move(entry));
            report["status"] = "failed";
            report["error"] = std::move(err);
            run.status = exit_code(e);
            break;
        }
    }
    run.text = run.format == "csv" ? scenario_csv(report) : report.dump(2) + "\n";
    return run;
}

}  // namespace sforge::cli
