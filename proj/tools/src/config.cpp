#include "ctmdp/cli/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ctmdp::cli {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 20> fields = {
    "name",    "model",  "mode",       "t1",          "t2",        "goal",       "horizon",
    "gamma0",  "eps",    "batch_k",    "runs_per_q",  "n_max",     "initial",    "seed",
    "confidence", "workers", "common_random_numbers", "grid", "output", "checkpoint_every"};

bool is_string_field(std::string_view f) {
    return f == "name" || f == "model" || f == "mode" || f == "goal" || f == "initial" || f == "output";
}

json parse_override(const std::string& field, const std::string& text) {
    if (is_string_field(field)) return text;
    if (field == "grid" && text.find('[') == std::string::npos) {
        json out = json::array();
        std::stringstream in(text);
        std::string item;
        while (std::getline(in, item, ',')) {
            try {
                out.push_back(json::parse(item));
            } catch (const json::exception&) {
                throw ConfigError(field, "expected a comma-separated list of counts, got '" + text + "'");
            }
        }
        return out;
    }
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        throw ConfigError(field, "cannot parse value '" + text + "'");
    }
}

double get_number(const json& doc, const std::string& field) {
    const auto& v = doc.at(field);
    if (!v.is_number()) throw ConfigError(field, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(field, "expected a finite number");
    return x;
}

std::uint64_t get_count(const json& doc, const std::string& field) {
    const auto& v = doc.at(field);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) throw ConfigError(field, "expected a non-negative integer");
    if (v.is_number_float()) {
        const double x = v.get<double>();
        if (x >= 0.0 && x == std::floor(x) && x < 1.8e19) return static_cast<std::uint64_t>(x);
    }
    throw ConfigError(field, "expected a non-negative integer");
}

std::string get_string(const json& doc, const std::string& field) {
    const auto& v = doc.at(field);
    if (!v.is_string()) throw ConfigError(field, "expected a string");
    return v.get<std::string>();
}

bool get_bool(const json& doc, const std::string& field) {
    const auto& v = doc.at(field);
    if (!v.is_boolean()) throw ConfigError(field, "expected true or false");
    return v.get<bool>();
}

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

std::span<const std::string_view> config_fields() { return fields; }

std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
}

ExperimentConfig load_config(const std::optional<std::filesystem::path>& file, const Overrides& overrides,
                             const EnvLookup& env) {
    json doc = json::object();
    std::filesystem::path base = std::filesystem::current_path();
    std::string default_name = "experiment";
    if (file) {
        std::ifstream in(*file, std::ios::binary);
        if (!in) throw ConfigError("", "cannot open config file " + file->string());
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("", "malformed config " + file->string() + " at byte " + std::to_string(e.byte) +
                                      ": " + e.what());
        }
        if (!doc.is_object()) throw ConfigError("", "config " + file->string() + " must be a JSON object");
        for (const auto& [key, value] : doc.items()) {
            if (std::find(fields.begin(), fields.end(), key) == fields.end())
                throw ConfigError(key, "unknown field");
        }
        base = std::filesystem::absolute(*file).parent_path();
        default_name = file->stem().string();
        for (const char* path_field : {"model", "output"}) {
            if (doc.contains(path_field) && doc[path_field].is_string())
                doc[path_field] = (base / doc[path_field].get<std::string>()).lexically_normal().string();
        }
    }
    for (const auto f : fields) {
        const std::string field(f);
        if (env) {
            if (auto v = env("CTMDP_SCHED_" + upper(f))) doc[field] = parse_override(field, *v);
        }
    }
    for (const auto& [field, text] : overrides) {
        if (std::find(fields.begin(), fields.end(), field) == fields.end())
            throw ConfigError(field, "unknown field");
        doc[field] = parse_override(field, text);
    }

    ExperimentConfig c;
    for (const char* required : {"model", "mode", "t1", "t2", "goal"}) {
        if (!doc.contains(required)) throw ConfigError(required, "missing required field");
    }
    c.name = doc.contains("name") ? get_string(doc, "name") : default_name;
    c.model_path = std::filesystem::absolute(get_string(doc, "model")).lexically_normal();
    try {
        c.mode = parse_temporal_mode(get_string(doc, "mode"));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("mode", e.what());
    }
    c.t1 = get_number(doc, "t1");
    c.t2 = get_number(doc, "t2");
    c.goal = get_string(doc, "goal");
    c.horizon = doc.contains("horizon") ? get_number(doc, "horizon") : c.t2;

    auto& l = c.learn;
    if (doc.contains("gamma0")) l.gamma0 = get_number(doc, "gamma0");
    if (doc.contains("eps")) l.eps = get_number(doc, "eps");
    if (doc.contains("batch_k")) l.batch_k = get_count(doc, "batch_k");
    if (doc.contains("runs_per_q")) l.runs_per_q = get_count(doc, "runs_per_q");
    if (doc.contains("n_max")) l.n_max = get_count(doc, "n_max");
    if (doc.contains("initial")) l.initial = get_string(doc, "initial");
    if (doc.contains("seed")) l.seed = get_count(doc, "seed");
    if (doc.contains("confidence")) l.confidence = get_number(doc, "confidence");
    if (doc.contains("workers")) l.workers = static_cast<unsigned>(get_count(doc, "workers"));
    if (doc.contains("common_random_numbers")) l.common_random_numbers = get_bool(doc, "common_random_numbers");
    if (doc.contains("grid")) {
        const auto& g = doc["grid"];
        if (!g.is_array()) throw ConfigError("grid", "expected an array of kernel counts");
        for (std::size_t i = 0; i < g.size(); ++i) {
            json item = json::object({{"grid", g[i]}});
            c.grid.push_back(get_count(item, "grid"));
        }
    }
    c.output_dir = doc.contains("output") ? std::filesystem::path(get_string(doc, "output"))
                                          : base / "results" / c.name;
    c.output_dir = std::filesystem::absolute(c.output_dir).lexically_normal();
    if (doc.contains("checkpoint_every")) c.checkpoint_every = get_count(doc, "checkpoint_every");
    return c;
}

void validate_config(const ExperimentConfig& c) {
    if (c.name.empty()) throw ConfigError("name", "must not be empty");
    if (!std::filesystem::is_regular_file(c.model_path))
        throw ConfigError("model", "file not found: " + c.model_path.string());
    if (c.t1 < 0.0) throw ConfigError("t1", "must be >= 0");
    if (c.t2 < c.t1) throw ConfigError("t2", "must be >= t1");
    if (!(c.horizon > 0.0)) throw ConfigError("horizon", "must be positive");
    if (c.t2 > c.horizon) throw ConfigError("horizon", "must be >= t2");
    if (c.goal.empty()) throw ConfigError("goal", "must not be empty");
    for (auto n : c.grid)
        if (n == 0) throw ConfigError("grid", "kernel counts must be at least 1");
    try {
        c.learn.validate();
    } catch (const ContractError& e) {
        const std::string what = e.what();
        const auto space = what.find(' ');
        throw ConfigError(what.substr(0, space), what.substr(space + 1));
    }
}

std::string config_to_json(const ExperimentConfig& c, int indent) {
    const auto& l = c.learn;
    json doc = {{"name", c.name},
                {"model", c.model_path.string()},
                {"mode", std::string(to_string(c.mode))},
                {"t1", c.t1},
                {"t2", c.t2},
                {"goal", c.goal},
                {"horizon", c.horizon},
                {"gamma0", l.gamma0},
                {"eps", l.eps},
                {"batch_k", l.batch_k},
                {"runs_per_q", l.runs_per_q},
                {"n_max", l.n_max},
                {"initial", l.initial},
                {"seed", l.seed},
                {"confidence", l.confidence},
                {"workers", l.workers},
                {"common_random_numbers", l.common_random_numbers},
                {"grid", c.grid},
                {"output", c.output_dir.string()},
                {"checkpoint_every", c.checkpoint_every}};
    return doc.dump(indent);
}

}  // namespace ctmdp::cli
