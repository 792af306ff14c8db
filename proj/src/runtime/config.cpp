#include "medprompt/runtime/config.hpp"

#include "medprompt/errors.hpp"
#include "medprompt/json_util.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace medprompt {

using nlohmann::json;

std::string_view backend_name(BackendKind b) {
    switch (b) {
    case BackendKind::offline: return "offline";
    case BackendKind::remote: return "remote";
    case BackendKind::remote_with_fallback: return "remote-with-fallback";
    }
    return "?";
}

std::optional<BackendKind> parse_backend(std::string_view name) {
    for (auto b : {BackendKind::offline, BackendKind::remote, BackendKind::remote_with_fallback})
        if (backend_name(b) == name)
            return b;
    return std::nullopt;
}

namespace {

/// Collects validation failures so the caller sees them all at once.
struct ErrorSink {
    std::vector<std::string> errors;

    void add(std::string msg) { errors.push_back(std::move(msg)); }
    void raise_if_any() const {
        if (errors.empty())
            return;
        std::ostringstream os;
        os << "run config invalid (" << errors.size() << " problem"
           << (errors.size() == 1 ? "" : "s") << "):";
        for (const auto& e : errors)
            os << "\n  - " << e;
        throw ConfigError(os.str());
    }
};

void check_known_keys(const json& obj, const std::set<std::string>& known,
                      const std::string& where, ErrorSink& sink) {
    if (!obj.is_object())
        return;
    for (const auto& [key, value] : obj.items())
        if (!known.contains(key))
            sink.add(where + ": unknown key \"" + key + "\"");
}

double number_or(const json& obj, const char* key, double fallback, bool& applied) {
    if (obj.contains(key)) {
        applied = false;
        if (!obj[key].is_number())
            throw ConfigError(std::string("config: \"") + key + "\" must be a number");
        return obj[key].get<double>();
    }
    applied = true;
    return fallback;
}

std::vector<std::string> string_list(const json& arr, const std::string& where) {
    if (!arr.is_array())
        throw ConfigError(where + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& item : arr) {
        if (!item.is_string())
            throw ConfigError(where + " must contain only strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

std::string resolve_path(const std::string& base_dir, const std::string& rel) {
    if (rel.empty())
        return rel;
    std::filesystem::path p(rel);
    if (p.is_absolute() || base_dir.empty())
        return rel;
    return (std::filesystem::path(base_dir) / p).string();
}

void parse_evolution_block(const json& block, EvolutionConfig& cfg,
                           std::vector<std::string>& defaults, ErrorSink& sink) {
    static const std::set<std::string> known = {
        "population_size", "max_generations", "tournament_size", "selection_probability",
        "initial_mutation_probability", "mutation_decay", "quality_exponent",
        "adaptation_rate", "mutation_probability_bounds", "crossover_threshold",
        "mutation_operator_probabilities", "early_stop_threshold", "early_stop_window",
        "verification_threshold", "elitism", "seed"};
    check_known_keys(block, known, "evolution", sink);

    struct Field {
        const char* key;
        double* target;
    };
    auto load = [&](const char* key, auto& target) {
        bool applied = false;
        const double v = number_or(block, key, static_cast<double>(target), applied);
        if (applied)
            defaults.push_back(std::string("evolution.") + key + " = " +
                               std::to_string(static_cast<double>(target)));
        target = static_cast<std::remove_reference_t<decltype(target)>>(v);
    };
    load("population_size", cfg.population_size);
    load("max_generations", cfg.max_generations);
    load("tournament_size", cfg.tournament_size);
    load("selection_probability", cfg.selection_probability);
    load("initial_mutation_probability", cfg.initial_mutation_probability);
    load("mutation_decay", cfg.mutation_decay);
    load("quality_exponent", cfg.quality_exponent);
    load("adaptation_rate", cfg.adaptation_rate);
    load("crossover_threshold", cfg.crossover_threshold);
    load("early_stop_threshold", cfg.early_stop_threshold);
    load("early_stop_window", cfg.early_stop_window);
    load("verification_threshold", cfg.verification_threshold);
    load("elitism", cfg.elitism);
    load("seed", cfg.seed);

    if (block.contains("mutation_probability_bounds")) {
        const auto& b = block["mutation_probability_bounds"];
        if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number())
            sink.add("evolution.mutation_probability_bounds must be [min, max]");
        else {
            cfg.mutation_probability_min = b[0].get<double>();
            cfg.mutation_probability_max = b[1].get<double>();
        }
    } else {
        defaults.push_back("evolution.mutation_probability_bounds = [0.01, 0.8]");
    }
    if (block.contains("mutation_operator_probabilities")) {
        const auto& m = block["mutation_operator_probabilities"];
        static const std::set<std::string> op_keys = {"synonym", "elaborate", "simplify",
                                                      "replace"};
        check_known_keys(m, op_keys, "evolution.mutation_operator_probabilities", sink);
        bool ignored = false;
        cfg.p_synonym = number_or(m, "synonym", cfg.p_synonym, ignored);
        cfg.p_elaborate = number_or(m, "elaborate", cfg.p_elaborate, ignored);
        cfg.p_simplify = number_or(m, "simplify", cfg.p_simplify, ignored);
        cfg.p_replace = number_or(m, "replace", cfg.p_replace, ignored);
    } else {
        defaults.push_back(
            "evolution.mutation_operator_probabilities = {0.4, 0.2, 0.2, 0.2}");
    }
}

} // namespace

RunConfig parse_run_config(std::string_view bytes, const std::string& base_dir) {
    json doc = parse_json(bytes, "run config");
    if (!doc.is_object())
        throw ParseError("run config: expected a JSON object");

    ErrorSink sink;
    RunConfig cfg;

    static const std::set<std::string> top_keys = {
        "scenario",       "paths",           "backend",        "offline_scorer",
        "remote",         "output_dir",      "evolution",      "scenario_weights",
        "verification",   "boundary_rules",  "heuristic",      "reasoning",
        "guideline",      "mutation_texts",  "risk_category",  "custom_categories",
        "init_categories", "slot_values",    "checkpoint_every", "embedding_seed",
        "embedding_dim"};
    check_known_keys(doc, top_keys, "config", sink);

    // scenario (required)
    if (!doc.contains("scenario") || !doc["scenario"].is_string()) {
        sink.add("config: missing required string \"scenario\"");
    } else {
        auto s = parse_scenario(doc["scenario"].get<std::string>());
        if (!s)
            sink.add("config: unknown scenario \"" + doc["scenario"].get<std::string>() + "\"");
        else
            cfg.scenario = *s;
    }

    // paths (library and lexicon required)
    if (!doc.contains("paths") || !doc["paths"].is_object()) {
        sink.add("config: missing required object \"paths\"");
    } else {
        const auto& paths = doc["paths"];
        static const std::set<std::string> path_keys = {"library", "lexicon", "guidelines",
                                                        "weights"};
        check_known_keys(paths, path_keys, "paths", sink);
        auto path_of = [&](const char* key, bool required) -> std::string {
            if (!paths.contains(key)) {
                if (required)
                    sink.add(std::string("paths: missing required \"") + key + "\"");
                return {};
            }
            if (!paths[key].is_string()) {
                sink.add(std::string("paths.") + key + " must be a string");
                return {};
            }
            return resolve_path(base_dir, paths[key].get<std::string>());
        };
        cfg.library_path = path_of("library", true);
        cfg.lexicon_path = path_of("lexicon", true);
        cfg.guidelines_path = path_of("guidelines", false);
        cfg.weights_path = path_of("weights", false);
    }

    if (doc.contains("backend")) {
        auto b = parse_backend(doc["backend"].get<std::string>());
        if (!b)
            sink.add("config: unknown backend \"" + doc["backend"].get<std::string>() + "\"");
        else
            cfg.backend = *b;
    } else {
        cfg.applied_defaults.push_back("backend = offline");
    }
    if (doc.contains("offline_scorer")) {
        const std::string s = doc["offline_scorer"].get<std::string>();
        if (s == "heuristic")
            cfg.offline_scorer = OfflineScorerKind::heuristic;
        else if (s == "head")
            cfg.offline_scorer = OfflineScorerKind::head;
        else
            sink.add("config: unknown offline_scorer \"" + s + "\"");
    } else {
        cfg.applied_defaults.push_back("offline_scorer = heuristic");
    }

    if (doc.contains("remote")) {
        const auto& r = doc["remote"];
        static const std::set<std::string> remote_keys = {"endpoint", "timeout_ms",
                                                          "max_retries"};
        check_known_keys(r, remote_keys, "remote", sink);
        if (r.contains("endpoint") && r["endpoint"].is_string())
            cfg.remote_endpoint = r["endpoint"].get<std::string>();
        bool ignored = false;
        cfg.remote_timeout_ms = static_cast<std::size_t>(
            number_or(r, "timeout_ms", static_cast<double>(cfg.remote_timeout_ms), ignored));
        cfg.remote_max_retries = static_cast<std::size_t>(number_or(
            r, "max_retries", static_cast<double>(cfg.remote_max_retries), ignored));
    }
    if (cfg.backend != BackendKind::offline && cfg.remote_endpoint.empty())
        sink.add("config: remote backend selected but remote.endpoint missing");

    if (doc.contains("output_dir") && doc["output_dir"].is_string())
        cfg.output_dir = doc["output_dir"].get<std::string>();
    else
        cfg.applied_defaults.push_back("output_dir = out");

    if (doc.contains("evolution"))
        parse_evolution_block(doc["evolution"], cfg.evolution, cfg.applied_defaults, sink);
    else
        cfg.applied_defaults.push_back("evolution = all defaults");
    try {
        cfg.evolution.validate();
    } catch (const ConfigError& e) {
        sink.add(e.what());
    }

    if (doc.contains("scenario_weights")) {
        std::map<ScenarioKind, std::map<Dimension, double>> sw;
        // Start from defaults so a config may override a subset of scenarios.
        for (auto s : kAllScenarios)
            sw[s] = ScenarioWeights().for_scenario(s);
        for (const auto& [key, value] : doc["scenario_weights"].items()) {
            auto s = parse_scenario(key);
            if (!s) {
                sink.add("scenario_weights: unknown scenario \"" + key + "\"");
                continue;
            }
            std::map<Dimension, double> w;
            for (const auto& [dkey, dval] : value.items()) {
                auto d = parse_dimension(dkey);
                if (!d) {
                    sink.add("scenario_weights." + key + ": unknown dimension \"" + dkey + "\"");
                    continue;
                }
                if (!dval.is_number()) {
                    sink.add("scenario_weights." + key + "." + dkey + " must be a number");
                    continue;
                }
                w[*d] = dval.get<double>();
            }
            sw[*s] = std::move(w);
        }
        try {
            cfg.scenario_weights = ScenarioWeights(sw);
        } catch (const ConfigError& e) {
            sink.add(e.what());
        }
    } else {
        cfg.applied_defaults.push_back("scenario_weights = defaults (risk-weighted)");
    }

    if (doc.contains("verification")) {
        const auto& v = doc["verification"];
        static const std::set<std::string> vkeys = {"weights", "term_umls_weight",
                                                    "term_context_weight"};
        check_known_keys(v, vkeys, "verification", sink);
        if (v.contains("weights")) {
            const auto& w = v["weights"];
            static const std::set<std::string> wkeys = {"terminology", "reasoning", "guideline",
                                                        "boundary"};
            check_known_keys(w, wkeys, "verification.weights", sink);
            bool ignored = false;
            cfg.verification_weights.terminology =
                number_or(w, "terminology", cfg.verification_weights.terminology, ignored);
            cfg.verification_weights.reasoning =
                number_or(w, "reasoning", cfg.verification_weights.reasoning, ignored);
            cfg.verification_weights.guideline =
                number_or(w, "guideline", cfg.verification_weights.guideline, ignored);
            cfg.verification_weights.boundary =
                number_or(w, "boundary", cfg.verification_weights.boundary, ignored);
        }
        bool ignored = false;
        cfg.terminology.w_umls = number_or(v, "term_umls_weight", cfg.terminology.w_umls, ignored);
        cfg.terminology.w_context =
            number_or(v, "term_context_weight", cfg.terminology.w_context, ignored);
    } else {
        cfg.applied_defaults.push_back("verification = defaults (beta 0.3/0.25/0.25/0.2)");
    }
    try {
        cfg.verification_weights.validate();
        cfg.terminology.validate();
    } catch (const ConfigError& e) {
        sink.add(e.what());
    }

    cfg.boundary_rules = default_boundary_rules();
    if (doc.contains("boundary_rules")) {
        const auto& b = doc["boundary_rules"];
        static const std::set<std::string> bkeys = {"presence_patterns", "risk_categories",
                                                    "liability_rules", "weights"};
        check_known_keys(b, bkeys, "boundary_rules", sink);
        try {
            if (b.contains("presence_patterns"))
                cfg.boundary_rules.presence_patterns =
                    string_list(b["presence_patterns"], "boundary_rules.presence_patterns");
            if (b.contains("risk_categories")) {
                cfg.boundary_rules.risk_categories.clear();
                for (const auto& [name, elements] : b["risk_categories"].items())
                    cfg.boundary_rules.risk_categories[name] =
                        string_list(elements, "boundary_rules.risk_categories." + name);
            }
            if (b.contains("liability_rules")) {
                cfg.boundary_rules.liability_rules.clear();
                for (const auto& rule : b["liability_rules"]) {
                    LiabilityRule lr;
                    lr.pattern = require_string(rule, "pattern", "liability rule");
                    const std::string kind = require_string(rule, "kind", "liability rule");
                    if (kind == "forbidden")
                        lr.forbidden = true;
                    else if (kind == "required")
                        lr.forbidden = false;
                    else
                        throw ConfigError("liability rule kind must be forbidden|required");
                    cfg.boundary_rules.liability_rules.push_back(std::move(lr));
                }
            }
            if (b.contains("weights")) {
                const auto& w = b["weights"];
                if (!w.is_array() || w.size() != 3)
                    throw ConfigError("boundary_rules.weights must be [a1, a2, a3]");
                cfg.boundary_rules.alpha_presence = w[0].get<double>();
                cfg.boundary_rules.alpha_completeness = w[1].get<double>();
                cfg.boundary_rules.alpha_accuracy = w[2].get<double>();
            }
        } catch (const Error& e) {
            sink.add(e.what());
        }
    } else {
        cfg.applied_defaults.push_back("boundary_rules = defaults");
    }
    try {
        cfg.boundary_rules.validate();
    } catch (const ConfigError& e) {
        sink.add(e.what());
    }

    cfg.heuristic = default_heuristic_config();
    if (doc.contains("heuristic")) {
        const auto& h = doc["heuristic"];
        static const std::set<std::string> hkeys = {"specificity_density_cap",
                                                    "scenario_keywords", "claim_patterns"};
        check_known_keys(h, hkeys, "heuristic", sink);
        bool ignored = false;
        cfg.heuristic.specificity_density_cap = number_or(
            h, "specificity_density_cap", cfg.heuristic.specificity_density_cap, ignored);
        try {
            if (h.contains("claim_patterns"))
                cfg.heuristic.claim_patterns =
                    string_list(h["claim_patterns"], "heuristic.claim_patterns");
            if (h.contains("scenario_keywords")) {
                for (const auto& [key, value] : h["scenario_keywords"].items()) {
                    auto s = parse_scenario(key);
                    if (!s)
                        throw ConfigError("heuristic.scenario_keywords: unknown scenario \"" +
                                          key + "\"");
                    cfg.heuristic.scenario_keywords[*s] =
                        string_list(value, "heuristic.scenario_keywords." + key);
                }
            }
        } catch (const Error& e) {
            sink.add(e.what());
        }
    } else {
        cfg.applied_defaults.push_back("heuristic = defaults");
    }

    cfg.reasoning = default_reasoning_config();
    if (doc.contains("reasoning")) {
        const auto& r = doc["reasoning"];
        static const std::set<std::string> rkeys = {"stage_keywords"};
        check_known_keys(r, rkeys, "reasoning", sink);
        if (r.contains("stage_keywords")) {
            try {
                std::vector<std::vector<std::string>> stages;
                for (const auto& stage : r["stage_keywords"])
                    stages.push_back(string_list(stage, "reasoning.stage_keywords"));
                cfg.reasoning.stage_keywords = std::move(stages);
            } catch (const Error& e) {
                sink.add(e.what());
            }
        }
    }

    cfg.guideline = default_guideline_config();
    if (doc.contains("guideline")) {
        const auto& g = doc["guideline"];
        static const std::set<std::string> gkeys = {"recommendation_cues"};
        check_known_keys(g, gkeys, "guideline", sink);
        if (g.contains("recommendation_cues")) {
            try {
                cfg.guideline.recommendation_cues =
                    string_list(g["recommendation_cues"], "guideline.recommendation_cues");
            } catch (const Error& e) {
                sink.add(e.what());
            }
        }
    }

    cfg.mutation_texts = default_mutation_texts();
    if (doc.contains("mutation_texts")) {
        const auto& m = doc["mutation_texts"];
        static const std::set<std::string> mkeys = {"elaborations", "filler_phrases"};
        check_known_keys(m, mkeys, "mutation_texts", sink);
        try {
            if (m.contains("filler_phrases"))
                cfg.mutation_texts.filler_phrases =
                    string_list(m["filler_phrases"], "mutation_texts.filler_phrases");
            if (m.contains("elaborations")) {
                auto categories = CategorySet::with_custom(cfg.custom_categories);
                cfg.mutation_texts.elaborations.clear();
                for (const auto& [key, value] : m["elaborations"].items()) {
                    auto c = categories.find(key);
                    if (!c)
                        throw ConfigError("mutation_texts.elaborations: unknown category \"" +
                                          key + "\"");
                    cfg.mutation_texts.elaborations[c->index] =
                        string_list(value, "mutation_texts.elaborations." + key);
                }
            }
        } catch (const Error& e) {
            sink.add(e.what());
        }
    }

    if (doc.contains("custom_categories")) {
        try {
            cfg.custom_categories =
                string_list(doc["custom_categories"], "custom_categories");
            CategorySet::with_custom(cfg.custom_categories); // validates uniqueness
        } catch (const Error& e) {
            sink.add(e.what());
        }
    }
    if (doc.contains("init_categories")) {
        try {
            cfg.init_categories = string_list(doc["init_categories"], "init_categories");
        } catch (const Error& e) {
            sink.add(e.what());
        }
    }
    if (doc.contains("slot_values")) {
        for (const auto& [key, value] : doc["slot_values"].items()) {
            if (!value.is_string())
                sink.add("slot_values." + key + " must be a string");
            else
                cfg.slot_values[key] = value.get<std::string>();
        }
    }
    if (doc.contains("risk_category") && doc["risk_category"].is_string()) {
        cfg.risk_category = doc["risk_category"].get<std::string>();
    } else {
        // Default mapping: scenario name when it is a known risk category,
        // else diagnosis.
        const std::string name(scenario_name(cfg.scenario));
        cfg.risk_category =
            cfg.boundary_rules.risk_categories.contains(name) ? name : "diagnosis";
        cfg.applied_defaults.push_back("risk_category = " + cfg.risk_category);
    }
    if (!cfg.boundary_rules.risk_categories.contains(cfg.risk_category))
        sink.add("config: risk_category \"" + cfg.risk_category +
                 "\" not present in boundary_rules.risk_categories");

    bool ignored = false;
    cfg.checkpoint_every = static_cast<std::size_t>(number_or(
        doc, "checkpoint_every", static_cast<double>(cfg.checkpoint_every), ignored));
    cfg.embedding_seed = static_cast<std::uint64_t>(number_or(
        doc, "embedding_seed", static_cast<double>(cfg.embedding_seed), ignored));
    cfg.embedding_dim = static_cast<std::size_t>(
        number_or(doc, "embedding_dim", static_cast<double>(cfg.embedding_dim), ignored));
    if (cfg.embedding_dim == 0)
        sink.add("config: embedding_dim must be positive");

    sink.raise_if_any();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string base_dir = std::filesystem::path(path).parent_path().string();
    RunConfig cfg = parse_run_config(bytes, base_dir);

    // Referenced files must exist and parse at load time.
    ErrorSink sink;
    auto must_exist = [&](const std::string& p, const char* what) {
        if (!p.empty() && !std::filesystem::exists(p))
            sink.add(std::string(what) + " file not found: " + p);
    };
    must_exist(cfg.library_path, "library");
    must_exist(cfg.lexicon_path, "lexicon");
    must_exist(cfg.guidelines_path, "guidelines");
    must_exist(cfg.weights_path, "weights");
    if (cfg.offline_scorer == OfflineScorerKind::head && cfg.weights_path.empty())
        sink.add("offline_scorer = head requires paths.weights");
    sink.raise_if_any();
    return cfg;
}

} // namespace medprompt
