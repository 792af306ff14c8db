#include "medprompt/runtime/cli.hpp"

#include "medprompt/errors.hpp"
#include "medprompt/json_util.hpp"
#include "medprompt/runtime/benchmark.hpp"
#include "medprompt/runtime/checkpoint.hpp"
#include "medprompt/runtime/metrics.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace medprompt {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open file: " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& bytes) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write file: " + path);
    out << bytes;
}

/// Accept either a bare serialized genome or an object embedding it under
/// the "genome" key (the checkpoint entry shape).
PromptGenome load_genome_file(const std::string& path, const CategorySet& categories) {
    const std::string bytes = read_file(path);
    json doc = parse_json(bytes, "genome file");
    if (doc.is_object() && doc.contains("genome"))
        return deserialize_genome(doc["genome"].dump(), categories);
    return deserialize_genome(bytes, categories);
}

} // namespace

ScoringPipeline build_pipeline(const RunConfig& cfg, std::unique_ptr<Transport> transport,
                               std::function<void(std::chrono::milliseconds)> sleeper,
                               std::function<void(const std::string&)> on_note) {
    ScoringPipeline p;
    p.categories = std::make_shared<CategorySet>(CategorySet::with_custom(cfg.custom_categories));
    p.library = std::make_shared<TemplateLibrary>(
        parse_template_library(read_file(cfg.library_path), *p.categories));
    p.lexicon = std::make_shared<Lexicon>(parse_lexicon(read_file(cfg.lexicon_path)));
    p.guidelines = std::make_shared<std::vector<GuidelineStatement>>();
    if (!cfg.guidelines_path.empty())
        *p.guidelines = parse_guidelines(read_file(cfg.guidelines_path));
    p.provider = std::make_shared<OfflineHashProvider>(cfg.embedding_dim, cfg.embedding_seed);
    p.scenario_weights = cfg.scenario_weights;
    p.risk_category = cfg.risk_category;

    if (cfg.offline_scorer == OfflineScorerKind::head || !cfg.weights_path.empty()) {
        if (!cfg.weights_path.empty())
            p.weights = std::make_shared<ModelWeights>(
                load_model_weights(read_file(cfg.weights_path)));
        if (cfg.offline_scorer == OfflineScorerKind::head && !p.weights)
            throw ConfigError("head scorer selected but no weights file configured");
    }

    if (cfg.backend != BackendKind::offline) {
        RemoteClientConfig rc;
        rc.endpoint = cfg.remote_endpoint;
        rc.timeout = std::chrono::milliseconds(cfg.remote_timeout_ms);
        rc.max_retries = cfg.remote_max_retries;
        rc.cache_dir = (std::filesystem::path(cfg.output_dir) / "remote_cache").string();
        if (const char* token = std::getenv("EMPOWER_REMOTE_TOKEN"))
            rc.bearer_token = token;
        rc.jitter_seed = cfg.evolution.seed;
        p.remote = std::make_shared<RemoteScorer>(
            rc, transport ? std::move(transport) : make_http_transport(), std::move(sleeper));
    }

    // Local scorer callables.
    auto lexicon = p.lexicon;
    auto categories = p.categories;
    auto provider = p.provider;
    auto weights = p.weights;
    auto guidelines = p.guidelines;
    auto remote = p.remote;
    const HeuristicConfig heuristic_cfg = cfg.heuristic;
    const TerminologyConfig term_cfg = cfg.terminology;
    const ReasoningConfig reasoning_cfg = cfg.reasoning;
    const GuidelineConfig guideline_cfg = cfg.guideline;
    const BoundaryRuleSet boundary_rules = cfg.boundary_rules;
    const VerificationWeights vweights = cfg.verification_weights;
    const ScenarioWeights sweights = cfg.scenario_weights;
    const std::string risk_category = cfg.risk_category;
    const double tau = cfg.evolution.verification_threshold;
    const BackendKind backend = cfg.backend;
    const OfflineScorerKind offline_kind = cfg.offline_scorer;

    DimensionScorer local_scorer;
    if (offline_kind == OfflineScorerKind::head) {
        local_scorer = [provider, lexicon, weights](const PromptGenome& g,
                                                    ScorerProvenance& prov) {
            prov = ScorerProvenance::head;
            const auto z = genome_representation(g, *provider, *lexicon, *weights);
            std::map<Dimension, double> scores;
            for (std::size_t i = 0; i < 4; ++i)
                scores[kAllDimensions[i]] = score_dimension_head(z, weights->heads[i]);
            return scores;
        };
    } else {
        local_scorer = [lexicon, heuristic_cfg, categories](const PromptGenome& g,
                                                            ScorerProvenance& prov) {
            prov = ScorerProvenance::heuristic;
            std::map<Dimension, double> scores;
            for (auto d : kAllDimensions)
                scores[d] = heuristic_dimension_score(g, d, *lexicon, heuristic_cfg, *categories);
            return scores;
        };
    }

    auto local_verifier = [lexicon, provider, guidelines, term_cfg, reasoning_cfg,
                           guideline_cfg, boundary_rules, vweights, risk_category,
                           tau](const PromptGenome& g) {
        std::vector<std::string> notes;
        auto [v_term, term_ev] = verify_terminology(g, *lexicon, term_cfg, &notes);
        auto chain = extract_reasoning_chain(g, reasoning_cfg);
        const double v_logic = score_reasoning_coherence(chain);
        auto [v_guid, matches] = verify_guidelines(g, *guidelines, *provider, guideline_cfg,
                                                   &notes);
        auto [v_bound, boundary_ev] = verify_boundaries(g, boundary_rules, risk_category);
        VerificationReport report =
            integrated_verification(v_term, v_logic, v_guid, v_bound, vweights, tau);
        report.term_evidence = std::move(term_ev);
        report.chain = std::move(chain);
        report.guideline_matches = std::move(matches);
        report.boundary_evidence = std::move(boundary_ev);
        report.notes = std::move(notes);
        return report;
    };

    DimensionScorer scorer = local_scorer;
    std::function<VerificationReport(const PromptGenome&)> verifier = local_verifier;
    if (backend != BackendKind::offline) {
        const bool fallback = backend == BackendKind::remote_with_fallback;
        ScenarioKind scenario = cfg.scenario;
        scorer = [remote, local_scorer, fallback, scenario, on_note](
                     const PromptGenome& g, ScorerProvenance& prov) {
            try {
                std::map<Dimension, double> scores;
                for (auto d : kAllDimensions) {
                    ScorerRequest req{render_text(g), std::string(dimension_name(d)), scenario};
                    scores[d] = remote->score(req).score;
                }
                prov = ScorerProvenance::remote;
                return scores;
            } catch (const BackendError&) {
                if (!fallback)
                    throw;
                if (on_note)
                    on_note("remote scorer failed; heuristic fallback used");
                return local_scorer(g, prov);
            }
        };
        verifier = [remote, local_verifier, fallback, scenario, vweights, tau,
                    on_note](const PromptGenome& g) {
            try {
                const char* kinds[4] = {"terminology", "reasoning", "guideline", "boundary"};
                double v[4];
                for (int i = 0; i < 4; ++i) {
                    ScorerRequest req{render_text(g), kinds[i], scenario};
                    v[i] = remote->score(req).score;
                }
                VerificationReport report =
                    integrated_verification(v[0], v[1], v[2], v[3], vweights, tau);
                report.notes.push_back("sub-scores from remote backend");
                return report;
            } catch (const BackendError&) {
                if (!fallback)
                    throw;
                if (on_note)
                    on_note("remote verifier failed; local verification used");
                return local_verifier(g);
            }
        };
    }

    EvolutionContext ctx;
    ctx.library = p.library.get();
    ctx.lexicon = p.lexicon.get();
    ctx.categories = p.categories.get();
    ctx.scenario = cfg.scenario;
    for (const auto& name : cfg.init_categories) {
        auto c = p.categories->find(name);
        if (!c)
            throw ConfigError("init_categories: unknown category \"" + name + "\"");
        ctx.init_categories.push_back(*c);
    }
    ctx.slot_values = cfg.slot_values;
    ctx.mutation_texts = cfg.mutation_texts;
    ctx.scorer_id = std::string(backend_name(backend)) + ":" +
                    (offline_kind == OfflineScorerKind::head ? "head" : "heuristic");
    ctx.assess = [scorer, sweights](const PromptGenome& g) {
        return assess(g, scorer, sweights);
    };
    ctx.verify = verifier;
    ctx.component_quality = [lexicon, heuristic_cfg, categories,
                             scenario = cfg.scenario](const PromptComponent& c) {
        return heuristic_component_quality(c, scenario, *lexicon, heuristic_cfg, *categories);
    };
    p.context = std::move(ctx);
    return p;
}

std::string quality_report_json(const QualityReport& report) {
    json doc;
    json scores;
    json weights;
    for (auto d : kAllDimensions) {
        scores[std::string(dimension_name(d))] = report.scores.at(d);
        weights[std::string(dimension_name(d))] = report.weights_used.at(d);
    }
    doc["scores"] = std::move(scores);
    doc["weights"] = std::move(weights);
    doc["scenario"] = std::string(scenario_name(report.scenario));
    doc["q"] = report.q;
    doc["provenance"] = std::string(provenance_name(report.provenance));
    return doc.dump(2);
}

std::string verification_report_json(const VerificationReport& report,
                                     const CategorySet& categories) {
    json doc;
    doc["v_term"] = report.v_term;
    doc["v_logic"] = report.v_logic;
    doc["v_guideline"] = report.v_guideline;
    doc["v_boundary"] = report.v_boundary;
    doc["v_total"] = report.v_total;
    doc["tau"] = report.tau;
    doc["pass"] = report.pass;
    json terms = json::array();
    for (const auto& t : report.term_evidence)
        terms.push_back({{"term", t.term},
                         {"concept_id", t.concept_id},
                         {"mapped", t.mapped},
                         {"context", t.context}});
    doc["terms"] = std::move(terms);
    json chain = json::array();
    for (const auto& step : report.chain) {
        json s;
        s["category"] = categories.name(step.category);
        s["marker"] = step.marker;
        if (step.stage)
            s["stage"] = *step.stage;
        if (step.enumeration)
            s["enumeration"] = *step.enumeration;
        chain.push_back(std::move(s));
    }
    doc["chain"] = std::move(chain);
    json matches = json::array();
    for (const auto& m : report.guideline_matches)
        matches.push_back({{"recommendation", m.recommendation},
                           {"guideline_id", m.guideline_id},
                           {"weighted_similarity", m.weighted_similarity}});
    doc["guideline_matches"] = std::move(matches);
    doc["boundary"] = {{"matched_presence_patterns",
                        report.boundary_evidence.matched_presence_patterns},
                       {"addressed_elements", report.boundary_evidence.addressed_elements},
                       {"violated_rules", report.boundary_evidence.violated_rules},
                       {"presence", report.boundary_evidence.presence},
                       {"completeness", report.boundary_evidence.completeness},
                       {"accuracy", report.boundary_evidence.accuracy}};
    doc["notes"] = report.notes;
    return doc.dump(2);
}

namespace {

int cmd_optimize(const RunConfig& cfg, std::ostream& out) {
    ScoringPipeline pipeline;
    std::vector<std::string> pipeline_notes;
    pipeline = build_pipeline(cfg, nullptr, {}, [&](const std::string& note) {
        pipeline_notes.push_back(note);
    });

    std::filesystem::create_directories(cfg.output_dir);
    EventLog events((std::filesystem::path(cfg.output_dir) / "events.jsonl").string());
    for (const auto& d : cfg.applied_defaults)
        events.emit("applied_default", json{{"setting", d}}.dump());
    events.emit("run_started", json{{"scenario", std::string(scenario_name(cfg.scenario))},
                                    {"seed", cfg.evolution.seed},
                                    {"backend", std::string(backend_name(cfg.backend))}}
                                   .dump());

    const std::string ckpt_dir =
        (std::filesystem::path(cfg.output_dir) / "checkpoints").string();
    RunHooks hooks;
    hooks.checkpoint_every = cfg.checkpoint_every;
    if (cfg.checkpoint_every > 0) {
        hooks.on_checkpoint = [&](const RunState& st) {
            checkpoint_write(st, ckpt_dir, *pipeline.categories);
            events.emit("checkpoint", json{{"generation", st.generation}}.dump());
        };
    }
    hooks.on_generation = [&](const GenerationStats& s) {
        json mods = json::object();
        for (const auto& [cat, count] : s.modifications)
            mods[pipeline.categories->name(Category{cat})] = count;
        events.emit("generation", json{{"g", s.generation},
                                       {"best_f", s.best_f},
                                       {"mean_f", s.mean_f},
                                       {"sigma_f", s.sigma_f},
                                       {"p_m", s.mutation_probability},
                                       {"modifications", std::move(mods)},
                                       {"replace_fallbacks", s.replace_fallbacks}}
                                      .dump());
        if (s.stopped_early)
            events.emit("early_stop", json{{"generation", s.generation}}.dump());
    };

    std::optional<RunState> resume;
    if (cfg.checkpoint_every > 0 && std::filesystem::exists(ckpt_dir)) {
        try {
            resume = checkpoint_resume(ckpt_dir, *pipeline.categories);
            events.emit("resumed", json{{"generation", resume->generation}}.dump());
        } catch (const ValidationError&) {
            resume.reset(); // no checkpoint yet
        }
    }

    const RunResult result =
        run_evolution(pipeline.context, cfg.evolution, hooks, resume);
    for (const auto& note : pipeline_notes)
        events.emit("fallback", json{{"note", note}}.dump());

    write_file((std::filesystem::path(cfg.output_dir) / "stats.csv").string(),
               stats_csv(result.history));
    json best;
    best["genome"] =
        json::parse(serialize_genome(result.best, *pipeline.categories));
    best["fitness"] = {{"q", result.best_fitness.q},
                       {"v", result.best_fitness.v},
                       {"f", result.best_fitness.f}};
    best["quality"] = json::parse(quality_report_json(result.best_fitness.quality));
    best["verification"] = json::parse(
        verification_report_json(result.best_fitness.verification, *pipeline.categories));
    write_file((std::filesystem::path(cfg.output_dir) / "best_genome.json").string(),
               best.dump(2));
    events.emit("run_finished",
                json{{"generations", result.history.size()},
                     {"stopped_early", result.stopped_early},
                     {"best_f", result.best_fitness.f}}
                    .dump());
    out << "best F = " << result.best_fitness.f << " after " << result.history.size()
        << " generations" << (result.stopped_early ? " (early stop)" : "") << "\n";
    out << "outputs written to " << cfg.output_dir << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& genome_path, std::ostream& out) {
    ScoringPipeline pipeline = build_pipeline(cfg);
    const PromptGenome genome = load_genome_file(genome_path, *pipeline.categories);
    const QualityReport report = pipeline.context.assess(genome);
    out << quality_report_json(report) << "\n";
    return 0;
}

int cmd_verify(const RunConfig& cfg, const std::string& genome_path, std::ostream& out) {
    ScoringPipeline pipeline = build_pipeline(cfg);
    const PromptGenome genome = load_genome_file(genome_path, *pipeline.categories);
    const VerificationReport report = pipeline.context.verify(genome);
    out << verification_report_json(report, *pipeline.categories) << "\n";
    return 0;
}

int cmd_benchmark(const RunConfig& cfg, std::size_t runs, std::ostream& out) {
    ScoringPipeline pipeline = build_pipeline(cfg);
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < runs; ++i)
        seeds.push_back(cfg.evolution.seed + i);
    const BenchmarkReport report =
        benchmark_compare(pipeline.context, cfg.evolution, seeds);
    std::filesystem::create_directories(cfg.output_dir);
    write_file((std::filesystem::path(cfg.output_dir) / "benchmark_report.json").string(),
               report.to_json());
    write_file((std::filesystem::path(cfg.output_dir) / "benchmark_curves.csv").string(),
               report.curves_csv());
    out << "structure_aware median generations-to-95%: "
        << report.structure_aware.median_generations_to_95 << "\n";
    out << "generic         median generations-to-95%: "
        << report.generic.median_generations_to_95 << "\n";
    out << "report written to " << cfg.output_dir << "\n";
    return 0;
}

int cmd_inspect(const std::string& path, std::ostream& out) {
    const std::string bytes = read_file(path);
    json doc = parse_json(bytes, "inspect input");
    const auto& categories = CategorySet::canonical();
    auto print_genome = [&](const json& g) {
        const PromptGenome genome = deserialize_genome(g.dump(), categories);
        out << "genome " << genome.id << " (" << scenario_name(genome.scenario) << ")\n";
        for (const auto& comp : genome.components) {
            out << "  [" << categories.name(comp.category) << "] q=" << comp.quality
                << " origin=" << origin_name(comp.origin) << "\n";
            out << "    " << comp.text << "\n";
        }
    };
    if (doc.is_object() && doc.contains("members")) {
        out << "checkpoint at generation " << doc["generation"].get<std::size_t>() << " with "
            << doc["members"].size() << " members\n";
        for (const auto& m : doc["members"]) {
            print_genome(m["genome"]);
            if (!m["fitness"].is_null())
                out << "  fitness f=" << m["fitness"]["f"].get<double>() << "\n";
        }
        return 0;
    }
    if (doc.is_object() && doc.contains("genome")) {
        print_genome(doc["genome"]);
        return 0;
    }
    print_genome(doc);
    return 0;
}

json error_json(const char* type, const std::string& message) {
    return json{{"error", {{"type", type}, {"message", message}}}};
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"structure-aware evolutionary optimizer for medical prompts"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string backend_flag;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "run config file")->required();
        cmd->add_option("--out", out_dir, "output directory (overrides config)");
        cmd->add_option("--backend", backend_flag,
                        "offline|remote|remote-with-fallback (overrides config)");
        cmd->add_option_function<std::uint64_t>(
            "--seed",
            [&](const std::uint64_t& v) {
                seed = v;
                seed_set = true;
            },
            "seed override");
    };

    auto* optimize = app.add_subcommand("optimize", "run the evolutionary optimization");
    add_common(optimize);
    auto* evaluate = app.add_subcommand("evaluate", "score a single prompt file");
    std::string genome_path;
    add_common(evaluate);
    evaluate->add_option("genome", genome_path, "genome JSON file")->required();
    auto* verify = app.add_subcommand("verify", "verify a single prompt file");
    add_common(verify);
    verify->add_option("genome", genome_path, "genome JSON file")->required();
    auto* benchmark = app.add_subcommand("benchmark",
                                         "compare structure-aware vs generic evolution");
    std::size_t runs = 5;
    add_common(benchmark);
    benchmark->add_option("--runs", runs, "seeds per variant (default 5)");
    auto* inspect = app.add_subcommand("inspect", "pretty-print a genome or checkpoint file");
    std::string inspect_path;
    inspect->add_option("file", inspect_path, "file to inspect")->required();

    std::vector<const char*> argv;
    argv.push_back("medprompt");
    for (const auto& a : args)
        argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << error_json("usage", e.what()).dump() << "\n";
        return 2;
    }

    try {
        if (inspect->parsed())
            return cmd_inspect(inspect_path, out);

        RunConfig cfg = load_run_config(config_path);
        if (!out_dir.empty())
            cfg.output_dir = out_dir;
        if (seed_set)
            cfg.evolution.seed = seed;
        if (!backend_flag.empty()) {
            auto b = parse_backend(backend_flag);
            if (!b)
                throw ConfigError("unknown backend: " + backend_flag);
            cfg.backend = *b;
        }
        if (optimize->parsed())
            return cmd_optimize(cfg, out);
        if (evaluate->parsed())
            return cmd_evaluate(cfg, genome_path, out);
        if (verify->parsed())
            return cmd_verify(cfg, genome_path, out);
        if (benchmark->parsed())
            return cmd_benchmark(cfg, runs, out);
        err << error_json("usage", "no subcommand").dump() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        err << error_json("config", e.what()).dump() << "\n";
        return 1;
    } catch (const ParseError& e) {
        err << error_json("parse", e.what()).dump() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        err << error_json("validation", e.what()).dump() << "\n";
        return 1;
    } catch (const BackendError& e) {
        err << error_json("backend", e.what()).dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << error_json("internal", e.what()).dump() << "\n";
        return 1;
    }
}

} // namespace medprompt
