#include "medprompt/runtime/checkpoint.hpp"

#include "medprompt/errors.hpp"
#include "medprompt/json_util.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

namespace medprompt {

using nlohmann::json;

namespace {

json stats_to_json(const GenerationStats& s) {
    json mods = json::object();
    for (const auto& [cat, count] : s.modifications)
        mods[std::to_string(cat)] = count;
    return json{{"generation", s.generation},
                {"best_f", s.best_f},
                {"mean_f", s.mean_f},
                {"sigma_f", s.sigma_f},
                {"mutation_probability", s.mutation_probability},
                {"stopped_early", s.stopped_early},
                {"modifications", std::move(mods)},
                {"replace_fallbacks", s.replace_fallbacks}};
}

GenerationStats stats_from_json(const json& j) {
    GenerationStats s;
    s.generation = j.at("generation").get<std::size_t>();
    s.best_f = j.at("best_f").get<double>();
    s.mean_f = j.at("mean_f").get<double>();
    s.sigma_f = j.at("sigma_f").get<double>();
    s.mutation_probability = j.at("mutation_probability").get<double>();
    s.stopped_early = j.at("stopped_early").get<bool>();
    for (const auto& [key, value] : j.at("modifications").items())
        s.modifications[static_cast<std::uint32_t>(std::stoul(key))] =
            value.get<std::size_t>();
    s.replace_fallbacks = j.at("replace_fallbacks").get<std::size_t>();
    return s;
}

} // namespace

std::string serialize_run_state(const RunState& state, const CategorySet& categories) {
    json doc;
    doc["generation"] = state.generation;
    doc["mutation_probability"] = state.mutation_probability;
    doc["rng_state"] = state.rng_state;
    doc["next_genome_id"] = state.next_genome_id;
    json members = json::array();
    for (const auto& m : state.members) {
        json entry;
        entry["genome"] = json::parse(serialize_genome(m.genome, categories));
        if (m.fitness)
            entry["fitness"] = {{"q", m.fitness->q}, {"v", m.fitness->v}, {"f", m.fitness->f}};
        else
            entry["fitness"] = nullptr;
        members.push_back(std::move(entry));
    }
    doc["members"] = std::move(members);
    json stats = json::array();
    for (const auto& s : state.stats)
        stats.push_back(stats_to_json(s));
    doc["stats"] = std::move(stats);
    doc["best_history"] = state.best_history;
    json mods = json::object();
    for (const auto& [cat, count] : state.pending_modifications)
        mods[std::to_string(cat)] = count;
    doc["pending_modifications"] = std::move(mods);
    doc["pending_replace_fallbacks"] = state.pending_replace_fallbacks;
    return doc.dump();
}

RunState deserialize_run_state(std::string_view bytes, const CategorySet& categories) {
    json doc = parse_json(bytes, "checkpoint");
    RunState st;
    try {
        st.generation = doc.at("generation").get<std::size_t>();
        st.mutation_probability = doc.at("mutation_probability").get<double>();
        st.rng_state = doc.at("rng_state").get<std::string>();
        st.next_genome_id = doc.at("next_genome_id").get<std::uint64_t>();
        for (const auto& entry : doc.at("members")) {
            Member m;
            m.genome = deserialize_genome(entry.at("genome").dump(), categories);
            if (entry.contains("fitness") && !entry["fitness"].is_null()) {
                FitnessRecord rec;
                rec.q = entry["fitness"].at("q").get<double>();
                rec.v = entry["fitness"].at("v").get<double>();
                rec.f = entry["fitness"].at("f").get<double>();
                m.fitness = std::move(rec);
            }
            st.members.push_back(std::move(m));
        }
        for (const auto& s : doc.at("stats"))
            st.stats.push_back(stats_from_json(s));
        st.best_history = doc.at("best_history").get<std::vector<double>>();
        for (const auto& [key, value] : doc.at("pending_modifications").items())
            st.pending_modifications[static_cast<std::uint32_t>(std::stoul(key))] =
                value.get<std::size_t>();
        st.pending_replace_fallbacks = doc.at("pending_replace_fallbacks").get<std::size_t>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint: missing or malformed field: ") + e.what());
    }
    return st;
}

void checkpoint_write(const RunState& state, const std::string& dir,
                      const CategorySet& categories) {
    std::filesystem::create_directories(dir);
    char name[64];
    std::snprintf(name, sizeof(name), "ckpt_g%06zu.json", state.generation);
    const auto path = std::filesystem::path(dir) / name;
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out)
            throw Error("cannot write checkpoint: " + tmp);
        out << serialize_run_state(state, categories);
    }
    std::filesystem::rename(tmp, path);
}

RunState checkpoint_resume(const std::string& dir, const CategorySet& categories) {
    std::filesystem::path latest;
    std::size_t best_generation = 0;
    bool found = false;
    if (std::filesystem::exists(dir)) {
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("ckpt_g", 0) != 0 || entry.path().extension() != ".json")
                continue;
            const std::size_t g = std::stoul(name.substr(6, name.size() - 6 - 5));
            if (!found || g >= best_generation) {
                best_generation = g;
                latest = entry.path();
                found = true;
            }
        }
    }
    if (!found)
        throw ValidationError("no checkpoint in directory: " + dir);
    std::ifstream in(latest, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_run_state(bytes, categories);
}

} // namespace medprompt
