#include "medprompt/genome.hpp"

#include "medprompt/errors.hpp"
#include "medprompt/json_util.hpp"
#include "medprompt/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace medprompt {

using nlohmann::json;

namespace {

constexpr std::string_view kCanonicalNames[] = {
    "role_definition", "reasoning_framework", "information_request",
    "uncertainty_expression", "boundary_statement"};

} // namespace

const CategorySet& CategorySet::canonical() {
    static const CategorySet instance = [] {
        CategorySet s;
        for (auto name : kCanonicalNames)
            s.names_.emplace_back(name);
        return s;
    }();
    return instance;
}

CategorySet CategorySet::with_custom(const std::vector<std::string>& extra) {
    CategorySet s = canonical();
    for (const auto& name : extra) {
        if (trim(name).empty())
            throw ValidationError("custom category name must be nonempty");
        if (s.find(name))
            throw ValidationError("duplicate category name: " + name);
        s.names_.push_back(name);
    }
    return s;
}

const std::string& CategorySet::name(Category c) const {
    if (c.index >= names_.size())
        throw ValidationError("category index out of range");
    return names_[c.index];
}

std::optional<Category> CategorySet::find(std::string_view name) const {
    for (std::uint32_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name)
            return Category{i};
    return std::nullopt;
}

std::string_view scenario_name(ScenarioKind s) {
    switch (s) {
    case ScenarioKind::diagnosis: return "diagnosis";
    case ScenarioKind::treatment: return "treatment";
    case ScenarioKind::history: return "history";
    case ScenarioKind::education: return "education";
    }
    return "?";
}

std::optional<ScenarioKind> parse_scenario(std::string_view name) {
    for (auto s : kAllScenarios)
        if (scenario_name(s) == name)
            return s;
    return std::nullopt;
}

std::string_view origin_name(Origin o) {
    switch (o) {
    case Origin::library: return "library";
    case Origin::crossover_a: return "crossover_a";
    case Origin::crossover_b: return "crossover_b";
    case Origin::fusion: return "fusion";
    case Origin::mutation: return "mutation";
    }
    return "?";
}

std::optional<Origin> parse_origin(std::string_view name) {
    for (auto o : {Origin::library, Origin::crossover_a, Origin::crossover_b, Origin::fusion,
                   Origin::mutation})
        if (origin_name(o) == name)
            return o;
    return std::nullopt;
}

std::string_view complexity_name(Complexity c) {
    switch (c) {
    case Complexity::straightforward: return "straightforward";
    case Complexity::moderate: return "moderate";
    case Complexity::complex: return "complex";
    }
    return "?";
}

std::optional<Complexity> parse_complexity(std::string_view name) {
    for (auto c : {Complexity::straightforward, Complexity::moderate, Complexity::complex})
        if (complexity_name(c) == name)
            return c;
    return std::nullopt;
}

const PromptComponent* PromptGenome::find(Category c) const {
    for (const auto& comp : components)
        if (comp.category == c)
            return &comp;
    return nullptr;
}

void validate_genome(const PromptGenome& genome, const CategorySet& categories) {
    if (genome.components.empty())
        throw ValidationError("genome must contain at least one component");
    std::uint32_t prev = 0;
    bool first = true;
    for (const auto& comp : genome.components) {
        if (comp.category.index >= categories.size())
            throw ValidationError("genome component has unknown category index");
        if (!first && comp.category.index <= prev)
            throw ValidationError(
                "genome categories must be unique and in canonical order");
        prev = comp.category.index;
        first = false;
        if (trim(comp.text).empty())
            throw ValidationError("component text must be nonempty (category " +
                                  categories.name(comp.category) + ")");
        if (!(comp.quality >= 0.0 && comp.quality <= 1.0))
            throw ValidationError("component quality must lie in [0, 1]");
    }
}

PromptGenome make_genome(std::uint64_t id, ScenarioKind scenario,
                         std::vector<PromptComponent> components,
                         const CategorySet& categories) {
    PromptGenome g;
    g.id = id;
    g.scenario = scenario;
    g.components = std::move(components);
    validate_genome(g, categories);
    return g;
}

std::vector<std::string> Template::slot_names() const {
    std::vector<std::string> names;
    std::size_t pos = 0;
    while (true) {
        auto open = text.find("{{", pos);
        if (open == std::string::npos)
            break;
        auto close = text.find("}}", open + 2);
        if (close == std::string::npos)
            throw ValidationError("template " + id + ": unterminated slot placeholder");
        std::string name = trim(text.substr(open + 2, close - open - 2));
        if (name.empty())
            throw ValidationError("template " + id + ": empty slot name");
        if (std::find(names.begin(), names.end(), name) != names.end())
            throw ValidationError("template " + id + ": duplicate slot name " + name);
        names.push_back(std::move(name));
        pos = close + 2;
    }
    return names;
}

TemplateLibrary::TemplateLibrary(std::vector<Template> templates)
    : templates_(std::move(templates)) {
    for (std::size_t i = 0; i < templates_.size(); ++i) {
        const auto& t = templates_[i];
        if (!by_id_.emplace(t.id, i).second)
            throw ValidationError("duplicate template id: " + t.id);
        if (!(t.base_quality >= 0.0 && t.base_quality <= 1.0))
            throw ValidationError("template " + t.id + ": base_quality must lie in [0, 1]");
        t.slot_names(); // validates uniqueness
        for (auto s : t.scenarios)
            index_[{t.category.index, s}].push_back(i);
    }
}

const Template* TemplateLibrary::by_id(std::string_view id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &templates_[it->second];
}

const std::vector<std::size_t>& TemplateLibrary::matching(Category c, ScenarioKind s) const {
    auto it = index_.find({c.index, s});
    return it == index_.end() ? empty_ : it->second;
}

TemplateLibrary parse_template_library(std::string_view bytes, const CategorySet& categories) {
    json doc = parse_json(bytes, "template library");
    if (!doc.is_object() || !doc.contains("templates") || !doc["templates"].is_array())
        throw ParseError("template library: expected top-level {\"templates\": [...]}");

    std::vector<Template> templates;
    for (const auto& item : doc["templates"]) {
        Template t;
        t.id = require_string(item, "id", "template");
        const std::string cat = require_string(item, "category", "template " + t.id);
        auto category = categories.find(cat);
        if (!category)
            throw ValidationError("template " + t.id + ": unknown category \"" + cat + "\"");
        t.category = *category;
        if (!item.contains("scenarios") || !item["scenarios"].is_array())
            throw ParseError("template " + t.id + ": missing \"scenarios\" array");
        for (const auto& s : item["scenarios"]) {
            if (!s.is_string())
                throw ParseError("template " + t.id + ": scenario entries must be strings");
            auto kind = parse_scenario(s.get<std::string>());
            if (!kind)
                throw ValidationError("template " + t.id + ": unknown scenario \"" +
                                      s.get<std::string>() + "\"");
            t.scenarios.insert(*kind);
        }
        const std::string cx = require_string(item, "complexity", "template " + t.id);
        auto complexity = parse_complexity(cx);
        if (!complexity)
            throw ValidationError("template " + t.id + ": unknown complexity \"" + cx + "\"");
        t.complexity = *complexity;
        t.text = require_string(item, "text", "template " + t.id);
        t.base_quality = require_number(item, "base_quality", "template " + t.id);
        templates.push_back(std::move(t));
    }
    return TemplateLibrary(std::move(templates));
}

std::string instantiate_template(const Template& tpl,
                                 const std::map<std::string, std::string>& slot_values) {
    std::string out;
    out.reserve(tpl.text.size());
    std::size_t pos = 0;
    while (true) {
        auto open = tpl.text.find("{{", pos);
        if (open == std::string::npos) {
            out.append(tpl.text, pos, std::string::npos);
            break;
        }
        out.append(tpl.text, pos, open - pos);
        auto close = tpl.text.find("}}", open + 2);
        if (close == std::string::npos)
            throw ValidationError("template " + tpl.id + ": unterminated slot placeholder");
        const std::string name = trim(tpl.text.substr(open + 2, close - open - 2));
        auto it = slot_values.find(name);
        if (it == slot_values.end())
            throw ValidationError("missing slot value: " + name);
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

PromptGenome assemble_genome(const TemplateLibrary& library, ScenarioKind scenario,
                             const std::map<Category, std::string>& choices,
                             const std::map<std::string, std::string>& slot_values,
                             std::uint64_t id, const CategorySet& categories) {
    std::vector<PromptComponent> components;
    // std::map keeps keys ordered by category index, i.e. canonical order.
    for (const auto& [category, template_id] : choices) {
        const Template* tpl = library.by_id(template_id);
        if (!tpl)
            throw ValidationError("unknown template id: " + template_id);
        if (!(tpl->category == category))
            throw ValidationError("template " + template_id + " does not belong to category " +
                                  categories.name(category));
        if (!tpl->scenarios.contains(scenario))
            throw ValidationError("template " + template_id + " does not list scenario " +
                                  std::string(scenario_name(scenario)));
        PromptComponent comp;
        comp.category = category;
        comp.text = instantiate_template(*tpl, slot_values);
        comp.quality = tpl->base_quality;
        comp.origin = Origin::library;
        components.push_back(std::move(comp));
    }
    return make_genome(id, scenario, std::move(components), categories);
}

std::string render_text(const PromptGenome& genome) {
    std::string out;
    bool first = true;
    for (const auto& comp : genome.components) {
        if (!first)
            out.push_back('\n');
        out.append(comp.text);
        first = false;
    }
    return out;
}

std::string serialize_genome(const PromptGenome& genome, const CategorySet& categories) {
    json doc;
    doc["id"] = genome.id;
    doc["scenario"] = std::string(scenario_name(genome.scenario));
    json comps = json::array();
    for (const auto& comp : genome.components) {
        json c;
        c["category"] = categories.name(comp.category);
        c["text"] = comp.text;
        c["quality"] = comp.quality;
        c["origin"] = std::string(origin_name(comp.origin));
        comps.push_back(std::move(c));
    }
    doc["components"] = std::move(comps);
    return doc.dump(2);
}

PromptGenome deserialize_genome(std::string_view bytes, const CategorySet& categories) {
    json doc = parse_json(bytes, "genome");
    if (!doc.is_object())
        throw ParseError("genome: expected a JSON object");
    PromptGenome g;
    if (!doc.contains("id") || !doc["id"].is_number_unsigned())
        throw ParseError("genome: missing unsigned \"id\"");
    g.id = doc["id"].get<std::uint64_t>();
    const std::string scen = require_string(doc, "scenario", "genome");
    auto kind = parse_scenario(scen);
    if (!kind)
        throw ParseError("genome: unknown scenario \"" + scen + "\"");
    g.scenario = *kind;
    if (!doc.contains("components") || !doc["components"].is_array())
        throw ParseError("genome: missing \"components\" array");
    for (const auto& item : doc["components"]) {
        PromptComponent comp;
        const std::string cat = require_string(item, "category", "genome component");
        auto category = categories.find(cat);
        if (!category)
            throw ParseError("genome component: unknown category \"" + cat + "\"");
        comp.category = *category;
        comp.text = require_string(item, "text", "genome component");
        comp.quality = require_number(item, "quality", "genome component");
        const std::string orig = require_string(item, "origin", "genome component");
        auto origin = parse_origin(orig);
        if (!origin)
            throw ParseError("genome component: unknown origin \"" + orig + "\"");
        comp.origin = *origin;
        g.components.push_back(std::move(comp));
    }
    validate_genome(g, categories);
    return g;
}

} // namespace medprompt
