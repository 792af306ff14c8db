#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace medprompt {

/// Functional role of a prompt fragment. Values index into a CategorySet;
/// the canonical five always occupy indices 0..4 and define the canonical order.
struct Category {
    std::uint32_t index = 0;
    auto operator<=>(const Category&) const = default;
};

/// The closed set of component categories for a run: the five canonical roles,
/// optionally extended with config-declared custom categories (appended after
/// the canonical block, so index order stays a total canonical order).
class CategorySet {
  public:
    static const CategorySet& canonical();
    static CategorySet with_custom(const std::vector<std::string>& extra);

    std::size_t size() const { return names_.size(); }
    const std::string& name(Category c) const;
    std::optional<Category> find(std::string_view name) const;

    static constexpr std::uint32_t kRoleDefinition = 0;
    static constexpr std::uint32_t kReasoningFramework = 1;
    static constexpr std::uint32_t kInformationRequest = 2;
    static constexpr std::uint32_t kUncertaintyExpression = 3;
    static constexpr std::uint32_t kBoundaryStatement = 4;
    static constexpr std::size_t kCanonicalCount = 5;

  private:
    CategorySet() = default;
    std::vector<std::string> names_;
};

/// Clinical scenario label used by scenario-adaptive weighting.
enum class ScenarioKind { diagnosis, treatment, history, education };

inline constexpr ScenarioKind kAllScenarios[] = {
    ScenarioKind::diagnosis, ScenarioKind::treatment, ScenarioKind::history,
    ScenarioKind::education};

std::string_view scenario_name(ScenarioKind s);
std::optional<ScenarioKind> parse_scenario(std::string_view name);

/// Provenance of a component's current text.
enum class Origin { library, crossover_a, crossover_b, fusion, mutation };

std::string_view origin_name(Origin o);
std::optional<Origin> parse_origin(std::string_view name);

/// Category-tagged text fragment with its per-component quality score.
struct PromptComponent {
    Category category;
    std::string text;     // nonempty after trim
    double quality = 0.0; // in [0, 1]
    Origin origin = Origin::library;

    bool operator==(const PromptComponent&) const = default;
};

/// Ordered collection of distinct components; the unit of evolution.
///
/// Invariants (enforced by make_genome): at least one component, at most one
/// per category, categories strictly in canonical (index) order, texts nonempty
/// after trim, qualities in [0, 1].
struct PromptGenome {
    std::uint64_t id = 0;
    ScenarioKind scenario = ScenarioKind::diagnosis;
    std::vector<PromptComponent> components;

    const PromptComponent* find(Category c) const;
    bool operator==(const PromptGenome&) const = default;
};

/// Validate invariants and construct. Throws ValidationError on violation.
PromptGenome make_genome(std::uint64_t id, ScenarioKind scenario,
                         std::vector<PromptComponent> components,
                         const CategorySet& categories);

/// Validate an already-assembled genome (used on every construction path).
void validate_genome(const PromptGenome& genome, const CategorySet& categories);

enum class Complexity { straightforward, moderate, complex };

std::string_view complexity_name(Complexity c);
std::optional<Complexity> parse_complexity(std::string_view name);

/// A library prompt element with optional {{slot}} placeholders.
struct Template {
    std::string id;
    Category category;
    std::set<ScenarioKind> scenarios;
    Complexity complexity = Complexity::moderate;
    std::string text;
    double base_quality = 0.0;

    /// Unique slot names in order of first appearance.
    std::vector<std::string> slot_names() const;
};

/// Immutable collection of templates indexed by (category, scenario).
class TemplateLibrary {
  public:
    explicit TemplateLibrary(std::vector<Template> templates);

    const std::vector<Template>& templates() const { return templates_; }
    const Template* by_id(std::string_view id) const;

    /// Indices of templates matching (category, scenario), in file order.
    const std::vector<std::size_t>& matching(Category c, ScenarioKind s) const;

  private:
    std::vector<Template> templates_;
    std::map<std::string, std::size_t, std::less<>> by_id_;
    std::map<std::pair<std::uint32_t, ScenarioKind>, std::vector<std::size_t>> index_;
    std::vector<std::size_t> empty_;
};

/// Parse a library file (UTF-8 JSON, {"templates": [...]}).
/// Throws ParseError on malformed syntax (with line/offset) and
/// ValidationError on duplicate ids, unknown categories, or bad fields.
TemplateLibrary parse_template_library(std::string_view bytes, const CategorySet& categories);

/// Instantiate a template's text, substituting {{slot}} placeholders.
/// Throws ValidationError naming the slot when a value is missing.
std::string instantiate_template(const Template& tpl,
                                 const std::map<std::string, std::string>& slot_values);

/// Build a genome from chosen templates. Components come out in canonical
/// order with quality seeded from base_quality and origin = library.
PromptGenome assemble_genome(const TemplateLibrary& library, ScenarioKind scenario,
                             const std::map<Category, std::string>& choices,
                             const std::map<std::string, std::string>& slot_values,
                             std::uint64_t id, const CategorySet& categories);

/// Component texts joined with single newlines. Deterministic.
std::string render_text(const PromptGenome& genome);

/// JSON round trip; real fields survive bit-exactly.
std::string serialize_genome(const PromptGenome& genome, const CategorySet& categories);
PromptGenome deserialize_genome(std::string_view bytes, const CategorySet& categories);

} // namespace medprompt
