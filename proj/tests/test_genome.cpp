#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "medprompt/errors.hpp"
#include "medprompt/genome.hpp"
#include "medprompt/rng.hpp"

#include <string>

using namespace medprompt;

namespace {

const CategorySet& cats() { return CategorySet::canonical(); }

Category cat(std::uint32_t i) { return Category{i}; }

PromptComponent comp(std::uint32_t category, std::string text, double quality = 0.5,
                     Origin origin = Origin::library) {
    return PromptComponent{cat(category), std::move(text), quality, origin};
}

std::string library_json(const std::string& templates) {
    return std::string("{\"templates\": [") + templates + "]}";
}

std::string tpl(const std::string& id, const std::string& category, const std::string& text,
                double bq = 0.5, const std::string& scenarios = "\"diagnosis\"") {
    return "{\"id\": \"" + id + "\", \"category\": \"" + category +
           "\", \"scenarios\": [" + scenarios + "], \"complexity\": \"moderate\", " +
           "\"text\": \"" + text + "\", \"base_quality\": " + std::to_string(bq) + "}";
}

} // namespace

TEST_CASE("parse_template_library accepts a minimal two-template file") {
    const auto lib = parse_template_library(
        library_json(tpl("T1", "role_definition", "You are a consultant.") + "," +
                     tpl("T2", "boundary_statement", "Consult a clinician.")),
        cats());
    CHECK(lib.templates().size() == 2);
    CHECK(lib.by_id("T1") != nullptr);
    CHECK(lib.by_id("T2") != nullptr);
}

TEST_CASE("parse_template_library rejects duplicate ids, naming the id") {
    const std::string bytes = library_json(tpl("T1", "role_definition", "a") + "," +
                                           tpl("T1", "boundary_statement", "b"));
    CHECK_THROWS_WITH_AS(parse_template_library(bytes, cats()),
                         doctest::Contains("T1"), ValidationError);
}

TEST_CASE("parse_template_library rejects unknown categories") {
    CHECK_THROWS_AS(parse_template_library(library_json(tpl("T1", "foo", "a")), cats()),
                    ValidationError);
}

TEST_CASE("parse_template_library reports line and column on malformed bytes") {
    try {
        parse_template_library("{\"templates\": [\n  {bad}\n]}", cats());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
}

TEST_CASE("library fixture with four table-style templates parses") {
    // Four representative rows: reasoning, request, role, boundary flavors.
    const auto lib = parse_template_library(
        library_json(
            tpl("DX1", "reasoning_framework",
                "Work through the differential for {{case}} before concluding.", 0.8) + "," +
            tpl("TX1", "information_request",
                "Weigh the treatment options for {{condition}} and justify the choice.", 0.7,
                "\"treatment\"") + "," +
            tpl("ED1", "role_definition",
                "You are an educator explaining {{condition}} at a {{literacy}} level.", 0.6,
                "\"education\"") + "," +
            tpl("DOC1", "information_request",
                "Summarize the encounter as a structured note with assessment and plan.", 0.5,
                "\"history\"")),
        cats());
    CHECK(lib.templates().size() == 4);
}

TEST_CASE("assemble_genome orders all five categories canonically") {
    std::string templates;
    const char* names[] = {"role_definition", "reasoning_framework", "information_request",
                           "uncertainty_expression", "boundary_statement"};
    for (int i = 0; i < 5; ++i) {
        if (i)
            templates += ",";
        templates += tpl("T" + std::to_string(i), names[i], "text " + std::to_string(i));
    }
    const auto lib = parse_template_library(library_json(templates), cats());
    // Request in scrambled order; the genome must come out canonical.
    std::map<Category, std::string> choices{{cat(4), "T4"}, {cat(0), "T0"}, {cat(2), "T2"},
                                            {cat(1), "T1"}, {cat(3), "T3"}};
    const auto g = assemble_genome(lib, ScenarioKind::diagnosis, choices, {}, 7, cats());
    REQUIRE(g.components.size() == 5);
    for (std::uint32_t i = 0; i < 5; ++i)
        CHECK(g.components[i].category.index == i);
    CHECK(g.components[0].origin == Origin::library);
}

TEST_CASE("assemble_genome allows a category subset") {
    const auto lib = parse_template_library(
        library_json(tpl("R", "role_definition", "role text") + "," +
                     tpl("B", "boundary_statement", "boundary text")),
        cats());
    const auto g = assemble_genome(lib, ScenarioKind::diagnosis,
                                   {{cat(0), "R"}, {cat(4), "B"}}, {}, 1, cats());
    CHECK(g.components.size() == 2);
}

TEST_CASE("assemble_genome names the missing slot") {
    const auto lib = parse_template_library(
        library_json(tpl("S", "role_definition", "Manage {{condition}} carefully.")), cats());
    CHECK_THROWS_WITH_AS(
        assemble_genome(lib, ScenarioKind::diagnosis, {{cat(0), "S"}}, {}, 1, cats()),
        doctest::Contains("condition"), ValidationError);
}

TEST_CASE("assemble_genome rejects a scenario the template does not list") {
    const auto lib =
        parse_template_library(library_json(tpl("R", "role_definition", "x")), cats());
    CHECK_THROWS_AS(assemble_genome(lib, ScenarioKind::education, {{cat(0), "R"}}, {}, 1,
                                    cats()),
                    ValidationError);
}

TEST_CASE("render_text joins components with single newlines") {
    const auto one = make_genome(1, ScenarioKind::diagnosis, {comp(0, "X")}, cats());
    CHECK(render_text(one) == "X");
    const auto two =
        make_genome(2, ScenarioKind::diagnosis, {comp(0, "A"), comp(1, "B")}, cats());
    CHECK(render_text(two) == "A\nB");
    CHECK(render_text(two) == render_text(two));
}

TEST_CASE("genome invariants are enforced") {
    CHECK_THROWS_AS(make_genome(1, ScenarioKind::diagnosis, {}, cats()), ValidationError);
    CHECK_THROWS_AS(
        make_genome(1, ScenarioKind::diagnosis, {comp(0, "a"), comp(0, "b")}, cats()),
        ValidationError);
    CHECK_THROWS_AS(
        make_genome(1, ScenarioKind::diagnosis, {comp(1, "a"), comp(0, "b")}, cats()),
        ValidationError);
    CHECK_THROWS_AS(make_genome(1, ScenarioKind::diagnosis, {comp(0, "   ")}, cats()),
                    ValidationError);
    CHECK_THROWS_AS(make_genome(1, ScenarioKind::diagnosis, {comp(0, "a", 1.5)}, cats()),
                    ValidationError);
}

TEST_CASE("serialize/deserialize round trips preserve reals bit-exactly") {
    const auto g = make_genome(
        11, ScenarioKind::treatment,
        {comp(0, "role", 0.37), comp(2, "ask", 0.123456789012345678, Origin::fusion),
         comp(4, "bounds", 1.0, Origin::mutation)},
        cats());
    const auto bytes = serialize_genome(g, cats());
    const auto back = deserialize_genome(bytes, cats());
    CHECK(back == g);
    CHECK(back.components[0].quality == 0.37);
}

TEST_CASE("deserialize rejects unknown categories") {
    const std::string bytes = R"({"id": 1, "scenario": "diagnosis", "components": [
        {"category": "foo", "text": "x", "quality": 0.5, "origin": "library"}]})";
    CHECK_THROWS_AS(deserialize_genome(bytes, cats()), ParseError);
}

TEST_CASE("round trip is the identity over random genomes") {
    Rng rng(99);
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<PromptComponent> components;
        for (std::uint32_t c = 0; c < 5; ++c) {
            if (rng.uniform01() < 0.4 && !(c == 4 && components.empty()))
                continue;
            PromptComponent p;
            p.category = cat(c);
            p.text = "text-" + std::to_string(rng.next_u64() % 1000);
            p.quality = rng.uniform01();
            p.origin = static_cast<Origin>(rng.index(5));
            components.push_back(std::move(p));
        }
        if (components.empty())
            components.push_back(comp(0, "fallback"));
        const auto g = make_genome(rng.next_u64(), ScenarioKind::history,
                                   std::move(components), cats());
        CHECK(deserialize_genome(serialize_genome(g, cats()), cats()) == g);
    }
}

TEST_CASE("custom categories extend the canonical order") {
    const auto extended = CategorySet::with_custom({"escalation_protocol"});
    CHECK(extended.size() == 6);
    CHECK(extended.find("escalation_protocol")->index == 5);
    CHECK_THROWS_AS(CategorySet::with_custom({"role_definition"}), ValidationError);
    const auto g = make_genome(1, ScenarioKind::diagnosis,
                               {comp(0, "a"), PromptComponent{Category{5}, "z", 0.5,
                                                              Origin::library}},
                               extended);
    CHECK(g.components.back().category.index == 5);
}

TEST_CASE("template slot names must be unique") {
    CHECK_THROWS_AS(
        parse_template_library(
            library_json(tpl("S", "role_definition", "{{a}} and {{a}}")), cats()),
        ValidationError);
}
