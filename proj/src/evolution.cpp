#include "medprompt/evolution.hpp"

#include "medprompt/errors.hpp"
#include "medprompt/text.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

namespace medprompt {

void EvolutionConfig::validate() const {
    if (population_size < 2)
        throw ConfigError("population_size must be >= 2");
    if (tournament_size < 2 || tournament_size > population_size)
        throw ConfigError("tournament_size must lie in [2, population_size]");
    if (max_generations < 1)
        throw ConfigError("max_generations must be >= 1");
    for (double p : {selection_probability, initial_mutation_probability, p_synonym, p_elaborate,
                     p_simplify, p_replace})
        if (p < 0.0 || p > 1.0)
            throw ConfigError("probabilities must lie in [0, 1]");
    const double op_sum = p_synonym + p_elaborate + p_simplify + p_replace;
    if (std::abs(op_sum - 1.0) > 1e-9)
        throw ConfigError("mutation operator probabilities must sum to 1");
    if (!(mutation_decay > 0.0 && mutation_decay <= 1.0))
        throw ConfigError("mutation_decay must lie in (0, 1]");
    if (!(verification_threshold > 0.0 && verification_threshold <= 1.0))
        throw ConfigError("verification_threshold must lie in (0, 1]");
    if (mutation_probability_min < 0.0 || mutation_probability_max > 1.0 ||
        mutation_probability_min > mutation_probability_max)
        throw ConfigError("mutation probability bounds must satisfy 0 <= min <= max <= 1");
    if (early_stop_window < 1)
        throw ConfigError("early_stop_window must be >= 1");
    if (early_stop_threshold < 0.0)
        throw ConfigError("early_stop_threshold must be nonnegative");
    if (elitism >= population_size)
        throw ConfigError("elitism must be smaller than population_size");
    if (quality_exponent < 0.0)
        throw ConfigError("quality_exponent must be nonnegative");
    if (adaptation_rate < 0.0)
        throw ConfigError("adaptation_rate must be nonnegative");
    if (crossover_threshold < 0.0)
        throw ConfigError("crossover_threshold must be nonnegative");
}

MutationTexts default_mutation_texts() {
    MutationTexts t;
    t.elaborations = {
        {CategorySet::kRoleDefinition,
         {"Draw on current specialty training and practice standards.",
          "State the scope of practice relevant to this consultation."}},
        {CategorySet::kReasoningFramework,
         {"Weigh competing hypotheses before committing to a leading diagnosis.",
          "Re-examine the evidence for each step before moving on."}},
        {CategorySet::kInformationRequest,
         {"List any additional data that would change the assessment.",
          "Note which findings are pivotal and which are incidental."}},
        {CategorySet::kUncertaintyExpression,
         {"Attach an explicit confidence level to each conclusion.",
          "Flag any conclusion that rests on incomplete information."}},
        {CategorySet::kBoundaryStatement,
         {"Remind the reader to consult healthcare provider for personal decisions.",
          "Spell out what this response can and cannot be used for."}},
    };
    t.filler_phrases = {"please", "kindly", "as appropriate", "if possible", "very", "really"};
    return t;
}

Population init_population(const EvolutionContext& ctx, const EvolutionConfig& cfg, Rng& rng,
                           std::uint64_t& next_genome_id) {
    if (!ctx.library || !ctx.categories)
        throw ConfigError("init_population: context missing library or categories");
    std::vector<Category> required = ctx.init_categories;
    if (required.empty())
        for (std::uint32_t i = 0; i < ctx.categories->size(); ++i)
            required.push_back(Category{i});
    std::sort(required.begin(), required.end());

    // Resolve pools up front so an empty pool fails before any draw.
    std::vector<std::pair<Category, const std::vector<std::size_t>*>> pools;
    for (Category c : required) {
        const auto& pool = ctx.library->matching(c, ctx.scenario);
        if (pool.empty())
            throw ValidationError("init_population: no templates for category " +
                                  ctx.categories->name(c) + " and scenario " +
                                  std::string(scenario_name(ctx.scenario)));
        pools.emplace_back(c, &pool);
    }

    Population pop;
    pop.generation = 0;
    pop.mutation_probability = cfg.initial_mutation_probability;
    for (std::size_t m = 0; m < cfg.population_size; ++m) {
        std::map<Category, std::string> choices;
        for (const auto& [category, pool] : pools) {
            std::vector<double> weights;
            weights.reserve(pool->size());
            for (std::size_t idx : *pool)
                weights.push_back(ctx.library->templates()[idx].base_quality);
            const std::size_t pick = rng.pick_weighted(weights);
            choices[category] = ctx.library->templates()[(*pool)[pick]].id;
        }
        Member member;
        member.genome = assemble_genome(*ctx.library, ctx.scenario, choices, ctx.slot_values,
                                        next_genome_id++, *ctx.categories);
        pop.members.push_back(std::move(member));
    }
    return pop;
}

std::size_t tournament_select(const std::vector<Member>& members, const EvolutionConfig& cfg,
                              Rng& rng) {
    if (cfg.tournament_size > members.size())
        throw ConfigError("tournament_size exceeds population size");
    for (const auto& m : members)
        if (!m.fitness)
            throw ValidationError("tournament_select: fitness records incomplete");
    const auto sample = rng.sample_without_replacement(members.size(), cfg.tournament_size);
    std::size_t best = sample[0];
    for (std::size_t idx : sample) {
        const double f = members[idx].fitness->f;
        const double bf = members[best].fitness->f;
        if (f > bf || (f == bf && members[idx].genome.id < members[best].genome.id))
            best = idx;
    }
    if (rng.uniform01() < cfg.selection_probability)
        return best;
    return sample[rng.index(sample.size())];
}

double adaptive_mutation_update(double current, const GenerationStats& stats,
                                const EvolutionConfig& cfg, bool* skipped) {
    if (skipped)
        *skipped = false;
    if (!(stats.mean_f > 0.0)) {
        if (skipped)
            *skipped = true;
        return current;
    }
    const double raw = current * (1.0 + cfg.adaptation_rate * stats.sigma_f / stats.mean_f);
    return std::clamp(raw, cfg.mutation_probability_min, cfg.mutation_probability_max);
}

double mutation_damping(std::size_t generation, double quality, const EvolutionConfig& cfg) {
    return std::pow(cfg.mutation_decay, static_cast<double>(generation)) *
           std::pow(1.0 - quality, cfg.quality_exponent);
}

double component_mutation_probability(std::size_t generation, double quality, double base,
                                      const EvolutionConfig& cfg) {
    if (quality >= 1.0)
        return 0.0; // a perfect component never mutates
    const double raw = base * mutation_damping(generation, quality, cfg);
    if (raw == 0.0)
        return 0.0;
    return std::clamp(raw, cfg.mutation_probability_min, cfg.mutation_probability_max);
}

namespace {

struct SpanText {
    ConceptSpan span;
    std::string text; // raw characters covered by the span
};

std::vector<SpanText> spans_with_text(const std::string& text, const Lexicon& lexicon,
                                      std::vector<Token>* tokens_out = nullptr) {
    auto tokens = tokenize(text);
    std::vector<SpanText> out;
    for (const auto& span : identify_concepts(tokens, lexicon)) {
        const std::size_t b = tokens[span.start_token].begin;
        const std::size_t e = tokens[span.end_token].end;
        out.push_back({span, text.substr(b, e - b)});
    }
    if (tokens_out)
        *tokens_out = std::move(tokens);
    return out;
}

std::set<std::string> concept_ids(const std::vector<SpanText>& spans) {
    std::set<std::string> ids;
    for (const auto& s : spans)
        ids.insert(s.span.concept_id);
    return ids;
}

} // namespace

PromptComponent semantic_fusion(const PromptComponent& a, const PromptComponent& b,
                                const Lexicon& lexicon) {
    if (!(a.category == b.category))
        throw ValidationError("semantic_fusion: category mismatch");
    const PromptComponent& star = (b.quality > a.quality) ? b : a; // tie -> a
    const PromptComponent& other = (&star == &a) ? b : a;

    std::vector<Token> star_tokens;
    const auto star_spans = spans_with_text(star.text, lexicon, &star_tokens);
    const auto star_ids = concept_ids(star_spans);
    const auto other_spans = spans_with_text(other.text, lexicon);

    // Concepts the scaffold is missing, in the other parent's text order.
    std::vector<std::string> additions;
    std::set<std::string> added;
    for (const auto& s : other_spans) {
        if (star_ids.contains(s.span.concept_id) || added.contains(s.span.concept_id))
            continue;
        added.insert(s.span.concept_id);
        additions.push_back(s.text);
    }
    if (additions.empty())
        return star; // idempotent: nothing to merge

    // Insertion slot: end of the scaffold sentence holding the most concepts,
    // otherwise the scaffold end.
    const auto sentences = split_sentences(star.text);
    std::size_t insert_pos = star.text.size();
    std::size_t best_count = 0;
    for (const auto& sentence : sentences) {
        std::size_t count = 0;
        for (const auto& s : star_spans) {
            const std::size_t start_char = star_tokens[s.span.start_token].begin;
            if (start_char >= sentence.begin && start_char < sentence.end)
                ++count;
        }
        if (count > best_count) {
            best_count = count;
            insert_pos = sentence.has_terminator ? sentence.terminator_pos : sentence.end;
        }
    }

    std::string clause;
    for (const auto& text : additions) {
        clause += ", ";
        clause += text;
    }
    PromptComponent fused;
    fused.category = star.category;
    fused.text = star.text.substr(0, insert_pos) + clause + star.text.substr(insert_pos);
    fused.quality = std::max(a.quality, b.quality);
    fused.origin = Origin::fusion;
    return fused;
}

PromptGenome crossover(const PromptGenome& a, double total_quality_a, const PromptGenome& b,
                       double total_quality_b, const EvolutionContext& ctx,
                       const EvolutionConfig& cfg, Rng& rng, std::uint64_t child_id) {
    if (a.scenario != b.scenario)
        throw ValidationError("crossover: parents must share a scenario");
    if (!ctx.categories || !ctx.lexicon)
        throw ConfigError("crossover: context missing categories or lexicon");
    const double q_sum = total_quality_a + total_quality_b;
    const double p_a = q_sum > 0.0 ? total_quality_a / q_sum : 0.5;
    const double p_b = 1.0 - p_a;

    std::vector<PromptComponent> child_components;
    // Union of parent categories, canonical order. One r draw per two-source
    // category; single-source categories are plain copies.
    for (std::uint32_t idx = 0; idx < ctx.categories->size(); ++idx) {
        const Category cat{idx};
        const PromptComponent* ca = a.find(cat);
        const PromptComponent* cb = b.find(cat);
        if (!ca && !cb)
            continue;
        if (ca && !cb) {
            PromptComponent c = *ca;
            c.origin = Origin::crossover_a;
            child_components.push_back(std::move(c));
            continue;
        }
        if (cb && !ca) {
            PromptComponent c = *cb;
            c.origin = Origin::crossover_b;
            child_components.push_back(std::move(c));
            continue;
        }
        const double r = rng.uniform01();
        const double qa = ca->quality;
        const double qb = cb->quality;
        if (qa > qb + cfg.crossover_threshold || r < p_a) {
            PromptComponent c = *ca;
            c.origin = Origin::crossover_a;
            child_components.push_back(std::move(c));
        } else if (qb > qa + cfg.crossover_threshold || r < p_b) {
            PromptComponent c = *cb;
            c.origin = Origin::crossover_b;
            child_components.push_back(std::move(c));
        } else {
            PromptComponent fused = semantic_fusion(*ca, *cb, *ctx.lexicon);
            // A genuinely merged text is new material; re-score it.
            if (fused.origin == Origin::fusion && ctx.component_quality)
                fused.quality = ctx.component_quality(fused);
            child_components.push_back(std::move(fused));
        }
    }
    return make_genome(child_id, a.scenario, std::move(child_components), *ctx.categories);
}

std::string simplify_component_text(const std::string& text, const Lexicon& lexicon,
                                    const std::vector<std::string>& filler_phrases) {
    const auto before = concept_ids(spans_with_text(text, lexicon));

    std::vector<Token> tokens;
    const auto spans = spans_with_text(text, lexicon, &tokens);
    auto overlaps_concept = [&](std::size_t begin, std::size_t end) {
        for (const auto& s : spans) {
            const std::size_t sb = tokens[s.span.start_token].begin;
            const std::size_t se = tokens[s.span.end_token].end;
            if (begin < se && sb < end)
                return true;
        }
        return false;
    };

    // Collect removable ranges: concept-free parentheticals, then filler words.
    std::vector<std::pair<std::size_t, std::size_t>> removals;
    std::size_t pos = 0;
    while ((pos = text.find('(', pos)) != std::string::npos) {
        const auto close = text.find(')', pos + 1);
        if (close == std::string::npos)
            break;
        if (!overlaps_concept(pos, close + 1))
            removals.emplace_back(pos, close + 1);
        pos = close + 1;
    }
    const std::string lower = to_lower(text);
    for (const auto& filler : filler_phrases) {
        const std::string needle = to_lower(filler);
        std::size_t p = 0;
        while ((p = lower.find(needle, p)) != std::string::npos) {
            const std::size_t e = p + needle.size();
            const bool left_ok = p == 0 || !std::isalnum(static_cast<unsigned char>(lower[p - 1]));
            const bool right_ok =
                e >= lower.size() || !std::isalnum(static_cast<unsigned char>(lower[e]));
            if (left_ok && right_ok && !overlaps_concept(p, e))
                removals.emplace_back(p, e);
            p = e;
        }
    }
    if (removals.empty())
        return text;
    std::sort(removals.begin(), removals.end());
    // Drop ranges that overlap an earlier one, then splice right to left.
    std::vector<std::pair<std::size_t, std::size_t>> kept;
    for (const auto& r : removals) {
        if (!kept.empty() && r.first < kept.back().second)
            continue;
        kept.push_back(r);
    }
    std::string out = text;
    for (auto it = kept.rbegin(); it != kept.rend(); ++it)
        out.erase(it->first, it->second - it->first);

    // Tidy whitespace: collapse runs of spaces, drop space before punctuation.
    std::string tidy;
    tidy.reserve(out.size());
    for (char c : out) {
        if (c == ' ' && !tidy.empty() && tidy.back() == ' ')
            continue;
        if ((c == ',' || c == '.' || c == ';') && !tidy.empty() && tidy.back() == ' ')
            tidy.pop_back();
        tidy.push_back(c);
    }
    tidy = trim(tidy);
    if (tidy.empty())
        return text;

    // Guard: every previously matched concept must still match.
    const auto after = concept_ids(spans_with_text(tidy, lexicon));
    for (const auto& id : before)
        if (!after.contains(id))
            return text;
    return tidy;
}

namespace {

enum class MutationOp { synonym, elaborate, simplify, replace };

MutationOp pick_operator(double u, const EvolutionConfig& cfg) {
    double cum = cfg.p_synonym;
    if (u < cum)
        return MutationOp::synonym;
    cum += cfg.p_elaborate;
    if (u < cum)
        return MutationOp::elaborate;
    cum += cfg.p_simplify;
    if (u < cum)
        return MutationOp::simplify;
    return MutationOp::replace;
}

// Replace one lexicon-matched term with a different surface form of the same
// concept. No-op when nothing matches or no alternative form exists.
std::string apply_synonym(const std::string& text, const Lexicon& lexicon, Rng& rng) {
    std::vector<Token> tokens;
    auto tokens_owned = tokenize(text);
    const auto spans = identify_concepts(tokens_owned, lexicon);
    if (spans.empty())
        return text;
    const auto& span = spans[rng.index(spans.size())];
    const std::size_t b = tokens_owned[span.start_token].begin;
    const std::size_t e = tokens_owned[span.end_token].end;
    const std::string current = text.substr(b, e - b);
    const auto alternatives = lexicon.synonyms_excluding(span.concept_id, current);
    if (alternatives.empty())
        return text;
    const std::string& replacement = alternatives[rng.index(alternatives.size())];
    return text.substr(0, b) + replacement + text.substr(e);
}

} // namespace

PromptGenome mutate(const PromptGenome& genome, std::size_t generation, double p_m_base,
                    const EvolutionContext& ctx, const EvolutionConfig& cfg, Rng& rng,
                    MutationOutcome* outcome, bool uniform) {
    PromptGenome out = genome;
    for (auto& comp : out.components) {
        const double p =
            uniform ? p_m_base
                    : component_mutation_probability(generation, comp.quality, p_m_base, cfg);
        // One draw per component, taken unconditionally to keep the stream
        // layout independent of quality values.
        const double u = rng.uniform01();
        if (u >= p)
            continue;
        MutationOp op = pick_operator(rng.uniform01(), cfg);
        std::string new_text = comp.text;
        if (op == MutationOp::replace) {
            // Alternatives: same category and scenario, instantiating to a
            // different text. Missing slot values disqualify a template.
            std::vector<std::string> candidates;
            for (std::size_t idx : ctx.library->matching(comp.category, ctx.scenario)) {
                const Template& tpl = ctx.library->templates()[idx];
                try {
                    std::string inst = instantiate_template(tpl, ctx.slot_values);
                    if (inst != comp.text)
                        candidates.push_back(std::move(inst));
                } catch (const ValidationError&) {
                    continue;
                }
            }
            if (candidates.empty()) {
                op = MutationOp::synonym;
                if (outcome)
                    ++outcome->replace_fallbacks;
            } else {
                new_text = candidates[rng.index(candidates.size())];
            }
        }
        switch (op) {
        case MutationOp::synonym:
            new_text = apply_synonym(comp.text, *ctx.lexicon, rng);
            break;
        case MutationOp::elaborate: {
            auto it = ctx.mutation_texts.elaborations.find(comp.category.index);
            if (it != ctx.mutation_texts.elaborations.end() && !it->second.empty()) {
                const auto& phrase = it->second[rng.index(it->second.size())];
                new_text = comp.text + " " + phrase;
            }
            break;
        }
        case MutationOp::simplify:
            new_text = simplify_component_text(comp.text, *ctx.lexicon,
                                               ctx.mutation_texts.filler_phrases);
            break;
        case MutationOp::replace:
            break; // chosen above
        }
        if (new_text != comp.text) {
            comp.text = std::move(new_text);
            comp.origin = Origin::mutation;
            if (ctx.component_quality)
                comp.quality = ctx.component_quality(comp);
            if (outcome)
                ++outcome->modifications[comp.category.index];
        }
    }
    validate_genome(out, *ctx.categories);
    return out;
}

double constrained_fitness(double q, double v, double tau) {
    if (!(q >= 0.0 && q <= 1.0) || !(v >= 0.0 && v <= 1.0))
        throw ValidationError("constrained_fitness: Q and V must lie in [0, 1]");
    if (!(tau > 0.0 && tau <= 1.0))
        throw ConfigError("constrained_fitness: tau must lie in (0, 1]");
    return v >= tau ? q : q * v / tau;
}

bool should_stop_early(const std::vector<double>& best_history, const EvolutionConfig& cfg) {
    const std::size_t w = cfg.early_stop_window;
    if (best_history.size() < w + 1)
        return false;
    const double last = best_history.back();
    const double first = best_history[best_history.size() - 1 - w];
    // Telescoped mean of the last w one-step gains.
    const double mean_gain = (last - first) / static_cast<double>(w);
    return mean_gain < cfg.early_stop_threshold;
}

namespace {

struct EvalCache {
    std::unordered_map<std::uint64_t, FitnessRecord> entries;
};

FitnessRecord evaluate_genome(const PromptGenome& genome, const EvolutionContext& ctx,
                              const EvolutionConfig& cfg, Variant variant, EvalCache& cache) {
    const std::string text = render_text(genome);
    const std::uint64_t key =
        fnv1a64(text) ^ (fnv1a64(ctx.scorer_id) * 0x9e3779b97f4a7c15ull) ^
        (variant == Variant::generic ? 0x5851f42d4c957f2dull : 0ull);
    auto it = cache.entries.find(key);
    if (it != cache.entries.end())
        return it->second;
    FitnessRecord rec;
    rec.quality = ctx.assess(genome);
    rec.q = rec.quality.q;
    if (variant == Variant::generic) {
        // Generic baseline: no verification gate, F = Q.
        rec.verification = integrated_verification(1.0, 1.0, 1.0, 1.0, VerificationWeights{},
                                                   cfg.verification_threshold);
        rec.verification.notes.push_back("generic variant: verification gate disabled");
        rec.v = 1.0;
    } else {
        rec.verification = ctx.verify(genome);
        rec.v = rec.verification.v_total;
    }
    rec.f = constrained_fitness(rec.q, rec.v, cfg.verification_threshold);
    cache.entries.emplace(key, rec);
    return rec;
}

GenerationStats compute_stats(const std::vector<Member>& members, std::size_t generation,
                              double p_m) {
    GenerationStats stats;
    stats.generation = generation;
    stats.mutation_probability = p_m;
    double sum = 0.0;
    double best = 0.0;
    for (const auto& m : members) {
        const double f = m.fitness->f;
        sum += f;
        best = std::max(best, f);
    }
    const double n = static_cast<double>(members.size());
    stats.mean_f = sum / n;
    double ss = 0.0;
    for (const auto& m : members) {
        const double d = m.fitness->f - stats.mean_f;
        ss += d * d;
    }
    stats.sigma_f = std::sqrt(ss / n);
    stats.best_f = best;
    return stats;
}

std::vector<std::size_t> rank_by_fitness(const std::vector<Member>& members) {
    std::vector<std::size_t> order(members.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        const double fx = members[x].fitness->f;
        const double fy = members[y].fitness->f;
        if (fx != fy)
            return fx > fy;
        return members[x].genome.id < members[y].genome.id;
    });
    return order;
}

// Single-point string-level crossover for the generic baseline: cut each
// parent's rendered text at a uniform character position, glue head of A to
// tail of B, and re-split into components using the char ranges each parent
// component occupied (the category markers). Duplicate categories keep the
// first fragment; a fully degenerate cut falls back to cloning parent A.
PromptGenome generic_crossover(const PromptGenome& a, const PromptGenome& b,
                               const EvolutionContext& ctx, Rng& rng, std::uint64_t child_id) {
    struct Fragment {
        Category category;
        std::string text;
        Origin origin;
        bool partial;
    };
    const std::string ta = render_text(a);
    const std::string tb = render_text(b);
    const std::size_t cut_a = rng.index(ta.size() + 1);
    const std::size_t cut_b = rng.index(tb.size() + 1);

    auto component_ranges = [](const PromptGenome& g) {
        std::vector<std::pair<std::size_t, std::size_t>> ranges;
        std::size_t pos = 0;
        for (const auto& comp : g.components) {
            ranges.emplace_back(pos, pos + comp.text.size());
            pos += comp.text.size() + 1; // newline separator
        }
        return ranges;
    };

    std::vector<Fragment> fragments;
    const auto ra = component_ranges(a);
    for (std::size_t i = 0; i < ra.size(); ++i) {
        const std::size_t b0 = ra[i].first;
        const std::size_t e0 = std::min(ra[i].second, cut_a);
        if (e0 <= b0)
            break;
        fragments.push_back({a.components[i].category, ta.substr(b0, e0 - b0),
                             Origin::crossover_a, e0 < ra[i].second});
    }
    const auto rb = component_ranges(b);
    std::vector<Fragment> tail;
    for (std::size_t i = 0; i < rb.size(); ++i) {
        const std::size_t b0 = std::max(rb[i].first, cut_b);
        const std::size_t e0 = rb[i].second;
        if (e0 <= b0)
            continue;
        tail.push_back({b.components[i].category, tb.substr(b0, e0 - b0), Origin::crossover_b,
                        b0 > rb[i].first});
    }
    if (!fragments.empty() && fragments.back().partial && !tail.empty() && tail.front().partial) {
        fragments.back().text += tail.front().text;
        fragments.back().origin = Origin::fusion;
        tail.erase(tail.begin());
    }
    fragments.insert(fragments.end(), tail.begin(), tail.end());

    std::map<std::uint32_t, Fragment*> by_category;
    for (auto& f : fragments) {
        if (trim(f.text).empty())
            continue;
        by_category.try_emplace(f.category.index, &f);
    }
    if (by_category.empty()) {
        PromptGenome clone = a;
        clone.id = child_id;
        return clone;
    }
    std::vector<PromptComponent> components;
    for (const auto& [idx, frag] : by_category) {
        PromptComponent comp;
        comp.category = Category{idx};
        comp.text = trim(frag->text);
        comp.origin = frag->origin;
        comp.quality = ctx.component_quality ? ctx.component_quality(comp) : 0.5;
        components.push_back(std::move(comp));
    }
    return make_genome(child_id, a.scenario, std::move(components), *ctx.categories);
}

} // namespace

RunResult run_evolution(const EvolutionContext& ctx, const EvolutionConfig& cfg,
                        const RunHooks& hooks, const std::optional<RunState>& resume,
                        Variant variant) {
    cfg.validate();
    if (!ctx.assess || (!ctx.verify && variant == Variant::structure_aware))
        throw ConfigError("run_evolution: context missing scorer callables");

    Rng rng(cfg.seed);
    RunState st;
    if (resume) {
        st = *resume;
        rng.set_state(st.rng_state);
        for (auto& m : st.members)
            m.fitness.reset(); // re-derived deterministically below
    } else {
        st.generation = 0;
        st.mutation_probability = cfg.initial_mutation_probability;
        st.next_genome_id = 0;
        Population pop = init_population(ctx, cfg, rng, st.next_genome_id);
        st.members = std::move(pop.members);
    }

    EvalCache cache;
    RunResult result;
    bool done = false;
    while (!done) {
        const std::size_t g = st.generation;
        if (hooks.checkpoint_every > 0 && hooks.on_checkpoint &&
            g % hooks.checkpoint_every == 0) {
            st.rng_state = rng.state();
            hooks.on_checkpoint(st);
        }
        if (hooks.interrupt_before_generation && *hooks.interrupt_before_generation == g) {
            result.interrupted = true;
            result.history = st.stats;
            return result;
        }

        for (auto& m : st.members)
            if (!m.fitness)
                m.fitness = evaluate_genome(m.genome, ctx, cfg, variant, cache);

        GenerationStats stats = compute_stats(st.members, g, st.mutation_probability);
        stats.modifications = st.pending_modifications;
        stats.replace_fallbacks = st.pending_replace_fallbacks;
        st.best_history.push_back(stats.best_f);
        stats.stopped_early = should_stop_early(st.best_history, cfg);
        st.stats.push_back(stats);
        if (hooks.on_generation)
            hooks.on_generation(stats);

        if (stats.stopped_early || g + 1 >= cfg.max_generations) {
            done = true;
            result.stopped_early = stats.stopped_early;
            break;
        }

        if (variant == Variant::structure_aware)
            st.mutation_probability = adaptive_mutation_update(st.mutation_probability, stats, cfg);

        const auto order = rank_by_fitness(st.members);
        std::vector<Member> next;
        next.reserve(cfg.population_size);
        for (std::size_t i = 0; i < cfg.elitism && i < order.size(); ++i)
            next.push_back(st.members[order[i]]); // elites keep id and fitness

        MutationOutcome outcome;
        while (next.size() < cfg.population_size) {
            const std::size_t ia = tournament_select(st.members, cfg, rng);
            const std::size_t ib = tournament_select(st.members, cfg, rng);
            const Member& pa = st.members[ia];
            const Member& pb = st.members[ib];
            PromptGenome child =
                variant == Variant::structure_aware
                    ? crossover(pa.genome, pa.fitness->q, pb.genome, pb.fitness->q, ctx, cfg,
                                rng, st.next_genome_id++)
                    : generic_crossover(pa.genome, pb.genome, ctx, rng, st.next_genome_id++);
            // Offspring carry the index of the generation they join.
            child = variant == Variant::structure_aware
                        ? mutate(child, g + 1, st.mutation_probability, ctx, cfg, rng, &outcome)
                        : mutate(child, 0, cfg.initial_mutation_probability, ctx, cfg, rng,
                                 &outcome, /*uniform=*/true);
            Member m;
            m.genome = std::move(child);
            next.push_back(std::move(m));
        }
        st.members = std::move(next);
        st.generation = g + 1;
        st.pending_modifications = std::move(outcome.modifications);
        st.pending_replace_fallbacks = outcome.replace_fallbacks;
    }

    // Elitism makes the final generation's best the run best.
    const auto order = rank_by_fitness(st.members);
    result.best = st.members[order[0]].genome;
    result.best_fitness = *st.members[order[0]].fitness;
    result.history = st.stats;
    return result;
}

} // namespace medprompt
