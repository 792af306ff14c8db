#include "medprompt/lexicon.hpp"

#include "medprompt/errors.hpp"
#include "medprompt/json_util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace medprompt {

using nlohmann::json;

namespace {

constexpr double kFuzzyThreshold = 0.8;

std::string normalize_form(std::string_view form) {
    std::string out;
    for (const Token& t : tokenize(form)) {
        if (t.norm.empty())
            continue;
        if (!out.empty())
            out.push_back(' ');
        out.append(t.norm);
    }
    return out;
}

std::size_t form_token_count(std::string_view normalized) {
    if (normalized.empty())
        return 0;
    return static_cast<std::size_t>(std::count(normalized.begin(), normalized.end(), ' ')) + 1;
}

} // namespace

Lexicon::Lexicon(std::vector<LexiconEntry> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (e.surface_forms.empty())
            throw ValidationError("lexicon entry " + e.concept_id + ": no surface forms");
        if (!(e.type_priority >= 0.0 && e.type_priority <= 1.0))
            throw ValidationError("lexicon entry " + e.concept_id +
                                  ": type_priority must lie in [0, 1]");
        if (!by_id_.emplace(e.concept_id, i).second)
            throw ValidationError("duplicate concept_id: " + e.concept_id);
        for (const auto& form : e.surface_forms) {
            std::string norm = normalize_form(form);
            std::size_t len = form_token_count(norm);
            if (len == 0)
                throw ValidationError("lexicon entry " + e.concept_id +
                                      ": surface form normalizes to empty");
            if (forms_by_len_.size() <= len)
                forms_by_len_.resize(len + 1);
            forms_by_len_[len].push_back({i, std::move(norm), form});
            max_form_tokens_ = std::max(max_form_tokens_, len);
        }
    }
}

const LexiconEntry* Lexicon::by_concept_id(std::string_view id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &entries_[it->second];
}

const std::vector<Lexicon::FormRef>& Lexicon::forms_with_token_count(
    std::size_t token_count) const {
    if (token_count >= forms_by_len_.size())
        return empty_;
    return forms_by_len_[token_count];
}

std::vector<std::string> Lexicon::synonyms_excluding(std::string_view concept_id,
                                                     std::string_view current) const {
    const LexiconEntry* entry = by_concept_id(concept_id);
    if (!entry)
        return {};
    const std::string cur = normalize_form(current);
    std::vector<std::string> out;
    for (const auto& form : entry->surface_forms)
        if (normalize_form(form) != cur)
            out.push_back(form);
    return out;
}

Lexicon parse_lexicon(std::string_view bytes) {
    json doc = parse_json(bytes, "lexicon");
    if (!doc.is_array())
        throw ParseError("lexicon: expected a JSON array of entries");
    std::vector<LexiconEntry> entries;
    for (const auto& item : doc) {
        LexiconEntry e;
        e.concept_id = require_string(item, "concept_id", "lexicon entry");
        if (!item.contains("surface_forms") || !item["surface_forms"].is_array())
            throw ParseError("lexicon entry " + e.concept_id +
                             ": missing \"surface_forms\" array");
        for (const auto& f : item["surface_forms"]) {
            if (!f.is_string())
                throw ParseError("lexicon entry " + e.concept_id +
                                 ": surface forms must be strings");
            e.surface_forms.push_back(f.get<std::string>());
        }
        e.semantic_type = require_string(item, "semantic_type", "lexicon entry " + e.concept_id);
        double depth = require_number(item, "taxonomy_depth", "lexicon entry " + e.concept_id);
        if (depth < 0.0)
            throw ValidationError("lexicon entry " + e.concept_id +
                                  ": taxonomy_depth must be nonnegative");
        e.taxonomy_depth = static_cast<unsigned>(depth);
        e.type_priority = require_number(item, "type_priority", "lexicon entry " + e.concept_id);
        entries.push_back(std::move(e));
    }
    return Lexicon(std::move(entries));
}

std::vector<ConceptSpan> identify_concepts(const std::vector<Token>& tokens,
                                           const Lexicon& lexicon) {
    std::vector<ConceptSpan> spans;
    const std::size_t n = tokens.size();
    std::size_t i = 0;
    while (i < n) {
        if (tokens[i].norm.empty()) {
            ++i;
            continue;
        }
        const LexiconEntry* best_entry = nullptr;
        double best_sim = 0.0;
        std::size_t best_len = 0;
        const std::size_t max_len = std::min(lexicon.max_form_tokens(), n - i);
        for (std::size_t len = max_len; len >= 1; --len) {
            // Join the normalized tokens of the window; skip punctuation-only ones.
            std::string candidate;
            std::size_t norm_count = 0;
            for (std::size_t j = i; j < i + len; ++j) {
                if (tokens[j].norm.empty())
                    continue;
                if (!candidate.empty())
                    candidate.push_back(' ');
                candidate.append(tokens[j].norm);
                ++norm_count;
            }
            if (norm_count == 0)
                continue;
            for (const auto& form : lexicon.forms_with_token_count(norm_count)) {
                double sim;
                if (form.normalized == candidate) {
                    sim = 1.0;
                } else {
                    // Cheap bound: a length gap already below threshold can't match.
                    const std::size_t la = candidate.size();
                    const std::size_t lb = form.normalized.size();
                    const std::size_t longest = std::max(la, lb);
                    const std::size_t gap = longest - std::min(la, lb);
                    if (longest == 0 ||
                        1.0 - static_cast<double>(gap) / static_cast<double>(longest) <
                            kFuzzyThreshold)
                        continue;
                    sim = edit_similarity(candidate, form.normalized);
                }
                if (sim < kFuzzyThreshold)
                    continue;
                const LexiconEntry& entry = lexicon.entries()[form.entry];
                bool better = false;
                if (!best_entry || len > best_len)
                    better = true;
                else if (len == best_len && sim > best_sim)
                    better = true;
                else if (len == best_len && sim == best_sim &&
                         entry.concept_id < best_entry->concept_id)
                    better = true;
                if (better) {
                    best_entry = &entry;
                    best_sim = sim;
                    best_len = len;
                }
            }
            if (best_entry && best_len >= len)
                break; // longer spans were already tried; nothing shorter can win
        }
        if (best_entry) {
            spans.push_back({best_entry->concept_id, i, i + best_len - 1, best_sim});
            i += best_len;
        } else {
            ++i;
        }
    }
    return spans;
}

std::size_t tokens_covered(const std::vector<ConceptSpan>& spans) {
    std::size_t covered = 0;
    for (const auto& s : spans)
        covered += s.end_token - s.start_token + 1;
    return covered;
}

} // namespace medprompt
