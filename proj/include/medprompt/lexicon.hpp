#pragma once

#include "medprompt/text.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace medprompt {

/// One concept in the local terminology file: surface forms mapped to a
/// concept id, semantic type, taxonomy depth, and type priority.
struct LexiconEntry {
    std::vector<std::string> surface_forms; // at least one
    std::string concept_id;                 // unique
    std::string semantic_type;
    unsigned taxonomy_depth = 0;
    double type_priority = 0.0; // in [0, 1]
};

/// Immutable lexicon with lookup structures for longest-match scanning.
class Lexicon {
  public:
    explicit Lexicon(std::vector<LexiconEntry> entries);

    const std::vector<LexiconEntry>& entries() const { return entries_; }
    const LexiconEntry* by_concept_id(std::string_view id) const;

    /// Longest surface form measured in tokens.
    std::size_t max_form_tokens() const { return max_form_tokens_; }

    /// (entry index, normalized form) pairs whose form has `token_count` tokens.
    struct FormRef {
        std::size_t entry = 0;
        std::string normalized;
        std::string original;
    };
    const std::vector<FormRef>& forms_with_token_count(std::size_t token_count) const;

    /// Synonym surface forms of a concept other than `current` (normalized compare).
    std::vector<std::string> synonyms_excluding(std::string_view concept_id,
                                                std::string_view current) const;

  private:
    std::vector<LexiconEntry> entries_;
    std::map<std::string, std::size_t, std::less<>> by_id_;
    std::vector<std::vector<FormRef>> forms_by_len_; // index = token count
    std::vector<FormRef> empty_;
    std::size_t max_form_tokens_ = 0;
};

/// Parse a lexicon file: UTF-8 JSON list of entries.
Lexicon parse_lexicon(std::string_view bytes);

/// A matched concept occurrence over a token sequence.
struct ConceptSpan {
    std::string concept_id;
    std::size_t start_token = 0;
    std::size_t end_token = 0;      // inclusive
    double match_confidence = 1.0;  // in [0.8, 1]

    bool operator==(const ConceptSpan&) const = default;
};

/// Greedy longest-match concept identification, left to right over normalized
/// tokens. Exact matches score 1.0; fuzzy matches (normalized edit similarity
/// >= 0.8 against a form with the same token count) score their similarity.
/// At a given position the longest span wins; among equal-length candidates
/// the highest similarity wins, then the lexicographically smallest concept id.
/// Matched spans never overlap.
std::vector<ConceptSpan> identify_concepts(const std::vector<Token>& tokens,
                                           const Lexicon& lexicon);

/// Number of tokens covered by the given spans.
std::size_t tokens_covered(const std::vector<ConceptSpan>& spans);

} // namespace medprompt
