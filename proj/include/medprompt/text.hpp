#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace medprompt {

/// A whitespace-delimited token with its character range in the source text.
struct Token {
    std::string raw;  ///< exact characters as they appear in the text
    std::string norm; ///< lowercased, punctuation stripped; may be empty
    std::size_t begin = 0; ///< byte offset of first character
    std::size_t end = 0;   ///< one past the last character
};

/// A sentence-like segment of text, split on . ! ? ; and newline.
struct Sentence {
    std::string text;          ///< trimmed segment content (no terminator)
    std::size_t begin = 0;     ///< byte offset of first content character
    std::size_t end = 0;       ///< one past last content character
    bool has_terminator = false;
    std::size_t terminator_pos = 0; ///< offset of the terminator, valid if has_terminator
};

/// Lowercase ASCII letters; other bytes unchanged.
std::string to_lower(std::string_view s);

/// Lowercase and strip every non-alphanumeric byte. May return "".
std::string normalize_token(std::string_view raw);

/// Split on whitespace, recording offsets and normalized forms.
std::vector<Token> tokenize(std::string_view text);

/// Split into sentence segments. Empty segments are dropped.
std::vector<Sentence> split_sentences(std::string_view text);

/// Classic dynamic-programming edit distance.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Normalized edit similarity: 1 - distance / max(len). Both empty -> 1.
double edit_similarity(std::string_view a, std::string_view b);

/// Trim ASCII whitespace from both ends.
std::string trim(std::string_view s);

/// FNV-1a 64-bit hash; stable across platforms and runs.
std::uint64_t fnv1a64(std::string_view bytes);

/// Text with a precomputed lowercase copy for repeated case-insensitive scans.
class FoldedText {
  public:
    explicit FoldedText(std::string_view text) : lower_(to_lower(text)) {}

    /// True if `needle` occurs as a case-insensitive substring.
    bool contains(std::string_view needle) const;

    /// Number of non-overlapping case-insensitive occurrences of `needle`.
    std::size_t count(std::string_view needle) const;

    const std::string& lower() const { return lower_; }

  private:
    std::string lower_;
};

} // namespace medprompt
