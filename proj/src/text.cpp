#include "medprompt/text.hpp"

#include <algorithm>
#include <cctype>

namespace medprompt {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_sentence_end(char c) {
    return c == '.' || c == '!' || c == '?' || c == ';' || c == '\n';
}

} // namespace

std::string to_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s)
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

std::string normalize_token(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc))
            out.push_back(static_cast<char>(std::tolower(uc)));
    }
    return out;
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && is_space(text[i]))
            ++i;
        if (i >= n)
            break;
        std::size_t begin = i;
        while (i < n && !is_space(text[i]))
            ++i;
        Token t;
        t.raw = std::string(text.substr(begin, i - begin));
        t.norm = normalize_token(t.raw);
        t.begin = begin;
        t.end = i;
        tokens.push_back(std::move(t));
    }
    return tokens;
}

std::vector<Sentence> split_sentences(std::string_view text) {
    std::vector<Sentence> out;
    std::size_t start = 0;
    const std::size_t n = text.size();
    for (std::size_t i = 0; i <= n; ++i) {
        bool terminal = i == n || is_sentence_end(text[i]);
        if (!terminal)
            continue;
        std::size_t b = start;
        std::size_t e = i;
        while (b < e && is_space(text[b]))
            ++b;
        while (e > b && is_space(text[e - 1]))
            --e;
        if (e > b) {
            Sentence s;
            s.text = std::string(text.substr(b, e - b));
            s.begin = b;
            s.end = e;
            s.has_terminator = i < n;
            s.terminator_pos = i;
            out.push_back(std::move(s));
        }
        start = i + 1;
    }
    return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
    if (a.size() > b.size())
        std::swap(a, b);
    const std::size_t m = a.size();
    const std::size_t n = b.size();
    std::vector<std::size_t> row(m + 1);
    for (std::size_t i = 0; i <= m; ++i)
        row[i] = i;
    for (std::size_t j = 1; j <= n; ++j) {
        std::size_t diag = row[0];
        row[0] = j;
        for (std::size_t i = 1; i <= m; ++i) {
            std::size_t saved = row[i];
            if (a[i - 1] == b[j - 1])
                row[i] = diag;
            else
                row[i] = 1 + std::min({row[i - 1], row[i], diag});
            diag = saved;
        }
    }
    return row[m];
}

double edit_similarity(std::string_view a, std::string_view b) {
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0)
        return 1.0;
    return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b]))
        ++b;
    while (e > b && is_space(s[e - 1]))
        --e;
    return std::string(s.substr(b, e - b));
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

bool FoldedText::contains(std::string_view needle) const {
    if (needle.empty())
        return false;
    return lower_.find(to_lower(needle)) != std::string::npos;
}

std::size_t FoldedText::count(std::string_view needle) const {
    if (needle.empty())
        return 0;
    const std::string n = to_lower(needle);
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = lower_.find(n, pos)) != std::string::npos) {
        ++count;
        pos += n.size();
    }
    return count;
}

} // namespace medprompt
