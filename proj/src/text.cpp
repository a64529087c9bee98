#include "mqag/text.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <unordered_set>

namespace mqag::text {

namespace {

// Function words only: verbs and nouns stay content-bearing.
const std::unordered_set<std::string_view>& stopwords() {
    static const std::unordered_set<std::string_view> words = {
        "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any",
        "are", "as", "at", "be", "because", "been", "before", "being", "below", "between",
        "both", "but", "by", "can", "could", "did", "do", "does", "doing", "down", "during",
        "each", "else", "ever", "every", "few", "for",
        "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers",
        "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its",
        "itself", "just", "may", "me", "might", "more", "most", "must", "my", "myself", "no",
        "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours",
        "ourselves", "out", "over", "own", "same", "shall", "she", "should", "so", "some",
        "such", "than", "that", "the", "their", "theirs",
        "them", "themselves", "then", "there", "these", "they", "this", "those", "through",
        "to", "too", "under", "until", "up", "upon", "very", "was", "we", "were", "what",
        "when", "where", "which", "while", "who", "whom", "whose", "why", "will", "with",
        "would", "you", "your", "yours", "yourself", "yourselves", "also", "very", "s", "t",
        "'s", "yes", "yet", "onto", "toward", "towards", "within", "without"};
    return words;
}

bool is_token_char(unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '\'' || c >= 0x80;
}

}  // namespace

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string collapse_spaces(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = !out.empty();
            continue;
        }
        if (space) out.push_back(' ');
        space = false;
        out.push_back(c);
    }
    return out;
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        std::string_view piece = s.substr(i, j - i);
        std::size_t b = 0, e = piece.size();
        while (b < e && !is_token_char(static_cast<unsigned char>(piece[b]))) ++b;
        while (e > b && !is_token_char(static_cast<unsigned char>(piece[e - 1]))) --e;
        // trailing/leading apostrophes are quote marks, not part of the word
        while (b < e && piece[b] == '\'') ++b;
        while (e > b && piece[e - 1] == '\'') --e;
        if (e > b) out.emplace_back(piece.substr(b, e - b));
        i = j;
    }
    return out;
}

std::vector<std::string> tokens(std::string_view s) {
    auto out = words(s);
    for (auto& w : out) w = lower(w);
    return out;
}

std::vector<std::string> content_tokens(std::string_view s) {
    auto out = tokens(s);
    std::erase_if(out, [](const std::string& t) { return is_stopword(t); });
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

bool is_stopword(std::string_view lower_token) {
    return stopwords().contains(lower_token);
}

bool is_person_tag(std::string_view t) {
    static const std::regex re("person[0-9]+");
    return std::regex_match(t.begin(), t.end(), re);
}

bool is_person_like(std::string_view t) {
    static const std::unordered_set<std::string_view> pronouns = {
        "he", "she", "they", "him", "her", "them", "i", "we", "you"};
    return is_person_tag(t) || pronouns.contains(t);
}

bool is_terminal_punct(char c) { return c == '.' || c == '!' || c == '?'; }

std::string sentence_case(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            break;
        }
    }
    return out;
}

std::string normalize_sentence(std::string_view s) {
    std::string body = collapse_spaces(trim(s));
    char terminal = '.';
    bool found = false;
    while (!body.empty() && (is_terminal_punct(body.back()) || body.back() == ' ' ||
                             body.back() == ',' || body.back() == ';' || body.back() == ':')) {
        if (!found && is_terminal_punct(body.back())) {
            terminal = body.back();
            found = true;
        }
        body.pop_back();
    }
    if (body.empty()) return {};
    return sentence_case(body) + terminal;
}

std::string comparison_key(std::string_view s) {
    auto toks = tokens(s);
    std::erase_if(toks, [](const std::string& t) { return t == "a" || t == "an" || t == "the"; });
    return join(toks);
}

std::string kb_concept(std::string_view s) {
    std::string out = lower(collapse_spaces(trim(s)));
    std::replace(out.begin(), out.end(), ' ', '_');
    return out;
}

std::string display_concept(std::string_view s) {
    std::string out(s);
    std::replace(out.begin(), out.end(), '_', ' ');
    return out;
}

std::uint32_t fnv1a32(std::string_view bytes) {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace mqag::text
