#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ctxgov::text {

std::string to_lower(std::string_view s);

// Lower-cased, whitespace-collapsed, trimmed.
std::string normalize(std::string_view s);

std::string trim(std::string_view s);

// Word-bounded search in already-normalized text. A trailing '*' on `term`
// turns it into a prefix match ("require*" hits "requires").
bool contains_term(std::string_view haystack, std::string_view term);

// Sentences end at '.', '!' or '?' followed by whitespace or end of text.
std::vector<std::string> split_sentences(std::string_view s);
std::string first_sentence(std::string_view s);

// Removes leading bracketed tags such as "[c1]" or "[tool_output]".
std::string strip_leading_tags(std::string_view s);

// First `n` whitespace-delimited words of `s`, rejoined with single spaces.
std::string first_words(std::string_view s, std::size_t n);

// Text up to (not including) the first ',' ';' or ':'.
std::string first_clause(std::string_view s);

struct MarkerOccurrence {
  std::string marker;  // "c1"
  std::string text;    // text following the marker up to the next tag or line end
};

// Every "[cK]" occurrence in `s`, in order.
std::vector<MarkerOccurrence> find_markers(std::string_view s);

bool has_marker(std::string_view s);

}  // namespace ctxgov::text
