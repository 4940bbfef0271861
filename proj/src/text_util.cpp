#include "ctxgov/text_util.hpp"

#include <cctype>

namespace ctxgov::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

// Length of a "[c<digits>]" marker starting at pos, or 0.
std::size_t marker_length(std::string_view s, std::size_t pos) {
  if (pos + 4 > s.size()) return 0;
  if (s[pos] != '[' || pos + 1 >= s.size() || s[pos + 1] != 'c') return 0;
  std::size_t i = pos + 2;
  const std::size_t digits_begin = i;
  while (i < s.size() && is_digit(s[i])) ++i;
  if (i == digits_begin || i >= s.size() || s[i] != ']') return 0;
  return i + 1 - pos;
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool contains_term(std::string_view haystack, std::string_view term) {
  bool prefix = false;
  if (!term.empty() && term.back() == '*') {
    prefix = true;
    term.remove_suffix(1);
  }
  if (term.empty()) return false;
  std::size_t pos = haystack.find(term);
  while (pos != std::string_view::npos) {
    const bool left_ok = pos == 0 || !is_word(haystack[pos - 1]);
    const std::size_t end = pos + term.size();
    const bool right_ok = prefix || end >= haystack.size() || !is_word(haystack[end]);
    if (left_ok && right_ok) return true;
    pos = haystack.find(term, pos + 1);
  }
  return false;
}

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == s.size() || is_space(s[i + 1]))) {
      auto sentence = trim(s.substr(start, i + 1 - start));
      if (!sentence.empty()) out.push_back(std::move(sentence));
      start = i + 1;
    }
  }
  auto rest = trim(s.substr(start));
  if (!rest.empty()) out.push_back(std::move(rest));
  return out;
}

std::string first_sentence(std::string_view s) {
  auto sentences = split_sentences(s);
  return sentences.empty() ? std::string() : sentences.front();
}

std::string strip_leading_tags(std::string_view s) {
  std::string cur = trim(s);
  while (!cur.empty() && cur.front() == '[') {
    const auto close = cur.find(']');
    if (close == std::string::npos) break;
    cur = trim(std::string_view(cur).substr(close + 1));
  }
  return cur;
}

std::string first_words(std::string_view s, std::size_t n) {
  std::string out;
  std::size_t words = 0;
  std::size_t i = 0;
  while (i < s.size() && words < n) {
    while (i < s.size() && is_space(s[i])) ++i;
    if (i >= s.size()) break;
    const std::size_t b = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (!out.empty()) out += ' ';
    out.append(s.substr(b, i - b));
    ++words;
  }
  return out;
}

std::string first_clause(std::string_view s) {
  const auto cut = s.find_first_of(",;:");
  return trim(cut == std::string_view::npos ? s : s.substr(0, cut));
}

std::vector<MarkerOccurrence> find_markers(std::string_view s) {
  std::vector<MarkerOccurrence> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t len = s[i] == '[' ? marker_length(s, i) : 0;
    if (len == 0) {
      ++i;
      continue;
    }
    MarkerOccurrence occ;
    occ.marker = std::string(s.substr(i + 1, len - 2));
    std::size_t j = i + len;
    while (j < s.size() && s[j] != '[' && s[j] != '\n') ++j;
    occ.text = trim(s.substr(i + len, j - (i + len)));
    out.push_back(std::move(occ));
    i = j;
  }
  return out;
}

bool has_marker(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '[' && marker_length(s, i) > 0) return true;
  }
  return false;
}

}  // namespace ctxgov::text
