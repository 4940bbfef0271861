#include "ctxgov/admission.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "ctxgov/errors.hpp"
#include "ctxgov/text_util.hpp"

namespace ctxgov {

namespace {

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const auto piece = text::normalize(v.substr(
        start, comma == std::string_view::npos ? v.size() - start : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double d = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("classifier key '" + key + "' needs a number, got '" + value + "'");
  }
}

}  // namespace

ClassifierWeights ClassifierWeights::parse(std::string_view text) {
  ClassifierWeights w;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("classifier line {}: expected key = value", lineno));
    }
    const auto key = text::trim(std::string_view(line).substr(0, eq));
    const auto value = text::trim(std::string_view(line).substr(eq + 1));
    if (key == "marker") w.marker = parse_number(key, value);
    else if (key == "deontic") w.deontic = parse_number(key, value);
    else if (key == "imperative") w.imperative = parse_number(key, value);
    else if (key == "second_person") w.second_person = parse_number(key, value);
    else if (key == "threshold") w.threshold = parse_number(key, value);
    else if (key == "deontic_lexicon") w.deontic_lexicon = split_list(value);
    else if (key == "imperative_verbs") w.imperative_verbs = split_list(value);
    else throw ConfigError(fmt::format("classifier line {}: unknown key '{}'", lineno, key));
  }
  if (w.threshold < 0.0 || w.threshold > 1.0) {
    throw ConfigError("classifier threshold must lie in [0, 1]");
  }
  return w;
}

ClassifierWeights ClassifierWeights::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read classifier table " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string ClassifierWeights::fingerprint() const {
  std::string s = fmt::format("lpc(marker={},deontic={},imperative={},second_person={},threshold={}",
                              marker, deontic, imperative, second_person, threshold);
  s += ",lexicon=";
  for (std::size_t i = 0; i < deontic_lexicon.size(); ++i) {
    if (i) s += '|';
    s += deontic_lexicon[i];
  }
  s += ",verbs=" + std::to_string(imperative_verbs.size()) + ")";
  return s;
}

double score_directive_likelihood(const Segment& s, const ClassifierWeights& w) {
  if (text::has_marker(s.text)) return std::clamp(w.marker, 0.0, 1.0);
  const auto norm = text::normalize(s.text);
  if (norm.empty()) return 0.0;

  double score = 0.0;
  for (const auto& term : w.deontic_lexicon) {
    if (text::contains_term(norm, term)) score += w.deontic;
  }
  for (const auto& sentence : text::split_sentences(norm)) {
    const auto first = text::first_words(text::strip_leading_tags(sentence), 1);
    const bool imperative =
        std::find(w.imperative_verbs.begin(), w.imperative_verbs.end(), first) !=
        w.imperative_verbs.end();
    if (imperative) {
      score += w.imperative;
      break;
    }
  }
  if (text::contains_term(norm, "you") || text::contains_term(norm, "your")) {
    score += w.second_person;
  }
  return std::clamp(score, 0.0, 1.0);
}

AdmissionResult admit_control(const RawHistory& h, RoutingMode mode,
                              const ClassifierWeights& weights) {
  AdmissionResult r;
  r.mode = mode;
  r.query = h.final_query;
  for (const auto& s : h.segments) {
    Route route = Route::data;
    if (mode == RoutingMode::oracle) {
      const bool policy = s.has_label(kPolicyLabel);
      if (!policy && !s.has_label(kDataLabel)) {
        throw ConfigError("oracle routing: segment '" + s.id + "' has no POLICY/DATA label");
      }
      route = policy ? Route::policy : Route::data;
    } else if (score_directive_likelihood(s, weights) >= weights.threshold) {
      route = Route::policy;
    }
    r.per_segment_route[s.id] = route;
    (route == Route::policy ? r.control : r.data).push_back(s);
  }
  return r;
}

}  // namespace ctxgov
