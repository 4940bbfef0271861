#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace ctxgov {

// Token unit every budget in the library is expressed in. Implementations
// must be deterministic and stateless.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::size_t count(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

// Whitespace-delimited words; punctuation stays attached to its word and
// runs of whitespace collapse.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::size_t count(std::string_view text) const override;
  std::string name() const override { return "whitespace-v1"; }
};

const Tokenizer& default_tokenizer();

inline std::size_t count_tokens(std::string_view text,
                                const Tokenizer& tok = default_tokenizer()) {
  return tok.count(text);
}

}  // namespace ctxgov
