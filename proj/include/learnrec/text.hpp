#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace learnrec::text {

/// Lowercases a UTF-8 string. Covers ASCII, Latin-1, Latin Extended-A,
/// Greek and Cyrillic; other codepoints pass through unchanged.
std::string to_lower(std::string_view utf8);

/// Strips ASCII whitespace from both ends.
std::string_view trim(std::string_view s);

/// Lowercase, split on every non-alphanumeric codepoint, drop tokens shorter
/// than two codepoints. No stemming, no stopwords.
std::vector<std::string> tokenize(std::string_view utf8);

/// Shape statistics used by the readability-style complexity score.
struct TextShape {
  std::size_t sentences = 0;
  std::size_t words = 0;
  std::size_t word_chars = 0;
};

/// Words are maximal alphanumeric runs (any length); sentences are
/// word-bearing segments separated by '.', '!', '?' or '…'.
TextShape measure(std::string_view utf8);

/// mean words per sentence + mean characters per word; 0 when there are no words.
double raw_complexity(std::string_view utf8);

}  // namespace learnrec::text
