#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace statuterank::tokenize {

/// Ordered tokens; each non-empty, whitespace-free and case-folded.
using TokenSequence = std::vector<std::string>;

enum class Scheme {
    /// Split on Unicode whitespace/punctuation, case-fold, and emit character
    /// bigrams for Han/Hiragana/Katakana runs.
    UnicodeBasic,
    /// Text was already segmented by an external analyzer; split on whitespace only.
    Pretokenized,
};

Scheme parse_scheme(std::string_view name);
std::string_view scheme_name(Scheme scheme);

TokenSequence tokenize(std::string_view text, Scheme scheme);

} // namespace statuterank::tokenize
