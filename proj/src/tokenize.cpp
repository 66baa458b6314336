#include "statuterank/tokenize.hpp"

#include <stdexcept>

#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/utf8.h>

namespace statuterank::tokenize {

namespace {

enum class CharClass { Separator, Cjk, Other };

constexpr UChar32 kProlongedSoundMark = 0x30FC;

CharClass classify(UChar32 c, bool split_punctuation) {
    if (c < 0 || u_isUWhiteSpace(c)) return CharClass::Separator;
    if (split_punctuation && u_ispunct(c)) return CharClass::Separator;
    if (c == kProlongedSoundMark) return CharClass::Cjk;
    UErrorCode status = U_ZERO_ERROR;
    UScriptCode script = uscript_getScript(c, &status);
    if (U_SUCCESS(status) &&
        (script == USCRIPT_HAN || script == USCRIPT_HIRAGANA || script == USCRIPT_KATAKANA))
        return CharClass::Cjk;
    return CharClass::Other;
}

void append_utf8(std::string& out, UChar32 c) {
    char buf[U8_MAX_LENGTH];
    int32_t len = 0;
    U8_APPEND_UNSAFE(buf, len, c);
    out.append(buf, static_cast<std::size_t>(len));
}

// Splits `text` into maximal runs of one character class. Malformed UTF-8
// sequences act as separators.
template <class Fn>
void for_each_run(std::string_view text, bool split_punctuation, Fn&& fn) {
    const auto* s = reinterpret_cast<const uint8_t*>(text.data());
    const auto length = static_cast<int32_t>(text.size());
    std::vector<UChar32> run;
    CharClass run_class = CharClass::Separator;

    auto flush = [&] {
        if (!run.empty()) fn(run_class, run);
        run.clear();
    };

    int32_t i = 0;
    while (i < length) {
        UChar32 c;
        U8_NEXT(s, i, length, c);
        CharClass cls = classify(c, split_punctuation);
        if (cls != run_class) {
            flush();
            run_class = cls;
        }
        if (cls != CharClass::Separator) run.push_back(c);
    }
    flush();
}

std::string folded(const std::vector<UChar32>& chars, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) append_utf8(out, u_foldCase(chars[i], U_FOLD_CASE_DEFAULT));
    return out;
}

} // namespace

Scheme parse_scheme(std::string_view name) {
    if (name == "unicode-basic") return Scheme::UnicodeBasic;
    if (name == "pretokenized") return Scheme::Pretokenized;
    throw std::invalid_argument("unknown tokenizer scheme \"" + std::string(name) + "\"");
}

std::string_view scheme_name(Scheme scheme) {
    switch (scheme) {
    case Scheme::UnicodeBasic: return "unicode-basic";
    case Scheme::Pretokenized: return "pretokenized";
    }
    return "unknown";
}

TokenSequence tokenize(std::string_view text, Scheme scheme) {
    TokenSequence tokens;
    if (scheme == Scheme::Pretokenized) {
        // The external analyzer already decided the boundaries; only whitespace splits.
        const auto* s = reinterpret_cast<const uint8_t*>(text.data());
        const auto length = static_cast<int32_t>(text.size());
        std::string current;
        int32_t i = 0;
        while (i < length) {
            UChar32 c;
            U8_NEXT(s, i, length, c);
            if (c < 0 || u_isUWhiteSpace(c)) {
                if (!current.empty()) tokens.push_back(std::move(current));
                current.clear();
            } else {
                append_utf8(current, u_foldCase(c, U_FOLD_CASE_DEFAULT));
            }
        }
        if (!current.empty()) tokens.push_back(std::move(current));
        return tokens;
    }

    for_each_run(text, true, [&](CharClass cls, const std::vector<UChar32>& run) {
        if (cls == CharClass::Cjk && run.size() > 1) {
            for (std::size_t i = 0; i + 1 < run.size(); ++i) tokens.push_back(folded(run, i, i + 2));
        } else {
            tokens.push_back(folded(run, 0, run.size()));
        }
    });
    return tokens;
}

} // namespace statuterank::tokenize
