#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unorm2.h>
#include <unicode/ustring.h>

#include "lingdiv/common.hpp"

namespace lingdiv::text {

// --- UTF-8 codec (invalid sequences decode to U+FFFD, never throw) ---

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp <= 0x7F) {
        out.push_back(static_cast<char>(cp));
    } else if (cp <= 0x7FF) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp <= 0xFFFF) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::vector<char32_t> decode_utf8(std::string_view s) {
    std::vector<char32_t> cps;
    cps.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char b = static_cast<unsigned char>(s[i]);
        char32_t cp = 0xFFFD;
        std::size_t len = 1;
        if (b < 0x80) {
            cp = b;
        } else if ((b >> 5) == 0x6 && i + 1 < s.size()) {
            cp = (b & 0x1F) << 6 | (s[i + 1] & 0x3F);
            len = 2;
            if (cp < 0x80) cp = 0xFFFD;
        } else if ((b >> 4) == 0xE && i + 2 < s.size()) {
            cp = (b & 0x0F) << 12 | (s[i + 1] & 0x3F) << 6 | (s[i + 2] & 0x3F);
            len = 3;
            if (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
        } else if ((b >> 3) == 0x1E && i + 3 < s.size()) {
            cp = (b & 0x07) << 18 | (s[i + 1] & 0x3F) << 12 | (s[i + 2] & 0x3F) << 6 |
                 (s[i + 3] & 0x3F);
            len = 4;
            if (cp < 0x10000 || cp > 0x10FFFF) cp = 0xFFFD;
        }
        // continuation bytes must actually be continuations
        for (std::size_t k = 1; k < len; ++k) {
            if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) {
                cp = 0xFFFD;
                len = 1;
                break;
            }
        }
        cps.push_back(cp);
        i += len;
    }
    return cps;
}

inline std::string encode_utf8(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) append_utf8(out, cp);
    return out;
}

inline std::size_t cp_count(std::string_view s) {
    std::size_t n = 0, i = 0;
    while (i < s.size()) {
        unsigned char b = static_cast<unsigned char>(s[i]);
        if (b < 0x80) i += 1;
        else if ((b >> 5) == 0x6) i += 2;
        else if ((b >> 4) == 0xE) i += 3;
        else if ((b >> 3) == 0x1E) i += 4;
        else i += 1;
        ++n;
    }
    return n;
}

inline bool is_space_cp(char32_t cp) {
    return u_isUWhiteSpace(static_cast<UChar32>(cp));
}

inline bool is_word_cp(char32_t cp) {
    return u_isalnum(static_cast<UChar32>(cp));
}

namespace detail {

inline std::u16string to_utf16(std::string_view s) {
    std::u16string out;
    out.resize(s.size() + 1);
    int32_t len = 0;
    UErrorCode err = U_ZERO_ERROR;
    u_strFromUTF8WithSub(out.data(), static_cast<int32_t>(out.size()), &len, s.data(),
                         static_cast<int32_t>(s.size()), 0xFFFD, nullptr, &err);
    if (U_FAILURE(err)) throw std::logic_error("icu: utf8->utf16 conversion failed");
    out.resize(static_cast<std::size_t>(len));
    return out;
}

inline std::string to_utf8(const std::u16string& s) {
    std::string out;
    out.resize(s.size() * 4 + 1);
    int32_t len = 0;
    UErrorCode err = U_ZERO_ERROR;
    u_strToUTF8WithSub(out.data(), static_cast<int32_t>(out.size()), &len, s.data(),
                       static_cast<int32_t>(s.size()), 0xFFFD, nullptr, &err);
    if (U_FAILURE(err)) throw std::logic_error("icu: utf16->utf8 conversion failed");
    out.resize(static_cast<std::size_t>(len));
    return out;
}

inline std::u16string nfc(const std::u16string& s) {
    UErrorCode err = U_ZERO_ERROR;
    const UNormalizer2* norm = unorm2_getNFCInstance(&err);
    if (U_FAILURE(err)) throw std::logic_error("icu: NFC instance unavailable");
    std::u16string out;
    out.resize(s.size() + 16);
    int32_t len = unorm2_normalize(norm, s.data(), static_cast<int32_t>(s.size()), out.data(),
                                   static_cast<int32_t>(out.size()), &err);
    if (err == U_BUFFER_OVERFLOW_ERROR) {
        err = U_ZERO_ERROR;
        out.resize(static_cast<std::size_t>(len));
        len = unorm2_normalize(norm, s.data(), static_cast<int32_t>(s.size()), out.data(),
                               static_cast<int32_t>(out.size()), &err);
    }
    if (U_FAILURE(err)) throw std::logic_error("icu: NFC normalization failed");
    out.resize(static_cast<std::size_t>(len));
    return out;
}

// Simple (1:1) lowercase mapping per code point; full case mapping can
// expand and would break the deletion-only length guarantee.
inline std::u16string lower_simple(const std::u16string& s) {
    std::u16string out;
    out.reserve(s.size());
    int32_t i = 0;
    const int32_t n = static_cast<int32_t>(s.size());
    while (i < n) {
        UChar32 c;
        U16_NEXT(s.data(), i, n, c);
        UChar32 lc = u_tolower(c);
        char16_t buf[2];
        int32_t bi = 0;
        UBool iserr = false;
        U16_APPEND(buf, bi, 2, lc, iserr);
        if (!iserr) out.append(buf, static_cast<std::size_t>(bi));
    }
    return out;
}

inline bool cps_start_with(const std::vector<char32_t>& cps, std::size_t at, std::size_t end,
                           std::string_view ascii) {
    if (end - at < ascii.size()) return false;
    for (std::size_t k = 0; k < ascii.size(); ++k)
        if (cps[at + k] != static_cast<char32_t>(ascii[k])) return false;
    return true;
}

} // namespace detail

// Canonical composition, simple lowercase, URL and @-mention removal,
// leading '#' stripped from hashtags, whitespace collapsed, trimmed.
// Idempotent; never adds code points.
inline std::string normalize_text(std::string_view input) {
    if (input.empty()) return {};
    std::u16string u = detail::to_utf16(input);
    u = detail::nfc(u);
    u = detail::lower_simple(u);
    u = detail::nfc(u);
    std::vector<char32_t> cps = decode_utf8(detail::to_utf8(u));

    std::string out;
    out.reserve(input.size());
    std::size_t i = 0;
    const std::size_t n = cps.size();
    bool first = true;
    while (i < n) {
        while (i < n && is_space_cp(cps[i])) ++i;
        if (i >= n) break;
        std::size_t end = i;
        while (end < n && !is_space_cp(cps[end])) ++end;
        std::size_t start = i;
        while (start < end && cps[start] == U'#') ++start;  // hashtag marks
        bool drop = start == end || cps[start] == U'@' ||
                    detail::cps_start_with(cps, start, end, "http://") ||
                    detail::cps_start_with(cps, start, end, "https://") ||
                    detail::cps_start_with(cps, start, end, "www.");
        if (!drop) {
            if (!first) out.push_back(' ');
            for (std::size_t k = start; k < end; ++k) append_utf8(out, cps[k]);
            first = false;
        }
        i = end;
    }
    return out;
}

} // namespace lingdiv::text
