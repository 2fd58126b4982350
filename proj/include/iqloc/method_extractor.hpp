#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace iqloc {

struct MethodSpan {
    std::string name;
    std::string signature;
    std::size_t start_line = 0;  // 1-based, inclusive
    std::size_t end_line = 0;    // 1-based, inclusive
    std::string body;

    friend bool operator==(const MethodSpan&, const MethodSpan&) = default;
};

struct ExtractionResult {
    std::vector<MethodSpan> methods;
    bool parse_failed = false;
};

namespace detail {

/// Copy of `src` with comments and string/char literal contents blanked to
/// spaces. Newlines are preserved so offsets and line numbers stay valid.
/// Returns false on an unterminated block comment or text block.
inline bool blank_comments_and_literals(std::string_view src, std::string& out)
{
    out.assign(src.begin(), src.end());
    std::size_t i = 0;
    const std::size_t n = src.size();
    auto blank = [&](std::size_t from, std::size_t to) {
        for (std::size_t k = from; k < to && k < n; ++k) {
            if (out[k] != '\n') {
                out[k] = ' ';
            }
        }
    };
    while (i < n) {
        const char c = src[i];
        if (c == '/' && i + 1 < n && src[i + 1] == '/') {
            const auto end = src.find('\n', i);
            const auto stop = end == std::string_view::npos ? n : end;
            blank(i, stop);
            i = stop;
        } else if (c == '/' && i + 1 < n && src[i + 1] == '*') {
            const auto end = src.find("*/", i + 2);
            if (end == std::string_view::npos) {
                return false;
            }
            blank(i, end + 2);
            i = end + 2;
        } else if (c == '"' && src.substr(i, 3) == "\"\"\"") {
            const auto end = src.find("\"\"\"", i + 3);
            if (end == std::string_view::npos) {
                return false;
            }
            blank(i + 3, end);
            i = end + 3;
        } else if (c == '"' || c == '\'') {
            std::size_t k = i + 1;
            while (k < n && src[k] != c && src[k] != '\n') {
                k += src[k] == '\\' ? 2 : 1;
            }
            blank(i + 1, std::min(k, n));
            i = k < n && src[k] == c ? k + 1 : k;
        } else {
            ++i;
        }
    }
    return true;
}

inline bool is_ident_char(char c) noexcept
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '$'
           || static_cast<unsigned char>(c) >= 0x80;
}

inline bool is_space(char c) noexcept { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

inline std::string_view trim(std::string_view s) noexcept
{
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::string collapse_whitespace(std::string_view s)
{
    std::string out;
    bool pending = false;
    for (char c : trim(s)) {
        if (is_space(c)) {
            pending = true;
            continue;
        }
        if (pending) {
            out.push_back(' ');
            pending = false;
        }
        out.push_back(c);
    }
    return out;
}

/// Whole-word search for `word` in `text`.
inline bool contains_word(std::string_view text, std::string_view word) noexcept
{
    for (auto pos = text.find(word); pos != std::string_view::npos; pos = text.find(word, pos + 1)) {
        const bool left = pos == 0 || !is_ident_char(text[pos - 1]);
        const bool right = pos + word.size() >= text.size() || !is_ident_char(text[pos + word.size()]);
        if (left && right) {
            return true;
        }
    }
    return false;
}

/// Removes leading annotations (`@Foo`, `@a.b.Foo(...)`) from a header.
inline std::string_view strip_annotations(std::string_view h)
{
    h = trim(h);
    while (h.size() > 1 && h.front() == '@' && !h.starts_with("@interface")) {
        std::size_t k = 1;
        while (k < h.size() && (is_ident_char(h[k]) || h[k] == '.')) {
            ++k;
        }
        std::size_t after = k;
        while (after < h.size() && is_space(h[after])) {
            ++after;
        }
        if (after < h.size() && h[after] == '(') {
            int depth = 0;
            for (; after < h.size(); ++after) {
                if (h[after] == '(') {
                    ++depth;
                } else if (h[after] == ')' && --depth == 0) {
                    ++after;
                    break;
                }
            }
            k = after;
        }
        h = trim(h.substr(k));
    }
    return h;
}

inline constexpr std::array<std::string_view, 15> non_method_names = {
    "if", "for", "while", "switch", "catch", "synchronized", "return", "new", "else",
    "try", "do", "super", "this", "assert", "throw",
};

struct MethodHeader {
    std::string name;
    std::string signature;
};

/// Recognizes a method or constructor declaration header (the text between
/// the previous member boundary and an opening brace). `enclosing` is the
/// name of the enclosing type, empty at file scope.
inline bool parse_method_header(std::string_view header, std::string_view enclosing, bool file_scope,
                                MethodHeader& out)
{
    std::string_view h = strip_annotations(header);
    if (h.empty() || h.find('=') != std::string_view::npos || h.find("->") != std::string_view::npos) {
        return false;
    }
    const auto close = h.rfind(')');
    if (close == std::string_view::npos) {
        return false;
    }
    // Anything after the parameter list must be a throws clause.
    const auto tail = trim(h.substr(close + 1));
    if (!tail.empty()) {
        if (!tail.starts_with("throws") || (tail.size() > 6 && is_ident_char(tail[6]))) {
            return false;
        }
        for (char c : tail.substr(6)) {
            if (!(is_ident_char(c) || is_space(c) || c == '.' || c == ',' || c == '<' || c == '>' || c == '?')) {
                return false;
            }
        }
    }
    int depth = 0;
    std::size_t open = std::string_view::npos;
    for (std::size_t k = close + 1; k-- > 0;) {
        if (h[k] == ')') {
            ++depth;
        } else if (h[k] == '(' && --depth == 0) {
            open = k;
            break;
        }
    }
    if (open == std::string_view::npos) {
        return false;
    }
    auto before = trim(h.substr(0, open));
    std::size_t name_start = before.size();
    while (name_start > 0 && is_ident_char(before[name_start - 1])) {
        --name_start;
    }
    const auto name = before.substr(name_start);
    if (name.empty() || (name.front() >= '0' && name.front() <= '9')) {
        return false;
    }
    if (std::find(non_method_names.begin(), non_method_names.end(), name) != non_method_names.end()) {
        return false;
    }
    const auto prefix = trim(before.substr(0, name_start));
    if (prefix.find_first_of("()") != std::string_view::npos || contains_word(prefix, "new")
        || contains_word(prefix, "return")) {
        return false;
    }
    if (prefix.empty()) {
        if (!file_scope && name != enclosing) {
            return false;
        }
    } else {
        const char last = prefix.back();
        if (!(is_ident_char(last) || last == '>' || last == ']')) {
            return false;
        }
    }
    out.name = std::string(name);
    out.signature = collapse_whitespace(h);
    return true;
}

/// A record's compact canonical constructor: optional modifiers followed by
/// the record name, with no parameter list.
inline bool is_compact_constructor(std::string_view header, std::string_view record_name)
{
    auto h = trim(strip_annotations(header));
    if (!h.ends_with(record_name)) {
        return false;
    }
    h.remove_suffix(record_name.size());
    if (!h.empty() && is_ident_char(h.back())) {
        return false;
    }
    for (char c : h) {
        if (!(is_ident_char(c) || is_space(c))) {
            return false;
        }
    }
    return true;
}

/// Type declaration keyword and name, if `header` declares a class-like type.
inline bool parse_type_header(std::string_view header, std::string& name, bool& is_enum, bool* is_record = nullptr)
{
    const std::string_view h = strip_annotations(header);
    if (h.find('=') != std::string_view::npos) {
        return false;
    }
    for (std::string_view kw : {"class", "interface", "enum", "record", "@interface"}) {
        auto pos = h.find(kw);
        while (pos != std::string_view::npos) {
            const bool left = pos == 0 || !is_ident_char(h[pos - 1]);
            const bool right = pos + kw.size() < h.size() && is_space(h[pos + kw.size()]);
            if (left && right) {
                auto rest = trim(h.substr(pos + kw.size()));
                std::size_t k = 0;
                while (k < rest.size() && is_ident_char(rest[k])) {
                    ++k;
                }
                name = std::string(rest.substr(0, k));
                is_enum = kw == "enum";
                if (is_record) {
                    *is_record = kw == "record";
                }
                return !name.empty();
            }
            pos = h.find(kw, pos + 1);
        }
    }
    return false;
}

/// Strips everything up to the last comma at nesting depth zero; used for
/// enum constant lists (`A, B(1) {`).
inline std::string_view last_enum_constant(std::string_view header)
{
    int depth = 0;
    std::size_t cut = 0;
    for (std::size_t k = 0; k < header.size(); ++k) {
        const char c = header[k];
        if (c == '(' || c == '<') {
            ++depth;
        } else if (c == ')' || c == '>') {
            --depth;
        } else if (c == ',' && depth == 0) {
            cut = k + 1;
        }
    }
    return strip_annotations(header.substr(cut));
}

inline bool is_enum_constant(std::string_view h)
{
    std::size_t k = 0;
    while (k < h.size() && is_ident_char(h[k])) {
        ++k;
    }
    if (k == 0) {
        return false;
    }
    const auto rest = trim(h.substr(k));
    return rest.empty() || (rest.front() == '(' && rest.back() == ')');
}

}  // namespace detail

/// Text of lines [start_line, end_line] (1-based, inclusive) of `content`,
/// without the final line terminator.
inline std::string line_range(std::string_view content, std::size_t start_line, std::size_t end_line)
{
    std::size_t begin = 0;
    for (std::size_t line = 1; line < start_line && begin != std::string_view::npos; ++line) {
        begin = content.find('\n', begin);
        begin = begin == std::string_view::npos ? begin : begin + 1;
    }
    if (begin == std::string_view::npos) {
        return {};
    }
    std::size_t end = begin;
    for (std::size_t line = start_line; line <= end_line; ++line) {
        end = content.find('\n', end);
        if (end == std::string_view::npos) {
            end = content.size();
            break;
        }
        if (line != end_line) {
            ++end;
        }
    }
    std::string body(content.substr(begin, end - begin));
    if (!body.empty() && body.back() == '\r') {
        body.pop_back();
    }
    return body;
}

/// Extracts method and constructor bodies from Java-family source.
///
/// Declarations are recognized by signature shape at type (or file) scope and
/// their bodies by balanced-brace tracking over comment- and literal-blanked
/// text. Bodies of nested and anonymous classes are folded into the
/// enclosing method; static and instance initializers are not methods.
/// Unbalanced input yields no methods and `parse_failed`.
inline ExtractionResult extract_methods(std::string_view content)
{
    ExtractionResult result;
    std::string clean;
    if (!detail::blank_comments_and_literals(content, clean)) {
        result.parse_failed = true;
        return result;
    }

    std::vector<std::size_t> line_starts{0};
    for (std::size_t k = 0; k < content.size(); ++k) {
        if (content[k] == '\n') {
            line_starts.push_back(k + 1);
        }
    }
    auto line_of = [&](std::size_t offset) {
        return static_cast<std::size_t>(std::upper_bound(line_starts.begin(), line_starts.end(), offset)
                                        - line_starts.begin());
    };

    enum class Kind { file, type, method, block };
    struct Scope {
        Kind kind;
        std::string name;
        bool is_enum = false;
        bool is_record = false;
        std::size_t header_start = 0;  // for methods: first header offset
        detail::MethodHeader header;
        std::size_t members_seen = 0;  // for enums: whether the constant list ended
    };
    std::vector<Scope> stack;
    stack.push_back({Kind::file, {}, false, false, 0, {}, 0});

    std::size_t header_begin = 0;
    int paren_depth = 0;
    int nested_braces = 0;  // braces inside parentheses of a header (annotation arrays)
    int opaque_depth = 0;   // brace depth inside a method or block scope

    const std::size_t n = clean.size();
    for (std::size_t i = 0; i < n; ++i) {
        const char c = clean[i];
        Scope& top = stack.back();
        if (top.kind == Kind::method || top.kind == Kind::block) {
            if (c == '{') {
                ++opaque_depth;
            } else if (c == '}' && opaque_depth-- == 0) {
                opaque_depth = 0;
                if (top.kind == Kind::method) {
                    MethodSpan span;
                    span.name = std::move(top.header.name);
                    span.signature = std::move(top.header.signature);
                    span.start_line = line_of(top.header_start);
                    span.end_line = line_of(i);
                    const auto body_begin = line_starts[span.start_line - 1];
                    const auto body_end = span.end_line < line_starts.size()
                                              ? line_starts[span.end_line] - 1
                                              : content.size();
                    span.body = std::string(content.substr(body_begin, body_end - body_begin));
                    if (!span.body.empty() && span.body.back() == '\r') {
                        span.body.pop_back();
                    }
                    result.methods.push_back(std::move(span));
                }
                stack.pop_back();
                header_begin = i + 1;
            }
            continue;
        }

        // Type or file scope: accumulate a member header.
        if (c == '(') {
            ++paren_depth;
        } else if (c == ')') {
            paren_depth = std::max(0, paren_depth - 1);
        } else if (paren_depth > 0) {
            if (c == '{') {
                ++nested_braces;
            } else if (c == '}') {
                --nested_braces;
            }
        } else if (c == ';') {
            header_begin = i + 1;
            ++top.members_seen;
        } else if (c == '{') {
            std::string_view header(clean.data() + header_begin, i - header_begin);
            std::size_t lead = 0;
            while (lead < header.size() && detail::is_space(header[lead])) {
                ++lead;
            }
            const std::size_t start_offset = header_begin + lead;
            header = detail::trim(header);

            Scope next{Kind::block, {}, false, false, start_offset, {}, 0};
            std::string type_name;
            bool is_enum = false;
            bool is_record = false;
            detail::MethodHeader method;
            const bool file_scope = top.kind == Kind::file;
            if (detail::parse_type_header(header, type_name, is_enum, &is_record)) {
                next.kind = Kind::type;
                next.name = std::move(type_name);
                next.is_enum = is_enum;
                next.is_record = is_record;
            } else if (top.is_enum && top.members_seen == 0
                       && detail::is_enum_constant(detail::last_enum_constant(header))) {
                next.kind = Kind::type;
                next.name = top.name;
            } else if (detail::parse_method_header(header, top.name, file_scope, method)) {
                next.kind = Kind::method;
                next.header = std::move(method);
            } else if (top.is_record && detail::is_compact_constructor(header, top.name)) {
                next.kind = Kind::method;
                next.header = {top.name, detail::collapse_whitespace(detail::strip_annotations(header))};
            }
            stack.push_back(std::move(next));
            opaque_depth = 0;
            header_begin = i + 1;
        } else if (c == '}') {
            if (top.kind == Kind::file) {
                result.methods.clear();
                result.parse_failed = true;
                return result;
            }
            stack.pop_back();
            header_begin = i + 1;
        }
    }

    if (stack.size() != 1 || paren_depth != 0 || nested_braces != 0) {
        result.methods.clear();
        result.parse_failed = true;
    }
    return result;
}

}  // namespace iqloc
