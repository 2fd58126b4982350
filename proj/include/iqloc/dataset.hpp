#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "corpus.hpp"
#include "detail/hash.hpp"
#include "detail/parallel.hpp"
#include "error.hpp"
#include "method_extractor.hpp"

namespace iqloc {

struct LineRange {
    std::size_t start = 0;
    std::size_t length = 0;

    friend bool operator==(const LineRange&, const LineRange&) = default;
};

struct DiffHunk {
    std::string path;
    LineRange old_range;
    LineRange new_range;
    std::string section;              // text after the closing "@@", if any
    std::vector<std::string> lines;   // body lines with their ' ', '-' or '+' prefix
    std::vector<std::string> removed;
    std::vector<std::string> added;

    friend bool operator==(const DiffHunk&, const DiffHunk&) = default;
};

namespace detail {

inline std::string strip_diff_path(std::string_view raw)
{
    if (auto tab = raw.find('\t'); tab != std::string_view::npos) {
        raw = raw.substr(0, tab);
    }
    raw = trim(raw);
    if (raw.starts_with("a/") || raw.starts_with("b/")) {
        raw.remove_prefix(2);
    }
    return std::string(raw);
}

inline std::size_t parse_count(std::string_view s, std::string_view line)
{
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw DataError("malformed hunk header: " + std::string(line));
    }
    return v;
}

inline LineRange parse_range(std::string_view s, char sign, std::string_view line)
{
    if (s.empty() || s.front() != sign) {
        throw DataError("malformed hunk header: " + std::string(line));
    }
    s.remove_prefix(1);
    LineRange r;
    if (auto comma = s.find(','); comma != std::string_view::npos) {
        r.start = parse_count(s.substr(0, comma), line);
        r.length = parse_count(s.substr(comma + 1), line);
    } else {
        r.start = parse_count(s, line);
        r.length = 1;
    }
    return r;
}

inline std::string format_range(char sign, const LineRange& r)
{
    return std::string(1, sign) + std::to_string(r.start) + "," + std::to_string(r.length);
}

}  // namespace detail

/// Parses a unified diff into hunks. Paths come from the `---`/`+++`
/// headers with `a/` and `b/` stripped; for a deleted file the old path is
/// used. Body line counts must agree with the hunk header.
inline std::vector<DiffHunk> parse_unified_diff(std::string_view text)
{
    std::vector<DiffHunk> hunks;
    std::string old_path, new_path;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    DiffHunk* open = nullptr;
    std::size_t old_left = 0, new_left = 0;
    const auto where = [&] { return "diff line " + std::to_string(line_no); };
    const auto close = [&] {
        if (open && (old_left != 0 || new_left != 0)) {
            throw DataError(where() + ": hunk body shorter than its header announces");
        }
        open = nullptr;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (open && (old_left > 0 || new_left > 0)) {
            const char tag = line.empty() ? ' ' : line.front();
            if (tag == ' ' && old_left > 0 && new_left > 0) {
                --old_left;
                --new_left;
            } else if (tag == '-' && old_left > 0) {
                --old_left;
                open->removed.push_back(line.substr(1));
            } else if (tag == '+' && new_left > 0) {
                --new_left;
                open->added.push_back(line.substr(1));
            } else if (tag == '\\') {
                continue;
            } else {
                throw DataError(where() + ": unexpected line inside hunk");
            }
            open->lines.push_back(line.empty() ? std::string(" ") : line);
            continue;
        }
        if (line.starts_with("\\")) {
            continue;
        }
        if (line.starts_with("--- ")) {
            close();
            old_path = detail::strip_diff_path(std::string_view(line).substr(4));
            continue;
        }
        if (line.starts_with("+++ ")) {
            close();
            new_path = detail::strip_diff_path(std::string_view(line).substr(4));
            continue;
        }
        if (line.starts_with("@@")) {
            close();
            const auto end = line.find("@@", 2);
            if (end == std::string::npos) {
                throw DataError(where() + ": malformed hunk header: " + line);
            }
            std::istringstream header(line.substr(2, end - 2));
            std::string old_part, new_part, extra;
            header >> old_part >> new_part;
            if (old_part.empty() || new_part.empty() || (header >> extra)) {
                throw DataError(where() + ": malformed hunk header: " + line);
            }
            if (old_path.empty() && new_path.empty()) {
                throw DataError(where() + ": hunk without file headers");
            }
            DiffHunk hunk;
            hunk.path = new_path.empty() || new_path == "/dev/null" ? old_path : new_path;
            try {
                hunk.old_range = detail::parse_range(old_part, '-', line);
                hunk.new_range = detail::parse_range(new_part, '+', line);
            } catch (const DataError& e) {
                throw DataError(where() + ": " + e.what());
            }
            hunk.section = std::string(detail::trim(std::string_view(line).substr(end + 2)));
            hunks.push_back(std::move(hunk));
            open = &hunks.back();
            old_left = open->old_range.length;
            new_left = open->new_range.length;
            continue;
        }
        // diff --git, index, mode lines and free text between files.
        close();
    }
    close();
    return hunks;
}

/// Renders hunks back to unified-diff text, one file header per run of
/// hunks sharing a path.
inline std::string render(std::span<const DiffHunk> hunks)
{
    std::string out;
    const std::string* last_path = nullptr;
    for (const auto& h : hunks) {
        if (!last_path || *last_path != h.path) {
            out += "--- a/" + h.path + "\n+++ b/" + h.path + "\n";
            last_path = &h.path;
        }
        out += "@@ " + detail::format_range('-', h.old_range) + " " + detail::format_range('+', h.new_range) + " @@";
        if (!h.section.empty()) {
            out += " " + h.section;
        }
        out += "\n";
        for (const auto& l : h.lines) {
            out += l + "\n";
        }
    }
    return out;
}

/// Diff paths and corpus paths may differ by a leading directory prefix;
/// they match when equal or when one ends with "/" + the other.
inline bool paths_match(std::string_view a, std::string_view b) noexcept
{
    if (a == b) {
        return true;
    }
    const auto suffix = [](std::string_view longer, std::string_view shorter) {
        return longer.size() > shorter.size() && longer.ends_with(shorter)
               && longer[longer.size() - shorter.size() - 1] == '/';
    };
    return suffix(a, b) || suffix(b, a);
}

/// True when the method covers any line of the hunk's old range. A
/// zero-length range `-s,0` is an insertion between lines s and s+1 and
/// counts only for a method spanning both.
inline bool method_touched(const MethodSpan& m, const LineRange& old_range) noexcept
{
    if (old_range.length == 0) {
        return m.start_line <= old_range.start && old_range.start + 1 <= m.end_line;
    }
    const auto last = old_range.start + old_range.length - 1;
    return m.start_line <= last && old_range.start <= m.end_line;
}

/// Methods of `doc` intersecting any hunk's old range, each once, in
/// source order. Hunks for other paths are ignored.
inline std::vector<MethodSpan> buggy_methods(const SourceDocument& doc, std::span<const DiffHunk> hunks)
{
    std::vector<MethodSpan> out;
    for (const auto& m : doc.methods) {
        for (const auto& h : hunks) {
            if (paths_match(h.path, doc.path) && method_touched(m, h.old_range)) {
                out.push_back(m);
                break;
            }
        }
    }
    return out;
}

struct RelevancePair {
    std::string report_id;
    std::string report_project;
    std::string source_project;
    std::string source_version;
    std::string path;
    std::string method;
    std::size_t start_line = 0;
    std::size_t end_line = 0;
    int label = 0;  // 1 positive, 0 negative
    std::string context;
    std::string candidate;

    friend bool operator==(const RelevancePair&, const RelevancePair&) = default;
};

inline void to_json(nlohmann::json& j, const RelevancePair& p)
{
    j = nlohmann::json{{"report_id", p.report_id},
                       {"report_project", p.report_project},
                       {"source_project", p.source_project},
                       {"source_version", p.source_version},
                       {"path", p.path},
                       {"method", p.method},
                       {"start_line", p.start_line},
                       {"end_line", p.end_line},
                       {"label", p.label},
                       {"context", p.context},
                       {"candidate", p.candidate}};
}

inline void from_json(const nlohmann::json& j, RelevancePair& p)
{
    try {
        p.report_id = j.at("report_id").get<std::string>();
        p.report_project = j.value("report_project", std::string{});
        p.source_project = j.value("source_project", std::string{});
        p.source_version = j.value("source_version", std::string{});
        p.path = j.value("path", std::string{});
        p.method = j.value("method", std::string{});
        p.start_line = j.value("start_line", std::size_t{0});
        p.end_line = j.value("end_line", std::size_t{0});
        p.label = j.at("label").get<int>();
        p.context = j.at("context").get<std::string>();
        p.candidate = j.at("candidate").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed relevance pair: ") + e.what());
    }
    if (p.label != 0 && p.label != 1) {
        throw DataError("relevance pair label must be 0 or 1");
    }
}

inline std::vector<RelevancePair> read_pairs(std::istream& in)
{
    std::vector<RelevancePair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            continue;
        }
        try {
            pairs.push_back(nlohmann::json::parse(line).get<RelevancePair>());
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError("pairs line " + std::to_string(line_no) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("pairs line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return pairs;
}

/// Reads `<dir>/<report id>.diff` for each report that has one.
inline std::map<std::string, std::vector<DiffHunk>> load_diffs(const std::filesystem::path& dir,
                                                               std::span<const BugReport> reports)
{
    std::map<std::string, std::vector<DiffHunk>> diffs;
    for (const auto& r : reports) {
        const auto file = dir / (r.id + ".diff");
        if (!std::filesystem::exists(file)) {
            continue;
        }
        try {
            diffs[r.id] = parse_unified_diff(read_file_bytes(file));
        } catch (const DataError& e) {
            throw DataError(file.string() + ": " + e.what());
        }
    }
    return diffs;
}

struct PairBuild {
    std::vector<RelevancePair> pairs;
    std::vector<std::string> warnings;
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

namespace detail {

struct MethodRef {
    const SourceDocument* doc;
    const MethodSpan* method;
};

inline RelevancePair make_pair(const BugReport& report, const MethodRef& ref, int label)
{
    return {report.id,
            report.project,
            ref.doc->project,
            ref.doc->version,
            ref.doc->path,
            ref.method->name,
            ref.method->start_line,
            ref.method->end_line,
            label,
            report.text(),
            ref.method->body};
}

}  // namespace detail

/// One positive per (report, buggy method) and `negatives_per_positive`
/// negatives per positive, drawn uniformly without replacement (within a
/// report) from the methods of other subject systems. Each report draws
/// from its own stream seeded by `seed` and the report id, so the output
/// does not depend on report order or thread count.
inline PairBuild build_pairs(std::span<const BugReport> reports,
                             const std::map<std::string, std::vector<DiffHunk>>& diffs,
                             std::span<const SourceDocument> documents, std::size_t negatives_per_positive = 4,
                             std::uint64_t seed = 0, unsigned threads = 1)
{
    std::set<std::string> projects;
    for (const auto& d : documents) {
        projects.insert(d.project);
    }
    if (projects.size() < 2) {
        throw DataError("building pairs needs a corpus spanning at least two subject systems");
    }
    std::vector<const SourceDocument*> ordered;
    for (const auto& d : documents) {
        ordered.push_back(&d);
    }
    std::stable_sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return document_order(*a, *b); });
    std::vector<detail::MethodRef> all_methods;
    for (const auto* d : ordered) {
        for (const auto& m : d->methods) {
            if (!detail::trim(m.body).empty()) {
                all_methods.push_back({d, &m});
            }
        }
    }

    struct Outcome {
        std::vector<RelevancePair> pairs;
        std::optional<std::string> warning;
        std::size_t positives = 0;
    };
    std::vector<Outcome> outcomes(reports.size());
    detail::parallel_for(reports.size(), threads, [&](std::size_t i) {
        const auto& report = reports[i];
        auto& outcome = outcomes[i];
        std::vector<detail::MethodRef> positives;
        if (auto it = diffs.find(report.id); it != diffs.end()) {
            for (const auto* d : ordered) {
                if (d->project != report.project || d->version != report.version) {
                    continue;
                }
                std::vector<DiffHunk> mine;
                for (const auto& h : it->second) {
                    if (paths_match(h.path, d->path)) {
                        mine.push_back(h);
                    }
                }
                for (const auto& m : d->methods) {
                    for (const auto& h : mine) {
                        if (method_touched(m, h.old_range)) {
                            positives.push_back({d, &m});
                            break;
                        }
                    }
                }
            }
        }
        if (positives.empty()) {
            outcome.warning = "report " + report.id + " has no resolvable buggy method; skipped";
            return;
        }
        std::vector<std::size_t> pool;
        for (std::size_t m = 0; m < all_methods.size(); ++m) {
            if (all_methods[m].doc->project != report.project) {
                pool.push_back(m);
            }
        }
        const auto needed = positives.size() * negatives_per_positive;
        if (pool.size() < needed) {
            throw DataError("report " + report.id + " needs " + std::to_string(needed)
                            + " negatives but other systems only offer " + std::to_string(pool.size()) + " methods");
        }
        std::uint64_t state = seed ^ detail::fnv1a64(report.id);
        detail::Rng rng(detail::splitmix64(state));
        for (std::size_t k = 0; k < needed; ++k) {
            std::swap(pool[k], pool[k + rng.below(pool.size() - k)]);
        }
        std::size_t next = 0;
        for (const auto& pos : positives) {
            outcome.pairs.push_back(detail::make_pair(report, pos, 1));
            for (std::size_t k = 0; k < negatives_per_positive; ++k) {
                outcome.pairs.push_back(detail::make_pair(report, all_methods[pool[next++]], 0));
            }
        }
        outcome.positives = positives.size();
    });

    PairBuild out;
    for (auto& o : outcomes) {
        if (o.warning) {
            out.warnings.push_back(std::move(*o.warning));
        }
        out.positives += o.positives;
        out.negatives += o.positives * negatives_per_positive;
        for (auto& p : o.pairs) {
            out.pairs.push_back(std::move(p));
        }
    }
    return out;
}

/// Report classification regexes, loaded from a versioned patterns file.
struct ClassifyPatterns {
    std::string version;
    std::vector<std::string> st_sources;
    std::vector<std::string> pe_sources;
    std::vector<std::regex> st;
    std::vector<std::regex> pe;
};

inline constexpr std::string_view default_patterns_json = R"json({
  "version": "1",
  "ST": [
    "\\bat\\s+[A-Za-z_$][\\w$]*(?:\\.[\\w$<>]+)+\\((?:[\\w$]+\\.(?:java|kt|groovy|scala):\\d+|Native Method|Unknown Source)\\)",
    "\\b(?:[A-Za-z_$][\\w$]*\\.)+[A-Z][\\w$]*(?:Exception|Error|Throwable)\\b[^\\n]*\\n\\s*at\\s+[\\w$.<>]+\\(",
    "\\bCaused by:\\s+(?:[A-Za-z_$][\\w$]*\\.)*[A-Z][\\w$]*(?:Exception|Error|Throwable)\\b"
  ],
  "PE": [
    "\\b[a-z][a-z0-9]*[A-Z][A-Za-z0-9]*\\b",
    "\\b[A-Z][a-z0-9]+[A-Z][A-Za-z0-9]*\\b",
    "\\b[A-Za-z_$][\\w$]*\\.[A-Za-z_$][\\w$]*\\s*\\(",
    "\\b[a-z][a-z0-9_]*(?:\\.[a-z][a-z0-9_]*)+\\.[A-Z][\\w$]*\\b",
    "\\b[a-z][a-z0-9]*_[a-z0-9_]*[a-z0-9]\\b"
  ]
})json";

inline ClassifyPatterns parse_patterns(const nlohmann::json& j)
{
    ClassifyPatterns p;
    try {
        p.version = j.at("version").get<std::string>();
        p.st_sources = j.at("ST").get<std::vector<std::string>>();
        p.pe_sources = j.at("PE").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed patterns file: ") + e.what());
    }
    const auto compile = [](const std::vector<std::string>& sources, std::vector<std::regex>& out) {
        for (const auto& s : sources) {
            try {
                out.emplace_back(s, std::regex::ECMAScript | std::regex::optimize);
            } catch (const std::regex_error& e) {
                throw DataError("invalid pattern '" + s + "': " + e.what());
            }
        }
    };
    compile(p.st_sources, p.st);
    compile(p.pe_sources, p.pe);
    return p;
}

inline const ClassifyPatterns& default_patterns()
{
    static const ClassifyPatterns patterns = parse_patterns(nlohmann::json::parse(default_patterns_json));
    return patterns;
}

inline ClassifyPatterns load_patterns(const std::filesystem::path& path)
{
    try {
        return parse_patterns(nlohmann::json::parse(read_file_bytes(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError("patterns file " + path.string() + " is not valid JSON: " + e.what());
    }
}

/// ST if any stack-trace pattern matches title + description, else PE if
/// any program-element pattern matches, else NL.
inline ReportClass classify_report(const BugReport& report, const ClassifyPatterns& patterns = default_patterns())
{
    const auto text = report.text();
    const auto any = [&](const std::vector<std::regex>& set) {
        return std::any_of(set.begin(), set.end(), [&](const std::regex& re) { return std::regex_search(text, re); });
    };
    if (any(patterns.st)) {
        return ReportClass::ST;
    }
    if (any(patterns.pe)) {
        return ReportClass::PE;
    }
    return ReportClass::NL;
}

enum class SplitMode { random, timewise };

struct SplitSpec {
    double train = 0.7;
    double validation = 0.1;
    double test = 0.2;
    SplitMode mode = SplitMode::random;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (train < 0.0 || validation < 0.0 || test < 0.0 || std::abs(train + validation + test - 1.0) > 1e-9) {
            throw std::invalid_argument("split ratios must be non-negative and sum to 1");
        }
    }
};

struct Splits {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
    std::vector<std::string> warnings;
};

inline void to_json(nlohmann::json& j, const Splits& s)
{
    j = nlohmann::json{{"train", s.train}, {"validation", s.validation}, {"test", s.test}};
}

namespace detail {

/// Train = ⌊r_train·n⌋, validation = ⌊r_val·n⌋, test = the rest. The small
/// epsilon keeps products such as 0.7·20 from flooring one short.
inline void cut(std::span<const BugReport* const> ordered, const SplitSpec& spec, Splits& out)
{
    const auto n = ordered.size();
    const auto floor_of = [n](double r) {
        return std::min(n, static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9)));
    };
    const auto n_train = floor_of(spec.train);
    const auto n_val = std::min(n - n_train, floor_of(spec.validation));
    for (std::size_t i = 0; i < n; ++i) {
        auto& target = i < n_train ? out.train : (i < n_train + n_val ? out.validation : out.test);
        target.push_back(ordered[i]->id);
    }
}

}  // namespace detail

/// Seeded global shuffle, then a single cut.
inline Splits split_random(std::span<const BugReport> reports, const SplitSpec& spec)
{
    spec.validate();
    std::vector<const BugReport*> ordered;
    for (const auto& r : reports) {
        ordered.push_back(&r);
    }
    detail::Rng rng(spec.seed);
    rng.shuffle(ordered.begin(), ordered.end());
    Splits out;
    detail::cut(ordered, spec, out);
    return out;
}

inline constexpr std::size_t timewise_min_reports = 10;

/// Per subject system: sort by creation time (id breaks ties), cut with
/// the earliest reports in train, then concatenate systems in name order.
/// Systems with fewer than 10 reports go wholly to train.
inline Splits split_timewise(std::span<const BugReport> reports, const SplitSpec& spec)
{
    spec.validate();
    std::map<std::string, std::vector<const BugReport*>> by_system;
    for (const auto& r : reports) {
        by_system[r.project].push_back(&r);
    }
    Splits out;
    for (auto& [system, list] : by_system) {
        std::stable_sort(list.begin(), list.end(), [](auto* a, auto* b) {
            return std::tie(a->created_time, a->id) < std::tie(b->created_time, b->id);
        });
        if (list.size() < timewise_min_reports) {
            out.warnings.push_back("system " + system + " has only " + std::to_string(list.size())
                                   + " reports; all assigned to train");
            for (auto* r : list) {
                out.train.push_back(r->id);
            }
            continue;
        }
        detail::cut(list, spec, out);
    }
    return out;
}

inline Splits split_reports(std::span<const BugReport> reports, const SplitSpec& spec)
{
    return spec.mode == SplitMode::random ? split_random(reports, spec) : split_timewise(reports, spec);
}

}  // namespace iqloc
