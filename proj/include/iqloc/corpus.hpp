#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "detail/parallel.hpp"
#include "detail/utf8.hpp"
#include "error.hpp"
#include "method_extractor.hpp"

namespace iqloc {

enum class ReportClass { ST, PE, NL };

inline std::string_view to_string(ReportClass c) noexcept
{
    switch (c) {
    case ReportClass::ST:
        return "ST";
    case ReportClass::PE:
        return "PE";
    case ReportClass::NL:
        return "NL";
    }
    return "NL";
}

inline ReportClass report_class_from_string(std::string_view s)
{
    if (s == "ST") {
        return ReportClass::ST;
    }
    if (s == "PE") {
        return ReportClass::PE;
    }
    if (s == "NL") {
        return ReportClass::NL;
    }
    throw DataError("unknown report class: " + std::string(s));
}

using Timestamp = std::chrono::sys_seconds;

/// Parses `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM:SS[.fff][Z|+HH:MM|-HH:MM]` (a space
/// may replace the `T`) into UTC seconds.
inline Timestamp parse_timestamp(std::string_view text)
{
    using namespace std::chrono;
    const std::string s(text);
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    int consumed = 0;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed) != 3 || consumed != 10) {
        throw DataError("unparseable timestamp: " + s);
    }
    std::size_t pos = 10;
    int offset_minutes = 0;
    if (pos < s.size()) {
        if ((s[pos] != 'T' && s[pos] != ' ')
            || std::sscanf(s.c_str() + pos + 1, "%2d:%2d:%2d%n", &h, &mi, &sec, &consumed) != 3 || consumed != 8) {
            throw DataError("unparseable timestamp: " + s);
        }
        pos += 9;
        if (pos < s.size() && s[pos] == '.') {
            ++pos;
            while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
                ++pos;
            }
        }
        if (pos < s.size()) {
            if (s[pos] == 'Z' && pos + 1 == s.size()) {
                pos = s.size();
            } else if ((s[pos] == '+' || s[pos] == '-') && s.size() - pos == 6 && s[pos + 3] == ':') {
                int oh = 0, om = 0;
                if (std::sscanf(s.c_str() + pos + 1, "%2d:%2d", &oh, &om) != 2) {
                    throw DataError("unparseable timestamp offset: " + s);
                }
                offset_minutes = (s[pos] == '+' ? 1 : -1) * (oh * 60 + om);
            } else {
                throw DataError("unparseable timestamp: " + s);
            }
        }
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) {
        throw DataError("invalid calendar timestamp: " + s);
    }
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} - minutes{offset_minutes};
}

struct BugReport {
    std::string id;
    std::string project;
    std::string version;
    std::string title;
    std::string description;
    std::string created_at;  // as given; `created_time` holds the parsed value
    Timestamp created_time{};
    std::vector<std::string> fixed_files;
    std::optional<ReportClass> report_class;

    /// The text a report contributes as query context.
    std::string text() const { return title + "\n" + description; }

    friend bool operator==(const BugReport&, const BugReport&) = default;
};

inline void to_json(nlohmann::json& j, const BugReport& r)
{
    j = nlohmann::json{{"id", r.id},
                       {"project", r.project},
                       {"version", r.version},
                       {"title", r.title},
                       {"description", r.description},
                       {"created_at", r.created_at},
                       {"fixed_files", r.fixed_files}};
    if (r.report_class) {
        j["report_class"] = std::string(to_string(*r.report_class));
    }
}

inline void from_json(const nlohmann::json& j, BugReport& r)
{
    try {
        r.id = j.at("id").get<std::string>();
        r.project = j.at("project").get<std::string>();
        r.version = j.at("version").get<std::string>();
        r.title = j.value("title", std::string{});
        r.description = j.value("description", std::string{});
        r.created_at = j.at("created_at").get<std::string>();
        r.fixed_files = j.value("fixed_files", std::vector<std::string>{});
        r.report_class.reset();
        if (j.contains("report_class") && !j["report_class"].is_null()) {
            r.report_class = report_class_from_string(j["report_class"].get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed bug report: ") + e.what());
    }
    if (r.id.empty()) {
        throw DataError("bug report with empty id");
    }
    r.created_time = parse_timestamp(r.created_at);
}

/// Reads a JSONL stream of bug reports. Blank lines are skipped. Duplicate
/// ids within a project are rejected.
inline std::vector<BugReport> read_reports(std::istream& in)
{
    std::vector<BugReport> reports;
    std::map<std::pair<std::string, std::string>, std::size_t> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            continue;
        }
        BugReport report;
        try {
            report = nlohmann::json::parse(line).get<BugReport>();
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError("reports line " + std::to_string(line_no) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("reports line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!seen.emplace(std::pair{report.project, report.id}, line_no).second) {
            throw DataError("reports line " + std::to_string(line_no) + ": duplicate id " + report.id + " in project "
                            + report.project);
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

inline std::vector<BugReport> load_reports(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open reports file: " + path.string());
    }
    return read_reports(in);
}

struct SourceDocument {
    std::string path;
    std::string project;
    std::string version;
    std::string content;
    std::vector<MethodSpan> methods;
    bool parse_failed = false;

    friend bool operator==(const SourceDocument&, const SourceDocument&) = default;
};

inline bool document_order(const SourceDocument& a, const SourceDocument& b)
{
    return std::tie(a.path, a.project, a.version) < std::tie(b.path, b.project, b.version);
}

/// Builds a document from raw file bytes: lossy UTF-8 decode, then method
/// extraction.
inline SourceDocument make_document(std::string project, std::string version, std::string path,
                                    std::string_view bytes, std::size_t* replaced = nullptr)
{
    auto decoded = detail::decode_lossy(bytes);
    if (replaced) {
        *replaced = decoded.replaced;
    }
    SourceDocument doc{std::move(path), std::move(project), std::move(version), std::move(decoded.text), {}, false};
    auto extraction = extract_methods(doc.content);
    doc.methods = std::move(extraction.methods);
    doc.parse_failed = extraction.parse_failed;
    return doc;
}

struct LoadIssue {
    std::string project;
    std::string version;
    std::string path;
    std::string message;
};

struct LoadReport {
    std::vector<LoadIssue> errors;
    std::vector<LoadIssue> warnings;
};

struct ManifestEntry {
    std::string project;
    std::string version;
    std::filesystem::path base;  // directory the listed files are relative to
    std::vector<std::string> files;
};

/// Parses a corpus manifest: one `{"project", "version", "files": [...]}`
/// object or an array of them. An optional `"root"` per entry gives the
/// directory (relative to `root`) holding that entry's files.
inline std::vector<ManifestEntry> parse_manifest(const nlohmann::json& manifest, const std::filesystem::path& root)
{
    std::vector<ManifestEntry> entries;
    auto one = [&](const nlohmann::json& e) {
        try {
            ManifestEntry entry;
            entry.project = e.at("project").get<std::string>();
            entry.version = e.at("version").get<std::string>();
            entry.files = e.at("files").get<std::vector<std::string>>();
            entry.base = root / e.value("root", std::string{});
            entries.push_back(std::move(entry));
        } catch (const nlohmann::json::exception& ex) {
            throw DataError(std::string("malformed corpus manifest entry: ") + ex.what());
        }
    };
    if (manifest.is_array()) {
        for (const auto& e : manifest) {
            one(e);
        }
    } else if (manifest.is_object() && manifest.contains("entries")) {
        for (const auto& e : manifest["entries"]) {
            one(e);
        }
    } else {
        one(manifest);
    }
    return entries;
}

struct Corpus {
    std::vector<SourceDocument> documents;
    LoadReport report;
};

inline std::string read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open file: " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return std::move(buffer).str();
}

/// Loads every file listed by the manifest and extracts its methods. Missing
/// files and duplicates are collected into the load report; an empty result
/// is a hard error. Documents come back sorted by path.
inline Corpus load_corpus(const std::vector<ManifestEntry>& entries, unsigned threads = 1)
{
    struct Job {
        const ManifestEntry* entry;
        std::string path;
    };
    std::vector<Job> jobs;
    for (const auto& entry : entries) {
        for (const auto& file : entry.files) {
            jobs.push_back({&entry, file});
        }
    }

    std::vector<std::optional<SourceDocument>> loaded(jobs.size());
    std::vector<std::optional<LoadIssue>> failures(jobs.size());
    std::vector<std::size_t> replaced(jobs.size(), 0);
    detail::parallel_for(jobs.size(), threads, [&](std::size_t i) {
        const auto& job = jobs[i];
        std::ifstream in(job.entry->base / job.path, std::ios::binary);
        if (!in) {
            failures[i] = LoadIssue{job.entry->project, job.entry->version, job.path, "file not found or unreadable"};
            return;
        }
        std::ostringstream buffer;
        buffer << in.rdbuf();
        loaded[i] = make_document(job.entry->project, job.entry->version, job.path, buffer.str(), &replaced[i]);
    });

    Corpus corpus;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (failures[i]) {
            corpus.report.errors.push_back(*failures[i]);
            continue;
        }
        auto& doc = *loaded[i];
        if (replaced[i] > 0) {
            corpus.report.warnings.push_back({doc.project, doc.version, doc.path,
                                              "invalid UTF-8: " + std::to_string(replaced[i])
                                                  + " byte(s) replaced with U+FFFD"});
        }
        if (doc.parse_failed) {
            corpus.report.warnings.push_back(
                {doc.project, doc.version, doc.path, "method extraction failed; indexed as a whole document"});
        }
        corpus.documents.push_back(std::move(doc));
    }
    std::stable_sort(corpus.documents.begin(), corpus.documents.end(), document_order);
    auto dup = std::adjacent_find(corpus.documents.begin(), corpus.documents.end(), [](const auto& a, const auto& b) {
        return a.path == b.path && a.project == b.project && a.version == b.version;
    });
    while (dup != corpus.documents.end()) {
        corpus.report.errors.push_back({dup->project, dup->version, dup->path, "duplicate manifest entry"});
        corpus.documents.erase(dup + 1);
        dup = std::adjacent_find(dup, corpus.documents.end(), [](const auto& a, const auto& b) {
            return a.path == b.path && a.project == b.project && a.version == b.version;
        });
    }
    if (corpus.documents.empty()) {
        throw DataError("corpus is empty: no manifest file could be loaded");
    }
    return corpus;
}

inline Corpus load_corpus(const std::filesystem::path& manifest_path, std::optional<std::filesystem::path> root = {},
                          unsigned threads = 1)
{
    std::ifstream in(manifest_path);
    if (!in) {
        throw DataError("cannot open corpus manifest: " + manifest_path.string());
    }
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("corpus manifest is not valid JSON: ") + e.what());
    }
    const auto base = root ? *root : manifest_path.parent_path();
    return load_corpus(parse_manifest(manifest, base), threads);
}

inline nlohmann::json to_json(const LoadReport& report)
{
    auto issues = [](const std::vector<LoadIssue>& list) {
        auto arr = nlohmann::json::array();
        for (const auto& i : list) {
            arr.push_back({{"project", i.project}, {"version", i.version}, {"path", i.path}, {"message", i.message}});
        }
        return arr;
    };
    return {{"errors", issues(report.errors)}, {"warnings", issues(report.warnings)}};
}

}  // namespace iqloc
