#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "index.hpp"

namespace iqloc {

inline constexpr std::string_view index_magic = "IQLOCIDX";
inline constexpr std::uint8_t index_format_version = 1;

/// An index together with the documents it was built from (ordinal i of
/// the index is documents[i]). This is what the index cache file holds.
struct IndexBundle {
    Index index;
    std::vector<SourceDocument> documents;
};

inline IndexBundle make_bundle(std::vector<SourceDocument> documents, Bm25Params params = {},
                               AnalyzerMode mode = AnalyzerMode::code)
{
    std::stable_sort(documents.begin(), documents.end(), document_order);
    auto index = Index::build(documents, params, mode);
    return {std::move(index), std::move(documents)};
}

namespace detail {

class BinaryWriter {
  public:
    explicit BinaryWriter(std::string& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }

    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i) {
            u8(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }

    void u64(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i) {
            u8(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }

    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void str(std::string_view s)
    {
        u64(s.size());
        out_.append(s);
    }

  private:
    std::string& out_;
};

class BinaryReader {
  public:
    explicit BinaryReader(std::string_view in) : in_(in) {}

    std::uint8_t u8()
    {
        need(1);
        return static_cast<std::uint8_t>(in_[pos_++]);
    }

    std::uint32_t u32()
    {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        }
        return v;
    }

    std::uint64_t u64()
    {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(u8()) << (8 * i);
        }
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    std::string str()
    {
        const auto n = u64();
        need(n);
        std::string s(in_.substr(pos_, n));
        pos_ += n;
        return s;
    }

    std::string_view raw(std::size_t n)
    {
        need(n);
        auto s = in_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const noexcept { return pos_ == in_.size(); }

  private:
    void need(std::uint64_t n) const
    {
        if (n > in_.size() - pos_) {
            throw DataError("index file truncated");
        }
    }

    std::string_view in_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Layout: magic, format version byte, analyzer mode byte, k1, b, document
/// records (table entry, length, content, method spans), then postings in
/// ascending term order. All integers little-endian.
inline std::string serialize(const IndexBundle& bundle)
{
    const auto& index = bundle.index;
    std::string out;
    detail::BinaryWriter w(out);
    out.append(index_magic);
    w.u8(index_format_version);
    w.u8(static_cast<std::uint8_t>(index.analyzer_mode()));
    w.f64(index.params().k1);
    w.f64(index.params().b);
    w.u64(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        const auto& entry = index.doc_table()[i];
        w.str(entry.project);
        w.str(entry.version);
        w.str(entry.path);
        w.u64(index.doc_lengths()[i]);
        const auto& doc = bundle.documents[i];
        w.str(doc.content);
        w.u8(doc.parse_failed ? 1 : 0);
        w.u64(doc.methods.size());
        for (const auto& m : doc.methods) {
            w.str(m.name);
            w.str(m.signature);
            w.u64(m.start_line);
            w.u64(m.end_line);
        }
    }
    std::vector<const std::pair<const std::string, std::vector<Posting>>*> terms;
    terms.reserve(index.postings().size());
    for (const auto& entry : index.postings()) {
        terms.push_back(&entry);
    }
    std::sort(terms.begin(), terms.end(), [](auto* a, auto* b) { return a->first < b->first; });
    w.u64(terms.size());
    for (const auto* entry : terms) {
        w.str(entry->first);
        w.u64(entry->second.size());
        for (const auto& p : entry->second) {
            w.u32(p.doc);
            w.u32(p.tf);
        }
    }
    return out;
}

inline IndexBundle deserialize(std::string_view bytes)
{
    detail::BinaryReader r(bytes);
    if (r.raw(index_magic.size()) != index_magic) {
        throw DataError("not an index file (bad magic)");
    }
    if (const auto version = r.u8(); version != index_format_version) {
        throw DataError("unsupported index format version " + std::to_string(version));
    }
    const auto mode_byte = r.u8();
    if (mode_byte > 1) {
        throw DataError("index file has unknown analyzer mode");
    }
    const auto mode = static_cast<AnalyzerMode>(mode_byte);
    Bm25Params params;
    params.k1 = r.f64();
    params.b = r.f64();
    params.validate();
    const auto n = r.u64();
    std::vector<DocEntry> table;
    std::vector<std::uint64_t> lengths;
    std::vector<SourceDocument> documents;
    for (std::uint64_t i = 0; i < n; ++i) {
        DocEntry entry;
        entry.project = r.str();
        entry.version = r.str();
        entry.path = r.str();
        lengths.push_back(r.u64());
        SourceDocument doc{entry.path, entry.project, entry.version, r.str(), {}, false};
        doc.parse_failed = r.u8() != 0;
        const auto methods = r.u64();
        const auto line_count = static_cast<std::size_t>(std::count(doc.content.begin(), doc.content.end(), '\n')) + 1;
        for (std::uint64_t m = 0; m < methods; ++m) {
            MethodSpan span;
            span.name = r.str();
            span.signature = r.str();
            span.start_line = r.u64();
            span.end_line = r.u64();
            if (span.start_line == 0 || span.start_line > span.end_line || span.end_line > line_count) {
                throw DataError("index file has a method span outside its document");
            }
            span.body = line_range(doc.content, span.start_line, span.end_line);
            doc.methods.push_back(std::move(span));
        }
        table.push_back(std::move(entry));
        documents.push_back(std::move(doc));
    }
    std::unordered_map<std::string, std::vector<Posting>> postings;
    const auto terms = r.u64();
    for (std::uint64_t t = 0; t < terms; ++t) {
        auto term = r.str();
        const auto count = r.u64();
        std::vector<Posting> list;
        list.reserve(count);
        for (std::uint64_t k = 0; k < count; ++k) {
            Posting p;
            p.doc = r.u32();
            p.tf = r.u32();
            if (p.doc >= n) {
                throw DataError("index file posting references unknown document");
            }
            list.push_back(p);
        }
        postings.emplace(std::move(term), std::move(list));
    }
    if (!r.done()) {
        throw DataError("index file has trailing bytes");
    }
    return {Index::from_parts(params, mode, std::move(table), std::move(lengths), std::move(postings)),
            std::move(documents)};
}

inline void save_bundle(const IndexBundle& bundle, const std::filesystem::path& path)
{
    const auto bytes = serialize(bundle);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write index file: " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline IndexBundle load_bundle(const std::filesystem::path& path) { return deserialize(read_file_bytes(path)); }

}  // namespace iqloc
