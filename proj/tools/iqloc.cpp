// Command-line front end: index, search, localize, keywords, dataset,
// pairs, eval and backend subcommands.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 backend failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <iqloc/iqloc.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int exit_usage = 1;
constexpr int exit_data = 2;
constexpr int exit_transport = 3;

std::string sha256_hex(std::string_view bytes)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) {
        out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    }
    return out.str();
}

std::string file_digest(const fs::path& path) { return sha256_hex(iqloc::read_file_bytes(path)); }

/// Writes to `path`, or stdout when empty.
void emit(const std::string& path, const std::string& text)
{
    if (path.empty()) {
        std::cout << text;
        std::cout.flush();
        return;
    }
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw iqloc::DataError("cannot write output file: " + path);
    }
    out << text;
}

void warn(const std::string& message) { std::cerr << "warning: " << message << "\n"; }

/// Provenance record written next to a run's output.
class RunManifest {
  public:
    RunManifest(std::string command, std::uint64_t seed) : command_(std::move(command)), seed_(seed) {}

    void input(const std::string& role, const fs::path& path)
    {
        inputs_[role] = {{"path", path.string()}, {"sha256", file_digest(path)}};
    }
    void output(const std::string& role, const fs::path& path)
    {
        outputs_[role] = {{"path", path.string()}, {"sha256", file_digest(path)}};
    }
    void config(json c) { config_ = std::move(c); }
    void timing(const std::string& stage, double ms) { timings_[stage] = timings_.value(stage, 0.0) + ms; }
    void note(const std::string& key, json value) { extra_[key] = std::move(value); }

    /// Written to `explicit_path`, else `<out>.manifest.json`, else stderr.
    void write(const std::string& explicit_path, const std::string& out_path) const
    {
        json j{{"tool", "iqloc"},
               {"version", std::string(iqloc::version)},
               {"command", command_},
               {"seed", seed_},
               {"config", config_},
               {"inputs", inputs_},
               {"outputs", outputs_},
               {"timings_ms", timings_}};
        for (const auto& [k, v] : extra_.items()) {
            j[k] = v;
        }
        const auto text = j.dump(2) + "\n";
        if (!explicit_path.empty()) {
            emit(explicit_path, text);
        } else if (!out_path.empty()) {
            emit(out_path + ".manifest.json", text);
        } else {
            std::cerr << text;
        }
    }

  private:
    std::string command_;
    std::uint64_t seed_;
    json config_ = json::object();
    json inputs_ = json::object();
    json outputs_ = json::object();
    json timings_ = json::object();
    json extra_ = json::object();
};

double elapsed_ms(std::chrono::steady_clock::time_point since)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

void report_load_issues(const iqloc::LoadReport& report)
{
    for (const auto& w : report.warnings) {
        warn(w.path + ": " + w.message);
    }
    for (const auto& e : report.errors) {
        std::cerr << "error: " << e.path << ": " << e.message << "\n";
    }
}

iqloc::Corpus load_corpus_checked(const fs::path& manifest, const std::string& root, unsigned threads)
{
    auto corpus = iqloc::load_corpus(manifest, root.empty() ? std::nullopt : std::optional<fs::path>(root), threads);
    report_load_issues(corpus.report);
    return corpus;
}

/// Content address of an index: documents plus analysis parameters.
std::string index_key(const std::vector<iqloc::SourceDocument>& docs, const iqloc::Bm25Params& params,
                      iqloc::AnalyzerMode mode)
{
    std::string material = "iqloc-index-v1\n" + std::string(iqloc::to_string(mode)) + "\n";
    material += std::to_string(params.k1) + " " + std::to_string(params.b) + "\n";
    for (const auto& d : docs) {
        material += d.project + "\n" + d.version + "\n" + d.path + "\n" + sha256_hex(d.content) + "\n";
    }
    return sha256_hex(material);
}

/// Builds the bundle for a corpus, reusing a cached serialized index keyed
/// by content when allowed.
iqloc::IndexBundle bundle_for_corpus(const fs::path& manifest, const std::string& root, const iqloc::PipelineConfig& config,
                                     unsigned threads, bool use_cache, const std::string& cache_dir)
{
    auto corpus = load_corpus_checked(manifest, root, threads);
    if (!use_cache) {
        return iqloc::make_bundle(std::move(corpus.documents), config.bm25, config.analyzer);
    }
    auto docs = std::move(corpus.documents);
    std::stable_sort(docs.begin(), docs.end(), iqloc::document_order);
    const fs::path dir = cache_dir.empty() ? manifest.parent_path() / ".iqloc-cache" : fs::path(cache_dir);
    const auto file = dir / (index_key(docs, config.bm25, config.analyzer) + ".idx");
    if (fs::exists(file)) {
        try {
            return iqloc::load_bundle(file);
        } catch (const iqloc::DataError& e) {
            warn("ignoring unreadable index cache " + file.string() + ": " + e.what());
        }
    }
    auto bundle = iqloc::make_bundle(std::move(docs), config.bm25, config.analyzer);
    fs::create_directories(dir);
    iqloc::save_bundle(bundle, file);
    return bundle;
}

std::vector<std::size_t> parse_k_list(const std::string& text)
{
    std::vector<std::size_t> ks;
    std::stringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) {
        try {
            std::size_t used = 0;
            const auto v = std::stoul(part, &used);
            if (used != part.size() || v == 0) {
                throw std::invalid_argument(part);
            }
            ks.push_back(v);
        } catch (const std::exception&) {
            throw std::invalid_argument("--k expects a comma-separated list of positive integers, got '" + text + "'");
        }
    }
    if (ks.empty()) {
        throw std::invalid_argument("--k list is empty");
    }
    return ks;
}

std::vector<double> parse_thresholds(const std::string& text)
{
    std::vector<double> out;
    std::stringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) {
        try {
            std::size_t used = 0;
            const double v = std::stod(part, &used);
            if (used != part.size()) {
                throw std::invalid_argument(part);
            }
            iqloc::RelevanceThreshold{v};
            out.push_back(v);
        } catch (const std::exception&) {
            throw std::invalid_argument("--thresholds expects comma-separated values in [0, 1], got '" + text + "'");
        }
    }
    return out;
}

std::vector<json> read_jsonl(const fs::path& path)
{
    std::istringstream in(iqloc::read_file_bytes(path));
    std::vector<json> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (iqloc::detail::trim(line).empty()) {
            continue;
        }
        try {
            rows.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw iqloc::DataError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

// ---------------------------------------------------------------- index

struct IndexArgs {
    std::string corpus, root, out, analyzer = "code";
    double k1 = 1.2, b = 0.75;
    unsigned threads = iqloc::detail::default_threads();
};

int run_index(const IndexArgs& a)
{
    iqloc::Bm25Params params{a.k1, a.b};
    params.validate();
    const auto mode = iqloc::analyzer_mode_from_string(a.analyzer);
    auto corpus = load_corpus_checked(a.corpus, a.root, a.threads);
    const auto report = corpus.report;
    const auto bundle = iqloc::make_bundle(std::move(corpus.documents), params, mode);
    iqloc::save_bundle(bundle, a.out);
    std::size_t methods = 0;
    for (const auto& d : bundle.documents) {
        methods += d.methods.size();
    }
    std::cout << json{{"documents", bundle.documents.size()},
                      {"methods", methods},
                      {"terms", bundle.index.postings().size()},
                      {"load", iqloc::to_json(report)},
                      {"out", a.out}}
                     .dump(2)
              << "\n";
    return 0;
}

// ---------------------------------------------------------------- search

struct SearchArgs {
    std::string index, project, version, query;
    std::size_t k = 10;
};

int run_search(const SearchArgs& a)
{
    const auto bundle = iqloc::load_bundle(a.index);
    const auto terms = iqloc::query_terms(a.query, bundle.index.analyzer_mode());
    const auto ranked = bundle.index.search(terms, a.project, a.version, a.k);
    std::cout << json{{"query", terms}, {"hits", ranked.hits}}.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------- localize

struct LocalizeArgs {
    std::string config, reports, index, corpus, root, manifest, out, cache_dir;
    bool no_cache = false;
    bool baseline = false;
    bool explain = false;
    unsigned threads = iqloc::detail::default_threads();
};

int run_localize(const LocalizeArgs& a)
{
    if (a.index.empty() == a.corpus.empty()) {
        throw std::invalid_argument("localize needs exactly one of --index or --corpus");
    }
    const auto config = iqloc::load_config(a.config);
    RunManifest manifest(std::string("localize") + (a.baseline ? " --baseline" : ""), config.seed);
    manifest.config(config);
    if (!a.config.empty()) {
        manifest.input("config", a.config);
    }
    manifest.input("reports", a.reports);

    auto start = std::chrono::steady_clock::now();
    iqloc::IndexBundle bundle;
    if (!a.index.empty()) {
        bundle = iqloc::load_bundle(a.index);
        manifest.input("index", a.index);
        if (bundle.index.params() != config.bm25 || bundle.index.analyzer_mode() != config.analyzer) {
            warn("index was built with different BM25 or analyzer settings; the index settings apply");
        }
    } else {
        bundle = bundle_for_corpus(a.corpus, a.root, config, a.threads, !a.no_cache, a.cache_dir);
        manifest.input("corpus", a.corpus);
    }
    manifest.timing("index", elapsed_ms(start));

    const auto reports = iqloc::load_reports(a.reports);
    start = std::chrono::steady_clock::now();
    const auto backends = iqloc::make_backends(config, bundle);
    manifest.timing("backends", elapsed_ms(start));

    std::vector<iqloc::LocalizationResult> results(reports.size());
    start = std::chrono::steady_clock::now();
    iqloc::detail::parallel_for(reports.size(), a.threads, [&](std::size_t i) {
        results[i] = iqloc::localize(reports[i], bundle, config, backends.view(), a.baseline);
    });
    manifest.timing("localize", elapsed_ms(start));

    std::string text;
    for (const auto& r : results) {
        manifest.timing("retrieve", r.timings.retrieve_ms);
        manifest.timing("score", r.timings.score_ms);
        manifest.timing("filter", r.timings.filter_ms);
        manifest.timing("keywords", r.timings.keywords_ms);
        manifest.timing("reformulate", r.timings.reformulate_ms);
        manifest.timing("rerank", r.timings.rerank_ms);
        json line;
        if (a.explain) {
            line = iqloc::to_json(r, false);
        } else {
            line = {{"report_id", r.report_id},
                    {"mode", r.baseline ? "baseline" : "full"},
                    {"query", r.baseline ? json(r.initial_query) : json(r.query.term_strings())},
                    {"final", r.final_ranking.hits}};
        }
        text += line.dump() + "\n";
    }
    emit(a.out, text);
    if (!a.out.empty()) {
        manifest.output("results", a.out);
    }
    manifest.note("reports", reports.size());
    manifest.note("threads", a.threads);
    manifest.note("backends", {{"scorer", backends.scorer->name()}, {"embedding", backends.embedder->name()}});
    manifest.write(a.manifest, a.out);
    return 0;
}

// ---------------------------------------------------------------- keywords

struct KeywordsArgs {
    std::string text, file, embedding = "hashed", index, mode = "code";
    std::size_t n = 15, dimension = 128;
    double lambda = 0.5;
};

int run_keywords(const KeywordsArgs& a)
{
    if (a.text.empty() == a.file.empty()) {
        throw std::invalid_argument("keywords needs exactly one of --text or --file");
    }
    const auto doc = a.file.empty() ? a.text : iqloc::read_file_bytes(a.file);
    const auto mode = iqloc::analyzer_mode_from_string(a.mode);
    std::unique_ptr<iqloc::EmbeddingBackend> backend;
    if (a.embedding == "hashed") {
        backend = std::make_unique<iqloc::HashedEmbedding>(a.dimension);
    } else if (a.embedding == "tfidf") {
        if (a.index.empty()) {
            throw std::invalid_argument("--embedding tfidf needs --index to fit on");
        }
        const auto bundle = iqloc::load_bundle(a.index);
        std::vector<std::string> texts;
        for (const auto& d : bundle.documents) {
            texts.push_back(d.content);
        }
        backend = std::make_unique<iqloc::CooccurrenceEmbedding>(iqloc::CooccurrenceEmbedding::fit(texts, a.dimension));
    } else {
        throw std::invalid_argument("unknown embedding backend: " + a.embedding);
    }
    const auto kw = iqloc::extract_keywords({doc, a.n, a.lambda}, *backend, mode);
    std::cout << json{{"embedding", backend->name()}, {"keywords", kw.keywords}}.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------- dataset

struct DatasetBuildArgs {
    std::string reports, corpus, root, diffs, out, manifest;
    std::size_t negatives = 4;
    std::uint64_t seed = 0;
    unsigned threads = iqloc::detail::default_threads();
};

int run_dataset_build(const DatasetBuildArgs& a)
{
    RunManifest manifest("dataset build", a.seed);
    const auto start = std::chrono::steady_clock::now();
    const auto reports = iqloc::load_reports(a.reports);
    const auto corpus = load_corpus_checked(a.corpus, a.root, a.threads);
    const auto diffs = iqloc::load_diffs(a.diffs, reports);
    const auto build = iqloc::build_pairs(reports, diffs, corpus.documents, a.negatives, a.seed, a.threads);
    for (const auto& w : build.warnings) {
        warn(w);
    }
    std::string text;
    for (const auto& p : build.pairs) {
        text += json(p).dump() + "\n";
    }
    emit(a.out, text);
    manifest.input("reports", a.reports);
    manifest.input("corpus", a.corpus);
    for (const auto& [id, hunks] : diffs) {
        manifest.input("diff:" + id, fs::path(a.diffs) / (id + ".diff"));
    }
    if (!a.out.empty()) {
        manifest.output("pairs", a.out);
    }
    manifest.config({{"negatives_per_positive", a.negatives}});
    manifest.note("counts", {{"pairs", build.pairs.size()},
                             {"positives", build.positives},
                             {"negatives", build.negatives},
                             {"skipped_reports", build.warnings.size()}});
    manifest.timing("build", elapsed_ms(start));
    manifest.write(a.manifest, a.out);
    return 0;
}

struct DatasetSplitArgs {
    std::string reports, out, mode = "random";
    double train = 0.7, validation = 0.1, test = 0.2;
    std::uint64_t seed = 0;
};

int run_dataset_split(const DatasetSplitArgs& a)
{
    const auto reports = iqloc::load_reports(a.reports);
    iqloc::SplitSpec spec{a.train, a.validation, a.test, iqloc::SplitMode::random, a.seed};
    if (a.mode == "timewise") {
        spec.mode = iqloc::SplitMode::timewise;
    } else if (a.mode != "random") {
        throw std::invalid_argument("--mode must be random or timewise");
    }
    const auto splits = iqloc::split_reports(reports, spec);
    for (const auto& w : splits.warnings) {
        warn(w);
    }
    emit(a.out, json(splits).dump(2) + "\n");
    return 0;
}

struct DatasetClassifyArgs {
    std::string reports, out, patterns;
};

int run_dataset_classify(const DatasetClassifyArgs& a)
{
    auto reports = iqloc::load_reports(a.reports);
    const auto patterns = a.patterns.empty() ? iqloc::default_patterns() : iqloc::load_patterns(a.patterns);
    std::map<std::string, std::size_t> counts{{"ST", 0}, {"PE", 0}, {"NL", 0}};
    std::string text;
    for (auto& r : reports) {
        r.report_class = iqloc::classify_report(r, patterns);
        ++counts[std::string(iqloc::to_string(*r.report_class))];
        text += json(r).dump() + "\n";
    }
    emit(a.out, text);
    std::cerr << json{{"patterns_version", patterns.version}, {"counts", counts}}.dump() << "\n";
    return 0;
}

// ---------------------------------------------------------------- pairs

struct PairsArgs {
    std::string pairs, config, out, scores_out, thresholds = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
};

int run_pairs(const PairsArgs& a)
{
    const auto config = iqloc::load_config(a.config);
    const auto thresholds = parse_thresholds(a.thresholds);
    std::ifstream in(a.pairs);
    if (!in) {
        throw iqloc::DataError("cannot open pairs file: " + a.pairs);
    }
    const auto pairs = iqloc::read_pairs(in);
    std::unique_ptr<iqloc::ScorerBackend> scorer;
    if (config.scorer_backend == "remote") {
        auto remote = config.remote;
        remote.batch_size = config.scorer_batch_size;
        scorer = std::make_unique<iqloc::RemoteScorer>(remote, config.token_budget);
    } else {
        scorer = std::make_unique<iqloc::LexicalScorer>(config.analyzer);
    }
    std::vector<iqloc::ScorePair> inputs;
    for (const auto& p : pairs) {
        inputs.push_back({p.context, p.candidate});
    }
    const auto scores = scorer->score_batch(inputs);
    if (scores.size() != inputs.size()) {
        throw iqloc::TransportError("scorer returned the wrong number of scores");
    }
    std::vector<iqloc::LabeledScore> labeled;
    std::string score_lines;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        iqloc::check_score_range(*scorer, scores[i]);
        labeled.push_back({scores[i], pairs[i].label});
        score_lines += json{{"report_id", pairs[i].report_id},
                            {"path", pairs[i].path},
                            {"method", pairs[i].method},
                            {"start_line", pairs[i].start_line},
                            {"label", pairs[i].label},
                            {"score", scores[i]}}
                           .dump()
                       + "\n";
    }
    auto sweep = json::array();
    for (double t : thresholds) {
        sweep.push_back(iqloc::confusion_metrics(labeled, t));
    }
    if (!a.scores_out.empty()) {
        emit(a.scores_out, score_lines);
    }
    emit(a.out, json{{"pairs", pairs.size()}, {"scorer", scorer->name()}, {"thresholds", sweep}}.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string results, truth, baseline, out, k = "1,5,10";
    std::size_t map_k = 0;
};

std::map<std::string, std::vector<std::string>> read_rankings(const fs::path& path)
{
    std::map<std::string, std::vector<std::string>> rankings;
    for (const auto& row : read_jsonl(path)) {
        try {
            const auto id = row.at("report_id").get<std::string>();
            std::vector<std::string> ranked;
            for (const auto& h : row.at("final")) {
                ranked.push_back(h.at("path").get<std::string>());
            }
            if (!rankings.emplace(id, std::move(ranked)).second) {
                throw iqloc::DataError(path.string() + ": duplicate result for report " + id);
            }
        } catch (const json::exception& e) {
            throw iqloc::DataError(path.string() + ": malformed result line: " + e.what());
        }
    }
    return rankings;
}

int run_eval(const EvalArgs& a)
{
    const auto ks = parse_k_list(a.k);
    const auto reports = iqloc::load_reports(a.truth);
    std::map<std::string, const iqloc::BugReport*> by_id;
    for (const auto& r : reports) {
        by_id[r.id] = &r;
    }
    const auto results = read_rankings(a.results);
    std::vector<iqloc::EvalRecord> records;
    std::map<std::string, std::vector<iqloc::EvalRecord>> by_class;
    for (const auto& [id, ranked] : results) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw iqloc::DataError("result for unknown report " + id);
        }
        const auto& report = *it->second;
        if (report.fixed_files.empty()) {
            warn("report " + id + " has no fixed files; excluded");
            continue;
        }
        iqloc::EvalRecord record{id, ranked, {report.fixed_files.begin(), report.fixed_files.end()}};
        const auto cls = report.report_class ? *report.report_class : iqloc::classify_report(report);
        by_class[std::string(iqloc::to_string(cls))].push_back(record);
        records.push_back(std::move(record));
    }
    if (records.empty()) {
        throw iqloc::DataError("no evaluable results: none of the reports has a ground truth");
    }
    const auto overall = iqloc::evaluate(records, ks, a.map_k);
    json out{{"overall", overall}};
    out["by_class"] = json::object();
    for (const auto& [cls, list] : by_class) {
        out["by_class"][cls] = iqloc::evaluate(list, ks, a.map_k);
    }
    if (!a.baseline.empty()) {
        const auto base_rankings = read_rankings(a.baseline);
        std::vector<iqloc::EvalRecord> base_records;
        for (const auto& r : records) {
            const auto it = base_rankings.find(r.query_id);
            if (it == base_rankings.end()) {
                throw iqloc::DataError("baseline results lack report " + r.query_id);
            }
            base_records.push_back({r.query_id, it->second, r.truth});
        }
        const auto base = iqloc::evaluate(base_records, ks, a.map_k);
        json comparison{{"baseline", base}};
        try {
            const auto w = iqloc::wilcoxon_signed_rank(base.ap, overall.ap);
            comparison["wilcoxon_ap"] = {{"statistic", w.statistic}, {"p_value", w.p_value}, {"n", w.n},
                                         {"exact", w.exact}};
        } catch (const std::invalid_argument& e) {
            comparison["wilcoxon_ap"] = {{"error", e.what()}};
        }
        const auto delta = iqloc::cliffs_delta(overall.ap, base.ap);
        comparison["cliffs_delta_ap"] = {{"delta", delta.delta},
                                         {"magnitude", std::string(iqloc::to_string(delta.magnitude))}};
        out["comparison"] = comparison;
    }
    emit(a.out, out.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------- backend

struct BackendArgs {
    std::string url;
    long timeout_ms = 10000;
};

int run_backend_check(const BackendArgs& a)
{
    iqloc::RemoteConfig config;
    config.url = a.url;
    if (config.url.empty()) {
        const char* env = std::getenv("IQLOC_BACKEND_URL");
        config.url = env && *env ? env : iqloc::RemoteConfig{}.url;
    }
    config.timeout = std::chrono::milliseconds(a.timeout_ms);
    const auto result = iqloc::check_backend(config);
    std::cout << json{{"url", config.url}, {"ok", result.ok}, {"dimension", result.dimension},
                      {"failures", result.failures}}
                     .dump(2)
              << "\n";
    return result.ok ? 0 : exit_transport;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bug localization with query reformulation from relevant code", "iqloc"};
    app.set_version_flag("--version", std::string(iqloc::version));
    app.require_subcommand(1);
    std::function<int()> action;

    IndexArgs index_args;
    auto* index = app.add_subcommand("index", "Build and save a BM25 index over a corpus");
    index->add_option("--corpus", index_args.corpus, "Corpus manifest (JSON)")->required();
    index->add_option("--root", index_args.root, "Directory the manifest paths are relative to");
    index->add_option("--out", index_args.out, "Index file to write")->required();
    index->add_option("--analyzer", index_args.analyzer, "code or text")->check(CLI::IsMember({"code", "text"}));
    index->add_option("--k1", index_args.k1, "BM25 k1");
    index->add_option("--b", index_args.b, "BM25 b");
    index->add_option("--threads", index_args.threads, "Worker threads")->check(CLI::PositiveNumber);
    index->callback([&] { action = [&] { return run_index(index_args); }; });

    SearchArgs search_args;
    auto* search = app.add_subcommand("search", "Query a saved index");
    search->add_option("--index", search_args.index, "Index file")->required();
    search->add_option("--project", search_args.project, "Project scope")->required();
    search->add_option("--version", search_args.version, "Version scope")->required();
    search->add_option("--query", search_args.query, "Query text")->required();
    search->add_option("--k", search_args.k, "Number of hits")->check(CLI::PositiveNumber);
    search->callback([&] { action = [&] { return run_search(search_args); }; });

    LocalizeArgs loc_args;
    auto* localize = app.add_subcommand("localize", "Rank files for each bug report");
    localize->add_option("--config", loc_args.config, "Pipeline config (JSON)");
    localize->add_option("--reports", loc_args.reports, "Bug reports (JSONL)")->required();
    localize->add_option("--index", loc_args.index, "Prebuilt index file");
    localize->add_option("--corpus", loc_args.corpus, "Corpus manifest to index on the fly");
    localize->add_option("--root", loc_args.root, "Directory the corpus paths are relative to");
    localize->add_option("--cache-dir", loc_args.cache_dir, "Index cache directory");
    localize->add_flag("--no-cache", loc_args.no_cache, "Rebuild the index instead of using the cache");
    localize->add_option("--out", loc_args.out, "Results file (JSONL); stdout when omitted");
    localize->add_option("--manifest", loc_args.manifest, "Run manifest path; defaults to <out>.manifest.json");
    localize->add_flag("--baseline", loc_args.baseline, "Retrieval only, no reformulation");
    localize->add_flag("--explain", loc_args.explain, "Include every intermediate stage in the output");
    localize->add_option("--threads", loc_args.threads, "Worker threads")->check(CLI::PositiveNumber);
    localize->callback([&] { action = [&] { return run_localize(loc_args); }; });

    KeywordsArgs kw_args;
    auto* keywords = app.add_subcommand("keywords", "Extract keywords from a text");
    keywords->add_option("--text", kw_args.text, "Input text");
    keywords->add_option("--file", kw_args.file, "Input file");
    keywords->add_option("--n", kw_args.n, "Number of keywords")->check(CLI::PositiveNumber);
    keywords->add_option("--lambda", kw_args.lambda, "Relevance/diversity trade-off")->check(CLI::Range(0.0, 1.0));
    keywords->add_option("--embedding", kw_args.embedding, "hashed or tfidf");
    keywords->add_option("--dimension", kw_args.dimension, "Embedding dimension")->check(CLI::PositiveNumber);
    keywords->add_option("--index", kw_args.index, "Index whose documents fit the tfidf embedding");
    keywords->add_option("--mode", kw_args.mode, "Analyzer mode: code or text")->check(CLI::IsMember({"code", "text"}));
    keywords->callback([&] { action = [&] { return run_keywords(kw_args); }; });

    auto* dataset = app.add_subcommand("dataset", "Build relevance pairs, splits and report classes");
    dataset->require_subcommand(1);

    DatasetBuildArgs build_args;
    auto* build = dataset->add_subcommand("build", "Build labelled report/method pairs from fix diffs");
    build->add_option("--reports", build_args.reports, "Bug reports (JSONL)")->required();
    build->add_option("--corpus", build_args.corpus, "Corpus manifest (JSON)")->required();
    build->add_option("--root", build_args.root, "Directory the corpus paths are relative to");
    build->add_option("--diffs", build_args.diffs, "Directory of <report id>.diff files")->required();
    build->add_option("--out", build_args.out, "Pairs file (JSONL); stdout when omitted");
    build->add_option("--manifest", build_args.manifest, "Run manifest path");
    build->add_option("--negatives", build_args.negatives, "Negatives per positive")->check(CLI::PositiveNumber);
    build->add_option("--seed", build_args.seed, "Sampling seed");
    build->add_option("--threads", build_args.threads, "Worker threads")->check(CLI::PositiveNumber);
    build->callback([&] { action = [&] { return run_dataset_build(build_args); }; });

    DatasetSplitArgs split_args;
    auto* split = dataset->add_subcommand("split", "Split reports into train, validation and test");
    split->add_option("--reports", split_args.reports, "Bug reports (JSONL)")->required();
    split->add_option("--out", split_args.out, "Splits file (JSON); stdout when omitted");
    split->add_option("--mode", split_args.mode, "random or timewise")->check(CLI::IsMember({"random", "timewise"}));
    split->add_option("--train", split_args.train, "Train fraction");
    split->add_option("--validation", split_args.validation, "Validation fraction");
    split->add_option("--test", split_args.test, "Test fraction");
    split->add_option("--seed", split_args.seed, "Shuffle seed (random mode)");
    split->callback([&] { action = [&] { return run_dataset_split(split_args); }; });

    DatasetClassifyArgs classify_args;
    auto* classify = dataset->add_subcommand("classify", "Label reports ST, PE or NL");
    classify->add_option("--reports", classify_args.reports, "Bug reports (JSONL)")->required();
    classify->add_option("--out", classify_args.out, "Labelled reports (JSONL); stdout when omitted");
    classify->add_option("--patterns", classify_args.patterns, "Patterns file; built-in patterns when omitted");
    classify->callback([&] { action = [&] { return run_dataset_classify(classify_args); }; });

    PairsArgs pairs_args;
    auto* pairs = app.add_subcommand("pairs", "Score relevance pairs and sweep the threshold");
    pairs->add_option("--pairs", pairs_args.pairs, "Pairs file (JSONL)")->required();
    pairs->add_option("--config", pairs_args.config, "Pipeline config selecting the scorer");
    pairs->add_option("--thresholds", pairs_args.thresholds, "Comma-separated thresholds");
    pairs->add_option("--scores-out", pairs_args.scores_out, "Per-pair scores (JSONL)");
    pairs->add_option("--out", pairs_args.out, "Metrics file (JSON); stdout when omitted");
    pairs->callback([&] { action = [&] { return run_pairs(pairs_args); }; });

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Compute ranking metrics for localization results");
    eval->add_option("--results", eval_args.results, "Results (JSONL) from localize")->required();
    eval->add_option("--truth", eval_args.truth, "Bug reports with fixed_files (JSONL)")->required();
    eval->add_option("--baseline", eval_args.baseline, "Baseline results for a paired comparison");
    eval->add_option("--k", eval_args.k, "Comma-separated cutoffs for HIT@K and P@K");
    eval->add_option("--map-k", eval_args.map_k, "MAP cutoff; 0 uses the whole list");
    eval->add_option("--out", eval_args.out, "Metrics file (JSON); stdout when omitted");
    eval->callback([&] { action = [&] { return run_eval(eval_args); }; });

    BackendArgs backend_args;
    auto* backend = app.add_subcommand("backend", "Model service utilities");
    backend->require_subcommand(1);
    auto* check = backend->add_subcommand("check", "Probe a model service for protocol conformance");
    check->add_option("--url", backend_args.url, "Service URL; IQLOC_BACKEND_URL or the default when omitted");
    check->add_option("--timeout-ms", backend_args.timeout_ms, "Request timeout")->check(CLI::PositiveNumber);
    check->callback([&] { action = [&] { return run_backend_check(backend_args); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : exit_usage;
    }
    try {
        return action ? action() : exit_usage;
    } catch (const iqloc::TransportError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return exit_transport;
    } catch (const iqloc::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return exit_data;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_data;
    }
}
