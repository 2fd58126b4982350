// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <iqloc/iqloc.hpp>

#include "bm25_reference.hpp"
#include "metrics_reference.hpp"
#include "mmr_reference.hpp"
#include "test_support.hpp"

namespace {

using test_support::data_dir;

/// Collects the first few mismatches of a criterion.
class Check {
  public:
    void expect(bool ok, const std::string& what)
    {
        if (!ok) {
            ++failures_;
            if (messages_.size() < 5) {
                messages_.push_back(what);
            }
        }
    }
    void near(double got, double want, double tol, const std::string& what)
    {
        std::ostringstream s;
        s.precision(17);
        s << what << ": got " << got << ", want " << want << " (tol " << tol << ")";
        expect(std::abs(got - want) <= tol, s.str());
    }
    bool ok() const { return failures_ == 0; }
    std::size_t failures() const { return failures_; }
    const std::vector<std::string>& messages() const { return messages_; }

  private:
    std::size_t failures_ = 0;
    std::vector<std::string> messages_;
};

struct Criterion {
    int number;
    std::string title;
    double limit_s;  // 0 means no runtime limit
    std::function<void(Check&)> body;
};

// ---------------------------------------------------------------- 1

void bm25_oracle(Check& c)
{
    std::mt19937_64 rng(1);
    const std::vector<std::string> vocab{"flow",  "snapshot", "execution", "view",  "state", "lock",  "cache",
                                         "error", "null",     "parse",     "token", "event", "queue", "render"};
    for (int trial = 0; trial < 200; ++trial) {
        const auto n_docs = 1 + rng() % 50;
        std::vector<iqloc::SourceDocument> docs;
        std::vector<std::vector<std::string>> tokenized;
        for (std::size_t d = 0; d < n_docs; ++d) {
            std::string text;
            const auto len = 1 + rng() % 40;
            for (std::size_t i = 0; i < len; ++i) {
                text += vocab[rng() % vocab.size()] + " ";
            }
            docs.push_back(iqloc::make_document("P", "1", "f" + std::to_string(1000 + d) + ".txt", text));
            tokenized.push_back(iqloc::analyze_terms(text));
        }
        const auto index = iqloc::build_index(docs);
        std::vector<std::string> query;
        const auto qlen = 1 + rng() % 10;
        for (std::size_t i = 0; i < qlen; ++i) {
            query.push_back(vocab[rng() % vocab.size()]);
        }
        for (std::size_t d = 0; d < n_docs; ++d) {
            c.near(index.score(query, static_cast<std::uint32_t>(d)), test_support::brute_bm25(tokenized, query, d),
                   1e-9, "trial " + std::to_string(trial) + " doc " + std::to_string(d));
        }
        // The ranked list agrees with the same brute-force scores.
        const auto ranked = index.search(query, "P", "1", n_docs);
        for (const auto& h : ranked.hits) {
            const auto d = std::stoul(h.path.substr(1, 4)) - 1000;
            c.near(h.score, test_support::brute_bm25(tokenized, query, d), 1e-9, "ranked " + h.path);
        }
    }
}

// ---------------------------------------------------------------- 2

void mmr_oracle(Check& c)
{
    {
        const std::vector<std::string> candidates{"a", "b", "c"};
        const std::vector<iqloc::Vector> vectors{{1.0, 0.0}, {0.0, 1.0}, {0.6, 0.8}};
        const auto got = iqloc::mmr_select(candidates, vectors, std::vector<double>{0.707, 0.707}, 2, 0.5).terms();
        c.expect(got == std::vector<std::string>{"c", "a"}, "worked 2-D example is not [c, a]");
    }
    std::mt19937_64 rng(2);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::vector<std::string> pool{"alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel"};
    const std::array lambdas{0.0, 0.25, 0.5, 0.75, 1.0};
    for (int trial = 0; trial < 500; ++trial) {
        const auto count = 1 + rng() % 8;
        std::map<std::string, iqloc::Vector> table;
        std::vector<std::string> candidates;
        std::vector<iqloc::Vector> vectors;
        std::string doc;
        auto words = pool;
        std::shuffle(words.begin(), words.end(), rng);
        for (std::size_t i = 0; i < count; ++i) {
            iqloc::Vector v(16);
            for (auto& x : v) {
                x = gauss(rng);
            }
            table[words[i]] = v;
            candidates.push_back(words[i]);
            vectors.push_back(v);
            doc += words[i] + " ";
        }
        iqloc::Vector doc_vec(16);
        for (auto& x : doc_vec) {
            x = gauss(rng);
        }
        const double lambda = lambdas[static_cast<std::size_t>(trial) % lambdas.size()];
        const auto n = 1 + rng() % 8;
        const auto want = test_support::reference_mmr(table, doc_vec, n, lambda);
        const auto tag = "trial " + std::to_string(trial);
        c.expect(iqloc::mmr_select(candidates, vectors, doc_vec, n, lambda).terms() == want, tag + " (core)");
        auto full = table;
        full[doc] = doc_vec;
        const iqloc::TableEmbedding embedding(16, full);
        c.expect(iqloc::extract_keywords({doc, n, lambda}, embedding).terms() == want, tag + " (extract)");
    }
}

// ---------------------------------------------------------------- 3

void metric_oracle(Check& c)
{
    const std::vector<std::string> five{"d1", "d2", "d3", "d4", "d5"};
    c.near(iqloc::average_precision({"q", five, {"d1", "d3"}}, 5), 5.0 / 6.0, 1e-12, "AP worked example");
    const std::vector<iqloc::EvalRecord> rr{{"q1", five, {"d2"}}, {"q2", five, {"d4"}}};
    c.near(iqloc::mean_reciprocal_rank(rr), 0.375, 1e-12, "MRR worked example");
    const std::vector<iqloc::EvalRecord> hits{{"q1", five, {"d5"}}, {"q2", five, {"d1"}}, {"q3", five, {"zz"}}};
    c.near(iqloc::hit_at_k(hits, 5), 2.0 / 3.0, 1e-12, "HIT@5 worked example");

    std::mt19937_64 rng(3);
    std::vector<iqloc::EvalRecord> records;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto universe = 1 + rng() % 40;
        std::vector<std::string> docs;
        for (std::size_t i = 0; i < universe; ++i) {
            docs.push_back("doc" + std::to_string(i));
        }
        std::shuffle(docs.begin(), docs.end(), rng);
        std::vector<std::string> ranked(docs.begin(), docs.begin() + static_cast<long>(rng() % (universe + 1)));
        std::shuffle(docs.begin(), docs.end(), rng);
        std::set<std::string> truth(docs.begin(), docs.begin() + static_cast<long>(1 + rng() % universe));
        records.push_back({"q" + std::to_string(trial), ranked, truth});
    }
    for (std::size_t k : {1, 5, 10, 20, 1000}) {
        double map = 0, hit = 0, prec = 0;
        for (const auto& r : records) {
            map += test_support::brute_ap(r.ranked, r.truth, k);
            bool any = false;
            double found = 0;
            for (std::size_t i = 0; i < std::min(k, r.ranked.size()); ++i) {
                if (r.truth.contains(r.ranked[i])) {
                    any = true;
                    found += 1;
                }
            }
            hit += any ? 1 : 0;
            prec += found / static_cast<double>(k);
        }
        const auto n = static_cast<double>(records.size());
        const auto ks = std::to_string(k);
        c.near(iqloc::mean_average_precision(records, k), map / n, 1e-12, "MAP@" + ks);
        c.near(iqloc::hit_at_k(records, k), hit / n, 1e-12, "HIT@" + ks);
        c.near(iqloc::precision_at_k(records, k), prec / n, 1e-12, "P@" + ks);
    }
    double mrr = 0;
    for (const auto& r : records) {
        const double got = iqloc::reciprocal_rank(r);
        c.near(got, test_support::brute_rr(r.ranked, r.truth), 1e-12, "RR " + r.query_id);
        mrr += test_support::brute_rr(r.ranked, r.truth);
    }
    c.near(iqloc::mean_reciprocal_rank(records), mrr / static_cast<double>(records.size()), 1e-12, "MRR");
}

// ---------------------------------------------------------------- 4

void threshold_endpoints(Check& c)
{
    const auto reports = iqloc::load_reports(data_dir() / "dataset/reports.jsonl");
    const auto corpus = iqloc::load_corpus(data_dir() / "dataset/corpus.json");
    const auto diffs = iqloc::load_diffs(data_dir() / "dataset/diffs", reports);
    const iqloc::LexicalScorer scorer;
    for (std::uint64_t seed : {0, 1, 2}) {
        const auto build = iqloc::build_pairs(reports, diffs, corpus.documents, 4, seed);
        c.expect(build.negatives == 4 * build.positives, "pairs are not 4:1");
        std::vector<iqloc::ScorePair> inputs;
        for (const auto& p : build.pairs) {
            inputs.push_back({p.context, p.candidate});
        }
        const auto scores = scorer.score_batch(inputs);
        std::vector<iqloc::LabeledScore> labeled;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            labeled.push_back({scores[i], build.pairs[i].label});
        }
        const auto s = " (seed " + std::to_string(seed) + ")";
        const auto at0 = iqloc::confusion_metrics(labeled, 0.0);
        const auto at1 = iqloc::confusion_metrics(labeled, 1.0);
        c.expect(at0.recall == 1.0, "recall at threshold 0 is not 1" + s);
        c.expect(at1.recall == 0.0, "recall at threshold 1 is not 0" + s);
        c.near(at1.accuracy, 0.800, 0.001, "accuracy at threshold 1" + s);
    }
}

// ---------------------------------------------------------------- 5

std::size_t rank_of(const iqloc::RankedList& list, const std::string& path)
{
    for (const auto& h : list.hits) {
        if (h.path == path) {
            return h.rank;
        }
    }
    return 0;
}

void pipeline_improvement(Check& c)
{
    const auto expected = nlohmann::json::parse(test_support::slurp(data_dir() / "pipeline/expected.json"));
    const auto bundle = iqloc::make_bundle(iqloc::load_corpus(data_dir() / "pipeline/corpus.json").documents);
    c.expect(bundle.documents.size() == 40, "fixture corpus does not hold 40 documents");
    const auto reports = iqloc::load_reports(data_dir() / "pipeline/reports.jsonl");
    const auto& report = reports.front();
    const auto buggy = expected["buggy_path"].get<std::string>();

    iqloc::PipelineConfig config;  // lexical scorer, N = 15, λ = 0.5, τ = 0.5, K = 100
    config.embedding_backend = "hashed";
    config.embedding_dimension = 16;
    const auto backends = iqloc::make_backends(config, bundle);
    const auto base = iqloc::localize(report, bundle, config, backends.view(), true);
    const auto full = iqloc::localize(report, bundle, config, backends.view());
    const auto base_rank = rank_of(base.final_ranking, buggy);
    const auto full_rank = rank_of(full.final_ranking, buggy);
    std::cout << "    baseline rank " << base_rank << ", full rank " << full_rank << "\n";
    c.expect(base_rank > 3, "buggy document is inside the baseline top 3");
    c.expect(full_rank != 0 && full_rank < base_rank, "full pipeline does not improve on the baseline");
    c.expect(full_rank == 1, "full pipeline does not rank the buggy document first");
    c.expect(base_rank == expected["baseline_rank"].get<std::size_t>(), "baseline rank differs from the frozen value");
    c.expect(full.query.term_strings() == expected["final_query"].get<std::vector<std::string>>(),
             "reformulated query differs from the frozen value");

    // Baseline rank recomputed by brute-force BM25 over the whole scope.
    std::vector<std::vector<std::string>> tokenized;
    for (const auto& d : bundle.documents) {
        tokenized.push_back(iqloc::analyze_terms(d.content));
    }
    const auto query = iqloc::query_terms(report.text());
    std::vector<std::pair<double, std::string>> scored;
    for (std::size_t d = 0; d < bundle.documents.size(); ++d) {
        scored.emplace_back(test_support::brute_bm25(tokenized, query, d), bundle.documents[d].path);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::size_t oracle_rank = 0;
    for (std::size_t i = 0; i < scored.size(); ++i) {
        if (scored[i].second == buggy) {
            oracle_rank = i + 1;
        }
    }
    c.expect(oracle_rank == base_rank, "BM25 oracle disagrees with the baseline rank");
}

// ---------------------------------------------------------------- 6

nlohmann::json strip_timings(nlohmann::json j)
{
    if (j.is_object()) {
        j.erase("timings_ms");
        for (auto& [k, v] : j.items()) {
            v = strip_timings(v);
        }
    } else if (j.is_array()) {
        for (auto& v : j) {
            v = strip_timings(v);
        }
    }
    return j;
}

std::string normalized(const std::string& jsonl)
{
    std::istringstream in(jsonl);
    std::string line, out;
    while (std::getline(in, line)) {
        out += strip_timings(nlohmann::json::parse(line)).dump() + "\n";
    }
    return out;
}

void determinism(Check& c)
{
    test_support::TempDir dir;
    test_support::write_file(dir / "config.json", R"({"embedding": {"backend": "hashed", "dimension": 16}})");
    const auto base = test_support::quote(IQLOC_CLI) + " localize --config " + test_support::quote(dir / "config.json")
                      + " --reports " + test_support::quote(data_dir() / "pipeline/reports.jsonl") + " --corpus "
                      + test_support::quote(data_dir() / "pipeline/corpus.json") + " --cache-dir "
                      + test_support::quote(dir / "cache") + " --explain";
    std::vector<std::string> outputs;
    for (const char* threads : {"1", "1", "8", "8"}) {
        const auto r = test_support::run(base + " --threads " + threads);
        c.expect(r.exit_code == 0, std::string("localize failed at --threads ") + threads);
        c.expect(!r.out.empty(), "localize produced no output");
        outputs.push_back(r.out);
    }
    for (std::size_t i = 1; i < outputs.size(); ++i) {
        c.expect(outputs[i] == outputs[0], "run " + std::to_string(i) + " differs byte-wise from run 0");
        c.expect(normalized(outputs[i]) == normalized(outputs[0]), "run " + std::to_string(i) + " differs");
    }
}

// ---------------------------------------------------------------- 7

iqloc::BugReport dated(std::string id, std::string project, int day)
{
    iqloc::BugReport r;
    r.id = std::move(id);
    r.project = std::move(project);
    r.version = "1";
    r.title = "t";
    r.created_at = "2021-03-" + std::string(day < 10 ? "0" : "") + std::to_string(day) + "T00:00:00Z";
    r.created_time = iqloc::parse_timestamp(r.created_at);
    return r;
}

void dataset_contracts(Check& c)
{
    const auto reports = iqloc::load_reports(data_dir() / "dataset/reports.jsonl");
    const auto corpus = iqloc::load_corpus(data_dir() / "dataset/corpus.json");
    const auto diffs = iqloc::load_diffs(data_dir() / "dataset/diffs", reports);
    const auto build = iqloc::build_pairs(reports, diffs, corpus.documents, 4, 0, 4);
    c.expect(build.positives == 5 && build.pairs.size() == 25, "fixture pair counts differ from 5 positives / 25 pairs");
    for (std::size_t i = 0; i < build.pairs.size(); i += 5) {
        c.expect(build.pairs[i].label == 1, "pair block does not start with a positive");
        for (std::size_t k = 1; k < 5 && i + k < build.pairs.size(); ++k) {
            const auto& p = build.pairs[i + k];
            c.expect(p.label == 0, "positive without exactly 4 negatives");
            c.expect(p.source_project != p.report_project, "negative from the report's own system");
        }
    }

    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<iqloc::BugReport> list;
        const auto n = 1 + rng() % 40;
        for (std::size_t i = 0; i < n; ++i) {
            list.push_back(dated("R-" + std::to_string(i), rng() % 2 ? "p" : "q", 1 + static_cast<int>(rng() % 28)));
        }
        for (auto mode : {iqloc::SplitMode::random, iqloc::SplitMode::timewise}) {
            iqloc::SplitSpec spec;
            spec.mode = mode;
            spec.seed = static_cast<std::uint64_t>(trial);
            const auto s = iqloc::split_reports(list, spec);
            std::multiset<std::string> all(s.train.begin(), s.train.end());
            all.insert(s.validation.begin(), s.validation.end());
            all.insert(s.test.begin(), s.test.end());
            c.expect(all.size() == n && std::set<std::string>(all.begin(), all.end()).size() == n,
                     "split is not a partition");
            if (mode != iqloc::SplitMode::timewise) {
                continue;
            }
            std::map<std::string, const iqloc::BugReport*> by_id;
            for (const auto& r : list) {
                by_id[r.id] = &r;
            }
            const auto before = [&](const std::vector<std::string>& early, const std::vector<std::string>& late) {
                for (const auto& a : early) {
                    for (const auto& b : late) {
                        const auto *ra = by_id[a], *rb = by_id[b];
                        if (ra->project == rb->project && ra->created_time > rb->created_time) {
                            return false;
                        }
                    }
                }
                return true;
            };
            c.expect(before(s.train, s.validation) && before(s.train, s.test) && before(s.validation, s.test),
                     "timewise split breaks per-system date order");
        }
    }

    const auto with = [](std::string description) {
        iqloc::BugReport r;
        r.id = "X";
        r.title = "Failure in SnapshotRegistry.removeSnapshot";
        r.description = std::move(description);
        return r;
    };
    c.expect(iqloc::classify_report(with("java.lang.IllegalStateException: gone\n\tat org.x.SnapshotRegistry.remove"
                                         "Snapshot(SnapshotRegistry.java:88)"))
                 == iqloc::ReportClass::ST,
             "ST + PE report not classified ST");
    c.expect(iqloc::classify_report(with("Calling removeSnapshot twice fails.")) == iqloc::ReportClass::PE,
             "PE report not classified PE");
    iqloc::BugReport plain;
    plain.id = "Y";
    plain.title = "Page is blank";
    plain.description = "Nothing shows after login.";
    c.expect(iqloc::classify_report(plain) == iqloc::ReportClass::NL, "NL report not classified NL");
}

// ---------------------------------------------------------------- 8

void statistics(Check& c)
{
    const std::vector<double> base{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    std::vector<double> treat;
    for (std::size_t i = 0; i < base.size(); ++i) {
        treat.push_back(base[i] + 0.01 * static_cast<double>(i + 1));
    }
    const auto w = iqloc::wilcoxon_signed_rank(base, treat);
    c.expect(w.exact, "n = 6 did not use the exact distribution");
    c.near(w.p_value, 1.0 / 64.0, 1e-15, "all-negative n = 6 p-value");

    const std::vector<double> x{1, 2, 3}, y{4, 5, 6};
    c.expect(iqloc::cliffs_delta(x, x).delta == 0.0, "delta(x, x) != 0");
    c.expect(iqloc::cliffs_delta(y, x).delta == 1.0, "delta of dominating sample != 1");
    c.expect(iqloc::cliffs_delta(x, y).delta == -1.0, "delta of dominated sample != -1");

    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> value(0, 5);
    int compared = 0;
    while (compared < 300) {
        const auto n = 5 + rng() % 8;
        std::vector<double> a, b;
        for (std::size_t i = 0; i < n; ++i) {
            a.push_back(value(rng));
            b.push_back(value(rng));
        }
        std::size_t nonzero = 0;
        for (std::size_t i = 0; i < n; ++i) {
            nonzero += a[i] != b[i];
        }
        if (nonzero < 5) {
            continue;
        }
        ++compared;
        c.near(iqloc::wilcoxon_signed_rank(a, b).p_value, test_support::enumerate_signed_rank_p(a, b), 1e-12,
               "exact vs enumeration, n = " + std::to_string(n));
    }
}

}  // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {1, "BM25 oracle equivalence (200 corpora, 1e-9)", 10.0, bm25_oracle},
        {2, "keyword selection oracle equivalence (500 instances + worked example)", 5.0, mmr_oracle},
        {3, "metric oracle equivalence (1000 records, 1e-12)", 0.0, metric_oracle},
        {4, "threshold endpoints on lexical fixture pairs", 0.0, threshold_endpoints},
        {5, "pipeline improvement on the seeded fixture", 30.0, pipeline_improvement},
        {6, "determinism across runs and thread counts", 0.0, determinism},
        {7, "dataset contracts", 0.0, dataset_contracts},
        {8, "statistics", 0.0, statistics},
    };
    int failed = 0;
    for (const auto& criterion : criteria) {
        Check check;
        const auto start = std::chrono::steady_clock::now();
        try {
            criterion.body(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (criterion.limit_s > 0 && seconds >= criterion.limit_s) {
            check.expect(false, "runtime " + std::to_string(seconds) + " s exceeds " +
                                    std::to_string(criterion.limit_s) + " s");
        }
        std::cout << (check.ok() ? "PASS" : "FAIL") << " criterion " << criterion.number << ": " << criterion.title
                  << " (" << std::fixed << std::setprecision(3) << seconds << " s)\n";
        for (const auto& m : check.messages()) {
            std::cout << "    " << m << "\n";
        }
        if (!check.ok()) {
            std::cout << "    " << check.failures() << " check(s) failed\n";
            ++failed;
        }
    }
    return failed == 0 ? 0 : 1;
}
