#pragma once

// Literal step-by-step greedy MMR selection: candidate set C, selected list
// K, every round recomputes s_k as the max over K. Uses its own cosine so
// it shares no arithmetic helpers with the engine.

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace test_support {

inline double reference_cosine(const std::vector<double>& u, const std::vector<double>& v)
{
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

inline std::vector<std::string> reference_mmr(const std::map<std::string, std::vector<double>>& embeddings,
                                              const std::vector<double>& doc, std::size_t n, double lambda)
{
    std::set<std::string> candidates;
    for (const auto& [term, v] : embeddings) {
        candidates.insert(term);
    }
    std::vector<std::string> selected;
    while (selected.size() < n && !candidates.empty()) {
        std::string best;
        double best_score = 0.0;
        bool first = true;
        for (const auto& t : candidates) {  // ascending, so strict > keeps the smallest on ties
            const double s_d = reference_cosine(embeddings.at(t), doc);
            double s_k = 0.0;
            for (std::size_t k = 0; k < selected.size(); ++k) {
                const double c = reference_cosine(embeddings.at(t), embeddings.at(selected[k]));
                s_k = k == 0 ? c : std::max(s_k, c);
            }
            const double score = lambda * s_d - (1.0 - lambda) * s_k;
            if (first || score > best_score) {
                best = t;
                best_score = score;
                first = false;
            }
        }
        selected.push_back(best);
        candidates.erase(best);
    }
    return selected;
}

}  // namespace test_support
