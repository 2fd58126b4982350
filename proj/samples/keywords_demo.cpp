// Prints MMR keywords of a text with the hashed embedding.
//
//   keywords_demo "text" [n] [lambda]

#include <iostream>
#include <string>

#include <iqloc/embedding.hpp>
#include <iqloc/keywords.hpp>

int main(int argc, char** argv)
{
    iqloc::KeywordRequest req;
    req.doc = argc > 1 ? argv[1]
                       : "Flow execution snapshots remain in memory after the flow execution ends; "
                         "the SnapshotRegistry never removes them.";
    req.n = argc > 2 ? std::stoul(argv[2]) : 5;
    req.lambda = argc > 3 ? std::stod(argv[3]) : 0.5;
    const iqloc::HashedEmbedding embedding(64);
    for (const auto& k : iqloc::extract_keywords(req, embedding).keywords) {
        std::cout << k.round << "  " << k.term << "  mmr=" << k.mmr << "\n";
    }
}
