// Indexes a few in-memory documents and runs one query.
//
//   search_demo "snapshot removal"

#include <iostream>
#include <string>
#include <vector>

#include <iqloc/index.hpp>

int main(int argc, char** argv)
{
    const std::string text = argc > 1 ? argv[1] : "snapshot removal when execution ends";
    const std::vector<iqloc::SourceDocument> docs{
        iqloc::make_document("demo", "1.0", "src/SnapshotRegistry.java",
                             "class SnapshotRegistry { void removeSnapshot(String id) { snapshots.remove(id); } }"),
        iqloc::make_document("demo", "1.0", "src/FlowExecution.java",
                             "class FlowExecution { void end() { listener.executionEnded(this); } }"),
        iqloc::make_document("demo", "1.0", "src/ViewResolver.java",
                             "class ViewResolver { View resolve(String name) { return views.get(name); } }"),
    };
    const auto index = iqloc::build_index(docs);
    const auto query = iqloc::query_terms(text);
    for (const auto& hit : index.search(query, "demo", "1.0", 10).hits) {
        std::cout << hit.rank << "  " << hit.score << "  " << hit.path << "\n";
    }
}
