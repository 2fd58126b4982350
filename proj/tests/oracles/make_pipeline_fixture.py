"""Writes the 40-document localization fixture under tests/data/pipeline.

The corpus is built so that the report's repeated generic vocabulary
("flow", "execution", "listener") favours short distractor classes under
the raw report query, while the buggy class is the only one that talks
about snapshot removal.  The script checks the baseline rank with the
BM25 oracle and prints it.

Usage: python3 make_pipeline_fixture.py [out_dir]
"""
import json
import os
import sys

sys.path.insert(0, os.path.dirname(__file__))
import bm25_oracle  # noqa: E402

PROJECT, VERSION = "webflow", "2.4.1"

# Reformulated query the engine produces for SWF-1004 (lexical scorer,
# hashed 16-dim embeddings, defaults). Frozen here so the oracle can
# re-rank independently of the engine.
FINAL_QUERY = ["execution", "flow", "ends", "snapshots", "memory", "remains", "listener", "ended",
               "notified", "every", "snapshot", "keeps", "remain", "flowexecution",
               "remainsnapshotswhenexecutionends"]


def stopwords():
    import re
    here = os.path.dirname(__file__)
    with open(os.path.join(here, "..", "..", "include", "iqloc", "stopwords.hpp")) as f:
        text = f.read()
    block = text[text.index("to_array<std::string_view>("):]
    block = block[: block.index(");")]
    return set(re.findall(r'"([^"]*)"', block))

BUGGY_PATH = "src/org/webflow/snapshot/SnapshotRegistry.java"

BUGGY = """package org.webflow.snapshot;

import java.util.HashMap;
import java.util.Map;

public class SnapshotRegistry {
    private final Map<String, Object> entries = new HashMap<>();

    public void register(String key, Object value) {
        entries.put(key, value);
    }

    public Object lookup(String key) {
        return entries.get(key);
    }

    public int size() {
        return entries.size();
    }

    public void clearAll() {
        entries.clear();
    }

    public boolean containsKey(String key) {
        return entries.containsKey(key);
    }

    public void copyInto(Map<String, Object> target) {
        target.putAll(entries);
    }

    void remainSnapshotsWhenExecutionEnds(FlowExecution execution) {
        // every ended flow execution keeps snapshots in memory
        entries.remain(execution);
    }
}
"""

# Short classes dense in the report's generic words.
GENERIC = [
    ("FlowExecutionListener", "flow execution listener notified flow execution"),
    ("FlowExecutionListenerAdapter", "flow execution listener adapter flow execution notified"),
    ("FlowExecutionListenerLoader", "flow execution listener loader flow execution notified"),
    ("FlowExecutionListenerCriteria", "flow execution listener criteria flow notified"),
    ("FlowExecutionImpl", "flow execution impl listener flow execution notified"),
    ("FlowExecutionFactory", "flow execution factory listener flow execution notified"),
]

# Longer classes with unrelated vocabulary; a few mention flow once.
OTHER_TOPICS = [
    ("ViewResolver", "view resolver template render model"),
    ("ViewFactory", "view factory template create model"),
    ("MessageSource", "message source locale code resolve"),
    ("MessageContext", "message context add error info"),
    ("ConversionService", "conversion service converter type target"),
    ("ConverterRegistry", "converter registry add remove type"),
    ("ExpressionParser", "expression parser parse string context"),
    ("ExpressionEvaluator", "expression evaluator evaluate value context"),
    ("BindingModel", "binding model property value mapping"),
    ("PropertyMapper", "property mapper source target map"),
    ("SecurityRule", "security rule attribute authority match"),
    ("SecurityListener", "security listener authority check deny"),
    ("TransitionCriteria", "transition criteria event test match"),
    ("TransitionExecutor", "transition executor target state enter"),
    ("StateBuilder", "state builder action view end"),
    ("DecisionState", "decision state test branch choose"),
    ("ActionExecutor", "action executor invoke result event"),
    ("ActionResultExposer", "action result exposer scope value"),
    ("ScopeRegistrar", "scope registrar register scope type"),
    ("ConversationManager", "conversation manager begin lock id"),
    ("ConversationLock", "conversation lock acquire release timeout"),
    ("RequestContextHolder", "request context holder thread bind"),
    ("ExternalContext", "external context request response session"),
    ("MockExternalContext", "mock external context request parameter"),
    ("FlowDefinitionRegistry", "flow definition registry id locate"),
    ("FlowBuilderServices", "flow builder services view expression"),
    ("FlowModelHolder", "flow model holder resource refresh"),
    ("ResourceLoader", "resource loader path classpath load"),
    ("AttributeMap", "attribute map get put value"),
    ("MutableAttributeMap", "mutable attribute map put remove clear"),
    ("EventFactory", "event factory success error yes"),
    ("Validator", "validator validate errors model field"),
    ("TestCaseSupport", "test case support setup assert"),
]


def java_class(package, name, words, methods=3):
    body = [f"package org.webflow.{package};", "", f"public class {name} {{"]
    vocab = words.split()
    for m in range(methods):
        left = vocab[m % len(vocab)]
        right = vocab[(m + 1) % len(vocab)]
        mname = left + right.capitalize()
        body.append(f"    public void {mname}() {{")
        body.append(f"        // {words}")
        body.append(f"        {left}.{right}();")
        body.append("    }")
        body.append("")
    body.append("}")
    return "\n".join(body) + "\n"


def build():
    docs = {BUGGY_PATH: BUGGY}
    for name, words in GENERIC:
        docs[f"src/org/webflow/execution/{name}.java"] = java_class("execution", name, words, methods=1)
    for name, words in OTHER_TOPICS:
        docs[f"src/org/webflow/support/{name}.java"] = java_class("support", name, words)
    assert len(docs) == 40, len(docs)
    return docs


REPORTS = [
    {
        "id": "SWF-1004",
        "project": PROJECT,
        "version": VERSION,
        "title": "Flow execution snapshots remain after the flow execution ends",
        "description": ("When a flow execution ends the flow execution listener is notified, "
                        "but the flow execution snapshot remains. Every ended flow execution "
                        "keeps its snapshots in memory. The flow execution listener is notified "
                        "for each flow execution."),
        "created_at": "2010-03-14T09:26:53Z",
        "fixed_files": [BUGGY_PATH],
    },
    {
        "id": "SWF-1010",
        "project": PROJECT,
        "version": VERSION,
        "title": "Conversation lock not released after timeout",
        "description": "The conversation manager acquires a lock but never releases it when the timeout expires.",
        "created_at": "2010-04-02T11:00:00Z",
        "fixed_files": ["src/org/webflow/support/ConversationLock.java"],
    },
    {
        "id": "SWF-1022",
        "project": PROJECT,
        "version": VERSION,
        "title": "Expression parser fails on nested context",
        "description": "Parsing an expression string with a nested context value throws.",
        "created_at": "2010-05-20T16:45:00Z",
        "fixed_files": ["src/org/webflow/support/ExpressionParser.java"],
    },
]


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data", "pipeline")
    docs = build()
    for path, text in docs.items():
        full = os.path.join(out, "src_root", path)
        os.makedirs(os.path.dirname(full), exist_ok=True)
        with open(full, "w") as f:
            f.write(text)
    manifest = {"project": PROJECT, "version": VERSION, "root": "src_root", "files": sorted(docs)}
    with open(os.path.join(out, "corpus.json"), "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    with open(os.path.join(out, "reports.jsonl"), "w") as f:
        for r in REPORTS:
            f.write(json.dumps(r) + "\n")

    paths = sorted(docs)
    analyzed = [bm25_oracle.analyze(docs[p]) for p in paths]
    stop = stopwords()
    report = REPORTS[0]
    initial_query = [t for t in bm25_oracle.analyze(report["title"] + " " + report["description"]) if t not in stop]
    initial = bm25_oracle.rank(analyzed, paths, initial_query)
    baseline_rank = [p for _, p in initial].index(BUGGY_PATH) + 1
    # Rerank restricted to the initial hits; zero scores keep initial order.
    index_of = {p: i for i, p in enumerate(paths)}
    rescored = [(bm25_oracle.score(analyzed, FINAL_QUERY, index_of[p]), p) for _, p in initial]
    positive = sorted([x for x in rescored if x[0] > 0], key=lambda x: (-x[0], x[1]))
    final = [p for _, p in positive] + [p for sc, p in rescored if sc <= 0]
    final_rank = final.index(BUGGY_PATH) + 1
    expected = {
        "report_id": report["id"],
        "buggy_path": BUGGY_PATH,
        "initial_query": initial_query,
        "baseline_rank": baseline_rank,
        "final_query": FINAL_QUERY,
        "final_rank": final_rank,
        "baseline_top": [p for _, p in initial[:3]],
    }
    with open(os.path.join(out, "expected.json"), "w") as f:
        json.dump(expected, f, indent=2)
        f.write("\n")
    print(f"baseline rank {baseline_rank}, final rank {final_rank}")


if __name__ == "__main__":
    main()
