package org.webflow.snapshot;

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
