package org.webflow.execution;

public class FlowExecutionFactory {
    public void flowExecution() {
        // flow execution factory listener flow execution notified
        flow.execution();
    }

}
