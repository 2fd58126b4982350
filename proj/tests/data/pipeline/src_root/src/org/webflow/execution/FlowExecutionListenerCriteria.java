package org.webflow.execution;

public class FlowExecutionListenerCriteria {
    public void flowExecution() {
        // flow execution listener criteria flow notified
        flow.execution();
    }

}
