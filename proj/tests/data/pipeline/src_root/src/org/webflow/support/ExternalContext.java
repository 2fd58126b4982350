package org.webflow.support;

public class ExternalContext {
    public void externalContext() {
        // external context request response session
        external.context();
    }

    public void contextRequest() {
        // external context request response session
        context.request();
    }

    public void requestResponse() {
        // external context request response session
        request.response();
    }

}
