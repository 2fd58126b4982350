package org.webflow.support;

public class SecurityListener {
    public void securityListener() {
        // security listener authority check deny
        security.listener();
    }

    public void listenerAuthority() {
        // security listener authority check deny
        listener.authority();
    }

    public void authorityCheck() {
        // security listener authority check deny
        authority.check();
    }

}
