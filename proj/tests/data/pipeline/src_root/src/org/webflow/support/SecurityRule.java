package org.webflow.support;

public class SecurityRule {
    public void securityRule() {
        // security rule attribute authority match
        security.rule();
    }

    public void ruleAttribute() {
        // security rule attribute authority match
        rule.attribute();
    }

    public void attributeAuthority() {
        // security rule attribute authority match
        attribute.authority();
    }

}
