package org.webflow.support;

public class MutableAttributeMap {
    public void mutableAttribute() {
        // mutable attribute map put remove clear
        mutable.attribute();
    }

    public void attributeMap() {
        // mutable attribute map put remove clear
        attribute.map();
    }

    public void mapPut() {
        // mutable attribute map put remove clear
        map.put();
    }

}
