package org.webflow.support;

public class ResourceLoader {
    public void resourceLoader() {
        // resource loader path classpath load
        resource.loader();
    }

    public void loaderPath() {
        // resource loader path classpath load
        loader.path();
    }

    public void pathClasspath() {
        // resource loader path classpath load
        path.classpath();
    }

}
