class Broken {
    void f() {
        if (true) {
            return;
    }
