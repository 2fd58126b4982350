package beta;

public class Printer {
    void print(String s) {
        System.out.print(s);
    }

    void flush() {
        System.out.flush();
    }
}
