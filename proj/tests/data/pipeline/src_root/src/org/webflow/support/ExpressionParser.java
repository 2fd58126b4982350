package org.webflow.support;

public class ExpressionParser {
    public void expressionParser() {
        // expression parser parse string context
        expression.parser();
    }

    public void parserParse() {
        // expression parser parse string context
        parser.parse();
    }

    public void parseString() {
        // expression parser parse string context
        parse.string();
    }

}
