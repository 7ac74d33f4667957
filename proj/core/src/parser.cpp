#include "mlaqp/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>

namespace mlaqp {

namespace {

enum class Tok { ident, number, str, symbol, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;   // uppercased for idents when matching keywords
    std::string raw;    // original spelling
    double num = 0.0;
    std::size_t pos = 0;
};

struct Lexer {
    const std::string& src;
    std::size_t i = 0;

    explicit Lexer(const std::string& s) : src(s) {}

    Token next() {
        while (i < src.size() && std::isspace(static_cast<unsigned char>(src[i]))) ++i;
        Token t;
        t.pos = i;
        if (i >= src.size()) return t;
        char c = src[i];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = i;
            while (i < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_' || src[i] == '.'))
                ++i;
            t.kind = Tok::ident;
            t.raw = src.substr(start, i - start);
            t.text = t.raw;
            std::transform(t.text.begin(), t.text.end(), t.text.begin(),
                           [](unsigned char ch) { return std::toupper(ch); });
            return t;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' ||
            ((c == '-' || c == '+') && i + 1 < src.size() &&
             (std::isdigit(static_cast<unsigned char>(src[i + 1])) || src[i + 1] == '.'))) {
            std::size_t start = i;
            if (c == '-' || c == '+') ++i;
            while (i < src.size() &&
                   (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '.' ||
                    src[i] == 'e' || src[i] == 'E' ||
                    ((src[i] == '-' || src[i] == '+') &&
                     (src[i - 1] == 'e' || src[i - 1] == 'E'))))
                ++i;
            t.kind = Tok::number;
            t.raw = src.substr(start, i - start);
            const char* b = t.raw.data();
            auto [p, ec] = std::from_chars(b, b + t.raw.size(), t.num);
            if (ec != std::errc{} || p != b + t.raw.size())
                throw parse_error(ParseErrorKind::syntax, start, "malformed number '" + t.raw + "'");
            return t;
        }
        if (c == '\'') {
            std::size_t start = ++i;
            while (i < src.size() && src[i] != '\'') ++i;
            if (i >= src.size())
                throw parse_error(ParseErrorKind::syntax, start - 1, "unterminated string literal");
            t.kind = Tok::str;
            t.raw = src.substr(start, i - start);
            t.text = t.raw;
            ++i;
            return t;
        }
        // multi-char operators first
        static const char* two[] = {">=", "<=", "<>", "!="};
        for (const char* op : two) {
            if (src.compare(i, 2, op) == 0) {
                t.kind = Tok::symbol;
                t.text = op;
                i += 2;
                return t;
            }
        }
        if (std::string("()*,=<>;").find(c) != std::string::npos) {
            t.kind = Tok::symbol;
            t.text = std::string(1, c);
            ++i;
            return t;
        }
        throw parse_error(ParseErrorKind::syntax, i, std::string("unexpected character '") + c + "'");
    }
};

struct Parser {
    const DatasetSchema& schema;
    std::vector<Token> toks;
    std::size_t cur = 0;
    ParsedQuery out;
    // merged bounds per attribute, in first-seen order
    std::vector<std::string> pred_order;
    std::map<std::string, Predicate> pred_map;

    Parser(const std::string& sql, const DatasetSchema& s) : schema(s) {
        Lexer lex(sql);
        for (;;) {
            Token t = lex.next();
            bool end = t.kind == Tok::end;
            toks.push_back(std::move(t));
            if (end) break;
        }
    }

    const Token& peek() const { return toks[cur]; }
    const Token& advance() { return toks[cur++]; }

    bool accept_kw(const std::string& kw) {
        if (peek().kind == Tok::ident && peek().text == kw) {
            ++cur;
            return true;
        }
        return false;
    }
    bool accept_sym(const std::string& s) {
        if (peek().kind == Tok::symbol && peek().text == s) {
            ++cur;
            return true;
        }
        return false;
    }
    void expect_kw(const std::string& kw) {
        if (!accept_kw(kw))
            throw parse_error(ParseErrorKind::syntax, peek().pos, "expected " + kw);
    }
    void expect_sym(const std::string& s) {
        if (!accept_sym(s))
            throw parse_error(ParseErrorKind::syntax, peek().pos, "expected '" + s + "'");
    }

    std::string expect_attr() {
        if (peek().kind != Tok::ident)
            throw parse_error(ParseErrorKind::syntax, peek().pos, "expected attribute name");
        const Token& t = advance();
        std::string name = unqualify(t.raw);
        if (!schema.index_of(name))
            throw parse_error(ParseErrorKind::unknown_identifier, t.pos,
                              "unknown attribute '" + name + "'");
        return name;
    }

    static std::string unqualify(const std::string& name) {
        auto dot = name.rfind('.');
        return dot == std::string::npos ? name : name.substr(dot + 1);
    }

    bool looks_like_attr(const Token& t) const {
        return t.kind == Tok::ident && schema.index_of(unqualify(t.raw)).has_value();
    }

    ParsedQuery run() {
        expect_kw("SELECT");
        parse_aggregates();
        expect_kw("FROM");
        parse_from();
        if (accept_kw("WHERE")) parse_conjunction();
        if (accept_kw("GROUP")) {
            expect_kw("BY");
            parse_group_by();
        }
        accept_sym(";");
        if (peek().kind != Tok::end)
            throw parse_error(ParseErrorKind::syntax, peek().pos, "trailing input");
        for (const auto& a : pred_order) out.predicates.push_back(pred_map[a]);
        return std::move(out);
    }

    void parse_aggregates() {
        do {
            if (peek().kind != Tok::ident)
                throw parse_error(ParseErrorKind::syntax, peek().pos, "expected aggregate function");
            const Token& fn_tok = advance();
            auto fn = agg_fn_from_string(fn_tok.text);
            if (!fn) {
                // a reserved keyword here means the select list itself is malformed
                for (const char* kw : {"FROM", "WHERE", "GROUP", "BY", "AND", "OR", "NOT",
                                       "SELECT", "BETWEEN", "LIKE", "JOIN", "INNER", "ON"})
                    if (fn_tok.text == kw)
                        throw parse_error(ParseErrorKind::syntax, fn_tok.pos,
                                          "expected aggregate function before '" + fn_tok.raw +
                                              "'");
                // a bare attribute in the SELECT list is fine when grouped on it
                std::string name = unqualify(fn_tok.raw);
                if (schema.index_of(name)) continue;
                throw parse_error(ParseErrorKind::unsupported_feature, fn_tok.pos,
                                  "unsupported select item '" + fn_tok.raw + "'");
            }
            expect_sym("(");
            AggregateSpec spec;
            spec.function = *fn;
            if (accept_sym("*")) {
                if (*fn != AggFn::count)
                    throw parse_error(ParseErrorKind::syntax, peek().pos,
                                      to_string(*fn) + "(*) is not valid");
            } else {
                std::string attr = expect_attr();
                if (*fn != AggFn::count) spec.target_attribute = attr;
                // COUNT(attr) is treated as row count, same as COUNT(*)
            }
            expect_sym(")");
            out.aggregates.push_back(spec);
        } while (accept_sym(","));
        if (out.aggregates.empty())
            throw parse_error(ParseErrorKind::syntax, peek().pos, "no aggregates in SELECT list");
    }

    void parse_from() {
        if (peek().kind != Tok::ident)
            throw parse_error(ParseErrorKind::syntax, peek().pos, "expected table name");
        out.table = advance().raw;
        // comma-joins and INNER JOIN ... ON a = b over a pre-joined star schema:
        // accepted syntactically, no effect on the meta-vector
        for (;;) {
            if (accept_sym(",")) {
                if (peek().kind != Tok::ident)
                    throw parse_error(ParseErrorKind::syntax, peek().pos, "expected table name");
                advance();
                continue;
            }
            bool inner = false;
            std::size_t save = cur;
            if (accept_kw("INNER")) inner = true;
            if (accept_kw("JOIN")) {
                if (peek().kind != Tok::ident)
                    throw parse_error(ParseErrorKind::syntax, peek().pos, "expected table name");
                advance();
                expect_kw("ON");
                if (peek().kind != Tok::ident)
                    throw parse_error(ParseErrorKind::syntax, peek().pos, "expected join column");
                advance();
                expect_sym("=");
                if (peek().kind != Tok::ident)
                    throw parse_error(ParseErrorKind::syntax, peek().pos, "expected join column");
                advance();
                continue;
            }
            if (inner) cur = save;
            break;
        }
    }

    void merge_bound(const std::string& attr, std::optional<double> lb,
                     std::optional<double> ub, std::size_t pos) {
        auto it = pred_map.find(attr);
        if (it == pred_map.end()) {
            pred_order.push_back(attr);
            pred_map[attr] = Predicate{attr, lb, ub};
            return;
        }
        Predicate& p = it->second;
        if (lb) p.lb = p.lb ? std::max(*p.lb, *lb) : *lb;
        if (ub) p.ub = p.ub ? std::min(*p.ub, *ub) : *ub;
        if (p.lb && p.ub && *p.lb > *p.ub)
            throw parse_error(ParseErrorKind::syntax, pos,
                              "contradictory bounds on '" + attr + "'");
    }

    void parse_conjunction() {
        parse_condition();
        for (;;) {
            if (accept_kw("AND")) {
                parse_condition();
                continue;
            }
            if (peek().kind == Tok::ident && (peek().text == "OR" || peek().text == "NOT"))
                throw parse_error(ParseErrorKind::unsupported_feature, peek().pos,
                                  peek().text + " is not supported");
            break;
        }
    }

    void parse_condition() {
        if (peek().kind == Tok::ident && peek().text == "NOT")
            throw parse_error(ParseErrorKind::unsupported_feature, peek().pos, "NOT is not supported");
        if (peek().kind == Tok::symbol && peek().text == "(")
            throw parse_error(ParseErrorKind::unsupported_feature, peek().pos,
                              "parenthesized conditions are not supported");
        if (peek().kind == Tok::number) {
            // reversed comparison: <value> <op> <attr>
            double v = advance().num;
            std::string op = expect_cmp();
            std::size_t pos = peek().pos;
            std::string attr = expect_attr();
            apply_cmp(attr, flip(op), v, pos);
            return;
        }
        std::size_t attr_pos = peek().pos;
        std::string attr = expect_attr();
        if (accept_kw("BETWEEN")) {
            double lo = expect_number();
            expect_kw("AND");
            double hi = expect_number();
            if (lo > hi)
                throw parse_error(ParseErrorKind::syntax, attr_pos, "BETWEEN bounds inverted");
            merge_bound(attr, lo, hi, attr_pos);
            return;
        }
        if (accept_kw("LIKE")) {
            if (peek().kind != Tok::str)
                throw parse_error(ParseErrorKind::syntax, peek().pos, "LIKE expects a string literal");
            out.like_patterns.emplace_back(attr, advance().raw);
            return;
        }
        std::string op = expect_cmp();
        if (peek().kind == Tok::str) {
            if (op != "=")
                throw parse_error(ParseErrorKind::unsupported_feature, peek().pos,
                                  "only equality is supported for string literals");
            out.categorical_equalities.emplace_back(attr, advance().raw);
            return;
        }
        if (op == "=" && looks_like_attr(peek())) {
            // equi-join between two attributes of the pre-joined schema: ignored
            advance();
            return;
        }
        double v = expect_number();
        bool categorical = false;
        if (auto idx = schema.index_of(attr))
            categorical = schema.at(*idx).kind == AttrKind::categorical;
        if (op == "=" && categorical) {
            out.categorical_equalities.emplace_back(attr, numeric_literal_text());
            return;
        }
        apply_cmp(attr, op, v, attr_pos);
    }

    // raw text of the number token just consumed, for categorical equality
    std::string numeric_literal_text() const { return toks[cur - 1].raw; }

    std::string expect_cmp() {
        if (peek().kind == Tok::symbol) {
            std::string s = peek().text;
            if (s == ">" || s == "<" || s == ">=" || s == "<=" || s == "=") {
                ++cur;
                return s;
            }
            if (s == "<>" || s == "!=")
                throw parse_error(ParseErrorKind::unsupported_feature, peek().pos,
                                  "inequality predicates are not supported");
        }
        throw parse_error(ParseErrorKind::syntax, peek().pos, "expected comparison operator");
    }

    static std::string flip(const std::string& op) {
        if (op == ">") return "<";
        if (op == "<") return ">";
        if (op == ">=") return "<=";
        if (op == "<=") return ">=";
        return op;
    }

    double expect_number() {
        if (peek().kind != Tok::number)
            throw parse_error(ParseErrorKind::syntax, peek().pos, "expected numeric literal");
        return advance().num;
    }

    // strict operators are encoded like their inclusive forms
    void apply_cmp(const std::string& attr, const std::string& op, double v, std::size_t pos) {
        if (op == ">" || op == ">=")
            merge_bound(attr, v, std::nullopt, pos);
        else if (op == "<" || op == "<=")
            merge_bound(attr, std::nullopt, v, pos);
        else // "="
            merge_bound(attr, v, v, pos);
    }

    void parse_group_by() {
        do {
            out.group_by.push_back(expect_attr());
        } while (accept_sym(","));
    }
};

} // namespace

ParsedQuery parse(const std::string& sql, const DatasetSchema& schema) {
    Parser p(sql, schema);
    return p.run();
}

} // namespace mlaqp
