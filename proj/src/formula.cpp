#include "abn/formula.hpp"

#include <cctype>

#include "abn/error.hpp"

namespace abn {
namespace {

enum class Tok { tilde, colon, bar, plus, dot, ident, end };

struct Token {
    Tok kind;
    std::string text;
    std::size_t pos;
};

bool is_reserved(char c) {
    return c == '~' || c == ':' || c == '|' || c == '+' || c == '.';
}

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        switch (c) {
        case '~': out.push_back({Tok::tilde, "~", i}); ++i; continue;
        case ':': out.push_back({Tok::colon, ":", i}); ++i; continue;
        case '|': out.push_back({Tok::bar, "|", i}); ++i; continue;
        case '+': out.push_back({Tok::plus, "+", i}); ++i; continue;
        case '.': out.push_back({Tok::dot, ".", i}); ++i; continue;
        default: break;
        }
        std::size_t start = i;
        while (i < s.size() && !is_reserved(s[i]) && !std::isspace(static_cast<unsigned char>(s[i])))
            ++i;
        out.push_back({Tok::ident, std::string(s.substr(start, i - start)), start});
    }
    out.push_back({Tok::end, "", s.size()});
    return out;
}

struct NameList {
    bool all = false;  // '.'
    std::vector<std::size_t> ids;
};

class Parser {
public:
    Parser(std::string_view text, const std::vector<std::string>& nodes)
        : toks_(tokenize(text)), nodes_(nodes), result_{BinaryMatrix(nodes.size()), {}} {}

    FormulaParse run() {
        expect(Tok::tilde, "formula must start with '~'");
        if (peek().kind == Tok::end) return std::move(result_);
        term();
        while (peek().kind == Tok::plus) {
            next();
            term();
        }
        if (peek().kind != Tok::end) fail("unexpected '" + peek().text + "'");
        return std::move(result_);
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& next() { return toks_[pos_++]; }

    [[noreturn]] void fail(const std::string& what) const {
        throw Error("SyntaxError", what + " at offset " + std::to_string(peek().pos));
    }

    void expect(Tok kind, const std::string& what) {
        if (peek().kind != kind) fail(what);
        next();
    }

    std::size_t lookup(const Token& t) const {
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (nodes_[i] == t.text) return i;
        throw Error("UnknownName", "'" + t.text + "' is not a node name");
    }

    NameList names() {
        NameList list;
        if (peek().kind == Tok::dot) {
            next();
            list.all = true;
            return list;
        }
        if (peek().kind != Tok::ident) fail("expected a node name");
        list.ids.push_back(lookup(next()));
        while (peek().kind == Tok::colon) {
            next();
            if (peek().kind != Tok::ident) fail("dangling ':'");
            list.ids.push_back(lookup(next()));
        }
        return list;
    }

    std::vector<std::size_t> expand(const NameList& list) const {
        if (!list.all) return list.ids;
        std::vector<std::size_t> all(nodes_.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
    }

    void term() {
        NameList children = names();
        if (peek().kind != Tok::bar) return;
        next();
        NameList parents = names();
        if ((children.all || children.ids.size() > 1) && parents.all)
            result_.warnings.push_back(
                "child list combined with '.' expanded as a cartesian product");
        for (std::size_t c : expand(children)) {
            for (std::size_t p : expand(parents)) {
                if (c == p) {
                    // '.' on either side skips the child itself; only an
                    // explicit x|x is an error.
                    if (children.all || parents.all) continue;
                    throw Error("SelfArc", "arc " + nodes_[c] + "|" + nodes_[c] + " is a self-loop");
                }
                result_.matrix(c, p) = 1;
            }
        }
    }

    std::vector<Token> toks_;
    const std::vector<std::string>& nodes_;
    FormulaParse result_;
    std::size_t pos_ = 0;
};

}  // namespace

FormulaParse parse_formula_verbose(std::string_view text, const std::vector<std::string>& nodes) {
    return Parser(text, nodes).run();
}

BinaryMatrix parse_formula(std::string_view text, const std::vector<std::string>& nodes) {
    return parse_formula_verbose(text, nodes).matrix;
}

std::string render_formula(const BinaryMatrix& m, const std::vector<std::string>& nodes) {
    std::string out = "~";
    bool first = true;
    for (std::size_t c = 0; c < m.size(); ++c) {
        if (m.row_count(c) == 0) continue;
        out += first ? " " : " + ";
        first = false;
        out += nodes[c] + "|";
        bool first_parent = true;
        for (std::size_t p = 0; p < m.size(); ++p) {
            if (!m(c, p)) continue;
            if (!first_parent) out += ":";
            first_parent = false;
            out += nodes[p];
        }
    }
    return out;
}

}  // namespace abn
