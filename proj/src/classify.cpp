#include "dplab/classify.hpp"

#include <cctype>
#include <sstream>

#include "dplab/errors.hpp"

namespace dplab {

namespace {

bool starts_with(const std::string& s, std::size_t pos, const char* pat) {
    std::size_t len = std::char_traits<char>::length(pat);
    return s.compare(pos, len, pat) == 0;
}

std::string make_label(bool projective, int level, bool sigma) {
    if (level == 0) return "QF";
    std::ostringstream os;
    os << (sigma ? "Sigma" : "Pi") << "^" << (projective ? 1 : 0) << "_" << level;
    return os.str();
}

Classification arithmetical(const std::vector<Quantifier>& tokens) {
    Classification c;
    c.projective = false;
    if (tokens.empty()) {
        c.level = 0;
        c.label = "QF";
        return c;
    }
    int blocks = 1;
    for (std::size_t i = 1; i < tokens.size(); ++i)
        if (tokens[i].universal != tokens[i - 1].universal) ++blocks;
    c.level = blocks;
    c.sigma = !tokens.front().universal;
    c.label = make_label(false, c.level, c.sigma);
    return c;
}

}  // namespace

FormulaPrefix parse_prefix(const std::string& text) {
    FormulaPrefix out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    auto skip_ws = [&] {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };
    while (true) {
        skip_ws();
        if (i >= n) break;
        if (text[i] == '[') {
            auto close = text.find(']', i);
            if (close == std::string::npos)
                throw PrefixParseError("unterminated matrix bracket", i);
            out.matrix = text.substr(i + 1, close - i - 1);
            i = close + 1;
            skip_ws();
            if (i < n) throw PrefixParseError("trailing text after matrix", i);
            break;
        }
        Quantifier q;
        if (starts_with(text, i, "∀")) {  // forall
            q.universal = true;
            i += 3;
        } else if (starts_with(text, i, "∃")) {  // exists
            q.universal = false;
            i += 3;
        } else if (text[i] == 'A') {
            q.universal = true;
            ++i;
        } else if (text[i] == 'E') {
            q.universal = false;
            ++i;
        } else {
            throw PrefixParseError("expected a quantifier", i);
        }
        skip_ws();
        // variable name: letters/digits/underscores or a single UTF-8 letter
        std::size_t name_start = i;
        while (i < n && text[i] != ':' && !std::isspace(static_cast<unsigned char>(text[i])) &&
               text[i] != '[')
            ++i;
        if (i == name_start) throw PrefixParseError("expected a variable name", i);
        skip_ws();
        if (i >= n || text[i] != ':')
            throw PrefixParseError("expected ':' with a sort annotation", i);
        ++i;
        skip_ws();
        if (starts_with(text, i, "ℝ")) {  // double-struck R
            q.sort = QuantifierSort::Real;
            i += 3;
        } else if (starts_with(text, i, "ℕ")) {  // double-struck N
            q.sort = QuantifierSort::Number;
            i += 3;
        } else if (starts_with(text, i, "real") || starts_with(text, i, "fn")) {
            q.sort = QuantifierSort::Real;
            i += starts_with(text, i, "real") ? 4 : 2;
        } else if (starts_with(text, i, "nat")) {
            q.sort = QuantifierSort::Number;
            i += 3;
        } else if (text[i] == 'R' || text[i] == 'F') {
            q.sort = QuantifierSort::Real;
            ++i;
        } else if (text[i] == 'N') {
            q.sort = QuantifierSort::Number;
            ++i;
        } else {
            throw PrefixParseError("unknown sort annotation", i);
        }
        out.tokens.push_back(q);
    }
    return out;
}

Classification classify_prefix(const FormulaPrefix& f, ClassifyMode mode) {
    const auto& t = f.tokens;
    bool any_real = false;
    for (const auto& q : t)
        if (q.sort == QuantifierSort::Real) any_real = true;
    if (!any_real) return arithmetical(t);

    Classification c;
    c.projective = true;
    if (mode == ClassifyMode::Strict) {
        // alternation count of the real subsequence
        std::vector<bool> reals;
        for (const auto& q : t)
            if (q.sort == QuantifierSort::Real) reals.push_back(q.universal);
        int blocks = 1;
        for (std::size_t i = 1; i < reals.size(); ++i)
            if (reals[i] != reals[i - 1]) ++blocks;
        c.level = blocks;
        c.sigma = !reals.front();
    } else {
        // type-blind polarity runs; the maximal all-number suffix counts once
        std::size_t suffix = t.size();
        while (suffix > 0 && t[suffix - 1].sort == QuantifierSort::Number) --suffix;
        // suffix..end are trailing number quantifiers
        int blocks = 0;
        bool suffix_contributed = false;
        for (std::size_t i = 0; i < t.size(); ++i) {
            bool new_run = (i == 0) || (t[i].universal != t[i - 1].universal);
            if (!new_run) continue;
            if (i >= suffix) {
                if (!suffix_contributed) {
                    ++blocks;
                    suffix_contributed = true;
                }
            } else {
                ++blocks;
            }
        }
        c.level = blocks;
        c.sigma = !t.front().universal;
    }
    c.label = make_label(true, c.level, c.sigma);
    return c;
}

}  // namespace dplab
