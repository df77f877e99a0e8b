#include "hlc/system_io.hpp"

#include <cctype>
#include <limits>

namespace hlc {

using nlohmann::json;

namespace {

struct RawTerm {
    Exponents exps;  // sized lazily; index = variable
    std::int64_t coeff = 1;
};

class ExpressionParser {
public:
    explicit ExpressionParser(std::string_view s) : s_(s) {}

    std::vector<RawTerm> parse()
    {
        std::vector<RawTerm> out;
        skip();
        int sign = 1;
        if (peek() == '+' || peek() == '-') {
            sign = get() == '-' ? -1 : 1;
            skip();
        }
        out.push_back(term(sign));
        skip();
        while (pos_ < s_.size()) {
            char op = get();
            if (op != '+' && op != '-')
                fail("expected '+' or '-'");
            skip();
            out.push_back(term(op == '-' ? -1 : 1));
            skip();
        }
        return out;
    }

private:
    RawTerm term(int sign)
    {
        RawTerm t;
        t.coeff = sign;
        factor(t);
        skip();
        while (peek() == '*') {
            get();
            skip();
            factor(t);
            skip();
        }
        return t;
    }

    void factor(RawTerm& t)
    {
        if (std::isdigit(static_cast<unsigned char>(peek()))) {
            long long v = integer();
            if (__builtin_mul_overflow(t.coeff, static_cast<std::int64_t>(v), &t.coeff))
                fail("coefficient overflow");
            return;
        }
        if (peek() == 'x') {
            get();
            long long idx = integer();
            if (idx < 1 || idx > 4096)
                fail("variable index out of range");
            skip();
            long long power = 1;
            if (peek() == '^') {
                get();
                skip();
                power = integer();
            }
            if (t.exps.size() < static_cast<std::size_t>(idx))
                t.exps.resize(idx, 0);
            t.exps[idx - 1] += static_cast<int>(power);
            return;
        }
        fail("expected number or variable");
    }

    long long integer()
    {
        if (!std::isdigit(static_cast<unsigned char>(peek())))
            fail("expected digit");
        long long v = 0;
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
            int digit = get() - '0';
            if (v > (std::numeric_limits<long long>::max() - digit) / 10)
                fail("integer overflow");
            v = v * 10 + digit;
        }
        return v;
    }

    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
    char get() { return s_[pos_++]; }
    void skip()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }
    [[noreturn]] void fail(const std::string& what) const
    {
        throw ValidationError("malformed polynomial '" + std::string(s_) + "' at offset " + std::to_string(pos_)
                              + ": " + what);
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

IntegerForm build_form(const std::vector<RawTerm>& raw, int n, int degree)
{
    std::size_t max_var = 0;
    int max_deg = 0;
    for (const auto& t : raw) {
        max_var = std::max(max_var, t.exps.size());
        max_deg = std::max(max_deg, total_degree(t.exps));
    }
    if (n == 0)
        n = static_cast<int>(std::max<std::size_t>(max_var, 1));
    if (max_var > static_cast<std::size_t>(n))
        throw ValidationError("polynomial uses x" + std::to_string(max_var) + " but n = " + std::to_string(n));
    if (degree < 0)
        degree = max_deg;
    IntegerForm f(n, degree);
    for (auto t : raw) {
        t.exps.resize(n, 0);
        f.add_term(t.exps, t.coeff);
    }
    return f;
}

std::vector<RawTerm> terms_from_json(const json& form)
{
    std::vector<RawTerm> raw;
    if (form.is_string())
        return ExpressionParser(form.get<std::string>()).parse();
    if (!form.is_array())
        throw ValidationError("form must be an expression string or a list of terms");
    for (const auto& term : form) {
        if (!term.is_object() || !term.contains("exponents") || !term.contains("coeff"))
            throw ValidationError("term must be an object with 'exponents' and 'coeff'");
        RawTerm t;
        for (const auto& e : term.at("exponents")) {
            if (!e.is_number_integer() || e.get<long long>() < 0)
                throw ValidationError("exponents must be nonnegative integers");
            t.exps.push_back(e.get<int>());
        }
        if (!term.at("coeff").is_number_integer())
            throw ValidationError("coeff must be an integer");
        t.coeff = term.at("coeff").get<std::int64_t>();
        raw.push_back(std::move(t));
    }
    return raw;
}

} // namespace

IntegerForm parse_polynomial(std::string_view text, int n, int degree)
{
    return build_form(ExpressionParser(text).parse(), n, degree);
}

SystemDocument system_from_json(const json& doc)
{
    if (!doc.is_object())
        throw ValidationError("system document must be a JSON object");
    if (!doc.contains("forms") || !doc.at("forms").is_array() || doc.at("forms").empty())
        throw ValidationError("system document needs a nonempty 'forms' array");

    std::vector<std::vector<RawTerm>> raws;
    for (const auto& form : doc.at("forms"))
        raws.push_back(terms_from_json(form));

    int n = doc.contains("n") ? doc.at("n").get<int>() : 0;
    if (n == 0) {
        for (const auto& raw : raws)
            for (const auto& t : raw)
                n = std::max(n, static_cast<int>(t.exps.size()));
        n = std::max(n, 1);
    }
    for (const auto& raw : raws)
        for (const auto& t : raw)
            if (t.exps.size() > static_cast<std::size_t>(n))
                throw ValidationError("term has more exponents than n = " + std::to_string(n));

    std::vector<int> degrees;
    for (const auto& raw : raws) {
        int m = -1;
        for (const auto& t : raw)
            if (t.coeff != 0)
                m = std::max(m, total_degree(t.exps));
        degrees.push_back(m);
    }
    for (int deg : degrees)
        if (deg < 0)
            throw ValidationError("zero form supplied");
    int d = doc.contains("d") ? doc.at("d").get<int>() : degrees[0];
    for (int deg : degrees)
        if (deg != d)
            throw ValidationError("inconsistent degree: forms have degrees " + std::to_string(deg) + " and "
                                  + std::to_string(d));

    std::vector<IntegerForm> forms;
    for (const auto& raw : raws) {
        IntegerForm f = build_form(raw, n, d);
        if (f.is_zero())
            throw ValidationError("zero form supplied");
        forms.push_back(std::move(f));
    }
    if (doc.contains("R") && doc.at("R").get<int>() != static_cast<int>(forms.size()))
        throw ValidationError("R does not match the number of forms");

    SystemDocument out{FormSystem(std::move(forms)), std::nullopt};
    if (doc.contains("box")) {
        Box box;
        for (const auto& iv : doc.at("box")) {
            if (!iv.is_array() || iv.size() != 2)
                throw ValidationError("box entries must be [a, b] pairs");
            box.intervals.emplace_back(iv[0].get<double>(), iv[1].get<double>());
        }
        if (box.n() != out.system.n())
            throw ValidationError("box dimension does not match n");
        box.validate();
        out.box = std::move(box);
    }
    return out;
}

SystemDocument parse_system(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("malformed system document: ") + e.what());
    }
    try {
        return system_from_json(doc);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed system document: ") + e.what());
    }
}

json to_json(const FormSystem& F)
{
    json forms = json::array();
    for (const auto& f : F.forms()) {
        json terms = json::array();
        for (const auto& [e, c] : f.terms())
            terms.push_back({{"coeff", c}, {"exponents", e}});
        forms.push_back(terms);
    }
    return {{"R", F.R()}, {"d", F.degree()}, {"n", F.n()}, {"forms", forms}};
}

json to_json(const Box& box)
{
    json out = json::array();
    for (const auto& [a, b] : box.intervals)
        out.push_back({a, b});
    return out;
}

std::string canonical_text(const SystemDocument& doc)
{
    json j = to_json(doc.system);
    if (doc.box)
        j["box"] = to_json(*doc.box);
    return j.dump(2) + "\n";
}

FormSystem make_system(std::initializer_list<std::string_view> forms, int n)
{
    std::vector<std::vector<RawTerm>> raws;
    for (auto s : forms)
        raws.push_back(ExpressionParser(s).parse());
    if (n == 0)
        for (const auto& raw : raws)
            for (const auto& t : raw)
                n = std::max(n, static_cast<int>(t.exps.size()));
    int d = -1;
    for (const auto& raw : raws)
        for (const auto& t : raw)
            d = std::max(d, total_degree(t.exps));
    std::vector<IntegerForm> out;
    for (const auto& raw : raws)
        out.push_back(build_form(raw, std::max(n, 1), std::max(d, 0)));
    return FormSystem(std::move(out));
}

} // namespace hlc
