#include "hlc/lattice_count.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <unordered_map>

#include "hlc/parallel.hpp"

namespace hlc {

using nlohmann::json;

std::uint64_t default_budget()
{
    if (const char* env = std::getenv("HLC_BUDGET")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && v > 0)
            return v;
    }
    return 2'000'000'000ULL;
}

std::string to_string(CountMethod m)
{
    switch (m) {
    case CountMethod::naive:
        return "naive";
    case CountMethod::meet_in_middle:
        return "meet_in_middle";
    default:
        return "auto";
    }
}

CountMethod count_method_from_string(const std::string& s)
{
    if (s == "naive")
        return CountMethod::naive;
    if (s == "meet_in_middle" || s == "mitm")
        return CountMethod::meet_in_middle;
    if (s == "auto")
        return CountMethod::automatic;
    throw ValidationError("unknown count method '" + s + "'");
}

bool is_prime(unsigned long p)
{
    if (p < 2)
        return false;
    for (unsigned long q = 2; q * q <= p; ++q)
        if (p % q == 0)
            return false;
    return true;
}

namespace {

constexpr long double kInt64Safe = 4.0e18L;  // below 2^62

struct Term {
    std::int64_t coeff;
    std::vector<std::pair<int, int>> factors;  // (variable, exponent)
};

struct CompiledSystem {
    std::vector<std::vector<Term>> forms;
};

Term compile_term(const Exponents& e, std::int64_t c)
{
    Term t{c, {}};
    for (int j = 0; j < static_cast<int>(e.size()); ++j)
        if (e[j] > 0)
            t.factors.emplace_back(j, e[j]);
    return t;
}

struct Ranges {
    std::vector<std::int64_t> lo, hi;
    std::vector<std::uint64_t> size;
    std::vector<std::int64_t> max_abs;
    bool empty = false;
    long double total = 1;
};

Ranges make_ranges(const CountRequest& req)
{
    if (!(req.P >= 0.0) || !std::isfinite(req.P))
        throw ValidationError("count: P must be a finite nonnegative number");
    if (req.box.n() != req.system.n())
        throw ValidationError("count: box dimension does not match n");
    req.box.validate();
    Ranges r;
    const int n = req.system.n();
    for (int i = 0; i < n; ++i) {
        auto [lo, hi] = req.box.integer_range(i, req.P);
        r.lo.push_back(lo);
        r.hi.push_back(hi);
        if (hi < lo) {
            r.empty = true;
            r.size.push_back(0);
            r.max_abs.push_back(0);
            continue;
        }
        r.size.push_back(static_cast<std::uint64_t>(hi - lo + 1));
        r.max_abs.push_back(std::max(std::llabs(lo), std::llabs(hi)));
        r.total *= static_cast<long double>(hi - lo + 1);
    }
    if (r.empty)
        r.total = 0;
    return r;
}

// pow_table[j][x - lo_j][e] = x^e, valid when magnitudes were bounded first.
std::vector<std::vector<std::vector<std::int64_t>>> power_tables(const Ranges& r, int max_deg)
{
    std::vector<std::vector<std::vector<std::int64_t>>> t(r.lo.size());
    for (std::size_t j = 0; j < r.lo.size(); ++j) {
        if (r.size[j] == 0)
            continue;
        t[j].resize(r.size[j]);
        for (std::uint64_t k = 0; k < r.size[j]; ++k) {
            const std::int64_t x = r.lo[j] + static_cast<std::int64_t>(k);
            auto& row = t[j][k];
            row.resize(max_deg + 1);
            long double mag = 1;
            row[0] = 1;
            for (int e = 1; e <= max_deg; ++e) {
                mag *= std::fabs(static_cast<long double>(x));
                row[e] = mag < kInt64Safe ? row[e - 1] * x : 0;  // unused when out of range
            }
        }
    }
    return t;
}

bool fits_int64(const FormSystem& F, const Ranges& r)
{
    for (const auto& f : F.forms())
        if (magnitude_bound(f, r.max_abs) >= kInt64Safe)
            return false;
    return true;
}

inline std::int64_t eval_term(const Term& t, const std::vector<std::int64_t>& x, const Ranges& r,
                              const std::vector<std::vector<std::vector<std::int64_t>>>& pw)
{
    std::int64_t v = t.coeff;
    for (const auto& [j, e] : t.factors)
        v *= pw[j][static_cast<std::size_t>(x[j] - r.lo[j])][e];
    return v;
}

// Odometer step over the listed variables; false when exhausted.
inline bool advance(std::vector<std::int64_t>& x, const std::vector<int>& vars, const Ranges& r)
{
    for (int idx = static_cast<int>(vars.size()) - 1; idx >= 0; --idx) {
        const int j = vars[idx];
        if (x[j] < r.hi[j]) {
            ++x[j];
            return true;
        }
        x[j] = r.lo[j];
    }
    return false;
}

CompiledSystem compile(const FormSystem& F)
{
    CompiledSystem cs;
    for (const auto& f : F.forms()) {
        std::vector<Term> terms;
        for (const auto& [e, c] : f.terms())
            terms.push_back(compile_term(e, c));
        cs.forms.push_back(std::move(terms));
    }
    return cs;
}

constexpr std::size_t kShards = 64;

} // namespace

CountResult count_naive(const CountRequest& req)
{
    const FormSystem& F = req.system;
    const int n = F.n();
    Ranges r = make_ranges(req);
    CountResult res;
    res.method = CountMethod::naive;
    if (r.empty)
        return res;
    if (r.total > static_cast<long double>(req.budget))
        throw BudgetError("count_naive: " + std::to_string(static_cast<double>(r.total))
                          + " points exceed the enumeration budget " + std::to_string(req.budget));
    res.work = static_cast<std::uint64_t>(r.total);

    const bool fast = fits_int64(F, r);
    const auto cs = compile(F);
    int max_deg = 0;
    for (const auto& f : F.forms())
        max_deg = std::max(max_deg, f.actual_degree());
    const auto pw = fast ? power_tables(r, std::max(0, max_deg)) : decltype(power_tables(r, 0)){};

    std::vector<int> inner;
    for (int j = 1; j < n; ++j)
        inner.push_back(j);
    const auto pieces = split_range(r.lo[0], r.hi[0], kShards);
    auto partial = run_shards<std::uint64_t>(pieces.size(), req.workers, [&](std::size_t s) {
        std::uint64_t count = 0;
        std::vector<std::int64_t> x(r.lo);
        for (long long x0 = pieces[s].first; x0 <= pieces[s].second; ++x0) {
            x[0] = x0;
            for (int j = 1; j < n; ++j)
                x[j] = r.lo[j];
            do {
                bool all_zero = true;
                for (std::size_t i = 0; i < cs.forms.size() && all_zero; ++i) {
                    if (fast) {
                        std::int64_t v = 0;
                        for (const auto& t : cs.forms[i])
                            v += eval_term(t, x, r, pw);
                        all_zero = v == 0;
                    } else {
                        all_zero = evaluate(F[i], x) == 0;
                    }
                }
                if (all_zero)
                    ++count;
            } while (advance(x, inner, r));
        }
        return count;
    });
    for (auto c : partial)
        res.count += c;
    return res;
}

namespace {

using Key = std::array<std::int64_t, 4>;

struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept
    {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (auto v : k) {
            std::uint64_t z = static_cast<std::uint64_t>(v) + h;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            h = z ^ (z >> 31);
        }
        return static_cast<std::size_t>(h);
    }
};

struct Split {
    std::uint32_t hash_side = 0;  // bitmask H
    std::uint32_t cross = 0;      // C subset of H touching L
    long double cost = 0;
};

long double product(const Ranges& r, std::uint32_t mask)
{
    long double p = 1;
    for (std::size_t j = 0; j < r.size.size(); ++j)
        if (mask >> j & 1u)
            p *= static_cast<long double>(r.size[j]);
    return p;
}

} // namespace

CountResult count_meet_in_middle(const CountRequest& req)
{
    const FormSystem& F = req.system;
    if (F.degree() != 2)
        throw ValidationError("count_meet_in_middle requires d = 2");
    const int n = F.n();
    const int R = F.R();
    Ranges r = make_ranges(req);
    CountResult res;
    res.method = CountMethod::meet_in_middle;
    if (r.empty)
        return res;

    auto fallback = [&](const std::string& why) {
        CountResult out = count_naive(req);
        out.note = "meet_in_middle fell back to naive: " + why;
        return out;
    };
    if (R > 4)
        return fallback("more than 4 forms");
    if (n > 24)
        return fallback("more than 24 variables");
    if (!fits_int64(F, r))
        return fallback("values exceed the 64-bit fast path");

    std::vector<std::uint32_t> adj(n, 0);
    for (const auto& f : F.forms())
        for (const auto& [e, c] : f.terms()) {
            std::uint32_t mask = 0;
            for (int j = 0; j < n; ++j)
                if (e[j] > 0)
                    mask |= 1u << j;
            for (int j = 0; j < n; ++j)
                if (mask >> j & 1u)
                    adj[j] |= mask & ~(1u << j);
        }

    const std::uint32_t all = n == 32 ? ~0u : ((1u << n) - 1);
    Split best;
    best.cost = r.total;
    bool found = false;
    for (std::uint32_t H = 1; H < all; ++H) {
        const std::uint32_t L = all & ~H;
        std::uint32_t C = 0;
        for (int j = 0; j < n; ++j)
            if ((H >> j & 1u) && (adj[j] & L))
                C |= 1u << j;
        const long double cost = product(r, C) * (product(r, L) + product(r, H & ~C));
        if (cost < best.cost) {
            best = {H, C, cost};
            found = true;
        }
    }
    if (!found)
        return fallback("no split beats plain enumeration");
    if (best.cost > static_cast<long double>(req.budget))
        throw BudgetError("count_meet_in_middle: work " + std::to_string(static_cast<double>(best.cost))
                          + " exceeds budget");

    const std::uint32_t H = best.hash_side, C = best.cross, L = all & ~H;
    std::vector<int> lvars, cvars, hvars;  // hvars = H \ C
    for (int j = 0; j < n; ++j) {
        if (L >> j & 1u)
            lvars.push_back(j);
        else if (C >> j & 1u)
            cvars.push_back(j);
        else
            hvars.push_back(j);
    }

    // Terms touching L go to the probe side; everything else is hashed.
    std::vector<std::vector<Term>> probe_terms(R), hash_terms(R);
    for (int i = 0; i < R; ++i)
        for (const auto& [e, c] : F[i].terms()) {
            bool touches_l = false;
            for (int j = 0; j < n; ++j)
                touches_l |= e[j] > 0 && (L >> j & 1u);
            (touches_l ? probe_terms : hash_terms)[i].push_back(compile_term(e, c));
        }
    const auto pw = power_tables(r, 2);

    std::vector<std::int64_t> xc(r.lo);
    std::uint64_t total = 0;
    std::uint64_t work = 0;
    do {
        std::unordered_map<Key, std::uint64_t, KeyHash> table;
        {
            std::vector<std::int64_t> x(xc);
            do {
                Key key{};
                for (int i = 0; i < R; ++i)
                    for (const auto& t : hash_terms[i])
                        key[i] += eval_term(t, x, r, pw);
                ++table[key];
                ++work;
            } while (advance(x, hvars, r));
        }
        const std::int64_t first_lo = r.lo[lvars[0]], first_hi = r.hi[lvars[0]];
        const auto pieces = split_range(first_lo, first_hi, kShards);
        std::vector<int> rest(lvars.begin() + 1, lvars.end());
        auto partial = run_shards<std::uint64_t>(pieces.size(), req.workers, [&](std::size_t s) {
            std::uint64_t count = 0;
            std::vector<std::int64_t> x(xc);
            for (long long v = pieces[s].first; v <= pieces[s].second; ++v) {
                x[lvars[0]] = v;
                for (int j : rest)
                    x[j] = r.lo[j];
                do {
                    Key key{};
                    for (int i = 0; i < R; ++i) {
                        std::int64_t acc = 0;
                        for (const auto& t : probe_terms[i])
                            acc += eval_term(t, x, r, pw);
                        key[i] = -acc;
                    }
                    auto it = table.find(key);
                    if (it != table.end())
                        count += it->second;
                } while (advance(x, rest, r));
            }
            return count;
        });
        for (auto c : partial)
            total += c;
        work += static_cast<std::uint64_t>(product(r, L));
    } while (advance(xc, cvars, r));

    res.count = total;
    res.work = work;
    return res;
}

CountResult count_solutions(const CountRequest& req)
{
    switch (req.method) {
    case CountMethod::naive:
        return count_naive(req);
    case CountMethod::meet_in_middle:
        return count_meet_in_middle(req);
    default:
        if (req.system.degree() == 2 && req.system.n() >= 2)
            return count_meet_in_middle(req);
        return count_naive(req);
    }
}

json to_json(const CountRequest& req, const CountResult& res)
{
    return {{"P", req.P},
            {"box", [&] {
                 json b = json::array();
                 for (const auto& [a, c] : req.box.intervals)
                     b.push_back({a, c});
                 return b;
             }()},
            {"boundary", "closed"},
            {"budget", req.budget},
            {"method_requested", to_string(req.method)},
            {"method", to_string(res.method)},
            {"count", res.count},
            {"work", res.work},
            {"note", res.note}};
}

} // namespace hlc
