#include <algorithm>
#include <array>
#include <cmath>

#include "hlc/components.hpp"
#include "hlc/lattice_count.hpp"

namespace hlc {

namespace {

using U128 = unsigned __int128;

// ---------------------------------------------------------------- evaluation

struct ModTerm {
    std::uint64_t coeff;
    std::vector<std::pair<int, int>> factors;
};

std::uint64_t reduce(std::int64_t c, std::uint64_t m)
{
    const auto mm = static_cast<std::int64_t>(m);
    return static_cast<std::uint64_t>(((c % mm) + mm) % mm);
}

struct Domain {
    std::vector<std::vector<std::uint64_t>> values;  // per variable
    std::vector<std::vector<std::vector<std::uint64_t>>> powers;  // [var][idx][e]
};

Domain make_domain(int n, std::uint64_t m, std::uint64_t pc, const std::vector<std::int64_t>& residues,
                   const std::vector<int>& vars, int max_deg)
{
    Domain dom;
    for (int local = 0; local < n; ++local) {
        std::vector<std::uint64_t> vals;
        if (pc <= 1) {
            for (std::uint64_t b = 0; b < m; ++b)
                vals.push_back(b);
        } else {
            const std::uint64_t r = reduce(residues[vars[local]], pc);
            for (std::uint64_t b = r; b < m; b += pc)
                vals.push_back(b);
        }
        std::vector<std::vector<std::uint64_t>> pw(vals.size());
        for (std::size_t t = 0; t < vals.size(); ++t) {
            pw[t].resize(max_deg + 1);
            pw[t][0] = 1 % m;
            for (int e = 1; e <= max_deg; ++e)
                pw[t][e] = pw[t][e - 1] * vals[t] % m;
        }
        dom.values.push_back(std::move(vals));
        dom.powers.push_back(std::move(pw));
    }
    return dom;
}

std::vector<std::vector<ModTerm>> compile_mod(const std::vector<IntegerForm>& forms, std::uint64_t m,
                                              int& max_deg)
{
    std::vector<std::vector<ModTerm>> out;
    max_deg = 0;
    for (const auto& f : forms) {
        std::vector<ModTerm> terms;
        for (const auto& [e, c] : f.terms()) {
            ModTerm t{reduce(c, m), {}};
            if (t.coeff == 0)
                continue;
            for (int j = 0; j < static_cast<int>(e.size()); ++j)
                if (e[j] > 0) {
                    t.factors.emplace_back(j, e[j]);
                    max_deg = std::max(max_deg, e[j]);
                }
            terms.push_back(std::move(t));
        }
        out.push_back(std::move(terms));
    }
    return out;
}

// Calls visit(values, idx) for every point of the domain; values are the form
// values mod m.
template <class Visit>
void enumerate(const std::vector<std::vector<ModTerm>>& forms, const Domain& dom, std::uint64_t m, Visit visit)
{
    const int n = static_cast<int>(dom.values.size());
    const std::size_t R = forms.size();
    std::vector<std::size_t> idx(n, 0);
    std::vector<std::uint64_t> vals(R);
    for (int j = 0; j < n; ++j)
        if (dom.values[j].empty())
            return;
    while (true) {
        for (std::size_t i = 0; i < R; ++i) {
            std::uint64_t acc = 0;
            for (const auto& t : forms[i]) {
                std::uint64_t v = t.coeff;
                for (const auto& [j, e] : t.factors)
                    v = v * dom.powers[j][idx[j]][e] % m;
                acc += v;
                if (acc >= m)
                    acc -= m;
            }
            vals[i] = acc;
        }
        visit(vals, idx);
        int j = n - 1;
        for (; j >= 0; --j) {
            if (++idx[j] < dom.values[j].size())
                break;
            idx[j] = 0;
        }
        if (j < 0)
            return;
    }
}

std::uint64_t checked_pow(std::uint64_t p, int k, std::uint64_t limit)
{
    std::uint64_t m = 1;
    for (int i = 0; i < k; ++i) {
        if (m > limit / p)
            throw BudgetError("count_mod: modulus p^k too large");
        m *= p;
    }
    return m;
}

long double domain_size(int n, std::uint64_t m, std::uint64_t pc)
{
    return std::pow(static_cast<long double>(m / std::max<std::uint64_t>(pc, 1)), n);
}

mpz_class to_mpz(U128 v)
{
    mpz_class hi(static_cast<unsigned long>(static_cast<std::uint64_t>(v >> 64)));
    mpz_class lo(static_cast<unsigned long>(static_cast<std::uint64_t>(v)));
    return (hi << 64) + lo;
}

// ---------------------------------------------------------------- plain path

struct PlainContext {
    const FormSystem* system;
    unsigned long p;
    std::uint64_t budget;
    bool recursion;
    std::uint64_t pc;
    const std::vector<std::int64_t>* residues;
};

mpz_class plain_count(const PlainContext& ctx, int k)
{
    const FormSystem& F = *ctx.system;
    const int n = F.n();
    const int d = F.degree();
    if (k <= 0)
        return 1;
    const std::uint64_t m = checked_pow(ctx.p, k, 1ULL << 31);
    if (domain_size(n, m, ctx.pc) > static_cast<long double>(ctx.budget))
        throw BudgetError("count_mod: (p^k)^n = " + std::to_string(static_cast<double>(domain_size(n, m, ctx.pc)))
                          + " residues exceed the budget " + std::to_string(ctx.budget));
    int max_deg = 0;
    const auto forms = compile_mod(F.forms(), m, max_deg);
    std::vector<int> vars(n);
    for (int j = 0; j < n; ++j)
        vars[j] = j;
    const Domain dom = make_domain(n, m, ctx.pc, *ctx.residues, vars, max_deg);

    std::uint64_t count = 0;
    const bool rec = ctx.recursion && d >= 1;
    enumerate(forms, dom, m, [&](const std::vector<std::uint64_t>& vals, const std::vector<std::size_t>& idx) {
        if (rec) {
            bool all_div = true;
            for (int j = 0; j < n && all_div; ++j)
                all_div = dom.values[j][idx[j]] % ctx.p == 0;
            if (all_div)
                return;
        }
        for (auto v : vals)
            if (v != 0)
                return;
        ++count;
    });
    mpz_class total = count;
    if (rec) {
        mpz_class pn;
        mpz_ui_pow_ui(pn.get_mpz_t(), ctx.p, static_cast<unsigned long>(n));
        mpz_class scale;
        if (k <= d) {
            mpz_pow_ui(scale.get_mpz_t(), pn.get_mpz_t(), static_cast<unsigned long>(k - 1));
            total += scale;
        } else {
            mpz_pow_ui(scale.get_mpz_t(), pn.get_mpz_t(), static_cast<unsigned long>(d - 1));
            total += scale * plain_count(ctx, k - d);
        }
    }
    return total;
}

// ---------------------------------------------------------------- NTT

struct NttPrime {
    std::uint32_t mod;
    std::uint32_t root;
};
constexpr std::array<NttPrime, 4> kPrimes{{{998244353u, 3u}, {167772161u, 3u}, {469762049u, 3u}, {754974721u, 11u}}};
constexpr std::size_t kMaxNtt = std::size_t{1} << 23;

std::uint64_t pow_mod(std::uint64_t b, std::uint64_t e, std::uint64_t mod)
{
    std::uint64_t r = 1;
    b %= mod;
    while (e) {
        if (e & 1)
            r = r * b % mod;
        b = b * b % mod;
        e >>= 1;
    }
    return r;
}

template <std::uint32_t Mod, std::uint32_t Root>
void ntt_fixed(std::vector<std::uint32_t>& a, bool inverse)
{
    const std::size_t N = a.size();
    constexpr std::uint64_t mod = Mod;
    for (std::size_t i = 1, j = 0; i < N; ++i) {
        std::size_t bit = N >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(a[i], a[j]);
    }
    std::vector<std::uint32_t> w;
    for (std::size_t len = 2; len <= N; len <<= 1) {
        std::uint64_t wl = pow_mod(Root, (mod - 1) / len, mod);
        if (inverse)
            wl = pow_mod(wl, mod - 2, mod);
        const std::size_t half = len / 2;
        w.assign(half, 1);
        for (std::size_t i = 1; i < half; ++i)
            w[i] = static_cast<std::uint32_t>(w[i - 1] * wl % mod);
        for (std::size_t i = 0; i < N; i += len)
            for (std::size_t j = 0; j < half; ++j) {
                const std::uint64_t u = a[i + j];
                const std::uint64_t v = a[i + j + half] * static_cast<std::uint64_t>(w[j]) % mod;
                a[i + j] = static_cast<std::uint32_t>(u + v >= mod ? u + v - mod : u + v);
                a[i + j + half] = static_cast<std::uint32_t>(u >= v ? u - v : u + mod - v);
            }
    }
    if (inverse) {
        const std::uint64_t inv = pow_mod(N, mod - 2, mod);
        for (auto& x : a)
            x = static_cast<std::uint32_t>(x * inv % mod);
    }
}

void ntt(std::vector<std::uint32_t>& a, bool inverse, std::size_t q)
{
    switch (q) {
    case 0:
        return ntt_fixed<kPrimes[0].mod, kPrimes[0].root>(a, inverse);
    case 1:
        return ntt_fixed<kPrimes[1].mod, kPrimes[1].root>(a, inverse);
    case 2:
        return ntt_fixed<kPrimes[2].mod, kPrimes[2].root>(a, inverse);
    default:
        return ntt_fixed<kPrimes[3].mod, kPrimes[3].root>(a, inverse);
    }
}

struct GarnerTable {
    // prefix[i][j] = m_0 * ... * m_{j-1} mod m_i, inv[i] = prefix[i][i]^{-1} mod m_i
    std::array<std::array<std::uint64_t, 4>, 4> prefix{};
    std::array<std::uint64_t, 4> inv{};
};

const GarnerTable& garner_table()
{
    static const GarnerTable table = [] {
        GarnerTable t;
        for (int i = 0; i < 4; ++i) {
            const std::uint64_t mi = kPrimes[i].mod;
            std::uint64_t prod = 1;
            for (int j = 0; j <= i; ++j) {
                t.prefix[i][j] = prod;
                if (j < i)
                    prod = prod * (kPrimes[j].mod % mi) % mi;
            }
            t.inv[i] = pow_mod(prod, mi - 2, mi);
        }
        return t;
    }();
    return table;
}

U128 garner(const std::array<std::uint32_t, 4>& r)
{
    // x = r0 + m0*(t1 + m1*(t2 + m2*t3))
    const GarnerTable& g = garner_table();
    std::array<std::uint64_t, 4> t{};
    for (int i = 0; i < 4; ++i) {
        const std::uint64_t mi = kPrimes[i].mod;
        std::uint64_t partial = 0;
        for (int j = 0; j < i; ++j)
            partial = (partial + t[j] % mi * g.prefix[i][j]) % mi;
        const std::uint64_t diff = (r[i] % mi + mi - partial) % mi;
        t[i] = diff * g.inv[i] % mi;
    }
    U128 x = 0;
    for (int i = 3; i >= 0; --i)
        x = x * kPrimes[i].mod + t[i];
    return x;
}

// Histogram over (Z/m)^R, flat index sum v_i m^i.
using Histogram = std::vector<U128>;

std::size_t flat_size(std::uint64_t m, int R)
{
    std::size_t s = 1;
    for (int i = 0; i < R; ++i)
        s *= m;
    return s;
}

Histogram convolve(const Histogram& a, const Histogram& b, std::uint64_t m, int R)
{
    const std::size_t S = flat_size(m, R);
    std::vector<std::size_t> nza, nzb;
    for (std::size_t i = 0; i < S; ++i) {
        if (a[i] != 0)
            nza.push_back(i);
        if (b[i] != 0)
            nzb.push_back(i);
    }
    auto fold_add = [&](std::size_t i, std::size_t j) {
        std::size_t out = 0, scale = 1, x = i, y = j;
        for (int r = 0; r < R; ++r) {
            out += ((x % m + y % m) % m) * scale;
            x /= m;
            y /= m;
            scale *= m;
        }
        return out;
    };
    Histogram c(S, 0);
    const std::size_t L = 2 * m - 1;
    std::size_t lin = 1;
    for (int r = 0; r < R; ++r)
        lin *= L;
    std::size_t N = 1;
    while (N < lin)
        N <<= 1;
    const long double direct = static_cast<long double>(nza.size()) * static_cast<long double>(nzb.size());
    if (direct <= 12.0L * static_cast<long double>(N) * std::log2(static_cast<long double>(N) + 2) || N > kMaxNtt) {
        if (N > kMaxNtt && direct > 4.0e9L)
            throw BudgetError("count_mod: convolution too large for the modulus and number of forms");
        for (auto i : nza)
            for (auto j : nzb)
                c[fold_add(i, j)] += a[i] * b[j];
        return c;
    }
    auto embed = [&](std::size_t i) {
        std::size_t out = 0, scale = 1;
        for (int r = 0; r < R; ++r) {
            out += (i % m) * scale;
            i /= m;
            scale *= L;
        }
        return out;
    };
    std::vector<std::array<std::uint32_t, 4>> res(lin);
    for (std::size_t q = 0; q < kPrimes.size(); ++q) {
        const auto& pr = kPrimes[q];
        std::vector<std::uint32_t> fa(N, 0), fb(N, 0);
        for (auto i : nza)
            fa[embed(i)] = static_cast<std::uint32_t>(a[i] % pr.mod);
        for (auto j : nzb)
            fb[embed(j)] = static_cast<std::uint32_t>(b[j] % pr.mod);
        ntt(fa, false, q);
        ntt(fb, false, q);
        for (std::size_t i = 0; i < N; ++i)
            fa[i] = static_cast<std::uint32_t>(static_cast<std::uint64_t>(fa[i]) * fb[i] % pr.mod);
        ntt(fa, true, q);
        for (std::size_t i = 0; i < lin; ++i)
            res[i][q] = fa[i];
    }
    for (std::size_t i = 0; i < lin; ++i) {
        bool zero = true;
        for (auto v : res[i])
            zero = zero && v == 0;
        if (zero)
            continue;
        std::size_t out = 0, scale = 1, x = i;
        for (int r = 0; r < R; ++r) {
            out += (x % L % m) * scale;
            x /= L;
            scale *= m;
        }
        c[out] += garner(res[i]);
    }
    return c;
}

// Product of all histograms (with multiplicities) in one pass: each distinct
// histogram is transformed once per prime at the full linear length.
// Returns an empty histogram when that length exceeds the NTT limit.
Histogram convolve_all(const std::vector<std::pair<Histogram, int>>& hists, std::uint64_t m, int R)
{
    int total = 0;
    for (const auto& [h, mult] : hists)
        total += mult;
    const std::size_t L = static_cast<std::size_t>(total) * (m - 1) + 1;
    long double lin_ld = 1;
    for (int r = 0; r < R; ++r)
        lin_ld *= static_cast<long double>(L);
    if (lin_ld > static_cast<long double>(kMaxNtt))
        return {};
    const std::size_t lin = static_cast<std::size_t>(lin_ld);
    std::size_t N = 1;
    while (N < lin)
        N <<= 1;
    auto embed = [&](std::size_t i) {
        std::size_t out = 0, scale = 1;
        for (int r = 0; r < R; ++r) {
            out += (i % m) * scale;
            i /= m;
            scale *= L;
        }
        return out;
    };
    const std::size_t S = flat_size(m, R);
    std::vector<std::array<std::uint32_t, 4>> res(lin);
    for (std::size_t q = 0; q < kPrimes.size(); ++q) {
        const std::uint64_t mod = kPrimes[q].mod;
        std::vector<std::uint32_t> acc(N, 1), f(N);
        for (const auto& [h, mult] : hists) {
            std::fill(f.begin(), f.end(), 0u);
            for (std::size_t i = 0; i < S; ++i)
                if (h[i] != 0)
                    f[embed(i)] = static_cast<std::uint32_t>(h[i] % mod);
            ntt(f, false, q);
            for (std::size_t i = 0; i < N; ++i) {
                const std::uint64_t v = f[i];
                std::uint64_t a = acc[i];
                for (int k = 0; k < mult; ++k)
                    a = a * v % mod;
                acc[i] = static_cast<std::uint32_t>(a);
            }
        }
        ntt(acc, true, q);
        for (std::size_t i = 0; i < lin; ++i)
            res[i][q] = acc[i];
    }
    Histogram c(S, 0);
    for (std::size_t i = 0; i < lin; ++i) {
        bool zero = true;
        for (auto v : res[i])
            zero = zero && v == 0;
        if (zero)
            continue;
        std::size_t out = 0, scale = 1, x = i;
        for (int r = 0; r < R; ++r) {
            out += (x % L % m) * scale;
            x /= L;
            scale *= m;
        }
        c[out] += garner(res[i]);
    }
    return c;
}

struct ConvPlan {
    ComponentSplit<std::int64_t> split;
    long double cost = 0;
    bool feasible = true;
};

ConvPlan plan_convolution(const ModularCountRequest& req, std::uint64_t m, std::uint64_t pc)
{
    ConvPlan plan{split_components(req.system.forms()), 0, true};
    const int R = req.system.R();
    const long double side = static_cast<long double>(m / std::max<std::uint64_t>(pc, 1));
    for (const auto& g : plan.split.groups)
        plan.cost += std::pow(side, static_cast<long double>(g.size()));
    const long double lin = std::pow(static_cast<long double>(2 * m - 1), R);
    if (R > 4 || std::pow(static_cast<long double>(m), R) > static_cast<long double>(1 << 22))
        plan.feasible = false;
    plan.cost += static_cast<long double>(plan.split.groups.size()) * 12.0L * lin * std::log2(lin + 2);
    if (std::log2(domain_size(req.system.n(), m, pc)) >= 115.0L)
        plan.feasible = false;
    return plan;
}

mpz_class convolution_count(const ModularCountRequest& req, const ConvPlan& plan, std::uint64_t m, std::uint64_t pc)
{
    const int R = req.system.R();
    const std::size_t S = flat_size(m, R);
    std::vector<std::pair<Histogram, int>> hists;
    for (std::size_t g = 0; g < plan.split.groups.size(); ++g) {
        const auto& parts = plan.split.parts[g];
        const auto& vars = plan.split.groups[g];
        int max_deg = 0;
        const auto forms = compile_mod(parts, m, max_deg);
        const Domain dom = make_domain(static_cast<int>(vars.size()), m, pc, req.residues, vars, max_deg);
        Histogram h(S, 0);
        enumerate(forms, dom, m, [&](const std::vector<std::uint64_t>& vals, const std::vector<std::size_t>&) {
            std::size_t idx = 0, scale = 1;
            for (int i = 0; i < R; ++i) {
                idx += vals[i] * scale;
                scale *= m;
            }
            ++h[idx];
        });
        auto same = std::find_if(hists.begin(), hists.end(), [&](const auto& e) { return e.first == h; });
        if (same != hists.end())
            ++same->second;
        else
            hists.emplace_back(std::move(h), 1);
    }
    Histogram acc;
    if (hists.size() > 1 || (hists.size() == 1 && hists[0].second > 1))
        acc = convolve_all(hists, m, R);
    if (acc.empty()) {
        for (const auto& [h, mult] : hists)
            for (int k = 0; k < mult; ++k)
                acc = acc.empty() ? h : convolve(acc, h, m, R);
    }
    std::size_t target = 0, scale = 1;
    for (int i = 0; i < R; ++i) {
        const std::uint64_t c = reduce(plan.split.constants[i], m);
        target += ((m - c) % m) * scale;
        scale *= m;
    }
    return to_mpz(acc[target]);
}

} // namespace

mpz_class count_mod(const ModularCountRequest& req)
{
    const FormSystem& F = req.system;
    if (!is_prime(req.p))
        throw ValidationError("count_mod: p = " + std::to_string(req.p) + " is not prime");
    if (req.k < 1)
        throw ValidationError("count_mod: k must be at least 1");
    if (req.class_exponent < 0 || req.class_exponent > req.k)
        throw ValidationError("count_mod: class exponent must lie in [0, k]");
    if (req.class_exponent > 0 && static_cast<int>(req.residues.size()) != F.n())
        throw ValidationError("count_mod: residue class needs n residues");
    const std::uint64_t m = checked_pow(req.p, req.k, 1ULL << 31);
    const std::uint64_t pc = req.class_exponent > 0 ? checked_pow(req.p, req.class_exponent, m) : 1;
    const long double plain_cost = domain_size(F.n(), m, pc);

    ModMethod method = req.method;
    ConvPlan plan;
    const bool want_conv = method == ModMethod::convolution || method == ModMethod::automatic;
    if (want_conv) {
        plan = plan_convolution(req, m, pc);
        if (method == ModMethod::automatic)
            method = plan.feasible && plan.cost < plain_cost ? ModMethod::convolution : ModMethod::plain;
        else if (!plan.feasible)
            throw BudgetError("count_mod: convolution infeasible for this modulus");
    }
    if (method == ModMethod::convolution) {
        if (plan.cost > static_cast<long double>(req.budget))
            throw BudgetError("count_mod: convolution work exceeds the budget");
        return convolution_count(req, plan, m, pc);
    }
    const bool recursion = method == ModMethod::plain && pc == 1 && F.homogeneous() && F.degree() >= 1;
    PlainContext ctx{&F, req.p, req.budget, recursion, pc, &req.residues};
    return plain_count(ctx, req.k);
}

} // namespace hlc
