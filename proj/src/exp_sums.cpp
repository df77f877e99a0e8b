#include "hlc/exp_sums.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "hlc/components.hpp"
#include "hlc/parallel.hpp"

namespace hlc {

using nlohmann::json;

namespace {

constexpr std::size_t kShards = 64;

struct GroupRanges {
    std::vector<std::int64_t> lo, hi;
    long double size = 1;
};

GroupRanges group_ranges(const std::vector<int>& vars, double P, const Box& box)
{
    GroupRanges g;
    for (int v : vars) {
        auto [lo, hi] = box.integer_range(v, P);
        g.lo.push_back(lo);
        g.hi.push_back(hi);
        g.size *= hi >= lo ? static_cast<long double>(hi - lo + 1) : 0.0L;
    }
    return g;
}

// Sum of e(phase(y)) over the integer points of one component.
template <class Phase>
Complex component_sum(const GroupRanges& g, unsigned workers, Phase phase)
{
    if (g.size == 0)
        return {0.0, 0.0};
    const int n = static_cast<int>(g.lo.size());
    const auto pieces = split_range(g.lo[0], g.hi[0], kShards);
    auto parts = run_shards<ComplexSum>(pieces.size(), workers, [&](std::size_t s) {
        ComplexSum acc;
        std::vector<std::int64_t> y(g.lo);
        for (long long y0 = pieces[s].first; y0 <= pieces[s].second; ++y0) {
            y[0] = y0;
            for (int j = 1; j < n; ++j)
                y[j] = g.lo[j];
            while (true) {
                acc.add(e_of(phase(y)));
                int j = n - 1;
                for (; j >= 1; --j) {
                    if (y[j] < g.hi[j]) {
                        ++y[j];
                        break;
                    }
                    y[j] = g.lo[j];
                }
                if (j < 1)
                    break;
            }
        }
        return acc;
    });
    ComplexSum total;
    for (const auto& p : parts)
        total.add(p);
    return total.value();
}

void check_alpha(std::span<const double> alpha, int R)
{
    if (static_cast<int>(alpha.size()) != R)
        throw ValidationError("exp_sum: alpha must have R entries");
}

void check_box(const Box& box, int n, double P)
{
    if (box.n() != n)
        throw ValidationError("box dimension does not match n");
    box.validate();
    if (!(P >= 0.0) || !std::isfinite(P))
        throw ValidationError("P must be a finite nonnegative number");
}

template <class Coeff>
void check_budget(const ComponentSplit<Coeff>& split, double P, const Box& box, std::uint64_t budget)
{
    long double work = 0;
    for (const auto& vars : split.groups)
        work += group_ranges(vars, P, box).size;
    if (work > static_cast<long double>(budget))
        throw BudgetError("exp_sum: " + std::to_string(static_cast<double>(work)) + " points exceed the budget");
}

} // namespace

Complex exp_sum(const FormSystem& F, std::span<const double> alpha, double P, const Box& box, std::uint64_t budget,
                unsigned workers)
{
    check_alpha(alpha, F.R());
    check_box(box, F.n(), P);
    const auto split = split_components(F.forms());
    check_budget(split, P, box, budget);
    Complex result{1.0, 0.0};
    std::vector<GroupRanges> seen;
    std::vector<Complex> values;
    for (std::size_t g = 0; g < split.groups.size(); ++g) {
        const auto ranges = group_ranges(split.groups[g], P, box);
        const auto& parts = split.parts[g];
        std::size_t same = g;
        for (std::size_t h = 0; h < g && same == g; ++h)
            if (seen[h].lo == ranges.lo && seen[h].hi == ranges.hi && split.parts[h] == parts)
                same = h;
        seen.push_back(ranges);
        if (same < g) {
            values.push_back(values[same]);
        } else {
            values.push_back(component_sum(ranges, workers, [&](const std::vector<std::int64_t>& y) {
                long double phase = 0;
                for (std::size_t i = 0; i < parts.size(); ++i) {
                    if (alpha[i] == 0.0 || parts[i].is_zero())
                        continue;
                    const long double v = static_cast<long double>(evaluate(parts[i], y));
                    const long double t = static_cast<long double>(alpha[i]) * v;
                    phase += t - std::floor(t);
                }
                return phase;
            }));
        }
        result *= values.back();
    }
    long double c = 0;
    for (int i = 0; i < F.R(); ++i)
        c += static_cast<long double>(alpha[i]) * static_cast<long double>(split.constants[i]);
    return result * e_of(c);
}

Complex exp_sum(const std::vector<RealForm>& forms, std::span<const double> alpha, double P, const Box& box,
                std::uint64_t budget, unsigned workers)
{
    if (forms.empty())
        throw ValidationError("exp_sum: empty system");
    check_alpha(alpha, static_cast<int>(forms.size()));
    check_box(box, forms.front().n(), P);
    const auto split = split_components(forms);
    check_budget(split, P, box, budget);
    Complex result{1.0, 0.0};
    for (std::size_t g = 0; g < split.groups.size(); ++g) {
        const auto ranges = group_ranges(split.groups[g], P, box);
        const auto& parts = split.parts[g];
        result *= component_sum(ranges, workers, [&](const std::vector<std::int64_t>& y) {
            std::vector<double> t(y.begin(), y.end());
            long double phase = 0;
            for (std::size_t i = 0; i < parts.size(); ++i)
                if (alpha[i] != 0.0 && !parts[i].is_zero())
                    phase += static_cast<long double>(alpha[i]) * evaluate(parts[i], t);
            return phase;
        });
    }
    long double c = 0;
    for (std::size_t i = 0; i < forms.size(); ++i)
        c += static_cast<long double>(alpha[i]) * split.constants[i];
    return result * e_of(c);
}

// ---------------------------------------------------------------- local sums

LocalSumTable::LocalSumTable(const FormSystem& F, std::uint64_t q, std::uint64_t budget)
    : q_(q), R_(F.R())
{
    if (q < 1)
        throw ValidationError("local_sum: q must be positive");
    const auto split = split_components(F.forms());
    long double work = 0;
    for (const auto& vars : split.groups)
        work += std::pow(static_cast<long double>(q), static_cast<long double>(vars.size()));
    if (work > static_cast<long double>(budget))
        throw BudgetError("local_sum: q^n residues exceed the budget");
    const auto qq = static_cast<Int128>(q);
    auto mod_q = [&](Int128 v) { return static_cast<std::uint64_t>(((v % qq) + qq) % qq); };
    for (auto c : split.constants)
        constants_.push_back(static_cast<std::int64_t>(mod_q(c)));
    for (std::size_t g = 0; g < split.groups.size(); ++g) {
        const int size = static_cast<int>(split.groups[g].size());
        const auto& parts = split.parts[g];
        std::map<std::vector<std::uint64_t>, std::uint64_t> hist;
        std::vector<std::int64_t> y(size, 0);
        std::vector<std::uint64_t> vals(R_);
        while (true) {
            for (int i = 0; i < R_; ++i)
                vals[i] = parts[i].is_zero() ? 0 : mod_q(evaluate(parts[i], y));
            ++hist[vals];
            int j = size - 1;
            for (; j >= 0; --j) {
                if (++y[j] < static_cast<std::int64_t>(q))
                    break;
                y[j] = 0;
            }
            if (j < 0)
                break;
        }
        Group grp;
        grp.size = size;
        grp.histogram.assign(hist.begin(), hist.end());
        groups_.push_back(std::move(grp));
    }
    roots_ = roots_of_unity(q);
}

Complex LocalSumTable::operator()(std::span<const std::int64_t> a) const
{
    if (static_cast<int>(a.size()) != R_)
        throw ValidationError("local_sum: a must have R entries");
    const auto qq = static_cast<Int128>(q_);
    std::vector<std::uint64_t> ar(R_);
    for (int i = 0; i < R_; ++i)
        ar[i] = static_cast<std::uint64_t>(((static_cast<Int128>(a[i]) % qq) + qq) % qq);
    auto index = [&](const std::vector<std::uint64_t>& v) {
        Int128 s = 0;
        for (int i = 0; i < R_; ++i)
            s += static_cast<Int128>(ar[i]) * v[i];
        return static_cast<std::size_t>(s % qq);
    };
    Complex result{1.0, 0.0};
    for (const auto& grp : groups_) {
        ComplexSum acc;
        for (const auto& [v, count] : grp.histogram)
            acc.add(static_cast<double>(count) * roots_[index(v)]);
        result *= acc.value() / std::pow(static_cast<double>(q_), grp.size);
    }
    std::vector<std::uint64_t> c(constants_.begin(), constants_.end());
    return result * roots_[index(c)];
}

Complex local_sum(const FormSystem& F, std::uint64_t q, std::span<const std::int64_t> a, std::uint64_t budget)
{
    return LocalSumTable(F, q, budget)(a);
}

// ---------------------------------------------------------------- S_infinity

namespace {

struct ComponentIntegral {
    Complex value;
    double error = 0.0;
    int panels = 0;
    bool low_confidence = false;
};

ComponentIntegral integrate_component(const std::vector<RealForm>& parts, std::span<const double> gamma,
                                      const std::vector<std::pair<double, double>>& intervals,
                                      const QuadratureSpec& spec)
{
    const int n = static_cast<int>(intervals.size());
    double volume = 1.0;
    for (const auto& [a, b] : intervals)
        volume *= b - a;
    bool trivial = true;
    for (std::size_t i = 0; i < parts.size(); ++i)
        trivial = trivial && (gamma[i] == 0.0 || parts[i].is_zero());
    if (trivial || volume == 0.0)
        return {Complex(volume, 0.0), 0.0, 0, false};

    // Bound on |grad(gamma . f)| times the side length: number of phase turns.
    double turns = 0.0;
    double side = 0.0;
    for (const auto& [a, b] : intervals)
        side = std::max(side, b - a);
    for (std::size_t i = 0; i < parts.size(); ++i)
        for (const auto& [e, c] : parts[i].terms())
            turns += std::fabs(gamma[i] * c) * total_degree(e);
    turns *= side;
    const int base = std::max(spec.min_panels, static_cast<int>(std::ceil(spec.min_panels * side + turns / 6.0)));

    auto integrate = [&](int panels) {
        std::vector<QuadratureRule> rules;
        long double nodes = 1;
        for (const auto& [a, b] : intervals) {
            const int p = std::max(1, static_cast<int>(std::ceil(panels * (b - a) / std::max(side, 1e-300))));
            rules.push_back(composite_gauss(a, b, p));
            nodes *= rules.back().nodes.size();
        }
        if (nodes > static_cast<long double>(spec.max_nodes))
            throw BudgetError("s_infinity: quadrature needs " + std::to_string(static_cast<double>(nodes))
                              + " nodes, above the limit");
        ComplexSum acc;
        std::vector<std::size_t> idx(n, 0);
        std::vector<double> t(n);
        while (true) {
            double w = 1.0;
            for (int j = 0; j < n; ++j) {
                t[j] = rules[j].nodes[idx[j]];
                w *= rules[j].weights[idx[j]];
            }
            long double phase = 0;
            for (std::size_t i = 0; i < parts.size(); ++i)
                if (gamma[i] != 0.0 && !parts[i].is_zero())
                    phase += static_cast<long double>(gamma[i]) * evaluate(parts[i], t);
            acc.add(w * e_of(phase));
            int j = n - 1;
            for (; j >= 0; --j) {
                if (++idx[j] < rules[j].nodes.size())
                    break;
                idx[j] = 0;
            }
            if (j < 0)
                break;
        }
        return acc.value();
    };

    ComponentIntegral out;
    int panels = base;
    Complex prev = integrate(panels);
    double prev_err = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, spec.refinements); ++r) {
        panels *= 2;
        const Complex cur = integrate(panels);
        const double err = std::abs(cur - prev);
        const double floor = 1e-13 * std::max(1.0, volume);
        if (r > 0 && err > prev_err && err > floor)
            throw NumericalError("s_infinity: refinement did not reduce the error estimate");
        prev_err = err;
        prev = cur;
    }
    out.value = prev;
    out.error = prev_err;
    out.panels = panels;
    out.low_confidence = turns > 1e4;
    return out;
}

} // namespace

QuadratureResult s_infinity(const FormSystem& F, std::span<const double> gamma, const Box& box,
                            const QuadratureSpec& spec)
{
    if (static_cast<int>(gamma.size()) != F.R())
        throw ValidationError("s_infinity: gamma must have R entries");
    if (box.n() != F.n())
        throw ValidationError("s_infinity: box dimension does not match n");
    box.validate();
    std::vector<RealForm> lead;
    for (const auto& f : F.forms())
        lead.push_back(to_real(leading_part(f)));
    const auto split = split_components(lead);
    QuadratureResult res;
    res.value = {1.0, 0.0};
    std::vector<ComponentIntegral> pieces;
    std::vector<std::vector<std::pair<double, double>>> boxes;
    for (std::size_t g = 0; g < split.groups.size(); ++g) {
        std::vector<std::pair<double, double>> iv;
        for (int v : split.groups[g])
            iv.push_back(box.intervals[v]);
        std::size_t same = g;
        for (std::size_t h = 0; h < g && same == g; ++h)
            if (boxes[h] == iv && split.parts[h] == split.parts[g])
                same = h;
        boxes.push_back(iv);
        pieces.push_back(same < g ? pieces[same] : integrate_component(split.parts[g], gamma, iv, spec));
    }
    for (const auto& p : pieces) {
        res.value *= p.value;
        res.panels = std::max(res.panels, p.panels);
        res.low_confidence = res.low_confidence || p.low_confidence;
    }
    for (std::size_t g = 0; g < pieces.size(); ++g) {
        double others = 1.0;
        for (std::size_t h = 0; h < pieces.size(); ++h)
            if (h != g)
                others *= std::abs(pieces[h].value) + pieces[h].error;
        res.error += pieces[g].error * others;
    }
    long double c = 0;
    for (int i = 0; i < F.R(); ++i)
        c += static_cast<long double>(gamma[i]) * split.constants[i];
    res.value *= e_of(c);
    return res;
}

// ---------------------------------------------------------------- major arcs

std::optional<ArcCenter> ArcParameters::locate(std::span<const double> alpha) const
{
    if (static_cast<int>(alpha.size()) != R)
        throw ValidationError("major arcs: alpha must have R entries");
    std::vector<std::vector<std::int64_t>> cand(R);
    std::vector<std::int64_t> a(R);
    for (std::uint64_t q = 1; q <= q_max; ++q) {
        const double qd = static_cast<double>(q);
        for (int i = 0; i < R; ++i) {
            cand[i].clear();
            const auto lo = static_cast<std::int64_t>(std::floor(alpha[i] * qd));
            for (std::int64_t c : {lo, lo + 1})
                if (c >= 0 && c <= static_cast<std::int64_t>(q) && std::fabs(alpha[i] - c / qd) < radius)
                    cand[i].push_back(c);
            if (cand[i].empty())
                break;
        }
        bool any = true;
        for (int i = 0; i < R; ++i)
            any = any && !cand[i].empty();
        if (!any)
            continue;
        std::vector<std::size_t> idx(R, 0);
        while (true) {
            std::int64_t g = static_cast<std::int64_t>(q);
            for (int i = 0; i < R; ++i) {
                a[i] = cand[i][idx[i]];
                g = std::gcd(g, a[i]);
            }
            if (g == 1)
                return ArcCenter{q, a};
            int i = R - 1;
            for (; i >= 0; --i) {
                if (++idx[i] < cand[i].size())
                    break;
                idx[i] = 0;
            }
            if (i < 0)
                break;
        }
    }
    return std::nullopt;
}

double ArcParameters::measure_bound() const
{
    double total = 0.0;
    for (std::uint64_t q = 1; q <= q_max; ++q)
        total += std::pow(static_cast<double>(q) * 2.0 * radius, R);
    return total;
}

ArcParameters major_arcs(double P, double Delta, int d, int R, std::size_t max_centers)
{
    if (!(Delta > 0.0 && Delta < 1.0))
        throw ValidationError("major_arcs: Delta must lie in (0, 1)");
    if (!(P >= 1.0) || !std::isfinite(P))
        throw ValidationError("major_arcs: P must be at least 1");
    if (R < 1 || d < 1)
        throw ValidationError("major_arcs: need R >= 1 and d >= 1");
    ArcParameters arcs;
    arcs.P = P;
    arcs.Delta = Delta;
    arcs.d = d;
    arcs.R = R;
    arcs.q_max = static_cast<std::uint64_t>(std::floor(std::pow(P, Delta) * (1.0 + 1e-14)));
    arcs.radius = std::pow(P, Delta - d);
    long double total = 0;
    for (std::uint64_t q = 1; q <= arcs.q_max; ++q)
        total += std::pow(static_cast<long double>(q + 1), R);
    if (total > static_cast<long double>(max_centers))
        throw BudgetError("major_arcs: too many centers to list");
    std::vector<std::int64_t> a(R);
    for (std::uint64_t q = 1; q <= arcs.q_max; ++q) {
        std::fill(a.begin(), a.end(), 0);
        while (true) {
            std::int64_t g = static_cast<std::int64_t>(q);
            for (auto v : a)
                g = std::gcd(g, v);
            if (g == 1)
                arcs.centers.push_back({q, a});
            int i = R - 1;
            for (; i >= 0; --i) {
                if (++a[i] <= static_cast<std::int64_t>(q))
                    break;
                a[i] = 0;
            }
            if (i < 0)
                break;
        }
    }
    return arcs;
}

// ---------------------------------------------------------------- orthogonality

std::vector<std::uint64_t> orthogonality_grid(const FormSystem& F, double P, const Box& box)
{
    check_box(box, F.n(), P);
    std::vector<std::int64_t> max_abs;
    for (int j = 0; j < F.n(); ++j) {
        auto [lo, hi] = box.integer_range(j, P);
        max_abs.push_back(hi < lo ? 0 : std::max(std::llabs(lo), std::llabs(hi)));
    }
    std::vector<std::uint64_t> grid;
    for (const auto& f : F.forms()) {
        const long double b = std::floor(magnitude_bound(f, max_abs));
        if (b > 1e15L)
            throw BudgetError("orthogonality: value bound too large for a grid");
        grid.push_back(2 * static_cast<std::uint64_t>(b) + 1);
    }
    return grid;
}

OrthogonalityResult count_via_orthogonality(const FormSystem& F, double P, const Box& box,
                                            std::vector<std::uint64_t> grid, std::uint64_t budget)
{
    const auto minimal = orthogonality_grid(F, P, box);
    if (grid.empty())
        grid = minimal;
    if (grid.size() != minimal.size())
        throw ValidationError("orthogonality: grid must have R entries");
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid[i] < minimal[i])
            throw ValidationError("orthogonality: grid size " + std::to_string(grid[i])
                                  + " does not exceed twice the value bound (" + std::to_string(minimal[i] / 2) + ")");
    const int n = F.n();
    const int R = F.R();

    std::vector<std::int64_t> lo(n), hi(n);
    long double points = 1;
    for (int j = 0; j < n; ++j) {
        std::tie(lo[j], hi[j]) = box.integer_range(j, P);
        points *= hi[j] >= lo[j] ? static_cast<long double>(hi[j] - lo[j] + 1) : 0.0L;
    }
    if (points > static_cast<long double>(budget))
        throw BudgetError("orthogonality: box has too many points");

    std::map<std::vector<std::int64_t>, std::uint64_t> hist;
    if (points > 0) {
        std::vector<std::int64_t> x(lo);
        std::vector<std::int64_t> v(R);
        while (true) {
            for (int i = 0; i < R; ++i)
                v[i] = static_cast<std::int64_t>(evaluate(F[i], x));
            ++hist[v];
            int j = n - 1;
            for (; j >= 0; --j) {
                if (x[j] < hi[j]) {
                    ++x[j];
                    break;
                }
                x[j] = lo[j];
            }
            if (j < 0)
                break;
        }
    }
    long double grid_points = 1;
    for (auto M : grid)
        grid_points *= static_cast<long double>(M);
    if (grid_points * static_cast<long double>(std::max<std::size_t>(hist.size(), 1)) > static_cast<long double>(budget))
        throw BudgetError("orthogonality: grid evaluation exceeds the budget");

    std::vector<std::vector<Complex>> roots;
    for (auto M : grid)
        roots.push_back(roots_of_unity(M));
    // residues of each distinct value vector
    std::vector<std::pair<std::vector<std::uint64_t>, double>> vals;
    for (const auto& [v, c] : hist) {
        std::vector<std::uint64_t> r(R);
        for (int i = 0; i < R; ++i) {
            const auto M = static_cast<std::int64_t>(grid[i]);
            r[i] = static_cast<std::uint64_t>(((v[i] % M) + M) % M);
        }
        vals.emplace_back(std::move(r), static_cast<double>(c));
    }

    ComplexSum total;
    std::vector<std::uint64_t> j(R, 0);
    while (true) {
        ComplexSum s;  // S(j / M)
        for (const auto& [r, c] : vals) {
            Complex z{c, 0.0};
            for (int i = 0; i < R; ++i)
                z *= roots[i][static_cast<std::size_t>((static_cast<unsigned __int128>(j[i]) * r[i]) % grid[i])];
            s.add(z);
        }
        total.add(s);
        int i = R - 1;
        for (; i >= 0; --i) {
            if (++j[i] < grid[i])
                break;
            j[i] = 0;
        }
        if (i < 0)
            break;
    }
    OrthogonalityResult res;
    res.grid = grid;
    const Complex raw = total.value() / static_cast<double>(grid_points);
    res.raw = raw.real();
    res.imaginary = raw.imag();
    const double rounded = std::round(res.raw);
    res.residual = std::fabs(res.raw - rounded);
    if (res.residual > 1e-6 || std::fabs(res.imaginary) > 1e-6)
        throw NumericalError("orthogonality: accumulated value is not within 1e-6 of an integer");
    res.count = static_cast<std::uint64_t>(rounded);
    return res;
}

// ---------------------------------------------------------------- repulsion

double repulsion_bound(double beta_norm, double P, int d, double cancellation)
{
    if (beta_norm == 0.0)
        return std::numeric_limits<double>::infinity();
    const double near = std::pow(P, -d) / beta_norm;
    const double far = d > 1 ? std::pow(beta_norm, 1.0 / (d - 1)) : beta_norm;
    return std::pow(std::max(near, far), cancellation);
}

RepulsionReport repulsion_diagnostic(const FormSystem& F, double P, const Box& box, double cancellation,
                                     const RepulsionSpec& spec)
{
    if (!(cancellation > 0.0))
        throw ValidationError("repulsion: cancellation constant must be positive");
    const int R = F.R();
    const int n = F.n();
    const int d = F.degree();
    RepulsionReport rep;
    rep.P = P;
    rep.cancellation = cancellation;
    rep.epsilon = spec.epsilon;
    rep.seed = spec.seed;
    const double norm = std::pow(P, n + spec.epsilon);

    std::map<std::vector<double>, double> cache;
    auto modulus = [&](const std::vector<double>& alpha) {
        auto it = cache.find(alpha);
        if (it != cache.end())
            return it->second;
        const double v = std::abs(exp_sum(F, alpha, P, box));
        cache.emplace(alpha, v);
        return v;
    };
    auto add_sample = [&](std::vector<double> alpha, std::vector<double> beta) {
        RepulsionSample s;
        double bn = 0.0;
        for (double b : beta)
            bn = std::max(bn, std::fabs(b));
        std::vector<double> shifted(R);
        for (int i = 0; i < R; ++i)
            shifted[i] = alpha[i] + beta[i];
        s.bound = repulsion_bound(bn, P, d, cancellation);
        if (bn == 0.0) {
            s.value = modulus(alpha) / norm;
            s.ratio = 0.0;
        } else {
            s.value = std::min(modulus(alpha), modulus(shifted)) / norm;
            s.ratio = s.value / s.bound;
        }
        rep.max_ratio = std::max(rep.max_ratio, s.ratio);
        s.alpha = std::move(alpha);
        s.beta = std::move(beta);
        rep.samples.push_back(std::move(s));
    };

    // Structured part: alpha at reduced fractions, beta on a log grid along
    // signed coordinate directions and the diagonal.
    std::vector<std::vector<double>> alphas;
    for (int q = 1; q <= std::max(1, spec.structured_q); ++q) {
        std::vector<int> a(R, 0);
        while (true) {
            int g = q;
            for (int v : a)
                g = std::gcd(g, v);
            if (g == 1) {
                std::vector<double> al(R);
                for (int i = 0; i < R; ++i)
                    al[i] = static_cast<double>(a[i]) / q;
                alphas.push_back(al);
            }
            int i = R - 1;
            for (; i >= 0; --i) {
                if (++a[i] < q)
                    break;
                a[i] = 0;
            }
            if (i < 0)
                break;
        }
    }
    std::vector<std::vector<double>> dirs;
    for (int i = 0; i < R; ++i)
        for (double s : {1.0, -1.0}) {
            std::vector<double> e(R, 0.0);
            e[i] = s;
            dirs.push_back(e);
        }
    if (R > 1)
        dirs.push_back(std::vector<double>(R, 1.0));
    const double lo = std::log(std::pow(P, -d));
    const double hi = std::log(0.5);
    std::vector<double> mags;
    for (int l = 0; l < spec.beta_levels; ++l)
        mags.push_back(std::exp(lo + (hi - lo) * l / std::max(1, spec.beta_levels - 1)));
    mags.push_back(std::pow(P, 1 - d));
    add_sample(std::vector<double>(R, 0.0), std::vector<double>(R, 0.0));
    for (const auto& al : alphas)
        for (const auto& dir : dirs)
            for (double m : mags) {
                std::vector<double> b(R);
                for (int i = 0; i < R; ++i)
                    b[i] = dir[i] * m;
                add_sample(al, b);
            }

    std::mt19937_64 rng(spec.seed);
    for (int s = 0; s < spec.random_samples; ++s) {
        std::vector<double> al(R), b(R);
        for (int i = 0; i < R; ++i)
            al[i] = u01(rng());
        const double m = std::exp(lo + (hi - lo) * u01(rng()));
        for (int i = 0; i < R; ++i)
            b[i] = (2.0 * u01(rng()) - 1.0) * m;
        const int k = static_cast<int>(u01(rng()) * R);
        b[k] = (b[k] < 0 ? -1.0 : 1.0) * m;
        add_sample(al, b);
    }
    return rep;
}

// ---------------------------------------------------------------- Lemma-type check

ArcApproximation major_arc_approximation_check(const FormSystem& F, std::uint64_t q, std::span<const std::int64_t> a,
                                               std::span<const double> offset, double P, const Box& box)
{
    if (q < 1)
        throw ValidationError("approximation check: q must be positive");
    if (static_cast<double>(q) > P)
        throw ValidationError("approximation check: requires q <= P");
    const int R = F.R();
    if (static_cast<int>(a.size()) != R || static_cast<int>(offset.size()) != R)
        throw ValidationError("approximation check: a and offset must have R entries");
    std::vector<double> alpha(R), gamma(R);
    double on = 0.0;
    const double Pd = std::pow(P, F.degree());
    for (int i = 0; i < R; ++i) {
        alpha[i] = static_cast<double>(a[i]) / static_cast<double>(q) + offset[i];
        gamma[i] = Pd * offset[i];
        on = std::max(on, std::fabs(offset[i]));
    }
    ArcApproximation out;
    out.lhs = exp_sum(F, alpha, P, box);
    const Complex sq = local_sum(F, q, a);
    const Complex si = s_infinity(F, gamma, box).value;
    out.rhs = std::pow(P, F.n()) * sq * si;
    out.residual = std::abs(out.lhs - out.rhs);
    out.normalized = out.residual / (static_cast<double>(q) * std::pow(P, F.n() - 1) * (1.0 + Pd * on));
    return out;
}

// ---------------------------------------------------------------- serialization

json to_json(const ArcParameters& arcs, bool with_centers)
{
    json j{{"P", arcs.P},
           {"Delta", arcs.Delta},
           {"d", arcs.d},
           {"R", arcs.R},
           {"q_max", arcs.q_max},
           {"radius", arcs.radius},
           {"center_count", arcs.centers.size()},
           {"measure_bound", arcs.measure_bound()}};
    if (with_centers) {
        json cs = json::array();
        for (const auto& c : arcs.centers)
            cs.push_back({{"q", c.q}, {"a", c.a}});
        j["centers"] = cs;
    }
    return j;
}

json to_json(const OrthogonalityResult& r)
{
    return {{"count", r.count}, {"raw", r.raw}, {"residual", r.residual}, {"imaginary", r.imaginary}, {"grid", r.grid}};
}

json to_json(const RepulsionReport& r, bool with_samples)
{
    json j{{"P", r.P},
           {"cancellation", r.cancellation},
           {"epsilon", r.epsilon},
           {"seed", r.seed},
           {"sample_count", r.samples.size()},
           {"max_ratio", r.max_ratio}};
    if (with_samples) {
        json s = json::array();
        for (const auto& x : r.samples) {
            json b = std::isinf(x.bound) ? json("inf") : json(x.bound);
            s.push_back({{"alpha", x.alpha}, {"beta", x.beta}, {"value", x.value}, {"bound", b}, {"ratio", x.ratio}});
        }
        j["samples"] = s;
    }
    return j;
}

json to_json(const ArcApproximation& r)
{
    return {{"lhs", {r.lhs.real(), r.lhs.imag()}},
            {"rhs", {r.rhs.real(), r.rhs.imag()}},
            {"residual", r.residual},
            {"normalized", r.normalized}};
}

} // namespace hlc
