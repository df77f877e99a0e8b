#pragma once

#include <numeric>
#include <vector>

#include "hlc/forms.hpp"

namespace hlc {

// Partition of the variables into connected groups: two variables are linked
// when some monomial of some form contains both. Sums, integrals and modular
// counts over a product domain factor across the groups.
template <class Coeff>
struct ComponentSplit {
    std::vector<std::vector<int>> groups;                    // global variable indices
    std::vector<std::vector<Polynomial<Coeff>>> parts;       // [group][form], local variables
    std::vector<Coeff> constants;                            // [form] constant terms
};

template <class Coeff>
ComponentSplit<Coeff> split_components(const std::vector<Polynomial<Coeff>>& forms)
{
    const int n = forms.front().n();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
        while (parent[v] != v)
            v = parent[v] = parent[parent[v]];
        return v;
    };
    for (const auto& f : forms)
        for (const auto& [e, c] : f.terms()) {
            int first = -1;
            for (int j = 0; j < n; ++j)
                if (e[j] > 0) {
                    if (first < 0)
                        first = j;
                    else
                        parent[find(j)] = find(first);
                }
        }
    ComponentSplit<Coeff> out;
    std::vector<int> group_of(n, -1), local_index(n, -1);
    for (int j = 0; j < n; ++j) {
        int root = find(j);
        if (group_of[root] < 0) {
            group_of[root] = static_cast<int>(out.groups.size());
            out.groups.emplace_back();
        }
        int g = group_of[root];
        group_of[j] = g;
        local_index[j] = static_cast<int>(out.groups[g].size());
        out.groups[g].push_back(j);
    }
    out.parts.resize(out.groups.size());
    for (std::size_t g = 0; g < out.groups.size(); ++g)
        for (const auto& f : forms)
            out.parts[g].emplace_back(static_cast<int>(out.groups[g].size()), f.degree());
    out.constants.assign(forms.size(), Coeff(0));
    for (std::size_t i = 0; i < forms.size(); ++i)
        for (const auto& [e, c] : forms[i].terms()) {
            int g = -1;
            for (int j = 0; j < n; ++j)
                if (e[j] > 0) {
                    g = group_of[j];
                    break;
                }
            if (g < 0) {
                out.constants[i] += c;
                continue;
            }
            Exponents local(out.groups[g].size(), 0);
            for (int j = 0; j < n; ++j)
                if (e[j] > 0)
                    local[local_index[j]] = e[j];
            out.parts[g][i].add_term(local, c);
        }
    return out;
}

} // namespace hlc
