#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "hlc/forms.hpp"

namespace hlc {

// Default enumeration budget: $HLC_BUDGET if set, else 2e9 evaluated points.
std::uint64_t default_budget();

enum class CountMethod { naive, meet_in_middle, automatic };
std::string to_string(CountMethod m);
CountMethod count_method_from_string(const std::string& s);

struct CountRequest {
    FormSystem system;
    Box box;
    double P = 1.0;
    CountMethod method = CountMethod::automatic;
    std::uint64_t budget = default_budget();
    unsigned workers = 0;  // 0 = hardware concurrency
};

struct CountResult {
    std::uint64_t count = 0;
    CountMethod method = CountMethod::naive;  // method actually used
    std::uint64_t work = 0;                   // evaluated points or hash probes
    std::string note;
};

// #{x in Z^n : a_i <= x_i / P <= b_i, f_1(x) = ... = f_R(x) = 0}, closed box.
CountResult count_naive(const CountRequest& req);
// Same count through a hash join over a split of the variables (d = 2 only).
CountResult count_meet_in_middle(const CountRequest& req);
CountResult count_solutions(const CountRequest& req);

enum class ModMethod { plain, plain_no_recursion, convolution, automatic };

struct ModularCountRequest {
    FormSystem system;
    unsigned long p = 2;
    int k = 1;
    std::uint64_t budget = default_budget();
    ModMethod method = ModMethod::automatic;
    // Optional restriction b == residues (mod p^class_exponent).
    int class_exponent = 0;
    std::vector<std::int64_t> residues;
};

// #{b in (Z/p^k)^n : f_i(b) == 0 mod p^k for all i}.
mpz_class count_mod(const ModularCountRequest& req);

bool is_prime(unsigned long p);

nlohmann::json to_json(const CountRequest& req, const CountResult& res);

} // namespace hlc
