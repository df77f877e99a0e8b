#pragma once

#include <string>

// True when fn throws E whose message contains `needle`.
template <class E, class Fn>
bool throws_with(Fn&& fn, const std::string& needle = "")
{
    try {
        fn();
    } catch (const E& e) {
        return std::string(e.what()).find(needle) != std::string::npos;
    } catch (...) {
        return false;
    }
    return false;
}
