#include "hlc/parallel.hpp"

#include <cstdlib>
#include <string>

namespace hlc {

unsigned default_workers()
{
    if (const char* env = std::getenv("HLC_WORKERS")) {
        int v = std::atoi(env);
        if (v > 0)
            return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

} // namespace hlc
