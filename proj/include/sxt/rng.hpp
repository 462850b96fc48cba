#pragma once

#include <cstdint>
#include <string_view>

namespace sxt {

// Counter-based deterministic generator. Each (master seed, purpose, index)
// triple names an independent stream, so regenerating one artifact never
// perturbs the draws of another.
class StreamRng {
public:
    StreamRng(uint64_t master_seed, std::string_view purpose, uint64_t index = 0);

    uint64_t next_u64();
    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    double normal();                        // standard normal, Box-Muller
    long long poisson(double lambda);

private:
    uint64_t key_ = 0;
    uint64_t counter_ = 0;
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

// Stable stream-key derivation, exposed for manifest reporting.
uint64_t derive_stream_key(uint64_t master_seed, std::string_view purpose, uint64_t index);

}  // namespace sxt
