#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace subrank {

using Rng = std::mt19937_64;

/// Named sub-seed derived from the global seed ("split", "sampling",
/// "init", "shuffle", ...). Distinct names give independent streams.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view name) noexcept;

}  // namespace subrank
