// Deterministic per-path random streams.
//
// Every path owns independent engines for gaussians, jump structure,
// quadrature marks and thinning decisions, each seeded by a SplitMix64 hash
// of (master seed, path index, stream tag).  Results therefore do not depend
// on how paths are distributed over worker threads.
#pragma once

#include <cstdint>
#include <random>

namespace stochexp {

enum class Stream : std::uint64_t {
  gauss = 0x9a30b7a3f1c4d5e7ull,
  jump = 0x4cf5ad432745937full,
  quad = 0x7b8f02a47d3e911bull,
  thin = 0xd1342543de82ef95ull,
};

// SplitMix64 finalizer; good avalanche, cheap, standard constants.
std::uint64_t splitmix64(std::uint64_t x);

// Stable 64-bit seed for one (master, path, stream) triple.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t path_index,
                          Stream stream);

// Disjoint seed namespace for the measure-changed (Q-side) ensembles, so that
// P- and Q-runs with the same master seed stay independent.
std::uint64_t tilted_namespace(std::uint64_t master);

// Engine for one stream of one path.
std::mt19937_64 make_engine(std::uint64_t master, std::uint64_t path_index,
                            Stream stream);

}  // namespace stochexp
