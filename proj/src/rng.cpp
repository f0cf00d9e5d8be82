#include "stochexp/rng.hpp"

namespace stochexp {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t path_index,
                          Stream stream) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ (path_index + 0x9e3779b97f4a7c15ull));
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  return h;
}

std::uint64_t tilted_namespace(std::uint64_t master) {
  return splitmix64(master ^ 0x71ac3f0de2b54c69ull);
}

std::mt19937_64 make_engine(std::uint64_t master, std::uint64_t path_index,
                            Stream stream) {
  return std::mt19937_64(derive_seed(master, path_index, stream));
}

}  // namespace stochexp
