#include "volfilter/random.hpp"

namespace volfilter {

Seed derive_seed(Seed master, std::string_view tag) noexcept {
  // FNV-1a over the tag, then mixed with the master seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(mix64(master) ^ h);
}

std::vector<double> gaussian_stream(Seed seed, std::size_t n) {
  NormalStream normals(seed);
  std::vector<double> out(n);
  for (auto& x : out) x = normals();
  return out;
}

}  // namespace volfilter
