#include "agentdiff/rng.hpp"

#include "agentdiff/text.hpp"

namespace agentdiff {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  return derive_seed(seed, text::fnv1a(tag));
}

}  // namespace agentdiff
