#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "csm/matrix_core.hpp"

namespace csm {

/// Philox4x32-10 applied to a 128-bit (position, stream) counter under a
/// 64-bit key. Output depends only on (seed, stream, position), so streams
/// can be split per restart or per shot and replayed bit-exactly.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : seed_(seed), stream_(stream) {}

  /// Raw Philox4x32-10 block for the given counter and key.
  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Standard normal via Box–Muller.
  double normal() noexcept;
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Independent generator on another stream under the same seed.
  CounterRng split(std::uint64_t stream) const noexcept { return CounterRng(seed_, stream); }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t position() const noexcept { return position_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;  // 32-bit words consumed from block_
};

/// In-place Fisher–Yates shuffle driven by CounterRng.
template <class T>
void shuffle(std::vector<T>& v, CounterRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// diagonal phases of R divided out.
UnitaryMatrix haar_unitary(Eigen::Index n, CounterRng& rng);

/// Uniformly distributed unit vector in C^n.
ComplexVector random_unit_vector(Eigen::Index n, CounterRng& rng);

/// Column-stochastic matrix with i.i.d. Dirichlet(1) columns.
RealMatrix random_column_stochastic(Eigen::Index n, CounterRng& rng);

/// Doubly stochastic matrix as a random convex mixture of `terms` permutations.
RealMatrix random_doubly_stochastic(Eigen::Index n, CounterRng& rng, int terms = 4);

}  // namespace csm
