#include "csm/random.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace csm {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> CounterRng::philox(std::array<std::uint32_t, 4> ctr,
                                                std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::uint64_t CounterRng::next_u64() noexcept {
  if (used_ >= 4) {
    block_ = philox({static_cast<std::uint32_t>(position_), static_cast<std::uint32_t>(position_ >> 32),
                     static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                    {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
    ++position_;
    used_ = 0;
  }
  const std::uint64_t out = (static_cast<std::uint64_t>(block_[used_]) << 32) | block_[used_ + 1];
  used_ += 2;
  return out;
}

double CounterRng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::normal() noexcept {
  // 1 - u keeps the logarithm finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterRng::below(std::uint64_t n) noexcept {
  // Rejection on the top of the range removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

UnitaryMatrix haar_unitary(Eigen::Index n, CounterRng& rng) {
  ComplexMatrix z(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const double re = rng.normal();
      const double im = rng.normal();
      z(r, c) = Complex(re, im) * (1.0 / std::numbers::sqrt2);
    }
  }
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix& r = qr.matrixQR();
  for (Eigen::Index c = 0; c < n; ++c) {
    const Complex d = r(c, c);
    const double a = std::abs(d);
    if (a > 0.0) q.col(c) *= d / a;
  }
  return UnitaryMatrix(std::move(q));
}

ComplexVector random_unit_vector(Eigen::Index n, CounterRng& rng) {
  ComplexVector v(n);
  do {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      v(i) = Complex(re, im);
    }
  } while (v.norm() == 0.0);
  return v / v.norm();
}

RealMatrix random_column_stochastic(Eigen::Index n, CounterRng& rng) {
  RealMatrix m(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) m(r, c) = -std::log(1.0 - rng.uniform());
    m.col(c) /= m.col(c).sum();
  }
  return m;
}

RealMatrix random_doubly_stochastic(Eigen::Index n, CounterRng& rng, int terms) {
  RealMatrix m = RealMatrix::Zero(n, n);
  std::vector<double> weights(static_cast<std::size_t>(terms));
  double total = 0.0;
  for (auto& w : weights) total += (w = -std::log(1.0 - rng.uniform()));
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (double w : weights) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    shuffle(perm, rng);
    for (Eigen::Index c = 0; c < n; ++c) m(perm[static_cast<std::size_t>(c)], c) += w / total;
  }
  return m;
}

}  // namespace csm
