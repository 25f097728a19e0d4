#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "csm/errors.hpp"

namespace csm {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double kTolUnitary = 1e-10;
inline constexpr double kTolProjector = 1e-10;

/// Throws ValidationError if any entry is NaN or infinite.
void require_finite(const ComplexMatrix& m, const char* what = "matrix");

/// ‖M†M − 1‖_F ≤ tol. Throws DimensionError for a non-square matrix.
bool is_unitary(const ComplexMatrix& m, double tol = kTolUnitary);

/// Square complex matrix checked for unitarity at construction.
class UnitaryMatrix {
 public:
  explicit UnitaryMatrix(ComplexMatrix m, double tol = kTolUnitary);

  static UnitaryMatrix identity(Eigen::Index n);

  const ComplexMatrix& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }
  Complex operator()(Eigen::Index r, Eigen::Index c) const { return m_(r, c); }

  UnitaryMatrix adjoint() const;

 private:
  struct Trusted {};
  UnitaryMatrix(ComplexMatrix m, Trusted) : m_(std::move(m)) {}

  ComplexMatrix m_;
};

/// Rank-one Hermitian projector.
class Projector {
 public:
  /// Validates hermiticity, idempotence and unit trace.
  explicit Projector(ComplexMatrix m, double tol = kTolProjector);

  const ComplexMatrix& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }

 private:
  friend Projector projector_from_vector(const ComplexVector& v);
  struct Trusted {};
  Projector(ComplexMatrix m, Trusted) : m_(std::move(m)) {}

  ComplexMatrix m_;
};

/// vv†/‖v‖². Throws DegenerateInputError for a zero vector.
Projector projector_from_vector(const ComplexVector& v);

/// A complete set of mutually orthogonal rank-one projectors.
class ProjectorFrame {
 public:
  explicit ProjectorFrame(std::vector<Projector> projectors, double tol = kTolProjector);

  Eigen::Index dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return projectors_.size(); }
  const Projector& operator[](std::size_t i) const { return projectors_.at(i); }
  auto begin() const noexcept { return projectors_.begin(); }
  auto end() const noexcept { return projectors_.end(); }

 private:
  std::vector<Projector> projectors_;
  Eigen::Index dim_ = 0;
};

/// Projector i is (column i)(column i)†.
ProjectorFrame frame_from_unitary(const UnitaryMatrix& u);
/// Validating overload; throws ValidationError when `u` is not unitary.
ProjectorFrame frame_from_unitary(const ComplexMatrix& u);

/// Diagonal matrix with nonnegative real entries.
class DiagonalNonneg {
 public:
  explicit DiagonalNonneg(RealVector values);

  Eigen::Index dim() const noexcept { return values_.size(); }
  const RealVector& values() const noexcept { return values_; }
  ComplexMatrix matrix() const;
  double trace_squared() const { return values_.squaredNorm(); }

 private:
  RealVector values_;
};

struct SvdResult {
  ComplexMatrix left;          // m×m unitary
  RealVector singular_values;  // min(m,n), descending
  ComplexMatrix right;         // n×n unitary

  /// left · diag(σ) · right†
  ComplexMatrix reconstruct() const;
};

/// Singular value decomposition with a reproducible gauge: values descending,
/// ties ordered by descending lexicographic magnitude of the left vectors, and
/// the largest-magnitude entry of each left vector made real positive.
SvdResult svd(const ComplexMatrix& a);

/// Trace of the ordered product m[0]·m[1]·…·m[k−1].
Complex trace_product(std::span<const ComplexMatrix* const> matrices);
Complex trace_product(std::span<const ComplexMatrix> matrices);

template <class... Ms>
Complex trace_of_product(const ComplexMatrix& first, const Ms&... rest) {
  const std::array<const ComplexMatrix*, 1 + sizeof...(Ms)> ptrs{&first, &rest...};
  return trace_product(std::span<const ComplexMatrix* const>(ptrs));
}

// {"rows": n, "cols": m, "re": [[...]], "im": [[...]]}; "im" optional on input.
nlohmann::json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const nlohmann::json& j);

}  // namespace csm
