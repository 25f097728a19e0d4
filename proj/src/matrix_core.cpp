#include "csm/matrix_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace csm {

namespace {

std::string shape(const ComplexMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_square(const ComplexMatrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(what) + " must be square, got " + shape(m));
  }
}

}  // namespace

void require_finite(const ComplexMatrix& m, const char* what) {
  if (!m.allFinite()) {
    throw ValidationError(std::string(what) + " has non-finite entries");
  }
}

bool is_unitary(const ComplexMatrix& m, double tol) {
  require_square(m, "unitarity test operand");
  if (!m.allFinite()) return false;
  const auto n = m.rows();
  return (m.adjoint() * m - ComplexMatrix::Identity(n, n)).norm() <= tol;
}

UnitaryMatrix::UnitaryMatrix(ComplexMatrix m, double tol) : m_(std::move(m)) {
  if (!is_unitary(m_, tol)) {
    const auto n = m_.rows();
    throw ValidationError("matrix is not unitary: ||U^H U - 1||_F = " +
                          std::to_string((m_.adjoint() * m_ - ComplexMatrix::Identity(n, n)).norm()));
  }
}

UnitaryMatrix UnitaryMatrix::identity(Eigen::Index n) {
  return UnitaryMatrix(ComplexMatrix::Identity(n, n), Trusted{});
}

UnitaryMatrix UnitaryMatrix::adjoint() const { return UnitaryMatrix(m_.adjoint(), Trusted{}); }

Projector::Projector(ComplexMatrix m, double tol) : m_(std::move(m)) {
  require_square(m_, "projector");
  require_finite(m_, "projector");
  if ((m_ - m_.adjoint()).norm() > tol) throw ValidationError("projector is not Hermitian");
  if ((m_ * m_ - m_).norm() > tol) throw ValidationError("projector is not idempotent");
  if (std::abs(m_.trace() - Complex(1.0)) > tol) {
    throw ValidationError("projector is not rank one: trace = " + std::to_string(m_.trace().real()));
  }
}

Projector projector_from_vector(const ComplexVector& v) {
  if (!v.allFinite()) throw ValidationError("vector has non-finite entries");
  const double norm2 = v.squaredNorm();
  if (v.size() == 0 || norm2 == 0.0) {
    throw DegenerateInputError("cannot build a projector from a zero vector");
  }
  ComplexMatrix p = v * v.adjoint() / norm2;
  // Exact hermiticity.
  p = (0.5 * (p + p.adjoint())).eval();
  return Projector(std::move(p), Projector::Trusted{});
}

ProjectorFrame::ProjectorFrame(std::vector<Projector> projectors, double tol)
    : projectors_(std::move(projectors)) {
  if (projectors_.empty()) throw DegenerateInputError("projector frame is empty");
  dim_ = projectors_.front().dim();
  for (const auto& p : projectors_) {
    if (p.dim() != dim_) throw DimensionError("projector frame mixes dimensions");
  }
  if (static_cast<Eigen::Index>(projectors_.size()) != dim_) {
    throw ValidationError("projector frame has " + std::to_string(projectors_.size()) +
                          " projectors in dimension " + std::to_string(dim_));
  }
  ComplexMatrix sum = ComplexMatrix::Zero(dim_, dim_);
  for (std::size_t i = 0; i < projectors_.size(); ++i) {
    sum += projectors_[i].matrix();
    for (std::size_t j = i + 1; j < projectors_.size(); ++j) {
      if ((projectors_[i].matrix() * projectors_[j].matrix()).norm() > tol) {
        throw ValidationError("projectors " + std::to_string(i) + " and " + std::to_string(j) +
                              " are not orthogonal");
      }
    }
  }
  if ((sum - ComplexMatrix::Identity(dim_, dim_)).norm() > tol) {
    throw ValidationError("projector frame is not complete");
  }
}

ProjectorFrame frame_from_unitary(const UnitaryMatrix& u) {
  std::vector<Projector> ps;
  ps.reserve(static_cast<std::size_t>(u.dim()));
  for (Eigen::Index i = 0; i < u.dim(); ++i) ps.push_back(projector_from_vector(u.matrix().col(i)));
  return ProjectorFrame(std::move(ps));
}

ProjectorFrame frame_from_unitary(const ComplexMatrix& u) { return frame_from_unitary(UnitaryMatrix(u)); }

DiagonalNonneg::DiagonalNonneg(RealVector values) : values_(std::move(values)) {
  if (!values_.allFinite()) throw ValidationError("diagonal has non-finite entries");
  if ((values_.array() < 0.0).any()) throw ValidationError("diagonal has negative entries");
}

ComplexMatrix DiagonalNonneg::matrix() const {
  return values_.cast<Complex>().asDiagonal();
}

ComplexMatrix SvdResult::reconstruct() const {
  const auto k = singular_values.size();
  return left.leftCols(k) * singular_values.cast<Complex>().asDiagonal() * right.leftCols(k).adjoint();
}

SvdResult svd(const ComplexMatrix& a) {
  require_finite(a, "svd operand");
  if (a.size() == 0) throw DimensionError("svd of an empty matrix");

  Eigen::JacobiSVD<ComplexMatrix> solver(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  ComplexMatrix left = solver.matrixU();
  ComplexMatrix right = solver.matrixV();
  RealVector sigma = solver.singularValues();
  const auto k = sigma.size();

  // Phase gauge: largest-magnitude entry of each left vector real positive.
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    left.col(c).cwiseAbs().maxCoeff(&arg);
    const Complex z = left(arg, c);
    if (std::abs(z) == 0.0) continue;
    const Complex phase = std::conj(z) / std::abs(z);
    left.col(c) *= phase;
    right.col(c) *= phase;
  }

  // Eigen returns values sorted descending; order clusters of equal values.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  const double scale = k > 0 ? std::max(sigma(0), 1.0) : 1.0;
  const double tie = 1e-12 * scale;
  auto lex_greater = [&](Eigen::Index x, Eigen::Index y) {
    for (Eigen::Index r = 0; r < left.rows(); ++r) {
      const double ax = std::abs(left(r, x));
      const double ay = std::abs(left(r, y));
      if (std::abs(ax - ay) > 1e-12) return ax > ay;
    }
    return x < y;
  };
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t stop = start + 1;
    while (stop < order.size() && sigma(order[start]) - sigma(order[stop]) <= tie) ++stop;
    std::sort(order.begin() + static_cast<std::ptrdiff_t>(start),
              order.begin() + static_cast<std::ptrdiff_t>(stop), lex_greater);
    start = stop;
  }

  SvdResult out{left, RealVector(k), right};
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto src = order[static_cast<std::size_t>(c)];
    out.left.col(c) = left.col(src);
    out.right.col(c) = right.col(src);
    out.singular_values(c) = sigma(src);
  }
  return out;
}

Complex trace_product(std::span<const ComplexMatrix* const> matrices) {
  if (matrices.empty()) throw DimensionError("trace of an empty product");
  ComplexMatrix acc = *matrices[0];
  for (std::size_t i = 1; i < matrices.size(); ++i) {
    if (acc.cols() != matrices[i]->rows()) {
      throw DimensionError("cannot multiply " + shape(acc) + " by " + shape(*matrices[i]));
    }
    acc = (acc * *matrices[i]).eval();
  }
  require_square(acc, "product");
  return acc.trace();
}

Complex trace_product(std::span<const ComplexMatrix> matrices) {
  std::vector<const ComplexMatrix*> ptrs;
  ptrs.reserve(matrices.size());
  for (const auto& m : matrices) ptrs.push_back(&m);
  return trace_product(std::span<const ComplexMatrix* const>(ptrs));
}

nlohmann::json matrix_to_json(const ComplexMatrix& m) {
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  bool any_imag = false;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json rr = nlohmann::json::array();
    nlohmann::json ri = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ri.push_back(m(r, c).imag());
      any_imag = any_imag || m(r, c).imag() != 0.0;
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ri));
  }
  nlohmann::json j{{"rows", m.rows()}, {"cols", m.cols()}, {"re", std::move(re)}};
  if (any_imag) j["im"] = std::move(im);
  return j;
}

namespace {

RealMatrix real_block(const nlohmann::json& j, const char* key, Eigen::Index rows, Eigen::Index cols) {
  const auto& a = j.at(key);
  if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != rows) {
    throw ParseError(std::string("\"") + key + "\" must be an array of " + std::to_string(rows) + " rows");
  }
  RealMatrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = a[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ParseError(std::string("\"") + key + "\" row " + std::to_string(r) + " must have " +
                       std::to_string(cols) + " entries");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ParseError(std::string("\"") + key + "\" entries must be numbers");
      out(r, c) = v.get<double>();
    }
  }
  return out;
}

}  // namespace

ComplexMatrix matrix_from_json(const nlohmann::json& j) {
  try {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    if (rows <= 0 || cols <= 0) throw ParseError("matrix dimensions must be positive");
    ComplexMatrix m = real_block(j, "re", rows, cols).cast<Complex>();
    if (j.contains("im")) m += Complex(0.0, 1.0) * real_block(j, "im", rows, cols).cast<Complex>();
    require_finite(m);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("matrix JSON: ") + e.what());
  }
}

}  // namespace csm
