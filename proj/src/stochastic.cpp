#include "csm/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "csm/random.hpp"

namespace csm {

std::string StochasticViolation::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::not_square: os << "matrix is not square"; break;
    case Kind::non_finite: os << "entry (" << row << "," << col << ") is not finite"; break;
    case Kind::complex_entry:
      os << "entry (" << row << "," << col << ") has imaginary part " << value;
      break;
    case Kind::negative_entry: os << "entry (" << row << "," << col << ") is negative: " << value; break;
    case Kind::entry_above_one: os << "entry (" << row << "," << col << ") exceeds 1: " << value; break;
    case Kind::column_sum: os << "column " << col << " sums to " << value; break;
  }
  return os.str();
}

namespace {

std::string join_violations(const std::vector<StochasticViolation>& vs) {
  std::string out = "not a stochastic matrix: ";
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out += "; ";
    out += vs[i].describe();
  }
  return out;
}

}  // namespace

StochasticityError::StochasticityError(std::vector<StochasticViolation> violations)
    : ValidationError(join_violations(violations)), violations_(std::move(violations)) {}

TransitionMatrix validate_stochastic(const ComplexMatrix& m, double tol) {
  using Kind = StochasticViolation::Kind;
  std::vector<StochasticViolation> bad;
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw StochasticityError({{Kind::not_square, m.rows(), m.cols(), 0.0}});
  }
  const auto n = m.rows();
  RealMatrix p(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const Complex z = m(j, i);
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        bad.push_back({Kind::non_finite, j, i, 0.0});
        p(j, i) = 0.0;
        continue;
      }
      if (std::abs(z.imag()) > tol) bad.push_back({Kind::complex_entry, j, i, z.imag()});
      if (z.real() < -tol) bad.push_back({Kind::negative_entry, j, i, z.real()});
      if (z.real() > 1.0 + tol) bad.push_back({Kind::entry_above_one, j, i, z.real()});
      p(j, i) = std::clamp(z.real(), 0.0, 1.0);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = m.col(i).real().sum();
    if (std::isfinite(s) && std::abs(s - 1.0) > tol) bad.push_back({Kind::column_sum, -1, i, s});
  }
  if (!bad.empty()) throw StochasticityError(std::move(bad));
  return TransitionMatrix(std::move(p));
}

Lemma1Decomposition lemma1_decompose(const TransitionMatrix& pi) {
  const ComplexMatrix a = pi.matrix().cwiseSqrt().cast<Complex>();
  const SvdResult s = svd(a);
  // A = L Σ V†, so A_ji = Σ_k L_jk σ_k conj(V_ik) = <b_j| Σ |a_i> with
  // a_i = column i of V† and b_j = column j of L†.
  return Lemma1Decomposition{
      frame_from_unitary(UnitaryMatrix(s.right.adjoint())),
      frame_from_unitary(UnitaryMatrix(s.left.adjoint())),
      DiagonalNonneg(s.singular_values),
  };
}

RealMatrix lemma1_reconstruct_entries(const Lemma1Decomposition& dec) {
  const auto n = dec.r.dim();
  if (dec.frame_initial.dim() != n || dec.frame_final.dim() != n) {
    throw DimensionError("decomposition frames and r differ in dimension");
  }
  const ComplexMatrix r = dec.r.matrix();
  RealMatrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pi = dec.frame_initial[static_cast<std::size_t>(i)].matrix();
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& pj = dec.frame_final[static_cast<std::size_t>(j)].matrix();
      const Complex t = trace_of_product(pi, r, pj, r);
      if (std::abs(t.imag()) > 1e-12) {
        throw ValidationError("reconstructed entry (" + std::to_string(j) + "," + std::to_string(i) +
                              ") has imaginary part " + std::to_string(t.imag()));
      }
      out(j, i) = t.real();
    }
  }
  return out;
}

TransitionMatrix lemma1_reconstruct(const Lemma1Decomposition& dec) {
  return validate_stochastic(lemma1_reconstruct_entries(dec));
}

ConstraintResiduals constraint_residuals(const Lemma1Decomposition& dec) {
  const auto n = dec.r.dim();
  if (dec.frame_initial.dim() != n) throw DimensionError("decomposition frame and r differ in dimension");
  ConstraintResiduals out;
  out.trace_r2_minus_n = dec.r.trace_squared() - static_cast<double>(n);
  ComplexMatrix shifted = dec.r.matrix() * dec.r.matrix() - ComplexMatrix::Identity(n, n);
  for (const auto& p : dec.frame_initial) {
    out.per_projector.push_back(trace_of_product(p.matrix(), shifted).real());
  }
  return out;
}

double born_probability(const Projector& u, const Projector& v) {
  if (u.dim() != v.dim()) throw DimensionError("projectors differ in dimension");
  // Tr(AB) = Σ A_ab conj(B_ab) for Hermitian B; each term is symmetric in A, B.
  const auto& a = u.matrix();
  const auto& b = v.matrix();
  double t = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      t += a(r, c).real() * b(r, c).real() + a(r, c).imag() * b(r, c).imag();
    }
  }
  return std::clamp(t, 0.0, 1.0);
}

TransitionMatrix unistochastic_from_unitary(const UnitaryMatrix& u) {
  return TransitionMatrix(u.matrix().cwiseAbs2());
}

bool is_doubly_stochastic(const TransitionMatrix& pi, double tol) {
  const RealVector rows = pi.matrix().rowwise().sum();
  return ((rows.array() - 1.0).abs() <= tol).all();
}

const char* to_string(CertifyMethod m) {
  switch (m) {
    case CertifyMethod::exact_3x3: return "exact_3x3";
    case CertifyMethod::phase_optimization: return "phase_optimization";
    case CertifyMethod::construction: return "construction";
  }
  return "?";
}

void CertifyOptions::validate() const {
  if (restarts <= 0) throw PreconditionError("restarts must be positive");
  if (max_iters <= 0) throw PreconditionError("max_iters must be positive");
  if (!(tol_certify > 0.0) || !std::isfinite(tol_certify)) {
    throw PreconditionError("tol_certify must be a positive finite number");
  }
}

namespace {

double unitarity_defect2(const ComplexMatrix& u) {
  const auto n = u.rows();
  return (u.adjoint() * u - ComplexMatrix::Identity(n, n)).squaredNorm();
}

ComplexMatrix with_phases(const RealMatrix& moduli, const RealMatrix& theta) {
  ComplexMatrix u(moduli.rows(), moduli.cols());
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    for (Eigen::Index r = 0; r < u.rows(); ++r) u(r, c) = std::polar(moduli(r, c), theta(r, c));
  }
  return u;
}

// Closest unitary in Frobenius norm (polar factor).
ComplexMatrix nearest_unitary(const ComplexMatrix& m) {
  Eigen::JacobiSVD<ComplexMatrix> s(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return s.matrixU() * s.matrixV().adjoint();
}

double modulus_residual(const ComplexMatrix& u, const TransitionMatrix& pi) {
  return (u.cwiseAbs2() - pi.matrix()).cwiseAbs().maxCoeff();
}

struct DescentOutcome {
  double objective;
  RealMatrix theta;
  int iterations;
};

// Levenberg–Marquardt on the off-diagonal entries of G = U†U − 1 (its
// diagonal is fixed by the moduli). From a random start it lands in the
// global basin far more often than plain gradient descent does.
DescentOutcome levenberg_marquardt(const RealMatrix& moduli, RealMatrix theta, double target, int max_steps) {
  const auto n = moduli.rows();
  const Eigen::Index vars = (n - 1) * (n - 1);
  const Eigen::Index res = n * (n - 1);
  auto residuals = [&](const ComplexMatrix& u) {
    const ComplexMatrix g = u.adjoint() * u;
    RealVector r(res);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index l = i + 1; l < n; ++l) {
        r(k++) = g(i, l).real();
        r(k++) = g(i, l).imag();
      }
    }
    return r;
  };
  auto jacobian = [&](const ComplexMatrix& u) {
    RealMatrix jac = RealMatrix::Zero(res, vars);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index l = i + 1; l < n; ++l, k += 2) {
        // G_il = Σ_j conj(U_ji) U_jl; dU = i U dθ.
        for (Eigen::Index j = 1; j < n; ++j) {
          const Complex term = std::conj(u(j, i)) * u(j, l);
          if (l >= 1) {
            const Complex d = Complex(0.0, 1.0) * term;
            const Eigen::Index v = (j - 1) * (n - 1) + (l - 1);
            jac(k, v) += d.real();
            jac(k + 1, v) += d.imag();
          }
          if (i >= 1) {
            const Complex d = Complex(0.0, -1.0) * term;
            const Eigen::Index v = (j - 1) * (n - 1) + (i - 1);
            jac(k, v) += d.real();
            jac(k + 1, v) += d.imag();
          }
        }
      }
    }
    return jac;
  };
  auto to_theta = [&](const RealVector& x) {
    RealMatrix t = RealMatrix::Zero(n, n);
    for (Eigen::Index j = 1; j < n; ++j)
      for (Eigen::Index l = 1; l < n; ++l) t(j, l) = x((j - 1) * (n - 1) + (l - 1));
    return t;
  };
  RealVector x(vars);
  for (Eigen::Index j = 1; j < n; ++j)
    for (Eigen::Index l = 1; l < n; ++l) x((j - 1) * (n - 1) + (l - 1)) = theta(j, l);

  ComplexMatrix u = with_phases(moduli, to_theta(x));
  double f = unitarity_defect2(u);
  double lambda = 1e-3;
  int step = 0;
  for (; step < max_steps && f > target && lambda < 1e12; ++step) {
    const RealVector r = residuals(u);
    const RealMatrix jac = jacobian(u);
    const RealMatrix jtj = jac.transpose() * jac;
    const RealVector jtr = jac.transpose() * r;
    bool improved = false;
    while (lambda < 1e12) {
      RealMatrix a = jtj;
      a.diagonal().array() += lambda * (1.0 + jtj.diagonal().array());
      const RealVector dx = a.ldlt().solve(-jtr);
      const RealVector trial = x + dx;
      ComplexMatrix ut = with_phases(moduli, to_theta(trial));
      const double ft = unitarity_defect2(ut);
      if (ft < f) {
        x = trial;
        u = std::move(ut);
        f = ft;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) break;
  }
  theta = to_theta(x);
  return {f, std::move(theta), step};
}

}  // namespace

RealMatrix phase_objective_gradient(const ComplexMatrix& u) {
  // f = ‖G‖², G = U†U − 1; df = 4 Re Σ conj((UG)_ji) dU_ji and dU_ji = i U_ji dθ_ji.
  const auto n = u.cols();
  const ComplexMatrix g = u.adjoint() * u - ComplexMatrix::Identity(n, n);
  const ComplexMatrix w = u * g;
  RealMatrix out(u.rows(), u.cols());
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    for (Eigen::Index r = 0; r < u.rows(); ++r) out(r, c) = -4.0 * (std::conj(w(r, c)) * u(r, c)).imag();
  }
  return out;
}

PhaseSearchResult optimize_phases(const TransitionMatrix& pi, const CertifyOptions& opts) {
  opts.validate();
  const auto n = pi.dim();
  const RealMatrix moduli = pi.matrix().cwiseSqrt();
  const double stop_target = opts.tol_certify * opts.tol_certify;
  // Keep descending past the acceptance threshold so the polar projection of
  // the result stays well inside tol_certify.
  // Below ~1e-28 (‖·‖ ≈ 1e-14) the objective is round-off; searching further
  // only burns the budget when tol_certify is set unreachably small.
  const double polish_target = std::max(stop_target * 1e-6, 1e-28);

  PhaseSearchResult best;
  best.objective = std::numeric_limits<double>::infinity();
  const CounterRng root(opts.seed);
  for (int restart = 0; restart < opts.restarts; ++restart) {
    CounterRng rng = root.split(static_cast<std::uint64_t>(restart));
    RealMatrix theta = RealMatrix::Zero(n, n);
    for (Eigen::Index c = 1; c < n; ++c) {
      for (Eigen::Index r = 1; r < n; ++r) theta(r, c) = 2.0 * std::numbers::pi * rng.uniform();
    }
    auto local = [&](RealMatrix start, int budget) {
      return levenberg_marquardt(moduli, std::move(start), polish_target, std::min(budget, 100));
    };
    DescentOutcome d = local(std::move(theta), opts.max_iters);
    int used = std::max(d.iterations, 1);
    // Stuck above the target with budget left: hop to a nearby basin. A run
    // of fruitless hops means this restart has found its floor.
    for (int stale = 0; d.objective > std::max(stop_target, polish_target) && used < opts.max_iters && stale < 20; ++stale) {
      RealMatrix hop = d.theta;
      for (Eigen::Index c = 1; c < n; ++c) {
        for (Eigen::Index r = 1; r < n; ++r) hop(r, c) += rng.normal();
      }
      DescentOutcome h = local(std::move(hop), opts.max_iters - used);
      used += std::max(h.iterations, 1);
      if (h.objective < d.objective * (1.0 - 1e-6)) {
        d = std::move(h);
        stale = -1;
      }
    }
    best.total_iterations += used;
    best.restarts_run = restart + 1;
    if (d.objective < best.objective) {
      best.objective = d.objective;
      best.best = with_phases(moduli, d.theta);
      best.best_restart = restart;
    }
    if (best.objective <= stop_target) break;
  }
  return best;
}

namespace {

bool is_permutation_pattern(const TransitionMatrix& pi) {
  const auto& p = pi.matrix();
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      const double v = p(r, c);
      if (v > kTolStochastic && v < 1.0 - kTolStochastic) return false;
    }
  }
  return true;
}

std::optional<ComplexMatrix> construct_witness(const TransitionMatrix& pi) {
  const auto n = pi.dim();
  const auto& p = pi.matrix();
  if (is_permutation_pattern(pi)) {
    return ComplexMatrix((p.array() > 0.5).cast<double>().matrix().cast<Complex>());
  }
  if (((p.array() - 1.0 / static_cast<double>(n)).abs() <= kTolStochastic).all()) {
    ComplexMatrix f(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) {
        f(r, c) = std::polar(1.0 / std::sqrt(static_cast<double>(n)),
                             2.0 * std::numbers::pi * static_cast<double>(r * c) / static_cast<double>(n));
      }
    }
    return f;
  }
  if (n == 2) {
    const double a = p(0, 0);
    ComplexMatrix u(2, 2);
    u << std::sqrt(a), -std::sqrt(1.0 - a), std::sqrt(1.0 - a), std::sqrt(a);
    return u;
  }
  return std::nullopt;
}

// Phases α_j with Σ_j L_j e^{iα_j} = 0; requires the triangle inequality.
std::array<double, 3> close_triangle(const std::array<double, 3>& len) {
  std::array<int, 3> idx{0, 1, 2};
  std::sort(idx.begin(), idx.end(), [&](int x, int y) { return len[x] > len[y]; });
  const double la = len[idx[0]], lb = len[idx[1]], lc = len[idx[2]];
  std::array<double, 3> phase{0.0, 0.0, 0.0};
  if (lb <= 0.0) return phase;
  const double cos_ab = std::clamp((lc * lc - la * la - lb * lb) / (2.0 * la * lb), -1.0, 1.0);
  const double alpha = std::acos(cos_ab);
  phase[idx[1]] = alpha;
  const Complex rest = -(Complex(la) + std::polar(lb, alpha));
  phase[idx[2]] = std::abs(rest) > 0.0 ? std::arg(rest) : 0.0;
  return phase;
}

ComplexMatrix witness_3x3(const TransitionMatrix& pi) {
  const auto& p = pi.matrix();
  std::array<double, 3> len{};
  for (int j = 0; j < 3; ++j) len[j] = std::sqrt(p(j, 0) * p(j, 1));
  const auto alpha = close_triangle(len);
  Eigen::Vector3cd c0, c1;
  for (int j = 0; j < 3; ++j) {
    c0(j) = std::sqrt(p(j, 0));
    c1(j) = std::polar(std::sqrt(p(j, 1)), alpha[j]);
  }
  // Orthonormal third column of a 3×3 unitary: conj(c0 × c1), bilinear cross
  // product written out (Eigen's complex cross() conjugates its result).
  Eigen::Vector3cd c2;
  for (int j = 0; j < 3; ++j) {
    const int a = (j + 1) % 3, b = (j + 2) % 3;
    c2(j) = std::conj(c0(a) * c1(b) - c0(b) * c1(a));
  }
  ComplexMatrix u(3, 3);
  u.col(0) = c0;
  u.col(1) = c1;
  u.col(2) = c2;
  return u;
}

}  // namespace

bool unistochastic_oracle_3x3(const TransitionMatrix& pi) {
  if (pi.dim() != 3) throw DimensionError("3x3 oracle needs N = 3, got " + std::to_string(pi.dim()));
  if (!is_doubly_stochastic(pi)) throw PreconditionError("3x3 oracle needs a doubly stochastic matrix");
  const auto& p = pi.matrix();
  for (int i = 0; i < 3; ++i) {
    for (int k = i + 1; k < 3; ++k) {
      std::array<double, 3> len{};
      for (int j = 0; j < 3; ++j) len[j] = std::sqrt(p(j, i) * p(j, k));
      const double longest = *std::max_element(len.begin(), len.end());
      const double total = len[0] + len[1] + len[2];
      if (longest > total - longest + 1e-12) return false;
    }
  }
  return true;
}

CertifyResult certify_unistochastic(const TransitionMatrix& pi, const CertifyOptions& opts) {
  opts.validate();
  if (!is_doubly_stochastic(pi)) {
    const RealVector rows = pi.matrix().rowwise().sum();
    Eigen::Index worst = 0;
    (rows.array() - 1.0).abs().maxCoeff(&worst);
    return Refuted{"not doubly stochastic: row " + std::to_string(worst) + " sums to " +
                   std::to_string(rows(worst))};
  }

  auto finish = [&](const ComplexMatrix& raw, CertifyMethod method) -> std::optional<CertifyResult> {
    ComplexMatrix w = is_unitary(raw, 1e-13) ? raw : nearest_unitary(raw);
    const double residual = modulus_residual(w, pi);
    if (residual > opts.tol_certify || !is_unitary(w)) return std::nullopt;
    return UnistochasticCertificate{UnitaryMatrix(std::move(w)), residual, method, opts.seed};
  };

  if (auto built = construct_witness(pi)) {
    if (auto cert = finish(*built, CertifyMethod::construction)) return *cert;
  }

  if (pi.dim() == 3) {
    if (!unistochastic_oracle_3x3(pi)) {
      return Refuted{"3x3 triangle test fails: link lengths for some column pair cannot close"};
    }
    if (auto cert = finish(witness_3x3(pi), CertifyMethod::exact_3x3)) return *cert;
  }

  const PhaseSearchResult search = optimize_phases(pi, opts);
  if (search.objective <= opts.tol_certify * opts.tol_certify) {
    if (auto cert = finish(search.best, CertifyMethod::phase_optimization)) return *cert;
  }
  return NotCertified{std::sqrt(search.objective), search.restarts_run};
}

DensityMatrix::DensityMatrix(ComplexMatrix rho, double tol) : rho_(std::move(rho)) {
  if (rho_.rows() != rho_.cols()) throw DimensionError("density matrix must be square");
  require_finite(rho_, "density matrix");
  if ((rho_ - rho_.adjoint()).norm() > tol) throw ValidationError("density matrix is not Hermitian");
  if (std::abs(rho_.trace() - Complex(1.0)) > tol) throw ValidationError("density matrix trace is not 1");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(rho_, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -tol) {
    throw ValidationError("density matrix is not positive semidefinite: eigenvalue " +
                          std::to_string(eig.eigenvalues().minCoeff()));
  }
}

bool gleason_pure_state_check(const DensityMatrix& rho, const Projector& p, double tol) {
  if (rho.dim() != p.dim()) throw DimensionError("density matrix and projector differ in dimension");
  const double t = trace_of_product(rho.matrix(), p.matrix()).real();
  if (t < 1.0 - tol) {
    std::ostringstream os;
    os.precision(12);
    os << "Tr(rho P) = " << t << " is below 1";
    throw PreconditionError(os.str());
  }
  return (rho.matrix() - p.matrix()).norm() <= 2.0 * std::sqrt(tol);
}

nlohmann::json transition_to_json(const TransitionMatrix& pi) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index j = 0; j < pi.dim(); ++j) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index i = 0; i < pi.dim(); ++i) row.push_back(pi(j, i));
    rows.push_back(std::move(row));
  }
  return {{"n", pi.dim()}, {"convention", "column"}, {"p", std::move(rows)}};
}

TransitionMatrix transition_from_json(const nlohmann::json& j, double tol) {
  try {
    const auto n = j.at("n").get<Eigen::Index>();
    if (n <= 0) throw ParseError("\"n\" must be positive");
    if (j.contains("convention") && j.at("convention").get<std::string>() != "column") {
      throw ParseError("only the \"column\" convention is supported");
    }
    const auto& rows = j.at("p");
    if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != n) {
      throw ParseError("\"p\" must have " + std::to_string(n) + " rows");
    }
    RealMatrix p(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& row = rows[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
        throw ParseError("\"p\" row " + std::to_string(r) + " must have " + std::to_string(n) + " entries");
      }
      for (Eigen::Index c = 0; c < n; ++c) p(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return validate_stochastic(p, tol);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("transition matrix JSON: ") + e.what());
  }
}

nlohmann::json certify_result_to_json(const CertifyResult& r, std::uint64_t seed) {
  nlohmann::json out{{"seed", seed}};
  if (const auto* c = std::get_if<UnistochasticCertificate>(&r)) {
    out["status"] = "certified";
    out["method"] = to_string(c->method);
    out["residual"] = c->residual;
    out["witness"] = matrix_to_json(c->witness.matrix());
  } else if (const auto* n = std::get_if<NotCertified>(&r)) {
    out["status"] = "not_certified";
    out["best_residual"] = n->best_residual;
    out["restarts_run"] = n->restarts_run;
  } else {
    out["status"] = "refuted";
    out["reason"] = std::get<Refuted>(r).reason;
  }
  return out;
}

}  // namespace csm
